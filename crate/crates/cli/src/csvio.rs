//! CSV reading/writing with round-trip-exact numeric formatting, dataset
//! persistence, and tolerance-based report comparison.

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

use oversight_core::datagen::{Dataset, Scaler};

/// 17 significant digits: round-trip exact for f64, byte-stable across runs.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// A rectangular CSV table of preformatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| (*s).into()).collect(),
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "ragged CSV row");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).with_context(|| format!("writing {path:?}"))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {path:?}"))?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .with_context(|| format!("{path:?} is empty"))?
            .split(',')
            .map(Into::into)
            .collect::<Vec<String>>();
        let mut rows = vec![];
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let row: Vec<String> = line.split(',').map(Into::into).collect();
            if row.len() != header.len() {
                bail!("{path:?} row {} has {} cells, header has {}", i + 2, row.len(), header.len());
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Sidecar metadata persisted next to each dataset CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub columns: Vec<String>,
    pub n_rows: usize,
    pub seed: u64,
    pub config_sha256: String,
    pub scaler_means: Option<Vec<f64>>,
    pub scaler_sds: Option<Vec<f64>>,
}

pub fn write_dataset(dir: &Path, name: &str, data: &Dataset, seed: u64, config_sha: &str) -> Result<()> {
    let mut table = Table {
        header: data
            .column_names
            .iter()
            .cloned()
            .chain(["y".into(), "minority".into(), "subprime".into()])
            .collect(),
        rows: Vec::with_capacity(data.n_rows()),
    };
    for i in 0..data.n_rows() {
        let mut row = Vec::with_capacity(data.n_cols() + 3);
        for j in 0..data.n_cols() {
            row.push(fmt_f64(data.x[(i, j)]));
        }
        row.push(if data.y[i] > 0.5 { "1".into() } else { "0".into() });
        row.push(if data.minority[i] { "1".into() } else { "0".into() });
        row.push(if data.subprime[i] { "1".into() } else { "0".into() });
        table.rows.push(row);
    }
    table.write(&dir.join(format!("{name}.csv")))?;
    let sidecar = DatasetSidecar {
        columns: data.column_names.clone(),
        n_rows: data.n_rows(),
        seed,
        config_sha256: config_sha.into(),
        scaler_means: data.scaler_from_raw.as_ref().map(|s| s.means.clone()),
        scaler_sds: data.scaler_from_raw.as_ref().map(|s| s.sds.clone()),
    };
    let json = serde_json::to_string_pretty(&sidecar)?;
    std::fs::write(dir.join(format!("{name}.meta.json")), json)?;
    Ok(())
}

pub fn read_dataset(csv_path: &Path) -> Result<Dataset> {
    let table = Table::read(csv_path)?;
    let ncols_total = table.header.len();
    if ncols_total < 4 {
        bail!("{csv_path:?}: dataset needs covariates plus y/minority/subprime");
    }
    let d = ncols_total - 3;
    if table.header[d] != "y" || table.header[d + 1] != "minority" || table.header[d + 2] != "subprime"
    {
        bail!("{csv_path:?}: trailing columns must be y,minority,subprime");
    }
    let n = table.rows.len();
    let mut x = DMatrix::zeros(n, d);
    let mut y = Vec::with_capacity(n);
    let mut minority = Vec::with_capacity(n);
    let mut subprime = Vec::with_capacity(n);
    for (i, row) in table.rows.iter().enumerate() {
        for j in 0..d {
            x[(i, j)] = row[j]
                .parse::<f64>()
                .with_context(|| format!("{csv_path:?} row {} col {}", i + 2, j))?;
        }
        y.push(row[d].parse::<f64>()?);
        minority.push(row[d + 1].trim() == "1");
        subprime.push(row[d + 2].trim() == "1");
    }
    let mut data = Dataset {
        x,
        y,
        minority,
        subprime,
        column_names: table.header[..d].to_vec(),
        scaler_from_raw: None,
    };
    let meta_path = csv_path.with_extension("").with_extension("meta.json");
    let meta_path = if meta_path.exists() {
        meta_path
    } else {
        csv_path.with_file_name(format!(
            "{}.meta.json",
            csv_path.file_stem().and_then(|s| s.to_str()).unwrap_or("data")
        ))
    };
    if meta_path.exists() {
        let sidecar: DatasetSidecar = serde_json::from_str(&std::fs::read_to_string(&meta_path)?)?;
        if let (Some(means), Some(sds)) = (sidecar.scaler_means, sidecar.scaler_sds) {
            data.scaler_from_raw = Some(Scaler { means, sds });
        }
    }
    Ok(data)
}

/// Outcome of a tolerance comparison between two tables.
#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub diff: Table,
    pub failures: usize,
    pub cells: usize,
}

/// Cell-by-cell comparison: numeric cells pass when
/// `|a - b| <= tol_abs + tol_rel * max(|a|, |b|) + se_factor * se_b(row)`;
/// other cells must match exactly. Schemas (headers, row counts) must agree.
pub fn compare_tables(
    a: &Table,
    b: &Table,
    tol_abs: f64,
    tol_rel: f64,
    se_column: Option<&str>,
    se_factor: f64,
) -> Result<CompareOutcome> {
    if a.header != b.header {
        bail!("schema mismatch: headers differ ({:?} vs {:?})", a.header, b.header);
    }
    if a.rows.len() != b.rows.len() {
        bail!(
            "schema mismatch: row counts differ ({} vs {})",
            a.rows.len(),
            b.rows.len()
        );
    }
    let se_idx = match se_column {
        Some(name) => Some(
            b.column_index(name)
                .with_context(|| format!("standard-error column {name:?} missing"))?,
        ),
        None => None,
    };
    let mut diff = Table::new(&["row", "column", "a", "b", "abs_diff", "allowed", "pass"]);
    let mut failures = 0;
    let mut cells = 0;
    for (ri, (ra, rb)) in a.rows.iter().zip(&b.rows).enumerate() {
        let se_b = se_idx
            .and_then(|i| rb[i].parse::<f64>().ok())
            .unwrap_or(0.0);
        for (ci, (ca, cb)) in ra.iter().zip(rb).enumerate() {
            cells += 1;
            let numeric = ca.parse::<f64>().ok().zip(cb.parse::<f64>().ok());
            let (abs_diff, allowed, pass) = match numeric {
                Some((va, vb)) => {
                    let adiff = (va - vb).abs();
                    let allowed = tol_abs + tol_rel * va.abs().max(vb.abs()) + se_factor * se_b;
                    (adiff, allowed, adiff <= allowed)
                }
                None => {
                    let pass = ca == cb;
                    (f64::NAN, 0.0, pass)
                }
            };
            if !pass {
                failures += 1;
            }
            let mut abs_s = String::new();
            if abs_diff.is_nan() {
                abs_s.push('-');
            } else {
                let _ = write!(abs_s, "{}", fmt_f64(abs_diff));
            }
            diff.push(vec![
                (ri + 1).to_string(),
                a.header[ci].clone(),
                ca.clone(),
                cb.clone(),
                abs_s,
                fmt_f64(allowed),
                if pass { "1".into() } else { "0".into() },
            ]);
        }
    }
    Ok(CompareOutcome {
        diff,
        failures,
        cells,
    })
}
