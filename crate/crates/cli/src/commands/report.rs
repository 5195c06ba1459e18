//! Report comparison with per-cell tolerances.

use anyhow::Result;
use std::path::Path;

use crate::commands::NumericFailure;
use crate::config::CompareConfig;
use crate::csvio::{compare_tables, Table};

pub fn compare(config: &CompareConfig, out_dir: &Path) -> Result<Vec<String>> {
    let a = Table::read(Path::new(&config.a))?;
    let b = Table::read(Path::new(&config.b))?;
    let outcome = compare_tables(
        &a,
        &b,
        config.tol_abs,
        config.tol_rel,
        config.se_column.as_deref(),
        config.se_factor,
    )?;
    outcome.diff.write(&out_dir.join("diff.csv"))?;
    let mut summary = Table::new(&["cells", "failures"]);
    summary.push(vec![
        outcome.cells.to_string(),
        outcome.failures.to_string(),
    ]);
    summary.write(&out_dir.join("summary.csv"))?;
    println!(
        "compared {} cells: {} failures",
        outcome.cells, outcome.failures
    );
    if outcome.failures > 0 {
        return Err(NumericFailure(format!(
            "{} of {} cells exceeded tolerances (see {}/diff.csv)",
            outcome.failures,
            outcome.cells,
            out_dir.display()
        ))
        .into());
    }
    Ok(vec!["diff.csv".into(), "summary.csv".into()])
}
