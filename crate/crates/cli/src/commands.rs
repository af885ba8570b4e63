//! The `simulate` and `fit` subcommands.

use std::path::Path;

use rfi_core::{fit_ols_table, sample_scm, scm, Dataset, LinearModel, ScmGraph, Table};

use crate::config::Diagnostic;
use crate::error::CliError;

/// Reads a graph file, or a bundled graph by name when no such file exists.
pub fn load_graph(spec: &str) -> Result<ScmGraph, CliError> {
    let path = Path::new(spec);
    if !path.exists() {
        if let Some(g) = scm::builtin(spec) {
            return Ok(g);
        }
    }
    if !path.exists() {
        return Err(CliError::Config(vec![Diagnostic::new(
            "graph",
            format!("`{spec}` is neither a file nor a bundled graph"),
        )]));
    }
    Ok(ScmGraph::from_path(path)?)
}

/// Samples `n` rows from the graph and writes them as CSV.
pub fn simulate(graph: &str, n: usize, seed: u64, out: &Path) -> Result<Table, CliError> {
    let g = load_graph(graph)?;
    let table = sample_scm(&g, n, seed)?;
    let file = std::fs::File::create(out).map_err(|source| CliError::Io {
        path: out.display().to_string(),
        source,
    })?;
    table.write_csv(std::io::BufWriter::new(file))?;
    Ok(table)
}

/// Fits OLS of `target` on `features` and saves the model as TOML. With a
/// split column only its training rows are used.
pub fn fit(
    csv: &Path,
    target: &str,
    features: &[String],
    split_column: Option<&str>,
    out: &Path,
) -> Result<LinearModel, CliError> {
    let table = Table::from_csv_path(csv)?;
    let rows = match split_column {
        Some(col) => Dataset::with_split_column(table, target, col)?.train(),
        None => table,
    };
    let model = fit_ols_table(&rows, features, target)?;
    model.save(out)?;
    Ok(model)
}
