//! Artifact writers. Numbers in CSV use 17 significant digits so every value
//! parses back to the same `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use custctl_core::{ComparisonTable, SolveResult};
use serde::Serialize;
use serde_json::json;

use crate::config::{Format, RunConfig};

pub const TRAJECTORY_HEADER: [&str; 11] = [
    "t", "R", "C", "P", "u1", "u2", "p1", "p2", "p3", "phi1", "phi2",
];
pub const TABLE_HEADER: [&str; 5] = ["param_value", "strategy", "cost", "converged", "iterations"];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// One row per grid node, in header order.
pub fn trajectory_rows(res: &SolveResult) -> Vec<[f64; 11]> {
    res.state
        .iter()
        .zip(&res.costate.values)
        .zip(&res.controls.values)
        .zip(&res.switching)
        .map(|((((t, x), p), u), phi)| {
            [
                t, x.r, x.c, x.p, u.u1, u.u2, p.p1, p.p2, p.p3, phi.phi1, phi.phi2,
            ]
        })
        .collect()
}

pub fn trajectory_csv(res: &SolveResult) -> String {
    let mut out = TRAJECTORY_HEADER.join(",");
    out.push('\n');
    for row in trajectory_rows(res) {
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn trajectory_json(res: &SolveResult) -> Result<String> {
    let value = json!({
        "columns": TRAJECTORY_HEADER,
        "rows": trajectory_rows(res),
    });
    Ok(serde_json::to_string_pretty(&value)?)
}

#[derive(Serialize)]
struct Summary<'a> {
    cost: f64,
    iterations: usize,
    converged: bool,
    singular_nodes: usize,
    non_extremal_fraction: f64,
    config: &'a RunConfig,
}

pub fn summary_json(res: &SolveResult, echo: &RunConfig) -> Result<String> {
    let summary = Summary {
        cost: res.cost,
        iterations: res.iterations,
        converged: res.converged,
        singular_nodes: res.singular_flags.iter().filter(|&&f| f).count(),
        non_extremal_fraction: res.non_extremal_fraction,
        config: echo,
    };
    Ok(serde_json::to_string_pretty(&summary)?)
}

pub fn table_csv(table: &ComparisonTable) -> String {
    let mut out = TABLE_HEADER.join(",");
    out.push('\n');
    for row in &table.rows {
        let param = row.param_value.map(fmt_f64).unwrap_or_default();
        let _ = writeln!(
            out,
            "{param},{},{},{},{}",
            row.strategy.key(),
            fmt_f64(row.cost),
            row.converged,
            row.iterations
        );
    }
    out
}

#[derive(Serialize)]
struct RowOut<'a> {
    param_value: Option<f64>,
    strategy: &'a str,
    /// `null` when the cell failed.
    cost: Option<f64>,
    converged: bool,
    iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
}

pub fn table_json(table: &ComparisonTable, echo: &RunConfig) -> Result<String> {
    let rows: Vec<RowOut> = table
        .rows
        .iter()
        .map(|r| RowOut {
            param_value: r.param_value,
            strategy: r.strategy.key(),
            cost: r.cost.is_finite().then_some(r.cost),
            converged: r.converged,
            iterations: r.iterations,
            error: r.error.as_deref(),
        })
        .collect();
    let value = json!({
        "parameter": table.parameter.map(|p| p.key()),
        "rows": rows,
        "config": echo,
    });
    Ok(serde_json::to_string_pretty(&value)?)
}

fn write(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn write_solve(
    dir: &Path,
    format: Format,
    res: &SolveResult,
    echo: &RunConfig,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let table = match format {
        Format::Csv => write(dir, "trajectory.csv", &trajectory_csv(res))?,
        Format::Json => write(dir, "trajectory.json", &trajectory_json(res)?)?,
    };
    let summary = write(dir, "summary.json", &summary_json(res, echo)?)?;
    Ok(vec![table, summary])
}

/// CSV output also gets a JSON mirror.
pub fn write_table(
    dir: &Path,
    stem: &str,
    format: Format,
    table: &ComparisonTable,
    echo: &RunConfig,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    if format == Format::Csv {
        written.push(write(dir, &format!("{stem}.csv"), &table_csv(table))?);
    }
    written.push(write(
        dir,
        &format!("{stem}.json"),
        &table_json(table, echo)?,
    )?);
    Ok(written)
}
