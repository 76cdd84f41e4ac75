use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::sweep::ConvergenceReport;
use crate::error::{Error, Result};
use crate::norming::fmt_f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_owned(), source }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(bytes).map_err(io_err(path))
}

/// Renders a header plus one row per height; first column is `N`.
fn csv_table(ns: &[usize], columns: &[(&str, &[f64])]) -> String {
    let mut out = String::from("N");
    for (name, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, n) in ns.iter().enumerate() {
        out.push_str(&n.to_string());
        for (_, values) in columns {
            out.push(',');
            out.push_str(&fmt_f64(values[i]));
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct Summary<'a> {
    n_schedule: &'a [usize],
    c0_slope: Option<f64>,
    q_slope: Option<f64>,
    boundary_q_slope: Option<f64>,
    final_c0_err: f64,
    final_c2_err_rho: f64,
    final_c2_err_tt: f64,
    final_c2_err_mixed: f64,
    final_q_err: f64,
    final_boundary_q_err: f64,
}

/// Writes the report into `dir` and returns the created paths.
///
/// `Csv` writes `c0.csv`, `c2.csv`, `q.csv`, `szego.csv`; `Json` writes
/// `report.json`. Both add `summary.json`.
pub fn emit_report(report: &ConvergenceReport, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let ns = &report.n_schedule;
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    match format {
        ReportFormat::Csv => {
            let c0_corrected: Vec<f64> = report
                .c0_err
                .iter()
                .zip(ns)
                .map(|(e, &n)| e * n as f64 / (n as f64).ln())
                .collect();
            files.push((
                dir.join("c0.csv"),
                csv_table(ns, &[("c0_err", &report.c0_err), ("c0_log_corrected", &c0_corrected)]),
            ));
            files.push((
                dir.join("c2.csv"),
                csv_table(
                    ns,
                    &[
                        ("c2_err_rho", &report.c2_err_rho),
                        ("c2_err_tt", &report.c2_err_tt),
                        ("c2_err_mixed", &report.c2_err_mixed),
                    ],
                ),
            ));
            files.push((
                dir.join("q.csv"),
                csv_table(
                    ns,
                    &[
                        ("q_err", &report.q_err),
                        ("q_err_interior", &report.q_err_interior),
                        ("boundary_q_err", &report.boundary_q_err),
                        ("r_min", &report.r_min),
                        ("r_max", &report.r_max),
                    ],
                ),
            ));
            files.push((dir.join("szego.csv"), csv_table(ns, &[("szego_gap", &report.szego_gap)])));
        }
        ReportFormat::Json => {
            let text = serde_json::to_string_pretty(report).expect("report serializes") + "\n";
            files.push((dir.join("report.json"), text));
        }
    }
    let last = |v: &[f64]| v.last().copied().unwrap_or(f64::NAN);
    let rates = &report.fitted_rates;
    let summary = Summary {
        n_schedule: ns,
        c0_slope: rates.c0.as_ref().map(|r| r.slope),
        q_slope: rates.q.as_ref().map(|r| r.slope),
        boundary_q_slope: rates.boundary_q.as_ref().map(|r| r.slope),
        final_c0_err: last(&report.c0_err),
        final_c2_err_rho: last(&report.c2_err_rho),
        final_c2_err_tt: last(&report.c2_err_tt),
        final_c2_err_mixed: last(&report.c2_err_mixed),
        final_q_err: last(&report.q_err),
        final_boundary_q_err: last(&report.boundary_q_err),
    };
    files.push((
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
    ));

    let mut written = Vec::with_capacity(files.len());
    for (path, text) in files {
        write_file(&path, text.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

/// Parses a numeric CSV written by this crate, skipping `#` comment lines.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Config(format!("{} is empty", path.display())))?
        .split(',')
        .map(str::to_owned)
        .collect();
    let rows = lines
        .map(|line| {
            line.split(',')
                .map(|cell| {
                    cell.parse::<f64>()
                        .map_err(|e| Error::Config(format!("{}: bad cell {cell:?}: {e}", path.display())))
                })
                .collect()
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok((header, rows))
}
