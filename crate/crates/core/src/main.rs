use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use toric_bergman::error::{Error, Result};
use toric_bergman::geodesics::GeodesicSample;
use toric_bergman::lab::{emit_report, evaluate_geodesic, run_convergence, ExperimentConfig, ReportFormat};
use toric_bergman::norming::{fmt_f64, TableCache};
use toric_bergman::quadrature::LaplaceOptions;

#[derive(Parser)]
#[command(name = "toric-bergman", version, about = "Bergman approximation of toric Monge-Ampere geodesics on CP^1")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (flat key = value file); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overriding the config's output_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; 0 picks the number of cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[arg(long, global = true, value_enum, default_value_t = ReportFormat::Csv)]
    format: ReportFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Check both endpoint metrics and print their convexity margins.
    Validate,
    /// Write norming tables for every N in the schedule.
    Norming,
    /// Evaluate u_N, phi_N and derivatives on the (t, rho) grid.
    Geodesic,
    /// Run the convergence sweep and write the report.
    Converge,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_owned(), source })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_owned(), source })
}

fn run(cli: &Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    let out = cfg.output_dir.clone();
    let cache = TableCache::new(LaplaceOptions { rel_tol: cfg.tolerances.quadrature });

    match cli.command {
        Command::Validate => {
            let family = cfg.family()?;
            for (name, m) in [("f0", &family.m0), ("f1", &family.m1)] {
                println!(
                    "{name}: valid margin={} grid_minimum={} grid_resolution={}",
                    m.convexity_margin, m.grid_minimum, m.grid_resolution
                );
            }
        }
        Command::Norming => {
            let family = cfg.family()?;
            create_dir(&out)?;
            for &n in &cfg.n_schedule {
                for (name, m) in [("f0", &family.m0), ("f1", &family.m1)] {
                    let table = cache.get(m, n)?;
                    let path = out.join(format!("norming_{name}_N{n}.csv"));
                    let mut buf = Vec::new();
                    table.write_csv(&mut buf).expect("writing to a Vec cannot fail");
                    std::fs::write(&path, buf).map_err(|source| Error::Io { path: path.clone(), source })?;
                    println!("{}", path.display());
                }
            }
        }
        Command::Geodesic => {
            create_dir(&out)?;
            for &n in &cfg.n_schedule {
                let rows = evaluate_geodesic(&cfg, &cache, n)?;
                let mut text = String::from(GeodesicSample::CSV_HEADER);
                text.push('\n');
                for row in rows {
                    let cells: Vec<String> = row.fields().iter().map(|v| fmt_f64(*v)).collect();
                    text.push_str(&cells.join(","));
                    text.push('\n');
                }
                let path = out.join(format!("geodesic_N{n}.csv"));
                write_text(&path, &text)?;
                println!("{}", path.display());
            }
        }
        Command::Converge => {
            let report = run_convergence(&cfg)?;
            for path in emit_report(&report, &out, cli.format)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build();
    let result = match pool {
        Ok(pool) => pool.install(|| run(&cli)),
        Err(e) => Err(Error::Config(format!("thread pool: {e}"))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
