//! `ebv-bench`: sweep the sequential and EbV-parallel solvers and print a
//! speedup table.
//!
//! Exit codes: 0 on full success, 1 if any row errored, 2 on configuration
//! problems.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::Parser;

use ebv_bench::{available_workers, emit_report, run_bench, BenchConfig, OutputFormat};
use ebv_core::MatrixKind;

#[derive(Parser, Debug)]
#[command(
    name = "ebv-bench",
    about = "Benchmark the equal bi-vectorized parallel LU solver",
    version
)]
struct Cli {
    /// Matrix sizes to sweep
    #[arg(long, value_delimiter = ',', default_value = "256,512,1024,2048")]
    sizes: Vec<usize>,

    /// Matrix kind: dense or sparse
    #[arg(long, default_value = "dense", value_parser = MatrixKind::from_str)]
    kind: MatrixKind,

    /// Off-diagonal fill fraction for sparse generation
    #[arg(long, default_value_t = 1.0)]
    density: f64,

    /// Generator seeds; rows collapse over seeds by median
    #[arg(long, value_delimiter = ',', default_value = "42")]
    seeds: Vec<u64>,

    /// Worker counts to sweep; defaults to the machine's parallelism
    #[arg(long, value_delimiter = ',')]
    workers: Option<Vec<usize>>,

    /// Timing repetitions per measurement (median is reported)
    #[arg(long, default_value_t = 5)]
    reps: usize,

    /// Output format: csv or md
    #[arg(long, default_value = "csv", value_parser = OutputFormat::from_str)]
    format: OutputFormat,

    /// Verify each row's residual against 1e-9 * n * ||A||_inf
    #[arg(long)]
    check: bool,

    /// Write the report here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,

    /// Solve a Matrix Market system instead of generated ones
    #[arg(long)]
    matrix: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = BenchConfig {
        sizes: cli.sizes,
        kind: cli.kind,
        density: cli.density,
        seeds: cli.seeds,
        workers: cli.workers.unwrap_or_else(|| vec![available_workers()]),
        repetitions: cli.reps,
        format: cli.format,
        check: cli.check,
        matrix_path: cli.matrix,
    };

    let report = match run_bench(&cfg) {
        Ok(report) => report,
        Err(e) => {
            eprintln!("ebv-bench: {e}");
            return ExitCode::from(2);
        }
    };

    let text = emit_report(&report, cfg.format);
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("ebv-bench: cannot write `{}`: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }

    if report.has_errors() {
        for row in report.rows.iter().filter(|r| r.error.is_some()) {
            eprintln!(
                "ebv-bench: row (n={}, W={}) failed: {}",
                row.size,
                row.workers,
                row.error.as_deref().unwrap_or("")
            );
        }
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
