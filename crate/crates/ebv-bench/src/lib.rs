//! Benchmark harness for the EbV solver.
//!
//! Generates (or loads) diagonally dominant systems, times the sequential
//! solver and the parallel executor across sizes and worker counts, checks
//! residuals, and renders the results as CSV or a markdown table. The right
//! hand side is always `b = A * ones`, so the exact solution is known and
//! both the residual and the forward error are measurable.
//!
//! Timings use a monotonic clock and the lower median over the configured
//! repetitions; with several seeds, the per-seed medians are collapsed by
//! another median. All non-timing fields of a report are reproducible from
//! the configuration alone.

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use ebv_core::{
    effective_workers, factorize_par, generate, load_matrix_market, residual_inf, solve_par,
    solve_seq, DenseMatrix, EbvPlan, ExecConfig, ExecError, LuError, MatrixError, MatrixKind,
    PivotPolicy, Vector,
};

/// Sweeps whose largest system would outgrow this estimate are refused.
const MEMORY_LIMIT_BYTES: u64 = 16 << 30;

/// Exact CSV column header.
pub const CSV_HEADER: &str = "size,kind,workers,t_seq_s,t_par_s,speedup,residual,madds";

/// Residual acceptance bound used by `--check`.
pub fn residual_bound(n: usize, inf_norm: f64) -> f64 {
    1e-9 * n as f64 * inf_norm
}

/// Worker count the machine offers.
pub fn available_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Markdown,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "md" => Ok(OutputFormat::Markdown),
            other => Err(format!("unknown format `{other}` (csv|md)")),
        }
    }
}

/// Error type for configuration and input problems; solver failures inside
/// the sweep become per-row markers instead.
#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("size {n} needs about {required} bytes of matrix storage, over the {limit} byte limit")]
    MemoryLimit { n: usize, required: u64, limit: u64 },
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse `{path}`: {source}")]
    Load {
        path: String,
        source: MatrixError,
    },
}

/// Sweep description, mirroring the CLI flags.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub kind: MatrixKind,
    pub density: f64,
    pub seeds: Vec<u64>,
    pub workers: Vec<usize>,
    pub repetitions: usize,
    pub format: OutputFormat,
    pub check: bool,
    /// Matrix Market file that replaces generation.
    pub matrix_path: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: vec![256, 512, 1024, 2048],
            kind: MatrixKind::Dense,
            density: 1.0,
            seeds: vec![42],
            workers: vec![available_workers()],
            repetitions: 5,
            format: OutputFormat::Csv,
            check: false,
            matrix_path: None,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.matrix_path.is_none() {
            if self.sizes.is_empty() {
                return Err(BenchError::Config("at least one size is required".into()));
            }
            if let Some(&n) = self.sizes.iter().find(|&&n| n < 2) {
                return Err(BenchError::Config(format!("sizes must be >= 2, got {n}")));
            }
            if !(self.density > 0.0 && self.density <= 1.0) {
                return Err(BenchError::Config(format!(
                    "density must be in (0, 1], got {}",
                    self.density
                )));
            }
            if self.kind == MatrixKind::Dense && self.density != 1.0 {
                return Err(BenchError::Config(
                    "dense sweeps require density = 1".into(),
                ));
            }
            if self.seeds.is_empty() {
                return Err(BenchError::Config("at least one seed is required".into()));
            }
            for &n in &self.sizes {
                let required = memory_estimate(n);
                if required > MEMORY_LIMIT_BYTES {
                    return Err(BenchError::MemoryLimit {
                        n,
                        required,
                        limit: MEMORY_LIMIT_BYTES,
                    });
                }
            }
        }
        if self.workers.is_empty() {
            return Err(BenchError::Config(
                "at least one worker count is required".into(),
            ));
        }
        if self.workers.contains(&0) {
            return Err(BenchError::Config("worker counts must be >= 1".into()));
        }
        if self.repetitions < 1 {
            return Err(BenchError::Config("repetitions must be >= 1".into()));
        }
        Ok(())
    }
}

/// Input matrix plus one factor copy plus slack.
fn memory_estimate(n: usize) -> u64 {
    3 * 8 * (n as u64) * (n as u64)
}

/// One table row; `error` marks rows whose solve failed.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub size: usize,
    pub kind: MatrixKind,
    pub workers: usize,
    pub t_seq_s: f64,
    pub t_par_s: f64,
    pub speedup: f64,
    pub residual: f64,
    pub madds: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub available_workers: usize,
    pub timestamp: String,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn has_errors(&self) -> bool {
        self.rows.iter().any(|r| r.error.is_some())
    }
}

enum CaseSource {
    Seeds(Vec<u64>),
    Fixed(DenseMatrix),
}

struct Case {
    size: usize,
    kind: MatrixKind,
    zero_skip: bool,
    source: CaseSource,
}

struct ParRun {
    seconds: f64,
    madds: u64,
    solution: Vector,
}

/// Runs the sweep. Rows come out in deterministic order (size ascending,
/// then workers ascending); the same generated matrix is reused across all
/// worker counts for a given `(size, seed)`.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    cfg.validate()?;
    let mut workers = cfg.workers.clone();
    workers.sort_unstable();

    let cases: Vec<Case> = match &cfg.matrix_path {
        Some(path) => {
            let path_text = path.display().to_string();
            let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
                path: path_text.clone(),
                source,
            })?;
            let sparse = load_matrix_market(&text).map_err(|source| BenchError::Load {
                path: path_text,
                source,
            })?;
            vec![Case {
                size: sparse.n(),
                kind: MatrixKind::Sparse,
                zero_skip: true,
                source: CaseSource::Fixed(sparse.to_dense()),
            }]
        }
        None => {
            let mut sizes = cfg.sizes.clone();
            sizes.sort_unstable();
            sizes
                .into_iter()
                .map(|size| Case {
                    size,
                    kind: cfg.kind,
                    // sparse systems skip the zero-multiplier update rows
                    zero_skip: cfg.kind == MatrixKind::Sparse,
                    source: CaseSource::Seeds(cfg.seeds.clone()),
                })
                .collect()
        }
    };

    let mut rows = Vec::with_capacity(cases.len() * workers.len());
    for case in &cases {
        run_case(case, cfg, &workers, &mut rows);
    }

    Ok(BenchReport {
        available_workers: available_workers(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        rows,
    })
}

fn run_case(case: &Case, cfg: &BenchConfig, workers: &[usize], rows: &mut Vec<BenchRow>) {
    let n = case.size;
    let system_count = match &case.source {
        CaseSource::Seeds(seeds) => seeds.len(),
        CaseSource::Fixed(_) => 1,
    };

    let mut seq_medians: Vec<f64> = Vec::new();
    let mut seq_error: Option<String> = None;
    let mut par_medians: Vec<Vec<f64>> = vec![Vec::new(); workers.len()];
    let mut residuals: Vec<Vec<f64>> = vec![Vec::new(); workers.len()];
    let mut madds: Vec<Vec<u64>> = vec![Vec::new(); workers.len()];
    let mut par_errors: Vec<Option<String>> = vec![None; workers.len()];

    'systems: for si in 0..system_count {
        let a = match &case.source {
            CaseSource::Seeds(seeds) => generate(n, case.kind, cfg.density, seeds[si])
                .expect("configuration was validated")
                .into_dense(),
            CaseSource::Fixed(m) => m.clone(),
        };
        let policy = PivotPolicy::default_for(&a);
        let b = a.mul_vec(&Vector::ones(n)).expect("b matches a");

        match time_sequential(&a, &b, &policy, cfg.repetitions) {
            Ok(t) => {
                eprintln!("bench: n={n} system {}/{system_count}: seq {t:.4}s", si + 1);
                seq_medians.push(t);
            }
            Err(e) => {
                seq_error = Some(format!("sequential solve failed: {e}"));
                break 'systems;
            }
        }

        for (wi, &requested) in workers.iter().enumerate() {
            if par_errors[wi].is_some() {
                continue;
            }
            let effective = effective_workers(n, requested);
            let plan = EbvPlan::build(n, effective).expect("n >= 2 was validated");
            let exec = ExecConfig::new(effective, policy).with_zero_skip(case.zero_skip);
            match time_parallel(&a, &b, &plan, &exec, cfg.repetitions) {
                Ok(run) => {
                    eprintln!(
                        "bench: n={n} W={requested}: par {:.4}s",
                        run.seconds
                    );
                    let res = residual_inf(&a, &run.solution, &b).expect("dims agree");
                    if cfg.check && res > residual_bound(n, a.inf_norm()) {
                        par_errors[wi] = Some(format!(
                            "residual {res:e} exceeds bound {:e}",
                            residual_bound(n, a.inf_norm())
                        ));
                        continue;
                    }
                    par_medians[wi].push(run.seconds);
                    residuals[wi].push(res);
                    madds[wi].push(run.madds);
                }
                Err(e) => par_errors[wi] = Some(format!("parallel solve failed: {e}")),
            }
        }
    }

    for (wi, &requested) in workers.iter().enumerate() {
        let error = seq_error.clone().or_else(|| par_errors[wi].clone());
        match error {
            Some(message) => rows.push(BenchRow {
                size: n,
                kind: case.kind,
                workers: requested,
                t_seq_s: f64::NAN,
                t_par_s: f64::NAN,
                speedup: f64::NAN,
                residual: f64::NAN,
                madds: 0,
                error: Some(message),
            }),
            None => {
                let t_seq = median_f64(&seq_medians);
                let t_par = median_f64(&par_medians[wi]);
                rows.push(BenchRow {
                    size: n,
                    kind: case.kind,
                    workers: requested,
                    t_seq_s: t_seq,
                    t_par_s: t_par,
                    speedup: t_seq / t_par,
                    residual: residuals[wi].iter().copied().fold(0.0, f64::max),
                    madds: median_u64(&madds[wi]),
                    error: None,
                });
            }
        }
    }
}

fn time_sequential(
    a: &DenseMatrix,
    b: &Vector,
    policy: &PivotPolicy,
    reps: usize,
) -> Result<f64, LuError> {
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        let x = solve_seq(a, b, policy)?;
        times.push(start.elapsed().as_secs_f64());
        std::hint::black_box(x);
    }
    Ok(median_f64(&times))
}

fn time_parallel(
    a: &DenseMatrix,
    b: &Vector,
    plan: &EbvPlan,
    exec: &ExecConfig,
    reps: usize,
) -> Result<ParRun, ExecError> {
    let mut times = Vec::with_capacity(reps);
    let mut last = None;
    for _ in 0..reps {
        let start = Instant::now();
        let (f, factor_counters) = factorize_par(a, plan, exec)?;
        let (x, solve_counters) = solve_par(&f, b, plan, exec)?;
        times.push(start.elapsed().as_secs_f64());
        last = Some((
            x,
            factor_counters.total_madds() + solve_counters.total_madds(),
        ));
    }
    let (solution, madds) = last.expect("reps >= 1");
    Ok(ParRun {
        seconds: median_f64(&times),
        madds,
        solution,
    })
}

/// Lower median; resistant to a single slow outlier and deterministic for
/// even sample counts.
fn median_f64(samples: &[f64]) -> f64 {
    debug_assert!(!samples.is_empty());
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("timings are finite"));
    sorted[(sorted.len() - 1) / 2]
}

fn median_u64(samples: &[u64]) -> u64 {
    debug_assert!(!samples.is_empty());
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    sorted[(sorted.len() - 1) / 2]
}

/// Renders the report in the requested format.
pub fn emit_report(report: &BenchReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => emit_csv(report),
        OutputFormat::Markdown => emit_markdown(report),
    }
}

/// Six significant digits for the timing-derived columns.
fn sig6(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.5e}")
    }
}

fn emit_csv(report: &BenchReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in &report.rows {
        if row.error.is_some() {
            out.push_str(&format!(
                "{},{},{},nan,nan,nan,nan,0\n",
                row.size, row.kind, row.workers
            ));
        } else {
            // the residual uses shortest round-trip formatting so parsing
            // the CSV recovers it bit-exactly
            out.push_str(&format!(
                "{},{},{},{},{},{},{:e},{}\n",
                row.size,
                row.kind,
                row.workers,
                sig6(row.t_seq_s),
                sig6(row.t_par_s),
                sig6(row.speedup),
                row.residual,
                row.madds
            ));
        }
    }
    out
}

fn emit_markdown(report: &BenchReport) -> String {
    let mut out = format!(
        "available workers: {}\ntimestamp: {}\n\n",
        report.available_workers, report.timestamp
    );
    out.push_str("| size | kind | workers | t_seq_s | t_par_s | speedup | residual | madds |\n");
    out.push_str("|---:|---|---:|---:|---:|---:|---:|---:|\n");
    let mut failures = Vec::new();
    for row in &report.rows {
        if let Some(message) = &row.error {
            out.push_str(&format!(
                "| {} | {} | {} | - | - | - | - | - |\n",
                row.size, row.kind, row.workers
            ));
            failures.push(format!(
                "row (n={}, W={}) failed: {message}",
                row.size, row.workers
            ));
        } else {
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} | {:e} | {} |\n",
                row.size,
                row.kind,
                row.workers,
                sig6(row.t_seq_s),
                sig6(row.t_par_s),
                sig6(row.speedup),
                row.residual,
                row.madds
            ));
        }
    }
    for failure in failures {
        out.push('\n');
        out.push_str(&failure);
    }
    out
}
