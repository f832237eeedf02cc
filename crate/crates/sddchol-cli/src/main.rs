//! Command-line front end: generate test problems, classify matrices, build
//! factor archives, solve systems, and run benchmark sweeps. Stats are
//! printed as JSON with the exit code signalling the outcome, so shell
//! pipelines can gate on convergence.

use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use sddchol::classify::{compensate, drop_positive, sign_flip_reduction, SignFlip};
use sddchol::factor::FactorKind;
use sddchol::io as mmio;
use sddchol::krylov::{apply_factor, pcg, PcgOptions, Precond};
use sddchol::ordering::{OrderingKind, OrderingSpec};
use sddchol::problems::{contrast_field, poisson7, poisson_var, poisson_var_with, FaceAverage, GridSpec};
use sddchol::{classify, CholFactor, MatrixKind, RngStream, SolveOptions, SparseSym};

/// Exit codes: 0 converged / ok, 1 solver failure or non-convergence,
/// 2 unreadable input, 3 unusable matrix class.
const EXIT_SOLVER: i32 = 1;
const EXIT_INPUT: i32 = 2;
const EXIT_CLASS: i32 = 3;

#[derive(Debug)]
struct Fail {
    code: i32,
    msg: String,
}

impl std::fmt::Display for Fail {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.msg)
    }
}

impl std::error::Error for Fail {}

fn fail(code: i32, msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Fail { code, msg: msg.into() })
}

#[derive(Parser)]
#[command(name = "sddchol", version, about = "Randomized Cholesky preconditioning for SDD linear systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a 7-point Poisson matrix (constant or high-contrast coefficients)
    Gen(GenArgs),
    /// Classify a matrix and report the class as JSON
    Check(CheckArgs),
    /// Build a factor archive from a matrix
    Factor(FactorArgs),
    /// Solve a linear system with the randomized preconditioner
    Solve(SolveArgs),
    /// Sweep orderings, contrasts or thread counts and print a table
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Grid points per dimension (matrix size n^3)
    #[arg(long)]
    n: usize,
    /// Coefficient contrast rho (1 = constant-coefficient stencil)
    #[arg(long, default_value_t = 1.0)]
    contrast: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also dump the per-cell coefficient field as raw little-endian f64
    #[arg(long)]
    field_out: Option<PathBuf>,
    /// Harmonic face averaging instead of arithmetic
    #[arg(long)]
    harmonic: bool,
}

#[derive(Args)]
struct CheckArgs {
    /// Matrix Market file ("-" or omitted for stdin)
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Raise weak diagonals to the off-diagonal row sum before classifying
    #[arg(long)]
    compensate: bool,
    /// Drop small positive off-diagonals (relative threshold) before classifying
    #[arg(long, value_name = "REL")]
    drop_positive: Option<f64>,
}

#[derive(Args, Clone)]
struct CommonSolveArgs {
    #[arg(long, value_enum)]
    ordering: Option<OrderingArg>,
    /// Nested-dissection separator levels (defaults to log2(threads))
    #[arg(long)]
    nd_levels: Option<u32>,
    /// External elimination order: one 1-based index per line
    #[arg(long)]
    perm_file: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (rounded down to a power of two)
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Pin worker threads to cores
    #[arg(long)]
    pin_cores: bool,
    /// Raise weak diagonals before building the preconditioner
    #[arg(long)]
    compensate: bool,
    /// Drop small positive off-diagonals before building the preconditioner
    #[arg(long, value_name = "REL")]
    drop_positive: Option<f64>,
}

#[derive(Args)]
struct FactorArgs {
    /// Matrix Market file ("-" or omitted for stdin)
    input: Option<PathBuf>,
    #[command(flatten)]
    common: CommonSolveArgs,
    /// Store factor values in 32-bit precision
    #[arg(long)]
    f32_factor: bool,
    /// Archive directory (a self-contained stream goes to stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Matrix Market file or factor-archive stream ("-" or omitted for stdin)
    input: Option<PathBuf>,
    /// Load the preconditioner from a factor archive directory
    #[arg(long)]
    factor: Option<PathBuf>,
    #[command(flatten)]
    common: CommonSolveArgs,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 2500)]
    maxit: usize,
    /// Right-hand side: "random" or a path to a one-value-per-line file
    #[arg(long, default_value = "random")]
    rhs: String,
    /// Store factor values in 32-bit precision before solving
    #[arg(long)]
    f32_factor: bool,
    /// Write the solution vector here
    #[arg(long)]
    solution_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Matrix Market input; omit to generate Poisson problems via --n
    input: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum)]
    sweep: SweepArg,
    /// Contrast values for --sweep contrast
    #[arg(long, default_value = "1,1e1,1e2,1e3")]
    contrasts: String,
    /// Thread counts for --sweep threads
    #[arg(long, default_value = "1,2,4")]
    threads_list: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 2500)]
    maxit: usize,
    #[arg(long, default_value_t = 3)]
    nd_levels: u32,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OrderingArg {
    Natural,
    Random,
    Mindeg,
    Nd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepArg {
    Ordering,
    Contrast,
    Threads,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(a) => run_gen(a),
        Command::Check(a) => run_check(a),
        Command::Factor(a) => run_factor(a),
        Command::Solve(a) => run_solve(a),
        Command::Bench(a) => run_bench(a),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err.downcast_ref::<Fail>().map(|f| f.code).unwrap_or(EXIT_SOLVER);
            std::process::exit(code);
        }
    }
}

fn default_seed(explicit: Option<u64>) -> u64 {
    explicit.unwrap_or_else(|| {
        std::env::var("SDDCHOL_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(0)
    })
}

/// Serialize with 17 significant digits so every f64 round-trips.
fn jf(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("\"{v}\"")
    }
}

fn read_matrix_input(path: &Option<PathBuf>) -> anyhow::Result<mmio::AutoInput> {
    let result = match path {
        Some(p) if p.as_os_str() != "-" => {
            let file = std::fs::File::open(p).with_context(|| format!("opening {}", p.display()));
            match file {
                Ok(f) => mmio::read_input_auto(f),
                Err(e) => return Err(fail(EXIT_INPUT, format!("{e:#}"))),
            }
        }
        _ => mmio::read_input_auto(std::io::stdin().lock()),
    };
    result.map_err(|e| fail(EXIT_INPUT, format!("reading input: {e}")))
}

fn run_gen(a: GenArgs) -> anyhow::Result<i32> {
    if a.n < 1 {
        return Err(fail(EXIT_INPUT, "--n must be at least 1"));
    }
    if a.contrast < 1.0 {
        return Err(fail(EXIT_INPUT, "--contrast must be at least 1"));
    }
    let seed = default_seed(a.seed);
    let spec = GridSpec::new(a.n, a.contrast, seed);
    let matrix = if a.contrast == 1.0 && !a.harmonic {
        poisson7(a.n)
    } else if a.harmonic {
        poisson_var_with(&spec, FaceAverage::Harmonic)
    } else {
        poisson_var(&spec)
    };
    if let Some(path) = &a.field_out {
        let field = contrast_field(&spec);
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        for v in field {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
    }
    match &a.out {
        Some(path) => mmio::write_matrix_market_path(&matrix, path)?,
        None => {
            let stdout = std::io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            mmio::write_matrix_market(&matrix, &mut w)?;
            w.flush()?;
        }
    }
    Ok(0)
}

fn apply_modifications(a: &SparseSym, compensate_flag: bool, drop_rel: Option<f64>) -> SparseSym {
    let mut m = a.clone();
    if let Some(rel) = drop_rel {
        m = drop_positive(&m, rel);
    }
    if compensate_flag {
        m = compensate(&m);
    }
    m
}

fn run_check(a: CheckArgs) -> anyhow::Result<i32> {
    let matrix = match read_matrix_input(&a.input)? {
        mmio::AutoInput::Matrix(m) => m,
        mmio::AutoInput::Archive(boxed) => boxed.1,
    };
    let checked = apply_modifications(&matrix, a.compensate, a.drop_positive);
    let class = classify(&checked, a.tol);
    println!(
        "{{\"kind\":\"{}\",\"irreducible\":{},\"scenario\":\"{}\",\"n\":{},\"nnz\":{}}}",
        class.kind.as_str(),
        class.irreducible,
        class.scenario.as_str(),
        checked.n(),
        checked.nnz()
    );
    Ok(0)
}

struct OrderingChoice {
    spec: OrderingSpec,
    threads: usize,
}

fn resolve_ordering(common: &CommonSolveArgs, n: usize, seed: u64) -> anyhow::Result<OrderingChoice> {
    let threads = if common.threads == 0 {
        1
    } else {
        // round down to a power of two
        1usize << (usize::BITS - 1 - common.threads.leading_zeros())
    };
    if let Some(path) = &common.perm_file {
        let reader = BufReader::new(std::fs::File::open(path).map_err(|e| fail(EXIT_INPUT, format!("{e}")))?);
        let perm = mmio::read_perm(reader, n).map_err(|e| fail(EXIT_INPUT, format!("permutation file: {e}")))?;
        if threads > 1 {
            return Err(fail(EXIT_INPUT, "--perm-file cannot drive a parallel factorization; drop --threads"));
        }
        return Ok(OrderingChoice { spec: OrderingSpec::external(perm), threads: 1 });
    }
    let levels_default = if threads > 1 { threads.ilog2().max(1) } else { 1 };
    let levels = common.nd_levels.unwrap_or(levels_default);
    let kind = match common.ordering {
        Some(OrderingArg::Natural) => OrderingKind::Natural,
        Some(OrderingArg::Random) => OrderingKind::Random,
        Some(OrderingArg::Mindeg) => OrderingKind::MinDegree,
        Some(OrderingArg::Nd) => OrderingKind::NestedDissection,
        None => {
            if threads > 1 {
                OrderingKind::NestedDissection
            } else {
                OrderingKind::MinDegree
            }
        }
    };
    if threads > 1 && kind != OrderingKind::NestedDissection {
        return Err(fail(EXIT_INPUT, "--threads > 1 requires the nd ordering (the task tree)"));
    }
    let spec = match kind {
        OrderingKind::NestedDissection => OrderingSpec::nd(levels),
        OrderingKind::Random => OrderingSpec::random(seed),
        k => OrderingSpec::new(k),
    };
    Ok(OrderingChoice { spec, threads })
}

fn solve_options(common: &CommonSolveArgs, tol: f64, maxit: usize, n: usize) -> anyhow::Result<(SolveOptions, u64)> {
    let seed = default_seed(common.seed);
    let choice = resolve_ordering(common, n, seed)?;
    Ok((
        SolveOptions {
            tol,
            maxit,
            seed,
            ordering: choice.spec,
            workers: choice.threads,
            pin_cores: common.pin_cores,
        },
        seed,
    ))
}

/// Build a preconditioner factor for the (possibly modified) matrix,
/// dispatching on its class. Returns the factor, timings, and the sign-flip
/// set when the shortcut fired.
fn build_precond(
    precond_matrix: &SparseSym,
    opts: &SolveOptions,
) -> anyhow::Result<(CholFactor, f64, f64, Option<Vec<usize>>)> {
    let class = classify(precond_matrix, 1e-12);
    match class.kind {
        MatrixKind::Sddm => {
            let (f, t_p, t_f) = sddchol::krylov::build_sddm_factor(precond_matrix, opts)
                .map_err(|e| fail(EXIT_SOLVER, format!("factorization failed: {e}")))?;
            Ok((f, t_p, t_f, None))
        }
        MatrixKind::Laplacian => {
            if !class.irreducible {
                return Err(fail(EXIT_CLASS, "reducible Laplacian: split the components and solve each"));
            }
            let (f, t_p, t_f) = sddchol::krylov::build_laplacian_factor(precond_matrix, opts)
                .map_err(|e| fail(EXIT_SOLVER, format!("factorization failed: {e}")))?;
            Ok((f, t_p, t_f, None))
        }
        MatrixKind::SddMixed => match sign_flip_reduction(precond_matrix).map_err(|e| fail(EXIT_CLASS, e.to_string()))? {
            SignFlip::Reduced { matrix, flipped } => {
                let (f, t_p, t_f) = sddchol::krylov::build_sddm_factor(&matrix, opts)
                    .map_err(|e| fail(EXIT_SOLVER, format!("factorization failed: {e}")))?;
                Ok((f, t_p, t_f, Some(flipped)))
            }
            SignFlip::NotReducible => Err(fail(
                EXIT_CLASS,
                "positive off-diagonals without a sign-flippable pattern; `solve` handles this via the doubled system, or use --drop-positive",
            )),
        },
        MatrixKind::NotSdd => Err(fail(
            EXIT_CLASS,
            "matrix is not SDD; rerun with --compensate to raise weak diagonals",
        )),
    }
}

fn run_factor(a: FactorArgs) -> anyhow::Result<i32> {
    let matrix = match read_matrix_input(&a.input)? {
        mmio::AutoInput::Matrix(m) => m,
        mmio::AutoInput::Archive(boxed) => boxed.1,
    };
    let precond_matrix = apply_modifications(&matrix, a.common.compensate, a.common.drop_positive);
    let (opts, _) = solve_options(&a.common, 1e-10, 2500, matrix.n())?;
    let build_start = Instant::now();
    let (factor, _, _, flipped) = build_precond(&precond_matrix, &opts)?;
    if flipped.is_some() {
        return Err(fail(
            EXIT_CLASS,
            "sign-flipped factors cannot be archived; apply the flip to the matrix first",
        ));
    }
    let build_seconds = build_start.elapsed().as_secs_f64();
    match &a.out {
        Some(dir) => {
            mmio::save_archive_dir(&factor, dir, a.f32_factor, build_seconds)?;
            println!(
                "{{\"n\":{},\"g_nnz\":{},\"fill\":{},\"ordering\":\"{}\",\"seed\":{},\"out\":\"{}\"}}",
                factor.g.n(),
                factor.g.nnz(),
                factor.fill_nnz(),
                factor.meta.ordering,
                factor.meta.seed,
                dir.display()
            );
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            mmio::write_archive_stream(&factor, &matrix, &mut w, a.f32_factor, build_seconds)?;
            w.flush()?;
        }
    }
    Ok(0)
}

/// Preconditioner wrapped in a +/-1 diagonal similarity (the sign-flip
/// shortcut applied to a modified matrix).
struct FlippedPrecond {
    factor: CholFactor,
    flipped: Vec<usize>,
}

impl Precond for FlippedPrecond {
    fn apply_precond(&self, r: &[f64]) -> sddchol::Result<Vec<f64>> {
        let mut rf = r.to_vec();
        for &i in &self.flipped {
            rf[i] = -rf[i];
        }
        let mut z = apply_factor(&self.factor, &rf)?;
        for &i in &self.flipped {
            z[i] = -z[i];
        }
        Ok(z)
    }
}

fn make_rhs(arg: &str, n: usize, seed: u64) -> anyhow::Result<Vec<f64>> {
    if arg == "random" {
        let mut rng = RngStream::substream(seed, 7);
        Ok((0..n).map(|_| rng.uniform()).collect())
    } else {
        let reader = BufReader::new(std::fs::File::open(arg).map_err(|e| fail(EXIT_INPUT, format!("{e}")))?);
        let v = mmio::read_vector(reader).map_err(|e| fail(EXIT_INPUT, format!("rhs file: {e}")))?;
        if v.len() != n {
            return Err(fail(EXIT_INPUT, format!("rhs has {} entries, matrix has {n}", v.len())));
        }
        Ok(v)
    }
}

struct SolveReport {
    n: usize,
    nnz: usize,
    stats: sddchol::SolveStats,
    seed: u64,
    ordering: String,
    nd_levels: Option<u32>,
    threads: usize,
    kind: &'static str,
}

fn print_solve_json(r: &SolveReport) {
    let nd = match r.nd_levels {
        Some(l) => l.to_string(),
        None => "null".into(),
    };
    println!(
        "{{\"n\":{},\"nnz\":{},\"fill_ratio\":{},\"t_p\":{},\"t_f\":{},\"t_s\":{},\"n_it\":{},\"res\":{},\"converged\":{},\"seed\":{},\"ordering\":\"{}\",\"nd_levels\":{},\"threads\":{},\"kind\":\"{}\"}}",
        r.n,
        r.nnz,
        jf(r.stats.fill_ratio),
        jf(r.stats.t_p),
        jf(r.stats.t_f),
        jf(r.stats.t_s),
        r.stats.iterations,
        jf(r.stats.res),
        r.stats.converged,
        r.seed,
        r.ordering,
        nd,
        r.threads,
        r.kind
    );
}

fn run_solve(a: SolveArgs) -> anyhow::Result<i32> {
    let (matrix, mut preloaded): (SparseSym, Option<CholFactor>) = match read_matrix_input(&a.input)? {
        mmio::AutoInput::Matrix(m) => (m, None),
        mmio::AutoInput::Archive(boxed) => {
            let (f, m, _) = *boxed;
            (m, Some(f))
        }
    };
    if let Some(dir) = &a.factor {
        let (f, _) = mmio::load_archive_dir(dir).map_err(|e| fail(EXIT_INPUT, format!("factor archive: {e}")))?;
        preloaded = Some(f);
    }
    let n = matrix.n();
    let (opts, seed) = solve_options(&a.common, a.tol, a.maxit, n)?;
    let b = make_rhs(&a.rhs, n, seed)?;

    let original_class = classify(&matrix, 1e-12);
    let modified = a.common.compensate || a.common.drop_positive.is_some();
    // a custom preconditioner build bypasses the stock drivers
    let custom_build = modified || a.f32_factor;

    let report = if let Some(mut factor) = preloaded {
        // preconditioner supplied: run PCG directly
        if factor.g.n() != n {
            return Err(fail(EXIT_INPUT, "factor dimension does not match the matrix"));
        }
        if a.f32_factor {
            mmio::demote_factor_values(&mut factor);
        }
        let project = factor.kind == FactorKind::Laplacian;
        let mut b_eff = b.clone();
        if project {
            let mean = b_eff.iter().sum::<f64>() / n as f64;
            for v in b_eff.iter_mut() {
                *v -= mean;
            }
        }
        let t0 = Instant::now();
        let result = pcg(&matrix, &b_eff, &factor, &PcgOptions { tol: a.tol, maxit: a.maxit, project_ones: project })
            .map_err(|e| fail(EXIT_SOLVER, format!("pcg: {e}")))?;
        let t_s = t0.elapsed().as_secs_f64();
        let stats = sddchol::SolveStats {
            iterations: result.iterations,
            residuals: result.residuals.clone(),
            converged: result.converged,
            fill_ratio: factor.fill_nnz() as f64 / matrix.nnz() as f64,
            res: result.res,
            t_p: 0.0,
            t_f: 0.0,
            t_s,
        };
        maybe_write_solution(&a.solution_out, &result.x)?;
        SolveReport {
            n,
            nnz: matrix.nnz(),
            stats,
            seed,
            ordering: factor.meta.ordering.clone(),
            nd_levels: factor.meta.nd_levels,
            threads: opts.workers,
            kind: factor.kind.as_str(),
        }
    } else if !custom_build {
        let (x, stats) = match original_class.kind {
            MatrixKind::Sddm => {
                sddchol::solve_sddm(&matrix, &b, &opts).map_err(solver_fail)?
            }
            MatrixKind::Laplacian => {
                if !original_class.irreducible {
                    return Err(fail(EXIT_CLASS, "reducible Laplacian: split the components and solve each"));
                }
                sddchol::krylov::solve_laplacian(&matrix, &b, &opts).map_err(solver_fail)?
            }
            MatrixKind::SddMixed => {
                if !original_class.irreducible {
                    return Err(fail(EXIT_CLASS, "reducible SDD matrix: split the components and solve each"));
                }
                sddchol::solve_sdd(&matrix, &b, &opts).map_err(solver_fail)?
            }
            MatrixKind::NotSdd => {
                return Err(fail(EXIT_CLASS, "matrix is not SDD; rerun with --compensate"));
            }
        };
        maybe_write_solution(&a.solution_out, &x)?;
        SolveReport {
            n,
            nnz: matrix.nnz(),
            stats,
            seed,
            ordering: opts.ordering.name(),
            nd_levels: opts.ordering.nd_levels(),
            threads: opts.workers,
            kind: original_class.kind.as_str(),
        }
    } else {
        // custom build: preconditioner from the modified matrix (or a
        // demoted factor), PCG on the original system
        let precond_matrix = if modified {
            apply_modifications(&matrix, a.common.compensate, a.common.drop_positive)
        } else {
            matrix.clone()
        };
        let flipped_holder;
        let (f, t_p, t_f, flipped) = build_precond(&precond_matrix, &opts)?;
        let mut factor_holder = f;
        if a.f32_factor {
            mmio::demote_factor_values(&mut factor_holder);
        }
        let project = factor_holder.kind == FactorKind::Laplacian;
        if project && original_class.kind != MatrixKind::Laplacian {
            return Err(fail(EXIT_CLASS, "the preconditioner matrix is singular but the system is not a Laplacian"));
        }
        let mut b_eff = b.clone();
        if project {
            let mean = b_eff.iter().sum::<f64>() / n as f64;
            for v in b_eff.iter_mut() {
                *v -= mean;
            }
        }
        let precond: &dyn Precond = match flipped {
            Some(flip) => {
                flipped_holder = FlippedPrecond { factor: factor_holder.clone(), flipped: flip };
                &flipped_holder
            }
            None => &factor_holder,
        };
        let t0 = Instant::now();
        let result = pcg(&matrix, &b_eff, precond, &PcgOptions { tol: a.tol, maxit: a.maxit, project_ones: project })
            .map_err(|e| fail(EXIT_SOLVER, format!("pcg: {e}")))?;
        let t_s = t0.elapsed().as_secs_f64();
        let stats = sddchol::SolveStats {
            iterations: result.iterations,
            residuals: result.residuals.clone(),
            converged: result.converged,
            fill_ratio: factor_holder.fill_nnz() as f64 / matrix.nnz() as f64,
            res: result.res,
            t_p,
            t_f,
            t_s,
        };
        maybe_write_solution(&a.solution_out, &result.x)?;
        SolveReport {
            n,
            nnz: matrix.nnz(),
            stats,
            seed,
            ordering: opts.ordering.name(),
            nd_levels: opts.ordering.nd_levels(),
            threads: opts.workers,
            kind: original_class.kind.as_str(),
        }
    };

    print_solve_json(&report);
    Ok(if report.stats.converged { 0 } else { EXIT_SOLVER })
}

fn solver_fail(e: sddchol::Error) -> anyhow::Error {
    match &e {
        sddchol::Error::WrongClass { .. } | sddchol::Error::Reducible => fail(EXIT_CLASS, e.to_string()),
        _ => fail(EXIT_SOLVER, e.to_string()),
    }
}

fn maybe_write_solution(path: &Option<PathBuf>, x: &[f64]) -> anyhow::Result<()> {
    if let Some(p) = path {
        let mut w = BufWriter::new(std::fs::File::create(p)?);
        mmio::write_vector(x, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

struct BenchRow {
    sweep: &'static str,
    value: String,
    n: usize,
    nnz: usize,
    stats: sddchol::SolveStats,
}

fn run_bench(a: BenchArgs) -> anyhow::Result<i32> {
    let seed = default_seed(a.seed);
    let base_matrix: Option<SparseSym> = match (&a.input, a.n) {
        (Some(path), _) => Some(match read_matrix_input(&Some(path.clone()))? {
            mmio::AutoInput::Matrix(m) => m,
            mmio::AutoInput::Archive(boxed) => boxed.1,
        }),
        (None, Some(n)) => Some(poisson7(n)),
        (None, None) => return Err(fail(EXIT_INPUT, "bench needs an input file or --n")),
    };
    let mut rows: Vec<BenchRow> = Vec::new();

    let solve_with = |m: &SparseSym, opts: &SolveOptions| -> anyhow::Result<sddchol::SolveStats> {
        let mut rng = RngStream::substream(seed, 7);
        let b: Vec<f64> = (0..m.n()).map(|_| rng.uniform()).collect();
        let class = classify(m, 1e-12);
        let stats = match class.kind {
            MatrixKind::Sddm => sddchol::solve_sddm(m, &b, opts).map_err(solver_fail)?.1,
            MatrixKind::Laplacian => sddchol::krylov::solve_laplacian(m, &b, opts).map_err(solver_fail)?.1,
            MatrixKind::SddMixed => sddchol::solve_sdd(m, &b, opts).map_err(solver_fail)?.1,
            MatrixKind::NotSdd => return Err(fail(EXIT_CLASS, "bench input is not SDD")),
        };
        Ok(stats)
    };

    match a.sweep {
        SweepArg::Ordering => {
            let m = base_matrix.unwrap();
            for (name, spec) in [
                ("natural", OrderingSpec::new(OrderingKind::Natural)),
                ("random", OrderingSpec::random(seed)),
                ("mindeg", OrderingSpec::new(OrderingKind::MinDegree)),
                ("nd", OrderingSpec::nd(a.nd_levels)),
            ] {
                let opts = SolveOptions { tol: a.tol, maxit: a.maxit, seed, ordering: spec, workers: 1, pin_cores: false };
                let stats = solve_with(&m, &opts)?;
                rows.push(BenchRow { sweep: "ordering", value: name.into(), n: m.n(), nnz: m.nnz(), stats });
            }
        }
        SweepArg::Contrast => {
            let n = a.n.ok_or_else(|| fail(EXIT_INPUT, "--sweep contrast needs --n"))?;
            for tok in a.contrasts.split(',') {
                let rho: f64 = tok.trim().parse().map_err(|_| fail(EXIT_INPUT, format!("bad contrast `{tok}`")))?;
                let m = if rho == 1.0 { poisson7(n) } else { poisson_var(&GridSpec::new(n, rho, seed)) };
                let opts = SolveOptions {
                    tol: a.tol,
                    maxit: a.maxit,
                    seed,
                    ordering: OrderingSpec::new(OrderingKind::MinDegree),
                    workers: 1,
                    pin_cores: false,
                };
                let stats = solve_with(&m, &opts)?;
                rows.push(BenchRow { sweep: "contrast", value: tok.trim().into(), n: m.n(), nnz: m.nnz(), stats });
            }
        }
        SweepArg::Threads => {
            let m = base_matrix.unwrap();
            for tok in a.threads_list.split(',') {
                let threads: usize = tok.trim().parse().map_err(|_| fail(EXIT_INPUT, format!("bad thread count `{tok}`")))?;
                let threads = threads.max(1);
                let rounded = 1usize << (usize::BITS - 1 - threads.leading_zeros());
                let ordering = if rounded > 1 {
                    OrderingSpec::nd(rounded.ilog2())
                } else {
                    OrderingSpec::new(OrderingKind::MinDegree)
                };
                let opts = SolveOptions { tol: a.tol, maxit: a.maxit, seed, ordering, workers: rounded, pin_cores: false };
                let stats = solve_with(&m, &opts)?;
                rows.push(BenchRow { sweep: "threads", value: rounded.to_string(), n: m.n(), nnz: m.nnz(), stats });
            }
        }
    }

    match a.format {
        FormatArg::Csv => {
            println!("sweep,value,n,nnz,fill_ratio,t_p,t_f,t_s,n_it,res,converged");
            for r in &rows {
                println!(
                    "{},{},{},{},{:.4},{:.3},{:.3},{:.3},{},{:.3e},{}",
                    r.sweep, r.value, r.n, r.nnz, r.stats.fill_ratio, r.stats.t_p, r.stats.t_f, r.stats.t_s,
                    r.stats.iterations, r.stats.res, r.stats.converged
                );
            }
        }
        FormatArg::Json => {
            let mut out = String::from("[");
            for (k, r) in rows.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push_str(&format!(
                    "{{\"sweep\":\"{}\",\"value\":\"{}\",\"n\":{},\"nnz\":{},\"fill_ratio\":{},\"t_p\":{},\"t_f\":{},\"t_s\":{},\"n_it\":{},\"res\":{},\"converged\":{}}}",
                    r.sweep, r.value, r.n, r.nnz, jf(r.stats.fill_ratio), jf(r.stats.t_p), jf(r.stats.t_f),
                    jf(r.stats.t_s), r.stats.iterations, jf(r.stats.res), r.stats.converged
                ));
            }
            out.push(']');
            println!("{out}");
        }
    }
    Ok(0)
}
