//! `lorentz-align`: align paired vector sets, run the built-in sanity check,
//! run the noise/accuracy benchmark and generate synthetic data.
//!
//! Exit codes: 0 success, 2 success with solver warnings, 1 failure. Failures
//! print one line `error[<kind>]: <message>` on stderr.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lorentz_align::align::{align, transform_columns, vectors_to_matrix};
use lorentz_align::bench::{
    format_float, perturb, run_benchmark, sample_lorentz, sample_unit_timelike, summarize, trial_rng,
    write_summary_csv, write_trials_csv, BenchConfig, SummaryRow, RNG_NAME,
};
use lorentz_align::euclid::{horn, kabsch, EuclidWarning};
use lorentz_align::sanity::run_sanity;
use lorentz_align::{exp_lorentz, Error, LorentzAlgebraElement, Method, SolverOptions};
use nalgebra::{DMatrix, Vector3};
use serde_json::json;

#[derive(Parser)]
#[command(name = "lorentz-align", version, about = "Optimal alignment under SO(3) and the Lorentz group")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align the vectors of frame A onto those of frame B.
    Align(AlignArgs),
    /// Recover a β = 0.3 boost from four unit timelike vectors.
    Sanity {
        #[arg(long)]
        json: bool,
    },
    /// Run the seeded accuracy/timing comparison of the Lorentz solvers.
    Benchmark(BenchArgs),
    /// Write a synthetic pair of frame files.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Group {
    Lorentz,
    So3,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlignMethod {
    Direct,
    Lie,
    Kabsch,
    Horn,
}

#[derive(Parser)]
struct AlignArgs {
    /// CSV with header `t,x,y,z` (Lorentz) or `x,y,z` (SO(3)).
    frame_a: PathBuf,
    frame_b: PathBuf,
    #[arg(long, value_enum, default_value = "lorentz")]
    group: Group,
    /// Defaults to `lie` for the Lorentz group and `kabsch` for SO(3).
    #[arg(long, value_enum)]
    method: Option<AlignMethod>,
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Parser)]
struct BenchArgs {
    /// JSON file with benchmark configuration fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    n_vectors: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    noise_eps: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of `direct,lie`.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Apply the noise after the transformation instead of before.
    #[arg(long)]
    noise_after_boost: bool,
    /// Record zero wall times so repeated runs are byte-identical.
    #[arg(long)]
    no_timing: bool,
    /// Per-trial CSV; a `.meta.json` sidecar is written next to it.
    #[arg(long, default_value = "trials.csv")]
    out: PathBuf,
    #[arg(long, default_value = "summary.csv")]
    summary: PathBuf,
}

#[derive(Parser)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_a: PathBuf,
    #[arg(long)]
    out_b: PathBuf,
    /// Boost vector `z1,z2,z3`; sampled when omitted.
    #[arg(long, allow_hyphen_values = true)]
    zeta: Option<String>,
    /// Rotation vector `t1,t2,t3`; sampled when omitted.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
}

/// A failure reported as `error[kind]: message`.
struct Failure {
    kind: &'static str,
    message: String,
}

impl Failure {
    fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::new(e.kind(), e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::new("io", e.to_string())
    }
}

enum Status {
    Ok,
    Warning,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Align(args) => cmd_align(&args),
        Command::Sanity { json } => cmd_sanity(json),
        Command::Benchmark(args) => cmd_benchmark(&args),
        Command::Generate(args) => cmd_generate(&args),
    };
    match outcome {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Warning) => ExitCode::from(2),
        Err(f) => {
            eprintln!("error[{}]: {}", f.kind, f.message.replace('\n', " "));
            ExitCode::from(1)
        }
    }
}

fn read_vectors(path: &Path, columns: &[&str]) -> Result<DMatrix<f64>, Failure> {
    let parse = |msg: String| Failure::new("parse", format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse(e.to_string()))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != columns {
        return Err(parse(format!("expected header '{}', found '{}'", columns.join(","), header.join(","))));
    }
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse(e.to_string()))?;
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse(format!("row {}: '{field}' is not a number", i + 1)))?;
            if !v.is_finite() {
                return Err(parse(format!("row {}: non-finite value", i + 1)));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(parse("no data rows".into()));
    }
    // Rows of the file are the columns of the matrix.
    Ok(DMatrix::from_column_slice(columns.len(), rows, &values))
}

fn write_vectors(path: &Path, header: &str, m: &DMatrix<f64>) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{header}")?;
    for col in m.column_iter() {
        let fields: Vec<String> = col.iter().map(|v| format_float(*v)).collect();
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

fn format_matrix(m: &DMatrix<f64>) -> String {
    m.row_iter()
        .map(|r| r.iter().map(|v| format!("{v:>24.16e}")).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("\n")
}

fn emit(out: Option<&Path>, text: &str) -> io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n")),
        None => say(text),
    }
}

/// Prints a line to stdout; a closed pipe (`| head`) is not an error.
fn say(text: &str) -> io::Result<()> {
    match writeln!(io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => other,
    }
}

fn cmd_align(args: &AlignArgs) -> Result<Status, Failure> {
    let method = args.method.unwrap_or(match args.group {
        Group::Lorentz => AlignMethod::Lie,
        Group::So3 => AlignMethod::Kabsch,
    });
    let columns: &[&str] = match args.group {
        Group::Lorentz => &["t", "x", "y", "z"],
        Group::So3 => &["x", "y", "z"],
    };
    let compatible = matches!(
        (args.group, method),
        (Group::Lorentz, AlignMethod::Direct | AlignMethod::Lie) | (Group::So3, AlignMethod::Kabsch | AlignMethod::Horn)
    );
    if !compatible {
        return Err(Failure::new("invalid-input", "method is not available for this group"));
    }
    let a = read_vectors(&args.frame_a, columns)?;
    let b = read_vectors(&args.frame_b, columns)?;
    if a.ncols() != b.ncols() {
        return Err(Failure::new(
            "shape-mismatch",
            format!("frame A has {} rows, frame B has {}", a.ncols(), b.ncols()),
        ));
    }

    let (report, text, warned) = match method {
        AlignMethod::Direct | AlignMethod::Lie => {
            let m = if method == AlignMethod::Direct {
                Method::Direct
            } else {
                Method::LieAlgebra
            };
            let r = align(m, &a, &b, &SolverOptions::default())?;
            let lambda = DMatrix::from_column_slice(4, 4, r.lambda.matrix().as_slice());
            let report = json!({
                "group": "lorentz",
                "method": r.method,
                "matrix": matrix_rows(&lambda),
                "zeta": r.algebra.zeta.as_slice(),
                "theta": r.algebra.theta.as_slice(),
                "residual": r.residual,
                "iterations": r.iterations,
                "diagnostics": r.diagnostics,
            });
            let mut text = format!(
                "method: {}\nmatrix:\n{}\nzeta: {:?}\ntheta: {:?}\nresidual: {:e}\niterations: {}",
                r.method,
                format_matrix(&lambda),
                r.algebra.zeta.as_slice(),
                r.algebra.theta.as_slice(),
                r.residual,
                r.iterations
            );
            for d in &r.diagnostics {
                text.push_str(&format!("\nwarning: {}", serde_json::to_string(d).unwrap_or_default()));
            }
            (report, text, !r.diagnostics.is_empty())
        }
        AlignMethod::Kabsch | AlignMethod::Horn => {
            let (rotation, quaternion, warnings) = if method == AlignMethod::Kabsch {
                let k = kabsch(&a, &b)?;
                (k.rotation.into_matrix(), None, k.warnings)
            } else {
                let h = horn(&a, &b)?;
                (h.quaternion.to_rotation_matrix()?.into_matrix(), Some(h.quaternion), h.warnings)
            };
            let residual = (&b - &rotation * &a).norm_squared();
            // The reflection fix is routine; only ambiguity is a warning.
            let warned = warnings
                .iter()
                .any(|w| matches!(w, EuclidWarning::AmbiguousAlignment { .. }));
            let q = quaternion.map(|q| [q.q0, q.q1, q.q2, q.q3]);
            let report = json!({
                "group": "so3",
                "method": if method == AlignMethod::Kabsch { "kabsch" } else { "horn" },
                "matrix": matrix_rows(&rotation),
                "quaternion": q,
                "residual": residual,
                "diagnostics": warnings,
            });
            let mut text = format!("matrix:\n{}", format_matrix(&rotation));
            if let Some(q) = q {
                text.push_str(&format!("\nquaternion: {q:?}"));
            }
            text.push_str(&format!("\nresidual: {residual:e}"));
            for w in &warnings {
                text.push_str(&format!("\nwarning: {}", serde_json::to_string(w).unwrap_or_default()));
            }
            (report, text, warned)
        }
    };

    let body = if args.json {
        serde_json::to_string_pretty(&report).expect("serializable report")
    } else {
        text
    };
    emit(args.out.as_deref(), &body)?;
    Ok(if warned { Status::Warning } else { Status::Ok })
}

fn cmd_sanity(json: bool) -> Result<Status, Failure> {
    let r = run_sanity(&SolverOptions::default())?;
    if json {
        say(&format!("{}", serde_json::to_string_pretty(&r).expect("serializable report")))?;
    } else {
        say(&format!("{:<12} {:>14} {:>14} {:>12}", "method", "max error", "|det - 1|", "time (s)"))?;
        for m in [&r.lie, &r.direct] {
            say(&format!(
                "{:<12} {:>14.3e} {:>14.3e} {:>12.3e}",
                m.method.as_str(),
                m.max_error,
                m.det_defect,
                m.wall_time_s
            ))?;
        }
        say(&format!(
            "{:<12} {:>14.3e} {:>14.3e}",
            "lie (series)", r.lie_series_max_error, r.lie_series_det_defect
        ))?;
    }
    if r.passed() {
        Ok(Status::Ok)
    } else {
        Err(Failure::new("threshold", r.failures.join("; ")))
    }
}

fn bench_config(args: &BenchArgs) -> Result<BenchConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text).map_err(|e| Failure::new("invalid-config", format!("{}: {e}", path.display())))?
        }
        None => BenchConfig::default(),
    };
    if let Some(n) = &args.n_vectors {
        cfg.n_vectors = n.clone();
    }
    if let Some(eps) = &args.noise_eps {
        cfg.noise_eps = eps.clone();
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(methods) = &args.methods {
        cfg.methods = methods
            .iter()
            .map(|m| m.parse::<Method>())
            .collect::<Result<_, _>>()
            .map_err(|e| Failure::new("invalid-config", e.to_string()))?;
    }
    cfg.noise_after_boost |= args.noise_after_boost;
    cfg.disable_timing |= args.no_timing;
    cfg.validate().map_err(|e| Failure::new("invalid-config", e.to_string()))?;
    Ok(cfg)
}

fn print_summary(rows: &[SummaryRow]) -> io::Result<()> {
    say(&format!(
        "{:>4} {:>6} {:<12} {:>12} {:>12} {:>12} {:>12} {:>10}",
        "n", "eps", "method", "median frob", "p5 frob", "p95 frob", "mean time", "converged"
    ))?;
    for s in rows {
        say(&format!(
            "{:>4} {:>6} {:<12} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e} {:>6}/{}",
            s.n,
            s.eps,
            s.method.as_str(),
            s.median_frob,
            s.p5_frob,
            s.p95_frob,
            s.mean_time_s,
            s.converged,
            s.trials
        ))?;
    }
    Ok(())
}

fn cmd_benchmark(args: &BenchArgs) -> Result<Status, Failure> {
    let cfg = bench_config(args)?;
    let records = run_benchmark(&cfg)?;
    let rows = summarize(&records)?;

    write_trials_csv(BufWriter::new(File::create(&args.out)?), &records)?;
    write_summary_csv(BufWriter::new(File::create(&args.summary)?), &rows)?;
    let meta = json!({
        "rng": RNG_NAME,
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "threads": rayon_threads(),
    });
    let meta_path = args.out.with_extension("meta.json");
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta).expect("serializable metadata"))?;

    print_summary(&rows)?;
    Ok(Status::Ok)
}

fn rayon_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn parse_triple(name: &str, text: &str) -> Result<Vector3<f64>, Failure> {
    let bad = || Failure::new("parse", format!("--{name} expects three comma-separated numbers, got '{text}'"));
    let values: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    match values.as_slice() {
        [a, b, c] if values.iter().all(|v| v.is_finite()) => Ok(Vector3::new(*a, *b, *c)),
        _ => Err(bad()),
    }
}

fn cmd_generate(args: &GenerateArgs) -> Result<Status, Failure> {
    if args.n == 0 {
        return Err(Failure::new("invalid-input", "--n must be at least 1"));
    }
    if !(args.eps.is_finite() && args.eps >= 0.0) {
        return Err(Failure::new("invalid-input", "--eps must be finite and nonnegative"));
    }
    let zeta = args.zeta.as_deref().map(|s| parse_triple("zeta", s)).transpose()?;
    let theta = args.theta.as_deref().map(|s| parse_triple("theta", s)).transpose()?;

    let cfg = BenchConfig::default();
    let mut rng = trial_rng(args.seed);
    // Sampled unconditionally so frame A depends only on the seed.
    let sampled = sample_lorentz(&mut rng, cfg.sigma_zeta, cfg.sigma_theta);
    let truth = LorentzAlgebraElement {
        zeta: zeta.unwrap_or(sampled.zeta),
        theta: theta.unwrap_or(sampled.theta),
    };
    let lambda = exp_lorentz(&truth);
    let frame_a = sample_unit_timelike(&mut rng, args.n, cfg.vector_sigma);
    let noisy = perturb(&frame_a, args.eps, &mut rng);
    let x = vectors_to_matrix(&frame_a);
    let y = transform_columns(lambda.matrix(), &vectors_to_matrix(&noisy));

    write_vectors(&args.out_a, "t,x,y,z", &x)?;
    write_vectors(&args.out_b, "t,x,y,z", &y)?;

    let m = DMatrix::from_column_slice(4, 4, lambda.matrix().as_slice());
    say(&format!("zeta: {:?}", truth.zeta.as_slice()))?;
    say(&format!("theta: {:?}", truth.theta.as_slice()))?;
    say(&format!("matrix:\n{}", format_matrix(&m)))?;
    Ok(Status::Ok)
}
