//! Monte-Carlo accuracy and timing benchmark for the two Lorentz solvers.
//!
//! Each trial draws a random transformation and `n` unit timelike vectors,
//! perturbs the spatial components measured in frame B, renormalizes the time
//! component, and boosts. Every `N(0, s)` below takes `s` as a standard
//! deviation.
//!
//! Trials are seeded independently from `(master seed, n, eps, trial id)` so
//! results do not depend on scheduling; timings are the only
//! non-reproducible field.

use std::io::{self, Write};
use std::time::Instant;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::{align, error_norms, vectors_to_matrix, Method, SolverOptions};
use crate::error::{Error, Result};
use crate::lie::{exp_lorentz, FourVector, LorentzAlgebraElement};

/// Name of the per-trial generator, recorded in run metadata.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9), seeded via splitmix64(master, n, eps bits, trial id)";

pub const TRIAL_CSV_HEADER: &str = "trial_id,n,eps,method,frob_error,max_error,wall_time_s,converged,seed_used";
pub const SUMMARY_CSV_HEADER: &str = "n,eps,method,median_frob,p5_frob,p95_frob,median_max,mean_time_s";

const WARMUP_CALLS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub n_vectors: Vec<usize>,
    pub noise_eps: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    /// Spread of the spatial components of the frame-A vectors.
    pub vector_sigma: f64,
    pub sigma_zeta: f64,
    pub sigma_theta: f64,
    /// Apply the measurement noise after boosting instead of before.
    pub noise_after_boost: bool,
    /// Record zero wall times, making the output byte-for-byte reproducible.
    pub disable_timing: bool,
    pub solver: SolverOptions,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n_vectors: vec![4, 8, 16],
            noise_eps: vec![0.0, 0.01, 0.1],
            trials: 1000,
            seed: 0,
            methods: vec![Method::Direct, Method::LieAlgebra],
            vector_sigma: 0.3,
            sigma_zeta: 0.2,
            sigma_theta: 1.0,
            noise_after_boost: false,
            disable_timing: false,
            solver: SolverOptions::default(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(msg.to_string()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.n_vectors.is_empty() || self.noise_eps.is_empty() || self.methods.is_empty() {
            return bad("n_vectors, noise_eps and methods must be non-empty");
        }
        if self.n_vectors.iter().any(|&n| n < 4) {
            return bad("every n must be at least 4");
        }
        if self.noise_eps.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return bad("noise levels must be finite and nonnegative");
        }
        for s in [self.vector_sigma, self.sigma_zeta, self.sigma_theta] {
            if !(s.is_finite() && s >= 0.0) {
                return bad("sampling spreads must be finite and nonnegative");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: usize,
    pub n: usize,
    pub eps: f64,
    pub method: Method,
    pub frob_error: f64,
    pub max_error: f64,
    pub wall_time: f64,
    pub converged: bool,
    pub seed_used: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one trial, a pure function of the grid coordinates.
pub fn trial_seed(master: u64, n: usize, eps: f64, trial_id: usize) -> u64 {
    [n as u64, eps.to_bits(), trial_id as u64]
        .into_iter()
        .fold(splitmix64(master), |h, v| splitmix64(h ^ v))
}

pub fn trial_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(sigma: f64) -> Normal<f64> {
    Normal::new(0.0, sigma).expect("finite nonnegative standard deviation")
}

fn on_unit_hyperboloid(x: f64, y: f64, z: f64) -> FourVector {
    FourVector::new((1.0 + x * x + y * y + z * z).sqrt(), x, y, z)
}

/// `n` future-pointing unit timelike vectors with spatial parts ~ N(0, sigma).
pub fn sample_unit_timelike<R: Rng + ?Sized>(rng: &mut R, n: usize, sigma: f64) -> Vec<FourVector> {
    let dist = normal(sigma);
    (0..n)
        .map(|_| on_unit_hyperboloid(dist.sample(rng), dist.sample(rng), dist.sample(rng)))
        .collect()
}

/// Adds N(0, eps) to each spatial component and puts the result back on the
/// unit hyperboloid. `eps = 0` returns the input unchanged and draws nothing.
pub fn perturb<R: Rng + ?Sized>(vs: &[FourVector], eps: f64, rng: &mut R) -> Vec<FourVector> {
    if eps == 0.0 {
        return vs.to_vec();
    }
    let dist = normal(eps);
    vs.iter()
        .map(|v| {
            on_unit_hyperboloid(
                v.x + dist.sample(rng),
                v.y + dist.sample(rng),
                v.z + dist.sample(rng),
            )
        })
        .collect()
}

/// ζⁱ ~ N(0, sigma_zeta), θⁱ ~ N(0, sigma_theta), all independent.
pub fn sample_lorentz<R: Rng + ?Sized>(rng: &mut R, sigma_zeta: f64, sigma_theta: f64) -> LorentzAlgebraElement {
    let dz = normal(sigma_zeta);
    let dt = normal(sigma_theta);
    let zeta = Vector3::new(dz.sample(rng), dz.sample(rng), dz.sample(rng));
    let theta = Vector3::new(dt.sample(rng), dt.sample(rng), dt.sample(rng));
    LorentzAlgebraElement { zeta, theta }
}

/// Synthetic data for one trial.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub truth: LorentzAlgebraElement,
    pub frame_a: Vec<FourVector>,
    pub frame_b: Vec<FourVector>,
}

/// Draws a transformation, frame-A vectors and the noisy frame-B
/// measurements from one generator, in that order.
pub fn generate_trial<R: Rng + ?Sized>(rng: &mut R, n: usize, eps: f64, cfg: &BenchConfig) -> TrialData {
    let truth = sample_lorentz(rng, cfg.sigma_zeta, cfg.sigma_theta);
    let lambda = exp_lorentz(&truth);
    let frame_a = sample_unit_timelike(rng, n, cfg.vector_sigma);
    let frame_b = if cfg.noise_after_boost {
        let boosted: Vec<_> = frame_a.iter().map(|v| lambda.apply(v)).collect();
        perturb(&boosted, eps, rng)
    } else {
        perturb(&frame_a, eps, rng)
            .iter()
            .map(|v| lambda.apply(v))
            .collect()
    };
    TrialData {
        truth,
        frame_a,
        frame_b,
    }
}

struct Task {
    n: usize,
    eps: f64,
    trial_id: usize,
}

fn run_trial(task: &Task, cfg: &BenchConfig) -> Vec<TrialRecord> {
    let seed = trial_seed(cfg.seed, task.n, task.eps, task.trial_id);
    let data = generate_trial(&mut trial_rng(seed), task.n, task.eps, cfg);
    let x = vectors_to_matrix(&data.frame_a);
    let y = vectors_to_matrix(&data.frame_b);
    let truth = exp_lorentz(&data.truth);

    cfg.methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let outcome = align(method, &x, &y, &cfg.solver);
            let elapsed = start.elapsed().as_secs_f64();
            let (estimate, converged) = match outcome {
                Ok(r) => (Some(r), true),
                Err(Error::NonConvergence { best }) => (Some(*best), false),
                Err(_) => (None, false),
            };
            let (frob_error, max_error) = match estimate {
                Some(r) => {
                    let e = error_norms(r.lambda.matrix(), truth.matrix());
                    (e.frob, e.max_abs)
                }
                None => (f64::INFINITY, f64::INFINITY),
            };
            TrialRecord {
                trial_id: task.trial_id,
                n: task.n,
                eps: task.eps,
                method,
                frob_error,
                max_error,
                wall_time: if cfg.disable_timing { 0.0 } else { elapsed },
                converged,
                seed_used: seed,
            }
        })
        .collect()
}

fn warm_up(n: usize, eps: f64, cfg: &BenchConfig) {
    let data = generate_trial(&mut trial_rng(trial_seed(cfg.seed, n, eps, 0)), n, eps, cfg);
    let x = vectors_to_matrix(&data.frame_a);
    let y = vectors_to_matrix(&data.frame_b);
    for &method in &cfg.methods {
        for _ in 0..WARMUP_CALLS {
            let _ = std::hint::black_box(align(method, &x, &y, &cfg.solver));
        }
    }
}

/// Runs the whole grid. Output is ordered by (n, eps, trial, method) and
/// every field except `wall_time` is independent of thread count.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let mut records = Vec::with_capacity(cfg.n_vectors.len() * cfg.noise_eps.len() * cfg.trials * cfg.methods.len());
    for &n in &cfg.n_vectors {
        for &eps in &cfg.noise_eps {
            if !cfg.disable_timing {
                warm_up(n, eps, cfg);
            }
            let cell: Vec<Vec<TrialRecord>> = (0..cfg.trials)
                .into_par_iter()
                .map(|trial_id| run_trial(&Task { n, eps, trial_id }, cfg))
                .collect();
            records.extend(cell.into_iter().flatten());
        }
    }
    Ok(records)
}

/// Per-(n, eps, method) statistics over converged trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub eps: f64,
    pub method: Method,
    pub median_frob: f64,
    pub p5_frob: f64,
    pub p95_frob: f64,
    pub median_max: f64,
    pub mean_time_s: f64,
    pub median_time_s: f64,
    pub trials: usize,
    pub converged: usize,
}

/// Linear-interpolation percentile of sorted data, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Groups records by (n, eps, method) in first-appearance order. Error
/// statistics cover converged trials only; NaN when none converged.
pub fn summarize(records: &[TrialRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::Empty("benchmark records"));
    }
    let mut keys: Vec<(usize, u64, Method)> = Vec::new();
    for r in records {
        let key = (r.n, r.eps.to_bits(), r.method);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    Ok(keys
        .into_iter()
        .map(|(n, eps_bits, method)| {
            let cell: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.n == n && r.eps.to_bits() == eps_bits && r.method == method)
                .collect();
            let ok: Vec<&&TrialRecord> = cell.iter().filter(|r| r.converged).collect();
            let frob = sorted(ok.iter().map(|r| r.frob_error).collect());
            let max = sorted(ok.iter().map(|r| r.max_error).collect());
            let times = sorted(cell.iter().map(|r| r.wall_time).collect());
            SummaryRow {
                n,
                eps: f64::from_bits(eps_bits),
                method,
                median_frob: percentile(&frob, 0.5),
                p5_frob: percentile(&frob, 0.05),
                p95_frob: percentile(&frob, 0.95),
                median_max: percentile(&max, 0.5),
                mean_time_s: times.iter().sum::<f64>() / times.len() as f64,
                median_time_s: percentile(&times, 0.5),
                trials: cell.len(),
                converged: ok.len(),
            }
        })
        .collect())
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn write_trials_csv<W: Write>(mut w: W, records: &[TrialRecord]) -> io::Result<()> {
    writeln!(w, "{TRIAL_CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.trial_id,
            r.n,
            format_float(r.eps),
            r.method,
            format_float(r.frob_error),
            format_float(r.max_error),
            format_float(r.wall_time),
            r.converged,
            r.seed_used
        )?;
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(mut w: W, rows: &[SummaryRow]) -> io::Result<()> {
    writeln!(w, "{SUMMARY_CSV_HEADER}")?;
    for s in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            s.n,
            format_float(s.eps),
            s.method,
            format_float(s.median_frob),
            format_float(s.p5_frob),
            format_float(s.p95_frob),
            format_float(s.median_max),
            format_float(s.mean_time_s)
        )?;
    }
    Ok(())
}
