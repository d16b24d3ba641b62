//! Synthetic line-spectral instances, accuracy metrics, the Cramer-Rao
//! bound, and Monte-Carlo trial orchestration.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::circular::{circular_distance, wrap_angle};
use crate::engine::{run, EngineConfig, Mode};
use crate::error::{invalid, Result, ValseError};
use crate::freq::MeasurementSet;

const MAX_REJECTIONS: usize = 10_000;
/// Default spread of the amplitude magnitudes around their unit mean:
/// standard deviation `sqrt(0.1)`, i.e. variance 0.1.
pub const DEFAULT_AMP_STD: f64 = 0.316_227_766_016_837_94;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenConfig {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    /// Minimum wrap-around separation, or the exact spacing when
    /// `exact_separation` is set.
    pub delta_omega: f64,
    pub snr_db: f64,
    pub exact_separation: bool,
    /// Standard deviation of the amplitude magnitudes (mean 1, negative
    /// draws rejected).
    pub amp_std: f64,
}

impl GenConfig {
    /// Minimum-separation mode with the default amplitude spread.
    pub fn new(n: usize, m: usize, k: usize, delta_omega: f64, snr_db: f64) -> Self {
        Self {
            n,
            m,
            k,
            delta_omega,
            snr_db,
            exact_separation: false,
            amp_std: DEFAULT_AMP_STD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.m > self.n {
            return invalid(format!("need 1 <= M <= N, got N = {}, M = {}", self.n, self.m));
        }
        if !(self.delta_omega >= 0.0) || !self.snr_db.is_finite() {
            return invalid("separation must be >= 0 and SNR finite");
        }
        if !(self.amp_std >= 0.0 && self.amp_std.is_finite()) {
            return invalid(format!("amplitude spread must be >= 0, got {}", self.amp_std));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub omegas: Vec<f64>,
    pub alphas: Vec<Complex64>,
    pub n: usize,
    pub indices: Vec<usize>,
    pub nu: f64,
    pub snr_db: f64,
    /// Noiseless signal over `0..N`.
    pub x: Vec<Complex64>,
}

impl GroundTruth {
    pub fn k(&self) -> usize {
        self.omegas.len()
    }
}

/// `x_n = sum_k alpha_k e^{j omega_k n}`, `n = 0..N-1`.
pub fn superposition(omegas: &[f64], alphas: &[Complex64], n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|t| {
            omegas
                .iter()
                .zip(alphas)
                .map(|(&w, &a)| a * Complex64::from_polar(1.0, w * t as f64))
                .sum()
        })
        .collect()
}

fn draw_frequencies(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Result<Vec<f64>> {
    if cfg.k == 0 {
        return Ok(Vec::new());
    }
    if cfg.exact_separation {
        let w1 = rng.random_range(-PI..PI);
        return Ok((0..cfg.k)
            .map(|k| wrap_angle(w1 + k as f64 * cfg.delta_omega))
            .collect());
    }
    let mut omegas: Vec<f64> = Vec::with_capacity(cfg.k);
    let mut rejections = 0;
    while omegas.len() < cfg.k {
        let w = rng.random_range(-PI..PI);
        if omegas.iter().all(|&o| circular_distance(o, w) >= cfg.delta_omega) {
            omegas.push(w);
        } else {
            rejections += 1;
            if rejections >= MAX_REJECTIONS {
                return Err(ValseError::Generation(format!(
                    "could not place {} frequencies {} apart",
                    cfg.k, cfg.delta_omega
                )));
            }
        }
    }
    Ok(omegas)
}

fn draw_amplitude(rng: &mut ChaCha8Rng, std: f64) -> Complex64 {
    let mag = Normal::new(1.0, std).expect("valid normal");
    let r = loop {
        let v: f64 = mag.sample(rng);
        if v > 0.0 {
            break v;
        }
    };
    Complex64::from_polar(r, rng.random_range(-PI..PI))
}

fn draw_indices(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<usize> {
    if m == n {
        return (0..n).collect();
    }
    let mut idx = rand::seq::index::sample(rng, n, m).into_vec();
    idx.sort_unstable();
    idx
}

fn add_noise(rng: &mut ChaCha8Rng, clean: &[Complex64], nu: f64) -> Vec<Complex64> {
    let g = Normal::new(0.0, (nu / 2.0).sqrt()).expect("valid normal");
    clean
        .iter()
        .map(|v| v + Complex64::new(g.sample(rng), g.sample(rng)))
        .collect()
}

/// Random instance. The noise variance is set from the realized signal so
/// that `||x_M||^2 / (M nu)` equals the target SNR (unit signal power is
/// assumed when `K = 0`).
pub fn gen_instance(cfg: &GenConfig, seed: u64) -> Result<(GroundTruth, MeasurementSet)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omegas = draw_frequencies(&mut rng, cfg)?;
    let alphas: Vec<Complex64> = (0..cfg.k).map(|_| draw_amplitude(&mut rng, cfg.amp_std)).collect();
    let indices = draw_indices(&mut rng, cfg.n, cfg.m);
    let x = superposition(&omegas, &alphas, cfg.n);
    let observed: Vec<Complex64> = indices.iter().map(|&i| x[i]).collect();
    let power = if cfg.k == 0 {
        1.0
    } else {
        observed.iter().map(|v| v.norm_sqr()).sum::<f64>() / cfg.m as f64
    };
    let nu = power / 10f64.powf(cfg.snr_db / 10.0);
    let y = add_noise(&mut rng, &observed, nu);
    let mset = MeasurementSet::new(indices.clone(), cfg.n, y)?;
    Ok((
        GroundTruth {
            omegas,
            alphas,
            n: cfg.n,
            indices,
            nu,
            snr_db: cfg.snr_db,
            x,
        },
        mset,
    ))
}

/// Pure noise of variance `nu` on a random index set.
pub fn gen_noise_only(n: usize, m: usize, nu: f64, seed: u64) -> Result<(GroundTruth, MeasurementSet)> {
    if !(nu > 0.0) {
        return invalid(format!("noise variance must be > 0, got {nu}"));
    }
    if m == 0 || m > n {
        return invalid(format!("need 1 <= M <= N, got N = {n}, M = {m}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices = draw_indices(&mut rng, n, m);
    let y = add_noise(&mut rng, &vec![Complex64::default(); m], nu);
    let mset = MeasurementSet::new(indices.clone(), n, y)?;
    Ok((
        GroundTruth {
            omegas: Vec::new(),
            alphas: Vec::new(),
            n,
            indices,
            nu,
            snr_db: f64::NEG_INFINITY,
            x: vec![Complex64::default(); n],
        },
        mset,
    ))
}

/// `||x_hat - x||^2 / ||x||^2`.
pub fn nmse(x_hat: &[Complex64], x: &[Complex64]) -> Result<f64> {
    if x_hat.len() != x.len() {
        return invalid(format!("lengths differ: {} vs {}", x_hat.len(), x.len()));
    }
    let power: f64 = x.iter().map(|v| v.norm_sqr()).sum();
    if !(power > 0.0) {
        return invalid("reference signal is zero");
    }
    let err: f64 = x_hat.iter().zip(x).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok(err / power)
}

/// Minimum-cost perfect matching on a square cost matrix (Hungarian
/// method with row/column potentials). Returns the column assigned to each row.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based internal arrays; index 0 is the virtual start column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    assignment
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// `assignment[i]` is the true component matched to estimate `i`.
    pub assignment: Vec<usize>,
    pub sq_errors: Vec<f64>,
    pub total: f64,
}

/// Pair estimates with true frequencies minimizing the total squared
/// wrap-around distance.
pub fn match_components(est: &[f64], truth: &[f64]) -> Result<Matching> {
    if est.len() != truth.len() {
        return invalid(format!("{} estimates for {} true frequencies", est.len(), truth.len()));
    }
    let cost: Vec<Vec<f64>> = est
        .iter()
        .map(|&a| truth.iter().map(|&b| circular_distance(a, b).powi(2)).collect())
        .collect();
    let assignment = hungarian(&cost);
    let sq_errors: Vec<f64> = assignment.iter().enumerate().map(|(i, &j)| cost[i][j]).collect();
    let total = sq_errors.iter().sum();
    Ok(Matching {
        assignment,
        sq_errors,
        total,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crlb {
    /// Lower bound on the variance of each frequency estimate.
    pub freq_var: Vec<f64>,
    /// Lower bound on `E||x_hat - x||^2 / ||x||^2` over the full signal.
    pub nmse: f64,
}

/// Jacobian of `alpha_k e^{j omega_k t}` over `times` with respect to
/// `(omega_k, Re alpha_k, Im alpha_k)` for every `k`.
pub fn signal_jacobian(omegas: &[f64], alphas: &[Complex64], times: &[usize]) -> DMatrix<Complex64> {
    let k = omegas.len();
    let j = Complex64::new(0.0, 1.0);
    DMatrix::from_fn(times.len(), 3 * k, |r, c| {
        let comp = c / 3;
        let t = times[r] as f64;
        let e = Complex64::from_polar(1.0, omegas[comp] * t);
        match c % 3 {
            0 => j * t * alphas[comp] * e,
            1 => e,
            _ => j * e,
        }
    })
}

/// Bound for the deterministic model with known order and noise variance.
pub fn crlb(gt: &GroundTruth) -> Result<Crlb> {
    let k = gt.k();
    if k == 0 {
        return invalid("the bound needs at least one component");
    }
    let d = signal_jacobian(&gt.omegas, &gt.alphas, &gt.indices);
    let fim = (d.adjoint() * &d).map(|v| v.re * 2.0 / gt.nu);
    let chol = fim
        .clone()
        .cholesky()
        .ok_or_else(|| ValseError::Singular("Fisher information is singular".into()))?;
    let inv = chol.inverse();
    let freq_var: Vec<f64> = (0..k).map(|c| inv[(3 * c, 3 * c)]).collect();
    let all: Vec<usize> = (0..gt.n).collect();
    let g = signal_jacobian(&gt.omegas, &gt.alphas, &all);
    let gram = (g.adjoint() * &g).map(|v| v.re);
    let trace = (gram * inv).trace();
    let power: f64 = gt.x.iter().map(|v| v.norm_sqr()).sum();
    Ok(Crlb {
        freq_var,
        nmse: trace / power,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub gen: GenConfig,
    pub engine: EngineConfig,
    pub trials: usize,
    pub base_seed: u64,
    /// Worker threads; `None` uses all available.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    pub k: usize,
    pub k_hat: usize,
    pub success: bool,
    /// `NaN` when the true signal is zero.
    pub nmse: f64,
    /// Matched squared frequency errors, success trials only.
    pub freq_sq_errors: Option<Vec<f64>>,
    /// Mean frequency-variance bound over components, `NaN` when `K = 0`.
    pub crlb_freq_var: f64,
    pub crlb_nmse: f64,
    pub iters: usize,
    pub converged: bool,
    pub runtime: Duration,
}

pub fn run_trial(gen: &GenConfig, engine: &EngineConfig, seed: u64) -> Result<TrialRecord> {
    let (gt, mset) = gen_instance(gen, seed)?;
    let start = Instant::now();
    let res = run(&mset, engine)?;
    let runtime = start.elapsed();
    let k = gt.k();
    let success = res.k_hat == k;
    let nmse_value = if k == 0 { f64::NAN } else { nmse(&res.x_hat, &gt.x)? };
    let freq_sq_errors = if success && k > 0 {
        Some(match_components(&res.freqs, &gt.omegas)?.sq_errors)
    } else {
        None
    };
    let (crlb_freq_var, crlb_nmse) = if k == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let b = crlb(&gt)?;
        (b.freq_var.iter().sum::<f64>() / k as f64, b.nmse)
    };
    Ok(TrialRecord {
        seed,
        k,
        k_hat: res.k_hat,
        success,
        nmse: nmse_value,
        freq_sq_errors,
        crlb_freq_var,
        crlb_nmse,
        iters: res.iters,
        converged: res.converged,
        runtime,
    })
}

/// Trials `base_seed + t`, `t = 0..trials`, in trial order.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.gen.validate()?;
    cfg.engine.validate(cfg.gen.n)?;
    let seeds: Vec<u64> = (0..cfg.trials as u64).map(|t| cfg.base_seed.wrapping_add(t)).collect();
    let work = || -> Result<Vec<TrialRecord>> {
        seeds
            .par_iter()
            .map(|&s| run_trial(&cfg.gen, &cfg.engine, s))
            .collect()
    };
    match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| ValseError::InvalidArgument(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub n_trials: usize,
    pub success_rate: f64,
    /// `10 log10` of the mean NMSE; `NaN` if undefined.
    pub nmse_db: f64,
    /// RMSE of matched frequencies over success trials; `NaN` without any.
    pub freq_rmse: f64,
    pub crlb_freq_rmse: f64,
    pub crlb_nmse_db: f64,
    pub mean_runtime_ms: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

pub fn aggregate(records: &[TrialRecord]) -> Aggregate {
    let n = records.len();
    let successes = records.iter().filter(|r| r.success).count();
    let sq: Vec<f64> = records
        .iter()
        .filter_map(|r| r.freq_sq_errors.as_ref())
        .flatten()
        .copied()
        .collect();
    Aggregate {
        n_trials: n,
        success_rate: if n == 0 { f64::NAN } else { successes as f64 / n as f64 },
        nmse_db: 10.0 * mean(records.iter().map(|r| r.nmse).filter(|v| v.is_finite())).log10(),
        freq_rmse: mean(sq.into_iter()).sqrt(),
        crlb_freq_rmse: mean(records.iter().map(|r| r.crlb_freq_var).filter(|v| v.is_finite())).sqrt(),
        crlb_nmse_db: 10.0 * mean(records.iter().map(|r| r.crlb_nmse).filter(|v| v.is_finite())).log10(),
        mean_runtime_ms: mean(records.iter().map(|r| r.runtime.as_secs_f64() * 1e3)),
    }
}

/// One point of a parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub var: &'static str,
    pub value: f64,
    pub gen: GenConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// SNR sweep, complete data, N = M = 21, K = 5.
    Fig5,
    /// Measurement-count sweep, N = 20, K = 3, 10 dB.
    Fig6,
    /// Exact-separation sweep, N = M = 51, K = 2, 10 dB.
    Fig7,
    /// Runtime against problem size at 20 dB.
    Scaling,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "fig5" => Ok(Self::Fig5),
            "fig6" => Ok(Self::Fig6),
            "fig7" => Ok(Self::Fig7),
            "scaling" => Ok(Self::Scaling),
            other => invalid(format!("unknown preset '{other}'")),
        }
    }

    pub fn points(self) -> Vec<SweepPoint> {
        let sep = |n: usize| 2.0 * PI / n as f64;
        match self {
            Self::Fig5 => [-5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0]
                .into_iter()
                .map(|snr| SweepPoint {
                    var: "snr_db",
                    value: snr,
                    gen: GenConfig::new(21, 21, 5, sep(21), snr),
                })
                .collect(),
            Self::Fig6 => [6usize, 8, 10, 12, 14, 16, 18, 20]
                .into_iter()
                .map(|m| SweepPoint {
                    var: "m",
                    value: m as f64,
                    gen: GenConfig::new(20, m, 3, sep(20), 10.0),
                })
                .collect(),
            Self::Fig7 => [0.1, 0.2, 0.3, 0.4, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0]
                .into_iter()
                .map(|f| SweepPoint {
                    var: "delta_omega_bins",
                    value: f,
                    gen: GenConfig {
                        exact_separation: true,
                        ..GenConfig::new(51, 51, 2, f * sep(51), 10.0)
                    },
                })
                .collect(),
            Self::Scaling => [(25usize, 15usize, 2usize), (51, 30, 4), (75, 45, 6), (100, 60, 8), (200, 120, 16)]
                .into_iter()
                .map(|(n, m, k)| SweepPoint {
                    var: "n",
                    value: n as f64,
                    gen: GenConfig::new(n, m, k, sep(n), 20.0),
                })
                .collect(),
        }
    }
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Full => "full",
        Mode::Point => "point",
    }
}
