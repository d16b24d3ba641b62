//! The estimation loop: sequential initialization, then rounds of support
//! detection, hyperparameter updates and frequency-posterior updates until
//! the reconstructed signal settles.

use std::f64::consts::PI;

use log::{debug, info};
use num_complex::Complex64;

use crate::circular::VmParam;
use crate::error::{invalid, Result};
use crate::freq::{
    eta_for_component, heuristic1, heuristic2, noncoherent_factors, point_frequency_update,
    FreqFactorSet, FreqPosterior, MeasurementSet, PosteriorShape,
};
use crate::hyperparams::{
    init_hyperparams, noise_statistic, nu_floor, update_noise_var, update_rho_tau, Hyperparams,
};
use crate::support::{
    apply_activate, build_gram, delta_activate, maximize_support, GramData, SupportState,
};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Heuristic {
    /// D-component von Mises mixture.
    H1,
    /// Single von Mises.
    H2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Full frequency posteriors.
    Full,
    /// Point estimates of the frequencies (`a_i = a(theta_i)`).
    Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub heuristic: Heuristic,
    /// Mixture size for [`Heuristic::H1`].
    pub d: usize,
    pub mode: Mode,
    pub max_iters: usize,
    pub rel_tol: f64,
    /// Frequency prior per component; `None` means uniform for all.
    pub priors: Option<Vec<VmParam>>,
    pub learn_beta: bool,
    /// Starting (or, with `learn_beta = false`, fixed) hyperparameters.
    /// `None` derives them from the data.
    pub beta: Option<Hyperparams>,
    /// Evaluate the lower bound after every iteration (quadrature, slow).
    pub track_elbo: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            heuristic: Heuristic::H2,
            d: 50,
            mode: Mode::Full,
            max_iters: 5000,
            rel_tol: 1e-6,
            priors: None,
            learn_beta: true,
            beta: None,
            track_elbo: false,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.max_iters < 1 {
            return invalid("max_iters must be >= 1");
        }
        if !(self.rel_tol > 0.0) {
            return invalid(format!("rel_tol must be > 0, got {}", self.rel_tol));
        }
        if self.d < 1 {
            return invalid("D must be >= 1");
        }
        if let Some(p) = &self.priors {
            if p.len() != n {
                return invalid(format!("{} priors given for N = {n} components", p.len()));
            }
        }
        Ok(())
    }

    fn prior(&self, i: usize) -> VmParam {
        self.priors.as_ref().map_or_else(VmParam::uniform, |p| p[i])
    }
}

#[derive(Debug, Clone)]
pub struct EngineState {
    pub mset: MeasurementSet,
    pub posteriors: Vec<FreqPosterior>,
    /// `a_i = E[a(Theta_i)]` over the measurement indices.
    pub moments: Vec<Vec<Complex64>>,
    pub support: SupportState,
    pub gram: GramData,
    pub beta: Hyperparams,
    pub x_hat: Vec<Complex64>,
    pub iteration: usize,
    /// Support bits flipped by each iteration's search.
    pub flips: Vec<usize>,
}

impl EngineState {
    pub fn n(&self) -> usize {
        self.mset.signal_len()
    }

    /// `eta_i` for the current state.
    pub fn eta_for_component(&self, i: usize) -> Result<Vec<Complex64>> {
        eta_for_component(
            i,
            self.mset.samples(),
            self.support.active(),
            self.support.w_hat(),
            self.support.c_hat(),
            &self.moments,
            self.beta.nu,
        )
    }
}

#[derive(Debug, Clone)]
pub struct EstimationResult {
    pub k_hat: usize,
    /// Active components' frequencies in `[-pi, pi)`, ordered by component index.
    pub freqs: Vec<f64>,
    pub amps: Vec<Complex64>,
    pub posteriors: Vec<FreqPosterior>,
    pub x_hat: Vec<Complex64>,
    pub beta: Hyperparams,
    pub iters: usize,
    pub converged: bool,
    pub flips: Vec<usize>,
    pub elbo: Vec<f64>,
}

fn reduce(fset: &FreqFactorSet, config: &EngineConfig, grid: usize, previous: Option<&FreqPosterior>) -> Result<FreqPosterior> {
    Ok(match config.mode {
        Mode::Full => match config.heuristic {
            Heuristic::H1 => heuristic1(fset, config.d)?,
            Heuristic::H2 => heuristic2(fset),
        },
        Mode::Point => {
            let est = point_frequency_update(fset, grid);
            if est.degenerate {
                match previous {
                    Some(p) => p.clone(),
                    None => FreqPosterior::new(PosteriorShape::Point(0.0)),
                }
            } else {
                FreqPosterior::new(PosteriorShape::Point(est.theta))
            }
        }
    })
}

/// Sequential start: component `i` gets the noncoherent posterior of the
/// residual left by components `0..i`, reduced with Heuristic 2, and is
/// activated immediately.
pub fn initialize(mset: &MeasurementSet, config: &EngineConfig) -> Result<EngineState> {
    let n = mset.signal_len();
    config.validate(n)?;
    let m = mset.len();
    let beta = match config.beta {
        Some(b) => b,
        None => init_hyperparams(mset)?,
    };
    let indices = mset.indices().to_vec();
    let y = mset.samples();

    let mut moments = vec![vec![ZERO; m]; n];
    let mut gram = build_gram(&moments, mset)?;
    let mut posteriors = Vec::with_capacity(n);
    let mut support = SupportState::empty(n);
    let mut resid = y.to_vec();

    for i in 0..n {
        let residual = mset.with_samples(resid.clone())?;
        let mut fset = noncoherent_factors(&residual, beta.nu)?;
        fset.prior = config.prior(i);
        let post = heuristic2(&fset);
        let post = match config.mode {
            Mode::Full => post,
            Mode::Point => FreqPosterior::new(PosteriorShape::Point(post.point_estimate())),
        };
        moments[i] = post.moments(&indices);
        posteriors.push(post);
        gram.update_component(i, &moments, y);

        let (_, u, v) = delta_activate(i, &support, &gram, &beta)?;
        support = apply_activate(i, u, v, &support, &gram, &beta)?;
        resid.copy_from_slice(y);
        for (&k, &w) in support.active().iter().zip(support.w_hat()) {
            for (r, a) in resid.iter_mut().zip(&moments[k]) {
                *r -= w * a;
            }
        }
    }

    let mut state = EngineState {
        mset: mset.clone(),
        posteriors,
        moments,
        support,
        gram,
        beta,
        x_hat: Vec::new(),
        iteration: 0,
        flips: Vec::new(),
    };
    state.x_hat = reconstruct(&state);
    Ok(state)
}

/// One round: support search, hyperparameters, then each active
/// component's frequency posterior in increasing index order.
pub fn iterate(mut state: EngineState, config: &EngineConfig) -> Result<EngineState> {
    let search = maximize_support(state.support.support(), &state.gram, &state.beta)?;
    state.flips.push(search.flips);
    state.support = search.state;

    if config.learn_beta {
        let nu = update_noise_var(&state.mset, &state.support, &state.gram, &state.moments);
        let (rho, tau) = update_rho_tau(&state.support, state.beta.tau);
        state.beta = Hyperparams::new(nu, rho, tau)?;
    }

    let n = state.n();
    let grid = 8 * n;
    let indices = state.mset.indices().to_vec();
    let mut order: Vec<usize> = state.support.active().to_vec();
    order.sort_unstable();
    for i in order {
        let eta = state.eta_for_component(i)?;
        let fset = FreqFactorSet::from_eta(config.prior(i), &state.mset, &eta)?;
        let post = reduce(&fset, config, grid, Some(&state.posteriors[i]))?;
        state.moments[i] = post.moments(&indices);
        state.posteriors[i] = post;
        state.gram.update_component(i, &state.moments, state.mset.samples());
    }

    state.iteration += 1;
    state.x_hat = reconstruct(&state);
    Ok(state)
}

/// `x_n = sum_{i active} w_i E[e^{j n Theta_i}]`, `n = 0..N-1`.
pub fn reconstruct(state: &EngineState) -> Vec<Complex64> {
    let n = state.n();
    let all: Vec<usize> = (0..n).collect();
    let mut x = vec![ZERO; n];
    for (&i, &w) in state.support.active().iter().zip(state.support.w_hat()) {
        for (xn, mom) in x.iter_mut().zip(state.posteriors[i].moments(&all)) {
            *xn += w * mom;
        }
    }
    x
}

fn relative_change(new: &[Complex64], old: &[Complex64]) -> f64 {
    let diff: f64 = new.iter().zip(old).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let base: f64 = old.iter().map(|b| b.norm_sqr()).sum::<f64>().sqrt();
    if base == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / base
    }
}

/// Full estimation from data to result.
pub fn run(mset: &MeasurementSet, config: &EngineConfig) -> Result<EstimationResult> {
    let mut state = initialize(mset, config)?;
    let mut converged = false;
    let mut elbo = Vec::new();
    for t in 0..config.max_iters {
        let prev = state.x_hat.clone();
        state = iterate(state, config)?;
        if config.track_elbo {
            elbo.push(elbo_diagnostic(&state));
        }
        let change = relative_change(&state.x_hat, &prev);
        debug!(
            "iteration {}: K = {}, flips = {}, change = {change:.3e}",
            t + 1,
            state.support.size(),
            state.flips.last().copied().unwrap_or(0)
        );
        if change < config.rel_tol {
            converged = true;
            break;
        }
    }
    info!(
        "finished after {} iterations (converged: {converged}), K = {}",
        state.iteration,
        state.support.size()
    );
    Ok(finish(state, converged, elbo))
}

fn finish(state: EngineState, converged: bool, elbo: Vec<f64>) -> EstimationResult {
    let mut active: Vec<(usize, Complex64)> = state
        .support
        .active()
        .iter()
        .copied()
        .zip(state.support.w_hat().iter().copied())
        .collect();
    active.sort_by_key(|a| a.0);
    EstimationResult {
        k_hat: active.len(),
        freqs: active.iter().map(|&(i, _)| state.posteriors[i].point_estimate()).collect(),
        amps: active.iter().map(|a| a.1).collect(),
        posteriors: active.iter().map(|&(i, _)| state.posteriors[i].clone()).collect(),
        x_hat: state.x_hat,
        beta: state.beta,
        iters: state.iteration,
        converged,
        flips: state.flips,
        elbo,
    }
}

const KL_GRID: usize = 1 << 12;

/// `KL(q || p)` by trapezoid quadrature; zero for a point mass.
fn kl_to_prior(post: &FreqPosterior, prior: &VmParam) -> f64 {
    if matches!(post.shape(), PosteriorShape::Point(_)) {
        return 0.0;
    }
    let h = 2.0 * PI / KL_GRID as f64;
    (0..KL_GRID)
        .map(|k| {
            let t = -PI + h * k as f64;
            let lq = post.log_pdf(t).unwrap_or(f64::NEG_INFINITY);
            if lq == f64::NEG_INFINITY {
                return 0.0;
            }
            let lp = crate::circular::vm_log_pdf(t, prior);
            lq.exp() * (lq - lp) * h
        })
        .sum()
}

/// Lower bound on the log evidence under the current surrogate posterior,
/// with inactive components' frequency posteriors taken equal to their priors.
pub fn elbo_diagnostic(state: &EngineState) -> f64 {
    elbo_with_priors(state, &EngineConfig::default())
}

/// As [`elbo_diagnostic`] with the configured frequency priors.
pub fn elbo_with_priors(state: &EngineState, config: &EngineConfig) -> f64 {
    let m = state.mset.len() as f64;
    let n = state.n() as f64;
    let Hyperparams { nu, rho, tau } = state.beta;
    let sup = &state.support;
    let k = sup.size() as f64;
    let stat = noise_statistic(&state.mset, sup, &state.gram, &state.moments);
    let second: f64 = sup.w_hat().iter().map(|w| w.norm_sqr()).sum::<f64>()
        + (0..sup.size()).map(|p| sup.c_hat()[(p, p)].re).sum::<f64>();
    let log_det_c = if sup.size() == 0 {
        0.0
    } else {
        match sup.c_hat().clone().cholesky() {
            Some(ch) => {
                let l = ch.l_dirty();
                (0..sup.size()).map(|p| 2.0 * l[(p, p)].re.ln()).sum()
            }
            None => f64::NEG_INFINITY,
        }
    };
    let kl: f64 = sup
        .active()
        .iter()
        .map(|&i| kl_to_prior(&state.posteriors[i], &config.prior(i)))
        .sum();
    let nu = nu.max(nu_floor(&state.mset));
    -m * (PI * nu).ln() - stat / nu - k * (PI * tau).ln() - second / tau
        + k * rho.ln()
        + (n - k) * (1.0 - rho).ln()
        + k * (1.0 + PI.ln())
        + log_det_c
        - kl
}
