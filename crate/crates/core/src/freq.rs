//! Frequency posteriors of the form `p(theta) exp(Re(eta^H a(theta)))` and
//! their reduction to von Mises mixtures (Heuristic 1) or a single von Mises
//! law (Heuristic 2), plus the point-estimate variant.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bessel;
use crate::circular::{
    inv_a_from_deficit, solve_concentration_unchecked, vm_char, wrap_angle, VmMixture, VmParam,
};
use crate::error::{invalid, Result, ValseError};

const TWO_PI: f64 = 2.0 * PI;

/// Observed samples `y_m`, `m` in a strictly increasing index set within
/// `{0, .., N-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    indices: Vec<usize>,
    n: usize,
    y: Vec<Complex64>,
}

impl MeasurementSet {
    pub fn new(indices: Vec<usize>, n: usize, y: Vec<Complex64>) -> Result<Self> {
        if indices.is_empty() {
            return Err(ValseError::Validation("measurement set is empty".into()));
        }
        if indices.len() > n {
            return Err(ValseError::Validation(format!(
                "M = {} exceeds N = {n}",
                indices.len()
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ValseError::Validation(
                "measurement indices must be strictly increasing".into(),
            ));
        }
        if indices[indices.len() - 1] >= n {
            return Err(ValseError::Validation(format!(
                "measurement index {} out of range for N = {n}",
                indices[indices.len() - 1]
            )));
        }
        if y.len() != indices.len() {
            return Err(ValseError::Validation(format!(
                "{} samples for {} indices",
                y.len(),
                indices.len()
            )));
        }
        if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(ValseError::Validation("samples must be finite".into()));
        }
        Ok(Self { indices, n, y })
    }

    /// All `N` samples observed.
    pub fn complete(y: Vec<Complex64>) -> Result<Self> {
        let n = y.len();
        Self::new((0..n).collect(), n, y)
    }

    /// Same index set, different samples.
    pub fn with_samples(&self, y: Vec<Complex64>) -> Result<Self> {
        Self::new(self.indices.clone(), self.n, y)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.y
    }

    /// `M`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `N`.
    pub fn signal_len(&self) -> usize {
        self.n
    }

    pub fn max_index(&self) -> usize {
        self.indices[self.indices.len() - 1]
    }

    pub fn steering(&self, theta: f64) -> Vec<Complex64> {
        steering(self, theta)
    }
}

/// `a(theta) = (e^{j theta m})_{m in M}`.
pub fn steering(mset: &MeasurementSet, theta: f64) -> Vec<Complex64> {
    mset.indices
        .iter()
        .map(|&m| Complex64::from_polar(1.0, theta * m as f64))
        .collect()
}

/// Prior times per-harmonic factors `exp(Re(eta_m^* e^{j m theta}))`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqFactorSet {
    pub prior: VmParam,
    factors: Vec<(u32, Complex64)>,
}

impl FreqFactorSet {
    pub fn new(prior: VmParam, mut factors: Vec<(u32, Complex64)>) -> Result<Self> {
        factors.sort_by_key(|f| f.0);
        if factors.iter().any(|f| f.0 == 0) {
            return invalid("harmonic index 0 is a constant factor and must be dropped");
        }
        if factors.windows(2).any(|w| w[0].0 == w[1].0) {
            return invalid("harmonic indices must be distinct");
        }
        Ok(Self { prior, factors })
    }

    /// Factors from an `eta` vector laid out over the measurement indices;
    /// the `m = 0` entry is dropped.
    pub fn from_eta(prior: VmParam, mset: &MeasurementSet, eta: &[Complex64]) -> Result<Self> {
        if eta.len() != mset.len() {
            return invalid(format!("eta has {} entries, M = {}", eta.len(), mset.len()));
        }
        let factors = mset
            .indices()
            .iter()
            .zip(eta)
            .filter(|(&m, _)| m != 0)
            .map(|(&m, &e)| (m as u32, e))
            .collect();
        Ok(Self { prior, factors })
    }

    /// Factors in increasing harmonic order.
    pub fn factors(&self) -> &[(u32, Complex64)] {
        &self.factors
    }

    fn active_factors(&self) -> impl Iterator<Item = &(u32, Complex64)> {
        self.factors.iter().filter(|(_, e)| e.norm() > 0.0)
    }

    /// `f(theta) = Re(eta_a^* e^{j theta} + sum_m eta_m^* e^{j m theta})`.
    pub fn exponent(&self, theta: f64) -> f64 {
        self.exponent_derivs(theta).0
    }

    /// `(f, f', f'')` at `theta`.
    pub fn exponent_derivs(&self, theta: f64) -> (f64, f64, f64) {
        let mut f = 0.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        let mut add = |m: f64, eta: Complex64| {
            let (kappa, mu) = (eta.norm(), eta.arg());
            let phase = m * theta - mu;
            let (s, c) = phase.sin_cos();
            f += kappa * c;
            d1 -= kappa * m * s;
            d2 -= kappa * m * m * c;
        };
        if !self.prior.is_uniform() {
            add(1.0, self.prior.eta);
        }
        for &(m, eta) in &self.factors {
            add(m as f64, eta);
        }
        (f, d1, d2)
    }

    pub fn is_flat(&self) -> bool {
        self.prior.is_uniform() && self.active_factors().next().is_none()
    }
}

/// Reduced representation of a frequency posterior.
#[derive(Debug, Clone, PartialEq)]
pub enum PosteriorShape {
    Mixture(VmMixture),
    Single(VmParam),
    /// Dirac mass at the given angle.
    Point(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreqPosterior {
    shape: PosteriorShape,
    theta_hat: f64,
}

impl FreqPosterior {
    pub fn new(shape: PosteriorShape) -> Self {
        let theta_hat = match &shape {
            PosteriorShape::Point(t) => wrap_angle(*t),
            PosteriorShape::Single(p) => p.mu(),
            PosteriorShape::Mixture(mix) => {
                let m1 = mix.moment(1);
                if m1.norm() == 0.0 {
                    0.0
                } else {
                    wrap_angle(m1.arg())
                }
            }
        };
        Self { shape, theta_hat }
    }

    pub fn uniform() -> Self {
        Self::new(PosteriorShape::Single(VmParam::uniform()))
    }

    pub fn shape(&self) -> &PosteriorShape {
        &self.shape
    }

    /// Mean direction of `e^{j Theta}`, in `[-pi, pi)`.
    pub fn point_estimate(&self) -> f64 {
        self.theta_hat
    }

    /// `E[e^{j n Theta}]`.
    pub fn moment(&self, n: i64) -> Complex64 {
        match &self.shape {
            PosteriorShape::Point(t) => Complex64::from_polar(1.0, n as f64 * t),
            PosteriorShape::Single(p) => vm_char(p, n),
            PosteriorShape::Mixture(mix) => mix.moment(n),
        }
    }

    /// Moments at every index of `indices` (non-negative), batched so the
    /// Bessel ratios are evaluated once per component.
    pub fn moments(&self, indices: &[usize]) -> Vec<Complex64> {
        let top = indices.iter().copied().max().unwrap_or(0) as u32;
        let single = |p: &VmParam, weight: f64, out: &mut [Complex64]| {
            let ratios = bessel::ratios_up_to(top, p.kappa());
            let mu = p.eta.arg();
            for (o, &n) in out.iter_mut().zip(indices) {
                *o += Complex64::from_polar(weight * ratios[n], n as f64 * mu);
            }
        };
        let mut out = vec![Complex64::new(0.0, 0.0); indices.len()];
        match &self.shape {
            PosteriorShape::Point(t) => {
                for (o, &n) in out.iter_mut().zip(indices) {
                    *o = Complex64::from_polar(1.0, n as f64 * t);
                }
            }
            PosteriorShape::Single(p) => single(p, 1.0, &mut out),
            PosteriorShape::Mixture(mix) => {
                for (w, p) in mix.components() {
                    single(p, *w, &mut out);
                }
            }
        }
        out
    }

    /// Log-density at `theta`; `None` for a point mass.
    pub fn log_pdf(&self, theta: f64) -> Option<f64> {
        match &self.shape {
            PosteriorShape::Point(_) => None,
            PosteriorShape::Single(p) => Some(crate::circular::vm_log_pdf(theta, p)),
            PosteriorShape::Mixture(mix) => Some(mix.pdf(theta).ln()),
        }
    }
}

/// `E[e^{j n Theta}]` under `post`.
pub fn posterior_moment(post: &FreqPosterior, n: i64) -> Complex64 {
    post.moment(n)
}

/// The unwrapped offsets `kappa~ e^{j (mu + 2 pi r)/m}`, `r = 0..m-1`.
fn unwrapped_offsets(m: u32, eta: Complex64) -> (f64, f64) {
    let kt = solve_concentration_unchecked(m, eta.norm());
    (kt, eta.arg())
}

/// Greedy reduction keeping at most `d` mixture components after each
/// harmonic is folded in (harmonics visited in increasing order).
pub fn heuristic1(fset: &FreqFactorSet, d: usize) -> Result<FreqPosterior> {
    if d == 0 {
        return invalid("D must be >= 1");
    }
    let mut cands = vec![fset.prior.eta];
    for &(m, eta) in fset.active_factors() {
        let (kt, mu) = unwrapped_offsets(m, eta);
        let offsets: Vec<Complex64> = (0..m)
            .map(|r| Complex64::from_polar(kt, (mu + TWO_PI * r as f64) / m as f64))
            .collect();
        let mut next: Vec<Complex64> = Vec::with_capacity(cands.len() * offsets.len());
        for c in &cands {
            next.extend(offsets.iter().map(|o| c + o));
        }
        if next.len() > d {
            // Stable sort: equal magnitudes keep the lower candidate index.
            next.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
            next.truncate(d);
        }
        cands = next;
    }
    let entries = cands
        .into_iter()
        .map(|xi| {
            let k = xi.norm();
            (bessel::log_i0_scaled(k) + k, VmParam::new(xi))
        })
        .collect();
    Ok(FreqPosterior::new(PosteriorShape::Mixture(
        VmMixture::from_log_weights(entries)?,
    )))
}

/// Candidates of the phase-alignment search, before the Taylor step.
pub fn heuristic2_candidates(fset: &FreqFactorSet) -> Vec<Complex64> {
    let mut factors: Vec<(u32, Complex64)> = fset.active_factors().copied().collect();
    factors.sort_by_key(|f| std::cmp::Reverse(f.0));
    let Some(&(m1, eta1)) = factors.first() else {
        return vec![fset.prior.eta];
    };
    let (kt1, mu1) = unwrapped_offsets(m1, eta1);
    let mut cands: Vec<Complex64> = (0..m1)
        .map(|l| fset.prior.eta + Complex64::from_polar(kt1, (mu1 + TWO_PI * l as f64) / m1 as f64))
        .collect();
    for &(m, eta) in &factors[1..] {
        let (kt, mu) = unwrapped_offsets(m, eta);
        let mf = m as f64;
        for xi in cands.iter_mut() {
            let r = ((mf * xi.arg() - mu) / TWO_PI).round();
            *xi += Complex64::from_polar(kt, (mu + TWO_PI * r) / mf);
        }
    }
    cands
}

/// Single von Mises reduction: dominant-component search followed by a
/// second-order expansion of the exponent around that component's mean.
pub fn heuristic2(fset: &FreqFactorSet) -> FreqPosterior {
    if fset.is_flat() {
        return FreqPosterior::uniform();
    }
    if fset.active_factors().next().is_none() {
        return FreqPosterior::new(PosteriorShape::Single(fset.prior));
    }
    let cands = heuristic2_candidates(fset);
    let mut best = 0;
    for (l, xi) in cands.iter().enumerate() {
        if xi.norm() > cands[best].norm() {
            best = l;
        }
    }
    let xi = cands[best];
    let theta_bar = xi.arg();
    let (_, d1, d2) = fset.exponent_derivs(theta_bar);
    let param = if d2 < 0.0 {
        let theta = theta_bar - d1 / d2;
        let kappa = inv_a_from_deficit(-(0.5 / d2).exp_m1());
        VmParam::from_polar(kappa, wrap_angle(theta))
    } else {
        VmParam::from_polar(xi.norm(), wrap_angle(theta_bar))
    };
    FreqPosterior::new(PosteriorShape::Single(param))
}

/// Noncoherent factors `exp(|y^H a(theta)|^2 / (nu M))` written over the
/// lag set `{m - n : m > n}` with `eta_t = (2/nu) gamma_t`.
pub fn noncoherent_factors(mset: &MeasurementSet, nu: f64) -> Result<FreqFactorSet> {
    if !(nu > 0.0) {
        return Err(ValseError::State(format!("noise variance must be > 0, got {nu}")));
    }
    let gamma = sample_autocovariance(mset);
    let scale = 2.0 / nu;
    let factors = gamma
        .into_iter()
        .enumerate()
        .skip(1)
        .filter_map(|(t, g)| g.map(|g| (t as u32, g * scale)))
        .collect();
    FreqFactorSet::new(VmParam::uniform(), factors)
}

/// `gamma_t = (1/M) sum_{m_k - m_l = t} y_k y_l^*`, indexed by lag; `None`
/// where no pair of measurements realizes the lag. Lag 0 is `||y||^2 / M`.
pub fn sample_autocovariance(mset: &MeasurementSet) -> Vec<Option<Complex64>> {
    let idx = mset.indices();
    let y = mset.samples();
    let mut gamma = vec![None; mset.max_index() + 1];
    let inv_m = 1.0 / mset.len() as f64;
    for k in 0..idx.len() {
        for l in 0..=k {
            let t = idx[k] - idx[l];
            let slot = gamma[t].get_or_insert(Complex64::new(0.0, 0.0));
            *slot += y[k] * y[l].conj() * inv_m;
        }
    }
    gamma
}

/// `eta_i` for component `i` given the current weight posterior over the
/// active set. Returns zeros when `i` is inactive.
#[allow(clippy::too_many_arguments)]
pub fn eta_for_component(
    i: usize,
    y: &[Complex64],
    active: &[usize],
    w_hat: &[Complex64],
    c_hat: &nalgebra::DMatrix<Complex64>,
    moments: &[Vec<Complex64>],
    nu: f64,
) -> Result<Vec<Complex64>> {
    if !(nu > 0.0) {
        return Err(ValseError::State(format!("noise variance must be > 0, got {nu}")));
    }
    let Some(pos_i) = active.iter().position(|&a| a == i) else {
        return Ok(vec![Complex64::new(0.0, 0.0); y.len()]);
    };
    let scale = 2.0 / nu;
    let wi_conj = w_hat[pos_i].conj();
    let mut eta: Vec<Complex64> = y.iter().map(|v| v * wi_conj).collect();
    for (pos_l, &l) in active.iter().enumerate() {
        if l == i {
            continue;
        }
        // (y - sum w_l a_l) w_i^* - sum C_{l,i} a_l
        let coef = w_hat[pos_l] * wi_conj + c_hat[(pos_l, pos_i)];
        for (e, a) in eta.iter_mut().zip(&moments[l]) {
            *e -= coef * a;
        }
    }
    for e in eta.iter_mut() {
        *e *= scale;
    }
    Ok(eta)
}

/// Result of maximizing the exponent over the circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEstimate {
    pub theta: f64,
    /// Objective identically zero; `theta` is arbitrary.
    pub degenerate: bool,
}

/// Maximizer of `f(theta)` on a uniform grid of `grid_points` samples,
/// refined by Newton steps from the best few grid local maxima.
pub fn point_frequency_update(fset: &FreqFactorSet, grid_points: usize) -> PointEstimate {
    if fset.is_flat() {
        return PointEstimate {
            theta: 0.0,
            degenerate: true,
        };
    }
    let g = grid_points.max(8);
    let step = TWO_PI / g as f64;
    let values: Vec<f64> = (0..g)
        .map(|k| fset.exponent(-PI + step * k as f64))
        .collect();
    let mut peaks: Vec<usize> = (0..g)
        .filter(|&k| {
            let prev = values[(k + g - 1) % g];
            let next = values[(k + 1) % g];
            values[k] >= prev && values[k] >= next
        })
        .collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    peaks.truncate(3);

    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in peaks {
        let mut theta = -PI + step * k as f64;
        for _ in 0..20 {
            let (_, d1, d2) = fset.exponent_derivs(theta);
            if d2 >= 0.0 {
                break;
            }
            let delta = (-d1 / d2).clamp(-step, step);
            theta += delta;
            if delta.abs() < 1e-13 {
                break;
            }
        }
        let value = fset.exponent(theta);
        if value > best.0 {
            best = (value, theta);
        }
    }
    PointEstimate {
        theta: wrap_angle(best.1),
        degenerate: false,
    }
}
