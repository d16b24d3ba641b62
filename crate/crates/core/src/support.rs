//! Support detection: greedy single-flip ascent on `ln Z(s)` with rank-one
//! bookkeeping of the weight posterior, plus the direct regularized solve.

use log::warn;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Result, ValseError};
use crate::freq::MeasurementSet;
use crate::hyperparams::Hyperparams;

/// Flips with `Delta <= IMPROVE_EPS` do not count as improvements.
pub const IMPROVE_EPS: f64 = 1e-12;
/// Rank-one updates between direct re-solves.
pub const REFRESH_EVERY: usize = 64;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `J` (diagonal pinned to `M`) and `h = (a_i^H y)_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramData {
    pub j: DMatrix<Complex64>,
    pub h: Vec<Complex64>,
    m: usize,
}

impl GramData {
    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Recompute row/column `i` and `h_i` after `a_i` changed.
    pub fn update_component(&mut self, i: usize, moments: &[Vec<Complex64>], y: &[Complex64]) {
        let ai = &moments[i];
        for (l, al) in moments.iter().enumerate() {
            if l == i {
                continue;
            }
            let v = inner(ai, al);
            self.j[(i, l)] = v;
            self.j[(l, i)] = v.conj();
        }
        self.j[(i, i)] = Complex64::new(self.m as f64, 0.0);
        self.h[i] = inner(ai, y);
    }

    /// `J` restricted to `active` plus `(nu/tau) I`.
    fn regularized(&self, active: &[usize], nu_over_tau: f64) -> DMatrix<Complex64> {
        let k = active.len();
        DMatrix::from_fn(k, k, |r, c| {
            let v = self.j[(active[r], active[c])];
            if r == c {
                v + nu_over_tau
            } else {
                v
            }
        })
    }
}

/// `a^H b`.
fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn build_gram(moments: &[Vec<Complex64>], mset: &MeasurementSet) -> Result<GramData> {
    let m = mset.len();
    if let Some(bad) = moments.iter().position(|a| a.len() != m) {
        return invalid(format!(
            "moment vector {bad} has length {}, expected {m}",
            moments[bad].len()
        ));
    }
    let n = moments.len();
    let mut j = DMatrix::from_element(n, n, ZERO);
    for i in 0..n {
        j[(i, i)] = Complex64::new(m as f64, 0.0);
        for l in (i + 1)..n {
            let v = inner(&moments[i], &moments[l]);
            j[(i, l)] = v;
            j[(l, i)] = v.conj();
        }
    }
    let h = moments.iter().map(|a| inner(a, mset.samples())).collect();
    Ok(GramData { j, h, m })
}

/// Active set with the weight posterior restricted to it. `active` is kept
/// in insertion order; `w` and `c` are indexed by position in `active`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportState {
    s: Vec<bool>,
    active: Vec<usize>,
    w: Vec<Complex64>,
    c: DMatrix<Complex64>,
}

impl SupportState {
    pub fn empty(n: usize) -> Self {
        Self {
            s: vec![false; n],
            active: Vec::new(),
            w: Vec::new(),
            c: DMatrix::zeros(0, 0),
        }
    }

    /// State from explicit parts. `active` lists the set bits of `s` in the
    /// order used by `w` and `c`; `c` must be Hermitian with positive diagonal.
    pub fn from_parts(
        s: Vec<bool>,
        active: Vec<usize>,
        w: Vec<Complex64>,
        c: DMatrix<Complex64>,
    ) -> Result<Self> {
        let k = active.len();
        let mut sorted = active.clone();
        sorted.sort_unstable();
        let expected: Vec<usize> = (0..s.len()).filter(|&i| s[i]).collect();
        if sorted != expected {
            return invalid("active list does not match the support vector");
        }
        if w.len() != k || c.nrows() != k || c.ncols() != k {
            return invalid("posterior dimensions do not match the active set");
        }
        for r in 0..k {
            if !(c[(r, r)].re > 0.0) {
                return invalid("posterior variances must be positive");
            }
            for col in 0..k {
                if (c[(r, col)] - c[(col, r)].conj()).norm() > 1e-12 * c[(r, r)].re.max(c[(col, col)].re) {
                    return invalid("posterior covariance must be Hermitian");
                }
            }
        }
        Ok(Self { s, active, w, c })
    }

    /// Direct solve for the support `s`.
    pub fn solve(s: &[bool], gram: &GramData, beta: &Hyperparams) -> Result<Self> {
        if s.len() != gram.n() {
            return invalid(format!("support has length {}, N = {}", s.len(), gram.n()));
        }
        let active: Vec<usize> = (0..s.len()).filter(|&i| s[i]).collect();
        let (w, c) = weights_posterior_active(&active, gram, beta)?;
        Ok(Self {
            s: s.to_vec(),
            active,
            w,
            c,
        })
    }

    pub fn support(&self) -> &[bool] {
        &self.s
    }

    pub fn is_active(&self, k: usize) -> bool {
        self.s[k]
    }

    /// Active indices in storage order.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn size(&self) -> usize {
        self.active.len()
    }

    /// Posterior means, aligned with [`Self::active`].
    pub fn w_hat(&self) -> &[Complex64] {
        &self.w
    }

    /// Posterior covariance, aligned with [`Self::active`].
    pub fn c_hat(&self) -> &DMatrix<Complex64> {
        &self.c
    }

    fn position(&self, k: usize) -> Option<usize> {
        self.active.iter().position(|&a| a == k)
    }

    pub fn weight(&self, k: usize) -> Option<Complex64> {
        self.position(k).map(|p| self.w[p])
    }

    /// Mean weight over all `N` components, zero when inactive.
    pub fn full_weights(&self) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.s.len()];
        for (p, &k) in self.active.iter().enumerate() {
            out[k] = self.w[p];
        }
        out
    }

    /// Smallest real diagonal of `C`, `+inf` when empty.
    fn min_diag(&self) -> f64 {
        (0..self.size())
            .map(|p| self.c[(p, p)].re)
            .fold(f64::INFINITY, f64::min)
    }
}

fn log_prior_odds(beta: &Hyperparams) -> f64 {
    (beta.rho / (1.0 - beta.rho)).ln()
}

/// `ln Z(s)` up to the dropped constant, via Cholesky.
pub fn ln_z(s: &[bool], gram: &GramData, beta: &Hyperparams) -> Result<f64> {
    if s.len() != gram.n() {
        return invalid(format!("support has length {}, N = {}", s.len(), gram.n()));
    }
    let active: Vec<usize> = (0..s.len()).filter(|&i| s[i]).collect();
    if active.is_empty() {
        return Ok(0.0);
    }
    let a = gram.regularized(&active, beta.nu / beta.tau);
    let chol = a
        .cholesky()
        .ok_or_else(|| ValseError::Singular("J_S + (nu/tau) I is not positive definite".into()))?;
    let l = chol.l_dirty();
    let log_det: f64 = (0..active.len()).map(|p| 2.0 * l[(p, p)].re.ln()).sum();
    let hs = DVector::from_iterator(active.len(), active.iter().map(|&i| gram.h[i]));
    let x = chol.solve(&hs);
    let quad = hs.dotc(&x).re;
    let k = active.len() as f64;
    Ok(-log_det + quad / beta.nu + k * (beta.rho * beta.nu / ((1.0 - beta.rho) * beta.tau)).ln())
}

/// Change of `ln Z` when inactive `k` is switched on, with the new weight
/// mean `u_k` and variance `v_k`.
pub fn delta_activate(
    k: usize,
    state: &SupportState,
    gram: &GramData,
    beta: &Hyperparams,
) -> Result<(f64, Complex64, f64)> {
    if state.is_active(k) {
        return Err(ValseError::State(format!("component {k} is already active")));
    }
    let nu = beta.nu;
    let jk = DVector::from_iterator(state.size(), state.active.iter().map(|&i| gram.j[(i, k)]));
    let cj = &state.c * &jk;
    let quad = jk.dotc(&cj).re;
    let denom = gram.m as f64 + nu / beta.tau - quad / nu;
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(ValseError::Degenerate(format!(
            "activation variance for component {k} is not positive"
        )));
    }
    let v = nu / denom;
    let jw: Complex64 = jk.iter().zip(&state.w).map(|(a, b)| a.conj() * b).sum();
    let u = v / nu * (gram.h[k] - jw);
    let delta = (v / beta.tau).ln() + u.norm_sqr() / v + log_prior_odds(beta);
    Ok((delta, u, v))
}

/// Change of `ln Z` when active `k` is switched off.
pub fn delta_deactivate(k: usize, state: &SupportState, beta: &Hyperparams) -> Result<f64> {
    let p = state
        .position(k)
        .ok_or_else(|| ValseError::State(format!("component {k} is not active")))?;
    let ckk = state.c[(p, p)].re;
    if !(ckk > 1e-300) {
        return Err(ValseError::Degenerate(format!(
            "posterior variance of component {k} is degenerate"
        )));
    }
    Ok(-(ckk / beta.tau).ln() - state.w[p].norm_sqr() / ckk - log_prior_odds(beta))
}

/// Switch on `k` using `(u, v)` from [`delta_activate`] on this same state.
pub fn apply_activate(
    k: usize,
    u: Complex64,
    v: f64,
    state: &SupportState,
    gram: &GramData,
    beta: &Hyperparams,
) -> Result<SupportState> {
    if state.is_active(k) {
        return Err(ValseError::State(format!("component {k} is already active")));
    }
    let n_act = state.size();
    let jk = DVector::from_iterator(n_act, state.active.iter().map(|&i| gram.j[(i, k)]));
    let b = (&state.c * &jk) / Complex64::new(beta.nu, 0.0);

    let mut w: Vec<Complex64> = state.w.iter().zip(b.iter()).map(|(wi, bi)| wi - bi * u).collect();
    w.push(u);

    let mut c = state.c.clone().resize(n_act + 1, n_act + 1, ZERO);
    for r in 0..n_act {
        for col in 0..n_act {
            c[(r, col)] += v * b[r] * b[col].conj();
        }
        c[(r, n_act)] = -v * b[r];
        c[(n_act, r)] = -v * b[r].conj();
    }
    c[(n_act, n_act)] = Complex64::new(v, 0.0);

    let mut s = state.s.clone();
    s[k] = true;
    let mut active = state.active.clone();
    active.push(k);
    Ok(SupportState { s, active, w, c })
}

/// Switch off `k`, conditioning the remaining posterior on `w_k = 0`.
pub fn apply_deactivate(k: usize, state: &SupportState) -> Result<SupportState> {
    let p = state
        .position(k)
        .ok_or_else(|| ValseError::State(format!("component {k} is not active")))?;
    let ckk = state.c[(p, p)].re;
    if !(ckk > 1e-300) {
        return Err(ValseError::Degenerate(format!(
            "posterior variance of component {k} is degenerate"
        )));
    }
    let wk = state.w[p];
    let keep: Vec<usize> = (0..state.size()).filter(|&q| q != p).collect();
    let w = keep
        .iter()
        .map(|&q| state.w[q] - state.c[(q, p)] * wk / ckk)
        .collect();
    let c = DMatrix::from_fn(keep.len(), keep.len(), |r, col| {
        let (qr, qc) = (keep[r], keep[col]);
        state.c[(qr, qc)] - state.c[(qr, p)] * state.c[(p, qc)] / ckk
    });
    let mut s = state.s.clone();
    s[k] = false;
    let active = keep.iter().map(|&q| state.active[q]).collect();
    Ok(SupportState { s, active, w, c })
}

/// Direct regularized solve `C = nu (J_S + nu/tau I)^{-1}`, `w = C h_S / nu`.
/// Outputs are ordered by increasing component index.
pub fn weights_posterior(
    s: &[bool],
    gram: &GramData,
    beta: &Hyperparams,
) -> Result<(Vec<Complex64>, DMatrix<Complex64>)> {
    if s.len() != gram.n() {
        return invalid(format!("support has length {}, N = {}", s.len(), gram.n()));
    }
    let active: Vec<usize> = (0..s.len()).filter(|&i| s[i]).collect();
    weights_posterior_active(&active, gram, beta)
}

fn weights_posterior_active(
    active: &[usize],
    gram: &GramData,
    beta: &Hyperparams,
) -> Result<(Vec<Complex64>, DMatrix<Complex64>)> {
    let k = active.len();
    if k == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let a = gram.regularized(active, beta.nu / beta.tau);
    let chol = a
        .cholesky()
        .ok_or_else(|| ValseError::Singular("J_S + (nu/tau) I is not positive definite".into()))?;
    let mut c = chol.inverse() * Complex64::new(beta.nu, 0.0);
    // Symmetrize away round-off.
    for r in 0..k {
        c[(r, r)] = Complex64::new(c[(r, r)].re, 0.0);
        for col in (r + 1)..k {
            let v = 0.5 * (c[(r, col)] + c[(col, r)].conj());
            c[(r, col)] = v;
            c[(col, r)] = v.conj();
        }
    }
    let hs = DVector::from_iterator(k, active.iter().map(|&i| gram.h[i]));
    let w = chol.solve(&hs);
    Ok((w.iter().copied().collect(), c))
}

/// Outcome of [`maximize_support`].
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSearch {
    pub state: SupportState,
    pub flips: usize,
    /// The flip budget ran out before a local maximum was certified.
    pub capped: bool,
}

/// Greedy ascent from `s_init`: flip the single bit with the largest
/// positive `Delta` until none exceeds [`IMPROVE_EPS`].
pub fn maximize_support(s_init: &[bool], gram: &GramData, beta: &Hyperparams) -> Result<SupportSearch> {
    let n = gram.n();
    let mut state = SupportState::solve(s_init, gram, beta)?;
    let budget = 4 * n;
    let mut flips = 0;
    let mut since_refresh = 0;
    loop {
        let best = match best_flip(&state, gram, beta) {
            Ok(b) => b,
            Err(ValseError::Degenerate(_)) if since_refresh > 0 => {
                state = SupportState::solve(&state.s, gram, beta)?;
                since_refresh = 0;
                best_flip(&state, gram, beta)?
            }
            Err(e) => return Err(e),
        };
        let Some((k, _delta, act)) = best else {
            return Ok(SupportSearch {
                state,
                flips,
                capped: false,
            });
        };
        if flips == budget {
            warn!("support search hit the {budget}-flip cap");
            return Ok(SupportSearch {
                state,
                flips,
                capped: true,
            });
        }
        #[cfg(debug_assertions)]
        let before = ln_z(&state.s, gram, beta)?;
        state = match act {
            Some((u, v)) => apply_activate(k, u, v, &state, gram, beta)?,
            None => apply_deactivate(k, &state)?,
        };
        flips += 1;
        since_refresh += 1;
        if since_refresh >= REFRESH_EVERY || state.min_diag() < 1e-12 * beta.tau {
            state = SupportState::solve(&state.s, gram, beta)?;
            since_refresh = 0;
        }
        #[cfg(debug_assertions)]
        {
            let after = ln_z(&state.s, gram, beta)?;
            debug_assert!(
                after > before - 1e-9 * (1.0 + before.abs()),
                "ln Z decreased across an accepted flip: {before} -> {after}"
            );
        }
    }
}

type Flip = Option<(usize, f64, Option<(Complex64, f64)>)>;

/// Best improving flip, lowest index on ties.
fn best_flip(state: &SupportState, gram: &GramData, beta: &Hyperparams) -> Result<Flip> {
    let mut best: Flip = None;
    for k in 0..gram.n() {
        let (delta, act) = if state.is_active(k) {
            (delta_deactivate(k, state, beta)?, None)
        } else {
            let (d, u, v) = delta_activate(k, state, gram, beta)?;
            (d, Some((u, v)))
        };
        if delta > IMPROVE_EPS && best.as_ref().is_none_or(|b| delta > b.1) {
            best = Some((k, delta, act));
        }
    }
    Ok(best)
}

/// Right-hand side of the activation test `|w~|^2 / C~ > threshold`, where
/// `w~, C~` are the likelihood-only mean and variance of the weight.
pub fn activation_threshold(tau: f64, rho: f64, c_tilde: f64) -> f64 {
    (1.0 + c_tilde / tau) * ((1.0 + tau / c_tilde) * (1.0 - rho) / rho).ln()
}

/// Whether a component with posterior mean `w_hat` and variance `c_hat`
/// passes the activation test, written in likelihood-only terms.
pub fn passes_activation_test(w_hat: Complex64, c_hat: f64, tau: f64, rho: f64) -> bool {
    // 1/C = 1/C~ + 1/tau and w/C = w~/C~.
    let c_tilde = 1.0 / (1.0 / c_hat - 1.0 / tau);
    let w_tilde = w_hat * (c_tilde / c_hat);
    w_tilde.norm_sqr() / c_tilde > activation_threshold(tau, rho, c_tilde)
}
