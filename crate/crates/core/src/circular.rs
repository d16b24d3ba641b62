//! Von Mises machinery: Bessel ratios, densities, circular moments and the
//! approximation of an m-fold wrapped von Mises law by an m-component mixture.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bessel;
use crate::error::{invalid, Result, ValseError};

const TWO_PI: f64 = 2.0 * PI;

/// Canonical representative of an angle in `[-pi, pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = (theta + PI).rem_euclid(TWO_PI) - PI;
    if w >= PI {
        -PI
    } else {
        w
    }
}

/// Wrap-around distance between two angles, in `[0, pi]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// Von Mises parameters packed as `eta = kappa * e^{j mu}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VmParam {
    pub eta: Complex64,
}

impl VmParam {
    pub fn new(eta: Complex64) -> Self {
        Self { eta }
    }

    pub fn from_polar(kappa: f64, mu: f64) -> Self {
        Self {
            eta: Complex64::from_polar(kappa, mu),
        }
    }

    pub fn uniform() -> Self {
        Self {
            eta: Complex64::new(0.0, 0.0),
        }
    }

    pub fn kappa(&self) -> f64 {
        self.eta.norm()
    }

    /// Mean direction in `[-pi, pi)`; zero for the uniform law.
    pub fn mu(&self) -> f64 {
        if self.eta.norm() == 0.0 {
            0.0
        } else {
            wrap_angle(self.eta.arg())
        }
    }

    pub fn is_uniform(&self) -> bool {
        self.eta.norm() == 0.0
    }
}

impl Default for VmParam {
    fn default() -> Self {
        Self::uniform()
    }
}

/// Weighted mixture of von Mises laws. Weights are positive and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct VmMixture {
    components: Vec<(f64, VmParam)>,
}

impl VmMixture {
    /// Builds a mixture, normalizing the weights.
    pub fn new(components: Vec<(f64, VmParam)>) -> Result<Self> {
        if components.is_empty() {
            return invalid("mixture needs at least one component");
        }
        if components.iter().any(|(w, _)| !(*w > 0.0) || !w.is_finite()) {
            return invalid("mixture weights must be positive and finite");
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        let components = components
            .into_iter()
            .map(|(w, p)| (w / total, p))
            .collect();
        Ok(Self { components })
    }

    /// Mixture with weights proportional to `exp(log_weights)`.
    pub(crate) fn from_log_weights(entries: Vec<(f64, VmParam)>) -> Result<Self> {
        let max = entries
            .iter()
            .map(|(lw, _)| *lw)
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return invalid("mixture log-weights are not finite");
        }
        let comps = entries
            .into_iter()
            .map(|(lw, p)| ((lw - max).exp(), p))
            .filter(|(w, _)| *w > 0.0)
            .collect();
        Self::new(comps)
    }

    pub fn single(param: VmParam) -> Self {
        Self {
            components: vec![(1.0, param)],
        }
    }

    pub fn components(&self) -> &[(f64, VmParam)] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn pdf(&self, theta: f64) -> f64 {
        self.components
            .iter()
            .map(|(w, p)| w * vm_pdf(theta, p))
            .sum()
    }

    /// Circular moment `E[e^{j p Theta}]`.
    pub fn moment(&self, p: i64) -> Complex64 {
        self.components
            .iter()
            .map(|(w, param)| vm_char(param, p) * *w)
            .sum()
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !kappa.is_finite() || kappa < 0.0 {
        return invalid(format!("concentration must be finite and >= 0, got {kappa}"));
    }
    Ok(())
}

/// `I_p(kappa) / I_0(kappa)`.
pub fn bessel_ratio(p: i64, kappa: f64) -> Result<f64> {
    if p < 0 {
        return invalid(format!("order must be >= 0, got {p}"));
    }
    check_kappa(kappa)?;
    let order = u32::try_from(p)
        .map_err(|_| ValseError::InvalidArgument(format!("order {p} too large")))?;
    Ok(bessel::ratio(order, kappa))
}

/// `A(kappa) = I_1(kappa) / I_0(kappa)`.
pub fn mean_resultant_length(kappa: f64) -> Result<f64> {
    check_kappa(kappa)?;
    Ok(bessel::mean_resultant_parts(kappa).0)
}

/// Inverse of [`mean_resultant_length`].
pub fn inv_mean_resultant_length(rho: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&rho) {
        return invalid(format!("mean resultant length must lie in [0, 1), got {rho}"));
    }
    Ok(inv_a_from_deficit(1.0 - rho))
}

/// Solves `A(kappa) = 1 - deficit`. Taking the deficit keeps full precision
/// when the target is within rounding distance of one.
pub(crate) fn inv_a_from_deficit(deficit: f64) -> f64 {
    if deficit >= 1.0 {
        return 0.0;
    }
    let deficit = deficit.max(f64::MIN_POSITIVE);
    let rho = 1.0 - deficit;
    // Piecewise rational seed (Mardia & Jupp).
    let seed = if rho < 0.53 {
        2.0 * rho + rho.powi(3) + 5.0 * rho.powi(5) / 6.0
    } else if rho < 0.85 {
        -0.4 + 1.39 * rho + 0.43 / deficit
    } else {
        1.0 / (rho * deficit * (2.0 + deficit))
    };
    // D(kappa) = 1 - A(kappa) is strictly decreasing; keep a bracket so a
    // wild Newton step falls back to bisection.
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    let mut kappa = seed.max(0.0);
    for _ in 0..100 {
        let (_, d, a_prime) = bessel::mean_resultant_parts(kappa);
        let g = d - deficit;
        if g > 0.0 {
            lo = kappa;
        } else {
            hi = kappa;
        }
        if g == 0.0 {
            break;
        }
        let mut next = kappa + g / a_prime;
        if !(next > lo && next < hi) {
            next = if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                2.0 * kappa.max(1.0)
            };
        }
        let done = (next - kappa).abs() <= 1e-15 * kappa.max(1e-300);
        kappa = next;
        if done {
            break;
        }
    }
    kappa
}

/// `f_VM(theta; eta)`.
pub fn vm_pdf(theta: f64, param: &VmParam) -> f64 {
    vm_log_pdf(theta, param).exp()
}

pub fn vm_log_pdf(theta: f64, param: &VmParam) -> f64 {
    let kappa = param.kappa();
    if kappa == 0.0 {
        return -(TWO_PI).ln();
    }
    let mu = param.eta.arg();
    kappa * ((theta - mu).cos() - 1.0) - bessel::log_i0_scaled(kappa) - TWO_PI.ln()
}

/// Product of two von Mises densities, up to normalization.
pub fn vm_product(a: &VmParam, b: &VmParam) -> VmParam {
    VmParam::new(a.eta + b.eta)
}

/// Circular moment `E[e^{j p Theta}] = e^{j p mu} I_|p|(kappa) / I_0(kappa)`.
pub fn vm_char(param: &VmParam, p: i64) -> Complex64 {
    if p == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let kappa = param.kappa();
    if kappa == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let order = p.unsigned_abs().min(u32::MAX as u64) as u32;
    let mag = bessel::ratio(order, kappa);
    Complex64::from_polar(mag, p as f64 * param.eta.arg())
}

/// Concentration `k` with `I_m(k)/I_0(k) = I_1(kappa)/I_0(kappa)`.
pub fn solve_concentration(m: i64, kappa: f64) -> Result<f64> {
    if m < 1 {
        return invalid(format!("harmonic index must be >= 1, got {m}"));
    }
    check_kappa(kappa)?;
    let order = u32::try_from(m)
        .map_err(|_| ValseError::InvalidArgument(format!("harmonic index {m} too large")))?;
    Ok(solve_concentration_unchecked(order, kappa))
}

pub(crate) fn solve_concentration_unchecked(m: u32, kappa: f64) -> f64 {
    if m == 1 || kappa == 0.0 {
        return kappa;
    }
    let (_, deficit, _) = bessel::mean_resultant_parts(kappa);
    let log_target = (-deficit).ln_1p();
    let m2 = (m as f64) * (m as f64);
    // Wrapped-normal seed: A(k)^{m^2} = A(kappa).
    let seed = inv_a_from_deficit(-(log_target / m2).exp_m1());

    // Newton on u = ln k for g(u) = ln(I_m/I_0)(e^u) - ln A(kappa);
    // g is increasing in u.
    let g = |u: f64| {
        let x = u.exp();
        let (lr, dlr) = bessel::log_ratio_with_deriv(m, x);
        (lr - log_target, x * dlr)
    };
    let mut u = seed.max(1e-300).ln();
    let (mut gu, mut dgu) = g(u);
    // Bracket the root.
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    if gu < 0.0 {
        lo = u;
    } else {
        hi = u;
    }
    for _ in 0..200 {
        if gu == 0.0 {
            return u.exp();
        }
        let mut next = u - gu / dgu;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => u + 1.0,
                (false, true) => u - 1.0,
                (false, false) => u,
            };
        }
        let step = (next - u).abs();
        u = next;
        (gu, dgu) = g(u);
        if gu < 0.0 {
            lo = lo.max(u);
        } else {
            hi = hi.min(u);
        }
        if step < 1e-14 * u.abs().max(1.0) {
            break;
        }
    }
    u.exp()
}

/// Approximates the wrapped law `f_VM(m theta; eta)` by `m` equally weighted
/// von Mises components with common concentration and evenly spaced means.
pub fn unwrap_vm(m: i64, param: &VmParam) -> Result<VmMixture> {
    let kappa_tilde = solve_concentration(m, param.kappa())?;
    let mu = param.eta.arg();
    let mf = m as f64;
    let comps = (0..m)
        .map(|r| {
            let mean = wrap_angle((mu + TWO_PI * r as f64) / mf);
            (1.0 / mf, VmParam::from_polar(kappa_tilde, mean))
        })
        .collect();
    VmMixture::new(comps)
}
