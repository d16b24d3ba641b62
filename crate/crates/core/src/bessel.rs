//! Modified Bessel functions of the first kind, integer order, evaluated only
//! through ratios and logarithms so nothing overflows for large arguments.
//!
//! Two regimes:
//!
//! * `x >= 50` and `p^2 <= 2x`: Hankel's large-argument expansion of the
//!   scaled function `S_p(x) = sqrt(2 pi x) e^{-x} I_p(x)`. The expansion is
//!   truncated at its smallest term, which is far below machine precision in
//!   this regime.
//! * otherwise: Gauss continued fraction for `I_P / I_{P-1}` at the top order,
//!   then the three-term recurrence run downwards (the stable direction for
//!   `I_p`) to get every consecutive ratio `R_k = I_k / I_{k-1}`.

const ASYMPTOTIC_MIN_ARG: f64 = 50.0;
const CF_MAX_ITERS: usize = 10_000_000;

pub(crate) fn hankel_regime(order: u32, x: f64) -> bool {
    let p = order as f64;
    x >= ASYMPTOTIC_MIN_ARG && p * p <= 2.0 * x
}

/// Terms `(-1)^k a_k(p) / x^k` of the Hankel expansion, truncated before the
/// first term that grows or once terms fall below `1e-17`.
fn hankel_terms(order: u32, x: f64) -> Vec<f64> {
    let mu = 4.0 * (order as f64).powi(2);
    let mut terms = vec![1.0];
    let mut term: f64 = 1.0;
    for k in 1..1000 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = -term * (mu - odd * odd) / (8.0 * kf * x);
        if next.abs() > term.abs() || next.abs() < 1e-17 {
            break;
        }
        terms.push(next);
        term = next;
    }
    terms
}

/// `(S_p(x), dS_p/dx)`.
fn hankel_scaled(order: u32, x: f64) -> (f64, f64) {
    let terms = hankel_terms(order, x);
    let value: f64 = terms.iter().sum();
    let deriv: f64 = terms
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, t)| -(k as f64) * t / x)
        .sum();
    (value, deriv)
}

/// `I_nu(x) / I_{nu-1}(x)` by the Gauss continued fraction (modified Lentz).
pub(crate) fn cf_ratio(nu: u32, x: f64) -> f64 {
    debug_assert!(nu >= 1 && x > 0.0);
    const TINY: f64 = 1e-300;
    let b = |k: usize| 2.0 * (nu as f64 + k as f64) / x;
    let mut f = b(0);
    if f == 0.0 {
        f = TINY;
    }
    let mut c = f;
    let mut d = 0.0;
    for k in 1..CF_MAX_ITERS {
        let bk = b(k);
        d += bk;
        if d == 0.0 {
            d = TINY;
        }
        c = bk + 1.0 / c;
        if c == 0.0 {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// Consecutive ratios `R_k = I_k(x) / I_{k-1}(x)` for `k = 1..=top`,
/// returned at index `k - 1`.
pub(crate) fn consecutive_ratios(top: u32, x: f64) -> Vec<f64> {
    let n = top as usize;
    if n == 0 {
        return Vec::new();
    }
    if x == 0.0 {
        return vec![0.0; n];
    }
    let mut r = vec![0.0; n];
    r[n - 1] = if hankel_regime(top, x) {
        let (s_top, _) = hankel_scaled(top, x);
        let (s_below, _) = hankel_scaled(top - 1, x);
        s_top / s_below
    } else {
        cf_ratio(top, x)
    };
    for k in (1..n).rev() {
        r[k - 1] = 1.0 / (2.0 * k as f64 / x + r[k]);
    }
    r
}

/// `(ln(I_p(x)/I_0(x)), d/dx ln(I_p(x)/I_0(x)))` for `x > 0`.
pub(crate) fn log_ratio_with_deriv(order: u32, x: f64) -> (f64, f64) {
    if order == 0 {
        return (0.0, 0.0);
    }
    if x == 0.0 {
        return (f64::NEG_INFINITY, f64::INFINITY);
    }
    if hankel_regime(order, x) {
        let (sp, dsp) = hankel_scaled(order, x);
        let (s0, ds0) = hankel_scaled(0, x);
        return ((sp / s0).ln(), dsp / sp - ds0 / s0);
    }
    let r = consecutive_ratios(order + 1, x);
    let p = order as usize;
    let log_value: f64 = r[..p].iter().map(|v| v.ln()).sum();
    // I_p' = I_{p+1} + (p/x) I_p and I_0' = I_1.
    let deriv = order as f64 / x + r[p] - r[0];
    (log_value, deriv)
}

/// `I_p(x) / I_0(x)` for integer `p >= 0`, `x >= 0`.
pub(crate) fn ratio(order: u32, x: f64) -> f64 {
    if order == 0 {
        return 1.0;
    }
    if x == 0.0 {
        return 0.0;
    }
    log_ratio_with_deriv(order, x).0.exp()
}

/// `I_p(x) / I_0(x)` for every `p = 0..=top`.
pub(crate) fn ratios_up_to(top: u32, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(top as usize + 1);
    out.push(1.0);
    if top == 0 {
        return out;
    }
    if x == 0.0 {
        out.extend(std::iter::repeat_n(0.0, top as usize));
        return out;
    }
    if hankel_regime(top, x) {
        let (s0, _) = hankel_scaled(0, x);
        for p in 1..=top {
            out.push(hankel_scaled(p, x).0 / s0);
        }
        return out;
    }
    let mut acc = 1.0;
    for r in consecutive_ratios(top, x) {
        acc *= r;
        out.push(acc);
    }
    out
}

/// `ln I_0(x) - x`, finite for every `x >= 0`.
pub(crate) fn log_i0_scaled(x: f64) -> f64 {
    if x >= ASYMPTOTIC_MIN_ARG {
        let (s0, _) = hankel_scaled(0, x);
        return s0.ln() - 0.5 * (2.0 * std::f64::consts::PI * x).ln();
    }
    // sum_k ((x/2)^k / k!)^2
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..500 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum.ln() - x
}

/// Mean resultant length `A(x) = I_1/I_0`, its deficit `1 - A(x)` (computed
/// without cancellation for large `x`) and the derivative `A'(x)`.
pub(crate) fn mean_resultant_parts(x: f64) -> (f64, f64, f64) {
    if x == 0.0 {
        return (0.0, 1.0, 0.5);
    }
    if x >= ASYMPTOTIC_MIN_ARG {
        let t0 = hankel_terms(0, x);
        let t1 = hankel_terms(1, x);
        let s0: f64 = t0.iter().sum();
        let s1: f64 = t1.iter().sum();
        let n = t0.len().min(t1.len());
        let diff: f64 = t0[..n].iter().zip(&t1[..n]).map(|(a, b)| a - b).sum();
        let a = s1 / s0;
        let deficit = diff / s0;
        let (_, ds0) = hankel_scaled(0, x);
        let (_, ds1) = hankel_scaled(1, x);
        let deriv = a * (ds1 / s1 - ds0 / s0);
        return (a, deficit, deriv);
    }
    let a = cf_ratio(1, x);
    (a, 1.0 - a, 1.0 - a / x - a * a)
}
