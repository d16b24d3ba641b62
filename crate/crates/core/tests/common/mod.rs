//! Independent numerical oracles shared by the integration tests. Nothing in
//! here calls into the library's numerical routines.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Grid size for every quadrature comparison.
pub const QUAD_POINTS: usize = 1 << 14;

pub fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| -PI + 2.0 * PI * k as f64 / n as f64).collect()
}

/// Normalized density values on the uniform grid, given an unnormalized
/// log-density. Trapezoid rule on the periodic grid, log-sum-exp scaling.
pub fn normalized_density(log_f: impl Fn(f64) -> f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let th = grid(n);
    let lf: Vec<f64> = th.iter().map(|&t| log_f(t)).collect();
    let max = lf.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let h = 2.0 * PI / n as f64;
    let unnorm: Vec<f64> = lf.iter().map(|v| (v - max).exp()).collect();
    let z: f64 = unnorm.iter().sum::<f64>() * h;
    (th, unnorm.into_iter().map(|v| v / z).collect())
}

/// `E[e^{j p Theta}]` for the density `∝ exp(log_f)`.
pub fn moment(log_f: impl Fn(f64) -> f64, p: i64) -> Complex64 {
    let (th, dens) = normalized_density(log_f, QUAD_POINTS);
    let h = 2.0 * PI / QUAD_POINTS as f64;
    th.iter()
        .zip(&dens)
        .map(|(&t, &d)| Complex64::from_polar(d * h, p as f64 * t))
        .sum()
}

/// Trapezoid integral over one period of an (already normalized) function.
pub fn integrate(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    let h = 2.0 * PI / n as f64;
    grid(n).into_iter().map(f).sum::<f64>() * h
}

/// `I_n(x)` by its power series (fine for moderate `x`).
pub fn bessel_i_series(n: u32, x: f64) -> f64 {
    let half = x / 2.0;
    let mut fact_n = 1.0;
    for i in 1..=n {
        fact_n *= i as f64;
    }
    let mut term = half.powi(n as i32) / fact_n;
    let mut sum = term;
    for k in 1..400 {
        term *= half * half / (k as f64 * (k + n) as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// `I_p(x)/I_0(x)` by trapezoid quadrature of the integral representation.
pub fn bessel_ratio_quadrature(p: u32, x: f64) -> f64 {
    let n = QUAD_POINTS;
    let th = grid(n);
    let num: f64 = th.iter().map(|&t| (x * (t.cos() - 1.0)).exp() * (p as f64 * t).cos()).sum();
    let den: f64 = th.iter().map(|&t| (x * (t.cos() - 1.0)).exp()).sum();
    num / den
}

pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Dense `ln Z(s)` from an explicit determinant and inverse (LU route).
pub fn ln_z_dense(
    active: &[usize],
    j: &DMatrix<Complex64>,
    h: &[Complex64],
    nu: f64,
    rho: f64,
    tau: f64,
) -> f64 {
    let k = active.len();
    if k == 0 {
        return 0.0;
    }
    let mut a = DMatrix::<Complex64>::zeros(k, k);
    for (r, &i) in active.iter().enumerate() {
        for (c, &l) in active.iter().enumerate() {
            a[(r, c)] = j[(i, l)];
        }
        a[(r, r)] += Complex64::new(nu / tau, 0.0);
    }
    let hs = nalgebra::DVector::from_iterator(k, active.iter().map(|&i| h[i]));
    let det = a.clone().lu().determinant();
    let inv = a.try_inverse().expect("regularized matrix is invertible");
    let quad = (hs.adjoint() * &inv * &hs)[(0, 0)].re;
    -det.re.ln() + quad / nu + k as f64 * (rho * nu / ((1.0 - rho) * tau)).ln()
}

/// Dense weight posterior `(w, C)` by explicit inversion.
pub fn weights_dense(
    active: &[usize],
    j: &DMatrix<Complex64>,
    h: &[Complex64],
    nu: f64,
    tau: f64,
) -> (Vec<Complex64>, DMatrix<Complex64>) {
    let k = active.len();
    let mut a = DMatrix::<Complex64>::zeros(k, k);
    for (r, &i) in active.iter().enumerate() {
        for (c, &l) in active.iter().enumerate() {
            a[(r, c)] = j[(i, l)];
        }
        a[(r, r)] += Complex64::new(nu / tau, 0.0);
    }
    let c = a.try_inverse().expect("invertible") * Complex64::new(nu, 0.0);
    let hs = nalgebra::DVector::from_iterator(k, active.iter().map(|&i| h[i]));
    let w = &c * hs / Complex64::new(nu, 0.0);
    (w.iter().cloned().collect(), c)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations,
/// ascending.
pub fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenvalues of a Hermitian matrix via its real symmetric embedding
/// `[[Re, -Im], [Im, Re]]`, which repeats each eigenvalue twice.
pub fn hermitian_eigenvalues(h: &DMatrix<Complex64>) -> Vec<f64> {
    let m = h.nrows();
    let big = DMatrix::from_fn(2 * m, 2 * m, |r, c| {
        let v = h[(r % m, c % m)];
        match (r < m, c < m) {
            (true, true) | (false, false) => v.re,
            (true, false) => -v.im,
            (false, true) => v.im,
        }
    });
    jacobi_eigenvalues(big).into_iter().step_by(2).collect()
}

/// Inputs for support-solver tests: moment vectors with entries of modulus
/// at most one, data, and a random index set.
pub struct Instance {
    pub indices: Vec<usize>,
    pub n_signal: usize,
    pub moments: Vec<Vec<Complex64>>,
    pub y: Vec<Complex64>,
}

pub fn random_instance(rng: &mut impl rand::Rng, n: usize, m: usize) -> Instance {
    let n_signal = m + rng.random_range(0..4);
    let mut indices: Vec<usize> = (0..n_signal).collect();
    while indices.len() > m {
        let k = rng.random_range(0..indices.len());
        indices.remove(k);
    }
    let moments = (0..n)
        .map(|_| {
            let theta: f64 = rng.random_range(-PI..PI);
            let shrink: f64 = rng.random_range(0.3..1.0);
            indices
                .iter()
                .map(|&k| Complex64::from_polar(shrink.powi(k as i32 % 4 + 1), theta * k as f64))
                .collect()
        })
        .collect();
    let y = indices
        .iter()
        .map(|_| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
        .collect();
    Instance {
        indices,
        n_signal,
        moments,
        y,
    }
}

/// Frobenius-relative distance between two complex matrices.
pub fn rel_frobenius(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let diff = (a - b).norm();
    diff / b.norm().max(1e-300)
}
