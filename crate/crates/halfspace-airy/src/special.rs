//! Small special-function helpers shared by the quadrature and kernel code.

use crate::C64;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the three-term recurrence.
///
/// Nodes are returned in increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre order must be positive");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess for the i-th largest root.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let pn = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (z * pn - p0) / (z * z - 1.0);
    (pn, dp)
}

/// Nodes and weights of one Gauss–Legendre rule.
type Rule = (Vec<f64>, Vec<f64>);

/// Cached Gauss–Legendre rule of the given order.
///
/// Orders up to 128 are memoised; larger orders are computed on demand.
pub fn gauss_legendre_cached(n: usize) -> (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Vec<OnceLock<Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| (0..=128).map(|_| OnceLock::new()).collect());
    if n <= 128 {
        cache[n].get_or_init(|| gauss_legendre(n)).clone()
    } else {
        gauss_legendre(n)
    }
}

/// Scaled complementary error function `erfcx(u) = e^{u²} erfc(u)` for real
/// `u`.  For `u < 2` the product is formed directly; beyond that the
/// continued fraction `erfcx(u) = π^{−1/2}/(u + (1/2)/(u + 1/(u + (3/2)/(u + …))))`
/// is evaluated bottom-up, which avoids the underflow of `erfc`.
pub fn erfcx(u: f64) -> f64 {
    if u < 2.0 {
        (u * u).exp() * statrs::function::erf::erfc(u)
    } else {
        let mut tail = u;
        for k in (1..=120).rev() {
            tail = u + (k as f64 / 2.0) / tail;
        }
        1.0 / (tail * PI.sqrt())
    }
}

/// `e^{a} erfc(u)` evaluated without overflow or premature underflow.
pub fn exp_times_erfc(a: f64, u: f64) -> f64 {
    if u <= 0.0 {
        a.exp() * statrs::function::erf::erfc(u)
    } else {
        (a - u * u).exp() * erfcx(u)
    }
}

/// Principal-branch logarithm that reports whether the argument lies on the
/// closed negative real axis (the cut) or at zero.
pub fn checked_ln(z: C64) -> Option<C64> {
    if z.re <= 0.0 && z.im == 0.0 {
        None
    } else {
        Some(z.ln())
    }
}

/// `z^n` for an integer exponent, by repeated squaring (exact branch-free
/// power).
pub fn powi(z: C64, n: i64) -> C64 {
    if n >= 0 {
        pow_u(z, n as u64)
    } else {
        C64::new(1.0, 0.0) / pow_u(z, n.unsigned_abs())
    }
}

fn pow_u(mut z: C64, mut n: u64) -> C64 {
    let mut acc = C64::new(1.0, 0.0);
    while n > 0 {
        if n & 1 == 1 {
            acc *= z;
        }
        z *= z;
        n >>= 1;
    }
    acc
}
