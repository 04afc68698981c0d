//! Scaling constants, the rescaled lattices, and the scalar functions `S`, `G`.

use crate::special::checked_ln;
use crate::{Error, Result, C64};

/// Model parameters tying the discrete Schur process to its scaling limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingParams {
    /// Jump parameter `q ∈ (0,1)`.
    pub q: f64,
    /// Crossover parameter `ϖ`.
    pub varpi: f64,
    /// `σ_q = q^{1/3}(1+q)^{1/3}/(1−q)`.
    pub sigma_q: f64,
    /// `f_q = q^{1/3}/(2(1+q)^{2/3})`.
    pub f_q: f64,
    /// Mean of a geometric(q) increment, `q/(1−q)`.
    pub u: f64,
    /// Standard deviation of a geometric(q) increment, `√q/(1−q)`.
    pub sigma: f64,
}

/// The fixed contour offsets `a_i = |ϖ| + 3i` and `a_i^q = a_i/σ_q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourOffsets {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a1q: f64,
    pub a2q: f64,
    pub a3q: f64,
}

impl ScalingParams {
    /// Validates `q ∈ (0,1)` and finite `ϖ` and computes the derived constants.
    pub fn new(q: f64, varpi: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidInput(format!("q = {q} must lie in (0,1)")));
        }
        if !varpi.is_finite() {
            return Err(Error::InvalidInput(format!("varpi = {varpi} must be finite")));
        }
        Ok(Self {
            q,
            varpi,
            sigma_q: q.cbrt() * (1.0 + q).cbrt() / (1.0 - q),
            f_q: q.cbrt() / (2.0 * (1.0 + q).cbrt().powi(2)),
            u: q / (1.0 - q),
            sigma: q.sqrt() / (1.0 - q),
        })
    }

    /// `c_N = 1 − ϖ σ_q^{−1} N^{−1/3}`, clamped into `(q, q^{−1})`.
    ///
    /// The clamp keeps a relative margin of `1e−9` from the endpoints; it
    /// only activates for very small `N` or very large `|ϖ|`.
    pub fn c_of_n(&self, n: u64) -> f64 {
        let raw = 1.0 - self.varpi / (self.sigma_q * (n as f64).cbrt());
        let lo = self.q * (1.0 + 1e-9);
        let hi = (1.0 / self.q) * (1.0 - 1e-9);
        raw.clamp(lo, hi)
    }

    /// Drift `μ_i = (−1)^i √2 ϖ` of the `i`-th limiting curve (1-based).
    pub fn drift(&self, i: usize) -> f64 {
        let sign = if i.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * std::f64::consts::SQRT_2 * self.varpi
    }

    /// The fixed offsets `a_i = |ϖ| + 3i`, `a_i^q = a_i/σ_q`.
    pub fn printed_offsets(&self) -> ContourOffsets {
        let a = |i: f64| self.varpi.abs() + 3.0 * i;
        ContourOffsets {
            a1: a(1.0),
            a2: a(2.0),
            a3: a(3.0),
            a1q: a(1.0) / self.sigma_q,
            a2q: a(2.0) / self.sigma_q,
            a3q: a(3.0) / self.sigma_q,
        }
    }
}

/// The lattice `Λ_t(N) = a_t ℤ + b_t` carrying the rescaled particles at time
/// `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeSpec {
    /// Macroscopic time `t ≥ 0`.
    pub t: f64,
    /// Scaling parameter `N`.
    pub n: u64,
    /// Discrete time `T_t = ⌊t N^{2/3}⌋`.
    pub big_t: i64,
    /// Spacing `a_t = σ_q^{−1} N^{−1/3}`.
    pub a_t: f64,
    /// Offset `b_t = a_t (−2qN/(1−q) − qT_t/(1−q))`.
    pub b_t: f64,
}

/// Tolerance for lattice membership of `(x − b_t)/a_t`.
const LATTICE_TOL: f64 = 1e-9;

impl LatticeSpec {
    /// Lattice at time `t` for the given scaling.
    pub fn new(t: f64, n: u64, params: &ScalingParams) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidInput(format!("time t = {t} must be finite and non-negative")));
        }
        if n == 0 {
            return Err(Error::InvalidInput("N must be at least 1".into()));
        }
        let nf = n as f64;
        let n13 = nf.cbrt();
        let v = t * n13 * n13;
        // ⌊·⌋ that is robust to the last-bit error of N^{2/3}.
        let r = v.round();
        let big_t = if (v - r).abs() <= 1e-9 * v.max(1.0) { r } else { v.floor() } as i64;
        let q = params.q;
        let a_t = 1.0 / (params.sigma_q * n13);
        let b_t = a_t * (-2.0 * q * nf / (1.0 - q) - q * big_t as f64 / (1.0 - q));
        Ok(Self { t, n, big_t, a_t, b_t })
    }

    /// The real number `(x − b_t)/a_t` (the lifted coordinate `x̃`).
    pub fn lifted(&self, x: f64) -> f64 {
        (x - self.b_t) / self.a_t
    }

    /// Whether `x` lies on the lattice.
    pub fn contains(&self, x: f64) -> bool {
        let k = self.lifted(x);
        (k - k.round()).abs() <= LATTICE_TOL
    }

    /// Integer index `k` with `x = b_t + k a_t`.
    pub fn index(&self, x: f64) -> Result<i64> {
        let k = self.lifted(x);
        if (k - k.round()).abs() <= LATTICE_TOL {
            Ok(k.round() as i64)
        } else {
            Err(Error::Lattice(format!(
                "x = {x} is not on the lattice at t = {} (N = {}): (x − b_t)/a_t = {k}",
                self.t, self.n
            )))
        }
    }

    /// Lattice point with index `k`.
    pub fn point(&self, k: i64) -> f64 {
        self.b_t + k as f64 * self.a_t
    }

    /// Index of the lattice point nearest to `x`.
    pub fn nearest_index(&self, x: f64) -> i64 {
        self.lifted(x).round() as i64
    }

    /// Lattice point nearest to `x`.
    pub fn nearest(&self, x: f64) -> f64 {
        self.point(self.nearest_index(x))
    }
}

fn ln_or_singular(z: C64, what: &str) -> Result<C64> {
    checked_ln(z).ok_or_else(|| Error::Singularity(format!("{what} = {z} lies on the branch cut or at zero")))
}

fn check_s_g_domain(z: C64, q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidInput(format!("q = {q} must lie in (0,1)")));
    }
    if z == C64::new(0.0, 0.0) || z == C64::new(q, 0.0) || z == C64::new(1.0 / q, 0.0) {
        return Err(Error::Singularity(format!("z = {z} is a singular point (0, q or 1/q)")));
    }
    Ok(())
}

/// `S(z) = log(1 − q/z) − log(1 − qz) − (2q/(1−q)) log z`, principal branches.
pub fn eval_s(z: C64, q: f64) -> Result<C64> {
    check_s_g_domain(z, q)?;
    let one = C64::new(1.0, 0.0);
    Ok(ln_or_singular(one - q / z, "1 − q/z")? - ln_or_singular(one - q * z, "1 − qz")?
        - ln_or_singular(z, "z")? * (2.0 * q / (1.0 - q)))
}

/// `G(z) = log(1 − q/z) − (q/(1−q)) log z − log(1 − q)`, principal branches.
pub fn eval_g(z: C64, q: f64) -> Result<C64> {
    check_s_g_domain(z, q)?;
    let one = C64::new(1.0, 0.0);
    Ok(ln_or_singular(one - q / z, "1 − q/z")? - ln_or_singular(z, "z")? * (q / (1.0 - q)) - (1.0 - q).ln())
}
