//! Correlation functions, factorial-moment predictions and gap probabilities
//! of Pfaffian point processes.
//!
//! A Pfaffian point process with `2×2` matrix kernel `K` and reference
//! measure `μ` has correlation functions `ρ_n(x₁,…,x_n) = Pf[K(x_i, x_j)]`
//! and gap probabilities given by the Fredholm Pfaffian series
//!
//! ```text
//! P(no point in A) = 1 + Σ_{n≥1} (−1)ⁿ/n! ∫_{Aⁿ} ρ_n dμⁿ.
//! ```
//!
//! Two routes evaluate the series on a quadrature grid `{(x_i, w_i)}`:
//!
//! * [`gap_series`] truncates the sum after `n_max` terms;
//! * [`gap_discretized`] computes the whole sum at once as `Pf(J − Q)` with
//!   `Q` the `2n×2n` matrix of blocks `√(w_i w_j) K(x_i, x_j)` and `J` the
//!   block-diagonal matrix of `[[0, 1], [−1, 0]]`.
//!
//! For one node with weight `w`, `Pf(J − Q) = 1 − w K₁₂(x, x)`, which is
//! the first two terms of the series (`ρ₁ = K₁₂(x,x)`).  In general
//! `Pf(J − λQ) = Σ_n λⁿ c_n` with `c_n` the discretised `n`-th series term;
//! [`gap_series`] obtains the `c_n` from `log Pf(J − λQ) = ½ log det(I + λJQ)`
//! through power traces, so both routes share one grid but differ in how the
//! series is summed.

use crate::kernels::{
    kernel_airy_matrix, kernel_cross, kernel_geo, kernel_limit, kernel_pre_n, limit_equal_time_matrix, airy_limit_matrices,
    GeoParams, KernelMatrices, KernelOptions, LatticeSpec, ScalingParams,
};
use crate::skewlin::{block_matrix_from_upper, pfaffian, KernelValue};
use crate::special::gauss_legendre_cached;
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// A point `(t, x)` of `𝒯 × ℝ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaceTimePoint {
    pub t: f64,
    pub x: f64,
}

impl SpaceTimePoint {
    pub fn new(t: f64, x: f64) -> Self {
        Self { t, x }
    }
}

/// A `2×2` matrix kernel that can be evaluated on a list of space-time
/// points.
pub trait PfaffianKernel: Sync {
    /// Blocks `K_ab(p_i, p_j)` for all pairs of `points`.
    fn matrices(&self, points: &[SpaceTimePoint]) -> Result<KernelMatrices>;
}

fn pairwise(points: &[SpaceTimePoint], f: impl Fn(&SpaceTimePoint, &SpaceTimePoint) -> Result<KernelValue> + Sync) -> Result<KernelMatrices> {
    let n = points.len();
    let values: Vec<KernelValue> = (0..n * n)
        .into_par_iter()
        .map(|k| f(&points[k / n], &points[k % n]))
        .collect::<Result<_>>()?;
    let block = |g: fn(&KernelValue) -> C64| DMatrix::from_fn(n, n, |i, j| g(&values[i * n + j]));
    Ok(KernelMatrices { k11: block(|v| v.k11), k12: block(|v| v.k12), k21: block(|v| v.k21), k22: block(|v| v.k22) })
}

fn common_time(points: &[SpaceTimePoint]) -> Option<f64> {
    let t = points.first()?.t;
    points.iter().all(|p| p.t == t).then_some(t)
}

fn xs_of(points: &[SpaceTimePoint]) -> Vec<f64> {
    points.iter().map(|p| p.x).collect()
}

/// The limiting kernel `K^∞` (equal-time grids use one shared set of
/// contours).
#[derive(Clone, Copy, Debug)]
pub struct LimitKernel {
    pub params: ScalingParams,
    pub opts: KernelOptions,
}

impl PfaffianKernel for LimitKernel {
    fn matrices(&self, points: &[SpaceTimePoint]) -> Result<KernelMatrices> {
        match common_time(points) {
            Some(t) => limit_equal_time_matrix(t, &xs_of(points), &self.params, &self.opts),
            None if points.is_empty() => Ok(KernelMatrices::empty()),
            None => pairwise(points, |a, b| kernel_limit(a.t, a.x, b.t, b.x, &self.params, &self.opts)),
        }
    }
}

/// The crossover kernel `K^cross` with parameter `varpi`.
///
/// Equal-time grids are evaluated through the exact gauge relation with
/// `K^∞`: with `s = f_q t'` and `g(X) = e^{−s³/3 + sX}`,
/// `K^cross(s,X; s,Y)` has blocks `g(X)g(Y)K^∞₁₁`, `g(X)/g(Y) K^∞₁₂`,
/// `K^∞₂₂/(g(X)g(Y))` evaluated at `(t', X − s²; t', Y − s²)`.
#[derive(Clone, Copy, Debug)]
pub struct CrossKernel {
    pub varpi: f64,
    pub opts: KernelOptions,
}

impl PfaffianKernel for CrossKernel {
    fn matrices(&self, points: &[SpaceTimePoint]) -> Result<KernelMatrices> {
        match common_time(points) {
            Some(s) => {
                let p = ScalingParams::new(0.5, self.varpi)?;
                let xs: Vec<f64> = points.iter().map(|q| q.x - s * s).collect();
                let m = limit_equal_time_matrix(s / p.f_q, &xs, &p, &self.opts)?;
                let g: Vec<f64> = points.iter().map(|q| (-s.powi(3) / 3.0 + s * q.x).exp()).collect();
                let n = points.len();
                Ok(KernelMatrices {
                    k11: DMatrix::from_fn(n, n, |i, j| m.k11[(i, j)] * g[i] * g[j]),
                    k12: DMatrix::from_fn(n, n, |i, j| m.k12[(i, j)] * g[i] / g[j]),
                    k21: DMatrix::from_fn(n, n, |i, j| m.k21[(i, j)] * g[j] / g[i]),
                    k22: DMatrix::from_fn(n, n, |i, j| m.k22[(i, j)] / (g[i] * g[j])),
                })
            }
            None if points.is_empty() => Ok(KernelMatrices::empty()),
            None => pairwise(points, |a, b| kernel_cross(a.t, a.x, b.t, b.x, self.varpi, &self.opts)),
        }
    }
}

/// The pre-limit kernel `K^N` (points must lie on the scaling lattices).
#[derive(Clone, Copy, Debug)]
pub struct PreLimitKernel {
    pub params: ScalingParams,
    pub n: u64,
    pub opts: KernelOptions,
}

impl PfaffianKernel for PreLimitKernel {
    fn matrices(&self, points: &[SpaceTimePoint]) -> Result<KernelMatrices> {
        pairwise(points, |a, b| kernel_pre_n(a.t, a.x, b.t, b.x, &self.params, self.n, &self.opts))
    }
}

/// The finite Schur-process kernel `K^geo`; a point `(t, x)` is the site
/// `x ∈ ℤ` of the partition `λ^{t}` (so `t` must be a non-negative integer).
#[derive(Clone, Copy, Debug)]
pub struct GeoKernel {
    pub params: GeoParams,
    pub opts: KernelOptions,
}

fn as_site(p: &SpaceTimePoint) -> Result<(u64, i64)> {
    if p.t >= 0.0 && p.t.fract() == 0.0 && p.x.fract() == 0.0 && p.x.is_finite() {
        Ok((p.t as u64, p.x as i64))
    } else {
        Err(Error::Lattice(format!("({}, {}) is not a site of ℕ × ℤ", p.t, p.x)))
    }
}

impl PfaffianKernel for GeoKernel {
    fn matrices(&self, points: &[SpaceTimePoint]) -> Result<KernelMatrices> {
        pairwise(points, |a, b| {
            let ((mu, x), (mv, y)) = (as_site(a)?, as_site(b)?);
            kernel_geo(mu, x, mv, y, &self.params, &self.opts)
        })
    }
}

/// The equal-time crossover kernel under the large-time Airy scaling at
/// parameter `t`, in the gauge `(k11, k12, −k12ᵀ, k22/t⁴)`; point times are
/// ignored.  As `t → ∞` its gap probabilities approach `F₂`.
#[derive(Clone, Copy, Debug)]
pub struct AiryLimitKernel {
    pub t: f64,
    pub varpi: f64,
    pub opts: KernelOptions,
}

impl PfaffianKernel for AiryLimitKernel {
    fn matrices(&self, points: &[SpaceTimePoint]) -> Result<KernelMatrices> {
        let xs = xs_of(points);
        Ok(airy_limit_matrices(self.t, &xs, &xs, self.varpi, &self.opts)?.gauge_kernel(self.t))
    }
}

/// The Pfaffian embedding `[[0, K(x,y)], [−K(y,x), 0]]` of the Airy kernel
/// `K_Ai`: a Pfaffian kernel for the Airy determinantal point process.
/// Point times are ignored.
#[derive(Clone, Copy, Debug)]
pub struct AiryEmbeddingKernel {
    pub opts: KernelOptions,
}

/// The Pfaffian embedding of a scalar determinantal kernel matrix.
pub fn determinantal_embedding(k: &DMatrix<f64>) -> KernelMatrices {
    let n = k.nrows();
    let z = DMatrix::<C64>::zeros(n, n);
    let kc = k.map(|v| C64::new(v, 0.0));
    KernelMatrices { k11: z.clone(), k12: kc.clone(), k21: -kc.transpose(), k22: z }
}

impl PfaffianKernel for AiryEmbeddingKernel {
    fn matrices(&self, points: &[SpaceTimePoint]) -> Result<KernelMatrices> {
        let xs = xs_of(points);
        Ok(determinantal_embedding(&kernel_airy_matrix(&xs, &xs, &self.opts)?))
    }
}

/// The gauge transform `K₁₁ f(x)f(y)`, `K₁₂ f(x)/f(y)`, `K₂₁ f(y)/f(x)`,
/// `K₂₂/(f(x)f(y))` of another kernel; it defines the same point process.
pub struct GaugedKernel<'a, K: PfaffianKernel, F: Fn(SpaceTimePoint) -> f64 + Sync> {
    pub inner: &'a K,
    pub f: F,
}

impl<K: PfaffianKernel, F: Fn(SpaceTimePoint) -> f64 + Sync> PfaffianKernel for GaugedKernel<'_, K, F> {
    fn matrices(&self, points: &[SpaceTimePoint]) -> Result<KernelMatrices> {
        let m = self.inner.matrices(points)?;
        let g: Vec<f64> = points.iter().map(|p| (self.f)(*p)).collect();
        let n = points.len();
        Ok(KernelMatrices {
            k11: DMatrix::from_fn(n, n, |i, j| m.k11[(i, j)] * g[i] * g[j]),
            k12: DMatrix::from_fn(n, n, |i, j| m.k12[(i, j)] * g[i] / g[j]),
            k21: DMatrix::from_fn(n, n, |i, j| m.k21[(i, j)] * g[j] / g[i]),
            k22: DMatrix::from_fn(n, n, |i, j| m.k22[(i, j)] / (g[i] * g[j])),
        })
    }
}

/// A kernel given by a closure on pairs of points.
pub struct FnKernel<F: Fn(SpaceTimePoint, SpaceTimePoint) -> KernelValue + Sync>(pub F);

impl<F: Fn(SpaceTimePoint, SpaceTimePoint) -> KernelValue + Sync> PfaffianKernel for FnKernel<F> {
    fn matrices(&self, points: &[SpaceTimePoint]) -> Result<KernelMatrices> {
        pairwise(points, |a, b| Ok((self.0)(*a, *b)))
    }
}

/// Reference measure of a point process on `𝒯 × ℝ`.
#[derive(Clone, Debug, PartialEq)]
pub enum ReferenceMeasure {
    /// `scale ×` counting measure on the lattice `spacing·ℤ + offset` at
    /// time `time`.
    Lattice { time: f64, spacing: f64, offset: f64, scale: f64 },
    /// Lebesgue measure on the line at time `time`.
    Lebesgue { time: f64 },
    /// Counting measure on `times` × Lebesgue measure.
    ProductOverTimes { times: Vec<f64> },
}

impl ReferenceMeasure {
    /// The measure `ν_t(N) = a_t ×` counting measure on `Λ_t(N)`.
    pub fn from_lattice(spec: &LatticeSpec) -> Self {
        Self::Lattice { time: spec.t, spacing: spec.a_t, offset: spec.b_t, scale: spec.a_t }
    }

    /// Counting measure on `ℤ` at the (integer) time `time`.
    pub fn integers(time: u64) -> Self {
        Self::Lattice { time: time as f64, spacing: 1.0, offset: 0.0, scale: 1.0 }
    }

    /// Quadrature of `(lo, hi]`: lattice sites with weight `scale`, or
    /// `grid_size` Gauss–Legendre nodes per time (in panels of at most 24).
    pub fn nodes(&self, lo: f64, hi: f64, grid_size: usize) -> Result<(Vec<SpaceTimePoint>, Vec<f64>)> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidInput(format!("window ({lo}, {hi}] must be finite")));
        }
        if hi <= lo {
            return Ok((Vec::new(), Vec::new()));
        }
        match self {
            Self::Lattice { time, spacing, offset, scale } => {
                if !(*spacing > 0.0 && *scale > 0.0) {
                    return Err(Error::InvalidInput(format!("lattice spacing {spacing} and scale {scale} must be positive")));
                }
                let first = ((lo - offset) / spacing).floor() as i64 + 1;
                let last = ((hi - offset) / spacing).floor() as i64;
                let pts: Vec<SpaceTimePoint> = (first..=last)
                    .map(|k| SpaceTimePoint::new(*time, offset + k as f64 * spacing))
                    .filter(|p| p.x > lo && p.x <= hi)
                    .collect();
                let w = vec![*scale; pts.len()];
                Ok((pts, w))
            }
            Self::Lebesgue { time } => lebesgue_nodes(&[*time], lo, hi, grid_size),
            Self::ProductOverTimes { times } => lebesgue_nodes(times, lo, hi, grid_size),
        }
    }
}

const MAX_PANEL_ORDER: usize = 24;

fn lebesgue_nodes(times: &[f64], lo: f64, hi: f64, grid_size: usize) -> Result<(Vec<SpaceTimePoint>, Vec<f64>)> {
    if grid_size == 0 {
        return Err(Error::InvalidInput("grid size must be positive".into()));
    }
    let panels = grid_size.div_ceil(MAX_PANEL_ORDER);
    let order = grid_size.div_ceil(panels);
    let (gx, gw) = gauss_legendre_cached(order);
    let h = (hi - lo) / panels as f64;
    let mut pts = Vec::new();
    let mut ws = Vec::new();
    for &t in times {
        for p in 0..panels {
            let a = lo + p as f64 * h;
            for (x, w) in gx.iter().zip(&gw) {
                pts.push(SpaceTimePoint::new(t, a + 0.5 * h * (x + 1.0)));
                ws.push(0.5 * h * w);
            }
        }
    }
    Ok((pts, ws))
}

/// Which route produced a gap probability.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GapMethod {
    Series,
    DiscretizedPfaffian,
}

/// A gap probability with diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct GapProbabilityResult {
    pub value: f64,
    /// Number of series terms `n ≥ 1` included (the grid size for the
    /// discretised Pfaffian, which sums all terms).
    pub n_terms_used: usize,
    /// `|c_n|` for `n = 0, 1, …, n_terms_used` (series route only).
    pub term_magnitudes: Vec<f64>,
    pub method: GapMethod,
    /// Largest imaginary part discarded while realising the result.
    pub imaginary_residual: f64,
}

/// Imaginary parts above this are reported as a consistency error.
pub const IMAGINARY_TOLERANCE: f64 = 1e-6;

fn realise(v: C64, what: &str) -> Result<f64> {
    if v.im.abs() > IMAGINARY_TOLERANCE * v.norm().max(1.0) {
        Err(Error::Consistency(format!("{what} has imaginary part {:.3e} (value {v})", v.im)))
    } else {
        Ok(v.re)
    }
}

fn weighted_skew(m: &KernelMatrices, w: &[f64]) -> Result<crate::skewlin::SkewMatrix> {
    let s: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    block_matrix_from_upper(w.len(), |i, j| {
        let f = s[i] * s[j];
        let v = m.value(i, j);
        KernelValue::new(v.k11 * f, v.k12 * f, v.k21 * f, v.k22 * f)
    })
}

/// `ρ_n(p₁,…,p_n) = Pf[K(p_i, p_j)]`, realised (the imaginary residual must
/// be below [`IMAGINARY_TOLERANCE`]).  The empty configuration gives 1.
pub fn correlation_rho(points: &[SpaceTimePoint], kernel: &dyn PfaffianKernel) -> Result<f64> {
    for i in 0..points.len() {
        for j in 0..i {
            if points[i] == points[j] {
                return Err(Error::InvalidInput(format!("points {j} and {i} coincide")));
            }
        }
    }
    if points.is_empty() {
        return Ok(1.0);
    }
    let m = kernel.matrices(points)?;
    let a = block_matrix_from_upper(points.len(), |i, j| m.value(i, j))?;
    realise(pfaffian(&a), "correlation function")
}

/// Default number of quadrature nodes per time for [`gap_series`].
pub const DEFAULT_SERIES_GRID: usize = 48;
/// Default number of series terms.
pub const DEFAULT_N_MAX: usize = 8;
/// Default length of the integration window `(s, s + cut]`.
pub const DEFAULT_CUT: f64 = 10.0;

/// `c_n` for `n = 0..=n_max` from `Pf(J − λQ) = exp(Σ_k g_k λᵏ)` with
/// `g_k = (−1)^{k+1} tr((JQ)ᵏ)/(2k)`.
fn series_coefficients(q: &DMatrix<C64>, n_max: usize) -> Vec<C64> {
    let dim = q.nrows();
    // J Q: row 2i of JQ is row 2i+1 of Q, row 2i+1 is −row 2i.
    let jq = DMatrix::from_fn(dim, dim, |r, c| if r % 2 == 0 { q[(r + 1, c)] } else { -q[(r - 1, c)] });
    let mut g = vec![C64::new(0.0, 0.0); n_max + 1];
    let mut power = jq.clone();
    for (k, gk) in g.iter_mut().enumerate().skip(1) {
        if k > 1 {
            power = &power * &jq;
        }
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        *gk = power.trace() * sign / (2.0 * k as f64);
    }
    let mut c = vec![C64::new(0.0, 0.0); n_max + 1];
    c[0] = C64::new(1.0, 0.0);
    for n in 1..=n_max {
        let s: C64 = (1..=n).map(|k| g[k] * c[n - k] * k as f64).sum();
        c[n] = s / n as f64;
    }
    c
}

fn gap_inputs(
    threshold: f64,
    kernel: &dyn PfaffianKernel,
    reference: &ReferenceMeasure,
    cutoff: f64,
    grid_size: usize,
) -> Result<Option<crate::skewlin::SkewMatrix>> {
    let (pts, w) = reference.nodes(threshold, cutoff, grid_size)?;
    if pts.is_empty() {
        return Ok(None);
    }
    let m = kernel.matrices(&pts)?;
    Ok(Some(weighted_skew(&m, &w)?))
}

/// Truncated Fredholm Pfaffian series for the probability of no point in
/// `(threshold, cutoff]` (at every time of the reference measure), on a
/// shared grid of [`DEFAULT_SERIES_GRID`] nodes per time.
///
/// Fails with a conditioning error when the term magnitudes fail to decay
/// after `n = 3`.
pub fn gap_series(
    threshold: f64,
    kernel: &dyn PfaffianKernel,
    reference: &ReferenceMeasure,
    n_max: usize,
    cutoff: f64,
) -> Result<GapProbabilityResult> {
    gap_series_on_grid(threshold, kernel, reference, n_max, cutoff, DEFAULT_SERIES_GRID)
}

/// [`gap_series`] with an explicit grid size.
pub fn gap_series_on_grid(
    threshold: f64,
    kernel: &dyn PfaffianKernel,
    reference: &ReferenceMeasure,
    n_max: usize,
    cutoff: f64,
    grid_size: usize,
) -> Result<GapProbabilityResult> {
    let empty = |n: usize| GapProbabilityResult {
        value: 1.0,
        n_terms_used: n,
        term_magnitudes: vec![1.0],
        method: GapMethod::Series,
        imaginary_residual: 0.0,
    };
    if n_max == 0 {
        return Ok(empty(0));
    }
    let Some(a) = gap_inputs(threshold, kernel, reference, cutoff, grid_size)? else {
        return Ok(empty(0));
    };
    let c = series_coefficients(&a.to_dmatrix(), n_max);
    let mags: Vec<f64> = c.iter().map(|v| v.norm()).collect();
    let scale = mags.iter().cloned().fold(0.0, f64::max);
    for n in 4..mags.len() {
        if mags[n] >= mags[n - 1] && mags[n] > 1e-12 * scale {
            return Err(Error::Conditioning(format!(
                "series terms do not decay: |c_{n}| = {:.3e} ≥ |c_{}| = {:.3e}; use a denser grid or a smaller window",
                mags[n],
                n - 1,
                mags[n - 1]
            )));
        }
    }
    let total: C64 = c.iter().sum();
    Ok(GapProbabilityResult {
        value: realise(total, "gap probability")?,
        n_terms_used: n_max,
        term_magnitudes: mags,
        method: GapMethod::Series,
        imaginary_residual: total.im.abs(),
    })
}

/// `Pf(J − Q)` on `grid_size` Gauss–Legendre nodes per time of
/// `(threshold, cutoff]` (lattice measures use all sites).
pub fn gap_discretized(
    threshold: f64,
    kernel: &dyn PfaffianKernel,
    reference: &ReferenceMeasure,
    grid_size: usize,
    cutoff: f64,
) -> Result<GapProbabilityResult> {
    if grid_size < 8 {
        return Err(Error::InvalidInput(format!("grid size {grid_size} must be at least 8")));
    }
    let Some(a) = gap_inputs(threshold, kernel, reference, cutoff, grid_size)? else {
        return Ok(GapProbabilityResult {
            value: 1.0,
            n_terms_used: 0,
            term_magnitudes: Vec::new(),
            method: GapMethod::DiscretizedPfaffian,
            imaginary_residual: 0.0,
        });
    };
    let n = a.dim();
    let j = crate::skewlin::SkewMatrix::from_upper(n, |r, c| {
        let jv = if r % 2 == 0 && c == r + 1 { 1.0 } else { 0.0 };
        C64::new(jv, 0.0) - a.get(r, c)
    })?;
    let v = pfaffian(&j);
    Ok(GapProbabilityResult {
        value: realise(v, "gap probability")?,
        n_terms_used: n / 2,
        term_magnitudes: Vec::new(),
        method: GapMethod::DiscretizedPfaffian,
        imaginary_residual: v.im.abs(),
    })
}

/// Nodes used by [`f2_airy_reference`] on `(s, s + F2_CUT]`.
pub const F2_GRID: usize = 64;
/// Window length used by [`f2_airy_reference`].
pub const F2_CUT: f64 = 12.0;

/// `F₂(s) = det(I − K_Ai)` on `(s, ∞)`, by Gauss–Legendre discretisation of
/// the equal-time extended Airy kernel on `(s, s + 12]`.
pub fn f2_airy_reference(s: f64) -> Result<f64> {
    f2_airy_reference_with(s, F2_GRID, &KernelOptions::default())
}

/// [`f2_airy_reference`] with explicit grid and kernel options.
pub fn f2_airy_reference_with(s: f64, grid_size: usize, opts: &KernelOptions) -> Result<f64> {
    let (pts, w) = lebesgue_nodes(&[0.0], s, s + F2_CUT, grid_size)?;
    let xs = xs_of(&pts);
    let k = kernel_airy_matrix(&xs, &xs, opts)?;
    let n = xs.len();
    let m = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - (w[i] * w[j]).sqrt() * k[(i, j)]);
    Ok(m.determinant())
}

/// A window `(lo, hi]` at time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub t: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(t: f64, lo: f64, hi: f64) -> Self {
        Self { t, lo, hi }
    }

    fn overlaps(&self, other: &Window) -> bool {
        self.t == other.t && self.lo < other.hi && other.lo < self.hi
    }
}

/// Nodes per window for Lebesgue reference measures in
/// [`factorial_moment_predict`].
pub const MOMENT_GRID: usize = 24;

/// The joint factorial moment `E[∏_j M(A_j)!/(M(A_j) − n_j)!]` as
/// `∫_{A₁^{n₁}×⋯} ρ_n`, by lattice sums or Gauss–Legendre quadrature
/// ([`MOMENT_GRID`] nodes per window).  Tuples with a repeated node are
/// skipped (`ρ_n` vanishes there).
///
/// The reference measure supplies the node layout; its time is replaced by
/// each window's time.
pub fn factorial_moment_predict(
    windows: &[Window],
    counts: &[usize],
    kernel: &dyn PfaffianKernel,
    reference: &ReferenceMeasure,
) -> Result<f64> {
    if windows.len() != counts.len() {
        return Err(Error::InvalidInput(format!("{} windows but {} counts", windows.len(), counts.len())));
    }
    for (i, a) in windows.iter().enumerate() {
        if !(a.lo < a.hi) || !a.lo.is_finite() || !a.hi.is_finite() {
            return Err(Error::InvalidInput(format!("window {i} = ({}, {}] is empty or unbounded", a.lo, a.hi)));
        }
        for (j, b) in windows.iter().enumerate().take(i) {
            if a.overlaps(b) {
                return Err(Error::InvalidInput(format!("windows {j} and {i} overlap")));
            }
        }
    }
    // nodes of every window that is used
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    let mut ranges = Vec::new();
    for (win, &n) in windows.iter().zip(counts) {
        if n == 0 {
            continue;
        }
        let measure = match reference {
            ReferenceMeasure::Lattice { spacing, offset, scale, .. } => {
                ReferenceMeasure::Lattice { time: win.t, spacing: *spacing, offset: *offset, scale: *scale }
            }
            _ => ReferenceMeasure::Lebesgue { time: win.t },
        };
        let (p, w) = measure.nodes(win.lo, win.hi, MOMENT_GRID)?;
        let start = pts.len();
        pts.extend(p);
        wts.extend(w);
        ranges.push((start..pts.len(), n));
    }
    if ranges.is_empty() {
        return Ok(1.0);
    }
    let m = kernel.matrices(&pts)?;
    // enumerate tuples: for each window, strictly increasing index tuples
    // (the integrand is symmetric), times n_j! for the ordered count.
    let mut choices: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut multiplicity = 1.0;
    for (range, n) in &ranges {
        let idx: Vec<usize> = range.clone().collect();
        choices.push(combinations(&idx, *n));
        multiplicity *= (1..=*n).product::<usize>() as f64;
    }
    let mut tuples: Vec<Vec<usize>> = vec![Vec::new()];
    for opts in &choices {
        let mut next = Vec::with_capacity(tuples.len() * opts.len());
        for t in &tuples {
            for o in opts {
                let mut v = t.clone();
                v.extend_from_slice(o);
                next.push(v);
            }
        }
        tuples = next;
    }
    let total: C64 = tuples
        .par_iter()
        .map(|t| -> Result<C64> {
            let a = block_matrix_from_upper(t.len(), |i, j| m.value(t[i], t[j]))?;
            let w: f64 = t.iter().map(|&i| wts[i]).product();
            Ok(pfaffian(&a) * w)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    realise(total * multiplicity, "factorial moment")
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        for mut rest in combinations(&items[i + 1..], k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// The Hadamard-type envelope `Σ_{n > n_max} (2n)^{n/2} (C·|A|)ⁿ/n!` of the
/// series tail, with `C` the largest kernel entry on the grid and `|A|` the
/// total weight.  Reported as a diagnostic; it is crude for wide windows.
pub fn series_tail_envelope(kernel_max: f64, total_weight: f64, n_max: usize) -> f64 {
    let x = kernel_max * total_weight;
    let mut sum = 0.0;
    let mut log_fact = (1..=n_max).map(|k| (k as f64).ln()).sum::<f64>();
    for n in n_max + 1..n_max + 200 {
        log_fact += (n as f64).ln();
        let nf = n as f64;
        let term = (0.5 * nf * (2.0 * nf).ln() + nf * x.ln() - log_fact).exp();
        sum += term;
        if term < 1e-300 || (n > n_max + 5 && term < 1e-16 * sum) {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn const_kernel(k12: f64) -> impl PfaffianKernel {
        FnKernel(move |a: SpaceTimePoint, b: SpaceTimePoint| {
            let z = C64::new(0.0, 0.0);
            let v = if a == b { k12 } else { 0.0 };
            KernelValue::new(z, C64::new(v, 0.0), C64::new(-v, 0.0), z)
        })
    }

    #[test]
    fn one_node_worked_example() {
        // Pf(J − Q) = 1 − w K12(x,x) for a single node of weight w.
        let k = const_kernel(0.3);
        let r = ReferenceMeasure::integers(0);
        let d = gap_discretized(0.5, &k, &r, 8, 1.5).unwrap();
        assert!((d.value - 0.7).abs() < 1e-15, "{}", d.value);
        let s = gap_series(0.5, &k, &r, 4, 1.5).unwrap();
        assert!((s.value - 0.7).abs() < 1e-15);
    }

    #[test]
    fn independent_sites_multiply() {
        // A diagonal K12 is a product of independent Bernoulli sites.
        let k = const_kernel(0.25);
        let r = ReferenceMeasure::integers(0);
        let d = gap_discretized(0.0, &k, &r, 8, 3.0).unwrap();
        assert!((d.value - 0.75f64.powi(3)).abs() < 1e-14);
        let s = gap_series(0.0, &k, &r, 3, 3.0).unwrap();
        assert!((s.value - 0.75f64.powi(3)).abs() < 1e-14);
    }

    #[test]
    fn trivial_cases() {
        let k = const_kernel(0.5);
        let r = ReferenceMeasure::Lebesgue { time: 0.0 };
        assert_eq!(gap_series(0.0, &k, &r, 0, 10.0).unwrap().value, 1.0);
        assert_eq!(gap_series(2.0, &k, &r, 8, 2.0).unwrap().value, 1.0);
        assert_eq!(correlation_rho(&[], &k).unwrap(), 1.0);
        let zero = FnKernel(|_, _| KernelValue::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
        assert_eq!(gap_discretized(0.0, &zero, &r, 16, 1.0).unwrap().value, 1.0);
        assert!(gap_discretized(0.0, &zero, &r, 4, 1.0).is_err());
    }

    #[test]
    fn combinations_enumerate_subsets() {
        assert_eq!(combinations(&[1, 2, 3], 2), vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(combinations(&[1], 2).len(), 0);
    }

    #[test]
    fn lattice_nodes_are_half_open() {
        let r = ReferenceMeasure::integers(1);
        let (p, w) = r.nodes(0.0, 3.0, 0).unwrap();
        assert_eq!(p.iter().map(|p| p.x).collect::<Vec<_>>(), vec![1.0, 2.0, 3.0]);
        assert_eq!(w, vec![1.0; 3]);
    }

    #[test]
    fn overlapping_windows_are_rejected() {
        let k = const_kernel(0.1);
        let r = ReferenceMeasure::integers(0);
        let w = [Window::new(0.0, 0.0, 2.0), Window::new(0.0, 1.0, 3.0)];
        assert!(matches!(factorial_moment_predict(&w, &[1, 1], &k, &r), Err(Error::InvalidInput(_))));
        assert_eq!(factorial_moment_predict(&w[..1], &[0], &k, &r).unwrap(), 1.0);
    }
}
