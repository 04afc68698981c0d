//! Pfaffian correlation kernels and the scaling constants that tie them
//! together.
//!
//! * [`kernel_geo`] — the finite Pfaffian Schur-process kernel on
//!   `⟦1,m⟧ × ℤ`, as double integrals over zero-centred circles.
//! * [`kernel_pre_n`] — the same kernel after the scaling of
//!   [`ScalingParams`]/[`LatticeSpec`], on the closed `γ_N^±` contours.
//! * [`kernel_limit`] — the limiting kernel `K^∞` on infinite wedge contours.
//! * [`kernel_cross`] — the crossover kernel with parameter `ϖ`.
//! * [`kernel_airy_extended`] — the extended Airy kernel.
//! * [`airy_limit_scaled`] — the large-time rescalings of `K^∞` and their
//!   Airy-type limits.
//!
//! # Contour placement
//!
//! Every contour integral here has an integrand of the form
//! `e^{±z³/3 + (quadratic) + (linear)} × (rational)`.  Any vertex that keeps
//! the rational factor's poles on the correct side gives the same value, but
//! in double precision the choice matters: a vertex far from the real saddle
//! point of the exponential makes the integrand exponentially larger than the
//! integral, and the quadrature then loses all significant digits to
//! cancellation.  Vertices are therefore placed at the real saddle point of
//! the exponential and pushed away from the poles by a margin of
//! [`VERTEX_MARGIN`] when the saddle is not admissible.  Explicit vertices can
//! be supplied (see [`LimitVertices`]) to check contour-deformation
//! invariance.

mod airy;
mod cross;
mod geo;
mod limit;
mod prelimit;
mod scaling;

pub use airy::{airy_ai, airy_ai_prime, airy_limit_matrices, airy_limit_scaled, airy_offsets, kernel_airy_extended,
    kernel_airy_extended_with, kernel_airy_matrix, AiryBlock, AiryLimitMatrices};
pub use cross::{cross_parts, kernel_cross, CrossParts};
pub use geo::{geo_radii, kernel_geo, GeoParams, GeoRadii};
pub use limit::{kernel_limit, limit_equal_time_matrix, limit_parts, limit_parts_with, LimitParts, LimitVertices};
pub use prelimit::{kernel_pre_n, pre_n_parts, PreNParts};
pub use scaling::{eval_g, eval_s, ContourOffsets, LatticeSpec, ScalingParams};

use crate::contour::{make_ray_pair_with, two_pi_i, Contour, PanelSpec, DEFAULT_RAY_LENGTH};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// Minimum distance kept between a contour vertex and a pole of the rational
/// factor (or between two coupled vertices).
pub const VERTEX_MARGIN: f64 = 0.5;

/// How the 22-block is evaluated where its closed form is ambiguous
/// (`x = y` for `K^∞`, `x − s² = y − t²` for `K^cross`, with `s ≠ t`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DiagonalConvention {
    /// Report [`Error::DiagonalAmbiguity`].
    #[default]
    Error,
    /// Evaluate the closed form stated for the upper region at equality.
    UpperFormula,
}

impl std::str::FromStr for DiagonalConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error" => Ok(Self::Error),
            "upper-formula" => Ok(Self::UpperFormula),
            other => Err(Error::Usage(format!("unknown diagonal convention '{other}' (use error|upper-formula)"))),
        }
    }
}

/// Numerical knobs shared by all kernel evaluations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelOptions {
    /// Panel layout on every smooth contour piece.
    pub panels: PanelSpec,
    /// Truncation radius of infinite wedge contours.
    pub ray_length: f64,
    /// Treatment of the ambiguous 22-block diagonal.
    pub diagonal: DiagonalConvention,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self { panels: PanelSpec::default(), ray_length: DEFAULT_RAY_LENGTH, diagonal: DiagonalConvention::Error }
    }
}

impl KernelOptions {
    /// Same options with twice as many panels per piece.
    pub fn refined(self) -> Self {
        Self { panels: self.panels.doubled(), ..self }
    }
}

/// Wedge `C^{φ}_{v}` for a real vertex `v`.
pub(crate) fn wedge(vertex: f64, phi: f64, opts: &KernelOptions) -> Result<Contour> {
    make_ray_pair_with(C64::new(vertex, 0.0), phi, opts.ray_length, opts.panels)
}

/// Right real saddle of `e^{z³/3 − a z² − x z}` (equivalently of
/// `e^{−z³/3 + a z² + x z}`): `a + √(a² + x)`, or `a` when the saddles are
/// complex.
pub(crate) fn right_saddle(a: f64, x: f64) -> f64 {
    let d = a * a + x;
    if d > 0.0 {
        a + d.sqrt()
    } else {
        a
    }
}

/// Left real saddle `a − √(a² + x)`, or `a` when the saddles are complex.
pub(crate) fn left_saddle(a: f64, x: f64) -> f64 {
    let d = a * a + x;
    if d > 0.0 {
        a - d.sqrt()
    } else {
        a
    }
}

/// Smallest entry of a non-empty slice.
pub(crate) fn min_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Weighted node values `F[i][a] = f(z_a, xs[i]) · wt_a` for a contour.
pub(crate) fn node_matrix(c: &Contour, xs: &[f64], f: impl Fn(C64, f64) -> C64 + Sync, context: &str) -> Result<DMatrix<C64>> {
    let m = c.nodes().len();
    let mut out = DMatrix::<C64>::zeros(xs.len(), m);
    for (i, &x) in xs.iter().enumerate() {
        for (a, (z, wt)) in c.nodes().iter().zip(c.weights()).enumerate() {
            let v = f(*z, x);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite { node: *z, context: format!("{context}, x = {x}") });
            }
            out[(i, a)] = v * wt;
        }
    }
    Ok(out)
}

/// `(1/(2πi)²) Σ_{a,b} Fz[i][a] h(z_a,w_b) Fw[j][b]` for all `(i, j)`: the
/// tensor-product rule for a separable double contour integral, evaluated on
/// whole grids of outer arguments at once.
///
/// The pairwise factor is streamed one `w`-node at a time, so memory stays
/// linear in the number of nodes.
#[allow(clippy::too_many_arguments)]
pub(crate) fn double_matrix(
    cz: &Contour,
    xs: &[f64],
    fz: impl Fn(C64, f64) -> C64 + Sync,
    cw: &Contour,
    ys: &[f64],
    fw: impl Fn(C64, f64) -> C64 + Sync,
    h: impl Fn(C64, C64) -> C64 + Sync,
    context: &str,
) -> Result<DMatrix<C64>> {
    let a = node_matrix(cz, xs, fz, context)?;
    let b = node_matrix(cw, ys, fw, context)?;
    let zs = cz.nodes();
    let (nx, ny) = (xs.len(), ys.len());
    let zero = || Ok(DMatrix::<C64>::zeros(nx, ny));
    let sum = cw
        .nodes()
        .par_iter()
        .enumerate()
        .try_fold(
            || (zero(), vec![C64::new(0.0, 0.0); nx]),
            |(acc, mut az), (j, w)| {
                let mut acc = acc?;
                az.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
                for (k, z) in zs.iter().enumerate() {
                    let v = h(*z, *w);
                    if !(v.re.is_finite() && v.im.is_finite()) {
                        return Err(Error::NonFinite { node: *z, context: format!("{context}, w = {w}") });
                    }
                    for (i, slot) in az.iter_mut().enumerate() {
                        *slot += a[(i, k)] * v;
                    }
                }
                for (i, &ai) in az.iter().enumerate() {
                    for jj in 0..ny {
                        acc[(i, jj)] += ai * b[(jj, j)];
                    }
                }
                Ok((Ok(acc), az))
            },
        )
        .map(|r| r.and_then(|(acc, _)| acc))
        .try_reduce(|| DMatrix::<C64>::zeros(nx, ny), |x, y| Ok(x + y))?;
    let tp = two_pi_i();
    Ok(sum / (tp * tp))
}

/// `(1/2πi) Σ_a f(z_a, x) wt_a` for every `x` in `xs`.
pub(crate) fn single_vec(c: &Contour, xs: &[f64], f: impl Fn(C64, f64) -> C64 + Sync, context: &str) -> Result<Vec<C64>> {
    let m = node_matrix(c, xs, f, context)?;
    let tp = two_pi_i();
    Ok((0..xs.len()).map(|i| m.row(i).iter().sum::<C64>() / tp).collect())
}

/// Fails with a configuration error unless `cond` holds.
pub(crate) fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Configuration(msg()))
    }
}

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// The four blocks of a 2×2 matrix kernel evaluated on a grid:
/// `kab[(i, j)] = K_ab(x_i, y_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrices {
    pub k11: DMatrix<C64>,
    pub k12: DMatrix<C64>,
    pub k21: DMatrix<C64>,
    pub k22: DMatrix<C64>,
}

impl KernelMatrices {
    /// Zero-size blocks.
    pub fn empty() -> Self {
        let z = DMatrix::<C64>::zeros(0, 0);
        Self { k11: z.clone(), k12: z.clone(), k21: z.clone(), k22: z }
    }

    /// Grid size.
    pub fn dim(&self) -> usize {
        self.k11.nrows()
    }

    /// Entry `(i, j)` as a [`KernelValue`](crate::skewlin::KernelValue).
    pub fn value(&self, i: usize, j: usize) -> crate::skewlin::KernelValue {
        crate::skewlin::KernelValue::new(self.k11[(i, j)], self.k12[(i, j)], self.k21[(i, j)], self.k22[(i, j)])
    }
}
