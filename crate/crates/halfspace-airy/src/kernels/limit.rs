//! The limiting kernel `K^∞(s,x; t,y)`.

use super::{
    c, double_matrix, left_saddle, min_of, require, right_saddle, single_vec, wedge, DiagonalConvention, KernelMatrices,
    KernelOptions, ScalingParams, VERTEX_MARGIN,
};
use crate::skewlin::KernelValue;
use crate::special::exp_times_erfc;
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use std::f64::consts::PI;

const PI3: f64 = PI / 3.0;
const PI23: f64 = 2.0 * PI / 3.0;

/// The five constituent functions of `K^∞` at one ordered pair of points:
/// `K₁₁ = I₁₁`, `K₁₂ = I₁₂ + R₁₂`, `K₂₂ = I₂₂ + R₂₂`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitParts {
    pub i11: C64,
    pub i12: C64,
    pub r12: C64,
    pub i22: C64,
    pub r22: C64,
}

impl LimitParts {
    /// `[I₁₁, I₁₂, R₁₂, I₂₂, R₂₂]`.
    pub fn as_array(&self) -> [C64; 5] {
        [self.i11, self.i12, self.r12, self.i22, self.r22]
    }
}

/// Real vertices `(z, w)` of the wedge contours of the three double
/// integrals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitVertices {
    /// Both `C^{π/3}` contours of `I₁₁`; must be positive.
    pub i11: (f64, f64),
    /// `z` on `C^{π/3}` and `w` on `C^{2π/3}` for `I₁₂`; need `z > 0`,
    /// `w > −ϖ` and `z > w`.
    pub i12: (f64, f64),
    /// Both `C^{2π/3}` contours of `I₂₂`; must lie below `min(0, −ϖ)`.
    pub i22: (f64, f64),
}

impl LimitVertices {
    /// Saddle-point vertices for the pair `(s,x; t,y)`.
    pub fn saddle(s: f64, x: f64, t: f64, y: f64, params: &ScalingParams) -> Self {
        let (a, b, w) = (params.f_q * s, params.f_q * t, params.varpi);
        let m = VERTEX_MARGIN;
        let w12 = left_saddle(b, y).max(-w + m);
        let z12 = right_saddle(a, x).max(m).max(w12 + m);
        let cap = 0f64.min(-w) - m;
        Self {
            i11: (right_saddle(a, x).max(m), right_saddle(b, y).max(m)),
            i12: (z12, w12),
            i22: (left_saddle(a, x).min(cap), left_saddle(b, y).min(cap)),
        }
    }

    /// Every vertex moved by `d` away from its poles (π/3 vertices to the
    /// right, `I₂₂` vertices to the left).  Stays admissible for `d ≥ 0`.
    pub fn shifted(self, d: f64) -> Self {
        Self {
            i11: (self.i11.0 + d, self.i11.1 + d),
            i12: (self.i12.0 + d, self.i12.1 + d),
            i22: (self.i22.0 - d, self.i22.1 - d),
        }
    }

    /// Checks the pole constraints for parameter `ϖ`.
    pub fn validate(&self, varpi: f64) -> Result<()> {
        require(self.i11.0 > 0.0 && self.i11.1 > 0.0, || format!("I11 vertices {:?} must be positive", self.i11))?;
        require(self.i12.0 > 0.0 && self.i12.1 > -varpi && self.i12.0 > self.i12.1, || {
            format!("I12 vertices {:?} must satisfy z > 0, w > −ϖ = {}, z > w", self.i12, -varpi)
        })?;
        let cap = 0f64.min(-varpi);
        require(self.i22.0 < cap && self.i22.1 < cap, || format!("I22 vertices {:?} must lie below {cap}", self.i22))
    }
}

pub(crate) fn i11_matrix(
    s: f64,
    xs: &[f64],
    t: f64,
    ys: &[f64],
    p: &ScalingParams,
    opts: &KernelOptions,
    v: (f64, f64),
) -> Result<DMatrix<C64>> {
    let (a, b, w0) = (p.f_q * s, p.f_q * t, p.varpi);
    let cz = wedge(v.0, PI3, opts)?;
    let cw = wedge(v.1, PI3, opts)?;
    double_matrix(
        &cz,
        xs,
        move |z, x| (z * z * z / 3.0 - a * z * z - x * z).exp(),
        &cw,
        ys,
        move |w, y| (w * w * w / 3.0 - b * w * w - y * w).exp(),
        move |z, w| (z - w) * (z + w0) * (w + w0) / (z * w * (z + w)),
        "I∞_11",
    )
}

pub(crate) fn i12_matrix(
    s: f64,
    xs: &[f64],
    t: f64,
    ys: &[f64],
    p: &ScalingParams,
    opts: &KernelOptions,
    v: (f64, f64),
) -> Result<DMatrix<C64>> {
    let (a, b, w0) = (p.f_q * s, p.f_q * t, p.varpi);
    let cz = wedge(v.0, PI3, opts)?;
    let cw = wedge(v.1, PI23, opts)?;
    double_matrix(
        &cz,
        xs,
        move |z, x| (z * z * z / 3.0 - a * z * z - x * z).exp(),
        &cw,
        ys,
        move |w, y| (-w * w * w / 3.0 + b * w * w + y * w).exp(),
        move |z, w| (z + w) * (z + w0) / (2.0 * z * (z - w) * (w + w0)),
        "I∞_12",
    )
}

pub(crate) fn i22_matrix(
    s: f64,
    xs: &[f64],
    t: f64,
    ys: &[f64],
    p: &ScalingParams,
    opts: &KernelOptions,
    v: (f64, f64),
) -> Result<DMatrix<C64>> {
    let (a, b, w0) = (p.f_q * s, p.f_q * t, p.varpi);
    let cz = wedge(v.0, PI23, opts)?;
    let cw = wedge(v.1, PI23, opts)?;
    double_matrix(
        &cz,
        xs,
        move |z, x| (-z * z * z / 3.0 + a * z * z + x * z).exp(),
        &cw,
        ys,
        move |w, y| (-w * w * w / 3.0 + b * w * w + y * w).exp(),
        move |z, w| (z - w) / (4.0 * (z + w) * (z + w0) * (w + w0)),
        "I∞_22",
    )
}

/// `R^∞_12(s,x; t,y) = −1{s<t} (4π f_q (t−s))^{−1/2} e^{−(y−x)²/(4 f_q (t−s))}`.
pub(crate) fn r12(s: f64, x: f64, t: f64, y: f64, p: &ScalingParams) -> f64 {
    if s < t {
        let d = p.f_q * (t - s);
        -(-(y - x).powi(2) / (4.0 * d)).exp() / (4.0 * PI * d).sqrt()
    } else {
        0.0
    }
}

/// `(1/2πi) ∫_{C^{2π/3}} e^{αw² + βw}/(w − p) dw` with the contour to the
/// left of `p` and `α > 0`, in closed form:
/// `−½ e^{αp² + βp} erfc((β + 2αp)/(2√α))`.
pub(crate) fn gaussian_pole_integral(alpha: f64, beta: f64, p: f64) -> f64 {
    let u = (beta + 2.0 * alpha * p) / (2.0 * alpha.sqrt());
    -0.5 * exp_times_erfc(alpha * p * p + beta * p, u)
}

/// Third term of the 22 remainder: `1{s+t>0}(1/2πi)∫ w e^{αw² + βw}/(2(w−ϖ)(w+ϖ)) dw`
/// with `α = f_q(s+t)`, `β = y − x`, via partial fractions and
/// [`gaussian_pole_integral`].
fn r22_gauss_term(alpha: f64, beta: f64, varpi: f64) -> f64 {
    if alpha > 0.0 {
        0.25 * (gaussian_pole_integral(alpha, beta, varpi) + gaussian_pole_integral(alpha, beta, -varpi))
    } else {
        0.0
    }
}

/// The separable pieces of the first two remainder terms at time `s`,
/// evaluated on the grid `xs`:
/// `A(x) = (1/2πi)∫_{C^{2π/3}_{>ϖ}} e^{−z³/3 + S z² + x z}/(4(z−ϖ)) dz`,
/// `B(x) = e^{ϖ³/3 + Sϖ² − xϖ}`,
/// `D(x) = (1/2πi)∫_{C^{2π/3}_{<ϖ}} e^{−w³/3 + S w² + x w}/(4(w−ϖ)) dw`.
struct RemainderPieces {
    a: Vec<C64>,
    b: Vec<f64>,
    d: Vec<C64>,
}

fn remainder_pieces(s: f64, xs: &[f64], p: &ScalingParams, opts: &KernelOptions) -> Result<RemainderPieces> {
    let (sc, w0) = (p.f_q * s, p.varpi);
    let xref = min_of(xs);
    let v1 = left_saddle(sc, xref).max(w0 + VERTEX_MARGIN);
    let v2 = left_saddle(sc, xref).min(w0 - VERTEX_MARGIN);
    let c1 = wedge(v1, PI23, opts)?;
    let c2 = wedge(v2, PI23, opts)?;
    let integrand = move |z: C64, x: f64| (-z * z * z / 3.0 + sc * z * z + x * z).exp() / (4.0 * (z - w0));
    Ok(RemainderPieces {
        a: single_vec(&c1, xs, integrand, "R∞_22 first term")?,
        b: xs.iter().map(|x| (w0.powi(3) / 3.0 + sc * w0 * w0 - x * w0).exp()).collect(),
        d: single_vec(&c2, xs, integrand, "R∞_22 second term")?,
    })
}

/// `R^∞_22(s, xs[i]; t, ys[j])` for all pairs, using the closed form for
/// `y > x`, skew-symmetry for `y < x`, zero at coincident points, and the
/// diagonal convention for `x = y`, `s ≠ t`.
pub(crate) fn r22_matrix(
    s: f64,
    xs: &[f64],
    t: f64,
    ys: &[f64],
    p: &ScalingParams,
    opts: &KernelOptions,
) -> Result<DMatrix<C64>> {
    let ps_x = remainder_pieces(s, xs, p, opts)?;
    let pt_y = remainder_pieces(t, ys, p, opts)?;
    let alpha = p.f_q * (s + t);
    let w0 = p.varpi;
    // R(s,x; t,y) = A_s(x) B_t(y) − B_s(x) D_t(y) + third term; the swapped
    // pair uses the same four vectors.
    let upper = |a: C64, b: f64, b2: f64, d: C64, gap: f64| a * b - d * b2 + c(r22_gauss_term(alpha, gap, w0));
    let mut out = DMatrix::<C64>::zeros(xs.len(), ys.len());
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            out[(i, j)] = if s == t && x == y {
                C64::new(0.0, 0.0)
            } else if y > x || (y == x && opts.diagonal == DiagonalConvention::UpperFormula) {
                upper(ps_x.a[i], pt_y.b[j], ps_x.b[i], pt_y.d[j], y - x)
            } else if y < x {
                -upper(pt_y.a[j], ps_x.b[i], pt_y.b[j], ps_x.d[i], x - y)
            } else {
                return Err(Error::DiagonalAmbiguity(format!("R∞_22 at x = y = {x} with s = {s} ≠ t = {t}")));
            };
        }
    }
    Ok(out)
}

fn r12_matrix(s: f64, xs: &[f64], t: f64, ys: &[f64], p: &ScalingParams) -> DMatrix<C64> {
    DMatrix::from_fn(xs.len(), ys.len(), |i, j| c(r12(s, xs[i], t, ys[j], p)))
}

/// The constituent functions of `K^∞(s,x; t,y)` with explicit contour
/// vertices for the three double integrals.
pub fn limit_parts_with(
    s: f64,
    x: f64,
    t: f64,
    y: f64,
    p: &ScalingParams,
    opts: &KernelOptions,
    v: &LimitVertices,
) -> Result<LimitParts> {
    check_times(s, t)?;
    v.validate(p.varpi)?;
    Ok(LimitParts {
        i11: i11_matrix(s, &[x], t, &[y], p, opts, v.i11)?[(0, 0)],
        i12: i12_matrix(s, &[x], t, &[y], p, opts, v.i12)?[(0, 0)],
        r12: c(r12(s, x, t, y, p)),
        i22: i22_matrix(s, &[x], t, &[y], p, opts, v.i22)?[(0, 0)],
        r22: r22_matrix(s, &[x], t, &[y], p, opts)?[(0, 0)],
    })
}

/// The constituent functions of `K^∞(s,x; t,y)` on saddle-point contours.
pub fn limit_parts(s: f64, x: f64, t: f64, y: f64, p: &ScalingParams, opts: &KernelOptions) -> Result<LimitParts> {
    limit_parts_with(s, x, t, y, p, opts, &LimitVertices::saddle(s, x, t, y, p))
}

fn check_times(s: f64, t: f64) -> Result<()> {
    if s >= 0.0 && t >= 0.0 && s.is_finite() && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("times s = {s}, t = {t} must be finite and non-negative")))
    }
}

/// `K^∞(s,x; t,y)` assembled from its parts; `K₂₁(s,x;t,y) = −K₁₂(t,y;s,x)`.
pub fn kernel_limit(s: f64, x: f64, t: f64, y: f64, p: &ScalingParams, opts: &KernelOptions) -> Result<KernelValue> {
    let fwd = limit_parts(s, x, t, y, p, opts)?;
    let rv = LimitVertices::saddle(t, y, s, x, p);
    let back = i12_matrix(t, &[y], s, &[x], p, opts, rv.i12)?[(0, 0)] + c(r12(t, y, s, x, p));
    Ok(KernelValue::new(fwd.i11, fwd.i12 + fwd.r12, -back, fwd.i22 + fwd.r22))
}

/// The equal-time kernel `K^{t,∞}(x_i, x_j)` on a whole grid, with one set of
/// contours placed at the saddle points of the smallest grid value.
pub fn limit_equal_time_matrix(t: f64, xs: &[f64], p: &ScalingParams, opts: &KernelOptions) -> Result<KernelMatrices> {
    check_times(t, t)?;
    if xs.is_empty() {
        return Ok(KernelMatrices::empty());
    }
    let xr = min_of(xs);
    let v = LimitVertices::saddle(t, xr, t, xr, p);
    let k11 = i11_matrix(t, xs, t, xs, p, opts, v.i11)?;
    let k12 = i12_matrix(t, xs, t, xs, p, opts, v.i12)? + r12_matrix(t, xs, t, xs, p);
    let k21 = -k12.transpose();
    let k22 = i22_matrix(t, xs, t, xs, p, opts, v.i22)? + r22_matrix(t, xs, t, xs, p, opts)?;
    Ok(KernelMatrices { k11, k12, k21, k22 })
}
