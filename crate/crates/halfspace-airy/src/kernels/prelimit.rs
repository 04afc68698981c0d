//! The pre-limit kernel `K^N(s,x; t,y)` on the scaling lattices, as closed
//! contour integrals over the `γ_N^±` contours.
//!
//! The exponential factors `e^{±NS(z) ± T G(z) ∓ σ_q x N^{1/3} log z}` are
//! evaluated in their algebraic form
//! `z^{∓x̃}(1 − q/z)^{±(T+N)}(1 − qz)^{∓N}(1 − q)^{∓T}` with the lifted lattice
//! coordinate `x̃ = (x − b_t)/a_t ∈ ℤ`.  Each power is written as
//! `exp(m · Log(·))` with an integer `m`, so the principal-branch cut of `Log`
//! never produces a discontinuity.
//!
//! Contour vertices are given in the blown-up coordinate
//! `ζ = σ_q N^{1/3}(z − 1)`, in which the integrands converge to those of
//! `K^∞`; they are placed at the limiting saddle points and pushed away from
//! the images of the poles `c_N`, `c_N^{−1}`.  Every pole-containment property
//! the contour deformations rely on is then verified constructively (winding
//! numbers), and a violation is reported together with the number of the
//! corresponding contour property:
//!
//! 1. `γ⁺` (both variables of `I₁₁`, `z` of `I₁₂`) encloses `0, ±1` and not `q^{−1}`;
//! 2. the `w`-contour of `I₁₂` encloses `c_N` and `q` and lies inside the `z`-contour;
//! 3. the `I₂₂` contour lies inside the unit circle, encloses `q` and excludes
//!    `c_N, c_N^{−1}`;
//! 4. the remainder contours enclose/exclude the poles of their integrands
//!    (`R₁₂`: encloses `0, q`; `R₂₂`: see [`pre_n_parts`]).

use super::{
    double_matrix, left_saddle, right_saddle, KernelOptions, LatticeSpec, ScalingParams,
    VERTEX_MARGIN,
};
use crate::contour::{make_gamma_with, make_gamma_with_arc, two_pi_i, Contour, GammaSign, PanelSpec, ARC_ORDER, ARC_PANELS};
use crate::skewlin::KernelValue;
use crate::{Error, Result, C64};

/// The five constituent functions of `K^N` at one ordered pair of lattice
/// points: `K₁₁ = I₁₁`, `K₁₂ = I₁₂ + R₁₂`, `K₂₂ = I₂₂ + R₂₂`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PreNParts {
    pub i11: C64,
    pub i12: C64,
    pub r12: C64,
    pub i22: C64,
    pub r22: C64,
}

impl PreNParts {
    /// `[I₁₁, I₁₂, R₁₂, I₂₂, R₂₂]`.
    pub fn as_array(&self) -> [C64; 5] {
        [self.i11, self.i12, self.r12, self.i22, self.r22]
    }
}

/// Samples per contour piece used for the containment checks.
const CHECK_SAMPLES: usize = 48;

/// Everything that depends on `N` but not on the points.
struct Setup {
    q: f64,
    n: u64,
    c: f64,
    /// `σ_q N^{1/3}`: the blow-up factor between `z − 1` and `ζ`.
    scale: f64,
    f_q: f64,
    varpi_c: f64,
    varpi_ic: f64,
}

impl Setup {
    fn new(p: &ScalingParams, n: u64) -> Self {
        let c = p.c_of_n(n);
        let scale = p.sigma_q * (n as f64).cbrt();
        Self { q: p.q, n, c, scale, f_q: p.f_q, varpi_c: scale * (c - 1.0), varpi_ic: scale * (1.0 / c - 1.0) }
    }

    /// `γ_N^±` with vertex `1 + ζ/(σ_q N^{1/3})`.
    fn gamma(&self, zeta: f64, sign: GammaSign, opts: &KernelOptions) -> Result<Contour> {
        make_gamma_with(zeta * (self.n as f64).cbrt() / self.scale, self.n, sign, opts.panels)
    }

    /// `γ_N^±` whose closing arc resolves an integrand behaving like `z^k`
    /// with `|k| ≤ freq` (about eight radians of phase per panel).
    fn gamma_resolved(&self, zeta: f64, sign: GammaSign, opts: &KernelOptions, freq: f64) -> Result<Contour> {
        let panels = ARC_PANELS.max((freq * 2.0 * std::f64::consts::PI / 8.0).ceil() as usize);
        let arc = PanelSpec { panels, order: ARC_ORDER };
        make_gamma_with_arc(zeta * (self.n as f64).cbrt() / self.scale, self.n, sign, opts.panels, arc)
    }

    /// Exponent `(T+N)Log(1−q/z) − N Log(1−qz) − x̃ Log z − T ln(1−q)`; its
    /// exponential is the `+` factor, the exponential of its negative the `−`
    /// factor.
    fn exponent(&self, z: C64, big_t: i64, xt: f64) -> C64 {
        let one = C64::new(1.0, 0.0);
        let (q, n) = (self.q, self.n as f64);
        let bt = big_t as f64;
        (one - q / z).ln() * (bt + n) - (one - q * z).ln() * n - z.ln() * xt - (1.0 - q).ln() * bt
    }
}

fn violated(property: u8, what: String) -> Error {
    Error::Configuration(format!("contour property {property} violated: {what}"))
}

fn must_enclose(c: &Contour, p: f64, property: u8, name: &str, point: &str) -> Result<()> {
    if c.encloses(C64::new(p, 0.0)) {
        Ok(())
    } else {
        Err(violated(property, format!("{name} does not enclose {point} = {p}")))
    }
}

fn must_exclude(c: &Contour, p: f64, property: u8, name: &str, point: &str) -> Result<()> {
    if c.encloses(C64::new(p, 0.0)) {
        Err(violated(property, format!("{name} encloses {point} = {p}")))
    } else {
        Ok(())
    }
}

fn must_contain(outer: &Contour, inner: &Contour, property: u8, what: &str) -> Result<()> {
    if outer.encloses_all(&inner.sample_points(CHECK_SAMPLES)) {
        Ok(())
    } else {
        Err(violated(property, what.to_string()))
    }
}

fn inside_unit_circle(c: &Contour, property: u8, name: &str) -> Result<()> {
    if c.sample_points(CHECK_SAMPLES).iter().all(|z| z.norm() < 1.0) {
        Ok(())
    } else {
        Err(violated(property, format!("{name} is not contained in the unit circle")))
    }
}

fn lifted(l: &LatticeSpec, x: f64) -> Result<f64> {
    Ok(l.index(x)? as f64)
}

/// Constituent functions of `K^N(s,x; t,y)`; `x` and `y` must lie on the
/// lattices `Λ_s(N)` and `Λ_t(N)`.
///
/// The remainder contours satisfy: `R₂₂` first term encloses `c_N^{−1}` and
/// `q`; second term encloses `q` and excludes `c_N^{−1}`; third term lies in
/// the unit circle and excludes `c_N`, `c_N^{−1}`.
pub fn pre_n_parts(s: f64, x: f64, t: f64, y: f64, p: &ScalingParams, n: u64, opts: &KernelOptions) -> Result<PreNParts> {
    let ls = LatticeSpec::new(s, n, p)?;
    let lt = LatticeSpec::new(t, n, p)?;
    let (xt, yt) = (lifted(&ls, x)?, lifted(&lt, y)?);
    let st = Setup::new(p, n);
    Ok(PreNParts {
        i11: i11(&st, &ls, x, xt, &lt, y, yt, opts)?,
        i12: i12(&st, &ls, x, xt, &lt, y, yt, opts)?,
        r12: r12(&st, &ls, x, xt, &lt, y, yt, opts)?,
        i22: i22(&st, &ls, x, xt, &lt, y, yt, opts)?,
        r22: r22(&st, &ls, x, xt, &lt, y, yt, opts)?,
    })
}

/// `K^N(s,x; t,y)` assembled from its parts, with
/// `K₂₁(s,x;t,y) = −K₁₂(t,y;s,x)`.
pub fn kernel_pre_n(s: f64, x: f64, t: f64, y: f64, p: &ScalingParams, n: u64, opts: &KernelOptions) -> Result<KernelValue> {
    let fwd = pre_n_parts(s, x, t, y, p, n, opts)?;
    let ls = LatticeSpec::new(s, n, p)?;
    let lt = LatticeSpec::new(t, n, p)?;
    let (xt, yt) = (lifted(&ls, x)?, lifted(&lt, y)?);
    let st = Setup::new(p, n);
    let back = i12(&st, &lt, y, yt, &ls, x, xt, opts)? + r12(&st, &lt, y, yt, &ls, x, xt, opts)?;
    Ok(KernelValue::new(fwd.i11, fwd.i12 + fwd.r12, -back, fwd.i22 + fwd.r22))
}

fn gamma_plus_checked(st: &Setup, zeta: f64, opts: &KernelOptions, name: &str) -> Result<Contour> {
    let c = st.gamma(zeta, GammaSign::Plus, opts)?;
    for (pt, label) in [(0.0, "0"), (1.0, "1"), (-1.0, "−1")] {
        must_enclose(&c, pt, 1, name, label)?;
    }
    must_exclude(&c, 1.0 / st.q, 1, name, "1/q")?;
    Ok(c)
}

#[allow(clippy::too_many_arguments)]
fn i11(st: &Setup, ls: &LatticeSpec, x: f64, xt: f64, lt: &LatticeSpec, y: f64, yt: f64, opts: &KernelOptions) -> Result<C64> {
    let m = VERTEX_MARGIN;
    let vz = right_saddle(st.f_q * ls.t, x).max(m);
    let vw = right_saddle(st.f_q * lt.t, y).max(m);
    let cz = gamma_plus_checked(st, vz, opts, "I11 z-contour")?;
    let cw = gamma_plus_checked(st, vw, opts, "I11 w-contour")?;
    let c = st.c;
    let f = |z: C64, big_t: i64, xt: f64| st.exponent(z, big_t, xt).exp() * (1.0 - c / z) / (z * z - 1.0);
    let (bs, bt) = (ls.big_t, lt.big_t);
    let v = double_matrix(
        &cz,
        &[xt],
        |z, xt| f(z, bs, xt),
        &cw,
        &[yt],
        |w, yt| f(w, bt, yt),
        |z, w| (z - w) / (z * w - 1.0),
        "I^N_11",
    )?;
    Ok(v[(0, 0)] * (4.0 * st.scale * st.scale))
}

#[allow(clippy::too_many_arguments)]
fn i12(st: &Setup, ls: &LatticeSpec, x: f64, xt: f64, lt: &LatticeSpec, y: f64, yt: f64, opts: &KernelOptions) -> Result<C64> {
    let m = VERTEX_MARGIN;
    let vw = left_saddle(st.f_q * lt.t, y).max(st.varpi_c + m);
    let vz = right_saddle(st.f_q * ls.t, x).max(m).max(vw + m);
    let cz = gamma_plus_checked(st, vz, opts, "I12 z-contour")?;
    let cw = st.gamma(vw, GammaSign::Minus, opts)?;
    must_enclose(&cw, st.c, 2, "I12 w-contour", "c_N")?;
    must_enclose(&cw, st.q, 2, "I12 w-contour", "q")?;
    must_contain(&cz, &cw, 2, "the I12 w-contour is not inside the z-contour")?;
    let c = st.c;
    let (bs, bt) = (ls.big_t, lt.big_t);
    let v = double_matrix(
        &cz,
        &[xt],
        |z, xt| st.exponent(z, bs, xt).exp() * (z - c) / (z * (z * z - 1.0)),
        &cw,
        &[yt],
        |w, yt| (-st.exponent(w, bt, yt)).exp() / (w - c),
        |z, w| (z * w - 1.0) / (z - w),
        "I^N_12",
    )?;
    Ok(v[(0, 0)] * st.scale)
}

fn i22_contour(st: &Setup, zeta: f64, opts: &KernelOptions, name: &str) -> Result<Contour> {
    let c = st.gamma(zeta, GammaSign::Minus, opts)?;
    inside_unit_circle(&c, 3, name)?;
    must_enclose(&c, st.q, 3, name, "q")?;
    must_exclude(&c, st.c, 3, name, "c_N")?;
    must_exclude(&c, 1.0 / st.c, 3, name, "1/c_N")?;
    Ok(c)
}

#[allow(clippy::too_many_arguments)]
fn i22(st: &Setup, ls: &LatticeSpec, x: f64, xt: f64, lt: &LatticeSpec, y: f64, yt: f64, opts: &KernelOptions) -> Result<C64> {
    let cap = 0f64.min(st.varpi_c).min(st.varpi_ic) - VERTEX_MARGIN;
    let vz = left_saddle(st.f_q * ls.t, x).min(cap);
    let vw = left_saddle(st.f_q * lt.t, y).min(cap);
    let cz = i22_contour(st, vz, opts, "I22 z-contour")?;
    let cw = i22_contour(st, vw, opts, "I22 w-contour")?;
    let c = st.c;
    let (bs, bt) = (ls.big_t, lt.big_t);
    let v = double_matrix(
        &cz,
        &[xt],
        |z, xt| (-st.exponent(z, bs, xt)).exp() / (z - c),
        &cw,
        &[yt],
        |w, yt| (-st.exponent(w, bt, yt)).exp() / (w - c),
        |z, w| (z - w) / (z * w - 1.0),
        "I^N_22",
    )?;
    Ok(v[(0, 0)] * 0.25)
}

fn single(c: &Contour, f: impl Fn(C64) -> C64, context: &str) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for (z, wt) in c.nodes().iter().zip(c.weights()) {
        let v = f(*z);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite { node: *z, context: context.to_string() });
        }
        acc += v * wt;
    }
    Ok(acc / two_pi_i())
}

/// Saddle `ζ* = −(y − x)/(2α)` of the Gaussian `e^{αζ² + (y−x)ζ}` along a
/// vertical line; `None` when the quadratic term vanishes.
fn gaussian_saddle(alpha: f64, gap: f64) -> Option<f64> {
    (alpha > 0.0).then(|| -gap / (2.0 * alpha))
}

#[allow(clippy::too_many_arguments)]
fn r12(st: &Setup, ls: &LatticeSpec, x: f64, xt: f64, lt: &LatticeSpec, y: f64, yt: f64, opts: &KernelOptions) -> Result<C64> {
    if !(ls.t < lt.t) {
        return Ok(C64::new(0.0, 0.0));
    }
    let floor = st.scale * (0.5 * (1.0 + st.q) - 1.0);
    let v = gaussian_saddle(st.f_q * (lt.t - ls.t), y - x).unwrap_or(0.0).max(floor);
    let (q, d_t) = (st.q, ls.big_t - lt.big_t);
    let e = yt - xt - 1.0;
    let cz = st.gamma_resolved(v, GammaSign::Plus, opts, e.abs() + d_t.abs() as f64)?;
    must_enclose(&cz, 0.0, 4, "R12 contour", "0")?;
    must_enclose(&cz, st.q, 4, "R12 contour", "q")?;
    let one = C64::new(1.0, 0.0);
    let val = single(
        &cz,
        |z| ((one - q / z).ln() * d_t as f64 - (1.0 - q).ln() * d_t as f64 + z.ln() * e).exp(),
        "R^N_12",
    )?;
    Ok(-val * st.scale)
}

/// `R^N_22` is skew-symmetric (as are `K^N_22` and `I^N_22`), so for
/// `ỹ < x̃` it is evaluated from the swapped pair.  This keeps the third
/// term free of a high-order pole at the origin when `s = t = 0`.
#[allow(clippy::too_many_arguments)]
fn r22(st: &Setup, ls: &LatticeSpec, x: f64, xt: f64, lt: &LatticeSpec, y: f64, yt: f64, opts: &KernelOptions) -> Result<C64> {
    if yt < xt {
        Ok(-r22_ordered(st, lt, y, yt, ls, x, xt, opts)?)
    } else {
        r22_ordered(st, ls, x, xt, lt, y, yt, opts)
    }
}

#[allow(clippy::too_many_arguments)]
fn r22_ordered(st: &Setup, ls: &LatticeSpec, x: f64, xt: f64, lt: &LatticeSpec, y: f64, yt: f64, opts: &KernelOptions) -> Result<C64> {
    let m = VERTEX_MARGIN;
    let c = st.c;
    let (bs, bt) = (ls.big_t, lt.big_t);
    // first term
    let v1 = left_saddle(st.f_q * ls.t, x).max(st.varpi_ic + m);
    let c1 = st.gamma(v1, GammaSign::Minus, opts)?;
    must_enclose(&c1, 1.0 / c, 4, "R22 first contour", "1/c_N")?;
    must_enclose(&c1, st.q, 4, "R22 first contour", "q")?;
    let fc_t = (-st.exponent(C64::new(c, 0.0), bt, yt)).exp();
    let t1 = single(&c1, |z| (-st.exponent(z, bs, xt)).exp() * fc_t / (4.0 * (c * z - 1.0)), "R^N_22 first term")?;
    // second term
    let v2 = left_saddle(st.f_q * lt.t, y).min(st.varpi_ic - m);
    let c2 = st.gamma(v2, GammaSign::Minus, opts)?;
    must_enclose(&c2, st.q, 4, "R22 second contour", "q")?;
    must_exclude(&c2, 1.0 / c, 4, "R22 second contour", "1/c_N")?;
    let fc_s = (-st.exponent(C64::new(c, 0.0), bs, xt)).exp();
    let t2 = single(&c2, |w| fc_s * (-st.exponent(w, bt, yt)).exp() / (4.0 * (c * w - 1.0)), "R^N_22 second term")?;
    // third term
    let cap = 0f64.min(st.varpi_c).min(st.varpi_ic) - m;
    let v3 = gaussian_saddle(st.f_q * (ls.t + lt.t), y - x).unwrap_or(cap).min(cap);
    let e = yt - xt - 1.0;
    let c3 = st.gamma_resolved(v3, GammaSign::Minus, opts, e.abs() + (bs + bt) as f64)?;
    inside_unit_circle(&c3, 4, "R22 third contour")?;
    must_exclude(&c3, c, 4, "R22 third contour", "c_N")?;
    must_exclude(&c3, 1.0 / c, 4, "R22 third contour", "1/c_N")?;
    let (q, one) = (st.q, C64::new(1.0, 0.0));
    let t3 = single(
        &c3,
        |w| {
            let ex = w.ln() * e - (one - q * w).ln() * bs as f64 - (one - q / w).ln() * bt as f64
                + (1.0 - q).ln() * (bs + bt) as f64;
            (one - w * w) / (4.0 * (one - c * w) * (w - c)) * ex.exp()
        },
        "R^N_22 third term",
    )?;
    Ok(t1 - t2 + t3)
}
