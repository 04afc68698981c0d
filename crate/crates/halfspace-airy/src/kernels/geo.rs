//! The finite Pfaffian Schur-process kernel `K^geo` on circle contours.

use super::{double_matrix, KernelOptions};
use crate::contour::{make_circle_with, Contour};
use crate::skewlin::KernelValue;
use crate::special::powi;
use crate::{Error, Result, C64};

/// Parameters of the homogeneous Pfaffian Schur process: all specialisations
/// equal to `q`, boundary parameter `c ∈ (q, q^{−1})`, `N` row variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeoParams {
    pub q: f64,
    pub c: f64,
    pub n: u64,
}

impl GeoParams {
    /// Validates `q ∈ (0,1)`, `c ∈ (q, q^{−1})`, `N ≥ 1`.
    pub fn new(q: f64, c: f64, n: u64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidInput(format!("q = {q} must lie in (0,1)")));
        }
        if !(c > q && c < 1.0 / q) {
            return Err(Error::InvalidInput(format!("c = {c} must lie in (q, 1/q) = ({q}, {})", 1.0 / q)));
        }
        if n == 0 {
            return Err(Error::InvalidInput("N must be at least 1".into()));
        }
        Ok(Self { q, c, n })
    }
}

/// Circle radii used for the three blocks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeoRadii {
    pub r1: f64,
    pub r12_z: f64,
    pub r12_w: f64,
    pub r2: f64,
}

/// Smallest admissible gap between radius constraints.
const RADIUS_GAP: f64 = 1e-6;

/// Radii for `K^geo(u,·; v,·)`:
///
/// * `r₁ = (1 + q^{−1})/2`, the midpoint of `(1, q^{−1})`;
/// * `r^z = (max(1,c) + q^{−1})/2`, so that the `w`-circle fits strictly
///   between `max(c,q)` and `r^z` when `u ≥ v`;
/// * `r^w = (max(c,q) + r^z)/2` when `u ≥ v`, and `(r^z + q^{−1})/2` when
///   `u < v`;
/// * `r₂ = max(c,q,1) + 1`.
pub fn geo_radii(p: &GeoParams, u_ge_v: bool) -> Result<GeoRadii> {
    let inv_q = 1.0 / p.q;
    if inv_q - p.c.max(1.0) < RADIUS_GAP {
        return Err(Error::Configuration(format!(
            "radius constraints unsatisfiable: c = {} is too close to 1/q = {inv_q}",
            p.c
        )));
    }
    let r1 = 0.5 * (1.0 + inv_q);
    let r12_z = 0.5 * (p.c.max(1.0) + inv_q);
    let r12_w = if u_ge_v { 0.5 * (p.c.max(p.q) + r12_z) } else { 0.5 * (r12_z + inv_q) };
    let r2 = p.c.max(p.q).max(1.0) + 1.0;
    Ok(GeoRadii { r1, r12_z, r12_w, r2 })
}

fn circle(r: f64, opts: &KernelOptions) -> Result<Contour> {
    make_circle_with(r, opts.panels)
}

/// `(1 − q/z)^{a} (1 − qz)^{b} z^{e}` with integer exponents.
fn geo_powers(z: C64, q: f64, a: i64, b: i64, e: i64) -> C64 {
    let one = C64::new(1.0, 0.0);
    powi(one - q / z, a) * powi(one - q * z, b) * powi(z, e)
}

fn as_i64(n: u64) -> i64 {
    i64::try_from(n).unwrap_or(i64::MAX)
}

fn k11(mu: u64, x: i64, mv: u64, y: i64, p: &GeoParams, opts: &KernelOptions) -> Result<C64> {
    let radii = geo_radii(p, true)?;
    let cz = circle(radii.r1, opts)?;
    let (q, c, n) = (p.q, p.c, as_i64(p.n));
    let one = C64::new(1.0, 0.0);
    let f = move |m: i64, e: i64| {
        move |z: C64, _: f64| (one - c / z) / (z * z - 1.0) * geo_powers(z, q, m + n, -n, -e)
    };
    let v = double_matrix(
        &cz,
        &[0.0],
        f(as_i64(mu), x),
        &cz,
        &[0.0],
        f(as_i64(mv), y),
        |z, w| (z - w) / (z * w - 1.0),
        "K^geo_11",
    )?;
    Ok(v[(0, 0)])
}

fn k12(mu: u64, x: i64, mv: u64, y: i64, p: &GeoParams, opts: &KernelOptions) -> Result<C64> {
    let radii = geo_radii(p, mu >= mv)?;
    let cz = circle(radii.r12_z, opts)?;
    let cw = circle(radii.r12_w, opts)?;
    let (q, c, n) = (p.q, p.c, as_i64(p.n));
    let (mu, mv) = (as_i64(mu), as_i64(mv));
    let v = double_matrix(
        &cz,
        &[0.0],
        move |z, _| (z - c) / (z * (z * z - 1.0)) * geo_powers(z, q, mu + n, -n, -x),
        &cw,
        &[0.0],
        move |w, _| geo_powers(w, q, -mv - n, n, y) / (w - c),
        |z, w| (z * w - 1.0) / (z - w),
        "K^geo_12",
    )?;
    Ok(v[(0, 0)])
}

fn k22(mu: u64, x: i64, mv: u64, y: i64, p: &GeoParams, opts: &KernelOptions) -> Result<C64> {
    let radii = geo_radii(p, true)?;
    let cz = circle(radii.r2, opts)?;
    let (q, c, n) = (p.q, p.c, as_i64(p.n));
    let f = move |m: i64, e: i64| move |z: C64, _: f64| geo_powers(z, q, -m - n, n, e) / (z - c);
    let v = double_matrix(
        &cz,
        &[0.0],
        f(as_i64(mu), x),
        &cz,
        &[0.0],
        f(as_i64(mv), y),
        |z, w| (z - w) / (z * w - 1.0),
        "K^geo_22",
    )?;
    Ok(v[(0, 0)])
}

/// `K^geo((u,x); (v,y))` where `mu = M_u`, `mv = M_v` are the Schur-process
/// times of the two slices.  All powers with integer exponents are evaluated
/// by repeated multiplication, so no logarithm (and no branch cut) is
/// involved.  `k21` is obtained from `k21(u,x;v,y) = −k12(v,y;u,x)`.
pub fn kernel_geo(mu: u64, x: i64, mv: u64, y: i64, p: &GeoParams, opts: &KernelOptions) -> Result<KernelValue> {
    Ok(KernelValue::new(
        k11(mu, x, mv, y, p, opts)?,
        k12(mu, x, mv, y, p, opts)?,
        -k12(mv, y, mu, x, p, opts)?,
        k22(mu, x, mv, y, p, opts)?,
    ))
}
