//! The crossover kernel `K^cross(s,x; t,y)` with parameter `ϖ`.

use super::limit::gaussian_pole_integral;
use super::{c, double_matrix, require, single_vec, wedge, DiagonalConvention, KernelOptions, VERTEX_MARGIN};
use crate::skewlin::KernelValue;
use crate::{Error, Result, C64};
use std::f64::consts::PI;

const PI3: f64 = PI / 3.0;
const PI23: f64 = 2.0 * PI / 3.0;

/// The five constituent functions of `K^cross` at one ordered pair of points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossParts {
    pub i11: C64,
    pub i12: C64,
    pub r12: C64,
    pub i22: C64,
    pub r22: C64,
}

impl CrossParts {
    /// `[I₁₁, I₁₂, R₁₂, I₂₂, R₂₂]`.
    pub fn as_array(&self) -> [C64; 5] {
        [self.i11, self.i12, self.r12, self.i22, self.r22]
    }
}

fn sqrt_pos(x: f64) -> f64 {
    x.max(0.0).sqrt()
}

fn i11(s: f64, x: f64, t: f64, y: f64, w0: f64, opts: &KernelOptions) -> Result<C64> {
    let m = VERTEX_MARGIN;
    let (vz, vw) = (sqrt_pos(x).max(-s + m), sqrt_pos(y).max(-t + m));
    require(vz > -s && vw > -t, || format!("I11 vertices ({vz}, {vw}) must exceed (−s, −t)"))?;
    let v = double_matrix(
        &wedge(vz, PI3, opts)?,
        &[x],
        |z, x| (z * z * z / 3.0 - x * z).exp(),
        &wedge(vw, PI3, opts)?,
        &[y],
        |w, y| (w * w * w / 3.0 - y * w).exp(),
        |z, w| {
            let (zs, wt) = (z + s, w + t);
            (zs - wt) * (zs + w0) * (wt + w0) / ((zs + wt) * zs * wt)
        },
        "I^cross_11",
    )?;
    Ok(v[(0, 0)])
}

fn i12(s: f64, x: f64, t: f64, y: f64, w0: f64, opts: &KernelOptions) -> Result<C64> {
    let m = VERTEX_MARGIN;
    let vw = (-sqrt_pos(y)).max(-w0 - t + m);
    let vz = sqrt_pos(x).max(-s + m).max(vw + t - s + m);
    require(vz > -s && vw > -w0 - t && vz + s > vw + t, || {
        format!("I12 vertices ({vz}, {vw}) violate z > −s, w > −ϖ − t, z + s > w + t")
    })?;
    let v = double_matrix(
        &wedge(vz, PI3, opts)?,
        &[x],
        |z, x| (z * z * z / 3.0 - x * z).exp(),
        &wedge(vw, PI23, opts)?,
        &[y],
        |w, y| (-w * w * w / 3.0 + y * w).exp(),
        |z, w| {
            let (zs, wt) = (z + s, w + t);
            (zs + wt) * (zs + w0) / (2.0 * zs * (zs - wt) * (wt + w0))
        },
        "I^cross_12",
    )?;
    Ok(v[(0, 0)])
}

fn i22(s: f64, x: f64, t: f64, y: f64, w0: f64, opts: &KernelOptions) -> Result<C64> {
    let cap = 0f64.min(-w0) - VERTEX_MARGIN;
    let (vz, vw) = ((-sqrt_pos(x)).min(cap - s), (-sqrt_pos(y)).min(cap - t));
    let v = double_matrix(
        &wedge(vz, PI23, opts)?,
        &[x],
        |z, x| (-z * z * z / 3.0 + x * z).exp(),
        &wedge(vw, PI23, opts)?,
        &[y],
        |w, y| (-w * w * w / 3.0 + y * w).exp(),
        |z, w| {
            let (zs, wt) = (z + s, w + t);
            (zs - wt) / (4.0 * (zs + wt) * (zs + w0) * (wt + w0))
        },
        "I^cross_22",
    )?;
    Ok(v[(0, 0)])
}

/// `R^cross_12(s,x;t,y) = −1{s<t}/√(4π(t−s)) · exp((−(s−t)⁴ + 6(x+y)(s−t)² + 3(x−y)²)/(12(s−t)))`.
fn r12(s: f64, x: f64, t: f64, y: f64) -> f64 {
    if s < t {
        let d = s - t;
        let e = (-d.powi(4) + 6.0 * (x + y) * d * d + 3.0 * (x - y).powi(2)) / (12.0 * d);
        -e.exp() / (4.0 * PI * (t - s)).sqrt()
    } else {
        0.0
    }
}

/// The closed form of `R^cross_22(s,x; t,y)`, valid in the region where it
/// is evaluated directly (see [`r22`]).
fn r22_formula(s: f64, x: f64, t: f64, y: f64, w0: f64, opts: &KernelOptions) -> Result<f64> {
    let m = VERTEX_MARGIN;
    // first term: z on C^{2π/3} to the right of ϖ
    let v1 = (s - sqrt_pos(x)).max(w0 + m);
    let k1 = (w0 + t).powi(3) / 3.0 - y * (w0 + t);
    let a = single_vec(
        &wedge(v1, PI23, opts)?,
        &[x],
        |z, x| ((s - z).powi(3) / 3.0 - x * (s - z) + k1).exp() / (4.0 * (z - w0)),
        "R^cross_22 first term",
    )?[0];
    // second term: w on C^{2π/3} to the left of ϖ
    let v2 = (t - sqrt_pos(y)).min(w0 - m);
    let k2 = (w0 + s).powi(3) / 3.0 - x * (w0 + s);
    let d = single_vec(
        &wedge(v2, PI23, opts)?,
        &[y],
        |w, y| ((t - w).powi(3) / 3.0 - y * (t - w) + k2).exp() / (4.0 * (w - w0)),
        "R^cross_22 second term",
    )?[0];
    // third term: e^{(s³+t³)/3 − yt − xs} (1/2πi)∫ w e^{αw² + βw}/(2(w−ϖ)(w+ϖ)) dw
    let third = if s + t > 0.0 {
        let (alpha, beta) = (s + t, s * s - t * t + y - x);
        let pre = (s.powi(3) + t.powi(3)) / 3.0 - y * t - x * s;
        0.25 * (gaussian_pole_integral(alpha, beta, w0) * pre.exp()
            + gaussian_pole_integral(alpha, beta, -w0) * pre.exp())
    } else {
        0.0
    };
    let v = a - d + c(third);
    Ok(v.re)
}

/// `R^cross_22` with the region rule, skew-symmetric extension, zero at
/// coincident points and the diagonal convention.
///
/// The closed form is evaluated directly when `y − t² > x − s²`.  For
/// `s + t > 0` the closed form is skew-symmetric by itself, so the region
/// only matters at `s = t = 0`, where this choice agrees with the pre-limit
/// kernel (and with `K^∞` under the crossover change of variables).
fn r22(s: f64, x: f64, t: f64, y: f64, w0: f64, opts: &KernelOptions) -> Result<f64> {
    let (u, v) = (x - s * s, y - t * t);
    if s == t && x == y {
        Ok(0.0)
    } else if v > u || (v == u && opts.diagonal == DiagonalConvention::UpperFormula) {
        r22_formula(s, x, t, y, w0, opts)
    } else if v < u {
        Ok(-r22_formula(t, y, s, x, w0, opts)?)
    } else {
        Err(Error::DiagonalAmbiguity(format!("R^cross_22 at x − s² = y − t² = {u} with s = {s} ≠ t = {t}")))
    }
}

fn check_times(s: f64, t: f64) -> Result<()> {
    if s >= 0.0 && t >= 0.0 && s.is_finite() && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("times s = {s}, t = {t} must be finite and non-negative")))
    }
}

/// Constituent functions of `K^cross(s,x; t,y)` with parameter `varpi`.
pub fn cross_parts(s: f64, x: f64, t: f64, y: f64, varpi: f64, opts: &KernelOptions) -> Result<CrossParts> {
    check_times(s, t)?;
    Ok(CrossParts {
        i11: i11(s, x, t, y, varpi, opts)?,
        i12: i12(s, x, t, y, varpi, opts)?,
        r12: c(r12(s, x, t, y)),
        i22: i22(s, x, t, y, varpi, opts)?,
        r22: c(r22(s, x, t, y, varpi, opts)?),
    })
}

/// `K^cross(s,x; t,y)`; `K₂₁(s,x;t,y) = −K₁₂(t,y;s,x)`.
///
/// `I₁₁` and `I₂₂` are skew under swapping the two points, so they are
/// integrated at the lexicographically smaller ordering and negated for the
/// other one; the quadrature noise of the large, cancelling `I₂₂ + R₂₂` then
/// cannot break skew-symmetry.
pub fn kernel_cross(s: f64, x: f64, t: f64, y: f64, varpi: f64, opts: &KernelOptions) -> Result<KernelValue> {
    check_times(s, t)?;
    let (d11, d22) = if (s, x) <= (t, y) {
        (i11(s, x, t, y, varpi, opts)?, i22(s, x, t, y, varpi, opts)?)
    } else {
        (-i11(t, y, s, x, varpi, opts)?, -i22(t, y, s, x, varpi, opts)?)
    };
    let k12 = i12(s, x, t, y, varpi, opts)? + c(r12(s, x, t, y));
    let back = i12(t, y, s, x, varpi, opts)? + c(r12(t, y, s, x));
    Ok(KernelValue::new(d11, k12, -back, d22 + c(r22(s, x, t, y, varpi, opts)?)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r12_vanishes_unless_ordered() {
        assert_eq!(r12(1.0, 0.3, 1.0, 0.1), 0.0);
        assert_eq!(r12(2.0, 0.3, 1.0, 0.1), 0.0);
        assert!(r12(0.0, 0.0, 1.0, 0.0) < 0.0);
    }

    #[test]
    fn skew_symmetry_at_sample_points() {
        let opts = KernelOptions::default();
        for (s, x, t, y, w) in [(0.0, 0.5, 1.0, -0.3, 0.0), (0.7, -1.0, 0.2, 1.5, 1.0), (0.4, 0.2, 0.4, -0.6, -1.0)] {
            let a = kernel_cross(s, x, t, y, w, &opts).unwrap();
            let b = kernel_cross(t, y, s, x, w, &opts).unwrap();
            assert!(a.sub(&b.neg_transpose()).max_norm() < 1e-8, "{a:?} {b:?}");
        }
    }

    #[test]
    fn third_term_closed_form_matches_quadrature() {
        let opts = KernelOptions::default();
        let (s, x, t, y, w0) = (0.6, 0.3, 0.9, -0.2, 0.7);
        let third = r22_formula(s, x, t, y, w0, &opts).unwrap();
        let v3 = -(w0.abs() + 0.5);
        let long = KernelOptions { ray_length: 12.0, ..opts };
        let q = single_vec(
            &wedge(v3, PI23, &long).unwrap(),
            &[0.0],
            |w, _| w * ((t - w).powi(3) / 3.0 + (w + s).powi(3) / 3.0 - y * (t - w) - x * (w + s)).exp() / (2.0 * (w - w0) * (w + w0)),
            "test",
        )
        .unwrap()[0];
        // isolate the third term by subtracting the first two terms evaluated separately
        let m = VERTEX_MARGIN;
        let k1 = (w0 + t).powi(3) / 3.0 - y * (w0 + t);
        let a = single_vec(&wedge((s - x.sqrt()).max(w0 + m), PI23, &opts).unwrap(), &[x], |z, x| {
            ((s - z).powi(3) / 3.0 - x * (s - z) + k1).exp() / (4.0 * (z - w0))
        }, "a").unwrap()[0];
        let k2 = (w0 + s).powi(3) / 3.0 - x * (w0 + s);
        let d = single_vec(&wedge((t - 0f64).min(w0 - m), PI23, &opts).unwrap(), &[y], |w, y| {
            ((t - w).powi(3) / 3.0 - y * (t - w) + k2).exp() / (4.0 * (w - w0))
        }, "d").unwrap()[0];
        assert!(((third - (a - d).re) - q.re).abs() < 1e-9, "{} vs {}", third - (a - d).re, q.re);
    }
}
