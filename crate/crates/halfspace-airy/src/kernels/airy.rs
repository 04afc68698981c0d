//! The extended Airy kernel, the Airy function, and the large-time Airy
//! limits of the equal-time limiting kernel `K^{t,∞}`.

use super::limit::{i22_matrix, r22_matrix};
use super::{c, double_matrix, min_of, require, single_vec, wedge, KernelMatrices, KernelOptions, ScalingParams, VERTEX_MARGIN};
use crate::contour::make_ray_pair_with;
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use std::f64::consts::PI;

const PI3: f64 = PI / 3.0;
const PI23: f64 = 2.0 * PI / 3.0;
const PI2: f64 = PI / 2.0;

fn sqrt_pos(x: f64) -> f64 {
    x.max(0.0).sqrt()
}

/// `Ai(x) = (1/2πi) ∫_{C^{π/3}} e^{z³/3 − xz} dz`, evaluated on the wedge
/// through the real saddle point `√x` (or through `0` for `x ≤ 0`).
pub fn airy_ai(x: f64) -> Result<f64> {
    Ok(airy_pair(x, &KernelOptions::default())?.0)
}

/// `Ai′(x) = −(1/2πi) ∫_{C^{π/3}} z e^{z³/3 − xz} dz`.
pub fn airy_ai_prime(x: f64) -> Result<f64> {
    Ok(airy_pair(x, &KernelOptions::default())?.1)
}

fn airy_pair(x: f64, opts: &KernelOptions) -> Result<(f64, f64)> {
    let cz = wedge(sqrt_pos(x), PI3, opts)?;
    let ai = single_vec(&cz, &[x], |z, x| (z * z * z / 3.0 - x * z).exp(), "Ai")?[0];
    let aip = single_vec(&cz, &[x], |z, x| -z * (z * z * z / 3.0 - x * z).exp(), "Ai′")?[0];
    Ok((ai.re, aip.re))
}

/// Default contour offsets `(α, β)` for `K^Airy(t₁,x₁; t₂,x₂)`: the saddle
/// points `α = √x₁⁺`, `β = −√x₂⁺`, pulled apart symmetrically until
/// `α + t₁ ≥ β + t₂ + 1`.
pub fn airy_offsets(t1: f64, x1: f64, t2: f64, x2: f64) -> (f64, f64) {
    let (mut a, mut b) = (sqrt_pos(x1), -sqrt_pos(x2));
    let gap = a + t1 - (b + t2);
    if gap < 1.0 {
        let d = 0.5 * (1.0 - gap);
        a += d;
        b -= d;
    }
    (a, b)
}

/// `−1{t₂>t₁}(4πΔ)^{−1/2} exp(−(x₂−x₁)²/(4Δ) − Δ(x₂+x₁)/2 + Δ³/12)`, `Δ = t₂ − t₁`.
fn airy_gaussian(t1: f64, x1: f64, t2: f64, x2: f64) -> f64 {
    if t2 > t1 {
        let d = t2 - t1;
        -(-(x2 - x1).powi(2) / (4.0 * d) - d * (x2 + x1) / 2.0 + d.powi(3) / 12.0).exp() / (4.0 * PI * d).sqrt()
    } else {
        0.0
    }
}

/// `K^Airy(t₁,x₁; t₂,x₂)` with explicit contour offsets; requires
/// `α + t₁ > β + t₂`.
pub fn kernel_airy_extended_with(
    t1: f64,
    x1: f64,
    t2: f64,
    x2: f64,
    alpha: f64,
    beta: f64,
    opts: &KernelOptions,
) -> Result<f64> {
    require(alpha + t1 > beta + t2, || {
        format!("offsets α = {alpha}, β = {beta} violate α + t₁ > β + t₂ (t₁ = {t1}, t₂ = {t2})")
    })?;
    let v = double_matrix(
        &wedge(alpha, PI3, opts)?,
        &[x1],
        |z, x| (z * z * z / 3.0 - x * z).exp(),
        &wedge(beta, PI23, opts)?,
        &[x2],
        |w, y| (-w * w * w / 3.0 + y * w).exp(),
        |z, w| 1.0 / (z + t1 - w - t2),
        "K^Airy",
    )?[(0, 0)];
    Ok(airy_gaussian(t1, x1, t2, x2) + v.re)
}

/// `K^Airy(t₁,x₁; t₂,x₂)` on the default offsets of [`airy_offsets`].
pub fn kernel_airy_extended(t1: f64, x1: f64, t2: f64, x2: f64, opts: &KernelOptions) -> Result<f64> {
    let (a, b) = airy_offsets(t1, x1, t2, x2);
    kernel_airy_extended_with(t1, x1, t2, x2, a, b, opts)
}

/// The equal-time Airy kernel `K_Ai(x_i, y_j)` on a grid, as the double
/// contour integral `(1/(2πi)²)∫∫ e^{z³/3 − xz − w³/3 + yw}/(z − w)` (no
/// division by `x − y`, so no cancellation near the diagonal).
pub fn kernel_airy_matrix(xs: &[f64], ys: &[f64], opts: &KernelOptions) -> Result<DMatrix<f64>> {
    if xs.is_empty() || ys.is_empty() {
        return Ok(DMatrix::zeros(xs.len(), ys.len()));
    }
    let (a, b) = airy_offsets(0.0, min_of(xs), 0.0, min_of(ys));
    let m = double_matrix(
        &wedge(a, PI3, opts)?,
        xs,
        |z, x| (z * z * z / 3.0 - x * z).exp(),
        &wedge(b, PI23, opts)?,
        ys,
        |w, y| (-w * w * w / 3.0 + y * w).exp(),
        |z, w| 1.0 / (z - w),
        "K_Ai",
    )?;
    Ok(m.map(|v| v.re))
}

/// Which block of the large-time Airy limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AiryBlock {
    B11,
    B12,
    B22,
}

impl std::str::FromStr for AiryBlock {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "11" => Ok(Self::B11),
            "12" => Ok(Self::B12),
            "22" => Ok(Self::B22),
            other => Err(Error::Usage(format!("unknown block '{other}' (use 11|12|22)"))),
        }
    }
}

/// The three rescaled blocks of the equal-time kernel at macroscopic time
/// `f_q^{−1} t` on a grid:
///
/// * `k11 = t e^{−2t³/3} e^{t(x+y)} K₁₁(x − t², y − t²)`,
/// * `k12 = e^{t(x−y)} K₁₂(x − t², y − t²)`,
/// * `k22 = t³ e^{2t³/3} e^{−t(x+y)} K₂₂(x − t², y − t²)`.
///
/// `(k11, k12, −k12ᵀ, k22/t⁴)` is a gauge transform of the equal-time kernel
/// (with the point shift `x ↦ x − t²`), so it defines the same gap
/// probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct AiryLimitMatrices {
    pub k11: DMatrix<C64>,
    pub k12: DMatrix<C64>,
    pub k22: DMatrix<C64>,
}

impl AiryLimitMatrices {
    /// The gauge-transformed kernel `(k11, k12, −k12ᵀ, k22/t⁴)`.
    pub fn gauge_kernel(&self, t: f64) -> KernelMatrices {
        KernelMatrices {
            k11: self.k11.clone(),
            k12: self.k12.clone(),
            k21: -self.k12.transpose(),
            k22: &self.k22 / c(t.powi(4)),
        }
    }
}

/// After the substitution `z = ζ + t` the three scaled blocks depend on `t`
/// and `ϖ` only through rational factors:
///
/// * `k11 = t/(2πi)² ∫∫_{C^{π/3}×C^{π/3}} e^{ζ³/3+ω³/3−xζ−yω}
///   (ζ−ω)(ζ+t+ϖ)(ω+t+ϖ)/((ζ+t)(ω+t)(ζ+ω+2t))`,
/// * `k12 = 1/(2πi)² ∫∫_{C^{π/3}×C^{2π/3}} e^{ζ³/3−ω³/3−xζ+yω}
///   (ζ+ω+2t)(ζ+t+ϖ)/(2(ζ+t)(ζ−ω)(ω+t+ϖ))` (the Gaussian remainder vanishes at
///   equal times),
/// * `k22` from the 22-block; when the vertical line `Re ζ = −1` lies to the
///   right of the poles `−t` and `−t−ϖ`, the double integral of `I₂₂` and the
///   remainder `R₂₂` combine into
///   `t³/(2πi)² ∫∫_{C^{π/2}_{−1}×C^{π/2}_{−1}} e^{−ζ³/3−ω³/3+xζ+yω}
///   (ζ−ω)/(4(ζ+ω+2t)(ζ+t+ϖ)(ω+t+ϖ))`; otherwise the block is computed
///   directly from `K^∞`.
pub fn airy_limit_matrices(t: f64, xs: &[f64], ys: &[f64], varpi: f64, opts: &KernelOptions) -> Result<AiryLimitMatrices> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("t = {t} must be positive and finite")));
    }
    if xs.is_empty() || ys.is_empty() {
        let z = DMatrix::<C64>::zeros(xs.len(), ys.len());
        return Ok(AiryLimitMatrices { k11: z.clone(), k12: z.clone(), k22: z });
    }
    let m = VERTEX_MARGIN;
    let w0 = varpi;
    let (xr, yr) = (min_of(xs), min_of(ys));
    // 11
    let (vz, vw) = (sqrt_pos(xr).max(-t + m), sqrt_pos(yr).max(-t + m));
    let k11 = double_matrix(
        &wedge(vz, PI3, opts)?,
        xs,
        |z, x| (z * z * z / 3.0 - x * z).exp(),
        &wedge(vw, PI3, opts)?,
        ys,
        |w, y| (w * w * w / 3.0 - y * w).exp(),
        |z, w| t * (z - w) * (z + t + w0) * (w + t + w0) / ((z + t) * (w + t) * (z + w + 2.0 * t)),
        "scaled K11",
    )?;
    // 12
    let vw = (-sqrt_pos(yr)).max(-t - w0 + m);
    let vz = sqrt_pos(xr).max(-t + m).max(vw + m);
    let k12 = double_matrix(
        &wedge(vz, PI3, opts)?,
        xs,
        |z, x| (z * z * z / 3.0 - x * z).exp(),
        &wedge(vw, PI23, opts)?,
        ys,
        |w, y| (-w * w * w / 3.0 + y * w).exp(),
        |z, w| (z + w + 2.0 * t) * (z + t + w0) / (2.0 * (z + t) * (z - w) * (w + t + w0)),
        "scaled K12",
    )?;
    // 22
    let k22 = if -1.0 >= (-t).max(-t - w0) + m {
        let line = make_ray_pair_with(C64::new(-1.0, 0.0), PI2, opts.ray_length, opts.panels)?;
        double_matrix(
            &line,
            xs,
            |z, x| (-z * z * z / 3.0 + x * z).exp(),
            &line,
            ys,
            |w, y| (-w * w * w / 3.0 + y * w).exp(),
            |z, w| t.powi(3) * (z - w) / (4.0 * (z + w + 2.0 * t) * (z + t + w0) * (w + t + w0)),
            "scaled K22",
        )?
    } else {
        scaled_k22_direct(t, xs, ys, varpi, opts)?
    };
    Ok(AiryLimitMatrices { k11, k12, k22 })
}

/// `t³ e^{2t³/3} e^{−t(x+y)} K^∞₂₂(f_q^{−1}t, x − t²; f_q^{−1}t, y − t²)`
/// straight from the definition of `K^∞` (which depends on `q` only through
/// `f_q s`, so any `q` may be used).
pub(crate) fn scaled_k22_direct(t: f64, xs: &[f64], ys: &[f64], varpi: f64, opts: &KernelOptions) -> Result<DMatrix<C64>> {
    let p = ScalingParams::new(0.5, varpi)?;
    let s = t / p.f_q;
    let xs2: Vec<f64> = xs.iter().map(|x| x - t * t).collect();
    let ys2: Vec<f64> = ys.iter().map(|y| y - t * t).collect();
    let v = super::limit::LimitVertices::saddle(s, min_of(&xs2), s, min_of(&ys2), &p);
    let k = i22_matrix(s, &xs2, s, &ys2, &p, opts, v.i22)? + r22_matrix(s, &xs2, s, &ys2, &p, opts)?;
    Ok(DMatrix::from_fn(xs.len(), ys.len(), |i, j| {
        k[(i, j)] * (t.powi(3) * (2.0 * t.powi(3) / 3.0 - t * (xs[i] + ys[j])).exp())
    }))
}

/// Right-hand sides of the three Airy limits, evaluated as the stated double
/// contour integrals (on contours through the saddle points; the integrands
/// are entire apart from `1/(z − w)`):
///
/// * 11: `(1/(2πi)²)∫∫_{C^{π/3}×C^{π/3}} (z−w)/2 · e^{z³/3+w³/3−zx−wy}`,
/// * 12: `(1/(2πi)²)∫∫_{C^{π/3}×C^{2π/3}} e^{z³/3−w³/3−xz+yw}/(z−w)` (the Airy kernel),
/// * 22: `(1/(2πi)²)∫∫_{C^{π/2}_{−1}×C^{π/2}_{−1}} (z−w)/8 · e^{−z³/3−w³/3+xz+yw}`.
fn airy_rhs(block: AiryBlock, x: f64, y: f64, opts: &KernelOptions) -> Result<C64> {
    let v = match block {
        AiryBlock::B11 => double_matrix(
            &wedge(sqrt_pos(x).max(1.0), PI3, opts)?,
            &[x],
            |z, x| (z * z * z / 3.0 - x * z).exp(),
            &wedge(sqrt_pos(y).max(1.0), PI3, opts)?,
            &[y],
            |w, y| (w * w * w / 3.0 - y * w).exp(),
            |z, w| (z - w) / 2.0,
            "Airy limit 11",
        )?,
        AiryBlock::B12 => {
            let (a, b) = airy_offsets(0.0, x, 0.0, y);
            double_matrix(
                &wedge(a, PI3, opts)?,
                &[x],
                |z, x| (z * z * z / 3.0 - x * z).exp(),
                &wedge(b, PI23, opts)?,
                &[y],
                |w, y| (-w * w * w / 3.0 + y * w).exp(),
                |z, w| 1.0 / (z - w),
                "Airy limit 12",
            )?
        }
        AiryBlock::B22 => {
            let line = make_ray_pair_with(C64::new(-1.0, 0.0), PI2, opts.ray_length, opts.panels)?;
            double_matrix(
                &line,
                &[x],
                |z, x| (-z * z * z / 3.0 + x * z).exp(),
                &line,
                &[y],
                |w, y| (-w * w * w / 3.0 + y * w).exp(),
                |z, w| (z - w) / 8.0,
                "Airy limit 22",
            )?
        }
    };
    Ok(v[(0, 0)])
}

/// `(lhs, rhs)` of one of the three large-time Airy limits at `(x, y)`:
/// `lhs` is the scaled block of [`airy_limit_matrices`], `rhs` its limit.
pub fn airy_limit_scaled(t: f64, x: f64, y: f64, block: AiryBlock, varpi: f64, opts: &KernelOptions) -> Result<(C64, C64)> {
    let m = airy_limit_matrices(t, &[x], &[y], varpi, opts)?;
    let lhs = match block {
        AiryBlock::B11 => m.k11[(0, 0)],
        AiryBlock::B12 => m.k12[(0, 0)],
        AiryBlock::B22 => m.k22[(0, 0)],
    };
    Ok((lhs, airy_rhs(block, x, y, opts)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn airy_function_values() {
        // Ai(0) = 3^{−2/3}/Γ(2/3), Ai′(0) = −3^{−1/3}/Γ(1/3)
        assert!((airy_ai(0.0).unwrap() - 0.355_028_053_887_817_2).abs() < 1e-13);
        assert!((airy_ai_prime(0.0).unwrap() + 0.258_819_403_792_806_8).abs() < 1e-13);
        assert!((airy_ai(2.0).unwrap() - 0.034_924_130_423_274_4).abs() < 1e-13);
        assert!((airy_ai(-2.0).unwrap() - 0.227_407_428_201_685_8).abs() < 1e-12);
    }

    #[test]
    fn gaussian_term_value() {
        let g = airy_gaussian(0.0, 0.0, 1.0, 0.0);
        assert!((g + (1.0f64 / 12.0).exp() / (4.0 * PI).sqrt()).abs() < 1e-15);
        assert!((g + 0.306_609_971_527_876).abs() < 1e-12);
    }

    #[test]
    fn offset_constraint_is_enforced() {
        let opts = KernelOptions::default();
        let err = kernel_airy_extended_with(0.0, 0.0, 1.0, 0.0, 0.0, 0.0, &opts).unwrap_err();
        assert!(matches!(err, Error::Configuration(_)));
        let (a, b) = airy_offsets(0.0, 0.0, 1.0, 0.0);
        assert!(a + 0.0 >= b + 1.0 + 1.0 - 1e-12);
    }

    #[test]
    fn shifted_22_block_matches_direct_evaluation() {
        let opts = KernelOptions::default();
        for w in [0.0, 0.5] {
            let shifted = airy_limit_matrices(2.0, &[0.0, 0.7], &[0.3, -0.4], w, &opts).unwrap().k22;
            let direct = scaled_k22_direct(2.0, &[0.0, 0.7], &[0.3, -0.4], w, &opts).unwrap();
            let scale = direct.iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!((shifted - &direct).iter().all(|v| v.norm() < 1e-8 * scale.max(1.0)), "{direct}");
        }
    }

    #[test]
    fn rhs_closed_forms() {
        let opts = KernelOptions::default();
        let (x, y) = (0.3, -0.5);
        let (ax, apx) = airy_pair(x, &opts).unwrap();
        let (ay, apy) = airy_pair(y, &opts).unwrap();
        let r11 = airy_rhs(AiryBlock::B11, x, y, &opts).unwrap();
        assert!((r11.re - 0.5 * (ax * apy - apx * ay)).abs() < 1e-12);
        let r12 = airy_rhs(AiryBlock::B12, x, y, &opts).unwrap();
        assert!((r12.re - (ax * apy - apx * ay) / (x - y)).abs() < 1e-12);
        let r22 = airy_rhs(AiryBlock::B22, x, y, &opts).unwrap();
        assert!((r22.re - 0.125 * (apx * ay - ax * apy)).abs() < 1e-12);
    }
}
