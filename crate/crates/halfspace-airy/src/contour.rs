//! Parametrised contours in the complex plane and their quadrature rules.
//!
//! A [`Contour`] is an ordered list of smooth [`Piece`]s (straight segments
//! and arcs of zero-centred circles).  Every contour carries a composite
//! Gauss–Legendre [`QuadratureRule`] built at construction, so integration is
//! a plain weighted sum over nodes.
//!
//! Three families are provided:
//!
//! * [`make_ray_pair`] — the truncated wedge `{z0 + |s| e^{sgn(s) iφ}}`,
//!   oriented with increasing imaginary part;
//! * [`make_circle`] — positively oriented zero-centred circles;
//! * [`make_gamma`] — the closed pre-limit contours: a short wedge at
//!   `1 + a N^{-1/3}` with half-length `N^{-1/12}`, closed counter-clockwise
//!   by the arc of the zero-centred circle through the wedge tips.

use crate::special::gauss_legendre_cached;
use crate::{Error, Result, C64};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Default Gauss–Legendre order per panel.
pub const DEFAULT_ORDER: usize = 24;
/// Default number of panels per piece.
pub const DEFAULT_PANELS: usize = 16;
/// Default ray truncation radius for the infinite wedge contours.
pub const DEFAULT_RAY_LENGTH: f64 = 6.0;
/// Exponent of the geometric grading of panels towards a wedge vertex.
pub const GRADING_POWER: f64 = 1.5;
/// Panels used on the closing arc of the pre-limit contours.
pub const ARC_PANELS: usize = 4;
/// Gauss–Legendre order used on the closing arc (4 × 16 = 64 nodes).
pub const ARC_ORDER: usize = 16;

/// Maximum gap allowed between consecutive pieces.
const JOIN_TOL: f64 = 1e-12;

/// How the panels of a piece are distributed in its parameter `t ∈ [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Grading {
    /// Equal-length panels.
    Uniform,
    /// Panels cluster near `t = 0`.
    TowardStart,
    /// Panels cluster near `t = 1`.
    TowardEnd,
}

/// One smooth piece of a contour, parametrised over `t ∈ [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Piece {
    /// Straight segment `a + (b - a) t`.
    Segment { a: C64, b: C64, grading: Grading },
    /// Arc `r e^{i(θ₀ + (θ₁ - θ₀) t)}`; counter-clockwise when `θ₁ > θ₀`.
    Arc { radius: f64, theta0: f64, theta1: f64 },
}

impl Piece {
    /// Point at parameter `t`.
    pub fn point(&self, t: f64) -> C64 {
        match *self {
            Piece::Segment { a, b, .. } => a + (b - a) * t,
            Piece::Arc { radius, theta0, theta1 } => C64::from_polar(radius, theta0 + (theta1 - theta0) * t),
        }
    }

    /// Derivative `dz/dt` at parameter `t`.
    pub fn derivative(&self, t: f64) -> C64 {
        match *self {
            Piece::Segment { a, b, .. } => b - a,
            Piece::Arc { theta0, theta1, .. } => C64::new(0.0, theta1 - theta0) * self.point(t),
        }
    }

    /// Start point.
    pub fn start(&self) -> C64 {
        self.point(0.0)
    }

    /// End point.
    pub fn end(&self) -> C64 {
        self.point(1.0)
    }

    fn grading(&self) -> Grading {
        match *self {
            Piece::Segment { grading, .. } => grading,
            Piece::Arc { .. } => Grading::Uniform,
        }
    }

    fn is_degenerate(&self) -> bool {
        match *self {
            Piece::Segment { a, b, .. } => (b - a).norm() == 0.0,
            Piece::Arc { radius, theta0, theta1 } => radius <= 0.0 || theta0 == theta1,
        }
    }
}

/// Panel layout for the composite Gauss–Legendre rule on one piece.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PanelSpec {
    pub panels: usize,
    pub order: usize,
}

impl Default for PanelSpec {
    fn default() -> Self {
        Self { panels: DEFAULT_PANELS, order: DEFAULT_ORDER }
    }
}

impl PanelSpec {
    /// Same order, twice as many panels (used for self-convergence checks).
    pub fn doubled(self) -> Self {
        Self { panels: 2 * self.panels, order: self.order }
    }
}

/// Composite Gauss–Legendre rule attached to a contour: `∫ f dz ≈ Σ f(zₖ) wₖ`
/// with complex weights `wₖ = z'(tₖ) · (Gauss weight)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<C64>,
    pub weights: Vec<C64>,
    pub panel_count: usize,
    pub order: usize,
}

impl QuadratureRule {
    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Whether the rule has no nodes.
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// A piecewise-smooth oriented contour with an attached quadrature rule.
#[derive(Clone, Debug, PartialEq)]
pub struct Contour {
    pieces: Vec<Piece>,
    rule: QuadratureRule,
    closed: bool,
}

fn panel_breaks(panels: usize, grading: Grading) -> Vec<f64> {
    (0..=panels)
        .map(|k| {
            let u = k as f64 / panels as f64;
            match grading {
                Grading::Uniform => u,
                Grading::TowardStart => u.powf(GRADING_POWER),
                Grading::TowardEnd => 1.0 - (1.0 - u).powf(GRADING_POWER),
            }
        })
        .collect()
}

impl Contour {
    /// Builds a contour from pieces, attaching a composite rule with the
    /// given panel layout on every piece.
    ///
    /// Consecutive pieces must join within `1e-12` and no piece may be
    /// degenerate.
    pub fn from_pieces(pieces: Vec<Piece>, spec: &[PanelSpec], closed: bool) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidInput("contour needs at least one piece".into()));
        }
        if spec.len() != pieces.len() {
            return Err(Error::InvalidInput("one panel specification per piece is required".into()));
        }
        for (k, p) in pieces.iter().enumerate() {
            if p.is_degenerate() {
                return Err(Error::Configuration(format!("contour piece {k} is degenerate")));
            }
        }
        for k in 1..pieces.len() {
            let gap = (pieces[k].start() - pieces[k - 1].end()).norm();
            if gap > JOIN_TOL * (1.0 + pieces[k].start().norm()) {
                return Err(Error::Configuration(format!("contour pieces {} and {k} do not join (gap {gap:.3e})", k - 1)));
            }
        }
        if closed {
            let gap = (pieces[0].start() - pieces[pieces.len() - 1].end()).norm();
            if gap > JOIN_TOL * (1.0 + pieces[0].start().norm()) {
                return Err(Error::Configuration(format!("closed contour does not close (gap {gap:.3e})")));
            }
        }
        let mut rule = QuadratureRule::default();
        for (piece, ps) in pieces.iter().zip(spec) {
            if ps.panels == 0 || ps.order == 0 {
                return Err(Error::InvalidInput("panel count and order must be positive".into()));
            }
            let (gx, gw) = gauss_legendre_cached(ps.order);
            let br = panel_breaks(ps.panels, piece.grading());
            for k in 0..ps.panels {
                let (t0, t1) = (br[k], br[k + 1]);
                let half = 0.5 * (t1 - t0);
                let mid = 0.5 * (t1 + t0);
                for (x, w) in gx.iter().zip(&gw) {
                    let t = mid + half * x;
                    rule.nodes.push(piece.point(t));
                    rule.weights.push(piece.derivative(t) * (w * half));
                }
            }
            rule.panel_count += ps.panels;
            rule.order = ps.order.max(rule.order);
        }
        Ok(Self { pieces, rule, closed })
    }

    /// The smooth pieces in order.
    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// The attached quadrature rule.
    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    /// Quadrature nodes.
    pub fn nodes(&self) -> &[C64] {
        &self.rule.nodes
    }

    /// Complex quadrature weights (`z'(t)` times Gauss weights).
    pub fn weights(&self) -> &[C64] {
        &self.rule.weights
    }

    /// Whether the contour is a closed curve.
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// First point of the contour.
    pub fn start(&self) -> C64 {
        self.pieces[0].start()
    }

    /// Last point of the contour.
    pub fn end(&self) -> C64 {
        self.pieces[self.pieces.len() - 1].end()
    }

    /// Total change of `arg(z - p)` along the contour divided by `2π`,
    /// measured geometrically on a fine polygonal approximation.  For a
    /// closed contour this is the winding number around `p`.
    pub fn winding_number(&self, p: C64) -> f64 {
        const SAMPLES: usize = 4096;
        let mut total = 0.0;
        for piece in &self.pieces {
            let mut prev = piece.start() - p;
            for k in 1..=SAMPLES {
                let cur = piece.point(k as f64 / SAMPLES as f64) - p;
                total += (cur / prev).arg();
                prev = cur;
            }
        }
        total / (2.0 * PI)
    }

    /// Whether a closed contour winds (non-trivially) around `p`.
    pub fn encloses(&self, p: C64) -> bool {
        self.closed && winding_index(&self.polyline(), p) != 0
    }

    /// Whether a closed contour winds around every point of `pts`; the
    /// polygonal approximation is built once for all of them.
    pub fn encloses_all(&self, pts: &[C64]) -> bool {
        if !self.closed {
            return false;
        }
        let poly = self.polyline();
        pts.iter().all(|&p| winding_index(&poly, p) != 0)
    }

    /// Closed polygonal approximation with 4096 segments per piece.
    fn polyline(&self) -> Vec<C64> {
        const SAMPLES: usize = 4096;
        let mut poly: Vec<C64> = self
            .pieces
            .iter()
            .flat_map(|piece| (0..SAMPLES).map(move |k| piece.point(k as f64 / SAMPLES as f64)))
            .collect();
        if let Some(&first) = poly.first() {
            poly.push(first);
        }
        poly
    }

    /// Smallest distance from `p` to the contour, estimated on a fine
    /// polygonal approximation.
    pub fn distance_to(&self, p: C64) -> f64 {
        const SAMPLES: usize = 2048;
        self.pieces
            .iter()
            .flat_map(|piece| (0..=SAMPLES).map(move |k| piece.point(k as f64 / SAMPLES as f64)))
            .map(|z| (z - p).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Points sampled along the contour (for containment checks and plots).
    pub fn sample_points(&self, per_piece: usize) -> Vec<C64> {
        self.pieces
            .iter()
            .flat_map(|piece| (0..=per_piece).map(move |k| piece.point(k as f64 / per_piece as f64)))
            .collect()
    }
}

/// Integer winding number of the closed polyline `poly` (first vertex
/// repeated at the end) around `p`, by signed upward/downward crossings.
fn winding_index(poly: &[C64], p: C64) -> i32 {
    let is_left = |a: C64, b: C64| (b.re - a.re) * (p.im - a.im) - (p.re - a.re) * (b.im - a.im);
    let mut wn = 0;
    for e in poly.windows(2) {
        let (a, b) = (e[0], e[1]);
        if a.im <= p.im {
            if b.im > p.im && is_left(a, b) > 0.0 {
                wn += 1;
            }
        } else if b.im <= p.im && is_left(a, b) < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// The truncated infinite wedge `C_{z0}^φ = {z0 + |s| e^{sgn(s) iφ} : |s| ≤ L}`,
/// oriented with increasing imaginary part, with the default panel layout.
pub fn make_ray_pair(z0: C64, phi: f64, length: f64) -> Result<Contour> {
    make_ray_pair_with(z0, phi, length, PanelSpec::default())
}

/// [`make_ray_pair`] with an explicit panel layout (panels per ray).
pub fn make_ray_pair_with(z0: C64, phi: f64, length: f64, spec: PanelSpec) -> Result<Contour> {
    if !(phi > 0.0 && phi < PI) {
        return Err(Error::InvalidInput(format!("ray angle {phi} is not in (0, π)")));
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::InvalidInput(format!("ray truncation length {length} must be positive")));
    }
    let lower = z0 + C64::from_polar(length, -phi);
    let upper = z0 + C64::from_polar(length, phi);
    Contour::from_pieces(
        vec![
            Piece::Segment { a: lower, b: z0, grading: Grading::TowardEnd },
            Piece::Segment { a: z0, b: upper, grading: Grading::TowardStart },
        ],
        &[spec, spec],
        false,
    )
}

/// Positively oriented zero-centred circle of radius `r` with 16 panels of
/// order 24.
pub fn make_circle(r: f64) -> Result<Contour> {
    make_circle_with(r, PanelSpec::default())
}

/// [`make_circle`] with an explicit panel layout.
pub fn make_circle_with(r: f64, spec: PanelSpec) -> Result<Contour> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidInput(format!("circle radius {r} must be positive")));
    }
    Contour::from_pieces(vec![Piece::Arc { radius: r, theta0: 0.0, theta1: 2.0 * PI }], &[spec], true)
}

/// Which of the two pre-limit contour shapes to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GammaSign {
    /// Wedge opening to the right (rays at angles `±π/3`).
    Plus,
    /// Wedge opening to the left (rays at angles `±2π/3`).
    Minus,
}

/// The closed pre-limit contour `γ_N^±(a)` with the default layout.
pub fn make_gamma(a: f64, n: u64, sign: GammaSign) -> Result<Contour> {
    make_gamma_with(a, n, sign, PanelSpec::default())
}

/// `γ_N^±(a)`: the wedge `{1 + a N^{-1/3} + |s| N^{-1/3} e^{± iφ} : |s| ≤ N^{1/4}}`
/// (`φ = π/3` for [`GammaSign::Plus`], `2π/3` for [`GammaSign::Minus`]),
/// oriented with increasing imaginary part, followed by the counter-clockwise
/// arc of the zero-centred circle from the upper tip back to the lower tip.
///
/// The wedge uses `spec` panels per ray; the arc uses 64 nodes uniform in
/// angle.
pub fn make_gamma_with(a: f64, n: u64, sign: GammaSign, spec: PanelSpec) -> Result<Contour> {
    make_gamma_with_arc(a, n, sign, spec, PanelSpec { panels: ARC_PANELS, order: ARC_ORDER })
}

/// [`make_gamma_with`] with an explicit panel layout on the closing arc, for
/// integrands that oscillate on the arc (high-order powers of `z`) instead
/// of being exponentially small there.
pub fn make_gamma_with_arc(a: f64, n: u64, sign: GammaSign, spec: PanelSpec, arc_spec: PanelSpec) -> Result<Contour> {
    if n == 0 {
        return Err(Error::InvalidInput("N must be at least 1".into()));
    }
    let nf = n as f64;
    let vertex = C64::new(1.0 + a * nf.powf(-1.0 / 3.0), 0.0);
    let half = nf.powf(-1.0 / 12.0);
    let phi = match sign {
        GammaSign::Plus => PI / 3.0,
        GammaSign::Minus => 2.0 * PI / 3.0,
    };
    let lower = vertex + C64::from_polar(half, -phi);
    let upper = vertex + C64::from_polar(half, phi);
    let radius = upper.norm();
    if !(radius > 0.0) || (lower.norm() - radius).abs() > 1e-12 {
        return Err(Error::Configuration(format!("closing arc radius {radius} is not positive")));
    }
    let theta_up = upper.arg();
    if !(theta_up > 0.0 && theta_up < PI) {
        return Err(Error::Configuration(format!(
            "wedge tip {upper} is not in the upper half-plane; the closing arc is undefined"
        )));
    }
    let arc = Piece::Arc { radius, theta0: theta_up, theta1: 2.0 * PI - theta_up };
    // Snap the arc end points onto the segment end points exactly.
    let pieces = vec![
        Piece::Segment { a: arc.end(), b: vertex, grading: Grading::TowardEnd },
        Piece::Segment { a: vertex, b: arc.start(), grading: Grading::TowardStart },
        arc,
    ];
    Contour::from_pieces(pieces, &[spec, spec, arc_spec], true)
}

fn check_finite(v: C64, node: C64, context: &str) -> Result<C64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { node, context: context.to_string() })
    }
}

/// `Σ f(zₖ) wₖ` over the contour's rule.  Fails naming the first node where
/// `f` is not finite.
pub fn integrate(f: impl Fn(C64) -> C64, c: &Contour) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for (z, w) in c.nodes().iter().zip(c.weights()) {
        acc += check_finite(f(*z), *z, "single contour integral")? * w;
    }
    Ok(acc)
}

/// Tensor-product rule `Σᵢⱼ f(zᵢ, wⱼ) wtᵢ wtⱼ`; the `1/(2πi)²` prefactor is
/// left to the caller.  Rows are evaluated in parallel and summed in a fixed
/// order, so the result is deterministic.
pub fn integrate_double(f: impl Fn(C64, C64) -> C64 + Sync, cz: &Contour, cw: &Contour) -> Result<C64> {
    let rows: Vec<Result<C64>> = cz
        .nodes()
        .par_iter()
        .zip(cz.weights().par_iter())
        .map(|(z, wz)| {
            let mut acc = C64::new(0.0, 0.0);
            for (w, ww) in cw.nodes().iter().zip(cw.weights()) {
                let v = f(*z, *w);
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFinite { node: *z, context: format!("double contour integral, w = {w}") });
                }
                acc += v * ww;
            }
            Ok(acc * wz)
        })
        .collect();
    let mut total = C64::new(0.0, 0.0);
    for r in rows {
        total += r?;
    }
    Ok(total)
}

/// `2πi`.
pub fn two_pi_i() -> C64 {
    C64::new(0.0, 2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn circle_residues() {
        let c1 = make_circle(1.0).unwrap();
        let v = integrate(|z| 1.0 / z, &c1).unwrap();
        assert!((v - two_pi_i()).norm() < 1e-12);
        let v = integrate(|z| z * z, &c1).unwrap();
        assert!(v.norm() < 1e-13);
        let c2 = make_circle(2.0).unwrap();
        let v = integrate(|z| 1.0 / (z - 1.0), &c2).unwrap();
        assert!((v - two_pi_i()).norm() < 1e-11);
        assert!(make_circle(0.0).is_err());
    }

    #[test]
    fn minimal_layout_meets_residue_tolerance() {
        let c1 = make_circle_with(1.0, PanelSpec { panels: 8, order: 16 }).unwrap();
        let v = integrate(|z| 1.0 / z, &c1).unwrap();
        assert!((v - two_pi_i()).norm() < 1e-10);
    }

    #[test]
    fn ray_pair_endpoints_and_orientation() {
        let r = make_ray_pair(c(1.0, 0.0), PI / 3.0, 5.0).unwrap();
        assert!((r.start() - (c(1.0, 0.0) + C64::from_polar(5.0, -PI / 3.0))).norm() < 1e-14);
        assert!((r.end() - (c(1.0, 0.0) + C64::from_polar(5.0, PI / 3.0))).norm() < 1e-14);
        assert!(r.end().im > r.start().im);
        let l = make_ray_pair(c(-3.0, 0.0), 2.0 * PI / 3.0, 5.0).unwrap();
        assert!(l.start().re < -3.0 && l.end().re < -3.0);
        assert!(make_ray_pair(c(0.0, 0.0), 0.0, 5.0).is_err());
        assert!(make_ray_pair(c(0.0, 0.0), PI, 5.0).is_err());
    }

    #[test]
    fn cubic_ray_integral_stable_in_truncation() {
        let f = |z: C64| (z * z * z / 3.0).exp();
        let a = integrate(f, &make_ray_pair(c(1.0, 0.0), PI / 3.0, 5.0).unwrap()).unwrap();
        let b = integrate(f, &make_ray_pair(c(1.0, 0.0), PI / 3.0, 7.0).unwrap()).unwrap();
        assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn deformation_of_entire_integrand() {
        let f = |z: C64| (z * z * z / 3.0 - 2.0 * z).exp();
        let a = integrate(f, &make_ray_pair(c(1.0, 0.0), PI / 3.0, 6.0).unwrap()).unwrap();
        let b = integrate(f, &make_ray_pair(c(3.0, 0.0), PI / 3.0, 6.0).unwrap()).unwrap();
        assert!((a - b).norm() < 1e-8, "{a} vs {b}");
        // 1/(2πi)∫ e^{z³/3 - xz} dz over C^{π/3} is Ai(x); Ai(2) = 0.0349241304…
        let ai2 = a / two_pi_i();
        assert!((ai2.re - 0.034_924_130_423_274_4).abs() < 1e-12 && ai2.im.abs() < 1e-12);
    }

    #[test]
    fn zero_integrand() {
        let r = make_ray_pair(c(0.5, 0.0), PI / 3.0, 6.0).unwrap();
        assert_eq!(integrate(|_| c(0.0, 0.0), &r).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn non_finite_value_names_node() {
        let c1 = make_circle(1.0).unwrap();
        let err = integrate(|z| if z.re > 0.99 { c(f64::NAN, 0.0) } else { z }, &c1).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn double_integral_of_reciprocals() {
        let c1 = make_circle(1.0).unwrap();
        let c2 = make_circle(2.0).unwrap();
        let target = two_pi_i() * two_pi_i();
        let v = integrate_double(|z, w| 1.0 / (z * w), &c1, &c1).unwrap();
        assert!((v - target).norm() < 1e-10);
        let v = integrate_double(|z, w| 1.0 / (z * w), &c1, &c2).unwrap();
        assert!((v - target).norm() < 1e-10);
    }

    #[test]
    fn gamma_contours_are_closed_and_wind_once() {
        for sign in [GammaSign::Plus, GammaSign::Minus] {
            let g = make_gamma(0.5, 1000, sign).unwrap();
            assert!(g.is_closed());
            assert!((g.winding_number(c(0.0, 0.0)) - 1.0).abs() < 1e-9);
            // closed: ∮ dz = 0 and ∮ dz/z = 2πi
            assert!(integrate(|_| c(1.0, 0.0), &g).unwrap().norm() < 1e-12);
            assert!((integrate(|z| 1.0 / z, &g).unwrap() - two_pi_i()).norm() < 1e-9);
        }
        let plus = make_gamma(3.0, 100_000, GammaSign::Plus).unwrap();
        assert!((plus.winding_number(c(1.0, 0.0)) - 1.0).abs() < 1e-9);
        for k in 0..64 {
            let p = C64::from_polar(1.0, 2.0 * PI * k as f64 / 64.0);
            assert!(plus.encloses(p));
        }
        let minus = make_gamma(-3.0, 100_000, GammaSign::Minus).unwrap();
        assert!(minus.sample_points(256).iter().all(|z| z.norm() < 1.0));
    }
}
