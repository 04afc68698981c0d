//! Samplers for interlacing geometric line ensembles, the Pfaffian Schur
//! measure and avoiding reverse Brownian motions, plus Monte Carlo window
//! statistics.
//!
//! Every sampler owns a `ChaCha8` generator seeded from a `u64`, so identical
//! seeds give bit-identical output on every platform.

use crate::fredholm::{SpaceTimePoint, Window};
use crate::kernels::{LatticeSpec, ScalingParams};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Normal, StandardNormal};

/// Generator used by all samplers.
pub type SamplerRng = ChaCha8Rng;

/// A generator seeded from `seed`.
pub fn rng_from_seed(seed: u64) -> SamplerRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A partition: weakly decreasing non-negative parts, trailing zeros trimmed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Partition {
    parts: Vec<u64>,
}

impl Partition {
    /// Validates monotonicity and trims trailing zeros.
    pub fn new(mut parts: Vec<u64>) -> Result<Self> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput(format!("parts {parts:?} are not weakly decreasing")));
        }
        while parts.last() == Some(&0) {
            parts.pop();
        }
        Ok(Self { parts })
    }

    /// The non-zero parts.
    pub fn parts(&self) -> &[u64] {
        &self.parts
    }

    /// `λ_i` (1-based); zero beyond the length.
    pub fn part(&self, i: usize) -> u64 {
        if i == 0 {
            0
        } else {
            self.parts.get(i - 1).copied().unwrap_or(0)
        }
    }

    /// `|λ|`.
    pub fn weight(&self) -> u64 {
        self.parts.iter().sum()
    }

    /// Number of non-zero parts.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// `μ ⪯ λ`: `λ₁ ≥ μ₁ ≥ λ₂ ≥ μ₂ ≥ …`.
    pub fn interlaces_below(&self, lambda: &Partition) -> bool {
        let n = self.len().max(lambda.len()) + 1;
        (1..=n).all(|i| lambda.part(i) >= self.part(i) && self.part(i) >= lambda.part(i + 1))
    }

    /// `λ₁ − λ₂ + λ₃ − …`.
    pub fn alternating_sum(&self) -> i64 {
        self.parts.iter().enumerate().map(|(i, &p)| if i % 2 == 0 { p as i64 } else { -(p as i64) }).sum()
    }
}

/// An increasing integer path on `⟦0, T⟧`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IncreasingPath {
    values: Vec<i64>,
}

impl IncreasingPath {
    /// Validates `values[j+1] ≥ values[j]`; the domain is `⟦0, len−1⟧`.
    pub fn new(values: Vec<i64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("a path needs at least one value".into()));
        }
        if let Some(j) = values.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput(format!("path decreases between {j} and {}", j + 1)));
        }
        Ok(Self { values })
    }

    /// `T`.
    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    /// `L(j)`.
    pub fn at(&self, j: usize) -> i64 {
        self.values[j]
    }
}

/// The floor `g` of an interlacing ensemble.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Floor {
    /// `g ≡ −∞`.
    NegInfinity,
    /// An increasing integer path on `⟦0, T⟧`.
    Path(Vec<i64>),
}

impl Floor {
    fn at(&self, r: usize) -> i64 {
        match self {
            Floor::NegInfinity => i64::MIN,
            Floor::Path(g) => g[r],
        }
    }

    fn validate(&self, horizon: usize) -> Result<()> {
        if let Floor::Path(g) = self {
            if g.len() != horizon + 1 {
                return Err(Error::InvalidInput(format!("floor has {} values, expected {}", g.len(), horizon + 1)));
            }
            if g.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::InvalidInput("floor must be increasing".into()));
            }
        }
        Ok(())
    }

    fn le(&self, other: &Floor) -> bool {
        match (self, other) {
            (Floor::NegInfinity, _) => true,
            (Floor::Path(_), Floor::NegInfinity) => false,
            (Floor::Path(a), Floor::Path(b)) => a.iter().zip(b).all(|(x, y)| x <= y),
        }
    }
}

/// `k` interlacing increasing paths with exit data `y` and floor `g`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeomLineEnsemble {
    pub paths: Vec<IncreasingPath>,
    pub exit: Vec<i64>,
    pub floor: Floor,
    pub q: Vec<f64>,
}

fn interlacing_violation(paths: &[Vec<i64>], floor: &Floor) -> Option<(usize, usize)> {
    let k = paths.len();
    let horizon = paths.first().map_or(0, |p| p.len() - 1);
    for i in 0..k {
        for r in 1..=horizon {
            let below = if i + 1 < k { paths[i + 1][r] } else { floor.at(r) };
            if paths[i][r - 1] < below {
                return Some((i + 1, r));
            }
        }
    }
    None
}

impl GeomLineEnsemble {
    /// `T`.
    pub fn horizon(&self) -> usize {
        self.paths.first().map_or(0, |p| p.horizon())
    }

    /// Checks monotonicity, exit data and `Q_i(r−1) ≥ Q_{i+1}(r)` (with
    /// `Q_{k+1} = g`).
    pub fn check(&self) -> Result<()> {
        let raw: Vec<Vec<i64>> = self.paths.iter().map(|p| p.values.clone()).collect();
        for (i, p) in raw.iter().enumerate() {
            if p.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::Consistency(format!("path {} is not increasing", i + 1)));
            }
            if p.last() != Some(&self.exit[i]) {
                return Err(Error::Consistency(format!("path {} does not end at its exit value", i + 1)));
            }
        }
        match interlacing_violation(&raw, &self.floor) {
            Some((i, r)) => Err(Error::Consistency(format!("interlacing fails for path {i} at r = {r}"))),
            None => Ok(()),
        }
    }
}

fn check_q(q: f64) -> Result<()> {
    if (0.0..1.0).contains(&q) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("jump parameter q = {q} must lie in [0, 1)")))
    }
}

/// Reverse geometric walk `L(j) = y − Σ_{ℓ=j+1}^T G_ℓ` with i.i.d.
/// `P(G = k) = (1−q)qᵏ`.
pub fn sample_reverse_walk(horizon: usize, y: i64, q: f64, seed: u64) -> Result<IncreasingPath> {
    sample_reverse_walk_with(horizon, y, q, &mut rng_from_seed(seed))
}

/// [`sample_reverse_walk`] drawing from a caller-supplied generator.
pub fn sample_reverse_walk_with(horizon: usize, y: i64, q: f64, rng: &mut impl Rng) -> Result<IncreasingPath> {
    check_q(q)?;
    let geo = Geometric::new(1.0 - q).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut values = vec![y; horizon + 1];
    for j in (0..horizon).rev() {
        let g = geo.sample(rng) as i64;
        values[j] = values[j + 1] - g;
    }
    Ok(IncreasingPath { values })
}

fn validate_boundary(horizon: usize, y: &[i64], q: &[f64], floor: &Floor) -> Result<()> {
    if y.is_empty() || y.len() != q.len() {
        return Err(Error::InvalidInput(format!("{} exit values but {} jump parameters", y.len(), q.len())));
    }
    if y.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidInput(format!("exit data {y:?} must be weakly decreasing")));
    }
    for &qi in q {
        check_q(qi)?;
    }
    floor.validate(horizon)?;
    if floor.at(horizon) > y[y.len() - 1] {
        return Err(Error::InvalidInput("floor ends above the lowest exit value".into()));
    }
    Ok(())
}

/// Exact sample of the interlacing ensemble by rejection: independent
/// reverse walks are drawn until they interlace.  Returns the sample and the
/// number of attempts used.
pub fn sample_interlacing_rejection(
    horizon: usize,
    y: &[i64],
    q: &[f64],
    floor: &Floor,
    seed: u64,
    max_attempts: u64,
) -> Result<(GeomLineEnsemble, u64)> {
    sample_interlacing_rejection_with(horizon, y, q, floor, &mut rng_from_seed(seed), max_attempts)
}

/// [`sample_interlacing_rejection`] drawing from a caller-supplied generator.
pub fn sample_interlacing_rejection_with(
    horizon: usize,
    y: &[i64],
    q: &[f64],
    floor: &Floor,
    rng: &mut impl Rng,
    max_attempts: u64,
) -> Result<(GeomLineEnsemble, u64)> {
    validate_boundary(horizon, y, q, floor)?;
    for attempt in 1..=max_attempts {
        let paths: Vec<Vec<i64>> = y
            .iter()
            .zip(q)
            .map(|(&yi, &qi)| sample_reverse_walk_with(horizon, yi, qi, rng).map(|p| p.values))
            .collect::<Result<_>>()?;
        if interlacing_violation(&paths, floor).is_none() {
            let ens = GeomLineEnsemble {
                paths: paths.into_iter().map(|values| IncreasingPath { values }).collect(),
                exit: y.to_vec(),
                floor: floor.clone(),
                q: q.to_vec(),
            };
            return Ok((ens, attempt));
        }
    }
    Err(Error::RejectionBudget { attempts: max_attempts })
}

/// The single-site heat-bath-free Metropolis chain on interlacing ensembles:
/// each step draws a uniform `(i, t, ζ) ∈ ⟦1,k⟧ × ⟦0,T⟧ × {±1}` and a
/// uniform `U`, proposes `Q_i(t) += ζ` and accepts when the proposal is
/// admissible and the weight ratio `∏ q_i^{y_i − Q_i(0)}` (which is `q_i`
/// for `t = 0, ζ = −1`, `1/q_i` for `t = 0, ζ = +1` and 1 otherwise) is at
/// least `U`.
#[derive(Clone, Debug)]
pub struct GlauberChain {
    paths: Vec<Vec<i64>>,
    exit: Vec<i64>,
    floor: Floor,
    q: Vec<f64>,
}

/// One draw of the shared randomness `(i, t, ζ, U)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlauberMove {
    pub i: usize,
    pub t: usize,
    pub zeta: i64,
    pub u: f64,
}

impl GlauberMove {
    /// Uniform move for `k` paths on `⟦0, T⟧`.
    pub fn draw(k: usize, horizon: usize, rng: &mut impl Rng) -> Self {
        let i = rng.random_range(0..k);
        let t = rng.random_range(0..=horizon);
        let zeta = if rng.random::<bool>() { 1 } else { -1 };
        let u = rng.random::<f64>();
        Self { i, t, zeta, u }
    }
}

impl GlauberChain {
    /// Starts from the flat configuration `Q_i ≡ y_i`.
    pub fn new(horizon: usize, y: &[i64], q: &[f64], floor: &Floor) -> Result<Self> {
        validate_boundary(horizon, y, q, floor)?;
        let paths = y.iter().map(|&yi| vec![yi; horizon + 1]).collect();
        let chain = Self { paths, exit: y.to_vec(), floor: floor.clone(), q: q.to_vec() };
        if let Some((i, r)) = interlacing_violation(&chain.paths, &chain.floor) {
            return Err(Error::InvalidInput(format!("flat initial state violates the floor at path {i}, r = {r}")));
        }
        Ok(chain)
    }

    pub fn k(&self) -> usize {
        self.paths.len()
    }

    pub fn horizon(&self) -> usize {
        self.paths[0].len() - 1
    }

    /// `Q_i(t)` (0-based `i`).
    pub fn value(&self, i: usize, t: usize) -> i64 {
        self.paths[i][t]
    }

    fn admissible(&self, i: usize, t: usize, v: i64) -> bool {
        let horizon = self.horizon();
        if t == horizon {
            return v == self.exit[i];
        }
        let p = &self.paths[i];
        if (t > 0 && v < p[t - 1]) || v > p[t + 1] {
            return false;
        }
        // Q_i(t) ≥ Q_{i+1}(t+1) (or the floor)
        let below = if i + 1 < self.k() { self.paths[i + 1][t + 1] } else { self.floor.at(t + 1) };
        if v < below {
            return false;
        }
        // Q_{i−1}(t−1) ≥ Q_i(t)
        !(i > 0 && t > 0 && self.paths[i - 1][t - 1] < v)
    }

    /// Applies one move; returns whether it was accepted.
    pub fn apply(&mut self, m: GlauberMove) -> bool {
        let v = self.paths[m.i][m.t] + m.zeta;
        if !self.admissible(m.i, m.t, v) {
            return false;
        }
        let ratio = if m.t == 0 {
            if m.zeta < 0 {
                self.q[m.i]
            } else {
                1.0 / self.q[m.i]
            }
        } else {
            1.0
        };
        if ratio >= m.u {
            self.paths[m.i][m.t] = v;
            true
        } else {
            false
        }
    }

    /// One step with a freshly drawn move.
    pub fn step(&mut self, rng: &mut impl Rng) -> bool {
        let m = GlauberMove::draw(self.k(), self.horizon(), rng);
        self.apply(m)
    }

    /// The current state as an ensemble.
    pub fn ensemble(&self) -> GeomLineEnsemble {
        GeomLineEnsemble {
            paths: self.paths.iter().map(|v| IncreasingPath { values: v.clone() }).collect(),
            exit: self.exit.clone(),
            floor: self.floor.clone(),
            q: self.q.clone(),
        }
    }

    /// Checks the interlacing invariant of the current state.
    pub fn check(&self) -> Result<()> {
        self.ensemble().check()
    }

    /// Whether `Q^self_i(t) ≤ Q^other_i(t)` everywhere.
    pub fn is_below(&self, other: &GlauberChain) -> bool {
        self.paths.iter().zip(&other.paths).all(|(a, b)| a.iter().zip(b).all(|(x, y)| x <= y))
    }
}

/// Runs the chain for `n_steps` from the flat state.
pub fn run_glauber(horizon: usize, y: &[i64], q: &[f64], floor: &Floor, n_steps: u64, seed: u64) -> Result<GeomLineEnsemble> {
    let mut chain = GlauberChain::new(horizon, y, q, floor)?;
    let mut rng = rng_from_seed(seed);
    for _ in 0..n_steps {
        chain.step(&mut rng);
    }
    chain.check()?;
    Ok(chain.ensemble())
}

/// Runs two chains with boundary data `(y^b, g^b) ≤ (y^t, g^t)` driven by
/// the same moves, checking the pathwise ordering after every step.
/// Returns `(bottom, top)`.
pub fn run_glauber_coupled(
    horizon: usize,
    bottom: (&[i64], &Floor),
    top: (&[i64], &Floor),
    q: &[f64],
    n_steps: u64,
    seed: u64,
) -> Result<(GeomLineEnsemble, GeomLineEnsemble)> {
    let (yb, gb) = bottom;
    let (yt, gt) = top;
    if yb.len() != yt.len() || yb.iter().zip(yt).any(|(b, t)| b > t) || !gb.le(gt) {
        return Err(Error::InvalidInput("coupled chains need y^b ≤ y^t and g^b ≤ g^t".into()));
    }
    let mut xb = GlauberChain::new(horizon, yb, q, gb)?;
    let mut xt = GlauberChain::new(horizon, yt, q, gt)?;
    let mut rng = rng_from_seed(seed);
    for step in 0..n_steps {
        let m = GlauberMove::draw(yb.len(), horizon, &mut rng);
        xb.apply(m);
        xt.apply(m);
        if !xb.is_below(&xt) {
            return Err(Error::Consistency(format!("coupled chains lost their ordering at step {step}")));
        }
    }
    Ok((xb.ensemble(), xt.ensemble()))
}

/// Parameters of the homogeneous Pfaffian Schur measure restricted to
/// `k_max` tracked rows and `|λ^M| ≤ depth_cutoff`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchurParams {
    pub n: usize,
    pub m: usize,
    pub q: f64,
    pub c: f64,
    pub k_max: usize,
    pub depth_cutoff: u64,
}

impl SchurParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::InvalidInput(format!("q = {} must lie in (0,1)", self.q)));
        }
        if !(self.c > self.q && self.c < 1.0 / self.q) {
            return Err(Error::InvalidInput(format!("c = {} must lie in (q, 1/q)", self.c)));
        }
        if self.n == 0 || self.k_max == 0 {
            return Err(Error::InvalidInput("N and k_max must be positive".into()));
        }
        Ok(())
    }

    /// `log` of the unnormalised weight
    /// `c^{alt(λ⁰)} ∏_j q^{|λʲ|−|λ^{j−1}|} · s_{λᴹ}(q,…,q)`, or `None` if the
    /// sequence is outside the (truncated) support.
    pub fn log_weight(&self, seq: &[Vec<u64>]) -> Option<f64> {
        let rows = self.k_max;
        if seq.len() != self.m + 1 || seq.iter().any(|l| l.len() != rows) {
            return None;
        }
        for l in seq {
            if l.windows(2).any(|w| w[0] < w[1]) {
                return None;
            }
        }
        for j in 1..seq.len() {
            if !rows_interlace(&seq[j - 1], &seq[j]) {
                return None;
            }
        }
        let top = &seq[self.m];
        if top.iter().skip(self.n).any(|&v| v > 0) || top.iter().sum::<u64>() > self.depth_cutoff {
            return None;
        }
        let alt: i64 = seq[0].iter().enumerate().map(|(i, &p)| if i % 2 == 0 { p as i64 } else { -(p as i64) }).sum();
        let w0: u64 = seq[0].iter().sum();
        let wm: u64 = top.iter().sum();
        let mut lw = alt as f64 * self.c.ln() + (wm as f64 - w0 as f64) * self.q.ln() + wm as f64 * self.q.ln();
        lw += log_schur_dimension(top, self.n);
        Some(lw)
    }
}

/// `μ ⪯ λ` for equal-length row vectors padded with zeros.
fn rows_interlace(mu: &[u64], lambda: &[u64]) -> bool {
    let n = mu.len();
    (0..n).all(|i| lambda[i] >= mu[i] && (i + 1 >= n || mu[i] >= lambda[i + 1]))
}

/// `ln s_λ(1,…,1)` with `N` ones: `Σ_{i<j≤N} ln((λ_i − λ_j + j − i)/(j − i))`.
fn log_schur_dimension(lambda: &[u64], n: usize) -> f64 {
    let part = |i: usize| lambda.get(i).copied().unwrap_or(0) as f64;
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let d = (j - i) as f64;
            s += ((part(i) - part(j) + d) / d).ln();
        }
    }
    s
}

/// Exhaustive enumeration of the truncated Schur measure: every admissible
/// sequence `(λ⁰, …, λᴹ)` (rows stored as `k_max`-vectors) with its
/// probability.  Exponential cost; intended for small `N`, `M` and cutoffs.
pub fn enumerate_schur(params: &SchurParams) -> Result<Vec<(Vec<Vec<u64>>, f64)>> {
    params.validate()?;
    let rows = params.k_max.min(params.n);
    let mut tops = Vec::new();
    partitions_up_to(params.depth_cutoff, rows, params.k_max, &mut vec![], &mut tops);
    let mut out = Vec::new();
    for top in tops {
        let mut seq = vec![vec![0; params.k_max]; params.m + 1];
        seq[params.m] = top;
        descend(params, params.m, &mut seq, &mut out);
    }
    if out.len() > 5_000_000 {
        return Err(Error::SizeLimit { dim: out.len(), max: 5_000_000 });
    }
    let max = out.iter().map(|(_, lw)| *lw).fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = out.iter().map(|(_, lw)| (lw - max).exp()).sum();
    Ok(out.into_iter().map(|(s, lw)| (s, (lw - max).exp() / total)).collect())
}

fn partitions_up_to(budget: u64, rows: usize, width: usize, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
    let mut full = cur.clone();
    full.resize(width, 0);
    out.push(full);
    if cur.len() == rows {
        return;
    }
    let cap = cur.last().copied().unwrap_or(budget).min(budget);
    for v in 1..=cap {
        cur.push(v);
        partitions_up_to(budget - v, rows, width, cur, out);
        cur.pop();
    }
}

fn descend(params: &SchurParams, j: usize, seq: &mut Vec<Vec<u64>>, out: &mut Vec<(Vec<Vec<u64>>, f64)>) {
    if j == 0 {
        if let Some(lw) = params.log_weight(seq) {
            out.push((seq.clone(), lw));
        }
        return;
    }
    let upper = seq[j].clone();
    let mut below = vec![0; upper.len()];
    fill_interlaced(&upper, 0, &mut below, &mut |mu| {
        seq[j - 1] = mu.to_vec();
        descend(params, j - 1, seq, out);
    });
}

/// Calls `f` for every `μ ⪯ λ` (same number of rows).
fn fill_interlaced(lambda: &[u64], i: usize, mu: &mut Vec<u64>, f: &mut dyn FnMut(&[u64])) {
    if i == lambda.len() {
        f(mu);
        return;
    }
    let lo = lambda.get(i + 1).copied().unwrap_or(0);
    for v in lo..=lambda[i] {
        mu[i] = v;
        fill_interlaced(lambda, i + 1, mu, f);
    }
}

/// Metropolis chain on sequences `λ⁰ ⪯ ⋯ ⪯ λᴹ` for the truncated Pfaffian
/// Schur measure: uniform single-site proposals `λʲ_i ± 1`.
#[derive(Clone, Debug)]
pub struct SchurChain {
    params: SchurParams,
    seq: Vec<Vec<u64>>,
    log_w: f64,
}

impl SchurChain {
    /// Starts from the empty sequence.
    pub fn new(params: SchurParams) -> Result<Self> {
        params.validate()?;
        let seq = vec![vec![0; params.k_max]; params.m + 1];
        let log_w = params.log_weight(&seq).ok_or_else(|| Error::InvalidInput("empty sequence outside the support".into()))?;
        Ok(Self { params, seq, log_w })
    }

    /// Proposes `λʲ_i += ζ` and accepts when `w'/w ≥ U`.  Only the factors
    /// touched by the move are re-evaluated.
    pub fn step(&mut self, rng: &mut impl Rng) -> bool {
        let p = self.params;
        let j = rng.random_range(0..=p.m);
        let i = rng.random_range(0..p.k_max);
        let up = rng.random::<bool>();
        let u = rng.random::<f64>();
        let cur = self.seq[j][i];
        if !up && cur == 0 {
            return false;
        }
        let v = if up { cur + 1 } else { cur - 1 };
        let Some(delta) = self.local_log_ratio(j, i, v) else {
            return false;
        };
        if delta.exp() >= u {
            self.seq[j][i] = v;
            self.log_w += delta;
            true
        } else {
            false
        }
    }

    /// `ln(w'/w)` for `λʲ_i → v`, or `None` if the move leaves the support.
    fn local_log_ratio(&self, j: usize, i: usize, v: u64) -> Option<f64> {
        let p = &self.params;
        let row = &self.seq[j];
        let k = p.k_max;
        // the row stays a partition
        if (i > 0 && v > row[i - 1]) || (i + 1 < k && v < row[i + 1]) {
            return None;
        }
        // λ^{j−1} ⪯ λʲ
        if j > 0 {
            let mu = &self.seq[j - 1];
            if v < mu[i] || (i > 0 && mu[i - 1] < v) {
                return None;
            }
        }
        // λʲ ⪯ λ^{j+1}
        if j < p.m {
            let lam = &self.seq[j + 1];
            if lam[i] < v || (i + 1 < k && v < lam[i + 1]) {
                return None;
            }
        }
        let zeta = v as f64 - row[i] as f64;
        let mut delta = 0.0;
        if j == 0 {
            let sign = if i.is_multiple_of(2) { 1.0 } else { -1.0 };
            delta += sign * zeta * p.c.ln() - zeta * p.q.ln();
        }
        if j == p.m {
            if i >= p.n && v > 0 {
                return None;
            }
            let total: u64 = row.iter().sum::<u64>() - row[i] + v;
            if total > p.depth_cutoff {
                return None;
            }
            let mut moved = row.clone();
            moved[i] = v;
            delta += 2.0 * zeta * p.q.ln() + log_schur_dimension(&moved, p.n) - log_schur_dimension(row, p.n);
        }
        Some(delta)
    }

    /// The current sequence as partitions.
    pub fn partitions(&self) -> Vec<Partition> {
        self.seq.iter().map(|r| Partition::new(r.clone()).expect("chain keeps rows decreasing")).collect()
    }

    /// Row values `λʲ_i` (0-based `i`, `k_max` entries per `j`).
    pub fn rows(&self) -> &[Vec<u64>] {
        &self.seq
    }

    /// Checks `λ^{j−1} ⪯ λʲ` for all `j`.
    pub fn check(&self) -> Result<()> {
        match self.params.log_weight(&self.seq) {
            Some(_) => Ok(()),
            None => Err(Error::Consistency("Schur chain left its support".into())),
        }
    }
}

/// Runs the Schur chain for `n_steps` and returns `(λ⁰, …, λᴹ)`.
pub fn sample_pfaffian_schur_glauber(params: SchurParams, n_steps: u64, seed: u64) -> Result<Vec<Partition>> {
    let mut chain = SchurChain::new(params)?;
    let mut rng = rng_from_seed(seed);
    for _ in 0..n_steps {
        chain.step(&mut rng);
    }
    chain.check()?;
    Ok(chain.partitions())
}

/// Burn-in and thinning for Schur chains, both in sweeps (one sweep is one
/// proposal per tracked row entry, `(M+1)·k_max` steps).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainSchedule {
    pub burn_in_sweeps: u64,
    pub thin_sweeps: u64,
}

impl ChainSchedule {
    /// Burn-in of `100 ×` the state dimension in sweeps, thinning of one
    /// sweep.
    pub fn default_for(params: &SchurParams) -> Self {
        Self { burn_in_sweeps: 100 * ((params.m + 1) * params.k_max) as u64, thin_sweeps: 1 }
    }
}

/// `n_samples` thinned states of one Schur chain after burn-in.
pub fn schur_chain_samples(params: SchurParams, schedule: ChainSchedule, n_samples: usize, seed: u64) -> Result<Vec<Vec<Partition>>> {
    let mut chain = SchurChain::new(params)?;
    let mut rng = rng_from_seed(seed);
    let sweep = ((params.m + 1) * params.k_max) as u64;
    for _ in 0..schedule.burn_in_sweeps * sweep {
        chain.step(&mut rng);
    }
    let mut out = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        for _ in 0..schedule.thin_sweeps.max(1) * sweep {
            chain.step(&mut rng);
        }
        chain.check()?;
        out.push(chain.partitions());
    }
    Ok(out)
}

/// `k` reverse Brownian motions on a uniform grid of `[0, b]`, conditioned
/// (on the grid) to stay strictly ordered above the floor.
#[derive(Clone, Debug, PartialEq)]
pub struct BrownianEnsembleSample {
    pub grid: Vec<f64>,
    pub curves: Vec<Vec<f64>>,
    pub drifts: Vec<f64>,
    pub exit: Vec<f64>,
    /// Attempts used; `1/attempts` estimates the acceptance probability.
    pub attempts: u64,
}

impl BrownianEnsembleSample {
    /// Whether `curves[0] > curves[1] > … > floor` at every grid point.
    pub fn is_strictly_ordered(&self, floor: Option<&[f64]>) -> bool {
        (0..self.grid.len()).all(|r| {
            let ordered = self.curves.windows(2).all(|w| w[0][r] > w[1][r]);
            let above = floor.is_none_or(|g| self.curves.last().is_none_or(|c| c[r] > g[r]));
            ordered && above
        })
    }
}

/// One free reverse Brownian motion with `B(b) = y` and drift `μ` on the
/// grid `r·b/n`: `B(t) = y + β(b−t) + X·(b−t)` with `β` a standard Brownian
/// bridge on `[0, b]` and `X ~ N(μ, 1/b)`.
fn free_reverse_bm(b: f64, y: f64, mu: f64, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let ds = b / n as f64;
    // W on the grid s = 0, ds, …, b (s = b − t)
    let mut w = vec![0.0; n + 1];
    for r in 1..=n {
        let z: f64 = StandardNormal.sample(rng);
        w[r] = w[r - 1] + z * ds.sqrt();
    }
    let x = Normal::new(mu, (1.0 / b).sqrt()).expect("positive standard deviation").sample(rng);
    // value at grid index r (time t = r ds) uses s = b − t, index n − r
    (0..=n)
        .map(|r| {
            let k = n - r;
            let s = k as f64 * ds;
            let bridge = w[k] - s / b * w[n];
            y + bridge + x * s
        })
        .collect()
}

/// Rejection sampler for avoiding reverse Brownian motions on a grid of
/// `grid_size` intervals.  `floor`, when given, holds `g` at the
/// `grid_size + 1` grid points.
pub fn sample_avoiding_rbm(
    b: f64,
    y: &[f64],
    mu: &[f64],
    floor: Option<&[f64]>,
    grid_size: usize,
    seed: u64,
    max_attempts: u64,
) -> Result<BrownianEnsembleSample> {
    if !(b > 0.0 && b.is_finite()) || grid_size == 0 {
        return Err(Error::InvalidInput(format!("need b > 0 and a positive grid size (b = {b}, grid = {grid_size})")));
    }
    if y.is_empty() || y.len() != mu.len() {
        return Err(Error::InvalidInput(format!("{} exit values but {} drifts", y.len(), mu.len())));
    }
    if y.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::InvalidInput(format!("exit data {y:?} must be strictly decreasing")));
    }
    if let Some(g) = floor {
        if g.len() != grid_size + 1 {
            return Err(Error::InvalidInput(format!("floor has {} values, expected {}", g.len(), grid_size + 1)));
        }
        if g[grid_size] >= y[y.len() - 1] {
            return Err(Error::InvalidInput("floor must end strictly below the lowest exit value".into()));
        }
    }
    let mut rng = rng_from_seed(seed);
    let grid: Vec<f64> = (0..=grid_size).map(|r| r as f64 * b / grid_size as f64).collect();
    for attempt in 1..=max_attempts {
        let curves: Vec<Vec<f64>> = y.iter().zip(mu).map(|(&yi, &mi)| free_reverse_bm(b, yi, mi, grid_size, &mut rng)).collect();
        let sample = BrownianEnsembleSample { grid: grid.clone(), curves, drifts: mu.to_vec(), exit: y.to_vec(), attempts: attempt };
        if sample.is_strictly_ordered(floor) {
            return Ok(sample);
        }
    }
    Err(Error::RejectionBudget { attempts: max_attempts })
}

/// Rescales Schur samples at the times `times`:
/// `X_i = a_t(λ^{T_t}_i − i) + b_t` for `i = 1..=rows` (rows beyond the
/// stored parts use `λ_i = 0`).  Every value is checked to lie on `Λ_t(N)`.
pub fn rescale_samples(
    samples: &[Vec<Partition>],
    params: &ScalingParams,
    n: u64,
    times: &[f64],
    rows: usize,
) -> Result<Vec<Vec<SpaceTimePoint>>> {
    let specs: Vec<LatticeSpec> = times.iter().map(|&t| LatticeSpec::new(t, n, params)).collect::<Result<_>>()?;
    samples
        .iter()
        .map(|seq| {
            let mut pts = Vec::with_capacity(rows * specs.len());
            for spec in &specs {
                let j = usize::try_from(spec.big_t).map_err(|_| Error::InvalidInput("negative discrete time".into()))?;
                let lambda = seq.get(j).ok_or_else(|| {
                    Error::InvalidInput(format!("sample has {} partitions but T_t = {j} at t = {}", seq.len(), spec.t))
                })?;
                for i in 1..=rows {
                    let x = spec.point(lambda.part(i) as i64 - i as i64);
                    if !spec.contains(x) {
                        return Err(Error::Consistency(format!("rescaled value {x} is off the lattice at t = {}", spec.t)));
                    }
                    pts.push(SpaceTimePoint::new(spec.t, x));
                }
            }
            Ok(pts)
        })
        .collect()
}

/// Monte Carlo statistics of the counts `M(A)` in one window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowStats {
    pub mean: f64,
    pub mean_std_err: f64,
    /// `E[M(M−1)]`.
    pub factorial2: f64,
    pub factorial2_std_err: f64,
}

/// Per-window mean counts and second factorial moments with standard
/// errors (samples treated as independent).
pub fn empirical_onepoint(configs: &[Vec<SpaceTimePoint>], windows: &[Window]) -> Result<Vec<WindowStats>> {
    if configs.len() < 2 {
        return Err(Error::InvalidInput("need at least two configurations".into()));
    }
    let n = configs.len() as f64;
    Ok(windows
        .iter()
        .map(|w| {
            let counts: Vec<f64> = configs
                .iter()
                .map(|c| c.iter().filter(|p| p.t == w.t && p.x > w.lo && p.x <= w.hi).count() as f64)
                .collect();
            let f2: Vec<f64> = counts.iter().map(|m| m * (m - 1.0)).collect();
            let (mean, se) = mean_and_se(&counts, n);
            let (m2, se2) = mean_and_se(&f2, n);
            WindowStats { mean, mean_std_err: se, factorial2: m2, factorial2_std_err: se2 }
        })
        .collect())
}

fn mean_and_se(v: &[f64], n: f64) -> (f64, f64) {
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
