//! Acceptance criteria 1–12: one PASS/FAIL line each, with the measured
//! quantity, the pinned tolerance and the wall-clock time against its budget.
//!
//! The binary exits 0 after reporting, so a failing criterion is visible in
//! the output without hiding the rest of the suite.  Set
//! `HSA_ACCEPTANCE_STRICT=1` to exit 1 when any criterion fails.

use halfspace_airy::ensembles::*;
use halfspace_airy::fredholm::*;
use halfspace_airy::harness::{random_skew, run_experiment, Command, ExperimentConfig};
use halfspace_airy::kernels::*;
use halfspace_airy::skewlin::{determinant, pfaffian, pfaffian_bruteforce, KernelValue, SkewMatrix};
use halfspace_airy::{Result, C64};
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn opts() -> KernelOptions {
    KernelOptions::default()
}

fn skew_defect(a: &KernelValue, b: &KernelValue) -> f64 {
    a.sub(&b.neg_transpose()).max_norm()
}

fn dense(a: &SkewMatrix) -> DMatrix<C64> {
    DMatrix::from_fn(a.dim(), a.dim(), |i, j| a.get(i, j))
}

/// Pf² = det, brute force and congruence on 200 random complex skew matrices.
fn criterion_1() -> Result<Outcome> {
    let mut rng = rng_from_seed(1);
    let (mut e_det, mut e_brute, mut e_congr) = (0f64, 0f64, 0f64);
    for trial in 0..200 {
        // a skew matrix of odd dimension has Pfaffian zero by convention and
        // is rejected as input, so the even dimensions 2–8 are exercised
        let dim = 2 * (1 + trial % 4);
        let a = random_skew(dim, &mut rng)?;
        let pf = pfaffian(&a);
        let det = determinant(&dense(&a));
        e_det = e_det.max((pf * pf - det).norm() / det.norm().max(1.0));
        let brute = pfaffian_bruteforce(&a)?;
        e_brute = e_brute.max((pf - brute).norm() / brute.norm().max(1e-300));
        let r = DMatrix::from_fn(dim, dim, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let rar = &r * dense(&a) * r.transpose();
        let b = SkewMatrix::from_upper(dim, |i, j| rar[(i, j)])?;
        let rhs = determinant(&r) * pf;
        e_congr = e_congr.max((pfaffian(&b) - rhs).norm() / rhs.norm().max(1.0));
    }
    Ok(outcome(
        e_det <= 1e-9 && e_brute <= 1e-12 && e_congr <= 1e-8,
        format!("|Pf²−det| {e_det:.1e} (≤1e-9), brute {e_brute:.1e} (≤1e-12), congruence {e_congr:.1e} (≤1e-8)"),
    ))
}

/// Residue theorem, deformation invariance and node doubling.
fn criterion_2() -> Result<Outcome> {
    use halfspace_airy::contour::{integrate, make_circle, two_pi_i};
    let residue = (integrate(|z| 1.0 / z, &make_circle(1.0)?)? - two_pi_i()).norm();
    let o = opts();
    let (mut deform, mut doubling) = (0f64, 0f64);
    for varpi in [-1.0, 0.0, 1.0] {
        let p = ScalingParams::new(0.5, varpi)?;
        for (s, x, t, y) in [(0.4, 0.3, 0.9, -0.2), (0.2, 0.5, 0.7, -0.1), (1.0, -0.6, 1.0, 0.4)] {
            let base = limit_parts(s, x, t, y, &p, &o)?;
            let v = LimitVertices::saddle(s, x, t, y, &p);
            let shifted = LimitVertices {
                i11: (v.i11.0 + 0.4, v.i11.1 + 0.3),
                i12: (v.i12.0 + 0.5, v.i12.1 + 0.2),
                i22: (v.i22.0 - 0.4, v.i22.1 - 0.3),
            };
            let moved = limit_parts_with(s, x, t, y, &p, &o, &shifted)?;
            let refined = limit_parts(s, x, t, y, &p, &o.refined())?;
            for ((a, b), c) in base.as_array().iter().zip(moved.as_array()).zip(refined.as_array()) {
                deform = deform.max((a - b).norm());
                doubling = doubling.max((a - c).norm());
            }
        }
    }
    Ok(outcome(
        residue <= 1e-10 && deform <= 1e-8 && doubling <= 1e-8,
        format!("∮dz/z error {residue:.1e} (≤1e-10), deformation {deform:.1e} (≤1e-8), node doubling {doubling:.1e} (≤1e-8)"),
    ))
}

/// Block skew-symmetry of all five kernels at 100 random pairs each.
fn criterion_3() -> Result<Outcome> {
    let o = opts();
    let p = ScalingParams::new(0.5, 0.5)?;
    let gp = GeoParams::new(0.4, 1.1, 3)?;
    let n = 1000;
    let mut rng = rng_from_seed(3);
    let draws: Vec<[f64; 5]> = (0..100)
        .map(|_| {
            [
                rng.random_range(0.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(0.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-1.0..1.0),
            ]
        })
        .collect();
    let worst: Vec<[f64; 5]> = draws
        .par_iter()
        .enumerate()
        .map(|(k, &[s, x, t, y, varpi])| -> Result<[f64; 5]> {
            let cross = skew_defect(&kernel_cross(s, x, t, y, varpi, &o)?, &kernel_cross(t, y, s, x, varpi, &o)?);
            let limit = skew_defect(&kernel_limit(s, x, t, y, &p, &o)?, &kernel_limit(t, y, s, x, &p, &o)?);
            let (ls, lt) = (LatticeSpec::new(s, n, &p)?, LatticeSpec::new(t, n, &p)?);
            let (xn, yn) = (ls.nearest(x), lt.nearest(y));
            let pre = skew_defect(&kernel_pre_n(s, xn, t, yn, &p, n, &o)?, &kernel_pre_n(t, yn, s, xn, &p, n, &o)?);
            let (u, v) = ((k % 4) as u64, ((k / 4) % 4) as u64);
            let (i, j) = (x.round() as i64 * 2, y.round() as i64 * 2 + (k % 3) as i64);
            let geo = skew_defect(&kernel_geo(u, i, v, j, &gp, &o)?, &kernel_geo(v, j, u, i, &gp, &o)?);
            let kxy = kernel_airy_extended(s, x, t, y, &o)?;
            let kyx = kernel_airy_extended(t, y, s, x, &o)?;
            let zero = C64::new(0.0, 0.0);
            let a = KernelValue::new(zero, C64::new(kxy, 0.0), C64::new(-kyx, 0.0), zero);
            let b = KernelValue::new(zero, C64::new(kyx, 0.0), C64::new(-kxy, 0.0), zero);
            Ok([cross, limit, pre, geo, skew_defect(&a, &b)])
        })
        .collect::<Result<_>>()?;
    let sup: Vec<f64> = (0..5).map(|b| worst.iter().map(|w| w[b]).fold(0.0, f64::max)).collect();
    Ok(outcome(
        sup.iter().all(|&e| e <= 1e-8),
        format!(
            "max defect: cross {:.1e}, limit {:.1e}, pre-limit {:.1e}, geo {:.1e}, Airy {:.1e} (≤1e-8)",
            sup[0], sup[1], sup[2], sup[3], sup[4]
        ),
    ))
}

/// `K^geo` one-point function against enumeration of the Pfaffian–Schur law.
fn criterion_4() -> Result<Outcome> {
    let params = SchurParams { n: 2, m: 2, q: 0.1, c: 1.0, k_max: 2, depth_cutoff: 12 };
    let all = enumerate_schur(&params)?;
    let gp = GeoParams::new(0.1, 1.0, 2)?;
    let mut worst = 0f64;
    for (j, x) in [(0u64, -1i64), (1, -2), (1, 0), (1, 1), (2, -1)] {
        let exact: f64 = all
            .iter()
            .filter(|(seq, _)| (1..=8).any(|i| seq[j as usize].get(i - 1).copied().unwrap_or(0) as i64 - i as i64 == x))
            .map(|(_, p)| p)
            .sum();
        worst = worst.max((kernel_geo(j, x, j, x, &gp, &opts())?.k12.re - exact).abs());
    }
    Ok(outcome(worst <= 1e-6, format!("max |K12 − enumeration| {worst:.1e} (≤1e-6)")))
}

/// `|K^N − K^∞|` decreasing over `N ∈ {10³, 10⁴, 10⁵}`, block by block.
fn criterion_5() -> Result<Outcome> {
    let o = KernelOptions { diagonal: DiagonalConvention::UpperFormula, ..opts() };
    let points = [(0.5, 0.4, 1.0, -0.3), (1.0, -0.5, 1.0, 0.6), (0.3, 1.0, 0.8, 0.2), (1.2, 0.0, 0.6, -1.0), (0.7, -1.2, 0.7, -0.2)];
    let ns = [1_000u64, 10_000, 100_000];
    let mut lines = Vec::new();
    let mut pass = true;
    for varpi in [-1.0, 0.0, 1.0] {
        let p = ScalingParams::new(0.5, varpi)?;
        // errors[n][block] = sup over the points
        let errors: Vec<[f64; 3]> = ns
            .par_iter()
            .map(|&n| -> Result<[f64; 3]> {
                let mut e = [0f64; 3];
                for &(s, x, t, y) in &points {
                    let (ls, lt) = (LatticeSpec::new(s, n, &p)?, LatticeSpec::new(t, n, &p)?);
                    let (xn, yn) = (ls.nearest(x), lt.nearest(y));
                    let a = kernel_pre_n(s, xn, t, yn, &p, n, &o)?;
                    let b = kernel_limit(s, xn, t, yn, &p, &o)?;
                    e[0] = e[0].max((a.k11 - b.k11).norm());
                    e[1] = e[1].max((a.k12 - b.k12).norm());
                    e[2] = e[2].max((a.k22 - b.k22).norm());
                }
                Ok(e)
            })
            .collect::<Result<_>>()?;
        for block in 0..3 {
            let seq: Vec<f64> = errors.iter().map(|e| e[block]).collect();
            pass &= seq.windows(2).all(|w| w[1] < w[0]);
            lines.push(format!("ϖ={varpi} K{}: {:.1e}→{:.1e}→{:.1e}", ["11", "12", "22"][block], seq[0], seq[1], seq[2]));
        }
    }
    Ok(outcome(pass, lines.join("; ")))
}

/// The three large-time Airy limits at `t = 2` and `t = 4`.
fn criterion_6() -> Result<Outcome> {
    let o = opts();
    let points = [(0.0, 0.0), (0.5, -0.5), (-1.0, 0.3), (1.0, 0.8), (-0.5, -1.0)];
    let mut pass = true;
    let mut lines = Vec::new();
    for block in [AiryBlock::B11, AiryBlock::B12, AiryBlock::B22] {
        let sup = |t: f64| -> Result<f64> {
            let mut e = 0f64;
            for &(x, y) in &points {
                let (l, r) = airy_limit_scaled(t, x, y, block, 0.0, &o)?;
                e = e.max((l - r).norm());
            }
            Ok(e)
        };
        let (e2, e4) = (sup(2.0)?, sup(4.0)?);
        pass &= e4 <= 1e-2 && e4 < e2;
        lines.push(format!("{block:?}: t=2 {e2:.2e}, t=4 {e4:.2e}"));
    }
    Ok(outcome(pass, format!("{} (need t=4 ≤1e-2 and below t=2)", lines.join("; "))))
}

/// Gauge-transformed `K^∞` equals `K^cross` under the change of variables.
fn criterion_7() -> Result<Outcome> {
    let o = opts();
    let varpi = 0.7;
    let p = ScalingParams::new(0.5, varpi)?;
    let fq = p.f_q;
    let gauge = |s: f64, x: f64| (-(s * fq).powi(3) / 3.0 + (x + fq * fq * s * s) * fq * s).exp();
    let mut worst = 0f64;
    for (s, x, t, y) in [(0.3, 0.2, 1.1, -0.4), (1.4, -0.6, 0.5, 0.9), (0.8, 1.0, 0.8, -1.0), (0.5, -1.5, 1.5, 0.0), (1.0, 0.4, 0.2, 0.7)] {
        let k = kernel_limit(s, x, t, y, &p, &o)?;
        let c = kernel_cross(fq * s, x + fq * fq * s * s, fq * t, y + fq * fq * t * t, varpi, &o)?;
        let (gx, gy) = (gauge(s, x), gauge(t, y));
        let want = [k.k11 * gx * gy, k.k12 * gx / gy, k.k21 * gy / gx, k.k22 / (gx * gy)];
        for (w, g) in want.iter().zip([c.k11, c.k12, c.k21, c.k22]) {
            worst = worst.max((w - g).norm() / g.norm().max(1.0));
        }
    }
    Ok(outcome(worst <= 1e-6, format!("max deviation {worst:.1e} (≤1e-6)")))
}

/// Series vs discretized Fredholm Pfaffian, crossover at `t = 4` vs `F₂`,
/// and the determinant-as-Pfaffian embedding.
fn criterion_8() -> Result<Outcome> {
    let limit = LimitKernel { params: ScalingParams::new(0.5, 0.0)?, opts: opts() };
    let reference = ReferenceMeasure::Lebesgue { time: 1.0 };
    let mut agree = 0f64;
    for s in [-2.0, 0.0, 2.0] {
        let series = gap_series(s, &limit, &reference, DEFAULT_N_MAX, s.max(0.0) + DEFAULT_CUT)?;
        let disc = gap_discretized(s, &limit, &reference, DEFAULT_SERIES_GRID, s.max(0.0) + DEFAULT_CUT)?;
        agree = agree.max((series.value - disc.value).abs());
    }
    let airy_limit = AiryLimitKernel { t: 4.0, varpi: 0.0, opts: opts() };
    let lebesgue = ReferenceMeasure::Lebesgue { time: 0.0 };
    let mut crossover = Vec::new();
    for s in [-1.0f64, 0.0, 1.0] {
        let g = gap_discretized(s, &airy_limit, &lebesgue, F2_GRID, s.max(0.0) + F2_CUT)?;
        crossover.push((g.value - f2_airy_reference(s)?).abs());
    }
    let crossover_max = crossover.iter().copied().fold(0.0, f64::max);
    let embed = AiryEmbeddingKernel { opts: opts() };
    let mut embedding = 0f64;
    for s in [-1.0f64, 0.0, 1.0] {
        let g = gap_discretized(s, &embed, &lebesgue, F2_GRID, s.max(0.0) + F2_CUT)?;
        embedding = embedding.max((g.value - f2_airy_reference(s)?).abs());
    }
    Ok(outcome(
        agree <= 1e-3 && crossover_max <= 5e-3 && embedding <= 1e-6,
        format!(
            "series vs discretized {agree:.1e} (≤1e-3); crossover t=4 vs F2 at s=−1,0,1: {:.1e}, {:.1e}, {:.1e} (≤5e-3); \
             det-vs-Pf embedding {embedding:.1e} (≤1e-6)",
            crossover[0], crossover[1], crossover[2]
        ),
    ))
}

/// Glauber stationary law on the tiny case and rejection-vs-Glauber marginals.
fn criterion_9() -> Result<Outcome> {
    // one path on ⟦0,1⟧ ending at 0 above the floor −2: P(L(0) = −k) ∝ 2^{−k}
    let mut chain = GlauberChain::new(1, &[0], &[0.5], &Floor::Path(vec![-2, -2]))?;
    let mut rng = rng_from_seed(9);
    let steps = 100_000;
    let mut counts = [0f64; 3];
    for _ in 0..steps {
        chain.step(&mut rng);
        counts[(-chain.value(0, 0)) as usize] += 1.0 / steps as f64;
    }
    let exact = [4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0];
    let tv = 0.5 * counts.iter().zip(exact).map(|(c, e)| (c - e).abs()).sum::<f64>();

    let (y, q, horizon, n) = ([1i64, 0], [0.4, 0.4], 3, 20_000usize);
    let values = [y[0] - 2, y[0] - 1, y[0]];
    let mut rej = [0f64; 3];
    let mut rng = rng_from_seed(90);
    for _ in 0..n {
        let (e, _) = sample_interlacing_rejection_with(horizon, &y, &q, &Floor::NegInfinity, &mut rng, 100_000)?;
        if let Some(k) = values.iter().position(|&v| v == e.paths[0].at(0)) {
            rej[k] += 1.0;
        }
    }
    let mut chain = GlauberChain::new(horizon, &y, &q, &Floor::NegInfinity)?;
    let mut rng = rng_from_seed(91);
    for _ in 0..10_000 {
        chain.step(&mut rng);
    }
    let mut gl = [0f64; 3];
    for _ in 0..n {
        for _ in 0..100 {
            chain.step(&mut rng);
        }
        if let Some(k) = values.iter().position(|&v| v == chain.value(0, 0)) {
            gl[k] += 1.0;
        }
    }
    let mut z_max = 0f64;
    for k in 0..3 {
        let (a, b) = (rej[k] / n as f64, gl[k] / n as f64);
        let se = (a * (1.0 - a) / n as f64 + b * (1.0 - b) / n as f64).sqrt().max(1e-12);
        z_max = z_max.max((a - b).abs() / se);
    }
    Ok(outcome(tv <= 0.01 && z_max < 3.0, format!("tiny-case TV {tv:.1e} (≤0.01); marginal max |z| {z_max:.2} (<3)")))
}

/// Interlacing, ordering and avoidance invariants under fuzzing.
fn criterion_10() -> Result<Outcome> {
    let floor = Floor::Path(vec![-6, -6, -5, -5, -4, -3]);
    let mut chain = GlauberChain::new(5, &[2, 0, -1], &[0.3, 0.6, 0.8], &floor)?;
    let mut rng = rng_from_seed(10);
    let mut interlacing_ok = true;
    for _ in 0..100_000 {
        chain.step(&mut rng);
        interlacing_ok &= chain.check().is_ok();
    }
    // the coupled runner checks the ordering after every step
    let coupled_ok = run_glauber_coupled(
        4,
        (&[0, -1, -2], &Floor::NegInfinity),
        (&[1, 0, -1], &Floor::Path(vec![-8; 5])),
        &[0.5, 0.5, 0.5],
        100_000,
        10,
    )
    .is_ok();
    let rbm_floor: Vec<f64> = (0..=64).map(|r| -3.0 + 0.01 * r as f64).collect();
    let mut rbm_ok = true;
    for s in 0..200 {
        let smp = sample_avoiding_rbm(1.0, &[1.0, 0.0, -1.0], &[-0.5, 0.5, -0.5], Some(&rbm_floor), 64, s, 1_000_000)?;
        rbm_ok &= smp.is_strictly_ordered(Some(&rbm_floor));
    }
    Ok(outcome(
        interlacing_ok && coupled_ok && rbm_ok,
        format!("interlacing {interlacing_ok}, coupled ordering {coupled_ok}, RBM ordering {rbm_ok}"),
    ))
}

/// Window counts of rescaled Pfaffian–Schur samples vs `factorial_moment_predict`.
fn criterion_11() -> Result<Outcome> {
    let (q, n) = (0.3, 6u64);
    let scaling = ScalingParams::new(q, 0.0)?;
    let c = scaling.c_of_n(n);
    let params = SchurParams { n: 6, m: 6, q, c, k_max: 6, depth_cutoff: 200 };
    let schedule = ChainSchedule { burn_in_sweeps: 5000, thin_sweeps: 1000 };
    let times = [0.0, 1.0, 1.5];
    let (n_chains, per_chain) = (100u64, 100usize);
    let chains: Vec<Vec<Vec<SpaceTimePoint>>> = (0..n_chains)
        .into_par_iter()
        .map(|k| -> Result<_> {
            let samples = schur_chain_samples(params, schedule, per_chain, 7000 + k)?;
            rescale_samples(&samples, &scaling, n, &times, 6)
        })
        .collect::<Result<_>>()?;
    // (rescaled time, integer window (lo, hi]) on the lattice of that time
    let windows = [(0.0, 2, 5), (1.0, 1, 3), (1.0, 3, 6), (1.0, 6, 10), (1.5, 4, 8)];
    let kernel = GeoKernel { params: GeoParams::new(q, c, n)?, opts: opts() };
    let mut worst = 0f64;
    let mut lines = Vec::new();
    for (t, lo, hi) in windows {
        let spec = LatticeSpec::new(t, n, &scaling)?;
        let big_t = spec.big_t;
        let pred = factorial_moment_predict(
            &[Window::new(big_t as f64, lo as f64, hi as f64)],
            &[1],
            &kernel,
            &ReferenceMeasure::integers(big_t as u64),
        )?;
        let w = Window::new(t, spec.point(lo) + 0.5 * spec.a_t, spec.point(hi) + 0.5 * spec.a_t);
        let means: Vec<f64> = chains.iter().map(|c| empirical_onepoint(c, &[w]).map(|s| s[0].mean)).collect::<Result<_>>()?;
        let m = means.iter().sum::<f64>() / means.len() as f64;
        let var = means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (means.len() as f64 - 1.0);
        let se = (var / means.len() as f64).sqrt();
        let z = (m - pred) / se;
        worst = worst.max(z.abs());
        lines.push(format!("T={big_t} ({lo},{hi}]: MC {m:.4}±{se:.4} vs {pred:.4}"));
    }
    Ok(outcome(worst < 3.0, format!("{} samples; {}; max |z| {worst:.2} (<3)", n_chains as usize * per_chain, lines.join("; "))))
}

/// Identical configurations give byte-identical CSV output.
fn criterion_12() -> Result<Outcome> {
    let configs = [
        (Command::Sample, "ensemble = glauber\nT = 8\ny = 0, -1, -2\nq = 0.5\nn_steps = 20000\nn_samples = 6\nseed = 12\n"),
        (Command::Sample, "ensemble = schur\nN = 3\nM = 3\nq = 0.3\nn_samples = 4\nburn_in = 50\nseed = 3\n"),
        (Command::Sample, "ensemble = rbm\nb = 1\ny = 1, 0\ngrid = 32\nn_samples = 3\n"),
        (Command::KernelEval, "kernel = cross\ns = 0.2\nt = 0.9\nx = -1, 0, 1\ny = 0.5\nvarpi = 0.3\n"),
        (Command::GapProb, "kernel = airy\ns = -1, 0\n"),
    ];
    let mut identical = true;
    for (cmd, text) in configs {
        let a = run_experiment(&ExperimentConfig::parse(cmd, text)?)?.to_csv();
        let b = run_experiment(&ExperimentConfig::parse(cmd, text)?)?.to_csv();
        identical &= a == b;
    }
    Ok(outcome(identical, format!("{} configurations, byte-identical: {identical}", configs.len())))
}

type Criterion = (u32, fn() -> Result<Outcome>, Duration);

fn main() {
    let criteria: [Criterion; 12] = [
        (1, criterion_1, Duration::from_secs(5)),
        (2, criterion_2, Duration::from_secs(10)),
        (3, criterion_3, Duration::from_secs(60)),
        (4, criterion_4, Duration::from_secs(60)),
        (5, criterion_5, Duration::from_secs(300)),
        (6, criterion_6, Duration::from_secs(120)),
        (7, criterion_7, Duration::from_secs(60)),
        (8, criterion_8, Duration::from_secs(300)),
        (9, criterion_9, Duration::from_secs(120)),
        (10, criterion_10, Duration::from_secs(120)),
        (11, criterion_11, Duration::from_secs(600)),
        (12, criterion_12, Duration::from_secs(60)),
    ];
    let mut failed = Vec::new();
    for (id, run, budget) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && elapsed <= budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {id:>2}: {detail} [{:.1} s, budget {} s]", elapsed.as_secs_f64(), budget.as_secs());
        if !pass {
            failed.push(id);
        }
    }
    println!("acceptance: {} of 12 criteria pass; failing: {failed:?}", 12 - failed.len());
    let strict = std::env::var("HSA_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && !failed.is_empty() {
        std::process::exit(1);
    }
}
