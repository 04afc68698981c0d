use halfspace_airy::ensembles::{empirical_onepoint, enumerate_schur, schur_chain_samples, ChainSchedule, SchurParams};
use halfspace_airy::fredholm::*;
use halfspace_airy::kernels::{kernel_airy_matrix, GeoParams, KernelOptions, ScalingParams};
use halfspace_airy::skewlin::determinant;
use halfspace_airy::{Error, C64};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// Tracy–Widom `F₂` from an mpmath Fredholm determinant of the Airy kernel.
const F2_TABLE: [(f64, f64); 7] = [
    (-4.0, 0.003_544_553_595_510),
    (-3.0, 0.080_319_552_939_334),
    (-2.0, 0.413_224_142_505_121),
    (-1.0, 0.807_214_241_999_284),
    (0.0, 0.969_372_828_355_262),
    (1.0, 0.997_505_438_149_389),
    (2.0, 0.999_887_553_698_310),
];

fn geo_exact(params: &SchurParams) -> Vec<(Vec<Vec<u64>>, f64)> {
    enumerate_schur(params).unwrap()
}

fn occupied(rows: &[u64], x: i64) -> bool {
    (1..=rows.len() + 4).any(|i| rows.get(i - 1).copied().unwrap_or(0) as i64 - i as i64 == x)
}

#[test]
fn f2_reference_matches_the_table() {
    for (s, want) in F2_TABLE {
        let got = f2_airy_reference(s).unwrap();
        assert!((got - want).abs() < 1e-9, "F2({s}) = {got}, expected {want}");
    }
}

#[test]
fn airy_pfaffian_embedding_equals_the_determinant() {
    let k = AiryEmbeddingKernel { opts: KernelOptions::default() };
    let lebesgue = ReferenceMeasure::Lebesgue { time: 0.0 };
    let pf = gap_discretized(0.0, &k, &lebesgue, F2_GRID, F2_CUT).unwrap();
    assert!((pf.value - F2_TABLE[4].1).abs() <= 1e-6, "{}", pf.value);
    // two-point check: Pf of the embedding equals det of the 2×2 kernel matrix
    let pts = [SpaceTimePoint::new(0.0, -0.4), SpaceTimePoint::new(0.0, 0.7)];
    let rho = correlation_rho(&pts, &k).unwrap();
    let m = kernel_airy_matrix(&[-0.4, 0.7], &[-0.4, 0.7], &KernelOptions::default()).unwrap();
    let det = determinant(&m.map(|v| C64::new(v, 0.0))).re;
    assert!((rho - det).abs() < 1e-12);
}

#[test]
fn series_and_discretized_pfaffian_agree_for_the_limit_kernel() {
    let k = LimitKernel { params: ScalingParams::new(0.5, 0.0).unwrap(), opts: KernelOptions::default() };
    let reference = ReferenceMeasure::Lebesgue { time: 1.0 };
    let series = gap_series(0.0, &k, &reference, DEFAULT_N_MAX, DEFAULT_CUT).unwrap();
    let disc = gap_discretized(0.0, &k, &reference, DEFAULT_SERIES_GRID, DEFAULT_CUT).unwrap();
    assert!((series.value - disc.value).abs() <= 1e-3, "{} vs {}", series.value, disc.value);
    assert!((-0.01..=1.01).contains(&series.value));
    assert_eq!(series.method, GapMethod::Series);
    let mags = &series.term_magnitudes;
    assert!(mags.windows(2).skip(3).all(|w| w[1] <= w[0]));
}

#[test]
fn lattice_gap_probability_matches_enumeration() {
    // P(no particle of λ¹ − (1, 2, …) in (a, ∞)) = P(λ¹₁ − 1 ≤ a)
    let params = SchurParams { n: 2, m: 2, q: 0.1, c: 1.0, k_max: 2, depth_cutoff: 12 };
    let exact = geo_exact(&params);
    let k = GeoKernel { params: GeoParams::new(0.1, 1.0, 2).unwrap(), opts: KernelOptions::default() };
    for a in [-1i64, 0, 1] {
        let want: f64 = exact.iter().filter(|(s, _)| s[1][0] as i64 - 1 <= a).map(|(_, p)| p).sum();
        let series = gap_series(a as f64, &k, &ReferenceMeasure::integers(1), 6, a as f64 + 12.0).unwrap();
        let disc = gap_discretized(a as f64, &k, &ReferenceMeasure::integers(1), 16, a as f64 + 12.0).unwrap();
        assert!((series.value - want).abs() < 1e-6, "a = {a}: {} vs {want}", series.value);
        assert!((disc.value - want).abs() < 1e-6, "a = {a}: {} vs {want}", disc.value);
    }
}

#[test]
fn factorial_moments_match_enumeration() {
    let params = SchurParams { n: 2, m: 2, q: 0.1, c: 1.5, k_max: 2, depth_cutoff: 12 };
    let exact = geo_exact(&params);
    let k = GeoKernel { params: GeoParams::new(0.1, 1.5, 2).unwrap(), opts: KernelOptions::default() };
    let count = |rows: &[u64], lo: i64, hi: i64| (lo + 1..=hi).filter(|&x| occupied(rows, x)).count() as f64;
    // one window, first and second factorial moments
    let w = Window::new(2.0, -3.0, 0.0);
    let m1: f64 = exact.iter().map(|(s, p)| p * count(&s[2], -3, 0)).sum();
    let m2: f64 = exact.iter().map(|(s, p)| p * count(&s[2], -3, 0) * (count(&s[2], -3, 0) - 1.0)).sum();
    let reference = ReferenceMeasure::integers(2);
    assert!((factorial_moment_predict(&[w], &[1], &k, &reference).unwrap() - m1).abs() < 1e-8);
    assert!((factorial_moment_predict(&[w], &[2], &k, &reference).unwrap() - m2).abs() < 1e-8);
    // two windows at different times
    let (wa, wb) = (Window::new(0.0, -2.0, 0.0), Window::new(2.0, -1.0, 1.0));
    let joint: f64 = exact.iter().map(|(s, p)| p * count(&s[0], -2, 0) * count(&s[2], -1, 1)).sum();
    let got = factorial_moment_predict(&[wa, wb], &[1, 1], &k, &reference).unwrap();
    assert!((got - joint).abs() < 1e-8, "{got} vs {joint}");
}

#[test]
fn correlation_functions_basic_properties() {
    let k = LimitKernel { params: ScalingParams::new(0.5, 0.0).unwrap(), opts: KernelOptions::default() };
    assert_eq!(correlation_rho(&[], &k).unwrap(), 1.0);
    let p = SpaceTimePoint::new(1.0, 0.0);
    assert!(matches!(correlation_rho(&[p, p], &k), Err(Error::InvalidInput(_))));
    let rho = |eps: f64| correlation_rho(&[p, SpaceTimePoint::new(1.0, eps)], &k).unwrap();
    let (r1, r2) = (rho(0.1), rho(0.01));
    assert!(r2.abs() < r1.abs() && r2.abs() < 1e-3, "{r1} {r2}");
    let g = GeoKernel { params: GeoParams::new(0.3, 1.0, 4).unwrap(), opts: KernelOptions::default() };
    let one = correlation_rho(&[SpaceTimePoint::new(2.0, 1.0)], &g).unwrap();
    assert!((0.0..=1.0).contains(&one));
}

#[test]
fn imaginary_residuals_are_rejected() {
    let k = FnKernel(|a: SpaceTimePoint, b: SpaceTimePoint| {
        let v = C64::new(0.0, 0.5 * (a.x - b.x).signum());
        halfspace_airy::skewlin::KernelValue::new(C64::new(0.0, 0.0), v + 1.0, -v - 1.0, C64::new(0.0, 0.0))
    });
    let pts = [SpaceTimePoint::new(0.0, 0.0), SpaceTimePoint::new(0.0, 1.0)];
    assert!(matches!(correlation_rho(&pts, &k), Err(Error::Consistency(_))));
}

#[test]
fn tail_envelope_decays() {
    let e: Vec<f64> = (1..12).map(|n| series_tail_envelope(0.5, 4.0, n)).collect();
    assert!(e.windows(2).skip(3).all(|w| w[1] < w[0]));
}

#[test]
fn schur_window_means_match_the_pfaffian_prediction() {
    // q = 0.3, N = M = 4, integer windows at several times
    let (q, c) = (0.3, 1.0);
    let params = SchurParams { n: 4, m: 4, q, c, k_max: 4, depth_cutoff: 120 };
    let schedule = ChainSchedule { burn_in_sweeps: 2000, thin_sweeps: 200 };
    let chains: Vec<Vec<Vec<SpaceTimePoint>>> = (0..40u64)
        .into_par_iter()
        .map(|seed| {
            schur_chain_samples(params, schedule, 50, 500 + seed)
                .unwrap()
                .into_iter()
                .map(|seq| {
                    seq.iter()
                        .enumerate()
                        .flat_map(|(j, l)| (1..=4).map(move |i| SpaceTimePoint::new(j as f64, l.part(i) as f64 - i as f64)))
                        .collect()
                })
                .collect()
        })
        .collect();
    let kernel = GeoKernel { params: GeoParams::new(q, c, 4).unwrap(), opts: KernelOptions::default() };
    let windows = [Window::new(0.0, -1.0, 1.0), Window::new(2.0, 0.0, 2.0), Window::new(4.0, 1.0, 4.0)];
    for w in windows {
        let pred = factorial_moment_predict(&[w], &[1], &kernel, &ReferenceMeasure::integers(w.t as u64)).unwrap();
        // batch means over chains
        let means: Vec<f64> = chains.iter().map(|c| empirical_onepoint(c, &[w]).unwrap()[0].mean).collect();
        let m = means.iter().sum::<f64>() / means.len() as f64;
        let var = means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (means.len() as f64 - 1.0);
        let se = (var / means.len() as f64).sqrt();
        assert!((m - pred).abs() <= 3.0 * se, "window {w:?}: MC {m} ± {se}, predicted {pred}");
    }
}

#[test]
fn determinantal_embedding_shape() {
    let k = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
    let m = determinantal_embedding(&k);
    assert_eq!(m.dim(), 2);
    assert_eq!(m.k12[(0, 1)], C64::new(2.0, 0.0));
    assert_eq!(m.k21[(0, 1)], C64::new(-3.0, 0.0));
    assert_eq!(m.k11[(0, 1)], C64::new(0.0, 0.0));
}
