use rbl_core::lavaurs::*;
use std::sync::OnceLock;

fn model() -> &'static LavaursModel {
    static M: OnceLock<LavaursModel> = OnceLock::new();
    M.get_or_init(|| LavaursModel::build().unwrap())
}

fn params() -> &'static SigmaParams {
    static P: OnceLock<SigmaParams> = OnceLock::new();
    P.get_or_init(|| find_sigma_params(model()).unwrap())
}

/// `φ₋(0)` from the first-order Abel function `-1/(Au) + κ ln u` with a quadratic fit in `u`
/// over three orbit lengths, iterating `F` in the original coordinate.
fn attracting_oracle(m: &LavaursModel) -> f64 {
    let h = |u: f64| -1.0 / (m.cap_a * u) + m.kappa * u.ln();
    let mut z = 0.0;
    let mut samples = Vec::new();
    let mut n = 0;
    for target in [150, 300, 600] {
        while n < target {
            z = m.big_f(z);
            n += 1;
        }
        let u = z - m.x0;
        samples.push((u, h(u) - n as f64));
    }
    let [(u1, v1), (u2, v2), (u3, v3)] = [samples[0], samples[1], samples[2]];
    // Lagrange extrapolation to u = 0
    v1 * u2 * u3 / ((u1 - u2) * (u1 - u3)) + v2 * u1 * u3 / ((u2 - u1) * (u2 - u3)) + v3 * u1 * u2 / ((u3 - u1) * (u3 - u2))
}

#[test]
fn calibration_constant_matches_oracle() {
    let m = model();
    let x = attracting_oracle(m);
    assert!((x - m.x_cal).abs() < 1e-6, "{x} vs {}", m.x_cal);
}

#[test]
fn fatou_minus_maps_fundamental_interval() {
    let m = model();
    let lo = m.fatou_minus(0.0).unwrap();
    let hi = m.fatou_minus(m.f0).unwrap();
    assert!((lo - m.x_cal).abs() < 1e-12);
    assert!((hi - m.x_cal - 1.0).abs() < 1e-6);
    let mut prev = lo;
    for k in 1..=50 {
        let x = m.f0 * k as f64 / 50.0;
        let v = m.fatou_minus(x).unwrap();
        assert!(v > prev, "orientation reversing on I-");
        prev = v;
    }
}

#[test]
fn sigma0_bisection_agrees_with_fatou_coordinates() {
    let m = model();
    let p = params();
    let closed = m.fatou_plus(m.c_m1).unwrap() - m.x_cal - 1.0;
    assert!((p.sigma0 - closed).abs() < 1e-9, "{} vs {closed}", p.sigma0);
    assert!((m.lavaurs_g(p.sigma0, m.f0).unwrap() - m.c_m1).abs() < 1e-8);
    assert!(p.sigma0 < p.sigma_ch && p.sigma_ch < 0.0);
}

#[test]
fn chebyshev_parameter() {
    let m = model();
    let p = params();
    assert!(p.chebyshev_residual < 1e-8);
    assert!(p.beta_ch_derivative.abs() > 1.0);
    let sl = m.slice(p.sigma_ch).unwrap();
    assert!((sl.g(0.0).unwrap() + p.beta_ch).abs() < 1e-9);
    assert!(p.q_ch < p.beta_ch && p.beta_ch < 0.0);
}

#[test]
fn slice_family_on_sigma_samples() {
    let m = model();
    let p = params();
    let mut prev_g0 = f64::INFINITY;
    let mut prev_q = f64::NEG_INFINITY;
    for k in 0..20 {
        // σ from σ0 towards 0
        let sigma = p.sigma0 * (1.0 - 1e-9) * (1.0 - k as f64 / 19.0);
        let sl = m.slice(sigma).unwrap();
        let q = sl.q;
        // increasing on [q, 0] and even
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=40 {
            let x = q * (1.0 - i as f64 / 40.0);
            let g = sl.g(x).unwrap();
            assert!(g > prev, "σ = {sigma}: not increasing at {x}");
            prev = g;
            assert!((g - sl.g(-x).unwrap()).abs() < 1e-10);
        }
        // the left end lands on c1
        assert!((sl.g(q).unwrap() - m.c1).abs() < 1e-6);
        assert!(m.c1 < q && q < 0.0);
        // G(0) decreases as σ increases; g_σ moves left as σ increases, so q_σ moves right
        let g0 = sl.g(0.0).unwrap();
        assert!(g0 < prev_g0, "σ = {sigma}");
        prev_g0 = g0;
        assert!(q > prev_q);
        prev_q = q;
        // unique fixed point in (q, 0), repelling
        let beta = sl.beta().unwrap();
        let crossings = (0..400)
            .filter(|&i| {
                let x0 = q + (0.0 - q) * i as f64 / 400.0;
                let x1 = q + (0.0 - q) * (i + 1) as f64 / 400.0;
                let s0 = sl.g(x0).unwrap() - x0 < 0.0;
                let s1 = sl.g(x1).unwrap() - x1 < 0.0;
                s0 != s1
            })
            .count();
        assert!(crossings <= 1, "σ = {sigma}: {crossings} sign changes");
        assert!(q < beta && beta < 0.0);
        assert!(sl.dg(beta).unwrap().abs() > 1.0);
    }
    // endpoint phases
    assert!(m.slice(0.0).is_ok_and(|s| s.g(0.0).unwrap().abs() < 1e-6));
    let s0 = m.slice(p.sigma0 * (1.0 - 1e-9)).unwrap();
    assert!((s0.g(0.0).unwrap() + m.c_m2).abs() < 1e-5);
    assert!((s0.q - m.f0).abs() < 1e-8);
}

#[test]
fn lavaurs_map_monotone() {
    let m = model();
    let p = params();
    for sigma in [p.sigma0, p.sigma0 / 2.0, 0.0] {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..200 {
            let x = m.f0 * (1.0 - i as f64 / 199.0);
            let g = m.lavaurs_g(sigma, x).unwrap();
            assert!(g > prev);
            prev = g;
        }
    }
}

#[test]
fn sigma_star_is_hyperbolic() {
    let m = model();
    let s = default_sigma_star(params());
    let c = check_no_attracting(m, s).unwrap();
    assert!(c.invariant && c.all_repelling, "{c:?}");
}

#[test]
fn large_n_sequence_has_definite_intervals() {
    let m = model();
    let s = default_sigma_star(params());
    let mut prev_a = f64::INFINITY;
    for n in [600, 800] {
        let r = approximate_parameter(m, s, n).unwrap();
        assert!(r.a_n > -1.75 && r.a_n < prev_a);
        prev_a = r.a_n;
        assert_eq!(r.q_n % 3, 2);
        assert!(r.diam_ratio() >= DIAM_FACTOR, "{r:?}");
        assert!(r.beta_n_derivative.unwrap().abs() > 1.0);
    }
}

#[test]
fn small_n_reports_failure() {
    let m = model();
    let s = default_sigma_star(params());
    assert!(approximate_parameter(m, s, 10).is_err());
}

#[test]
fn contrast_report_round_trip() {
    use rbl_core::bounds::BoundReport;
    use rbl_core::geom::Pt;
    use rbl_core::modulus::ModulusEstimate;
    let est = |v: f64| ModulusEstimate { value: v, grid_h: 1e-3, residual: 1e-11, refinements: vec![(2e-3, v), (1e-3, v)], lower_biased: true, converged: true };
    let sweep: Vec<BoundReport> = [(3u32, 0.034, 2.266), (2, 0.037, 2.5285)]
        .iter()
        .map(|&(q, v, b)| BoundReport::new(format!("q{q}"), 1, q, q as u64, 2, est(v), b, 256, 1e-3))
        .collect();
    let params = [(2, Pt::new(-1.0, 0.0)), (3, Pt::new(-0.122561166876654, 0.744861766619744))];
    let lav = ApproxResult { n: 600, a_n: -1.7499, q_n: 1802, deviation: 1e-4, sigma_star: -3.2e-4, beta_star: -8e-4, beta_n: Some(-8e-4), beta_n_derivative: Some(3.9), diam_l: 1.5e-3, diam_l_star: 1.7e-3 };
    let rep = contrast_report(&sweep, &[lav], &params).unwrap();
    assert!(rep.satellite_decay && rep.lavaurs_bounded_below);
    assert_eq!(rep.rows.iter().map(|r| r.index).collect::<Vec<_>>(), vec![2, 3, 600]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("contrast.csv");
    write_contrast_csv(&path, &rep).unwrap();
    let back = read_contrast_csv(&path).unwrap();
    assert_eq!(back.len(), 3);
    for (a, b) in back.iter().zip(&rep.rows) {
        assert_eq!((a.family.as_str(), a.index, a.period, a.holds), (b.family.as_str(), b.index, b.period, b.holds));
        assert!((a.value - b.value).abs() <= 1e-11 * b.value.abs());
    }
    assert!(contrast_report(&sweep[..1], &[], &params).is_err());
    assert!(contrast_report(&sweep, &[], &params[..1]).is_err());
}
