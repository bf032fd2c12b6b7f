use proptest::prelude::*;
use rbl_core::bounds::{main_bound, pc1_bound};
use rbl_core::cache::{content_key, Cache};
use rbl_core::extremal::{self, pack_bound, static_bound};
use rbl_core::fmt::sig12;
use rbl_core::geom::Pt;
use rbl_core::hyperbolic::{annulus_modulus_interval, length_lower_bound};
use rbl_core::modulus::{compute_modulus, disk_annulus, mobius_normalize, Disk, Ext};
use rbl_core::specfun::{psi, psi_inv, tau, tau_inv, tau_log_excess, tau_lower};
use std::f64::consts::PI;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn tau_round_trip(ln_m in (0.01f64).ln()..(10f64).ln()) {
        let m = ln_m.exp();
        let e = tau(m).unwrap();
        prop_assert!((tau_inv(e).unwrap() - m).abs() < 1e-9 * m.max(1.0));
    }

    #[test]
    fn tau_above_lower_bound(ln_m in (0.01f64).ln()..(10f64).ln()) {
        let m = ln_m.exp();
        prop_assert!(tau_log_excess(m).unwrap() > 0.0);
        if m > 0.2 {
            prop_assert!(tau(m).unwrap() > tau_lower(m).unwrap());
        }
    }

    #[test]
    fn tau_increasing(a in 0.05f64..5.0, b in 0.05f64..5.0) {
        prop_assume!((a - b).abs() > 1e-6);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(tau(lo).unwrap() < tau(hi).unwrap());
    }

    #[test]
    fn psi_round_trip(ln_x in (0.01f64).ln()..(100f64).ln()) {
        let x = ln_x.exp();
        prop_assert!((psi(psi_inv(x).unwrap()).unwrap() - x).abs() < 1e-9 * x.max(1.0));
    }

    #[test]
    fn modulus_interval_ordered(ln_l in (0.01f64).ln()..(100f64).ln()) {
        let (lo, hi) = annulus_modulus_interval(ln_l.exp()).unwrap();
        prop_assert!(0.0 < lo && lo <= hi);
    }

    #[test]
    fn static_hinge(t in 3u64..200) {
        let m = static_bound(t).unwrap();
        prop_assert!((tau_lower(m).unwrap() - 8.0 / (t as f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bounds_monotone(s in 2u64..10_000, d in 1u64..6) {
        prop_assert!(main_bound(s + 1, d).unwrap() < main_bound(s, d).unwrap());
        prop_assert!(pc1_bound(s, d + 1).unwrap() > pc1_bound(s, d).unwrap());
        let l = length_lower_bound(s, d).unwrap();
        prop_assert!((psi_inv(l.length_lower).unwrap() - l.modulus_bound).abs() < 1e-9 * l.modulus_bound.max(1.0));
        prop_assert!(length_lower_bound(s + 1, d).unwrap().length_lower > l.length_lower);
    }

    #[test]
    fn packing_inequality(pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..40)) {
        let pts: Vec<Pt> = pts.into_iter().map(|(x, y)| Pt::new(x, y)).collect();
        if let Ok((bound, ok)) = pack_bound(&pts) {
            prop_assert!(ok, "gap {} vs bound {bound}", extremal::min_gap(&pts).unwrap());
        }
    }

    #[test]
    fn sig12_round_trip(x in prop::num::f64::NORMAL) {
        let back: f64 = sig12(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-11 * x.abs());
    }

    #[test]
    fn content_key_is_injective_on_grid(a in 1usize..5000, b in 1usize..5000) {
        prop_assume!(a != b);
        prop_assert_ne!(content_key(&("case", a)), content_key(&("case", b)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn mobius_invariance(r in 2.0f64..6.0, cx in -0.3f64..0.3, cy in -0.3f64..0.3) {
        let d = disk_annulus(Disk::new(Pt::new(cx, cy), 1.0), Disk::new(Pt::new(0.0, 0.0), r + 1.0)).unwrap();
        let base = compute_modulus(&d, 256).unwrap().value;
        // pole at (f1 - fi)/(f1 - f0), well outside the outer disk
        let frame = [Ext::Finite(Pt::new(cx, cy)), Ext::Finite(Pt::new(1.5, 0.0)), Ext::Finite(Pt::new(3.0 * (r + 1.0), 0.0))];
        let moved = mobius_normalize(&d, frame).unwrap();
        let v = compute_modulus(&moved, 256).unwrap().value;
        prop_assert!((v - base).abs() < 0.01 * base, "{v} vs {base}");
    }

    #[test]
    fn concentric_exact(ln_ratio in 0.5f64..4.0) {
        let d = disk_annulus(Disk::new(Pt::new(0.0, 0.0), 1.0), Disk::new(Pt::new(0.0, 0.0), ln_ratio.exp())).unwrap();
        let v = compute_modulus(&d, 256).unwrap().value;
        let exact = ln_ratio / (2.0 * PI);
        prop_assert!((v - exact).abs() < 0.01 * exact, "{v} vs {exact}");
        prop_assert!(v <= exact * (1.0 + 1e-3));
    }
}

#[test]
fn concurrent_stores_leave_one_whole_record() {
    let dir = tempfile::tempdir().unwrap();
    let cache = Cache::new(dir.path());
    let key = content_key(&"shared");
    std::thread::scope(|s| {
        for i in 0..16 {
            let cache = &cache;
            let key = &key;
            s.spawn(move || {
                let payload: Vec<f64> = vec![i as f64; 20_000];
                cache.store(key, &payload).unwrap();
            });
        }
    });
    let got: Vec<f64> = cache.lookup(&key).unwrap();
    assert_eq!(got.len(), 20_000);
    assert!(got.iter().all(|&v| v == got[0]));
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 1);
}

#[test]
fn corrupted_record_is_a_miss() {
    let dir = tempfile::tempdir().unwrap();
    let cache = Cache::new(dir.path());
    let key = content_key(&"x");
    cache.store(&key, &1.5f64).unwrap();
    std::fs::write(dir.path().join(format!("{key}.json")), b"{\"key\": \"trunc").unwrap();
    assert!(cache.lookup::<f64>(&key).is_none());
}
