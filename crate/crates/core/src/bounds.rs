//! Explicit modulus bounds for root annuli of satellite polynomial-like restrictions and
//! their numerical verification on constructed annuli.
//!
//! Constructed annuli only bound the supremum from below: a measured value above a bound is a
//! pipeline bug, a value below it is consistency.

use crate::cache::{self, Cache};
use crate::dynamics::{self, index::PointIndex, PLRestriction, RotationNumber};
use crate::error::{domain, Error, Result};
use crate::extremal::{self, Alpha, MarkedPointSet};
use crate::fmt::ser12;
use crate::geom::{self, PolygonTester, Pt};
use crate::modulus::{compute_modulus, AnnularDomain, Inner, ModulusEstimate};
use crate::svg::{Chart, Series};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

pub const LOWER_BIAS_NOTE: &str =
    "measured moduli come from constructed annuli and are lower-biased; a violation indicates a pipeline bug, a pass is consistency";

/// `d* π / ln(4(s+1))`.
pub fn main_bound(s: u64, d_star: u64) -> Result<f64> {
    if s < 2 || d_star < 1 {
        return domain(format!("main_bound needs s >= 2 and d* >= 1, got s = {s}, d* = {d_star}"));
    }
    Ok(d_star as f64 * PI / (4.0 * (s as f64 + 1.0)).ln())
}

/// `(d*)² π / ln(4(s+1))`.
pub fn pc1_bound(s: u64, d_star: u64) -> Result<f64> {
    Ok(d_star as f64 * main_bound(s, d_star)?)
}

/// Same as [`pc1_bound`] for real `s`, used for identity checks far beyond integer range.
pub fn pc1_bound_real(s: f64, d_star: f64) -> Result<f64> {
    if !(s >= 2.0) || !(d_star >= 1.0) {
        return domain("pc1_bound needs s >= 2 and d* >= 1");
    }
    Ok(d_star * d_star * PI / (4.0 * (s + 1.0)).ln())
}

/// Degree cap of a restriction: `2^(d-1)` for polynomials, `2^(2d-2)` for rational maps.
pub fn max_pl_degree(d: u32, polynomial: bool) -> Result<u64> {
    if !(2..=32).contains(&d) {
        return domain(format!("max_pl_degree needs 2 <= d <= 32, got {d}"));
    }
    Ok(if polynomial { 1u64 << (d - 1) } else { 1u64 << (2 * d - 2) })
}

/// The marked set `{α, z_1, …, z_s, w}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SatelliteMarking {
    pub alpha: Pt,
    pub reps: Vec<Pt>,
    pub w: Pt,
}

impl SatelliteMarking {
    pub fn new(alpha: Pt, reps: Vec<Pt>, w: Pt) -> Result<Self> {
        if reps.len() < 2 {
            return domain("a satellite marking needs s >= 2 representatives");
        }
        let m = SatelliteMarking { alpha, reps, w };
        m.marked_set()?;
        Ok(m)
    }

    /// Representatives are the critical cycle points `f^i(0)`, one per small Julia set.
    pub fn from_restriction(r: &PLRestriction, w: Pt) -> Result<Self> {
        let reps = (0..r.q).map(|i| dynamics::iterate(r.c, Pt::new(0.0, 0.0), i)).collect();
        Self::new(r.alpha, reps, w)
    }

    pub fn s(&self) -> usize {
        self.reps.len()
    }

    pub fn t(&self) -> usize {
        self.reps.len() + 1
    }

    /// Non-α points `z_1, …, z_s, w`.
    pub fn points(&self) -> Vec<Pt> {
        let mut p = self.reps.clone();
        p.push(self.w);
        p
    }

    pub fn marked_set(&self) -> Result<MarkedPointSet> {
        MarkedPointSet::new(Alpha::Finite(self.alpha), self.points(), Some(self.w))
    }

    /// Indices into `points()` of the closest pair after sending α to infinity.
    pub fn closest_pair(&self) -> Result<(usize, usize)> {
        let n = self.marked_set()?.normalized()?;
        let (i, j, _) = extremal::closest_pair(&n.satellites)?;
        Ok((i, j))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub case_id: String,
    pub p: u32,
    pub q: u32,
    pub s: u64,
    pub d_star: u64,
    pub measured: ModulusEstimate,
    pub bound: f64,
    pub margin: f64,
    pub passed: bool,
    pub grid: usize,
    pub eps_fat: f64,
    pub note: String,
}

impl BoundReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(case_id: String, p: u32, q: u32, s: u64, d_star: u64, measured: ModulusEstimate, bound: f64, grid: usize, eps_fat: f64) -> Self {
        let v = measured.value;
        BoundReport {
            case_id,
            p,
            q,
            s,
            d_star,
            bound,
            margin: bound - v,
            passed: v > 0.0 && v < bound,
            measured,
            grid,
            eps_fat,
            note: LOWER_BIAS_NOTE.into(),
        }
    }
}

fn in_inner(d: &AnnularDomain, x: Pt) -> bool {
    match &d.inner {
        Inner::Polygon(p) => geom::point_in_polygon(p, x),
        Inner::Cloud { points, fat } => PointIndex::auto(points).nearest_within(x, *fat).is_some(),
        Inner::Slit(s) => {
            let (lo, hi) = geom::bbox(s);
            geom::dist_point_polyline(s, false, x) <= 1e-12 * (hi - lo).norm().max(1.0)
        }
    }
}

fn in_outer(d: &AnnularDomain, tester: &PolygonTester, x: Pt) -> bool {
    if !tester.contains(x) {
        return true;
    }
    let (lo, hi) = d.bbox();
    let tol = 1e-12 * (hi - lo).norm();
    d.outer_slits.iter().any(|s| geom::dist_point_polyline(s, false, x) <= tol)
}

/// Index into `points()` of the point the annulus isolates together with α.
fn isolated_point(m: &SatelliteMarking, d: &AnnularDomain) -> Result<usize> {
    let tester = PolygonTester::new(&d.outer);
    let side = |x: Pt| -> Result<bool> {
        match (in_inner(d, x), in_outer(d, &tester, x)) {
            (true, false) => Ok(true),
            (false, true) => Ok(false),
            _ => Err(Error::Topology(format!("marked point {x} lies in the annulus"))),
        }
    };
    let a = side(m.alpha)?;
    let pts = m.points();
    let mut with_alpha = Vec::new();
    for (k, z) in pts.iter().enumerate() {
        if side(*z)? == a {
            with_alpha.push(k);
        }
    }
    match with_alpha.as_slice() {
        [k] => Ok(*k),
        _ => Err(Error::Topology(format!(
            "annulus does not separate α and one marked point from the rest ({} points on α's side)",
            with_alpha.len()
        ))),
    }
}

/// Measures an annulus separating `{α, z}` from the other marked points, for `z` in the closest
/// pair of the normalized chart, and compares it with the static bound `π/ln(4t)`.
pub fn verify_static(m: &SatelliteMarking, annulus: &AnnularDomain, n: usize) -> Result<BoundReport> {
    let k = isolated_point(m, annulus)?;
    let (i, j) = m.closest_pair()?;
    if k != i && k != j {
        return Err(Error::Precondition("the isolated point is not in the closest pair of the normalized chart".into()));
    }
    let t = m.t() as u64;
    let bound = extremal::static_bound(t)?;
    let measured = compute_modulus(annulus, n)?;
    let eps = match annulus.inner {
        Inner::Cloud { fat, .. } => fat,
        _ => 0.0,
    };
    Ok(BoundReport::new(format!("static_t{t}"), 0, 0, m.s() as u64, 1, measured, bound, n, eps))
}

/// Largest round annulus in the chart `ζ = 1/(z - α)` separating `{∞, ζ_k}` from the other points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundProbe {
    /// Index into `points()` of the isolated point.
    pub k: usize,
    pub center: Pt,
    pub r_in: f64,
    pub r_out: f64,
    pub modulus: f64,
}

fn round_ratio(zeta: &[Pt], k: usize, c: Pt) -> f64 {
    let r_in = zeta.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, z)| (z - c).norm()).fold(0.0, f64::max);
    ((zeta[k] - c).norm() / r_in).ln()
}

pub fn round_probe(m: &SatelliteMarking, k: usize) -> Result<RoundProbe> {
    let zeta: Vec<Pt> = m.points().iter().map(|z| 1.0 / (z - m.alpha)).collect();
    if k >= zeta.len() {
        return domain("probe index out of range");
    }
    let (lo, hi) = geom::bbox(&zeta);
    let ext = (hi - lo).norm().max(1e-300);
    let mid = 0.5 * (lo + hi);
    let mut best = (f64::NEG_INFINITY, mid);
    let g = 40;
    for a in 0..=g {
        for b in 0..=g {
            let c = mid + Pt::new((a as f64 / g as f64 - 0.5) * 4.0 * ext, (b as f64 / g as f64 - 0.5) * 4.0 * ext);
            let v = round_ratio(&zeta, k, c);
            if v > best.0 {
                best = (v, c);
            }
        }
    }
    // compass search from the best grid point
    let mut step = 4.0 * ext / g as f64;
    while step > 1e-12 * ext {
        let mut moved = false;
        for d in [Pt::new(1.0, 0.0), Pt::new(-1.0, 0.0), Pt::new(0.0, 1.0), Pt::new(0.0, -1.0)] {
            let c = best.1 + d * step;
            let v = round_ratio(&zeta, k, c);
            if v > best.0 {
                best = (v, c);
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    let c = best.1;
    let r_out = (zeta[k] - c).norm();
    let r_in = r_out * (-best.0).exp();
    Ok(RoundProbe { k, center: c, r_in, r_out, modulus: (best.0 / (2.0 * PI)).max(0.0) })
}

/// Round probes around both members of the closest pair; returns the larger probe and the
/// static bound.
pub fn verify_static_round(m: &SatelliteMarking) -> Result<(RoundProbe, f64)> {
    let (i, j) = m.closest_pair()?;
    let a = round_probe(m, i)?;
    let b = round_probe(m, j)?;
    let bound = extremal::static_bound(m.t() as u64)?;
    Ok((if a.modulus >= b.modulus { a } else { b }, bound))
}

/// Root-annulus modulus of a restriction against the main bound with `s` and `d*` of the restriction.
pub fn verify_main(r: &PLRestriction, eps_fat: f64, n: usize) -> Result<BoundReport> {
    let annulus = dynamics::root_annulus(r, eps_fat)?;
    let measured = compute_modulus(&annulus, n)?;
    let bound = main_bound(r.s as u64, r.d_star as u64)?;
    let id = format!("c{:.6}_{:.6}_{}", r.c.re, r.c.im, r.rot);
    Ok(BoundReport::new(id, r.rot.p, r.rot.q, r.s as u64, r.d_star as u64, measured, bound, n, eps_fat))
}

#[derive(Clone, Debug, Serialize)]
struct CaseKey {
    c: [f64; 2],
    p: u32,
    q: u32,
    grid: usize,
    version: &'static str,
}

/// Builds the restriction at the satellite center of `rot` and verifies it, using `cache` when given.
pub fn satellite_case(rot: RotationNumber, n: usize, cache: Option<&Cache>) -> Result<BoundReport> {
    let c = dynamics::satellite_center(rot)?;
    // the restriction and ε_fat are deterministic in (c, rot, n)
    let key = cache::content_key(&CaseKey { c: [c.re, c.im], p: rot.p, q: rot.q, grid: n, version: env!("CARGO_PKG_VERSION") });
    if let Some(hit) = cache.and_then(|ch| ch.lookup::<BoundReport>(&key)) {
        log::info!("{rot}: cache hit");
        return Ok(hit);
    }
    let r = dynamics::auto_restriction(c, rot)?;
    let eps = r.auto_eps_fat(n);
    let report = verify_main(&r, eps, n)?;
    if let Some(ch) = cache {
        ch.store(&key, &report)?;
    }
    Ok(report)
}

#[derive(Clone, Debug, Default)]
pub struct Sweep {
    /// Sorted by q.
    pub reports: Vec<BoundReport>,
    pub skipped: Vec<(u32, u32)>,
    pub failures: Vec<(u32, u32, String)>,
    pub bounds_decreasing: bool,
}

impl Sweep {
    pub fn all_passed(&self) -> bool {
        self.failures.is_empty() && self.reports.iter().all(|r| r.passed) && self.bounds_decreasing
    }
}

/// Verifies the restrictions at the satellite centers of `num/q` for `q` in `dens`.
pub fn sweep_satellites(num: u32, dens: std::ops::RangeInclusive<u32>, n: usize, jobs: usize, cache: Option<&Cache>) -> Result<Sweep> {
    let mut sweep = Sweep { bounds_decreasing: true, ..Default::default() };
    let mut cases = Vec::new();
    for q in dens {
        match RotationNumber::new(num, q) {
            Ok(r) => cases.push(r),
            Err(e) => {
                log::warn!("skipping {num}/{q}: {e}");
                sweep.skipped.push((num, q));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| Error::Usage(e.to_string()))?;
    let results: Vec<(RotationNumber, Result<BoundReport>)> = pool.install(|| cases.par_iter().map(|r| (*r, satellite_case(*r, n, cache))).collect());
    for (rot, res) in results {
        match res {
            Ok(rep) => sweep.reports.push(rep),
            Err(e) => {
                log::error!("{rot} failed: {e}");
                sweep.failures.push((rot.p, rot.q, e.to_string()));
            }
        }
    }
    sweep.reports.sort_by_key(|r| r.q);
    sweep.bounds_decreasing = sweep.reports.windows(2).all(|w| w[1].bound < w[0].bound);
    Ok(sweep)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: u32,
    pub q: u32,
    pub s: u64,
    pub d_star: u64,
    #[serde(serialize_with = "ser12")]
    pub measured: f64,
    #[serde(serialize_with = "ser12")]
    pub bound: f64,
    #[serde(serialize_with = "ser12")]
    pub margin: f64,
    pub passed: bool,
    pub grid: usize,
}

pub fn sweep_rows(reports: &[BoundReport]) -> Vec<SweepRow> {
    reports
        .iter()
        .map(|r| SweepRow {
            p: r.p,
            q: r.q,
            s: r.s,
            d_star: r.d_star,
            measured: r.measured.value,
            bound: r.bound,
            margin: r.margin,
            passed: r.passed,
            grid: r.grid,
        })
        .collect()
}

pub fn write_sweep_csv(reports: &[BoundReport], path: &Path) -> Result<()> {
    cache::write_csv_atomic(path, &sweep_rows(reports))
}

pub fn sweep_chart(reports: &[BoundReport]) -> Chart {
    let pts = |f: &dyn Fn(&BoundReport) -> f64| reports.iter().map(|r| (r.q as f64, f(r))).collect();
    Chart {
        title: "Root-annulus modulus at satellite centers".into(),
        x_label: "q".into(),
        y_label: "modulus".into(),
        log_y: true,
        series: vec![
            Series { name: "measured".into(), points: pts(&|r| r.measured.value) },
            Series { name: "bound".into(), points: pts(&|r| r.bound) },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulus::{disk_annulus, Disk};

    #[test]
    fn formulas() {
        assert!((main_bound(2, 2).unwrap() - 2.5285397774261).abs() < 1e-8);
        assert!((main_bound(5, 2).unwrap() - 1.977054).abs() < 1e-6);
        assert!((pc1_bound(2, 2).unwrap() - 5.0570795548522).abs() < 1e-8);
        for s in 2..40 {
            assert_eq!(main_bound(s, 1).unwrap(), extremal::static_bound(s + 1).unwrap());
        }
        assert!(main_bound(1, 2).is_err() && main_bound(3, 0).is_err());
        assert_eq!(max_pl_degree(2, true).unwrap(), 2);
        assert_eq!(max_pl_degree(2, false).unwrap(), 4);
        assert_eq!(max_pl_degree(3, true).unwrap(), 4);
        let ratio = main_bound(8, 2).unwrap() / main_bound(2, 2).unwrap();
        assert!((ratio - 12f64.ln() / 36f64.ln()).abs() < 1e-14);
    }

    fn marking() -> SatelliteMarking {
        SatelliteMarking::new(Pt::new(0.0, 0.0), vec![Pt::new(0.1, 0.0), Pt::new(3.0, 0.0), Pt::new(0.0, 4.0)], Pt::new(-5.0, 1.0)).unwrap()
    }

    #[test]
    fn separation_checks() {
        let m = marking();
        // in the 1/z chart the closest pair is {1/(4i), 1/(-5+i)}
        assert_eq!(m.closest_pair().unwrap(), (2, 3));
        let a = disk_annulus(Disk::new(Pt::new(0.05, 0.0), 0.2), Disk::new(Pt::new(0.05, 0.0), 1.0)).unwrap();
        assert_eq!(isolated_point(&m, &a).unwrap(), 0);
        assert!(matches!(verify_static(&m, &a, 64), Err(Error::Precondition(_))));
        let bad = disk_annulus(Disk::new(Pt::new(0.0, 0.0), 10.0), Disk::new(Pt::new(0.0, 0.0), 20.0)).unwrap();
        assert!(matches!(verify_static(&m, &bad, 64), Err(Error::Topology(_))));
        let through = disk_annulus(Disk::new(Pt::new(0.0, 0.0), 2.0), Disk::new(Pt::new(0.0, 0.0), 3.5)).unwrap();
        assert!(matches!(verify_static(&m, &through, 64), Err(Error::Topology(_))));
    }

    #[test]
    fn static_check_with_engine() {
        let m = SatelliteMarking::new(Pt::new(0.0, 0.0), vec![Pt::new(3.0, 0.0), Pt::new(0.0, 3.2), Pt::new(-10.0, 0.0)], Pt::new(0.0, -12.0)).unwrap();
        assert_eq!(m.closest_pair().unwrap(), (2, 3));
        let a = disk_annulus(Disk::new(Pt::new(-5.0, 0.0), 5.5), Disk::new(Pt::new(-5.0, 0.0), 5.9)).unwrap();
        let rep = verify_static(&m, &a, 256).unwrap();
        let exact = (5.9f64 / 5.5).ln() / (2.0 * PI);
        assert!((rep.measured.value - exact).abs() < 0.01 * exact, "{} vs {exact}", rep.measured.value);
        assert!(rep.passed && rep.margin > 0.0);
        assert!((rep.bound - extremal::static_bound(4).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn round_probe_closed_form() {
        // chart points 0.5, 1, -1 and 10: the optimal center is 0 with ratio 10
        let alpha = Pt::new(0.3, 0.2);
        let inv = |w: f64| alpha + 1.0 / Pt::new(w, 0.0);
        let m = SatelliteMarking::new(alpha, vec![inv(0.5), inv(1.0), inv(-1.0)], inv(10.0)).unwrap();
        let p = round_probe(&m, 3).unwrap();
        assert!((p.modulus - 10f64.ln() / (2.0 * PI)).abs() < 1e-9);
        assert!(p.center.norm() < 1e-8);
    }
}
