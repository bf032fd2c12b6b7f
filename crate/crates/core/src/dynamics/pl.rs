//! Polynomial-like restrictions `f^q : U → V` around the critical small Julia set.

use super::index::PointIndex;
use super::neighborhood::Neighborhood;
use super::trace::{trace_closed, TraceParams};
use super::{alpha_fixed_point, iterate, iterate_d, zero_preimages, RotationNumber};
use crate::cache;
use crate::error::{domain, Error, Result};
use crate::geom::{self, PolygonTester, Pt};
use crate::modulus::raster::Grid;
use crate::modulus::{AnnularDomain, Inner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::path::{Path, PathBuf};

pub const DEFAULT_SAMPLES: usize = 20_000;
pub const DEFAULT_SEED: u64 = 0x5eed_1234;
/// Lattice steps across the coarse basin raster used to size `V`.
const COARSE_STEPS: f64 = 400.0;
const BASIN_ITER: usize = 2000;
/// Forward iterations along the backward chain checked for each sample.
const ORBIT_CHECK: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PLRestriction {
    pub c: Pt,
    pub rot: RotationNumber,
    pub q: u32,
    pub d_star: u32,
    pub alpha: Pt,
    pub multiplier: Pt,
    pub v: Neighborhood,
    /// Counterclockwise traced boundary of `U`.
    pub u_boundary: Vec<Pt>,
    /// Inverse-iteration samples of the small Julia set.
    pub k_samples: Vec<Pt>,
    /// Lattice points of the interior of `K*`, spacing `fill_spacing`.
    pub k_fill: Vec<Pt>,
    pub fill_spacing: f64,
    pub s: u32,
    pub r_base: u32,
    /// `min dist(∂U, ∂V)` measured through the defining function of `V`.
    pub nesting_gap: f64,
}

impl PLRestriction {
    pub fn file_name(&self) -> String {
        format!("pl_c{:.6}_{:.6}_q{}.json", self.c.re, self.c.im, self.q)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Writes `dir/file_name()` atomically and returns the path.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(self.file_name());
        cache::write_atomic(&path, self.to_json()?.as_bytes())?;
        Ok(path)
    }

    pub fn u_tester(&self) -> PolygonTester {
        PolygonTester::new(&self.u_boundary)
    }

    /// Fattening radius tied to the base engine grid: 2.5 cells at `n` cells across `U`.
    pub fn auto_eps_fat(&self, n: usize) -> f64 {
        let (lo, hi) = geom::bbox(&self.u_boundary);
        2.5 * Grid::square(lo, hi, n).h
    }

    /// Samples and fill of `K*` together.
    pub fn cloud(&self) -> Vec<Pt> {
        self.k_samples.iter().chain(&self.k_fill).copied().collect()
    }
}

/// Whether the `f^q`-orbit of `z` reaches the small disk around the superattracting point 0.
fn attracted(c: Pt, q: u32, z: Pt) -> bool {
    let mut w = z;
    for _ in 0..BASIN_ITER {
        if w.norm_sqr() < 1e-8 {
            return true;
        }
        w = iterate(c, w, q);
        if !(w.norm_sqr() < 4.0) {
            return false;
        }
    }
    false
}

pub struct BasinRaster {
    pub points: Vec<Pt>,
    pub spacing: f64,
    /// The fill reached the edge of the search box.
    pub touched_edge: bool,
}

/// Lattice points (spacing `h`, box `center ± half`) in the component of the `f^q`-basin
/// of 0 containing 0, found by 4-connected flood fill; `keep` restricts the fill.
pub fn basin_raster(c: Pt, q: u32, center: Pt, half: f64, h: f64, keep: Option<&dyn Fn(Pt) -> bool>) -> Result<BasinRaster> {
    let m = (half / h).ceil() as i64;
    let side = (2 * m + 1) as usize;
    if side * side > 60_000_000 {
        return domain("basin raster too fine");
    }
    let node = |i: i64, j: i64| center + Pt::new(i as f64 * h, j as f64 * h);
    let test = |z: Pt| attracted(c, q, z) && keep.map_or(true, |k| k(z));
    let mut seen = vec![false; side * side];
    let idx = |i: i64, j: i64| ((j + m) as usize) * side + (i + m) as usize;
    let start = (-center) / h;
    let (si, sj) = (start.re.round() as i64, start.im.round() as i64);
    if si.abs() > m || sj.abs() > m || !test(node(si, sj)) {
        return Err(Error::Sampling("lattice node nearest 0 is not attracted to 0".into()));
    }
    let mut queue = VecDeque::from([(si, sj)]);
    seen[idx(si, sj)] = true;
    let mut points = Vec::new();
    let mut touched = false;
    while let Some((i, j)) = queue.pop_front() {
        points.push(node(i, j));
        if i.abs() == m || j.abs() == m {
            touched = true;
        }
        for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let (a, b) = (i + di, j + dj);
            if a.abs() > m || b.abs() > m || seen[idx(a, b)] {
                continue;
            }
            seen[idx(a, b)] = true;
            if test(node(a, b)) {
                queue.push_back((a, b));
            }
        }
    }
    Ok(BasinRaster { points, spacing: h, touched_edge: touched })
}

/// Coarse raster of the immediate basin, with the search box grown until it contains it.
fn coarse_basin(c: Pt, q: u32, alpha: Pt) -> Result<BasinRaster> {
    let mut half = 1.5 * alpha.norm();
    for _ in 0..6 {
        let r = basin_raster(c, q, Pt::new(0.0, 0.0), half, half / COARSE_STEPS, None)?;
        if !r.touched_edge {
            return Ok(r);
        }
        half *= 1.5;
    }
    Err(Error::Sampling("basin of 0 does not fit in the search box".into()))
}

fn defining(c: Pt, q: u32, v: &Neighborhood) -> impl Fn(Pt) -> (f64, Pt) + '_ {
    move |z| {
        let (w, d) = iterate_d(c, z, q);
        let (s, g) = v.sdf(w);
        (s, d.conj() * g)
    }
}

struct Pullback {
    boundary: Vec<Pt>,
    d_star: i64,
    gap: f64,
}

/// Traces the component of `f^{-q}(∂V)` around 0, checks nesting and degree.
fn trace_pullback(c: Pt, q: u32, alpha: Pt, v: &Neighborhood, scale: f64) -> Result<Pullback> {
    let h = defining(c, q, v);
    if !(h(Pt::new(0.0, 0.0)).0 < 0.0) {
        return Err(Error::Precondition("V does not contain the critical point".into()));
    }
    // march away from α until leaving the pullback, then bisect
    let dir = -alpha / alpha.norm();
    let dt = 1e-3 * scale;
    let mut t = 0.0;
    while h(dir * (t + dt)).0 < 0.0 {
        t += dt;
        if t > 20.0 * scale {
            return Err(Error::Tracing("no boundary crossing along the start ray".into()));
        }
    }
    let (mut a, mut b) = (t, t + dt);
    for _ in 0..80 {
        let mid = 0.5 * (a + b);
        if h(dir * mid).0 < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let vdiam = v.diameter();
    let params = TraceParams {
        step: 2e-3 * scale,
        min_step: 1e-9 * scale,
        tol: 1e-12 * vdiam,
        max_points: 400_000,
        newton_steps: 4,
    };
    let cap = |z: Pt| 0.02 * vdiam / iterate_d(c, z, q).1.norm().max(1e-300);
    let boundary = trace_closed(&h, cap, dir * a, &params)?;
    let images: Vec<Pt> = boundary.iter().map(|z| iterate(c, *z, q)).collect();
    let d_star = geom::winding_number(&images, Pt::new(0.0, 0.0));
    let gap = boundary.iter().map(|z| -v.sdf(*z).0).fold(f64::INFINITY, f64::min);
    Ok(Pullback { boundary, d_star, gap })
}

fn check_pullback(p: &Pullback) -> Result<()> {
    if p.d_star != 2 {
        return Err(Error::Degree { expected: 2, found: p.d_star });
    }
    if !(p.gap > 0.0) {
        return Err(Error::DomainNotNested(format!("∂U reaches ∂V (gap {:.3e})", p.gap)));
    }
    if !geom::point_in_polygon(&p.boundary, Pt::new(0.0, 0.0)) {
        return Err(Error::Topology("traced curve does not surround the critical point".into()));
    }
    Ok(())
}

/// Builds the restriction for a prescribed `V`.
pub fn pullback_restriction(c: Pt, rot: RotationNumber, v: &Neighborhood) -> Result<PLRestriction> {
    let (alpha, multiplier) = alpha_fixed_point(c, rot)?;
    let scale = v.diameter() / 2.0;
    let pb = trace_pullback(c, rot.q, alpha, v, scale)?;
    check_pullback(&pb)?;
    assemble(c, rot, alpha, multiplier, v.clone(), pb)
}

/// Centroid and radius of the coarse basin together with α.
fn basin_disk(basin: &[Pt], alpha: Pt) -> (Vec<Pt>, Pt, f64) {
    let mut pts = basin.to_vec();
    pts.push(alpha);
    let cen = geom::centroid(&pts);
    let r = pts.iter().map(|p| (p - cen).norm()).fold(0.0, f64::max);
    (pts, cen, r)
}

const GROWTH: f64 = 1.1;
const MAX_GROWTH_STEPS: usize = 40;

/// Builds the restriction at a satellite parameter, choosing `V` automatically.
///
/// Two families are scanned: disks at the basin centroid with radius from 1.05 times the
/// basin radius, and rounded convex hulls of the basin with offset from 0.05 times the
/// radius, each grown by factors of 1.1. Growth stops at a degree error or at the first
/// failure after a success. Among the admissible candidates the one whose `∂U` keeps the
/// largest clearance from the basin is used.
pub fn auto_restriction(c: Pt, rot: RotationNumber) -> Result<PLRestriction> {
    let (alpha, multiplier) = alpha_fixed_point(c, rot)?;
    let basin = coarse_basin(c, rot.q, alpha)?;
    let (pts, cen, r) = basin_disk(&basin.points, alpha);
    let families: [Box<dyn Fn(f64) -> Neighborhood>; 2] = [
        Box::new(|k| Neighborhood::disk(cen, 1.05 * k * r)),
        Box::new(|k| Neighborhood::rounded_hull(&pts, 0.05 * k * r)),
    ];
    let mut last_err = None;
    let mut best: Option<(f64, Neighborhood, Pullback)> = None;
    for family in families {
        let mut k = 1.0;
        let mut found = false;
        for _ in 0..MAX_GROWTH_STEPS {
            let v = family(k);
            k *= GROWTH;
            let res = trace_pullback(c, rot.q, alpha, &v, v.diameter() / 2.0).and_then(|pb| check_pullback(&pb).map(|_| pb));
            match res {
                Ok(pb) => {
                    found = true;
                    let clearance = cloud_boundary_gap(&pb.boundary, &basin.points);
                    if best.as_ref().map_or(true, |b| clearance > b.0) {
                        best = Some((clearance, v, pb));
                    }
                }
                Err(e) => {
                    log::debug!("V rejected for {rot}: {e}");
                    let stop = found || matches!(e, Error::Degree { .. });
                    last_err = Some(e);
                    if stop {
                        break;
                    }
                }
            }
        }
    }
    match best {
        Some((clearance, v, pb)) => {
            log::debug!("V accepted for {rot} (clearance {clearance:.3e}): {v:?}");
            assemble(c, rot, alpha, multiplier, v, pb)
        }
        None => Err(last_err.unwrap_or_else(|| Error::Search("no admissible neighborhood".into()))),
    }
}

fn assemble(c: Pt, rot: RotationNumber, alpha: Pt, multiplier: Pt, v: Neighborhood, pb: Pullback) -> Result<PLRestriction> {
    let q = rot.q;
    let tester = PolygonTester::new(&pb.boundary);
    let k_samples = sample_small_julia(c, rot, &|z| tester.contains(z), DEFAULT_SAMPLES, DEFAULT_SEED)?;
    let (lo, hi) = geom::bbox(&pb.boundary);
    let half = 0.5 * (hi.re - lo.re).max(hi.im - lo.im);
    let center = 0.5 * (lo + hi);
    let h = 2.0 * half / COARSE_STEPS;
    let keep = |z: Pt| tester.contains(z);
    let fill = basin_raster(c, q, center, half, h, Some(&keep))?;
    Ok(PLRestriction {
        c,
        rot,
        q,
        d_star: pb.d_star as u32,
        alpha,
        multiplier,
        v,
        u_boundary: pb.boundary,
        k_samples,
        k_fill: fill.points,
        fill_spacing: h,
        s: q,
        r_base: 1,
        nesting_gap: pb.gap,
    })
}

/// All `2^q` preimages of `w` under `f^q`.
fn preimages(c: Pt, q: u32, w: Pt) -> Vec<Pt> {
    let mut level = vec![w];
    for _ in 0..q {
        let mut next = Vec::with_capacity(level.len() * 2);
        for z in level {
            let s = (z - c).sqrt();
            next.push(s);
            next.push(-s);
        }
        level = next;
    }
    level
}

/// Random backward orbit of `f^q` from α through preimages lying in `region`.
///
/// Returns `n_samples` points starting with α. A sample is kept when its link to the previous
/// chain point has residual below 1e-9 and `|f^{2q}(z)| < 4`; its forward orbit then shadows
/// the stored chain, which lies in `region` and ends at α.
pub fn sample_small_julia(c: Pt, rot: RotationNumber, region: &dyn Fn(Pt) -> bool, n_samples: usize, seed: u64) -> Result<Vec<Pt>> {
    let (alpha, _) = alpha_fixed_point(c, rot)?;
    let q = rot.q;
    if !region(alpha) {
        return Err(Error::Precondition("α is not in the sampling region".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![alpha];
    let mut chain: VecDeque<Pt> = VecDeque::from([alpha]);
    let mut rejected = 0usize;
    while out.len() < n_samples {
        if rejected > n_samples {
            return Err(Error::Sampling(format!("only {} of {n_samples} samples verified", out.len())));
        }
        let w = *chain.back().unwrap();
        let cands: Vec<Pt> = preimages(c, q, w).into_iter().filter(|z| region(*z)).collect();
        if cands.is_empty() {
            rejected += 1;
            chain = VecDeque::from([alpha]);
            continue;
        }
        let z = cands[rng.gen_range(0..cands.len())];
        let link = (iterate(c, z, q) - w).norm();
        if !(link < 1e-9) || !(iterate(c, z, 2 * q).norm() < 4.0) {
            rejected += 1;
            chain = VecDeque::from([alpha]);
            continue;
        }
        chain.push_back(z);
        if chain.len() > ORBIT_CHECK + 1 {
            chain.pop_front();
        }
        out.push(z);
    }
    if out.len() < n_samples / 2 {
        return Err(Error::Sampling("too few verified samples".into()));
    }
    Ok(out)
}

/// A critical point of `f^q` (a solution of `f^j(z) = 0`, `0 < j < q`) farther than `eps`
/// from every small Julia set `f^i(K*)` of the cycle.
pub fn external_critical_point(r: &PLRestriction, eps: f64) -> Result<Pt> {
    let base = r.cloud();
    let clouds: Vec<PointIndex> = (0..r.q)
        .map(|i| {
            let pts: Vec<Pt> = base.iter().map(|z| iterate(r.c, *z, i)).collect();
            PointIndex::auto(&pts)
        })
        .collect();
    zero_preimages(r.c, r.q - 1)
        .into_iter()
        .map(|(_, z)| z)
        .find(|z| clouds.iter().all(|idx| idx.nearest_within(*z, eps).is_none()))
        .ok_or_else(|| Error::Search("every critical point of f^q lies in a small Julia set".into()))
}

/// Lower bound on the distance from a point set to the traced boundary of `U`.
fn cloud_boundary_gap(boundary: &[Pt], cloud: &[Pt]) -> f64 {
    let n = boundary.len();
    let max_edge = (0..n).map(|k| (boundary[(k + 1) % n] - boundary[k]).norm()).fold(0.0, f64::max);
    let idx = PointIndex::auto(cloud);
    boundary.iter().map(|p| idx.nearest(*p)).fold(f64::INFINITY, f64::min) - 0.5 * max_edge
}

/// `U ∖ K*` with `K*` represented by its samples and interior fill, fattened by `eps_fat`.
pub fn root_annulus(r: &PLRestriction, eps_fat: f64) -> Result<AnnularDomain> {
    if !(eps_fat > 0.0) {
        return domain("root annulus needs a positive fattening radius");
    }
    let target = eps_fat / 1.5;
    let mut cloud = r.k_samples.clone();
    if r.fill_spacing <= target {
        cloud.extend(&r.k_fill);
    } else {
        let tester = r.u_tester();
        let keep = |z: Pt| tester.contains(z);
        let (lo, hi) = geom::bbox(&r.u_boundary);
        let half = 0.5 * (hi.re - lo.re).max(hi.im - lo.im);
        cloud.extend(basin_raster(r.c, r.q, 0.5 * (lo + hi), half, target, Some(&keep))?.points);
    }
    annulus_from_cloud(r.u_boundary.clone(), cloud, eps_fat)
}

fn annulus_from_cloud(boundary: Vec<Pt>, cloud: Vec<Pt>, eps_fat: f64) -> Result<AnnularDomain> {
    let gap = cloud_boundary_gap(&boundary, &cloud);
    if gap <= eps_fat {
        return Err(Error::DegenerateDomain(format!(
            "fattened cloud reaches ∂U (gap {gap:.3e}, fattening {eps_fat:.3e})"
        )));
    }
    AnnularDomain::new(boundary, Inner::Cloud { points: cloud, fat: eps_fat })
}

/// Univalent lift of a closed curve through `f`, on the branch whose lift winds around `target`.
fn lift_curve(c: Pt, curve: &[Pt], target: Pt) -> Result<Vec<Pt>> {
    let mut lift = Vec::with_capacity(curve.len());
    let mut prev = (curve[0] - c).sqrt();
    for w in curve {
        let s = (w - c).sqrt();
        let z = if (s - prev).norm() <= (s + prev).norm() { s } else { -s };
        lift.push(z);
        prev = z;
    }
    let n = lift.len();
    if (lift[0] - lift[n - 1]).norm() > 10.0 * (lift[1] - lift[0]).norm().max((lift[n - 1] - lift[n - 2]).norm()) {
        return Err(Error::Structure("curve surrounds the critical value; lift is not univalent".into()));
    }
    if geom::winding_number(&lift, target) == 1 {
        return Ok(lift);
    }
    let neg: Vec<Pt> = lift.iter().map(|z| -z).collect();
    if geom::winding_number(&neg, target) == 1 {
        return Ok(neg);
    }
    Err(Error::Structure("no lift of the curve surrounds the cycle point".into()))
}

/// Root annuli of the pullbacks `U_i ∖ K*_i`, `i = q-1, …, 1`, of `U ∖ K*` along the cycle
/// (each `f : U_i → U_{i+1}` univalent, indices mod q). The fattening follows the median
/// contraction of the inverse branches, with a floor of 2.5 cells of an `n`-grid.
pub fn pullback_chain(r: &PLRestriction, eps_fat: f64, n: usize) -> Result<Vec<(u32, AnnularDomain)>> {
    let base = root_annulus(r, eps_fat)?;
    let Inner::Cloud { points, .. } = &base.inner else { unreachable!() };
    let mut curve = r.u_boundary.clone();
    let mut cloud: Vec<(Pt, f64)> = points.iter().map(|p| (*p, 1.0)).collect();
    let mut out = Vec::new();
    for i in (1..r.q).rev() {
        let target = iterate(r.c, Pt::new(0.0, 0.0), i);
        curve = lift_curve(r.c, &curve, target)?;
        let tester = PolygonTester::new(&curve);
        cloud = cloud
            .iter()
            .filter_map(|&(w, k)| {
                let s = (w - r.c).sqrt();
                [s, -s].into_iter().find(|z| tester.contains(*z)).map(|z| (z, k / (2.0 * z.norm())))
            })
            .collect();
        if cloud.is_empty() {
            return Err(Error::Structure(format!("empty pulled-back cloud at step {i}")));
        }
        let mut ks: Vec<f64> = cloud.iter().map(|p| p.1).collect();
        ks.sort_by(f64::total_cmp);
        let (lo, hi) = geom::bbox(&curve);
        let eps = (eps_fat * ks[ks.len() / 2]).max(2.5 * Grid::square(lo, hi, n).h);
        let pts = cloud.iter().map(|p| p.0).collect();
        out.push((i, annulus_from_cloud(curve.clone(), pts, eps)?));
    }
    Ok(out)
}
