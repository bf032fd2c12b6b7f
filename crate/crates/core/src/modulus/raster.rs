//! Rasterization of an annular domain into a cut-edge Laplace system.

use super::{AnnularDomain, Inner};
use crate::error::{Error, Result};
use crate::geom::{self, Pt};

/// Smallest cut fraction kept on an edge; closer crossings are snapped to it.
pub const T_MIN: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub n: usize,
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
}

impl Grid {
    /// Square grid over the outer boundary's bounding box with a small margin.
    pub fn covering(domain: &AnnularDomain, n: usize) -> Self {
        let (lo, hi) = geom::bbox(&domain.outer);
        Self::square(lo, hi, n)
    }

    /// Square grid centred on the box `[lo, hi]`, enlarged by 2%.
    pub fn square(lo: Pt, hi: Pt, n: usize) -> Self {
        let side = (hi.re - lo.re).max(hi.im - lo.im) * 1.02;
        let c = 0.5 * (lo + hi);
        Grid { n, x0: c.re - 0.5 * side, y0: c.im - 0.5 * side, h: side / n as f64 }
    }

    /// Cell containing `p`, if any.
    pub fn cell_of(&self, p: Pt) -> Option<usize> {
        let i = ((p.re - self.x0) / self.h).floor();
        let j = ((p.im - self.y0) / self.h).floor();
        if i < 0.0 || j < 0.0 || i >= self.n as f64 || j >= self.n as f64 {
            return None;
        }
        Some(j as usize * self.n + i as usize)
    }

    pub fn refined(&self) -> Self {
        Grid { n: 2 * self.n, h: 0.5 * self.h, ..*self }
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + 0.5) * self.h
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + (j as f64 + 0.5) * self.h
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Pt {
        Pt::new(self.x(i), self.y(j))
    }

    fn col_of(&self, x: f64) -> f64 {
        (x - self.x0) / self.h - 0.5
    }

    fn row_of(&self, y: f64) -> f64 {
        (y - self.y0) / self.h - 0.5
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Label {
    Outer,
    Inner,
    Free,
}

/// Crossings of boundary pieces with grid lines, with Dirichlet value.
struct Crossings {
    rows: Vec<Vec<(f64, f64)>>,
    cols: Vec<Vec<(f64, f64)>>,
}

impl Crossings {
    fn new(n: usize) -> Self {
        Self { rows: vec![Vec::new(); n], cols: vec![Vec::new(); n] }
    }

    fn add_polyline(&mut self, g: &Grid, pts: &[Pt], closed: bool, val: f64) {
        let m = if closed { pts.len() } else { pts.len() - 1 };
        for k in 0..m {
            let a = pts[k];
            let b = pts[(k + 1) % pts.len()];
            add_segment_lines(g, a.im, b.im, |y| Some(a.re + (y - a.im) * (b.re - a.re) / (b.im - a.im)), true, &mut self.rows, val);
            add_segment_lines(g, a.re, b.re, |x| Some(a.im + (x - a.re) * (b.im - a.im) / (b.re - a.re)), false, &mut self.cols, val);
        }
    }

    fn finish(&mut self) {
        for v in self.rows.iter_mut().chain(self.cols.iter_mut()) {
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
    }

    /// Nearest crossing to `from` on the open-closed interval toward `to`.
    fn nearest(line: &[(f64, f64)], from: f64, to: f64) -> Option<(f64, f64)> {
        let (lo, hi) = if from < to { (from, to) } else { (to, from) };
        let start = line.partition_point(|c| c.0 < lo);
        let mut best: Option<(f64, f64)> = None;
        for &(x, v) in &line[start..] {
            if x > hi {
                break;
            }
            let d = (x - from).abs();
            if best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, v));
            }
        }
        best.map(|(d, v)| (d / (hi - lo), v))
    }
}

// Grid lines at row (or column) coordinates strictly inside the segment's span (half-open).
fn add_segment_lines<F: Fn(f64) -> Option<f64>>(
    g: &Grid,
    a: f64,
    b: f64,
    at: F,
    rows: bool,
    out: &mut [Vec<(f64, f64)>],
    val: f64,
) {
    if a == b {
        return;
    }
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let idx = |v: f64| if rows { g.row_of(v) } else { g.col_of(v) };
    let first = idx(lo).ceil().max(0.0) as i64;
    let last = (idx(hi).ceil() as i64 - 1).min(g.n as i64 - 1);
    for k in first..=last {
        let c = if rows { g.y(k as usize) } else { g.x(k as usize) };
        if c < lo || c >= hi {
            continue;
        }
        if let Some(x) = at(c) {
            out[k as usize].push((x, val));
        }
    }
}

struct Disks<'a> {
    pts: &'a [Pt],
    r: f64,
    cell: f64,
    origin: Pt,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl<'a> Disks<'a> {
    fn new(pts: &'a [Pt], r: f64) -> Self {
        let (lo, hi) = geom::bbox(pts);
        let cell = 2.0 * r;
        let origin = lo - Pt::new(cell, cell);
        let nx = ((hi.re - origin.re) / cell) as usize + 2;
        let ny = ((hi.im - origin.im) / cell) as usize + 2;
        let mut buckets = vec![Vec::new(); nx * ny];
        for (k, p) in pts.iter().enumerate() {
            let bx = ((p.re - origin.re) / cell) as usize;
            let by = ((p.im - origin.im) / cell) as usize;
            buckets[by * nx + bx].push(k as u32);
        }
        Self { pts, r, cell, origin, nx, ny, buckets }
    }

    fn near(&self, p: Pt, reach: f64, mut f: impl FnMut(Pt)) {
        let bx0 = ((p.re - reach - self.origin.re) / self.cell).floor().max(0.0) as usize;
        let by0 = ((p.im - reach - self.origin.im) / self.cell).floor().max(0.0) as usize;
        let bx1 = (((p.re + reach - self.origin.re) / self.cell).floor().max(0.0) as usize).min(self.nx - 1);
        let by1 = (((p.im + reach - self.origin.im) / self.cell).floor().max(0.0) as usize).min(self.ny - 1);
        for by in by0..=by1 {
            for bx in bx0..=bx1 {
                for &k in &self.buckets[by * self.nx + bx] {
                    f(self.pts[k as usize]);
                }
            }
        }
    }

    fn entry(&self, p: Pt, q: Pt) -> Option<f64> {
        let d = q - p;
        let dd = d.norm_sqr();
        let mut best: Option<f64> = None;
        self.near(q, self.r + d.norm(), |c| {
            let m = p - c;
            let bh = (m * d.conj()).re;
            let cc = m.norm_sqr() - self.r * self.r;
            let disc = bh * bh - dd * cc;
            if disc < 0.0 {
                return;
            }
            let t = (-bh - disc.sqrt()) / dd;
            if (0.0..=1.0).contains(&t) && best.map_or(true, |b| t < b) {
                best = Some(t);
            }
        });
        best
    }
}

/// Symmetric 9-point operator; offsets ordered `(dy+1)*3 + (dx+1)`.
#[derive(Clone, Debug)]
pub struct Stencil {
    pub n: usize,
    pub a: Vec<[f64; 9]>,
}

impl Stencil {
    pub fn active(&self, k: usize) -> bool {
        self.a[k][4] > 0.0
    }
}

/// Discrete system for one grid; the energy of `u` is
/// `Σ_free (cw u² − 2 b u + cc) + Σ_couplings (u_i − u_j)²`.
pub struct System {
    pub grid: Grid,
    pub op: Stencil,
    pub b: Vec<f64>,
    pub cw: Vec<f64>,
    pub cc: Vec<f64>,
    pub labels: Vec<Label>,
}

impl System {
    pub fn energy(&self, u: &[f64]) -> f64 {
        let n = self.grid.n;
        let mut e = 0.0;
        for j in 0..n {
            for i in 0..n {
                let k = j * n + i;
                if !self.op.active(k) {
                    continue;
                }
                e += self.cw[k] * u[k] * u[k] - 2.0 * self.b[k] * u[k] + self.cc[k];
                // east and north couplings, each edge once
                if i + 1 < n && self.op.a[k][5] != 0.0 {
                    let d = u[k] - u[k + 1];
                    e += -self.op.a[k][5] * d * d;
                }
                if j + 1 < n && self.op.a[k][7] != 0.0 {
                    let d = u[k] - u[k + n];
                    e += -self.op.a[k][7] * d * d;
                }
            }
        }
        e
    }

    pub fn free_count(&self) -> usize {
        self.labels.iter().filter(|l| **l == Label::Free).count()
    }
}

pub(crate) fn fill_polygon(g: &Grid, poly: &[Pt], mut set: impl FnMut(usize)) {
    let mut rows: Vec<Vec<(f64, f64)>> = vec![Vec::new(); g.n];
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        add_segment_lines(g, a.im, b.im, |y| Some(a.re + (y - a.im) * (b.re - a.re) / (b.im - a.im)), true, &mut rows, 0.0);
    }
    for (j, row) in rows.iter_mut().enumerate() {
        row.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in row.chunks_exact(2) {
            let i0 = g.col_of(pair[0].0).ceil().max(0.0) as usize;
            let i1 = g.col_of(pair[1].0).floor();
            if i1 < 0.0 {
                continue;
            }
            let i1 = (i1 as usize).min(g.n - 1);
            for i in i0..=i1 {
                set(j * g.n + i);
            }
        }
    }
}

pub fn rasterize(domain: &AnnularDomain, grid: Grid) -> Result<System> {
    let n = grid.n;
    let nn = n * n;
    let mut labels = vec![Label::Outer; nn];
    fill_polygon(&grid, &domain.outer, |k| labels[k] = Label::Free);

    let mut cross = Crossings::new(n);
    cross.add_polyline(&grid, &domain.outer, true, 1.0);
    for s in &domain.outer_slits {
        cross.add_polyline(&grid, s, false, 1.0);
    }
    let mut disks = None;
    match &domain.inner {
        Inner::Polygon(p) => {
            let mut bad = false;
            fill_polygon(&grid, p, |k| {
                bad |= labels[k] == Label::Outer;
                labels[k] = Label::Inner;
            });
            if bad {
                return Err(Error::DegenerateDomain("inner polygon reaches the outer boundary".into()));
            }
            cross.add_polyline(&grid, p, true, 0.0);
        }
        Inner::Slit(s) => cross.add_polyline(&grid, s, false, 0.0),
        Inner::Cloud { points, fat } => {
            let r2 = fat * fat;
            for p in points {
                let i0 = grid.col_of(p.re - fat).ceil().max(0.0) as usize;
                let i1 = grid.col_of(p.re + fat).floor().min(n as f64 - 1.0);
                let j0 = grid.row_of(p.im - fat).ceil().max(0.0) as usize;
                let j1 = grid.row_of(p.im + fat).floor().min(n as f64 - 1.0);
                if i1 < 0.0 || j1 < 0.0 {
                    continue;
                }
                for j in j0..=j1 as usize {
                    for i in i0..=i1 as usize {
                        if (grid.node(i, j) - p).norm_sqr() <= r2 {
                            let k = j * n + i;
                            if labels[k] == Label::Outer {
                                return Err(Error::DegenerateDomain("fattened cloud reaches the outer boundary".into()));
                            }
                            labels[k] = Label::Inner;
                        }
                    }
                }
            }
            disks = Some(Disks::new(points, *fat));
        }
    }
    cross.finish();
    check_gap(&labels, n)?;

    let mut a = vec![[0.0; 9]; nn];
    let mut b = vec![0.0; nn];
    let mut cw = vec![0.0; nn];
    let mut cc = vec![0.0; nn];
    // (di, dj, stencil slot)
    const DIRS: [(i64, i64, usize); 4] = [(1, 0, 5), (-1, 0, 3), (0, 1, 7), (0, -1, 1)];
    for j in 0..n {
        for i in 0..n {
            let k = j * n + i;
            if labels[k] != Label::Free {
                continue;
            }
            let p = grid.node(i, j);
            for &(di, dj, slot) in &DIRS {
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                let inside = ni >= 0 && nj >= 0 && ni < n as i64 && nj < n as i64;
                let q = Pt::new(p.re + di as f64 * grid.h, p.im + dj as f64 * grid.h);
                let mut hit = if dj == 0 {
                    Crossings::nearest(&cross.rows[j], p.re, q.re)
                } else {
                    Crossings::nearest(&cross.cols[i], p.im, q.im)
                };
                let nl = if inside { labels[(nj as usize) * n + ni as usize] } else { Label::Outer };
                if let (Some(d), Label::Inner) = (&disks, nl) {
                    if let Some(t) = d.entry(p, q) {
                        if hit.map_or(true, |(ht, _)| t < ht) {
                            hit = Some((t, 0.0));
                        }
                    }
                }
                let hit = match (hit, nl) {
                    (Some(h), _) => Some(h),
                    (None, Label::Free) => None,
                    (None, Label::Inner) => Some((1.0, 0.0)),
                    (None, Label::Outer) => Some((1.0, 1.0)),
                };
                match hit {
                    None => {
                        a[k][slot] = -1.0;
                        a[k][4] += 1.0;
                    }
                    Some((t, v)) => {
                        let w = 1.0 / t.max(T_MIN);
                        a[k][4] += w;
                        cw[k] += w;
                        b[k] += w * v;
                        cc[k] += w * v * v;
                    }
                }
            }
        }
    }
    // a coupling survives only if both sides kept it
    for j in 0..n {
        for i in 0..n {
            let k = j * n + i;
            if i + 1 < n && (a[k][5] != 0.0) != (a[k + 1][3] != 0.0) {
                return Err(Error::DegenerateDomain("asymmetric coupling".into()));
            }
            if j + 1 < n && (a[k][7] != 0.0) != (a[k + n][1] != 0.0) {
                return Err(Error::DegenerateDomain("asymmetric coupling".into()));
            }
        }
    }
    if !b.iter().any(|&v| v > 0.0) || !cw.iter().zip(&b).any(|(w, bv)| *w > *bv) {
        return Err(Error::DegenerateDomain("one boundary component is invisible at this grid".into()));
    }
    Ok(System { grid, op: Stencil { n, a }, b, cw, cc, labels })
}

// Inner and outer labels closer than two cells.
fn check_gap(labels: &[Label], n: usize) -> Result<()> {
    for j in 0..n {
        for i in 0..n {
            if labels[j * n + i] != Label::Inner {
                continue;
            }
            for dj in -2i64..=2 {
                for di in -2i64..=2 {
                    let (x, y) = (i as i64 + di, j as i64 + dj);
                    if x < 0 || y < 0 || x >= n as i64 || y >= n as i64 {
                        return Err(Error::DegenerateDomain("obstacle reaches the grid border".into()));
                    }
                    if labels[y as usize * n + x as usize] == Label::Outer {
                        return Err(Error::DegenerateDomain("obstacle within two cells of the outer boundary".into()));
                    }
                }
            }
        }
    }
    Ok(())
}
