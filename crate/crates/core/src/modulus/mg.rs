//! Conjugate gradients preconditioned by a Galerkin geometric multigrid V-cycle.
//!
//! Cell-centred bilinear prolongation (weights 3/4, 1/4 per axis) restricted to
//! active nodes; coarse operators are `Pᵀ A P`, which stay 9-point.

use super::raster::Stencil;
use crate::error::{Error, Result};
use rayon::prelude::*;

const OMEGA: f64 = 0.8;
const SWEEPS: usize = 2;
const COARSEST: usize = 600;

// MG transfer: coarse node I sits on fine node 2I; odd fine nodes average two parents.
fn parents(i: usize) -> [(i64, f64); 2] {
    let c = (i / 2) as i64;
    if i % 2 == 0 {
        [(c, 1.0), (c + 1, 0.0)]
    } else {
        [(c, 0.5), (c + 1, 0.5)]
    }
}

fn weight(f: i64, c: i64) -> f64 {
    match f - 2 * c {
        0 => 1.0,
        -1 | 1 => 0.5,
        _ => 0.0,
    }
}

fn coarse_size(nf: usize) -> usize {
    nf / 2 + 1
}

pub fn apply(op: &Stencil, x: &[f64], y: &mut [f64]) {
    let n = op.n;
    y.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        for (i, out) in row.iter_mut().enumerate() {
            let k = j * n + i;
            let s = &op.a[k];
            if s[4] == 0.0 {
                *out = 0.0;
                continue;
            }
            let mut acc = s[4] * x[k];
            for dj in 0..3 {
                let jj = j as i64 + dj as i64 - 1;
                if jj < 0 || jj >= n as i64 {
                    continue;
                }
                for di in 0..3 {
                    let c = s[dj * 3 + di];
                    if c == 0.0 || (dj == 1 && di == 1) {
                        continue;
                    }
                    let ii = i as i64 + di as i64 - 1;
                    if ii < 0 || ii >= n as i64 {
                        continue;
                    }
                    acc += c * x[jj as usize * n + ii as usize];
                }
            }
            *out = acc;
        }
    });
}

fn galerkin(fine: &Stencil) -> Stencil {
    let nf = fine.n as i64;
    let nc = coarse_size(fine.n);
    let mut a = vec![[0.0; 9]; nc * nc];
    a.par_chunks_mut(nc).enumerate().for_each(|(jc, row)| {
        let jc = jc as i64;
        for (ic, out) in row.iter_mut().enumerate() {
            let ic = ic as i64;
            for fj in (2 * jc - 1).max(0)..=(2 * jc + 1).min(nf - 1) {
                let wj = weight(fj, jc);
                for fi in (2 * ic - 1).max(0)..=(2 * ic + 1).min(nf - 1) {
                    let w = wj * weight(fi, ic);
                    let s = &fine.a[(fj * nf + fi) as usize];
                    if s[4] == 0.0 {
                        continue;
                    }
                    for dj in -1i64..=1 {
                        for di in -1i64..=1 {
                            let c = s[((dj + 1) * 3 + di + 1) as usize];
                            let (gi, gj) = (fi + di, fj + dj);
                            if c == 0.0 || gi < 0 || gj < 0 || gi >= nf || gj >= nf {
                                continue;
                            }
                            if fine.a[(gj * nf + gi) as usize][4] == 0.0 {
                                continue;
                            }
                            for (pj, vj) in parents(gj as usize) {
                                let oj = pj - jc;
                                if vj == 0.0 || !(-1..=1).contains(&oj) {
                                    continue;
                                }
                                for (pi, vi) in parents(gi as usize) {
                                    let oi = pi - ic;
                                    if vi == 0.0 || !(-1..=1).contains(&oi) {
                                        continue;
                                    }
                                    out[((oj + 1) * 3 + oi + 1) as usize] += w * c * vj * vi;
                                }
                            }
                        }
                    }
                }
            }
        }
    });
    // drop couplings to coarse nodes that ended up inactive
    let snapshot: Vec<bool> = a.iter().map(|s| s[4] > 0.0).collect();
    for k in 0..nc * nc {
        let (i, j) = ((k % nc) as i64, (k / nc) as i64);
        for dj in -1i64..=1 {
            for di in -1i64..=1 {
                let (ii, jj) = (i + di, j + dj);
                if ii < 0 || jj < 0 || ii >= nc as i64 || jj >= nc as i64 || !snapshot[(jj * nc as i64 + ii) as usize] {
                    a[k][((dj + 1) * 3 + di + 1) as usize] = 0.0;
                }
            }
        }
    }
    Stencil { n: nc, a }
}

fn restrict(fine: &Stencil, r: &[f64], nc: usize) -> Vec<f64> {
    let nf = fine.n as i64;
    let mut out = vec![0.0; nc * nc];
    out.par_chunks_mut(nc).enumerate().for_each(|(jc, row)| {
        let jc = jc as i64;
        for (ic, o) in row.iter_mut().enumerate() {
            let ic = ic as i64;
            let mut acc = 0.0;
            for fj in (2 * jc - 1).max(0)..=(2 * jc + 1).min(nf - 1) {
                for fi in (2 * ic - 1).max(0)..=(2 * ic + 1).min(nf - 1) {
                    let k = (fj * nf + fi) as usize;
                    if fine.a[k][4] != 0.0 {
                        acc += weight(fj, jc) * weight(fi, ic) * r[k];
                    }
                }
            }
            *o = acc;
        }
    });
    out
}

fn prolong(fine: &Stencil, e: &[f64], nc: usize, x: &mut [f64]) {
    let nf = fine.n;
    x.par_chunks_mut(nf).enumerate().for_each(|(j, row)| {
        for (i, xv) in row.iter_mut().enumerate() {
            if fine.a[j * nf + i][4] == 0.0 {
                continue;
            }
            let mut acc = 0.0;
            for (pj, wj) in parents(j) {
                for (pi, wi) in parents(i) {
                    if wi * wj != 0.0 {
                        acc += wi * wj * e[pj as usize * nc + pi as usize];
                    }
                }
            }
            *xv += acc;
        }
    });
}

/// Cell-centred bilinear interpolation of a coarse-grid field onto the grid with
/// half the cell size, written on active nodes of `fine`.
pub fn interpolate_refined(fine: &Stencil, coarse: &[f64], nc: usize, x: &mut [f64]) {
    let nf = fine.n;
    let par = |i: usize| -> [(i64, f64); 2] {
        let c = (i / 2) as i64;
        if i % 2 == 0 {
            [(c, 0.75), (c - 1, 0.25)]
        } else {
            [(c, 0.75), (c + 1, 0.25)]
        }
    };
    x.par_chunks_mut(nf).enumerate().for_each(|(j, row)| {
        for (i, xv) in row.iter_mut().enumerate() {
            if fine.a[j * nf + i][4] == 0.0 {
                continue;
            }
            let (mut acc, mut wsum) = (0.0, 0.0);
            for (pj, wj) in par(j) {
                for (pi, wi) in par(i) {
                    if pj < 0 || pi < 0 || pj >= nc as i64 || pi >= nc as i64 {
                        continue;
                    }
                    acc += wi * wj * coarse[pj as usize * nc + pi as usize];
                    wsum += wi * wj;
                }
            }
            *xv = if wsum > 0.0 { acc / wsum } else { 0.0 };
        }
    });
}

struct Dense {
    idx: Vec<usize>,
    chol: Vec<f64>,
    dead: Vec<bool>,
}

impl Dense {
    fn new(op: &Stencil) -> Self {
        let n = op.n;
        let idx: Vec<usize> = (0..n * n).filter(|&k| op.active(k)).collect();
        let m = idx.len();
        let mut pos = vec![usize::MAX; n * n];
        for (p, &k) in idx.iter().enumerate() {
            pos[k] = p;
        }
        let mut a = vec![0.0; m * m];
        for (p, &k) in idx.iter().enumerate() {
            let (i, j) = ((k % n) as i64, (k / n) as i64);
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let (ii, jj) = (i + di, j + dj);
                    if ii < 0 || jj < 0 || ii >= n as i64 || jj >= n as i64 {
                        continue;
                    }
                    let q = pos[jj as usize * n + ii as usize];
                    if q != usize::MAX {
                        a[p * m + q] += op.a[k][((dj + 1) * 3 + di + 1) as usize];
                    }
                }
            }
        }
        // Cholesky, lower triangle in place. Thin regions can leave the Galerkin product
        // semidefinite; numerically dead pivots are dropped and their component set to 0.
        let mut dead = vec![false; m];
        for c in 0..m {
            let orig = a[c * m + c];
            let mut d = orig;
            for k in 0..c {
                d -= a[c * m + k] * a[c * m + k];
            }
            if !(d > 1e-10 * orig) {
                dead[c] = true;
                a[c * m + c] = 1.0;
                for r in c + 1..m {
                    a[r * m + c] = 0.0;
                }
                continue;
            }
            let d = d.sqrt();
            a[c * m + c] = d;
            for r in c + 1..m {
                let mut s = a[r * m + c];
                for k in 0..c {
                    s -= a[r * m + k] * a[c * m + k];
                }
                a[r * m + c] = s / d;
            }
        }
        Dense { idx, chol: a, dead }
    }

    fn solve(&self, b: &[f64], x: &mut [f64]) {
        let m = self.idx.len();
        let mut y: Vec<f64> = self.idx.iter().map(|&k| b[k]).collect();
        for r in 0..m {
            if self.dead[r] {
                y[r] = 0.0;
                continue;
            }
            for k in 0..r {
                y[r] -= self.chol[r * m + k] * y[k];
            }
            y[r] /= self.chol[r * m + r];
        }
        for r in (0..m).rev() {
            if self.dead[r] {
                y[r] = 0.0;
                continue;
            }
            for k in r + 1..m {
                y[r] -= self.chol[k * m + r] * y[k];
            }
            y[r] /= self.chol[r * m + r];
        }
        x.iter_mut().for_each(|v| *v = 0.0);
        for (p, &k) in self.idx.iter().enumerate() {
            x[k] = y[p];
        }
    }
}

pub struct Hierarchy {
    pub levels: Vec<Stencil>,
    coarse: Dense,
}

impl Hierarchy {
    pub fn new(fine: Stencil) -> Self {
        let mut levels = vec![fine];
        loop {
            let last = levels.last().unwrap();
            let active = last.a.iter().filter(|s| s[4] > 0.0).count();
            if active <= COARSEST || last.n <= 4 {
                break;
            }
            let next = galerkin(last);
            levels.push(next);
        }
        let coarse = Dense::new(levels.last().unwrap());
        Hierarchy { levels, coarse }
    }

    fn jacobi(op: &Stencil, b: &[f64], x: &mut Vec<f64>, tmp: &mut Vec<f64>) {
        apply(op, x, tmp);
        x.par_iter_mut().zip(tmp.par_iter()).zip(b.par_iter()).zip(op.a.par_iter()).for_each(|(((xv, av), bv), s)| {
            if s[4] > 0.0 {
                *xv += OMEGA * (bv - av) / s[4];
            }
        });
    }

    fn vcycle(&self, l: usize, b: &[f64], x: &mut Vec<f64>) {
        if l + 1 == self.levels.len() {
            self.coarse.solve(b, x);
            return;
        }
        let op = &self.levels[l];
        let mut tmp = vec![0.0; b.len()];
        x.iter_mut().for_each(|v| *v = 0.0);
        // first sweep from zero is just a scaled diagonal solve
        x.par_iter_mut().zip(b.par_iter()).zip(op.a.par_iter()).for_each(|((xv, bv), s)| {
            if s[4] > 0.0 {
                *xv = OMEGA * bv / s[4];
            }
        });
        for _ in 1..SWEEPS {
            Self::jacobi(op, b, x, &mut tmp);
        }
        apply(op, x, &mut tmp);
        let r: Vec<f64> = b.par_iter().zip(tmp.par_iter()).map(|(bv, av)| bv - av).collect();
        let nc = self.levels[l + 1].n;
        let rc = restrict(op, &r, nc);
        let mut ec = vec![0.0; nc * nc];
        self.vcycle(l + 1, &rc, &mut ec);
        prolong(op, &ec, nc, x);
        for _ in 0..SWEEPS {
            Self::jacobi(op, b, x, &mut tmp);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.par_iter().zip(b.par_iter()).map(|(x, y)| x * y).sum()
}

pub struct SolveInfo {
    pub iterations: usize,
    pub rel_residual: f64,
}

/// Solves `A x = b` from the initial guess in `x`.
pub fn pcg(h: &Hierarchy, b: &[f64], x: &mut Vec<f64>, tol: f64, max_iter: usize) -> Result<SolveInfo> {
    let op = &h.levels[0];
    let nb = dot(b, b).sqrt();
    if nb == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveInfo { iterations: 0, rel_residual: 0.0 });
    }
    for (k, v) in x.iter_mut().enumerate() {
        if !op.active(k) {
            *v = 0.0;
        }
    }
    let mut ax = vec![0.0; b.len()];
    apply(op, x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bv, av)| bv - av).collect();
    let mut z = vec![0.0; b.len()];
    h.vcycle(0, &r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = ax;
    for it in 0..max_iter {
        let rel = dot(&r, &r).sqrt() / nb;
        if rel < tol {
            return Ok(SolveInfo { iterations: it, rel_residual: rel });
        }
        apply(op, &p, &mut q);
        let alpha = rz / dot(&p, &q);
        x.par_iter_mut().zip(p.par_iter()).for_each(|(xv, pv)| *xv += alpha * pv);
        r.par_iter_mut().zip(q.par_iter()).for_each(|(rv, qv)| *rv -= alpha * qv);
        h.vcycle(0, &r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(z.par_iter()).for_each(|(pv, zv)| *pv = zv + beta * *pv);
    }
    // final true residual
    apply(op, x, &mut q);
    let rel = b.iter().zip(&q).map(|(bv, av)| (bv - av) * (bv - av)).sum::<f64>().sqrt() / nb;
    if rel < tol {
        return Ok(SolveInfo { iterations: max_iter, rel_residual: rel });
    }
    Err(Error::Convergence(format!("pcg stalled at relative residual {rel:.3e}")))
}
