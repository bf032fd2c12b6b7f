//! Uniform bucket grid for nearest-point queries on planar clouds.

use crate::geom::{self, Pt};
use std::collections::HashMap;

pub struct PointIndex {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    points: Vec<Pt>,
}

impl PointIndex {
    pub fn new(points: &[Pt], cell: f64) -> Self {
        assert!(cell > 0.0);
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (k, p) in points.iter().enumerate() {
            buckets.entry(key(*p, cell)).or_default().push(k);
        }
        PointIndex { cell, buckets, points: points.to_vec() }
    }

    /// Index with a cell size chosen from the cloud's extent.
    pub fn auto(points: &[Pt]) -> Self {
        let (lo, hi) = geom::bbox(points);
        let ext = (hi - lo).norm().max(1e-12);
        let cell = ext / (points.len() as f64).sqrt().max(1.0);
        Self::new(points, cell)
    }

    pub fn points(&self) -> &[Pt] {
        &self.points
    }

    /// Distance to the nearest point, or `None` if nothing lies within `radius`.
    pub fn nearest_within(&self, p: Pt, radius: f64) -> Option<f64> {
        let r = (radius / self.cell).ceil() as i64;
        let (i0, j0) = key(p, self.cell);
        let mut best = f64::INFINITY;
        for di in -r..=r {
            for dj in -r..=r {
                if let Some(v) = self.buckets.get(&(i0 + di, j0 + dj)) {
                    for &k in v {
                        best = best.min((self.points[k] - p).norm());
                    }
                }
            }
        }
        (best <= radius).then_some(best)
    }

    /// Exact nearest distance, widening the search ring until it is conclusive.
    pub fn nearest(&self, p: Pt) -> f64 {
        if self.points.is_empty() {
            return f64::INFINITY;
        }
        let mut radius = self.cell;
        loop {
            if let Some(d) = self.nearest_within(p, radius) {
                return d;
            }
            radius *= 2.0;
            if self.buckets.len() as f64 <= (2.0 * radius / self.cell).powi(2) {
                return self.points.iter().map(|q| (q - p).norm()).fold(f64::INFINITY, f64::min);
            }
        }
    }
}

fn key(p: Pt, cell: f64) -> (i64, i64) {
    ((p.re / cell).floor() as i64, (p.im / cell).floor() as i64)
}
