//! Neighborhoods `V` of a small filled Julia set, described by a signed distance.

use crate::geom::{self, Pt};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Neighborhood {
    Disk { center: [f64; 2], radius: f64 },
    /// Points within `offset` of a convex polygon (counterclockwise vertices).
    RoundedHull { hull: Vec<[f64; 2]>, offset: f64 },
}

fn pt(a: [f64; 2]) -> Pt {
    Pt::new(a[0], a[1])
}

impl Neighborhood {
    pub fn disk(center: Pt, radius: f64) -> Self {
        Neighborhood::Disk { center: [center.re, center.im], radius }
    }

    pub fn rounded_hull(points: &[Pt], offset: f64) -> Self {
        let hull = geom::convex_hull(points);
        Neighborhood::RoundedHull { hull: hull.iter().map(|p| [p.re, p.im]).collect(), offset }
    }

    /// Signed distance to the boundary (negative inside) and its gradient.
    pub fn sdf(&self, w: Pt) -> (f64, Pt) {
        match self {
            Neighborhood::Disk { center, radius } => {
                let d = w - pt(*center);
                let r = d.norm();
                let g = if r > 0.0 { d / r } else { Pt::new(1.0, 0.0) };
                (r - radius, g)
            }
            Neighborhood::RoundedHull { hull, offset } => {
                let (d, g) = convex_sdf(hull, w);
                (d - offset, g)
            }
        }
    }

    pub fn contains(&self, w: Pt) -> bool {
        self.sdf(w).0 < 0.0
    }

    pub fn center(&self) -> Pt {
        match self {
            Neighborhood::Disk { center, .. } => pt(*center),
            Neighborhood::RoundedHull { hull, .. } => geom::centroid(&hull.iter().map(|p| pt(*p)).collect::<Vec<_>>()),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Neighborhood::Disk { radius, .. } => 2.0 * radius,
            Neighborhood::RoundedHull { hull, offset } => {
                let pts: Vec<Pt> = hull.iter().map(|p| pt(*p)).collect();
                crate::extremal::diameter(&pts).unwrap_or(0.0) + 2.0 * offset
            }
        }
    }

    /// Boundary polygon, counterclockwise, with about `n` vertices.
    pub fn polygon(&self, n: usize) -> Vec<Pt> {
        match self {
            Neighborhood::Disk { center, radius } => geom::circle(pt(*center), *radius, n),
            Neighborhood::RoundedHull { hull, offset } => {
                let h: Vec<Pt> = hull.iter().map(|p| pt(*p)).collect();
                let m = h.len();
                let per_arc = (n / m.max(1)).max(4);
                let mut out = Vec::new();
                for i in 0..m {
                    let prev = h[(i + m - 1) % m];
                    let cur = h[i];
                    let next = h[(i + 1) % m];
                    let a0 = outward(prev, cur).arg();
                    let mut a1 = outward(cur, next).arg();
                    while a1 < a0 {
                        a1 += TAU;
                    }
                    for k in 0..=per_arc {
                        let a = a0 + (a1 - a0) * k as f64 / per_arc as f64;
                        out.push(cur + Pt::from_polar(*offset, a));
                    }
                }
                out
            }
        }
    }
}

fn outward(a: Pt, b: Pt) -> Pt {
    let t = (b - a) / (b - a).norm();
    Pt::new(t.im, -t.re)
}

fn convex_sdf(hull: &[[f64; 2]], w: Pt) -> (f64, Pt) {
    let m = hull.len();
    let mut best = f64::INFINITY;
    let mut best_g = Pt::new(1.0, 0.0);
    let mut inside = true;
    let mut max_plane = f64::NEG_INFINITY;
    let mut plane_g = Pt::new(1.0, 0.0);
    for i in 0..m {
        let a = pt(hull[i]);
        let b = pt(hull[(i + 1) % m]);
        let e = b - a;
        let len2 = e.norm_sqr();
        let t = (((w - a).re * e.re + (w - a).im * e.im) / len2).clamp(0.0, 1.0);
        let foot = a + e * t;
        let d = (w - foot).norm();
        if d < best {
            best = d;
            best_g = if d > 0.0 { (w - foot) / d } else { outward(a, b) };
        }
        let n = outward(a, b);
        let s = (w - a).re * n.re + (w - a).im * n.im;
        if s > 0.0 {
            inside = false;
        }
        if s > max_plane {
            max_plane = s;
            plane_g = n;
        }
    }
    if inside {
        (max_plane, plane_g)
    } else {
        (best, best_g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_sdf() {
        let v = Neighborhood::disk(Pt::new(1.0, 0.0), 2.0);
        let (d, g) = v.sdf(Pt::new(4.0, 0.0));
        assert!((d - 1.0).abs() < 1e-15 && (g - Pt::new(1.0, 0.0)).norm() < 1e-15);
        assert!(v.contains(Pt::new(0.0, 0.0)));
    }

    #[test]
    fn hull_sdf_matches_polygon() {
        let sq = [Pt::new(0., 0.), Pt::new(1., 0.), Pt::new(1., 1.), Pt::new(0., 1.), Pt::new(0.5, 0.5)];
        let v = Neighborhood::rounded_hull(&sq, 0.1);
        assert!((v.sdf(Pt::new(0.5, -0.3)).0 - 0.2).abs() < 1e-15);
        assert!((v.sdf(Pt::new(0.5, 0.4)).0 + 0.5).abs() < 1e-15);
        let corner = Pt::new(1.0 + 0.3 / 2f64.sqrt(), 1.0 + 0.3 / 2f64.sqrt());
        assert!((v.sdf(corner).0 - 0.2).abs() < 1e-12);
        for p in v.polygon(400) {
            assert!(v.sdf(p).0.abs() < 1e-12);
        }
        assert!(geom::signed_area(&v.polygon(400)) > 0.0);
    }

    #[test]
    fn json_shape() {
        let v = Neighborhood::disk(Pt::new(0.5, -0.25), 1.5);
        let s = serde_json::to_string(&v).unwrap();
        assert!(s.contains("\"kind\":\"disk\""));
        assert_eq!(serde_json::from_str::<Neighborhood>(&s).unwrap(), v);
    }
}
