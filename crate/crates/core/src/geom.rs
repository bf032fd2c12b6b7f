//! Plane geometry on `Complex64` points.

use num_complex::Complex64 as C64;

pub type Pt = C64;

pub fn signed_area(poly: &[Pt]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        s += a.re * b.im - b.re * a.im;
    }
    0.5 * s
}

/// Even-odd point-in-polygon test.
pub fn point_in_polygon(poly: &[Pt], p: Pt) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.im > p.im) != (b.im > p.im) {
            let x = a.re + (p.im - a.im) * (b.re - a.re) / (b.im - a.im);
            if p.re < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Even-odd test against a fixed polygon, with edges bucketed into horizontal bands.
pub struct PolygonTester {
    y0: f64,
    dy: f64,
    bands: Vec<Vec<(Pt, Pt)>>,
    lo: Pt,
    hi: Pt,
}

impl PolygonTester {
    pub fn new(poly: &[Pt]) -> Self {
        let (lo, hi) = bbox(poly);
        let nb = (poly.len() / 4).clamp(1, 1 << 16);
        let dy = ((hi.im - lo.im) / nb as f64).max(f64::MIN_POSITIVE);
        let mut bands = vec![Vec::new(); nb];
        let n = poly.len();
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + n - 1) % n]);
            let band = |y: f64| (((y - lo.im) / dy).floor().max(0.0) as usize).min(nb - 1);
            let (k0, k1) = (band(a.im.min(b.im)), band(a.im.max(b.im)));
            for k in k0..=k1 {
                bands[k].push((a, b));
            }
        }
        PolygonTester { y0: lo.im, dy, bands, lo, hi }
    }

    pub fn contains(&self, p: Pt) -> bool {
        if !(p.re >= self.lo.re && p.re <= self.hi.re && p.im >= self.lo.im && p.im <= self.hi.im) {
            return false;
        }
        let k = (((p.im - self.y0) / self.dy).floor().max(0.0) as usize).min(self.bands.len() - 1);
        let mut inside = false;
        for &(a, b) in &self.bands[k] {
            if (a.im > p.im) != (b.im > p.im) {
                let x = a.re + (p.im - a.im) * (b.re - a.re) / (b.im - a.im);
                if p.re < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

pub fn dist_point_segment(p: Pt, a: Pt, b: Pt) -> f64 {
    let d = b - a;
    let l2 = d.norm_sqr();
    if l2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / l2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

pub fn dist_point_polyline(poly: &[Pt], closed: bool, p: Pt) -> f64 {
    let n = poly.len();
    let m = if closed { n } else { n.saturating_sub(1) };
    let mut best = f64::INFINITY;
    for i in 0..m {
        best = best.min(dist_point_segment(p, poly[i], poly[(i + 1) % n]));
    }
    if n == 1 {
        best = (p - poly[0]).norm();
    }
    best
}

/// Parameter `t` in [0,1] where segment a→b crosses segment c→d, if it does.
pub fn segment_intersection(a: Pt, b: Pt, c: Pt, d: Pt) -> Option<f64> {
    let r = b - a;
    let s = d - c;
    let den = r.re * s.im - r.im * s.re;
    if den.abs() < 1e-300 {
        return None;
    }
    let ca = c - a;
    let t = (ca.re * s.im - ca.im * s.re) / den;
    let u = (ca.re * r.im - ca.im * r.re) / den;
    if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
        Some(t)
    } else {
        None
    }
}

/// Andrew's monotone chain; counterclockwise, no repeated endpoint.
pub fn convex_hull(points: &[Pt]) -> Vec<Pt> {
    let mut p: Vec<Pt> = points.to_vec();
    p.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: Pt, a: Pt, b: Pt| (a - o).re * (b - o).im - (a - o).im * (b - o).re;
    let mut h: Vec<Pt> = Vec::with_capacity(2 * p.len());
    for &q in &p {
        while h.len() >= 2 && cross(h[h.len() - 2], h[h.len() - 1], q) <= 0.0 {
            h.pop();
        }
        h.push(q);
    }
    let lower = h.len() + 1;
    for &q in p.iter().rev().skip(1) {
        while h.len() >= lower && cross(h[h.len() - 2], h[h.len() - 1], q) <= 0.0 {
            h.pop();
        }
        h.push(q);
    }
    h.pop();
    h
}

pub fn centroid(points: &[Pt]) -> Pt {
    points.iter().sum::<Pt>() / points.len() as f64
}

/// Winding number of a closed polyline around `p`.
pub fn winding_number(curve: &[Pt], p: Pt) -> i64 {
    let n = curve.len();
    let mut total = 0.0;
    for i in 0..n {
        let a = curve[i] - p;
        let b = curve[(i + 1) % n] - p;
        total += (b / a).arg();
    }
    (total / std::f64::consts::TAU).round() as i64
}

pub fn bbox(points: &[Pt]) -> (Pt, Pt) {
    let mut lo = Pt::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Pt::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.re = lo.re.min(p.re);
        lo.im = lo.im.min(p.im);
        hi.re = hi.re.max(p.re);
        hi.im = hi.im.max(p.im);
    }
    (lo, hi)
}

pub fn circle(center: Pt, radius: f64, n: usize) -> Vec<Pt> {
    (0..n)
        .map(|k| center + Pt::from_polar(radius, std::f64::consts::TAU * k as f64 / n as f64))
        .collect()
}
