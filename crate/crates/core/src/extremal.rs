//! Finite marked-point geometry: diameters, gaps, packing, static bound.

use crate::error::{domain, Error, Result};
use crate::geom::Pt;
use crate::specfun;
use serde_json::Value;
use std::f64::consts::PI;

const DUP_REL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Alpha {
    Finite(Pt),
    Infinity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarkedPointSet {
    pub alpha: Alpha,
    pub satellites: Vec<Pt>,
    pub external: Option<Pt>,
}

impl MarkedPointSet {
    pub fn new(alpha: Alpha, satellites: Vec<Pt>, external: Option<Pt>) -> Result<Self> {
        if satellites.len() < 2 {
            return domain("need at least two satellite points");
        }
        let mut all = satellites.clone();
        if let Alpha::Finite(a) = alpha {
            all.push(a);
        }
        if let Some(w) = external {
            if !satellites.iter().any(|z| same_point(*z, w, diameter(&all).unwrap_or(1.0))) {
                all.push(w);
            }
        }
        check_distinct(&all)?;
        Ok(Self { alpha, satellites, external })
    }

    /// Parses `[alpha, z1, ..., zt]` where each entry is `[re, im]` and alpha may be `"inf"`.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)?;
        let arr = v.as_array().ok_or_else(|| Error::Domain("expected a JSON array".into()))?;
        if arr.is_empty() {
            return domain("empty point array");
        }
        let alpha = match &arr[0] {
            Value::String(s) if s == "inf" => Alpha::Infinity,
            other => Alpha::Finite(parse_pair(other)?),
        };
        let sats = arr[1..].iter().map(parse_pair).collect::<Result<Vec<_>>>()?;
        Self::new(alpha, sats, None)
    }

    pub fn to_json(&self) -> String {
        let mut out = vec![match self.alpha {
            Alpha::Infinity => Value::from("inf"),
            Alpha::Finite(a) => Value::from(vec![a.re, a.im]),
        }];
        out.extend(self.satellites.iter().map(|z| Value::from(vec![z.re, z.im])));
        Value::Array(out).to_string()
    }

    /// Sends alpha to infinity by `z -> 1/(z - alpha)`.
    pub fn normalized(&self) -> Result<Self> {
        match self.alpha {
            Alpha::Infinity => Ok(self.clone()),
            Alpha::Finite(a) => {
                let m = |z: Pt| 1.0 / (z - a);
                Self::new(Alpha::Infinity, self.satellites.iter().map(|&z| m(z)).collect(), self.external.map(m))
            }
        }
    }
}

fn parse_pair(v: &Value) -> Result<Pt> {
    let a = v.as_array().filter(|a| a.len() == 2);
    match a.and_then(|a| Some(Pt::new(a[0].as_f64()?, a[1].as_f64()?))) {
        Some(p) => Ok(p),
        None => domain(format!("expected [re, im], got {v}")),
    }
}

fn same_point(a: Pt, b: Pt, scale: f64) -> bool {
    (a - b).norm() <= DUP_REL * scale.max(f64::MIN_POSITIVE)
}

fn check_distinct(points: &[Pt]) -> Result<()> {
    let d = diameter(points)?;
    for i in 0..points.len() {
        for j in 0..i {
            if same_point(points[i], points[j], d) {
                return domain(format!("duplicate points at indices {j} and {i}"));
            }
        }
    }
    Ok(())
}

pub fn diameter(points: &[Pt]) -> Result<f64> {
    if points.is_empty() {
        return domain("diameter of an empty set");
    }
    let mut d: f64 = 0.0;
    for i in 0..points.len() {
        for j in 0..i {
            d = d.max((points[i] - points[j]).norm());
        }
    }
    Ok(d)
}

pub fn min_gap(points: &[Pt]) -> Result<f64> {
    Ok(closest_pair(points)?.2)
}

/// Lexicographically first pair `(i, j)`, `i < j`, at minimal distance.
pub fn closest_pair(points: &[Pt]) -> Result<(usize, usize, f64)> {
    if points.len() < 2 {
        return domain("min_gap needs at least two points");
    }
    let mut best = (0, 1, f64::INFINITY);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = (points[i] - points[j]).norm();
            if d < best.2 {
                best = (i, j, d);
            }
        }
    }
    Ok(best)
}

/// Returns `((2/√t) diam, min_gap < bound)`.
pub fn pack_bound(points: &[Pt]) -> Result<(f64, bool)> {
    if points.len() < 2 {
        return domain("pack_bound needs t >= 2");
    }
    check_distinct(points)?;
    let bound = 2.0 / (points.len() as f64).sqrt() * diameter(points)?;
    Ok((bound, min_gap(points)? < bound))
}

/// Member of the closest satellite pair that differs from `w`.
pub fn select_pair(p: &MarkedPointSet, w: Pt) -> Result<Pt> {
    if p.alpha != Alpha::Infinity {
        return domain("select_pair expects alpha normalized to infinity");
    }
    let z = &p.satellites;
    if z.len() < 3 {
        return domain("select_pair needs t >= 3");
    }
    let (i, j, _) = closest_pair(z)?;
    let scale = diameter(z)?;
    Ok(if same_point(z[i], w, scale) { z[j] } else { z[i] })
}

pub fn static_bound(t: u64) -> Result<f64> {
    if t < 3 {
        return domain(format!("static_bound needs t >= 3, got {t}"));
    }
    Ok(static_bound_real(t as f64))
}

pub(crate) fn static_bound_real(t: f64) -> f64 {
    PI / (4.0 * t).ln()
}

/// Lower bound `tau(m) diam(Z) / 2` on the distance from `Z` to the complement of `V`.
pub fn euclid_distance_bound(diam_z: f64, m: f64) -> Result<f64> {
    if !(diam_z > 0.0) || !(m > 0.0) {
        return domain("euclid_distance_bound needs positive inputs");
    }
    Ok(specfun::tau(m)? * diam_z / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Pt {
        Pt::new(x, y)
    }

    #[test]
    fn small_configurations() {
        let sq = [p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)];
        assert!((diameter(&sq).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(min_gap(&sq).unwrap(), 1.0);
        let two = [p(0., 0.), p(1., 0.)];
        assert_eq!(diameter(&two).unwrap(), 1.0);
        assert_eq!(min_gap(&two).unwrap(), 1.0);
        let col = [p(0., 0.), p(1., 0.), p(3., 0.)];
        assert_eq!(diameter(&col).unwrap(), 3.0);
        assert_eq!(min_gap(&col).unwrap(), 1.0);
        assert!(min_gap(&col[..1]).is_err());
        assert!(diameter(&[]).is_err());
    }

    #[test]
    fn packing_examples() {
        let sq = [p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)];
        let (b, ok) = pack_bound(&sq).unwrap();
        assert!((b - 2f64.sqrt()).abs() < 1e-15 && ok);
        let tri = [p(0., 0.), p(1., 0.), p(0.5, 0.75f64.sqrt())];
        let (b, ok) = pack_bound(&tri).unwrap();
        assert!((b - 2.0 / 3f64.sqrt()).abs() < 1e-12 && ok);
        assert!(pack_bound(&[p(0., 0.), p(0., 0.), p(1., 0.)]).is_err());
    }

    #[test]
    fn pair_selection() {
        let m = MarkedPointSet::new(Alpha::Infinity, vec![p(0., 0.), p(0.1, 0.), p(5., 0.)], None).unwrap();
        assert_eq!(select_pair(&m, p(5., 0.)).unwrap(), p(0., 0.));
        assert_eq!(select_pair(&m, p(0., 0.)).unwrap(), p(0.1, 0.));
        let short = MarkedPointSet::new(Alpha::Infinity, vec![p(0., 0.), p(1., 0.)], None).unwrap();
        assert!(select_pair(&short, p(0., 0.)).is_err());
    }

    #[test]
    fn static_bounds() {
        assert!((static_bound(3).unwrap() - 1.264269888713050).abs() < 1e-12);
        assert!((static_bound(4).unwrap() - 1.133090035456798).abs() < 1e-12);
        assert!(static_bound(2).is_err());
        for t in 3..100u64 {
            let m = static_bound(t).unwrap();
            let lower = specfun::tau_lower(m).unwrap();
            assert!((lower - 8.0 / (t as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn euclid_round_configuration() {
        let r = 0.7;
        let b = euclid_distance_bound(2.0 * r, 1.0).unwrap();
        assert!(b < ((2.0 * PI).exp() - 1.0) * r);
        assert!(euclid_distance_bound(1.0, 0.01).unwrap() < 1e-60);
        assert!(euclid_distance_bound(0.0, 1.0).is_err());
    }

    #[test]
    fn json_roundtrip_and_normalization() {
        let m = MarkedPointSet::from_json(r#"[[0.5, 0], [1, 0], [0, 1], [-1, 0]]"#).unwrap();
        let back = MarkedPointSet::from_json(&m.to_json()).unwrap();
        assert_eq!(m, back);
        let n = m.normalized().unwrap();
        assert_eq!(n.alpha, Alpha::Infinity);
        assert!((n.satellites[0] - p(2., 0.)).norm() < 1e-15);
        let inf = MarkedPointSet::from_json(r#"["inf", [1, 0], [0, 1]]"#).unwrap();
        assert_eq!(inf.alpha, Alpha::Infinity);
        assert!(MarkedPointSet::from_json(r#"[[0, 0], [0, 0], [1, 1]]"#).is_err());
    }
}
