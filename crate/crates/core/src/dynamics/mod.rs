//! The quadratic family `f_c(z) = z² + c`: satellite parameters, α fixed points,
//! and polynomial-like restrictions around the small Julia set of the critical point.

pub mod index;
pub mod neighborhood;
pub mod pl;
pub mod trace;

use crate::error::{domain, Error, Result};
use crate::geom::Pt;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

pub use neighborhood::Neighborhood;
pub use pl::{auto_restriction, external_critical_point, pullback_chain, pullback_restriction, root_annulus, sample_small_julia, PLRestriction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RotationNumber {
    pub p: u32,
    pub q: u32,
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl RotationNumber {
    pub fn new(p: u32, q: u32) -> Result<Self> {
        if q < 2 || p == 0 || p >= q {
            return domain(format!("rotation number {p}/{q} needs 0 < p < q, q >= 2"));
        }
        if gcd(p as u64, q as u64) != 1 {
            return domain(format!("rotation number {p}/{q} is not in lowest terms"));
        }
        Ok(RotationNumber { p, q })
    }

    pub fn multiplier(&self) -> Pt {
        Pt::from_polar(1.0, TAU * self.p as f64 / self.q as f64)
    }
}

impl std::fmt::Display for RotationNumber {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

#[inline]
pub fn f(c: Pt, z: Pt) -> Pt {
    z * z + c
}

pub fn iterate(c: Pt, z: Pt, n: u32) -> Pt {
    (0..n).fold(z, |w, _| w * w + c)
}

/// `(f^n(z), (f^n)'(z))`.
pub fn iterate_d(c: Pt, mut z: Pt, n: u32) -> (Pt, Pt) {
    let mut d = Pt::new(1.0, 0.0);
    for _ in 0..n {
        d = 2.0 * z * d;
        z = z * z + c;
    }
    (z, d)
}

/// Parameter on the main cardioid where α has multiplier `e^{2πip/q}`.
pub fn cardioid_root(rot: RotationNumber) -> Pt {
    let l = rot.multiplier();
    l / 2.0 - l * l / 4.0
}

/// Center of the period-`q` satellite component attached at `cardioid_root(rot)`.
pub fn satellite_center(rot: RotationNumber) -> Result<Pt> {
    let q = rot.q;
    let l = rot.multiplier();
    let root = cardioid_root(rot);
    // cardioid tangent at the root, rotated to the outward side
    let tangent = Pt::new(0.0, 1.0) * (l / 2.0 - l * l / 2.0);
    let mut normal = -Pt::new(0.0, 1.0) * tangent / tangent.norm();
    if (root + 0.01 * normal).norm() < (root - 0.01 * normal).norm() {
        normal = -normal;
    }
    let mut c = root + normal * (0.9 / (q as f64 * q as f64));
    let mut converged = false;
    for _ in 0..200 {
        // g(c) = f_c^q(0); dg/dc by the chain rule
        let (mut z, mut dz) = (Pt::new(0.0, 0.0), Pt::new(0.0, 0.0));
        for _ in 0..q {
            dz = 2.0 * z * dz + 1.0;
            z = z * z + c;
        }
        let step = z / dz;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        c -= step;
        if step.norm() < 1e-15 * (1.0 + c.norm()) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence(format!("center Newton for {rot} did not converge")));
    }
    if iterate(c, Pt::new(0.0, 0.0), q).norm() > 1e-12 {
        return Err(Error::Convergence(format!("center residual too large for {rot}")));
    }
    let mut z = Pt::new(0.0, 0.0);
    for m in 1..q {
        z = f(c, z);
        if z.norm() < 1e-6 {
            return Err(Error::Period(format!("center for {rot} has period {m}")));
        }
    }
    Ok(c)
}

/// The α fixed point continued from the cardioid root of `rot`, with multiplier `2α`.
pub fn alpha_fixed_point(c: Pt, rot: RotationNumber) -> Result<(Pt, Pt)> {
    // principal square root is continuous along the segment from the root unless
    // 1 - 4c crosses the negative real axis
    let root = cardioid_root(rot);
    for k in 0..=64 {
        let ck = root + (c - root) * (k as f64 / 64.0);
        let w = Pt::new(1.0, 0.0) - 4.0 * ck;
        if w.re < 0.0 && w.im.abs() < 1e-12 {
            return Err(Error::Precondition("branch of α is not continuous along the path".into()));
        }
    }
    let alpha = (Pt::new(1.0, 0.0) - (Pt::new(1.0, 0.0) - 4.0 * c).sqrt()) / 2.0;
    let mult = 2.0 * alpha;
    if mult.norm() <= 1.0 + 1e-12 {
        return Err(Error::Precondition(format!("α = {alpha} is not repelling (|multiplier| = {:.6})", mult.norm())));
    }
    Ok((alpha, mult))
}

/// All solutions of `f^j(z) = 0`, `j = 1..depth`, with their depth.
pub fn zero_preimages(c: Pt, depth: u32) -> Vec<(u32, Pt)> {
    let mut out = Vec::new();
    let mut level = vec![Pt::new(0.0, 0.0)];
    for j in 1..=depth {
        let mut next = Vec::with_capacity(level.len() * 2);
        for w in &level {
            let s = (w - c).sqrt();
            next.push(s);
            next.push(-s);
        }
        out.extend(next.iter().map(|&z| (j, z)));
        level = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot(p: u32, q: u32) -> RotationNumber {
        RotationNumber::new(p, q).unwrap()
    }

    #[test]
    fn rotation_validation() {
        assert!(RotationNumber::new(2, 4).is_err());
        assert!(RotationNumber::new(0, 3).is_err());
        assert!(RotationNumber::new(1, 1).is_err());
        assert!(RotationNumber::new(2, 5).is_ok());
    }

    #[test]
    fn roots() {
        assert!((cardioid_root(rot(1, 2)) - Pt::new(-0.75, 0.0)).norm() < 1e-15);
        assert!((cardioid_root(rot(1, 3)) - Pt::new(-0.125, 0.649519052838329)).norm() < 1e-6);
        for (p, q) in [(1, 3), (2, 5), (1, 7)] {
            let r = rot(p, q);
            let c = cardioid_root(r);
            let a = (Pt::new(1.0, 0.0) - (Pt::new(1.0, 0.0) - 4.0 * c).sqrt()) / 2.0;
            assert!((2.0 * a - r.multiplier()).norm() < 1e-10);
        }
    }

    #[test]
    fn centers() {
        assert!((satellite_center(rot(1, 2)).unwrap() - Pt::new(-1.0, 0.0)).norm() < 1e-14);
        // root of c³ + 2c² + c + 1 in the upper half plane
        let c3 = satellite_center(rot(1, 3)).unwrap();
        assert!((c3 - Pt::new(-0.12256116687665362, 0.7448617666197442)).norm() < 1e-12);
        assert!((c3 * c3 * c3 + 2.0 * c3 * c3 + c3 + 1.0).norm() < 1e-12);
        let c4 = satellite_center(rot(1, 4)).unwrap();
        assert!((c4 - Pt::new(0.28227139, 0.53006062)).norm() < 1e-7);
        let (_, m) = alpha_fixed_point(c4, rot(1, 4)).unwrap();
        assert!(m.norm() > 1.0);
        assert!(iterate(c4, Pt::new(0.0, 0.0), 4).norm() < 1e-12);
    }

    #[test]
    fn alpha_cases() {
        assert!(alpha_fixed_point(Pt::new(0.0, 0.0), rot(1, 2)).is_err());
        assert!(alpha_fixed_point(Pt::new(-0.75, 0.0), rot(1, 2)).is_err());
        let (a, m) = alpha_fixed_point(Pt::new(-1.0, 0.0), rot(1, 2)).unwrap();
        assert!((a.re - (1.0 - 5f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((m.re + 1.2360679774997896).abs() < 1e-14);
    }

    #[test]
    fn preimages_of_zero() {
        let pre = zero_preimages(Pt::new(-1.0, 0.0), 1);
        assert_eq!(pre.len(), 2);
        assert!((pre[0].1 - Pt::new(1.0, 0.0)).norm() < 1e-15);
    }
}
