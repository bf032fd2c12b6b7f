//! Geodesic-length lower bounds obtained from annulus modulus bounds through `ψ`.
//!
//! A simple closed geodesic of length `ℓ` has a homotopic annulus with modulus in
//! `[ψ⁻¹(ℓ), π/ℓ]`, so an upper bound `m` on moduli forces `ℓ ≥ ψ(m)`.

use crate::bounds::pc1_bound_real;
use crate::error::{domain, Result};
use crate::fmt::ser12;
use crate::specfun::{psi, psi_inv};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

/// Modulus range `(ψ⁻¹(ℓ), π/ℓ)` of the widest annulus around a geodesic of length `ℓ`.
pub fn annulus_modulus_interval(length: f64) -> Result<(f64, f64)> {
    if !(length > 0.0) || !length.is_finite() {
        return domain(format!("length must be positive and finite, got {length}"));
    }
    let lo = psi_inv(length)?;
    let hi = PI / length;
    debug_assert!(lo <= hi);
    Ok((lo, hi))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthBound {
    pub s: f64,
    pub d_star: u64,
    pub modulus_bound: f64,
    pub length_lower: f64,
}

/// `ψ((d*)² π / ln(4(s+1)))`.
pub fn length_lower_bound(s: u64, d_star: u64) -> Result<LengthBound> {
    length_lower_bound_real(s as f64, d_star)
}

/// [`length_lower_bound`] with `s` extended to reals.
pub fn length_lower_bound_real(s: f64, d_star: u64) -> Result<LengthBound> {
    if d_star < 1 {
        return domain("d* must be at least 1");
    }
    let modulus_bound = pc1_bound_real(s, d_star as f64)?;
    Ok(LengthBound { s, d_star, modulus_bound, length_lower: psi(modulus_bound)? })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRow {
    #[serde(serialize_with = "ser12")]
    pub s: f64,
    pub d_star: u64,
    #[serde(serialize_with = "ser12")]
    pub modulus_bound: f64,
    #[serde(serialize_with = "ser12")]
    pub length_lower: f64,
    #[serde(serialize_with = "ser12")]
    pub ratio_to_lnln: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticTable {
    pub rows: Vec<AsymptoticRow>,
    /// Window the ratio `ℓ / ln ln s` is expected in.
    pub window: (f64, f64),
    pub in_window: bool,
    /// Ratios for `s >= 1000` are monotone.
    pub monotone_tail: bool,
    /// Successive ratio differences shrink in absolute value.
    pub differences_shrink: bool,
}

pub const RATIO_WINDOW: (f64, f64) = (1.0, 3.0);
pub const MAX_S: f64 = 1e12;

/// Tabulates `length_lower(s, d*) / ln ln s` on an increasing grid with entries in `[16, 10¹²]`.
///
/// The table reports whether the ratios sit in [`RATIO_WINDOW`]; it does not fail when they do not.
pub fn asymptotic_check(s_grid: &[f64], d_star: u64) -> Result<AsymptoticTable> {
    if s_grid.is_empty() {
        return domain("empty s grid");
    }
    if s_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("s grid must be strictly increasing");
    }
    if let Some(s) = s_grid.iter().find(|&&s| !(16.0..=MAX_S).contains(&s)) {
        return domain(format!("grid entry {s} outside [16, 1e12]"));
    }
    let rows = s_grid
        .iter()
        .map(|&s| {
            let b = length_lower_bound_real(s, d_star)?;
            Ok(AsymptoticRow {
                s,
                d_star,
                modulus_bound: b.modulus_bound,
                length_lower: b.length_lower,
                ratio_to_lnln: b.length_lower / s.ln().ln(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = RATIO_WINDOW;
    let in_window = rows.iter().all(|r| r.ratio_to_lnln >= lo && r.ratio_to_lnln <= hi);
    let tail: Vec<f64> = rows.iter().filter(|r| r.s >= 1e3).map(|r| r.ratio_to_lnln).collect();
    let monotone_tail = tail.windows(2).all(|w| w[1] >= w[0]) || tail.windows(2).all(|w| w[1] <= w[0]);
    let diffs: Vec<f64> = rows.windows(2).map(|w| (w[1].ratio_to_lnln - w[0].ratio_to_lnln).abs()).collect();
    let differences_shrink = diffs.windows(2).all(|w| w[1] < w[0]);
    Ok(AsymptoticTable { rows, window: RATIO_WINDOW, in_window, monotone_tail, differences_shrink })
}

pub fn write_asymptotic_csv(path: &Path, t: &AsymptoticTable) -> Result<()> {
    crate::cache::write_csv_atomic(path, &t.rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_at_pi() {
        let (lo, hi) = annulus_modulus_interval(PI).unwrap();
        let expect = 2.0 * (-PI / 2.0).exp().asin() / PI;
        assert!((lo - expect).abs() < 1e-15);
        assert!((lo - 0.133313).abs() < 1e-6);
        assert_eq!(hi, 1.0);
        assert!(annulus_modulus_interval(0.0).is_err());
        assert!(annulus_modulus_interval(-1.0).is_err());
        let (a, b) = annulus_modulus_interval(1e4).unwrap();
        assert!(a < 1e-9 && b < 1e-3);
    }

    #[test]
    fn interval_ordered_on_log_grid() {
        for k in 0..=400 {
            let l = 10f64.powf(-2.0 + 4.0 * k as f64 / 400.0);
            let (lo, hi) = annulus_modulus_interval(l).unwrap();
            assert!(lo <= hi, "{l}");
        }
    }

    #[test]
    fn half_modulus_identity() {
        // ln(4(s+1)) = 8π makes the d* = 2 bound exactly 1/2
        let s = (8.0 * PI).exp() / 4.0 - 1.0;
        let b = length_lower_bound_real(s, 2).unwrap();
        assert!((b.modulus_bound - 0.5).abs() < 1e-14);
        assert!((b.length_lower - 1.734367698877).abs() < 1e-9, "{}", b.length_lower);
        assert!((psi_inv(b.length_lower).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn monotone_in_s_and_dstar() {
        let mut prev = 0.0;
        for s in [2, 10, 100, 10_000] {
            let l = length_lower_bound(s, 2).unwrap().length_lower;
            assert!(l > prev);
            prev = l;
            assert!(length_lower_bound(s, 3).unwrap().length_lower < l);
        }
        let b = length_lower_bound(7, 1).unwrap();
        assert!((b.modulus_bound - PI / 32f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn grid_validation() {
        assert!(asymptotic_check(&[10.0, 100.0], 2).is_err());
        assert!(asymptotic_check(&[100.0, 100.0], 2).is_err());
        assert!(asymptotic_check(&[1e13], 2).is_err());
        let t = asymptotic_check(&[1e3, 1e6], 1).unwrap();
        assert_eq!(t.rows.len(), 2);
    }
}
