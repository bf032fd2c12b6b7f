//! Grötzsch and Teichmüller ring functions, and the length/modulus function psi.
//!
//! Moduli are normalized so the round annulus `r < |z| < R` has modulus `ln(R/r)/(2π)`.

use crate::error::{domain, Error, Result};
use std::f64::consts::{FRAC_PI_2, PI};

const REL_TOL: f64 = 1e-12;

/// Arithmetic-geometric mean of two positive numbers.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 4.0 * f64::EPSILON * a {
            break;
        }
        let m = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = m;
    }
    0.5 * (a + b)
}

/// Complete elliptic integral of the first kind K(k), modulus convention.
pub fn ellip_k(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k) {
        return domain(format!("elliptic modulus {k} outside [0,1)"));
    }
    Ok(FRAC_PI_2 / agm(1.0, ((1.0 - k) * (1.0 + k)).sqrt()))
}

// mu from (r, r') supplied separately so neither loses digits near 0 or 1.
fn mu_pair(r: f64, rp: f64) -> f64 {
    FRAC_PI_2 * agm(1.0, rp) / agm(1.0, r)
}

/// Grötzsch ring function μ(r) = (π/2) K(r')/K(r).
pub fn grotzsch_mu(r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return domain(format!("grotzsch_mu needs 0<r<1, got {r}"));
    }
    Ok(mu_pair(r, ((1.0 - r) * (1.0 + r)).sqrt()))
}

/// Modulus of the Teichmüller ring `C \ ([-1,0] ∪ [eps,∞))`.
pub fn tau_inv(eps: f64) -> Result<f64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return domain(format!("tau_inv needs eps>0, got {eps}"));
    }
    let r = (1.0 / (1.0 + eps)).sqrt();
    let rp = (eps / (1.0 + eps)).sqrt();
    Ok(mu_pair(r, rp) / PI)
}

/// Inverse of [`tau_inv`], by bracketing and bisection in `ln eps`.
pub fn tau(m: f64) -> Result<f64> {
    if !(m > 0.0) || !m.is_finite() {
        return domain(format!("tau needs m>0, got {m}"));
    }
    let f = |x: f64| tau_inv(x.exp()).map(|v| v - m);
    // the lower bound is a good starting point for the bracket
    let x0 = 16f64.ln() - PI / (2.0 * m);
    let (lo, hi) = bracket_increasing(f, x0, 1.0, -700.0, 700.0)?;
    let x = bisect_increasing(f, lo, hi)?;
    Ok(x.exp())
}

/// The explicit lower bound `16 exp(-π/(2m))` for [`tau`].
pub fn tau_lower(m: f64) -> Result<f64> {
    if !(m > 0.0) || m.is_nan() {
        return domain(format!("tau_lower needs m>0, got {m}"));
    }
    Ok(16.0 * (-PI / (2.0 * m)).exp())
}

fn nome_product_log(q: f64) -> f64 {
    // ln ∏ ((1+q^{2n})/(1+q^{2n-1}))^8
    let mut s = 0.0;
    let mut odd = q;
    for _ in 0..400 {
        let even = odd * q;
        s += even.ln_1p() - odd.ln_1p();
        if odd < 1e-20 {
            break;
        }
        odd = even * q;
    }
    8.0 * s
}

/// `ln(tau(m) / tau_lower(m))` from the nome expansion of the elliptic modulus.
///
/// Stays resolvable in f64 where `tau(m)` and `tau_lower(m)` agree to all digits
/// (the excess is about `8 exp(-π/(2m))` for small `m`).
pub fn tau_log_excess(m: f64) -> Result<f64> {
    if !(m > 0.0) || !m.is_finite() {
        return domain(format!("tau_log_excess needs m>0, got {m}"));
    }
    if m <= 0.5 {
        let q = (-PI / (2.0 * m)).exp();
        let lp = nome_product_log(q);
        let rp2 = 16.0 * q * lp.exp();
        Ok(lp - (-rp2).ln_1p())
    } else {
        let q = (-2.0 * PI * m).exp();
        let lp = nome_product_log(q);
        let r2 = 16.0 * q * lp.exp();
        Ok(2.0 * PI * m + PI / (2.0 * m) - 2.0 * 16f64.ln() + (-r2).ln_1p() - lp)
    }
}

/// Second route to [`tau`] through the nome expansion (no root finding).
pub fn tau_nome(m: f64) -> Result<f64> {
    Ok(tau_lower(m)? * tau_log_excess(m)?.exp())
}

/// `ψ⁻¹(x) = 2 arcsin(e^{-x/2}) / x`.
pub fn psi_inv(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("psi_inv needs x>0, got {x}"));
    }
    Ok(2.0 * (-0.5 * x).exp().asin() / x)
}

/// Inverse of [`psi_inv`].
pub fn psi(m: f64) -> Result<f64> {
    if !(m > 0.0) || !m.is_finite() {
        return domain(format!("psi needs m>0, got {m}"));
    }
    // psi_inv is decreasing; flip the sign to reuse the increasing bracket
    let f = |x: f64| psi_inv(x.exp()).map(|v| m - v);
    let (lo, hi) = bracket_increasing(f, 0.0, 1.0, -700.0, 7.3)?;
    Ok(bisect_increasing(f, lo, hi)?.exp())
}

fn bracket_increasing<F>(f: F, x0: f64, step0: f64, min: f64, max: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut lo = x0.clamp(min, max);
    let mut hi = lo;
    let mut step = step0;
    while f(lo)? > 0.0 {
        if lo <= min {
            return Err(Error::Convergence("bracket exhausted below".into()));
        }
        hi = lo;
        lo = (lo - step).max(min);
        step *= 2.0;
    }
    step = step0;
    while f(hi)? < 0.0 {
        if hi >= max {
            return Err(Error::Convergence("bracket exhausted above".into()));
        }
        lo = hi;
        hi = (hi + step).min(max);
        step *= 2.0;
    }
    Ok((lo, hi))
}

// Bisection on ln-scale variables: relative tolerance on exp(x) is an absolute one on x.
fn bisect_increasing<F>(f: F, mut lo: f64, mut hi: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    for _ in 0..300 {
        if hi - lo <= 0.1 * REL_TOL {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let v = f(mid)?;
        if v == 0.0 {
            return Ok(mid);
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Convergence("bisection did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn mu_symmetric_point() {
        assert!((grotzsch_mu(0.5f64.sqrt()).unwrap() - FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn mu_reference_values() {
        // 40-digit elliptic-integral evaluations
        let cases = [
            (0.01, 5.991439546092297),
            (0.2, 2.985565831448941),
            (0.5, 2.009459377005285),
            (0.9, 1.139666644234429),
        ];
        for (r, v) in cases {
            assert!(rel(grotzsch_mu(r).unwrap(), v) < 1e-13, "r={r}");
        }
        assert!((grotzsch_mu(0.01).unwrap() - (400f64).ln()).abs() < 1e-4);
    }

    #[test]
    fn mu_functional_identity() {
        for r in [0.2f64, 0.5, 0.9] {
            let rp = (1.0 - r * r).sqrt();
            let p = grotzsch_mu(r).unwrap() * grotzsch_mu(rp).unwrap();
            assert!((p - PI * PI / 4.0).abs() < 1e-10);
        }
    }

    #[test]
    fn tau_inv_reference_values() {
        let cases = [
            (1e-4, 0.1310856269305646),
            (1e-3, 0.1622582038855191),
            (0.1, 0.3066012570070323),
            (1.0, 0.5),
            (10.0, 0.8153913080475920),
            (1e6, 2.640078076521026),
        ];
        for (e, v) in cases {
            assert!(rel(tau_inv(e).unwrap(), v) < 1e-12, "eps={e}");
        }
        let asym = (16e6f64).ln() / (2.0 * PI);
        assert!((tau_inv(1e6).unwrap() - asym).abs() < 1e-3);
    }

    #[test]
    fn tau_reference_values() {
        let cases = [
            (0.05, 3.633761709319210e-13),
            (0.1, 2.411230547635880e-6),
            (0.25, 0.03033008588991064),
            (0.5, 1.0),
            (1.0, 32.97056274847714),
            (2.0, 17921.45707540001),
            (5.0, 2751969116289.002),
        ];
        for (m, v) in cases {
            assert!(rel(tau(m).unwrap(), v) < 1e-10, "m={m}");
            assert!(rel(tau_nome(m).unwrap(), v) < 1e-12, "nome m={m}");
        }
    }

    #[test]
    fn tau_lower_identities() {
        assert!((tau_lower(PI / 16f64.ln()).unwrap() - 4.0).abs() < 1e-13);
        assert!((tau_lower(PI / (2.0 * 2f64.ln())).unwrap() - 8.0).abs() < 1e-13);
        assert!(tau_lower(1e6).unwrap() < 16.0);
        assert!(tau(1.0).unwrap() > tau_lower(1.0).unwrap());
    }

    #[test]
    fn log_excess_small_m_positive() {
        for m in [0.01, 0.02, 0.05] {
            let ex = tau_log_excess(m).unwrap();
            let q = (-PI / (2.0 * m)).exp();
            assert!(ex > 0.0);
            assert!(rel(ex, 8.0 * q) < 1e-3, "m={m}");
        }
    }

    #[test]
    fn psi_values() {
        let x = 2.0 * 2f64.ln();
        assert!(rel(psi_inv(x).unwrap(), PI / 3.0 / x) < 1e-14);
        // 30-digit root of 2 asin(exp(-l/2)) = l/2
        assert!(rel(psi(0.5).unwrap(), 1.734367698) < 1e-8);
        for v in [0.5, 1.0, 5.0, 20.0] {
            assert!(rel(psi(psi_inv(v).unwrap()).unwrap(), v) < 1e-9);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(grotzsch_mu(0.0).is_err());
        assert!(grotzsch_mu(1.0).is_err());
        assert!(tau_inv(0.0).is_err());
        assert!(tau(-1.0).is_err());
        assert!(tau_lower(0.0).is_err());
        assert!(psi(0.0).is_err());
        assert!(psi_inv(-2.0).is_err());
    }
}
