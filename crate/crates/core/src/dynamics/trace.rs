//! Predictor–corrector continuation of a closed level curve `{h = 0}`.

use crate::error::{Error, Result};
use crate::geom::Pt;

pub struct TraceParams {
    /// Target arc step.
    pub step: f64,
    /// Step below which tracing gives up.
    pub min_step: f64,
    /// Accepted residual `|h|` after correction.
    pub tol: f64,
    pub max_points: usize,
    pub newton_steps: usize,
}

/// Newton projection onto `{h = 0}` along the gradient.
pub fn project<H>(h: &H, mut z: Pt, tol: f64, steps: usize) -> Option<(Pt, usize)>
where
    H: Fn(Pt) -> (f64, Pt),
{
    for k in 0..=steps {
        let (v, g) = h(z);
        if !v.is_finite() || g.norm_sqr() == 0.0 {
            return None;
        }
        if v.abs() <= tol {
            return Some((z, k));
        }
        if k == steps {
            break;
        }
        z -= g * (v / g.norm_sqr());
    }
    None
}

/// Traces the component of `{h = 0}` through `start`, keeping `{h < 0}` on the left.
/// `h` returns the value and the gradient `∂x h + i ∂y h`; `cap` bounds the step locally.
pub fn trace_closed<H, C>(h: H, cap: C, start: Pt, p: &TraceParams) -> Result<Vec<Pt>>
where
    H: Fn(Pt) -> (f64, Pt),
    C: Fn(Pt) -> f64,
{
    let (z0, _) = project(&h, start, p.tol, 20).ok_or_else(|| Error::Tracing("start point does not project onto the curve".into()))?;
    // tangent with the sublevel set on the left
    let tangent = |z: Pt| -> Option<Pt> {
        let (_, g) = h(z);
        let n = g.norm();
        (n > 0.0 && n.is_finite()).then(|| Pt::new(0.0, 1.0) * g / n)
    };
    let mut pts = vec![z0];
    let mut z = z0;
    let mut t = tangent(z).ok_or_else(|| Error::Tracing("vanishing gradient at start".into()))?;
    let mut ds = p.step.min(cap(z));
    let mut arc = 0.0;
    loop {
        if pts.len() > p.max_points {
            return Err(Error::Tracing(format!("curve did not close within {} points", p.max_points)));
        }
        let pred = z + t * ds;
        let accepted = project(&h, pred, p.tol, p.newton_steps).and_then(|(zn, iters)| {
            let tn = tangent(zn)?;
            let chord = (zn - z).norm();
            let turn = (tn / t).arg().abs();
            (chord < 2.0 * ds && chord > 0.1 * ds && turn < 0.3).then_some((zn, tn, iters))
        });
        match accepted {
            Some((zn, tn, iters)) => {
                arc += (zn - z).norm();
                if pts.len() > 8 && arc > 4.0 * p.step && (zn - z0).norm() < 1.5 * ds {
                    return Ok(pts);
                }
                pts.push(zn);
                z = zn;
                t = tn;
                let grow = if iters <= 2 { 1.5 } else { 1.0 };
                ds = (ds * grow).min(p.step).min(cap(z));
            }
            None => {
                ds *= 0.5;
                if ds < p.min_step {
                    return Err(Error::Tracing(format!("step collapsed to {ds:.3e} at {z}")));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom;

    #[test]
    fn traces_ellipse() {
        // level set of a smooth function whose zero set is an ellipse
        let h = |z: Pt| {
            let v = (z.re / 2.0).powi(2) + z.im * z.im - 1.0;
            (v, Pt::new(z.re / 2.0, 2.0 * z.im))
        };
        let p = TraceParams { step: 0.01, min_step: 1e-8, tol: 1e-13, max_points: 100_000, newton_steps: 4 };
        let curve = trace_closed(h, |_| f64::INFINITY, Pt::new(2.1, 0.0), &p).unwrap();
        let area = geom::signed_area(&curve);
        assert!(area > 0.0);
        assert!((area - 2.0 * std::f64::consts::PI).abs() < 1e-3);
        assert!(curve.iter().all(|z| h(*z).0.abs() < 1e-12));
    }
}
