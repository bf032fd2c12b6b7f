//! Real parabolic implosion at the period-3 window of `f_a(x) = x² + a`.
//!
//! At `a = -7/4` the map has a 3-cycle of multiplier 1. With `F = f_a³` and `x0` the cycle point
//! whose immediate basin contains 0, the attracting and repelling Fatou coordinates of `F` at
//! `x0` give the Lavaurs maps `g_σ = φ₊⁻¹ ∘ T_σ ∘ φ₋` and the unimodal family `G_σ = f_a² ∘ g_σ`.
//! Perturbing `a` slightly to the right, `f_a^{3N}` approximates `g_σ`, and the renormalization
//! intervals of period `3N + 2` stay of definite size.

use crate::error::{Error, Result};
use crate::fmt::ser12;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

pub const A_PARAM: f64 = -1.75;

/// Fatou coordinates switch from `z` to the local variable `u = z - x0` inside this radius.
const LOCAL: f64 = 1e-2;
/// First stopping depth of the Abel limits; later depths halve it.
const DEPTH0: f64 = 2e-4;
const MAX_STEPS: usize = 100_000;
const CAUCHY_TOL: f64 = 1e-9;
const BISECT_TOL: f64 = 1e-12;
const SIGMA_TOL: f64 = 1e-11;

fn f(a: f64, x: f64) -> f64 {
    x * x + a
}

fn fn_iter(a: f64, x: f64, n: usize) -> f64 {
    (0..n).fold(x, |y, _| y * y + a)
}

fn poly_mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            r[i + j] += a * b;
        }
    }
    r
}

fn horner(p: &[f64], u: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * u + c)
}

fn horner_d(p: &[f64], u: f64) -> f64 {
    p.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, c)| acc * u + k as f64 * c)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LavaursModel {
    pub a: f64,
    /// Parabolic point of `F` whose immediate basin contains 0.
    pub x0: f64,
    pub cycle: [f64; 3],
    /// `(f³)'(x0)` as computed before it is pinned to 1.
    pub multiplier: f64,
    /// Residual of the joint solve of `f³(x) = x`, `(f³)'(x) = 1` for `(a, x)`.
    pub solve_residual: f64,
    #[serde(rename = "A")]
    pub cap_a: f64,
    #[serde(rename = "B")]
    pub cap_b: f64,
    /// Coefficient of the logarithmic term of the Abel function, `1 - B/A²`.
    pub kappa: f64,
    /// Coefficient of the linear correction of the Abel function.
    pub gamma: f64,
    /// `F(x0 + u) - x0` as a polynomial in `u`, constant and linear coefficients pinned to 0 and 1.
    pub taylor: Vec<f64>,
    pub c1: f64,
    pub c_m1: f64,
    pub c_m2: f64,
    #[serde(rename = "F0")]
    pub f0: f64,
    /// `φ₋(0) = φ₊(c₋₂)`.
    pub x_cal: f64,
    /// Added to the raw repelling limit to meet the normalization.
    pub plus_shift: f64,
    /// `(x, φ₋(x))` on `[F(0), 0]`.
    pub phi_minus_samples: Vec<[f64; 2]>,
    /// `(x, φ₊(x))` on `[c₁, c₋₂]`.
    pub phi_plus_samples: Vec<[f64; 2]>,
}

/// `(F(x), F'(x), F''(x), ∂_a F, ∂_a F')` for `F = f_a³`.
fn cube_jet(a: f64, x: f64) -> [f64; 5] {
    let (mut z, mut d, mut dd, mut e, mut m) = (x, 1.0, 0.0, 0.0, 0.0);
    for _ in 0..3 {
        let (z2, d2, dd2, e2, m2) = (z * z + a, 2.0 * z * d, 2.0 * (d * d + z * dd), 2.0 * z * e + 1.0, 2.0 * (e * d + z * m));
        (z, d, dd, e, m) = (z2, d2, dd2, e2, m2);
    }
    [z, d, dd, e, m]
}

/// Newton on `{f_a³(x) = x, (f_a³)'(x) = 1}` from `(a, x)`.
fn solve_parabolic(mut a: f64, mut x: f64) -> Result<(f64, f64, f64)> {
    for _ in 0..60 {
        let [fz, d, dd, e, m] = cube_jet(a, x);
        let (g1, g2) = (fz - x, d - 1.0);
        // rows (∂x, ∂a)
        let (j11, j12, j21, j22) = (d - 1.0, e, dd, m);
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Model("singular Jacobian in the parabolic solve".into()));
        }
        let dx = (g1 * j22 - j12 * g2) / det;
        let da = (j11 * g2 - j21 * g1) / det;
        x -= dx;
        a -= da;
        if dx.abs() + da.abs() < 1e-16 {
            break;
        }
    }
    let [fz, d, ..] = cube_jet(a, x);
    Ok((a, x, (fz - x).abs().max((d - 1.0).abs())))
}

impl LavaursModel {
    /// Locates the parabolic parameter, the normal form at `x0`, the marked points and the
    /// normalization of the Fatou coordinates.
    pub fn build() -> Result<Self> {
        let (a_solved, _, res) = solve_parabolic(-1.7, -0.06)?;
        if res > 1e-9 || (a_solved - A_PARAM).abs() > 1e-9 {
            return Err(Error::Model(format!("parabolic solve gave a = {a_solved}, residual {res}")));
        }
        let a = A_PARAM;
        // with a pinned, x0 is the simple root of (f³)' = 1 near the solved point
        let mut x0 = -0.055;
        for _ in 0..50 {
            let [_, d, dd, ..] = cube_jet(a, x0);
            let step = (d - 1.0) / dd;
            x0 -= step;
            if step.abs() < 1e-17 {
                break;
            }
        }
        let [fx0, mult, ..] = cube_jet(a, x0);
        let solve_residual = res.max((fx0 - x0).abs());
        if solve_residual > 1e-9 {
            return Err(Error::Model(format!("parabolic point residual {solve_residual}")));
        }
        let cycle = [x0, f(a, x0), f(a, f(a, x0))];

        let mut p = vec![x0, 1.0];
        for _ in 0..3 {
            p = poly_mul(&p, &p);
            p[0] += a;
        }
        p[0] = 0.0;
        p[1] = 1.0;
        let (ca, cb, cc) = (p[2], p[3], p[4]);
        if !(ca < 0.0) {
            return Err(Error::Model(format!("expected A < 0, got {ca}")));
        }
        let kappa = 1.0 - cb / (ca * ca);
        let gamma = -((cc / ca - 2.0 * cb + ca * ca) + kappa * (cb - ca * ca / 2.0)) / ca;

        let c1 = a;
        let c_m1 = -(-a).sqrt();
        let c_m2 = -(c_m1 - a).sqrt();
        let f0 = fn_iter(a, 0.0, 3);
        let mut m = LavaursModel {
            a,
            x0,
            cycle,
            multiplier: mult,
            solve_residual,
            cap_a: ca,
            cap_b: cb,
            kappa,
            gamma,
            taylor: p,
            c1,
            c_m1,
            c_m2,
            f0,
            x_cal: 0.0,
            plus_shift: 0.0,
            phi_minus_samples: Vec::new(),
            phi_plus_samples: Vec::new(),
        };
        if !(c1 < c_m1 && c_m1 < c_m2 && c_m2 < x0 && x0 < f0 && f0 < 0.0) {
            return Err(Error::Model("marked points are not ordered c1 < c-1 < c-2 < x0 < F(0) < 0".into()));
        }
        m.x_cal = m.attracting_raw(0.0)?;
        m.plus_shift = m.x_cal - m.repelling_raw(c_m2)?;
        let k = 20;
        for i in 0..=k {
            let x = f0 * (1.0 - i as f64 / k as f64);
            m.phi_minus_samples.push([x, m.fatou_minus(x)?]);
            let y = c1 + (c_m2 - c1) * i as f64 / k as f64;
            m.phi_plus_samples.push([y, m.fatou_plus(y)?]);
        }
        Ok(m)
    }

    pub fn f(&self, x: f64) -> f64 {
        f(self.a, x)
    }

    pub fn big_f(&self, x: f64) -> f64 {
        fn_iter(self.a, x, 3)
    }

    /// The increasing branch `[c₁, x0] → [c₋₂, x0]` of `F⁻¹`.
    pub fn big_f_inv(&self, z: f64) -> f64 {
        let a = self.a;
        -(-(((z - a).max(0.0)).sqrt() - a).max(0.0).sqrt() - a).max(0.0).sqrt()
    }

    fn fu(&self, u: f64) -> f64 {
        horner(&self.taylor, u)
    }

    fn fu_inv(&self, u: f64) -> f64 {
        let mut v = u - self.cap_a * u * u;
        for _ in 0..30 {
            let step = (self.fu(v) - u) / horner_d(&self.taylor, v);
            v -= step;
            if step.abs() <= 1e-17 * v.abs() {
                break;
            }
        }
        v
    }

    /// Approximate Abel function of `F` near `x0` in the local variable.
    pub fn abel(&self, u: f64) -> f64 {
        -1.0 / (self.cap_a * u) + self.kappa * u.abs().ln() + self.gamma * u
    }

    fn abel_inv(&self, t: f64, negative: bool) -> f64 {
        let mut u = -1.0 / (self.cap_a * t);
        if (u < 0.0) != negative {
            u = -u;
        }
        for _ in 0..60 {
            let d = 1.0 / (self.cap_a * u * u) + self.kappa / u + self.gamma;
            let step = (self.abel(u) - t) / d;
            let mut next = u - step;
            if (next < 0.0) != negative || next == 0.0 {
                next = u / 2.0;
            }
            if (next - u).abs() <= 1e-16 * u.abs() {
                u = next;
                break;
            }
            u = next;
        }
        u
    }

    /// Richardson-extrapolated Abel limit along an orbit whose local variable tends to 0.
    /// `stages` yields `(value, u)` each time `|u|` first drops below the next depth.
    fn extrapolate(stages: impl Iterator<Item = Result<(f64, f64)>>) -> Result<f64> {
        let mut prev: Option<(f64, f64)> = None;
        let mut prev_est: Option<f64> = None;
        for st in stages {
            let (v, u) = st?;
            log::trace!("abel stage {v:.15} at u = {u:e}");
            if let Some((v1, u1)) = prev {
                let (a2, b2) = (u1 * u1, u * u);
                let est = (v * a2 - v1 * b2) / (a2 - b2);
                if let Some(pe) = prev_est {
                    if (est - pe).abs() < CAUCHY_TOL {
                        return Ok(est);
                    }
                }
                prev_est = Some(est);
            }
            prev = Some((v, u));
        }
        Err(Error::Convergence(format!("Abel limit not Cauchy at {CAUCHY_TOL} within {MAX_STEPS} steps")))
    }

    fn attracting_raw(&self, z: f64) -> Result<f64> {
        let mut n = 0usize;
        let mut zz = z;
        while !(zz - self.x0 > 0.0 && zz - self.x0 < LOCAL) {
            zz = self.big_f(zz);
            n += 1;
            if n > MAX_STEPS || !zz.is_finite() || zz.abs() > 2.0 {
                return Err(Error::Domain(format!("orbit of {z} does not enter the attracting petal")));
            }
        }
        let mut u = zz - self.x0;
        let mut depth = DEPTH0;
        let stages = std::iter::from_fn(move || {
            if n > MAX_STEPS {
                return None;
            }
            while u > depth {
                u = self.fu(u);
                n += 1;
                if n > MAX_STEPS {
                    return None;
                }
            }
            depth /= 2.0;
            Some(Ok((self.abel(u) - n as f64, u)))
        });
        Self::extrapolate(stages)
    }

    fn repelling_raw(&self, z: f64) -> Result<f64> {
        if !(z >= self.c1 - 1e-15 && z < self.x0) {
            return Err(Error::Domain(format!("repelling coordinate needs c1 <= z < x0, got {z}")));
        }
        let mut n = 0usize;
        let mut zz = z.max(self.c1);
        while zz - self.x0 <= -LOCAL {
            zz = self.big_f_inv(zz);
            n += 1;
            if n > MAX_STEPS {
                return Err(Error::Convergence("backward orbit does not reach x0".into()));
            }
        }
        let mut u = zz - self.x0;
        let mut depth = DEPTH0;
        let stages = std::iter::from_fn(move || {
            if n > MAX_STEPS {
                return None;
            }
            while u < -depth {
                u = self.fu_inv(u);
                n += 1;
                if n > MAX_STEPS {
                    return None;
                }
            }
            depth /= 2.0;
            Some(Ok((self.abel(u) + n as f64, u)))
        });
        Self::extrapolate(stages)
    }

    fn repelling_raw_inv(&self, w: f64) -> Result<f64> {
        let mut depth = DEPTH0;
        let stages = std::iter::from_fn(|| {
            let t0 = self.abel(-depth);
            let n = (w - t0).ceil().max(0.0) as usize;
            if n > MAX_STEPS {
                return None;
            }
            let mut u = self.abel_inv(w - n as f64, true);
            let u_start = u;
            let mut k = 0;
            while k < n && u.abs() < LOCAL {
                u = self.fu(u);
                k += 1;
            }
            let mut z = self.x0 + u;
            for _ in k..n {
                z = self.big_f(z);
            }
            depth /= 2.0;
            Some(Ok((z, u_start)))
        });
        Self::extrapolate(stages)
    }

    /// Attracting Fatou coordinate, defined on points whose `F`-orbit enters `(x0, x0 + 0.01)`.
    pub fn fatou_minus(&self, z: f64) -> Result<f64> {
        self.attracting_raw(z)
    }

    /// Repelling Fatou coordinate on `[c₁, x0)`.
    pub fn fatou_plus(&self, z: f64) -> Result<f64> {
        Ok(self.repelling_raw(z)? + self.plus_shift)
    }

    /// Inverse of [`fatou_plus`](Self::fatou_plus) for `w <= X + 1`.
    pub fn fatou_plus_inv(&self, w: f64) -> Result<f64> {
        if !(w <= self.x_cal + 1.0 + 1e-12) {
            return Err(Error::Domain(format!("fatou_plus_inv needs w <= X + 1, got {w}")));
        }
        self.repelling_raw_inv(w - self.plus_shift)
    }

    fn check_i_minus(&self, x: f64) -> Result<f64> {
        if !(x.abs() <= -self.f0 + 1e-15) {
            return Err(Error::Domain(format!("{x} is outside [F(0), -F(0)]")));
        }
        Ok(-x.abs())
    }

    /// `g_σ` on `[F(0), -F(0)]`, extended evenly.
    pub fn lavaurs_g(&self, sigma: f64, x: f64) -> Result<f64> {
        if !(sigma <= 0.0) {
            return Err(Error::Domain(format!("σ must be <= 0, got {sigma}")));
        }
        let x = self.check_i_minus(x)?;
        self.fatou_plus_inv(self.fatou_minus(x)? + sigma)
    }

    /// The solution `q_σ ∈ [F(0), 0]` of `g_σ(x) = c₋₁`.
    pub fn q_of(&self, sigma: f64) -> Result<f64> {
        let h = |x: f64| self.lavaurs_g(sigma, x).map(|g| g - self.c_m1);
        bisect(h, self.f0, 0.0, BISECT_TOL).map_err(|e| match e {
            Error::Structure(_) => Error::Structure(format!("c-1 is not in g_σ(I-) for σ = {sigma}")),
            e => e,
        })
    }

    pub fn slice(&self, sigma: f64) -> Result<Slice<'_>> {
        Ok(Slice { m: self, sigma, q: self.q_of(sigma)? })
    }

    /// `G_σ = f² ∘ g_σ` on `[q_σ, -q_σ]`.
    pub fn big_g(&self, sigma: f64, x: f64) -> Result<f64> {
        self.slice(sigma)?.g(x)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::cache::write_atomic(path, self.to_json()?.as_bytes())
    }
}

/// Bisection for an increasing function with a sign change on `[lo, hi]`.
fn bisect(h: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let (hl, hh) = (h(lo)?, h(hi)?);
    if hl > 0.0 || hh < 0.0 {
        return Err(Error::Structure(format!("no sign change on [{lo}, {hi}]: {hl}, {hh}")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if h(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `G_σ` with `q_σ` resolved.
#[derive(Clone, Copy)]
pub struct Slice<'a> {
    pub m: &'a LavaursModel,
    pub sigma: f64,
    pub q: f64,
}

impl Slice<'_> {
    pub fn g(&self, x: f64) -> Result<f64> {
        if !(x.abs() <= -self.q + 1e-12) {
            return Err(Error::Domain(format!("{x} is outside [q_σ, -q_σ] = [{}, {}]", self.q, -self.q)));
        }
        let y = self.m.lavaurs_g(self.sigma, x)?;
        Ok(self.m.f(self.m.f(y)))
    }

    /// Central difference of `G_σ`.
    pub fn dg(&self, x: f64) -> Result<f64> {
        let h = 1e-6 * self.q.abs();
        Ok((self.g(x + h)? - self.g(x - h)?) / (2.0 * h))
    }

    /// The fixed point `β_σ ∈ (q_σ, 0)`.
    pub fn beta(&self) -> Result<f64> {
        let hi = 1e-4 * self.q;
        bisect(|x| self.g(x).map(|g| x - g).map(|v| -v), self.q, hi, 1e-13)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaParams {
    pub sigma0: f64,
    pub sigma_ch: f64,
    pub beta_ch: f64,
    pub q_ch: f64,
    /// `|G²_{σ_Ch}(0) - β_{σ_Ch}|`.
    pub chebyshev_residual: f64,
    /// `G'_{σ_Ch}(β_{σ_Ch})`.
    pub beta_ch_derivative: f64,
}

/// `σ₀` from `g_σ(F(0)) = c₋₁` and the Chebyshev parameter from `G_σ(0) = -β_σ`.
///
/// `G_σ` is even and `β_σ` is fixed, so `G_σ²(0) = β_σ` holds exactly when `G_σ(0) = ±β_σ`, and
/// the positive root is the one in range. Solving that form avoids evaluating `G_σ` outside
/// `[q_σ, -q_σ]` when `G_σ(0)` is large.
pub fn find_sigma_params(m: &LavaursModel) -> Result<SigmaParams> {
    let mut lo = -0.1;
    while m.lavaurs_g(lo, m.f0)? < m.c_m1 {
        lo *= 2.0;
        if lo < -100.0 {
            return Err(Error::Structure("no σ with g_σ(F(0)) = c-1".into()));
        }
    }
    // g_σ(F(0)) decreases in σ
    let sigma0 = bisect(|s| m.lavaurs_g(s, m.f0).map(|g| m.c_m1 - g), lo, 0.0, SIGMA_TOL)?;
    let d = |s: f64| -> Result<f64> {
        let sl = m.slice(s)?;
        Ok(sl.g(0.0)? + sl.beta()?)
    };
    // d decreases from G_{σ0}(0) + β > 0 to β_0 < 0; σ0 itself sits on the edge of the domain of q_σ
    let start = sigma0 * (1.0 - 1e-9);
    let sigma_ch = bisect(|s| d(s).map(|v| -v), start, 0.0, SIGMA_TOL)?;
    let sl = m.slice(sigma_ch)?;
    let beta_ch = sl.beta()?;
    let g0 = sl.g(0.0)?;
    let chebyshev_residual = (sl.g(g0.min(-sl.q))? - beta_ch).abs();
    let beta_ch_derivative = sl.dg(beta_ch)?;
    if !(sigma0 < sigma_ch && sigma_ch < 0.0) {
        return Err(Error::Structure(format!("σ0 = {sigma0}, σ_Ch = {sigma_ch} are not ordered")));
    }
    if !(beta_ch_derivative.abs() > 1.0) {
        return Err(Error::Structure(format!("β_Ch is not repelling: G' = {beta_ch_derivative}")));
    }
    Ok(SigmaParams { sigma0, sigma_ch, beta_ch, q_ch: sl.q, chebyshev_residual, beta_ch_derivative })
}

/// `σ* = σ_Ch + 0.1 |σ_Ch|`.
pub fn default_sigma_star(p: &SigmaParams) -> f64 {
    p.sigma_ch + 0.1 * p.sigma_ch.abs()
}

fn sign_changes(h: impl Fn(f64) -> Result<f64>, lo: f64, hi: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    let mut x_prev = lo;
    let mut h_prev = h(lo)?;
    for k in 1..=n {
        let x = lo + (hi - lo) * k as f64 / n as f64;
        let hx = h(x)?;
        if (h_prev < 0.0) != (hx < 0.0) {
            out.push((x_prev, x));
        }
        (x_prev, h_prev) = (x, hx);
    }
    Ok(out)
}

fn refine_root(h: &impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    let neg_lo = h(lo)? < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (h(mid)? < 0.0) == neg_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicityCheck {
    pub sigma: f64,
    pub beta: f64,
    /// Fixed points of `G_σ` on `L_σ` with their derivatives.
    pub fixed: Vec<[f64; 2]>,
    /// Points of period-2 orbits of `G_σ` on `L_σ` with the derivative of `G_σ²`.
    pub two_cycles: Vec<[f64; 2]>,
    pub invariant: bool,
    pub all_repelling: bool,
}

/// Checks that `G_σ: L_σ → L_σ` is well defined and has no attracting or neutral fixed point or 2-cycle.
pub fn check_no_attracting(m: &LavaursModel, sigma: f64) -> Result<HyperbolicityCheck> {
    let sl = m.slice(sigma)?;
    let beta = sl.beta()?;
    let invariant = sl.g(0.0)? <= -beta;
    let grid = 400;
    let h1 = |x: f64| sl.g(x).map(|g| g - x);
    let mut fixed = Vec::new();
    for (lo, hi) in sign_changes(h1, beta * (1.0 - 1e-6), -beta, grid)? {
        let x = refine_root(&h1, lo, hi)?;
        fixed.push([x, sl.dg(x)?]);
    }
    let mut two_cycles = Vec::new();
    if invariant {
        let h2 = |x: f64| -> Result<f64> { Ok(sl.g(sl.g(x)?)? - x) };
        for (lo, hi) in sign_changes(h2, beta * (1.0 - 1e-6), -beta, grid)? {
            let x = refine_root(&h2, lo, hi)?;
            if fixed.iter().any(|p| (p[0] - x).abs() < 1e-9 * beta.abs().max(1e-12)) {
                continue;
            }
            let d = sl.dg(x)? * sl.dg(sl.g(x)?)?;
            two_cycles.push([x, d]);
        }
    }
    let all_repelling = fixed.iter().chain(two_cycles.iter()).all(|p| p[1].abs() > 1.0);
    Ok(HyperbolicityCheck { sigma, beta, fixed, two_cycles, invariant, all_repelling })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxResult {
    pub n: u32,
    pub a_n: f64,
    pub q_n: u32,
    /// Max of `|f^{3N}(x) - g_{σ*}(x)|` on the comparison grid of `I₋`.
    pub deviation: f64,
    pub sigma_star: f64,
    pub beta_star: f64,
    /// Boundary fixed point of `f^{q_N}` of `L_N = [β_N, -β_N]`, if found.
    pub beta_n: Option<f64>,
    pub beta_n_derivative: Option<f64>,
    pub diam_l: f64,
    pub diam_l_star: f64,
}

impl ApproxResult {
    pub fn diam_ratio(&self) -> f64 {
        self.diam_l / self.diam_l_star
    }
}

pub const APPROX_GRID: usize = 50;
pub const MAX_DEVIATION: f64 = 0.05;
pub const DIAM_FACTOR: f64 = 0.5;

fn deviation(a: f64, n: u32, xs: &[f64], gs: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for (x, g) in xs.iter().zip(gs) {
        let y = fn_iter(a, *x, 3 * n as usize);
        let d = (y - g).abs();
        if !d.is_finite() {
            return f64::INFINITY;
        }
        worst = worst.max(d);
    }
    worst
}

fn golden_min(h: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (h(x1), h(x2));
    for _ in 0..iters {
        if f1 < f2 {
            hi = x2;
            (x2, f2) = (x1, f1);
            x1 = hi - r * (hi - lo);
            f1 = h(x1);
        } else {
            lo = x1;
            (x1, f1) = (x2, f2);
            x2 = lo + r * (hi - lo);
            f2 = h(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Finds `a_N > -7/4` minimizing the deviation of `f_a^{3N}` from `g_{σ*}` on `I₋`, then looks for
/// the symmetric periodic interval of `f_{a_N}` of period `3N + 2` near `L_* = [β*, -β*]`.
///
/// The scan runs in `t = (a - a₀)^{-1/2}`, in which the number of iterates spent passing the
/// parabolic gate grows linearly, up to `t` allowing twice `N` passages.
pub fn approximate_parameter(m: &LavaursModel, sigma_star: f64, n: u32) -> Result<ApproxResult> {
    if n < 1 {
        return Err(Error::Domain("N must be positive".into()));
    }
    let xs: Vec<f64> = (0..APPROX_GRID).map(|i| m.f0 * (1.0 - i as f64 / (APPROX_GRID - 1) as f64)).collect();
    let gs = xs.iter().map(|&x| m.lavaurs_g(sigma_star, x)).collect::<Result<Vec<_>>>()?;
    let sl = m.slice(sigma_star)?;
    let beta_star = sl.beta()?;

    // gate passage takes about π t / sqrt(|A| ∂_a F) iterates of F
    let [_, _, _, da_f, _] = cube_jet(m.a, m.x0);
    let rate = PI / (m.cap_a.abs() * da_f.abs()).sqrt();
    let t_lo = 1.0 / 0.01f64.sqrt();
    let t_hi = (2.0 * n as f64 / rate).max(2.0 * t_lo);
    let dt = 0.02 / rate;
    let probe = [xs[0], xs[APPROX_GRID / 2], xs[APPROX_GRID - 1]];
    let probe_g = [gs[0], gs[APPROX_GRID / 2], gs[APPROX_GRID - 1]];
    let a_of = |t: f64| m.a + 1.0 / (t * t);
    let steps = ((t_hi - t_lo) / dt).ceil() as usize;
    let scan: Vec<f64> = (0..=steps).map(|k| deviation(a_of(t_lo + k as f64 * dt), n, &probe, &probe_g)).collect();
    let mut minima: Vec<(f64, usize)> =
        (1..steps).filter(|&k| scan[k] <= scan[k - 1] && scan[k] <= scan[k + 1] && scan[k].is_finite()).map(|k| (scan[k], k)).collect();
    minima.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best: Option<(f64, f64)> = None;
    for &(_, k) in minima.iter().take(8) {
        let t = t_lo + k as f64 * dt;
        let (tt, dev) = golden_min(|t| deviation(a_of(t), n, &xs, &gs), t - dt, t + dt, 60);
        if best.map_or(true, |b| dev < b.1) {
            best = Some((tt, dev));
        }
    }
    let (t_best, dev) = best.ok_or_else(|| Error::Approximation(format!("no local minimum of the deviation for N = {n}")))?;
    let a_n = a_of(t_best);
    let q_n = 3 * n + 2;
    let mut res = ApproxResult {
        n,
        a_n,
        q_n,
        deviation: dev,
        sigma_star,
        beta_star,
        beta_n: None,
        beta_n_derivative: None,
        diam_l: 0.0,
        diam_l_star: 2.0 * beta_star.abs(),
    };
    if !(dev <= MAX_DEVIATION) {
        return Err(Error::Approximation(format!("N = {n}: minimal deviation {dev:.3e} exceeds {MAX_DEVIATION} (a = {a_n})")));
    }

    // fixed point of f^{q_N} with the sign pattern of β*: negative to the left, positive to the right
    let p = |x: f64| -> Result<f64> { Ok(fn_iter(a_n, x, q_n as usize) - x) };
    let lo = 4.0 * beta_star.min(sl.q / 4.0);
    let mut best_root: Option<f64> = None;
    for (l, h) in sign_changes(p, lo, 0.0, 4000)? {
        if p(l)? < 0.0 && p(h)? > 0.0 {
            let r = refine_root(&p, l, h)?;
            if best_root.map_or(true, |b| (r - beta_star).abs() < (b - beta_star).abs()) {
                best_root = Some(r);
            }
        }
    }
    let beta_n = best_root.ok_or_else(|| Error::Structure(format!("no periodic interval of period {q_n} near L* for N = {n} (deviation {dev:.3e})")))?;
    let mut d = 1.0;
    let mut z = beta_n;
    for _ in 0..q_n {
        d *= 2.0 * z;
        z = z * z + a_n;
    }
    let top = fn_iter(a_n, 0.0, q_n as usize);
    res.beta_n = Some(beta_n);
    res.beta_n_derivative = Some(d);
    if !(d.abs() > 1.0) || !(top <= -beta_n && top >= beta_n) {
        return Err(Error::Structure(format!(
            "[β_N, -β_N] with β_N = {beta_n} is not a periodic interval with repelling boundary (f^q(0) = {top}, derivative {d})"
        )));
    }
    res.diam_l = 2.0 * beta_n.abs();
    Ok(res)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContrastRow {
    pub family: String,
    /// Denominator `q` for satellites, `N` for the Lavaurs sequence.
    pub index: u32,
    pub period: u32,
    #[serde(serialize_with = "ser12")]
    pub param_re: f64,
    #[serde(serialize_with = "ser12")]
    pub param_im: f64,
    /// Measured root-annulus modulus, or `diam(L_N)`.
    #[serde(serialize_with = "ser12")]
    pub value: f64,
    /// Modulus bound, or `0.5 diam(L_*)`.
    #[serde(serialize_with = "ser12")]
    pub reference: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContrastReport {
    pub rows: Vec<ContrastRow>,
    /// Satellite bounds strictly decrease and dominate the measured moduli.
    pub satellite_decay: bool,
    /// Lavaurs intervals stay above the threshold.
    pub lavaurs_bounded_below: bool,
}

/// Side-by-side table of the satellite sweep (moduli under a decaying bound) and the Lavaurs
/// sequence (intervals of definite size).
pub fn contrast_report(sweep: &[crate::bounds::BoundReport], lavaurs: &[ApproxResult], params: &[(u32, crate::geom::Pt)]) -> Result<ContrastReport> {
    if sweep.is_empty() || lavaurs.is_empty() {
        return Err(Error::Report("contrast report needs both satellite and Lavaurs rows".into()));
    }
    let mut rows = Vec::new();
    let mut sat: Vec<_> = sweep.iter().collect();
    sat.sort_by_key(|r| r.q);
    for r in &sat {
        let c = params.iter().find(|(q, _)| *q == r.q).map(|p| p.1).ok_or_else(|| Error::Report(format!("missing parameter for q = {}", r.q)))?;
        rows.push(ContrastRow {
            family: "satellite".into(),
            index: r.q,
            period: r.q,
            param_re: c.re,
            param_im: c.im,
            value: r.measured.value,
            reference: r.bound,
            holds: r.passed,
        });
    }
    let satellite_decay = sat.iter().all(|r| r.passed) && sat.windows(2).all(|w| w[1].bound < w[0].bound);
    for l in lavaurs {
        rows.push(ContrastRow {
            family: "lavaurs".into(),
            index: l.n,
            period: l.q_n,
            param_re: l.a_n,
            param_im: 0.0,
            value: l.diam_l,
            reference: DIAM_FACTOR * l.diam_l_star,
            holds: l.diam_l >= DIAM_FACTOR * l.diam_l_star,
        });
    }
    let lavaurs_bounded_below = lavaurs.iter().all(|l| l.diam_l >= DIAM_FACTOR * l.diam_l_star);
    Ok(ContrastReport { rows, satellite_decay, lavaurs_bounded_below })
}

pub fn write_contrast_csv(path: &Path, r: &ContrastReport) -> Result<()> {
    crate::cache::write_csv_atomic(path, &r.rows)
}

pub fn read_contrast_csv(path: &Path) -> Result<Vec<ContrastRow>> {
    let mut rd = csv::Reader::from_path(path)?;
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}
