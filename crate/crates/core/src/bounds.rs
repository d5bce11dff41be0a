//! Explicit inequalities for hitting-time densities, conditional survival
//! and the certified dilation gap. Time is normalised so that `T = 1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::domain::{Beta, DomainCertificate};
use crate::error::{precondition, Error, Result};

/// Message returned when the gap constant is requested with `K = 0`.
pub const K_ZERO_MESSAGE: &str =
    "Theorem 1 constant undefined at K=0; pass a positive Lipschitz certificate";

/// A bound value together with its clip to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub raw: f64,
    pub probability: f64,
}

impl BoundValue {
    fn new(raw: f64) -> Self {
        BoundValue { raw, probability: raw.clamp(0.0, 1.0) }
    }
}

/// Which side of a regime split a formula is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `t` below the split (`β/K` or `r/K`).
    Early,
    /// `t` at or above the split.
    Late,
}

/// `(m, K, β_eff, γ)` with `β_eff = min(β, K/2)` and `K > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub m: usize,
    pub k: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// `min(β, K/2)`; the "any radius" flag maps to `K/2`.
pub fn beta_eff(beta: Beta, k: f64) -> f64 {
    match beta {
        Beta::Any => k / 2.0,
        Beta::Value(b) => b.min(k / 2.0),
    }
}

impl BoundParams {
    pub fn new(m: usize, k: f64, beta: Beta, gamma: f64) -> Result<Self> {
        if m == 0 {
            return Err(precondition("dimension m must be >= 1"));
        }
        if k == 0.0 {
            return Err(Error::UndefinedConstant(K_ZERO_MESSAGE.into()));
        }
        if !(k > 0.0) || !k.is_finite() {
            return Err(precondition(format!("K must be positive and finite, got {k}")));
        }
        if let Beta::Value(b) = beta {
            if !(b > 0.0) || !b.is_finite() {
                return Err(precondition(format!("beta must be positive and finite, got {b}")));
            }
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(precondition(format!("gamma must be finite and >= 0, got {gamma}")));
        }
        Ok(BoundParams { m, k, beta: beta_eff(beta, k), gamma })
    }

    pub fn from_certificate(cert: &DomainCertificate) -> Result<Self> {
        cert.validate()?;
        Self::new(cert.m, cert.k, cert.beta, cert.gamma)
    }

    /// The regime split `β/K`.
    pub fn split(&self) -> f64 {
        self.beta / self.k
    }

    fn m1(&self) -> f64 {
        self.m as f64 - 1.0
    }
}

#[inline]
fn pos(x: f64) -> f64 {
    x.max(0.0)
}

fn check_unit_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return Err(precondition(format!("t must lie in (0, 1), got {t}")));
    }
    Ok(())
}

/// Gap constant `c` of the dilation theorem and the intermediate `c*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Constant {
    pub params: BoundParams,
    pub c_star: f64,
    pub c: f64,
}

/// `ε`, the constant and the certified gap `min(1, cε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedBound {
    pub epsilon: f64,
    pub c: f64,
    pub c_star: f64,
    pub certified_gap: f64,
    pub beta_eff: f64,
}

/// The constant for a certificate of a domain normalised to `T = 1`.
pub fn theorem1_constant(cert: &DomainCertificate) -> Result<Theorem1Constant> {
    if (cert.horizon - 1.0).abs() > 1e-12 {
        return Err(precondition(format!(
            "the certificate has T = {}; normalise the domain to T = 1 first",
            cert.horizon
        )));
    }
    Ok(theorem1_constant_from(BoundParams::from_certificate(cert)?))
}

pub fn theorem1_constant_from(p: BoundParams) -> Theorem1Constant {
    let (m, k, b, g) = (p.m as f64, p.k, p.beta, p.gamma);
    let s = (2.0 / PI).sqrt();
    let c_star = s
        + 8.0 * m * m * g * s * ((k / (PI * b)).sqrt() + 2.0 * (b + 2.0) + (m - 1.0) / b + k);
    let c = 2.0 * (c_star + (2.0 * k / (PI * b)).sqrt() + 2.0 * (m - 1.0) / b + k);
    Theorem1Constant { params: p, c_star, c }
}

impl Theorem1Constant {
    /// Attaches `ε`; rejects `ε > β_eff/2` and negative `ε`.
    pub fn certify(&self, eps: f64) -> Result<CertifiedBound> {
        let limit = self.params.beta / 2.0;
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(precondition(format!("eps must be finite and >= 0, got {eps}")));
        }
        if eps > limit {
            return Err(precondition(format!(
                "eps = {eps} exceeds beta_eff/2 = {limit} (beta_eff = {})",
                self.params.beta
            )));
        }
        Ok(CertifiedBound {
            epsilon: eps,
            c: self.c,
            c_star: self.c_star,
            certified_gap: (self.c * eps).min(1.0),
            beta_eff: self.params.beta,
        })
    }
}

/// Envelope for the density of the first exit time on `(0, 1)`.
pub fn density_envelope(t: f64, p: &BoundParams) -> Result<f64> {
    check_unit_time(t)?;
    let branch = if t < p.split().min(1.0) { Branch::Early } else { Branch::Late };
    Ok(density_envelope_branch(t, p, branch))
}

/// One branch of [`density_envelope`], evaluated regardless of `t`'s side.
pub fn density_envelope_branch(t: f64, p: &BoundParams, branch: Branch) -> f64 {
    let (k, b) = (p.k, p.beta);
    let scale = 8.0 * (p.m * p.m) as f64 * p.gamma;
    match branch {
        Branch::Early => {
            scale * ((1.0 / (PI * t)).sqrt() + p.m1() / (2.0 * b - k * t) + 2.0 * k + 2.0 / t)
        }
        Branch::Late => {
            scale * ((k / (PI * b)).sqrt() + (b + 2.0) / (2.0 * t - b / k) + p.m1() / b + k)
        }
    }
}

/// Minimum of [`density_envelope`] over `[lo, hi] ⊂ (0, 1]`.
///
/// Each branch is convex in `t`, so a golden-section search per branch
/// plus the end points finds the minimum.
pub fn density_envelope_min(lo: f64, hi: f64, p: &BoundParams) -> Result<f64> {
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(precondition(format!("need 0 <= lo < hi <= 1, got [{lo}, {hi}]")));
    }
    let split = p.split().min(1.0);
    let mut best = f64::INFINITY;
    if lo < split {
        let a = lo.max(1e-300);
        let b = hi.min(split);
        let f = |t: f64| density_envelope_branch(t, p, Branch::Early);
        best = best.min(golden_min(f, a, b)).min(f(b));
        if lo > 0.0 {
            best = best.min(f(lo));
        }
    }
    if hi >= split {
        let a = lo.max(split);
        let f = |t: f64| density_envelope_branch(t, p, Branch::Late);
        best = best.min(golden_min(f, a, hi)).min(f(a)).min(f(hi));
    }
    Ok(best)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

/// Bound on `P(τ > t | W_t = z)` from `‖z‖` and `r = ρ(z, ∂G_t)`.
pub fn survival_given_endpoint_bound(
    t: f64,
    z_norm: f64,
    r: f64,
    p: &BoundParams,
) -> Result<BoundValue> {
    check_unit_time(t)?;
    if !(r > 0.0) {
        return Err(precondition(format!("r must be positive, got {r}")));
    }
    if !(z_norm >= 0.0) {
        return Err(precondition(format!("|z| must be >= 0, got {z_norm}")));
    }
    let branch = if t < p.split() { Branch::Early } else { Branch::Late };
    Ok(BoundValue::new(survival_given_endpoint_branch(t, z_norm, r, p, branch)))
}

pub fn survival_given_endpoint_branch(
    t: f64,
    z_norm: f64,
    r: f64,
    p: &BoundParams,
    branch: Branch,
) -> f64 {
    let (k, b) = (p.k, p.beta);
    2.0 * r
        * match branch {
            Branch::Early => {
                (1.0 / (PI * t)).sqrt()
                    + 2.0 * (z_norm + r) / t
                    + p.m1() / (2.0 * b - k * t)
                    + 2.0 * k
            }
            Branch::Late => {
                (k / (PI * b)).sqrt()
                    + (z_norm + r + b / 2.0) / (t - b / (2.0 * k))
                    + p.m1() / b
                    + k
            }
        }
}

/// Bound on `P_x(τ(C(t, β)) > u | W_t = y)` for the truncated cone
/// `C(t, β) = {(s, x) : ‖x‖ ≤ β − K s}`.
pub fn bridge_cone_survival_bound(
    u: f64,
    t: f64,
    x_norm: f64,
    y_norm: f64,
    p: &BoundParams,
) -> Result<BoundValue> {
    let (k, b) = (p.k, p.beta);
    if !(x_norm >= b) {
        return Err(precondition(format!("|x| = {x_norm} must be >= beta = {b}")));
    }
    if !(u > 0.0) {
        return Err(precondition(format!("u must be positive, got {u}")));
    }
    if !(t > 0.0) || !(y_norm >= 0.0) {
        return Err(precondition("t must be positive and |y| >= 0"));
    }
    let branch = if t < b / k {
        if u > t / 2.0 {
            return Err(precondition(format!(
                "u = {u} must be <= t/2 = {} when t < beta/K",
                t / 2.0
            )));
        }
        Branch::Early
    } else {
        if u > b / (2.0 * k) {
            return Err(precondition(format!(
                "u = {u} must be <= beta/(2K) = {} when t >= beta/K",
                b / (2.0 * k)
            )));
        }
        Branch::Late
    };
    Ok(BoundValue::new(bridge_cone_survival_branch(u, t, x_norm, y_norm, p, branch)))
}

pub fn bridge_cone_survival_branch(
    u: f64,
    t: f64,
    x_norm: f64,
    y_norm: f64,
    p: &BoundParams,
    branch: Branch,
) -> f64 {
    let (k, b) = (p.k, p.beta);
    let drift = match branch {
        Branch::Early => 2.0 * (y_norm - b) / t + p.m1() / (2.0 * b - k * t) + 2.0 * k,
        Branch::Late => (y_norm - b / 2.0) / (t - b / (2.0 * k)) + p.m1() / b + k,
    };
    (x_norm - b) * ((2.0 / (PI * u)).sqrt() + 2.0 * pos(drift))
}

/// Bound on `P(τ_t < t + h | W_t = z)` with `r = ρ(z, ∂G_t)`. Only `m`
/// and `K` are used; `K = 0` is allowed here.
pub fn quick_exit_bound(h: f64, r: f64, t: f64, m: usize, k: f64) -> Result<BoundValue> {
    if !(r > 0.0) {
        return Err(precondition(format!("r must be positive, got {r}")));
    }
    if !(k >= 0.0) || m == 0 {
        return Err(precondition("need K >= 0 and m >= 1"));
    }
    if !(0.0..1.0).contains(&t) {
        return Err(precondition(format!("t must lie in [0, 1), got {t}")));
    }
    let h_max = (r / k).min(1.0 - t);
    if !(h > 0.0 && h < h_max) {
        return Err(precondition(format!(
            "h = {h} must lie in (0, min(r/K, 1-t)) = (0, {h_max})"
        )));
    }
    let m = m as f64;
    Ok(BoundValue::new(2.0 * m * (r * k / m - r * r / (2.0 * h * m)).exp()))
}

/// Bound on `P_x(τ(C(t, r)) > t)` for Brownian motion started at `‖x‖ > r`
/// outside the shrinking ball of radius `r − K s`.
pub fn cone_survival_bound(t: f64, x_norm: f64, r: f64, k: f64, m: usize) -> Result<BoundValue> {
    if !(r > 0.0 && r < x_norm) {
        return Err(precondition(format!("need 0 < r < |x|, got r = {r}, |x| = {x_norm}")));
    }
    if !(t > 0.0) || !(k >= 0.0) || m == 0 {
        return Err(precondition("need t > 0, K >= 0 and m >= 1"));
    }
    let branch = if t < r / k { Branch::Early } else { Branch::Late };
    Ok(BoundValue::new(cone_survival_branch(t, x_norm, r, k, m, branch)))
}

pub fn cone_survival_branch(t: f64, x_norm: f64, r: f64, k: f64, m: usize, branch: Branch) -> f64 {
    let m1 = m as f64 - 1.0;
    2.0 * (x_norm - r)
        * match branch {
            Branch::Early => (1.0 / (PI * t)).sqrt() + m1 / (2.0 * r - k * t) + k,
            Branch::Late => (k / (PI * r)).sqrt() + m1 / r + k,
        }
}

/// Bound on `P(sup_{0≤s≤t} (W_s − c s) < ε)`.
pub fn linear_noncrossing_bound(t: f64, c: f64, eps: f64) -> Result<BoundValue> {
    if !(t > 0.0) || !(eps > 0.0) || c.is_nan() {
        return Err(precondition(format!("need t > 0 and eps > 0, got t = {t}, eps = {eps}")));
    }
    Ok(BoundValue::new(eps * ((2.0 / (PI * t)).sqrt() + 2.0 * pos(c))))
}
