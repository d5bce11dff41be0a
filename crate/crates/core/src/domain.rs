//! Time-space domains `G ⊂ (0, T) × ℝ^m` and their class parameters.

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::closedform::normal_cdf;
use crate::error::{Error, Result};
use crate::geometry::{dilate, distance, hausdorff_with_complements, Halfspace, Region};
use crate::mc::{map_blocks, pairwise_sum};
use crate::path::{PointPath, Polyline};
use crate::rng::PathRng;

/// Shape family of a domain. Paths are piecewise linear in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainFamily {
    BallTube {
        center: PointPath,
        radius: Polyline,
    },
    /// Sections `Ball(0, u − K t)`.
    TruncatedCone {
        u: f64,
        k_slope: f64,
        dim: usize,
    },
    /// `None` stands for an infinite barrier.
    #[serde(rename = "band1d_tube")]
    Band1DTube {
        #[serde(default)]
        lower: Option<Polyline>,
        #[serde(default)]
        upper: Option<Polyline>,
    },
    AnnulusTube {
        center: PointPath,
        inner: Polyline,
        outer: Polyline,
    },
    PolytopeTube {
        halfspaces: Vec<Halfspace>,
        #[serde(default)]
        translation: Option<PointPath>,
    },
    /// Sections `Ball(c(t), r(t))ᶜ`.
    BallExteriorTube {
        center: PointPath,
        radius: Polyline,
    },
    /// Sections `Ball(0, u − K t)ᶜ`, the whole space once the radius hits 0.
    ConeExterior {
        u: f64,
        k_slope: f64,
        dim: usize,
    },
    /// Every section of `base` dilated by `v` (eroded when `v < 0`).
    Dilated {
        base: Box<DomainFamily>,
        v: f64,
    },
}

/// Serializable description of a domain, as read from configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    #[serde(alias = "T")]
    pub horizon: f64,
    /// Start point of the Brownian motion; the origin when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
    /// Externally tagged, e.g. `{"ball_tube": {"center": …, "radius": …}}`.
    pub family: DomainFamily,
}

/// A validated domain.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSpaceDomain {
    horizon: f64,
    dim: usize,
    start: Vec<f64>,
    family: DomainFamily,
}

/// Builds and validates a domain from its description.
pub fn make_domain(spec: &DomainSpec) -> Result<TimeSpaceDomain> {
    let horizon = spec.horizon;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidDomain(format!("horizon must be positive, got {horizon}")));
    }
    let dim = validate_family(&spec.family, horizon)?;
    let start = match &spec.start {
        Some(s) if s.len() != dim => {
            return Err(Error::DimensionMismatch { expected: dim, got: s.len() })
        }
        Some(s) if s.iter().any(|x| !x.is_finite()) => {
            return Err(Error::InvalidDomain("start must be finite".into()))
        }
        Some(s) => s.clone(),
        None => vec![0.0; dim],
    };
    Ok(TimeSpaceDomain { horizon, dim, start, family: spec.family.clone() })
}

fn covers(knots: &[f64], horizon: f64) -> bool {
    knots[0] <= 0.0 && knots[knots.len() - 1] >= horizon
}

/// Values of a polyline at its knots inside `[0, T]` and at both ends.
fn values_on(p: &Polyline, horizon: f64) -> Vec<f64> {
    let mut v: Vec<f64> = p
        .knots()
        .iter()
        .zip(p.values())
        .filter(|(t, _)| (0.0..=horizon).contains(*t))
        .map(|(_, v)| *v)
        .collect();
    v.push(p.eval(0.0));
    v.push(p.eval(horizon));
    v
}

fn check_scalar(name: &str, p: &Polyline, horizon: f64) -> Result<()> {
    p.validate()
        .map_err(|e| Error::InvalidDomain(format!("{name}: {e}")))?;
    if !covers(p.knots(), horizon) {
        return Err(Error::InvalidDomain(format!("{name} must be defined on [0, {horizon}]")));
    }
    Ok(())
}

fn check_point_path(name: &str, p: &PointPath, horizon: f64) -> Result<usize> {
    p.validate()
        .map_err(|e| Error::InvalidDomain(format!("{name}: {e}")))?;
    if !covers(p.knots(), horizon) {
        return Err(Error::InvalidDomain(format!("{name} must be defined on [0, {horizon}]")));
    }
    Ok(p.dim())
}

fn merged_times(horizon: f64, knot_sets: &[&[f64]]) -> Vec<f64> {
    let mut t: Vec<f64> = knot_sets
        .iter()
        .flat_map(|k| k.iter().copied())
        .filter(|t| (0.0..=horizon).contains(t))
        .chain([0.0, horizon])
        .collect();
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

fn validate_family(f: &DomainFamily, horizon: f64) -> Result<usize> {
    match f {
        DomainFamily::BallTube { center, radius } | DomainFamily::BallExteriorTube { center, radius } => {
            let m = check_point_path("center", center, horizon)?;
            check_scalar("radius", radius, horizon)?;
            if values_on(radius, horizon).iter().any(|r| !(*r > 0.0)) {
                return Err(Error::InvalidDomain("radius path must stay positive on [0, T]".into()));
            }
            Ok(m)
        }
        DomainFamily::TruncatedCone { u, k_slope, dim } => {
            check_cone(*u, *k_slope, *dim)?;
            if !(u - k_slope * horizon > 0.0) {
                return Err(Error::InvalidDomain(format!(
                    "cone radius u - K t reaches {} at t = T; it must stay positive",
                    u - k_slope * horizon
                )));
            }
            Ok(*dim)
        }
        DomainFamily::ConeExterior { u, k_slope, dim } => {
            check_cone(*u, *k_slope, *dim)?;
            Ok(*dim)
        }
        DomainFamily::Band1DTube { lower, upper } => {
            if let Some(l) = lower {
                check_scalar("lower", l, horizon)?;
            }
            if let Some(u) = upper {
                check_scalar("upper", u, horizon)?;
            }
            if let (Some(l), Some(u)) = (lower, upper) {
                for t in merged_times(horizon, &[l.knots(), u.knots()]) {
                    if !(l.eval(t) < u.eval(t)) {
                        return Err(Error::InvalidDomain(format!(
                            "band boundaries cross at t = {t}: lower {} >= upper {}",
                            l.eval(t),
                            u.eval(t)
                        )));
                    }
                }
            }
            Ok(1)
        }
        DomainFamily::AnnulusTube { center, inner, outer } => {
            let m = check_point_path("center", center, horizon)?;
            check_scalar("inner", inner, horizon)?;
            check_scalar("outer", outer, horizon)?;
            for t in merged_times(horizon, &[inner.knots(), outer.knots()]) {
                let (i, o) = (inner.eval(t), outer.eval(t));
                if !(i > 0.0 && i < o) {
                    return Err(Error::InvalidDomain(format!(
                        "annulus needs 0 < inner < outer, got ({i}, {o}) at t = {t}"
                    )));
                }
            }
            Ok(m)
        }
        DomainFamily::PolytopeTube { halfspaces, translation } => {
            let poly = Region::polytope(halfspaces.clone())?;
            if let Some(tr) = translation {
                let m = check_point_path("translation", tr, horizon)?;
                if m != poly.dim() {
                    return Err(Error::DimensionMismatch { expected: poly.dim(), got: m });
                }
            }
            Ok(poly.dim())
        }
        DomainFamily::Dilated { base, v } => {
            if !v.is_finite() {
                return Err(Error::InvalidDomain("dilation v must be finite".into()));
            }
            validate_family(base, horizon)
        }
    }
}

fn check_cone(u: f64, k: f64, dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidDomain("cone dimension must be >= 1".into()));
    }
    if !(u > 0.0) || !u.is_finite() || !(k >= 0.0) || !k.is_finite() {
        return Err(Error::InvalidDomain(format!("cone needs u > 0 and K >= 0, got u={u}, K={k}")));
    }
    Ok(())
}

impl TimeSpaceDomain {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn start(&self) -> &[f64] {
        &self.start
    }

    pub fn family(&self) -> &DomainFamily {
        &self.family
    }

    pub fn spec(&self) -> DomainSpec {
        DomainSpec {
            horizon: self.horizon,
            start: Some(self.start.clone()),
            family: self.family.clone(),
        }
    }

    pub fn with_start(&self, start: Vec<f64>) -> Result<Self> {
        if start.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: start.len() });
        }
        Ok(TimeSpaceDomain { start, ..self.clone() })
    }

    /// The same domain with every section dilated by `v`.
    pub fn dilated(&self, v: f64) -> Self {
        TimeSpaceDomain {
            family: DomainFamily::Dilated { base: Box::new(self.family.clone()), v },
            ..self.clone()
        }
    }

    /// The section `G_t`; `t` is clamped to `[0, T]`.
    pub fn section(&self, t: f64) -> Region {
        section_of(&self.family, t.clamp(0.0, self.horizon), self.dim)
    }

    /// Brownian rescaling to unit horizon: time by `1/T`, space by `1/√T`.
    pub fn normalized(&self) -> Self {
        let tt = self.horizon;
        let s = 1.0 / tt.sqrt();
        TimeSpaceDomain {
            horizon: 1.0,
            dim: self.dim,
            start: self.start.iter().map(|x| x * s).collect(),
            family: rescale_family(&self.family, tt, s),
        }
    }

    /// Closed-form Lipschitz rate `K` of the sections in ρ_H, where the
    /// family admits one.
    pub fn analytic_lipschitz(&self) -> Option<f64> {
        analytic_k(&self.family, self.horizon)
    }
}

fn section_of(f: &DomainFamily, t: f64, dim: usize) -> Region {
    match f {
        DomainFamily::BallTube { center, radius } => Region::Ball {
            center: center.eval(t),
            radius: radius.eval(t),
        },
        DomainFamily::BallExteriorTube { center, radius } => Region::Complement {
            base: Box::new(Region::Ball { center: center.eval(t), radius: radius.eval(t) }),
        },
        DomainFamily::TruncatedCone { u, k_slope, dim } => Region::Ball {
            center: vec![0.0; *dim],
            radius: u - k_slope * t,
        },
        DomainFamily::ConeExterior { u, k_slope, dim } => {
            let r = u - k_slope * t;
            if r > 0.0 {
                Region::Complement {
                    base: Box::new(Region::Ball { center: vec![0.0; *dim], radius: r }),
                }
            } else {
                Region::whole(*dim)
            }
        }
        DomainFamily::Band1DTube { lower, upper } => Region::Band1D {
            lower: lower.as_ref().map_or(f64::NEG_INFINITY, |p| p.eval(t)),
            upper: upper.as_ref().map_or(f64::INFINITY, |p| p.eval(t)),
        },
        DomainFamily::AnnulusTube { center, inner, outer } => Region::Annulus {
            center: center.eval(t),
            inner: inner.eval(t),
            outer: outer.eval(t),
        },
        DomainFamily::PolytopeTube { halfspaces, translation } => {
            let shift = translation.as_ref().map(|p| p.eval(t));
            Region::ConvexPolytope {
                dim,
                halfspaces: halfspaces
                    .iter()
                    .map(|h| Halfspace {
                        normal: h.normal.clone(),
                        offset: h.offset
                            + shift.as_ref().map_or(0.0, |c| crate::geometry::dot(&h.normal, c)),
                    })
                    .collect(),
            }
        }
        DomainFamily::Dilated { base, v } => dilate(&section_of(base, t, dim), *v),
    }
}

fn rescale_family(f: &DomainFamily, tt: f64, s: f64) -> DomainFamily {
    match f {
        DomainFamily::BallTube { center, radius } => DomainFamily::BallTube {
            center: center.rescaled(tt, s),
            radius: radius.rescaled(tt, s),
        },
        DomainFamily::BallExteriorTube { center, radius } => DomainFamily::BallExteriorTube {
            center: center.rescaled(tt, s),
            radius: radius.rescaled(tt, s),
        },
        DomainFamily::TruncatedCone { u, k_slope, dim } => DomainFamily::TruncatedCone {
            u: u * s,
            k_slope: k_slope * tt * s,
            dim: *dim,
        },
        DomainFamily::ConeExterior { u, k_slope, dim } => DomainFamily::ConeExterior {
            u: u * s,
            k_slope: k_slope * tt * s,
            dim: *dim,
        },
        DomainFamily::Band1DTube { lower, upper } => DomainFamily::Band1DTube {
            lower: lower.as_ref().map(|p| p.rescaled(tt, s)),
            upper: upper.as_ref().map(|p| p.rescaled(tt, s)),
        },
        DomainFamily::AnnulusTube { center, inner, outer } => DomainFamily::AnnulusTube {
            center: center.rescaled(tt, s),
            inner: inner.rescaled(tt, s),
            outer: outer.rescaled(tt, s),
        },
        DomainFamily::PolytopeTube { halfspaces, translation } => DomainFamily::PolytopeTube {
            halfspaces: halfspaces
                .iter()
                .map(|h| Halfspace { normal: h.normal.clone(), offset: h.offset * s })
                .collect(),
            translation: translation.as_ref().map(|p| p.rescaled(tt, s)),
        },
        DomainFamily::Dilated { base, v } => DomainFamily::Dilated {
            base: Box::new(rescale_family(base, tt, s)),
            v: v * s,
        },
    }
}

fn analytic_k(f: &DomainFamily, horizon: f64) -> Option<f64> {
    // Slopes on the merged pieces of a centre path and a scalar path.
    let ball_rate = |center: &PointPath, radius: &Polyline| {
        let times = merged_times(horizon, &[center.knots(), radius.knots()]);
        times
            .windows(2)
            .map(|w| {
                let dt = w[1] - w[0];
                distance(&center.eval(w[1]), &center.eval(w[0])) / dt
                    + (radius.eval(w[1]) - radius.eval(w[0])).abs() / dt
            })
            .fold(0.0, f64::max)
    };
    match f {
        // ρ_H of two balls (or their exteriors) is ‖Δc‖ + |Δr|.
        DomainFamily::BallTube { center, radius }
        | DomainFamily::BallExteriorTube { center, radius } => Some(ball_rate(center, radius)),
        DomainFamily::TruncatedCone { k_slope, .. } | DomainFamily::ConeExterior { k_slope, .. } => {
            Some(*k_slope)
        }
        // ρ_H of two intervals is the larger endpoint displacement.
        DomainFamily::Band1DTube { lower, upper } => {
            let slope = |p: &Option<Polyline>| {
                p.as_ref().map_or(0.0, |p| {
                    let times = merged_times(horizon, &[p.knots()]);
                    times
                        .windows(2)
                        .map(|w| (p.eval(w[1]) - p.eval(w[0])).abs() / (w[1] - w[0]))
                        .fold(0.0, f64::max)
                })
            };
            Some(slope(lower).max(slope(upper)))
        }
        DomainFamily::PolytopeTube { translation, .. } => {
            Some(translation.as_ref().map_or(0.0, |p| {
                let times = merged_times(horizon, &[p.knots()]);
                times
                    .windows(2)
                    .map(|w| distance(&p.eval(w[1]), &p.eval(w[0])) / (w[1] - w[0]))
                    .fold(0.0, f64::max)
            }))
        }
        DomainFamily::AnnulusTube { .. } | DomainFamily::Dilated { .. } => None,
    }
}

/// `max ρ_H(G_s, G_t) / (t − s)` over adjacent grid pairs. This is a lower
/// estimate of the true rate `K`.
pub fn estimate_lipschitz(domain: &TimeSpaceDomain, grid: &[f64]) -> Result<f64> {
    if grid.len() < 2 {
        return Err(Error::InvalidGrid("time grid needs at least two points".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidGrid("time grid must be strictly increasing".into()));
    }
    if grid[0] < 0.0 || grid[grid.len() - 1] > domain.horizon {
        return Err(Error::InvalidGrid(format!("time grid must lie in [0, {}]", domain.horizon)));
    }
    let mut best = 0.0f64;
    let mut prev = domain.section(grid[0]);
    for w in grid.windows(2) {
        let next = domain.section(w[1]);
        let d = hausdorff_with_complements(&prev, &next)?.value;
        best = best.max(d / (w[1] - w[0]));
        prev = next;
    }
    Ok(best)
}

/// Default number of uniform grid points for [`estimate_lipschitz_refined`].
pub const DEFAULT_K_GRID: usize = 256;
const MAX_K_GRID: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    pub k: f64,
    pub grid_points: usize,
    pub converged: bool,
}

/// [`estimate_lipschitz`] on uniform grids over `[0, T]`, starting from
/// `initial_points` and doubling until the estimate changes by < 1%.
pub fn estimate_lipschitz_refined(
    domain: &TimeSpaceDomain,
    initial_points: usize,
) -> Result<LipschitzEstimate> {
    let grid = |n: usize| -> Vec<f64> {
        (0..n).map(|i| domain.horizon * i as f64 / (n - 1) as f64).collect()
    };
    let mut n = initial_points.max(2);
    let mut k = estimate_lipschitz(domain, &grid(n))?;
    while n < MAX_K_GRID {
        let n2 = 2 * n - 1;
        let k2 = estimate_lipschitz(domain, &grid(n2))?;
        let settled = (k2 - k).abs() <= 0.01 * k.abs().max(k2.abs());
        n = n2;
        k = k2;
        if settled {
            return Ok(LipschitzEstimate { k, grid_points: n, converged: true });
        }
    }
    Ok(LipschitzEstimate { k, grid_points: n, converged: false })
}

/// Exterior-ball radius of the sections: either a number or any radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Any,
    Value(f64),
}

impl Beta {
    pub fn value(self) -> Option<f64> {
        match self {
            Beta::Any => None,
            Beta::Value(b) => Some(b),
        }
    }
}

impl Serialize for Beta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Beta::Any => s.serialize_str("any"),
            Beta::Value(b) => s.serialize_f64(*b),
        }
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = Beta;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a positive number or the string \"any\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Beta, E> {
                if v == "any" {
                    Ok(Beta::Any)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Beta, E> {
                Ok(Beta::Value(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Beta, E> {
                Ok(Beta::Value(v as f64))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Beta, E> {
                Ok(Beta::Value(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

/// Exterior-ball radius β shared by all boundary points of all sections.
pub fn exterior_ball_radius(domain: &TimeSpaceDomain) -> Result<Beta> {
    beta_of(&domain.family, domain.horizon, 0.0)
}

fn beta_of(f: &DomainFamily, horizon: f64, shift: f64) -> Result<Beta> {
    let positive = |b: f64, what: &str| {
        if b > 0.0 {
            Ok(Beta::Value(b))
        } else {
            Err(Error::NeedsManualCertificate(format!(
                "{what} reaches {b}, no exterior ball of positive radius"
            )))
        }
    };
    match f {
        DomainFamily::BallTube { .. }
        | DomainFamily::TruncatedCone { .. }
        | DomainFamily::Band1DTube { .. }
        | DomainFamily::PolytopeTube { .. } => Ok(Beta::Any),
        DomainFamily::AnnulusTube { inner, .. } => {
            let min = values_on(inner, horizon).into_iter().fold(f64::INFINITY, f64::min);
            positive(min - shift, "the inner radius")
        }
        DomainFamily::BallExteriorTube { radius, .. } => {
            let min = values_on(radius, horizon).into_iter().fold(f64::INFINITY, f64::min);
            positive(min - shift, "the excluded radius")
        }
        DomainFamily::ConeExterior { u, k_slope, .. } => {
            positive(u - k_slope * horizon - shift, "the excluded radius")
        }
        DomainFamily::Dilated { base, v } => beta_of(base, horizon, shift + v),
    }
}

/// Where a certificate parameter came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Analytic,
    /// Deterministic evaluation on a time grid.
    Grid { points: usize },
    Estimated { seed: u64, n: u64 },
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateProvenance {
    #[serde(rename = "K")]
    pub k: Provenance,
    pub beta: Provenance,
    pub gamma: Provenance,
    pub v0: Provenance,
}

/// Class parameters `(m, T, K, β, γ, v₀)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainCertificate {
    pub m: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub beta: Beta,
    pub gamma: f64,
    pub v0: f64,
    pub provenance: CertificateProvenance,
}

impl DomainCertificate {
    /// A hand-written certificate.
    pub fn manual(m: usize, horizon: f64, k: f64, beta: Beta, gamma: f64, v0: f64) -> Self {
        DomainCertificate {
            m,
            horizon,
            k,
            beta,
            gamma,
            v0,
            provenance: CertificateProvenance {
                k: Provenance::Manual,
                beta: Provenance::Manual,
                gamma: Provenance::Manual,
                v0: Provenance::Manual,
            },
        }
    }

    /// Finite, non-negative parameters; `m ≥ 1`, `T > 0`. Positivity of
    /// `K` is left to the bound constructors, which name it explicitly.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| {
            Err(Error::Precondition(format!("certificate {what} must be finite and >= 0, got {v}")))
        };
        if self.m == 0 {
            return Err(Error::Precondition("certificate m must be >= 1".into()));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return bad("T", self.horizon);
        }
        for (what, v) in [("K", self.k), ("gamma", self.gamma), ("v0", self.v0)] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(what, v);
            }
        }
        if let Beta::Value(b) = self.beta {
            if !(b > 0.0) || !b.is_finite() {
                return Err(Error::Precondition(format!(
                    "certificate beta must be positive and finite, got {b}"
                )));
            }
        }
        Ok(())
    }
}

/// Minimum sample count for [`estimate_gamma`].
pub const MIN_GAMMA_SAMPLES: u64 = 10_000;

/// One `(t, v)` cell of the mass-near-boundary estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaCell {
    pub t: f64,
    pub v: f64,
    /// `E[(1 + ‖W_t − x₀‖) 1{0 < ρ(W_t, G_tᶜ) < v}]`.
    pub mass: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    /// `max (mass + 3·stderr) / v` over the grid.
    pub gamma: f64,
    /// Largest grid `v` up to which `mass / v` stays flat within its
    /// confidence band, uniformly over the time grid.
    pub v0: f64,
    pub provenance: Provenance,
    pub cells: Vec<GammaCell>,
}

/// Estimates `γ` and `v₀` of the mass-near-boundary condition.
///
/// Norms are measured from the start point, so an interior start behaves
/// like the origin-anchored case after translation. One-dimensional
/// domains whose sections are single intervals use exact Gaussian strip
/// integrals instead of sampling.
pub fn estimate_gamma(
    domain: &TimeSpaceDomain,
    t_grid: &[f64],
    v_grid: &[f64],
    n: u64,
    seed: u64,
) -> Result<GammaEstimate> {
    if n < MIN_GAMMA_SAMPLES {
        return Err(Error::InsufficientSamples { required: MIN_GAMMA_SAMPLES, got: n });
    }
    if t_grid.is_empty() || v_grid.is_empty() {
        return Err(Error::InvalidGrid("t and v grids must be non-empty".into()));
    }
    for g in [t_grid, v_grid] {
        if g.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidGrid("grids must be strictly increasing".into()));
        }
    }
    if !(t_grid[0] > 0.0) || t_grid[t_grid.len() - 1] > domain.horizon {
        return Err(Error::InvalidGrid(format!("t grid must lie in (0, {}]", domain.horizon)));
    }
    if !(v_grid[0] > 0.0) {
        return Err(Error::InvalidGrid("v grid must be positive".into()));
    }
    let sections: Vec<Region> = t_grid.iter().map(|&t| domain.section(t)).collect();
    let thickness = sections
        .iter()
        .filter_map(|s| s.inradius())
        .fold(f64::INFINITY, f64::min);
    if v_grid[v_grid.len() - 1] >= thickness {
        return Err(Error::InvalidGrid(format!(
            "v grid must stay below the minimum section thickness {thickness}"
        )));
    }
    let x0 = domain.start();
    let intervals: Option<Vec<(f64, f64)>> = sections.iter().map(single_interval).collect();
    if let Some(iv) = intervals.filter(|_| domain.dim == 1) {
        let mut cells = Vec::new();
        for (j, &t) in t_grid.iter().enumerate() {
            for &v in v_grid {
                let (l, u) = iv[j];
                let mass = weighted_gauss_mass(l - x0[0], l + v - x0[0], t)
                    + weighted_gauss_mass(u - v - x0[0], u - x0[0], t);
                cells.push(GammaCell { t, v, mass, stderr: 0.0 });
            }
        }
        let gamma = cells.iter().map(|c| c.mass / c.v).fold(0.0, f64::max);
        return Ok(GammaEstimate {
            gamma,
            v0: v_grid[v_grid.len() - 1],
            provenance: Provenance::Analytic,
            cells,
        });
    }

    let nt = t_grid.len();
    let nv = v_grid.len();
    let vmax = v_grid[nv - 1];
    let m = domain.dim;
    let blocks = map_blocks(n, |from, to| {
        let mut s = vec![0.0; nt * nv];
        let mut s2 = vec![0.0; nt * nv];
        let mut x = vec![0.0; m];
        for path in from..to {
            let mut rng = PathRng::new(seed, path);
            x.copy_from_slice(x0);
            let mut prev_t = 0.0;
            for (j, &t) in t_grid.iter().enumerate() {
                let sd = (t - prev_t).sqrt();
                for xi in x.iter_mut() {
                    *xi += sd * rng.normal();
                }
                prev_t = t;
                let rho = sections[j].sdist(&x);
                if rho > 0.0 && rho < vmax {
                    let w = 1.0 + distance(&x, x0);
                    for (k, &v) in v_grid.iter().enumerate() {
                        if rho < v {
                            s[j * nv + k] += w;
                            s2[j * nv + k] += w * w;
                        }
                    }
                }
            }
        }
        (s, s2)
    });
    let nf = n as f64;
    let mut cells = Vec::with_capacity(nt * nv);
    for j in 0..nt {
        for k in 0..nv {
            let sum = pairwise_sum(&blocks.iter().map(|b| b.0[j * nv + k]).collect::<Vec<_>>());
            let sum2 = pairwise_sum(&blocks.iter().map(|b| b.1[j * nv + k]).collect::<Vec<_>>());
            let mass = sum / nf;
            let var = ((sum2 / nf - mass * mass) * nf / (nf - 1.0)).max(0.0);
            cells.push(GammaCell { t: t_grid[j], v: v_grid[k], mass, stderr: (var / nf).sqrt() });
        }
    }
    let gamma = cells
        .iter()
        .map(|c| (c.mass + 3.0 * c.stderr) / c.v)
        .fold(0.0, f64::max);
    let mut v0 = vmax;
    for j in 0..nt {
        let row = &cells[j * nv..(j + 1) * nv];
        let (r1, s1) = (row[0].mass / row[0].v, row[0].stderr / row[0].v);
        let mut last = 0;
        for (k, c) in row.iter().enumerate() {
            let (r, s) = (c.mass / c.v, c.stderr / c.v);
            if (r - r1).abs() > 3.0 * (s * s + s1 * s1).sqrt() {
                break;
            }
            last = k;
        }
        v0 = v0.min(v_grid[last]);
    }
    Ok(GammaEstimate { gamma, v0, provenance: Provenance::Estimated { seed, n }, cells })
}

fn single_interval(r: &Region) -> Option<(f64, f64)> {
    match r {
        Region::Band1D { lower, upper } => Some((*lower, *upper)),
        Region::Ball { center, radius } if center.len() == 1 => {
            Some((center[0] - radius, center[0] + radius))
        }
        _ => None,
    }
}

/// `∫_a^b (1 + |y|) φ_t(y) dy` for the `N(0, t)` density `φ_t`.
fn weighted_gauss_mass(a: f64, b: f64, t: f64) -> f64 {
    if !(a < b) || a == f64::INFINITY || b == f64::NEG_INFINITY {
        return 0.0;
    }
    let rt = t.sqrt();
    let phi = |y: f64| {
        if y.is_infinite() {
            0.0
        } else {
            (-(y * y) / (2.0 * t)).exp() / (2.0 * std::f64::consts::PI).sqrt()
        }
    };
    let plain = normal_cdf(b / rt) - normal_cdf(a / rt);
    // ∫ y φ_t(y) dy = −√t φ(y/√t); split at 0 for |y|.
    let abs_part = if a >= 0.0 {
        rt * (phi(a) - phi(b))
    } else if b <= 0.0 {
        rt * (phi(b) - phi(a))
    } else {
        rt * (2.0 * phi(0.0) - phi(a) - phi(b))
    };
    plain + abs_part
}
