//! Open regions of ℝ^m described by an exact signed distance.
//!
//! Every [`Region`] is an open set `A` with signed distance
//! `sd(x) = ρ(x, Aᶜ) − ρ(x, A)`, positive inside and negative outside, where
//! `ρ(x, A) = inf_{y∈A} ‖x − y‖`. Membership is `sd(x) > 0`.
//!
//! # Dilation and erosion
//!
//! The two-branch set `A^(v)` is
//!
//! ```text
//! A^(v) = { x : ρ(x, A) < v }            v > 0
//! A^(v) = { x : ρ(x, Aᶜ) ≤ −v }ᶜ         v ≤ 0
//! ```
//!
//! and both branches collapse to the single rule `A^(v) = { x : sd(x) > −v }`:
//!
//! * `v > 0`. Inside `A`, `ρ(x, A) = 0 < v` and `sd(x) > 0 > −v`, so both
//!   sides hold. Outside `A` (which is open, so `x ∈ Aᶜ` gives `ρ(x, Aᶜ) = 0`)
//!   we have `sd(x) = −ρ(x, A)`, hence `ρ(x, A) < v ⇔ sd(x) > −v`.
//! * `v ≤ 0`. The set is `{ ρ(x, Aᶜ) > −v }`. For `x ∉ A` the left side is
//!   `0` and `sd(x) ≤ 0 ≤ −v`, so neither holds. For `x ∈ A`,
//!   `sd(x) = ρ(x, Aᶜ)`, and the two conditions coincide. At `v = 0` this
//!   is `{ ρ(x, Aᶜ) > 0 } = A` because `A` is open.
//!
//! [`dilate`] realises the rule analytically where the shape family is
//! closed under it (balls, bands, annuli, eroded polytopes) and otherwise
//! wraps the region in [`Region::Shifted`], whose signed distance is
//! `sd_base + v`. That value is exact outside convex bases and for every
//! membership query; inside a dilated polytope it only approximates the true
//! distance near rounded corners.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signed distance reported for points of an empty region (and the negated
/// value for the whole space). Finite so sums with dilation shifts stay
/// ordered.
pub const EMPTY_SDIST: f64 = -f64::MAX;

/// Default boundary-sampling pitch for sampled metrics.
pub const DEFAULT_PITCH: f64 = 1e-3;

const NORMAL_TOL: f64 = 1e-9;

/// Half-space `{ x : normal · x < offset }` with a unit normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    /// Builds a half-space from an arbitrary non-zero normal, rescaling both
    /// the normal and the offset so the normal has unit length.
    pub fn normalized(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let n = norm(&normal);
        if !(n > 0.0) || !n.is_finite() || !offset.is_finite() {
            return Err(Error::InvalidRegion(
                "half-space needs a finite non-zero normal and a finite offset".into(),
            ));
        }
        Ok(Halfspace {
            normal: normal.iter().map(|x| x / n).collect(),
            offset: offset / n,
        })
    }

    #[inline]
    fn slack(&self, x: &[f64]) -> f64 {
        self.offset - dot(&self.normal, x)
    }
}

/// An open region of ℝ^m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Region {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    ConvexPolytope {
        dim: usize,
        halfspaces: Vec<Halfspace>,
    },
    /// An open interval of ℝ. Either end may be infinite (`null` in JSON).
    #[serde(rename = "band1d")]
    Band1D {
        #[serde(with = "lower_bound")]
        lower: f64,
        #[serde(with = "upper_bound")]
        upper: f64,
    },
    Annulus {
        center: Vec<f64>,
        inner: f64,
        outer: f64,
    },
    /// `{ x : sd_base(x) > −shift }`, the generic dilation wrapper.
    Shifted {
        base: Box<Region>,
        shift: f64,
    },
    /// The open exterior `{ x : sd_base(x) < 0 }`.
    Complement {
        base: Box<Region>,
    },
    Empty {
        dim: usize,
    },
}

impl Region {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let r = Region::Ball { center, radius };
        r.validate()?;
        Ok(r)
    }

    pub fn band(lower: f64, upper: f64) -> Result<Self> {
        let r = Region::Band1D { lower, upper };
        r.validate()?;
        Ok(r)
    }

    pub fn annulus(center: Vec<f64>, inner: f64, outer: f64) -> Result<Self> {
        let r = Region::Annulus { center, inner, outer };
        r.validate()?;
        Ok(r)
    }

    pub fn polytope(halfspaces: Vec<Halfspace>) -> Result<Self> {
        let dim = halfspaces.first().map(|h| h.normal.len()).unwrap_or(0);
        let r = Region::ConvexPolytope { dim, halfspaces };
        r.validate()?;
        Ok(r)
    }

    /// Axis-aligned open box `∏ (lo_i, hi_i)` as a polytope.
    pub fn aabb(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        let m = lo.len();
        let mut hs = Vec::with_capacity(2 * m);
        for i in 0..m {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            hs.push(Halfspace { normal: e.clone(), offset: hi[i] });
            e[i] = -1.0;
            hs.push(Halfspace { normal: e, offset: -lo[i] });
        }
        Self::polytope(hs)
    }

    pub fn empty(dim: usize) -> Self {
        Region::Empty { dim }
    }

    pub fn whole(dim: usize) -> Self {
        Region::Complement { base: Box::new(Region::Empty { dim }) }
    }

    /// The open exterior of `self`; double complements cancel.
    pub fn complement(self) -> Self {
        match self {
            Region::Complement { base } => *base,
            other => Region::Complement { base: Box::new(other) },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidRegion(msg));
        match self {
            Region::Ball { center, radius } => {
                if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
                    return bad("ball center must be a finite point of dimension >= 1".into());
                }
                if !(*radius > 0.0) || !radius.is_finite() {
                    return bad(format!("ball radius must be positive and finite, got {radius}"));
                }
            }
            Region::ConvexPolytope { dim, halfspaces } => {
                if *dim == 0 || halfspaces.is_empty() {
                    return bad("polytope needs at least one half-space of dimension >= 1".into());
                }
                for (i, h) in halfspaces.iter().enumerate() {
                    if h.normal.len() != *dim {
                        return bad(format!(
                            "halfspaces[{i}] normal has dimension {}, expected {dim}",
                            h.normal.len()
                        ));
                    }
                    if (norm(&h.normal) - 1.0).abs() > NORMAL_TOL {
                        return bad(format!("halfspaces[{i}] normal is not a unit vector"));
                    }
                    if !h.offset.is_finite() {
                        return bad(format!("halfspaces[{i}] offset is not finite"));
                    }
                }
            }
            Region::Band1D { lower, upper } => {
                if lower.is_nan() || upper.is_nan() || !(lower < upper) {
                    return bad(format!("band needs lower < upper, got ({lower}, {upper})"));
                }
                if *lower == f64::INFINITY || *upper == f64::NEG_INFINITY {
                    return bad("band bounds point the wrong way".into());
                }
            }
            Region::Annulus { center, inner, outer } => {
                if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
                    return bad("annulus center must be a finite point of dimension >= 1".into());
                }
                if !(*inner > 0.0 && inner < outer && outer.is_finite()) {
                    return bad(format!(
                        "annulus needs 0 < inner < outer, got ({inner}, {outer})"
                    ));
                }
            }
            Region::Shifted { base, shift } => {
                if !shift.is_finite() {
                    return bad("shift must be finite".into());
                }
                base.validate()?;
            }
            Region::Complement { base } => base.validate()?,
            Region::Empty { dim } => {
                if *dim == 0 {
                    return bad("empty region needs dimension >= 1".into());
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Ball { center, .. } | Region::Annulus { center, .. } => center.len(),
            Region::ConvexPolytope { dim, .. } | Region::Empty { dim } => *dim,
            Region::Band1D { .. } => 1,
            Region::Shifted { base, .. } | Region::Complement { base } => base.dim(),
        }
    }

    pub fn is_empty_sentinel(&self) -> bool {
        matches!(self, Region::Empty { .. })
    }

    /// Signed distance without the dimension check. Callers guarantee
    /// `x.len() == self.dim()`.
    #[inline]
    pub fn sdist(&self, x: &[f64]) -> f64 {
        match self {
            Region::Ball { center, radius } => radius - distance(center, x),
            Region::Band1D { lower, upper } => (x[0] - lower).min(upper - x[0]),
            Region::Annulus { center, inner, outer } => {
                let d = distance(center, x);
                (d - inner).min(outer - d)
            }
            Region::ConvexPolytope { halfspaces, .. } => {
                let inside = halfspaces
                    .iter()
                    .map(|h| h.slack(x))
                    .fold(f64::INFINITY, f64::min);
                if inside >= 0.0 {
                    inside
                } else {
                    match polytope_projection(halfspaces, x) {
                        Some(p) => -distance(&p, x),
                        None => EMPTY_SDIST,
                    }
                }
            }
            Region::Shifted { base, shift } => {
                let s = base.sdist(x);
                if s == EMPTY_SDIST || s == -EMPTY_SDIST {
                    s
                } else {
                    s + shift
                }
            }
            Region::Complement { base } => -base.sdist(x),
            Region::Empty { .. } => EMPTY_SDIST,
        }
    }

    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        self.sdist(x) > 0.0
    }

    /// Largest distance from an interior point to the boundary, when it is
    /// known in closed form.
    pub fn inradius(&self) -> Option<f64> {
        match self {
            Region::Ball { radius, .. } => Some(*radius),
            Region::Band1D { lower, upper } => Some((upper - lower) / 2.0),
            Region::Annulus { inner, outer, .. } => Some((outer - inner) / 2.0),
            Region::Shifted { base, shift } => base.inradius().map(|r| (r + shift).max(0.0)),
            Region::Empty { .. } => Some(0.0),
            _ => None,
        }
    }

    /// `Some(true)` for bounded sets, `Some(false)` for unbounded ones and
    /// `None` when the answer is not known cheaply.
    pub fn is_bounded(&self) -> Option<bool> {
        match self {
            Region::Ball { .. } | Region::Annulus { .. } | Region::Empty { .. } => Some(true),
            Region::Band1D { lower, upper } => Some(lower.is_finite() && upper.is_finite()),
            Region::ConvexPolytope { .. } => None,
            Region::Shifted { base, .. } => base.is_bounded(),
            Region::Complement { base } => match base.is_bounded() {
                Some(true) => Some(false),
                _ => None,
            },
        }
    }
}

/// Checked signed distance `ρ(x, Aᶜ) − ρ(x, A)`.
pub fn signed_distance(region: &Region, x: &[f64]) -> Result<f64> {
    if x.len() != region.dim() {
        return Err(Error::DimensionMismatch { expected: region.dim(), got: x.len() });
    }
    Ok(region.sdist(x))
}

/// The set `A^(v) = { x : sd(x) > −v }`. Negative `v` erodes; erosion past
/// extinction yields [`Region::Empty`].
pub fn dilate(region: &Region, v: f64) -> Region {
    if v == 0.0 {
        return region.clone();
    }
    match region {
        Region::Ball { center, radius } => {
            if radius + v > 0.0 {
                Region::Ball { center: center.clone(), radius: radius + v }
            } else {
                Region::Empty { dim: center.len() }
            }
        }
        Region::Band1D { lower, upper } => {
            let (l, u) = (lower - v, upper + v);
            if l < u {
                Region::Band1D { lower: l, upper: u }
            } else {
                Region::Empty { dim: 1 }
            }
        }
        Region::Annulus { center, inner, outer } => {
            let (i, o) = (inner - v, outer + v);
            if o <= i.max(0.0) {
                Region::Empty { dim: center.len() }
            } else if i < 0.0 {
                Region::Ball { center: center.clone(), radius: o }
            } else if i == 0.0 {
                // Only the centre is excluded; keep the exact predicate.
                Region::Shifted { base: Box::new(region.clone()), shift: v }
            } else {
                Region::Annulus { center: center.clone(), inner: i, outer: o }
            }
        }
        Region::ConvexPolytope { dim, halfspaces } if v < 0.0 => Region::ConvexPolytope {
            dim: *dim,
            halfspaces: halfspaces
                .iter()
                .map(|h| Halfspace { normal: h.normal.clone(), offset: h.offset + v })
                .collect(),
        },
        Region::ConvexPolytope { .. } => Region::Shifted { base: Box::new(region.clone()), shift: v },
        Region::Shifted { base, shift } => match **base {
            Region::ConvexPolytope { .. } if shift + v <= 0.0 => dilate(base, shift + v),
            Region::ConvexPolytope { .. } => {
                Region::Shifted { base: base.clone(), shift: shift + v }
            }
            _ => dilate(base, shift + v),
        },
        Region::Complement { base } => Region::Complement { base: Box::new(dilate(base, -v)) },
        Region::Empty { dim } => Region::Empty { dim: *dim },
    }
}

/// How a metric value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricMethod {
    Analytic,
    Sampled,
}

/// Result of a Hausdorff-type metric query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub value: f64,
    pub method: MetricMethod,
    /// Boundary-sampling pitch actually used (`0` for analytic results).
    pub resolution: f64,
}

impl MetricResult {
    fn analytic(value: f64) -> Self {
        MetricResult { value, method: MetricMethod::Analytic, resolution: 0.0 }
    }

    fn combine(self, other: MetricResult) -> MetricResult {
        let method = if self.method == MetricMethod::Sampled || other.method == MetricMethod::Sampled {
            MetricMethod::Sampled
        } else {
            MetricMethod::Analytic
        };
        MetricResult {
            value: self.value.max(other.value),
            method,
            resolution: self.resolution.max(other.resolution),
        }
    }
}

/// Boundary sampling knobs for sampled metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingOptions {
    pub pitch: f64,
    /// Cap on the number of samples per boundary component; the pitch is
    /// coarsened to respect it.
    pub max_points: usize,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions { pitch: DEFAULT_PITCH, max_points: 1 << 20 }
    }
}

/// Hausdorff distance `ρ_h(A, B)` with default sampling options.
pub fn hausdorff(a: &Region, b: &Region) -> Result<MetricResult> {
    hausdorff_with(a, b, &SamplingOptions::default())
}

/// `ρ_H(A, B) = max{ ρ_h(A, B), ρ_h(Aᶜ, Bᶜ) }` with default sampling options.
pub fn hausdorff_with_complements(a: &Region, b: &Region) -> Result<MetricResult> {
    hausdorff_with_complements_with(a, b, &SamplingOptions::default())
}

pub fn hausdorff_with_complements_with(
    a: &Region,
    b: &Region,
    opts: &SamplingOptions,
) -> Result<MetricResult> {
    let sets = hausdorff_with(a, b, opts)?;
    let complements = hausdorff_with(&a.clone().complement(), &b.clone().complement(), opts)?;
    Ok(sets.combine(complements))
}

/// Hausdorff distance `ρ_h(A, B)`.
///
/// Analytic for every one-dimensional pair and for pairs of balls (or of
/// ball exteriors); otherwise the two-sided supremum of `ρ(·, other)` over
/// deterministic boundary samples of both sets. The empty set is at
/// distance `+∞` from any non-empty set.
pub fn hausdorff_with(a: &Region, b: &Region, opts: &SamplingOptions) -> Result<MetricResult> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    if a == b {
        return Ok(MetricResult::analytic(0.0));
    }
    match (is_empty_set(a), is_empty_set(b)) {
        (true, true) => return Ok(MetricResult::analytic(0.0)),
        (true, false) | (false, true) => return Ok(MetricResult::analytic(f64::INFINITY)),
        _ => {}
    }
    if a.dim() == 1 {
        if let (Some(ia), Some(ib)) = (intervals_1d(a), intervals_1d(b)) {
            let v = directed_1d(&ia, &ib).max(directed_1d(&ib, &ia));
            return Ok(MetricResult::analytic(v));
        }
    }
    if let Some(v) = ball_pair(a, b) {
        return Ok(MetricResult::analytic(v));
    }
    match (a.is_bounded(), b.is_bounded()) {
        (Some(true), Some(false)) | (Some(false), Some(true)) => {
            return Ok(MetricResult::analytic(f64::INFINITY))
        }
        _ => {}
    }
    let (mut probes, pa) = probe_points(a, opts)?;
    let (pb_points, pb) = probe_points(b, opts)?;
    probes.extend(pb_points);
    let tol = 1e-9;
    let directed = |from: &Region, to: &Region| {
        probes
            .iter()
            .filter(|p| from.sdist(p) >= -tol)
            .map(|p| (-to.sdist(p)).max(0.0))
            .fold(0.0, f64::max)
    };
    let value = directed(a, b).max(directed(b, a));
    Ok(MetricResult { value, method: MetricMethod::Sampled, resolution: pa.max(pb) })
}

fn is_empty_set(r: &Region) -> bool {
    match r {
        Region::Empty { .. } => true,
        Region::Shifted { base, .. } => is_empty_set(base),
        _ => false,
    }
}

/// Closed forms for ball pairs and ball-exterior pairs.
fn ball_pair(a: &Region, b: &Region) -> Option<f64> {
    fn as_ball(r: &Region) -> Option<(&[f64], f64)> {
        match r {
            Region::Ball { center, radius } => Some((center, *radius)),
            _ => None,
        }
    }
    match (a, b) {
        (Region::Ball { .. }, Region::Ball { .. }) => {
            let (c1, r1) = as_ball(a)?;
            let (c2, r2) = as_ball(b)?;
            let d = distance(c1, c2);
            // sup_{x∈A} ρ(x, B) = max(0, d + r1 − r2), and symmetrically.
            Some((d + r1 - r2).max(0.0).max((d + r2 - r1).max(0.0)))
        }
        (Region::Complement { base: ba }, Region::Complement { base: bb }) => {
            let (c1, r1) = as_ball(ba)?;
            let (c2, r2) = as_ball(bb)?;
            let d = distance(c1, c2);
            // sup_{x∉B₁} ρ(x, closure(B₂)ᶜ) = max(0, r2 − ρ(c2, B₁ᶜ)).
            let h12 = (r2 - (r1 - d).max(0.0)).max(0.0);
            let h21 = (r1 - (r2 - d).max(0.0)).max(0.0);
            Some(h12.max(h21))
        }
        _ => None,
    }
}

/// A one-dimensional region as a sorted list of disjoint open intervals.
fn intervals_1d(r: &Region) -> Option<Vec<(f64, f64)>> {
    let iv = match r {
        Region::Ball { center, radius } => vec![(center[0] - radius, center[0] + radius)],
        Region::Band1D { lower, upper } => vec![(*lower, *upper)],
        Region::Annulus { center, inner, outer } => vec![
            (center[0] - outer, center[0] - inner),
            (center[0] + inner, center[0] + outer),
        ],
        Region::ConvexPolytope { halfspaces, .. } => {
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            for h in halfspaces {
                if h.normal[0] > 0.0 {
                    hi = hi.min(h.offset / h.normal[0]);
                } else {
                    lo = lo.max(h.offset / h.normal[0]);
                }
            }
            if lo < hi {
                vec![(lo, hi)]
            } else {
                vec![]
            }
        }
        Region::Empty { .. } => vec![],
        Region::Shifted { base, shift } => {
            let mut out: Vec<(f64, f64)> = Vec::new();
            for (l, u) in intervals_1d(base)? {
                let (l, u) = (l - shift, u + shift);
                if l >= u {
                    continue;
                }
                match out.last_mut() {
                    Some(last) if l <= last.1 => last.1 = last.1.max(u),
                    _ => out.push((l, u)),
                }
            }
            out
        }
        Region::Complement { base } => {
            let inner = intervals_1d(base)?;
            let mut out = Vec::new();
            let mut cursor = f64::NEG_INFINITY;
            for (l, u) in inner {
                if l > cursor {
                    out.push((cursor, l));
                }
                cursor = u;
            }
            if cursor < f64::INFINITY {
                out.push((cursor, f64::INFINITY));
            }
            out
        }
    };
    Some(iv)
}

/// `sup_{a∈A} ρ(a, B)` for interval unions.
fn directed_1d(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    if b.is_empty() {
        return f64::INFINITY;
    }
    let a_below = a[0].0 == f64::NEG_INFINITY;
    let a_above = a[a.len() - 1].1 == f64::INFINITY;
    let b_below = b[0].0 == f64::NEG_INFINITY;
    let b_above = b[b.len() - 1].1 == f64::INFINITY;
    if (a_below && !b_below) || (a_above && !b_above) {
        return f64::INFINITY;
    }
    let dist_to_b = |x: f64| -> f64 {
        b.iter()
            .map(|&(l, u)| if x < l { l - x } else if x > u { x - u } else { 0.0 })
            .fold(f64::INFINITY, f64::min)
    };
    let in_closure_a = |x: f64| a.iter().any(|&(l, u)| l <= x && x <= u);
    let mut best = 0.0f64;
    for &(l, u) in a {
        for e in [l, u] {
            if e.is_finite() {
                best = best.max(dist_to_b(e));
            }
        }
    }
    // Local maxima of ρ(·, B) sit at the midpoints of B's gaps.
    for w in b.windows(2) {
        let mid = 0.5 * (w[0].1 + w[1].0);
        if in_closure_a(mid) {
            best = best.max(dist_to_b(mid));
        }
    }
    best
}

/// Boundary samples plus a few distinguished interior points (centres),
/// together with the pitch actually achieved.
fn probe_points(r: &Region, opts: &SamplingOptions) -> Result<(Vec<Vec<f64>>, f64)> {
    match r {
        Region::Ball { center, radius } => {
            let (mut pts, pitch) = sphere_points(center, *radius, opts)?;
            pts.push(center.clone());
            Ok((pts, pitch))
        }
        Region::Annulus { center, inner, outer } => {
            let (mut pts, p1) = sphere_points(center, *inner, opts)?;
            let (outer_pts, p2) = sphere_points(center, *outer, opts)?;
            pts.extend(outer_pts);
            pts.push(center.clone());
            Ok((pts, p1.max(p2)))
        }
        Region::Band1D { lower, upper } => {
            let pts = [*lower, *upper, 0.5 * (lower + upper)]
                .into_iter()
                .filter(|x| x.is_finite())
                .map(|x| vec![x])
                .collect();
            Ok((pts, 0.0))
        }
        Region::ConvexPolytope { halfspaces, dim } => polytope_boundary(*dim, halfspaces, 0.0, opts),
        Region::Shifted { base, shift } => match &**base {
            Region::ConvexPolytope { halfspaces, dim } if *shift > 0.0 => {
                polytope_boundary(*dim, halfspaces, *shift, opts)
            }
            other => {
                let d = dilate(other, *shift);
                if matches!(d, Region::Shifted { .. }) {
                    Err(Error::Unsupported(
                        "boundary sampling of this shifted region".into(),
                    ))
                } else {
                    probe_points(&d, opts)
                }
            }
        },
        Region::Complement { base } => probe_points(base, opts),
        Region::Empty { .. } => Ok((vec![], 0.0)),
    }
}

/// Deterministic near-uniform points on the sphere of radius `r`.
fn sphere_points(center: &[f64], r: f64, opts: &SamplingOptions) -> Result<(Vec<Vec<f64>>, f64)> {
    let m = center.len();
    match m {
        1 => Ok((vec![vec![center[0] - r], vec![center[0] + r]], 0.0)),
        2 => {
            let circ = 2.0 * PI * r;
            let n = ((circ / opts.pitch).ceil() as usize).clamp(8, opts.max_points);
            let pts = (0..n)
                .map(|i| {
                    let th = 2.0 * PI * i as f64 / n as f64;
                    vec![center[0] + r * th.cos(), center[1] + r * th.sin()]
                })
                .collect();
            Ok((pts, circ / n as f64))
        }
        3 => {
            // Fibonacci lattice.
            let area = 4.0 * PI * r * r;
            let n = ((area / (opts.pitch * opts.pitch)).ceil() as usize).clamp(32, opts.max_points);
            let golden = PI * (3.0 - 5f64.sqrt());
            let pts = (0..n)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden * i as f64;
                    vec![
                        center[0] + r * rho * phi.cos(),
                        center[1] + r * rho * phi.sin(),
                        center[2] + r * z,
                    ]
                })
                .collect();
            Ok((pts, (area / n as f64).sqrt()))
        }
        _ => Err(Error::Unsupported(format!(
            "boundary sampling in dimension {m} (supported: 1, 2, 3)"
        ))),
    }
}

/// Samples of the boundary of `P^(shift)` for a polytope `P` (shift ≥ 0).
fn polytope_boundary(
    dim: usize,
    halfspaces: &[Halfspace],
    shift: f64,
    opts: &SamplingOptions,
) -> Result<(Vec<Vec<f64>>, f64)> {
    let (facets, vertices, pitch) = match dim {
        1 => {
            let iv = intervals_1d(&Region::ConvexPolytope { dim, halfspaces: halfspaces.to_vec() })
                .unwrap_or_default();
            let mut pts = Vec::new();
            for (l, u) in iv {
                if !(l.is_finite() && u.is_finite()) {
                    return Err(Error::Unsupported("sampling an unbounded polytope".into()));
                }
                pts.push((vec![l], vec![-1.0]));
                pts.push((vec![u], vec![1.0]));
            }
            let verts = pts.iter().map(|(p, _)| p.clone()).collect();
            (pts, verts, 0.0)
        }
        2 => {
            let cons: Vec<([f64; 2], f64)> = halfspaces
                .iter()
                .map(|h| ([h.normal[0], h.normal[1]], h.offset))
                .collect();
            let poly = polygon_boundary(&cons, opts)?;
            let facets = poly
                .samples
                .into_iter()
                .map(|(p, i)| (p.to_vec(), halfspaces[i].normal.clone()))
                .collect();
            let verts = poly.vertices.iter().map(|v| v.to_vec()).collect();
            (facets, verts, poly.pitch)
        }
        3 => polyhedron_boundary(halfspaces, opts)?,
        _ => {
            return Err(Error::Unsupported(format!(
                "polytope sampling in dimension {dim} (supported: 1, 2, 3)"
            )))
        }
    };
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(facets.len() + 1);
    if !vertices.is_empty() {
        let mut c = vec![0.0; dim];
        for v in &vertices {
            for (ci, vi) in c.iter_mut().zip(v) {
                *ci += vi / vertices.len() as f64;
            }
        }
        pts.push(c);
    }
    for (p, n) in facets {
        pts.push(p.iter().zip(&n).map(|(x, ni)| x + shift * ni).collect());
    }
    let mut pitch = pitch;
    if shift > 0.0 {
        // Rounded corners: spheres of radius `shift` around each vertex,
        // restricted to directions in the vertex's normal cone.
        let base = Region::ConvexPolytope { dim, halfspaces: halfspaces.to_vec() };
        for v in &vertices {
            let (around, p) = sphere_points(v, shift, opts)?;
            pitch = pitch.max(p);
            for q in around {
                if (base.sdist(&q) + shift).abs() <= 1e-9 * (1.0 + shift) {
                    pts.push(q);
                }
            }
        }
    }
    Ok((pts, pitch))
}

struct PolygonBoundary {
    /// Boundary samples with the index of the constraint they lie on.
    samples: Vec<([f64; 2], usize)>,
    vertices: Vec<[f64; 2]>,
    pitch: f64,
}

/// Boundary of the planar polygon `{ y : a_i · y ≤ b_i }`.
fn polygon_boundary(cons: &[([f64; 2], f64)], opts: &SamplingOptions) -> Result<PolygonBoundary> {
    let mut edges = Vec::new();
    for (i, &(a, b)) in cons.iter().enumerate() {
        let na = (a[0] * a[0] + a[1] * a[1]).sqrt();
        if na < 1e-14 {
            continue;
        }
        let n = [a[0] / na, a[1] / na];
        let off = b / na;
        let p0 = [n[0] * off, n[1] * off];
        let d = [-n[1], n[0]];
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut empty = false;
        for (j, &(aj, bj)) in cons.iter().enumerate() {
            if j == i {
                continue;
            }
            let slope = aj[0] * d[0] + aj[1] * d[1];
            let rhs = bj - (aj[0] * p0[0] + aj[1] * p0[1]);
            if slope.abs() < 1e-14 {
                if rhs < -1e-12 {
                    empty = true;
                }
            } else if slope > 0.0 {
                hi = hi.min(rhs / slope);
            } else {
                lo = lo.max(rhs / slope);
            }
        }
        if empty || lo > hi {
            continue;
        }
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::Unsupported("sampling an unbounded polytope".into()));
        }
        edges.push((i, p0, d, lo, hi));
    }
    let perimeter: f64 = edges.iter().map(|e| e.4 - e.3).sum();
    let mut pitch = opts.pitch;
    if perimeter / pitch > opts.max_points as f64 {
        pitch = perimeter / opts.max_points as f64;
    }
    let mut samples = Vec::new();
    let mut vertices = Vec::new();
    for (i, p0, d, lo, hi) in edges {
        let len = hi - lo;
        let n = ((len / pitch).ceil() as usize).max(1);
        for k in 0..=n {
            let s = lo + len * k as f64 / n as f64;
            samples.push(([p0[0] + s * d[0], p0[1] + s * d[1]], i));
        }
        vertices.push([p0[0] + lo * d[0], p0[1] + lo * d[1]]);
        vertices.push([p0[0] + hi * d[0], p0[1] + hi * d[1]]);
    }
    Ok(PolygonBoundary { samples, vertices, pitch })
}

type FacetSamples = (Vec<(Vec<f64>, Vec<f64>)>, Vec<Vec<f64>>, f64);

/// Facet grids of a 3-D polytope.
fn polyhedron_boundary(halfspaces: &[Halfspace], opts: &SamplingOptions) -> Result<FacetSamples> {
    let mut facets = Vec::new();
    let mut vertices = Vec::new();
    let mut pitch = opts.pitch;
    for (i, h) in halfspaces.iter().enumerate() {
        let n = &h.normal;
        let p0: Vec<f64> = n.iter().map(|x| x * h.offset).collect();
        let (e1, e2) = plane_basis(n);
        let cons: Vec<([f64; 2], f64)> = halfspaces
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, hj)| ([dot(&hj.normal, &e1), dot(&hj.normal, &e2)], hj.slack(&p0)))
            .collect();
        if cons.iter().any(|(a, b)| a[0].abs() < 1e-14 && a[1].abs() < 1e-14 && *b < -1e-12) {
            continue;
        }
        let poly = polygon_boundary(&cons, opts)?;
        if poly.vertices.is_empty() {
            continue;
        }
        pitch = pitch.max(poly.pitch);
        let lift = |u: f64, v: f64| -> Vec<f64> {
            (0..3).map(|k| p0[k] + u * e1[k] + v * e2[k]).collect()
        };
        for (q, _) in &poly.samples {
            facets.push((lift(q[0], q[1]), n.clone()));
        }
        for q in &poly.vertices {
            vertices.push(lift(q[0], q[1]));
        }
        // Interior grid of the facet.
        let (mut umin, mut umax, mut vmin, mut vmax) =
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for q in &poly.vertices {
            umin = umin.min(q[0]);
            umax = umax.max(q[0]);
            vmin = vmin.min(q[1]);
            vmax = vmax.max(q[1]);
        }
        let mut step = poly.pitch;
        let cells = ((umax - umin) / step).ceil() * ((vmax - vmin) / step).ceil();
        if cells > opts.max_points as f64 {
            step *= (cells / opts.max_points as f64).sqrt();
            pitch = pitch.max(step);
        }
        let nu = ((umax - umin) / step).ceil() as usize;
        let nv = ((vmax - vmin) / step).ceil() as usize;
        for a in 1..nu {
            for b in 1..nv {
                let (u, v) = (umin + a as f64 * step, vmin + b as f64 * step);
                if cons.iter().all(|(c, off)| c[0] * u + c[1] * v <= off + 1e-12) {
                    facets.push((lift(u, v), n.clone()));
                }
            }
        }
    }
    Ok((facets, vertices, pitch))
}

fn plane_basis(n: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let helper = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let mut e1 = cross(n, &helper);
    let l = norm(&e1);
    e1.iter_mut().for_each(|x| *x /= l);
    let e2 = cross(n, &e1);
    (e1, e2)
}

fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Euclidean projection of `x` onto the closed polytope, or `None` when the
/// polytope is empty. Enumerates candidate active sets of size ≤ m; the
/// projection is the nearest feasible candidate.
fn polytope_projection(halfspaces: &[Halfspace], x: &[f64]) -> Option<Vec<f64>> {
    let m = x.len();
    let n = halfspaces.len();
    let feasible = |y: &[f64]| {
        halfspaces
            .iter()
            .all(|h| h.slack(y) >= -1e-10 * (1.0 + h.offset.abs()))
    };
    if feasible(x) {
        return Some(x.to_vec());
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut idx = Vec::with_capacity(m);
    fn recurse(
        start: usize,
        n: usize,
        k: usize,
        idx: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]),
    ) {
        if idx.len() == k {
            f(idx);
            return;
        }
        for i in start..n {
            idx.push(i);
            recurse(i + 1, n, k, idx, f);
            idx.pop();
        }
    }
    for k in 1..=m.min(n) {
        let mut visit = |set: &[usize]| {
            let gram = DMatrix::from_fn(k, k, |r, c| {
                dot(&halfspaces[set[r]].normal, &halfspaces[set[c]].normal)
            });
            let rhs = DVector::from_fn(k, |r, _| -halfspaces[set[r]].slack(x));
            let Some(lambda) = gram.lu().solve(&rhs) else { return };
            if lambda.iter().any(|l| !l.is_finite()) {
                return;
            }
            let mut y = x.to_vec();
            for (r, &i) in set.iter().enumerate() {
                for (yj, nj) in y.iter_mut().zip(&halfspaces[i].normal) {
                    *yj -= lambda[r] * nj;
                }
            }
            if feasible(&y) {
                let d = distance(&y, x);
                if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                    best = Some((d, y));
                }
            }
        };
        recurse(0, n, k, &mut idx, &mut visit);
    }
    best.map(|(_, y)| y)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

mod lower_bound {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

mod upper_bound {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        super::lower_bound::serialize(v, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_ball(m: usize) -> Region {
        Region::ball(vec![0.0; m], 1.0).unwrap()
    }

    #[test]
    fn ball_signed_distance() {
        let b = unit_ball(2);
        assert_eq!(signed_distance(&b, &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(signed_distance(&b, &[2.0, 0.0]).unwrap(), -1.0);
        assert!(matches!(
            signed_distance(&b, &[0.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn band_signed_distance_is_nearest_endpoint() {
        let band = Region::band(-1.0, 2.0).unwrap();
        let x = 0.5;
        let brute = [x - (-1.0), 2.0 - x].into_iter().fold(f64::INFINITY, f64::min);
        assert_eq!(band.sdist(&[x]), brute);
        assert_eq!(band.sdist(&[0.5]), 1.5);
    }

    #[test]
    fn invalid_shapes_are_rejected() {
        assert!(Region::ball(vec![0.0], 0.0).is_err());
        assert!(Region::band(1.0, 1.0).is_err());
        assert!(Region::annulus(vec![0.0, 0.0], 0.5, 0.2).is_err());
        let not_unit = Halfspace { normal: vec![2.0, 0.0], offset: 1.0 };
        assert!(Region::polytope(vec![not_unit]).is_err());
    }

    #[test]
    fn polytope_outside_distance_is_exact() {
        let sq = Region::aabb(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        assert!((sq.sdist(&[0.0, 0.0]) - 1.0).abs() < 1e-15);
        assert!((sq.sdist(&[3.0, 0.0]) + 2.0).abs() < 1e-12);
        // Corner region: distance to the vertex (1, 1).
        assert!((sq.sdist(&[4.0, 5.0]) + 5.0).abs() < 1e-12);
    }

    #[test]
    fn dilation_examples() {
        let b = unit_ball(3);
        assert_eq!(dilate(&b, 0.5), Region::ball(vec![0.0; 3], 1.5).unwrap());
        assert!(dilate(&b, -1.0).is_empty_sentinel());
        let band = Region::band(-1.0, 1.0).unwrap();
        assert_eq!(dilate(&band, -0.25), Region::band(-0.75, 0.75).unwrap());
        let ann = Region::annulus(vec![0.0, 0.0], 0.3, 1.0).unwrap();
        assert_eq!(dilate(&ann, 0.5), Region::ball(vec![0.0, 0.0], 1.5).unwrap());
        assert!(dilate(&ann, -0.4).is_empty_sentinel());
    }

    /// Brute-force reading of both branches of the dilation definition on a
    /// 1-D band: ρ(x, A) and ρ(x, Aᶜ) from the two endpoints.
    #[test]
    fn band_erosion_matches_two_branch_definition() {
        let (l, u) = (-1.0, 1.0);
        let band = Region::band(l, u).unwrap();
        let inside = |x: f64| l < x && x < u;
        let rho_a = |x: f64| if inside(x) { 0.0 } else { (l - x).max(x - u) };
        let rho_ac = |x: f64| if inside(x) { (x - l).min(u - x) } else { 0.0 };
        for v in [-0.6, -0.25, 0.0, 0.3] {
            let d = dilate(&band, v);
            for i in 0..=4000 {
                let x = -2.0 + i as f64 * 1e-3 + 1.7e-7;
                let expected = if v > 0.0 { rho_a(x) < v } else { !(rho_ac(x) <= -v) };
                assert_eq!(d.contains(&[x]), expected, "v={v} x={x}");
            }
        }
    }

    #[test]
    fn hausdorff_examples() {
        let a = unit_ball(2);
        assert_eq!(hausdorff(&a, &a).unwrap().value, 0.0);
        let b = Region::ball(vec![0.0, 0.0], 1.5).unwrap();
        let h = hausdorff(&a, &b).unwrap();
        assert_eq!(h.method, MetricMethod::Analytic);
        assert!((h.value - 0.5).abs() < 1e-15);
        let c = Region::ball(vec![0.3, 0.0], 1.0).unwrap();
        assert!((hausdorff(&a, &c).unwrap().value - 0.3).abs() < 1e-15);
        let e = Region::empty(2);
        assert_eq!(hausdorff(&a, &e).unwrap().value, f64::INFINITY);
        assert_eq!(hausdorff(&e, &e).unwrap().value, 0.0);
    }

    #[test]
    fn rho_big_h_examples() {
        let a = Region::band(-1.0, 1.0).unwrap();
        let b = Region::band(-1.0, 1.2).unwrap();
        let r = hausdorff_with_complements(&a, &b).unwrap();
        assert!((r.value - 0.2).abs() < 1e-15);
        assert_eq!(r.method, MetricMethod::Analytic);
        let p = unit_ball(2);
        let q = Region::ball(vec![0.0, 0.0], 1.5).unwrap();
        assert!((hausdorff_with_complements(&p, &q).unwrap().value - 0.5).abs() < 1e-15);
    }

    /// A ball inside the hole of an annulus: the exterior metric sees the
    /// hole, so ρ_H exceeds ρ_h.
    #[test]
    fn complement_metric_can_dominate() {
        let a = Region::band(-3.0, 3.0).unwrap();
        let b = Region::annulus(vec![0.0], 1.0, 3.0).unwrap();
        let h = hausdorff(&a, &b).unwrap().value;
        let big = hausdorff_with_complements(&a, &b).unwrap().value;
        assert!((h - 1.0).abs() < 1e-15);
        // The hole's centre is 3 away from the exterior of (-3, 3).
        assert!((big - 3.0).abs() < 1e-15);
        // (-3,3) vs (-3,-1)∪(1,3): the gap midpoint 0 is at distance 1.
        let c = Region::band(-3.0, 3.0).unwrap();
        let d = Region::band(-2.0, 3.0).unwrap();
        assert!((hausdorff_with_complements(&c, &d).unwrap().value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sampled_ball_vs_square() {
        let sq = Region::aabb(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let b = unit_ball(2);
        let h = hausdorff(&sq, &b).unwrap();
        assert_eq!(h.method, MetricMethod::Sampled);
        assert!(h.resolution > 0.0 && h.resolution <= 1e-3 + 1e-12);
        assert!((h.value - (2f64.sqrt() - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn sampled_polyhedron_translation() {
        let a = Region::aabb(&[-1.0, -1.0, -1.0], &[1.0, 1.0, 1.0]).unwrap();
        let b = Region::aabb(&[-0.9, -1.0, -1.0], &[1.1, 1.0, 1.0]).unwrap();
        let opts = SamplingOptions { pitch: 0.05, ..Default::default() };
        let h = hausdorff_with_complements_with(&a, &b, &opts).unwrap();
        assert!((h.value - 0.1).abs() < 1e-9, "{h:?}");
    }

    #[test]
    fn dilated_square_boundary() {
        let sq = Region::aabb(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let d = dilate(&sq, 0.25);
        assert!(matches!(d, Region::Shifted { .. }));
        let h = hausdorff(&sq, &d).unwrap();
        assert!((h.value - 0.25).abs() < 1e-6, "{h:?}");
    }

    #[test]
    fn region_json_literal() {
        let r: Region = serde_json::from_str(r#"{"shape":"band1d","lower":null,"upper":2.0}"#).unwrap();
        assert_eq!(r, Region::Band1D { lower: f64::NEG_INFINITY, upper: 2.0 });
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"shape":"band1d","lower":null,"upper":2.0}"#);
        let b: Region = serde_json::from_str(r#"{"shape":"ball","center":[0,0],"radius":1}"#).unwrap();
        assert_eq!(b, unit_ball(2));
    }
}
