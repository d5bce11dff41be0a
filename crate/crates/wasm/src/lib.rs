//! Browser bindings. Every function returns a flat `Float64Array` of
//! fixed-width rows so the page can plot it without a serialisation layer.

use bcp_core::bounds::{density_envelope_min, linear_noncrossing_bound, theorem1_constant_from, BoundParams};
use bcp_core::closedform::linear_noncrossing_exact;
use bcp_core::domain::{make_domain, Beta, DomainFamily, DomainSpec, TimeSpaceDomain};
use bcp_core::mc::{estimate_gaps, hitting_time_histogram, SimConfig};
use bcp_core::path::{PointPath, Polyline};
use wasm_bindgen::prelude::*;

fn js(e: bcp_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Disc of radius `1 − K t` in the plane, `T = 1`.
fn shrinking_disc(k: f64) -> Result<TimeSpaceDomain, JsError> {
    make_domain(&DomainSpec {
        horizon: 1.0,
        start: None,
        family: DomainFamily::BallTube {
            center: PointPath::stationary(1.0, vec![0.0, 0.0]).map_err(js)?,
            radius: Polyline::line(1.0, 1.0, -k).map_err(js)?,
        },
    })
    .map_err(js)
}

/// Rows `[t, exact, bound]` on `points` evenly spaced times in `(0, t_max]`
/// for the line `ε + c s`.
#[wasm_bindgen]
pub fn linear_curves(c: f64, eps: f64, t_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let mut out = Vec::with_capacity(3 * points);
    for i in 1..=points {
        let t = t_max * i as f64 / points as f64;
        out.push(t);
        out.push(linear_noncrossing_exact(t, c, eps).map_err(js)?);
        out.push(linear_noncrossing_bound(t, c, eps).map_err(js)?.probability);
    }
    Ok(out)
}

/// Rows `[bin_lo, bin_hi, density, stderr, envelope_min]` for exits from the
/// shrinking disc, with the envelope built from `K`, `β = K/2` and `gamma`.
#[wasm_bindgen]
pub fn density_vs_envelope(k: f64, gamma: f64, bins: usize, n_paths: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    let d = shrinking_disc(k)?;
    let p = BoundParams::new(2, k, Beta::Any, gamma).map_err(js)?;
    let cfg = SimConfig { n_paths: n_paths.into(), n_steps: 500, seed: seed.into(), ..Default::default() };
    let h = hitting_time_histogram(&d, bins, &cfg).map_err(js)?;
    let mut out = Vec::with_capacity(5 * bins);
    for i in 0..bins {
        let (lo, hi) = (h.edges[i], h.edges[i + 1]);
        let w = hi - lo;
        out.extend([lo, hi, h.mass[i] / w, h.stderr[i] / w, density_envelope_min(lo, hi, &p).map_err(js)?]);
    }
    Ok(out)
}

/// Rows `[eps, gap, joint_stderr, c·eps]` for the shrinking disc, over
/// `points` values of `ε` up to `β_eff/2 = K/4`.
#[wasm_bindgen]
pub fn gap_vs_eps(k: f64, gamma: f64, points: usize, n_paths: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    let d = shrinking_disc(k)?;
    let c = theorem1_constant_from(BoundParams::new(2, k, Beta::Any, gamma).map_err(js)?);
    let eps: Vec<f64> = (1..=points).map(|i| 0.25 * k * i as f64 / points as f64).collect();
    let cfg = SimConfig { n_paths: n_paths.into(), n_steps: 256, seed: seed.into(), ..Default::default() };
    let mut out = Vec::with_capacity(4 * points);
    for g in estimate_gaps(&d, &eps, &cfg).map_err(js)? {
        let bound = c.certify(g.eps).map_err(js)?.certified_gap;
        out.extend([g.eps, g.gap, g.joint_stderr, bound]);
    }
    Ok(out)
}
