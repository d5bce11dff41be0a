//! Seeded, reproducible Monte Carlo for survival probabilities, dilation
//! gaps, hitting-time histograms and conditional (bridge) survival.
//!
//! Paths are split into fixed blocks of [`BLOCK`] paths; each path draws
//! from its own counter-based stream, integer tallies are exact and float
//! totals are reduced pairwise over blocks in block order. Results are
//! therefore bitwise identical for any number of threads.

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::geometry::{dot, norm, Region};
use crate::domain::TimeSpaceDomain;
use crate::rng::PathRng;

/// Paths per work unit.
pub const BLOCK: u64 = 1024;

/// Bridge factors with exponent above this are treated as 1.
const EXP_CUTOFF: f64 = 40.0;

/// Lower clamp for the radial process in the domination check.
const RADIAL_FLOOR: f64 = 1e-9;

/// Simulation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_paths: u64,
    /// Steps of the uniform time grid.
    pub n_steps: usize,
    pub seed: u64,
    /// Multiply in the per-step half-space bridge non-crossing factor.
    pub bridge_correction: bool,
    /// Overrides the domain's start point.
    pub start: Option<Vec<f64>>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { n_paths: 100_000, n_steps: 1000, seed: 0, bridge_correction: true, start: None }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 1 {
            return Err(precondition("n_paths must be >= 1"));
        }
        if self.n_steps < 2 {
            return Err(precondition("n_steps must be >= 2"));
        }
        Ok(())
    }
}

/// A Monte Carlo estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub seed: u64,
    pub n_steps: usize,
    /// Direction of the discretisation bias, when known.
    pub bias_note: String,
}

impl MCEstimate {
    fn bernoulli(successes: u64, n: u64, seed: u64, n_steps: usize, bias_note: &str) -> Self {
        let p = successes as f64 / n as f64;
        MCEstimate {
            mean: p,
            stderr: (p * (1.0 - p) / n as f64).sqrt(),
            n,
            seed,
            n_steps,
            bias_note: bias_note.to_string(),
        }
    }
}

/// Survival of `G` and of `G^(ε)` on common random numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub eps: f64,
    pub p_inner: MCEstimate,
    pub p_outer: MCEstimate,
    /// `p_outer.mean − p_inner.mean`, exactly non-negative.
    pub gap: f64,
    /// Standard error of the gap. Nesting makes the pathwise difference a
    /// Bernoulli variable, so this is exact.
    pub joint_stderr: f64,
}

/// First-exit-time histogram on `(0, T]` with bins `(lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub mass: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Paths still inside at `T`.
    pub survivors: u64,
    pub survival_mass: f64,
    pub n: u64,
    pub seed: u64,
    pub n_steps: usize,
    pub note: String,
}

impl HittingHistogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }

    /// `bin_lo,bin_hi,mass,stderr` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_lo,bin_hi,mass,stderr\n");
        for i in 0..self.bins() {
            s.push_str(&format!(
                "{},{},{},{}\n",
                self.edges[i],
                self.edges[i + 1],
                self.mass[i],
                self.stderr[i]
            ));
        }
        s
    }
}

const NOTE_CORRECTED: &str = "bridge-corrected: per-step tangent half-space crossing factor \
(exact for half-spaces; slightly over-counts exits near curved convex boundaries)";
const NOTE_UNCORRECTED: &str =
    "uncorrected: crossings between grid points are missed, so survival is overestimated";

fn note(cfg: &SimConfig) -> &'static str {
    if cfg.bridge_correction {
        NOTE_CORRECTED
    } else {
        NOTE_UNCORRECTED
    }
}

/// Runs `f(from, to)` over fixed blocks of path indices, in parallel when
/// the `parallel` feature is on. Output is in block order.
pub(crate) fn map_blocks<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync + Send,
{
    let blocks = n.div_ceil(BLOCK);
    let run = |b: u64| f(b * BLOCK, ((b + 1) * BLOCK).min(n));
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..blocks).into_par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..blocks).map(run).collect()
    }
}

/// Pairwise (cascade) summation in slice order.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

/// Runs `f` on a dedicated pool with `threads` workers. Without the
/// `parallel` feature `f` simply runs on the caller's thread.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::Unsupported(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok(f())
    }
}

/// A time window `[t0, t1]` on a uniform grid with precomputed sections.
struct Window {
    sections: Vec<Region>,
    t0: f64,
    dt: f64,
    start: Vec<f64>,
    /// Endpoint at `t1` for bridge sampling.
    end: Option<Vec<f64>>,
    t1: f64,
}

impl Window {
    fn new(
        domain: &TimeSpaceDomain,
        t0: f64,
        t1: f64,
        n_steps: usize,
        start: Vec<f64>,
        end: Option<Vec<f64>>,
    ) -> Result<Self> {
        if start.len() != domain.dim() {
            return Err(Error::DimensionMismatch { expected: domain.dim(), got: start.len() });
        }
        let dt = (t1 - t0) / n_steps as f64;
        let sections: Vec<Region> = (0..=n_steps)
            .map(|i| domain.section(if i == n_steps { t1 } else { t0 + i as f64 * dt }))
            .collect();
        if sections[0].sdist(&start) < 0.0 {
            return Err(precondition(format!(
                "start {:?} lies outside the section at t = {t0}",
                start
            )));
        }
        Ok(Window { sections, t0, dt, start, end, t1 })
    }

    fn n_steps(&self) -> usize {
        self.sections.len() - 1
    }
}

/// What happened to one path across nested levels.
struct Outcome {
    /// Index of the lowest surviving level (`levels.len()` if none).
    first_alive: usize,
    /// Step (1-based) at which level 0 died, `Some(0)` if dead at the start.
    exit_step: Option<usize>,
}

/// Simulates one path against the nested levels `{ sd + shift_j > 0 }`
/// (`shifts` ascending). With correction, a single uniform `U` is drawn
/// and level `j` survives while `U` stays below the running product of its
/// bridge non-crossing factors, which has the same law as an independent
/// Bernoulli thinning per step but keeps the levels nested pathwise.
fn run_path(
    w: &Window,
    shifts: &[f64],
    bridge: bool,
    rng: &mut PathRng,
    x: &mut [f64],
    prods: &mut [f64],
) -> Outcome {
    let levels = shifts.len();
    // Drawn even without correction so both settings share the normals.
    let u = rng.uniform();
    x.copy_from_slice(&w.start);
    prods.iter_mut().for_each(|p| *p = 1.0);
    let mut d_prev = w.sections[0].sdist(x);
    let mut low = 0;
    while low < levels && d_prev + shifts[low] <= 0.0 {
        low += 1;
    }
    let mut exit_step = (low > 0).then_some(0);
    let n = w.n_steps();
    let sqrt_dt = w.dt.sqrt();
    for k in 0..n {
        match &w.end {
            None => x.iter_mut().for_each(|xi| *xi += sqrt_dt * rng.normal()),
            Some(end) => {
                if k + 1 == n {
                    x.copy_from_slice(end);
                } else {
                    let remaining = w.t1 - (w.t0 + k as f64 * w.dt);
                    let pull = w.dt / remaining;
                    let sd = (w.dt * (remaining - w.dt) / remaining).sqrt();
                    for (xi, ei) in x.iter_mut().zip(end) {
                        *xi += (ei - *xi) * pull + sd * rng.normal();
                    }
                }
            }
        }
        let d = w.sections[k + 1].sdist(x);
        if bridge {
            for j in low..levels {
                let (a, b) = (d_prev + shifts[j], d + shifts[j]);
                if b > 0.0 {
                    let e = 2.0 * a * b / w.dt;
                    if e < EXP_CUTOFF {
                        prods[j] *= 1.0 - (-e).exp();
                    }
                }
            }
        }
        while low < levels && (d + shifts[low] <= 0.0 || (bridge && u >= prods[low])) {
            low += 1;
        }
        if low > 0 && exit_step.is_none() {
            exit_step = Some(k + 1);
        }
        if low == levels {
            break;
        }
        d_prev = d;
    }
    Outcome { first_alive: low, exit_step }
}

/// Per-level counts of "first surviving level" and per-step exit counts
/// of level 0.
struct Tally {
    first_alive: Vec<u64>,
    exits: Vec<u64>,
}

fn simulate(w: &Window, shifts: &[f64], cfg: &SimConfig, track_exits: bool) -> Tally {
    let levels = shifts.len();
    let n_steps = w.n_steps();
    let blocks = map_blocks(cfg.n_paths, |from, to| {
        let mut t = Tally {
            first_alive: vec![0; levels + 1],
            exits: if track_exits { vec![0; n_steps + 1] } else { Vec::new() },
        };
        let mut x = vec![0.0; w.start.len()];
        let mut prods = vec![1.0; levels];
        for path in from..to {
            let mut rng = PathRng::new(cfg.seed, path);
            let o = run_path(w, shifts, cfg.bridge_correction, &mut rng, &mut x, &mut prods);
            t.first_alive[o.first_alive] += 1;
            if track_exits {
                if let Some(s) = o.exit_step {
                    t.exits[s] += 1;
                }
            }
        }
        t
    });
    let mut total = Tally {
        first_alive: vec![0; levels + 1],
        exits: if track_exits { vec![0; n_steps + 1] } else { Vec::new() },
    };
    for b in blocks {
        total.first_alive.iter_mut().zip(&b.first_alive).for_each(|(a, c)| *a += c);
        total.exits.iter_mut().zip(&b.exits).for_each(|(a, c)| *a += c);
    }
    total
}

fn start_of(domain: &TimeSpaceDomain, cfg: &SimConfig) -> Vec<f64> {
    cfg.start.clone().unwrap_or_else(|| domain.start().to_vec())
}

/// `P((t, W_t) ∈ G, t ∈ (0, T))`.
pub fn estimate_survival(domain: &TimeSpaceDomain, cfg: &SimConfig) -> Result<MCEstimate> {
    cfg.validate()?;
    let w = Window::new(domain, 0.0, domain.horizon(), cfg.n_steps, start_of(domain, cfg), None)?;
    let t = simulate(&w, &[0.0], cfg, false);
    Ok(MCEstimate::bernoulli(t.first_alive[0], cfg.n_paths, cfg.seed, cfg.n_steps, note(cfg)))
}

/// Dilation gap `P(G^(ε)) − P(G)` on common random numbers.
pub fn estimate_gap(domain: &TimeSpaceDomain, eps: f64, cfg: &SimConfig) -> Result<GapEstimate> {
    Ok(estimate_gaps(domain, &[eps], cfg)?.remove(0))
}

/// [`estimate_gap`] for several `ε` from a single set of paths.
pub fn estimate_gaps(
    domain: &TimeSpaceDomain,
    eps: &[f64],
    cfg: &SimConfig,
) -> Result<Vec<GapEstimate>> {
    cfg.validate()?;
    if let Some(e) = eps.iter().find(|e| !(**e >= 0.0) || !e.is_finite()) {
        return Err(precondition(format!("eps must be finite and >= 0, got {e}")));
    }
    let mut shifts: Vec<f64> = std::iter::once(0.0).chain(eps.iter().copied()).collect();
    shifts.sort_by(f64::total_cmp);
    shifts.dedup();
    let w = Window::new(domain, 0.0, domain.horizon(), cfg.n_steps, start_of(domain, cfg), None)?;
    let t = simulate(&w, &shifts, cfg, false);
    let n = cfg.n_paths;
    // Paths surviving level j are those whose first surviving level is <= j.
    let mut cum = Vec::with_capacity(shifts.len());
    let mut acc = 0u64;
    for c in &t.first_alive[..shifts.len()] {
        acc += c;
        cum.push(acc);
    }
    let est = |count: u64| MCEstimate::bernoulli(count, n, cfg.seed, cfg.n_steps, note(cfg));
    Ok(eps
        .iter()
        .map(|&e| {
            let j = shifts.iter().position(|s| *s == e).unwrap_or(0);
            let diff = cum[j] - cum[0];
            let g = diff as f64 / n as f64;
            GapEstimate {
                eps: e,
                p_inner: est(cum[0]),
                p_outer: est(cum[j]),
                gap: g,
                joint_stderr: (g * (1.0 - g) / n as f64).sqrt(),
            }
        })
        .collect())
}

/// Histogram of the first exit time over `bins` equal bins of `(0, T]`.
/// The exit time is recorded at the right end of the offending step.
pub fn hitting_time_histogram(
    domain: &TimeSpaceDomain,
    bins: usize,
    cfg: &SimConfig,
) -> Result<HittingHistogram> {
    cfg.validate()?;
    if bins < 10 {
        return Err(precondition(format!("need at least 10 bins, got {bins}")));
    }
    let horizon = domain.horizon();
    let w = Window::new(domain, 0.0, horizon, cfg.n_steps, start_of(domain, cfg), None)?;
    let t = simulate(&w, &[0.0], cfg, true);
    let n_steps = cfg.n_steps;
    let mut counts = vec![0u64; bins];
    for (step, &c) in t.exits.iter().enumerate() {
        if c == 0 {
            continue;
        }
        // τ = step·T/n lies in bin ⌈step·bins/n⌉ − 1 of the (lo, hi] bins.
        let idx = ((step * bins).div_ceil(n_steps)).max(1) - 1;
        counts[idx] += c;
    }
    let n = cfg.n_paths;
    let nf = n as f64;
    let mass: Vec<f64> = counts.iter().map(|&c| c as f64 / nf).collect();
    let stderr = mass.iter().map(|p| (p * (1.0 - p) / nf).sqrt()).collect();
    let edges = (0..=bins).map(|i| horizon * i as f64 / bins as f64).collect();
    Ok(HittingHistogram {
        edges,
        counts,
        mass,
        stderr,
        survivors: t.first_alive[0],
        survival_mass: t.first_alive[0] as f64 / nf,
        n,
        seed: cfg.seed,
        n_steps,
        note: format!(
            "exit time recorded at the right end of the step (bias <= {} in time); {}",
            horizon / n_steps as f64,
            note(cfg)
        ),
    })
}

/// `P(τ > t | W_t = z)`: Brownian bridges from the start at time 0 to `z`
/// at time `t`, sampled exactly on the grid.
pub fn bridge_conditional_survival(
    domain: &TimeSpaceDomain,
    t: f64,
    z: &[f64],
    cfg: &SimConfig,
) -> Result<MCEstimate> {
    cfg.validate()?;
    if !(t > 0.0 && t <= domain.horizon()) {
        return Err(precondition(format!("t must lie in (0, {}], got {t}", domain.horizon())));
    }
    if z.len() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: z.len() });
    }
    if !domain.section(t).contains(z) {
        return Err(precondition(format!("endpoint {z:?} lies outside the section at t = {t}")));
    }
    let w = Window::new(domain, 0.0, t, cfg.n_steps, start_of(domain, cfg), Some(z.to_vec()))?;
    let tally = simulate(&w, &[0.0], cfg, false);
    Ok(MCEstimate::bernoulli(tally.first_alive[0], cfg.n_paths, cfg.seed, cfg.n_steps, note(cfg)))
}

/// `P(τ_t < t + h | W_t = z)`: paths started at `z` at time `t` that leave
/// the domain before `t + h`. `cfg.n_steps` steps cover the window.
pub fn window_exit_probability(
    domain: &TimeSpaceDomain,
    t: f64,
    z: &[f64],
    h: f64,
    cfg: &SimConfig,
) -> Result<MCEstimate> {
    cfg.validate()?;
    if !(t >= 0.0 && h > 0.0 && t + h <= domain.horizon() * (1.0 + 1e-12)) {
        return Err(precondition(format!(
            "window [{t}, {}] must lie inside [0, {}]",
            t + h,
            domain.horizon()
        )));
    }
    let w = Window::new(domain, t, t + h, cfg.n_steps, z.to_vec(), None)?;
    let tally = simulate(&w, &[0.0], cfg, false);
    let exits = cfg.n_paths - tally.first_alive[0];
    Ok(MCEstimate::bernoulli(exits, cfg.n_paths, cfg.seed, cfg.n_steps, note(cfg)))
}

/// Outcome of the radial comparison check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationResult {
    pub rate: f64,
    pub stderr: f64,
    pub violations: u64,
    pub n: u64,
    pub step: f64,
    /// Comparison horizon `t₀` and stopping level `a` of the regime.
    pub t0: f64,
    pub level: f64,
}

/// Co-simulates the radial part `S` of a Brownian bridge from `x` (time 0)
/// to `y` (time `t`) and the straight-drift reference process `S̄` on the
/// same noise, and reports how often `S̄ < S` at a grid point before the
/// stopping time `min(t₀, η_a(S))`.
///
/// `S` follows the Euler scheme for
/// `dS = ((ξ·y − S)/(t − s) + (m−1)/(2S)) ds + dW̃` with `ξ = B/‖B‖` taken
/// from an exactly sampled bridge `B` and `dW̃ = ξ·dW`; `S̄` has drift
/// `(‖y‖ − a)/(t − t₀) + (m−1)/(2a)`. The regime fixes
/// `(t₀, a) = (β/(2K), β/2)` when `t ≥ β/K` and `(t/2, β − Kt/2)` otherwise.
/// The grid step is `t / cfg.n_steps`.
pub fn radial_domination_rate(
    x: &[f64],
    y: &[f64],
    t: f64,
    beta: f64,
    k: f64,
    cfg: &SimConfig,
) -> Result<DominationResult> {
    cfg.validate()?;
    let m = x.len();
    if m == 0 || y.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: y.len() });
    }
    if !(beta > 0.0 && k > 0.0 && t > 0.0) {
        return Err(precondition("need beta > 0, K > 0 and t > 0"));
    }
    let x_norm = norm(x);
    if !(x_norm > beta) {
        return Err(precondition(format!("|x| = {x_norm} must exceed beta = {beta}")));
    }
    let (t0, a) = if t >= beta / k { (beta / (2.0 * k), beta / 2.0) } else { (t / 2.0, beta - k * t / 2.0) };
    let y_norm = norm(y);
    let m1 = m as f64 - 1.0;
    let drift_bar = (y_norm - a) / (t - t0) + m1 / (2.0 * a);
    let h = t / cfg.n_steps as f64;
    let sqrt_h = h.sqrt();
    let blocks = map_blocks(cfg.n_paths, |from, to| {
        let mut violations = 0u64;
        let mut b = vec![0.0; m];
        let mut z = vec![0.0; m];
        for path in from..to {
            let mut rng = PathRng::new(cfg.seed, path);
            b.copy_from_slice(x);
            let mut s_proc = x_norm;
            let mut s_bar = x_norm;
            let mut k_step = 0usize;
            loop {
                let s = k_step as f64 * h;
                if s + h > t0 + 1e-12 * t0 || s_proc <= a {
                    break;
                }
                z.iter_mut().for_each(|zi| *zi = rng.normal());
                let bn = norm(&b);
                let xi_dot_z;
                let xi_dot_y;
                if bn > 0.0 {
                    xi_dot_z = dot(&b, &z) / bn;
                    xi_dot_y = dot(&b, y) / bn;
                } else {
                    xi_dot_z = z[0];
                    xi_dot_y = y[0];
                }
                let dw = sqrt_h * xi_dot_z;
                let drift = (xi_dot_y - s_proc) / (t - s) + m1 / (2.0 * s_proc);
                s_proc = (s_proc + drift * h + dw).max(RADIAL_FLOOR);
                s_bar += drift_bar * h + dw;
                let remaining = t - s;
                let sd = (h * (remaining - h) / remaining).max(0.0).sqrt();
                for ((bi, yi), zi) in b.iter_mut().zip(y).zip(&z) {
                    *bi += (yi - *bi) * h / remaining + sd * zi;
                }
                k_step += 1;
                if s_bar < s_proc {
                    violations += 1;
                    break;
                }
            }
        }
        violations
    });
    let violations: u64 = blocks.iter().sum();
    let n = cfg.n_paths;
    let rate = violations as f64 / n as f64;
    Ok(DominationResult {
        rate,
        stderr: (rate * (1.0 - rate) / n as f64).sqrt(),
        violations,
        n,
        step: h,
        t0,
        level: a,
    })
}
