//! The four subcommands. Each returns a serialisable result; report
//! framing and exit codes live in the crate root.

use bcp_core::bounds::{density_envelope, density_envelope_min, theorem1_constant, BoundParams};
use bcp_core::closedform::piecewise_linear_bcp_1d;
use bcp_core::domain::{
    estimate_gamma, estimate_lipschitz_refined, exterior_ball_radius, make_domain, CertificateProvenance,
    DomainCertificate, DomainFamily, GammaEstimate, LipschitzEstimate, Provenance, TimeSpaceDomain,
};
use bcp_core::mc::{estimate_gaps, estimate_survival, hitting_time_histogram, GapEstimate, HittingHistogram, MCEstimate};
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

/// How the domain was rescaled before any bound was evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Normalization {
    pub original_horizon: f64,
    /// Time is multiplied by this factor.
    pub time_scale: f64,
    /// Space is multiplied by this factor.
    pub space_scale: f64,
}

pub(crate) struct Prepared {
    pub domain: TimeSpaceDomain,
    pub normalized: TimeSpaceDomain,
    pub normalization: Normalization,
}

pub(crate) fn prepare(cfg: &RunConfig) -> Result<Prepared, CliError> {
    let domain = make_domain(&cfg.domain)?;
    let t = domain.horizon();
    Ok(Prepared {
        normalized: domain.normalized(),
        domain,
        normalization: Normalization { original_horizon: t, time_scale: 1.0 / t, space_scale: 1.0 / t.sqrt() },
    })
}

/// Fills in the domain-dependent defaults so the report records them.
pub fn expand_defaults(cfg: &RunConfig) -> Result<RunConfig, CliError> {
    let mut out = cfg.clone();
    let p = prepare(cfg)?;
    if out.command.gamma_t_grid.is_none() {
        out.command.gamma_t_grid = Some((1..=8).map(|i| i as f64 / 8.0).collect());
    }
    if out.command.gamma_v_grid.is_none() {
        let ts = out.command.gamma_t_grid.as_deref().unwrap_or_default();
        let thick = ts
            .iter()
            .filter_map(|&t| p.normalized.section(t).inradius())
            .fold(f64::INFINITY, f64::min);
        let vmax = (0.5 * thick).min(0.1);
        out.command.gamma_v_grid = Some((1..=10).map(|i| vmax * i as f64 / 10.0).collect());
    }
    if out.command.gamma_seed.is_none() {
        out.command.gamma_seed = Some(cfg.sim.seed);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidateResult {
    pub certificate: DomainCertificate,
    /// Grid estimate of `K`, also reported when a closed form exists.
    pub lipschitz_grid: Option<LipschitzEstimate>,
    pub gamma_estimate: Option<GammaEstimate>,
    pub warnings: Vec<String>,
}

/// Certificate of the normalised domain.
pub fn cmd_validate(cfg: &RunConfig) -> Result<ValidateResult, CliError> {
    let cfg = &expand_defaults(cfg)?;
    let p = prepare(cfg)?;
    certificate(cfg, &p.normalized)
}

fn certificate(cfg: &RunConfig, domain: &TimeSpaceDomain) -> Result<ValidateResult, CliError> {
    let o = &cfg.certificate;
    let mut warnings = Vec::new();
    let mut lipschitz_grid = None;
    let mut gamma_estimate = None;
    let (k, k_prov) = match o.k {
        Some(k) => (k, Provenance::Manual),
        None => {
            let grid = estimate_lipschitz_refined(domain, cfg.command.k_grid_points)?;
            let out = match domain.analytic_lipschitz() {
                Some(k) => (k, Provenance::Analytic),
                None => (grid.k, Provenance::Grid { points: grid.grid_points }),
            };
            if !grid.converged {
                warnings.push(format!("Lipschitz grid estimate did not settle by {} points", grid.grid_points));
            }
            lipschitz_grid = Some(grid);
            out
        }
    };
    let (beta, beta_prov) = match o.beta {
        Some(b) => (b, Provenance::Manual),
        None => (exterior_ball_radius(domain)?, Provenance::Analytic),
    };
    let (mut gamma, mut gamma_prov, mut v0, mut v0_prov) = (0.0, Provenance::Manual, 0.0, Provenance::Manual);
    if o.gamma.is_none() || o.v0.is_none() {
        let c = &cfg.command;
        let ts = c.gamma_t_grid.clone().unwrap_or_default();
        let vs = c.gamma_v_grid.clone().unwrap_or_default();
        let est = estimate_gamma(domain, &ts, &vs, c.gamma_samples, c.gamma_seed.unwrap_or(cfg.sim.seed))?;
        (gamma, gamma_prov, v0, v0_prov) = (est.gamma, est.provenance.clone(), est.v0, est.provenance.clone());
        gamma_estimate = Some(est);
    }
    if let Some(g) = o.gamma {
        (gamma, gamma_prov) = (g, Provenance::Manual);
    }
    if let Some(v) = o.v0 {
        (v0, v0_prov) = (v, Provenance::Manual);
    }
    let certificate = DomainCertificate {
        m: domain.dim(),
        horizon: domain.horizon(),
        k,
        beta,
        gamma,
        v0,
        provenance: CertificateProvenance { k: k_prov, beta: beta_prov, gamma: gamma_prov, v0: v0_prov },
    };
    certificate.validate()?;
    if k == 0.0 {
        warnings.push("K = 0: the dilation theorem needs K > 0, so certify and density will refuse this certificate".into());
    }
    Ok(ValidateResult { certificate, lipschitz_grid, gamma_estimate, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    pub method: String,
    pub estimate: MCEstimate,
}

/// Survival probability of the domain as given. One-dimensional bands
/// started at the origin go through the exact-at-knots band estimator.
pub fn cmd_estimate(cfg: &RunConfig) -> Result<EstimateResult, CliError> {
    let p = prepare(cfg)?;
    let start = cfg.sim.start.as_deref().unwrap_or(p.domain.start());
    if let DomainFamily::Band1DTube { lower, upper } = p.domain.family() {
        if start == [0.0] {
            let est = piecewise_linear_bcp_1d(lower.as_ref(), upper.as_ref(), cfg.sim.n_paths, cfg.sim.seed)?;
            return Ok(EstimateResult { method: "piecewise_linear_bcp_1d".into(), estimate: est });
        }
    }
    let est = estimate_survival(&p.domain, &cfg.sim)?;
    Ok(EstimateResult { method: "estimate_survival".into(), estimate: est })
}

/// Constant of the dilation theorem as applied by `certify`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantReport {
    pub c: f64,
    pub c_star: f64,
    pub beta_eff: f64,
    /// Largest admissible `eps`.
    pub eps_max: f64,
    pub note: String,
}

const COROLLARY_NOTE: &str = "c is the dilation-theorem constant c(K, beta, gamma); it is reported as the \
constant of the closeness corollary |P(G') - P(G'')| < c eps for domains within rho_H distance eps, \
whose constant is not given separately";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyRow {
    pub eps: f64,
    pub gap: Option<GapEstimate>,
    pub c: Option<f64>,
    pub bound: Option<f64>,
    pub pass: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyResult {
    pub certificate: ValidateResult,
    pub constant: ConstantReport,
    pub rows: Vec<CertifyRow>,
    pub all_pass: bool,
}

impl CertifyResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("eps,p_inner,p_outer,gap,joint_stderr,c,bound,pass,error\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let g = r.gap.as_ref();
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.eps,
                opt(g.map(|g| g.p_inner.mean)),
                opt(g.map(|g| g.p_outer.mean)),
                opt(g.map(|g| g.gap)),
                opt(g.map(|g| g.joint_stderr)),
                opt(r.c),
                opt(r.bound),
                r.pass.map(|b| b.to_string()).unwrap_or_default(),
                csv_text(r.error.as_deref().unwrap_or("")),
            ));
        }
        s
    }
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Dilation gaps on common random numbers against the certified `cε`.
/// A row passes when `gap ≤ cε + 3σ`.
pub fn cmd_certify(cfg: &RunConfig) -> Result<CertifyResult, CliError> {
    let cfg = &expand_defaults(cfg)?;
    let p = prepare(cfg)?;
    let cert = certificate(cfg, &p.normalized)?;
    let constant = theorem1_constant(&cert.certificate)?;
    if let Some(e) = cfg.command.eps.iter().find(|e| !(**e >= 0.0) || !e.is_finite()) {
        return Err(CliError::Input(format!("command.eps must be finite and >= 0, got {e}")));
    }
    let gaps = estimate_gaps(&p.normalized, &cfg.command.eps, &cfg.sim)?;
    let rows: Vec<CertifyRow> = gaps
        .into_iter()
        .map(|g| match constant.certify(g.eps) {
            Ok(b) => CertifyRow {
                eps: g.eps,
                c: Some(b.c),
                bound: Some(b.certified_gap),
                pass: Some(g.gap <= b.certified_gap + 3.0 * g.joint_stderr),
                error: None,
                gap: Some(g),
            },
            Err(e) => CertifyRow { eps: g.eps, c: None, bound: None, pass: None, error: Some(e.to_string()), gap: Some(g) },
        })
        .collect();
    let all_pass = rows.iter().all(|r| r.pass == Some(true));
    Ok(CertifyResult {
        certificate: cert,
        constant: ConstantReport {
            c: constant.c,
            c_star: constant.c_star,
            beta_eff: constant.params.beta,
            eps_max: constant.params.beta / 2.0,
            note: COROLLARY_NOTE.into(),
        },
        rows,
        all_pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityRow {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub mass: f64,
    pub stderr: f64,
    pub density: f64,
    pub envelope_mid: f64,
    pub envelope_min: f64,
    /// `density − 3σ/width` exceeds the bin minimum of the envelope.
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityResult {
    pub certificate: ValidateResult,
    pub histogram: HittingHistogram,
    pub rows: Vec<DensityRow>,
    pub violations: usize,
}

impl DensityResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_lo,bin_hi,mass,stderr,density,envelope_mid,envelope_min,violation\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.bin_lo, r.bin_hi, r.mass, r.stderr, r.density, r.envelope_mid, r.envelope_min, r.violation
            ));
        }
        s
    }
}

/// First-exit-time histogram of the normalised domain against the
/// density envelope.
pub fn cmd_density(cfg: &RunConfig) -> Result<DensityResult, CliError> {
    let cfg = &expand_defaults(cfg)?;
    let p = prepare(cfg)?;
    let cert = certificate(cfg, &p.normalized)?;
    let params = BoundParams::from_certificate(&cert.certificate)?;
    let hist = hitting_time_histogram(&p.normalized, cfg.command.bins, &cfg.sim)?;
    let mut rows = Vec::with_capacity(hist.bins());
    for i in 0..hist.bins() {
        let (lo, hi) = (hist.edges[i], hist.edges[i + 1]);
        let w = hist.width(i);
        let density = hist.mass[i] / w;
        let envelope_min = density_envelope_min(lo, hi, &params)?;
        rows.push(DensityRow {
            bin_lo: lo,
            bin_hi: hi,
            mass: hist.mass[i],
            stderr: hist.stderr[i],
            density,
            envelope_mid: density_envelope(0.5 * (lo + hi), &params)?,
            envelope_min,
            violation: density - 3.0 * hist.stderr[i] / w > envelope_min,
        });
    }
    let violations = rows.iter().filter(|r| r.violation).count();
    Ok(DensityResult { certificate: cert, histogram: hist, rows, violations })
}
