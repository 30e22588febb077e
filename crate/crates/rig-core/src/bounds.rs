//! PAC-Bayesian excess-risk bounds for Gibbs posteriors and the coverage
//! experiment that checks them empirically.
//!
//! The headline bound controls the average excess risk of Q_{n,η,α} by
//! (2γ_n(2ηα, 2βα) + ‖f*‖²_H/(2α) + 2 log(1/δ)) / (n(η − 2σ²η² − β − 2σ²β²)).
//! A baseline bound with the plain GP prior N(0, αK) and the refined
//! objective with the Gibbs prior Q_{n,β,α} are evaluated alongside it.

use crate::complexity::relative_information_gain;
use crate::error::{Error, Result};
use crate::gibbs::{
    average_empirical_risk, average_excess_risk, empirical_risk, generate_data, gibbs_posterior,
    kl_gaussian, GaussianMeasure, NoiseSpec, RegressionInstance,
};
use crate::kernel::{
    build_kernel_matrix, eigenvalues_sym, rkhs_norm_sq, DesignPoints, EigenSpectrum, KernelMatrix,
    KernelSpec, RkhsElement, DEFAULT_JITTER_POLICY,
};
use crate::linalg;
use crate::spectral::DecayParams;

/// The tuple (η, β, α, σ, δ, n) a bound is evaluated at. Construction checks
/// η ∈ (0, 1/(2σ²)) and that the denominator η − 2σ²η² − β − 2σ²β² is
/// positive; everything downstream can then divide by it safely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub eta: f64,
    pub beta: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub delta: f64,
    pub n: usize,
}

impl BoundParams {
    pub fn new(eta: f64, beta: f64, alpha: f64, sigma: f64, delta: f64, n: usize) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid("sigma must be positive and finite"));
        }
        if !(eta > 0.0 && eta < 1.0 / (2.0 * sigma * sigma)) {
            return Err(Error::invalid(format!(
                "eta must lie in (0, 1/(2 sigma^2)) = (0, {}), got {eta}",
                1.0 / (2.0 * sigma * sigma)
            )));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::invalid("beta must be positive and finite"));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::invalid("alpha must be positive and finite"));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::invalid("delta must lie in (0, 1]"));
        }
        if n == 0 {
            return Err(Error::invalid("sample size must be at least 1"));
        }
        let params = BoundParams { eta, beta, alpha, sigma, delta, n };
        if !(params.denominator() > 0.0) {
            return Err(Error::invalid(format!(
                "bound denominator eta - 2 sigma^2 eta^2 - beta - 2 sigma^2 beta^2 = {} must be positive",
                params.denominator()
            )));
        }
        Ok(params)
    }

    /// η − 2σ²η² − β − 2σ²β², evaluated left to right.
    pub fn denominator(&self) -> f64 {
        let s2 = self.sigma * self.sigma;
        self.eta - 2.0 * s2 * self.eta * self.eta - self.beta - 2.0 * s2 * self.beta * self.beta
    }
}

/// One evaluated bound next to the realized risk it is supposed to dominate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    /// γ_n(2ηα, 2βα).
    pub rig: f64,
    /// ‖f*‖²_H / (2α).
    pub norm_term: f64,
    /// 2 log(1/δ).
    pub conf_term: f64,
    pub denominator: f64,
    pub bound_value: f64,
    pub realized_avg_excess_risk: f64,
    pub violated: bool,
}

/// The bound value from an already-computed relative information gain.
pub fn theorem_bound_value(rig: f64, params: &BoundParams, fstar_norm_sq: f64) -> f64 {
    let numerator = 2.0 * rig + fstar_norm_sq / (2.0 * params.alpha) + 2.0 * (1.0 / params.delta).ln();
    numerator / (params.n as f64 * params.denominator())
}

/// The excess-risk bound evaluated from a kernel spectrum.
pub fn theorem_bound(spectrum: &EigenSpectrum, params: &BoundParams, fstar_norm_sq: f64) -> Result<f64> {
    let rig = relative_information_gain(
        spectrum,
        2.0 * params.eta * params.alpha,
        2.0 * params.beta * params.alpha,
    )?;
    Ok(theorem_bound_value(rig, params, fstar_norm_sq))
}

/// Bound evaluation plus the realized risk comparison, for reporting.
pub fn theorem_report(
    spectrum: &EigenSpectrum,
    params: &BoundParams,
    fstar_norm_sq: f64,
    realized_avg_excess_risk: f64,
) -> Result<BoundReport> {
    let rig = relative_information_gain(
        spectrum,
        2.0 * params.eta * params.alpha,
        2.0 * params.beta * params.alpha,
    )?;
    let norm_term = fstar_norm_sq / (2.0 * params.alpha);
    let conf_term = 2.0 * (1.0 / params.delta).ln();
    let denominator = params.denominator();
    let bound_value = (2.0 * rig + norm_term + conf_term) / (params.n as f64 * denominator);
    Ok(BoundReport {
        rig,
        norm_term,
        conf_term,
        denominator,
        bound_value,
        realized_avg_excess_risk,
        violated: realized_avg_excess_risk > bound_value,
    })
}

/// The baseline PAC-Bayesian objective with the zero-mean GP prior N(0, αK):
/// risk_diff_term = η(∫r_n dQ − r_n(f*_n))/(η − 2σ²η²),
/// kl_term = (KL(Q‖P) + log(1/δ))/(n(η − 2σ²η²)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineBound {
    pub risk_diff_term: f64,
    pub kl_term: f64,
}

impl BaselineBound {
    pub fn total(&self) -> f64 {
        self.risk_diff_term + self.kl_term
    }
}

pub fn baseline_bound_rhs(
    q: &GaussianMeasure,
    prior: &GaussianMeasure,
    inst: &RegressionInstance,
    eta: f64,
    sigma: f64,
    delta: f64,
) -> Result<BaselineBound> {
    if !(sigma > 0.0) || !(eta > 0.0 && eta < 1.0 / (2.0 * sigma * sigma)) {
        return Err(Error::invalid("baseline bound needs eta in (0, 1/(2 sigma^2))"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid("delta must lie in (0, 1]"));
    }
    let denom = eta - 2.0 * sigma * sigma * eta * eta;
    let avg_risk = average_empirical_risk(q, &inst.y)?;
    let risk_at_fstar = empirical_risk(&inst.fstar_values, &inst.y)?;
    let kl = kl_gaussian(q, prior)?.total();
    Ok(BaselineBound {
        risk_diff_term: eta * (avg_risk - risk_at_fstar) / denom,
        kl_term: (kl + (1.0 / delta).ln()) / (inst.n() as f64 * denom),
    })
}

/// The refined objective with the Gibbs prior Q_{n,β,α} and denominator
/// Δ = η − 2σ²η² − β − 2σ²β²:
/// (η−β)(∫r_n dQ − r_n(f*_n))/Δ + (KL(Q‖Q_{n,β,α}) + 2 log(1/δ))/(nΔ).
/// Minimized over Gaussians at Q = Q_{n,η,α}.
pub fn refined_bound_objective(
    q: &GaussianMeasure,
    prior_beta: &GaussianMeasure,
    inst: &RegressionInstance,
    params: &BoundParams,
) -> Result<f64> {
    let denom = params.denominator();
    let avg_risk = average_empirical_risk(q, &inst.y)?;
    let risk_at_fstar = empirical_risk(&inst.fstar_values, &inst.y)?;
    let kl = kl_gaussian(q, prior_beta)?.total();
    Ok((params.eta - params.beta) * (avg_risk - risk_at_fstar) / denom
        + (kl + 2.0 * (1.0 / params.delta).ln()) / (inst.n() as f64 * denom))
}

/// Checks the quadratic-form step used in deriving the bound:
/// (f̂ − m_{n,β,α})ᵀ K_{n,β,α}⁻¹ (f̂ − m_{n,β,α}) ≤ ‖f*‖²_H/α with f̂ the
/// ζ→0⁺ interpolant (whose values are y). The step only applies when the
/// interpolant's RKHS norm does not exceed ‖f*‖_H, so `None` means the draw
/// does not qualify and the check is skipped.
pub fn quadratic_term_check(
    k: &KernelMatrix,
    inst: &RegressionInstance,
    params: &BoundParams,
    fstar_norm_sq: f64,
) -> Result<Option<(f64, f64)>> {
    let chol = linalg::spd_cholesky(k.entries().clone(), "kernel matrix in quadratic-term check")?;
    let y = nalgebra::DVector::from_column_slice(&inst.y);
    let interp_norm_sq = y.dot(&chol.solve(&y));
    if interp_norm_sq > fstar_norm_sq {
        return Ok(None);
    }
    let q_beta = gibbs_posterior(k, &inst.y, params.beta, params.alpha)?;
    let resid = &y - q_beta.mean();
    let chol_cov = linalg::spd_cholesky(q_beta.covariance().clone(), "prior covariance in quadratic-term check")?;
    let lhs = resid.dot(&chol_cov.solve(&resid));
    Ok(Some((lhs, fstar_norm_sq / params.alpha)))
}

/// How the bound's (η, β, α) are tied to the problem size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    /// Polynomial decay: α = n^{−1/(1+β_p)}.
    Poly,
    /// Exponential decay: α = 1.
    Exp,
    /// Polynomial decay with α tuned for the best σ dependence.
    PolySigmaTuned,
}

/// Produces the standard schedule η = 1/(4σ²), β = 1/(32σ²), with α set per
/// decay kind.
pub fn rate_schedule(
    kind: ScheduleKind,
    n: usize,
    sigma: f64,
    decay: &DecayParams,
    psi: f64,
    fstar_norm_sq: f64,
    delta: f64,
) -> Result<BoundParams> {
    if n == 0 {
        return Err(Error::invalid("schedule needs n >= 1"));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid("schedule needs sigma > 0"));
    }
    let eta = 1.0 / (4.0 * sigma * sigma);
    let beta = 1.0 / (32.0 * sigma * sigma);
    let alpha = match (kind, decay) {
        (ScheduleKind::Poly, DecayParams::Polynomial { beta_p, .. }) => {
            (n as f64).powf(-1.0 / (1.0 + beta_p))
        }
        (ScheduleKind::Exp, DecayParams::Exponential { .. }) => 1.0,
        (ScheduleKind::PolySigmaTuned, DecayParams::Polynomial { c_p, beta_p }) => {
            let bp = *beta_p;
            (bp / 2.0).powf(bp / (1.0 + bp))
                * (c_p * psi * psi / 2.0).powf(-1.0 / (1.0 + bp))
                * 8.0_f64.ln().powf((1.0 - bp) / (1.0 + bp))
                * fstar_norm_sq.powf(bp / (1.0 + bp))
                * sigma.powf(2.0 / (1.0 + bp))
                * (n as f64).powf(-1.0 / (1.0 + bp))
        }
        _ => {
            return Err(Error::invalid("schedule kind does not match the decay family"));
        }
    };
    BoundParams::new(eta, beta, alpha, sigma, delta, n)
}

/// Coverage experiment: fixed design and target, T independent noise draws,
/// one bound-vs-realized-risk comparison per draw.
#[derive(Debug, Clone)]
pub struct CoverageConfig {
    pub kernel: KernelSpec,
    pub x: DesignPoints,
    pub fstar: RkhsElement,
    pub noise: NoiseSpec,
    pub alpha: f64,
    pub delta: f64,
    pub trials: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageTrial {
    pub trial: usize,
    pub bound_value: f64,
    pub realized_risk: f64,
    pub violated: bool,
}

#[derive(Debug, Clone)]
pub struct CoverageResult {
    pub trials: Vec<CoverageTrial>,
    pub violations: usize,
    pub violation_fraction: f64,
    /// δ + 3√(δ(1−δ)/T), the binomial three-standard-error allowance.
    pub slack_threshold: f64,
}

pub fn coverage_experiment(cfg: &CoverageConfig) -> Result<CoverageResult> {
    if cfg.trials == 0 {
        return Err(Error::invalid("coverage needs at least one trial"));
    }
    let k = build_kernel_matrix(&cfg.kernel, &cfg.x, DEFAULT_JITTER_POLICY)?;
    let spectrum = eigenvalues_sym(&k)?;
    let fstar_norm_sq = rkhs_norm_sq(&cfg.fstar, &cfg.kernel)?;
    let sigma = cfg.noise.sigma();
    let params = BoundParams::new(
        1.0 / (4.0 * sigma * sigma),
        1.0 / (32.0 * sigma * sigma),
        cfg.alpha,
        sigma,
        cfg.delta,
        cfg.x.n(),
    )?;

    let mut trials = Vec::with_capacity(cfg.trials);
    let mut violations = 0usize;
    for t in 0..cfg.trials {
        let noise = NoiseSpec { seed: cfg.master_seed ^ t as u64, ..cfg.noise };
        let inst = generate_data(&cfg.kernel, &cfg.x, &cfg.fstar, &noise)?;
        let q = gibbs_posterior(&k, &inst.y, params.eta, params.alpha)?;
        let realized = average_excess_risk(&q, &inst.fstar_values)?;
        let report = theorem_report(&spectrum, &params, fstar_norm_sq, realized)?;
        if report.violated {
            violations += 1;
        }
        trials.push(CoverageTrial {
            trial: t,
            bound_value: report.bound_value,
            realized_risk: realized,
            violated: report.violated,
        });
    }
    let t_f = cfg.trials as f64;
    Ok(CoverageResult {
        trials,
        violations,
        violation_fraction: violations as f64 / t_f,
        slack_threshold: cfg.delta + 3.0 * (cfg.delta * (1.0 - cfg.delta) / t_f).sqrt(),
    })
}
