//! JSON experiment configuration: schema, loading, validation and
//! conversion into core types.
//!
//! The schema is strict: unknown keys are rejected everywhere so that a
//! typoed field can never silently fall back to a default.

use crate::error::{AppError, Result};
use rig_core::gibbs::NoiseFamily;
use rig_core::kernel::{DesignPoints, KernelSpec, RkhsElement};
use rig_core::spectral::{make_spectrum, DecayParams, SpectralKernelSpec};
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Complexity,
    Coverage,
    Rates,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Complexity => "complexity",
            ExperimentKind::Coverage => "coverage",
            ExperimentKind::Rates => "rates",
        }
    }
}

/// Eigenvalue decay law of a synthetic spectral kernel.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayConfig {
    Polynomial(PolynomialDecay),
    Exponential(ExponentialDecay),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialDecay {
    pub c_p: f64,
    pub beta_p: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentialDecay {
    pub c_e1: f64,
    pub c_e2: f64,
    pub beta_e: f64,
}

impl DecayConfig {
    pub fn to_params(&self) -> Result<DecayParams> {
        Ok(match self {
            DecayConfig::Polynomial(p) => DecayParams::polynomial(p.c_p, p.beta_p)?,
            DecayConfig::Exponential(e) => DecayParams::exponential(e.c_e1, e.c_e2, e.beta_e)?,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelConfig {
    Rbf(Lengthscaled),
    Matern32(Lengthscaled),
    Matern52(Lengthscaled),
    Linear(AmplitudeOnly),
    Spectral(SpectralConfig),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lengthscaled {
    pub lengthscale: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeOnly {
    pub amplitude: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    pub decay: DecayConfig,
    /// Number of Mercer modes kept in the synthetic expansion.
    pub modes: usize,
}

impl KernelConfig {
    /// Builds the core kernel spec; spectral kernels materialize their
    /// truncated expansion here.
    pub fn to_spec(&self) -> Result<KernelSpec> {
        use rig_core::kernel::KernelFamily;
        Ok(match self {
            KernelConfig::Rbf(p) => KernelSpec::rbf(p.lengthscale, p.amplitude)?,
            KernelConfig::Matern32(p) => KernelSpec::new(KernelFamily::Matern32, p.lengthscale, p.amplitude)?,
            KernelConfig::Matern52(p) => KernelSpec::new(KernelFamily::Matern52, p.lengthscale, p.amplitude)?,
            KernelConfig::Linear(p) => KernelSpec::linear(p.amplitude)?,
            KernelConfig::Spectral(_) => KernelSpec::spectral(self.to_spectral()?.expect("spectral kernel present")),
        })
    }

    /// The synthetic spectral expansion, if this kernel is spectral.
    pub fn to_spectral(&self) -> Result<Option<SpectralKernelSpec>> {
        match self {
            KernelConfig::Spectral(s) => {
                if s.modes == 0 {
                    return Err(AppError::config("spectral kernel needs modes >= 1"));
                }
                Ok(Some(make_spectrum(s.decay.to_params()?, s.modes)?))
            }
            _ => Ok(None),
        }
    }
}

/// How η, β, α are chosen: spelled out, or tied to n through a schedule.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatePolicy {
    Explicit(ExplicitRates),
    Schedule(ScheduleKindConfig),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitRates {
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKindConfig {
    Poly,
    Exp,
    PolySigmaTuned,
}

impl ScheduleKindConfig {
    pub fn to_kind(self) -> rig_core::bounds::ScheduleKind {
        use rig_core::bounds::ScheduleKind;
        match self {
            ScheduleKindConfig::Poly => ScheduleKind::Poly,
            ScheduleKindConfig::Exp => ScheduleKind::Exp,
            ScheduleKindConfig::PolySigmaTuned => ScheduleKind::PolySigmaTuned,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamilyConfig {
    Gaussian,
    UniformBounded,
    Rademacher,
    Zero,
}

impl NoiseFamilyConfig {
    pub fn to_family(self) -> NoiseFamily {
        match self {
            NoiseFamilyConfig::Gaussian => NoiseFamily::Gaussian,
            NoiseFamilyConfig::UniformBounded => NoiseFamily::UniformBounded,
            NoiseFamilyConfig::Rademacher => NoiseFamily::Rademacher,
            NoiseFamilyConfig::Zero => NoiseFamily::Zero,
        }
    }
}

/// The regression target f* as a finite kernel combination.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FstarConfig {
    pub anchors: Vec<Vec<f64>>,
    pub coefficients: Vec<f64>,
}

impl FstarConfig {
    pub fn to_element(&self) -> Result<RkhsElement> {
        let anchors = DesignPoints::new(self.anchors.clone())?;
        Ok(RkhsElement::new(anchors, self.coefficients.clone())?)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub kernel: KernelConfig,
    pub n_grid: Vec<usize>,
    pub rate_policy: RatePolicy,
    pub sigma: f64,
    pub delta: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub output_path: String,
    #[serde(default)]
    pub noise_family: Option<NoiseFamilyConfig>,
    #[serde(default)]
    pub fstar: Option<FstarConfig>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::io(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| AppError::config(format!("cannot parse config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| AppError::config(format!("cannot parse config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(AppError::config("n_grid must be non-empty"));
        }
        if self.n_grid.contains(&0) {
            return Err(AppError::config("n_grid entries must be positive"));
        }
        if !self.n_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(AppError::config("n_grid must be strictly increasing"));
        }
        if self.trials == 0 {
            return Err(AppError::config("trials must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(AppError::config("delta must lie in (0, 1]"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(AppError::config("sigma must be positive and finite"));
        }
        // Eagerly materialize kernel and target so bad parameters surface as
        // config errors rather than mid-run.
        self.kernel.to_spec()?;
        if let Some(f) = &self.fstar {
            f.to_element()?;
        }
        match self.experiment {
            ExperimentKind::Complexity => self.validate_complexity(),
            ExperimentKind::Coverage => self.validate_coverage(),
            ExperimentKind::Rates => self.validate_rates(),
        }
    }

    fn validate_complexity(&self) -> Result<()> {
        if self.kernel.to_spectral()?.is_none() {
            return Err(AppError::config(
                "complexity experiments need a spectral kernel so the tail bounds are computable",
            ));
        }
        if self.fstar.is_some() {
            return Err(AppError::config("complexity experiments involve no data; remove fstar"));
        }
        if self.noise_family.is_some() {
            return Err(AppError::config("complexity experiments involve no data; remove noise_family"));
        }
        match &self.rate_policy {
            RatePolicy::Explicit(r) => {
                let eta = r.eta.ok_or_else(|| AppError::config("complexity needs an explicit eta"))?;
                let beta = r.beta.ok_or_else(|| AppError::config("complexity needs an explicit beta"))?;
                if r.alpha.is_some() {
                    return Err(AppError::config("complexity does not use alpha; remove it"));
                }
                if !(eta > 0.0 && eta.is_finite()) {
                    return Err(AppError::config("eta must be positive and finite"));
                }
                if !(beta >= 0.0 && beta < eta) {
                    return Err(AppError::config("beta must satisfy 0 <= beta < eta"));
                }
                Ok(())
            }
            RatePolicy::Schedule(_) => Err(AppError::config(
                "complexity profiles take explicit eta and beta, not a schedule",
            )),
        }
    }

    fn validate_coverage(&self) -> Result<()> {
        if self.n_grid.len() != 1 {
            return Err(AppError::config("coverage runs at a single n; n_grid must have exactly one entry"));
        }
        if self.fstar.is_none() {
            return Err(AppError::config("coverage needs an fstar target"));
        }
        match &self.rate_policy {
            RatePolicy::Explicit(r) => {
                if r.eta.is_some() || r.beta.is_some() {
                    return Err(AppError::config(
                        "coverage fixes eta = 1/(4 sigma^2) and beta = 1/(32 sigma^2); only alpha is free",
                    ));
                }
                let alpha = r.alpha.ok_or_else(|| AppError::config("coverage needs an explicit alpha"))?;
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(AppError::config("alpha must be positive and finite"));
                }
                Ok(())
            }
            RatePolicy::Schedule(_) => Err(AppError::config(
                "coverage takes an explicit alpha, not a schedule",
            )),
        }
    }

    fn validate_rates(&self) -> Result<()> {
        if self.kernel.to_spectral()?.is_none() {
            return Err(AppError::config(
                "rate experiments need a spectral kernel so the decay condition holds by construction",
            ));
        }
        if self.fstar.is_none() {
            return Err(AppError::config("rates needs an fstar target"));
        }
        match &self.rate_policy {
            RatePolicy::Schedule(_) => Ok(()),
            RatePolicy::Explicit(_) => Err(AppError::config(
                "rate experiments tie alpha to n through a schedule; use rate_policy = schedule",
            )),
        }
    }

    /// The noise model, with the per-run seed filled in later. Zero noise
    /// forces scale 0; every other family draws at scale sigma.
    pub fn noise_spec(&self, seed: u64) -> Result<rig_core::gibbs::NoiseSpec> {
        let family = self.noise_family.unwrap_or(NoiseFamilyConfig::Gaussian).to_family();
        let scale = if family == NoiseFamily::Zero { 0.0 } else { self.sigma };
        Ok(rig_core::gibbs::NoiseSpec::new(family, scale, seed)?)
    }
}
