//! Kernel complexity measures and their closed-form upper bounds.
//!
//! Three quantities drive everything downstream: the effective dimension
//! d_n(η) = tr(K(K + I/η)⁻¹), the information gain γ_n(η) = ½ log det(ηK + I),
//! and the relative information gain γ_n(η, β) = γ_n(η) − γ_n(β). The scaled
//! relative gain (2η/(η−β))·γ_n(η,β) interpolates between d_n(η) and 2γ_n(η).
//! All logs are natural.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernel::{EigenSpectrum, KernelMatrix};
use crate::linalg;
use crate::spectral::{DecayParams, SpectralKernelSpec};
use crate::kernel::DesignPoints;

/// The complexity measures of one (η, β) cell, computed from a spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityProfile {
    pub eta: f64,
    pub beta: f64,
    pub d_eff: f64,
    pub info_gain: f64,
    pub rel_info_gain: f64,
    pub scaled_rig: f64,
}

impl ComplexityProfile {
    pub fn compute(spectrum: &EigenSpectrum, eta: f64, beta: f64) -> Result<Self> {
        Ok(ComplexityProfile {
            eta,
            beta,
            d_eff: effective_dimension(spectrum, eta)?,
            info_gain: information_gain(spectrum, eta)?,
            rel_info_gain: relative_information_gain(spectrum, eta, beta)?,
            scaled_rig: scaled_rig(spectrum, eta, beta)?,
        })
    }
}

fn check_eta_positive(eta: f64) -> Result<()> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::invalid("learning rate must be positive and finite"));
    }
    Ok(())
}

fn check_rate_pair(eta: f64, beta: f64) -> Result<()> {
    check_eta_positive(eta)?;
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::invalid("second rate must be non-negative and finite"));
    }
    if beta >= eta {
        return Err(Error::invalid(format!("rates must satisfy beta < eta, got beta = {beta}, eta = {eta}")));
    }
    Ok(())
}

/// d_n(η) = Σ_i ηλ_i / (1 + ηλ_i); always in [0, n].
pub fn effective_dimension(spectrum: &EigenSpectrum, eta: f64) -> Result<f64> {
    check_eta_positive(eta)?;
    Ok(spectrum.values().iter().map(|l| eta * l / (1.0 + eta * l)).sum())
}

/// d_n(η) = tr(K(K + I/η)⁻¹) straight from the matrix, no eigenvalues.
pub fn effective_dimension_matrix(k: &KernelMatrix, eta: f64) -> Result<f64> {
    check_eta_positive(eta)?;
    let n = k.n();
    let mut shifted = k.entries().clone();
    for i in 0..n {
        shifted[(i, i)] += 1.0 / eta;
    }
    let chol = linalg::spd_cholesky(shifted, "effective dimension resolvent")?;
    let solved = chol.solve(k.entries());
    Ok(solved.trace())
}

/// γ_n(η) = ½ Σ_i log(1 + ηλ_i).
pub fn information_gain(spectrum: &EigenSpectrum, eta: f64) -> Result<f64> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::invalid("information gain needs a non-negative rate"));
    }
    Ok(0.5 * spectrum.values().iter().map(|l| (eta * l).ln_1p()).sum::<f64>())
}

/// γ_n(η) = ½ log det(ηK + I) straight from the matrix.
pub fn information_gain_matrix(k: &KernelMatrix, eta: f64) -> Result<f64> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::invalid("information gain needs a non-negative rate"));
    }
    let n = k.n();
    let mut m = k.entries() * eta;
    for i in 0..n {
        m[(i, i)] += 1.0;
    }
    let chol = linalg::spd_cholesky(m, "information gain determinant")?;
    Ok(0.5 * linalg::chol_logdet(&chol))
}

/// γ_n(η, β) = ½ Σ_i log((1 + ηλ_i)/(1 + βλ_i)), computed as a single sum of
/// log1p terms so that η ≈ β does not cancel catastrophically.
pub fn relative_information_gain(spectrum: &EigenSpectrum, eta: f64, beta: f64) -> Result<f64> {
    check_rate_pair(eta, beta)?;
    Ok(0.5
        * spectrum
            .values()
            .iter()
            .map(|l| ((eta - beta) * l / (1.0 + beta * l)).ln_1p())
            .sum::<f64>())
}

/// (2η/(η−β))·γ_n(η, β); equals 2γ_n(η) at β = 0 and tends to d_n(η) as β→η⁻.
pub fn scaled_rig(spectrum: &EigenSpectrum, eta: f64, beta: f64) -> Result<f64> {
    let rig = relative_information_gain(spectrum, eta, beta)?;
    Ok(2.0 * eta / (eta - beta) * rig)
}

/// γ_n(η) split along the rank-D kernel decomposition:
/// term_par = ½ log det(ηK∥ + I) and
/// term_perp = ½ log det(I + η(I + ηK∥)⁻¹K⊥), computed from its own Cholesky
/// pass on L⁻¹K⊥L⁻ᵀ so the additivity check against γ_n(η) stays independent.
pub fn split_information_gain(
    spec: &SpectralKernelSpec,
    x: &DesignPoints,
    d: usize,
    eta: f64,
) -> Result<(f64, f64)> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::invalid("split information gain needs a non-negative rate"));
    }
    let (k_par, k_perp) = crate::spectral::split_kernel_matrices(spec, x, d)?;
    let n = x.n();
    let mut s = k_par.entries() * eta;
    for i in 0..n {
        s[(i, i)] += 1.0;
    }
    let chol_s = linalg::spd_cholesky(s, "parallel part of the split")?;
    let term_par = 0.5 * linalg::chol_logdet(&chol_s);

    let l = chol_s.l();
    let y = l
        .solve_lower_triangular(k_perp.entries())
        .ok_or_else(|| Error::numeric("triangular solve failed in split information gain"))?;
    let w = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::numeric("triangular solve failed in split information gain"))?;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = 0.5 * eta * (w[(i, j)] + w[(j, i)]);
        }
        m[(i, i)] += 1.0;
    }
    let chol_m = linalg::spd_cholesky(m, "perpendicular part of the split")?;
    let term_perp = 0.5 * linalg::chol_logdet(&chol_m);
    Ok((term_par, term_perp))
}

/// log(det(ηG + I)/det(βG + I)) for the D×D feature Gram matrix
/// G = Ξ^{1/2}ΦᵀΦΞ^{1/2}; always at most D·log(η/β).
pub fn gram_logdet_ratio(
    spec: &SpectralKernelSpec,
    x: &DesignPoints,
    d: usize,
    eta: f64,
    beta: f64,
) -> Result<f64> {
    if !(eta > beta && beta > 0.0) || !eta.is_finite() {
        return Err(Error::invalid("gram log-det ratio needs eta > beta > 0"));
    }
    let b = spec.weighted_features(x, 0, d)?;
    let mut g = b.transpose() * &b;
    for i in 0..d {
        for j in 0..i {
            let v = 0.5 * (g[(i, j)] + g[(j, i)]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    let logdet_at = |rate: f64| -> Result<f64> {
        let mut m = &g * rate;
        for i in 0..d {
            m[(i, i)] += 1.0;
        }
        Ok(linalg::chol_logdet(&linalg::spd_cholesky(m, "gram determinant")?))
    };
    Ok(logdet_at(eta)? - logdet_at(beta)?)
}

/// Split upper bound on γ_n(η, β): ½D·log(η/β) + ½nη·δ_D.
pub fn rig_bound_split(d: usize, eta: f64, beta: f64, n: usize, delta_d: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::invalid("split bound needs D >= 1"));
    }
    if !(eta > beta && beta > 0.0) {
        return Err(Error::invalid("split bound needs eta > beta > 0"));
    }
    if !(delta_d >= 0.0) {
        return Err(Error::invalid("tail mass must be non-negative"));
    }
    Ok(0.5 * d as f64 * (eta / beta).ln() + 0.5 * n as f64 * eta * delta_d)
}

/// Closed-form bound on γ_n(η, β) under polynomial eigenvalue decay:
/// (nηC_pψ²)^{1/β_p} · log^{1−1/β_p}(η/β) + log(η/β).
pub fn rig_bound_poly(n: usize, eta: f64, beta: f64, decay: &DecayParams, psi: f64) -> Result<f64> {
    let DecayParams::Polynomial { c_p, beta_p } = *decay else {
        return Err(Error::invalid("polynomial-decay bound called with non-polynomial decay"));
    };
    if !(eta > beta && beta > 0.0) {
        return Err(Error::invalid("decay bound needs eta > beta > 0"));
    }
    let log_ratio = (eta / beta).ln();
    let lead = (n as f64 * eta * c_p * psi * psi).powf(1.0 / beta_p);
    Ok(lead * log_ratio.powf(1.0 - 1.0 / beta_p) + log_ratio)
}

/// The multiplicative constant C_{β_e} of the exponential-decay bound:
/// C_e1ψ²/C_e2 when β_e = 1, otherwise
/// (2C_e1ψ²/(C_e2β_e)) · ((2−2β_e)/(C_e2β_e))^{1/β_e−1} · exp((1−β_e)/β_e).
pub fn exp_rate_constant(decay: &DecayParams, psi: f64) -> Result<f64> {
    let DecayParams::Exponential { c_e1, c_e2, beta_e } = *decay else {
        return Err(Error::invalid("exponential constant called with non-exponential decay"));
    };
    let psi2 = psi * psi;
    if beta_e == 1.0 {
        Ok(c_e1 * psi2 / c_e2)
    } else {
        Ok(2.0 * c_e1 * psi2 / (c_e2 * beta_e)
            * ((2.0 - 2.0 * beta_e) / (c_e2 * beta_e)).powf(1.0 / beta_e - 1.0)
            * ((1.0 - beta_e) / beta_e).exp())
    }
}

/// Closed-form bound on γ_n(η, β) under exponential eigenvalue decay:
/// ½((2/C_e2)·log(nηC_{β_e}))^{1/β_e} · log(η/β) + ½ log(eη/β).
/// Needs nηC_{β_e} > 1; below that the leading power is ill-defined.
pub fn rig_bound_exp(n: usize, eta: f64, beta: f64, decay: &DecayParams, psi: f64) -> Result<f64> {
    let DecayParams::Exponential { c_e2, .. } = *decay else {
        return Err(Error::invalid("exponential-decay bound called with non-exponential decay"));
    };
    if !(eta > beta && beta > 0.0) {
        return Err(Error::invalid("decay bound needs eta > beta > 0"));
    }
    let c_rate = exp_rate_constant(decay, psi)?;
    let arg = n as f64 * eta * c_rate;
    if !(arg > 1.0) {
        return Err(Error::invalid(format!(
            "exponential-decay bound needs n·η·C > 1, got {arg}"
        )));
    }
    let DecayParams::Exponential { beta_e, .. } = *decay else { unreachable!() };
    let lead = 0.5 * (2.0 / c_e2 * arg.ln()).powf(1.0 / beta_e);
    Ok(lead * (eta / beta).ln() + 0.5 * (std::f64::consts::E * eta / beta).ln())
}

/// Baseline bound on the plain information gain γ_n(η):
/// ½D·log(1 + k̄nη/D) + ½nη·δ_D.
pub fn baseline_ig_bound(d: usize, eta: f64, n: usize, k_bar: f64, delta_d: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::invalid("baseline bound needs D >= 1"));
    }
    if !(eta >= 0.0) || !(k_bar >= 0.0) || !(delta_d >= 0.0) {
        return Err(Error::invalid("baseline bound needs non-negative eta, k_bar, delta_D"));
    }
    let d_f = d as f64;
    Ok(0.5 * d_f * (k_bar * n as f64 * eta / d_f).ln_1p() + 0.5 * n as f64 * eta * delta_d)
}

/// The β grid used for monotonicity checks and complexity sweeps: β = 0
/// followed by 32 logarithmically spaced values in [η·1e-4, η·(1 − 1e-4)].
pub fn beta_grid(eta: f64) -> Vec<f64> {
    let lo = eta * 1e-4;
    let hi = eta * (1.0 - 1e-4);
    let mut grid = vec![0.0];
    for k in 0..32 {
        grid.push(lo * (hi / lo).powf(k as f64 / 31.0));
    }
    grid
}
