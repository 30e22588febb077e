//! Fixed-design data generation, Gibbs posterior marginals, Gaussian KL
//! divergence, and the risk functionals they feed.
//!
//! In fixed design everything lives on the n observed inputs, so posteriors
//! are ordinary n-dimensional Gaussians. The Gibbs posterior at inverse
//! temperature η over a GP prior scaled by α has mean K(K + I/(2ηα))⁻¹y,
//! which is exactly kernel ridge regression with ζ = 1/(2ηα); the two share
//! one code path here so the equality is bitwise.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernel::{evaluate_rkhs, DesignPoints, KernelMatrix, KernelSpec, RkhsElement};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseFamily {
    Gaussian,
    UniformBounded,
    Rademacher,
    Zero,
}

/// Sub-Gaussian noise source. Every family is σ-sub-Gaussian with σ read off
/// `scale`: Gaussian uses σ = scale, uniform on [−a, a] and ±a coin flips use
/// σ = a. Zero noise is degenerate; its σ is reported as 1.0 so downstream
/// rate schedules stay finite (any positive σ is valid for it).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    pub scale: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(family: NoiseFamily, scale: f64, seed: u64) -> Result<Self> {
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(Error::invalid("noise scale must be non-negative and finite"));
        }
        if matches!(family, NoiseFamily::Zero) && scale != 0.0 {
            return Err(Error::invalid("zero noise must have scale 0"));
        }
        Ok(NoiseSpec { family, scale, seed })
    }

    /// The sub-Gaussian parameter used in bounds.
    pub fn sigma(&self) -> f64 {
        if matches!(self.family, NoiseFamily::Zero) || self.scale == 0.0 {
            1.0
        } else {
            self.scale
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self.family {
            NoiseFamily::Gaussian => self.scale * rng.sample::<f64, _>(StandardNormal),
            NoiseFamily::UniformBounded => rng.random_range(-self.scale..=self.scale),
            NoiseFamily::Rademacher => {
                if rng.random::<bool>() {
                    self.scale
                } else {
                    -self.scale
                }
            }
            NoiseFamily::Zero => 0.0,
        }
    }

    /// The first n values of this spec's seeded noise stream. Calling this
    /// and adding f*(X) reproduces `generate_data` exactly.
    pub fn sample(&self, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }
}

/// One draw of the regression problem: y_i = f*(x_i) + ε_i on a fixed design.
#[derive(Debug, Clone)]
pub struct RegressionInstance {
    pub x: DesignPoints,
    pub fstar: RkhsElement,
    pub fstar_values: Vec<f64>,
    pub y: Vec<f64>,
    pub noise: NoiseSpec,
    pub sigma: f64,
}

impl RegressionInstance {
    pub fn n(&self) -> usize {
        self.y.len()
    }
}

/// Draws y = f*(X) + ε deterministically from the seed inside `noise`.
pub fn generate_data(
    spec: &KernelSpec,
    x: &DesignPoints,
    fstar: &RkhsElement,
    noise: &NoiseSpec,
) -> Result<RegressionInstance> {
    let fstar_values = evaluate_rkhs(fstar, spec, x)?;
    let eps = noise.sample(x.n());
    let y: Vec<f64> = fstar_values.iter().zip(&eps).map(|(f, e)| f + e).collect();
    Ok(RegressionInstance {
        x: x.clone(),
        fstar: fstar.clone(),
        fstar_values,
        y,
        noise: *noise,
        sigma: noise.sigma(),
    })
}

/// An n-dimensional Gaussian given by its mean and covariance.
#[derive(Debug, Clone)]
pub struct GaussianMeasure {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
}

impl GaussianMeasure {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if covariance.nrows() != n || covariance.ncols() != n {
            return Err(Error::invalid("covariance shape does not match mean length"));
        }
        if mean.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("Gaussian parameters must be finite"));
        }
        for i in 0..n {
            for j in 0..i {
                if (covariance[(i, j)] - covariance[(j, i)]).abs() > 1e-12 {
                    return Err(Error::invalid("covariance must be symmetric"));
                }
            }
        }
        Ok(GaussianMeasure { mean, covariance })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn n(&self) -> usize {
        self.mean.len()
    }

    pub fn trace_cov(&self) -> f64 {
        self.covariance.trace()
    }
}

/// Kernel ridge regression values at the design: K(K + ζI)⁻¹y.
pub fn krr_fitted(k: &KernelMatrix, y: &[f64], zeta: f64) -> Result<Vec<f64>> {
    if !(zeta >= 0.0) || !zeta.is_finite() {
        return Err(Error::invalid("ridge parameter must be non-negative and finite"));
    }
    let n = k.n();
    if y.len() != n {
        return Err(Error::invalid("response length does not match kernel size"));
    }
    let mut a = k.entries().clone();
    for i in 0..n {
        a[(i, i)] += zeta;
    }
    let chol = linalg::spd_cholesky(a, "ridge system")?;
    let solved = chol.solve(&DVector::from_column_slice(y));
    Ok((k.entries() * solved).iter().copied().collect())
}

/// The Gibbs posterior marginal at the design points:
/// mean K(K + I/(2ηα))⁻¹y, covariance αK − αK(K + I/(2ηα))⁻¹K.
pub fn gibbs_posterior(k: &KernelMatrix, y: &[f64], eta: f64, alpha: f64) -> Result<GaussianMeasure> {
    if !(eta > 0.0) || !eta.is_finite() || !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid("Gibbs posterior needs eta > 0 and alpha > 0"));
    }
    let n = k.n();
    if y.len() != n {
        return Err(Error::invalid("response length does not match kernel size"));
    }
    let zeta = 1.0 / (2.0 * eta * alpha);
    let mean = DVector::from_vec(krr_fitted(k, y, zeta)?);

    let mut a = k.entries().clone();
    for i in 0..n {
        a[(i, i)] += zeta;
    }
    let chol = linalg::spd_cholesky(a, "posterior resolvent")?;
    let ainv_k = chol.solve(k.entries());
    let mut cov = (k.entries() - k.entries() * ainv_k) * alpha;
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    GaussianMeasure::new(mean, cov)
}

/// The oracle marginal used as a prior: a Gibbs-form Gaussian centred on the
/// noiseless responses with rate β + 2σ²β² in place of η.
pub fn oracle_prior_marginal(
    k: &KernelMatrix,
    fstar_values: &[f64],
    beta: f64,
    sigma: f64,
    alpha: f64,
) -> Result<GaussianMeasure> {
    if !(beta > 0.0) || !(sigma > 0.0) {
        return Err(Error::invalid("oracle prior needs beta > 0 and sigma > 0"));
    }
    let rate = beta + 2.0 * sigma * sigma * beta * beta;
    gibbs_posterior(k, fstar_values, rate, alpha)
}

/// KL(Q‖P) between Gaussians on ℝⁿ, split into its three summands:
/// trace_term = ½(tr(Σ_P⁻¹Σ_Q) − n), mean_term = ½Δᵀ Σ_P⁻¹ Δ,
/// logdet_term = ½ log(det Σ_P / det Σ_Q). If Σ_P is numerically singular a
/// diagonal jitter of 1e-12·max-diag is applied and recorded; a singular Σ_Q
/// makes the log-det term +∞, the correct degenerate-case value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlDivergence {
    pub trace_term: f64,
    pub mean_term: f64,
    pub logdet_term: f64,
    pub jitter: f64,
}

impl KlDivergence {
    /// The divergence itself; tiny negative roundoff is clamped to zero.
    pub fn total(&self) -> f64 {
        (self.trace_term + self.mean_term + self.logdet_term).max(0.0)
    }
}

pub fn kl_gaussian(q: &GaussianMeasure, p: &GaussianMeasure) -> Result<KlDivergence> {
    let n = q.n();
    if p.n() != n {
        return Err(Error::invalid("KL needs measures of equal dimension"));
    }
    let mut jitter = 0.0;
    let chol_p = match nalgebra::Cholesky::new(p.covariance().clone()) {
        Some(c) => c,
        None => {
            let bump = 1e-12 * p.covariance().diagonal().amax();
            let mut cov = p.covariance().clone();
            for i in 0..n {
                cov[(i, i)] += bump;
            }
            jitter = bump;
            linalg::spd_cholesky(cov, "prior covariance (after jitter)")?
        }
    };
    let trace_term = 0.5 * (chol_p.solve(q.covariance()).trace() - n as f64);
    let delta = q.mean() - p.mean();
    let mean_term = 0.5 * delta.dot(&chol_p.solve(&delta));
    let logdet_p = linalg::chol_logdet(&chol_p);
    let logdet_q = match nalgebra::Cholesky::new(q.covariance().clone()) {
        Some(c) => linalg::chol_logdet(&c),
        None => f64::NEG_INFINITY,
    };
    let logdet_term = 0.5 * (logdet_p - logdet_q);
    Ok(KlDivergence { trace_term, mean_term, logdet_term, jitter })
}

fn mean_sq_diff(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid("risk needs vectors of equal length"));
    }
    if a.is_empty() {
        return Err(Error::invalid("risk needs at least one coordinate"));
    }
    Ok(a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>() / a.len() as f64)
}

/// Excess risk R_n(g) = ‖g − f*_n‖²/n.
pub fn excess_risk(g: &[f64], fstar_values: &[f64]) -> Result<f64> {
    mean_sq_diff(g, fstar_values)
}

/// Empirical risk r_n(g) = ‖g − y‖²/n.
pub fn empirical_risk(g: &[f64], y: &[f64]) -> Result<f64> {
    mean_sq_diff(g, y)
}

/// ∫R_n dQ in closed form: (‖m_Q − f*_n‖² + tr Σ_Q)/n.
pub fn average_excess_risk(q: &GaussianMeasure, fstar_values: &[f64]) -> Result<f64> {
    if fstar_values.len() != q.n() {
        return Err(Error::invalid("dimension mismatch in average excess risk"));
    }
    let shift: f64 = q
        .mean()
        .iter()
        .zip(fstar_values)
        .map(|(m, f)| (m - f) * (m - f))
        .sum();
    Ok((shift + q.trace_cov()) / q.n() as f64)
}

/// ∫r_n dQ in closed form: r_n(m_Q) + tr Σ_Q/n.
pub fn average_empirical_risk(q: &GaussianMeasure, y: &[f64]) -> Result<f64> {
    let mean: Vec<f64> = q.mean().iter().copied().collect();
    Ok(empirical_risk(&mean, y)? + q.trace_cov() / q.n() as f64)
}
