//! Experiment orchestration: complexity sweeps, coverage runs and rate
//! sweeps, each producing rows for one CSV file.
//!
//! Rows are computed cell by cell (optionally in parallel) and assembled in
//! (n, trial) order, so the rendered file is already deterministically
//! sorted and written exactly once.

use crate::config::{ExperimentConfig, ExperimentKind, RatePolicy};
use crate::csv::{self, Cell};
use crate::error::{AppError, Result};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use rig_core::bounds::{coverage_experiment, rate_schedule, theorem_bound_value, CoverageConfig, CoverageResult};
use rig_core::complexity::{
    baseline_ig_bound, effective_dimension, relative_information_gain, rig_bound_exp,
    rig_bound_poly, rig_bound_split, ComplexityProfile,
};
use rig_core::kernel::{rkhs_norm_sq, DesignPoints, EigenSpectrum, KernelSpec};
use rig_core::linalg::{spd_cholesky, sym_eigenvalues};
use rig_core::spectral::{delta_tail_exact, split_kernel_matrices, DecayParams, SpectralKernelSpec};

pub const COMPLEXITY_HEADER: [&str; 10] = [
    "n", "eta", "beta", "d_eff", "ig", "rig", "scaled_rig", "split_bound", "decay_bound",
    "baseline_bound",
];
pub const COVERAGE_HEADER: [&str; 5] = ["trial", "n", "bound_value", "realized_risk", "violated"];
pub const RATES_HEADER: [&str; 4] = ["n", "alpha", "bound_value", "realized_risk"];

/// Finished experiment: the rendered CSV plus stderr diagnostics.
pub struct RunOutput {
    pub csv: String,
    pub rows: usize,
    pub notes: Vec<String>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    match cfg.experiment {
        ExperimentKind::Complexity => run_complexity(cfg),
        ExperimentKind::Coverage => run_coverage(cfg),
        ExperimentKind::Rates => run_rates(cfg),
    }
}

/// SplitMix64; decorrelates per-cell seeds derived from the master seed.
pub fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// OLS slope of y on x.
pub fn ols_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

// ---------------------------------------------------------------------------
// Complexity profiles
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ComplexityRow {
    pub n: usize,
    pub eta: f64,
    pub beta: f64,
    pub d_eff: f64,
    pub ig: f64,
    pub rig: f64,
    pub scaled_rig: f64,
    /// Rank-split bound on the relative gain; undefined at beta = 0.
    pub split_bound: Option<f64>,
    /// Closed-form decay bound; undefined at beta = 0 or outside the
    /// exponential bound's n·η·C > 1 regime.
    pub decay_bound: Option<f64>,
    /// Bound on the plain information gain (defined for every beta).
    pub baseline_bound: f64,
}

pub fn complexity_experiment(cfg: &ExperimentConfig) -> Result<Vec<ComplexityRow>> {
    let spec = cfg
        .kernel
        .to_spectral()?
        .ok_or_else(|| AppError::config("complexity needs a spectral kernel"))?;
    let (eta, beta) = match &cfg.rate_policy {
        RatePolicy::Explicit(r) => (
            r.eta.ok_or_else(|| AppError::config("complexity needs eta"))?,
            r.beta.ok_or_else(|| AppError::config("complexity needs beta"))?,
        ),
        RatePolicy::Schedule(_) => {
            return Err(AppError::config("complexity takes explicit rates"));
        }
    };
    cfg.n_grid
        .par_iter()
        .map(|&n| complexity_cell(&spec, n, eta, beta))
        .collect()
}

fn complexity_cell(spec: &SpectralKernelSpec, n: usize, eta: f64, beta: f64) -> Result<ComplexityRow> {
    let x = DesignPoints::grid_1d(n)?;
    // d = M makes the parallel part the whole truncated kernel; this builds
    // K through one feature product instead of n² pointwise expansions.
    let (k, _) = split_kernel_matrices(spec, &x, spec.m())?;
    let spectrum = rig_core::kernel::eigenvalues_sym(&k)?;
    let profile = ComplexityProfile::compute(&spectrum, eta, beta)?;

    let d_cap = spec.m().min(64);
    let mut baseline = f64::INFINITY;
    let mut split: Option<f64> = None;
    for d in 1..=d_cap {
        let tail = delta_tail_exact(spec, d)?.total();
        baseline = baseline.min(baseline_ig_bound(d, eta, n, k.sup_diag(), tail)?);
        if beta > 0.0 {
            let b = rig_bound_split(d, eta, beta, n, tail)?;
            split = Some(split.map_or(b, |s: f64| s.min(b)));
        }
    }

    let decay_bound = if beta > 0.0 {
        match spec.decay() {
            DecayParams::Polynomial { .. } => {
                Some(rig_bound_poly(n, eta, beta, spec.decay(), spec.psi())?)
            }
            DecayParams::Exponential { .. } => {
                match rig_bound_exp(n, eta, beta, spec.decay(), spec.psi()) {
                    Ok(b) => Some(b),
                    // Outside the bound's regime the cell stays empty.
                    Err(rig_core::Error::InvalidInput(_)) => None,
                    Err(e) => return Err(e.into()),
                }
            }
        }
    } else {
        None
    };

    let row = ComplexityRow {
        n,
        eta,
        beta,
        d_eff: profile.d_eff,
        ig: profile.info_gain,
        rig: profile.rel_info_gain,
        scaled_rig: profile.scaled_rig,
        split_bound: split,
        decay_bound,
        baseline_bound: baseline,
    };
    check_complexity_row(&row)?;
    Ok(row)
}

/// Every emitted row must satisfy the sandwich and bound inequalities; a
/// violation means a computation bug, reported as a numeric failure.
fn check_complexity_row(r: &ComplexityRow) -> Result<()> {
    let tol = 1e-9 * r.ig.abs().max(1.0);
    let ordered = r.d_eff <= r.scaled_rig + tol && r.scaled_rig <= 2.0 * r.ig + tol;
    let split_ok = r.split_bound.is_none_or(|b| r.rig <= b + tol);
    let decay_ok = r.decay_bound.is_none_or(|b| r.rig <= b + tol);
    let baseline_ok = r.ig <= r.baseline_bound + tol;
    if ordered && split_ok && decay_ok && baseline_ok {
        Ok(())
    } else {
        Err(AppError::numeric(format!(
            "complexity row failed its invariants at n = {}: {r:?}",
            r.n
        )))
    }
}

fn run_complexity(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let rows = complexity_experiment(cfg)?;
    let cells: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            vec![
                Cell::UInt(r.n as u64),
                Cell::Float(r.eta),
                Cell::Float(r.beta),
                Cell::Float(r.d_eff),
                Cell::Float(r.ig),
                Cell::Float(r.rig),
                Cell::Float(r.scaled_rig),
                r.split_bound.map_or(Cell::Empty, Cell::Float),
                r.decay_bound.map_or(Cell::Empty, Cell::Float),
                Cell::Float(r.baseline_bound),
            ]
        })
        .collect();
    Ok(RunOutput {
        csv: csv::render(&COMPLEXITY_HEADER, &cells)?,
        rows: cells.len(),
        notes: vec![],
    })
}

// ---------------------------------------------------------------------------
// Coverage
// ---------------------------------------------------------------------------

pub fn coverage_experiment_from(cfg: &ExperimentConfig) -> Result<CoverageResult> {
    let n = cfg.n_grid[0];
    let kernel = cfg.kernel.to_spec()?;
    let x = DesignPoints::grid_1d(n)?;
    let fstar = cfg
        .fstar
        .as_ref()
        .ok_or_else(|| AppError::config("coverage needs fstar"))?
        .to_element()?;
    let alpha = match &cfg.rate_policy {
        RatePolicy::Explicit(r) => r.alpha.ok_or_else(|| AppError::config("coverage needs alpha"))?,
        RatePolicy::Schedule(_) => return Err(AppError::config("coverage takes an explicit alpha")),
    };
    let core_cfg = CoverageConfig {
        kernel,
        x,
        fstar,
        noise: cfg.noise_spec(0)?,
        alpha,
        delta: cfg.delta,
        trials: cfg.trials,
        master_seed: cfg.master_seed,
    };
    Ok(coverage_experiment(&core_cfg)?)
}

fn run_coverage(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let n = cfg.n_grid[0];
    let result = coverage_experiment_from(cfg)?;
    let t = result.trials.len() as f64;
    let mean_bound = result.trials.iter().map(|r| r.bound_value).sum::<f64>() / t;
    let mean_risk = result.trials.iter().map(|r| r.realized_risk).sum::<f64>() / t;

    let mut cells: Vec<Vec<Cell>> = result
        .trials
        .iter()
        .map(|r| {
            vec![
                Cell::UInt(r.trial as u64),
                Cell::UInt(n as u64),
                Cell::Float(r.bound_value),
                Cell::Float(r.realized_risk),
                Cell::Flag(r.violated),
            ]
        })
        .collect();
    // Footer: per-column aggregates, with the violation fraction in the
    // violated column.
    cells.push(vec![
        Cell::Str("summary"),
        Cell::UInt(n as u64),
        Cell::Float(mean_bound),
        Cell::Float(mean_risk),
        Cell::Float(result.violation_fraction),
    ]);
    let notes = vec![format!(
        "coverage: {} violations in {} trials (fraction {}, allowance {})",
        result.violations,
        result.trials.len(),
        result.violation_fraction,
        result.slack_threshold
    )];
    Ok(RunOutput {
        csv: csv::render(&COVERAGE_HEADER, &cells)?,
        rows: cells.len(),
        notes,
    })
}

// ---------------------------------------------------------------------------
// Rate sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RatesRow {
    pub n: usize,
    pub alpha: f64,
    pub bound_value: f64,
    /// Average excess risk of the posterior, averaged over the trials.
    pub mean_risk: f64,
}

#[derive(Debug, Clone)]
pub struct RatesResult {
    pub rows: Vec<RatesRow>,
    pub bound_slope: Option<f64>,
    pub risk_slope: Option<f64>,
}

pub fn rates_experiment(cfg: &ExperimentConfig) -> Result<RatesResult> {
    let spec = cfg
        .kernel
        .to_spectral()?
        .ok_or_else(|| AppError::config("rates needs a spectral kernel"))?;
    let kind = match &cfg.rate_policy {
        RatePolicy::Schedule(k) => k.to_kind(),
        RatePolicy::Explicit(_) => return Err(AppError::config("rates takes a schedule")),
    };
    let kernel = KernelSpec::spectral(spec.clone());
    let fstar = cfg
        .fstar
        .as_ref()
        .ok_or_else(|| AppError::config("rates needs fstar"))?
        .to_element()?;
    let fstar_norm_sq = rkhs_norm_sq(&fstar, &kernel)?;
    let sigma = cfg.noise_spec(0)?.sigma();

    let rows: Vec<RatesRow> = cfg
        .n_grid
        .par_iter()
        .enumerate()
        .map(|(cell, &n)| {
            rates_cell(cfg, &spec, &kernel, &fstar, fstar_norm_sq, sigma, kind, cell, n)
        })
        .collect::<Result<_>>()?;

    let ln_n: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ln_bound: Vec<f64> = rows.iter().map(|r| r.bound_value.ln()).collect();
    let ln_risk: Vec<f64> = rows.iter().map(|r| r.mean_risk.ln()).collect();
    Ok(RatesResult {
        bound_slope: ols_slope(&ln_n, &ln_bound),
        risk_slope: ols_slope(&ln_n, &ln_risk),
        rows,
    })
}

#[allow(clippy::too_many_arguments)]
fn rates_cell(
    cfg: &ExperimentConfig,
    spec: &SpectralKernelSpec,
    kernel: &KernelSpec,
    fstar: &rig_core::kernel::RkhsElement,
    fstar_norm_sq: f64,
    sigma: f64,
    kind: rig_core::bounds::ScheduleKind,
    cell: usize,
    n: usize,
) -> Result<RatesRow> {
    let params = rate_schedule(kind, n, sigma, spec.decay(), spec.psi(), fstar_norm_sq, cfg.delta)?;
    let x = DesignPoints::grid_1d(n)?;
    let b = spec.weighted_features(&x, 0, spec.m())?;
    let lr = LowRankPosterior::new(&b, 1.0 / (2.0 * params.eta * params.alpha))?;
    let spectrum = lr.kernel_spectrum(n)?;

    let rate_q = 2.0 * params.eta * params.alpha;
    let rate_p = 2.0 * params.beta * params.alpha;
    let rig = relative_information_gain(&spectrum, rate_q, rate_p)?;
    let bound_value = theorem_bound_value(rig, &params, fstar_norm_sq);
    let trace_cov = effective_dimension(&spectrum, rate_q)? / (2.0 * params.eta);

    // f*(X) is trial-independent; draw fresh noise per trial and reuse it.
    let fstar_values = rig_core::kernel::evaluate_rkhs(fstar, kernel, &x)?;
    let mut risk_sum = 0.0;
    for t in 0..cfg.trials {
        let seed = splitmix64(cfg.master_seed.wrapping_add((cell * cfg.trials + t) as u64));
        let eps = cfg.noise_spec(seed)?.sample(n);
        let y = DVector::from_fn(n, |i, _| fstar_values[i] + eps[i]);
        let mean = lr.posterior_mean(&y);
        let sq_err: f64 = (0..n).map(|i| (mean[i] - fstar_values[i]).powi(2)).sum();
        risk_sum += (sq_err + trace_cov) / n as f64;
    }
    Ok(RatesRow {
        n,
        alpha: params.alpha,
        bound_value,
        mean_risk: risk_sum / cfg.trials as f64,
    })
}

/// Ridge solves and spectra through the M×M feature Gram G = BᵀB instead of
/// the n×n kernel matrix: K(K + cI)⁻¹y = B(G + cI)⁻¹Bᵀy, and the nonzero
/// eigenvalues of K are exactly those of G.
struct LowRankPosterior {
    b: DMatrix<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    gram_eigs_desc: Vec<f64>,
    gram_sup_diag: f64,
}

impl LowRankPosterior {
    fn new(b: &DMatrix<f64>, ridge: f64) -> Result<Self> {
        let m = b.ncols();
        let mut g = b.transpose() * b;
        for i in 0..m {
            for j in 0..i {
                let v = 0.5 * (g[(i, j)] + g[(j, i)]);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        let gram_sup_diag = g.diagonal().amax();
        let mut eigs = sym_eigenvalues(&g)?;
        eigs.reverse();
        let mut shifted = g;
        for i in 0..m {
            shifted[(i, i)] += ridge;
        }
        let chol = spd_cholesky(shifted, "regularized feature gram")?;
        Ok(LowRankPosterior {
            b: b.clone(),
            chol,
            gram_eigs_desc: eigs,
            gram_sup_diag,
        })
    }

    /// Eigenvalues of K = BBᵀ: the nonzero spectrum of the Gram padded (or
    /// truncated) to length n, with the same round-off clamp the dense route
    /// applies.
    fn kernel_spectrum(&self, n: usize) -> Result<EigenSpectrum> {
        let floor = -1e-9 * self.gram_sup_diag.max(f64::MIN_POSITIVE);
        let mut values = Vec::with_capacity(n);
        for &v in self.gram_eigs_desc.iter().take(n) {
            if v < floor {
                return Err(AppError::numeric(format!(
                    "feature gram eigenvalue {v} below the round-off floor {floor}"
                )));
            }
            values.push(v.max(0.0));
        }
        values.resize(n, 0.0);
        Ok(EigenSpectrum::new(values)?)
    }

    fn posterior_mean(&self, y: &DVector<f64>) -> DVector<f64> {
        let bty = self.b.transpose() * y;
        &self.b * self.chol.solve(&bty)
    }
}

fn run_rates(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let result = rates_experiment(cfg)?;
    let cells: Vec<Vec<Cell>> = result
        .rows
        .iter()
        .map(|r| {
            vec![
                Cell::UInt(r.n as u64),
                Cell::Float(r.alpha),
                Cell::Float(r.bound_value),
                Cell::Float(r.mean_risk),
            ]
        })
        .collect();

    let mut notes = Vec::new();
    let span = (*cfg.n_grid.last().expect("non-empty") as f64 / cfg.n_grid[0] as f64).log10();
    if span < 1.5 {
        notes.push(format!(
            "warning: n_grid spans {span:.2} decades; slopes are reliable from 1.5 decades up"
        ));
    }
    match (result.bound_slope, result.risk_slope) {
        (Some(b), Some(r)) => {
            notes.push(format!("log-log OLS slopes: bound {b}, realized risk {r}"));
        }
        _ => notes.push("slope: undefined (single-point n_grid)".to_string()),
    }
    Ok(RunOutput {
        csv: csv::render(&RATES_HEADER, &cells)?,
        rows: cells.len(),
        notes,
    })
}
