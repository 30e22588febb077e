//! Kernel functions, kernel matrices, and RKHS-norm bookkeeping.
//!
//! Design points live in a compact domain, kernel matrices are symmetric and
//! positive semi-definite up to documented numerical slack, and target
//! functions are finite kernel expansions whose squared RKHS norm is the
//! quadratic form of their coefficients against the anchor Gram matrix.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::SpectralKernelSpec;

/// Fixed design: n pairwise-distinct points of common dimension d ≥ 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPoints {
    points: Vec<Vec<f64>>,
    dim: usize,
}

impl DesignPoints {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::invalid("design needs at least one point"));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::invalid("design points need dimension at least 1"));
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::invalid("design points have mixed dimensions"));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("design point has a non-finite coordinate"));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if points[i] == points[j] {
                    return Err(Error::invalid(format!(
                        "design points {i} and {j} coincide; points must be pairwise distinct"
                    )));
                }
            }
        }
        Ok(DesignPoints { points, dim })
    }

    /// Midpoint grid x_j = (j + 1/2)/n on [0,1].
    pub fn grid_1d(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("grid needs at least one point"));
        }
        let points = (0..n).map(|j| vec![(j as f64 + 0.5) / n as f64]).collect();
        // Grid points are distinct by construction; full validation is cheap
        // enough to keep a single constructor path.
        DesignPoints::new(points)
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.iter().map(|p| p.as_slice())
    }
}

#[derive(Debug, Clone)]
pub enum KernelFamily {
    Rbf,
    Matern32,
    Matern52,
    Linear,
    Spectral(SpectralKernelSpec),
}

/// A symmetric positive-definite kernel with scale hyperparameters.
///
/// `lengthscale` is ignored by the linear and spectral families but must be
/// positive regardless so a spec is valid for any family.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub lengthscale: f64,
    pub amplitude: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, lengthscale: f64, amplitude: f64) -> Result<Self> {
        if !(lengthscale > 0.0) || !lengthscale.is_finite() {
            return Err(Error::invalid("kernel lengthscale must be positive and finite"));
        }
        if !(amplitude > 0.0) || !amplitude.is_finite() {
            return Err(Error::invalid("kernel amplitude must be positive and finite"));
        }
        Ok(KernelSpec { family, lengthscale, amplitude })
    }

    pub fn rbf(lengthscale: f64, amplitude: f64) -> Result<Self> {
        KernelSpec::new(KernelFamily::Rbf, lengthscale, amplitude)
    }

    pub fn linear(amplitude: f64) -> Result<Self> {
        KernelSpec::new(KernelFamily::Linear, 1.0, amplitude)
    }

    pub fn spectral(spec: SpectralKernelSpec) -> Self {
        KernelSpec {
            family: KernelFamily::Spectral(spec),
            lengthscale: 1.0,
            amplitude: 1.0,
        }
    }

    /// Pointwise kernel evaluation k(x, x′).
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let a = self.amplitude;
        match &self.family {
            KernelFamily::Rbf => {
                let r2 = sq_dist(x, y);
                a * (-r2 / (2.0 * self.lengthscale * self.lengthscale)).exp()
            }
            KernelFamily::Matern32 => {
                let t = 3.0_f64.sqrt() * sq_dist(x, y).sqrt() / self.lengthscale;
                a * (1.0 + t) * (-t).exp()
            }
            KernelFamily::Matern52 => {
                let t = 5.0_f64.sqrt() * sq_dist(x, y).sqrt() / self.lengthscale;
                a * (1.0 + t + t * t / 3.0) * (-t).exp()
            }
            KernelFamily::Linear => a * x.iter().zip(y).map(|(u, v)| u * v).sum::<f64>(),
            KernelFamily::Spectral(s) => a * s.eval(x[0], y[0]),
        }
    }
}

fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Gram matrix of a kernel over a design, with any stabilizing jitter and the
/// largest diagonal entry k̄ recorded alongside.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    entries: DMatrix<f64>,
    jitter_applied: f64,
    sup_diag: f64,
}

/// Relative jitter used when callers have no opinion.
pub const DEFAULT_JITTER_POLICY: f64 = 1e-10;

/// Builds the Gram matrix {k(x_i, x_j)}. `jitter_policy` is relative: when
/// positive and the matrix is not positive definite with margin
/// τ = policy · k̄, τ is added to the diagonal and recorded. Zero disables
/// jitter entirely.
pub fn build_kernel_matrix(spec: &KernelSpec, x: &DesignPoints, jitter_policy: f64) -> Result<KernelMatrix> {
    if !(jitter_policy >= 0.0) || !jitter_policy.is_finite() {
        return Err(Error::invalid("jitter policy must be finite and non-negative"));
    }
    let n = x.n();
    let mut entries = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = spec.eval(x.point(i), x.point(j));
            if !v.is_finite() {
                return Err(Error::invalid(format!("kernel evaluation at points {i}, {j} is not finite")));
            }
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    let sup_diag = (0..n).map(|i| entries[(i, i)]).fold(f64::NEG_INFINITY, f64::max);
    let tau = jitter_policy * sup_diag;
    let mut jitter_applied = 0.0;
    if tau > 0.0 {
        let mut shifted = entries.clone();
        for i in 0..n {
            shifted[(i, i)] -= tau;
        }
        // Shifted Cholesky succeeding certifies λ_min > τ; on failure the
        // matrix is too close to singular and gets the diagonal bump.
        if nalgebra::Cholesky::new(shifted).is_none() {
            for i in 0..n {
                entries[(i, i)] += tau;
            }
            jitter_applied = tau;
        }
    }
    Ok(KernelMatrix { entries, jitter_applied, sup_diag })
}

impl KernelMatrix {
    /// Wraps an explicit symmetric matrix (tolerance 1e-12 absolute).
    pub fn from_entries(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(Error::invalid("kernel matrix must be square and non-empty"));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("kernel matrix has non-finite entries"));
        }
        for i in 0..n {
            for j in 0..i {
                if (entries[(i, j)] - entries[(j, i)]).abs() > 1e-12 {
                    return Err(Error::invalid(format!(
                        "kernel matrix asymmetric at ({i}, {j}): {} vs {}",
                        entries[(i, j)],
                        entries[(j, i)]
                    )));
                }
            }
        }
        let sup_diag = (0..n).map(|i| entries[(i, i)]).fold(f64::NEG_INFINITY, f64::max);
        Ok(KernelMatrix { entries, jitter_applied: 0.0, sup_diag })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn jitter_applied(&self) -> f64 {
        self.jitter_applied
    }

    /// k̄ = max_i k(x_i, x_i), recorded before any jitter.
    pub fn sup_diag(&self) -> f64 {
        self.sup_diag
    }

    pub fn trace(&self) -> f64 {
        (0..self.n()).map(|i| self.entries[(i, i)]).sum()
    }
}

/// Eigenvalues of a kernel matrix: non-increasing, non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpectrum {
    values: Vec<f64>,
}

impl EigenSpectrum {
    /// Accepts any non-negative finite values; sorts them non-increasing.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("eigenvalues must be finite and non-negative"));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(EigenSpectrum { values })
    }

    pub fn empty() -> Self {
        EigenSpectrum { values: Vec::new() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn trace(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

/// Full spectrum of a kernel matrix, non-increasing. Negative roundoff down to
/// −1e-9·k̄ is clamped to zero; anything lower means the input was genuinely
/// indefinite and is an error.
pub fn eigenvalues_sym(k: &KernelMatrix) -> Result<EigenSpectrum> {
    let raw = linalg::sym_eigenvalues(k.entries())?;
    let clamp_floor = -1e-9 * k.sup_diag().max(0.0);
    let mut values = Vec::with_capacity(raw.len());
    for lam in raw {
        if lam >= 0.0 {
            values.push(lam);
        } else if lam >= clamp_floor {
            values.push(0.0);
        } else {
            return Err(Error::numeric(format!(
                "eigenvalue {lam:.6e} below clamp floor {clamp_floor:.6e}; matrix is not PSD"
            )));
        }
    }
    EigenSpectrum::new(values)
}

/// A finite kernel expansion f = Σ_j a_j k(·, z_j).
#[derive(Debug, Clone)]
pub struct RkhsElement {
    anchors: DesignPoints,
    coefficients: Vec<f64>,
}

impl RkhsElement {
    pub fn new(anchors: DesignPoints, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != anchors.n() {
            return Err(Error::invalid(format!(
                "{} coefficients for {} anchors",
                coefficients.len(),
                anchors.n()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("expansion coefficients must be finite"));
        }
        Ok(RkhsElement { anchors, coefficients })
    }

    pub fn anchors(&self) -> &DesignPoints {
        &self.anchors
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }
}

/// ‖f‖²_H = aᵀ K_z a over the anchor Gram matrix. Tiny negative roundoff is
/// clamped to zero.
pub fn rkhs_norm_sq(f: &RkhsElement, spec: &KernelSpec) -> Result<f64> {
    let kz = build_kernel_matrix(spec, f.anchors(), 0.0)?;
    let a = f.coefficients();
    let mut q = 0.0;
    for i in 0..a.len() {
        for j in 0..a.len() {
            q += a[i] * kz.entries()[(i, j)] * a[j];
        }
    }
    Ok(q.max(0.0))
}

/// Evaluates the expansion at each design point: [Σ_j a_j k(x_i, z_j)]_i.
pub fn evaluate_rkhs(f: &RkhsElement, spec: &KernelSpec, x: &DesignPoints) -> Result<Vec<f64>> {
    if f.anchors().dim() != x.dim() {
        return Err(Error::invalid("anchor and design dimensions differ"));
    }
    let out = x
        .iter()
        .map(|xi| {
            f.anchors()
                .iter()
                .zip(f.coefficients())
                .map(|(z, a)| a * spec.eval(xi, z))
                .sum()
        })
        .collect::<Vec<f64>>();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("expansion evaluates to a non-finite value"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(coords: &[f64]) -> DesignPoints {
        DesignPoints::new(coords.iter().map(|&c| vec![c]).collect()).unwrap()
    }

    #[test]
    fn design_rejects_duplicates_and_empties() {
        assert!(DesignPoints::new(vec![]).is_err());
        assert!(DesignPoints::new(vec![vec![]]).is_err());
        assert!(DesignPoints::new(vec![vec![1.0], vec![1.0]]).is_err());
        assert!(DesignPoints::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(DesignPoints::new(vec![vec![f64::NAN]]).is_err());
    }

    #[test]
    fn midpoint_grid_layout() {
        let g = DesignPoints::grid_1d(4).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.point(0), &[0.125]);
        assert_eq!(g.point(3), &[0.875]);
    }

    #[test]
    fn linear_kernel_on_orthogonal_points() {
        let spec = KernelSpec::linear(1.0).unwrap();
        let x = pts(&[1.0, 0.0]);
        let k = build_kernel_matrix(&spec, &x, 0.0).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(k.entries(), &expect);
        assert_eq!(k.jitter_applied(), 0.0);
        assert_eq!(k.sup_diag(), 1.0);
    }

    #[test]
    fn rbf_single_point_and_off_diagonal() {
        let spec = KernelSpec::rbf(1.0, 1.0).unwrap();
        let k1 = build_kernel_matrix(&spec, &pts(&[0.0]), 0.0).unwrap();
        assert_eq!(k1.entries()[(0, 0)], 1.0);

        let k2 = build_kernel_matrix(&spec, &pts(&[0.0, 0.5]), 0.0).unwrap();
        let off = k2.entries()[(0, 1)];
        assert_eq!(off, (-0.125f64).exp());
        assert!((off - 0.882497).abs() < 1e-6);
        assert_eq!(k2.entries()[(1, 0)], off);
    }

    #[test]
    fn matern_families_are_unit_on_the_diagonal() {
        for spec in [
            KernelSpec::new(KernelFamily::Matern32, 0.7, 1.0).unwrap(),
            KernelSpec::new(KernelFamily::Matern52, 0.7, 1.0).unwrap(),
        ] {
            let k = build_kernel_matrix(&spec, &pts(&[0.1, 0.6]), 0.0).unwrap();
            assert!((k.entries()[(0, 0)] - 1.0).abs() < 1e-15);
            assert!(k.entries()[(0, 1)] > 0.0 && k.entries()[(0, 1)] < 1.0);
        }
    }

    #[test]
    fn jitter_triggers_only_near_singularity() {
        let spec = KernelSpec::rbf(1.0, 1.0).unwrap();
        let well = build_kernel_matrix(&spec, &pts(&[0.0, 0.5]), DEFAULT_JITTER_POLICY).unwrap();
        assert_eq!(well.jitter_applied(), 0.0);

        let close = build_kernel_matrix(&spec, &pts(&[0.0, 1e-9]), DEFAULT_JITTER_POLICY).unwrap();
        assert_eq!(close.jitter_applied(), DEFAULT_JITTER_POLICY * close.sup_diag());
        assert!(nalgebra::Cholesky::new(close.entries().clone()).is_some());
    }

    #[test]
    fn eigenvalues_of_small_matrices() {
        let k = KernelMatrix::from_entries(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(eigenvalues_sym(&k).unwrap().values(), &[1.0, 0.0]);

        let k = KernelMatrix::from_entries(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        let s = eigenvalues_sym(&k).unwrap();
        assert!((s.values()[0] - 3.0).abs() < 1e-12);
        assert!((s.values()[1] - 1.0).abs() < 1e-12);

        let k = KernelMatrix::from_entries(DMatrix::identity(3, 3)).unwrap();
        assert_eq!(eigenvalues_sym(&k).unwrap().values(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn clamp_rejects_genuinely_indefinite_input() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.9999999, 0.9999999, 1.0]);
        let k = KernelMatrix::from_entries(m).unwrap();
        assert!(eigenvalues_sym(&k).is_ok());

        let indef = KernelMatrix::from_entries(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert!(matches!(eigenvalues_sym(&indef), Err(Error::Numeric(_))));
    }

    #[test]
    fn spectrum_constructor_sorts_and_validates() {
        let s = EigenSpectrum::new(vec![0.5, 2.0, 1.0]).unwrap();
        assert_eq!(s.values(), &[2.0, 1.0, 0.5]);
        assert_eq!(s.trace(), 3.5);
        assert!(EigenSpectrum::new(vec![-0.1]).is_err());
        assert_eq!(EigenSpectrum::empty().trace(), 0.0);
    }

    #[test]
    fn rkhs_norms_match_hand_values() {
        let spec = KernelSpec::rbf(1.0, 1.0).unwrap();

        let single = RkhsElement::new(pts(&[0.3]), vec![1.0]).unwrap();
        assert_eq!(rkhs_norm_sq(&single, &spec).unwrap(), 1.0);

        let far = RkhsElement::new(pts(&[0.0, 100.0]), vec![1.0, -1.0]).unwrap();
        assert!((rkhs_norm_sq(&far, &spec).unwrap() - 2.0).abs() < 1e-8);

        let zero = RkhsElement::new(pts(&[0.0, 1.0]), vec![0.0, 0.0]).unwrap();
        assert_eq!(rkhs_norm_sq(&zero, &spec).unwrap(), 0.0);
    }

    #[test]
    fn rkhs_norm_permutation_invariant() {
        let spec = KernelSpec::rbf(0.6, 1.3).unwrap();
        let a = RkhsElement::new(pts(&[0.1, 0.4, 0.9]), vec![1.0, -2.0, 0.5]).unwrap();
        let b = RkhsElement::new(pts(&[0.9, 0.1, 0.4]), vec![0.5, 1.0, -2.0]).unwrap();
        let na = rkhs_norm_sq(&a, &spec).unwrap();
        let nb = rkhs_norm_sq(&b, &spec).unwrap();
        assert!((na - nb).abs() < 1e-12);
    }

    #[test]
    fn expansion_evaluation_hand_values() {
        let spec = KernelSpec::rbf(1.0, 1.0).unwrap();
        let x = pts(&[0.0, 0.7]);

        let zero = RkhsElement::new(pts(&[0.2]), vec![0.0]).unwrap();
        assert_eq!(evaluate_rkhs(&zero, &spec, &x).unwrap(), vec![0.0, 0.0]);

        let at_x1 = RkhsElement::new(pts(&[0.0]), vec![1.0]).unwrap();
        assert_eq!(evaluate_rkhs(&at_x1, &spec, &x).unwrap()[0], 1.0);

        let scaled = RkhsElement::new(pts(&[0.5]), vec![2.0]).unwrap();
        let v = evaluate_rkhs(&scaled, &spec, &pts(&[0.0])).unwrap();
        assert_eq!(v[0], 2.0 * (-0.125f64).exp());
        assert!((v[0] - 1.764994).abs() < 1e-6);
    }
}
