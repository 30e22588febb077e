//! Dense symmetric linear algebra used everywhere else: an eigenvalue-only
//! symmetric solver (Householder tridiagonalization followed by implicit-shift
//! QL) and small wrappers around Cholesky factorization for solves and
//! log-determinants.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

const MAX_QL_ITERATIONS: usize = 50;

/// All eigenvalues of a symmetric matrix, ascending.
///
/// Reads the full matrix but assumes symmetry (only the lower triangle
/// determines the result). Errors if the QL sweep fails to converge.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::invalid("eigensolver needs a non-empty square matrix"));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("eigensolver input has non-finite entries"));
    }
    // Row-major working copy; the reduction destroys it.
    let mut w: Vec<f64> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            w.push(a[(i, j)]);
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut w, n, &mut d, &mut e);
    ql_implicit_shift(&mut d, &mut e, n)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Householder reduction of a symmetric matrix (row-major in `w`) to
/// tridiagonal form; diagonal lands in `d`, subdiagonal in `e[1..]`.
/// Eigenvector accumulation is omitted: callers only need the spectrum.
fn tridiagonalize(w: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += w[i * n + k].abs();
            }
            if scale == 0.0 {
                e[i] = w[i * n + l];
            } else {
                for k in 0..=l {
                    w[i * n + k] /= scale;
                    h += w[i * n + k] * w[i * n + k];
                }
                let f = w[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                w[i * n + l] = f - g;
                let mut f_acc = 0.0;
                for j in 0..=l {
                    let mut g_acc = 0.0;
                    for k in 0..=j {
                        g_acc += w[j * n + k] * w[i * n + k];
                    }
                    for k in (j + 1)..=l {
                        g_acc += w[k * n + j] * w[i * n + k];
                    }
                    e[j] = g_acc / h;
                    f_acc += e[j] * w[i * n + j];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = w[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        w[j * n + k] -= f * e[k] + g * w[i * n + k];
                    }
                }
            }
        } else {
            e[i] = w[i * n + l];
        }
        let _ = h;
    }
    e[0] = 0.0;
    for k in 0..n {
        d[k] = w[k * n + k];
    }
}

/// Implicit-shift QL sweeps on a tridiagonal matrix; eigenvalues land in `d`.
fn ql_implicit_shift(d: &mut [f64], e: &mut [f64], n: usize) -> Result<()> {
    if n == 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    // Off-diagonals below roundoff at the matrix scale count as zero even
    // when the adjacent diagonals are far smaller; without this absolute
    // floor, spectra spanning hundreds of orders of magnitude never satisfy
    // the relative test and the iteration stalls. QL is backward stable at
    // the ‖T‖ scale, so this deflation loses nothing.
    let anorm = (0..n).fold(0.0f64, |acc, i| acc.max(d[i].abs() + e[i].abs()));
    let floor = f64::EPSILON * anorm;
    for l in 0..n {
        let mut iter = 0;
        'sweep: loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(Error::numeric(format!(
                    "QL eigenvalue iteration failed to converge at index {l} after {MAX_QL_ITERATIONS} sweeps (n = {n}, residual {:.3e})",
                    e[l].abs()
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    // Deflate early: an off-diagonal vanished mid-sweep.
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    continue 'sweep;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Cholesky factorization with a contextual error message on failure.
pub fn spd_cholesky(m: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m).ok_or_else(|| {
        Error::numeric(format!("{what}: Cholesky factorization failed, matrix is not positive definite"))
    })
}

/// log det of the factored matrix, read off the factor diagonal.
pub fn chol_logdet(chol: &Cholesky<f64, Dyn>) -> f64 {
    let l = chol.l_dirty();
    2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>()
}

/// Entrywise inner product; equals tr(AᵀB), and tr(AB) for symmetric A.
pub fn frobenius_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}
