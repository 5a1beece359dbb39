//! Dense linear-algebra helpers shared by the fitting and metric code.
//!
//! The symmetric eigensolver is nalgebra's. The thin SVD behind
//! [`procrustes`] is a one-sided Jacobi iteration ([`ThinSvd`]) because
//! nalgebra 0.35's SVD returns inaccurate factors for some small,
//! well-conditioned inputs.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

const EIG_MAX_ITER: usize = 10_000;

/// Eigendecomposition of a real symmetric matrix with eigenvalues in
/// non-increasing order (columns of `vectors` follow the same order).
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "eigendecomposition needs a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        if n == 0 {
            return Ok(Self {
                values: DVector::zeros(0),
                vectors: DMatrix::zeros(0, 0),
            });
        }
        let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIG_MAX_ITER)
            .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;
        let mut order: Vec<usize> = (0..n).collect();
        // stable: ties keep solver order
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let vectors = eig.eigenvectors.select_columns(order.iter());
        Ok(Self { values, vectors })
    }

    pub fn top_vectors(&self, d: usize) -> DMatrix<f64> {
        self.vectors.columns(0, d).into_owned()
    }

    pub fn top_values(&self, d: usize) -> DVector<f64> {
        self.values.rows(0, d).into_owned()
    }
}

/// Largest entrywise deviation of `UᵀU` from the identity.
pub fn orthonormality_error(u: &DMatrix<f64>) -> f64 {
    let gram = u.transpose() * u;
    let mut worst = 0.0_f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

pub fn check_orthonormal(u: &DMatrix<f64>, tol: f64) -> Result<()> {
    let err = orthonormality_error(u);
    if err.is_finite() && err <= tol {
        Ok(())
    } else {
        Err(Error::NotOrthonormal(err))
    }
}

/// Largest entrywise asymmetry `|m_ij - m_ji|`, with its location.
pub fn max_asymmetry(m: &DMatrix<f64>) -> (usize, usize, f64) {
    let mut worst = (0, 0, 0.0_f64);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            let delta = (m[(i, j)] - m[(j, i)]).abs();
            if delta > worst.2 || delta.is_nan() {
                worst = (i, j, delta);
            }
        }
    }
    worst
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// `V diag(w) Vᵀ`, forced exactly symmetric.
pub fn reconstruct(vectors: &DMatrix<f64>, weights: &DVector<f64>) -> DMatrix<f64> {
    let mut scaled = vectors.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= weights[j];
    }
    let mut out = scaled * vectors.transpose();
    symmetrize(&mut out);
    out
}

/// Spectral (operator 2-) norm of a symmetric matrix.
pub fn symmetric_spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    let eig = SymEigen::new(m)?;
    Ok(eig.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())))
}

/// Nearest matrix with orthonormal columns to `m` in Frobenius norm (the
/// orthogonal Procrustes solution `B Cᵀ` from the thin SVD `m = B S Cᵀ`).
///
/// Left singular vectors belonging to numerically zero singular values are
/// not determined by `m`. Those are rebuilt from `fallback` (projected onto
/// the matching right singular vectors and Gram–Schmidt orthogonalized), so
/// `m = 0` returns `fallback` itself.
pub fn procrustes(m: &DMatrix<f64>, fallback: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, d) = m.shape();
    if fallback.shape() != (n, d) {
        return Err(Error::DimensionMismatch(format!(
            "procrustes fallback is {}x{}, expected {n}x{d}",
            fallback.nrows(),
            fallback.ncols()
        )));
    }
    if d > n {
        return Err(Error::DimensionMismatch(format!(
            "procrustes needs at least as many rows as columns, got {n}x{d}"
        )));
    }
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("non-finite entry in procrustes input".into()));
    }
    let scale = m.amax();
    if scale == 0.0 {
        return Ok(fallback.clone());
    }
    let svd = ThinSvd::new(m)?;
    let s_max = svd.singular_values.max();
    let cutoff = s_max * (n.max(d) as f64) * f64::EPSILON * 16.0;

    let mut basis = DMatrix::<f64>::zeros(n, d);
    let mut kept: Vec<usize> = Vec::with_capacity(d);
    let mut missing: Vec<usize> = Vec::new();
    for j in 0..d {
        if svd.singular_values[j] > cutoff {
            basis.set_column(j, &(svd.u.column(j) / svd.singular_values[j]));
            kept.push(j);
        } else {
            missing.push(j);
        }
    }
    for &j in &missing {
        let candidate = fallback * svd.v.column(j);
        let col = orthogonal_completion(&basis, &kept, candidate)?;
        basis.set_column(j, &col);
        kept.push(j);
    }
    Ok(basis * svd.v.transpose())
}

/// Thin SVD of an `n×d` matrix (`d ≤ n`) by one-sided Jacobi rotations.
/// On return `u` holds the rotated columns `m V`, which are mutually
/// orthogonal with norms equal to the singular values; they are not
/// normalized. Small singular values are resolved to high relative accuracy.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl ThinSvd {
    const MAX_SWEEPS: usize = 100;

    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        let d = m.ncols();
        // a computed dot product of length-n columns carries rounding of
        // order n·eps relative to the column norms
        let tol = f64::EPSILON * m.nrows().max(1) as f64;
        let mut a = m.clone();
        let mut v = DMatrix::<f64>::identity(d, d);
        let mut converged = d < 2;
        for _ in 0..Self::MAX_SWEEPS {
            if converged {
                break;
            }
            let mut rotated = false;
            for p in 0..d {
                for q in p + 1..d {
                    let alpha = a.column(p).norm_squared();
                    let beta = a.column(q).norm_squared();
                    let gamma = a.column(p).dot(&a.column(q));
                    if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    rotate_columns(&mut a, p, q, c, s);
                    rotate_columns(&mut v, p, q, c, s);
                }
            }
            converged = !rotated;
        }
        if !converged {
            return Err(Error::Numerical("Jacobi SVD did not converge".into()));
        }
        let singular_values = DVector::from_iterator(d, a.column_iter().map(|c| c.norm()));
        Ok(Self {
            u: a,
            singular_values,
            v,
        })
    }
}

fn rotate_columns(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.nrows() {
        let x = m[(i, p)];
        let y = m[(i, q)];
        m[(i, p)] = c * x - s * y;
        m[(i, q)] = s * x + c * y;
    }
}

/// Gram–Schmidt `candidate` against the listed columns of `basis`; falls back
/// to the first standard basis vector that survives when `candidate` lies in
/// their span.
fn orthogonal_completion(basis: &DMatrix<f64>, cols: &[usize], candidate: DVector<f64>) -> Result<DVector<f64>> {
    let n = basis.nrows();
    let project_out = |mut v: DVector<f64>| {
        // twice is enough
        for _ in 0..2 {
            for &c in cols {
                let q = basis.column(c);
                let coef = q.dot(&v);
                v.axpy(-coef, &q, 1.0);
            }
        }
        v
    };
    let v = project_out(candidate);
    let norm = v.norm();
    if norm > 1e-8 {
        return Ok(v / norm);
    }
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        let v = project_out(e);
        let norm = v.norm();
        if norm > 1e-6 {
            return Ok(v / norm);
        }
    }
    Err(Error::Numerical("could not complete orthonormal basis".into()))
}

/// Orthonormal n×d matrix from the QR factorization of a standard Gaussian
/// matrix drawn from `rng`.
pub fn random_orthonormal<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if d > n {
        return Err(Error::InvalidArgument(format!("d = {d} exceeds n = {n}")));
    }
    let g = DMatrix::<f64>::from_fn(n, d, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    // fix the QR sign ambiguity so the draw is Haar distributed
    let mut q = q.columns(0, d).into_owned();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

/// Flip each column so that its largest-magnitude entry is positive. Among
/// entries tied in magnitude (to 1e-9 relative) the first one decides.
pub fn canonicalize_signs(u: &mut DMatrix<f64>) {
    for mut col in u.column_iter_mut() {
        let peak = col.amax();
        if peak == 0.0 {
            continue;
        }
        let lead = col
            .iter()
            .copied()
            .find(|v| v.abs() >= peak * (1.0 - 1e-9))
            .unwrap_or(0.0);
        if lead < 0.0 {
            col.neg_mut();
        }
    }
}
