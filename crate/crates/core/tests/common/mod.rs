//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use mrdpg::model::sample_from_probabilities;
use mrdpg::{AdjacencyMatrix, PsdGraphMatrix};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns the
/// eigenvalues and the matching eigenvectors as columns, unsorted.
pub fn jacobi_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

/// Eigenvalues sorted descending.
pub fn jacobi_values_desc(m: &DMatrix<f64>) -> Vec<f64> {
    let mut values = jacobi_eigen(m).0;
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// `V max(D, 0) Vᵀ` via Jacobi.
pub fn jacobi_positive_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (values, v) = jacobi_eigen(m);
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (j, &lambda) in values.iter().enumerate() {
        if lambda > 0.0 {
            let col = v.column(j);
            out += lambda * col * col.transpose();
        }
    }
    out
}

/// Erdős–Rényi graph drawn with the test RNG (not the library sampler).
pub fn random_graph(n: usize, p: f64, seed: u64) -> AdjacencyMatrix {
    let mut r = rng(seed);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            if r.random::<f64>() < p {
                m[(i, j)] = 1.0;
                m[(j, i)] = 1.0;
            }
        }
    }
    AdjacencyMatrix::from_dense(m).unwrap()
}

pub fn random_psd_graphs(n: usize, k: usize, seed: u64) -> Vec<PsdGraphMatrix> {
    let mut r = rng(seed);
    (0..k)
        .map(|_| {
            let p = r.random_range(0.2..0.8);
            mrdpg::positive_part(&random_graph(n, p, r.random())).unwrap()
        })
        .collect()
}

/// Modified Gram-Schmidt on Gaussian columns.
pub fn random_orthonormal(n: usize, d: usize, r: &mut impl Rng) -> DMatrix<f64> {
    loop {
        let mut m = DMatrix::from_fn(n, d, |_, _| gaussian(r));
        let mut ok = true;
        for j in 0..d {
            for i in 0..j {
                let proj = m.column(i).dot(&m.column(j));
                let ci = m.column(i).clone_owned();
                m.column_mut(j).axpy(-proj, &ci, 1.0);
            }
            let norm = m.column(j).norm();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            m.column_mut(j).unscale_mut(norm);
        }
        if ok {
            return m;
        }
    }
}

pub fn gaussian(r: &mut impl Rng) -> f64 {
    let u1: f64 = r.random::<f64>().max(1e-300);
    let u2: f64 = r.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn random_weights(d: usize, k: usize, r: &mut impl Rng) -> Vec<DVector<f64>> {
    (0..k)
        .map(|_| DVector::from_fn(d, |_, _| r.random_range(0.0..5.0)))
        .collect()
}

/// `Σₖ ‖Aᵏ − U diag(λᵏ) Uᵀ‖²` with explicit loops.
pub fn brute_objective(psd: &[PsdGraphMatrix], u: &DMatrix<f64>, lambdas: &[DVector<f64>]) -> f64 {
    let n = u.nrows();
    let d = u.ncols();
    let mut total = 0.0;
    for (a, l) in psd.iter().zip(lambdas) {
        for i in 0..n {
            for j in 0..n {
                let w: f64 = (0..d).map(|c| u[(i, c)] * l[c] * u[(j, c)]).sum();
                total += (a.as_matrix()[(i, j)] - w).powi(2);
            }
        }
    }
    total
}

/// Graphs sampled from a probability matrix with the library sampler.
pub fn sample(p: &DMatrix<f64>, seed: u64) -> AdjacencyMatrix {
    sample_from_probabilities(p, seed).unwrap()
}
