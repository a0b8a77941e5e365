//! Truncated eigendecomposition of an implicit symmetric matrix: Lanczos
//! with full reorthogonalization and a random start, targeting the largest
//! eigenvalues in absolute value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Matrix-free contract for a symmetric linear map `y = B x`.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;

    /// Computes `y = B x`; `x` and `y` have length `dim()`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Top-K eigenpairs of a symmetric operator: eigenvalues sorted by
/// descending absolute value, eigenvectors orthonormal, one measured
/// residual per pair.
#[derive(Debug, Clone)]
pub struct Embedding {
    dim: usize,
    k: usize,
    /// Row-major `dim x k`; row i holds the embedding of item i.
    vectors: Vec<f64>,
    values: Vec<f64>,
    residuals: Vec<f64>,
}

impl Embedding {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Measured `||B v - lambda v||` for each returned pair.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> &[f64] {
        &self.vectors
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.vectors[i * self.k + j])
            .collect()
    }
}

/// Computes the K eigenpairs of largest |eigenvalue| via Lanczos iteration
/// with full reorthogonalization. `max_iter` bounds the basis size; the
/// residual target is `tol * max|ritz value|`.
///
/// A collapsed Krylov direction (invariant subspace) is handled by
/// injecting a fresh random vector orthogonal to the current basis, so
/// multiple eigenvalues are recovered as well.
pub fn topk_eig(
    op: &dyn SymmetricOperator,
    k: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<Embedding> {
    let dim = op.dim();
    if k == 0 || k > dim {
        return Err(Error::InvalidParams(format!(
            "need 1 <= k <= dim, got k={k}, dim={dim}"
        )));
    }
    if tol <= 0.0 {
        return Err(Error::InvalidParams("tol must be positive".into()));
    }
    let limit = max_iter.min(dim).max(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(limit);
    let mut alphas: Vec<f64> = Vec::with_capacity(limit);
    let mut betas: Vec<f64> = Vec::with_capacity(limit);
    basis.push(random_unit(dim, &mut rng));

    let mut w = vec![0.0f64; dim];
    let mut best_residuals: Vec<f64> = Vec::new();

    loop {
        // Extend the basis by one Lanczos step.
        let j = basis.len() - 1;
        op.apply(&basis[j], &mut w);
        let alpha = dot(&w, &basis[j]);
        alphas.push(alpha);
        axpy(&mut w, -alpha, &basis[j]);
        if j > 0 {
            axpy(&mut w, -betas[j - 1], &basis[j - 1]);
        }
        // Full reorthogonalization, two passes.
        for _ in 0..2 {
            for u in &basis {
                let c = dot(&w, u);
                axpy(&mut w, -c, u);
            }
        }
        let beta = norm(&w);
        let scale = alphas
            .iter()
            .map(|a| a.abs())
            .fold(beta, f64::max)
            .max(f64::MIN_POSITIVE);

        let mut exhausted = basis.len() == limit;
        if !exhausted {
            if beta > scale * 1e-13 {
                betas.push(beta);
                let v: Vec<f64> = w.iter().map(|&x| x / beta).collect();
                basis.push(v);
            } else {
                // Invariant subspace: restart the recurrence from a fresh
                // random direction; the zero coupling keeps T consistent.
                match random_orthogonal(dim, &basis, &mut rng) {
                    Some(v) => {
                        betas.push(0.0);
                        basis.push(v);
                    }
                    // The basis spans the whole space; finalize now.
                    None => exhausted = true,
                }
            }
        }

        let steps = alphas.len();
        let check = exhausted || steps >= limit || (steps >= k && steps.is_multiple_of(8));
        if check {
            let (theta, y) = tridiag_eigen(&alphas, &betas[..steps.saturating_sub(1)]);
            let top = select_top(&theta, k);
            let norm_est = theta.iter().fold(0.0f64, |a, t| a.max(t.abs()));
            let target = tol * norm_est.max(f64::MIN_POSITIVE);
            let last_beta = if exhausted || steps >= limit {
                0.0
            } else {
                *betas.last().unwrap()
            };
            let estimate_ok = top
                .iter()
                .all(|&i| (last_beta * y[(steps - 1) + i * steps].abs()) <= target);
            if estimate_ok || exhausted || steps >= limit {
                let emb = assemble(op, &basis, &theta, &y, &top, steps);
                let max_resid = emb.residuals.iter().cloned().fold(0.0f64, f64::max);
                if max_resid <= target {
                    return Ok(emb);
                }
                best_residuals = emb.residuals.clone();
                if exhausted || steps >= limit {
                    return Err(Error::Convergence {
                        iterations: steps,
                        residuals: best_residuals,
                    });
                }
            }
        }
        if exhausted {
            break;
        }
    }

    Err(Error::Convergence {
        iterations: alphas.len(),
        residuals: best_residuals,
    })
}

/// Indices of the `k` eigenvalues of largest magnitude, magnitude ties
/// broken toward the positive value.
fn select_top(theta: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..theta.len()).collect();
    order.sort_by(|&a, &b| {
        theta[b]
            .abs()
            .partial_cmp(&theta[a].abs())
            .unwrap()
            .then(theta[b].partial_cmp(&theta[a]).unwrap())
    });
    order.truncate(k);
    order
}

fn assemble(
    op: &dyn SymmetricOperator,
    basis: &[Vec<f64>],
    theta: &[f64],
    y: &[f64],
    top: &[usize],
    steps: usize,
) -> Embedding {
    let dim = op.dim();
    let k = top.len();
    let mut vectors = vec![0.0f64; dim * k];
    let mut values = Vec::with_capacity(k);
    for (col, &idx) in top.iter().enumerate() {
        let mut x = vec![0.0f64; dim];
        for (j, base) in basis.iter().enumerate().take(steps) {
            let c = y[j + idx * steps];
            axpy(&mut x, c, base);
        }
        let nrm = norm(&x).max(f64::MIN_POSITIVE);
        for r in 0..dim {
            vectors[r * k + col] = x[r] / nrm;
        }
        values.push(theta[idx]);
    }
    // Measured residuals for the invariant the caller asserts on.
    let mut residuals = Vec::with_capacity(k);
    let mut bx = vec![0.0f64; dim];
    for col in 0..k {
        let x: Vec<f64> = (0..dim).map(|r| vectors[r * k + col]).collect();
        op.apply(&x, &mut bx);
        let mut r2 = 0.0;
        for r in 0..dim {
            let d = bx[r] - values[col] * x[r];
            r2 += d * d;
        }
        residuals.push(r2.sqrt());
    }
    Embedding {
        dim,
        k,
        vectors,
        values,
        residuals,
    }
}

/// Eigenvalues and eigenvectors of a symmetric tridiagonal matrix via the
/// implicit QL algorithm with Wilkinson shifts. Returns eigenvalues (in the
/// order produced) and column-major eigenvectors: entry `(row j, col i)` at
/// `z[j + i*n]`.
pub fn tridiag_eigen(diag: &[f64], off: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    assert!(off.len() + 1 == n || (n == 0 && off.is_empty()));
    let mut d = diag.to_vec();
    let mut e = vec![0.0f64; n];
    e[..n - 1].copy_from_slice(off);
    let mut z = vec![0.0f64; n * n];
    for i in 0..n {
        z[i + i * n] = 1.0;
    }
    let eps = f64::EPSILON;

    for l in 0..n {
        let mut iter = 0;
        loop {
            // Locate a negligible subdiagonal element to split the problem.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 60, "tridiagonal QL failed to converge");

            // Wilkinson shift.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in 0..n {
                    f = z[row + (i + 1) * n];
                    z[row + (i + 1) * n] = s * z[row + i * n] + c * f;
                    z[row + i * n] = c * z[row + i * n] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    (d, z)
}

fn random_unit<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
        let nrm = norm(&v);
        if nrm > 1e-6 {
            return v.into_iter().map(|x| x / nrm).collect();
        }
    }
}

/// Random unit vector orthogonalized against `basis`; None if the basis
/// already spans the space.
fn random_orthogonal<R: Rng>(dim: usize, basis: &[Vec<f64>], rng: &mut R) -> Option<Vec<f64>> {
    for _ in 0..20 {
        let mut v = random_unit(dim, rng);
        for _ in 0..2 {
            for u in basis {
                let c = dot(&v, u);
                axpy(&mut v, -c, u);
            }
        }
        let nrm = norm(&v);
        if nrm > 1e-8 {
            return Some(v.into_iter().map(|x| x / nrm).collect());
        }
    }
    None
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
