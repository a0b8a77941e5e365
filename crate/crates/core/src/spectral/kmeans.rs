//! Lloyd's algorithm with k-means++ seeding and multiple restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seed::derive_seed;

#[derive(Debug, Clone)]
pub struct KmeansResult {
    /// Cluster labels in `0..k`, one per point.
    pub labels: Vec<u32>,
    /// Sum of squared distances to the assigned centroids.
    pub objective: f64,
    /// Objective after every Lloyd assignment step of the winning restart;
    /// non-increasing.
    pub objective_trace: Vec<f64>,
}

/// Clusters `n_points` rows of a row-major `n_points x dim` matrix into
/// `k` groups. Runs `restarts` independently seeded attempts and keeps the
/// best objective (ties toward the earliest restart). Nearest-centroid ties
/// break toward the lowest centroid index, and an empty cluster is refilled
/// with the point farthest from its current centroid.
#[allow(clippy::too_many_arguments)]
pub fn kmeans(
    points: &[f64],
    n_points: usize,
    dim: usize,
    k: usize,
    restarts: usize,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> Result<KmeansResult> {
    if k == 0 || k > n_points {
        return Err(Error::InvalidParams(format!(
            "need 1 <= k <= points, got k={k}, points={n_points}"
        )));
    }
    debug_assert_eq!(points.len(), n_points * dim);
    let mut best: Option<KmeansResult> = None;
    for r in 0..restarts.max(1) {
        let run = lloyd_run(
            points,
            n_points,
            dim,
            k,
            max_iter,
            tol,
            derive_seed(seed, r as u64),
        );
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn lloyd_run(
    points: &[f64],
    n: usize,
    dim: usize,
    k: usize,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> KmeansResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_seed(points, n, dim, k, &mut rng);
    let mut labels = vec![0u32; n];
    let mut trace = Vec::new();
    let mut objective = f64::INFINITY;

    for _ in 0..max_iter.max(1) {
        // Assignment step.
        let mut new_objective = 0.0;
        for i in 0..n {
            let p = &points[i * dim..(i + 1) * dim];
            let (mut best_c, mut best_d) = (0u32, f64::INFINITY);
            for c in 0..k {
                let d = sqdist(p, &centroids[c * dim..(c + 1) * dim]);
                if d < best_d {
                    best_d = d;
                    best_c = c as u32;
                }
            }
            labels[i] = best_c;
            new_objective += best_d;
        }
        debug_assert!(
            new_objective <= objective * (1.0 + 1e-12) + 1e-12,
            "objective increased: {objective} -> {new_objective}"
        );
        trace.push(new_objective);
        let done =
            objective.is_finite() && (objective - new_objective) <= tol * objective.max(1e-300);
        objective = new_objective;
        if done {
            break;
        }

        // Update step.
        let mut counts = vec![0usize; k];
        let mut sums = vec![0.0f64; k * dim];
        for i in 0..n {
            let c = labels[i] as usize;
            counts[c] += 1;
            for d in 0..dim {
                sums[c * dim + d] += points[i * dim + d];
            }
        }
        let mut moved = vec![false; n];
        for c in 0..k {
            if counts[c] > 0 {
                for d in 0..dim {
                    centroids[c * dim + d] = sums[c * dim + d] / counts[c] as f64;
                }
            } else {
                // Refill with the point farthest from its centroid.
                let (mut far_i, mut far_d) = (0usize, -1.0f64);
                for i in 0..n {
                    if moved[i] {
                        continue;
                    }
                    let d = sqdist(
                        &points[i * dim..(i + 1) * dim],
                        &centroids[labels[i] as usize * dim..(labels[i] as usize + 1) * dim],
                    );
                    if d > far_d {
                        far_d = d;
                        far_i = i;
                    }
                }
                moved[far_i] = true;
                centroids[c * dim..(c + 1) * dim]
                    .copy_from_slice(&points[far_i * dim..(far_i + 1) * dim]);
            }
        }
    }

    KmeansResult {
        labels,
        objective,
        objective_trace: trace,
    }
}

/// k-means++ seeding: first centroid uniform, the rest drawn with
/// probability proportional to squared distance from the chosen set.
fn plus_plus_seed<R: Rng>(points: &[f64], n: usize, dim: usize, k: usize, rng: &mut R) -> Vec<f64> {
    let mut centroids = vec![0.0f64; k * dim];
    let first = rng.random_range(0..n);
    centroids[..dim].copy_from_slice(&points[first * dim..(first + 1) * dim]);

    let mut dists: Vec<f64> = (0..n)
        .map(|i| sqdist(&points[i * dim..(i + 1) * dim], &centroids[..dim]))
        .collect();
    for c in 1..k {
        let total: f64 = dists.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in dists.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids[c * dim..(c + 1) * dim].copy_from_slice(&points[pick * dim..(pick + 1) * dim]);
        for (i, d) in dists.iter_mut().enumerate() {
            let nd = sqdist(
                &points[i * dim..(i + 1) * dim],
                &centroids[c * dim..(c + 1) * dim],
            );
            if nd < *d {
                *d = nd;
            }
        }
    }
    centroids
}

fn sqdist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
