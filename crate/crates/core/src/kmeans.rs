//! Lloyd k-means over points in the complex plane.
//!
//! Initial centroids are `Q` distinct points picked by a partial
//! Fisher-Yates shuffle driven by ChaCha8 seeded with `seed_from_u64`;
//! bounded integers come from rejection sampling on `next_u64`, so a seed
//! yields the same run on every platform.

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::excitation::{canonical_labels, ClusteringVector};

pub const DEFAULT_MAX_ITER: usize = 100;

/// Centroids closer than this (componentwise) count as stationary.
pub const STATIONARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansState {
    pub centroids: Vec<Complex64>,
    /// Canonically labelled (first-occurrence order).
    pub assignments: ClusteringVector,
    pub iterations: usize,
    pub seed: u64,
    /// Within-cluster sum of squared distances of each successive partition.
    pub sse_history: Vec<f64>,
}

impl KMeansState {
    pub fn sse(&self) -> f64 {
        *self.sse_history.last().expect("at least one iteration")
    }
}

/// Uniform integer in `0..bound` by rejection.
fn bounded(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    let zone = u64::MAX - (u64::MAX % bound);
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % bound;
        }
    }
}

/// `count` distinct indices from `0..n`, in draw order.
pub fn sample_indices(n: usize, count: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..count {
        let j = i + bounded(&mut rng, (n - i) as u64) as usize;
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}

pub fn kmeans_cluster(
    points: &[Complex64],
    q_count: usize,
    seed: u64,
    max_iter: usize,
) -> Result<KMeansState> {
    let n = points.len();
    if q_count == 0 || q_count > n {
        return Err(Error::invalid(format!(
            "cluster count {q_count} must lie in [1, {n}]"
        )));
    }
    if max_iter == 0 {
        return Err(Error::invalid("k-means needs at least one iteration"));
    }

    let mut centroids: Vec<Complex64> = sample_indices(n, q_count, seed)
        .into_iter()
        .map(|i| points[i])
        .collect();
    let mut labels = vec![0usize; n];
    let mut sse_history = Vec::new();
    let mut iterations = 0;

    loop {
        assign(points, &centroids, &mut labels);
        repair_empty(points, &centroids, &mut labels, q_count);
        let updated = means(points, &labels, q_count);
        sse_history.push(sse(points, &labels, &updated));
        iterations += 1;

        let stationary = updated.iter().zip(&centroids).all(|(a, b)| {
            (a.re - b.re).abs() <= STATIONARY_TOL && (a.im - b.im).abs() <= STATIONARY_TOL
        });
        centroids = updated;
        if stationary || iterations >= max_iter {
            break;
        }
    }

    let canonical = canonical_labels(&labels, q_count);
    // Reorder centroids to follow the canonical labels.
    let mut ordered = vec![Complex64::new(0.0, 0.0); q_count];
    for (&old, &new) in labels.iter().zip(&canonical) {
        ordered[new] = centroids[old];
    }
    Ok(KMeansState {
        centroids: ordered,
        assignments: ClusteringVector::new(canonical, q_count)?,
        iterations,
        seed,
        sse_history,
    })
}

/// Nearest centroid, lowest index on ties.
fn assign(points: &[Complex64], centroids: &[Complex64], labels: &mut [usize]) {
    for (p, label) in points.iter().zip(labels.iter_mut()) {
        let mut best = 0;
        let mut best_d = (p - centroids[0]).norm_sqr();
        for (q, c) in centroids.iter().enumerate().skip(1) {
            let d = (p - c).norm_sqr();
            if d < best_d {
                best = q;
                best_d = d;
            }
        }
        *label = best;
    }
}

/// Moves, for each empty cluster, the point farthest from its centroid
/// (taken from a cluster with at least two members) into it.
fn repair_empty(
    points: &[Complex64],
    centroids: &[Complex64],
    labels: &mut [usize],
    q_count: usize,
) {
    let mut sizes = vec![0usize; q_count];
    for &c in labels.iter() {
        sizes[c] += 1;
    }
    for q in 0..q_count {
        if sizes[q] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = -1.0;
        for (i, (p, &c)) in points.iter().zip(labels.iter()).enumerate() {
            if sizes[c] < 2 {
                continue;
            }
            let d = (p - centroids[c]).norm_sqr();
            if d > far_d {
                far = Some(i);
                far_d = d;
            }
        }
        let i = far.expect("q_count <= n leaves a cluster with two members");
        sizes[labels[i]] -= 1;
        labels[i] = q;
        sizes[q] = 1;
    }
}

fn means(points: &[Complex64], labels: &[usize], q_count: usize) -> Vec<Complex64> {
    let mut sums = vec![Complex64::new(0.0, 0.0); q_count];
    let mut counts = vec![0usize; q_count];
    for (p, &c) in points.iter().zip(labels) {
        sums[c] += p;
        counts[c] += 1;
    }
    sums.iter()
        .zip(&counts)
        .map(|(s, &k)| s / k as f64)
        .collect()
}

fn sse(points: &[Complex64], labels: &[usize], centroids: &[Complex64]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &c)| (p - centroids[c]).norm_sqr())
        .sum()
}

/// Within-cluster sum of squared distances of a partition to its means.
pub fn partition_sse(points: &[Complex64], clustering: &ClusteringVector) -> f64 {
    let centroids = means(points, clustering.labels(), clustering.q_count());
    sse(points, clustering.labels(), &centroids)
}
