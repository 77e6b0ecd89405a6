//! Comparison methods: excitation-matching k-means (clusters the reference
//! excitations themselves, weights are cluster means) and exhaustive
//! enumeration of every partition with iterative-projection weighting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::driver::SynthesisResult;
use crate::error::{Error, Result};
use crate::excitation::{ClusteringVector, ExcitationVector};
use crate::geometry::{AngularGrid, ArrayGeometry};
use crate::ipm::{subarray_average, IpmParams, IpmProblem};
use crate::kmeans::kmeans_cluster;
use crate::partitions::{for_each_completion, shard_prefixes, stirling2};
use crate::pattern::{cpa_power_pattern, fpa_power_pattern, pm_metric};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmmParams {
    pub q_count: usize,
    pub restarts: usize,
    pub base_seed: u64,
    pub kmeans_max_iter: usize,
}

/// Excitation-matching baseline. Restarts are ranked by k-means inertia;
/// the mismatch on `grid` is reported for the winner only.
pub fn emm_synthesize(
    geometry: &ArrayGeometry,
    reference_excitations: &ExcitationVector,
    params: &EmmParams,
    grid: AngularGrid,
) -> Result<SynthesisResult> {
    if reference_excitations.len() != geometry.n_elements() {
        return Err(Error::invalid(format!(
            "{} reference excitations for a {}-element array",
            reference_excitations.len(),
            geometry.n_elements()
        )));
    }
    reference_excitations.ensure_nonzero()?;
    if params.restarts == 0 {
        return Err(Error::invalid("at least one k-means restart is required"));
    }
    let points = reference_excitations.as_slice();
    let mut best: Option<(f64, ClusteringVector)> = None;
    for restart in 0..params.restarts {
        let seed = params.base_seed.wrapping_add(restart as u64);
        let state = kmeans_cluster(points, params.q_count, seed, params.kmeans_max_iter)?;
        let sse = state.sse();
        if best.as_ref().is_none_or(|(b, _)| sse < *b) {
            best = Some((sse, state.assignments));
        }
    }
    let (_, clustering) = best.expect("at least one restart");
    let weights = subarray_average(points, &clustering)?;
    let reference = fpa_power_pattern(geometry, reference_excitations, grid)?;
    let trial = cpa_power_pattern(geometry, &clustering, &weights, grid)?;
    let gamma = pm_metric(&reference, &trial)?;
    Ok(SynthesisResult {
        clustering,
        weights,
        gamma,
        best_sample: None,
        per_sample: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationOptions {
    /// Refuse when the partition count exceeds this.
    pub cap: u128,
    /// Emit a checkpoint each time this many more partitions are done.
    pub checkpoint_every: u64,
    /// Prefix length used to shard the enumeration.
    pub shard_depth: usize,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self {
            cap: 1_000_000,
            checkpoint_every: 10_000,
            shard_depth: 7,
        }
    }
}

/// Resumable progress of an enumeration. Shards are finished in order, so
/// everything before `next_shard` is done.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationCheckpoint {
    pub n_elements: usize,
    pub q_count: usize,
    pub shard_depth: usize,
    pub total_shards: usize,
    pub next_shard: usize,
    pub evaluated: u64,
    /// Zero-based restricted-growth labels of the best partition so far.
    pub best_labels: Option<Vec<usize>>,
    pub best_gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationResult {
    pub clustering: ClusteringVector,
    pub gamma: f64,
    pub weights: ExcitationVector,
    pub partition_count: u64,
}

type ShardBest = Option<(f64, Vec<usize>)>;

fn better(a: ShardBest, b: ShardBest) -> ShardBest {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => Some(if b.0 < a.0 { b } else { a }),
    }
}

/// Exhaustive search over all partitions into `q_count` blocks, each
/// weighted by iterative projection on `grid`.
pub fn epm_enumerate(
    geometry: &ArrayGeometry,
    reference_excitations: &ExcitationVector,
    q_count: usize,
    grid: AngularGrid,
    ipm: IpmParams,
    options: &EnumerationOptions,
) -> Result<EnumerationResult> {
    epm_enumerate_resumable(
        geometry,
        reference_excitations,
        q_count,
        grid,
        ipm,
        options,
        None,
        |_| {},
    )
}

#[allow(clippy::too_many_arguments)]
pub fn epm_enumerate_resumable<F: FnMut(&EnumerationCheckpoint)>(
    geometry: &ArrayGeometry,
    reference_excitations: &ExcitationVector,
    q_count: usize,
    grid: AngularGrid,
    ipm: IpmParams,
    options: &EnumerationOptions,
    resume: Option<&EnumerationCheckpoint>,
    mut on_checkpoint: F,
) -> Result<EnumerationResult> {
    let n = geometry.n_elements();
    if q_count == 0 || q_count > n {
        return Err(Error::invalid(format!(
            "cluster count {q_count} must lie in [1, {n}]"
        )));
    }
    let count = stirling2(n, q_count);
    if count > options.cap {
        return Err(Error::EnumerationCap {
            count,
            cap: options.cap,
        });
    }
    let problem = IpmProblem::new(geometry, reference_excitations, grid, ipm)?;
    let shards = shard_prefixes(n, q_count, options.shard_depth);

    let mut cp = match resume {
        Some(cp) => {
            if cp.n_elements != n
                || cp.q_count != q_count
                || cp.shard_depth != options.shard_depth
                || cp.total_shards != shards.len()
                || cp.next_shard > shards.len()
            {
                return Err(Error::invalid("checkpoint does not match this enumeration"));
            }
            cp.clone()
        }
        None => EnumerationCheckpoint {
            n_elements: n,
            q_count,
            shard_depth: options.shard_depth,
            total_shards: shards.len(),
            next_shard: 0,
            evaluated: 0,
            best_labels: None,
            best_gamma: None,
        },
    };
    let mut best: ShardBest = cp.best_gamma.zip(cp.best_labels.clone());
    let mut last_emit = cp.evaluated;
    let batch = rayon::current_num_threads().max(1) * 4;

    while cp.next_shard < shards.len() {
        let end = (cp.next_shard + batch).min(shards.len());
        let results = shards[cp.next_shard..end]
            .par_iter()
            .map(|prefix| {
                let mut local: ShardBest = None;
                let mut seen = 0u64;
                let mut failure = None;
                for_each_completion(prefix, n, q_count, |labels| {
                    if failure.is_some() {
                        return;
                    }
                    seen += 1;
                    let clustering = ClusteringVector::new(labels.to_vec(), q_count)
                        .expect("restricted-growth strings use every block");
                    match problem.run(&clustering) {
                        Ok(trace) => {
                            let g = trace.best_gamma();
                            if local.as_ref().is_none_or(|(b, _)| g < *b) {
                                local = Some((g, labels.to_vec()));
                            }
                        }
                        Err(e) => failure = Some(e),
                    }
                });
                match failure {
                    Some(e) => Err(e),
                    None => Ok((seen, local)),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        for (seen, local) in results {
            cp.evaluated += seen;
            best = better(best, local);
        }
        cp.next_shard = end;
        cp.best_gamma = best.as_ref().map(|b| b.0);
        cp.best_labels = best.as_ref().map(|b| b.1.clone());
        if cp.evaluated - last_emit >= options.checkpoint_every || cp.next_shard == shards.len() {
            on_checkpoint(&cp);
            last_emit = cp.evaluated;
        }
    }

    let (gamma, labels) =
        best.ok_or_else(|| Error::SynthesisFailed("no partition evaluated".into()))?;
    let clustering = ClusteringVector::new(labels, q_count)?;
    let trace = problem.run(&clustering)?;
    Ok(EnumerationResult {
        clustering,
        gamma,
        weights: trace.final_weights,
        partition_count: cp.evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refgen::dolph_chebyshev;

    fn setup(n: usize) -> (ArrayGeometry, ExcitationVector) {
        let g = ArrayGeometry::half_wave(n).unwrap();
        let exc = dolph_chebyshev(&g, -20.0, 10.0).unwrap();
        (g, exc)
    }

    #[test]
    fn emm_identity_is_exact() {
        let (g, exc) = setup(7);
        let params = EmmParams {
            q_count: 7,
            restarts: 2,
            base_seed: 0,
            kmeans_max_iter: 100,
        };
        let r = emm_synthesize(&g, &exc, &params, AngularGrid::uniform(101).unwrap()).unwrap();
        assert!(r.gamma <= 1e-10);
    }

    #[test]
    fn enumeration_counts_and_cap() {
        let (g, exc) = setup(3);
        let grid = AngularGrid::uniform(17).unwrap();
        let opts = EnumerationOptions::default();
        let r = epm_enumerate(&g, &exc, 2, grid, IpmParams::default(), &opts).unwrap();
        assert_eq!(r.partition_count, 3);

        let (g, exc) = setup(20);
        let e = epm_enumerate(&g, &exc, 10, grid, IpmParams::default(), &opts).unwrap_err();
        match e {
            Error::EnumerationCap { count, cap } => {
                assert_eq!(count, stirling2(20, 10));
                assert_eq!(cap, 1_000_000);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn resume_matches_uninterrupted_run() {
        let (g, exc) = setup(8);
        let grid = AngularGrid::uniform(33).unwrap();
        let opts = EnumerationOptions {
            checkpoint_every: 50,
            shard_depth: 4,
            ..EnumerationOptions::default()
        };
        let ipm = IpmParams::default();
        let full = epm_enumerate(&g, &exc, 4, grid, ipm, &opts).unwrap();
        assert_eq!(full.partition_count as u128, stirling2(8, 4));

        let mut checkpoints = Vec::new();
        epm_enumerate_resumable(&g, &exc, 4, grid, ipm, &opts, None, |cp| {
            checkpoints.push(cp.clone())
        })
        .unwrap();
        assert!(checkpoints.len() >= 2);
        let mid = &checkpoints[checkpoints.len() / 2];
        assert!(mid.next_shard < mid.total_shards);
        let json = serde_json::to_string(mid).unwrap();
        let restored: EnumerationCheckpoint = serde_json::from_str(&json).unwrap();
        let resumed =
            epm_enumerate_resumable(&g, &exc, 4, grid, ipm, &opts, Some(&restored), |_| {})
                .unwrap();
        assert_eq!(resumed, full);

        let mut wrong = restored.clone();
        wrong.q_count = 3;
        assert!(
            epm_enumerate_resumable(&g, &exc, 4, grid, ipm, &opts, Some(&wrong), |_| {}).is_err()
        );
    }
}
