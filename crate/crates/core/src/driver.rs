//! The full power-matching synthesis: per angular sample, cluster the
//! normalised elementary power patterns with several seeded k-means runs,
//! weight every distinct clustering by iterative projection, and keep the
//! overall best.

use std::collections::HashMap;
use std::sync::Mutex;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::ep::ep_matrix;
use crate::error::{Error, Result};
use crate::excitation::{ClusteringVector, ExcitationVector};
use crate::geometry::{AngularGrid, ArrayGeometry};
use crate::ipm::{IpmParams, IpmProblem};
use crate::kmeans::{kmeans_cluster, DEFAULT_MAX_ITER};

/// Columns whose largest modulus falls below this fraction of the peak
/// reference power are skipped.
pub const DEGENERATE_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct PmmConfig {
    /// Angular samples used for clustering.
    pub clustering_samples: usize,
    /// Angular samples for weighting and the mismatch integral; defaults to
    /// `clustering_samples`.
    pub metric_samples: Option<usize>,
    pub q_count: usize,
    pub restarts: usize,
    pub base_seed: u64,
    pub kmeans_max_iter: usize,
    pub ipm: IpmParams,
}

impl PmmConfig {
    pub fn new(q_count: usize, clustering_samples: usize) -> Self {
        Self {
            clustering_samples,
            metric_samples: None,
            q_count,
            restarts: 50,
            base_seed: 0,
            kmeans_max_iter: DEFAULT_MAX_ITER,
            ipm: IpmParams::default(),
        }
    }

    pub fn clustering_grid(&self) -> Result<AngularGrid> {
        AngularGrid::uniform(self.clustering_samples)
    }

    pub fn metric_grid(&self) -> Result<AngularGrid> {
        AngularGrid::uniform(self.metric_samples.unwrap_or(self.clustering_samples))
    }

    pub fn validate(&self, n_elements: usize) -> Result<()> {
        self.clustering_grid()?;
        self.metric_grid()?;
        if self.q_count == 0 || self.q_count > n_elements {
            return Err(Error::invalid(format!(
                "cluster count {} must lie in [1, {n_elements}]",
                self.q_count
            )));
        }
        if self.restarts == 0 {
            return Err(Error::invalid("at least one k-means restart is required"));
        }
        if self.kmeans_max_iter == 0 {
            return Err(Error::invalid("k-means needs at least one iteration"));
        }
        Ok(())
    }
}

/// Outcome for one angular sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleDiagnostic {
    /// Zero-based sample index on the clustering grid.
    pub index: usize,
    pub u: f64,
    /// `None` for a degenerate (skipped) sample.
    pub best: Option<SampleBest>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBest {
    pub gamma: f64,
    pub clustering: ClusteringVector,
    pub weights: ExcitationVector,
    /// Restart index (seed offset) that first produced this clustering.
    pub restart: usize,
    /// Distinct clusterings produced by the restarts at this sample.
    pub distinct: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    pub clustering: ClusteringVector,
    pub weights: ExcitationVector,
    pub gamma: f64,
    /// Sample that produced the optimum, when the method is sample-based.
    pub best_sample: Option<usize>,
    pub per_sample: Vec<SampleDiagnostic>,
}

impl SynthesisResult {
    pub fn degenerate_samples(&self) -> Vec<usize> {
        self.per_sample
            .iter()
            .filter(|s| s.best.is_none())
            .map(|s| s.index)
            .collect()
    }
}

type Evaluated = (f64, ExcitationVector);

/// Shared memo of weighting results keyed by canonical clustering. The
/// weighting is a pure function of the clustering, so the memo does not
/// affect results.
struct Memo<'a> {
    problem: &'a IpmProblem,
    cache: Mutex<HashMap<Vec<usize>, Evaluated>>,
}

impl<'a> Memo<'a> {
    fn evaluate(&self, clustering: &ClusteringVector) -> Result<Evaluated> {
        if let Some(hit) = self.cache.lock().unwrap().get(clustering.labels()) {
            return Ok(hit.clone());
        }
        let trace = self.problem.run(clustering)?;
        let value = (trace.best_gamma(), trace.final_weights);
        self.cache
            .lock()
            .unwrap()
            .insert(clustering.labels().to_vec(), value.clone());
        Ok(value)
    }
}

pub fn pmm_synthesize(
    geometry: &ArrayGeometry,
    reference_excitations: &ExcitationVector,
    config: &PmmConfig,
) -> Result<SynthesisResult> {
    config.validate(geometry.n_elements())?;
    if reference_excitations.len() != geometry.n_elements() {
        return Err(Error::invalid(format!(
            "{} reference excitations for a {}-element array",
            reference_excitations.len(),
            geometry.n_elements()
        )));
    }
    reference_excitations.ensure_nonzero()?;

    let clustering_grid = config.clustering_grid()?;
    let problem = IpmProblem::new(
        geometry,
        reference_excitations,
        config.metric_grid()?,
        config.ipm,
    )?;
    let ep = ep_matrix(geometry, reference_excitations, clustering_grid)?;
    let scale = (0..clustering_grid.len())
        .map(|m| ep.column_sum(m).re)
        .fold(0.0, f64::max);
    let memo = Memo {
        problem: &problem,
        cache: Mutex::new(HashMap::new()),
    };

    let per_sample = (0..clustering_grid.len())
        .into_par_iter()
        .map(|m| {
            let u = clustering_grid.node(m);
            if ep.column_max_modulus(m) < DEGENERATE_FLOOR * scale {
                return Ok(SampleDiagnostic {
                    index: m,
                    u,
                    best: None,
                });
            }
            let column = ep.normalize_column(m)?;
            let best = best_at_sample(&column.values, config, &memo)?;
            Ok(SampleDiagnostic {
                index: m,
                u,
                best: Some(best),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut winner: Option<&SampleDiagnostic> = None;
    for s in &per_sample {
        if let Some(b) = &s.best {
            if winner.is_none_or(|w| b.gamma < w.best.as_ref().unwrap().gamma) {
                winner = Some(s);
            }
        }
    }
    let winner = winner
        .ok_or_else(|| Error::SynthesisFailed("every angular sample is degenerate".to_string()))?;
    let best = winner.best.as_ref().unwrap();
    Ok(SynthesisResult {
        clustering: best.clustering.clone(),
        weights: best.weights.clone(),
        gamma: best.gamma,
        best_sample: Some(winner.index),
        per_sample: per_sample.clone(),
    })
}

fn best_at_sample(points: &[Complex64], config: &PmmConfig, memo: &Memo<'_>) -> Result<SampleBest> {
    let mut seen: Vec<(ClusteringVector, usize)> = Vec::new();
    for restart in 0..config.restarts {
        let seed = config.base_seed.wrapping_add(restart as u64);
        let state = kmeans_cluster(points, config.q_count, seed, config.kmeans_max_iter)?;
        if !seen.iter().any(|(c, _)| *c == state.assignments) {
            seen.push((state.assignments, restart));
        }
    }
    let distinct = seen.len();
    let mut best: Option<SampleBest> = None;
    for (clustering, restart) in seen {
        let (gamma, weights) = memo.evaluate(&clustering)?;
        if best.as_ref().is_none_or(|b| gamma < b.gamma) {
            best = Some(SampleBest {
                gamma,
                clustering,
                weights,
                restart,
                distinct,
            });
        }
    }
    Ok(best.expect("at least one restart"))
}
