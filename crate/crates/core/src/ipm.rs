//! Sub-array weighting by iterative projection.
//!
//! Starting from the reference excitations, the loop alternates between
//! the set of patterns a clustered array can radiate (cluster-mean
//! weights) and the set of array factors whose magnitude equals the
//! reference pattern (magnitude replacement, then inverse transform back
//! to element excitations).

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::excitation::{ClusteringVector, ExcitationVector};
use crate::geometry::{AngularGrid, ArrayGeometry, SteeringMatrix};
use crate::pattern::{mismatch_integral, PowerPattern};

/// Relative tolerance under which `|AF|^2` already equals the reference.
const PROJECTION_EQ_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpmParams {
    /// Cap on inverse-transform steps.
    pub max_iter: usize,
    /// Relative stagnation threshold on the mismatch.
    pub tol: f64,
    /// Rescale the best iterate by the real gain that minimises the
    /// mismatch (a weighted median of `P^ref / P`).
    pub refine_gain: bool,
}

impl Default for IpmParams {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-6,
            refine_gain: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpmTrace {
    /// Index of the last iterate evaluated.
    pub iterations: usize,
    pub gamma_history: Vec<f64>,
    /// Weights of the best iterate visited, after gain refinement.
    pub final_weights: ExcitationVector,
    pub best_iteration: usize,
    /// Power gain applied to the best iterate (1 without refinement).
    pub gain: f64,
    /// Mismatch of `final_weights`.
    pub gamma: f64,
    pub converged: bool,
}

impl IpmTrace {
    pub fn best_gamma(&self) -> f64 {
        self.gamma
    }

    /// Writes `t,gamma` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,gamma")?;
        for (t, g) in self.gamma_history.iter().enumerate() {
            writeln!(out, "{t},{g:.17e}")?;
        }
        Ok(())
    }
}

/// Complex mean of the auxiliary excitations within each cluster.
pub fn subarray_average(
    aux: &[Complex64],
    clustering: &ClusteringVector,
) -> Result<ExcitationVector> {
    if aux.len() != clustering.n_elements() {
        return Err(Error::invalid(format!(
            "{} excitations for a clustering of {} elements",
            aux.len(),
            clustering.n_elements()
        )));
    }
    let q = clustering.q_count();
    let mut sums = vec![Complex64::new(0.0, 0.0); q];
    let mut counts = vec![0usize; q];
    for (&c, a) in clustering.labels().iter().zip(aux) {
        sums[c] += a;
        counts[c] += 1;
    }
    if let Some(empty) = counts.iter().position(|&k| k == 0) {
        return Err(Error::invalid(format!("cluster {} is empty", empty + 1)));
    }
    ExcitationVector::new(
        sums.iter()
            .zip(&counts)
            .map(|(s, &k)| s / k as f64)
            .collect(),
    )
}

/// Replaces the magnitude of every sample by `sqrt(P^ref)`, keeping its
/// phase. Zero samples take zero phase.
pub fn project_onto_reference(
    af_samples: &[Complex64],
    reference: &PowerPattern,
) -> Result<Vec<Complex64>> {
    if af_samples.len() != reference.grid().len() {
        return Err(Error::invalid(format!(
            "{} array-factor samples for a grid of {}",
            af_samples.len(),
            reference.grid().len()
        )));
    }
    let target: Vec<f64> = reference.values().iter().map(|p| p.sqrt()).collect();
    let mut out = af_samples.to_vec();
    project_in_place(&mut out, reference.values(), &target);
    Ok(out)
}

fn project_in_place(af: &mut [Complex64], reference: &[f64], target_mag: &[f64]) {
    for ((a, &p_ref), &mag) in af.iter_mut().zip(reference).zip(target_mag) {
        let p = a.norm_sqr();
        if (p - p_ref).abs() <= PROJECTION_EQ_TOL * p_ref {
            continue;
        }
        *a = if p > 0.0 {
            *a * (mag / p.sqrt())
        } else {
            Complex64::new(mag, 0.0)
        };
    }
}

fn require_half_wave(geometry: &ArrayGeometry) -> Result<()> {
    if geometry.is_half_wave() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "inverse transform to excitations requires half-wavelength spacing (d = 0.5), got d = {}",
            geometry.spacing()
        )))
    }
}

fn require_resolvable(n: usize, grid: AngularGrid) -> Result<()> {
    if grid.len() > n {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "inverse transform of {n} excitations needs at least {} samples, got {}",
            n + 1,
            grid.len()
        )))
    }
}

/// `I_n = 1/2 int_{-1}^{1} AF(u) e^{-j k d (n-1) u} du` by the trapezoid rule.
pub fn invert_af_to_excitations(
    projected_af: &[Complex64],
    geometry: &ArrayGeometry,
    grid: AngularGrid,
) -> Result<ExcitationVector> {
    require_half_wave(geometry)?;
    require_resolvable(geometry.n_elements(), grid)?;
    if projected_af.len() != grid.len() {
        return Err(Error::invalid(format!(
            "{} array-factor samples for a grid of {}",
            projected_af.len(),
            grid.len()
        )));
    }
    let steering = SteeringMatrix::new(geometry, grid);
    let weighted = trapezoid_weighted(projected_af, grid);
    let mut out = vec![Complex64::new(0.0, 0.0); geometry.n_elements()];
    invert_into(&steering, &weighted, &mut out);
    ExcitationVector::new(out)
}

fn trapezoid_weighted(af: &[Complex64], grid: AngularGrid) -> Vec<Complex64> {
    af.iter()
        .enumerate()
        .map(|(m, a)| a * (0.5 * grid.trapezoid_weight(m)))
        .collect()
}

fn invert_into(steering: &SteeringMatrix, weighted: &[Complex64], out: &mut [Complex64]) {
    for (n, slot) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (w, s) in weighted.iter().zip(steering.row(n)) {
            acc += w * s.conj();
        }
        *slot = acc;
    }
}

/// Precomputed state for running the weighting loop on many clusterings
/// against one reference.
#[derive(Debug, Clone)]
pub struct IpmProblem {
    steering: SteeringMatrix,
    reference_excitations: Vec<Complex64>,
    reference: PowerPattern,
    target_mag: Vec<f64>,
    reference_energy: f64,
    params: IpmParams,
}

impl IpmProblem {
    pub fn new(
        geometry: &ArrayGeometry,
        reference_excitations: &ExcitationVector,
        grid: AngularGrid,
        params: IpmParams,
    ) -> Result<Self> {
        require_half_wave(geometry)?;
        require_resolvable(geometry.n_elements(), grid)?;
        if reference_excitations.len() != geometry.n_elements() {
            return Err(Error::invalid(format!(
                "{} reference excitations for a {}-element array",
                reference_excitations.len(),
                geometry.n_elements()
            )));
        }
        reference_excitations.ensure_nonzero()?;
        let steering = SteeringMatrix::new(geometry, grid);
        let af = steering.array_factor(reference_excitations.as_slice());
        let reference = PowerPattern::from_array_factor(grid, &af);
        Self::with_reference(steering, reference_excitations, reference, params)
    }

    /// Uses a caller-supplied reference pattern instead of the one radiated
    /// by `reference_excitations`.
    pub fn with_pattern(
        geometry: &ArrayGeometry,
        reference_excitations: &ExcitationVector,
        reference: PowerPattern,
        params: IpmParams,
    ) -> Result<Self> {
        require_half_wave(geometry)?;
        require_resolvable(geometry.n_elements(), reference.grid())?;
        if reference_excitations.len() != geometry.n_elements() {
            return Err(Error::invalid(format!(
                "{} reference excitations for a {}-element array",
                reference_excitations.len(),
                geometry.n_elements()
            )));
        }
        let steering = SteeringMatrix::new(geometry, reference.grid());
        Self::with_reference(steering, reference_excitations, reference, params)
    }

    fn with_reference(
        steering: SteeringMatrix,
        reference_excitations: &ExcitationVector,
        reference: PowerPattern,
        params: IpmParams,
    ) -> Result<Self> {
        let reference_energy = reference.integral();
        if !(reference_energy > 0.0) {
            return Err(Error::invalid("reference pattern carries no energy"));
        }
        if !(params.tol >= 0.0) {
            return Err(Error::invalid("IPM tolerance must be non-negative"));
        }
        Ok(Self {
            target_mag: reference.values().iter().map(|p| p.sqrt()).collect(),
            steering,
            reference_excitations: reference_excitations.as_slice().to_vec(),
            reference,
            reference_energy,
            params,
        })
    }

    pub fn reference(&self) -> &PowerPattern {
        &self.reference
    }

    pub fn grid(&self) -> AngularGrid {
        self.steering.grid()
    }

    pub fn params(&self) -> IpmParams {
        self.params
    }

    /// Mismatch of the clustered array driven by `weights`.
    pub fn gamma_of(&self, clustering: &ClusteringVector, weights: &[Complex64]) -> Result<f64> {
        let per_element = clustering.expand(weights)?;
        let af = self.steering.array_factor(&per_element);
        Ok(self.gamma_from_af(&af))
    }

    fn gamma_from_af(&self, af: &[Complex64]) -> f64 {
        let trial: Vec<f64> = af.iter().map(|a| a.norm_sqr()).collect();
        mismatch_integral(self.grid(), self.reference.values(), &trial) / self.reference_energy
    }

    pub fn run(&self, clustering: &ClusteringVector) -> Result<IpmTrace> {
        let n = self.steering.n_elements();
        if clustering.n_elements() != n {
            return Err(Error::invalid(format!(
                "clustering of {} elements for a {n}-element array",
                clustering.n_elements()
            )));
        }
        let grid = self.grid();
        let mut aux = self.reference_excitations.clone();
        let mut per_element = vec![Complex64::new(0.0, 0.0); n];
        let mut af = vec![Complex64::new(0.0, 0.0); grid.len()];
        let mut gamma_history = Vec::new();
        let mut best: Option<(usize, ExcitationVector)> = None;
        let mut converged = false;
        let mut t = 0;

        loop {
            let weights = subarray_average(&aux, clustering)?;
            for (slot, &c) in per_element.iter_mut().zip(clustering.labels()) {
                *slot = weights[c];
            }
            self.steering.array_factor_into(&per_element, &mut af);
            let gamma = self.gamma_from_af(&af);
            gamma_history.push(gamma);

            if best
                .as_ref()
                .is_none_or(|(bt, _)| gamma < gamma_history[*bt])
            {
                best = Some((t, weights));
            }

            if t > 0 {
                let prev = gamma_history[t - 1];
                if (gamma - prev).abs() <= self.params.tol * prev {
                    converged = true;
                }
            }
            if gamma == 0.0 {
                converged = true;
            }
            if converged || t >= self.params.max_iter {
                break;
            }

            project_in_place(&mut af, self.reference.values(), &self.target_mag);
            for (m, a) in af.iter_mut().enumerate() {
                *a *= 0.5 * grid.trapezoid_weight(m);
            }
            invert_into(&self.steering, &af, &mut aux);
            t += 1;
        }

        let (best_iteration, mut final_weights) = best.expect("at least one iterate");
        let mut gamma = gamma_history[best_iteration];
        let mut gain = 1.0;
        if self.params.refine_gain && gamma > 0.0 {
            for (slot, &c) in per_element.iter_mut().zip(clustering.labels()) {
                *slot = final_weights[c];
            }
            self.steering.array_factor_into(&per_element, &mut af);
            let trial: Vec<f64> = af.iter().map(|a| a.norm_sqr()).collect();
            let s = optimal_gain(grid, self.reference.values(), &trial);
            let scaled: Vec<f64> = trial.iter().map(|p| p * s).collect();
            let refined =
                mismatch_integral(grid, self.reference.values(), &scaled) / self.reference_energy;
            if refined < gamma {
                gamma = refined;
                gain = s;
                let amp = s.sqrt();
                final_weights =
                    ExcitationVector::new(final_weights.iter().map(|w| w * amp).collect())?;
            }
        }
        Ok(IpmTrace {
            iterations: t,
            gamma_history,
            final_weights,
            best_iteration,
            gain,
            gamma,
            converged,
        })
    }
}

/// Real `s > 0` minimising `int |P^ref - s P| du` on the trapezoid grid.
///
/// The objective is `sum_m w_m P_m |P^ref_m / P_m - s|` plus a constant, so
/// the minimiser is the lower weighted median of the ratios.
pub fn optimal_gain(grid: AngularGrid, reference: &[f64], trial: &[f64]) -> f64 {
    let mut pairs: Vec<(f64, f64)> = reference
        .iter()
        .zip(trial)
        .enumerate()
        .filter(|(_, (_, &p))| p > 0.0)
        .map(|(m, (&r, &p))| (r / p, grid.trapezoid_weight(m) * p))
        .collect();
    if pairs.is_empty() {
        return 1.0;
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    for &(ratio, weight) in &pairs {
        acc += weight;
        if acc >= 0.5 * total {
            return if ratio > 0.0 { ratio } else { 1.0 };
        }
    }
    pairs.last().map_or(1.0, |p| p.0)
}

/// Runs the weighting loop for one clustering against the pattern radiated
/// by `reference_excitations` on `grid`.
pub fn ipm_weighting(
    geometry: &ArrayGeometry,
    clustering: &ClusteringVector,
    reference_excitations: &ExcitationVector,
    grid: AngularGrid,
    params: IpmParams,
) -> Result<IpmTrace> {
    IpmProblem::new(geometry, reference_excitations, grid, params)?.run(clustering)
}
