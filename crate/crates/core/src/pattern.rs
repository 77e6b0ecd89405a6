//! Power patterns of fully populated and clustered arrays, and the
//! power-matching metric between two patterns.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::excitation::{ClusteringVector, ExcitationVector};
use crate::geometry::{AngularGrid, ArrayGeometry, SteeringMatrix};

/// Real, non-negative power samples on an [`AngularGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct PowerPattern {
    grid: AngularGrid,
    values: Vec<f64>,
}

impl PowerPattern {
    pub fn new(grid: AngularGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "{} pattern samples for a grid of {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(m) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid(format!(
                "pattern sample {} is negative or not finite",
                m + 1
            )));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_array_factor(grid: AngularGrid, af: &[Complex64]) -> Self {
        Self {
            grid,
            values: af.iter().map(|a| a.norm_sqr()).collect(),
        }
    }

    pub fn grid(&self) -> AngularGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Trapezoid integral over visible space.
    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    /// Writes `u,p_linear,p_db` rows, dB relative to the pattern maximum.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let peak = self.max();
        writeln!(out, "u,p_linear,p_db")?;
        for (u, &p) in self.grid.nodes().zip(&self.values) {
            let db = if peak > 0.0 {
                10.0 * (p / peak).log10()
            } else {
                f64::NEG_INFINITY
            };
            writeln!(out, "{u:.17e},{p:.17e},{db:.17e}")?;
        }
        Ok(())
    }
}

fn check_length(what: &str, got: usize, want: usize) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "{what}: expected {want} values, got {got}"
        )))
    }
}

/// `P^ref(u) = |sum_n I_n e^{j k d (n-1) u}|^2` of a fully populated array.
pub fn fpa_power_pattern(
    geometry: &ArrayGeometry,
    excitations: &ExcitationVector,
    grid: AngularGrid,
) -> Result<PowerPattern> {
    check_length(
        "element excitations",
        excitations.len(),
        geometry.n_elements(),
    )?;
    let steering = SteeringMatrix::new(geometry, grid);
    let af = steering.array_factor(excitations.as_slice());
    Ok(PowerPattern::from_array_factor(grid, &af))
}

/// Power pattern of a clustered array: every element of cluster `q` is
/// driven by the shared weight `I_q`.
pub fn cpa_power_pattern(
    geometry: &ArrayGeometry,
    clustering: &ClusteringVector,
    weights: &ExcitationVector,
    grid: AngularGrid,
) -> Result<PowerPattern> {
    check_length("clustering", clustering.n_elements(), geometry.n_elements())?;
    let per_element = clustering.expand(weights.as_slice())?;
    let steering = SteeringMatrix::new(geometry, grid);
    let af = steering.array_factor(&per_element);
    Ok(PowerPattern::from_array_factor(grid, &af))
}

/// Normalised L1 mismatch `int |P^ref - P| du / int P^ref du`.
pub fn pm_metric(reference: &PowerPattern, trial: &PowerPattern) -> Result<f64> {
    if reference.grid != trial.grid {
        return Err(Error::invalid(format!(
            "patterns sampled on different grids ({} vs {} nodes)",
            reference.grid.len(),
            trial.grid.len()
        )));
    }
    let energy = reference.integral();
    if !(energy > 0.0) {
        return Err(Error::invalid("reference pattern carries no energy"));
    }
    Ok(mismatch_integral(reference.grid, &reference.values, &trial.values) / energy)
}

pub(crate) fn mismatch_integral(grid: AngularGrid, reference: &[f64], trial: &[f64]) -> f64 {
    let m = grid.len();
    let mut inner = 0.0;
    for i in 1..m - 1 {
        inner += (reference[i] - trial[i]).abs();
    }
    let ends = (reference[0] - trial[0]).abs() + (reference[m - 1] - trial[m - 1]).abs();
    grid.step() * (inner + 0.5 * ends)
}

/// Matching improvement `R = (G_emm - G_pmm) / G_emm * 100`, in percent.
pub fn matching_improvement(gamma_emm: f64, gamma_pmm: f64) -> Result<f64> {
    if !(gamma_emm > 0.0) {
        return Err(Error::invalid(format!(
            "baseline mismatch must be positive, got {gamma_emm}"
        )));
    }
    Ok((gamma_emm - gamma_pmm) / gamma_emm * 100.0)
}
