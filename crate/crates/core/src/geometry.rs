//! Array geometry, the uniform angular grid in u-space and the steering
//! manifold that ties the two together.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A uniform linear array of isotropic elements along one axis.
///
/// Element `n` (zero-based) sits at `n * spacing` wavelengths, so its
/// phase at direction `u = sin(theta)` is `2 pi * spacing * n * u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    n_elements: usize,
    spacing: f64,
}

impl ArrayGeometry {
    pub const DEFAULT_SPACING: f64 = 0.5;

    pub fn new(n_elements: usize, spacing: f64) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::invalid("array needs at least one element"));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::invalid(format!(
                "element spacing must be positive, got {spacing}"
            )));
        }
        Ok(Self {
            n_elements,
            spacing,
        })
    }

    /// Half-wavelength spaced array.
    pub fn half_wave(n_elements: usize) -> Result<Self> {
        Self::new(n_elements, Self::DEFAULT_SPACING)
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    /// Spacing in wavelengths.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Electrical spacing `k d = 2 pi d / lambda`.
    pub fn kd(&self) -> f64 {
        2.0 * PI * self.spacing
    }

    pub fn is_half_wave(&self) -> bool {
        self.spacing == Self::DEFAULT_SPACING
    }

    /// Phase of element `n` (zero-based) towards `u`.
    #[inline]
    pub fn phase(&self, n: usize, u: f64) -> f64 {
        self.kd() * n as f64 * u
    }

    /// `e^{j k d n u}` for element `n` (zero-based).
    #[inline]
    pub fn steering(&self, n: usize, u: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.phase(n, u))
    }
}

/// `M` uniformly spaced samples of visible space, `u_m = -1 + 2m/(M-1)`
/// for zero-based `m`. Both endpoints are hit exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AngularGrid {
    len: usize,
}

impl AngularGrid {
    pub fn uniform(len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::invalid(format!(
                "angular grid needs at least 2 samples, got {len}"
            )));
        }
        Ok(Self { len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        2.0 / (self.len - 1) as f64
    }

    #[inline]
    pub fn node(&self, m: usize) -> f64 {
        debug_assert!(m < self.len);
        if m + 1 == self.len {
            1.0
        } else {
            -1.0 + 2.0 * m as f64 / (self.len - 1) as f64
        }
    }

    pub fn nodes(&self) -> impl DoubleEndedIterator<Item = f64> + ExactSizeIterator + '_ {
        (0..self.len).map(move |m| self.node(m))
    }

    /// Composite trapezoid weight of node `m`.
    #[inline]
    pub fn trapezoid_weight(&self, m: usize) -> f64 {
        let h = self.step();
        if m == 0 || m + 1 == self.len {
            0.5 * h
        } else {
            h
        }
    }

    /// Composite trapezoid rule over `[-1, 1]` for values sampled on this grid.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len);
        let inner: f64 = values[1..self.len - 1].iter().sum();
        self.step() * (inner + 0.5 * (values[0] + values[self.len - 1]))
    }

    /// Index of the node closest to `u`.
    pub fn nearest(&self, u: f64) -> usize {
        let x = (u.clamp(-1.0, 1.0) + 1.0) / self.step();
        (x.round() as usize).min(self.len - 1)
    }
}

/// Precomputed `e^{j k d n u_m}` table, element-major (`N` rows of `M`).
#[derive(Debug, Clone)]
pub struct SteeringMatrix {
    n_elements: usize,
    grid: AngularGrid,
    table: Vec<Complex64>,
}

impl SteeringMatrix {
    pub fn new(geometry: &ArrayGeometry, grid: AngularGrid) -> Self {
        let n_elements = geometry.n_elements();
        let mut table = Vec::with_capacity(n_elements * grid.len());
        for n in 0..n_elements {
            table.extend(grid.nodes().map(|u| geometry.steering(n, u)));
        }
        Self {
            n_elements,
            grid,
            table,
        }
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn grid(&self) -> AngularGrid {
        self.grid
    }

    pub fn row(&self, n: usize) -> &[Complex64] {
        let m = self.grid.len();
        &self.table[n * m..(n + 1) * m]
    }

    /// Array factor `sum_n w_n e^{j k d n u_m}` on every grid node.
    pub fn array_factor(&self, element_weights: &[Complex64]) -> Vec<Complex64> {
        let mut af = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        self.array_factor_into(element_weights, &mut af);
        af
    }

    pub fn array_factor_into(&self, element_weights: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(element_weights.len(), self.n_elements);
        out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (n, &w) in element_weights.iter().enumerate() {
            if w == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (acc, &s) in out.iter_mut().zip(self.row(n)) {
                *acc += w * s;
            }
        }
    }
}
