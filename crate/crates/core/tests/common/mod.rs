#![allow(dead_code)]

use cpa_core::geometry::{AngularGrid, ArrayGeometry, SteeringMatrix};
use cpa_core::ipm::invert_af_to_excitations;
use cpa_core::refgen::{MaskSegment, PatternMask};
use cpa_core::{ExcitationVector, PowerPattern};
use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small seeded generator for test data.
pub struct TestRng(ChaCha8Rng);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform in [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn index(&mut self, n: usize) -> usize {
        (self.unit() * n as f64) as usize % n
    }

    pub fn complex(&mut self) -> Complex64 {
        Complex64::new(self.range(-1.0, 1.0), self.range(-1.0, 1.0))
    }

    pub fn excitations(&mut self, n: usize) -> ExcitationVector {
        ExcitationVector::new((0..n).map(|_| self.complex()).collect()).unwrap()
    }

    /// Labels with every cluster used at least once.
    pub fn labels(&mut self, n: usize, q: usize) -> Vec<usize> {
        let mut labels: Vec<usize> = (0..n)
            .map(|i| if i < q { i } else { self.index(q) })
            .collect();
        for i in (1..n).rev() {
            labels.swap(i, self.index(i + 1));
        }
        labels
    }
}

/// Straight evaluation of `sum_n I_n e^{j pi n u}` by Horner's rule in
/// `z = e^{j pi u}` (half-wavelength spacing).
pub fn horner_af(excitations: &[Complex64], u: f64) -> Complex64 {
    let z = Complex64::from_polar(1.0, std::f64::consts::PI * u);
    excitations
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &i| acc * z + i)
}

#[derive(Debug, Clone, Copy)]
pub struct CosecantFigures {
    pub sll_db: f64,
    pub ripple_db: f64,
    pub fnbw_deg: f64,
}

/// Cosecant-squared shaping region and side-lobe mask used by the shaped
/// beam tests: shaped from 3 to 20 degrees, nulls aimed at -7 and 29 degrees
/// (about 40 degrees first-null width once synthesised), side lobes at -20 dB, 1 dB ripple.
pub struct CosecantSpec {
    pub u_shape: (f64, f64),
    pub u_nulls: (f64, f64),
    pub sll_db: f64,
    pub ripple_db: f64,
}

impl Default for CosecantSpec {
    fn default() -> Self {
        let s = |deg: f64| deg.to_radians().sin();
        Self {
            u_shape: (s(3.0), s(20.0)),
            u_nulls: (s(-6.0), s(28.0)),
            sll_db: -20.0,
            ripple_db: 1.0,
        }
    }
}

impl CosecantSpec {
    /// Desired relative power in the shaped region.
    pub fn shape(&self, u: f64) -> f64 {
        (self.u_shape.0 / u).powi(2)
    }

    pub fn mask(&self) -> PatternMask {
        let (a, b) = self.u_shape;
        let (l, r) = self.u_nulls;
        let mut segments = vec![
            MaskSegment {
                u_start: -1.0,
                u_end: l,
                upper_db: self.sll_db,
                lower_db: f64::NEG_INFINITY,
            },
            MaskSegment {
                u_start: r,
                u_end: 1.0,
                upper_db: self.sll_db,
                lower_db: f64::NEG_INFINITY,
            },
        ];
        // Piecewise-constant approximation of the shaped bounds.
        let pieces = 40;
        for k in 0..pieces {
            let u0 = a + (b - a) * k as f64 / pieces as f64;
            let u1 = a + (b - a) * (k + 1) as f64 / pieces as f64;
            let hi = 10.0 * self.shape(u0).log10();
            let lo = 10.0 * self.shape(u1).log10();
            segments.push(MaskSegment {
                u_start: u0,
                u_end: u1,
                upper_db: hi + 0.5 * self.ripple_db,
                lower_db: lo - 0.5 * self.ripple_db,
            });
        }
        PatternMask { segments }
    }

    /// Side-lobe level (dB below the peak, outside the nulls), ripple about
    /// the cosecant template (peak-to-peak dB) and first-null width
    /// (degrees) of a pattern.
    pub fn assess(&self, pattern: &PowerPattern) -> CosecantFigures {
        let grid = pattern.grid();
        let v = pattern.values();
        let peak = pattern.max();
        let db = |p: f64| 10.0 * (p / peak).log10();
        let nearest_min = |centre: f64| {
            let (lo, hi) = (grid.nearest(centre - 0.08), grid.nearest(centre + 0.08));
            (lo..=hi).min_by(|&i, &j| v[i].total_cmp(&v[j])).unwrap()
        };
        let (il, ir) = (nearest_min(self.u_nulls.0), nearest_min(self.u_nulls.1));
        let sll_db = (0..v.len())
            .filter(|&m| m < il || m > ir)
            .map(|m| db(v[m]))
            .fold(f64::NEG_INFINITY, f64::max);
        let dev: Vec<f64> = grid
            .nodes()
            .zip(v)
            .filter(|(u, _)| *u >= self.u_shape.0 && *u <= self.u_shape.1)
            .map(|(u, &p)| db(p) - 10.0 * self.shape(u).log10())
            .collect();
        let ripple_db = dev.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - dev.iter().cloned().fold(f64::INFINITY, f64::min);
        let fnbw_deg = (grid.node(ir).asin() - grid.node(il).asin()).to_degrees();
        CosecantFigures {
            sll_db,
            ripple_db,
            fnbw_deg,
        }
    }

    /// Synthesises `n` half-wavelength excitations by alternating between
    /// the mask and the set of realisable array factors.
    pub fn synthesize(&self, n: usize, iterations: usize) -> ExcitationVector {
        let geometry = ArrayGeometry::half_wave(n).unwrap();
        let grid = AngularGrid::uniform(2001).unwrap();
        let steering = SteeringMatrix::new(&geometry, grid);
        let (a, b) = self.u_shape;
        let (l, r) = self.u_nulls;
        // Aim slightly inside the bounds so the final pattern keeps margin.
        let side = 10f64.powf((self.sll_db - 1.5) / 10.0);
        let half_ripple = 10f64.powf(0.35 * self.ripple_db / 10.0);
        // Start from the shaped magnitude with zero phase.
        let start: Vec<Complex64> = grid
            .nodes()
            .map(|u| {
                let p = if u >= a && u <= b {
                    self.shape(u)
                } else if u > a - 0.5 * (a - l) && u < a {
                    1.0
                } else {
                    0.0
                };
                Complex64::new(p.sqrt(), 0.0)
            })
            .collect();
        let mut exc = invert_af_to_excitations(&start, &geometry, grid)
            .unwrap()
            .as_slice()
            .to_vec();
        for _ in 0..iterations {
            let mut af = steering.array_factor(&exc);
            // Scale by the geometric mean of P / shape over the shaped region.
            let (log_sum, count) = grid
                .nodes()
                .zip(&af)
                .filter(|(u, _)| *u >= a && *u <= b)
                .fold((0.0, 0usize), |(s, k), (u, v)| {
                    (s + (v.norm_sqr() / self.shape(u)).ln(), k + 1)
                });
            let peak_in_shape = (log_sum / count as f64).exp();
            for (u, v) in grid.nodes().zip(af.iter_mut()) {
                let p = v.norm_sqr() / peak_in_shape;
                let (lo, hi) = if u >= a && u <= b {
                    (self.shape(u) / half_ripple, self.shape(u) * half_ripple)
                } else if u <= l || u >= r {
                    (0.0, side)
                } else {
                    (0.0, 1.0)
                };
                let target = p.clamp(lo, hi);
                if target != p {
                    *v = if p > 0.0 {
                        *v * (target / p).sqrt()
                    } else {
                        Complex64::new((target * peak_in_shape).sqrt(), 0.0)
                    };
                }
            }
            exc = invert_af_to_excitations(&af, &geometry, grid)
                .unwrap()
                .as_slice()
                .to_vec();
        }
        let max = exc.iter().map(|e| e.norm()).fold(0.0, f64::max);
        ExcitationVector::new(exc.iter().map(|e| e / max).collect()).unwrap()
    }
}
