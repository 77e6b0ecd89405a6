//! Elementary power patterns.
//!
//! The reference power pattern splits into one complex contribution per
//! element, `P_n(u) = |AF_n|^2 + sum_{l != n} AF_n AF_l^*`, whose sum over
//! `n` is real and equals `P^ref(u)`. Since the bracket equals
//! `AF_n (sum_l AF_l)^*`, each entry is computed as `AF_n AF^*`.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::excitation::ExcitationVector;
use crate::geometry::{AngularGrid, ArrayGeometry, SteeringMatrix};

/// Per-element terms `AF_n(u) = I_n e^{j k d (n-1) u}` of the array factor.
pub fn elementary_af(
    geometry: &ArrayGeometry,
    excitations: &ExcitationVector,
    u: f64,
) -> Result<Vec<Complex64>> {
    check_excitations(geometry, excitations)?;
    if !(u.abs() <= 1.0) {
        return Err(Error::invalid(format!("direction u = {u} outside [-1, 1]")));
    }
    Ok(excitations
        .iter()
        .enumerate()
        .map(|(n, &i_n)| i_n * geometry.steering(n, u))
        .collect())
}

fn check_excitations(geometry: &ArrayGeometry, excitations: &ExcitationVector) -> Result<()> {
    if excitations.len() != geometry.n_elements() {
        return Err(Error::invalid(format!(
            "{} excitations for a {}-element array",
            excitations.len(),
            geometry.n_elements()
        )));
    }
    Ok(())
}

/// `N x M` table of elementary power patterns, element-major.
#[derive(Debug, Clone)]
pub struct EpMatrix {
    grid: AngularGrid,
    n_elements: usize,
    entries: Vec<Complex64>,
}

pub fn ep_matrix(
    geometry: &ArrayGeometry,
    excitations: &ExcitationVector,
    grid: AngularGrid,
) -> Result<EpMatrix> {
    check_excitations(geometry, excitations)?;
    let steering = SteeringMatrix::new(geometry, grid);
    let af = steering.array_factor(excitations.as_slice());
    let n_elements = geometry.n_elements();
    let mut entries = Vec::with_capacity(n_elements * grid.len());
    for (n, &i_n) in excitations.iter().enumerate() {
        entries.extend(
            steering
                .row(n)
                .iter()
                .zip(&af)
                .map(|(&s, total)| i_n * s * total.conj()),
        );
    }
    Ok(EpMatrix {
        grid,
        n_elements,
        entries,
    })
}

impl EpMatrix {
    pub fn grid(&self) -> AngularGrid {
        self.grid
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    /// `P_n(u_m)` with zero-based `n`, `m`.
    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.entries[n * self.grid.len() + m]
    }

    pub fn column(&self, m: usize) -> Vec<Complex64> {
        (0..self.n_elements).map(|n| self.get(n, m)).collect()
    }

    pub fn column_sum(&self, m: usize) -> Complex64 {
        (0..self.n_elements).map(|n| self.get(n, m)).sum()
    }

    pub fn column_max_modulus(&self, m: usize) -> f64 {
        (0..self.n_elements)
            .map(|n| self.get(n, m).norm())
            .fold(0.0, f64::max)
    }

    /// Divides column `m` (zero-based) by its largest modulus.
    pub fn normalize_column(&self, m: usize) -> Result<NormalizedEpColumn> {
        if m >= self.grid.len() {
            return Err(Error::invalid(format!(
                "sample index {} outside [1, {}]",
                m + 1,
                self.grid.len()
            )));
        }
        let values = normalize(&self.column(m)).ok_or(Error::DegenerateSample { index: m })?;
        Ok(NormalizedEpColumn {
            sample_index: m,
            values,
        })
    }

    /// Writes `n,m,u,re,im` rows with one-based `n` and `m`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,m,u,re,im")?;
        for n in 0..self.n_elements {
            for (m, u) in self.grid.nodes().enumerate() {
                let p = self.get(n, m);
                writeln!(
                    out,
                    "{},{},{u:.17e},{:.17e},{:.17e}",
                    n + 1,
                    m + 1,
                    p.re,
                    p.im
                )?;
            }
        }
        Ok(())
    }
}

/// One grid column divided by its largest modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedEpColumn {
    pub sample_index: usize,
    pub values: Vec<Complex64>,
}

/// `None` for an all-zero column.
pub fn normalize(column: &[Complex64]) -> Option<Vec<Complex64>> {
    let (arg, peak) =
        column
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.norm()))
            .fold(
                (0, 0.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
    if !(peak > 0.0) {
        return None;
    }
    let mut out: Vec<Complex64> = column.iter().map(|p| p / peak).collect();
    // Pin the dominant entry to unit modulus against rounding in the division.
    let norm = out[arg].norm();
    out[arg] /= norm;
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_element_has_no_cross_terms() {
        let geo = ArrayGeometry::half_wave(1).unwrap();
        let exc = ExcitationVector::new(vec![c(0.6, -0.8)]).unwrap();
        let ep = ep_matrix(&geo, &exc, AngularGrid::uniform(9).unwrap()).unwrap();
        for m in 0..9 {
            let p = ep.get(0, m);
            assert!((p.re - 1.0).abs() < 1e-15 && p.im.abs() < 1e-15);
        }
    }

    #[test]
    fn two_element_broadside_by_hand() {
        let geo = ArrayGeometry::half_wave(2).unwrap();
        let exc = ExcitationVector::uniform(2).unwrap();
        let ep = ep_matrix(&geo, &exc, AngularGrid::uniform(3).unwrap()).unwrap();
        assert_eq!(ep.get(0, 1), c(2.0, 0.0));
        assert_eq!(ep.get(1, 1), c(2.0, 0.0));
        assert_eq!(ep.column_sum(1), c(4.0, 0.0));
    }

    #[test]
    fn elementary_af_cases() {
        let geo = ArrayGeometry::half_wave(1).unwrap();
        let one = ExcitationVector::uniform(1).unwrap();
        assert_eq!(elementary_af(&geo, &one, 0.37).unwrap(), vec![c(1.0, 0.0)]);

        let geo = ArrayGeometry::half_wave(2).unwrap();
        let two = ExcitationVector::uniform(2).unwrap();
        let af = elementary_af(&geo, &two, 1.0).unwrap();
        assert_eq!(af[0], c(1.0, 0.0));
        assert!((af[1] - c(-1.0, 0.0)).norm() < 1e-15);
        assert!(elementary_af(&geo, &two, 1.5).is_err());
        assert!(elementary_af(&geo, &one, 0.0).is_err());
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(
            normalize(&[c(2.0, 0.0), c(1.0, 0.0)]).unwrap(),
            vec![c(1.0, 0.0), c(0.5, 0.0)]
        );
        let v = normalize(&[c(1.0, 0.0), c(3.0, 4.0)]).unwrap();
        assert!((v[1] - c(0.6, 0.8)).norm() < 1e-16);
        assert_eq!(v[1].norm(), 1.0);
        assert!(normalize(&[c(0.0, 0.0); 3]).is_none());
    }

    #[test]
    fn degenerate_column_reported() {
        // Two in-phase elements have an exact null at u = +-1 only up to
        // rounding, so build a true zero column from zero excitations.
        let geo = ArrayGeometry::half_wave(2).unwrap();
        let exc = ExcitationVector::new(vec![c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let ep = ep_matrix(&geo, &exc, AngularGrid::uniform(3).unwrap()).unwrap();
        assert!(matches!(
            ep.normalize_column(1),
            Err(Error::DegenerateSample { index: 1 })
        ));
        assert!(ep.normalize_column(3).is_err());
    }
}
