use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex excitations, either one per element (a fully populated
/// reference) or one per sub-array.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationVector(Vec<Complex64>);

impl ExcitationVector {
    pub fn new(weights: Vec<Complex64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("excitation vector is empty"));
        }
        if let Some(i) = weights
            .iter()
            .position(|w| !(w.re.is_finite() && w.im.is_finite()))
        {
            return Err(Error::invalid(format!(
                "excitation {} is not finite",
                i + 1
            )));
        }
        Ok(Self(weights))
    }

    /// Builds from `(amplitude, phase in degrees)` pairs.
    pub fn from_polar_deg(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(amp, deg)| Complex64::from_polar(amp, deg.to_radians()))
                .collect(),
        )
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex64> {
        self.0.iter()
    }

    pub fn is_all_zero(&self) -> bool {
        self.0.iter().all(|w| w.norm_sqr() == 0.0)
    }

    /// Fails unless at least one component is nonzero.
    pub fn ensure_nonzero(&self) -> Result<()> {
        if self.is_all_zero() {
            Err(Error::invalid("reference excitations are all zero"))
        } else {
            Ok(())
        }
    }
}

impl std::ops::Index<usize> for ExcitationVector {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

/// Element-to-cluster assignment.
///
/// Labels are stored zero-based; the public constructors and accessors
/// that talk about `c_n in [1..Q]` are suffixed `one_based`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClusteringVector {
    labels: Vec<usize>,
    q_count: usize,
}

impl ClusteringVector {
    /// Zero-based labels; every label in `0..q_count` must occur.
    pub fn new(labels: Vec<usize>, q_count: usize) -> Result<Self> {
        let n = labels.len();
        if q_count == 0 || q_count > n {
            return Err(Error::invalid(format!(
                "cluster count {q_count} must lie in [1, {n}]"
            )));
        }
        let mut sizes = vec![0usize; q_count];
        for (i, &c) in labels.iter().enumerate() {
            if c >= q_count {
                return Err(Error::invalid(format!(
                    "element {} has cluster label {} outside [1, {q_count}]",
                    i + 1,
                    c + 1
                )));
            }
            sizes[c] += 1;
        }
        if let Some(q) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::invalid(format!("cluster {} is empty", q + 1)));
        }
        Ok(Self { labels, q_count })
    }

    pub fn from_one_based(labels: &[usize], q_count: usize) -> Result<Self> {
        if let Some(i) = labels.iter().position(|&c| c == 0) {
            return Err(Error::invalid(format!(
                "element {} has cluster label 0 outside [1, {q_count}]",
                i + 1
            )));
        }
        Self::new(labels.iter().map(|&c| c - 1).collect(), q_count)
    }

    /// Every element in its own cluster, `c_n = n`.
    pub fn identity(n: usize) -> Result<Self> {
        Self::new((0..n).collect(), n)
    }

    pub fn n_elements(&self) -> usize {
        self.labels.len()
    }

    pub fn q_count(&self) -> usize {
        self.q_count
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn labels_one_based(&self) -> Vec<usize> {
        self.labels.iter().map(|c| c + 1).collect()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.q_count];
        for &c in &self.labels {
            sizes[c] += 1;
        }
        sizes
    }

    /// Expands per-cluster weights to per-element weights.
    pub fn expand(&self, weights: &[Complex64]) -> Result<Vec<Complex64>> {
        if weights.len() != self.q_count {
            return Err(Error::invalid(format!(
                "{} sub-array weights for {} clusters",
                weights.len(),
                self.q_count
            )));
        }
        Ok(self.labels.iter().map(|&c| weights[c]).collect())
    }

    /// Relabels clusters in order of first occurrence along the array, so
    /// that two vectors describing the same partition compare equal.
    pub fn canonical(&self) -> Self {
        Self {
            labels: canonical_labels(&self.labels, self.q_count),
            q_count: self.q_count,
        }
    }

    pub fn is_canonical(&self) -> bool {
        canonical_labels(&self.labels, self.q_count) == self.labels
    }

    /// Whether both vectors describe the same partition of the elements.
    pub fn same_partition(&self, other: &Self) -> bool {
        self.q_count == other.q_count && self.canonical() == other.canonical()
    }
}

pub(crate) fn canonical_labels(labels: &[usize], q_count: usize) -> Vec<usize> {
    let mut map = vec![usize::MAX; q_count];
    let mut next = 0;
    labels
        .iter()
        .map(|&c| {
            if map[c] == usize::MAX {
                map[c] = next;
                next += 1;
            }
            map[c]
        })
        .collect()
}

impl fmt::Display for ClusteringVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, c) in self.labels.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}", c + 1)?;
        }
        f.write_str("]")
    }
}
