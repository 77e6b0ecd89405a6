//! Scalar figures of a sampled power pattern: side-lobe level, first-null
//! beamwidth and ripple over a shaped region.

use crate::error::{Error, Result};
use crate::pattern::PowerPattern;

/// Local minima shallower than this (relative to the peak, linear power)
/// are treated as main-lobe ripple rather than nulls. -3 dB.
const RIPPLE_FLOOR: f64 = 0.501_187_233_627_272_3;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetricsOptions {
    /// Direction near the main lobe of interest; the nearest local maximum
    /// is used instead of the global peak.
    pub mainlobe_hint: Option<f64>,
    /// Explicit `(u_start, u_end)` main-lobe region, overriding null search.
    pub mainlobe_window: Option<(f64, f64)>,
    /// `(u_start, u_end)` region whose peak-to-peak variation is reported as
    /// ripple.
    pub ripple_window: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternMetrics {
    pub peak_u: f64,
    /// Highest side lobe relative to the main-lobe peak, in dB. `None` when
    /// the main lobe fills all of visible space.
    pub sll_db: Option<f64>,
    pub fnbw_deg: f64,
    pub null_left_u: f64,
    pub null_right_u: f64,
    pub ripple_db: Option<f64>,
}

pub fn pattern_metrics(pattern: &PowerPattern, options: &MetricsOptions) -> Result<PatternMetrics> {
    let grid = pattern.grid();
    let v = pattern.values();
    let m = v.len();

    let peak_idx = match options.mainlobe_hint {
        Some(u0) => climb(v, grid.nearest(u0)),
        None => argmax(v),
    };
    let peak = v[peak_idx];
    if !(peak > 0.0) {
        return Err(Error::invalid("pattern has no positive maximum"));
    }

    let (left, right) = match options.mainlobe_window {
        Some((a, b)) => {
            let (a, b) = (a.min(b), a.max(b));
            let left = grid.nodes().position(|u| u >= a).unwrap_or(m - 1);
            let right = grid.nodes().rposition(|u| u <= b).unwrap_or(0);
            if left > right {
                return Err(Error::invalid("main-lobe window contains no grid node"));
            }
            (left, right)
        }
        None => (
            walk_to_null(v, peak_idx, peak, Direction::Left),
            walk_to_null(v, peak_idx, peak, Direction::Right),
        ),
    };

    let side = v[..left]
        .iter()
        .chain(&v[right + 1..])
        .copied()
        .fold(None, |acc: Option<f64>, x| {
            Some(acc.map_or(x, |a| a.max(x)))
        });
    let sll_db = side.map(|s| 10.0 * (s / peak).log10());

    let null_left_u = grid.node(left);
    let null_right_u = grid.node(right);
    let fnbw_deg = (null_right_u.asin() - null_left_u.asin()).to_degrees();

    let ripple_db = match options.ripple_window {
        Some((a, b)) => {
            let (a, b) = (a.min(b), a.max(b));
            let inside: Vec<f64> = grid
                .nodes()
                .zip(v)
                .filter(|(u, _)| *u >= a && *u <= b)
                .map(|(_, &p)| p)
                .collect();
            if inside.is_empty() {
                return Err(Error::invalid("ripple window contains no grid node"));
            }
            let hi = inside.iter().copied().fold(f64::MIN, f64::max);
            let lo = inside.iter().copied().fold(f64::MAX, f64::min);
            Some(10.0 * (hi / lo).log10())
        }
        None => None,
    };

    Ok(PatternMetrics {
        peak_u: grid.node(peak_idx),
        sll_db,
        fnbw_deg,
        null_left_u,
        null_right_u,
        ripple_db,
    })
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Hill-climbs from `start` to a local maximum.
fn climb(v: &[f64], mut i: usize) -> usize {
    loop {
        let left = if i > 0 { v[i - 1] } else { f64::MIN };
        let right = if i + 1 < v.len() { v[i + 1] } else { f64::MIN };
        if left > v[i] && left >= right {
            i -= 1;
        } else if right > v[i] {
            i += 1;
        } else {
            return i;
        }
    }
}

#[derive(Clone, Copy)]
enum Direction {
    Left,
    Right,
}

/// Walks away from the peak until the pattern turns upward again at a point
/// at least 3 dB below the peak, or the edge of visible space is reached.
fn walk_to_null(v: &[f64], peak_idx: usize, peak: f64, dir: Direction) -> usize {
    let last = v.len() - 1;
    let mut i = peak_idx;
    loop {
        let next = match dir {
            Direction::Left if i > 0 => i - 1,
            Direction::Right if i < last => i + 1,
            _ => return i,
        };
        if v[i] == 0.0 || (v[next] > v[i] && v[i] <= peak * RIPPLE_FLOOR) {
            return i;
        }
        i = next;
    }
}
