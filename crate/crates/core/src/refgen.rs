//! Reference excitations: Dolph-Chebyshev and Taylor tapers with
//! progressive-phase steering, plus loading externally synthesised sets
//! (used for shaped beams).

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::excitation::ExcitationVector;
use crate::geometry::ArrayGeometry;
use crate::pattern::PowerPattern;

/// Chebyshev polynomial of the first kind, valid for any real argument.
fn chebyshev(order: usize, x: f64) -> f64 {
    let n = order as f64;
    if x.abs() <= 1.0 {
        (n * x.acos()).cos()
    } else if x > 1.0 {
        (n * x.acosh()).cosh()
    } else {
        let sign = if order.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * (n * (-x).acosh()).cosh()
    }
}

fn check_sll(sll_db: f64) -> Result<()> {
    if sll_db.is_finite() && sll_db < 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "side-lobe level must be negative dB, got {sll_db}"
        )))
    }
}

/// Multiplies by `e^{-j k d (n-1) u0}` with `u0 = sin(theta0)`.
pub fn steer(
    geometry: &ArrayGeometry,
    amplitudes: &[f64],
    theta0_deg: f64,
) -> Result<ExcitationVector> {
    let u0 = theta0_deg.to_radians().sin();
    ExcitationVector::new(
        amplitudes
            .iter()
            .enumerate()
            .map(|(n, &a)| Complex64::from_polar(a, -geometry.phase(n, u0)))
            .collect(),
    )
}

/// Dolph-Chebyshev amplitudes normalised to unit peak.
///
/// The array factor of a centred `N`-element array is
/// `T_{N-1}(x0 cos(psi/2))` with `x0 = cosh(acosh(R)/(N-1))`; sampling it at
/// `psi_k = 2 pi k / N` and inverting the length-`N` DFT recovers the taper.
pub fn dolph_chebyshev_taper(n: usize, sll_db: f64) -> Result<Vec<f64>> {
    if n < 3 {
        return Err(Error::invalid(format!(
            "Dolph-Chebyshev taper needs at least 3 elements, got {n}"
        )));
    }
    check_sll(sll_db)?;
    let ratio = 10f64.powf(-sll_db / 20.0);
    let order = n - 1;
    let x0 = (ratio.acosh() / order as f64).cosh();
    let centre = order as f64 / 2.0;
    let samples: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let psi = 2.0 * PI * k as f64 / n as f64;
            (psi, chebyshev(order, x0 * (psi / 2.0).cos()))
        })
        .collect();
    let mut amps: Vec<f64> = (0..n)
        .map(|i| {
            let pos = i as f64 - centre;
            samples
                .iter()
                .map(|&(psi, af)| af * (pos * psi).cos())
                .sum::<f64>()
                / n as f64
        })
        .collect();
    normalize_peak(&mut amps);
    symmetrize(&mut amps);
    Ok(amps)
}

pub fn dolph_chebyshev(
    geometry: &ArrayGeometry,
    sll_db: f64,
    theta0_deg: f64,
) -> Result<ExcitationVector> {
    let amps = dolph_chebyshev_taper(geometry.n_elements(), sll_db)?;
    steer(geometry, &amps, theta0_deg)
}

/// Taylor one-parameter `n-bar` line-source taper sampled at the element
/// positions, normalised to unit peak.
pub fn taylor_taper(n: usize, sll_db: f64, nbar: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("Taylor taper needs at least one element"));
    }
    if nbar < 1 {
        return Err(Error::invalid("Taylor n-bar must be at least 1"));
    }
    check_sll(sll_db)?;
    let ratio = 10f64.powf(-sll_db / 20.0);
    let a = ratio.acosh() / PI;
    let a2 = a * a;
    let nb = nbar as f64;
    let sigma2 = nb * nb / (a2 + (nb - 0.5) * (nb - 0.5));

    let coeffs: Vec<f64> = (1..nbar)
        .map(|m| {
            let mf = m as f64;
            let numer: f64 = (1..nbar)
                .map(|i| {
                    let fi = i as f64 - 0.5;
                    1.0 - mf * mf / (sigma2 * (a2 + fi * fi))
                })
                .product();
            let denom: f64 = (1..nbar)
                .filter(|&i| i != m)
                .map(|i| 1.0 - mf * mf / (i * i) as f64)
                .product();
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            sign * numer / (2.0 * denom)
        })
        .collect();

    let centre = (n as f64 - 1.0) / 2.0;
    let mut amps: Vec<f64> = (0..n)
        .map(|i| {
            let x = (i as f64 - centre) / n as f64;
            1.0 + 2.0
                * coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, f)| f * (2.0 * PI * (k + 1) as f64 * x).cos())
                    .sum::<f64>()
        })
        .collect();
    normalize_peak(&mut amps);
    symmetrize(&mut amps);
    Ok(amps)
}

pub fn taylor_nbar(
    geometry: &ArrayGeometry,
    sll_db: f64,
    nbar: usize,
    theta0_deg: f64,
) -> Result<ExcitationVector> {
    let amps = taylor_taper(geometry.n_elements(), sll_db, nbar)?;
    steer(geometry, &amps, theta0_deg)
}

fn normalize_peak(amps: &mut [f64]) {
    let peak = amps.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        amps.iter_mut().for_each(|a| *a /= peak);
    }
}

/// Averages mirror pairs so the taper is symmetric to the last bit.
fn symmetrize(amps: &mut [f64]) {
    let n = amps.len();
    for i in 0..n / 2 {
        let v = 0.5 * (amps[i] + amps[n - 1 - i]);
        amps[i] = v;
        amps[n - 1 - i] = v;
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ExcitationRecord {
    n: usize,
    amp: f64,
    phase_deg: f64,
}

/// Loads excitations from `n,amp,phase_deg` CSV (optional header) or, for
/// `.json` files, an array of `{"n", "amp", "phase_deg"}` objects.
pub fn load_reference(path: impl AsRef<Path>) -> Result<ExcitationVector> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let records = if is_json(path) {
        serde_json::from_str::<Vec<ExcitationRecord>>(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?
    } else {
        parse_csv(path, &text)?
    };
    if records.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "no excitations".to_string(),
        });
    }
    let mut slots = vec![None; records.len()];
    for r in &records {
        if r.n == 0 || r.n > records.len() || slots[r.n - 1].is_some() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                message: format!(
                    "element indices must be a permutation of 1..{}, found {}",
                    records.len(),
                    r.n
                ),
            });
        }
        slots[r.n - 1] = Some(Complex64::from_polar(r.amp, r.phase_deg.to_radians()));
    }
    ExcitationVector::new(slots.into_iter().map(Option::unwrap).collect())
}

/// As [`load_reference`], also checking the element count.
pub fn load_reference_for(path: impl AsRef<Path>, n_elements: usize) -> Result<ExcitationVector> {
    let path = path.as_ref();
    let exc = load_reference(path)?;
    if exc.len() != n_elements {
        return Err(Error::Config(format!(
            "{} holds {} excitations but the array has {n_elements} elements",
            path.display(),
            exc.len()
        )));
    }
    Ok(exc)
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn parse_csv(path: &Path, text: &str) -> Result<Vec<ExcitationRecord>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if out.is_empty() && line.starts_with(|c: char| c.is_ascii_alphabetic()) {
            continue; // header
        }
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(err(format!(
                "row {line_no}: expected 3 fields `n,amp,phase_deg`, got {}",
                fields.len()
            )));
        }
        let n = fields[0]
            .parse::<usize>()
            .map_err(|_| err(format!("row {line_no}: bad element index `{}`", fields[0])))?;
        let amp = fields[1]
            .parse::<f64>()
            .map_err(|_| err(format!("row {line_no}: bad amplitude `{}`", fields[1])))?;
        let phase_deg = fields[2]
            .parse::<f64>()
            .map_err(|_| err(format!("row {line_no}: bad phase `{}`", fields[2])))?;
        out.push(ExcitationRecord { n, amp, phase_deg });
    }
    Ok(out)
}

/// Writes excitations as `n,amp,phase_deg` CSV, or JSON for `.json` paths.
pub fn save_reference(path: impl AsRef<Path>, excitations: &ExcitationVector) -> Result<()> {
    let path = path.as_ref();
    let records: Vec<ExcitationRecord> = excitations
        .iter()
        .enumerate()
        .map(|(i, w)| ExcitationRecord {
            n: i + 1,
            amp: w.norm(),
            phase_deg: w.arg().to_degrees(),
        })
        .collect();
    let text = if is_json(path) {
        serde_json::to_string_pretty(&records).expect("plain records serialise")
    } else {
        let mut s = String::from("n,amp,phase_deg\n");
        for r in &records {
            writeln!(s, "{},{:?},{:?}", r.n, r.amp, r.phase_deg).unwrap();
        }
        s
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One segment of a pattern mask, bounds in dB relative to the pattern peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskSegment {
    pub u_start: f64,
    pub u_end: f64,
    pub upper_db: f64,
    pub lower_db: f64,
}

/// Piecewise upper/lower bounds over u, loaded from
/// `u_start,u_end,upper_db,lower_db` CSV. `-inf` disables a lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternMask {
    pub segments: Vec<MaskSegment>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskReport {
    /// Largest excursion outside the bounds in dB (zero when compliant).
    pub worst_violation_db: f64,
    pub violating_samples: usize,
}

impl MaskReport {
    pub fn is_compliant(&self) -> bool {
        self.violating_samples == 0
    }
}

impl PatternMask {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut segments = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if segments.is_empty() && line.starts_with(|c: char| c.is_ascii_alphabetic()) {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let vals = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| err(format!("row {}: {e}", i + 1)))?;
            if vals.len() != 4 {
                return Err(err(format!(
                    "row {}: expected `u_start,u_end,upper_db,lower_db`",
                    i + 1
                )));
            }
            if vals[0] > vals[1] || vals[3] > vals[2] {
                return Err(err(format!(
                    "row {}: empty segment or inverted bounds",
                    i + 1
                )));
            }
            segments.push(MaskSegment {
                u_start: vals[0],
                u_end: vals[1],
                upper_db: vals[2],
                lower_db: vals[3],
            });
        }
        Ok(Self { segments })
    }

    pub fn check(&self, pattern: &PowerPattern) -> MaskReport {
        let peak = pattern.max();
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for (u, &p) in pattern.grid().nodes().zip(pattern.values()) {
            let db = 10.0 * (p / peak).log10();
            let mut excess: f64 = 0.0;
            for s in self
                .segments
                .iter()
                .filter(|s| u >= s.u_start && u <= s.u_end)
            {
                excess = excess.max(db - s.upper_db).max(s.lower_db - db);
            }
            if excess > 0.0 {
                count += 1;
                worst = worst.max(excess);
            }
        }
        MaskReport {
            worst_violation_db: worst,
            violating_samples: count,
        }
    }
}
