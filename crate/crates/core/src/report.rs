//! Run summaries (JSON), per-run CSV bundles and the cross-run comparison
//! table. Floats in summaries are written with 17 significant digits so
//! that identical runs give byte-identical files.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::config::{ExperimentConfig, ReferenceSpec};
use crate::driver::SynthesisResult;
use crate::error::{Error, Result};
use crate::excitation::{ClusteringVector, ExcitationVector};
use crate::geometry::{AngularGrid, ArrayGeometry};
use crate::metrics::{pattern_metrics, MetricsOptions};
use crate::pattern::{cpa_power_pattern, fpa_power_pattern, matching_improvement, PowerPattern};

/// Node count of the dense grid used for exported patterns and for the
/// side-lobe / beamwidth figures in summaries.
pub const REPORT_SAMPLES: usize = 2001;

fn sig17<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        let raw = RawValue::from_string(format!("{x:.16e}")).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    } else {
        s.serialize_none()
    }
}

fn sig17_opt<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => sig17(v, s),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSummary {
    pub kind: String,
    #[serde(serialize_with = "sig17_opt")]
    pub sll_db: Option<f64>,
    #[serde(serialize_with = "sig17_opt")]
    pub theta0_deg: Option<f64>,
    pub nbar: Option<usize>,
    pub path: Option<String>,
}

impl From<&ReferenceSpec> for ReferenceSummary {
    fn from(spec: &ReferenceSpec) -> Self {
        let mut out = ReferenceSummary {
            kind: spec.kind().to_string(),
            sll_db: None,
            theta0_deg: None,
            nbar: None,
            path: None,
        };
        match spec {
            ReferenceSpec::DolphChebyshev { sll_db, theta0_deg } => {
                out.sll_db = Some(*sll_db);
                out.theta0_deg = Some(*theta0_deg);
            }
            ReferenceSpec::Taylor {
                sll_db,
                nbar,
                theta0_deg,
            } => {
                out.sll_db = Some(*sll_db);
                out.nbar = Some(*nbar);
                out.theta0_deg = Some(*theta0_deg);
            }
            ReferenceSpec::File { path } => out.path = Some(path.display().to_string()),
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub method: String,
    pub n: usize,
    #[serde(serialize_with = "sig17")]
    pub d: f64,
    pub q: usize,
    pub grid_m: usize,
    pub metric_m: usize,
    pub restarts: usize,
    pub seed: u64,
    pub reference: ReferenceSummary,
    #[serde(serialize_with = "sig17")]
    pub gamma: f64,
    /// `None` when the main lobe fills visible space.
    #[serde(serialize_with = "sig17_opt")]
    pub sll_db: Option<f64>,
    #[serde(serialize_with = "sig17")]
    pub fnbw_deg: f64,
    #[serde(serialize_with = "sig17_opt")]
    pub reference_sll_db: Option<f64>,
    /// Direction of the winning clustering sample, for sample-based methods.
    #[serde(serialize_with = "sig17_opt")]
    pub best_u: Option<f64>,
    /// One-based cluster label per element.
    pub clustering: Vec<usize>,
    #[serde(serialize_with = "sig17_opt")]
    pub matching_improvement_pct: Option<f64>,
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serialises");
        s.push('\n');
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }
}

/// Patterns of a finished run on the dense report grid.
#[derive(Debug, Clone)]
pub struct RunPatterns {
    pub reference: PowerPattern,
    pub clustered: PowerPattern,
}

impl RunPatterns {
    pub fn new(
        geometry: &ArrayGeometry,
        reference: &ExcitationVector,
        clustering: &ClusteringVector,
        weights: &ExcitationVector,
    ) -> Result<Self> {
        let grid = AngularGrid::uniform(REPORT_SAMPLES)?;
        Ok(Self {
            reference: fpa_power_pattern(geometry, reference, grid)?,
            clustered: cpa_power_pattern(geometry, clustering, weights, grid)?,
        })
    }
}

/// Builds the summary of one synthesis run. `gamma_baseline` (the
/// excitation-matching mismatch) adds the matching improvement.
pub fn summarize(
    method: &str,
    config: &ExperimentConfig,
    patterns: &RunPatterns,
    result: &SynthesisResult,
    best_u: Option<f64>,
    gamma_baseline: Option<f64>,
) -> Result<Summary> {
    let ref_metrics = pattern_metrics(&patterns.reference, &MetricsOptions::default())?;
    // Measure the clustered lobe nearest the reference beam so that a
    // strong spurious lobe is reported as a side lobe.
    let options = MetricsOptions {
        mainlobe_hint: Some(ref_metrics.peak_u),
        ..MetricsOptions::default()
    };
    let metrics = pattern_metrics(&patterns.clustered, &options)?;
    let improvement = match gamma_baseline {
        Some(g) if g > 0.0 => Some(matching_improvement(g, result.gamma)?),
        _ => None,
    };
    Ok(Summary {
        method: method.to_string(),
        n: config.n,
        d: config.d,
        q: config.q,
        grid_m: config.grid_m,
        metric_m: config.metric_samples(),
        restarts: config.restarts,
        seed: config.seed,
        reference: ReferenceSummary::from(&config.reference),
        gamma: result.gamma,
        sll_db: metrics.sll_db,
        fnbw_deg: metrics.fnbw_deg,
        reference_sll_db: ref_metrics.sll_db,
        best_u,
        clustering: result.clustering.labels_one_based(),
        matching_improvement_pct: improvement,
    })
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, r: std::io::Result<()>) -> Result<()> {
    r.map_err(|e| Error::io(path, e))
}

/// `n,cluster`, both one-based.
pub fn write_layout_csv(path: impl AsRef<Path>, clustering: &ClusteringVector) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let r = (|| {
        writeln!(out, "n,cluster")?;
        for (n, c) in clustering.labels_one_based().iter().enumerate() {
            writeln!(out, "{},{}", n + 1, c)?;
        }
        out.flush()
    })();
    finish(path, r)
}

/// `q,amp,phase_deg`, one row per cluster weight.
pub fn write_weights_csv(path: impl AsRef<Path>, weights: &ExcitationVector) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let r = (|| {
        writeln!(out, "q,amp,phase_deg")?;
        for (q, w) in weights.iter().enumerate() {
            writeln!(
                out,
                "{},{:.17e},{:.17e}",
                q + 1,
                w.norm(),
                w.arg().to_degrees()
            )?;
        }
        out.flush()
    })();
    finish(path, r)
}

/// `u,gamma` of the best clustering found at each clustering sample.
/// Degenerate samples are omitted.
pub fn write_gamma_curve_csv(path: impl AsRef<Path>, result: &SynthesisResult) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let r = (|| {
        writeln!(out, "u,gamma")?;
        for s in &result.per_sample {
            if let Some(b) = &s.best {
                writeln!(out, "{:.17e},{:.17e}", s.u, b.gamma)?;
            }
        }
        out.flush()
    })();
    finish(path, r)
}

pub fn write_pattern_csv(path: impl AsRef<Path>, pattern: &PowerPattern) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let r = pattern.write_csv(&mut out).and_then(|_| out.flush());
    finish(path, r)
}

/// Writes `<prefix>summary.json`, `<prefix>layout.csv`,
/// `<prefix>weights.csv` and `<prefix>pattern.csv` into `dir`.
pub fn write_run_bundle(
    dir: &Path,
    prefix: &str,
    summary: &Summary,
    result: &SynthesisResult,
    patterns: &RunPatterns,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    summary.write(dir.join(format!("{prefix}summary.json")))?;
    write_layout_csv(dir.join(format!("{prefix}layout.csv")), &result.clustering)?;
    write_weights_csv(dir.join(format!("{prefix}weights.csv")), &result.weights)?;
    write_pattern_csv(
        dir.join(format!("{prefix}pattern.csv")),
        &patterns.clustered,
    )?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub method: String,
    pub q: usize,
    pub sll_db: Option<f64>,
    pub gamma: f64,
    /// Matching improvement over the excitation-matching row with the same
    /// `q` (or over the first summary when there is none).
    pub r_pct: Option<f64>,
}

/// Tabulates summaries of runs on the same array, reference and metric
/// grid.
pub fn compare_summaries(summaries: &[Summary]) -> Result<Vec<CompareRow>> {
    let first = summaries
        .first()
        .ok_or_else(|| Error::invalid("no summaries to compare"))?;
    for s in &summaries[1..] {
        if s.n != first.n || s.d != first.d || s.reference != first.reference {
            return Err(Error::invalid(format!(
                "incompatible references: {} (N = {}) vs {} (N = {})",
                first.reference.kind, first.n, s.reference.kind, s.n
            )));
        }
        if s.metric_m != first.metric_m {
            return Err(Error::invalid(format!(
                "mismatched metric grids: M = {} vs M = {}",
                first.metric_m, s.metric_m
            )));
        }
    }
    summaries
        .iter()
        .map(|s| {
            let baseline = summaries
                .iter()
                .find(|b| b.method == "EMM" && b.q == s.q)
                .unwrap_or(first);
            let r_pct = if baseline.gamma > 0.0 {
                Some(matching_improvement(baseline.gamma, s.gamma)?)
            } else {
                None
            };
            Ok(CompareRow {
                method: s.method.clone(),
                q: s.q,
                sll_db: s.sll_db,
                gamma: s.gamma,
                r_pct,
            })
        })
        .collect()
}

fn opt(x: Option<f64>, prec: usize) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.prec$}"))
}

pub fn write_compare_csv<W: Write>(rows: &[CompareRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "method,q,sll_db,gamma,r_pct")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.6e},{}",
            r.method,
            r.q,
            r.sll_db.map_or(String::new(), |v| format!("{v:.3}")),
            r.gamma,
            r.r_pct.map_or(String::new(), |v| format!("{v:.2}")),
        )?;
    }
    Ok(())
}

/// Fixed-width table for terminals.
pub fn format_compare_table(rows: &[CompareRow]) -> String {
    let mut s = format!(
        "{:<8}{:>4}{:>12}{:>14}{:>10}\n",
        "method", "Q", "SLL [dB]", "gamma", "R [%]"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<8}{:>4}{:>12}{:>14.4e}{:>10}\n",
            r.method,
            r.q,
            opt(r.sll_db, 2),
            r.gamma,
            opt(r.r_pct, 1)
        ));
    }
    s
}
