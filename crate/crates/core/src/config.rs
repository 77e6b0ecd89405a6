//! Experiment configuration: flat `key = value` text, `#` comments.
//!
//! ```text
//! n = 12
//! q = 8
//! grid_m = 17
//! metric_m = 1001
//! reference.kind = dolph_chebyshev
//! reference.sll_db = -20
//! reference.theta0_deg = 10
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::baselines::{EmmParams, EnumerationOptions};
use crate::driver::PmmConfig;
use crate::error::{Error, Result};
use crate::excitation::ExcitationVector;
use crate::geometry::ArrayGeometry;
use crate::ipm::IpmParams;
use crate::refgen::{dolph_chebyshev, load_reference_for, taylor_nbar};

const KEYS: &[&str] = &[
    "n",
    "d",
    "q",
    "grid_m",
    "metric_m",
    "restarts",
    "seed",
    "kmeans_max_iter",
    "ipm_max_iter",
    "ipm_tol",
    "ipm_refine_gain",
    "compare_emm",
    "enumerate_cap",
    "reference.kind",
    "reference.sll_db",
    "reference.theta0_deg",
    "reference.nbar",
    "reference.path",
];

#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceSpec {
    DolphChebyshev {
        sll_db: f64,
        theta0_deg: f64,
    },
    Taylor {
        sll_db: f64,
        nbar: usize,
        theta0_deg: f64,
    },
    File {
        path: PathBuf,
    },
}

impl ReferenceSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ReferenceSpec::DolphChebyshev { .. } => "dolph_chebyshev",
            ReferenceSpec::Taylor { .. } => "taylor",
            ReferenceSpec::File { .. } => "file",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub d: f64,
    pub q: usize,
    pub grid_m: usize,
    pub metric_m: Option<usize>,
    pub restarts: usize,
    pub seed: u64,
    pub kmeans_max_iter: usize,
    pub ipm: IpmParams,
    pub compare_emm: bool,
    pub enumerate_cap: u128,
    pub reference: ReferenceSpec,
}

fn parse_value<T: FromStr>(
    map: &BTreeMap<String, (usize, String)>,
    key: &str,
) -> Result<Option<T>> {
    match map.get(key) {
        None => Ok(None),
        Some((line, raw)) => raw.parse::<T>().map(Some).map_err(|_| {
            Error::Config(format!("line {line}: cannot parse `{raw}` for key `{key}`"))
        }),
    }
}

fn require<T: FromStr>(map: &BTreeMap<String, (usize, String)>, key: &str) -> Result<T> {
    parse_value(map, key)?.ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
}

fn parse_bool(map: &BTreeMap<String, (usize, String)>, key: &str) -> Result<Option<bool>> {
    match map.get(key) {
        None => Ok(None),
        Some((line, raw)) => match raw.to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" => Ok(Some(true)),
            "false" | "no" | "0" => Ok(Some(false)),
            _ => Err(Error::Config(format!(
                "line {line}: `{raw}` is not a boolean for key `{key}`"
            ))),
        },
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses config text; relative reference paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line_no}: expected `key = value`")))?;
            let key = key.trim().to_string();
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "line {line_no}: unknown key `{key}`"
                )));
            }
            if map
                .insert(key.clone(), (line_no, value.trim().to_string()))
                .is_some()
            {
                return Err(Error::Config(format!(
                    "line {line_no}: duplicate key `{key}`"
                )));
            }
        }

        let n: usize = require(&map, "n")?;
        let q: usize = require(&map, "q")?;
        let grid_m: usize = require(&map, "grid_m")?;
        let defaults = IpmParams::default();
        let ipm = IpmParams {
            max_iter: parse_value(&map, "ipm_max_iter")?.unwrap_or(defaults.max_iter),
            tol: parse_value(&map, "ipm_tol")?.unwrap_or(defaults.tol),
            refine_gain: parse_bool(&map, "ipm_refine_gain")?.unwrap_or(defaults.refine_gain),
        };

        let kind: String = require(&map, "reference.kind")?;
        let theta0_deg = parse_value(&map, "reference.theta0_deg")?.unwrap_or(0.0);
        let reference = match kind.as_str() {
            "dolph_chebyshev" | "dc" => ReferenceSpec::DolphChebyshev {
                sll_db: require(&map, "reference.sll_db")?,
                theta0_deg,
            },
            "taylor" => ReferenceSpec::Taylor {
                sll_db: require(&map, "reference.sll_db")?,
                nbar: require(&map, "reference.nbar")?,
                theta0_deg,
            },
            "file" => {
                let p: String = require(&map, "reference.path")?;
                let p = PathBuf::from(p);
                ReferenceSpec::File {
                    path: if p.is_absolute() { p } else { base_dir.join(p) },
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown reference.kind `{other}` (dolph_chebyshev, taylor, file)"
                )))
            }
        };

        let cfg = Self {
            n,
            d: parse_value(&map, "d")?.unwrap_or(ArrayGeometry::DEFAULT_SPACING),
            q,
            grid_m,
            metric_m: parse_value(&map, "metric_m")?,
            restarts: parse_value(&map, "restarts")?.unwrap_or(50),
            seed: parse_value(&map, "seed")?.unwrap_or(0),
            kmeans_max_iter: parse_value(&map, "kmeans_max_iter")?
                .unwrap_or(crate::kmeans::DEFAULT_MAX_ITER),
            ipm,
            compare_emm: parse_bool(&map, "compare_emm")?.unwrap_or(true),
            enumerate_cap: parse_value(&map, "enumerate_cap")?
                .unwrap_or(EnumerationOptions::default().cap),
            reference,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if !(self.d > 0.0) {
            return bad(format!("d must be positive, got {}", self.d));
        }
        if self.q == 0 || self.q > self.n {
            return bad(format!("q must lie in [1, {}], got {}", self.n, self.q));
        }
        if self.grid_m < 2 || self.metric_m.is_some_and(|m| m < 2) {
            return bad("grid_m and metric_m must be at least 2".into());
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1".into());
        }
        if self.kmeans_max_iter == 0 {
            return bad("kmeans_max_iter must be at least 1".into());
        }
        if !(self.ipm.tol >= 0.0) {
            return bad("ipm_tol must be non-negative".into());
        }
        Ok(())
    }

    pub fn metric_samples(&self) -> usize {
        self.metric_m.unwrap_or(self.grid_m)
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        ArrayGeometry::new(self.n, self.d).map_err(|e| Error::Config(e.to_string()))
    }

    /// Generates or loads the reference excitations.
    pub fn reference_excitations(&self) -> Result<ExcitationVector> {
        let geometry = self.geometry()?;
        let exc = match &self.reference {
            ReferenceSpec::DolphChebyshev { sll_db, theta0_deg } => {
                dolph_chebyshev(&geometry, *sll_db, *theta0_deg)
            }
            ReferenceSpec::Taylor {
                sll_db,
                nbar,
                theta0_deg,
            } => taylor_nbar(&geometry, *sll_db, *nbar, *theta0_deg),
            ReferenceSpec::File { path } => return load_reference_for(path, self.n),
        };
        exc.map_err(|e| Error::Config(e.to_string()))
    }

    pub fn pmm_config(&self) -> PmmConfig {
        PmmConfig {
            clustering_samples: self.grid_m,
            metric_samples: self.metric_m,
            q_count: self.q,
            restarts: self.restarts,
            base_seed: self.seed,
            kmeans_max_iter: self.kmeans_max_iter,
            ipm: self.ipm,
        }
    }

    pub fn emm_params(&self) -> EmmParams {
        EmmParams {
            q_count: self.q,
            restarts: self.restarts,
            base_seed: self.seed,
            kmeans_max_iter: self.kmeans_max_iter,
        }
    }
}
