use crate::error::{Error, Result};
use crate::field::Representation;
use crate::flow::FlowConfig;
use crate::geom::SurfaceSpec;
use crate::su2::Alg;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

pub const ARTIFACT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSection {
    /// `torus`, `one_holed_torus_punctured` or `genus2_separating_pinch`.
    pub topology: String,
    pub n: usize,
    /// Cylinder columns (genus 2 only).
    #[serde(default)]
    pub nx: usize,
    /// Refinement levels for convergence studies.
    #[serde(default)]
    pub levels: Vec<usize>,
}

impl SurfaceSection {
    pub fn new(topology: &str, n: usize, nx: usize) -> Self {
        Self {
            topology: topology.into(),
            n,
            nx,
            levels: Vec::new(),
        }
    }

    pub fn spec(&self) -> Result<SurfaceSpec> {
        self.spec_at(self.n)
    }

    /// Same topology at resolution `n`; genus-2 cylinders keep their aspect `nx / n`.
    pub fn spec_at(&self, n: usize) -> Result<SurfaceSpec> {
        match self.topology.as_str() {
            "torus" => Ok(SurfaceSpec::torus(n)),
            "one_holed_torus_punctured" => Ok(SurfaceSpec::punctured_torus(n)),
            "genus2_separating_pinch" => Ok(SurfaceSpec::genus2(n, self.nx * n / self.n.max(1))),
            t => Err(Error::Config(format!("unknown topology `{t}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSection {
    pub kappa: Vec<f64>,
    pub ell: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepSection {
    /// `trivial`, `punctured_torus`, `genus2_generic` or `genus2_accidentally_reducible`.
    pub kind: String,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub s: f64,
    #[serde(default)]
    pub t: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub angles: Vec<f64>,
    #[serde(default)]
    pub axis: Vec<f64>,
}

impl RepSection {
    pub fn punctured_torus(alpha: f64, s: f64, t: f64) -> Self {
        Self {
            kind: "punctured_torus".into(),
            alpha,
            s,
            t,
            seed: 0,
            angles: Vec::new(),
            axis: Vec::new(),
        }
    }

    pub fn genus2_generic(alpha: f64, seed: u64) -> Self {
        Self {
            kind: "genus2_generic".into(),
            seed,
            ..Self::punctured_torus(alpha, 0.0, 0.0)
        }
    }

    pub fn genus2_accidentally_reducible(angles: [f64; 4], axis: [f64; 3]) -> Self {
        Self {
            kind: "genus2_accidentally_reducible".into(),
            angles: angles.to_vec(),
            axis: axis.to_vec(),
            ..Self::punctured_torus(0.0, 0.0, 0.0)
        }
    }

    pub fn build(&self) -> Result<Representation> {
        match self.kind.as_str() {
            "punctured_torus" => Representation::punctured_torus(self.alpha, self.s, self.t),
            "genus2_generic" => Representation::genus2_generic(self.alpha, self.seed),
            "genus2_accidentally_reducible" => {
                let angles: [f64; 4] = self
                    .angles
                    .as_slice()
                    .try_into()
                    .map_err(|_| Error::Config("accidentally reducible rep needs 4 angles".into()))?;
                let axis: [f64; 3] = self
                    .axis
                    .as_slice()
                    .try_into()
                    .map_err(|_| Error::Config("accidentally reducible rep needs a 3-vector axis".into()))?;
                Ok(Representation::genus2_accidentally_reducible(
                    angles,
                    Alg::new(axis[0], axis[1], axis[2]),
                ))
            }
            k => Err(Error::Config(format!("unknown representation kind `{k}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistSection {
    pub alpha: f64,
    pub beta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub tol_flat: f64,
    pub t_max: f64,
    pub max_steps: usize,
    pub record_every: usize,
    /// Fraction of the recorded history used for the decay fit.
    pub tail_fraction: f64,
}

impl Default for FlowSection {
    fn default() -> Self {
        let c = FlowConfig::default();
        Self {
            dt: c.dt,
            tol_flat: c.tol_flat,
            t_max: c.t_max,
            max_steps: c.max_steps,
            record_every: c.record_every,
            tail_fraction: 0.5,
        }
    }
}

impl FlowSection {
    pub fn config(&self) -> FlowConfig {
        FlowConfig {
            dt: self.dt,
            tol_flat: self.tol_flat,
            t_max: self.t_max,
            max_steps: self.max_steps,
            record_every: self.record_every,
            ..FlowConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    /// Eigenpairs computed per operator.
    pub modes: usize,
    /// Number of seeded random inputs (directions, sections, initial data).
    pub samples: usize,
    pub heat_time: f64,
    /// Exponents of the key estimate.
    pub exponents: Vec<f64>,
    pub k_range: [usize; 2],
    pub product_beta: f64,
    pub product_gamma: Vec<f64>,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            modes: 40,
            samples: 50,
            heat_time: 0.5,
            exponents: vec![2.0, 4.0],
            k_range: [5, 30],
            product_beta: 2.0,
            product_gamma: vec![0.1, 1.0, 10.0],
        }
    }
}

/// Every physics parameter of one run. I/O locations are not part of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    /// Subcommand name.
    pub experiment: String,
    /// Audit suite, for `audit` runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    pub version: String,
    pub seed: u64,
    /// Checks are enabled by listing their tolerance.
    pub tolerances: BTreeMap<String, f64>,
    pub surface: SurfaceSection,
    pub metric: MetricSection,
    #[serde(default)]
    pub representation: Vec<RepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twist: Option<TwistSection>,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
}

impl ExperimentManifest {
    pub fn new(experiment: &str, surface: SurfaceSection, metric: MetricSection) -> Self {
        Self {
            experiment: experiment.into(),
            suite: None,
            version: ARTIFACT_VERSION.into(),
            seed: 0,
            tolerances: BTreeMap::new(),
            surface,
            metric,
            representation: Vec::new(),
            twist: None,
            flow: FlowSection::default(),
            spectrum: SpectrumSection::default(),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Hex SHA-256 of the serialized manifest.
    pub fn run_id(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn tolerance(&self, key: &str) -> Option<f64> {
        self.tolerances.get(key).copied()
    }

    pub fn with_tolerances(mut self, tols: &[(&str, f64)]) -> Self {
        for &(k, v) in tols {
            self.tolerances.insert(k.into(), v);
        }
        self
    }

    pub fn rep(&self, k: usize) -> Result<Representation> {
        self.representation
            .get(k)
            .ok_or_else(|| Error::Config(format!("manifest lists no representation #{k}")))?
            .build()
    }

    pub fn twist(&self) -> Result<&TwistSection> {
        self.twist
            .as_ref()
            .ok_or_else(|| Error::Config("manifest has no [twist] section".into()))
    }

    pub fn kappa(&self) -> Result<f64> {
        self.metric
            .kappa
            .first()
            .copied()
            .ok_or_else(|| Error::Config("metric.kappa is empty".into()))
    }
}
