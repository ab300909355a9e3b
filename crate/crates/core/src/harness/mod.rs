//! Experiment registry: manifests, runs, acceptance checks, persistence and plot data.

pub mod manifest;
pub mod plot;
mod suites;

pub use manifest::{
    ExperimentManifest, FlowSection, MetricSection, RepSection, SpectrumSection, SurfaceSection, TwistSection,
    ARTIFACT_VERSION,
};
pub use plot::{emit_plot_data, PlotKind};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "YMLAB_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subcommand {
    Plumb,
    Curvature,
    Flow,
    Spectrum,
    Variation,
    Foliate,
    Degenerate,
    Audit,
    Sweep,
}

impl Subcommand {
    pub const ALL: [Subcommand; 9] = [
        Subcommand::Plumb,
        Subcommand::Curvature,
        Subcommand::Flow,
        Subcommand::Spectrum,
        Subcommand::Variation,
        Subcommand::Foliate,
        Subcommand::Degenerate,
        Subcommand::Audit,
        Subcommand::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Plumb => "plumb",
            Subcommand::Curvature => "curvature",
            Subcommand::Flow => "flow",
            Subcommand::Spectrum => "spectrum",
            Subcommand::Variation => "variation",
            Subcommand::Foliate => "foliate",
            Subcommand::Degenerate => "degenerate",
            Subcommand::Audit => "audit",
            Subcommand::Sweep => "sweep",
        }
    }

    /// Default manifest of the subcommand; `audit` defaults to the plumbing suite.
    pub fn default_manifest(self) -> ExperimentManifest {
        let suite = match self {
            Subcommand::Plumb | Subcommand::Audit => Suite::Plumbing,
            Subcommand::Curvature => Suite::Curvature,
            Subcommand::Flow => Suite::Roundtrip,
            Subcommand::Spectrum => Suite::Reducibility,
            Subcommand::Variation => Suite::Variation,
            Subcommand::Foliate => Suite::Composition,
            Subcommand::Degenerate => Suite::Degeneration,
            Subcommand::Sweep => {
                let mut m = Suite::Decay.manifest();
                m.experiment = "sweep".into();
                m.suite = None;
                m.surface = SurfaceSection::new("genus2_separating_pinch", 16, 8);
                m.twist = Some(TwistSection {
                    alpha: 0.3,
                    beta: vec![0.25, 0.2],
                    gamma: None,
                });
                m.flow = FlowSection::default();
                m.tolerances = [("sup_f".to_string(), 1e-6)].into();
                return m;
            }
        };
        let mut m = suite.manifest();
        if self != Subcommand::Audit {
            m.experiment = self.name().into();
            m.suite = None;
        }
        if self == Subcommand::Foliate {
            m.twist = Some(TwistSection {
                alpha: 0.35,
                beta: vec![0.35, 0.3, 0.25, 0.2, 0.15],
                gamma: None,
            });
            m.surface.n = 16;
            m.surface.levels.clear();
            m.tolerances = BTreeMap::new();
        }
        m
    }
}

impl FromStr for Subcommand {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown subcommand `{s}`")))
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Named audit suites, one per acceptance criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Plumbing,
    Curvature,
    Gradient,
    Roundtrip,
    Decay,
    Reducibility,
    Eigen,
    Kato,
    Heat,
    Variation,
    Composition,
    Degeneration,
}

impl Suite {
    pub const ALL: [Suite; 12] = [
        Suite::Plumbing,
        Suite::Curvature,
        Suite::Gradient,
        Suite::Roundtrip,
        Suite::Decay,
        Suite::Reducibility,
        Suite::Eigen,
        Suite::Kato,
        Suite::Heat,
        Suite::Variation,
        Suite::Composition,
        Suite::Degeneration,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Plumbing => "plumbing",
            Suite::Curvature => "curvature",
            Suite::Gradient => "gradient",
            Suite::Roundtrip => "roundtrip",
            Suite::Decay => "decay",
            Suite::Reducibility => "reducibility",
            Suite::Eigen => "eigen",
            Suite::Kato => "kato",
            Suite::Heat => "heat",
            Suite::Variation => "variation",
            Suite::Composition => "composition",
            Suite::Degeneration => "degeneration",
        }
    }

    /// The acceptance configuration of the suite.
    pub fn manifest(self) -> ExperimentManifest {
        suites::default_manifest(self)
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown audit suite `{s}`")))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    LessThan,
    AtLeast,
    GreaterThan,
}

impl Relation {
    fn holds(self, value: f64, tolerance: f64) -> bool {
        match self {
            Relation::AtMost => value <= tolerance,
            Relation::LessThan => value < tolerance,
            Relation::AtLeast => value >= tolerance,
            Relation::GreaterThan => value > tolerance,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::LessThan => "<",
            Relation::AtLeast => ">=",
            Relation::GreaterThan => ">",
        }
    }
}

/// One acceptance check. NaN values fail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, value: f64, relation: Relation, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value,
            relation,
            tolerance,
            pass: relation.holds(value, tolerance),
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {:.6e} {} {:.6e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.relation.symbol(),
            self.tolerance
        )?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

/// A tidy table: one observation per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub kind: PlotKind,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: impl Into<String>, kind: PlotKind, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            kind,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.columns)?;
        for r in &self.rows {
            wr.write_record(r.iter().map(|v| v.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run_id: String,
    pub manifest: ExperimentManifest,
    pub checks: Vec<Check>,
    pub series: Vec<Series>,
    pub notes: Vec<String>,
    /// Text artifacts by file name (fields, matrices).
    pub artifacts: BTreeMap<String, String>,
    /// Wall-clock seconds per stage; not part of the report.
    #[serde(skip)]
    pub timings: Vec<(String, f64)>,
}

impl RunResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn total_seconds(&self) -> f64 {
        self.timings.iter().map(|t| t.1).sum()
    }

    /// Deterministic JSON report (timings excluded).
    pub fn report_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `manifest.toml`, `report.json`, `timings.csv`, one CSV per series and the artifacts.
    pub fn persist(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("manifest.toml"), self.manifest.to_toml()?)?;
        std::fs::write(dir.join("report.json"), self.report_json()?)?;
        for s in &self.series {
            s.write_csv(std::fs::File::create(dir.join(format!("{}.csv", s.name)))?)?;
        }
        for (name, text) in &self.artifacts {
            std::fs::write(dir.join(name), text)?;
        }
        let mut wr = csv::Writer::from_path(dir.join("timings.csv"))?;
        wr.write_record(["stage", "seconds"])?;
        for (stage, secs) in &self.timings {
            wr.write_record([stage.clone(), secs.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Collects the outputs of one run.
#[derive(Debug, Default)]
pub(crate) struct Recorder {
    checks: Vec<Check>,
    series: Vec<Series>,
    notes: Vec<String>,
    artifacts: BTreeMap<String, String>,
    timings: Vec<(String, f64)>,
}

impl Recorder {
    /// Adds the check when the manifest lists a tolerance for it.
    pub(crate) fn check(
        &mut self,
        m: &ExperimentManifest,
        name: &str,
        value: f64,
        relation: Relation,
        detail: impl Into<String>,
    ) {
        if let Some(tol) = m.tolerance(name) {
            self.checks.push(Check::new(name, value, relation, tol, detail));
        }
    }

    pub(crate) fn series(&mut self, s: Series) {
        self.series.push(s);
    }

    pub(crate) fn note(&mut self, n: impl Into<String>) {
        self.notes.push(n.into());
    }

    pub(crate) fn artifact(&mut self, name: impl Into<String>, text: String) {
        self.artifacts.insert(name.into(), text);
    }

    pub(crate) fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f();
        self.timings.push((stage.into(), t.elapsed().as_secs_f64()));
        out
    }
}

/// Worker count from [`WORKERS_ENV`]; `None` leaves the pool at its default size.
pub fn worker_count() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

/// Runs the named pipeline on `manifest`. For `audit`, the manifest's `suite` selects the
/// criterion.
pub fn run(subcommand: Subcommand, manifest: &ExperimentManifest) -> Result<RunResult> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_count()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    let mut rec = Recorder::default();
    pool.install(|| suites::dispatch(subcommand, manifest, &mut rec))?;
    Ok(RunResult {
        run_id: manifest.run_id()?,
        manifest: manifest.clone(),
        checks: rec.checks,
        series: rec.series,
        notes: rec.notes,
        artifacts: rec.artifacts,
        timings: rec.timings,
    })
}

/// Runs one audit suite with its acceptance configuration.
pub fn run_suite(suite: Suite) -> Result<RunResult> {
    run(Subcommand::Audit, &suite.manifest())
}

#[cfg(test)]
mod tests;
