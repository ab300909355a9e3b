use super::{RunResult, Series};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    /// `(t, sup_f, fit)`.
    Decay,
    /// `(ell, lambda1, reducible_flag)`.
    Lambda1,
    /// `(beta, trace_1, …, trace_m)`.
    Leaf,
    /// Error or distance against a refinement or degeneration parameter.
    Convergence,
    /// Any other table.
    Table,
}

impl PlotKind {
    pub const ALL: [PlotKind; 5] = [
        PlotKind::Decay,
        PlotKind::Lambda1,
        PlotKind::Leaf,
        PlotKind::Convergence,
        PlotKind::Table,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::Decay => "decay",
            PlotKind::Lambda1 => "lambda1",
            PlotKind::Leaf => "leaf",
            PlotKind::Convergence => "convergence",
            PlotKind::Table => "table",
        }
    }

    /// Whether `columns` follows the schema of the kind.
    pub fn accepts(self, columns: &[String]) -> bool {
        let fixed = |want: &[&str]| columns.len() == want.len() && columns.iter().zip(want).all(|(a, b)| a == b);
        match self {
            PlotKind::Decay => fixed(&["t", "sup_f", "fit"]),
            PlotKind::Lambda1 => fixed(&["ell", "lambda1", "reducible_flag"]),
            PlotKind::Leaf => {
                columns.len() >= 2
                    && columns[0] == "beta"
                    && columns[1..].iter().enumerate().all(|(k, c)| *c == format!("trace_{}", k + 1))
            }
            PlotKind::Convergence | PlotKind::Table => !columns.is_empty(),
        }
    }
}

impl FromStr for PlotKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown plot kind `{s}`")))
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Writes every series of `kind` as `<dir>/<series name>.csv` and returns the paths.
pub fn emit_plot_data(result: &RunResult, kind: PlotKind, dir: &Path) -> Result<Vec<PathBuf>> {
    let series: Vec<&Series> = result.series.iter().filter(|s| s.kind == kind).collect();
    if series.is_empty() {
        return Err(Error::MissingSeries(kind.name().into()));
    }
    std::fs::create_dir_all(dir)?;
    series
        .into_iter()
        .map(|s| {
            if !kind.accepts(&s.columns) {
                return Err(Error::Config(format!(
                    "series `{}` does not follow the {kind} schema: {:?}",
                    s.name, s.columns
                )));
            }
            let path = dir.join(format!("{}.csv", s.name));
            s.write_csv(std::fs::File::create(&path)?)?;
            Ok(path)
        })
        .collect()
}
