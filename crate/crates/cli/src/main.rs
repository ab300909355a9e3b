use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand as ClapSubcommand};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use ymlab_core::harness::{emit_plot_data, run, ExperimentManifest, PlotKind, Subcommand, Suite};

/// SU(2) Yang–Mills flow laboratory on conic-degenerating surfaces.
///
/// Each subcommand starts from its default manifest (or `--config`), applies the flags, runs,
/// prints the main table as CSV on stdout and the checks on stderr. The exit code is 0 iff
/// every enabled check passes. Worker count: the `YMLAB_WORKERS` environment variable.
#[derive(Debug, Parser)]
#[command(name = "ymlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, ClapSubcommand)]
enum Command {
    /// Plumbing parameter ε(ℓ, κ) against its ODE oracle.
    Plumb(Common),
    /// Curvature of the conic family against finite differences.
    Curvature(Common),
    /// Twist and flow to a flat connection.
    Flow(Common),
    /// λ₁(ℓ) sweeps of the adjoint Laplacian.
    Spectrum(Common),
    /// First-variation formula audits.
    Variation(Common),
    /// Leaf traces of π_αβ, or the composition check when `--gamma` is set.
    Foliate(Common),
    /// Holonomy convergence under pinching.
    Degenerate(Common),
    /// One acceptance suite.
    Audit {
        #[arg(long, value_parser = parse_suite)]
        suite: Suite,
        #[command(flatten)]
        common: Common,
    },
    /// Flow grid over ℓ × β.
    Sweep(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Manifest to start from instead of the default.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for the manifest, report, tables and artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write plot data of this kind (decay, lambda1, leaf, convergence, table) into `--out`.
    #[arg(long, value_parser = parse_plot)]
    plot: Vec<PlotKind>,
    /// Print the effective manifest and exit.
    #[arg(long)]
    print_manifest: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    topology: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    kappa: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    ell: Option<Vec<f64>>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    beta: Option<Vec<f64>>,
    #[arg(long)]
    gamma: Option<f64>,
}

fn parse_suite(s: &str) -> std::result::Result<Suite, String> {
    s.parse().map_err(|e: ymlab_core::Error| e.to_string())
}

fn parse_plot(s: &str) -> std::result::Result<PlotKind, String> {
    s.parse().map_err(|e: ymlab_core::Error| e.to_string())
}

impl Common {
    fn manifest(&self, sub: Subcommand, suite: Option<Suite>) -> Result<ExperimentManifest> {
        let mut m = match (&self.config, suite) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                ExperimentManifest::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            (None, Some(s)) => s.manifest(),
            (None, None) => sub.default_manifest(),
        };
        if let Some(s) = suite {
            m.suite = Some(s.name().into());
        }
        if let Some(v) = self.seed {
            m.seed = v;
        }
        if let Some(v) = &self.topology {
            m.surface.topology = v.clone();
        }
        if let Some(v) = self.n {
            m.surface.n = v;
        }
        if let Some(v) = self.nx {
            m.surface.nx = v;
        }
        if let Some(v) = &self.kappa {
            m.metric.kappa = v.clone();
        }
        if let Some(v) = &self.ell {
            m.metric.ell = v.clone();
        }
        if self.alpha.is_some() || self.beta.is_some() || self.gamma.is_some() {
            let Some(t) = m.twist.as_mut() else {
                bail!("this manifest has no [twist] section");
            };
            if let Some(a) = self.alpha {
                t.alpha = a;
                for r in m.representation.iter_mut().filter(|r| r.kind != "genus2_accidentally_reducible") {
                    r.alpha = a;
                }
            }
            if let Some(b) = &self.beta {
                t.beta = b.clone();
            }
            if self.gamma.is_some() {
                t.gamma = self.gamma;
            }
        }
        Ok(m)
    }
}

fn execute(sub: Subcommand, suite: Option<Suite>, c: &Common) -> Result<bool> {
    let m = c.manifest(sub, suite)?;
    if c.print_manifest {
        print!("{}", m.to_toml()?);
        return Ok(true);
    }
    if !c.plot.is_empty() && c.out.is_none() {
        bail!("--plot needs --out");
    }
    let r = run(sub, &m).with_context(|| format!("{sub} failed"))?;
    let mut err = std::io::stderr().lock();
    writeln!(err, "run {} ({sub}{})", r.run_id, m.suite.as_deref().map(|s| format!(" {s}")).unwrap_or_default())?;
    for n in &r.notes {
        writeln!(err, "note: {n}")?;
    }
    for c in &r.checks {
        writeln!(err, "{c}")?;
    }
    writeln!(err, "{:.2}s", r.total_seconds())?;
    if let Some(s) = r.series.first() {
        s.write_csv(std::io::stdout().lock())?;
    }
    if let Some(dir) = &c.out {
        r.persist(dir).with_context(|| format!("writing {}", dir.display()))?;
        for &kind in &c.plot {
            emit_plot_data(&r, kind, &dir.join("plots"))?;
        }
    }
    Ok(r.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Plumb(c) => execute(Subcommand::Plumb, None, c),
        Command::Curvature(c) => execute(Subcommand::Curvature, None, c),
        Command::Flow(c) => execute(Subcommand::Flow, None, c),
        Command::Spectrum(c) => execute(Subcommand::Spectrum, None, c),
        Command::Variation(c) => execute(Subcommand::Variation, None, c),
        Command::Foliate(c) => execute(Subcommand::Foliate, None, c),
        Command::Degenerate(c) => execute(Subcommand::Degenerate, None, c),
        Command::Audit { suite, common } => execute(Subcommand::Audit, Some(*suite), common),
        Command::Sweep(c) => execute(Subcommand::Sweep, None, c),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
