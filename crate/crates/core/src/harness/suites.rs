use super::manifest::{ExperimentManifest, MetricSection, RepSection, SurfaceSection, TwistSection};
use super::{PlotKind, Recorder, Relation, Series, Subcommand, Suite};
use crate::error::{Error, Result};
use crate::field::{accidental_reducibility, connection_from_representation, LinkField};
use crate::flow::{decay_fit, linear_fit, FlowDiagnostics, YmProblem};
use crate::foliation::{
    composition_check, degeneration_experiment, leaf_sweep, pi_ab_run, FoliationPoint, PiRun,
};
use crate::geom::{build_surface, metric_for, ConicCylinder, PlumbingMap, SurfaceComplex};
use crate::spectral::audit::{fit_product_constant, growth_audit, kato_and_key_estimate_check, product_bound_check};
use crate::spectral::sobolev::SobolevOptions;
use crate::spectral::{
    assemble_laplacian, band_limited, eigensolve, estimate_sobolev, heat_evolve, lambda1_sweep, Boundary, Bundle,
    SobolevMode,
};
use crate::su2::{mat_add, mat_inv, mat_mul, mat_norm, mat_scale, mat_sub, pauli, Alg, Mat2, Su2};
use crate::variation::{
    first_variation, frame_twist_derivative, gauge_action_01, harmonic_pairing, ChartConnection, Grid2, QcMap,
    VariationInput,
};
use num_complex::Complex64 as C;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

const GENUS2: &str = "genus2_separating_pinch";
const PUNCTURED_TORUS: &str = "one_holed_torus_punctured";
const DECAY_ROWS: usize = 400;
const REP_TOL: f64 = 1e-8;

fn metric(kappa: &[f64], ell: &[f64]) -> MetricSection {
    MetricSection {
        kappa: kappa.to_vec(),
        ell: ell.to_vec(),
    }
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| ((lo + k as f64 * step) * 1e6).round() / 1e6).collect()
}

fn accidentally_reducible_rep() -> RepSection {
    RepSection::genus2_accidentally_reducible([1.5, 1.4, 1.3, -1.45], [1.0, 0.2, 0.0])
}

pub(super) fn default_manifest(suite: Suite) -> ExperimentManifest {
    let torus = |n| SurfaceSection::new("torus", n, 0);
    let mut m = match suite {
        Suite::Plumbing => ExperimentManifest::new("audit", torus(4), metric(&[0.3, 0.5, 0.9, 1.0], &grid(0.01, 0.74, 0.01)))
            .with_tolerances(&[("epsilon_ode", 1e-8), ("epsilon_upper_bound", 0.0)]),
        Suite::Curvature => {
            let mut ells = grid(0.05, 1.0, 0.05);
            ells.reverse();
            let mut m = ExperimentManifest::new("audit", torus(4), metric(&[1.0], &ells))
                .with_tolerances(&[("curvature_order", 1.9), ("ricci_sup_times_ell", 1.0)]);
            m.surface.levels = vec![128, 256];
            m
        }
        Suite::Gradient => {
            let mut m = ExperimentManifest::new("audit", torus(16), metric(&[1.0], &[1.0]))
                .with_tolerances(&[("gradient_rel_error", 1e-6)]);
            m.spectrum.samples = 20;
            m
        }
        Suite::Roundtrip => {
            let mut m = ExperimentManifest::new("audit", SurfaceSection::new(PUNCTURED_TORUS, 32, 0), metric(&[1.0], &[1.0]))
                .with_tolerances(&[("sup_f", 1e-6), ("puncture_trace", 1e-3), ("ym_increase", 1e-12)]);
            m.representation = vec![RepSection::punctured_torus(0.3, 1.2, 0.4)];
            m.twist = Some(TwistSection {
                alpha: 0.3,
                beta: vec![0.2],
                gamma: None,
            });
            m
        }
        Suite::Decay => {
            let mut m = ExperimentManifest::new("audit", SurfaceSection::new(GENUS2, 16, 16), metric(&[0.5], &[0.8, 0.4, 0.2]))
                .with_tolerances(&[("decay_r2", 0.99), ("decay_rate", 0.0), ("decay_rate_spread", 3.0)]);
            m.representation = vec![RepSection::genus2_generic(0.3, 1)];
            m.twist = Some(TwistSection {
                alpha: 0.3,
                beta: vec![0.2],
                gamma: None,
            });
            m.flow.record_every = 1;
            m.flow.tol_flat = 1e-8;
            m
        }
        Suite::Reducibility => {
            let mut m = ExperimentManifest::new("audit", SurfaceSection::new(GENUS2, 16, 16), metric(&[0.5], &[0.4, 0.2, 0.1, 0.05]))
                .with_tolerances(&[("lambda1_floor", 1e-3), ("reducible_decrease", 0.0), ("reducible_ratio", 0.2)]);
            m.representation = vec![RepSection::genus2_generic(0.3, 1), accidentally_reducible_rep()];
            m
        }
        Suite::Eigen => {
            let mut m = ExperimentManifest::new("audit", SurfaceSection::new(GENUS2, 16, 8), metric(&[0.5], &[0.8, 0.4, 0.2]))
                .with_tolerances(&[
                    ("flat_torus_order", 1.9),
                    ("ad_triple", 1e-9),
                    ("growth_constant_ratio", 2.0),
                    ("weyl_constant", 0.0),
                ]);
            m.surface.levels = vec![16, 32];
            m.representation = vec![RepSection::genus2_generic(0.0, 1)];
            m
        }
        Suite::Kato => {
            let mut m = ExperimentManifest::new("audit", SurfaceSection::new(GENUS2, 16, 8), metric(&[0.5], &[0.4]))
                .with_tolerances(&[("key_estimate_margin", 0.0), ("product_bound_margin", 0.0)]);
            m.representation = vec![RepSection::genus2_generic(0.3, 1)];
            m.spectrum.samples = 100;
            m.spectrum.modes = 30;
            m
        }
        Suite::Heat => {
            let mut m = ExperimentManifest::new("audit", SurfaceSection::new(GENUS2, 16, 8), metric(&[0.5], &[0.8, 0.2]))
                .with_tolerances(&[("heat_sup_ratio", 2.0)]);
            m.representation = vec![RepSection::genus2_generic(0.0, 1)];
            m
        }
        Suite::Variation => ExperimentManifest::new("audit", torus(16), metric(&[1.0], &[1.0])).with_tolerances(&[
            ("variation_order", 1.9),
            ("harmonic_pairing", 1e-8),
            ("frame_twist", 1e-8),
        ]),
        Suite::Composition => {
            let mut m = ExperimentManifest::new("audit", SurfaceSection::new(PUNCTURED_TORUS, 32, 0), metric(&[1.0], &[1.0]))
                .with_tolerances(&[("composition_reference", 1e-3), ("composition_refinement", 0.0)]);
            m.surface.levels = vec![16, 32];
            m.representation = vec![RepSection::punctured_torus(0.35, 1.2, 0.4)];
            m.twist = Some(TwistSection {
                alpha: 0.35,
                beta: vec![0.3],
                gamma: Some(0.25),
            });
            m
        }
        Suite::Degeneration => {
            let mut m = ExperimentManifest::new("audit", SurfaceSection::new(GENUS2, 16, 16), metric(&[0.5], &[0.4, 0.2, 0.1, 0.05]))
                .with_tolerances(&[
                    ("degeneration_decrease", 0.0),
                    ("degeneration_final_distance", 0.02),
                    ("transverse_holonomy", 0.05),
                    ("reducible_refused", 1.0),
                ]);
            m.representation = vec![RepSection::genus2_generic(0.3, 1), accidentally_reducible_rep()];
            m.twist = Some(TwistSection {
                alpha: 0.3,
                beta: vec![0.25],
                gamma: None,
            });
            m
        }
    };
    m.suite = Some(suite.name().into());
    m.seed = 7;
    m
}

pub(super) fn dispatch(cmd: Subcommand, m: &ExperimentManifest, rec: &mut Recorder) -> Result<()> {
    match cmd {
        Subcommand::Plumb => plumbing(m, rec),
        Subcommand::Curvature => curvature(m, rec),
        Subcommand::Flow => flow(m, rec),
        Subcommand::Spectrum => spectrum(m, rec),
        Subcommand::Variation => variation(m, rec),
        Subcommand::Foliate => foliate(m, rec),
        Subcommand::Degenerate => degeneration(m, rec),
        Subcommand::Sweep => sweep(m, rec),
        Subcommand::Audit => {
            let name = m
                .suite
                .as_deref()
                .ok_or_else(|| Error::Config("audit needs a suite".into()))?;
            match name.parse::<Suite>()? {
                Suite::Plumbing => plumbing(m, rec),
                Suite::Curvature => curvature(m, rec),
                Suite::Gradient => gradient(m, rec),
                Suite::Roundtrip | Suite::Decay => flow(m, rec),
                Suite::Reducibility => spectrum(m, rec),
                Suite::Eigen => eigen(m, rec),
                Suite::Kato => kato(m, rec),
                Suite::Heat => heat(m, rec),
                Suite::Variation => variation(m, rec),
                Suite::Composition => composition(m, rec),
                Suite::Degeneration => degeneration(m, rec),
            }
        }
    }
}

fn surface(m: &ExperimentManifest) -> Result<SurfaceComplex> {
    build_surface(m.surface.spec()?)
}

fn max_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::NEG_INFINITY, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) })
}

fn min_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::INFINITY, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.min(b) })
}

/// `ε` by integrating `d log f/dx = 1/(κ sqrt(ℓ + (1−ℓ)x²))` from `x = 1` down to `0` with RK4.
pub(crate) fn epsilon_by_ode(ell: f64, kappa: f64, steps: usize) -> f64 {
    let rhs = |x: f64| 1.0 / (kappa * (ell + (1.0 - ell) * x * x).sqrt());
    let h = -1.0 / steps as f64;
    let mut x = 1.0;
    let mut y = 0.0;
    for _ in 0..steps {
        let k1 = rhs(x);
        let k2 = rhs(x + 0.5 * h);
        let k4 = rhs(x + h);
        y += h / 6.0 * (k1 + 4.0 * k2 + k4);
        x += h;
    }
    (2.0 * y).exp()
}

fn plumbing(m: &ExperimentManifest, rec: &mut Recorder) -> Result<()> {
    let mut table = Series::new(
        "plumbing",
        PlotKind::Table,
        &["kappa", "ell", "epsilon", "epsilon_ode", "abs_diff", "upper_bound", "lower_ok", "upper_ok"],
    );
    let mut notes = Vec::new();
    rec.timed("plumbing", || {
        for &kappa in &m.metric.kappa {
            let mut lower_edge = None;
            let mut lower_broken = false;
            for &ell in &m.metric.ell {
                let p = PlumbingMap::new(kappa, ell)?;
                let ode = if ell > 0.0 { epsilon_by_ode(ell, kappa, 20_000) } else { 0.0 };
                let (lower, upper) = p.epsilon_bounds();
                if lower && !lower_broken {
                    lower_edge = Some(ell);
                } else if !lower {
                    lower_broken = true;
                }
                table.push(vec![
                    kappa,
                    ell,
                    p.epsilon,
                    ode,
                    (p.epsilon - ode).abs(),
                    ell.powf(1.0 / kappa),
                    lower as u8 as f64,
                    upper as u8 as f64,
                ]);
            }
            notes.push(match lower_edge {
                Some(e) => format!("kappa {kappa}: lower plumbing bound holds on the grid up to ell = {e}"),
                None => format!("kappa {kappa}: lower plumbing bound fails at the first grid point"),
            });
        }
        Ok(())
    })?;
    for n in notes {
        rec.note(n);
    }
    let diff = max_of(table.column("abs_diff").unwrap());
    rec.check(m, "epsilon_ode", diff, Relation::AtMost, "max |closed form - ODE|");
    let excess = max_of(table.rows.iter().filter(|r| r[1] <= 0.75).map(|r| r[2] - r[5]));
    rec.check(m, "epsilon_upper_bound", excess, Relation::AtMost, "max epsilon - ell^(1/kappa) over ell <= 3/4");
    rec.series(table);
    Ok(())
}

fn curvature(m: &ExperimentManifest, rec: &mut Recorder) -> Result<()> {
    let kappa = m.kappa()?;
    if m.surface.levels.len() < 2 {
        return Err(Error::Config("curvature needs two refinement levels".into()));
    }
    let mut conv = Series::new("curvature_convergence", PlotKind::Convergence, &["ell", "cells", "h", "max_error"]);
    let mut table = Series::new("curvature", PlotKind::Table, &["ell", "ricci_sup", "grid_sup", "inverse_ell"]);
    let mut orders = Vec::new();
    rec.timed("curvature", || {
        for &ell in &m.metric.ell {
            let mut errs = Vec::new();
            for &cells in &m.surface.levels {
                let c = ConicCylinder::new(kappa, ell, cells, cells)?;
                let h = 2.0 / cells as f64;
                let mut err: f64 = 0.0;
                for i in 1..cells {
                    let x = -1.0 + i as f64 * h;
                    let k_fd = -(c.rho(x + h) - 2.0 * c.rho(x) + c.rho(x - h)) / (h * h) / c.rho(x);
                    err = err.max((k_fd - c.ricci_eigenvalue(x)?).abs());
                }
                conv.push(vec![ell, cells as f64, h, err]);
                errs.push(err);
            }
            if ell < 1.0 {
                orders.extend(errs.windows(2).map(|w| (w[0] / w[1]).log2()));
            }
            let c = ConicCylinder::new(kappa, ell, 4, 4)?;
            let fine = *m.surface.levels.last().unwrap();
            let grid_sup = max_of((0..=fine).map(|i| {
                c.ricci_eigenvalue(-1.0 + 2.0 * i as f64 / fine as f64).map(f64::abs).unwrap_or(f64::NAN)
            }));
            table.push(vec![ell, c.ricci_sup()?, grid_sup, 1.0 / ell]);
        }
        Ok(())
    })?;
    rec.check(m, "curvature_order", min_of(orders), Relation::AtLeast, "min observed order over ell < 1");
    let scaled = max_of(table.rows.iter().map(|r| r[0] * r[1].max(r[2])));
    rec.check(m, "ricci_sup_times_ell", scaled, Relation::AtMost, "max over ell of ell * sup|K|");
    rec.series(conv);
    rec.series(table);
    Ok(())
}

fn perturbed(f: &LinkField, dir: &[Alg], h: f64) -> LinkField {
    LinkField {
        links: f.links.iter().zip(dir).map(|(&u, d)| Su2::exp(d.scale(h)) * u).collect(),
        puncture_weights: f.puncture_weights.clone(),
    }
}

fn gradient(m: &ExperimentManifest, rec: &mut Recorder) -> Result<()> {
    let s = surface(m)?;
    let g = metric_for(&s, m.metric.ell[0], m.kappa()?)?;
    let f = LinkField::random_near_identity(&s, 0.5, m.seed);
    let p = YmProblem::new(&s, &g, &f, &[]);
    let mut table = Series::new("gradient", PlotKind::Table, &["direction", "analytic", "central_difference", "rel_error"]);
    rec.timed("gradient", || {
        let ev = p.evaluate(&f)?;
        let mut rng = ChaCha8Rng::seed_from_u64(m.seed);
        let h = 1e-5;
        for k in 0..m.spectrum.samples {
            let dir: Vec<Alg> = (0..s.edges.len()).map(|_| Alg::random(&mut rng)).collect();
            let fd = (p.action(&perturbed(&f, &dir, h))? - p.action(&perturbed(&f, &dir, -h))?) / (2.0 * h);
            let an: f64 = ev.derivative.iter().zip(&dir).map(|(a, b)| a.dot(b)).sum();
            table.push(vec![k as f64, an, fd, (fd - an).abs() / an.abs()]);
        }
        Ok(())
    })?;
    let worst = max_of(table.column("rel_error").unwrap());
    rec.check(m, "gradient_rel_error", worst, Relation::AtMost, format!("{} random directions", m.spectrum.samples));
    rec.series(table);
    Ok(())
}

fn point(m: &ExperimentManifest, rep: usize, ell: f64) -> Result<FoliationPoint> {
    let t = m.twist()?;
    let p = FoliationPoint::new(m.rep(rep)?, ell, m.kappa()?)?;
    if (p.alpha - t.alpha).abs() > 1e-12 {
        return Err(Error::Config(format!(
            "twist.alpha = {} but the representation carries weight {}",
            t.alpha, p.alpha
        )));
    }
    Ok(p)
}

fn decay_series(name: String, diag: &FlowDiagnostics, rate: f64, intercept: f64) -> Series {
    let mut s = Series::new(name, PlotKind::Decay, &["t", "sup_f", "fit"]);
    let stride = diag.t.len().div_ceil(DECAY_ROWS).max(1);
    for k in (0..diag.t.len()).step_by(stride).chain(std::iter::once(diag.t.len() - 1)) {
        s.push(vec![diag.t[k], diag.sup_f[k], (intercept - rate * diag.t[k]).exp()]);
    }
    s.rows.dedup();
    s
}

/// `(rate, intercept, R²)` of the tail fit.
fn tail_fit(diag: &FlowDiagnostics, tail: f64) -> Result<(f64, f64, f64)> {
    let (rate, r2) = decay_fit(diag, tail)?;
    let n = diag.t.len();
    let start = n - ((n as f64 * tail).round() as usize).min(n);
    let y: Vec<f64> = diag.sup_f[start..].iter().map(|v| v.ln()).collect();
    let (_, intercept, _) = linear_fit(&diag.t[start..], &y)?;
    Ok((rate, intercept, r2))
}

fn flow(m: &ExperimentManifest, rec: &mut Recorder) -> Result<()> {
    let s = surface(m)?;
    let beta = *m.twist()?.beta.first().ok_or_else(|| Error::Config("twist.beta is empty".into()))?;
    let cfg = m.flow.config();
    let runs: Vec<PiRun> = rec.timed("flow", || {
        m.metric
            .ell
            .par_iter()
            .map(|&ell| pi_ab_run(&point(m, 0, ell)?, beta, &s, &cfg))
            .collect::<Result<Vec<_>>>()
    })?;
    let target = 2.0 * (2.0 * PI * beta).cos();
    let mut table = Series::new(
        "flow",
        PlotKind::Table,
        &["ell", "flow_time", "steps", "final_sup_f", "final_ym", "puncture_trace", "max_increase", "rate", "r2"],
    );
    let mut fits = Vec::new();
    for (&ell, run) in m.metric.ell.iter().zip(&runs) {
        let d = &run.diagnostics;
        let fit = tail_fit(d, m.flow.tail_fraction).ok();
        let (rate, intercept, r2) = fit.unwrap_or((f64::NAN, f64::NAN, f64::NAN));
        fits.push((rate, r2));
        table.push(vec![
            ell,
            *d.t.last().unwrap(),
            d.steps as f64,
            *d.sup_f.last().unwrap(),
            *d.ym.last().unwrap(),
            run.rep.get("c_p")?.trace(),
            d.ym.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max),
            rate,
            r2,
        ]);
        if fit.is_some() {
            rec.series(decay_series(format!("decay_ell{ell}"), d, rate, intercept));
        }
        let mut csv = Vec::new();
        run.field.write_csv(&mut csv)?;
        rec.artifact(format!("field_ell{ell}.csv"), String::from_utf8(csv).map_err(|e| Error::Io(e.to_string()))?);
    }
    rec.check(m, "sup_f", max_of(table.column("final_sup_f").unwrap()), Relation::AtMost, "final sup|*F|");
    let trace_err = max_of(table.column("puncture_trace").unwrap().iter().map(|t| (t - target).abs()));
    rec.check(m, "puncture_trace", trace_err, Relation::AtMost, format!("|tr hol(c_p) - {target:.6}|"));
    rec.check(m, "ym_increase", max_of(table.column("max_increase").unwrap()), Relation::AtMost, "largest YM increase between records");
    rec.check(m, "decay_r2", min_of(fits.iter().map(|f| f.1)), Relation::AtLeast, "min R^2 of the log-linear tail fit");
    rec.check(m, "decay_rate", min_of(fits.iter().map(|f| f.0)), Relation::GreaterThan, "min fitted rate");
    let spread = max_of(fits.iter().map(|f| f.0)) / min_of(fits.iter().map(|f| f.0));
    rec.check(m, "decay_rate_spread", spread, Relation::AtMost, "max rate / min rate across ell");
    rec.series(table);
    Ok(())
}

fn spectrum(m: &ExperimentManifest, rec: &mut Recorder) -> Result<()> {
    let spec = m.surface.spec()?;
    let s = build_surface(spec)?;
    let kappa = m.kappa()?;
    let mut floor = f64::INFINITY;
    let mut decrease = f64::NEG_INFINITY;
    let mut ratio = f64::NEG_INFINITY;
    let mut reducible_seen = false;
    let mut generic_seen = false;
    for (k, rs) in m.representation.iter().enumerate() {
        let rep = rs.build()?;
        let reducible = accidental_reducibility(&rep, &s, REP_TOL)?.1;
        let sweep = rec.timed(&format!("lambda1_rep{k}"), || lambda1_sweep(&rep, spec, kappa, &m.metric.ell))?;
        let mut series = Series::new(format!("lambda1_rep{k}"), PlotKind::Lambda1, &["ell", "lambda1", "reducible_flag"]);
        for p in &sweep {
            series.push(vec![p.ell, p.lambda1, reducible as u8 as f64]);
        }
        let lam: Vec<f64> = sweep.iter().map(|p| p.lambda1).collect();
        if reducible {
            reducible_seen = true;
            decrease = decrease.max(max_of(lam.windows(2).map(|w| w[1] - w[0])));
            ratio = ratio.max(lam[lam.len() - 1] / lam[0]);
        } else {
            generic_seen = true;
            floor = floor.min(min_of(lam.iter().copied()));
        }
        rec.series(series);
    }
    if generic_seen {
        rec.check(m, "lambda1_floor", floor, Relation::AtLeast, "min lambda_1 of the non-reducible reps");
    }
    if reducible_seen {
        rec.check(m, "reducible_decrease", decrease, Relation::LessThan, "max lambda_1(next ell) - lambda_1(ell)");
        rec.check(m, "reducible_ratio", ratio, Relation::LessThan, "lambda_1(last ell) / lambda_1(first ell)");
    }
    Ok(())
}

fn flat_torus_error(n: usize, count: usize) -> Result<f64> {
    let s = build_surface(SurfaceSection::new("torus", n, 0).spec()?)?;
    let g = metric_for(&s, 1.0, 1.0)?;
    let lap = assemble_laplacian(&LinkField::identity(&s), &s, &g, Bundle::Functions, Boundary::Closed)?;
    let sp = eigensolve(&lap, count)?;
    let mut exact: Vec<f64> = (-4i32..=4)
        .flat_map(|a| (-4i32..=4).map(move |b| 4.0 * PI * PI * (a * a + b * b) as f64))
        .collect();
    exact.sort_by(f64::total_cmp);
    Ok(max_of(sp.values.iter().zip(&exact).map(|(a, b)| (a - b).abs())))
}

fn eigen(m: &ExperimentManifest, rec: &mut Recorder) -> Result<()> {
    let levels = &m.surface.levels;
    if levels.len() < 2 {
        return Err(Error::Config("eigen audit needs two refinement levels".into()));
    }
    let mut conv = Series::new("flat_torus_convergence", PlotKind::Convergence, &["n", "max_error"]);
    let errs = rec.timed("flat_torus", || levels.iter().map(|&n| flat_torus_error(n, 13)).collect::<Result<Vec<_>>>())?;
    for (&n, &e) in levels.iter().zip(&errs) {
        conv.push(vec![n as f64, e]);
    }
    let order = min_of(errs.windows(2).map(|w| (w[0] / w[1]).log2()));
    rec.check(m, "flat_torus_order", order, Relation::AtLeast, "observed order of the lowest 13 eigenvalues");
    rec.series(conv);

    let triple = rec.timed("ad_triple", || {
        let s = build_surface(SurfaceSection::new("torus", levels[0], 0).spec()?)?;
        let g = metric_for(&s, 1.0, 1.0)?;
        let f = LinkField::identity(&s);
        let fun = eigensolve(&assemble_laplacian(&f, &s, &g, Bundle::Functions, Boundary::Closed)?, 5)?;
        let ad = eigensolve(&assemble_laplacian(&f, &s, &g, Bundle::AdE0, Boundary::Closed)?, 15)?;
        Ok(max_of(ad.values.iter().enumerate().map(|(k, v)| (v - fun.values[k / 3]).abs() / v.max(1.0))))
    })?;
    rec.check(m, "ad_triple", triple, Relation::AtMost, "max relative gap between adE0 and tripled function spectrum");

    let kappa = m.kappa()?;
    let rep = m.rep(0)?;
    let [k0, k1] = m.spectrum.k_range;
    let mut growth = Series::new("growth", PlotKind::Convergence, &["n", "ell", "sobolev_s1", "c_min", "c_prime"]);
    rec.timed("growth", || {
        for &n in levels {
            let s = build_surface(m.surface.spec_at(n)?)?;
            let f = connection_from_representation(&rep, &s)?;
            let cells: Vec<Vec<f64>> = m
                .metric
                .ell
                .par_iter()
                .map(|&ell| {
                    let g = metric_for(&s, ell, kappa)?;
                    let sob = estimate_sobolev(&s, &g, &g.face_active, SobolevMode::S1, &SobolevOptions::default())?;
                    let lap = assemble_laplacian(&f, &s, &g, Bundle::AdE0, Boundary::Closed)?;
                    let sp = eigensolve(&lap, m.spectrum.modes.max(k1))?;
                    let r = growth_audit(&sp.values, lap.rank(), g.total_area, sob.value, false, (k0, k1));
                    Ok(vec![n as f64, ell, sob.value, r.c_min, r.c_prime])
                })
                .collect::<Result<_>>()?;
            for c in cells {
                growth.push(c);
            }
        }
        Ok(())
    })?;
    let ratio = max_of(m.metric.ell.iter().map(|&ell| {
        let c: Vec<f64> = growth.rows.iter().filter(|r| r[1] == ell).map(|r| r[3]).collect();
        max_of(c.iter().copied()) / min_of(c.iter().copied())
    }));
    rec.check(m, "growth_constant_ratio", ratio, Relation::AtMost, "max over ell of C(fine)/C(coarse) spread");
    rec.check(m, "weyl_constant", min_of(growth.column("c_prime").unwrap()), Relation::GreaterThan, format!("min C' over k in [{k0}, {k1}]"));
    rec.series(growth);
    Ok(())
}

fn kato(m: &ExperimentManifest, rec: &mut Recorder) -> Result<()> {
    let s = surface(m)?;
    let g = metric_for(&s, m.metric.ell[0], m.kappa()?)?;
    let f = connection_from_representation(&m.rep(0)?, &s)?;
    let mut table = Series::new("key_estimate", PlotKind::Table, &["section", "alpha", "lhs", "rhs", "slack", "margin"]);
    rec.timed("key_estimate", || {
        let lap = assemble_laplacian(&f, &s, &g, Bundle::AdE0, Boundary::Closed)?;
        let sp = eigensolve(&lap, m.spectrum.modes)?;
        let sections = band_limited(&lap, &sp, m.spectrum.modes, m.spectrum.samples, m.seed);
        for (k, phi) in sections.iter().enumerate() {
            for &alpha in &m.spectrum.exponents {
                let r = kato_and_key_estimate_check(&lap, &f, &s, &g, phi, alpha);
                table.push(vec![k as f64, alpha, r.lhs, r.rhs, r.slack, (r.lhs - r.slack * r.rhs) / r.rhs.abs().max(1e-300)]);
            }
        }
        Ok(())
    })?;
    rec.check(m, "key_estimate_margin", min_of(table.column("margin").unwrap()), Relation::AtLeast, format!("min (lhs - slack rhs)/rhs over {} sections", m.spectrum.samples));
    rec.series(table);

    let beta = m.spectrum.product_beta;
    let terms = 60;
    let fit_grid: Vec<f64> = (-8..=16).map(|k| 10f64.powi(k)).collect();
    let log_c = fit_product_constant(beta, terms, &fit_grid);
    let mut prod = Series::new("product_bound", PlotKind::Table, &["gamma", "log_lhs", "log_rhs"]);
    for &gamma in &m.spectrum.product_gamma {
        let b = product_bound_check(gamma, beta, terms, log_c);
        prod.push(vec![gamma, b.log_lhs, b.log_rhs]);
    }
    let margin = min_of(prod.rows.iter().map(|r| r[2] - r[1]));
    rec.check(m, "product_bound_margin", margin, Relation::AtLeast, format!("min log rhs - log lhs, beta = {beta}, ln C = {log_c:.6}"));
    rec.series(prod);
    Ok(())
}

fn heat(m: &ExperimentManifest, rec: &mut Recorder) -> Result<()> {
    let s = surface(m)?;
    let kappa = m.kappa()?;
    let f = connection_from_representation(&m.rep(0)?, &s)?;
    let sp = &m.spectrum;
    let rows: Vec<Vec<Vec<f64>>> = rec.timed("heat", || {
        m.metric
            .ell
            .par_iter()
            .map(|&ell| {
                let g = metric_for(&s, ell, kappa)?;
                let lap = assemble_laplacian(&f, &s, &g, Bundle::AdE0, Boundary::Closed)?;
                let spec = eigensolve(&lap, sp.modes)?;
                band_limited(&lap, &spec, sp.modes, sp.samples, m.seed)
                    .iter()
                    .enumerate()
                    .map(|(k, v0)| {
                        let h = heat_evolve(&lap, &spec, v0, sp.heat_time, 1e-6)?;
                        Ok(vec![ell, k as f64, h.sup / lap.norm(v0), h.tail_bound])
                    })
                    .collect()
            })
            .collect()
    })?;
    let mut table = Series::new("heat", PlotKind::Table, &["ell", "sample", "sup_ratio", "tail_bound"]);
    let mut per_ell = Vec::new();
    for cell in rows {
        per_ell.push(max_of(cell.iter().map(|r| r[2])));
        for r in cell {
            table.push(r);
        }
    }
    let spread = max_of(per_ell.iter().copied()) / min_of(per_ell.iter().copied());
    rec.check(m, "heat_sup_ratio", spread, Relation::LessThan, format!("spread across ell of max sup|v(T)|/|v0|_2, T = {}", sp.heat_time));
    rec.series(table);
    Ok(())
}

const TP: f64 = 2.0 * PI;

fn su2_sample(grid: &Grid2, phase: f64) -> Vec<Mat2> {
    grid.sample_mat(|z| {
        Alg::new(
            0.3 * (TP * z.re + phase).sin(),
            0.2 * (TP * z.im).cos(),
            0.25 * (TP * (z.re - z.im) + phase).cos(),
        )
        .to_matrix()
    })
}

fn hermitian_sample(grid: &Grid2) -> Vec<Mat2> {
    grid.sample_mat(|z| {
        let f = 0.4 * (TP * z.re).sin() + 0.2 * (TP * z.im).cos();
        [[C::new(f.exp(), 0.0), C::new(0.0, 0.0)], [C::new(0.0, 0.0), C::new((-f).exp(), 0.0)]]
    })
}

fn gl_sample(grid: &Grid2, seed: f64) -> Vec<Mat2> {
    let p = pauli();
    grid.sample_mat(|z| {
        let a = C::new((TP * z.re + seed).sin(), 0.5 * (TP * z.im).cos());
        let b = C::new(0.3 * (TP * (z.re + z.im)).cos(), seed.sin());
        mat_add(&mat_scale(&p[0], a), &mat_scale(&p[2], b))
    })
}

fn add_scaled(a: &[Mat2], b: &[Mat2], s: f64) -> Vec<Mat2> {
    a.iter().zip(b).map(|(x, y)| mat_add(x, &mat_scale(y, C::new(s, 0.0)))).collect()
}

fn max_diff(a: &[Mat2], b: &[Mat2]) -> f64 {
    max_of(a.iter().zip(b).map(|(x, y)| mat_norm(&mat_sub(x, y))))
}

/// Central-difference error of the first-variation formula along
/// `(A + εȦ, g + εġ + ε²g̈, εν)`.
fn variation_fd_errors(n: usize, steps: &[f64]) -> Result<Vec<f64>> {
    let grid = Grid2::periodic(n);
    let a_xy = (su2_sample(&grid, 0.1), su2_sample(&grid, 0.7));
    let adot_xy = (su2_sample(&grid, 1.3), su2_sample(&grid, 2.1));
    let g = hermitian_sample(&grid);
    let gdot = gl_sample(&grid, 0.4);
    let gddot = gl_sample(&grid, 1.9);
    let nu = C::new(0.35, -0.6);
    let formula = first_variation(&VariationInput {
        grid: &grid,
        a: &ChartConnection::from_xy(&a_xy.0, &a_xy.1),
        adot: &ChartConnection::from_xy(&adot_xy.0, &adot_xy.1),
        g: &g,
        gdot: &gdot,
        nu: &vec![nu; grid.len()],
    })?;
    let gamma = |eps: f64| {
        let a = ChartConnection::from_xy(&add_scaled(&a_xy.0, &adot_xy.0, eps), &add_scaled(&a_xy.1, &adot_xy.1, eps));
        let ge = add_scaled(&add_scaled(&g, &gdot, eps), &gddot, eps * eps);
        gauge_action_01(&grid, &a, &ge, &vec![eps * nu; grid.len()])
    };
    steps
        .iter()
        .map(|&eps| {
            let p = gamma(eps)?;
            let q = gamma(-eps)?;
            let fd: Vec<Mat2> = p.iter().zip(&q).map(|(x, y)| mat_scale(&mat_sub(x, y), C::new(0.5 / eps, 0.0))).collect();
            Ok(max_diff(&fd, &formula))
        })
        .collect()
}

/// Largest pairing of the difference of two first variations (different `ġ`) with the
/// harmonic space, and its dimension.
fn gdot_harmonic_pairing(n: usize) -> Result<(f64, usize)> {
    let grid = Grid2::periodic(n);
    let len = grid.len();
    let a = ChartConnection::from_xy(
        &vec![Alg::new(0.0, 0.0, 0.8).to_matrix(); len],
        &vec![Alg::new(0.0, 0.0, -0.3).to_matrix(); len],
    );
    let adot = ChartConnection::zero(len);
    let g = hermitian_sample(&grid);
    let nu = vec![C::new(0.2, 0.5); len];
    let run = |gdot: &[Mat2]| first_variation(&VariationInput { grid: &grid, a: &a, adot: &adot, g: &g, gdot, nu: &nu });
    let d: Vec<Mat2> = run(&gl_sample(&grid, 0.4))?
        .iter()
        .zip(run(&gl_sample(&grid, 2.2))?)
        .map(|(x, y)| mat_sub(x, &y))
        .collect();
    let (_, g_zb) = grid.wirtinger_mat(&g);
    let b: Vec<Mat2> = (0..len)
        .map(|k| {
            let gi = mat_inv(&g[k]).ok_or_else(|| Error::Singular(format!("gauge at sample {k}")))?;
            Ok(mat_add(&mat_mul(&mat_mul(&gi, &a.a_zbar[k]), &g[k]), &mat_mul(&gi, &g_zb[k])))
        })
        .collect::<Result<_>>()?;
    let hp = harmonic_pairing(&grid, &b, &d, 1e-9)?;
    Ok((hp.max_pairing, hp.dimension))
}

fn variation(m: &ExperimentManifest, rec: &mut Recorder) -> Result<()> {
    let steps = [1e-2, 5e-3, 2.5e-3];
    let errs = rec.timed("first_variation", || variation_fd_errors(m.surface.n, &steps))?;
    let mut conv = Series::new("variation_convergence", PlotKind::Convergence, &["eps", "max_error"]);
    for (e, err) in steps.iter().zip(&errs) {
        conv.push(vec![*e, *err]);
    }
    let order = min_of(errs.windows(2).map(|w| (w[0] / w[1]).log2()));
    rec.check(m, "variation_order", order, Relation::AtLeast, "central-difference order of the first variation");
    rec.series(conv);
    let (pairing, dim) = rec.timed("harmonic_pairing", || gdot_harmonic_pairing((m.surface.n / 2).max(4)))?;
    rec.check(m, "harmonic_pairing", pairing, Relation::AtMost, format!("harmonic space of dimension {dim}"));
    let qc = QcMap { nu: C::i() };
    let z = C::i();
    let u = frame_twist_derivative(0.5, z, qc.wdot(z))?;
    rec.check(m, "frame_twist", (u + 1.0).abs(), Relation::AtMost, format!("u = {u} at alpha 0.5, nu = i, z = i"));
    Ok(())
}

fn composition(m: &ExperimentManifest, rec: &mut Recorder) -> Result<()> {
    let t = m.twist()?;
    let beta = t.beta[0];
    let gamma = t.gamma.ok_or_else(|| Error::Config("composition needs twist.gamma".into()))?;
    let levels = if m.surface.levels.is_empty() { vec![m.surface.n] } else { m.surface.levels.clone() };
    let cfg = m.flow.config();
    let p = point(m, 0, m.metric.ell[0])?;
    let d: Vec<f64> = rec.timed("composition", || {
        levels
            .par_iter()
            .map(|&n| composition_check(&p, beta, gamma, &build_surface(m.surface.spec_at(n)?)?, &cfg))
            .collect::<Result<_>>()
    })?;
    let mut conv = Series::new("composition_convergence", PlotKind::Convergence, &["n", "discrepancy"]);
    for (n, v) in levels.iter().zip(&d) {
        conv.push(vec![*n as f64, *v]);
    }
    rec.check(m, "composition_reference", *d.last().unwrap(), Relation::AtMost, format!("trace discrepancy at n = {}", levels.last().unwrap()));
    rec.check(m, "composition_refinement", max_of(d.windows(2).map(|w| w[1] - w[0])), Relation::LessThan, "largest change of the discrepancy under refinement");
    rec.series(conv);
    Ok(())
}

fn foliate(m: &ExperimentManifest, rec: &mut Recorder) -> Result<()> {
    if m.twist()?.gamma.is_some() {
        return composition(m, rec);
    }
    let s = surface(m)?;
    let p = point(m, 0, m.metric.ell[0])?;
    let leaf = rec.timed("leaf", || leaf_sweep(&p, &m.twist()?.beta, &s, &m.flow.config()))?;
    let cols: Vec<String> = std::iter::once("beta".to_string())
        .chain((1..=leaf.traces[0].len()).map(|k| format!("trace_{k}")))
        .collect();
    let mut series = Series::new("leaf", PlotKind::Leaf, &cols.iter().map(String::as_str).collect::<Vec<_>>());
    for (b, tr) in leaf.betas.iter().zip(&leaf.traces) {
        series.push(std::iter::once(*b).chain(tr.iter().copied()).collect());
    }
    rec.check(m, "leaf_lipschitz", leaf.lipschitz, Relation::AtMost, "max trace distance per unit beta");
    rec.check(m, "leaf_second_difference", leaf.max_second_difference, Relation::AtMost, "max second difference quotient");
    rec.series(series);
    Ok(())
}

fn degeneration(m: &ExperimentManifest, rec: &mut Recorder) -> Result<()> {
    let s = surface(m)?;
    let beta = m.twist()?.beta[0];
    let cfg = m.flow.config();
    let half = (m.surface.nx / 4).max(1);
    let p = point(m, 0, m.metric.ell[0])?;
    let report = rec.timed("degeneration", || degeneration_experiment(&p, beta, &m.metric.ell, half, &s, &cfg))?;
    let mut conv = Series::new(
        "degeneration",
        PlotKind::Convergence,
        &["ell", "distance", "transverse", "puncture_trace_error", "pinch_drift", "flow_time"],
    );
    for r in &report.rows {
        conv.push(vec![r.ell, r.distance, r.transverse, r.puncture_trace_error, r.pinch_drift, r.flow_time]);
    }
    rec.note(format!("nodal lambda_1 = {:.6e}", report.nodal_lambda1));
    let step = max_of(report.rows.windows(2).map(|w| w[1].distance - w[0].distance));
    rec.check(m, "degeneration_decrease", step, Relation::LessThan, "largest change of the distance to the nodal limit");
    rec.check(m, "degeneration_final_distance", report.final_distance, Relation::AtMost, format!("at ell = {}", m.metric.ell.last().unwrap()));
    rec.check(m, "transverse_holonomy", report.final_transverse, Relation::AtMost, "max |hol - I| over transverse arcs");
    if m.representation.len() > 1 {
        let q = FoliationPoint {
            rep: m.rep(1)?,
            ..p.clone()
        };
        let refused = matches!(
            degeneration_experiment(&q, beta, &m.metric.ell, half, &s, &cfg),
            Err(Error::AccidentallyReducible)
        );
        rec.check(m, "reducible_refused", refused as u8 as f64, Relation::AtLeast, "accidentally reducible input refused");
    }
    rec.series(conv);
    Ok(())
}

fn sweep(m: &ExperimentManifest, rec: &mut Recorder) -> Result<()> {
    let s = surface(m)?;
    let cfg = m.flow.config();
    let t = m.twist()?;
    let cells: Vec<(f64, f64)> = m.metric.ell.iter().flat_map(|&e| t.beta.iter().map(move |&b| (e, b))).collect();
    let runs: Vec<Result<PiRun>> = rec.timed("sweep", || {
        Ok(cells.par_iter().map(|&(ell, beta)| pi_ab_run(&point(m, 0, ell)?, beta, &s, &cfg)).collect())
    })?;
    let mut table = Series::new(
        "sweep",
        PlotKind::Table,
        &["cell", "ell", "beta", "flow_time", "steps", "final_sup_f", "puncture_trace", "rate", "r2"],
    );
    for (k, (&(ell, beta), run)) in cells.iter().zip(runs).enumerate() {
        let run = run?;
        let d = &run.diagnostics;
        let (rate, _, r2) = tail_fit(d, m.flow.tail_fraction).unwrap_or((f64::NAN, f64::NAN, f64::NAN));
        table.push(vec![
            k as f64,
            ell,
            beta,
            *d.t.last().unwrap(),
            d.steps as f64,
            *d.sup_f.last().unwrap(),
            run.rep.get("c_p")?.trace(),
            rate,
            r2,
        ]);
    }
    rec.check(m, "sup_f", max_of(table.column("final_sup_f").unwrap()), Relation::AtMost, "final sup|*F| over cells");
    rec.series(table);
    Ok(())
}
