//! Twist maps `π_αβ`, their leaves, and the degeneration experiments.

use crate::error::{Error, Result};
use crate::field::construct::{connection_from_representation, extract_representation};
use crate::field::representation::{accidental_reducibility, aligning_rotation};
use crate::field::twist::{
    apply_gauges, apply_twist, cylinder_region, puncture_region, standard_gauge, StandardGauge,
    TwistProfile, STANDARD_FORM_TOL,
};
use crate::field::{LinkField, Representation};
use crate::flow::{flow_to_flat, FlowConfig, FlowDiagnostics, FlowResult, YmProblem};
use crate::geom::{metric_for, MetricGrid, Path, SurfaceComplex, Topology};
use crate::spectral::{assemble_laplacian, eigensolve, Boundary, Bundle};
use crate::su2::Su2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

/// Tolerance used when reading a representation's relations and component reducibility.
const REP_TOL: f64 = 1e-8;
/// Threshold of the `ℓ = 0` stability pre-check.
pub const STABILITY_THRESHOLD: f64 = 1e-4;

/// A representation with its puncture weight and the metric parameters of the flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoliationPoint {
    pub rep: Representation,
    pub alpha: f64,
    pub ell: f64,
    pub kappa: f64,
}

impl FoliationPoint {
    pub fn new(rep: Representation, ell: f64, kappa: f64) -> Result<Self> {
        let alpha = rep.alpha().ok_or_else(|| Error::MissingLoop("c_p".into()))?;
        check_weight("alpha", alpha)?;
        Ok(Self { rep, alpha, ell, kappa })
    }

    pub fn with_ell(&self, ell: f64) -> Self {
        Self { ell, ..self.clone() }
    }
}

fn check_weight(name: &'static str, w: f64) -> Result<()> {
    if w > 0.0 && w < 0.5 {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value: w, range: "(0, 1/2)" })
    }
}

/// The flat field of a point in standard form at the puncture and, when the surface has one,
/// along the pinching cylinder.
#[derive(Debug, Clone)]
pub struct Realized {
    pub field: LinkField,
    pub puncture: StandardGauge,
    pub cylinder: Option<StandardGauge>,
}

pub fn realize(point: &FoliationPoint, s: &SurfaceComplex) -> Result<Realized> {
    if point.rep.topology != s.spec.topology {
        return Err(Error::Config(format!(
            "representation on {} but surface is {}",
            point.rep.topology, s.spec.topology
        )));
    }
    let flat = connection_from_representation(&point.rep, s)?;
    let puncture = standard_gauge(&flat, s, &puncture_region(s, 0)?, STANDARD_FORM_TOL)?;
    let cylinder = match s.pinch {
        Some(_) => Some(standard_gauge(&flat, s, &cylinder_region(s)?, STANDARD_FORM_TOL)?),
        None => None,
    };
    let gauges: Vec<&StandardGauge> = std::iter::once(&puncture).chain(cylinder.as_ref()).collect();
    Ok(Realized {
        field: apply_gauges(&flat, s, &gauges),
        puncture,
        cylinder,
    })
}

/// Twists a field in standard form at the puncture from `alpha` to `beta` and runs the flow.
pub fn twist_and_flow(
    field: &LinkField,
    s: &SurfaceComplex,
    problem_metric: &MetricGrid,
    virtual_weights: &[f64],
    alpha: f64,
    beta: f64,
    cfg: &FlowConfig,
) -> Result<FlowResult> {
    let twisted = apply_twist(field, s, 0, &TwistProfile::new(alpha, beta)?)?;
    let p = YmProblem::new(s, problem_metric, &twisted, virtual_weights);
    flow_to_flat(&twisted, &p, cfg)
}

/// Representation read off a flat field, with derived loops recomputed from the generators.
pub fn representation_of(field: &LinkField, s: &SurfaceComplex) -> Result<Representation> {
    let raw = extract_representation(field, s);
    let gens: Vec<(&str, Su2)> = s
        .generators
        .iter()
        .map(|g| raw.get(g).map(|u| (g.as_str(), u)))
        .collect::<Result<_>>()?;
    Ok(Representation::from_generators(s.spec.topology, &gens))
}

#[derive(Debug, Clone)]
pub struct PiRun {
    pub rep: Representation,
    pub field: LinkField,
    pub diagnostics: FlowDiagnostics,
}

/// Twist, flow to flat on the metric of the point, extract.
pub fn pi_ab_run(point: &FoliationPoint, beta: f64, s: &SurfaceComplex, cfg: &FlowConfig) -> Result<PiRun> {
    check_weight("beta", beta)?;
    let m = metric_for(s, point.ell, point.kappa)?;
    let r = realize(point, s)?;
    let out = twist_and_flow(&r.field, s, &m, &[], point.alpha, beta, cfg)?;
    let (field, diagnostics) = out.into_converged(cfg.tol_flat)?;
    Ok(PiRun {
        rep: representation_of(&field, s)?,
        field,
        diagnostics,
    })
}

pub fn pi_ab(point: &FoliationPoint, beta: f64, s: &SurfaceComplex, cfg: &FlowConfig) -> Result<Representation> {
    pi_ab_run(point, beta, s, cfg).map(|r| r.rep)
}

/// Traces of the generators, of consecutive generator products, and of the puncture and
/// pinching loops.
pub fn trace_coordinates(rep: &Representation) -> Result<Vec<f64>> {
    let gens = crate::field::representation::generator_names(rep.topology);
    let mut out = rep.conjugacy_invariants(gens)?;
    for extra in ["c_p", "c"] {
        if let Some(u) = rep.loops.get(extra) {
            out.push(u.trace());
        }
    }
    Ok(out)
}

pub fn trace_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Largest trace-coordinate mismatch between `π_αγ` and `π_βγ ∘ π_αβ`.
pub fn composition_check(
    point: &FoliationPoint,
    beta: f64,
    gamma: f64,
    s: &SurfaceComplex,
    cfg: &FlowConfig,
) -> Result<f64> {
    if !(point.alpha >= beta && beta >= gamma) {
        return Err(Error::Config(format!(
            "weights must satisfy alpha >= beta >= gamma, got {}, {beta}, {gamma}",
            point.alpha
        )));
    }
    let direct = pi_ab(point, gamma, s, cfg)?;
    let mid = pi_ab(point, beta, s, cfg)?;
    let mid_point = FoliationPoint {
        rep: mid,
        alpha: beta,
        ..point.clone()
    };
    let composed = pi_ab(&mid_point, gamma, s, cfg)?;
    Ok(trace_distance(&trace_coordinates(&direct)?, &trace_coordinates(&composed)?))
}

/// The leaf through a point sampled on a `β` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafTrace {
    pub betas: Vec<f64>,
    pub reps: Vec<Representation>,
    pub traces: Vec<Vec<f64>>,
    /// Trace distance between consecutive samples.
    pub step_distance: Vec<f64>,
    /// Smallest `L` with `step_distance ≤ L Δβ` at every step.
    pub lipschitz: f64,
    /// Largest second difference of a trace coordinate divided by `Δβ²` (uniform grids).
    pub max_second_difference: f64,
}

impl LeafTrace {
    /// CSV with columns `beta,trace_1..trace_m`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let m = self.traces.first().map_or(0, Vec::len);
        let mut head = vec!["beta".to_string()];
        head.extend((1..=m).map(|k| format!("trace_{k}")));
        wr.write_record(&head)?;
        for (b, t) in self.betas.iter().zip(&self.traces) {
            let mut row = vec![format!("{b:.12e}")];
            row.extend(t.iter().map(|x| format!("{x:.12e}")));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub fn leaf_sweep(
    point: &FoliationPoint,
    betas: &[f64],
    s: &SurfaceComplex,
    cfg: &FlowConfig,
) -> Result<LeafTrace> {
    for w in betas.windows(2) {
        if (w[1] - w[0]).abs() > 0.05 + 1e-12 {
            return Err(Error::Config(format!("leaf step {} exceeds 0.05", (w[1] - w[0]).abs())));
        }
    }
    let reps: Vec<Representation> = betas
        .par_iter()
        .map(|&b| pi_ab(point, b, s, cfg))
        .collect::<Result<_>>()?;
    let traces: Vec<Vec<f64>> = reps.iter().map(trace_coordinates).collect::<Result<_>>()?;
    let step_distance: Vec<f64> = traces.windows(2).map(|w| trace_distance(&w[0], &w[1])).collect();
    let mut lipschitz: f64 = 0.0;
    for (k, d) in step_distance.iter().enumerate() {
        let db = (betas[k + 1] - betas[k]).abs();
        if db > 0.0 {
            lipschitz = lipschitz.max(d / db);
        } else if *d > 0.0 {
            lipschitz = f64::INFINITY;
        }
    }
    let mut max_second_difference: f64 = 0.0;
    for k in 1..traces.len().saturating_sub(1) {
        let db = betas[k + 1] - betas[k];
        if db == 0.0 || (betas[k] - betas[k - 1] - db).abs() > 1e-12 {
            continue;
        }
        for c in 0..traces[k].len() {
            let d2 = traces[k + 1][c] - 2.0 * traces[k][c] + traces[k - 1][c];
            max_second_difference = max_second_difference.max(d2.abs() / (db * db));
        }
    }
    Ok(LeafTrace {
        betas: betas.to_vec(),
        reps,
        traces,
        step_distance,
        lipschitz,
        max_second_difference,
    })
}

/// Path of the pinching curve seen from the side of the puncture: the loop `c` with its core
/// ring moved one column toward the first torus.
fn near_side_ring(s: &SurfaceComplex) -> Result<Path> {
    let p = s
        .pinch
        .as_ref()
        .ok_or_else(|| Error::Surface("surface has no pinching cylinder".into()))?;
    let c = s.loops.get("c").ok_or_else(|| Error::MissingLoop("c".into()))?;
    let tail_len = (c.len() - p.ny) / 2;
    let prefix = &c[..tail_len - 1];
    let mut path = prefix.to_vec();
    path.extend(p.ring(p.nx / 2 - 1, p.tail_row));
    path.extend(crate::geom::surface::reverse_path(prefix));
    s.check_closed(&path)?;
    Ok(path)
}

#[derive(Debug, Clone)]
pub struct NodalRun {
    pub rep: Representation,
    pub field: LinkField,
    pub diagnostics: FlowDiagnostics,
    /// Adjoint `λ₁` of the twisted component containing the puncture.
    pub lambda1: f64,
    pub component: usize,
}

/// `π_αβ` at `ℓ = 0`: flows only the component containing the puncture, with its node ring
/// pinned to the class of the pinching loop, and glues the other component back through the
/// stored frame.
pub fn nodal_pi_ab(point: &FoliationPoint, beta: f64, s: &SurfaceComplex, cfg: &FlowConfig) -> Result<NodalRun> {
    check_weight("beta", beta)?;
    if s.spec.topology != Topology::Genus2SeparatingPinch {
        return Err(Error::Config("nodal flow needs a pinched surface".into()));
    }
    if accidental_reducibility(&point.rep, s, REP_TOL)?.1 {
        return Err(Error::AccidentallyReducible);
    }
    let m0 = metric_for(s, 0.0, point.kappa)?;
    let component = m0.face_component[s.punctures[0].face];
    let mp = m0.restrict(component);
    let r = realize(point, s)?;
    let ring = near_side_ring(s)?;
    let c = point.rep.get("c")?;
    let node_weight = c.angle() / (2.0 * PI);

    let twisted = apply_twist(&r.field, s, 0, &TwistProfile::new(point.alpha, beta)?)?;
    let lap = assemble_laplacian(&twisted, s, &mp, Bundle::AdE0, Boundary::Closed)?;
    let lambda1 = eigensolve(&lap, 1)?.values[0];
    if !(lambda1 > STABILITY_THRESHOLD) {
        return Err(Error::Unstable {
            lambda1,
            threshold: STABILITY_THRESHOLD,
        });
    }
    let weights = vec![node_weight; mp.virtual_faces.len()];
    let p = YmProblem::new(s, &mp, &twisted, &weights);
    let (field, diagnostics) = flow_to_flat(&twisted, &p, cfg)?.into_converged(cfg.tol_flat)?;

    let gens: Vec<String> = s.component_loops[component]
        .iter()
        .filter(|n| n.as_str() != "c" && n.as_str() != "c_p")
        .cloned()
        .collect();
    let c_new = field.product(&ring);
    let u = aligning_rotation(&c, &c_new);
    let mut loops: Vec<(&str, Su2)> = Vec::new();
    for g in &s.generators {
        let v = if gens.contains(g) {
            field.product(&s.loops[g])
        } else {
            u * point.rep.get(g)? * u.inv()
        };
        loops.push((g.as_str(), v));
    }
    Ok(NodalRun {
        rep: Representation::from_generators(s.spec.topology, &loops),
        field,
        diagnostics,
        lambda1,
        component,
    })
}

/// Conjugacy invariants of the loops off the pinching cylinder, component by component.
pub fn off_cylinder_invariants(rep: &Representation, s: &SurfaceComplex) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for comp in &s.component_loops {
        let names: Vec<&str> = comp
            .iter()
            .map(String::as_str)
            .filter(|n| *n != "c" && *n != "c_p")
            .collect();
        out.extend(rep.conjugacy_invariants(&names)?);
    }
    Ok(out)
}

/// `max ‖hol_Γ − I‖` over transverse arcs through every cylinder row covering
/// `x ∈ [−k hx, k hx]`.
pub fn transverse_holonomy(field: &LinkField, s: &SurfaceComplex, k: usize) -> Result<f64> {
    let p = s
        .pinch
        .as_ref()
        .ok_or_else(|| Error::Surface("surface has no pinching cylinder".into()))?;
    if k == 0 || k > p.nx / 2 {
        return Err(Error::Config(format!("arc half-width {k} outside 1..={}", p.nx / 2)));
    }
    Ok((0..p.ny)
        .map(|j| field.product(&p.transverse_arc(j, k)).dist(&Su2::IDENTITY))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerationRow {
    pub ell: f64,
    pub invariants: Vec<f64>,
    /// Distance of the off-cylinder invariants to the nodal run.
    pub distance: f64,
    pub transverse: f64,
    pub puncture_trace_error: f64,
    /// Trace drift of the pinching loop during the flow.
    pub pinch_drift: f64,
    pub flow_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerationReport {
    pub beta: f64,
    pub rows: Vec<DegenerationRow>,
    pub nodal_invariants: Vec<f64>,
    pub nodal_lambda1: f64,
    pub distances_decrease: bool,
    pub final_distance: f64,
    pub final_transverse: f64,
}

impl DegenerationReport {
    /// CSV matrix `ell × invariant`, the nodal run as `ell = 0`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let m = self.nodal_invariants.len();
        let mut head = vec!["ell".to_string()];
        head.extend((1..=m).map(|k| format!("xi_{k}")));
        head.extend(["distance", "transverse", "puncture_trace_error", "pinch_drift"].map(String::from));
        wr.write_record(&head)?;
        for r in &self.rows {
            let mut row = vec![format!("{:.6e}", r.ell)];
            row.extend(r.invariants.iter().map(|x| format!("{x:.12e}")));
            row.extend(
                [r.distance, r.transverse, r.puncture_trace_error, r.pinch_drift].map(|x| format!("{x:.12e}")),
            );
            wr.write_record(&row)?;
        }
        let mut row = vec![format!("{:.6e}", 0.0)];
        row.extend(self.nodal_invariants.iter().map(|x| format!("{x:.12e}")));
        row.extend(["0", "nan", "nan", "0"].map(String::from));
        wr.write_record(&row)?;
        wr.flush()?;
        Ok(())
    }
}

/// Runs `π_αβ` along a decreasing `ℓ` sequence and at `ℓ = 0`, comparing off-cylinder
/// invariants and transverse holonomies in the frame fixed at realization.
pub fn degeneration_experiment(
    point: &FoliationPoint,
    beta: f64,
    ells: &[f64],
    arc_half_width: usize,
    s: &SurfaceComplex,
    cfg: &FlowConfig,
) -> Result<DegenerationReport> {
    if accidental_reducibility(&point.rep, s, REP_TOL)?.1 {
        return Err(Error::AccidentallyReducible);
    }
    if ells.is_empty() || ells.windows(2).any(|w| w[1] >= w[0]) || ells[ells.len() - 1] <= 0.0 {
        return Err(Error::Config("ell sequence must be positive and strictly decreasing".into()));
    }
    let nodal = nodal_pi_ab(point, beta, s, cfg)?;
    let nodal_invariants = off_cylinder_invariants(&nodal.rep, s)?;
    let c_trace = point.rep.get("c")?.trace();
    let target = 2.0 * (2.0 * PI * beta).cos();
    let rows: Vec<DegenerationRow> = ells
        .par_iter()
        .map(|&ell| {
            let run = pi_ab_run(&point.with_ell(ell), beta, s, cfg)?;
            let invariants = off_cylinder_invariants(&run.rep, s)?;
            Ok(DegenerationRow {
                ell,
                distance: trace_distance(&invariants, &nodal_invariants),
                invariants,
                transverse: transverse_holonomy(&run.field, s, arc_half_width)?,
                puncture_trace_error: (run.rep.get("c_p")?.trace() - target).abs(),
                pinch_drift: (run.rep.get("c")?.trace() - c_trace).abs(),
                flow_time: run.diagnostics.t.last().copied().unwrap_or(0.0),
            })
        })
        .collect::<Result<_>>()?;
    let distances_decrease = rows.windows(2).all(|w| w[1].distance < w[0].distance);
    let last = rows.last().unwrap();
    Ok(DegenerationReport {
        beta,
        final_distance: last.distance,
        final_transverse: last.transverse,
        rows,
        nodal_invariants,
        nodal_lambda1: nodal.lambda1,
        distances_decrease,
    })
}

#[cfg(test)]
mod tests;
