//! Yang–Mills gradient flow on link fields.

pub mod action;

pub use action::{step_field, ym_action, ym_gradient, Evaluation, YmProblem};

use crate::error::{Error, Result};
use crate::field::LinkField;
use crate::geom::{MetricGrid, SurfaceComplex};
use crate::spectral::{assemble_laplacian, eigensolve, Boundary, Bundle};
use crate::su2::Alg;
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    /// Initial step; `None` picks `1 / stiffness_bound`.
    pub dt: Option<f64>,
    pub tol_flat: f64,
    pub t_max: f64,
    pub max_steps: usize,
    pub integrator: Integrator,
    pub adapt: bool,
    /// Record one diagnostic row every this many accepted steps.
    pub record_every: usize,
    /// `YM(A_∞)` used for the Råde ratio.
    pub reference_energy: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt: None,
            tol_flat: 1e-6,
            t_max: 50.0,
            max_steps: 2_000_000,
            integrator: Integrator::Euler,
            adapt: true,
            record_every: 10,
            reference_energy: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowDiagnostics {
    pub t: Vec<f64>,
    pub ym: Vec<f64>,
    pub grad_norm: Vec<f64>,
    pub sup_f: Vec<f64>,
    pub rade_ratio: Vec<f64>,
    pub steps: usize,
    pub rejected: usize,
    pub final_dt: f64,
    /// Largest accepted increase of the action (≤ 1e-12 by construction).
    pub max_increase: f64,
    pub converged: bool,
    /// Adjoint `λ₁` at the endpoint, when requested through [`flag_endpoint`].
    pub endpoint_lambda1: Option<f64>,
    pub near_reducible: bool,
}

impl FlowDiagnostics {
    fn push(&mut self, t: f64, ym: f64, g: f64, sup: f64, reference: f64) {
        self.t.push(t);
        self.ym.push(ym);
        self.grad_norm.push(g);
        self.sup_f.push(sup);
        let d = ym - reference;
        self.rade_ratio
            .push(if d > 1e-14 { g / d.sqrt() } else { f64::NAN });
    }

    pub fn is_monotone(&self, tol: f64) -> bool {
        self.ym.windows(2).all(|w| w[1] <= w[0] + tol)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "ym", "grad_norm", "sup_f", "rade_ratio"])?;
        for k in 0..self.t.len() {
            wr.write_record(
                [self.t[k], self.ym[k], self.grad_norm[k], self.sup_f[k], self.rade_ratio[k]]
                    .map(|v| format!("{v:.12e}")),
            )?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FlowResult {
    pub field: LinkField,
    pub diagnostics: FlowDiagnostics,
}

impl FlowResult {
    /// The flat field, or a timeout error with the last curvature.
    pub fn into_converged(self, tol: f64) -> Result<(LinkField, FlowDiagnostics)> {
        if self.diagnostics.converged {
            Ok((self.field, self.diagnostics))
        } else {
            Err(Error::FlowTimeout {
                sup_f: self.diagnostics.sup_f.last().copied().unwrap_or(f64::NAN),
                tol,
                t: self.diagnostics.t.last().copied().unwrap_or(0.0),
            })
        }
    }
}

fn dexpinv(theta: &Alg, f: &Alg) -> Alg {
    // Brackets in algebra coordinates: [ξ, η] = -2 ξ × η.
    let b1 = theta.cross(f).scale(-2.0);
    let b2 = theta.cross(&b1).scale(-2.0);
    *f - b1.scale(0.5) + b2.scale(1.0 / 12.0)
}

/// Runge–Kutta–Munthe-Kaas step for `U' = F(U) U` with `F = -grad`.
fn rk4_step(p: &YmProblem, field: &LinkField, g: &[Alg], dt: f64) -> Result<LinkField> {
    let k1: Vec<Alg> = g.iter().map(|x| x.scale(-1.0)).collect();
    let stage = |theta: &[Alg]| -> Result<Vec<Alg>> {
        let f = step_field(field, theta, -1.0);
        let ev = p.evaluate(&f)?;
        let gi = p.riemannian(&ev.derivative);
        Ok(gi.iter().zip(theta).map(|(x, th)| dexpinv(th, &x.scale(-1.0))).collect())
    };
    let scaled = |k: &[Alg], c: f64| -> Vec<Alg> { k.iter().map(|x| x.scale(c * dt)).collect() };
    let k2 = stage(&scaled(&k1, 0.5))?;
    let k3 = stage(&scaled(&k2, 0.5))?;
    let k4 = stage(&scaled(&k3, 1.0))?;
    let theta: Vec<Alg> = (0..k1.len())
        .map(|e| (k1[e] + k2[e].scale(2.0) + k3[e].scale(2.0) + k4[e]).scale(dt / 6.0))
        .collect();
    Ok(step_field(field, &theta, -1.0))
}

/// Integrates `dA/dt = -grad YM` until `‖*F‖_∞ ≤ tol_flat`, `t_max` or `max_steps`.
pub fn flow_to_flat(field: &LinkField, p: &YmProblem, cfg: &FlowConfig) -> Result<FlowResult> {
    let l = p.stiffness_bound();
    let dt_cap = if l > 0.0 { 1.9 / l } else { f64::INFINITY };
    let mut dt = cfg.dt.unwrap_or(if l > 0.0 { 1.0 / l } else { 1.0 });
    let mut cap = if cfg.dt.is_some() { f64::INFINITY } else { dt_cap };
    let mut diag = FlowDiagnostics::default();
    let mut cur = field.clone();
    let mut ev = p.evaluate(&cur)?;
    let mut t = 0.0;
    let mut since = 0;
    loop {
        let gnorm = p.gradient_norm(&ev.derivative);
        if ev.sup_f <= cfg.tol_flat || t >= cfg.t_max || diag.steps >= cfg.max_steps {
            diag.push(t, ev.action, gnorm, ev.sup_f, cfg.reference_energy);
            diag.converged = ev.sup_f <= cfg.tol_flat;
            diag.final_dt = dt;
            return Ok(FlowResult {
                field: cur,
                diagnostics: diag,
            });
        }
        if since == 0 {
            diag.push(t, ev.action, gnorm, ev.sup_f, cfg.reference_energy);
        }
        let g = p.riemannian(&ev.derivative);
        loop {
            let next = match cfg.integrator {
                Integrator::Euler => Ok(step_field(&cur, &g, dt)),
                Integrator::Rk4 => rk4_step(p, &cur, &g, dt),
            };
            let cand = match next.and_then(|f| p.evaluate(&f).map(|e| (f, e))) {
                Ok(c) => Some(c),
                Err(Error::Branch { .. }) if cfg.adapt => None,
                Err(e) => return Err(e),
            };
            match cand {
                Some((f, e)) if e.action <= ev.action + 1e-12 => {
                    diag.max_increase = diag.max_increase.max(e.action - ev.action);
                    cur = f;
                    ev = e;
                    t += dt;
                    diag.steps += 1;
                    if cfg.adapt {
                        dt = (dt * 1.05).min(cap);
                    }
                    break;
                }
                _ if cfg.adapt && dt > 1e-14 => {
                    diag.rejected += 1;
                    dt *= 0.5;
                    cap = dt;
                }
                _ => {
                    diag.push(t, ev.action, gnorm, ev.sup_f, cfg.reference_energy);
                    diag.final_dt = dt;
                    return Err(Error::NoConvergence(format!("step size underflow at t = {t}")));
                }
            }
        }
        since = (since + 1) % cfg.record_every.max(1);
    }
}

/// Endpoint `λ₁` below which a flow limit is flagged near-reducible.
pub const NEAR_REDUCIBLE_LAMBDA: f64 = 1e-6;

/// Computes the adjoint `λ₁` of the endpoint and sets the near-reducible flag.
pub fn flag_endpoint(diag: &mut FlowDiagnostics, field: &LinkField, s: &SurfaceComplex, m: &MetricGrid) -> Result<()> {
    let lap = assemble_laplacian(field, s, m, Bundle::AdE0, Boundary::Closed)?;
    let l1 = eigensolve(&lap, 1)?.values[0];
    diag.endpoint_lambda1 = Some(l1);
    diag.near_reducible = l1 < NEAR_REDUCIBLE_LAMBDA;
    Ok(())
}

/// `‖grad YM‖₂ / |YM - YM(A_∞)|^{1/2}`.
pub fn rade_ratio(field: &LinkField, p: &YmProblem, flat_reference_energy: f64) -> Result<f64> {
    let ev = p.evaluate(field)?;
    let d = ev.action - flat_reference_energy;
    if d <= 1e-14 {
        return Err(Error::Undefined("at the minimum".into()));
    }
    Ok(p.gradient_norm(&ev.derivative) / d.sqrt())
}

/// Least-squares fit of `log ‖*F‖_∞` against `t` over the last `tail_fraction` of the
/// samples; returns `(rate, R²)` with `‖*F‖_∞ ~ e^{-rate t}`.
pub fn decay_fit(diag: &FlowDiagnostics, tail_fraction: f64) -> Result<(f64, f64)> {
    let n = diag.t.len();
    let start = n - ((n as f64 * tail_fraction).round() as usize).min(n);
    let t = &diag.t[start..];
    let y: Vec<f64> = diag.sup_f[start..].iter().map(|v| v.ln()).collect();
    if t.len() < 10 {
        return Err(Error::OutOfRange {
            name: "tail samples",
            value: t.len() as f64,
            range: ">= 10",
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Undefined("zero in the fitted tail".into()));
    }
    linear_fit(t, &y).map(|(slope, _, r2)| (-slope, r2))
}

/// `(slope, intercept, R²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Singular("constant abscissa".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok((slope, my - slope * mx, r2))
}
