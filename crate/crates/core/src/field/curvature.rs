use super::links::LinkField;
use crate::error::{Error, Result};
use crate::geom::{MetricGrid, Path, SurfaceComplex};
use crate::su2::{Alg, Su2};
use std::f64::consts::PI;

/// Margin to the log branch cut at `-I`.
pub const BRANCH_MARGIN: f64 = 1e-6;

/// One term of the discrete action: a closed boundary path, its area, and an optional
/// pinned holonomy weight (punctures and node rings).
#[derive(Debug, Clone, PartialEq)]
pub struct Plaquette {
    pub boundary: Path,
    pub area: f64,
    pub pin: Option<f64>,
    /// Face index in the surface, `None` for node rings.
    pub face: Option<usize>,
}

/// Collects the active plaquettes. Punctures are pinned to `field.puncture_weights`,
/// node rings of an `ℓ = 0` metric to `virtual_weights` (in the metric's order).
pub fn plaquettes(
    s: &SurfaceComplex,
    m: &MetricGrid,
    field: &LinkField,
    virtual_weights: &[f64],
) -> Vec<Plaquette> {
    let mut out = Vec::with_capacity(s.faces.len());
    for (k, f) in s.faces.iter().enumerate() {
        if !m.face_active[k] {
            continue;
        }
        let pin = s
            .punctures
            .iter()
            .position(|p| p.face == k)
            .map(|i| field.puncture_weights[i]);
        out.push(Plaquette {
            boundary: f.boundary.clone(),
            area: m.face_area[k],
            pin,
            face: Some(k),
        });
    }
    for (vf, &w) in m.virtual_faces.iter().zip(virtual_weights) {
        out.push(Plaquette {
            boundary: vf.boundary.clone(),
            area: vf.area,
            pin: Some(w),
            face: None,
        });
    }
    out
}

/// Principal log of the ordered plaquette product.
pub fn plaquette_log(field: &LinkField, boundary: &[(usize, i8)], face: usize) -> Result<Alg> {
    let p = field.product(boundary);
    p.log_checked(BRANCH_MARGIN).ok_or(Error::Branch {
        face,
        angle: p.angle(),
    })
}

/// Curvature `ξ` of a plaquette as it enters the action: the plain log, or for pinned
/// plaquettes the deviation `(|ξ| - 2πw) ξ/|ξ|` of the holonomy angle from the weight.
pub fn effective_curvature(field: &LinkField, pl: &Plaquette, index: usize) -> Result<Alg> {
    effective_from_product(field.product(&pl.boundary), pl.pin, pl.face.unwrap_or(index))
}

/// Effective curvature of a plaquette whose ordered product is `p`.
pub fn effective_from_product(p: Su2, pin: Option<f64>, face: usize) -> Result<Alg> {
    match pin {
        None => p.log_checked(BRANCH_MARGIN).ok_or(Error::Branch {
            face,
            angle: p.angle(),
        }),
        Some(w) => {
            let xi = p.log();
            let r = xi.norm();
            let target = 2.0 * PI * w;
            if r < 1e-14 {
                return Ok(Alg::tau(-target));
            }
            if r > PI - BRANCH_MARGIN {
                return Err(Error::Branch { face, angle: r });
            }
            Ok(xi.scale((r - target) / r))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    /// Effective curvature per plaquette (same order as the plaquette list).
    pub logs: Vec<Alg>,
    /// `‖ξ‖_F / area`.
    pub density: Vec<f64>,
    pub area: Vec<f64>,
    pub face: Vec<Option<usize>>,
}

pub fn curvature(field: &LinkField, pls: &[Plaquette]) -> Result<CurvatureField> {
    let mut logs = Vec::with_capacity(pls.len());
    let mut density = Vec::with_capacity(pls.len());
    for (k, pl) in pls.iter().enumerate() {
        let xi = effective_curvature(field, pl, k)?;
        density.push(if pl.area > 0.0 { xi.frobenius() / pl.area } else { 0.0 });
        logs.push(xi);
    }
    Ok(CurvatureField {
        logs,
        density,
        area: pls.iter().map(|p| p.area).collect(),
        face: pls.iter().map(|p| p.face).collect(),
    })
}

impl CurvatureField {
    /// `(‖*F‖_∞, ‖*F‖₂)`.
    pub fn norms(&self) -> (f64, f64) {
        let sup = self.density.iter().copied().fold(0.0, f64::max);
        let l2 = self
            .density
            .iter()
            .zip(&self.area)
            .map(|(d, a)| d * d * a)
            .sum::<f64>()
            .sqrt();
        (sup, l2)
    }
}

pub fn curvature_norms(
    field: &LinkField,
    s: &SurfaceComplex,
    m: &MetricGrid,
) -> Result<(f64, f64)> {
    let pls = plaquettes(s, m, field, &[]);
    Ok(curvature(field, &pls)?.norms())
}
