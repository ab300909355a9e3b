//! Deformation formulas under a change of conformal structure: the deformed `∂̄`, the first
//! variation of the complex gauge action, frame twisting and the twisted connection's derivative.

pub mod first;
pub mod grid;

pub use first::{
    first_variation, gauge_action_01, harmonic_pairing, ChartConnection, HarmonicPairing, VariationInput,
};
pub use grid::Grid2;

use crate::error::{Error, Result};
use crate::field::twist::{cutoff, smoothstep};
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

/// A one-form `a dz + b dz̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm {
    pub dz: Vec<C>,
    pub dzbar: Vec<C>,
}

/// `(0,1)` part with respect to the structure with Beltrami coefficient `μ`:
/// the component along `dz̄ + μ̄ dz`, returned as `(dz, dz̄)` coefficients.
pub fn project_01(a: C, b: C, mu: C) -> (C, C) {
    let q = (b - mu * a) / (1.0 - mu.norm_sqr());
    (mu.conj() * q, q)
}

/// `(1,0)` part: the component along `dz + μ dz̄`, as `(dz, dz̄)` coefficients.
pub fn project_10(a: C, b: C, mu: C) -> (C, C) {
    let p = (a - mu.conj() * b) / (1.0 - mu.norm_sqr());
    (p, mu * p)
}

fn check_beltrami(mu: &[C]) -> Result<()> {
    match mu.iter().map(|m| m.norm()).fold(0.0, f64::max) {
        sup if sup < 1.0 => Ok(()),
        sup => Err(Error::OutOfRange {
            name: "|mu|",
            value: sup,
            range: "[0, 1)",
        }),
    }
}

/// `∂̄` on `X_μ` applied to a sampled function.
pub fn dbar_mu(grid: &Grid2, f: &[C], mu: &[C]) -> Result<OneForm> {
    check_beltrami(mu)?;
    let (fz, fzb) = grid.wirtinger(f);
    let (dz, dzbar) = fz
        .iter()
        .zip(&fzb)
        .zip(mu)
        .map(|((&a, &b), &m)| project_01(a, b, m))
        .unzip();
    Ok(OneForm { dz, dzbar })
}

/// Radial cutoff equal to 1 on `r ≤ r0` and 0 on `r ≥ r1`, with its radial derivative.
pub fn radial_cutoff(r: f64, r0: f64, r1: f64) -> (f64, f64) {
    let (s, ds, _) = smoothstep((r - r0) / (r1 - r0));
    (1.0 - s, -ds / (r1 - r0))
}

/// `φ₀`: 1 on `Δ_{2/3}`, supported in `Δ`.
pub fn phi0(r: f64) -> (f64, f64) {
    radial_cutoff(r, 2.0 / 3.0, 1.0)
}

/// `φ₁`: 1 on `Δ_{1/6}`, supported in `Δ_{1/3}`.
pub fn phi1(r: f64) -> (f64, f64) {
    let (a, b, _) = cutoff(r);
    (a, b)
}

/// `φ₂`: 1 on `Δ_{1/3}`, supported in `Δ_{2/3}`.
pub fn phi2(r: f64) -> (f64, f64) {
    radial_cutoff(r, 1.0 / 3.0, 2.0 / 3.0)
}

/// `μ_ε = ε ν φ₀` for a constant direction `ν`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeltramiFamily {
    pub nu: C,
}

impl BeltramiFamily {
    pub fn mu(&self, eps: f64, z: C) -> Result<C> {
        let m = eps * self.nu * phi0(z.norm()).0;
        if m.norm() >= 1.0 {
            return Err(Error::OutOfRange {
                name: "|eps nu|",
                value: m.norm(),
                range: "[0, 1)",
            });
        }
        Ok(m)
    }

    pub fn nu_tilde(&self, z: C) -> C {
        self.nu * phi0(z.norm()).0
    }
}

/// Normalized solution of `w_z̄ = εν w_z` on the plane for constant `ν`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QcMap {
    pub nu: C,
}

impl QcMap {
    pub fn w(&self, eps: f64, z: C) -> C {
        (z + eps * self.nu * z.conj()) / (1.0 + eps * self.nu)
    }

    /// `(w_z, w_z̄)`.
    pub fn jet(&self, eps: f64) -> (C, C) {
        let d = 1.0 + eps * self.nu;
        (1.0 / d, eps * self.nu / d)
    }

    pub fn wdot(&self, z: C) -> C {
        self.nu * (z.conj() - z)
    }

    pub fn theta(&self, eps: f64, z: C) -> f64 {
        self.w(eps, z).arg()
    }
}

/// `u̇_α(z)` with `i u̇ = (α/2)(ẇ/z − conj(ẇ/z))`, i.e. `u̇ = α Im(ẇ/z)`.
pub fn frame_twist_derivative(alpha: f64, z: C, wdot: C) -> Result<f64> {
    if z.norm() == 0.0 {
        return Err(Error::Singular("frame twist at z = 0".into()));
    }
    let q = wdot / z;
    let iu = 0.5 * alpha * (q - q.conj());
    Ok(iu.im)
}

/// Derivative of the twisted connection in the `e⁺` direction at one point, for the constant
/// `ν` family (`ẇ = ν(z̄ − z)`):
/// `∂_z̄[(α−β)/2 {φ₂(q − q̄) + φ₁(q + q̄)}] − (α−β) ν̃ ∂_z(φ₁ log|z|²)` with `q = ẇ/z`.
pub fn twisted_gamma_dot(alpha: f64, beta: f64, nu: C, z: C) -> Result<C> {
    let r = z.norm();
    if r == 0.0 {
        return Err(Error::Singular("twisted connection at z = 0".into()));
    }
    let k = alpha - beta;
    let (p1, dp1) = phi1(r);
    let (p2, dp2) = phi2(r);
    let nu_t = nu * phi0(r).0;
    let q = nu * (z.conj() / z - 1.0);
    let dzb_q = nu / z;
    let dzb_qbar = -(nu.conj() * z / (z.conj() * z.conj()));
    // ∂_z̄ φ(r) = φ'(r) z / (2r), ∂_z φ(r) = φ'(r) z̄ / (2r).
    let dzb = |d: f64| d * z / (2.0 * r);
    let dz = |d: f64| d * z.conj() / (2.0 * r);
    let bracket = dzb(dp2) * (q - q.conj())
        + p2 * (dzb_q - dzb_qbar)
        + dzb(dp1) * (q + q.conj())
        + p1 * (dzb_q + dzb_qbar);
    let log_term = dz(dp1) * (r * r).ln() + p1 / z;
    Ok(0.5 * k * bracket - k * nu_t * log_term)
}

/// The function differentiated by `∂_z̄` in [`twisted_gamma_dot`], and the `∂_z` argument of its
/// correction term, for stencil cross-checks.
pub fn twisted_gamma_parts(alpha: f64, beta: f64, nu: C, z: C) -> (C, C) {
    let r = z.norm();
    let q = nu * (z.conj() / z - 1.0);
    let k = alpha - beta;
    (
        0.5 * k * (phi2(r).0 * (q - q.conj()) + phi1(r).0 * (q + q.conj())),
        C::new(phi1(r).0 * (r * r).ln(), 0.0),
    )
}
