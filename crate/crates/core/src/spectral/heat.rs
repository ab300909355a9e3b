use super::{CovariantLaplacian, Spectrum};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeatResult {
    pub v: Vec<f64>,
    /// L² bound on the part of `v(t)` carried by modes beyond the computed ones.
    pub tail_bound: f64,
    pub sup: f64,
    pub l2: f64,
}

/// `v(t) = Σ e^{−λ_i t}⟨v₀, φ_i⟩φ_i` over the computed modes. The remainder of `v₀` decays at
/// least like `e^{−λ_max t}`; fails when that exceeds `tail_tol ‖v₀‖₂`.
pub fn heat_evolve(
    lap: &CovariantLaplacian,
    spectrum: &Spectrum,
    v0: &[f64],
    t: f64,
    tail_tol: f64,
) -> Result<HeatResult> {
    if !(t > 0.0) {
        return Err(Error::OutOfRange {
            name: "t",
            value: t,
            range: "(0, inf)",
        });
    }
    let mut v = vec![0.0; v0.len()];
    let mut proj = vec![0.0; v0.len()];
    for (lam, phi) in spectrum.values.iter().zip(&spectrum.vectors) {
        let c = lap.inner(v0, phi);
        let d = (-lam.max(0.0) * t).exp();
        for ((a, p), x) in v.iter_mut().zip(proj.iter_mut()).zip(phi) {
            *a += c * d * x;
            *p += c * x;
        }
    }
    let rest: Vec<f64> = v0.iter().zip(&proj).map(|(a, b)| a - b).collect();
    let lam_max = spectrum.values.last().copied().unwrap_or(0.0);
    let tail_bound = lap.norm(&rest) * (-lam_max * t).exp();
    let n0 = lap.norm(v0);
    if tail_bound > tail_tol * n0 {
        return Err(Error::NoConvergence(format!(
            "heat synthesis: tail {tail_bound:.3e} > {:.1e} with {} modes",
            tail_tol * n0,
            spectrum.values.len()
        )));
    }
    Ok(HeatResult {
        sup: lap.sup(&v),
        l2: lap.norm(&v),
        v,
        tail_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::LinkField;
    use crate::geom::{build_surface, metric_for, SurfaceSpec};
    use crate::spectral::{assemble_laplacian, band_limited, eigensolve, Boundary, Bundle};

    fn setup() -> (CovariantLaplacian, Spectrum) {
        let s = build_surface(SurfaceSpec::torus(12)).unwrap();
        let m = metric_for(&s, 1.0, 1.0).unwrap();
        let lap = assemble_laplacian(&LinkField::identity(&s), &s, &m, Bundle::Functions, Boundary::Closed)
            .unwrap();
        let sp = eigensolve(&lap, 40).unwrap();
        (lap, sp)
    }

    #[test]
    fn eigensection_decays_exactly() {
        let (lap, sp) = setup();
        let r = heat_evolve(&lap, &sp, &sp.vectors[3], 0.01, 1e-6).unwrap();
        let d = (-sp.values[3] * 0.01).exp();
        for (a, b) in r.v.iter().zip(&sp.vectors[3]) {
            assert!((a - d * b).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_is_conserved_and_norm_decreases() {
        let (lap, sp) = setup();
        let mut v0 = band_limited(&lap, &sp, 20, 1, 4).remove(0);
        let one = vec![1.0; lap.dim()];
        let mean0 = lap.inner(&v0, &one);
        let r = heat_evolve(&lap, &sp, &v0, 0.05, 1e-6).unwrap();
        assert!((lap.inner(&r.v, &one) - mean0).abs() < 1e-12);
        let mu = mean0 / lap.area;
        v0.iter_mut().for_each(|x| *x -= mu);
        let mut last = lap.norm(&v0);
        for t in [0.001, 0.01, 0.05, 0.2] {
            let n = heat_evolve(&lap, &sp, &v0, t, 1e-6).unwrap().l2;
            assert!(n < last);
            last = n;
        }
    }

    #[test]
    fn rough_data_needs_more_modes() {
        let (lap, sp) = setup();
        let mut v0 = vec![0.0; lap.dim()];
        v0[7] = 1.0;
        assert!(heat_evolve(&lap, &sp, &v0, 1e-4, 1e-6).is_err());
    }
}
