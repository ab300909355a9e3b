use crate::error::{check_range, Error, Result};
use serde::{Deserialize, Serialize};

/// The cylinder `[-1,1] × S¹` with metric `dx² + (ℓ + (1-ℓ)x²) κ² dy²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConicCylinder {
    pub kappa: f64,
    pub ell: f64,
    pub nx: usize,
    pub ny: usize,
}

impl ConicCylinder {
    pub fn new(kappa: f64, ell: f64, nx: usize, ny: usize) -> Result<Self> {
        check_range("kappa", kappa, f64::MIN_POSITIVE, 1.0, "(0, 1]")?;
        check_range("ell", ell, 0.0, 1.0, "[0, 1]")?;
        if nx < 4 || ny < 4 {
            return Err(Error::OutOfRange {
                name: "nx/ny",
                value: nx.min(ny) as f64,
                range: ">= 4",
            });
        }
        Ok(Self { kappa, ell, nx, ny })
    }

    /// `ρ²(x)`.
    pub fn metric_factor(&self, x: f64) -> Result<f64> {
        check_range("x", x, -1.0, 1.0, "[-1, 1]")?;
        Ok(rho_sq(self.ell, self.kappa, x))
    }

    pub fn rho(&self, x: f64) -> f64 {
        rho_sq(self.ell, self.kappa, x).sqrt()
    }

    /// Common eigenvalue `R₁¹ = R₂²` of the Ricci tensor, `-ℓ(1-ℓ)/(ℓ+(1-ℓ)x²)²`.
    pub fn ricci_eigenvalue(&self, x: f64) -> Result<f64> {
        check_range("x", x, -1.0, 1.0, "[-1, 1]")?;
        let q = self.ell + (1.0 - self.ell) * x * x;
        if q == 0.0 {
            return Err(Error::Singular(format!(
                "cone double point at x = {x}, ell = {}",
                self.ell
            )));
        }
        Ok(-self.ell * (1.0 - self.ell) / (q * q))
    }

    /// `sup_x |R|`, attained at `x = 0`.
    pub fn ricci_sup(&self) -> Result<f64> {
        Ok(self.ricci_eigenvalue(0.0)?.abs())
    }

    pub fn plumbing_map(&self) -> Result<PlumbingMap> {
        PlumbingMap::new(self.kappa, self.ell)
    }

    /// Area `2π ∫ ρ dx`.
    pub fn area(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.kappa * sqrt_quadratic_integral(self.ell, -1.0, 1.0)
    }
}

pub fn rho_sq(ell: f64, kappa: f64, x: f64) -> f64 {
    (ell + (1.0 - ell) * x * x) * kappa * kappa
}

/// `∫_a^b sqrt(ℓ + (1-ℓ)t²) dt` in closed form.
pub fn sqrt_quadratic_integral(ell: f64, a: f64, b: f64) -> f64 {
    let c = 1.0 - ell;
    let prim = |t: f64| {
        let q = (ell + c * t * t).sqrt();
        if c < 1e-14 {
            q * t
        } else if ell == 0.0 {
            0.5 * t * q
        } else {
            0.5 * t * q + 0.5 * ell / c.sqrt() * (c.sqrt() * t / ell.sqrt()).asinh()
        }
    };
    prim(b) - prim(a)
}

/// Conformal radius `r = f(x)` of the annulus `{ε < |z| < 1}` and the plumbing parameter `ε(ℓ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlumbingMap {
    pub kappa: f64,
    pub ell: f64,
    pub epsilon: f64,
}

impl PlumbingMap {
    pub fn new(kappa: f64, ell: f64) -> Result<Self> {
        check_range("kappa", kappa, f64::MIN_POSITIVE, 1.0, "(0, 1]")?;
        check_range("ell", ell, 0.0, 1.0, "[0, 1]")?;
        Ok(Self {
            kappa,
            ell,
            epsilon: epsilon(ell, kappa),
        })
    }

    /// `log f(x) = -∫_x^1 dt / (κ sqrt(ℓ + (1-ℓ)t²))`.
    pub fn log_f(&self, x: f64) -> f64 {
        if self.ell == 0.0 {
            return x.ln() / self.kappa;
        }
        -(inv_sqrt_primitive(self.ell, 1.0) - inv_sqrt_primitive(self.ell, x)) / self.kappa
    }

    pub fn f(&self, x: f64) -> f64 {
        if self.ell == 0.0 && x <= 0.0 {
            return 0.0;
        }
        self.log_f(x).exp()
    }

    /// Two-sided bound `ℓ^{2/κ}/4^{1/κ} ≤ ε ≤ ℓ^{1/κ}`; returns (lower ok, upper ok).
    pub fn epsilon_bounds(&self) -> (bool, bool) {
        let lower = self.ell.powf(2.0 / self.kappa) / 4f64.powf(1.0 / self.kappa);
        let upper = self.ell.powf(1.0 / self.kappa);
        (lower <= self.epsilon, self.epsilon <= upper)
    }
}

/// `∫_0^x dt / sqrt(ℓ + (1-ℓ)t²)`.
fn inv_sqrt_primitive(ell: f64, x: f64) -> f64 {
    let c = 1.0 - ell;
    if c < 1e-14 {
        x / ell.sqrt()
    } else {
        ((c / ell).sqrt() * x).asinh() / c.sqrt()
    }
}

/// `ε(ℓ) = [ℓ / (1 + sqrt(1-ℓ))²]^{1/(κ sqrt(1-ℓ))}`, with the limit `e^{-2/κ}` at `ℓ = 1`.
pub fn epsilon(ell: f64, kappa: f64) -> f64 {
    if ell <= 0.0 {
        return 0.0;
    }
    let s = (1.0 - ell).sqrt();
    if s < 1e-12 {
        return (-2.0 / kappa).exp();
    }
    ((ell.ln() - 2.0 * (1.0 + s).ln()) / (kappa * s)).exp()
}

/// Conformal density `κ² r^{2(κ-1)}` of the cone metric.
pub fn cone_metric_factor(r: f64, kappa: f64) -> Result<f64> {
    check_range("kappa", kappa, f64::MIN_POSITIVE, 1.0, "(0, 1]")?;
    if r <= 0.0 {
        return Err(Error::Singular(format!("cone point at r = {r}")));
    }
    Ok(kappa * kappa * r.powf(2.0 * (kappa - 1.0)))
}

/// `∫_{|z|≤1} (κ² r^{2(κ-1)})^p r dr dθ`, finite iff `p(κ-1) + 1 > 0`.
pub fn cone_lp_integral(kappa: f64, p: f64) -> Option<f64> {
    let e = 2.0 * p * (kappa - 1.0) + 2.0;
    if e <= 0.0 {
        None
    } else {
        Some(2.0 * std::f64::consts::PI * kappa.powf(2.0 * p) / e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cyl(kappa: f64, ell: f64) -> ConicCylinder {
        ConicCylinder::new(kappa, ell, 8, 8).unwrap()
    }

    fn epsilon_by_ode(ell: f64, kappa: f64, steps: usize) -> f64 {
        let g = |t: f64| 1.0 / (kappa * (ell + (1.0 - ell) * t * t).sqrt());
        let h = 1.0 / steps as f64;
        let mut s = 0.0;
        for k in 0..steps {
            let a = k as f64 * h;
            s += h / 6.0 * (g(a) + 4.0 * g(a + 0.5 * h) + g(a + h));
        }
        (-2.0 * s).exp()
    }

    #[test]
    fn metric_factor_examples() {
        assert_eq!(cyl(1.0, 1.0).metric_factor(0.3).unwrap(), 1.0);
        assert_eq!(cyl(0.7, 0.0).metric_factor(0.0).unwrap(), 0.0);
        assert!((cyl(0.8, 0.5).metric_factor(1.0).unwrap() - 0.64).abs() < 1e-15);
        assert!(cyl(1.0, 0.5).metric_factor(1.5).is_err());
    }

    #[test]
    fn epsilon_examples() {
        assert!((epsilon(0.75, 1.0) - 1.0 / 9.0).abs() < 1e-14);
        assert!((epsilon(1.0, 1.0) - (-2f64).exp()).abs() < 1e-14);
        assert_eq!(epsilon(0.0, 0.4), 0.0);
        assert!((epsilon_by_ode(0.75, 1.0, 4000) - 1.0 / 9.0).abs() < 1e-10);
        assert!((epsilon(1.0 - 1e-10, 0.5) - (-4f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn plumbing_f_is_normalized_and_increasing() {
        let p = PlumbingMap::new(0.5, 0.3).unwrap();
        assert!((p.f(1.0) - 1.0).abs() < 1e-15);
        assert!((p.f(0.0).powi(2) - p.epsilon).abs() < 1e-14);
        let mut prev = 0.0;
        for k in 0..=20 {
            let v = p.f(-1.0 + 0.1 * k as f64);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn lower_bound_fails_at_three_quarters() {
        let p = PlumbingMap::new(1.0, 0.75).unwrap();
        assert_eq!(p.epsilon_bounds(), (false, true));
    }

    #[test]
    fn ricci_examples() {
        assert_eq!(cyl(1.0, 1.0).ricci_eigenvalue(0.4).unwrap(), 0.0);
        assert!((cyl(1.0, 0.5).ricci_eigenvalue(0.0).unwrap() + 1.0).abs() < 1e-15);
        assert!(cyl(1.0, 0.0).ricci_eigenvalue(0.0).is_err());
        // K = -ρ''/ρ by central differences.
        let c = cyl(0.9, 0.5);
        let h = 1e-4;
        let x = 0.3;
        let k_fd = -(c.rho(x + h) - 2.0 * c.rho(x) + c.rho(x - h)) / (h * h) / c.rho(x);
        assert!((k_fd - c.ricci_eigenvalue(x).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn cone_metric_examples() {
        assert!((cone_metric_factor(1.0, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(cone_metric_factor(3.7, 1.0).unwrap(), 1.0);
        assert!(cone_metric_factor(0.0, 0.5).is_err());
        assert!(cone_lp_integral(0.5, 1.1).is_some());
        assert!(cone_lp_integral(0.5, 2.5).is_none());
    }

    #[test]
    fn area_matches_quadrature() {
        let c = cyl(0.6, 0.2);
        let n = 20000;
        let h = 2.0 / n as f64;
        let s: f64 = (0..n).map(|k| c.rho(-1.0 + (k as f64 + 0.5) * h) * h).sum();
        assert!((c.area() - 2.0 * std::f64::consts::PI * s).abs() < 1e-7);
    }

    proptest! {
        #[test]
        fn ricci_sup_bounded_by_inverse_ell(ell in 0.01f64..1.0, x in -1.0f64..1.0) {
            let c = cyl(1.0, ell);
            let v = c.ricci_eigenvalue(x).unwrap().abs();
            prop_assert!(v <= c.ricci_sup().unwrap() + 1e-12);
            prop_assert!(c.ricci_sup().unwrap() <= 1.0 / ell + 1e-12);
        }

        #[test]
        fn epsilon_below_upper_bound(ell in 0.001f64..0.75, kappa in 0.2f64..1.0) {
            prop_assert!(epsilon(ell, kappa) <= ell.powf(1.0 / kappa) * (1.0 + 1e-12));
        }
    }
}
