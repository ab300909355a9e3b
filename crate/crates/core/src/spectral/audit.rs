use super::{bonds, CovariantLaplacian, Spectrum};
use crate::field::LinkField;
use crate::geom::{MetricGrid, SurfaceComplex};
use serde::{Deserialize, Serialize};

/// Per-eigensection ratio `‖φ‖∞² / ((𝔞⁻¹ + (4λ/𝔰₁)² 𝔞) ‖φ‖₂²)`; the minimal constant is the largest
/// ratio. With Dirichlet data the denominator is `(4λ/𝔰₂)² 𝔞 ‖φ‖₂²`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupBoundReport {
    pub ratios: Vec<f64>,
    pub c_min: f64,
}

pub fn sup_bound_audit(spectrum: &Spectrum, area: f64, sobolev: f64, dirichlet: bool) -> SupBoundReport {
    let ratios: Vec<f64> = spectrum
        .values
        .iter()
        .zip(&spectrum.sup_norms)
        .map(|(&lam, &sup)| {
            let lam = lam.max(0.0);
            let q = (4.0 * lam / sobolev).powi(2) * area;
            let denom = if dirichlet { q } else { 1.0 / area + q };
            sup * sup / denom
        })
        .collect();
    SupBoundReport {
        c_min: ratios.iter().copied().fold(0.0, f64::max),
        ratios,
    }
}

/// Constants of `‖φ‖∞ ≤ C₁ + C₂ λ⁵` fitted on a reference family: `C₁` twice the largest sup
/// norm with `λ ≤ 1`, `C₂` twice the largest remaining excess over `λ⁵`.
pub fn fit_sup_polynomial(samples: &[(f64, f64)]) -> (f64, f64) {
    let c1 = 2.0
        * samples
            .iter()
            .filter(|(l, _)| *l <= 1.0)
            .map(|&(_, s)| s)
            .fold(0.0, f64::max);
    let c2 = 2.0
        * samples
            .iter()
            .filter(|(l, _)| *l > 1.0)
            .map(|&(l, s)| ((s - c1) / l.powi(5)).max(0.0))
            .fold(0.0, f64::max);
    (c1, c2)
}

/// Smallest `C` with `k ≤ C rk V (1 + 4λ_k 𝔞/𝔰₁)³` (or `(4μ_k 𝔞/𝔰₂)³` with Dirichlet data), and the
/// largest `C'` with `λ_k ≥ C' k^{1/3}` over `k ∈ k_range`. Eigenvalues are indexed from 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthReport {
    pub c_min: f64,
    pub c_prime: f64,
}

pub fn growth_audit(
    values: &[f64],
    rank: usize,
    area: f64,
    sobolev: f64,
    dirichlet: bool,
    k_range: (usize, usize),
) -> GrowthReport {
    let mut c_min: f64 = 0.0;
    for (i, &lam) in values.iter().enumerate() {
        let k = (i + 1) as f64;
        let lam = lam.max(0.0);
        let base = if dirichlet {
            4.0 * lam * area / sobolev
        } else {
            1.0 + 4.0 * lam * area / sobolev
        };
        c_min = c_min.max(k / (rank as f64 * base.powi(3)));
    }
    let c_prime = (k_range.0..=k_range.1.min(values.len()))
        .map(|k| values[k - 1] / (k as f64).cbrt())
        .fold(f64::INFINITY, f64::min);
    GrowthReport { c_min, c_prime }
}

/// Both sides of `∫|φ|^{2α−2}⟨φ, Δφ⟩ ≥ ((2α−1)/α²) ∫|d|φ|^α|²` on the mesh.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KeyEstimateReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

pub fn kato_and_key_estimate_check(
    lap: &CovariantLaplacian,
    field: &LinkField,
    s: &SurfaceComplex,
    m: &MetricGrid,
    section: &[f64],
    alpha: f64,
) -> KeyEstimateReport {
    let r = lap.rank();
    let mod_: Vec<f64> = lap.pointwise(section);
    let ksec = lap.apply(section);
    let lhs: f64 = section
        .chunks(r)
        .zip(ksec.chunks(r))
        .zip(&mod_)
        .map(|((p, kp), &n)| {
            let ip: f64 = p.iter().zip(kp).map(|(a, b)| a * b).sum();
            if n == 0.0 {
                0.0
            } else {
                n.powf(2.0 * alpha - 2.0) * ip
            }
        })
        .sum();
    let mut node_of = vec![usize::MAX; s.vertices.len()];
    for (k, &v) in lap.nodes.iter().enumerate() {
        node_of[v] = k;
    }
    let pw = |k: usize| if k == usize::MAX { 0.0 } else { mod_[k].powf(alpha) };
    let grad: f64 = bonds(field, s, m, &lap.face_mask, &node_of)
        .iter()
        .map(|b| b.weight * (pw(b.a) - pw(b.b)).powi(2))
        .sum();
    let rhs = (2.0 * alpha - 1.0) / (alpha * alpha) * grad;
    let slack = 1.0 - 10.0 * lap.h;
    KeyEstimateReport {
        lhs,
        rhs,
        slack,
        holds: lhs >= slack * rhs,
    }
}

/// Finite product `Π_{j=0}^{terms} (1 + γβ^{2j}/(2β^j − 1))^{1/β^j}` and its
/// bound `C(β)(1 + γ^{β/(β−1)})`, both in log form.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProductBound {
    pub log_lhs: f64,
    pub log_rhs: f64,
    pub holds: bool,
}

/// `ln Π_{j=0}^{terms} (1 + γβ^{2j}/(2β^j − 1))^{1/β^j}`.
pub fn log_product(gamma: f64, beta: f64, terms: usize) -> f64 {
    let lb = beta.ln();
    (0..=terms)
        .map(|j| {
            let j = j as f64;
            if gamma == 0.0 {
                return 0.0;
            }
            // ln x with x = γβ^{2j}/(2β^j − 1), evaluated without forming β^{2j}.
            let ln_den = j * lb + (2.0 - (-j * lb).exp()).ln();
            let ln_x = gamma.ln() + 2.0 * j * lb - ln_den;
            let ln_1px = if ln_x > 0.0 {
                ln_x + (-ln_x).exp().ln_1p()
            } else {
                ln_x.exp().ln_1p()
            };
            ln_1px * (-j * lb).exp()
        })
        .sum()
}

/// `ln C(β)`: the largest `ln Π − ln(1 + γ^{β/(β−1)})` over a logarithmic grid of `γ`.
pub fn fit_product_constant(beta: f64, terms: usize, gammas: &[f64]) -> f64 {
    let p = beta / (beta - 1.0);
    gammas
        .iter()
        .map(|&g| log_product(g, beta, terms) - (p * g.ln()).exp().ln_1p())
        .fold(0.0, f64::max)
}

pub fn product_bound_check(gamma: f64, beta: f64, terms: usize, log_c: f64) -> ProductBound {
    let log_lhs = log_product(gamma, beta, terms);
    let p = beta / (beta - 1.0);
    let log_rhs = log_c
        + if gamma > 0.0 {
            (p * gamma.ln()).exp().ln_1p()
        } else {
            0.0
        };
    ProductBound {
        log_lhs,
        log_rhs,
        holds: log_lhs <= log_rhs + 1e-12,
    }
}

/// `max ‖f‖₄² / (‖df‖₂² + ‖f‖₂²)` over the given functions (rank-1 Laplacian).
pub fn sobolev_l4_check(lap: &CovariantLaplacian, functions: &[Vec<f64>]) -> f64 {
    functions
        .iter()
        .map(|f| l4_ratio(lap, f))
        .fold(0.0, f64::max)
}

pub fn l4_ratio(lap: &CovariantLaplacian, f: &[f64]) -> f64 {
    let l4: f64 = f.iter().zip(&lap.mass).map(|(x, m)| m * x.powi(4)).sum::<f64>().sqrt();
    let df: f64 = lap.apply(f).iter().zip(f).map(|(a, b)| a * b).sum();
    l4 / (df + lap.inner(f, f))
}
