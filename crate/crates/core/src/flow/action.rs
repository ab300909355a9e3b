use crate::error::Result;
use crate::field::curvature::{effective_from_product, plaquettes, Plaquette};
use crate::field::LinkField;
use crate::geom::{MetricGrid, SurfaceComplex};
use crate::su2::{Alg, Su2};
use rayon::prelude::*;

/// Discrete Yang–Mills problem: the plaquettes entering the action and the Hodge weights
/// defining the L² metric on link tangents.
#[derive(Debug, Clone)]
pub struct YmProblem {
    pub pls: Vec<Plaquette>,
    pub weight: Vec<f64>,
    /// Edges touched by no active plaquette stay fixed.
    pub movable: Vec<bool>,
}

/// Action, Euclidean derivative and curvature at one field.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub action: f64,
    /// `∂S/∂η_e` for left variations `U_e -> exp(η) U_e`.
    pub derivative: Vec<Alg>,
    pub xi: Vec<Alg>,
    pub sup_f: f64,
}

impl YmProblem {
    pub fn new(s: &SurfaceComplex, m: &MetricGrid, field: &LinkField, virtual_weights: &[f64]) -> Self {
        let pls = plaquettes(s, m, field, virtual_weights);
        Self::from_plaquettes(pls, m.edge_weight.clone())
    }

    pub fn from_plaquettes(pls: Vec<Plaquette>, weight: Vec<f64>) -> Self {
        let mut movable = vec![false; weight.len()];
        for pl in &pls {
            for &(e, _) in &pl.boundary {
                movable[e] = weight[e] > 0.0;
            }
        }
        Self {
            pls,
            weight,
            movable,
        }
    }

    /// `YM = Σ ‖ξ‖_F² / area`.
    pub fn action(&self, field: &LinkField) -> Result<f64> {
        let terms: Vec<f64> = self
            .pls
            .par_iter()
            .enumerate()
            .map(|(k, pl)| {
                let xi = effective_from_product(field.product(&pl.boundary), pl.pin, pl.face.unwrap_or(k))?;
                Ok(2.0 * xi.norm_sq() / pl.area)
            })
            .collect::<Result<_>>()?;
        Ok(terms.iter().sum())
    }

    pub fn evaluate(&self, field: &LinkField) -> Result<Evaluation> {
        type Contribution = (f64, Alg, f64, Vec<(usize, Alg)>);
        let per: Vec<Contribution> = self
            .pls
            .par_iter()
            .enumerate()
            .map(|(k, pl)| {
                let mut prefix = Vec::with_capacity(pl.boundary.len());
                let mut acc = Su2::IDENTITY;
                for &st in &pl.boundary {
                    prefix.push(acc);
                    acc = acc * field.step(st);
                }
                let xi = effective_from_product(acc, pl.pin, pl.face.unwrap_or(k))?;
                let c = 4.0 / pl.area;
                let contrib = pl
                    .boundary
                    .iter()
                    .zip(&prefix)
                    .map(|(&(e, sg), &l)| {
                        let m = if sg > 0 { l } else { l * field.links[e].inv() };
                        (e, m.inv().adjoint(&xi).scale(c * sg as f64))
                    })
                    .collect();
                Ok((2.0 * xi.norm_sq() / pl.area, xi, xi.frobenius() / pl.area, contrib))
            })
            .collect::<Result<_>>()?;
        let mut derivative = vec![Alg::ZERO; self.weight.len()];
        let mut action = 0.0;
        let mut sup_f: f64 = 0.0;
        let mut xis = Vec::with_capacity(per.len());
        for (a, xi, d, contrib) in per {
            action += a;
            sup_f = sup_f.max(d);
            xis.push(xi);
            for (e, g) in contrib {
                derivative[e] = derivative[e] + g;
            }
        }
        Ok(Evaluation {
            action,
            derivative,
            xi: xis,
            sup_f,
        })
    }

    /// Riemannian gradient `G_e = D_e / (2 w_e)` for the metric `Σ w_e ‖X_e‖_F²`.
    pub fn riemannian(&self, derivative: &[Alg]) -> Vec<Alg> {
        derivative
            .iter()
            .zip(&self.weight)
            .zip(&self.movable)
            .map(|((d, &w), &mv)| if mv { d.scale(0.5 / w) } else { Alg::ZERO })
            .collect()
    }

    /// `‖grad‖` in the L² metric.
    pub fn gradient_norm(&self, derivative: &[Alg]) -> f64 {
        derivative
            .iter()
            .zip(&self.weight)
            .zip(&self.movable)
            .filter(|(_, &mv)| mv)
            .map(|((d, &w), _)| d.norm_sq() / (2.0 * w))
            .sum::<f64>()
            .sqrt()
    }

    /// Gershgorin bound on the largest eigenvalue of the linearized gradient.
    pub fn stiffness_bound(&self) -> f64 {
        let mut row = vec![0.0; self.weight.len()];
        for pl in &self.pls {
            let c = 4.0 * pl.boundary.len() as f64 / pl.area;
            for &(e, _) in &pl.boundary {
                row[e] += c;
            }
        }
        row.iter()
            .zip(&self.weight)
            .zip(&self.movable)
            .filter(|(_, &mv)| mv)
            .map(|((r, w), _)| r / (2.0 * w))
            .fold(0.0, f64::max)
    }
}

/// `U_e <- exp(-dt G_e) U_e` on every movable edge.
pub fn step_field(field: &LinkField, dir: &[Alg], dt: f64) -> LinkField {
    let links = field
        .links
        .par_iter()
        .zip(dir)
        .map(|(&u, g)| {
            if g.0 == [0.0; 3] {
                u
            } else {
                (Su2::exp(g.scale(-dt)) * u).normalized()
            }
        })
        .collect();
    LinkField {
        links,
        puncture_weights: field.puncture_weights.clone(),
    }
}

pub fn ym_action(field: &LinkField, s: &SurfaceComplex, m: &MetricGrid) -> Result<f64> {
    YmProblem::new(s, m, field, &[]).action(field)
}

/// Riemannian gradient of the action, one algebra element per edge.
pub fn ym_gradient(field: &LinkField, s: &SurfaceComplex, m: &MetricGrid) -> Result<Vec<Alg>> {
    let p = YmProblem::new(s, m, field, &[]);
    let ev = p.evaluate(field)?;
    Ok(p.riemannian(&ev.derivative))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{build_surface, metric_for, SurfaceSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flat_field_is_critical() {
        let s = build_surface(SurfaceSpec::torus(8)).unwrap();
        let m = metric_for(&s, 1.0, 1.0).unwrap();
        let f = LinkField::identity(&s);
        assert_eq!(ym_action(&f, &s, &m).unwrap(), 0.0);
        assert!(ym_gradient(&f, &s, &m).unwrap().iter().all(|g| g.norm() == 0.0));
    }

    fn perturbed(f: &LinkField, dir: &[Alg], h: f64) -> LinkField {
        LinkField {
            links: f
                .links
                .iter()
                .zip(dir)
                .map(|(&u, d)| Su2::exp(d.scale(h)) * u)
                .collect(),
            puncture_weights: f.puncture_weights.clone(),
        }
    }

    #[test]
    fn derivative_matches_central_differences() {
        let s = build_surface(SurfaceSpec::genus2(16, 6)).unwrap();
        let m = metric_for(&s, 0.3, 0.7).unwrap();
        let mut f = LinkField::random_near_identity(&s, 0.3, 11);
        f.puncture_weights[0] = 0.2;
        let p = YmProblem::new(&s, &m, &f, &[]);
        let ev = p.evaluate(&f).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let dir: Vec<Alg> = (0..s.edges.len()).map(|_| Alg::random(&mut rng)).collect();
            let h = 1e-5;
            let fd = (p.action(&perturbed(&f, &dir, h)).unwrap()
                - p.action(&perturbed(&f, &dir, -h)).unwrap())
                / (2.0 * h);
            let an: f64 = ev.derivative.iter().zip(&dir).map(|(a, b)| a.dot(b)).sum();
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "{fd} vs {an}");
        }
    }

    #[test]
    fn abelian_action_closed_form() {
        let s = build_surface(SurfaceSpec::torus(4)).unwrap();
        let m = metric_for(&s, 1.0, 1.0).unwrap();
        let mut f = LinkField::identity(&s);
        let (e, sg) = s.faces[5].boundary[0];
        f.links[e] = Su2::diag(0.1 * sg as f64);
        // The edge sits in two faces with opposite orientation: angle ±0.1 in each.
        let expected = 2.0 * 2.0 * 0.01 / (1.0 / 16.0);
        assert!((ym_action(&f, &s, &m).unwrap() - expected).abs() < 1e-12);
    }
}
