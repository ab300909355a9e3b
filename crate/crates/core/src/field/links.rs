use crate::error::{Error, Result};
use crate::geom::{Step, SurfaceComplex};
use crate::su2::{Alg, Su2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// One SU(2) matrix per edge, oriented `v0 -> v1`; the reversed edge carries the inverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkField {
    pub links: Vec<Su2>,
    /// Holonomy weight pinned at each puncture of the surface.
    pub puncture_weights: Vec<f64>,
}

impl LinkField {
    pub fn identity(s: &SurfaceComplex) -> Self {
        Self {
            links: vec![Su2::IDENTITY; s.edges.len()],
            puncture_weights: vec![0.0; s.punctures.len()],
        }
    }

    /// Links `exp(ε ξ)` with `ξ` uniform in the unit cube, from a seeded stream.
    pub fn random_near_identity(s: &SurfaceComplex, eps: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            links: (0..s.edges.len())
                .map(|_| Su2::exp(Alg::random(&mut rng).scale(eps)))
                .collect(),
            puncture_weights: vec![0.0; s.punctures.len()],
        }
    }

    pub fn random_haar(s: &SurfaceComplex, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            links: (0..s.edges.len()).map(|_| Su2::random(&mut rng)).collect(),
            puncture_weights: vec![0.0; s.punctures.len()],
        }
    }

    #[inline]
    pub fn step(&self, st: Step) -> Su2 {
        let u = self.links[st.0];
        if st.1 > 0 {
            u
        } else {
            u.inv()
        }
    }

    /// Ordered product along a path, left to right.
    pub fn holonomy(&self, s: &SurfaceComplex, path: &[Step]) -> Result<Su2> {
        s.check_contiguous(path)?;
        Ok(self.product(path))
    }

    /// Ordered product without the contiguity check.
    #[inline]
    pub fn product(&self, path: &[Step]) -> Su2 {
        path.iter()
            .fold(Su2::IDENTITY, |acc, &st| acc * self.step(st))
    }

    /// `U'(e) = g(v0) U(e) g(v1)⁻¹`.
    pub fn gauge_transform(&self, s: &SurfaceComplex, g: &[Su2]) -> LinkField {
        let links = s
            .edges
            .iter()
            .zip(&self.links)
            .map(|(e, &u)| (g[e.v0] * u * g[e.v1].inv()).normalized())
            .collect();
        LinkField {
            links,
            puncture_weights: self.puncture_weights.clone(),
        }
    }

    pub fn renormalize(&mut self) {
        for u in &mut self.links {
            *u = u.normalized();
        }
    }

    /// CSV with columns `edge,q0,q1,q2,q3`; puncture weights go in rows with edge `w<k>`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["edge", "q0", "q1", "q2", "q3"])?;
        for (e, u) in self.links.iter().enumerate() {
            let mut rec = vec![e.to_string()];
            rec.extend(u.0.iter().map(|q| format!("{q:.17e}")));
            wr.write_record(&rec)?;
        }
        for (k, w) in self.puncture_weights.iter().enumerate() {
            wr.write_record([format!("w{k}"), format!("{w:.17e}"), "0".into(), "0".into(), "0".into()])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut links = Vec::new();
        let mut puncture_weights = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let num = |k: usize| -> Result<f64> {
                rec.get(k)
                    .and_then(|x| x.parse().ok())
                    .ok_or_else(|| Error::Config(format!("bad link record {rec:?}")))
            };
            let id = rec.get(0).unwrap_or("");
            if let Some(k) = id.strip_prefix('w') {
                if k.parse::<usize>().ok() != Some(puncture_weights.len()) {
                    return Err(Error::Config(format!("puncture weight {id} out of order")));
                }
                puncture_weights.push(num(1)?);
            } else {
                if id.parse::<usize>().ok() != Some(links.len()) {
                    return Err(Error::Config(format!("edge {id} out of order")));
                }
                links.push(Su2::new(num(1)?, num(2)?, num(3)?, num(4)?));
            }
        }
        Ok(Self {
            links,
            puncture_weights,
        })
    }

    pub fn max_unitarity_defect(&self) -> f64 {
        self.links
            .iter()
            .map(|u| u.unitarity_defect())
            .fold(0.0, f64::max)
    }
}

pub fn random_gauge(s: &SurfaceComplex, seed: u64) -> Vec<Su2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..s.vertices.len()).map(|_| Su2::random(&mut rng)).collect()
}
