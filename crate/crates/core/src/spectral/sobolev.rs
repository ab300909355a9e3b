use super::{assemble_on, bonds, eigensolve, Boundary, Bundle, CovariantLaplacian};
use crate::error::Result;
use crate::field::LinkField;
use crate::geom::{MetricGrid, SurfaceComplex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SobolevMode {
    /// `‖df‖₁² / inf_a ‖f − a‖₂²`.
    S1,
    /// `‖df‖₁² / ‖f‖₂²` over `f` vanishing on the boundary.
    S2,
}

/// Upper estimate of a Sobolev constant with the function achieving it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SobolevEstimate {
    pub mode: SobolevMode,
    pub value: f64,
    pub face_mask: Vec<bool>,
    /// Values on the Laplacian nodes.
    pub witness: Vec<f64>,
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevOptions {
    pub modes: usize,
    pub random_starts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for SobolevOptions {
    fn default() -> Self {
        Self {
            modes: 24,
            random_starts: 8,
            iterations: 150,
            seed: 23,
        }
    }
}

/// Face area and its `(i, j, w)` bonds.
type FaceBonds = (f64, Vec<(usize, usize, f64)>);

/// Per-face energy terms used by `‖df‖₁ = Σ_f (A_f Σ_e w_e (Δ_e f)²)^{1/2}`.
struct FaceTerms {
    faces: Vec<FaceBonds>,
    mass: Vec<f64>,
    mode: SobolevMode,
}

impl FaceTerms {
    fn new(lap: &CovariantLaplacian, s: &SurfaceComplex, m: &MetricGrid, mode: SobolevMode) -> Self {
        let mut node_of = vec![usize::MAX; s.vertices.len()];
        for (k, &v) in lap.nodes.iter().enumerate() {
            node_of[v] = k;
        }
        let field = LinkField::identity(s);
        let mut per: std::collections::BTreeMap<usize, Vec<(usize, usize, f64)>> = Default::default();
        for b in bonds(&field, s, m, &lap.face_mask, &node_of) {
            per.entry(b.face).or_default().push((b.a, b.b, b.weight));
        }
        Self {
            faces: per.into_iter().map(|(f, v)| (m.face_area[f], v)).collect(),
            mass: lap.mass.clone(),
            mode,
        }
    }

    fn at(f: &[f64], k: usize) -> f64 {
        if k == usize::MAX {
            0.0
        } else {
            f[k]
        }
    }

    /// Ratio and its gradient with respect to nodal values.
    fn ratio(&self, f: &[f64]) -> (f64, Vec<f64>) {
        let mut grad_n = vec![0.0; f.len()];
        let mut n1 = 0.0;
        for (area, bonds) in &self.faces {
            let e: f64 = bonds
                .iter()
                .map(|&(a, b, w)| w * (Self::at(f, a) - Self::at(f, b)).powi(2))
                .sum();
            let q = (area * e).sqrt();
            n1 += q;
            if q > 1e-300 {
                for &(a, b, w) in bonds {
                    let d = area * w * (Self::at(f, a) - Self::at(f, b)) / q;
                    if a != usize::MAX {
                        grad_n[a] += d;
                    }
                    if b != usize::MAX {
                        grad_n[b] -= d;
                    }
                }
            }
        }
        let total: f64 = self.mass.iter().sum();
        let mean = match self.mode {
            SobolevMode::S1 => f.iter().zip(&self.mass).map(|(x, m)| x * m).sum::<f64>() / total,
            SobolevMode::S2 => 0.0,
        };
        let centered: Vec<f64> = f.iter().map(|x| x - mean).collect();
        let den: f64 = centered.iter().zip(&self.mass).map(|(x, m)| x * x * m).sum();
        let r = n1 * n1 / den;
        // The mean's own derivative drops out because Σ m (f − mean) = 0.
        let grad = grad_n
            .iter()
            .zip(&centered)
            .zip(&self.mass)
            .map(|((g, c), m)| 2.0 * n1 * g / den - r * 2.0 * m * c / den)
            .collect();
        (r, grad)
    }
}

fn boundary_of(mode: SobolevMode) -> Boundary {
    match mode {
        SobolevMode::S1 => Boundary::Neumann,
        SobolevMode::S2 => Boundary::Dirichlet,
    }
}

/// Multi-start gradient descent over combinations of low Laplacian modes.
pub fn estimate_sobolev(
    s: &SurfaceComplex,
    m: &MetricGrid,
    face_mask: &[bool],
    mode: SobolevMode,
    opts: &SobolevOptions,
) -> Result<SobolevEstimate> {
    let field = LinkField::identity(s);
    let lap = assemble_on(&field, s, m, Bundle::Functions, boundary_of(mode), face_mask)?;
    let sp = eigensolve(&lap, opts.modes + 1)?;
    let skip = usize::from(mode == SobolevMode::S1);
    let basis = &sp.vectors[skip..];
    let terms = FaceTerms::new(&lap, s, m, mode);
    let synth = |c: &[f64]| -> Vec<f64> {
        let mut f = vec![0.0; lap.dim()];
        for (ci, v) in c.iter().zip(basis) {
            for (a, b) in f.iter_mut().zip(v) {
                *a += ci * b;
            }
        }
        f
    };
    let nb = basis.len();
    let mut starts: Vec<Vec<f64>> = (0..nb.min(8))
        .map(|i| (0..nb).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_starts {
        starts.push((0..nb).map(|_| crate::su2::standard_normal(&mut rng)).collect());
    }
    let mut best = (f64::INFINITY, Vec::new());
    for mut c in starts {
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        c.iter_mut().for_each(|x| *x /= norm);
        let (mut r, mut gf) = terms.ratio(&synth(&c));
        let mut step = 0.1;
        for _ in 0..opts.iterations {
            let gc: Vec<f64> = basis.iter().map(|v| v.iter().zip(&gf).map(|(a, b)| a * b).sum()).collect();
            let gn = gc.iter().map(|x| x * x).sum::<f64>().sqrt();
            if gn < 1e-12 * r.max(1e-300) {
                break;
            }
            let mut accepted = false;
            for _ in 0..30 {
                let mut trial: Vec<f64> = c.iter().zip(&gc).map(|(a, g)| a - step * g / gn).collect();
                let tn = trial.iter().map(|x| x * x).sum::<f64>().sqrt();
                trial.iter_mut().for_each(|x| *x /= tn);
                let (rt, gt) = terms.ratio(&synth(&trial));
                if rt < r {
                    c = trial;
                    r = rt;
                    gf = gt;
                    step *= 1.5;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if r < best.0 {
            best = (r, c);
        }
    }
    let witness = synth(&best.1);
    Ok(SobolevEstimate {
        mode,
        value: terms.ratio(&witness).0,
        face_mask: lap.face_mask.clone(),
        witness,
        nodes: lap.nodes.clone(),
    })
}

impl SobolevEstimate {
    /// Re-evaluates the stored witness on the given mesh and metric.
    pub fn recheck(&self, s: &SurfaceComplex, m: &MetricGrid) -> Result<f64> {
        let lap = assemble_on(
            &LinkField::identity(s),
            s,
            m,
            Bundle::Functions,
            boundary_of(self.mode),
            &self.face_mask,
        )?;
        Ok(FaceTerms::new(&lap, s, m, self.mode).ratio(&self.witness).0)
    }
}
