//! Covariant Laplacians on functions and on `(ad E)₀`, eigen and heat solvers, and audits of
//! the eigenfunction, eigenvalue and Sobolev estimates.

pub mod audit;
pub mod heat;
pub mod sobolev;
pub mod sparse;

pub use audit::{
    growth_audit, kato_and_key_estimate_check, product_bound_check, sobolev_l4_check, sup_bound_audit,
    GrowthReport, KeyEstimateReport, ProductBound, SupBoundReport,
};
pub use heat::{heat_evolve, HeatResult};
pub use sobolev::{estimate_sobolev, SobolevEstimate, SobolevMode};
pub use sparse::CsrMatrix;

use crate::error::{Error, Result};
use crate::field::{connection_from_representation, LinkField, Representation};
use crate::geom::{build_surface, metric_for, MetricGrid, SurfaceComplex, SurfaceSpec};
use crate::su2::Alg;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sparse::{dense_eigs, shift_invert_eigs, KrylovOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bundle {
    Functions,
    AdE0,
}

impl Bundle {
    pub fn rank(self) -> usize {
        match self {
            Bundle::Functions => 1,
            Bundle::AdE0 => 3,
        }
    }
}

/// `Closed` and `Neumann` assemble the same natural operator; `Dirichlet` drops every vertex
/// touching a face outside the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Closed,
    Neumann,
    Dirichlet,
}

/// `Δ_A = D_A* D_A` as the pencil `K x = λ M x`, `M` the lumped vertex mass.
#[derive(Debug, Clone)]
pub struct CovariantLaplacian {
    pub bundle: Bundle,
    pub boundary: Boundary,
    pub stiffness: CsrMatrix,
    /// One entry per unknown.
    pub mass: Vec<f64>,
    /// Mesh vertex of each node; node `n` carries components `n*rank..(n+1)*rank`.
    pub nodes: Vec<usize>,
    pub face_mask: Vec<bool>,
    pub area: f64,
    /// Mesh spacing scale (largest chart step), used for discretization slack.
    pub h: f64,
}

impl CovariantLaplacian {
    pub fn rank(&self) -> usize {
        self.bundle.rank()
    }

    pub fn dim(&self) -> usize {
        self.mass.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.stiffness.mul_vec(x)
    }

    /// `Δφ = M⁻¹ K φ`.
    pub fn apply_operator(&self, x: &[f64]) -> Vec<f64> {
        self.stiffness
            .mul_vec(x)
            .iter()
            .zip(&self.mass)
            .map(|(a, m)| a / m)
            .collect()
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).zip(&self.mass).map(|((x, y), m)| x * y * m).sum()
    }

    pub fn norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).sqrt()
    }

    /// Pointwise fiber norms `|φ(v)|` per node.
    pub fn pointwise(&self, a: &[f64]) -> Vec<f64> {
        a.chunks(self.rank())
            .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect()
    }

    pub fn sup(&self, a: &[f64]) -> f64 {
        self.pointwise(a).into_iter().fold(0.0, f64::max)
    }

    /// Node mass (mass of any of its components).
    pub fn node_mass(&self) -> Vec<f64> {
        self.mass.iter().step_by(self.rank()).copied().collect()
    }
}

/// One pairwise term of the energy: nodes `(a, b)`, weight, transport `R` with
/// energy `w |φ_a − R φ_b|²`.
#[derive(Debug, Clone, Copy)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
    pub rot: [[f64; 3]; 3],
    /// Face the bond came from.
    pub face: usize,
}

/// Energy bonds of the masked faces, in node numbering; bonds to dropped vertices keep
/// `b` or `a` equal to `usize::MAX`.
pub fn bonds(
    field: &LinkField,
    s: &SurfaceComplex,
    m: &MetricGrid,
    face_mask: &[bool],
    node_of: &[usize],
) -> Vec<Bond> {
    let mut out = Vec::new();
    for (f, face) in s.faces.iter().enumerate() {
        if !face_mask[f] {
            continue;
        }
        for (slot, &(e, _)) in face.boundary.iter().enumerate() {
            let w = m.face_edge_weight[f][slot];
            if w == 0.0 {
                continue;
            }
            let ed = s.edges[e];
            out.push(Bond {
                a: node_of[ed.v0],
                b: node_of[ed.v1],
                weight: w,
                rot: field.links[e].rotation(),
                face: f,
            });
        }
    }
    out
}

/// Assembles on the active faces of `m`.
pub fn assemble_laplacian(
    field: &LinkField,
    s: &SurfaceComplex,
    m: &MetricGrid,
    bundle: Bundle,
    boundary: Boundary,
) -> Result<CovariantLaplacian> {
    assemble_on(field, s, m, bundle, boundary, &m.face_active.clone())
}

/// Assembles on an arbitrary subset of active faces.
pub fn assemble_on(
    field: &LinkField,
    s: &SurfaceComplex,
    m: &MetricGrid,
    bundle: Bundle,
    boundary: Boundary,
    face_mask: &[bool],
) -> Result<CovariantLaplacian> {
    if field.links.len() != s.edges.len() || m.face_area.len() != s.faces.len() {
        return Err(Error::Surface("field, metric and mesh sizes disagree".into()));
    }
    let mask: Vec<bool> = face_mask
        .iter()
        .zip(&m.face_active)
        .map(|(&a, &b)| a && b)
        .collect();
    let nv = s.vertices.len();
    let mut touched = vec![false; nv];
    let mut outside = vec![false; nv];
    for (f, face) in s.faces.iter().enumerate() {
        for &v in &face.corners {
            if mask[f] {
                touched[v] = true;
            } else {
                outside[v] = true;
            }
        }
    }
    let keep: Vec<bool> = (0..nv)
        .map(|v| touched[v] && !(boundary == Boundary::Dirichlet && outside[v]))
        .collect();
    let mut node_of = vec![usize::MAX; nv];
    let mut nodes = Vec::new();
    for v in 0..nv {
        if keep[v] {
            node_of[v] = nodes.len();
            nodes.push(v);
        }
    }
    if nodes.is_empty() {
        return Err(Error::Surface("empty Laplacian domain".into()));
    }
    let r = bundle.rank();
    let mut node_mass = vec![0.0; nodes.len()];
    let mut area = 0.0;
    for (f, face) in s.faces.iter().enumerate() {
        if mask[f] {
            area += m.face_area[f];
            for &v in &face.corners {
                if keep[v] {
                    node_mass[node_of[v]] += 0.25 * m.face_area[f];
                }
            }
        }
    }
    let mut trips = Vec::new();
    for b in bonds(field, s, m, &mask, &node_of) {
        let w = b.weight;
        let (ka, kb) = (b.a != usize::MAX, b.b != usize::MAX);
        // w (φ_a − R φ_b)ᵀ(φ_a − R φ_b).
        for i in 0..r {
            if ka {
                trips.push((b.a * r + i, b.a * r + i, w));
            }
            if kb {
                trips.push((b.b * r + i, b.b * r + i, w));
            }
            if ka && kb {
                for j in 0..r {
                    let rij = match bundle {
                        Bundle::Functions => 1.0,
                        Bundle::AdE0 => b.rot[i][j],
                    };
                    if rij != 0.0 {
                        trips.push((b.a * r + i, b.b * r + j, -w * rij));
                        trips.push((b.b * r + j, b.a * r + i, -w * rij));
                    }
                }
            }
        }
    }
    let n = nodes.len() * r;
    let stiffness = CsrMatrix::from_triplets(n, trips);
    let mass = node_mass.iter().flat_map(|&x| std::iter::repeat_n(x, r)).collect();
    let h = s
        .charts
        .iter()
        .map(|c| c.hx.max(c.hy))
        .fold(0.0, f64::max);
    Ok(CovariantLaplacian {
        bundle,
        boundary,
        stiffness,
        mass,
        nodes,
        face_mask: mask,
        area,
        h,
    })
}

/// Eigenpairs with `‖φ‖₂ = 1` in the mass inner product.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub sup_norms: Vec<f64>,
    pub max_residual: f64,
    pub orthonormality: f64,
}

impl Spectrum {
    pub fn multiplicity(&self, value: f64, tol: f64) -> usize {
        self.values.iter().filter(|&&v| (v - value).abs() <= tol).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Dense solver at or below this many unknowns.
    pub dense_limit: usize,
    pub krylov: KrylovOptions,
    pub residual_tol: f64,
    pub orth_tol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            dense_limit: 1600,
            krylov: KrylovOptions::default(),
            residual_tol: 1e-8,
            orth_tol: 1e-10,
        }
    }
}

pub fn eigensolve(lap: &CovariantLaplacian, k: usize) -> Result<Spectrum> {
    eigensolve_with(lap, k, &EigenOptions::default())
}

pub fn eigensolve_with(lap: &CovariantLaplacian, k: usize, opts: &EigenOptions) -> Result<Spectrum> {
    let n = lap.dim();
    let k = k.min(n);
    let pairs = if n <= opts.dense_limit {
        dense_eigs(&lap.stiffness, &lap.mass, k)
    } else {
        let scale = (0..n)
            .map(|i| lap.stiffness.get(i, i) / lap.mass[i])
            .fold(0.0, f64::max);
        shift_invert_eigs(&lap.stiffness, &lap.mass, k, -1e-3 * scale, &opts.krylov)?
    };
    let mut max_residual: f64 = 0.0;
    for (v, x) in pairs.values.iter().zip(&pairs.vectors) {
        let r: Vec<f64> = lap
            .apply_operator(x)
            .iter()
            .zip(x)
            .map(|(a, b)| a - v * b)
            .collect();
        max_residual = max_residual.max(lap.norm(&r));
    }
    let mut orth: f64 = 0.0;
    for i in 0..pairs.vectors.len() {
        for j in 0..=i {
            let d = lap.inner(&pairs.vectors[i], &pairs.vectors[j]);
            orth = orth.max((d - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    if max_residual > opts.residual_tol || orth > opts.orth_tol {
        return Err(Error::NoConvergence(format!(
            "eigensolve: residual {max_residual:.3e}, orthonormality {orth:.3e}"
        )));
    }
    Ok(Spectrum {
        sup_norms: pairs.vectors.iter().map(|x| lap.sup(x)).collect(),
        values: pairs.values,
        vectors: pairs.vectors,
        max_residual,
        orthonormality: orth,
    })
}

/// Random combinations of the first `modes` eigensections, normalized in L².
pub fn band_limited(lap: &CovariantLaplacian, spectrum: &Spectrum, modes: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = modes.min(spectrum.vectors.len());
    (0..count)
        .map(|_| {
            let mut x = vec![0.0; lap.dim()];
            for v in &spectrum.vectors[..modes] {
                let c = crate::su2::standard_normal(&mut rng);
                for (a, b) in x.iter_mut().zip(v) {
                    *a += c * b;
                }
            }
            let nrm = lap.norm(&x);
            x.iter_mut().for_each(|a| *a /= nrm);
            x
        })
        .collect()
}

/// Section of a rank-3 bundle from a per-vertex algebra field.
pub fn section_from_alg(lap: &CovariantLaplacian, f: impl Fn(usize) -> Alg) -> Vec<f64> {
    lap.nodes.iter().flat_map(|&v| f(v).0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub ell: f64,
    pub lambda1: f64,
}

/// `λ₁` of `Δ_A` on `(ad E)₀` along a decreasing `ℓ` sequence for the flat connection realizing
/// `rep`.
pub fn lambda1_sweep(
    rep: &Representation,
    spec: SurfaceSpec,
    kappa: f64,
    ells: &[f64],
) -> Result<Vec<SweepPoint>> {
    if ells.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("ell sequence must be decreasing".into()));
    }
    let s = build_surface(spec)?;
    let field = connection_from_representation(rep, &s)?;
    ells.iter()
        .map(|&ell| {
            let m = metric_for(&s, ell, kappa)?;
            let lap = assemble_laplacian(&field, &s, &m, Bundle::AdE0, Boundary::Closed)?;
            let sp = eigensolve(&lap, 1)?;
            Ok(SweepPoint {
                ell,
                lambda1: sp.values[0].max(0.0),
            })
        })
        .collect()
}
