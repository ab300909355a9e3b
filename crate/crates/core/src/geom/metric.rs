use super::conic::rho_sq;
use super::surface::{ChartKind, Path, SurfaceComplex};
use crate::error::{check_range, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Disk bounded by a node ring at `ℓ = 0`; acts as a puncture for the component it bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualFace {
    pub boundary: Path,
    pub area: f64,
    pub component: usize,
}

/// Discrete metric data: face areas, Hodge edge weights (dual length over length) and
/// vertex masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricGrid {
    pub ell: f64,
    pub kappa: f64,
    pub face_area: Vec<f64>,
    pub face_active: Vec<bool>,
    /// `ρ²` at the face center (1 on torus charts).
    pub face_conformal: Vec<f64>,
    pub edge_weight: Vec<f64>,
    /// Per-face share of the edge weights, in boundary order (bottom, right, top, left).
    pub face_edge_weight: Vec<[f64; 4]>,
    pub vertex_mass: Vec<f64>,
    pub vertex_active: Vec<bool>,
    pub face_component: Vec<usize>,
    pub vertex_component: Vec<usize>,
    pub n_components: usize,
    pub virtual_faces: Vec<VirtualFace>,
    pub total_area: f64,
}

const GAUSS2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

fn rho(ell: f64, kappa: f64, x: f64) -> f64 {
    rho_sq(ell, kappa, x).sqrt()
}

/// Builds the metric `σ(ℓ)` on the surface; torus charts stay flat for every `ℓ`.
pub fn metric_for(s: &SurfaceComplex, ell: f64, kappa: f64) -> Result<MetricGrid> {
    check_range("ell", ell, 0.0, 1.0, "[0, 1]")?;
    check_range("kappa", kappa, f64::MIN_POSITIVE, 1.0, "(0, 1]")?;
    let nf = s.faces.len();
    let mut face_area = vec![0.0; nf];
    let mut face_active = vec![true; nf];
    let mut face_conformal = vec![1.0; nf];
    let mut edge_weight = vec![0.0; s.edges.len()];
    let mut face_edge_weight = vec![[0.0; 4]; nf];
    let mut vertex_mass = vec![0.0; s.vertices.len()];

    for (k, f) in s.faces.iter().enumerate() {
        let ch = &s.charts[f.chart];
        let (hx, hy) = (ch.hx, ch.hy);
        let (area, wx, wy0, wy1, conf) = match ch.kind {
            ChartKind::Torus => (hx * hy, 0.5 * hy / hx, 0.5 * hx / hy, 0.5 * hx / hy, 1.0),
            ChartKind::Cylinder => {
                if ell == 0.0 && (f.i + 1 == ch.ni / 2 || f.i == ch.ni / 2) {
                    face_active[k] = false;
                    let xl = ch.x(f.i);
                    let area = hy
                        * 0.5
                        * hx
                        * GAUSS2
                            .iter()
                            .map(|g| rho(ell, kappa, xl + 0.5 * hx * (1.0 + g)))
                            .sum::<f64>();
                    face_area[k] = area;
                    continue;
                }
                let xl = ch.x(f.i);
                let xr = xl + hx;
                let xm = xl + 0.5 * hx;
                let area = hy
                    * 0.5
                    * hx
                    * GAUSS2
                        .iter()
                        .map(|g| rho(ell, kappa, xm + 0.5 * hx * g))
                        .sum::<f64>();
                (
                    area,
                    rho(ell, kappa, xm) * 0.5 * hy / hx,
                    0.5 * hx / (rho(ell, kappa, xl) * hy),
                    0.5 * hx / (rho(ell, kappa, xr) * hy),
                    rho_sq(ell, kappa, xm),
                )
            }
        };
        face_area[k] = area;
        face_conformal[k] = conf;
        face_edge_weight[k] = [wx, wy1, wx, wy0];
        edge_weight[f.boundary[0].0] += wx;
        edge_weight[f.boundary[2].0] += wx;
        edge_weight[f.boundary[1].0] += wy1;
        edge_weight[f.boundary[3].0] += wy0;
        for &v in &f.corners {
            vertex_mass[v] += 0.25 * area;
        }
    }

    let mut vertex_active = vec![false; s.vertices.len()];
    for (k, f) in s.faces.iter().enumerate() {
        if face_active[k] {
            for &v in &f.corners {
                vertex_active[v] = true;
            }
        }
    }

    // Components of active faces glued along shared edges.
    let mut uf = UnionFind::new(nf);
    let ef = s.edge_faces();
    for fs in &ef {
        let act: Vec<usize> = fs.iter().copied().filter(|&f| face_active[f]).collect();
        for w in act.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    let mut label = vec![usize::MAX; nf];
    let mut n_components = 0;
    let mut face_component = vec![usize::MAX; nf];
    for f in 0..nf {
        if !face_active[f] {
            continue;
        }
        let r = uf.find(f);
        if label[r] == usize::MAX {
            label[r] = n_components;
            n_components += 1;
        }
        face_component[f] = label[r];
    }
    let mut vertex_component = vec![usize::MAX; s.vertices.len()];
    for (k, f) in s.faces.iter().enumerate() {
        if face_active[k] {
            for &v in &f.corners {
                vertex_component[v] = face_component[k];
            }
        }
    }

    let mut virtual_faces = Vec::new();
    if ell == 0.0 {
        if let Some(p) = &s.pinch {
            let mid = p.nx / 2;
            let removed = |i: usize| -> f64 {
                s.faces
                    .iter()
                    .enumerate()
                    .filter(|(_, f)| f.chart == p.chart && f.i == i)
                    .map(|(k, _)| face_area[k])
                    .sum()
            };
            let left: Path = (0..p.ny)
                .rev()
                .map(|j| (p.y_edges[mid - 1][j].0, -p.y_edges[mid - 1][j].1))
                .collect();
            let right: Path = (0..p.ny).map(|j| p.y_edges[mid + 1][j]).collect();
            let comp_of = |i: usize| -> usize {
                s.faces
                    .iter()
                    .enumerate()
                    .find(|(_, f)| f.chart == p.chart && f.i == i)
                    .map(|(k, _)| face_component[k])
                    .unwrap_or(usize::MAX)
            };
            virtual_faces.push(VirtualFace {
                boundary: left,
                area: removed(mid - 1),
                component: comp_of(mid - 2),
            });
            virtual_faces.push(VirtualFace {
                boundary: right,
                area: removed(mid),
                component: comp_of(mid + 1),
            });
        }
    }

    let total_area = face_area
        .iter()
        .zip(&face_active)
        .filter(|(_, &a)| a)
        .map(|(a, _)| a)
        .sum();
    Ok(MetricGrid {
        ell,
        kappa,
        face_area,
        face_active,
        face_conformal,
        edge_weight,
        face_edge_weight,
        vertex_mass,
        vertex_active,
        face_component,
        vertex_component,
        n_components,
        virtual_faces,
        total_area,
    })
}

impl MetricGrid {
    /// CSV with columns `chart,i,j,area`.
    pub fn write_csv<W: Write>(&self, s: &SurfaceComplex, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["chart", "i", "j", "area"])?;
        for (k, f) in s.faces.iter().enumerate() {
            wr.write_record([
                s.charts[f.chart].name.clone(),
                f.i.to_string(),
                f.j.to_string(),
                format!("{:.17e}", if self.face_active[k] { self.face_area[k] } else { 0.0 }),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Area of one connected component.
    pub fn component_area(&self, c: usize) -> f64 {
        self.face_area
            .iter()
            .zip(&self.face_component)
            .filter(|(_, &k)| k == c)
            .map(|(a, _)| a)
            .sum()
    }

    /// The metric restricted to one component: all other faces inactive.
    pub fn restrict(&self, component: usize) -> MetricGrid {
        let mut m = self.clone();
        for f in 0..m.face_active.len() {
            if m.face_component[f] != component {
                m.face_active[f] = false;
            }
        }
        for v in 0..m.vertex_active.len() {
            if m.vertex_component[v] != component {
                m.vertex_active[v] = false;
            }
        }
        m.virtual_faces.retain(|vf| vf.component == component);
        m.total_area = m.component_area(component);
        m.n_components = 1;
        m
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::conic::sqrt_quadratic_integral;
    use crate::geom::surface::{build_surface, SurfaceSpec};

    #[test]
    fn flat_torus_weights_are_one() {
        let s = build_surface(SurfaceSpec::torus(8)).unwrap();
        let m = metric_for(&s, 1.0, 1.0).unwrap();
        assert!(m.edge_weight.iter().all(|&w| (w - 1.0).abs() < 1e-14));
        assert!((m.total_area - 1.0).abs() < 1e-14);
        assert!(m.vertex_mass.iter().all(|&a| (a - 1.0 / 64.0).abs() < 1e-16));
        assert_eq!(m.n_components, 1);
    }

    #[test]
    fn rebuild_is_bit_identical() {
        let s = build_surface(SurfaceSpec::genus2(16, 8)).unwrap();
        let a = metric_for(&s, 0.3, 0.6).unwrap();
        let b = metric_for(&s, 0.3, 0.6).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn off_cylinder_weights_independent_of_ell() {
        let s = build_surface(SurfaceSpec::genus2(16, 8)).unwrap();
        let a = metric_for(&s, 0.9, 0.5).unwrap();
        let b = metric_for(&s, 0.01, 0.5).unwrap();
        for (k, f) in s.faces.iter().enumerate() {
            if f.chart != 2 {
                assert_eq!(a.face_area[k], b.face_area[k]);
            }
        }
    }

    #[test]
    fn cylinder_area_matches_quadrature_oracle() {
        let s = build_surface(SurfaceSpec::genus2(16, 8)).unwrap();
        let tori = 2.0 * (1.0 - 4.0 / 256.0);
        let mut prev = f64::INFINITY;
        for &ell in &[1.0, 0.7, 0.4, 0.1] {
            let kappa = 0.5;
            let m = metric_for(&s, ell, kappa).unwrap();
            let cyl = m.total_area - tori;
            let exact =
                2.0 * std::f64::consts::PI * kappa * sqrt_quadratic_integral(ell, -1.0, 1.0);
            assert!((cyl - exact).abs() < 2e-3 * exact, "{cyl} vs {exact}");
            assert!(m.total_area < prev);
            prev = m.total_area;
        }
    }

    #[test]
    fn pinch_splits_components() {
        let s = build_surface(SurfaceSpec::genus2(16, 8)).unwrap();
        let m = metric_for(&s, 0.0, 0.5).unwrap();
        assert_eq!(m.n_components, 2);
        assert_eq!(m.virtual_faces.len(), 2);
        assert_ne!(m.virtual_faces[0].component, m.virtual_faces[1].component);
        for vf in &m.virtual_faces {
            s.check_closed(&vf.boundary).unwrap();
        }
        let pos = metric_for(&s, 0.2, 0.5).unwrap();
        assert_eq!(pos.n_components, 1);
    }
}
