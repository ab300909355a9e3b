use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

/// Oriented edge traversal: `(edge id, +1 | -1)`.
pub type Step = (usize, i8);
pub type Path = Vec<Step>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Torus,
    OneHoledTorusPunctured,
    Genus2SeparatingPinch,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Torus => "torus",
            Topology::OneHoledTorusPunctured => "one_holed_torus_punctured",
            Topology::Genus2SeparatingPinch => "genus2_separating_pinch",
        })
    }
}

impl FromStr for Topology {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "torus" => Ok(Topology::Torus),
            "one_holed_torus_punctured" => Ok(Topology::OneHoledTorusPunctured),
            "genus2_separating_pinch" => Ok(Topology::Genus2SeparatingPinch),
            other => Err(Error::Config(format!("unknown topology `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub topology: Topology,
    /// Cells per side of each torus chart.
    pub n: usize,
    /// Cells across the cylinder, `x ∈ [-1, 1]`.
    pub nx: usize,
    /// Cells around the cylinder; must equal the hole perimeter `n/2`.
    pub ny: Option<usize>,
}

impl SurfaceSpec {
    pub fn torus(n: usize) -> Self {
        Self {
            topology: Topology::Torus,
            n,
            nx: 0,
            ny: None,
        }
    }

    pub fn punctured_torus(n: usize) -> Self {
        Self {
            topology: Topology::OneHoledTorusPunctured,
            n,
            nx: 0,
            ny: None,
        }
    }

    pub fn genus2(n: usize, nx: usize) -> Self {
        Self {
            topology: Topology::Genus2SeparatingPinch,
            n,
            nx,
            ny: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChartKind {
    Torus,
    Cylinder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub name: String,
    pub kind: ChartKind,
    pub ni: usize,
    pub nj: usize,
    pub x0: f64,
    pub hx: f64,
    pub hy: f64,
}

impl Chart {
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.hy
    }

    /// Period in y (and in x for torus charts).
    pub fn period_y(&self) -> f64 {
        self.nj as f64 * self.hy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub chart: usize,
    pub i: usize,
    pub j: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub v0: usize,
    pub v1: usize,
}

/// Quad face. Boundary runs bottom, right, top, left (counter-clockwise in chart coordinates).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub chart: usize,
    pub i: usize,
    pub j: usize,
    pub boundary: Path,
    pub corners: [usize; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Puncture {
    pub face: usize,
    pub chart: usize,
    pub center: (f64, f64),
}

/// Data of the pinching cylinder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinchData {
    pub chart: usize,
    pub nx: usize,
    pub ny: usize,
    /// `x_edges[i][j]`: edge from cylinder vertex (i, j) to (i+1, j).
    pub x_edges: Vec<Vec<Step>>,
    /// `y_edges[i][j]`: edge from cylinder vertex (i, j) to (i, j+1).
    pub y_edges: Vec<Vec<Step>>,
    /// `vertices[i][j]`, `i ∈ 0..=nx`.
    pub vertices: Vec<Vec<usize>>,
    /// Cylinder column index of the tail crossing.
    pub tail_row: usize,
}

impl PinchData {
    /// Ring of y-edges at column `i`, traversed in +y from row `start`.
    pub fn ring(&self, i: usize, start: usize) -> Path {
        (0..self.ny)
            .map(|k| self.y_edges[i][(start + k) % self.ny])
            .collect()
    }

    /// Transverse arc through column `j` covering `x ∈ [-k hx, k hx]`.
    pub fn transverse_arc(&self, j: usize, k: usize) -> Path {
        let mid = self.nx / 2;
        (mid - k..mid + k).map(|i| self.x_edges[i][j]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceComplex {
    pub spec: SurfaceSpec,
    pub charts: Vec<Chart>,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub faces: Vec<Face>,
    pub punctures: Vec<Puncture>,
    pub pinching: Vec<Path>,
    pub pinch: Option<PinchData>,
    pub base: usize,
    /// Free generators in a fixed order.
    pub generators: Vec<String>,
    /// Named closed loops based at `base`: generators plus puncture and pinching loops.
    pub loops: BTreeMap<String, Path>,
    /// The one edge of each generator loop left out of the spanning tree.
    pub closing: BTreeMap<String, Step>,
    /// Edges forced into the spanning tree (generator loops minus closing edges and tails).
    pub tree_seed: Vec<usize>,
    /// Loops generating `π₁` of each component of the surface cut along the pinching curves.
    pub component_loops: Vec<Vec<String>>,
    pub genus: usize,
}

struct Builder {
    charts: Vec<Chart>,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    faces: Vec<Face>,
    vid: HashMap<(usize, usize, usize), usize>,
    eid: HashMap<(usize, usize), usize>,
}

impl Builder {
    fn new() -> Self {
        Self {
            charts: Vec::new(),
            vertices: Vec::new(),
            edges: Vec::new(),
            faces: Vec::new(),
            vid: HashMap::new(),
            eid: HashMap::new(),
        }
    }

    fn torus_chart(&mut self, name: &str, n: usize) -> usize {
        self.charts.push(Chart {
            name: name.into(),
            kind: ChartKind::Torus,
            ni: n,
            nj: n,
            x0: 0.0,
            hx: 1.0 / n as f64,
            hy: 1.0 / n as f64,
        });
        self.charts.len() - 1
    }

    fn key(&self, c: usize, i: usize, j: usize) -> (usize, usize, usize) {
        let ch = &self.charts[c];
        match ch.kind {
            ChartKind::Torus => (c, i % ch.ni, j % ch.nj),
            ChartKind::Cylinder => (c, i, j % ch.nj),
        }
    }

    fn vertex(&mut self, c: usize, i: usize, j: usize) -> usize {
        let k = self.key(c, i, j);
        if let Some(&v) = self.vid.get(&k) {
            return v;
        }
        let ch = &self.charts[c];
        let v = Vertex {
            chart: c,
            i: k.1,
            j: k.2,
            x: ch.x(k.1),
            y: ch.y(k.2),
        };
        self.vertices.push(v);
        self.vid.insert(k, self.vertices.len() - 1);
        self.vertices.len() - 1
    }

    fn alias(&mut self, c: usize, i: usize, j: usize, v: usize) {
        let k = self.key(c, i, j);
        self.vid.insert(k, v);
    }

    fn edge(&mut self, a: usize, b: usize) -> Step {
        let key = (a.min(b), a.max(b));
        if let Some(&e) = self.eid.get(&key) {
            let s = if self.edges[e].v0 == a { 1 } else { -1 };
            return (e, s);
        }
        self.edges.push(Edge { v0: a, v1: b });
        self.eid.insert(key, self.edges.len() - 1);
        (self.edges.len() - 1, 1)
    }

    fn face(&mut self, c: usize, i: usize, j: usize) {
        let v00 = self.vertex(c, i, j);
        let v10 = self.vertex(c, i + 1, j);
        let v11 = self.vertex(c, i + 1, j + 1);
        let v01 = self.vertex(c, i, j + 1);
        let boundary = vec![
            self.edge(v00, v10),
            self.edge(v10, v11),
            self.edge(v11, v01),
            self.edge(v01, v00),
        ];
        self.faces.push(Face {
            chart: c,
            i,
            j,
            boundary,
            corners: [v00, v10, v11, v01],
        });
    }

    fn step(&mut self, c: usize, from: (usize, usize), to: (usize, usize)) -> Step {
        let a = self.vertex(c, from.0, from.1);
        let b = self.vertex(c, to.0, to.1);
        self.edge(a, b)
    }

    /// Row `j = q` of a torus chart, +x from `(q, q)` once around.
    fn row_loop(&mut self, c: usize, q: usize, n: usize) -> Path {
        (0..n)
            .map(|k| self.step(c, (q + k, q), (q + k + 1, q)))
            .collect()
    }

    fn col_loop(&mut self, c: usize, q: usize, n: usize) -> Path {
        (0..n)
            .map(|k| self.step(c, (q, q + k), (q, q + k + 1)))
            .collect()
    }

    fn torus_faces(&mut self, c: usize, n: usize, hole: Option<usize>) {
        for j in 0..n {
            for i in 0..n {
                if let Some(m) = hole {
                    if i < m && j < m {
                        continue;
                    }
                }
                self.face(c, i, j);
            }
        }
    }
}

/// Counter-clockwise ring of vertices around the hole block `[0, m)²`.
fn hole_ring(b: &mut Builder, c: usize, m: usize) -> Vec<usize> {
    let mut r = Vec::with_capacity(4 * m);
    for k in 0..m {
        r.push(b.vertex(c, k, 0));
    }
    for k in 0..m {
        r.push(b.vertex(c, m, k));
    }
    for k in 0..m {
        r.push(b.vertex(c, m - k, m));
    }
    for k in 0..m {
        r.push(b.vertex(c, 0, m - k));
    }
    r
}

fn reversed_ring(r: &[usize]) -> Vec<usize> {
    let n = r.len();
    (0..n).map(|j| r[(n - j) % n]).collect()
}

pub fn reverse_path(p: &[Step]) -> Path {
    p.iter().rev().map(|&(e, s)| (e, -s)).collect()
}

fn conjugate_path(tail: &[Step], core: &[Step]) -> Path {
    let mut p = tail.to_vec();
    p.extend_from_slice(core);
    p.extend(reverse_path(tail));
    p
}

/// Builds one of the three supported surfaces.
pub fn build_surface(spec: SurfaceSpec) -> Result<SurfaceComplex> {
    let n = spec.n;
    if n < 4 || !n.is_multiple_of(4) {
        return Err(Error::Surface(format!(
            "torus resolution n = {n} must be a multiple of 4 and >= 4"
        )));
    }
    match spec.topology {
        Topology::Torus | Topology::OneHoledTorusPunctured => build_torus(spec),
        Topology::Genus2SeparatingPinch => build_genus2(spec),
    }
}

fn build_torus(spec: SurfaceSpec) -> Result<SurfaceComplex> {
    let n = spec.n;
    let q = n / 4;
    let mut b = Builder::new();
    let c = b.torus_chart("T", n);
    b.torus_faces(c, n, None);
    let base = b.vertex(c, q, q);
    let a = b.row_loop(c, q, n);
    let bb = b.col_loop(c, q, n);
    let mut loops = BTreeMap::new();
    let mut closing = BTreeMap::new();
    let mut tree_seed = Vec::new();
    for (name, p) in [("a", &a), ("b", &bb)] {
        closing.insert(name.to_string(), p[n / 2]);
        tree_seed.extend(p.iter().enumerate().filter(|(k, _)| *k != n / 2).map(|(_, s)| s.0));
        loops.insert(name.to_string(), p.clone());
    }
    let mut punctures = Vec::new();
    let mut component_loops = vec![vec!["a".to_string(), "b".to_string()]];
    if spec.topology == Topology::OneHoledTorusPunctured {
        let (pface, cp) = puncture_loop(&mut b, c, n, q)?;
        punctures.push(pface);
        loops.insert("c_p".into(), cp);
        component_loops[0].push("c_p".into());
    }
    finish(
        b,
        spec,
        punctures,
        Vec::new(),
        None,
        base,
        vec!["a".into(), "b".into()],
        loops,
        closing,
        tree_seed,
        component_loops,
        1,
    )
}

fn puncture_loop(b: &mut Builder, c: usize, n: usize, q: usize) -> Result<(Puncture, Path)> {
    let pf = n / 2;
    let face = b
        .faces
        .iter()
        .position(|f| f.chart == c && f.i == pf && f.j == pf)
        .ok_or_else(|| Error::Surface("puncture face missing".into()))?;
    let mut tail = Vec::new();
    for k in q..pf {
        tail.push(b.step(c, (k, q), (k + 1, q)));
    }
    for k in q..pf {
        tail.push(b.step(c, (pf, k), (pf, k + 1)));
    }
    let boundary = b.faces[face].boundary.clone();
    let h = b.charts[c].hx;
    Ok((
        Puncture {
            face,
            chart: c,
            center: ((pf as f64 + 0.5) * h, (pf as f64 + 0.5) * h),
        },
        conjugate_path(&tail, &boundary),
    ))
}

fn build_genus2(spec: SurfaceSpec) -> Result<SurfaceComplex> {
    let n = spec.n;
    if !n.is_multiple_of(8) || n < 16 {
        return Err(Error::Surface(format!(
            "genus-2 torus resolution n = {n} must be a multiple of 8 and >= 16"
        )));
    }
    let nx = spec.nx;
    if nx < 4 || !nx.is_multiple_of(2) {
        return Err(Error::Surface(format!(
            "cylinder resolution nx = {nx} must be even and >= 4"
        )));
    }
    let m = n / 8;
    let ny = 4 * m;
    if let Some(req) = spec.ny {
        if req != ny {
            return Err(Error::Surface(format!(
                "cylinder ny = {req} does not match hole perimeter {ny} (n = {n})"
            )));
        }
    }
    for (rev1, rev2) in [(false, true), (false, false), (true, false), (true, true)] {
        let s = genus2_attempt(spec, m, ny, rev1, rev2)?;
        if orientation_consistent(&s) {
            return Ok(s);
        }
    }
    Err(Error::Surface("no consistent orientation for cylinder gluing".into()))
}

fn genus2_attempt(
    spec: SurfaceSpec,
    m: usize,
    ny: usize,
    rev1: bool,
    rev2: bool,
) -> Result<SurfaceComplex> {
    let n = spec.n;
    let nx = spec.nx;
    let q = n / 4;
    let mut b = Builder::new();
    let t1 = b.torus_chart("T1", n);
    let t2 = b.torus_chart("T2", n);
    b.charts.push(Chart {
        name: "C".into(),
        kind: ChartKind::Cylinder,
        ni: nx,
        nj: ny,
        x0: -1.0,
        hx: 2.0 / nx as f64,
        hy: 2.0 * std::f64::consts::PI / ny as f64,
    });
    let cy = 2;
    b.torus_faces(t1, n, Some(m));
    b.torus_faces(t2, n, Some(m));
    let mut r1 = hole_ring(&mut b, t1, m);
    let mut r2 = hole_ring(&mut b, t2, m);
    if rev1 {
        r1 = reversed_ring(&r1);
    }
    if rev2 {
        r2 = reversed_ring(&r2);
    }
    for j in 0..ny {
        b.alias(cy, 0, j, r1[j]);
        b.alias(cy, nx, j, r2[j]);
    }
    for j in 0..ny {
        for i in 0..nx {
            b.face(cy, i, j);
        }
    }
    let mut vertices = vec![vec![0; ny]; nx + 1];
    let mut x_edges = vec![vec![(0, 1); ny]; nx];
    let mut y_edges = vec![vec![(0, 1); ny]; nx + 1];
    for i in 0..=nx {
        for j in 0..ny {
            vertices[i][j] = b.vertex(cy, i, j);
            y_edges[i][j] = b.step(cy, (i, j), (i, j + 1));
            if i < nx {
                x_edges[i][j] = b.step(cy, (i, j), (i + 1, j));
            }
        }
    }
    let tail_row = 2 * m;

    let base = b.vertex(t1, q, q);
    let a1 = b.row_loop(t1, q, n);
    let b1 = b.col_loop(t1, q, n);
    let a2 = b.row_loop(t2, q, n);
    let b2 = b.col_loop(t2, q, n);

    // Tail from the T1 base to the T2 base through the cylinder along row `tail_row`.
    let mut tail = Vec::new();
    for k in (m..q).rev() {
        tail.push(b.step(t1, (k + 1, q), (k, q)));
    }
    for k in (m..q).rev() {
        tail.push(b.step(t1, (m, k + 1), (m, k)));
    }
    let tail_to_cyl = tail.len();
    for i in 0..nx {
        tail.push(x_edges[i][tail_row]);
    }
    for k in m..q {
        tail.push(b.step(t2, (m, k), (m, k + 1)));
    }
    for k in m..q {
        tail.push(b.step(t2, (k, q), (k + 1, q)));
    }
    check_contiguous_raw(&b.edges, &tail)?;

    let mut loops = BTreeMap::new();
    let mut closing = BTreeMap::new();
    let mut tree_seed: Vec<usize> = tail.iter().map(|s| s.0).collect();
    for (name, p) in [("a1", &a1), ("b1", &b1), ("a2", &a2), ("b2", &b2)] {
        closing.insert(name.to_string(), p[n / 2]);
        tree_seed.extend(p.iter().enumerate().filter(|(k, _)| *k != n / 2).map(|(_, s)| s.0));
    }
    loops.insert("a1".into(), a1);
    loops.insert("b1".into(), b1);
    loops.insert("a2".into(), conjugate_path(&tail, &a2));
    loops.insert("b2".into(), conjugate_path(&tail, &b2));
    let (pface, cp) = puncture_loop(&mut b, t1, n, q)?;
    loops.insert("c_p".into(), cp);

    let mid = nx / 2;
    let mut core_tail = tail[..tail_to_cyl].to_vec();
    core_tail.extend((0..mid).map(|i| x_edges[i][tail_row]));
    let core: Path = (0..ny).map(|k| y_edges[mid][(tail_row + k) % ny]).collect();
    loops.insert("c".into(), conjugate_path(&core_tail, &core));

    let pinch = PinchData {
        chart: cy,
        nx,
        ny,
        x_edges,
        y_edges,
        vertices,
        tail_row,
    };
    let pinching = vec![pinch.ring(mid, 0)];
    finish(
        b,
        spec,
        vec![pface],
        pinching,
        Some(pinch),
        base,
        vec!["a1".into(), "b1".into(), "a2".into(), "b2".into()],
        loops,
        closing,
        tree_seed,
        vec![
            vec!["a1".into(), "b1".into(), "c_p".into(), "c".into()],
            vec!["a2".into(), "b2".into(), "c".into()],
        ],
        2,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    b: Builder,
    spec: SurfaceSpec,
    punctures: Vec<Puncture>,
    pinching: Vec<Path>,
    pinch: Option<PinchData>,
    base: usize,
    generators: Vec<String>,
    loops: BTreeMap<String, Path>,
    closing: BTreeMap<String, Step>,
    mut tree_seed: Vec<usize>,
    component_loops: Vec<Vec<String>>,
    genus: usize,
) -> Result<SurfaceComplex> {
    tree_seed.sort_unstable();
    tree_seed.dedup();
    let s = SurfaceComplex {
        spec,
        charts: b.charts,
        vertices: b.vertices,
        edges: b.edges,
        faces: b.faces,
        punctures,
        pinching,
        pinch,
        base,
        generators,
        loops,
        closing,
        tree_seed,
        component_loops,
        genus,
    };
    for (name, p) in &s.loops {
        s.check_closed(p)
            .map_err(|e| Error::Surface(format!("loop {name}: {e}")))?;
    }
    Ok(s)
}

fn check_contiguous_raw(edges: &[Edge], path: &[Step]) -> Result<()> {
    for k in 1..path.len() {
        let (e0, s0) = path[k - 1];
        let (e1, s1) = path[k];
        let end = if s0 > 0 { edges[e0].v1 } else { edges[e0].v0 };
        let start = if s1 > 0 { edges[e1].v0 } else { edges[e1].v1 };
        if end != start {
            return Err(Error::NonContiguousPath { step: k });
        }
    }
    Ok(())
}

/// Every edge bounds exactly two faces with opposite signs.
pub fn orientation_consistent(s: &SurfaceComplex) -> bool {
    let mut count = vec![(0u8, 0u8); s.edges.len()];
    for f in &s.faces {
        for &(e, sg) in &f.boundary {
            if sg > 0 {
                count[e].0 += 1;
            } else {
                count[e].1 += 1;
            }
        }
    }
    count.iter().all(|&c| c == (1, 1))
}

impl SurfaceComplex {
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    pub fn start_vertex(&self, step: Step) -> usize {
        let e = self.edges[step.0];
        if step.1 > 0 {
            e.v0
        } else {
            e.v1
        }
    }

    pub fn end_vertex(&self, step: Step) -> usize {
        let e = self.edges[step.0];
        if step.1 > 0 {
            e.v1
        } else {
            e.v0
        }
    }

    pub fn check_contiguous(&self, path: &[Step]) -> Result<()> {
        check_contiguous_raw(&self.edges, path)
    }

    pub fn check_closed(&self, path: &[Step]) -> Result<()> {
        self.check_contiguous(path)?;
        if let (Some(&f), Some(&l)) = (path.first(), path.last()) {
            if self.start_vertex(f) != self.end_vertex(l) {
                return Err(Error::NonContiguousPath { step: path.len() });
            }
        }
        Ok(())
    }

    pub fn is_puncture(&self, face: usize) -> bool {
        self.punctures.iter().any(|p| p.face == face)
    }

    /// Vertex -> incident (edge, sign) with sign +1 when the vertex is `v0`.
    pub fn vertex_edges(&self) -> Vec<Vec<Step>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (k, e) in self.edges.iter().enumerate() {
            adj[e.v0].push((k, 1));
            adj[e.v1].push((k, -1));
        }
        adj
    }

    /// Edge -> faces containing it.
    pub fn edge_faces(&self) -> Vec<Vec<usize>> {
        let mut ef = vec![Vec::new(); self.edges.len()];
        for (k, f) in self.faces.iter().enumerate() {
            for &(e, _) in &f.boundary {
                ef[e].push(k);
            }
        }
        ef
    }

    /// Position of a vertex relative to `center` in its chart, using the minimal periodic image.
    pub fn displacement(&self, v: usize, chart: usize, center: (f64, f64)) -> Option<(f64, f64)> {
        let vx = &self.vertices[v];
        if vx.chart != chart {
            return None;
        }
        let ch = &self.charts[chart];
        let mut dx = vx.x - center.0;
        let mut dy = vx.y - center.1;
        if ch.kind == ChartKind::Torus {
            let p = ch.ni as f64 * ch.hx;
            dx -= p * (dx / p).round();
            dy -= p * (dy / p).round();
        }
        Some((dx, dy))
    }

    /// Whether `path` (a 1-cycle) is a real boundary of faces not in `excluded`.
    pub fn is_boundary(&self, path: &[Step], excluded: &[usize]) -> bool {
        let faces: Vec<usize> = (0..self.faces.len())
            .filter(|f| !excluded.contains(f))
            .collect();
        let mut d = nalgebra::DMatrix::<f64>::zeros(self.edges.len(), faces.len());
        for (col, &f) in faces.iter().enumerate() {
            for &(e, s) in &self.faces[f].boundary {
                d[(e, col)] += s as f64;
            }
        }
        let mut z = nalgebra::DVector::<f64>::zeros(self.edges.len());
        for &(e, s) in path {
            z[e] += s as f64;
        }
        let svd = d.clone().svd(true, true);
        let x = match svd.solve(&z, 1e-9) {
            Ok(x) => x,
            Err(_) => return false,
        };
        (d * x - z).norm() < 1e-8
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_euler_characteristic() {
        let s = build_surface(SurfaceSpec::torus(16)).unwrap();
        assert_eq!(s.charts.len(), 1);
        assert!(s.punctures.is_empty());
        assert_eq!(s.euler_characteristic(), 0);
        assert!(orientation_consistent(&s));
        assert_eq!(s.vertices.len(), 256);
        assert_eq!(s.edges.len(), 512);
    }

    #[test]
    fn genus2_euler_characteristic() {
        let s = build_surface(SurfaceSpec::genus2(16, 8)).unwrap();
        assert_eq!(s.charts.len(), 3);
        assert_eq!(s.pinching.len(), 1);
        assert_eq!(s.euler_characteristic(), -2);
        assert!(orientation_consistent(&s));
        s.check_closed(&s.pinching[0]).unwrap();
    }

    #[test]
    fn inconsistent_cylinder_resolution_rejected() {
        let mut spec = SurfaceSpec::genus2(16, 8);
        spec.ny = Some(12);
        assert!(matches!(build_surface(spec), Err(Error::Surface(_))));
    }

    #[test]
    fn puncture_loop_present() {
        let s = build_surface(SurfaceSpec::punctured_torus(16)).unwrap();
        assert_eq!(s.punctures.len(), 1);
        s.check_closed(&s.loops["c_p"]).unwrap();
        let excl = [s.punctures[0].face];
        assert!(!s.is_boundary(&s.loops["a"], &excl));
        assert!(!s.is_boundary(&s.loops["b"], &excl));
        // A single puncture loop is a commutator: it bounds the rest of the surface.
        assert!(s.is_boundary(&s.loops["c_p"], &excl));
    }

    #[test]
    fn rebuild_is_identical() {
        let a = build_surface(SurfaceSpec::genus2(16, 6)).unwrap();
        let b = build_surface(SurfaceSpec::genus2(16, 6)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_path_reports_step() {
        let s = build_surface(SurfaceSpec::torus(8)).unwrap();
        let p = vec![s.loops["a"][0], s.loops["a"][2]];
        assert!(matches!(s.check_contiguous(&p), Err(Error::NonContiguousPath { step: 1 })));
    }
}
