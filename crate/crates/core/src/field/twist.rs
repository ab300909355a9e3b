use super::links::LinkField;
use super::representation::aligning_rotation;
use crate::error::{check_range, Error, Result};
use crate::geom::{Path, SurfaceComplex};
use crate::su2::Su2;
use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;

/// Off-diagonal budget for a link to count as diagonal.
pub const STANDARD_FORM_TOL: f64 = 1e-8;

pub const R_INNER: f64 = 1.0 / 6.0;
pub const R_OUTER: f64 = 1.0 / 3.0;

/// Angular profile `a(r)` of the twisted connection `diag(i a, -i a) dθ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistProfile {
    pub alpha: f64,
    pub beta: f64,
}

pub(crate) fn smoothstep(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let t2 = t * t;
    (
        t2 * t * (10.0 - 15.0 * t + 6.0 * t2),
        30.0 * t2 * (1.0 - t) * (1.0 - t),
        60.0 * t * (1.0 - t) * (1.0 - 2.0 * t),
    )
}

/// Cutoff `φ₁` with its first two derivatives: 1 on `r ≤ 1/6`, 0 on `r ≥ 1/3`.
pub fn cutoff(r: f64) -> (f64, f64, f64) {
    let w = R_OUTER - R_INNER;
    let (s, ds, dds) = smoothstep((r - R_INNER) / w);
    (1.0 - s, -ds / w, -dds / (w * w))
}

impl TwistProfile {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        check_range("alpha", alpha, 0.0, 0.5, "[0, 1/2]")?;
        check_range("beta", beta, 0.0, 0.5, "[0, 1/2]")?;
        Ok(Self { alpha, beta })
    }

    pub fn a(&self, r: f64) -> f64 {
        if r <= R_INNER {
            return self.beta;
        }
        if r >= R_OUTER {
            return self.alpha;
        }
        let (p, dp, _) = cutoff(r);
        self.alpha - (self.alpha - self.beta) * (p + r * dp * r.ln())
    }

    pub fn a_prime(&self, r: f64) -> f64 {
        if r <= R_INNER || r >= R_OUTER {
            return 0.0;
        }
        let (_, dp, ddp) = cutoff(r);
        -(self.alpha - self.beta) * (2.0 * dp + (dp + r * ddp) * r.ln())
    }

    /// `∫ (a(r) - α) dθ` along the straight segment from `p0` to `p1` (relative to the center).
    pub fn edge_integral(&self, p0: (f64, f64), p1: (f64, f64)) -> f64 {
        let r0 = p0.0.hypot(p0.1);
        let r1 = p1.0.hypot(p1.1);
        let dtheta = (p0.0 * p1.1 - p0.1 * p1.0).atan2(p0.0 * p1.0 + p0.1 * p1.1);
        if r0.max(r1) <= R_INNER {
            return (self.beta - self.alpha) * dtheta;
        }
        if segment_min_radius(p0, p1) >= R_OUTER {
            return 0.0;
        }
        let (dx, dy) = (p1.0 - p0.0, p1.1 - p0.1);
        let mut sum = 0.0;
        const PIECES: usize = 4;
        for k in 0..PIECES {
            for (t, w) in GAUSS8 {
                let t = (k as f64 + 0.5 * (1.0 + t)) / PIECES as f64;
                let (x, y) = (p0.0 + t * dx, p0.1 + t * dy);
                let r2 = x * x + y * y;
                let dth = (x * dy - y * dx) / r2;
                sum += 0.5 * w / PIECES as f64 * (self.a(r2.sqrt()) - self.alpha) * dth;
            }
        }
        sum
    }
}

fn segment_min_radius(p0: (f64, f64), p1: (f64, f64)) -> f64 {
    let (dx, dy) = (p1.0 - p0.0, p1.1 - p0.1);
    let l2 = dx * dx + dy * dy;
    let t = if l2 > 0.0 {
        (-(p0.0 * dx + p0.1 * dy) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p0.0 + t * dx).hypot(p0.1 + t * dy)
}

const GAUSS8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// A region of the surface on which a flat connection is brought to `diag(iw, -iw) dθ`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardRegion {
    /// Edge -> `Δθ` along the edge's own orientation.
    pub dtheta: BTreeMap<usize, f64>,
    pub root: usize,
    /// Closed loop at `root` winding once positively around the singular point.
    pub loop_path: Path,
}

/// Gauge on the region making every link `exp(i w Δθ τ)` with `w = angle(hol)/2π`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardGauge {
    pub gauge: BTreeMap<usize, Su2>,
    pub weight: f64,
    pub offdiag: f64,
}

pub fn puncture_region(s: &SurfaceComplex, k: usize) -> Result<StandardRegion> {
    let p = s
        .punctures
        .get(k)
        .ok_or_else(|| Error::Surface(format!("no puncture {k}")))?;
    let h = s.charts[p.chart].hx;
    let radius = R_OUTER + 1.5 * h;
    let disp: Vec<Option<(f64, f64)>> = (0..s.vertices.len())
        .map(|v| {
            s.displacement(v, p.chart, p.center)
                .filter(|d| d.0.hypot(d.1) <= radius)
        })
        .collect();
    let mut dtheta = BTreeMap::new();
    for (e, ed) in s.edges.iter().enumerate() {
        if let (Some(a), Some(b)) = (disp[ed.v0], disp[ed.v1]) {
            dtheta.insert(e, (a.0 * b.1 - a.1 * b.0).atan2(a.0 * b.0 + a.1 * b.1));
        }
    }
    let face = &s.faces[p.face];
    Ok(StandardRegion {
        dtheta,
        root: face.corners[0],
        loop_path: face.boundary.clone(),
    })
}

/// The whole pinching cylinder with its two boundary rings, `θ = y`.
pub fn cylinder_region(s: &SurfaceComplex) -> Result<StandardRegion> {
    let p = s
        .pinch
        .as_ref()
        .ok_or_else(|| Error::Surface("surface has no pinching cylinder".into()))?;
    let hy = s.charts[p.chart].hy;
    let mut dtheta = BTreeMap::new();
    for i in 0..=p.nx {
        for j in 0..p.ny {
            let (e, sg) = p.y_edges[i][j];
            dtheta.insert(e, sg as f64 * hy);
            if i < p.nx {
                dtheta.insert(p.x_edges[i][j].0, 0.0);
            }
        }
    }
    let mid = p.nx / 2;
    Ok(StandardRegion {
        dtheta,
        root: p.vertices[mid][p.tail_row],
        loop_path: p.ring(mid, p.tail_row),
    })
}

/// Breadth-first gauge fixing of a flat field on `region` to the standard diagonal form.
pub fn standard_gauge(
    field: &LinkField,
    s: &SurfaceComplex,
    region: &StandardRegion,
    tol: f64,
) -> Result<StandardGauge> {
    let winding: f64 = region
        .loop_path
        .iter()
        .map(|&(e, sg)| sg as f64 * region.dtheta.get(&e).copied().unwrap_or(f64::NAN))
        .sum();
    if !((winding - 2.0 * PI).abs() < 1e-9) {
        return Err(Error::Surface(format!(
            "standardization loop winds by {winding}, expected 2π"
        )));
    }
    let hol = field.product(&region.loop_path);
    let angle = hol.angle();
    let weight = angle / (2.0 * PI);
    let target = |e: usize| Su2::diag(weight * region.dtheta[&e]);

    let mut adj: BTreeMap<usize, Vec<(usize, usize, bool)>> = BTreeMap::new();
    for &e in region.dtheta.keys() {
        let ed = s.edges[e];
        adj.entry(ed.v0).or_default().push((e, ed.v1, true));
        adj.entry(ed.v1).or_default().push((e, ed.v0, false));
    }
    let mut gauge = BTreeMap::new();
    gauge.insert(region.root, aligning_rotation(&hol, &Su2::diag(angle)));
    let mut queue = VecDeque::from([region.root]);
    while let Some(v) = queue.pop_front() {
        let gv = gauge[&v];
        for &(e, w, forward) in adj.get(&v).map(|x| x.as_slice()).unwrap_or(&[]) {
            if gauge.contains_key(&w) {
                continue;
            }
            let u = field.links[e];
            let gw = if forward {
                target(e).inv() * gv * u
            } else {
                target(e) * gv * u.inv()
            };
            gauge.insert(w, gw.normalized());
            queue.push_back(w);
        }
    }
    let mut offdiag: f64 = 0.0;
    for &e in region.dtheta.keys() {
        let ed = s.edges[e];
        let (Some(g0), Some(g1)) = (gauge.get(&ed.v0), gauge.get(&ed.v1)) else {
            return Err(Error::Surface(format!("standard region not connected at edge {e}")));
        };
        let u = *g0 * field.links[e] * g1.inv();
        offdiag = offdiag.max(u.0[1].hypot(u.0[2]));
    }
    if offdiag > tol {
        return Err(Error::StandardForm { offdiag, tol });
    }
    Ok(StandardGauge {
        gauge,
        weight,
        offdiag,
    })
}

/// Applies gauges on disjoint regions (identity elsewhere).
pub fn apply_gauges(field: &LinkField, s: &SurfaceComplex, gauges: &[&StandardGauge]) -> LinkField {
    let mut g = vec![Su2::IDENTITY; s.vertices.len()];
    for sg in gauges {
        for (&v, &u) in &sg.gauge {
            g[v] = u;
        }
    }
    field.gauge_transform(s, &g)
}

/// Brings the field to standard form around puncture `k`.
pub fn standardize_puncture(
    field: &LinkField,
    s: &SurfaceComplex,
    k: usize,
) -> Result<(LinkField, StandardGauge)> {
    let region = puncture_region(s, k)?;
    let sg = standard_gauge(field, s, &region, STANDARD_FORM_TOL)?;
    Ok((apply_gauges(field, s, &[&sg]), sg))
}

/// Multiplies the links around puncture `k` by `exp(i τ ∫ (a - α) dθ)`, changing the pinned
/// weight from `α` to `β`. The field must already be in standard form there.
pub fn apply_twist(
    field: &LinkField,
    s: &SurfaceComplex,
    k: usize,
    profile: &TwistProfile,
) -> Result<LinkField> {
    let region = puncture_region(s, k)?;
    let mut offdiag: f64 = 0.0;
    for &e in region.dtheta.keys() {
        let u = field.links[e];
        offdiag = offdiag.max(u.0[1].hypot(u.0[2]));
    }
    if offdiag > STANDARD_FORM_TOL {
        return Err(Error::StandardForm {
            offdiag,
            tol: STANDARD_FORM_TOL,
        });
    }
    let p = &s.punctures[k];
    let mut out = field.clone();
    if profile.alpha == profile.beta {
        return Ok(out);
    }
    for &e in region.dtheta.keys() {
        let ed = s.edges[e];
        let d0 = s.displacement(ed.v0, p.chart, p.center).unwrap();
        let d1 = s.displacement(ed.v1, p.chart, p.center).unwrap();
        let phi = profile.edge_integral(d0, d1);
        if phi != 0.0 {
            out.links[e] = (out.links[e] * Su2::diag(phi)).normalized();
        }
    }
    out.puncture_weights[k] = profile.beta;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::construct::connection_from_representation;
    use crate::field::curvature::{curvature, plaquettes};
    use crate::field::representation::Representation;
    use crate::geom::{build_surface, metric_for, SurfaceSpec, Topology};

    fn abelian_punctured(n: usize, alpha: f64) -> (SurfaceComplex, LinkField) {
        let s = build_surface(SurfaceSpec::punctured_torus(n)).unwrap();
        let mut f = LinkField::identity(&s);
        let region = puncture_region(&s, 0).unwrap();
        for (&e, &d) in &region.dtheta {
            f.links[e] = Su2::diag(alpha * d);
        }
        f.puncture_weights[0] = alpha;
        (s, f)
    }

    #[test]
    fn profile_endpoints() {
        let p = TwistProfile::new(0.3, 0.2).unwrap();
        assert_eq!(p.a(0.1), 0.2);
        assert_eq!(p.a(1.0 / 6.0), 0.2);
        assert_eq!(p.a(0.34), 0.3);
        let (c, _, _) = cutoff(0.25);
        assert!((c - 0.5).abs() < 1e-15);
    }

    #[test]
    fn profile_derivative_integrates_to_weight_change() {
        let p = TwistProfile::new(0.3, 0.2).unwrap();
        let n = 20000;
        let h = (R_OUTER - R_INNER) / n as f64;
        let total: f64 = (0..n)
            .map(|k| p.a_prime(R_INNER + (k as f64 + 0.5) * h) * h)
            .sum();
        assert!((total - 0.1).abs() < 1e-8, "{total}");
        let r = 0.23;
        let fd = (p.a(r + 1e-6) - p.a(r - 1e-6)) / 2e-6;
        assert!((fd - p.a_prime(r)).abs() < 1e-6);
    }

    #[test]
    fn edge_integral_of_full_circle() {
        let p = TwistProfile::new(0.4, 0.1).unwrap();
        for &r in &[0.1, 0.25, 0.5] {
            let m = 64;
            let pts: Vec<(f64, f64)> = (0..=m)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / m as f64;
                    (r * t.cos(), r * t.sin())
                })
                .collect();
            let total: f64 = pts.windows(2).map(|w| p.edge_integral(w[0], w[1])).sum();
            let exact = 2.0 * PI * (p.a(r) - p.alpha);
            assert!((total - exact).abs() < 2e-3 * (1.0 + exact.abs()), "{r}: {total} vs {exact}");
        }
    }

    #[test]
    fn equal_weights_leave_field_unchanged() {
        let (s, f) = abelian_punctured(16, 0.3);
        let t = apply_twist(&f, &s, 0, &TwistProfile::new(0.3, 0.3).unwrap()).unwrap();
        assert_eq!(t, f);
    }

    #[test]
    fn twist_sets_puncture_trace() {
        let (s, f) = abelian_punctured(32, 0.3);
        let t = apply_twist(&f, &s, 0, &TwistProfile::new(0.3, 0.2).unwrap()).unwrap();
        let face = &s.faces[s.punctures[0].face];
        let tr = t.product(&face.boundary).trace();
        assert!((tr - 2.0 * (0.4 * PI).cos()).abs() < 1e-12);
    }

    #[test]
    fn twisted_curvature_lives_in_annulus() {
        let s = build_surface(SurfaceSpec::punctured_torus(32)).unwrap();
        let rep = Representation::punctured_torus(0.3, 1.2, 0.4).unwrap();
        let flat = connection_from_representation(&rep, &s).unwrap();
        let (f, _) = standardize_puncture(&flat, &s, 0).unwrap();
        let t = apply_twist(&f, &s, 0, &TwistProfile::new(0.3, 0.2).unwrap()).unwrap();
        let m = metric_for(&s, 1.0, 1.0).unwrap();
        let pls = plaquettes(&s, &m, &t, &[]);
        let cf = curvature(&t, &pls).unwrap();
        let p = &s.punctures[0];
        let h = 1.0 / 32.0;
        let mut total = 0.0;
        for (k, pl) in pls.iter().enumerate() {
            let fc = pl.face.unwrap();
            let d = s.displacement(s.faces[fc].corners[0], p.chart, p.center).unwrap();
            let r_mid = (d.0 + 0.5 * h).hypot(d.1 + 0.5 * h);
            if pl.pin.is_some() {
                assert!(cf.logs[k].norm() < 1e-10);
                continue;
            }
            if r_mid < R_INNER - h || r_mid > R_OUTER + h {
                assert!(cf.logs[k].norm() < 1e-10, "face {fc} at r = {r_mid}");
            }
            total += cf.logs[k].0[2];
        }
        // Lattice Stokes: annulus total equals the change of the enclosed angle.
        assert!((total - 2.0 * PI * 0.1).abs() < 1e-10, "{total}");
    }

    #[test]
    fn standardization_of_nonabelian_flat_field() {
        let s = build_surface(SurfaceSpec::punctured_torus(16)).unwrap();
        let rep = Representation::punctured_torus(0.3, 1.2, 0.4).unwrap();
        let f = connection_from_representation(&rep, &s).unwrap();
        let (g, sg) = standardize_puncture(&f, &s, 0).unwrap();
        assert!((sg.weight - 0.3).abs() < 1e-12);
        let region = puncture_region(&s, 0).unwrap();
        for (&e, &d) in &region.dtheta {
            assert!(g.links[e].dist(&Su2::diag(0.3 * d)) < 1e-10);
        }
        for name in ["a", "b"] {
            let a = f.product(&s.loops[name]).trace();
            let b = g.product(&s.loops[name]).trace();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn standardization_of_cylinder() {
        let s = build_surface(SurfaceSpec::genus2(16, 6)).unwrap();
        assert_eq!(s.spec.topology, Topology::Genus2SeparatingPinch);
        let rep = Representation::genus2_generic(0.3, 2).unwrap();
        let f = connection_from_representation(&rep, &s).unwrap();
        let region = cylinder_region(&s).unwrap();
        let sg = standard_gauge(&f, &s, &region, STANDARD_FORM_TOL).unwrap();
        let g = apply_gauges(&f, &s, &[&sg]);
        let p = s.pinch.as_ref().unwrap();
        for i in 0..p.nx {
            for j in 0..p.ny {
                assert!(g.links[p.x_edges[i][j].0].dist(&Su2::IDENTITY) < 1e-10);
            }
        }
        let c = rep.loops["c"].angle() / (2.0 * PI);
        assert!((sg.weight - c).abs() < 1e-12);
    }

    #[test]
    fn non_flat_region_is_rejected() {
        let s = build_surface(SurfaceSpec::punctured_torus(16)).unwrap();
        let f = LinkField::random_near_identity(&s, 0.2, 4);
        assert!(matches!(
            standardize_puncture(&f, &s, 0),
            Err(Error::StandardForm { .. })
        ));
        let (s, f) = abelian_punctured(16, 0.3);
        let mut g = f.clone();
        let region = puncture_region(&s, 0).unwrap();
        let e = *region.dtheta.keys().next().unwrap();
        g.links[e] = Su2::new(0.8, 0.6, 0.0, 0.0) * g.links[e];
        assert!(apply_twist(&g, &s, 0, &TwistProfile::new(0.3, 0.2).unwrap()).is_err());
    }
}
