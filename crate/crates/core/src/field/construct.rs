use super::links::LinkField;
use super::representation::Representation;
use crate::error::{Error, Result};
use crate::geom::metric::UnionFind;
use crate::geom::SurfaceComplex;
use crate::su2::Su2;
use std::collections::VecDeque;

/// Spanning tree containing the designed generator paths; generator closing edges excluded.
pub fn spanning_tree(s: &SurfaceComplex) -> Result<Vec<bool>> {
    let mut in_tree = vec![false; s.edges.len()];
    let mut uf = UnionFind::new(s.vertices.len());
    for &e in &s.tree_seed {
        let ed = s.edges[e];
        if !uf.union(ed.v0, ed.v1) {
            return Err(Error::Surface(format!("tree seed edge {e} closes a cycle")));
        }
        in_tree[e] = true;
    }
    let closing: Vec<usize> = s.closing.values().map(|st| st.0).collect();
    for (e, ed) in s.edges.iter().enumerate() {
        if in_tree[e] || closing.contains(&e) {
            continue;
        }
        if uf.union(ed.v0, ed.v1) {
            in_tree[e] = true;
        }
    }
    Ok(in_tree)
}

/// Flat connection whose generator holonomies are exactly the representation's matrices.
///
/// Tree links are the identity, each generator's closing link carries the generator, and the
/// remaining links are solved face by face so that every face except the punctures is flat.
pub fn connection_from_representation(
    rep: &Representation,
    s: &SurfaceComplex,
) -> Result<LinkField> {
    let residual = rep.relation_residual();
    if residual > 1e-10 {
        return Err(Error::InconsistentRep {
            residual,
            tol: 1e-10,
            context: "relation".into(),
        });
    }
    let in_tree = spanning_tree(s)?;
    let mut links = vec![Su2::IDENTITY; s.edges.len()];
    let mut known = in_tree.clone();
    for (name, &(e, sg)) in &s.closing {
        let g = rep
            .loops
            .get(name)
            .ok_or_else(|| Error::MissingLoop(name.clone()))?;
        links[e] = if sg > 0 { *g } else { g.inv() };
        known[e] = true;
    }

    let skip: Vec<bool> = (0..s.faces.len())
        .map(|f| s.is_puncture(f))
        .collect();
    let ef = s.edge_faces();
    let mut unknown: Vec<usize> = s
        .faces
        .iter()
        .map(|f| f.boundary.iter().filter(|st| !known[st.0]).count())
        .collect();
    let mut done = vec![false; s.faces.len()];
    let mut queue: VecDeque<usize> = (0..s.faces.len())
        .filter(|&f| !skip[f] && unknown[f] == 1)
        .collect();
    while let Some(f) = queue.pop_front() {
        if done[f] || unknown[f] != 1 {
            continue;
        }
        done[f] = true;
        let b = &s.faces[f].boundary;
        let k = b.iter().position(|st| !known[st.0]).unwrap();
        let step = |st: &(usize, i8)| {
            if st.1 > 0 {
                links[st.0]
            } else {
                links[st.0].inv()
            }
        };
        let left = b[..k].iter().fold(Su2::IDENTITY, |acc, st| acc * step(st));
        let right = b[k + 1..].iter().fold(Su2::IDENTITY, |acc, st| acc * step(st));
        let x = left.inv() * right.inv();
        let (e, sg) = b[k];
        links[e] = if sg > 0 { x } else { x.inv() };
        known[e] = true;
        for &g in &ef[e] {
            unknown[g] -= 1;
            if !skip[g] && !done[g] && unknown[g] == 1 {
                queue.push_back(g);
            }
        }
    }
    if let Some(e) = known.iter().position(|k| !k) {
        return Err(Error::Surface(format!("cotree peeling left edge {e} unassigned")));
    }
    let mut field = LinkField {
        links,
        puncture_weights: vec![0.0; s.punctures.len()],
    };
    field.renormalize();
    for (k, p) in s.punctures.iter().enumerate() {
        field.puncture_weights[k] =
            field.product(&s.faces[p.face].boundary).angle() / (2.0 * std::f64::consts::PI);
    }
    let mut worst: f64 = 0.0;
    for (f, face) in s.faces.iter().enumerate() {
        if !skip[f] {
            worst = worst.max(field.product(&face.boundary).dist_identity());
        }
    }
    if worst > 1e-9 {
        return Err(Error::InconsistentRep {
            residual: worst,
            tol: 1e-9,
            context: "face flatness after peeling".into(),
        });
    }
    Ok(field)
}

/// Holonomies of all named loops of the surface.
pub fn extract_representation(field: &LinkField, s: &SurfaceComplex) -> Representation {
    Representation {
        topology: s.spec.topology,
        loops: s
            .loops
            .iter()
            .map(|(k, p)| (k.clone(), field.product(p)))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::curvature::curvature_norms;
    use crate::geom::{build_surface, metric_for, SurfaceSpec, Topology};

    #[test]
    fn trivial_rep_gives_identity_links() {
        let s = build_surface(SurfaceSpec::torus(8)).unwrap();
        let rep = Representation::trivial(&s);
        let f = connection_from_representation(&rep, &s).unwrap();
        assert!(f.links.iter().all(|u| u.dist(&Su2::IDENTITY) < 1e-15));
    }

    #[test]
    fn abelian_torus_rep_is_flat_and_commuting() {
        let s = build_surface(SurfaceSpec::torus(8)).unwrap();
        let rep = Representation::from_generators(
            Topology::Torus,
            &[("a", Su2::diag(0.4)), ("b", Su2::diag(-1.1))],
        );
        let f = connection_from_representation(&rep, &s).unwrap();
        let m = metric_for(&s, 1.0, 1.0).unwrap();
        assert!(curvature_norms(&f, &s, &m).unwrap().0 < 1e-9);
        let a = f.holonomy(&s, &s.loops["a"]).unwrap();
        let b = f.holonomy(&s, &s.loops["b"]).unwrap();
        assert!((a * b).dist(&(b * a)) < 1e-12);
        assert!((a.trace() - 2.0 * 0.4f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn nonabelian_torus_rep_is_rejected() {
        let s = build_surface(SurfaceSpec::torus(8)).unwrap();
        let rep = Representation::from_generators(
            Topology::Torus,
            &[("a", Su2::diag(0.4)), ("b", Su2::new(0.8, 0.6, 0.0, 0.0))],
        );
        assert!(matches!(
            connection_from_representation(&rep, &s),
            Err(Error::InconsistentRep { .. })
        ));
    }

    #[test]
    fn roundtrip_punctured_torus() {
        let s = build_surface(SurfaceSpec::punctured_torus(16)).unwrap();
        let rep = Representation::punctured_torus(0.3, 1.2, 0.4).unwrap();
        let f = connection_from_representation(&rep, &s).unwrap();
        let back = extract_representation(&f, &s);
        for (k, v) in &rep.loops {
            assert!(back.loops[k].dist(v) < 1e-10, "loop {k}");
        }
        assert!((f.puncture_weights[0] - 0.3).abs() < 1e-10);
    }

    #[test]
    fn roundtrip_genus2() {
        let s = build_surface(SurfaceSpec::genus2(16, 6)).unwrap();
        let rep = Representation::genus2_generic(0.3, 5).unwrap();
        let f = connection_from_representation(&rep, &s).unwrap();
        let back = extract_representation(&f, &s);
        for (k, v) in &rep.loops {
            assert!(back.loops[k].dist(v) < 1e-10, "loop {k}");
        }
    }
}
