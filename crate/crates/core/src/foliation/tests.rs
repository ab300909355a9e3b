use super::*;
use crate::field::representation::commutator_pair;
use crate::geom::{build_surface, SurfaceSpec};
use crate::su2::Alg;
use nalgebra::{DMatrix, DVector};

fn torus_point(n: usize) -> (SurfaceComplex, FoliationPoint) {
    let s = build_surface(SurfaceSpec::punctured_torus(n)).unwrap();
    let rep = Representation::punctured_torus(0.35, 1.2, 0.4).unwrap();
    (s, FoliationPoint::new(rep, 1.0, 1.0).unwrap())
}

#[test]
fn equal_weights_give_the_identity() {
    let (s, p) = torus_point(16);
    let out = pi_ab(&p, 0.35, &s, &FlowConfig::default()).unwrap();
    let d = trace_distance(&trace_coordinates(&out).unwrap(), &trace_coordinates(&p.rep).unwrap());
    assert!(d <= 1e-8, "{d}");
}

#[test]
fn output_carries_the_new_weight() {
    let (s, p) = torus_point(16);
    let run = pi_ab_run(&p, 0.2, &s, &FlowConfig::default()).unwrap();
    assert!(run.diagnostics.converged);
    let tr = run.rep.get("c_p").unwrap().trace();
    assert!((tr - 2.0 * (0.4 * PI).cos()).abs() <= 1e-3, "{tr}");
    assert!(run.diagnostics.is_monotone(1e-12));
}

#[test]
fn weights_outside_the_open_interval_are_rejected() {
    let (s, p) = torus_point(16);
    for b in [0.0, 0.5, -0.1] {
        assert!(matches!(
            pi_ab(&p, b, &s, &FlowConfig::default()),
            Err(Error::OutOfRange { name: "beta", .. })
        ));
    }
}

#[test]
fn conjugate_representations_have_equal_images() {
    let (s, p) = torus_point(16);
    let g = Su2::exp(Alg::new(0.4, -1.1, 0.3));
    let q = FoliationPoint {
        rep: p.rep.conjugate(g),
        ..p.clone()
    };
    let cfg = FlowConfig::default();
    let a = trace_coordinates(&pi_ab(&p, 0.25, &s, &cfg).unwrap()).unwrap();
    let b = trace_coordinates(&pi_ab(&q, 0.25, &s, &cfg).unwrap()).unwrap();
    assert!(trace_distance(&a, &b) <= 1e-8, "{}", trace_distance(&a, &b));
}

#[test]
fn composition_with_equal_weights_is_exact() {
    let (s, p) = torus_point(16);
    let d = composition_check(&p, 0.3, 0.3, &s, &FlowConfig::default()).unwrap();
    assert!(d <= 1e-8, "{d}");
    assert!(composition_check(&p, 0.2, 0.3, &s, &FlowConfig::default()).is_err());
}

#[test]
fn constant_leaf_and_leaf_regularity() {
    let (s, p) = torus_point(16);
    let cfg = FlowConfig::default();
    let flat = leaf_sweep(&p, &[0.35, 0.35, 0.35], &s, &cfg).unwrap();
    assert!(flat.step_distance.iter().all(|&d| d <= 1e-12));
    assert_eq!(flat.lipschitz, 0.0);
    let leaf = leaf_sweep(&p, &[0.35, 0.3, 0.25, 0.2, 0.15], &s, &cfg).unwrap();
    assert!(leaf.lipschitz.is_finite() && leaf.lipschitz > 0.0);
    for (k, d) in leaf.step_distance.iter().enumerate() {
        assert!(*d <= leaf.lipschitz * (leaf.betas[k] - leaf.betas[k + 1]).abs() + 1e-15);
    }
    assert!(leaf.max_second_difference < 10.0 * leaf.lipschitz / 0.05, "{leaf:?}");
    assert!(leaf_sweep(&p, &[0.35, 0.25], &s, &cfg).is_err());
}

/// Diagonal field on the punctured torus: standard form at the puncture plus generator angles.
fn abelian_field(s: &SurfaceComplex, alpha: f64) -> LinkField {
    let mut f = LinkField::identity(s);
    for (&e, &d) in &puncture_region(s, 0).unwrap().dtheta {
        f.links[e] = Su2::diag(alpha * d);
    }
    for (name, angle) in [("a", 0.3), ("b", -0.5)] {
        let (e, sg) = s.closing[name];
        f.links[e] = Su2::diag(sg as f64 * angle);
    }
    f.puncture_weights[0] = alpha;
    f
}

fn link_angles(f: &LinkField) -> Vec<f64> {
    f.links
        .iter()
        .map(|u| {
            assert!(u.0[1].abs() < 1e-12 && u.0[2].abs() < 1e-12);
            u.0[3].atan2(u.0[0])
        })
        .collect()
}

/// Limit of the abelian flow: the link angles move by `W⁻¹dᵀψ` with `ψ` solving the face
/// Poisson problem that carries the curvature to its minimizer `θ_f = λ A_f` (puncture face
/// offset by `2πβ`).
fn abelian_limit(s: &SurfaceComplex, m: &MetricGrid, a0: &[f64], beta: f64) -> Vec<f64> {
    let nf = s.faces.len();
    let ne = s.edges.len();
    let mut d = DMatrix::<f64>::zeros(nf, ne);
    for (f, face) in s.faces.iter().enumerate() {
        for &(e, sg) in &face.boundary {
            d[(f, e)] += sg as f64;
        }
    }
    let winv = DMatrix::from_diagonal(&DVector::from_iterator(ne, m.edge_weight.iter().map(|w| 1.0 / w)));
    let theta0 = &d * DVector::from_column_slice(a0);
    let area: f64 = m.face_area.iter().sum();
    let lambda = -2.0 * PI * beta / area;
    let pf = s.punctures[0].face;
    let target = DVector::from_iterator(
        nf,
        (0..nf).map(|f| lambda * m.face_area[f] + if f == pf { 2.0 * PI * beta } else { 0.0 }),
    );
    // The face Laplacian has the constants as kernel; pin their component with a rank-one term.
    let lap = &d * &winv * d.transpose() + DMatrix::from_element(nf, nf, 1.0);
    let psi = lap.lu().solve(&(target - theta0)).unwrap();
    let a = DVector::from_column_slice(a0) + &winv * d.transpose() * psi;
    a.iter().copied().collect()
}

#[test]
fn abelian_flow_matches_poisson_limit() {
    let s = build_surface(SurfaceSpec::punctured_torus(16)).unwrap();
    let m = metric_for(&s, 1.0, 1.0).unwrap();
    let f0 = abelian_field(&s, 0.3);
    let twisted = apply_twist(&f0, &s, 0, &TwistProfile::new(0.3, 0.27).unwrap()).unwrap();
    let cfg = FlowConfig {
        tol_flat: 0.0,
        t_max: 1.0,
        ..FlowConfig::default()
    };
    let out = twist_and_flow(&f0, &s, &m, &[], 0.3, 0.27, &cfg).unwrap();
    let limit = abelian_limit(&s, &m, &link_angles(&twisted), 0.27);
    let got = link_angles(&out.field);
    let err = got
        .iter()
        .zip(&limit)
        .map(|(x, y)| {
            let d = (x - y).rem_euclid(2.0 * PI);
            d.min(2.0 * PI - d)
        })
        .fold(0.0, f64::max);
    assert!(err < 1e-9, "{err}");
    for name in ["a", "b"] {
        let path = &s.loops[name];
        let angle: f64 = path.iter().map(|&(e, sg)| sg as f64 * limit[e]).sum();
        assert!((out.field.product(path).trace() - 2.0 * angle.cos()).abs() < 1e-9);
    }
}

#[test]
fn abelian_leaf_is_monotone() {
    let s = build_surface(SurfaceSpec::punctured_torus(16)).unwrap();
    let m = metric_for(&s, 1.0, 1.0).unwrap();
    let f0 = abelian_field(&s, 0.3);
    let cfg = FlowConfig {
        tol_flat: 0.0,
        t_max: 1.0,
        ..FlowConfig::default()
    };
    let traces: Vec<f64> = [0.3, 0.28, 0.26, 0.24, 0.22]
        .iter()
        .map(|&b| {
            let out = twist_and_flow(&f0, &s, &m, &[], 0.3, b, &cfg).unwrap();
            out.field.product(&s.loops["a"]).trace()
        })
        .collect();
    let inc = traces.windows(2).all(|w| w[1] > w[0]);
    let dec = traces.windows(2).all(|w| w[1] < w[0]);
    assert!(inc || dec, "{traces:?}");
}

fn genus2_point(rep: Representation) -> (SurfaceComplex, FoliationPoint) {
    let s = build_surface(SurfaceSpec::genus2(16, 8)).unwrap();
    (s, FoliationPoint::new(rep, 0.4, 0.5).unwrap())
}

#[test]
fn near_side_ring_carries_the_pinching_holonomy() {
    let (s, p) = genus2_point(Representation::genus2_generic(0.3, 1).unwrap());
    let f = connection_from_representation(&p.rep, &s).unwrap();
    let ring = near_side_ring(&s).unwrap();
    assert!(f.product(&ring).dist(&p.rep.get("c").unwrap()) < 1e-10);
}

#[test]
fn nodal_flow_keeps_the_far_component() {
    let (x, y) = commutator_pair(Su2::diag(2.0 * PI * 0.3), 1.1, 0.4).unwrap();
    let rep = Representation::from_generators(
        Topology::Genus2SeparatingPinch,
        &[("a1", x), ("b1", y), ("a2", Su2::IDENTITY), ("b2", Su2::IDENTITY)],
    );
    let (s, p) = genus2_point(rep);
    let run = nodal_pi_ab(&p, 0.25, &s, &FlowConfig::default()).unwrap();
    assert!(run.lambda1 > STABILITY_THRESHOLD);
    assert_eq!(run.rep.get("a2").unwrap(), Su2::IDENTITY);
    assert_eq!(run.rep.get("b2").unwrap(), Su2::IDENTITY);
    assert!((run.rep.get("c_p").unwrap().trace() - 2.0 * (0.5 * PI).cos()).abs() < 1e-3);
}

#[test]
fn nodal_flow_preserves_the_pinching_class() {
    let (s, p) = genus2_point(Representation::genus2_generic(0.3, 2).unwrap());
    let run = nodal_pi_ab(&p, 0.25, &s, &FlowConfig::default()).unwrap();
    let before = p.rep.get("c").unwrap().trace();
    let after = run.rep.get("c").unwrap().trace();
    assert!((before - after).abs() < 1e-10, "{before} {after}");
    // Untouched links: the far component and the node columns.
    let r = realize(&p, &s).unwrap();
    let m0 = metric_for(&s, 0.0, 0.5).unwrap();
    let p_comp = run.component;
    for (f, face) in s.faces.iter().enumerate() {
        if m0.face_active[f] && m0.face_component[f] != p_comp {
            for &(e, _) in &face.boundary {
                assert_eq!(run.field.links[e], r.field.links[e]);
            }
        }
    }
}

#[test]
fn accidentally_reducible_points_are_refused() {
    let rep = Representation::genus2_accidentally_reducible([0.4, 1.1, 0.7, -0.5], Alg::new(1.0, 0.2, 0.0));
    let s = build_surface(SurfaceSpec::genus2(16, 8)).unwrap();
    let p = FoliationPoint {
        rep,
        alpha: 0.3,
        ell: 0.4,
        kappa: 0.5,
    };
    let cfg = FlowConfig::default();
    assert!(matches!(nodal_pi_ab(&p, 0.25, &s, &cfg), Err(Error::AccidentallyReducible)));
    assert!(matches!(
        degeneration_experiment(&p, 0.25, &[0.4, 0.2], 2, &s, &cfg),
        Err(Error::AccidentallyReducible)
    ));
}

#[test]
fn degeneration_rejects_bad_sequences() {
    let (s, p) = genus2_point(Representation::genus2_generic(0.3, 1).unwrap());
    let cfg = FlowConfig::default();
    for ells in [&[][..], &[0.2, 0.4][..], &[0.4, 0.0][..]] {
        assert!(matches!(
            degeneration_experiment(&p, 0.25, ells, 2, &s, &cfg),
            Err(Error::Config(_))
        ));
    }
}
