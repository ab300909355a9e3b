use ymlab_core::field::{connection_from_representation, random_gauge, LinkField, Representation};
use ymlab_core::flow::{ym_action, FlowConfig};
use ymlab_core::foliation::{pi_ab_run, FoliationPoint};
use ymlab_core::geom::{build_surface, metric_for, SurfaceSpec};
use ymlab_core::spectral::lambda1_sweep;

#[test]
fn twisting_a_punctured_torus_lands_on_the_new_weight() {
    let s = build_surface(SurfaceSpec::punctured_torus(16)).unwrap();
    let rep = Representation::punctured_torus(0.3, 1.2, 0.4).unwrap();
    let point = FoliationPoint::new(rep, 1.0, 1.0).unwrap();
    let cfg = FlowConfig {
        tol_flat: 1e-8,
        ..FlowConfig::default()
    };
    let run = pi_ab_run(&point, 0.2, &s, &cfg).unwrap();
    let d = &run.diagnostics;
    assert!(d.converged);
    assert!(d.is_monotone(1e-12));
    assert!((run.rep.alpha().unwrap() - 0.2).abs() < 1e-6);
    assert!(run.rep.relation_residual() < 1e-6);
}

#[test]
fn flat_connections_have_zero_action_in_every_gauge() {
    let s = build_surface(SurfaceSpec::genus2(16, 8)).unwrap();
    let m = metric_for(&s, 0.4, 0.5).unwrap();
    let rep = Representation::genus2_generic(0.0, 7).unwrap();
    let f = connection_from_representation(&rep, &s).unwrap();
    assert!(ym_action(&f, &s, &m).unwrap() < 1e-20);
    let rough = LinkField::random_near_identity(&s, 0.3, 3);
    let a = ym_action(&rough, &s, &m).unwrap();
    let b = ym_action(&rough.gauge_transform(&s, &random_gauge(&s, 4)), &s, &m).unwrap();
    assert!(a > 1e-3);
    assert!((a - b).abs() < 1e-10 * a);
}

#[test]
fn irreducible_gap_survives_pinching() {
    let rep = Representation::genus2_generic(0.0, 7).unwrap();
    let sweep = lambda1_sweep(&rep, SurfaceSpec::genus2(16, 8), 0.5, &[0.4, 0.2]).unwrap();
    assert_eq!(sweep.len(), 2);
    assert!(sweep.iter().all(|p| p.lambda1 > 1e-3), "{sweep:?}");
}
