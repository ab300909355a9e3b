use ymlab_core::field::{connection_from_representation, LinkField, Representation};
use ymlab_core::geom::{build_surface, metric_for, MetricGrid, SurfaceComplex, SurfaceSpec};

/// A genus-2 surface with its pinched metric and a flat connection plus a seeded perturbation.
pub struct Fixture {
    pub surface: SurfaceComplex,
    pub metric: MetricGrid,
    pub flat: LinkField,
    pub rough: LinkField,
}

pub fn genus2(n: usize, ell: f64) -> Fixture {
    let surface = build_surface(SurfaceSpec::genus2(n, n / 2)).expect("surface");
    let metric = metric_for(&surface, ell, 0.5).expect("metric");
    let rep = Representation::genus2_generic(0.0, 7).expect("representation");
    let flat = connection_from_representation(&rep, &surface).expect("connection");
    let rough = LinkField::random_near_identity(&surface, 0.3, 7);
    Fixture {
        surface,
        metric,
        flat,
        rough,
    }
}
