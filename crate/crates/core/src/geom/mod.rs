//! Surfaces, the conic degenerating metric family and plumbing coordinates.

pub mod conic;
pub mod metric;
pub mod surface;

pub use conic::{cone_metric_factor, epsilon, ConicCylinder, PlumbingMap};
pub use metric::{metric_for, MetricGrid, VirtualFace};
pub use surface::{build_surface, Path, Step, SurfaceComplex, SurfaceSpec, Topology};
