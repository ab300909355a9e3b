//! Lattice SU(2) connections: links, curvature, holonomy, representations and the twist.

pub mod construct;
pub mod curvature;
pub mod links;
pub mod representation;
pub mod twist;

pub use construct::{connection_from_representation, extract_representation, spanning_tree};
pub use curvature::{curvature, curvature_norms, plaquette_log, plaquettes, CurvatureField, Plaquette};
pub use links::{random_gauge, LinkField};
pub use representation::{
    accidental_reducibility, commutant_dimension, reducibility, Reducibility, Representation,
};
pub use twist::{apply_twist, standardize_puncture, TwistProfile};
