//! Condition measures of a polytope `conv(A)`.

pub mod phi;
pub mod scaled;

use nalgebra::DVector;

use crate::polytope::{FaceDescriptor, WitnessPair};

pub use phi::{
    face_distance_table, facial_distance, local_phi_lower_bound, local_phi_lower_bound_report, pdirw, phi_pair,
    phi_pair_dual, smallest_containing_face, ContainingFace, FaceDistance, ZERO_DIRECTION_TOL,
};
pub use scaled::{
    bar_phi_bounds, bar_phi_pair, bar_phi_pair_dual, norm_g, scaled_instance, BarPhiBounds, ScaledInstance, ZG_TOL,
};

/// A computed measure with its certificate.
#[derive(Debug, Clone)]
pub struct PhiReport {
    pub value: f64,
    /// Set for face-based measures.
    pub minimizing_face: Option<FaceDescriptor>,
    pub witness: WitnessPair,
    /// The optimal `p` for pair queries, or the unit direction `(u - v)/|u - v|`
    /// for face-based measures.
    pub optimal_p: Option<DVector<f64>>,
}
