//! Decentralized, ability-aware cooperative manipulation for teams of planar
//! serial arms carrying a shared rigid object.
//!
//! Each robot runs its own adaptive controller, knows only its own torque
//! limits and grasp point, and shares a single vector: the part of its
//! commanded force it could not deliver.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod adaptive;
pub mod capability;
pub mod ellipsoid;
pub mod error;
pub mod kinematics;
pub mod linalg;
pub mod manipulability;
pub mod object;
pub mod sim;

pub use error::{Error, Result};
