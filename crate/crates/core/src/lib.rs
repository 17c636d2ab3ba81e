//! Carathéodory isometries between finite-dimensional unit balls, norm-one
//! projections onto their images, and the holomorphic retractions built from
//! them.

pub mod caratheodory;
pub mod convex;
pub mod error;
pub mod holomap;
pub mod instances;
pub mod linalg;
pub mod norms;
pub mod projections;
pub mod retraction;

pub use error::{Error, Residual, Result};
pub use linalg::{CMatrix, CVector, C64};
pub use holomap::MapExpr;
pub use norms::{Norm, NormKind};
pub use projections::ProjectionBundle;
pub use retraction::RetractionBundle;
