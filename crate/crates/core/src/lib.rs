//! Fiberwise Hilbert renorming of finite-dimensional Banach bundles and
//! finite-index conditional expectations for stratified subhomogeneous
//! C*-bundles over an interval.
//!
//! The geometric half ([`convex`], [`ellipsoid`], [`bundle`]) represents
//! fiber unit balls as origin-symmetric polytopes, replaces each by its
//! Löwner ellipsoid and certifies the result with a John decomposition.
//! The operator-algebraic half ([`multimatrix`], [`expectation`]) works with
//! multi-matrix algebras, Bratteli matrices and block density states.

pub mod bundle;
pub mod convex;
pub mod ellipsoid;
mod error;
pub mod exec;
pub mod expectation;
pub mod linalg;
pub mod lp;
pub mod multimatrix;

pub use error::{Error, Result};
pub use exec::Exec;
