//! General (α, β)-metrics `F = α φ(b², β/α)`: sprays, Douglas curvature by
//! two independent routes, and the Douglas solution family.

pub mod chart;
pub mod douglas;
pub mod error;
pub mod expr;
pub mod gab;
pub mod jets;
pub mod par;
pub mod sampling;
pub mod solutions;

pub use error::{Error, Result};
