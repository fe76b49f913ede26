//! Numerical building blocks shared by every module.

pub mod optimize;
pub mod quad;
pub mod roots;
pub mod special;

pub use quad::{integrate, integrate_pieces, QuadResult, Tolerance};
