//! Isoperimetric profile bounds for uniformly log-concave measures and
//! uniformly convex bodies, with exact 1D oracles, the radial transport map
//! and concentration bounds. The guide in `book/` walks through each module.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod concentration;
pub mod delta;
pub mod error;
pub mod functional;
pub mod numeric;
pub mod oned;
pub mod profile;
pub mod transport;

pub use error::{Error, Result};

// Runs the book's code blocks as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/moduli.md")]
    mod moduli {}
    #[doc = include_str!("../../../book/src/one-dimension.md")]
    mod one_dimension {}
    #[doc = include_str!("../../../book/src/profiles.md")]
    mod profiles {}
    #[doc = include_str!("../../../book/src/transport.md")]
    mod transport {}
    #[doc = include_str!("../../../book/src/concentration.md")]
    mod concentration {}
    #[doc = include_str!("../../../book/src/functional.md")]
    mod functional {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
