//! Exact truncated series arithmetic: the kernel under every other module.

pub mod bi;
pub mod tpoly;
pub mod uni;

pub use bi::{invert_near_identity, BiSeries};
pub use tpoly::TimePolynomial;
pub use uni::UniSeries;
