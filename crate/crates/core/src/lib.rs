//! nilnorm: exact normal forms for planar vector fields with nilpotent
//! linear part.
//!
//! The engine works over exact rationals throughout; floating point appears
//! only in the majorant-norm surrogates of the iteration traces. It computes
//! the unique normalized transformation taking
//! `dx/dt = y + f, dy/dt = g` into `dx/dt = y + r(x), dy/dt = s(x)`,
//! integrability certificates, the weighted secondary normal form of `r`,
//! order-doubling iteration traces, and formal flow maps with polynomial-in-t
//! coefficients.

pub mod checks;
pub mod error;
pub mod fixtures;
pub mod flows;
pub mod io;
pub mod kam;
pub mod linsolve;
pub mod order;
pub mod rat;
pub mod series;
pub mod stage2;
pub mod takens;
pub mod vf;

pub use error::EngineError;
pub use order::Order;
pub use rat::Rat;
pub use series::{BiSeries, TimePolynomial, UniSeries};
pub use takens::{IntegrabilityOrder, TakensNormalForm};
pub use vf::{NormalizedTransformation, PlanarVectorField};
