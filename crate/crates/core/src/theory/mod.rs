//! Tail calculus and a priori error bounds.

pub mod bounds;
pub mod tail;

pub use bounds::*;
pub use tail::*;
