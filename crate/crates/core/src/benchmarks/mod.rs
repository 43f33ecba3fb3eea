//! Generators for the two benchmark systems.

pub mod advdiff;
pub mod rc;

pub use advdiff::{gen_advdiff, gen_advdiff_deim, AdvDiffGrid};
pub use rc::gen_rc;
