//! Exact-inference toolkit for weighing identification evidence.
//!
//! The crate is organised bottom-up:
//!
//! - [`factor`]: discrete factors, Bayesian networks, variable elimination and a
//!   brute-force enumeration oracle.
//! - [`oobn`]: a small language for object-oriented network fragments, flattened
//!   into a [`factor::Network`].
//! - [`onomasticon`]: name-frequency evidence under Dirichlet-multinomial
//!   uncertainty, with family naming constraints.
//! - [`pedigree`]: mtDNA / Y-chromosome haplotype evidence over pedigrees.
//! - [`evidence`]: likelihood-ratio algebra, posterior odds, selection-effect and
//!   count-uncertainty corrections, sensitivity sweeps.

pub mod diag;
pub mod evidence;
pub mod factor;
pub mod onomasticon;
pub mod oobn;
pub mod pedigree;

pub use diag::{Diagnostic, Location, Severity};
pub use evidence::Lr;
pub use factor::{Evidence, Factor, Network, NetworkBuilder, VarId};
