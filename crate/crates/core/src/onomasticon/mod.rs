//! Name-frequency evidence.
//!
//! Name frequencies are treated as uncertain: each table seeds a
//! Dirichlet-multinomial urn, and a family's names are drawn from it in a
//! fixed order (parents first, then by id) under optional naming constraints.

mod dirichlet;
mod family;
mod table;

use thiserror::Error;

pub use dirichlet::{
    posterior_predictive, sequence_likelihood, DirichletPrior, NameModel, PriorSpec,
};
pub use family::{
    family_likelihood_alt, family_likelihood_null, onomasticon_lr, validate_family, AltLikelihood,
    FamilyConfiguration, FamilyTables, IdentificationAssumption, Member, NamingConstraints,
    OnomasticonLr, MAX_ASSUMPTIONS,
};
pub use table::{
    counts_from_frequencies, validate_table, Counts, NameTable, OTHER, SUM_TOLERANCE,
    SYNTHETIC_PREFIX,
};

use crate::diag::Diagnostic;
use crate::pedigree::Sex;

#[derive(Debug, Error)]
pub enum OnomasticonError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("name table `{label}` is invalid ({} problem(s))", diagnostics.len())]
    Invalid {
        label: String,
        diagnostics: Vec<Diagnostic>,
    },
    #[error("family configuration is invalid: {}", .0.first().map(|d| d.message.as_str()).unwrap_or(""))]
    Family(Vec<Diagnostic>),
    #[error("name `{0}` is not a category of the table")]
    UnknownName(String),
    #[error("no name table for sex {0}")]
    MissingTable(Sex),
    #[error("{0}")]
    Parameter(String),
}

pub type Result<T> = std::result::Result<T, OnomasticonError>;
