//! Object-oriented network fragments.
//!
//! A document declares classes with `input`, `output` and internal nodes and
//! nested `instance`s of other classes, and names one class as the model root:
//!
//! ```text
//! class Leaf {
//!   input node h : [t, f];
//!   output node o : [a, b] parents (h) cpt { 0.9, 0.1; 0.2, 0.8 };
//! }
//! class Model {
//!   node h : [t, f] cpt { 0.5, 0.5 };
//!   instance left : Leaf (h = h);
//!   node both : [no, yes] parents (left.o) cpt { 1, 0; 0, 1 };
//! }
//! network Model;
//! ```
//!
//! [`flatten`] expands instances into a single [`Network`] whose variables are
//! named `instancePath.node`; bound inputs are replaced by the outer variable.
//! The grammar is written out in `docs/oobn-grammar.md`.

mod ast;
mod flatten;
mod lexer;
mod parser;
mod printer;
mod validate;

use thiserror::Error;

pub use ast::*;
pub use parser::parse;
pub use printer::{document_from_network, print};
pub use validate::{validate, LITERAL_TOLERANCE};

use crate::diag::{has_errors, Diagnostic};
use crate::factor::{FactorError, Network};

/// Deepest allowed chain of nested class instantiations, counting the root.
pub const MAX_DEPTH: usize = 16;

#[derive(Debug, Error)]
pub enum OobnError {
    #[error("document has {} error(s)", .0.len())]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Network(#[from] FactorError),
}

/// Validates and flattens a document into a single network.
pub fn flatten(doc: &ModelDocument) -> Result<Network, OobnError> {
    let diags = validate(doc);
    if has_errors(&diags) {
        return Err(OobnError::Invalid(diags));
    }
    flatten::flatten_unchecked(doc)
}

/// Parse, validate and flatten in one step.
pub fn compile(source: &str) -> Result<Network, OobnError> {
    let doc = parse(source).map_err(OobnError::Invalid)?;
    flatten(&doc)
}
