//! Presented dagger algebras and their truncated ("fringe") elements.

mod certificate;
mod element;
mod presentation;
mod unipoly;

pub use certificate::Certificate;
pub use element::{FringeElement, TruncationLevel, UNBOUNDED};
pub use presentation::{render_terms, Key, Presentation, PresentationKind, Terms, DEFAULT_FRINGE_CAP};
pub use unipoly::UniPoly;

use thiserror::Error;

use crate::arith::ArithError;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DagError {
    #[error("certificate violation: needs offset {offset} at every fringe level up to {levels}, cap is {cap}")]
    CertificateViolation { offset: i64, cap: i64, levels: u32 },
    #[error("invalid presentation: {0}")]
    InvalidPresentation(String),
    #[error("invalid expression: {0}")]
    InvalidExpression(String),
    #[error("not a unit: {0}")]
    NotAUnit(String),
    #[error("cover is not etale: {0}")]
    NonEtale(String),
    #[error("elements live on different presentations")]
    PresentationMismatch,
    #[error(transparent)]
    Arith(#[from] ArithError),
}
