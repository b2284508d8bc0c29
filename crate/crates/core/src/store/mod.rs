//! Text formats and persistence.

pub mod diff;
pub mod parse;
pub mod print;
pub mod project;
pub mod sexp;

pub use diff::{diff_annotations, DiffReport, StepDiff};
pub use project::{Project, StoredAnn};
