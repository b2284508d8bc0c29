//! Annotated Hoare triples over a nondeterministic state monad, decided by
//! exhaustive enumeration over finite state spaces.

pub mod annot;
pub mod cli;
pub mod comp;
pub mod corpus;
pub mod ctx;
pub mod error;
pub mod expr;
pub mod hoare;
pub mod judgement;
pub mod pred;
pub mod schema;
pub mod soundness;
pub mod store;
pub mod value;
pub mod vcg;
pub mod verdict;

pub use annot::{AnnComp, AnnRun, AnnTriple};
pub use comp::{Binder, Comp, Outcome, ProgramDef, ProgramTable};
pub use ctx::Ctx;
pub use error::{Error, Result};
pub use expr::{Env, Expr, Fault};
pub use hoare::{Scope, Triple};
pub use pred::{PostPred, Pred, PredDef, PredDefs};
pub use schema::{State, StateSchema, Universe};
pub use value::{Domain, Value};
pub use verdict::{Counterexample, Verdict};
