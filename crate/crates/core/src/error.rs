use thiserror::Error;

/// Static errors: malformed inputs, unresolved names, rule misuse.
///
/// Runtime problems inside a checked program (a failed `assert`, `the` on a
/// missing key) are not errors; they surface as [`crate::Verdict::Fault`].
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("malformed domain: {0}")]
    MalformedDomain(String),
    #[error("malformed schema: {0}")]
    MalformedSchema(String),
    #[error("unknown state field `{0}`")]
    UnknownField(String),
    #[error("unbound variable `{0}`")]
    UnboundVar(String),
    #[error("unknown program `{0}`")]
    UnknownProgram(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("`{name}` expects {expected} arguments, got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("definitions are cyclic through `{0}`")]
    Cyclic(String),
    #[error("cannot infer a finite domain for `{0}`; give the binder an explicit domain")]
    NoDomain(String),
    #[error("operation expects an atomic computation, got {0}")]
    NotAtomic(String),
    #[error("operation expects a bind, got {0}")]
    NotBind(String),
    #[error("annotation skeletons differ: {0}")]
    SkeletonMismatch(String),
    #[error("rule `{rule}` does not apply: {reason}")]
    RuleShape { rule: String, reason: String },
    #[error("side condition failed: {0}")]
    SideCondition(String),
    #[error("claim refuted by enumeration: {0}")]
    Refuted(String),
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
