use std::fmt;

use crate::comp::Outcome;
use crate::schema::{State, StateSchema};
use crate::value::Value;

/// Where a check failed: the state, the values of the quantified variables
/// and, for triples, the offending outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub state: State,
    pub bindings: Vec<(String, Value)>,
    pub outcome: Option<Outcome>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Checked exhaustively over `states` states.
    Holds { states: u64 },
    Violated(Counterexample),
    /// Evaluation faulted under a state the claim quantifies over.
    Fault(Counterexample),
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds { .. })
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match self {
            Verdict::Holds { .. } => None,
            Verdict::Violated(c) | Verdict::Fault(c) => Some(c),
        }
    }

    /// Exit-code class: 0 holds, 1 violated, 2 fault.
    pub fn code(&self) -> i32 {
        match self {
            Verdict::Holds { .. } => 0,
            Verdict::Violated(_) => 1,
            Verdict::Fault(_) => 2,
        }
    }

    /// Conjunction: the first non-holding verdict wins.
    pub fn and_then(self, next: impl FnOnce() -> Verdict) -> Verdict {
        if self.holds() {
            next()
        } else {
            self
        }
    }

    pub fn display<'a>(&'a self, schema: &'a StateSchema) -> VerdictDisplay<'a> {
        VerdictDisplay {
            verdict: self,
            schema,
        }
    }
}

pub struct VerdictDisplay<'a> {
    verdict: &'a Verdict,
    schema: &'a StateSchema,
}

impl fmt::Display for VerdictDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (label, c) = match self.verdict {
            Verdict::Holds { states } => return write!(f, "Holds ({states} states)"),
            Verdict::Violated(c) => ("Violated", c),
            Verdict::Fault(c) => ("Fault", c),
        };
        write!(f, "{label} at state {}", self.schema.display(&c.state))?;
        if !c.bindings.is_empty() {
            write!(f, " with ")?;
            for (i, (n, v)) in c.bindings.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{n} = {v}")?;
            }
        }
        if let Some(o) = &c.outcome {
            write!(
                f,
                "; outcome ret = {}, state' = {}",
                o.ret,
                self.schema.display(&o.state)
            )?;
        }
        if !c.note.is_empty() {
            write!(f, " ({})", c.note)?;
        }
        Ok(())
    }
}
