//! The checking context and the exhaustive enumeration driver every
//! semantic check is built on.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::comp::{Outcome, ProgramTable};
use crate::error::Result;
use crate::expr::Env;
use crate::pred::PredDefs;
use crate::schema::{State, StateSchema, Universe};
use crate::value::{product, Domain, Value};
use crate::verdict::{Counterexample, Verdict};

/// Schema plus the predicate and program definitions a check may refer to.
#[derive(Debug)]
pub struct Ctx {
    pub schema: StateSchema,
    pub preds: PredDefs,
    pub programs: ProgramTable,
    universe: OnceLock<Universe>,
}

impl Clone for Ctx {
    fn clone(&self) -> Self {
        Ctx::new(self.schema.clone(), self.preds.clone(), self.programs.clone())
    }
}

/// Outcome of checking one (state, assignment) point.
#[derive(Debug)]
pub(crate) enum Point {
    Pass,
    Fail {
        outcome: Option<Outcome>,
        note: String,
    },
    Fault(String),
}

impl Ctx {
    /// Unvalidated construction; see [`Ctx::validate`].
    pub fn new(schema: StateSchema, preds: PredDefs, programs: ProgramTable) -> Self {
        Ctx {
            schema,
            preds,
            programs,
            universe: OnceLock::new(),
        }
    }

    /// Cross-reference and acyclicity checks over all definitions.
    pub fn validate(&self) -> Result<()> {
        self.preds.validate(&self.schema)?;
        self.programs.validate(self)
    }

    pub fn universe(&self) -> Result<&Universe> {
        if let Some(u) = self.universe.get() {
            return Ok(u);
        }
        let u = self.schema.universe()?;
        Ok(self.universe.get_or_init(|| u))
    }

    pub fn state_count(&self) -> u64 {
        self.schema.universe_size().min(u64::MAX as u128) as u64
    }

    /// Runs `check` at every state and every assignment of `vars`, in
    /// canonical order (states outermost), and reports the first failure.
    /// States are distributed over the rayon pool; the reduction keeps the
    /// earliest failing index so the result does not depend on scheduling.
    pub(crate) fn for_all<F>(&self, vars: &[(String, Domain)], check: F) -> Result<Verdict>
    where
        F: Fn(&Env<'_>, &State) -> Point + Sync,
    {
        let universe = self.universe()?;
        let mut per_var = Vec::with_capacity(vars.len());
        for (_, d) in vars {
            per_var.push(d.enumerate()?);
        }
        let radices: Vec<usize> = per_var.iter().map(Vec::len).collect();
        let assignments: Vec<Vec<Value>> = product(&radices)
            .into_iter()
            .map(|digits| {
                digits
                    .into_iter()
                    .enumerate()
                    .map(|(i, d)| per_var[i][d].clone())
                    .collect()
            })
            .collect();

        let probe = |i: usize| {
            let s = universe.state(i);
            for values in &assignments {
                let env = Env::from_pairs(
                    vars.iter()
                        .map(|(n, _)| n.as_str())
                        .zip(values.iter().cloned()),
                );
                match check(&env, &s) {
                    Point::Pass => {}
                    failure => {
                        let bindings = vars
                            .iter()
                            .map(|(n, _)| n.clone())
                            .zip(values.iter().cloned())
                            .collect();
                        return Some((s, bindings, failure));
                    }
                }
            }
            None
        };
        // Tiny universes are not worth the pool's dispatch cost.
        let first = if universe.len() * assignments.len() < 64 {
            (0..universe.len()).find_map(probe)
        } else {
            (0..universe.len()).into_par_iter().find_map_first(probe)
        };

        Ok(match first {
            None => Verdict::Holds {
                states: self.state_count(),
            },
            Some((state, bindings, Point::Fail { outcome, note })) => {
                Verdict::Violated(Counterexample {
                    state,
                    bindings,
                    outcome,
                    note,
                })
            }
            Some((state, bindings, Point::Fault(note))) => Verdict::Fault(Counterexample {
                state,
                bindings,
                outcome: None,
                note,
            }),
            Some((_, _, Point::Pass)) => unreachable!("passing points are never reported"),
        })
    }
}
