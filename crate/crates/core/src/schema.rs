//! State schemas and the enumerable state universe.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::value::{Domain, Value};

/// Ordered list of state fields and their domains.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StateSchema {
    fields: Vec<(String, Domain)>,
}

/// A total assignment of values to the schema's fields, stored positionally.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State(Vec<Value>);

impl StateSchema {
    pub fn new<I, S>(fields: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Domain)>,
        S: Into<String>,
    {
        let fields: Vec<(String, Domain)> =
            fields.into_iter().map(|(n, d)| (n.into(), d)).collect();
        let mut seen = BTreeSet::new();
        for (name, dom) in &fields {
            if !seen.insert(name.as_str()) {
                return Err(Error::MalformedSchema(format!("field `{name}` declared twice")));
            }
            dom.validate()?;
        }
        Ok(StateSchema { fields })
    }

    pub fn fields(&self) -> &[(String, Domain)] {
        &self.fields
    }

    pub fn index_of(&self, field: &str) -> Option<usize> {
        self.fields.iter().position(|(n, _)| n == field)
    }

    pub fn domain_of(&self, field: &str) -> Option<&Domain> {
        self.fields.iter().find(|(n, _)| n == field).map(|(_, d)| d)
    }

    /// Product of the field-domain sizes.
    pub fn universe_size(&self) -> u128 {
        self.fields
            .iter()
            .fold(1u128, |acc, (_, d)| acc.saturating_mul(d.size()))
    }

    /// Materialized universe, indexable so that enumeration can be split
    /// across workers without losing the canonical order.
    pub fn universe(&self) -> Result<Universe> {
        let mut per_field = Vec::with_capacity(self.fields.len());
        for (_, d) in &self.fields {
            per_field.push(d.enumerate()?);
        }
        let size = per_field
            .iter()
            .try_fold(1usize, |acc, vs| acc.checked_mul(vs.len()))
            .ok_or_else(|| Error::MalformedSchema("state universe too large".into()))?;
        Ok(Universe { per_field, size })
    }

    /// All states in canonical order: lexicographic in field order.
    pub fn enumerate_states(&self) -> Result<Vec<State>> {
        let u = self.universe()?;
        Ok((0..u.len()).map(|i| u.state(i)).collect())
    }

    pub fn state(&self, values: Vec<Value>) -> Result<State> {
        if values.len() != self.fields.len() {
            return Err(Error::Invalid(format!(
                "state has {} values, schema has {} fields",
                values.len(),
                self.fields.len()
            )));
        }
        for ((name, dom), v) in self.fields.iter().zip(&values) {
            if !dom.contains(v) {
                return Err(Error::Invalid(format!("{v} is not a member of field `{name}`")));
            }
        }
        Ok(State(values))
    }

    /// Value of a named field in `state`.
    pub fn get<'s>(&self, state: &'s State, field: &str) -> Option<&'s Value> {
        self.index_of(field).map(|i| state.get(i))
    }

    pub fn display<'a>(&'a self, state: &'a State) -> StateDisplay<'a> {
        StateDisplay { schema: self, state }
    }
}

#[derive(Clone, Debug)]
pub struct Universe {
    per_field: Vec<Vec<Value>>,
    size: usize,
}

impl Universe {
    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// The `index`-th state in canonical order.
    pub fn state(&self, mut index: usize) -> State {
        let mut values = vec![Value::Unit; self.per_field.len()];
        for (slot, vs) in values.iter_mut().zip(&self.per_field).rev() {
            *slot = vs[index % vs.len()].clone();
            index /= vs.len();
        }
        State(values)
    }
}

impl State {
    pub fn values(&self) -> &[Value] {
        &self.0
    }

    pub fn get(&self, index: usize) -> &Value {
        &self.0[index]
    }

    pub fn with(&self, index: usize, v: Value) -> State {
        let mut vals = self.0.clone();
        vals[index] = v;
        State(vals)
    }
}

pub struct StateDisplay<'a> {
    schema: &'a StateSchema,
    state: &'a State,
}

impl fmt::Display for StateDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, ((name, _), v)) in self.schema.fields.iter().zip(&self.state.0).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{name} = {v}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_flag_schema_has_two_states() {
        let s = StateSchema::new([("flag", Domain::Bool)]).unwrap();
        assert_eq!(s.enumerate_states().unwrap().len(), 2);
    }

    #[test]
    fn empty_schema_has_one_state() {
        let s = StateSchema::default();
        let states = s.enumerate_states().unwrap();
        assert_eq!(states, vec![State(vec![])]);
    }

    #[test]
    fn duplicate_fields_rejected() {
        assert!(StateSchema::new([("a", Domain::Bool), ("a", Domain::Bool)]).is_err());
    }

    #[test]
    fn enumeration_is_lexicographic_in_field_order() {
        let s = StateSchema::new([("a", Domain::Bool), ("b", Domain::nat(0, 2))]).unwrap();
        let states = s.enumerate_states().unwrap();
        assert_eq!(states.len(), 6);
        assert_eq!(states[1].values(), &[Value::Bool(false), Value::Nat(1)]);
        assert_eq!(states[3].values(), &[Value::Bool(true), Value::Nat(0)]);
    }
}
