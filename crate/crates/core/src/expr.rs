//! Pure expressions over the current state and bound variables.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::schema::{State, StateSchema};
use crate::value::{Domain, Value};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Lit(Value),
    Var(String),
    /// Current value of a state field.
    Field(String),
    /// Record projection, `priority tcb`.
    Proj(Box<Expr>, String),
    /// Record update, `tcb⦇priority := p⦈`.
    RecUpd(Box<Expr>, String, Box<Expr>),
    /// Partial-map update, `tcbs(i ↦ tcb)`.
    MapUpd(Box<Expr>, Box<Expr>, Box<Expr>),
    /// Partial-map lookup; `absent` on a miss.
    Lookup(Box<Expr>, Box<Expr>),
    /// Lookup asserted present (`the (m k)`); faults on a miss.
    The(Box<Expr>, Box<Expr>),
    /// Domain of a map.
    Dom(Box<Expr>),
    SetMinus(Box<Expr>, Box<Expr>),
    SetLit(Vec<Expr>),
    /// Prepend to a sequence, `i·q`.
    Cons(Box<Expr>, Box<Expr>),
    /// Total-map application, `qs p`.
    Apply(Box<Expr>, Box<Expr>),
    /// Total-map point update, `qs(p := v)`.
    Assign(Box<Expr>, Box<Expr>, Box<Expr>),
    /// Membership in a set or a sequence.
    In(Box<Expr>, Box<Expr>),
    NotIn(Box<Expr>, Box<Expr>),
    Eq(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Mod(Box<Expr>, Box<Expr>),
}

/// A runtime fault: failed assertion, `the` on a missing key, a shape
/// mismatch, or a write outside a field's domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fault(pub String);

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub type EvalResult<T> = std::result::Result<T, Fault>;

/// Binder environment; later bindings shadow earlier ones.
#[derive(Clone, Debug, Default)]
pub struct Env<'a> {
    vars: Vec<(&'a str, Value)>,
}

impl<'a> Env<'a> {
    pub fn new() -> Self {
        Env { vars: Vec::new() }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (&'a str, Value)>) -> Self {
        Env {
            vars: pairs.into_iter().collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.vars.iter().rev().find(|(n, _)| *n == name).map(|(_, v)| v)
    }

    /// Binds `name` unless it is the wildcard `_`. Returns whether a binding
    /// was pushed, to be handed back to [`Env::pop`].
    pub fn push(&mut self, name: &'a str, v: Value) -> bool {
        if name == "_" {
            return false;
        }
        self.vars.push((name, v));
        true
    }

    pub fn pop(&mut self, pushed: bool) {
        if pushed {
            self.vars.pop();
        }
    }

    pub fn bindings(&self) -> &[(&'a str, Value)] {
        &self.vars
    }
}

fn kind_fault(op: &str, v: &Value) -> Fault {
    Fault(format!("{op}: unexpected {} value {v}", v.kind()))
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.into())
    }

    pub fn field(name: &str) -> Expr {
        Expr::Field(name.into())
    }

    pub fn lit(v: Value) -> Expr {
        Expr::Lit(v)
    }

    pub fn eq(a: Expr, b: Expr) -> Expr {
        Expr::Eq(Box::new(a), Box::new(b))
    }

    pub fn proj(e: Expr, field: &str) -> Expr {
        Expr::Proj(Box::new(e), field.into())
    }

    pub fn eval(&self, env: &Env<'_>, s: &State, schema: &StateSchema) -> EvalResult<Value> {
        self.eval_ref(env, s, schema).map(Cow::into_owned)
    }

    /// Evaluation that borrows from the state, the environment or the
    /// expression where it can; lookups into large fields then copy only
    /// the part they return.
    pub(crate) fn eval_ref<'a>(
        &'a self,
        env: &'a Env<'_>,
        s: &'a State,
        schema: &StateSchema,
    ) -> EvalResult<Cow<'a, Value>> {
        let ev = |e: &Expr| e.eval(env, s, schema);
        let er = |e: &'a Expr| e.eval_ref(env, s, schema);
        Ok(Cow::Owned(match self {
            Expr::Lit(v) => return Ok(Cow::Borrowed(v)),
            Expr::Var(x) => {
                return env
                    .get(x)
                    .map(Cow::Borrowed)
                    .ok_or_else(|| Fault(format!("unbound variable `{x}`")))
            }
            Expr::Field(f) => {
                let i = schema
                    .index_of(f)
                    .ok_or_else(|| Fault(format!("unknown field `{f}`")))?;
                return Ok(Cow::Borrowed(s.get(i)));
            }
            Expr::Proj(e, f) => {
                return match er(e)? {
                    Cow::Borrowed(Value::Record(fields)) => fields
                        .get(f)
                        .map(Cow::Borrowed)
                        .ok_or_else(|| Fault(format!("record has no field `{f}`"))),
                    Cow::Owned(Value::Record(mut fields)) => fields
                        .remove(f)
                        .map(Cow::Owned)
                        .ok_or_else(|| Fault(format!("record has no field `{f}`"))),
                    v => Err(kind_fault("projection", &v)),
                }
            }
            Expr::RecUpd(e, f, x) => match ev(e)? {
                Value::Record(mut fields) => {
                    let x = ev(x)?;
                    match fields.get_mut(f) {
                        Some(slot) => *slot = x,
                        None => return Err(Fault(format!("record has no field `{f}`"))),
                    }
                    Value::Record(fields)
                }
                v => return Err(kind_fault("record update", &v)),
            },
            Expr::MapUpd(m, k, x) | Expr::Assign(m, k, x) => match ev(m)? {
                Value::Map(mut entries) => {
                    let k = ev(k)?;
                    if matches!(self, Expr::Assign(..)) && !entries.contains_key(&k) {
                        return Err(Fault(format!("total map has no key {k}")));
                    }
                    entries.insert(k, ev(x)?);
                    Value::Map(entries)
                }
                v => return Err(kind_fault("map update", &v)),
            },
            Expr::Lookup(m, k) => match &*er(m)? {
                Value::Map(entries) => entries.get(&*er(k)?).cloned().unwrap_or(Value::Absent),
                v => return Err(kind_fault("lookup", v)),
            },
            Expr::The(m, k) | Expr::Apply(m, k) => {
                let k = er(k)?;
                let missing = |k: &Value| Fault(format!("`the` applied to a missing key {k}"));
                return match er(m)? {
                    Cow::Borrowed(Value::Map(entries)) => {
                        entries.get(&*k).map(Cow::Borrowed).ok_or_else(|| missing(&k))
                    }
                    Cow::Owned(Value::Map(mut entries)) => {
                        entries.remove(&*k).map(Cow::Owned).ok_or_else(|| missing(&k))
                    }
                    v => Err(kind_fault("map application", &v)),
                };
            }
            Expr::Dom(m) => match &*er(m)? {
                Value::Map(entries) => Value::Set(entries.keys().cloned().collect()),
                v => return Err(kind_fault("dom", v)),
            },
            Expr::SetMinus(a, b) => match (&*er(a)?, &*er(b)?) {
                (Value::Set(a), Value::Set(b)) => Value::Set(a.difference(b).cloned().collect()),
                (Value::Set(_), v) | (v, _) => return Err(kind_fault("set difference", v)),
            },
            Expr::SetLit(items) => Value::Set(
                items
                    .iter()
                    .map(ev)
                    .collect::<EvalResult<BTreeSet<Value>>>()?,
            ),
            Expr::Cons(h, t) => match ev(t)? {
                Value::Seq(mut items) => {
                    items.insert(0, ev(h)?);
                    Value::Seq(items)
                }
                v => return Err(kind_fault("cons", &v)),
            },
            Expr::In(x, c) | Expr::NotIn(x, c) => {
                let x = er(x)?;
                let found = match &**c {
                    // membership in a map's domain without building the set
                    Expr::Dom(m) => match &*er(m)? {
                        Value::Map(entries) => entries.contains_key(&*x),
                        v => return Err(kind_fault("dom", v)),
                    },
                    _ => match &*er(c)? {
                        Value::Set(items) => items.contains(&*x),
                        Value::Seq(items) => items.contains(&*x),
                        v => return Err(kind_fault("membership", v)),
                    },
                };
                Value::Bool(found == matches!(self, Expr::In(..)))
            }
            Expr::Eq(a, b) => Value::Bool(er(a)? == er(b)?),
            Expr::Not(e) => Value::Bool(!eval_bool(e, env, s, schema)?),
            Expr::And(a, b) => {
                Value::Bool(eval_bool(a, env, s, schema)? && eval_bool(b, env, s, schema)?)
            }
            Expr::Or(a, b) => {
                Value::Bool(eval_bool(a, env, s, schema)? || eval_bool(b, env, s, schema)?)
            }
            Expr::Add(a, b) => match (&*er(a)?, &*er(b)?) {
                (Value::Nat(x), Value::Nat(y)) => Value::Nat(
                    x.checked_add(*y)
                        .ok_or_else(|| Fault("natural overflow".into()))?,
                ),
                (Value::Nat(_), v) | (v, _) => return Err(kind_fault("addition", v)),
            },
            Expr::Mod(a, b) => match (&*er(a)?, &*er(b)?) {
                (Value::Nat(_), Value::Nat(0)) => return Err(Fault("modulo by zero".into())),
                (Value::Nat(x), Value::Nat(y)) => Value::Nat(x % y),
                (Value::Nat(_), v) | (v, _) => return Err(kind_fault("modulo", v)),
            },
        }))
    }

    /// Free variables, in first-occurrence order.
    pub fn free_vars(&self, out: &mut Vec<String>) {
        self.walk(&mut |e| {
            if let Expr::Var(x) = e {
                if !out.contains(x) {
                    out.push(x.clone());
                }
            }
        });
    }

    pub fn mentions_var(&self, name: &str) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= matches!(e, Expr::Var(x) if x == name));
        found
    }

    pub fn mentions_state(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= matches!(e, Expr::Field(_)));
        found
    }

    /// Whether evaluation can fault on well-shaped inputs (`the`, `mod`).
    pub fn may_fault(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= matches!(e, Expr::The(..) | Expr::Mod(..)));
        found
    }

    pub fn fields(&self, out: &mut Vec<String>) {
        self.walk(&mut |e| {
            if let Expr::Field(f) = e {
                if !out.contains(f) {
                    out.push(f.clone());
                }
            }
        });
    }

    fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Lit(_) | Expr::Var(_) | Expr::Field(_) => vec![],
            Expr::Proj(e, _) | Expr::Dom(e) | Expr::Not(e) => vec![e],
            Expr::RecUpd(a, _, b) => vec![a, b],
            Expr::MapUpd(a, b, c) | Expr::Assign(a, b, c) => vec![a, b, c],
            Expr::Lookup(a, b)
            | Expr::The(a, b)
            | Expr::SetMinus(a, b)
            | Expr::Cons(a, b)
            | Expr::Apply(a, b)
            | Expr::In(a, b)
            | Expr::NotIn(a, b)
            | Expr::Eq(a, b)
            | Expr::And(a, b)
            | Expr::Or(a, b)
            | Expr::Add(a, b)
            | Expr::Mod(a, b) => vec![a, b],
            Expr::SetLit(items) => items.iter().collect(),
        }
    }

    fn walk(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Simultaneous substitution of variables. Expressions bind nothing, so
    /// no capture is possible at this level.
    pub fn subst(&self, map: &BTreeMap<String, Expr>) -> Expr {
        let s = |e: &Expr| Box::new(e.subst(map));
        match self {
            Expr::Var(x) => map.get(x).cloned().unwrap_or_else(|| self.clone()),
            Expr::Lit(_) | Expr::Field(_) => self.clone(),
            Expr::Proj(e, f) => Expr::Proj(s(e), f.clone()),
            Expr::RecUpd(a, f, b) => Expr::RecUpd(s(a), f.clone(), s(b)),
            Expr::MapUpd(a, b, c) => Expr::MapUpd(s(a), s(b), s(c)),
            Expr::Assign(a, b, c) => Expr::Assign(s(a), s(b), s(c)),
            Expr::Lookup(a, b) => Expr::Lookup(s(a), s(b)),
            Expr::The(a, b) => Expr::The(s(a), s(b)),
            Expr::Dom(e) => Expr::Dom(s(e)),
            Expr::SetMinus(a, b) => Expr::SetMinus(s(a), s(b)),
            Expr::SetLit(items) => Expr::SetLit(items.iter().map(|e| e.subst(map)).collect()),
            Expr::Cons(a, b) => Expr::Cons(s(a), s(b)),
            Expr::Apply(a, b) => Expr::Apply(s(a), s(b)),
            Expr::In(a, b) => Expr::In(s(a), s(b)),
            Expr::NotIn(a, b) => Expr::NotIn(s(a), s(b)),
            Expr::Eq(a, b) => Expr::Eq(s(a), s(b)),
            Expr::Not(e) => Expr::Not(s(e)),
            Expr::And(a, b) => Expr::And(s(a), s(b)),
            Expr::Or(a, b) => Expr::Or(s(a), s(b)),
            Expr::Add(a, b) => Expr::Add(s(a), s(b)),
            Expr::Mod(a, b) => Expr::Mod(s(a), s(b)),
        }
    }

    /// Checks that every variable is in `scope` and every field exists.
    pub fn check(&self, scope: &[String], schema: &StateSchema) -> Result<()> {
        let mut err = None;
        self.walk(&mut |e| match e {
            Expr::Var(x) if !scope.contains(x) && err.is_none() => {
                err = Some(Error::UnboundVar(x.clone()))
            }
            Expr::Field(f) if schema.index_of(f).is_none() && err.is_none() => {
                err = Some(Error::UnknownField(f.clone()))
            }
            _ => {}
        });
        err.map_or(Ok(()), Err)
    }

    /// A finite domain containing every value this expression can take,
    /// given domains for the variables in scope.
    pub fn infer_domain(&self, scope: &[(String, Domain)], schema: &StateSchema) -> Option<Domain> {
        let inf = |e: &Expr| e.infer_domain(scope, schema);
        match self {
            Expr::Lit(v) => v.natural_domain(),
            Expr::Var(x) => scope
                .iter()
                .rev()
                .find(|(n, _)| n == x)
                .map(|(_, d)| d.clone()),
            Expr::Field(f) => schema.domain_of(f).cloned(),
            Expr::Proj(e, f) => match inf(e)? {
                Domain::Record(fields) => fields.into_iter().find(|(n, _)| n == f).map(|(_, d)| d),
                _ => None,
            },
            Expr::RecUpd(e, f, x) => match inf(e)? {
                Domain::Record(fields) => {
                    let xd = inf(x)?;
                    let mut out = Vec::with_capacity(fields.len());
                    for (n, d) in fields {
                        if &n == f {
                            out.push((n, d.join(&xd)?));
                        } else {
                            out.push((n, d));
                        }
                    }
                    Some(Domain::Record(out))
                }
                _ => None,
            },
            Expr::MapUpd(m, k, x) => match inf(m)? {
                Domain::Map { key, val, .. } => Some(Domain::Map {
                    key: Box::new(key.join(&inf(k)?)?),
                    val: Box::new(val.join(&inf(x)?)?),
                    partial: true,
                }),
                _ => None,
            },
            Expr::Assign(m, _, x) => match inf(m)? {
                Domain::Map { key, val, partial } => Some(Domain::Map {
                    key,
                    val: Box::new(val.join(&inf(x)?)?),
                    partial,
                }),
                _ => None,
            },
            Expr::Lookup(..) => None,
            Expr::The(m, _) | Expr::Apply(m, _) => match inf(m)? {
                Domain::Map { val, .. } => Some(*val),
                _ => None,
            },
            Expr::Dom(m) => match inf(m)? {
                Domain::Map { key, .. } => Some(Domain::Set(key)),
                _ => None,
            },
            Expr::SetMinus(a, _) => inf(a),
            Expr::SetLit(items) => {
                let mut acc: Option<Domain> = None;
                for e in items {
                    let d = inf(e)?;
                    acc = Some(match acc {
                        None => d,
                        Some(a) => a.join(&d)?,
                    });
                }
                acc.map(Domain::set)
            }
            Expr::Cons(h, t) => match inf(t)? {
                Domain::Seq(base, n) => Some(Domain::Seq(Box::new(base.join(&inf(h)?)?), n + 1)),
                _ => None,
            },
            Expr::In(..)
            | Expr::NotIn(..)
            | Expr::Eq(..)
            | Expr::Not(_)
            | Expr::And(..)
            | Expr::Or(..) => Some(Domain::Bool),
            Expr::Add(a, b) => match (inf(a)?, inf(b)?) {
                (Domain::Nat { lo, hi }, Domain::Nat { lo: l2, hi: h2 }) => Some(Domain::Nat {
                    lo: lo.checked_add(l2)?,
                    hi: hi.checked_add(h2)?,
                }),
                _ => None,
            },
            Expr::Mod(a, b) => match (inf(a)?, inf(b)?) {
                (Domain::Nat { .. }, Domain::Nat { hi, .. }) if hi > 0 => {
                    Some(Domain::Nat { lo: 0, hi: hi - 1 })
                }
                _ => None,
            },
        }
    }
}

pub fn eval_bool(e: &Expr, env: &Env<'_>, s: &State, schema: &StateSchema) -> EvalResult<bool> {
    match &*e.eval_ref(env, s, schema)? {
        Value::Bool(b) => Ok(*b),
        v => Err(Fault(format!("expected a boolean, got {v}"))),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        crate::store::print::write_expr(f, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty() -> (StateSchema, State) {
        let schema = StateSchema::default();
        let s = schema.state(vec![]).unwrap();
        (schema, s)
    }

    fn tcb(prio: u32) -> Value {
        Value::record([("priority", Value::Nat(prio))])
    }

    #[test]
    fn record_projection() {
        let (schema, s) = empty();
        let e = Expr::proj(Expr::lit(tcb(1)), "priority");
        assert_eq!(e.eval(&Env::new(), &s, &schema), Ok(Value::Nat(1)));
    }

    #[test]
    fn set_difference() {
        let (schema, s) = empty();
        let e = Expr::SetMinus(
            Box::new(Expr::lit(Value::ids([0, 1]))),
            Box::new(Expr::lit(Value::ids([0]))),
        );
        assert_eq!(e.eval(&Env::new(), &s, &schema), Ok(Value::ids([1])));
    }

    #[test]
    fn map_update_then_domain() {
        let (schema, s) = empty();
        let upd = Expr::MapUpd(
            Box::new(Expr::lit(Value::Map(BTreeMap::new()))),
            Box::new(Expr::lit(Value::Id(0))),
            Box::new(Expr::lit(tcb(0))),
        );
        let e = Expr::Dom(Box::new(upd));
        assert_eq!(e.eval(&Env::new(), &s, &schema), Ok(Value::ids([0])));
    }

    #[test]
    fn the_on_missing_key_faults() {
        let (schema, s) = empty();
        let e = Expr::The(
            Box::new(Expr::lit(Value::Map(BTreeMap::new()))),
            Box::new(Expr::lit(Value::Id(0))),
        );
        assert!(e.eval(&Env::new(), &s, &schema).is_err());
        let l = Expr::Lookup(
            Box::new(Expr::lit(Value::Map(BTreeMap::new()))),
            Box::new(Expr::lit(Value::Id(0))),
        );
        assert_eq!(l.eval(&Env::new(), &s, &schema), Ok(Value::Absent));
    }

    #[test]
    fn cons_prepends_and_membership_reads_sequences() {
        let (schema, s) = empty();
        let q = Expr::Cons(
            Box::new(Expr::lit(Value::Id(0))),
            Box::new(Expr::lit(Value::Seq(vec![Value::Id(1)]))),
        );
        assert_eq!(
            q.eval(&Env::new(), &s, &schema),
            Ok(Value::Seq(vec![Value::Id(0), Value::Id(1)]))
        );
        let mem = Expr::In(Box::new(Expr::lit(Value::Id(1))), Box::new(q));
        assert_eq!(mem.eval(&Env::new(), &s, &schema), Ok(Value::Bool(true)));
    }

    #[test]
    fn and_short_circuits() {
        let (schema, s) = empty();
        let faulty = Expr::The(
            Box::new(Expr::lit(Value::Map(BTreeMap::new()))),
            Box::new(Expr::lit(Value::Id(0))),
        );
        let e = Expr::And(
            Box::new(Expr::lit(Value::Bool(false))),
            Box::new(Expr::eq(faulty, Expr::lit(Value::Unit))),
        );
        assert_eq!(e.eval(&Env::new(), &s, &schema), Ok(Value::Bool(false)));
    }

    #[test]
    fn env_shadowing_and_wildcard() {
        let mut env = Env::new();
        assert!(env.push("x", Value::Nat(1)));
        let pushed = env.push("x", Value::Nat(2));
        assert_eq!(env.get("x"), Some(&Value::Nat(2)));
        env.pop(pushed);
        assert_eq!(env.get("x"), Some(&Value::Nat(1)));
        assert!(!env.push("_", Value::Unit));
        assert_eq!(env.get("_"), None);
    }
}
