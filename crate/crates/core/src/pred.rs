//! Predicates over a state and bound variables, decided by enumeration.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ctx::{Ctx, Point};
use crate::error::{Error, Result};
use crate::expr::{eval_bool, Env, EvalResult, Expr, Fault};
use crate::schema::{State, StateSchema};
use crate::value::{Domain, Value};
use crate::verdict::Verdict;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pred {
    True,
    False,
    Atom(Expr),
    And(Vec<Pred>),
    Or(Vec<Pred>),
    Not(Box<Pred>),
    Implies(Box<Pred>, Box<Pred>),
    Forall(String, Domain, Box<Pred>),
    Exists(String, Domain, Box<Pred>),
    /// Bounded quantifier over the members of a set or sequence evaluated at
    /// the current state.
    ForallIn(String, Expr, Box<Pred>),
    /// Reference to a named definition.
    Def(String, Vec<Expr>),
    /// `body` with `name` bound to the value of the expression.
    Let(String, Expr, Box<Pred>),
    /// `body` evaluated in the state where `field` holds the expression's value.
    Update(String, Expr, Box<Pred>),
}

/// A postcondition `λret s. body`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PostPred {
    pub ret: String,
    pub body: Pred,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredDef {
    pub params: Vec<String>,
    pub body: Pred,
}

/// Named predicate definitions, closed over their parameters and the state.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PredDefs {
    defs: BTreeMap<String, PredDef>,
}

impl PredDefs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, params: &[&str], body: Pred) {
        self.defs.insert(
            name.into(),
            PredDef {
                params: params.iter().map(|p| p.to_string()).collect(),
                body,
            },
        );
    }

    pub fn insert_def(&mut self, name: String, def: PredDef) {
        self.defs.insert(name, def);
    }

    pub fn get(&self, name: &str) -> Option<&PredDef> {
        self.defs.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &PredDef)> {
        self.defs.iter()
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    /// Bodies are closed, references resolve with the right arity, and the
    /// reference graph is acyclic.
    pub fn validate(&self, schema: &StateSchema) -> Result<()> {
        for (name, def) in &self.defs {
            def.body.check(&def.params, schema, self)?;
            let mut seen = BTreeSet::new();
            if !def.params.iter().all(|p| seen.insert(p)) {
                return Err(Error::Invalid(format!("predicate `{name}` repeats a parameter")));
            }
        }
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Active,
            Done,
        }
        fn visit<'a>(
            defs: &'a PredDefs,
            name: &'a str,
            marks: &mut BTreeMap<&'a str, Mark>,
        ) -> Result<()> {
            match marks.get(name) {
                Some(Mark::Done) => return Ok(()),
                Some(Mark::Active) => return Err(Error::Cyclic(name.to_string())),
                None => {}
            }
            marks.insert(name, Mark::Active);
            let mut refs = Vec::new();
            defs.defs[name].body.def_refs(&mut refs);
            for r in refs {
                let (key, _) = defs.defs.get_key_value(r.as_str()).expect("checked above");
                visit(defs, key, marks)?;
            }
            marks.insert(name, Mark::Done);
            Ok(())
        }
        let mut marks = BTreeMap::new();
        for name in self.defs.keys() {
            visit(self, name, &mut marks)?;
        }
        Ok(())
    }
}

fn quantify<'a>(
    env: &mut Env<'a>,
    x: &'a str,
    values: impl Iterator<Item = Value>,
    universal: bool,
    mut body: impl FnMut(&mut Env<'a>) -> EvalResult<bool>,
) -> EvalResult<bool> {
    for v in values {
        let pushed = env.push(x, v);
        let r = body(env);
        env.pop(pushed);
        if r? != universal {
            return Ok(!universal);
        }
    }
    Ok(universal)
}

fn domain_values(d: &Domain) -> EvalResult<Box<dyn Iterator<Item = Value>>> {
    Ok(match d {
        Domain::Bool => Box::new([false, true].into_iter().map(Value::Bool)),
        Domain::Nat { lo, hi } => Box::new((*lo..=*hi).map(Value::Nat)),
        Domain::Id { count } => Box::new((0..*count).map(Value::Id)),
        other => Box::new(
            other
                .enumerate()
                .map_err(|e| Fault(e.to_string()))?
                .into_iter(),
        ),
    })
}

impl Pred {
    pub fn atom(e: Expr) -> Pred {
        Pred::Atom(e)
    }

    pub fn def(name: &str, args: Vec<Expr>) -> Pred {
        Pred::Def(name.into(), args)
    }

    pub fn and(items: impl IntoIterator<Item = Pred>) -> Pred {
        Pred::And(items.into_iter().collect())
    }

    pub fn implies(a: Pred, b: Pred) -> Pred {
        Pred::Implies(Box::new(a), Box::new(b))
    }

    pub fn negate(p: Pred) -> Pred {
        Pred::Not(Box::new(p))
    }

    /// Classical evaluation at `s` under `env`.
    pub fn eval<'a>(&'a self, env: &mut Env<'a>, s: &State, ctx: &'a Ctx) -> EvalResult<bool> {
        match self {
            Pred::True => Ok(true),
            Pred::False => Ok(false),
            Pred::Atom(e) => eval_bool(e, env, s, &ctx.schema),
            Pred::And(items) => {
                for p in items {
                    if !p.eval(env, s, ctx)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Pred::Or(items) => {
                for p in items {
                    if p.eval(env, s, ctx)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Pred::Not(p) => Ok(!p.eval(env, s, ctx)?),
            Pred::Implies(a, b) => Ok(!a.eval(env, s, ctx)? || b.eval(env, s, ctx)?),
            Pred::Forall(x, d, body) | Pred::Exists(x, d, body) => {
                let universal = matches!(self, Pred::Forall(..));
                quantify(env, x, domain_values(d)?, universal, |env| {
                    body.eval(env, s, ctx)
                })
            }
            Pred::ForallIn(x, coll, body) => {
                let items: Vec<Value> = match &*coll.eval_ref(env, s, &ctx.schema)? {
                    Value::Set(items) => items.iter().cloned().collect(),
                    Value::Seq(items) => items.clone(),
                    v => return Err(Fault(format!("cannot quantify over {} value {v}", v.kind()))),
                };
                quantify(env, x, items.into_iter(), true, |env| body.eval(env, s, ctx))
            }
            Pred::Def(name, args) => {
                let def = ctx
                    .preds
                    .get(name)
                    .ok_or_else(|| Fault(format!("unknown predicate `{name}`")))?;
                let mut inner = Env::new();
                for (p, a) in def.params.iter().zip(args) {
                    let v = a.eval(env, s, &ctx.schema)?;
                    inner.push(p, v);
                }
                def.body.eval(&mut inner, s, ctx)
            }
            Pred::Let(x, e, body) => {
                let v = e.eval(env, s, &ctx.schema)?;
                let pushed = env.push(x, v);
                let r = body.eval(env, s, ctx);
                env.pop(pushed);
                r
            }
            Pred::Update(field, e, body) => {
                let s2 = update_state(field, e, env, s, &ctx.schema)?;
                body.eval(env, &s2, ctx)
            }
        }
    }

    fn children(&self) -> Vec<&Pred> {
        match self {
            Pred::True | Pred::False | Pred::Atom(_) | Pred::Def(..) => vec![],
            Pred::And(items) | Pred::Or(items) => items.iter().collect(),
            Pred::Not(p)
            | Pred::Forall(_, _, p)
            | Pred::Exists(_, _, p)
            | Pred::ForallIn(_, _, p)
            | Pred::Let(_, _, p)
            | Pred::Update(_, _, p) => vec![p],
            Pred::Implies(a, b) => vec![a, b],
        }
    }

    fn def_refs(&self, out: &mut Vec<String>) {
        if let Pred::Def(n, _) = self {
            out.push(n.clone());
        }
        for c in self.children() {
            c.def_refs(out);
        }
    }

    /// Free variables, in first-occurrence order.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        let expr_free = |e: &Expr, bound: &Vec<String>, out: &mut Vec<String>| {
            let mut fv = Vec::new();
            e.free_vars(&mut fv);
            for x in fv {
                if !bound.contains(&x) && !out.contains(&x) {
                    out.push(x);
                }
            }
        };
        match self {
            Pred::True | Pred::False => {}
            Pred::Atom(e) => expr_free(e, bound, out),
            Pred::Def(_, args) => args.iter().for_each(|a| expr_free(a, bound, out)),
            Pred::And(items) | Pred::Or(items) => {
                items.iter().for_each(|p| p.collect_free(bound, out))
            }
            Pred::Not(p) => p.collect_free(bound, out),
            Pred::Implies(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Pred::Forall(x, _, body) | Pred::Exists(x, _, body) => {
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            Pred::ForallIn(x, e, body) | Pred::Let(x, e, body) => {
                expr_free(e, bound, out);
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            Pred::Update(_, e, body) => {
                expr_free(e, bound, out);
                body.collect_free(bound, out);
            }
        }
    }

    pub fn mentions_var(&self, x: &str) -> bool {
        self.free_vars().iter().any(|v| v == x)
    }

    /// Whether the predicate may depend on the state. Definitions are
    /// assumed to.
    pub fn mentions_state(&self) -> bool {
        match self {
            Pred::Atom(e) => e.mentions_state(),
            Pred::Def(..) | Pred::Update(..) => true,
            Pred::ForallIn(_, e, _) | Pred::Let(_, e, _) if e.mentions_state() => true,
            _ => self.children().iter().any(|p| p.mentions_state()),
        }
    }

    /// Checks that the predicate is closed under `scope` and that every
    /// field and definition it names exists.
    pub fn check(&self, scope: &[String], schema: &StateSchema, defs: &PredDefs) -> Result<()> {
        let mut scope = scope.to_vec();
        self.check_in(&mut scope, schema, defs)
    }

    fn check_in(
        &self,
        scope: &mut Vec<String>,
        schema: &StateSchema,
        defs: &PredDefs,
    ) -> Result<()> {
        match self {
            Pred::True | Pred::False => Ok(()),
            Pred::Atom(e) => e.check(scope, schema),
            Pred::Def(name, args) => {
                let def = defs
                    .get(name)
                    .ok_or_else(|| Error::UnknownPredicate(name.clone()))?;
                if def.params.len() != args.len() {
                    return Err(Error::Arity {
                        name: name.clone(),
                        expected: def.params.len(),
                        got: args.len(),
                    });
                }
                args.iter().try_for_each(|a| a.check(scope, schema))
            }
            Pred::And(items) | Pred::Or(items) => {
                items.iter().try_for_each(|p| p.check_in(scope, schema, defs))
            }
            Pred::Not(p) => p.check_in(scope, schema, defs),
            Pred::Implies(a, b) => {
                a.check_in(scope, schema, defs)?;
                b.check_in(scope, schema, defs)
            }
            Pred::Forall(x, d, body) | Pred::Exists(x, d, body) => {
                d.validate()?;
                scope.push(x.clone());
                let r = body.check_in(scope, schema, defs);
                scope.pop();
                r
            }
            Pred::ForallIn(x, e, body) | Pred::Let(x, e, body) => {
                e.check(scope, schema)?;
                scope.push(x.clone());
                let r = body.check_in(scope, schema, defs);
                scope.pop();
                r
            }
            Pred::Update(f, e, body) => {
                if schema.index_of(f).is_none() {
                    return Err(Error::UnknownField(f.clone()));
                }
                e.check(scope, schema)?;
                body.check_in(scope, schema, defs)
            }
        }
    }

    /// Capture-avoiding simultaneous substitution of variables.
    pub fn subst(&self, map: &BTreeMap<String, Expr>) -> Pred {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            Pred::True | Pred::False => self.clone(),
            Pred::Atom(e) => Pred::Atom(e.subst(map)),
            Pred::Def(n, args) => Pred::Def(n.clone(), args.iter().map(|a| a.subst(map)).collect()),
            Pred::And(items) => Pred::And(items.iter().map(|p| p.subst(map)).collect()),
            Pred::Or(items) => Pred::Or(items.iter().map(|p| p.subst(map)).collect()),
            Pred::Not(p) => Pred::Not(Box::new(p.subst(map))),
            Pred::Implies(a, b) => Pred::Implies(Box::new(a.subst(map)), Box::new(b.subst(map))),
            Pred::Update(f, e, body) => {
                Pred::Update(f.clone(), e.subst(map), Box::new(body.subst(map)))
            }
            Pred::Forall(x, d, body) => {
                let (x, body) = subst_under_binder(x, body, map);
                Pred::Forall(x, d.clone(), Box::new(body))
            }
            Pred::Exists(x, d, body) => {
                let (x, body) = subst_under_binder(x, body, map);
                Pred::Exists(x, d.clone(), Box::new(body))
            }
            Pred::ForallIn(x, e, body) => {
                let e = e.subst(map);
                let (x, body) = subst_under_binder(x, body, map);
                Pred::ForallIn(x, e, Box::new(body))
            }
            Pred::Let(x, e, body) => {
                let e = e.subst(map);
                let (x, body) = subst_under_binder(x, body, map);
                Pred::Let(x, e, Box::new(body))
            }
        }
    }

    pub fn subst_var(&self, x: &str, e: Expr) -> Pred {
        self.subst(&BTreeMap::from([(x.to_string(), e)]))
    }

    /// Canonical conjunctive form: nested conjunctions flattened, `true`
    /// conjuncts dropped, `false` absorbing, duplicates removed, conjuncts
    /// sorted. Meaning is unchanged.
    pub fn normalize(&self) -> Pred {
        match self {
            Pred::And(items) => {
                let mut flat = BTreeSet::new();
                for p in items {
                    match p.normalize() {
                        Pred::True => {}
                        Pred::False => return Pred::False,
                        Pred::And(inner) => flat.extend(inner),
                        other => {
                            flat.insert(other);
                        }
                    }
                }
                match flat.len() {
                    0 => Pred::True,
                    1 => flat.into_iter().next().expect("one element"),
                    _ => Pred::And(flat.into_iter().collect()),
                }
            }
            Pred::Or(items) => Pred::Or(items.iter().map(Pred::normalize).collect()),
            Pred::Not(p) => Pred::Not(Box::new(p.normalize())),
            Pred::Implies(a, b) => Pred::Implies(Box::new(a.normalize()), Box::new(b.normalize())),
            Pred::Forall(x, d, b) => Pred::Forall(x.clone(), d.clone(), Box::new(b.normalize())),
            Pred::Exists(x, d, b) => Pred::Exists(x.clone(), d.clone(), Box::new(b.normalize())),
            Pred::ForallIn(x, e, b) => Pred::ForallIn(x.clone(), e.clone(), Box::new(b.normalize())),
            Pred::Let(x, e, b) => Pred::Let(x.clone(), e.clone(), Box::new(b.normalize())),
            Pred::Update(f, e, b) => Pred::Update(f.clone(), e.clone(), Box::new(b.normalize())),
            _ => self.clone(),
        }
    }

    /// Top-level conjuncts after normalization.
    pub fn conjuncts(&self) -> Vec<Pred> {
        match self.normalize() {
            Pred::True => vec![],
            Pred::And(items) => items,
            other => vec![other],
        }
    }
}

fn subst_under_binder(x: &str, body: &Pred, map: &BTreeMap<String, Expr>) -> (String, Pred) {
    let mut inner: BTreeMap<String, Expr> = map.clone();
    inner.remove(x);
    let captured = inner.values().any(|e| e.mentions_var(x));
    if !captured {
        return (x.to_string(), body.subst(&inner));
    }
    let mut avoid: Vec<String> = body.free_vars();
    for e in inner.values() {
        e.free_vars(&mut avoid);
    }
    avoid.extend(inner.keys().cloned());
    let fresh = fresh_name(x, &avoid);
    let renamed = body.subst_var(x, Expr::Var(fresh.clone()));
    (fresh, renamed.subst(&inner))
}

/// `base'`, `base''`, … — the first variant not in `avoid`.
pub fn fresh_name(base: &str, avoid: &[String]) -> String {
    let mut name = format!("{base}'");
    while avoid.contains(&name) {
        name.push('\'');
    }
    name
}

pub(crate) fn update_state(
    field: &str,
    e: &Expr,
    env: &Env<'_>,
    s: &State,
    schema: &StateSchema,
) -> EvalResult<State> {
    let i = schema
        .index_of(field)
        .ok_or_else(|| Fault(format!("unknown field `{field}`")))?;
    let v = e.eval(env, s, schema)?;
    let dom = &schema.fields()[i].1;
    if !dom.admits(&v) {
        return Err(Fault(format!("value {v} is outside the domain of field `{field}`")));
    }
    Ok(s.with(i, v))
}

impl PostPred {
    pub fn new(ret: &str, body: Pred) -> Self {
        PostPred {
            ret: ret.into(),
            body,
        }
    }

    /// `λ_. body`
    pub fn ignoring(body: Pred) -> Self {
        PostPred::new("_", body)
    }

    pub fn eval<'a>(
        &'a self,
        ret: Value,
        env: &mut Env<'a>,
        s: &State,
        ctx: &'a Ctx,
    ) -> EvalResult<bool> {
        let pushed = env.push(&self.ret, ret);
        let r = self.body.eval(env, s, ctx);
        env.pop(pushed);
        r
    }

    /// Free variables other than the return binder.
    pub fn free_vars(&self) -> Vec<String> {
        self.body
            .free_vars()
            .into_iter()
            .filter(|x| *x != self.ret)
            .collect()
    }

    pub fn uses_ret(&self) -> bool {
        self.ret != "_" && self.body.mentions_var(&self.ret)
    }

    /// The body with the return binder renamed to `x`.
    pub fn at(&self, x: &str) -> Pred {
        if self.ret == x || !self.uses_ret() {
            self.body.clone()
        } else {
            self.body.subst_var(&self.ret, Expr::Var(x.into()))
        }
    }

    pub fn subst(&self, map: &BTreeMap<String, Expr>) -> PostPred {
        let (ret, body) = subst_under_binder(&self.ret, &self.body, map);
        PostPred { ret, body }
    }

    pub fn normalize(&self) -> PostPred {
        PostPred {
            ret: self.ret.clone(),
            body: self.body.normalize(),
        }
    }
}

/// Domains of the named variables, looked up in `scope`.
pub(crate) fn scope_for(names: &[String], scope: &[(String, Domain)]) -> Result<Vec<(String, Domain)>> {
    names
        .iter()
        .map(|n| {
            scope
                .iter()
                .rev()
                .find(|(m, _)| m == n)
                .cloned()
                .ok_or_else(|| Error::UnboundVar(n.clone()))
        })
        .collect()
}

fn union_vars(a: Vec<String>, b: Vec<String>) -> Vec<String> {
    let mut out = a;
    for x in b {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

/// `∀vars ∀s. p → q`, quantifying only over the variables of `scope` that
/// occur free in `p` or `q`. The counterexample is the first state in
/// canonical order.
pub fn entails(p: &Pred, q: &Pred, scope: &[(String, Domain)], ctx: &Ctx) -> Result<Verdict> {
    let vars = scope_for(&union_vars(p.free_vars(), q.free_vars()), scope)?;
    ctx.for_all(&vars, |env, s| {
        let mut env = env.clone();
        match p.eval(&mut env, s, ctx) {
            Err(f) => Point::Fault(f.0),
            Ok(false) => Point::Pass,
            Ok(true) => match q.eval(&mut env, s, ctx) {
                Err(f) => Point::Fault(f.0),
                Ok(true) => Point::Pass,
                Ok(false) => Point::Fail {
                    outcome: None,
                    note: "premise holds, conclusion does not".into(),
                },
            },
        }
    })
}

/// Entailment between postconditions, with the return value ranging over
/// `ret_dom`.
pub fn entails_post(
    p: &PostPred,
    q: &PostPred,
    ret_dom: &Domain,
    scope: &[(String, Domain)],
    ctx: &Ctx,
) -> Result<Verdict> {
    const RET: &str = "ret#";
    let mut vars = scope_for(&union_vars(p.free_vars(), q.free_vars()), scope)?;
    vars.push((RET.into(), ret_dom.clone()));
    let pb = p.at(RET);
    let qb = q.at(RET);
    ctx.for_all(&vars, |env, s| {
        let mut env = env.clone();
        match pb.eval(&mut env, s, ctx) {
            Err(f) => Point::Fault(f.0),
            Ok(false) => Point::Pass,
            Ok(true) => match qb.eval(&mut env, s, ctx) {
                Err(f) => Point::Fault(f.0),
                Ok(true) => Point::Pass,
                Ok(false) => Point::Fail {
                    outcome: None,
                    note: "postcondition does not entail the requested one".into(),
                },
            },
        }
    })
}

/// Inter-entailment: the semantic equality used when comparing against
/// fixtures written modulo logical equivalence.
pub fn equivalent(p: &Pred, q: &Pred, scope: &[(String, Domain)], ctx: &Ctx) -> Result<Verdict> {
    Ok(entails(p, q, scope, ctx)?.and_then(|| {
        entails(q, p, scope, ctx).unwrap_or_else(|_| unreachable!("same free variables"))
    }))
}

pub fn eval_pred(p: &Pred, env: &Env<'_>, s: &State, ctx: &Ctx) -> EvalResult<bool> {
    let owned: Vec<(String, Value)> = env
        .bindings()
        .iter()
        .map(|(n, v)| (n.to_string(), v.clone()))
        .collect();
    let mut env = Env::from_pairs(owned.iter().map(|(n, v)| (n.as_str(), v.clone())));
    p.eval(&mut env, s, ctx)
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        crate::store::print::write_pred(f, self)
    }
}

impl fmt::Display for PostPred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        crate::store::print::write_post(f, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{corpus_ctx, CorpusParams};
    use crate::schema::{State, StateSchema};
    use crate::ProgramTable;
    use proptest::prelude::*;

    fn def(name: &str) -> Pred {
        Pred::def(name, vec![])
    }

    /// Two-priority corpus state; `mapped` tcbs sit at priority 0 and the
    /// queues are empty.
    fn corpus_state(ctx: &Ctx, ids: &[u32], mapped: &[u32]) -> State {
        let tcb = Value::record([("priority", Value::Nat(0))]);
        let queues = (0..2)
            .map(|p| (Value::Nat(p), Value::Seq(vec![])))
            .collect();
        ctx.schema
            .state(vec![
                Value::set(ids.iter().map(|&i| Value::Id(i))),
                Value::Map(mapped.iter().map(|&i| (Value::Id(i), tcb.clone())).collect()),
                Value::Map(queues),
            ])
            .unwrap()
    }

    #[test]
    fn valid_free_examples() {
        let ctx = corpus_ctx(CorpusParams::SMALL);
        let eval = |p: &Pred, s: &State| p.eval(&mut Env::new(), s, &ctx).unwrap();
        assert!(eval(&def("valid_free"), &corpus_state(&ctx, &[0, 1], &[])));
        assert!(!eval(&def("valid_free"), &corpus_state(&ctx, &[0], &[0])));
        assert!(eval(&Pred::True, &corpus_state(&ctx, &[], &[])));
    }

    #[test]
    fn queues_and_except_entail_not_queued() {
        let p = CorpusParams::DEFAULT;
        let ctx = corpus_ctx(p);
        let i = Expr::var("i");
        let lhs = Pred::and([def("valid_queues"), Pred::def("valid_free_except", vec![i.clone()])]);
        let v = entails(&lhs, &Pred::def("not_queued", vec![i]), &[("i".into(), p.id())], &ctx).unwrap();
        assert_eq!(v, Verdict::Holds { states: 345_600 });
    }

    #[test]
    fn false_entails_anything() {
        let ctx = corpus_ctx(CorpusParams::SMALL);
        assert!(entails(&Pred::False, &def("valid_queues"), &[], &ctx).unwrap().holds());
    }

    #[test]
    fn true_does_not_entail_valid_free() {
        let ctx = corpus_ctx(CorpusParams::SMALL);
        let Verdict::Violated(cex) = entails(&Pred::True, &def("valid_free"), &[], &ctx).unwrap() else {
            panic!("valid_free is not valid");
        };
        // Hand oracle: an id is free iff it is not mapped.
        let broken = |s: &State| {
            let (Value::Set(ids), Value::Map(tcbs)) = (s.get(0), s.get(1)) else {
                unreachable!()
            };
            (0..2).any(|i| ids.contains(&Value::Id(i)) == tcbs.contains_key(&Value::Id(i)))
        };
        let first = ctx.schema.enumerate_states().unwrap().into_iter().find(broken).unwrap();
        assert_eq!(cex.state, first);
        assert_eq!(first, corpus_state(&ctx, &[], &[]));
    }

    #[test]
    fn normalize_examples() {
        let a = Pred::atom(Expr::field("a"));
        let b = Pred::atom(Expr::field("b"));
        assert_eq!(Pred::And(vec![Pred::True, def("valid_free")]).normalize(), def("valid_free"));
        assert_eq!(Pred::And(vec![def("valid_free"), def("valid_free")]).normalize(), def("valid_free"));
        let nested = Pred::And(vec![Pred::And(vec![a.clone(), b.clone()]), a.clone()]);
        let flat = Pred::And(vec![a.clone(), b.clone()]);
        assert_eq!(nested.normalize(), flat.normalize());
        assert_eq!(Pred::And(vec![b.clone(), a.clone()]).normalize(), flat.normalize());
        assert_eq!(Pred::And(vec![a, Pred::False]).normalize(), Pred::False);

        let ctx = Ctx::new(
            StateSchema::new([("a", Domain::Bool), ("b", Domain::Bool)]).unwrap(),
            PredDefs::new(),
            ProgramTable::new(),
        );
        assert!(equivalent(&nested, &nested.normalize(), &[], &ctx).unwrap().holds());
    }

    fn small_ctx() -> Ctx {
        Ctx::new(
            StateSchema::new([("b", Domain::Bool), ("n", Domain::nat(0, 2))]).unwrap(),
            PredDefs::new(),
            ProgramTable::new(),
        )
    }

    fn arb_pred() -> impl Strategy<Value = Pred> {
        let n_is = |k: u32| Pred::atom(Expr::eq(Expr::field("n"), Expr::lit(Value::Nat(k))));
        let leaf = prop_oneof![
            Just(Pred::True),
            Just(Pred::False),
            Just(Pred::atom(Expr::field("b"))),
            Just(n_is(0)),
            Just(n_is(1)),
            Just(n_is(2)),
        ];
        leaf.prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 0..4).prop_map(Pred::And),
                prop::collection::vec(inner.clone(), 1..3).prop_map(Pred::Or),
                inner.clone().prop_map(|p| Pred::Not(Box::new(p))),
                (inner.clone(), inner).prop_map(|(p, q)| Pred::implies(p, q)),
            ]
        })
    }

    proptest! {
        #[test]
        fn normalize_preserves_meaning(p in arb_pred()) {
            let ctx = small_ctx();
            prop_assert!(equivalent(&p, &p.normalize(), &[], &ctx).unwrap().holds());
            prop_assert_eq!(p.normalize().normalize(), p.normalize());
        }

        #[test]
        fn entails_is_a_preorder(p in arb_pred(), q in arb_pred(), r in arb_pred()) {
            let ctx = small_ctx();
            let e = |a: &Pred, b: &Pred| entails(a, b, &[], &ctx).unwrap().holds();
            prop_assert!(e(&p, &p));
            if e(&p, &q) && e(&q, &r) {
                prop_assert!(e(&p, &r));
            }
        }
    }
}
