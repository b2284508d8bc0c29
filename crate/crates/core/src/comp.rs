//! Deep embedding of the nondeterministic state monad and its
//! set-of-outcomes interpreter.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ctx::Ctx;
use crate::error::{Error, Result};
use crate::expr::{eval_bool, Env, EvalResult, Expr, Fault};
use crate::pred::{update_state, Pred};
use crate::schema::State;
use crate::value::{Domain, Value};

/// A `x ← …` binder. `_` binds nothing. The domain is inferred when absent.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Binder {
    pub name: String,
    pub dom: Option<Domain>,
}

impl Binder {
    pub fn new(name: &str) -> Self {
        Binder {
            name: name.into(),
            dom: None,
        }
    }

    pub fn typed(name: &str, dom: Domain) -> Self {
        Binder {
            name: name.into(),
            dom: Some(dom),
        }
    }

    pub fn wildcard() -> Self {
        Binder::new("_")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Comp {
    Return(Expr),
    Gets(String),
    /// `set_x e`
    Put(String, Expr),
    /// Nondeterministic choice from a set (or the members of a sequence).
    Select(Expr),
    Bind(Box<Comp>, Binder, Box<Comp>),
    If(Expr, Box<Comp>, Box<Comp>),
    Call(String, Vec<Expr>),
    Assert(Pred),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Outcome {
    pub ret: Value,
    pub state: State,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgramDef {
    pub params: Vec<(String, Domain)>,
    /// Domain of the returned value; inferred from the body when absent.
    pub returns: Option<Domain>,
    pub body: Comp,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProgramTable {
    defs: BTreeMap<String, ProgramDef>,
}

impl ProgramTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, def: ProgramDef) {
        self.defs.insert(name.into(), def);
    }

    pub fn get(&self, name: &str) -> Option<&ProgramDef> {
        self.defs.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &ProgramDef)> {
        self.defs.iter()
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub(crate) fn validate(&self, ctx: &Ctx) -> Result<()> {
        for def in self.defs.values() {
            for (_, d) in &def.params {
                d.validate()?;
            }
            let scope: Vec<String> = def.params.iter().map(|(n, _)| n.clone()).collect();
            def.body.check(&scope, ctx)?;
        }
        // Call graph must be acyclic.
        fn visit<'a>(
            table: &'a ProgramTable,
            name: &'a str,
            active: &mut Vec<&'a str>,
            done: &mut BTreeSet<&'a str>,
        ) -> Result<()> {
            if done.contains(name) {
                return Ok(());
            }
            if active.contains(&name) {
                return Err(Error::Cyclic(name.to_string()));
            }
            active.push(name);
            let mut calls = Vec::new();
            table.defs[name].body.callees(&mut calls);
            for c in calls {
                let (key, _) = table.defs.get_key_value(c).expect("checked above");
                visit(table, key, active, done)?;
            }
            active.pop();
            done.insert(name);
            Ok(())
        }
        let mut done = BTreeSet::new();
        for name in self.defs.keys() {
            visit(self, name, &mut Vec::new(), &mut done)?;
        }
        Ok(())
    }
}

impl Comp {
    pub fn bind(first: Comp, x: &str, rest: Comp) -> Comp {
        Comp::Bind(Box::new(first), Binder::new(x), Box::new(rest))
    }

    pub fn seq(first: Comp, rest: Comp) -> Comp {
        Comp::Bind(Box::new(first), Binder::wildcard(), Box::new(rest))
    }

    pub fn call(name: &str, args: Vec<Expr>) -> Comp {
        Comp::Call(name.into(), args)
    }

    /// A single step as far as the weakest-precondition calculus is
    /// concerned: no bind and no call anywhere inside.
    pub fn is_atomic(&self) -> bool {
        match self {
            Comp::Return(_) | Comp::Gets(_) | Comp::Put(..) | Comp::Select(_) | Comp::Assert(_) => {
                true
            }
            Comp::If(_, a, b) => a.is_atomic() && b.is_atomic(),
            Comp::Bind(..) | Comp::Call(..) => false,
        }
    }

    /// The set of all `(return value, final state)` pairs reachable from `s`.
    /// A fault on any path faults the whole run.
    pub fn run<'a>(
        &'a self,
        env: &mut Env<'a>,
        s: &State,
        ctx: &'a Ctx,
    ) -> EvalResult<BTreeSet<Outcome>> {
        let schema = &ctx.schema;
        let one = |ret: Value, state: State| BTreeSet::from([Outcome { ret, state }]);
        match self {
            Comp::Return(e) => Ok(one(e.eval(env, s, schema)?, s.clone())),
            Comp::Gets(f) => {
                let i = schema
                    .index_of(f)
                    .ok_or_else(|| Fault(format!("unknown field `{f}`")))?;
                Ok(one(s.get(i).clone(), s.clone()))
            }
            Comp::Put(f, e) => Ok(one(Value::Unit, update_state(f, e, env, s, schema)?)),
            Comp::Select(e) => {
                let items: Vec<Value> = match e.eval(env, s, schema)? {
                    Value::Set(items) => items.into_iter().collect(),
                    Value::Seq(items) => items,
                    v => return Err(Fault(format!("select from {} value {v}", v.kind()))),
                };
                Ok(items
                    .into_iter()
                    .map(|ret| Outcome {
                        ret,
                        state: s.clone(),
                    })
                    .collect())
            }
            Comp::Bind(f, x, g) => {
                let mut out = BTreeSet::new();
                for o in f.run(env, s, ctx)? {
                    let pushed = env.push(&x.name, o.ret);
                    let r = g.run(env, &o.state, ctx);
                    env.pop(pushed);
                    out.extend(r?);
                }
                Ok(out)
            }
            Comp::If(b, t, e) => {
                if eval_bool(b, env, s, schema)? {
                    t.run(env, s, ctx)
                } else {
                    e.run(env, s, ctx)
                }
            }
            Comp::Call(name, args) => {
                let def = ctx
                    .programs
                    .get(name)
                    .ok_or_else(|| Fault(format!("unknown program `{name}`")))?;
                let mut inner = Env::new();
                for ((p, _), a) in def.params.iter().zip(args) {
                    let v = a.eval(env, s, schema)?;
                    inner.push(p, v);
                }
                def.body.run(&mut inner, s, ctx)
            }
            Comp::Assert(p) => {
                if p.eval(env, s, ctx)? {
                    Ok(one(Value::Unit, s.clone()))
                } else {
                    Err(Fault(format!("assertion failed: {p}")))
                }
            }
        }
    }

    fn callees<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Comp::Call(n, _) => out.push(n),
            Comp::Bind(a, _, b) | Comp::If(_, a, b) => {
                a.callees(out);
                b.callees(out);
            }
            _ => {}
        }
    }

    /// Closedness under `scope`, field and callee resolution, call arity.
    pub fn check(&self, scope: &[String], ctx: &Ctx) -> Result<()> {
        let schema = &ctx.schema;
        match self {
            Comp::Return(e) | Comp::Select(e) => e.check(scope, schema),
            Comp::Gets(f) => schema
                .index_of(f)
                .map(|_| ())
                .ok_or_else(|| Error::UnknownField(f.clone())),
            Comp::Put(f, e) => {
                schema
                    .index_of(f)
                    .ok_or_else(|| Error::UnknownField(f.clone()))?;
                e.check(scope, schema)
            }
            Comp::Bind(f, x, g) => {
                if let Some(d) = &x.dom {
                    d.validate()?;
                }
                f.check(scope, ctx)?;
                let mut inner = scope.to_vec();
                if x.name != "_" {
                    inner.push(x.name.clone());
                }
                g.check(&inner, ctx)
            }
            Comp::If(b, t, e) => {
                b.check(scope, schema)?;
                t.check(scope, ctx)?;
                e.check(scope, ctx)
            }
            Comp::Call(name, args) => {
                let def = ctx
                    .programs
                    .get(name)
                    .ok_or_else(|| Error::UnknownProgram(name.clone()))?;
                if def.params.len() != args.len() {
                    return Err(Error::Arity {
                        name: name.clone(),
                        expected: def.params.len(),
                        got: args.len(),
                    });
                }
                args.iter().try_for_each(|a| a.check(scope, schema))
            }
            Comp::Assert(p) => p.check(scope, schema, &ctx.preds),
        }
    }

    /// A finite domain containing every value the computation can return.
    pub fn result_domain(&self, scope: &[(String, Domain)], ctx: &Ctx) -> Option<Domain> {
        match self {
            Comp::Return(e) => e.infer_domain(scope, &ctx.schema),
            Comp::Gets(f) => ctx.schema.domain_of(f).cloned(),
            Comp::Put(..) | Comp::Assert(_) => Some(Domain::Unit),
            Comp::Select(e) => match e.infer_domain(scope, &ctx.schema)? {
                Domain::Set(b) | Domain::Seq(b, _) => Some(*b),
                _ => None,
            },
            Comp::Bind(f, x, g) => {
                let mut inner = scope.to_vec();
                inner.push((x.name.clone(), x.domain_in(f, scope, ctx)?));
                g.result_domain(&inner, ctx)
            }
            Comp::If(_, t, e) => match (t.result_domain(scope, ctx), e.result_domain(scope, ctx)) {
                (Some(a), Some(b)) => a.join(&b),
                _ => None,
            },
            Comp::Call(name, _) => {
                let def = ctx.programs.get(name)?;
                def.returns.clone().or_else(|| {
                    def.body.result_domain(&def.params, ctx)
                })
            }
        }
    }

    /// Free variables, in first-occurrence order.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        let push_expr = |e: &Expr, bound: &Vec<String>, out: &mut Vec<String>| {
            let mut fv = Vec::new();
            e.free_vars(&mut fv);
            for x in fv {
                if !bound.contains(&x) && !out.contains(&x) {
                    out.push(x);
                }
            }
        };
        match self {
            Comp::Return(e) | Comp::Select(e) | Comp::Put(_, e) => push_expr(e, bound, out),
            Comp::Gets(_) => {}
            Comp::Assert(p) => {
                for x in p.free_vars() {
                    if !bound.contains(&x) && !out.contains(&x) {
                        out.push(x);
                    }
                }
            }
            Comp::Call(_, args) => args.iter().for_each(|a| push_expr(a, bound, out)),
            Comp::If(b, t, e) => {
                push_expr(b, bound, out);
                t.collect_free(bound, out);
                e.collect_free(bound, out);
            }
            Comp::Bind(f, x, g) => {
                f.collect_free(bound, out);
                bound.push(x.name.clone());
                g.collect_free(bound, out);
                bound.pop();
            }
        }
    }
}

impl Binder {
    /// The binder's domain: explicit if given, else inferred from `first`.
    pub fn domain_in(&self, first: &Comp, scope: &[(String, Domain)], ctx: &Ctx) -> Option<Domain> {
        self.dom
            .clone()
            .or_else(|| first.result_domain(scope, ctx))
    }
}

pub fn run(c: &Comp, env: &Env<'_>, s: &State, ctx: &Ctx) -> EvalResult<BTreeSet<Outcome>> {
    let mut env = env.clone();
    c.run(&mut env, s, ctx)
}

impl fmt::Display for Comp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        crate::store::print::write_comp(f, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soundness::{atoms, bit_ctx};

    fn outcomes(c: &Comp, ctx: &Ctx, s: &State) -> BTreeSet<Outcome> {
        run(c, &Env::new(), s, ctx).unwrap()
    }

    fn nat_set(items: &[u32]) -> Expr {
        Expr::SetLit(items.iter().map(|&n| Expr::lit(Value::Nat(n))).collect())
    }

    #[test]
    fn return_select_and_empty_select() {
        let ctx = bit_ctx();
        let s = ctx.schema.state(vec![Value::Bool(false)]).unwrap();
        let five = outcomes(&Comp::Return(Expr::lit(Value::Nat(5))), &ctx, &s);
        assert_eq!(five.into_iter().collect::<Vec<_>>(), vec![Outcome { ret: Value::Nat(5), state: s.clone() }]);

        let both = outcomes(&Comp::Select(nat_set(&[0, 1])), &ctx, &s);
        let rets: Vec<Value> = both.iter().map(|o| o.ret.clone()).collect();
        assert_eq!(rets, vec![Value::Nat(0), Value::Nat(1)]);
        assert!(both.iter().all(|o| o.state == s));

        assert!(outcomes(&Comp::Select(nat_set(&[])), &ctx, &s).is_empty());
    }

    #[test]
    fn empty_select_satisfies_anything() {
        let ctx = bit_ctx();
        let t = crate::hoare::Triple::new(
            vec![],
            Pred::True,
            Comp::Select(nat_set(&[])),
            crate::pred::PostPred::ignoring(Pred::False),
        );
        assert!(crate::hoare::check_triple(&t, &ctx).unwrap().holds());
    }

    fn typed(name: &str, c: &Comp) -> Binder {
        let dom = if matches!(c, Comp::Put(..)) { Domain::Unit } else { Domain::Bool };
        Binder::typed(name, dom)
    }

    fn bind(a: &Comp, x: &Binder, b: &Comp) -> Comp {
        Comp::Bind(Box::new(a.clone()), x.clone(), Box::new(b.clone()))
    }

    /// Atoms plus steps that read the named binder.
    fn using(x: &str) -> Vec<Comp> {
        let mut out = atoms();
        out.push(Comp::Return(Expr::var(x)));
        out.push(Comp::Put("b".into(), Expr::var(x)));
        out
    }

    fn same_everywhere(l: &Comp, r: &Comp, ctx: &Ctx) {
        for s in ctx.schema.enumerate_states().unwrap() {
            let (a, b) = (run(l, &Env::new(), &s, ctx), run(r, &Env::new(), &s, ctx));
            assert_eq!(a, b, "{l} vs {r}");
        }
    }

    #[test]
    fn bind_is_associative() {
        let ctx = bit_ctx();
        let bools: Vec<Comp> = atoms().into_iter().filter(|c| !matches!(c, Comp::Put(..))).collect();
        for a in &bools {
            let x = typed("x", a);
            for b in using("x").iter().filter(|c| !matches!(c, Comp::Put(..))) {
                let y = typed("y", b);
                for c in &using("y") {
                    let left = bind(&bind(a, &x, b), &y, c);
                    let right = bind(a, &x, &bind(b, &y, c));
                    same_everywhere(&left, &right, &ctx);
                }
            }
        }
    }

    #[test]
    fn return_is_an_identity() {
        let ctx = bit_ctx();
        for v in [true, false] {
            let lit = Expr::lit(Value::Bool(v));
            for f in using("x") {
                let left = bind(&Comp::Return(lit.clone()), &Binder::typed("x", Domain::Bool), &f);
                let inlined = match &f {
                    Comp::Return(Expr::Var(_)) => Comp::Return(lit.clone()),
                    Comp::Put(field, Expr::Var(_)) => Comp::Put(field.clone(), lit.clone()),
                    other => other.clone(),
                };
                same_everywhere(&left, &inlined, &ctx);
            }
        }
        // m; return, for m of up to two steps
        let a = atoms();
        let mut ms = a.clone();
        for f in &a {
            for g in &a {
                ms.push(bind(f, &typed("y", f), g));
            }
        }
        for m in &ms {
            let x = match m {
                Comp::Bind(_, _, g) => typed("x", g),
                _ => typed("x", m),
            };
            same_everywhere(&bind(m, &x, &Comp::Return(Expr::var("x"))), m, &ctx);
        }
    }

    #[test]
    fn run_is_deterministic() {
        let ctx = crate::corpus::corpus_ctx(crate::corpus::CorpusParams::new(2, 1).unwrap());
        let c = crate::corpus::new_tcb_body();
        let env = Env::from_pairs([("p", Value::Nat(0))]);
        for s in ctx.schema.enumerate_states().unwrap() {
            assert_eq!(run(&c, &env, &s, &ctx), run(&c, &env, &s, &ctx));
        }
    }

    #[test]
    fn assert_faults_without_outcomes() {
        let ctx = bit_ctx();
        let s = ctx.schema.state(vec![Value::Bool(false)]).unwrap();
        let c = Comp::Assert(Pred::atom(Expr::field("b")));
        assert!(run(&c, &Env::new(), &s, &ctx).is_err());
        let t = ctx.schema.state(vec![Value::Bool(true)]).unwrap();
        assert_eq!(run(&c, &Env::new(), &t, &ctx).unwrap().len(), 1);
    }
}
