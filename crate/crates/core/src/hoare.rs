//! Hoare triples, their exhaustive checker, atomic weakest preconditions
//! and the plain split and consequence rules.

use std::fmt;

use crate::comp::{Comp, Outcome};
use crate::ctx::{Ctx, Point};
use crate::error::{Error, Result};
use crate::expr::{Env, Expr};
use crate::pred::{entails, fresh_name, scope_for, PostPred, Pred};
use crate::value::{Domain, Value};
use crate::verdict::Verdict;

/// Universally quantified variables of a claim, with their domains.
pub type Scope = Vec<(String, Domain)>;

pub(crate) fn scope_names(scope: &[(String, Domain)]) -> Vec<String> {
    scope.iter().map(|(n, _)| n.clone()).collect()
}

pub(crate) fn extend(scope: &[(String, Domain)], name: &str, dom: Domain) -> Scope {
    let mut out = scope.to_vec();
    if name != "_" {
        out.push((name.to_string(), dom));
    }
    out
}

/// `{pre} prog {post}` for every assignment of `scope`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triple {
    pub scope: Scope,
    pub pre: Pred,
    pub prog: Comp,
    pub post: PostPred,
}

impl Triple {
    pub fn new(scope: Scope, pre: Pred, prog: Comp, post: PostPred) -> Self {
        Triple {
            scope,
            pre,
            prog,
            post,
        }
    }

    /// Closedness and name resolution.
    pub fn check_wf(&self, ctx: &Ctx) -> Result<()> {
        let names = scope_names(&self.scope);
        self.pre.check(&names, &ctx.schema, &ctx.preds)?;
        self.prog.check(&names, ctx)?;
        let mut post_scope = names;
        post_scope.push(self.post.ret.clone());
        self.post.body.check(&post_scope, &ctx.schema, &ctx.preds)
    }

    pub(crate) fn free_vars(&self) -> Vec<String> {
        let mut out = self.pre.free_vars();
        for x in self.prog.free_vars().into_iter().chain(self.post.free_vars()) {
            if !out.contains(&x) {
                out.push(x);
            }
        }
        out
    }
}

/// Checks a postcondition against every outcome, in outcome order.
pub(crate) fn check_outcomes<'a>(
    outcomes: impl IntoIterator<Item = Outcome>,
    post: &'a PostPred,
    env: &mut Env<'a>,
    ctx: &'a Ctx,
) -> Point {
    for o in outcomes {
        match post.eval(o.ret.clone(), env, &o.state, ctx) {
            Err(f) => return Point::Fault(f.0),
            Ok(true) => {}
            Ok(false) => {
                return Point::Fail {
                    outcome: Some(o),
                    note: "postcondition fails".into(),
                }
            }
        }
    }
    Point::Pass
}

/// `∀s. pre s → ∀(r, s') ∈ prog s. post r s'`, decided by enumeration.
pub fn check_triple(t: &Triple, ctx: &Ctx) -> Result<Verdict> {
    t.check_wf(ctx)?;
    let vars = scope_for(&t.free_vars(), &t.scope)?;
    ctx.for_all(&vars, |env, s| {
        let mut env = env.clone();
        match t.pre.eval(&mut env, s, ctx) {
            Err(f) => Point::Fault(f.0),
            Ok(false) => Point::Pass,
            Ok(true) => match t.prog.run(&mut env, s, ctx) {
                Err(f) => Point::Fault(f.0),
                Ok(outs) => check_outcomes(outs, &t.post, &mut env, ctx),
            },
        }
    })
}

fn bind_ret(post: &PostPred, value: Expr) -> Pred {
    // A faulting expression must still be evaluated even if the result is
    // unused, or the precondition would miss the fault.
    if post.uses_ret() || value.may_fault() {
        Pred::Let(post.ret.clone(), value, Box::new(post.body.clone()))
    } else {
        post.body.clone()
    }
}

/// Weakest precondition of an atomic step, by substitution.
pub fn wp_atomic(c: &Comp, post: &PostPred) -> Result<Pred> {
    Ok(match c {
        Comp::Return(e) => bind_ret(post, e.clone()),
        Comp::Gets(f) => bind_ret(post, Expr::Field(f.clone())),
        Comp::Put(f, e) => Pred::Update(
            f.clone(),
            e.clone(),
            Box::new(bind_ret(post, Expr::Lit(Value::Unit))),
        ),
        Comp::Select(e) => Pred::ForallIn(post.ret.clone(), e.clone(), Box::new(post.body.clone())),
        Comp::Assert(p) => Pred::And(vec![p.clone(), bind_ret(post, Expr::Lit(Value::Unit))]),
        Comp::If(b, t, e) => Pred::And(vec![
            Pred::implies(Pred::Atom(b.clone()), wp_atomic(t, post)?),
            Pred::implies(Pred::negate(Pred::Atom(b.clone())), wp_atomic(e, post)?),
        ]),
        Comp::Bind(..) | Comp::Call(..) => return Err(Error::NotAtomic(c.to_string())),
    })
}

/// Splits `{A} x ← f; g {C}` at the midpoint `B` into
/// `(∀x. {B x} g {C}, {A} f {B})`.
pub fn split(goal: &Triple, mid: &PostPred, ctx: &Ctx) -> Result<(Triple, Triple)> {
    let Comp::Bind(f, x, g) = &goal.prog else {
        return Err(Error::NotBind(goal.prog.to_string()));
    };
    let dom = x
        .domain_in(f, &goal.scope, ctx)
        .ok_or_else(|| Error::NoDomain(x.name.clone()))?;
    let (scope, pre) = if x.name == "_" {
        if mid.uses_ret() {
            let avoid = scope_names(&goal.scope);
            let fresh = fresh_name(&mid.ret, &avoid);
            let pre = mid.at(&fresh);
            (extend(&goal.scope, &fresh, dom), pre)
        } else {
            (goal.scope.clone(), mid.body.clone())
        }
    } else {
        (extend(&goal.scope, &x.name, dom), mid.at(&x.name))
    };
    let right = Triple::new(scope, pre, (**g).clone(), goal.post.clone());
    let left = Triple::new(goal.scope.clone(), goal.pre.clone(), (**f).clone(), mid.clone());
    Ok((right, left))
}

/// Strengthens the precondition to `pre`, provided `pre` entails the old one.
pub fn weaken(t: &Triple, pre: Pred, ctx: &Ctx) -> Result<Triple> {
    let v = entails(&pre, &t.pre, &t.scope, ctx)?;
    if !v.holds() {
        return Err(Error::SideCondition(format!(
            "{pre} does not entail {}: {}",
            t.pre,
            v.display(&ctx.schema)
        )));
    }
    Ok(Triple {
        pre,
        ..t.clone()
    })
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}} {} {{{}}}", self.pre, self.prog, self.post)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{component_rules, corpus_ctx, corpus_goals, new_tcb_body, CorpusParams};
    use crate::schema::State;

    fn def(name: &str, args: &[&str]) -> Pred {
        Pred::def(name, args.iter().map(|a| Expr::var(a)).collect())
    }

    fn call(name: &str, args: &[&str]) -> Comp {
        Comp::call(name, args.iter().map(|a| Expr::var(a)).collect())
    }

    /// Plain double loop over states and assignments, then outcomes.
    fn naive(t: &Triple, ctx: &Ctx) -> Option<(State, Vec<(String, Value)>)> {
        let mut assignments: Vec<Vec<(String, Value)>> = vec![vec![]];
        for (x, d) in &t.scope {
            let mut next = Vec::new();
            for a in &assignments {
                for v in d.enumerate().unwrap() {
                    let mut a = a.clone();
                    a.push((x.clone(), v));
                    next.push(a);
                }
            }
            assignments = next;
        }
        for s in ctx.schema.enumerate_states().unwrap() {
            for a in &assignments {
                let mut env = Env::from_pairs(a.iter().map(|(x, v)| (x.as_str(), v.clone())));
                if !t.pre.eval(&mut env, &s, ctx).unwrap() {
                    continue;
                }
                for o in crate::comp::run(&t.prog, &env, &s, ctx).unwrap() {
                    if !t.post.eval(o.ret, &mut env, &o.state, ctx).unwrap() {
                        return Some((s, a.clone()));
                    }
                }
            }
        }
        None
    }

    #[test]
    fn checker_agrees_with_naive_loop() {
        let p = CorpusParams::SMALL;
        let ctx = corpus_ctx(p);
        let triples = component_rules(p).into_iter().chain(corpus_goals(p));
        let mut violated = 0;
        for (name, t) in triples {
            let v = check_triple(&t, &ctx).unwrap();
            match (naive(&t, &ctx), v) {
                (None, Verdict::Holds { .. }) => {}
                (Some((s, a)), Verdict::Violated(c)) => {
                    assert_eq!((s, a), (c.state, c.bindings), "{name}");
                    violated += 1;
                }
                (n, v) => panic!("{name}: naive {n:?}, checker {v:?}"),
            }
        }
        assert_eq!(violated, 1);
    }

    #[test]
    fn false_pre_is_vacuous() {
        let ctx = corpus_ctx(CorpusParams::SMALL);
        let scope = vec![("p".to_string(), CorpusParams::SMALL.prio())];
        let t = Triple::new(scope, Pred::False, new_tcb_body(), PostPred::ignoring(Pred::False));
        assert!(check_triple(&t, &ctx).unwrap().holds());
    }

    #[test]
    fn queues_alone_break_on_small_params() {
        let p = CorpusParams::SMALL;
        let ctx = corpus_ctx(p);
        let t = Triple::new(
            vec![],
            Pred::True,
            Comp::call("new_tcb", vec![Expr::lit(Value::Nat(0))]),
            PostPred::ignoring(def("valid_queues", &[])),
        );
        let v = check_triple(&t, &ctx).unwrap();
        let Verdict::Violated(c) = &v else { panic!("{v:?}") };
        assert_eq!(Some((c.state.clone(), c.bindings.clone())), naive(&t, &ctx));
    }

    #[test]
    fn wp_of_return_var() {
        let ctx = corpus_ctx(CorpusParams::SMALL);
        let post = PostPred::new("r", Pred::atom(Expr::eq(Expr::var("r"), Expr::var("x"))));
        let wp = wp_atomic(&Comp::Return(Expr::var("x")), &post).unwrap();
        let scope = vec![("x".to_string(), Domain::nat(0, 2))];
        assert!(crate::pred::equivalent(&wp, &Pred::True, &scope, &ctx).unwrap().holds());
    }

    #[test]
    fn wp_of_removing_from_the_pool() {
        let p = CorpusParams::SMALL;
        let ctx = corpus_ctx(p);
        let minus = Expr::SetMinus(
            Box::new(Expr::field("ids")),
            Box::new(Expr::SetLit(vec![Expr::var("i")])),
        );
        let step = Comp::Put("ids".into(), minus);
        let post = PostPred::ignoring(def("valid_free_except", &["i"]));
        let wp = wp_atomic(&step, &post).unwrap();
        assert!(matches!(wp, Pred::Update(..)));
        let t = Triple::new(vec![("i".into(), p.id())], wp, step, post);
        assert!(check_triple(&t, &ctx).unwrap().holds());
    }

    #[test]
    fn wp_of_select_quantifies_over_members() {
        let q = def("not_queued", &["i"]);
        let wp = wp_atomic(&Comp::Select(Expr::field("ids")), &PostPred::new("i", q.clone())).unwrap();
        assert_eq!(wp, Pred::ForallIn("i".into(), Expr::field("ids"), Box::new(q)));
    }

    #[test]
    fn wp_rejects_binds_and_calls() {
        assert!(wp_atomic(&new_tcb_body(), &PostPred::ignoring(Pred::True)).is_err());
        assert!(wp_atomic(&call("alloc", &[]), &PostPred::ignoring(Pred::True)).is_err());
    }

    #[test]
    fn split_new_tcb_at_valid_free_except() {
        let p = CorpusParams::SMALL;
        let ctx = corpus_ctx(p);
        let vf = def("valid_free", &[]);
        let scope = vec![("p".to_string(), p.prio())];
        let goal = Triple::new(scope.clone(), vf.clone(), new_tcb_body(), PostPred::ignoring(vf.clone()));
        let mid = PostPred::new("i", def("valid_free_except", &["i"]));
        let (right, left) = split(&goal, &mid, &ctx).unwrap();
        assert_eq!(left, Triple::new(scope, vf, call("alloc", &[]), mid));
        assert_eq!(right.scope.last().unwrap(), &("i".to_string(), p.id()));
        assert_eq!(right.pre, def("valid_free_except", &["i"]));
        assert!(check_triple(&left, &ctx).unwrap().holds());
        assert!(check_triple(&right, &ctx).unwrap().holds());
        assert!(check_triple(&goal, &ctx).unwrap().holds());
        assert!(split(&left, &PostPred::ignoring(Pred::True), &ctx).is_err());
    }

    #[test]
    fn split_after_a_read_keeps_the_pre() {
        let ctx = corpus_ctx(CorpusParams::SMALL);
        let vf = def("valid_free", &[]);
        let goal = Triple::new(
            vec![],
            vf.clone(),
            Comp::bind(Comp::Gets("ids".into()), "s", Comp::Return(Expr::var("s"))),
            PostPred::ignoring(vf.clone()),
        );
        let (right, left) = split(&goal, &PostPred::ignoring(vf.clone()), &ctx).unwrap();
        assert_eq!(right.pre, vf);
        assert!(check_triple(&left, &ctx).unwrap().holds());
        assert!(check_triple(&right, &ctx).unwrap().holds());
    }

    #[test]
    fn weaken_examples() {
        let p = CorpusParams::SMALL;
        let ctx = corpus_ctx(p);
        let (_, init) = component_rules(p)
            .into_iter()
            .find(|(n, _)| n == "init_tcb_valid_queues")
            .unwrap();
        let stronger = Pred::and([def("valid_queues", &[]), def("valid_free_except", &["i"])]);
        let w = weaken(&init, stronger.clone(), &ctx).unwrap();
        assert_eq!(w.pre, stronger);
        assert!(check_triple(&w, &ctx).unwrap().holds());

        assert_eq!(weaken(&init, init.pre.clone(), &ctx).unwrap(), init);
        assert!(weaken(&init, Pred::False, &ctx).is_ok());
        let err = weaken(&init, Pred::True, &ctx).unwrap_err();
        assert!(matches!(err, Error::SideCondition(_)), "{err}");
    }
}
