//! Annotated computations: a program with a predicate before each step.
//!
//! Annotations never change behaviour. Running an annotated computation
//! yields the outcomes of the underlying program plus a failure flag, set
//! when some reachable step's predicate is false. Composition follows the
//! bind definition literally: the flag of `x ← F; G x` is the head's flag or
//! the flag of `G` on *any* outcome of the head, and a failing head does not
//! prune the continuation.

use std::collections::BTreeSet;
use std::fmt;

use crate::comp::{Binder, Comp, Outcome};
use crate::ctx::{Ctx, Point};
use crate::error::{Error, Result};
use crate::expr::{eval_bool, Env, EvalResult, Expr};
use crate::hoare::{check_outcomes, check_triple, extend, scope_names, Scope, Triple};
use crate::pred::{entails, scope_for, PostPred, Pred};
use crate::schema::State;
use crate::value::Domain;
use crate::verdict::Verdict;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AnnComp {
    /// `{ann} step`
    Step(Pred, Comp),
    /// `doA x ← F; G odA`
    BindA(Box<AnnComp>, Binder, Box<AnnComp>),
    IfA(Expr, Box<AnnComp>, Box<AnnComp>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnRun {
    pub outcomes: BTreeSet<Outcome>,
    pub fails: bool,
}

/// `∥pre∥ ann ∥post∥`: a triple that may assume the annotations hold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnTriple {
    pub scope: Scope,
    pub pre: Pred,
    pub ann: AnnComp,
    pub post: PostPred,
}

/// `{P} f`: evaluates `f` and fails exactly where `P` does not hold.
pub fn lift(p: Pred, c: Comp) -> AnnComp {
    AnnComp::Step(p, c)
}

impl AnnComp {
    pub fn bind(first: AnnComp, x: Binder, rest: AnnComp) -> AnnComp {
        AnnComp::BindA(Box::new(first), x, Box::new(rest))
    }

    /// Annotates every step of `c` with `p`, recursing through binds and
    /// conditionals.
    pub fn uniform(c: &Comp, p: &Pred) -> AnnComp {
        match c {
            Comp::Bind(f, x, g) => {
                AnnComp::bind(Self::uniform(f, p), x.clone(), Self::uniform(g, p))
            }
            Comp::If(b, t, e) => AnnComp::IfA(
                b.clone(),
                Box::new(Self::uniform(t, p)),
                Box::new(Self::uniform(e, p)),
            ),
            _ => AnnComp::Step(p.clone(), c.clone()),
        }
    }

    /// The underlying program.
    pub fn drop_a(&self) -> Comp {
        match self {
            AnnComp::Step(_, c) => c.clone(),
            AnnComp::BindA(f, x, g) => Comp::Bind(Box::new(f.drop_a()), x.clone(), Box::new(g.drop_a())),
            AnnComp::IfA(b, t, e) => Comp::If(b.clone(), Box::new(t.drop_a()), Box::new(e.drop_a())),
        }
    }

    pub fn run_ann<'a>(&'a self, env: &mut Env<'a>, s: &State, ctx: &'a Ctx) -> EvalResult<AnnRun> {
        match self {
            AnnComp::Step(p, c) => {
                let fails = !p.eval(env, s, ctx)?;
                let outcomes = c.run(env, s, ctx)?;
                Ok(AnnRun { outcomes, fails })
            }
            AnnComp::BindA(f, x, g) => {
                let head = f.run_ann(env, s, ctx)?;
                let mut fails = head.fails;
                let mut outcomes = BTreeSet::new();
                for o in head.outcomes {
                    let pushed = env.push(&x.name, o.ret);
                    let r = g.run_ann(env, &o.state, ctx);
                    env.pop(pushed);
                    let r = r?;
                    fails |= r.fails;
                    outcomes.extend(r.outcomes);
                }
                Ok(AnnRun { outcomes, fails })
            }
            AnnComp::IfA(b, t, e) => {
                if eval_bool(b, env, s, &ctx.schema)? {
                    t.run_ann(env, s, ctx)
                } else {
                    e.run_ann(env, s, ctx)
                }
            }
        }
    }

    /// The failure flag from `s`.
    pub fn afails(&self, env: &Env<'_>, s: &State, ctx: &Ctx) -> EvalResult<bool> {
        let mut env = env.clone();
        Ok(self.run_ann(&mut env, s, ctx)?.fails)
    }

    /// Step annotations in program order, with the step they annotate.
    pub fn steps(&self) -> Vec<(&Pred, &Comp)> {
        let mut out = Vec::new();
        self.collect_steps(&mut out);
        out
    }

    fn collect_steps<'a>(&'a self, out: &mut Vec<(&'a Pred, &'a Comp)>) {
        match self {
            AnnComp::Step(p, c) => out.push((p, c)),
            AnnComp::BindA(f, _, g) | AnnComp::IfA(_, f, g) => {
                f.collect_steps(out);
                g.collect_steps(out);
            }
        }
    }

    /// Rebuilds the annotation with each step predicate passed through `f`.
    pub fn map_steps(&self, f: &mut impl FnMut(usize, &Pred) -> Pred) -> AnnComp {
        let mut index = 0;
        self.map_steps_from(&mut index, f)
    }

    fn map_steps_from(&self, index: &mut usize, f: &mut impl FnMut(usize, &Pred) -> Pred) -> AnnComp {
        match self {
            AnnComp::Step(p, c) => {
                let out = AnnComp::Step(f(*index, p), c.clone());
                *index += 1;
                out
            }
            AnnComp::BindA(a, x, b) => {
                let a = a.map_steps_from(index, f);
                AnnComp::bind(a, x.clone(), b.map_steps_from(index, f))
            }
            AnnComp::IfA(c, a, b) => {
                let a = a.map_steps_from(index, f);
                AnnComp::IfA(c.clone(), Box::new(a), Box::new(b.map_steps_from(index, f)))
            }
        }
    }

    /// Replaces the predicate of step `index` (program order).
    pub fn with_step(&self, index: usize, p: Pred) -> AnnComp {
        self.map_steps(&mut |i, q| if i == index { p.clone() } else { q.clone() })
    }

    /// Every step predicate normalized.
    pub fn normalize(&self) -> AnnComp {
        self.map_steps(&mut |_, p| p.normalize())
    }

    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        let add = |xs: Vec<String>, bound: &Vec<String>, out: &mut Vec<String>| {
            for x in xs {
                if !bound.contains(&x) && !out.contains(&x) {
                    out.push(x);
                }
            }
        };
        match self {
            AnnComp::Step(p, c) => {
                add(p.free_vars(), bound, out);
                add(c.free_vars(), bound, out);
            }
            AnnComp::BindA(f, x, g) => {
                f.collect_free(bound, out);
                bound.push(x.name.clone());
                g.collect_free(bound, out);
                bound.pop();
            }
            AnnComp::IfA(b, t, e) => {
                let mut fv = Vec::new();
                b.free_vars(&mut fv);
                add(fv, bound, out);
                t.collect_free(bound, out);
                e.collect_free(bound, out);
            }
        }
    }

    pub fn check_wf(&self, scope: &[String], ctx: &Ctx) -> Result<()> {
        match self {
            AnnComp::Step(p, c) => {
                p.check(scope, &ctx.schema, &ctx.preds)?;
                c.check(scope, ctx)
            }
            AnnComp::BindA(f, x, g) => {
                f.check_wf(scope, ctx)?;
                let mut inner = scope.to_vec();
                if x.name != "_" {
                    inner.push(x.name.clone());
                }
                g.check_wf(&inner, ctx)
            }
            AnnComp::IfA(b, t, e) => {
                b.check(scope, &ctx.schema)?;
                t.check_wf(scope, ctx)?;
                e.check_wf(scope, ctx)
            }
        }
    }
}

fn same_skeleton(f: &AnnComp, g: &AnnComp) -> Result<()> {
    if f.drop_a() == g.drop_a() {
        Ok(())
    } else {
        Err(Error::SkeletonMismatch(format!(
            "`{}` vs `{}`",
            f.drop_a(),
            g.drop_a()
        )))
    }
}

pub(crate) fn require_skeleton(prog: &Comp, ann: &AnnComp) -> Result<()> {
    if &ann.drop_a() == prog {
        Ok(())
    } else {
        Err(Error::SkeletonMismatch(format!(
            "annotation covers `{}`, program is `{prog}`",
            ann.drop_a()
        )))
    }
}

/// `F ⋈ G`: per-step conjunction. Fails wherever either operand fails.
pub fn merge(f: &AnnComp, g: &AnnComp) -> Result<AnnComp> {
    same_skeleton(f, g)?;
    fn go(f: &AnnComp, g: &AnnComp) -> AnnComp {
        match (f, g) {
            (AnnComp::Step(p, c), AnnComp::Step(q, _)) => {
                AnnComp::Step(Pred::And(vec![p.clone(), q.clone()]).normalize(), c.clone())
            }
            (AnnComp::BindA(f1, x, f2), AnnComp::BindA(g1, _, g2)) => {
                AnnComp::bind(go(f1, g1), x.clone(), go(f2, g2))
            }
            (AnnComp::IfA(b, f1, f2), AnnComp::IfA(_, g1, g2)) => {
                AnnComp::IfA(b.clone(), Box::new(go(f1, g1)), Box::new(go(f2, g2)))
            }
            _ => unreachable!("skeletons were compared"),
        }
    }
    Ok(go(f, g))
}

/// `{P} f ⊑ F`: from any `P`-state, no annotation of `F` fails.
pub fn check_order(pre: &Pred, prog: &Comp, ann: &AnnComp, scope: &[(String, Domain)], ctx: &Ctx) -> Result<Verdict> {
    require_skeleton(prog, ann)?;
    let names = scope_names(scope);
    pre.check(&names, &ctx.schema, &ctx.preds)?;
    ann.check_wf(&names, ctx)?;
    let mut fv = pre.free_vars();
    for x in ann.free_vars() {
        if !fv.contains(&x) {
            fv.push(x);
        }
    }
    let vars = scope_for(&fv, scope)?;
    ctx.for_all(&vars, |env, s| {
        let mut env = env.clone();
        match pre.eval(&mut env, s, ctx) {
            Err(f) => Point::Fault(f.0),
            Ok(false) => Point::Pass,
            Ok(true) => match ann.run_ann(&mut env, s, ctx) {
                Err(f) => Point::Fault(f.0),
                Ok(r) if r.fails => Point::Fail {
                    outcome: None,
                    note: "an annotation fails".into(),
                },
                Ok(_) => Point::Pass,
            },
        }
    })
}

/// General `F ⊑ G` between annotations of the same program:
/// `∀s. (¬afails F s ⟶ dropA F s = dropA G s) ∧ (afails G s ⟶ afails F s)`.
pub fn check_refines(f: &AnnComp, g: &AnnComp, scope: &[(String, Domain)], ctx: &Ctx) -> Result<Verdict> {
    let names = scope_names(scope);
    f.check_wf(&names, ctx)?;
    g.check_wf(&names, ctx)?;
    let mut fv = f.free_vars();
    for x in g.free_vars() {
        if !fv.contains(&x) {
            fv.push(x);
        }
    }
    let vars = scope_for(&fv, scope)?;
    ctx.for_all(&vars, |env, s| {
        let mut env = env.clone();
        let rf = match f.run_ann(&mut env, s, ctx) {
            Ok(r) => r,
            Err(e) => return Point::Fault(e.0),
        };
        let rg = match g.run_ann(&mut env, s, ctx) {
            Ok(r) => r,
            Err(e) => return Point::Fault(e.0),
        };
        if !rf.fails && rf.outcomes != rg.outcomes {
            Point::Fail {
                outcome: None,
                note: "underlying behaviours differ".into(),
            }
        } else if rg.fails && !rf.fails {
            Point::Fail {
                outcome: None,
                note: "weaker annotation fails where the stronger does not".into(),
            }
        } else {
            Point::Pass
        }
    })
}

/// `∥P∥ F ∥Q∥ ≡ ∀s. ¬afails (F s) ⟶ P s ⟶ (∀(r, s') ∈ dropA F s. Q r s')`.
pub fn check_ann_triple(t: &AnnTriple, ctx: &Ctx) -> Result<Verdict> {
    let names = scope_names(&t.scope);
    t.pre.check(&names, &ctx.schema, &ctx.preds)?;
    t.ann.check_wf(&names, ctx)?;
    let mut post_scope = names;
    post_scope.push(t.post.ret.clone());
    t.post.body.check(&post_scope, &ctx.schema, &ctx.preds)?;
    let vars = scope_for(&t.free_vars(), &t.scope)?;
    ctx.for_all(&vars, |env, s| {
        let mut env = env.clone();
        match t.pre.eval(&mut env, s, ctx) {
            Err(f) => Point::Fault(f.0),
            Ok(false) => Point::Pass,
            Ok(true) => match t.ann.run_ann(&mut env, s, ctx) {
                Err(f) => Point::Fault(f.0),
                Ok(r) if r.fails => Point::Pass,
                Ok(r) => check_outcomes(r.outcomes, &t.post, &mut env, ctx),
            },
        }
    })
}

/// `{P} f {Q} ⟨F⟩ ≡ {P} f {Q} ∧ {P} f ⊑ F`.
pub fn check_annotator(t: &Triple, ann: &AnnComp, ctx: &Ctx) -> Result<Verdict> {
    require_skeleton(&t.prog, ann)?;
    let triple = check_triple(t, ctx)?;
    if !triple.holds() {
        return Ok(triple);
    }
    check_order(&t.pre, &t.prog, ann, &t.scope, ctx)
}

/// `∥P∥ F ∥Q∥ ⟨G⟩`: the annotated triple holds and, assuming `F` does not
/// fail, `G` does not fail from any `P`-state.
pub fn check_strong_annotator(t: &AnnTriple, out: &AnnComp, ctx: &Ctx) -> Result<Verdict> {
    same_skeleton(&t.ann, out)?;
    let v = check_ann_triple(t, ctx)?;
    if !v.holds() {
        return Ok(v);
    }
    let names = scope_names(&t.scope);
    out.check_wf(&names, ctx)?;
    let mut fv = t.free_vars();
    for x in out.free_vars() {
        if !fv.contains(&x) {
            fv.push(x);
        }
    }
    let vars = scope_for(&fv, &t.scope)?;
    ctx.for_all(&vars, |env, s| {
        let mut env = env.clone();
        match t.pre.eval(&mut env, s, ctx) {
            Err(f) => Point::Fault(f.0),
            Ok(false) => Point::Pass,
            Ok(true) => match t.ann.run_ann(&mut env, s, ctx) {
                Err(f) => Point::Fault(f.0),
                Ok(r) if r.fails => Point::Pass,
                Ok(_) => match out.run_ann(&mut env, s, ctx) {
                    Err(f) => Point::Fault(f.0),
                    Ok(r) if r.fails => Point::Fail {
                        outcome: None,
                        note: "produced annotation fails".into(),
                    },
                    Ok(_) => Point::Pass,
                },
            },
        }
    })
}

/// Step-by-step entailment between two annotations of the same program,
/// each step checked under the binders in scope at that step.
pub fn pointwise_entails(f: &AnnComp, g: &AnnComp, scope: &[(String, Domain)], ctx: &Ctx) -> Result<Verdict> {
    same_skeleton(f, g)?;
    fn go(f: &AnnComp, g: &AnnComp, scope: &Scope, ctx: &Ctx) -> Result<Verdict> {
        match (f, g) {
            (AnnComp::Step(p, _), AnnComp::Step(q, _)) => entails(p, q, scope, ctx),
            (AnnComp::BindA(f1, x, f2), AnnComp::BindA(g1, _, g2)) => {
                let head = go(f1, g1, scope, ctx)?;
                if !head.holds() {
                    return Ok(head);
                }
                let dom = x
                    .domain_in(&f1.drop_a(), scope, ctx)
                    .ok_or_else(|| Error::NoDomain(x.name.clone()))?;
                go(f2, g2, &extend(scope, &x.name, dom), ctx)
            }
            (AnnComp::IfA(_, f1, f2), AnnComp::IfA(_, g1, g2)) => {
                let a = go(f1, g1, scope, ctx)?;
                if !a.holds() {
                    return Ok(a);
                }
                go(f2, g2, scope, ctx)
            }
            _ => unreachable!("skeletons were compared"),
        }
    }
    go(f, g, &scope.to_vec(), ctx)
}

/// Turns every annotation into an explicit assertion before its step.
pub fn to_asserting_comp(f: &AnnComp) -> Comp {
    match f {
        AnnComp::Step(p, c) => Comp::Bind(
            Box::new(Comp::Assert(p.clone())),
            Binder::wildcard(),
            Box::new(c.clone()),
        ),
        AnnComp::BindA(a, x, b) => Comp::Bind(
            Box::new(to_asserting_comp(a)),
            x.clone(),
            Box::new(to_asserting_comp(b)),
        ),
        AnnComp::IfA(c, a, b) => Comp::If(
            c.clone(),
            Box::new(to_asserting_comp(a)),
            Box::new(to_asserting_comp(b)),
        ),
    }
}

impl AnnTriple {
    pub fn new(scope: Scope, pre: Pred, ann: AnnComp, post: PostPred) -> Self {
        AnnTriple {
            scope,
            pre,
            ann,
            post,
        }
    }

    pub(crate) fn free_vars(&self) -> Vec<String> {
        let mut out = self.pre.free_vars();
        for x in self.ann.free_vars().into_iter().chain(self.post.free_vars()) {
            if !out.contains(&x) {
                out.push(x);
            }
        }
        out
    }

    /// The plain triple over the underlying program.
    pub fn underlying(&self) -> Triple {
        Triple::new(self.scope.clone(), self.pre.clone(), self.ann.drop_a(), self.post.clone())
    }
}

impl fmt::Display for AnnComp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        crate::store::print::write_ann(f, self)
    }
}

impl fmt::Display for AnnTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "∥{}∥ {} ∥{}∥", self.pre, self.ann, self.post)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comp::run;
    use crate::corpus::{valid_free_annotation, valid_queues_annotation, merged_annotation, new_tcb_body, corpus_ctx, CorpusParams};
    use crate::hoare::Triple;
    use crate::schema::State;
    use crate::soundness::bit_ctx;
    use crate::value::Value;

    fn def(name: &str) -> Pred {
        Pred::def(name, vec![])
    }

    fn ctx21() -> (Ctx, Scope) {
        let p = CorpusParams::new(2, 1).unwrap();
        (corpus_ctx(p), vec![("p".into(), p.prio())])
    }

    fn p0() -> Env<'static> {
        Env::from_pairs([("p", Value::Nat(0))])
    }

    fn holds_at(ctx: &Ctx, p: &Pred, s: &State) -> bool {
        p.eval(&mut p0(), s, ctx).unwrap()
    }

    #[test]
    fn lift_fails_exactly_off_the_predicate() {
        let (ctx, _) = ctx21();
        let alloc = Comp::call("alloc", vec![]);
        for s in ctx.schema.enumerate_states().unwrap() {
            let env = Env::new();
            assert!(!lift(Pred::True, alloc.clone()).afails(&env, &s, &ctx).unwrap());
            assert!(lift(Pred::False, alloc.clone()).afails(&env, &s, &ctx).unwrap());
            let f = lift(def("valid_free"), alloc.clone());
            assert_eq!(f.afails(&env, &s, &ctx).unwrap(), !holds_at(&ctx, &def("valid_free"), &s));
            assert_eq!(f.drop_a(), alloc);
        }
    }

    #[test]
    fn run_ann_of_a_single_return() {
        let ctx = bit_ctx();
        let b = Pred::atom(Expr::field("b"));
        let f = lift(b, Comp::Return(Expr::lit(Value::Nat(3))));
        for v in [false, true] {
            let s = ctx.schema.state(vec![Value::Bool(v)]).unwrap();
            let r = f.run_ann(&mut Env::new(), &s, &ctx).unwrap();
            assert_eq!(r.fails, !v);
            assert_eq!(r.outcomes, run(&f.drop_a(), &Env::new(), &s, &ctx).unwrap());
        }
    }

    #[test]
    fn one_failing_branch_fails_the_composite() {
        let ctx = bit_ctx();
        let two = Expr::SetLit(vec![Expr::lit(Value::Nat(0)), Expr::lit(Value::Nat(1))]);
        let is_zero = Pred::atom(Expr::eq(Expr::var("x"), Expr::lit(Value::Nat(0))));
        let f = AnnComp::bind(
            lift(Pred::True, Comp::Select(two)),
            Binder::new("x"),
            lift(is_zero, Comp::Return(Expr::var("x"))),
        );
        let s = ctx.schema.state(vec![Value::Bool(false)]).unwrap();
        let r = f.run_ann(&mut Env::new(), &s, &ctx).unwrap();
        assert!(r.fails);
        assert_eq!(r.outcomes.len(), 2);
    }

    #[test]
    fn valid_free_annotation_preserves_behaviour() {
        let (ctx, _) = ctx21();
        let ann = valid_free_annotation();
        for s in ctx.schema.enumerate_states().unwrap() {
            let r = ann.run_ann(&mut p0(), &s, &ctx).unwrap();
            assert_eq!(r.outcomes, run(&new_tcb_body(), &p0(), &s, &ctx).unwrap());
            if holds_at(&ctx, &def("valid_free"), &s) {
                assert!(!r.fails);
            }
        }
    }

    #[test]
    fn merge_examples() {
        let f = valid_free_annotation();
        assert_eq!(merge(&f, &f).unwrap(), f.normalize());
        let trivial = AnnComp::uniform(&f.drop_a(), &Pred::True);
        assert_eq!(merge(&f, &trivial).unwrap(), f.normalize());
        assert_eq!(merge(&f, &valid_queues_annotation()).unwrap().normalize(), merged_annotation().normalize());
        assert_eq!(merge(&f, &valid_queues_annotation()).unwrap().drop_a(), f.drop_a());

        let other = lift(Pred::True, Comp::Return(Expr::var("i")));
        assert!(matches!(merge(&f, &other), Err(Error::SkeletonMismatch(_))));
    }

    #[test]
    fn ordering_examples() {
        let (ctx, scope) = ctx21();
        let body = new_tcb_body();
        let vf_ann = valid_free_annotation();
        assert!(check_order(&def("valid_free"), &body, &vf_ann, &scope, &ctx).unwrap().holds());
        let trivial = AnnComp::uniform(&body, &Pred::True);
        assert!(check_order(&Pred::True, &body, &trivial, &scope, &ctx).unwrap().holds());

        let Verdict::Violated(c) = check_order(&Pred::True, &body, &vf_ann, &scope, &ctx).unwrap() else {
            panic!("the valid_free annotation fails outside valid_free");
        };
        let first = ctx
            .schema
            .enumerate_states()
            .unwrap()
            .into_iter()
            .find(|s| !holds_at(&ctx, &def("valid_free"), s))
            .unwrap();
        assert_eq!(c.state, first);
        assert!(check_order(&Pred::True, &Comp::call("alloc", vec![]), &vf_ann, &scope, &ctx).is_err());
    }

    #[test]
    fn annotated_triple_examples() {
        let (ctx, scope) = ctx21();
        let vf_ann = valid_free_annotation();
        let vq = PostPred::ignoring(def("valid_queues"));
        let vf = PostPred::ignoring(def("valid_free"));
        let both = Pred::and([def("valid_queues"), def("valid_free")]);
        let at = |pre: Pred, ann: AnnComp, post: &PostPred| AnnTriple::new(scope.clone(), pre, ann, post.clone());
        assert!(check_ann_triple(&at(both, vf_ann.clone(), &vq), &ctx).unwrap().holds());
        assert!(check_ann_triple(&at(Pred::True, vf_ann.clone(), &vf), &ctx).unwrap().holds());
        let failing = AnnComp::uniform(&vf_ann.drop_a(), &Pred::False);
        let never = PostPred::ignoring(Pred::False);
        assert!(check_ann_triple(&at(Pred::True, failing, &never), &ctx).unwrap().holds());
        // Without the annotation the queues claim needs a second priority
        // to fail.
        let trivial = AnnComp::uniform(&vf_ann.drop_a(), &Pred::True);
        assert!(check_ann_triple(&at(def("valid_queues"), trivial.clone(), &vq), &ctx).unwrap().holds());
        let p = CorpusParams::SMALL;
        let small = AnnTriple::new(vec![("p".into(), p.prio())], def("valid_queues"), trivial, vq);
        assert!(!check_ann_triple(&small, &corpus_ctx(p)).unwrap().holds());
    }

    #[test]
    fn annotator_examples() {
        let (ctx, scope) = ctx21();
        let body = new_tcb_body();
        let vf = def("valid_free");
        let t = Triple::new(scope.clone(), vf.clone(), body.clone(), PostPred::ignoring(vf.clone()));
        assert!(check_annotator(&t, &valid_free_annotation(), &ctx).unwrap().holds());

        let trivial = AnnComp::uniform(&body, &Pred::True);
        assert_eq!(
            check_annotator(&t, &trivial, &ctx).unwrap(),
            crate::hoare::check_triple(&t, &ctx).unwrap()
        );

        let strong = AnnTriple::new(
            scope,
            def("valid_queues"),
            valid_free_annotation(),
            PostPred::ignoring(def("valid_queues")),
        );
        assert!(check_strong_annotator(&strong, &valid_queues_annotation(), &ctx).unwrap().holds());
    }

    #[test]
    fn assertions_replace_annotations() {
        let alloc = Comp::call("alloc", vec![]);
        let expected = Comp::Bind(
            Box::new(Comp::Assert(def("valid_free"))),
            Binder::wildcard(),
            Box::new(alloc.clone()),
        );
        assert_eq!(to_asserting_comp(&lift(def("valid_free"), alloc)), expected);

        let (ctx, _) = ctx21();
        let asserting = to_asserting_comp(&valid_free_annotation());
        let mut saw_fault = false;
        for s in ctx.schema.enumerate_states().unwrap() {
            let got = run(&asserting, &p0(), &s, &ctx);
            if holds_at(&ctx, &def("valid_free"), &s) {
                assert_eq!(got.unwrap(), run(&new_tcb_body(), &p0(), &s, &ctx).unwrap());
            } else {
                assert!(got.is_err());
                saw_fault = true;
            }
        }
        assert!(saw_fault);
    }
}
