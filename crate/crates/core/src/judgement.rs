//! Checked claims and the derivation rules of the calculus.
//!
//! A [`Judgement`] is either established by enumeration or produced by
//! [`apply_rule`] from premise judgements plus side conditions, which are
//! themselves decided by enumeration. Any judgement can be re-checked
//! directly ([`Judgement::audit`]).

use std::collections::BTreeMap;
use std::fmt;

use crate::annot::{
    check_ann_triple, check_annotator, check_order, check_refines, check_strong_annotator, lift,
    merge, pointwise_entails, AnnComp, AnnTriple,
};
use crate::comp::{Binder, Comp};
use crate::ctx::Ctx;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::hoare::{check_triple, extend, scope_names, wp_atomic, Scope, Triple};
use crate::pred::{entails, entails_post, fresh_name, PostPred, Pred};
use crate::verdict::Verdict;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Claim {
    Triple(Triple),
    AnnTriple(AnnTriple),
    /// `{pre} prog ⊑ ann`
    Ordering {
        scope: Scope,
        pre: Pred,
        prog: Comp,
        ann: AnnComp,
    },
    /// `stronger ⊑ weaker`
    Refines {
        scope: Scope,
        stronger: AnnComp,
        weaker: AnnComp,
    },
    /// `{P} f {Q} ⟨F⟩`
    Annotator { triple: Triple, ann: AnnComp },
    /// `∥P∥ F ∥Q∥ ⟨G⟩`
    StrongAnnotator { triple: AnnTriple, out: AnnComp },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rule {
    /// `⊢ {wp c Q} c {Q}` for an atomic `c`.
    Wp { scope: Scope, step: Comp, post: PostPred },
    /// `∀x. {B x} g {C}`, `{A} f {B}` ⊢ `{A} x ← f; g {C}`
    WpSplit { binder: Binder },
    /// `{A₁} t {C}`, `{A₂} e {C}` ⊢ `{A} if b t e {C}`
    IfSplit { cond: crate::expr::Expr, pre: Pred },
    /// Strengthens the precondition of any claim that has one.
    Weaken { pre: Pred },
    /// Weakens the postcondition of a triple.
    Conseq { post: PostPred },
    /// `{P₁} f {Q₁}`, `{P₂} f {Q₂}` ⊢ `{P₁ ∧ P₂} f {Q₁ ∧ Q₂}`
    Conj,
    /// Substitutes state-independent expressions for scope variables of a
    /// triple over a call.
    Instantiate {
        scope: Scope,
        map: BTreeMap<String, Expr>,
    },
    /// `{P} body {Q}` ⊢ `{P} f params {Q}`
    Unfold { program: String },
    /// `{R ∧ P} f {Q}` ⊢ `∥R∥ {P} f ∥Q∥`
    AssumeAnnotation { frame: Pred, ann: Pred },
    /// `{P} f ⊑ F`, `∥P∥ F ∥Q∥` ⊢ `{P} f {Q}`
    UseAnnotation,
    /// Per-step entailment ⊢ `F ⊑ G`.
    WeakenAnnotation {
        scope: Scope,
        from: AnnComp,
        to: AnnComp,
    },
    /// `{P} f ⊑ F`, `F ⊑ G` ⊢ `{P} f ⊑ G`
    OrderTrans,
    /// `{P} f ⊑ F`, `{Q} f ⊑ F'` ⊢ `{P ∧ Q} f ⊑ F ⋈ F'`
    MergeAdherence,
    /// `∀x. ∥B x∥ G x ∥C∥`, `{A ∧ P} f {B}` ⊢ `∥A∥ doA x ← {P} f; G x odA ∥C∥`
    StrongSplit { frame: Pred, ann: Pred, binder: Binder },
    /// `∥A₁∥ T ∥C∥`, `∥A₂∥ E ∥C∥` ⊢ `∥A∥ if b T E ∥C∥`
    StrongIf { cond: Expr, pre: Pred },
    /// `∀x. {B x} g x {C} ⟨G x⟩`, `{A} f {B}` ⊢
    /// `{A} x ← f; g x {C} ⟨doA x ← {A} f; G x odA⟩`
    AnnotatingBind { binder: Binder },
    /// `{A} f {C}` ⊢ `{A} f {C} ⟨{A} f⟩`
    AnnotateStep,
    /// Annotators of both branches ⊢ annotator of the conditional.
    AnnotatingIf { cond: Expr, pre: Pred },
    /// `{R ∧ P} f {Q}` ⊢ `∥R∥ {P} f ∥Q∥ ⟨{out} f⟩`, given `R ∧ P ⟹ out`.
    StrongAnnotateStep { frame: Pred, ann: Pred, out: Pred },
    /// Strong split that also produces an annotation.
    StrongAnnotatingBind {
        frame: Pred,
        ann: Pred,
        out: Pred,
        binder: Binder,
    },
    StrongAnnotatingIf { cond: Expr, pre: Pred },
    /// Annotator ⊢ its triple.
    AnnotatorTriple,
    /// Annotator ⊢ its ordering.
    AnnotatorOrdering,
    /// Strong annotator ⊢ its annotated triple.
    StrongAnnotatorTriple,
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Wp { .. } => "wp",
            Rule::WpSplit { .. } => "wp-split",
            Rule::IfSplit { .. } => "if-split",
            Rule::Weaken { .. } => "weaken",
            Rule::Conseq { .. } => "conseq",
            Rule::Conj => "conj",
            Rule::Instantiate { .. } => "instantiate",
            Rule::Unfold { .. } => "unfold",
            Rule::AssumeAnnotation { .. } => "assume-annotation",
            Rule::UseAnnotation => "use-annotation",
            Rule::WeakenAnnotation { .. } => "weaken-annotation",
            Rule::OrderTrans => "order-trans",
            Rule::MergeAdherence => "merge-adherence",
            Rule::StrongSplit { .. } => "wp-strong-split",
            Rule::StrongIf { .. } => "strong-if",
            Rule::AnnotatingBind { .. } => "annotating-bind",
            Rule::AnnotateStep => "annotate-step",
            Rule::AnnotatingIf { .. } => "annotating-if",
            Rule::StrongAnnotateStep { .. } => "strong-annotate-step",
            Rule::StrongAnnotatingBind { .. } => "strong-annotating-bind",
            Rule::StrongAnnotatingIf { .. } => "strong-annotating-if",
            Rule::AnnotatorTriple => "annotator-triple",
            Rule::AnnotatorOrdering => "annotator-ordering",
            Rule::StrongAnnotatorTriple => "strong-annotator-triple",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Evidence {
    ByEnumeration { states: u64 },
    ByRule { rule: Rule, premises: Vec<Judgement> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Judgement {
    claim: Claim,
    evidence: Evidence,
}

impl Claim {
    pub fn check(&self, ctx: &Ctx) -> Result<Verdict> {
        match self {
            Claim::Triple(t) => check_triple(t, ctx),
            Claim::AnnTriple(t) => check_ann_triple(t, ctx),
            Claim::Ordering {
                scope,
                pre,
                prog,
                ann,
            } => check_order(pre, prog, ann, scope, ctx),
            Claim::Refines {
                scope,
                stronger,
                weaker,
            } => check_refines(stronger, weaker, scope, ctx),
            Claim::Annotator { triple, ann } => check_annotator(triple, ann, ctx),
            Claim::StrongAnnotator { triple, out } => check_strong_annotator(triple, out, ctx),
        }
    }

    pub fn scope(&self) -> &Scope {
        match self {
            Claim::Triple(t) | Claim::Annotator { triple: t, .. } => &t.scope,
            Claim::AnnTriple(t) | Claim::StrongAnnotator { triple: t, .. } => &t.scope,
            Claim::Ordering { scope, .. } | Claim::Refines { scope, .. } => scope,
        }
    }

    /// Names resolve and every term is closed under the scope.
    pub fn check_wf(&self, ctx: &Ctx) -> Result<()> {
        let names = scope_names(self.scope());
        let ann_triple = |t: &AnnTriple| -> Result<()> {
            t.pre.check(&names, &ctx.schema, &ctx.preds)?;
            t.ann.check_wf(&names, ctx)?;
            let mut post_scope = names.clone();
            post_scope.push(t.post.ret.clone());
            t.post.body.check(&post_scope, &ctx.schema, &ctx.preds)
        };
        match self {
            Claim::Triple(t) => t.check_wf(ctx),
            Claim::AnnTriple(t) => ann_triple(t),
            Claim::Ordering { pre, prog, ann, .. } => {
                pre.check(&names, &ctx.schema, &ctx.preds)?;
                prog.check(&names, ctx)?;
                ann.check_wf(&names, ctx)
            }
            Claim::Refines {
                stronger, weaker, ..
            } => {
                stronger.check_wf(&names, ctx)?;
                weaker.check_wf(&names, ctx)
            }
            Claim::Annotator { triple, ann } => {
                triple.check_wf(ctx)?;
                ann.check_wf(&names, ctx)
            }
            Claim::StrongAnnotator { triple, out } => {
                ann_triple(triple)?;
                out.check_wf(&names, ctx)
            }
        }
    }
}

impl Judgement {
    /// Decides the claim by enumeration and keeps it only if it holds.
    pub fn by_enumeration(claim: Claim, ctx: &Ctx) -> Result<Judgement> {
        let v = claim.check(ctx)?;
        match v {
            Verdict::Holds { states } => Ok(Judgement {
                claim,
                evidence: Evidence::ByEnumeration { states },
            }),
            other => Err(Error::Refuted(other.display(&ctx.schema).to_string())),
        }
    }

    pub fn claim(&self) -> &Claim {
        &self.claim
    }

    pub fn evidence(&self) -> &Evidence {
        &self.evidence
    }

    pub fn into_claim(self) -> Claim {
        self.claim
    }

    /// Re-checks the conclusion by enumeration.
    pub fn audit(&self, ctx: &Ctx) -> Result<Verdict> {
        self.claim.check(ctx)
    }

    /// Re-checks every node of the derivation, conclusion first. Returns
    /// the first node that does not hold, with its rule name.
    pub fn audit_deep(&self, ctx: &Ctx) -> Result<Option<(String, Verdict)>> {
        let v = self.claim.check(ctx)?;
        if !v.holds() {
            return Ok(Some((self.rule_name().to_string(), v)));
        }
        if let Evidence::ByRule { premises, .. } = &self.evidence {
            for p in premises {
                if let Some(bad) = p.audit_deep(ctx)? {
                    return Ok(Some(bad));
                }
            }
        }
        Ok(None)
    }

    pub fn rule_name(&self) -> &'static str {
        match &self.evidence {
            Evidence::ByEnumeration { .. } => "enumeration",
            Evidence::ByRule { rule, .. } => rule.name(),
        }
    }

    /// Number of nodes in the derivation.
    pub fn size(&self) -> usize {
        match &self.evidence {
            Evidence::ByEnumeration { .. } => 1,
            Evidence::ByRule { premises, .. } => 1 + premises.iter().map(Judgement::size).sum::<usize>(),
        }
    }

    pub fn as_triple(&self) -> Option<&Triple> {
        match &self.claim {
            Claim::Triple(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_ann_triple(&self) -> Option<&AnnTriple> {
        match &self.claim {
            Claim::AnnTriple(t) => Some(t),
            _ => None,
        }
    }
}

fn shape(rule: &Rule, reason: impl Into<String>) -> Error {
    Error::RuleShape {
        rule: rule.name().into(),
        reason: reason.into(),
    }
}

/// `p ⟹ q` over `scope`. Syntactic inclusion of conjuncts is accepted
/// without enumeration.
pub(crate) fn implies(p: &Pred, q: &Pred, scope: &[(String, crate::value::Domain)], ctx: &Ctx) -> Result<()> {
    let pc = p.conjuncts();
    if q.conjuncts().iter().all(|c| pc.contains(c)) {
        return Ok(());
    }
    let v = entails(p, q, scope, ctx)?;
    if v.holds() {
        Ok(())
    } else {
        Err(Error::SideCondition(format!(
            "{p} does not entail {q}: {}",
            v.display(&ctx.schema)
        )))
    }
}

/// `∀r. p r ⟹ q r` for the results `r` of `prog`, with the same
/// syntactic shortcut as [`implies`].
pub(crate) fn post_implies(p: &PostPred, q: &PostPred, prog: &Comp, scope: &Scope, ctx: &Ctx) -> Result<()> {
    const RET: &str = "ret#";
    let pc = p.at(RET).conjuncts();
    if q.at(RET).conjuncts().iter().all(|c| pc.contains(c)) {
        return Ok(());
    }
    let ret = prog
        .result_domain(scope, ctx)
        .ok_or_else(|| Error::NoDomain(q.ret.clone()))?;
    let v = entails_post(p, q, &ret, scope, ctx)?;
    if v.holds() {
        Ok(())
    } else {
        Err(Error::SideCondition(format!(
            "{p} does not entail {q}: {}",
            v.display(&ctx.schema)
        )))
    }
}

fn and2(a: &Pred, b: &Pred) -> Pred {
    Pred::And(vec![a.clone(), b.clone()]).normalize()
}

fn premises<const N: usize>(rule: &Rule, ps: &[Judgement]) -> Result<[usize; N]> {
    if ps.len() == N {
        Ok(std::array::from_fn(|i| i))
    } else {
        Err(shape(rule, format!("expects {N} premises, got {}", ps.len())))
    }
}

fn want_triple<'a>(rule: &Rule, j: &'a Judgement) -> Result<&'a Triple> {
    j.as_triple()
        .ok_or_else(|| shape(rule, "premise must be a triple"))
}

fn want_ann_triple<'a>(rule: &Rule, j: &'a Judgement) -> Result<&'a AnnTriple> {
    j.as_ann_triple()
        .ok_or_else(|| shape(rule, "premise must be an annotated triple"))
}

/// `(scope, pre, prog, ann)` of an ordering, or of the ordering half of an
/// annotator.
fn want_ordering<'a>(rule: &Rule, j: &'a Judgement) -> Result<(&'a Scope, &'a Pred, &'a Comp, &'a AnnComp)> {
    match &j.claim {
        Claim::Ordering {
            scope,
            pre,
            prog,
            ann,
        } => Ok((scope, pre, prog, ann)),
        Claim::Annotator { triple, ann } => Ok((&triple.scope, &triple.pre, &triple.prog, ann)),
        _ => Err(shape(rule, "premise must be an ordering or an annotator")),
    }
}

/// The continuation premise of a bind rule must quantify over the head's
/// scope plus the binder, whose domain must cover every value the head can
/// return.
fn check_continuation_scope(
    rule: &Rule,
    head_scope: &Scope,
    head: &Comp,
    binder: &Binder,
    cont_scope: &Scope,
    mid: &PostPred,
    ctx: &Ctx,
) -> Result<Pred> {
    if binder.name == "_" {
        if mid.uses_ret() {
            return Err(shape(rule, "midpoint uses the result of an unbound step"));
        }
        if cont_scope != head_scope {
            return Err(shape(rule, "continuation scope differs from the head's"));
        }
        return Ok(mid.body.clone());
    }
    if head_scope.iter().any(|(n, _)| n == &binder.name) {
        return Err(shape(rule, format!("binder `{}` shadows a quantified variable", binder.name)));
    }
    let Some(((x, dx), rest)) = cont_scope.split_last() else {
        return Err(shape(rule, "continuation premise must quantify over the binder"));
    };
    if x != &binder.name || rest != head_scope.as_slice() {
        return Err(shape(
            rule,
            format!("continuation premise must quantify over the head scope plus `{}`", binder.name),
        ));
    }
    let d = binder
        .domain_in(head, head_scope, ctx)
        .ok_or_else(|| Error::NoDomain(binder.name.clone()))?;
    if !dx.covers(&d) {
        return Err(shape(rule, format!("domain {dx} of `{x}` does not cover the results {d}")));
    }
    Ok(mid.at(x))
}

fn bind_of(f: &Comp, x: &Binder, g: &Comp) -> Comp {
    Comp::Bind(Box::new(f.clone()), x.clone(), Box::new(g.clone()))
}

fn bind_a(f: AnnComp, x: &Binder, g: &AnnComp) -> AnnComp {
    AnnComp::BindA(Box::new(f), x.clone(), Box::new(g.clone()))
}

fn negate_cond(b: &Expr) -> Pred {
    Pred::negate(Pred::Atom(b.clone()))
}

/// Applies `rule` to `premises`, discharging its side conditions. The
/// conclusion is checked for well-formedness but not re-verified.
pub fn apply_rule(rule: Rule, premises_in: Vec<Judgement>, ctx: &Ctx) -> Result<Judgement> {
    let ps = &premises_in;
    let r = &rule;
    let claim = match r {
        Rule::Wp { scope, step, post } => {
            premises::<0>(r, ps)?;
            let pre = wp_atomic(step, post)?;
            Claim::Triple(Triple::new(scope.clone(), pre, step.clone(), post.clone()))
        }
        Rule::WpSplit { binder } => {
            premises::<2>(r, ps)?;
            let right = want_triple(r, &ps[0])?;
            let left = want_triple(r, &ps[1])?;
            let b = check_continuation_scope(r, &left.scope, &left.prog, binder, &right.scope, &left.post, ctx)?;
            implies(&b, &right.pre, &right.scope, ctx)?;
            Claim::Triple(Triple::new(
                left.scope.clone(),
                left.pre.clone(),
                bind_of(&left.prog, binder, &right.prog),
                right.post.clone(),
            ))
        }
        Rule::IfSplit { cond, pre } => {
            premises::<2>(r, ps)?;
            let t = want_triple(r, &ps[0])?;
            let e = want_triple(r, &ps[1])?;
            if t.scope != e.scope || t.post != e.post {
                return Err(shape(r, "branches must share scope and postcondition"));
            }
            implies(&and2(pre, &Pred::Atom(cond.clone())), &t.pre, &t.scope, ctx)?;
            implies(&and2(pre, &negate_cond(cond)), &e.pre, &e.scope, ctx)?;
            Claim::Triple(Triple::new(
                t.scope.clone(),
                pre.clone(),
                Comp::If(cond.clone(), Box::new(t.prog.clone()), Box::new(e.prog.clone())),
                t.post.clone(),
            ))
        }
        Rule::Weaken { pre } => {
            premises::<1>(r, ps)?;
            let mut claim = ps[0].claim.clone();
            let scope = claim.scope().clone();
            let old = match &mut claim {
                Claim::Triple(t) | Claim::Annotator { triple: t, .. } => &mut t.pre,
                Claim::AnnTriple(t) | Claim::StrongAnnotator { triple: t, .. } => &mut t.pre,
                Claim::Ordering { pre, .. } => pre,
                Claim::Refines { .. } => return Err(shape(r, "a refinement has no precondition")),
            };
            implies(pre, old, &scope, ctx)?;
            *old = pre.clone();
            claim
        }
        Rule::Conseq { post } => {
            premises::<1>(r, ps)?;
            let t = want_triple(r, &ps[0])?;
            post_implies(&t.post, post, &t.prog, &t.scope, ctx)?;
            Claim::Triple(Triple {
                post: post.clone(),
                ..t.clone()
            })
        }
        Rule::Conj => {
            premises::<2>(r, ps)?;
            let a = want_triple(r, &ps[0])?;
            let b = want_triple(r, &ps[1])?;
            if a.prog != b.prog {
                return Err(shape(r, "premises must be about the same program"));
            }
            let mut scope = a.scope.clone();
            for (n, d) in &b.scope {
                match scope.iter().find(|(m, _)| m == n) {
                    Some((_, d2)) if d2 != d => {
                        return Err(shape(r, format!("`{n}` has different domains in the premises")))
                    }
                    Some(_) => {}
                    None => scope.push((n.clone(), d.clone())),
                }
            }
            let mut ret = if a.post.ret == "_" { b.post.ret.clone() } else { a.post.ret.clone() };
            let clash = a.post.free_vars().contains(&ret) || b.post.free_vars().contains(&ret);
            if ret != "_" && clash {
                let mut avoid = scope_names(&scope);
                avoid.extend(a.post.body.free_vars());
                avoid.extend(b.post.body.free_vars());
                ret = fresh_name(&ret, &avoid);
            }
            let body = if ret == "_" {
                and2(&a.post.body, &b.post.body)
            } else {
                and2(&a.post.at(&ret), &b.post.at(&ret))
            };
            Claim::Triple(Triple::new(
                scope,
                and2(&a.pre, &b.pre),
                a.prog.clone(),
                PostPred::new(&ret, body),
            ))
        }
        Rule::Instantiate { scope, map } => {
            premises::<1>(r, ps)?;
            let t = want_triple(r, &ps[0])?;
            let Comp::Call(name, args) = &t.prog else {
                return Err(shape(r, "only triples over a call can be instantiated"));
            };
            for (x, e) in map {
                let Some((_, dx)) = t.scope.iter().rev().find(|(n, _)| n == x) else {
                    return Err(shape(r, format!("`{x}` is not quantified by the premise")));
                };
                if e.mentions_state() {
                    return Err(shape(r, format!("substitute for `{x}` depends on the state")));
                }
                e.check(&scope_names(scope), &ctx.schema)?;
                let de = e
                    .infer_domain(scope, &ctx.schema)
                    .ok_or_else(|| Error::NoDomain(e.to_string()))?;
                if !dx.covers(&de) {
                    return Err(shape(r, format!("values of {e} ({de}) fall outside {dx}")));
                }
            }
            for (x, dx) in &t.scope {
                if map.contains_key(x) {
                    continue;
                }
                match scope.iter().rev().find(|(n, _)| n == x) {
                    Some((_, d)) if !dx.covers(d) => {
                        return Err(shape(r, format!("domain of `{x}` widened from {dx} to {d}")))
                    }
                    Some(_) => {}
                    None => return Err(shape(r, format!("`{x}` is neither substituted nor kept"))),
                }
            }
            Claim::Triple(Triple::new(
                scope.clone(),
                t.pre.subst(map),
                Comp::Call(name.clone(), args.iter().map(|a| a.subst(map)).collect()),
                t.post.subst(map),
            ))
        }
        Rule::Unfold { program } => {
            premises::<1>(r, ps)?;
            let t = want_triple(r, &ps[0])?;
            let def = ctx
                .programs
                .get(program)
                .ok_or_else(|| Error::UnknownProgram(program.clone()))?;
            if t.prog != def.body {
                return Err(shape(r, format!("premise is not about the body of `{program}`")));
            }
            let names = scope_names(&t.scope);
            for (p, _) in &def.params {
                if !names.contains(p) {
                    return Err(shape(r, format!("parameter `{p}` is not quantified")));
                }
            }
            Claim::Triple(Triple::new(
                t.scope.clone(),
                t.pre.clone(),
                Comp::Call(
                    program.clone(),
                    def.params.iter().map(|(p, _)| Expr::Var(p.clone())).collect(),
                ),
                t.post.clone(),
            ))
        }
        Rule::AssumeAnnotation { frame, ann } => {
            premises::<1>(r, ps)?;
            let t = want_triple(r, &ps[0])?;
            implies(&and2(frame, ann), &t.pre, &t.scope, ctx)?;
            Claim::AnnTriple(AnnTriple::new(
                t.scope.clone(),
                frame.clone(),
                lift(ann.clone(), t.prog.clone()),
                t.post.clone(),
            ))
        }
        Rule::UseAnnotation => {
            premises::<2>(r, ps)?;
            let (oscope, opre, prog, oann) = want_ordering(r, &ps[0])?;
            let at = want_ann_triple(r, &ps[1])?;
            if oann.normalize() != at.ann.normalize() {
                return Err(shape(r, "the ordering and the annotated triple use different annotations"));
            }
            if oscope != &at.scope {
                return Err(shape(r, "premises quantify over different scopes"));
            }
            implies(&at.pre, opre, &at.scope, ctx)?;
            Claim::Triple(Triple::new(
                at.scope.clone(),
                at.pre.clone(),
                prog.clone(),
                at.post.clone(),
            ))
        }
        Rule::WeakenAnnotation { scope, from, to } => {
            premises::<0>(r, ps)?;
            let v = pointwise_entails(from, to, scope, ctx)?;
            if !v.holds() {
                return Err(Error::SideCondition(format!(
                    "annotations are not pointwise ordered: {}",
                    v.display(&ctx.schema)
                )));
            }
            Claim::Refines {
                scope: scope.clone(),
                stronger: from.clone(),
                weaker: to.clone(),
            }
        }
        Rule::OrderTrans => {
            premises::<2>(r, ps)?;
            let (scope, pre, prog, ann) = want_ordering(r, &ps[0])?;
            let Claim::Refines {
                scope: rscope,
                stronger,
                weaker,
            } = &ps[1].claim
            else {
                return Err(shape(r, "second premise must be a refinement"));
            };
            if stronger != ann || rscope != scope {
                return Err(shape(r, "refinement does not start from the ordered annotation"));
            }
            Claim::Ordering {
                scope: scope.clone(),
                pre: pre.clone(),
                prog: prog.clone(),
                ann: weaker.clone(),
            }
        }
        Rule::MergeAdherence => {
            premises::<2>(r, ps)?;
            let (s1, p, f, a) = want_ordering(r, &ps[0])?;
            let (s2, q, g, b) = want_ordering(r, &ps[1])?;
            if f != g || s1 != s2 {
                return Err(shape(r, "orderings are about different programs or scopes"));
            }
            Claim::Ordering {
                scope: s1.clone(),
                pre: and2(p, q),
                prog: f.clone(),
                ann: merge(a, b)?,
            }
        }
        Rule::StrongSplit { frame, ann, binder } => {
            premises::<2>(r, ps)?;
            let right = want_ann_triple(r, &ps[0])?;
            let left = want_triple(r, &ps[1])?;
            let b = check_continuation_scope(r, &left.scope, &left.prog, binder, &right.scope, &left.post, ctx)?;
            implies(&b, &right.pre, &right.scope, ctx)?;
            implies(&and2(frame, ann), &left.pre, &left.scope, ctx)?;
            Claim::AnnTriple(AnnTriple::new(
                left.scope.clone(),
                frame.clone(),
                bind_a(lift(ann.clone(), left.prog.clone()), binder, &right.ann),
                right.post.clone(),
            ))
        }
        Rule::StrongIf { cond, pre } => {
            premises::<2>(r, ps)?;
            let t = want_ann_triple(r, &ps[0])?;
            let e = want_ann_triple(r, &ps[1])?;
            if t.scope != e.scope || t.post != e.post {
                return Err(shape(r, "branches must share scope and postcondition"));
            }
            implies(&and2(pre, &Pred::Atom(cond.clone())), &t.pre, &t.scope, ctx)?;
            implies(&and2(pre, &negate_cond(cond)), &e.pre, &e.scope, ctx)?;
            Claim::AnnTriple(AnnTriple::new(
                t.scope.clone(),
                pre.clone(),
                AnnComp::IfA(cond.clone(), Box::new(t.ann.clone()), Box::new(e.ann.clone())),
                t.post.clone(),
            ))
        }
        Rule::AnnotatingBind { binder } => {
            premises::<2>(r, ps)?;
            let Claim::Annotator { triple: right, ann: g } = &ps[0].claim else {
                return Err(shape(r, "first premise must be an annotator"));
            };
            let left = want_triple(r, &ps[1])?;
            let b = check_continuation_scope(r, &left.scope, &left.prog, binder, &right.scope, &left.post, ctx)?;
            implies(&b, &right.pre, &right.scope, ctx)?;
            Claim::Annotator {
                triple: Triple::new(
                    left.scope.clone(),
                    left.pre.clone(),
                    bind_of(&left.prog, binder, &right.prog),
                    right.post.clone(),
                ),
                ann: bind_a(lift(left.pre.clone(), left.prog.clone()), binder, g),
            }
        }
        Rule::AnnotateStep => {
            premises::<1>(r, ps)?;
            let t = want_triple(r, &ps[0])?;
            Claim::Annotator {
                triple: t.clone(),
                ann: lift(t.pre.clone(), t.prog.clone()),
            }
        }
        Rule::AnnotatingIf { cond, pre } => {
            premises::<2>(r, ps)?;
            let (Claim::Annotator { triple: t, ann: ta }, Claim::Annotator { triple: e, ann: ea }) =
                (&ps[0].claim, &ps[1].claim)
            else {
                return Err(shape(r, "premises must be annotators"));
            };
            if t.scope != e.scope || t.post != e.post {
                return Err(shape(r, "branches must share scope and postcondition"));
            }
            implies(&and2(pre, &Pred::Atom(cond.clone())), &t.pre, &t.scope, ctx)?;
            implies(&and2(pre, &negate_cond(cond)), &e.pre, &e.scope, ctx)?;
            Claim::Annotator {
                triple: Triple::new(
                    t.scope.clone(),
                    pre.clone(),
                    Comp::If(cond.clone(), Box::new(t.prog.clone()), Box::new(e.prog.clone())),
                    t.post.clone(),
                ),
                ann: AnnComp::IfA(cond.clone(), Box::new(ta.clone()), Box::new(ea.clone())),
            }
        }
        Rule::StrongAnnotateStep { frame, ann, out } => {
            premises::<1>(r, ps)?;
            let t = want_triple(r, &ps[0])?;
            let fa = and2(frame, ann);
            implies(&fa, &t.pre, &t.scope, ctx)?;
            if out != &t.pre {
                implies(&fa, out, &t.scope, ctx)?;
            }
            Claim::StrongAnnotator {
                triple: AnnTriple::new(
                    t.scope.clone(),
                    frame.clone(),
                    lift(ann.clone(), t.prog.clone()),
                    t.post.clone(),
                ),
                out: lift(out.clone(), t.prog.clone()),
            }
        }
        Rule::StrongAnnotatingBind {
            frame,
            ann,
            out,
            binder,
        } => {
            premises::<2>(r, ps)?;
            let Claim::StrongAnnotator {
                triple: right,
                out: g_out,
            } = &ps[0].claim
            else {
                return Err(shape(r, "first premise must be a strong annotator"));
            };
            let left = want_triple(r, &ps[1])?;
            let b = check_continuation_scope(r, &left.scope, &left.prog, binder, &right.scope, &left.post, ctx)?;
            implies(&b, &right.pre, &right.scope, ctx)?;
            let fa = and2(frame, ann);
            implies(&fa, &left.pre, &left.scope, ctx)?;
            if out != &left.pre {
                implies(&fa, out, &left.scope, ctx)?;
            }
            Claim::StrongAnnotator {
                triple: AnnTriple::new(
                    left.scope.clone(),
                    frame.clone(),
                    bind_a(lift(ann.clone(), left.prog.clone()), binder, &right.ann),
                    right.post.clone(),
                ),
                out: bind_a(lift(out.clone(), left.prog.clone()), binder, g_out),
            }
        }
        Rule::StrongAnnotatingIf { cond, pre } => {
            premises::<2>(r, ps)?;
            let (
                Claim::StrongAnnotator { triple: t, out: to },
                Claim::StrongAnnotator { triple: e, out: eo },
            ) = (&ps[0].claim, &ps[1].claim)
            else {
                return Err(shape(r, "premises must be strong annotators"));
            };
            if t.scope != e.scope || t.post != e.post {
                return Err(shape(r, "branches must share scope and postcondition"));
            }
            implies(&and2(pre, &Pred::Atom(cond.clone())), &t.pre, &t.scope, ctx)?;
            implies(&and2(pre, &negate_cond(cond)), &e.pre, &e.scope, ctx)?;
            Claim::StrongAnnotator {
                triple: AnnTriple::new(
                    t.scope.clone(),
                    pre.clone(),
                    AnnComp::IfA(cond.clone(), Box::new(t.ann.clone()), Box::new(e.ann.clone())),
                    t.post.clone(),
                ),
                out: AnnComp::IfA(cond.clone(), Box::new(to.clone()), Box::new(eo.clone())),
            }
        }
        Rule::AnnotatorTriple | Rule::AnnotatorOrdering => {
            premises::<1>(r, ps)?;
            let Claim::Annotator { triple, ann } = &ps[0].claim else {
                return Err(shape(r, "premise must be an annotator"));
            };
            if matches!(r, Rule::AnnotatorTriple) {
                Claim::Triple(triple.clone())
            } else {
                Claim::Ordering {
                    scope: triple.scope.clone(),
                    pre: triple.pre.clone(),
                    prog: triple.prog.clone(),
                    ann: ann.clone(),
                }
            }
        }
        Rule::StrongAnnotatorTriple => {
            premises::<1>(r, ps)?;
            let Claim::StrongAnnotator { triple, .. } = &ps[0].claim else {
                return Err(shape(r, "premise must be a strong annotator"));
            };
            Claim::AnnTriple(triple.clone())
        }
    };
    claim.check_wf(ctx)?;
    Ok(Judgement {
        claim,
        evidence: Evidence::ByRule {
            rule,
            premises: premises_in,
        },
    })
}

/// Helper for the continuation scope of a bind: the head's scope plus the
/// binder at its inferred (or declared) domain.
pub fn continuation_scope(scope: &Scope, head: &Comp, binder: &Binder, ctx: &Ctx) -> Result<Scope> {
    if binder.name == "_" {
        return Ok(scope.clone());
    }
    let d = binder
        .domain_in(head, scope, ctx)
        .ok_or_else(|| Error::NoDomain(binder.name.clone()))?;
    Ok(extend(scope, &binder.name, d))
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Claim::Triple(t) => write!(f, "{t}"),
            Claim::AnnTriple(t) => write!(f, "{t}"),
            Claim::Ordering { pre, prog, ann, .. } => write!(f, "{{{pre}}} {prog} ⊑ {ann}"),
            Claim::Refines {
                stronger, weaker, ..
            } => write!(f, "{stronger} ⊑ {weaker}"),
            Claim::Annotator { triple, ann } => write!(f, "{triple} ⟨{ann}⟩"),
            Claim::StrongAnnotator { triple, out } => write!(f, "{triple} ⟨{out}⟩"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{corpus_ctx, valid_free_annotation, valid_queues_annotation, merged_annotation, new_tcb_body, CorpusParams};
    use crate::soundness::bit_ctx;
    use crate::value::{Domain, Value};

    fn def(name: &str) -> Pred {
        Pred::def(name, vec![])
    }

    fn ctx21() -> (Ctx, Scope) {
        let p = CorpusParams::new(2, 1).unwrap();
        (corpus_ctx(p), vec![("p".into(), p.prio())])
    }

    fn enumerated(claim: Claim, ctx: &Ctx) -> Judgement {
        Judgement::by_enumeration(claim, ctx).unwrap()
    }

    fn bit() -> Pred {
        Pred::atom(Expr::field("b"))
    }

    fn put(v: bool) -> Comp {
        Comp::Put("b".into(), Expr::lit(Value::Bool(v)))
    }

    #[test]
    fn refuted_claims_are_not_judgements() {
        let ctx = bit_ctx();
        let t = Triple::new(vec![], Pred::True, put(false), PostPred::ignoring(bit()));
        assert!(matches!(Judgement::by_enumeration(Claim::Triple(t), &ctx), Err(Error::Refuted(_))));
    }

    #[test]
    fn use_annotation_gives_the_queues_triple() {
        let (ctx, scope) = ctx21();
        let body = new_tcb_body();
        let vf = def("valid_free");
        let vq = PostPred::ignoring(def("valid_queues"));
        let both = Pred::and([def("valid_queues"), vf.clone()]);
        let annotator = Claim::Annotator {
            triple: Triple::new(scope.clone(), vf.clone(), body.clone(), PostPred::ignoring(vf)),
            ann: valid_free_annotation(),
        };
        let at = Claim::AnnTriple(AnnTriple::new(scope.clone(), both.clone(), valid_free_annotation(), vq.clone()));
        let j = apply_rule(Rule::UseAnnotation, vec![enumerated(annotator, &ctx), enumerated(at, &ctx)], &ctx).unwrap();
        assert_eq!(j.claim(), &Claim::Triple(Triple::new(scope, both, body, vq)));
        assert_eq!(j.rule_name(), "use-annotation");
        assert_eq!(j.size(), 3);
        assert!(j.audit(&ctx).unwrap().holds());
        assert_eq!(j.audit_deep(&ctx).unwrap(), None);
    }

    #[test]
    fn merge_adherence_gives_the_merged_ordering() {
        let (ctx, scope) = ctx21();
        let body = new_tcb_body();
        let order = |pre: Pred, ann: AnnComp| Claim::Ordering {
            scope: scope.clone(),
            pre,
            prog: body.clone(),
            ann,
        };
        let l = enumerated(order(def("valid_free"), valid_free_annotation()), &ctx);
        let both = Pred::and([def("valid_queues"), def("valid_free")]);
        let r = enumerated(order(both, valid_queues_annotation()), &ctx);
        let j = apply_rule(Rule::MergeAdherence, vec![l, r], &ctx).unwrap();
        let Claim::Ordering { pre, ann, .. } = j.claim() else { panic!() };
        assert_eq!(pre.normalize(), Pred::and([def("valid_free"), def("valid_queues")]).normalize());
        assert_eq!(ann.normalize(), merged_annotation().normalize());
        assert!(j.audit(&ctx).unwrap().holds());
    }

    #[test]
    fn assume_annotation_with_a_trivial_frame() {
        let ctx = bit_ctx();
        let t = Triple::new(vec![], bit(), put(true), PostPred::ignoring(bit()));
        let rule = Rule::AssumeAnnotation {
            frame: Pred::True,
            ann: bit(),
        };
        let j = apply_rule(rule, vec![enumerated(Claim::Triple(t), &ctx)], &ctx).unwrap();
        let expected = AnnTriple::new(vec![], Pred::True, lift(bit(), put(true)), PostPred::ignoring(bit()));
        assert_eq!(j.as_ann_triple(), Some(&expected));
    }

    #[test]
    fn shape_and_side_condition_errors() {
        let ctx = bit_ctx();
        let t = enumerated(Claim::Triple(Triple::new(vec![], bit(), put(true), PostPred::ignoring(bit()))), &ctx);
        assert!(matches!(apply_rule(Rule::UseAnnotation, vec![t.clone()], &ctx), Err(Error::RuleShape { .. })));
        assert!(matches!(apply_rule(Rule::Conj, vec![t.clone()], &ctx), Err(Error::RuleShape { .. })));
        let weaken = Rule::Weaken { pre: Pred::True };
        assert!(matches!(apply_rule(weaken, vec![t.clone()], &ctx), Err(Error::SideCondition(_))));
        let conseq = Rule::Conseq {
            post: PostPred::ignoring(Pred::False),
        };
        assert!(matches!(apply_rule(conseq, vec![t], &ctx), Err(Error::SideCondition(_))));
    }

    #[test]
    fn wp_split_composes() {
        // {b} x ← gets b; put b (¬x) {¬b}
        let ctx = bit_ctx();
        let mid = PostPred::new("x", Pred::atom(Expr::var("x")));
        let head = Rule::Wp {
            scope: vec![],
            step: Comp::Gets("b".into()),
            post: mid.clone(),
        };
        let left = apply_rule(head, vec![], &ctx).unwrap();
        let left = apply_rule(Rule::Weaken { pre: bit() }, vec![left], &ctx).unwrap();
        let post = PostPred::ignoring(Pred::negate(bit()));
        let step = Comp::Put("b".into(), Expr::Not(Box::new(Expr::var("x"))));
        let scope = vec![("x".to_string(), Domain::Bool)];
        let right = apply_rule(Rule::Wp { scope, step, post }, vec![], &ctx).unwrap();
        let right = apply_rule(Rule::Weaken { pre: mid.at("x") }, vec![right], &ctx).unwrap();
        let j = apply_rule(Rule::WpSplit { binder: Binder::new("x") }, vec![right, left], &ctx).unwrap();
        assert_eq!(j.as_triple().unwrap().pre, bit());
        assert!(j.audit(&ctx).unwrap().holds());
        assert_eq!(j.audit_deep(&ctx).unwrap(), None);
        assert_eq!(j.size(), 5);
    }

    #[test]
    fn continuation_must_quantify_the_binder() {
        let ctx = bit_ctx();
        let left = enumerated(Claim::Triple(Triple::new(vec![], Pred::True, Comp::Gets("b".into()), PostPred::ignoring(Pred::True))), &ctx);
        let right = enumerated(Claim::Triple(Triple::new(vec![], Pred::True, put(true), PostPred::ignoring(bit()))), &ctx);
        let r = apply_rule(Rule::WpSplit { binder: Binder::new("x") }, vec![right, left], &ctx);
        assert!(matches!(r, Err(Error::RuleShape { .. })), "{r:?}");
    }

    #[test]
    fn conj_and_conseq() {
        let ctx = bit_ctx();
        let a = Triple::new(vec![], Pred::True, put(true), PostPred::ignoring(bit()));
        let b = Triple::new(vec![], bit(), put(true), PostPred::new("r", Pred::atom(Expr::eq(Expr::var("r"), Expr::lit(Value::Unit)))));
        let j = apply_rule(
            Rule::Conj,
            vec![enumerated(Claim::Triple(a), &ctx), enumerated(Claim::Triple(b), &ctx)],
            &ctx,
        )
        .unwrap();
        let t = j.as_triple().unwrap();
        assert_eq!(t.pre, Pred::and([Pred::True, bit()]).normalize());
        assert!(j.audit(&ctx).unwrap().holds());
        let weaker = apply_rule(Rule::Conseq { post: PostPred::ignoring(bit()) }, vec![j], &ctx).unwrap();
        assert!(weaker.audit(&ctx).unwrap().holds());
    }
}
