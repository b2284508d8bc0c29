//! Backward verification-condition generation with annotation collection.
//!
//! [`vcg_prove`] walks a program from its last step to its first, computing
//! each step's precondition from the one after it: by substitution for
//! atomic steps, from a registered rule for calls, and by inlining when no
//! rule fits. The preconditions become the collected annotation.
//! [`vcg_strong`] does the same over an existing annotation, assuming each
//! step's stored predicate and dropping whatever it already implies.
//!
//! Every answer comes with a [`Judgement`] assembled from the rules in
//! [`crate::judgement`].

use std::fmt;

use crate::annot::AnnComp;
use crate::comp::Comp;
use crate::ctx::Ctx;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::hoare::{scope_names, Scope, Triple};
use crate::judgement::{apply_rule, continuation_scope, implies, post_implies, Claim, Judgement, Rule};
use crate::pred::{entails, fresh_name, PostPred, Pred};
use crate::verdict::Verdict;

#[derive(Clone, Debug)]
pub struct RuleEntry {
    pub name: String,
    pub head: String,
    judgement: Judgement,
}

impl RuleEntry {
    pub fn triple(&self) -> &Triple {
        self.judgement.as_triple().expect("rules are triples")
    }

    pub fn judgement(&self) -> &Judgement {
        &self.judgement
    }
}

/// Verified triples about named programs, looked up by call head.
#[derive(Clone, Debug, Default)]
pub struct RuleDB {
    entries: Vec<RuleEntry>,
}

impl RuleDB {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `t` with its evidence. The evidence must conclude exactly
    /// `t` (or an annotator whose triple is `t`). A triple about the body of
    /// a program is stored as a triple about the call.
    pub fn register(&mut self, name: &str, t: &Triple, evidence: Judgement, ctx: &Ctx) -> Result<()> {
        let mut j = match evidence.claim() {
            Claim::Triple(e) if e == t => evidence,
            Claim::Annotator { triple, .. } if triple == t => apply_rule(Rule::AnnotatorTriple, vec![evidence], ctx)?,
            other => {
                return Err(Error::Invalid(format!(
                    "evidence for rule `{name}` concludes {other}, not {t}"
                )))
            }
        };
        if !matches!(t.prog, Comp::Call(..)) {
            let program = ctx
                .programs
                .iter()
                .find(|(_, d)| d.body == t.prog)
                .map(|(n, _)| n.clone())
                .ok_or_else(|| Error::Invalid(format!("rule `{name}` is not about a named program")))?;
            j = apply_rule(Rule::Unfold { program }, vec![j], ctx)?;
        }
        let Comp::Call(head, args) = &j.as_triple().expect("triple").prog else {
            unreachable!("unfolded above")
        };
        let mut seen = Vec::new();
        for a in args {
            match a {
                Expr::Var(x) if !seen.contains(x) => seen.push(x.clone()),
                _ => {
                    return Err(Error::Invalid(format!(
                        "rule `{name}`: call arguments must be distinct variables"
                    )))
                }
            }
        }
        self.entries.push(RuleEntry {
            name: name.into(),
            head: head.clone(),
            judgement: j,
        });
        Ok(())
    }

    /// Checks `t` by enumeration and registers it. A triple that does not
    /// hold is rejected with [`Error::Refuted`].
    pub fn register_checked(&mut self, name: &str, t: &Triple, ctx: &Ctx) -> Result<()> {
        let j = Judgement::by_enumeration(Claim::Triple(t.clone()), ctx)?;
        self.register(name, t, j, ctx)
    }

    /// Rules about `head`, most recently registered first.
    pub fn for_head<'a>(&'a self, head: &'a str) -> impl Iterator<Item = &'a RuleEntry> + 'a {
        self.entries.iter().rev().filter(move |e| e.head == head)
    }

    pub fn entries(&self) -> &[RuleEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Obligation {
    /// `pre ⟹ wp` over `scope`.
    Entails { pre: Pred, wp: Pred, scope: Scope },
    Triple(Triple),
}

impl fmt::Display for Obligation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Obligation::Entails { pre, wp, .. } => write!(f, "{pre} ⟹ {wp}"),
            Obligation::Triple(t) => write!(f, "{t}"),
        }
    }
}

pub fn discharge(o: &Obligation, ctx: &Ctx) -> Result<Verdict> {
    match o {
        Obligation::Entails { pre, wp, scope } => entails(pre, wp, scope, ctx),
        Obligation::Triple(t) => crate::hoare::check_triple(t, ctx),
    }
}

/// One step of the backward pass.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepLog {
    /// Nesting depth: 0 for the goal's own steps, deeper for inlined bodies.
    pub depth: usize,
    pub head: Comp,
    pub post: PostPred,
    /// How the precondition was obtained: `wp`, `rule NAME`, `conj(..)`,
    /// `enumeration`, `inline NAME` or `nested`.
    pub method: String,
    /// The computed precondition; the collected annotation of the step.
    pub computed: Pred,
    /// The stored annotation assumed at this step (`true` without one).
    pub assumed: Pred,
    /// What is passed on to the previous step.
    pub propagated: Pred,
    /// Conjuncts of `computed` discharged from `assumed`.
    pub discharged: Vec<Pred>,
}

impl fmt::Display for StepLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:indent$}{} via {}: {}",
            "",
            self.head,
            self.method,
            self.computed,
            indent = 2 * self.depth
        )?;
        if !self.discharged.is_empty() {
            let d: Vec<String> = self.discharged.iter().map(|p| p.to_string()).collect();
            write!(f, " [from annotation: {}; propagated {}]", d.join(", "), self.propagated)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VcgStatus {
    Proved,
    /// The goal's precondition does not imply the computed one.
    Refuted(Verdict),
    /// Some step could not be handled; no claim either way.
    Unresolved(String),
}

#[derive(Clone, Debug)]
pub struct VcgResult {
    pub status: VcgStatus,
    /// The collected annotation (on success).
    pub annotation: Option<AnnComp>,
    /// The backward pass, in processing order (last step first).
    pub log: Vec<StepLog>,
    pub obligations: Vec<(Obligation, Verdict)>,
    /// An annotator for `vcg_prove`, a strong annotator for `vcg_strong`.
    pub judgement: Option<Judgement>,
}

impl VcgResult {
    pub fn proved(&self) -> bool {
        self.status == VcgStatus::Proved
    }

    fn unresolved(e: Error, log: Vec<StepLog>) -> Self {
        VcgResult {
            status: VcgStatus::Unresolved(e.to_string()),
            annotation: None,
            log,
            obligations: vec![],
            judgement: None,
        }
    }
}

/// A goal about `f args` where the arguments are exactly `f`'s parameters
/// becomes the same goal about `f`'s body.
pub fn unfold_goal(t: &Triple, ctx: &Ctx) -> Triple {
    if let Comp::Call(name, args) = &t.prog {
        if let Some(def) = ctx.programs.get(name) {
            let names = scope_names(&t.scope);
            let plain = def.params.len() == args.len()
                && def
                    .params
                    .iter()
                    .zip(args)
                    .all(|((p, _), a)| a == &Expr::Var(p.clone()) && names.contains(p));
            if plain {
                return Triple {
                    prog: def.body.clone(),
                    ..t.clone()
                };
            }
        }
    }
    t.clone()
}

fn binders(c: &Comp, out: &mut Vec<String>) {
    match c {
        Comp::Bind(f, x, g) => {
            binders(f, out);
            if x.name != "_" && !out.contains(&x.name) {
                out.push(x.name.clone());
            }
            binders(g, out);
        }
        Comp::If(_, t, e) => {
            binders(t, out);
            binders(e, out);
        }
        _ => {}
    }
}

fn triple_pre(j: &Judgement) -> &Pred {
    match j.claim() {
        Claim::Triple(t) | Claim::Annotator { triple: t, .. } => &t.pre,
        Claim::AnnTriple(t) | Claim::StrongAnnotator { triple: t, .. } => &t.pre,
        Claim::Ordering { pre, .. } => pre,
        Claim::Refines { .. } => &Pred::True,
    }
}

struct Engine<'a> {
    db: &'a RuleDB,
    ctx: &'a Ctx,
    log: Vec<StepLog>,
    depth: usize,
}

impl<'a> Engine<'a> {
    fn record(&mut self, head: &Comp, post: &PostPred, method: String, computed: &Pred) {
        self.log.push(StepLog {
            depth: self.depth,
            head: head.clone(),
            post: post.clone(),
            method,
            computed: computed.clone(),
            assumed: Pred::True,
            propagated: computed.clone(),
            discharged: vec![],
        });
    }

    /// `{W} c {post}` for a single step `c`.
    fn head_triple(&mut self, c: &Comp, post: &PostPred, scope: &Scope) -> Result<(Judgement, String)> {
        if c.is_atomic() {
            let j = apply_rule(
                Rule::Wp {
                    scope: scope.clone(),
                    step: c.clone(),
                    post: post.clone(),
                },
                vec![],
                self.ctx,
            )?;
            return Ok((j, "wp".into()));
        }
        if let Comp::Call(..) = c {
            return self.resolve_call(c, post, scope, true);
        }
        self.depth += 1;
        let inner = self.prove(c, post, scope);
        self.depth -= 1;
        Ok((apply_rule(Rule::AnnotatorTriple, vec![inner?], self.ctx)?, "nested".into()))
    }

    /// A registered rule instantiated at this call, if it applies.
    fn instantiate(&self, entry: &RuleEntry, args: &[Expr], scope: &Scope) -> Result<Option<Judgement>> {
        let t = entry.triple();
        let Comp::Call(_, params) = &t.prog else {
            unreachable!("registered rules are about calls")
        };
        if params.len() != args.len() {
            return Ok(None);
        }
        let map = params
            .iter()
            .zip(args)
            .map(|(p, a)| match p {
                Expr::Var(x) => (x.clone(), a.clone()),
                _ => unreachable!("checked at registration"),
            })
            .collect();
        let rule = Rule::Instantiate {
            scope: scope.clone(),
            map,
        };
        match apply_rule(rule, vec![entry.judgement.clone()], self.ctx) {
            Ok(j) => Ok(Some(j)),
            Err(Error::RuleShape { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn resolve_call(&mut self, c: &Comp, post: &PostPred, scope: &Scope, split: bool) -> Result<(Judgement, String)> {
        let Comp::Call(name, args) = c else {
            unreachable!("caller matched a call")
        };
        // A fact about the caller's variables alone passes through any call
        // that does not fault; no rule can need less.
        if !post.body.mentions_state() && !post.uses_ret() {
            let t = Triple::new(scope.clone(), post.body.clone(), c.clone(), post.clone());
            if let Ok(j) = Judgement::by_enumeration(Claim::Triple(t), self.ctx) {
                return Ok((j, "enumeration".into()));
            }
        }
        for entry in self.db.for_head(name) {
            let Some(j) = self.instantiate(entry, args, scope)? else {
                continue;
            };
            let t = j.as_triple().expect("triple");
            if post_implies(&t.post, post, c, scope, self.ctx).is_ok() {
                let j = apply_rule(Rule::Conseq { post: post.clone() }, vec![j], self.ctx)?;
                return Ok((j, format!("rule {}", entry.name)));
            }
        }
        let parts = post.body.conjuncts();
        if split && parts.len() > 1 {
            if let Ok(r) = self.resolve_parts(c, post, &parts, scope) {
                return Ok(r);
            }
        }
        self.inline(name, args, post, scope)
    }

    fn resolve_parts(&mut self, c: &Comp, post: &PostPred, parts: &[Pred], scope: &Scope) -> Result<(Judgement, String)> {
        let mut acc: Option<Judgement> = None;
        let mut methods = Vec::new();
        for part in parts {
            let (j, m) = self.resolve_call(c, &PostPred::new(&post.ret, part.clone()), scope, false)?;
            methods.push(m);
            acc = Some(match acc {
                None => j,
                Some(a) => apply_rule(Rule::Conj, vec![a, j], self.ctx)?,
            });
        }
        let j = apply_rule(Rule::Conseq { post: post.clone() }, vec![acc.expect("several parts")], self.ctx)?;
        Ok((j, format!("conj({})", methods.join(", "))))
    }

    /// Proves the call through the callee's body, with the callee's
    /// variables kept apart from the caller's.
    fn inline(&mut self, name: &str, args: &[Expr], post: &PostPred, scope: &Scope) -> Result<(Judgement, String)> {
        let def = self
            .ctx
            .programs
            .get(name)
            .ok_or_else(|| Error::UnknownProgram(name.into()))?;
        if let Some(a) = args.iter().find(|a| a.mentions_state()) {
            return Err(Error::Invalid(format!(
                "no rule for `{name}` and its argument {a} depends on the state"
            )));
        }
        let mut local: Vec<String> = def.params.iter().map(|(p, _)| p.clone()).collect();
        binders(&def.body, &mut local);
        let mut avoid = local.clone();
        avoid.extend(scope_names(scope));
        avoid.extend(post.body.free_vars());
        avoid.push(post.ret.clone());

        let mut inner_scope: Scope = def.params.clone();
        let mut rename = std::collections::BTreeMap::new();
        let mut back = std::collections::BTreeMap::new();
        for (p, a) in def.params.iter().zip(args) {
            back.insert(p.0.clone(), a.clone());
        }
        for v in post.free_vars() {
            let dom = scope
                .iter()
                .rev()
                .find(|(n, _)| n == &v)
                .map(|(_, d)| d.clone())
                .ok_or_else(|| Error::UnboundVar(v.clone()))?;
            if local.contains(&v) {
                let fresh = fresh_name(&v, &avoid);
                avoid.push(fresh.clone());
                rename.insert(v.clone(), Expr::Var(fresh.clone()));
                back.insert(fresh.clone(), Expr::Var(v.clone()));
                inner_scope.push((fresh, dom));
            } else {
                inner_scope.push((v, dom));
            }
        }
        let inner_post = post.subst(&rename);

        self.depth += 1;
        let body = self.prove(&def.body, &inner_post, &inner_scope);
        self.depth -= 1;
        let t = apply_rule(Rule::AnnotatorTriple, vec![body?], self.ctx)?;
        let u = apply_rule(Rule::Unfold { program: name.into() }, vec![t], self.ctx)?;
        let i = apply_rule(
            Rule::Instantiate {
                scope: scope.clone(),
                map: back,
            },
            vec![u],
            self.ctx,
        )?;
        let j = apply_rule(Rule::Conseq { post: post.clone() }, vec![i], self.ctx)?;
        Ok((j, format!("inline {name}")))
    }

    /// An annotator `{W} c {post} ⟨F⟩` with `F` the collected annotation.
    fn prove(&mut self, c: &Comp, post: &PostPred, scope: &Scope) -> Result<Judgement> {
        match c {
            Comp::Bind(f, x, g) => {
                let inner = continuation_scope(scope, f, x, self.ctx)?;
                let jg = self.prove(g, post, &inner)?;
                let mid = PostPred::new(&x.name, triple_pre(&jg).clone());
                let (jf, method) = self.head_triple(f, &mid, scope)?;
                self.record(f, &mid, method, triple_pre(&jf));
                apply_rule(Rule::AnnotatingBind { binder: x.clone() }, vec![jg, jf], self.ctx)
            }
            Comp::If(b, t, e) if !c.is_atomic() => {
                let jt = self.prove(t, post, scope)?;
                let je = self.prove(e, post, scope)?;
                let pre = guarded(b, triple_pre(&jt), triple_pre(&je));
                apply_rule(Rule::AnnotatingIf { cond: b.clone(), pre }, vec![jt, je], self.ctx)
            }
            _ => {
                let (j, method) = self.head_triple(c, post, scope)?;
                self.record(c, post, method, triple_pre(&j));
                apply_rule(Rule::AnnotateStep, vec![j], self.ctx)
            }
        }
    }

    /// Splits `w` into what `assumed` already guarantees and the rest.
    fn prune(&self, w: &Pred, assumed: &Pred, scope: &Scope) -> Result<(Pred, Vec<Pred>)> {
        if assumed.normalize() == Pred::True {
            return Ok((w.clone(), vec![]));
        }
        let mut kept = w.conjuncts();
        let mut dropped = Vec::new();
        let mut i = 0;
        while i < kept.len() {
            let others: Vec<Pred> = kept
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, p)| p.clone())
                .chain([assumed.clone()])
                .collect();
            let premise = Pred::And(others).normalize();
            if implies(&premise, &kept[i], scope, self.ctx).is_ok() {
                dropped.push(kept.remove(i));
            } else {
                i += 1;
            }
        }
        Ok((Pred::And(kept).normalize(), dropped))
    }

    fn strong_step(
        &mut self,
        assumed: &Pred,
        c: &Comp,
        post: &PostPred,
        scope: &Scope,
    ) -> Result<(Judgement, Pred, Pred)> {
        let (jf, method) = self.head_triple(c, post, scope)?;
        let w = triple_pre(&jf).clone();
        let (x, discharged) = self.prune(&w, assumed, scope)?;
        self.log.push(StepLog {
            depth: self.depth,
            head: c.clone(),
            post: post.clone(),
            method,
            computed: w.clone(),
            assumed: assumed.clone(),
            propagated: x.clone(),
            discharged,
        });
        Ok((jf, w, x))
    }

    /// A strong annotator `∥X∥ F ∥post∥ ⟨G⟩`; returns it with `X`.
    fn strong(&mut self, f: &AnnComp, post: &PostPred, scope: &Scope) -> Result<(Judgement, Pred)> {
        match f {
            AnnComp::BindA(head, x, rest) => {
                let AnnComp::Step(p, c) = &**head else {
                    return Err(Error::Invalid(format!(
                        "the head of each annotated bind must be a single step, got {head}"
                    )));
                };
                let inner = continuation_scope(scope, c, x, self.ctx)?;
                let (jr, xr) = self.strong(rest, post, &inner)?;
                let mid = PostPred::new(&x.name, xr);
                let (jf, w, xp) = self.strong_step(p, c, &mid, scope)?;
                let rule = Rule::StrongAnnotatingBind {
                    frame: xp.clone(),
                    ann: p.clone(),
                    out: w,
                    binder: x.clone(),
                };
                Ok((apply_rule(rule, vec![jr, jf], self.ctx)?, xp))
            }
            AnnComp::Step(p, c) => {
                let (jf, w, xp) = self.strong_step(p, c, post, scope)?;
                let rule = Rule::StrongAnnotateStep {
                    frame: xp.clone(),
                    ann: p.clone(),
                    out: w,
                };
                Ok((apply_rule(rule, vec![jf], self.ctx)?, xp))
            }
            AnnComp::IfA(b, t, e) => {
                let (jt, xt) = self.strong(t, post, scope)?;
                let (je, xe) = self.strong(e, post, scope)?;
                let pre = guarded(b, &xt, &xe);
                let rule = Rule::StrongAnnotatingIf {
                    cond: b.clone(),
                    pre: pre.clone(),
                };
                Ok((apply_rule(rule, vec![jt, je], self.ctx)?, pre))
            }
        }
    }
}

fn guarded(b: &Expr, t: &Pred, e: &Pred) -> Pred {
    Pred::and([
        Pred::implies(Pred::atom(b.clone()), t.clone()),
        Pred::implies(Pred::negate(Pred::atom(b.clone())), e.clone()),
    ])
}

fn annotation_of(j: &Judgement) -> Option<AnnComp> {
    match j.claim() {
        Claim::Annotator { ann, .. } => Some(ann.clone()),
        Claim::StrongAnnotator { out, .. } => Some(out.clone()),
        _ => None,
    }
}

/// Closes the pass: `pre ⟹ computed`, then weakens the judgement to `pre`.
fn finish(j: Judgement, pre: &Pred, scope: &Scope, log: Vec<StepLog>, ctx: &Ctx) -> Result<VcgResult> {
    let computed = triple_pre(&j).clone();
    let ob = Obligation::Entails {
        pre: pre.clone(),
        wp: computed.clone(),
        scope: scope.clone(),
    };
    let shortcut = computed.conjuncts().iter().all(|c| pre.conjuncts().contains(c));
    let v = if shortcut {
        Verdict::Holds {
            states: ctx.state_count(),
        }
    } else {
        discharge(&ob, ctx)?
    };
    if !v.holds() {
        return Ok(VcgResult {
            status: VcgStatus::Refuted(v.clone()),
            annotation: None,
            log,
            obligations: vec![(ob, v)],
            judgement: None,
        });
    }
    let j = if &computed == pre {
        j
    } else {
        apply_rule(Rule::Weaken { pre: pre.clone() }, vec![j], ctx)?
    };
    Ok(VcgResult {
        status: VcgStatus::Proved,
        annotation: annotation_of(&j),
        log,
        obligations: vec![(ob, v)],
        judgement: Some(j),
    })
}

/// Proves `{pre} prog {post}` backwards and collects the computed
/// preconditions as an annotation of `prog`.
pub fn vcg_prove(goal: &Triple, db: &RuleDB, ctx: &Ctx) -> Result<VcgResult> {
    goal.check_wf(ctx)?;
    let mut engine = Engine {
        db,
        ctx,
        log: vec![],
        depth: 0,
    };
    match engine.prove(&goal.prog, &goal.post, &goal.scope) {
        Ok(j) => finish(j, &goal.pre, &goal.scope, engine.log, ctx),
        Err(e) => Ok(VcgResult::unresolved(e, engine.log)),
    }
}

/// Proves `∥pre∥ ann ∥post∥`, assuming at each step the predicate `ann`
/// stores there, and collects a fresh annotation of the same program.
pub fn vcg_strong(pre: &Pred, ann: &AnnComp, post: &PostPred, scope: &Scope, db: &RuleDB, ctx: &Ctx) -> Result<VcgResult> {
    let names = scope_names(scope);
    pre.check(&names, &ctx.schema, &ctx.preds)?;
    ann.check_wf(&names, ctx)?;
    let mut engine = Engine {
        db,
        ctx,
        log: vec![],
        depth: 0,
    };
    match engine.strong(ann, post, scope) {
        Ok((j, _)) => finish(j, pre, scope, engine.log, ctx),
        Err(e) => Ok(VcgResult::unresolved(e, engine.log)),
    }
}

/// The plain triple about the goal's program that a successful
/// `vcg_prove` result establishes.
pub fn conclude_triple(r: &VcgResult, ctx: &Ctx) -> Result<Judgement> {
    let j = r
        .judgement
        .clone()
        .ok_or_else(|| Error::Invalid("no proof to conclude from".into()))?;
    apply_rule(Rule::AnnotatorTriple, vec![j], ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annot::{check_annotator, pointwise_entails};
    use crate::corpus::{component_rules, corpus_ctx, corpus_goals, counter, valid_free_annotation, CorpusParams};
    use crate::hoare::Triple;
    use crate::value::Value;

    fn small() -> (Ctx, RuleDB) {
        let p = CorpusParams::SMALL;
        let ctx = corpus_ctx(p);
        let mut db = RuleDB::new();
        for (name, t) in component_rules(p) {
            db.register_checked(&name, &t, &ctx).unwrap();
        }
        (ctx, db)
    }

    fn vf() -> Pred {
        Pred::def("valid_free", vec![])
    }

    #[test]
    fn registered_rules_are_found_by_head() {
        let (_, db) = small();
        let names: Vec<&str> = db.for_head("enqueue_tcb").map(|e| e.name.as_str()).collect();
        assert_eq!(names, ["enqueue_tcb_valid_queues", "enqueue_tcb_valid_free"]);
    }

    #[test]
    fn violated_rule_is_rejected() {
        let ctx = corpus_ctx(CorpusParams::SMALL);
        let t = Triple::new(vec![], Pred::True, Comp::call("alloc", vec![]), PostPred::ignoring(vf()));
        let err = RuleDB::new().register_checked("bogus", &t, &ctx).unwrap_err();
        assert!(matches!(err, Error::Refuted(_)), "{err}");
    }

    #[test]
    fn evidence_must_match_the_rule() {
        let ctx = corpus_ctx(CorpusParams::SMALL);
        let rules = component_rules(CorpusParams::SMALL);
        let j = Judgement::by_enumeration(Claim::Triple(rules[0].1.clone()), &ctx).unwrap();
        let err = RuleDB::new().register("mismatch", &rules[3].1, j, &ctx).unwrap_err();
        assert!(matches!(err, Error::Invalid(_)));
    }

    #[test]
    fn discharge_examples() {
        let (ctx, _) = small();
        let ob = |pre: Pred, wp: Pred| Obligation::Entails { pre, wp, scope: vec![] };
        assert!(discharge(&ob(vf(), vf()), &ctx).unwrap().holds());
        let v = discharge(&ob(Pred::True, vf()), &ctx).unwrap();
        assert!(matches!(v, Verdict::Violated(_)));
        // the first counterexample in canonical order: nothing free, nothing mapped
        let c = v.counterexample().unwrap();
        assert_eq!(ctx.schema.get(&c.state, "ids"), Some(&Value::set([])));

        let alloc_body = ctx.programs.get("alloc").unwrap().body.clone();
        let wp = Engine { db: &RuleDB::new(), ctx: &ctx, log: vec![], depth: 0 }
            .prove(&alloc_body, &PostPred::new("i", Pred::def("valid_free_except", vec![Expr::var("i")])), &vec![])
            .unwrap();
        assert!(discharge(&ob(vf(), triple_pre(&wp).clone()), &ctx).unwrap().holds());
    }

    #[test]
    fn return_needs_nothing() {
        let (ctx, db) = small();
        let zero = Expr::lit(Value::Nat(0));
        let goal = Triple::new(
            vec![],
            Pred::True,
            Comp::Return(zero.clone()),
            PostPred::new("r", Pred::atom(Expr::eq(Expr::var("r"), zero))),
        );
        let r = vcg_prove(&goal, &db, &ctx).unwrap();
        assert!(r.proved());
        let ann = r.annotation.unwrap();
        let step = ann.steps()[0].0.clone();
        assert!(crate::pred::equivalent(&step, &Pred::True, &[], &ctx).unwrap().holds());
    }

    #[test]
    fn counter_annotation() {
        let ctx = counter::ctx();
        let even = Pred::def("even", vec![]);
        let goal = Triple::new(vec![], even.clone(), counter::double_plus(), PostPred::ignoring(even));
        let r = vcg_prove(&goal, &RuleDB::new(), &ctx).unwrap();
        assert!(r.proved());
        let ann = r.annotation.unwrap();
        let expected = counter::expected_annotation();
        assert!(pointwise_entails(&ann, &expected, &[], &ctx).unwrap().holds());
        assert!(pointwise_entails(&expected, &ann, &[], &ctx).unwrap().holds());
    }

    #[test]
    fn valid_free_collection_at_small_size() {
        let (ctx, db) = small();
        let goal = unfold_goal(&corpus_goals(CorpusParams::SMALL)["new_tcb:valid_free"], &ctx);
        let r = vcg_prove(&goal, &db, &ctx).unwrap();
        assert!(r.proved());
        assert_eq!(r.annotation.clone().unwrap().normalize(), valid_free_annotation().normalize());
        assert_eq!(r.log.len(), 5);
        let j = r.judgement.as_ref().unwrap();
        assert!(j.audit(&ctx).unwrap().holds());
        assert_eq!(j.audit_deep(&ctx).unwrap(), None);
        let t = conclude_triple(&r, &ctx).unwrap();
        assert_eq!(t.as_triple().unwrap().prog, goal.prog);
    }

    #[test]
    fn without_rules_calls_are_inlined() {
        let (ctx, _) = small();
        let goal = unfold_goal(&corpus_goals(CorpusParams::SMALL)["new_tcb:valid_free"], &ctx);
        let r = vcg_prove(&goal, &RuleDB::new(), &ctx).unwrap();
        assert!(r.proved(), "{:?}", r.status);
        assert!(r.log.iter().any(|l| l.method == "inline alloc"));
        let ann = r.annotation.unwrap();
        assert!(check_annotator(&goal, &ann, &ctx).unwrap().holds());
    }

    #[test]
    fn alloc_rule_against_inlined_wp() {
        let (ctx, _) = small();
        let alloc = Comp::call("alloc", vec![]);
        let post = PostPred::new("i", Pred::def("valid_free_except", vec![Expr::var("i")]));
        let goal = Triple::new(vec![], vf(), alloc, post);
        let r = vcg_prove(&goal, &RuleDB::new(), &ctx).unwrap();
        assert!(r.proved());
        let inlined = r.log.last().unwrap().computed.clone();
        assert!(entails(&vf(), &inlined, &[], &ctx).unwrap().holds());
        // the converse fails: with no free ids the inlined precondition is
        // vacuous while the pool may still be broken
        let back = entails(&inlined, &vf(), &[], &ctx).unwrap();
        let c = back.counterexample().expect("not inter-entailing");
        assert_eq!(ctx.schema.get(&c.state, "ids"), Some(&Value::set([])));
    }

    #[test]
    fn trivial_annotation_degenerates() {
        let (ctx, db) = small();
        let goal = unfold_goal(&corpus_goals(CorpusParams::SMALL)["new_tcb:valid_free"], &ctx);
        let plain = vcg_prove(&goal, &db, &ctx).unwrap();
        let uniform = AnnComp::uniform(&goal.prog, &Pred::True);
        let strong = vcg_strong(&goal.pre, &uniform, &goal.post, &goal.scope, &db, &ctx).unwrap();
        assert!(strong.proved());
        assert_eq!(strong.annotation, plain.annotation);
        assert!(strong.log.iter().all(|l| l.discharged.is_empty()));
    }

    #[test]
    fn strong_rerun_over_own_output() {
        let (ctx, db) = small();
        let goal = unfold_goal(&corpus_goals(CorpusParams::SMALL)["new_tcb:valid_free"], &ctx);
        let first = vcg_prove(&goal, &db, &ctx).unwrap().annotation.unwrap();
        let again = vcg_strong(&goal.pre, &first, &goal.post, &goal.scope, &db, &ctx).unwrap();
        assert!(again.proved(), "{:?} {:#?}", again.status, again.log);
        let out = again.annotation.unwrap();
        assert!(pointwise_entails(&first, &out, &goal.scope, &ctx).unwrap().holds());
    }

    #[test]
    fn refuted_goal_reports_the_counterexample() {
        let (ctx, db) = small();
        let goal = unfold_goal(&corpus_goals(CorpusParams::SMALL)["new_tcb:valid_queues_alone"], &ctx);
        let r = vcg_prove(&goal, &db, &ctx).unwrap();
        assert!(matches!(r.status, VcgStatus::Refuted(Verdict::Violated(_))), "{:?}", r.status);
        assert!(r.judgement.is_none());
    }

    #[test]
    fn unknown_call_is_unresolved() {
        let (ctx, db) = small();
        let goal = Triple::new(vec![], Pred::True, Comp::call("alloc", vec![]), PostPred::ignoring(vf()));
        let mut bad = goal.clone();
        bad.prog = Comp::Bind(
            Box::new(Comp::Gets("ids".into())),
            crate::comp::Binder::new("ids"),
            Box::new(Comp::call("alloc", vec![Expr::var("ids")])),
        );
        assert!(vcg_prove(&bad, &db, &ctx).is_err());
        let r = vcg_prove(&goal, &db, &ctx).unwrap();
        assert!(!r.proved());
    }
}
