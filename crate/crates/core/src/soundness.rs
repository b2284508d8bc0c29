//! Exhaustive soundness check of the calculus rules over a one-bit state.
//!
//! Premises are decided by enumeration into bitmasks over the rule's free
//! predicate slots. Each distinct conclusion is then derived once, from the
//! first witness whose premises hold, and re-checked by enumeration. The
//! conclusion of every rule below is fixed by its other parameters, so
//! one witness per conclusion covers every derivation.

use std::fmt;

use rayon::prelude::*;

use crate::annot::{AnnComp, AnnTriple};
use crate::comp::{Binder, Comp, ProgramTable};
use crate::ctx::Ctx;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::hoare::{Scope, Triple};
use crate::judgement::{apply_rule, Claim, Judgement, Rule};
use crate::pred::{entails, PostPred, Pred, PredDefs};
use crate::schema::StateSchema;
use crate::value::{Domain, Value};

const BIT: &str = "b";
const RET: &str = "r";

/// The state predicate holding exactly on the states in `mask`
/// (bit 0: `b = false`, bit 1: `b = true`).
pub fn state_pred(mask: u8) -> Pred {
    match mask & 3 {
        0 => Pred::False,
        1 => Pred::negate(Pred::atom(Expr::field(BIT))),
        2 => Pred::atom(Expr::field(BIT)),
        _ => Pred::True,
    }
}

/// The predicate on `(ret, state)` with truth table `table`: bit `2r + s`
/// where `r` is whether the result equals `true`. Tables that ignore the
/// result do not mention it.
pub fn table_pred(table: u8) -> PostPred {
    let lo = table & 3;
    let hi = (table >> 2) & 3;
    if lo == hi {
        return PostPred::ignoring(state_pred(lo));
    }
    let r = Pred::atom(Expr::eq(Expr::var(RET), Expr::lit(Value::Bool(true))));
    let mut terms = Vec::new();
    for (mask, guard) in [(lo, Pred::negate(r.clone())), (hi, r)] {
        match mask {
            0 => {}
            3 => terms.push(guard),
            m => terms.push(Pred::And(vec![guard, state_pred(m)])),
        }
    }
    let body = if terms.len() == 1 {
        terms.pop().unwrap()
    } else {
        Pred::Or(terms)
    };
    PostPred::new(RET, body)
}

fn result_ignoring(table: u8) -> bool {
    table & 3 == (table >> 2) & 3
}

fn bool_lit(b: bool) -> Expr {
    Expr::lit(Value::Bool(b))
}

/// Context over the single field `b: bool`.
pub fn bit_ctx() -> Ctx {
    let schema = StateSchema::new([(BIT, Domain::Bool)]).expect("one boolean field");
    Ctx::new(schema, PredDefs::new(), ProgramTable::new())
}

/// `return true`, `return false`, `gets b`, `put b true`, `put b false`
/// and `select` over each subset of the booleans.
pub fn atoms() -> Vec<Comp> {
    let set = |items: &[bool]| Comp::Select(Expr::SetLit(items.iter().map(|&b| bool_lit(b)).collect()));
    vec![
        Comp::Return(bool_lit(true)),
        Comp::Return(bool_lit(false)),
        Comp::Gets(BIT.into()),
        Comp::Put(BIT.into(), bool_lit(true)),
        Comp::Put(BIT.into(), bool_lit(false)),
        set(&[]),
        set(&[true]),
        set(&[false]),
        set(&[true, false]),
    ]
}

fn atom_domain(c: &Comp) -> Domain {
    match c {
        Comp::Put(..) => Domain::Unit,
        _ => Domain::Bool,
    }
}

/// A chain program with its step count and result domain.
#[derive(Clone, Debug)]
struct Chain {
    prog: Comp,
    steps: usize,
    dom: Domain,
}

/// Right-nested chains of `len` atoms; the binder after step `k` is
/// `{prefix}{start + k}`.
fn chains(atoms: &[Comp], len: usize, prefix: &str, start: usize) -> Vec<Chain> {
    if len == 1 {
        return atoms
            .iter()
            .map(|a| Chain {
                prog: a.clone(),
                steps: 1,
                dom: atom_domain(a),
            })
            .collect();
    }
    let rest = chains(atoms, len - 1, prefix, start + 1);
    let mut out = Vec::new();
    for a in atoms {
        let x = Binder::typed(&format!("{prefix}{start}"), atom_domain(a));
        for r in &rest {
            out.push(Chain {
                prog: Comp::Bind(Box::new(a.clone()), x.clone(), Box::new(r.prog.clone())),
                steps: len,
                dom: r.dom.clone(),
            });
        }
    }
    out
}

fn chains_upto(atoms: &[Comp], max: usize, prefix: &str, start: usize) -> Vec<Chain> {
    (1..=max).flat_map(|n| chains(atoms, n, prefix, start)).collect()
}

/// Every annotation of `c` by state predicates, indexed by the base-4
/// digits of the per-step masks.
fn annotations(c: &Chain) -> Vec<AnnComp> {
    let base = AnnComp::uniform(&c.prog, &Pred::True);
    (0..4usize.pow(c.steps as u32))
        .map(|code| base.map_steps(&mut |i, _| state_pred(((code >> (2 * i)) & 3) as u8)))
        .collect()
}

/// Instances derived and checked for one rule.
#[derive(Clone, Debug, Default)]
pub struct RuleTally {
    pub rule: String,
    /// Distinct conclusions derived.
    pub conclusions: u64,
    /// Applications the rule refused although the premises held.
    pub rejected: u64,
    pub violations: u64,
    pub first_violation: Option<String>,
}

impl RuleTally {
    fn new(rule: &str) -> Self {
        RuleTally {
            rule: rule.into(),
            ..Default::default()
        }
    }

    fn record(&mut self, derived: Result<Judgement>, ctx: &Ctx) -> Result<()> {
        match derived {
            Err(Error::RuleShape { .. } | Error::SideCondition(_)) => self.rejected += 1,
            Err(e) => return Err(e),
            Ok(j) => {
                self.conclusions += 1;
                let v = j.claim().check(ctx)?;
                if !v.holds() {
                    self.violations += 1;
                    if self.first_violation.is_none() {
                        self.first_violation = Some(format!("{}: {}", j.claim(), v.display(&ctx.schema)));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Outcome of the whole suite.
#[derive(Clone, Debug)]
pub struct MetaReport {
    pub depth: usize,
    pub programs: usize,
    pub rules: Vec<RuleTally>,
}

impl MetaReport {
    pub fn violations(&self) -> u64 {
        self.rules.iter().map(|t| t.violations).sum()
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }
}

impl fmt::Display for MetaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "programs up to {} steps: {}", self.depth, self.programs)?;
        for t in &self.rules {
            writeln!(
                f,
                "{:<20} {:>8} conclusions {:>8} rejected {:>3} violations",
                t.rule, t.conclusions, t.rejected, t.violations
            )?;
            if let Some(v) = &t.first_violation {
                writeln!(f, "  first violation: {v}")?;
            }
        }
        Ok(())
    }
}

fn holds(claim: Claim, ctx: &Ctx) -> Result<bool> {
    Ok(claim.check(ctx)?.holds())
}

fn premise(claim: Claim, ctx: &Ctx) -> Result<Judgement> {
    Judgement::by_enumeration(claim, ctx)
}

fn triple(scope: &Scope, pre: Pred, prog: &Comp, post: PostPred) -> Claim {
    Claim::Triple(Triple::new(scope.clone(), pre, prog.clone(), post))
}

/// Per binder domain and postcondition table, a bitmask over midpoints.
type MidMasks = [[u16; 16]; 2];

struct Suite {
    ctx: Ctx,
    atoms: Vec<Comp>,
    depth: usize,
    /// `entail[p][q]`: state predicate `p` entails `q`.
    entail: [[bool; 4]; 4],
}

impl Suite {
    fn new(depth: usize) -> Result<Self> {
        let ctx = bit_ctx();
        let mut entail = [[false; 4]; 4];
        for p in 0..4u8 {
            for q in 0..4u8 {
                entail[p as usize][q as usize] = entails(&state_pred(p), &state_pred(q), &[], &ctx)?.holds();
            }
        }
        Ok(Suite {
            ctx,
            atoms: atoms(),
            depth,
            entail,
        })
    }

    fn cont_scope(dom: &Domain) -> Scope {
        vec![("x1".to_string(), dom.clone())]
    }

    /// `valid[a]`: mask over midpoint tables `m` with `{a} head {m}`.
    fn head_masks(&self, head: &Comp) -> Result<[u16; 4]> {
        let mut out = [0u16; 4];
        for a in 0..4u8 {
            for m in 0..16u8 {
                if holds(triple(&vec![], state_pred(a), head, table_pred(m)), &self.ctx)? {
                    out[a as usize] |= 1 << m;
                }
            }
        }
        Ok(out)
    }

    /// `∀x. {B x} g {C}` ⊢ …, `{A} f {B}` ⊢ `{A} x ← f; g {C}`, with heads
    /// that are atoms or two-step chains, for named and discarded binders.
    fn wp_split(&self) -> Result<RuleTally> {
        let ctx = &self.ctx;
        let mut tally = RuleTally::new("wp-split");
        for head_len in 1..self.depth {
            let conts = chains_upto(&self.atoms, self.depth - head_len, "x", 2);
            // Continuation masks over midpoints, per binder domain; index 2
            // is the discarded binder.
            let mut right: Vec<[Vec<u16>; 3]> = Vec::new();
            for g in &conts {
                let mut per = [vec![0u16; 16], vec![0u16; 16], vec![0u16; 16]];
                for c in 0..16u8 {
                    for m in 0..16u8 {
                        let post = table_pred(c);
                        for (k, dom) in [Domain::Bool, Domain::Unit].iter().enumerate() {
                            let pre = table_pred(m).at("x1");
                            if holds(triple(&Self::cont_scope(dom), pre, &g.prog, post.clone()), ctx)? {
                                per[k][c as usize] |= 1 << m;
                            }
                        }
                        if result_ignoring(m)
                            && holds(triple(&vec![], table_pred(m).body, &g.prog, post), ctx)?
                        {
                            per[2][c as usize] |= 1 << m;
                        }
                    }
                }
                right.push(per);
            }
            for f in chains(&self.atoms, head_len, "y", 1) {
                let left = self.head_masks(&f.prog)?;
                let k = if f.dom == Domain::Unit { 1 } else { 0 };
                for (g, per) in conts.iter().zip(&right) {
                    for a in 0..4u8 {
                        for c in 0..16u8 {
                            for (slot, binder) in [(k, Binder::typed("x1", f.dom.clone())), (2, Binder::wildcard())] {
                                let w = left[a as usize] & per[slot][c as usize];
                                if w == 0 {
                                    continue;
                                }
                                let m = w.trailing_zeros() as u8;
                                let (scope, pre) = if slot == 2 {
                                    (vec![], table_pred(m).body)
                                } else {
                                    (Self::cont_scope(&f.dom), table_pred(m).at("x1"))
                                };
                                let r = premise(triple(&scope, pre, &g.prog, table_pred(c)), ctx)?;
                                let l = premise(triple(&vec![], state_pred(a), &f.prog, table_pred(m)), ctx)?;
                                tally.record(apply_rule(Rule::WpSplit { binder }, vec![r, l], ctx), ctx)?;
                            }
                        }
                    }
                }
            }
        }
        Ok(tally)
    }

    /// `{R ∧ P} f {Q}` ⊢ `∥R∥ {P} f ∥Q∥`.
    fn assume_annotation(&self) -> Result<RuleTally> {
        let ctx = &self.ctx;
        let mut tally = RuleTally::new("assume-annotation");
        for f in chains_upto(&self.atoms, self.depth, "x", 1) {
            let valid = self.head_masks(&f.prog)?;
            for frame in 0..4u8 {
                for ann in 0..4u8 {
                    for q in 0..16u8 {
                        let Some(a) = (0..4u8).find(|&a| {
                            self.entail[(frame & ann) as usize][a as usize] && valid[a as usize] & (1 << q) != 0
                        }) else {
                            continue;
                        };
                        let p = premise(triple(&vec![], state_pred(a), &f.prog, table_pred(q)), ctx)?;
                        let rule = Rule::AssumeAnnotation {
                            frame: state_pred(frame),
                            ann: state_pred(ann),
                        };
                        tally.record(apply_rule(rule, vec![p], ctx), ctx)?;
                    }
                }
            }
        }
        Ok(tally)
    }

    fn ordering(&self, pre: u8, f: &Comp, ann: &AnnComp) -> Claim {
        Claim::Ordering {
            scope: vec![],
            pre: state_pred(pre),
            prog: f.clone(),
            ann: ann.clone(),
        }
    }

    fn order_mask(&self, f: &Comp, ann: &AnnComp) -> Result<u8> {
        let mut mask = 0;
        for p in 0..4u8 {
            if holds(self.ordering(p, f, ann), &self.ctx)? {
                mask |= 1 << p;
            }
        }
        Ok(mask)
    }

    /// `{P₀} f ⊑ F`, `∥P∥ F ∥Q∥` ⊢ `{P} f {Q}`.
    fn use_annotation(&self) -> Result<RuleTally> {
        let ctx = &self.ctx;
        let mut tally = RuleTally::new("use-annotation");
        for f in chains_upto(&self.atoms, self.depth, "x", 1) {
            // First witness (annotation, P₀) per (P, Q).
            let mut witness: [[Option<(usize, u8)>; 16]; 4] = [[None; 16]; 4];
            let anns = annotations(&f);
            for (i, ann) in anns.iter().enumerate() {
                let order = self.order_mask(&f.prog, ann)?;
                for p in 0..4u8 {
                    let Some(p0) = (0..4u8).find(|&p0| order & (1 << p0) != 0 && self.entail[p as usize][p0 as usize])
                    else {
                        continue;
                    };
                    for q in 0..16u8 {
                        if witness[p as usize][q as usize].is_some() {
                            continue;
                        }
                        let at = AnnTriple::new(vec![], state_pred(p), ann.clone(), table_pred(q));
                        if holds(Claim::AnnTriple(at), ctx)? {
                            witness[p as usize][q as usize] = Some((i, p0));
                        }
                    }
                }
            }
            for p in 0..4u8 {
                for q in 0..16u8 {
                    let Some((i, p0)) = witness[p as usize][q as usize] else {
                        continue;
                    };
                    let o = premise(self.ordering(p0, &f.prog, &anns[i]), ctx)?;
                    let at = AnnTriple::new(vec![], state_pred(p), anns[i].clone(), table_pred(q));
                    let at = premise(Claim::AnnTriple(at), ctx)?;
                    tally.record(apply_rule(Rule::UseAnnotation, vec![o, at], ctx), ctx)?;
                }
            }
        }
        Ok(tally)
    }

    /// Per-step entailment ⊢ `F ⊑ G`, over every pair of annotations.
    fn weaken_annotation(&self) -> Result<RuleTally> {
        let ctx = &self.ctx;
        let mut tally = RuleTally::new("weaken-annotation");
        let mut refused = 0;
        for f in chains_upto(&self.atoms, self.depth, "x", 1) {
            let anns = annotations(&f);
            for from in &anns {
                for to in &anns {
                    let rule = Rule::WeakenAnnotation {
                        scope: vec![],
                        from: from.clone(),
                        to: to.clone(),
                    };
                    match apply_rule(rule, vec![], ctx) {
                        // Not a derivation: the pair is not pointwise ordered.
                        Err(Error::SideCondition(_)) => refused += 1,
                        derived => tally.record(derived, ctx)?,
                    }
                }
            }
        }
        debug_assert!(refused > 0);
        Ok(tally)
    }

    /// `{P} f ⊑ F`, `{Q} f ⊑ F'` ⊢ `{P ∧ Q} f ⊑ F ⋈ F'`.
    fn merge_adherence(&self) -> Result<RuleTally> {
        let ctx = &self.ctx;
        let mut tally = RuleTally::new("merge-adherence");
        for f in chains_upto(&self.atoms, self.depth, "x", 1) {
            let mut orders: Vec<(AnnComp, Vec<Judgement>)> = Vec::new();
            for ann in annotations(&f) {
                let mask = self.order_mask(&f.prog, &ann)?;
                let valid = (0..4u8)
                    .filter(|p| mask & (1 << p) != 0)
                    .map(|p| premise(self.ordering(p, &f.prog, &ann), ctx))
                    .collect::<Result<_>>()?;
                orders.push((ann, valid));
            }
            for (_, left) in &orders {
                for (_, right) in &orders {
                    for l in left {
                        for r in right {
                            tally.record(apply_rule(Rule::MergeAdherence, vec![l.clone(), r.clone()], ctx), ctx)?;
                        }
                    }
                }
            }
        }
        Ok(tally)
    }

    /// Continuations of an atomic head with every annotation, and for each
    /// binder domain and postcondition table the mask of midpoints `B`
    /// such that `claim(B, G, C)` holds.
    fn cont_masks(
        &self,
        claim: impl Fn(&Scope, Pred, &Chain, &AnnComp, PostPred) -> Claim,
    ) -> Result<Vec<(Chain, AnnComp, MidMasks)>> {
        let mut out = Vec::new();
        for g in chains_upto(&self.atoms, self.depth - 1, "x", 2) {
            for ann in annotations(&g) {
                let mut masks = [[0u16; 16]; 2];
                for (k, dom) in [Domain::Bool, Domain::Unit].iter().enumerate() {
                    let scope = Self::cont_scope(dom);
                    for c in 0..16u8 {
                        for m in 0..16u8 {
                            if holds(claim(&scope, table_pred(m).at("x1"), &g, &ann, table_pred(c)), &self.ctx)? {
                                masks[k][c as usize] |= 1 << m;
                            }
                        }
                    }
                }
                out.push((g.clone(), ann, masks));
            }
        }
        Ok(out)
    }

    /// `∀x. ∥B x∥ G x ∥C∥`, `{R ∧ P} f {B}` ⊢ `∥R∥ doA x ← {P} f; G x odA ∥C∥`.
    fn strong_split(&self) -> Result<RuleTally> {
        let ctx = &self.ctx;
        let mut tally = RuleTally::new("strong-split");
        let conts = self.cont_masks(|scope, pre, _, ann, post| {
            Claim::AnnTriple(AnnTriple::new(scope.clone(), pre, ann.clone(), post))
        })?;
        for f in &self.atoms {
            let left = self.head_masks(f)?;
            let dom = atom_domain(f);
            let k = if dom == Domain::Unit { 1 } else { 0 };
            for frame in 0..4u8 {
                for ann in 0..4u8 {
                    let a = frame & ann;
                    for (_, g_ann, masks) in &conts {
                        for c in 0..16u8 {
                            let w = left[a as usize] & masks[k][c as usize];
                            if w == 0 {
                                continue;
                            }
                            let m = w.trailing_zeros() as u8;
                            let at = AnnTriple::new(Self::cont_scope(&dom), table_pred(m).at("x1"), g_ann.clone(), table_pred(c));
                            let r = premise(Claim::AnnTriple(at), ctx)?;
                            let l = premise(triple(&vec![], state_pred(a), f, table_pred(m)), ctx)?;
                            let rule = Rule::StrongSplit {
                                frame: state_pred(frame),
                                ann: state_pred(ann),
                                binder: Binder::typed("x1", dom.clone()),
                            };
                            tally.record(apply_rule(rule, vec![r, l], ctx), ctx)?;
                        }
                    }
                }
            }
        }
        Ok(tally)
    }

    /// `∀x. {B x} g x {C} ⟨G x⟩`, `{A} f {B}` ⊢
    /// `{A} x ← f; g x {C} ⟨doA x ← {A} f; G x odA⟩`.
    fn annotating_bind(&self) -> Result<RuleTally> {
        let ctx = &self.ctx;
        let mut tally = RuleTally::new("annotating-bind");
        let annotator = |scope: &Scope, pre: Pred, g: &Chain, ann: &AnnComp, post: PostPred| Claim::Annotator {
            triple: Triple::new(scope.clone(), pre, g.prog.clone(), post),
            ann: ann.clone(),
        };
        let conts = self.cont_masks(annotator)?;
        for f in &self.atoms {
            let left = self.head_masks(f)?;
            let dom = atom_domain(f);
            let k = if dom == Domain::Unit { 1 } else { 0 };
            for a in 0..4u8 {
                for (g, g_ann, masks) in &conts {
                    for c in 0..16u8 {
                        let w = left[a as usize] & masks[k][c as usize];
                        if w == 0 {
                            continue;
                        }
                        let m = w.trailing_zeros() as u8;
                        let scope = Self::cont_scope(&dom);
                        let r = premise(annotator(&scope, table_pred(m).at("x1"), g, g_ann, table_pred(c)), ctx)?;
                        let l = premise(triple(&vec![], state_pred(a), f, table_pred(m)), ctx)?;
                        let rule = Rule::AnnotatingBind {
                            binder: Binder::typed("x1", dom.clone()),
                        };
                        tally.record(apply_rule(rule, vec![r, l], ctx), ctx)?;
                    }
                }
            }
        }
        Ok(tally)
    }
}

/// Runs every rule family over all chain programs of at most `depth` steps.
pub fn run_meta(depth: usize) -> Result<MetaReport> {
    if !(2..=3).contains(&depth) {
        return Err(Error::Invalid(format!("depth must be 2 or 3, got {depth}")));
    }
    let s = Suite::new(depth)?;
    let families: [fn(&Suite) -> Result<RuleTally>; 7] = [
        Suite::wp_split,
        Suite::assume_annotation,
        Suite::use_annotation,
        Suite::weaken_annotation,
        Suite::merge_adherence,
        Suite::strong_split,
        Suite::annotating_bind,
    ];
    let rules = families.par_iter().map(|run| run(&s)).collect::<Result<Vec<_>>>()?;
    let programs = chains_upto(&s.atoms, depth, "x", 1).len();
    Ok(MetaReport { depth, programs, rules })
}

/// Context over `b: bool` and `n: 0..2`.
pub fn wp_ctx() -> Ctx {
    let schema = StateSchema::new([("b", Domain::Bool), ("n", Domain::nat(0, 2))]).expect("two fields");
    Ctx::new(schema, PredDefs::new(), ProgramTable::new())
}

/// Every atomic form over [`wp_ctx`], with the domain of its result.
pub fn wp_forms() -> Vec<(Comp, Domain)> {
    let nat = |k: u32| Expr::lit(Value::Nat(k));
    let b = || Expr::field("b");
    let n = || Expr::field("n");
    let put_n0 = Comp::Put("n".into(), nat(0));
    let put_bf = Comp::Put("b".into(), bool_lit(false));
    vec![
        (Comp::Return(bool_lit(true)), Domain::Bool),
        (Comp::Return(Expr::Not(Box::new(b()))), Domain::Bool),
        (Comp::Return(nat(1)), Domain::nat(0, 2)),
        (Comp::Gets("b".into()), Domain::Bool),
        (Comp::Gets("n".into()), Domain::nat(0, 2)),
        (Comp::Put("b".into(), Expr::Not(Box::new(b()))), Domain::Unit),
        (
            Comp::Put("n".into(), Expr::Mod(Box::new(Expr::Add(Box::new(n()), Box::new(nat(1)))), Box::new(nat(3)))),
            Domain::Unit,
        ),
        (Comp::Select(Expr::SetLit(vec![])), Domain::Bool),
        (Comp::Select(Expr::SetLit(vec![bool_lit(true), bool_lit(false)])), Domain::Bool),
        (Comp::Select(Expr::SetLit(vec![nat(0), nat(2)])), Domain::nat(0, 2)),
        (Comp::Select(Expr::SetLit(vec![n(), nat(0)])), Domain::nat(0, 2)),
        (Comp::Assert(Pred::atom(b())), Domain::Unit),
        (Comp::Assert(Pred::atom(Expr::eq(n(), nat(1)))), Domain::Unit),
        (Comp::If(b(), Box::new(put_n0), Box::new(put_bf)), Domain::Unit),
        (
            Comp::If(Expr::eq(n(), nat(0)), Box::new(Comp::Return(bool_lit(true))), Box::new(Comp::Gets("b".into()))),
            Domain::Bool,
        ),
    ]
}

/// Results of [`wp_suite`].
#[derive(Clone, Debug, Default)]
pub struct WpReport {
    pub forms: usize,
    pub posts: u64,
    /// `{wp c Q} c {Q}` refuted.
    pub unsound: Vec<String>,
    /// Some precondition of a valid triple does not entail the wp.
    pub not_weakest: Vec<String>,
}

impl WpReport {
    pub fn passed(&self) -> bool {
        self.unsound.is_empty() && self.not_weakest.is_empty()
    }
}

impl fmt::Display for WpReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} atomic forms, {} postconditions: {} unsound, {} not weakest",
            self.forms,
            self.posts,
            self.unsound.len(),
            self.not_weakest.len()
        )?;
        for line in self.unsound.iter().chain(&self.not_weakest).take(5) {
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

fn state_minterm(schema: &StateSchema, s: &crate::schema::State) -> Pred {
    Pred::And(
        schema
            .fields()
            .iter()
            .zip(s.values())
            .map(|((name, _), v)| Pred::atom(Expr::eq(Expr::field(name), Expr::lit(v.clone()))))
            .collect(),
    )
}

/// For every atomic form over [`wp_ctx`] and every postcondition over
/// `(ret, state)`, given as a truth table, checks `{wp c Q} c {Q}` and
/// that the weakest valid precondition, computed by running `c` from each
/// state, entails `wp c Q`. Every valid precondition entails that one, so
/// this covers all of them.
pub fn wp_suite() -> Result<WpReport> {
    let ctx = wp_ctx();
    let states = ctx.schema.enumerate_states()?;
    let minterms: Vec<Pred> = states.iter().map(|s| state_minterm(&ctx.schema, s)).collect();
    let forms = wp_forms();
    let per_form = forms
        .par_iter()
        .map(|(c, dom)| -> Result<WpReport> {
            let rets = dom.enumerate()?;
            let cells = rets.len() * states.len();
            let mut out = WpReport::default();
            for table in 0u64..(1 << cells) {
                let bit = |r: &Value, s: &crate::schema::State| {
                    let ri = rets.iter().position(|x| x == r).expect("result in domain");
                    let si = states.iter().position(|x| x == s).expect("state in schema");
                    table & (1 << (ri * states.len() + si)) != 0
                };
                let mut terms = Vec::new();
                for (ri, r) in rets.iter().enumerate() {
                    for (si, m) in minterms.iter().enumerate() {
                        if table & (1 << (ri * states.len() + si)) != 0 {
                            let is_r = Pred::atom(Expr::eq(Expr::var(RET), Expr::lit(r.clone())));
                            terms.push(Pred::And(vec![is_r, m.clone()]));
                        }
                    }
                }
                let post = PostPred::new(RET, Pred::Or(terms));
                let wp = crate::hoare::wp_atomic(c, &post)?;

                let sound = Triple::new(vec![], wp.clone(), c.clone(), post.clone());
                if !crate::hoare::check_triple(&sound, &ctx)?.holds() {
                    out.unsound.push(format!("{c} / table {table:#x}"));
                }
                let mut weakest = Vec::new();
                for (s, m) in states.iter().zip(&minterms) {
                    let ok = match crate::comp::run(c, &crate::expr::Env::new(), s, &ctx) {
                        Err(_) => false,
                        Ok(outs) => outs.iter().all(|o| bit(&o.ret, &o.state)),
                    };
                    if ok {
                        weakest.push(m.clone());
                    }
                }
                if !entails(&Pred::Or(weakest), &wp, &[], &ctx)?.holds() {
                    out.not_weakest.push(format!("{c} / table {table:#x}"));
                }
                out.posts += 1;
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = WpReport {
        forms: forms.len(),
        ..Default::default()
    };
    for r in per_form {
        report.posts += r.posts;
        report.unsound.extend(r.unsound);
        report.not_weakest.extend(r.not_weakest);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_table(t: u8, r: Value, b: bool, ctx: &Ctx) -> bool {
        let post = table_pred(t);
        let s = ctx.schema.state(vec![Value::Bool(b)]).unwrap();
        post.eval(r, &mut crate::expr::Env::new(), &s, ctx).unwrap()
    }

    #[test]
    fn tables_match_their_bits() {
        let ctx = bit_ctx();
        for t in 0..16u8 {
            for r in [false, true] {
                for b in [false, true] {
                    let bit = 2 * r as u8 + b as u8;
                    assert_eq!(eval_table(t, Value::Bool(r), b, &ctx), t & (1 << bit) != 0, "table {t}");
                }
                // A unit result reads as "not true".
                assert_eq!(eval_table(t, Value::Unit, r, &ctx), t & (1 << r as u8) != 0);
            }
        }
    }

    #[test]
    fn chain_counts() {
        let a = atoms();
        assert_eq!(a.len(), 9);
        assert_eq!(chains_upto(&a, 3, "x", 1).len(), 9 + 81 + 729);
        let c = &chains(&a, 2, "x", 1)[0];
        assert_eq!(annotations(c).len(), 16);
    }

    #[test]
    fn depth_two_has_no_violations() {
        let report = run_meta(2).unwrap();
        assert!(report.passed(), "{report}");
        assert!(report.rules.iter().all(|t| t.conclusions > 0), "{report}");
    }
}
