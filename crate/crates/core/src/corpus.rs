//! The tcb allocation example: `new_tcb` and its helpers, the free-pool and
//! scheduler-queue invariants, the component triples, and the expected
//! annotations, over a finite universe sized by [`CorpusParams`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::annot::{lift, AnnComp};
use crate::comp::{Binder, Comp, ProgramDef, ProgramTable};
use crate::ctx::Ctx;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::hoare::{Scope, Triple};
use crate::pred::{PostPred, Pred, PredDefs};
use crate::schema::StateSchema;
use crate::store::Project;
use crate::value::{Domain, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CorpusParams {
    pub n_ids: u32,
    pub n_prios: u32,
}

impl CorpusParams {
    /// Size used for the positive checks.
    pub const DEFAULT: CorpusParams = CorpusParams { n_ids: 3, n_prios: 2 };
    /// Size used for the counterexample search.
    pub const SMALL: CorpusParams = CorpusParams { n_ids: 2, n_prios: 2 };

    pub fn new(n_ids: u32, n_prios: u32) -> Result<Self> {
        if n_ids == 0 || n_prios == 0 {
            return Err(Error::Invalid(format!(
                "corpus needs at least one id and one priority, got {n_ids},{n_prios}"
            )));
        }
        Ok(CorpusParams { n_ids, n_prios })
    }

    pub fn id(&self) -> Domain {
        Domain::id(self.n_ids)
    }

    pub fn prio(&self) -> Domain {
        Domain::nat(0, self.n_prios - 1)
    }

    pub fn tcb(&self) -> Domain {
        Domain::Record(vec![("priority".into(), self.prio())])
    }
}

impl Default for CorpusParams {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl FromStr for CorpusParams {
    type Err = Error;

    /// `"n_ids,n_prios"`
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("expected <n_ids>,<n_prios>, got `{s}`"));
        let (a, b) = s.split_once(',').ok_or_else(bad)?;
        let a = a.trim().parse().map_err(|_| bad())?;
        let b = b.trim().parse().map_err(|_| bad())?;
        CorpusParams::new(a, b)
    }
}

impl fmt::Display for CorpusParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.n_ids, self.n_prios)
    }
}

fn var(x: &str) -> Expr {
    Expr::var(x)
}

fn b(e: Expr) -> Box<Expr> {
    Box::new(e)
}

fn def(name: &str, args: &[&str]) -> Pred {
    Pred::def(name, args.iter().map(|a| var(a)).collect())
}

pub fn corpus_schema(p: CorpusParams) -> StateSchema {
    StateSchema::new([
        ("ids", Domain::set(p.id())),
        ("tcbs", Domain::map(p.id(), p.tcb(), true)),
        ("queues", Domain::map(p.prio(), Domain::seq(p.id(), p.n_ids), false)),
    ])
    .expect("corpus schema is well formed")
}

fn tcb_at_prio_body() -> Pred {
    let tcbs = || Expr::field("tcbs");
    Pred::atom(Expr::And(
        b(Expr::In(b(var("i")), b(Expr::Dom(b(tcbs()))))),
        b(Expr::eq(
            Expr::proj(Expr::The(b(tcbs()), b(var("i"))), "priority"),
            var("p"),
        )),
    ))
}

pub fn corpus_preds(p: CorpusParams) -> PredDefs {
    let mut defs = PredDefs::new();
    let in_ids = |x: &str| Expr::In(b(var(x)), b(Expr::field("ids")));
    let not_in_dom = |x: &str| Expr::NotIn(b(var(x)), b(Expr::Dom(b(Expr::field("tcbs")))));
    defs.insert(
        "valid_id",
        &["i"],
        Pred::atom(Expr::eq(in_ids("i"), not_in_dom("i"))),
    );
    defs.insert(
        "valid_free",
        &[],
        Pred::Forall("id".into(), p.id(), Box::new(def("valid_id", &["id"]))),
    );
    defs.insert(
        "valid_free_except",
        &["i"],
        Pred::and([
            Pred::Forall(
                "id".into(),
                p.id(),
                Box::new(Pred::implies(
                    Pred::negate(Pred::atom(Expr::eq(var("id"), var("i")))),
                    def("valid_id", &["id"]),
                )),
            ),
            Pred::atom(not_in_dom("i")),
            Pred::atom(Expr::NotIn(b(var("i")), b(Expr::field("ids")))),
        ]),
    );
    defs.insert("tcb_at_prio", &["i", "p"], tcb_at_prio_body());
    defs.insert(
        "valid_queues",
        &[],
        Pred::Forall(
            "p".into(),
            p.prio(),
            Box::new(Pred::ForallIn(
                "i".into(),
                Expr::Apply(b(Expr::field("queues")), b(var("p"))),
                Box::new(def("tcb_at_prio", &["i", "p"])),
            )),
        ),
    );
    defs.insert(
        "not_queued",
        &["i"],
        Pred::Forall(
            "p".into(),
            p.prio(),
            Box::new(Pred::atom(Expr::NotIn(
                b(var("i")),
                b(Expr::Apply(b(Expr::field("queues")), b(var("p")))),
            ))),
        ),
    );
    defs
}

fn empty_tcb() -> Value {
    Value::record([("priority", Value::Nat(0))])
}

pub fn new_tcb_body() -> Comp {
    Comp::bind(
        Comp::call("alloc", vec![]),
        "i",
        Comp::bind(
            Comp::call("create_tcb", vec![var("p")]),
            "tcb",
            Comp::seq(
                Comp::call("init_tcb", vec![var("tcb"), var("i")]),
                Comp::seq(
                    Comp::call("enqueue_tcb", vec![var("i"), var("p")]),
                    Comp::Return(var("i")),
                ),
            ),
        ),
    )
}

pub fn corpus_programs(p: CorpusParams) -> ProgramTable {
    let mut t = ProgramTable::new();
    t.insert(
        "new_tcb",
        ProgramDef {
            params: vec![("p".into(), p.prio())],
            returns: Some(p.id()),
            body: new_tcb_body(),
        },
    );
    t.insert(
        "alloc",
        ProgramDef {
            params: vec![],
            returns: Some(p.id()),
            body: Comp::bind(
                Comp::Gets("ids".into()),
                "ids",
                Comp::bind(
                    Comp::Select(var("ids")),
                    "i",
                    Comp::seq(
                        Comp::Put(
                            "ids".into(),
                            Expr::SetMinus(b(var("ids")), b(Expr::SetLit(vec![var("i")]))),
                        ),
                        Comp::Return(var("i")),
                    ),
                ),
            ),
        },
    );
    t.insert(
        "create_tcb",
        ProgramDef {
            params: vec![("p".into(), p.prio())],
            returns: Some(p.tcb()),
            body: Comp::Bind(
                Box::new(Comp::Return(Expr::lit(empty_tcb()))),
                Binder::typed("tcb", p.tcb()),
                Box::new(Comp::Return(Expr::RecUpd(b(var("tcb")), "priority".into(), b(var("p"))))),
            ),
        },
    );
    t.insert(
        "init_tcb",
        ProgramDef {
            params: vec![("tcb".into(), p.tcb()), ("i".into(), p.id())],
            returns: Some(Domain::Unit),
            body: Comp::bind(
                Comp::Gets("tcbs".into()),
                "tcbs",
                Comp::Put(
                    "tcbs".into(),
                    Expr::MapUpd(b(var("tcbs")), b(var("i")), b(var("tcb"))),
                ),
            ),
        },
    );
    t.insert(
        "enqueue_tcb",
        ProgramDef {
            params: vec![("i".into(), p.id()), ("p".into(), p.prio())],
            returns: Some(Domain::Unit),
            body: Comp::bind(
                Comp::Gets("queues".into()),
                "qs",
                Comp::bind(
                    Comp::Return(Expr::Apply(b(var("qs")), b(var("p")))),
                    "q",
                    Comp::Put(
                        "queues".into(),
                        Expr::Assign(
                            b(var("qs")),
                            b(var("p")),
                            b(Expr::Cons(b(var("i")), b(var("q")))),
                        ),
                    ),
                ),
            ),
        },
    );
    t
}

pub fn corpus_ctx(p: CorpusParams) -> Ctx {
    Ctx::new(corpus_schema(p), corpus_preds(p), corpus_programs(p))
}

fn post(body: Pred) -> PostPred {
    PostPred::ignoring(body)
}

fn call(name: &str, args: &[&str]) -> Comp {
    Comp::call(name, args.iter().map(|a| var(a)).collect())
}

fn prio_is(tcb: &str) -> Pred {
    Pred::atom(Expr::eq(Expr::proj(var(tcb), "priority"), var("p")))
}

/// The component triples, in registration order: the four that carry the
/// free pool through `new_tcb`, then the queue facts.
pub fn component_rules(p: CorpusParams) -> Vec<(String, Triple)> {
    let (id, prio, tcb) = (p.id(), p.prio(), p.tcb());
    let vf = || def("valid_free", &[]);
    let vfe = || def("valid_free_except", &["i"]);
    let vq = || def("valid_queues", &[]);
    let sc = |xs: &[(&str, &Domain)]| -> Scope { xs.iter().map(|(n, d)| (n.to_string(), (*d).clone())).collect() };
    vec![
        (
            "alloc_valid_free".into(),
            Triple::new(vec![], vf(), call("alloc", &[]), PostPred::new("i", vfe())),
        ),
        (
            "create_tcb_valid_free_except".into(),
            Triple::new(sc(&[("i", &id), ("p", &prio)]), vfe(), call("create_tcb", &["p"]), post(vfe())),
        ),
        (
            "init_tcb_valid_free".into(),
            Triple::new(sc(&[("tcb", &tcb), ("i", &id)]), vfe(), call("init_tcb", &["tcb", "i"]), post(vf())),
        ),
        (
            "enqueue_tcb_valid_free".into(),
            Triple::new(sc(&[("i", &id), ("p", &prio)]), vf(), call("enqueue_tcb", &["i", "p"]), post(vf())),
        ),
        (
            "enqueue_tcb_valid_queues".into(),
            Triple::new(
                sc(&[("i", &id), ("p", &prio)]),
                Pred::and([vq(), def("tcb_at_prio", &["i", "p"])]),
                call("enqueue_tcb", &["i", "p"]),
                post(vq()),
            ),
        ),
        (
            "init_tcb_valid_queues".into(),
            Triple::new(
                sc(&[("obj", &tcb), ("i", &id)]),
                Pred::and([vq(), def("not_queued", &["i"])]),
                call("init_tcb", &["obj", "i"]),
                post(vq()),
            ),
        ),
        (
            "alloc_valid_queues".into(),
            Triple::new(vec![], vq(), call("alloc", &[]), post(vq())),
        ),
        (
            "create_tcb_valid_queues".into(),
            Triple::new(sc(&[("p", &prio)]), vq(), call("create_tcb", &["p"]), post(vq())),
        ),
        (
            "create_tcb_priority".into(),
            Triple::new(
                sc(&[("p", &prio)]),
                Pred::True,
                call("create_tcb", &["p"]),
                PostPred::new("tcb", prio_is("tcb")),
            ),
        ),
        (
            "init_tcb_tcb_at_prio".into(),
            Triple::new(
                sc(&[("obj", &tcb), ("i", &id), ("p", &prio)]),
                prio_is("obj"),
                call("init_tcb", &["obj", "i"]),
                post(def("tcb_at_prio", &["i", "p"])),
            ),
        ),
    ]
}

/// Top-level claims about `new_tcb p`, keyed by short name.
pub fn corpus_goals(p: CorpusParams) -> BTreeMap<String, Triple> {
    let scope: Scope = vec![("p".into(), p.prio())];
    let new_tcb = call("new_tcb", &["p"]);
    let vf = def("valid_free", &[]);
    let vq = def("valid_queues", &[]);
    let mut goals = BTreeMap::new();
    goals.insert(
        "new_tcb:valid_free".into(),
        Triple::new(scope.clone(), vf.clone(), new_tcb.clone(), post(vf.clone())),
    );
    goals.insert(
        "new_tcb:valid_queues".into(),
        Triple::new(scope.clone(), Pred::and([vq.clone(), vf]), new_tcb.clone(), post(vq.clone())),
    );
    goals.insert(
        "new_tcb:valid_queues_alone".into(),
        Triple::new(scope, vq.clone(), new_tcb, post(vq)),
    );
    goals
}

/// Builds the `new_tcb` annotation from one predicate per step.
fn new_tcb_ann(steps: [Pred; 5]) -> AnnComp {
    let [a, c, i, e, r] = steps;
    AnnComp::bind(
        lift(a, call("alloc", &[])),
        Binder::new("i"),
        AnnComp::bind(
            lift(c, call("create_tcb", &["p"])),
            Binder::new("tcb"),
            AnnComp::bind(
                lift(i, call("init_tcb", &["tcb", "i"])),
                Binder::wildcard(),
                AnnComp::bind(
                    lift(e, call("enqueue_tcb", &["i", "p"])),
                    Binder::wildcard(),
                    lift(r, Comp::Return(var("i"))),
                ),
            ),
        ),
    )
}

/// The annotation left by the proof of `valid_free`.
pub fn valid_free_annotation() -> AnnComp {
    let vf = || def("valid_free", &[]);
    let vfe = || def("valid_free_except", &["i"]);
    new_tcb_ann([vf(), vfe(), vfe(), vf(), vf()])
}

/// The annotation left by the proof of `valid_queues`.
pub fn valid_queues_annotation() -> AnnComp {
    let vq = || def("valid_queues", &[]);
    new_tcb_ann([
        vq(),
        vq(),
        Pred::and([vq(), def("not_queued", &["i"]), prio_is("tcb")]),
        Pred::and([vq(), def("tcb_at_prio", &["i", "p"])]),
        vq(),
    ])
}

/// The combination of the two.
pub fn merged_annotation() -> AnnComp {
    let vf = || def("valid_free", &[]);
    let vfe = || def("valid_free_except", &["i"]);
    let vq = || def("valid_queues", &[]);
    new_tcb_ann([
        Pred::and([vf(), vq()]),
        Pred::and([vfe(), vq()]),
        Pred::and([vfe(), vq(), def("not_queued", &["i"]), prio_is("tcb")]),
        Pred::and([vf(), vq(), def("tcb_at_prio", &["i", "p"])]),
        Pred::and([vf(), vq()]),
    ])
}

/// The corpus as a project, with the fixtures stored under
/// `new_tcb_valid_free_ann`, `new_tcb_valid_queues_ann` and
/// `new_tcb_merged_ann`.
pub fn corpus_project(p: CorpusParams) -> Project {
    let mut proj = Project::new(corpus_ctx(p));
    proj.rules = component_rules(p);
    proj.goals = corpus_goals(p);
    for (name, ann) in [
        ("new_tcb_valid_free_ann", valid_free_annotation()),
        ("new_tcb_valid_queues_ann", valid_queues_annotation()),
        ("new_tcb_merged_ann", merged_annotation()),
    ] {
        proj.store(name, "new_tcb", &ann)
            .expect("fixture matches the program");
    }
    proj
}

/// A one-field counter: `i` ranges over `0..=7` and `i++` wraps.
pub mod counter {
    use super::*;

    pub fn ctx() -> Ctx {
        let schema = StateSchema::new([("i", Domain::nat(0, 7))]).expect("valid schema");
        let parity = |r: u32| {
            Pred::atom(Expr::eq(
                Expr::Mod(b(Expr::field("i")), b(Expr::lit(Value::Nat(2)))),
                Expr::lit(Value::Nat(r)),
            ))
        };
        let mut preds = PredDefs::new();
        preds.insert("even", &[], parity(0));
        preds.insert("odd", &[], parity(1));
        let mut programs = ProgramTable::new();
        programs.insert(
            "double_plus",
            ProgramDef {
                params: vec![],
                returns: Some(Domain::Unit),
                body: double_plus(),
            },
        );
        Ctx::new(schema, preds, programs)
    }

    pub fn incr() -> Comp {
        Comp::Put(
            "i".into(),
            Expr::Mod(
                b(Expr::Add(b(Expr::field("i")), b(Expr::lit(Value::Nat(1))))),
                b(Expr::lit(Value::Nat(8))),
            ),
        )
    }

    pub fn double_plus() -> Comp {
        Comp::seq(incr(), incr())
    }

    /// `doA {even} i++; {odd} i++ odA`
    pub fn expected_annotation() -> AnnComp {
        AnnComp::bind(
            lift(Pred::def("even", vec![]), incr()),
            Binder::wildcard(),
            lift(Pred::def("odd", vec![]), incr()),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comp::Outcome;
    use crate::expr::Env;
    use crate::schema::State;

    fn state(ctx: &Ctx, ids: &[u32], tcbs: &[(u32, u32)], queues: &[&[u32]]) -> State {
        let tcbs = Value::Map(
            tcbs.iter()
                .map(|&(i, pr)| (Value::Id(i), Value::record([("priority", Value::Nat(pr))])))
                .collect(),
        );
        let queues = Value::Map(
            queues
                .iter()
                .enumerate()
                .map(|(p, q)| (Value::Nat(p as u32), Value::Seq(q.iter().map(|&i| Value::Id(i)).collect())))
                .collect(),
        );
        ctx.schema
            .state(vec![Value::ids(ids.iter().copied()), tcbs, queues])
            .unwrap()
    }

    fn holds(ctx: &Ctx, p: &Pred, s: &State) -> bool {
        p.eval(&mut Env::new(), s, ctx).unwrap()
    }

    #[test]
    fn universe_sizes() {
        for (n, k, size) in [(2, 1, 112u128), (2, 2, 1764), (3, 2, 345_600)] {
            let p = CorpusParams::new(n, k).unwrap();
            assert_eq!(corpus_schema(p).universe_size(), size);
        }
    }

    #[test]
    fn params_parse() {
        assert_eq!("3,2".parse::<CorpusParams>().unwrap(), CorpusParams::DEFAULT);
        assert!("0,2".parse::<CorpusParams>().is_err());
        assert!("3".parse::<CorpusParams>().is_err());
    }

    #[test]
    fn definitions_validate() {
        corpus_ctx(CorpusParams::DEFAULT).validate().unwrap();
        counter::ctx().validate().unwrap();
    }

    #[test]
    fn alloc_from_two_free_ids() {
        let ctx = corpus_ctx(CorpusParams::SMALL);
        let s = state(&ctx, &[0, 1], &[], &[&[], &[]]);
        let outs = crate::comp::run(&call("alloc", &[]), &Env::new(), &s, &ctx).unwrap();
        let expected: Vec<Outcome> = vec![
            Outcome { ret: Value::Id(0), state: state(&ctx, &[1], &[], &[&[], &[]]) },
            Outcome { ret: Value::Id(1), state: state(&ctx, &[0], &[], &[&[], &[]]) },
        ];
        assert_eq!(outs.into_iter().collect::<Vec<_>>(), expected);
    }

    #[test]
    fn create_tcb_sets_priority() {
        let ctx = corpus_ctx(CorpusParams::SMALL);
        let s = state(&ctx, &[0], &[], &[&[], &[]]);
        let env = Env::from_pairs([("p", Value::Nat(1))]);
        let outs = crate::comp::run(&call("create_tcb", &["p"]), &env, &s, &ctx).unwrap();
        let expected = Outcome { ret: Value::record([("priority", Value::Nat(1))]), state: s };
        assert_eq!(outs.into_iter().collect::<Vec<_>>(), vec![expected]);
    }

    #[test]
    fn enqueue_prepends() {
        let ctx = corpus_ctx(CorpusParams::SMALL);
        let s = state(&ctx, &[], &[], &[&[], &[1]]);
        let env = Env::from_pairs([("i", Value::Id(0)), ("p", Value::Nat(1))]);
        let outs = crate::comp::run(&call("enqueue_tcb", &["i", "p"]), &env, &s, &ctx).unwrap();
        let after = state(&ctx, &[], &[], &[&[], &[0, 1]]);
        assert_eq!(outs.into_iter().map(|o| o.state).collect::<Vec<_>>(), vec![after]);
    }

    #[test]
    fn predicate_examples() {
        let ctx = corpus_ctx(CorpusParams::SMALL);
        let all_free = state(&ctx, &[0, 1], &[], &[&[], &[]]);
        assert!(holds(&ctx, &def("valid_free", &[]), &all_free));

        let s = state(&ctx, &[1], &[], &[&[], &[]]);
        let vfe0 = Pred::def("valid_free_except", vec![Expr::lit(Value::Id(0))]);
        assert!(holds(&ctx, &vfe0, &s));
        // id 0 is neither free nor mapped, so the pool itself is broken
        assert!(!holds(&ctx, &def("valid_free", &[]), &s));

        let wrong_prio = state(&ctx, &[1], &[(0, 0)], &[&[], &[0]]);
        assert!(!holds(&ctx, &def("valid_queues", &[]), &wrong_prio));
        let right_prio = state(&ctx, &[1], &[(0, 1)], &[&[], &[0]]);
        assert!(holds(&ctx, &def("valid_queues", &[]), &right_prio));
    }

    #[test]
    fn fixtures_fit_new_tcb() {
        for ann in [valid_free_annotation(), valid_queues_annotation(), merged_annotation()] {
            assert_eq!(ann.drop_a(), new_tcb_body());
        }
        assert_eq!(counter::expected_annotation().drop_a(), counter::double_plus());
    }

    #[test]
    fn project_is_valid() {
        let proj = corpus_project(CorpusParams::SMALL);
        proj.validate().unwrap();
        assert_eq!(proj.goals.len(), 3);
    }
}
