//! Project files: schema, definitions, rules, goals and stored annotations
//! in one versioned text document.
//!
//! ```text
//! annot-project 1
//! (schema (field D)..)
//! (preds (name (param..) P)..)
//! (programs (name ((param D)..) R c)..)      ; R is a domain or `_`
//! (rules (name (triple ..))..)
//! (annotations (name program A)..)
//! (goals (name (triple ..))..)
//! ```
//!
//! Sections appear in this order; any may be omitted.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::parse;
use super::print;
use super::sexp::read_all;
use crate::annot::AnnComp;
use crate::comp::{ProgramDef, ProgramTable};
use crate::ctx::Ctx;
use crate::error::{Error, Result};
use crate::hoare::{scope_names, Triple};
use crate::pred::{PredDef, PredDefs};
use crate::schema::StateSchema;

pub const HEADER: &str = "annot-project 1";
const SECTIONS: [&str; 6] = ["schema", "preds", "programs", "rules", "annotations", "goals"];

/// An annotation stored for a program, keyed by name in [`Project`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StoredAnn {
    pub program: String,
    pub ann: AnnComp,
}

#[derive(Clone, Debug)]
pub struct Project {
    pub ctx: Ctx,
    /// Registered rules, in registration order.
    pub rules: Vec<(String, Triple)>,
    pub annotations: BTreeMap<String, StoredAnn>,
    pub goals: BTreeMap<String, Triple>,
}

impl PartialEq for Project {
    fn eq(&self, other: &Self) -> bool {
        self.ctx.schema == other.ctx.schema
            && self.ctx.preds == other.ctx.preds
            && self.ctx.programs == other.ctx.programs
            && self.rules == other.rules
            && self.annotations == other.annotations
            && self.goals == other.goals
    }
}

impl Project {
    pub fn empty() -> Project {
        Project::new(Ctx::new(
            StateSchema::new(Vec::<(String, _)>::new()).expect("empty schema"),
            PredDefs::new(),
            ProgramTable::new(),
        ))
    }

    pub fn new(ctx: Ctx) -> Project {
        Project {
            ctx,
            rules: Vec::new(),
            annotations: BTreeMap::new(),
            goals: BTreeMap::new(),
        }
    }

    /// Stores an annotation in canonical (normalized) form.
    pub fn store(&mut self, name: &str, program: &str, ann: &AnnComp) -> Result<()> {
        let stored = StoredAnn {
            program: program.into(),
            ann: ann.normalize(),
        };
        self.check_stored(name, &stored)?;
        self.annotations.insert(name.into(), stored);
        Ok(())
    }

    fn check_stored(&self, name: &str, s: &StoredAnn) -> Result<()> {
        let def = self
            .ctx
            .programs
            .get(&s.program)
            .ok_or_else(|| Error::UnknownProgram(s.program.clone()))?;
        if s.ann.drop_a() != def.body {
            return Err(Error::SkeletonMismatch(format!(
                "annotation `{name}` does not match the body of `{}`",
                s.program
            )));
        }
        s.ann.check_wf(&scope_names(&def.params), &self.ctx)
    }

    /// All cross-references resolve and every annotation fits its program.
    /// Reports every problem found, one per line.
    pub fn validate(&self) -> Result<()> {
        self.ctx.validate()?;
        let mut problems = Vec::new();
        for (name, t) in self.rules.iter().map(|(n, t)| (n, t)).chain(&self.goals) {
            if let Err(e) = t.check_wf(&self.ctx) {
                problems.push(format!("{name}: {e}"));
            }
        }
        for (name, s) in &self.annotations {
            if let Err(e) = self.check_stored(name, s) {
                problems.push(format!("{name}: {e}"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(problems.join("\n")))
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(HEADER);
        out.push('\n');
        let mut section = |name: &str, items: Vec<String>| {
            out.push('(');
            out.push_str(name);
            for item in items {
                out.push_str("\n  ");
                out.push_str(&item);
            }
            out.push_str(")\n");
        };
        section(
            "schema",
            self.ctx
                .schema
                .fields()
                .iter()
                .map(|(n, d)| format!("({n} {d})"))
                .collect(),
        );
        section(
            "preds",
            self.ctx
                .preds
                .iter()
                .map(|(n, def)| format!("({n} ({}) {})", def.params.join(" "), def.body))
                .collect(),
        );
        section(
            "programs",
            self.ctx
                .programs
                .iter()
                .map(|(n, def)| {
                    let mut s = format!("({n} (");
                    for (i, (p, d)) in def.params.iter().enumerate() {
                        if i > 0 {
                            s.push(' ');
                        }
                        let _ = write!(s, "({p} {d})");
                    }
                    s.push_str(") ");
                    match &def.returns {
                        Some(d) => {
                            let _ = write!(s, "{d}");
                        }
                        None => s.push('_'),
                    }
                    let _ = write!(s, " {})", def.body);
                    s
                })
                .collect(),
        );
        let triple = |t: &Triple| print::to_string(t, print::write_triple);
        section(
            "rules",
            self.rules.iter().map(|(n, t)| format!("({n} {})", triple(t))).collect(),
        );
        section(
            "annotations",
            self.annotations
                .iter()
                .map(|(n, s)| format!("({n} {} {})", s.program, s.ann))
                .collect(),
        );
        section(
            "goals",
            self.goals.iter().map(|(n, t)| format!("({n} {})", triple(t))).collect(),
        );
        out
    }

    /// Parses and validates a project.
    pub fn from_text(src: &str) -> Result<Project> {
        let (first, rest) = src.split_once('\n').unwrap_or((src, ""));
        if first.trim_end() != HEADER {
            return Err(Error::Parse {
                line: 1,
                col: 1,
                msg: format!("expected header `{HEADER}`"),
            });
        }
        let forms = read_all(rest, 2)?;
        let mut p = Project::empty();
        let mut schema = Vec::new();
        let mut preds = PredDefs::new();
        let mut programs = ProgramTable::new();
        let mut next = 0;
        for form in &forms {
            let (head, items) = form
                .form()
                .ok_or_else(|| form.pos().error("expected a section"))?;
            let at = SECTIONS
                .iter()
                .position(|s| *s == head)
                .ok_or_else(|| form.pos().error(format!("unknown section `{head}`")))?;
            if at < next {
                return Err(form.pos().error(format!("section `{head}` out of order or repeated")));
            }
            next = at + 1;
            for item in items {
                let xs = item
                    .list()
                    .filter(|xs| !xs.is_empty())
                    .ok_or_else(|| item.pos().error("expected a named entry"))?;
                let name = parse::symbol(&xs[0])?;
                let args = &xs[1..];
                let want = |n: usize| {
                    if args.len() == n {
                        Ok(())
                    } else {
                        Err(item.pos().error(format!("`{head}` entry takes {n} parts after the name")))
                    }
                };
                match head {
                    "schema" => {
                        want(1)?;
                        schema.push((name, parse::domain(&args[0])?));
                    }
                    "preds" => {
                        want(2)?;
                        let params = args[0]
                            .list()
                            .ok_or_else(|| args[0].pos().error("expected a parameter list"))?
                            .iter()
                            .map(parse::symbol)
                            .collect::<Result<_>>()?;
                        preds.insert_def(
                            name,
                            PredDef {
                                params,
                                body: parse::pred(&args[1])?,
                            },
                        );
                    }
                    "programs" => {
                        want(3)?;
                        let params = parse::scope_entries(&args[0])?;
                        let returns = match args[1].atom() {
                            Some("_") => None,
                            _ => Some(parse::domain(&args[1])?),
                        };
                        programs.insert(
                            name,
                            ProgramDef {
                                params,
                                returns,
                                body: parse::comp(&args[2])?,
                            },
                        );
                    }
                    "rules" | "goals" => {
                        want(1)?;
                        let t = parse::triple(&args[0])?;
                        if head == "rules" {
                            p.rules.push((name, t));
                        } else {
                            p.goals.insert(name, t);
                        }
                    }
                    _ => {
                        want(2)?;
                        p.annotations.insert(
                            name,
                            StoredAnn {
                                program: parse::symbol(&args[0])?,
                                ann: parse::ann(&args[1])?,
                            },
                        );
                    }
                }
            }
        }
        let schema = StateSchema::new(schema)?;
        p.ctx = Ctx::new(schema, preds, programs);
        p.validate()?;
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        std::fs::write(path, self.to_text())
            .map_err(|e| Error::Invalid(format!("cannot write {}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Project> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
        Project::from_text(&src)
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{corpus_project, CorpusParams};

    #[test]
    fn corpus_round_trips() {
        let p = corpus_project(CorpusParams::DEFAULT);
        let text = p.to_text();
        let back = Project::from_text(&text).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn save_then_load() {
        let p = corpus_project(CorpusParams::SMALL);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.annot");
        p.save(&path).unwrap();
        assert_eq!(Project::load(&path).unwrap(), p);
    }

    #[test]
    fn empty_project_loads() {
        let text = Project::empty().to_text();
        let p = Project::from_text(&text).unwrap();
        assert_eq!(p, Project::empty());
        assert!(p.ctx.preds.iter().next().is_none());
        assert!(Project::from_text(HEADER).unwrap().rules.is_empty());
    }

    #[test]
    fn undefined_predicate_is_named() {
        let text = format!(
            "{HEADER}\n(schema (b bool))\n(goals (g (triple (scope) (def frob) (return (lit unit)) (post _ true))))\n"
        );
        let err = Project::from_text(&text).unwrap_err();
        assert!(err.to_string().contains("frob"), "{err}");
    }

    #[test]
    fn header_and_section_order_are_enforced() {
        assert!(matches!(
            Project::from_text("annot-project 2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        let swapped = format!("{HEADER}\n(preds)\n(schema (b bool))\n");
        assert!(matches!(Project::from_text(&swapped), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn mismatched_annotation_is_rejected() {
        let mut p = corpus_project(CorpusParams::SMALL);
        let alloc = p.annotations["new_tcb_valid_free_ann"].ann.clone();
        assert!(matches!(p.store("bad", "alloc", &alloc), Err(Error::SkeletonMismatch(_))));
    }
}
