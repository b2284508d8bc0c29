//! The `annot` command line: argument parsing, command dispatch and
//! deterministic reports.
//!
//! Exit codes: 0 everything holds, 1 something is violated (or a proof
//! attempt did not go through), 2 an evaluation faulted, 3 usage, parse or
//! project errors.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::annot::{check_ann_triple, check_annotator, merge, AnnComp, AnnTriple};
use crate::comp::Comp;
use crate::corpus::{corpus_project, CorpusParams};
use crate::error::{Error, Result};
use crate::hoare::{check_triple, Triple};
use crate::judgement::{Claim, Judgement};
use crate::soundness::{run_meta, wp_suite};
use crate::store::diff::diff_annotations;
use crate::store::project::Project;
use crate::vcg::{unfold_goal, vcg_prove, vcg_strong, RuleDB, VcgResult, VcgStatus};
use crate::verdict::Verdict;

pub const USAGE_ERROR: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "annot", version, about = "Check, collect and reuse function annotations")]
pub struct Cli {
    /// Project file, or `corpus` for the bundled example.
    #[arg(long, global = true, default_value = "corpus")]
    pub project: String,
    /// Size of the bundled corpus as `n_ids,n_prios`.
    #[arg(long, global = true)]
    pub params: Option<CorpusParams>,
    /// Re-check every node of derived proofs by enumeration.
    #[arg(long, global = true)]
    pub audit: bool,
    /// Worker threads for enumeration (results do not depend on it).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Where to write the project after storing an annotation; defaults to
    /// the project file itself.
    #[arg(long, global = true)]
    pub save: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    /// One verdict per line.
    Compact,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check goals and rules of the project by enumeration.
    Check {
        /// Goal or rule name; all of them when omitted.
        #[arg(long)]
        triple: Vec<String>,
        /// Check `{P} f {Q} ⟨ANN⟩` instead of the plain triple.
        #[arg(long)]
        ann: Option<String>,
        /// With `--ann`, check `∥P∥ ANN ∥Q∥` instead.
        #[arg(long, requires = "ann")]
        assume: bool,
    },
    /// Prove a goal backwards and collect its annotation.
    Annotate {
        #[arg(long)]
        goal: String,
        /// Store the annotation under this name.
        #[arg(long)]
        out: Option<String>,
    },
    /// Prove a goal assuming a stored annotation and collect a new one.
    Reuse {
        #[arg(long)]
        goal: String,
        #[arg(long)]
        ann: String,
        #[arg(long)]
        out: Option<String>,
    },
    /// Merge two stored annotations of the same program.
    Merge {
        left: String,
        right: String,
        #[arg(long)]
        out: Option<String>,
    },
    /// Per-step differences between two stored annotations.
    Diff { left: String, right: String },
    /// Exhaustive soundness check of the calculus rules.
    Soundness {
        /// Longest program, in steps (2 or 3).
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// Also check wp of every atomic form.
        #[arg(long)]
        wp: bool,
    },
    /// The bundled example.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
}

#[derive(Subcommand, Debug)]
pub enum CorpusAction {
    /// Write the corpus project file (to stdout without `--out`).
    Emit {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the corpus goals and fixtures.
    Verify,
}

/// Report text and exit code of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub report: String,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => USAGE_ERROR,
            };
            return Outcome {
                code,
                report: e.render().to_string(),
            };
        }
    };
    execute(&cli)
}

pub fn execute(cli: &Cli) -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build();
    let result = match pool {
        Ok(pool) => pool.install(|| Session::new(cli).and_then(|mut s| s.dispatch())),
        Err(e) => Err(Error::Invalid(format!("cannot start workers: {e}"))),
    };
    match result {
        Ok(o) => o,
        Err(e) => Outcome {
            code: USAGE_ERROR,
            report: format!("error: {e}\n"),
        },
    }
}

struct Session<'a> {
    cli: &'a Cli,
    project: Project,
    /// The file the project came from, if any.
    file: Option<PathBuf>,
    out: String,
    code: i32,
}

impl<'a> Session<'a> {
    fn new(cli: &'a Cli) -> Result<Self> {
        let (project, file) = if cli.project == "corpus" {
            (corpus_project(cli.params.unwrap_or_default()), None)
        } else {
            if cli.params.is_some() {
                return Err(Error::Invalid("--params only applies to the bundled corpus".into()));
            }
            let path = PathBuf::from(&cli.project);
            (Project::load(&path)?, Some(path))
        };
        Ok(Session {
            cli,
            project,
            file,
            out: String::new(),
            code: 0,
        })
    }

    fn dispatch(&mut self) -> Result<Outcome> {
        match &self.cli.command {
            Command::Check { triple, ann, assume } => self.check(triple, ann.as_deref(), *assume)?,
            Command::Annotate { goal, out } => self.annotate(goal, out.as_deref())?,
            Command::Reuse { goal, ann, out } => self.reuse(goal, ann, out.as_deref())?,
            Command::Merge { left, right, out } => self.merge(left, right, out.as_deref())?,
            Command::Diff { left, right } => self.diff(left, right)?,
            Command::Soundness { depth, wp } => self.soundness(*depth, *wp)?,
            Command::Corpus { action } => match action {
                CorpusAction::Emit { out } => self.emit(out.as_ref())?,
                CorpusAction::Verify => self.verify()?,
            },
        }
        Ok(Outcome {
            code: self.code,
            report: std::mem::take(&mut self.out),
        })
    }

    fn compact(&self) -> bool {
        self.cli.format == Format::Compact
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.out.push_str(s.as_ref());
        self.out.push('\n');
    }

    fn worst(&mut self, code: i32) {
        self.code = self.code.max(code);
    }

    fn verdict(&mut self, name: &str, v: &Verdict) {
        self.worst(v.code());
        let line = if self.compact() {
            let label = match v {
                Verdict::Holds { states } => format!("holds {states}"),
                Verdict::Violated(_) => "violated".into(),
                Verdict::Fault(_) => "fault".into(),
            };
            format!("{name} {label}")
        } else {
            format!("{name}: {}", v.display(&self.project.ctx.schema))
        };
        self.line(line);
    }

    fn triple(&self, name: &str) -> Result<Triple> {
        if let Some(t) = self.project.goals.get(name) {
            return Ok(t.clone());
        }
        self.project
            .rules
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t.clone())
            .ok_or_else(|| Error::Invalid(format!("no goal or rule named `{name}`")))
    }

    fn annotation(&self, name: &str) -> Result<(String, AnnComp)> {
        self.project
            .annotations
            .get(name)
            .map(|s| (s.program.clone(), s.ann.clone()))
            .ok_or_else(|| Error::Invalid(format!("no stored annotation named `{name}`")))
    }

    fn check(&mut self, names: &[String], ann: Option<&str>, assume: bool) -> Result<()> {
        let names: Vec<String> = if names.is_empty() {
            let rules = self.project.rules.iter().map(|(n, _)| n.clone());
            rules.chain(self.project.goals.keys().cloned()).collect()
        } else {
            names.to_vec()
        };
        let ctx = self.project.ctx.clone();
        for name in names {
            let t = self.triple(&name)?;
            let v = match ann {
                None => check_triple(&t, &ctx)?,
                Some(a) => {
                    let (_, a) = self.annotation(a)?;
                    let t = unfold_goal(&t, &ctx);
                    if assume {
                        check_ann_triple(&AnnTriple::new(t.scope, t.pre, a, t.post), &ctx)?
                    } else {
                        check_annotator(&t, &a, &ctx)?
                    }
                }
            };
            self.verdict(&name, &v);
        }
        Ok(())
    }

    fn rule_db(&self) -> Result<RuleDB> {
        let mut db = RuleDB::new();
        for (name, t) in &self.project.rules {
            db.register_checked(name, t, &self.project.ctx)?;
        }
        Ok(db)
    }

    fn program_of(t: &Triple) -> Result<String> {
        match &t.prog {
            Comp::Call(name, _) => Ok(name.clone()),
            other => Err(Error::Invalid(format!("goal is not about a named program: {other}"))),
        }
    }

    fn vcg_report(&mut self, name: &str, r: &VcgResult) -> Result<()> {
        let status = match &r.status {
            VcgStatus::Proved => {
                self.worst(0);
                "proved".to_string()
            }
            VcgStatus::Refuted(v) => {
                self.worst(v.code().max(1));
                format!("refuted: {}", v.display(&self.project.ctx.schema))
            }
            VcgStatus::Unresolved(why) => {
                self.worst(1);
                format!("unresolved: {why}")
            }
        };
        if self.compact() {
            let word = status.split(':').next().unwrap_or_default().to_string();
            self.line(format!("{name} {word}"));
        } else {
            self.line(format!("goal {name}"));
            for step in &r.log {
                self.line(format!("  {step}"));
            }
            for (o, v) in &r.obligations {
                let v = v.display(&self.project.ctx.schema).to_string();
                self.line(format!("  obligation {o}: {v}"));
            }
            self.line(format!("status: {status}"));
            if let Some(a) = &r.annotation {
                self.line(format!("annotation: {a}"));
            }
        }
        if self.cli.audit {
            if let Some(j) = &r.judgement {
                self.audit(j)?;
            }
        }
        Ok(())
    }

    fn audit(&mut self, j: &Judgement) -> Result<()> {
        match j.audit_deep(&self.project.ctx)? {
            None => self.line(format!("audit: {} nodes re-checked, all hold", j.size())),
            Some((rule, v)) => {
                self.worst(v.code().max(1));
                let v = v.display(&self.project.ctx.schema).to_string();
                self.line(format!("audit: conclusion of {rule} fails: {v}"));
            }
        }
        Ok(())
    }

    fn annotate(&mut self, goal: &str, out: Option<&str>) -> Result<()> {
        let t = self.triple(goal)?;
        let program = Self::program_of(&t)?;
        let db = self.rule_db()?;
        let r = vcg_prove(&unfold_goal(&t, &self.project.ctx), &db, &self.project.ctx)?;
        self.vcg_report(goal, &r)?;
        self.store(out, &program, r.annotation.as_ref())
    }

    fn reuse(&mut self, goal: &str, ann: &str, out: Option<&str>) -> Result<()> {
        let t = self.triple(goal)?;
        let program = Self::program_of(&t)?;
        let (stored_for, a) = self.annotation(ann)?;
        if stored_for != program {
            return Err(Error::Invalid(format!("`{ann}` annotates `{stored_for}`, not `{program}`")));
        }
        let db = self.rule_db()?;
        let r = vcg_strong(&t.pre, &a, &t.post, &t.scope, &db, &self.project.ctx)?;
        self.vcg_report(goal, &r)?;
        self.store(out, &program, r.annotation.as_ref())
    }

    fn merge(&mut self, left: &str, right: &str, out: Option<&str>) -> Result<()> {
        let (pl, l) = self.annotation(left)?;
        let (pr, r) = self.annotation(right)?;
        if pl != pr {
            return Err(Error::Invalid(format!("`{left}` annotates `{pl}` but `{right}` annotates `{pr}`")));
        }
        let m = merge(&l, &r)?;
        self.line(format!("merged: {}", m.normalize()));
        self.store(out, &pl, Some(&m))
    }

    /// Stores `ann` under `name` when both are given, then saves the project.
    fn store(&mut self, name: Option<&str>, program: &str, ann: Option<&AnnComp>) -> Result<()> {
        let (Some(name), Some(ann)) = (name, ann) else {
            return Ok(());
        };
        self.project.store(name, program, ann)?;
        match self.cli.save.clone().or_else(|| self.file.clone()) {
            Some(path) => {
                self.project.save(&path)?;
                self.line(format!("stored {name} in {}", path.display()));
            }
            None => self.line(format!("stored {name} (bundled project, not saved; pass --save)")),
        }
        Ok(())
    }

    fn diff(&mut self, left: &str, right: &str) -> Result<()> {
        let (_, l) = self.annotation(left)?;
        let (_, r) = self.annotation(right)?;
        let d = diff_annotations(&l, &r)?;
        if self.compact() {
            self.line(format!("{left} {right} {} steps differ", d.steps.len()));
        } else {
            let text = d.to_string();
            self.out.push_str(&text);
        }
        if !d.is_empty() {
            self.worst(1);
        }
        Ok(())
    }

    fn soundness(&mut self, depth: usize, wp: bool) -> Result<()> {
        let meta = run_meta(depth)?;
        if self.compact() {
            for t in &meta.rules {
                self.line(format!("{} {} {}", t.rule, t.conclusions, t.violations));
            }
        } else {
            let text = meta.to_string();
            self.out.push_str(&text);
        }
        if !meta.passed() {
            self.worst(1);
        }
        if wp {
            let r = wp_suite()?;
            let text = r.to_string();
            self.out.push_str(&text);
            if !r.passed() {
                self.worst(1);
            }
        }
        Ok(())
    }

    fn emit(&mut self, out: Option<&PathBuf>) -> Result<()> {
        match out {
            Some(path) => {
                self.project.save(path)?;
                self.line(format!("wrote {}", path.display()));
            }
            None => {
                let text = self.project.to_text();
                self.out.push_str(&text);
            }
        }
        Ok(())
    }

    /// Every corpus goal has its expected verdict and every stored fixture
    /// is an annotation its proof would justify.
    fn verify(&mut self) -> Result<()> {
        let ctx = self.project.ctx.clone();
        let goals = self.project.goals.clone();
        let mut report = String::new();
        let mut failed = false;
        // with a single priority every queue is the same queue, so the
        // invariant alone suffices and nothing is expected of that goal
        let one_prio = self.cli.params.is_some_and(|p| p.n_prios < 2);
        for (name, t) in &goals {
            let v = check_triple(t, &ctx)?;
            let necessity = name.ends_with("_alone");
            let mark = if necessity && one_prio {
                "--  "
            } else if v.holds() != necessity {
                "ok  "
            } else {
                failed = true;
                "FAIL"
            };
            let _ = writeln!(report, "{mark} {name}: {}", v.display(&ctx.schema));
        }
        let stored = |n: &str| self.project.annotations.get(n).map(|s| s.ann.clone());
        let vf_goal = goals.get("new_tcb:valid_free").map(|t| unfold_goal(t, &ctx));
        let vq_goal = goals.get("new_tcb:valid_queues").map(|t| unfold_goal(t, &ctx));
        let (Some(vf), Some(vq)) = (vf_goal, vq_goal) else {
            return Err(Error::Invalid("not the corpus project".into()));
        };
        let (Some(f3), Some(f5), Some(f6)) = (
            stored("new_tcb_valid_free_ann"),
            stored("new_tcb_valid_queues_ann"),
            stored("new_tcb_merged_ann"),
        ) else {
            return Err(Error::Invalid("corpus fixtures are missing".into()));
        };
        let claims = [
            ("valid_free annotator", Claim::Annotator { triple: vf.clone(), ann: f3.clone() }),
            (
                "valid_queues strong annotator",
                Claim::StrongAnnotator {
                    triple: AnnTriple::new(vq.scope.clone(), vq.pre.clone(), f3, vq.post.clone()),
                    out: f5,
                },
            ),
            (
                "merged ordering",
                Claim::Ordering {
                    scope: vq.scope.clone(),
                    pre: vq.pre.clone(),
                    prog: vq.prog.clone(),
                    ann: f6,
                },
            ),
        ];
        for (label, claim) in claims {
            let v = claim.check(&ctx)?;
            failed |= !v.holds();
            let _ = writeln!(
                report,
                "{} {label}: {}",
                if v.holds() { "ok  " } else { "FAIL" },
                v.display(&ctx.schema)
            );
        }
        self.out.push_str(&report);
        if failed {
            self.worst(1);
        }
        Ok(())
    }
}
