//! Per-step comparison of two annotations of the same program.

use std::fmt;

use crate::annot::AnnComp;
use crate::comp::Comp;
use crate::error::{Error, Result};
use crate::pred::Pred;

/// One step whose predicates differ after normalization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepDiff {
    /// Position in program order.
    pub index: usize,
    pub step: Comp,
    pub left: Pred,
    pub right: Pred,
    /// Conjuncts only in the right-hand annotation.
    pub added: Vec<Pred>,
    /// Conjuncts only in the left-hand annotation.
    pub removed: Vec<Pred>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DiffReport {
    pub steps: Vec<StepDiff>,
}

impl DiffReport {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

pub fn diff_annotations(f: &AnnComp, g: &AnnComp) -> Result<DiffReport> {
    if f.drop_a() != g.drop_a() {
        return Err(Error::SkeletonMismatch(format!("`{}` vs `{}`", f.drop_a(), g.drop_a())));
    }
    let (f, g) = (f.normalize(), g.normalize());
    let mut steps = Vec::new();
    for (index, ((p, c), (q, _))) in f.steps().into_iter().zip(g.steps()).enumerate() {
        if p == q {
            continue;
        }
        let (pc, qc) = (p.conjuncts(), q.conjuncts());
        steps.push(StepDiff {
            index,
            step: c.clone(),
            left: p.clone(),
            right: q.clone(),
            added: qc.iter().filter(|x| !pc.contains(x)).cloned().collect(),
            removed: pc.iter().filter(|x| !qc.contains(x)).cloned().collect(),
        });
    }
    Ok(DiffReport { steps })
}

impl fmt::Display for DiffReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.steps.is_empty() {
            return writeln!(f, "no differences");
        }
        for d in &self.steps {
            writeln!(f, "step {}: {}", d.index, d.step)?;
            for p in &d.removed {
                writeln!(f, "  - {p}")?;
            }
            for p in &d.added {
                writeln!(f, "  + {p}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{valid_free_annotation, merged_annotation};

    #[test]
    fn merged_annotation_only_adds() {
        let d = diff_annotations(&valid_free_annotation(), &merged_annotation()).unwrap();
        assert!(!d.is_empty());
        for s in &d.steps {
            assert!(s.removed.is_empty(), "{d}");
            assert!(!s.added.is_empty());
        }
    }

    #[test]
    fn self_diff_is_empty() {
        let d = diff_annotations(&merged_annotation(), &merged_annotation()).unwrap();
        assert!(d.is_empty());
        assert_eq!(d.to_string(), "no differences\n");
    }

    #[test]
    fn one_edit_one_step() {
        let f = valid_free_annotation();
        let edited = f.with_step(2, Pred::True);
        let d = diff_annotations(&f, &edited).unwrap();
        assert_eq!(d.steps.len(), 1);
        assert_eq!(d.steps[0].index, 2);
        assert!(d.steps[0].added.is_empty());
    }

    #[test]
    fn skeletons_must_match() {
        let f = valid_free_annotation();
        let g = crate::annot::lift(Pred::True, Comp::Return(crate::expr::Expr::var("i")));
        assert!(matches!(diff_annotations(&f, &g), Err(Error::SkeletonMismatch(_))));
    }
}
