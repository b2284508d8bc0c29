use std::path::Path;
use std::process::Command;

fn annot(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_annot")).args(args).output().unwrap();
    let code = out.status.code().expect("terminated by a signal");
    (code, String::from_utf8(out.stdout).unwrap())
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn valid_free_holds_on_the_default_corpus() {
    let (code, out) = annot(&["check", "--project", "corpus", "--triple", "new_tcb:valid_free"]);
    assert_eq!(code, 0);
    assert_eq!(out, "new_tcb:valid_free: Holds (345600 states)\n");
}

#[test]
fn valid_queues_alone_is_violated_with_two_priorities() {
    let (code, out) = annot(&["check", "--triple", "new_tcb:valid_queues_alone", "--params", "2,2"]);
    assert_eq!(code, 1);
    assert!(out.starts_with("new_tcb:valid_queues_alone: Violated at state"), "{out}");
}

#[test]
fn usage_and_project_errors_exit_three() {
    for args in [
        &["check", "--tripl", "x"][..],
        &["frobnicate"],
        &["check", "--params", "2"],
        &["check", "--triple", "no_such_goal", "--params", "2,1"],
        &["diff", "a", "b", "--params", "2,1"],
        &["check", "--project", "/nonexistent/project.annot"],
    ] {
        let (code, _) = annot(args);
        assert_eq!(code, 3, "{args:?}");
    }
}

#[test]
fn help_exits_zero() {
    let (code, out) = annot(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("annotate"));
}

#[test]
fn faults_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("fault.annot");
    std::fs::write(
        &file,
        "annot-project 1\n(schema\n  (b bool))\n(goals\n  (asserts_b (triple (scope) true (assert (atom (field b))) (post _ true))))\n",
    )
    .unwrap();
    let (code, out) = annot(&["check", "--project", path(&file)]);
    assert_eq!(code, 2, "{out}");
    assert!(out.starts_with("asserts_b: Fault"), "{out}");
}

#[test]
fn annotate_then_diff_against_the_fixture_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.annot");
    let f = path(&file);
    let (code, out) = annot(&["annotate", "--params", "2,2", "--goal", "new_tcb:valid_free", "--out", "ann_vf", "--save", f]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("status: proved"));
    let (code, out) = annot(&["--project", f, "diff", "ann_vf", "new_tcb_valid_free_ann"]);
    assert_eq!((code, out.as_str()), (0, "no differences\n"));

    let (code, out) = annot(&["--project", f, "reuse", "--goal", "new_tcb:valid_queues", "--ann", "ann_vf", "--out", "ann_vq", "--audit"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("all hold"), "{out}");
    let (code, out) = annot(&["--project", f, "diff", "ann_vq", "new_tcb_valid_queues_ann"]);
    assert_eq!((code, out.as_str()), (0, "no differences\n"));

    let (code, _) = annot(&["--project", f, "merge", "ann_vf", "ann_vq", "--out", "both"]);
    assert_eq!(code, 0);
    let (code, out) = annot(&["--project", f, "diff", "both", "new_tcb_merged_ann"]);
    assert_eq!((code, out.as_str()), (0, "no differences\n"));

    let (code, out) = annot(&["--project", f, "diff", "ann_vf", "ann_vq"]);
    assert_eq!(code, 1);
    assert_ne!(out, "no differences\n");
}

#[test]
fn reports_do_not_depend_on_workers() {
    let base = ["--params", "2,2", "--format", "compact", "check"];
    let (c1, one) = annot(&[&["--workers", "1"][..], &base].concat());
    let (c4, four) = annot(&[&["--workers", "4"][..], &base].concat());
    assert_eq!((c1, &one), (c4, &four));
    assert_eq!(c1, 1);
    assert_eq!(one.lines().count(), 13);
    assert_eq!(one.lines().filter(|l| l.ends_with(" violated")).count(), 1);
}

#[test]
fn emitted_corpus_verifies_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.annot");
    let (code, _) = annot(&["corpus", "emit", "--params", "2,2", "--out", path(&file)]);
    assert_eq!(code, 0);
    let (code, out) = annot(&["--project", path(&file), "corpus", "verify"]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out.lines().filter(|l| l.starts_with("ok ")).count(), 6);
    let (_, stdout) = annot(&["corpus", "emit", "--params", "2,2"]);
    assert_eq!(stdout, std::fs::read_to_string(&file).unwrap());
}
