use annot_core::annot::{check_annotator, check_strong_annotator, merge, AnnTriple};
use annot_core::corpus::{component_rules, corpus_ctx, corpus_goals, valid_free_annotation, valid_queues_annotation, merged_annotation, CorpusParams};
use annot_core::vcg::{unfold_goal, vcg_prove, vcg_strong, RuleDB, VcgStatus};

fn db(p: CorpusParams) -> (annot_core::Ctx, RuleDB) {
    let ctx = corpus_ctx(p);
    let mut db = RuleDB::new();
    for (name, t) in component_rules(p) {
        db.register_checked(&name, &t, &ctx).unwrap();
    }
    (ctx, db)
}

#[test]
fn collected_annotations_match_the_fixtures() {
    let p = CorpusParams::SMALL;
    let (ctx, db) = db(p);
    let goals = corpus_goals(p);

    let vf = unfold_goal(&goals["new_tcb:valid_free"], &ctx);
    let r = vcg_prove(&vf, &db, &ctx).unwrap();
    assert_eq!(r.status, VcgStatus::Proved);
    let ann = r.annotation.unwrap();
    assert_eq!(ann.normalize(), valid_free_annotation().normalize());
    assert!(check_annotator(&vf, &ann, &ctx).unwrap().holds());

    let vq = unfold_goal(&goals["new_tcb:valid_queues"], &ctx);
    let r = vcg_strong(&vq.pre, &ann, &vq.post, &vq.scope, &db, &ctx).unwrap();
    assert_eq!(r.status, VcgStatus::Proved);
    let out = r.annotation.unwrap();
    assert_eq!(out.normalize(), valid_queues_annotation().normalize());
    let assumed = AnnTriple::new(vq.scope.clone(), vq.pre.clone(), ann.clone(), vq.post.clone());
    assert!(check_strong_annotator(&assumed, &out, &ctx).unwrap().holds());

    assert_eq!(merge(&ann, &out).unwrap().normalize(), merged_annotation().normalize());
}

#[test]
fn proofs_audit_cleanly() {
    let p = CorpusParams { n_ids: 2, n_prios: 1 };
    let (ctx, db) = db(p);
    let vf = unfold_goal(&corpus_goals(p)["new_tcb:valid_free"], &ctx);
    let j = vcg_prove(&vf, &db, &ctx).unwrap().judgement.unwrap();
    assert_eq!(j.audit_deep(&ctx).unwrap(), None);
}
