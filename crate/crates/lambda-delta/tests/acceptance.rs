//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//! The corpora are the standard bound-8 enumerations (bound 6/4 for the
//! substitution lemmas and bounds up to 5 for the enumerator validation),
//! shared across criteria through lazy statics.

use once_cell::sync::Lazy;

use lambda_delta::gen::{enumerate, naive_enumerate, GenSpec};
use lambda_delta::suites::{run_suite, run_suite_on, Report, SuiteId};
use lambda_delta::syntax::{nameless, Formula, Term};
use lambda_delta::typing::SystemId;

type Corpus = Vec<(Term, Formula)>;

static FULL8: Lazy<(GenSpec, Corpus)> = Lazy::new(|| {
    let spec = GenSpec::standard(SystemId::Full, 8);
    let corpus = enumerate(&spec);
    (spec, corpus)
});

static DISJFREE8: Lazy<(GenSpec, Corpus)> = Lazy::new(|| {
    let spec = GenSpec::standard(SystemId::DisjFree, 8);
    let corpus = enumerate(&spec);
    (spec, corpus)
});

static SMALL8: Lazy<(GenSpec, Corpus)> = Lazy::new(|| {
    let spec = GenSpec::standard(SystemId::Small, 8);
    let corpus = enumerate(&spec);
    (spec, corpus)
});

fn show(criterion: &str, report: &Report) {
    let verdict = if report.passed() { "PASS" } else { "FAIL" };
    println!(
        "acceptance {criterion}: {verdict} (cases {}, failures {}, cap hits {}, {} ms)",
        report.cases_run,
        report.failures.len(),
        report.cap_hits,
        report.elapsed_ms
    );
    for note in &report.notes {
        println!("  note: {note}");
    }
    for f in report.failures.iter().take(3) {
        println!("  witness[{}]: {} -- {}", f.law, f.input, f.witness);
    }
}

#[test]
fn criterion_01_subject_reduction() {
    let (spec, corpus) = &*FULL8;
    let report = run_suite_on(SuiteId::SubjectReduction, spec, corpus);
    show("01 subject-reduction", &report);
    assert!(report.cases_run > 0);
    assert!(report.passed(), "subject reduction must have 0 failures");
    assert!(
        report.elapsed_ms < 300_000,
        "subject reduction exceeded the 5 minute target"
    );
}

#[test]
fn criterion_02_substitution_lemmas() {
    let dm = run_suite(SuiteId::SubstLemmaDm, &GenSpec::standard(SystemId::Full, 6));
    show("02 subst-lemma-dm", &dm);
    let cf = run_suite(
        SuiteId::SubstLemmaCf,
        &GenSpec::standard(SystemId::DisjFree, 6),
    );
    show("02 subst-lemma-cf", &cf);
    assert!(dm.cases_run > 0 && cf.cases_run > 0);
    assert!(dm.passed(), "de morgan substitution lemma must hold");
    assert!(cf.passed(), "conjunction-free substitution lemma must hold");
}

#[test]
fn criterion_03_soundness() {
    let (spec, corpus) = &*FULL8;
    let dm = run_suite_on(SuiteId::SoundnessDm, spec, corpus);
    show("03 soundness-dm", &dm);
    let (cspec, ccorpus) = &*DISJFREE8;
    let cf = run_suite_on(SuiteId::SoundnessCf, cspec, ccorpus);
    show("03 soundness-cf", &cf);
    assert!(dm.passed() && cf.passed(), "soundness must have 0 failures");
}

#[test]
fn criterion_04_translation_of_proof_reduction() {
    let (spec, corpus) = &*FULL8;
    let report = run_suite_on(SuiteId::ThmTranslationStepDm, spec, corpus);
    show("04 thm-translation-step-dm", &report);
    assert!(report.cases_run > 0);
    assert!(
        report.passed(),
        "every one-step reduction must replay with the expected item and profile"
    );
}

#[test]
fn criterion_05_translation_of_reduction_sequences() {
    let (spec, corpus) = &*FULL8;
    let report = run_suite_on(SuiteId::ThmTranslationSeqDm, spec, corpus);
    show("05 thm-translation-seq-dm", &report);
    assert!(report.cases_run > 0);
    assert!(
        report.passed(),
        "every certificate must close and satisfy |target| >= |source| - m"
    );
}

#[test]
fn criterion_06_commutation_of_reduction_steps() {
    let (spec, corpus) = &*FULL8;
    let report = run_suite_on(SuiteId::LemmaCommutation, spec, corpus);
    show("06 lemma-commutation", &report);
    assert!(report.cases_run > 0);
    assert!(
        report.passed(),
        "every (rho4, R) peak must close per the commutation lemma"
    );
}

#[test]
fn criterion_07_conjunction_free_pipeline() {
    let (dspec, dcorpus) = &*DISJFREE8;
    let step = run_suite_on(SuiteId::ThmTranslationStepCf, dspec, dcorpus);
    show("07 thm-translation-step-cf", &step);
    let seq = run_suite_on(SuiteId::ThmTranslationSeqCf, dspec, dcorpus);
    show("07 thm-translation-seq-cf", &seq);
    let (sspec, scorpus) = &*SMALL8;
    let post = run_suite_on(SuiteId::LemmaPostponement, sspec, scorpus);
    show("07 lemma-postponement", &post);
    let purify = run_suite_on(SuiteId::Purify, sspec, scorpus);
    show("07 purify", &purify);
    assert!(step.cases_run > 0 && seq.cases_run > 0 && post.cases_run > 0);
    assert!(step.passed(), "step simulation must have 0 failures");
    assert!(seq.passed(), "sequence certificates must have 0 failures");
    assert!(post.passed(), "postponement must have 0 failures");
    assert!(purify.passed(), "purification must have 0 failures");
}

#[test]
fn criterion_08_derived_rule_identity() {
    let (spec, corpus) = &*FULL8;
    let report = run_suite_on(SuiteId::DerivedRuleEq1, spec, corpus);
    show("08 derived-rule-eq1", &report);
    assert!(report.cases_run > 0);
    assert!(
        report.passed(),
        "every bottom-typed rho1 redex must expand to an alpha-equal endpoint"
    );
}

#[test]
fn criterion_09_strong_normalization_at_desk_scale() {
    let started = std::time::Instant::now();
    let (fspec, fcorpus) = &*FULL8;
    let full = run_suite_on(SuiteId::SnFull, fspec, fcorpus);
    show("09 sn-full (terms + de morgan images)", &full);
    let (dspec, dcorpus) = &*DISJFREE8;
    let disj = run_suite_on(SuiteId::SnDisjfree, dspec, dcorpus);
    show("09 sn-disjfree", &disj);
    let (sspec, scorpus) = &*SMALL8;
    let small = run_suite_on(SuiteId::SnSmall, sspec, scorpus);
    show("09 sn-small", &small);
    assert!(full.passed() && disj.passed() && small.passed());
    assert!(
        started.elapsed().as_secs() < 900,
        "strong normalization checks exceeded the 15 minute target"
    );
}

#[test]
fn criterion_10_termination_measures() {
    let (spec, corpus) = &*FULL8;
    let rho2 = run_suite_on(SuiteId::Rho2Termination, spec, corpus);
    show("10 rho2-termination", &rho2);
    let rho3iota = run_suite_on(SuiteId::Rho3IotaTermination, spec, corpus);
    show("10 rho3-iota-termination", &rho3iota);
    assert!(rho2.passed(), "rho2 traces must be bounded by term size");
    assert!(
        rho3iota.passed(),
        "rho3+iota traces must be bounded by term size"
    );
}

#[test]
fn criterion_11_enumerator_validity() {
    for system in SystemId::ALL {
        for bound in 1..=5 {
            let spec = GenSpec::standard(system, bound);
            let mut got: Vec<_> = enumerate(&spec)
                .into_iter()
                .map(|(t, _)| nameless(&t))
                .collect();
            let mut want: Vec<_> = naive_enumerate(&spec)
                .into_iter()
                .map(|(t, _)| nameless(&t))
                .collect();
            got.sort();
            want.sort();
            want.dedup();
            println!(
                "acceptance 11 enumerator-validity: {system} bound {bound}: {} terms (oracle {})",
                got.len(),
                want.len()
            );
            assert_eq!(
                got, want,
                "enumerator disagrees with the naive oracle for {system} at bound {bound}"
            );
        }
    }
    println!("acceptance 11 enumerator-validity: PASS");
}
