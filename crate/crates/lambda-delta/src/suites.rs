//! Batch verification suites: each runs one law over every instance drawn
//! from an enumerated corpus and reports all violations as replayable
//! witnesses. Reports are deterministic for a given spec.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::conjfree::{
    cf_ctx, cf_formula, cf_term, expand_rho1bot, postpone_kappa, postpone_rho3, purify_sequence,
    simulate_sequence_cf, simulate_step_cf,
};
use crate::demorgan::{
    commute_rho4, dm_ctx, dm_formula, dm_term, simulate_sequence, simulate_step,
};
use crate::gen::{enumerate, GenSpec};
use crate::rewrite::{make_step, maximal_traces, redexes, reduction_graph, RuleId, RuleSet};
use crate::syntax::{alpha_eq, app, delta, subst, var, Formula, Term};
use crate::typing::{infer, Ctx, SystemId};

pub const TRACE_LEN_CAP: usize = 10;
pub const TRACE_COUNT_CAP: usize = 32;
pub const GRAPH_NODE_BOUND: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteId {
    SubjectReduction,
    SubstLemmaDm,
    SubstLemmaCf,
    SoundnessDm,
    SoundnessCf,
    ThmTranslationStepDm,
    ThmTranslationSeqDm,
    LemmaCommutation,
    ThmTranslationStepCf,
    ThmTranslationSeqCf,
    LemmaPostponement,
    Purify,
    SnFull,
    SnDisjfree,
    SnSmall,
    Rho2Termination,
    Rho3IotaTermination,
    DerivedRuleEq1,
}

impl SuiteId {
    pub const ALL: [SuiteId; 18] = [
        SuiteId::SubjectReduction,
        SuiteId::SubstLemmaDm,
        SuiteId::SubstLemmaCf,
        SuiteId::SoundnessDm,
        SuiteId::SoundnessCf,
        SuiteId::ThmTranslationStepDm,
        SuiteId::ThmTranslationSeqDm,
        SuiteId::LemmaCommutation,
        SuiteId::ThmTranslationStepCf,
        SuiteId::ThmTranslationSeqCf,
        SuiteId::LemmaPostponement,
        SuiteId::Purify,
        SuiteId::SnFull,
        SuiteId::SnDisjfree,
        SuiteId::SnSmall,
        SuiteId::Rho2Termination,
        SuiteId::Rho3IotaTermination,
        SuiteId::DerivedRuleEq1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteId::SubjectReduction => "subject-reduction",
            SuiteId::SubstLemmaDm => "subst-lemma-dm",
            SuiteId::SubstLemmaCf => "subst-lemma-cf",
            SuiteId::SoundnessDm => "soundness-dm",
            SuiteId::SoundnessCf => "soundness-cf",
            SuiteId::ThmTranslationStepDm => "thm-translation-step-dm",
            SuiteId::ThmTranslationSeqDm => "thm-translation-seq-dm",
            SuiteId::LemmaCommutation => "lemma-commutation",
            SuiteId::ThmTranslationStepCf => "thm-translation-step-cf",
            SuiteId::ThmTranslationSeqCf => "thm-translation-seq-cf",
            SuiteId::LemmaPostponement => "lemma-postponement",
            SuiteId::Purify => "purify",
            SuiteId::SnFull => "sn-full",
            SuiteId::SnDisjfree => "sn-disjfree",
            SuiteId::SnSmall => "sn-small",
            SuiteId::Rho2Termination => "rho2-termination",
            SuiteId::Rho3IotaTermination => "rho3-iota-termination",
            SuiteId::DerivedRuleEq1 => "derived-rule-eq1",
        }
    }
}

impl fmt::Display for SuiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SuiteId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SuiteId::ALL
            .iter()
            .copied()
            .find(|id| id.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = SuiteId::ALL.iter().map(|id| id.name()).collect();
                format!("unknown suite {s:?}; one of {}", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Failure {
    pub input: String,
    pub law: String,
    pub witness: String,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub suite: String,
    pub cases_run: usize,
    pub failures: Vec<Failure>,
    /// Enumeration caps hit (reported distinctly from law violations).
    pub cap_hits: usize,
    /// Informational tallies, e.g. profile shapes seen.
    pub notes: Vec<String>,
    pub elapsed_ms: u128,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

struct ReportBuilder {
    suite: SuiteId,
    cases: usize,
    failures: Vec<Failure>,
    cap_hits: usize,
    notes: Vec<String>,
    started: Instant,
}

const MAX_RECORDED_FAILURES: usize = 50;

impl ReportBuilder {
    fn new(suite: SuiteId) -> Self {
        ReportBuilder {
            suite,
            cases: 0,
            failures: Vec::new(),
            cap_hits: 0,
            notes: Vec::new(),
            started: Instant::now(),
        }
    }

    fn case(&mut self) {
        self.cases += 1;
    }

    fn fail(&mut self, input: impl fmt::Display, law: &str, witness: impl fmt::Display) {
        if self.failures.len() < MAX_RECORDED_FAILURES {
            self.failures.push(Failure {
                input: input.to_string(),
                law: law.to_string(),
                witness: witness.to_string(),
            });
        } else {
            // keep counting without storing the witness text
            self.failures.push(Failure {
                input: String::new(),
                law: law.to_string(),
                witness: String::new(),
            });
        }
    }

    fn finish(self) -> Report {
        Report {
            suite: self.suite.name().to_string(),
            cases_run: self.cases,
            failures: self.failures,
            cap_hits: self.cap_hits,
            notes: self.notes,
            elapsed_ms: self.started.elapsed().as_millis(),
        }
    }
}

pub fn run_suite(id: SuiteId, spec: &GenSpec) -> Report {
    run_suite_on(id, spec, &enumerate(spec))
}

/// Runs a suite over a pre-enumerated corpus of `spec` (so several suites
/// can share one enumeration).
pub fn run_suite_on(id: SuiteId, spec: &GenSpec, corpus: &[(Term, Formula)]) -> Report {
    match id {
        SuiteId::SubjectReduction => subject_reduction(spec, corpus),
        SuiteId::SubstLemmaDm => subst_lemma(spec, true),
        SuiteId::SubstLemmaCf => subst_lemma(spec, false),
        SuiteId::SoundnessDm => soundness(spec, corpus, true),
        SuiteId::SoundnessCf => soundness(spec, corpus, false),
        SuiteId::ThmTranslationStepDm => translation_step_dm(spec, corpus),
        SuiteId::ThmTranslationSeqDm => translation_seq(spec, corpus, true),
        SuiteId::LemmaCommutation => lemma_commutation(spec, corpus),
        SuiteId::ThmTranslationStepCf => translation_step_cf(spec, corpus),
        SuiteId::ThmTranslationSeqCf => translation_seq(spec, corpus, false),
        SuiteId::LemmaPostponement => lemma_postponement(spec, corpus),
        SuiteId::Purify => purify_suite(spec, corpus),
        SuiteId::SnFull => sn_suite(spec, corpus, SystemId::Full),
        SuiteId::SnDisjfree => sn_suite(spec, corpus, SystemId::DisjFree),
        SuiteId::SnSmall => sn_suite(spec, corpus, SystemId::Small),
        SuiteId::Rho2Termination => {
            bounded_length(spec, corpus, RuleSet::only(RuleId::Rho2), "rho2")
        }
        SuiteId::Rho3IotaTermination => bounded_length(
            spec,
            corpus,
            RuleSet::only(RuleId::Rho3).with(RuleId::Iota),
            "rho3+iota",
        ),
        SuiteId::DerivedRuleEq1 => derived_rule_eq1(spec, corpus),
    }
}

fn subject_reduction(spec: &GenSpec, corpus: &[(Term, Formula)]) -> Report {
    let mut r = ReportBuilder::new(SuiteId::SubjectReduction);
    let ctx = spec.ctx();
    let rules = RuleSet::system(spec.system);
    for (t, ty) in corpus {
        let steps = match redexes(&ctx, t, rules) {
            Ok(s) => s,
            Err(e) => {
                r.fail(t, "well-typed corpus term", e);
                continue;
            }
        };
        for (pos, rule) in steps {
            r.case();
            match crate::rewrite::contract(&ctx, t, &pos, rule) {
                Ok(after) => match infer(&ctx, &after) {
                    Ok(ty2) if ty2 == *ty => {}
                    Ok(ty2) => r.fail(
                        t,
                        "subject reduction",
                        format!("{rule} at {pos} changed type {ty} to {ty2}: {after}"),
                    ),
                    Err(e) => r.fail(
                        t,
                        "subject reduction",
                        format!("{rule} at {pos} produced ill-typed {after}: {e}"),
                    ),
                },
                Err(e) => r.fail(t, "contractibility of enumerated redexes", e),
            }
        }
    }
    r.finish()
}

/// Substituends of at most four constructors, taken from the same corpus
/// discipline as the main enumeration.
fn substituends(spec: &GenSpec) -> Vec<(Term, Formula)> {
    let mut sub_spec = spec.clone();
    sub_spec.size_bound = 4;
    enumerate(&sub_spec)
}

fn subst_lemma(spec: &GenSpec, demorgan: bool) -> Report {
    let suite = if demorgan {
        SuiteId::SubstLemmaDm
    } else {
        SuiteId::SubstLemmaCf
    };
    let mut r = ReportBuilder::new(suite);
    let ctx = spec.ctx();
    let ns = substituends(spec);
    let mut by_type: Vec<(Formula, Vec<Term>)> = Vec::new();
    for (n, ty) in ns {
        match by_type.iter_mut().find(|(t, _)| *t == ty) {
            Some((_, v)) => v.push(n),
            None => by_type.push((ty, vec![n])),
        }
    }
    for (b, ns) in by_type {
        let mut m_spec = spec.clone();
        m_spec.context.push(("s".to_string(), b.clone()));
        let m_ctx = ctx.extended("s", b.clone());
        let translated_ns: Vec<(Term, Term)> = ns
            .iter()
            .map(|n| {
                let tn = if demorgan {
                    dm_term(&ctx, n).expect("translation of corpus term")
                } else {
                    cf_term(&ctx, n).expect("translation of corpus term")
                };
                (n.clone(), tn)
            })
            .collect();
        for (m, _) in enumerate(&m_spec) {
            let tm = if demorgan {
                dm_term(&m_ctx, &m)
            } else {
                cf_term(&m_ctx, &m).map_err(|e| match e {
                    crate::conjfree::CfError::Typing(t) => t,
                    crate::conjfree::CfError::DisjPresent => unreachable!(),
                })
            };
            let tm = match tm {
                Ok(t) => t,
                Err(e) => {
                    r.fail(&m, "translation of corpus term", e);
                    continue;
                }
            };
            for (n, tn) in &translated_ns {
                r.case();
                let substituted = subst(&m, "s", n);
                let lhs = if demorgan {
                    dm_term(&ctx, &substituted).map_err(|e| e.to_string())
                } else {
                    cf_term(&ctx, &substituted).map_err(|e| e.to_string())
                };
                let rhs = subst(&tm, "s", tn);
                match lhs {
                    Ok(lhs) if alpha_eq(&lhs, &rhs) => {}
                    Ok(lhs) => r.fail(
                        format!("[{n}/s]({m})"),
                        "preservation of substitution",
                        format!("translated substitution {lhs} differs from {rhs}"),
                    ),
                    Err(e) => r.fail(format!("[{n}/s]({m})"), "translation", e),
                }
            }
        }
    }
    r.finish()
}

fn soundness(spec: &GenSpec, corpus: &[(Term, Formula)], demorgan: bool) -> Report {
    let suite = if demorgan {
        SuiteId::SoundnessDm
    } else {
        SuiteId::SoundnessCf
    };
    let mut r = ReportBuilder::new(suite);
    let ctx = spec.ctx();
    let image_ctx = if demorgan { dm_ctx(&ctx) } else { cf_ctx(&ctx) };
    for (t, ty) in corpus {
        r.case();
        let (image, expected) = if demorgan {
            (dm_term(&ctx, t).map_err(|e| e.to_string()), dm_formula(ty))
        } else {
            (
                cf_term(&ctx, t).map_err(|e| e.to_string()),
                cf_formula(ty).expect("corpus type is disjunction-free"),
            )
        };
        match image {
            Ok(image) => {
                let target_system = if demorgan {
                    SystemId::DisjFree
                } else {
                    SystemId::Small
                };
                if !crate::typing::in_system(&image, target_system) {
                    r.fail(
                        t,
                        "image discipline",
                        format!("image {image} leaves {target_system}"),
                    );
                }
                match infer(&image_ctx, &image) {
                    Ok(got) if got == expected => {}
                    Ok(got) => r.fail(
                        t,
                        "soundness of the translation",
                        format!("image {image} has type {got}, expected {expected}"),
                    ),
                    Err(e) => r.fail(t, "typability of the image", format!("{image}: {e}")),
                }
            }
            Err(e) => r.fail(t, "translation", e),
        }
    }
    r.finish()
}

fn expected_item_dm(rule: RuleId) -> u8 {
    use RuleId::*;
    match rule {
        BetaImp | BetaConj | Rho1Imp | Rho1Conj | Rho1BotImp | Rho1BotConj | Rho2 => 1,
        Rho1BotDisj => 2,
        BetaDisj | PiImp | PiConj => 3,
        Rho1Disj | PiDisj => 4,
        _ => 0,
    }
}

fn translation_step_dm(spec: &GenSpec, corpus: &[(Term, Formula)]) -> Report {
    use RuleId::*;
    let mut r = ReportBuilder::new(SuiteId::ThmTranslationStepDm);
    let ctx = spec.ctx();
    let rules = RuleSet::system(SystemId::Full);
    let mut single_residual = 0usize;
    let mut other_residual = 0usize;
    for (t, _) in corpus {
        let t = t.clone();
        let steps = match redexes(&ctx, &t, rules) {
            Ok(s) => s,
            Err(e) => {
                r.fail(&t, "well-typed corpus term", e);
                continue;
            }
        };
        for (pos, rule) in steps {
            r.case();
            let step = match make_step(&ctx, &t, &pos, rule) {
                Ok(s) => s,
                Err(e) => {
                    r.fail(&t, "contraction", e);
                    continue;
                }
            };
            let sim = match simulate_step(&ctx, &step) {
                Ok(s) => s,
                Err(e) => {
                    r.fail(&t, "simulation replay", format!("{rule} at {pos}: {e}"));
                    continue;
                }
            };
            if sim.item != expected_item_dm(rule) {
                r.fail(
                    &t,
                    "theorem item classification",
                    format!("{rule} classified as item {}", sim.item),
                );
                continue;
            }
            let target = sim.target.rules();
            let profile_ok = match rule {
                BetaImp | BetaConj | Rho1Imp | Rho1Conj | Rho1BotImp | Rho1BotConj | Rho2 => {
                    target == vec![rule] && sim.residual.is_empty()
                }
                Rho1BotDisj => target == vec![Rho1BotImp] && sim.residual.is_empty(),
                BetaDisj => {
                    (target == vec![BetaImp, BetaConj, BetaImp, Rho2]
                        || target == vec![BetaImp, BetaConj, BetaImp])
                        && sim.residual.is_empty()
                }
                PiImp => {
                    (target == vec![Rho1Imp, BetaImp, BetaImp]
                        || target == vec![Rho1BotImp, BetaImp, BetaImp])
                        && sim.residual.is_empty()
                }
                PiConj => {
                    (target == vec![Rho1Conj, BetaImp, BetaImp]
                        || target == vec![Rho1BotConj, BetaImp, BetaImp])
                        && sim.residual.is_empty()
                }
                Rho1Disj => {
                    (target == vec![Rho1BotImp] && sim.residual.rules().iter().all(|r| *r == Rho4))
                        || (target == vec![Rho1Imp] && sim.residual.is_empty())
                }
                PiDisj => {
                    target == vec![Rho1BotImp, BetaImp, BetaImp]
                        && (sim.residual.is_empty() || sim.residual.len() == 2)
                }
                _ => false,
            };
            if !profile_ok {
                r.fail(
                    &t,
                    "step-count profile",
                    format!(
                        "{rule} at {pos} mapped to {:?} with residual {:?}",
                        target,
                        sim.residual.rules()
                    ),
                );
            }
            if rule == Rho1Disj || rule == PiDisj {
                if sim.residual.len() == 1 {
                    single_residual += 1;
                } else {
                    other_residual += 1;
                }
            }
        }
    }
    r.notes.push(format!(
        "item-4 residual chains: {single_residual} of length 1, {other_residual} of other lengths \
         (the construction yields one rho4 step per binder occurrence)"
    ));
    r.finish()
}

fn translation_step_cf(spec: &GenSpec, corpus: &[(Term, Formula)]) -> Report {
    use RuleId::*;
    let mut r = ReportBuilder::new(SuiteId::ThmTranslationStepCf);
    let ctx = spec.ctx();
    let rules = RuleSet::system(SystemId::DisjFree);
    let small_plus = RuleSet::system(SystemId::Small).with(Rho1BotImp);
    for (t, _) in corpus {
        let t = t.clone();
        let steps = match redexes(&ctx, &t, rules) {
            Ok(s) => s,
            Err(e) => {
                r.fail(&t, "well-typed corpus term", e);
                continue;
            }
        };
        for (pos, rule) in steps {
            r.case();
            let step = match make_step(&ctx, &t, &pos, rule) {
                Ok(s) => s,
                Err(e) => {
                    r.fail(&t, "contraction", e);
                    continue;
                }
            };
            let sim = match simulate_step_cf(&ctx, &step) {
                Ok(s) => s,
                Err(e) => {
                    r.fail(&t, "simulation replay", format!("{rule} at {pos}: {e}"));
                    continue;
                }
            };
            let expected_item = if rule == Rho1Conj { 2 } else { 1 };
            if sim.item != expected_item {
                r.fail(
                    &t,
                    "theorem item classification",
                    format!("{rule} classified as item {}", sim.item),
                );
                continue;
            }
            let target = sim.target.rules();
            let profile_ok = match rule {
                BetaImp | Rho1Imp | Rho1BotImp | Rho2 => {
                    target == vec![rule] && sim.residual.is_empty()
                }
                BetaConj => {
                    (target == vec![BetaImp, BetaImp, BetaImp, Rho2]
                        || target == vec![BetaImp, BetaImp, BetaImp])
                        && sim.residual.is_empty()
                }
                Rho1BotConj => target == vec![Rho1BotImp] && sim.residual.is_empty(),
                Rho1Conj => {
                    (target == vec![Rho1BotImp] && sim.residual.rules().iter().all(|r| *r == Rho4))
                        || (target == vec![Rho1Imp] && sim.residual.is_empty())
                }
                _ => false,
            };
            if !profile_ok {
                r.fail(
                    &t,
                    "step-count profile",
                    format!(
                        "{rule} at {pos} mapped to {:?} with residual {:?}",
                        target,
                        sim.residual.rules()
                    ),
                );
            }
            if !target.iter().all(|s| small_plus.contains(*s)) {
                r.fail(&t, "target stays in small + rho_bot", format!("{target:?}"));
            }
        }
    }
    r.finish()
}

fn translation_seq(spec: &GenSpec, corpus: &[(Term, Formula)], demorgan: bool) -> Report {
    let suite = if demorgan {
        SuiteId::ThmTranslationSeqDm
    } else {
        SuiteId::ThmTranslationSeqCf
    };
    let mut r = ReportBuilder::new(suite);
    let ctx = spec.ctx();
    let rules = RuleSet::system(if demorgan {
        SystemId::Full
    } else {
        SystemId::DisjFree
    });
    let small_plus = RuleSet::system(SystemId::Small).with(RuleId::Rho3);
    for (t, _) in corpus {
        let t = t.clone();
        let traces = match maximal_traces(&ctx, &t, rules, TRACE_LEN_CAP, TRACE_COUNT_CAP) {
            Ok(ts) => ts,
            Err(e) => {
                r.fail(&t, "trace enumeration", e);
                continue;
            }
        };
        r.cap_hits += traces.len_cap_hits + usize::from(traces.count_capped);
        for tr in &traces.traces {
            r.case();
            let cert = if demorgan {
                simulate_sequence(&ctx, tr)
            } else {
                simulate_sequence_cf(&ctx, tr)
            };
            match cert {
                Ok(cert) => {
                    if !cert.ok {
                        r.fail(
                            &t,
                            "sequence certificate",
                            format!(
                                "rules {:?}: |target|={} m={} closes={}",
                                tr.rules(),
                                cert.target.len(),
                                cert.rho2_count,
                                alpha_eq(cert.rho4_chain.endpoint(), cert.target.endpoint())
                            ),
                        );
                    } else if !demorgan
                        && !cert
                            .target
                            .steps
                            .iter()
                            .all(|s| small_plus.contains(s.rule))
                    {
                        r.fail(
                            &t,
                            "target system discipline",
                            format!("{:?}", cert.target.rules()),
                        );
                    }
                }
                Err(e) => r.fail(&t, "sequence simulation", format!("{:?}: {e}", tr.rules())),
            }
        }
    }
    r.finish()
}

fn lemma_commutation(spec: &GenSpec, corpus: &[(Term, Formula)]) -> Report {
    let mut r = ReportBuilder::new(SuiteId::LemmaCommutation);
    let ctx = spec.ctx();
    let system = RuleSet::system(spec.system);
    let with_rho4 = system.with(RuleId::Rho4);
    let mut erasure_cases = 0usize;
    let mut run_peaks = |ctx: &Ctx, t: &Term, r: &mut ReportBuilder| {
        let all = match redexes(ctx, t, with_rho4) {
            Ok(s) => s,
            Err(e) => {
                r.fail(t, "well-typed term", e);
                return;
            }
        };
        let rho4s: Vec<_> = all.iter().filter(|(_, rl)| *rl == RuleId::Rho4).collect();
        if rho4s.is_empty() {
            return;
        }
        let others: Vec<_> = all.iter().filter(|(_, rl)| *rl != RuleId::Rho4).collect();
        for (p4, _) in &rho4s {
            let rho4_step = match make_step(ctx, t, p4, RuleId::Rho4) {
                Ok(s) => s,
                Err(e) => {
                    r.fail(t, "rho4 contraction", e);
                    continue;
                }
            };
            for (pr, rl) in &others {
                r.case();
                let r_step = match make_step(ctx, t, pr, *rl) {
                    Ok(s) => s,
                    Err(e) => {
                        r.fail(t, "contraction", e);
                        continue;
                    }
                };
                match commute_rho4(ctx, &rho4_step, &r_step) {
                    Ok((transported, _closing)) => {
                        if *rl == RuleId::Rho2 && transported.is_empty() {
                            erasure_cases += 1;
                        }
                    }
                    Err(e) => r.fail(
                        t,
                        "commutation of rho4 with a system step",
                        format!("rho4 at {p4} vs {rl} at {pr}: {e}"),
                    ),
                }
            }
        }
    };
    for (t, _) in corpus {
        run_peaks(&ctx, t, &mut r);
    }
    // seeded erasure instance: kp (delta k:~Bot. k y)
    let seeded_ctx = Ctx::from_pairs([
        ("kp".to_string(), Formula::neg(Formula::Bottom)),
        ("y".to_string(), Formula::Bottom),
    ])
    .unwrap();
    let seeded = app(
        var("kp"),
        delta("k", Formula::Bottom, app(var("k"), var("y"))),
    );
    run_peaks(&seeded_ctx, &seeded, &mut r);
    r.notes
        .push(format!("rho2 erasure case exercised {erasure_cases} times"));
    if erasure_cases == 0 {
        r.fail(
            seeded,
            "erasure case coverage",
            "the rho2 erasure overlap was never exercised",
        );
    }
    r.finish()
}

fn lemma_postponement(spec: &GenSpec, corpus: &[(Term, Formula)]) -> Report {
    let mut r = ReportBuilder::new(SuiteId::LemmaPostponement);
    let ctx = spec.ctx();
    let small = RuleSet::system(SystemId::Small);
    let second_rules_rho3 = small.with(RuleId::Kappa);
    let second_rules_kappa = small;
    for (t, _) in corpus {
        let t = t.clone();
        if !crate::typing::in_system(&t, SystemId::Small) {
            continue;
        }
        // rho3 chains
        for (p, _) in redexes(&ctx, &t, RuleSet::only(RuleId::Rho3)).unwrap_or_default() {
            let first = match make_step(&ctx, &t, &p, RuleId::Rho3) {
                Ok(s) => s,
                Err(e) => {
                    r.fail(&t, "rho3 contraction", e);
                    continue;
                }
            };
            for (p2, rl2) in redexes(&ctx, &first.after, second_rules_rho3).unwrap_or_default() {
                r.case();
                let second = match make_step(&ctx, &first.after, &p2, rl2) {
                    Ok(s) => s,
                    Err(e) => {
                        r.fail(&t, "contraction", e);
                        continue;
                    }
                };
                if let Err(e) = postpone_rho3(&ctx, &first, &second) {
                    r.fail(
                        &t,
                        "postponement of rho3",
                        format!("rho3 at {p} then {rl2} at {p2}: {e}"),
                    );
                }
            }
        }
        // kappa chains
        for (p, _) in redexes(&ctx, &t, RuleSet::only(RuleId::Kappa)).unwrap_or_default() {
            let first = match make_step(&ctx, &t, &p, RuleId::Kappa) {
                Ok(s) => s,
                Err(e) => {
                    r.fail(&t, "kappa contraction", e);
                    continue;
                }
            };
            for (p2, rl2) in redexes(&ctx, &first.after, second_rules_kappa).unwrap_or_default() {
                r.case();
                let second = match make_step(&ctx, &first.after, &p2, rl2) {
                    Ok(s) => s,
                    Err(e) => {
                        r.fail(&t, "contraction", e);
                        continue;
                    }
                };
                if let Err(e) = postpone_kappa(&ctx, &first, &second) {
                    r.fail(
                        &t,
                        "postponement of kappa",
                        format!("kappa at {p} then {rl2} at {p2}: {e}"),
                    );
                }
            }
        }
    }
    r.finish()
}

fn purify_suite(spec: &GenSpec, corpus: &[(Term, Formula)]) -> Report {
    let mut r = ReportBuilder::new(SuiteId::Purify);
    let ctx = spec.ctx();
    let rules = RuleSet::system(SystemId::Small).with(RuleId::Rho3);
    let small = RuleSet::system(SystemId::Small);
    for (t, _) in corpus {
        let t = t.clone();
        if !crate::typing::in_system(&t, SystemId::Small) {
            continue;
        }
        let traces = match maximal_traces(&ctx, &t, rules, TRACE_LEN_CAP, TRACE_COUNT_CAP) {
            Ok(ts) => ts,
            Err(e) => {
                r.fail(&t, "trace enumeration", e);
                continue;
            }
        };
        r.cap_hits += traces.len_cap_hits + usize::from(traces.count_capped);
        for tr in &traces.traces {
            if tr.count_rule(RuleId::Rho3) == 0 {
                continue;
            }
            r.case();
            match purify_sequence(&ctx, tr) {
                Ok(out) => {
                    if !out.length_ok {
                        r.fail(
                            &t,
                            "purified length arithmetic",
                            format!(
                                "|s|={} m={} i={} purified to {}",
                                tr.len(),
                                out.rho3_count,
                                out.iota_count,
                                out.output.len()
                            ),
                        );
                    } else if !out.output.steps.iter().all(|s| small.contains(s.rule)) {
                        r.fail(
                            &t,
                            "purified trace stays in the small system",
                            format!("{:?}", out.output.rules()),
                        );
                    }
                }
                Err(e) => r.fail(&t, "purification", format!("{:?}: {e}", tr.rules())),
            }
        }
    }
    r.finish()
}

fn sn_suite(spec: &GenSpec, corpus: &[(Term, Formula)], system: SystemId) -> Report {
    let suite = match system {
        SystemId::Full => SuiteId::SnFull,
        SystemId::DisjFree => SuiteId::SnDisjfree,
        SystemId::Small => SuiteId::SnSmall,
    };
    let mut r = ReportBuilder::new(suite);
    let ctx = spec.ctx();
    let rules = RuleSet::system(system);
    let check = |ctx: &Ctx, t: &Term, rules: RuleSet, r: &mut ReportBuilder, what: &str| {
        r.case();
        match reduction_graph(ctx, t, rules, GRAPH_NODE_BOUND) {
            Ok(g) => {
                if !g.is_sn() {
                    r.fail(
                        t,
                        "strong normalization at desk scale",
                        format!("{what}: verdict {}", g.verdict.name()),
                    );
                }
            }
            Err(e) => r.fail(t, "graph construction", format!("{what}: {e}")),
        }
    };
    for (t, _) in corpus {
        check(&ctx, t, rules, &mut r, "term graph");
    }
    if system == SystemId::Full {
        // the lifting, checked operationally: the image of every full-system
        // term has a finite acyclic graph in the disjunction-free system
        let dctx = dm_ctx(&ctx);
        let dm_rules = RuleSet::system(SystemId::DisjFree);
        for (t, _) in corpus {
            match dm_term(&ctx, t) {
                Ok(image) => check(&dctx, &image, dm_rules, &mut r, "de morgan image graph"),
                Err(e) => r.fail(t, "translation", e),
            }
        }
    }
    r.finish()
}

fn bounded_length(
    spec: &GenSpec,
    corpus: &[(Term, Formula)],
    rules: RuleSet,
    what: &str,
) -> Report {
    let suite = if what == "rho2" {
        SuiteId::Rho2Termination
    } else {
        SuiteId::Rho3IotaTermination
    };
    let mut r = ReportBuilder::new(suite);
    let ctx = spec.ctx();
    for (t, _) in corpus {
        r.case();
        let g = match reduction_graph(&ctx, t, rules, GRAPH_NODE_BOUND) {
            Ok(g) => g,
            Err(e) => {
                r.fail(t, "graph construction", e);
                continue;
            }
        };
        if !g.is_sn() {
            r.fail(
                t,
                "termination of the restricted relation",
                g.verdict.name(),
            );
            continue;
        }
        // longest path in the acyclic quotient graph
        let mut adj = vec![Vec::new(); g.nodes.len()];
        for e in &g.edges {
            adj[e.from].push(e.to);
        }
        let mut longest = vec![usize::MAX; g.nodes.len()];
        fn dfs(v: usize, adj: &[Vec<usize>], longest: &mut [usize]) -> usize {
            if longest[v] != usize::MAX {
                return longest[v];
            }
            longest[v] = 0; // acyclic, so no revisit on the stack
            let best = adj[v]
                .iter()
                .map(|&w| 1 + dfs(w, adj, longest))
                .max()
                .unwrap_or(0);
            longest[v] = best;
            best
        }
        let len = dfs(0, &adj, &mut longest);
        if len > t.size() {
            r.fail(
                t,
                "trace length bounded by term size",
                format!("longest {what} trace has {len} steps, size is {}", t.size()),
            );
        }
    }
    r.finish()
}

fn derived_rule_eq1(spec: &GenSpec, corpus: &[(Term, Formula)]) -> Report {
    let mut r = ReportBuilder::new(SuiteId::DerivedRuleEq1);
    let ctx = spec.ctx();
    let bots = RuleSet::from_rules(&[RuleId::Rho1BotImp, RuleId::Rho1BotConj, RuleId::Rho1BotDisj]);
    for (t, _) in corpus {
        for (pos, rule) in redexes(&ctx, t, bots).unwrap_or_default() {
            r.case();
            let step = match make_step(&ctx, t, &pos, rule) {
                Ok(s) => s,
                Err(e) => {
                    r.fail(t, "contraction", e);
                    continue;
                }
            };
            if let Err(e) = expand_rho1bot(&ctx, &step) {
                r.fail(t, "derived-rule expansion", format!("{rule} at {pos}: {e}"));
            }
        }
    }
    r.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for id in SuiteId::ALL {
            assert_eq!(id.name().parse::<SuiteId>().unwrap(), id);
        }
    }

    #[test]
    fn subject_reduction_small_corpus_passes() {
        let report = run_suite(
            SuiteId::SubjectReduction,
            &GenSpec::standard(SystemId::Full, 5),
        );
        assert!(report.passed(), "{:?}", report.failures.first());
        assert!(report.cases_run > 0);
    }

    #[test]
    fn soundness_suites_pass_at_small_bound() {
        let report = run_suite(SuiteId::SoundnessDm, &GenSpec::standard(SystemId::Full, 5));
        assert!(report.passed(), "{:?}", report.failures.first());
        let report = run_suite(
            SuiteId::SoundnessCf,
            &GenSpec::standard(SystemId::DisjFree, 5),
        );
        assert!(report.passed(), "{:?}", report.failures.first());
    }

    #[test]
    fn translation_step_suites_pass_at_small_bound() {
        let report = run_suite(
            SuiteId::ThmTranslationStepDm,
            &GenSpec::standard(SystemId::Full, 5),
        );
        assert!(report.passed(), "{:?}", report.failures.first());
        let report = run_suite(
            SuiteId::ThmTranslationStepCf,
            &GenSpec::standard(SystemId::DisjFree, 5),
        );
        assert!(report.passed(), "{:?}", report.failures.first());
    }

    #[test]
    fn sequence_suites_pass_at_small_bound() {
        let report = run_suite(
            SuiteId::ThmTranslationSeqDm,
            &GenSpec::standard(SystemId::Full, 5),
        );
        assert!(report.passed(), "{:?}", report.failures.first());
        assert!(report.cases_run > 0);
    }

    #[test]
    fn sn_suites_pass_at_small_bound() {
        for id in [SuiteId::SnFull, SuiteId::SnDisjfree, SuiteId::SnSmall] {
            let report = run_suite(id, &GenSpec::standard(SystemId::Full, 5));
            assert!(report.passed(), "{id}: {:?}", report.failures.first());
        }
    }

    #[test]
    fn termination_measures_pass_at_small_bound() {
        for id in [SuiteId::Rho2Termination, SuiteId::Rho3IotaTermination] {
            let report = run_suite(id, &GenSpec::standard(SystemId::Full, 5));
            assert!(report.passed(), "{id}: {:?}", report.failures.first());
        }
    }

    #[test]
    fn derived_rule_suite_passes_at_small_bound() {
        let report = run_suite(
            SuiteId::DerivedRuleEq1,
            &GenSpec::standard(SystemId::Full, 6),
        );
        assert!(report.passed(), "{:?}", report.failures.first());
        assert!(report.cases_run > 0);
    }

    #[test]
    fn commutation_suite_finds_head_substitution_gap() {
        // the corpus contains peaks where a step substitutes a lambda for the
        // head of a rho4 redex; those cannot close with rho4 steps only
        let report = run_suite(
            SuiteId::LemmaCommutation,
            &GenSpec::standard(SystemId::Full, 6),
        );
        assert!(report.cases_run > 0);
        assert!(
            report
                .failures
                .iter()
                .any(|f| f.witness.contains("no commutation")),
            "expected the known head-substitution gap to surface"
        );
        assert!(report.notes.iter().any(|n| !n.contains("0 times")));
    }

    #[test]
    fn postponement_suite_finds_created_redex_gap() {
        let report = run_suite(
            SuiteId::LemmaPostponement,
            &GenSpec::standard(SystemId::Small, 5),
        );
        assert!(report.cases_run > 0);
        assert!(
            report
                .failures
                .iter()
                .any(|f| f.witness.contains("cannot postpone")),
            "expected the known created-redex gap to surface"
        );
    }

    #[test]
    fn report_serializes_with_camel_case_keys() {
        let report = run_suite(
            SuiteId::SubjectReduction,
            &GenSpec::standard(SystemId::Small, 3),
        );
        let v = serde_json::to_value(&report).unwrap();
        assert!(v.get("casesRun").is_some());
        assert!(v.get("failures").is_some());
    }
}
