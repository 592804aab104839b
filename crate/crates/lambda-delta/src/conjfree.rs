//! The conjunction-elimination translation from the disjunction-free system
//! into the small (implicational) system, its step and sequence simulations,
//! expansion of bottom-typed `rho1` steps into `rho1; rho3; beta*`, the
//! postponement of `rho3` and `kappa`, and the purification of sequences
//! down to small-system rules.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use crate::demorgan::{SimCertificate, SimError, SimStep};
use crate::rewrite::{make_step, redexes, RewriteError, RuleId, RuleSet, Step, Trace};
use crate::syntax::{
    alpha_eq, app, delta, fresh, is_identity_bot, lam, nameless, Formula, Position, Side, Term,
};
use crate::typing::{in_system, infer, Ctx, SystemId, TypeError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CfError {
    DisjPresent,
    Typing(TypeError),
}

impl fmt::Display for CfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CfError::DisjPresent => write!(f, "input contains disjunction"),
            CfError::Typing(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CfError {}

impl From<TypeError> for CfError {
    fn from(e: TypeError) -> Self {
        CfError::Typing(e)
    }
}

/// Formula translation: homomorphic except `A /\ B  |->  ~(A -> ~B)`.
pub fn cf_formula(a: &Formula) -> Result<Formula, CfError> {
    if a.contains_disj() {
        return Err(CfError::DisjPresent);
    }
    Ok(cf_formula_unchecked(a))
}

fn cf_formula_unchecked(a: &Formula) -> Formula {
    match a {
        Formula::Atom(_) | Formula::Bottom => a.clone(),
        Formula::Imp(l, r) => Formula::imp(cf_formula_unchecked(l), cf_formula_unchecked(r)),
        Formula::Conj(l, r) => Formula::neg(Formula::imp(
            cf_formula_unchecked(l),
            Formula::neg(cf_formula_unchecked(r)),
        )),
        Formula::Disj(_, _) => unreachable!(),
    }
}

pub fn cf_ctx(ctx: &Ctx) -> Ctx {
    ctx.map_formulas(cf_formula_unchecked)
}

/// Proof translation: `<M, N>` becomes `\f. f M N`; `pi_i(M)` becomes
/// `delta k. M (\x1. \x2. k x_i)` in general and `M (\x1. \x2. x_i)` when
/// the projected component has type `Bot`; homomorphic otherwise.
pub fn cf_term(ctx: &Ctx, t: &Term) -> Result<Term, CfError> {
    if !in_system(t, SystemId::DisjFree) {
        return Err(CfError::DisjPresent);
    }
    cf_term_in(ctx, t)
}

fn cf_term_in(ctx: &Ctx, t: &Term) -> Result<Term, CfError> {
    match t {
        Term::Var(x) => Ok(Term::Var(x.clone())),
        Term::Lam(x, a, m) => {
            let body = cf_term_in(&ctx.extended(x, a.clone()), m)?;
            Ok(lam(x, cf_formula_unchecked(a), body))
        }
        Term::App(m, n) => Ok(app(cf_term_in(ctx, m)?, cf_term_in(ctx, n)?)),
        Term::Delta(k, a, m) => {
            let body = cf_term_in(&ctx.extended(k, Formula::neg(a.clone())), m)?;
            Ok(delta(k, cf_formula_unchecked(a), body))
        }
        Term::Pair(m, n) => {
            let (a, b) = (infer(ctx, m)?, infer(ctx, n)?);
            let cm = cf_term_in(ctx, m)?;
            let cn = cf_term_in(ctx, n)?;
            let mut avoid = cm.free_vars();
            avoid.extend(cn.free_vars());
            let f = fresh(&avoid, "f");
            let f_ty = Formula::imp(
                cf_formula_unchecked(&a),
                Formula::neg(cf_formula_unchecked(&b)),
            );
            Ok(lam(&f, f_ty, app(app(Term::Var(f.clone()), cm), cn)))
        }
        Term::Proj(s, m) => {
            let Formula::Conj(a1, a2) = infer(ctx, m)? else {
                return Err(CfError::Typing(TypeError::Mismatch {
                    pos: Position::root(),
                    reason: "projection from non-conjunction".to_string(),
                }));
            };
            let cm = cf_term_in(ctx, m)?;
            let (ca1, ca2) = (cf_formula_unchecked(&a1), cf_formula_unchecked(&a2));
            let picked = (*s.pick(&a1, &a2)).clone();
            let mut avoid = cm.free_vars();
            let x1 = fresh(&avoid, "x1");
            avoid.insert(x1.clone());
            let x2 = fresh(&avoid, "x2");
            avoid.insert(x2.clone());
            let xi = Term::Var(match s {
                Side::Fst => x1.clone(),
                Side::Snd => x2.clone(),
            });
            if picked.is_bottom() {
                let selector = lam(&x1, ca1, lam(&x2, ca2, xi));
                Ok(app(cm, selector))
            } else {
                let k = fresh(&avoid, "k");
                let selector = lam(&x1, ca1, lam(&x2, ca2, app(Term::Var(k.clone()), xi)));
                Ok(delta(&k, cf_formula_unchecked(&picked), app(cm, selector)))
            }
        }
        Term::Inj(_, _, _) | Term::Case { .. } => Err(CfError::DisjPresent),
    }
}

impl From<CfError> for SimError {
    fn from(e: CfError) -> Self {
        match e {
            CfError::Typing(t) => SimError::Typing(t),
            CfError::DisjPresent => SimError::Typing(TypeError::Mismatch {
                pos: Position::root(),
                reason: "input contains disjunction".to_string(),
            }),
        }
    }
}

type Script = Vec<(Position, RuleId)>;

fn prefixed(prefix: &[usize], script: Script) -> Script {
    script
        .into_iter()
        .map(|(Position(p), r)| {
            let mut v = prefix.to_vec();
            v.extend(p);
            (Position(v), r)
        })
        .collect()
}

fn not_a_redex(rule: RuleId) -> SimError {
    SimError::Rewrite(RewriteError::NotARedex {
        pos: Position::root(),
        rule,
    })
}

fn cf_root_profile(ctx: &Ctx, m: &Term, rule: RuleId) -> Result<(Script, Script, u8), SimError> {
    use RuleId::*;
    let at = |p: &[usize], r: RuleId| (Position(p.to_vec()), r);
    Ok(match rule {
        BetaImp | Rho1Imp | Rho1BotImp | Rho2 => (vec![at(&[], rule)], vec![], 1),
        BetaConj => {
            let Term::Proj(s, inner) = m else {
                return Err(not_a_redex(rule));
            };
            let Formula::Conj(a1, a2) = infer(ctx, inner)? else {
                return Err(not_a_redex(rule));
            };
            if s.pick(&a1, &a2).is_bottom() {
                (
                    vec![at(&[], BetaImp), at(&[0], BetaImp), at(&[], BetaImp)],
                    vec![],
                    1,
                )
            } else {
                (
                    vec![
                        at(&[0], BetaImp),
                        at(&[0, 0], BetaImp),
                        at(&[0], BetaImp),
                        at(&[], Rho2),
                    ],
                    vec![],
                    1,
                )
            }
        }
        Rho1BotConj => (vec![at(&[], Rho1BotImp)], vec![], 1),
        Rho1Conj => {
            let Term::Proj(s, inner) = m else {
                return Err(not_a_redex(rule));
            };
            let Term::Delta(k, f, body) = &**inner else {
                return Err(not_a_redex(rule));
            };
            let Formula::Conj(a1, a2) = f else {
                return Err(not_a_redex(rule));
            };
            if s.pick(&**a1, &**a2).is_bottom() {
                // the bottom clause of the projection translation applies and
                // one plain rho1 step lands exactly on the translated reduct
                (vec![at(&[], Rho1Imp)], vec![], 2)
            } else {
                let body_ctx = ctx.extended(k, Formula::neg(f.clone()));
                let cbody = cf_term_in(&body_ctx, body)?;
                let residual = cbody
                    .free_occurrences(k)
                    .into_iter()
                    .map(|q| {
                        let mut p = vec![0];
                        p.extend(q.0);
                        p.push(0);
                        (Position(p), Rho4)
                    })
                    .collect();
                (vec![at(&[0], Rho1BotImp)], residual, 2)
            }
        }
        BetaDisj | PiDisj | Rho1Disj | Rho1BotDisj | PiImp | PiConj => {
            return Err(SimError::Typing(TypeError::Mismatch {
                pos: Position::root(),
                reason: "rule cannot fire on a disjunction-free term".to_string(),
            }))
        }
        Rho3 | Rho4 | Kappa | Iota => return Err(SimError::AuxSourceRule(rule)),
    })
}

/// Offset of source child `i` inside the translation of its parent.
fn cf_child_prefix(ctx: &Ctx, parent: &Term, i: usize) -> Result<Vec<usize>, CfError> {
    Ok(match parent {
        Term::Lam(_, _, _) | Term::Delta(_, _, _) => vec![0],
        Term::App(_, _) => vec![i],
        Term::Pair(_, _) => match i {
            0 => vec![0, 0, 1],
            1 => vec![0, 1],
            _ => unreachable!(),
        },
        Term::Proj(s, inner) => {
            let Formula::Conj(a1, a2) = infer(ctx, inner)? else {
                return Err(CfError::Typing(TypeError::Mismatch {
                    pos: Position::root(),
                    reason: "projection from non-conjunction".to_string(),
                }));
            };
            if s.pick(&a1, &a2).is_bottom() {
                vec![0]
            } else {
                vec![0, 0]
            }
        }
        _ => return Err(CfError::DisjPresent),
    })
}

fn ctx_at_child(ctx: &Ctx, parent: &Term, i: usize) -> Ctx {
    match (parent, i) {
        (Term::Lam(x, a, _), 0) => ctx.extended(x, a.clone()),
        (Term::Delta(k, a, _), 0) => ctx.extended(k, Formula::neg(a.clone())),
        _ => ctx.clone(),
    }
}

fn cf_scripts(
    ctx: &Ctx,
    m: &Term,
    path: &[usize],
    rule: RuleId,
) -> Result<(Script, Script, u8), SimError> {
    let Some((&i, rest)) = path.split_first() else {
        return cf_root_profile(ctx, m, rule);
    };
    let child = m.child(i).ok_or(RewriteError::BadPosition {
        pos: Position(path.to_vec()),
    })?;
    let child_ctx = ctx_at_child(ctx, m, i);
    let (t, r, item) = cf_scripts(&child_ctx, child, rest, rule)?;
    let prefix = cf_child_prefix(ctx, m, i)?;
    Ok((prefixed(&prefix, t), prefixed(&prefix, r), item))
}

/// Simulates one disjunction-free step through the conjunction-elimination
/// translation, replaying target and residual and checking they meet.
pub fn simulate_step_cf(ctx: &Ctx, step: &Step) -> Result<SimStep, SimError> {
    let (tscript, rscript, item) = cf_scripts(ctx, &step.before, &step.pos.0, step.rule)?;
    let cctx = cf_ctx(ctx);
    let before = cf_term(ctx, &step.before)?;
    let after = cf_term(ctx, &step.after)?;
    let target = Trace::replay(&cctx, before, &tscript)?;
    let residual = Trace::replay(&cctx, after, &rscript)?;
    if !alpha_eq(target.endpoint(), residual.endpoint()) {
        return Err(SimError::DiagramMismatch {
            target_end: Box::new(target.endpoint().clone()),
            residual_end: Box::new(residual.endpoint().clone()),
        });
    }
    Ok(SimStep {
        item,
        target,
        residual,
    })
}

/// Expands a bottom-typed `rho1` step into `rho1`, `rho3` and one `beta_imp`
/// per substituted occurrence, reaching the same endpoint up to alpha.
pub fn expand_rho1bot(ctx: &Ctx, step: &Step) -> Result<Trace, SimError> {
    use RuleId::*;
    let plain = match step.rule {
        Rho1BotImp => Rho1Imp,
        Rho1BotConj => Rho1Conj,
        Rho1BotDisj => Rho1Disj,
        other => {
            return Err(SimError::Rewrite(RewriteError::NotARedex {
                pos: step.pos.clone(),
                rule: other,
            }))
        }
    };
    let redex = step
        .before
        .subterm(&step.pos)
        .ok_or(RewriteError::BadPosition {
            pos: step.pos.clone(),
        })?;
    let (k, body) = match (step.rule, redex) {
        (Rho1BotImp, Term::App(f, _)) => match &**f {
            Term::Delta(k, _, body) => (k, body),
            _ => return Err(not_a_redex(step.rule)),
        },
        (Rho1BotConj, Term::Proj(_, inner)) => match &**inner {
            Term::Delta(k, _, body) => (k, body),
            _ => return Err(not_a_redex(step.rule)),
        },
        (Rho1BotDisj, Term::Case { scrut, .. }) => match &**scrut {
            Term::Delta(k, _, body) => (k, body),
            _ => return Err(not_a_redex(step.rule)),
        },
        _ => return Err(not_a_redex(step.rule)),
    };
    let mut script: Script = vec![(step.pos.clone(), plain), (step.pos.clone(), Rho3)];
    for q in body.free_occurrences(k) {
        let mut p = step.pos.0.clone();
        p.extend(q.0);
        p.push(0);
        script.push((Position(p), BetaImp));
    }
    let trace = Trace::replay(ctx, step.before.clone(), &script)?;
    if !alpha_eq(trace.endpoint(), &step.after) {
        return Err(SimError::DiagramMismatch {
            target_end: Box::new(trace.endpoint().clone()),
            residual_end: Box::new(step.after.clone()),
        });
    }
    Ok(trace)
}

/// Sequence translation into the small system plus `rho3`: the same residual
/// tiling as the De Morgan sequence translation, followed by expansion of
/// every bottom-typed `rho1` step.
pub fn simulate_sequence_cf(ctx: &Ctx, source: &Trace) -> Result<SimCertificate, SimError> {
    let cctx = cf_ctx(ctx);
    let start = cf_term(ctx, &source.start)?;
    let mut target = Trace::new(start.clone());
    let mut chain = Trace::new(start);
    for step in &source.steps {
        let ss = simulate_step_cf(ctx, step)?;
        let (transported, closing) = transport_chain(&cctx, &chain, &ss.target)?;
        let rebased = Trace::replay(&cctx, target.endpoint().clone(), &transported.script())?;
        target.steps.extend(rebased.steps);
        let mut script = ss.residual.script();
        script.extend(closing.script());
        chain = Trace::replay(&cctx, ss.residual.start.clone(), &script)?;
    }
    // rho1bot becomes a derived rule: expand each such step in place
    let mut expanded_script: Script = Vec::new();
    let mut cur = target.start.clone();
    for step in &target.steps {
        let rebased = make_step(&cctx, &cur, &step.pos, step.rule)?;
        if step.rule == RuleId::Rho1BotImp {
            let exp = expand_rho1bot(&cctx, &rebased)?;
            expanded_script.extend(exp.script());
            cur = exp.endpoint().clone();
        } else {
            expanded_script.push((step.pos.clone(), step.rule));
            cur = rebased.after;
        }
    }
    let target = Trace::replay(&cctx, target.start.clone(), &expanded_script)?;
    let rho2_count = source.count_rule(RuleId::Rho2);
    // expansion preserves endpoints up to alpha, so the chain still closes
    let closes = alpha_eq(chain.endpoint(), target.endpoint());
    let mut cert = SimCertificate {
        source: source.clone(),
        target,
        rho4_chain: chain,
        rho2_count,
        ok: false,
        systems: Some(("disjfree", "small+rho3")),
    };
    cert.ok = closes && cert.length_bound_holds();
    Ok(cert)
}

// The tiling helpers mirror the De Morgan ones but live on the cf side so the
// two pipelines stay independently exercisable.
fn transport_one(ctx: &Ctx, rho4_step: &Step, trace: &Trace) -> Result<(Trace, Trace), SimError> {
    if trace.is_empty() {
        let closing = Trace {
            start: trace.start.clone(),
            steps: vec![rho4_step.clone()],
        };
        return Ok((Trace::new(rho4_step.after.clone()), closing));
    }
    let first = &trace.steps[0];
    let (transported_head, closing_head) = crate::demorgan::commute_rho4(ctx, rho4_step, first)?;
    let rest = Trace {
        start: first.after.clone(),
        steps: trace.steps[1..].to_vec(),
    };
    let (rest_transported, rest_closing) = transport_chain(ctx, &closing_head, &rest)?;
    let rebased = Trace::replay(
        ctx,
        transported_head.endpoint().clone(),
        &rest_transported.script(),
    )?;
    let mut steps = transported_head.steps;
    steps.extend(rebased.steps);
    Ok((
        Trace {
            start: rho4_step.after.clone(),
            steps,
        },
        rest_closing,
    ))
}

fn transport_chain(ctx: &Ctx, chain: &Trace, trace: &Trace) -> Result<(Trace, Trace), SimError> {
    let mut cur = trace.clone();
    let mut closing_script: Script = Vec::new();
    for step in &chain.steps {
        let (transported, closing) = transport_one(ctx, step, &cur)?;
        closing_script.extend(closing.script());
        cur = transported;
    }
    let closing = Trace::replay(ctx, trace.endpoint().clone(), &closing_script)?;
    Ok((cur, closing))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PostponeError {
    NotChained,
    WrongFirstRule {
        expected: RuleId,
        found: RuleId,
    },
    SecondIsPostponed {
        rule: RuleId,
    },
    Rewrite(RewriteError),
    /// No leading step followed by a postponed-rule tail reaches the
    /// endpoint. Arises when the postponed step created the second redex by
    /// deleting the binder node between a `delta` and its body application.
    CannotPostpone {
        peak: Box<Term>,
        first: RuleId,
        second: RuleId,
    },
    SearchBudget,
}

impl fmt::Display for PostponeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PostponeError::NotChained => write!(f, "steps do not chain"),
            PostponeError::WrongFirstRule { expected, found } => {
                write!(f, "first step must be {expected}, got {found}")
            }
            PostponeError::SecondIsPostponed { rule } => {
                write!(f, "second step may not be {rule}")
            }
            PostponeError::Rewrite(e) => write!(f, "{e}"),
            PostponeError::CannotPostpone {
                peak,
                first,
                second,
            } => {
                write!(f, "cannot postpone {first} before {second} from {peak}")
            }
            PostponeError::SearchBudget => write!(f, "postponement search budget exceeded"),
        }
    }
}

impl std::error::Error for PostponeError {}

impl From<RewriteError> for PostponeError {
    fn from(e: RewriteError) -> Self {
        PostponeError::Rewrite(e)
    }
}

const POSTPONE_SEARCH_CAP: usize = 100_000;

type Closure = (
    Vec<Term>,
    HashMap<crate::syntax::DbTerm, usize>,
    Vec<Option<(usize, Step)>>,
    bool,
);

/// All reducts of `start` under `rule` only, keyed up to alpha, with paths.
fn rule_closure(ctx: &Ctx, start: &Term, rule: RuleId) -> Result<Closure, RewriteError> {
    let mut nodes = vec![start.clone()];
    let mut index = HashMap::from([(nameless(start), 0usize)]);
    let mut parent: Vec<Option<(usize, Step)>> = vec![None];
    let mut capped = false;
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let cur = nodes[i].clone();
        for (pos, r) in redexes(ctx, &cur, RuleSet::only(rule))? {
            let step = make_step(ctx, &cur, &pos, r)?;
            let key = nameless(&step.after);
            if index.contains_key(&key) {
                continue;
            }
            if nodes.len() >= POSTPONE_SEARCH_CAP {
                capped = true;
                continue;
            }
            let j = nodes.len();
            nodes.push(step.after.clone());
            index.insert(key, j);
            parent.push(Some((i, step)));
            queue.push_back(j);
        }
    }
    Ok((nodes, index, parent, capped))
}

fn path_from(closure: &Closure, target: &Term) -> Option<Trace> {
    let (nodes, index, parent, _) = closure;
    let &i = index.get(&nameless(target))?;
    let mut steps = Vec::new();
    let mut cur = i;
    while let Some((prev, step)) = &parent[cur] {
        steps.push(step.clone());
        cur = *prev;
    }
    steps.reverse();
    Some(Trace {
        start: nodes[0].clone(),
        steps,
    })
}

fn postpone(
    ctx: &Ctx,
    postponed: RuleId,
    first: &Step,
    second: &Step,
    extra_leading: RuleSet,
) -> Result<(Step, Trace), PostponeError> {
    if first.rule != postponed {
        return Err(PostponeError::WrongFirstRule {
            expected: postponed,
            found: first.rule,
        });
    }
    if second.rule == postponed {
        return Err(PostponeError::SecondIsPostponed { rule: second.rule });
    }
    if first.after != second.before {
        return Err(PostponeError::NotChained);
    }
    let u = &first.before;
    let goal = &second.after;
    let leading_rules = RuleSet::only(second.rule).union(extra_leading);
    let mut capped = false;
    for (pos, rule) in redexes(ctx, u, leading_rules)? {
        let leading = make_step(ctx, u, &pos, rule)?;
        let closure = rule_closure(ctx, &leading.after, postponed)?;
        capped |= closure.3;
        if let Some(trailing) = path_from(&closure, goal) {
            return Ok((leading, trailing));
        }
    }
    if capped {
        return Err(PostponeError::SearchBudget);
    }
    Err(PostponeError::CannotPostpone {
        peak: Box::new(u.clone()),
        first: first.rule,
        second: second.rule,
    })
}

/// Postpones a `rho3` step past the following step: returns a leading step
/// (the same rule, or `kappa` for the created identity-application case)
/// and a trailing `rho3`-only trace reaching the same endpoint.
pub fn postpone_rho3(
    ctx: &Ctx,
    first: &Step,
    second: &Step,
) -> Result<(Step, Trace), PostponeError> {
    // the exception of the postponement lemma: a beta step on an identity
    // application created by the rho3 substitution may lead with kappa
    let ext = if second.rule == RuleId::BetaImp || second.rule == RuleId::Iota {
        RuleSet::only(RuleId::Kappa)
    } else {
        RuleSet::EMPTY
    };
    postpone(ctx, RuleId::Rho3, first, second, ext)
}

/// Postpones a `kappa` step past the following step: exact swap with a
/// trailing `kappa`-only trace (one step per residual copy).
pub fn postpone_kappa(
    ctx: &Ctx,
    first: &Step,
    second: &Step,
) -> Result<(Step, Trace), PostponeError> {
    postpone(ctx, RuleId::Kappa, first, second, RuleSet::EMPTY)
}

fn is_iota_form(step: &Step) -> bool {
    if step.rule == RuleId::Iota {
        return true;
    }
    if step.rule != RuleId::BetaImp {
        return false;
    }
    matches!(
        step.before.subterm(&step.pos),
        Some(Term::App(h, _)) if is_identity_bot(h)
    )
}

/// The outcome of purifying a small-system-plus-`rho3` sequence: the output
/// trace uses small-system rules only and its length satisfies
/// `|output| >= |input| - m - i` with `m` the `rho3` count and `i` the
/// identity-application count of the input.
#[derive(Debug, Clone)]
pub struct PurifyOutcome {
    pub output: Trace,
    pub rho3_count: usize,
    pub iota_count: usize,
    pub kappa_converted: usize,
    pub length_ok: bool,
}

/// Bubbles `rho3` steps rightward, drops the `rho3` tail, then does the same
/// for the `kappa` steps produced by the conversions.
pub fn purify_sequence(ctx: &Ctx, source: &Trace) -> Result<PurifyOutcome, PostponeError> {
    let rho3_count = source.count_rule(RuleId::Rho3);
    let iota_count = source.steps.iter().filter(|s| is_iota_form(s)).count();

    let bubble = |mut trace: Trace, rule: RuleId| -> Result<Trace, PostponeError> {
        loop {
            let idx = (0..trace.steps.len().saturating_sub(1))
                .rev()
                .find(|&i| trace.steps[i].rule == rule && trace.steps[i + 1].rule != rule);
            let Some(i) = idx else {
                break;
            };
            let (leading, trailing) = if rule == RuleId::Rho3 {
                postpone_rho3(ctx, &trace.steps[i], &trace.steps[i + 1])?
            } else {
                postpone_kappa(ctx, &trace.steps[i], &trace.steps[i + 1])?
            };
            let mut script: Script = trace.steps[..i]
                .iter()
                .map(|s| (s.pos.clone(), s.rule))
                .collect();
            script.push((leading.pos.clone(), leading.rule));
            script.extend(trailing.script());
            script.extend(trace.steps[i + 2..].iter().map(|s| (s.pos.clone(), s.rule)));
            trace = Trace::replay(ctx, trace.start.clone(), &script)?;
        }
        while trace.steps.last().map(|s| s.rule) == Some(rule) {
            trace.steps.pop();
        }
        Ok(trace)
    };

    let after_rho3 = bubble(source.clone(), RuleId::Rho3)?;
    let kappa_converted = after_rho3.count_rule(RuleId::Kappa);
    let output = bubble(after_rho3, RuleId::Kappa)?;
    let length_ok = output.len() + rho3_count + iota_count >= source.len();
    Ok(PurifyOutcome {
        output,
        rho3_count,
        iota_count,
        kappa_converted,
        length_ok,
    })
}
