//! The De Morgan translation into the disjunction-free system, with the
//! step-level simulation of reduction, commutation of reduction steps with
//! the auxiliary `rho4` rule, and the length-certified translation of whole
//! reduction sequences.

use std::collections::HashMap;
use std::fmt;

use serde_json::{json, Map, Value};

use crate::rewrite::{make_step, redexes, RewriteError, RuleId, RuleSet, Step, Trace};
use crate::syntax::{
    alpha_eq, app, delta, fresh, lam, nameless, pair, proj, Formula, Position, Term,
};
use crate::typing::{infer, Ctx, TypeError};

/// Formula translation: homomorphic except `A \/ B  |->  ~(~A /\ ~B)`.
pub fn dm_formula(a: &Formula) -> Formula {
    match a {
        Formula::Atom(_) | Formula::Bottom => a.clone(),
        Formula::Imp(l, r) => Formula::imp(dm_formula(l), dm_formula(r)),
        Formula::Conj(l, r) => Formula::conj(dm_formula(l), dm_formula(r)),
        Formula::Disj(l, r) => Formula::neg(Formula::conj(
            Formula::neg(dm_formula(l)),
            Formula::neg(dm_formula(r)),
        )),
    }
}

pub fn dm_ctx(ctx: &Ctx) -> Ctx {
    ctx.map_formulas(dm_formula)
}

/// Proof translation. Homomorphic except for the disjunction constructors:
/// an injection becomes `\w. pi_i(w) M`, and a case becomes an application
/// of the translated scrutinee to the pair of continuation branches, with a
/// fresh `delta` around it unless the branches have type `Bot`.
/// The case clause is type-directed, so the input must be well-typed.
pub fn dm_term(ctx: &Ctx, t: &Term) -> Result<Term, TypeError> {
    match t {
        Term::Var(x) => Ok(Term::Var(x.clone())),
        Term::Lam(x, a, m) => {
            let body = dm_term(&ctx.extended(x, a.clone()), m)?;
            Ok(lam(x, dm_formula(a), body))
        }
        Term::App(m, n) => Ok(app(dm_term(ctx, m)?, dm_term(ctx, n)?)),
        Term::Pair(m, n) => Ok(pair(dm_term(ctx, m)?, dm_term(ctx, n)?)),
        Term::Proj(s, m) => Ok(proj(*s, dm_term(ctx, m)?)),
        Term::Inj(s, d, m) => {
            let Formula::Disj(a, b) = d else {
                return Err(TypeError::Mismatch {
                    pos: Position::root(),
                    reason: format!("injection annotation {d} is not a disjunction"),
                });
            };
            let dm = dm_term(ctx, m)?;
            let w = fresh(&dm.free_vars(), "w");
            let pair_ty = Formula::conj(Formula::neg(dm_formula(a)), Formula::neg(dm_formula(b)));
            Ok(lam(&w, pair_ty, app(proj(*s, Term::Var(w.clone())), dm)))
        }
        Term::Case {
            scrut,
            lname,
            lty,
            lbody,
            rname,
            rty,
            rbody,
        } => {
            let branch_ty = infer(&ctx.extended(lname, lty.clone()), lbody)?;
            let dscrut = dm_term(ctx, scrut)?;
            let dp = dm_term(&ctx.extended(lname, lty.clone()), lbody)?;
            let dq = dm_term(&ctx.extended(rname, rty.clone()), rbody)?;
            let (la, ra) = (dm_formula(lty), dm_formula(rty));
            if branch_ty.is_bottom() {
                Ok(app(dscrut, pair(lam(lname, la, dp), lam(rname, ra, dq))))
            } else {
                let mut avoid = dscrut.free_vars();
                avoid.extend(dp.free_vars());
                avoid.extend(dq.free_vars());
                avoid.insert(lname.clone());
                avoid.insert(rname.clone());
                let k = fresh(&avoid, "k");
                Ok(delta(
                    &k,
                    dm_formula(&branch_ty),
                    app(
                        dscrut,
                        pair(
                            lam(lname, la, app(Term::Var(k.clone()), dp)),
                            lam(rname, ra, app(Term::Var(k.clone()), dq)),
                        ),
                    ),
                ))
            }
        }
        Term::Delta(k, a, m) => {
            let body = dm_term(&ctx.extended(k, Formula::neg(a.clone())), m)?;
            Ok(delta(k, dm_formula(a), body))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimError {
    Typing(TypeError),
    Rewrite(RewriteError),
    AuxSourceRule(RuleId),
    /// Replaying the constructed scripts did not close the diagram.
    DiagramMismatch {
        target_end: Box<Term>,
        residual_end: Box<Term>,
    },
    Commute(CommuteError),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Typing(e) => write!(f, "{e}"),
            SimError::Rewrite(e) => write!(f, "{e}"),
            SimError::AuxSourceRule(r) => {
                write!(
                    f,
                    "source step uses auxiliary rule {r}; only system steps translate"
                )
            }
            SimError::DiagramMismatch {
                target_end,
                residual_end,
            } => write!(
                f,
                "simulation endpoints differ: target ends at {target_end}, residual ends at {residual_end}"
            ),
            SimError::Commute(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SimError {}

impl From<TypeError> for SimError {
    fn from(e: TypeError) -> Self {
        SimError::Typing(e)
    }
}

impl From<RewriteError> for SimError {
    fn from(e: RewriteError) -> Self {
        SimError::Rewrite(e)
    }
}

impl From<CommuteError> for SimError {
    fn from(e: CommuteError) -> Self {
        SimError::Commute(e)
    }
}

/// The image of one source step: a target trace from the translation of the
/// step's start, a residual chain of `rho4` steps from the translation of the
/// step's end, and the theorem item the source rule falls under. Both traces
/// are replayed mechanically on construction and meet up to alpha.
#[derive(Debug, Clone)]
pub struct SimStep {
    pub item: u8,
    pub target: Trace,
    pub residual: Trace,
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

/// Offset of source child `i` inside the translation of its parent.
fn dm_child_prefix(ctx: &Ctx, parent: &Term, i: usize) -> Result<Vec<usize>, TypeError> {
    Ok(match parent {
        Term::Lam(_, _, _) | Term::Proj(_, _) | Term::Delta(_, _, _) => vec![0],
        Term::App(_, _) | Term::Pair(_, _) => vec![i],
        Term::Inj(_, _, _) => vec![0, 1],
        Term::Case {
            lname, lty, lbody, ..
        } => {
            let bot = infer(&ctx.extended(lname, lty.clone()), lbody)?.is_bottom();
            match (bot, i) {
                (true, 0) => vec![0],
                (true, 1) => vec![1, 0, 0],
                (true, 2) => vec![1, 1, 0],
                (false, 0) => vec![0, 0],
                (false, 1) => vec![0, 1, 0, 0, 1],
                (false, 2) => vec![0, 1, 1, 0, 1],
                _ => unreachable!(),
            }
        }
        Term::Var(_) => unreachable!(),
    })
}

fn ctx_at_child(ctx: &Ctx, parent: &Term, i: usize) -> Ctx {
    match (parent, i) {
        (Term::Lam(x, a, _), 0) => ctx.extended(x, a.clone()),
        (Term::Delta(k, a, _), 0) => ctx.extended(k, Formula::neg(a.clone())),
        (Term::Case { lname, lty, .. }, 1) => ctx.extended(lname, lty.clone()),
        (Term::Case { rname, rty, .. }, 2) => ctx.extended(rname, rty.clone()),
        _ => ctx.clone(),
    }
}

fn not_a_redex(rule: RuleId) -> SimError {
    SimError::Rewrite(RewriteError::NotARedex {
        pos: Position::root(),
        rule,
    })
}

/// Target and residual scripts for a redex at the root of `m`, derived from
/// the shape of the translation clauses.
fn dm_root_profile(ctx: &Ctx, m: &Term, rule: RuleId) -> Result<(Script, Script, u8), SimError> {
    use RuleId::*;
    let at = |p: &[usize], r: RuleId| (Position(p.to_vec()), r);
    Ok(match rule {
        BetaImp | BetaConj | Rho1Imp | Rho1Conj | Rho1BotImp | Rho1BotConj | Rho2 => {
            (vec![at(&[], rule)], vec![], 1)
        }
        Rho1BotDisj => (vec![at(&[], Rho1BotImp)], vec![], 2),
        BetaDisj => {
            let Term::Case {
                lname, lty, lbody, ..
            } = m
            else {
                return Err(not_a_redex(rule));
            };
            let bot = infer(&ctx.extended(lname, lty.clone()), lbody)?.is_bottom();
            if bot {
                (
                    vec![at(&[], BetaImp), at(&[0], BetaConj), at(&[], BetaImp)],
                    vec![],
                    3,
                )
            } else {
                (
                    vec![
                        at(&[0], BetaImp),
                        at(&[0, 0], BetaConj),
                        at(&[0], BetaImp),
                        at(&[], Rho2),
                    ],
                    vec![],
                    3,
                )
            }
        }
        PiImp | PiConj => {
            let redex_ty = infer(ctx, m)?;
            let rho = match (rule, redex_ty.is_bottom()) {
                (PiImp, false) => Rho1Imp,
                (PiImp, true) => Rho1BotImp,
                (PiConj, false) => Rho1Conj,
                (PiConj, true) => Rho1BotConj,
                _ => unreachable!(),
            };
            if redex_ty.is_bottom() {
                (
                    vec![
                        at(&[], rho),
                        at(&[1, 0, 0], BetaImp),
                        at(&[1, 1, 0], BetaImp),
                    ],
                    vec![],
                    3,
                )
            } else {
                (
                    vec![
                        at(&[], rho),
                        at(&[0, 1, 0, 0], BetaImp),
                        at(&[0, 1, 1, 0], BetaImp),
                    ],
                    vec![],
                    3,
                )
            }
        }
        Rho1Disj => {
            let Term::Case {
                scrut,
                lname,
                lty,
                lbody,
                ..
            } = m
            else {
                return Err(not_a_redex(rule));
            };
            let Term::Delta(k, f, body) = &**scrut else {
                return Err(not_a_redex(rule));
            };
            let branch_bot = infer(&ctx.extended(lname, lty.clone()), lbody)?.is_bottom();
            if branch_bot {
                // the translated scrutinee application is at type Bot and the
                // plain rho1 step lands exactly on the translated reduct
                (vec![at(&[], Rho1Imp)], vec![], 4)
            } else {
                let body_ctx = ctx.extended(k, Formula::neg(f.clone()));
                let dbody = dm_term(&body_ctx, body)?;
                let residual = dbody
                    .free_occurrences(k)
                    .into_iter()
                    .map(|q| {
                        let mut p = vec![0];
                        p.extend(q.0);
                        p.push(0);
                        (Position(p), Rho4)
                    })
                    .collect();
                (vec![at(&[0], Rho1BotImp)], residual, 4)
            }
        }
        PiDisj => {
            let redex_ty = infer(ctx, m)?;
            if redex_ty.is_bottom() {
                (
                    vec![
                        at(&[], Rho1BotImp),
                        at(&[1, 0, 0], BetaImp),
                        at(&[1, 1, 0], BetaImp),
                    ],
                    vec![],
                    4,
                )
            } else {
                (
                    vec![
                        at(&[0], Rho1BotImp),
                        at(&[0, 1, 0, 0], BetaImp),
                        at(&[0, 1, 1, 0], BetaImp),
                    ],
                    vec![at(&[0, 1, 0, 0], Rho4), at(&[0, 1, 1, 0], Rho4)],
                    4,
                )
            }
        }
        Rho3 | Rho4 | Kappa | Iota => return Err(SimError::AuxSourceRule(rule)),
    })
}

fn dm_scripts(
    ctx: &Ctx,
    m: &Term,
    path: &[usize],
    rule: RuleId,
) -> Result<(Script, Script, u8), SimError> {
    let Some((&i, rest)) = path.split_first() else {
        return dm_root_profile(ctx, m, rule);
    };
    let child = m.child(i).ok_or(RewriteError::BadPosition {
        pos: Position(path.to_vec()),
    })?;
    let child_ctx = ctx_at_child(ctx, m, i);
    let (t, r, item) = dm_scripts(&child_ctx, child, rest, rule)?;
    let prefix = dm_child_prefix(ctx, m, i)?;
    Ok((prefixed(&prefix, t), prefixed(&prefix, r), item))
}

/// Simulates one source step through the translation: builds the target
/// trace from `dm(before)` and the residual `rho4` chain from `dm(after)`,
/// replays both, and checks that they meet up to alpha.
pub fn simulate_step(ctx: &Ctx, step: &Step) -> Result<SimStep, SimError> {
    let (tscript, rscript, item) = dm_scripts(ctx, &step.before, &step.pos.0, step.rule)?;
    let dctx = dm_ctx(ctx);
    let dm_before = dm_term(ctx, &step.before)?;
    let dm_after = dm_term(ctx, &step.after)?;
    let target = Trace::replay(&dctx, dm_before, &tscript)?;
    let residual = Trace::replay(&dctx, dm_after, &rscript)?;
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

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CommuteError {
    NotRho4 {
        rule: RuleId,
    },
    MismatchedPeak,
    Rewrite(RewriteError),
    /// No single transported step plus `rho4*` closing exists. This happens
    /// exactly when the competing step substitutes a non-variable term for
    /// the head variable of the `rho4` redex.
    CannotCommute {
        peak: Box<Term>,
        rho4_pos: Position,
        r_pos: Position,
        r_rule: RuleId,
    },
    SearchBudget,
}

impl fmt::Display for CommuteError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CommuteError::NotRho4 { rule } => write!(f, "first step must be rho4, got {rule}"),
            CommuteError::MismatchedPeak => write!(f, "the two steps do not share a start term"),
            CommuteError::Rewrite(e) => write!(f, "{e}"),
            CommuteError::CannotCommute {
                peak,
                rho4_pos,
                r_pos,
                r_rule,
            } => write!(
                f,
                "no commutation for the peak at {peak}: rho4 at {rho4_pos} vs {r_rule} at {r_pos}"
            ),
            CommuteError::SearchBudget => write!(f, "rho4 closure search budget exceeded"),
        }
    }
}

impl std::error::Error for CommuteError {}

impl From<RewriteError> for CommuteError {
    fn from(e: RewriteError) -> Self {
        CommuteError::Rewrite(e)
    }
}

const RHO4_SEARCH_CAP: usize = 100_000;

struct Rho4Closure {
    nodes: Vec<Term>,
    index: HashMap<crate::syntax::DbTerm, usize>,
    parent: Vec<Option<(usize, Step)>>,
    capped: bool,
}

fn rho4_closure(ctx: &Ctx, start: &Term) -> Result<Rho4Closure, RewriteError> {
    let mut c = Rho4Closure {
        nodes: vec![start.clone()],
        index: HashMap::from([(nameless(start), 0)]),
        parent: vec![None],
        capped: false,
    };
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let cur = c.nodes[i].clone();
        for (pos, rule) in redexes(ctx, &cur, RuleSet::only(RuleId::Rho4))? {
            let step = make_step(ctx, &cur, &pos, rule)?;
            let key = nameless(&step.after);
            if c.index.contains_key(&key) {
                continue;
            }
            if c.nodes.len() >= RHO4_SEARCH_CAP {
                c.capped = true;
                continue;
            }
            let j = c.nodes.len();
            c.nodes.push(step.after.clone());
            c.index.insert(key, j);
            c.parent.push(Some((i, step)));
            queue.push_back(j);
        }
    }
    Ok(c)
}

impl Rho4Closure {
    fn path_to_alpha(&self, target: &Term) -> Option<Trace> {
        let &i = self.index.get(&nameless(target))?;
        let mut steps = Vec::new();
        let mut cur = i;
        while let Some((prev, step)) = &self.parent[cur] {
            steps.push(step.clone());
            cur = *prev;
        }
        steps.reverse();
        Some(Trace {
            start: self.nodes[0].clone(),
            steps,
        })
    }
}

/// Commutation of a `rho4` step with another step from the same term:
/// returns a transported trace from the `rho4` reduct (one step of the
/// competing rule, or empty in the `rho2` erasure case) and a closing chain
/// of `rho4` steps from the competing reduct; the two meet up to alpha.
pub fn commute_rho4(
    ctx: &Ctx,
    rho4_step: &Step,
    r_step: &Step,
) -> Result<(Trace, Trace), CommuteError> {
    if rho4_step.rule != RuleId::Rho4 {
        return Err(CommuteError::NotRho4 {
            rule: rho4_step.rule,
        });
    }
    if rho4_step.before != r_step.before {
        return Err(CommuteError::MismatchedPeak);
    }
    let v = &rho4_step.after;
    let w = &r_step.after;
    let closure = rho4_closure(ctx, w)?;
    for (pos, rule) in redexes(ctx, v, RuleSet::only(r_step.rule))? {
        let step = make_step(ctx, v, &pos, rule)?;
        if let Some(closing) = closure.path_to_alpha(&step.after) {
            let transported = Trace {
                start: v.clone(),
                steps: vec![step],
            };
            return Ok((transported, closing));
        }
    }
    if r_step.rule == RuleId::Rho2 {
        if let Some(closing) = closure.path_to_alpha(v) {
            return Ok((Trace::new(v.clone()), closing));
        }
    }
    if closure.capped {
        return Err(CommuteError::SearchBudget);
    }
    Err(CommuteError::CannotCommute {
        peak: Box::new(rho4_step.before.clone()),
        rho4_pos: rho4_step.pos.clone(),
        r_pos: r_step.pos.clone(),
        r_rule: r_step.rule,
    })
}

/// Transports `trace` (from `rho4_step.before`) across one `rho4` step.
/// Returns the transported trace from `rho4_step.after` and a closing chain
/// of `rho4` steps from `trace.endpoint()`.
fn transport_one(ctx: &Ctx, rho4_step: &Step, trace: &Trace) -> Result<(Trace, Trace), SimError> {
    if trace.is_empty() {
        let closing = Trace {
            start: trace.start.clone(),
            steps: vec![rho4_step.clone()],
        };
        return Ok((Trace::new(rho4_step.after.clone()), closing));
    }
    let first = &trace.steps[0];
    let (transported_head, closing_head) = commute_rho4(ctx, rho4_step, first)?;
    let rest = Trace {
        start: first.after.clone(),
        steps: trace.steps[1..].to_vec(),
    };
    let (rest_transported, rest_closing) = transport_chain(ctx, &closing_head, &rest)?;
    // the recursive result starts alpha-equal to the head's endpoint; rebase
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

/// Transports `trace` across a whole chain of `rho4` steps (tiling the
/// commutation lemma). Returns the transported trace from `chain.endpoint()`
/// and the accumulated closing chain from `trace.endpoint()`.
fn transport_chain(ctx: &Ctx, chain: &Trace, trace: &Trace) -> Result<(Trace, Trace), SimError> {
    let mut cur = trace.clone();
    let mut closing_script: Vec<(Position, RuleId)> = Vec::new();
    for step in &chain.steps {
        let (transported, closing) = transport_one(ctx, step, &cur)?;
        closing_script.extend(closing.script());
        cur = transported;
    }
    let closing = Trace::replay(ctx, trace.endpoint().clone(), &closing_script)?;
    Ok((cur, closing))
}

/// A certified translation of a whole reduction sequence: the target trace
/// from the translated start, the `rho4` chain that closes the diagram from
/// the translated end, and the length accounting `|target| >= |source| - m`
/// where `m` counts the `rho2` steps of the source.
#[derive(Debug, Clone)]
pub struct SimCertificate {
    pub source: Trace,
    pub target: Trace,
    pub rho4_chain: Trace,
    pub rho2_count: usize,
    pub ok: bool,
    pub systems: Option<(&'static str, &'static str)>,
}

impl SimCertificate {
    pub fn length_bound_holds(&self) -> bool {
        self.target.len() + self.rho2_count >= self.source.len()
    }

    pub fn json(&self) -> Value {
        let mut m = Map::new();
        m.insert("m".into(), json!(self.rho2_count));
        m.insert("ok".into(), json!(self.ok));
        m.insert("rho4".into(), self.rho4_chain.json());
        m.insert("source".into(), self.source.json());
        if let Some((src, tgt)) = self.systems {
            m.insert("systems".into(), json!({"source": src, "target": tgt}));
        }
        m.insert("target".into(), self.target.json());
        Value::Object(m)
    }
}

/// Translates a reduction sequence by simulating each step and transporting
/// the inductively built target trace across the pending residual chain.
pub fn simulate_sequence(ctx: &Ctx, source: &Trace) -> Result<SimCertificate, SimError> {
    let dctx = dm_ctx(ctx);
    let start = dm_term(ctx, &source.start)?;
    let mut target = Trace::new(start.clone());
    let mut chain = Trace::new(start);
    for step in &source.steps {
        let ss = simulate_step(ctx, step)?;
        let (transported, closing) = transport_chain(&dctx, &chain, &ss.target)?;
        let rebased = Trace::replay(&dctx, target.endpoint().clone(), &transported.script())?;
        target.steps.extend(rebased.steps);
        let mut script = ss.residual.script();
        script.extend(closing.script());
        chain = Trace::replay(&dctx, ss.residual.start.clone(), &script)?;
    }
    let rho2_count = source.count_rule(RuleId::Rho2);
    let closes = alpha_eq(chain.endpoint(), target.endpoint());
    let mut cert = SimCertificate {
        source: source.clone(),
        target,
        rho4_chain: chain,
        rho2_count,
        ok: false,
        systems: Some(("full", "disjfree")),
    };
    cert.ok = closes && cert.length_bound_holds();
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::{maximal_traces, RuleId::*};
    use crate::syntax::{case, inj, var, Side};
    use crate::typing::{in_system, SystemId};

    fn x_ty() -> Formula {
        Formula::atom("X")
    }

    fn ctx_xyf() -> Ctx {
        Ctx::from_pairs([
            ("x".to_string(), x_ty()),
            ("y".to_string(), Formula::Bottom),
            ("f".to_string(), Formula::neg(x_ty())),
        ])
        .unwrap()
    }

    #[test]
    fn dm_formula_clauses() {
        assert_eq!(dm_formula(&x_ty()), x_ty());
        let d = Formula::disj(x_ty(), Formula::Bottom);
        assert_eq!(
            dm_formula(&d),
            Formula::neg(Formula::conj(
                Formula::neg(x_ty()),
                Formula::neg(Formula::Bottom)
            ))
        );
        let f = Formula::imp(Formula::disj(x_ty(), Formula::atom("Y")), x_ty());
        assert_eq!(
            dm_formula(&f),
            Formula::imp(
                Formula::neg(Formula::conj(
                    Formula::neg(x_ty()),
                    Formula::neg(Formula::atom("Y"))
                )),
                x_ty()
            )
        );
    }

    #[test]
    fn dm_term_clauses() {
        let ctx = ctx_xyf();
        assert_eq!(dm_term(&ctx, &var("x")).unwrap(), var("x"));
        let d = Formula::disj(x_ty(), Formula::Bottom);
        let t = inj(Side::Fst, d, var("x"));
        let got = dm_term(&ctx, &t).unwrap();
        let want = lam(
            "w",
            Formula::conj(Formula::neg(x_ty()), Formula::neg(Formula::Bottom)),
            app(proj(Side::Fst, var("w")), var("x")),
        );
        assert!(alpha_eq(&got, &want), "got {got}");
        // case at branch type Bot translates without a fresh delta
        let t = case(
            inj(Side::Fst, Formula::disj(x_ty(), Formula::Bottom), var("x")),
            "a",
            x_ty(),
            app(var("f"), var("a")),
            "b",
            Formula::Bottom,
            var("b"),
        );
        let got = dm_term(&ctx, &t).unwrap();
        assert!(matches!(got, Term::App(_, _)), "got {got}");
        assert_eq!(
            infer(&dm_ctx(&ctx), &got).unwrap(),
            dm_formula(&infer(&ctx, &t).unwrap())
        );
    }

    #[test]
    fn dm_image_is_disjunction_free() {
        let ctx = ctx_xyf();
        let t = case(
            delta("k", Formula::disj(x_ty(), x_ty()), var("y")),
            "a",
            x_ty(),
            var("a"),
            "b",
            x_ty(),
            var("b"),
        );
        let d = dm_term(&ctx, &t).unwrap();
        assert!(in_system(&d, SystemId::DisjFree));
    }

    #[test]
    fn substitution_lemma_example() {
        let ctx = ctx_xyf();
        let sub_ctx = ctx.extended("s", Formula::disj(x_ty(), x_ty()));
        let m = case(var("s"), "a", x_ty(), var("a"), "b", x_ty(), var("b"));
        let n = inj(Side::Fst, Formula::disj(x_ty(), x_ty()), var("x"));
        let lhs = dm_term(&ctx, &crate::syntax::subst(&m, "s", &n)).unwrap();
        let rhs = crate::syntax::subst(
            &dm_term(&sub_ctx, &m).unwrap(),
            "s",
            &dm_term(&ctx, &n).unwrap(),
        );
        assert!(alpha_eq(&lhs, &rhs), "lhs {lhs}\nrhs {rhs}");
    }

    fn step_at_root(ctx: &Ctx, t: &Term, rule: RuleId) -> Step {
        make_step(ctx, t, &Position::root(), rule).unwrap()
    }

    #[test]
    fn sim_beta_imp_is_single_step_same_label() {
        let ctx = ctx_xyf();
        let t = app(lam("a", x_ty(), var("a")), var("x"));
        let s = step_at_root(&ctx, &t, BetaImp);
        let sim = simulate_step(&ctx, &s).unwrap();
        assert_eq!(sim.item, 1);
        assert_eq!(sim.target.rules(), vec![BetaImp]);
        assert!(sim.residual.is_empty());
    }

    #[test]
    fn sim_beta_disj_profiles() {
        let ctx = ctx_xyf();
        let t = case(
            inj(Side::Fst, Formula::disj(x_ty(), x_ty()), var("x")),
            "a",
            x_ty(),
            var("a"),
            "b",
            x_ty(),
            var("b"),
        );
        let s = step_at_root(&ctx, &t, BetaDisj);
        let sim = simulate_step(&ctx, &s).unwrap();
        assert_eq!(sim.item, 3);
        assert_eq!(sim.target.rules(), vec![BetaImp, BetaConj, BetaImp, Rho2]);
        assert!(sim.residual.is_empty());
        let t = case(
            inj(Side::Fst, Formula::disj(x_ty(), Formula::Bottom), var("x")),
            "a",
            x_ty(),
            app(var("f"), var("a")),
            "b",
            Formula::Bottom,
            var("b"),
        );
        let s = step_at_root(&ctx, &t, BetaDisj);
        let sim = simulate_step(&ctx, &s).unwrap();
        assert_eq!(sim.item, 3);
        assert_eq!(sim.target.rules(), vec![BetaImp, BetaConj, BetaImp]);
    }

    #[test]
    fn sim_rho_disj_bot_is_single_rho1bot_imp() {
        let ctx = ctx_xyf();
        let t = case(
            delta("k", Formula::disj(x_ty(), x_ty()), var("y")),
            "a",
            x_ty(),
            app(var("f"), var("a")),
            "b",
            x_ty(),
            app(var("f"), var("b")),
        );
        let s = step_at_root(&ctx, &t, Rho1BotDisj);
        let sim = simulate_step(&ctx, &s).unwrap();
        assert_eq!(sim.item, 2);
        assert_eq!(sim.target.rules(), vec![Rho1BotImp]);
        assert!(sim.residual.is_empty());
    }

    #[test]
    fn sim_rho_disj_residual_counts_binder_occurrences() {
        let ctx = ctx_xyf();
        let d = Formula::disj(x_ty(), x_ty());
        // zero occurrences: empty residual
        let t = case(
            delta("k", d.clone(), var("y")),
            "a",
            x_ty(),
            var("a"),
            "b",
            x_ty(),
            var("b"),
        );
        let s = step_at_root(&ctx, &t, Rho1Disj);
        let sim = simulate_step(&ctx, &s).unwrap();
        assert_eq!(sim.item, 4);
        assert_eq!(sim.target.rules(), vec![Rho1BotImp]);
        assert_eq!(sim.residual.len(), 0);
        // one occurrence: exactly one rho4 residual
        let t = case(
            delta("k", d.clone(), app(var("k"), inj(Side::Fst, d, var("x")))),
            "a",
            x_ty(),
            var("a"),
            "b",
            x_ty(),
            var("b"),
        );
        let s = step_at_root(&ctx, &t, Rho1Disj);
        let sim = simulate_step(&ctx, &s).unwrap();
        assert_eq!(sim.item, 4);
        assert_eq!(sim.target.rules(), vec![Rho1BotImp]);
        assert_eq!(sim.residual.rules(), vec![Rho4]);
    }

    #[test]
    fn sim_rho_disj_at_bottom_branch_uses_plain_rho1() {
        // rho1_disj also fires when the branch type is Bot (overlapping the
        // bottom variant); there the translated reduct is reached by one
        // plain rho1_imp step and no residual.
        let ctx = ctx_xyf();
        let t = case(
            delta("k", Formula::disj(x_ty(), x_ty()), var("y")),
            "a",
            x_ty(),
            app(var("f"), var("a")),
            "b",
            x_ty(),
            app(var("f"), var("b")),
        );
        let s = step_at_root(&ctx, &t, Rho1Disj);
        let sim = simulate_step(&ctx, &s).unwrap();
        assert_eq!(sim.item, 4);
        assert_eq!(sim.target.rules(), vec![Rho1Imp]);
        assert!(sim.residual.is_empty());
    }

    #[test]
    fn sim_pi_disj_needs_two_betas_and_two_residuals() {
        // One rho1bot_imp step alone does not meet the translated reduct of
        // a pi_disj step: the two created beta redexes fire on the target
        // side and two rho4 residuals close the diagram from the reduct.
        let ctx = ctx_xyf();
        let xx = Formula::disj(x_ty(), x_ty());
        let dd = Formula::disj(xx.clone(), xx.clone());
        let inner = case(
            delta("k", dd, var("y")),
            "a1",
            xx.clone(),
            var("a1"),
            "b1",
            xx,
            var("b1"),
        );
        let t = case(inner, "a2", x_ty(), var("a2"), "b2", x_ty(), var("b2"));
        assert!(infer(&ctx, &t).is_ok());
        let s = step_at_root(&ctx, &t, PiDisj);
        let sim = simulate_step(&ctx, &s).unwrap();
        assert_eq!(sim.item, 4);
        assert_eq!(sim.target.rules(), vec![Rho1BotImp, BetaImp, BetaImp]);
        assert_eq!(sim.residual.rules(), vec![Rho4, Rho4]);
    }

    #[test]
    fn sim_pi_imp_profile() {
        let ctx = ctx_xyf();
        let d = Formula::disj(x_ty(), x_ty());
        let t = app(
            case(
                inj(Side::Fst, d, var("x")),
                "a",
                x_ty(),
                var("f"),
                "b",
                x_ty(),
                var("f"),
            ),
            var("x"),
        );
        assert_eq!(infer(&ctx, &t).unwrap(), Formula::Bottom);
        let s = step_at_root(&ctx, &t, PiImp);
        let sim = simulate_step(&ctx, &s).unwrap();
        assert_eq!(sim.item, 3);
        assert_eq!(sim.target.rules(), vec![Rho1BotImp, BetaImp, BetaImp]);
        assert!(sim.residual.is_empty());
    }

    #[test]
    fn sim_steps_under_congruence_positions() {
        let ctx = ctx_xyf();
        let redex = app(lam("a", x_ty(), var("a")), var("x"));
        let t = lam("c", Formula::Bottom, redex.clone());
        let s = make_step(&ctx, &t, &Position(vec![0]), BetaImp).unwrap();
        let sim = simulate_step(&ctx, &s).unwrap();
        assert_eq!(sim.target.steps[0].pos, Position(vec![0]));
        let t = case(
            inj(Side::Fst, Formula::disj(x_ty(), x_ty()), var("x")),
            "a",
            x_ty(),
            redex,
            "b",
            x_ty(),
            var("b"),
        );
        let s = make_step(&ctx, &t, &Position(vec![1]), BetaImp).unwrap();
        let sim = simulate_step(&ctx, &s).unwrap();
        assert_eq!(sim.target.steps[0].pos, Position(vec![0, 1, 0, 0, 1]));
    }

    #[test]
    fn commute_erased_peak_has_empty_closing() {
        let ctx = Ctx::from_pairs([
            ("kp".to_string(), Formula::neg(Formula::Bottom)),
            ("y".to_string(), Formula::Bottom),
        ])
        .unwrap();
        // rho4 redex inside an argument erased by beta
        let rho4_redex = app(
            var("kp"),
            delta("k", Formula::Bottom, app(var("k"), var("y"))),
        );
        let t = app(lam("a", Formula::Bottom, var("y")), rho4_redex);
        let rho4 = make_step(&ctx, &t, &Position(vec![1]), Rho4).unwrap();
        let beta = make_step(&ctx, &t, &Position::root(), BetaImp).unwrap();
        let (transported, closing) = commute_rho4(&ctx, &rho4, &beta).unwrap();
        assert_eq!(transported.rules(), vec![BetaImp]);
        assert!(closing.is_empty());
        assert!(alpha_eq(transported.endpoint(), closing.endpoint()));
    }

    #[test]
    fn commute_rho2_erasure_case() {
        // the canonical overlap: kp (delta k:~Bot. k y)
        let ctx = Ctx::from_pairs([
            ("kp".to_string(), Formula::neg(Formula::Bottom)),
            ("y".to_string(), Formula::Bottom),
        ])
        .unwrap();
        let t = app(
            var("kp"),
            delta("k", Formula::Bottom, app(var("k"), var("y"))),
        );
        let rho4 = make_step(&ctx, &t, &Position::root(), Rho4).unwrap();
        let rho2 = make_step(&ctx, &t, &Position(vec![1]), Rho2).unwrap();
        let (transported, closing) = commute_rho4(&ctx, &rho4, &rho2).unwrap();
        assert!(transported.is_empty());
        assert!(closing.is_empty());
        assert!(alpha_eq(&rho4.after, &rho2.after));
    }

    #[test]
    fn commute_duplicating_peak_closes_with_two_rho4() {
        let ctx = Ctx::from_pairs([
            ("kp".to_string(), Formula::neg(Formula::Bottom)),
            ("y".to_string(), Formula::Bottom),
        ])
        .unwrap();
        let rho4_redex = app(
            var("kp"),
            delta("k", Formula::Bottom, app(var("k"), var("y"))),
        );
        let t = app(
            lam("a", Formula::Bottom, pair(var("a"), var("a"))),
            rho4_redex,
        );
        let rho4 = make_step(&ctx, &t, &Position(vec![1]), Rho4).unwrap();
        let beta = make_step(&ctx, &t, &Position::root(), BetaImp).unwrap();
        let (transported, closing) = commute_rho4(&ctx, &rho4, &beta).unwrap();
        assert_eq!(transported.rules(), vec![BetaImp]);
        assert_eq!(closing.rules(), vec![Rho4, Rho4]);
    }

    #[test]
    fn commute_head_substitution_peak_cannot_close() {
        // pi1 (delta k:~(X /\ X). k (delta j:~(X /\ X). y)): contracting the
        // rho1_conj redex substitutes a lambda for the head variable of the
        // rho4 redex, so no rho4-only closing exists.
        let ctx = Ctx::from_pairs([("y".to_string(), Formula::Bottom)]).unwrap();
        let xx = Formula::conj(x_ty(), x_ty());
        let t = proj(
            Side::Fst,
            delta("k", xx.clone(), app(var("k"), delta("j", xx, var("y")))),
        );
        assert!(infer(&ctx, &t).is_ok());
        let rho4 = make_step(&ctx, &t, &Position(vec![0, 0]), Rho4).unwrap();
        let rho1 = make_step(&ctx, &t, &Position::root(), Rho1Conj).unwrap();
        let err = commute_rho4(&ctx, &rho4, &rho1).unwrap_err();
        assert!(matches!(err, CommuteError::CannotCommute { .. }), "{err}");
    }

    #[test]
    fn simulate_empty_and_single_step_sequences() {
        let ctx = ctx_xyf();
        let t = case(
            inj(Side::Fst, Formula::disj(x_ty(), x_ty()), var("x")),
            "a",
            x_ty(),
            var("a"),
            "b",
            x_ty(),
            var("b"),
        );
        let empty = Trace::new(t.clone());
        let cert = simulate_sequence(&ctx, &empty).unwrap();
        assert!(cert.ok);
        assert!(cert.target.is_empty() && cert.rho4_chain.is_empty());

        let s = Trace::replay(&ctx, t, &[(Position::root(), BetaDisj)]).unwrap();
        let cert = simulate_sequence(&ctx, &s).unwrap();
        assert!(cert.ok);
        assert_eq!(cert.target.len(), 4);
        assert!(cert.rho4_chain.is_empty());
        assert!(cert.length_bound_holds());
    }

    #[test]
    fn simulate_sequence_with_pending_residual_chain() {
        // case (delta k. k (in1 x)) of {a => a | b => b}: the rho1_disj step
        // leaves a rho4 residual that later tiling must absorb.
        let ctx = ctx_xyf();
        let d = Formula::disj(x_ty(), x_ty());
        let t = case(
            delta("k", d.clone(), app(var("k"), inj(Side::Fst, d, var("x")))),
            "a",
            x_ty(),
            var("a"),
            "b",
            x_ty(),
            var("b"),
        );
        let traces = maximal_traces(&ctx, &t, RuleSet::system(SystemId::Full), 10, 64).unwrap();
        assert!(!traces.traces.is_empty());
        for tr in &traces.traces {
            let cert = simulate_sequence(&ctx, tr).unwrap();
            assert!(cert.ok, "failed on {:?}", tr.rules());
        }
    }

    #[test]
    fn certificate_json_shape() {
        let ctx = ctx_xyf();
        let t = app(lam("a", x_ty(), var("a")), var("x"));
        let s = Trace::replay(&ctx, t, &[(Position::root(), BetaImp)]).unwrap();
        let cert = simulate_sequence(&ctx, &s).unwrap();
        let v = cert.json();
        assert!(v.get("m").is_some());
        assert_eq!(v.get("ok"), Some(&json!(true)));
        assert!(v.get("rho4").is_some());
        assert!(v.get("source").is_some());
        assert!(v.get("target").is_some());
    }
}
