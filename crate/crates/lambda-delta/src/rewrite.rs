//! Labeled reduction: redex enumeration, single-step contraction,
//! normalization strategies, trace bookkeeping and bounded reduction graphs.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde_json::{json, Map, Value};

use crate::syntax::{
    app, case, delta, fresh, identity_bot, is_identity_bot, lam, nameless, proj, subst, Formula,
    Name, Position, Side, Term,
};
use crate::typing::{infer, Ctx, SystemId, TypeError};

/// Labels for the reduction rules. The first thirteen are system rules;
/// `rho3`, `rho4`, `kappa` and `iota` are auxiliary and take part in
/// reduction only when explicitly requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleId {
    BetaImp,
    BetaConj,
    BetaDisj,
    PiImp,
    PiConj,
    PiDisj,
    Rho1Imp,
    Rho1Conj,
    Rho1Disj,
    Rho1BotImp,
    Rho1BotConj,
    Rho1BotDisj,
    Rho2,
    Rho3,
    Rho4,
    Kappa,
    Iota,
}

use RuleId::*;

pub const ALL_RULES: [RuleId; 17] = [
    BetaImp,
    BetaConj,
    BetaDisj,
    PiImp,
    PiConj,
    PiDisj,
    Rho1Imp,
    Rho1Conj,
    Rho1Disj,
    Rho1BotImp,
    Rho1BotConj,
    Rho1BotDisj,
    Rho2,
    Rho3,
    Rho4,
    Kappa,
    Iota,
];

impl RuleId {
    pub fn is_aux(self) -> bool {
        matches!(self, Rho3 | Rho4 | Kappa | Iota)
    }

    pub fn name(self) -> &'static str {
        match self {
            BetaImp => "beta_imp",
            BetaConj => "beta_conj",
            BetaDisj => "beta_disj",
            PiImp => "pi_imp",
            PiConj => "pi_conj",
            PiDisj => "pi_disj",
            Rho1Imp => "rho1_imp",
            Rho1Conj => "rho1_conj",
            Rho1Disj => "rho1_disj",
            Rho1BotImp => "rho1bot_imp",
            Rho1BotConj => "rho1bot_conj",
            Rho1BotDisj => "rho1bot_disj",
            Rho2 => "rho2",
            Rho3 => "rho3",
            Rho4 => "rho4",
            Kappa => "kappa",
            Iota => "iota",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_RULES
            .iter()
            .copied()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown rule {s:?}"))
    }
}

/// A set of rule labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RuleSet(u32);

impl RuleSet {
    pub const EMPTY: RuleSet = RuleSet(0);

    pub fn only(r: RuleId) -> RuleSet {
        RuleSet(1 << r as u32)
    }

    pub fn from_rules(rs: &[RuleId]) -> RuleSet {
        rs.iter().fold(RuleSet(0), |s, &r| s.with(r))
    }

    pub fn with(self, r: RuleId) -> RuleSet {
        RuleSet(self.0 | (1 << r as u32))
    }

    pub fn union(self, other: RuleSet) -> RuleSet {
        RuleSet(self.0 | other.0)
    }

    pub fn contains(self, r: RuleId) -> bool {
        self.0 & (1 << r as u32) != 0
    }

    pub fn iter(self) -> impl Iterator<Item = RuleId> {
        ALL_RULES.into_iter().filter(move |&r| self.contains(r))
    }

    /// The system rules of the given system. The disjunction-free system
    /// drops the disjunction-flavoured rules, the small system additionally
    /// drops the conjunction rules and every bottom variant.
    pub fn system(sys: SystemId) -> RuleSet {
        match sys {
            SystemId::Full => RuleSet::from_rules(&[
                BetaImp,
                BetaConj,
                BetaDisj,
                PiImp,
                PiConj,
                PiDisj,
                Rho1Imp,
                Rho1Conj,
                Rho1Disj,
                Rho1BotImp,
                Rho1BotConj,
                Rho1BotDisj,
                Rho2,
            ]),
            SystemId::DisjFree => RuleSet::from_rules(&[
                BetaImp,
                BetaConj,
                PiImp,
                PiConj,
                Rho1Imp,
                Rho1Conj,
                Rho1BotImp,
                Rho1BotConj,
                Rho2,
            ]),
            SystemId::Small => RuleSet::from_rules(&[BetaImp, PiImp, Rho1Imp, Rho2]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RewriteError {
    IllTyped(TypeError),
    NotARedex { pos: Position, rule: RuleId },
    BadPosition { pos: Position },
}

impl fmt::Display for RewriteError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewriteError::IllTyped(e) => write!(f, "ill-typed input: {e}"),
            RewriteError::NotARedex { pos, rule } => {
                write!(f, "no {rule} redex at {pos}")
            }
            RewriteError::BadPosition { pos } => write!(f, "invalid position {pos}"),
        }
    }
}

impl std::error::Error for RewriteError {}

impl From<TypeError> for RewriteError {
    fn from(e: TypeError) -> Self {
        RewriteError::IllTyped(e)
    }
}

/// One labeled reduction step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub rule: RuleId,
    pub pos: Position,
    pub before: Term,
    pub after: Term,
}

impl Step {
    pub fn json(&self) -> Value {
        let mut m = Map::new();
        m.insert(
            "pos".into(),
            Value::Array(self.pos.0.iter().map(|&i| json!(i)).collect()),
        );
        m.insert("rule".into(), json!(self.rule.name()));
        m.insert("term".into(), json!(self.after.to_string()));
        Value::Object(m)
    }
}

/// A reduction sequence: a start term and the steps taken from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub start: Term,
    pub steps: Vec<Step>,
}

impl Trace {
    pub fn new(start: Term) -> Trace {
        Trace {
            start,
            steps: Vec::new(),
        }
    }

    pub fn endpoint(&self) -> &Term {
        self.steps.last().map(|s| &s.after).unwrap_or(&self.start)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn count_rule(&self, r: RuleId) -> usize {
        self.steps.iter().filter(|s| s.rule == r).count()
    }

    pub fn rules(&self) -> Vec<RuleId> {
        self.steps.iter().map(|s| s.rule).collect()
    }

    /// Replays `(pos, rule)` instructions from `start`, verifying each step.
    pub fn replay(
        ctx: &Ctx,
        start: Term,
        script: &[(Position, RuleId)],
    ) -> Result<Trace, RewriteError> {
        let mut trace = Trace::new(start);
        for (pos, rule) in script {
            let before = trace.endpoint().clone();
            let after = contract(ctx, &before, pos, *rule)?;
            trace.steps.push(Step {
                rule: *rule,
                pos: pos.clone(),
                before,
                after,
            });
        }
        Ok(trace)
    }

    pub fn script(&self) -> Vec<(Position, RuleId)> {
        self.steps.iter().map(|s| (s.pos.clone(), s.rule)).collect()
    }

    /// Checks chaining and re-contracts every step.
    pub fn validate(&self, ctx: &Ctx) -> Result<(), RewriteError> {
        let mut cur = &self.start;
        for s in &self.steps {
            if s.before != *cur {
                return Err(RewriteError::BadPosition { pos: s.pos.clone() });
            }
            let after = contract(ctx, cur, &s.pos, s.rule)?;
            if after != s.after {
                return Err(RewriteError::NotARedex {
                    pos: s.pos.clone(),
                    rule: s.rule,
                });
            }
            cur = &s.after;
        }
        Ok(())
    }

    /// One JSON object per line: `{"pos": [...], "rule": "...", "step": i, "term": "..."}`.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.steps.iter().enumerate() {
            let mut m = Map::new();
            m.insert(
                "pos".into(),
                Value::Array(s.pos.0.iter().map(|&i| json!(i)).collect()),
            );
            m.insert("rule".into(), json!(s.rule.name()));
            m.insert("step".into(), json!(i + 1));
            m.insert("term".into(), json!(s.after.to_string()));
            out.push_str(&Value::Object(m).to_string());
            out.push('\n');
        }
        out
    }

    /// Reads back the `(pos, rule)` script of a JSONL trace file.
    pub fn script_from_jsonl(text: &str) -> Result<Vec<(Position, RuleId)>, String> {
        let mut script = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let v: Value =
                serde_json::from_str(line).map_err(|e| format!("line {}: {e}", lineno + 1))?;
            let rule: RuleId = v
                .get("rule")
                .and_then(Value::as_str)
                .ok_or_else(|| format!("line {}: missing rule", lineno + 1))?
                .parse()?;
            let pos = v
                .get("pos")
                .and_then(Value::as_array)
                .ok_or_else(|| format!("line {}: missing pos", lineno + 1))?
                .iter()
                .map(|x| x.as_u64().map(|n| n as usize))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| format!("line {}: bad pos", lineno + 1))?;
            script.push((Position(pos), rule));
        }
        Ok(script)
    }

    /// Trace as a JSON value (used inside certificates).
    pub fn json(&self) -> Value {
        let mut m = Map::new();
        m.insert("start".into(), json!(self.start.to_string()));
        m.insert(
            "steps".into(),
            Value::Array(self.steps.iter().map(Step::json).collect()),
        );
        Value::Object(m)
    }
}

fn is_var_named(t: &Term) -> Option<&Name> {
    match t {
        Term::Var(x) => Some(x),
        _ => None,
    }
}

/// Does `rule` match at the root of `t`? `ctx` is the local context at this
/// position; `t` is assumed well-typed there.
fn redex_match(ctx: &Ctx, t: &Term, rule: RuleId) -> bool {
    match rule {
        BetaImp => matches!(t, Term::App(f, _) if matches!(&**f, Term::Lam(_, _, _))),
        BetaConj => matches!(t, Term::Proj(_, m) if matches!(&**m, Term::Pair(_, _))),
        BetaDisj => matches!(t, Term::Case { scrut, .. } if matches!(&**scrut, Term::Inj(_, _, _))),
        PiImp => matches!(t, Term::App(f, _) if matches!(&**f, Term::Case { .. })),
        PiConj => matches!(t, Term::Proj(_, m) if matches!(&**m, Term::Case { .. })),
        PiDisj => matches!(t, Term::Case { scrut, .. } if matches!(&**scrut, Term::Case { .. })),
        Rho1Imp => matches!(t, Term::App(f, _)
            if matches!(&**f, Term::Delta(_, Formula::Imp(_, _), _))),
        Rho1BotImp => matches!(t, Term::App(f, _)
            if matches!(&**f, Term::Delta(_, Formula::Imp(_, b), _) if b.is_bottom())),
        Rho1Conj => matches!(t, Term::Proj(_, m)
            if matches!(&**m, Term::Delta(_, Formula::Conj(_, _), _))),
        Rho1BotConj => matches!(t, Term::Proj(s, m)
            if matches!(&**m, Term::Delta(_, Formula::Conj(a, b), _)
                if s.pick(&**a, &**b).is_bottom())),
        Rho1Disj => matches!(t, Term::Case { scrut, .. }
            if matches!(&**scrut, Term::Delta(_, Formula::Disj(_, _), _))),
        Rho1BotDisj => match t {
            Term::Case {
                scrut,
                lname,
                lty,
                lbody,
                ..
            } if matches!(&**scrut, Term::Delta(_, Formula::Disj(_, _), _)) => {
                infer(&ctx.extended(lname, lty.clone()), lbody)
                    .map(|c| c.is_bottom())
                    .unwrap_or(false)
            }
            _ => false,
        },
        Rho2 => match t {
            Term::Delta(k, _, m) => match &**m {
                Term::App(h, arg) => is_var_named(h) == Some(k) && !arg.free_vars().contains(k),
                _ => false,
            },
            _ => false,
        },
        Rho3 => matches!(t, Term::Delta(_, Formula::Bottom, _)),
        Rho4 => match t {
            Term::App(h, arg) => match (&**h, &**arg) {
                (Term::Var(k1), Term::Delta(_, f, _)) => {
                    ctx.get(k1) == Some(&Formula::neg(f.clone()))
                }
                _ => false,
            },
            _ => false,
        },
        Kappa => match t {
            Term::App(h, _) => match &**h {
                Term::Var(k) => ctx.get(k) == Some(&Formula::neg(Formula::Bottom)),
                _ => false,
            },
            _ => false,
        },
        Iota => matches!(t, Term::App(h, _) if is_identity_bot(h)),
    }
}

fn rename_branch_if_captures(
    binder: &str,
    body: &Term,
    incoming: &std::collections::BTreeSet<Name>,
) -> (Name, Term) {
    if incoming.contains(binder) {
        let mut avoid = incoming.clone();
        avoid.extend(body.free_vars());
        let b2 = fresh(&avoid, binder);
        let body2 = subst(body, binder, &Term::Var(b2.clone()));
        (b2, body2)
    } else {
        (binder.to_string(), body.clone())
    }
}

/// Contracts a matched redex at the root of `t`.
fn contract_at_root(ctx: &Ctx, t: &Term, rule: RuleId) -> Option<Term> {
    if !redex_match(ctx, t, rule) {
        return None;
    }
    Some(match rule {
        BetaImp => {
            let Term::App(f, n) = t else { unreachable!() };
            let Term::Lam(x, _, m) = &**f else {
                unreachable!()
            };
            subst(m, x, n)
        }
        BetaConj => {
            let Term::Proj(s, m) = t else { unreachable!() };
            let Term::Pair(m1, m2) = &**m else {
                unreachable!()
            };
            (**s.pick(m1, m2)).clone()
        }
        BetaDisj => {
            let Term::Case {
                scrut,
                lname,
                lbody,
                rname,
                rbody,
                ..
            } = t
            else {
                unreachable!()
            };
            let Term::Inj(s, _, payload) = &**scrut else {
                unreachable!()
            };
            match s {
                Side::Fst => subst(lbody, lname, payload),
                Side::Snd => subst(rbody, rname, payload),
            }
        }
        PiImp => {
            let Term::App(f, n) = t else { unreachable!() };
            let Term::Case {
                scrut,
                lname,
                lty,
                lbody,
                rname,
                rty,
                rbody,
            } = &**f
            else {
                unreachable!()
            };
            let fv_n = n.free_vars();
            let (x2, p2) = rename_branch_if_captures(lname, lbody, &fv_n);
            let (y2, q2) = rename_branch_if_captures(rname, rbody, &fv_n);
            case(
                (**scrut).clone(),
                &x2,
                lty.clone(),
                app(p2, (**n).clone()),
                &y2,
                rty.clone(),
                app(q2, (**n).clone()),
            )
        }
        PiConj => {
            let Term::Proj(s, m) = t else { unreachable!() };
            let Term::Case {
                scrut,
                lname,
                lty,
                lbody,
                rname,
                rty,
                rbody,
            } = &**m
            else {
                unreachable!()
            };
            case(
                (**scrut).clone(),
                lname,
                lty.clone(),
                proj(*s, (**lbody).clone()),
                rname,
                rty.clone(),
                proj(*s, (**rbody).clone()),
            )
        }
        PiDisj => {
            let Term::Case {
                scrut: inner,
                lname: x2,
                lty: a2,
                lbody: p2,
                rname: y2,
                rty: b2,
                rbody: q2,
            } = t
            else {
                unreachable!()
            };
            let Term::Case {
                scrut,
                lname,
                lty,
                lbody,
                rname,
                rty,
                rbody,
            } = &**inner
            else {
                unreachable!()
            };
            let mut incoming = p2.free_vars();
            incoming.extend(q2.free_vars());
            let (x1, p1) = rename_branch_if_captures(lname, lbody, &incoming);
            let (y1, q1) = rename_branch_if_captures(rname, rbody, &incoming);
            let mk = |hole: Term| {
                case(
                    hole,
                    x2,
                    a2.clone(),
                    (**p2).clone(),
                    y2,
                    b2.clone(),
                    (**q2).clone(),
                )
            };
            case(
                (**scrut).clone(),
                &x1,
                lty.clone(),
                mk(p1),
                &y1,
                rty.clone(),
                mk(q1),
            )
        }
        Rho1Imp | Rho1Conj | Rho1Disj => contract_rho1(ctx, t, rule, false),
        Rho1BotImp | Rho1BotConj | Rho1BotDisj => contract_rho1(ctx, t, rule, true),
        Rho2 => {
            let Term::Delta(_, _, m) = t else {
                unreachable!()
            };
            let Term::App(_, arg) = &**m else {
                unreachable!()
            };
            (**arg).clone()
        }
        Rho3 => {
            let Term::Delta(k, _, m) = t else {
                unreachable!()
            };
            subst(m, k, &identity_bot())
        }
        Rho4 => {
            let Term::App(h, arg) = t else { unreachable!() };
            let Term::Var(k1) = &**h else { unreachable!() };
            let Term::Delta(k, _, m) = &**arg else {
                unreachable!()
            };
            subst(m, k, &Term::Var(k1.clone()))
        }
        Kappa | Iota => {
            let Term::App(_, n) = t else { unreachable!() };
            (**n).clone()
        }
    })
}

type FrameFill = Box<dyn Fn(Term) -> Term>;

/// The `rho1` family: `E[delta k. M]` pushes the frame `E` into the body by
/// a continuation-style substitution; the bottom variants skip the fresh
/// `delta` around the contractum.
fn contract_rho1(ctx: &Ctx, t: &Term, rule: RuleId, bot: bool) -> Term {
    // Split into (frame rebuilder around a hole variable, delta binder/annot/body, result type).
    let (k, annot, body, frame_of, result_ty): (&Name, &Formula, &Term, FrameFill, Formula) =
        match (rule, t) {
            (Rho1Imp | Rho1BotImp, Term::App(f, n)) => {
                let Term::Delta(k, a, m) = &**f else {
                    unreachable!()
                };
                let Formula::Imp(_, b) = a else {
                    unreachable!()
                };
                let n = (**n).clone();
                (
                    k,
                    a,
                    m,
                    Box::new(move |hole| app(hole, n.clone())),
                    (**b).clone(),
                )
            }
            (Rho1Conj | Rho1BotConj, Term::Proj(s, inner)) => {
                let Term::Delta(k, a, m) = &**inner else {
                    unreachable!()
                };
                let Formula::Conj(a1, a2) = a else {
                    unreachable!()
                };
                let s = *s;
                (
                    k,
                    a,
                    m,
                    Box::new(move |hole| proj(s, hole)),
                    (**s.pick(a1, a2)).clone(),
                )
            }
            (
                Rho1Disj | Rho1BotDisj,
                Term::Case {
                    scrut,
                    lname,
                    lty,
                    lbody,
                    rname,
                    rty,
                    rbody,
                },
            ) => {
                let Term::Delta(k, a, m) = &**scrut else {
                    unreachable!()
                };
                let c = infer(&ctx.extended(lname, lty.clone()), lbody)
                    .expect("rho1_disj on well-typed redex");
                let (lname, lty, lbody) = (lname.clone(), lty.clone(), (**lbody).clone());
                let (rname, rty, rbody) = (rname.clone(), rty.clone(), (**rbody).clone());
                (
                    k,
                    a,
                    m,
                    Box::new(move |hole| {
                        case(
                            hole,
                            &lname,
                            lty.clone(),
                            lbody.clone(),
                            &rname,
                            rty.clone(),
                            rbody.clone(),
                        )
                    }),
                    c,
                )
            }
            _ => unreachable!(),
        };
    let mut avoid = t.free_vars();
    avoid.insert(k.clone());
    if bot {
        let z = fresh(&avoid, "z");
        let lam_z = lam(&z, annot.clone(), frame_of(Term::Var(z.clone())));
        subst(body, k, &lam_z)
    } else {
        let k2 = fresh(&avoid, k);
        avoid.insert(k2.clone());
        let z = fresh(&avoid, "z");
        let lam_z = lam(
            &z,
            annot.clone(),
            app(Term::Var(k2.clone()), frame_of(Term::Var(z.clone()))),
        );
        delta(&k2, result_ty, subst(body, k, &lam_z))
    }
}

/// All `(position, rule)` redex occurrences of the requested rules, in
/// leftmost-outermost (pre-order) order. The bottom variants are listed only
/// where the redex type is `Bot`; the plain `rho1` rules are listed at every
/// type, so both labels appear on a bottom-typed `rho1` redex.
pub fn redexes(
    ctx: &Ctx,
    t: &Term,
    rules: RuleSet,
) -> Result<Vec<(Position, RuleId)>, RewriteError> {
    infer(ctx, t)?;
    let mut out = Vec::new();
    collect_redexes(ctx, t, rules, &mut Vec::new(), &mut out);
    Ok(out)
}

fn collect_redexes(
    ctx: &Ctx,
    t: &Term,
    rules: RuleSet,
    pos: &mut Vec<usize>,
    out: &mut Vec<(Position, RuleId)>,
) {
    for r in ALL_RULES {
        if rules.contains(r) && redex_match(ctx, t, r) {
            out.push((Position(pos.clone()), r));
        }
    }
    match t {
        Term::Var(_) => {}
        Term::Lam(x, a, m) => {
            let c = ctx.extended(x, a.clone());
            pos.push(0);
            collect_redexes(&c, m, rules, pos, out);
            pos.pop();
        }
        Term::Delta(k, a, m) => {
            let c = ctx.extended(k, Formula::neg(a.clone()));
            pos.push(0);
            collect_redexes(&c, m, rules, pos, out);
            pos.pop();
        }
        Term::App(m, n) | Term::Pair(m, n) => {
            pos.push(0);
            collect_redexes(ctx, m, rules, pos, out);
            pos.pop();
            pos.push(1);
            collect_redexes(ctx, n, rules, pos, out);
            pos.pop();
        }
        Term::Proj(_, m) | Term::Inj(_, _, m) => {
            pos.push(0);
            collect_redexes(ctx, m, rules, pos, out);
            pos.pop();
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
            pos.push(0);
            collect_redexes(ctx, scrut, rules, pos, out);
            pos.pop();
            let lc = ctx.extended(lname, lty.clone());
            pos.push(1);
            collect_redexes(&lc, lbody, rules, pos, out);
            pos.pop();
            let rc = ctx.extended(rname, rty.clone());
            pos.push(2);
            collect_redexes(&rc, rbody, rules, pos, out);
            pos.pop();
        }
    }
}

/// Contracts the `rule` redex at `pos`. The input must be well-typed; the
/// redex is re-matched locally and `NotARedex` is returned if it is absent.
pub fn contract(ctx: &Ctx, t: &Term, pos: &Position, rule: RuleId) -> Result<Term, RewriteError> {
    fn go(
        ctx: &Ctx,
        t: &Term,
        path: &[usize],
        full: &Position,
        rule: RuleId,
    ) -> Result<Term, RewriteError> {
        let Some((&i, rest)) = path.split_first() else {
            return contract_at_root(ctx, t, rule).ok_or(RewriteError::NotARedex {
                pos: full.clone(),
                rule,
            });
        };
        let sub_ctx = match (t, i) {
            (Term::Lam(x, a, _), 0) => ctx.extended(x, a.clone()),
            (Term::Delta(k, a, _), 0) => ctx.extended(k, Formula::neg(a.clone())),
            (Term::Case { lname, lty, .. }, 1) => ctx.extended(lname, lty.clone()),
            (Term::Case { rname, rty, .. }, 2) => ctx.extended(rname, rty.clone()),
            _ => ctx.clone(),
        };
        let child = t
            .child(i)
            .ok_or(RewriteError::BadPosition { pos: full.clone() })?;
        let new_child = go(&sub_ctx, child, rest, full, rule)?;
        Ok(t.with_subterm(&Position(vec![i]), new_child))
    }
    go(ctx, t, &pos.0, pos, rule)
}

/// Builds a checked step.
pub fn make_step(ctx: &Ctx, t: &Term, pos: &Position, rule: RuleId) -> Result<Step, RewriteError> {
    let after = contract(ctx, t, pos, rule)?;
    Ok(Step {
        rule,
        pos: pos.clone(),
        before: t.clone(),
        after,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    LeftmostOutermost,
    LeftmostInnermost,
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lo" => Ok(Strategy::LeftmostOutermost),
            "li" => Ok(Strategy::LeftmostInnermost),
            other => Err(format!("unknown strategy {other:?} (lo|li)")),
        }
    }
}

/// Innermost-first, then left-to-right.
fn post_order_before(p: &Position, q: &Position) -> bool {
    if p.is_prefix_of(q) {
        return false; // q is deeper, q first
    }
    if q.is_prefix_of(p) {
        return true;
    }
    p.0 < q.0
}

#[derive(Debug, Clone)]
pub struct Normalization {
    pub trace: Trace,
    pub fuel_exhausted: bool,
}

/// Repeatedly contracts under the chosen strategy until no requested redex
/// remains or the fuel runs out; the partial trace is returned either way.
pub fn normalize(
    ctx: &Ctx,
    t: &Term,
    rules: RuleSet,
    strategy: Strategy,
    fuel: usize,
) -> Result<Normalization, RewriteError> {
    let mut trace = Trace::new(t.clone());
    for _ in 0..fuel {
        let cur = trace.endpoint().clone();
        let rs = redexes(ctx, &cur, rules)?;
        let Some((pos, rule)) = (match strategy {
            Strategy::LeftmostOutermost => rs.first().cloned(),
            Strategy::LeftmostInnermost => rs.iter().cloned().min_by(|(p, _), (q, _)| {
                if p == q {
                    std::cmp::Ordering::Equal
                } else if post_order_before(p, q) {
                    std::cmp::Ordering::Less
                } else {
                    std::cmp::Ordering::Greater
                }
            }),
        }) else {
            return Ok(Normalization {
                trace,
                fuel_exhausted: false,
            });
        };
        let step = make_step(ctx, &cur, &pos, rule)?;
        trace.steps.push(step);
    }
    let done = redexes(ctx, trace.endpoint(), rules)?.is_empty();
    Ok(Normalization {
        trace,
        fuel_exhausted: !done,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    ExhaustedAcyclic,
    ExhaustedWithCycle(Vec<usize>),
    BoundExceeded,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::ExhaustedAcyclic => "exhausted-acyclic",
            Verdict::ExhaustedWithCycle(_) => "exhausted-with-cycle",
            Verdict::BoundExceeded => "bound-exceeded",
        }
    }
}

#[derive(Debug, Clone)]
pub struct GraphEdge {
    pub from: usize,
    pub pos: Position,
    pub rule: RuleId,
    pub to: usize,
}

/// Breadth-first closure of `t` under the requested rules, nodes identified
/// up to alpha by their nameless form. `ExhaustedAcyclic` certifies strong
/// normalization of `t` for this rule set: the graph is finitely branching,
/// finite and acyclic, so no infinite sequence exists.
#[derive(Debug, Clone)]
pub struct ReductionGraph {
    pub nodes: Vec<Term>,
    pub edges: Vec<GraphEdge>,
    pub verdict: Verdict,
}

impl ReductionGraph {
    pub fn is_sn(&self) -> bool {
        matches!(self.verdict, Verdict::ExhaustedAcyclic)
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph reduction {\n");
        for (i, n) in self.nodes.iter().enumerate() {
            out.push_str(&format!(
                "  n{} [label=\"{}\"];\n",
                i,
                n.to_string().replace('\\', "\\\\").replace('"', "\\\"")
            ));
        }
        for e in &self.edges {
            out.push_str(&format!(
                "  n{} -> n{} [label=\"{} @ {}\"];\n",
                e.from, e.to, e.rule, e.pos
            ));
        }
        out.push_str("}\n");
        out
    }
}

pub fn reduction_graph(
    ctx: &Ctx,
    t: &Term,
    rules: RuleSet,
    node_bound: usize,
) -> Result<ReductionGraph, RewriteError> {
    infer(ctx, t)?;
    let mut nodes = vec![t.clone()];
    let mut index = HashMap::new();
    index.insert(nameless(t), 0usize);
    let mut edges = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    let mut exceeded = false;
    while let Some(i) = queue.pop_front() {
        let cur = nodes[i].clone();
        for (pos, rule) in redexes(ctx, &cur, rules)? {
            let next = contract(ctx, &cur, &pos, rule)?;
            let key = nameless(&next);
            let j = match index.get(&key) {
                Some(&j) => j,
                None => {
                    if nodes.len() >= node_bound {
                        exceeded = true;
                        continue;
                    }
                    let j = nodes.len();
                    nodes.push(next);
                    index.insert(key, j);
                    queue.push_back(j);
                    j
                }
            };
            edges.push(GraphEdge {
                from: i,
                pos,
                rule,
                to: j,
            });
        }
    }
    let verdict = if exceeded {
        Verdict::BoundExceeded
    } else {
        match find_cycle(nodes.len(), &edges) {
            Some(cycle) => Verdict::ExhaustedWithCycle(cycle),
            None => Verdict::ExhaustedAcyclic,
        }
    };
    Ok(ReductionGraph {
        nodes,
        edges,
        verdict,
    })
}

fn find_cycle(n: usize, edges: &[GraphEdge]) -> Option<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for e in edges {
        adj[e.from].push(e.to);
    }
    // 0 unvisited, 1 on stack, 2 done
    let mut state = vec![0u8; n];
    let mut stack: Vec<(usize, usize)> = Vec::new();
    let mut path: Vec<usize> = Vec::new();
    for start in 0..n {
        if state[start] != 0 {
            continue;
        }
        stack.push((start, 0));
        state[start] = 1;
        path.push(start);
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if *next < adj[v].len() {
                let w = adj[v][*next];
                *next += 1;
                match state[w] {
                    0 => {
                        state[w] = 1;
                        stack.push((w, 0));
                        path.push(w);
                    }
                    1 => {
                        let at = path.iter().position(|&x| x == w).unwrap();
                        let mut cycle = path[at..].to_vec();
                        cycle.push(w);
                        return Some(cycle);
                    }
                    _ => {}
                }
            } else {
                state[v] = 2;
                stack.pop();
                path.pop();
            }
        }
    }
    None
}

/// Exhaustive maximal traces from `t` (depth-first, deterministic order).
/// A trace is cut off at `len_cap` steps; enumeration stops enqueueing new
/// branches after `count_cap` traces. Cap hits are reported, not hidden.
#[derive(Debug, Clone)]
pub struct TraceEnumeration {
    pub traces: Vec<Trace>,
    pub len_cap_hits: usize,
    pub count_capped: bool,
}

pub fn maximal_traces(
    ctx: &Ctx,
    t: &Term,
    rules: RuleSet,
    len_cap: usize,
    count_cap: usize,
) -> Result<TraceEnumeration, RewriteError> {
    infer(ctx, t)?;
    let mut out = TraceEnumeration {
        traces: Vec::new(),
        len_cap_hits: 0,
        count_capped: false,
    };
    fn go(
        ctx: &Ctx,
        trace: &mut Trace,
        rules: RuleSet,
        len_cap: usize,
        count_cap: usize,
        out: &mut TraceEnumeration,
    ) -> Result<(), RewriteError> {
        if out.traces.len() >= count_cap {
            out.count_capped = true;
            return Ok(());
        }
        let cur = trace.endpoint().clone();
        let rs = redexes(ctx, &cur, rules)?;
        if rs.is_empty() {
            out.traces.push(trace.clone());
            return Ok(());
        }
        if trace.len() >= len_cap {
            out.len_cap_hits += 1;
            out.traces.push(trace.clone());
            return Ok(());
        }
        for (pos, rule) in rs {
            let step = make_step(ctx, &cur, &pos, rule)?;
            trace.steps.push(step);
            go(ctx, trace, rules, len_cap, count_cap, out)?;
            trace.steps.pop();
        }
        Ok(())
    }
    let mut trace = Trace::new(t.clone());
    go(ctx, &mut trace, rules, len_cap, count_cap, &mut out)?;
    Ok(out)
}
