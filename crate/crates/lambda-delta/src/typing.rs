//! Syntax-directed type reconstruction for terms and elimination contexts,
//! plus membership checks for the full, disjunction-free and small systems.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::syntax::{ElimContext, Formula, Name, Position, Term};

/// A set of declarations `x : A`; a variable is declared at most once.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Ctx(BTreeMap<Name, Formula>);

impl Ctx {
    pub fn new() -> Ctx {
        Ctx(BTreeMap::new())
    }

    pub fn from_pairs<I: IntoIterator<Item = (Name, Formula)>>(pairs: I) -> Result<Ctx, TypeError> {
        let mut ctx = Ctx::new();
        for (x, a) in pairs {
            ctx.declare(x, a)?;
        }
        Ok(ctx)
    }

    pub fn declare(&mut self, x: Name, a: Formula) -> Result<(), TypeError> {
        if self.0.contains_key(&x) {
            return Err(TypeError::DuplicateBinding { name: x });
        }
        self.0.insert(x, a);
        Ok(())
    }

    /// Extends the context with a binder. Shadowing replaces the old
    /// declaration; parsed input is freshened so this only matters for
    /// internally built terms.
    pub fn extended(&self, x: &str, a: Formula) -> Ctx {
        let mut c = self.clone();
        c.0.insert(x.to_string(), a);
        c
    }

    pub fn get(&self, x: &str) -> Option<&Formula> {
        self.0.get(x)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Formula)> {
        self.0.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &Name> {
        self.0.keys()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Applies a formula map pointwise (used by the proof translations).
    pub fn map_formulas(&self, f: impl Fn(&Formula) -> Formula) -> Ctx {
        Ctx(self.0.iter().map(|(x, a)| (x.clone(), f(a))).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeError {
    Unbound {
        pos: Position,
        name: Name,
    },
    Mismatch {
        pos: Position,
        reason: String,
    },
    DuplicateBinding {
        name: Name,
    },
    HoleTypeMismatch {
        expected: &'static str,
        found: Formula,
    },
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeError::Unbound { pos, name } => write!(f, "unbound variable {name} at {pos}"),
            TypeError::Mismatch { pos, reason } => write!(f, "type error at {pos}: {reason}"),
            TypeError::DuplicateBinding { name } => {
                write!(f, "variable {name} is already declared")
            }
            TypeError::HoleTypeMismatch { expected, found } => {
                write!(f, "hole type mismatch: frame needs {expected}, got {found}")
            }
        }
    }
}

impl std::error::Error for TypeError {}

/// The three systems of the calculus: the full system, the
/// disjunction-free restriction and the small (implicational) system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SystemId {
    Full,
    DisjFree,
    Small,
}

impl SystemId {
    pub const ALL: [SystemId; 3] = [SystemId::Full, SystemId::DisjFree, SystemId::Small];

    pub fn name(self) -> &'static str {
        match self {
            SystemId::Full => "full",
            SystemId::DisjFree => "disjfree",
            SystemId::Small => "small",
        }
    }
}

impl FromStr for SystemId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(SystemId::Full),
            "disjfree" => Ok(SystemId::DisjFree),
            "small" => Ok(SystemId::Small),
            other => Err(format!("unknown system {other:?} (full|disjfree|small)")),
        }
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn formula_in_system(a: &Formula, sys: SystemId) -> bool {
    match sys {
        SystemId::Full => true,
        SystemId::DisjFree => !a.contains_disj(),
        SystemId::Small => !a.contains_disj() && !a.contains_conj(),
    }
}

/// True iff no constructor or annotation outside `sys` occurs in `t`.
pub fn in_system(t: &Term, sys: SystemId) -> bool {
    let ok_ann = |a: &Formula| formula_in_system(a, sys);
    match t {
        Term::Var(_) => true,
        Term::Lam(_, a, m) | Term::Delta(_, a, m) => ok_ann(a) && in_system(m, sys),
        Term::App(m, n) => in_system(m, sys) && in_system(n, sys),
        Term::Pair(m, n) => sys != SystemId::Small && in_system(m, sys) && in_system(n, sys),
        Term::Proj(_, m) => sys != SystemId::Small && in_system(m, sys),
        Term::Inj(_, d, m) => sys == SystemId::Full && ok_ann(d) && in_system(m, sys),
        Term::Case {
            scrut,
            lty,
            lbody,
            rty,
            rbody,
            ..
        } => {
            sys == SystemId::Full
                && ok_ann(lty)
                && ok_ann(rty)
                && in_system(scrut, sys)
                && in_system(lbody, sys)
                && in_system(rbody, sys)
        }
    }
}

/// Type reconstruction. Returns the unique formula `A` with `ctx |- t : A`,
/// or the reason no rule applies.
pub fn infer(ctx: &Ctx, t: &Term) -> Result<Formula, TypeError> {
    infer_at(ctx, t, &mut Vec::new())
}

fn infer_at(ctx: &Ctx, t: &Term, pos: &mut Vec<usize>) -> Result<Formula, TypeError> {
    macro_rules! here {
        () => {
            Position(pos.clone())
        };
    }
    match t {
        Term::Var(x) => ctx.get(x).cloned().ok_or_else(|| TypeError::Unbound {
            pos: here!(),
            name: x.clone(),
        }),
        Term::Lam(x, a, m) => {
            let ctx2 = ctx.extended(x, a.clone());
            pos.push(0);
            let b = infer_at(&ctx2, m, pos)?;
            pos.pop();
            Ok(Formula::imp(a.clone(), b))
        }
        Term::App(m, n) => {
            pos.push(0);
            let fun_ty = infer_at(ctx, m, pos)?;
            pos.pop();
            pos.push(1);
            let arg_ty = infer_at(ctx, n, pos)?;
            pos.pop();
            match fun_ty {
                Formula::Imp(a, b) if *a == arg_ty => Ok(*b),
                Formula::Imp(a, _) => Err(TypeError::Mismatch {
                    pos: here!(),
                    reason: format!("argument has type {arg_ty}, function expects {a}"),
                }),
                other => Err(TypeError::Mismatch {
                    pos: here!(),
                    reason: format!("applied term has non-implication type {other}"),
                }),
            }
        }
        Term::Pair(m, n) => {
            pos.push(0);
            let a = infer_at(ctx, m, pos)?;
            pos.pop();
            pos.push(1);
            let b = infer_at(ctx, n, pos)?;
            pos.pop();
            Ok(Formula::conj(a, b))
        }
        Term::Proj(s, m) => {
            pos.push(0);
            let ty = infer_at(ctx, m, pos)?;
            pos.pop();
            match ty {
                Formula::Conj(a, b) => Ok(s.pick(&*a, &*b).clone()),
                other => Err(TypeError::Mismatch {
                    pos: here!(),
                    reason: format!("projection from non-conjunction type {other}"),
                }),
            }
        }
        Term::Inj(s, d, m) => {
            let (a, b) = match d {
                Formula::Disj(a, b) => (a, b),
                other => {
                    return Err(TypeError::Mismatch {
                        pos: here!(),
                        reason: format!("injection annotation {other} is not a disjunction"),
                    })
                }
            };
            pos.push(0);
            let got = infer_at(ctx, m, pos)?;
            pos.pop();
            let want = s.pick(&**a, &**b);
            if got == *want {
                Ok(d.clone())
            } else {
                Err(TypeError::Mismatch {
                    pos: here!(),
                    reason: format!(
                        "injection {} into {d} needs component {want}, got {got}",
                        s.index()
                    ),
                })
            }
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
            let sty = infer_at(ctx, scrut, pos)?;
            pos.pop();
            match sty {
                Formula::Disj(a, b) if *a == *lty && *b == *rty => {}
                Formula::Disj(a, b) => {
                    return Err(TypeError::Mismatch {
                        pos: here!(),
                        reason: format!(
                            "case binders annotated {lty} | {rty}, scrutinee has {}",
                            Formula::Disj(a, b)
                        ),
                    })
                }
                other => {
                    return Err(TypeError::Mismatch {
                        pos: here!(),
                        reason: format!("case scrutinee has non-disjunction type {other}"),
                    })
                }
            }
            let lctx = ctx.extended(lname, lty.clone());
            pos.push(1);
            let c1 = infer_at(&lctx, lbody, pos)?;
            pos.pop();
            let rctx = ctx.extended(rname, rty.clone());
            pos.push(2);
            let c2 = infer_at(&rctx, rbody, pos)?;
            pos.pop();
            if c1 == c2 {
                Ok(c1)
            } else {
                Err(TypeError::Mismatch {
                    pos: here!(),
                    reason: format!("case branches have different types {c1} and {c2}"),
                })
            }
        }
        Term::Delta(k, a, m) => {
            let ctx2 = ctx.extended(k, Formula::neg(a.clone()));
            pos.push(0);
            let body_ty = infer_at(&ctx2, m, pos)?;
            pos.pop();
            if body_ty.is_bottom() {
                Ok(a.clone())
            } else {
                Err(TypeError::Mismatch {
                    pos: here!(),
                    reason: format!("reductio body has type {body_ty}, expected Bot"),
                })
            }
        }
    }
}

/// Context typing: returns `B` with `ctx | hole_ty |- e : B`. Satisfies the
/// cut rule: `infer(ctx, e.fill(m)) = infer_ctx(ctx, e, infer(ctx, m))`.
pub fn infer_ctx(ctx: &Ctx, e: &ElimContext, hole_ty: &Formula) -> Result<Formula, TypeError> {
    match e {
        ElimContext::AppHole(n) => match hole_ty {
            Formula::Imp(a, b) => {
                let got = infer(ctx, n)?;
                if got == **a {
                    Ok((**b).clone())
                } else {
                    Err(TypeError::Mismatch {
                        pos: Position::root(),
                        reason: format!("frame argument has type {got}, hole expects {a}"),
                    })
                }
            }
            other => Err(TypeError::HoleTypeMismatch {
                expected: "an implication",
                found: other.clone(),
            }),
        },
        ElimContext::ProjHole(s) => match hole_ty {
            Formula::Conj(a, b) => Ok(s.pick(&**a, &**b).clone()),
            other => Err(TypeError::HoleTypeMismatch {
                expected: "a conjunction",
                found: other.clone(),
            }),
        },
        ElimContext::CaseHole {
            lname,
            lty,
            lbody,
            rname,
            rty,
            rbody,
        } => match hole_ty {
            Formula::Disj(a, b) if **a == *lty && **b == *rty => {
                let c1 = infer(&ctx.extended(lname, lty.clone()), lbody)?;
                let c2 = infer(&ctx.extended(rname, rty.clone()), rbody)?;
                if c1 == c2 {
                    Ok(c1)
                } else {
                    Err(TypeError::Mismatch {
                        pos: Position::root(),
                        reason: format!("frame branches have different types {c1} and {c2}"),
                    })
                }
            }
            Formula::Disj(_, _) => Err(TypeError::Mismatch {
                pos: Position::root(),
                reason: "frame binder annotations do not match the hole type".to_string(),
            }),
            other => Err(TypeError::HoleTypeMismatch {
                expected: "a disjunction",
                found: other.clone(),
            }),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::*;

    fn x_ty() -> Formula {
        Formula::atom("X")
    }

    #[test]
    fn assumption_rule() {
        let ctx = Ctx::from_pairs([("x".to_string(), x_ty())]).unwrap();
        assert_eq!(infer(&ctx, &var("x")), Ok(x_ty()));
    }

    #[test]
    fn identity_proof() {
        let t = lam("x", x_ty(), var("x"));
        assert_eq!(infer(&Ctx::new(), &t), Ok(Formula::imp(x_ty(), x_ty())));
    }

    #[test]
    fn raa_rule_from_derivation_replay() {
        // {y: Bot} |- delta k:~X. y : X   (Ass for y, then RAA)
        let ctx = Ctx::from_pairs([("y".to_string(), Formula::Bottom)]).unwrap();
        let t = delta("k", x_ty(), var("y"));
        assert_eq!(infer(&ctx, &t), Ok(x_ty()));
    }

    #[test]
    fn delta_at_not_bottom_is_allowed() {
        let ctx = Ctx::from_pairs([("y".to_string(), Formula::Bottom)]).unwrap();
        let t = delta("k", Formula::Bottom, var("y"));
        assert_eq!(infer(&ctx, &t), Ok(Formula::Bottom));
    }

    #[test]
    fn inj2_types_at_the_right_component() {
        // in2 checks its argument against the right component of the annotation.
        let ctx = Ctx::from_pairs([("y".to_string(), Formula::Bottom)]).unwrap();
        let d = Formula::disj(x_ty(), Formula::Bottom);
        assert_eq!(infer(&ctx, &inj(Side::Snd, d.clone(), var("y"))), Ok(d));
        let d = Formula::disj(Formula::Bottom, x_ty());
        assert!(infer(&ctx, &inj(Side::Snd, d, var("y"))).is_err());
    }

    #[test]
    fn infer_ctx_app_and_proj_frames() {
        let ctx = Ctx::from_pairs([("n".to_string(), x_ty())]).unwrap();
        let e = ElimContext::AppHole(var("n"));
        let b = Formula::Bottom;
        assert_eq!(infer_ctx(&ctx, &e, &Formula::imp(x_ty(), b.clone())), Ok(b));
        let e = ElimContext::ProjHole(Side::Fst);
        let a12 = Formula::conj(x_ty(), Formula::Bottom);
        assert_eq!(infer_ctx(&Ctx::new(), &e, &a12), Ok(x_ty()));
    }

    #[test]
    fn infer_ctx_rejects_unbound_branch_var() {
        let e = ElimContext::CaseHole {
            lname: "x".into(),
            lty: x_ty(),
            lbody: var("z"),
            rname: "y".into(),
            rty: x_ty(),
            rbody: var("z"),
        };
        let hole = Formula::disj(x_ty(), x_ty());
        assert!(matches!(
            infer_ctx(&Ctx::new(), &e, &hole),
            Err(TypeError::Unbound { .. })
        ));
    }

    #[test]
    fn infer_ctx_cut_rule_agrees_with_infer() {
        let ctx = Ctx::from_pairs([
            ("f".to_string(), Formula::imp(x_ty(), Formula::Bottom)),
            ("x".to_string(), x_ty()),
        ])
        .unwrap();
        let e = ElimContext::AppHole(var("x"));
        let m = var("f");
        let hole_ty = infer(&ctx, &m).unwrap();
        assert_eq!(
            infer(&ctx, &e.fill(m)).unwrap(),
            infer_ctx(&ctx, &e, &hole_ty).unwrap()
        );
    }

    #[test]
    fn system_membership() {
        assert!(!in_system(&pair(var("x"), var("y")), SystemId::Small));
        assert!(in_system(&lam("x", x_ty(), var("x")), SystemId::Small));
        assert!(!in_system(
            &inj(Side::Fst, Formula::disj(x_ty(), Formula::Bottom), var("x")),
            SystemId::DisjFree
        ));
        // annotations count: a lambda annotated with a disjunction is not disjunction-free
        assert!(!in_system(
            &lam("x", Formula::disj(x_ty(), x_ty()), var("x")),
            SystemId::DisjFree
        ));
    }

    #[test]
    fn substitution_preserves_typing_on_an_example() {
        let ctx = Ctx::from_pairs([("y".to_string(), Formula::Bottom)]).unwrap();
        let n = delta("k", x_ty(), var("y"));
        let a = infer(&ctx, &n).unwrap();
        let m = app(lam("z", x_ty(), var("z")), var("s"));
        let b = infer(&ctx.extended("s", a.clone()), &m).unwrap();
        assert_eq!(infer(&ctx, &crate::syntax::subst(&m, "s", &n)), Ok(b));
    }

    #[test]
    fn weakening_is_admissible_on_an_example() {
        let ctx = Ctx::from_pairs([("x".to_string(), x_ty())]).unwrap();
        let t = lam("z", Formula::Bottom, var("x"));
        let a = infer(&ctx, &t).unwrap();
        let bigger = ctx.extended("w", Formula::Bottom);
        assert_eq!(infer(&bigger, &t), Ok(a));
    }
}
