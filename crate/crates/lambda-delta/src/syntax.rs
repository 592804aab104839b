//! Formulas, proof terms, elimination contexts and positions, together with
//! the basic syntactic operations: free variables, deterministic freshening,
//! capture-avoiding substitution, alpha-equivalence and a nameless form.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

pub type Name = String;

/// Propositional formulas. Negation is not a constructor: `~A` is `Imp(A, Bottom)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(Name),
    Bottom,
    Imp(Box<Formula>, Box<Formula>),
    Conj(Box<Formula>, Box<Formula>),
    Disj(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn imp(a: Formula, b: Formula) -> Formula {
        Formula::Imp(Box::new(a), Box::new(b))
    }

    pub fn conj(a: Formula, b: Formula) -> Formula {
        Formula::Conj(Box::new(a), Box::new(b))
    }

    pub fn disj(a: Formula, b: Formula) -> Formula {
        Formula::Disj(Box::new(a), Box::new(b))
    }

    /// `~A`, i.e. `A -> Bot`.
    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: Formula) -> Formula {
        Formula::imp(a, Formula::Bottom)
    }

    pub fn atom(s: &str) -> Formula {
        Formula::Atom(s.to_string())
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, Formula::Bottom)
    }

    /// Number of nodes (atoms, Bot and connectives all count 1).
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::Bottom => 1,
            Formula::Imp(a, b) | Formula::Conj(a, b) | Formula::Disj(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }

    pub fn contains_disj(&self) -> bool {
        match self {
            Formula::Atom(_) | Formula::Bottom => false,
            Formula::Disj(_, _) => true,
            Formula::Imp(a, b) | Formula::Conj(a, b) => a.contains_disj() || b.contains_disj(),
        }
    }

    pub fn contains_conj(&self) -> bool {
        match self {
            Formula::Atom(_) | Formula::Bottom => false,
            Formula::Conj(_, _) => true,
            Formula::Imp(a, b) | Formula::Disj(a, b) => a.contains_conj() || b.contains_conj(),
        }
    }
}

/// Projection / injection index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Fst,
    Snd,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Fst, Side::Snd];

    pub fn index(self) -> usize {
        match self {
            Side::Fst => 1,
            Side::Snd => 2,
        }
    }

    pub fn pick<'a, T>(self, a: &'a T, b: &'a T) -> &'a T {
        match self {
            Side::Fst => a,
            Side::Snd => b,
        }
    }
}

/// Annotated proof terms. Every binder carries a formula so that type
/// reconstruction is syntax-directed: `Lam(x, A, m)` is `\x:A. m`,
/// `Delta(k, A, m)` is `delta k:~A. m` (the binder has type `~A`), and
/// `Inj` carries the full disjunction it introduces.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Name),
    Lam(Name, Formula, Box<Term>),
    App(Box<Term>, Box<Term>),
    Pair(Box<Term>, Box<Term>),
    Proj(Side, Box<Term>),
    Inj(Side, Formula, Box<Term>),
    Case {
        scrut: Box<Term>,
        lname: Name,
        lty: Formula,
        lbody: Box<Term>,
        rname: Name,
        rty: Formula,
        rbody: Box<Term>,
    },
    Delta(Name, Formula, Box<Term>),
}

pub fn var(x: &str) -> Term {
    Term::Var(x.to_string())
}

pub fn lam(x: &str, a: Formula, m: Term) -> Term {
    Term::Lam(x.to_string(), a, Box::new(m))
}

pub fn app(m: Term, n: Term) -> Term {
    Term::App(Box::new(m), Box::new(n))
}

pub fn pair(m: Term, n: Term) -> Term {
    Term::Pair(Box::new(m), Box::new(n))
}

pub fn proj(i: Side, m: Term) -> Term {
    Term::Proj(i, Box::new(m))
}

pub fn inj(i: Side, d: Formula, m: Term) -> Term {
    Term::Inj(i, d, Box::new(m))
}

#[allow(clippy::too_many_arguments)]
pub fn case(scrut: Term, x: &str, a: Formula, p: Term, y: &str, b: Formula, q: Term) -> Term {
    Term::Case {
        scrut: Box::new(scrut),
        lname: x.to_string(),
        lty: a,
        lbody: Box::new(p),
        rname: y.to_string(),
        rty: b,
        rbody: Box::new(q),
    }
}

pub fn delta(k: &str, a: Formula, m: Term) -> Term {
    Term::Delta(k.to_string(), a, Box::new(m))
}

/// The identity proof `\x:Bot. x` used by the `rho3` and `iota` rules.
pub fn identity_bot() -> Term {
    lam("x", Formula::Bottom, var("x"))
}

pub fn is_identity_bot(t: &Term) -> bool {
    match t {
        Term::Lam(x, Formula::Bottom, body) => matches!(&**body, Term::Var(y) if y == x),
        _ => false,
    }
}

/// A path of child indices in constructor-argument order:
/// `App = (0 fun, 1 arg)`, `Pair = (0 fst, 1 snd)`, `Case = (0 scrut, 1 left
/// branch, 2 right branch)`; unary constructors have the child at 0.
/// Binder names and formula annotations are not children.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Position(pub Vec<usize>);

impl Position {
    pub fn root() -> Position {
        Position(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, i: usize) -> Position {
        let mut v = self.0.clone();
        v.push(i);
        Position(v)
    }

    pub fn join(&self, other: &Position) -> Position {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Position(v)
    }

    pub fn is_prefix_of(&self, other: &Position) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    pub fn disjoint(&self, other: &Position) -> bool {
        !self.is_prefix_of(other) && !other.is_prefix_of(self)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

impl Term {
    pub fn child_count(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::Lam(_, _, _) | Term::Proj(_, _) | Term::Inj(_, _, _) | Term::Delta(_, _, _) => 1,
            Term::App(_, _) | Term::Pair(_, _) => 2,
            Term::Case { .. } => 3,
        }
    }

    pub fn child(&self, i: usize) -> Option<&Term> {
        match (self, i) {
            (Term::Lam(_, _, m), 0)
            | (Term::Proj(_, m), 0)
            | (Term::Inj(_, _, m), 0)
            | (Term::Delta(_, _, m), 0) => Some(m),
            (Term::App(m, _), 0) | (Term::Pair(m, _), 0) => Some(m),
            (Term::App(_, n), 1) | (Term::Pair(_, n), 1) => Some(n),
            (Term::Case { scrut, .. }, 0) => Some(scrut),
            (Term::Case { lbody, .. }, 1) => Some(lbody),
            (Term::Case { rbody, .. }, 2) => Some(rbody),
            _ => None,
        }
    }

    pub fn subterm(&self, pos: &Position) -> Option<&Term> {
        let mut cur = self;
        for &i in &pos.0 {
            cur = cur.child(i)?;
        }
        Some(cur)
    }

    /// Rebuilds the term with `replacement` at `pos`. Panics on an invalid position.
    pub fn with_subterm(&self, pos: &Position, replacement: Term) -> Term {
        fn go(t: &Term, path: &[usize], replacement: Term) -> Term {
            let Some((&i, rest)) = path.split_first() else {
                return replacement;
            };
            match t {
                Term::Lam(x, a, m) => {
                    assert_eq!(i, 0);
                    Term::Lam(x.clone(), a.clone(), Box::new(go(m, rest, replacement)))
                }
                Term::Proj(s, m) => {
                    assert_eq!(i, 0);
                    Term::Proj(*s, Box::new(go(m, rest, replacement)))
                }
                Term::Inj(s, d, m) => {
                    assert_eq!(i, 0);
                    Term::Inj(*s, d.clone(), Box::new(go(m, rest, replacement)))
                }
                Term::Delta(k, a, m) => {
                    assert_eq!(i, 0);
                    Term::Delta(k.clone(), a.clone(), Box::new(go(m, rest, replacement)))
                }
                Term::App(m, n) => match i {
                    0 => app(go(m, rest, replacement), (**n).clone()),
                    1 => app((**m).clone(), go(n, rest, replacement)),
                    _ => panic!("bad position"),
                },
                Term::Pair(m, n) => match i {
                    0 => pair(go(m, rest, replacement), (**n).clone()),
                    1 => pair((**m).clone(), go(n, rest, replacement)),
                    _ => panic!("bad position"),
                },
                Term::Case {
                    scrut,
                    lname,
                    lty,
                    lbody,
                    rname,
                    rty,
                    rbody,
                } => {
                    let mut s = (**scrut).clone();
                    let mut p = (**lbody).clone();
                    let mut q = (**rbody).clone();
                    match i {
                        0 => s = go(scrut, rest, replacement),
                        1 => p = go(lbody, rest, replacement),
                        2 => q = go(rbody, rest, replacement),
                        _ => panic!("bad position"),
                    }
                    case(s, lname, lty.clone(), p, rname, rty.clone(), q)
                }
                Term::Var(_) => panic!("bad position"),
            }
        }
        go(self, &pos.0, replacement)
    }

    /// Number of term constructors. Annotations do not count.
    pub fn size(&self) -> usize {
        let mut n = 1;
        for i in 0..self.child_count() {
            n += self.child(i).unwrap().size();
        }
        n
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        fn go(t: &Term, acc: &mut BTreeSet<Name>, bound: &mut Vec<Name>) {
            match t {
                Term::Var(x) => {
                    if !bound.iter().any(|b| b == x) {
                        acc.insert(x.clone());
                    }
                }
                Term::Lam(x, _, m) | Term::Delta(x, _, m) => {
                    bound.push(x.clone());
                    go(m, acc, bound);
                    bound.pop();
                }
                Term::App(m, n) | Term::Pair(m, n) => {
                    go(m, acc, bound);
                    go(n, acc, bound);
                }
                Term::Proj(_, m) | Term::Inj(_, _, m) => go(m, acc, bound),
                Term::Case {
                    scrut,
                    lname,
                    lbody,
                    rname,
                    rbody,
                    ..
                } => {
                    go(scrut, acc, bound);
                    bound.push(lname.clone());
                    go(lbody, acc, bound);
                    bound.pop();
                    bound.push(rname.clone());
                    go(rbody, acc, bound);
                    bound.pop();
                }
            }
        }
        let mut acc = BTreeSet::new();
        go(self, &mut acc, &mut Vec::new());
        acc
    }

    /// Positions of the free occurrences of `x`, in leftmost order.
    pub fn free_occurrences(&self, x: &str) -> Vec<Position> {
        fn go(t: &Term, x: &str, pos: &mut Vec<usize>, acc: &mut Vec<Position>) {
            match t {
                Term::Var(y) => {
                    if y == x {
                        acc.push(Position(pos.clone()));
                    }
                }
                Term::Lam(y, _, m) | Term::Delta(y, _, m) => {
                    if y != x {
                        pos.push(0);
                        go(m, x, pos, acc);
                        pos.pop();
                    }
                }
                Term::Case {
                    scrut,
                    lname,
                    lbody,
                    rname,
                    rbody,
                    ..
                } => {
                    pos.push(0);
                    go(scrut, x, pos, acc);
                    pos.pop();
                    if lname != x {
                        pos.push(1);
                        go(lbody, x, pos, acc);
                        pos.pop();
                    }
                    if rname != x {
                        pos.push(2);
                        go(rbody, x, pos, acc);
                        pos.pop();
                    }
                }
                _ => {
                    for i in 0..t.child_count() {
                        pos.push(i);
                        go(t.child(i).unwrap(), x, pos, acc);
                        pos.pop();
                    }
                }
            }
        }
        let mut acc = Vec::new();
        go(self, x, &mut Vec::new(), &mut acc);
        acc
    }
}

static PRIME_BASE: AtomicUsize = AtomicUsize::new(0);

/// Base number of primes tried first by `fresh`. Settable once from the CLI
/// (`LDK_SEED`) so freshened names in traces are reproducible across runs.
pub fn set_prime_base(n: usize) {
    PRIME_BASE.store(n, Ordering::Relaxed);
}

/// Deterministic fresh name: strips the primes off `hint` and returns the
/// first primed variant of the stem not in `avoid`.
pub fn fresh(avoid: &BTreeSet<Name>, hint: &str) -> Name {
    let stem = hint.trim_end_matches('\'');
    let stem = if stem.is_empty() { "v" } else { stem };
    let mut i = PRIME_BASE.load(Ordering::Relaxed);
    loop {
        let cand = format!("{}{}", stem, "'".repeat(i));
        if !avoid.contains(&cand) {
            return cand;
        }
        i += 1;
    }
}

/// Capture-avoiding substitution `[q/x]t`. Bound variables are renamed with
/// `fresh` only when they would capture a free variable of `q`.
pub fn subst(t: &Term, x: &str, q: &Term) -> Term {
    let fv_q = q.free_vars();
    subst_in(t, x, q, &fv_q)
}

fn subst_in(t: &Term, x: &str, q: &Term, fv_q: &BTreeSet<Name>) -> Term {
    match t {
        Term::Var(y) => {
            if y == x {
                q.clone()
            } else {
                t.clone()
            }
        }
        Term::Lam(y, a, m) => {
            if y == x {
                t.clone()
            } else if fv_q.contains(y) && m.free_vars().contains(x) {
                let mut avoid = fv_q.clone();
                avoid.extend(m.free_vars());
                avoid.insert(x.to_string());
                let y2 = fresh(&avoid, y);
                let m2 = subst(m, y, &Term::Var(y2.clone()));
                Term::Lam(y2, a.clone(), Box::new(subst_in(&m2, x, q, fv_q)))
            } else {
                Term::Lam(y.clone(), a.clone(), Box::new(subst_in(m, x, q, fv_q)))
            }
        }
        Term::Delta(y, a, m) => {
            if y == x {
                t.clone()
            } else if fv_q.contains(y) && m.free_vars().contains(x) {
                let mut avoid = fv_q.clone();
                avoid.extend(m.free_vars());
                avoid.insert(x.to_string());
                let y2 = fresh(&avoid, y);
                let m2 = subst(m, y, &Term::Var(y2.clone()));
                Term::Delta(y2, a.clone(), Box::new(subst_in(&m2, x, q, fv_q)))
            } else {
                Term::Delta(y.clone(), a.clone(), Box::new(subst_in(m, x, q, fv_q)))
            }
        }
        Term::App(m, n) => app(subst_in(m, x, q, fv_q), subst_in(n, x, q, fv_q)),
        Term::Pair(m, n) => pair(subst_in(m, x, q, fv_q), subst_in(n, x, q, fv_q)),
        Term::Proj(s, m) => proj(*s, subst_in(m, x, q, fv_q)),
        Term::Inj(s, d, m) => inj(*s, d.clone(), subst_in(m, x, q, fv_q)),
        Term::Case {
            scrut,
            lname,
            lty,
            lbody,
            rname,
            rty,
            rbody,
        } => {
            let scrut2 = subst_in(scrut, x, q, fv_q);
            let (lname2, lbody2) = subst_branch(lname, lbody, x, q, fv_q);
            let (rname2, rbody2) = subst_branch(rname, rbody, x, q, fv_q);
            case(
                scrut2,
                &lname2,
                lty.clone(),
                lbody2,
                &rname2,
                rty.clone(),
                rbody2,
            )
        }
    }
}

fn subst_branch(
    binder: &str,
    body: &Term,
    x: &str,
    q: &Term,
    fv_q: &BTreeSet<Name>,
) -> (Name, Term) {
    if binder == x {
        (binder.to_string(), body.clone())
    } else if fv_q.contains(binder) && body.free_vars().contains(x) {
        let mut avoid = fv_q.clone();
        avoid.extend(body.free_vars());
        avoid.insert(x.to_string());
        let b2 = fresh(&avoid, binder);
        let body2 = subst(body, binder, &Term::Var(b2.clone()));
        (b2.clone(), subst_in(&body2, x, q, fv_q))
    } else {
        (binder.to_string(), subst_in(body, x, q, fv_q))
    }
}

/// Renames binders so that no binder shadows a name in `taken` or an
/// enclosing binder. Applied to parsed input so contexts stay duplicate-free.
pub fn freshen_shadowing(t: &Term, taken: &BTreeSet<Name>) -> Term {
    fn enter(binder: &Name, body: &Term, scope: &mut BTreeSet<Name>) -> (Name, Term, bool) {
        if scope.contains(binder) {
            let mut avoid = scope.clone();
            avoid.extend(body.free_vars());
            let b2 = fresh(&avoid, binder);
            let body2 = subst(body, binder, &Term::Var(b2.clone()));
            (b2, body2, true)
        } else {
            (binder.clone(), body.clone(), false)
        }
    }
    fn go(t: &Term, scope: &mut BTreeSet<Name>) -> Term {
        match t {
            Term::Var(_) => t.clone(),
            Term::Lam(x, a, m) => {
                let (x2, m2, _) = enter(x, m, scope);
                scope.insert(x2.clone());
                let m3 = go(&m2, scope);
                scope.remove(&x2);
                Term::Lam(x2, a.clone(), Box::new(m3))
            }
            Term::Delta(k, a, m) => {
                let (k2, m2, _) = enter(k, m, scope);
                scope.insert(k2.clone());
                let m3 = go(&m2, scope);
                scope.remove(&k2);
                Term::Delta(k2, a.clone(), Box::new(m3))
            }
            Term::App(m, n) => app(go(m, scope), go(n, scope)),
            Term::Pair(m, n) => pair(go(m, scope), go(n, scope)),
            Term::Proj(s, m) => proj(*s, go(m, scope)),
            Term::Inj(s, d, m) => inj(*s, d.clone(), go(m, scope)),
            Term::Case {
                scrut,
                lname,
                lty,
                lbody,
                rname,
                rty,
                rbody,
            } => {
                let s2 = go(scrut, scope);
                let (ln2, lb2, _) = enter(lname, lbody, scope);
                scope.insert(ln2.clone());
                let lb3 = go(&lb2, scope);
                scope.remove(&ln2);
                let (rn2, rb2, _) = enter(rname, rbody, scope);
                scope.insert(rn2.clone());
                let rb3 = go(&rb2, scope);
                scope.remove(&rn2);
                case(s2, &ln2, lty.clone(), lb3, &rn2, rty.clone(), rb3)
            }
        }
    }
    let mut scope = taken.clone();
    scope.extend(t.free_vars());
    go(t, &mut scope)
}

/// One-frame elimination contexts: `[.]N`, `pi([.])` and `case([.], ...)`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum ElimContext {
    AppHole(Term),
    ProjHole(Side),
    CaseHole {
        lname: Name,
        lty: Formula,
        lbody: Term,
        rname: Name,
        rty: Formula,
        rbody: Term,
    },
}

/// The three frame flavours `E_imp | E_conj | E_disj`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Imp,
    Conj,
    Disj,
}

impl ElimContext {
    pub fn kind(&self) -> FrameKind {
        match self {
            ElimContext::AppHole(_) => FrameKind::Imp,
            ElimContext::ProjHole(_) => FrameKind::Conj,
            ElimContext::CaseHole { .. } => FrameKind::Disj,
        }
    }

    pub fn fill(&self, m: Term) -> Term {
        match self {
            ElimContext::AppHole(n) => app(m, n.clone()),
            ElimContext::ProjHole(s) => proj(*s, m),
            ElimContext::CaseHole {
                lname,
                lty,
                lbody,
                rname,
                rty,
                rbody,
            } => case(
                m,
                lname,
                lty.clone(),
                lbody.clone(),
                rname,
                rty.clone(),
                rbody.clone(),
            ),
        }
    }

    /// Splits `t` into a frame and its main-premise subterm, if `t` is an
    /// elimination.
    pub fn split(t: &Term) -> Option<(ElimContext, &Term)> {
        match t {
            Term::App(m, n) => Some((ElimContext::AppHole((**n).clone()), m)),
            Term::Proj(s, m) => Some((ElimContext::ProjHole(*s), m)),
            Term::Case {
                scrut,
                lname,
                lty,
                lbody,
                rname,
                rty,
                rbody,
            } => Some((
                ElimContext::CaseHole {
                    lname: lname.clone(),
                    lty: lty.clone(),
                    lbody: (**lbody).clone(),
                    rname: rname.clone(),
                    rty: rty.clone(),
                    rbody: (**rbody).clone(),
                },
                scrut,
            )),
            _ => None,
        }
    }

    /// `[q/x]E`: substitution applied to the frame's own subterms.
    pub fn subst(&self, x: &str, q: &Term) -> ElimContext {
        match self {
            ElimContext::AppHole(n) => ElimContext::AppHole(subst(n, x, q)),
            ElimContext::ProjHole(s) => ElimContext::ProjHole(*s),
            ElimContext::CaseHole {
                lname,
                lty,
                lbody,
                rname,
                rty,
                rbody,
            } => {
                let fv_q = q.free_vars();
                let (ln2, lb2) = subst_branch(lname, lbody, x, q, &fv_q);
                let (rn2, rb2) = subst_branch(rname, rbody, x, q, &fv_q);
                ElimContext::CaseHole {
                    lname: ln2,
                    lty: lty.clone(),
                    lbody: lb2,
                    rname: rn2,
                    rty: rty.clone(),
                    rbody: rb2,
                }
            }
        }
    }
}

/// Nameless (de Bruijn) mirror of `Term`; annotations are kept verbatim.
/// Used as the alpha-class key for reduction graphs and as the independent
/// oracle for `alpha_eq` in tests.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DbTerm {
    Free(Name),
    Bound(usize),
    Lam(Formula, Box<DbTerm>),
    App(Box<DbTerm>, Box<DbTerm>),
    Pair(Box<DbTerm>, Box<DbTerm>),
    Proj(Side, Box<DbTerm>),
    Inj(Side, Formula, Box<DbTerm>),
    Case(Box<DbTerm>, Formula, Box<DbTerm>, Formula, Box<DbTerm>),
    Delta(Formula, Box<DbTerm>),
}

pub fn nameless(t: &Term) -> DbTerm {
    fn go(t: &Term, env: &mut Vec<Name>) -> DbTerm {
        match t {
            Term::Var(x) => match env.iter().rev().position(|b| b == x) {
                Some(i) => DbTerm::Bound(i),
                None => DbTerm::Free(x.clone()),
            },
            Term::Lam(x, a, m) => {
                env.push(x.clone());
                let r = DbTerm::Lam(a.clone(), Box::new(go(m, env)));
                env.pop();
                r
            }
            Term::Delta(k, a, m) => {
                env.push(k.clone());
                let r = DbTerm::Delta(a.clone(), Box::new(go(m, env)));
                env.pop();
                r
            }
            Term::App(m, n) => DbTerm::App(Box::new(go(m, env)), Box::new(go(n, env))),
            Term::Pair(m, n) => DbTerm::Pair(Box::new(go(m, env)), Box::new(go(n, env))),
            Term::Proj(s, m) => DbTerm::Proj(*s, Box::new(go(m, env))),
            Term::Inj(s, d, m) => DbTerm::Inj(*s, d.clone(), Box::new(go(m, env))),
            Term::Case {
                scrut,
                lname,
                lty,
                lbody,
                rname,
                rty,
                rbody,
            } => {
                let s = go(scrut, env);
                env.push(lname.clone());
                let p = go(lbody, env);
                env.pop();
                env.push(rname.clone());
                let q = go(rbody, env);
                env.pop();
                DbTerm::Case(
                    Box::new(s),
                    lty.clone(),
                    Box::new(p),
                    rty.clone(),
                    Box::new(q),
                )
            }
        }
    }
    go(t, &mut Vec::new())
}

/// Alpha-equivalence: equal up to bound-variable names; annotations and free
/// variables must match exactly. Implemented directly with paired binder
/// stacks, independently of `nameless`.
pub fn alpha_eq(t1: &Term, t2: &Term) -> bool {
    fn go(t1: &Term, t2: &Term, env: &mut Vec<(Name, Name)>) -> bool {
        match (t1, t2) {
            (Term::Var(x), Term::Var(y)) => {
                for (a, b) in env.iter().rev() {
                    let hit1 = a == x;
                    let hit2 = b == y;
                    if hit1 || hit2 {
                        return hit1 && hit2;
                    }
                }
                x == y
            }
            (Term::Lam(x, a, m), Term::Lam(y, b, n)) => {
                a == b && {
                    env.push((x.clone(), y.clone()));
                    let r = go(m, n, env);
                    env.pop();
                    r
                }
            }
            (Term::Delta(x, a, m), Term::Delta(y, b, n)) => {
                a == b && {
                    env.push((x.clone(), y.clone()));
                    let r = go(m, n, env);
                    env.pop();
                    r
                }
            }
            (Term::App(m1, n1), Term::App(m2, n2)) | (Term::Pair(m1, n1), Term::Pair(m2, n2)) => {
                go(m1, m2, env) && go(n1, n2, env)
            }
            (Term::Proj(s1, m1), Term::Proj(s2, m2)) => s1 == s2 && go(m1, m2, env),
            (Term::Inj(s1, d1, m1), Term::Inj(s2, d2, m2)) => {
                s1 == s2 && d1 == d2 && go(m1, m2, env)
            }
            (
                Term::Case {
                    scrut: s1,
                    lname: x1,
                    lty: a1,
                    lbody: p1,
                    rname: y1,
                    rty: b1,
                    rbody: q1,
                },
                Term::Case {
                    scrut: s2,
                    lname: x2,
                    lty: a2,
                    lbody: p2,
                    rname: y2,
                    rty: b2,
                    rbody: q2,
                },
            ) => {
                a1 == a2
                    && b1 == b2
                    && go(s1, s2, env)
                    && {
                        env.push((x1.clone(), x2.clone()));
                        let r = go(p1, p2, env);
                        env.pop();
                        r
                    }
                    && {
                        env.push((y1.clone(), y2.clone()));
                        let r = go(q1, q2, env);
                        env.pop();
                        r
                    }
            }
            _ => false,
        }
    }
    go(t1, t2, &mut Vec::new())
}
