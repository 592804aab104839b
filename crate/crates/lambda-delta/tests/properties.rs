//! Property tests for the syntactic core: alpha-equivalence against the
//! nameless oracle, substitution laws, the frame-substitution fact, and the
//! concrete-syntax round trip.

use proptest::prelude::*;

use lambda_delta::concrete::parse_term;
use lambda_delta::syntax::{
    alpha_eq, app, case, delta, freshen_shadowing, inj, lam, nameless, pair, proj, subst,
    ElimContext, Formula, Side, Term,
};

fn formulas() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        Just(Formula::Bottom),
        Just(Formula::atom("X")),
        Just(Formula::atom("Y")),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::imp(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::conj(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::disj(a, b)),
        ]
    })
}

fn names() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("a"),
        Just("b"),
        Just("c"),
        Just("x"),
        Just("y"),
        Just("k"),
    ]
    .prop_map(str::to_string)
}

fn sides() -> impl Strategy<Value = Side> {
    prop_oneof![Just(Side::Fst), Just(Side::Snd)]
}

// well-formed, not necessarily well-typed: the syntactic laws are untyped
fn terms() -> impl Strategy<Value = Term> {
    let leaf = names().prop_map(Term::Var);
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (names(), formulas(), inner.clone()).prop_map(|(x, a, m)| lam(&x, a, m)),
            (inner.clone(), inner.clone()).prop_map(|(m, n)| app(m, n)),
            (inner.clone(), inner.clone()).prop_map(|(m, n)| pair(m, n)),
            (sides(), inner.clone()).prop_map(|(s, m)| proj(s, m)),
            (sides(), formulas(), formulas(), inner.clone()).prop_map(|(s, a, b, m)| inj(
                s,
                Formula::disj(a, b),
                m
            )),
            (
                inner.clone(),
                names(),
                formulas(),
                inner.clone(),
                names(),
                formulas(),
                inner.clone()
            )
                .prop_map(|(s, x, a, p, y, b, q)| case(s, &x, a, p, &y, b, q)),
            (names(), formulas(), inner).prop_map(|(k, a, m)| delta(&k, a, m)),
        ]
    })
}

fn frames() -> impl Strategy<Value = ElimContext> {
    prop_oneof![
        terms().prop_map(ElimContext::AppHole),
        sides().prop_map(ElimContext::ProjHole),
        (names(), formulas(), terms(), names(), formulas(), terms()).prop_map(
            |(x, a, p, y, b, q)| ElimContext::CaseHole {
                lname: x,
                lty: a,
                lbody: p,
                rname: y,
                rty: b,
                rbody: q,
            }
        ),
    ]
}

/// A canonical alpha-variant with distinct binder names.
fn alpha_variant(t: &Term) -> Term {
    freshen_shadowing(t, &std::collections::BTreeSet::new())
}

proptest! {
    #[test]
    fn alpha_eq_agrees_with_the_nameless_oracle(t1 in terms(), t2 in terms()) {
        prop_assert_eq!(alpha_eq(&t1, &t2), nameless(&t1) == nameless(&t2));
    }

    #[test]
    fn alpha_eq_is_reflexive_and_stable_under_renaming(t in terms()) {
        prop_assert!(alpha_eq(&t, &t));
        let renamed = alpha_variant(&t);
        prop_assert!(alpha_eq(&t, &renamed));
        prop_assert!(alpha_eq(&renamed, &t));
    }

    #[test]
    fn subst_of_the_same_variable_is_identity(t in terms(), x in names()) {
        let r = subst(&t, &x, &Term::Var(x.clone()));
        prop_assert!(alpha_eq(&r, &t), "[{x}/{x}]({t}) = {r}");
    }

    #[test]
    fn subst_respects_alpha_in_both_term_arguments(t in terms(), x in names(), q in terms()) {
        let t2 = alpha_variant(&t);
        let q2 = alpha_variant(&q);
        let direct = subst(&t, &x, &q);
        prop_assert!(alpha_eq(&direct, &subst(&t2, &x, &q)));
        prop_assert!(alpha_eq(&direct, &subst(&t, &x, &q2)));
    }

    #[test]
    fn substitution_commutes_with_frame_filling(
        e in frames(),
        m in terms(),
        x in names(),
        q in terms()
    ) {
        // [q/x](E[m]) == ([q/x]E)[[q/x]m]
        let lhs = subst(&e.fill(m.clone()), &x, &q);
        let rhs = e.subst(&x, &q).fill(subst(&m, &x, &q));
        prop_assert!(alpha_eq(&lhs, &rhs), "lhs {lhs}\nrhs {rhs}");
    }

    #[test]
    fn print_then_parse_is_identity_up_to_alpha(t in terms()) {
        let printed = t.to_string();
        let reparsed = parse_term(&printed);
        prop_assert!(reparsed.is_ok(), "could not reparse {printed:?}");
        prop_assert!(alpha_eq(&reparsed.unwrap(), &t), "round trip changed {printed:?}");
    }

    #[test]
    fn substitution_erases_the_variable(t in terms(), x in names(), q in terms()) {
        prop_assume!(!q.free_vars().contains(&x));
        let r = subst(&t, &x, &q);
        prop_assert!(!r.free_vars().contains(&x));
    }
}
