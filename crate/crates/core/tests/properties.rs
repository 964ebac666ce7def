use duval::poisson::{casimir_check, jacobi_check, pichereau_from, XYZ};
use duval::poly::{int, normal_form, MonomialOrder, Poly, RatFn};
use proptest::prelude::*;

fn arb_poly() -> impl Strategy<Value = Poly> {
    prop::collection::vec(((0u32..3, 0u32..3, 0u32..4), -4i64..=4), 0..5).prop_map(|ts| {
        let mut p = Poly::zero(&XYZ);
        for ((a, b, c), k) in ts {
            p = &p + &p.monomial_like(vec![a, b, c], int(k));
        }
        p
    })
}

fn point() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-3i64..=3, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn ring_axioms(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&(&a + &b) - &b, a.clone());
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn evaluation_is_a_ring_map(a in arb_poly(), b in arb_poly(), p in point()) {
        let pt: Vec<_> = p.into_iter().map(int).collect();
        prop_assert_eq!((&a * &b).eval_exact(&pt), a.eval_exact(&pt) * b.eval_exact(&pt));
        prop_assert_eq!((&a + &b).eval_exact(&pt), a.eval_exact(&pt) + b.eval_exact(&pt));
    }

    #[test]
    fn display_parses_back(a in arb_poly()) {
        prop_assert_eq!(Poly::parse(&a.to_string(), &XYZ).unwrap(), a);
    }

    #[test]
    fn partials_obey_leibniz(a in arb_poly(), b in arb_poly()) {
        for i in 0..3 {
            let lhs = (&a * &b).partial_idx(i);
            let rhs = &(&a.partial_idx(i) * &b) + &(&a * &b.partial_idx(i));
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn normal_form_ignores_the_ideal(a in arb_poly(), h in arb_poly(), k in 1u32..4) {
        let g = Poly::parse(&format!("x^2 + y^2 - z^{}", 2 * k), &XYZ).unwrap();
        let lex = MonomialOrder::lex(3);
        let nf = normal_form(&a, &g, &lex);
        prop_assert_eq!(normal_form(&nf, &g, &lex), nf.clone());
        prop_assert_eq!(normal_form(&(&a + &(&g * &h)), &g, &lex), nf);
    }

    #[test]
    fn rational_inverse(a in arb_poly(), b in arb_poly()) {
        prop_assume!(!a.is_zero() && !b.is_zero());
        let f = RatFn::new(a.clone(), b.clone()).unwrap();
        let g = RatFn::new(b, a).unwrap();
        prop_assert_eq!(f.mul(&g).as_poly(), Some(f.num().one_like()));
    }

    #[test]
    fn jacobian_brackets_are_poisson(f in arb_poly()) {
        prop_assume!(!f.is_constant());
        let s = pichereau_from(&f).unwrap();
        prop_assert!(jacobi_check(&s).is_zero);
        prop_assert!(casimir_check(&s).is_zero);
    }
}

#[test]
fn expression_corpus_round_trips() {
    let corpus = include_str!("data/expr_corpus.txt");
    let lines: Vec<&str> = corpus.lines().filter(|l| !l.trim().is_empty()).collect();
    assert_eq!(lines.len(), 50);
    for line in lines {
        let e = duval::expr::Expr::parse(line).unwrap_or_else(|err| panic!("{line}: {err}"));
        assert_eq!(e.to_string(), line);
        assert_eq!(duval::expr::Expr::parse(&e.to_string()).unwrap(), e);
    }
}
