use hartman_core::expr::parse_expr;
use hartman_core::localize::{cutoff, eta, CutoffProfile, Remainder};
use hartman_core::linspace::{adapted_renorm, op_norm};
use hartman_core::maps::{apply_perturbed, invert_perturbed};
use hartman_core::*;
use proptest::prelude::*;

const P: u64 = 3;
const PREC: u32 = 24;

fn q3() -> FieldSpec {
    FieldSpec::padic(P, PREC).unwrap()
}

fn padic() -> impl Strategy<Value = PAdic> {
    (-6i64..6, 1u64..P.pow(PREC), any::<bool>()).prop_map(|(v, u, zero)| {
        if zero {
            PAdic::zero(P, PREC)
        } else {
            let u = if u % P == 0 { u + 1 } else { u };
            PAdic::from_parts(P, PREC, v, u)
        }
    })
}

fn padic_vec(dim: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(padic(), dim).prop_map(|c| Vector::new(q3(), c.into_iter().map(Scalar::PAdic).collect()))
}

fn real_vec(dim: usize, exponent: f64) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-5.0f64..5.0, dim)
        .prop_map(move |c| Vector::from_f64(FieldSpec::real(exponent).unwrap(), &c).unwrap())
}

proptest! {
    #[test]
    fn padic_abs_is_multiplicative(x in padic(), y in padic()) {
        // exact on valuations; the f64 values p^-v can differ by an ulp
        let xy = x * y;
        match (x.valuation(), y.valuation()) {
            (Some(a), Some(b)) => prop_assert_eq!(xy.valuation(), Some(a + b)),
            _ => prop_assert!(xy.is_zero()),
        }
        prop_assert!((xy.abs() - x.abs() * y.abs()).abs() <= 1e-15 * xy.abs());
    }

    #[test]
    fn padic_ultrametric(x in padic(), y in padic()) {
        let Ok(s) = x.checked_add(&y) else { return Ok(()) };
        prop_assert!(s.abs() <= x.abs().max(y.abs()));
        if x.abs() != y.abs() {
            prop_assert_eq!(s.abs(), x.abs().max(y.abs()));
        }
    }

    #[test]
    fn padic_double_inverse(x in padic()) {
        prop_assume!(!x.is_zero());
        prop_assert_eq!(x.inv().unwrap().inv().unwrap(), x);
    }

    #[test]
    fn padic_unit_is_coprime(x in padic()) {
        prop_assume!(!x.is_zero());
        prop_assert_ne!(x.unit() % P, 0);
    }

    #[test]
    fn ultrametric_norm_of_sum(x in padic_vec(3), y in padic_vec(3)) {
        let (nx, ny) = (NormSpec::CoordMax.norm(&x).unwrap(), NormSpec::CoordMax.norm(&y).unwrap());
        prop_assume!(nx < ny);
        prop_assert_eq!(NormSpec::CoordMax.norm(&(&x + &y)).unwrap(), ny);
    }

    #[test]
    fn block_max_matches_coord_max(x in real_vec(4, 0.5), k in 0usize..=4) {
        let block = NormSpec::BlockMax {
            dim_s: k,
            stable: Box::new(NormSpec::CoordMax),
            unstable: Box::new(NormSpec::CoordMax),
        };
        prop_assert_eq!(block.norm(&x).unwrap(), NormSpec::CoordMax.norm(&x).unwrap());
    }

    #[test]
    fn op_norm_bounds_real(entries in prop::collection::vec(-3.0f64..3.0, 9), x in real_vec(3, 1.0)) {
        let f = FieldSpec::real(1.0).unwrap();
        let rows: Vec<&[f64]> = entries.chunks(3).collect();
        let m = Matrix::from_f64_rows(f, &rows).unwrap();
        let bound = op_norm(&m, &NormSpec::CoordMax).unwrap();
        let n = NormSpec::CoordMax;
        prop_assert!(n.norm(&m.mul_vec(&x)).unwrap() <= bound * n.norm(&x).unwrap() * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn op_norm_bounds_padic(entries in prop::collection::vec(padic(), 4), x in padic_vec(2)) {
        let rows = entries.chunks(2).map(|r| r.iter().map(|s| Scalar::PAdic(*s)).collect()).collect();
        let m = Matrix::from_rows(q3(), rows).unwrap();
        let bound = op_norm(&m, &NormSpec::CoordMax).unwrap();
        let n = NormSpec::CoordMax;
        prop_assert!(n.norm(&m.mul_vec(&x)).unwrap() <= bound * n.norm(&x).unwrap() * (1.0 + 1e-15));
    }

    #[test]
    fn renorm_contracts(x in real_vec(2, 1.0)) {
        let f = FieldSpec::real(1.0).unwrap();
        // non-normal contraction: the coordinate norm grows for a step
        let b = Matrix::from_f64_rows(f, &[&[0.5, 3.0], &[0.0, 0.5]]).unwrap();
        let norm = adapted_renorm(&b, NormSpec::CoordMax, 0.8, 3.0).unwrap();
        let NormSpec::Renorm(r) = &norm else { unreachable!() };
        let nx = norm.norm(&x).unwrap();
        prop_assert!(norm.norm(&b.mul_vec(&x)).unwrap() <= r.contraction_bound() * nx + 1e-9);
    }

    #[test]
    fn renorm_of_ultrametric_is_ultrametric(x in padic_vec(2), y in padic_vec(2)) {
        let b = Matrix::from_rows(q3(), vec![
            vec![q3().parse_literal("3:1:1").unwrap(), q3().parse_literal("3:-1:1").unwrap()],
            vec![q3().zero(), q3().parse_literal("3:1:1").unwrap()],
        ]).unwrap();
        let norm = adapted_renorm(&b, NormSpec::CoordMax, 1.0 / 3.0, 3.0).unwrap();
        let s = norm.norm(&(&x + &y)).unwrap();
        prop_assert!(s <= norm.norm(&x).unwrap().max(norm.norm(&y).unwrap()));
    }

    #[test]
    fn inverse_solves_and_is_lipschitz(a in real_vec(2, 1.0), b in real_vec(2, 1.0)) {
        let f = FieldSpec::real(1.0).unwrap();
        let m = Matrix::from_f64_rows(f, &[&[0.5, 0.0], &[0.0, 2.0]]).unwrap();
        let sys = check_hyperbolic(&m, Splitting::new(1, 1), NormSpec::CoordMax).unwrap();
        let v = Perturbation::damped_sin(f, 2, 0.1, 1.0).unwrap();
        let tol = 1e-12;
        let ya = invert_perturbed(&sys, &v, &a, tol).unwrap();
        let yb = invert_perturbed(&sys, &v, &b, tol).unwrap();
        let back = apply_perturbed(&sys, &v, &ya).unwrap();
        prop_assert!(sys.norm(&(&back - &a)).unwrap() <= tol * 10.0);
        let c = sys.constants();
        let lip = 1.0 / (1.0 / c.a_inv_norm - v.lip()) + 1e-6;
        prop_assert!(sys.norm(&(&ya - &yb)).unwrap() <= lip * sys.norm(&(&a - &b)).unwrap() + 1e-9);
        let drift = sys.norm(&(&ya - &sys.apply_inv(&a))).unwrap();
        prop_assert!(drift <= c.a_inv_norm * v.sup() + 1e-9);
    }

    #[test]
    fn eta_is_a_profile(t in -1.0f64..5.0, u in -1.0f64..5.0) {
        let e = eta(t);
        prop_assert!((0.0..=1.0).contains(&e));
        prop_assert!((e - eta(u)).abs() <= CutoffProfile::LIP_ETA * (t - u).abs() + 1e-15);
    }

    #[test]
    fn real_cutoff_agrees_inside(x in real_vec(2, 1.0), s in 0.01f64..0.33) {
        let f = FieldSpec::real(1.0).unwrap();
        let r = Remainder::new("square", f, 2, |y: &Vector| {
            let c = y.to_f64().unwrap();
            Vector::from_f64(y.field(), &[c[1] * c[1], c[0] * c[0]])
        }, |r| 2.0 * r).unwrap();
        let x = x.scale(Scalar::Real(s / 5.0));
        let rs = cutoff(&r, s, CutoffProfile::RealBump).unwrap();
        prop_assert_eq!(rs.apply(&x).unwrap(), r.apply(&x).unwrap());
    }

    #[test]
    fn parser_round_trip(text in expr_text()) {
        let f = FieldSpec::real(1.0).unwrap();
        let ast = parse_expr(&text, 2, f).unwrap();
        let again = parse_expr(&ast.to_string(), 2, f).unwrap();
        prop_assert_eq!(&again, &ast);
        prop_assert_eq!(again.to_string(), ast.to_string());
    }
}

fn expr_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x1".to_string()),
        Just("x2".to_string()),
        (0u32..100).prop_map(|n| format!("{}", n as f64 / 8.0)),
    ];
    let scalar = leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), prop::sample::select(vec!["+", "-", "*"]))
                .prop_map(|(a, b, op)| format!("{a} {op} {b}")),
            inner.clone().prop_map(|a| format!("-({a})")),
            inner.clone().prop_map(|a| format!("abs({a})")),
            inner.clone().prop_map(|a| format!("tanh({a})")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("max({a}, {b})")),
        ]
    });
    (scalar.clone(), scalar).prop_map(|(a, b)| format!("({a}, {b})"))
}
