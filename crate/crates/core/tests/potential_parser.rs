use hypercmc::expr::{parse_expr, BinOp, Func, HoloExpr};
use hypercmc::frameflow::DomainGrid;
use hypercmc::potential::{
    builtin_cylinder, builtin_radial, builtin_revolution, builtin_trinoid, builtin_umbilic, revolution_b_roots, validate_potential,
    PotentialSpec, RootChoice,
};
use hypercmc::C64;
use proptest::prelude::*;

const CORPUS: &str = include_str!("data/expr_corpus.txt");

fn builtins() -> Vec<(PotentialSpec, DomainGrid)> {
    let g = |re: [f64; 2], im: [f64; 2], base: C64| DomainGrid::new(re, im, 21, 21, base).unwrap();
    let (b, _) = revolution_b_roots(0.1, 0.3).unwrap();
    let h = parse_expr("exp(1i*z)").unwrap();
    vec![
        (builtin_umbilic(), g([-0.9, 0.9], [-0.9, 0.9], C64::new(0.0, 0.0))),
        (builtin_revolution(0.3, 0.3, RootChoice::Larger).unwrap().0, g([-1.0, 1.0], [0.0, 6.0], C64::new(0.0, 0.0))),
        (builtin_radial(2).unwrap(), g([-1.0, 1.0], [-1.0, 1.0], C64::new(0.0, 0.0))),
        (builtin_cylinder(&h, 2.0 * std::f64::consts::PI, 0.3, 0.3).unwrap().0, g([0.0, 6.0], [-0.5, 0.5], C64::new(0.0, 0.0))),
        (builtin_trinoid(0.1, b, 0.3).unwrap().0, g([0.2, 0.8], [-0.3, 0.3], C64::new(0.5, 0.0))),
    ]
}

fn corpus() -> Vec<String> {
    let mut v: Vec<String> = CORPUS.lines().filter(|l| !l.trim().is_empty()).map(String::from).collect();
    for (p, _) in builtins() {
        v.extend(p.entries.values().map(|e| e.to_string()));
    }
    v
}

/// Plain recursive evaluation with the textbook complex power e^{y log x}.
fn reference_eval(e: &HoloExpr, z: C64) -> Option<C64> {
    Some(match e {
        HoloExpr::Num(v) => *v,
        HoloExpr::Z => z,
        HoloExpr::Pi => C64::new(std::f64::consts::PI, 0.0),
        HoloExpr::E => C64::new(std::f64::consts::E, 0.0),
        HoloExpr::Neg(a) => -reference_eval(a, z)?,
        HoloExpr::Bin(op, a, b) => {
            let (x, y) = (reference_eval(a, z)?, reference_eval(b, z)?);
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y.norm() < 1e-14 {
                        return None;
                    }
                    x / y
                }
                BinOp::Pow => {
                    if x.norm() == 0.0 {
                        if y.re > 0.0 {
                            C64::new(0.0, 0.0)
                        } else if y == C64::new(0.0, 0.0) {
                            C64::new(1.0, 0.0)
                        } else {
                            return None;
                        }
                    } else {
                        (y * x.ln()).exp()
                    }
                }
            }
        }
        HoloExpr::Call(f, a) => {
            let x = reference_eval(a, z)?;
            match f {
                Func::Exp => x.exp(),
                Func::Log => {
                    if x.norm() < 1e-14 {
                        return None;
                    }
                    x.ln()
                }
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Sqrt => x.sqrt(),
            }
        }
    })
}

#[test]
fn corpus_has_two_hundred_cases() {
    assert!(corpus().len() >= 200);
}

#[test]
fn print_parse_round_trip_on_corpus() {
    for s in corpus() {
        let e = parse_expr(&s).unwrap_or_else(|err| panic!("{s:?}: {err}"));
        let printed = e.to_string();
        let back = parse_expr(&printed).unwrap_or_else(|err| panic!("{printed:?}: {err}"));
        assert_eq!(back, e, "{s:?} printed as {printed:?}");
        assert_eq!(back.to_string(), printed);
    }
}

#[test]
fn evaluator_matches_reference_on_corpus() {
    let zs = [C64::new(0.3, -0.2), C64::new(-1.1, 0.7), C64::new(0.5, 0.0), C64::new(2.0, 1.5)];
    let mut compared = 0;
    for s in corpus() {
        let e = parse_expr(&s).unwrap();
        for &z in &zs {
            match (e.eval(z), reference_eval(&e, z)) {
                (Ok(a), Some(b)) => {
                    if !(a.is_finite() && b.is_finite()) {
                        continue;
                    }
                    assert!((a - b).norm() <= 1e-14 * (1.0 + b.norm()) * 16.0, "{s:?} at {z}: {a} vs {b}");
                    compared += 1;
                }
                (Err(err), None) => assert_eq!(err.code(), "ERR_POLE"),
                (a, b) => panic!("{s:?} at {z}: {a:?} vs {b:?}"),
            }
        }
    }
    assert!(compared > 600);
}

#[test]
fn every_builtin_validates_on_its_domain() {
    for (p, g) in builtins() {
        let r = validate_potential(&p, &g);
        assert!(r.passed, "{:?}", r.issues);
    }
}

fn arb_expr() -> impl Strategy<Value = HoloExpr> {
    let leaf = prop_oneof![
        Just(HoloExpr::Z),
        Just(HoloExpr::Pi),
        Just(HoloExpr::E),
        (0.0f64..100.0).prop_map(|v| HoloExpr::Num(C64::new(v, 0.0))),
        (0.0f64..10.0).prop_map(|v| HoloExpr::Num(C64::new(0.0, v))),
        (0u32..20).prop_map(|v| HoloExpr::Num(C64::new(v as f64, 0.0))),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        let op = prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div), Just(BinOp::Pow)];
        let func = prop_oneof![Just(Func::Exp), Just(Func::Log), Just(Func::Sin), Just(Func::Cos), Just(Func::Sqrt)];
        prop_oneof![
            inner.clone().prop_map(HoloExpr::negate),
            (op, inner.clone(), inner.clone()).prop_map(|(o, a, b)| HoloExpr::bin(o, a, b)),
            (func, inner).prop_map(|(f, a)| HoloExpr::Call(f, Box::new(a))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn printed_trees_parse_back(e in arb_expr()) {
        let s = e.to_string();
        let back = parse_expr(&s).map_err(|err| TestCaseError::fail(format!("{s:?}: {err}")))?;
        prop_assert_eq!(back, e);
    }

    #[test]
    fn parser_never_panics(s in "[-+*/^()0-9.ezpicosinexplgqrt ]{0,40}") {
        let _ = parse_expr(&s);
    }
}
