use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use varex::cli::parse_config;
use varex::cli::verify::{gradient_error, luxemburg_laws};
use varex::energy::ProblemSpec;
use varex::space::{holder_bound_check, luxemburg_norm};
use varex::{DiscreteField, ExponentField, Mesh, Region};

const N: usize = 16;

fn problem() -> &'static ProblemSpec {
    static PROB: OnceLock<ProblemSpec> = OnceLock::new();
    PROB.get_or_init(|| {
        let text = r#"
p1 = "2 + x"
p2 = "2.5"
lambda = 1.0
mu = 1.0

[domain]
kind = "interval"
bounds = [0.0, 1.0]
resolution = [16]

[f]
kind = "power"
exponent = "3"

[g]
kind = "power"
exponent = "1.5"
"#;
        parse_config(text).unwrap().problem().unwrap()
    })
}

fn mesh() -> Arc<Mesh> {
    problem().mesh().clone()
}

fn exponent() -> ExponentField {
    ExponentField::parse("2 + x", mesh()).unwrap()
}

fn field(scale: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-scale..scale, N + 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_matches_central_difference(u in field(1.5), v in field(1.5)) {
        let err = gradient_error(problem(), &u, &v).unwrap();
        prop_assert!(err <= 1e-5, "relative error {err}");
    }

    #[test]
    fn odd_nonlinearities_give_even_energy(u in field(3.0)) {
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        let (a, b) = (problem().phi(&u).unwrap(), problem().phi(&neg).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn operator_is_strictly_monotone(u in field(2.0), v in field(2.0)) {
        prop_assume!(u.iter().zip(&v).any(|(a, b)| (a - b).abs() > 1e-6));
        prop_assert!(problem().monotonicity_gap(&u, &v).unwrap() > 0.0);
    }

    #[test]
    fn luxemburg_laws_hold(u in field(1.0), scale in -2.0f64..2.0) {
        let u = DiscreteField::new(mesh(), u.iter().map(|x| x * 10f64.powf(scale)).collect()).unwrap();
        let margin = luxemburg_laws(&u, &exponent()).unwrap();
        prop_assert!(margin >= -1e-9, "margin {margin}");
    }

    #[test]
    fn luxemburg_norm_is_homogeneous(u in field(1.0), s in -5.0f64..5.0) {
        prop_assume!(s.abs() > 1e-3 && u.iter().any(|x| x.abs() > 1e-3));
        let p = exponent();
        let u = DiscreteField::new(mesh(), u).unwrap();
        let a = luxemburg_norm(&u, &p, Region::Interior).unwrap().value;
        let b = luxemburg_norm(&u.scaled(s), &p, Region::Interior).unwrap().value;
        prop_assert!((b - s.abs() * a).abs() <= 1e-10 * b);
    }

    #[test]
    fn holder_bound_holds(u in field(10.0), v in field(10.0)) {
        let u = DiscreteField::new(mesh(), u).unwrap();
        let v = DiscreteField::new(mesh(), v).unwrap();
        let h = holder_bound_check(&u, &v, &exponent()).unwrap();
        prop_assert!(h.slack >= -1e-12, "slack {}", h.slack);
    }

    #[test]
    fn residual_vanishes_only_with_gradient(u in field(1.0)) {
        let prob = problem();
        let g = prob.energy_gradient(&u).unwrap();
        let r = prob.residual_norm(&g).unwrap();
        let top = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert!(r >= 0.0);
        prop_assert_eq!(r == 0.0, top == 0.0);
    }
}

// Pairs whose pairing gap shrinks must converge: the S+ behaviour seen
// through the discrete operator.
#[test]
fn shrinking_gap_forces_convergence() {
    let prob = problem();
    let u: Vec<f64> = mesh().nodes().iter().map(|x| (3.0 * x[0]).sin()).collect();
    let norms = varex::space::NormContext::new(&[prob.p1(), prob.p2()], prob.order()).unwrap();
    let (mut last, mut last_dist) = (f64::INFINITY, f64::INFINITY);
    for k in 1..8 {
        let eps = 10f64.powi(-k);
        let v: Vec<f64> = u.iter().enumerate().map(|(i, a)| a + eps * ((i % 3) as f64 - 1.0)).collect();
        let gap = prob.monotonicity_gap(&v, &u).unwrap();
        let d: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        let dist = norms.norm(&d).unwrap();
        assert!(gap > 0.0 && gap < last, "gap {gap} after {last}");
        assert!(dist < 0.2 * last_dist, "distance {dist} after {last_dist}");
        (last, last_dist) = (gap, dist);
    }
}
