use proptest::prelude::*;
use tugwar::isaacs::{
    f_envelopes, f_limit, greedy_controls, hm_minus, hm_plus, phi, DirectionSet, OperatorInput, Side,
};
use tugwar::linalg::SymMatrix;
use tugwar::market::MarketParams;

fn market(mu: Vec<f64>, sigma: Vec<f64>, r: f64) -> MarketParams {
    MarketParams::new(mu, sigma, r, 1.0).unwrap()
}

fn input(xi: f64, p: Vec<f64>, h: Vec<f64>) -> OperatorInput {
    let n = p.len();
    OperatorInput::new(xi, p, SymMatrix::from_row_major(n, h).unwrap()).unwrap()
}

/// Brute-force sup-inf / inf-sup of Φ over `dirs ∪ {±p/|p|}` × `{0, m}`,
/// with no pruning.
fn brute_force(inp: &OperatorInput, m: f64, params: &MarketParams, dirs: &DirectionSet, side: Side) -> f64 {
    let mut actions: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut thetas: Vec<Vec<f64>> = dirs.iter().map(<[f64]>::to_vec).collect();
    let len = inp.p.iter().map(|v| v * v).sum::<f64>().sqrt();
    if len > 0.0 {
        thetas.push(inp.p.iter().map(|v| v / len).collect());
        thetas.push(inp.p.iter().map(|v| -v / len).collect());
    }
    for t in &thetas {
        for d in [0.0, m] {
            actions.push((t.clone(), d));
        }
    }
    let val = |a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)| phi(&a.0, &b.0, a.1, b.1, inp, params).unwrap();
    let v = match side {
        Side::Plus => actions
            .iter()
            .map(|b| actions.iter().map(|a| val(a, b)).fold(f64::INFINITY, f64::min))
            .fold(f64::NEG_INFINITY, f64::max),
        Side::Minus => actions
            .iter()
            .map(|a| actions.iter().map(|b| val(a, b)).fold(f64::NEG_INFINITY, f64::max))
            .fold(f64::INFINITY, f64::min),
    };
    v + params.rate() * inp.xi
}

#[test]
fn documented_values() {
    let p = market(vec![0.0], vec![1.0], 0.0);
    let d = DirectionSet::default_for_dim(1);
    let at = |pv: f64| input(0.0, vec![pv], vec![1.0]);
    assert!((hm_minus(&at(1.0), 10.0, &p, &d).unwrap() + 2.5).abs() < 1e-12);
    assert!((hm_minus(&at(0.0), 10.0, &p, &d).unwrap() + 0.5).abs() < 1e-12);
    assert!((hm_plus(&at(1.0), 10.0, &p, &d).unwrap() + 2.5).abs() < 1e-12);
    assert!((hm_plus(&at(0.0), 10.0, &p, &d).unwrap() + 2.5).abs() < 1e-12);

    let pr = market(vec![0.0], vec![1.0], 0.05);
    let shifted = input(10.0, vec![0.0], vec![1.0]);
    assert!((hm_plus(&shifted, 10.0, &pr, &d).unwrap() + 2.0).abs() < 1e-12);

    assert!((f_limit(&input(0.0, vec![3.0], vec![2.0]), &p).unwrap() - 5.0).abs() < 1e-12);
    let p2 = market(vec![0.0, 0.0], vec![1.0, 1.0], 0.0);
    let m2 = vec![2.0, 0.0, 0.0, -1.0];
    assert!((f_limit(&input(0.0, vec![1.0, 0.0], m2.clone()), &p2).unwrap() - 4.5).abs() < 1e-12);
    let (lo, hi) = f_envelopes(&input(0.0, vec![0.0, 0.0], m2), &p2).unwrap();
    assert!((lo + 1.5).abs() < 1e-12 && (hi - 4.5).abs() < 1e-12);
}

#[test]
fn greedy_controls_documented_case() {
    let p = market(vec![0.0], vec![1.0], 0.0);
    let d = DirectionSet::default_for_dim(1);
    let inp = input(0.0, vec![1.0], vec![1.0]);
    let g = greedy_controls(&inp, 10.0, &p, &d, Side::Minus).unwrap();
    assert_eq!(g.maximizer.theta, vec![1.0]);
    assert_eq!(g.minimizer.theta, vec![-1.0]);
    let v = phi(&g.maximizer.theta, &g.minimizer.theta, g.maximizer.d, g.minimizer.d, &inp, &p).unwrap();
    assert!((v + 2.5).abs() < 1e-12);
    assert!((g.value - hm_minus(&inp, 10.0, &p, &d).unwrap()).abs() < 1e-12);

    let neg = greedy_controls(&input(0.0, vec![-1.0], vec![1.0]), 10.0, &p, &d, Side::Minus).unwrap();
    assert_eq!(neg.maximizer.theta, vec![-1.0]);
    assert_eq!(neg.minimizer.theta, vec![1.0]);
}

#[test]
fn p_zero_rejected_by_limit_operator() {
    let p = market(vec![0.0], vec![1.0], 0.0);
    assert!(f_limit(&input(0.0, vec![0.0], vec![1.0]), &p).is_err());
}

fn arb_case(n: usize) -> impl Strategy<Value = (MarketParams, OperatorInput, f64)> {
    (
        prop::collection::vec(-0.2..0.2f64, n),
        prop::collection::vec(0.1..1.0f64, n),
        0.0..0.1f64,
        -2.0..2.0f64,
        prop::collection::vec(-2.0..2.0f64, n),
        prop::collection::vec(-3.0..3.0f64, n * n),
        0.5..20.0f64,
    )
        .prop_map(move |(mu, sigma, r, xi, p, h, m)| (market(mu, sigma, r), input(xi, p, h), m))
}

fn arb_psd(n: usize) -> impl Strategy<Value = SymMatrix> {
    prop::collection::vec(-1.5..1.5f64, n * n).prop_map(move |b| {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = (0..n).map(|k| b[i * n + k] * b[j * n + k]).sum();
            }
        }
        SymMatrix::from_row_major(n, data).unwrap()
    })
}

fn check_against_brute_force(
    params: &MarketParams,
    inp: &OperatorInput,
    m: f64,
    dirs: &DirectionSet,
) -> Result<(), TestCaseError> {
    for side in [Side::Plus, Side::Minus] {
        let fast = match side {
            Side::Plus => hm_plus(inp, m, params, dirs).unwrap(),
            Side::Minus => hm_minus(inp, m, params, dirs).unwrap(),
        };
        let slow = brute_force(inp, m, params, dirs, side);
        prop_assert!((fast - slow).abs() <= 1e-12 * (1.0 + slow.abs()), "{fast} vs {slow}");
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pruned_solver_matches_brute_force_1d((params, inp, m) in arb_case(1)) {
        check_against_brute_force(&params, &inp, m, &DirectionSet::default_for_dim(1))?;
    }

    #[test]
    fn pruned_solver_matches_brute_force_2d((params, inp, m) in arb_case(2)) {
        check_against_brute_force(&params, &inp, m, &DirectionSet::for_dim(2, 12))?;
    }

    #[test]
    fn minimax_inequality_1d((params, inp, m) in arb_case(1)) {
        let d = DirectionSet::default_for_dim(1);
        prop_assert!(hm_plus(&inp, m, &params, &d).unwrap() <= hm_minus(&inp, m, &params, &d).unwrap() + 1e-12);
    }

    #[test]
    fn minimax_inequality_2d((params, inp, m) in arb_case(2)) {
        let d = DirectionSet::for_dim(2, 64);
        prop_assert!(hm_plus(&inp, m, &params, &d).unwrap() <= hm_minus(&inp, m, &params, &d).unwrap() + 1e-12);
    }

    #[test]
    fn degenerate_ellipticity((params, inp, m) in arb_case(2), extra in arb_psd(2)) {
        let d = DirectionSet::for_dim(2, 64);
        let bigger = OperatorInput { hessian: inp.hessian.add(&extra), ..inp.clone() };
        prop_assert!(hm_plus(&bigger, m, &params, &d).unwrap() <= hm_plus(&inp, m, &params, &d).unwrap() + 1e-12);
        prop_assert!(hm_minus(&bigger, m, &params, &d).unwrap() <= hm_minus(&inp, m, &params, &d).unwrap() + 1e-12);
        if let (Ok(fx), Ok(fy)) = (f_limit(&bigger, &params), f_limit(&inp, &params)) {
            prop_assert!(fx >= fy - 1e-12);
        }
    }

    #[test]
    fn xi_enters_additively((params, inp, m) in arb_case(2), c in -5.0..5.0f64) {
        let d = DirectionSet::for_dim(2, 32);
        let moved = OperatorInput { xi: inp.xi + c, ..inp.clone() };
        let r = params.rate();
        for (a, b) in [
            (hm_plus(&moved, m, &params, &d).unwrap(), hm_plus(&inp, m, &params, &d).unwrap()),
            (hm_minus(&moved, m, &params, &d).unwrap(), hm_minus(&inp, m, &params, &d).unwrap()),
        ] {
            prop_assert!((a - b - r * c).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn limit_operator_is_affine_in_hessian(
        (params, inp, _m) in arb_case(2),
        h2 in prop::collection::vec(-3.0..3.0f64, 4),
        lambda in -2.0..2.0f64,
    ) {
        prop_assume!(inp.p.iter().any(|v| v.abs() > 1e-3));
        let other = SymMatrix::from_row_major(2, h2).unwrap();
        let zero = OperatorInput { hessian: SymMatrix::zeros(2), ..inp.clone() };
        let mixed = OperatorInput { hessian: inp.hessian.add(&other.scaled(lambda)), ..inp.clone() };
        let only = OperatorInput { hessian: other, ..inp.clone() };
        let f0 = f_limit(&zero, &params).unwrap();
        let lhs = f_limit(&mixed, &params).unwrap() - f0;
        let rhs = (f_limit(&inp, &params).unwrap() - f0) + lambda * (f_limit(&only, &params).unwrap() - f0);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn one_dimension_is_exact_when_controls_dominate((params, inp, m) in arb_case(1)) {
        let a = params.sigma()[0].powi(2) * inp.hessian.get(0, 0);
        prop_assume!(a.abs() <= m * inp.p[0].abs());
        let d = DirectionSet::default_for_dim(1);
        let f = f_limit(&inp, &params).unwrap();
        prop_assert!((hm_plus(&inp, m, &params, &d).unwrap() + f).abs() <= 1e-12 * (1.0 + f.abs()));
        prop_assert!((hm_minus(&inp, m, &params, &d).unwrap() + f).abs() <= 1e-12 * (1.0 + f.abs()));
    }

    #[test]
    fn f_lies_between_envelopes((params, inp, _m) in arb_case(2)) {
        let zero = OperatorInput { p: vec![0.0, 0.0], ..inp.clone() };
        let (lo, hi) = f_envelopes(&zero, &params).unwrap();
        let f = f_limit(&inp, &params).unwrap() - params.mu().iter().zip(&inp.p).map(|(a, b)| a * b).sum::<f64>();
        prop_assert!(lo - 1e-9 <= f && f <= hi + 1e-9);
    }
}
