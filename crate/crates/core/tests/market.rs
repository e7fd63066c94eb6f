use std::io::Write;

use proptest::prelude::*;
use tugwar::market::{
    certify_payoff, payoff_basket_put, FnPayoff, MarketParams, Payoff, PayoffTable, Region, TerminalPayoff,
};
use tugwar::Error;

#[test]
fn basket_put_documented_values() {
    let w = [0.5, 0.5];
    let ln = |v: f64| v.ln();
    assert!(payoff_basket_put(&[ln(100.0), ln(100.0)], &w, 100.0).unwrap().abs() < 1e-12);
    assert!((payoff_basket_put(&[ln(20.0), ln(60.0)], &w, 100.0).unwrap() - 60.0).abs() < 1e-12);
    assert!((payoff_basket_put(&[-50.0, -50.0], &w, 100.0).unwrap() - 100.0).abs() < 1e-12);
}

#[test]
fn certification_documented_cases() {
    let c = Payoff::constant(2, 5.0).unwrap();
    let region = Region::new(vec![-3.0, -1.0], vec![2.0, 4.0]).unwrap();
    let cert = certify_payoff(&c, &region, 1000).unwrap();
    assert_eq!((cert.observed_sup, cert.observed_lipschitz), (5.0, 0.0));

    let put = Payoff::basket_put(vec![1.0], 100.0).unwrap();
    let cert = certify_payoff(&put, &Region::new(vec![0.0], vec![6.0]).unwrap(), 10_000).unwrap();
    assert!(cert.observed_sup <= 100.0 && cert.observed_lipschitz <= 100.0);
    assert!(cert.observed_sup > 98.0 && cert.observed_lipschitz > 99.0);

    let hat = FnPayoff {
        dim: 1,
        sup_bound: 1.0,
        lipschitz_bound: 0.5,
        f: |x: &[f64]| (1.0 - x[0].abs()).max(0.0),
    };
    match certify_payoff(&hat, &Region::new(vec![-2.0], vec![2.0]).unwrap(), 1000) {
        Err(Error::Certification { observed, declared, .. }) => {
            assert!(observed > 0.99 && declared == 0.5);
        }
        other => panic!("expected a certification failure, got {other:?}"),
    }
}

#[test]
fn market_rejects_degenerate_volatility() {
    assert!(MarketParams::new(vec![0.0, 0.0], vec![0.2, 0.0], 0.0, 1.0).is_err());
    assert!(MarketParams::new(vec![0.0], vec![0.2], -0.1, 1.0).is_err());
    assert!(MarketParams::new(vec![0.0], vec![0.2], 0.0, 0.0).is_err());
    assert!(MarketParams::new(vec![0.0], vec![0.2, 0.3], 0.0, 1.0).is_err());
}

#[test]
fn payoff_table_from_file_reproduces_the_put_at_nodes() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "x_1,g").unwrap();
    let xs: Vec<f64> = (0..=60).map(|k| 3.0 + 0.05 * k as f64).collect();
    for x in &xs {
        writeln!(f, "{x},{}", (100.0 - x.exp()).max(0.0)).unwrap();
    }
    f.flush().unwrap();
    let table = Payoff::Tabulated(PayoffTable::from_path(f.path()).unwrap());
    for x in &xs {
        assert!((table.value(&[*x]) - (100.0 - x.exp()).max(0.0)).abs() < 1e-9);
    }
    assert_eq!(table.value(&[-10.0]), table.value(&[3.0]));
    assert!(table.lipschitz_bound() <= 100.0);
    certify_payoff(&table, &Region::new(vec![2.0], vec![7.0]).unwrap(), 4096).unwrap();
}

#[test]
fn payoff_table_rejects_bad_header() {
    let text = "x,g\n0,1\n";
    assert!(PayoffTable::from_csv_reader(text.as_bytes()).is_err());
}

proptest! {
    #[test]
    fn basket_put_is_bounded_and_lipschitz(
        raw in prop::collection::vec(0.05..1.0f64, 1..=4),
        k in 1.0..200.0f64,
        seed in prop::collection::vec(-3.0..7.0f64, 8),
    ) {
        let s: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|v| v / s).collect();
        let n = w.len();
        let g = Payoff::basket_put(w, k).unwrap();
        let x: Vec<f64> = seed[..n].to_vec();
        let y: Vec<f64> = seed[4..4 + n].to_vec();
        let (gx, gy) = (g.value(&x), g.value(&y));
        prop_assert!((0.0..=g.sup_bound()).contains(&gx));
        let dist = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!((gx - gy).abs() <= g.lipschitz_bound() * dist + 1e-9);
    }

    #[test]
    fn shifted_payoff_adds_the_offset(x in -5.0..8.0f64, c in 0.0..10.0f64) {
        let g = Payoff::basket_put(vec![1.0], 100.0).unwrap();
        let h = g.clone().shifted(c).unwrap();
        prop_assert!((h.value(&[x]) - g.value(&[x]) - c).abs() < 1e-12);
        prop_assert_eq!(h.lipschitz_bound(), g.lipschitz_bound());
    }
}
