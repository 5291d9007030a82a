use cdma_paging::erlang::{
    avg_wait_all, avg_wait_delayed, erlang_b, erlang_c, metrics, time_in_system, QueueParams,
};
use proptest::prelude::*;

/// Literal factorial form; fine in f64 for the small C used here.
fn erlang_c_literal(a: f64, c: u32) -> f64 {
    let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
    let sum: f64 = (0..c).map(|k| a.powi(k as i32) / fact(k)).sum();
    let ac = a.powi(c as i32);
    ac / (ac + fact(c) * (1.0 - a / f64::from(c)) * sum)
}

#[test]
fn monotone_over_grid() {
    for c in 1..=28u32 {
        let mut prev = 0.0;
        for step in 1..40 {
            let a = f64::from(c) * step as f64 / 40.0;
            let p = erlang_c(a, c).unwrap();
            assert!(p > prev, "C={c} A={a}");
            prev = p;
            if c > 1 && a < f64::from(c - 1) {
                assert!(erlang_c(a, c).unwrap() < erlang_c(a, c - 1).unwrap());
            }
        }
    }
}

#[test]
fn literal_form_agreement() {
    for c in 1..=20u32 {
        for tenth in 1..=180 {
            let a = tenth as f64 / 10.0;
            if a >= f64::from(c) {
                break;
            }
            let lit = erlang_c_literal(a, c);
            let stable = erlang_c(a, c).unwrap();
            assert!(
                ((stable - lit) / lit).abs() < 1e-10,
                "C={c} A={a}: {stable} vs {lit}"
            );
        }
    }
}

#[test]
fn large_systems_stay_finite() {
    let p = erlang_c(900.0, 1000).unwrap();
    assert!(p.is_finite() && (0.0..=1.0).contains(&p));
    assert!(erlang_b(5000.0, 5000).unwrap() > 0.0);
}

proptest! {
    #[test]
    fn delay_dominates_blocking(c in 1u32..40, frac in 0.001f64..0.999) {
        let a = f64::from(c) * frac;
        prop_assert!(erlang_c(a, c).unwrap() >= erlang_b(a, c).unwrap());
    }

    #[test]
    fn single_server_reduces_to_utilization(a in 0.001f64..0.999) {
        prop_assert!((erlang_c(a, 1).unwrap() - a).abs() < 1e-12);
    }

    #[test]
    fn wait_identity_and_bounds(c in 1u32..40, frac in 0.001f64..0.999, mu in 0.01f64..100.0) {
        let a = f64::from(c) * frac;
        let p = QueueParams::new(a, c, mu).unwrap();
        let m = metrics(&p).unwrap();
        let awa = avg_wait_all(&p).unwrap();
        let awd = avg_wait_delayed(&p).unwrap();
        prop_assert!((awa - m.p_delay * awd).abs() <= 1e-12 * awa.abs().max(f64::MIN_POSITIVE));
        prop_assert!((0.0..=1.0).contains(&m.p_delay));
        prop_assert!(0.0 <= awa && awa <= awd);
        prop_assert!(time_in_system(&p).unwrap() >= 1.0 / mu);
        prop_assert_eq!(m.avg_wait_all, awa);
        prop_assert_eq!(m.time_in_system, time_in_system(&p).unwrap());
    }
}
