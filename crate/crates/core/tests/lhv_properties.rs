use ghz_lhv::lhv::{
    check_inequalities, construct_symmetric_joint, epsilon_feasible, expectations_from_joint,
    feasible_oracle, mermin_f, CorrelationSet, SymmetricParams, WITNESS_TOL,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn assert_agree(c: &CorrelationSet) {
    let by_inequalities = check_inequalities(c).feasible;
    let witness = feasible_oracle(c);
    assert_eq!(
        by_inequalities,
        witness.is_some(),
        "disagreement at {c:?}"
    );
    if let Some(w) = witness {
        assert!(w.probabilities().iter().all(|p| *p >= 0.0));
        assert!((w.total() - 1.0).abs() < 1e-12);
        let back = expectations_from_joint(&w);
        assert!(back.max_abs_diff(c) < WITNESS_TOL, "{c:?} -> {back:?}");
    }
}

#[test]
fn oracle_matches_inequalities_on_grid() {
    let axis: Vec<f64> = (0..9).map(|i| -1.0 + 0.25 * i as f64).collect();
    let mut infeasible = 0;
    for &a in &axis {
        for &b in &axis {
            for &c in &axis {
                for &abc in &axis {
                    let cs = CorrelationSet::new(a, b, c, abc).unwrap();
                    assert_agree(&cs);
                    infeasible += usize::from(!check_inequalities(&cs).feasible);
                }
            }
        }
    }
    // Both outcomes have to actually occur for the comparison to mean much.
    assert!(infeasible > 0 && infeasible < 9usize.pow(4));
}

#[test]
fn oracle_matches_inequalities_on_random_tetrads() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..10_000 {
        let mut e = || rng.random_range(-1.0..=1.0);
        let cs = CorrelationSet::new(e(), e(), e(), e()).unwrap();
        assert_agree(&cs);
    }
}

#[test]
fn symmetric_round_trip_on_grid() {
    for i in 0..=100 {
        for j in 0..=100 {
            let spread = 3 * i - j as i64;
            if !(0..=200).contains(&spread) {
                continue;
            }
            let (p, q) = (i as f64 / 100.0, j as f64 / 100.0);
            let joint = construct_symmetric_joint(&SymmetricParams::new(p, q).unwrap()).unwrap();
            assert!(joint.probabilities().iter().all(|v| *v >= 0.0));
            assert!((joint.total() - 1.0).abs() < 1e-12);
            let e = expectations_from_joint(&joint);
            let want = CorrelationSet::symmetric(2.0 * p - 1.0, 2.0 * q - 1.0).unwrap();
            assert!(e.max_abs_diff(&want) < 1e-12, "p={p} q={q}: {e:?}");
        }
    }
}

#[test]
fn epsilon_matches_inequality_check() {
    for i in 0..=100 {
        let eps = i as f64 / 100.0;
        let c = CorrelationSet::symmetric(1.0 - eps, -1.0 + eps).unwrap();
        assert_eq!(epsilon_feasible(eps).unwrap(), check_inequalities(&c).feasible);
        assert_eq!(epsilon_feasible(eps).unwrap(), feasible_oracle(&c).is_some());
        assert_eq!(epsilon_feasible(eps).unwrap(), i >= 50);
    }
}

fn tetrad() -> impl Strategy<Value = CorrelationSet> {
    (-1.0..=1.0f64, -1.0..=1.0f64, -1.0..=1.0f64, -1.0..=1.0f64)
        .prop_map(|(a, b, c, d)| CorrelationSet::new(a, b, c, d).unwrap())
}

proptest! {
    #[test]
    fn f_is_linear_under_mixing(x in tetrad(), y in tetrad(), t in 0.0..=1.0f64) {
        let mix = |u: f64, v: f64| t * u + (1.0 - t) * v;
        let m = CorrelationSet::new(
            mix(x.e_a, y.e_a), mix(x.e_b, y.e_b), mix(x.e_c, y.e_c), mix(x.e_abc, y.e_abc),
        ).unwrap();
        prop_assert!((mermin_f(&m) - mix(mermin_f(&x), mermin_f(&y))).abs() < 1e-12);
    }

    #[test]
    fn witnesses_are_sound(c in tetrad()) {
        if let Some(w) = feasible_oracle(&c) {
            prop_assert!(expectations_from_joint(&w).max_abs_diff(&c) < WITNESS_TOL);
        }
    }

    #[test]
    fn joint_expectations_are_always_feasible(raw in prop::array::uniform8(0.0..1.0f64)) {
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 1e-6);
        let mut p = raw.map(|v| v / total);
        let drift: f64 = 1.0 - p.iter().sum::<f64>();
        p[0] = (p[0] + drift).max(0.0);
        let j = ghz_lhv::lhv::JointDistribution8::new(p).unwrap();
        let c = expectations_from_joint(&j);
        prop_assert!(check_inequalities(&c).feasible);
    }
}
