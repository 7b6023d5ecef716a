//! Born probabilities from explicit analyzer eigenvectors, independent of the
//! projector construction used by the library.

use ghz_lhv::quantum::*;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::FRAC_1_SQRT_2 as H;

/// `±1` eigenvector of the analyzer for `axis` on `particle`, in label basis.
fn eigvec(axis: Axis, particle: usize, sign: i8) -> [C64; 2] {
    let s = sign as f64;
    // Standard Pauli eigenvectors in the analyzer frame.
    let v = match axis {
        Axis::X => [C64::new(H, 0.0), C64::new(s * H, 0.0)],
        Axis::Y => [C64::new(H, 0.0), C64::new(0.0, s * H)],
    };
    if particle == 2 {
        // Label state |l> maps to the analyzer vector F|l>, F = [[0,1],[-1,0]];
        // label components are F^T v.
        [-v[1], v[0]]
    } else {
        v
    }
}

fn born(state: &StateVector8, s: &SettingTriple) -> [f64; 8] {
    let mut out = [0.0; 8];
    for (idx, p) in out.iter_mut().enumerate() {
        let o = OutcomeTriple::from_index(idx);
        let e = [
            eigvec(s.axes[0], 0, o.s1),
            eigvec(s.axes[1], 1, o.s2),
            eigvec(s.axes[2], 2, o.s3),
        ];
        let mut amp = C64::new(0.0, 0.0);
        for (basis, a) in state.amplitudes.iter().enumerate() {
            let coeff = e[0][basis >> 2] * e[1][(basis >> 1) & 1] * e[2][basis & 1];
            amp += coeff.conj() * a;
        }
        *p = amp.norm_sqr();
    }
    out
}

#[test]
fn projector_probabilities_match_eigenvectors() {
    let psi = ghz_state();
    for s in SettingTriple::all() {
        let lib = outcome_probabilities(&psi, &s).unwrap();
        let oracle = born(&psi, &s);
        for (a, b) in lib.iter().zip(oracle) {
            assert!((a - b).abs() < 1e-12, "{s}: {lib:?} vs {oracle:?}");
        }
        let mean: f64 = oracle
            .iter()
            .enumerate()
            .map(|(i, p)| p * OutcomeTriple::from_index(i).product() as f64)
            .sum();
        assert!((mean - operator_expectation(&psi, &s).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn ghz_settings_are_eigenvalues() {
    let psi = ghz_state();
    for (s, want) in [
        (SettingTriple::XYY, 1.0),
        (SettingTriple::YXY, 1.0),
        (SettingTriple::YYX, 1.0),
        (SettingTriple::XXX, -1.0),
    ] {
        let v = operator_expectation(&psi, &s).unwrap();
        assert!((v.abs() - 1.0).abs() < 1e-12);
        assert!((v - want).abs() < 1e-12);
        // Allowed outcomes are the four with the right product, uniformly.
        let p = born(&psi, &s);
        for (i, pi) in p.iter().enumerate() {
            let ok = OutcomeTriple::from_index(i).product() as f64 == want;
            assert!((pi - if ok { 0.25 } else { 0.0 }).abs() < 1e-12);
        }
    }
}

#[test]
fn sampler_mean_matches_expectation() {
    let psi = ghz_state();
    let n = 1_000_000u64;
    for (k, s) in [SettingTriple::XYY, SettingTriple::YXY, SettingTriple::YYX, SettingTriple::XXX]
        .into_iter()
        .enumerate()
    {
        let sampler = OutcomeSampler::new(&psi, s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        let sum: i64 = (0..n).map(|_| sampler.sample(&mut rng).product() as i64).sum();
        let mean = sum as f64 / n as f64;
        let e = operator_expectation(&psi, &s).unwrap();
        assert!((mean - e).abs() <= 4.0 / (n as f64).sqrt(), "{s}: {mean} vs {e}");
    }
}

#[test]
fn mixed_settings_have_uniform_marginals() {
    let psi = ghz_state();
    let sampler = OutcomeSampler::new(&psi, SettingTriple::new(Axis::X, Axis::X, Axis::Y)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 200_000;
    let sum: i64 = (0..n).map(|_| sampler.sample(&mut rng).product() as i64).sum();
    assert!((sum as f64 / n as f64).abs() < 4.0 / (n as f64).sqrt());
}
