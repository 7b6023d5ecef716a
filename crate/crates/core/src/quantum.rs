//! Three-qubit GHZ predictions from dense 8x8 matrices.
//!
//! Amplitudes are stored in the polarization label basis `|s1 s2 s3>` with
//! `s = +` before `s = -` per particle; basis index is
//! `4·[s1 = -] + 2·[s2 = -] + [s3 = -]`.
//!
//! Particle 3's labels are the analyzer eigenstates rotated by π about the
//! y axis (`|+>_3 -> -|1>`, `|->_3 -> |0>`), so in the label basis its
//! x analyzer reads `-σx` while its y analyzer reads `σy`. With that frame the
//! state `(|++->+|--+>)/√2` is a +1 eigenstate of XYY, YXY and YYX and a -1
//! eigenstate of XXX.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lhv::CorrelationSet;

pub const NORM_TOL: f64 = 1e-12;

type Mat2 = [[C64; 2]; 2];
type Mat8 = [[C64; 8]; 8];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

const IDENTITY: Mat2 = [[ONE, ZERO], [ZERO, ONE]];
const SIGMA_X: Mat2 = [[ZERO, ONE], [ONE, ZERO]];
const SIGMA_Y: Mat2 = [[ZERO, C64::new(0.0, -1.0)], [I, ZERO]];

/// Label-to-analyzer frame per particle.
const FRAMES: [Mat2; 3] = [
    IDENTITY,
    IDENTITY,
    [[ZERO, ONE], [C64::new(-1.0, 0.0), ZERO]],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    fn pauli(self) -> Mat2 {
        match self {
            Axis::X => SIGMA_X,
            Axis::Y => SIGMA_Y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SettingTriple {
    pub axes: [Axis; 3],
}

impl SettingTriple {
    pub const XYY: Self = Self::new(Axis::X, Axis::Y, Axis::Y);
    pub const YXY: Self = Self::new(Axis::Y, Axis::X, Axis::Y);
    pub const YYX: Self = Self::new(Axis::Y, Axis::Y, Axis::X);
    pub const XXX: Self = Self::new(Axis::X, Axis::X, Axis::X);

    pub const fn new(a: Axis, b: Axis, c: Axis) -> Self {
        Self { axes: [a, b, c] }
    }

    /// All eight settings in `{X, Y}^3`.
    pub fn all() -> impl Iterator<Item = SettingTriple> {
        (0..8u8).map(|bits| {
            let axis = |b: u8| if bits & b != 0 { Axis::Y } else { Axis::X };
            SettingTriple::new(axis(4), axis(2), axis(1))
        })
    }
}

impl fmt::Display for SettingTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in self.axes {
            f.write_str(match a {
                Axis::X => "X",
                Axis::Y => "Y",
            })?;
        }
        Ok(())
    }
}

impl FromStr for SettingTriple {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_err = || Error::Parse {
            what: "setting",
            input: s.to_string(),
        };
        let axes: Vec<Axis> = s
            .trim()
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'X' => Ok(Axis::X),
                'Y' => Ok(Axis::Y),
                _ => Err(parse_err()),
            })
            .collect::<Result<_>>()?;
        match axes[..] {
            [a, b, c] => Ok(SettingTriple::new(a, b, c)),
            _ => Err(parse_err()),
        }
    }
}

/// Measured spins, each `±1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OutcomeTriple {
    pub s1: i8,
    pub s2: i8,
    pub s3: i8,
}

impl OutcomeTriple {
    /// Outcome for basis index `i`, bit set meaning `-1`.
    pub fn from_index(i: usize) -> Self {
        let s = |bit: usize| if i & bit != 0 { -1 } else { 1 };
        Self {
            s1: s(4),
            s2: s(2),
            s3: s(1),
        }
    }

    pub fn product(&self) -> i8 {
        self.s1 * self.s2 * self.s3
    }
}

impl fmt::Display for OutcomeTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in [self.s1, self.s2, self.s3] {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector8 {
    pub amplitudes: [C64; 8],
}

impl StateVector8 {
    pub fn new(amplitudes: [C64; 8]) -> Self {
        Self { amplitudes }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn ensure_normalized(&self) -> Result<()> {
        let norm_sqr = self.norm_sqr();
        if (norm_sqr - 1.0).abs() <= NORM_TOL {
            Ok(())
        } else {
            Err(Error::NotNormalized { norm_sqr })
        }
    }

    /// Amplitude at the basis state with the given `±1` labels.
    pub fn amplitude(&self, s1: i8, s2: i8, s3: i8) -> C64 {
        let bit = |s: i8| usize::from(s < 0);
        self.amplitudes[4 * bit(s1) + 2 * bit(s2) + bit(s3)]
    }
}

/// `(|++-> + |--+>)/√2`.
pub fn ghz_state() -> StateVector8 {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut amplitudes = [ZERO; 8];
    amplitudes[0b001] = h;
    amplitudes[0b110] = h;
    StateVector8 { amplitudes }
}

fn mul2(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn adjoint2(a: &Mat2) -> Mat2 {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

/// Single-particle observable for `axis` expressed in the label basis.
fn observable(axis: Axis, particle: usize) -> Mat2 {
    let frame = &FRAMES[particle];
    mul2(&adjoint2(frame), &mul2(&axis.pauli(), frame))
}

fn kron3(a: &Mat2, b: &Mat2, c: &Mat2) -> Mat8 {
    let mut out = [[ZERO; 8]; 8];
    for (row, out_row) in out.iter_mut().enumerate() {
        for (col, v) in out_row.iter_mut().enumerate() {
            *v = a[row >> 2][col >> 2] * b[(row >> 1) & 1][(col >> 1) & 1] * c[row & 1][col & 1];
        }
    }
    out
}

fn expectation(state: &StateVector8, op: &Mat8) -> C64 {
    let psi = &state.amplitudes;
    let mut acc = ZERO;
    for (row, op_row) in op.iter().enumerate() {
        let applied: C64 = op_row.iter().zip(psi).map(|(m, a)| m * a).sum();
        acc += psi[row].conj() * applied;
    }
    acc
}

/// Tensor product of the three single-particle observables for `s`.
pub fn setting_operator(s: &SettingTriple) -> [[C64; 8]; 8] {
    let [a, b, c] = s.axes;
    kron3(&observable(a, 0), &observable(b, 1), &observable(c, 2))
}

/// `<ψ| O_1 ⊗ O_2 ⊗ O_3 |ψ>` for the setting's analyzers.
pub fn operator_expectation(state: &StateVector8, s: &SettingTriple) -> Result<f64> {
    state.ensure_normalized()?;
    let value = expectation(state, &setting_operator(s));
    assert!(
        value.im.abs() < NORM_TOL,
        "Hermitian expectation has imaginary part {}",
        value.im
    );
    // Pauli products have spectrum {-1, 1}; drop round-off beyond it.
    Ok(value.re.clamp(-1.0, 1.0))
}

/// `(E(XYY), E(YXY), E(YYX), E(XXX))` on the GHZ state.
pub fn ghz_witness() -> CorrelationSet {
    let psi = ghz_state();
    let e = |s: SettingTriple| operator_expectation(&psi, &s).expect("GHZ state is normalized");
    CorrelationSet::new(
        e(SettingTriple::XYY),
        e(SettingTriple::YXY),
        e(SettingTriple::YYX),
        e(SettingTriple::XXX),
    )
    .expect("Pauli products have expectations in [-1, 1]")
}

/// Born probabilities of the eight outcome triples, indexed like
/// [`OutcomeTriple::from_index`].
pub fn outcome_probabilities(state: &StateVector8, s: &SettingTriple) -> Result<[f64; 8]> {
    state.ensure_normalized()?;
    let projector = |axis: Axis, particle: usize, sign: f64| -> Mat2 {
        let m = observable(axis, particle);
        let mut p = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                p[i][j] = (IDENTITY[i][j] + m[i][j] * sign) * 0.5;
            }
        }
        p
    };
    let mut probs = [0.0; 8];
    for (idx, prob) in probs.iter_mut().enumerate() {
        let o = OutcomeTriple::from_index(idx);
        let op = kron3(
            &projector(s.axes[0], 0, o.s1 as f64),
            &projector(s.axes[1], 1, o.s2 as f64),
            &projector(s.axes[2], 2, o.s3 as f64),
        );
        *prob = expectation(state, &op).re.max(0.0);
    }
    Ok(probs)
}

/// Inverse-CDF sampler over the eight outcome triples of one setting.
#[derive(Debug, Clone)]
pub struct OutcomeSampler {
    setting: SettingTriple,
    cdf: [f64; 8],
}

impl OutcomeSampler {
    pub fn new(state: &StateVector8, setting: SettingTriple) -> Result<Self> {
        let probs = outcome_probabilities(state, &setting)?;
        let total: f64 = probs.iter().sum();
        let mut cdf = [0.0; 8];
        let mut acc = 0.0;
        for (c, p) in cdf.iter_mut().zip(probs) {
            acc += p / total;
            *c = acc;
        }
        cdf[7] = 1.0;
        Ok(Self { setting, cdf })
    }

    pub fn setting(&self) -> SettingTriple {
        self.setting
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> OutcomeTriple {
        let u: f64 = rng.random();
        let idx = self.cdf.iter().position(|c| u < *c).unwrap_or(7);
        OutcomeTriple::from_index(idx)
    }
}

/// One Born-rule draw. Callers in a loop should hold an [`OutcomeSampler`].
pub fn sample_outcomes<R: Rng + ?Sized>(
    state: &StateVector8,
    s: &SettingTriple,
    rng: &mut R,
) -> Result<OutcomeTriple> {
    Ok(OutcomeSampler::new(state, *s)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ghz_amplitudes() {
        let psi = ghz_state();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-15);
        assert_eq!(psi.amplitude(1, 1, -1).re, std::f64::consts::FRAC_1_SQRT_2);
        assert_eq!(psi.amplitude(-1, -1, 1).re, std::f64::consts::FRAC_1_SQRT_2);
        assert_eq!(psi.amplitude(1, 1, 1), ZERO);
    }

    #[test]
    fn ghz_settings() {
        let psi = ghz_state();
        let e = |s| operator_expectation(&psi, &s).unwrap();
        assert!((e(SettingTriple::XYY) - 1.0).abs() < 1e-12);
        assert!((e(SettingTriple::YXY) - 1.0).abs() < 1e-12);
        assert!((e(SettingTriple::YYX) - 1.0).abs() < 1e-12);
        assert!((e(SettingTriple::XXX) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn other_settings_are_bounded() {
        let psi = ghz_state();
        for s in SettingTriple::all() {
            let v = operator_expectation(&psi, &s).unwrap();
            assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&v), "{s}: {v}");
        }
    }

    #[test]
    fn rejects_unnormalized_state() {
        let mut psi = ghz_state();
        psi.amplitudes[0] = ONE;
        assert!(matches!(
            operator_expectation(&psi, &SettingTriple::XXX),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn witness_is_the_ghz_tetrad() {
        let w = ghz_witness();
        assert!(w.max_abs_diff(&CorrelationSet::new(1.0, 1.0, 1.0, -1.0).unwrap()) < 1e-12);
        // D = A·B·C as operators, so the product rule fixes E(D) = -1.
        assert!((w.e_a * w.e_b * w.e_c + w.e_abc).abs() < 1e-12);
    }

    #[test]
    fn parse_settings() {
        assert_eq!("xyy".parse::<SettingTriple>().unwrap(), SettingTriple::XYY);
        assert_eq!(SettingTriple::YYX.to_string(), "YYX");
        assert!("XY".parse::<SettingTriple>().is_err());
        assert!("XYZ".parse::<SettingTriple>().is_err());
        assert!("XYYX".parse::<SettingTriple>().is_err());
    }

    #[test]
    fn distributions_are_normalized() {
        let psi = ghz_state();
        for s in SettingTriple::all() {
            let p = outcome_probabilities(&psi, &s).unwrap();
            assert!(p.iter().all(|v| *v >= 0.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn samples_respect_product_sign() {
        let psi = ghz_state();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let xxx = OutcomeSampler::new(&psi, SettingTriple::XXX).unwrap();
        let xyy = OutcomeSampler::new(&psi, SettingTriple::XYY).unwrap();
        for _ in 0..10_000 {
            assert_eq!(xxx.sample(&mut rng).product(), -1);
            assert_eq!(xyy.sample(&mut rng).product(), 1);
        }
    }

    #[test]
    fn single_particle_marginal_is_flat() {
        let psi = ghz_state();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let sum: i64 = (0..n)
            .map(|_| sample_outcomes(&psi, &SettingTriple::XYY, &mut rng).unwrap().s1 as i64)
            .sum();
        let mean = sum as f64 / n as f64;
        assert!(mean.abs() < 3.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let psi = ghz_state();
        let sampler = OutcomeSampler::new(&psi, SettingTriple::YXY).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..64).map(|_| sampler.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
    }
}
