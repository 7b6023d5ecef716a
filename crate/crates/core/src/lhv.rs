//! Joint-distribution (local hidden variable) feasibility for the tetrad
//! `(E(A), E(B), E(C), E(ABC))` of three `±1` random variables.
//!
//! A tetrad is reproducible by some distribution over the eight atoms
//! `abc, ..., āb̄c̄` exactly when it lies in `[-1, 1]^4` and satisfies the four
//! two-sided inequalities `-2 <= ±E(A) ± E(B) ± E(C) ± E(ABC) <= 2` with an odd
//! number of minus signs among the four terms. [`check_inequalities`] evaluates
//! those; [`feasible_oracle`] decides the same question independently by
//! enumerating basic solutions of the moment equations.

use serde::Serialize;

use crate::error::{check_probability, check_range, BoundSide, Error, Result};

/// Tolerance for simplex membership (nonnegativity and normalization).
pub const SIMPLEX_TOL: f64 = 1e-12;
/// Tolerance for a witness reproducing the queried moments.
pub const WITNESS_TOL: f64 = 1e-9;

/// Expectations `E(A), E(B), E(C), E(ABC)`, each in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationSet {
    pub e_a: f64,
    pub e_b: f64,
    pub e_c: f64,
    pub e_abc: f64,
}

impl CorrelationSet {
    pub fn new(e_a: f64, e_b: f64, e_c: f64, e_abc: f64) -> Result<Self> {
        Ok(Self {
            e_a: check_range("E(A)", e_a, -1.0, 1.0)?,
            e_b: check_range("E(B)", e_b, -1.0, 1.0)?,
            e_c: check_range("E(C)", e_c, -1.0, 1.0)?,
            e_abc: check_range("E(ABC)", e_abc, -1.0, 1.0)?,
        })
    }

    /// `(x, x, x, y)`.
    pub fn symmetric(single: f64, triple: f64) -> Result<Self> {
        Self::new(single, single, single, triple)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.e_a, self.e_b, self.e_c, self.e_abc]
    }

    /// Largest componentwise deviation from `other`.
    pub fn max_abs_diff(&self, other: &CorrelationSet) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Signs `(A, B, C)` of each atom, in storage order
/// `abc, ab̄c, abc̄, ab̄c̄, ābc, āb̄c, ābc̄, āb̄c̄`.
pub const ATOM_SIGNS: [[i8; 3]; 8] = [
    [1, 1, 1],
    [1, -1, 1],
    [1, 1, -1],
    [1, -1, -1],
    [-1, 1, 1],
    [-1, -1, 1],
    [-1, 1, -1],
    [-1, -1, -1],
];

pub const ATOM_LABELS: [&str; 8] = [
    "abc", "ab̄c", "abc̄", "ab̄c̄", "ābc", "āb̄c", "ābc̄", "āb̄c̄",
];

/// Index of the atom with the given signs.
pub fn atom_index(a: i8, b: i8, c: i8) -> usize {
    ATOM_SIGNS
        .iter()
        .position(|s| *s == [a, b, c])
        .expect("signs must be ±1")
}

/// Row `(1, A, B, C, ABC)` of the moment map for one atom.
fn moment_column(atom: usize) -> [f64; 5] {
    let [a, b, c] = ATOM_SIGNS[atom];
    [1.0, a as f64, b as f64, c as f64, (a * b * c) as f64]
}

/// A probability distribution over the eight atoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointDistribution8 {
    p: [f64; 8],
}

impl JointDistribution8 {
    pub fn new(p: [f64; 8]) -> Result<Self> {
        if let Some((i, v)) = p
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidDistribution(format!(
                "atom {} has probability {v}",
                ATOM_LABELS[i]
            )));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidDistribution(format!(
                "atoms sum to {total}"
            )));
        }
        Ok(Self { p })
    }

    pub fn point_mass(atom: usize) -> Self {
        let mut p = [0.0; 8];
        p[atom] = 1.0;
        Self { p }
    }

    pub fn uniform() -> Self {
        Self { p: [0.125; 8] }
    }

    pub fn probabilities(&self) -> &[f64; 8] {
        &self.p
    }

    pub fn get(&self, atom: usize) -> f64 {
        self.p[atom]
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// Outcome of checking the four inequalities.
///
/// `slacks[2k]` is the distance of inequality `k` above its lower bound `-2`,
/// `slacks[2k + 1]` the distance below its upper bound `2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub slacks: [f64; 8],
    pub f_value: f64,
    pub witness: Option<JointDistribution8>,
}

impl FeasibilityReport {
    /// Indices (0-based) of the inequalities with a negative slack.
    pub fn violated(&self) -> Vec<usize> {
        (0..4)
            .filter(|k| self.slacks[2 * k] < 0.0 || self.slacks[2 * k + 1] < 0.0)
            .collect()
    }
}

/// `P(a) = P(b) = P(c) = p` and `P(ABC = 1) = q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetricParams {
    pub p: f64,
    pub q: f64,
}

impl SymmetricParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        Ok(Self {
            p: check_probability("p", p)?,
            q: check_probability("q", q)?,
        })
    }
}

/// `F = E(A) + E(B) + E(C) - E(ABC)`.
pub fn mermin_f(c: &CorrelationSet) -> f64 {
    c.e_a + c.e_b + c.e_c - c.e_abc
}

/// The four inequality combinations, each of which must lie in `[-2, 2]`.
pub fn inequality_values(c: &CorrelationSet) -> [f64; 4] {
    [
        mermin_f(c),
        -c.e_a + c.e_b + c.e_c + c.e_abc,
        c.e_a - c.e_b + c.e_c + c.e_abc,
        c.e_a + c.e_b - c.e_c + c.e_abc,
    ]
}

pub fn check_inequalities(c: &CorrelationSet) -> FeasibilityReport {
    let values = inequality_values(c);
    let mut slacks = [0.0; 8];
    for (k, v) in values.iter().enumerate() {
        slacks[2 * k] = v + 2.0;
        slacks[2 * k + 1] = 2.0 - v;
    }
    FeasibilityReport {
        feasible: slacks.iter().all(|s| *s >= 0.0),
        slacks,
        f_value: values[0],
        witness: None,
    }
}

/// Inequality check with the oracle's witness attached when one exists.
pub fn check_with_witness(c: &CorrelationSet) -> FeasibilityReport {
    FeasibilityReport {
        witness: feasible_oracle(c),
        ..check_inequalities(c)
    }
}

/// Solves the square system `m x = b` by Gaussian elimination with partial
/// pivoting. `None` when singular.
fn solve5(mut m: [[f64; 5]; 5], mut b: [f64; 5]) -> Option<[f64; 5]> {
    for col in 0..5 {
        let pivot = (col..5).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < SIMPLEX_TOL {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..5 {
            let factor = m[row][col] / m[col][col];
            if factor != 0.0 {
                let pivot_row = m[col];
                for (x, p) in m[row][col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= factor * p;
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = [0.0; 5];
    for row in (0..5).rev() {
        let tail: f64 = (row + 1..5).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / m[row][row];
    }
    Some(x)
}

/// All 5-element subsets of `0..8` in lexicographic order (56 of them).
fn basis_subsets() -> impl Iterator<Item = [usize; 5]> {
    (0..8usize).flat_map(|a| {
        (a + 1..8).flat_map(move |b| {
            (b + 1..8).flat_map(move |c| {
                (c + 1..8).flat_map(move |d| (d + 1..8).map(move |e| [a, b, c, d, e]))
            })
        })
    })
}

/// Exact feasibility of the moment equations over the 8-atom simplex.
///
/// Every feasible point of `{x >= 0, M x = b}` with `M` of rank 5 has a basic
/// feasible solution, so it suffices to solve each of the `C(8,5) = 56` square
/// subsystems and keep the first nonnegative one.
pub fn feasible_oracle(c: &CorrelationSet) -> Option<JointDistribution8> {
    let rhs = [1.0, c.e_a, c.e_b, c.e_c, c.e_abc];
    for subset in basis_subsets() {
        let mut m = [[0.0; 5]; 5];
        for (col, &atom) in subset.iter().enumerate() {
            for (row, v) in moment_column(atom).into_iter().enumerate() {
                m[row][col] = v;
            }
        }
        let Some(x) = solve5(m, rhs) else { continue };
        if x.iter().all(|v| *v >= -SIMPLEX_TOL) {
            let mut p = [0.0; 8];
            for (&atom, v) in subset.iter().zip(x) {
                p[atom] = v.max(0.0);
            }
            return Some(JointDistribution8 { p });
        }
    }
    None
}

pub fn expectations_from_joint(j: &JointDistribution8) -> CorrelationSet {
    let mut e = [0.0; 4];
    for (atom, &p) in j.p.iter().enumerate() {
        let [a, b, c] = ATOM_SIGNS[atom];
        e[0] += a as f64 * p;
        e[1] += b as f64 * p;
        e[2] += c as f64 * p;
        e[3] += (a * b * c) as f64 * p;
    }
    // Rounding can push a sum a few ulps past ±1.
    let clamp = |v: f64| v.clamp(-1.0, 1.0);
    CorrelationSet {
        e_a: clamp(e[0]),
        e_b: clamp(e[1]),
        e_c: clamp(e[2]),
        e_abc: clamp(e[3]),
    }
}

/// Witness for the symmetric case, interpolating between the distribution on
/// the `3p = q` boundary (`x = 0, y = q/3, z = 0, w = 1 - q`) and the one on
/// the `3p = q + 2` boundary (`x = (1 - q)/3, y = 0, z = q, w = 0`) with weight
/// `λ = (3p - q)/2` on the latter.
///
/// `x` goes to the three single-negation atoms, `y` to the three
/// double-negation atoms, `z` to `abc` and `w` to `āb̄c̄`.
pub fn construct_symmetric_joint(s: &SymmetricParams) -> Result<JointDistribution8> {
    let spread = 3.0 * s.p - s.q;
    if spread < -SIMPLEX_TOL {
        return Err(Error::SymmetricBound {
            side: BoundSide::Lower,
            value: spread,
        });
    }
    if spread > 2.0 + SIMPLEX_TOL {
        return Err(Error::SymmetricBound {
            side: BoundSide::Upper,
            value: spread,
        });
    }
    let lambda = (spread / 2.0).clamp(0.0, 1.0);
    let q = s.q;
    let x = lambda * (1.0 - q) / 3.0;
    let y = (1.0 - lambda) * q / 3.0;
    let z = lambda * q;
    let w = (1.0 - lambda) * (1.0 - q);

    let mut p = [0.0; 8];
    for (atom, signs) in ATOM_SIGNS.iter().enumerate() {
        let negations = signs.iter().filter(|v| **v < 0).count();
        p[atom] = match negations {
            0 => z,
            1 => x,
            2 => y,
            _ => w,
        };
    }
    JointDistribution8::new(p)
}

/// Whether correlations saturating `E(A) = E(B) = E(C) >= 1 - ε` and
/// `E(ABC) <= -1 + ε` admit a joint distribution. True exactly when `ε >= 1/2`.
pub fn epsilon_feasible(epsilon: f64) -> Result<bool> {
    let eps = check_range("epsilon", epsilon, 0.0, 1.0)?;
    let c = CorrelationSet::symmetric(1.0 - eps, -1.0 + eps)?;
    Ok(check_inequalities(&c).feasible)
}
