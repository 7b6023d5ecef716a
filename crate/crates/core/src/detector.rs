//! Fourfold-coincidence probabilities for a trigger `T` and three signal
//! detectors `D1..D3` with efficiency `d` and dark-count probability `gamma`
//! per coincidence window.
//!
//! Two creation channels are modeled: a single pair reaching two of the four
//! detectors (ten arrival combinations), and a double pair sending one photon
//! to each detector. Only double pairs whose three signal photons are all
//! detected carry the GHZ correlation; every other fourfold is uncorrelated.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{check_probability, check_range, Error, Result};

/// Above this many sigmas a separation is reported as saturated.
pub const SEPARATION_CAP: f64 = 1e6;
/// Upper end of the gamma bracket used when inverting the correlation.
pub const GAMMA_BRACKET_MAX: f64 = 1e-3;
/// Absolute tolerance on gamma for the inversion.
pub const GAMMA_TOL: f64 = 1e-12;
/// The correlation below which a joint distribution can exist.
pub const CLASSICAL_BOUNDARY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectorParams {
    pub d: f64,
    pub gamma: f64,
    pub p_pair: f64,
    pub p_twopair: f64,
    pub e_ghz: f64,
}

impl DetectorParams {
    pub fn new(d: f64, gamma: f64, p_pair: f64, p_twopair: f64, e_ghz: f64) -> Result<Self> {
        let p_pair = check_probability("p_pair", p_pair)?;
        let p_twopair = check_probability("p_twopair", p_twopair)?;
        if (p_pair + p_twopair - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "p_pair + p_twopair = {} (must be 1)",
                p_pair + p_twopair
            )));
        }
        Ok(Self {
            d: check_probability("d", d)?,
            gamma: check_probability("gamma", gamma)?,
            p_pair,
            p_twopair,
            e_ghz: check_range("e_ghz", e_ghz, -1.0, 1.0)?,
        })
    }

    /// Parameters from the pair to two-pair creation ratio `P(p1p2)/P(p1..p4)`.
    pub fn from_ratio(d: f64, gamma: f64, ratio: f64, e_ghz: f64) -> Result<Self> {
        if !(ratio.is_finite() && ratio >= 0.0) {
            return Err(Error::OutOfRange {
                name: "ratio",
                value: ratio,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        let p_twopair = 1.0 / (1.0 + ratio);
        Self::new(d, gamma, 1.0 - p_twopair, p_twopair, e_ghz)
    }

    pub fn pair_ratio(&self) -> f64 {
        self.p_pair / self.p_twopair
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        Self::new(self.d, gamma, self.p_pair, self.p_twopair, self.e_ghz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateSpec {
    pub dark_rate: f64,
    pub window: f64,
}

/// `gamma = dark_rate · window`, the first-order Poisson probability of a dark
/// count inside one window.
pub fn gamma_from_rates(r: &RateSpec) -> Result<f64> {
    if !(r.dark_rate.is_finite() && r.dark_rate >= 0.0) {
        return Err(Error::OutOfRange {
            name: "dark_rate",
            value: r.dark_rate,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    if !(r.window.is_finite() && r.window >= 0.0) {
        return Err(Error::OutOfRange {
            name: "window",
            value: r.window,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    check_probability("dark_rate * window", r.dark_rate * r.window)
}

/// Where the two photons of a single pair land.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Arrival {
    TD1,
    TD2,
    TD3,
    D1D2,
    D1D3,
    D2D3,
    D1D1,
    D2D2,
    D3D3,
    TT,
}

impl Arrival {
    pub const ALL: [Arrival; 10] = [
        Arrival::TD1,
        Arrival::TD2,
        Arrival::TD3,
        Arrival::D1D2,
        Arrival::D1D3,
        Arrival::D2D3,
        Arrival::D1D1,
        Arrival::D2D2,
        Arrival::D3D3,
        Arrival::TT,
    ];

    /// Photons per detector, ordered `T, D1, D2, D3`.
    pub fn photon_counts(self) -> [u8; 4] {
        match self {
            Arrival::TD1 => [1, 1, 0, 0],
            Arrival::TD2 => [1, 0, 1, 0],
            Arrival::TD3 => [1, 0, 0, 1],
            Arrival::D1D2 => [0, 1, 1, 0],
            Arrival::D1D3 => [0, 1, 0, 1],
            Arrival::D2D3 => [0, 0, 1, 1],
            Arrival::D1D1 => [0, 2, 0, 0],
            Arrival::D2D2 => [0, 0, 2, 0],
            Arrival::D3D3 => [0, 0, 0, 2],
            Arrival::TT => [2, 0, 0, 0],
        }
    }

    pub fn is_same_detector(self) -> bool {
        self.photon_counts().contains(&2)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Arrival::TD1 => "TD1",
            Arrival::TD2 => "TD2",
            Arrival::TD3 => "TD3",
            Arrival::D1D2 => "D1D2",
            Arrival::D1D3 => "D1D3",
            Arrival::D2D3 => "D2D3",
            Arrival::D1D1 => "D1D1",
            Arrival::D2D2 => "D2D2",
            Arrival::D3D3 => "D3D3",
            Arrival::TT => "TT",
        }
    }
}

impl fmt::Display for Arrival {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Weights over [`Arrival::ALL`].
///
/// The default gives each combination weight 1, so the pair-channel fourfold
/// term is the plain sum `6·distinct + 4·same`. That sum is what the corrected
/// correlation is built on; it is not a probability (it can reach 10). A
/// simulator that draws one arrival per pair sees the normalized weights
/// instead, see [`ArrivalWeights::normalized`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArrivalWeights(pub [f64; 10]);

impl Default for ArrivalWeights {
    fn default() -> Self {
        Self([1.0; 10])
    }
}

impl ArrivalWeights {
    pub fn new(w: [f64; 10]) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConfig(
                "arrival weights must be finite and nonnegative".into(),
            ));
        }
        if w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidConfig(
                "arrival weights must have a positive sum".into(),
            ));
        }
        Ok(Self(w))
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn normalized(&self) -> Self {
        let t = self.total();
        Self(self.0.map(|w| w / t))
    }

    pub fn weight(&self, a: Arrival) -> f64 {
        self.0[Arrival::ALL.iter().position(|x| *x == a).unwrap()]
    }
}

impl FromStr for ArrivalWeights {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_err = || Error::Parse {
            what: "arrival weights",
            input: s.to_string(),
        };
        let vals: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| parse_err()))
            .collect::<Result<_>>()?;
        let arr: [f64; 10] = vals.try_into().map_err(|_| parse_err())?;
        Self::new(arr)
    }
}

/// Fourfold probability when a single pair hits two different detectors,
/// e.g. `T` and `D3`: `γ²(d + γ(1-d))²`.
pub fn p4_pair_distinct(d: f64, gamma: f64) -> f64 {
    let fire = d + gamma * (1.0 - d);
    gamma * gamma * fire * fire
}

/// Fourfold probability when both photons of a pair hit the same detector:
/// `d(1-d)γ³ + (1-d)²γ⁴`. The doubly-hit detector counts as a clean click
/// only with probability `d(1-d)`.
pub fn p4_pair_same(d: f64, gamma: f64) -> f64 {
    let g3 = gamma.powi(3);
    d * (1.0 - d) * g3 + (1.0 - d).powi(2) * g3 * gamma
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum AggregateMode {
    /// `6γ²(d+γ(1-d))² + 4γ³(1-d)(d+γ)`: drops the `γ⁴(1-d)²` cross term.
    Truncated,
    /// `6·distinct + 4·same`.
    #[default]
    Derived,
}

/// Pair-channel fourfold term summed over the ten arrival combinations.
pub fn p4_pair_total(d: f64, gamma: f64, mode: AggregateMode) -> f64 {
    match mode {
        AggregateMode::Derived => 6.0 * p4_pair_distinct(d, gamma) + 4.0 * p4_pair_same(d, gamma),
        AggregateMode::Truncated => {
            6.0 * p4_pair_distinct(d, gamma) + 4.0 * gamma.powi(3) * (1.0 - d) * (d + gamma)
        }
    }
}

/// `Σ w_k · P(fourfold | arrival k)` over the ten arrival combinations.
pub fn p4_pair_weighted(d: f64, gamma: f64, weights: &ArrivalWeights) -> f64 {
    Arrival::ALL
        .iter()
        .zip(weights.0)
        .map(|(a, w)| {
            let p = if a.is_same_detector() {
                p4_pair_same(d, gamma)
            } else {
                p4_pair_distinct(d, gamma)
            };
            w * p
        })
        .sum()
}

/// All three signal photons of a double pair detected and the trigger fired,
/// really or dark: `d⁴ + γ(1-d)d³`.
pub fn p4_ghz(d: f64, gamma: f64) -> f64 {
    d.powi(4) + gamma * (1.0 - d) * d.powi(3)
}

/// Fourfold from a double pair with at least one signal detector filled in by
/// a dark count.
pub fn p4_nonghz_fourphoton(d: f64, gamma: f64) -> f64 {
    let m = 1.0 - d;
    3.0 * gamma * d.powi(3) * m
        + 6.0 * gamma.powi(2) * d.powi(2) * m.powi(2)
        + 4.0 * gamma.powi(3) * d * m.powi(3)
        + gamma.powi(4) * m.powi(4)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum CorrelationMode {
    /// First-order closed form `e / (1 + 6 r γ²/d²)`.
    #[default]
    Approx,
    /// `e · P(GHZ) / (P(GHZ) + P(non-GHZ))` from the full polynomials.
    Exact,
}

/// Joint probabilities of a fourfold with and without GHZ correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourfoldBreakdown {
    pub ghz: f64,
    pub nonghz_pair: f64,
    pub nonghz_fourphoton: f64,
}

impl FourfoldBreakdown {
    pub fn nonghz(&self) -> f64 {
        self.nonghz_pair + self.nonghz_fourphoton
    }

    pub fn total(&self) -> f64 {
        self.ghz + self.nonghz()
    }

    pub fn ghz_fraction(&self) -> f64 {
        self.ghz / self.total()
    }
}

pub fn fourfold_breakdown(params: &DetectorParams, weights: &ArrivalWeights) -> FourfoldBreakdown {
    FourfoldBreakdown {
        ghz: params.p_twopair * p4_ghz(params.d, params.gamma),
        nonghz_pair: params.p_pair * p4_pair_weighted(params.d, params.gamma, weights),
        nonghz_fourphoton: params.p_twopair * p4_nonghz_fourphoton(params.d, params.gamma),
    }
}

fn ensure_signal(params: &DetectorParams) -> Result<()> {
    if params.d <= 0.0 {
        return Err(Error::NoGhzSignal("detector efficiency is zero"));
    }
    if params.p_twopair <= 0.0 {
        return Err(Error::NoGhzSignal("two-pair creation probability is zero"));
    }
    Ok(())
}

/// Conditional correlation `E(S1 S2 S3 | fourfold)` with non-GHZ fourfolds
/// carrying zero correlation. Exact mode uses the default arrival weights.
pub fn corrected_correlation(params: &DetectorParams, mode: CorrelationMode) -> Result<f64> {
    match mode {
        CorrelationMode::Approx => {
            ensure_signal(params)?;
            let g = params.gamma / params.d;
            Ok(params.e_ghz / (1.0 + 6.0 * params.pair_ratio() * g * g))
        }
        CorrelationMode::Exact => corrected_correlation_weighted(params, &ArrivalWeights::default()),
    }
}

/// Exact-mode correlation with explicit arrival weights.
pub fn corrected_correlation_weighted(
    params: &DetectorParams,
    weights: &ArrivalWeights,
) -> Result<f64> {
    ensure_signal(params)?;
    let b = fourfold_breakdown(params, weights);
    Ok(params.e_ghz * b.ghz_fraction())
}

/// Correlation from an observed non-GHZ : GHZ count ratio `r`.
pub fn correlation_from_ratio(r: f64, e_ghz: f64) -> Result<f64> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::OutOfRange {
            name: "count ratio",
            value: r,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    Ok(e_ghz / (1.0 + r))
}

/// `P(S1 S2 S3 = 1) = (1 + e)/2`.
pub fn product_prob_plus(e: f64) -> Result<f64> {
    Ok((1.0 + check_range("correlation", e, -1.0, 1.0)?) / 2.0)
}

/// Standard deviation of a `±1` variable with mean `e`.
pub fn sigma_of_correlation(e: f64) -> Result<f64> {
    let plus = product_prob_plus(e)?;
    let sigma = (1.0 - e * e).max(0.0).sqrt();
    debug_assert!((sigma - (4.0 * plus * (1.0 - plus)).sqrt()).abs() < 1e-12);
    Ok(sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Separation {
    /// `(e - boundary)/σ`, capped at [`SEPARATION_CAP`].
    pub sigmas: f64,
    pub saturated: bool,
}

pub fn sigma_separation(e: f64, boundary: f64) -> Result<Separation> {
    let sigma = sigma_of_correlation(e)?;
    if e <= boundary {
        return Err(Error::NoSeparation { e, boundary });
    }
    let raw = (e - boundary) / sigma;
    Ok(if raw.is_finite() && raw <= SEPARATION_CAP {
        Separation {
            sigmas: raw,
            saturated: false,
        }
    } else {
        Separation {
            sigmas: SEPARATION_CAP,
            saturated: true,
        }
    })
}

/// Solves `corrected_correlation(approx) = e_target` for gamma by bisection
/// over `[0, GAMMA_BRACKET_MAX]`.
pub fn find_gamma_for_correlation(d: f64, ratio: f64, e_target: f64, e_ghz: f64) -> Result<f64> {
    let base = DetectorParams::from_ratio(d, 0.0, ratio, e_ghz)?;
    let corr = |gamma: f64| -> Result<f64> {
        corrected_correlation(&base.with_gamma(gamma)?, CorrelationMode::Approx)
    };
    let (mut lo, mut hi) = (0.0, GAMMA_BRACKET_MAX);
    let at_lo = corr(lo)?;
    if e_target == at_lo {
        return Ok(0.0);
    }
    let at_hi = corr(hi)?;
    if !(e_target < at_lo && e_target >= at_hi) {
        return Err(Error::NotBracketed {
            target: e_target,
            lo,
            hi,
        });
    }
    while hi - lo > GAMMA_TOL {
        let mid = 0.5 * (lo + hi);
        if corr(mid)? > e_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
