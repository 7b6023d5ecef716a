//! Seeded event-level simulation of fourfold coincidences.
//!
//! Each trial draws a creation channel, routes the photons to `T, D1, D2, D3`,
//! applies detection efficiency and dark counts, and records the spin product
//! whenever all four detectors fired. Trials are grouped into fixed-size
//! chunks; chunk `k` draws from a ChaCha8 stream seeded by the master seed with
//! stream id `k`, and chunk tallies are merged by integer addition. Results
//! therefore depend only on `(config, master_seed, chunk_size)`, never on the
//! worker count.

use std::io::Write;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::detector::{
    fourfold_breakdown, sigma_of_correlation, Arrival, ArrivalWeights, DetectorParams,
};
use crate::error::{Error, Result};
use crate::quantum::{ghz_state, OutcomeSampler, OutcomeTriple, SettingTriple};

pub const DEFAULT_CHUNK_SIZE: u64 = 1 << 16;
/// `|z|` above this is flagged by [`compare_analytic`].
pub const Z_FLAG: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: DetectorParams,
    pub setting: SettingTriple,
    pub n_trials: u64,
    pub master_seed: u64,
    pub arrival_weights: ArrivalWeights,
    pub chunk_size: u64,
}

impl RunConfig {
    pub fn new(params: DetectorParams, setting: SettingTriple, n_trials: u64, master_seed: u64) -> Self {
        Self {
            params,
            setting,
            n_trials,
            master_seed,
            arrival_weights: ArrivalWeights::default(),
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::InvalidConfig("n_trials must be at least 1".into()));
        }
        if self.chunk_size == 0 {
            return Err(Error::InvalidConfig("chunk_size must be at least 1".into()));
        }
        ArrivalWeights::new(self.arrival_weights.0)?;
        DetectorParams::new(
            self.params.d,
            self.params.gamma,
            self.params.p_pair,
            self.params.p_twopair,
            self.params.e_ghz,
        )?;
        Ok(())
    }

    fn n_chunks(&self) -> u64 {
        self.n_trials.div_ceil(self.chunk_size)
    }

    fn chunk_len(&self, chunk: u64) -> u64 {
        let start = chunk * self.chunk_size;
        self.chunk_size.min(self.n_trials - start)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Creation {
    Pair,
    Twopair,
}

/// Per-trial record. Detector arrays are ordered `T, D1, D2, D3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub creation: Creation,
    /// `None` for a double pair, which always sends one photon per detector.
    pub arrival: Option<Arrival>,
    pub fired: [bool; 4],
    pub dark: [bool; 4],
    pub classified_ghz: bool,
    pub spins: Option<OutcomeTriple>,
}

impl TrialOutcome {
    pub fn is_fourfold(&self) -> bool {
        self.fired.iter().all(|f| *f)
    }

    pub fn product(&self) -> Option<i8> {
        self.spins.map(|s| s.product())
    }
}

/// Config with the arrival CDF and GHZ sampler precomputed.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    cfg: RunConfig,
    arrival_cdf: [f64; 10],
    sampler: OutcomeSampler,
}

impl PreparedRun {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let w = cfg.arrival_weights.normalized();
        let mut arrival_cdf = [0.0; 10];
        let mut acc = 0.0;
        for (c, p) in arrival_cdf.iter_mut().zip(w.0) {
            acc += p;
            *c = acc;
        }
        arrival_cdf[9] = 1.0;
        let sampler = OutcomeSampler::new(&ghz_state(), cfg.setting)?;
        Ok(Self {
            cfg,
            arrival_cdf,
            sampler,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    fn draw_arrival<R: Rng + ?Sized>(&self, rng: &mut R) -> Arrival {
        let u: f64 = rng.random();
        // Zero-weight combinations have the same CDF value as their
        // predecessor and are never selected.
        let idx = self.arrival_cdf.iter().position(|c| u < *c).unwrap_or(9);
        Arrival::ALL[idx]
    }
}

fn uniform_spins<R: Rng + ?Sized>(rng: &mut R) -> OutcomeTriple {
    OutcomeTriple::from_index(rng.random_range(0..8))
}

/// Runs one trial.
///
/// A detector reached by one photon fires for real with probability `d`. One
/// reached by two photons gives a clean click only when the leading photon is
/// detected and the trailing one is not; if the trailing photon is detected the
/// window holds a multi-photon pulse and that detector is vetoed. Any detector
/// without a real click and not vetoed fires dark with probability `gamma`.
pub fn simulate_trial<R: Rng + ?Sized>(run: &PreparedRun, rng: &mut R) -> TrialOutcome {
    let params = &run.cfg.params;
    let (creation, arrival) = if rng.random::<f64>() < params.p_twopair {
        (Creation::Twopair, None)
    } else {
        (Creation::Pair, Some(run.draw_arrival(rng)))
    };
    let counts = arrival.map_or([1; 4], Arrival::photon_counts);

    let mut real = [false; 4];
    let mut dark = [false; 4];
    for det in 0..4 {
        let (clicked, vetoed) = match counts[det] {
            0 => (false, false),
            1 => (rng.random_bool(params.d), false),
            _ => {
                let lead = rng.random_bool(params.d);
                let trail = rng.random_bool(params.d);
                (lead && !trail, trail)
            }
        };
        real[det] = clicked;
        dark[det] = !clicked && !vetoed && rng.random_bool(params.gamma);
    }
    let fired = std::array::from_fn(|i| real[i] || dark[i]);

    let fourfold = fired.iter().all(|f| *f);
    let classified_ghz = fourfold && creation == Creation::Twopair && real[1..].iter().all(|r| *r);
    let spins = match (fourfold, classified_ghz) {
        (false, _) => None,
        (true, true) => Some(run.sampler.sample(rng)),
        (true, false) => Some(uniform_spins(rng)),
    };
    TrialOutcome {
        creation,
        arrival,
        fired,
        dark,
        classified_ghz,
        spins,
    }
}

/// Integer tallies; merging is exact and order-independent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub n_trials: u64,
    pub n_fourfold: u64,
    pub n_ghz_fourfold: u64,
    pub product_sum: i64,
    pub ghz_product_sum: i64,
}

impl Tally {
    fn record(&mut self, t: &TrialOutcome) {
        self.n_trials += 1;
        if let Some(p) = t.product() {
            self.n_fourfold += 1;
            self.product_sum += p as i64;
            if t.classified_ghz {
                self.n_ghz_fourfold += 1;
                self.ghz_product_sum += p as i64;
            }
        }
    }

    fn merge(self, o: Tally) -> Tally {
        Tally {
            n_trials: self.n_trials + o.n_trials,
            n_fourfold: self.n_fourfold + o.n_fourfold,
            n_ghz_fourfold: self.n_ghz_fourfold + o.n_ghz_fourfold,
            product_sum: self.product_sum + o.product_sum,
            ghz_product_sum: self.ghz_product_sum + o.ghz_product_sum,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStats {
    pub n_trials: u64,
    pub n_fourfold: u64,
    pub n_ghz_fourfold: u64,
    /// Mean spin product over fourfold trials; `None` when there were none.
    pub e_hat: Option<f64>,
    pub std_err: Option<f64>,
    pub p4_hat: f64,
    pub tally: Tally,
}

impl RunStats {
    pub fn from_tally(tally: Tally) -> Self {
        let (e_hat, std_err) = if tally.n_fourfold == 0 {
            (None, None)
        } else {
            let e = tally.product_sum as f64 / tally.n_fourfold as f64;
            let sigma = sigma_of_correlation(e).expect("mean of ±1 values lies in [-1, 1]");
            (Some(e), Some(sigma / (tally.n_fourfold as f64).sqrt()))
        };
        Self {
            n_trials: tally.n_trials,
            n_fourfold: tally.n_fourfold,
            n_ghz_fourfold: tally.n_ghz_fourfold,
            e_hat,
            std_err,
            p4_hat: tally.n_fourfold as f64 / tally.n_trials as f64,
            tally,
        }
    }

    pub fn has_coincidences(&self) -> bool {
        self.n_fourfold > 0
    }

    /// Mean product over GHZ-classified fourfolds.
    pub fn ghz_subset_mean(&self) -> Option<f64> {
        (self.tally.n_ghz_fourfold > 0)
            .then(|| self.tally.ghz_product_sum as f64 / self.tally.n_ghz_fourfold as f64)
    }
}

fn chunk_rng(master_seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(chunk);
    rng
}

fn run_chunk(run: &PreparedRun, chunk: u64) -> Tally {
    let mut rng = chunk_rng(run.cfg.master_seed, chunk);
    let mut tally = Tally::default();
    for _ in 0..run.cfg.chunk_len(chunk) {
        tally.record(&simulate_trial(run, &mut rng));
    }
    tally
}

/// Runs all trials on the global rayon pool.
pub fn run(cfg: &RunConfig) -> Result<RunStats> {
    let prepared = PreparedRun::new(cfg.clone())?;
    let tally = (0..cfg.n_chunks())
        .into_par_iter()
        .map(|chunk| run_chunk(&prepared, chunk))
        .reduce(Tally::default, Tally::merge);
    Ok(RunStats::from_tally(tally))
}

/// Runs on a dedicated pool with `workers` threads.
pub fn run_with_workers(cfg: &RunConfig, workers: usize) -> Result<RunStats> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| run(cfg))
}

#[derive(Serialize)]
struct EventRecord<'a> {
    trial: u64,
    creation: Creation,
    arrival: &'a str,
    fired: String,
    dark: String,
    ghz: bool,
    spins: Option<String>,
}

fn bits(v: &[bool; 4]) -> String {
    v.iter().map(|b| if *b { '1' } else { '0' }).collect()
}

/// Serial run that also writes one JSON object per trial to `log`:
/// `{"trial","creation","arrival","fired","dark","ghz","spins"}` with bit
/// strings ordered `T D1 D2 D3`, arrival `"GHZ4"` for double pairs and spins as
/// `+`/`-` characters (null without a fourfold). Tallies match [`run`].
pub fn run_with_log<W: Write>(cfg: &RunConfig, log: &mut W) -> Result<RunStats> {
    let prepared = PreparedRun::new(cfg.clone())?;
    let io_err = |e: std::io::Error| Error::InvalidConfig(format!("event log: {e}"));
    let mut tally = Tally::default();
    let mut trial = 0u64;
    for chunk in 0..cfg.n_chunks() {
        let mut rng = chunk_rng(cfg.master_seed, chunk);
        for _ in 0..cfg.chunk_len(chunk) {
            let t = simulate_trial(&prepared, &mut rng);
            tally.record(&t);
            let rec = EventRecord {
                trial,
                creation: t.creation,
                arrival: t.arrival.map_or("GHZ4", Arrival::as_str),
                fired: bits(&t.fired),
                dark: bits(&t.dark),
                ghz: t.classified_ghz,
                spins: t.spins.map(|s| s.to_string()),
            };
            serde_json::to_writer(&mut *log, &rec)
                .map_err(|e| Error::InvalidConfig(format!("event log: {e}")))?;
            log.write_all(b"\n").map_err(io_err)?;
            trial += 1;
        }
    }
    Ok(RunStats::from_tally(tally))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub comparable: bool,
    pub e_analytic: f64,
    pub p4_analytic: f64,
    pub z_correlation: Option<f64>,
    pub z_fourfold: Option<f64>,
    pub flagged: bool,
}

/// z-scores of a run against the exact analytic model.
///
/// `arrivals` should be the weights the run drew from; they are normalized
/// here because the simulator picks exactly one arrival per pair.
pub fn compare_analytic(
    stats: &RunStats,
    params: &DetectorParams,
    arrivals: &ArrivalWeights,
) -> Comparison {
    let b = fourfold_breakdown(params, &arrivals.normalized());
    let p4 = b.total();
    let e = if p4 > 0.0 { params.e_ghz * b.ghz_fraction() } else { 0.0 };
    let (Some(e_hat), Some(se)) = (stats.e_hat, stats.std_err) else {
        return Comparison {
            comparable: false,
            e_analytic: e,
            p4_analytic: p4,
            z_correlation: None,
            z_fourfold: None,
            flagged: false,
        };
    };
    let z = |diff: f64, se: f64| -> f64 {
        if se > 0.0 {
            diff / se
        } else if diff.abs() < 1e-12 {
            0.0
        } else {
            diff.signum() * f64::MAX
        }
    };
    let z_e = z(e_hat - e, se);
    let p4_se = (p4 * (1.0 - p4) / stats.n_trials as f64).sqrt();
    let z_p = z(stats.p4_hat - p4, p4_se);
    Comparison {
        comparable: true,
        e_analytic: e,
        p4_analytic: p4,
        z_correlation: Some(z_e),
        z_fourfold: Some(z_p),
        flagged: z_e.abs() > Z_FLAG || z_p.abs() > Z_FLAG,
    }
}
