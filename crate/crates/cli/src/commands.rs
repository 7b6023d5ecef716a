use std::fs::File;
use std::io::{BufWriter, Write};

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use ghz_lhv::detector::{
    corrected_correlation, correlation_from_ratio, find_gamma_for_correlation,
    gamma_from_rates, product_prob_plus, sigma_of_correlation, sigma_separation, ArrivalWeights,
    CorrelationMode, DetectorParams, RateSpec, CLASSICAL_BOUNDARY,
};
use ghz_lhv::lhv::{
    check_with_witness, construct_symmetric_joint, expectations_from_joint, inequality_values,
    CorrelationSet, JointDistribution8, SymmetricParams, ATOM_LABELS,
};
use ghz_lhv::montecarlo::{self, compare_analytic, RunConfig, DEFAULT_CHUNK_SIZE};
use ghz_lhv::quantum::{
    ghz_state, operator_expectation, outcome_probabilities, OutcomeTriple, SettingTriple,
};

use crate::config;
use crate::format::num;
use crate::{CorrelationArgs, ModeArg, SimulateArgs, Status, SweepArgs};

const INEQUALITY_FORMS: [&str; 4] = [
    "E(A)+E(B)+E(C)-E(ABC)",
    "-E(A)+E(B)+E(C)+E(ABC)",
    "E(A)-E(B)+E(C)+E(ABC)",
    "E(A)+E(B)-E(C)+E(ABC)",
];

fn print_json(v: &Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn joint_json(j: &JointDistribution8) -> Value {
    let map: serde_json::Map<String, Value> = ATOM_LABELS
        .iter()
        .zip(j.probabilities())
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect();
    Value::Object(map)
}

pub fn check(e_a: f64, e_b: f64, e_c: f64, e_abc: f64, as_json: bool) -> Result<Status> {
    let c = CorrelationSet::new(e_a, e_b, e_c, e_abc)?;
    let report = check_with_witness(&c);
    if report.feasible != report.witness.is_some() {
        bail!("inequalities and feasibility oracle disagree at {c:?}");
    }
    let values = inequality_values(&c);
    let violated: Vec<usize> = report.violated().iter().map(|k| k + 1).collect();

    if as_json {
        print_json(&json!({
            "e_a": c.e_a,
            "e_b": c.e_b,
            "e_c": c.e_c,
            "e_abc": c.e_abc,
            "feasible": report.feasible,
            "f_value": report.f_value,
            "inequality_values": values,
            "slacks": report.slacks,
            "violated": violated,
            "witness": report.witness.as_ref().map(joint_json),
        }))?;
    } else {
        println!(
            "E(A)={} E(B)={} E(C)={} E(ABC)={}",
            num(c.e_a),
            num(c.e_b),
            num(c.e_c),
            num(c.e_abc)
        );
        for (k, form) in INEQUALITY_FORMS.iter().enumerate() {
            let (lo, hi) = (report.slacks[2 * k], report.slacks[2 * k + 1]);
            let mark = if lo < 0.0 || hi < 0.0 { "  VIOLATED" } else { "" };
            println!(
                "({}) {form} = {}  slack_lower={} slack_upper={}{mark}",
                k + 1,
                num(values[k]),
                num(lo),
                num(hi)
            );
        }
        match &report.witness {
            Some(w) => {
                println!("feasible, F={}", num(report.f_value));
                println!("witness:");
                for (label, p) in ATOM_LABELS.iter().zip(w.probabilities()) {
                    println!("  {label} {}", num(*p));
                }
            }
            None => println!("infeasible, F={}", num(report.f_value)),
        }
    }
    Ok(if report.feasible {
        Status::Ok
    } else {
        Status::Infeasible
    })
}

pub fn construct_joint(p: f64, q: f64, as_json: bool) -> Result<Status> {
    let s = SymmetricParams::new(p, q)?;
    let joint = construct_symmetric_joint(&s)?;
    let e = expectations_from_joint(&joint);
    if as_json {
        print_json(&json!({
            "p": p,
            "q": q,
            "lambda": (3.0 * p - q) / 2.0,
            "joint": joint_json(&joint),
            "expectations": e,
        }))?;
    } else {
        println!("p={} q={} lambda={}", num(p), num(q), num((3.0 * p - q) / 2.0));
        for (label, v) in ATOM_LABELS.iter().zip(joint.probabilities()) {
            println!("  {label} {}", num(*v));
        }
        println!(
            "E(A)={} E(B)={} E(C)={} E(ABC)={}",
            num(e.e_a),
            num(e.e_b),
            num(e.e_c),
            num(e.e_abc)
        );
    }
    Ok(Status::Ok)
}

fn mode(m: ModeArg) -> CorrelationMode {
    match m {
        ModeArg::Approx => CorrelationMode::Approx,
        ModeArg::Exact => CorrelationMode::Exact,
    }
}

fn parse_counts(s: &str) -> Result<f64> {
    let (a, b) = s
        .split_once(':')
        .with_context(|| format!("expected counts as A:B, got {s:?}"))?;
    let a: f64 = a.trim().parse().with_context(|| format!("bad count {a:?}"))?;
    let b: f64 = b.trim().parse().with_context(|| format!("bad count {b:?}"))?;
    if !(a >= 0.0 && b > 0.0) {
        bail!("counts must satisfy A >= 0 and B > 0");
    }
    Ok(a / b)
}

pub fn correlation(a: &CorrelationArgs) -> Result<Status> {
    let mut fields = serde_json::Map::new();
    let e = if let Some(e) = a.e {
        e
    } else if let Some(counts) = &a.ratio_counts {
        let r = parse_counts(counts)?;
        fields.insert("count_ratio".into(), json!(r));
        correlation_from_ratio(r, a.e_ghz)?
    } else {
        let gamma = match a.gamma {
            Some(g) => g,
            None => gamma_from_rates(&RateSpec {
                dark_rate: a.dark_rate,
                window: a.window,
            })?,
        };
        let params = DetectorParams::from_ratio(a.d, gamma, a.ratio, a.e_ghz)?;
        fields.insert("d".into(), json!(a.d));
        fields.insert("gamma".into(), json!(gamma));
        fields.insert("ratio".into(), json!(a.ratio));
        fields.insert(
            "mode".into(),
            json!(match a.mode {
                ModeArg::Approx => "approx",
                ModeArg::Exact => "exact",
            }),
        );
        corrected_correlation(&params, mode(a.mode))?
    };
    let sigma = sigma_of_correlation(e)?;
    let p_plus = product_prob_plus(e)?;
    let separation = sigma_separation(e, CLASSICAL_BOUNDARY).ok();
    let tetrad = CorrelationSet::symmetric(e, -e)?;
    let tetrad_feasible = ghz_lhv::lhv::check_inequalities(&tetrad).feasible;

    fields.insert("e".into(), json!(e));
    fields.insert("sigma".into(), json!(sigma));
    fields.insert("p_plus".into(), json!(p_plus));
    fields.insert("separation".into(), json!(separation.map(|s| s.sigmas)));
    fields.insert("saturated".into(), json!(separation.is_some_and(|s| s.saturated)));
    fields.insert("above_boundary".into(), json!(e > CLASSICAL_BOUNDARY));
    fields.insert("symmetric_tetrad_feasible".into(), json!(tetrad_feasible));

    if a.json {
        print_json(&Value::Object(fields))?;
    } else {
        for key in ["d", "gamma", "ratio", "mode", "count_ratio"] {
            if let Some(v) = fields.get(key) {
                match v {
                    Value::Number(n) => println!("{key:<10} {}", num(n.as_f64().unwrap())),
                    Value::String(s) => println!("{key:<10} {s}"),
                    _ => {}
                }
            }
        }
        println!("{:<10} {}", "E", num(e));
        println!("{:<10} {}", "sigma", num(sigma));
        println!("{:<10} {}", "p_plus", num(p_plus));
        match separation {
            Some(s) if s.saturated => println!("{:<10} {} (saturated)", "separation", num(s.sigmas)),
            Some(s) => println!("{:<10} {}", "separation", num(s.sigmas)),
            None => println!("{:<10} none (E <= {})", "separation", num(CLASSICAL_BOUNDARY)),
        }
        println!(
            "({e}, {e}, {e}, -{e}) is {}",
            if tetrad_feasible {
                "LHV-compatible"
            } else {
                "LHV-incompatible"
            },
            e = num(e)
        );
    }
    Ok(Status::Ok)
}

fn validate_grid(a: &SweepArgs) -> Result<()> {
    if a.gamma_steps < 2 || a.d_steps < 2 {
        bail!("grid needs at least 2 steps per axis");
    }
    if !(a.gamma_min > 0.0 && a.gamma_max <= 1.0 && a.gamma_min <= a.gamma_max) {
        bail!("gamma bounds must satisfy 0 < gamma-min <= gamma-max <= 1");
    }
    if !(a.d_min > 0.0 && a.d_max <= 1.0 && a.d_min <= a.d_max) {
        bail!("d bounds must satisfy 0 < d-min <= d-max <= 1");
    }
    Ok(())
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

fn lin_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| match i {
            _ if i == n - 1 => hi,
            _ => lo + (hi - lo) * i as f64 / (n - 1) as f64,
        })
        .collect()
}

pub fn sweep(a: &SweepArgs) -> Result<Status> {
    validate_grid(a)?;
    let gammas = log_space(a.gamma_min, a.gamma_max, a.gamma_steps);
    let ds = lin_space(a.d_min, a.d_max, a.d_steps);

    let file = File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "gamma,d,E,sigma,separation")?;
    for &d in &ds {
        for &gamma in &gammas {
            let params = DetectorParams::from_ratio(d, gamma, a.ratio, a.e_ghz)?;
            let e = corrected_correlation(&params, mode(a.mode))?;
            let sigma = sigma_of_correlation(e)?;
            let sep = sigma_separation(e, CLASSICAL_BOUNDARY)
                .map(|s| num(s.sigmas))
                .unwrap_or_default();
            writeln!(w, "{},{},{},{},{}", num(gamma), num(d), num(e), num(sigma), sep)?;
        }
    }
    w.flush()
        .with_context(|| format!("writing {}", a.out.display()))?;
    eprintln!(
        "wrote {} rows to {}",
        gammas.len() * ds.len(),
        a.out.display()
    );

    if let Some(target) = a.contour {
        println!("d,gamma");
        for &d in &ds {
            let gamma = find_gamma_for_correlation(d, a.ratio, target, a.e_ghz)
                .map(num)
                .unwrap_or_default();
            println!("{},{}", num(d), gamma);
        }
    }
    Ok(Status::Ok)
}

struct SimSettings {
    cfg: RunConfig,
    workers: Option<usize>,
}

fn simulate_settings(a: &SimulateArgs) -> Result<SimSettings> {
    let file = match &a.config {
        Some(path) => config::load(path, config::SIMULATE_KEYS)?,
        None => Default::default(),
    };
    let d = a.d.or(config::get(&file, "d")?).unwrap_or(0.5);
    let gamma = a.gamma.or(config::get(&file, "gamma")?).unwrap_or(1e-2);

    // Creation probabilities: flags win over the file as a group.
    let (flag_pair, flag_twopair, flag_ratio) = (a.pair, a.twopair, a.ratio);
    let from_flags = flag_pair.is_some() || flag_twopair.is_some() || flag_ratio.is_some();
    let (pair, twopair, ratio) = if from_flags {
        (flag_pair, flag_twopair, flag_ratio)
    } else {
        (
            config::get::<f64>(&file, "pair")?,
            config::get::<f64>(&file, "twopair")?,
            config::get::<f64>(&file, "ratio")?,
        )
    };
    let (p_pair, p_twopair) = match (pair, twopair, ratio) {
        (None, None, Some(r)) => {
            let t = 1.0 / (1.0 + r);
            (1.0 - t, t)
        }
        (_, _, Some(_)) => bail!("give either a ratio or pair/twopair, not both"),
        (Some(p), Some(t), None) => (p, t),
        (Some(p), None, None) => (p, 1.0 - p),
        (None, Some(t), None) => (1.0 - t, t),
        (None, None, None) => (0.99, 0.01),
    };

    let setting: SettingTriple = match &a.setting {
        Some(s) => s.parse()?,
        None => config::get::<SettingTriple>(&file, "setting")?.unwrap_or(SettingTriple::XYY),
    };
    let e_ghz = match a.e_ghz.or(config::get(&file, "e-ghz")?) {
        Some(e) => e,
        None => operator_expectation(&ghz_state(), &setting)?,
    };
    let params = DetectorParams::new(d, gamma, p_pair, p_twopair, e_ghz)?;

    let trials = a.trials.or(config::get(&file, "trials")?).unwrap_or(1_000_000);
    let Some(seed) = a.seed.or(config::get(&file, "seed")?) else {
        bail!("a master seed is required (--seed or seed= in the config file)");
    };
    let mut cfg = RunConfig::new(params, setting, trials, seed);
    cfg.chunk_size = a
        .chunk_size
        .or(config::get(&file, "chunk-size")?)
        .unwrap_or(DEFAULT_CHUNK_SIZE);
    let weights = match &a.arrival_weights {
        Some(s) => Some(s.parse::<ArrivalWeights>()?),
        None => config::get::<ArrivalWeights>(&file, "arrival-weights")?,
    };
    if let Some(w) = weights {
        cfg.arrival_weights = w;
    }
    cfg.validate()?;
    let workers = a.workers.or(config::get(&file, "workers")?);
    Ok(SimSettings { cfg, workers })
}

pub fn simulate(a: &SimulateArgs) -> Result<Status> {
    let SimSettings { cfg, workers } = simulate_settings(a)?;
    let stats = match (&a.events, workers) {
        (Some(path), _) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            let stats = montecarlo::run_with_log(&cfg, &mut w)?;
            w.flush()?;
            stats
        }
        (None, Some(n)) => montecarlo::run_with_workers(&cfg, n)?,
        (None, None) => montecarlo::run(&cfg)?,
    };
    let cmp = compare_analytic(&stats, &cfg.params, &cfg.arrival_weights);
    let status = if stats.has_coincidences() {
        "ok"
    } else {
        "no-coincidences"
    };

    if a.json {
        print_json(&json!({
            "status": status,
            "config": {
                "d": cfg.params.d,
                "gamma": cfg.params.gamma,
                "p_pair": cfg.params.p_pair,
                "p_twopair": cfg.params.p_twopair,
                "e_ghz": cfg.params.e_ghz,
                "setting": cfg.setting.to_string(),
                "trials": cfg.n_trials,
                "seed": cfg.master_seed,
                "chunk_size": cfg.chunk_size,
                "arrival_weights": cfg.arrival_weights.0,
            },
            "stats": {
                "n_trials": stats.n_trials,
                "n_fourfold": stats.n_fourfold,
                "n_ghz_fourfold": stats.n_ghz_fourfold,
                "e_hat": stats.e_hat,
                "std_err": stats.std_err,
                "p4_hat": stats.p4_hat,
            },
            "comparison": cmp,
        }))?;
    } else {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), num);
        println!("setting        {}", cfg.setting);
        println!("seed           {}", cfg.master_seed);
        println!("trials         {}", stats.n_trials);
        println!("fourfold       {}", stats.n_fourfold);
        println!("ghz fourfold   {}", stats.n_ghz_fourfold);
        println!("p4_hat         {}", num(stats.p4_hat));
        println!("e_hat          {}", opt(stats.e_hat));
        println!("std_err        {}", opt(stats.std_err));
        println!("E analytic     {}", num(cmp.e_analytic));
        println!("p4 analytic    {}", num(cmp.p4_analytic));
        println!("z(E)           {}", opt(cmp.z_correlation));
        println!("z(p4)          {}", opt(cmp.z_fourfold));
        println!("flagged        {}", cmp.flagged);
        println!("status         {status}");
    }
    Ok(Status::Ok)
}

pub fn quantum(setting: &str, as_json: bool) -> Result<Status> {
    let s: SettingTriple = setting.parse()?;
    let psi = ghz_state();
    let e = operator_expectation(&psi, &s)?;
    let probs = outcome_probabilities(&psi, &s)?;
    let total: f64 = probs.iter().sum();
    if as_json {
        let rows: Vec<Value> = probs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                json!({
                    "outcome": OutcomeTriple::from_index(i).to_string(),
                    "probability": p,
                })
            })
            .collect();
        print_json(&json!({
            "setting": s.to_string(),
            "expectation": e,
            "distribution": rows,
            "total": total,
        }))?;
    } else {
        println!("<{s}> = {}", num(e));
        for (i, p) in probs.iter().enumerate() {
            println!("{} {}", OutcomeTriple::from_index(i), num(*p));
        }
        println!("total {}", num(total));
    }
    Ok(Status::Ok)
}
