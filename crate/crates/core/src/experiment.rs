//! Experiment configuration and the commands behind the `onebit` binary.
//!
//! A configuration is a flat map of keys to JSON values. It can be read from
//! a text file with one `key = <json>` per line (`#` starts a comment) and
//! overridden by command-line flags. Every output file starts with the fully
//! resolved configuration, so a run can be reproduced from its output.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{
    check_variation_bound, fmt_f64, pointwise_error, rate_fit, BoundCheck, ErrorReport, RateFit, Regime, DEFAULT_GRID,
    DEFAULT_INTERVAL,
};
use crate::approx::{
    check_onebit_admissible, iterated_u_coeffs, kantorovich_coeffs, near_best_proxy, pr_coeffs, sample_grid,
    Admissibility, GridFunction, Norm,
};
use crate::bernstein::{abs_moment, basis_diff, basis_values, moment, BernsteinPoly};
use crate::error::{Error, Result};
use crate::functions::FunctionSpec;
use crate::lattice::{lattice_stats, round_alpha};
use crate::sigma_delta::{
    quantize, verify_difference_equation, Alphabet, QuantizationResult, QuantizerConfig, RuleKind, SparseFeedbackRule,
    DEFAULT_U_CAP,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Tolerance for `|E^Q| <= u_max V_{n,r} + tol`.
pub const VARIATION_BOUND_TOL: f64 = 1e-9;

/// Keys accepted in configuration files and as flags.
pub const CONFIG_KEYS: &[&str] = &[
    "alpha", "alphabet", "fn", "grid", "interval", "moment_s", "mu", "n", "order", "out", "params", "quantize", "rule",
    "seed", "stage", "u_cap",
];

/// First-stage operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Stage {
    Bernstein,
    Kantorovich,
    IteratedU(usize),
    Proxy(Norm),
}

impl Stage {
    pub fn parse(s: &str) -> Result<Stage> {
        let s = s.trim();
        match s {
            "bernstein" => return Ok(Stage::Bernstein),
            "kantorovich" => return Ok(Stage::Kantorovich),
            _ => {}
        }
        if let Some(r) = s.strip_prefix("iteru:") {
            let r: usize = r.parse().map_err(|_| Error::InvalidParameter(format!("bad iterated order in {s:?}")))?;
            if r == 0 {
                return Err(Error::InvalidParameter("iterated order must be at least 1".into()));
            }
            return Ok(Stage::IteratedU(r));
        }
        if let Some(p) = s.strip_prefix("proxy:") {
            return Ok(Stage::Proxy(Norm::parse(p)?));
        }
        Err(Error::InvalidParameter(format!(
            "unknown stage {s:?} (expected bernstein, kantorovich, iteru:R or proxy:P)"
        )))
    }

    pub fn label(&self) -> String {
        match self {
            Stage::Bernstein => "bernstein".into(),
            Stage::Kantorovich => "kantorovich".into(),
            Stage::IteratedU(r) => format!("iteru:{r}"),
            Stage::Proxy(p) => format!("proxy:{}", p.label()),
        }
    }

    /// Degree-`n` Bernstein coefficients produced by this stage.
    pub fn coeffs(&self, f: &FunctionSpec, n: usize) -> Result<GridFunction> {
        match self {
            Stage::Bernstein => sample_grid(f, n),
            Stage::Kantorovich => kantorovich_coeffs(f, n),
            Stage::IteratedU(r) => iterated_u_coeffs(f, n, *r),
            Stage::Proxy(p) => GridFunction::new(near_best_proxy(f, n, *p)?.poly.into_coeffs()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub function: FunctionSpec,
    pub degrees: Vec<usize>,
    pub quantizer: QuantizerConfig,
    /// When false the stage-one polynomial is measured without quantization.
    pub quantize: bool,
    pub stage: Stage,
    pub interval: (f64, f64),
    pub grid: usize,
    pub alphas: Vec<f64>,
    /// Power `s` in the weighted absolute moments of the `moments` command.
    pub moment_s: u32,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::from_values(&BTreeMap::new()).expect("defaults are valid")
    }
}

fn get<'a>(m: &'a BTreeMap<String, Value>, key: &str) -> Option<&'a Value> {
    m.get(key)
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    v.as_f64().ok_or_else(|| Error::InvalidParameter(format!("{key} must be a number, got {v}")))
}

fn as_u64(key: &str, v: &Value) -> Result<u64> {
    v.as_u64().ok_or_else(|| Error::InvalidParameter(format!("{key} must be a non-negative integer, got {v}")))
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::InvalidParameter(format!("{key} must be a string, got {v}")))
}

fn as_f64_list(key: &str, v: &Value) -> Result<Vec<f64>> {
    match v {
        Value::Array(a) => a.iter().map(|x| as_f64(key, x)).collect(),
        Value::Number(_) => Ok(vec![as_f64(key, v)?]),
        _ => Err(Error::InvalidParameter(format!("{key} must be a number or a list of numbers, got {v}"))),
    }
}

fn as_usize_list(key: &str, v: &Value) -> Result<Vec<usize>> {
    match v {
        Value::Array(a) => a.iter().map(|x| as_u64(key, x).map(|n| n as usize)).collect(),
        Value::Number(_) => Ok(vec![as_u64(key, v)? as usize]),
        _ => Err(Error::InvalidParameter(format!("{key} must be an integer or a list of integers, got {v}"))),
    }
}

impl ExperimentConfig {
    /// Build from a key/value map; missing keys take their defaults.
    pub fn from_values(m: &BTreeMap<String, Value>) -> Result<Self> {
        if let Some(k) = m.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            return Err(Error::InvalidParameter(format!("unknown configuration key {k:?}")));
        }
        let fn_id = get(m, "fn").map(|v| as_str("fn", v)).transpose()?.unwrap_or("abs");
        let params = get(m, "params").map(|v| as_f64_list("params", v)).transpose()?.unwrap_or_default();
        let function = FunctionSpec::from_registry(fn_id, &params)?;

        let degrees = get(m, "n").map(|v| as_usize_list("n", v)).transpose()?.unwrap_or_else(|| vec![64]);
        if degrees.is_empty() {
            return Err(Error::InvalidParameter("the degree list is empty".into()));
        }
        if degrees[0] == 0 {
            return Err(Error::InvalidParameter("degrees must be at least 1".into()));
        }
        if degrees.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!("degrees must be strictly increasing, got {degrees:?}")));
        }

        let order = get(m, "order").map(|v| as_u64("order", v)).transpose()?.unwrap_or(1) as usize;
        let alphabet: Alphabet = get(m, "alphabet").map(|v| as_str("alphabet", v)).transpose()?.unwrap_or("pm1").parse()?;
        let rule: RuleKind = get(m, "rule").map(|v| as_str("rule", v)).transpose()?.unwrap_or("greedy").parse()?;
        let mu = get(m, "mu").map(|v| as_f64("mu", v)).transpose()?.unwrap_or(0.9);
        let u_cap = get(m, "u_cap").map(|v| as_f64("u_cap", v)).transpose()?.unwrap_or(DEFAULT_U_CAP);
        let quantizer = QuantizerConfig { order, alphabet, rule, mu, u_cap };
        quantizer.validate()?;

        let quantize = match get(m, "quantize") {
            None => true,
            Some(v) => v.as_bool().ok_or_else(|| Error::InvalidParameter(format!("quantize must be a boolean, got {v}")))?,
        };
        let stage = Stage::parse(get(m, "stage").map(|v| as_str("stage", v)).transpose()?.unwrap_or("bernstein"))?;

        let interval = match get(m, "interval") {
            None => DEFAULT_INTERVAL,
            Some(v) => {
                let l = as_f64_list("interval", v)?;
                if l.len() != 2 {
                    return Err(Error::InvalidParameter(format!("interval needs two numbers, got {v}")));
                }
                (l[0], l[1])
            }
        };
        if !(0.0 < interval.0 && interval.0 < interval.1 && interval.1 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "interval [{}, {}] must satisfy 0 < a < b < 1",
                interval.0, interval.1
            )));
        }
        let grid = get(m, "grid").map(|v| as_u64("grid", v)).transpose()?.unwrap_or(DEFAULT_GRID as u64) as usize;
        if grid < 2 {
            return Err(Error::InvalidParameter("grid must have at least 2 points".into()));
        }
        let alphas = get(m, "alpha").map(|v| as_f64_list("alpha", v)).transpose()?.unwrap_or_else(|| vec![0.0, 0.5, 1.0]);
        if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1], got {a}")));
        }
        let moment_s = get(m, "moment_s").map(|v| as_u64("moment_s", v)).transpose()?.unwrap_or(order as u64) as u32;
        let out = get(m, "out").map(|v| as_str("out", v).map(PathBuf::from)).transpose()?;
        let seed = get(m, "seed").map(|v| as_u64("seed", v)).transpose()?.unwrap_or(0);
        Ok(Self { function, degrees, quantizer, quantize, stage, interval, grid, alphas, moment_s, out, seed })
    }

    /// Resolved configuration as a key/value map (the inverse of [`Self::from_values`]).
    pub fn to_values(&self) -> BTreeMap<String, Value> {
        let mut m = BTreeMap::new();
        m.insert("fn".into(), json!(self.function.id()));
        m.insert("params".into(), json!(self.function.params()));
        m.insert("n".into(), json!(self.degrees));
        m.insert("order".into(), json!(self.quantizer.order));
        m.insert("alphabet".into(), json!(self.quantizer.alphabet.name()));
        m.insert("rule".into(), json!(self.quantizer.rule.name()));
        m.insert("mu".into(), json!(self.quantizer.mu));
        m.insert("u_cap".into(), json!(self.quantizer.u_cap));
        m.insert("quantize".into(), json!(self.quantize));
        m.insert("stage".into(), json!(self.stage.label()));
        m.insert("interval".into(), json!([self.interval.0, self.interval.1]));
        m.insert("grid".into(), json!(self.grid));
        m.insert("alpha".into(), json!(self.alphas));
        m.insert("moment_s".into(), json!(self.moment_s));
        if let Some(o) = &self.out {
            m.insert("out".into(), json!(o.to_string_lossy()));
        }
        m.insert("seed".into(), json!(self.seed));
        m
    }

    /// `key = <json>` lines, sorted by key.
    pub fn header_lines(&self) -> Vec<String> {
        self.to_values().iter().map(|(k, v)| format!("{k} = {v}")).collect()
    }

    fn single_degree(&self) -> Result<usize> {
        match self.degrees.as_slice() {
            [n] => Ok(*n),
            d => Err(Error::InvalidParameter(format!("this command takes exactly one degree, got {}", d.len()))),
        }
    }
}

/// Parse `key = <json>` lines.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, Value>> {
    let mut m = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("line {}: expected key = <json>", i + 1)))?;
        let v: Value = serde_json::from_str(v.trim())
            .map_err(|e| Error::InvalidParameter(format!("line {}: bad JSON value: {e}", i + 1)))?;
        m.insert(k.trim().to_string(), v);
    }
    Ok(m)
}

/// Convert a command-line flag value to the JSON a config file would hold.
pub fn flag_value(key: &str, raw: &str) -> Result<Value> {
    let bad = |what: &str| Error::InvalidParameter(format!("--{key}: expected {what}, got {raw:?}"));
    let num = |s: &str| -> Result<Value> {
        let v: f64 = s.trim().parse().map_err(|_| bad("a number"))?;
        serde_json::Number::from_f64(v).map(Value::Number).ok_or_else(|| bad("a finite number"))
    };
    let int = |s: &str| -> Result<Value> { s.trim().parse::<u64>().map(|v| json!(v)).map_err(|_| bad("an integer")) };
    match key {
        "fn" | "alphabet" | "rule" | "stage" | "out" => Ok(json!(raw)),
        "params" | "interval" | "alpha" => {
            if raw.trim().is_empty() {
                return Ok(json!([]));
            }
            raw.split(',').map(num).collect::<Result<Vec<Value>>>().map(Value::Array)
        }
        "n" => raw.split(',').map(int).collect::<Result<Vec<Value>>>().map(Value::Array),
        "order" | "grid" | "seed" | "moment_s" => int(raw),
        "mu" | "u_cap" => num(raw),
        "quantize" => raw.trim().parse::<bool>().map(Value::Bool).map_err(|_| bad("true or false")),
        _ => Err(Error::InvalidParameter(format!("unknown flag --{key}"))),
    }
}

/// Merge an optional config file with flag overrides (flags win).
pub fn load_config(file: Option<&Path>, flags: &[(&str, String)]) -> Result<ExperimentConfig> {
    let mut m = match file {
        Some(p) => parse_config_text(&fs::read_to_string(p)?)?,
        None => BTreeMap::new(),
    };
    for (k, v) in flags {
        m.insert(k.to_string(), flag_value(k, v)?);
    }
    ExperimentConfig::from_values(&m)
}

fn with_suffix(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_json<T: Serialize>(path: &Path, command: &str, config: &ExperimentConfig, payload: &T) -> Result<()> {
    let doc = json!({
        "schema": SCHEMA_VERSION,
        "command": command,
        "config": config.to_values(),
        "result": payload,
    });
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &doc)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn csv_writer(path: &Path, config: &ExperimentConfig) -> Result<csv::Writer<BufWriter<fs::File>>> {
    let mut f = BufWriter::new(fs::File::create(path)?);
    for line in config.header_lines() {
        writeln!(f, "# {line}")?;
    }
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(f))
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Everything produced by one stage-one + quantization run at a single degree.
#[derive(Clone, Debug, Serialize)]
pub struct QuantizeOutcome {
    pub n: usize,
    pub stage: String,
    pub stage_coeffs: Vec<f64>,
    pub stage_max_abs: f64,
    pub admissibility: Option<Admissibility>,
    pub quantization: Option<QuantizationResult>,
    /// `max |(y - q)_k - (D^r u)_k|`.
    pub recursion_residual: Option<f64>,
    pub variation_bound: Option<BoundCheck>,
    #[serde(skip)]
    pub report: ErrorReport,
}

/// Bound on the stage-one coefficients enforced before one-bit quantization.
pub fn onebit_gate(q: &QuantizerConfig) -> f64 {
    q.input_bound().unwrap_or(q.mu)
}

/// Run stage one and (optionally) the quantizer at degree `n`.
pub fn run_single(config: &ExperimentConfig, n: usize) -> Result<QuantizeOutcome> {
    let y = config.stage.coeffs(&config.function, n)?;
    let stage_max_abs = y.max_abs();
    let q = &config.quantizer;
    let mut admissibility = None;
    let mut quantization = None;
    let mut residual = None;
    let mut bound = None;
    let poly = if config.quantize {
        if q.alphabet == Alphabet::PlusMinusOne {
            let a = check_onebit_admissible(&y, onebit_gate(q));
            if !a.admissible {
                return Err(Error::NotAdmissible { max: a.max_abs, mu: a.mu });
            }
            admissibility = Some(a);
        }
        let res = quantize(&y.values, q)?;
        residual = Some(verify_difference_equation(&y.values, &res)?);
        bound = Some(check_variation_bound(&y.values, &res, config.grid, VARIATION_BOUND_TOL)?);
        let p = res.to_poly()?;
        quantization = Some(res);
        p
    } else {
        y.to_bernstein()
    };
    let mut report = pointwise_error(&config.function, &poly, config.grid)?;
    report.set_interval(config.interval.0, config.interval.1)?;
    report.set_envelope(q.order, Regime::for_order(q.order))?;
    Ok(QuantizeOutcome {
        n,
        stage: config.stage.label(),
        stage_coeffs: y.values,
        stage_max_abs,
        admissibility,
        quantization,
        recursion_residual: residual,
        variation_bound: bound,
        report,
    })
}

/// Single-degree run; writes `<out>.coeffs.json`, `<out>.report.json`, `<out>.report.csv`.
pub fn cmd_quantize(config: &ExperimentConfig) -> Result<QuantizeOutcome> {
    let n = config.single_degree()?;
    let outcome = run_single(config, n)?;
    if let Some(out) = &config.out {
        write_json(&with_suffix(out, ".coeffs.json"), "quantize", config, &outcome)?;
        write_json(&with_suffix(out, ".report.json"), "quantize", config, &outcome.report)?;
        let f = BufWriter::new(fs::File::create(with_suffix(out, ".report.csv"))?);
        outcome.report.write_csv(f, &config.header_lines())?;
    }
    Ok(outcome)
}

#[derive(Clone, Debug, Serialize)]
pub struct RatesRow {
    pub n: usize,
    pub sup_interval: f64,
    pub l1: f64,
    pub l2: f64,
    pub sup: f64,
    pub u_max: Option<f64>,
    pub max_abs_coeff: f64,
    pub bound_excess: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatesOutcome {
    pub rows: Vec<RatesRow>,
    /// Fits for `sup_interval`, `l1`, `l2`, `sup`; absent when an error is zero.
    pub fits: BTreeMap<String, Option<RateFit>>,
}

impl RatesOutcome {
    pub fn slope(&self, column: &str) -> Option<f64> {
        self.fits.get(column).copied().flatten().map(|f| f.slope)
    }
}

/// Degree sweep; writes `<out>.csv` and `<out>.json`.
pub fn cmd_rates(config: &ExperimentConfig) -> Result<RatesOutcome> {
    if config.degrees.len() < 4 {
        return Err(Error::InvalidParameter(format!("rates need at least 4 degrees, got {}", config.degrees.len())));
    }
    let rows = config
        .degrees
        .par_iter()
        .map(|&n| {
            let o = run_single(config, n)?;
            let r = &o.report;
            Ok(RatesRow {
                n,
                sup_interval: r.sup_on_interval,
                l1: r.norm(Norm::Lp(1.0)).unwrap_or(f64::NAN),
                l2: r.norm(Norm::Lp(2.0)).unwrap_or(f64::NAN),
                sup: r.norm(Norm::Sup).unwrap_or(f64::NAN),
                u_max: o.quantization.as_ref().map(|q| q.u_max),
                max_abs_coeff: o.stage_max_abs,
                bound_excess: o.variation_bound.map(|b| b.worst_excess),
            })
        })
        .collect::<Result<Vec<RatesRow>>>()?;
    let ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    let mut fits = BTreeMap::new();
    let columns: [(&str, fn(&RatesRow) -> f64); 4] =
        [("sup_interval", |r| r.sup_interval), ("l1", |r| r.l1), ("l2", |r| r.l2), ("sup", |r| r.sup)];
    for (name, get) in columns {
        let e: Vec<f64> = rows.iter().map(get).collect();
        fits.insert(name.to_string(), rate_fit(&ns, &e).ok());
    }
    let outcome = RatesOutcome { rows, fits };
    if let Some(out) = &config.out {
        let mut w = csv_writer(&with_suffix(out, ".csv"), config)?;
        w.write_record(["n", "sup_interval", "l1", "l2", "sup", "u_max", "max_abs_coeff", "bound_excess"])?;
        for r in &outcome.rows {
            w.write_record([
                r.n.to_string(),
                fmt_f64(r.sup_interval),
                fmt_f64(r.l1),
                fmt_f64(r.l2),
                fmt_f64(r.sup),
                opt(r.u_max),
                fmt_f64(r.max_abs_coeff),
                opt(r.bound_excess),
            ])?;
        }
        w.write_record([
            "slope".to_string(),
            opt(outcome.slope("sup_interval")),
            opt(outcome.slope("l1")),
            opt(outcome.slope("l2")),
            opt(outcome.slope("sup")),
            String::new(),
            String::new(),
            String::new(),
        ])?;
        w.flush()?;
        write_json(&with_suffix(out, ".json"), "rates", config, &outcome)?;
    }
    Ok(outcome)
}

#[derive(Clone, Debug, Serialize)]
pub struct LatticeRow {
    pub n: usize,
    pub alpha: f64,
    pub log2_m: f64,
    pub mu_n: f64,
    pub sup_error: f64,
    /// `n^(alpha - 1)`.
    pub envelope: f64,
    pub below_envelope: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LatticeOutcome {
    pub rows: Vec<LatticeRow>,
    /// Slope of `sup_error` against `n` per alpha, when at least 4 degrees are given.
    pub slopes: Vec<(f64, Option<f64>)>,
}

/// Lattice rounding table; writes `<out>.csv` and `<out>.json`.
pub fn cmd_lattice(config: &ExperimentConfig) -> Result<LatticeOutcome> {
    let jobs: Vec<(usize, f64)> =
        config.degrees.iter().flat_map(|&n| config.alphas.iter().map(move |&a| (n, a))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(n, alpha)| {
            let stats = lattice_stats(n)?;
            let sup_error = round_alpha(&config.function, n, alpha)?.sup_error(config.grid)?;
            let envelope = (n as f64).powf(alpha - 1.0);
            Ok(LatticeRow {
                n,
                alpha,
                log2_m: stats.log2_m,
                mu_n: stats.mu,
                sup_error,
                envelope,
                below_envelope: sup_error < envelope,
            })
        })
        .collect::<Result<Vec<LatticeRow>>>()?;
    let slopes = config
        .alphas
        .iter()
        .map(|&a| {
            let (ns, es): (Vec<usize>, Vec<f64>) =
                rows.iter().filter(|r| r.alpha == a).map(|r| (r.n, r.sup_error)).unzip();
            (a, rate_fit(&ns, &es).ok().map(|f| f.slope))
        })
        .collect();
    let outcome = LatticeOutcome { rows, slopes };
    if let Some(out) = &config.out {
        let mut w = csv_writer(&with_suffix(out, ".csv"), config)?;
        w.write_record(["n", "alpha", "log2_m", "mu_n", "sup_error", "envelope", "below_envelope"])?;
        for r in &outcome.rows {
            w.write_record([
                r.n.to_string(),
                fmt_f64(r.alpha),
                fmt_f64(r.log2_m),
                fmt_f64(r.mu_n),
                fmt_f64(r.sup_error),
                fmt_f64(r.envelope),
                r.below_envelope.to_string(),
            ])?;
        }
        w.flush()?;
        write_json(&with_suffix(out, ".json"), "lattice", config, &outcome)?;
    }
    Ok(outcome)
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentRow {
    pub n: usize,
    pub x: f64,
    /// `sum_k (k - nx) p_{n,k}(x)`
    pub t1: f64,
    /// `sum_k (k - nx)^2 p_{n,k}(x)`
    pub t2: f64,
    /// `n x (1 - x)`
    pub n_var: f64,
    /// `V_{n,r}(x)`
    pub variation: f64,
    /// `sum_k |k - nx|^s |(~D^r p)_k|`
    pub abs_moment: f64,
}

/// Moments and variations on the grid for every degree; writes `<out>.csv`.
pub fn cmd_moments(config: &ExperimentConfig) -> Result<Vec<MomentRow>> {
    let r = config.quantizer.order;
    let s = config.moment_s;
    let jobs: Vec<(usize, f64)> = config
        .degrees
        .iter()
        .flat_map(|&n| (0..config.grid).map(move |i| (n, i as f64 / (config.grid - 1) as f64)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(n, x)| {
            Ok(MomentRow {
                n,
                x,
                t1: moment(n, x, 1)?,
                t2: moment(n, x, 2)?,
                n_var: n as f64 * x * (1.0 - x),
                variation: basis_diff(n, x, r)?.l1_norm(),
                abs_moment: abs_moment(n, x, r, s)?,
            })
        })
        .collect::<Result<Vec<MomentRow>>>()?;
    if let Some(out) = &config.out {
        let mut w = csv_writer(&with_suffix(out, ".csv"), config)?;
        w.write_record(["n", "x", "t1", "t2", "n_var", "variation", "abs_moment"])?;
        for m in &rows {
            w.write_record([
                m.n.to_string(),
                fmt_f64(m.x),
                fmt_f64(m.t1),
                fmt_f64(m.t2),
                fmt_f64(m.n_var),
                fmt_f64(m.variation),
                fmt_f64(m.abs_moment),
            ])?;
        }
        w.flush()?;
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match f() {
        Ok((passed, detail)) => Check { name: name.into(), passed, detail },
        Err(e) => Check { name: name.into(), passed: false, detail: format!("error: {e}") },
    }
}

/// Quick internal consistency checks with seeded random inputs; writes `<out>.json`.
pub fn cmd_selftest(config: &ExperimentConfig) -> Result<SelftestReport> {
    let seed = config.seed;
    let mut checks = Vec::new();

    checks.push(check("partition of unity", || {
        let mut worst: f64 = 0.0;
        for n in [16usize, 256, 4096] {
            for i in 0..=200 {
                let s: f64 = basis_values(n, i as f64 / 200.0)?.iter().sum();
                worst = worst.max((s - 1.0).abs());
            }
        }
        Ok((worst <= 1e-12, format!("max |sum - 1| = {worst:e}")))
    }));

    checks.push(check("difference identity", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let n = rng.gen_range(1..=64usize);
            let x: f64 = rng.gen_range(0.01..0.99);
            let d = basis_diff(n, x, 1)?;
            let up = basis_values(n + 1, x)?;
            let xx = x * (1.0 - x);
            for k in 0..=n {
                let want = ((k + 1) as f64 - (n + 1) as f64 * x) / ((n + 1) as f64 * xx) * up[k + 1];
                worst = worst.max((d.values[k] - want).abs());
            }
        }
        Ok((worst <= 1e-12, format!("max deviation = {worst:e}")))
    }));

    checks.push(check("first and second moments", || {
        let mut worst: f64 = 0.0;
        for n in [16usize, 256, 4096] {
            for i in 0..=100 {
                let x = i as f64 / 100.0;
                worst = worst.max(moment(n, x, 1)?.abs());
                worst = worst.max((moment(n, x, 2)? - n as f64 * x * (1.0 - x)).abs());
            }
        }
        Ok((worst <= 1e-10, format!("max deviation = {worst:e}")))
    }));

    checks.push(check("greedy integer state bound", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let mut worst: f64 = 0.0;
        for r in 1..=6 {
            let y: Vec<f64> = (0..10_000).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let res = quantize(&y, &QuantizerConfig::greedy(r, Alphabet::Integers))?;
            worst = worst.max(res.u_max);
        }
        Ok((worst <= 0.5 + 1e-12, format!("max u = {worst}")))
    }));

    checks.push(check("greedy one-bit first-order state bound", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
        let y: Vec<f64> = (0..10_000).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let res = quantize(&y, &QuantizerConfig::greedy(1, Alphabet::PlusMinusOne))?;
        Ok((res.u_max <= 1.0 + 1e-12, format!("max u = {}", res.u_max)))
    }));

    checks.push(check("certified one-bit filter", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));
        let mu = 0.8;
        let filter = SparseFeedbackRule::certified(4, mu)?;
        let y: Vec<f64> = (0..10_000).map(|_| rng.gen_range(-mu..=mu)).collect();
        let res = quantize(&y, &QuantizerConfig::stable_one_bit(4, mu))?;
        let resid = verify_difference_equation(&y, &res)?;
        let ok = res.u_max <= filter.state_bound() && resid < 1e-6 * filter.state_bound();
        Ok((ok, format!("max u = {} (bound {}), residual {resid:e}", res.u_max, filter.state_bound())))
    }));

    checks.push(check("iterated operator weights", || {
        let mut ok = true;
        for r in 2..=8 {
            let p = pr_coeffs(r)?;
            ok &= p.c_r <= (1u64 << (r - 1)) + r as u64 - 2;
        }
        Ok((ok, "C_r <= 2^(r-1) + r - 2 for r = 2..8".into()))
    }));

    checks.push(check("lattice rounding envelope", || {
        let f = FunctionSpec::from_registry("bump", &[1.0])?;
        let e = round_alpha(&f, 64, 0.5)?.sup_error(501)?;
        Ok((e < 1.0 / 8.0, format!("sup error {e} vs 0.125")))
    }));

    let report = SelftestReport { seed, checks };
    if let Some(out) = &config.out {
        write_json(&with_suffix(out, ".json"), "selftest", config, &report)?;
    }
    Ok(report)
}

/// Polynomial `B_n` of the stage-one coefficients, for callers that only need stage one.
pub fn stage_poly(config: &ExperimentConfig, n: usize) -> Result<BernsteinPoly> {
    Ok(config.stage.coeffs(&config.function, n)?.to_bernstein())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_labels_round_trip() {
        for s in ["bernstein", "kantorovich", "iteru:3", "proxy:inf", "proxy:2"] {
            assert_eq!(Stage::parse(s).unwrap().label(), s);
        }
        assert_eq!(Stage::parse("proxy:∞").unwrap(), Stage::Proxy(Norm::Sup));
        assert!(Stage::parse("iteru:0").is_err());
        assert!(Stage::parse("chebyshev").is_err());
    }

    #[test]
    fn config_round_trip() {
        let text = "# sweep\nfn = \"sin\"\nparams = [0.8, 1]\nn = [64, 128]\norder = 2\nrule = \"stable\"\nmu = 0.9\n";
        let m = parse_config_text(text).unwrap();
        let c = ExperimentConfig::from_values(&m).unwrap();
        assert_eq!(c.degrees, vec![64, 128]);
        assert_eq!(c.quantizer.rule, RuleKind::StableOneBit);
        let back = ExperimentConfig::from_values(&c.to_values()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cfg.txt");
        fs::write(&p, "fn = \"const\"\nparams = [0.3]\nn = [8]\n").unwrap();
        let c = load_config(Some(&p), &[("n", "16".into()), ("alphabet", "int".into())]).unwrap();
        assert_eq!(c.degrees, vec![16]);
        assert_eq!(c.quantizer.alphabet, Alphabet::Integers);
        assert_eq!(c.function.id(), "const");
    }

    #[test]
    fn quantize_constant_by_hand() {
        let c = load_config(None, &[("fn", "const".into()), ("params", "0.3".into()), ("n", "8".into())]).unwrap();
        let o = cmd_quantize(&c).unwrap();
        let q = o.quantization.unwrap();
        assert_eq!(q.q, vec![1.0, -1.0, 1.0, 1.0, -1.0, 1.0, 1.0, -1.0, 1.0]);
        assert!((q.u_max - 0.9).abs() < 1e-12);
        // sum_k (0.3 - q_k) C(8,k) / 256
        let e = stage_poly(&c, 8).unwrap().eval(0.5).unwrap() - q.to_poly().unwrap().eval(0.5).unwrap();
        assert!((e + 0.028125).abs() < 1e-14);
        assert!(o.variation_bound.unwrap().holds);
    }

    #[test]
    fn one_bit_refuses_large_input() {
        let c = load_config(None, &[("fn", "const".into()), ("params", "1.2".into()), ("n", "8".into())]).unwrap();
        assert_eq!(cmd_quantize(&c).unwrap_err().exit_code(), 2);
        let c = load_config(
            None,
            &[("fn", "const".into()), ("params", "1.2".into()), ("n", "8".into()), ("alphabet", "int".into())],
        )
        .unwrap();
        assert!(cmd_quantize(&c).is_ok());
    }

    #[test]
    fn config_errors() {
        let bad = |pairs: &[(&str, &str)]| {
            let flags: Vec<(&str, String)> = pairs.iter().map(|(k, v)| (*k, v.to_string())).collect();
            load_config(None, &flags).unwrap_err().exit_code()
        };
        assert_eq!(bad(&[("n", "32,16")]), 4);
        assert_eq!(bad(&[("interval", "0,0.5")]), 4);
        assert_eq!(bad(&[("fn", "nope")]), 4);
        assert_eq!(bad(&[("alphabet", "ternary")]), 4);
        assert_eq!(bad(&[("order", "x")]), 4);
        assert!(parse_config_text("nokey\n").is_err());
        assert!(parse_config_text("colour = \"red\"\n").map(|m| ExperimentConfig::from_values(&m)).unwrap().is_err());
    }
}
