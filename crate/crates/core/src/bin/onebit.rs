use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use onebit_bernstein::analysis::fmt_f64;
use onebit_bernstein::approx::Norm;
use onebit_bernstein::experiment::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "onebit", version, about = "Integer and one-bit Bernstein approximation experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Stage one plus quantization at a single degree
    Quantize(Flags),
    /// Error table and fitted slopes over a degree sweep
    Rates(Flags),
    /// Lattice rounding errors and lattice sizes
    Lattice(Flags),
    /// Central moments and basis-difference variations on the grid
    Moments(Flags),
    /// Internal consistency checks
    Selftest(Flags),
}

#[derive(Args)]
struct Flags {
    /// Config file with `key = <json>` lines; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Registry function: const, poly, abs, sin, exp, bump
    #[arg(long = "fn")]
    function: Option<String>,
    /// Comma-separated function parameters
    #[arg(long, allow_hyphen_values = true)]
    params: Option<String>,
    /// Degree or comma-separated strictly increasing degrees
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    order: Option<String>,
    /// int or pm1
    #[arg(long)]
    alphabet: Option<String>,
    /// greedy or stable
    #[arg(long)]
    rule: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    /// bernstein, kantorovich, iteru:R or proxy:P
    #[arg(long)]
    stage: Option<String>,
    /// a,b for the interior sup norm
    #[arg(long)]
    interval: Option<String>,
    #[arg(long)]
    grid: Option<String>,
    /// Comma-separated lattice exponents
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long = "u-cap")]
    u_cap: Option<String>,
    #[arg(long = "moment-s")]
    moment_s: Option<String>,
    /// Measure the stage-one polynomial without quantizing
    #[arg(long = "no-quantize")]
    no_quantize: bool,
    /// Output path prefix
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

impl Flags {
    fn load(&self) -> onebit_bernstein::Result<ExperimentConfig> {
        let mut pairs: Vec<(&str, String)> = Vec::new();
        let mut put = |k: &'static str, v: &Option<String>| {
            if let Some(v) = v {
                pairs.push((k, v.clone()));
            }
        };
        put("fn", &self.function);
        put("params", &self.params);
        put("n", &self.n);
        put("order", &self.order);
        put("alphabet", &self.alphabet);
        put("rule", &self.rule);
        put("mu", &self.mu);
        put("stage", &self.stage);
        put("interval", &self.interval);
        put("grid", &self.grid);
        put("alpha", &self.alpha);
        put("u_cap", &self.u_cap);
        put("moment_s", &self.moment_s);
        put("out", &self.out);
        put("seed", &self.seed);
        if self.no_quantize {
            pairs.push(("quantize", "false".into()));
        }
        experiment::load_config(self.config.as_deref(), &pairs)
    }
}

fn run(cmd: &Cmd) -> onebit_bernstein::Result<bool> {
    match cmd {
        Cmd::Quantize(f) => {
            let c = f.load()?;
            let o = experiment::cmd_quantize(&c)?;
            println!("n = {}  stage = {}  max|y| = {}", o.n, o.stage, fmt_f64(o.stage_max_abs));
            if let Some(q) = &o.quantization {
                println!("u_max = {}  rule = {}", fmt_f64(q.u_max), q.rule);
            }
            if let Some(b) = &o.variation_bound {
                println!("variation bound holds = {}  (worst excess {})", b.holds, fmt_f64(b.worst_excess));
            }
            let r = &o.report;
            println!(
                "sup[{}, {}] = {}  L1 = {}  L2 = {}  sup = {}",
                r.interval.0,
                r.interval.1,
                fmt_f64(r.sup_on_interval),
                fmt_f64(r.norm(Norm::Lp(1.0)).unwrap_or(f64::NAN)),
                fmt_f64(r.norm(Norm::Lp(2.0)).unwrap_or(f64::NAN)),
                fmt_f64(r.norm(Norm::Sup).unwrap_or(f64::NAN)),
            );
            Ok(true)
        }
        Cmd::Rates(f) => {
            let c = f.load()?;
            let o = experiment::cmd_rates(&c)?;
            println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "n", "sup_interval", "l1", "l2", "u_max");
            for r in &o.rows {
                println!(
                    "{:>6} {:>12.4e} {:>12.4e} {:>12.4e} {:>12}",
                    r.n,
                    r.sup_interval,
                    r.l1,
                    r.l2,
                    r.u_max.map(|u| format!("{u:.4}")).unwrap_or_else(|| "-".into())
                );
            }
            for col in ["sup_interval", "l1", "l2", "sup"] {
                match o.fits.get(col).copied().flatten() {
                    Some(fit) => println!("slope {col} = {:.4}  (r^2 = {:.4})", fit.slope, fit.r_squared),
                    None => println!("slope {col} = -"),
                }
            }
            Ok(true)
        }
        Cmd::Lattice(f) => {
            let c = f.load()?;
            let o = experiment::cmd_lattice(&c)?;
            println!("{:>6} {:>6} {:>10} {:>12} {:>12}", "n", "alpha", "mu_n", "sup_error", "n^(a-1)");
            for r in &o.rows {
                println!("{:>6} {:>6} {:>10.4} {:>12.4e} {:>12.4e}", r.n, r.alpha, r.mu_n, r.sup_error, r.envelope);
            }
            for (a, s) in &o.slopes {
                if let Some(s) = s {
                    println!("alpha = {a}: slope {s:.4}");
                }
            }
            Ok(true)
        }
        Cmd::Moments(f) => {
            let c = f.load()?;
            let rows = experiment::cmd_moments(&c)?;
            for n in &c.degrees {
                let worst_t1 = rows.iter().filter(|r| r.n == *n).fold(0.0f64, |m, r| m.max(r.t1.abs()));
                let worst_t2 =
                    rows.iter().filter(|r| r.n == *n).fold(0.0f64, |m, r| m.max((r.t2 - r.n_var).abs()));
                let vmax = rows.iter().filter(|r| r.n == *n).fold(0.0f64, |m, r| m.max(r.variation));
                println!("n = {n}: max|T1| = {worst_t1:.3e}  max|T2 - nX| = {worst_t2:.3e}  max V = {vmax:.4}");
            }
            Ok(true)
        }
        Cmd::Selftest(f) => {
            let c = f.load()?;
            let report = experiment::cmd_selftest(&c)?;
            for ch in &report.checks {
                println!("[{}] {}: {}", if ch.passed { "PASS" } else { "FAIL" }, ch.name, ch.detail);
            }
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
