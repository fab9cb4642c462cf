mod config;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;
use zeronoise::checks::{selftest, verify};
use zeronoise::experiments::{sweep, sweep_csv_row, ExperimentOptions, SweepRow, SWEEP_CSV_HEADER};
use zeronoise::sde::simulate_path_with;
use zeronoise::sde::PathOptions;
use zeronoise::{run_experiment, SimConfig};

use crate::config::{parse_config, Partial};

#[derive(Parser, Debug)]
#[command(name = "zeronoise", version, about = "Zero-noise selection for dX = sgn(X)|X|^gamma dt + eps dW")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the explicit selection constants.
    Params(Common),
    /// Run one Monte Carlo experiment and write its report.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Write the first N paths as per-path CSV files.
        #[arg(long, value_name = "N", default_value_t = 0)]
        dump_paths: usize,
        /// Directory for --dump-paths output.
        #[arg(long, value_name = "DIR", default_value = ".")]
        dump_dir: PathBuf,
        /// Write the |X_t| quantile profile (plot-ready CSV).
        #[arg(long, value_name = "PATH")]
        profile: Option<PathBuf>,
    },
    /// Run the gamma = 0 quantitative suite and the gamma > 0 property suite.
    Verify(Common),
    /// Run one experiment per epsilon and emit a table.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Strictly decreasing list of noise levels.
        #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.1, 0.05, 0.02])]
        epsilons: Vec<f64>,
    },
    /// Deterministic oracle checks only (no Monte Carlo).
    Selftest {
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Deviation exponent: the threshold is epsilon^a.
    #[arg(long)]
    a: Option<f64>,
    /// Time horizon.
    #[arg(long = "T", value_name = "T")]
    horizon_t: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    paths: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// key = value file or a JSON report; flags take precedence.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Pair path 2k+1 with path 2k by flipping every Brownian increment.
    #[arg(long)]
    antithetic: bool,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Record wall-clock figures in the report (makes it non-reproducible).
    #[arg(long)]
    timing: bool,
}

enum Failure {
    Usage(String),
    Assertion(String),
    Runtime(String),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<zeronoise::Error> for Failure {
    fn from(e: zeronoise::Error) -> Self {
        use zeronoise::Error as E;
        match e {
            E::InvalidConfig(_) | E::GammaOutOfRange(_) | E::ExponentOutOfRange { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CliResult = Result<(), Failure>;

impl Common {
    fn resolve(&self) -> Result<(SimConfig, bool), Failure> {
        let file = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
                parse_config(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
            }
            None => Partial::default(),
        };
        let flags = Partial {
            gamma: self.gamma,
            epsilon: self.epsilon,
            a: self.a,
            horizon_t: self.horizon_t,
            dt: self.dt,
            paths: self.paths,
            seed: self.seed,
            antithetic: self.antithetic.then_some(true),
        };
        let merged = file.overlay(flags);
        let cfg = merged.resolve().map_err(Failure::Usage)?;
        Ok((cfg, merged.antithetic.unwrap_or(false)))
    }

    fn options(&self, antithetic: bool) -> ExperimentOptions {
        ExperimentOptions { antithetic, timing: self.timing, ..Default::default() }
    }
}

fn write_output(out: Option<&Path>, body: &str) -> io::Result<()> {
    match out {
        Some(p) => fs::write(p, body),
        None => {
            let mut s = io::stdout().lock();
            s.write_all(body.as_bytes())?;
            s.flush()
        }
    }
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Failure::Usage("--workers must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| Failure::Runtime(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn flat_csv(v: &Value) -> String {
    let obj = v.as_object().expect("object");
    let cell = |v: &Value| match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(a) => a.iter().map(|x| x.as_str().map_or(x.to_string(), str::to_string)).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    };
    let header: Vec<&str> = obj.keys().map(String::as_str).collect();
    let row: Vec<String> = obj.values().map(|v| format!("\"{}\"", cell(v).replace('"', "'"))).collect();
    format!("{}\n{}\n", header.join(","), row.join(","))
}

fn cmd_params(c: &Common) -> CliResult {
    let (cfg, _) = c.resolve()?;
    let p = zeronoise::params_for(cfg.gamma, cfg.epsilon, cfg.a_exponent, cfg.horizon_t)?;
    let body = match c.format {
        None => p.to_text(),
        Some(Format::Json) => serde_json::to_string_pretty(&p).expect("serializable") + "\n",
        Some(Format::Csv) => flat_csv(&serde_json::to_value(&p).expect("serializable")),
    };
    for d in &p.discrepancies {
        eprintln!("note: {d}");
    }
    write_output(c.out.as_deref(), &body)?;
    Ok(())
}

fn cmd_simulate(c: &Common, dump_paths: usize, dump_dir: &Path, profile: Option<&Path>) -> CliResult {
    let (cfg, antithetic) = c.resolve()?;
    cfg.validate()?;
    let opts = c.options(antithetic);
    let start = Instant::now();
    let report = with_workers(c.workers, || run_experiment(&cfg, &opts))??;
    let wall = start.elapsed().as_secs_f64();
    eprintln!(
        "{} paths x {} steps in {wall:.2}s ({:.3e} steps/s)",
        cfg.n_paths,
        cfg.grid().n_steps,
        cfg.n_paths as f64 * cfg.grid().n_steps as f64 / wall.max(1e-12)
    );
    for w in &report.step_size_warnings {
        eprintln!("warning: {w}");
    }
    if !report.params.informative() {
        eprintln!("note: explicit constants are vacuous for this configuration (t_bar={}, alpha={})", report.params.t_bar, report.params.alpha);
    }

    let body = match c.format.unwrap_or(Format::Json) {
        Format::Json => report.to_json() + "\n",
        Format::Csv => {
            let row = SweepRow { epsilon: cfg.epsilon, dt: cfg.dt, report: Ok(report.clone()) };
            format!("{SWEEP_CSV_HEADER}\n{}\n", sweep_csv_row(&cfg, &row))
        }
    };
    write_output(c.out.as_deref(), &body)?;

    if let Some(p) = profile {
        report.write_profile_csv(BufWriter::new(File::create(p)?))?;
    }
    if dump_paths > 0 {
        fs::create_dir_all(dump_dir)?;
        let delta = report.params.delta;
        for i in 0..(dump_paths as u64).min(cfg.n_paths) {
            let (key, sign) = if antithetic && i % 2 == 1 { (i - 1, -1.0) } else { (i, 1.0) };
            let mut path = simulate_path_with(&cfg, delta, key, PathOptions { increment_sign: sign, ..Default::default() })?;
            path.path_index = i;
            path.write_csv(BufWriter::new(File::create(dump_dir.join(format!("path_{i:05}.csv")))?))?;
        }
    }
    Ok(())
}

fn cmd_verify(c: &Common) -> CliResult {
    let (cfg, antithetic) = c.resolve()?;
    cfg.validate()?;
    let opts = c.options(antithetic);
    let report = with_workers(c.workers, || verify(&cfg, &opts))??;
    if c.format == Some(Format::Csv) {
        return Err(Failure::Usage("verify writes JSON only".into()));
    }
    write_output(c.out.as_deref(), &(report.to_json() + "\n"))?;
    let failures = report.failures();
    for f in &failures {
        eprintln!("FAILED {f}");
    }
    if failures.is_empty() {
        eprintln!("verify: all assertions passed");
        Ok(())
    } else {
        Err(Failure::Assertion(format!("{} assertion(s) failed", failures.len())))
    }
}

fn cmd_sweep(c: &Common, epsilons: &[f64]) -> CliResult {
    let (cfg, antithetic) = c.resolve()?;
    // ε itself comes from the list; validate the rest with the first entry
    let first = *epsilons.first().ok_or_else(|| Failure::Usage("--epsilons is empty".into()))?;
    SimConfig { epsilon: first, ..cfg }.validate()?;
    let opts = c.options(antithetic);
    let rows = with_workers(c.workers, || sweep(&cfg, epsilons, &opts))??;
    for r in &rows {
        if let Err(e) = &r.report {
            eprintln!("epsilon={}: {e}", r.epsilon);
        }
    }
    let body = match c.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = format!("{SWEEP_CSV_HEADER}\n");
            for r in &rows {
                s.push_str(&sweep_csv_row(&cfg, r));
                s.push('\n');
            }
            s
        }
        Format::Json => serde_json::to_string_pretty(&rows).expect("serializable") + "\n",
    };
    write_output(c.out.as_deref(), &body)?;
    if rows.iter().any(|r| r.report.is_err()) {
        return Err(Failure::Runtime("some sweep rows failed".into()));
    }
    Ok(())
}

fn cmd_selftest(out: Option<&Path>, format: Option<Format>) -> CliResult {
    let r = selftest();
    let body = match format {
        Some(Format::Json) => serde_json::to_string_pretty(&r).expect("serializable") + "\n",
        Some(Format::Csv) => {
            let mut s = String::from("name,passed,value,limit\n");
            for a in &r.assertions {
                s.push_str(&format!("{},{},{},{}\n", a.name, a.passed, a.value, a.limit));
            }
            s
        }
        None => r
            .assertions
            .iter()
            .map(|a| format!("{} {} value={} limit={}\n", if a.passed { "PASS" } else { "FAIL" }, a.name, a.value, a.limit))
            .collect(),
    };
    write_output(out, &body)?;
    if r.passed {
        Ok(())
    } else {
        Err(Failure::Assertion("selftest failed".into()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Params(c) => cmd_params(c),
        Command::Simulate { common, dump_paths, dump_dir, profile } => {
            cmd_simulate(common, *dump_paths, dump_dir, profile.as_deref())
        }
        Command::Verify(c) => cmd_verify(c),
        Command::Sweep { common, epsilons } => cmd_sweep(common, epsilons),
        Command::Selftest { out, format } => cmd_selftest(out.as_deref(), *format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Assertion(m)) | Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
