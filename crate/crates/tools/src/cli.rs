//! Command-line interface. Exit codes: 0 success, 2 invalid input,
//! 3 numerical failure, 4 failed Monte Carlo check.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mfvasicek_core::asymptotics::{fisher_info, fisher_info_inverse, laws, v_h, JOINT_DEFERRED_NOTE};
use mfvasicek_core::estimators::{fit, FitOptions, GammaSpec, Mode};
use mfvasicek_core::kernel::{kernel_filter, kernel_wiener_hopf};
use mfvasicek_core::model::{make_uniform_grid, HurstSide, ModelParams};
use mfvasicek_core::simulate::{sample_mfbm_seeded, simulate_vasicek};
use mfvasicek_core::{build_increment_factor, Error};

use crate::io::{opt, read_path_csv, save_json, to_sorted_json, CsvTable, IoError, Provenance};
use crate::montecarlo::{run_study, StudyConfig, StudyError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "mfvasicek",
    version,
    about = "Mixed fractional Vasicek simulation and drift estimation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one path on a uniform grid.
    Simulate(SimulateArgs),
    /// Estimate the drift parameters from a `t,x` CSV.
    Estimate(EstimateArgs),
    /// Dump the martingale kernel and its bracket.
    Kernel(KernelArgs),
    /// Run a Monte Carlo study from a JSON config.
    McStudy(McStudyArgs),
    /// Print the limiting laws that apply at given parameters.
    Asymptotics(AsymptoticsArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long)]
    pub hurst: f64,
    #[arg(long)]
    pub t_max: f64,
    #[arg(long)]
    pub steps: usize,
    #[arg(long)]
    pub seed: u64,
    /// Also write the driving noise as column `xi`.
    #[arg(long)]
    pub with_xi: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("scale").required(true).args(["gamma", "estimate_gamma"]))]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub hurst: f64,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Estimate gamma from the realized quadratic variation of Z.
    #[arg(long)]
    pub estimate_gamma: bool,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "known_beta")]
    pub known_alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub known_beta: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Filter,
    WienerHopf,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long)]
    pub hurst: f64,
    #[arg(long)]
    pub t_max: f64,
    #[arg(long)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Filter)]
    pub method: MethodArg,
    /// Writes `<prefix>_weights.csv` and `<prefix>_bracket.csv`.
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Debug, Args)]
pub struct McStudyArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Worker threads; does not change the results.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Report failed checks without a nonzero exit.
    #[arg(long)]
    pub no_fail_on_check: bool,
}

#[derive(Debug, Args)]
pub struct AsymptoticsArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: f64,
    #[arg(long)]
    pub hurst: f64,
    /// Also write the document to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if e.is_validation() {
            EXIT_VALIDATION
        } else {
            EXIT_NUMERICAL
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        Self {
            code: EXIT_VALIDATION,
            message: e.to_string(),
        }
    }
}

impl From<StudyError> for CliError {
    fn from(e: StudyError) -> Self {
        match e {
            StudyError::Model(e) => e.into(),
            StudyError::Config(_) => Self {
                code: EXIT_VALIDATION,
                message: e.to_string(),
            },
            StudyError::TooManyFailures { .. } => Self {
                code: EXIT_NUMERICAL,
                message: e.to_string(),
            },
        }
    }
}

fn flag(name: &str, v: impl ToString) -> (String, String) {
    (name.to_string(), v.to_string())
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let p = ModelParams::new(a.alpha, a.beta, a.gamma, a.hurst)?;
    let grid = make_uniform_grid(a.t_max, a.steps)?;
    let factor = build_increment_factor(a.hurst, &grid)?;
    let xi = sample_mfbm_seeded(&factor, a.seed);
    let x = simulate_vasicek(&p, &xi)?;
    let prov = Provenance::new(
        "simulate",
        vec![
            flag("alpha", a.alpha),
            flag("beta", a.beta),
            flag("gamma", a.gamma),
            flag("hurst", a.hurst),
            flag("t-max", a.t_max),
            flag("steps", a.steps),
            flag("seed", a.seed),
            flag("with-xi", a.with_xi),
            flag("out", path_str(&a.out)),
        ],
    );
    let header: &[&str] = if a.with_xi { &["t", "x", "xi"] } else { &["t", "x"] };
    let mut csv = CsvTable::new(&prov, header);
    for (i, t) in grid.points().iter().enumerate() {
        if a.with_xi {
            csv.row([*t, x.values()[i], xi.values()[i]]);
        } else {
            csv.row([*t, x.values()[i]]);
        }
    }
    csv.save(&a.out)?;
    Ok(())
}

pub fn estimate(a: &EstimateArgs) -> Result<(), CliError> {
    let x = read_path_csv(&a.input)?;
    let gamma = match (a.gamma, a.estimate_gamma) {
        (Some(g), _) => GammaSpec::Known(g),
        _ => GammaSpec::Estimate,
    };
    let mode = match (a.known_alpha, a.known_beta) {
        (Some(alpha), _) => Mode::BetaOnly { alpha },
        (None, Some(beta)) => Mode::AlphaOnly { beta },
        (None, None) => Mode::Joint,
    };
    let report = fit(
        &x,
        &FitOptions {
            hurst: a.hurst,
            gamma,
            mode,
        },
    )?;
    let mut flags = vec![flag("input", path_str(&a.input)), flag("hurst", a.hurst)];
    match gamma {
        GammaSpec::Known(g) => flags.push(flag("gamma", g)),
        GammaSpec::Estimate => flags.push(flag("estimate-gamma", true)),
    }
    if let Some(v) = a.known_alpha {
        flags.push(flag("known-alpha", v));
    }
    if let Some(v) = a.known_beta {
        flags.push(flag("known-beta", v));
    }
    flags.push(flag("out", path_str(&a.out)));
    save_json(&a.out, &Provenance::new("estimate", flags), &report)?;
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn kernel(a: &KernelArgs) -> Result<(), CliError> {
    let prov = Provenance::new(
        "kernel",
        vec![
            flag("hurst", a.hurst),
            flag("t-max", a.t_max),
            flag("steps", a.steps),
            flag(
                "method",
                if a.method == MethodArg::Filter {
                    "filter"
                } else {
                    "wiener-hopf"
                },
            ),
            flag("out-prefix", path_str(&a.out_prefix)),
        ],
    );
    let grid = make_uniform_grid(a.t_max, a.steps)?;
    let t = grid.points();
    let mid = |i: usize| 0.5 * (t[i - 1] + t[i]);
    let mut weights = CsvTable::new(&prov, &["n", "i", "s_i", "t_n", "g"]);
    let mut bracket = CsvTable::new(&prov, &["t", "bracket"]);
    match a.method {
        MethodArg::Filter => {
            let factor = build_increment_factor(a.hurst, &grid)?;
            let k = kernel_filter(a.hurst, &grid, &factor)?;
            for (n, tn) in t.iter().enumerate().skip(1) {
                for (j, g) in k.row(n).iter().enumerate() {
                    weights.row([
                        n.to_string(),
                        (j + 1).to_string(),
                        mid(j + 1).to_string(),
                        tn.to_string(),
                        g.to_string(),
                    ]);
                }
            }
            for (ti, b) in t.iter().zip(k.bracket()) {
                bracket.row([ti, b]);
            }
        }
        MethodArg::WienerHopf => {
            let row = kernel_wiener_hopf(a.hurst, a.t_max, a.steps)?;
            let n = a.steps;
            for (j, g) in row.weights().iter().enumerate() {
                weights.row([
                    n.to_string(),
                    (j + 1).to_string(),
                    mid(j + 1).to_string(),
                    t[n].to_string(),
                    g.to_string(),
                ]);
            }
            bracket.row([0.0, 0.0]);
            bracket.row([a.t_max, row.bracket_end()]);
        }
    }
    weights.save(&with_suffix(&a.out_prefix, "_weights.csv"))?;
    bracket.save(&with_suffix(&a.out_prefix, "_bracket.csv"))?;
    Ok(())
}

/// Runs the study; `Ok(false)` when a check failed.
pub fn mc_study(a: &McStudyArgs) -> Result<bool, CliError> {
    let name = path_str(&a.config);
    let text = fs::read_to_string(&a.config).map_err(|source| IoError::Io {
        path: name.clone(),
        source,
    })?;
    let cfg: StudyConfig = serde_json::from_str(&text).map_err(|e| IoError::Parse {
        path: name,
        line: Some(e.line() as u64),
        message: e.to_string(),
    })?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.workers.max(1))
        .build()
        .map_err(|e| CliError {
            code: EXIT_NUMERICAL,
            message: e.to_string(),
        })?;
    let result = pool.install(|| run_study(&cfg))?;
    fs::create_dir_all(&a.out_dir).map_err(|source| IoError::Io {
        path: path_str(&a.out_dir),
        source,
    })?;
    let prov = Provenance::new(
        "mc-study",
        vec![
            flag("config", path_str(&a.config)),
            flag("out-dir", path_str(&a.out_dir)),
            flag("no-fail-on-check", a.no_fail_on_check),
        ],
    );
    let mut csv = CsvTable::new(
        &prov,
        &[
            "rep",
            "T",
            "regime",
            "alpha_hat",
            "beta_hat",
            "scaled_err_alpha",
            "scaled_err_beta",
            "status",
        ],
    );
    for r in &result.records {
        csv.row([
            r.rep.to_string(),
            r.t_max.to_string(),
            r.regime.as_str().to_string(),
            opt(r.alpha_hat),
            opt(r.beta_hat),
            opt(r.scaled_err_alpha),
            opt(r.scaled_err_beta),
            r.status.replace(',', ";"),
        ]);
    }
    csv.save(&a.out_dir.join("replications.csv"))?;
    save_json(&a.out_dir.join("summary.json"), &prov, &result)?;
    for c in result.checks.iter().filter(|c| !c.passed) {
        log::warn!(
            "check failed: {:?} {} T={:?} {:?}: {} not in [{}, {}]",
            c.check,
            c.regime.as_str(),
            c.t_max,
            c.coordinate,
            c.statistic,
            c.lower,
            c.upper
        );
    }
    Ok(result.all_passed)
}

pub fn asymptotics_document(a: &AsymptoticsArgs) -> Result<serde_json::Value, CliError> {
    let p = ModelParams::new(a.alpha, a.beta, 1.0, a.hurst)?;
    let mut doc = serde_json::json!({
        "params": { "alpha": a.alpha, "beta": a.beta, "hurst": a.hurst },
        "side": p.side().as_str(),
        "laws": laws(&p),
        "v_h_at_half": v_h(0.5),
    });
    let map = doc.as_object_mut().expect("object literal");
    match p.side() {
        HurstSide::Super => {
            map.insert("v_h".into(), v_h(a.hurst).into());
            map.insert("joint_note".into(), JOINT_DEFERRED_NOTE.into());
        }
        HurstSide::Sub => {
            map.insert(
                "fisher_info".into(),
                serde_json::to_value(fisher_info(a.alpha, a.beta)?).expect("matrix"),
            );
            map.insert(
                "fisher_info_inverse".into(),
                serde_json::to_value(fisher_info_inverse(a.alpha, a.beta)?).expect("matrix"),
            );
        }
    }
    let prov = Provenance::new(
        "asymptotics",
        vec![flag("alpha", a.alpha), flag("beta", a.beta), flag("hurst", a.hurst)],
    );
    map.insert("provenance".into(), prov.to_json());
    Ok(doc)
}

pub fn asymptotics(a: &AsymptoticsArgs) -> Result<(), CliError> {
    let text = to_sorted_json(&asymptotics_document(a)?)?;
    print!("{text}");
    if let Some(out) = &a.out {
        fs::write(out, &text).map_err(|source| IoError::Io {
            path: path_str(out),
            source,
        })?;
    }
    Ok(())
}

/// Runs one command and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let outcome = match &cli.command {
        Command::Simulate(a) => simulate(a).map(|_| true),
        Command::Estimate(a) => estimate(a).map(|_| true),
        Command::Kernel(a) => kernel(a).map(|_| true),
        Command::McStudy(a) => mc_study(a).map(|ok| ok || a.no_fail_on_check),
        Command::Asymptotics(a) => asymptotics(a).map(|_| true),
    };
    match outcome {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            eprintln!("error: one or more Monte Carlo checks failed");
            EXIT_CHECK
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
