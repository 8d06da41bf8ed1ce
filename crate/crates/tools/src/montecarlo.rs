//! Replication harness: simulate, estimate, aggregate and check the
//! estimators' limit laws at finite horizon.
//!
//! Replication `r` at horizon index `h` draws from stream
//! `(h << 32) | r` of the root seed, so results do not depend on the
//! number of worker threads.

use std::fmt;

use mfvasicek_core::asymptotics::{joint_covariance, marginal_law, Coordinate, Regime};
use mfvasicek_core::estimators::{fit_observation, Mode};
use mfvasicek_core::kernel::{bracket_rate, kernel_filter, KernelField};
use mfvasicek_core::model::{make_uniform_grid, validate_params, HurstSide, ModelParams};
use mfvasicek_core::rng::stream_rng;
use mfvasicek_core::simulate::{sample_mfbm, simulate_vasicek};
use mfvasicek_core::transform::transform;
use mfvasicek_core::{build_increment_factor, Error, IncrementFactor};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest tolerated share of failed replications per horizon.
pub const MAX_FAILURE_RATE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Variance,
    Covariance,
    Normality,
    Mean,
    Consistency,
}

fn default_slack() -> f64 {
    1.6
}

fn default_z() -> f64 {
    3.0
}

fn default_checks() -> Vec<CheckKind> {
    vec![CheckKind::Variance, CheckKind::Normality, CheckKind::Mean]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub params: ModelParams,
    /// Increasing horizons `T`.
    pub horizons: Vec<f64>,
    /// Grid cells for each horizon.
    pub steps: Vec<usize>,
    pub replications: usize,
    pub root_seed: u64,
    pub regimes: Vec<Regime>,
    #[serde(default = "default_checks")]
    pub checks: Vec<CheckKind>,
    /// Widening factor applied to every statistical band.
    #[serde(default = "default_slack")]
    pub slack: f64,
    /// Normal quantile of the variance bands.
    #[serde(default = "default_z")]
    pub z: f64,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<(), StudyError> {
        validate_params(&self.params)?;
        let bad = |m: &str| Err(StudyError::Config(m.to_string()));
        if self.replications < 2 {
            return bad("replications must be at least 2");
        }
        if self.horizons.is_empty() || self.horizons.len() != self.steps.len() {
            return bad("horizons and steps must be non-empty and of equal length");
        }
        if !self.horizons.iter().all(|t| t.is_finite() && *t > 0.0) || self.horizons.windows(2).any(|w| w[1] <= w[0]) {
            return bad("horizons must be positive and strictly increasing");
        }
        if self.steps.contains(&0) {
            return bad("steps must be positive");
        }
        if self.regimes.is_empty() {
            return bad("at least one regime is required");
        }
        if !(self.slack >= 1.0 && self.z > 0.0) {
            return bad("slack must be >= 1 and z positive");
        }
        if self.checks.contains(&CheckKind::Consistency) && self.horizons.len() < 3 {
            return bad("the consistency check needs at least three horizons");
        }
        if self.replications as u64 > u32::MAX as u64 {
            return bad("too many replications");
        }
        Ok(())
    }

    fn mode(&self, regime: Regime) -> Mode {
        match regime {
            Regime::AlphaOnly => Mode::AlphaOnly { beta: self.params.beta },
            Regime::BetaOnly => Mode::BetaOnly {
                alpha: self.params.alpha,
            },
            Regime::Joint => Mode::Joint,
        }
    }
}

#[derive(Debug)]
pub enum StudyError {
    Config(String),
    Model(Error),
    TooManyFailures { horizon: f64, failed: usize, total: usize },
}

impl fmt::Display for StudyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "invalid study config: {m}"),
            Self::Model(e) => write!(f, "{e}"),
            Self::TooManyFailures { horizon, failed, total } => {
                write!(f, "{failed} of {total} replications failed at T = {horizon}")
            }
        }
    }
}

impl std::error::Error for StudyError {}

impl From<Error> for StudyError {
    fn from(e: Error) -> Self {
        Self::Model(e)
    }
}

/// One estimate from one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub rep: usize,
    #[serde(rename = "T")]
    pub t_max: f64,
    pub regime: Regime,
    pub alpha_hat: Option<f64>,
    pub beta_hat: Option<f64>,
    pub scaled_err_alpha: Option<f64>,
    pub scaled_err_beta: Option<f64>,
    pub status: String,
}

impl RepRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Sample moments of one scaled-error coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl Moments {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for x in xs {
            let d = x - mean;
            m2 += d * d;
            m3 += d * d * d;
            m4 += d * d * d * d;
        }
        let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
        Self {
            count: xs.len(),
            mean,
            variance: m2 * n / (n - 1.0),
            skewness: m3 / m2.powf(1.5),
            excess_kurtosis: m4 / (m2 * m2) - 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateSummary {
    pub coordinate: Coordinate,
    /// Power of `T` in the scaled error.
    pub exponent: f64,
    pub target_variance: f64,
    pub moments: Moments,
    pub median_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    #[serde(rename = "T")]
    pub t_max: f64,
    pub steps: usize,
    pub regime: Regime,
    pub succeeded: usize,
    pub failed: usize,
    pub coordinates: Vec<CoordinateSummary>,
    /// Scaled-error covariance, joint regime only.
    pub covariance: Option<[[f64; 2]; 2]>,
    pub target_covariance: Option<[[f64; 2]; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check: CheckKind,
    #[serde(rename = "T")]
    pub t_max: Option<f64>,
    pub regime: Regime,
    pub coordinate: Option<String>,
    pub statistic: f64,
    pub lower: f64,
    pub upper: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McStudyResult {
    pub config: StudyConfig,
    pub stream_scheme: String,
    pub groups: Vec<GroupSummary>,
    pub checks: Vec<CheckOutcome>,
    pub all_passed: bool,
    #[serde(skip)]
    pub records: Vec<RepRecord>,
}

pub const STREAM_SCHEME: &str = "ChaCha8 seeded from root_seed, stream (horizon_index << 32) | rep";

fn stream_id(horizon: usize, rep: usize) -> u64 {
    ((horizon as u64) << 32) | rep as u64
}

fn one_replication(
    cfg: &StudyConfig,
    factor: &IncrementFactor,
    kernel: &KernelField,
    horizon: usize,
    rep: usize,
) -> Vec<RepRecord> {
    let p = &cfg.params;
    let t_max = cfg.horizons[horizon];
    let fail = |regime, msg: String| RepRecord {
        rep,
        t_max,
        regime,
        alpha_hat: None,
        beta_hat: None,
        scaled_err_alpha: None,
        scaled_err_beta: None,
        status: format!("error: {msg}"),
    };
    let mut rng = stream_rng(cfg.root_seed, stream_id(horizon, rep));
    let xi = sample_mfbm(factor, &mut rng);
    let obs = simulate_vasicek(p, &xi).and_then(|x| transform(kernel, &x.scaled(1.0 / p.gamma)));
    let obs = match obs {
        Ok(o) => o,
        Err(e) => return cfg.regimes.iter().map(|&r| fail(r, e.to_string())).collect(),
    };
    let unit = ModelParams {
        alpha: p.alpha / p.gamma,
        gamma: 1.0,
        ..*p
    };
    cfg.regimes
        .iter()
        .map(
            |&regime| match fit_observation(&obs, p.hurst, p.gamma, false, cfg.mode(regime)) {
                Ok(r) => {
                    let scaled = |coord, est: Option<f64>, truth: f64| {
                        let law = marginal_law(p.side(), regime, coord, &unit)?;
                        Some(t_max.powf(law.exponent) * (est? - truth))
                    };
                    RepRecord {
                        rep,
                        t_max,
                        regime,
                        alpha_hat: r.alpha_hat,
                        beta_hat: r.beta_hat,
                        scaled_err_alpha: scaled(Coordinate::Alpha, r.alpha_hat.map(|a| a / p.gamma), unit.alpha),
                        scaled_err_beta: scaled(Coordinate::Beta, r.beta_hat, p.beta),
                        status: "ok".into(),
                    }
                }
                Err(e) => fail(regime, e.to_string()),
            },
        )
        .collect()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn summarize(cfg: &StudyConfig, horizon: usize, regime: Regime, records: &[RepRecord]) -> GroupSummary {
    let p = &cfg.params;
    let unit = ModelParams {
        alpha: p.alpha / p.gamma,
        gamma: 1.0,
        ..*p
    };
    let t_max = cfg.horizons[horizon];
    let ok: Vec<&RepRecord> = records.iter().filter(|r| r.regime == regime && r.is_ok()).collect();
    let failed = records.iter().filter(|r| r.regime == regime && !r.is_ok()).count();
    let mut coordinates = Vec::new();
    for coord in [Coordinate::Alpha, Coordinate::Beta] {
        let Some(law) = marginal_law(p.side(), regime, coord, &unit) else {
            continue;
        };
        let errs: Vec<f64> = ok
            .iter()
            .filter_map(|r| match coord {
                Coordinate::Alpha => r.scaled_err_alpha,
                Coordinate::Beta => r.scaled_err_beta,
            })
            .collect();
        if errs.len() < 2 {
            continue;
        }
        let scale = t_max.powf(law.exponent);
        coordinates.push(CoordinateSummary {
            coordinate: coord,
            exponent: law.exponent,
            target_variance: law.variance,
            median_abs_error: median(errs.iter().map(|e| e.abs() / scale).collect()),
            moments: Moments::of(&errs),
        });
    }
    let mut covariance = None;
    let mut target_covariance = None;
    if regime == Regime::Joint {
        let pairs: Vec<(f64, f64)> = ok
            .iter()
            .filter_map(|r| Some((r.scaled_err_alpha?, r.scaled_err_beta?)))
            .collect();
        if pairs.len() >= 2 {
            let n = pairs.len() as f64;
            let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
            let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
            let (mut saa, mut sab, mut sbb) = (0.0, 0.0, 0.0);
            for (a, b) in &pairs {
                saa += (a - ma) * (a - ma);
                sab += (a - ma) * (b - mb);
                sbb += (b - mb) * (b - mb);
            }
            let d = n - 1.0;
            covariance = Some([[saa / d, sab / d], [sab / d, sbb / d]]);
        }
        target_covariance = joint_covariance(p.side(), &unit);
    }
    GroupSummary {
        t_max,
        steps: cfg.steps[horizon],
        regime,
        succeeded: ok.len(),
        failed,
        coordinates,
        covariance,
        target_covariance,
    }
}

/// Runs every replication on the current rayon pool.
pub fn run_study(cfg: &StudyConfig) -> Result<McStudyResult, StudyError> {
    cfg.validate()?;
    let mut records = Vec::new();
    let mut groups = Vec::new();
    for (h, (&t_max, &steps)) in cfg.horizons.iter().zip(&cfg.steps).enumerate() {
        let grid = make_uniform_grid(t_max, steps)?;
        let factor = build_increment_factor(cfg.params.hurst, &grid)?;
        let kernel = kernel_filter(cfg.params.hurst, &grid, &factor)?;
        log::info!("T = {t_max}: {steps} cells, {} replications", cfg.replications);
        let batch: Vec<RepRecord> = (0..cfg.replications)
            .into_par_iter()
            .flat_map_iter(|rep| one_replication(cfg, &factor, &kernel, h, rep))
            .collect();
        let failed_reps: std::collections::BTreeSet<usize> =
            batch.iter().filter(|r| !r.is_ok()).map(|r| r.rep).collect();
        if failed_reps.len() as f64 > MAX_FAILURE_RATE * cfg.replications as f64 {
            return Err(StudyError::TooManyFailures {
                horizon: t_max,
                failed: failed_reps.len(),
                total: cfg.replications,
            });
        }
        for &regime in &cfg.regimes {
            groups.push(summarize(cfg, h, regime, &batch));
        }
        records.extend(batch);
    }
    let checks = evaluate_checks(cfg, &groups);
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(McStudyResult {
        config: cfg.clone(),
        stream_scheme: STREAM_SCHEME.into(),
        groups,
        checks,
        all_passed,
        records,
    })
}

/// Wilson-Hilferty quantiles of `chi^2_k / k` at `-z` and `+z`.
pub fn chi2_ratio_band(dof: usize, z: f64) -> (f64, f64) {
    let k = dof as f64;
    let c = 2.0 / (9.0 * k);
    let q = |s: f64| (1.0 - c + s * z * c.sqrt()).max(0.0).powi(3);
    (q(-1.0), q(1.0))
}

/// Ratio `empirical / target` of a variance with its widened chi-square band.
pub fn check_variance(empirical: f64, target: f64, count: usize, z: f64, slack: f64) -> (f64, f64, f64, bool) {
    let (lo, hi) = chi2_ratio_band(count - 1, z);
    let lower = 1.0 - slack * (1.0 - lo);
    let upper = 1.0 + slack * (hi - 1.0);
    let ratio = empirical / target;
    (ratio, lower, upper, ratio >= lower && ratio <= upper)
}

/// Off-diagonal covariance entry against its target with a normal-theory
/// standard error; returns `(difference, half-width, pass)`.
pub fn check_covariance(
    empirical: &[[f64; 2]; 2],
    target: &[[f64; 2]; 2],
    count: usize,
    z: f64,
    slack: f64,
) -> (f64, f64, bool) {
    let se = ((target[0][0] * target[1][1] + target[0][1] * target[0][1]) / (count as f64 - 1.0)).sqrt();
    let diff = empirical[0][1] - target[0][1];
    let half = slack * z * se;
    (diff, half, diff.abs() <= half)
}

/// `|skewness| <= 4 sqrt(6/N)` and `|excess kurtosis| <= 4 sqrt(24/N)`.
pub fn check_normality(m: &Moments) -> [(f64, f64, bool); 2] {
    let n = m.count as f64;
    let bs = 4.0 * (6.0 / n).sqrt();
    let bk = 4.0 * (24.0 / n).sqrt();
    [
        (m.skewness, bs, m.skewness.abs() <= bs),
        (m.excess_kurtosis, bk, m.excess_kurtosis.abs() <= bk),
    ]
}

/// Mean within four standard errors of zero.
pub fn check_mean(m: &Moments) -> (f64, f64, bool) {
    let half = 4.0 * (m.variance / m.count as f64).sqrt();
    (m.mean, half, m.mean.abs() <= half)
}

/// Strictly decreasing medians, with at most one step that fails to
/// decrease but stays within 5% of its predecessor.
pub fn check_consistency_trend(medians: &[f64]) -> bool {
    if medians.len() < 3 {
        return false;
    }
    let mut ties = 0;
    for w in medians.windows(2) {
        if w[1] < w[0] {
            continue;
        }
        if w[1] <= 1.05 * w[0] {
            ties += 1;
        } else {
            return false;
        }
    }
    ties <= 1
}

fn evaluate_checks(cfg: &StudyConfig, groups: &[GroupSummary]) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let mut kinds = cfg.checks.clone();
    kinds.sort();
    kinds.dedup();
    for kind in kinds {
        if kind == CheckKind::Consistency {
            for &regime in &cfg.regimes {
                let meds: Vec<f64> = groups
                    .iter()
                    .filter(|g| g.regime == regime)
                    .filter_map(|g| g.coordinates.iter().find(|c| c.coordinate == Coordinate::Beta))
                    .map(|c| c.median_abs_error)
                    .collect();
                if meds.len() != cfg.horizons.len() {
                    continue;
                }
                let passed = check_consistency_trend(&meds);
                let worst = meds.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
                out.push(CheckOutcome {
                    check: kind,
                    t_max: None,
                    regime,
                    coordinate: Some("beta".into()),
                    statistic: worst,
                    lower: 0.0,
                    upper: 1.05,
                    passed,
                });
            }
            continue;
        }
        for g in groups {
            let base = |coordinate: String, statistic: f64, lower: f64, upper: f64, passed: bool| CheckOutcome {
                check: kind,
                t_max: Some(g.t_max),
                regime: g.regime,
                coordinate: Some(coordinate),
                statistic,
                lower,
                upper,
                passed,
            };
            match kind {
                CheckKind::Variance => {
                    for c in &g.coordinates {
                        let (r, lo, hi, ok) =
                            check_variance(c.moments.variance, c.target_variance, c.moments.count, cfg.z, cfg.slack);
                        out.push(base(coord_name(c.coordinate).into(), r, lo, hi, ok));
                    }
                }
                CheckKind::Covariance => {
                    if let (Some(e), Some(t)) = (&g.covariance, &g.target_covariance) {
                        let (d, half, ok) = check_covariance(e, t, g.succeeded, cfg.z, cfg.slack);
                        out.push(base(
                            "alpha-beta".into(),
                            t[0][1] + d,
                            t[0][1] - half,
                            t[0][1] + half,
                            ok,
                        ));
                    }
                }
                CheckKind::Normality => {
                    for c in &g.coordinates {
                        let [(s, bs, oks), (k, bk, okk)] = check_normality(&c.moments);
                        out.push(base(format!("{}:skewness", coord_name(c.coordinate)), s, -bs, bs, oks));
                        out.push(base(
                            format!("{}:excess-kurtosis", coord_name(c.coordinate)),
                            k,
                            -bk,
                            bk,
                            okk,
                        ));
                    }
                }
                CheckKind::Mean => {
                    for c in &g.coordinates {
                        let (m, half, ok) = check_mean(&c.moments);
                        out.push(base(coord_name(c.coordinate).into(), m, -half, half, ok));
                    }
                }
                CheckKind::Consistency => unreachable!(),
            }
        }
    }
    out
}

fn coord_name(c: Coordinate) -> &'static str {
    match c {
        Coordinate::Alpha => "alpha",
        Coordinate::Beta => "beta",
    }
}

/// Tail behaviour of `d<M>/dt` on one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    pub hurst: f64,
    #[serde(rename = "T")]
    pub t_max: f64,
    pub steps: usize,
    /// Log-log slope of the rate over the last decade of `t`.
    pub tail_slope: f64,
    /// `max / min - 1` of the rate over the last decade.
    pub tail_spread: f64,
    /// `<M>_T / T`.
    pub level: f64,
    /// `H > 1/2`: slope within `1 - 2H +- 0.15`; `H < 1/2`: spread at most
    /// 0.1 and level within 0.1 of 1.
    pub passed: bool,
}

pub fn check_bracket_asymptotics(hurst: f64, t_max: f64, steps: usize) -> Result<BracketReport, Error> {
    let grid = make_uniform_grid(t_max, steps)?;
    let factor = build_increment_factor(hurst, &grid)?;
    let k = kernel_filter(hurst, &grid, &factor)?;
    Ok(bracket_report(&k))
}

pub fn bracket_report(k: &KernelField) -> BracketReport {
    let t = k.grid().points();
    let n = k.cells();
    let t_max = k.grid().t_max();
    let rate = bracket_rate(k).expect("kernel with at least two cells");
    // Cells whose right end lies in [T/10, T].
    let tail: Vec<usize> = (0..n).filter(|&i| t[i + 1] >= t_max / 10.0).collect();
    let xs: Vec<f64> = tail.iter().map(|&i| t[i + 1].ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|&i| rate[i].ln()).collect();
    let tail_slope = ols_slope(&xs, &ys);
    let hi = tail.iter().map(|&i| rate[i]).fold(f64::MIN, f64::max);
    let lo = tail.iter().map(|&i| rate[i]).fold(f64::MAX, f64::min);
    let tail_spread = hi / lo - 1.0;
    let level = k.bracket()[n] / t_max;
    let hurst = k.hurst();
    let passed = match HurstSide::of(hurst) {
        HurstSide::Super => (tail_slope - (1.0 - 2.0 * hurst)).abs() <= 0.15,
        HurstSide::Sub => tail_spread <= 0.1 && (level - 1.0).abs() <= 0.1,
    };
    BracketReport {
        hurst,
        t_max,
        steps: n,
        tail_slope,
        tail_spread,
        level,
        passed,
    }
}

fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
