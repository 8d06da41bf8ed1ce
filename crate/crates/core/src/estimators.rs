//! Log-likelihood and closed-form maximum-likelihood estimators of the drift
//! `(alpha, beta)` from the transformed observation `(Z, Q, <M>)`, with unit
//! noise scale:
//!
//! ```text
//! log L(alpha, beta) = int (alpha - beta Q) dZ - 1/2 int (alpha - beta Q)^2 d<M>.
//! ```
//!
//! All integrals are cell sums, collected once in [`SufficientStats`].

use alloc::string::String;
use alloc::vec::Vec;

use crate::asymptotics::{marginal_law, Coordinate, Regime};
use crate::covariance::build_increment_factor;
use crate::error::{invalid, Error, Result};
use crate::kernel::{kernel_filter, KernelField};
use crate::model::{validate_hurst, HurstSide, ModelParams, SamplePath};
use crate::transform::{compute_z, estimate_gamma, expect_process, transform, TransformedObservation};

/// Cell sums entering the score equations.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SufficientStats {
    /// `Z_T`
    pub s_z: f64,
    /// `<M>_T`
    pub s_m: f64,
    /// `int Q dZ`
    pub s_qz: f64,
    /// `int Q d<M>`
    pub s_q: f64,
    /// `int Q^2 d<M>`
    pub s_qq: f64,
}

impl SufficientStats {
    pub fn from_observation(obs: &TransformedObservation) -> Self {
        let n = obs.cells();
        let mut s = Self {
            s_z: obs.z[n] - obs.z[0],
            s_m: obs.bracket[n] - obs.bracket[0],
            s_qz: 0.0,
            s_q: 0.0,
            s_qq: 0.0,
        };
        for (i, &q) in obs.q.iter().enumerate() {
            let dz = obs.z[i + 1] - obs.z[i];
            let db = obs.bracket[i + 1] - obs.bracket[i];
            s.s_qz += q * dz;
            s.s_q += q * db;
            s.s_qq += q * q * db;
        }
        s
    }

    /// `D = S_Q^2 - S_M S_QQ`; strictly negative unless `Q` is constant in
    /// `<M>`-measure.
    pub fn denominator(&self) -> f64 {
        self.s_q * self.s_q - self.s_m * self.s_qq
    }

    pub fn log_likelihood(&self, alpha: f64, beta: f64) -> f64 {
        alpha * self.s_z
            - beta * self.s_qz
            - 0.5 * (alpha * alpha * self.s_m - 2.0 * alpha * beta * self.s_q + beta * beta * self.s_qq)
    }

    /// `(d/d alpha, d/d beta)` of the log-likelihood.
    pub fn score(&self, alpha: f64, beta: f64) -> (f64, f64) {
        (
            self.s_z - alpha * self.s_m + beta * self.s_q,
            -self.s_qz + alpha * self.s_q - beta * self.s_qq,
        )
    }
}

/// Cell-sum log-likelihood evaluated directly on the observation.
pub fn log_likelihood(alpha: f64, beta: f64, obs: &TransformedObservation) -> f64 {
    let mut ll = 0.0;
    for (i, &q) in obs.q.iter().enumerate() {
        let drift = alpha - beta * q;
        let dz = obs.z[i + 1] - obs.z[i];
        let db = obs.bracket[i + 1] - obs.bracket[i];
        ll += drift * dz - 0.5 * drift * drift * db;
    }
    ll
}

/// `beta~ = (alpha S_Q - S_QZ) / S_QQ`.
pub fn mle_beta_known_alpha(alpha: f64, stats: &SufficientStats) -> Result<f64> {
    if !(stats.s_qq > 0.0) {
        return Err(Error::Degenerate("int Q^2 d<M> vanishes"));
    }
    Ok((alpha * stats.s_q - stats.s_qz) / stats.s_qq)
}

/// `alpha~ = (S_Z + beta S_Q) / S_M`.
pub fn mle_alpha_known_beta(beta: f64, stats: &SufficientStats) -> Result<f64> {
    if !(stats.s_m > 0.0) {
        return Err(Error::Degenerate("<M>_T vanishes"));
    }
    Ok((stats.s_z + beta * stats.s_q) / stats.s_m)
}

/// Relative collinearity threshold on `D`.
pub const COLLINEARITY_RTOL: f64 = 1e-14;

/// Joint MLE `(alpha^, beta^)`.
pub fn mle_joint(stats: &SufficientStats) -> Result<(f64, f64)> {
    let d = stats.denominator();
    if !(d < -COLLINEARITY_RTOL * stats.s_m * stats.s_qq) {
        return Err(Error::Collinear { denominator: d });
    }
    let alpha = (stats.s_qz * stats.s_q - stats.s_z * stats.s_qq) / d;
    let beta = (stats.s_m * stats.s_qz - stats.s_z * stats.s_q) / d;
    Ok((alpha, beta))
}

/// Estimation regime with the known parameter, in the units of the
/// observed path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// Estimate `alpha`, `beta` known.
    AlphaOnly {
        beta: f64,
    },
    /// Estimate `beta`, `alpha` known.
    BetaOnly {
        alpha: f64,
    },
    Joint,
}

impl Mode {
    pub fn regime(&self) -> Regime {
        match self {
            Self::AlphaOnly { .. } => Regime::AlphaOnly,
            Self::BetaOnly { .. } => Regime::BetaOnly,
            Self::Joint => Regime::Joint,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaSpec {
    Known(f64),
    /// Realized quadratic variation of `Z`.
    Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub hurst: f64,
    pub gamma: GammaSpec,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Diagnostics {
    /// Cell sums of the observation scaled to unit noise.
    pub stats: SufficientStats,
    /// `S_Q^2 - S_M S_QQ`.
    pub denominator: f64,
    pub gamma_estimated: bool,
    pub known_alpha: Option<f64>,
    pub known_beta: Option<f64>,
    pub flags: Vec<String>,
}

/// Point estimates and asymptotic standard errors, in the units of the
/// observed path.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimateReport {
    pub mode: Regime,
    pub alpha_hat: Option<f64>,
    pub beta_hat: Option<f64>,
    pub se_alpha: Option<f64>,
    pub se_beta: Option<f64>,
    #[cfg_attr(feature = "serde", serde(rename = "T"))]
    pub t_max: f64,
    #[cfg_attr(feature = "serde", serde(rename = "n"))]
    pub cells: usize,
    pub hurst: f64,
    pub gamma: f64,
    pub diagnostics: Diagnostics,
}

/// Full pipeline: factor, kernel, transform, estimate.
pub fn fit(x: &SamplePath, opts: &FitOptions) -> Result<EstimateReport> {
    validate_hurst(opts.hurst)?;
    let factor = build_increment_factor(opts.hurst, x.grid())?;
    let k = kernel_filter(opts.hurst, x.grid(), &factor)?;
    fit_with_kernel(&k, x, opts)
}

/// [`fit`] with a prebuilt kernel on the path's grid.
pub fn fit_with_kernel(k: &KernelField, x: &SamplePath, opts: &FitOptions) -> Result<EstimateReport> {
    expect_process(x)?;
    if k.hurst() != opts.hurst {
        return Err(invalid("kernel was built for a different Hurst index"));
    }
    let (gamma, estimated) = match opts.gamma {
        GammaSpec::Known(g) if g > 0.0 && g.is_finite() => (g, false),
        GammaSpec::Known(g) => return Err(invalid(alloc::format!("gamma must be positive (got {g})"))),
        GammaSpec::Estimate => (estimate_gamma(&compute_z(k, x)?, k.bracket())?, true),
    };
    let obs = transform(k, &x.scaled(1.0 / gamma))?;
    fit_observation(&obs, opts.hurst, gamma, estimated, opts.mode)
}

/// Estimates from an observation already scaled to unit noise; `gamma` only
/// converts `alpha` and its standard error back to path units.
pub fn fit_observation(
    obs: &TransformedObservation,
    hurst: f64,
    gamma: f64,
    gamma_estimated: bool,
    mode: Mode,
) -> Result<EstimateReport> {
    let side = validate_hurst(hurst)?;
    let stats = SufficientStats::from_observation(obs);
    let (alpha, beta) = match mode {
        Mode::AlphaOnly { beta } => (mle_alpha_known_beta(beta, &stats)?, beta),
        Mode::BetaOnly { alpha } => {
            let a = alpha / gamma;
            (a, mle_beta_known_alpha(a, &stats)?)
        }
        Mode::Joint => mle_joint(&stats)?,
    };
    let regime = mode.regime();
    let t_max = obs.grid.t_max();
    let mut flags = Vec::new();
    if !(beta > 0.0) {
        flags.push(String::from("beta outside the admissible region (beta <= 0)"));
    }
    let mut se = |coord: Coordinate, name: &str| -> Option<f64> {
        let at = ModelParams {
            alpha,
            beta,
            gamma: 1.0,
            hurst,
        };
        let law = marginal_law(side, regime, coord, &at)?;
        let s = law.std_error(t_max);
        if s.is_finite() && s > 0.0 && (side == HurstSide::Super || beta > 0.0 || regime == Regime::AlphaOnly) {
            Some(s)
        } else {
            flags.push(alloc::format!("standard error of {name} undefined at the estimates"));
            None
        }
    };
    let se_alpha = se(Coordinate::Alpha, "alpha").map(|s| s * gamma);
    let se_beta = se(Coordinate::Beta, "beta");
    let (alpha_hat, beta_hat) = match mode {
        Mode::AlphaOnly { .. } => (Some(alpha * gamma), None),
        Mode::BetaOnly { .. } => (None, Some(beta)),
        Mode::Joint => (Some(alpha * gamma), Some(beta)),
    };
    Ok(EstimateReport {
        mode: regime,
        alpha_hat,
        beta_hat,
        se_alpha,
        se_beta,
        t_max,
        cells: obs.cells(),
        hurst,
        gamma,
        diagnostics: Diagnostics {
            stats,
            denominator: stats.denominator(),
            gamma_estimated,
            known_alpha: if let Mode::BetaOnly { alpha } = mode {
                Some(alpha)
            } else {
                None
            },
            known_beta: if let Mode::AlphaOnly { beta } = mode {
                Some(beta)
            } else {
                None
            },
            flags,
        },
    })
}
