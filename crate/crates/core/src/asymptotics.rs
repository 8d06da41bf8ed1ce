//! Limiting laws of the drift MLEs.
//!
//! Every (estimation regime, Hurst side, coordinate) triple maps to exactly
//! one entry of [`marginal_law`]; the estimators read standard errors from
//! there and nowhere else.
//!
//! | regime     | side    | alpha                          | beta                      |
//! |------------|---------|--------------------------------|---------------------------|
//! | alpha-only | H > 1/2 | `T^{1-H}`, `v_H`               |                           |
//! | alpha-only | H < 1/2 | `T^{1/2}`, `1`                 |                           |
//! | beta-only  | H > 1/2 |                                | `T^{1/2}`, `2 beta`       |
//! | beta-only  | H < 1/2 |                                | `T^{1/2}`, `2 beta^2 / (2 alpha^2 + beta)` |
//! | joint      | H > 1/2 | `T^{1-H}`, `v_H`               | `T^{1/2}`, `2 beta`       |
//! | joint      | H < 1/2 | `T^{1/2}`, `1 + 2 alpha^2/beta`| `T^{1/2}`, `2 beta`       |
//!
//! For `H < 1/2` the joint law is bivariate normal with covariance the
//! inverse Fisher information; for `H > 1/2` only the marginals are known.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::model::{HurstSide, ModelParams};

/// Which drift parameters are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Regime {
    /// `alpha` estimated, `beta` known.
    AlphaOnly,
    /// `beta` estimated, `alpha` known.
    BetaOnly,
    /// Both estimated.
    Joint,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::AlphaOnly, Regime::BetaOnly, Regime::Joint];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::AlphaOnly => "alpha-only",
            Self::BetaOnly => "beta-only",
            Self::Joint => "joint",
        }
    }

    pub fn estimates(self, coord: Coordinate) -> bool {
        !matches!(
            (self, coord),
            (Self::AlphaOnly, Coordinate::Beta) | (Self::BetaOnly, Coordinate::Alpha)
        )
    }
}

impl core::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha-only" => Ok(Self::AlphaOnly),
            "beta-only" => Ok(Self::BetaOnly),
            "joint" => Ok(Self::Joint),
            other => Err(invalid(format!("unknown regime {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Coordinate {
    Alpha,
    Beta,
}

/// `T^exponent (estimate - truth) -> N(0, variance)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MarginalLaw {
    pub exponent: f64,
    pub variance: f64,
}

impl MarginalLaw {
    /// Asymptotic standard error at horizon `t_max`.
    pub fn std_error(&self, t_max: f64) -> f64 {
        libm::sqrt(self.variance) / libm::pow(t_max, self.exponent)
    }
}

/// `v_H = 2H Gamma(H + 1/2) Gamma(3 - 2H) / Gamma(3/2 - H)`.
pub fn v_h(hurst: f64) -> f64 {
    let lg = libm::lgamma(hurst + 0.5) + libm::lgamma(3.0 - 2.0 * hurst) - libm::lgamma(1.5 - hurst);
    2.0 * hurst * libm::exp(lg)
}

/// The dispatch table; `None` when `regime` does not estimate `coord`.
pub fn marginal_law(side: HurstSide, regime: Regime, coord: Coordinate, p: &ModelParams) -> Option<MarginalLaw> {
    if !regime.estimates(coord) {
        return None;
    }
    let (alpha, beta) = (p.alpha, p.beta);
    let law = match (coord, side, regime) {
        (Coordinate::Alpha, HurstSide::Super, _) => MarginalLaw {
            exponent: 1.0 - p.hurst,
            variance: v_h(p.hurst),
        },
        (Coordinate::Alpha, HurstSide::Sub, Regime::Joint) => MarginalLaw {
            exponent: 0.5,
            variance: 1.0 + 2.0 * alpha * alpha / beta,
        },
        (Coordinate::Alpha, HurstSide::Sub, _) => MarginalLaw {
            exponent: 0.5,
            variance: 1.0,
        },
        (Coordinate::Beta, HurstSide::Sub, Regime::BetaOnly) => MarginalLaw {
            exponent: 0.5,
            variance: 2.0 * beta * beta / (2.0 * alpha * alpha + beta),
        },
        (Coordinate::Beta, _, _) => MarginalLaw {
            exponent: 0.5,
            variance: 2.0 * beta,
        },
    };
    Some(law)
}

/// Limit variance of `sqrt(T)(beta_hat - beta)`.
pub fn variance_beta(side: HurstSide, regime: Regime, p: &ModelParams) -> Option<f64> {
    marginal_law(side, regime, Coordinate::Beta, p).map(|l| l.variance)
}

/// Scaling exponent and limit variance for the `alpha` error.
pub fn variance_alpha(side: HurstSide, regime: Regime, p: &ModelParams) -> Option<MarginalLaw> {
    marginal_law(side, regime, Coordinate::Alpha, p)
}

pub type Matrix2 = [[f64; 2]; 2];

fn require_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("beta must be positive (got {beta})")))
    }
}

/// Fisher information of `(alpha, beta)` per unit time (`H < 1/2`).
pub fn fisher_info(alpha: f64, beta: f64) -> Result<Matrix2> {
    require_beta(beta)?;
    let r = alpha / beta;
    Ok([[1.0, -r], [-r, 0.5 / beta + r * r]])
}

pub fn fisher_info_inverse(alpha: f64, beta: f64) -> Result<Matrix2> {
    require_beta(beta)?;
    Ok([
        [1.0 + 2.0 * alpha * alpha / beta, 2.0 * alpha],
        [2.0 * alpha, 2.0 * beta],
    ])
}

/// Limit covariance of `sqrt(T)(theta_hat - theta)` in the joint regime;
/// `None` for `H > 1/2`, where the coordinates converge at different rates.
pub fn joint_covariance(side: HurstSide, p: &ModelParams) -> Option<Matrix2> {
    match side {
        HurstSide::Sub => fisher_info_inverse(p.alpha, p.beta).ok(),
        HurstSide::Super => None,
    }
}

/// `lim_T (1/T) log E exp(-mu int_0^T (Q^U)^2 d<M>) = beta/2 - sqrt(beta^2/4 + mu/2)`,
/// defined for `mu > -beta^2/2`.
pub fn laplace_limit(mu: f64, beta: f64) -> Result<f64> {
    let floor = -beta * beta / 2.0;
    if !(mu > floor) {
        return Err(Error::Domain(format!("mu must exceed -beta^2/2 = {floor} (got {mu})")));
    }
    Ok(beta / 2.0 - libm::sqrt(beta * beta / 4.0 + mu / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum LawKind {
    AlphaOnly,
    BetaOnly,
    JointAlpha,
    JointBeta,
    Joint,
}

pub const JOINT_DEFERRED_NOTE: &str =
    "no joint law for H > 1/2: alpha and beta converge at different rates; marginal laws only";

/// One limiting law, as listed by [`laws`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AsymptoticLaw {
    pub kind: LawKind,
    pub side: HurstSide,
    pub exponent: f64,
    pub variance: Option<f64>,
    pub covariance: Option<Matrix2>,
}

/// All laws that apply at `p`.
pub fn laws(p: &ModelParams) -> Vec<AsymptoticLaw> {
    let side = p.side();
    let marginal = |kind, regime, coord| {
        marginal_law(side, regime, coord, p).map(|l| AsymptoticLaw {
            kind,
            side,
            exponent: l.exponent,
            variance: Some(l.variance),
            covariance: None,
        })
    };
    let mut out: Vec<AsymptoticLaw> = [
        marginal(LawKind::AlphaOnly, Regime::AlphaOnly, Coordinate::Alpha),
        marginal(LawKind::BetaOnly, Regime::BetaOnly, Coordinate::Beta),
        marginal(LawKind::JointAlpha, Regime::Joint, Coordinate::Alpha),
        marginal(LawKind::JointBeta, Regime::Joint, Coordinate::Beta),
    ]
    .into_iter()
    .flatten()
    .collect();
    if let Some(cov) = joint_covariance(side, p) {
        out.push(AsymptoticLaw {
            kind: LawKind::Joint,
            side,
            exponent: 0.5,
            variance: None,
            covariance: Some(cov),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(alpha: f64, beta: f64, hurst: f64) -> ModelParams {
        ModelParams {
            alpha,
            beta,
            gamma: 1.0,
            hurst,
        }
    }

    #[test]
    fn beta_variances() {
        assert_eq!(
            variance_beta(HurstSide::Super, Regime::Joint, &p(3.0, 1.0, 0.7)),
            Some(2.0)
        );
        assert_eq!(
            variance_beta(HurstSide::Sub, Regime::BetaOnly, &p(0.0, 1.0, 0.3)),
            Some(2.0)
        );
        assert_eq!(
            variance_beta(HurstSide::Sub, Regime::BetaOnly, &p(1.0, 2.0, 0.3)),
            Some(2.0)
        );
        assert_eq!(
            variance_beta(HurstSide::Super, Regime::BetaOnly, &p(1.0, 2.0, 0.7)),
            Some(4.0)
        );
        assert_eq!(
            variance_beta(HurstSide::Sub, Regime::AlphaOnly, &p(1.0, 2.0, 0.3)),
            None
        );
    }

    #[test]
    fn alpha_variances() {
        assert_eq!(
            variance_alpha(HurstSide::Sub, Regime::AlphaOnly, &p(5.0, 2.0, 0.3)),
            Some(MarginalLaw {
                exponent: 0.5,
                variance: 1.0
            })
        );
        assert_eq!(
            variance_alpha(HurstSide::Sub, Regime::Joint, &p(1.0, 2.0, 0.3)),
            Some(MarginalLaw {
                exponent: 0.5,
                variance: 2.0
            })
        );
        let l = variance_alpha(HurstSide::Super, Regime::Joint, &p(1.0, 2.0, 0.7)).unwrap();
        assert!((l.exponent - 0.3).abs() < 1e-15);
        assert_eq!(l.variance, v_h(0.7));
        assert_eq!(
            variance_alpha(HurstSide::Super, Regime::AlphaOnly, &p(1.0, 2.0, 0.7))
                .unwrap()
                .variance,
            v_h(0.7)
        );
        assert_eq!(
            variance_alpha(HurstSide::Sub, Regime::BetaOnly, &p(1.0, 2.0, 0.3)),
            None
        );
    }

    #[test]
    fn v_h_fixtures() {
        // Reference values from a 40-digit Gamma evaluation.
        assert!((v_h(0.5) - 1.0).abs() <= 1e-12);
        let cases = [
            (0.75, 0.983_271_582_859_544_9),
            (0.7, 0.986_538_134_921_288_1),
            (0.6, 0.995_001_536_986_188_4),
            (0.9, 0.984_684_299_463_348_1),
            (0.3, 0.945_035_739_228_605_8),
            (0.1, 0.562_767_699_323_260_1),
        ];
        for (h, want) in cases {
            assert!((v_h(h) - want).abs() <= 1e-12 * want, "v_H({h}) = {}", v_h(h));
        }
        assert!((v_h(0.5 + 1e-6) - 1.0).abs() <= 1e-4);
    }

    #[test]
    fn fisher_fixture() {
        let i = fisher_info(1.0, 2.0).unwrap();
        assert_eq!(i, [[1.0, -0.5], [-0.5, 0.5]]);
        let inv = fisher_info_inverse(1.0, 2.0).unwrap();
        assert_eq!(inv, [[2.0, 2.0], [2.0, 4.0]]);
        assert_eq!(fisher_info_inverse(0.0, 1.0).unwrap(), [[1.0, 0.0], [0.0, 2.0]]);
        assert!(fisher_info(1.0, 0.0).is_err());
        assert!(fisher_info_inverse(1.0, -1.0).is_err());
    }

    #[test]
    fn laplace_examples() {
        assert_eq!(laplace_limit(0.0, 3.0).unwrap(), 0.0);
        assert!((laplace_limit(2.0, 2.0).unwrap() - (1.0 - core::f64::consts::SQRT_2)).abs() < 1e-15);
        assert!(matches!(laplace_limit(-2.0, 2.0), Err(Error::Domain(_))));
        assert!(laplace_limit(-1.999, 2.0).is_ok());
    }

    #[test]
    fn law_listing_depends_on_side() {
        let sub = laws(&p(1.0, 2.0, 0.3));
        assert_eq!(sub.len(), 5);
        let joint = sub.iter().find(|l| l.kind == LawKind::Joint).unwrap();
        assert_eq!(joint.covariance, Some([[2.0, 2.0], [2.0, 4.0]]));
        let sup = laws(&p(1.0, 2.0, 0.7));
        assert_eq!(sup.len(), 4);
        assert!(sup.iter().all(|l| l.kind != LawKind::Joint));
    }

    fn matmul(a: Matrix2, b: Matrix2) -> Matrix2 {
        let mut c = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        c
    }

    proptest! {
        #[test]
        fn fisher_inverse_is_inverse(alpha in -5.0f64..5.0, beta in 0.05f64..10.0) {
            let prod = matmul(fisher_info(alpha, beta).unwrap(), fisher_info_inverse(alpha, beta).unwrap());
            let scale = 1.0 + (alpha / beta).powi(2) + alpha.abs() + beta;
            for (i, row) in prod.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    let id = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((v - id).abs() <= 1e-12 * scale);
                }
            }
        }

        #[test]
        fn fisher_is_spd(alpha in -5.0f64..5.0, beta in 0.05f64..10.0) {
            let i = fisher_info(alpha, beta).unwrap();
            prop_assert_eq!(i[0][1], i[1][0]);
            let det = i[0][0] * i[1][1] - i[0][1] * i[1][0];
            prop_assert!(i[0][0] > 0.0 && det > 0.0);
            prop_assert!((det - 0.5 / beta).abs() <= 1e-12 * (1.0 + (alpha / beta).powi(2)));
        }

        #[test]
        fn inverse_diagonal_matches_marginals(alpha in -5.0f64..5.0, beta in 0.05f64..10.0) {
            let inv = fisher_info_inverse(alpha, beta).unwrap();
            let q = p(alpha, beta, 0.3);
            let va = variance_alpha(HurstSide::Sub, Regime::Joint, &q).unwrap().variance;
            let vb = variance_beta(HurstSide::Sub, Regime::Joint, &q).unwrap();
            prop_assert!((inv[0][0] - va).abs() <= 1e-12 * va);
            prop_assert!((inv[1][1] - vb).abs() <= 1e-12 * vb);
        }

        #[test]
        fn beta_only_matches_joint_at_zero_alpha(beta in 0.05f64..10.0) {
            let q = p(0.0, beta, 0.3);
            let only = variance_beta(HurstSide::Sub, Regime::BetaOnly, &q).unwrap();
            let joint = variance_beta(HurstSide::Sub, Regime::Joint, &q).unwrap();
            prop_assert!((only - joint).abs() <= 1e-14 * joint);
        }

        #[test]
        fn laplace_decreasing_and_negative(beta in 0.1f64..5.0, mu in 0.0f64..10.0, d in 0.01f64..1.0) {
            let a = laplace_limit(mu, beta).unwrap();
            let b = laplace_limit(mu + d, beta).unwrap();
            prop_assert!(b < a);
            if mu > 0.0 {
                prop_assert!(a < 0.0);
            }
        }
    }
}
