//! Shared domain types: parameters, time grids and sample paths.
//!
//! Every integral against `dt` or `d<M>` downstream is a left-endpoint sum on
//! the grid carried by these types.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{invalid, Error, ParamViolation, Result};

/// Half-width of the excluded band around `H = 1/2`.
pub const HURST_EXCLUSION: f64 = 1e-6;

/// Parameters of `dX = (alpha - beta X) dt + gamma dxi`, `xi = W + B^H`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub hurst: f64,
}

/// Which side of 1/2 the Hurst index lies on; the limit theory differs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum HurstSide {
    /// `H < 1/2`
    Sub,
    /// `H > 1/2`
    Super,
}

impl HurstSide {
    pub fn of(hurst: f64) -> Self {
        if hurst < 0.5 {
            Self::Sub
        } else {
            Self::Super
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sub => "sub",
            Self::Super => "super",
        }
    }
}

fn hurst_violation(hurst: f64) -> Option<ParamViolation> {
    if !(hurst > 0.0 && hurst < 1.0) {
        Some(ParamViolation::HurstOutOfRange(hurst))
    } else if (hurst - 0.5).abs() < HURST_EXCLUSION {
        Some(ParamViolation::HurstExcluded(hurst))
    } else {
        None
    }
}

/// Checks `H` alone against the admissible range.
pub fn validate_hurst(hurst: f64) -> Result<HurstSide> {
    match hurst_violation(hurst) {
        Some(v) => Err(Error::InvalidParams(alloc::vec![v])),
        None => Ok(HurstSide::of(hurst)),
    }
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, hurst: f64) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            gamma,
            hurst,
        };
        p.validate()?;
        Ok(p)
    }

    /// Every violated constraint, in field order.
    pub fn violations(&self) -> Vec<ParamViolation> {
        let mut out = Vec::new();
        if !self.alpha.is_finite() {
            out.push(ParamViolation::AlphaNotFinite(self.alpha));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            out.push(ParamViolation::BetaNotPositive(self.beta));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            out.push(ParamViolation::GammaNotPositive(self.gamma));
        }
        if let Some(v) = hurst_violation(self.hurst) {
            out.push(v);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(v))
        }
    }

    pub fn side(&self) -> HurstSide {
        HurstSide::of(self.hurst)
    }
}

pub fn validate_params(p: &ModelParams) -> Result<()> {
    p.validate()
}

/// Strictly increasing time points `0 = t_0 < t_1 < ... < t_n`, `n >= 1`.
///
/// Cloning is cheap; the points are shared.
#[derive(Debug, Clone)]
pub struct TimeGrid {
    points: Arc<[f64]>,
}

impl PartialEq for TimeGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.points, &other.points) || self.points[..] == other.points[..]
    }
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid("time grid needs at least two points"));
        }
        if points[0] != 0.0 {
            return Err(invalid(format!("time grid must start at 0 (got {})", points[0])));
        }
        for (k, w) in points.windows(2).enumerate() {
            if !w[1].is_finite() || !(w[1] > w[0]) {
                return Err(invalid(format!(
                    "time grid must be strictly increasing: t[{}] = {} is not above t[{}] = {}",
                    k + 1,
                    w[1],
                    k,
                    w[0]
                )));
            }
        }
        Ok(Self { points: points.into() })
    }

    /// `steps + 1` evenly spaced points on `[0, t_max]`.
    pub fn uniform(t_max: f64, steps: usize) -> Result<Self> {
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(invalid(format!("t_max must be positive (got {t_max})")));
        }
        if steps == 0 {
            return Err(invalid("steps must be at least 1"));
        }
        let n = steps as f64;
        let points: Vec<f64> = (0..=steps).map(|k| k as f64 * t_max / n).collect();
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Number of cells `n`.
    pub fn cells(&self) -> usize {
        self.points.len() - 1
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t_max(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// `Delta_k = t_k - t_{k-1}` for `k = 1..=n`.
    pub fn step(&self, k: usize) -> f64 {
        self.points[k] - self.points[k - 1]
    }

    /// All steps; index `i` holds `Delta_{i+1}`.
    pub fn steps(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

pub fn make_uniform_grid(t_max: f64, steps: usize) -> Result<TimeGrid> {
    TimeGrid::uniform(t_max, steps)
}

/// What the values of a [`SamplePath`] represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathLabel {
    /// Mixed noise `xi = W + B^H`.
    Xi,
    /// Observed process `X`.
    X,
    /// Brownian component `W`.
    W,
    /// Fractional component `B^H`.
    Bh,
    /// Transformed observation `Z`.
    Z,
}

impl PathLabel {
    fn starts_at_zero(self) -> bool {
        !matches!(self, Self::Z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    grid: TimeGrid,
    values: Vec<f64>,
    label: PathLabel,
}

impl SamplePath {
    pub fn new(grid: TimeGrid, values: Vec<f64>, label: PathLabel) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "path has {} values but the grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if label.starts_at_zero() && values[0] != 0.0 {
            return Err(invalid(format!("{label:?} path must start at 0 (got {})", values[0])));
        }
        Ok(Self { grid, values, label })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> PathLabel {
        self.label
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Values multiplied by `factor`, same grid and label.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
            label: self.label,
        }
    }

    /// `values[k] - values[k-1]` for `k = 1..=n`.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }
}
