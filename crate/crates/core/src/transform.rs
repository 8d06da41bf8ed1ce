//! Observation transform `(Z, Q, <M>)` of an observed path:
//!
//! ```text
//! Z_t = int_0^t g(s, t) dX_s,     Q_t = d/d<M>_t int_0^t g(s, t) X_s ds.
//! ```
//!
//! On the grid, `Psi_n = sum_{i<=n} g_i^{(n)} X_{t_{i-1}} Delta_i` (left
//! values) and `Q` on cell `n` is `(Psi_n - Psi_{n-1}) / (<M>_n - <M>_{n-1})`.
//! `Q` is a cell quantity and is never interpolated to nodes.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::kernel::KernelField;
use crate::model::{ModelParams, PathLabel, SamplePath, TimeGrid};

#[derive(Debug, Clone)]
pub struct TransformedObservation {
    pub grid: TimeGrid,
    /// `Z_{t_n}`, `n = 0..=cells`.
    pub z: Vec<f64>,
    /// `Q` on cells `1..=cells` (index `n - 1`).
    pub q: Vec<f64>,
    /// `<M>_{t_n}`, `n = 0..=cells`.
    pub bracket: Vec<f64>,
}

impl TransformedObservation {
    pub fn cells(&self) -> usize {
        self.q.len()
    }

    pub fn dz(&self) -> Vec<f64> {
        self.z.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn dbracket(&self) -> Vec<f64> {
        self.bracket.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

fn check_path(k: &KernelField, x: &SamplePath) -> Result<()> {
    if x.grid() != k.grid() {
        return Err(Error::GridMismatch("path and kernel are on different grids"));
    }
    Ok(())
}

/// `Z_{t_n} = sum_{i<=n} g_i^{(n)} (X_{t_i} - X_{t_{i-1}})`.
pub fn compute_z(k: &KernelField, x: &SamplePath) -> Result<Vec<f64>> {
    check_path(k, x)?;
    Ok(k.weighted_sums(&x.increments()))
}

/// `d/d<M>` of `int_0^t g(s, t) f(s) ds`, `f` given at nodes `0..=cells`
/// and evaluated at left endpoints.
pub(crate) fn bracket_derivative(k: &KernelField, f: &[f64]) -> Result<Vec<f64>> {
    let steps = k.grid().steps();
    let integrand: Vec<f64> = steps.iter().zip(f).map(|(d, v)| v * d).collect();
    let psi = k.weighted_sums(&integrand);
    let bracket = k.bracket();
    (1..=k.cells())
        .map(|n| {
            let db = bracket[n] - bracket[n - 1];
            if db > 0.0 {
                Ok((psi[n] - psi[n - 1]) / db)
            } else {
                Err(Error::DegenerateCell { cell: n })
            }
        })
        .collect()
}

/// `Q` on each cell.
pub fn compute_q(k: &KernelField, x: &SamplePath) -> Result<Vec<f64>> {
    check_path(k, x)?;
    bracket_derivative(k, x.values())
}

/// `(Z, Q, <M>)` of an observed path.
pub fn transform(k: &KernelField, x: &SamplePath) -> Result<TransformedObservation> {
    Ok(TransformedObservation {
        grid: k.grid().clone(),
        z: compute_z(k, x)?,
        q: compute_q(k, x)?,
        bracket: k.bracket().to_vec(),
    })
}

/// Split of `X` and `Q` around the deterministic mean path:
/// `X_t = (alpha/beta)(1 - e^{-beta t}) + U_t` and
/// `Q = alpha/beta - (alpha/beta) V + Q^U`.
#[derive(Debug, Clone)]
pub struct DecompositionTrack {
    pub grid: TimeGrid,
    /// `V` per cell.
    pub v: Vec<f64>,
    /// `Q^U` per cell.
    pub q_u: Vec<f64>,
    /// `U_{t_n}` per node.
    pub u: Vec<f64>,
}

impl DecompositionTrack {
    /// `alpha/beta - (alpha/beta) V_n + Q^U_n` per cell.
    pub fn reconstruct_q(&self, p: &ModelParams) -> Vec<f64> {
        let m = p.alpha / p.beta;
        self.v.iter().zip(&self.q_u).map(|(v, qu)| m - m * v + qu).collect()
    }

    /// `int_0^T V d<M>` on the grid.
    pub fn v_integral(&self, bracket: &[f64]) -> f64 {
        self.v
            .iter()
            .zip(bracket.windows(2))
            .map(|(v, w)| v * (w[1] - w[0]))
            .sum()
    }
}

pub fn compute_decomposition(k: &KernelField, p: &ModelParams, x: &SamplePath) -> Result<DecompositionTrack> {
    check_path(k, x)?;
    if !(p.beta > 0.0) {
        return Err(invalid("the decomposition needs beta > 0"));
    }
    let t = k.grid().points();
    let ratio = p.alpha / p.beta;
    let decay: Vec<f64> = t.iter().map(|&s| libm::exp(-p.beta * s)).collect();
    let u: Vec<f64> = x
        .values()
        .iter()
        .zip(&decay)
        .map(|(xv, e)| xv - ratio * (1.0 - e))
        .collect();
    Ok(DecompositionTrack {
        grid: k.grid().clone(),
        v: bracket_derivative(k, &decay)?,
        q_u: bracket_derivative(k, &u)?,
        u,
    })
}

/// Realized-quadratic-variation estimate `sqrt(sum (Delta Z)^2 / <M>_T)`.
pub fn estimate_gamma(z: &[f64], bracket: &[f64]) -> Result<f64> {
    if z.len() != bracket.len() {
        return Err(invalid("Z and bracket have different lengths"));
    }
    if z.len() < 3 {
        return Err(invalid("estimate_gamma needs at least two cells"));
    }
    let total = bracket[bracket.len() - 1] - bracket[0];
    if !(total > 0.0) {
        return Err(Error::Degenerate("bracket does not increase"));
    }
    let qv: f64 = z.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
    Ok(libm::sqrt(qv / total))
}

/// Checks the observed label before transforming.
pub fn expect_process(x: &SamplePath) -> Result<()> {
    if x.label() != PathLabel::X {
        return Err(invalid("expected an observed process (X) path"));
    }
    Ok(())
}
