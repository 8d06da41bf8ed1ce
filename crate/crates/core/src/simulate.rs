//! Exact-law sampling of mixed fractional Brownian motion on a grid and
//! Euler simulation of the Vasicek path driven by it.

use alloc::vec::Vec;

use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::covariance::{IncrementFactor, NoiseKind};
use crate::error::{invalid, Error, Result};
use crate::model::{ModelParams, PathLabel, SamplePath};
use crate::rng::stream_rng;

fn cumulate(increments: &[f64]) -> Vec<f64> {
    let mut values = Vec::with_capacity(increments.len() + 1);
    let mut acc = 0.0;
    values.push(0.0);
    for d in increments {
        acc += d;
        values.push(acc);
    }
    values
}

/// Correlated increments `L z` with `z` i.i.d. standard normal.
pub fn sample_increments<R: RngCore + ?Sized>(factor: &IncrementFactor, rng: &mut R) -> Vec<f64> {
    let n = factor.grid().cells();
    let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut *rng)).collect();
    factor.cholesky().lower().lower_mul(&z)
}

/// Draws `xi` on the factor's grid; `xi_0 = 0`.
pub fn sample_mfbm<R: RngCore + ?Sized>(factor: &IncrementFactor, rng: &mut R) -> SamplePath {
    let label = match factor.kind() {
        NoiseKind::Mixed => PathLabel::Xi,
        NoiseKind::Fractional => PathLabel::Bh,
    };
    let values = cumulate(&sample_increments(factor, rng));
    SamplePath::new(factor.grid().clone(), values, label).expect("path matches its own grid")
}

/// [`sample_mfbm`] on stream 0 of `seed`.
pub fn sample_mfbm_seeded(factor: &IncrementFactor, seed: u64) -> SamplePath {
    sample_mfbm(factor, &mut stream_rng(seed, 0))
}

/// Draws the two components `(W, B^H)` of `xi` separately, from a factor
/// built with [`build_fbm_increment_factor`](crate::covariance::build_fbm_increment_factor).
pub fn sample_components<R: RngCore + ?Sized>(
    fbm_factor: &IncrementFactor,
    rng: &mut R,
) -> Result<(SamplePath, SamplePath)> {
    if fbm_factor.kind() != NoiseKind::Fractional {
        return Err(invalid("component sampling needs a fractional-noise factor"));
    }
    let grid = fbm_factor.grid();
    let dw: Vec<f64> = grid
        .steps()
        .into_iter()
        .map(|d| {
            let z: f64 = StandardNormal.sample(&mut *rng);
            libm::sqrt(d) * z
        })
        .collect();
    let w = SamplePath::new(grid.clone(), cumulate(&dw), PathLabel::W)?;
    let bh = sample_mfbm(fbm_factor, rng);
    Ok((w, bh))
}

/// Pointwise sum of two paths on the same grid, labelled `xi`.
pub fn combine(w: &SamplePath, bh: &SamplePath) -> Result<SamplePath> {
    if w.grid() != bh.grid() {
        return Err(Error::GridMismatch("components live on different grids"));
    }
    let values = w.values().iter().zip(bh.values()).map(|(a, b)| a + b).collect();
    SamplePath::new(w.grid().clone(), values, PathLabel::Xi)
}

/// Euler scheme `X_{k+1} = X_k + (alpha - beta X_k) Delta_{k+1} + gamma (xi_{k+1} - xi_k)`,
/// `X_0 = 0`.
///
/// Parameters are used as given; `beta = 0` is allowed here.
pub fn simulate_vasicek(p: &ModelParams, xi: &SamplePath) -> Result<SamplePath> {
    if xi.label() != PathLabel::Xi {
        return Err(invalid("simulate_vasicek expects a mixed-noise (xi) path"));
    }
    let t = xi.grid().points();
    let noise = xi.values();
    let mut x = Vec::with_capacity(t.len());
    let mut cur = 0.0;
    x.push(cur);
    for k in 1..t.len() {
        let dt = t[k] - t[k - 1];
        cur += (p.alpha - p.beta * cur) * dt + p.gamma * (noise[k] - noise[k - 1]);
        x.push(cur);
    }
    SamplePath::new(xi.grid().clone(), x, PathLabel::X)
}
