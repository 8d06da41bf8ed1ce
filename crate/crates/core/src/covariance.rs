//! Covariances of fractional and mixed fractional Brownian motion, and the
//! factored covariance of mixed-noise increments on a grid.

use alloc::format;

use crate::error::{invalid, Error, Result};
use crate::linalg::{Cholesky, PackedLower};
use crate::model::{validate_hurst, TimeGrid};

fn check_inputs(hurst: f64, s: f64, t: f64) -> Result<()> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(invalid(format!("hurst must lie in (0, 1) (got {hurst})")));
    }
    if !(s >= 0.0) || !(t >= 0.0) {
        return Err(invalid(format!("times must be non-negative (got s = {s}, t = {t})")));
    }
    Ok(())
}

#[inline]
fn pow2h(x: f64, two_h: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        libm::pow(x.abs(), two_h)
    }
}

/// `E[B^H_s B^H_t] = (s^{2H} + t^{2H} - |t - s|^{2H}) / 2`.
pub fn fbm_cov(hurst: f64, s: f64, t: f64) -> Result<f64> {
    check_inputs(hurst, s, t)?;
    Ok(CovarianceModel { hurst }.fbm_cov(s, t))
}

/// `E[xi_s xi_t] = min(s, t) + fbm_cov(s, t)`.
pub fn mixed_cov(hurst: f64, s: f64, t: f64) -> Result<f64> {
    check_inputs(hurst, s, t)?;
    Ok(CovarianceModel { hurst }.mixed_cov(s, t))
}

/// Unchecked covariance evaluations for a fixed Hurst index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceModel {
    pub hurst: f64,
}

impl CovarianceModel {
    pub fn fbm_cov(&self, s: f64, t: f64) -> f64 {
        let h2 = 2.0 * self.hurst;
        0.5 * (pow2h(s, h2) + pow2h(t, h2) - pow2h(t - s, h2))
    }

    pub fn mixed_cov(&self, s: f64, t: f64) -> f64 {
        s.min(t) + self.fbm_cov(s, t)
    }

    /// `Cov(B^H_b - B^H_a, B^H_d - B^H_c)`.
    ///
    /// The `s^{2H}` terms of the four-way inclusion-exclusion cancel exactly,
    /// so only lag terms are evaluated; this avoids cancellation far from 0.
    pub fn fbm_increment_cov(&self, a: f64, b: f64, c: f64, d: f64) -> f64 {
        let h2 = 2.0 * self.hurst;
        0.5 * (pow2h(b - c, h2) + pow2h(a - d, h2) - pow2h(b - d, h2) - pow2h(a - c, h2))
    }

    /// `Cov(xi_b - xi_a, xi_d - xi_c)`; the Brownian part is the overlap
    /// length of the two intervals.
    pub fn mixed_increment_cov(&self, a: f64, b: f64, c: f64, d: f64) -> f64 {
        let overlap = (b.min(d) - a.max(c)).max(0.0);
        overlap + self.fbm_increment_cov(a, b, c, d)
    }
}

/// Which noise the increment covariance describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// `xi = W + B^H`
    Mixed,
    /// `B^H` alone
    Fractional,
}

/// Cholesky factor of the `n x n` covariance of grid increments,
/// `C_ij = Cov(xi_{t_i} - xi_{t_{i-1}}, xi_{t_j} - xi_{t_{j-1}})`.
#[derive(Debug, Clone)]
pub struct IncrementFactor {
    hurst: f64,
    grid: TimeGrid,
    kind: NoiseKind,
    chol: Cholesky,
}

impl IncrementFactor {
    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn cholesky(&self) -> &Cholesky {
        &self.chol
    }

    /// The (unfactored) increment covariance, recomputed from the model.
    pub fn covariance(&self) -> PackedLower {
        increment_covariance(self.hurst, &self.grid, self.kind)
    }
}

pub fn increment_covariance(hurst: f64, grid: &TimeGrid, kind: NoiseKind) -> PackedLower {
    let model = CovarianceModel { hurst };
    let t = grid.points();
    PackedLower::from_fn(grid.cells(), |i, j| {
        let (a, b, c, d) = (t[i], t[i + 1], t[j], t[j + 1]);
        match kind {
            NoiseKind::Mixed => model.mixed_increment_cov(a, b, c, d),
            NoiseKind::Fractional => model.fbm_increment_cov(a, b, c, d),
        }
    })
}

fn build(hurst: f64, grid: &TimeGrid, kind: NoiseKind) -> Result<IncrementFactor> {
    validate_hurst(hurst)?;
    let chol = Cholesky::factor(increment_covariance(hurst, grid, kind)).map_err(|e| match e {
        Error::NotPositiveDefinite { pivot } => Error::NotPositiveDefinite { pivot: pivot + 1 },
        other => other,
    })?;
    Ok(IncrementFactor {
        hurst,
        grid: grid.clone(),
        kind,
        chol,
    })
}

/// Factors the mixed-noise increment covariance on `grid`.
///
/// A failed pivot is reported with its 1-based cell index.
pub fn build_increment_factor(hurst: f64, grid: &TimeGrid) -> Result<IncrementFactor> {
    build(hurst, grid, NoiseKind::Mixed)
}

/// Factors the covariance of fractional-noise increments alone; used to draw
/// the two components of `xi` separately.
pub fn build_fbm_increment_factor(hurst: f64, grid: &TimeGrid) -> Result<IncrementFactor> {
    build(hurst, grid, NoiseKind::Fractional)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_uniform_grid;
    use alloc::vec;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn fbm_cov_examples() {
        assert_eq!(fbm_cov(0.75, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(fbm_cov(0.3, 0.0, 5.0).unwrap(), 0.0);
        assert_eq!(fbm_cov(0.75, 0.0, 5.0).unwrap(), 0.0);
        assert!(close(
            fbm_cov(0.75, 1.0, 2.0).unwrap(),
            core::f64::consts::SQRT_2,
            1e-15
        ));
    }

    #[test]
    fn mixed_cov_examples() {
        assert!(close(mixed_cov(0.75, 1.0, 2.0).unwrap(), 2.414_213_562_373_095, 1e-15));
        assert_eq!(mixed_cov(0.4, 0.0, 3.0).unwrap(), 0.0);
        assert_eq!(mixed_cov(0.3, 1.0, 1.0).unwrap(), 2.0);
    }

    #[test]
    fn negative_time_is_rejected() {
        assert!(matches!(fbm_cov(0.7, -1.0, 1.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(mixed_cov(0.7, 1.0, -0.5), Err(Error::InvalidArgument(_))));
        assert!(fbm_cov(1.2, 1.0, 1.0).is_err());
    }

    /// Brute-force assembly: four evaluations of the point covariance.
    fn inclusion_exclusion(h: f64, t: &[f64], i: usize, j: usize) -> f64 {
        let r = |s: f64, u: f64| mixed_cov(h, s, u).unwrap();
        r(t[i + 1], t[j + 1]) - r(t[i + 1], t[j]) - r(t[i], t[j + 1]) + r(t[i], t[j])
    }

    #[test]
    fn single_cell_factor() {
        let g = make_uniform_grid(1.0, 1).unwrap();
        let f = build_increment_factor(0.7, &g).unwrap();
        assert!(close(f.covariance().get(0, 0), 2.0, 1e-15));
        assert!(close(f.cholesky().lower().get(0, 0), core::f64::consts::SQRT_2, 1e-15));
    }

    #[test]
    fn increment_covariance_matches_brute_force() {
        for &h in &[0.3, 0.7] {
            let g = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
            let c = increment_covariance(h, &g, NoiseKind::Mixed);
            for i in 0..2 {
                for j in 0..2 {
                    assert!(close(c.sym(i, j), inclusion_exclusion(h, g.points(), i, j), 1e-14));
                    assert_eq!(c.sym(i, j), c.sym(j, i));
                }
            }
        }
        // H = 0.3 off-diagonal: (2^{0.6} - 2) / 2.
        let g = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let c = increment_covariance(0.3, &g, NoiseKind::Mixed);
        assert!(close(c.get(1, 0), 0.5 * (libm::pow(2.0, 0.6) - 2.0), 1e-15));
    }

    #[test]
    fn factor_reconstruction_is_tight() {
        let g = make_uniform_grid(5.0, 60).unwrap();
        for &h in &[0.2, 0.8] {
            let f = build_increment_factor(h, &g).unwrap();
            let c = f.covariance();
            let r = f.cholesky().reconstruct();
            for i in 0..60 {
                for j in 0..=i {
                    assert!((r.get(i, j) - c.get(i, j)).abs() <= 1e-10 * c.get(i, i));
                }
            }
        }
    }

    #[test]
    fn excluded_hurst_is_rejected() {
        let g = make_uniform_grid(1.0, 4).unwrap();
        assert!(build_increment_factor(0.5, &g).is_err());
    }

    #[test]
    fn duplicate_points_cannot_form_a_grid() {
        assert!(TimeGrid::new(vec![0.0, 1.0, 1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn fbm_cov_symmetric(h in 0.05f64..0.95, s in 0.0f64..10.0, t in 0.0f64..10.0) {
            prop_assert_eq!(fbm_cov(h, s, t).unwrap(), fbm_cov(h, t, s).unwrap());
        }

        #[test]
        fn fbm_cov_self_similar(h in 0.05f64..0.95, s in 0.01f64..5.0, t in 0.01f64..5.0, a in 0.1f64..10.0) {
            let lhs = fbm_cov(h, a * s, a * t).unwrap();
            let rhs = libm::pow(a, 2.0 * h) * fbm_cov(h, s, t).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + rhs.abs()));
        }

        #[test]
        fn small_grids_are_positive_definite(
            h in 0.05f64..0.95,
            gaps in proptest::collection::vec(0.01f64..2.0, 1..=8),
        ) {
            prop_assume!((h - 0.5).abs() > 1e-3);
            let mut pts = vec![0.0];
            for d in gaps {
                let last = *pts.last().unwrap();
                pts.push(last + d);
            }
            let g = TimeGrid::new(pts).unwrap();
            prop_assert!(build_increment_factor(h, &g).is_ok());
            prop_assert!(build_fbm_increment_factor(h, &g).is_ok());
        }
    }
}
