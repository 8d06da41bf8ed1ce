//! The fundamental-martingale kernel `g(s, t)`, the martingale
//! `M_t = E(W_t | F^xi_t) = int_0^t g(s, t) dxi_s` and its bracket
//! `<M>_t = int_0^t g(s, t) ds`.
//!
//! Two constructions are provided:
//!
//! * [`kernel_filter`], valid for every `H`: on a grid, `M_{t_n}` is the
//!   projection of `W_{t_n}` on the first `n` increments of `xi`, so the
//!   weights solve `C^{(n)} g^{(n)} = (Delta_1, ..., Delta_n)` with `C^{(n)}`
//!   the leading block of the increment covariance. Leading blocks of one
//!   Cholesky factor serve every `n`: with `y = L^{-1} Delta`, the row is
//!   `g^{(n)} = L_n^{-T} y_{1..n}` and `<M>_{t_n} = |y_{1..n}|^2`.
//! * [`kernel_wiener_hopf`], for `H > 1/2`: piecewise-constant collocation
//!   of `g(s,t) + H(2H-1) int_0^t g(r,t) |r-s|^{2H-2} dr = 1` with the weak
//!   singularity integrated in closed form. It yields the single row `t = t_end`
//!   and serves as an independent cross-check of the filter.

use alloc::vec;
use alloc::vec::Vec;

use crate::covariance::{IncrementFactor, NoiseKind};
use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, lu_solve, PackedLower};
use crate::model::{validate_hurst, HurstSide, PathLabel, SamplePath, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMethod {
    Filter,
    WienerHopf,
}

impl KernelMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Filter => "filter",
            Self::WienerHopf => "wiener-hopf",
        }
    }
}

/// Discrete kernel on a grid: row `n` holds `g_i^{(n)} ~ g(s_i, t_n)` for
/// cells `i = 1..=n`, plus the bracket `<M>_{t_n}` for `n = 0..=N`.
#[derive(Debug, Clone)]
pub struct KernelField {
    grid: TimeGrid,
    hurst: f64,
    weights: PackedLower,
    bracket: Vec<f64>,
    innovation: Vec<f64>,
}

impl KernelField {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn method(&self) -> KernelMethod {
        KernelMethod::Filter
    }

    pub fn cells(&self) -> usize {
        self.grid.cells()
    }

    /// Weights `g_1^{(n)}, ..., g_n^{(n)}` for `n` in `1..=cells`.
    pub fn row(&self, n: usize) -> &[f64] {
        self.weights.row(n - 1)
    }

    /// `<M>_{t_n}` for `n = 0..=cells`; `bracket[0] = 0`.
    pub fn bracket(&self) -> &[f64] {
        &self.bracket
    }

    /// `<M>_{t_n} - <M>_{t_{n-1}}` for `n = 1..=cells`.
    pub fn bracket_increments(&self) -> Vec<f64> {
        self.bracket.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Coefficients `y = L^{-1} Delta`; `Delta<M>_n = y_n^2` in exact arithmetic.
    pub fn innovation_coefficients(&self) -> &[f64] {
        &self.innovation
    }

    /// The row at `t = t_end` as a standalone [`KernelRow`].
    pub fn last_row(&self) -> KernelRow {
        let n = self.cells();
        KernelRow {
            grid: self.grid.clone(),
            hurst: self.hurst,
            method: KernelMethod::Filter,
            weights: self.row(n).to_vec(),
            bracket_end: self.bracket[n],
        }
    }

    /// Diagnostic `sum_k (g_k^{(k)})^2 Delta_k`, the discrete analogue of
    /// `int_0^t g^2(s, s) ds` (an alternative bracket formula for `H > 1/2`).
    pub fn innovation_bracket(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.cells() + 1);
        let mut acc = 0.0;
        out.push(acc);
        for n in 1..=self.cells() {
            let g = self.row(n)[n - 1];
            acc += g * g * self.grid.step(n);
            out.push(acc);
        }
        out
    }

    /// `sum_{i<=n} g_i^{(n)} f_i` for every `n`, with `f` indexed by cell
    /// (`f[i-1]` belongs to cell `i`). Entry 0 is 0.
    pub fn weighted_sums(&self, f: &[f64]) -> Vec<f64> {
        debug_assert_eq!(f.len(), self.cells());
        let mut out = Vec::with_capacity(self.cells() + 1);
        out.push(0.0);
        for n in 1..=self.cells() {
            out.push(dot(self.row(n), &f[..n]));
        }
        out
    }
}

impl KernelField {
    /// Assembles a field from explicit rows (`rows[n-1]` has length `n`);
    /// the bracket is `sum_i g_i^{(n)} Delta_i`. Intended for fixtures and
    /// externally computed kernels.
    pub fn from_rows(grid: TimeGrid, hurst: f64, rows: &[Vec<f64>]) -> Result<Self> {
        let cells = grid.cells();
        if rows.len() != cells || rows.iter().enumerate().any(|(i, r)| r.len() != i + 1) {
            return Err(invalid("kernel rows must form a lower triangle matching the grid"));
        }
        let steps = grid.steps();
        let mut weights = PackedLower::zeros(cells);
        let mut bracket = Vec::with_capacity(cells + 1);
        bracket.push(0.0);
        for (i, r) in rows.iter().enumerate() {
            weights.row_mut(i).copy_from_slice(r);
            bracket.push(dot(r, &steps[..=i]));
        }
        let innovation = bracket.windows(2).map(|w| libm::sqrt((w[1] - w[0]).max(0.0))).collect();
        Ok(Self {
            grid,
            hurst,
            weights,
            bracket,
            innovation,
        })
    }
}

/// Builds the filter kernel from the shared increment factor.
pub fn kernel_filter(hurst: f64, grid: &TimeGrid, factor: &IncrementFactor) -> Result<KernelField> {
    if factor.kind() != NoiseKind::Mixed {
        return Err(invalid("kernel_filter needs the mixed-noise increment factor"));
    }
    if factor.hurst() != hurst {
        return Err(invalid("factor was built for a different Hurst index"));
    }
    if factor.grid() != grid {
        return Err(Error::GridMismatch("factor was built on a different grid"));
    }
    let chol = factor.cholesky();
    let steps = grid.steps();
    let innovation = chol.forward_solve(&steps);

    let cells = grid.cells();
    let mut weights = PackedLower::zeros(cells);
    let mut bracket = Vec::with_capacity(cells + 1);
    bracket.push(0.0);
    for n in 1..=cells {
        let g = chol.back_solve(&innovation[..n]);
        bracket.push(dot(&g, &steps[..n]));
        weights.row_mut(n - 1).copy_from_slice(&g);
    }
    Ok(KernelField {
        grid: grid.clone(),
        hurst,
        weights,
        bracket,
        innovation,
    })
}

/// One kernel row `g(., t_end)` on `cells` uniform cells of `[0, t_end]`.
#[derive(Debug, Clone)]
pub struct KernelRow {
    grid: TimeGrid,
    hurst: f64,
    method: KernelMethod,
    weights: Vec<f64>,
    bracket_end: f64,
}

impl KernelRow {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn method(&self) -> KernelMethod {
        self.method
    }

    /// Cell values; index `i` is cell `i + 1`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `<M>_{t_end} = sum_i g_i Delta_i`.
    pub fn bracket_end(&self) -> f64 {
        self.bracket_end
    }

    /// `max_i |g_i - h_i| / max_i |h_i|` against a row on the same cells.
    pub fn relative_sup_diff(&self, reference: &KernelRow) -> Result<f64> {
        if self.weights.len() != reference.weights.len() {
            return Err(Error::GridMismatch("kernel rows have different cell counts"));
        }
        let scale = reference.weights.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = self
            .weights
            .iter()
            .zip(&reference.weights)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        Ok(diff / scale)
    }
}

/// `H (2H-1) int_a^b |r - s|^{2H-2} dr` in closed form (`H > 1/2`), including
/// the case `a < s < b` where the integrand is singular at `r = s`.
pub fn wiener_hopf_cell_weight(hurst: f64, s: f64, a: f64, b: f64) -> f64 {
    let p = 2.0 * hurst - 1.0;
    let pw = |x: f64| if x <= 0.0 { 0.0 } else { libm::pow(x, p) };
    let bracket = if s <= a {
        pw(b - s) - pw(a - s)
    } else if s >= b {
        pw(s - a) - pw(s - b)
    } else {
        pw(s - a) + pw(b - s)
    };
    hurst * bracket
}

/// Solves `(I + W) g = 1` by midpoint collocation, `W_ij` the closed-form
/// cell weights.
pub fn kernel_wiener_hopf(hurst: f64, t_end: f64, cells: usize) -> Result<KernelRow> {
    if validate_hurst(hurst)? != HurstSide::Super {
        return Err(Error::UnsupportedMethod("the Wiener-Hopf kernel requires H > 1/2"));
    }
    let grid = TimeGrid::uniform(t_end, cells)?;
    let t = grid.points();
    let mut a = vec![0.0; cells * cells];
    for i in 0..cells {
        let s = 0.5 * (t[i] + t[i + 1]);
        for j in 0..cells {
            a[i * cells + j] = wiener_hopf_cell_weight(hurst, s, t[j], t[j + 1]);
        }
        a[i * cells + i] += 1.0;
    }
    let weights = lu_solve(a, vec![1.0; cells])?;
    let bracket_end = dot(&weights, &grid.steps());
    Ok(KernelRow {
        grid,
        hurst,
        method: KernelMethod::WienerHopf,
        weights,
        bracket_end,
    })
}

/// `M_{t_n}` along a path together with the bracket it carries.
#[derive(Debug, Clone)]
pub struct MartingaleTrack {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub bracket: Vec<f64>,
}

/// `M_{t_n} = sum_{i<=n} g_i^{(n)} (path_{t_i} - path_{t_{i-1}})`.
///
/// Applied to an observed `X` path this is `Z`.
pub fn martingale_from_path(k: &KernelField, path: &SamplePath) -> Result<MartingaleTrack> {
    if path.grid() != k.grid() {
        return Err(Error::GridMismatch("path and kernel are on different grids"));
    }
    if matches!(path.label(), PathLabel::Z) {
        return Err(invalid("martingale_from_path expects a noise or process path"));
    }
    Ok(MartingaleTrack {
        grid: k.grid().clone(),
        values: k.weighted_sums(&path.increments()),
        bracket: k.bracket().to_vec(),
    })
}

/// Finite-difference rate `d<M>/dt` on each cell.
pub fn bracket_rate(k: &KernelField) -> Result<Vec<f64>> {
    if k.cells() < 2 {
        return Err(invalid("bracket_rate needs at least two cells"));
    }
    Ok(k.bracket_increments()
        .iter()
        .zip(k.grid().steps())
        .map(|(db, dt)| db / dt)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::build_increment_factor;
    use crate::model::make_uniform_grid;

    fn filter(h: f64, t: f64, n: usize) -> (KernelField, IncrementFactor) {
        let g = make_uniform_grid(t, n).unwrap();
        let f = build_increment_factor(h, &g).unwrap();
        (kernel_filter(h, &g, &f).unwrap(), f)
    }

    #[test]
    fn one_cell_projection() {
        for &h in &[0.2, 0.7] {
            let (k, _) = filter(h, 1.0, 1);
            assert!((k.row(1)[0] - 0.5).abs() < 1e-15);
            assert!((k.bracket()[1] - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn filter_residual_and_bracket_forms() {
        for &h in &[0.3, 0.7] {
            let (k, f) = filter(h, 4.0, 48);
            let c = f.covariance();
            let steps = k.grid().steps();
            let y = k.innovation_coefficients();
            let mut sum_y2 = 0.0;
            for n in 1..=k.cells() {
                let g = k.row(n);
                let b = &steps[..n];
                let cg = c.sym_mul(g);
                let res = cg.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
                let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(res <= 1e-8 * bn, "residual {res} at n = {n}");
                let quad = dot(g, &cg);
                assert!((quad - k.bracket()[n]).abs() <= 1e-12);
                sum_y2 += y[n - 1] * y[n - 1];
                assert!((sum_y2 - k.bracket()[n]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn bracket_is_nondecreasing_and_weights_bounded() {
        for &h in &[0.3, 0.7] {
            let (k, _) = filter(h, 8.0, 256);
            assert_eq!(k.bracket()[0], 0.0);
            for w in k.bracket().windows(2) {
                assert!(w[1] >= w[0]);
            }
            for n in 1..=k.cells() {
                for &g in k.row(n) {
                    assert!((-1e-12..=1.0 + 1e-12).contains(&g), "g = {g} at n = {n}, H = {h}");
                }
            }
        }
    }

    #[test]
    fn projection_is_optimal() {
        // E(W_{t_n} - sum g_i dxi_i)^2 = t_n - 2 g.b + g.C.g is minimised by the filter row.
        let (k, f) = filter(0.3, 2.0, 20);
        let c = f.covariance();
        let steps = k.grid().steps();
        for n in [1, 7, 20] {
            let tn = k.grid().points()[n];
            let err = |g: &[f64]| tn - 2.0 * dot(g, &steps[..n]) + dot(g, &c.sym_mul(g));
            let g = k.row(n).to_vec();
            let base = err(&g);
            for i in 0..n {
                for eps in [1e-3, -1e-3] {
                    let mut p = g.clone();
                    p[i] += eps;
                    assert!(err(&p) > base);
                }
            }
        }
    }

    #[test]
    fn factor_mismatch_is_rejected() {
        let g = make_uniform_grid(1.0, 8).unwrap();
        let f = build_increment_factor(0.7, &g).unwrap();
        assert!(kernel_filter(0.3, &g, &f).is_err());
        let g2 = make_uniform_grid(2.0, 8).unwrap();
        assert!(matches!(kernel_filter(0.7, &g2, &f), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn cell_weight_matches_quadrature_off_the_singularity() {
        // Composite Simpson on a smooth cell.
        let h = 0.7;
        let p = 2.0 * h - 2.0;
        for &(s, a, b) in &[(0.05, 0.3, 0.55), (0.9, 0.2, 0.6), (2.0, 0.0, 1.0)] {
            let m = 2000;
            let dx = (b - a) / m as f64;
            let f = |r: f64| libm::pow((r - s).abs(), p);
            let mut acc = f(a) + f(b);
            for i in 1..m {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * f(a + i as f64 * dx);
            }
            let quad = h * (2.0 * h - 1.0) * acc * dx / 3.0;
            let closed = wiener_hopf_cell_weight(h, s, a, b);
            assert!((quad - closed).abs() < 1e-9 * closed.abs(), "{quad} vs {closed}");
        }
        // Singular cell splits into two one-sided pieces.
        let whole = wiener_hopf_cell_weight(h, 0.5, 0.0, 1.0);
        let left = wiener_hopf_cell_weight(h, 0.5, 0.0, 0.5);
        let right = wiener_hopf_cell_weight(h, 0.5, 0.5, 1.0);
        assert!((whole - left - right).abs() < 1e-15);
    }

    #[test]
    fn wiener_hopf_values_in_unit_interval() {
        let row = kernel_wiener_hopf(0.7, 1.0, 128).unwrap();
        assert!(row.weights().iter().all(|&g| g > 0.0 && g <= 1.0));
        assert!(row.bracket_end() > 0.0 && row.bracket_end() < 1.0);
    }

    #[test]
    fn wiener_hopf_requires_super_diffusive_hurst() {
        assert!(matches!(
            kernel_wiener_hopf(0.3, 1.0, 16),
            Err(Error::UnsupportedMethod(_))
        ));
        assert!(kernel_wiener_hopf(0.5, 1.0, 16).is_err());
    }

    #[test]
    fn martingale_examples() {
        let (k, _) = filter(0.7, 1.0, 1);
        let g = k.grid().clone();
        let xi = SamplePath::new(g.clone(), alloc::vec![0.0, 2.0], PathLabel::Xi).unwrap();
        let m = martingale_from_path(&k, &xi).unwrap();
        assert!((m.values[1] - 1.0).abs() < 1e-15);

        let (k, _) = filter(0.3, 1.0, 10);
        let zero = SamplePath::new(k.grid().clone(), alloc::vec![0.0; 11], PathLabel::Xi).unwrap();
        let m = martingale_from_path(&k, &zero).unwrap();
        assert!(m.values.iter().all(|&v| v == 0.0));
        assert_eq!(m.values[0], 0.0);
    }

    #[test]
    fn bracket_rate_needs_two_cells() {
        let (k, _) = filter(0.7, 1.0, 1);
        assert!(bracket_rate(&k).is_err());
        let (k, _) = filter(0.7, 1.0, 4);
        assert_eq!(bracket_rate(&k).unwrap().len(), 4);
    }
}
