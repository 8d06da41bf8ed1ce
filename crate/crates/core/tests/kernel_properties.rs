#![allow(clippy::needless_range_loop)]

use mfvasicek_core::covariance::build_increment_factor;
use mfvasicek_core::kernel::{bracket_rate, kernel_filter, kernel_wiener_hopf, martingale_from_path};
use mfvasicek_core::model::make_uniform_grid;
use mfvasicek_core::rng::stream_rng;
use mfvasicek_core::simulate::sample_mfbm;

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[test]
fn martingale_variance_tracks_bracket() {
    for h in [0.3, 0.7] {
        let grid = make_uniform_grid(4.0, 64).unwrap();
        let f = build_increment_factor(h, &grid).unwrap();
        let k = kernel_filter(h, &grid, &f).unwrap();
        let reps = 2000;
        let mut sum2 = vec![0.0; 65];
        // Correlation of increments over cells 10 and 40.
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        let mut rng = stream_rng(21, 0);
        for _ in 0..reps {
            let m = martingale_from_path(&k, &sample_mfbm(&f, &mut rng)).unwrap();
            for n in 1..=64 {
                sum2[n] += m.values[n] * m.values[n];
            }
            let da = m.values[10] - m.values[9];
            let db = m.values[40] - m.values[39];
            sab += da * db;
            saa += da * da;
            sbb += db * db;
        }
        for n in 1..=64 {
            let ratio = sum2[n] / reps as f64 / k.bracket()[n];
            assert!((0.9..=1.1).contains(&ratio), "H={h} n={n} ratio {ratio}");
        }
        let corr = sab / (saa * sbb).sqrt();
        assert!(corr.abs() <= 4.0 / (reps as f64).sqrt(), "H={h} corr {corr}");
    }
}

#[test]
fn bracket_rate_power_law_above_half() {
    let grid = make_uniform_grid(100.0, 1000).unwrap();
    let f = build_increment_factor(0.7, &grid).unwrap();
    let k = kernel_filter(0.7, &grid, &f).unwrap();
    let rate = bracket_rate(&k).unwrap();
    let t = grid.points();
    let (xs, ys): (Vec<f64>, Vec<f64>) = (100..1000).map(|i| (t[i + 1].ln(), rate[i].ln())).unzip();
    let s = slope(&xs, &ys);
    assert!((s + 0.4).abs() <= 0.15, "slope {s}");
}

/// Below one half the rate climbs to 1 with a deficit decaying like `t^(2H-1)`.
#[test]
fn bracket_rate_approaches_one_below_half() {
    let grid = make_uniform_grid(100.0, 1000).unwrap();
    let f = build_increment_factor(0.3, &grid).unwrap();
    let k = kernel_filter(0.3, &grid, &f).unwrap();
    let rate = bracket_rate(&k).unwrap();
    let t = grid.points();
    assert!(rate[100..].windows(2).all(|w| w[1] >= w[0] && w[1] < 1.0));
    let (xs, ys): (Vec<f64>, Vec<f64>) = (100..1000).map(|i| (t[i + 1].ln(), (1.0 - rate[i]).ln())).unzip();
    let s = slope(&xs, &ys);
    assert!((s + 0.4).abs() <= 0.15, "deficit slope {s}");
}

#[test]
fn wiener_hopf_agrees_with_filter_under_refinement() {
    let h = 0.7;
    let mut diffs = Vec::new();
    for cells in [64, 128, 256, 512] {
        let grid = make_uniform_grid(1.0, cells).unwrap();
        let f = build_increment_factor(h, &grid).unwrap();
        let row = kernel_filter(h, &grid, &f).unwrap().last_row();
        let wh = kernel_wiener_hopf(h, 1.0, cells).unwrap();
        diffs.push(row.relative_sup_diff(&wh).unwrap());
    }
    assert!(diffs[2] <= 0.05, "{diffs:?}");
    for w in diffs.windows(2) {
        assert!(w[1] < w[0], "{diffs:?}");
    }
}
