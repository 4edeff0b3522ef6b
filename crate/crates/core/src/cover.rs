//! Per-level statistics of the enlarged covers and sampled checks of their
//! structural properties.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::markov::{Cell, CoveredSystem};
use crate::points::{random_point, random_point_with_word};

#[derive(Clone, Debug, Serialize)]
pub struct LevelStats {
    pub level: u32,
    /// Exact count when it fits in `u128`, saturated otherwise.
    pub count: u128,
    pub log_count: f64,
    pub diam: f64,
    /// `λ^{-n+1} θ`.
    pub diam_bound: f64,
    /// `diam <= diam_bound`, exact where the backend allows.
    pub diam_ok: bool,
    /// `min_z max_U h_U(z)` over the sampled points.
    pub leb_sampled: f64,
    /// Guaranteed lower bound for the Lebesgue number.
    pub leb_bound: f64,
    pub multiplicity: usize,
    /// `(#R_1)²`.
    pub multiplicity_bound: f64,
}

/// Points used for sampled checks: the first enumerated homoclinic points
/// followed by random itinerary points.
pub fn test_points<S: CoveredSystem>(sys: &S, count: usize, seed: u64) -> Vec<S::Point> {
    let mut pts: Vec<S::Point> = sys.enumerate_homoclinic(3).into_iter().take(count / 2).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while pts.len() < count {
        pts.push(random_point(sys, &mut rng, 6));
    }
    pts
}

pub fn level_stats<S: CoveredSystem>(sys: &S, level: u32, points: &[S::Point]) -> LevelStats {
    let c = sys.constants();
    let coding = sys.coding();
    let theta = sys.level_diam(1);
    let leb_sampled = points
        .iter()
        .map(|x| sys.cells_at(x, level).iter().map(|h| h.margin).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min);
    let r1 = coding.count(1) as f64;
    LevelStats {
        level,
        count: coding.count(level),
        log_count: coding.log_count(level),
        diam: sys.level_diam(level),
        diam_ok: sys.diam_within_bound(level),
        diam_bound: if level == 0 { sys.level_diam(0) } else { c.lambda.powi(-(level as i32 - 1)) * theta },
        leb_sampled,
        leb_bound: sys.level_margin(level),
        multiplicity: sys.multiplicity(level),
        multiplicity_bound: r1 * r1,
    }
}

/// Least-squares line through `(x, y)`: `(slope, intercept)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fitted slope of `log #R_n` against `n` over the given levels.
pub fn log_count_slope<S: CoveredSystem>(sys: &S, levels: &[u32]) -> f64 {
    let xs: Vec<f64> = levels.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = levels.iter().map(|&n| sys.coding().log_count(n)).collect();
    linear_fit(&xs, &ys).0
}

/// `η = min_n leb_n λ^{n-1}` over the given stats.
pub fn fitted_eta(stats: &[LevelStats], lambda: f64) -> f64 {
    stats
        .iter()
        .filter(|s| s.level >= 1)
        .map(|s| s.leb_sampled * lambda.powi(s.level as i32 - 1))
        .fold(f64::INFINITY, f64::min)
}

/// Drops `k` symbols from both ends: the level `n - k` cell determined by a
/// level `n` cell.
pub fn coarsen(cell: &Cell, k: u32) -> Cell {
    let level = cell.level - k;
    if level == 0 {
        return Cell::whole_space();
    }
    let k = k as usize;
    Cell { level, word: cell.word[k..cell.word.len() - k].to_vec() }
}

/// Refinement on samples: every level-`n+1` cell containing `x` lies in a
/// level-`n` cell containing `x`, namely its coarsening.
pub fn check_refinement<S: CoveredSystem>(sys: &S, x: &S::Point, level: u32) -> bool {
    let coarse: Vec<Cell> = sys.cells_at(x, level).into_iter().map(|h| h.cell).collect();
    sys.cells_at(x, level + 1).iter().all(|h| coarse.contains(&coarsen(&h.cell, 1)))
}

/// `φ^r(R_n)` refines `R_{n-|r|}`: the image of a level-`n` cell containing
/// `x` lies in the level-`(n-|r|)` cell read off the shifted word.
pub fn check_shift_refinement<S: CoveredSystem>(sys: &S, x: &S::Point, level: u32, r: i64) -> bool {
    let k = r.unsigned_abs() as u32;
    if k >= level {
        return true;
    }
    let y = sys.apply(x, r);
    let target: Vec<Cell> = sys.cells_at(&y, level - k).into_iter().map(|h| h.cell).collect();
    sys.cells_at(x, level).iter().all(|h| {
        let w = &h.cell.word;
        let k = k as usize;
        let word = if r >= 0 { w[2 * k..].to_vec() } else { w[..w.len() - 2 * k].to_vec() };
        target.contains(&Cell { level: level - k as u32, word })
    })
}

/// Pairs `(p, q)` lying in a common level-`n` cell, for the diameter and
/// dynamical-closeness checks.
pub fn cell_mates<S: CoveredSystem>(sys: &S, level: u32, pairs: usize, seed: u64) -> Vec<(S::Point, S::Point)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = sys.coding().word_len(level);
    (0..pairs)
        .map(|_| {
            let w = crate::points::random_word(sys.coding(), &mut rng, len);
            let p = random_point_with_word(sys, &mut rng, &w, 1);
            let q = random_point_with_word(sys, &mut rng, &w, 1);
            (p, q)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_a_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let (s, c) = linear_fit(&xs, &ys);
        assert!((s - 2.5).abs() < 1e-12 && (c + 1.0).abs() < 1e-12);
    }

    #[test]
    fn coarsen_trims_both_ends() {
        let c = Cell { level: 3, word: vec![0, 1, 0, 0, 1] };
        assert_eq!(coarsen(&c, 1), Cell { level: 2, word: vec![1, 0, 0] });
        assert_eq!(coarsen(&c, 3), Cell::whole_space());
    }
}
