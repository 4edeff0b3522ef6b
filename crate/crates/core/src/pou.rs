//! Lipschitz partitions of unity subordinate to the level-`n` covers.
//!
//! `h_{n,k}(x) = d(x, X ∖ R_{n,k})`, `F_{n,k} = h_{n,k} / Σ_j h_{n,j}` and
//! `f_{n,k} = F_{n,k}^{1/2}`.

use serde::Serialize;

use crate::markov::{Cell, CoveredSystem};

#[derive(Clone, Copy, Debug)]
pub struct PartitionOfUnity<'a, S: CoveredSystem> {
    sys: &'a S,
    level: u32,
}

impl<'a, S: CoveredSystem> PartitionOfUnity<'a, S> {
    pub fn new(sys: &'a S, level: u32) -> Self {
        PartitionOfUnity { sys, level }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn h(&self, x: &S::Point, cell: &Cell) -> f64 {
        self.sys.margin_in(x, cell)
    }

    /// `(cell, F(x))` for every cell with `F(x) > 0`, sorted by cell.
    pub fn weights(&self, x: &S::Point) -> Vec<(Cell, f64)> {
        let hits = self.sys.cells_at(x, self.level);
        if self.level == 0 {
            return hits.into_iter().map(|h| (h.cell, 1.0)).collect();
        }
        let total: f64 = hits.iter().map(|h| h.margin).sum();
        assert!(total > 0.0, "covers must cover X");
        hits.into_iter().map(|h| (h.cell, h.margin / total)).collect()
    }

    /// `(cell, f(x))`, the square roots of `weights`.
    pub fn roots(&self, x: &S::Point) -> Vec<(Cell, f64)> {
        self.weights(x).into_iter().map(|(c, w)| (c, w.sqrt())).collect()
    }

    pub fn big_f(&self, x: &S::Point, cell: &Cell) -> f64 {
        self.weights(x).into_iter().find(|(c, _)| c == cell).map_or(0.0, |(_, w)| w)
    }

    pub fn small_f(&self, x: &S::Point, cell: &Cell) -> f64 {
        self.big_f(x, cell).sqrt()
    }

    /// `(2 (#R_1)² + 1) / Leb(R_n)`, with the guaranteed Lebesgue bound.
    pub fn lipschitz_bound(&self) -> f64 {
        let r1 = self.sys.coding().count(1) as f64;
        (2.0 * r1 * r1 + 1.0) / self.sys.level_margin(self.level)
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct EmpiricalLipschitz {
    /// `max |F(x) - F(y)| / d(x, y)`.
    pub lipschitz: f64,
    /// `max |f(x) - f(y)| / d(x, y)^{1/2}`.
    pub holder: f64,
    pub pairs: usize,
}

/// Maximal difference quotients over the given pairs, across all cells
/// charged at either point.
pub fn empirical_lipschitz<S: CoveredSystem>(pou: &PartitionOfUnity<'_, S>, pairs: &[(S::Point, S::Point)]) -> EmpiricalLipschitz {
    let mut out = EmpiricalLipschitz { pairs: 0, ..Default::default() };
    for (x, y) in pairs {
        let d = pou.sys.dist(x, y);
        if d == 0.0 {
            continue;
        }
        out.pairs += 1;
        let wx = pou.weights(x);
        let wy = pou.weights(y);
        let mut diff = 0.0f64;
        let mut root_diff = 0.0f64;
        let lookup = |w: &[(Cell, f64)], c: &Cell| w.iter().find(|(k, _)| k == c).map_or(0.0, |(_, v)| *v);
        for (c, _) in wx.iter().chain(wy.iter()) {
            let (a, b) = (lookup(&wx, c), lookup(&wy, c));
            diff = diff.max((a - b).abs());
            root_diff = root_diff.max((a.sqrt() - b.sqrt()).abs());
        }
        out.lipschitz = out.lipschitz.max(diff / d);
        out.holder = out.holder.max(root_diff / d.sqrt());
    }
    out
}
