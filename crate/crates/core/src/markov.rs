//! Symbolic coding of the level-`n` covers.
//!
//! A level-`n` element is an admissible word over the base alphabet on the
//! positions `[-N, N]` with `N = n - 1 + K`, where `K` is the pre-refinement
//! radius of the level-1 cover. Level 0 is the single element `X`.

use std::collections::VecDeque;

use serde::Serialize;

use crate::dynamics::HomoclinicSystem;
use crate::word::{BiSequence, Symbol};

/// An element of the level-`n` cover, named by its base word.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Cell {
    pub level: u32,
    pub word: Vec<Symbol>,
}

impl Cell {
    pub fn whole_space() -> Self {
        Cell { level: 0, word: Vec::new() }
    }

    pub fn label(&self) -> String {
        let w: String = self.word.iter().map(|s| char::from_digit(*s as u32 % 36, 36).unwrap()).collect();
        format!("{}:{}", self.level, w)
    }
}

/// A cell containing a point, with `h(x) = d(x, X ∖ cell)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CellHit {
    pub cell: Cell,
    pub margin: f64,
}

/// Base alphabet, 0-1 transition graph and pre-refinement radius.
#[derive(Clone, Debug)]
pub struct Coding {
    allowed: Vec<Vec<bool>>,
    radius: u32,
}

impl Coding {
    pub fn new(allowed: Vec<Vec<bool>>, radius: u32) -> Self {
        Coding { allowed, radius }
    }

    pub fn alphabet(&self) -> usize {
        self.allowed.len()
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn allowed(&self, a: Symbol, b: Symbol) -> bool {
        self.allowed[a as usize][b as usize]
    }

    pub fn successors(&self, a: Symbol) -> impl Iterator<Item = Symbol> + '_ {
        self.allowed[a as usize].iter().enumerate().filter(|(_, &ok)| ok).map(|(b, _)| b as Symbol)
    }

    /// `N = n - 1 + K`; the word covers `[-N, N]`.
    pub fn half_width(&self, level: u32) -> i64 {
        assert!(level >= 1);
        (level - 1 + self.radius) as i64
    }

    pub fn word_len(&self, level: u32) -> usize {
        if level == 0 {
            0
        } else {
            2 * self.half_width(level) as usize + 1
        }
    }

    pub fn word_is_admissible(&self, w: &[Symbol]) -> bool {
        w.windows(2).all(|p| self.allowed(p[0], p[1]))
    }

    /// Number of admissible words of a given length, by transfer-matrix powers.
    pub fn count_words(&self, len: usize) -> u128 {
        if len == 0 {
            return 1;
        }
        let k = self.alphabet();
        let mut v = vec![1u128; k];
        for _ in 1..len {
            let mut nv = vec![0u128; k];
            for a in 0..k {
                for b in 0..k {
                    if self.allowed[a][b] {
                        nv[a] = nv[a].saturating_add(v[b]);
                    }
                }
            }
            v = nv;
        }
        v.iter().fold(0u128, |s, x| s.saturating_add(*x))
    }

    /// Number of elements at `level`.
    pub fn count(&self, level: u32) -> u128 {
        self.count_words(self.word_len(level))
    }

    /// Natural logarithm of the element count, valid beyond `u128`.
    pub fn log_count(&self, level: u32) -> f64 {
        let len = self.word_len(level);
        if len == 0 {
            return 0.0;
        }
        let k = self.alphabet();
        let mut v = vec![1f64; k];
        let mut log_scale = 0.0;
        for _ in 1..len {
            let mut nv = vec![0f64; k];
            for a in 0..k {
                for b in 0..k {
                    if self.allowed[a][b] {
                        nv[a] += v[b];
                    }
                }
            }
            let m = nv.iter().cloned().fold(0.0, f64::max);
            log_scale += m.ln();
            v = nv.into_iter().map(|x| x / m).collect();
        }
        log_scale + v.iter().sum::<f64>().ln()
    }

    /// All admissible words of a length, in lexicographic order.
    pub fn words(&self, len: usize) -> Vec<Vec<Symbol>> {
        let mut out = Vec::new();
        if len == 0 {
            out.push(Vec::new());
            return out;
        }
        let mut cur = Vec::with_capacity(len);
        for a in 0..self.alphabet() as Symbol {
            cur.push(a);
            self.extend_words(&mut cur, len, &mut out);
            cur.pop();
        }
        out
    }

    fn extend_words(&self, cur: &mut Vec<Symbol>, len: usize, out: &mut Vec<Vec<Symbol>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        let last = *cur.last().unwrap();
        for b in 0..self.alphabet() as Symbol {
            if self.allowed(last, b) {
                cur.push(b);
                self.extend_words(cur, len, out);
                cur.pop();
            }
        }
    }

    /// The cells of a level in lexicographic order.
    pub fn cells(&self, level: u32) -> Vec<Cell> {
        self.words(self.word_len(level)).into_iter().map(|word| Cell { level, word }).collect()
    }

    /// 1-based lexicographic index of an admissible word among words of its
    /// length, when it fits in `u128`.
    pub fn rank(&self, w: &[Symbol]) -> Option<u128> {
        if w.is_empty() {
            return Some(1);
        }
        let k = self.alphabet();
        // tails[j][a] = number of admissible words of length j starting at a.
        let mut tails = vec![vec![1u128; k]];
        for j in 1..w.len() {
            let prev = &tails[j - 1];
            let mut row = vec![0u128; k];
            for a in 0..k {
                for b in 0..k {
                    if self.allowed[a][b] {
                        row[a] = row[a].checked_add(prev[b])?;
                    }
                }
            }
            tails.push(row);
        }
        let mut r: u128 = 0;
        for (pos, &s) in w.iter().enumerate() {
            let remaining = w.len() - pos - 1;
            for b in 0..s {
                if pos == 0 || self.allowed(w[pos - 1], b) {
                    r = r.checked_add(tails[remaining][b as usize])?;
                }
            }
        }
        r.checked_add(1)
    }

    /// Shortest-first paths `from -> s_1 -> … -> s_len -> to`; returns the
    /// intermediate words for lengths `0..=max_len`, lexicographic per length,
    /// at most `limit` in total.
    pub fn bridges(&self, from: Symbol, to: Symbol, max_len: usize, limit: usize) -> Vec<Vec<Symbol>> {
        let mut out = Vec::new();
        let mut layer: Vec<Vec<Symbol>> = vec![Vec::new()];
        for len in 0..=max_len {
            for w in &layer {
                let last = w.last().copied().unwrap_or(from);
                if self.allowed(last, to) {
                    out.push(w.clone());
                    if out.len() >= limit {
                        return out;
                    }
                }
            }
            if len == max_len {
                break;
            }
            let mut next = Vec::new();
            for w in &layer {
                let last = w.last().copied().unwrap_or(from);
                for b in self.successors(last) {
                    let mut nw = w.clone();
                    nw.push(b);
                    next.push(nw);
                }
            }
            // Keep the frontier bounded; only short bridges are ever needed.
            next.truncate(4096);
            layer = next;
        }
        out
    }

    /// Length of the shortest path from `a` to `b` (number of edges).
    pub fn distance(&self, a: Symbol, b: Symbol) -> Option<usize> {
        let mut seen = vec![usize::MAX; self.alphabet()];
        let mut q = VecDeque::new();
        seen[a as usize] = 0;
        q.push_back(a);
        while let Some(x) = q.pop_front() {
            for y in self.successors(x) {
                if seen[y as usize] == usize::MAX {
                    seen[y as usize] = seen[x as usize] + 1;
                    q.push_back(y);
                }
            }
        }
        if a == b {
            // Shortest cycle through a.
            return self
                .successors(a)
                .filter_map(|y| if y == a { Some(0) } else { self.distance_nonzero(y, a) })
                .map(|d| d + 1)
                .min();
        }
        (seen[b as usize] != usize::MAX).then_some(seen[b as usize])
    }

    fn distance_nonzero(&self, a: Symbol, b: Symbol) -> Option<usize> {
        let mut seen = vec![usize::MAX; self.alphabet()];
        let mut q = VecDeque::new();
        seen[a as usize] = 0;
        q.push_back(a);
        while let Some(x) = q.pop_front() {
            if x == b {
                return Some(seen[x as usize]);
            }
            for y in self.successors(x) {
                if seen[y as usize] == usize::MAX {
                    seen[y as usize] = seen[x as usize] + 1;
                    q.push_back(y);
                }
            }
        }
        None
    }

    pub fn is_irreducible(&self) -> bool {
        let k = self.alphabet();
        (0..k).all(|a| {
            let mut seen = vec![false; k];
            let mut stack = vec![a];
            seen[a] = true;
            while let Some(x) = stack.pop() {
                for y in 0..k {
                    if self.allowed[x][y] && !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
            seen.iter().all(|&s| s)
        })
    }
}

/// A homoclinic system carrying a refining sequence of enlarged Markov covers
/// and an exact coding map from eventually periodic itineraries to points.
pub trait CoveredSystem: HomoclinicSystem {
    fn coding(&self) -> &Coding;

    /// Every level-`n` cell containing `x`, sorted, with exact margins.
    /// Level 0 returns the single cell `X`.
    fn cells_at(&self, x: &Self::Point, level: u32) -> Vec<CellHit>;

    /// `h(x)` for one cell, 0 outside.
    fn margin_in(&self, x: &Self::Point, cell: &Cell) -> f64 {
        self.cells_at(x, cell.level).into_iter().find(|h| &h.cell == cell).map_or(0.0, |h| h.margin)
    }

    /// Exact `diam(R_n^δ)`.
    fn level_diam(&self, level: u32) -> f64;

    /// `diam(R_n^δ) <= λ^{-n+1} diam(R_1^δ)`, compared exactly where the
    /// backend can.
    fn diam_within_bound(&self, level: u32) -> bool {
        level == 0 || self.level_diam(level) <= self.constants().lambda.powi(-(level as i32 - 1)) * self.level_diam(1)
    }

    /// A lower bound for the margin of any point in the closed cell it
    /// belongs to; hence for `Leb(R_n^δ)`.
    fn level_margin(&self, level: u32) -> f64;

    /// Exact maximal number of level-`n` cells sharing a point.
    fn multiplicity(&self, level: u32) -> usize;

    /// The point with the given itinerary through the base cover.
    fn decode(&self, itinerary: &BiSequence) -> Option<Self::Point>;

    /// Base itinerary word of `P`'s first point (periodic, anchored at 0).
    fn p_code(&self) -> &[Symbol];

    /// Base itinerary word of `Q`'s first point.
    fn q_code(&self) -> &[Symbol];
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> Coding {
        Coding::new(vec![vec![true, true], vec![true, false]], 0)
    }

    #[test]
    fn counts_are_fibonacci() {
        let c = golden();
        let fib = [1u128, 2, 3, 5, 8, 13, 21, 34];
        for len in 1..7 {
            assert_eq!(c.count_words(len), fib[len]);
            assert_eq!(c.words(len).len() as u128, fib[len]);
        }
        assert!((c.log_count(5) - (c.count(5) as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn rank_matches_enumeration() {
        let c = golden();
        for (i, w) in c.words(7).iter().enumerate() {
            assert_eq!(c.rank(w), Some(i as u128 + 1));
        }
    }
}
