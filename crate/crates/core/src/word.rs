//! Eventually periodic bi-infinite words.
//!
//! `x_i = left[i mod |left|]` for `i < cut`, `x_i = center[i - cut]` on the
//! center block, and `x_i = right[i mod |right|]` afterwards. The periodic
//! words are anchored at absolute positions, so shifting rotates them.

use std::fmt;

use serde::{Deserialize, Serialize};

pub type Symbol = u8;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BiSequence {
    left: Vec<Symbol>,
    cut: i64,
    center: Vec<Symbol>,
    right: Vec<Symbol>,
}

/// Shortest word `u` with `w = u^k`.
pub fn primitive_root(w: &[Symbol]) -> Vec<Symbol> {
    let n = w.len();
    for p in 1..=n {
        if n % p == 0 && (p..n).all(|i| w[i] == w[i - p]) {
            return w[..p].to_vec();
        }
    }
    w.to_vec()
}

pub fn rotate(w: &[Symbol], k: i64) -> Vec<Symbol> {
    let n = w.len() as i64;
    let k = k.rem_euclid(n) as usize;
    let mut out = Vec::with_capacity(w.len());
    out.extend_from_slice(&w[k..]);
    out.extend_from_slice(&w[..k]);
    out
}

impl BiSequence {
    /// Builds and canonicalizes. Periodic words must be nonempty.
    pub fn new(left: Vec<Symbol>, cut: i64, center: Vec<Symbol>, right: Vec<Symbol>) -> Self {
        assert!(!left.is_empty() && !right.is_empty(), "periodic tails must be nonempty");
        let mut s = BiSequence { left: primitive_root(&left), cut, center, right: primitive_root(&right) };
        s.canonicalize();
        s
    }

    /// The periodic point with `x_i = word[i mod |word|]`.
    pub fn periodic(word: &[Symbol]) -> Self {
        Self::new(word.to_vec(), 0, Vec::new(), word.to_vec())
    }

    pub fn left(&self) -> &[Symbol] {
        &self.left
    }

    pub fn right(&self) -> &[Symbol] {
        &self.right
    }

    pub fn center(&self) -> &[Symbol] {
        &self.center
    }

    /// First index of the center block.
    pub fn left_cut(&self) -> i64 {
        self.cut
    }

    /// First index of the right periodic tail.
    pub fn right_cut(&self) -> i64 {
        self.cut + self.center.len() as i64
    }

    pub fn is_periodic(&self) -> bool {
        self.center.is_empty() && self.left == self.right
    }

    fn left_at(&self, i: i64) -> Symbol {
        self.left[i.rem_euclid(self.left.len() as i64) as usize]
    }

    fn right_at(&self, i: i64) -> Symbol {
        self.right[i.rem_euclid(self.right.len() as i64) as usize]
    }

    pub fn at(&self, i: i64) -> Symbol {
        if i < self.cut {
            self.left_at(i)
        } else if i < self.right_cut() {
            self.center[(i - self.cut) as usize]
        } else {
            self.right_at(i)
        }
    }

    /// Symbols on `[lo, hi]`.
    pub fn window(&self, lo: i64, hi: i64) -> Vec<Symbol> {
        (lo..=hi).map(|i| self.at(i)).collect()
    }

    fn canonicalize(&mut self) {
        if self.left == self.right {
            // Same periodic sequence on both sides: strip the center from both ends.
            let mut start = 0;
            while start < self.center.len() && self.center[start] == self.left_at(self.cut + start as i64) {
                start += 1;
            }
            if start == self.center.len() {
                self.cut = 0;
                self.center.clear();
                return;
            }
            self.trim(start);
            return;
        }
        // Absorb into the left tail as far as possible.
        let mut start = 0;
        while start < self.center.len() && self.center[start] == self.left_at(self.cut + start as i64) {
            start += 1;
        }
        if start == self.center.len() {
            self.cut += start as i64;
            self.center.clear();
            while self.right_at(self.cut) == self.left_at(self.cut) {
                self.cut += 1;
            }
            return;
        }
        self.trim(start);
    }

    fn trim(&mut self, start: usize) {
        self.cut += start as i64;
        self.center.drain(..start);
        while let Some(&last) = self.center.last() {
            if last == self.right_at(self.right_cut() - 1) {
                self.center.pop();
            } else {
                break;
            }
        }
    }

    /// `σ^k`: `(σ^k x)_i = x_{i+k}`.
    pub fn shift(&self, k: i64) -> Self {
        let periodic = self.is_periodic();
        BiSequence {
            left: rotate(&self.left, k),
            cut: if periodic { 0 } else { self.cut - k },
            center: self.center.clone(),
            right: rotate(&self.right, k),
        }
    }

    /// Splice: `z_i = self_i` for `i >= 0`, `z_i = other_i` for `i <= 0`.
    /// Requires agreement at 0.
    pub fn splice(&self, other: &Self) -> Self {
        debug_assert_eq!(self.at(0), other.at(0));
        let lo = other.cut.min(0);
        let hi = self.right_cut().max(1);
        let center = (lo..hi).map(|i| if i <= 0 { other.at(i) } else { self.at(i) }).collect();
        BiSequence::new(other.left.clone(), lo, center, self.right.clone())
    }

    /// Largest `m` with agreement on `[-m, m]`; `None` when equal, `-1` when
    /// the 0-th symbols differ.
    pub fn agreement_radius(&self, other: &Self) -> Option<i64> {
        if self == other {
            return None;
        }
        let mut n = 0i64;
        loop {
            if self.at(n) != other.at(n) || self.at(-n) != other.at(-n) {
                return Some(n - 1);
            }
            n += 1;
        }
    }

    /// Checks every adjacent pair, including junctions and the cyclic
    /// closure of both periodic words, against `allowed`.
    pub fn is_admissible(&self, allowed: &dyn Fn(Symbol, Symbol) -> bool) -> bool {
        let cyc = |w: &[Symbol]| (0..w.len()).all(|i| allowed(w[i], w[(i + 1) % w.len()]));
        if !cyc(&self.left) || !cyc(&self.right) {
            return false;
        }
        let lo = self.cut - 1;
        let hi = self.right_cut();
        (lo..hi).all(|i| allowed(self.at(i), self.at(i + 1)))
    }
}

impl fmt::Debug for BiSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for BiSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = |v: &[Symbol]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "({})^∞@{}[{}]({})^∞", w(&self.left), self.cut, w(&self.center), w(&self.right))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_forms_agree() {
        let a = BiSequence::new(vec![0, 1], -4, vec![0, 1, 1, 0, 0], vec![0]);
        let b = BiSequence::new(vec![0, 1, 0, 1], -2, vec![1, 0], vec![0, 0]);
        for i in -20..20 {
            assert_eq!(a.at(i), b.at(i), "index {i}");
        }
        assert_eq!(a, b);
    }

    #[test]
    fn periodic_points_are_normalized() {
        let a = BiSequence::new(vec![0, 1], 3, vec![1, 0, 1], vec![0, 1]);
        assert!(a.is_periodic());
        assert_eq!(a, BiSequence::periodic(&[0, 1]));
        assert_eq!(a.shift(1), BiSequence::periodic(&[1, 0]));
        assert_eq!(a.shift(2), a);
    }

    #[test]
    fn shift_moves_indices() {
        let a = BiSequence::new(vec![1], -1, vec![0, 1, 0, 0], vec![0]);
        let s = a.shift(3);
        for i in -10..10 {
            assert_eq!(s.at(i), a.at(i + 3));
        }
    }
}
