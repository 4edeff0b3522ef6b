//! Sampled checks of the bracket axioms and the contraction bounds.
//!
//! Configurations are triples of random points sharing a level-2 cell, so
//! most brackets among them are defined. Only configurations where every
//! bracket in an identity is defined count toward that identity.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::markov::CoveredSystem;
use crate::points::{random_point_with_word, random_word};

#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct Tally {
    pub checked: usize,
    pub violations: usize,
}

impl Tally {
    fn record(&mut self, ok: bool) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct AxiomReport {
    pub configurations: usize,
    /// `[x, x] = x`.
    pub b1: Tally,
    /// `[x, [y, z]] = [x, z]`.
    pub b2: Tally,
    /// `[[x, y], z] = [x, z]`.
    pub b3: Tally,
    /// `φ[x, y] = [φx, φy]`.
    pub b4: Tally,
    /// `d(φy, φz) <= λ^{-1} d(y, z)` on a local stable set.
    pub c1: Tally,
    /// `d(φ^{-1}y, φ^{-1}z) <= λ^{-1} d(y, z)` on a local unstable set.
    pub c2: Tally,
    /// `φ` and `φ^{-1}` are `λ`-Lipschitz on `ε_X`-close pairs.
    pub lipschitz: Tally,
    /// `d(p, [p, q])` and `d(q, [p, q])` below `ε_X / 2` when `d(p, q) <= ε'_X`.
    pub local: Tally,
}

impl AxiomReport {
    pub fn violations(&self) -> usize {
        [&self.b1, &self.b2, &self.b3, &self.b4, &self.c1, &self.c2, &self.lipschitz, &self.local].iter().map(|t| t.violations).sum()
    }

    /// Fewest checks among the bracket identities and contractions.
    pub fn min_checked(&self) -> usize {
        [&self.b1, &self.b2, &self.b3, &self.b4, &self.c1, &self.c2].iter().map(|t| t.checked).min().unwrap_or(0)
    }
}

/// Runs every check on `count` random triples.
pub fn check_axioms<S: CoveredSystem>(sys: &S, count: usize, seed: u64) -> AxiomReport {
    let c = sys.constants();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = sys.coding().word_len(2);
    let mut rep = AxiomReport { configurations: count, ..Default::default() };
    for _ in 0..count {
        let w = random_word(sys.coding(), &mut rng, len);
        let x = random_point_with_word(sys, &mut rng, &w, 1);
        let y = random_point_with_word(sys, &mut rng, &w, 1);
        let z = random_point_with_word(sys, &mut rng, &w, 1);
        rep.b1.record(sys.bracket(&x, &x).as_ref() == Some(&x));
        if let (Some(yz), Some(xz)) = (sys.bracket(&y, &z), sys.bracket(&x, &z)) {
            if let Some(lhs) = sys.bracket(&x, &yz) {
                rep.b2.record(lhs == xz);
            }
        }
        if let (Some(xy), Some(xz)) = (sys.bracket(&x, &y), sys.bracket(&x, &z)) {
            if let Some(lhs) = sys.bracket(&xy, &z) {
                rep.b3.record(lhs == xz);
            }
        }
        if let Some(xy) = sys.bracket(&x, &y) {
            let (fx, fy) = (sys.apply(&x, 1), sys.apply(&y, 1));
            if let Some(rhs) = sys.bracket(&fx, &fy) {
                rep.b4.record(sys.apply(&xy, 1) == rhs);
            }
        }
        if let Some(s) = sys.bracket(&x, &y) {
            if sys.in_local_stable(&x, &s, c.eps_x) && s != x {
                rep.c1.record(sys.dist_le_scaled((&sys.apply(&x, 1), &sys.apply(&s, 1)), (&x, &s), -1));
            }
        }
        if let Some(u) = sys.bracket(&y, &x) {
            if sys.in_local_unstable(&x, &u, c.eps_x) && u != x {
                rep.c2.record(sys.dist_le_scaled((&sys.apply(&x, -1), &sys.apply(&u, -1)), (&x, &u), -1));
            }
        }
        let d = sys.dist(&x, &y);
        if d <= c.eps_x {
            for k in [1, -1] {
                rep.lipschitz.record(sys.dist_le_scaled((&sys.apply(&x, k), &sys.apply(&y, k)), (&x, &y), 1));
            }
        }
        if d <= c.eps_x_prime {
            if let Some(xy) = sys.bracket(&x, &y) {
                rep.local.record(sys.dist(&x, &xy) < c.eps_x / 2.0 && sys.dist(&y, &xy) < c.eps_x / 2.0);
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sft::Sft;

    #[test]
    fn golden_shift_has_no_violations() {
        let rep = check_axioms(&Sft::golden_default(), 200, 1);
        assert_eq!(rep.violations(), 0, "{rep:?}");
        assert!(rep.min_checked() > 0);
    }
}
