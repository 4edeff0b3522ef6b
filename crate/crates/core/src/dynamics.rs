//! The contract shared by every concrete Smale space.

use std::fmt::Debug;
use std::hash::Hash;

use serde::Serialize;

/// Numerical constants of a self-similar Smale space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Constants {
    pub lambda: f64,
    pub eps_x: f64,
    pub eps_x_prime: f64,
    pub entropy: f64,
}

/// Relative slack of the float metric comparisons.
pub const METRIC_SLACK: f64 = 1e-12;

/// A self-similar Smale space `(X, d, φ)` with its bracket.
///
/// Points are exact canonical forms: two representations are equal iff they
/// denote the same point, and `Ord` is a total order used for deterministic
/// enumeration.
pub trait SmaleSpace {
    type Point: Clone + Eq + Ord + Hash + Debug + Send + Sync;

    fn constants(&self) -> Constants;

    /// `φ^power(p)`.
    fn apply(&self, p: &Self::Point, power: i64) -> Self::Point;

    fn dist(&self, p: &Self::Point, q: &Self::Point) -> f64;

    /// Exact test of `d(p, q) < eps`.
    fn dist_lt(&self, p: &Self::Point, q: &Self::Point, eps: f64) -> bool;

    /// Exact test of `d(p, q) <= eps`.
    fn dist_le(&self, p: &Self::Point, q: &Self::Point, eps: f64) -> bool;

    /// `d(a.0, a.1) <= λ^k d(b.0, b.1)`. Exact backends override the float
    /// comparison.
    fn dist_le_scaled(&self, a: (&Self::Point, &Self::Point), b: (&Self::Point, &Self::Point), k: i32) -> bool {
        self.dist(a.0, a.1) <= self.constants().lambda.powi(k) * self.dist(b.0, b.1) * (1.0 + METRIC_SLACK)
    }

    /// `[p, q]`, or `None` when `d(p, q) > ε_X`.
    fn bracket(&self, p: &Self::Point, q: &Self::Point) -> Option<Self::Point>;

    fn in_local_stable(&self, base: &Self::Point, p: &Self::Point, eps: f64) -> bool {
        self.dist_lt(base, p, eps) && self.bracket(p, base).as_ref() == Some(base)
    }

    fn in_local_unstable(&self, base: &Self::Point, p: &Self::Point, eps: f64) -> bool {
        self.dist_lt(base, p, eps) && self.bracket(base, p).as_ref() == Some(base)
    }
}

/// A Smale space together with two disjoint periodic orbits `P`, `Q` and exact
/// access to the homoclinic set `X^s(P) ∩ X^u(Q)`.
pub trait HomoclinicSystem: SmaleSpace {
    /// Points of `P` in orbit order.
    fn p_points(&self) -> Vec<Self::Point>;

    /// Points of `Q` in orbit order.
    fn q_points(&self) -> Vec<Self::Point>;

    /// All homoclinic points up to a complexity cap, in a fixed total order.
    /// The list for cap `k` is a prefix of the list for cap `k + 1`.
    fn enumerate_homoclinic(&self, cap: usize) -> Vec<Self::Point>;

    fn is_homoclinic(&self, x: &Self::Point) -> bool;

    /// A canonical representative `y` of the orbit of `x` together with the
    /// power `k` such that `φ^k(x) = y`. Two homoclinic points share an orbit
    /// iff their representatives agree.
    fn orbit_normal_form(&self, x: &Self::Point) -> Option<(Self::Point, i64)>;

    /// All points of
    /// `φ^{-k_s}(X^s(φ^{k_s} s_base, ε_X)) ∩ φ^{k_u}(X^u(φ^{-k_u} u_base, ε_X))`,
    /// sorted. Requires `k_s, k_u >= 0`.
    fn leaf_intersection(
        &self,
        s_base: &Self::Point,
        k_s: i64,
        u_base: &Self::Point,
        k_u: i64,
    ) -> Vec<Self::Point>;
}
