//! Bisections of the stable and unstable groupoids acting on `ℓ²(X^h(P, Q))`.
//!
//! A stable bisection `(v, w, N, η)` with `v ~_s w` is the set
//! `{(h^s(x), x) : x ∈ X^u(w, η)}` with `h^s(x) = φ^{-N}[φ^N x, φ^N v]`;
//! an unstable one uses `h^u(x) = φ^N[φ^{-N} v, φ^{-N} x]` on `X^s(w, η)`.
//! Bisections carry a value function on the source and an integer shift
//! recording the automorphism `α^shift` already applied.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Debug;

use serde::Serialize;

use crate::dynamics::{HomoclinicSystem, SmaleSpace};
use crate::error::{Error, Result};
use crate::linalg::{ColumnMap, Vector};
use crate::markov::CoveredSystem;
use crate::sample::AperiodicSample;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Orientation {
    Stable,
    Unstable,
}

/// Values `a(h(x), x)` as a function of the source `x`.
#[derive(Clone, Debug)]
pub enum ValueFn<P: Ord> {
    Constant(f64),
    /// `height · (1 - d(x, w) / η)`, positive on the whole domain.
    Bump { height: f64 },
    /// Explicit values; zero at sources not listed.
    Table(BTreeMap<P, f64>),
}

#[derive(Clone, Debug)]
pub struct Bisection<P: Ord> {
    orientation: Orientation,
    v: P,
    w: P,
    n: u32,
    eta: f64,
    value: ValueFn<P>,
    shift: i64,
}

/// Largest `N` tried when searching for a contraction time.
const MAX_CONTRACTION: u32 = 256;

impl<P: Clone + Ord + Debug> Bisection<P> {
    /// Checks `v ~ w` at time `N` and that `η` keeps every bracket in the
    /// holonomy within `ε'_X`.
    pub fn new<S: SmaleSpace<Point = P>>(
        sys: &S,
        orientation: Orientation,
        v: P,
        w: P,
        n: u32,
        eta: f64,
        value: ValueFn<P>,
    ) -> Result<Self> {
        let c = sys.constants();
        if !(eta > 0.0) {
            return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
        }
        let t = match orientation {
            Orientation::Stable => n as i64,
            Orientation::Unstable => -(n as i64),
        };
        let (vn, wn) = (sys.apply(&v, t), sys.apply(&w, t));
        let related = match orientation {
            Orientation::Stable => sys.in_local_stable(&wn, &vn, c.eps_x_prime),
            Orientation::Unstable => sys.in_local_unstable(&wn, &vn, c.eps_x_prime),
        };
        if !related {
            return Err(Error::InvalidArgument(format!("{v:?} and {w:?} are not {orientation:?}ly related at time {n}")));
        }
        if eta * c.lambda.powi(n as i32) + sys.dist(&vn, &wn) > c.eps_x_prime {
            return Err(Error::InvalidArgument(format!("eta {eta} too large for N = {n}")));
        }
        Ok(Bisection { orientation, v, w, n, eta, value, shift: 0 })
    }

    /// Smallest `N` with `φ^{±N} v` within `ε'_X / 2` of `φ^{±N} w` on the
    /// local leaf, and `η = ε'_X / (2 λ^N)`.
    pub fn with_auto_time<S: SmaleSpace<Point = P>>(
        sys: &S,
        orientation: Orientation,
        v: P,
        w: P,
        value: ValueFn<P>,
    ) -> Result<Self> {
        let c = sys.constants();
        let sign = if orientation == Orientation::Stable { 1 } else { -1 };
        for n in 0..=MAX_CONTRACTION {
            let (vn, wn) = (sys.apply(&v, sign * n as i64), sys.apply(&w, sign * n as i64));
            let ok = match orientation {
                Orientation::Stable => sys.in_local_stable(&wn, &vn, c.eps_x_prime / 2.0),
                Orientation::Unstable => sys.in_local_unstable(&wn, &vn, c.eps_x_prime / 2.0),
            };
            if ok {
                let eta = c.eps_x_prime / (2.0 * c.lambda.powi(n as i32));
                return Self::new(sys, orientation, v, w, n, eta, value);
            }
        }
        Err(Error::InvalidArgument(format!("{v:?} and {w:?} are not {orientation:?}ly related")))
    }

    pub fn stable<S: SmaleSpace<Point = P>>(sys: &S, v: P, w: P, value: ValueFn<P>) -> Result<Self> {
        Self::with_auto_time(sys, Orientation::Stable, v, w, value)
    }

    pub fn unstable<S: SmaleSpace<Point = P>>(sys: &S, v: P, w: P, value: ValueFn<P>) -> Result<Self> {
        Self::with_auto_time(sys, Orientation::Unstable, v, w, value)
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn v(&self) -> &P {
        &self.v
    }

    pub fn w(&self) -> &P {
        &self.w
    }

    pub fn time(&self) -> u32 {
        self.n
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn shift(&self) -> i64 {
        self.shift
    }

    pub fn value_fn(&self) -> &ValueFn<P> {
        &self.value
    }

    pub fn with_value(&self, value: ValueFn<P>) -> Self {
        Bisection { value, ..self.clone() }
    }

    /// `α^k` applied to this bisection.
    pub fn alpha(&self, k: i64) -> Self {
        Bisection { shift: self.shift + k, ..self.clone() }
    }

    /// Lipschitz constant of the value function in the source variable.
    pub fn lipschitz<S: SmaleSpace<Point = P>>(&self, sys: &S) -> f64 {
        match &self.value {
            ValueFn::Constant(_) => 0.0,
            ValueFn::Bump { height } => height.abs() / self.eta,
            ValueFn::Table(t) => {
                let mut best = 0.0f64;
                let pts: Vec<(&P, &f64)> = t.iter().collect();
                for (i, (x, a)) in pts.iter().enumerate() {
                    for (y, b) in &pts[i + 1..] {
                        let d = sys.dist(x, y);
                        if d > 0.0 {
                            best = best.max((*a - *b).abs() / d);
                        }
                    }
                }
                best
            }
        }
    }

    /// Source domain of the unshifted holonomy.
    pub fn in_domain<S: SmaleSpace<Point = P>>(&self, sys: &S, x: &P) -> bool {
        match self.orientation {
            Orientation::Stable => sys.in_local_unstable(&self.w, x, self.eta),
            Orientation::Unstable => sys.in_local_stable(&self.w, x, self.eta),
        }
    }

    fn slide<S: SmaleSpace<Point = P>>(&self, sys: &S, x: &P, to: &P) -> Option<P> {
        let n = self.n as i64;
        match self.orientation {
            Orientation::Stable => {
                let b = sys.bracket(&sys.apply(x, n), &sys.apply(to, n))?;
                Some(sys.apply(&b, -n))
            }
            Orientation::Unstable => {
                let b = sys.bracket(&sys.apply(to, -n), &sys.apply(x, -n))?;
                Some(sys.apply(&b, n))
            }
        }
    }

    /// The unshifted holonomy; `None` outside the domain.
    pub fn holonomy<S: SmaleSpace<Point = P>>(&self, sys: &S, x: &P) -> Option<P> {
        if !self.in_domain(sys, x) {
            return None;
        }
        self.slide(sys, x, &self.v)
    }

    /// The source `x` with `holonomy(x) = y`, if any.
    pub fn inverse_holonomy<S: SmaleSpace<Point = P>>(&self, sys: &S, y: &P) -> Option<P> {
        let x = self.slide(sys, y, &self.w)?;
        (self.holonomy(sys, &x).as_ref() == Some(y)).then_some(x)
    }

    fn source_value<S: SmaleSpace<Point = P>>(&self, sys: &S, x: &P) -> f64 {
        match &self.value {
            ValueFn::Constant(c) => *c,
            ValueFn::Bump { height } => height * (1.0 - sys.dist(x, &self.w) / self.eta).max(0.0),
            ValueFn::Table(t) => t.get(x).copied().unwrap_or(0.0),
        }
    }

    /// `a δ_x = value · δ_target` for the shifted bisection, `None` when
    /// the column vanishes.
    pub fn act<S: SmaleSpace<Point = P>>(&self, sys: &S, x: &P) -> Option<(P, f64)> {
        let y = sys.apply(x, -self.shift);
        let z = self.holonomy(sys, &y)?;
        let val = self.source_value(sys, &y);
        (val != 0.0).then(|| (sys.apply(&z, self.shift), val))
    }

    /// `a* δ_y`.
    pub fn act_adjoint<S: SmaleSpace<Point = P>>(&self, sys: &S, y: &P) -> Option<(P, f64)> {
        let t = sys.apply(y, -self.shift);
        let x = self.inverse_holonomy(sys, &t)?;
        let val = self.source_value(sys, &x);
        (val != 0.0).then(|| (sys.apply(&x, self.shift), val))
    }
}

/// Exponent of `u` in the even-coordinate block `(j, j')` of the doubled
/// picture: `j' + ⌊(j - j')/2⌋`.
pub fn block_power(j: i64, jp: i64) -> i64 {
    jp + (j - jp).div_euclid(2)
}

/// The regular representation of a bisection.
pub struct Rep<'a, S: SmaleSpace> {
    pub sys: &'a S,
    pub b: &'a Bisection<S::Point>,
}

impl<S: SmaleSpace> ColumnMap<S::Point, S::Point> for Rep<'_, S> {
    fn column(&self, x: &S::Point) -> Result<Vector<S::Point>> {
        Ok(self.b.act(self.sys, x).into_iter().collect())
    }
}

pub struct RepAdjoint<'a, S: SmaleSpace> {
    pub sys: &'a S,
    pub b: &'a Bisection<S::Point>,
}

impl<S: SmaleSpace> ColumnMap<S::Point, S::Point> for RepAdjoint<'_, S> {
    fn column(&self, x: &S::Point) -> Result<Vector<S::Point>> {
        Ok(self.b.act_adjoint(self.sys, x).into_iter().collect())
    }
}

/// `u^power δ_x = δ_{φ^power x}`.
pub struct Unitary<'a, S: SmaleSpace> {
    pub sys: &'a S,
    pub power: i64,
}

impl<S: SmaleSpace> ColumnMap<S::Point, S::Point> for Unitary<'_, S> {
    fn column(&self, x: &S::Point) -> Result<Vector<S::Point>> {
        Ok([(self.sys.apply(x, self.power), 1.0)].into_iter().collect())
    }
}

/// `outer ∘ inner`.
pub struct Compose<'a, D, M, C> {
    pub outer: &'a dyn ColumnMap<M, C>,
    pub inner: &'a dyn ColumnMap<D, M>,
}

impl<D, M: Ord + Clone, C: Ord + Clone> ColumnMap<D, C> for Compose<'_, D, M, C> {
    fn column(&self, d: &D) -> Result<Vector<C>> {
        self.outer.apply(&self.inner.column(d)?)
    }
}

/// `Σ c_i A_i`.
pub struct Combination<'a, D, C> {
    pub terms: Vec<(f64, &'a dyn ColumnMap<D, C>)>,
}

impl<D, C: Ord + Clone> ColumnMap<D, C> for Combination<'_, D, C> {
    fn column(&self, d: &D) -> Result<Vector<C>> {
        let mut out = Vector::new();
        for (c, a) in &self.terms {
            crate::linalg::axpy(&mut out, *c, &a.column(d)?);
        }
        Ok(out)
    }
}

/// `A ⊗ B` on pairs.
pub struct Tensor<'a, D1, C1, D2, C2> {
    pub left: &'a dyn ColumnMap<D1, C1>,
    pub right: &'a dyn ColumnMap<D2, C2>,
}

impl<D1, C1: Ord + Clone, D2, C2: Ord + Clone> ColumnMap<(D1, D2), (C1, C2)> for Tensor<'_, D1, C1, D2, C2> {
    fn column(&self, d: &(D1, D2)) -> Result<Vector<(C1, C2)>> {
        let l = self.left.column(&d.0)?;
        let r = self.right.column(&d.1)?;
        let mut out = Vector::new();
        for (a, x) in &l {
            for (b, y) in &r {
                out.insert((a.clone(), b.clone()), x * y);
            }
        }
        Ok(out)
    }
}

/// `α_u^{-n}(b) α_s^n(a) u^i`.
pub struct ProductBlock<'a, S: SmaleSpace> {
    pub sys: &'a S,
    pub a: Bisection<S::Point>,
    pub b: Bisection<S::Point>,
    pub i: i64,
}

impl<'a, S: SmaleSpace> ProductBlock<'a, S> {
    pub fn new(sys: &'a S, a: &Bisection<S::Point>, b: &Bisection<S::Point>, n: i64, i: i64) -> Self {
        assert_eq!(a.orientation(), Orientation::Stable);
        assert_eq!(b.orientation(), Orientation::Unstable);
        ProductBlock { sys, a: a.alpha(n), b: b.alpha(-n), i }
    }

    /// `(target, value)` of the single entry of the column at `y`.
    pub fn entry(&self, y: &S::Point) -> Option<(S::Point, f64)> {
        let (z, va) = self.a.act(self.sys, &self.sys.apply(y, self.i))?;
        let (t, vb) = self.b.act(self.sys, &z)?;
        Some((t, va * vb))
    }
}

impl<S: SmaleSpace> ColumnMap<S::Point, S::Point> for ProductBlock<'_, S> {
    fn column(&self, y: &S::Point) -> Result<Vector<S::Point>> {
        Ok(self.entry(y).into_iter().collect())
    }
}

/// Displacement bound for a holonomy at contraction time `n`, measured in
/// powers of `λ` times `ε_X`.
fn displacement_exp(n: u32) -> i64 {
    n as i64
}

/// Every `y` where `B A u^i δ_y` can be nonzero, with `A` stable (applied
/// first) and `B` unstable; both carry their shifts.
pub fn support_stable_first<S: HomoclinicSystem>(
    sys: &S,
    a: &Bisection<S::Point>,
    b: &Bisection<S::Point>,
    i: i64,
) -> Vec<S::Point> {
    let (sa, sb) = (a.shift(), b.shift());
    let s_base = sys.apply(b.w(), sb - i);
    let u_base = sys.apply(a.w(), sa - i);
    let k_s = (i - sb).max(i + displacement_exp(a.time()) - sa).max(0) + 1;
    let k_u = (sa - i).max(0) + 1;
    sys.leaf_intersection(&s_base, k_s, &u_base, k_u)
}

/// Every `y` where `A B u^i δ_y` can be nonzero, with `B` unstable (applied
/// first) and `A` stable.
pub fn support_unstable_first<S: HomoclinicSystem>(
    sys: &S,
    a: &Bisection<S::Point>,
    b: &Bisection<S::Point>,
    i: i64,
) -> Vec<S::Point> {
    let (sa, sb) = (a.shift(), b.shift());
    let s_base = sys.apply(b.w(), sb - i);
    let u_base = sys.apply(a.w(), sa - i);
    let k_s = (i - sb).max(0) + 1;
    let k_u = (sa - i).max(displacement_exp(b.time()) + sb - i).max(0) + 1;
    sys.leaf_intersection(&s_base, k_s, &u_base, k_u)
}

/// Homoclinic points on the stable leaf of `w` within `λ^k ε_X` (any
/// integer `k`), crossing the unstable leaf of `through` within
/// `λ^{k_u} ε_X` after rescaling.
pub fn stable_partners<S: HomoclinicSystem>(sys: &S, w: &S::Point, through: &S::Point, k: i64, k_u: i64) -> Vec<S::Point> {
    let m = (-k).max(0);
    let base = sys.apply(w, -m);
    let t = sys.apply(through, -m);
    sys.leaf_intersection(&base, k + m, &t, k_u).into_iter().map(|p| sys.apply(&p, m)).collect()
}

/// Homoclinic points on the unstable leaf of `w` within `λ^k ε_X`.
pub fn unstable_partners<S: HomoclinicSystem>(sys: &S, w: &S::Point, through: &S::Point, k: i64, k_s: i64) -> Vec<S::Point> {
    let m = (-k).max(0);
    let base = sys.apply(w, m);
    let t = sys.apply(through, m);
    sys.leaf_intersection(&t, k_s, &base, k + m).into_iter().map(|p| sys.apply(&p, -m)).collect()
}

/// How the two bisections of a pair are chained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Link {
    /// `h_b(w_b) = w_a`: `rep(a) rep(b) δ_{w_b} ≠ 0`.
    UnstableFirst,
    /// `w_b = h_a(w_a)`: `rep(b) rep(a) δ_{w_a} ≠ 0`.
    StableFirst,
}

/// Deterministic pairs `(a, b)`, `a` stable and `b` unstable, chained as
/// `link` says, with partners within `λ^k ε_X` of their base points. Each
/// partner is searched where its leaf crosses the transverse leaf of a
/// second enumerated point within `λ^search ε_X`.
pub fn linked_pairs<S: HomoclinicSystem>(
    sys: &S,
    count: usize,
    link: Link,
    k: i64,
    search: i64,
    value_a: ValueFn<S::Point>,
    value_b: ValueFn<S::Point>,
) -> Result<Vec<(Bisection<S::Point>, Bisection<S::Point>)>> {
    let mut out = Vec::new();
    let mut cap = 3;
    while out.len() < count {
        let pts = sys.enumerate_homoclinic(cap);
        out.clear();
        'outer: for (idx, w) in pts.iter().enumerate() {
            for through in pts.iter().skip(idx + 1).chain(pts.iter().take(idx)) {
                let Some(va) = stable_partners(sys, w, through, k, search).into_iter().find(|p| p != w) else { continue };
                let pivot = match link {
                    Link::UnstableFirst => w.clone(),
                    Link::StableFirst => va.clone(),
                };
                let Some(wb) = unstable_partners(sys, &pivot, through, k, search).into_iter().find(|p| *p != pivot) else { continue };
                let (Ok(a), Ok(b)) = (
                    Bisection::stable(sys, va, w.clone(), value_a.clone()),
                    match link {
                        Link::UnstableFirst => Bisection::unstable(sys, pivot, wb, value_b.clone()),
                        Link::StableFirst => Bisection::unstable(sys, wb, pivot, value_b.clone()),
                    },
                ) else {
                    continue;
                };
                out.push((a, b));
                if out.len() == count {
                    break 'outer;
                }
                continue 'outer;
            }
        }
        if cap > 12 {
            return Err(Error::Degenerate(format!("found only {} linked pairs", out.len())));
        }
        cap += 1;
    }
    Ok(out)
}

/// A finite set of basis points of `ℓ²(X^h)` in sorted order.
#[derive(Clone, Debug)]
pub struct BasisWindow<P: Ord> {
    points: Vec<P>,
    index: BTreeMap<P, usize>,
    /// Closure steps that stopped before reaching a fixed point.
    pub truncated: Vec<String>,
}

impl<P: Clone + Ord> BasisWindow<P> {
    pub fn new(points: impl IntoIterator<Item = P>) -> Self {
        let set: BTreeSet<P> = points.into_iter().collect();
        let points: Vec<P> = set.into_iter().collect();
        let index = points.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        BasisWindow { points, index, truncated: Vec::new() }
    }

    pub fn points(&self) -> &[P] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: &P) -> bool {
        self.index.contains_key(p)
    }

    pub fn index_of(&self, p: &P) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn set(&self) -> BTreeSet<P> {
        self.points.iter().cloned().collect()
    }
}

/// Generators for [`build_window`].
pub struct WindowGenerators<'a, S: CoveredSystem> {
    /// `φ^{±1}` applied up to this many times.
    pub phi_depth: u32,
    /// Brackets `[x, g]`, `[g, x]` with the sample points of the cells
    /// containing `x` at these levels.
    pub sample: Option<(&'a AperiodicSample<S>, Vec<u32>)>,
    pub bisections: Vec<&'a Bisection<S::Point>>,
    /// Rounds of bracket and holonomy closure.
    pub rounds: u32,
}

impl<S: CoveredSystem> Default for WindowGenerators<'_, S> {
    fn default() -> Self {
        WindowGenerators { phi_depth: 0, sample: None, bisections: Vec::new(), rounds: 0 }
    }
}

/// Closure of `seed` under the generators, up to `cap` points.
pub fn build_window<S: CoveredSystem>(
    sys: &S,
    seed: &[S::Point],
    gens: &WindowGenerators<'_, S>,
    cap: usize,
) -> Result<BasisWindow<S::Point>> {
    if seed.is_empty() {
        return Err(Error::Degenerate("empty window seed".into()));
    }
    let mut set: BTreeSet<S::Point> = seed.iter().cloned().collect();
    let mut truncated = Vec::new();
    let push = |set: &mut BTreeSet<S::Point>, p: S::Point, what: &str, truncated: &mut Vec<String>| -> bool {
        if set.contains(&p) {
            return false;
        }
        if set.len() >= cap {
            if !truncated.iter().any(|t: &String| t == what) {
                truncated.push(what.to_string());
            }
            return false;
        }
        set.insert(p);
        true
    };
    let mut frontier: Vec<S::Point> = set.iter().cloned().collect();
    for _ in 0..gens.rounds {
        let mut next = Vec::new();
        for x in &frontier {
            let mut images = Vec::new();
            if let Some((sample, levels)) = &gens.sample {
                for &level in levels {
                    for hit in sys.cells_at(x, level) {
                        let g = sample.get(sys, &hit.cell)?;
                        images.extend(sys.bracket(x, &g));
                        images.extend(sys.bracket(&g, x));
                    }
                }
            }
            for b in &gens.bisections {
                images.extend(b.act(sys, x).map(|(t, _)| t));
                images.extend(b.act_adjoint(sys, x).map(|(t, _)| t));
            }
            for p in images {
                if push(&mut set, p.clone(), "brackets", &mut truncated) {
                    next.push(p);
                }
            }
        }
        frontier = next;
    }
    if !frontier.is_empty() && gens.rounds > 0 && (gens.sample.is_some() || !gens.bisections.is_empty()) {
        truncated.push("rounds".into());
    }
    if gens.phi_depth > 0 {
        let mut queue: VecDeque<(S::Point, u32)> = set.iter().cloned().map(|p| (p, 0)).collect();
        while let Some((x, d)) = queue.pop_front() {
            if d == gens.phi_depth {
                continue;
            }
            for s in [-1, 1] {
                let y = sys.apply(&x, s);
                if push(&mut set, y.clone(), "phi", &mut truncated) {
                    queue.push_back((y, d + 1));
                }
            }
        }
    }
    let mut w = BasisWindow::new(set);
    w.truncated = truncated;
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sft::Sft;

    fn stable_pair(sft: &Sft) -> (crate::BiSequence, crate::BiSequence) {
        let pts = sft.enumerate_homoclinic(4);
        for w in &pts {
            for v in &pts {
                if v != w && sft.apply(v, 6).right() == sft.apply(w, 6).right() && sft.apply(v, 6).window(-1, 30) == sft.apply(w, 6).window(-1, 30) {
                    return (v.clone(), w.clone());
                }
            }
        }
        unreachable!()
    }

    #[test]
    fn holonomy_fixes_base_points() {
        let sft = Sft::golden_default();
        let (v, w) = stable_pair(&sft);
        let b = Bisection::stable(&sft, v.clone(), w.clone(), ValueFn::Constant(1.0)).unwrap();
        assert_eq!(b.holonomy(&sft, &w), Some(v.clone()));
        assert_eq!(b.inverse_holonomy(&sft, &v), Some(w.clone()));
        assert_eq!(b.holonomy(&sft, &v.shift(3)), None);
    }

    #[test]
    fn block_power_floors() {
        assert_eq!(block_power(3, 0), 1);
        assert_eq!(block_power(0, 3), 1);
        assert_eq!(block_power(-1, 0), -1);
        assert_eq!(block_power(2, 2), 2);
    }

    #[test]
    fn window_seed_only() {
        let sft = Sft::golden_default();
        let seed = sft.enumerate_homoclinic(2);
        let w = build_window(&sft, &seed, &WindowGenerators::default(), 1000).unwrap();
        assert_eq!(w.points(), BasisWindow::new(seed.clone()).points());
        assert!(w.truncated.is_empty());
    }
}
