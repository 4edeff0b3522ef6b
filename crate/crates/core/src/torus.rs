//! Hyperbolic automorphisms of the 2-torus with exact coordinates in Q(√D).
//!
//! Distances are measured in eigen-coordinates: `d(x, y)` is the minimum over
//! lattice translates `m` of `max(|u(x-y-m)|, |s(x-y-m)|)`, where
//! `w = u·v_u + s·v_s`. With this metric the map is exactly self-similar.

use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::dynamics::{Constants, HomoclinicSystem, SmaleSpace};
use crate::error::{Error, Result};
use crate::markov::{Cell, CellHit, Coding, CoveredSystem};
use crate::quad::QuadNumber;
use crate::word::{BiSequence, Symbol};

type Q = QuadNumber;

/// A point of `R²/Z²` with coordinates reduced to `[0, 1)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TorusPoint {
    x: Q,
    y: Q,
}

impl TorusPoint {
    pub fn new(x: Q, y: Q) -> Self {
        TorusPoint { x: x.frac(), y: y.frac() }
    }

    pub fn origin() -> Self {
        TorusPoint { x: Q::zero(), y: Q::zero() }
    }

    pub fn rational(xn: i64, xd: i64, yn: i64, yd: i64) -> Self {
        Self::new(Q::from_ratio(xn, xd), Q::from_ratio(yn, yd))
    }

    pub fn x(&self) -> &Q {
        &self.x
    }

    pub fn y(&self) -> &Q {
        &self.y
    }

    pub fn to_f64(&self) -> [f64; 2] {
        [self.x.to_f64(), self.y.to_f64()]
    }

    fn translate(&self, w: &[Q; 2]) -> Self {
        TorusPoint::new(&self.x + &w[0], &self.y + &w[1])
    }
}

impl fmt::Debug for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

fn squarefree_part(n: i64) -> (i64, u32) {
    // n = f² · D with D square-free.
    let mut f = 1i64;
    let mut d = n;
    let mut p = 2i64;
    while p * p <= d {
        while d % (p * p) == 0 {
            d /= p * p;
            f *= p;
        }
        p += 1;
    }
    (f, d as u32)
}

const POWER_CACHE: usize = 320;

/// A hyperbolic toral automorphism with exact eigen-data.
#[derive(Clone, Debug)]
pub struct TorusModel {
    matrix: [[i64; 2]; 2],
    d: u32,
    mu_u: Q,
    mu_s: Q,
    lambda: Q,
    v_u: [Q; 2],
    v_s: [Q; 2],
    /// Rows giving `u` and `s` of a vector.
    chart: [[Q; 2]; 2],
    chart_f: [[f64; 2]; 2],
    eps_x: Q,
    eps_x_prime: Q,
    search_radius: i64,
    powers: Vec<[[Q; 2]; 2]>,
    inverse_powers: Vec<[[Q; 2]; 2]>,
}

fn mat_mul(a: &[[Q; 2]; 2], b: &[[Q; 2]; 2]) -> [[Q; 2]; 2] {
    let e = |i: usize, j: usize| &a[i][0] * &b[0][j] + &a[i][1] * &b[1][j];
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

fn int_mat(m: [[i64; 2]; 2]) -> [[Q; 2]; 2] {
    [[Q::from_int(m[0][0]), Q::from_int(m[0][1])], [Q::from_int(m[1][0]), Q::from_int(m[1][1])]]
}

impl TorusModel {
    pub fn new(matrix: [[i64; 2]; 2]) -> Result<Self> {
        let [[a, b], [c, dd]] = matrix;
        let det = a * dd - b * c;
        if det != 1 && det != -1 {
            return Err(Error::InvalidMatrix(format!("determinant {det} is not ±1")));
        }
        let tr = a + dd;
        let disc = tr * tr - 4 * det;
        let hyperbolic = if det == 1 { tr.abs() > 2 } else { tr != 0 };
        if !hyperbolic {
            return Err(Error::NotHyperbolic(format!("trace {tr}, determinant {det}")));
        }
        let (f, d) = squarefree_part(disc);
        if d == 1 {
            return Err(Error::NotHyperbolic("rational eigenvalues".into()));
        }
        let root = &Q::from_int(f) * &Q::sqrt_d(d);
        let half = Q::from_ratio(1, 2);
        let t = Q::from_int(tr);
        let sign = if tr > 0 { Q::one() } else { -Q::one() };
        let mu_u = &(&t + &(&sign * &root)) * &half;
        let mu_s = &(&t - &(&sign * &root)) * &half;
        let lambda = mu_u.abs();
        let eigvec = |mu: &Q| -> [Q; 2] {
            if b != 0 {
                [Q::from_int(b), mu - &Q::from_int(a)]
            } else {
                [mu - &Q::from_int(dd), Q::from_int(c)]
            }
        };
        let v_u = eigvec(&mu_u);
        let v_s = eigvec(&mu_s);
        let bdet = &(&v_u[0] * &v_s[1]) - &(&v_s[0] * &v_u[1]);
        let chart = [
            [&v_s[1] / &bdet, -(&v_s[0] / &bdet)],
            [-(&v_u[1] / &bdet), &v_u[0] / &bdet],
        ];
        let chart_f = [
            [chart[0][0].to_f64(), chart[0][1].to_f64()],
            [chart[1][0].to_f64(), chart[1][1].to_f64()],
        ];
        let m = int_mat(matrix);
        let minv = int_mat([[dd * det, -b * det], [-c * det, a * det]]);
        let mut powers = vec![int_mat([[1, 0], [0, 1]])];
        let mut inverse_powers = vec![int_mat([[1, 0], [0, 1]])];
        for k in 1..=POWER_CACHE {
            powers.push(mat_mul(&powers[k - 1], &m));
            inverse_powers.push(mat_mul(&inverse_powers[k - 1], &minv));
        }
        let mut model = TorusModel {
            matrix,
            d,
            mu_u,
            mu_s,
            lambda,
            v_u,
            v_s,
            chart,
            chart_f,
            eps_x: Q::zero(),
            eps_x_prime: Q::zero(),
            search_radius: 0,
            powers,
            inverse_powers,
        };
        model.search_radius = model.compute_search_radius();
        // ε_X = (1/4) min over nonzero lattice vectors of the chart norm.
        let mut best: Option<Q> = None;
        for m1 in -6i64..=6 {
            for m2 in -6i64..=6 {
                if m1 == 0 && m2 == 0 {
                    continue;
                }
                let n = model.chart_norm(&[Q::from_int(m1), Q::from_int(m2)]);
                if best.as_ref().is_none_or(|b| n < *b) {
                    best = Some(n);
                }
            }
        }
        model.eps_x = &best.unwrap() * &Q::from_ratio(1, 4);
        model.eps_x_prime = &model.eps_x * &Q::from_ratio(1, 4);
        Ok(model)
    }

    pub fn golden() -> Self {
        Self::new([[1, 1], [1, 0]]).expect("golden automorphism")
    }

    pub fn cat() -> Self {
        Self::new([[2, 1], [1, 1]]).expect("cat map")
    }

    fn compute_search_radius(&self) -> i64 {
        let nf = |w: [f64; 2]| {
            let (u, s) = self.coords_f(w);
            u.abs().max(s.abs())
        };
        let cmax = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]].iter().map(|&w| nf(w)).fold(0.0, f64::max);
        let mut cmin = f64::INFINITY;
        for k in 0..=4000 {
            let t = -1.0 + k as f64 / 2000.0;
            for w in [[1.0, t], [-1.0, t], [t, 1.0], [t, -1.0]] {
                cmin = cmin.min(nf(w));
            }
        }
        (0.5 * cmax / (0.9 * cmin)).ceil() as i64 + 1
    }

    pub fn matrix(&self) -> [[i64; 2]; 2] {
        self.matrix
    }

    pub fn radicand(&self) -> u32 {
        self.d
    }

    pub fn lambda_exact(&self) -> &Q {
        &self.lambda
    }

    pub fn mu_u(&self) -> &Q {
        &self.mu_u
    }

    pub fn mu_s(&self) -> &Q {
        &self.mu_s
    }

    pub fn v_u(&self) -> &[Q; 2] {
        &self.v_u
    }

    pub fn v_s(&self) -> &[Q; 2] {
        &self.v_s
    }

    pub fn eps_x_exact(&self) -> &Q {
        &self.eps_x
    }

    pub fn eps_x_prime_exact(&self) -> &Q {
        &self.eps_x_prime
    }

    pub fn entropy(&self) -> f64 {
        self.lambda.to_f64().ln()
    }

    pub fn constants(&self) -> Constants {
        Constants {
            lambda: self.lambda.to_f64(),
            eps_x: self.eps_x.to_f64(),
            eps_x_prime: self.eps_x_prime.to_f64(),
            entropy: self.entropy(),
        }
    }

    /// Eigen-coordinates `(u, s)` of a plane vector.
    pub fn coords(&self, w: &[Q; 2]) -> (Q, Q) {
        let u = &(&self.chart[0][0] * &w[0]) + &(&self.chart[0][1] * &w[1]);
        let s = &(&self.chart[1][0] * &w[0]) + &(&self.chart[1][1] * &w[1]);
        (u, s)
    }

    pub fn coords_f(&self, w: [f64; 2]) -> (f64, f64) {
        (
            self.chart_f[0][0] * w[0] + self.chart_f[0][1] * w[1],
            self.chart_f[1][0] * w[0] + self.chart_f[1][1] * w[1],
        )
    }

    /// The plane vector `u·v_u + s·v_s`.
    pub fn vector(&self, u: &Q, s: &Q) -> [Q; 2] {
        [&(u * &self.v_u[0]) + &(s * &self.v_s[0]), &(u * &self.v_u[1]) + &(s * &self.v_s[1])]
    }

    fn chart_norm(&self, w: &[Q; 2]) -> Q {
        let (u, s) = self.coords(w);
        u.abs().max(s.abs())
    }

    fn power_matrix(&self, k: i64) -> [[Q; 2]; 2] {
        let n = k.unsigned_abs() as usize;
        let table = if k >= 0 { &self.powers } else { &self.inverse_powers };
        if n < table.len() {
            return table[n].clone();
        }
        let mut acc = table[0].clone();
        let step = &table[table.len() - 1];
        let mut left = n;
        while left >= table.len() {
            acc = mat_mul(&acc, step);
            left -= table.len() - 1;
        }
        mat_mul(&acc, &table[left])
    }

    /// The linear map `M^k` applied to a plane vector, without reduction.
    pub fn apply_linear(&self, w: &[Q; 2], k: i64) -> [Q; 2] {
        let m = self.power_matrix(k);
        [&(&m[0][0] * &w[0]) + &(&m[0][1] * &w[1]), &(&m[1][0] * &w[0]) + &(&m[1][1] * &w[1])]
    }

    pub fn apply(&self, p: &TorusPoint, k: i64) -> TorusPoint {
        if k == 0 {
            return p.clone();
        }
        let w = self.apply_linear(&[p.x.clone(), p.y.clone()], k);
        TorusPoint::new(w[0].clone(), w[1].clone())
    }

    /// Minimal lattice representative of `q - p`: returns the plane vector,
    /// its eigen-coordinates, and whether the minimum is attained twice.
    fn displacement(&self, p: &TorusPoint, q: &TorusPoint) -> ([Q; 2], Q, Q, bool) {
        let dx = &q.x - &p.x;
        let dy = &q.y - &p.y;
        let df = [dx.to_f64(), dy.to_f64()];
        let r = self.search_radius;
        let mut cands: Vec<(f64, i64, i64)> = Vec::new();
        let mut best = f64::INFINITY;
        for m1 in -r..=r {
            for m2 in -r..=r {
                let (u, s) = self.coords_f([df[0] - m1 as f64, df[1] - m2 as f64]);
                let n = u.abs().max(s.abs());
                best = best.min(n);
                cands.push((n, m1, m2));
            }
        }
        let mut exact: Option<([Q; 2], Q, Q, Q)> = None;
        let mut tie = false;
        for (n, m1, m2) in cands {
            if n > best + 1e-9 {
                continue;
            }
            let w = [&dx - &Q::from_int(m1), &dy - &Q::from_int(m2)];
            let (u, s) = self.coords(&w);
            let nn = u.abs().max(s.abs());
            match &exact {
                None => exact = Some((w, u, s, nn)),
                Some((_, _, _, bn)) => match nn.cmp(bn) {
                    std::cmp::Ordering::Less => {
                        exact = Some((w, u, s, nn));
                        tie = false;
                    }
                    std::cmp::Ordering::Equal => tie = true,
                    std::cmp::Ordering::Greater => {}
                },
            }
        }
        let (w, u, s, _) = exact.expect("nonempty candidate set");
        (w, u, s, tie)
    }

    pub fn dist_exact(&self, p: &TorusPoint, q: &TorusPoint) -> Q {
        if p == q {
            return Q::zero();
        }
        let (_, u, s, _) = self.displacement(p, q);
        u.abs().max(s.abs())
    }

    /// Eigen-coordinates of `p - near` at the nearest lattice translate.
    pub fn eigen_coords(&self, p: &TorusPoint, near: &TorusPoint) -> Result<(Q, Q)> {
        let (_, u, s, tie) = self.displacement(near, p);
        if tie {
            return Err(Error::Degenerate(format!("{p} is equidistant from two translates of {near}")));
        }
        Ok((u, s))
    }

    /// `[p, q]`: the point with the unstable coordinate of `p` and the stable
    /// coordinate of `q` in a chart around `p`.
    pub fn bracket(&self, p: &TorusPoint, q: &TorusPoint) -> Option<TorusPoint> {
        let (_, u, s, _) = self.displacement(p, q);
        if u.abs().max(s.abs()) > self.eps_x {
            return None;
        }
        let _ = u;
        Some(p.translate(&self.vector(&Q::zero(), &s)))
    }

    /// Orbit of a point, in order, up to `cap` points.
    pub fn orbit(&self, p: &TorusPoint, cap: usize) -> Result<Vec<TorusPoint>> {
        let mut out = vec![p.clone()];
        let mut cur = self.apply(p, 1);
        while &cur != p {
            if out.len() >= cap {
                return Err(Error::InvalidOrbit(format!("{p} is not periodic within {cap} steps")));
            }
            out.push(cur.clone());
            cur = self.apply(&cur, 1);
        }
        Ok(out)
    }
}

/// A rectangle of the base partition: a box in the eigen-chart at `chart`.
#[derive(Clone, Debug)]
pub struct BaseBox {
    pub chart: TorusPoint,
    pub u: (Q, Q),
    pub s: (Q, Q),
}

/// Affine chart change along an allowed transition `a -> b`:
/// `u' = o_u + μ_u u`, `s' = o_s + μ_s s`.
#[derive(Clone, Debug)]
struct Transition {
    o_u: Q,
    o_s: Q,
}

/// The enlarged Markov covers of a toral automorphism.
#[derive(Clone, Debug)]
pub struct TorusCover {
    boxes: Vec<BaseBox>,
    trans: Vec<Vec<Option<Transition>>>,
    preds: Vec<Vec<Symbol>>,
    coding: Coding,
    delta: Q,
    theta: Q,
    max_side: Q,
    min_side: Q,
    mu_u: Q,
    mu_s: Q,
    lambda: Q,
    edge_refined: bool,
    boxes_f: Vec<[f64; 4]>,
    trans_f: Vec<Vec<Option<(f64, f64)>>>,
}

/// Float cell location is trusted only up to this depth; beyond it the
/// expansion amplifies rounding past the comparison tolerance.
const FLOAT_DEPTH: i64 = 24;
const FLOAT_TOL: f64 = 1e-9;

fn interval(a: Q, b: Q) -> (Q, Q) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl TorusCover {
    /// The two-rectangle partition, refined to a 0-1 transition graph,
    /// pre-refined until the enlarged level-1 boxes have diameter at most
    /// `ε'_X`, then enlarged by `delta` (default: one eighth of the smallest
    /// level-1 side).
    pub fn new(model: &TorusModel, delta: Option<f64>) -> Result<Self> {
        let mut last_err = None;
        for (f1, f2) in candidate_bases(model) {
            match Self::from_basis(model, &f1, &f2, delta) {
                Ok(c) => return Ok(c),
                Err(e @ Error::DeltaTooLarge { .. }) => return Err(e),
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.unwrap_or_else(|| Error::Degenerate("no lattice basis yields a Markov partition".into())))
    }

    fn from_basis(model: &TorusModel, f1: &[Q; 2], f2: &[Q; 2], delta: Option<f64>) -> Result<Self> {
        let (a, b) = model.coords(f1);
        let (mc, d) = model.coords(f2);
        let c = -mc;
        let big_a = BaseBox { chart: TorusPoint::origin(), u: (Q::zero(), a.clone()), s: (Q::zero(), d.clone()) };
        let shift = model.vector(&a, &Q::zero());
        let big_b = BaseBox { chart: TorusPoint::origin().translate(&shift), u: (Q::zero(), c), s: (Q::zero(), b) };
        let boxes = vec![big_a, big_b];
        let comps = transitions_between(model, &boxes)?;
        let multi = comps.iter().any(|row| row.iter().any(|v| v.len() > 1));
        let (base, trans) = if multi { edge_refine(model, &boxes, &comps) } else { plain(&comps, &boxes) };
        let k = base.len();
        let allowed: Vec<Vec<bool>> = trans.iter().map(|row| row.iter().map(|t| t.is_some()).collect()).collect();
        let mut preds = vec![Vec::new(); k];
        for (i, row) in allowed.iter().enumerate() {
            for (j, &ok) in row.iter().enumerate() {
                if ok {
                    preds[j].push(i as Symbol);
                }
            }
        }
        let sides: Vec<Q> = base.iter().flat_map(|bx| [&bx.u.1 - &bx.u.0, &bx.s.1 - &bx.s.0]).collect();
        let max_side = sides.iter().cloned().max().unwrap();
        let min_side = sides.iter().cloned().min().unwrap();
        let lambda = model.lambda.clone();
        let eps_p = model.eps_x_prime.clone();
        let (radius, delta_q) = match delta {
            None => {
                let factor = &max_side + &(&min_side * &Q::from_ratio(1, 4));
                let mut r = 0u32;
                while &factor * &lambda.powi(-(r as i64)) > eps_p {
                    r += 1;
                }
                (r, &(&min_side * &lambda.powi(-(r as i64))) * &Q::from_ratio(1, 8))
            }
            Some(dl) => {
                if !(dl >= 0.0) {
                    return Err(Error::InvalidArgument(format!("delta {dl} must be nonnegative")));
                }
                let dq = Q::from_f64(dl);
                let two_d = &dq * &Q::from_int(2);
                if two_d >= eps_p {
                    return Err(Error::DeltaTooLarge { delta: dl, diam: two_d.to_f64(), bound: eps_p.to_f64() });
                }
                let mut r = 0u32;
                while &(&max_side * &lambda.powi(-(r as i64))) + &two_d > eps_p {
                    r += 1;
                }
                (r, dq)
            }
        };
        let theta = &(&max_side * &lambda.powi(-(radius as i64))) + &(&delta_q * &Q::from_int(2));
        let boxes_f = base.iter().map(|b| [b.u.0.to_f64(), b.u.1.to_f64(), b.s.0.to_f64(), b.s.1.to_f64()]).collect();
        let trans_f = trans
            .iter()
            .map(|row| row.iter().map(|t| t.as_ref().map(|t| (t.o_u.to_f64(), t.o_s.to_f64()))).collect())
            .collect();
        Ok(TorusCover {
            boxes: base,
            trans,
            preds,
            coding: Coding::new(allowed, radius),
            delta: delta_q,
            theta,
            max_side,
            min_side,
            mu_u: model.mu_u.clone(),
            mu_s: model.mu_s.clone(),
            lambda,
            edge_refined: multi,
            boxes_f,
            trans_f,
        })
    }

    pub fn coding(&self) -> &Coding {
        &self.coding
    }

    pub fn base_boxes(&self) -> &[BaseBox] {
        &self.boxes
    }

    pub fn delta(&self) -> f64 {
        self.delta.to_f64()
    }

    pub fn delta_exact(&self) -> &Q {
        &self.delta
    }

    pub fn theta(&self) -> f64 {
        self.theta.to_f64()
    }

    /// Longest side of a base rectangle.
    pub fn max_base_side(&self) -> f64 {
        self.max_side.to_f64()
    }

    pub fn is_edge_refined(&self) -> bool {
        self.edge_refined
    }

    /// Smallest side of a level-1 box.
    pub fn min_level1_side(&self) -> f64 {
        (&self.min_side * &self.lambda.powi(-(self.coding.radius() as i64))).to_f64()
    }

    fn trans(&self, a: Symbol, b: Symbol) -> &Transition {
        self.trans[a as usize][b as usize].as_ref().expect("allowed transition")
    }

    fn margin(&self, level: u32) -> Q {
        &self.delta * &self.lambda.powi(-(level as i64 - 1))
    }

    fn inside(&self, v: &Q, lo: &Q, hi: &Q, pad: &Q) -> bool {
        if self.delta.is_zero() {
            v >= lo && v <= hi
        } else {
            v > &(lo - pad) && v < &(hi + pad)
        }
    }

    /// Lifts of `x` into the enlarged base box `a`, as chart coordinates.
    fn lifts(&self, model: &TorusModel, x: &TorusPoint, a: Symbol, pad: &Q) -> Vec<(Q, Q)> {
        let bx = &self.boxes[a as usize];
        let dx = &x.x - &bx.chart.x;
        let dy = &x.y - &bx.chart.y;
        let df = [dx.to_f64(), dy.to_f64()];
        let (ulo, uhi) = (bx.u.0.to_f64(), bx.u.1.to_f64());
        let (slo, shi) = (bx.s.0.to_f64(), bx.s.1.to_f64());
        let padf = pad.to_f64() + 1e-9;
        let mut out = Vec::new();
        for m1 in -3i64..=3 {
            for m2 in -3i64..=3 {
                let (u, s) = model.coords_f([df[0] + m1 as f64, df[1] + m2 as f64]);
                if u < ulo - padf || u > uhi + padf || s < slo - padf || s > shi + padf {
                    continue;
                }
                let (u, s) = model.coords(&[&dx + &Q::from_int(m1), &dy + &Q::from_int(m2)]);
                if self.inside(&u, &bx.u.0, &bx.u.1, pad) && self.inside(&s, &bx.s.0, &bx.s.1, pad) {
                    out.push((u, s));
                }
            }
        }
        out
    }

    fn forward(&self, a: Symbol, u: Q, steps: i64, pad: Q, path: &mut Vec<Symbol>, out: &mut Vec<(Vec<Symbol>, Q)>) {
        if steps == 0 {
            let bx = &self.boxes[a as usize];
            let m = (&u - &(&bx.u.0 - &pad)).min(&(&bx.u.1 + &pad) - &u);
            out.push((path.clone(), m));
            return;
        }
        let pad2 = &pad * &self.lambda;
        for b in self.coding.successors(a).collect::<Vec<_>>() {
            let t = self.trans(a, b);
            let u2 = &t.o_u + &(&self.mu_u * &u);
            let bx = &self.boxes[b as usize];
            if self.inside(&u2, &bx.u.0, &bx.u.1, &pad2) {
                path.push(b);
                self.forward(b, u2, steps - 1, pad2.clone(), path, out);
                path.pop();
            }
        }
    }

    fn backward(&self, a: Symbol, s: Q, steps: i64, pad: Q, path: &mut Vec<Symbol>, out: &mut Vec<(Vec<Symbol>, Q)>) {
        if steps == 0 {
            let bx = &self.boxes[a as usize];
            let m = (&s - &(&bx.s.0 - &pad)).min(&(&bx.s.1 + &pad) - &s);
            out.push((path.clone(), m));
            return;
        }
        let pad2 = &pad * &self.lambda;
        for &p in &self.preds[a as usize] {
            let t = self.trans(p, a);
            let s2 = &(&s - &t.o_s) / &self.mu_s;
            let bx = &self.boxes[p as usize];
            if self.inside(&s2, &bx.s.0, &bx.s.1, &pad2) {
                path.push(p);
                self.backward(p, s2, steps - 1, pad2.clone(), path, out);
                path.pop();
            }
        }
    }

    /// All level-`n` cells containing `x`, with margins. Membership is
    /// exact: the float path gives up whenever a comparison is within
    /// tolerance of a boundary and the exact path takes over.
    pub fn cells_at(&self, model: &TorusModel, x: &TorusPoint, level: u32) -> Vec<CellHit> {
        if level == 0 {
            return vec![CellHit { cell: Cell::whole_space(), margin: f64::INFINITY }];
        }
        if self.coding.half_width(level) <= FLOAT_DEPTH {
            if let Some(hits) = self.cells_at_f(model, x, level) {
                return hits;
            }
        }
        self.cells_at_exact(model, x, level)
    }

    /// Same as `cells_at` but always in exact arithmetic.
    pub fn cells_at_exact(&self, model: &TorusModel, x: &TorusPoint, level: u32) -> Vec<CellHit> {
        if level == 0 {
            return vec![CellHit { cell: Cell::whole_space(), margin: f64::INFINITY }];
        }
        let n = self.coding.half_width(level);
        let pad = self.margin(level);
        let scale = self.lambda.powi(-n);
        let mut hits: Vec<(Cell, Q)> = Vec::new();
        for a in 0..self.boxes.len() as Symbol {
            for (u, s) in self.lifts(model, x, a, &pad) {
                let mut fwd = Vec::new();
                let mut bwd = Vec::new();
                self.forward(a, u, n, pad.clone(), &mut Vec::new(), &mut fwd);
                if fwd.is_empty() {
                    continue;
                }
                self.backward(a, s, n, pad.clone(), &mut Vec::new(), &mut bwd);
                for (bw, bm) in &bwd {
                    for (fw, fm) in &fwd {
                        let mut word: Vec<Symbol> = bw.iter().rev().cloned().collect();
                        word.push(a);
                        word.extend_from_slice(fw);
                        let m = &fm.clone().min(bm.clone()) * &scale;
                        hits.push((Cell { level, word }, m));
                    }
                }
            }
        }
        hits.sort_by(|a, b| a.0.cmp(&b.0));
        hits.dedup_by(|a, b| a.0 == b.0);
        hits.into_iter().map(|(cell, m)| CellHit { cell, margin: m.to_f64() }).collect()
    }

    fn cells_at_f(&self, model: &TorusModel, x: &TorusPoint, level: u32) -> Option<Vec<CellHit>> {
        let n = self.coding.half_width(level);
        let pad = self.margin(level).to_f64();
        let lam = self.lambda.to_f64();
        let mu = (self.mu_u.to_f64(), self.mu_s.to_f64());
        let scale = lam.powi(-(n as i32));
        let xf = x.to_f64();
        let mut hits: Vec<CellHit> = Vec::new();
        for a in 0..self.boxes.len() {
            let [u0, u1, s0, s1] = self.boxes_f[a];
            let cf = [self.boxes[a].chart.x.to_f64(), self.boxes[a].chart.y.to_f64()];
            for m1 in -3i64..=3 {
                for m2 in -3i64..=3 {
                    let (u, s) = model.coords_f([xf[0] - cf[0] + m1 as f64, xf[1] - cf[1] + m2 as f64]);
                    let iu = side_test(u, u0, u1, pad)?;
                    let is = side_test(s, s0, s1, pad)?;
                    if iu.is_none() || is.is_none() {
                        continue;
                    }
                    let mut fwd = Vec::new();
                    self.forward_f(a, u, n, pad, lam, mu.0, &mut Vec::new(), &mut fwd)?;
                    if fwd.is_empty() {
                        continue;
                    }
                    let mut bwd = Vec::new();
                    self.backward_f(a, s, n, pad, lam, mu.1, &mut Vec::new(), &mut bwd)?;
                    for (bw, bm) in &bwd {
                        for (fw, fm) in &fwd {
                            let mut word: Vec<Symbol> = bw.iter().rev().cloned().collect();
                            word.push(a as Symbol);
                            word.extend_from_slice(fw);
                            hits.push(CellHit { cell: Cell { level, word }, margin: fm.min(*bm) * scale });
                        }
                    }
                }
            }
        }
        hits.sort_by(|a, b| a.cell.cmp(&b.cell));
        hits.dedup_by(|a, b| a.cell == b.cell);
        Some(hits)
    }

    #[allow(clippy::too_many_arguments)]
    fn forward_f(
        &self,
        a: usize,
        u: f64,
        steps: i64,
        pad: f64,
        lam: f64,
        mu: f64,
        path: &mut Vec<Symbol>,
        out: &mut Vec<(Vec<Symbol>, f64)>,
    ) -> Option<()> {
        if steps == 0 {
            let [u0, u1, _, _] = self.boxes_f[a];
            out.push((path.clone(), (u - (u0 - pad)).min(u1 + pad - u)));
            return Some(());
        }
        let pad2 = pad * lam;
        for (b, t) in self.trans_f[a].iter().enumerate() {
            if let Some((o_u, _)) = t {
                let u2 = o_u + mu * u;
                let [u0, u1, _, _] = self.boxes_f[b];
                if side_test(u2, u0, u1, pad2)?.is_some() {
                    path.push(b as Symbol);
                    self.forward_f(b, u2, steps - 1, pad2, lam, mu, path, out)?;
                    path.pop();
                }
            }
        }
        Some(())
    }

    #[allow(clippy::too_many_arguments)]
    fn backward_f(
        &self,
        a: usize,
        s: f64,
        steps: i64,
        pad: f64,
        lam: f64,
        mu: f64,
        path: &mut Vec<Symbol>,
        out: &mut Vec<(Vec<Symbol>, f64)>,
    ) -> Option<()> {
        if steps == 0 {
            let [_, _, s0, s1] = self.boxes_f[a];
            out.push((path.clone(), (s - (s0 - pad)).min(s1 + pad - s)));
            return Some(());
        }
        let pad2 = pad * lam;
        for &p in &self.preds[a] {
            let (_, o_s) = self.trans_f[p as usize][a].expect("allowed transition");
            let s2 = (s - o_s) / mu;
            let [_, _, s0, s1] = self.boxes_f[p as usize];
            if side_test(s2, s0, s1, pad2)?.is_some() {
                path.push(p);
                self.backward_f(p as usize, s2, steps - 1, pad2, lam, mu, path, out)?;
                path.pop();
            }
        }
        Some(())
    }

    pub fn level_diam(&self, level: u32) -> Q {
        if level == 0 {
            return Q::from_int(1);
        }
        &self.theta * &self.lambda.powi(-(level as i64 - 1))
    }

    pub fn level_margin(&self, level: u32) -> Q {
        self.margin(level)
    }

    /// Chart coordinates of the point with the given itinerary, relative to
    /// the chart of the symbol at position 0.
    fn decode_coords(&self, it: &BiSequence) -> Option<(Q, Q)> {
        if !it.is_admissible(&|a, b| (a as usize) < self.boxes.len() && (b as usize) < self.boxes.len() && self.coding.allowed(a, b)) {
            return None;
        }
        // Unstable coordinate from the forward tail.
        let t = it.right_cut().max(0);
        let per = it.right().len() as i64;
        let mut slope = Q::one();
        let mut off = Q::zero();
        for k in t..t + per {
            let tr = self.trans(it.at(k), it.at(k + 1));
            off = &tr.o_u + &(&self.mu_u * &off);
            slope = &slope * &self.mu_u;
        }
        let mut u = &off / &(&Q::one() - &slope);
        for k in (0..t).rev() {
            let tr = self.trans(it.at(k), it.at(k + 1));
            u = &(&u - &tr.o_u) / &self.mu_u;
        }
        // Stable coordinate from the backward tail.
        let t2 = (it.left_cut() - 1).min(0);
        let per = it.left().len() as i64;
        let mut slope = Q::one();
        let mut off = Q::zero();
        for k in t2 - per..t2 {
            let tr = self.trans(it.at(k), it.at(k + 1));
            off = &tr.o_s + &(&self.mu_s * &off);
            slope = &slope * &self.mu_s;
        }
        let mut s = &off / &(&Q::one() - &slope);
        for k in t2..0 {
            let tr = self.trans(it.at(k), it.at(k + 1));
            s = &tr.o_s + &(&self.mu_s * &s);
        }
        Some((u, s))
    }

    pub fn decode(&self, model: &TorusModel, it: &BiSequence) -> Option<TorusPoint> {
        let (u, s) = self.decode_coords(it)?;
        let bx = &self.boxes[it.at(0) as usize];
        Some(bx.chart.translate(&model.vector(&u, &s)))
    }

    /// Exact maximal overlap of level-`n` cells.
    pub fn multiplicity(&self, model: &TorusModel, level: u32) -> usize {
        if level == 0 {
            return 1;
        }
        let n = self.coding.half_width(level);
        let pad = self.margin(level);
        let k = self.boxes.len();
        let fwd: Vec<Vec<(Q, Q)>> = (0..k as Symbol).map(|a| self.forward_intervals(a, n, &pad)).collect();
        let bwd: Vec<Vec<(Q, Q)>> = (0..k as Symbol).map(|a| self.backward_intervals(a, n, &pad)).collect();
        let mut best = 0usize;
        for a0 in 0..k {
            let occ = self.occurrences(model, a0, &pad);
            let r0 = &self.boxes[a0];
            let u_rng = (&r0.u.0 - &pad, &r0.u.1 + &pad);
            let s_rng = (&r0.s.0 - &pad, &r0.s.1 + &pad);
            let u_sets: Vec<Vec<(Q, Q)>> =
                occ.iter().map(|(b, ou, _)| fwd[*b].iter().map(|(lo, hi)| (lo + ou, hi + ou)).collect()).collect();
            let s_sets: Vec<Vec<(Q, Q)>> =
                occ.iter().map(|(b, _, os)| bwd[*b].iter().map(|(lo, hi)| (lo + os, hi + os)).collect()).collect();
            let fu = count_patterns(&u_sets, &u_rng);
            let fs = count_patterns(&s_sets, &s_rng);
            for pu in &fu {
                for ps in &fs {
                    let depth: usize = pu.iter().zip(ps).map(|(x, y)| x * y).sum();
                    best = best.max(depth);
                }
            }
        }
        best
    }

    /// Same count in floating point, with breakpoints closer than `1e-12`
    /// merged. Agrees with `multiplicity` wherever both are run; much faster
    /// at fine levels.
    pub fn multiplicity_fast(&self, model: &TorusModel, level: u32) -> usize {
        if level == 0 {
            return 1;
        }
        let n = self.coding.half_width(level);
        let pad = self.margin(level).to_f64();
        let k = self.boxes.len();
        let fwd: Vec<Vec<(f64, f64)>> = (0..k as Symbol).map(|a| self.intervals_f(a, n, pad, true)).collect();
        let bwd: Vec<Vec<(f64, f64)>> = (0..k as Symbol).map(|a| self.intervals_f(a, n, pad, false)).collect();
        let mut best = 0usize;
        for a0 in 0..k {
            let occ = self.occurrences(model, a0, &self.margin(level));
            let r0 = &self.boxes[a0];
            let u_rng = (r0.u.0.to_f64() - pad, r0.u.1.to_f64() + pad);
            let s_rng = (r0.s.0.to_f64() - pad, r0.s.1.to_f64() + pad);
            let u_sets: Vec<Vec<(f64, f64)>> = occ
                .iter()
                .map(|(b, ou, _)| {
                    let o = ou.to_f64();
                    fwd[*b].iter().map(|(lo, hi)| (lo + o, hi + o)).collect()
                })
                .collect();
            let s_sets: Vec<Vec<(f64, f64)>> = occ
                .iter()
                .map(|(b, _, os)| {
                    let o = os.to_f64();
                    bwd[*b].iter().map(|(lo, hi)| (lo + o, hi + o)).collect()
                })
                .collect();
            let fu = count_patterns_f(&u_sets, u_rng);
            let fs = count_patterns_f(&s_sets, s_rng);
            for pu in &fu {
                for ps in &fs {
                    let depth: usize = pu.iter().zip(ps).map(|(x, y)| x * y).sum();
                    best = best.max(depth);
                }
            }
        }
        best
    }

    fn intervals_f(&self, a: Symbol, n: i64, pad: f64, forward: bool) -> Vec<(f64, f64)> {
        let mu_u = self.mu_u.to_f64();
        let mu_s = self.mu_s.to_f64();
        let side = |sym: Symbol| {
            let bx = &self.boxes[sym as usize];
            if forward {
                (bx.u.0.to_f64(), bx.u.1.to_f64())
            } else {
                (bx.s.0.to_f64(), bx.s.1.to_f64())
            }
        };
        let mut out = Vec::new();
        let mut stack: Vec<(Symbol, f64, f64, i64)> = vec![(a, 1.0, 0.0, 0)];
        while let Some((sym, slope, off, depth)) = stack.pop() {
            if depth == n {
                let (l, h) = side(sym);
                let (lo, hi) = if forward { ((l - off) / slope, (h - off) / slope) } else { (slope * l + off, slope * h + off) };
                out.push((lo.min(hi) - pad, lo.max(hi) + pad));
                continue;
            }
            if forward {
                for b in self.coding.successors(sym) {
                    let o = self.trans(sym, b).o_u.to_f64();
                    stack.push((b, mu_u * slope, o + mu_u * off, depth + 1));
                }
            } else {
                for &p in &self.preds[sym as usize] {
                    let o = self.trans(p, sym).o_s.to_f64();
                    stack.push((p, slope * mu_s, off + slope * o, depth + 1));
                }
            }
        }
        out
    }

    /// Enlarged u-intervals (in the chart of `a`) of the forward words of
    /// length `n + 1` starting at `a`.
    fn forward_intervals(&self, a: Symbol, n: i64, pad: &Q) -> Vec<(Q, Q)> {
        let mut out = Vec::new();
        // Track the affine map u -> slope·u + off from the chart of a.
        let mut stack: Vec<(Symbol, Q, Q, i64)> = vec![(a, Q::one(), Q::zero(), 0)];
        while let Some((sym, slope, off, depth)) = stack.pop() {
            if depth == n {
                let bx = &self.boxes[sym as usize];
                let lo = &(&bx.u.0 - &off) / &slope;
                let hi = &(&bx.u.1 - &off) / &slope;
                let (lo, hi) = interval(lo, hi);
                out.push((&lo - pad, &hi + pad));
                continue;
            }
            for b in self.coding.successors(sym) {
                let t = self.trans(sym, b);
                stack.push((b, &self.mu_u * &slope, &t.o_u + &(&self.mu_u * &off), depth + 1));
            }
        }
        out
    }

    fn backward_intervals(&self, a: Symbol, n: i64, pad: &Q) -> Vec<(Q, Q)> {
        let mut out = Vec::new();
        // s_a = slope·s_sym + off, walking backward.
        let mut stack: Vec<(Symbol, Q, Q, i64)> = vec![(a, Q::one(), Q::zero(), 0)];
        while let Some((sym, slope, off, depth)) = stack.pop() {
            if depth == n {
                let bx = &self.boxes[sym as usize];
                let lo = &(&slope * &bx.s.0) + &off;
                let hi = &(&slope * &bx.s.1) + &off;
                let (lo, hi) = interval(lo, hi);
                out.push((&lo - pad, &hi + pad));
                continue;
            }
            for &p in &self.preds[sym as usize] {
                let t = self.trans(p, sym);
                // s_sym = o_s + μ_s s_p.
                stack.push((p, &slope * &self.mu_s, &off + &(&slope * &t.o_s), depth + 1));
            }
        }
        out
    }

    /// Base boxes (with lattice translate) whose enlargement meets the
    /// enlargement of box `a0`, as chart offsets relative to `a0`.
    fn occurrences(&self, model: &TorusModel, a0: usize, pad: &Q) -> Vec<(usize, Q, Q)> {
        let r0 = &self.boxes[a0];
        let mut out = Vec::new();
        for (b, bx) in self.boxes.iter().enumerate() {
            let dx = &bx.chart.x - &r0.chart.x;
            let dy = &bx.chart.y - &r0.chart.y;
            for m1 in -4i64..=4 {
                for m2 in -4i64..=4 {
                    let (ou, os) = model.coords(&[&dx + &Q::from_int(m1), &dy + &Q::from_int(m2)]);
                    let ulo = (&bx.u.0 + &ou).max(r0.u.0.clone());
                    let uhi = (&bx.u.1 + &ou).min(r0.u.1.clone());
                    let slo = (&bx.s.0 + &os).max(r0.s.0.clone());
                    let shi = (&bx.s.1 + &os).min(r0.s.1.clone());
                    let two = &Q::from_int(2) * pad;
                    if &uhi - &ulo > -two.clone() && &shi - &slo > -two {
                        out.push((b, ou, os));
                    }
                }
            }
        }
        out
    }
}

/// Float membership of `v` in `(lo - pad, hi + pad)`: `None` when too close
/// to call, `Some(None)` outside, `Some(Some(()))` inside.
fn side_test(v: f64, lo: f64, hi: f64, pad: f64) -> Option<Option<()>> {
    let d = (v - (lo - pad)).min(hi + pad - v);
    if d.abs() <= FLOAT_TOL * (1.0 + v.abs()) {
        return None;
    }
    Some((d > 0.0).then_some(()))
}

/// Distinct vectors `(count of intervals of set o containing t)_o` over the
/// elementary open intervals of `range` cut by all interval endpoints.
fn count_patterns(sets: &[Vec<(Q, Q)>], range: &(Q, Q)) -> Vec<Vec<usize>> {
    let mut pts: Vec<Q> = vec![range.0.clone(), range.1.clone()];
    for set in sets {
        for (lo, hi) in set {
            if lo > &range.0 && lo < &range.1 {
                pts.push(lo.clone());
            }
            if hi > &range.0 && hi < &range.1 {
                pts.push(hi.clone());
            }
        }
    }
    let mut keyed: Vec<(f64, Q)> = pts.into_iter().map(|q| (q.to_f64(), q)).collect();
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(&b.1)));
    // Exact order fix-up for float near-ties.
    keyed.sort_by(|a, b| a.1.cmp(&b.1));
    keyed.dedup_by(|a, b| a.1 == b.1);
    let pts: Vec<Q> = keyed.into_iter().map(|(_, q)| q).collect();
    let cells = pts.len() - 1;
    let mut counts = vec![vec![0usize; sets.len()]; cells];
    let locate = |q: &Q| -> usize {
        // Index of the first breakpoint >= q.
        pts.partition_point(|p| p < q)
    };
    for (o, set) in sets.iter().enumerate() {
        let mut diff = vec![0i64; cells + 1];
        for (lo, hi) in set {
            if hi <= &range.0 || lo >= &range.1 {
                continue;
            }
            let i = if lo <= &range.0 { 0 } else { locate(lo) };
            let j = if hi >= &range.1 { cells } else { locate(hi) };
            if i < j {
                diff[i] += 1;
                diff[j] -= 1;
            }
        }
        let mut run = 0i64;
        for c in 0..cells {
            run += diff[c];
            counts[c][o] = run as usize;
        }
    }
    counts.sort();
    counts.dedup();
    counts
}

fn count_patterns_f(sets: &[Vec<(f64, f64)>], range: (f64, f64)) -> Vec<Vec<usize>> {
    const TOL: f64 = 1e-12;
    let mut raw: Vec<f64> = vec![range.0, range.1];
    for set in sets {
        for &(lo, hi) in set {
            raw.extend([lo, hi].into_iter().filter(|&v| v > range.0 + TOL && v < range.1 - TOL));
        }
    }
    raw.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut pts: Vec<f64> = Vec::with_capacity(raw.len());
    for v in raw {
        if pts.last().is_none_or(|&l| v - l > TOL) {
            pts.push(v);
        }
    }
    let cells = pts.len() - 1;
    let locate = |q: f64| pts.partition_point(|&p| p < q - TOL);
    let mut counts = vec![vec![0usize; sets.len()]; cells];
    for (o, set) in sets.iter().enumerate() {
        let mut diff = vec![0i64; cells + 1];
        for &(lo, hi) in set {
            if hi <= range.0 + TOL || lo >= range.1 - TOL {
                continue;
            }
            let i = if lo <= range.0 { 0 } else { locate(lo) };
            let j = if hi >= range.1 { cells } else { locate(hi) };
            if i < j {
                diff[i] += 1;
                diff[j] -= 1;
            }
        }
        let mut run = 0i64;
        for c in 0..cells {
            run += diff[c];
            counts[c][o] = run as usize;
        }
    }
    counts.sort();
    counts.dedup();
    counts
}

/// Integer lattice bases `(f1, f2)` with `f1` in the open first eigen-quadrant
/// and `f2` in the second, small entries first.
fn candidate_bases(model: &TorusModel) -> Vec<([Q; 2], [Q; 2])> {
    let mut vecs = Vec::new();
    for r in 1i64..=3 {
        for x in -r..=r {
            for y in -r..=r {
                if x.abs().max(y.abs()) == r {
                    vecs.push((x, y));
                }
            }
        }
    }
    let q1: Vec<_> = vecs
        .iter()
        .filter(|&&(x, y)| {
            let (u, s) = model.coords_f([x as f64, y as f64]);
            u > 1e-12 && s > 1e-12
        })
        .cloned()
        .collect();
    let q2: Vec<_> = vecs
        .iter()
        .filter(|&&(x, y)| {
            let (u, s) = model.coords_f([x as f64, y as f64]);
            u < -1e-12 && s > 1e-12
        })
        .cloned()
        .collect();
    let mut out = Vec::new();
    for &(a, b) in &q1 {
        for &(c, d) in &q2 {
            if (a * d - b * c).abs() == 1 {
                out.push(([Q::from_int(a), Q::from_int(b)], [Q::from_int(c), Q::from_int(d)]));
            }
        }
    }
    out
}

/// Connected components of `φ(B_i) ∩ B_j` as chart offsets, checking the
/// Markov crossing conditions exactly.
fn transitions_between(model: &TorusModel, boxes: &[BaseBox]) -> Result<Vec<Vec<Vec<Transition>>>> {
    let k = boxes.len();
    let mut out = vec![vec![Vec::new(); k]; k];
    for (i, bi) in boxes.iter().enumerate() {
        let img = model.apply_linear(&[bi.chart.x.clone(), bi.chart.y.clone()], 1);
        for (j, bj) in boxes.iter().enumerate() {
            for m1 in -12i64..=12 {
                for m2 in -12i64..=12 {
                    let w = [&(&img[0] - &bj.chart.x) + &Q::from_int(m1), &(&img[1] - &bj.chart.y) + &Q::from_int(m2)];
                    let wf = [w[0].to_f64(), w[1].to_f64()];
                    let (ouf, osf) = model.coords_f(wf);
                    let lam = model.lambda.to_f64();
                    if ouf.abs() > lam * 2.0 + 2.0 || osf.abs() > 2.0 {
                        continue;
                    }
                    let (o_u, o_s) = model.coords(&w);
                    let iu = interval(&o_u + &(&model.mu_u * &bi.u.0), &o_u + &(&model.mu_u * &bi.u.1));
                    let is = interval(&o_s + &(&model.mu_s * &bi.s.0), &o_s + &(&model.mu_s * &bi.s.1));
                    let ulo = iu.0.clone().max(bj.u.0.clone());
                    let uhi = iu.1.clone().min(bj.u.1.clone());
                    let slo = is.0.clone().max(bj.s.0.clone());
                    let shi = is.1.clone().min(bj.s.1.clone());
                    if ulo >= uhi || slo >= shi {
                        continue;
                    }
                    if !(iu.0 <= bj.u.0 && iu.1 >= bj.u.1 && is.0 >= bj.s.0 && is.1 <= bj.s.1) {
                        return Err(Error::Degenerate(format!("transition {i}->{j} is not a full crossing")));
                    }
                    out[i][j].push(Transition { o_u, o_s });
                }
            }
        }
    }
    // The stable strips entering each box must tile its stable side.
    for (j, bj) in boxes.iter().enumerate() {
        let mut total = Q::zero();
        for (i, bi) in boxes.iter().enumerate() {
            for _ in &out[i][j] {
                total = &total + &(&(&bi.s.1 - &bi.s.0) * &model.mu_s.abs());
            }
        }
        if total != &bj.s.1 - &bj.s.0 {
            return Err(Error::Degenerate(format!("stable strips do not tile box {j}")));
        }
    }
    Ok(out)
}

type BaseData = (Vec<BaseBox>, Vec<Vec<Option<Transition>>>);

fn plain(comps: &[Vec<Vec<Transition>>], boxes: &[BaseBox]) -> BaseData {
    let trans = comps.iter().map(|row| row.iter().map(|v| v.first().cloned()).collect()).collect();
    (boxes.to_vec(), trans)
}

/// Replaces each rectangle by the strips `B_i ∩ φ^{-1}(component)`, one per
/// component, which makes the transition graph 0-1.
fn edge_refine(model: &TorusModel, boxes: &[BaseBox], comps: &[Vec<Vec<Transition>>]) -> BaseData {
    let mut edges: Vec<(usize, usize, Transition)> = Vec::new();
    for (i, row) in comps.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let mut v = v.clone();
            v.sort_by(|a, b| a.o_u.cmp(&b.o_u).then_with(|| a.o_s.cmp(&b.o_s)));
            for t in v {
                edges.push((i, j, t));
            }
        }
    }
    let base: Vec<BaseBox> = edges
        .iter()
        .map(|(i, j, t)| {
            let bi = &boxes[*i];
            let bj = &boxes[*j];
            let u = interval(&(&bj.u.0 - &t.o_u) / &model.mu_u, &(&bj.u.1 - &t.o_u) / &model.mu_u);
            BaseBox { chart: bi.chart.clone(), u, s: bi.s.clone() }
        })
        .collect();
    let trans = edges
        .iter()
        .map(|(_, j, t)| edges.iter().map(|(i2, _, _)| (i2 == j).then(|| t.clone())).collect())
        .collect();
    (base, trans)
}

/// Solves `m1·α + m2·β = γ` over the integers, where all three lie in Q(√D).
fn integer_solve(alpha: &Q, beta: &Q, gamma: &Q) -> Option<(BigInt, BigInt)> {
    let (ar, ai) = (alpha.rational_part(), alpha.irrational_part());
    let (br, bi) = (beta.rational_part(), beta.irrational_part());
    let (gr, gi) = (gamma.rational_part(), gamma.irrational_part());
    let det = &ar * &bi - &br * &ai;
    if det.is_zero() {
        return None;
    }
    let m1 = (&gr * &bi - &br * &gi) / &det;
    let m2 = (&ar * &gi - &gr * &ai) / &det;
    (m1.is_integer() && m2.is_integer()).then(|| (m1.to_integer(), m2.to_integer()))
}

/// A toral automorphism with chosen orbits `P`, `Q` and its covers.
#[derive(Clone, Debug)]
pub struct Torus {
    model: TorusModel,
    p: Vec<TorusPoint>,
    q: Vec<TorusPoint>,
    cover: TorusCover,
    p_code: Vec<Symbol>,
    q_code: Vec<Symbol>,
}

impl Torus {
    pub fn new(model: TorusModel, p_seed: TorusPoint, q_seed: TorusPoint, delta: Option<f64>) -> Result<Self> {
        let p = model.orbit(&p_seed, 100_000)?;
        let q = model.orbit(&q_seed, 100_000)?;
        if p.iter().any(|x| q.contains(x)) {
            return Err(Error::OrbitsIntersect);
        }
        let cover = TorusCover::new(&model, delta)?;
        let p_code = find_code(&model, &cover, &p[0], p.len())?;
        let q_code = find_code(&model, &cover, &q[0], q.len())?;
        Ok(Torus { model, p, q, cover, p_code, q_code })
    }

    /// `P = {(0,0)}`, `Q = orbit((1/3, 1/3))`.
    pub fn with_default_orbits(model: TorusModel, delta: Option<f64>) -> Result<Self> {
        Self::new(model, TorusPoint::origin(), TorusPoint::rational(1, 3, 1, 3), delta)
    }

    pub fn golden_default() -> Self {
        Self::with_default_orbits(TorusModel::golden(), None).expect("golden torus")
    }

    pub fn cat_default() -> Self {
        Self::with_default_orbits(TorusModel::cat(), None).expect("cat torus")
    }

    pub fn model(&self) -> &TorusModel {
        &self.model
    }

    pub fn cover(&self) -> &TorusCover {
        &self.cover
    }

    /// `(i, t)` with `x ≡ p_i + t·v_s (mod Z²)`.
    pub fn stable_param(&self, x: &TorusPoint) -> Option<(usize, Q)> {
        let e1 = self.model.coords(&[Q::one(), Q::zero()]);
        let e2 = self.model.coords(&[Q::zero(), Q::one()]);
        for (i, p) in self.p.iter().enumerate() {
            let w = [&x.x - &p.x, &x.y - &p.y];
            let (u, _) = self.model.coords(&w);
            if let Some((m1, m2)) = integer_solve(&e1.0, &e2.0, &u) {
                let w2 = [&w[0] - &Q::from_bigint(m1), &w[1] - &Q::from_bigint(m2)];
                let (_, t) = self.model.coords(&w2);
                return Some((i, t));
            }
        }
        None
    }

    /// `(j, s)` with `x ≡ q_j + s·v_u (mod Z²)`.
    pub fn unstable_param(&self, x: &TorusPoint) -> Option<(usize, Q)> {
        let e1 = self.model.coords(&[Q::one(), Q::zero()]);
        let e2 = self.model.coords(&[Q::zero(), Q::one()]);
        for (j, q) in self.q.iter().enumerate() {
            let w = [&x.x - &q.x, &x.y - &q.y];
            let (_, s) = self.model.coords(&w);
            if let Some((m1, m2)) = integer_solve(&e1.1, &e2.1, &s) {
                let w2 = [&w[0] - &Q::from_bigint(m1), &w[1] - &Q::from_bigint(m2)];
                let (u, _) = self.model.coords(&w2);
                return Some((j, u));
            }
        }
        None
    }
}

fn find_code(model: &TorusModel, cover: &TorusCover, target: &TorusPoint, len: usize) -> Result<Vec<Symbol>> {
    let coding = cover.coding();
    let k = coding.alphabet() as Symbol;
    let mut stack: Vec<Vec<Symbol>> = (0..k).rev().map(|a| vec![a]).collect();
    while let Some(w) = stack.pop() {
        if w.len() == len {
            if coding.allowed(w[len - 1], w[0]) {
                let it = BiSequence::periodic(&w);
                if cover.decode(model, &it).as_ref() == Some(target) {
                    return Ok(w);
                }
            }
            continue;
        }
        let last = *w.last().unwrap();
        for b in (0..k).rev() {
            if coding.allowed(last, b) {
                let mut nw = w.clone();
                nw.push(b);
                stack.push(nw);
            }
        }
    }
    Err(Error::Degenerate(format!("no periodic itinerary of length {len} codes {target}")))
}

impl SmaleSpace for Torus {
    type Point = TorusPoint;

    fn constants(&self) -> Constants {
        self.model.constants()
    }

    fn apply(&self, p: &TorusPoint, power: i64) -> TorusPoint {
        self.model.apply(p, power)
    }

    fn dist(&self, p: &TorusPoint, q: &TorusPoint) -> f64 {
        self.model.dist_exact(p, q).to_f64()
    }

    fn dist_lt(&self, p: &TorusPoint, q: &TorusPoint, eps: f64) -> bool {
        self.model.dist_exact(p, q) < Q::from_f64(eps)
    }

    fn dist_le(&self, p: &TorusPoint, q: &TorusPoint, eps: f64) -> bool {
        self.model.dist_exact(p, q) <= Q::from_f64(eps)
    }

    fn dist_le_scaled(&self, a: (&TorusPoint, &TorusPoint), b: (&TorusPoint, &TorusPoint), k: i32) -> bool {
        let m = &self.model;
        m.dist_exact(a.0, a.1) <= &m.dist_exact(b.0, b.1) * &m.lambda.powi(k as i64)
    }

    fn bracket(&self, p: &TorusPoint, q: &TorusPoint) -> Option<TorusPoint> {
        self.model.bracket(p, q)
    }
}

impl HomoclinicSystem for Torus {
    fn p_points(&self) -> Vec<TorusPoint> {
        self.p.clone()
    }

    fn q_points(&self) -> Vec<TorusPoint> {
        self.q.clone()
    }

    fn enumerate_homoclinic(&self, cap: usize) -> Vec<TorusPoint> {
        let c = cap as i64;
        let mut keyed = Vec::new();
        for (i, p) in self.p.iter().enumerate() {
            for (j, q) in self.q.iter().enumerate() {
                for m1 in -c..=c {
                    for m2 in -c..=c {
                        let w = [&(&q.x - &p.x) + &Q::from_int(m1), &(&q.y - &p.y) + &Q::from_int(m2)];
                        let (_, t) = self.model.coords(&w);
                        let x = p.translate(&self.model.vector(&Q::zero(), &t));
                        keyed.push(((m1.abs().max(m2.abs()), i, j, m1, m2), x));
                    }
                }
            }
        }
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        keyed.into_iter().map(|(_, x)| x).collect()
    }

    fn is_homoclinic(&self, x: &TorusPoint) -> bool {
        self.stable_param(x).is_some() && self.unstable_param(x).is_some()
    }

    fn orbit_normal_form(&self, x: &TorusPoint) -> Option<(TorusPoint, i64)> {
        let (_, t) = self.stable_param(x)?;
        if t.is_zero() {
            return None;
        }
        let at = t.abs();
        let lam = &self.model.lambda;
        let mut k = (at.to_f64().ln() / lam.to_f64().ln()).floor() as i64;
        loop {
            let scaled = &at * &lam.powi(-k);
            if scaled < Q::one() {
                k -= 1;
            } else if &scaled >= lam {
                k += 1;
            } else {
                break;
            }
        }
        Some((self.model.apply(x, k), k))
    }

    fn leaf_intersection(&self, s_base: &TorusPoint, k_s: i64, u_base: &TorusPoint, k_u: i64) -> Vec<TorusPoint> {
        let m = &self.model;
        let lam = &m.lambda;
        let ts = &m.eps_x * &lam.powi(k_s);
        let tu = &m.eps_x * &lam.powi(k_u);
        let w0 = [&u_base.x - &s_base.x, &u_base.y - &s_base.y];
        let (u0, s0) = m.coords(&w0);
        let (u0f, s0f, tsf, tuf) = (u0.to_f64(), s0.to_f64(), ts.to_f64(), tu.to_f64());
        let cf = m.chart_f;
        // Constraint on (m1, m2): |u0 + cf[0]·m| < tu and |s0 + cf[1]·m| < ts.
        let det = cf[0][0] * cf[1][1] - cf[0][1] * cf[1][0];
        let corners = [(-tuf, -tsf), (-tuf, tsf), (tuf, -tsf), (tuf, tsf)];
        let mut m1_lo = f64::INFINITY;
        let mut m1_hi = f64::NEG_INFINITY;
        for (cu, cs) in corners {
            let (ru, rs) = (cu - u0f, cs - s0f);
            let m1 = (ru * cf[1][1] - rs * cf[0][1]) / det;
            m1_lo = m1_lo.min(m1);
            m1_hi = m1_hi.max(m1);
        }
        let mut out = Vec::new();
        for m1 in (m1_lo.floor() as i64 - 1)..=(m1_hi.ceil() as i64 + 1) {
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            for (row, base, bound) in [(cf[0], u0f, tuf), (cf[1], s0f, tsf)] {
                let rest = base + row[0] * m1 as f64;
                let a = (-bound - rest) / row[1];
                let b = (bound - rest) / row[1];
                lo = lo.max(a.min(b));
                hi = hi.min(a.max(b));
            }
            if lo > hi + 2.0 {
                continue;
            }
            for m2 in (lo.floor() as i64 - 1)..=(hi.ceil() as i64 + 1) {
                let w = [&w0[0] + &Q::from_int(m1), &w0[1] + &Q::from_int(m2)];
                let (u, t) = m.coords(&w);
                if u.abs() < tu && t.abs() < ts {
                    out.push(s_base.translate(&m.vector(&Q::zero(), &t)));
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }
}

impl CoveredSystem for Torus {
    fn coding(&self) -> &Coding {
        self.cover.coding()
    }

    fn cells_at(&self, x: &TorusPoint, level: u32) -> Vec<CellHit> {
        self.cover.cells_at(&self.model, x, level)
    }

    fn level_diam(&self, level: u32) -> f64 {
        self.cover.level_diam(level).to_f64()
    }

    fn diam_within_bound(&self, level: u32) -> bool {
        level == 0 || self.cover.level_diam(level) <= &self.cover.level_diam(1) * &self.model.lambda.powi(-(level as i64 - 1))
    }

    fn level_margin(&self, level: u32) -> f64 {
        self.cover.level_margin(level).to_f64()
    }

    fn multiplicity(&self, level: u32) -> usize {
        self.cover.multiplicity_fast(&self.model, level)
    }

    fn decode(&self, itinerary: &BiSequence) -> Option<TorusPoint> {
        self.cover.decode(&self.model, itinerary)
    }

    fn p_code(&self) -> &[Symbol] {
        &self.p_code
    }

    fn q_code(&self) -> &[Symbol] {
        &self.q_code
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_map_on_thirds() {
        let m = TorusModel::golden();
        let x = TorusPoint::rational(1, 3, 1, 3);
        assert_eq!(m.apply(&x, 1), TorusPoint::rational(2, 3, 1, 3));
        assert_eq!(m.apply(&m.apply(&x, 5), -5), x);
        assert_eq!(m.orbit(&x, 100).unwrap().len(), 8);
        assert!((m.entropy() - ((1.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-14);
        let cat = TorusModel::cat();
        assert!((cat.entropy() - ((3.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn trace_zero_and_parabolic_rejected() {
        assert!(TorusModel::new([[0, 1], [1, 0]]).is_err());
        assert!(TorusModel::new([[1, 1], [0, 1]]).is_err());
        assert!(TorusModel::new([[2, 0], [0, 1]]).is_err());
    }

    #[test]
    fn codes_decode_to_orbits() {
        for t in [Torus::golden_default(), Torus::cat_default()] {
            let p = t.decode(&BiSequence::periodic(t.p_code())).unwrap();
            assert_eq!(p, t.p_points()[0]);
            let q = t.decode(&BiSequence::periodic(t.q_code())).unwrap();
            assert_eq!(q, t.q_points()[0]);
        }
    }

    #[test]
    fn float_cells_match_exact() {
        for t in [Torus::golden_default(), Torus::cat_default()] {
            let mut pts: Vec<TorusPoint> = t.enumerate_homoclinic(2);
            pts.extend((0..40).map(|i| TorusPoint::rational(i * 37 % 211, 211, i * 91 % 223, 223)));
            for x in &pts {
                for n in 1..=4 {
                    let a = t.cover().cells_at(t.model(), x, n);
                    let b = t.cover().cells_at_exact(t.model(), x, n);
                    assert_eq!(a.len(), b.len());
                    for (h, e) in a.iter().zip(&b) {
                        assert_eq!(h.cell, e.cell);
                        assert!((h.margin - e.margin).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn fast_multiplicity_matches_exact() {
        for t in [Torus::golden_default(), Torus::cat_default()] {
            for n in 1..=3 {
                assert_eq!(t.cover().multiplicity(t.model(), n), t.cover().multiplicity_fast(t.model(), n));
            }
        }
    }

    #[test]
    fn homoclinic_points_have_both_params() {
        let t = Torus::golden_default();
        for x in t.enumerate_homoclinic(2) {
            assert!(t.is_homoclinic(&x));
            let (n, k) = t.orbit_normal_form(&x).unwrap();
            let y = t.apply(&x, 3);
            assert_eq!(t.orbit_normal_form(&y).unwrap(), (n, k - 3));
        }
    }
}
