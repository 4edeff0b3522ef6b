//! Two-sided subshifts of finite type with the dyadic metric
//! `d(x, y) = 2^{-m}`, `m` the largest radius of agreement around 0.

use std::collections::BTreeSet;

use crate::dynamics::{Constants, HomoclinicSystem, SmaleSpace};
use crate::error::{Error, Result};
use crate::markov::{Cell, CellHit, Coding, CoveredSystem};
use crate::word::{primitive_root, rotate, BiSequence, Symbol};

pub const SFT_LAMBDA: f64 = 2.0;

#[derive(Clone, Debug)]
pub struct SftModel {
    coding: Coding,
    perron: f64,
}

impl SftModel {
    /// Validates a square 0-1 irreducible adjacency matrix.
    pub fn new(adjacency: &[Vec<u8>]) -> Result<Self> {
        let k = adjacency.len();
        if k == 0 || k > 255 {
            return Err(Error::InvalidMatrix(format!("alphabet size {k} out of range")));
        }
        if adjacency.iter().any(|row| row.len() != k) {
            return Err(Error::InvalidMatrix("adjacency matrix is not square".into()));
        }
        if adjacency.iter().flatten().any(|&e| e > 1) {
            return Err(Error::InvalidMatrix("entries must be 0 or 1".into()));
        }
        let allowed: Vec<Vec<bool>> = adjacency.iter().map(|r| r.iter().map(|&e| e == 1).collect()).collect();
        let coding = Coding::new(allowed, 0);
        if !coding.is_irreducible() {
            return Err(Error::Reducible);
        }
        let perron = perron_value(adjacency);
        Ok(SftModel { coding, perron })
    }

    pub fn golden_mean() -> Self {
        Self::new(&[vec![1, 1], vec![1, 0]]).expect("golden mean shift")
    }

    pub fn full_shift(k: usize) -> Self {
        Self::new(&vec![vec![1; k]; k]).expect("full shift")
    }

    pub fn alphabet_size(&self) -> usize {
        self.coding.alphabet()
    }

    pub fn perron(&self) -> f64 {
        self.perron
    }

    pub fn entropy(&self) -> f64 {
        self.perron.ln()
    }

    pub fn coding(&self) -> &Coding {
        &self.coding
    }

    pub fn allowed(&self, a: Symbol, b: Symbol) -> bool {
        self.coding.allowed(a, b)
    }

    pub fn is_admissible(&self, x: &BiSequence) -> bool {
        x.is_admissible(&|a, b| self.allowed(a, b))
    }

    pub fn constants(&self) -> Constants {
        Constants { lambda: SFT_LAMBDA, eps_x: 1.0, eps_x_prime: 0.25, entropy: self.entropy() }
    }

    pub fn dist(&self, x: &BiSequence, y: &BiSequence) -> f64 {
        match x.agreement_radius(y) {
            None => 0.0,
            Some(m) => SFT_LAMBDA.powi(-(m as i32)),
        }
    }

    /// Splice bracket, defined iff `x_0 = y_0`.
    pub fn bracket(&self, x: &BiSequence, y: &BiSequence) -> Option<BiSequence> {
        (x.at(0) == y.at(0)).then(|| x.splice(y))
    }

    /// Number of admissible words on `[-r, r]` extending the word of `x`
    /// on `[-m, m]` (`m = -1` means no constraint).
    fn extensions(&self, x: &BiSequence, m: i64, r: i64) -> u128 {
        let k = self.alphabet_size();
        if m < 0 {
            return self.coding.count_words((2 * r + 1) as usize);
        }
        // Right side: paths of length r - m leaving x_m.
        let count_side = |start: Symbol, steps: i64, forward: bool| -> u128 {
            let mut v = vec![0u128; k];
            v[start as usize] = 1;
            for _ in 0..steps {
                let mut nv = vec![0u128; k];
                for a in 0..k {
                    if v[a] == 0 {
                        continue;
                    }
                    for b in 0..k {
                        let ok = if forward { self.allowed(a as Symbol, b as Symbol) } else { self.allowed(b as Symbol, a as Symbol) };
                        if ok {
                            nv[b] = nv[b].saturating_add(v[a]);
                        }
                    }
                }
                v = nv;
            }
            v.iter().fold(0u128, |s, x| s.saturating_add(*x))
        };
        count_side(x.at(m), r - m, true).saturating_mul(count_side(x.at(-m), r - m, false))
    }

    /// Exact distance from `x` to the complement of its level-`n` cylinder.
    pub fn cylinder_margin(&self, x: &BiSequence, level: u32) -> f64 {
        let r = level as i64 - 1;
        for m in (-1..r).rev() {
            if self.extensions(x, m, r) > 1 {
                return SFT_LAMBDA.powi(-(m as i32));
            }
        }
        f64::INFINITY
    }
}

/// Leading eigenvalue of a nonnegative irreducible matrix, by power
/// iteration on `A + I` (which is primitive).
pub fn perron_value(adjacency: &[Vec<u8>]) -> f64 {
    let k = adjacency.len();
    let mut v = vec![1.0f64; k];
    let mut rho = 0.0;
    for _ in 0..100_000 {
        let mut nv = v.clone();
        for a in 0..k {
            for b in 0..k {
                nv[a] += adjacency[a][b] as f64 * v[b];
            }
        }
        let norm = nv.iter().cloned().fold(0.0, f64::max);
        let nv: Vec<f64> = nv.into_iter().map(|x| x / norm).collect();
        let delta = nv.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = nv;
        rho = norm;
        if delta < 1e-15 {
            break;
        }
    }
    rho - 1.0
}

/// One period of a periodic orbit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodicOrbit {
    word: Vec<Symbol>,
}

impl PeriodicOrbit {
    pub fn new(model: &SftModel, word: Vec<Symbol>) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::InvalidOrbit("empty word".into()));
        }
        if word.iter().any(|&s| s as usize >= model.alphabet_size()) {
            return Err(Error::InvalidOrbit("symbol outside alphabet".into()));
        }
        if primitive_root(&word).len() != word.len() {
            return Err(Error::InvalidOrbit("word is a proper power".into()));
        }
        let n = word.len();
        if !(0..n).all(|i| model.allowed(word[i], word[(i + 1) % n])) {
            return Err(Error::InvalidOrbit("word is not cyclically admissible".into()));
        }
        Ok(PeriodicOrbit { word })
    }

    pub fn word(&self) -> &[Symbol] {
        &self.word
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> Vec<BiSequence> {
        (0..self.word.len() as i64).map(|k| BiSequence::periodic(&rotate(&self.word, k))).collect()
    }

    fn rotations(&self) -> Vec<Vec<Symbol>> {
        let mut r: Vec<Vec<Symbol>> = (0..self.word.len() as i64).map(|k| rotate(&self.word, k)).collect();
        r.sort();
        r
    }

    fn contains_rotation(&self, w: &[Symbol]) -> bool {
        w.len() == self.word.len() && (0..w.len() as i64).any(|k| rotate(&self.word, k) == w)
    }
}

/// A subshift of finite type with chosen orbits `P` and `Q`.
#[derive(Clone, Debug)]
pub struct Sft {
    model: SftModel,
    p: PeriodicOrbit,
    q: PeriodicOrbit,
}

impl Sft {
    pub fn new(model: SftModel, p: PeriodicOrbit, q: PeriodicOrbit) -> Result<Self> {
        if p.contains_rotation(q.word()) {
            return Err(Error::OrbitsIntersect);
        }
        Ok(Sft { model, p, q })
    }

    /// Golden mean shift with `P = orbit(0^∞)` and `Q = orbit((01)^∞)`.
    pub fn golden_default() -> Self {
        let m = SftModel::golden_mean();
        let p = PeriodicOrbit::new(&m, vec![0]).unwrap();
        let q = PeriodicOrbit::new(&m, vec![0, 1]).unwrap();
        Sft::new(m, p, q).unwrap()
    }

    pub fn model(&self) -> &SftModel {
        &self.model
    }

    pub fn p(&self) -> &PeriodicOrbit {
        &self.p
    }

    pub fn q(&self) -> &PeriodicOrbit {
        &self.q
    }

    fn complexity(x: &BiSequence) -> usize {
        (x.center().len() as i64).max(x.left_cut().abs()).max(x.right_cut().abs()) as usize
    }
}

impl SmaleSpace for Sft {
    type Point = BiSequence;

    fn constants(&self) -> Constants {
        self.model.constants()
    }

    fn apply(&self, p: &BiSequence, power: i64) -> BiSequence {
        p.shift(power)
    }

    fn dist(&self, p: &BiSequence, q: &BiSequence) -> f64 {
        self.model.dist(p, q)
    }

    fn dist_lt(&self, p: &BiSequence, q: &BiSequence, eps: f64) -> bool {
        self.model.dist(p, q) < eps
    }

    fn dist_le(&self, p: &BiSequence, q: &BiSequence, eps: f64) -> bool {
        self.model.dist(p, q) <= eps
    }

    fn bracket(&self, p: &BiSequence, q: &BiSequence) -> Option<BiSequence> {
        self.model.bracket(p, q)
    }
}

impl HomoclinicSystem for Sft {
    fn p_points(&self) -> Vec<BiSequence> {
        self.p.points()
    }

    fn q_points(&self) -> Vec<BiSequence> {
        self.q.points()
    }

    fn enumerate_homoclinic(&self, cap: usize) -> Vec<BiSequence> {
        let c = cap as i64;
        let coding = self.model.coding();
        let mut found = BTreeSet::new();
        let lefts = self.q.rotations();
        let rights = self.p.rotations();
        for len in 0..=cap {
            let centers = coding.words(len);
            for a in -c..=(c - len as i64) {
                for l in &lefts {
                    for r in &rights {
                        for w in &centers {
                            let x = BiSequence::new(l.clone(), a, w.clone(), r.clone());
                            let k = Self::complexity(&x);
                            if k <= cap && self.model.is_admissible(&x) {
                                found.insert((k, x));
                            }
                        }
                    }
                }
            }
        }
        found.into_iter().map(|(_, x)| x).collect()
    }

    fn is_homoclinic(&self, x: &BiSequence) -> bool {
        self.q.contains_rotation(x.left()) && self.p.contains_rotation(x.right()) && self.model.is_admissible(x)
    }

    fn orbit_normal_form(&self, x: &BiSequence) -> Option<(BiSequence, i64)> {
        if x.is_periodic() {
            return None;
        }
        let k = x.left_cut();
        Some((x.shift(k), k))
    }

    fn leaf_intersection(&self, s_base: &BiSequence, k_s: i64, u_base: &BiSequence, k_u: i64) -> Vec<BiSequence> {
        // y_j = s_base_j for j >= k_s - 1 and y_j = u_base_j for j <= 1 - k_u.
        let lo = 1 - k_u;
        let hi = k_s - 1;
        let mut out = Vec::new();
        let build = |gap: &[Symbol]| -> BiSequence {
            let start = u_base.left_cut().min(lo + 1);
            let end = s_base.right_cut().max(hi).max(lo + 1);
            let center = (start..end)
                .map(|i| {
                    if i <= lo {
                        u_base.at(i)
                    } else if i < hi {
                        gap[(i - lo - 1) as usize]
                    } else {
                        s_base.at(i)
                    }
                })
                .collect();
            BiSequence::new(u_base.left().to_vec(), start, center, s_base.right().to_vec())
        };
        if lo >= hi {
            if (hi..=lo).all(|j| s_base.at(j) == u_base.at(j)) {
                out.push(build(&[]));
            }
            return out;
        }
        let gap_len = (hi - lo - 1) as usize;
        let first = u_base.at(lo);
        let last = s_base.at(hi);
        let mut stack: Vec<Symbol> = Vec::with_capacity(gap_len);
        fill_gap(&self.model, first, last, gap_len, &mut stack, &mut |g| out.push(build(g)));
        out.sort();
        out
    }
}

fn fill_gap(model: &SftModel, prev: Symbol, last: Symbol, remaining: usize, cur: &mut Vec<Symbol>, emit: &mut dyn FnMut(&[Symbol])) {
    let tail = cur.last().copied().unwrap_or(prev);
    if remaining == 0 {
        if model.allowed(tail, last) {
            emit(cur);
        }
        return;
    }
    for b in model.coding().successors(tail).collect::<Vec<_>>() {
        cur.push(b);
        fill_gap(model, prev, last, remaining - 1, cur, emit);
        cur.pop();
    }
}

impl CoveredSystem for Sft {
    fn coding(&self) -> &Coding {
        self.model.coding()
    }

    fn cells_at(&self, x: &BiSequence, level: u32) -> Vec<CellHit> {
        if level == 0 {
            return vec![CellHit { cell: Cell::whole_space(), margin: f64::INFINITY }];
        }
        let r = level as i64 - 1;
        vec![CellHit { cell: Cell { level, word: x.window(-r, r) }, margin: self.model.cylinder_margin(x, level) }]
    }

    fn level_diam(&self, level: u32) -> f64 {
        let coding = self.model.coding();
        let branching = (0..coding.alphabet() as Symbol).any(|a| coding.successors(a).count() > 1);
        if level == 0 {
            return SFT_LAMBDA;
        }
        if branching {
            SFT_LAMBDA.powi(-(level as i32 - 1))
        } else {
            0.0
        }
    }

    fn level_margin(&self, level: u32) -> f64 {
        SFT_LAMBDA.powi(-(level as i32 - 2))
    }

    fn multiplicity(&self, _level: u32) -> usize {
        1
    }

    fn decode(&self, itinerary: &BiSequence) -> Option<BiSequence> {
        self.model.is_admissible(itinerary).then(|| itinerary.clone())
    }

    fn p_code(&self) -> &[Symbol] {
        self.p.word()
    }

    fn q_code(&self) -> &[Symbol] {
        self.q.word()
    }
}
