//! The isometries `ι_{n,r} : ℋ → ℋ ⊗ ℋ`, their averages `W_n`, the slowed
//! family `V_n = W_{γ_n}` and the difference blocks `T_n`.
//!
//! `ι_{n,r} δ_y = Σ_k f_{n,k}(φ^{-r} y) δ_{φ^r [φ^{-r} y, g_{n,k}]} ⊗ δ_{φ^r [g_{n,k}, φ^{-r} y]}`
//! where `g_{n,k}` is the sample point of the `k`-th level-`n` cell and
//! `f_{n,k}` the square-root partition of unity. `ι_{0,0}` is the diagonal
//! embedding.

use std::collections::{BTreeSet, HashMap};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::groupoid::{support_stable_first, Bisection, Orientation, ProductBlock};
use crate::linalg::{axpy, prune, ColumnMap, Vector};
use crate::markov::CoveredSystem;
use crate::pou::PartitionOfUnity;
use crate::sample::AperiodicSample;

pub type Pair<P> = (P, P);

/// Cached columns kept before a cache is flushed.
const CACHE_LIMIT: usize = 1 << 15;

/// `c_n = ((n+1)(3n+1))^{1/2}`.
pub fn c(n: u32) -> f64 {
    (((n as f64) + 1.0) * (3.0 * n as f64 + 1.0)).sqrt()
}

/// `γ_n = ⌈|n| / 16⌉`.
pub fn gamma(n: i64) -> u32 {
    n.unsigned_abs().div_ceil(16) as u32
}

/// `W*_{n+j} W_n = a_{n,j} I`.
pub fn a_nj(n: u32, j: u32) -> f64 {
    let (n, j) = (n as f64, j as f64);
    (n + 1.0 - j) * (3.0 * n + 1.0 + j) / ((n + 1.0 + j) * (3.0 * n + 1.0 + 3.0 * j) * (n + 1.0) * (3.0 * n + 1.0)).sqrt()
}

/// `W*_n (u⊗u)^j W_n = ((3n+1-j)/(3n+1)) u^j`.
pub fn shift_scalar(n: u32, j: u32) -> f64 {
    (3.0 * n as f64 + 1.0 - j as f64) / (3.0 * n as f64 + 1.0)
}

/// `‖W_{n+j} - W_n‖`.
pub fn step_norm(n: u32, j: u32) -> f64 {
    (2.0 - 2.0 * a_nj(n, j)).max(0.0).sqrt()
}

/// `‖(u⊗u)^j W_n - W_n u^j‖`.
pub fn shift_norm(n: u32, j: u32) -> f64 {
    (2.0 - 2.0 * shift_scalar(n, j)).max(0.0).sqrt()
}

/// `ζ_n = c_{γ_{2n+l}}^{-1} c_{γ_{2n+k}}^{-1} Σ_{m=γ_{2n+k}}^{2γ_{2n+l}} (2m+1-i)`.
pub fn zeta(n: i64, i: i64, k: i64, l: i64) -> f64 {
    let gk = gamma(2 * n + k);
    let gl = gamma(2 * n + l);
    let s: f64 = (gk as i64..=2 * gl as i64).map(|m| (2 * m + 1 - i) as f64).sum();
    s / (c(gl) * c(gk))
}

/// Sample, partition of unity and memoized columns for one system.
pub struct IsometryFamily<'a, S: CoveredSystem> {
    sys: &'a S,
    sample: &'a AperiodicSample<S>,
    iota_cache: Mutex<HashMap<(u32, i64, S::Point), Vector<Pair<S::Point>>>>,
    theta_cache: Mutex<HashMap<(u32, S::Point), Vector<Pair<S::Point>>>>,
}

impl<'a, S: CoveredSystem> IsometryFamily<'a, S> {
    pub fn new(sys: &'a S, sample: &'a AperiodicSample<S>) -> Self {
        IsometryFamily { sys, sample, iota_cache: Mutex::new(HashMap::new()), theta_cache: Mutex::new(HashMap::new()) }
    }

    pub fn sys(&self) -> &'a S {
        self.sys
    }

    pub fn sample(&self) -> &'a AperiodicSample<S> {
        self.sample
    }

    fn check(n: u32, r: i64) -> Result<()> {
        if (n == 0 && r == 0) || r.unsigned_abs() < n as u64 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("iota_{{{n},{r}}} needs |r| <= n - 1")))
        }
    }

    /// `ι_{n,r} δ_y`.
    pub fn iota_column(&self, n: u32, r: i64, y: &S::Point) -> Result<Vector<Pair<S::Point>>> {
        Self::check(n, r)?;
        let key = (n, r, y.clone());
        if let Some(c) = self.iota_cache.lock().unwrap().get(&key) {
            return Ok(c.clone());
        }
        let sys = self.sys;
        let mut out = Vector::new();
        if n == 0 {
            out.insert((y.clone(), y.clone()), 1.0);
        } else {
            let y0 = sys.apply(y, -r);
            for (cell, f) in PartitionOfUnity::new(sys, n).roots(&y0) {
                let g = self.sample.get(sys, &cell)?;
                if let (Some(x), Some(z)) = (sys.bracket(&y0, &g), sys.bracket(&g, &y0)) {
                    *out.entry((sys.apply(&x, r), sys.apply(&z, r))).or_insert(0.0) += f;
                }
            }
        }
        let mut cache = self.iota_cache.lock().unwrap();
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, out.clone());
        Ok(out)
    }

    /// `ι*_{n,r} (δ_x ⊗ δ_z)`: at most one entry.
    pub fn iota_adjoint_entry(&self, n: u32, r: i64, pair: &Pair<S::Point>) -> Result<Option<(S::Point, f64)>> {
        Self::check(n, r)?;
        let sys = self.sys;
        if n == 0 {
            return Ok((pair.0 == pair.1).then(|| (pair.0.clone(), 1.0)));
        }
        let x = sys.apply(&pair.0, -r);
        let z = sys.apply(&pair.1, -r);
        let Some(y0) = sys.bracket(&x, &z) else {
            return Ok(None);
        };
        for (cell, f) in PartitionOfUnity::new(sys, n).roots(&y0) {
            let g = self.sample.get(sys, &cell)?;
            if sys.bracket(&y0, &g).as_ref() == Some(&x) && sys.bracket(&g, &y0).as_ref() == Some(&z) {
                return Ok(Some((sys.apply(&y0, r), f)));
            }
        }
        Ok(None)
    }

    pub fn iota_adjoint_apply(&self, n: u32, r: i64, v: &Vector<Pair<S::Point>>) -> Result<Vector<S::Point>> {
        let mut out = Vector::new();
        for (pair, a) in v {
            if let Some((y, f)) = self.iota_adjoint_entry(n, r, pair)? {
                *out.entry(y).or_insert(0.0) += a * f;
            }
        }
        Ok(out)
    }

    /// `p_{n,r} = ι_{n,r} ι*_{n,r}` on a pair.
    pub fn projection_column(&self, n: u32, r: i64, pair: &Pair<S::Point>) -> Result<Vector<Pair<S::Point>>> {
        let mut out = Vector::new();
        if let Some((y, f)) = self.iota_adjoint_entry(n, r, pair)? {
            axpy(&mut out, f, &self.iota_column(n, r, &y)?);
        }
        Ok(out)
    }

    /// `θ_m δ_y = Σ_{|r| <= m} ι_{2m,r} δ_y`.
    pub fn theta_column(&self, m: u32, y: &S::Point) -> Result<Vector<Pair<S::Point>>> {
        let key = (m, y.clone());
        if let Some(c) = self.theta_cache.lock().unwrap().get(&key) {
            return Ok(c.clone());
        }
        let mut out = Vector::new();
        for r in -(m as i64)..=m as i64 {
            axpy(&mut out, 1.0, &self.iota_column(2 * m, r, y)?);
        }
        let mut cache = self.theta_cache.lock().unwrap();
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, out.clone());
        Ok(out)
    }

    pub fn theta_adjoint_apply(&self, m: u32, v: &Vector<Pair<S::Point>>) -> Result<Vector<S::Point>> {
        let mut out = Vector::new();
        for r in -(m as i64)..=m as i64 {
            axpy(&mut out, 1.0, &self.iota_adjoint_apply(2 * m, r, v)?);
        }
        Ok(out)
    }

    /// `W_n δ_y = c_n^{-1} Σ_{m=n}^{2n} θ_m δ_y`.
    pub fn w_column(&self, n: u32, y: &S::Point) -> Result<Vector<Pair<S::Point>>> {
        let mut out = Vector::new();
        for m in n..=2 * n {
            axpy(&mut out, 1.0 / c(n), &self.theta_column(m, y)?);
        }
        Ok(out)
    }

    pub fn w_adjoint_apply(&self, n: u32, v: &Vector<Pair<S::Point>>) -> Result<Vector<S::Point>> {
        let mut out = Vector::new();
        for m in n..=2 * n {
            axpy(&mut out, 1.0 / c(n), &self.theta_adjoint_apply(m, v)?);
        }
        Ok(out)
    }

    pub fn v_column(&self, n: i64, y: &S::Point) -> Result<Vector<Pair<S::Point>>> {
        self.w_column(gamma(n), y)
    }

    pub fn v_adjoint_apply(&self, n: i64, v: &Vector<Pair<S::Point>>) -> Result<Vector<S::Point>> {
        self.w_adjoint_apply(gamma(n), v)
    }

    /// `(u⊗u)^j` on a vector of pairs.
    pub fn shift_pairs(&self, j: i64, v: &Vector<Pair<S::Point>>) -> Vector<Pair<S::Point>> {
        v.iter().map(|((x, z), a)| ((self.sys.apply(x, j), self.sys.apply(z, j)), *a)).collect()
    }

    pub fn iota(&self, n: u32, r: i64) -> Result<Iota<'_, 'a, S>> {
        Self::check(n, r)?;
        Ok(Iota { fam: self, n, r })
    }

    pub fn iota_adjoint(&self, n: u32, r: i64) -> Result<IotaAdjoint<'_, 'a, S>> {
        Self::check(n, r)?;
        Ok(IotaAdjoint { fam: self, n, r })
    }

    pub fn projection(&self, n: u32, r: i64) -> Result<Projection<'_, 'a, S>> {
        Self::check(n, r)?;
        Ok(Projection { fam: self, n, r })
    }

    pub fn big_w(&self, n: u32) -> BigW<'_, 'a, S> {
        BigW { fam: self, n }
    }

    pub fn big_w_adjoint(&self, n: u32) -> BigWAdjoint<'_, 'a, S> {
        BigWAdjoint { fam: self, n }
    }

    pub fn t_block(&self, a: &Bisection<S::Point>, b: &Bisection<S::Point>, params: TParams) -> TBlock<'_, 'a, S> {
        TBlock { fam: self, a: a.clone(), b: b.clone(), p: params }
    }
}

pub struct Iota<'f, 'a, S: CoveredSystem> {
    fam: &'f IsometryFamily<'a, S>,
    n: u32,
    r: i64,
}

impl<S: CoveredSystem> ColumnMap<S::Point, Pair<S::Point>> for Iota<'_, '_, S> {
    fn column(&self, y: &S::Point) -> Result<Vector<Pair<S::Point>>> {
        self.fam.iota_column(self.n, self.r, y)
    }
}

pub struct IotaAdjoint<'f, 'a, S: CoveredSystem> {
    fam: &'f IsometryFamily<'a, S>,
    n: u32,
    r: i64,
}

impl<S: CoveredSystem> ColumnMap<Pair<S::Point>, S::Point> for IotaAdjoint<'_, '_, S> {
    fn column(&self, p: &Pair<S::Point>) -> Result<Vector<S::Point>> {
        Ok(self.fam.iota_adjoint_entry(self.n, self.r, p)?.into_iter().collect())
    }
}

pub struct Projection<'f, 'a, S: CoveredSystem> {
    fam: &'f IsometryFamily<'a, S>,
    n: u32,
    r: i64,
}

impl<S: CoveredSystem> ColumnMap<Pair<S::Point>, Pair<S::Point>> for Projection<'_, '_, S> {
    fn column(&self, p: &Pair<S::Point>) -> Result<Vector<Pair<S::Point>>> {
        self.fam.projection_column(self.n, self.r, p)
    }
}

pub struct BigW<'f, 'a, S: CoveredSystem> {
    fam: &'f IsometryFamily<'a, S>,
    n: u32,
}

impl<S: CoveredSystem> ColumnMap<S::Point, Pair<S::Point>> for BigW<'_, '_, S> {
    fn column(&self, y: &S::Point) -> Result<Vector<Pair<S::Point>>> {
        self.fam.w_column(self.n, y)
    }
}

pub struct BigWAdjoint<'f, 'a, S: CoveredSystem> {
    fam: &'f IsometryFamily<'a, S>,
    n: u32,
}

impl<S: CoveredSystem> ColumnMap<Pair<S::Point>, S::Point> for BigWAdjoint<'_, '_, S> {
    fn column(&self, p: &Pair<S::Point>) -> Result<Vector<S::Point>> {
        self.fam.w_adjoint_apply(self.n, &[(p.clone(), 1.0)].into_iter().collect())
    }
}

/// Indices of a difference block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct TParams {
    pub i: i64,
    pub k: i64,
    pub l: i64,
    pub n: i64,
}

/// Entries with `|v|` at or below this are rounding residue of the
/// difference and are dropped.
pub const T_PRUNE: f64 = 1e-13;

/// `T_n = V*_{2n+l} (α_u^{-n}(b) u^i ⊗ α_s^n(a) u^i) V_{2n+k} - α_u^{-n}(b) α_s^n(a) u^i`.
pub struct TBlock<'f, 'a, S: CoveredSystem> {
    fam: &'f IsometryFamily<'a, S>,
    a: Bisection<S::Point>,
    b: Bisection<S::Point>,
    p: TParams,
}

impl<S: CoveredSystem> TBlock<'_, '_, S> {
    /// `(α_u^{-n}(b) u^i ⊗ α_s^n(a) u^i)` applied to a vector of pairs.
    pub fn twisted_tensor(&self, v: &Vector<Pair<S::Point>>) -> Vector<Pair<S::Point>> {
        let sys = self.fam.sys;
        let (a, b) = (self.a.alpha(self.p.n), self.b.alpha(-self.p.n));
        let mut out = Vector::new();
        for ((x, z), c) in v {
            let Some((x1, vb)) = b.act(sys, &sys.apply(x, self.p.i)) else { continue };
            let Some((z1, va)) = a.act(sys, &sys.apply(z, self.p.i)) else { continue };
            *out.entry((x1, z1)).or_insert(0.0) += c * vb * va;
        }
        out
    }

    pub fn product(&self) -> ProductBlock<'_, S> {
        ProductBlock::new(self.fam.sys, &self.a, &self.b, self.p.n, self.p.i)
    }

    /// Every `y` where the product term can be nonzero.
    pub fn product_support(&self) -> Vec<S::Point> {
        let n = self.p.n;
        support_stable_first(self.fam.sys, &self.a.alpha(n), &self.b.alpha(-n), self.p.i)
    }

    /// Every `y` where the tensor term can be nonzero: the pair entries lie
    /// on the leaves of `y` within `ε'_X` and must meet both domains.
    pub fn tensor_support(&self) -> Vec<S::Point> {
        let sys = self.fam.sys;
        let (n, i) = (self.p.n, self.p.i);
        let (sa, sb) = (self.a.shift() + n, self.b.shift() - n);
        let s_base = sys.apply(self.b.w(), sb - i);
        let u_base = sys.apply(self.a.w(), sa - i);
        let k_s = (i - sb).max(0) + 1;
        let k_u = (sa - i).max(0) + 1;
        sys.leaf_intersection(&s_base, k_s, &u_base, k_u)
    }

    /// Every `y` where the column can be nonzero.
    pub fn support(&self) -> Vec<S::Point> {
        let mut out: BTreeSet<S::Point> = self.product_support().into_iter().collect();
        out.extend(self.tensor_support());
        out.into_iter().collect()
    }

    pub fn params(&self) -> TParams {
        self.p
    }
}

impl<S: CoveredSystem> ColumnMap<S::Point, S::Point> for TBlock<'_, '_, S> {
    fn column(&self, y: &S::Point) -> Result<Vector<S::Point>> {
        let TParams { k, l, n, .. } = self.p;
        let inner = self.fam.v_column(2 * n + k, y)?;
        let mut out = self.fam.v_adjoint_apply(2 * n + l, &self.twisted_tensor(&inner))?;
        if let Some((t, v)) = self.product().entry(y) {
            *out.entry(t).or_insert(0.0) -= v;
        }
        prune(&mut out, T_PRUNE);
        Ok(out)
    }
}

/// The `(t, s) ← (m, r)` block `ι*_{t,s} (α_u^{-n}(b) u^i ⊗ α_s^n(a) u^i) ι_{m,r}`.
pub struct OffDiagonalBlock<'f, 'a, S: CoveredSystem> {
    pub t: TBlock<'f, 'a, S>,
    pub out: (u32, i64),
    pub inp: (u32, i64),
}

impl<S: CoveredSystem> ColumnMap<S::Point, S::Point> for OffDiagonalBlock<'_, '_, S> {
    fn column(&self, y: &S::Point) -> Result<Vector<S::Point>> {
        let fam = self.t.fam;
        let v = fam.iota_column(self.inp.0, self.inp.1, y)?;
        let mut out = fam.iota_adjoint_apply(self.out.0, self.out.1, &self.t.twisted_tensor(&v))?;
        prune(&mut out, 0.0);
        Ok(out)
    }
}

/// Checks the orientations of a stable/unstable pair.
pub fn check_pair<P: Clone + Ord + std::fmt::Debug>(a: &Bisection<P>, b: &Bisection<P>) -> Result<()> {
    if a.orientation() != Orientation::Stable || b.orientation() != Orientation::Unstable {
        return Err(Error::InvalidArgument("expected a stable and an unstable bisection".into()));
    }
    Ok(())
}

/// Points of `ℓ²(X^h)` on which an exactness check is run: the enumerated
/// homoclinic points followed by `φ`-translates.
pub fn seed_points<S: CoveredSystem>(sys: &S, cap: usize, count: usize) -> Vec<S::Point> {
    let base = crate::dynamics::HomoclinicSystem::enumerate_homoclinic(sys, cap);
    let mut out: BTreeSet<S::Point> = BTreeSet::new();
    let mut k = 0i64;
    while out.len() < count && !base.is_empty() {
        for x in &base {
            out.insert(sys.apply(x, k));
            if out.len() >= count {
                break;
            }
        }
        k = if k <= 0 { 1 - k } else { -k };
        if k.abs() > 1000 {
            break;
        }
    }
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(c(0), 1.0);
        assert!((c(4) - 65f64.sqrt()).abs() < 1e-15);
        assert!((a_nj(4, 1) - 56.0 / 6240f64.sqrt()).abs() < 1e-15);
        assert!((a_nj(1, 1) - 5.0 / 168f64.sqrt()).abs() < 1e-15);
        assert!((step_norm(4, 1) - 0.76300).abs() < 5e-6);
        assert!((shift_scalar(4, 1) - 12.0 / 13.0).abs() < 1e-15);
        assert!((shift_norm(4, 1) - 0.39223).abs() < 5e-6);
        assert_eq!(gamma(16), 1);
        assert_eq!(gamma(17), 2);
        assert_eq!(gamma(-5), gamma(5));
        assert_eq!(gamma(0), 0);
    }

    #[test]
    fn zeta_is_one_on_the_diagonal() {
        for n in 0..40 {
            assert!((zeta(n, 0, 3, 3) - 1.0).abs() < 1e-14, "n = {n}");
        }
    }
}
