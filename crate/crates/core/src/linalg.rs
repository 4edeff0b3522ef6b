//! Finite sections of sparse operators between point-indexed `ℓ²` spaces.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// A finitely supported vector.
pub type Vector<K> = BTreeMap<K, f64>;

pub fn axpy<K: Ord + Clone>(y: &mut Vector<K>, a: f64, x: &Vector<K>) {
    for (k, v) in x {
        *y.entry(k.clone()).or_insert(0.0) += a * v;
    }
}

pub fn norm2<K>(x: &Vector<K>) -> f64 {
    x.values().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot<K: Ord>(x: &Vector<K>, y: &Vector<K>) -> f64 {
    x.iter().filter_map(|(k, v)| y.get(k).map(|w| v * w)).sum()
}

/// Drops entries with `|v| <= tol`.
pub fn prune<K: Ord>(x: &mut Vector<K>, tol: f64) {
    x.retain(|_, v| v.abs() > tol);
}

/// A linear map given by its columns, computed on demand.
pub trait ColumnMap<D, C> {
    fn column(&self, d: &D) -> Result<Vector<C>>;

    fn apply(&self, x: &Vector<D>) -> Result<Vector<C>>
    where
        C: Ord + Clone,
    {
        let mut out = Vector::new();
        for (d, v) in x {
            axpy(&mut out, *v, &self.column(d)?);
        }
        Ok(out)
    }
}

/// A column map given by a closure.
pub struct FromFn<F>(pub F);

impl<D, C, F: Fn(&D) -> Result<Vector<C>>> ColumnMap<D, C> for FromFn<F> {
    fn column(&self, d: &D) -> Result<Vector<C>> {
        (self.0)(d)
    }
}

/// The columns of an operator on a finite set of basis vectors.
#[derive(Clone, Debug)]
pub struct SparseOperator<D: Ord + Clone, C: Ord + Clone> {
    pub columns: BTreeMap<D, Vector<C>>,
    /// Every nonzero entry of every column lies in the codomain window.
    pub window_exact: bool,
}

impl<D: Ord + Clone, C: Ord + Clone> SparseOperator<D, C> {
    /// Columns of `map` on `domain`, with the full (untruncated) columns.
    pub fn from_map<M: ColumnMap<D, C> + ?Sized>(map: &M, domain: &[D]) -> Result<Self> {
        let mut columns = BTreeMap::new();
        for d in domain {
            columns.insert(d.clone(), map.column(d)?);
        }
        Ok(SparseOperator { columns, window_exact: true })
    }

    /// Restricts rows to `window`, recording whether anything was cut.
    pub fn restrict_rows(&self, window: &BTreeSet<C>) -> Self {
        let mut exact = self.window_exact;
        let columns = self
            .columns
            .iter()
            .map(|(d, col)| {
                let kept: Vector<C> = col.iter().filter(|(c, _)| window.contains(c)).map(|(c, v)| (c.clone(), *v)).collect();
                if kept.len() != col.len() {
                    exact = false;
                }
                (d.clone(), kept)
            })
            .collect();
        SparseOperator { columns, window_exact: exact }
    }

    pub fn rows(&self) -> BTreeSet<C> {
        self.columns.values().flat_map(|c| c.keys().cloned()).collect()
    }

    pub fn nnz(&self) -> usize {
        self.columns.values().map(|c| c.values().filter(|v| **v != 0.0).count()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.columns.values().flat_map(|c| c.values()).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// No nonzero entries at all.
    pub fn is_exactly_zero(&self) -> bool {
        self.nnz() == 0
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut columns = self.columns.clone();
        for (d, col) in &other.columns {
            axpy(columns.entry(d.clone()).or_default(), -1.0, col);
        }
        SparseOperator { columns, window_exact: self.window_exact && other.window_exact }
    }

    pub fn scale(&self, a: f64) -> Self {
        let columns = self.columns.iter().map(|(d, c)| (d.clone(), c.iter().map(|(k, v)| (k.clone(), a * v)).collect())).collect();
        SparseOperator { columns, window_exact: self.window_exact }
    }

    /// Conjugate transpose of the section.
    pub fn adjoint(&self) -> SparseOperator<C, D> {
        let mut columns: BTreeMap<C, Vector<D>> = BTreeMap::new();
        for (d, col) in &self.columns {
            for (c, v) in col {
                columns.entry(c.clone()).or_default().insert(d.clone(), *v);
            }
        }
        SparseOperator { columns, window_exact: self.window_exact }
    }

    /// Column-wise `max |A - B|` over the union of supports.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }

    /// Connected components of the bipartite row/column graph, each as a
    /// dense matrix.
    pub fn blocks(&self) -> Vec<DMatrix<f64>> {
        let cols: Vec<&D> = self.columns.keys().collect();
        let mut parent: Vec<usize> = (0..cols.len()).collect();
        fn find(p: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while p[r] != r {
                r = p[r];
            }
            let mut i = i;
            while p[i] != r {
                let n = p[i];
                p[i] = r;
                i = n;
            }
            r
        }
        let mut owner: BTreeMap<&C, usize> = BTreeMap::new();
        for (j, d) in cols.iter().enumerate() {
            for (c, v) in &self.columns[*d] {
                if *v == 0.0 {
                    continue;
                }
                match owner.get(c) {
                    Some(&k) => {
                        let (a, b) = (find(&mut parent, j), find(&mut parent, k));
                        if a != b {
                            parent[a.max(b)] = a.min(b);
                        }
                    }
                    None => {
                        owner.insert(c, j);
                    }
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for j in 0..cols.len() {
            let r = find(&mut parent, j);
            groups.entry(r).or_default().push(j);
        }
        let mut out = Vec::new();
        for members in groups.values() {
            let rows: BTreeSet<&C> =
                members.iter().flat_map(|&j| self.columns[cols[j]].iter().filter(|(_, v)| **v != 0.0).map(|(c, _)| c)).collect();
            if rows.is_empty() {
                continue;
            }
            let index: BTreeMap<&C, usize> = rows.iter().enumerate().map(|(i, c)| (*c, i)).collect();
            let mut m = DMatrix::zeros(rows.len(), members.len());
            for (jj, &j) in members.iter().enumerate() {
                for (c, v) in &self.columns[cols[j]] {
                    if *v != 0.0 {
                        m[(index[c], jj)] = *v;
                    }
                }
            }
            out.push(m);
        }
        out
    }

    /// All singular values, largest first, from the dense blocks.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.blocks().into_iter().flat_map(|b| b.singular_values().iter().cloned().collect::<Vec<_>>()).collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        s
    }

    /// Number of singular values above `1e-9 σ_max`.
    pub fn numerical_rank(&self) -> usize {
        let s = self.singular_values();
        let Some(&top) = s.first() else {
            return 0;
        };
        if top == 0.0 {
            return 0;
        }
        s.iter().filter(|&&x| x > 1e-9 * top).count()
    }

    /// Largest singular value by dense SVD of the blocks.
    pub fn spectral_norm_dense(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    /// Largest singular value by power iteration on `A*A` from a fixed
    /// pseudo-random start, to relative tolerance `1e-10` within `10⁴`
    /// iterations.
    pub fn spectral_norm(&self) -> Result<NormEstimate> {
        power_norm(self, 1e-10, 10_000)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormEstimate {
    pub norm: f64,
    /// `‖A*A v - σ² v‖` at the returned unit vector.
    pub residual: f64,
    pub iterations: usize,
}

fn power_norm<D: Ord + Clone, C: Ord + Clone>(a: &SparseOperator<D, C>, tol: f64, cap: usize) -> Result<NormEstimate> {
    let cols: Vec<(&D, &Vector<C>)> = a.columns.iter().collect();
    if cols.iter().all(|(_, c)| c.values().all(|v| *v == 0.0)) {
        return Ok(NormEstimate { norm: 0.0, residual: 0.0, iterations: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..cols.len()).map(|_| rng.random_range(0.5..1.5)).collect();
    let normalize = |v: &mut Vec<f64>| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= n);
    };
    normalize(&mut v);
    let gram = |v: &[f64]| -> Vec<f64> {
        let mut av: BTreeMap<&C, f64> = BTreeMap::new();
        for ((_, col), x) in cols.iter().zip(v) {
            for (c, e) in col.iter() {
                *av.entry(c).or_insert(0.0) += e * x;
            }
        }
        cols.iter().map(|(_, col)| col.iter().map(|(c, e)| e * av[c]).sum()).collect()
    };
    let mut prev = 0.0f64;
    for it in 1..=cap {
        let w = gram(&v);
        let rq: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        let residual = w.iter().zip(&v).map(|(a, b)| (a - rq * b).powi(2)).sum::<f64>().sqrt();
        if (rq - prev).abs() <= tol * rq.abs() || residual <= tol * rq.abs() {
            return Ok(NormEstimate { norm: rq.max(0.0).sqrt(), residual, iterations: it });
        }
        prev = rq;
        v = w;
        normalize(&mut v);
    }
    let w = gram(&v);
    let rq: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
    let residual = w.iter().zip(&v).map(|(a, b)| (a - rq * b).powi(2)).sum::<f64>().sqrt();
    Err(Error::NonConvergence { residual, iterations: cap })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(entries: &[(u32, u32, f64)]) -> SparseOperator<u32, u32> {
        let mut columns: BTreeMap<u32, Vector<u32>> = BTreeMap::new();
        for &(r, c, v) in entries {
            columns.entry(c).or_default().insert(r, v);
        }
        SparseOperator { columns, window_exact: true }
    }

    #[test]
    fn zero_and_identity() {
        let z = op(&[]);
        assert_eq!(z.spectral_norm().unwrap().norm, 0.0);
        assert_eq!(z.numerical_rank(), 0);
        let id = op(&[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        assert!((id.spectral_norm().unwrap().norm - 1.0).abs() < 1e-10);
        assert_eq!(id.numerical_rank(), 3);
    }

    #[test]
    fn single_column_has_rank_one() {
        let a = op(&[(0, 7, 3.0), (1, 7, 4.0)]);
        assert_eq!(a.numerical_rank(), 1);
        assert!((a.spectral_norm().unwrap().norm - 5.0).abs() < 1e-10);
    }

    #[test]
    fn power_iteration_matches_svd() {
        let a = op(&[(0, 0, 1.0), (1, 0, 2.0), (1, 1, -1.0), (2, 1, 0.5), (5, 4, 0.3), (2, 2, 3.0)]);
        let p = a.spectral_norm().unwrap().norm;
        assert!((p - a.spectral_norm_dense()).abs() < 1e-8);
        assert_eq!(a.blocks().len(), 2);
    }
}
