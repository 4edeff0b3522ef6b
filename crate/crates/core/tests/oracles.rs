//! Closed forms and structural identities checked against independent
//! computations.

use std::collections::BTreeSet;

use smale_lab::fredholm::{a_nj, c, gamma, seed_points, shift_norm, shift_scalar, step_norm, zeta, TParams};
use smale_lab::groupoid::{build_window, linked_pairs, Link, WindowGenerators};
use smale_lab::linalg::FromFn;
use smale_lab::word::Symbol;
use smale_lab::{AperiodicSample, CoveredSystem, IsometryFamily, SmaleSpace, Sft, SparseOperator, Torus, ValueFn, Vector};

/// `W*_{n+j} W_n` as the normalised sum of `θ*_m θ_m = (2m+1) I` over the
/// shared range of `m`.
fn a_by_sum(n: u32, j: u32) -> f64 {
    let s: f64 = (n + j..=2 * n).map(|m| (2 * m + 1) as f64).sum();
    s / (((n + j + 1) as f64 * (3 * (n + j) + 1) as f64).sqrt() * ((n + 1) as f64 * (3 * n + 1) as f64).sqrt())
}

/// `W*_n (u⊗u)^j W_n u^{-j}` by counting the surviving `(m, r)` terms.
fn shift_by_count(n: u32, j: u32) -> f64 {
    let terms: i64 = (n as i64..=2 * n as i64).map(|m| (-m + j as i64..=m).count() as i64).sum();
    terms as f64 / ((n + 1) as f64 * (3 * n + 1) as f64)
}

#[test]
fn normalising_constants() {
    assert_eq!(c(0), 1.0);
    assert!((c(4) - 65f64.sqrt()).abs() < 1e-15);
    assert!((c(4) - 8.0623).abs() < 1e-4);
    assert_eq!(gamma(16), 1);
    assert_eq!(gamma(17), 2);
    assert_eq!(gamma(-5), gamma(5));
    assert_eq!(gamma(0), 0);
}

#[test]
fn step_closed_form_matches_theta_sum() {
    for j in 1..=3 {
        for n in j..=64 {
            assert!((a_nj(n, j) - a_by_sum(n, j)).abs() < 1e-13, "n = {n}, j = {j}");
            let direct = (2.0 - 2.0 * a_by_sum(n, j)).sqrt();
            assert!((step_norm(n, j) - direct).abs() < 1e-12);
        }
    }
    assert!((step_norm(4, 1) - 0.76300).abs() < 5e-6);
}

#[test]
fn shift_closed_form_matches_term_count() {
    for j in 1..=3 {
        for n in j..=64 {
            assert!((shift_scalar(n, j) - shift_by_count(n, j)).abs() < 1e-13, "n = {n}, j = {j}");
            let direct = (2.0 - 2.0 * shift_by_count(n, j)).sqrt();
            assert!((shift_norm(n, j) - direct).abs() < 1e-12);
        }
    }
}

#[test]
fn step_norm_decays_like_inverse_square_root() {
    // 1 - a_{n,j} = 5j / (3(n+1)) + O(n^-2), so n ‖W_{n+j} - W_n‖² stays bounded away from 0.
    for j in 1..=2u32 {
        let n = 4000u32;
        let lead = 10.0 * j as f64 / (3.0 * (n + 1) as f64);
        let sq = step_norm(n, j).powi(2);
        assert!((sq / lead - 1.0).abs() < 5e-3, "j = {j}: {sq} vs {lead}");
    }
}

#[test]
fn zeta_by_enumeration() {
    for (n, i, k, l) in [(0, 0, 0, 0), (20, 0, 0, 0), (33, 1, 0, 2), (50, -1, 1, 0)] {
        let gk = gamma(2 * n + k);
        let gl = gamma(2 * n + l);
        let mut s = 0.0;
        for m in gk..=2 * gl {
            s += (2 * m as i64 + 1 - i) as f64;
        }
        assert!((zeta(n, i, k, l) - s / (c(gl) * c(gk))).abs() < 1e-12);
    }
    assert!((zeta(0, 0, 0, 0) - 1.0).abs() < 1e-15);
}

fn count_by_search(sys: &impl CoveredSystem, len: usize) -> u128 {
    let coding = sys.coding();
    fn extend(coding: &smale_lab::Coding, last: Symbol, left: usize) -> u128 {
        if left == 0 {
            return 1;
        }
        coding.successors(last).map(|b| extend(coding, b, left - 1)).sum()
    }
    (0..coding.alphabet() as Symbol).map(|a| extend(coding, a, len - 1)).sum()
}

#[test]
fn cover_counts_by_depth_first_search() {
    let sft = Sft::golden_default();
    let fib = [2u128, 5, 13, 34, 89, 233];
    for (n, f) in (1..=6).zip(fib) {
        assert_eq!(sft.coding().count(n), f);
        assert_eq!(count_by_search(&sft, sft.coding().word_len(n)), f);
    }
    let torus = Torus::golden_default();
    for n in 1..=2 {
        assert_eq!(torus.coding().count(n), count_by_search(&torus, torus.coding().word_len(n)));
    }
}

#[test]
fn entropies() {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    assert!((Sft::golden_default().constants().entropy - phi.ln()).abs() < 1e-12);
    assert!((Torus::golden_default().constants().entropy - phi.ln()).abs() < 1e-12);
    assert!((Torus::cat_default().constants().entropy - (phi * phi).ln()).abs() < 1e-12);
    assert!((Torus::cat_default().constants().lambda - phi * phi).abs() < 1e-12);
}

#[test]
fn torus_level_diameters_scale_exactly() {
    let t = Torus::golden_default();
    for n in 1..=12 {
        assert!(t.diam_within_bound(n));
        let ratio = t.level_diam(n) * t.constants().lambda.powi(n as i32 - 1) / t.level_diam(1);
        assert!((ratio - 1.0).abs() < 1e-12);
    }
}

#[test]
fn spectral_norm_of_a_shear() {
    // ‖[[1, 1], [0, 1]]‖ is the golden ratio.
    let m = FromFn(|d: &u8| -> smale_lab::Result<Vector<u8>> {
        Ok(if *d == 0 { Vector::from([(0, 1.0)]) } else { Vector::from([(0, 1.0), (1, 1.0)]) })
    });
    let op = SparseOperator::from_map(&m, &[0u8, 1]).unwrap();
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let est = op.spectral_norm().unwrap();
    assert!((est.norm - phi).abs() < 1e-9);
    assert!((op.spectral_norm_dense() - phi).abs() < 1e-12);
    assert_eq!(op.numerical_rank(), 2);
}

fn transpose_consistency<S: CoveredSystem>(sys: &S, eager: u32, cap: usize) {
    let sample = AperiodicSample::build(sys, eager, cap).unwrap();
    let fam = IsometryFamily::new(sys, &sample);
    for y in seed_points(sys, 4, 12) {
        for n in 1..=4u32 {
            for r in -(n as i64 - 1)..=n as i64 - 1 {
                for (pair, v) in fam.iota_column(n, r, &y).unwrap() {
                    let back = fam.iota_adjoint_entry(n, r, &pair).unwrap().expect("pair in the range");
                    assert_eq!(back.0, y);
                    assert!((back.1 - v).abs() < 1e-15);
                }
            }
        }
    }
}

#[test]
fn iota_adjoint_is_the_transpose() {
    transpose_consistency(&Sft::golden_default(), 3, 12);
    transpose_consistency(&Torus::golden_default(), 1, 30);
}

#[test]
fn theta_columns_have_norm_two_m_plus_one() {
    let sys = Sft::golden_default();
    let sample = AperiodicSample::build(&sys, 3, 12).unwrap();
    let fam = IsometryFamily::new(&sys, &sample);
    for y in seed_points(&sys, 4, 6) {
        for m in 0..=3u32 {
            let col = fam.theta_column(m, &y).unwrap();
            let back = fam.theta_adjoint_apply(m, &col).unwrap();
            let expect = (2 * m + 1) as f64;
            let off: f64 = back.iter().filter(|(p, _)| **p != y).map(|(_, v)| v.abs()).sum();
            assert!((back[&y] - expect).abs() < 1e-12 && off == 0.0, "m = {m}");
        }
        let w0 = fam.w_column(0, &y).unwrap();
        assert_eq!(w0, Vector::from([((y.clone(), y.clone()), 1.0)]));
        assert_eq!(fam.v_column(-5, &y).unwrap(), fam.v_column(5, &y).unwrap());
    }
}

#[test]
fn t_block_vanishes_outside_its_support() {
    let sys = Sft::golden_default();
    let sample = AperiodicSample::build(&sys, 3, 12).unwrap();
    let fam = IsometryFamily::new(&sys, &sample);
    let bump = ValueFn::Bump { height: 1.0 };
    let (a, b) = linked_pairs(&sys, 1, Link::StableFirst, -4, 2, bump.clone(), bump).unwrap().swap_remove(0);
    let seed = seed_points(&sys, 6, 200);
    let gens = WindowGenerators { phi_depth: 2, sample: None, bisections: vec![&a, &b], rounds: 2 };
    let window = build_window(&sys, &seed, &gens, 3000).unwrap();
    for n in [-2, 0, 1, 3] {
        let t = fam.t_block(&a, &b, TParams { i: 0, k: 0, l: 0, n });
        let support: BTreeSet<_> = t.support().into_iter().collect();
        let outside: Vec<_> = window.points().iter().filter(|p| !support.contains(*p)).cloned().collect();
        let op = SparseOperator::from_map(&t, &outside).unwrap();
        assert!(op.is_exactly_zero(), "n = {n}: nonzero column outside the support");
    }
}
