//! Randomised invariants.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smale_lab::axioms::check_axioms;
use smale_lab::fredholm::{a_nj, seed_points, shift_scalar};
use smale_lab::points::random_point;
use smale_lab::verify::fmt_g;
use smale_lab::{AperiodicSample, CoveredSystem, IsometryFamily, PartitionOfUnity, QuadNumber, Sft, Torus};

fn quad(a: (i64, i64), b: (i64, i64)) -> QuadNumber {
    &QuadNumber::from_ratio(a.0, a.1) + &(&QuadNumber::from_ratio(b.0, b.1) * &QuadNumber::sqrt_d(5))
}

fn ratio() -> impl Strategy<Value = (i64, i64)> {
    (-1000i64..=1000, 1i64..=50)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn quad_field_laws(a in ratio(), b in ratio(), c in ratio(), d in ratio()) {
        let x = quad(a, b);
        let y = quad(c, d);
        prop_assert_eq!(&(&x + &y) - &y, x.clone());
        prop_assert_eq!(&x * &y, &y * &x);
        if !y.is_zero() {
            prop_assert_eq!(&(&x / &y) * &y, x.clone());
            prop_assert_eq!(&y * &y.recip(), QuadNumber::one());
        }
        prop_assert_eq!(&x * &x.conj(), QuadNumber::from_rational(x.norm()));
    }

    #[test]
    fn quad_order_agrees_with_floats(a in ratio(), b in ratio(), c in ratio(), d in ratio()) {
        let x = quad(a, b);
        let y = quad(c, d);
        let (xf, yf) = (x.to_f64(), y.to_f64());
        if (xf - yf).abs() > 1e-9 * (1.0 + xf.abs()) {
            prop_assert_eq!(x < y, xf < yf);
        }
        prop_assert_eq!(x.signum(), if x.is_zero() { 0 } else if xf > 0.0 { 1 } else { -1 });
    }

    #[test]
    fn quad_to_f64_survives_cancellation(k in 1i64..=30) {
        // φ^-k is a difference of two numbers of size φ^k.
        let phi = quad((1, 2), (1, 2));
        let expect = ((1.0 + 5f64.sqrt()) / 2.0).powi(-(k as i32));
        prop_assert!(close(phi.powi(-k).to_f64(), expect, 1e-14));
    }

    #[test]
    fn fmt_g_round_trips(x in prop::num::f64::NORMAL) {
        let back: f64 = fmt_g(x).parse().unwrap();
        prop_assert!(close(back, x, 1e-11));
    }

    #[test]
    fn quasi_invariance_scalars(n in 1u32..500, j in 1u32..4) {
        prop_assume!(n >= j);
        let a = a_nj(n, j);
        prop_assert!(a > 0.0 && a <= 1.0);
        // a_{n,j} = Σ_{m=n+j}^{2n} (2m+1) / (c_{n+j} c_n) with c_n² = (n+1)(3n+1).
        let s: f64 = (n + j..=2 * n).map(|m| (2 * m + 1) as f64).sum();
        let cc = |k: u32| ((k + 1) as f64 * (3 * k + 1) as f64).sqrt();
        prop_assert!(close(a, s / (cc(n + j) * cc(n)), 1e-13));
        let sh = shift_scalar(n, j);
        prop_assert!(sh > 0.0 && sh < 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn sft_axioms_hold(seed in any::<u64>()) {
        let rep = check_axioms(&Sft::golden_default(), 100, seed);
        prop_assert_eq!(rep.violations(), 0);
    }

    #[test]
    fn torus_axioms_hold(seed in any::<u64>()) {
        let rep = check_axioms(&Torus::golden_default(), 40, seed);
        prop_assert_eq!(rep.violations(), 0);
    }

    #[test]
    fn partition_sums_to_one(seed in any::<u64>(), level in 1u32..=4) {
        let sft = Sft::golden_default();
        let torus = Torus::golden_default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            check_partition(&sft, level, &random_point(&sft, &mut rng, 8))?;
            check_partition(&torus, level.min(3), &random_point(&torus, &mut rng, 4))?;
        }
    }

    #[test]
    fn iota_is_an_isometry(pick in 0usize..64, n in 1u32..=4, r_off in 0u32..8) {
        let sys = Sft::golden_default();
        let sample = AperiodicSample::build(&sys, 3, 12).unwrap();
        let fam = IsometryFamily::new(&sys, &sample);
        let seeds = seed_points(&sys, 4, 64);
        let y = &seeds[pick % seeds.len()];
        let r = (r_off % (2 * n - 1)) as i64 - (n as i64 - 1);
        let col = fam.iota_column(n, r, y).unwrap();
        let back = fam.iota_adjoint_apply(n, r, &col).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert!((back[y] - 1.0).abs() < 1e-12);
    }
}

fn check_partition<S: CoveredSystem>(sys: &S, level: u32, x: &S::Point) -> Result<(), TestCaseError> {
    let pou = PartitionOfUnity::new(sys, level);
    let w = pou.weights(x);
    prop_assert!(!w.is_empty());
    let sum: f64 = w.iter().map(|(cell, _)| pou.big_f(x, cell)).sum();
    prop_assert!((sum - 1.0).abs() < 1e-12, "sum {}", sum);
    for (cell, _) in &w {
        let f = pou.big_f(x, cell);
        prop_assert!((0.0..=1.0).contains(&f));
    }
    Ok(())
}
