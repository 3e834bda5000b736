//! Randomized invariants of the proximal map and the persistence format.

use cappa::problem::{generate_gaussian_instance, load_bundle, save_bundle};
use cappa::prox::soft_threshold;
use ndarray::Array1;
use proptest::prelude::*;

proptest! {
    // the proximal map of the l1 norm is firmly nonexpansive; elementwise
    // 1-Lipschitz is the scalar consequence
    #[test]
    fn soft_threshold_is_nonexpansive(
        a in prop::collection::vec(-1e6f64..1e6, 1..40),
        b in prop::collection::vec(-1e6f64..1e6, 1..40),
        tau in 0.0f64..1e3,
    ) {
        let n = a.len().min(b.len());
        let av = Array1::from(a[..n].to_vec());
        let bv = Array1::from(b[..n].to_vec());
        let sa = soft_threshold(&av.view(), tau).unwrap();
        let sb = soft_threshold(&bv.view(), tau).unwrap();
        for i in 0..n {
            // slack covers rounding of |x| - tau at the operand magnitudes
            let slack = 1e-12 * av[i].abs().max(bv[i].abs()).max(tau).max(1.0);
            prop_assert!((sa[i] - sb[i]).abs() <= (av[i] - bv[i]).abs() + slack);
        }
    }

    #[test]
    fn soft_threshold_shrinks_toward_zero(
        v in prop::collection::vec(-1e6f64..1e6, 1..40),
        tau in 0.0f64..1e3,
    ) {
        let x = Array1::from(v);
        let s = soft_threshold(&x.view(), tau).unwrap();
        for i in 0..x.len() {
            prop_assert!(s[i].abs() <= x[i].abs());
            prop_assert!(s[i] == 0.0 || s[i].signum() == x[i].signum());
            // exact shrinkage by tau outside the dead zone
            if x[i].abs() > tau {
                prop_assert!((s[i].abs() - (x[i].abs() - tau)).abs() <= 1e-9 * x[i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn bundle_roundtrip_is_bit_identical(
        n in 4usize..24,
        seed in 0u64..1000,
        sigma in 0.0f64..0.1,
    ) {
        let m = n / 2 + 1;
        let s = (n / 8).max(1);
        let bundle = generate_gaussian_instance(n, m, s, sigma, 0.1, seed).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.bin");
        save_bundle(&bundle, &path).unwrap();
        let loaded = load_bundle(&path).unwrap();
        prop_assert_eq!(loaded.problem.phi(), bundle.problem.phi());
        prop_assert_eq!(loaded.problem.y(), bundle.problem.y());
        prop_assert_eq!(loaded.problem.lambda(), bundle.problem.lambda());
        let t0 = bundle.truth.as_ref().unwrap();
        let t1 = loaded.truth.as_ref().unwrap();
        prop_assert_eq!(&t1.x_true, &t0.x_true);
        prop_assert_eq!(t1.s, t0.s);
        prop_assert_eq!(t1.seed, t0.seed);
        // second save is byte-identical
        let path2 = dir.path().join("b2.bin");
        save_bundle(&loaded, &path2).unwrap();
        prop_assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }
}
