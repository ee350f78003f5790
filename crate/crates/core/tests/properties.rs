use mesh_cam::metrics::{mi_continuous, mi_dense_binary};
use mesh_cam::numerics::{pseudoinverse, sgn, topk, RealMatrix, RealVector, RngStream, DEFAULT_RCOND};
use mesh_cam::patterns::{binomial, flip_at, flip_positions, gen_khot_labels, PatternKind};
use proptest::prelude::*;

fn vector(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, 1..max_len)
}

proptest! {
    #[test]
    fn topk_picks_the_largest(values in vector(40), k_seed in any::<usize>()) {
        let k = 1 + k_seed % values.len();
        let v = RealVector::from_vec(values);
        let hot = topk(&v, k).unwrap();
        prop_assert_eq!(hot.sum(), k as f64);
        let chosen = (0..v.len()).filter(|&i| hot[i] == 1.0).map(|i| v[i]).fold(f64::INFINITY, f64::min);
        let rest = (0..v.len()).filter(|&i| hot[i] == 0.0).map(|i| v[i]).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(chosen >= rest);
    }

    #[test]
    fn sgn_is_idempotent(values in vector(40)) {
        let s = sgn(&RealVector::from_vec(values)).unwrap();
        prop_assert!(s.iter().all(|&x| x == 1.0 || x == -1.0));
        prop_assert_eq!(sgn(&s).unwrap(), s);
    }

    #[test]
    fn pseudoinverse_satisfies_penrose(rows in 1usize..12, cols in 1usize..12, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed);
        let a = RealMatrix::from_fn(rows, cols, |_, _| rng.sign());
        let p = pseudoinverse(&a, DEFAULT_RCOND).unwrap();
        prop_assert!((&a * &p * &a - &a).amax() < 1e-8);
        prop_assert!((&p * &a * &p - &p).amax() < 1e-8);
        let ap = &a * &p;
        prop_assert!((&ap - ap.transpose()).amax() < 1e-8);
    }

    #[test]
    fn dense_mi_is_bounded_and_even(m in -1.0..=1.0f64) {
        let mi = mi_dense_binary(m).unwrap();
        prop_assert!((0.0..=1.0).contains(&mi));
        prop_assert!((mi - mi_dense_binary(-m).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn continuous_mi_grows_with_correlation(a in 0.0..0.999f64, b in 0.0..0.999f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let lo = mi_continuous(lo).unwrap().finite().unwrap();
        let hi = mi_continuous(hi).unwrap().finite().unwrap();
        prop_assert!(lo <= hi);
    }

    #[test]
    fn flips_are_an_involution(n in 1usize..200, frac in 0.0..=1.0f64, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed);
        let x = RealVector::from_fn(n, |_, _| rng.sign());
        let positions = flip_positions(n, frac, &mut rng);
        prop_assert_eq!(positions.len(), (frac * n as f64).round() as usize);
        let y = flip_at(&x, &positions, PatternKind::DenseBinary);
        prop_assert_eq!(flip_at(&y, &positions, PatternKind::DenseBinary), x);
    }

    #[test]
    fn khot_labels_enumerate_every_state(n in 1usize..10, k_seed in any::<usize>()) {
        let k = 1 + k_seed % n;
        let labels = gen_khot_labels(n, k, None).unwrap();
        prop_assert_eq!(labels.n_patts() as u64, binomial(n, k).unwrap());
        let mut seen = std::collections::HashSet::new();
        for mu in 0..labels.n_patts() {
            let l = labels.pattern(mu);
            prop_assert_eq!(l.sum(), k as f64);
            prop_assert!(seen.insert(l.iter().map(|&x| x as u8).collect::<Vec<_>>()));
        }
    }
}
