use std::collections::BTreeMap;

use num_bigint::BigUint;
use proptest::prelude::*;
use tricolor::entropy::{
    binary_entropy, fold_certificate, fold_coordinate, max_entropy_gap_check, restriction_distribution, rho_critical,
    shannon_entropy, topological_entropy_estimate, Distribution, EntropyError,
};

proptest! {
    #[test]
    fn shannon_is_at_most_log_support(counts in proptest::collection::vec(0u64..50, 1..40)) {
        prop_assume!(counts.iter().any(|&c| c > 0));
        let map: BTreeMap<usize, BigUint> = counts.iter().enumerate().map(|(i, &c)| (i, BigUint::from(c))).collect();
        let dist = Distribution::from_counts(map).unwrap();
        let h = shannon_entropy(&dist);
        let support = counts.iter().filter(|&&c| c > 0).count();
        prop_assert_eq!(dist.support_len(), support);
        let cap = (support as f64).ln();
        prop_assert!(h >= -1e-12 && h <= cap + 1e-9);
        let nonzero: Vec<u64> = counts.iter().copied().filter(|&c| c > 0).collect();
        let uniform = nonzero.iter().all(|&c| c == nonzero[0]);
        prop_assert_eq!(dist.is_uniform_on_support(), uniform);
        if uniform {
            prop_assert!((h - cap).abs() < 1e-9);
        } else {
            prop_assert!(h < cap - 1e-12);
        }
        let total: u64 = counts.iter().sum();
        let expected = -nonzero.iter().map(|&c| { let p = c as f64 / total as f64; p * p.ln() }).sum::<f64>();
        prop_assert!((h - expected).abs() < 1e-9);
    }

    #[test]
    fn binary_entropy_is_symmetric(x in 0.0f64..=1.0) {
        let h = binary_entropy(x).unwrap();
        prop_assert!((h - binary_entropy(1.0 - x).unwrap()).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&h));
    }

    #[test]
    fn folding_lands_in_the_box(c in -1000i64..1000, n in 1i64..20) {
        let f = fold_coordinate(c, n);
        prop_assert!(f.abs() <= n);
        prop_assert_eq!((f - c).rem_euclid(2), 0);
        if c.abs() <= n {
            prop_assert_eq!(f, c);
        }
    }
}

#[test]
fn binary_entropy_values() {
    assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
    assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
    assert!(matches!(binary_entropy(1.5), Err(EntropyError::Domain(_))));
    let r = rho_critical(1e-12);
    assert!((binary_entropy(r).unwrap() + r - 1.0).abs() < 1e-9);
    assert!(binary_entropy(0.22).unwrap() + 0.22 < 1.0);
}

#[test]
fn distributions_validate() {
    let mut probs = BTreeMap::new();
    probs.insert(0, num_rational::BigRational::new(1.into(), 3.into()));
    assert!(matches!(Distribution::new(probs.clone()), Err(EntropyError::InvalidDistribution(_))));
    probs.insert(1, num_rational::BigRational::new(2.into(), 3.into()));
    let d = Distribution::new(probs).unwrap();
    assert_eq!(d.max_probability(), num_rational::BigRational::new(2.into(), 3.into()));
}

#[test]
fn topological_entropy_of_chains_and_the_square_lattice() {
    let line = topological_entropy_estimate(1, &[2, 4, 6, 8], 1 << 20).unwrap();
    for (w, c) in [2u32, 4, 6, 8].iter().zip(&line.counts) {
        assert_eq!(c, &(3u64 << (w - 1)).to_string());
    }
    assert!(line.differences.iter().all(|h| (h - 2f64.ln()).abs() < 1e-12));
    // Three-colorings of the square lattice: (3/2) ln(4/3).
    let square = topological_entropy_estimate(2, &(2..=8).collect::<Vec<_>>(), 1 << 22).unwrap();
    let exact = 1.5 * (4.0f64 / 3.0).ln();
    // Differences rise towards the bulk value; per-site counts overshoot it.
    assert!(square.differences.windows(2).all(|w| w[0] < w[1] && w[1] < exact), "{square:?}");
    assert!(square.per_site.iter().all(|&h| h > exact));
    assert!(exact - square.estimate.unwrap() < 3e-3, "{square:?}");
    assert_eq!(square.aitken.len(), 5);
    assert!(square.spread.unwrap() < 0.02);
    assert!(topological_entropy_estimate(2, &[0], 10).is_err());
}

#[test]
fn fold_extends_box_colorings() {
    for (d, n) in [(1, 1), (1, 3), (2, 1), (2, 2), (3, 1)] {
        assert!(fold_certificate(d, n, 2).unwrap());
    }
    assert!(!fold_certificate(2, 0, 2).unwrap());
}

#[test]
fn restriction_inequalities() {
    assert!(restriction_distribution(1, 2, 2, 1 << 20).is_err());
    for (d, n, m) in [(1, 1, 2), (1, 1, 3), (1, 2, 4), (2, 1, 2)] {
        let r = restriction_distribution(d, n, m, 1 << 20).unwrap();
        assert_eq!(r.extendable_count(), r.patterns.len());
        let dist = r.distribution().unwrap();
        assert!(dist.support_len() <= r.patterns.len());
        let g = max_entropy_gap_check(d, n, m, 1 << 20).unwrap();
        assert!(g.all_hold(), "{g:?}");
        assert!(g.fold_certificate);
        assert!(g.c_star >= 1);
    }
}
