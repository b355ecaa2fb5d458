use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tricolor::coloring::{self, BoundaryCondition, Coloring, Rho};
use tricolor::dynamics::{
    crossing_blocked_check, metropolis_step, quantiles, rho_locality_check, run_chain, run_local_chain, summarize,
    ChainKind, ChainSpec, DynamicsError,
};
use tricolor::lattice::{Lattice, LatticeSpec, Parity};
use tricolor::oracle::enumerate::enumerate_colorings;

fn torus(d: usize, n: usize) -> Lattice {
    Lattice::new(LatticeSpec::torus(d, n)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn metropolis_moves_one_site_and_stays_proper(seed in any::<u64>(), d in 2usize..=3, start in 0u8..3) {
        let l = torus(d, 4);
        let mut chi = match start {
            0 => coloring::phase_coloring(&l, Parity::Even, 1),
            1 => coloring::phase_coloring(&l, Parity::Odd, 2),
            _ => coloring::phase_coloring(&l, Parity::Even, 2),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..2000 {
            let before = chi.clone();
            let k0 = coloring::imbalance(&l, &chi).imbalance;
            let moved = metropolis_step(&l, &mut chi, &mut rng);
            prop_assert!(coloring::is_proper(&l, &chi));
            prop_assert_eq!(before.hamming(&chi), moved.is_some() as usize);
            prop_assert!((coloring::imbalance(&l, &chi).imbalance - k0).abs() <= 1);
        }
    }

    #[test]
    fn trajectories_track_the_imbalance(seed in any::<u64>(), stream in 0u64..64, thin in 1u64..50) {
        let l = torus(2, 6);
        let chi0 = coloring::phase_coloring(&l, Parity::Even, 1);
        let spec = ChainSpec::metropolis(3, l.len(), seed).with_stream(stream);
        let t = run_chain(&l, &spec, &chi0, "even", 700, thin, Rho::DEFAULT).unwrap();
        let again = run_chain(&l, &spec, &chi0, "even", 700, thin, Rho::DEFAULT).unwrap();
        prop_assert_eq!(&t, &again);
        prop_assert!(coloring::is_proper(&l, &t.last));
        let last = t.records.last().unwrap();
        prop_assert_eq!(last.step, 700);
        prop_assert_eq!(last.imbalance, coloring::imbalance(&l, &t.last).imbalance);
        prop_assert_eq!(t.records[0].imbalance, 18);
        for w in t.records.windows(2) {
            let gap = (w[1].step - w[0].step) as i64;
            prop_assert!((w[1].imbalance - w[0].imbalance).abs() <= gap);
        }
    }
}

#[test]
fn chain_rejects_bad_input() {
    let l = torus(2, 4);
    let chi0 = coloring::phase_coloring(&l, Parity::Even, 1);
    let spec = ChainSpec::metropolis(3, l.len(), 1);
    assert_eq!(run_chain(&l, &spec, &chi0, "x", 10, 0, Rho::DEFAULT), Err(DynamicsError::ZeroThinning));
    let custom = ChainSpec { kind: ChainKind::CustomLocal, ..spec };
    assert_eq!(run_chain(&l, &custom, &chi0, "x", 10, 1, Rho::DEFAULT), Err(DynamicsError::NoBuiltinRule));
    let bad = Coloring::from_colors(3, &vec![0; l.len()]).unwrap();
    assert!(run_chain(&l, &spec, &bad, "x", 10, 1, Rho::DEFAULT).is_err());
}

#[test]
fn local_chains_are_policed() {
    let l = torus(2, 4);
    let chi0 = coloring::phase_coloring(&l, Parity::Even, 1);
    let spec = ChainSpec::metropolis(3, l.len(), 5);
    // Metropolis itself is 1/|V|-local.
    let out = run_local_chain(&l, &spec, &chi0, 500, |chi, rng| {
        let mut next = chi.clone();
        metropolis_step(&l, &mut next, rng);
        next
    })
    .unwrap();
    assert!(coloring::is_proper(&l, &out));
    let swap = run_local_chain(&l, &spec, &chi0, 3, |chi, _| chi.permute_colors(&[0, 2, 1]));
    assert_eq!(swap, Err(DynamicsError::NotLocal { step: 1, changed: 8 }));
    let wide = ChainSpec { rho: Rho::new(1, 2).unwrap(), ..spec };
    assert!(run_local_chain(&l, &wide, &chi0, 3, |chi, _| chi.permute_colors(&[0, 2, 1])).is_ok());
    let broken = run_local_chain(&l, &spec, &chi0, 3, |chi, _| {
        let mut next = chi.clone();
        let odd = (0..l.len()).find(|&v| l.parity(v) == Parity::Odd).unwrap();
        next.set(odd, 0);
        next
    });
    assert_eq!(broken, Err(DynamicsError::Improper { step: 1 }));
}

#[test]
fn crossings_between_heavy_classes_are_blocked() {
    let l = torus(2, 4);
    let states = enumerate_colorings(&l, 3, &BoundaryCondition::None, 1 << 20).unwrap();
    for (i, a) in states.iter().enumerate().step_by(7) {
        for b in states.iter().skip(i % 13).step_by(29) {
            let c = crossing_blocked_check(&l, a, b, Rho::DEFAULT);
            assert!(c.change_bounded && c.implication_holds, "{c:?}");
            assert_eq!(c.blocked, !rho_locality_check(a, b, Rho::DEFAULT));
        }
    }
}

#[test]
fn ensemble_summaries() {
    assert_eq!(quantiles(&[]), Vec::<i64>::new());
    assert_eq!(quantiles(&[3, 1, 2]), vec![1, 1, 2, 2, 3, 3, 3]);
    let l = torus(2, 4);
    let chi0 = coloring::phase_coloring(&l, Parity::Even, 1);
    let runs: Vec<_> = (0..4)
        .map(|k| {
            let spec = ChainSpec::metropolis(3, l.len(), 9).with_stream(k);
            run_chain(&l, &spec, &chi0, "even", 5000, 10, Rho::DEFAULT).unwrap()
        })
        .collect();
    let s = summarize(&runs);
    assert_eq!(s.chains, 4);
    assert_eq!(s.proposals_per_chain, 5000);
    assert!(s.chains_flipped <= 4);
    assert!((0.0..=1.0).contains(&s.opposite_sign_sample_fraction));
    assert_eq!(s.final_imbalance_quantiles.len(), 7);
    assert!(s.final_imbalance_quantiles.windows(2).all(|w| w[0] <= w[1]));
}
