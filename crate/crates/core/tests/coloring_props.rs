use proptest::prelude::*;
use tricolor::coloring::{self, BoundaryCondition, Coloring};
use tricolor::graph::ColorGraph;
use tricolor::lattice::{Lattice, LatticeSpec, ShiftDirection};
use tricolor::oracle::enumerate::enumerate_colorings;
use tricolor::{ImbalanceClass, Rho};

fn all_colorings(spec: LatticeSpec) -> (Lattice, Vec<Coloring>) {
    let l = Lattice::new(spec).unwrap();
    let states = enumerate_colorings(&l, 3, &BoundaryCondition::None, 1 << 20).unwrap();
    (l, states)
}

#[test]
fn zero_sets_are_independent_and_swap_invariant() {
    for spec in [LatticeSpec::cube(2, 1), LatticeSpec::torus(2, 4), LatticeSpec::extended_box(2, 1)] {
        let (l, states) = all_colorings(spec);
        for chi in &states {
            let zeros = coloring::zero_set(&l, chi).unwrap();
            assert!(l.edges().iter().all(|&(u, v)| !(zeros.contains(u) && zeros.contains(v))));
            let swapped = chi.permute_colors(&[0, 2, 1]);
            assert!(coloring::is_proper(&l, &swapped));
            assert_eq!(coloring::zero_set(&l, &swapped).unwrap(), zeros);
        }
    }
}

#[test]
fn translation_negates_torus_imbalance() {
    let (l, states) = all_colorings(LatticeSpec::torus(2, 4));
    assert_eq!(states.len(), 2970);
    for s in ShiftDirection::all(2) {
        let map: Vec<usize> = (0..l.len()).map(|v| l.shift(v, s).unwrap()).collect();
        for chi in &states {
            let moved = chi.relabel_vertices(&map);
            assert!(coloring::is_proper(&l, &moved));
            let k = coloring::imbalance(&l, chi).imbalance;
            assert_eq!(coloring::imbalance(&l, &moved).imbalance, -k);
        }
    }
}

#[test]
fn classes_split_torus_colorings_symmetrically() {
    let (l, states) = all_colorings(LatticeSpec::torus(2, 4));
    let count = |c| states.iter().filter(|chi| coloring::classify(&l, chi, Rho::DEFAULT) == c).count();
    let (b, e, o) =
        (count(ImbalanceClass::Balanced), count(ImbalanceClass::EvenHeavy), count(ImbalanceClass::OddHeavy));
    assert_eq!(b + e + o, states.len());
    assert_eq!(e, o);
}

#[test]
fn phase_and_mod3_colorings() {
    let b = Lattice::new(LatticeSpec::cube(3, 2)).unwrap();
    assert!(coloring::is_proper(&b, &coloring::mod3_coloring(&b)));
    let t = Lattice::new(LatticeSpec::torus(4, 4)).unwrap();
    let even = coloring::phase_coloring(&t, tricolor::Parity::Even, 1);
    assert!(coloring::is_proper(&t, &even));
    assert_eq!(coloring::imbalance(&t, &even).imbalance, 128);
    assert!(!coloring::is_proper(&t, &coloring::mod3_coloring(&t)));
}

#[test]
fn boundary_conditions_are_enforced() {
    let b = Lattice::new(LatticeSpec::cube(2, 2)).unwrap();
    let v0 = b.vertex_at(&[0, 0]).unwrap();
    let bc = BoundaryCondition::odd_boundary_pinned(&b, v0).unwrap();
    let states = enumerate_colorings(&b, 3, &bc, 1 << 20).unwrap();
    assert_eq!(states.len(), 32);
    for chi in &states {
        assert!(coloring::satisfies_bc(&b, chi, &bc).unwrap());
        assert_eq!(chi.get(v0), 0);
    }
    let corner = b.vertex_at(&[2, 2]).unwrap();
    assert!(BoundaryCondition::odd_boundary_pinned(&b, corner).is_err());
}

fn rhos() -> impl Strategy<Value = Rho> {
    (1u64..1000).prop_flat_map(|den| (1..=den, Just(den))).prop_map(|(num, den)| Rho::new(num, den).unwrap())
}

proptest! {
    #[test]
    fn codec_roundtrip(q in 1u8..=32, colors in proptest::collection::vec(any::<u8>(), 1..400), d in 1usize..=3) {
        // Pad or trim the colors to a box of matching size.
        let spec = LatticeSpec::cube(d, 1 + colors.len() % 3);
        let l = Lattice::new(spec).unwrap();
        let cs: Vec<u8> = (0..l.len()).map(|i| colors[i % colors.len()] % q).collect();
        let chi = Coloring::from_colors(q, &cs).unwrap();
        let bytes = coloring::serialize(&l, &chi).unwrap();
        let (spec2, back) = coloring::deserialize(&bytes).unwrap();
        prop_assert_eq!(spec2, spec);
        prop_assert_eq!(back, chi);
    }

    #[test]
    fn codec_rejects_truncation(cut in 1usize..20) {
        let l = Lattice::new(LatticeSpec::cube(2, 2)).unwrap();
        let bytes = coloring::serialize(&l, &coloring::mod3_coloring(&l)).unwrap();
        let keep = bytes.len().saturating_sub(cut + 1);
        prop_assert!(coloring::deserialize(&bytes[..keep]).is_err());
    }

    #[test]
    fn hamming_matches_pointwise(q in 2u8..=32, a in proptest::collection::vec(any::<u8>(), 1..300), b in proptest::collection::vec(any::<u8>(), 300)) {
        let x = Coloring::from_colors(q, &a.iter().map(|c| c % q).collect::<Vec<_>>()).unwrap();
        let y = Coloring::from_colors(q, &(0..a.len()).map(|i| b[i] % q).collect::<Vec<_>>()).unwrap();
        let direct = (0..a.len()).filter(|&i| x.get(i) != y.get(i)).count();
        prop_assert_eq!(x.hamming(&y), direct);
    }

    #[test]
    fn class_threshold_is_exact(imb in -5000i64..5000, rho in rhos(), volume in 1usize..10000) {
        let c = ImbalanceClass::of(imb, rho, volume);
        // |imb| <= rho |V| / 2 in exact rationals.
        let balanced = 2 * imb.unsigned_abs() as u128 * rho.denom() as u128 <= rho.numer() as u128 * volume as u128;
        prop_assert_eq!(c == ImbalanceClass::Balanced, balanced);
        let mirrored = ImbalanceClass::of(-imb, rho, volume);
        let expected = match c {
            ImbalanceClass::EvenHeavy => ImbalanceClass::OddHeavy,
            ImbalanceClass::OddHeavy => ImbalanceClass::EvenHeavy,
            ImbalanceClass::Balanced => ImbalanceClass::Balanced,
        };
        prop_assert_eq!(mirrored, expected);
    }

    #[test]
    fn rho_display_roundtrip(rho in rhos()) {
        let parsed: Rho = rho.to_string().parse().unwrap();
        prop_assert_eq!(parsed.numer() * rho.denom(), rho.numer() * parsed.denom());
    }
}

#[test]
fn rho_parsing() {
    assert_eq!("11/50".parse::<Rho>().unwrap(), Rho::DEFAULT);
    assert_eq!("0.22".parse::<Rho>().unwrap().to_string(), "11/50");
    assert!("0".parse::<Rho>().is_err());
    assert!("3/2".parse::<Rho>().is_err());
    assert!("x".parse::<Rho>().is_err());
}
