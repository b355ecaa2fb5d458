use tricolor::coloring::{BoundaryCondition, Coloring};
use tricolor::cutset::{
    build_box_cutset, build_torus_cutsets, is_minimal_cut, profile_membership, select_family, verify_properties,
    CutsetError, CutsetRecord, SeedParity, Selection,
};
use tricolor::lattice::{Lattice, LatticeSpec, Parity};
use tricolor::oracle::enumerate::{enumerate_colorings, for_each_coloring};

fn pinned(d: usize, n: usize) -> (Lattice, usize, Vec<Coloring>) {
    let l = Lattice::new(LatticeSpec::cube(d, n)).unwrap();
    let v0 = l.vertex_at(&vec![0; d]).unwrap();
    let bc = BoundaryCondition::odd_boundary_pinned(&l, v0).unwrap();
    let states = enumerate_colorings(&l, 3, &bc, 1 << 22).unwrap();
    (l, v0, states)
}

fn check_box(l: &Lattice, v0: usize, chi: &Coloring) {
    let cut = build_box_cutset(l, chi, v0).unwrap();
    let rep = verify_properties(l, &cut, chi);
    assert!(rep.all_hold(), "{rep:?}");
    assert_eq!(rep.p1, Some(true));
    assert!(rep.identity && rep.w_connected && rep.c_connected);
    assert_eq!(rep.p8a, Some(true));
    assert!(is_minimal_cut(l, &cut));
    // Depends on the zero set only.
    assert_eq!(build_box_cutset(l, &chi.permute_colors(&[0, 2, 1]), v0).unwrap(), cut);
    assert_eq!(cut.size() % (2 * l.dim()), 0);
}

#[test]
fn smallest_box_has_no_pinned_colorings() {
    let (_, _, states) = pinned(2, 1);
    assert!(states.is_empty());
}

#[test]
fn every_box_cutset_on_the_5x5_box() {
    let (l, v0, states) = pinned(2, 2);
    assert_eq!(states.len(), 32);
    for chi in &states {
        check_box(&l, v0, chi);
    }
}

#[test]
fn sampled_box_cutsets_on_the_7x7_box() {
    let (l, v0, states) = pinned(2, 3);
    assert_eq!(states.len(), 1_229_312);
    for chi in states.iter().step_by(997) {
        check_box(&l, v0, chi);
    }
}

#[test]
fn three_dimensional_box() {
    let l = Lattice::new(LatticeSpec::cube(3, 2)).unwrap();
    let v0 = l.vertex_at(&[0, 0, 0]).unwrap();
    let masks = BoundaryCondition::odd_boundary_pinned(&l, v0).unwrap().masks(&l, 3).unwrap();
    let mut seen = 0u64;
    let mut checked = 0;
    for_each_coloring(&l, 3, &masks, |chi| {
        if seen.is_multiple_of(1009) {
            check_box(&l, v0, &Coloring::from_colors(3, chi).unwrap());
            checked += 1;
        }
        seen += 1;
        checked < 2000
    });
    assert_eq!(checked, 2000);
}

#[test]
fn box_cutset_rejects_unpinned_colorings() {
    let l = Lattice::new(LatticeSpec::cube(2, 2)).unwrap();
    let v0 = l.vertex_at(&[0, 0]).unwrap();
    let chi = tricolor::coloring::phase_coloring(&l, Parity::Odd, 1);
    assert!(matches!(build_box_cutset(&l, &chi, v0), Err(CutsetError::NotInPinnedClass(_))));
    let t = Lattice::new(LatticeSpec::torus(2, 4)).unwrap();
    let tc = tricolor::coloring::phase_coloring(&t, Parity::Even, 1);
    assert!(matches!(build_box_cutset(&t, &tc, 0), Err(CutsetError::NotABox)));
}

#[test]
fn every_torus_cutset() {
    let t = Lattice::new(LatticeSpec::torus(2, 4)).unwrap();
    let states = enumerate_colorings(&t, 3, &BoundaryCondition::None, 1 << 20).unwrap();
    let mut asserted = 0;
    for chi in &states {
        for cut in build_torus_cutsets(&t, chi).unwrap() {
            let rec = CutsetRecord::new(&t, &cut, chi);
            assert!(rec.properties.identity);
            assert!(rec.holds(), "{rec:?}");
            if rec.asserted {
                asserted += 1;
                assert!(rec.properties.all_hold());
            }
            if 2 * cut.w.len() <= t.len() {
                assert_eq!(rec.properties.p8a, Some(true));
            }
            assert!(is_minimal_cut(&t, &cut));
        }
    }
    assert!(asserted > 0);
}

#[test]
fn torus_families() {
    let t = Lattice::new(LatticeSpec::torus(2, 4)).unwrap();
    let states = enumerate_colorings(&t, 3, &BoundaryCondition::None, 1 << 20).unwrap();
    let mut even = 0;
    for chi in &states {
        match select_family(&t, chi).unwrap() {
            Selection::Family(f) => {
                let mut covered = t.empty_set();
                for g in &f.cutsets {
                    assert!(g.interior_is_w());
                    assert!(covered.is_disjoint(&g.interior));
                    covered = covered.union(&g.interior);
                    assert!(verify_properties(&t, g, chi).all_hold());
                }
                let zeros = tricolor::coloring::zero_set(&t, chi).unwrap();
                assert!(t.parity_part(&zeros, f.parity.parity()).is_subset(&covered));
                if f.parity == SeedParity::EvenSeeded {
                    even += 1;
                    let profile: Vec<(usize, usize)> = f
                        .cutsets
                        .iter()
                        .filter_map(|g| t.parity_part(&g.interior, Parity::Even).min().map(|v| (g.size(), v)))
                        .collect();
                    assert!(profile_membership(&t, chi, &profile).unwrap());
                    let wrong: Vec<(usize, usize)> = profile.iter().map(|&(c, v)| (c + 1, v)).collect();
                    if !wrong.is_empty() {
                        assert!(!profile_membership(&t, chi, &wrong).unwrap());
                    }
                }
            }
            Selection::NotEvenClass => {
                assert!(matches!(profile_membership(&t, chi, &[]), Err(CutsetError::NotEvenClass)));
            }
        }
    }
    assert!(even > 0);
}
