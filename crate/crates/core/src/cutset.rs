//! Odd cutsets separating a pinned zero from the box boundary, and the
//! families of cutsets enclosing the minority-phase zeros on a torus.

use std::collections::VecDeque;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coloring::{self, BoundaryCondition, Coloring, ColoringError};
use crate::graph::ColorGraph;
use crate::lattice::{Lattice, LatticeKind, Parity, VertexSet};

/// Dimension from which `|γ| >= d^2` is asserted rather than only reported.
pub const LARGE_D_THRESHOLD: usize = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CutsetError {
    #[error("box cutsets need a box lattice of dimension at least 2")]
    NotABox,
    #[error("torus cutsets need a torus lattice")]
    NotATorus,
    #[error("coloring is not in C_3^O(v0): {0}")]
    NotInPinnedClass(String),
    #[error(transparent)]
    Coloring(#[from] ColoringError),
    #[error("coloring is in neither the even nor the odd class")]
    NotEvenClass,
}

/// Parity of the zeros whose closure seeds the cutset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedParity {
    EvenSeeded,
    OddSeeded,
}

impl SeedParity {
    pub fn parity(self) -> Parity {
        match self {
            SeedParity::EvenSeeded => Parity::Even,
            SeedParity::OddSeeded => Parity::Odd,
        }
    }

    pub fn of(parity: Parity) -> Self {
        match parity {
            Parity::Even => SeedParity::EvenSeeded,
            Parity::Odd => SeedParity::OddSeeded,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cutset {
    pub w: VertexSet,
    pub c: VertexSet,
    /// `∇(C)` as `(w, c)` pairs.
    pub edges: Vec<(usize, usize)>,
    pub seed: VertexSet,
    pub parity: SeedParity,
    /// Pinned vertex of a box cutset.
    pub v0: Option<usize>,
    /// Smaller of `W`, `C` (ties to `W`).
    pub interior: VertexSet,
}

impl Cutset {
    fn new(lattice: &Lattice, seed: VertexSet, c: VertexSet, parity: SeedParity, v0: Option<usize>) -> Self {
        let w = c.complement();
        let edges: Vec<(usize, usize)> = lattice.edge_boundary(&c).into_iter().map(|(ci, wi)| (wi, ci)).collect();
        let interior = if w.len() <= c.len() { w.clone() } else { c.clone() };
        Self { w, c, edges, seed, parity, v0, interior }
    }

    pub fn size(&self) -> usize {
        self.edges.len()
    }

    pub fn interior_is_w(&self) -> bool {
        self.interior == self.w
    }

    /// Seed-parity and opposite-parity parts of `W`.
    pub fn w_parts(&self, lattice: &Lattice) -> (usize, usize) {
        let p = self.parity.parity();
        let same = self.w.iter().filter(|&v| lattice.parity(v) == p).count();
        (same, self.w.len() - same)
    }
}

/// `χ ∈ C_3^O(v0)`: proper, zero on the odd box boundary and at `v0`.
pub fn check_pinned_class(lattice: &Lattice, chi: &Coloring, v0: usize) -> Result<(), CutsetError> {
    if lattice.kind() != LatticeKind::Box || lattice.dim() < 2 {
        return Err(CutsetError::NotABox);
    }
    let bc = BoundaryCondition::odd_boundary_pinned(lattice, v0)
        .map_err(|e| CutsetError::NotInPinnedClass(e.to_string()))?;
    coloring::ensure_proper(lattice, chi).map_err(|e| CutsetError::NotInPinnedClass(e.to_string()))?;
    if !coloring::satisfies_bc(lattice, chi, &bc)? {
        return Err(CutsetError::NotInPinnedClass("boundary condition violated".into()));
    }
    Ok(())
}

fn seed_zeros(lattice: &Lattice, chi: &Coloring, parity: Parity) -> VertexSet {
    VertexSet::from_vertices(
        lattice.len(),
        (0..lattice.len()).filter(|&v| chi.get(v) == 0 && lattice.parity(v) == parity),
    )
}

pub fn build_box_cutset(lattice: &Lattice, chi: &Coloring, v0: usize) -> Result<Cutset, CutsetError> {
    check_pinned_class(lattice, chi, v0)?;
    let closure = lattice.closure(&seed_zeros(lattice, chi, Parity::Even));
    let r = lattice
        .connected_components(&closure)
        .into_iter()
        .find(|comp| comp.contains(v0))
        .expect("v0 is a zero, so it lies in the closure");
    let boundary = lattice.outer_boundary();
    let holder: Vec<VertexSet> =
        lattice.connected_components(&r.complement()).into_iter().filter(|comp| !comp.is_disjoint(&boundary)).collect();
    assert!(
        holder.len() == 1 && boundary.is_subset(&holder[0]),
        "box boundary split across components of the complement of R"
    );
    let c = holder.into_iter().next().unwrap();
    Ok(Cutset::new(lattice, r, c, SeedParity::EvenSeeded, Some(v0)))
}

/// Every `γ(R, C, χ)` over both seed parities.
pub fn build_torus_cutsets(lattice: &Lattice, chi: &Coloring) -> Result<Vec<Cutset>, CutsetError> {
    if !lattice.is_torus() {
        return Err(CutsetError::NotATorus);
    }
    coloring::ensure_proper(lattice, chi)?;
    let mut out = Vec::new();
    for parity in [Parity::Even, Parity::Odd] {
        let closure = lattice.closure(&seed_zeros(lattice, chi, parity));
        for r in lattice.connected_components(&closure) {
            for c in lattice.connected_components(&r.complement()) {
                out.push(Cutset::new(lattice, r.clone(), c, SeedParity::of(parity), None));
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Family {
    pub parity: SeedParity,
    pub cutsets: Vec<Cutset>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Selection {
    Family(Family),
    NotEvenClass,
}

impl Selection {
    pub fn family(&self) -> Option<&Family> {
        match self {
            Selection::Family(f) => Some(f),
            Selection::NotEvenClass => None,
        }
    }
}

/// Greedy choice of `Γ(χ)`: for each component `R` of the seed closure,
/// cut off the largest component of its complement. Even seeds are tried
/// first, then odd.
pub fn select_family(lattice: &Lattice, chi: &Coloring) -> Result<Selection, CutsetError> {
    if !lattice.is_torus() {
        return Err(CutsetError::NotATorus);
    }
    coloring::ensure_proper(lattice, chi)?;
    for parity in [Parity::Even, Parity::Odd] {
        if let Some(cutsets) = try_family(lattice, chi, parity) {
            return Ok(Selection::Family(Family { parity: SeedParity::of(parity), cutsets }));
        }
    }
    Ok(Selection::NotEvenClass)
}

fn try_family(lattice: &Lattice, chi: &Coloring, parity: Parity) -> Option<Vec<Cutset>> {
    let zeros = seed_zeros(lattice, chi, parity);
    let mut cutsets = Vec::new();
    let mut covered = lattice.empty_set();
    for r in lattice.connected_components(&lattice.closure(&zeros)) {
        // Components come ordered by smallest vertex, so the first maximum wins ties.
        let mut best: Option<VertexSet> = None;
        for comp in lattice.connected_components(&r.complement()) {
            if best.as_ref().is_none_or(|b| comp.len() > b.len()) {
                best = Some(comp);
            }
        }
        let cut = Cutset::new(lattice, r, best?, SeedParity::of(parity), None);
        if !cut.interior_is_w() || !covered.is_disjoint(&cut.interior) {
            return None;
        }
        covered = covered.union(&cut.interior);
        cutsets.push(cut);
    }
    zeros.is_subset(&covered).then_some(cutsets)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyReport {
    /// Box only.
    pub p1: Option<bool>,
    pub p2: bool,
    pub p3: bool,
    pub p4: bool,
    pub p5: bool,
    /// `None` when `|W|` exceeds half the volume.
    pub p8a: Option<bool>,
    pub p8b: bool,
    pub p8b_asserted: bool,
    /// `|γ| = deg · (|W^{opp}| - |W^{seed}|)`.
    pub identity: bool,
    pub two_layer: bool,
    pub w_connected: bool,
    pub c_connected: bool,
}

impl PropertyReport {
    /// Every asserted property holds.
    pub fn all_hold(&self) -> bool {
        self.p1.unwrap_or(true)
            && self.p2
            && self.p3
            && self.p4
            && self.p5
            && self.p8a.unwrap_or(true)
            && (!self.p8b_asserted || self.p8b)
            && self.identity
            && self.two_layer
    }
}

pub fn verify_properties(lattice: &Lattice, cut: &Cutset, chi: &Coloring) -> PropertyReport {
    let seed = cut.parity.parity();
    let opp = seed.flip();
    let zeros = coloring::zeros_unchecked(lattice.len(), chi);
    let w = &cut.w;
    let int_w = lattice.internal_boundary(w);
    let ext_w = lattice.external_boundary(w);
    let w_seed = lattice.parity_part(w, seed);
    let w_opp = lattice.parity_part(w, opp);

    let p1 = cut.v0.map(|v0| w.contains(v0) && lattice.outer_boundary().is_disjoint(w));
    let p2 = int_w.iter().all(|v| lattice.parity(v) == opp) && ext_w.iter().all(|v| lattice.parity(v) == seed);
    let layers = int_w.union(&ext_w);
    let p3 = layers.is_disjoint(&zeros);
    let p4 = int_w.iter().all(|v| lattice.neighbors(v).iter().any(|&u| w.contains(u) && zeros.contains(u)));
    let p5a = w_opp == lattice.external_boundary(&w_seed);
    let p5b = (0..lattice.len())
        .filter(|&y| lattice.parity(y) == seed && lattice.neighbors(y).iter().all(|&u| w_opp.contains(u)))
        .filter(|&y| lattice.ambient_degree(y) == lattice.degree(y))
        .eq(w_seed.iter());
    let size = cut.size();
    let d = lattice.dim();
    let p8a = (2 * w.len() <= lattice.len())
        .then(|| BigUint::from(size).pow(d as u32) >= BigUint::from(w.len()).pow(d as u32 - 1));
    // Box cutsets avoid the box boundary, so every W vertex has full degree.
    let k = if lattice.is_torus() { lattice.degree(0) } else { 2 * d };
    let identity = size as i64 == k as i64 * (w_opp.len() as i64 - w_seed.len() as i64);
    PropertyReport {
        p1,
        p2,
        p3,
        p4,
        p5: p5a && p5b,
        p8a,
        p8b: size >= d * d,
        p8b_asserted: d >= LARGE_D_THRESHOLD,
        identity,
        two_layer: two_layer(lattice, &int_w, &layers, chi),
        w_connected: lattice.is_connected(w),
        c_connected: lattice.is_connected(&cut.c),
    }
}

/// On each component of `∂_int W ∪ ∂_ext W` the inner layer carries one
/// nonzero color and the outer layer the other.
fn two_layer(lattice: &Lattice, inner: &VertexSet, layers: &VertexSet, chi: &Coloring) -> bool {
    lattice.connected_components(layers).iter().all(|comp| {
        let mut inner_color = None;
        let mut outer_color = None;
        for v in comp.iter() {
            let slot = if inner.contains(v) { &mut inner_color } else { &mut outer_color };
            let c = chi.get(v);
            if c == 0 || slot.is_some_and(|s| s != c) {
                return false;
            }
            *slot = Some(c);
        }
        match (inner_color, outer_color) {
            (Some(a), Some(b)) => a != b,
            _ => true,
        }
    })
}

/// Brute force: removing `γ ∖ {e}` leaves the graph connected for every `e`.
pub fn is_minimal_cut(lattice: &Lattice, cut: &Cutset) -> bool {
    let removed: std::collections::HashSet<(usize, usize)> =
        cut.edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    if connected_without(lattice, &removed) {
        return false;
    }
    cut.edges.iter().all(|&(a, b)| {
        let mut r = removed.clone();
        r.remove(&(a.min(b), a.max(b)));
        connected_without(lattice, &r)
    })
}

fn connected_without(lattice: &Lattice, removed: &std::collections::HashSet<(usize, usize)>) -> bool {
    let n = lattice.len();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in lattice.neighbors(u) {
            if !seen[v] && !removed.contains(&(u.min(v), u.max(v))) {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}

/// Pairs `(c_i, v_i)`.
pub type Profile = Vec<(usize, usize)>;

/// Whether `Γ(χ)` has distinct members `γ_i` with `|γ_i| = c_i` and
/// `v_i ∈ (int γ_i)^E`.
pub fn profile_membership(lattice: &Lattice, chi: &Coloring, profile: &[(usize, usize)]) -> Result<bool, CutsetError> {
    let family = match select_family(lattice, chi)? {
        Selection::Family(f) if f.parity == SeedParity::EvenSeeded => f,
        _ => return Err(CutsetError::NotEvenClass),
    };
    let fits = |i: usize, j: usize| {
        let (c, v) = profile[i];
        let g = &family.cutsets[j];
        g.size() == c && v < lattice.len() && lattice.parity(v) == Parity::Even && g.interior.contains(v)
    };
    // Bipartite matching of profile entries to cutsets by augmenting paths.
    let mut owner: Vec<Option<usize>> = vec![None; family.cutsets.len()];
    fn augment(i: usize, seen: &mut [bool], owner: &mut [Option<usize>], fits: &dyn Fn(usize, usize) -> bool) -> bool {
        for j in 0..owner.len() {
            if fits(i, j) && !seen[j] {
                seen[j] = true;
                if owner[j].is_none_or(|k| augment(k, seen, owner, fits)) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    for i in 0..profile.len() {
        let mut seen = vec![false; owner.len()];
        if !augment(i, &mut seen, &mut owner, &fits) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One line of the `cutsets` dump.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CutsetRecord {
    pub size: usize,
    #[serde(rename = "W")]
    pub w: usize,
    #[serde(rename = "W_E")]
    pub w_e: usize,
    #[serde(rename = "W_O")]
    pub w_o: usize,
    pub parity: SeedParity,
    pub interior_size: usize,
    /// Whether (1)-(5) are asserted: box cutsets, and torus cutsets whose
    /// interior is `W`. The size identity is asserted on every cutset.
    pub asserted: bool,
    pub properties: PropertyReport,
}

impl CutsetRecord {
    pub fn new(lattice: &Lattice, cut: &Cutset, chi: &Coloring) -> Self {
        let w_e = lattice.parity_part(&cut.w, Parity::Even).len();
        Self {
            size: cut.size(),
            w: cut.w.len(),
            w_e,
            w_o: cut.w.len() - w_e,
            parity: cut.parity,
            interior_size: cut.interior.len(),
            asserted: !lattice.is_torus() || cut.interior_is_w(),
            properties: verify_properties(lattice, cut, chi),
        }
    }

    pub fn holds(&self) -> bool {
        self.properties.identity && (!self.asserted || self.properties.all_hold())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;

    fn box22() -> Lattice {
        Lattice::new(LatticeSpec::cube(2, 2)).unwrap()
    }

    /// 0 at `v0` and on odd boundary points, other colors chosen properly.
    fn single_zero(b: &Lattice, v0: usize) -> Coloring {
        Coloring::from_fn(3, b.len(), |v| {
            let odd = b.parity(v) == Parity::Odd;
            if v == v0 || (odd && b.outer_boundary().contains(v)) {
                0
            } else if odd {
                2
            } else {
                1
            }
        })
        .unwrap()
    }

    #[test]
    fn single_pinned_zero_gives_star() {
        let b = box22();
        let v0 = b.vertex_at(&[0, 0]).unwrap();
        let chi = single_zero(&b, v0);
        let cut = build_box_cutset(&b, &chi, v0).unwrap();
        let star = b.closure(&VertexSet::from_vertices(b.len(), [v0]));
        assert_eq!(cut.w, star);
        assert_eq!(cut.size(), 12);
        assert_eq!(cut.size(), 2 * 2 * (4 - 1));
        let report = verify_properties(&b, &cut, &chi);
        assert!(report.all_hold(), "{report:?}");
        assert!(is_minimal_cut(&b, &cut));
    }

    #[test]
    fn rejects_colorings_outside_pinned_class() {
        let b = box22();
        let v0 = b.vertex_at(&[0, 0]).unwrap();
        let mut chi = single_zero(&b, v0);
        chi.set(v0, 1);
        assert!(matches!(build_box_cutset(&b, &chi, v0), Err(CutsetError::NotInPinnedClass(_))));
        let t = Lattice::new(LatticeSpec::torus(2, 4)).unwrap();
        let phase = coloring::phase_coloring(&t, Parity::Even, 1);
        assert_eq!(build_box_cutset(&t, &phase, 0), Err(CutsetError::NotABox));
    }

    #[test]
    fn torus_phase_has_no_cutsets() {
        let t = Lattice::new(LatticeSpec::torus(2, 4)).unwrap();
        let chi = coloring::phase_coloring(&t, Parity::Even, 1);
        let cuts = build_torus_cutsets(&t, &chi).unwrap();
        assert!(cuts.iter().all(|c| c.parity == SeedParity::OddSeeded));
        assert!(cuts.is_empty());
        // Even attempt fails (R = V), odd succeeds vacuously.
        match select_family(&t, &chi).unwrap() {
            Selection::Family(f) => {
                assert_eq!(f.parity, SeedParity::OddSeeded);
                assert!(f.cutsets.is_empty());
            }
            Selection::NotEvenClass => panic!("odd branch should fire"),
        }
    }

    fn torus_with_even_zeros(t: &Lattice, zeros: &[usize]) -> Coloring {
        Coloring::from_fn(3, t.len(), |v| {
            if zeros.contains(&v) {
                0
            } else if t.parity(v) == Parity::Even {
                1
            } else if t.neighbors(v).iter().any(|u| zeros.contains(u)) {
                2
            } else {
                0
            }
        })
        .unwrap()
    }

    #[test]
    fn isolated_even_zero_on_torus() {
        let t = Lattice::new(LatticeSpec::torus(2, 4)).unwrap();
        let v = t.vertex_at(&[0, 0]).unwrap();
        let chi = torus_with_even_zeros(&t, &[v]);
        let even: Vec<Cutset> =
            build_torus_cutsets(&t, &chi).unwrap().into_iter().filter(|c| c.parity == SeedParity::EvenSeeded).collect();
        assert_eq!(even.len(), 1);
        assert_eq!(even[0].seed.len(), 5);
        assert!(even[0].interior_is_w());
        assert_eq!(even[0].size(), 12);
        let edges = t.edges();
        assert!(even[0].edges.iter().all(|&(a, b)| edges.contains(&(a.min(b), a.max(b)))));
        assert!(profile_membership(&t, &chi, &[(12, v)]).unwrap());
        assert!(profile_membership(&t, &chi, &[]).unwrap());
        assert!(!profile_membership(&t, &chi, &[(13, v)]).unwrap());
        assert!(!profile_membership(&t, &chi, &[(12, v), (12, v)]).unwrap());
    }

    #[test]
    fn two_distant_zeros_on_torus6() {
        let t = Lattice::new(LatticeSpec::torus(2, 6)).unwrap();
        let a = t.vertex_at(&[0, 0]).unwrap();
        let b = t.vertex_at(&[3, 3]).unwrap();
        let chi = torus_with_even_zeros(&t, &[a, b]);
        let family = select_family(&t, &chi).unwrap().family().cloned().unwrap();
        assert_eq!(family.parity, SeedParity::EvenSeeded);
        assert_eq!(family.cutsets.len(), 2);
        assert!(family.cutsets[0].interior.is_disjoint(&family.cutsets[1].interior));
        assert!(family.cutsets[0].interior.contains(a));
        assert!(family.cutsets[1].interior.contains(b));
        for cut in &family.cutsets {
            assert!(verify_properties(&t, cut, &chi).all_hold());
        }
    }

    #[test]
    fn record_serializes_expected_keys() {
        let b = box22();
        let v0 = b.vertex_at(&[0, 0]).unwrap();
        let chi = single_zero(&b, v0);
        let cut = build_box_cutset(&b, &chi, v0).unwrap();
        let json = serde_json::to_value(CutsetRecord::new(&b, &cut, &chi)).unwrap();
        for key in ["size", "W", "W_E", "W_O", "parity", "interior_size", "properties"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["W_E"], 1);
        assert_eq!(json["W_O"], 4);
    }
}
