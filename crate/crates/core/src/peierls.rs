//! The shift map `χ -> χ^s_S`, its inverse, the flow `ν`, and the
//! approximation / good-triple bookkeeping used to bound the flow into a
//! shifted coloring.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coloring::{self, Coloring};
use crate::cutset::{Cutset, SeedParity};
use crate::graph::ColorGraph;
use crate::lattice::{Lattice, Parity, ShiftDirection, VertexSet};

/// `f`: fixes 0, swaps 1 and 2.
pub const SWAP12: [u8; 3] = [0, 2, 1];

/// Largest `|W^s|` for which `flow_out_total` also sums all `2^{|W^s|}` terms.
pub const EXPLICIT_SUM_LIMIT: usize = 20;

/// Largest `|Q^E ∪ Q^O|` searched exhaustively in `bound_report`.
pub const COVER_SEARCH_LIMIT: usize = 24;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PeierlsError {
    #[error("S is not a subset of W^s")]
    NotInLayer,
    #[error("coloring is not in the shift family of the given coloring")]
    NotInFamily,
    #[error("odd-seeded cutsets are not supported here")]
    OddSeeded,
    #[error("coloring uses {0} colors; the shift map needs exactly 3")]
    NotThreeColors(u8),
}

/// `σ_{-s}(x)`.
fn back(lattice: &Lattice, x: usize, s: ShiftDirection) -> Option<usize> {
    lattice.shift(x, s.reverse())
}

/// `W^s = {x ∈ ∂_int W : σ_{-s}(x) ∉ W}`.
pub fn boundary_layer(lattice: &Lattice, w: &VertexSet, s: ShiftDirection) -> VertexSet {
    VertexSet::from_vertices(
        lattice.len(),
        lattice.internal_boundary(w).iter().filter(|&x| back(lattice, x, s).is_none_or(|y| !w.contains(y))),
    )
}

/// `χ^s_S`.
pub fn shift_coloring(
    lattice: &Lattice,
    chi: &Coloring,
    w: &VertexSet,
    s: ShiftDirection,
    subset: &VertexSet,
) -> Result<Coloring, PeierlsError> {
    let layer = boundary_layer(lattice, w, s);
    if !subset.is_subset(&layer) {
        return Err(PeierlsError::NotInLayer);
    }
    Ok(shift_with_layer(lattice, chi, w, s, &layer, subset))
}

fn shift_with_layer(
    lattice: &Lattice,
    chi: &Coloring,
    w: &VertexSet,
    s: ShiftDirection,
    layer: &VertexSet,
    subset: &VertexSet,
) -> Coloring {
    let mut out = chi.clone();
    for v in w.iter() {
        if subset.contains(v) {
            out.set(v, 0);
        } else if !layer.contains(v) {
            let src = back(lattice, v, s).expect("W ∖ W^s vertices have their σ_{-s} image in W");
            out.set(v, SWAP12[chi.get(src) as usize]);
        }
    }
    out
}

/// Inverse of the shift map: `χ'` off `W`, `f(χ'(σ_s v))` on `W`.
pub fn reconstruct(lattice: &Lattice, chi_prime: &Coloring, w: &VertexSet, s: ShiftDirection) -> Coloring {
    let mut out = chi_prime.clone();
    for v in w.iter() {
        if let Some(src) = lattice.shift(v, s) {
            out.set(v, SWAP12[chi_prime.get(src) as usize]);
        }
    }
    out
}

/// Lazy enumeration of `φ_s(χ)` as `(S, χ^s_S)`, in binary-counter order
/// over `W^s` sorted ascending.
pub struct ShiftFamily<'a> {
    lattice: &'a Lattice,
    chi: &'a Coloring,
    w: &'a VertexSet,
    s: ShiftDirection,
    layer: VertexSet,
    members: Vec<usize>,
    counter: Vec<bool>,
    done: bool,
}

impl<'a> ShiftFamily<'a> {
    pub fn new(lattice: &'a Lattice, chi: &'a Coloring, w: &'a VertexSet, s: ShiftDirection) -> Self {
        let layer = boundary_layer(lattice, w, s);
        let members = layer.to_vec();
        let counter = vec![false; members.len()];
        Self { lattice, chi, w, s, layer, members, counter, done: false }
    }

    pub fn layer(&self) -> &VertexSet {
        &self.layer
    }

    /// `S` drawn uniformly from the subsets of `W^s`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (VertexSet, Coloring) {
        let subset =
            VertexSet::from_vertices(self.lattice.len(), self.members.iter().copied().filter(|_| rng.gen_bool(0.5)));
        let out = shift_with_layer(self.lattice, self.chi, self.w, self.s, &self.layer, &subset);
        (subset, out)
    }
}

impl Iterator for ShiftFamily<'_> {
    type Item = (VertexSet, Coloring);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let subset = VertexSet::from_vertices(
            self.lattice.len(),
            self.members.iter().zip(&self.counter).filter(|(_, &b)| b).map(|(&v, _)| v),
        );
        let out = shift_with_layer(self.lattice, self.chi, self.w, self.s, &self.layer, &subset);
        // Increment; wrap-around means every subset has been produced.
        self.done = true;
        for bit in self.counter.iter_mut() {
            *bit = !*bit;
            if *bit {
                self.done = false;
                break;
            }
        }
        Some((subset, out))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproximationSource {
    ExactW,
    External,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Approximation {
    pub set: VertexSet,
    pub source: ApproximationSource,
}

impl Approximation {
    pub fn exact(cut: &Cutset) -> Self {
        Self { set: cut.w.clone(), source: ApproximationSource::ExactW }
    }

    pub fn external(set: VertexSet) -> Self {
        Self { set, source: ApproximationSource::External }
    }
}

/// `⌈2d - √d⌉ = 2d - ⌊√d⌋`.
pub fn degree_threshold(d: usize) -> usize {
    2 * d - num_integer::Roots::sqrt(&d)
}

/// The three approximation conditions. On a box, neighbours of `x` that lie
/// outside the box count as outside `A^E`.
pub fn is_approximation(lattice: &Lattice, a: &VertexSet, cut: &Cutset) -> bool {
    let t = degree_threshold(lattice.dim());
    let a_e = lattice.parity_part(a, Parity::Even);
    let a_o = lattice.parity_part(a, Parity::Odd);
    let w_e = lattice.parity_part(&cut.w, Parity::Even);
    let w_o = lattice.parity_part(&cut.w, Parity::Odd);
    if !w_e.is_subset(&a_e) || !a_o.is_subset(&w_o) {
        return false;
    }
    let even_ok = a_e.iter().all(|x| lattice.neighbors(x).iter().filter(|&&y| a_o.contains(y)).count() >= t);
    let odd_ok = (0..lattice.len()).filter(|&y| lattice.parity(y) == Parity::Odd && !a_o.contains(y)).all(|y| {
        let missing = lattice.ambient_degree(y) - lattice.degree(y);
        lattice.neighbors(y).iter().filter(|&&x| !a_e.contains(x)).count() + missing >= t
    });
    even_ok && odd_ok
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QSets {
    pub q_even: VertexSet,
    pub q_odd: VertexSet,
    /// `{x ∈ Q^E : χ'(σ_s x) = 0}`.
    pub u: VertexSet,
}

pub fn q_sets(lattice: &Lattice, a: &VertexSet, s: ShiftDirection, chi_prime: &Coloring) -> QSets {
    let (q_even, q_odd) = q_pair(lattice, a);
    let u = VertexSet::from_vertices(
        lattice.len(),
        q_even.iter().filter(|&x| lattice.shift(x, s).is_some_and(|y| chi_prime.get(y) == 0)),
    );
    QSets { q_even, q_odd, u }
}

fn q_pair(lattice: &Lattice, a: &VertexSet) -> (VertexSet, VertexSet) {
    let a_e = lattice.parity_part(a, Parity::Even);
    let a_o = lattice.parity_part(a, Parity::Odd);
    let odd_out = lattice.parity_class(Parity::Odd).difference(&a_o);
    let q_even = a_e.intersection(&lattice.external_boundary(&odd_out));
    let q_odd = odd_out.intersection(&lattice.external_boundary(&a_e));
    (q_even, q_odd)
}

/// The four containments locating every vertex outside `Q^E ∪ Q^O`.
pub fn q_containments_hold(lattice: &Lattice, a: &VertexSet, q: &QSets, cut: &Cutset) -> bool {
    let even = lattice.parity_class(Parity::Even);
    let odd = lattice.parity_class(Parity::Odd);
    let a_e = lattice.parity_part(a, Parity::Even);
    let a_o = lattice.parity_part(a, Parity::Odd);
    let w_e = lattice.parity_part(&cut.w, Parity::Even);
    let w_o = lattice.parity_part(&cut.w, Parity::Odd);
    a_e.difference(&q.q_even).is_subset(&w_e)
        && even.difference(&a_e).is_subset(&even.difference(&w_e))
        && a_o.is_subset(&w_o)
        && odd.difference(&a_o.union(&q.q_odd)).is_subset(&odd.difference(&w_o))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionRule {
    /// Both the layer-size and the overlap conditions hold.
    Primary,
    /// Neither direction qualified; `|W^s|` maximised instead.
    Fallback,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionChoice {
    pub s: ShiftDirection,
    pub rule: DirectionRule,
    pub layer_size: usize,
}

/// Smallest `s` with `|W^s| >= 0.8 (w_o - w_e)` and
/// `|σ_s(Q^E) ∩ Q^O| <= 5|W^s| / √d`, compared as integers.
pub fn select_direction(lattice: &Lattice, cut: &Cutset, a: &VertexSet) -> Result<DirectionChoice, PeierlsError> {
    if cut.parity != SeedParity::EvenSeeded {
        return Err(PeierlsError::OddSeeded);
    }
    let d = lattice.dim();
    let w_e = lattice.parity_part(&cut.w, Parity::Even).len();
    let gap = cut.w.len() - 2 * w_e;
    let (q_even, q_odd) = q_pair(lattice, a);
    let mut best: Option<DirectionChoice> = None;
    for s in ShiftDirection::all(d) {
        let layer = boundary_layer(lattice, &cut.w, s).len();
        let overlap = lattice.shift_set(&q_even, s).intersection(&q_odd).len();
        let big_enough = 5 * layer >= 4 * gap;
        let small_overlap = (overlap * overlap) as u128 * d as u128 <= 25 * (layer * layer) as u128;
        if big_enough && small_overlap {
            return Ok(DirectionChoice { s, rule: DirectionRule::Primary, layer_size: layer });
        }
        if best.is_none_or(|b| layer > b.layer_size) {
            best = Some(DirectionChoice { s, rule: DirectionRule::Fallback, layer_size: layer });
        }
    }
    Ok(best.expect("d >= 1"))
}

/// `C = W^s ∩ A^O ∩ σ_s(Q^E)` and `D = W^s ∖ C`.
pub fn flow_split(
    lattice: &Lattice,
    cut: &Cutset,
    s: ShiftDirection,
    a: &VertexSet,
) -> (VertexSet, VertexSet, VertexSet) {
    let layer = boundary_layer(lattice, &cut.w, s);
    let a_o = lattice.parity_part(a, Parity::Odd);
    let (q_even, _) = q_pair(lattice, a);
    let c = layer.intersection(&a_o).intersection(&lattice.shift_set(&q_even, s));
    let d = layer.difference(&c);
    (layer, c, d)
}

fn ratio(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn nu_value(c_zero: usize, c_nonzero: usize, d_size: usize) -> BigRational {
    let mut out = BigRational::one();
    for _ in 0..c_zero {
        out *= ratio(1, 4);
    }
    for _ in 0..c_nonzero {
        out *= ratio(3, 4);
    }
    for _ in 0..d_size {
        out *= ratio(1, 2);
    }
    out
}

/// `ν(χ, χ')`, after checking that `χ'` is some `χ^s_S`.
pub fn flow_weight(
    lattice: &Lattice,
    chi: &Coloring,
    chi_prime: &Coloring,
    cut: &Cutset,
    s: ShiftDirection,
    a: &VertexSet,
) -> Result<BigRational, PeierlsError> {
    if chi.q() != 3 {
        return Err(PeierlsError::NotThreeColors(chi.q()));
    }
    let (layer, c, d) = flow_split(lattice, cut, s, a);
    let subset = VertexSet::from_vertices(lattice.len(), layer.iter().filter(|&v| chi_prime.get(v) == 0));
    if shift_with_layer(lattice, chi, &cut.w, s, &layer, &subset) != *chi_prime {
        return Err(PeierlsError::NotInFamily);
    }
    let c_zero = c.intersection(&subset).len();
    Ok(nu_value(c_zero, c.len() - c_zero, d.len()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowCertificate {
    pub s: ShiftDirection,
    pub layer: VertexSet,
    pub c: VertexSet,
    pub d: VertexSet,
    /// `Π_C (1/4 + 3/4) · Π_D (1/2 + 1/2)`.
    pub closed_form: BigRational,
    /// Sum of `ν` over all of `φ_s(χ)`, when `|W^s| <= EXPLICIT_SUM_LIMIT`.
    pub explicit: Option<BigRational>,
}

impl FlowCertificate {
    pub fn conserved(&self) -> bool {
        self.closed_form.is_one() && self.explicit.as_ref().is_none_or(|e| e.is_one())
    }
}

pub fn flow_out_total(
    lattice: &Lattice,
    chi: &Coloring,
    cut: &Cutset,
    s: ShiftDirection,
    a: &VertexSet,
) -> Result<FlowCertificate, PeierlsError> {
    let (layer, c, d) = flow_split(lattice, cut, s, a);
    let mut closed_form = BigRational::one();
    for _ in c.iter() {
        closed_form *= ratio(1, 4) + ratio(3, 4);
    }
    for _ in d.iter() {
        closed_form *= ratio(1, 2) + ratio(1, 2);
    }
    let explicit = if layer.len() <= EXPLICIT_SUM_LIMIT {
        let mut total = BigRational::zero();
        for (_, chi_prime) in ShiftFamily::new(lattice, chi, &cut.w, s) {
            total += flow_weight(lattice, chi, &chi_prime, cut, s, a)?;
        }
        Some(total)
    } else {
        None
    };
    Ok(FlowCertificate { s, layer, c, d, closed_form, explicit })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoodTriple {
    pub k: VertexSet,
    pub l: VertexSet,
    pub m: VertexSet,
}

/// Neighbours of `x` in the bipartite graph of lattice edges between `Q^E`
/// and `Q^O`.
fn q_neighbors<'a>(lattice: &'a Lattice, q: &'a QSets, x: usize) -> impl Iterator<Item = usize> + 'a {
    let other = if q.q_even.contains(x) { &q.q_odd } else { &q.q_even };
    lattice.neighbors(x).iter().copied().filter(move |&y| other.contains(y))
}

pub fn is_good_triple(lattice: &Lattice, t: &GoodTriple, q: &QSets) -> bool {
    if !t.k.is_subset(&q.q_odd) || !t.l.is_subset(&q.u) || !t.m.is_subset(&q.q_even.difference(&q.u)) {
        return false;
    }
    let cover = t.k.union(&t.l).union(&t.m);
    // Vertex cover: every Q^E-Q^O edge has an end in the cover.
    let covers = q.q_even.iter().all(|x| cover.contains(x) || q_neighbors(lattice, q, x).all(|y| cover.contains(y)));
    // Minimal: every cover vertex has an edge whose other end is uncovered.
    let minimal = cover.iter().all(|x| q_neighbors(lattice, q, x).any(|y| !cover.contains(y)));
    let free = q.u.difference(&t.l);
    let k_expected = VertexSet::from_vertices(lattice.len(), free.iter().flat_map(|x| q_neighbors(lattice, q, x)));
    covers && minimal && t.k == k_expected
}

/// `(W ∩ Q^O, U ∖ W, (Q^E ∖ U) ∖ W)`.
pub fn canonical_good_triple(w: &VertexSet, q: &QSets) -> GoodTriple {
    GoodTriple { k: w.intersection(&q.q_odd), l: q.u.difference(w), m: q.q_even.difference(&q.u).difference(w) }
}

/// The unique candidate triple with a given `L`: `K` is forced to be the
/// neighbourhood of `U ∖ L`, and `M` must hold exactly the vertices of
/// `Q^E ∖ U` with a neighbour outside `K`.
fn triple_for(lattice: &Lattice, q: &QSets, l: VertexSet) -> GoodTriple {
    let free = q.u.difference(&l);
    let k = VertexSet::from_vertices(lattice.len(), free.iter().flat_map(|x| q_neighbors(lattice, q, x)));
    let m = VertexSet::from_vertices(
        lattice.len(),
        q.q_even.difference(&q.u).iter().filter(|&x| q_neighbors(lattice, q, x).any(|y| !k.contains(y))),
    );
    GoodTriple { k, l, m }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum BoundReport {
    Computed {
        nu: f64,
        bound: f64,
        ratio: f64,
        nu_le_bound: bool,
        k0: usize,
        l0: usize,
        k_prime: usize,
        l_prime: usize,
    },
    Skipped {
        q_size: usize,
    },
}

/// Minimises `|K| + |L|` over all good triples, then compares `ν` with
/// `B(K', L') = (√3/2)^{w_o-w_e} 2^{|K_0|} / (3^{|K_0|+|L_0|} 2^{|K'|-|L'|})`
/// exactly (after squaring).
pub fn bound_report(
    lattice: &Lattice,
    chi: &Coloring,
    chi_prime: &Coloring,
    cut: &Cutset,
    s: ShiftDirection,
    a: &VertexSet,
) -> Result<BoundReport, PeierlsError> {
    let q = q_sets(lattice, a, s, chi_prime);
    let q_size = q.q_even.len() + q.q_odd.len();
    if q_size > COVER_SEARCH_LIMIT {
        return Ok(BoundReport::Skipped { q_size });
    }
    let nu = flow_weight(lattice, chi, chi_prime, cut, s, a)?;
    let canonical = canonical_good_triple(&cut.w, &q);
    let u = q.u.to_vec();
    let mut best: Option<GoodTriple> = None;
    for mask in 0u32..(1u32 << u.len()) {
        let l = VertexSet::from_vertices(lattice.len(), (0..u.len()).filter(|i| mask >> i & 1 == 1).map(|i| u[i]));
        let t = triple_for(lattice, &q, l);
        if !is_good_triple(lattice, &t, &q) {
            continue;
        }
        if best.as_ref().is_none_or(|b| t.k.len() + t.l.len() < b.k.len() + b.l.len()) {
            best = Some(t);
        }
    }
    let t0 = best.expect("the canonical triple is good, so some triple is");
    let (k0, l0) = (t0.k.len(), t0.l.len());
    let k_prime = t0.k.difference(&canonical.k).len();
    let l_prime = t0.l.difference(&canonical.l).len();
    let w_e = lattice.parity_part(&cut.w, Parity::Even).len();
    let gap = (cut.w.len() - 2 * w_e) as u32;
    // B^2 = (3/4)^gap · 4^{k0} / (9^{k0+l0} · 4^{k'-l'}).
    let big = |x: u64, e: u32| BigInt::from(BigUint::from(x).pow(e));
    let mut b2 = BigRational::new(big(3, gap) * big(4, k0 as u32), big(4, gap) * big(9, (k0 + l0) as u32));
    let shift = k_prime as i64 - l_prime as i64;
    if shift >= 0 {
        b2 /= BigRational::from_integer(big(4, shift as u32));
    } else {
        b2 *= BigRational::from_integer(big(4, (-shift) as u32));
    }
    let nu_le_bound = &nu * &nu <= b2;
    let to_f64 = |r: &BigRational| num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN);
    let nu_f = to_f64(&nu);
    let bound = to_f64(&b2).sqrt();
    Ok(BoundReport::Computed { nu: nu_f, bound, ratio: nu_f / bound, nu_le_bound, k0, l0, k_prime, l_prime })
}

/// Approximations other than `W` itself obtained by growing `A^E` and
/// shrinking `A^O` wherever the degree conditions still allow it.
pub fn perturbed_approximations(lattice: &Lattice, cut: &Cutset) -> Vec<Approximation> {
    let t = degree_threshold(lattice.dim());
    let w_o = lattice.parity_part(&cut.w, Parity::Odd);
    let w_e = lattice.parity_part(&cut.w, Parity::Even);
    let grown: Vec<usize> = (0..lattice.len())
        .filter(|&x| lattice.parity(x) == Parity::Even && !w_e.contains(x))
        .filter(|&x| lattice.neighbors(x).iter().filter(|&&y| w_o.contains(y)).count() >= t)
        .collect();
    let mut out = Vec::new();
    for &x in &grown {
        let mut a = cut.w.clone();
        a.insert(x);
        out.push(a);
    }
    for y in w_o.iter() {
        let mut a = cut.w.clone();
        a.remove(y);
        out.push(a);
    }
    out.into_iter().filter(|a| *a != cut.w && is_approximation(lattice, a, cut)).map(Approximation::external).collect()
}

/// Whether every coloring produced by the shift is proper.
pub fn family_is_proper(lattice: &Lattice, chi: &Coloring, w: &VertexSet, s: ShiftDirection) -> bool {
    ShiftFamily::new(lattice, chi, w, s).all(|(_, c)| coloring::is_proper(lattice, &c))
}
