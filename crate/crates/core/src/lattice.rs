//! Geometry of boxes `{-n..n}^d` and even tori `Z^d_n`.
//!
//! Vertices are indexed row-major over their coordinates with the last
//! coordinate varying fastest. Every "smallest vertex" rule elsewhere in the
//! crate refers to this index order.

use std::collections::VecDeque;
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::ColorGraph;

/// Grid points above this are refused outright.
const MAX_GRID_POINTS: u128 = 1 << 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Box,
    Torus,
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeKind::Box => f.write_str("box"),
            LatticeKind::Torus => f.write_str("torus"),
        }
    }
}

/// Box: `n` is the half-width, vertices `{-n..n}^d`. Torus: `n` is the side
/// length. `extended` (boxes only) adds the odd vertices of the next shell
/// `{-(n+1)..n+1}^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    pub d: usize,
    pub n: usize,
    #[serde(default)]
    pub extended: bool,
}

impl LatticeSpec {
    pub fn cube(d: usize, n: usize) -> Self {
        Self { kind: LatticeKind::Box, d, n, extended: false }
    }

    pub fn torus(d: usize, n: usize) -> Self {
        Self { kind: LatticeKind::Torus, d, n, extended: false }
    }

    pub fn extended_box(d: usize, n: usize) -> Self {
        Self { kind: LatticeKind::Box, d, n, extended: true }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LatticeError {
    #[error("dimension d must be at least 1")]
    ZeroDimension,
    #[error("box half-width n must be at least 1")]
    EmptyBox,
    #[error("torus side length n={0} must be even (bipartiteness)")]
    OddTorus(usize),
    #[error("torus side length n={0} must be at least 2")]
    TorusTooSmall(usize),
    #[error("the extended shell only applies to boxes")]
    ExtendedTorus,
    #[error("lattice has {0} grid points, above the supported maximum")]
    TooLarge(u128),
    #[error("shift direction {s} is not in +-1..+-{d}")]
    BadDirection { s: i32, d: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn flip(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parity::Even => f.write_str("even"),
            Parity::Odd => f.write_str("odd"),
        }
    }
}

/// `s` in `{+-1, ..., +-d}`; `+k` shifts coordinate `k-1` up by one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShiftDirection(i32);

impl ShiftDirection {
    pub fn new(s: i32, d: usize) -> Result<Self, LatticeError> {
        if s == 0 || s.unsigned_abs() as usize > d {
            return Err(LatticeError::BadDirection { s, d });
        }
        Ok(Self(s))
    }

    pub fn value(self) -> i32 {
        self.0
    }

    pub fn axis(self) -> usize {
        self.0.unsigned_abs() as usize - 1
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn reverse(self) -> Self {
        Self(-self.0)
    }

    /// All directions in the fixed order `+1, -1, +2, -2, ...`.
    pub fn all(d: usize) -> impl Iterator<Item = ShiftDirection> {
        (1..=d as i32).flat_map(|k| [ShiftDirection(k), ShiftDirection(-k)])
    }
}

impl fmt::Display for ShiftDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", self.0)
    }
}

/// A set of vertices of one lattice, stored as a dense bitset.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct VertexSet {
    bits: FixedBitSet,
}

impl VertexSet {
    pub fn empty(universe: usize) -> Self {
        Self { bits: FixedBitSet::with_capacity(universe) }
    }

    pub fn full(universe: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(universe);
        bits.insert_range(..);
        Self { bits }
    }

    pub fn from_vertices<I: IntoIterator<Item = usize>>(universe: usize, vertices: I) -> Self {
        let mut set = Self::empty(universe);
        for v in vertices {
            set.insert(v);
        }
        set
    }

    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.bits.contains(v)
    }

    pub fn insert(&mut self, v: usize) {
        self.bits.insert(v);
    }

    pub fn remove(&mut self, v: usize) {
        self.bits.set(v, false);
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn min(&self) -> Option<usize> {
        self.bits.minimum()
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut bits = self.bits.clone();
        bits.union_with(&other.bits);
        Self { bits }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let mut bits = self.bits.clone();
        bits.intersect_with(&other.bits);
        Self { bits }
    }

    pub fn difference(&self, other: &Self) -> Self {
        let mut bits = self.bits.clone();
        bits.difference_with(&other.bits);
        Self { bits }
    }

    pub fn complement(&self) -> Self {
        let mut bits = self.bits.clone();
        bits.toggle_range(..);
        Self { bits }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.bits.is_disjoint(&other.bits)
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

/// Everything the boundary operators produce for one set `X`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryOps {
    /// Edges with exactly one end in `X`, as `(inside, outside)`.
    pub edge_boundary: Vec<(usize, usize)>,
    pub internal: VertexSet,
    pub external: VertexSet,
    pub closure: VertexSet,
    pub even: VertexSet,
    pub odd: VertexSet,
}

/// Immutable lattice geometry. Adjacency is stored as a simple graph, so on
/// the torus with `n = 2` the two shifts along an axis collapse into one edge.
#[derive(Clone, Debug)]
pub struct Lattice {
    spec: LatticeSpec,
    side: usize,
    offset: i64,
    coords: Vec<i64>,
    grid_to_vertex: Vec<usize>,
    vertex_to_grid: Vec<usize>,
    adj_start: Vec<usize>,
    adj: Vec<usize>,
    odd: FixedBitSet,
}

const ABSENT: usize = usize::MAX;

impl Lattice {
    pub fn new(spec: LatticeSpec) -> Result<Self, LatticeError> {
        let LatticeSpec { kind, d, n, extended } = spec;
        if d == 0 {
            return Err(LatticeError::ZeroDimension);
        }
        let (side, offset) = match kind {
            LatticeKind::Box => {
                if n == 0 {
                    return Err(LatticeError::EmptyBox);
                }
                if extended {
                    (2 * n + 3, -(n as i64) - 1)
                } else {
                    (2 * n + 1, -(n as i64))
                }
            }
            LatticeKind::Torus => {
                if extended {
                    return Err(LatticeError::ExtendedTorus);
                }
                if n < 2 {
                    return Err(LatticeError::TorusTooSmall(n));
                }
                if n % 2 == 1 {
                    return Err(LatticeError::OddTorus(n));
                }
                (n, 0)
            }
        };
        let grid_points = (side as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
        if grid_points > MAX_GRID_POINTS {
            return Err(LatticeError::TooLarge(grid_points));
        }
        let grid_points = grid_points as usize;

        let mut coords = Vec::new();
        let mut grid_to_vertex = vec![ABSENT; grid_points];
        let mut vertex_to_grid = Vec::new();
        let mut point = vec![0i64; d];
        for g in 0..grid_points {
            let mut rest = g;
            for axis in (0..d).rev() {
                point[axis] = (rest % side) as i64 + offset;
                rest /= side;
            }
            let present = !extended || {
                let inner = point.iter().all(|c| c.unsigned_abs() as usize <= n);
                let odd = point.iter().sum::<i64>().rem_euclid(2) == 1;
                inner || odd
            };
            if present {
                grid_to_vertex[g] = vertex_to_grid.len();
                vertex_to_grid.push(g);
                coords.extend_from_slice(&point);
            }
        }

        let count = vertex_to_grid.len();
        let mut lattice = Self {
            spec,
            side,
            offset,
            coords,
            grid_to_vertex,
            vertex_to_grid,
            adj_start: Vec::with_capacity(count + 1),
            adj: Vec::new(),
            odd: FixedBitSet::with_capacity(count),
        };
        let mut buf = Vec::with_capacity(2 * d);
        lattice.adj_start.push(0);
        for v in 0..count {
            buf.clear();
            for s in ShiftDirection::all(d) {
                if let Some(u) = lattice.shift(v, s) {
                    if u != v && !buf.contains(&u) {
                        buf.push(u);
                    }
                }
            }
            buf.sort_unstable();
            lattice.adj.extend_from_slice(&buf);
            lattice.adj_start.push(lattice.adj.len());
            if lattice.coords(v).iter().sum::<i64>().rem_euclid(2) == 1 {
                lattice.odd.insert(v);
            }
        }
        Ok(lattice)
    }

    pub fn spec(&self) -> LatticeSpec {
        self.spec
    }

    pub fn kind(&self) -> LatticeKind {
        self.spec.kind
    }

    pub fn dim(&self) -> usize {
        self.spec.d
    }

    pub fn is_torus(&self) -> bool {
        self.spec.kind == LatticeKind::Torus
    }

    /// Side length of the bounding grid.
    pub fn side(&self) -> usize {
        self.side
    }

    /// Coordinate value of grid position 0 along every axis.
    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.vertex_to_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_to_grid.is_empty()
    }

    pub fn coords(&self, v: usize) -> &[i64] {
        let d = self.spec.d;
        &self.coords[v * d..(v + 1) * d]
    }

    /// Grid position of `v` in the bounding grid.
    pub fn grid_index(&self, v: usize) -> usize {
        self.vertex_to_grid[v]
    }

    /// Vertex at the given coordinates. Torus coordinates are reduced mod `n`.
    pub fn vertex_at(&self, point: &[i64]) -> Option<usize> {
        if point.len() != self.spec.d {
            return None;
        }
        let mut g = 0usize;
        for &c in point {
            let c = if self.is_torus() {
                c.rem_euclid(self.side as i64)
            } else {
                let c = c - self.offset;
                if c < 0 || c >= self.side as i64 {
                    return None;
                }
                c
            };
            g = g * self.side + c as usize;
        }
        match self.grid_to_vertex[g] {
            ABSENT => None,
            v => Some(v),
        }
    }

    pub fn parity(&self, v: usize) -> Parity {
        if self.odd.contains(v) {
            Parity::Odd
        } else {
            Parity::Even
        }
    }

    pub fn parity_class(&self, parity: Parity) -> VertexSet {
        VertexSet::from_vertices(self.len(), (0..self.len()).filter(|&v| self.parity(v) == parity))
    }

    /// `v + e_s`, or `None` when it leaves a box.
    pub fn shift(&self, v: usize, s: ShiftDirection) -> Option<usize> {
        let d = self.spec.d;
        let axis = s.axis();
        if axis >= d {
            return None;
        }
        let base = v * d;
        let step: i64 = if s.is_positive() { 1 } else { -1 };
        let mut g = 0usize;
        for a in 0..d {
            let mut c = self.coords[base + a];
            if a == axis {
                c += step;
            }
            let c = if self.is_torus() {
                c.rem_euclid(self.side as i64)
            } else {
                let c = c - self.offset;
                if c < 0 || c >= self.side as i64 {
                    return None;
                }
                c
            };
            g = g * self.side + c as usize;
        }
        match self.grid_to_vertex[g] {
            ABSENT => None,
            u => Some(u),
        }
    }

    pub fn shift_set(&self, set: &VertexSet, s: ShiftDirection) -> VertexSet {
        VertexSet::from_vertices(self.len(), set.iter().filter_map(|v| self.shift(v, s)))
    }

    pub fn empty_set(&self) -> VertexSet {
        VertexSet::empty(self.len())
    }

    pub fn full_set(&self) -> VertexSet {
        VertexSet::full(self.len())
    }

    /// Vertices adjacent in `Z^d` to a point outside the region: the box
    /// boundary `∂_int Λ`. Always empty on a torus.
    pub fn outer_boundary(&self) -> VertexSet {
        if self.is_torus() {
            return self.empty_set();
        }
        let full = 2 * self.spec.d;
        VertexSet::from_vertices(self.len(), (0..self.len()).filter(|&v| self.degree(v) < full))
    }

    /// Degree `v` would have in `Z^d` (or on the torus).
    pub fn ambient_degree(&self, v: usize) -> usize {
        if self.is_torus() {
            self.degree(v)
        } else {
            2 * self.spec.d
        }
    }

    pub fn edge_boundary(&self, set: &VertexSet) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in set.iter() {
            for &v in self.neighbors(u) {
                if !set.contains(v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn internal_boundary(&self, set: &VertexSet) -> VertexSet {
        VertexSet::from_vertices(
            self.len(),
            set.iter().filter(|&u| self.neighbors(u).iter().any(|&v| !set.contains(v))),
        )
    }

    pub fn external_boundary(&self, set: &VertexSet) -> VertexSet {
        let mut out = self.empty_set();
        for u in set.iter() {
            for &v in self.neighbors(u) {
                if !set.contains(v) {
                    out.insert(v);
                }
            }
        }
        out
    }

    /// `X ∪ ∂_ext X`.
    pub fn closure(&self, set: &VertexSet) -> VertexSet {
        set.union(&self.external_boundary(set))
    }

    pub fn parity_part(&self, set: &VertexSet, parity: Parity) -> VertexSet {
        VertexSet::from_vertices(self.len(), set.iter().filter(|&v| self.parity(v) == parity))
    }

    pub fn boundary_operators(&self, set: &VertexSet) -> BoundaryOps {
        let external = self.external_boundary(set);
        BoundaryOps {
            edge_boundary: self.edge_boundary(set),
            internal: self.internal_boundary(set),
            closure: set.union(&external),
            external,
            even: self.parity_part(set, Parity::Even),
            odd: self.parity_part(set, Parity::Odd),
        }
    }

    /// Components of the subgraph induced by `set`, ordered by their smallest
    /// vertex.
    pub fn connected_components(&self, set: &VertexSet) -> Vec<VertexSet> {
        let mut seen = self.empty_set();
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for start in set.iter() {
            if seen.contains(start) {
                continue;
            }
            let mut comp = self.empty_set();
            seen.insert(start);
            comp.insert(start);
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &v in self.neighbors(u) {
                    if set.contains(v) && !seen.contains(v) {
                        seen.insert(v);
                        comp.insert(v);
                        queue.push_back(v);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self, set: &VertexSet) -> bool {
        self.connected_components(set).len() <= 1
    }

    /// Graph automorphisms as vertex permutations: axis permutations and
    /// reflections, plus translations on the torus. Returns `None` above
    /// `cap` elements.
    pub fn automorphisms(&self, cap: usize) -> Option<Vec<Vec<usize>>> {
        if self.spec.extended {
            // Reflections still apply, but nothing downstream needs them.
            return Some(vec![(0..self.len()).collect()]);
        }
        let d = self.spec.d;
        let perms = permutations(d);
        let translations = if self.is_torus() { self.side.pow(d as u32) } else { 1 };
        let size = perms.len().checked_mul(1usize << d)?.checked_mul(translations)?;
        if size > cap {
            return None;
        }
        let mut out = Vec::with_capacity(size);
        let mut image = vec![0i64; d];
        for perm in &perms {
            for signs in 0..(1u32 << d) {
                for t in 0..translations {
                    let mut shift = vec![0i64; d];
                    let mut rest = t;
                    for axis in (0..d).rev() {
                        shift[axis] = (rest % self.side) as i64;
                        rest /= self.side;
                    }
                    let map: Vec<usize> = (0..self.len())
                        .map(|v| {
                            let c = self.coords(v);
                            for axis in 0..d {
                                let x = c[perm[axis]];
                                let x = if signs & (1 << axis) != 0 { -x } else { x };
                                image[axis] = x + shift[axis];
                            }
                            self.vertex_at(&image).expect("automorphism stays in lattice")
                        })
                        .collect();
                    out.push(map);
                }
            }
        }
        Some(out)
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

impl ColorGraph for Lattice {
    fn vertex_count(&self) -> usize {
        self.len()
    }

    fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.adj_start[v]..self.adj_start[v + 1]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn torus(d: usize, n: usize) -> Lattice {
        Lattice::new(LatticeSpec::torus(d, n)).unwrap()
    }

    fn cube(d: usize, n: usize) -> Lattice {
        Lattice::new(LatticeSpec::cube(d, n)).unwrap()
    }

    #[test]
    fn torus_is_regular() {
        let l = torus(2, 4);
        assert_eq!(l.len(), 16);
        assert!((0..16).all(|v| l.degree(v) == 4));
    }

    #[test]
    fn box_corner_degree() {
        let l = cube(2, 1);
        assert_eq!(l.len(), 9);
        let corner = l.vertex_at(&[1, 1]).unwrap();
        assert_eq!(l.degree(corner), 2);
        let center = l.vertex_at(&[0, 0]).unwrap();
        assert_eq!(l.degree(center), 4);
    }

    #[test]
    fn invalid_specs_name_the_constraint() {
        assert_eq!(Lattice::new(LatticeSpec::torus(2, 3)).unwrap_err(), LatticeError::OddTorus(3));
        assert_eq!(Lattice::new(LatticeSpec::torus(0, 4)).unwrap_err(), LatticeError::ZeroDimension);
        assert_eq!(Lattice::new(LatticeSpec::cube(2, 0)).unwrap_err(), LatticeError::EmptyBox);
        let msg = Lattice::new(LatticeSpec::torus(2, 3)).unwrap_err().to_string();
        assert!(msg.contains("even"));
    }

    #[test]
    fn row_major_last_coordinate_fastest() {
        let l = cube(2, 1);
        assert_eq!(l.coords(0), &[-1, -1]);
        assert_eq!(l.coords(1), &[-1, 0]);
        assert_eq!(l.coords(3), &[0, -1]);
    }

    #[test]
    fn parity_examples() {
        let l = torus(2, 4);
        assert_eq!(l.parity(l.vertex_at(&[0, 0]).unwrap()), Parity::Even);
        assert_eq!(l.parity(l.vertex_at(&[1, 0]).unwrap()), Parity::Odd);
        for (u, v) in l.edges() {
            assert_ne!(l.parity(u), l.parity(v));
        }
    }

    #[test]
    fn shift_examples() {
        let l = torus(2, 4);
        let s1 = ShiftDirection::new(1, 2).unwrap();
        assert_eq!(l.shift(l.vertex_at(&[3, 0]).unwrap(), s1), l.vertex_at(&[0, 0]));
        let b = cube(2, 1);
        let s = ShiftDirection::new(-2, 2).unwrap();
        assert_eq!(b.shift(b.vertex_at(&[0, -1]).unwrap(), s), None);
        assert!(ShiftDirection::new(3, 2).is_err());
        assert!(ShiftDirection::new(0, 2).is_err());
    }

    #[test]
    fn direction_order() {
        let dirs: Vec<i32> = ShiftDirection::all(3).map(|s| s.value()).collect();
        assert_eq!(dirs, vec![1, -1, 2, -2, 3, -3]);
    }

    #[test]
    fn boundary_of_single_vertex() {
        let l = torus(2, 4);
        let x = VertexSet::from_vertices(16, [5]);
        let ops = l.boundary_operators(&x);
        assert_eq!(ops.edge_boundary.len(), 4);
        assert_eq!(ops.internal, x);
        assert_eq!(ops.external.len(), 4);
        assert_eq!(ops.closure.len(), 5);
    }

    #[test]
    fn boundary_of_everything_is_empty() {
        let l = torus(2, 4);
        let ops = l.boundary_operators(&l.full_set());
        assert!(ops.edge_boundary.is_empty());
        assert!(ops.internal.is_empty());
    }

    #[test]
    fn block_edge_boundary_matches_direct_count() {
        let l = torus(2, 4);
        let block: Vec<usize> = [[0, 0], [0, 1], [1, 0], [1, 1]].iter().map(|p| l.vertex_at(p).unwrap()).collect();
        let x = VertexSet::from_vertices(16, block.iter().copied());
        // Oracle: count edges of the full edge list with exactly one end inside.
        let direct = l.edges().into_iter().filter(|&(u, v)| block.contains(&u) != block.contains(&v)).count();
        assert_eq!(direct, 8);
        assert_eq!(l.edge_boundary(&x).len(), direct);
    }

    #[test]
    fn components_examples() {
        let b = cube(2, 1);
        assert!(b.connected_components(&b.empty_set()).is_empty());
        let corners = VertexSet::from_vertices(9, [b.vertex_at(&[-1, -1]).unwrap(), b.vertex_at(&[1, 1]).unwrap()]);
        let comps = b.connected_components(&corners);
        assert_eq!(comps.len(), 2);
        assert!(comps.iter().all(|c| c.len() == 1));

        let l = torus(2, 4);
        let origin = VertexSet::from_vertices(16, [l.vertex_at(&[0, 0]).unwrap()]);
        let comps = l.connected_components(&l.closure(&origin));
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].len(), 5);
    }

    #[test]
    fn extended_box_adds_odd_shell() {
        let l = Lattice::new(LatticeSpec::extended_box(2, 1)).unwrap();
        // 3x3 box plus the odd points of the 5x5 ring (8 of its 16 points).
        assert_eq!(l.len(), 9 + 8);
        assert!(l.vertex_at(&[2, 1]).is_some());
        assert!(l.vertex_at(&[2, 0]).is_none());
    }

    #[test]
    fn hamming_cube_torus() {
        let l = torus(3, 2);
        assert!((0..l.len()).all(|v| l.degree(v) == 3));
    }

    #[test]
    fn automorphism_counts() {
        let l = torus(2, 4);
        let g = l.automorphisms(10_000).unwrap();
        assert_eq!(g.len(), 16 * 8);
        let edges: std::collections::HashSet<_> = l.edges().into_iter().collect();
        for map in &g {
            for &(u, v) in &edges {
                let (a, b) = (map[u].min(map[v]), map[u].max(map[v]));
                assert!(edges.contains(&(a, b)));
            }
        }
        assert!(l.automorphisms(10).is_none());
    }

    proptest! {
        #[test]
        fn boundary_identities(bits in proptest::collection::vec(any::<bool>(), 25)) {
            for lattice in [torus(2, 4), cube(2, 2)] {
                let n = lattice.len();
                let x = VertexSet::from_vertices(n, (0..n).filter(|&v| bits[v]));
                let ops = lattice.boundary_operators(&x);
                let by_vertex: usize = ops
                    .internal
                    .iter()
                    .map(|v| lattice.neighbors(v).iter().filter(|&&u| !x.contains(u)).count())
                    .sum();
                prop_assert_eq!(ops.edge_boundary.len(), by_vertex);
                prop_assert_eq!(lattice.internal_boundary(&x.complement()), ops.external.clone());
                prop_assert_eq!(ops.even.union(&ops.odd), x.clone());
                prop_assert!(ops.even.is_disjoint(&ops.odd));
            }
        }

        #[test]
        fn shifts_invert(v in 0usize..64, s in prop_oneof![Just(1i32), Just(-1), Just(2), Just(-2), Just(3), Just(-3)]) {
            let t = torus(3, 4);
            let s = ShiftDirection::new(s, 3).unwrap();
            let w = t.shift(v, s).unwrap();
            prop_assert_eq!(t.shift(w, s.reverse()), Some(v));
            let b = cube(3, 1);
            let v = v % b.len();
            if let Some(w) = b.shift(v, s) {
                prop_assert_eq!(b.shift(w, s.reverse()), Some(v));
            }
        }
    }

    #[test]
    fn box_degrees_in_range() {
        let b = cube(3, 2);
        assert!((0..b.len()).all(|v| (3..=6).contains(&b.degree(v))));
        assert_eq!(b.outer_boundary().len(), 125 - 27);
    }
}
