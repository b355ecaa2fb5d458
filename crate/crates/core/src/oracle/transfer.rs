//! Exact counting by a transfer matrix over slabs: vertices are grouped by
//! their first coordinate and the count is propagated one slab at a time,
//! with each slab's coloring packed into a `u128`.

use std::collections::HashMap;

use num_bigint::BigUint;
use rayon::prelude::*;

use super::OracleError;
use crate::coloring::BoundaryCondition;
use crate::graph::{ColorGraph, SimpleGraph};
use crate::lattice::Lattice;

pub const DEFAULT_STATE_CAP: usize = 4_000_000;

/// Partition of the vertices into consecutive slabs; edges may only join a
/// slab to itself or to a neighbouring slab (or, when `wrap`, the last slab
/// to the first).
#[derive(Clone, Debug)]
pub struct LayerPlan {
    pub slabs: Vec<Vec<usize>>,
    pub wrap: bool,
}

impl LayerPlan {
    pub fn for_lattice(lattice: &Lattice) -> Self {
        let first: Vec<i64> = (0..lattice.len()).map(|v| lattice.coords(v)[0]).collect();
        let lo = *first.iter().min().unwrap_or(&0);
        let hi = *first.iter().max().unwrap_or(&0);
        let mut slabs = vec![Vec::new(); (hi - lo + 1) as usize];
        for (v, &c) in first.iter().enumerate() {
            slabs[(c - lo) as usize].push(v);
        }
        Self { slabs, wrap: lattice.is_torus() }
    }
}

/// Rectangular grid graph with free boundary, row-major with the first side
/// most significant, and its slab plan.
pub fn grid_graph(sides: &[usize]) -> (SimpleGraph, LayerPlan) {
    let n: usize = sides.iter().product();
    let mut edges = Vec::new();
    let mut stride = 1;
    for a in (0..sides.len()).rev() {
        for v in 0..n {
            if (v / stride) % sides[a] + 1 < sides[a] {
                edges.push((v, v + stride));
            }
        }
        stride *= sides[a];
    }
    let graph = SimpleGraph::from_edges(n, &edges).expect("grid edges are valid");
    let per_slab = if sides.is_empty() { 1 } else { n / sides[0].max(1) };
    let slabs =
        (0..sides.first().copied().unwrap_or(1)).map(|k| (k * per_slab..(k + 1) * per_slab).collect()).collect();
    (graph, LayerPlan { slabs, wrap: false })
}

/// What a vertex must differ from.
#[derive(Clone, Copy)]
enum Tie {
    /// Earlier vertex of the same slab.
    Same(usize),
    Prev(usize),
    /// Vertex of the first slab (wrap-around).
    First(usize),
}

struct Compiled {
    width: u32,
    full: u32,
    slabs: Vec<Vec<(u32, Vec<Tie>)>>,
}

fn color_at(state: u128, pos: usize, width: u32) -> u32 {
    ((state >> (pos as u32 * width)) & ((1u128 << width) - 1)) as u32
}

impl Compiled {
    fn new<G: ColorGraph + ?Sized>(graph: &G, plan: &LayerPlan, q: u8, masks: &[u32]) -> Result<Self, OracleError> {
        let n = graph.vertex_count();
        let layers = plan.slabs.len();
        let mut slab_of = vec![usize::MAX; n];
        let mut pos = vec![0usize; n];
        for (k, slab) in plan.slabs.iter().enumerate() {
            for (i, &v) in slab.iter().enumerate() {
                slab_of[v] = k;
                pos[v] = i;
            }
        }
        if slab_of.contains(&usize::MAX) {
            return Err(OracleError::Plan("slabs do not cover every vertex".into()));
        }
        let width = match q {
            0..=2 => 1,
            3..=4 => 2,
            5..=16 => 4,
            _ => 8,
        };
        let widest = plan.slabs.iter().map(Vec::len).max().unwrap_or(0);
        if widest as u32 * width > 128 {
            return Err(OracleError::Plan(format!("slab of {widest} vertices does not fit 128 bits")));
        }
        let full = if q >= 32 { u32::MAX } else { (1u32 << q) - 1 };
        let mut slabs = Vec::with_capacity(layers);
        for (k, slab) in plan.slabs.iter().enumerate() {
            let mut rows = Vec::with_capacity(slab.len());
            for &v in slab {
                let mut ties = Vec::new();
                for &u in graph.neighbors(v) {
                    let ku = slab_of[u];
                    if ku == k {
                        if pos[u] < pos[v] {
                            ties.push(Tie::Same(pos[u]));
                        }
                    } else if k > 0 && ku == k - 1 {
                        ties.push(Tie::Prev(pos[u]));
                    } else if plan.wrap && k + 1 == layers && ku == 0 {
                        ties.push(Tie::First(pos[u]));
                    } else if !(ku == k + 1 || (plan.wrap && k == 0 && ku + 1 == layers)) {
                        return Err(OracleError::Plan(format!("edge ({v}, {u}) skips a slab")));
                    }
                }
                rows.push((masks[v] & full, ties));
            }
            slabs.push(rows);
        }
        Ok(Self { width, full, slabs })
    }

    /// Calls `emit` with every admissible coloring of slab `k`.
    fn extend(&self, k: usize, prev: u128, first: u128, emit: &mut dyn FnMut(u128)) {
        fn go(c: &Compiled, k: usize, i: usize, cur: u128, prev: u128, first: u128, emit: &mut dyn FnMut(u128)) {
            let rows = &c.slabs[k];
            if i == rows.len() {
                emit(cur);
                return;
            }
            let (mask, ties) = &rows[i];
            let mut allowed = *mask & c.full;
            for tie in ties {
                let taken = match *tie {
                    Tie::Same(p) => color_at(cur, p, c.width),
                    Tie::Prev(p) => color_at(prev, p, c.width),
                    Tie::First(p) => color_at(first, p, c.width),
                };
                allowed &= !(1 << taken);
            }
            while allowed != 0 {
                let color = allowed.trailing_zeros();
                allowed &= allowed - 1;
                go(c, k, i + 1, cur | ((color as u128) << (i as u32 * c.width)), prev, first, emit);
            }
        }
        go(self, k, 0, 0, prev, first, emit);
    }

    fn propagate(
        &self,
        start: HashMap<u128, u128>,
        from: usize,
        first: u128,
        cap: usize,
    ) -> Result<HashMap<u128, u128>, OracleError> {
        let mut cur = start;
        for k in from..self.slabs.len() {
            let mut next: HashMap<u128, u128> = HashMap::new();
            let mut overflow = false;
            for (&state, &count) in &cur {
                self.extend(k, state, first, &mut |s| {
                    let slot = next.entry(s).or_insert(0);
                    match slot.checked_add(count) {
                        Some(x) => *slot = x,
                        None => overflow = true,
                    }
                });
                if next.len() > cap {
                    return Err(OracleError::StateCap { cap, layer: k });
                }
            }
            if overflow {
                return Err(OracleError::Overflow);
            }
            cur = next;
        }
        Ok(cur)
    }
}

fn total(map: &HashMap<u128, u128>) -> Result<u128, OracleError> {
    map.values().try_fold(0u128, |acc, &x| acc.checked_add(x)).ok_or(OracleError::Overflow)
}

/// Exact number of proper colorings allowed by `masks`.
pub fn count_layered<G: ColorGraph + ?Sized>(
    graph: &G,
    plan: &LayerPlan,
    q: u8,
    masks: &[u32],
    cap: usize,
) -> Result<BigUint, OracleError> {
    if graph.vertex_count() == 0 {
        return Ok(BigUint::from(1u8));
    }
    let compiled = Compiled::new(graph, plan, q, masks)?;
    let mut firsts = Vec::new();
    compiled.extend(0, 0, 0, &mut |s| firsts.push(s));
    if firsts.len() > cap {
        return Err(OracleError::StateCap { cap, layer: 0 });
    }
    if !plan.wrap {
        let start: HashMap<u128, u128> = firsts.into_iter().map(|s| (s, 1)).collect();
        let end = compiled.propagate(start, 1, 0, cap)?;
        return Ok(BigUint::from(total(&end)?));
    }
    // Fix the first slab so the last one can be checked against it.
    let parts: Vec<Result<u128, OracleError>> = firsts
        .par_iter()
        .map(|&s0| {
            let end = compiled.propagate(HashMap::from([(s0, 1u128)]), 1, s0, cap)?;
            total(&end)
        })
        .collect();
    let mut sum = BigUint::from(0u8);
    for p in parts {
        sum += BigUint::from(p?);
    }
    Ok(sum)
}

/// `|{χ proper on the lattice satisfying bc}|`.
pub fn count_colorings(lattice: &Lattice, q: u8, bc: &BoundaryCondition) -> Result<BigUint, OracleError> {
    count_colorings_capped(lattice, q, bc, DEFAULT_STATE_CAP)
}

pub fn count_colorings_capped(
    lattice: &Lattice,
    q: u8,
    bc: &BoundaryCondition,
    cap: usize,
) -> Result<BigUint, OracleError> {
    let masks = bc.masks(lattice, q)?;
    count_layered(lattice, &LayerPlan::for_lattice(lattice), q, &masks, cap)
}

/// Proper `q`-colorings of a free-boundary grid.
pub fn count_grid(sides: &[usize], q: u8) -> Result<BigUint, OracleError> {
    let (graph, plan) = grid_graph(sides);
    let masks = vec![if q >= 32 { u32::MAX } else { (1u32 << q) - 1 }; graph.vertex_count()];
    count_layered(&graph, &plan, q, &masks, DEFAULT_STATE_CAP)
}
