//! Backtracking enumeration of proper colorings under per-vertex color
//! masks, in vertex index order with forward checking.

use rayon::prelude::*;

use super::OracleError;
use crate::coloring::{BoundaryCondition, Coloring};
use crate::graph::ColorGraph;
use crate::lattice::Lattice;

pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

fn full_mask(q: u8) -> u32 {
    if q >= 32 {
        u32::MAX
    } else {
        (1u32 << q) - 1
    }
}

struct Search<'a, G: ColorGraph + ?Sized> {
    graph: &'a G,
    colors: Vec<u8>,
    /// Colors still allowed at each vertex given its colored neighbours.
    domain: Vec<u32>,
}

impl<G: ColorGraph + ?Sized> Search<'_, G> {
    /// Visits every completion of the assignment of vertices `< v`.
    /// Returns `false` once `visit` asks to stop.
    fn run(&mut self, v: usize, visit: &mut dyn FnMut(&[u8]) -> bool) -> bool {
        if v == self.colors.len() {
            return visit(&self.colors);
        }
        let mut avail = self.domain[v];
        while avail != 0 {
            let c = avail.trailing_zeros() as u8;
            avail &= avail - 1;
            let bit = 1u32 << c;
            let mut touched: Vec<usize> = Vec::new();
            let mut dead = false;
            for &u in self.graph.neighbors(v) {
                if u > v && self.domain[u] & bit != 0 {
                    self.domain[u] &= !bit;
                    touched.push(u);
                    if self.domain[u] == 0 {
                        dead = true;
                    }
                }
            }
            let keep_going = if dead {
                true
            } else {
                self.colors[v] = c;
                self.run(v + 1, visit)
            };
            for u in touched {
                self.domain[u] |= bit;
            }
            if !keep_going {
                return false;
            }
        }
        true
    }
}

/// Calls `visit` on every proper coloring allowed by `masks`, in
/// lexicographic order of the color vector. Stops early when `visit`
/// returns `false`.
pub fn for_each_coloring<G: ColorGraph + ?Sized>(
    graph: &G,
    q: u8,
    masks: &[u32],
    mut visit: impl FnMut(&[u8]) -> bool,
) {
    let n = graph.vertex_count();
    assert_eq!(masks.len(), n, "one mask per vertex");
    let full = full_mask(q);
    let domain: Vec<u32> = masks.iter().map(|m| m & full).collect();
    if domain.contains(&0) {
        return;
    }
    let mut search = Search { graph, colors: vec![0; n], domain };
    search.run(0, &mut visit);
}

/// Every proper coloring allowed by `masks`; refuses past `cap`.
pub fn enumerate_masked<G: ColorGraph + ?Sized>(
    graph: &G,
    q: u8,
    masks: &[u32],
    cap: u64,
) -> Result<Vec<Coloring>, OracleError> {
    let n = graph.vertex_count();
    if n == 0 {
        return Ok(vec![Coloring::zeros(q, 0)?]);
    }
    // Split on the first vertex's color so branches run in parallel; the
    // concatenation keeps the sequential order.
    let first: Vec<u8> = (0..q).filter(|&c| masks[0] & (1 << c) != 0).collect();
    let branches: Vec<Result<Vec<Coloring>, OracleError>> = first
        .par_iter()
        .map(|&c| {
            let mut m = masks.to_vec();
            m[0] = 1 << c;
            let mut out = Vec::new();
            let mut overflow = false;
            for_each_coloring(graph, q, &m, |colors| {
                if out.len() as u64 >= cap {
                    overflow = true;
                    return false;
                }
                out.push(Coloring::from_colors(q, colors).expect("colors come from the mask"));
                true
            });
            if overflow {
                Err(OracleError::CapExceeded { cap, at_least: cap + 1 })
            } else {
                Ok(out)
            }
        })
        .collect();
    let mut all = Vec::new();
    for b in branches {
        all.extend(b?);
        if all.len() as u64 > cap {
            return Err(OracleError::CapExceeded { cap, at_least: all.len() as u64 });
        }
    }
    Ok(all)
}

/// Number of proper colorings allowed by `masks`, by enumeration.
pub fn count_by_enumeration<G: ColorGraph + ?Sized>(
    graph: &G,
    q: u8,
    masks: &[u32],
    cap: u64,
) -> Result<u64, OracleError> {
    let n = graph.vertex_count();
    if n == 0 {
        return Ok(1);
    }
    let first: Vec<u8> = (0..q).filter(|&c| masks[0] & (1 << c) != 0).collect();
    let counts: Vec<u64> = first
        .par_iter()
        .map(|&c| {
            let mut m = masks.to_vec();
            m[0] = 1 << c;
            let mut count = 0u64;
            for_each_coloring(graph, q, &m, |_| {
                count += 1;
                count <= cap
            });
            count
        })
        .collect();
    let total: u64 = counts.iter().sum();
    if total > cap {
        return Err(OracleError::CapExceeded { cap, at_least: total });
    }
    Ok(total)
}

/// Proper colorings of a lattice satisfying `bc`.
pub fn enumerate_colorings(
    lattice: &Lattice,
    q: u8,
    bc: &BoundaryCondition,
    cap: u64,
) -> Result<Vec<Coloring>, OracleError> {
    let masks = bc.masks(lattice, q)?;
    enumerate_masked(lattice, q, &masks, cap)
}

pub fn unconstrained_masks(n: usize, q: u8) -> Vec<u32> {
    vec![full_mask(q); n]
}
