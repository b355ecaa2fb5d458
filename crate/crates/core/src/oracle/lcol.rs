//! Exact check of the conditional lower bound
//! `μ(χ ≡ 0 on E'', χ ≡ 1 on O'' | χ ≡ 0 on E', χ ≡ 1 on O') >= 3^{-|E'' ∪ O''|}`
//! for the uniform measure on proper 3-colorings of a bipartite graph.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::enumerate::count_by_enumeration;
use super::OracleError;
use crate::graph::{ColorGraph, SimpleGraph};
use crate::lattice::Parity;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LcolInstance {
    pub graph: SimpleGraph,
    pub sides: Vec<Parity>,
    pub e1: Vec<usize>,
    pub o1: Vec<usize>,
    pub e2: Vec<usize>,
    pub o2: Vec<usize>,
}

impl LcolInstance {
    /// Sides from the graph's own bipartition.
    pub fn new(
        graph: SimpleGraph,
        e1: &[usize],
        o1: &[usize],
        e2: &[usize],
        o2: &[usize],
    ) -> Result<Self, OracleError> {
        let sides = graph.bipartition().map_err(|e| OracleError::Invalid(e.to_string()))?;
        Ok(Self { graph, sides, e1: e1.to_vec(), o1: o1.to_vec(), e2: e2.to_vec(), o2: o2.to_vec() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LcolReport {
    pub conditioned: u64,
    pub joint: u64,
    pub lhs: String,
    pub rhs: String,
    pub lhs_f64: f64,
    pub rhs_f64: f64,
    pub holds: bool,
    pub equality: bool,
}

pub fn lcol_check(inst: &LcolInstance, cap: u64) -> Result<LcolReport, OracleError> {
    let g = &inst.graph;
    let n = g.vertex_count();
    if inst.sides.len() != n {
        return Err(OracleError::Invalid("one side per vertex".into()));
    }
    if g.edges().iter().any(|&(u, v)| inst.sides[u] == inst.sides[v]) {
        return Err(OracleError::Invalid("sides are not a bipartition".into()));
    }
    let on = |set: &[usize], p: Parity| set.iter().all(|&v| v < n && inst.sides[v] == p);
    if !on(&inst.e1, Parity::Even)
        || !on(&inst.e2, Parity::Even)
        || !on(&inst.o1, Parity::Odd)
        || !on(&inst.o2, Parity::Odd)
    {
        return Err(OracleError::Invalid("E sets must be even, O sets odd".into()));
    }
    if inst.e2.iter().any(|v| inst.e1.contains(v)) || inst.o2.iter().any(|v| inst.o1.contains(v)) {
        return Err(OracleError::Invalid("E'' and O'' must avoid E' and O'".into()));
    }
    let mut cond = vec![0b111u32; n];
    for &v in &inst.e1 {
        cond[v] = 0b001;
    }
    for &v in &inst.o1 {
        cond[v] = 0b010;
    }
    let mut joint = cond.clone();
    for &v in &inst.e2 {
        joint[v] = 0b001;
    }
    for &v in &inst.o2 {
        joint[v] = 0b010;
    }
    let conditioned = count_by_enumeration(g, 3, &cond, cap)?;
    if conditioned == 0 {
        return Err(OracleError::Invalid("conditioning event is empty".into()));
    }
    let joint_count = count_by_enumeration(g, 3, &joint, cap)?;
    let mut targets = inst.e2.clone();
    targets.extend(&inst.o2);
    targets.sort_unstable();
    targets.dedup();
    let k = targets.len() as u32;
    let three_k = BigUint::from(3u8).pow(k);
    let lhs_scaled = BigUint::from(joint_count) * &three_k;
    let lhs = BigRational::new(joint_count.into(), conditioned.into());
    let rhs = BigRational::new(1.into(), three_k.into());
    Ok(LcolReport {
        conditioned,
        joint: joint_count,
        lhs: lhs.to_string(),
        rhs: rhs.to_string(),
        lhs_f64: lhs.to_f64().unwrap_or(f64::NAN),
        rhs_f64: rhs.to_f64().unwrap_or(f64::NAN),
        holds: lhs_scaled >= BigUint::from(conditioned),
        equality: lhs_scaled == BigUint::from(conditioned),
    })
}

/// A random bipartite graph on at most 10 vertices with random primed and
/// double-primed sets.
pub fn random_instance<R: Rng>(rng: &mut R) -> LcolInstance {
    let evens = rng.gen_range(1..=5);
    let odds = rng.gen_range(1..=5);
    let n = evens + odds;
    let mut edges = Vec::new();
    for e in 0..evens {
        for o in evens..n {
            if rng.gen_bool(0.5) {
                edges.push((e, o));
            }
        }
    }
    let graph = SimpleGraph::from_edges(n, &edges).expect("bipartite edges are valid");
    let sides: Vec<Parity> = (0..n).map(|v| if v < evens { Parity::Even } else { Parity::Odd }).collect();
    let (mut e1, mut o1, mut e2, mut o2) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for v in 0..n {
        let roll = rng.gen_range(0..4);
        let (primed, double) = if v < evens { (&mut e1, &mut e2) } else { (&mut o1, &mut o2) };
        match roll {
            0 => primed.push(v),
            1 => double.push(v),
            _ => {}
        }
    }
    LcolInstance { graph, sides, e1, o1, e2, o2 }
}

/// `count` seeded random instances.
pub fn random_sweep(seed: u64, count: usize) -> Result<Vec<LcolReport>, OracleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| lcol_check(&random_instance(&mut rng), 1 << 20)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge_is_tight() {
        let inst = LcolInstance::new(SimpleGraph::path(2), &[], &[], &[0], &[]).unwrap();
        let r = lcol_check(&inst, 100).unwrap();
        assert_eq!(r.lhs, "1/3");
        assert!(r.holds && r.equality);
    }

    #[test]
    fn path_of_three_endpoints() {
        let inst = LcolInstance::new(SimpleGraph::path(3), &[], &[], &[0, 2], &[]).unwrap();
        let r = lcol_check(&inst, 100).unwrap();
        assert_eq!(r.conditioned, 12);
        assert_eq!(r.lhs, "1/6");
        assert_eq!(r.rhs, "1/9");
        assert!(r.holds && !r.equality);
    }

    #[test]
    fn rejects_bad_sets() {
        let err = LcolInstance::new(SimpleGraph::path(2), &[], &[], &[1], &[]).and_then(|i| lcol_check(&i, 100));
        assert!(matches!(err, Err(OracleError::Invalid(_))));
        let overlap = LcolInstance::new(SimpleGraph::path(3), &[0], &[], &[0], &[]).and_then(|i| lcol_check(&i, 100));
        assert!(matches!(overlap, Err(OracleError::Invalid(_))));
    }

    #[test]
    fn random_sweep_holds() {
        let reports = random_sweep(2024, 100).unwrap();
        assert!(reports.iter().all(|r| r.holds));
    }
}
