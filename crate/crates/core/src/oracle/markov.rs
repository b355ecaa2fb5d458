//! Exact Metropolis transition matrices on enumerated state spaces, exact
//! total-variation mixing times, and the conductance lower bound.

use std::collections::{HashMap, VecDeque};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::OracleError;
use crate::coloring::{self, Coloring, ImbalanceClass, Rho};
use crate::dynamics::{ChainKind, ChainSpec};
use crate::graph::ColorGraph;
use crate::lattice::Lattice;

pub const DEFAULT_MATRIX_CAP: usize = 1_000_000;
/// Above this many states the mixing time is iterated in `f64`.
pub const EXACT_STATE_LIMIT: usize = 5_000;
pub const DEFAULT_MAX_STEPS: u64 = 100_000;
/// Per-step error budget of the floating-point iteration.
pub const FLOAT_ERROR_BUDGET: f64 = 1e-12;

/// `P(i, j) = rows[i][j] / denom`, sparse, diagonal included.
#[derive(Clone, Debug)]
pub struct TransitionMatrix {
    pub q: u8,
    pub denom: u64,
    pub states: Vec<Coloring>,
    pub rows: Vec<Vec<(usize, u64)>>,
    index: HashMap<Coloring, usize>,
}

impl TransitionMatrix {
    /// The Metropolis chain: each `(v, j)` proposed with probability
    /// `1/(q|V|)`, accepted when the result is proper. `states` must be
    /// closed under accepted moves.
    pub fn metropolis<G: ColorGraph + ?Sized>(
        graph: &G,
        q: u8,
        states: Vec<Coloring>,
        cap: usize,
    ) -> Result<Self, OracleError> {
        if states.len() > cap {
            return Err(OracleError::CapExceeded { cap: cap as u64, at_least: states.len() as u64 });
        }
        let n = graph.vertex_count();
        let denom = q as u64 * n as u64;
        let index: HashMap<Coloring, usize> = states.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
        if index.len() != states.len() {
            return Err(OracleError::Invalid("duplicate states".into()));
        }
        let rows: Result<Vec<Vec<(usize, u64)>>, OracleError> = states
            .par_iter()
            .enumerate()
            .map(|(i, chi)| {
                let mut row = Vec::new();
                let mut moved = 0u64;
                let mut next = chi.clone();
                for v in 0..n {
                    let old = chi.get(v);
                    for j in 0..q {
                        if j == old || graph.neighbors(v).iter().any(|&u| chi.get(u) == j) {
                            continue;
                        }
                        next.set(v, j);
                        let k = *index
                            .get(&next)
                            .ok_or_else(|| OracleError::Invalid("state space not closed under moves".into()))?;
                        row.push((k, 1));
                        moved += 1;
                    }
                    next.set(v, old);
                }
                row.push((i, denom - moved));
                row.sort_unstable();
                Ok(row)
            })
            .collect();
        Ok(Self { q, denom, states, rows: rows?, index })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, chi: &Coloring) -> Option<usize> {
        self.index.get(chi).copied()
    }

    /// Numerator of `P(i, j)`.
    pub fn entry(&self, i: usize, j: usize) -> u64 {
        self.rows[i].binary_search_by_key(&j, |&(k, _)| k).map(|p| self.rows[i][p].1).unwrap_or(0)
    }

    pub fn rows_stochastic(&self) -> bool {
        self.rows.iter().all(|r| r.iter().map(|&(_, x)| x).sum::<u64>() == self.denom)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.len()).all(|i| self.rows[i].iter().all(|&(j, x)| self.entry(j, i) == x))
    }

    /// Uniform `π` satisfies `πP = π` exactly: every column sums to `denom`.
    pub fn uniform_stationary(&self) -> bool {
        let mut cols = vec![0u64; self.len()];
        for row in &self.rows {
            for &(j, x) in row {
                cols[j] += x;
            }
        }
        cols.iter().all(|&c| c == self.denom)
    }

    /// The transition graph is connected.
    pub fn is_irreducible(&self) -> bool {
        if self.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for &(j, _) in &self.rows[i] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count == self.len()
    }

    /// Off-diagonal transitions, each once per direction.
    pub fn moves(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().filter(move |&&(j, _)| j != i).map(move |&(j, _)| (i, j)))
    }
}

/// The matrix of `chain` on `states`.
pub fn transition_matrix<G: ColorGraph + ?Sized>(
    graph: &G,
    chain: &ChainSpec,
    states: Vec<Coloring>,
    cap: usize,
) -> Result<TransitionMatrix, OracleError> {
    match chain.kind {
        ChainKind::Metropolis { q } => TransitionMatrix::metropolis(graph, q, states, cap),
        ChainKind::CustomLocal => Err(OracleError::Invalid("only the Metropolis chain has a built-in matrix".into())),
    }
}

/// Orbit representative of every state under lattice automorphisms and
/// color permutations; `None` when the group exceeds `cap`.
pub fn orbit_representatives(lattice: &Lattice, matrix: &TransitionMatrix, cap: usize) -> Option<Vec<usize>> {
    let autos = lattice.automorphisms(cap)?;
    let color_perms = permutations(matrix.q);
    let mut orbit = vec![usize::MAX; matrix.len()];
    let mut reps = Vec::new();
    for i in 0..matrix.len() {
        if orbit[i] != usize::MAX {
            continue;
        }
        reps.push(i);
        for map in &autos {
            let moved = matrix.states[i].relabel_vertices(map);
            for perm in &color_perms {
                let image = moved.permute_colors(perm);
                if let Some(j) = matrix.index_of(&image) {
                    orbit[j] = i;
                }
            }
        }
    }
    Some(reps)
}

fn permutations(q: u8) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    for c in 0..q {
        let mut next = Vec::new();
        for p in &out {
            for pos in 0..=p.len() {
                let mut p2 = p.clone();
                p2.insert(pos, c);
                next.push(p2);
            }
        }
        out = next;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingMode {
    Exact,
    Float,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    /// Smallest `t0` with `d(t) <= 1/e` for every `t > t0`.
    pub tau: u64,
    pub worst_start: usize,
    pub mode: MixingMode,
    pub states: usize,
    pub starts_checked: usize,
    /// `d(τ + 1)`, the first distance at or below `1/e`.
    pub distance_at_crossing: f64,
    pub error_budget: Option<f64>,
}

/// Rational bounds `lo < e < hi` from the first `k` terms of `Σ 1/i!`.
fn e_bounds(k: u32) -> ((BigUint, BigUint), (BigUint, BigUint)) {
    let mut num = BigUint::zero();
    let mut fact = BigUint::one();
    // Σ_{i<=k} k!/i! over k!.
    let mut term = BigUint::one();
    for i in (1..=k).rev() {
        num += &term;
        term *= i;
    }
    num += &term;
    fact *= &term;
    let lo = (num.clone(), fact.clone());
    // e < lo + 1/(k!·k)
    let hi = (num * k + 1u32, fact * k);
    (lo, hi)
}

/// `excess / total <= 1/e`, decided exactly.
fn at_most_inv_e(excess: &BigUint, total: &BigUint) -> bool {
    let mut k = 24;
    loop {
        let ((lo_n, lo_d), (hi_n, hi_d)) = e_bounds(k);
        if excess * &hi_n <= total * &hi_d {
            return true;
        }
        if excess * &lo_n > total * &lo_d {
            return false;
        }
        k *= 2;
    }
}

/// First `t >= 1` with TV distance from `start` at most `1/e`.
fn crossing_exact(m: &TransitionMatrix, start: usize, max_steps: u64) -> Result<(u64, f64), OracleError> {
    let n = m.len();
    let nn = BigUint::from(n);
    let mut dist = vec![BigUint::zero(); n];
    dist[start] = BigUint::one();
    let mut scale = BigUint::one();
    for t in 1..=max_steps {
        let mut next = vec![BigUint::zero(); n];
        for (i, a) in dist.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for &(j, x) in &m.rows[i] {
                next[j] += a * x;
            }
        }
        dist = next;
        scale *= m.denom;
        // TV = Σ (N a_y - D)^+ / (N D).
        let mut excess = BigUint::zero();
        for a in &dist {
            let scaled = a * &nn;
            if scaled > scale {
                excess += scaled - &scale;
            }
        }
        let total = &scale * &nn;
        if at_most_inv_e(&excess, &total) {
            let tv = BigRational::new(excess.into(), total.into()).to_f64().unwrap_or(f64::NAN);
            return Ok((t, tv));
        }
    }
    Err(OracleError::NoConvergence(max_steps))
}

fn crossing_float(m: &TransitionMatrix, start: usize, max_steps: u64) -> Result<(u64, f64), OracleError> {
    let n = m.len();
    let inv_n = 1.0 / n as f64;
    let denom = m.denom as f64;
    let threshold = (-1.0f64).exp();
    let mut dist = vec![0.0f64; n];
    dist[start] = 1.0;
    for t in 1..=max_steps {
        let mut next = vec![0.0f64; n];
        for (i, &a) in dist.iter().enumerate() {
            if a != 0.0 {
                for &(j, x) in &m.rows[i] {
                    next[j] += a * x as f64 / denom;
                }
            }
        }
        dist = next;
        let tv: f64 = dist.iter().map(|&a| (a - inv_n).max(0.0)).sum();
        if tv <= threshold {
            return Ok((t, tv));
        }
    }
    Err(OracleError::NoConvergence(max_steps))
}

/// Exact mixing time at `ε = 1/e` from the listed starts (every state when
/// `starts` is `None`). Distance to uniform from a fixed start never
/// increases, so the first crossing settles `τ`.
pub fn tv_mixing_time(
    m: &TransitionMatrix,
    starts: Option<&[usize]>,
    max_steps: u64,
) -> Result<MixingReport, OracleError> {
    if m.is_empty() {
        return Err(OracleError::Invalid("empty state space".into()));
    }
    let all: Vec<usize>;
    let starts = match starts {
        Some(s) => s,
        None => {
            all = (0..m.len()).collect();
            &all
        }
    };
    let mode = if m.len() <= EXACT_STATE_LIMIT { MixingMode::Exact } else { MixingMode::Float };
    let results: Vec<Result<(u64, f64), OracleError>> = starts
        .par_iter()
        .map(|&s| match mode {
            MixingMode::Exact => crossing_exact(m, s, max_steps),
            MixingMode::Float => crossing_float(m, s, max_steps),
        })
        .collect();
    let mut worst = (0u64, 0usize, 0.0f64);
    for (&s, r) in starts.iter().zip(results) {
        let (t, tv) = r?;
        if t > worst.0 {
            worst = (t, s, tv);
        }
    }
    Ok(MixingReport {
        tau: worst.0 - 1,
        worst_start: worst.1,
        mode,
        states: m.len(),
        starts_checked: starts.len(),
        distance_at_crossing: worst.2,
        error_budget: (mode == MixingMode::Float).then_some(FLOAT_ERROR_BUDGET),
    })
}

/// Class of every state on a torus.
pub fn classes(lattice: &Lattice, m: &TransitionMatrix, rho: Rho) -> Vec<ImbalanceClass> {
    m.states.iter().map(|c| coloring::classify(lattice, c, rho)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConductanceReport {
    pub states: usize,
    pub even_heavy: usize,
    pub odd_heavy: usize,
    pub balanced: usize,
    pub pi_a: String,
    pub pi_m: String,
    /// `π(A) / (8 π(M))`; absent when `M` is empty.
    pub bound: Option<String>,
    pub bound_f64: f64,
    pub bound_infinite: bool,
    pub pi_a_at_most_half: bool,
    pub classes_symmetric: bool,
    pub tau_exact: Option<u64>,
    pub bound_holds: Option<bool>,
}

/// `τ >= π(A)/(8π(M))` with `A` the even-heavy class and `M` the balanced one.
pub fn conductance_bound(classes: &[ImbalanceClass], tau_exact: Option<u64>) -> ConductanceReport {
    let n = classes.len();
    let count = |k| classes.iter().filter(|&&c| c == k).count();
    let a = count(ImbalanceClass::EvenHeavy);
    let o = count(ImbalanceClass::OddHeavy);
    let b = count(ImbalanceClass::Balanced);
    let rat = |x: usize, y: usize| BigRational::new(x.into(), y.into());
    let bound = (b > 0).then(|| rat(a, 8 * b));
    ConductanceReport {
        states: n,
        even_heavy: a,
        odd_heavy: o,
        balanced: b,
        pi_a: rat(a, n).to_string(),
        pi_m: rat(b, n).to_string(),
        bound: bound.as_ref().map(|r| r.to_string()),
        bound_f64: bound.as_ref().map_or(f64::INFINITY, |r| r.to_f64().unwrap_or(f64::NAN)),
        bound_infinite: b == 0,
        pi_a_at_most_half: 2 * a <= n,
        classes_symmetric: a == o,
        tau_exact,
        // τ >= a / (8b)  ⟺  8bτ >= a.
        bound_holds: tau_exact.map(|t| b == 0 && a == 0 || b > 0 && 8 * b as u128 * t as u128 >= a as u128),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockedCutReport {
    pub moves: usize,
    pub even_to_odd: usize,
    pub max_imbalance_change: u64,
}

impl BlockedCutReport {
    pub fn holds(&self) -> bool {
        self.even_to_odd == 0 && self.max_imbalance_change <= 1
    }
}

/// Scans every single-site move for a jump between the heavy classes.
pub fn blocked_cut_sweep(lattice: &Lattice, m: &TransitionMatrix, rho: Rho) -> BlockedCutReport {
    let imb: Vec<i64> = m.states.iter().map(|c| coloring::imbalance(lattice, c).imbalance).collect();
    let cls: Vec<ImbalanceClass> = imb.iter().map(|&k| ImbalanceClass::of(k, rho, lattice.len())).collect();
    let mut report = BlockedCutReport { moves: 0, even_to_odd: 0, max_imbalance_change: 0 };
    for (i, j) in m.moves() {
        report.moves += 1;
        let pair = (cls[i], cls[j]);
        if pair == (ImbalanceClass::EvenHeavy, ImbalanceClass::OddHeavy)
            || pair == (ImbalanceClass::OddHeavy, ImbalanceClass::EvenHeavy)
        {
            report.even_to_odd += 1;
        }
        report.max_imbalance_change = report.max_imbalance_change.max(imb[i].abs_diff(imb[j]));
    }
    report
}
