//! Shannon and binary entropy, per-site topological entropy of box colorings,
//! and the exact law of a box coloring restricted to a smaller centered box.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coloring::{BoundaryCondition, Coloring};
use crate::graph::ColorGraph;
use crate::lattice::{Lattice, LatticeError, LatticeSpec, Parity};
use crate::oracle::enumerate::enumerate_colorings;
use crate::oracle::transfer::{count_layered, grid_graph, LayerPlan, DEFAULT_STATE_CAP};
use crate::oracle::OracleError;

#[derive(Debug, Error)]
pub enum EntropyError {
    #[error("{0} is outside [0, 1]")]
    Domain(f64),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Finite law with exact rational probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<K: Ord> {
    probs: BTreeMap<K, BigRational>,
}

impl<K: Ord> Distribution<K> {
    pub fn new(probs: BTreeMap<K, BigRational>) -> Result<Self, EntropyError> {
        if probs.values().any(|p| p.is_negative()) {
            return Err(EntropyError::InvalidDistribution("negative probability".into()));
        }
        let total: BigRational = probs.values().cloned().sum();
        if !total.is_one() {
            return Err(EntropyError::InvalidDistribution(format!("total mass {total}")));
        }
        Ok(Self { probs })
    }

    /// Normalized counts. Zero counts stay in the map with probability 0.
    pub fn from_counts(counts: BTreeMap<K, BigUint>) -> Result<Self, EntropyError> {
        let total: BigUint = counts.values().sum();
        if total.is_zero() {
            return Err(EntropyError::InvalidDistribution("all counts are zero".into()));
        }
        let total = BigInt::from(total);
        let probs = counts.into_iter().map(|(k, c)| (k, BigRational::new(BigInt::from(c), total.clone()))).collect();
        Self::new(probs)
    }

    pub fn probabilities(&self) -> &BTreeMap<K, BigRational> {
        &self.probs
    }

    pub fn support_len(&self) -> usize {
        self.probs.values().filter(|p| !p.is_zero()).count()
    }

    pub fn max_probability(&self) -> BigRational {
        self.probs.values().max().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn is_uniform_on_support(&self) -> bool {
        let mut nz = self.probs.values().filter(|p| !p.is_zero());
        match nz.next() {
            Some(first) => nz.all(|p| p == first),
            None => true,
        }
    }
}

/// Natural log of a positive integer of any size.
pub fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().unwrap_or(f64::NAN).ln() + shift as f64 * std::f64::consts::LN_2
}

fn ln_rational(p: &BigRational) -> f64 {
    let num = p.numer().magnitude();
    let den = p.denom().magnitude();
    ln_big(num) - ln_big(den)
}

/// `-Σ p ln p` in nats, with `0 ln 0 = 0`.
pub fn shannon_entropy<K: Ord>(dist: &Distribution<K>) -> f64 {
    dist.probs.values().filter(|p| !p.is_zero()).map(|p| -p.to_f64().unwrap_or(0.0) * ln_rational(p)).sum()
}

/// `H(x) = -x log2 x - (1-x) log2 (1-x)` in bits.
pub fn binary_entropy(x: f64) -> Result<f64, EntropyError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(EntropyError::Domain(x));
    }
    let term = |p: f64| if p == 0.0 { 0.0 } else { -p * p.log2() };
    Ok(term(x) + term(1.0 - x))
}

/// Root of `H(ρ) + ρ = 1` on `(0, 1/2)` by bisection.
pub fn rho_critical(tolerance: f64) -> f64 {
    let f = |r: f64| binary_entropy(r).expect("bisection stays in [0, 1]") + r - 1.0;
    let (mut lo, mut hi) = (1e-9, 0.5);
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologicalEstimate {
    pub d: usize,
    pub widths: Vec<usize>,
    pub counts: Vec<String>,
    /// `ln |C_3(w^d box)| / w^d`.
    pub per_site: Vec<f64>,
    /// Aitken delta-squared iterates of `per_site` over consecutive triples.
    pub aitken: Vec<f64>,
    /// Distance between the last two Aitken iterates.
    pub spread: Option<f64>,
    /// For each width `w >= 2`: the `d`-th mixed difference of `ln Z` over
    /// the boxes with every side `w-1` or `w`. Surface and corner terms
    /// cancel, leaving the bulk value per site.
    pub differences: Vec<f64>,
    /// The last mixed difference.
    pub estimate: Option<f64>,
    pub base: String,
}

fn aitken(seq: &[f64]) -> Vec<f64> {
    seq.windows(3)
        .map(|w| {
            let denom = w[2] - 2.0 * w[1] + w[0];
            if denom.abs() < 1e-300 {
                w[2]
            } else {
                w[2] - (w[2] - w[1]).powi(2) / denom
            }
        })
        .collect()
}

struct LogCounts {
    cap: usize,
    cache: HashMap<Vec<usize>, (BigUint, f64)>,
}

impl LogCounts {
    fn get(&mut self, sides: &[usize]) -> Result<&(BigUint, f64), EntropyError> {
        if !self.cache.contains_key(sides) {
            let (graph, plan) = grid_graph(sides);
            let masks = vec![0b111; graph.vertex_count()];
            let count = count_layered(&graph, &plan, 3, &masks, self.cap)?;
            let ln = ln_big(&count);
            self.cache.insert(sides.to_vec(), (count, ln));
        }
        Ok(&self.cache[sides])
    }
}

/// Per-site log-counts and mixed differences of free-boundary boxes, for
/// each `w` in `widths`.
pub fn topological_entropy_estimate(
    d: usize,
    widths: &[usize],
    cap: usize,
) -> Result<TopologicalEstimate, EntropyError> {
    if d == 0 || widths.contains(&0) {
        return Err(EntropyError::Invalid("d and widths must be positive".into()));
    }
    let mut logs = LogCounts { cap, cache: HashMap::new() };
    let mut counts = Vec::new();
    let mut per_site = Vec::new();
    let mut differences = Vec::new();
    for &w in widths {
        let (count, ln) = logs.get(&vec![w; d])?.clone();
        per_site.push(ln / w.pow(d as u32) as f64);
        counts.push(count.to_string());
        if w < 2 {
            continue;
        }
        let mut diff = 0.0;
        for corner in 0u32..(1 << d) {
            let sides: Vec<usize> = (0..d).map(|i| w - 1 + (corner >> i & 1) as usize).collect();
            let sign = if (d as u32 - corner.count_ones()).is_multiple_of(2) { 1.0 } else { -1.0 };
            diff += sign * logs.get(&sides)?.1;
        }
        differences.push(diff);
    }
    let aitken = aitken(&per_site);
    let spread = match aitken.len() {
        n if n >= 2 => Some((aitken[n - 1] - aitken[n - 2]).abs()),
        _ => None,
    };
    Ok(TopologicalEstimate {
        d,
        widths: widths.to_vec(),
        counts,
        per_site,
        aitken,
        spread,
        estimate: differences.last().copied(),
        differences,
        base: "nats".into(),
    })
}

/// Reflects a coordinate into `[-n, n]` about the box faces.
pub fn fold_coordinate(mut c: i64, n: i64) -> i64 {
    loop {
        if c > n {
            c = 2 * n - c;
        } else if c < -n {
            c = -2 * n - c;
        } else {
            return c;
        }
    }
}

/// True when folding maps every edge of `Λ_{n+margin}` onto an edge of
/// `Λ_n`, so composing with the fold extends any coloring of `Λ_n`.
pub fn fold_certificate(d: usize, n: usize, margin: usize) -> Result<bool, EntropyError> {
    if n == 0 {
        return Ok(false);
    }
    let big = Lattice::new(LatticeSpec::cube(d, n + margin))?;
    let small = Lattice::new(LatticeSpec::cube(d, n))?;
    let image: Vec<Option<usize>> = (0..big.len())
        .map(|v| {
            let p: Vec<i64> = big.coords(v).iter().map(|&c| fold_coordinate(c, n as i64)).collect();
            small.vertex_at(&p)
        })
        .collect();
    Ok(big.edges().iter().all(|&(u, v)| match (image[u], image[v]) {
        (Some(a), Some(b)) => small.neighbors(a).contains(&b),
        _ => false,
    }))
}

/// Exact extension counts `N(τ)` over every coloring `τ` of `Λ_n`, for the
/// uniform coloring of `W_m` whose outside agrees with `0` on odd and `1`
/// on even vertices.
#[derive(Clone, Debug)]
pub struct Restriction {
    pub d: usize,
    pub n: usize,
    pub m: usize,
    pub inner: Lattice,
    pub patterns: Vec<Coloring>,
    /// Whether each pattern extends to `Λ_{n+2}`.
    pub extendable: Vec<bool>,
    pub counts: Vec<BigUint>,
    pub support: BigUint,
}

impl Restriction {
    pub fn distribution(&self) -> Result<Distribution<Vec<u8>>, EntropyError> {
        let counts = self.patterns.iter().zip(&self.counts).map(|(t, c)| (t.colors(), c.clone())).collect();
        Distribution::from_counts(counts)
    }

    pub fn extendable_count(&self) -> usize {
        self.extendable.iter().filter(|&&e| e).count()
    }
}

fn pinned_count(
    outer: &Lattice,
    base: &[u32],
    inner: &Lattice,
    tau: &Coloring,
    cap: usize,
) -> Result<BigUint, EntropyError> {
    let mut masks = base.to_vec();
    for u in 0..inner.len() {
        let v = outer
            .vertex_at(inner.coords(u))
            .ok_or_else(|| EntropyError::Invalid("inner box not contained in outer region".into()))?;
        masks[v] &= 1 << tau.get(u);
    }
    Ok(count_layered(outer, &LayerPlan::for_lattice(outer), 3, &masks, cap)?)
}

/// Masks on `W_m` from the fixed outside: every vertex of `W_m` with a
/// neighbor outside is odd and sees only even outside vertices, colored 1.
fn outside_masks(w: &Lattice) -> Result<Vec<u32>, EntropyError> {
    let full = 2 * w.dim();
    (0..w.len())
        .map(|v| {
            if w.degree(v) == full {
                Ok(0b111)
            } else if w.parity(v) == Parity::Odd {
                Ok(0b101)
            } else {
                Err(EntropyError::Invalid(format!("even vertex {v} on the region boundary")))
            }
        })
        .collect()
}

pub fn restriction_distribution(d: usize, n: usize, m: usize, cap: u64) -> Result<Restriction, EntropyError> {
    if m <= n || n == 0 {
        return Err(EntropyError::Invalid(format!("need 0 < n < m, got n={n} m={m}")));
    }
    let inner = Lattice::new(LatticeSpec::cube(d, n))?;
    let region = Lattice::new(LatticeSpec::extended_box(d, m))?;
    let ext = Lattice::new(LatticeSpec::cube(d, n + 2))?;
    let patterns = enumerate_colorings(&inner, 3, &BoundaryCondition::None, cap)?;
    let base = outside_masks(&region)?;
    let free = vec![0b111; ext.len()];
    let state_cap = DEFAULT_STATE_CAP;
    let rows: Vec<Result<(bool, BigUint), EntropyError>> = patterns
        .par_iter()
        .map(|tau| {
            let e = pinned_count(&ext, &free, &inner, tau, state_cap)?;
            let c = pinned_count(&region, &base, &inner, tau, state_cap)?;
            Ok((!e.is_zero(), c))
        })
        .collect();
    let mut extendable = Vec::with_capacity(rows.len());
    let mut counts = Vec::with_capacity(rows.len());
    for r in rows {
        let (e, c) = r?;
        extendable.push(e);
        counts.push(c);
    }
    let support = counts.iter().sum();
    Ok(Restriction { d, n, m, inner, patterns, extendable, counts, support })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub d: usize,
    pub n: usize,
    pub m: usize,
    pub base: String,
    pub box_colorings: usize,
    /// Colorings of `Λ_n` extending to `Λ_{n+2}`.
    pub extendable: usize,
    pub fold_certificate: bool,
    pub boundary_size: usize,
    pub support: String,
    pub sums_to_one: bool,
    pub support_extendable: bool,
    pub boundary_patterns: usize,
    pub grouping_consistent: bool,
    pub entropy: f64,
    pub entropy_lower_bound: f64,
    pub entropy_bound_holds: bool,
    pub max_probability: String,
    pub max_probability_bound: String,
    pub max_probability_bound_holds: bool,
    pub c_star: usize,
    pub c_star_mass_bound_holds: bool,
    /// `N(τ0) 3^b >= N(τ)` for all `τ0 ∈ C_*`, all `τ`.
    pub pinned_lower_bound_holds: bool,
}

impl GapReport {
    pub fn all_hold(&self) -> bool {
        self.sums_to_one
            && self.support_extendable
            && self.grouping_consistent
            && self.entropy_bound_holds
            && self.max_probability_bound_holds
            && self.c_star_mass_bound_holds
            && self.pinned_lower_bound_holds
    }
}

pub fn max_entropy_gap_check(d: usize, n: usize, m: usize, cap: u64) -> Result<GapReport, EntropyError> {
    let r = restriction_distribution(d, n, m, cap)?;
    let dist = r.distribution()?;
    let inner = &r.inner;
    let boundary = inner.outer_boundary();
    let b = boundary.len() as u32;
    let prime = r.extendable_count();
    let three_b = BigUint::from(3u8).pow(b);

    let sums_to_one = dist.probabilities().values().cloned().sum::<BigRational>().is_one();
    let support_extendable = r.counts.iter().zip(&r.extendable).all(|(c, &e)| c.is_zero() || e);

    let mut groups: BTreeMap<Vec<u8>, &BigUint> = BTreeMap::new();
    let mut grouping_consistent = true;
    for (tau, c) in r.patterns.iter().zip(&r.counts) {
        let key: Vec<u8> = boundary.iter().map(|v| tau.get(v)).collect();
        match groups.get(&key) {
            Some(&prev) => grouping_consistent &= prev == c,
            None => {
                groups.insert(key, c);
            }
        }
    }

    let entropy = shannon_entropy(&dist);
    let entropy_lower_bound = (prime as f64).ln() - 2.0 * b as f64 * 3f64.ln();
    let max_count = r.counts.iter().max().cloned().unwrap_or_default();
    let bound_scaled = &three_b * &three_b * &r.support;
    let max_probability_bound_holds = &max_count * BigUint::from(prime) <= bound_scaled;
    let max_probability_bound = BigRational::new(BigInt::from(&three_b * &three_b), BigInt::from(prime.max(1)));

    let in_c_star = |tau: &Coloring| {
        boundary.iter().all(|v| match inner.parity(v) {
            Parity::Odd => tau.get(v) == 0,
            Parity::Even => tau.get(v) == 1,
        })
    };
    let star: Vec<usize> = (0..r.patterns.len()).filter(|&i| r.extendable[i] && in_c_star(&r.patterns[i])).collect();
    let c_star = star.len();
    let c_star_mass_bound_holds = BigUint::from(c_star) * &three_b >= BigUint::from(prime);
    let pinned_lower_bound_holds = star.iter().all(|&i| &r.counts[i] * &three_b >= max_count);

    Ok(GapReport {
        d,
        n,
        m,
        base: "nats".into(),
        box_colorings: r.patterns.len(),
        extendable: prime,
        fold_certificate: fold_certificate(d, n, 2 * n)?,
        boundary_size: b as usize,
        support: r.support.to_string(),
        sums_to_one,
        support_extendable,
        boundary_patterns: groups.len(),
        grouping_consistent,
        entropy,
        entropy_lower_bound,
        entropy_bound_holds: entropy >= entropy_lower_bound,
        max_probability: dist.max_probability().to_string(),
        max_probability_bound: max_probability_bound.to_string(),
        max_probability_bound_holds,
        c_star,
        c_star_mass_bound_holds,
        pinned_lower_bound_holds,
    })
}
