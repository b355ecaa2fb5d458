//! Glauber dynamics on proper colorings: the Metropolis chain, generic
//! `ρ`-local chains, trajectories of the even/odd imbalance.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coloring::{self, Coloring, ColoringError, ImbalanceClass, Rho};
use crate::graph::ColorGraph;
use crate::lattice::{Lattice, Parity};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DynamicsError {
    #[error(transparent)]
    Coloring(#[from] ColoringError),
    #[error("thinning interval must be positive")]
    ZeroThinning,
    #[error("move at step {step} changes {changed} vertices, more than rho |V|")]
    NotLocal { step: u64, changed: usize },
    #[error("move at step {step} produced an improper coloring")]
    Improper { step: u64 },
    #[error("this chain kind has no built-in update rule")]
    NoBuiltinRule,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum ChainKind {
    Metropolis { q: u8 },
    CustomLocal,
}

/// Site selection. Only `RandomSite` is the chain studied in the theory;
/// `SystematicSweep` is an engineering comparison and not part of any check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scan {
    RandomSite,
    SystematicSweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub kind: ChainKind,
    pub rho: Rho,
    pub seed: u64,
    /// Independent stream of the seeded generator; chain `i` uses stream `i`.
    pub stream: u64,
    pub scan: Scan,
}

impl ChainSpec {
    /// Metropolis on `volume` vertices, which is `1/|V|`-local.
    pub fn metropolis(q: u8, volume: usize, seed: u64) -> Self {
        Self {
            kind: ChainKind::Metropolis { q },
            rho: Rho::new(1, volume.max(1) as u64).expect("1/|V| is in (0, 1]"),
            seed,
            stream: 0,
            scan: Scan::RandomSite,
        }
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// One proposal: `(v, j)` uniform over `V × {0..q-1}`; `v` takes color `j`
/// when that stays proper. Returns the recolored vertex, if any.
pub fn metropolis_step<G: ColorGraph + ?Sized, R: Rng + ?Sized>(
    graph: &G,
    chi: &mut Coloring,
    rng: &mut R,
) -> Option<usize> {
    let q = chi.q() as usize;
    let draw = rng.gen_range(0..q * graph.vertex_count());
    propose(graph, chi, draw / q, (draw % q) as u8)
}

fn propose<G: ColorGraph + ?Sized>(graph: &G, chi: &mut Coloring, v: usize, j: u8) -> Option<usize> {
    if chi.get(v) == j || graph.neighbors(v).iter().any(|&u| chi.get(u) == j) {
        return None;
    }
    chi.set(v, j);
    Some(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub step: u64,
    pub imbalance: i64,
    pub zero_even: usize,
    pub zero_odd: usize,
    pub class: ImbalanceClass,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub seed: u64,
    pub stream: u64,
    pub chi0_id: String,
    pub thin: u64,
    pub records: Vec<Record>,
    pub last: Coloring,
}

impl Trajectory {
    pub const CSV_HEADER: &'static str = "step,imbalance,zero_even,zero_odd,class";

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.records.len() + 1));
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(out, "{},{},{},{},{}", r.step, r.imbalance, r.zero_even, r.zero_odd, r.class);
        }
        out
    }
}

struct Tracker<'a> {
    lattice: &'a Lattice,
    rho: Rho,
    zero_even: usize,
    zero_odd: usize,
}

impl<'a> Tracker<'a> {
    fn new(lattice: &'a Lattice, chi: &Coloring, rho: Rho) -> Self {
        let i = coloring::imbalance(lattice, chi);
        Self { lattice, rho, zero_even: i.zero_even, zero_odd: i.zero_odd }
    }

    fn update(&mut self, v: usize, old: u8, new: u8) {
        let slot = match self.lattice.parity(v) {
            Parity::Even => &mut self.zero_even,
            Parity::Odd => &mut self.zero_odd,
        };
        if old == 0 {
            *slot -= 1;
        }
        if new == 0 {
            *slot += 1;
        }
    }

    fn record(&self, step: u64) -> Record {
        let imbalance = self.zero_even as i64 - self.zero_odd as i64;
        Record {
            step,
            imbalance,
            zero_even: self.zero_even,
            zero_odd: self.zero_odd,
            class: ImbalanceClass::of(imbalance, self.rho, self.lattice.len()),
        }
    }
}

/// `steps` proposals of the chain from `chi0`, recording at step 0, every
/// `thin` steps, and at the end. Classes use `class_rho`.
pub fn run_chain(
    lattice: &Lattice,
    spec: &ChainSpec,
    chi0: &Coloring,
    chi0_id: &str,
    steps: u64,
    thin: u64,
    class_rho: Rho,
) -> Result<Trajectory, DynamicsError> {
    if thin == 0 {
        return Err(DynamicsError::ZeroThinning);
    }
    let q = match spec.kind {
        ChainKind::Metropolis { q } => q,
        ChainKind::CustomLocal => return Err(DynamicsError::NoBuiltinRule),
    };
    coloring::ensure_proper(lattice, chi0)?;
    if chi0.q() != q {
        return Err(ColoringError::BadColorCount(chi0.q()).into());
    }
    let mut rng = spec.rng();
    let mut chi = chi0.clone();
    let mut tracker = Tracker::new(lattice, &chi, class_rho);
    let mut records = vec![tracker.record(0)];
    let n = lattice.len() as u64;
    for step in 1..=steps {
        let (v, j) = match spec.scan {
            Scan::RandomSite => {
                let draw = rng.gen_range(0..q as u64 * n);
                ((draw / q as u64) as usize, (draw % q as u64) as u8)
            }
            Scan::SystematicSweep => (((step - 1) % n) as usize, rng.gen_range(0..q)),
        };
        let old = chi.get(v);
        if propose(lattice, &mut chi, v, j).is_some() {
            tracker.update(v, old, j);
        }
        if step % thin == 0 || step == steps {
            records.push(tracker.record(step));
        }
    }
    Ok(Trajectory { seed: spec.seed, stream: spec.stream, chi0_id: chi0_id.to_string(), thin, records, last: chi })
}

/// Runs a user-supplied update rule, checking each move for properness and
/// `ρ`-locality.
pub fn run_local_chain(
    lattice: &Lattice,
    spec: &ChainSpec,
    chi0: &Coloring,
    steps: u64,
    mut update: impl FnMut(&Coloring, &mut ChaCha8Rng) -> Coloring,
) -> Result<Coloring, DynamicsError> {
    coloring::ensure_proper(lattice, chi0)?;
    let mut rng = spec.rng();
    let mut chi = chi0.clone();
    for step in 1..=steps {
        let next = update(&chi, &mut rng);
        let changed = chi.hamming(&next);
        if !spec.rho.admits(changed, lattice.len()) {
            return Err(DynamicsError::NotLocal { step, changed });
        }
        if !coloring::is_proper(lattice, &next) {
            return Err(DynamicsError::Improper { step });
        }
        chi = next;
    }
    Ok(chi)
}

/// Hamming distance at most `ρ|V|`.
pub fn rho_locality_check(chi1: &Coloring, chi2: &Coloring, rho: Rho) -> bool {
    rho.admits(chi1.hamming(chi2), chi1.len())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingCheck {
    pub distance: usize,
    pub imbalance_change: u64,
    pub from: ImbalanceClass,
    pub to: ImbalanceClass,
    /// No `ρ`-local chain can make this move.
    pub blocked: bool,
    /// `|Δ imbalance| <= distance`.
    pub change_bounded: bool,
    /// A move from even-heavy to odd-heavy is blocked.
    pub implication_holds: bool,
}

pub fn crossing_blocked_check(lattice: &Lattice, chi1: &Coloring, chi2: &Coloring, rho: Rho) -> CrossingCheck {
    let i1 = coloring::imbalance(lattice, chi1).imbalance;
    let i2 = coloring::imbalance(lattice, chi2).imbalance;
    let from = ImbalanceClass::of(i1, rho, lattice.len());
    let to = ImbalanceClass::of(i2, rho, lattice.len());
    let distance = chi1.hamming(chi2);
    let blocked = !rho.admits(distance, lattice.len());
    let crossing = from == ImbalanceClass::EvenHeavy && to == ImbalanceClass::OddHeavy;
    CrossingCheck {
        distance,
        imbalance_change: i1.abs_diff(i2),
        from,
        to,
        blocked,
        change_bounded: i1.abs_diff(i2) <= distance as u64,
        implication_holds: !crossing || blocked,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub chains: usize,
    pub proposals_per_chain: u64,
    /// Chains whose recorded imbalance ever had the opposite sign to the start.
    pub chains_flipped: usize,
    pub sign_flip_fraction: f64,
    /// Recorded samples, over all chains, with sign opposite to the start.
    pub opposite_sign_sample_fraction: f64,
    /// Quantiles (0, 0.1, 0.25, 0.5, 0.75, 0.9, 1) of the final imbalance.
    pub final_imbalance_quantiles: Vec<i64>,
    /// Same quantiles over every recorded sample.
    pub pooled_imbalance_quantiles: Vec<i64>,
}

pub const QUANTILES: [f64; 7] = [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0];

/// Quantiles of integer samples at rank `round(p (n - 1))`.
pub fn quantiles(values: &[i64]) -> Vec<i64> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    QUANTILES.iter().map(|&p| v[((p * (v.len() - 1) as f64).round() as usize).min(v.len() - 1)]).collect()
}

pub fn summarize(trajectories: &[Trajectory]) -> EnsembleSummary {
    let mut flipped = 0;
    let mut opposite = 0usize;
    let mut samples = 0usize;
    let mut finals = Vec::new();
    let mut pooled = Vec::new();
    for t in trajectories {
        let start = t.records.first().map_or(0, |r| r.imbalance.signum());
        let mut any = false;
        for r in &t.records {
            samples += 1;
            pooled.push(r.imbalance);
            if start != 0 && r.imbalance.signum() == -start {
                opposite += 1;
                any = true;
            }
        }
        flipped += any as usize;
        finals.push(t.records.last().map_or(0, |r| r.imbalance));
    }
    let n = trajectories.len();
    EnsembleSummary {
        chains: n,
        proposals_per_chain: trajectories.first().and_then(|t| t.records.last()).map_or(0, |r| r.step),
        chains_flipped: flipped,
        sign_flip_fraction: if n == 0 { 0.0 } else { flipped as f64 / n as f64 },
        opposite_sign_sample_fraction: if samples == 0 { 0.0 } else { opposite as f64 / samples as f64 },
        final_imbalance_quantiles: quantiles(&finals),
        pooled_imbalance_quantiles: quantiles(&pooled),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloring::phase_coloring;
    use crate::lattice::LatticeSpec;
    use proptest::prelude::*;

    fn torus24() -> Lattice {
        Lattice::new(LatticeSpec::torus(2, 4)).unwrap()
    }

    #[test]
    fn zero_steps_has_initial_record_only() {
        let t = torus24();
        let chi = phase_coloring(&t, Parity::Even, 1);
        let spec = ChainSpec::metropolis(3, t.len(), 1);
        let traj = run_chain(&t, &spec, &chi, "even", 0, 10, Rho::DEFAULT).unwrap();
        assert_eq!(traj.records.len(), 1);
        assert_eq!(traj.records[0].imbalance, 8);
        assert_eq!(traj.records[0].class, ImbalanceClass::EvenHeavy);
    }

    #[test]
    fn same_seed_same_trajectory() {
        let t = torus24();
        let chi = phase_coloring(&t, Parity::Even, 1);
        let spec = ChainSpec::metropolis(3, t.len(), 42).with_stream(3);
        let a = run_chain(&t, &spec, &chi, "even", 5000, 7, Rho::DEFAULT).unwrap();
        let b = run_chain(&t, &spec, &chi, "even", 5000, 7, Rho::DEFAULT).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
        let other = run_chain(&t, &spec.with_stream(4), &chi, "even", 5000, 7, Rho::DEFAULT).unwrap();
        assert_ne!(a.records, other.records);
        assert!(a.records.windows(2).all(|w| w[0].step < w[1].step));
        assert_eq!(a.records.last().unwrap().step, 5000);
        assert!(a.to_csv().starts_with("step,imbalance,zero_even,zero_odd,class\n0,8,8,0,even_heavy\n"));
    }

    #[test]
    fn rejects_improper_start() {
        let t = torus24();
        let spec = ChainSpec::metropolis(3, t.len(), 1);
        let zeros = Coloring::zeros(3, t.len()).unwrap();
        assert!(matches!(
            run_chain(&t, &spec, &zeros, "z", 10, 1, Rho::DEFAULT),
            Err(DynamicsError::Coloring(ColoringError::Improper(_, _)))
        ));
    }

    #[test]
    fn locality_examples() {
        let t = torus24();
        let chi = phase_coloring(&t, Parity::Even, 1);
        let swapped = chi.permute_colors(&[0, 2, 1]);
        assert_eq!(chi.hamming(&swapped), 8);
        assert!(!rho_locality_check(&chi, &swapped, Rho::DEFAULT));
        assert!(rho_locality_check(&chi, &chi, Rho::new(1, 1000).unwrap()));
        let mut moved = chi.clone();
        moved.set(t.vertex_at(&[1, 0]).unwrap(), 2);
        assert!(rho_locality_check(&chi, &moved, Rho::new(1, 16).unwrap()));
        // Up to 3 changes allowed at 0.22 · 16 = 3.52.
        let three = Coloring::from_fn(3, 16, |v| if v < 3 { (chi.get(v) + 1) % 3 } else { chi.get(v) }).unwrap();
        assert!(rho_locality_check(&chi, &three, Rho::DEFAULT));
        let four = Coloring::from_fn(3, 16, |v| if v < 4 { (chi.get(v) + 1) % 3 } else { chi.get(v) }).unwrap();
        assert!(!rho_locality_check(&chi, &four, Rho::DEFAULT));
    }

    #[test]
    fn crossing_examples() {
        let t = torus24();
        let even = phase_coloring(&t, Parity::Even, 1);
        let odd = phase_coloring(&t, Parity::Odd, 1);
        let c = crossing_blocked_check(&t, &even, &odd, Rho::DEFAULT);
        assert!(c.blocked && c.implication_holds && c.change_bounded);
        assert_eq!(c.imbalance_change, 16);
        let global = crossing_blocked_check(&t, &even, &odd, Rho::new(1, 1).unwrap());
        assert!(!global.blocked);
        assert_eq!(global.from, ImbalanceClass::Balanced);
    }

    #[test]
    fn custom_local_chain_enforces_locality() {
        let t = torus24();
        let chi = phase_coloring(&t, Parity::Even, 1);
        let mut spec = ChainSpec::metropolis(3, t.len(), 9);
        spec.kind = ChainKind::CustomLocal;
        spec.rho = Rho::new(1, 8).unwrap();
        let ok = run_local_chain(&t, &spec, &chi, 100, |c, rng| {
            let mut next = c.clone();
            metropolis_step(&t, &mut next, rng);
            next
        });
        assert!(ok.is_ok());
        let err = run_local_chain(&t, &spec, &chi, 1, |c, _| c.permute_colors(&[0, 2, 1]));
        assert_eq!(err, Err(DynamicsError::NotLocal { step: 1, changed: 8 }));
    }

    #[test]
    fn quantiles_nearest_rank() {
        assert_eq!(quantiles(&[5, 1, 3]), vec![1, 1, 3, 3, 5, 5, 5]);
        assert!(quantiles(&[]).is_empty());
    }

    proptest! {
        #[test]
        fn metropolis_preserves_properness(seed in any::<u64>()) {
            let t = torus24();
            let mut chi = phase_coloring(&t, Parity::Even, 1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..500 {
                let before = coloring::imbalance(&t, &chi).imbalance;
                metropolis_step(&t, &mut chi, &mut rng);
                prop_assert!(coloring::is_proper(&t, &chi));
                prop_assert!(before.abs_diff(coloring::imbalance(&t, &chi).imbalance) <= 1);
            }
        }

        #[test]
        fn tracked_imbalance_matches_recount(seed in any::<u64>(), sweep in any::<bool>()) {
            let t = torus24();
            let chi = phase_coloring(&t, Parity::Odd, 2);
            let mut spec = ChainSpec::metropolis(3, t.len(), seed);
            if sweep {
                spec.scan = Scan::SystematicSweep;
            }
            let traj = run_chain(&t, &spec, &chi, "odd", 300, 300, Rho::DEFAULT).unwrap();
            let last = traj.records.last().unwrap();
            prop_assert_eq!(last.imbalance, coloring::imbalance(&t, &traj.last).imbalance);
            prop_assert!(coloring::is_proper(&t, &traj.last));
        }
    }
}
