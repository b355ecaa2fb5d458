use std::collections::BTreeMap;

use num_traits::One;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use tricolor::coloring::{self, phase_coloring, BoundaryCondition, Coloring};
use tricolor::cutset::{build_box_cutset, build_torus_cutsets, CutsetRecord};
use tricolor::dynamics::{run_chain, summarize, ChainSpec, Trajectory};
use tricolor::entropy::{
    binary_entropy, max_entropy_gap_check, rho_critical, topological_entropy_estimate, EntropyError,
};
use tricolor::lattice::{Lattice, ShiftDirection};
use tricolor::oracle::enumerate::enumerate_colorings;
use tricolor::oracle::influence::influence_ratio;
use tricolor::oracle::markov::{
    blocked_cut_sweep, classes, conductance_bound, orbit_representatives, transition_matrix, tv_mixing_time,
    TransitionMatrix,
};
use tricolor::oracle::transfer::count_colorings_capped;
use tricolor::oracle::OracleError;
use tricolor::peierls::{flow_out_total, reconstruct, ShiftFamily};
use tricolor::{ImbalanceClass, Parity};

use crate::config::{BoundaryArg, RunConfig, StartArg};
use crate::{write_file, CliError, CommandKind, Outcome};

/// Largest symmetry group used for orbit reduction.
const AUTOMORPHISM_CAP: usize = 1 << 16;

fn oracle(e: OracleError) -> CliError {
    if e.is_refusal() {
        CliError::Refusal(e.to_string())
    } else {
        CliError::Config(e.to_string())
    }
}

fn entropy_err(e: EntropyError) -> CliError {
    match e {
        EntropyError::Oracle(o) => oracle(o),
        other => CliError::Config(other.to_string()),
    }
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

fn to_value<T: Serialize>(x: &T) -> Result<Value, CliError> {
    serde_json::to_value(x).map_err(internal)
}

pub fn dispatch(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        CommandKind::Enumerate => enumerate(cfg),
        CommandKind::Sample | CommandKind::TorpidDemo => sample(cfg),
        CommandKind::Mixing => mixing(cfg, true),
        CommandKind::Conductance => mixing(cfg, false),
        CommandKind::Influence => influence(cfg),
        CommandKind::FlowCheck => flow_check(cfg),
        CommandKind::Cutsets => cutsets(cfg),
        CommandKind::Entropy => entropy(cfg),
    }
}

fn v0_vertex(cfg: &RunConfig, lattice: &Lattice) -> Result<usize, CliError> {
    let coords = cfg.v0.clone().unwrap_or_else(|| vec![0; lattice.dim()]);
    lattice.vertex_at(&coords).ok_or_else(|| CliError::Config(format!("v0 {coords:?} is not a vertex")))
}

fn class_census(lattice: &Lattice, states: &[Coloring], cfg: &RunConfig) -> BTreeMap<&'static str, usize> {
    let mut out = BTreeMap::from([("balanced", 0), ("even_heavy", 0), ("odd_heavy", 0)]);
    for chi in states {
        *out.get_mut(coloring::classify(lattice, chi, cfg.rho).as_str()).expect("known class") += 1;
    }
    out
}

fn enumerate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let lattice = cfg.lattice()?;
    let mut bc = match cfg.boundary.unwrap_or(BoundaryArg::None) {
        BoundaryArg::None => BoundaryCondition::None,
        BoundaryArg::OddZero => BoundaryCondition::OddBoundaryZero,
        BoundaryArg::EvenZero => BoundaryCondition::EvenBoundaryZero,
    };
    if cfg.v0.is_some() {
        let v0 = v0_vertex(cfg, &lattice)?;
        bc = BoundaryCondition::Composite(vec![bc, BoundaryCondition::PinnedVertex(v0, 0)]);
    }
    let states = enumerate_colorings(&lattice, cfg.q, &bc, cfg.caps.enumeration).map_err(oracle)?;
    let transfer = match count_colorings_capped(&lattice, cfg.q, &bc, cfg.caps.transfer_states) {
        Ok(c) => Some(c.to_string()),
        Err(e) if e.is_refusal() => None,
        Err(e) => return Err(oracle(e)),
    };
    let count = states.len().to_string();
    let mut violations = Vec::new();
    if transfer.as_ref().is_some_and(|t| *t != count) {
        violations.push("enumeration and transfer-matrix counts differ".to_string());
    }
    if cfg.dump == Some(true) {
        let mut buf = Vec::new();
        for chi in &states {
            buf.extend(coloring::serialize(&lattice, chi).map_err(internal)?);
        }
        write_file(&cfg.out.join("colorings.txt"), &buf)?;
    }
    Ok(Outcome {
        provenance: "exact",
        result: json!({
            "vertices": lattice.len(),
            "count": count,
            "count_transfer": transfer,
            "counts_agree": transfer.as_ref().map(|t| *t == count),
            "classes": class_census(&lattice, &states, cfg),
        }),
        violations,
    })
}

fn start_coloring(cfg: &RunConfig, lattice: &Lattice) -> Result<(Coloring, &'static str), CliError> {
    let start = cfg.start.unwrap_or(StartArg::EvenPhase);
    let chi = match start {
        StartArg::EvenPhase => phase_coloring(lattice, Parity::Even, 1),
        StartArg::OddPhase => phase_coloring(lattice, Parity::Odd, 1),
        StartArg::Mod3 => coloring::mod3_coloring(lattice),
    };
    let chi = Coloring::from_colors(cfg.q, &chi.colors()).map_err(|e| CliError::Config(e.to_string()))?;
    coloring::ensure_proper(lattice, &chi).map_err(|e| CliError::Config(format!("start {}: {e}", start.id())))?;
    Ok((chi, start.id()))
}

fn sample(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let lattice = cfg.lattice()?;
    let (chi0, id) = start_coloring(cfg, &lattice)?;
    let volume = lattice.len() as u64;
    let sweeps = cfg.sweeps.unwrap_or(1);
    let steps = sweeps * volume;
    let thin = cfg.thin.unwrap_or(volume);
    let chains = cfg.chains.unwrap_or(1);
    let runs: Vec<Result<Trajectory, CliError>> = (0..chains as u64)
        .into_par_iter()
        .map(|i| {
            let spec = ChainSpec::metropolis(cfg.q, lattice.len(), cfg.seed).with_stream(i);
            run_chain(&lattice, &spec, &chi0, id, steps, thin, cfg.rho).map_err(|e| CliError::Config(e.to_string()))
        })
        .collect();
    let runs: Vec<Trajectory> = runs.into_iter().collect::<Result<_, _>>()?;
    let mut files = Vec::new();
    for t in &runs {
        let name = format!("chain_seed{}_stream{:03}_{}.csv", t.seed, t.stream, t.chi0_id);
        write_file(&cfg.out.join(&name), t.to_csv().as_bytes())?;
        files.push(name);
    }
    let summary = summarize(&runs);
    let finals: Vec<Coloring> = runs.iter().map(|t| t.last.clone()).collect();
    let improper = finals.iter().filter(|c| !coloring::is_proper(&lattice, c)).count();
    let mut text = serde_json::to_string_pretty(&summary).map_err(internal)?;
    text.push('\n');
    write_file(&cfg.out.join(format!("{}.summary.json", cfg.command.name())), text.as_bytes())?;
    let violations = if improper > 0 { vec![format!("{improper} chains ended improper")] } else { vec![] };
    Ok(Outcome {
        provenance: "simulated",
        result: json!({
            "vertices": lattice.len(),
            "start": id,
            "start_imbalance": coloring::imbalance(&lattice, &chi0).imbalance,
            "sweeps": sweeps,
            "proposals_per_chain": steps,
            "thin": thin,
            "trajectories": files,
            "final_classes": class_census(&lattice, &finals, cfg),
            "summary": to_value(&summary)?,
        }),
        violations,
    })
}

fn matrix_checks(m: &TransitionMatrix) -> (Value, Vec<String>) {
    let checks = [
        ("stochastic", m.rows_stochastic()),
        ("symmetric", m.is_symmetric()),
        ("uniform_stationary", m.uniform_stationary()),
        ("irreducible", m.is_irreducible()),
    ];
    let violations = checks.iter().filter(|c| !c.1).map(|c| format!("transition matrix is not {}", c.0)).collect();
    let value = checks.iter().map(|&(k, v)| (k.to_string(), Value::Bool(v))).collect::<serde_json::Map<_, _>>();
    (Value::Object(value), violations)
}

fn mixing(cfg: &RunConfig, with_tau: bool) -> Result<Outcome, CliError> {
    let lattice = cfg.lattice()?;
    let states =
        enumerate_colorings(&lattice, cfg.q, &BoundaryCondition::None, cfg.caps.enumeration).map_err(oracle)?;
    let chain = ChainSpec::metropolis(cfg.q, lattice.len(), cfg.seed);
    let m = transition_matrix(&lattice, &chain, states, cfg.caps.matrix_entries).map_err(oracle)?;
    let (checks, mut violations) = matrix_checks(&m);
    let (mix, reps) = if with_tau {
        let reps = orbit_representatives(&lattice, &m, AUTOMORPHISM_CAP);
        let mix = tv_mixing_time(&m, reps.as_deref(), cfg.caps.max_steps).map_err(oracle)?;
        (Some(mix), reps.map(|r| r.len()))
    } else {
        (None, None)
    };
    let tau = mix.as_ref().map(|r| r.tau).or(cfg.tau);
    let cls = classes(&lattice, &m, cfg.rho);
    let cond = conductance_bound(&cls, tau);
    let blocked = blocked_cut_sweep(&lattice, &m, cfg.rho);
    if cond.bound_holds == Some(false) {
        violations.push("conductance bound fails".into());
    }
    if !blocked.holds() {
        violations.push("a single move joins the two heavy classes or changes the imbalance by more than 1".into());
    }
    let provenance = match &mix {
        Some(r) if r.mode == tricolor::oracle::markov::MixingMode::Float => "exact matrix; floating-point distances",
        _ => "exact",
    };
    let balanced = cls.iter().filter(|&&c| c == ImbalanceClass::Balanced).count();
    Ok(Outcome {
        provenance,
        result: json!({
            "states": m.len(),
            "denominator": m.denom,
            "matrix": checks,
            "orbit_representatives": reps,
            "mixing": mix.as_ref().map(to_value).transpose()?,
            "tau_exact": mix.as_ref().map(|r| r.tau),
            "pi_a": cond.pi_a,
            "pi_m": cond.pi_m,
            "bound": cond.bound,
            "bound_holds": cond.bound_holds,
            "balanced": balanced,
            "conductance": to_value(&cond)?,
            "blocked_cut": json!({
                "moves": blocked.moves,
                "even_to_odd": blocked.even_to_odd,
                "max_imbalance_change": blocked.max_imbalance_change,
                "holds": blocked.holds(),
            }),
        }),
        violations,
    })
}

fn influence(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let lattice = cfg.lattice()?;
    let v0 = v0_vertex(cfg, &lattice)?;
    let report = influence_ratio(&lattice, v0, cfg.caps.enumeration).map_err(oracle)?;
    Ok(Outcome { provenance: "exact", result: to_value(&report)?, violations: vec![] })
}

#[derive(Serialize)]
struct FlowLine {
    chi_id: usize,
    s: i32,
    w_s: usize,
    c: usize,
    d: usize,
    subsets_checked: u64,
    exhaustive: bool,
    nu_closed_form: String,
    nu_total: Option<String>,
    closed_form_ok: bool,
    explicit_ok: Option<bool>,
    proper_ok: bool,
    roundtrip_ok: bool,
}

fn flow_lines(
    cfg: &RunConfig,
    lattice: &Lattice,
    chi_id: usize,
    chi: &Coloring,
    v0: usize,
) -> Result<Vec<FlowLine>, CliError> {
    let cut = build_box_cutset(lattice, chi, v0).map_err(internal)?;
    let limit = cfg.exhaustive_limit.unwrap_or(12);
    let samples = cfg.samples.unwrap_or(200);
    let target = BoundaryCondition::OddBoundaryZero;
    let check = |chi_prime: &Coloring, s: ShiftDirection| -> Result<(bool, bool), CliError> {
        let proper = coloring::is_proper(lattice, chi_prime)
            && coloring::satisfies_bc(lattice, chi_prime, &target).map_err(internal)?;
        Ok((proper, reconstruct(lattice, chi_prime, &cut.w, s) == *chi))
    };
    let mut lines = Vec::new();
    for (k, s) in ShiftDirection::all(lattice.dim()).enumerate() {
        let family = ShiftFamily::new(lattice, chi, &cut.w, s);
        let layer = family.layer().len();
        let (mut proper_ok, mut roundtrip_ok, mut checked) = (true, true, 0u64);
        let exhaustive = layer <= limit;
        if exhaustive {
            for (_, chi_prime) in ShiftFamily::new(lattice, chi, &cut.w, s) {
                let (p, r) = check(&chi_prime, s)?;
                proper_ok &= p;
                roundtrip_ok &= r;
                checked += 1;
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream((chi_id * 2 * lattice.dim() + k) as u64);
            for _ in 0..samples {
                let (_, chi_prime) = family.sample(&mut rng);
                let (p, r) = check(&chi_prime, s)?;
                proper_ok &= p;
                roundtrip_ok &= r;
                checked += 1;
            }
        }
        let cert = flow_out_total(lattice, chi, &cut, s, &cut.w).map_err(internal)?;
        lines.push(FlowLine {
            chi_id,
            s: s.value(),
            w_s: layer,
            c: cert.c.len(),
            d: cert.d.len(),
            subsets_checked: checked,
            exhaustive,
            nu_closed_form: cert.closed_form.to_string(),
            nu_total: cert.explicit.as_ref().map(|e| e.to_string()),
            closed_form_ok: cert.closed_form.is_one(),
            explicit_ok: cert.explicit.as_ref().map(|e| e.is_one()),
            proper_ok,
            roundtrip_ok,
        });
    }
    Ok(lines)
}

fn flow_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let lattice = cfg.lattice()?;
    let v0 = v0_vertex(cfg, &lattice)?;
    let bc = BoundaryCondition::odd_boundary_pinned(&lattice, v0).map_err(|e| CliError::Config(e.to_string()))?;
    let states = enumerate_colorings(&lattice, 3, &bc, cfg.caps.enumeration).map_err(oracle)?;
    let per_chi: Vec<Result<Vec<FlowLine>, CliError>> =
        states.par_iter().enumerate().map(|(i, chi)| flow_lines(cfg, &lattice, i, chi, v0)).collect();
    let mut text = String::new();
    let (mut n, mut proper, mut roundtrip, mut closed, mut explicit, mut explicit_n, mut sampled) =
        (0usize, 0usize, 0usize, 0usize, 0usize, 0usize, 0usize);
    let mut max_layer = 0;
    let mut subsets = 0u64;
    for lines in per_chi {
        for l in lines? {
            n += 1;
            proper += l.proper_ok as usize;
            roundtrip += l.roundtrip_ok as usize;
            closed += l.closed_form_ok as usize;
            if let Some(e) = l.explicit_ok {
                explicit_n += 1;
                explicit += e as usize;
            }
            sampled += (!l.exhaustive) as usize;
            max_layer = max_layer.max(l.w_s);
            subsets += l.subsets_checked;
            text.push_str(&serde_json::to_string(&l).map_err(internal)?);
            text.push('\n');
        }
    }
    write_file(&cfg.out.join("flow-check.jsonl"), text.as_bytes())?;
    let mut violations = Vec::new();
    for (name, ok, total) in [
        ("proper", proper, n),
        ("roundtrip", roundtrip, n),
        ("closed_form", closed, n),
        ("explicit_sum", explicit, explicit_n),
    ] {
        if ok != total {
            violations.push(format!("{name} failed on {} of {total} lines", total - ok));
        }
    }
    Ok(Outcome {
        provenance: "exact (layers above the exhaustive limit are sampled with the configured seed)",
        result: json!({
            "colorings": states.len(),
            "lines": n,
            "subsets_checked": subsets,
            "sampled_lines": sampled,
            "max_layer": max_layer,
            "proper_ok": proper,
            "roundtrip_ok": roundtrip,
            "closed_form_ok": closed,
            "explicit_checked": explicit_n,
            "explicit_ok": explicit,
            "lines_file": "flow-check.jsonl",
        }),
        violations,
    })
}

#[derive(Serialize)]
struct CutsetLine {
    chi_id: usize,
    interior_is_w: bool,
    #[serde(flatten)]
    record: CutsetRecord,
}

fn cutsets(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let lattice = cfg.lattice()?;
    let (states, v0) = if lattice.is_torus() {
        let s = enumerate_colorings(&lattice, 3, &BoundaryCondition::None, cfg.caps.enumeration).map_err(oracle)?;
        (s, None)
    } else {
        let v0 = v0_vertex(cfg, &lattice)?;
        let bc = BoundaryCondition::odd_boundary_pinned(&lattice, v0).map_err(|e| CliError::Config(e.to_string()))?;
        (enumerate_colorings(&lattice, 3, &bc, cfg.caps.enumeration).map_err(oracle)?, Some(v0))
    };
    let per_chi: Vec<Result<Vec<CutsetLine>, CliError>> = states
        .par_iter()
        .enumerate()
        .map(|(i, chi)| {
            let cuts = match v0 {
                Some(v0) => vec![build_box_cutset(&lattice, chi, v0).map_err(internal)?],
                None => build_torus_cutsets(&lattice, chi).map_err(internal)?,
            };
            Ok(cuts
                .iter()
                .map(|c| CutsetLine {
                    chi_id: i,
                    interior_is_w: c.interior_is_w(),
                    record: CutsetRecord::new(&lattice, c, chi),
                })
                .collect())
        })
        .collect();
    let mut text = String::new();
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    let (mut total, mut hold, mut identity, mut p8a_checked, mut asserted) = (0usize, 0usize, 0usize, 0usize, 0usize);
    for lines in per_chi {
        for l in lines? {
            total += 1;
            hold += l.record.holds() as usize;
            asserted += l.record.asserted as usize;
            identity += l.record.properties.identity as usize;
            p8a_checked += l.record.properties.p8a.is_some() as usize;
            *sizes.entry(l.record.size).or_default() += 1;
            text.push_str(&serde_json::to_string(&l).map_err(internal)?);
            text.push('\n');
        }
    }
    write_file(&cfg.out.join("cutsets.jsonl"), text.as_bytes())?;
    let mut violations = Vec::new();
    if hold != total {
        violations.push(format!("{} of {total} cutsets violate an asserted property", total - hold));
    }
    if identity != total {
        violations.push(format!("{} of {total} cutsets break the size identity", total - identity));
    }
    Ok(Outcome {
        provenance: "exact",
        result: json!({
            "colorings": states.len(),
            "cutsets": total,
            "asserted": asserted,
            "all_hold": hold,
            "identity_holds": identity,
            "isoperimetry_checked": p8a_checked,
            "size_histogram": sizes,
            "lines_file": "cutsets.jsonl",
        }),
        violations,
    })
}

fn entropy(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let d = cfg.lattice.d;
    let n = cfg.lattice.n;
    let widths = cfg.widths.clone().unwrap_or_default();
    let topo = topological_entropy_estimate(d, &widths, cfg.caps.transfer_states).map_err(entropy_err)?;
    let mut gaps = Vec::new();
    let mut violations = Vec::new();
    for &m in cfg.m.as_deref().unwrap_or(&[]) {
        let g = max_entropy_gap_check(d, n, m, cfg.caps.enumeration).map_err(entropy_err)?;
        if !g.all_hold() {
            violations.push(format!("restricted-law inequality fails for m = {m}"));
        }
        gaps.push(g);
    }
    let rho = cfg.rho.to_f64();
    let h = binary_entropy(rho).map_err(entropy_err)?;
    Ok(Outcome {
        provenance: "exact counts; logarithms and extrapolation in floating point",
        result: json!({
            "topological": to_value(&topo)?,
            "restricted": to_value(&gaps)?,
            "inequalities_hold": gaps.iter().all(|g| g.all_hold()),
            "binary_entropy": {
                "rho": cfg.rho,
                "bits": h,
                "h_plus_rho_below_one": h + rho < 1.0,
                "critical_rho": rho_critical(1e-12),
                "base": "bits",
            },
        }),
        violations,
    })
}
