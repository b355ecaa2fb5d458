//! Flags, the `key = value` config file, and the resolved run configuration.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use tricolor::lattice::{Lattice, LatticeKind, LatticeSpec};
use tricolor::oracle::enumerate::DEFAULT_ENUMERATION_CAP;
use tricolor::oracle::markov::{DEFAULT_MATRIX_CAP, DEFAULT_MAX_STEPS};
use tricolor::oracle::transfer::DEFAULT_STATE_CAP;
use tricolor::Rho;

use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "tricolor", version, about = "Proper 3-colorings of boxes and even tori", args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Enumerate colorings and cross-check the count by transfer matrix.
    Enumerate(Flags),
    /// Run Metropolis chains and write trajectories.
    Sample(Flags),
    /// Exact mixing time, matrix checks and conductance bound.
    Mixing(Flags),
    /// Boundary influence on a pinned vertex.
    Influence(Flags),
    /// Shift-map soundness, reconstruction and flow conservation.
    FlowCheck(Flags),
    /// Build and verify every cutset of every enumerated coloring.
    Cutsets(Flags),
    /// Class census, conductance bound and blocked-cut sweep.
    Conductance(Flags),
    /// Topological entropy sequence and restricted-law inequalities.
    Entropy(Flags),
    /// Many chains from a phase start on a 4-dimensional torus.
    TorpidDemo(Flags),
}

impl Cmd {
    pub fn split(self) -> (CommandKind, Flags) {
        match self {
            Cmd::Enumerate(f) => (CommandKind::Enumerate, f),
            Cmd::Sample(f) => (CommandKind::Sample, f),
            Cmd::Mixing(f) => (CommandKind::Mixing, f),
            Cmd::Influence(f) => (CommandKind::Influence, f),
            Cmd::FlowCheck(f) => (CommandKind::FlowCheck, f),
            Cmd::Cutsets(f) => (CommandKind::Cutsets, f),
            Cmd::Conductance(f) => (CommandKind::Conductance, f),
            Cmd::Entropy(f) => (CommandKind::Entropy, f),
            Cmd::TorpidDemo(f) => (CommandKind::TorpidDemo, f),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Enumerate,
    Sample,
    Mixing,
    Influence,
    FlowCheck,
    Cutsets,
    Conductance,
    Entropy,
    TorpidDemo,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Enumerate => "enumerate",
            CommandKind::Sample => "sample",
            CommandKind::Mixing => "mixing",
            CommandKind::Influence => "influence",
            CommandKind::FlowCheck => "flow-check",
            CommandKind::Cutsets => "cutsets",
            CommandKind::Conductance => "conductance",
            CommandKind::Entropy => "entropy",
            CommandKind::TorpidDemo => "torpid-demo",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum KindArg {
    Box,
    Torus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryArg {
    None,
    OddZero,
    EvenZero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StartArg {
    /// 0 on even vertices, 1 on odd.
    EvenPhase,
    /// 0 on odd vertices, 1 on even.
    OddPhase,
    /// Coordinate sum mod 3 (boxes only).
    Mod3,
}

impl StartArg {
    pub fn id(self) -> &'static str {
        match self {
            StartArg::EvenPhase => "even_phase",
            StartArg::OddPhase => "odd_phase",
            StartArg::Mod3 => "mod3",
        }
    }
}

/// Every flag is optional so that config-file values can fill the gaps.
#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// `key = value` file; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Add the odd vertices of the next shell to a box.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub extended: Option<bool>,
    #[arg(long)]
    pub q: Option<u8>,
    /// Class threshold, as `p/q` or a decimal.
    #[arg(long)]
    pub rho: Option<Rho>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub enum_cap: Option<u64>,
    #[arg(long)]
    pub state_cap: Option<usize>,
    #[arg(long)]
    pub matrix_cap: Option<usize>,
    #[arg(long)]
    pub max_steps: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Pinned vertex coordinates, comma separated (default: the center).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub v0: Option<Vec<i64>>,
    #[arg(long, value_enum)]
    pub boundary: Option<BoundaryArg>,
    #[arg(long, value_enum)]
    pub start: Option<StartArg>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub sweeps: Option<u64>,
    /// Proposals between recorded samples (default: one sweep).
    #[arg(long)]
    pub thin: Option<u64>,
    /// Random subsets per direction when the layer is too large to exhaust.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Largest layer whose subsets are all checked.
    #[arg(long)]
    pub exhaustive_limit: Option<usize>,
    /// Outer radii for the restricted-law checks.
    #[arg(long, value_delimiter = ',')]
    pub m: Option<Vec<usize>>,
    /// Box widths for the per-site entropy sequence.
    #[arg(long, value_delimiter = ',')]
    pub widths: Option<Vec<usize>>,
    /// Mixing time to test the conductance bound against.
    #[arg(long)]
    pub tau: Option<u64>,
    /// Also write every enumerated coloring in the text codec.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub dump: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    pub enumeration: u64,
    pub transfer_states: usize,
    pub matrix_entries: usize,
    pub max_steps: u64,
}

/// Fully resolved configuration, embedded in every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub lattice: LatticeSpec,
    pub q: u8,
    pub rho: Rho,
    pub seed: u64,
    pub caps: Caps,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<StartArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chains: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thin: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exhaustive_limit: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub widths: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump: Option<bool>,
    /// Where reports go. Not part of the embedded config, so that runs into
    /// different directories stay byte-identical.
    #[serde(skip)]
    pub out: PathBuf,
}

/// Reads `key = value` lines (`#` starts a comment) into `--key=value` flags.
/// A `command` key is returned separately.
pub fn read_config_file(path: &PathBuf) -> Result<(Option<String>, Vec<String>), CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))?;
    let mut command = None;
    let mut flags = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected key = value", i + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() {
            return Err(CliError::Config(format!("config line {}: empty key", i + 1)));
        }
        if key == "config" {
            return Err(CliError::Config("config files cannot include other config files".into()));
        }
        if key == "command" {
            command = Some(value.to_string());
        } else {
            flags.push(format!("--{key}={value}"));
        }
    }
    Ok((command, flags))
}

fn find_config(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

const COMMANDS: [&str; 9] =
    ["enumerate", "sample", "mixing", "influence", "flow-check", "cutsets", "conductance", "entropy", "torpid-demo"];

/// Splices config-file flags in front of the command-line flags, so the
/// latter override them.
pub fn merge_args(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = find_config(&args) else {
        return Ok(args);
    };
    let (file_command, file_flags) = read_config_file(&path)?;
    let mut out: Vec<OsString> = Vec::with_capacity(args.len() + file_flags.len() + 1);
    let mut rest = args.into_iter();
    out.extend(rest.next());
    let rest: Vec<OsString> = rest.collect();
    let has_command = rest.first().is_some_and(|a| COMMANDS.contains(&a.to_string_lossy().as_ref()));
    let tail = if has_command {
        out.push(rest[0].clone());
        &rest[1..]
    } else {
        match file_command {
            Some(c) => out.push(c.into()),
            None => return Err(CliError::Config("no command on the command line or in the config file".into())),
        }
        &rest[..]
    };
    out.extend(file_flags.into_iter().map(OsString::from));
    out.extend(tail.iter().cloned());
    Ok(out)
}

fn default_lattice(cmd: CommandKind) -> (KindArg, usize, usize) {
    match cmd {
        CommandKind::Enumerate | CommandKind::Influence => (KindArg::Box, 2, 1),
        CommandKind::FlowCheck | CommandKind::Cutsets => (KindArg::Box, 2, 2),
        CommandKind::Entropy => (KindArg::Box, 2, 1),
        CommandKind::Sample | CommandKind::Mixing | CommandKind::Conductance => (KindArg::Torus, 2, 4),
        CommandKind::TorpidDemo => (KindArg::Torus, 4, 4),
    }
}

impl RunConfig {
    pub fn resolve(cmd: CommandKind, f: Flags) -> Result<Self, CliError> {
        let (k0, d0, n0) = default_lattice(cmd);
        let kind = match f.kind.unwrap_or(k0) {
            KindArg::Box => LatticeKind::Box,
            KindArg::Torus => LatticeKind::Torus,
        };
        let d = f.d.unwrap_or(d0);
        let n = f.n.unwrap_or(n0);
        let extended = f.extended.unwrap_or(false);
        if extended && kind == LatticeKind::Torus {
            return Err(CliError::Config("extended applies to boxes only".into()));
        }
        let lattice = LatticeSpec { kind, d, n, extended };
        let q = f.q.unwrap_or(3);
        if q == 0 || q > 32 {
            return Err(CliError::Config(format!("q={q} is outside 1..=32")));
        }
        let box_only = matches!(cmd, CommandKind::Influence | CommandKind::FlowCheck);
        if box_only && kind != LatticeKind::Box {
            return Err(CliError::Config(format!("{} needs a box lattice", cmd.name())));
        }
        let three_only = matches!(
            cmd,
            CommandKind::Influence | CommandKind::FlowCheck | CommandKind::Cutsets | CommandKind::Entropy
        );
        if three_only && q != 3 {
            return Err(CliError::Config(format!("{} is defined for q = 3 only", cmd.name())));
        }
        if f.threads == Some(0) {
            return Err(CliError::Config("threads must be positive".into()));
        }
        let uses = |set: &[CommandKind]| set.contains(&cmd);
        let chain_cmds = [CommandKind::Sample, CommandKind::TorpidDemo];
        let pinned_cmds = [CommandKind::Influence, CommandKind::FlowCheck, CommandKind::Cutsets];
        let (chains0, sweeps0) = if cmd == CommandKind::TorpidDemo { (32, 4000) } else { (1, 100) };
        let cfg = RunConfig {
            command: cmd,
            lattice,
            q,
            rho: f.rho.unwrap_or(Rho::DEFAULT),
            seed: f.seed.unwrap_or(if cmd == CommandKind::TorpidDemo { 7 } else { 0 }),
            caps: Caps {
                enumeration: f.enum_cap.unwrap_or(DEFAULT_ENUMERATION_CAP),
                transfer_states: f.state_cap.unwrap_or(DEFAULT_STATE_CAP),
                matrix_entries: f.matrix_cap.unwrap_or(DEFAULT_MATRIX_CAP),
                max_steps: f.max_steps.unwrap_or(DEFAULT_MAX_STEPS),
            },
            threads: f.threads,
            v0: if uses(&pinned_cmds) || f.v0.is_some() { Some(f.v0.unwrap_or_else(|| vec![0; d])) } else { None },
            boundary: (cmd == CommandKind::Enumerate).then(|| f.boundary.unwrap_or(BoundaryArg::None)),
            start: uses(&chain_cmds).then(|| f.start.unwrap_or(StartArg::EvenPhase)),
            chains: uses(&chain_cmds).then(|| f.chains.unwrap_or(chains0)),
            sweeps: uses(&chain_cmds).then(|| f.sweeps.unwrap_or(sweeps0)),
            thin: if uses(&chain_cmds) { f.thin } else { None },
            samples: (cmd == CommandKind::FlowCheck).then(|| f.samples.unwrap_or(200)),
            exhaustive_limit: (cmd == CommandKind::FlowCheck).then(|| f.exhaustive_limit.unwrap_or(12)),
            m: (cmd == CommandKind::Entropy).then(|| f.m.unwrap_or_else(|| vec![2, 3])),
            widths: (cmd == CommandKind::Entropy).then(|| f.widths.unwrap_or_else(|| (2..=8).collect())),
            tau: f.tau.filter(|_| cmd == CommandKind::Conductance),
            dump: (cmd == CommandKind::Enumerate).then(|| f.dump.unwrap_or(false)),
            out: f.out.unwrap_or_else(|| PathBuf::from("out")),
        };
        if let Some(v0) = &cfg.v0 {
            if v0.len() != d {
                return Err(CliError::Config(format!("v0 has {} coordinates, d = {d}", v0.len())));
            }
        }
        if cfg.chains == Some(0) || cfg.thin == Some(0) {
            return Err(CliError::Config("chains and thin must be positive".into()));
        }
        if cfg.widths.as_ref().is_some_and(|w| w.is_empty() || w.contains(&0)) {
            return Err(CliError::Config("widths must be positive".into()));
        }
        if cfg.m.as_ref().is_some_and(|m| m.iter().any(|&m| m <= n)) {
            return Err(CliError::Config(format!("every m must exceed n = {n}")));
        }
        if cmd != CommandKind::Entropy {
            cfg.lattice()?;
        }
        Ok(cfg)
    }

    pub fn lattice(&self) -> Result<Lattice, CliError> {
        Lattice::new(self.lattice).map_err(|e| CliError::Config(e.to_string()))
    }
}

pub fn parse(args: Vec<OsString>) -> Result<RunConfig, CliError> {
    let args = merge_args(args)?;
    let cli = Cli::try_parse_from(args).map_err(CliError::Clap)?;
    let (cmd, flags) = cli.command.split();
    RunConfig::resolve(cmd, flags)
}
