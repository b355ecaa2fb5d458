//! Colorings `V -> {0..q-1}`, boundary conditions, the zero set and the
//! even/odd imbalance order parameter.

use std::fmt;
use std::str::FromStr;

use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::ColorGraph;
use crate::lattice::{Lattice, LatticeError, LatticeKind, LatticeSpec, Parity, VertexSet};

pub const MAX_COLORS: u8 = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ColoringError {
    #[error("q={0} is outside 1..={MAX_COLORS}")]
    BadColorCount(u8),
    #[error("vertex {vertex} has color {color}, outside 0..{q}")]
    ColorOutOfRange { vertex: usize, color: u8, q: u8 },
    #[error("coloring has {found} vertices, lattice has {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("edge ({0}, {1}) is monochromatic")]
    Improper(usize, usize),
    #[error("boundary condition not applicable: {0}")]
    InapplicableBoundary(String),
}

/// Packed color assignment. Each color takes `width` bits, where `width` is
/// the smallest power of two with `2^width >= q` (2 bits for q = 3).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Coloring {
    q: u8,
    width: u8,
    len: usize,
    words: Vec<u64>,
}

fn width_for(q: u8) -> u8 {
    match q {
        0..=2 => 1,
        3..=4 => 2,
        5..=16 => 4,
        _ => 8,
    }
}

impl Coloring {
    /// The all-zero assignment.
    pub fn zeros(q: u8, len: usize) -> Result<Self, ColoringError> {
        if q == 0 || q > MAX_COLORS {
            return Err(ColoringError::BadColorCount(q));
        }
        let width = width_for(q);
        let words = (len * width as usize).div_ceil(64);
        Ok(Self { q, width, len, words: vec![0; words] })
    }

    pub fn from_colors(q: u8, colors: &[u8]) -> Result<Self, ColoringError> {
        let mut out = Self::zeros(q, colors.len())?;
        for (v, &c) in colors.iter().enumerate() {
            if c >= q {
                return Err(ColoringError::ColorOutOfRange { vertex: v, color: c, q });
            }
            out.set(v, c);
        }
        Ok(out)
    }

    /// `f(v)` evaluated at every vertex.
    pub fn from_fn(q: u8, len: usize, mut f: impl FnMut(usize) -> u8) -> Result<Self, ColoringError> {
        let colors: Vec<u8> = (0..len).map(&mut f).collect();
        Self::from_colors(q, &colors)
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, v: usize) -> u8 {
        debug_assert!(v < self.len);
        let bit = v * self.width as usize;
        let mask = (1u64 << self.width) - 1;
        ((self.words[bit / 64] >> (bit % 64)) & mask) as u8
    }

    #[inline]
    pub fn set(&mut self, v: usize, color: u8) {
        debug_assert!(v < self.len && color < self.q);
        let bit = v * self.width as usize;
        let mask = (1u64 << self.width) - 1;
        let word = &mut self.words[bit / 64];
        *word = (*word & !(mask << (bit % 64))) | ((color as u64) << (bit % 64));
    }

    pub fn colors(&self) -> Vec<u8> {
        (0..self.len).map(|v| self.get(v)).collect()
    }

    /// Vertices where the two colorings differ.
    pub fn hamming(&self, other: &Coloring) -> usize {
        debug_assert_eq!(self.len, other.len);
        if self.width == other.width {
            let mask = lane_low_bits(self.width);
            return self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| {
                    let x = a ^ b;
                    let lanes = (0..self.width).fold(0u64, |acc, k| acc | (x >> k));
                    (lanes & mask).count_ones() as usize
                })
                .sum();
        }
        (0..self.len).filter(|&v| self.get(v) != other.get(v)).count()
    }

    /// Applies a color permutation `perm[c]`.
    pub fn permute_colors(&self, perm: &[u8]) -> Coloring {
        let mut out = self.clone();
        for v in 0..self.len {
            out.set(v, perm[self.get(v) as usize]);
        }
        out
    }

    /// `out(map[v]) = self(v)` for a vertex permutation `map`.
    pub fn relabel_vertices(&self, map: &[usize]) -> Coloring {
        let mut out = self.clone();
        for v in 0..self.len {
            out.set(map[v], self.get(v));
        }
        out
    }

    fn check_len(&self, expected: usize) -> Result<(), ColoringError> {
        if self.len != expected {
            return Err(ColoringError::LengthMismatch { expected, found: self.len });
        }
        Ok(())
    }
}

/// Mask with the lowest bit of every `width`-bit lane set.
fn lane_low_bits(width: u8) -> u64 {
    let mut m = 0u64;
    let mut i = 0;
    while i < 64 {
        m |= 1 << i;
        i += width as u32;
    }
    m
}

/// `0` on `zero_side`, `other` on the opposite class.
pub fn phase_coloring(lattice: &Lattice, zero_side: Parity, other: u8) -> Coloring {
    Coloring::from_fn(3, lattice.len(), |v| if lattice.parity(v) == zero_side { 0 } else { other })
        .expect("phase coloring uses colors below 3")
}

/// `χ(x) = (x_1 + ... + x_d) mod 3`. Proper on boxes; on tori only when
/// `3 | n`, which never holds for the even tori this crate accepts with n = 4.
pub fn mod3_coloring(lattice: &Lattice) -> Coloring {
    Coloring::from_fn(3, lattice.len(), |v| lattice.coords(v).iter().sum::<i64>().rem_euclid(3) as u8)
        .expect("mod-3 coloring uses colors below 3")
}

pub fn is_proper<G: ColorGraph + ?Sized>(graph: &G, chi: &Coloring) -> bool {
    first_conflict(graph, chi).is_none()
}

pub fn first_conflict<G: ColorGraph + ?Sized>(graph: &G, chi: &Coloring) -> Option<(usize, usize)> {
    if chi.len() != graph.vertex_count() {
        return Some((usize::MAX, usize::MAX));
    }
    for u in 0..graph.vertex_count() {
        let cu = chi.get(u);
        for &v in graph.neighbors(u) {
            if u < v && chi.get(v) == cu {
                return Some((u, v));
            }
        }
    }
    None
}

pub fn ensure_proper<G: ColorGraph + ?Sized>(graph: &G, chi: &Coloring) -> Result<(), ColoringError> {
    chi.check_len(graph.vertex_count())?;
    match first_conflict(graph, chi) {
        Some((u, v)) => Err(ColoringError::Improper(u, v)),
        None => Ok(()),
    }
}

/// `I(χ) = χ^{-1}(0)`.
pub fn zero_set(lattice: &Lattice, chi: &Coloring) -> Result<VertexSet, ColoringError> {
    ensure_proper(lattice, chi)?;
    Ok(zeros_unchecked(lattice.len(), chi))
}

pub(crate) fn zeros_unchecked(len: usize, chi: &Coloring) -> VertexSet {
    VertexSet::from_vertices(len, (0..len).filter(|&v| chi.get(v) == 0))
}

/// An exact rational locality / class parameter `ρ` in `(0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Rho {
    num: u64,
    den: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid rho {0:?}: expected p/q or a decimal in (0, 1]")]
pub struct RhoParseError(pub String);

impl Rho {
    pub const DEFAULT: Rho = Rho { num: 11, den: 50 };

    pub fn new(num: u64, den: u64) -> Result<Self, RhoParseError> {
        if den == 0 || num == 0 || num > den {
            return Err(RhoParseError(format!("{num}/{den}")));
        }
        let g = num_integer::gcd(num, den);
        Ok(Self { num: num / g, den: den / g })
    }

    pub fn numer(self) -> u64 {
        self.num
    }

    pub fn denom(self) -> u64 {
        self.den
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `count <= ρ · total`, exactly.
    pub fn admits(self, count: usize, total: usize) -> bool {
        (count as u128) * (self.den as u128) <= (self.num as u128) * (total as u128)
    }
}

impl Default for Rho {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl fmt::Display for Rho {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Rho {
    type Err = RhoParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || RhoParseError(s.to_string());
        let t = s.trim();
        if let Some((p, q)) = t.split_once('/') {
            let p = p.trim().parse::<u64>().map_err(|_| bad())?;
            let q = q.trim().parse::<u64>().map_err(|_| bad())?;
            return Rho::new(p, q).map_err(|_| bad());
        }
        // Decimal: "0.22" is read as 22/100 exactly.
        let (int, frac) = t.split_once('.').unwrap_or((t, ""));
        if frac.len() > 18 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let int = if int.is_empty() { 0 } else { int.parse::<u64>().map_err(|_| bad())? };
        let den = 10u64.pow(frac.len() as u32);
        let frac_val = if frac.is_empty() { 0 } else { frac.parse::<u64>().map_err(|_| bad())? };
        let num = int.checked_mul(den).and_then(|x| x.checked_add(frac_val)).ok_or_else(bad)?;
        Rho::new(num, den).map_err(|_| bad())
    }
}

impl TryFrom<String> for Rho {
    type Error = RhoParseError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Rho> for String {
    fn from(r: Rho) -> String {
        r.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImbalanceClass {
    Balanced,
    EvenHeavy,
    OddHeavy,
}

impl ImbalanceClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ImbalanceClass::Balanced => "balanced",
            ImbalanceClass::EvenHeavy => "even_heavy",
            ImbalanceClass::OddHeavy => "odd_heavy",
        }
    }

    /// Class of a given signed imbalance on a lattice with `volume` vertices.
    /// Compares `2|k|` with `ρ · volume` as integers.
    pub fn of(imbalance: i64, rho: Rho, volume: usize) -> Self {
        let lhs = 2 * (imbalance.unsigned_abs() as u128) * rho.den as u128;
        let rhs = rho.num as u128 * volume as u128;
        if lhs <= rhs {
            ImbalanceClass::Balanced
        } else if imbalance > 0 {
            ImbalanceClass::EvenHeavy
        } else {
            ImbalanceClass::OddHeavy
        }
    }
}

impl fmt::Display for ImbalanceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Imbalance {
    pub zero_even: usize,
    pub zero_odd: usize,
    /// `|I ∩ E| - |I ∩ O|`.
    pub imbalance: i64,
}

pub fn imbalance(lattice: &Lattice, chi: &Coloring) -> Imbalance {
    let mut zero_even = 0;
    let mut zero_odd = 0;
    for v in 0..lattice.len() {
        if chi.get(v) == 0 {
            match lattice.parity(v) {
                Parity::Even => zero_even += 1,
                Parity::Odd => zero_odd += 1,
            }
        }
    }
    Imbalance { zero_even, zero_odd, imbalance: zero_even as i64 - zero_odd as i64 }
}

pub fn classify(lattice: &Lattice, chi: &Coloring, rho: Rho) -> ImbalanceClass {
    ImbalanceClass::of(imbalance(lattice, chi).imbalance, rho, lattice.len())
}

/// Constraints on box colorings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundaryCondition {
    None,
    /// `χ ≡ 0` on `∂_int Λ ∩ O`.
    OddBoundaryZero,
    /// `χ ≡ 0` on `∂_int Λ ∩ E`.
    EvenBoundaryZero,
    PinnedVertex(usize, u8),
    Composite(Vec<BoundaryCondition>),
}

impl BoundaryCondition {
    /// The constraint set defining `C_3^O(v0)`. `v0` must be an even vertex
    /// off the box boundary.
    pub fn odd_boundary_pinned(lattice: &Lattice, v0: usize) -> Result<Self, ColoringError> {
        if lattice.kind() != LatticeKind::Box {
            return Err(ColoringError::InapplicableBoundary("pinned center needs a box".into()));
        }
        if v0 >= lattice.len() || lattice.parity(v0) != Parity::Even || lattice.outer_boundary().contains(v0) {
            return Err(ColoringError::InapplicableBoundary(format!(
                "v0={v0} must be an even vertex off the box boundary"
            )));
        }
        Ok(BoundaryCondition::Composite(vec![
            BoundaryCondition::OddBoundaryZero,
            BoundaryCondition::PinnedVertex(v0, 0),
        ]))
    }

    /// Per-vertex bitmask of allowed colors.
    pub fn masks(&self, lattice: &Lattice, q: u8) -> Result<Vec<u32>, ColoringError> {
        if q == 0 || q > MAX_COLORS {
            return Err(ColoringError::BadColorCount(q));
        }
        let all = if q == 32 { u32::MAX } else { (1u32 << q) - 1 };
        let mut masks = vec![all; lattice.len()];
        self.apply(lattice, q, &mut masks)?;
        Ok(masks)
    }

    fn apply(&self, lattice: &Lattice, q: u8, masks: &mut [u32]) -> Result<(), ColoringError> {
        match self {
            BoundaryCondition::None => {}
            BoundaryCondition::OddBoundaryZero | BoundaryCondition::EvenBoundaryZero => {
                if lattice.kind() != LatticeKind::Box {
                    return Err(ColoringError::InapplicableBoundary(
                        "boundary-zero conditions need a box lattice".into(),
                    ));
                }
                let side = if matches!(self, BoundaryCondition::OddBoundaryZero) { Parity::Odd } else { Parity::Even };
                for v in lattice.outer_boundary().iter() {
                    if lattice.parity(v) == side {
                        masks[v] &= 1;
                    }
                }
            }
            BoundaryCondition::PinnedVertex(v, c) => {
                if *v >= lattice.len() || *c >= q {
                    return Err(ColoringError::InapplicableBoundary(format!(
                        "pin ({v}, {c}) outside lattice or palette"
                    )));
                }
                masks[*v] &= 1 << c;
            }
            BoundaryCondition::Composite(parts) => {
                for part in parts {
                    part.apply(lattice, q, masks)?;
                }
            }
        }
        Ok(())
    }
}

/// Pointwise check of `bc`; properness is not part of it.
pub fn satisfies_bc(lattice: &Lattice, chi: &Coloring, bc: &BoundaryCondition) -> Result<bool, ColoringError> {
    chi.check_len(lattice.len())?;
    let masks = bc.masks(lattice, chi.q())?;
    Ok((0..lattice.len()).all(|v| masks[v] & (1 << chi.get(v)) != 0))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("invalid lattice in header: {0}")]
    Lattice(#[from] LatticeError),
    #[error("payload is not valid base64: {0}")]
    Base64(String),
    #[error("payload has {found} bytes, expected {expected} for {vertices} vertices")]
    Length { expected: usize, found: usize, vertices: usize },
    #[error("vertex {vertex} has color {color}, outside 0..{q}")]
    ColorRange { vertex: usize, color: u8, q: u8 },
    #[error("nonzero padding bits after the last color")]
    Padding,
    #[error(transparent)]
    Coloring(#[from] ColoringError),
}

#[derive(Serialize, Deserialize)]
struct Header {
    kind: LatticeKind,
    d: usize,
    n: usize,
    q: u8,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    extended: bool,
}

/// One JSON header line, then the base64 packed colors and a newline. Vertex
/// `i` occupies bits `[i·w, (i+1)·w)` of the payload, least significant bit
/// of each byte first.
pub fn serialize(lattice: &Lattice, chi: &Coloring) -> Result<Vec<u8>, CodecError> {
    chi.check_len(lattice.len())?;
    let spec = lattice.spec();
    let header = Header { kind: spec.kind, d: spec.d, n: spec.n, q: chi.q(), extended: spec.extended };
    let mut out = serde_json::to_vec(&header).map_err(|e| CodecError::MalformedHeader(e.to_string()))?;
    out.push(b'\n');
    let width = chi.width as usize;
    let mut payload = vec![0u8; (chi.len() * width).div_ceil(8)];
    for v in 0..chi.len() {
        let bit = v * width;
        payload[bit / 8] |= chi.get(v) << (bit % 8);
    }
    out.extend(base64::engine::general_purpose::STANDARD.encode(&payload).into_bytes());
    out.push(b'\n');
    Ok(out)
}

pub fn deserialize(bytes: &[u8]) -> Result<(LatticeSpec, Coloring), CodecError> {
    let split = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| CodecError::MalformedHeader("missing newline after header".into()))?;
    let header: Header =
        serde_json::from_slice(&bytes[..split]).map_err(|e| CodecError::MalformedHeader(e.to_string()))?;
    let spec = LatticeSpec { kind: header.kind, d: header.d, n: header.n, extended: header.extended };
    let lattice = Lattice::new(spec)?;
    let body = std::str::from_utf8(&bytes[split + 1..]).map_err(|e| CodecError::Base64(e.to_string()))?.trim_end();
    let payload =
        base64::engine::general_purpose::STANDARD.decode(body).map_err(|e| CodecError::Base64(e.to_string()))?;
    let mut chi = Coloring::zeros(header.q, lattice.len())?;
    let width = chi.width as usize;
    let expected = (lattice.len() * width).div_ceil(8);
    if payload.len() != expected {
        return Err(CodecError::Length { expected, found: payload.len(), vertices: lattice.len() });
    }
    let mask = ((1u16 << width) - 1) as u8;
    for v in 0..lattice.len() {
        let bit = v * width;
        let color = (payload[bit / 8] >> (bit % 8)) & mask;
        if color >= header.q {
            return Err(CodecError::ColorRange { vertex: v, color, q: header.q });
        }
        chi.set(v, color);
    }
    let used = lattice.len() * width;
    if !used.is_multiple_of(8) && payload[used / 8] >> (used % 8) != 0 {
        return Err(CodecError::Padding);
    }
    Ok((spec, chi))
}
