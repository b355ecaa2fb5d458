//! Zero-temperature 3-state antiferromagnetic Potts model on boxes and even
//! tori of `Z^d`: colorings, Glauber dynamics, odd cutsets, the shift-map
//! flow, exact small-system oracles and entropy estimates.

pub mod coloring;
pub mod cutset;
pub mod dynamics;
pub mod entropy;
pub mod graph;
pub mod lattice;
pub mod oracle;
pub mod peierls;

pub use coloring::{Coloring, ImbalanceClass, Rho};
pub use lattice::{Lattice, LatticeKind, LatticeSpec, Parity, ShiftDirection, VertexSet};
