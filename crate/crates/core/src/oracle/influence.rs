//! Boundary influence on the center: `|C_3^O(v0)| / |C_3^O|` for a box,
//! with the pinned colorings broken down by the size of their cutset.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::enumerate::enumerate_colorings;
use super::transfer::count_colorings;
use super::OracleError;
use crate::coloring::BoundaryCondition;
use crate::cutset::build_box_cutset;
use crate::lattice::Lattice;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceReport {
    pub d: usize,
    pub n: usize,
    pub v0: usize,
    /// `|C_3^O(v0)|`.
    pub pinned: String,
    /// `|C_3^O|`.
    pub total: String,
    pub ratio: String,
    pub ratio_f64: f64,
    /// `c0 -> |C_3^O(c0, v0)|`; absent when the pinned set is too large.
    pub histogram: Option<BTreeMap<usize, u64>>,
    /// `c0 -> |C_3^O(c0, v0)| / |C_3^O|` as floats.
    pub histogram_ratios: Option<BTreeMap<usize, f64>>,
}

/// Exact ratio; the cutset histogram is added when the pinned colorings
/// number at most `cap`.
pub fn influence_ratio(lattice: &Lattice, v0: usize, cap: u64) -> Result<InfluenceReport, OracleError> {
    let pinned_bc = BoundaryCondition::odd_boundary_pinned(lattice, v0)?;
    let total = count_colorings(lattice, 3, &BoundaryCondition::OddBoundaryZero)?;
    let pinned = count_colorings(lattice, 3, &pinned_bc)?;
    let ratio = if total.is_zero() {
        BigRational::zero()
    } else {
        BigRational::new(pinned.clone().into(), total.clone().into())
    };
    let histogram = match enumerate_colorings(lattice, 3, &pinned_bc, cap) {
        Ok(colorings) => {
            let mut h = BTreeMap::new();
            for chi in &colorings {
                let cut = build_box_cutset(lattice, chi, v0).map_err(|e| OracleError::Invalid(e.to_string()))?;
                *h.entry(cut.size()).or_insert(0u64) += 1;
            }
            Some(h)
        }
        Err(e) if e.is_refusal() => None,
        Err(e) => return Err(e),
    };
    let total_f = total.to_f64().unwrap_or(f64::NAN);
    let histogram_ratios = histogram.as_ref().map(|h| h.iter().map(|(&c, &k)| (c, k as f64 / total_f)).collect());
    let spec = lattice.spec();
    Ok(InfluenceReport {
        d: spec.d,
        n: spec.n,
        v0,
        pinned: pinned.to_string(),
        total: total.to_string(),
        ratio: format_ratio(&pinned, &total),
        ratio_f64: ratio.to_f64().unwrap_or(f64::NAN),
        histogram,
        histogram_ratios,
    })
}

/// `p/q` without reduction, so `0/32` stays visible as such.
pub fn format_ratio(p: &BigUint, q: &BigUint) -> String {
    format!("{p}/{q}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;

    #[test]
    fn center_of_smallest_box_is_never_zero() {
        let b = Lattice::new(LatticeSpec::cube(2, 1)).unwrap();
        let r = influence_ratio(&b, b.vertex_at(&[0, 0]).unwrap(), 1000).unwrap();
        assert_eq!(r.ratio, "0/32");
        assert_eq!(r.ratio_f64, 0.0);
        assert_eq!(r.histogram, Some(BTreeMap::new()));
    }

    #[test]
    fn histogram_sums_to_pinned_count() {
        let b = Lattice::new(LatticeSpec::cube(2, 2)).unwrap();
        let r = influence_ratio(&b, b.vertex_at(&[0, 0]).unwrap(), 1_000_000).unwrap();
        let h = r.histogram.unwrap();
        assert_eq!(h.values().sum::<u64>().to_string(), r.pinned);
        assert!(r.ratio_f64 > 0.0 && r.ratio_f64 < 1.0);
        // Every cutset size is a multiple of 2d.
        assert!(h.keys().all(|&c| c % 4 == 0 && c >= 12));
    }
}
