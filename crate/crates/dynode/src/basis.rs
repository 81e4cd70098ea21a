//! Enumeration of the conserved single-trigger sector.
//!
//! A pattern of excitations on the tree carries the layer-weighted charge
//! `Σ_q n_q / 2^(layer(q) - 1)`. Every avalanche kernel trades one parent
//! excitation (weight `1/2^(j-1)`) for two child excitations (weight
//! `2 / 2^j`), so the charge is conserved exactly. A single trigger on the
//! root starts in the charge-1 sector, whose dimension obeys
//! `D(L) = D(L-1)² + 1` with `D(1) = 1`.
//!
//! States are ordered recursively: index 1 is the root-only excitation, and
//! state `(m-1)·D(L-1) + n + 1` is the composition of the *right* subtree in
//! its state `m` with the *left* subtree in its state `n` (root unexcited).
//! This module exposes the ordered enumeration, the inverse index map, an
//! exhaustive oracle for small trees, and the diagonal Pauli-z representation
//! that stays inside the sector.

use std::collections::{HashMap, HashSet};

use nalgebra::DVector;
use num_rational::Ratio;

use crate::network::{check_layers, layer_of_index, MAX_LAYERS};
use crate::{Error, Result};

/// Largest tree the exhaustive enumeration oracle will scan (2^15 patterns).
pub const MAX_BRUTE_FORCE_LAYERS: u32 = 4;

/// An excitation pattern over the whole tree, packed into a `u64`.
///
/// Bit `q - 1` is set iff qubit `q` (heap index) is excited. Six layers need
/// 63 bits, so one word always suffices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationPattern(u64);

impl OccupationPattern {
    /// The all-zero (vacuum) pattern.
    pub const VACUUM: Self = Self(0);

    /// Pattern with only qubit `q` excited.
    pub fn single(q: usize) -> Self {
        assert!(q >= 1 && q <= 64, "qubit index {q} out of pattern range");
        Self(1 << (q - 1))
    }

    /// Raw bits (bit `q - 1` ⇔ qubit `q`).
    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn from_bits(bits: u64) -> Self {
        Self(bits)
    }

    /// Is qubit `q` excited?
    pub fn is_occupied(self, q: usize) -> bool {
        debug_assert!(q >= 1);
        self.0 >> (q - 1) & 1 == 1
    }

    /// Number of excited qubits.
    pub fn excitation_count(self) -> u32 {
        self.0.count_ones()
    }

    /// Heap indices of the excited qubits, ascending.
    pub fn occupied_qubits(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let q = bits.trailing_zeros() as usize + 1;
            bits &= bits - 1;
            Some(q)
        })
    }

    /// Render as a bitstring with qubit 1 leftmost, e.g. `0110000` for an
    /// excitation on qubits 2 and 3 of a three-layer tree.
    pub fn bitstring(self, qubit_count: usize) -> String {
        (1..=qubit_count)
            .map(|q| if self.is_occupied(q) { '1' } else { '0' })
            .collect()
    }

    /// Parse the [`bitstring`](Self::bitstring) format.
    pub fn from_bitstring(s: &str) -> Result<Self> {
        let mut bits = 0u64;
        for (i, c) in s.chars().enumerate() {
            match c {
                '1' => bits |= 1 << i,
                '0' => {}
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "bitstring may contain only 0/1, found {other:?}"
                    )))
                }
            }
        }
        Ok(Self(bits))
    }
}

impl std::fmt::Display for OccupationPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let n = 64 - self.0.leading_zeros() as usize;
        write!(f, "{}", self.bitstring(n.max(1)))
    }
}

/// Layer-weighted charge `Σ_q n_q / 2^(layer(q) - 1)` as an exact rational.
pub fn conserved_charge(pattern: OccupationPattern, layers: u32) -> Ratio<u64> {
    Ratio::new(charge_numerator(pattern, layers), 1u64 << (layers - 1))
}

/// Charge in units of `1 / 2^(L-1)`: integer arithmetic, no rounding.
fn charge_numerator(pattern: OccupationPattern, layers: u32) -> u64 {
    pattern
        .occupied_qubits()
        .map(|q| 1u64 << (layers - layer_of_index(q)))
        .sum()
}

/// Sector dimension from the recurrence `D(1) = 1`, `D(L) = D(L-1)² + 1`.
///
/// Exact for every `L` the type can hold; overflows `u128` (and panics) at
/// `L = 9`. The sizes this crate can actually enumerate are guarded
/// separately at `L <= 6`.
pub fn dimension(layers: u32) -> u128 {
    assert!(layers >= 1, "layer count must be at least 1");
    let mut d: u128 = 1;
    for _ in 1..layers {
        d = d
            .checked_mul(d)
            .and_then(|sq| sq.checked_add(1))
            .expect("sector dimension overflows u128");
    }
    d
}

/// The ordered charge-1 sector of an `L`-layer tree.
///
/// Construction is single-threaded; the result is immutable and shareable.
/// When the vacuum slot is enabled, the all-zero pattern occupies one extra
/// amplitude slot *after* the `D` sector states, so basis indices are the
/// same with or without it.
#[derive(Debug, Clone)]
pub struct ReducedBasis {
    layers: u32,
    states: Vec<OccupationPattern>,
    index: HashMap<u64, u32>,
    include_vacuum: bool,
}

impl ReducedBasis {
    /// Enumerate the charge-1 sector in recursive order.
    pub fn enumerate(layers: u32) -> Result<Self> {
        Self::build(layers, false)
    }

    /// Enumerate the sector and reserve one extra, dynamically decoupled
    /// amplitude slot for the vacuum (needed by Holevo-information runs).
    pub fn enumerate_with_vacuum(layers: u32) -> Result<Self> {
        Self::build(layers, true)
    }

    fn build(layers: u32, include_vacuum: bool) -> Result<Self> {
        if layers > MAX_LAYERS {
            return Err(Error::ResourceGuard(format!(
                "enumeration is limited to {MAX_LAYERS} layers, got {layers}"
            )));
        }
        check_layers(layers)?;

        // Canonical pattern lists per layer count, composed bottom-up. The
        // sub-bases of both subtrees share one canonical list; embedding
        // rewrites local heap indices into the global tree.
        let mut canon: Vec<OccupationPattern> = vec![OccupationPattern::single(1)];
        for _ in 1..layers {
            let left: Vec<u64> = canon.iter().map(|p| embed(p.0, 2)).collect();
            let right: Vec<u64> = canon.iter().map(|p| embed(p.0, 3)).collect();
            let d = canon.len();
            let mut next = Vec::with_capacity(d * d + 1);
            next.push(OccupationPattern::single(1));
            for r in &right {
                for l in &left {
                    next.push(OccupationPattern(r | l));
                }
            }
            canon = next;
        }

        let mut index = HashMap::with_capacity(canon.len());
        for (k, p) in canon.iter().enumerate() {
            index.insert(p.0, k as u32);
        }
        debug_assert_eq!(index.len(), canon.len());

        Ok(ReducedBasis {
            layers,
            states: canon,
            index,
            include_vacuum,
        })
    }

    pub fn layers(&self) -> u32 {
        self.layers
    }

    pub fn qubit_count(&self) -> usize {
        (1 << self.layers) - 1
    }

    /// Sector dimension `D` (excludes the vacuum slot).
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Amplitude-vector length: `D`, plus one if the vacuum slot is enabled.
    pub fn slot_count(&self) -> usize {
        self.states.len() + usize::from(self.include_vacuum)
    }

    pub fn has_vacuum(&self) -> bool {
        self.include_vacuum
    }

    /// Amplitude slot of the vacuum, when enabled (always the last slot).
    pub fn vacuum_slot(&self) -> Option<usize> {
        self.include_vacuum.then_some(self.states.len())
    }

    /// Sector states in recursive order (index 0 = root-only excitation).
    pub fn states(&self) -> &[OccupationPattern] {
        &self.states
    }

    pub fn state(&self, k: usize) -> OccupationPattern {
        self.states[k]
    }

    /// Index of `pattern` in the sector, if it belongs to it.
    pub fn index_of(&self, pattern: OccupationPattern) -> Option<usize> {
        self.index.get(&pattern.0).map(|&k| k as usize)
    }

    /// Pattern stored at an amplitude slot; `None` marks the vacuum slot.
    pub fn slot_pattern(&self, slot: usize) -> Option<OccupationPattern> {
        if slot < self.states.len() {
            Some(self.states[slot])
        } else {
            None
        }
    }

    /// Diagonal of the Pauli-z operator of qubit `q` over all amplitude
    /// slots: +1 where `q` is excited, -1 elsewhere (vacuum included).
    pub fn sigma_z_diagonal(&self, q: usize) -> Result<DVector<f64>> {
        if q == 0 || q > self.qubit_count() {
            return Err(Error::InvalidArgument(format!(
                "qubit index {q} outside 1..={}",
                self.qubit_count()
            )));
        }
        let mut diag = DVector::from_element(self.slot_count(), -1.0);
        for (k, p) in self.states.iter().enumerate() {
            if p.is_occupied(q) {
                diag[k] = 1.0;
            }
        }
        Ok(diag)
    }
}

/// Rewrite a canonical subtree pattern (local heap indices) onto the global
/// tree, placing the subtree root at global index `root`.
///
/// A local index `s` with depth `d = floor(log2 s)` becomes
/// `(root << d) | (s - 2^d)`: the path below the subtree root is kept, the
/// leading 1 is replaced by the root's own path.
fn embed(pattern: u64, root: u64) -> u64 {
    let mut out = 0u64;
    let mut bits = pattern;
    while bits != 0 {
        let s = bits.trailing_zeros() as u64 + 1;
        let d = u64::ilog2(s);
        let g = (root << d) | (s - (1 << d));
        out |= 1 << (g - 1);
        bits &= bits - 1;
    }
    out
}

/// Exhaustively scan all `2^(2^L - 1)` patterns for charge exactly 1.
///
/// The independent oracle for [`ReducedBasis::enumerate`]; limited to
/// `L <= 4` (32 768 candidates).
pub fn brute_force_enumerate(layers: u32) -> Result<HashSet<OccupationPattern>> {
    check_layers(layers)?;
    if layers > MAX_BRUTE_FORCE_LAYERS {
        return Err(Error::ResourceGuard(format!(
            "exhaustive enumeration is limited to {MAX_BRUTE_FORCE_LAYERS} layers, got {layers}"
        )));
    }
    let qubits = (1u32 << layers) - 1;
    let target = 1u64 << (layers - 1);
    Ok((0..(1u64 << qubits))
        .map(OccupationPattern)
        .filter(|&p| charge_numerator(p, layers) == target)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dimension_sequence() {
        let expected: [u128; 6] = [1, 2, 5, 26, 677, 458_330];
        for (l, want) in (1..=6).zip(expected) {
            assert_eq!(dimension(l), want, "D({l})");
        }
    }

    #[test]
    fn two_layer_states_in_order() {
        let basis = ReducedBasis::enumerate(2).unwrap();
        let strings: Vec<String> = basis.states().iter().map(|p| p.bitstring(3)).collect();
        assert_eq!(strings, vec!["100", "011"]);
    }

    #[test]
    fn three_layer_states_in_recursive_order() {
        let basis = ReducedBasis::enumerate(3).unwrap();
        let strings: Vec<String> = basis.states().iter().map(|p| p.bitstring(7)).collect();
        assert_eq!(
            strings,
            vec!["1000000", "0110000", "0011100", "0100011", "0001111"]
        );
    }

    #[test]
    fn one_layer_basis() {
        let basis = ReducedBasis::enumerate(1).unwrap();
        assert_eq!(basis.dim(), 1);
        assert_eq!(basis.state(0), OccupationPattern::single(1));
    }

    #[test]
    fn enumeration_matches_brute_force_up_to_four_layers() {
        for layers in 1..=4 {
            let basis = ReducedBasis::enumerate(layers).unwrap();
            let oracle = brute_force_enumerate(layers).unwrap();
            assert_eq!(basis.dim() as u128, dimension(layers), "L={layers}");
            let enumerated: HashSet<_> = basis.states().iter().copied().collect();
            assert_eq!(enumerated, oracle, "L={layers}");
        }
    }

    #[test]
    fn brute_force_counts() {
        assert_eq!(brute_force_enumerate(2).unwrap().len(), 2);
        assert_eq!(brute_force_enumerate(3).unwrap().len(), 5);
        assert_eq!(brute_force_enumerate(4).unwrap().len(), 26);
        assert!(brute_force_enumerate(5).is_err());
    }

    #[test]
    fn charges() {
        assert_eq!(
            conserved_charge(OccupationPattern::VACUUM, 3),
            Ratio::new(0, 1)
        );
        assert_eq!(
            conserved_charge(OccupationPattern::single(1), 3),
            Ratio::new(1, 1)
        );
        // 1/2 + 1/4 + 1/4
        let p = OccupationPattern::from_bitstring("0011100").unwrap();
        assert_eq!(conserved_charge(p, 3), Ratio::new(1, 1));
        // a non-sector pattern: 1/4
        let q = OccupationPattern::from_bitstring("0001000").unwrap();
        assert_eq!(conserved_charge(q, 3), Ratio::new(1, 4));
    }

    #[test]
    fn every_enumerated_state_has_unit_charge() {
        for layers in 1..=5 {
            let basis = ReducedBasis::enumerate(layers).unwrap();
            for &p in basis.states() {
                assert_eq!(conserved_charge(p, layers), Ratio::new(1, 1));
            }
        }
    }

    #[test]
    fn index_map_inverts_enumeration() {
        let basis = ReducedBasis::enumerate(4).unwrap();
        for (k, &p) in basis.states().iter().enumerate() {
            assert_eq!(basis.index_of(p), Some(k));
        }
        assert_eq!(basis.index_of(OccupationPattern::VACUUM), None);
    }

    #[test]
    fn sigma_z_diagonals_small() {
        let basis = ReducedBasis::enumerate(2).unwrap();
        let z1 = basis.sigma_z_diagonal(1).unwrap();
        assert_eq!(z1.as_slice(), &[1.0, -1.0]);
        let z2 = basis.sigma_z_diagonal(2).unwrap();
        assert_eq!(z2.as_slice(), &[-1.0, 1.0]);

        let basis3 = ReducedBasis::enumerate(3).unwrap();
        let z = basis3.sigma_z_diagonal(1).unwrap();
        assert_eq!(z.as_slice(), &[1.0, -1.0, -1.0, -1.0, -1.0]);
    }

    #[test]
    fn vacuum_slot_is_appended_and_negative_under_sigma_z() {
        let basis = ReducedBasis::enumerate_with_vacuum(3).unwrap();
        assert_eq!(basis.dim(), 5);
        assert_eq!(basis.slot_count(), 6);
        assert_eq!(basis.vacuum_slot(), Some(5));
        assert_eq!(basis.slot_pattern(5), None);
        let z = basis.sigma_z_diagonal(1).unwrap();
        assert_eq!(z[5], -1.0);
    }

    #[test]
    fn six_layer_count_matches_recurrence() {
        let basis = ReducedBasis::enumerate(6).unwrap();
        assert_eq!(basis.dim(), 458_330);
        assert_eq!(basis.state(0), OccupationPattern::single(1));
        // spot-check the inverse map on a few entries
        for k in [0usize, 1, 677, 458_329] {
            assert_eq!(basis.index_of(basis.state(k)), Some(k));
        }
    }

    #[test]
    fn enumerate_guards() {
        assert!(ReducedBasis::enumerate(0).is_err());
        assert!(matches!(
            ReducedBasis::enumerate(7),
            Err(Error::ResourceGuard(_))
        ));
    }

    proptest! {
        // The diagonal z-representation takes only the values ±1, and the
        // sign agrees with the occupancy bit of the probed qubit.
        #[test]
        fn sigma_z_values_are_signs(layers in 1u32..=4, qraw in 1usize..16) {
            let basis = ReducedBasis::enumerate(layers).unwrap();
            let q = (qraw - 1) % basis.qubit_count() + 1;
            let z = basis.sigma_z_diagonal(q).unwrap();
            for (k, &v) in z.iter().enumerate() {
                prop_assert!(v == 1.0 || v == -1.0);
                let occupied = basis.state(k).is_occupied(q);
                prop_assert_eq!(v == 1.0, occupied);
            }
        }

        // Charge is invariant under any single kernel firing.
        #[test]
        fn kernel_firing_preserves_charge(layers in 2u32..=4, seed: u64) {
            let basis = ReducedBasis::enumerate(layers).unwrap();
            let p = basis.state(seed as usize % basis.dim());
            // fire the first armed kernel, if any
            let non_leaf = (1usize << (layers - 1)) - 1;
            for parent in 1..=non_leaf {
                let (l, r) = (2 * parent, 2 * parent + 1);
                if p.is_occupied(parent) && !p.is_occupied(l) && !p.is_occupied(r) {
                    let fired = OccupationPattern::from_bits(
                        p.bits() ^ (1 << (parent - 1)) ^ (1 << (l - 1)) ^ (1 << (r - 1)),
                    );
                    prop_assert_eq!(
                        conserved_charge(fired, layers),
                        conserved_charge(p, layers)
                    );
                }
            }
        }
    }
}
