//! The reduced-sector Hamiltonian for one constant-disorder interval.
//!
//! In the rotating frame only detunings survive on the diagonal:
//! `E_m = Σ_{q excited in m} Δ_q`. Off-diagonal elements connect pairs of
//! sector states that differ by a single kernel firing and carry that
//! kernel's coupling. Couplings are real, so the matrix is real symmetric;
//! it is stored as diagonal plus edge list (at most one edge per armed
//! kernel per state).

use nalgebra::{Complex, DMatrix, DVector};

use crate::basis::ReducedBasis;
use crate::network::TreeNetwork;
use crate::{Error, Result};

type C64 = Complex<f64>;

/// Largest dimension for which dense reconstruction / diagonalization is
/// allowed. Five layers (677 states) is the intended dense workload.
pub const DENSE_GUARD: usize = 1500;

/// One allowed transition: `parent_state` holds the kernel's parent
/// excitation, `child_state` the two child excitations, all other qubits
/// equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelEdge {
    /// Basis index of the parent-excited state.
    pub parent_state: usize,
    /// Basis index of the children-excited state.
    pub child_state: usize,
    /// Index into [`TreeNetwork::kernels`] of the kernel that fires.
    pub kernel: usize,
}

/// All kernel edges of the sector graph.
///
/// `(m, n)` appears iff the two states differ exactly by one kernel firing;
/// each unordered pair is listed once, oriented from the parent-excited side.
pub fn kernel_edges(basis: &ReducedBasis, network: &TreeNetwork) -> Vec<KernelEdge> {
    assert_eq!(
        basis.layers(),
        network.layers(),
        "basis and network layer counts must agree"
    );
    let mut edges = Vec::new();
    for (m, &p) in basis.states().iter().enumerate() {
        for (kidx, kernel) in network.kernels().iter().enumerate() {
            let armed = p.is_occupied(kernel.parent)
                && !p.is_occupied(kernel.left)
                && !p.is_occupied(kernel.right);
            if !armed {
                continue;
            }
            let fired = p.bits()
                ^ (1 << (kernel.parent - 1))
                ^ (1 << (kernel.left - 1))
                ^ (1 << (kernel.right - 1));
            let n = basis
                .index_of(crate::basis::OccupationPattern::from_bits(fired))
                .expect("kernel firing preserves the charge, so the image is in the sector");
            edges.push(KernelEdge {
                parent_state: m,
                child_state: n,
                kernel: kidx,
            });
        }
    }
    edges
}

/// Real symmetric Hamiltonian on the amplitude slots of a [`ReducedBasis`].
///
/// Immutable after assembly. The vacuum slot, when present, has a zero row
/// and column.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    dim: usize,
    diagonal: DVector<f64>,
    /// `(m, n, coupling)` with `m < n`; applied symmetrically.
    edges: Vec<(usize, usize, f64)>,
}

impl HamiltonianMatrix {
    /// Assemble the interval Hamiltonian from per-qubit detunings
    /// (slot `q - 1` of `detunings` holds qubit `q`).
    pub fn assemble(basis: &ReducedBasis, network: &TreeNetwork, detunings: &[f64]) -> Self {
        assert_eq!(
            detunings.len(),
            network.qubit_count(),
            "one detuning per qubit required"
        );
        let dim = basis.slot_count();
        let mut diagonal = DVector::zeros(dim);
        for (m, p) in basis.states().iter().enumerate() {
            diagonal[m] = p.occupied_qubits().map(|q| detunings[q - 1]).sum();
        }
        // vacuum slot (if any) keeps E = 0 and acquires no edges
        let edges = kernel_edges(basis, network)
            .into_iter()
            .map(|e| {
                let g = network.kernels()[e.kernel].coupling;
                let (a, b) = (e.parent_state, e.child_state);
                if a < b {
                    (a, b, g)
                } else {
                    (b, a, g)
                }
            })
            .collect();
        HamiltonianMatrix {
            dim,
            diagonal,
            edges,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn diagonal(&self) -> &DVector<f64> {
        &self.diagonal
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Matrix-vector product `H v`.
    pub fn apply(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        if v.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "vector length {} does not match dimension {}",
                v.len(),
                self.dim
            )));
        }
        let mut out = DVector::from_fn(self.dim, |m, _| v[m] * self.diagonal[m]);
        for &(m, n, g) in &self.edges {
            out[m] += v[n] * g;
            out[n] += v[m] * g;
        }
        Ok(out)
    }

    /// Energy expectation `⟨v|H|v⟩` of a normalized state.
    pub fn expectation(&self, v: &DVector<C64>) -> Result<f64> {
        let hv = self.apply(v)?;
        Ok(v.dotc(&hv).re)
    }

    /// Dense reconstruction, guarded at [`DENSE_GUARD`].
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        if self.dim > DENSE_GUARD {
            return Err(Error::ResourceGuard(format!(
                "dense reconstruction limited to dimension {DENSE_GUARD}, got {}",
                self.dim
            )));
        }
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            m[(i, i)] = self.diagonal[i];
        }
        for &(a, b, g) in &self.edges {
            m[(a, b)] += g;
            m[(b, a)] += g;
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{OccupationPattern, ReducedBasis};
    use crate::disorder::{realization_rng, sample_vertex_mismatches, mismatches_to_detunings};
    use approx::assert_abs_diff_eq;
    use std::collections::HashSet;

    /// Pairwise oracle: scan all state pairs for the one-kernel-firing
    /// relation, independent of the armed-kernel walk in `kernel_edges`.
    fn pairwise_edge_scan(basis: &ReducedBasis, network: &TreeNetwork) -> HashSet<(usize, usize)> {
        let mut found = HashSet::new();
        for m in 0..basis.dim() {
            for n in (m + 1)..basis.dim() {
                let (pm, pn) = (basis.state(m), basis.state(n));
                for k in network.kernels() {
                    let mask =
                        (1u64 << (k.parent - 1)) | (1 << (k.left - 1)) | (1 << (k.right - 1));
                    if pm.bits() ^ pn.bits() != mask {
                        continue;
                    }
                    let parent_in_m = pm.is_occupied(k.parent)
                        && !pm.is_occupied(k.left)
                        && !pm.is_occupied(k.right);
                    let parent_in_n = pn.is_occupied(k.parent)
                        && !pn.is_occupied(k.left)
                        && !pn.is_occupied(k.right);
                    if parent_in_m || parent_in_n {
                        found.insert((m, n));
                    }
                }
            }
        }
        found
    }

    #[test]
    fn two_layer_edge() {
        let net = TreeNetwork::build(2, 1.0).unwrap();
        let basis = ReducedBasis::enumerate(2).unwrap();
        let edges = kernel_edges(&basis, &net);
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].parent_state, 0);
        assert_eq!(edges[0].child_state, 1);
        assert_eq!(edges[0].kernel, 0);
    }

    #[test]
    fn three_layer_edges_match_pairwise_scan() {
        let net = TreeNetwork::build(3, 1.0).unwrap();
        let basis = ReducedBasis::enumerate(3).unwrap();
        let edges = kernel_edges(&basis, &net);
        let pairs: HashSet<(usize, usize)> = edges
            .iter()
            .map(|e| {
                let (a, b) = (e.parent_state, e.child_state);
                (a.min(b), a.max(b))
            })
            .collect();
        assert_eq!(pairs, pairwise_edge_scan(&basis, &net));
        // 0-based: (0,1),(1,2),(1,3),(2,4),(3,4)
        assert_eq!(pairs.len(), 5);
        assert!(pairs.contains(&(0, 1)));
        assert!(pairs.contains(&(1, 2)));
        assert!(pairs.contains(&(1, 3)));
        assert!(pairs.contains(&(2, 4)));
        assert!(pairs.contains(&(3, 4)));
    }

    #[test]
    fn four_layer_edges_match_pairwise_scan() {
        let net = TreeNetwork::build(4, 1.0).unwrap();
        let basis = ReducedBasis::enumerate(4).unwrap();
        let edges = kernel_edges(&basis, &net);
        let pairs: HashSet<(usize, usize)> = edges
            .iter()
            .map(|e| {
                let (a, b) = (e.parent_state, e.child_state);
                (a.min(b), a.max(b))
            })
            .collect();
        assert_eq!(pairs.len(), edges.len(), "no duplicate edges");
        assert_eq!(pairs, pairwise_edge_scan(&basis, &net));
    }

    #[test]
    fn vacuum_slot_has_no_edges_and_zero_row() {
        let net = TreeNetwork::build(3, 1.0).unwrap();
        let basis = ReducedBasis::enumerate_with_vacuum(3).unwrap();
        let vac = basis.vacuum_slot().unwrap();
        let h = HamiltonianMatrix::assemble(&basis, &net, &vec![0.3; 7]);
        assert!(h.edges().iter().all(|&(m, n, _)| m != vac && n != vac));
        assert_eq!(h.diagonal()[vac], 0.0);

        let mut unit = DVector::zeros(h.dim());
        unit[vac] = C64::new(1.0, 0.0);
        let out = h.apply(&unit).unwrap();
        assert_eq!(out.norm(), 0.0);
    }

    #[test]
    fn two_layer_ideal_matrix() {
        let net = TreeNetwork::build(2, 1.0).unwrap();
        let basis = ReducedBasis::enumerate(2).unwrap();
        let h = HamiltonianMatrix::assemble(&basis, &net, &[0.0, 0.0, 0.0]);
        let dense = h.to_dense().unwrap();
        assert_eq!(dense, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));

        let v = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let hv = h.apply(&v).unwrap();
        assert_eq!(hv[0], C64::new(0.0, 0.0));
        assert_eq!(hv[1], C64::new(1.0, 0.0));
    }

    #[test]
    fn two_layer_detuned_diagonal() {
        let net = TreeNetwork::build(2, 1.0).unwrap();
        let basis = ReducedBasis::enumerate(2).unwrap();
        let h = HamiltonianMatrix::assemble(&basis, &net, &[0.0, 0.0, -2.0]);
        assert_eq!(h.diagonal().as_slice(), &[0.0, -2.0]);
        assert_eq!(h.edges(), &[(0, 1, 1.0)]);
    }

    #[test]
    fn dense_reconstruction_is_exactly_symmetric() {
        let net = TreeNetwork::build(4, 1.0).unwrap();
        let basis = ReducedBasis::enumerate(4).unwrap();
        let mut rng = realization_rng(17, 0);
        let eps = sample_vertex_mismatches(&net, 5.0, &mut rng).unwrap();
        let det = mismatches_to_detunings(&net, &eps);
        let dense = HamiltonianMatrix::assemble(&basis, &net, &det)
            .to_dense()
            .unwrap();
        assert_eq!(dense, dense.transpose());
    }

    #[test]
    fn edge_energy_difference_equals_kernel_mismatch() {
        let net = TreeNetwork::build(4, 1.0).unwrap();
        let basis = ReducedBasis::enumerate(4).unwrap();
        for seed in 0..5 {
            let mut rng = realization_rng(seed, 0);
            let eps = sample_vertex_mismatches(&net, 5.0, &mut rng).unwrap();
            let det = mismatches_to_detunings(&net, &eps);
            let h = HamiltonianMatrix::assemble(&basis, &net, &det);
            for e in kernel_edges(&basis, &net) {
                let gap = h.diagonal()[e.parent_state] - h.diagonal()[e.child_state];
                assert_abs_diff_eq!(gap, eps[e.kernel], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn layer_gauge_shift_moves_diagonal_rigidly() {
        let net = TreeNetwork::build(4, 1.0).unwrap();
        let basis = ReducedBasis::enumerate(4).unwrap();
        let mut rng = realization_rng(3, 0);
        let eps = sample_vertex_mismatches(&net, 5.0, &mut rng).unwrap();
        let det = mismatches_to_detunings(&net, &eps);
        let c = 1.3;
        let shifted: Vec<f64> = det
            .iter()
            .enumerate()
            .map(|(slot, d)| {
                let layer = net.layer_of(slot + 1).unwrap();
                d + c / f64::powi(2.0, layer as i32 - 1)
            })
            .collect();
        let h0 = HamiltonianMatrix::assemble(&basis, &net, &det);
        let h1 = HamiltonianMatrix::assemble(&basis, &net, &shifted);
        // charge-1 sector: every diagonal entry moves by exactly c
        for m in 0..h0.dim() {
            assert_abs_diff_eq!(h1.diagonal()[m] - h0.diagonal()[m], c, epsilon = 1e-12);
        }
        assert_eq!(h0.edges(), h1.edges());
    }

    #[test]
    fn apply_matches_dense_eigendecomposition() {
        let net = TreeNetwork::build(3, 1.0).unwrap();
        let basis = ReducedBasis::enumerate(3).unwrap();
        let mut rng = realization_rng(21, 0);
        let eps = sample_vertex_mismatches(&net, 2.0, &mut rng).unwrap();
        let det = mismatches_to_detunings(&net, &eps);
        let h = HamiltonianMatrix::assemble(&basis, &net, &det);
        let dense = h.to_dense().unwrap();
        let eig = dense.clone().symmetric_eigen();
        for k in 0..h.dim() {
            let v: DVector<C64> = eig.eigenvectors.column(k).map(|x| C64::new(x, 0.0));
            let hv = h.apply(&v).unwrap();
            let resid = (&hv - &v * C64::new(eig.eigenvalues[k], 0.0)).norm();
            assert!(resid < 1e-12, "residual {resid}");
        }
    }

    #[test]
    fn apply_rejects_wrong_length() {
        let net = TreeNetwork::build(2, 1.0).unwrap();
        let basis = ReducedBasis::enumerate(2).unwrap();
        let h = HamiltonianMatrix::assemble(&basis, &net, &[0.0; 3]);
        let v = DVector::zeros(3);
        assert!(h.apply(&v).is_err());
    }

    #[test]
    fn pattern_helper_is_consistent() {
        // guard against bit-order regressions between basis and hamiltonian
        let p = OccupationPattern::from_bitstring("0110000").unwrap();
        assert!(p.is_occupied(2) && p.is_occupied(3) && !p.is_occupied(1));
    }
}
