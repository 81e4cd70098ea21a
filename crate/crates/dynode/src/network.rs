//! The layered binary-tree qubit layout and its avalanche kernels.
//!
//! Qubits are heap-indexed: the root is 1 and qubit `q` has children `2q` and
//! `2q + 1`, so layer `j` holds indices `2^(j-1) .. 2^j - 1`. Every non-leaf
//! qubit owns one [`Kernel`], the three-qubit interaction that annihilates an
//! excitation on the parent while creating one on each child (plus the
//! Hermitian conjugate).

use rand::Rng;

use crate::{Error, Result};

/// Maximum tree depth. Six layers is already a 458 330-dimensional reduced
/// sector; anything deeper is out of desk-scale reach.
pub const MAX_LAYERS: u32 = 6;

/// One avalanche interaction vertex: parent ↔ (left, right) one layer below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    /// Heap index of the parent qubit.
    pub parent: usize,
    /// Heap index of the left child (`2 * parent`).
    pub left: usize,
    /// Heap index of the right child (`2 * parent + 1`).
    pub right: usize,
    /// Coupling strength, in units of the global `g`.
    pub coupling: f64,
}

/// A layered binary tree of qubits with one kernel per non-leaf qubit.
///
/// Immutable after construction; share freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNetwork {
    layers: u32,
    kernels: Vec<Kernel>,
}

impl TreeNetwork {
    /// Build a tree with `layers` layers and a uniform kernel coupling `g`.
    ///
    /// `g > 0` sets the time unit `1/g`; `1 <= layers <= 6`.
    pub fn build(layers: u32, g: f64) -> Result<Self> {
        check_coupling(g)?;
        Self::with_couplings(layers, || g)
    }

    /// Build a tree whose kernel couplings are drawn independently and
    /// uniformly from `[g(1 - jitter), g(1 + jitter)]`.
    ///
    /// `jitter = 0` reproduces [`TreeNetwork::build`]. Requires
    /// `0 <= jitter < 1` so that couplings stay positive.
    pub fn build_jittered<R: Rng>(layers: u32, g: f64, jitter: f64, rng: &mut R) -> Result<Self> {
        check_coupling(g)?;
        if !(0.0..1.0).contains(&jitter) {
            return Err(Error::InvalidArgument(format!(
                "coupling jitter must lie in [0, 1), got {jitter}"
            )));
        }
        if jitter == 0.0 {
            return Self::with_couplings(layers, || g);
        }
        let lo = g * (1.0 - jitter);
        let hi = g * (1.0 + jitter);
        Self::with_couplings(layers, || rng.gen_range(lo..=hi))
    }

    fn with_couplings<F>(layers: u32, mut coupling: F) -> Result<Self>
    where
        F: FnMut() -> f64,
    {
        check_layers(layers)?;
        let non_leaf = (1usize << (layers - 1)) - 1;
        let kernels = (1..=non_leaf)
            .map(|parent| Kernel {
                parent,
                left: 2 * parent,
                right: 2 * parent + 1,
                coupling: coupling(),
            })
            .collect();
        Ok(TreeNetwork { layers, kernels })
    }

    /// Number of layers `L`.
    pub fn layers(&self) -> u32 {
        self.layers
    }

    /// Total qubit count `2^L - 1`.
    pub fn qubit_count(&self) -> usize {
        (1 << self.layers) - 1
    }

    /// Kernels in parent-index order (one per non-leaf qubit).
    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    /// Number of kernels, `2^(L-1) - 1`.
    pub fn kernel_count(&self) -> usize {
        self.kernels.len()
    }

    /// Layer of qubit `q` (1-based; the root is layer 1).
    pub fn layer_of(&self, q: usize) -> Result<u32> {
        if q == 0 || q > self.qubit_count() {
            return Err(Error::InvalidArgument(format!(
                "qubit index {q} outside 1..={}",
                self.qubit_count()
            )));
        }
        Ok(layer_of_index(q))
    }

    /// Leftmost qubit of `layer`: heap index `2^(layer-1)`.
    pub fn left_edge_qubit(&self, layer: u32) -> Result<usize> {
        if layer == 0 || layer > self.layers {
            return Err(Error::InvalidArgument(format!(
                "layer {layer} outside 1..={}",
                self.layers
            )));
        }
        Ok(1 << (layer - 1))
    }

    /// Heap indices of all qubits in `layer`.
    pub fn layer_qubits(&self, layer: u32) -> Result<std::ops::RangeInclusive<usize>> {
        if layer == 0 || layer > self.layers {
            return Err(Error::InvalidArgument(format!(
                "layer {layer} outside 1..={}",
                self.layers
            )));
        }
        Ok((1 << (layer - 1))..=((1 << layer) - 1))
    }
}

/// Layer of heap index `q` without range checking: `floor(log2 q) + 1`.
pub(crate) fn layer_of_index(q: usize) -> u32 {
    debug_assert!(q >= 1);
    q.ilog2() + 1
}

pub(crate) fn check_layers(layers: u32) -> Result<()> {
    if layers == 0 || layers > MAX_LAYERS {
        return Err(Error::InvalidArgument(format!(
            "layer count must lie in 1..={MAX_LAYERS}, got {layers}"
        )));
    }
    Ok(())
}

fn check_coupling(g: f64) -> Result<()> {
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "coupling g must be finite and positive, got {g}"
        )));
    }
    Ok(())
}
