//! Exact state evolution under piecewise-constant Hamiltonians.
//!
//! Each constant-disorder interval is diagonalized once; propagation over any
//! sub-span is then a change to the eigenbasis, a phase multiplication, and a
//! change back — exact up to linear algebra, with no integrator tolerances.
//! Backward evolution applies the exact adjoints of the same interval
//! propagators in reverse order, which is what out-of-time-order quantities
//! need: the same disorder realization forward and backward.
//!
//! For trees of up to three layers a brute-force oracle evolves the full
//! `2^(2^L - 1)`-dimensional space directly from the three-qubit interaction,
//! with no sector reduction; tests use it to cross-check everything else.

use nalgebra::{Complex, DMatrix, DVector};

use crate::basis::{OccupationPattern, ReducedBasis};
use crate::disorder::DisorderSchedule;
use crate::hamiltonian::{HamiltonianMatrix, DENSE_GUARD};
use crate::network::TreeNetwork;
use crate::{Error, Result};

type C64 = Complex<f64>;

/// Depth limit of the unreduced-space oracle (128 dimensions at 3 layers).
pub const FULL_SPACE_MAX_LAYERS: u32 = 3;

/// A normalized amplitude vector over the slots of a [`ReducedBasis`],
/// stamped with the time it refers to (units of `1/g`).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<C64>,
    time: f64,
}

impl StateVector {
    /// Wrap raw amplitudes at time `time`. No normalization is applied.
    pub fn from_amplitudes(amplitudes: DVector<C64>, time: f64) -> Self {
        StateVector { amplitudes, time }
    }

    /// Unit amplitude on sector state `index` at `t = 0`.
    pub fn basis_state(basis: &ReducedBasis, index: usize) -> Self {
        assert!(index < basis.dim(), "basis index out of range");
        let mut amplitudes = DVector::zeros(basis.slot_count());
        amplitudes[index] = C64::new(1.0, 0.0);
        StateVector {
            amplitudes,
            time: 0.0,
        }
    }

    /// The trigger state: root qubit excited, everything else empty.
    pub fn top_excitation(basis: &ReducedBasis) -> Self {
        Self::basis_state(basis, 0)
    }

    /// The equal superposition `(|vacuum⟩ + |trigger⟩)/√2`.
    ///
    /// Requires the vacuum slot; this is the canonical input for
    /// Holevo-information runs.
    pub fn vacuum_superposition(basis: &ReducedBasis) -> Result<Self> {
        let vac = basis.vacuum_slot().ok_or_else(|| {
            Error::InvalidArgument(
                "vacuum superposition requires a basis built with the vacuum slot".into(),
            )
        })?;
        let mut amplitudes = DVector::zeros(basis.slot_count());
        let w = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amplitudes[0] = w;
        amplitudes[vac] = w;
        Ok(StateVector {
            amplitudes,
            time: 0.0,
        })
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Inner product `⟨self|other⟩`.
    pub fn overlap(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Apply the diagonal Pauli-z of qubit `q` (flips amplitude signs on
    /// slots where `q` is unexcited). Time stamp is unchanged.
    pub fn apply_sigma_z(&self, basis: &ReducedBasis, q: usize) -> Result<Self> {
        let diag = basis.sigma_z_diagonal(q)?;
        if diag.len() != self.amplitudes.len() {
            return Err(Error::InvalidArgument(
                "state and basis slot counts differ".into(),
            ));
        }
        let amplitudes =
            DVector::from_fn(self.amplitudes.len(), |m, _| self.amplitudes[m] * diag[m]);
        Ok(StateVector {
            amplitudes,
            time: self.time,
        })
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of one interval
/// Hamiltonian: the cached propagator for that interval.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

/// Dense symmetric eigendecomposition, eigenvalues ascending.
pub fn eig(h: &HamiltonianMatrix) -> Result<EigenDecomposition> {
    if h.dim() > DENSE_GUARD {
        return Err(Error::ResourceGuard(format!(
            "diagonalization limited to dimension {DENSE_GUARD}, got {}",
            h.dim()
        )));
    }
    Ok(eig_dense(&h.to_dense()?))
}

fn eig_dense(dense: &DMatrix<f64>) -> EigenDecomposition {
    let se = dense.clone().symmetric_eigen();
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = DVector::from_fn(n, |k, _| se.eigenvalues[order[k]]);
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        vectors.set_column(k, &se.eigenvectors.column(src));
    }
    EigenDecomposition { values, vectors }
}

impl EigenDecomposition {
    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Apply `exp(-i H dt)` (or its adjoint) to complex amplitudes.
    ///
    /// The eigenvectors are real, so the transform splits into two real
    /// matrix-vector products each way.
    fn propagate(&self, amps: &DVector<C64>, dt: f64, adjoint: bool) -> DVector<C64> {
        let n = amps.len();
        let re = amps.map(|c| c.re);
        let im = amps.map(|c| c.im);
        let are = self.vectors.tr_mul(&re);
        let aim = self.vectors.tr_mul(&im);
        let sign = if adjoint { 1.0 } else { -1.0 };
        let mut cre = DVector::zeros(n);
        let mut cim = DVector::zeros(n);
        for k in 0..n {
            let theta = sign * self.values[k] * dt;
            let (s, c) = theta.sin_cos();
            cre[k] = are[k] * c - aim[k] * s;
            cim[k] = are[k] * s + aim[k] * c;
        }
        let out_re = &self.vectors * cre;
        let out_im = &self.vectors * cim;
        DVector::from_fn(n, |m, _| C64::new(out_re[m], out_im[m]))
    }
}

/// Cached interval propagators for one disorder realization.
///
/// Construction diagonalizes every interval Hamiltonian once (a single
/// matrix for ideal/static schedules). Evolution is pure and reentrant;
/// clone-free sharing across threads is safe.
#[derive(Debug, Clone)]
pub struct Propagator {
    schedule: DisorderSchedule,
    caches: Vec<EigenDecomposition>,
    dim: usize,
}

impl Propagator {
    pub fn new(
        network: &TreeNetwork,
        basis: &ReducedBasis,
        schedule: &DisorderSchedule,
    ) -> Result<Self> {
        if network.qubit_count() != schedule.qubit_count()
            || basis.qubit_count() != network.qubit_count()
        {
            return Err(Error::InvalidArgument(
                "network, basis, and schedule sizes do not agree".into(),
            ));
        }
        let caches: Vec<EigenDecomposition> = (0..schedule.interval_count())
            .map(|k| {
                let h = HamiltonianMatrix::assemble(basis, network, schedule.interval_detunings(k));
                eig(&h)
            })
            .collect::<Result<_>>()?;
        Ok(Propagator {
            schedule: schedule.clone(),
            caches,
            dim: basis.slot_count(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t_max(&self) -> f64 {
        self.schedule.t_max()
    }

    pub fn schedule(&self) -> &DisorderSchedule {
        &self.schedule
    }

    /// Interval cache `k` (exposed for spectral diagnostics).
    pub fn interval_eigensystem(&self, k: usize) -> &EigenDecomposition {
        &self.caches[k]
    }

    /// Evolve forward to `to_time >= state.time()`.
    pub fn evolve(&self, state: &StateVector, to_time: f64) -> Result<StateVector> {
        if to_time < state.time() {
            return Err(Error::InvalidArgument(format!(
                "cannot evolve forward from t = {} to t = {to_time}; use evolve_adjoint",
                state.time()
            )));
        }
        self.check_dim(state)?;
        let segs = self.schedule.segments(state.time(), to_time)?;
        let mut amps = state.amplitudes().clone();
        for (k, dt) in segs {
            amps = self.caches[k].propagate(&amps, dt, false);
        }
        Ok(StateVector::from_amplitudes(amps, to_time))
    }

    /// Evolve backward to `to_time <= state.time()` under the same
    /// realization, applying adjoint interval propagators in reverse order.
    pub fn evolve_adjoint(&self, state: &StateVector, to_time: f64) -> Result<StateVector> {
        if to_time > state.time() {
            return Err(Error::InvalidArgument(format!(
                "cannot evolve backward from t = {} to t = {to_time}; use evolve",
                state.time()
            )));
        }
        self.check_dim(state)?;
        let segs = self.schedule.segments(to_time, state.time())?;
        let mut amps = state.amplitudes().clone();
        for &(k, dt) in segs.iter().rev() {
            amps = self.caches[k].propagate(&amps, dt, true);
        }
        Ok(StateVector::from_amplitudes(amps, to_time))
    }

    fn check_dim(&self, state: &StateVector) -> Result<()> {
        if state.amplitudes().len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "state has {} slots, propagator expects {}",
                state.amplitudes().len(),
                self.dim
            )));
        }
        Ok(())
    }
}

/* Full-space oracle ***********************************************************/

fn check_full_space(layers: u32) -> Result<()> {
    if layers > FULL_SPACE_MAX_LAYERS {
        return Err(Error::ResourceGuard(format!(
            "full-space evolution limited to {FULL_SPACE_MAX_LAYERS} layers, got {layers}"
        )));
    }
    Ok(())
}

/// The rotating-frame Hamiltonian on the complete `2^(2^L - 1)`-dimensional
/// space, built directly from the three-qubit kernels with no sector
/// reduction. Basis index = packed occupation bits.
pub fn full_space_hamiltonian(network: &TreeNetwork, detunings: &[f64]) -> Result<DMatrix<f64>> {
    check_full_space(network.layers())?;
    assert_eq!(detunings.len(), network.qubit_count());
    let n = network.qubit_count();
    let dim = 1usize << n;
    let mut h = DMatrix::zeros(dim, dim);
    for p in 0..dim {
        let mut e = 0.0;
        for q in 1..=n {
            if p >> (q - 1) & 1 == 1 {
                e += detunings[q - 1];
            }
        }
        h[(p, p)] = e;
        for kernel in network.kernels() {
            let armed = p >> (kernel.parent - 1) & 1 == 1
                && p >> (kernel.left - 1) & 1 == 0
                && p >> (kernel.right - 1) & 1 == 0;
            if armed {
                let fired = p
                    ^ (1 << (kernel.parent - 1))
                    ^ (1 << (kernel.left - 1))
                    ^ (1 << (kernel.right - 1));
                h[(fired, p)] += kernel.coupling;
                h[(p, fired)] += kernel.coupling;
            }
        }
    }
    Ok(h)
}

/// Diagonal Pauli-z of qubit `q` over the full space.
pub fn full_space_sigma_z(q: usize, qubit_count: usize) -> DVector<f64> {
    let dim = 1usize << qubit_count;
    DVector::from_fn(dim, |p, _| if p >> (q - 1) & 1 == 1 { 1.0 } else { -1.0 })
}

/// Evolve `initial` (a single occupation pattern) to time `t` in the full
/// space under `schedule`. Brute force; guarded at three layers.
pub fn full_space_evolve(
    network: &TreeNetwork,
    schedule: &DisorderSchedule,
    t: f64,
    initial: OccupationPattern,
) -> Result<DVector<C64>> {
    check_full_space(network.layers())?;
    let dim = 1usize << network.qubit_count();
    let mut amps = DVector::zeros(dim);
    amps[initial.bits() as usize] = C64::new(1.0, 0.0);
    Ok(full_space_evolve_amplitudes(network, schedule, 0.0, t, amps)?)
}

/// Full-space piecewise evolution of arbitrary amplitudes from `from` to
/// `to >= from`.
pub fn full_space_evolve_amplitudes(
    network: &TreeNetwork,
    schedule: &DisorderSchedule,
    from: f64,
    to: f64,
    amps: DVector<C64>,
) -> Result<DVector<C64>> {
    check_full_space(network.layers())?;
    let segs = schedule.segments(from, to)?;
    let mut caches: std::collections::HashMap<usize, EigenDecomposition> =
        std::collections::HashMap::new();
    let mut amps = amps;
    for (k, dt) in segs {
        let cache = caches.entry(k).or_insert_with(|| {
            let h = full_space_hamiltonian(network, schedule.interval_detunings(k))
                .expect("guard already checked");
            eig_dense(&h)
        });
        amps = cache.propagate(&amps, dt, false);
    }
    Ok(amps)
}

/// Lift a reduced-sector state to full-space amplitudes (vacuum slot maps to
/// the all-zero pattern).
pub fn embed_in_full_space(basis: &ReducedBasis, state: &StateVector) -> Result<DVector<C64>> {
    check_full_space(basis.layers())?;
    let dim = 1usize << basis.qubit_count();
    let mut full = DVector::zeros(dim);
    for (slot, &a) in state.amplitudes().iter().enumerate() {
        let idx = match basis.slot_pattern(slot) {
            Some(p) => p.bits() as usize,
            None => 0,
        };
        full[idx] = a;
    }
    Ok(full)
}
