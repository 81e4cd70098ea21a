//! Diagnostics of information spreading: occupations, out-of-time-order
//! correlators, single-qubit marginals, entropies, Holevo information, and
//! arrival times.
//!
//! The OTOC between the probe `W = σ^z_i(t)` and the source `V = σ^z_j(0)` is
//! evaluated as the overlap of two histories,
//!
//! ```text
//! F(t) = ⟨L|Z_j|R⟩,   |L⟩ = U†(t) Z_i U(t) |ψ⟩,   |R⟩ = U†(t) Z_i U(t) Z_j |ψ⟩,
//! ```
//!
//! with the same disorder realization forward and backward. Both operators
//! are Hermitian and diagonal, so `F` is real up to roundoff; the imaginary
//! part is checked against 1e-9 and the real part is reported.

use nalgebra::{Complex, Matrix2};

use crate::basis::ReducedBasis;
use crate::propagator::{Propagator, StateVector};
use crate::{Error, Result};

type C64 = Complex<f64>;

/// Tolerance on quantities that must vanish by Hermiticity.
const IM_TOL: f64 = 1e-9;

/// What a series of values measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    /// Mean excitation of a layer, in `[0, 1]`.
    Occupation,
    /// `Re F_ij(t)`, in `[-1, 1]`.
    Otoc,
    /// Squared commutator `2(1 - Re F)`, in `[0, 4]`.
    Commutator,
    /// Holevo information in bits, in `[0, 1]`.
    Holevo,
}

impl std::fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeriesKind::Occupation => write!(f, "occupation"),
            SeriesKind::Otoc => write!(f, "otoc"),
            SeriesKind::Commutator => write!(f, "commutator"),
            SeriesKind::Holevo => write!(f, "holevo"),
        }
    }
}

/// Time-gridded observable values with realization metadata.
#[derive(Debug, Clone)]
pub struct ObservableSeries {
    pub kind: SeriesKind,
    /// Probe index: a qubit for OTOC/Holevo, a layer for occupations.
    pub probe: usize,
    /// Source qubit (OTOC) or operated-on qubit (Holevo), when applicable.
    pub source: Option<usize>,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Pointwise sample standard deviation, present on ensemble averages.
    pub std: Option<Vec<f64>>,
    /// Number of realizations aggregated into `values` (1 for raw series).
    pub count: usize,
    pub seed: u64,
    /// Realization index; `None` marks an ensemble average.
    pub realization: Option<u32>,
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    if times[0] < 0.0 || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(
            "time grid must be nonnegative and nondecreasing".into(),
        ));
    }
    Ok(())
}

fn check_initial(initial: &StateVector) -> Result<()> {
    if initial.time() != 0.0 {
        return Err(Error::InvalidArgument(
            "series must start from a state at t = 0".into(),
        ));
    }
    Ok(())
}

/// The uniform output grid: `n_steps` points spanning `[0, t_max]`.
pub fn time_grid(t_max: f64, n_steps: usize) -> Result<Vec<f64>> {
    if !(t_max.is_finite() && t_max > 0.0) || n_steps < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid requires t_max > 0 and n_steps >= 2, got t_max = {t_max}, n_steps = {n_steps}"
        )));
    }
    Ok((0..n_steps)
        .map(|k| t_max * k as f64 / (n_steps - 1) as f64)
        .collect())
}

/// Mean excitation `⟨(1 + σ^z_q)/2⟩` of one qubit.
pub fn mean_occupation(basis: &ReducedBasis, state: &StateVector, q: usize) -> Result<f64> {
    if q == 0 || q > basis.qubit_count() {
        return Err(Error::InvalidArgument(format!(
            "qubit index {q} outside 1..={}",
            basis.qubit_count()
        )));
    }
    Ok(state
        .amplitudes()
        .iter()
        .take(basis.dim())
        .zip(basis.states())
        .filter(|(_, p)| p.is_occupied(q))
        .map(|(a, _)| a.norm_sqr())
        .sum())
}

/// Mean excitation averaged over the qubits of one layer.
pub fn layer_occupation(basis: &ReducedBasis, state: &StateVector, layer: u32) -> Result<f64> {
    if layer == 0 || layer > basis.layers() {
        return Err(Error::InvalidArgument(format!(
            "layer {layer} outside 1..={}",
            basis.layers()
        )));
    }
    let lo = 1usize << (layer - 1);
    let hi = (1usize << layer) - 1;
    let mut total = 0.0;
    for q in lo..=hi {
        total += mean_occupation(basis, state, q)?;
    }
    Ok(total / (hi - lo + 1) as f64)
}

/// Per-layer mean occupations on a time grid (one series per layer).
pub fn occupation_layer_series(
    basis: &ReducedBasis,
    prop: &Propagator,
    initial: &StateVector,
    times: &[f64],
) -> Result<Vec<ObservableSeries>> {
    check_grid(times)?;
    check_initial(initial)?;
    let layers = basis.layers();
    let mut values = vec![Vec::with_capacity(times.len()); layers as usize];
    let mut psi = initial.clone();
    for &t in times {
        psi = prop.evolve(&psi, t)?;
        for layer in 1..=layers {
            values[layer as usize - 1].push(layer_occupation(basis, &psi, layer)?);
        }
    }
    let schedule = prop.schedule();
    Ok(values
        .into_iter()
        .enumerate()
        .map(|(idx, vals)| ObservableSeries {
            kind: SeriesKind::Occupation,
            probe: idx + 1,
            source: None,
            times: times.to_vec(),
            values: vals,
            std: None,
            count: 1,
            seed: schedule.master_seed(),
            realization: Some(schedule.realization()),
        })
        .collect())
}

/// Out-of-time-order correlator `Re F_ij(t)` between probe `i` and source `j`
/// on a time grid.
///
/// `initial` must sit at `t = 0`. Costs two backward sweeps per grid point;
/// at desk scale this is the accepted trade for a bookkeeping-free evaluator.
pub fn otoc_series(
    basis: &ReducedBasis,
    prop: &Propagator,
    initial: &StateVector,
    probe: usize,
    source: usize,
    times: &[f64],
) -> Result<ObservableSeries> {
    check_grid(times)?;
    check_initial(initial)?;
    let mut fwd_plain = initial.clone();
    let mut fwd_kicked = initial.apply_sigma_z(basis, source)?;
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        fwd_plain = prop.evolve(&fwd_plain, t)?;
        fwd_kicked = prop.evolve(&fwd_kicked, t)?;
        let left = prop.evolve_adjoint(&fwd_plain.apply_sigma_z(basis, probe)?, 0.0)?;
        let right = prop.evolve_adjoint(&fwd_kicked.apply_sigma_z(basis, probe)?, 0.0)?;
        let f = left.overlap(&right.apply_sigma_z(basis, source)?);
        if f.im.abs() >= IM_TOL {
            return Err(Error::Numerical(format!(
                "OTOC acquired an imaginary part {} at t = {t}",
                f.im
            )));
        }
        values.push(f.re);
    }
    let schedule = prop.schedule();
    Ok(ObservableSeries {
        kind: SeriesKind::Otoc,
        probe,
        source: Some(source),
        times: times.to_vec(),
        values,
        std: None,
        count: 1,
        seed: schedule.master_seed(),
        realization: Some(schedule.realization()),
    })
}

/// Squared commutator `C(t) = 2 (1 - Re F(t))` derived from an OTOC series.
pub fn commutator_series(otoc: &ObservableSeries) -> Result<ObservableSeries> {
    if otoc.kind != SeriesKind::Otoc {
        return Err(Error::InvalidArgument(
            "commutator is derived from an OTOC series".into(),
        ));
    }
    let mut out = otoc.clone();
    out.kind = SeriesKind::Commutator;
    out.values = otoc.values.iter().map(|f| 2.0 * (1.0 - f)).collect();
    out.std = otoc.std.as_ref().map(|s| s.iter().map(|x| 2.0 * x).collect());
    Ok(out)
}

/// Single-qubit marginal `ρ_q = Tr_{≠q} |ψ⟩⟨ψ|` as a 2×2 matrix in the
/// `{|0⟩, |1⟩}` basis.
///
/// Off-diagonal terms pair amplitude slots whose patterns differ only in
/// qubit `q`; inside the charge-1 sector that can only be the trigger state
/// against the vacuum slot.
pub fn reduced_density(
    basis: &ReducedBasis,
    state: &StateVector,
    q: usize,
) -> Result<Matrix2<C64>> {
    if q == 0 || q > basis.qubit_count() {
        return Err(Error::InvalidArgument(format!(
            "qubit index {q} outside 1..={}",
            basis.qubit_count()
        )));
    }
    let amps = state.amplitudes();
    if amps.len() != basis.slot_count() {
        return Err(Error::InvalidArgument(
            "state and basis slot counts differ".into(),
        ));
    }
    let mut p0 = 0.0;
    let mut p1 = 0.0;
    let mut coh = C64::new(0.0, 0.0); // ⟨1|ρ|0⟩
    for slot in 0..amps.len() {
        match basis.slot_pattern(slot) {
            Some(p) if p.is_occupied(q) => {
                p1 += amps[slot].norm_sqr();
                let partner = crate::basis::OccupationPattern::from_bits(
                    p.bits() & !(1u64 << (q - 1)),
                );
                let partner_slot = if partner == crate::basis::OccupationPattern::VACUUM {
                    basis.vacuum_slot()
                } else {
                    basis.index_of(partner)
                };
                if let Some(ps) = partner_slot {
                    coh += amps[slot] * amps[ps].conj();
                }
            }
            _ => p0 += amps[slot].norm_sqr(),
        }
    }
    Ok(Matrix2::new(
        C64::new(p0, 0.0),
        coh.conj(),
        coh,
        C64::new(p1, 0.0),
    ))
}

/// Von Neumann entropy of a 2×2 density matrix, in bits.
///
/// Eigenvalues below `-1e-9` are a hard numerical error; tiny negatives are
/// clamped to zero and `0·log 0 := 0`.
pub fn von_neumann_entropy(rho: &Matrix2<C64>) -> Result<f64> {
    let a = rho[(0, 0)].re;
    let d = rho[(1, 1)].re;
    let b = rho[(0, 1)];
    let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    let mid = 0.5 * (a + d);
    let mut s = 0.0;
    for lambda in [mid - half_gap, mid + half_gap] {
        if lambda < -1e-9 {
            return Err(Error::Numerical(format!(
                "density matrix has eigenvalue {lambda}"
            )));
        }
        let l = lambda.clamp(0.0, 1.0);
        if l > 0.0 {
            s -= l * l.log2();
        }
    }
    Ok(s)
}

/// Holevo information χ(t) between the branch evolved from `initial` and the
/// branch evolved from `Z_op · initial`, read out on each probe qubit.
///
/// Requires the vacuum slot (the canonical input is
/// [`StateVector::vacuum_superposition`]); both branches evolve under the
/// same realization. One series per probe.
pub fn holevo_series_multi(
    basis: &ReducedBasis,
    prop: &Propagator,
    initial: &StateVector,
    op_qubit: usize,
    probes: &[usize],
    times: &[f64],
) -> Result<Vec<ObservableSeries>> {
    check_grid(times)?;
    check_initial(initial)?;
    if !basis.has_vacuum() {
        return Err(Error::InvalidArgument(
            "Holevo information requires a basis built with the vacuum slot".into(),
        ));
    }
    let mut branch_a = initial.clone();
    let mut branch_b = initial.apply_sigma_z(basis, op_qubit)?;
    let mut values = vec![Vec::with_capacity(times.len()); probes.len()];
    for &t in times {
        branch_a = prop.evolve(&branch_a, t)?;
        branch_b = prop.evolve(&branch_b, t)?;
        for (slot, &probe) in probes.iter().enumerate() {
            let rho_a = reduced_density(basis, &branch_a, probe)?;
            let rho_b = reduced_density(basis, &branch_b, probe)?;
            let mix = (rho_a + rho_b) * C64::new(0.5, 0.0);
            let chi = von_neumann_entropy(&mix)?
                - 0.5 * (von_neumann_entropy(&rho_a)? + von_neumann_entropy(&rho_b)?);
            if chi < -IM_TOL {
                return Err(Error::Numerical(format!(
                    "Holevo information {chi} below zero at t = {t}"
                )));
            }
            values[slot].push(chi.clamp(0.0, 1.0));
        }
    }
    let schedule = prop.schedule();
    Ok(probes
        .iter()
        .zip(values)
        .map(|(&probe, vals)| ObservableSeries {
            kind: SeriesKind::Holevo,
            probe,
            source: Some(op_qubit),
            times: times.to_vec(),
            values: vals,
            std: None,
            count: 1,
            seed: schedule.master_seed(),
            realization: Some(schedule.realization()),
        })
        .collect())
}

/// Single-probe wrapper around [`holevo_series_multi`].
pub fn holevo_series(
    basis: &ReducedBasis,
    prop: &Propagator,
    initial: &StateVector,
    op_qubit: usize,
    probe: usize,
    times: &[f64],
) -> Result<ObservableSeries> {
    Ok(holevo_series_multi(basis, prop, initial, op_qubit, &[probe], times)?
        .pop()
        .expect("one probe in, one series out"))
}

/// First grid time at which an OTOC series reaches `threshold` (values are
/// compared as `value <= threshold`); `None` if it never does.
pub fn arrival_time(series: &ObservableSeries, threshold: f64) -> Option<f64> {
    arrival_time_within(series, threshold, f64::INFINITY)
}

/// [`arrival_time`] restricted to grid times `t <= t_window`.
pub fn arrival_time_within(
    series: &ObservableSeries,
    threshold: f64,
    t_window: f64,
) -> Option<f64> {
    series
        .times
        .iter()
        .zip(&series.values)
        .take_while(|(&t, _)| t <= t_window)
        .find(|(_, &v)| v <= threshold)
        .map(|(&t, _)| t)
}
