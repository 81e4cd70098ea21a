//! Deterministic multi-realization orchestration.
//!
//! A run is fully specified by its [`EnsembleConfig`]: realization `i` always
//! uses the random stream `(master_seed, i)`, realizations are independent
//! work items (parallelized with rayon), and aggregation walks them in index
//! order — so outputs are bit-identical under any thread schedule.

use rayon::prelude::*;

use crate::basis::ReducedBasis;
use crate::disorder::{realization_rng, DisorderMode, DisorderSchedule};
use crate::network::TreeNetwork;
use crate::observables::{
    arrival_time_within, holevo_series_multi, occupation_layer_series, otoc_series, time_grid,
    ObservableSeries, SeriesKind,
};
use crate::propagator::{Propagator, StateVector};
use crate::{Error, Result};

/// OTOC level that counts as "the information has arrived".
pub const ARRIVAL_THRESHOLD: f64 = -0.5;

/// Which observable pipeline an ensemble runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservableKind {
    /// Per-layer mean occupations.
    Occupation,
    /// OTOC against the source qubit.
    Otoc,
    /// Holevo information of the source operation.
    Holevo,
}

impl std::fmt::Display for ObservableKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ObservableKind::Occupation => write!(f, "occupation"),
            ObservableKind::Otoc => write!(f, "otoc"),
            ObservableKind::Holevo => write!(f, "holevo"),
        }
    }
}

/// Which qubits to probe (ignored by occupation runs, which are per layer).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeSet {
    /// The leftmost qubit of every layer (heap index `2^(layer-1)`).
    LeftEdge,
    /// Every qubit of the tree.
    All,
    /// One specific qubit.
    Qubit(usize),
}

impl std::str::FromStr for ProbeSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left-edge" => Ok(ProbeSet::LeftEdge),
            "all" => Ok(ProbeSet::All),
            other => {
                if let Some(k) = other.strip_prefix("qubit:") {
                    let q: usize = k.parse().map_err(|_| {
                        Error::InvalidArgument(format!("bad qubit index in probe spec {other:?}"))
                    })?;
                    Ok(ProbeSet::Qubit(q))
                } else {
                    Err(Error::InvalidArgument(format!(
                        "unknown probe spec {other:?} (expected left-edge|all|qubit:<k>)"
                    )))
                }
            }
        }
    }
}

impl std::fmt::Display for ProbeSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProbeSet::LeftEdge => write!(f, "left-edge"),
            ProbeSet::All => write!(f, "all"),
            ProbeSet::Qubit(q) => write!(f, "qubit:{q}"),
        }
    }
}

/// Everything a reproducible ensemble run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub layers: u32,
    pub mode: DisorderMode,
    /// Disorder strength σ in units of `g`.
    pub sigma: f64,
    /// Resampling interval for dynamic disorder, units of `1/g`.
    pub resample_dt: f64,
    /// Global coupling; sets the unit system.
    pub g: f64,
    /// Relative half-width of optional per-kernel coupling randomization.
    pub g_jitter: f64,
    pub t_max: f64,
    pub n_steps: usize,
    pub master_seed: u64,
    pub realizations: u32,
    pub probes: ProbeSet,
    pub observable: ObservableKind,
    /// Source / operated-on qubit for OTOC and Holevo runs.
    pub source_qubit: usize,
    /// Keep a vacuum amplitude slot (implied by Holevo runs).
    pub vacuum: bool,
    /// Early-stage window for arrival scans; `None` derives it from the
    /// ideal model (1.6 × the ideal last-layer arrival time).
    pub t_window: Option<f64>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            layers: 4,
            mode: DisorderMode::Ideal,
            sigma: 0.0,
            resample_dt: 0.0,
            g: 1.0,
            g_jitter: 0.0,
            t_max: 50.0,
            n_steps: 500,
            master_seed: 1,
            realizations: 10,
            probes: ProbeSet::LeftEdge,
            observable: ObservableKind::Occupation,
            source_qubit: 1,
            vacuum: false,
            t_window: None,
        }
    }
}

impl EnsembleConfig {
    fn validate(&self) -> Result<()> {
        if self.realizations < 1 {
            return Err(Error::InvalidArgument(
                "at least one realization is required".into(),
            ));
        }
        if self.n_steps < 2 {
            return Err(Error::InvalidArgument(
                "at least two grid points are required".into(),
            ));
        }
        Ok(())
    }

    /// The tree this configuration describes. Jittered couplings draw from a
    /// dedicated stream so they are fixed per run (the device, not the
    /// environment) and independent of the disorder realizations.
    pub fn build_network(&self) -> Result<TreeNetwork> {
        if self.g_jitter == 0.0 {
            TreeNetwork::build(self.layers, self.g)
        } else {
            let mut rng = realization_rng(self.master_seed, u32::MAX);
            TreeNetwork::build_jittered(self.layers, self.g, self.g_jitter, &mut rng)
        }
    }

    fn needs_vacuum(&self) -> bool {
        self.vacuum || self.observable == ObservableKind::Holevo
    }

    /// The basis this configuration runs in.
    pub fn build_basis(&self) -> Result<ReducedBasis> {
        if self.needs_vacuum() {
            ReducedBasis::enumerate_with_vacuum(self.layers)
        } else {
            ReducedBasis::enumerate(self.layers)
        }
    }

    /// Resolve the probe qubits (left-edge by default).
    pub fn resolve_probes(&self, network: &TreeNetwork) -> Result<Vec<usize>> {
        match self.probes {
            ProbeSet::LeftEdge => (1..=self.layers)
                .map(|l| network.left_edge_qubit(l))
                .collect(),
            ProbeSet::All => Ok((1..=network.qubit_count()).collect()),
            ProbeSet::Qubit(q) => {
                network.layer_of(q)?;
                Ok(vec![q])
            }
        }
    }
}

/// The series of every realization plus their pointwise average.
#[derive(Debug, Clone)]
pub struct EnsembleOutcome {
    /// `[realization][probe]`, realization index order.
    pub per_realization: Vec<Vec<ObservableSeries>>,
    /// One averaged series per probe, with sample standard deviations.
    pub averaged: Vec<ObservableSeries>,
}

fn with_realization(err: Error, realization: u32) -> Error {
    match err {
        Error::InvalidArgument(s) => {
            Error::InvalidArgument(format!("realization {realization}: {s}"))
        }
        Error::ResourceGuard(s) => Error::ResourceGuard(format!("realization {realization}: {s}")),
        Error::Numerical(s) => Error::Numerical(format!("realization {realization}: {s}")),
        Error::Io(e) => Error::Io(e),
    }
}

/// Series of one realization, one entry per probe (per layer for
/// occupation runs).
fn realization_series(
    config: &EnsembleConfig,
    network: &TreeNetwork,
    basis: &ReducedBasis,
    probes: &[usize],
    times: &[f64],
    realization: u32,
) -> Result<Vec<ObservableSeries>> {
    let schedule = DisorderSchedule::build(
        network,
        config.mode,
        config.sigma,
        config.resample_dt,
        config.t_max,
        config.master_seed,
        realization,
    )?;
    let prop = Propagator::new(network, basis, &schedule)?;
    match config.observable {
        ObservableKind::Occupation => {
            let initial = StateVector::top_excitation(basis);
            occupation_layer_series(basis, &prop, &initial, times)
        }
        ObservableKind::Otoc => {
            let initial = StateVector::top_excitation(basis);
            probes
                .iter()
                .map(|&probe| {
                    otoc_series(basis, &prop, &initial, probe, config.source_qubit, times)
                })
                .collect()
        }
        ObservableKind::Holevo => {
            let initial = StateVector::vacuum_superposition(basis)?;
            holevo_series_multi(basis, &prop, &initial, config.source_qubit, probes, times)
        }
    }
}

/// Run every realization (in parallel) and average pointwise.
pub fn run(config: &EnsembleConfig) -> Result<EnsembleOutcome> {
    config.validate()?;
    let network = config.build_network()?;
    let basis = config.build_basis()?;
    let probes = config.resolve_probes(&network)?;
    let times = time_grid(config.t_max, config.n_steps)?;

    let per_realization: Vec<Vec<ObservableSeries>> = (0..config.realizations)
        .into_par_iter()
        .map(|i| {
            realization_series(config, &network, &basis, &probes, &times, i)
                .map_err(|e| with_realization(e, i))
        })
        .collect::<Result<_>>()?;

    let averaged = average_series(&per_realization);
    Ok(EnsembleOutcome {
        per_realization,
        averaged,
    })
}

/// Pointwise mean and sample standard deviation (n-1), walking realizations
/// in index order.
fn average_series(per_realization: &[Vec<ObservableSeries>]) -> Vec<ObservableSeries> {
    let n = per_realization.len();
    let n_probes = per_realization[0].len();
    let mut averaged = Vec::with_capacity(n_probes);
    for p in 0..n_probes {
        let template = &per_realization[0][p];
        let len = template.values.len();
        let mut mean = vec![0.0; len];
        for real in per_realization {
            for (m, v) in mean.iter_mut().zip(&real[p].values) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut std = vec![0.0; len];
        if n > 1 {
            for real in per_realization {
                for (s, (v, m)) in std.iter_mut().zip(real[p].values.iter().zip(&mean)) {
                    *s += (v - m) * (v - m);
                }
            }
            for s in &mut std {
                *s = (*s / (n - 1) as f64).sqrt();
            }
        }
        averaged.push(ObservableSeries {
            kind: template.kind,
            probe: template.probe,
            source: template.source,
            times: template.times.clone(),
            values: mean,
            std: Some(std),
            count: n,
            seed: template.seed,
            realization: None,
        });
    }
    averaged
}

/// Per-realization OTOC arrival times at the last layer, restricted to the
/// early-stage window.
///
/// The window keeps information reflected off the boundary from being
/// mistaken for a first arrival. `config.t_window` overrides the default of
/// 1.6 × the ideal-model arrival time.
pub fn arrival_scatter(config: &EnsembleConfig) -> Result<Vec<(u32, Option<f64>)>> {
    if config.observable != ObservableKind::Otoc {
        return Err(Error::InvalidArgument(
            "arrival scatter is defined for OTOC runs".into(),
        ));
    }
    config.validate()?;
    let network = config.build_network()?;
    let basis = config.build_basis()?;
    let probe = network.left_edge_qubit(config.layers)?;
    let times = time_grid(config.t_max, config.n_steps)?;

    let t_window = match config.t_window {
        Some(w) => w,
        None => ideal_arrival_window(config, &network, &basis, probe, &times)?,
    };

    let arrivals: Vec<(u32, Option<f64>)> = (0..config.realizations)
        .into_par_iter()
        .map(|i| -> Result<(u32, Option<f64>)> {
            let series = realization_series(config, &network, &basis, &[probe], &times, i)
                .map_err(|e| with_realization(e, i))?;
            Ok((i, arrival_time_within(&series[0], ARRIVAL_THRESHOLD, t_window)))
        })
        .collect::<Result<_>>()?;
    Ok(arrivals)
}

fn ideal_arrival_window(
    config: &EnsembleConfig,
    network: &TreeNetwork,
    basis: &ReducedBasis,
    probe: usize,
    times: &[f64],
) -> Result<f64> {
    let schedule = DisorderSchedule::build(
        network,
        DisorderMode::Ideal,
        0.0,
        0.0,
        config.t_max,
        config.master_seed,
        0,
    )?;
    let prop = Propagator::new(network, basis, &schedule)?;
    let initial = StateVector::top_excitation(basis);
    let series = otoc_series(basis, &prop, &initial, probe, config.source_qubit, times)?;
    Ok(match arrival_time_within(&series, ARRIVAL_THRESHOLD, f64::INFINITY) {
        Some(t) => (1.6 * t).min(config.t_max),
        None => config.t_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small_otoc_config() -> EnsembleConfig {
        EnsembleConfig {
            layers: 3,
            mode: DisorderMode::Static,
            sigma: 3.0,
            t_max: 10.0,
            n_steps: 41,
            master_seed: 7,
            realizations: 4,
            observable: ObservableKind::Otoc,
            ..EnsembleConfig::default()
        }
    }

    #[test]
    fn single_realization_average_is_identity() {
        let config = EnsembleConfig {
            realizations: 1,
            ..small_otoc_config()
        };
        let out = run(&config).unwrap();
        assert_eq!(out.per_realization.len(), 1);
        for (avg, raw) in out.averaged.iter().zip(&out.per_realization[0]) {
            assert_eq!(avg.values, raw.values);
            assert!(avg.std.as_ref().unwrap().iter().all(|&s| s == 0.0));
        }
    }

    #[test]
    fn ideal_mode_realizations_are_identical() {
        let config = EnsembleConfig {
            mode: DisorderMode::Ideal,
            sigma: 0.0,
            realizations: 3,
            ..small_otoc_config()
        };
        let out = run(&config).unwrap();
        for r in &out.per_realization[1..] {
            for (a, b) in r.iter().zip(&out.per_realization[0]) {
                assert_eq!(a.values, b.values);
            }
        }
    }

    #[test]
    fn repeated_runs_are_bit_identical() {
        let config = small_otoc_config();
        let a = run(&config).unwrap();
        let b = run(&config).unwrap();
        for (x, y) in a.averaged.iter().zip(&b.averaged) {
            assert_eq!(x.values, y.values);
            assert_eq!(x.std, y.std);
        }
    }

    #[test]
    fn averaged_otoc_starts_at_one() {
        let out = run(&small_otoc_config()).unwrap();
        for series in &out.averaged {
            assert_abs_diff_eq!(series.values[0], 1.0, epsilon = 1e-9);
            assert_eq!(series.count, 4);
            assert!(series.realization.is_none());
        }
    }

    #[test]
    fn left_edge_probes_are_layer_heads() {
        let config = small_otoc_config();
        let network = config.build_network().unwrap();
        assert_eq!(config.resolve_probes(&network).unwrap(), vec![1, 2, 4]);
        let all = EnsembleConfig {
            probes: ProbeSet::All,
            ..config
        };
        assert_eq!(all.resolve_probes(&network).unwrap().len(), 7);
        let one = EnsembleConfig {
            probes: ProbeSet::Qubit(5),
            ..all
        };
        assert_eq!(one.resolve_probes(&network).unwrap(), vec![5]);
        let bad = EnsembleConfig {
            probes: ProbeSet::Qubit(9),
            ..one
        };
        assert!(bad.resolve_probes(&network).is_err());
    }

    #[test]
    fn ideal_arrival_times_agree_across_realizations() {
        let config = EnsembleConfig {
            layers: 3,
            mode: DisorderMode::Ideal,
            sigma: 0.0,
            t_max: 10.0,
            n_steps: 201,
            realizations: 3,
            observable: ObservableKind::Otoc,
            ..EnsembleConfig::default()
        };
        let arrivals = arrival_scatter(&config).unwrap();
        assert_eq!(arrivals.len(), 3);
        let first = arrivals[0].1;
        assert!(first.is_some());
        for (_, t) in &arrivals {
            assert_eq!(*t, first);
        }
    }

    #[test]
    fn probe_spec_parsing() {
        assert_eq!("left-edge".parse::<ProbeSet>().unwrap(), ProbeSet::LeftEdge);
        assert_eq!("all".parse::<ProbeSet>().unwrap(), ProbeSet::All);
        assert_eq!("qubit:5".parse::<ProbeSet>().unwrap(), ProbeSet::Qubit(5));
        assert!("qubit:x".parse::<ProbeSet>().is_err());
        assert!("everything".parse::<ProbeSet>().is_err());
    }
}
