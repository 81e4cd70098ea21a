//! Detuning schedules realizing per-vertex phase mismatches.
//!
//! The physical disorder variable is the mismatch `ε_v = Δ_parent - Δ_left -
//! Δ_right` of each kernel, drawn uniformly from `[-σ, +σ]`. Per-qubit
//! detunings are a derived gauge choice: the root and every left child are
//! pinned to zero and each right child absorbs its kernel's mismatch, which
//! reproduces every `ε_v` exactly and makes the diagonal unique.
//!
//! Time dependence is piecewise constant: dynamic schedules resample all
//! mismatches independently every `Δt`. Randomness comes from one
//! counter-based stream per `(master_seed, realization)` pair, so ensembles
//! are reproducible and order-independent.

use rand::{distributions::Uniform, Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::network::{layer_of_index, TreeNetwork};
use crate::{Error, Result};

/// Which disorder scenario a schedule realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisorderMode {
    /// No detunings at all.
    Ideal,
    /// One mismatch draw, constant in time.
    Static,
    /// Mismatches redrawn every `resample_dt`.
    Dynamic,
}

impl std::fmt::Display for DisorderMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DisorderMode::Ideal => write!(f, "ideal"),
            DisorderMode::Static => write!(f, "static"),
            DisorderMode::Dynamic => write!(f, "dynamic"),
        }
    }
}

impl std::str::FromStr for DisorderMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(DisorderMode::Ideal),
            "static" => Ok(DisorderMode::Static),
            "dynamic" => Ok(DisorderMode::Dynamic),
            other => Err(Error::InvalidArgument(format!(
                "unknown disorder mode {other:?} (expected ideal|static|dynamic)"
            ))),
        }
    }
}

/// The independent random stream for one disorder realization.
///
/// Streams with different `realization` indices never share draws, so
/// realizations can be generated in any order (or in parallel) with
/// bit-identical results.
pub fn realization_rng(master_seed: u64, realization: u32) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(realization as u64);
    rng
}

/// Draw one mismatch `ε_v ∈ [-σ, +σ]` per kernel, in kernel order.
pub fn sample_vertex_mismatches<R: Rng>(
    network: &TreeNetwork,
    sigma: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "disorder strength must be finite and >= 0, got {sigma}"
        )));
    }
    let dist = Uniform::new_inclusive(-sigma, sigma);
    Ok((0..network.kernel_count()).map(|_| rng.sample(dist)).collect())
}

/// Propagate vertex mismatches to per-qubit detunings.
///
/// Top-down: `Δ_root = 0`; for each kernel, `Δ_left = 0` and
/// `Δ_right = Δ_parent - ε_v`. By construction
/// `Δ_parent - Δ_left - Δ_right = ε_v` exactly.
pub fn mismatches_to_detunings(network: &TreeNetwork, mismatches: &[f64]) -> Vec<f64> {
    assert_eq!(
        mismatches.len(),
        network.kernel_count(),
        "one mismatch per kernel required"
    );
    let mut detunings = vec![0.0; network.qubit_count()];
    // kernels are stored in parent order, which is already top-down
    for (kernel, &eps) in network.kernels().iter().zip(mismatches) {
        detunings[kernel.left - 1] = 0.0;
        detunings[kernel.right - 1] = detunings[kernel.parent - 1] - eps;
    }
    detunings
}

/// Detunings of one constant-disorder interval, with the mismatches that
/// generated them.
#[derive(Debug, Clone, PartialEq)]
struct Interval {
    mismatches: Vec<f64>,
    detunings: Vec<f64>,
}

/// Per-qubit detunings as a piecewise-constant function of time.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderSchedule {
    mode: DisorderMode,
    sigma: f64,
    resample_dt: f64,
    t_max: f64,
    master_seed: u64,
    realization: u32,
    qubit_count: usize,
    kernel_count: usize,
    intervals: Vec<Interval>,
}

impl DisorderSchedule {
    /// Build the schedule for one realization.
    ///
    /// Ideal and static modes have a single interval covering `[0, t_max]`;
    /// dynamic mode samples `ceil(t_max / resample_dt)` independent mismatch
    /// maps. `resample_dt` is ignored outside dynamic mode.
    pub fn build(
        network: &TreeNetwork,
        mode: DisorderMode,
        sigma: f64,
        resample_dt: f64,
        t_max: f64,
        master_seed: u64,
        realization: u32,
    ) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "t_max must be finite and positive, got {t_max}"
            )));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "disorder strength must be finite and >= 0, got {sigma}"
            )));
        }
        if mode == DisorderMode::Dynamic && !(resample_dt.is_finite() && resample_dt > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "dynamic mode requires resample_dt > 0, got {resample_dt}"
            )));
        }

        let mut rng = realization_rng(master_seed, realization);
        let zero = || Interval {
            mismatches: vec![0.0; network.kernel_count()],
            detunings: vec![0.0; network.qubit_count()],
        };
        let sampled = |rng: &mut ChaCha12Rng| -> Result<Interval> {
            let mismatches = sample_vertex_mismatches(network, sigma, rng)?;
            let detunings = mismatches_to_detunings(network, &mismatches);
            Ok(Interval {
                mismatches,
                detunings,
            })
        };

        let intervals = match mode {
            DisorderMode::Ideal => vec![zero()],
            DisorderMode::Static => vec![sampled(&mut rng)?],
            DisorderMode::Dynamic => {
                let n = (t_max / resample_dt).ceil().max(1.0) as usize;
                (0..n).map(|_| sampled(&mut rng)).collect::<Result<_>>()?
            }
        };

        Ok(DisorderSchedule {
            mode,
            sigma,
            resample_dt: if mode == DisorderMode::Dynamic {
                resample_dt
            } else {
                0.0
            },
            t_max,
            master_seed,
            realization,
            qubit_count: network.qubit_count(),
            kernel_count: network.kernel_count(),
            intervals,
        })
    }

    pub fn mode(&self) -> DisorderMode {
        self.mode
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn realization(&self) -> u32 {
        self.realization
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn interval_count(&self) -> usize {
        self.intervals.len()
    }

    /// Index of the constant-disorder interval containing time `t`.
    pub fn interval_index(&self, t: f64) -> usize {
        if self.intervals.len() == 1 {
            0
        } else {
            ((t / self.resample_dt).floor() as usize).min(self.intervals.len() - 1)
        }
    }

    /// End time of interval `k` (the last interval runs to `t_max`).
    fn interval_end(&self, k: usize) -> f64 {
        if self.intervals.len() == 1 || k + 1 == self.intervals.len() {
            self.t_max
        } else {
            (k as f64 + 1.0) * self.resample_dt
        }
    }

    /// Detuning `Δ_q(t)` of qubit `q` (heap index) at time `t`.
    pub fn detuning(&self, q: usize, t: f64) -> f64 {
        self.intervals[self.interval_index(t)].detunings[q - 1]
    }

    /// All per-qubit detunings of interval `k` (slot `q - 1` holds qubit `q`).
    pub fn interval_detunings(&self, k: usize) -> &[f64] {
        &self.intervals[k].detunings
    }

    /// The sampled mismatches of interval `k`, in kernel order.
    pub fn interval_mismatches(&self, k: usize) -> &[f64] {
        &self.intervals[k].mismatches
    }

    /// Mismatch `ε_v(t)` of the kernel at `kernel_idx`.
    pub fn mismatch(&self, kernel_idx: usize, t: f64) -> f64 {
        self.intervals[self.interval_index(t)].mismatches[kernel_idx]
    }

    /// Split `[from, to]` (forward order) into constant-disorder segments,
    /// returned as `(interval index, duration)` pairs.
    pub fn segments(&self, from: f64, to: f64) -> Result<Vec<(usize, f64)>> {
        if !(from >= 0.0 && to >= from) {
            return Err(Error::InvalidArgument(format!(
                "invalid time span [{from}, {to}]"
            )));
        }
        // allow ~1 ulp of headroom at the end of the schedule
        if to > self.t_max * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "time {to} exceeds schedule horizon t_max = {}",
                self.t_max
            )));
        }
        let mut segs = Vec::new();
        let mut cur = from;
        let mut k = self.interval_index(cur);
        while cur < to {
            let end = self.interval_end(k).min(to);
            if end > cur {
                segs.push((k, end - cur));
            }
            cur = end;
            k += 1;
        }
        Ok(segs)
    }

    /// Gauge transform: add `c / 2^(layer(q) - 1)` to every qubit detuning in
    /// every interval. Vertex mismatches are unchanged, so this must not
    /// affect any reported observable.
    pub fn with_layer_shift(&self, c: f64) -> Self {
        let mut shifted = self.clone();
        for interval in &mut shifted.intervals {
            for (slot, d) in interval.detunings.iter_mut().enumerate() {
                let layer = layer_of_index(slot + 1);
                *d += c / f64::powi(2.0, layer as i32 - 1);
            }
        }
        shifted
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::TreeNetwork;
    use approx::assert_abs_diff_eq;

    fn recompute_mismatches(network: &TreeNetwork, detunings: &[f64]) -> Vec<f64> {
        network
            .kernels()
            .iter()
            .map(|k| detunings[k.parent - 1] - detunings[k.left - 1] - detunings[k.right - 1])
            .collect()
    }

    #[test]
    fn zero_sigma_gives_zero_mismatches() {
        let net = TreeNetwork::build(4, 1.0).unwrap();
        let mut rng = realization_rng(1, 0);
        let eps = sample_vertex_mismatches(&net, 0.0, &mut rng).unwrap();
        assert!(eps.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn mismatch_draws_are_bounded_and_deterministic() {
        let net = TreeNetwork::build(4, 1.0).unwrap();
        let sigma = 5.0;
        let mut rng = realization_rng(99, 3);
        let a = sample_vertex_mismatches(&net, sigma, &mut rng).unwrap();
        assert_eq!(a.len(), 7);
        assert!(a.iter().all(|&e| (-sigma..=sigma).contains(&e)));

        let mut rng = realization_rng(99, 3);
        let b = sample_vertex_mismatches(&net, sigma, &mut rng).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn negative_sigma_rejected() {
        let net = TreeNetwork::build(2, 1.0).unwrap();
        let mut rng = realization_rng(0, 0);
        assert!(sample_vertex_mismatches(&net, -1.0, &mut rng).is_err());
    }

    #[test]
    fn detuning_propagation_smallest_tree() {
        let net = TreeNetwork::build(2, 1.0).unwrap();
        let d = mismatches_to_detunings(&net, &[2.0]);
        assert_eq!(d, vec![0.0, 0.0, -2.0]);
    }

    #[test]
    fn zero_mismatches_give_zero_detunings() {
        let net = TreeNetwork::build(4, 1.0).unwrap();
        let d = mismatches_to_detunings(&net, &vec![0.0; 7]);
        assert!(d.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn detunings_reproduce_mismatches_exactly() {
        let net = TreeNetwork::build(5, 1.0).unwrap();
        let mut rng = realization_rng(7, 1);
        let eps = sample_vertex_mismatches(&net, 3.0, &mut rng).unwrap();
        let det = mismatches_to_detunings(&net, &eps);
        assert_eq!(recompute_mismatches(&net, &det), eps);
    }

    #[test]
    fn ideal_schedule_is_all_zero() {
        let net = TreeNetwork::build(3, 1.0).unwrap();
        let s =
            DisorderSchedule::build(&net, DisorderMode::Ideal, 5.0, 0.0, 10.0, 42, 0).unwrap();
        assert_eq!(s.interval_count(), 1);
        for q in 1..=net.qubit_count() {
            assert_eq!(s.detuning(q, 3.7), 0.0);
        }
    }

    #[test]
    fn dynamic_schedule_interval_count_and_independence() {
        let net = TreeNetwork::build(3, 1.0).unwrap();
        let s =
            DisorderSchedule::build(&net, DisorderMode::Dynamic, 5.0, 2.0, 10.0, 42, 0).unwrap();
        assert_eq!(s.interval_count(), 5);
        // all five maps distinct with overwhelming probability
        for k in 1..5 {
            assert_ne!(s.interval_mismatches(0), s.interval_mismatches(k));
        }
        assert_eq!(s.interval_index(0.0), 0);
        assert_eq!(s.interval_index(1.999), 0);
        assert_eq!(s.interval_index(2.0), 1);
        assert_eq!(s.interval_index(10.0), 4);
    }

    #[test]
    fn static_schedule_is_time_independent() {
        let net = TreeNetwork::build(3, 1.0).unwrap();
        let s =
            DisorderSchedule::build(&net, DisorderMode::Static, 5.0, 0.0, 50.0, 11, 2).unwrap();
        assert_eq!(s.interval_count(), 1);
        for q in 1..=net.qubit_count() {
            assert_eq!(s.detuning(q, 0.0), s.detuning(q, 49.9));
        }
    }

    #[test]
    fn same_seed_and_realization_rebuild_identically() {
        let net = TreeNetwork::build(4, 1.0).unwrap();
        let a =
            DisorderSchedule::build(&net, DisorderMode::Dynamic, 5.0, 0.5, 20.0, 9, 4).unwrap();
        let b =
            DisorderSchedule::build(&net, DisorderMode::Dynamic, 5.0, 0.5, 20.0, 9, 4).unwrap();
        assert_eq!(a, b);
        let c =
            DisorderSchedule::build(&net, DisorderMode::Dynamic, 5.0, 0.5, 20.0, 9, 5).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn segments_cover_span_in_order() {
        let net = TreeNetwork::build(2, 1.0).unwrap();
        let s =
            DisorderSchedule::build(&net, DisorderMode::Dynamic, 1.0, 2.0, 10.0, 0, 0).unwrap();
        let segs = s.segments(1.0, 7.0).unwrap();
        assert_eq!(segs.len(), 4);
        assert_eq!(segs[0].0, 0);
        assert_abs_diff_eq!(segs[0].1, 1.0, epsilon = 1e-12);
        assert_eq!(segs[1], (1, 2.0));
        assert_eq!(segs[2], (2, 2.0));
        assert_eq!(segs[3].0, 3);
        assert_abs_diff_eq!(segs[3].1, 1.0, epsilon = 1e-12);
        let total: f64 = segs.iter().map(|&(_, dt)| dt).sum();
        assert_abs_diff_eq!(total, 6.0, epsilon = 1e-12);

        assert!(s.segments(0.0, 10.0).is_ok());
        assert!(s.segments(0.0, 10.5).is_err());
        assert!(s.segments(3.0, 2.0).is_err());
        assert!(s.segments(5.0, 5.0).unwrap().is_empty());
    }

    #[test]
    fn layer_shift_keeps_mismatches() {
        let net = TreeNetwork::build(4, 1.0).unwrap();
        let s =
            DisorderSchedule::build(&net, DisorderMode::Static, 4.0, 0.0, 10.0, 5, 0).unwrap();
        let shifted = s.with_layer_shift(0.9);
        for k in 0..s.interval_count() {
            let base = recompute_mismatches(&net, s.interval_detunings(k));
            let moved = recompute_mismatches(&net, shifted.interval_detunings(k));
            for (a, b) in base.iter().zip(&moved) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
        // and the shift really did move the diagonal
        assert_ne!(s.interval_detunings(0), shifted.interval_detunings(0));
    }

    #[test]
    fn mismatch_moments_match_uniform_law() {
        let net = TreeNetwork::build(2, 1.0).unwrap();
        let sigma = 2.0;
        let n = 20_000usize;
        let mut rng = realization_rng(123, 0);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let eps = sample_vertex_mismatches(&net, sigma, &mut rng).unwrap()[0];
            sum += eps;
            sum_sq += eps * eps;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        let want_var = sigma * sigma / 3.0;
        // three standard errors of the respective estimators
        let se_mean = (want_var / n as f64).sqrt();
        let se_var = sigma * sigma * (4.0 / 45.0 / n as f64).sqrt();
        assert!(mean.abs() < 3.0 * se_mean, "mean {mean} vs SE {se_mean}");
        assert!(
            (var - want_var).abs() < 3.0 * se_var,
            "variance {var} vs expected {want_var}"
        );
    }
}
