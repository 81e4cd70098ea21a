//! Level-spacing ratio statistics.
//!
//! For sorted eigenvalues with gaps `δ_n = E_n - E_{n-1}`, the ratio
//! `r_n = min(δ_n, δ_{n+1}) / max(δ_n, δ_{n+1})` needs no spectral unfolding.
//! A Poissonian (integrable) spectrum has ratio density `2 / (1 + r)²` with
//! mean `2 ln 2 - 1 ≈ 0.3863`; level repulsion would push the density to
//! zero at `r = 0`.

use crate::{Error, Result};

/// Mean spacing ratio of a Poissonian spectrum: `2 ln 2 - 1`.
pub const POISSON_MEAN_RATIO: f64 = 2.0 * std::f64::consts::LN_2 - 1.0;

/// Default histogram binning on `[0, 1]`.
pub const DEFAULT_BINS: usize = 20;

/// Relative threshold below which a pair of gaps counts as degenerate.
const DEGENERACY_EPS: f64 = 1e-12;

/// A normalized density histogram on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` edges from 0 to 1.
    pub edges: Vec<f64>,
    /// Per-bin probability density (integrates to 1 when any data exists).
    pub densities: Vec<f64>,
}

/// Spacing-ratio statistics of one spectrum.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// The sorted input eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Retained ratios `r_n ∈ [0, 1]`, in spectral order.
    pub ratios: Vec<f64>,
    /// Mean of the retained ratios (NaN if nothing was retained).
    pub mean_ratio: f64,
    /// Number of ratio candidates dropped because both gaps vanished.
    pub excluded_degenerate: usize,
    /// Density histogram of the retained ratios.
    pub histogram: Histogram,
}

/// Compute spacing ratios of a spectrum (at least three eigenvalues).
///
/// Candidate pairs whose larger gap is below `1e-12` of the spectral range
/// are `0/0` up to roundoff — exact degeneracies of the disorder-free model —
/// and are excluded from the statistics but counted.
pub fn spacing_ratios(eigenvalues: &[f64]) -> Result<SpectrumResult> {
    if eigenvalues.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "spacing ratios need at least 3 eigenvalues, got {}",
            eigenvalues.len()
        )));
    }
    let mut sorted = eigenvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let range = sorted[sorted.len() - 1] - sorted[0];
    let cutoff = DEGENERACY_EPS * range;

    let gaps: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    let mut ratios = Vec::with_capacity(gaps.len() - 1);
    let mut excluded = 0usize;
    for pair in gaps.windows(2) {
        let (lo, hi) = if pair[0] <= pair[1] {
            (pair[0], pair[1])
        } else {
            (pair[1], pair[0])
        };
        if hi < cutoff {
            excluded += 1;
        } else {
            ratios.push(lo / hi);
        }
    }
    let mean_ratio = if ratios.is_empty() {
        f64::NAN
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    };
    let histogram = ratio_histogram(&ratios, DEFAULT_BINS);
    Ok(SpectrumResult {
        eigenvalues: sorted,
        ratios,
        mean_ratio,
        excluded_degenerate: excluded,
        histogram,
    })
}

/// Density histogram of ratios over `bins` uniform bins on `[0, 1]`.
pub fn ratio_histogram(ratios: &[f64], bins: usize) -> Histogram {
    assert!(bins >= 1);
    let width = 1.0 / bins as f64;
    let mut counts = vec![0usize; bins];
    for &r in ratios {
        let idx = ((r / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let total = ratios.len() as f64;
    let densities = counts
        .iter()
        .map(|&c| {
            if total > 0.0 {
                c as f64 / (total * width)
            } else {
                0.0
            }
        })
        .collect();
    let edges = (0..=bins).map(|k| k as f64 * width).collect();
    Histogram { edges, densities }
}

/// The Poisson reference density `P(r) = 2 / (1 + r)²` on `[0, 1]`.
pub fn poisson_reference(r: f64) -> f64 {
    2.0 / ((1.0 + r) * (1.0 + r))
}

/// Pool ratio lists from several realizations into one statistic.
pub fn pool_ratios<'a, I>(per_realization: I) -> (Vec<f64>, f64)
where
    I: IntoIterator<Item = &'a SpectrumResult>,
{
    let mut all = Vec::new();
    for res in per_realization {
        all.extend_from_slice(&res.ratios);
    }
    let mean = if all.is_empty() {
        f64::NAN
    } else {
        all.iter().sum::<f64>() / all.len() as f64
    };
    (all, mean)
}
