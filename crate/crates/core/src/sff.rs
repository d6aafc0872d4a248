//! Disorder-averaged spectral form factor and its higher moments, with the
//! circular-ensemble reference curves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{trace_power, CircuitSpec, SpectralSample, TraceMethod};
use crate::error::{Error, Result};
use crate::gates::sample_realization;

/// Relative standard error above which a moment estimate is flagged as
/// heavy-tailed.
pub const HEAVY_TAIL_THRESHOLD: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SffEstimate {
    pub t: usize,
    pub cells: usize,
    /// Moment order `n` of `E|tr U^t|^{2n}`.
    pub order: usize,
    pub n_samples: usize,
    pub mean: f64,
    pub std_error: f64,
    pub seed: u64,
    /// `std_error / mean`, zero when the mean vanishes.
    pub relative_se: f64,
    pub heavy_tail: bool,
}

impl SffEstimate {
    /// Distance to `reference` in units of the standard error; exact
    /// estimates compare with a tiny absolute floor.
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.mean - reference).abs() / self.std_error.max(1e-300)
    }

    pub fn within(&self, reference: f64, n_se: f64) -> bool {
        (self.mean - reference).abs() <= n_se * self.std_error + 1e-12 * reference.abs().max(1.0)
    }
}

/// `tr U^t` for samples `0..n_samples`, in sample order.
pub fn trace_samples(
    spec: &CircuitSpec,
    t: usize,
    n_samples: usize,
    seed: u64,
    method: TraceMethod,
) -> Result<Vec<SpectralSample>> {
    trace_samples_range(spec, t, 0..n_samples as u64, seed, method)
}

/// `tr U^t` for a range of sample indices, in index order.
pub fn trace_samples_range(
    spec: &CircuitSpec,
    t: usize,
    indices: std::ops::Range<u64>,
    seed: u64,
    method: TraceMethod,
) -> Result<Vec<SpectralSample>> {
    indices
        .into_par_iter()
        .map(|idx| {
            let r = sample_realization(&spec.disorder, spec.cells, seed, idx);
            let trace = trace_power(spec, &r, t, method)?;
            Ok(SpectralSample {
                trace,
                t,
                cells: spec.cells,
                seed,
                sample_idx: idx,
            })
        })
        .collect()
}

/// Mean and standard error of `|tr|^{2n}` over the given samples.
pub fn estimate_from_samples(samples: &[SpectralSample], order: usize) -> Result<SffEstimate> {
    if samples.len() < 2 {
        return Err(Error::Validation("need at least two samples".into()));
    }
    if order == 0 {
        return Err(Error::Validation("moment order must be at least 1".into()));
    }
    let values: Vec<f64> = samples
        .iter()
        .map(|s| s.trace.norm_sqr().powi(order as i32))
        .collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std_error = (var / n).sqrt();
    let relative_se = if mean > 0.0 { std_error / mean } else { 0.0 };
    let first = &samples[0];
    Ok(SffEstimate {
        t: first.t,
        cells: first.cells,
        order,
        n_samples: samples.len(),
        mean,
        std_error,
        seed: first.seed,
        relative_se,
        heavy_tail: relative_se > HEAVY_TAIL_THRESHOLD,
    })
}

/// `K(t, L) = E|tr U^t|^2`.
pub fn sff_estimate(
    spec: &CircuitSpec,
    t: usize,
    n_samples: usize,
    seed: u64,
) -> Result<SffEstimate> {
    sff_moment_with(spec, t, 1, n_samples, seed, TraceMethod::Auto)
}

/// `E|tr U^t|^{2n}`; flags and logs estimates whose relative standard error
/// exceeds [`HEAVY_TAIL_THRESHOLD`].
pub fn sff_moment(
    spec: &CircuitSpec,
    t: usize,
    order: usize,
    n_samples: usize,
    seed: u64,
) -> Result<SffEstimate> {
    sff_moment_with(spec, t, order, n_samples, seed, TraceMethod::Auto)
}

pub fn sff_moment_with(
    spec: &CircuitSpec,
    t: usize,
    order: usize,
    n_samples: usize,
    seed: u64,
    method: TraceMethod,
) -> Result<SffEstimate> {
    if n_samples < 2 {
        return Err(Error::Validation("need at least two samples".into()));
    }
    if order == 0 {
        return Err(Error::Validation("moment order must be at least 1".into()));
    }
    let samples = trace_samples(spec, t, n_samples, seed, method)?;
    let est = estimate_from_samples(&samples, order)?;
    if est.heavy_tail {
        log::warn!(
            "moment n={order} at t={t}, L={}: relative standard error {:.2} exceeds {HEAVY_TAIL_THRESHOLD}",
            spec.cells,
            est.relative_se
        );
    }
    Ok(est)
}

/// Pools equally weighted batches of estimates of the same quantity.
pub fn pool(batches: &[SffEstimate]) -> Result<SffEstimate> {
    let first = batches
        .first()
        .ok_or(Error::Validation("no batches".into()))?;
    let total: usize = batches.iter().map(|b| b.n_samples).sum();
    let n = total as f64;
    let mean = batches
        .iter()
        .map(|b| b.mean * b.n_samples as f64)
        .sum::<f64>()
        / n;
    // Recover each batch's sum of squares from its standard error.
    let ss: f64 = batches
        .iter()
        .map(|b| {
            let k = b.n_samples as f64;
            let var = b.std_error.powi(2) * k;
            var * (k - 1.0) + k * (b.mean - mean).powi(2)
        })
        .sum();
    let std_error = (ss / (n - 1.0) / n).sqrt();
    let relative_se = if mean > 0.0 { std_error / mean } else { 0.0 };
    Ok(SffEstimate {
        n_samples: total,
        mean,
        std_error,
        relative_se,
        heavy_tail: relative_se > HEAVY_TAIL_THRESHOLD,
        ..first.clone()
    })
}

/// CUE form factor `min(t, N)`; at `t = 0` the trace is `N` exactly.
pub fn cue_sff(t: usize, n: usize) -> f64 {
    if t == 0 {
        return (n * n) as f64;
    }
    t.min(n) as f64
}

/// COE form factor
/// `2 min(t, N) - 2t sum_{m=1}^{min(t, N)} 1 / (2m + 2 max(t, N) - N - 1)`.
/// It tends to `N` for `t >> N`.
pub fn coe_sff(t: usize, n: usize) -> f64 {
    if t == 0 {
        return (n * n) as f64;
    }
    let lo = t.min(n);
    let hi = t.max(n) as f64;
    let nf = n as f64;
    let s: f64 = (1..=lo)
        .map(|m| 1.0 / (2.0 * m as f64 + 2.0 * hi - nf - 1.0))
        .sum();
    2.0 * lo as f64 - 2.0 * t as f64 * s
}
