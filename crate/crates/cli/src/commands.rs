//! The four subcommands.

use std::path::Path;

use anyhow::{bail, Result};
use dualsff::acceptance::{run_criterion, select, CriterionOutcome};
use dualsff::algebra::DenseOperator;
use dualsff::circuit::{method_costs, CircuitSpec, SpectralSample, TraceMethod};
use dualsff::gates::{is_dual_unitary, DisorderDistribution};
use dualsff::sff::{coe_sff, cue_sff, estimate_from_samples, trace_samples, SffEstimate};
use dualsff::transfer::{
    classify, leading_spectrum, trace_curve_from_spectrum, trace_transfer_power, QuadratureConfig,
    TransferContext,
};
use serde::{Deserialize, Serialize};

use crate::output::{cache_key, cache_load, cache_store, emit_json, write_csv, Provenance};
use crate::run_config::RunConfig;

/// Whether every check of a command passed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

/// Everything a command needs besides its own settings.
pub struct Context<'a> {
    pub config: &'a RunConfig,
    pub hash: String,
    pub out: Option<&'a Path>,
}

impl Context<'_> {
    fn provenance(&self, command: &str) -> Provenance {
        Provenance::new(command, &self.hash, self.config.seed)
    }

    fn gates(&self) -> Result<(DenseOperator, DenseOperator)> {
        let c = self.config;
        Ok((c.first.build(c.d)?, c.second.build(c.d)?))
    }

    fn disorder(&self) -> Result<DisorderDistribution> {
        Ok(self.config.disorder.build(self.config.d)?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateCheckRow {
    pub layer: String,
    pub unitarity_residual: f64,
    pub dual_unitarity_residual: f64,
    pub tolerance: f64,
    pub unitary: bool,
    pub dual_unitary: bool,
}

#[derive(Serialize)]
struct GateCheckReport {
    gates: Vec<GateCheckRow>,
    passed: bool,
}

pub fn gate_check(ctx: &Context) -> Result<Outcome> {
    let (first, second) = ctx.gates()?;
    let tol = ctx.config.tolerances.duality;
    let mut rows = Vec::new();
    for (layer, g) in [("first", &first), ("second", &second)] {
        let rep = is_dual_unitary(g, tol)?;
        let row = GateCheckRow {
            layer: layer.to_string(),
            unitarity_residual: rep.unitarity_residual,
            dual_unitarity_residual: rep.dual_unitarity_residual,
            tolerance: tol,
            unitary: rep.unitarity_residual <= tol,
            dual_unitary: rep.passes,
        };
        eprintln!(
            "{:<6} unitarity {:.3e}  dual unitarity {:.3e}  {}",
            row.layer,
            row.unitarity_residual,
            row.dual_unitarity_residual,
            if row.dual_unitary { "ok" } else { "FAIL" }
        );
        rows.push(row);
    }
    let passed = rows.iter().all(|r| r.unitary && r.dual_unitary);
    let report = GateCheckReport {
        gates: rows,
        passed,
    };
    emit_json(
        ctx.out,
        "gate_check.json",
        &ctx.provenance("gate-check"),
        &report,
    )?;
    Ok(Outcome::from_bool(passed))
}

/// One row of the form-factor table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SffRow {
    pub t: usize,
    #[serde(rename = "L")]
    pub cells: usize,
    pub n: usize,
    pub mean: f64,
    pub se: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub cue_ref: Option<f64>,
    pub coe_ref: Option<f64>,
}

/// One per-realization trace.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleRow {
    pub seed: u64,
    pub sample_idx: u64,
    pub t: usize,
    #[serde(rename = "L")]
    pub cells: usize,
    pub re: f64,
    pub im: f64,
}

/// Circular-ensemble references at matrix size `d^{2L}`; defined for the
/// first moment only.
fn references(d: usize, cells: usize, t: usize, order: usize) -> (Option<f64>, Option<f64>) {
    let n = (d as u64)
        .checked_pow(2 * cells as u32)
        .filter(|&n| n <= 1 << 52);
    match (order, n) {
        (1, Some(n)) => (Some(cue_sff(t, n as usize)), Some(coe_sff(t, n as usize))),
        _ => (None, None),
    }
}

#[derive(Serialize)]
struct SffReport<'a> {
    estimates: &'a [SffEstimate],
    rows: &'a [SffRow],
}

pub fn sff(ctx: &Context) -> Result<Outcome> {
    let cfg = ctx.config;
    let (first, second) = ctx.gates()?;
    let dist = ctx.disorder()?;
    let mut specs = Vec::new();
    // Every grid point is costed before any sampling starts.
    for &cells in &cfg.l_grid {
        let spec =
            CircuitSpec::homogeneous(cfg.d, cells, first.clone(), second.clone(), dist.clone())?;
        for &t in &cfg.t_grid {
            let costs = method_costs(&spec, t);
            let cost = match cfg.method {
                TraceMethod::Auto => costs.iter().filter_map(|c| c.1).reduce(f64::min),
                m => costs.iter().find(|c| c.0 == m).and_then(|c| c.1),
            };
            let listed: Vec<String> = costs
                .iter()
                .map(|(m, c)| match c {
                    Some(c) => format!("{m:?}={:.2e} ops/sample", c),
                    None => format!("{m:?}=over budget"),
                })
                .collect();
            eprintln!("t={t} L={cells}: {}", listed.join(", "));
            if cost.is_none() {
                bail!(
                    "t={t}, L={cells} exceeds every trace budget for method {:?} ({})",
                    cfg.method,
                    listed.join(", ")
                );
            }
        }
        specs.push(spec);
    }
    let mut estimates = Vec::new();
    let mut rows = Vec::new();
    let mut sample_rows = Vec::new();
    for (spec, &cells) in specs.iter().zip(&cfg.l_grid) {
        for &t in &cfg.t_grid {
            let key = cache_key(&[&ctx.hash, "samples", &t.to_string(), &cells.to_string()]);
            let samples: Vec<SpectralSample> = match cache_load(&key) {
                Some(s) => s,
                None => {
                    let s = trace_samples(spec, t, cfg.n_samples, cfg.seed, cfg.method)?;
                    cache_store(&key, &s)?;
                    s
                }
            };
            let est = estimate_from_samples(&samples, cfg.order)?;
            if est.heavy_tail {
                log::warn!(
                    "t={t} L={cells}: relative standard error {:.2}",
                    est.relative_se
                );
            }
            let (cue_ref, coe_ref) = references(cfg.d, cells, t, cfg.order);
            eprintln!("t={t} L={cells}: {:.6} +- {:.6}", est.mean, est.std_error);
            rows.push(SffRow {
                t,
                cells,
                n: cfg.order,
                mean: est.mean,
                se: est.std_error,
                n_samples: est.n_samples,
                seed: cfg.seed,
                cue_ref,
                coe_ref,
            });
            if cfg.outputs.samples {
                sample_rows.extend(samples.iter().map(|s| SampleRow {
                    seed: s.seed,
                    sample_idx: s.sample_idx,
                    t: s.t,
                    cells: s.cells,
                    re: s.trace.re,
                    im: s.trace.im,
                }));
            }
            estimates.push(est);
        }
    }
    let prov = ctx.provenance("sff");
    if let Some(dir) = ctx.out {
        write_csv(dir, "sff.csv", &prov, &rows)?;
        if cfg.outputs.samples {
            write_csv(dir, "samples.csv", &prov, &sample_rows)?;
        }
    }
    emit_json(
        ctx.out,
        "sff.json",
        &prov,
        &SffReport {
            estimates: &estimates,
            rows: &rows,
        },
    )?;
    Ok(Outcome::Pass)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenvalueEntry {
    pub re: f64,
    pub im: f64,
    pub abs: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveRow {
    #[serde(rename = "L")]
    pub cells: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransferReport {
    pub t: usize,
    pub order: usize,
    pub dim: usize,
    pub method: String,
    pub eigenvalues: Vec<EigenvalueEntry>,
    pub residuals: Vec<f64>,
    pub unimodular_count: usize,
    /// Random-matrix value of the limit, when known.
    pub expected_count: Option<usize>,
    pub ambiguous: bool,
    pub spectral_radius: f64,
    pub subleading_modulus: f64,
    pub radius_within_bound: bool,
    /// Every unimodular eigenvalue equals 1, so `tr T^L` has a limit.
    pub limit_exists: bool,
    /// The trace does not settle at the random-matrix count.
    pub flagged_non_convergent: bool,
    pub gap: f64,
    pub quadrature: QuadratureConfig,
    pub curve: Vec<CurveRow>,
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

pub fn transfer(ctx: &Context) -> Result<Outcome> {
    let cfg = ctx.config;
    let (first, second) = ctx.gates()?;
    let dist = ctx.disorder()?;
    let quad = &cfg.transfer.quadrature;
    let gap = cfg.tolerances.unimodular_gap;
    let prov = ctx.provenance("transfer");
    let mut reports = Vec::new();
    for &t in &cfg.t_grid {
        let tc = TransferContext::with_copies(&first, &second, t, cfg.order, &dist, quad)?;
        let raw = leading_spectrum(&tc, cfg.transfer.eigenvalues)?;
        let rep = classify(raw.eigenvalues, raw.residuals, &raw.method, gap);
        let complete = rep.eigenvalues.len() == tc.dim();
        let curve_cells: Vec<usize> = if complete {
            (1..=cfg.transfer.max_cells).collect()
        } else {
            cfg.l_grid.clone()
        };
        let values = if complete {
            trace_curve_from_spectrum(&rep.eigenvalues, &curve_cells)
        } else {
            curve_cells
                .iter()
                .map(|&l| trace_transfer_power(&tc, l))
                .collect::<dualsff::Result<Vec<_>>>()?
        };
        let curve: Vec<CurveRow> = curve_cells
            .iter()
            .zip(&values)
            .map(|(&l, z)| CurveRow {
                cells: l,
                re: z.re,
                im: z.im,
            })
            .collect();
        let expected_count = match (dist.time_reversal, cfg.order) {
            (false, n) => Some(factorial(n) * t.pow(n as u32)),
            (true, 1) => Some(2 * t),
            _ => None,
        };
        let limit_exists = !rep.ambiguous
            && rep.eigenvalues[..rep.unimodular_count]
                .iter()
                .all(|z| (z - 1.0).norm() < 1e-8);
        let matches = expected_count.is_none_or(|e| e == rep.unimodular_count);
        let report = TransferReport {
            t,
            order: cfg.order,
            dim: tc.dim(),
            method: rep.method.clone(),
            eigenvalues: rep
                .eigenvalues
                .iter()
                .map(|z| EigenvalueEntry {
                    re: z.re,
                    im: z.im,
                    abs: z.norm(),
                })
                .collect(),
            residuals: rep.residuals.clone(),
            unimodular_count: rep.unimodular_count,
            expected_count,
            ambiguous: rep.ambiguous,
            spectral_radius: rep.spectral_radius,
            subleading_modulus: rep.subleading_modulus,
            radius_within_bound: rep.spectral_radius <= 1.0 + 1e-8,
            limit_exists,
            flagged_non_convergent: !(limit_exists && matches),
            gap,
            quadrature: quad.clone(),
            curve,
        };
        eprintln!(
            "t={t}: D={} unimodular={} (expected {:?}) radius={:.12} subleading={:.6}{}",
            report.dim,
            report.unimodular_count,
            expected_count,
            report.spectral_radius,
            report.subleading_modulus,
            if report.flagged_non_convergent {
                "  NON-CONVERGENT"
            } else {
                ""
            }
        );
        if let Some(dir) = ctx.out {
            write_csv(
                dir,
                &format!("transfer_curve_t{t}.csv"),
                &prov,
                &report.curve,
            )?;
        }
        reports.push(report);
    }
    let passed = reports
        .iter()
        .all(|r| r.radius_within_bound && !r.flagged_non_convergent);
    emit_json(
        ctx.out,
        "transfer.json",
        &prov,
        &serde_json::json!({ "spectra": reports }),
    )?;
    Ok(Outcome::from_bool(passed))
}

pub fn verify(ctx: &Context, criteria: &[String]) -> Result<Outcome> {
    let selectors = if criteria.is_empty() {
        &ctx.config.criteria[..]
    } else {
        criteria
    };
    let ids = select(selectors)?;
    let mut outcomes: Vec<CriterionOutcome> = Vec::new();
    for id in ids {
        let out = run_criterion(id)?;
        println!(
            "[{}] {:>2} {:<14} {:>7.1}s  {}",
            if out.passed { "PASS" } else { "FAIL" },
            out.id,
            out.tag,
            out.seconds,
            out.summary
        );
        outcomes.push(out);
    }
    let passed = outcomes.iter().all(|o| o.passed);
    let report = serde_json::json!({ "criteria": outcomes, "passed": passed });
    if let Some(dir) = ctx.out {
        emit_json(Some(dir), "verify.json", &ctx.provenance("verify"), &report)?;
    }
    Ok(Outcome::from_bool(passed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn references_only_for_first_moment() {
        assert_eq!(references(2, 2, 3, 1).0, Some(3.0));
        assert_eq!(references(2, 2, 3, 2), (None, None));
        assert_eq!(references(2, 40, 3, 1), (None, None));
    }

    #[test]
    fn csv_rows_use_documented_columns() {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(SffRow {
            t: 1,
            cells: 4,
            n: 1,
            mean: 1.5,
            se: 0.1,
            n_samples: 10,
            seed: 3,
            cue_ref: Some(1.0),
            coe_ref: None,
        })
        .unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(
            text,
            "t,L,n,mean,se,n_samples,seed,cue_ref,coe_ref\n1,4,1,1.5,0.1,10,3,1.0,\n"
        );
    }
}
