use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::RunConfig;
use crate::analytic::{uniform_grid, QueueParams};
use crate::error::{Error, Result};
use crate::output::fmt17;
use crate::semi::{self, mm1_diff_density, mm1_wait_tail};
use crate::sim::{self, ReplicationStreams};
use crate::stats::{
    batch_means_ci_pooled, ks_conditional_exponential, summarize_pooled, verify, GofReport, OverlapKind,
    SampleSummary,
};

pub const TAIL_GRID_POINTS: usize = 200;
pub const THETA_GRID: [f64; 8] = [0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0];
const MOMENT_ORDERS: [u32; 4] = [1, 2, 3, 4];

/// What a command produced: files written and whether the run passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub passed: bool,
    pub message: String,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_file<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

fn prepare_dir(cfg: &RunConfig) -> Result<&Path> {
    let dir = cfg.output_dir.as_path();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    Ok(dir)
}

fn params_json(q: &QueueParams) -> Value {
    json!({
        "lambda": q.lambda(),
        "mu": q.mu(),
        "utilization": q.utilization(),
        "gap": q.gap(),
    })
}

fn analytic_block(q: &QueueParams, kind: OverlapKind, paper_exact: bool) -> Result<Value> {
    let (coef, variance) = match kind {
        OverlapKind::Max => (q.max_coefficient(), q.max_variance()),
        OverlapKind::Min => (q.min_coefficient(), q.min_variance()),
    };
    let transform = |theta: f64| match kind {
        OverlapKind::Max => q.max_transform(theta),
        OverlapKind::Min => q.min_transform(theta),
    };
    let moments = MOMENT_ORDERS
        .iter()
        .map(|&p| Ok(json!({ "p": p, "value": kind.moment(q, p)? })))
        .collect::<Result<Vec<_>>>()?;
    let transforms = THETA_GRID
        .iter()
        .map(|&th| Ok(json!({ "theta": th, "value": transform(th)? })))
        .collect::<Result<Vec<_>>>()?;
    let mut block = json!({
        "tail_coefficient": coef,
        "tail_at_zero": coef,
        "atom_at_zero": 1.0 - coef,
        "decay_rate": q.gap(),
        "moments": moments,
        "variance": variance,
        "transform": transforms,
    });
    if paper_exact {
        let printed = |theta: f64| match kind {
            OverlapKind::Max => q.paper_max_transform(theta),
            OverlapKind::Min => q.paper_min_transform(theta),
        };
        let values = THETA_GRID
            .iter()
            .map(|&th| {
                let p = printed(th)?;
                let c = transform(th)?;
                Ok(json!({ "theta": th, "printed": p, "corrected": c, "difference": p - c }))
            })
            .collect::<Result<Vec<_>>>()?;
        block["printed_transform"] = json!({
            "flag": "printed form integrates the tail instead of the density; not equal to 1 at theta = 0",
            "normalized": false,
            "value_at_zero": printed(0.0)?,
            "values": values,
        });
    }
    Ok(block)
}

/// Closed-form tables: `report.json` and `tails.csv`.
pub fn cmd_analytic(cfg: &RunConfig) -> Result<Outcome> {
    let q = cfg.queue_params()?;
    let dir = prepare_dir(cfg)?;

    let report = json!({
        "command": "analytic",
        "config": cfg,
        "params": params_json(&q),
        "wait": { "tail_coefficient": q.utilization(), "decay_rate": q.gap() },
        "max": analytic_block(&q, OverlapKind::Max, cfg.paper_exact)?,
        "min": analytic_block(&q, OverlapKind::Min, cfg.paper_exact)?,
    });
    let report_path = dir.join("report.json");
    write_json(&report_path, &report)?;

    let tails_path = dir.join("tails.csv");
    let grid = uniform_grid(10.0 / q.gap(), TAIL_GRID_POINTS);
    write_file(&tails_path, |w| {
        writeln!(w, "t,max_tail,min_tail,wait_tail")?;
        for &t in &grid {
            let row = [q.max_tail(t), q.min_tail(t), q.wait_tail(t)].map(|v| v.expect("t >= 0"));
            writeln!(w, "{},{},{},{}", fmt17(t), fmt17(row[0]), fmt17(row[1]), fmt17(row[2]))?;
        }
        Ok(())
    })?;

    Ok(Outcome {
        files: vec![report_path, tails_path],
        passed: true,
        message: format!(
            "P(M>0) = {:.6}, P(M*>0) = {:.6}, E[M] = {:.6}, Var[M] = {:.6}",
            q.max_coefficient(),
            q.min_coefficient(),
            q.max_moment(1)?,
            q.max_variance()
        ),
    })
}

/// Max and min overlap series of every replication, generated in parallel.
/// Results are ordered by replication index, so output never depends on
/// scheduling.
fn run_replications(cfg: &RunConfig) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let (arrival, service) = cfg.distributions()?;
    (0..cfg.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let mut streams = ReplicationStreams::new(cfg.seed, rep);
            if rep == 0 && cfg.dump_raw {
                let traj = sim::simulate(&arrival, &service, cfg.n, &mut streams)?;
                let path = cfg.output_dir.join("raw.csv");
                write_file(&path, |w| traj.write_csv(w))?;
                let s = sim::overlap_series(&traj);
                Ok((s.max, s.min))
            } else {
                sim::simulate_overlaps(&arrival, &service, cfg.n, &mut streams)
            }
        })
        .collect()
}

#[derive(Serialize)]
struct SummaryView<'a> {
    count_used: usize,
    burn_in: usize,
    mean: f64,
    second_moment: f64,
    third_moment: f64,
    frac_positive: f64,
    atom_at_zero: f64,
    histogram_bins: usize,
    histogram_upper: Option<f64>,
    empirical_tail: &'a [(f64, f64)],
}

impl<'a> From<&'a SampleSummary> for SummaryView<'a> {
    fn from(s: &'a SampleSummary) -> Self {
        SummaryView {
            count_used: s.count_used,
            burn_in: s.burn_in,
            mean: s.mean,
            second_moment: s.second_moment,
            third_moment: s.third_moment,
            frac_positive: s.frac_positive,
            atom_at_zero: s.histogram.atom_at_zero,
            histogram_bins: s.histogram.density.len(),
            histogram_upper: s.histogram.bin_edges.last().copied(),
            empirical_tail: s.empirical_tail.points(),
        }
    }
}

/// Simulation histograms: `hist_max.csv`, `hist_min.csv`, `report.json`,
/// and `raw.csv` when requested.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<Outcome> {
    let dir = prepare_dir(cfg)?.to_path_buf();
    let (arrival, service) = cfg.distributions()?;
    let runs = run_replications(cfg)?;
    let maxes: Vec<&[f64]> = runs.iter().map(|r| r.0.as_slice()).collect();
    let mins: Vec<&[f64]> = runs.iter().map(|r| r.1.as_slice()).collect();
    let max_summary = summarize_pooled(&maxes, cfg.burn_in, cfg.bins)?;
    let min_summary = summarize_pooled(&mins, cfg.burn_in, cfg.bins)?;

    let mut files = Vec::new();
    for (name, s) in [("hist_max.csv", &max_summary), ("hist_min.csv", &min_summary)] {
        let path = dir.join(name);
        write_file(&path, |w| s.histogram.write_csv(w))?;
        files.push(path);
    }
    if cfg.dump_raw {
        files.push(dir.join("raw.csv"));
    }

    // closed-form reference whenever both laws are exponential and stable
    let reference = match (arrival.exponential_rate(), service.exponential_rate()) {
        (Some(l), Some(m)) => QueueParams::new(l, m).ok().map(|q| {
            json!({
                "params": params_json(&q),
                "max_tail_at_zero": q.max_coefficient(),
                "max_atom_at_zero": q.max_atom_zero(),
                "max_mean": q.max_moment(1).expect("p = 1"),
                "min_tail_at_zero": q.min_coefficient(),
                "min_atom_at_zero": q.min_atom_zero(),
                "min_mean": q.min_moment(1).expect("p = 1"),
            })
        }),
        _ => None,
    };

    let report = json!({
        "command": "simulate",
        "config": cfg,
        "arrival": arrival.to_string(),
        "service": service.to_string(),
        "max": SummaryView::from(&max_summary),
        "min": SummaryView::from(&min_summary),
        "analytic_reference": reference,
    });
    let report_path = dir.join("report.json");
    write_json(&report_path, &report)?;
    files.push(report_path);

    Ok(Outcome {
        files,
        passed: true,
        message: format!(
            "P(M>0) = {:.6} (atom {:.6}), P(M*>0) = {:.6}, E[M] = {:.6} over {} samples",
            max_summary.frac_positive,
            max_summary.histogram.atom_at_zero,
            min_summary.frac_positive,
            max_summary.mean,
            max_summary.count_used
        ),
    })
}

/// Goodness-of-fit report for one overlap kind pooled over replications.
pub fn gof_for(
    reference: &QueueParams,
    kind: OverlapKind,
    series: &[&[f64]],
    cfg: &RunConfig,
) -> Result<GofReport> {
    let summary = summarize_pooled(series, cfg.burn_in, cfg.bins)?;
    let cis = [1, 2]
        .iter()
        .map(|&p| batch_means_ci_pooled(series, cfg.burn_in, cfg.batches, p))
        .collect::<Result<Vec<_>>>()?;
    // thin within each replication, then pool
    let thinned: Vec<f64> = series
        .iter()
        .flat_map(|s| s[cfg.burn_in..].iter().copied().filter(|&x| x > 0.0).step_by(cfg.stride))
        .collect();
    let ks = ks_conditional_exponential(&thinned, reference.gap(), 1)?;
    verify(reference, kind, &summary, &cis, &ks)
}

/// End-to-end check of the M/M/1 closed forms against simulation.
pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome> {
    let q = cfg.mm1_params()?;
    let reference = match cfg.inject_mu {
        Some(m) => QueueParams::with_max_utilization(q.lambda(), m, 1.0)?,
        None => q,
    };
    let dir = prepare_dir(cfg)?.to_path_buf();
    let mut run_cfg = cfg.clone();
    run_cfg.lambda = Some(q.lambda());
    run_cfg.mu = Some(q.mu());
    let runs = run_replications(&run_cfg)?;
    let maxes: Vec<&[f64]> = runs.iter().map(|r| r.0.as_slice()).collect();
    let mins: Vec<&[f64]> = runs.iter().map(|r| r.1.as_slice()).collect();

    let max = gof_for(&reference, OverlapKind::Max, &maxes, cfg)?;
    let min = gof_for(&reference, OverlapKind::Min, &mins, cfg)?;
    let passed = max.pass && min.pass;

    let report = json!({
        "command": "verify",
        "config": cfg,
        "params": params_json(&q),
        "reference_params": params_json(&reference),
        "injected_reference": cfg.inject_mu.is_some(),
        "max": max,
        "min": min,
        "pass": passed,
    });
    let report_path = dir.join("report.json");
    write_json(&report_path, &report)?;

    Ok(Outcome {
        files: vec![report_path],
        passed,
        message: format!(
            "max: KS {:.5} < {:.5}? {} | min: KS {:.5} < {:.5}? {} | pass = {passed}",
            max.ks_statistic,
            max.ks_threshold,
            max.ks_statistic < max.ks_threshold,
            min.ks_statistic,
            min.ks_threshold,
            min.ks_statistic < min.ks_threshold,
        ),
    })
}

/// One grid row of the convolution comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolveRow {
    pub t: f64,
    pub closed_form_max: f64,
    pub numeric_max: f64,
    pub closed_form_min: f64,
    pub numeric_min: f64,
}

impl ConvolveRow {
    pub fn abs_error(&self) -> f64 {
        f64::max(
            (self.numeric_max - self.closed_form_max).abs(),
            (self.numeric_min - self.closed_form_min).abs(),
        )
    }
}

/// Numerical and closed-form tails on `grid`; failures are collected per point.
pub fn convolve_grid(q: &QueueParams, grid: &[f64]) -> Vec<std::result::Result<ConvolveRow, String>> {
    let wait = mm1_wait_tail(*q);
    let diff = mm1_diff_density(*q);
    grid.par_iter()
        .map(|&t| {
            let row = (|| -> Result<ConvolveRow> {
                Ok(ConvolveRow {
                    t,
                    closed_form_max: q.max_tail(t)?,
                    numeric_max: semi::max_tail_numeric(&wait, &diff, q.prob_service_shorter(), t)?,
                    closed_form_min: q.min_tail(t)?,
                    numeric_min: semi::min_tail_numeric(&wait, &diff, q.prob_service_longer(), t)?,
                })
            })();
            row.map_err(|e| format!("t = {t}: {e}"))
        })
        .collect()
}

/// Quadrature versus closed form: `convolve.csv` and `report.json`.
pub fn cmd_convolve(cfg: &RunConfig) -> Result<Outcome> {
    let q = cfg.queue_params()?;
    let dir = prepare_dir(cfg)?;
    let grid = uniform_grid(10.0 / q.gap(), TAIL_GRID_POINTS);
    let results = convolve_grid(&q, &grid);
    let failures: Vec<&String> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    let rows: Vec<&ConvolveRow> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    let max_abs_error = rows.iter().map(|r| r.abs_error()).fold(0.0, f64::max);

    let csv_path = dir.join("convolve.csv");
    write_file(&csv_path, |w| {
        writeln!(w, "t,closed_form_max,numeric_max,closed_form_min,numeric_min,abs_error")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt17(r.t),
                fmt17(r.closed_form_max),
                fmt17(r.numeric_max),
                fmt17(r.closed_form_min),
                fmt17(r.numeric_min),
                fmt17(r.abs_error())
            )?;
        }
        Ok(())
    })?;
    let report_path = dir.join("report.json");
    write_json(
        &report_path,
        &json!({
            "command": "convolve",
            "config": cfg,
            "params": params_json(&q),
            "grid_points": grid.len(),
            "max_abs_error": max_abs_error,
            "failures": failures,
        }),
    )?;

    if let Some(first) = failures.first() {
        return Err(Error::Runtime(format!(
            "{} of {} grid points failed; first: {first}",
            failures.len(),
            grid.len()
        )));
    }

    Ok(Outcome {
        files: vec![csv_path, report_path],
        passed: true,
        message: format!("max abs_error: {max_abs_error:.3e}"),
    })
}
