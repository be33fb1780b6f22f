//! Steady-state estimation from overlap series: summaries with a zero atom
//! and histogram, batch-means confidence intervals, a Kolmogorov–Smirnov
//! test against the conditional exponential law, and the verdict that ties
//! them to the closed forms.

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::analytic::{QueueParams, TailCurve};
use crate::error::{Error, Result};
use crate::output::fmt17;

pub const DEFAULT_BURN_IN: usize = 10_000;
pub const DEFAULT_BINS: usize = 60;
pub const DEFAULT_KS_STRIDE: usize = 50;
pub const DEFAULT_BATCHES: usize = 32;

/// Asymptotic 5% critical value of the KS statistic times sqrt(n).
pub const KS_CRITICAL_5PCT: f64 = 1.36;
/// Histograms cover [0, this quantile of the positive samples].
pub const HISTOGRAM_UPPER_QUANTILE: f64 = 0.999;
const MIN_USED: usize = 100;
const MIN_KS_SAMPLES: usize = 100;
const MIN_BATCHES: usize = 10;
const MIN_PER_BATCH: usize = 100;

/// Counts and raw power sums; merging two accumulators is exact addition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MomentAccumulator {
    pub count: u64,
    pub zeros: u64,
    pub sum1: f64,
    pub sum2: f64,
    pub sum3: f64,
}

impl MomentAccumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        if x == 0.0 {
            self.zeros += 1;
        }
        let x2 = x * x;
        self.sum1 += x;
        self.sum2 += x2;
        self.sum3 += x2 * x;
    }

    pub fn merge(&mut self, other: &MomentAccumulator) {
        self.count += other.count;
        self.zeros += other.zeros;
        self.sum1 += other.sum1;
        self.sum2 += other.sum2;
        self.sum3 += other.sum3;
    }

    /// Raw moment E[X^p] for p in 1..=3.
    pub fn raw_moment(&self, p: u32) -> f64 {
        let s = match p {
            1 => self.sum1,
            2 => self.sum2,
            3 => self.sum3,
            _ => f64::NAN,
        };
        s / self.count as f64
    }

    pub fn frac_positive(&self) -> f64 {
        (self.count - self.zeros) as f64 / self.count as f64
    }
}

impl FromIterator<f64> for MomentAccumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = MomentAccumulator::default();
        iter.into_iter().for_each(|x| acc.push(x));
        acc
    }
}

/// Density histogram of the positive samples plus the mass at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub density: Vec<f64>,
    pub atom_at_zero: f64,
}

impl Histogram {
    /// Σ density · width over all bins.
    pub fn positive_mass(&self) -> f64 {
        self.density
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "bin_left,bin_right,density")?;
        for (d, e) in self.density.iter().zip(self.bin_edges.windows(2)) {
            writeln!(w, "{},{},{}", fmt17(e[0]), fmt17(e[1]), fmt17(*d))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub count_used: usize,
    pub burn_in: usize,
    pub mean: f64,
    pub second_moment: f64,
    pub third_moment: f64,
    pub frac_positive: f64,
    pub histogram: Histogram,
    pub empirical_tail: TailCurve,
}

/// Summarizes `series[burn_in..]`.
pub fn summarize(series: &[f64], burn_in: usize, bins: usize) -> Result<SampleSummary> {
    summarize_pooled(&[series], burn_in, bins)
}

/// Summarizes several replications, dropping `burn_in` samples from each and
/// pooling the rest.
pub fn summarize_pooled(replications: &[&[f64]], burn_in: usize, bins: usize) -> Result<SampleSummary> {
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be >= 1".into()));
    }
    if replications.is_empty() {
        return Err(Error::InsufficientData("no replications".into()));
    }
    let mut acc = MomentAccumulator::default();
    let mut positives = Vec::new();
    for series in replications {
        if series.len() <= burn_in + MIN_USED {
            return Err(Error::InsufficientData(format!(
                "series of length {} needs more than burn-in {burn_in} + {MIN_USED} samples",
                series.len()
            )));
        }
        for &x in &series[burn_in..] {
            acc.push(x);
            if x > 0.0 {
                positives.push(x);
            }
        }
    }
    positives.sort_unstable_by(f64::total_cmp);

    let n = acc.count as f64;
    let frac_positive = acc.frac_positive();
    let histogram = build_histogram(&positives, n, bins, 1.0 - frac_positive);
    let empirical_tail = if histogram.bin_edges.is_empty() {
        TailCurve::new(vec![(0.0, 0.0)])?
    } else {
        let pts = histogram
            .bin_edges
            .iter()
            .map(|&t| {
                let above = positives.len() - positives.partition_point(|&x| x <= t);
                (t, above as f64 / n)
            })
            .collect();
        TailCurve::new(pts)?
    };

    Ok(SampleSummary {
        count_used: acc.count as usize,
        burn_in,
        mean: acc.raw_moment(1),
        second_moment: acc.raw_moment(2),
        third_moment: acc.raw_moment(3),
        frac_positive,
        histogram,
        empirical_tail,
    })
}

fn build_histogram(sorted_positive: &[f64], n: f64, bins: usize, atom: f64) -> Histogram {
    if sorted_positive.is_empty() {
        return Histogram {
            bin_edges: vec![],
            density: vec![],
            atom_at_zero: atom,
        };
    }
    let m = sorted_positive.len();
    let idx = ((HISTOGRAM_UPPER_QUANTILE * m as f64).ceil() as usize).clamp(1, m) - 1;
    let upper = sorted_positive[idx];
    let width = upper / bins as f64;
    let mut counts = vec![0u64; bins];
    for &x in sorted_positive {
        // overflow above the quantile folds into the last bin
        let b = ((x / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let bin_edges = (0..=bins)
        .map(|i| if i == bins { upper } else { i as f64 * width })
        .collect();
    let density = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    Histogram {
        bin_edges,
        density,
        atom_at_zero: atom,
    }
}

/// Outcome of a one-sample KS test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub threshold: f64,
    pub effective_n: usize,
    pub rate: f64,
}

impl KsResult {
    pub fn passes(&self) -> bool {
        self.statistic < self.threshold
    }
}

/// KS test of the positive entries of `samples`, thinned to every
/// `stride`-th one, against `1 - exp(-rate t)`. Zeros are skipped, so the
/// full overlap series can be passed directly.
pub fn ks_conditional_exponential(samples: &[f64], rate: f64, stride: usize) -> Result<KsResult> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidArgument(format!("rate must be > 0, got {rate}")));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be >= 1".into()));
    }
    let mut xs: Vec<f64> = samples.iter().copied().filter(|&x| x > 0.0).step_by(stride).collect();
    if xs.len() < MIN_KS_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} effective samples, need at least {MIN_KS_SAMPLES}",
            xs.len()
        )));
    }
    xs.sort_unstable_by(f64::total_cmp);
    let statistic = ks_statistic(&xs, |x| -(-rate * x).exp_m1());
    let n = xs.len();
    Ok(KsResult {
        statistic,
        threshold: KS_CRITICAL_5PCT / (n as f64).sqrt(),
        effective_n: n,
        rate,
    })
}

/// sup |F_n - F| over sorted data.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Point estimate and 95% half-width for E[X^p].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCi {
    pub p: u32,
    pub point: f64,
    pub halfwidth: f64,
    pub batches: usize,
}

impl MomentCi {
    pub fn covers(&self, value: f64) -> bool {
        (value - self.point).abs() <= self.halfwidth
    }
}

/// Batch-means 95% confidence interval for E[X^p] over `series[burn_in..]`.
pub fn batch_means_ci(series: &[f64], burn_in: usize, num_batches: usize, p: u32) -> Result<MomentCi> {
    batch_means_ci_pooled(&[series], burn_in, num_batches, p)
}

/// Batch means over several independent replications: each contributes
/// `batches_per_replication` batches and all batches enter one interval.
pub fn batch_means_ci_pooled(
    replications: &[&[f64]],
    burn_in: usize,
    batches_per_replication: usize,
    p: u32,
) -> Result<MomentCi> {
    if !(1..=3).contains(&p) {
        return Err(Error::InvalidArgument(format!("moment order must be 1..=3, got {p}")));
    }
    if batches_per_replication * replications.len() < MIN_BATCHES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_BATCHES} batches, got {}",
            batches_per_replication * replications.len()
        )));
    }
    let mut means = Vec::with_capacity(batches_per_replication * replications.len());
    for series in replications {
        let used = series.len().saturating_sub(burn_in);
        if used < MIN_PER_BATCH * batches_per_replication {
            return Err(Error::InsufficientData(format!(
                "{used} post-burn-in samples, need {} for {batches_per_replication} batches",
                MIN_PER_BATCH * batches_per_replication
            )));
        }
        let size = used / batches_per_replication;
        for batch in series[burn_in..].chunks_exact(size).take(batches_per_replication) {
            let s: f64 = batch.iter().map(|x| x.powi(p as i32)).sum();
            means.push(s / size as f64);
        }
    }
    let b = means.len() as f64;
    let point = means.iter().sum::<f64>() / b;
    let var = means.iter().map(|m| (m - point) * (m - point)).sum::<f64>() / (b - 1.0);
    let t = t_quantile_975(b - 1.0);
    Ok(MomentCi {
        p,
        point,
        halfwidth: t * (var / b).sqrt(),
        batches: means.len(),
    })
}

fn t_quantile_975(df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df)
        .expect("df >= 9")
        .inverse_cdf(0.975)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapKind {
    Max,
    Min,
}

impl OverlapKind {
    pub fn coefficient(&self, q: &QueueParams) -> f64 {
        match self {
            OverlapKind::Max => q.max_coefficient(),
            OverlapKind::Min => q.min_coefficient(),
        }
    }

    pub fn moment(&self, q: &QueueParams, p: u32) -> Result<f64> {
        match self {
            OverlapKind::Max => q.max_moment(p),
            OverlapKind::Min => q.min_moment(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub p: u32,
    pub analytic: f64,
    pub estimate: f64,
    pub halfwidth: f64,
    pub rel_error: f64,
    pub covered: bool,
}

/// Analytic-versus-empirical comparison for one overlap kind.
///
/// `pass` holds exactly when the KS statistic is below its threshold and
/// every analytic moment lies inside its confidence interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub kind: OverlapKind,
    pub ks_statistic: f64,
    pub ks_threshold: f64,
    pub effective_n: usize,
    pub ks_rate: f64,
    pub analytic_rate: f64,
    /// frac_positive / mean, which estimates μ − λ under the mixture law.
    pub estimated_rate: f64,
    pub analytic_coefficient: f64,
    pub empirical_coefficient: f64,
    pub analytic_atom: f64,
    pub empirical_atom: f64,
    pub moments: Vec<MomentCheck>,
    pub moment_rel_errors: Vec<(u32, f64)>,
    pub ci_halfwidths: Vec<(u32, f64)>,
    pub pass: bool,
}

pub fn verify(
    q: &QueueParams,
    kind: OverlapKind,
    summary: &SampleSummary,
    cis: &[MomentCi],
    ks: &KsResult,
) -> Result<GofReport> {
    let moments = cis
        .iter()
        .map(|ci| {
            let analytic = kind.moment(q, ci.p)?;
            Ok(MomentCheck {
                p: ci.p,
                analytic,
                estimate: ci.point,
                halfwidth: ci.halfwidth,
                rel_error: (ci.point - analytic).abs() / analytic,
                covered: ci.covers(analytic),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let coefficient = kind.coefficient(q);
    let pass = ks.passes() && moments.iter().all(|m| m.covered);
    Ok(GofReport {
        kind,
        ks_statistic: ks.statistic,
        ks_threshold: ks.threshold,
        effective_n: ks.effective_n,
        ks_rate: ks.rate,
        analytic_rate: q.gap(),
        estimated_rate: summary.frac_positive / summary.mean,
        analytic_coefficient: coefficient,
        empirical_coefficient: summary.frac_positive,
        analytic_atom: 1.0 - coefficient,
        empirical_atom: summary.histogram.atom_at_zero,
        moment_rel_errors: moments.iter().map(|m| (m.p, m.rel_error)).collect(),
        ci_halfwidths: moments.iter().map(|m| (m.p, m.halfwidth)).collect(),
        moments,
        pass,
    })
}
