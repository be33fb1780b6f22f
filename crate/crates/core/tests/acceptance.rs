//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use overlapq::cli::config::DEFAULT_SEED;
use overlapq::cli::{run_from, EXIT_VALIDATION, EXIT_VERIFY_FAILED};
use overlapq::semi::{self, mm1_diff_density, mm1_wait_tail};
use overlapq::sim::{self, ReplicationStreams};
use overlapq::stats::{self, DEFAULT_BATCHES, DEFAULT_BINS, DEFAULT_BURN_IN, DEFAULT_KS_STRIDE};
use overlapq::{DistributionSpec, KsResult, QueueParams};

const N: usize = 1_000_000;
const REPS: u64 = 4;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Max and min overlap series for `REPS` replications of an M/M/1 queue.
fn mm1_runs(lambda: f64, mu: f64, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let a = DistributionSpec::exponential(lambda).unwrap();
    let s = DistributionSpec::exponential(mu).unwrap();
    (0..REPS)
        .into_par_iter()
        .map(|rep| {
            let mut streams = ReplicationStreams::new(seed, rep);
            sim::simulate_overlaps(&a, &s, N, &mut streams).unwrap()
        })
        .collect()
}

fn pooled_ks(series: &[&[f64]], rate: f64) -> KsResult {
    let thinned: Vec<f64> = series
        .iter()
        .flat_map(|s| s[DEFAULT_BURN_IN..].iter().copied().filter(|&x| x > 0.0).step_by(DEFAULT_KS_STRIDE))
        .collect();
    stats::ks_conditional_exponential(&thinned, rate, 1).unwrap()
}

fn tail_reproduction(series: &[&[f64]], expected_positive: f64, rate: f64) -> Outcome {
    let summary = stats::summarize_pooled(series, DEFAULT_BURN_IN, DEFAULT_BINS).unwrap();
    let ks = pooled_ks(series, rate);
    let diff = (summary.frac_positive - expected_positive).abs();
    outcome(
        diff <= 0.01 && ks.passes(),
        format!(
            "P(>0)={:.5} vs {:.5} (|d|={:.5} <= 0.01); KS D={:.5} < {:.5} (n={})",
            summary.frac_positive, expected_positive, diff, ks.statistic, ks.threshold, ks.effective_n
        ),
    )
}

fn criterion_1_and_3() -> (Outcome, Outcome) {
    let q = QueueParams::new(0.8, 1.0).unwrap();
    let runs = mm1_runs(0.8, 1.0, DEFAULT_SEED);
    let max: Vec<&[f64]> = runs.iter().map(|r| r.0.as_slice()).collect();
    let min: Vec<&[f64]> = runs.iter().map(|r| r.1.as_slice()).collect();
    (
        tail_reproduction(&max, 8.0 / 9.0, q.gap()),
        tail_reproduction(&min, 32.0 / 45.0, q.gap()),
    )
}

fn criterion_2() -> Outcome {
    let q = QueueParams::new(0.5, 1.0).unwrap();
    let (m1, m2) = (q.max_moment(1).unwrap(), q.max_moment(2).unwrap());
    let seeds: Vec<u64> = std::iter::once(DEFAULT_SEED).chain(1..20).collect();
    let mut covered = [0usize; 2];
    let mut first = String::new();
    for (i, &seed) in seeds.iter().enumerate() {
        let runs = mm1_runs(0.5, 1.0, seed);
        let max: Vec<&[f64]> = runs.iter().map(|r| r.0.as_slice()).collect();
        let ci1 = stats::batch_means_ci_pooled(&max, DEFAULT_BURN_IN, DEFAULT_BATCHES, 1).unwrap();
        let ci2 = stats::batch_means_ci_pooled(&max, DEFAULT_BURN_IN, DEFAULT_BATCHES, 2).unwrap();
        covered[0] += ci1.covers(m1) as usize;
        covered[1] += ci2.covers(m2) as usize;
        if i == 0 {
            first = format!(
                "seed {seed}: E[M] {:.4}±{:.4} (4/3){}, E[M^2] {:.4}±{:.4} (16/3){}",
                ci1.point,
                ci1.halfwidth,
                if ci1.covers(m1) { "" } else { " MISSED" },
                ci2.point,
                ci2.halfwidth,
                if ci2.covers(m2) { "" } else { " MISSED" },
            );
        }
    }
    let pass = covered.iter().all(|&c| c >= 17);
    outcome(
        pass,
        format!("{first}; coverage over 20 seeds: E[M] {}/20, E[M^2] {}/20 (need >= 17)", covered[0], covered[1]),
    )
}

fn criterion_4() -> Outcome {
    let pairs = [
        ("exp:0.8", "exp:1"),
        ("det:1", "exp:1.25"),
        ("exp:0.5", "det:1.5"),
        ("erlang:3:2.4", "unif:0.2:1.6"),
        ("unif:0.5:2.5", "erlang:2:2.5"),
        ("det:1", "unif:0.5:1.4"),
    ];
    let mut worst = 0.0f64;
    for (i, (a, s)) in pairs.iter().enumerate() {
        let a: DistributionSpec = a.parse().unwrap();
        let s: DistributionSpec = s.parse().unwrap();
        let mut streams = ReplicationStreams::new(DEFAULT_SEED, i as u64);
        let traj = sim::simulate(&a, &s, 100_000, &mut streams).unwrap();
        let by_dep = sim::overlap_by_departure(&traj);
        let w = traj.waits();
        for (k, o) in by_dep.iter().enumerate() {
            worst = worst.max((o - w[k + 1]).abs());
        }
    }
    outcome(worst < 1e-9, format!("6 pairings x 1e5 customers: max |O - W_next| = {worst:.3e} < 1e-9"))
}

fn random_params(rng: &mut ChaCha8Rng) -> QueueParams {
    let mu = rng.random_range(0.5..2.0);
    let rho = rng.random_range(0.05..0.95);
    QueueParams::new(rho * mu, mu).unwrap()
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let qs: Vec<QueueParams> = (0..20).map(|_| random_params(&mut rng)).collect();
    let worst = qs
        .par_iter()
        .map(|&q| {
            let wait = mm1_wait_tail(q);
            let diff = mm1_diff_density(q);
            let upper = 8.0 / q.gap();
            let mut worst = (0.0f64, 0.0f64);
            for j in 0..20 {
                let t = upper * j as f64 / 19.0;
                let nmax = semi::max_tail_numeric(&wait, &diff, q.prob_service_shorter(), t).unwrap();
                let nmin = semi::min_tail_numeric(&wait, &diff, q.prob_service_longer(), t).unwrap();
                worst.0 = worst.0.max((nmax - q.max_tail(t).unwrap()).abs());
                worst.1 = worst.1.max((nmin - q.min_tail(t).unwrap()).abs());
            }
            worst
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    outcome(
        worst.0 < 1e-6 && worst.1 < 1e-6,
        format!("20 q x 20 t: max err {:.3e} (max), {:.3e} (min), both < 1e-6", worst.0, worst.1),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h = 1e-6;
    let (mut at_zero, mut slope, mut limit) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let q = random_params(&mut rng);
        for (lst, moment, atom) in [
            (
                q.max_transform(0.0).unwrap(),
                (q.max_moment(1).unwrap(), q.max_transform(h).unwrap()),
                (q.max_atom_zero(), q.max_transform(1e12).unwrap()),
            ),
            (
                q.min_transform(0.0).unwrap(),
                (q.min_moment(1).unwrap(), q.min_transform(h).unwrap()),
                (q.min_atom_zero(), q.min_transform(1e12).unwrap()),
            ),
        ] {
            at_zero = at_zero.max((lst - 1.0).abs());
            let fd = (1.0 - moment.1) / h;
            slope = slope.max((fd - moment.0).abs() / moment.0);
            limit = limit.max((atom.1 - atom.0).abs());
        }
    }
    outcome(
        at_zero <= f64::EPSILON && slope < 1e-4 && limit < 1e-8,
        format!("100 q: |L(0)-1| {at_zero:.1e} <= eps; slope rel err {slope:.2e} < 1e-4; limit err {limit:.2e} < 1e-8"),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let q = random_params(&mut rng);
        let (l, m) = (q.lambda(), q.mu());
        let combo = q.max_moment(2).unwrap() - q.max_moment(1).unwrap().powi(2);
        let closed = 4.0 * l * m / ((l + m).powi(2) * (m - l).powi(2));
        let v = q.max_variance();
        worst = worst.max(((v - combo) / v).abs()).max(((v - closed) / v).abs());
    }
    let v = QueueParams::new(0.5, 1.0).unwrap().max_variance();
    let at_half = ((v - 32.0 / 9.0) / (32.0 / 9.0)).abs();
    outcome(
        worst < 1e-12 && at_half < 1e-12,
        format!("100 q: max rel err {worst:.2e} < 1e-12; Var[M](0.5,1) = {v:.9} vs 32/9"),
    )
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out = |name: &str| dir.path().join(name).display().to_string();
    let injected = run_from([
        "overlapq", "verify", "--lambda", "0.8", "--mu", "1", "--inject-mu", "2", "-o", &out("inject"),
    ]);
    let equal = run_from(["overlapq", "analytic", "--lambda", "1", "--mu", "1", "-o", &out("eq")]);
    let above = run_from(["overlapq", "verify", "--lambda", "1.2", "--mu", "1", "-o", &out("above")]);
    outcome(
        injected == EXIT_VERIFY_FAILED && equal == EXIT_VALIDATION && above == EXIT_VALIDATION,
        format!("inject-mu 2 -> exit {injected} (want 3); lambda=mu -> exit {equal}, lambda>mu -> exit {above} (want 1)"),
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome, f64)> = Vec::new();
    let timed = |id: u32, name: &'static str, f: &dyn Fn() -> Outcome, results: &mut Vec<_>| {
        let start = Instant::now();
        let o = f();
        results.push((id, name, o, start.elapsed().as_secs_f64()));
    };

    let start = Instant::now();
    let (c1, c3) = criterion_1_and_3();
    let shared = start.elapsed().as_secs_f64();
    results.push((1, "max-tail reproduction (0.8, 1)", c1, shared));
    timed(2, "max moments batch-means coverage (0.5, 1)", &criterion_2, &mut results);
    results.push((3, "min-tail reproduction (0.8, 1)", c3, shared));
    timed(4, "departure-based overlap equals next wait", &criterion_4, &mut results);
    timed(5, "numerical convolution vs closed-form tails", &criterion_5, &mut results);
    timed(6, "transform normalization, slope and limits", &criterion_6, &mut results);
    timed(7, "variance identity", &criterion_7, &mut results);
    timed(8, "negative controls and exit codes", &criterion_8, &mut results);
    results.sort_by_key(|r| r.0);

    let mut failed = 0;
    for (id, name, o, secs) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += !o.pass as usize;
        println!("criterion {id} {tag} [{secs:.1}s] {name}: {}", o.detail);
    }
    println!("acceptance: {}/{} passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
