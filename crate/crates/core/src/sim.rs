//! G/G/1 trajectories via the Lindley recursion and the adjacent overlap
//! series derived from them.
//!
//! Customer `k` (1-based) arrives at `T_k`, waits `W_k`, is served for `S_k`
//! and departs at `D_k = T_k + W_k + S_k`. `A_k` is the gap between arrivals
//! `k` and `k + 1`. The overlap of customers `k` and `k + 1` is
//! `max(D_k - T_{k+1}, 0)`, which equals `W_{k+1}`; the max and min overlap
//! of an interior customer are `max(W_k, W_{k+1})` and `min(W_k, W_{k+1})`.

use std::io::Write;

use crate::dist::{stream_id_for, DistributionSpec, RngStream, StreamRole};
use crate::error::{Error, Result};
use crate::output::fmt17;

/// Smallest trajectory with at least one interior customer.
pub const MIN_CUSTOMERS: usize = 3;

/// The arrival and service streams of one replication.
#[derive(Debug, Clone)]
pub struct ReplicationStreams {
    pub arrivals: RngStream,
    pub services: RngStream,
}

impl ReplicationStreams {
    pub fn new(seed: u64, replication: u64) -> Self {
        ReplicationStreams {
            arrivals: RngStream::new(seed, stream_id_for(replication, StreamRole::Arrivals)),
            services: RngStream::new(seed, stream_id_for(replication, StreamRole::Services)),
        }
    }
}

/// One customer as seen by a streaming consumer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CustomerRecord {
    /// 1-based index.
    pub k: usize,
    pub interarrival: f64,
    pub service: f64,
    pub wait: f64,
    pub arrival: f64,
    pub departure: f64,
}

/// Neumaier running sum; keeps arrival epochs accurate over long runs.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn check_len(n: usize) -> Result<()> {
    if n < MIN_CUSTOMERS {
        Err(Error::InvalidArgument(format!(
            "need at least {MIN_CUSTOMERS} customers, got {n}"
        )))
    } else {
        Ok(())
    }
}

/// Runs the recursion over given interarrival and service times, handing each
/// customer to `visit` in order. Memory use is constant.
fn run_lindley<I, F>(times: I, mut visit: F)
where
    I: Iterator<Item = (f64, f64)>,
    F: FnMut(&CustomerRecord),
{
    let mut wait = 0.0;
    let mut epoch = CompensatedSum::default();
    for (i, (a, s)) in times.enumerate() {
        let arrival = epoch.value();
        let rec = CustomerRecord {
            k: i + 1,
            interarrival: a,
            service: s,
            wait,
            arrival,
            departure: arrival + wait + s,
        };
        visit(&rec);
        wait = f64::max(wait + s - a, 0.0);
        epoch.add(a);
    }
}

/// Streams `n` customers of a G/G/1 queue to `visit` without storing them.
pub fn simulate_streaming<F>(
    arrival: &DistributionSpec,
    service: &DistributionSpec,
    n: usize,
    streams: &mut ReplicationStreams,
    visit: F,
) -> Result<()>
where
    F: FnMut(&CustomerRecord),
{
    check_len(n)?;
    let ReplicationStreams { arrivals, services } = streams;
    let times = (0..n).map(|_| (arrival.sample(arrivals), service.sample(services)));
    run_lindley(times, visit);
    Ok(())
}

/// Full G/G/1 trajectory with every per-customer array retained.
pub fn simulate(
    arrival: &DistributionSpec,
    service: &DistributionSpec,
    n: usize,
    streams: &mut ReplicationStreams,
) -> Result<Trajectory> {
    let mut traj = Trajectory::with_capacity(n);
    simulate_streaming(arrival, service, n, streams, |r| traj.push(r))?;
    Ok(traj)
}

/// Per-customer arrays of one run. Immutable once built.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    interarrivals: Vec<f64>,
    services: Vec<f64>,
    waits: Vec<f64>,
    arrivals: Vec<f64>,
    departures: Vec<f64>,
}

impl Trajectory {
    fn with_capacity(n: usize) -> Self {
        Trajectory {
            interarrivals: Vec::with_capacity(n),
            services: Vec::with_capacity(n),
            waits: Vec::with_capacity(n),
            arrivals: Vec::with_capacity(n),
            departures: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, r: &CustomerRecord) {
        self.interarrivals.push(r.interarrival);
        self.services.push(r.service);
        self.waits.push(r.wait);
        self.arrivals.push(r.arrival);
        self.departures.push(r.departure);
    }

    /// Builds a trajectory from explicit interarrival and service times.
    pub fn from_times(interarrivals: &[f64], services: &[f64]) -> Result<Self> {
        if interarrivals.len() != services.len() {
            return Err(Error::InvalidArgument(format!(
                "{} interarrival times but {} service times",
                interarrivals.len(),
                services.len()
            )));
        }
        check_len(services.len())?;
        if let Some(x) = interarrivals.iter().chain(services).find(|x| !(**x >= 0.0 && x.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "times must be finite and >= 0, got {x}"
            )));
        }
        let mut traj = Trajectory::with_capacity(services.len());
        run_lindley(
            interarrivals.iter().copied().zip(services.iter().copied()),
            |r| traj.push(r),
        );
        Ok(traj)
    }

    pub fn len(&self) -> usize {
        self.waits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waits.is_empty()
    }

    pub fn interarrivals(&self) -> &[f64] {
        &self.interarrivals
    }

    pub fn services(&self) -> &[f64] {
        &self.services
    }

    pub fn waits(&self) -> &[f64] {
        &self.waits
    }

    pub fn arrivals(&self) -> &[f64] {
        &self.arrivals
    }

    pub fn departures(&self) -> &[f64] {
        &self.departures
    }

    /// Departures from the FIFO server recursion `D_k = max(T_k, D_{k-1}) + S_k`,
    /// computed without the waiting times.
    pub fn fifo_departures(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        let mut prev = f64::NEG_INFINITY;
        for (&t, &s) in self.arrivals.iter().zip(&self.services) {
            prev = f64::max(t, prev) + s;
            out.push(prev);
        }
        out
    }

    /// Writes the raw per-customer dump, one row per interior customer.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let series = overlap_series(self);
        writeln!(w, "k,A,S,W,D,O_adj,M,Mstar")?;
        for i in 1..self.len() - 1 {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                i + 1,
                fmt17(self.interarrivals[i]),
                fmt17(self.services[i]),
                fmt17(self.waits[i]),
                fmt17(self.departures[i]),
                fmt17(series.adjacent[i]),
                fmt17(series.max[i - 1]),
                fmt17(series.min[i - 1]),
            )?;
        }
        Ok(())
    }
}

/// Overlap of each adjacent pair from departure and arrival epochs alone:
/// `O_{k,k+1} = max(D_k - T_{k+1}, 0)` for `k = 1..n-1`.
pub fn overlap_by_departure(traj: &Trajectory) -> Vec<f64> {
    traj.departures
        .iter()
        .zip(&traj.arrivals[1..])
        .map(|(&d, &t_next)| f64::max(d - t_next, 0.0))
        .collect()
}

/// Adjacent, maximum and minimum overlap series of a trajectory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OverlapSeries {
    /// `O_{k,k+1}` for `k = 1..n-1`.
    pub adjacent: Vec<f64>,
    /// `M_k` for `k = 2..n-1`.
    pub max: Vec<f64>,
    /// `M*_k` for `k = 2..n-1`.
    pub min: Vec<f64>,
}

pub fn overlap_series(traj: &Trajectory) -> OverlapSeries {
    let w = traj.waits();
    let adjacent = w[1..].to_vec();
    let (max, min) = w[1..]
        .windows(2)
        .map(|p| (f64::max(p[0], p[1]), f64::min(p[0], p[1])))
        .unzip();
    OverlapSeries { adjacent, max, min }
}

/// `M_k` from the case split on the service/interarrival comparison; the
/// tie `S_k = A_k` goes to the `S_k ≥ A_k` branch.
pub fn max_overlap_by_cases(wait: f64, service: f64, interarrival: f64) -> f64 {
    if service >= interarrival {
        wait + service - interarrival
    } else {
        wait
    }
}

/// `M*_k` from the case split: `W_k` when `S_k ≥ A_k`, else `(W_k + S_k - A_k)^+`.
pub fn min_overlap_by_cases(wait: f64, service: f64, interarrival: f64) -> f64 {
    if service >= interarrival {
        wait
    } else {
        f64::max(wait + service - interarrival, 0.0)
    }
}

/// Max and min overlap series of a simulated run, without keeping the trajectory.
pub fn simulate_overlaps(
    arrival: &DistributionSpec,
    service: &DistributionSpec,
    n: usize,
    streams: &mut ReplicationStreams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut max = Vec::with_capacity(n.saturating_sub(2));
    let mut min = Vec::with_capacity(n.saturating_sub(2));
    let mut prev_wait = None;
    simulate_streaming(arrival, service, n, streams, |r| {
        // prev_wait is W_{k-1}; interior customers start at k-1 = 2
        if let Some(pw) = prev_wait {
            if r.k >= 3 {
                max.push(f64::max(pw, r.wait));
                min.push(f64::min(pw, r.wait));
            }
        }
        prev_wait = Some(r.wait);
    })?;
    Ok((max, min))
}
