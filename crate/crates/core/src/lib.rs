//! Steady-state overlap times of adjacent customers in single-server FIFO
//! queues.
//!
//! * [`analytic`]: exact M/M/1 tails, atoms, moments and transforms of the
//!   maximum and minimum overlap time.
//! * [`sim`]: seeded G/G/1 trajectories and their overlap series.
//! * [`stats`]: summaries, batch-means intervals, KS tests, verdicts.
//! * [`semi`]: the same tails rebuilt by numerical convolution of a
//!   waiting-time tail with a service-minus-interarrival density.
//! * [`cli`]: the `overlapq` command-line front end.

pub mod analytic;
pub mod cli;
pub mod dist;
pub mod error;
pub mod output;
pub mod quad;
pub mod semi;
pub mod sim;
pub mod stats;

pub use analytic::{QueueParams, TailCurve};
pub use dist::{DistributionKind, DistributionSpec, RngStream};
pub use error::{Error, Result};
pub use sim::{OverlapSeries, ReplicationStreams, Trajectory};
pub use stats::{GofReport, KsResult, MomentCi, OverlapKind, SampleSummary};
