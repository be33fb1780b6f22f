//! The `overlapq` command line.
//!
//! Exit codes: 0 success, 1 validation error, 2 runtime or quadrature
//! failure, 3 verification failed.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
pub use commands::{cmd_analytic, cmd_convolve, cmd_simulate, cmd_verify, Outcome};
pub use config::{Command, RunConfig, Settings};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "overlapq", version, about = "Overlap times of adjacent customers in single-server queues")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Closed-form M/M/1 tails, atoms, moments and transforms
    Analytic(RunArgs),
    /// Simulate a G/G/1 queue and write overlap histograms
    Simulate(RunArgs),
    /// Check the M/M/1 closed forms against simulation
    Verify(RunArgs),
    /// Compare numerical convolution against the closed-form tails
    Convolve(RunArgs),
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// Arrival rate
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Service rate
    #[arg(long)]
    pub mu: Option<f64>,
    /// Interarrival distribution: exp:rate, det:value, erlang:k:rate, unif:a:b
    #[arg(long)]
    pub arrival: Option<String>,
    /// Service distribution, same syntax as --arrival
    #[arg(long)]
    pub service: Option<String>,
    /// Customers per replication
    #[arg(long, short = 'n')]
    pub n: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Falls back to $OVERLAPQ_SEED
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replications: Option<usize>,
    /// Histogram bins
    #[arg(long)]
    pub bins: Option<usize>,
    /// Subsampling stride for the KS test
    #[arg(long)]
    pub stride: Option<usize>,
    /// Batch-means batches per replication
    #[arg(long)]
    pub batches: Option<usize>,
    #[arg(long, short = 'o')]
    pub output_dir: Option<PathBuf>,
    /// Also report the printed (unnormalized) transform forms
    #[arg(long)]
    pub paper_exact: bool,
    /// Write raw.csv with per-customer values of the first replication
    #[arg(long)]
    pub dump_raw: bool,
    /// Compare against a deliberately wrong service rate (negative control)
    #[arg(long, hide = true)]
    pub inject_mu: Option<f64>,
    /// key=value manifest or a previous report.json; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads for replications (default: available parallelism)
    #[arg(long)]
    pub threads: Option<usize>,
}

impl RunArgs {
    fn to_settings(&self) -> crate::Result<Settings> {
        let mut s = Settings::default();
        s.set_opt("lambda", self.lambda)?;
        s.set_opt("mu", self.mu)?;
        s.set_opt("arrival", self.arrival.as_ref())?;
        s.set_opt("service", self.service.as_ref())?;
        s.set_opt("n", self.n)?;
        s.set_opt("burn_in", self.burn_in)?;
        s.set_opt("seed", self.seed)?;
        s.set_opt("replications", self.replications)?;
        s.set_opt("bins", self.bins)?;
        s.set_opt("stride", self.stride)?;
        s.set_opt("batches", self.batches)?;
        s.set_opt("output_dir", self.output_dir.as_ref().map(|p| p.display()))?;
        s.set_opt("inject_mu", self.inject_mu)?;
        if self.paper_exact {
            s.set("paper_exact", true)?;
        }
        if self.dump_raw {
            s.set("dump_raw", true)?;
        }
        Ok(s)
    }

    /// Manifest values overlaid by explicit flags, then resolved.
    pub fn resolve(&self, command: Command, env_seed: Option<&str>) -> crate::Result<RunConfig> {
        let mut settings = match &self.config {
            Some(path) => Settings::from_file(path, command)?,
            None => Settings::default(),
        };
        settings.merge(self.to_settings()?);
        settings.resolve(command, env_seed)
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_RUNTIME
    }
}

/// Runs one parsed invocation and returns its exit code.
pub fn execute(cli: Cli) -> i32 {
    let (command, args) = match &cli.command {
        CliCommand::Analytic(a) => (Command::Analytic, a),
        CliCommand::Simulate(a) => (Command::Simulate, a),
        CliCommand::Verify(a) => (Command::Verify, a),
        CliCommand::Convolve(a) => (Command::Convolve, a),
    };
    let env_seed = std::env::var(config::SEED_ENV).ok();
    let cfg = match args.resolve(command, env_seed.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = args.threads {
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return EXIT_RUNTIME;
        }
    };

    let result = pool.install(|| match command {
        Command::Analytic => cmd_analytic(&cfg),
        Command::Simulate => cmd_simulate(&cfg),
        Command::Verify => cmd_verify(&cfg),
        Command::Convolve => cmd_convolve(&cfg),
    });
    match result {
        Ok(out) => {
            println!("{}", out.message);
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            if out.passed {
                EXIT_OK
            } else {
                eprintln!("verification failed");
                EXIT_VERIFY_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Parses `args` (including the program name) and runs it.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            }
        }
    }
}
