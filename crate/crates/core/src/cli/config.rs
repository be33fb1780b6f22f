//! Run configuration: flags merged over an optional manifest file.
//!
//! A manifest is either flat `key=value` lines (`#` starts a comment) or a
//! JSON report previously written by this tool, whose embedded `config`
//! object is read back. Explicit flags always win over the manifest; the
//! `OVERLAPQ_SEED` environment variable is the fallback seed.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytic::QueueParams;
use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::stats::{DEFAULT_BATCHES, DEFAULT_BINS, DEFAULT_BURN_IN, DEFAULT_KS_STRIDE};

pub const SEED_ENV: &str = "OVERLAPQ_SEED";
pub const DEFAULT_SEED: u64 = 20240501;
pub const DEFAULT_CUSTOMERS: usize = 1_000_000;

/// Keys accepted in manifests; anything else is rejected.
pub const KEYS: &[&str] = &[
    "lambda",
    "mu",
    "arrival",
    "service",
    "n",
    "burn_in",
    "seed",
    "replications",
    "bins",
    "stride",
    "batches",
    "output_dir",
    "paper_exact",
    "dump_raw",
    "inject_mu",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Analytic,
    Simulate,
    Verify,
    Convolve,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Analytic => "analytic",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::Convolve => "convolve",
        };
        f.write_str(s)
    }
}

/// Fully resolved settings of one run. Embedded verbatim in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub arrival: Option<String>,
    pub service: Option<String>,
    pub n: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub replications: usize,
    pub bins: usize,
    pub stride: usize,
    pub batches: usize,
    pub output_dir: PathBuf,
    pub paper_exact: bool,
    pub dump_raw: bool,
    pub inject_mu: Option<f64>,
}

/// Raw key/value settings before typing and defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn set(&mut self, key: &str, value: impl ToString) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::InvalidArgument(format!("unknown config key {key:?}")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Sets `key` only when `value` is present.
    pub fn set_opt<T: ToString>(&mut self, key: &str, value: Option<T>) -> Result<()> {
        match value {
            Some(v) => self.set(key, v),
            None => Ok(()),
        }
    }

    /// Overlays `other` on top of `self`.
    pub fn merge(&mut self, other: Settings) {
        self.values.extend(other.values);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Parses a manifest; `command` entries must match `expected`.
    pub fn parse_manifest(text: &str, expected: Command) -> Result<Settings> {
        if text.trim_start().starts_with('{') {
            Self::parse_json(text, expected)
        } else {
            Self::parse_kv(text, expected)
        }
    }

    fn parse_kv(text: &str, expected: Command) -> Result<Settings> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("config line {}: expected key=value, got {raw:?}", i + 1))
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k == "command" {
                check_command(v, expected)?;
            } else {
                s.set(k, v)?;
            }
        }
        Ok(s)
    }

    fn parse_json(text: &str, expected: Command) -> Result<Settings> {
        let root: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("config JSON: {e}")))?;
        let obj = root
            .get("config")
            .unwrap_or(&root)
            .as_object()
            .ok_or_else(|| Error::InvalidArgument("config JSON must be an object".into()))?;
        let mut s = Settings::default();
        for (k, v) in obj {
            let text = match v {
                serde_json::Value::Null => continue,
                serde_json::Value::String(x) => x.clone(),
                other => other.to_string(),
            };
            if k == "command" {
                check_command(&text, expected)?;
            } else {
                s.set(k, text)?;
            }
        }
        Ok(s)
    }

    pub fn from_file(path: &Path, expected: Command) -> Result<Settings> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_manifest(&text, expected)
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::InvalidArgument(format!("{key}: cannot parse {v:?}")))
            })
            .transpose()
    }

    /// Applies defaults and validates every value before any work starts.
    pub fn resolve(&self, command: Command, env_seed: Option<&str>) -> Result<RunConfig> {
        let seed = match self.parse::<u64>("seed")? {
            Some(s) => s,
            None => match env_seed {
                Some(v) => v.trim().parse::<u64>().map_err(|_| {
                    Error::InvalidArgument(format!("{SEED_ENV}: cannot parse {v:?} as a seed"))
                })?,
                None => DEFAULT_SEED,
            },
        };
        let default_reps = if command == Command::Verify { 4 } else { 1 };
        let cfg = RunConfig {
            command,
            lambda: self.parse("lambda")?,
            mu: self.parse("mu")?,
            arrival: self.get("arrival").map(str::to_string),
            service: self.get("service").map(str::to_string),
            n: self.parse("n")?.unwrap_or(DEFAULT_CUSTOMERS),
            burn_in: self.parse("burn_in")?.unwrap_or(DEFAULT_BURN_IN),
            seed,
            replications: self.parse("replications")?.unwrap_or(default_reps),
            bins: self.parse("bins")?.unwrap_or(DEFAULT_BINS),
            stride: self.parse("stride")?.unwrap_or(DEFAULT_KS_STRIDE),
            batches: self.parse("batches")?.unwrap_or(DEFAULT_BATCHES),
            output_dir: self.get("output_dir").map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
            paper_exact: self.parse("paper_exact")?.unwrap_or(false),
            dump_raw: self.parse("dump_raw")?.unwrap_or(false),
            inject_mu: self.parse("inject_mu")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn check_command(v: &str, expected: Command) -> Result<()> {
    if v == expected.to_string() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "config is for command {v:?} but {expected} was requested"
        )))
    }
}

impl RunConfig {
    /// M/M/1 parameters from `lambda`/`mu`, required by this command.
    pub fn queue_params(&self) -> Result<QueueParams> {
        match (self.lambda, self.mu) {
            (Some(l), Some(m)) => QueueParams::new(l, m),
            _ => Err(Error::InvalidArgument(format!(
                "{} needs --lambda and --mu",
                self.command
            ))),
        }
    }

    /// Interarrival and service distributions: explicit specs, falling back
    /// to exponentials with rates `lambda` and `mu`.
    pub fn distributions(&self) -> Result<(DistributionSpec, DistributionSpec)> {
        let pick = |spec: &Option<String>, rate: Option<f64>, name: &str| -> Result<DistributionSpec> {
            match (spec, rate) {
                (Some(s), _) => s.parse(),
                (None, Some(r)) => DistributionSpec::exponential(r),
                (None, None) => Err(Error::InvalidArgument(format!(
                    "{} needs --{name} or the matching rate",
                    self.command
                ))),
            }
        };
        Ok((
            pick(&self.arrival, self.lambda, "arrival")?,
            pick(&self.service, self.mu, "service")?,
        ))
    }

    /// M/M/1 parameters for `verify`: specs, when given, must be exponential
    /// and agree with any explicit rates.
    pub fn mm1_params(&self) -> Result<QueueParams> {
        let rate_of = |spec: &Option<String>, explicit: Option<f64>, name: &str| -> Result<Option<f64>> {
            let Some(s) = spec else { return Ok(explicit) };
            let d: DistributionSpec = s.parse()?;
            let r = d.exponential_rate().ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "verify needs exponential {name} times (got {s}); use `simulate` for general G/G/1 runs"
                ))
            })?;
            match explicit {
                Some(e) if e != r => Err(Error::InvalidArgument(format!(
                    "--{name} {s} disagrees with rate {e}"
                ))),
                _ => Ok(Some(r)),
            }
        };
        let lambda = rate_of(&self.arrival, self.lambda, "arrival")?;
        let mu = rate_of(&self.service, self.mu, "service")?;
        match (lambda, mu) {
            (Some(l), Some(m)) => QueueParams::new(l, m),
            _ => Err(Error::InvalidArgument("verify needs --lambda and --mu".into())),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.replications == 0 {
            return bad("replications must be >= 1".into());
        }
        if self.bins == 0 || self.stride == 0 {
            return bad("bins and stride must be >= 1".into());
        }
        if let Some(m) = self.inject_mu {
            if !m.is_finite() || m <= 0.0 {
                return bad(format!("inject_mu must be > 0, got {m}"));
            }
        }
        match self.command {
            Command::Analytic | Command::Convolve => {
                self.queue_params()?;
            }
            Command::Simulate => {
                self.distributions()?;
                if self.arrival.is_none() || self.service.is_none() {
                    self.queue_params()?;
                }
                self.check_run_length()?;
            }
            Command::Verify => {
                self.mm1_params()?;
                self.check_run_length()?;
                if self.batches < 10 {
                    return bad(format!("batches must be >= 10, got {}", self.batches));
                }
                if self.n.saturating_sub(2 + self.burn_in) < 100 * self.batches {
                    return bad(format!(
                        "n = {} leaves too few samples for {} batches after burn-in {}",
                        self.n, self.batches, self.burn_in
                    ));
                }
            }
        }
        Ok(())
    }

    fn check_run_length(&self) -> Result<()> {
        // interior customers: n - 2
        if self.n < 3 || self.n - 2 <= self.burn_in + 100 {
            return Err(Error::InvalidArgument(format!(
                "n = {} must exceed burn-in {} by more than 102 customers",
                self.n, self.burn_in
            )));
        }
        Ok(())
    }

    /// The settings that reproduce this run.
    pub fn to_settings(&self) -> Settings {
        let mut s = Settings::default();
        let put = |s: &mut Settings, k: &str, v: String| s.set(k, v).expect("known key");
        if let Some(v) = self.lambda {
            put(&mut s, "lambda", v.to_string());
        }
        if let Some(v) = self.mu {
            put(&mut s, "mu", v.to_string());
        }
        if let Some(v) = &self.arrival {
            put(&mut s, "arrival", v.clone());
        }
        if let Some(v) = &self.service {
            put(&mut s, "service", v.clone());
        }
        put(&mut s, "n", self.n.to_string());
        put(&mut s, "burn_in", self.burn_in.to_string());
        put(&mut s, "seed", self.seed.to_string());
        put(&mut s, "replications", self.replications.to_string());
        put(&mut s, "bins", self.bins.to_string());
        put(&mut s, "stride", self.stride.to_string());
        put(&mut s, "batches", self.batches.to_string());
        put(&mut s, "output_dir", self.output_dir.display().to_string());
        put(&mut s, "paper_exact", self.paper_exact.to_string());
        put(&mut s, "dump_raw", self.dump_raw.to_string());
        if let Some(v) = self.inject_mu {
            put(&mut s, "inject_mu", v.to_string());
        }
        s
    }

    /// Flat `key=value` manifest text.
    pub fn to_manifest(&self) -> String {
        let mut out = format!("command={}\n", self.command);
        for (k, v) in &self.to_settings().values {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }
}
