//! Run configuration: TOML (or JSON) file schema, defaults and validation,
//! plus the small list parsers used on the command line.
//!
//! ```toml
//! carriers = [{ pop = 5 }, { pop = 5 }]
//! channels_per_carrier = 7          # default 7
//! mu = 1.0
//! lambda_grid = [0.5, 1.0, 1.5]     # optional here, may come from the CLI
//! scenarios = ["sequential", "concurrent"]   # or `scenario = "concurrent"`
//! mode = "mmc"                      # mmc | mechanistic
//! interpretation = "mechanistic"    # mechanistic | literal
//! horizon = 100000                  # arrivals per simulated cell
//! warmup_fraction = 0.1
//! seed = 1
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::erlang::{Interpretation, Scenario};
use crate::error::{Error, Result};
use crate::search::{CarrierSystem, DEFAULT_CHANNELS_PER_CARRIER};
use crate::sim::{SimConfig, SimMode};

pub const DEFAULT_HORIZON: u64 = 100_000;
pub const DEFAULT_WARMUP_FRACTION: f64 = 0.1;
pub const DEFAULT_SEED: u64 = 1;
/// Largest grid a `start:stop:step` range may expand to.
pub const MAX_GRID_POINTS: usize = 100_000;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCarrier {
    pop: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    carriers: Vec<RawCarrier>,
    channels_per_carrier: Option<u32>,
    mu: f64,
    lambda_grid: Option<Vec<f64>>,
    #[serde(alias = "scenario")]
    scenarios: Option<OneOrMany<Scenario>>,
    mode: Option<SimMode>,
    interpretation: Option<Interpretation>,
    horizon: Option<u64>,
    warmup_fraction: Option<f64>,
    seed: Option<u64>,
}

/// Fully resolved configuration, with every default applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub populations: Vec<u64>,
    pub channels_per_carrier: u32,
    pub mu: f64,
    /// Empty when the grid is expected from the command line.
    pub lambda_grid: Vec<f64>,
    pub scenarios: Vec<Scenario>,
    pub mode: SimMode,
    pub interpretation: Interpretation,
    pub horizon: u64,
    pub warmup_fraction: f64,
    pub seed: u64,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        Self::resolve(raw)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| {
            Error::Parse(format!(
                "config: {e} (line {}, column {})",
                e.line(),
                e.column()
            ))
        })?;
        Self::resolve(raw)
    }

    /// JSON when the first non-blank character is `{`, TOML otherwise.
    pub fn from_str_any(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Self::from_json_str(text)
        } else {
            Self::from_toml_str(text)
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str_any(&text)
    }

    fn resolve(raw: RawConfig) -> Result<Self> {
        if raw.carriers.is_empty() {
            return Err(Error::InvalidConfig(
                "`carriers` must list at least one carrier".into(),
            ));
        }
        let populations: Vec<u64> = raw.carriers.iter().map(|c| c.pop).collect();
        let channels_per_carrier = raw
            .channels_per_carrier
            .unwrap_or(DEFAULT_CHANNELS_PER_CARRIER);
        // surface system errors with config wording
        CarrierSystem::new(&populations, channels_per_carrier).map_err(|e| match e {
            Error::InvalidSystem(msg) => Error::InvalidConfig(format!("`carriers`: {msg}")),
            other => other,
        })?;
        if channels_per_carrier
            .checked_mul(populations.len() as u32)
            .is_none()
            || populations.len() > u32::MAX as usize
        {
            return Err(Error::InvalidConfig("too many channels".into()));
        }
        if !(raw.mu.is_finite() && raw.mu > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "`mu` must be positive, got {}",
                raw.mu
            )));
        }
        let lambda_grid = match raw.lambda_grid {
            Some(grid) => {
                validate_grid(&grid)
                    .map_err(|e| Error::InvalidConfig(format!("`lambda_grid`: {e}")))?;
                grid
            }
            None => Vec::new(),
        };
        let scenarios = match raw.scenarios {
            None => Scenario::ALL.to_vec(),
            Some(OneOrMany::One(s)) => vec![s],
            Some(OneOrMany::Many(v)) => {
                if v.is_empty() {
                    return Err(Error::InvalidConfig("`scenarios` must not be empty".into()));
                }
                let mut v = v;
                v.sort();
                v.dedup();
                v
            }
        };
        let horizon = raw.horizon.unwrap_or(DEFAULT_HORIZON);
        let warmup_fraction = raw.warmup_fraction.unwrap_or(DEFAULT_WARMUP_FRACTION);
        if !(0.0..1.0).contains(&warmup_fraction) {
            return Err(Error::InvalidConfig(format!(
                "`warmup_fraction` must lie in [0, 1), got {warmup_fraction}"
            )));
        }
        let cfg = Self {
            populations,
            channels_per_carrier,
            mu: raw.mu,
            lambda_grid,
            scenarios,
            mode: raw.mode.unwrap_or_default(),
            interpretation: raw.interpretation.unwrap_or_default(),
            horizon,
            warmup_fraction,
            seed: raw.seed.unwrap_or(DEFAULT_SEED),
        };
        if cfg.horizon <= cfg.warmup() || cfg.horizon < 2 {
            return Err(Error::InvalidConfig(format!(
                "`horizon` ({horizon}) must exceed the warmup ({}) and be at least 2",
                cfg.warmup()
            )));
        }
        Ok(cfg)
    }

    pub fn warmup(&self) -> u64 {
        (self.horizon as f64 * self.warmup_fraction).floor() as u64
    }

    pub fn system(&self) -> CarrierSystem {
        CarrierSystem::new(&self.populations, self.channels_per_carrier)
            .expect("validated at construction")
    }

    pub fn total_channels(&self) -> u32 {
        self.channels_per_carrier * self.populations.len() as u32
    }

    pub fn sim_config(&self, scenario: Scenario, arrival_rate: f64) -> SimConfig {
        SimConfig {
            arrival_rate,
            service_rate: self.mu,
            scenario,
            mode: self.mode,
            interpretation: self.interpretation,
            system: self.system(),
            horizon: self.horizon,
            warmup: self.warmup(),
            seed: self.seed,
        }
    }
}

/// Non-empty, finite, positive and strictly increasing.
pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Parse("grid is empty".into()));
    }
    if let Some(bad) = grid.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::Parse(format!(
            "grid value {bad} is not a positive rate"
        )));
    }
    if let Some(w) = grid.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::Parse(format!(
            "grid must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// `"0.5,1,2"` or the inclusive range `"start:stop:step"`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    let grid = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, step] = parts.as_slice() else {
            return Err(Error::Parse(format!(
                "range `{text}` must be start:stop:step"
            )));
        };
        let (start, stop, step) = (parse_f64(start)?, parse_f64(stop)?, parse_f64(step)?);
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Parse(format!(
                "range step must be positive, got {step}"
            )));
        }
        if !(start.is_finite() && stop.is_finite()) || stop < start {
            return Err(Error::Parse(format!("range {start}:{stop} is empty")));
        }
        let span = ((stop - start) / step + 1e-9).floor();
        if span.is_nan() || span >= MAX_GRID_POINTS as f64 {
            return Err(Error::Parse(format!(
                "range expands to more than {MAX_GRID_POINTS} points"
            )));
        }
        (0..=span as usize)
            .map(|i| start + i as f64 * step)
            .collect()
    } else {
        text.split(',').map(parse_f64).collect::<Result<Vec<_>>>()?
    };
    validate_grid(&grid)?;
    Ok(grid)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("`{}` is not a number", s.trim())))
}

/// Comma-separated carrier populations, e.g. `"5,3,2"`.
pub fn parse_populations(text: &str) -> Result<Vec<u64>> {
    let pops = text
        .split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<u64>().map_err(|_| {
                Error::Parse(format!("`{s}` is not a non-negative integer population"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if pops.iter().all(|&p| p == 0) {
        return Err(Error::InvalidSystem(
            "all carrier populations are zero".into(),
        ));
    }
    Ok(pops)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = RunConfig::from_toml_str("carriers = [{pop = 5}, {pop = 5}]\nmu = 1\n").unwrap();
        assert_eq!(cfg.channels_per_carrier, 7);
        assert_eq!(cfg.total_channels(), 14);
        assert_eq!(cfg.mode, SimMode::Mmc);
        assert_eq!(cfg.interpretation, Interpretation::Mechanistic);
        assert_eq!(cfg.warmup_fraction, 0.1);
        assert_eq!(cfg.warmup(), DEFAULT_HORIZON / 10);
        assert_eq!(cfg.scenarios, Scenario::ALL.to_vec());
        assert!(cfg.lambda_grid.is_empty());
    }

    #[test]
    fn json_is_accepted() {
        let cfg = RunConfig::from_str_any(
            r#"{"carriers":[{"pop":5},{"pop":5}],"mu":1,"channels_per_carrier":7,
                "scenario":"concurrent","interpretation":"mechanistic-load"}"#,
        )
        .unwrap();
        assert_eq!(cfg.total_channels(), 14);
        assert_eq!(cfg.scenarios, vec![Scenario::Concurrent]);
    }

    #[test]
    fn unknown_key_is_named() {
        let err =
            RunConfig::from_toml_str("carriers = [{pop = 1}]\nmu = 1\nspeed = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("speed"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");
        let err =
            RunConfig::from_json_str(r#"{"carriers":[{"pop":1}],"mu":1,"speed":3}"#).unwrap_err();
        assert!(err.to_string().contains("speed"));
    }

    #[test]
    fn validation_errors() {
        for bad in [
            "carriers = []\nmu = 1",
            "carriers = [{pop = 0}]\nmu = 1",
            "carriers = [{pop = 1}]\nmu = 0",
            "carriers = [{pop = 1}]\nmu = 1\nchannels_per_carrier = 0",
            "carriers = [{pop = 1}]\nmu = 1\nlambda_grid = [2, 1]",
            "carriers = [{pop = 1}]\nmu = 1\nwarmup_fraction = 1.0",
            "carriers = [{pop = 1}]\nmu = 1\nhorizon = 1",
            "carriers = [{pop = 1}]\nmu = 1\nmode = \"fast\"",
            "carriers = [{pop = 1}]\nmu = 1\nscenarios = []",
            "carriers = [{pop = -1}]\nmu = 1",
        ] {
            assert!(RunConfig::from_toml_str(bad).is_err(), "accepted: {bad}");
        }
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.5, 1,2").unwrap(), vec![0.5, 1.0, 2.0]);
        assert_eq!(
            parse_grid("1:3:0.5").unwrap(),
            vec![1.0, 1.5, 2.0, 2.5, 3.0]
        );
        assert_eq!(parse_grid("0.1:0.3:0.1").unwrap().len(), 3);
        assert!(parse_grid("").is_err());
        assert!(parse_grid("1,1").is_err());
        assert!(parse_grid("1:0:1").is_err());
        assert!(parse_grid("0:1:1e-12").is_err());
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("0,1").is_err());
        assert!(parse_grid("nan").is_err());
    }

    #[test]
    fn populations() {
        assert_eq!(parse_populations("5,3, 2").unwrap(), vec![5, 3, 2]);
        assert_eq!(parse_populations("9").unwrap(), vec![9]);
        assert!(parse_populations("0,0").is_err());
        assert!(parse_populations("a").is_err());
        assert!(parse_populations("-1,2").is_err());
    }
}
