//! Erlang B / Erlang C analytics for the paging-channel pool viewed as an
//! M/M/C queue.
//!
//! Erlang C is evaluated through the Erlang B recurrence instead of the
//! factorial form, which overflows past a few dozen channels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{build_paging_chain, expected_steps};
use crate::search::{location_distribution, CarrierSystem};

/// Paging strategy being modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Flood the page onto every carrier at once.
    Sequential,
    /// Probe carriers one at a time in priority order.
    Concurrent,
}

impl Scenario {
    pub const ALL: [Scenario; 2] = [Scenario::Sequential, Scenario::Concurrent];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Sequential => "sequential",
            Scenario::Concurrent => "concurrent",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(Scenario::Sequential),
            "concurrent" => Ok(Scenario::Concurrent),
            other => Err(Error::UnknownScenario(other.to_string())),
        }
    }
}

/// How a scenario's arrival rate is turned into queue parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpretation {
    /// Sequential serves at `mu`, concurrent at `1.5 mu`; `A = lambda / mu_eff`.
    Literal,
    /// Load follows channel work: flood costs `n` channel-pages per user,
    /// priority search costs `E[steps]` channel-pages per user.
    #[default]
    #[serde(alias = "mechanistic-load")]
    Mechanistic,
}

impl Interpretation {
    pub fn as_str(self) -> &'static str {
        match self {
            Interpretation::Literal => "literal",
            Interpretation::Mechanistic => "mechanistic",
        }
    }
}

impl fmt::Display for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Interpretation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(Interpretation::Literal),
            "mechanistic" | "mechanistic-load" => Ok(Interpretation::Mechanistic),
            other => Err(Error::Parse(format!(
                "unknown interpretation `{other}` (expected `literal` or `mechanistic`)"
            ))),
        }
    }
}

/// Speed-up factor applied to the concurrent scenario under the literal reading.
pub const LITERAL_CONCURRENT_SPEEDUP: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueParams {
    /// `A`, in erlangs.
    pub offered_load: f64,
    /// `C`, parallel servers.
    pub channels: u32,
    /// `mu_eff`, per unit time.
    pub service_rate: f64,
}

impl QueueParams {
    pub fn new(offered_load: f64, channels: u32, service_rate: f64) -> Result<Self> {
        if !(offered_load.is_finite() && offered_load > 0.0) {
            return Err(Error::NonPositiveLoad(offered_load));
        }
        if !(service_rate.is_finite() && service_rate > 0.0) {
            return Err(Error::NonPositiveRate(service_rate));
        }
        if channels == 0 {
            return Err(Error::InvalidConfig(
                "channel count must be at least 1".into(),
            ));
        }
        Ok(Self {
            offered_load,
            channels,
            service_rate,
        })
    }

    pub fn is_stable(&self) -> bool {
        self.offered_load < f64::from(self.channels)
    }

    /// Arrival rate of unit jobs implied by `A` and `mu_eff`.
    pub fn arrival_rate(&self) -> f64 {
        self.offered_load * self.service_rate
    }

    fn check_stable(&self) -> Result<()> {
        if self.is_stable() {
            Ok(())
        } else {
            Err(Error::Unstable {
                load: self.offered_load,
                channels: self.channels,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueMetrics {
    pub p_delay: f64,
    pub avg_wait_all: f64,
    pub avg_wait_delayed: f64,
    pub time_in_system: f64,
}

fn check_load(offered_load: f64) -> Result<()> {
    if offered_load.is_finite() && offered_load > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveLoad(offered_load))
    }
}

/// Blocking probability of the loss system, `B(0) = 1`,
/// `B(c) = A B(c-1) / (c + A B(c-1))`.
pub fn erlang_b(offered_load: f64, channels: u32) -> Result<f64> {
    check_load(offered_load)?;
    let mut b = 1.0;
    for c in 1..=channels {
        let ab = offered_load * b;
        b = ab / (f64::from(c) + ab);
    }
    Ok(b)
}

/// Probability that an arrival finds all `channels` servers busy.
pub fn erlang_c(offered_load: f64, channels: u32) -> Result<f64> {
    check_load(offered_load)?;
    let c = f64::from(channels);
    if offered_load >= c {
        return Err(Error::Unstable {
            load: offered_load,
            channels,
        });
    }
    let b = erlang_b(offered_load, channels)?;
    let p = c * b / (c - offered_load * (1.0 - b));
    debug_assert!(
        (-1e-12..=1.0 + 1e-12).contains(&p),
        "erlang C out of range: {p}"
    );
    Ok(p.clamp(0.0, 1.0))
}

/// Mean queueing delay over all arrivals.
pub fn avg_wait_all(params: &QueueParams) -> Result<f64> {
    params.check_stable()?;
    let p = erlang_c(params.offered_load, params.channels)?;
    Ok(p * avg_wait_delayed(params)?)
}

/// Mean queueing delay over arrivals that had to wait.
pub fn avg_wait_delayed(params: &QueueParams) -> Result<f64> {
    params.check_stable()?;
    Ok(1.0 / (params.service_rate * (f64::from(params.channels) - params.offered_load)))
}

/// Mean sojourn: wait plus one mean service time.
pub fn time_in_system(params: &QueueParams) -> Result<f64> {
    Ok(avg_wait_all(params)? + 1.0 / params.service_rate)
}

pub fn metrics(params: &QueueParams) -> Result<QueueMetrics> {
    params.check_stable()?;
    let p_delay = erlang_c(params.offered_load, params.channels)?;
    let avg_wait_delayed = avg_wait_delayed(params)?;
    let avg_wait_all = p_delay * avg_wait_delayed;
    Ok(QueueMetrics {
        p_delay,
        avg_wait_all,
        avg_wait_delayed,
        time_in_system: avg_wait_all + 1.0 / params.service_rate,
    })
}

/// Queue parameters for one scenario, plus whether they describe a stable queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioLoad {
    pub scenario: Scenario,
    pub interpretation: Interpretation,
    pub params: QueueParams,
    /// Channel-pages a single user consumes on average.
    pub pages_per_user: f64,
    pub unstable: bool,
}

/// Expected probes of a descending-priority search over `system`.
pub fn concurrent_expected_steps(system: &CarrierSystem) -> Result<f64> {
    let dist = location_distribution(system)?.descending_search()?;
    let t = expected_steps(&build_paging_chain(&dist)?)?;
    Ok(t[0])
}

/// Maps a scenario onto `(A, C, mu_eff)` with `C = channels_per_carrier * n`.
///
/// An unstable result (`A >= C`) is returned with `unstable` set rather than
/// as an error.
pub fn scenario_params(
    scenario: Scenario,
    arrival_rate: f64,
    base_rate: f64,
    system: &CarrierSystem,
    interpretation: Interpretation,
) -> Result<ScenarioLoad> {
    if !(arrival_rate.is_finite() && arrival_rate > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "arrival rate must be positive, got {arrival_rate}"
        )));
    }
    if !(base_rate.is_finite() && base_rate > 0.0) {
        return Err(Error::NonPositiveRate(base_rate));
    }
    let n = system.carrier_count() as f64;
    let channels = system.total_channels();
    let (offered_load, service_rate, pages_per_user) = match (interpretation, scenario) {
        (Interpretation::Literal, Scenario::Sequential) => (arrival_rate / base_rate, base_rate, n),
        (Interpretation::Literal, Scenario::Concurrent) => {
            let mu = LITERAL_CONCURRENT_SPEEDUP * base_rate;
            (arrival_rate / mu, mu, concurrent_expected_steps(system)?)
        }
        (Interpretation::Mechanistic, Scenario::Sequential) => {
            (n * arrival_rate / base_rate, base_rate, n)
        }
        (Interpretation::Mechanistic, Scenario::Concurrent) => {
            let steps = concurrent_expected_steps(system)?;
            (steps * arrival_rate / base_rate, base_rate / steps, steps)
        }
    };
    let params = QueueParams::new(offered_load, channels, service_rate)?;
    Ok(ScenarioLoad {
        scenario,
        interpretation,
        params,
        pages_per_user,
        unstable: !params.is_stable(),
    })
}
