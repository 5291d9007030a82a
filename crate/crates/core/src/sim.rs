//! Discrete-event simulation of the paging-channel pool.
//!
//! Two fidelities:
//!
//! * [`run_mmc`] treats the pool as `C` identical servers behind one FIFO
//!   queue, fed by the scenario's `(A, mu_eff)`; it converges to the
//!   Erlang C analytics.
//! * [`run_mechanistic`] runs the actual searches against per-carrier
//!   channel pools. A flood holds one channel on every carrier; a priority
//!   search holds one channel at a time and moves down its probe list on a
//!   miss.
//!
//! Both are single-threaded and fully determined by the config's seed.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::erlang::{scenario_params, Interpretation, Scenario, ScenarioLoad};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::search::{build_priority_shuffled, location_distribution, CarrierId, CarrierSystem};

/// Batches used for batch-means confidence intervals.
pub const BATCHES: usize = 20;

const ARRIVAL_STREAM: u64 = 0;
const SERVICE_STREAM: u64 = 1;
const LOCATION_STREAM: u64 = 2;
const PRIORITY_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    #[default]
    Mmc,
    Mechanistic,
}

impl SimMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SimMode::Mmc => "mmc",
            SimMode::Mechanistic => "mechanistic",
        }
    }
}

impl fmt::Display for SimMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SimMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mmc" => Ok(SimMode::Mmc),
            "mechanistic" => Ok(SimMode::Mechanistic),
            other => Err(Error::Parse(format!(
                "unknown mode `{other}` (expected `mmc` or `mechanistic`)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// User page requests per unit time.
    pub arrival_rate: f64,
    /// Base per-channel service rate `mu`.
    pub service_rate: f64,
    pub scenario: Scenario,
    pub mode: SimMode,
    pub interpretation: Interpretation,
    pub system: CarrierSystem,
    /// Total arrivals generated.
    pub horizon: u64,
    /// Leading arrivals excluded from the statistics.
    pub warmup: u64,
    pub seed: u64,
}

impl SimConfig {
    /// Warmup defaults to 10% of the horizon.
    pub fn new(
        system: CarrierSystem,
        scenario: Scenario,
        arrival_rate: f64,
        service_rate: f64,
        horizon: u64,
        seed: u64,
    ) -> Self {
        Self {
            arrival_rate,
            service_rate,
            scenario,
            mode: SimMode::Mmc,
            interpretation: Interpretation::Mechanistic,
            system,
            horizon,
            warmup: horizon / 10,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.arrival_rate.is_finite() && self.arrival_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "arrival rate must be positive, got {}",
                self.arrival_rate
            )));
        }
        if !(self.service_rate.is_finite() && self.service_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "service rate must be positive, got {}",
                self.service_rate
            )));
        }
        if self.horizon <= self.warmup {
            return Err(Error::InvalidConfig(format!(
                "horizon ({}) must exceed warmup ({})",
                self.horizon, self.warmup
            )));
        }
        Ok(())
    }

    /// Queue parameters this config maps to.
    pub fn load(&self) -> Result<ScenarioLoad> {
        scenario_params(
            self.scenario,
            self.arrival_rate,
            self.service_rate,
            &self.system,
            self.interpretation,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    /// Post-warmup arrivals that contributed to the estimates.
    pub observed: u64,
    pub delayed: u64,
    pub p_delay_hat: f64,
    pub awa_hat: f64,
    /// `None` when no arrival was delayed.
    pub awd_hat: Option<f64>,
    pub t_hat: f64,
    pub ci_p_delay: Option<f64>,
    pub ci_awa: Option<f64>,
    pub ci_awd: Option<f64>,
    pub ci_t: Option<f64>,
    /// Mechanistic mode only.
    pub pages_per_user_hat: Option<f64>,
    pub ci_pages: Option<f64>,
    /// Time-average number in system over the measurement window.
    pub mean_in_system: f64,
    /// Observed arrival rate over the measurement window.
    pub arrival_rate_hat: f64,
    pub offered_load: f64,
    pub channels: u32,
    pub unstable: bool,
}

/// Batch-means 95% half-width with `batches - 1` degrees of freedom.
///
/// Samples are cut into `batches` contiguous batches of equal size; any
/// remainder at the tail is dropped.
pub fn confidence_interval(samples: &[f64], batches: usize) -> Result<f64> {
    if batches < 2 {
        return Err(Error::DegenerateSample(format!(
            "need at least 2 batches, got {batches}"
        )));
    }
    let size = samples.len() / batches;
    if size < 2 {
        return Err(Error::DegenerateSample(format!(
            "{} samples cannot fill {batches} batches of at least 2",
            samples.len()
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateSample("non-finite sample".into()));
    }
    let means: Vec<f64> = samples
        .chunks_exact(size)
        .take(batches)
        .map(|b| b.iter().sum::<f64>() / size as f64)
        .collect();
    let k = means.len() as f64;
    let grand = means.iter().sum::<f64>() / k;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (k - 1.0);
    let t = StudentsT::new(0.0, 1.0, k - 1.0)
        .map_err(|e| Error::DegenerateSample(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(t * (var / k).sqrt())
}

fn ci_or_none(samples: &[f64]) -> Option<f64> {
    confidence_interval(samples, BATCHES).ok()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[derive(Debug, Clone, Copy)]
enum EventKind {
    Arrival,
    /// M/M/C service completion.
    Departure,
    /// A channel on `carrier` held for request `request` is released.
    ChannelDone {
        request: usize,
        carrier: CarrierId,
    },
}

#[derive(Debug)]
struct Scheduled {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // reversed: BinaryHeap is a max-heap and we want the earliest event
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Event calendar with a monotone clock and a number-in-system integral
/// restricted to the measurement window.
struct Calendar {
    heap: BinaryHeap<Scheduled>,
    seq: u64,
    now: f64,
    in_system: u64,
    area: f64,
    window_start: Option<f64>,
    window_end: Option<f64>,
}

impl Calendar {
    fn new() -> Self {
        Self {
            heap: BinaryHeap::new(),
            seq: 0,
            now: 0.0,
            in_system: 0,
            area: 0.0,
            window_start: None,
            window_end: None,
        }
    }

    fn schedule(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        self.heap.push(Scheduled {
            time,
            seq: self.seq,
            kind,
        });
    }

    fn next(&mut self) -> Option<EventKind> {
        let ev = self.heap.pop()?;
        assert!(ev.time >= self.now, "event clock went backwards");
        if let Some(start) = self.window_start {
            let lo = self.now.max(start);
            let hi = match self.window_end {
                Some(end) => ev.time.min(end),
                None => ev.time,
            };
            if hi > lo {
                self.area += self.in_system as f64 * (hi - lo);
            }
        }
        self.now = ev.time;
        Some(ev.kind)
    }

    fn mean_in_system(&self) -> f64 {
        match (self.window_start, self.window_end) {
            (Some(s), Some(e)) if e > s => self.area / (e - s),
            _ => 0.0,
        }
    }
}

/// Per-arrival observations, indexed by arrival order.
struct Record {
    wait: Vec<f64>,
    sojourn: Vec<f64>,
    pages: Vec<f64>,
}

impl Record {
    fn new(horizon: u64, with_pages: bool) -> Self {
        let n = horizon as usize;
        Self {
            wait: vec![0.0; n],
            sojourn: vec![f64::NAN; n],
            pages: if with_pages { vec![0.0; n] } else { Vec::new() },
        }
    }
}

fn summarize(rec: &Record, cal: &Calendar, warmup: u64, load: &ScenarioLoad) -> SimStats {
    let w = warmup as usize;
    let waits = &rec.wait[w..];
    let sojourns = &rec.sojourn[w..];
    debug_assert!(sojourns.iter().all(|s| s.is_finite()));
    let indicators: Vec<f64> = waits
        .iter()
        .map(|&x| if x > 0.0 { 1.0 } else { 0.0 })
        .collect();
    let delayed_waits: Vec<f64> = waits.iter().copied().filter(|&x| x > 0.0).collect();
    let observed = waits.len() as u64;
    let delayed = delayed_waits.len() as u64;
    let (pages_hat, ci_pages) = if rec.pages.is_empty() {
        (None, None)
    } else {
        let p = &rec.pages[w..];
        (Some(mean(p)), ci_or_none(p))
    };
    let window = match (cal.window_start, cal.window_end) {
        (Some(s), Some(e)) if e > s => e - s,
        _ => f64::NAN,
    };
    SimStats {
        observed,
        delayed,
        p_delay_hat: mean(&indicators),
        awa_hat: mean(waits),
        awd_hat: (delayed > 0).then(|| mean(&delayed_waits)),
        t_hat: mean(sojourns),
        ci_p_delay: ci_or_none(&indicators),
        ci_awa: ci_or_none(waits),
        ci_awd: ci_or_none(&delayed_waits),
        ci_t: ci_or_none(sojourns),
        pages_per_user_hat: pages_hat,
        ci_pages,
        mean_in_system: cal.mean_in_system(),
        arrival_rate_hat: observed.saturating_sub(1) as f64 / window,
        offered_load: load.params.offered_load,
        channels: load.params.channels,
        unstable: load.unstable,
    }
}

/// Runs the config in its configured mode.
pub fn run(config: &SimConfig) -> Result<SimStats> {
    match config.mode {
        SimMode::Mmc => run_mmc(config),
        SimMode::Mechanistic => run_mechanistic(config),
    }
}

/// `C` servers, one FIFO queue, Poisson(`A mu_eff`) arrivals,
/// exponential(`mu_eff`) service.
pub fn run_mmc(config: &SimConfig) -> Result<SimStats> {
    config.validate()?;
    let load = config.load()?;
    let params = load.params;
    let servers = u64::from(params.channels);
    let inter = Exp::new(params.arrival_rate()).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let service = Exp::new(params.service_rate).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut arrival_rng = stream_rng(config.seed, ARRIVAL_STREAM);
    let mut service_rng = stream_rng(config.seed, SERVICE_STREAM);

    let mut rec = Record::new(config.horizon, false);
    let mut cal = Calendar::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut arrival_time = vec![0.0; config.horizon as usize];
    let mut busy = 0u64;
    let mut generated = 0usize;

    cal.schedule(inter.sample(&mut arrival_rng), EventKind::Arrival);
    while let Some(kind) = cal.next() {
        let now = cal.now;
        match kind {
            EventKind::Arrival => {
                let id = generated;
                generated += 1;
                arrival_time[id] = now;
                if id as u64 == config.warmup {
                    cal.window_start = Some(now);
                }
                if generated as u64 == config.horizon {
                    cal.window_end = Some(now);
                } else {
                    cal.schedule(now + inter.sample(&mut arrival_rng), EventKind::Arrival);
                }
                cal.in_system += 1;
                if busy < servers {
                    busy += 1;
                    let s = service.sample(&mut service_rng);
                    rec.sojourn[id] = s;
                    cal.schedule(now + s, EventKind::Departure);
                } else {
                    queue.push_back(id);
                }
            }
            EventKind::Departure => {
                cal.in_system -= 1;
                if let Some(id) = queue.pop_front() {
                    let wait = now - arrival_time[id];
                    let s = service.sample(&mut service_rng);
                    rec.wait[id] = wait;
                    rec.sojourn[id] = wait + s;
                    cal.schedule(now + s, EventKind::Departure);
                } else {
                    busy -= 1;
                }
            }
            EventKind::ChannelDone { .. } => unreachable!("mmc schedules no channel events"),
        }
    }
    Ok(summarize(&rec, &cal, config.warmup, &load))
}

struct Request {
    arrival: f64,
    location: CarrierId,
    order: Vec<CarrierId>,
    visited: Vec<bool>,
    waiting_since: Option<f64>,
}

impl Request {
    fn remaining(&self) -> impl Iterator<Item = CarrierId> + '_ {
        self.order
            .iter()
            .copied()
            .filter(|id| !self.visited[id.0 - 1])
    }
}

/// Channel-level simulation of the search itself.
///
/// Requests arrive at `arrival_rate`; every page holds one channel for an
/// exponential(`mu`) time. A flood waits (FIFO) until every carrier has a
/// free channel, then pages all of them and finishes when the copy on the
/// user's carrier completes. A priority search pages the best unvisited
/// carrier with a free channel; when none is free it waits on all of its
/// unvisited carriers and the first channel released on any of them goes to
/// the oldest such waiter. The `interpretation` only affects the reported
/// offered load, not the dynamics.
pub fn run_mechanistic(config: &SimConfig) -> Result<SimStats> {
    config.validate()?;
    let load = scenario_params(
        config.scenario,
        config.arrival_rate,
        config.service_rate,
        &config.system,
        Interpretation::Mechanistic,
    )?;
    let load = ScenarioLoad {
        interpretation: config.interpretation,
        ..load
    };
    let system = &config.system;
    let n = system.carrier_count();
    let dist = location_distribution(system)?;
    let inter = Exp::new(config.arrival_rate).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let service = Exp::new(config.service_rate).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut arrival_rng = stream_rng(config.seed, ARRIVAL_STREAM);
    let mut service_rng = stream_rng(config.seed, SERVICE_STREAM);
    let mut location_rng = stream_rng(config.seed, LOCATION_STREAM);
    let mut priority_rng = stream_rng(config.seed, PRIORITY_STREAM);

    let horizon = config.horizon as usize;
    let mut rec = Record::new(config.horizon, true);
    let mut cal = Calendar::new();
    let mut requests: Vec<Request> = Vec::with_capacity(horizon);
    let mut free = vec![system.channels_per_carrier(); n];
    // flood: strict FIFO; priority search: per-carrier waiter sets ordered by arrival
    let mut flood_queue: VecDeque<usize> = VecDeque::new();
    let mut waiters: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];

    cal.schedule(inter.sample(&mut arrival_rng), EventKind::Arrival);

    struct Ctx<'a, R: Rng> {
        cal: &'a mut Calendar,
        rec: &'a mut Record,
        free: &'a mut [u32],
        service: &'a Exp<f64>,
        rng: &'a mut R,
    }

    impl<R: Rng> Ctx<'_, R> {
        fn page(&mut self, id: usize, carrier: CarrierId) {
            self.free[carrier.0 - 1] -= 1;
            self.rec.pages[id] += 1.0;
            let t = self.cal.now + self.service.sample(self.rng);
            self.cal.schedule(
                t,
                EventKind::ChannelDone {
                    request: id,
                    carrier,
                },
            );
        }

        fn stop_waiting(&mut self, req: &mut Request, id: usize) {
            if let Some(since) = req.waiting_since.take() {
                self.rec.wait[id] += self.cal.now - since;
            }
        }
    }

    fn try_probe<R: Rng>(
        ctx: &mut Ctx<'_, R>,
        waiters: &mut [BTreeSet<usize>],
        req: &mut Request,
        id: usize,
    ) {
        let pick = req.remaining().find(|c| ctx.free[c.0 - 1] > 0);
        match pick {
            Some(c) => {
                req.visited[c.0 - 1] = true;
                ctx.page(id, c);
            }
            None => {
                for c in req.remaining() {
                    waiters[c.0 - 1].insert(id);
                }
                req.waiting_since = Some(ctx.cal.now);
            }
        }
    }

    while let Some(kind) = cal.next() {
        let now = cal.now;
        let mut ctx = Ctx {
            cal: &mut cal,
            rec: &mut rec,
            free: &mut free,
            service: &service,
            rng: &mut service_rng,
        };
        match kind {
            EventKind::Arrival => {
                let id = requests.len();
                if id as u64 == config.warmup {
                    ctx.cal.window_start = Some(now);
                }
                if id + 1 == horizon {
                    ctx.cal.window_end = Some(now);
                } else {
                    let next = now + inter.sample(&mut arrival_rng);
                    ctx.cal.schedule(next, EventKind::Arrival);
                }
                ctx.cal.in_system += 1;
                let location = dist.sample(&mut location_rng);
                let order = match config.scenario {
                    Scenario::Sequential => system.carrier_ids().collect(),
                    Scenario::Concurrent => build_priority_shuffled(&dist, &mut priority_rng)
                        .order()
                        .to_vec(),
                };
                let mut req = Request {
                    arrival: now,
                    location,
                    order,
                    visited: vec![false; n],
                    waiting_since: None,
                };
                match config.scenario {
                    Scenario::Sequential => {
                        if flood_queue.is_empty() && ctx.free.iter().all(|&f| f > 0) {
                            for c in system.carrier_ids() {
                                ctx.page(id, c);
                            }
                        } else {
                            req.waiting_since = Some(now);
                            flood_queue.push_back(id);
                        }
                    }
                    Scenario::Concurrent => try_probe(&mut ctx, &mut waiters, &mut req, id),
                }
                requests.push(req);
            }
            EventKind::ChannelDone { request, carrier } => {
                ctx.free[carrier.0 - 1] += 1;
                let found = requests[request].location == carrier;
                if found {
                    ctx.cal.in_system -= 1;
                    ctx.rec.sojourn[request] = now - requests[request].arrival;
                }
                match config.scenario {
                    Scenario::Sequential => {
                        while let Some(&head) = flood_queue.front() {
                            if !ctx.free.iter().all(|&f| f > 0) {
                                break;
                            }
                            flood_queue.pop_front();
                            ctx.stop_waiting(&mut requests[head], head);
                            for c in system.carrier_ids() {
                                ctx.page(head, c);
                            }
                        }
                    }
                    Scenario::Concurrent => {
                        let slot = carrier.0 - 1;
                        if let Some(&w) = waiters[slot].first() {
                            let req = &mut requests[w];
                            for c in req.remaining() {
                                waiters[c.0 - 1].remove(&w);
                            }
                            ctx.stop_waiting(req, w);
                            req.visited[slot] = true;
                            ctx.page(w, carrier);
                        }
                        if !found {
                            let req = &mut requests[request];
                            if req.remaining().next().is_none() {
                                return Err(Error::Exhausted);
                            }
                            try_probe(&mut ctx, &mut waiters, req, request);
                        }
                    }
                }
            }
            EventKind::Departure => unreachable!("mechanistic mode schedules no departures"),
        }
    }
    Ok(summarize(&rec, &cal, config.warmup, &load))
}
