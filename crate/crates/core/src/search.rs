//! Carrier systems and the two paging searches: flooding every carrier at
//! once, and probing carriers one at a time in descending order of location
//! probability.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::erlang::Scenario;
use crate::error::{Error, Result};
use crate::markov::SearchDistribution;
use crate::rng::stream_rng;

/// Paging channels carried by one CDMA carrier.
pub const DEFAULT_CHANNELS_PER_CARRIER: u32 = 7;

/// Upper bound on rounds a single search may wait for a free channel.
pub const MAX_SEARCH_ROUNDS: u32 = 100_000;

/// 1-based carrier index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CarrierId(pub usize);

impl CarrierId {
    fn index(self) -> usize {
        self.0 - 1
    }
}

impl fmt::Display for CarrierId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Carrier {
    pub id: CarrierId,
    /// Registered users `U_j`.
    pub population: u64,
    pub busy_channels: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CarrierSystem {
    carriers: Vec<Carrier>,
    channels_per_carrier: u32,
}

impl CarrierSystem {
    pub fn new(populations: &[u64], channels_per_carrier: u32) -> Result<Self> {
        if populations.is_empty() {
            return Err(Error::InvalidSystem(
                "at least one carrier is required".into(),
            ));
        }
        if populations.iter().all(|&p| p == 0) {
            return Err(Error::InvalidSystem(
                "at least one carrier must have a positive population".into(),
            ));
        }
        if channels_per_carrier == 0 {
            return Err(Error::InvalidSystem(
                "channels_per_carrier must be at least 1".into(),
            ));
        }
        let carriers = populations
            .iter()
            .enumerate()
            .map(|(i, &population)| Carrier {
                id: CarrierId(i + 1),
                population,
                busy_channels: 0,
            })
            .collect();
        Ok(Self {
            carriers,
            channels_per_carrier,
        })
    }

    /// Seven paging channels per carrier.
    pub fn from_populations(populations: &[u64]) -> Result<Self> {
        Self::new(populations, DEFAULT_CHANNELS_PER_CARRIER)
    }

    pub fn carriers(&self) -> &[Carrier] {
        &self.carriers
    }

    pub fn carrier_count(&self) -> usize {
        self.carriers.len()
    }

    pub fn channels_per_carrier(&self) -> u32 {
        self.channels_per_carrier
    }

    pub fn total_channels(&self) -> u32 {
        self.channels_per_carrier * self.carriers.len() as u32
    }

    pub fn carrier_ids(&self) -> impl Iterator<Item = CarrierId> + '_ {
        self.carriers.iter().map(|c| c.id)
    }

    pub fn carrier(&self, id: CarrierId) -> Result<&Carrier> {
        if id.0 == 0 {
            return Err(Error::InvalidLocation(id.0));
        }
        self.carriers
            .get(id.index())
            .ok_or(Error::InvalidLocation(id.0))
    }

    pub fn is_free(&self, id: CarrierId) -> bool {
        self.carrier(id)
            .map(|c| c.busy_channels < self.channels_per_carrier)
            .unwrap_or(false)
    }

    pub fn set_busy(&mut self, id: CarrierId, busy: u32) -> Result<()> {
        if busy > self.channels_per_carrier {
            return Err(Error::InvalidSystem(format!(
                "carrier {id} cannot have {busy} busy channels (pool size {})",
                self.channels_per_carrier
            )));
        }
        self.carrier(id)?;
        self.carriers[id.index()].busy_channels = busy;
        Ok(())
    }

    /// A valid true location has a positive population.
    pub fn check_location(&self, id: CarrierId) -> Result<()> {
        match self.carrier(id) {
            Ok(c) if c.population > 0 => Ok(()),
            _ => Err(Error::InvalidLocation(id.0)),
        }
    }
}

/// `P(i, j) = U_j / sum_c U_c`, indexed by carrier (not by priority).
#[derive(Debug, Clone, PartialEq)]
pub struct LocationDistribution {
    probs: Vec<f64>,
}

impl LocationDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn probability(&self, id: CarrierId) -> f64 {
        self.probs.get(id.0.wrapping_sub(1)).copied().unwrap_or(0.0)
    }

    /// Positive-probability carriers in descending priority, as a search distribution.
    pub fn descending_search(&self) -> Result<SearchDistribution> {
        let table = build_priority(self);
        SearchDistribution::new(
            table
                .order()
                .iter()
                .map(|&id| self.probability(id))
                .filter(|&p| p > 0.0)
                .collect(),
        )
    }

    /// Draws a carrier according to the distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CarrierId {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last = i;
                if u < acc {
                    return CarrierId(i + 1);
                }
            }
        }
        CarrierId(last + 1)
    }
}

pub fn location_distribution(system: &CarrierSystem) -> Result<LocationDistribution> {
    let total: u128 = system
        .carriers
        .iter()
        .map(|c| u128::from(c.population))
        .sum();
    if total == 0 {
        return Err(Error::InvalidSystem(
            "all carrier populations are zero".into(),
        ));
    }
    let total = total as f64;
    Ok(LocationDistribution {
        probs: system
            .carriers
            .iter()
            .map(|c| c.population as f64 / total)
            .collect(),
    })
}

/// Per-user probe order (`B_i[c]`) and which carriers were already paged (`S(i, c)`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorityTable {
    order: Vec<CarrierId>,
    visited: Vec<bool>,
}

impl PriorityTable {
    /// `order` must be a permutation of `1..=n`.
    pub fn from_order(order: Vec<CarrierId>) -> Result<Self> {
        let n = order.len();
        if n == 0 {
            return Err(Error::InvalidOrdering("empty ordering".into()));
        }
        let mut seen = vec![false; n];
        for id in &order {
            if id.0 == 0 || id.0 > n {
                return Err(Error::InvalidOrdering(format!(
                    "carrier {id} out of range 1..={n}"
                )));
            }
            if std::mem::replace(&mut seen[id.index()], true) {
                return Err(Error::InvalidOrdering(format!("carrier {id} repeated")));
            }
        }
        Ok(Self {
            order,
            visited: vec![false; n],
        })
    }

    pub fn order(&self) -> &[CarrierId] {
        &self.order
    }

    pub fn is_visited(&self, id: CarrierId) -> bool {
        self.visited[id.index()]
    }

    fn mark_visited(&mut self, id: CarrierId) {
        self.visited[id.index()] = true;
    }

    /// Carriers not yet paged, in priority order.
    pub fn remaining(&self) -> impl Iterator<Item = CarrierId> + '_ {
        self.order
            .iter()
            .copied()
            .filter(|id| !self.is_visited(*id))
    }

    pub fn reset(&mut self) {
        self.visited.iter_mut().for_each(|v| *v = false);
    }
}

/// Descending probability, ties by ascending carrier id.
pub fn build_priority(dist: &LocationDistribution) -> PriorityTable {
    let mut order: Vec<CarrierId> = (1..=dist.probs.len()).map(CarrierId).collect();
    // stable sort keeps ascending ids among equal probabilities
    order.sort_by(|a, b| dist.probability(*b).total_cmp(&dist.probability(*a)));
    PriorityTable {
        visited: vec![false; order.len()],
        order,
    }
}

/// Descending probability with equal-probability carriers shuffled.
pub fn build_priority_shuffled<R: Rng + ?Sized>(
    dist: &LocationDistribution,
    rng: &mut R,
) -> PriorityTable {
    let mut table = build_priority(dist);
    let order = &mut table.order;
    let mut start = 0;
    while start < order.len() {
        let p = dist.probability(order[start]);
        let end = start
            + order[start..]
                .iter()
                .take_while(|id| dist.probability(**id) == p)
                .count();
        order[start..end].shuffle(rng);
        start = end;
    }
    table
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Probe {
    pub round: u32,
    pub carrier: CarrierId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub found_carrier: CarrierId,
    /// Paging messages transmitted, one per channel used.
    pub channel_pages: u32,
    /// Unit-time slots elapsed, including rounds spent waiting.
    pub rounds: u32,
    /// Probes deferred because the target carrier's pool was full.
    pub blocked_attempts: u32,
    pub probes: Vec<Probe>,
}

/// Flood: one duplicate of the page on every carrier in a single round.
pub fn sequential_search(
    system: &CarrierSystem,
    true_location: CarrierId,
) -> Result<SearchOutcome> {
    system.check_location(true_location)?;
    Ok(SearchOutcome {
        found_carrier: true_location,
        channel_pages: system.carrier_count() as u32,
        rounds: 1,
        blocked_attempts: 0,
        probes: system
            .carrier_ids()
            .map(|carrier| Probe { round: 1, carrier })
            .collect(),
    })
}

/// Priority search against the system's current occupancy.
///
/// Round 1 sees `busy_channels` as recorded on the system; pages hold a
/// channel for one round, so every pool is free again from round 2 on.
pub fn concurrent_search(
    system: &CarrierSystem,
    table: &mut PriorityTable,
    true_location: CarrierId,
) -> Result<SearchOutcome> {
    concurrent_search_with(system, table, true_location, |round, id| {
        round > 1 || system.is_free(id)
    })
}

/// Priority search with an explicit channel-availability gate
/// `is_free(round, carrier)`.
///
/// Each round issues at most one probe: the highest-priority unvisited
/// carrier that is free. Busy carriers passed over count as blocked attempts
/// and are retried from the top of the list next round.
pub fn concurrent_search_with<F>(
    system: &CarrierSystem,
    table: &mut PriorityTable,
    true_location: CarrierId,
    mut is_free: F,
) -> Result<SearchOutcome>
where
    F: FnMut(u32, CarrierId) -> bool,
{
    system.check_location(true_location)?;
    if table.order.len() != system.carrier_count() {
        return Err(Error::InvalidOrdering(format!(
            "table covers {} carriers, system has {}",
            table.order.len(),
            system.carrier_count()
        )));
    }
    let mut outcome = SearchOutcome {
        found_carrier: true_location,
        channel_pages: 0,
        rounds: 0,
        blocked_attempts: 0,
        probes: Vec::new(),
    };
    for round in 1..=MAX_SEARCH_ROUNDS {
        let (probe, blocked) = next_probe(table, |id| is_free(round, id))?;
        outcome.blocked_attempts += blocked;
        let Some(carrier) = probe else { continue };
        table.mark_visited(carrier);
        outcome.channel_pages += 1;
        outcome.probes.push(Probe { round, carrier });
        if carrier == true_location {
            outcome.rounds = round;
            return Ok(outcome);
        }
    }
    Err(Error::Starved(MAX_SEARCH_ROUNDS))
}

/// Picks the first unvisited, free carrier. Returns the pick and how many
/// busy carriers were skipped to reach it.
fn next_probe<F>(table: &PriorityTable, mut is_free: F) -> Result<(Option<CarrierId>, u32)>
where
    F: FnMut(CarrierId) -> bool,
{
    let mut blocked = 0;
    let mut any_left = false;
    for id in table.remaining() {
        any_left = true;
        if is_free(id) {
            return Ok((Some(id), blocked));
        }
        blocked += 1;
    }
    if any_left {
        Ok((None, blocked))
    } else {
        Err(Error::Exhausted)
    }
}

/// `sum_j j * p_(order_j)`: expected channel-pages of a priority search
/// that probes in `ordering`.
pub fn expected_pages(system: &CarrierSystem, ordering: &[CarrierId]) -> Result<f64> {
    if ordering.len() != system.carrier_count() {
        return Err(Error::InvalidOrdering(format!(
            "ordering has {} carriers, system has {}",
            ordering.len(),
            system.carrier_count()
        )));
    }
    PriorityTable::from_order(ordering.to_vec())?;
    let dist = location_distribution(system)?;
    Ok(ordering
        .iter()
        .enumerate()
        .map(|(j, &id)| (j + 1) as f64 * dist.probability(id))
        .sum())
}

/// One user to locate in a batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PagingRequest {
    pub user: u64,
    pub location: CarrierId,
    /// Explicit probe order; when absent, one is drawn by
    /// [`build_priority_shuffled`] from the batch seed.
    pub order: Option<Vec<CarrierId>>,
}

impl PagingRequest {
    pub fn new(user: u64, location: CarrierId) -> Self {
        Self {
            user,
            location,
            order: None,
        }
    }

    pub fn with_order(mut self, order: Vec<CarrierId>) -> Self {
        self.order = Some(order);
        self
    }
}

/// Locates every user in `requests`, round by round, sharing the carriers'
/// channel pools.
///
/// Per round each active user holds at most one channel (concurrent) or one
/// channel on every carrier (sequential). Users are served in ascending user
/// id; whoever finds a pool full is blocked for that round. Round 1 starts
/// from the system's recorded occupancy. Outcomes come back in input order.
pub fn batch_search(
    system: &CarrierSystem,
    requests: &[PagingRequest],
    strategy: Scenario,
    seed: u64,
) -> Result<Vec<SearchOutcome>> {
    let dist = location_distribution(system)?;
    let n = system.carrier_count();
    let cap = system.channels_per_carrier;

    let mut tables = Vec::with_capacity(requests.len());
    for req in requests {
        system.check_location(req.location)?;
        let table = match &req.order {
            Some(order) => {
                if order.len() != n {
                    return Err(Error::InvalidOrdering(format!(
                        "user {} ordering covers {} carriers, system has {n}",
                        req.user,
                        order.len()
                    )));
                }
                PriorityTable::from_order(order.clone())?
            }
            None => build_priority_shuffled(&dist, &mut stream_rng(seed, req.user)),
        };
        tables.push(table);
    }

    let mut service_order: Vec<usize> = (0..requests.len()).collect();
    service_order.sort_by_key(|&i| (requests[i].user, i));

    let mut outcomes: Vec<SearchOutcome> = requests
        .iter()
        .map(|r| SearchOutcome {
            found_carrier: r.location,
            channel_pages: 0,
            rounds: 0,
            blocked_attempts: 0,
            probes: Vec::new(),
        })
        .collect();
    let mut pending = requests.len();

    let mut round = 0u32;
    while pending > 0 {
        round += 1;
        if round > MAX_SEARCH_ROUNDS {
            return Err(Error::Starved(MAX_SEARCH_ROUNDS));
        }
        let mut load: Vec<u32> = if round == 1 {
            system.carriers.iter().map(|c| c.busy_channels).collect()
        } else {
            vec![0; n]
        };
        for &i in &service_order {
            let out = &mut outcomes[i];
            if out.rounds != 0 {
                continue;
            }
            match strategy {
                Scenario::Sequential => {
                    if load.iter().all(|&l| l < cap) {
                        for (j, l) in load.iter_mut().enumerate() {
                            *l += 1;
                            out.probes.push(Probe {
                                round,
                                carrier: CarrierId(j + 1),
                            });
                        }
                        out.channel_pages += n as u32;
                        out.rounds = round;
                        pending -= 1;
                    } else {
                        out.blocked_attempts += 1;
                    }
                }
                Scenario::Concurrent => {
                    let table = &mut tables[i];
                    let (probe, blocked) = next_probe(table, |id| load[id.index()] < cap)?;
                    out.blocked_attempts += blocked;
                    if let Some(carrier) = probe {
                        load[carrier.index()] += 1;
                        table.mark_visited(carrier);
                        out.channel_pages += 1;
                        out.probes.push(Probe { round, carrier });
                        if carrier == requests[i].location {
                            out.rounds = round;
                            pending -= 1;
                        }
                    }
                }
            }
        }
    }
    Ok(outcomes)
}
