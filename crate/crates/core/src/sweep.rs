//! Arrival-rate sweeps comparing the two paging strategies, and their CSV form.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::validate_grid;
use crate::erlang::{metrics, scenario_params, Scenario};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::sim::{self, SimConfig, SimMode};

/// Fixed CSV column order.
pub const CSV_COLUMNS: [&str; 20] = [
    "lambda",
    "mu",
    "n_carriers",
    "channels",
    "scenario",
    "interpretation",
    "mode",
    "offered_load",
    "source",
    "p_delay",
    "awa",
    "awd",
    "total_time",
    "pages_per_user",
    "ci_p_delay",
    "ci_awa",
    "ci_awd",
    "ci_t",
    "unstable",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Analytic,
    Sim,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Analytic => "analytic",
            Source::Sim => "sim",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub mu: f64,
    pub n_carriers: usize,
    pub channels: u32,
    pub scenario: Scenario,
    pub interpretation: &'static str,
    pub mode: SimMode,
    pub offered_load: f64,
    pub source: Source,
    pub p_delay: Option<f64>,
    pub awa: Option<f64>,
    pub awd: Option<f64>,
    pub total_time: Option<f64>,
    pub pages_per_user: Option<f64>,
    pub ci_p_delay: Option<f64>,
    pub ci_awa: Option<f64>,
    pub ci_awd: Option<f64>,
    pub ci_t: Option<f64>,
    pub unstable: bool,
    pub seed: Option<u64>,
}

impl SweepRow {
    fn record(&self) -> Vec<String> {
        fn opt(v: Option<f64>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        vec![
            self.lambda.to_string(),
            self.mu.to_string(),
            self.n_carriers.to_string(),
            self.channels.to_string(),
            self.scenario.to_string(),
            self.interpretation.to_string(),
            self.mode.to_string(),
            self.offered_load.to_string(),
            self.source.as_str().to_string(),
            opt(self.p_delay),
            opt(self.awa),
            opt(self.awd),
            opt(self.total_time),
            opt(self.pages_per_user),
            opt(self.ci_p_delay),
            opt(self.ci_awa),
            opt(self.ci_awd),
            opt(self.ci_t),
            self.unstable.to_string(),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn rows_for(&self, scenario: Scenario, source: Source) -> impl Iterator<Item = &SweepRow> {
        self.rows
            .iter()
            .filter(move |r| r.scenario == scenario && r.source == source)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(CSV_COLUMNS).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.record()).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))?;
        Ok(())
    }
}

/// Seed for one sweep cell, drawn from the run seed's cell stream.
pub fn cell_seed(run_seed: u64, cell: u64) -> u64 {
    stream_rng(run_seed, cell).random()
}

/// Analytic (and optionally simulated) metrics for every `lambda x scenario`.
///
/// Rows are ordered by `lambda`, then scenario, then source. Simulated cells
/// run in parallel; each gets its own seed from [`cell_seed`], so the output
/// does not depend on scheduling.
pub fn sweep(
    base: &SimConfig,
    arrival_grid: &[f64],
    scenarios: &[Scenario],
    simulate: bool,
) -> Result<SweepResult> {
    validate_grid(arrival_grid)?;
    if scenarios.is_empty() {
        return Err(Error::InvalidConfig("no scenarios to sweep".into()));
    }
    let cells: Vec<(usize, f64, Scenario)> = arrival_grid
        .iter()
        .flat_map(|&l| scenarios.iter().map(move |&s| (l, s)))
        .enumerate()
        .map(|(i, (l, s))| (i, l, s))
        .collect();

    let rows: Vec<Vec<SweepRow>> = cells
        .par_iter()
        .map(|&(cell, lambda, scenario)| {
            let load = scenario_params(
                scenario,
                lambda,
                base.service_rate,
                &base.system,
                base.interpretation,
            )?;
            let m = metrics(&load.params).ok();
            let analytic = SweepRow {
                lambda,
                mu: base.service_rate,
                n_carriers: base.system.carrier_count(),
                channels: load.params.channels,
                scenario,
                interpretation: base.interpretation.as_str(),
                mode: base.mode,
                offered_load: load.params.offered_load,
                source: Source::Analytic,
                p_delay: m.map(|m| m.p_delay),
                awa: m.map(|m| m.avg_wait_all),
                awd: m.map(|m| m.avg_wait_delayed),
                total_time: m.map(|m| m.time_in_system),
                pages_per_user: Some(load.pages_per_user),
                ci_p_delay: None,
                ci_awa: None,
                ci_awd: None,
                ci_t: None,
                unstable: load.unstable,
                seed: None,
            };
            let mut out = vec![analytic];
            if simulate {
                let seed = cell_seed(base.seed, cell as u64);
                let cfg = SimConfig {
                    arrival_rate: lambda,
                    scenario,
                    seed,
                    ..base.clone()
                };
                let stats = sim::run(&cfg)?;
                out.push(SweepRow {
                    lambda,
                    mu: base.service_rate,
                    n_carriers: base.system.carrier_count(),
                    channels: stats.channels,
                    scenario,
                    interpretation: base.interpretation.as_str(),
                    mode: base.mode,
                    offered_load: stats.offered_load,
                    source: Source::Sim,
                    p_delay: Some(stats.p_delay_hat),
                    awa: Some(stats.awa_hat),
                    awd: stats.awd_hat,
                    total_time: Some(stats.t_hat),
                    pages_per_user: stats.pages_per_user_hat,
                    ci_p_delay: stats.ci_p_delay,
                    ci_awa: stats.ci_awa,
                    ci_awd: stats.ci_awd,
                    ci_t: stats.ci_t,
                    unstable: stats.unstable,
                    seed: Some(seed),
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        rows: rows.into_iter().flatten().collect(),
    })
}
