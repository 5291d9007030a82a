//! Paging-channel models for multi-carrier CDMA.
//!
//! Compares flooding a page onto every carrier ("sequential" search) with
//! probing carriers one at a time in descending order of location
//! probability ("concurrent" search):
//!
//! * [`markov`]: absorbing-chain cost of a priority-ordered search,
//! * [`erlang`]: Erlang B/C queue analytics for the shared channel pool,
//! * [`search`]: the two search procedures over per-carrier channel pools,
//! * [`sim`]: discrete-event simulation (M/M/C and channel-level),
//! * [`sweep`]: arrival-rate sweeps and their CSV output,
//! * [`config`]: run configuration files and CLI list parsers.

pub mod config;
pub mod erlang;
pub mod error;
pub mod markov;
pub mod rng;
pub mod search;
pub mod sim;
pub mod sweep;

pub use config::RunConfig;
pub use erlang::{Interpretation, QueueMetrics, QueueParams, Scenario, ScenarioLoad};
pub use error::{Error, Result};
pub use markov::{AbsorbingChain, SearchDistribution};
pub use search::{CarrierId, CarrierSystem, PagingRequest, PriorityTable, SearchOutcome};
pub use sim::{SimConfig, SimMode, SimStats};
pub use sweep::{Source, SweepResult, SweepRow};
