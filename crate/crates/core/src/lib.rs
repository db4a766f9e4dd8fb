//! Diffusion auctions on networks: mechanisms that sell to agents who enter
//! only through invitation chains from the seller, and a brute-force auditor
//! for their incentive and budget properties.

pub mod allocation;
pub mod amount;
pub mod audit;
pub mod bids;
pub mod fixtures;
pub mod io;
pub mod market;
pub mod mechanism;
pub mod payments;
pub mod random;

pub use allocation::{AllocationRule, Auction, Mode};
pub use amount::Amount;
pub use bids::{critical_bid_bisect, critical_bid_exact, kth_highest, CriticalBid, Extended};
pub use market::{build_effective_market, AgentId, EffectiveMarket, ReportProfile, Scenario, ScenarioBuilder};
pub use mechanism::{Mechanism, MechanismError, Outcome};
