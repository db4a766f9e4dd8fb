//! Mechanisms (allocation rule plus payment rule), outcomes, and the
//! registry of named mechanisms.

use std::fmt;
use std::sync::Arc;

use crate::allocation::{
    AllocationRule, Auction, DnaMu, DnaMuR, Efficient, ExploratoryI, ExploratoryII, GreedySqrtK, Mode, Nsa,
};
use crate::amount::Amount;
use crate::bids::{CriticalBidOracle, Extended};
use crate::market::{build_market_unchecked, AgentId, EffectiveMarket, MarketError, ReportProfile, Scenario};
use crate::payments::{
    decompose, IdMonRm, IpMonRm, MonotonicityClass, NetworkVcg, PaymentContext, PaymentDecomposition, PaymentRule,
    Polynomial, SelectionThreshold, VcgRm,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MechanismError {
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error("mechanism `{mechanism}` needs a {expected} scenario")]
    ModeMismatch { mechanism: String, expected: Mode },
    #[error("payment of agent `{agent}` is unbounded ({value})")]
    UnboundedPayment { agent: String, value: Extended },
}

/// What an agent receives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Grant {
    None,
    Unit,
    /// Bitmask over the scenario's items.
    Bundle(u64),
}

/// Result of running a mechanism. Per-agent vectors are indexed by agent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub grants: Vec<Grant>,
    pub payments: Vec<Amount>,
    /// Winners in the order they were selected.
    pub winners: Vec<AgentId>,
    /// Participants in priority order.
    pub participants: Vec<AgentId>,
    /// How many participants the allocation rule examined.
    pub scanned: usize,
    /// Sum of true values of the winners.
    pub social_welfare: Amount,
    pub revenue: Amount,
}

/// One row of a run trace: capacity left before `agent` was examined, the
/// winners so far, and `agent`'s allocation and payment. `agent` is `None`
/// on the closing row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRow {
    pub remaining: u32,
    pub winners_before: Vec<AgentId>,
    pub agent: Option<AgentId>,
    pub won: bool,
    pub payment: Amount,
}

impl Outcome {
    pub fn won(&self, a: AgentId) -> bool {
        self.grants[a.index()] != Grant::None
    }

    pub fn payment(&self, a: AgentId) -> &Amount {
        &self.payments[a.index()]
    }

    /// Utility under the true valuation.
    pub fn utility(&self, scenario: &Scenario, a: AgentId) -> Amount {
        let value = if self.won(a) { scenario.true_bid(a).clone() } else { Amount::zero() };
        &value - &self.payments[a.index()]
    }

    /// Rows in priority order. Capacity counts units left in unit-demand
    /// mode and free items in single-minded mode.
    pub fn trace(&self, scenario: &Scenario) -> Vec<TraceRow> {
        let capacity = |w: &[AgentId]| -> u32 {
            match scenario.units() {
                Some(k) => k.saturating_sub(w.len() as u32),
                None => {
                    let used = w.iter().fold(0u64, |acc, &a| acc | scenario.bundle(a).unwrap_or(0));
                    scenario.items().len() as u32 - used.count_ones()
                }
            }
        };
        let mut rows = Vec::new();
        let mut w: Vec<AgentId> = Vec::new();
        for &a in &self.participants[..self.scanned] {
            rows.push(TraceRow {
                remaining: capacity(&w),
                winners_before: w.clone(),
                agent: Some(a),
                won: self.won(a),
                payment: self.payments[a.index()].clone(),
            });
            if self.won(a) {
                w.push(a);
            }
        }
        rows.push(TraceRow {
            remaining: capacity(&w),
            winners_before: w,
            agent: None,
            won: false,
            payment: Amount::zero(),
        });
        rows
    }
}

/// An allocation rule paired with a payment rule.
#[derive(Clone, Debug)]
pub struct Mechanism {
    id: String,
    allocation: Arc<dyn AllocationRule>,
    payment: Arc<dyn PaymentRule>,
}

pub const MECHANISM_IDS: [&str; 8] = [
    "dna-mu",
    "dna-mu-r",
    "vcg",
    "vcg-rm",
    "net-sqrt-k-apm",
    "nsa",
    "exploratory-1",
    "exploratory-2",
];

impl Mechanism {
    pub fn new(id: impl Into<String>, allocation: Arc<dyn AllocationRule>, payment: Arc<dyn PaymentRule>) -> Self {
        Mechanism {
            id: id.into(),
            allocation,
            payment,
        }
    }

    /// Looks up a registered mechanism. `explore_k` parameterizes
    /// `exploratory-2`.
    pub fn by_id(id: &str, explore_k: usize) -> Option<Mechanism> {
        let (alloc, pay): (Arc<dyn AllocationRule>, Arc<dyn PaymentRule>) = match id {
            "dna-mu" => (Arc::new(DnaMu), Arc::new(SelectionThreshold)),
            "dna-mu-r" => (Arc::new(DnaMuR), Arc::new(IpMonRm)),
            "vcg" => (Arc::new(Efficient), Arc::new(NetworkVcg)),
            "vcg-rm" => (Arc::new(Efficient), Arc::new(VcgRm)),
            "net-sqrt-k-apm" => (Arc::new(GreedySqrtK), Arc::new(IdMonRm)),
            "nsa" => (Arc::new(Nsa), Arc::new(IpMonRm)),
            "exploratory-1" => (Arc::new(ExploratoryI), Arc::new(IpMonRm)),
            "exploratory-2" => (Arc::new(ExploratoryII { k: explore_k.max(1) }), Arc::new(IpMonRm)),
            _ => return None,
        };
        Some(Mechanism::new(id, alloc, pay))
    }

    /// A registered mechanism with default parameters. Panics on unknown ids.
    pub fn named(id: &str) -> Mechanism {
        Self::by_id(id, 2).unwrap_or_else(|| panic!("unknown mechanism `{id}`"))
    }

    /// Swaps in a polynomial payment rule.
    pub fn with_polynomial_payments(&self, alpha: Amount, beta: Amount, gamma: Amount, class: MonotonicityClass) -> Mechanism {
        let p = Polynomial {
            alpha,
            beta,
            gamma,
            class,
        };
        Mechanism::new(format!("{}+{}", self.allocation.id(), p.id()), self.allocation.clone(), Arc::new(p))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn allocation_rule(&self) -> &dyn AllocationRule {
        &*self.allocation
    }

    pub fn payment_rule(&self) -> &dyn PaymentRule {
        &*self.payment
    }

    pub fn mode(&self) -> Mode {
        self.allocation.mode()
    }

    pub fn check_mode(&self, scenario: &Scenario) -> Result<(), MechanismError> {
        let actual = if scenario.units().is_some() { Mode::UnitDemand } else { Mode::SingleMinded };
        if actual != self.mode() {
            return Err(MechanismError::ModeMismatch {
                mechanism: self.id.clone(),
                expected: self.mode(),
            });
        }
        Ok(())
    }

    pub fn run(&self, scenario: &Scenario, reports: &ReportProfile) -> Result<Outcome, MechanismError> {
        self.check_mode(scenario)?;
        reports.validate(scenario)?;
        let market = build_market_unchecked(scenario, &reports.invites);
        self.run_in_market(scenario, reports, &market, None)
    }

    /// Runs on a prebuilt market. With `only = Some(a)`, payments of everyone
    /// but `a` are left at zero, which is all a single agent's utility needs.
    pub fn run_in_market(
        &self,
        scenario: &Scenario,
        reports: &ReportProfile,
        market: &EffectiveMarket,
        only: Option<AgentId>,
    ) -> Result<Outcome, MechanismError> {
        let mut oracle = CriticalBidOracle::new(&*self.allocation, scenario, reports.clone());
        self.run_with_oracle(scenario, reports, market, only, &mut oracle)
    }

    /// Like [`Mechanism::run_in_market`] with a caller-owned critical-bid
    /// cache. The cache must belong to this mechanism's allocation rule, and
    /// may be reused across runs that differ only in `only`'s own report.
    pub fn run_with_oracle(
        &self,
        scenario: &Scenario,
        reports: &ReportProfile,
        market: &EffectiveMarket,
        only: Option<AgentId>,
        oracle: &mut CriticalBidOracle<'_>,
    ) -> Result<Outcome, MechanismError> {
        let auction = Auction {
            scenario,
            market,
            bids: &reports.bids,
        };
        let allocation = self.allocation.allocate(&auction);
        let n = scenario.len();
        let mut grants = vec![Grant::None; n];
        for &v in &allocation.winners {
            let a = market.agent(v);
            grants[a.index()] = match scenario.bundle(a) {
                Some(b) => Grant::Bundle(b),
                None => Grant::Unit,
            };
        }
        let mut payments = vec![Amount::zero(); n];
        let mut ctx = PaymentContext {
            scenario,
            reports,
            market,
            allocation: &allocation,
            oracle,
        };
        for (v, &a) in market.order().iter().enumerate() {
            if only.is_some_and(|o| o != a) {
                continue;
            }
            let charged = if allocation.won[v] {
                self.payment.winning(&mut ctx, a)
            } else {
                self.payment.losing(&mut ctx, a)
            };
            match charged {
                Extended::Finite(p) => payments[a.index()] = p,
                other => {
                    return Err(MechanismError::UnboundedPayment {
                        agent: scenario.name(a).to_string(),
                        value: other,
                    })
                }
            }
        }
        let winners: Vec<AgentId> = allocation.winners.iter().map(|&v| market.agent(v)).collect();
        let social_welfare = winners.iter().map(|&a| scenario.true_bid(a)).sum();
        let revenue = payments.iter().sum();
        Ok(Outcome {
            grants,
            payments,
            winners,
            participants: market.order().to_vec(),
            scanned: allocation.scanned,
            social_welfare,
            revenue,
        })
    }

    /// Winning and losing payments of every participant under `reports`.
    pub fn decomposition(&self, scenario: &Scenario, reports: &ReportProfile) -> Result<PaymentDecomposition, MechanismError> {
        self.check_mode(scenario)?;
        reports.validate(scenario)?;
        let market = build_market_unchecked(scenario, &reports.invites);
        let auction = Auction {
            scenario,
            market: &market,
            bids: &reports.bids,
        };
        let allocation = self.allocation.allocate(&auction);
        let mut oracle = CriticalBidOracle::new(&*self.allocation, scenario, reports.clone());
        let mut ctx = PaymentContext {
            scenario,
            reports,
            market: &market,
            allocation: &allocation,
            oracle: &mut oracle,
        };
        Ok(decompose(&*self.payment, &mut ctx))
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

pub fn run_dna_mu(scenario: &Scenario, reports: &ReportProfile) -> Result<Outcome, MechanismError> {
    Mechanism::named("dna-mu").run(scenario, reports)
}

pub fn run_dna_mu_r(scenario: &Scenario, reports: &ReportProfile) -> Result<Outcome, MechanismError> {
    Mechanism::named("dna-mu-r").run(scenario, reports)
}

pub fn run_vcg(scenario: &Scenario, reports: &ReportProfile) -> Result<Outcome, MechanismError> {
    Mechanism::named("vcg").run(scenario, reports)
}

pub fn run_vcg_rm(scenario: &Scenario, reports: &ReportProfile) -> Result<Outcome, MechanismError> {
    Mechanism::named("vcg-rm").run(scenario, reports)
}

pub fn run_net_sqrt_k_apm(scenario: &Scenario, reports: &ReportProfile) -> Result<Outcome, MechanismError> {
    Mechanism::named("net-sqrt-k-apm").run(scenario, reports)
}

pub fn run_nsa(scenario: &Scenario, reports: &ReportProfile) -> Result<Outcome, MechanismError> {
    Mechanism::named("nsa").run(scenario, reports)
}

fn winner_set(rule: &dyn AllocationRule, scenario: &Scenario, reports: &ReportProfile) -> Result<Vec<AgentId>, MechanismError> {
    reports.validate(scenario)?;
    if scenario.units().is_some() {
        return Err(MechanismError::ModeMismatch {
            mechanism: rule.id(),
            expected: Mode::SingleMinded,
        });
    }
    let market = build_market_unchecked(scenario, &reports.invites);
    let auction = Auction {
        scenario,
        market: &market,
        bids: &reports.bids,
    };
    Ok(rule.allocate(&auction).winners.iter().map(|&v| market.agent(v)).collect())
}

pub fn alloc_exploratory_i(scenario: &Scenario, reports: &ReportProfile) -> Result<Vec<AgentId>, MechanismError> {
    winner_set(&ExploratoryI, scenario, reports)
}

pub fn alloc_exploratory_ii(scenario: &Scenario, reports: &ReportProfile, k: usize) -> Result<Vec<AgentId>, MechanismError> {
    winner_set(&ExploratoryII { k }, scenario, reports)
}

/// Revenue-maximizing decomposition for an allocation where invitations only
/// hurt: winning `v*(∅)`, losing `v*(∅) - v*(r_i)`.
pub fn id_mon_rm_payment(rule: Arc<dyn AllocationRule>, scenario: &Scenario, reports: &ReportProfile) -> Result<PaymentDecomposition, MechanismError> {
    Mechanism::new("id-mon-rm", rule, Arc::new(IdMonRm)).decomposition(scenario, reports)
}

/// Revenue-maximizing decomposition for an allocation where invitations only
/// help: winning `v*(r_i)`, losing 0.
pub fn ip_mon_rm_payment(rule: Arc<dyn AllocationRule>, scenario: &Scenario, reports: &ReportProfile) -> Result<PaymentDecomposition, MechanismError> {
    Mechanism::new("ip-mon-rm", rule, Arc::new(IpMonRm)).decomposition(scenario, reports)
}

pub fn polynomial_payment_family(
    rule: Arc<dyn AllocationRule>,
    scenario: &Scenario,
    reports: &ReportProfile,
    alpha: Amount,
    beta: Amount,
    gamma: Amount,
    class: MonotonicityClass,
) -> Result<PaymentDecomposition, MechanismError> {
    let p = Polynomial {
        alpha,
        beta,
        gamma,
        class,
    };
    Mechanism::new("polynomial", rule, Arc::new(p)).decomposition(scenario, reports)
}
