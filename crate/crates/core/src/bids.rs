//! Order statistics and critical winning bids.

use std::collections::HashMap;
use std::fmt;

use crate::allocation::{AllocationRule, Auction};
use crate::amount::{Amount, Rational};
use crate::market::{build_market_unchecked, AgentId, EffectiveMarket, MarketError, ReportProfile, Scenario};

/// The `k`-th largest value counting multiplicity, or 0 when there are fewer
/// than `k` values. `k` must be at least 1.
pub fn kth_highest<'a>(bids: impl IntoIterator<Item = &'a Amount>, k: usize) -> Amount {
    assert!(k >= 1, "k must be positive");
    let mut v: Vec<&Amount> = bids.into_iter().collect();
    if v.len() < k {
        return Amount::zero();
    }
    let (_, kth, _) = v.select_nth_unstable_by(k - 1, |a, b| b.cmp(a));
    (*kth).clone()
}

/// A value on the extended real line.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Extended {
    NegInfinite,
    Finite(Amount),
    Infinite,
}

impl Extended {
    pub fn finite(&self) -> Option<&Amount> {
        match self {
            Extended::Finite(a) => Some(a),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn sub(&self, rhs: &Extended) -> Extended {
        use Extended::*;
        match (self, rhs) {
            (Finite(a), Finite(b)) => Finite(a - b),
            (Infinite, _) | (_, NegInfinite) => Infinite,
            _ => NegInfinite,
        }
    }
}

impl From<Amount> for Extended {
    fn from(a: Amount) -> Self {
        Extended::Finite(a)
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::NegInfinite => f.write_str("-unbounded"),
            Extended::Finite(a) => write!(f, "{a}"),
            Extended::Infinite => f.write_str("unbounded"),
        }
    }
}

/// Infimum of the bids with which an agent wins, other reports fixed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CriticalBid {
    /// `attained` tells whether bidding exactly `value` already wins.
    Finite { value: Amount, attained: bool },
    /// No bid wins.
    Unbounded,
}

impl CriticalBid {
    pub fn value(&self) -> Extended {
        match self {
            CriticalBid::Finite { value, .. } => Extended::Finite(value.clone()),
            CriticalBid::Unbounded => Extended::Infinite,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BidError {
    #[error("allocation rule `{0}` is not comparison-based")]
    NotComparisonBased(String),
    #[error("agent still loses at the upper bound {0}")]
    NoWinningBid(Amount),
    #[error(transparent)]
    Market(#[from] MarketError),
}

fn wins_at(rule: &dyn AllocationRule, scenario: &Scenario, market: &EffectiveMarket, bids: &mut [Amount], i: AgentId, node: usize, bid: &Amount) -> bool {
    bids[i.index()] = bid.clone();
    let auction = Auction { scenario, market, bids };
    rule.allocate(&auction).won[node]
}

/// Bids at which the outcome for `i` can change: 0, every other participant's
/// bid, and for score-scaled rules the bids that tie another agent's score.
pub fn candidate_bids(rule: &dyn AllocationRule, scenario: &Scenario, market: &EffectiveMarket, bids: &[Amount], i: AgentId) -> Vec<Amount> {
    let mut out = vec![Amount::zero()];
    let s_i = scenario.bundle_size(i) as u64;
    for &j in market.order() {
        if j == i {
            continue;
        }
        let v = &bids[j.index()];
        out.push(v.clone());
        let s_j = scenario.bundle_size(j) as u64;
        if rule.sqrt_scaled() && s_i != s_j && !v.is_zero() {
            // v_j * sqrt(s_i / s_j) = (v_j / s_j) * sqrt(s_i * s_j)
            out.push(v.scale(&Rational::new(1, s_j as i128)) * Amount::sqrt_of(s_i * s_j));
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Exact critical bid of `i` in a market already built for the desired
/// invitation sets. `bids` holds everyone's reports; `i`'s entry is ignored.
pub fn critical_bid_in_market(rule: &dyn AllocationRule, scenario: &Scenario, market: &EffectiveMarket, bids: &[Amount], i: AgentId) -> Result<CriticalBid, BidError> {
    if !rule.comparison_based() {
        return Err(BidError::NotComparisonBased(rule.id()));
    }
    let Some(node) = market.node(i) else {
        return Ok(CriticalBid::Unbounded);
    };
    let grid = candidate_bids(rule, scenario, market, bids, i);
    let mut work = bids.to_vec();
    for (idx, c) in grid.iter().enumerate() {
        if wins_at(rule, scenario, market, &mut work, i, node, c) {
            return Ok(CriticalBid::Finite { value: c.clone(), attained: true });
        }
        let inside = match grid.get(idx + 1) {
            Some(next) => c.midpoint(next),
            None => c + &Amount::one(),
        };
        if wins_at(rule, scenario, market, &mut work, i, node, &inside) {
            return Ok(CriticalBid::Finite { value: c.clone(), attained: false });
        }
    }
    Ok(CriticalBid::Unbounded)
}

/// Exact critical bid of `i` when it reports `invites` and everyone else
/// reports as in `reports`.
pub fn critical_bid_exact(rule: &dyn AllocationRule, scenario: &Scenario, reports: &ReportProfile, i: AgentId, invites: &[AgentId]) -> Result<CriticalBid, BidError> {
    let reports = reports.clone().with_invites(i, invites.to_vec());
    reports.validate(scenario)?;
    let market = build_market_unchecked(scenario, &reports.invites);
    critical_bid_in_market(rule, scenario, &market, &reports.bids, i)
}

/// Bisection for the critical bid on `[0, hi]`, accurate to `tol`.
pub fn critical_bid_bisect(rule: &dyn AllocationRule, scenario: &Scenario, reports: &ReportProfile, i: AgentId, invites: &[AgentId], hi: &Amount, tol: &Amount) -> Result<Amount, BidError> {
    assert!(!tol.is_negative() && !tol.is_zero(), "tolerance must be positive");
    let reports = reports.clone().with_invites(i, invites.to_vec());
    reports.validate(scenario)?;
    let market = build_market_unchecked(scenario, &reports.invites);
    let Some(node) = market.node(i) else {
        return Err(BidError::NoWinningBid(hi.clone()));
    };
    let mut work = reports.bids.clone();
    let mut lo = Amount::zero();
    let mut hi = hi.clone();
    if !wins_at(rule, scenario, &market, &mut work, i, node, &hi) {
        return Err(BidError::NoWinningBid(hi));
    }
    if wins_at(rule, scenario, &market, &mut work, i, node, &lo) {
        return Ok(lo);
    }
    while &hi - &lo > *tol {
        let mid = lo.midpoint(&hi);
        if wins_at(rule, scenario, &market, &mut work, i, node, &mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Memoized critical bids. The cache stays valid as long as only the queried
/// agent's own reports change, since a critical bid ignores its owner's bid.
pub struct CriticalBidOracle<'a> {
    rule: &'a dyn AllocationRule,
    scenario: &'a Scenario,
    reports: ReportProfile,
    cache: HashMap<(AgentId, Vec<AgentId>), CriticalBid>,
}

impl<'a> CriticalBidOracle<'a> {
    pub fn new(rule: &'a dyn AllocationRule, scenario: &'a Scenario, reports: ReportProfile) -> Self {
        CriticalBidOracle {
            rule,
            scenario,
            reports,
            cache: HashMap::new(),
        }
    }

    pub fn rule(&self) -> &'a dyn AllocationRule {
        self.rule
    }

    /// Critical bid of `i` inviting `invites`, where `market` was built for
    /// exactly that choice.
    pub fn in_market(&mut self, i: AgentId, invites: &[AgentId], market: &EffectiveMarket) -> CriticalBid {
        let key = (i, invites.to_vec());
        if let Some(hit) = self.cache.get(&key) {
            return hit.clone();
        }
        let value = critical_bid_in_market(self.rule, self.scenario, market, &self.reports.bids, i)
            .expect("engine rules are comparison-based");
        self.cache.insert(key, value.clone());
        value
    }

    /// Critical bid of `i` when it invites exactly `invites`.
    pub fn with_invites(&mut self, i: AgentId, invites: &[AgentId]) -> CriticalBid {
        let key = (i, invites.to_vec());
        if let Some(hit) = self.cache.get(&key) {
            return hit.clone();
        }
        let mut all = self.reports.invites.clone();
        all[i.index()] = invites.to_vec();
        let market = build_market_unchecked(self.scenario, &all);
        let value = critical_bid_in_market(self.rule, self.scenario, &market, &self.reports.bids, i)
            .expect("engine rules are comparison-based");
        self.cache.insert(key, value.clone());
        value
    }
}
