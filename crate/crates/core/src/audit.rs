//! Brute-force auditing of incentive and budget properties on one scenario.
//!
//! For every participant the auditor enumerates invitation subsets and a bid
//! grid, runs the mechanism on each point, and checks the requested axioms
//! against the resulting table. Every rule in the engine is comparison-based
//! and its payments do not move with the agent's own bid inside a win/lose
//! class, so utilities are constant between consecutive grid candidates and
//! the grid (candidates plus one point strictly inside every gap) is
//! exhaustive over all real bids.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::amount::Amount;
use crate::bids::{candidate_bids, CriticalBidOracle, Extended};
use crate::market::{build_market_unchecked, AgentId, ReportProfile, Scenario};
use crate::mechanism::{Mechanism, MechanismError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axiom {
    Ir,
    Sp,
    Wbb,
    ValueMonotone,
    InvMonPayment,
    BidIndependence,
    IdMon,
    IpMon,
    Degenerated,
    CriticalGap,
    LosingAlone,
}

impl Axiom {
    pub const ALL: [Axiom; 11] = [
        Axiom::Ir,
        Axiom::Sp,
        Axiom::Wbb,
        Axiom::ValueMonotone,
        Axiom::InvMonPayment,
        Axiom::BidIndependence,
        Axiom::IdMon,
        Axiom::IpMon,
        Axiom::Degenerated,
        Axiom::CriticalGap,
        Axiom::LosingAlone,
    ];

    /// The payment conditions: bid independence, invitational monotonicity,
    /// `winning - losing = critical bid`, and `losing(∅) <= 0`.
    pub const PAYMENT: [Axiom; 4] = [
        Axiom::BidIndependence,
        Axiom::InvMonPayment,
        Axiom::CriticalGap,
        Axiom::LosingAlone,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axiom::Ir => "ir",
            Axiom::Sp => "sp",
            Axiom::Wbb => "wbb",
            Axiom::ValueMonotone => "value-mon",
            Axiom::InvMonPayment => "inv-mon-payment",
            Axiom::BidIndependence => "bid-indep",
            Axiom::IdMon => "id-mon",
            Axiom::IpMon => "ip-mon",
            Axiom::Degenerated => "degenerated",
            Axiom::CriticalGap => "critical-gap",
            Axiom::LosingAlone => "losing-alone",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axiom {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Axiom::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown axiom `{s}`"))
    }
}

/// Parses a comma-separated axiom list; `payment` expands to the four
/// payment conditions and `all` to everything.
pub fn parse_axioms(list: &str) -> Result<Vec<Axiom>, String> {
    let mut out = Vec::new();
    for part in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match part {
            "all" => out.extend(Axiom::ALL),
            "payment" => out.extend(Axiom::PAYMENT),
            other => out.push(other.parse()?),
        }
    }
    out.dedup();
    if out.is_empty() {
        return Err("no axioms given".into());
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct AuditConfig {
    /// Agents with at most this many neighbors get every invitation subset.
    pub max_invite_degree: usize,
    /// Random subsets drawn for agents above the degree cap.
    pub sample_subsets: usize,
    pub seed: u64,
    /// Extra random opponent profiles besides the truthful one.
    pub opponent_samples: usize,
    /// Upper bound on mechanism evaluations.
    pub budget: u64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            max_invite_degree: 10,
            sample_subsets: 256,
            seed: 0,
            opponent_samples: 0,
            budget: 20_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AuditError {
    #[error("deviation space needs {needed} evaluations, budget is {budget}")]
    SpaceTooLarge { needed: u64, budget: u64 },
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Coverage {
    /// Every invitation subset was enumerated.
    Certified,
    /// Some agent's subsets were sampled.
    Sampled,
}

/// A single report of one agent.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Report {
    pub bid: Amount,
    pub invites: Vec<AgentId>,
}

/// A concrete counterexample. `before` and `after` are utilities, revenues,
/// allocations (0 or 1), or payments depending on the axiom; `note` says
/// which.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    /// `None` when the witness is a whole profile rather than one agent.
    pub agent: Option<AgentId>,
    /// Reports of everyone else.
    pub opponents: ReportProfile,
    pub baseline: Option<Report>,
    pub deviation: Option<Report>,
    pub before: Extended,
    pub after: Extended,
    pub note: String,
}

impl Witness {
    /// The full profile with the agent's deviation applied.
    pub fn deviation_profile(&self) -> ReportProfile {
        apply(&self.opponents, self.agent, self.deviation.as_ref())
    }

    pub fn baseline_profile(&self) -> ReportProfile {
        apply(&self.opponents, self.agent, self.baseline.as_ref())
    }
}

fn apply(base: &ReportProfile, agent: Option<AgentId>, report: Option<&Report>) -> ReportProfile {
    match (agent, report) {
        (Some(a), Some(r)) => base.clone().with_bid(a, r.bid.clone()).with_invites(a, r.invites.clone()),
        _ => base.clone(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditVerdict {
    pub axiom: Axiom,
    pub pass: bool,
    pub coverage: Coverage,
    /// Which opponent profiles were checked.
    pub opponents: String,
    /// First failure found for each offending agent.
    pub witnesses: Vec<Witness>,
}

impl AuditVerdict {
    pub fn witness_for(&self, a: AgentId) -> Option<&Witness> {
        self.witnesses.iter().find(|w| w.agent == Some(a))
    }

    pub fn to_json(&self, scenario: &Scenario) -> serde_json::Value {
        let names = |v: &[AgentId]| v.iter().map(|&a| scenario.name(a).to_string()).collect::<Vec<_>>();
        let report = |r: &Option<Report>| {
            r.as_ref().map(|r| {
                serde_json::json!({
                    "bid": r.bid.to_string(),
                    "invites": names(&r.invites),
                })
            })
        };
        let witnesses: Vec<serde_json::Value> = self
            .witnesses
            .iter()
            .map(|w| {
                let truthful = scenario.truthful();
                let mut changed = serde_json::Map::new();
                for a in scenario.agents() {
                    if Some(a) == w.agent {
                        continue;
                    }
                    let i = a.index();
                    if w.opponents.bids[i] != truthful.bids[i] || w.opponents.invites[i] != truthful.invites[i] {
                        changed.insert(
                            scenario.name(a).to_string(),
                            serde_json::json!({
                                "bid": w.opponents.bids[i].to_string(),
                                "invites": names(&w.opponents.invites[i]),
                            }),
                        );
                    }
                }
                serde_json::json!({
                    "agent": w.agent.map(|a| scenario.name(a).to_string()),
                    "baseline": report(&w.baseline),
                    "deviation": report(&w.deviation),
                    "before": w.before.to_string(),
                    "after": w.after.to_string(),
                    "note": w.note,
                    "opponent_deviations": changed,
                })
            })
            .collect();
        serde_json::json!({
            "axiom": self.axiom.name(),
            "pass": self.pass,
            "coverage": self.coverage,
            "opponents": self.opponents,
            "witnesses": witnesses,
        })
    }
}

/// Everything observed for one agent under one opponent profile.
struct AgentTable {
    agent: AgentId,
    profile: usize,
    subsets: Vec<Vec<AgentId>>,
    truthful_subset: usize,
    /// Pairs `(a, b)` with `subsets[b]` equal to `subsets[a]` plus one agent.
    covers: Vec<(usize, usize)>,
    grid: Vec<Amount>,
    true_bid: usize,
    won: Vec<Vec<bool>>,
    pay: Vec<Vec<Extended>>,
    /// `None` for rules that are not comparison-based.
    critical: Vec<Option<Extended>>,
}

impl AgentTable {
    fn utility(&self, value: &Amount, s: usize, g: usize) -> Extended {
        let gross = if self.won[s][g] { value.clone() } else { Amount::zero() };
        Extended::Finite(gross).sub(&self.pay[s][g])
    }

    fn report(&self, s: usize, g: usize) -> Report {
        Report {
            bid: self.grid[g].clone(),
            invites: self.subsets[s].clone(),
        }
    }

    /// Grid indices with the true bid first.
    fn bids_truth_first(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.true_bid).chain((0..self.grid.len()).filter(move |&g| g != self.true_bid))
    }

    /// Common payment per subset within the win (or lose) class. Winning
    /// defaults to unbounded when the agent never wins; losing is `None` when
    /// it never loses.
    /// Payment in the winning or losing class at subset `s`. A class that is
    /// never realized is implied by the other: an agent that never wins has an
    /// unbounded winning payment, and one that never loses (so its critical bid
    /// is zero) has a losing payment equal to its winning one.
    fn observed(&self, s: usize, winning: bool) -> Option<Extended> {
        let hit = (0..self.grid.len()).find(|&g| self.won[s][g] == winning);
        match hit {
            Some(g) => Some(self.pay[s][g].clone()),
            None if winning => Some(Extended::Infinite),
            None => self.observed(s, true),
        }
    }

    fn realized(&self, s: usize, winning: bool) -> bool {
        self.won[s].contains(&winning)
    }
}

fn flag(b: bool) -> Extended {
    Extended::Finite(Amount::from(i64::from(b)))
}

pub struct Auditor<'a> {
    mechanism: &'a Mechanism,
    scenario: &'a Scenario,
    config: AuditConfig,
    profiles: Vec<ReportProfile>,
    coverage: Coverage,
    tables: Option<Vec<AgentTable>>,
    spent: u64,
}

impl<'a> Auditor<'a> {
    pub fn new(mechanism: &'a Mechanism, scenario: &'a Scenario, config: AuditConfig) -> Result<Self, AuditError> {
        mechanism.check_mode(scenario)?;
        // The bid grid is only exhaustive for comparison-based rules.
        let coverage = if mechanism.allocation_rule().comparison_based() {
            Coverage::Certified
        } else {
            Coverage::Sampled
        };
        let mut profiles = vec![scenario.truthful()];
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x6f70_706f);
        let mut bid_pool: Vec<Amount> = scenario.true_bids().to_vec();
        bid_pool.push(Amount::zero());
        for _ in 0..config.opponent_samples {
            let mut p = scenario.truthful();
            for a in scenario.agents() {
                p.bids[a.index()] = bid_pool.choose(&mut rng).cloned().unwrap_or_default();
                p.invites[a.index()] = scenario
                    .neighbors(a)
                    .iter()
                    .copied()
                    .filter(|_| rng.gen_bool(0.7))
                    .collect();
            }
            profiles.push(p);
        }
        Ok(Auditor {
            mechanism,
            scenario,
            config,
            profiles,
            coverage,
            tables: None,
            spent: 0,
        })
    }

    fn scope(&self) -> String {
        match self.profiles.len() - 1 {
            0 => "truthful".into(),
            n => format!("truthful+{n} sampled"),
        }
    }

    fn charge(&mut self, n: u64) -> Result<(), AuditError> {
        self.spent += n;
        if self.spent > self.config.budget {
            return Err(AuditError::SpaceTooLarge {
                needed: self.spent,
                budget: self.config.budget,
            });
        }
        Ok(())
    }

    fn subsets(&mut self, a: AgentId) -> Vec<Vec<AgentId>> {
        let nb = self.scenario.neighbors(a);
        let d = nb.len();
        if d <= self.config.max_invite_degree {
            return (0u64..1 << d)
                .map(|mask| (0..d).filter(|&j| mask & (1 << j) != 0).map(|j| nb[j]).collect())
                .collect();
        }
        self.coverage = Coverage::Sampled;
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ (a.0 as u64) << 20);
        let mut out: Vec<Vec<AgentId>> = vec![Vec::new()];
        for skip in 0..d {
            out.push(nb.iter().enumerate().filter(|&(j, _)| j != skip).map(|(_, &x)| x).collect());
        }
        for _ in 0..self.config.sample_subsets {
            out.push(nb.iter().copied().filter(|_| rng.gen_bool(0.5)).collect());
        }
        out.push(nb.to_vec());
        let mut seen = std::collections::HashSet::new();
        out.retain(|s| seen.insert(s.clone()));
        out
    }

    fn grid(&self, profile: &ReportProfile, a: AgentId) -> Vec<Amount> {
        let mut invites = profile.invites.clone();
        invites[a.index()] = self.scenario.neighbors(a).to_vec();
        let market = build_market_unchecked(self.scenario, &invites);
        let mut cands = candidate_bids(
            self.mechanism.allocation_rule(),
            self.scenario,
            &market,
            &profile.bids,
            a,
        );
        cands.push(self.scenario.true_bid(a).clone());
        cands.sort();
        cands.dedup();
        let mut grid = Vec::with_capacity(2 * cands.len());
        for (idx, c) in cands.iter().enumerate() {
            grid.push(c.clone());
            grid.push(match cands.get(idx + 1) {
                Some(next) => c.midpoint(next),
                None => c + &Amount::one(),
            });
        }
        grid
    }

    fn build_tables(&mut self) -> Result<(), AuditError> {
        if self.tables.is_some() {
            return Ok(());
        }
        let mut tables = Vec::new();
        let rule = self.mechanism.allocation_rule();
        for p in 0..self.profiles.len() {
            let base = self.profiles[p].clone();
            let base_market = build_market_unchecked(self.scenario, &base.invites);
            for a in self.scenario.agents() {
                if !base_market.contains(a) {
                    continue;
                }
                let subsets = self.subsets(a);
                let grid = self.grid(&base, a);
                self.charge((subsets.len() * (grid.len() + 1)) as u64)?;
                let index: HashMap<&Vec<AgentId>, usize> = subsets.iter().enumerate().map(|(i, s)| (s, i)).collect();
                let truthful_subset = index[&self.scenario.neighbors(a).to_vec()];
                let mut covers = Vec::new();
                for (i, s) in subsets.iter().enumerate() {
                    for &x in self.scenario.neighbors(a) {
                        if s.binary_search(&x).is_err() {
                            let mut bigger = s.clone();
                            bigger.push(x);
                            bigger.sort();
                            if let Some(&j) = index.get(&bigger) {
                                covers.push((i, j));
                            }
                        }
                    }
                }
                let true_bid = grid
                    .iter()
                    .position(|g| g == self.scenario.true_bid(a))
                    .expect("true bid is on the grid");
                let mut oracle = CriticalBidOracle::new(rule, self.scenario, base.clone());
                let mut won = Vec::with_capacity(subsets.len());
                let mut pay = Vec::with_capacity(subsets.len());
                let mut critical = Vec::with_capacity(subsets.len());
                for s in &subsets {
                    let mut reports = base.clone().with_invites(a, s.clone());
                    let market = build_market_unchecked(self.scenario, &reports.invites);
                    critical.push(rule.comparison_based().then(|| oracle.in_market(a, s, &market).value()));
                    let mut w_row = Vec::with_capacity(grid.len());
                    let mut p_row = Vec::with_capacity(grid.len());
                    for b in &grid {
                        reports.bids[a.index()] = b.clone();
                        match self.mechanism.run_with_oracle(self.scenario, &reports, &market, Some(a), &mut oracle) {
                            Ok(o) => {
                                w_row.push(o.won(a));
                                p_row.push(Extended::Finite(o.payment(a).clone()));
                            }
                            Err(MechanismError::UnboundedPayment { value, .. }) => {
                                let node = market.node(a).expect("participant");
                                let auction = crate::allocation::Auction {
                                    scenario: self.scenario,
                                    market: &market,
                                    bids: &reports.bids,
                                };
                                w_row.push(rule.allocate(&auction).won[node]);
                                p_row.push(value);
                            }
                            Err(e) => return Err(e.into()),
                        }
                    }
                    won.push(w_row);
                    pay.push(p_row);
                }
                tables.push(AgentTable {
                    agent: a,
                    profile: p,
                    subsets,
                    truthful_subset,
                    covers,
                    grid,
                    true_bid,
                    won,
                    pay,
                    critical,
                });
            }
        }
        self.tables = Some(tables);
        Ok(())
    }

    fn verdict(&self, axiom: Axiom, witnesses: Vec<Witness>) -> AuditVerdict {
        AuditVerdict {
            axiom,
            pass: witnesses.is_empty(),
            coverage: self.coverage,
            opponents: self.scope(),
            witnesses,
        }
    }

    fn witness(&self, t: &AgentTable, base: (usize, usize), dev: (usize, usize), before: Extended, after: Extended, note: impl Into<String>) -> Witness {
        Witness {
            agent: Some(t.agent),
            opponents: self.profiles[t.profile].clone(),
            baseline: Some(t.report(base.0, base.1)),
            deviation: Some(t.report(dev.0, dev.1)),
            before,
            after,
            note: note.into(),
        }
    }

    /// Runs the requested checks, sharing the enumeration between them.
    pub fn audit(&mut self, axioms: &[Axiom]) -> Result<Vec<AuditVerdict>, AuditError> {
        self.build_tables()?;
        let mut out = Vec::with_capacity(axioms.len());
        for &axiom in axioms {
            let witnesses = match axiom {
                Axiom::Wbb => self.wbb()?,
                _ => self.per_agent(axiom),
            };
            out.push(self.verdict(axiom, witnesses));
        }
        Ok(out)
    }

    pub fn audit_one(&mut self, axiom: Axiom) -> Result<AuditVerdict, AuditError> {
        Ok(self.audit(&[axiom])?.remove(0))
    }

    fn per_agent(&self, axiom: Axiom) -> Vec<Witness> {
        let tables = self.tables.as_ref().expect("tables built");
        tables
            .iter()
            .filter_map(|t| match axiom {
                Axiom::Ir => self.check_ir(t),
                Axiom::Sp => self.check_sp(t),
                Axiom::ValueMonotone => self.check_value(t),
                Axiom::IdMon => self.check_value(t).or_else(|| self.check_invitation(t, true)),
                Axiom::IpMon => self.check_value(t).or_else(|| self.check_invitation(t, false)),
                Axiom::BidIndependence => self.check_bid_independence(t),
                Axiom::InvMonPayment => self.check_inv_mon_payment(t),
                Axiom::CriticalGap => self.check_critical_gap(t),
                Axiom::LosingAlone => self.check_losing_alone(t),
                Axiom::Degenerated => self.check_degenerated(t),
                Axiom::Wbb => unreachable!(),
            })
            .collect()
    }

    fn value(&self, t: &AgentTable) -> &Amount {
        self.scenario.true_bid(t.agent)
    }

    fn check_ir(&self, t: &AgentTable) -> Option<Witness> {
        let g = t.true_bid;
        let zero = Extended::Finite(Amount::zero());
        (0..t.subsets.len()).find_map(|s| {
            let u = t.utility(self.value(t), s, g);
            (u < zero).then(|| {
                self.witness(t, (t.truthful_subset, g), (s, g), zero.clone(), u, "utility below zero")
            })
        })
    }

    fn check_sp(&self, t: &AgentTable) -> Option<Witness> {
        let truth = (t.truthful_subset, t.true_bid);
        let u0 = t.utility(self.value(t), truth.0, truth.1);
        for g in t.bids_truth_first() {
            for s in 0..t.subsets.len() {
                let u = t.utility(self.value(t), s, g);
                if u > u0 {
                    return Some(self.witness(t, truth, (s, g), u0, u, "utility: truthful vs deviation"));
                }
            }
        }
        None
    }

    fn check_value(&self, t: &AgentTable) -> Option<Witness> {
        for s in 0..t.subsets.len() {
            if let Some(lo) = (0..t.grid.len()).find(|&g| t.won[s][g]) {
                if let Some(hi) = (lo + 1..t.grid.len()).find(|&g| !t.won[s][g]) {
                    return Some(self.witness(t, (s, lo), (s, hi), flag(true), flag(false), "allocation: lower bid vs higher bid"));
                }
            }
        }
        None
    }

    /// `depressed`: a smaller invitation set must not lose where a larger one
    /// wins. Otherwise the reverse.
    fn check_invitation(&self, t: &AgentTable, depressed: bool) -> Option<Witness> {
        for g in t.bids_truth_first() {
            for &(small, big) in &t.covers {
                let (ws, wb) = (t.won[small][g], t.won[big][g]);
                let bad = if depressed { !ws && wb } else { ws && !wb };
                if bad {
                    return Some(self.witness(t, (small, g), (big, g), flag(ws), flag(wb), "allocation: fewer invitations vs more"));
                }
            }
        }
        None
    }

    fn check_bid_independence(&self, t: &AgentTable) -> Option<Witness> {
        for s in 0..t.subsets.len() {
            for winning in [true, false] {
                let mut first: Option<usize> = None;
                for g in 0..t.grid.len() {
                    if t.won[s][g] != winning {
                        continue;
                    }
                    match first {
                        None => first = Some(g),
                        Some(f) if t.pay[s][f] != t.pay[s][g] => {
                            let note = if winning { "winning payment at two bids" } else { "losing payment at two bids" };
                            return Some(self.witness(t, (s, f), (s, g), t.pay[s][f].clone(), t.pay[s][g].clone(), note));
                        }
                        Some(_) => {}
                    }
                }
            }
        }
        None
    }

    fn check_inv_mon_payment(&self, t: &AgentTable) -> Option<Witness> {
        let g = t.true_bid;
        for winning in [true, false] {
            for &(small, big) in &t.covers {
                let (Some(ps), Some(pb)) = (t.observed(small, winning), t.observed(big, winning)) else {
                    continue;
                };
                if ps < pb {
                    let mut note = if winning {
                        "winning payment: fewer invitations vs more".to_string()
                    } else {
                        "losing payment: fewer invitations vs more".to_string()
                    };
                    if !t.realized(small, winning) || !t.realized(big, winning) {
                        note.push_str(" (implied)");
                    }
                    return Some(self.witness(t, (small, g), (big, g), ps, pb, &note));
                }
            }
        }
        None
    }

    fn check_critical_gap(&self, t: &AgentTable) -> Option<Witness> {
        let g = t.true_bid;
        for s in 0..t.subsets.len() {
            let Some(losing) = t.observed(s, false) else {
                continue;
            };
            let winning = t.observed(s, true).expect("always defined");
            let Some(critical) = &t.critical[s] else {
                continue;
            };
            let gap = winning.sub(&losing);
            if gap != *critical {
                return Some(self.witness(t, (s, g), (s, g), gap, critical.clone(), "winning minus losing payment vs critical bid"));
            }
        }
        None
    }

    fn check_losing_alone(&self, t: &AgentTable) -> Option<Witness> {
        let empty = t.subsets.iter().position(|s| s.is_empty())?;
        let losing = t.observed(empty, false)?;
        let zero = Extended::Finite(Amount::zero());
        (losing > zero).then(|| {
            self.witness(t, (empty, t.true_bid), (empty, t.true_bid), zero, losing, "losing payment with no invitations")
        })
    }

    fn check_degenerated(&self, t: &AgentTable) -> Option<Witness> {
        let g = t.true_bid;
        let u0 = t.utility(self.value(t), t.truthful_subset, g);
        (0..t.subsets.len()).find_map(|s| {
            let u = t.utility(self.value(t), s, g);
            (u != u0).then(|| self.witness(t, (t.truthful_subset, g), (s, g), u0.clone(), u, "utility depends on own invitations"))
        })
    }

    fn revenue(&self, reports: &ReportProfile) -> Result<Extended, AuditError> {
        match self.mechanism.run(self.scenario, reports) {
            Ok(o) => Ok(Extended::Finite(o.revenue)),
            Err(MechanismError::UnboundedPayment { value, .. }) => Ok(value),
            Err(e) => Err(e.into()),
        }
    }

    /// Revenue on the opponent profiles and on every single-agent deviation
    /// (an invitation subset at the true bid, or a grid bid with the true
    /// invitations) from them.
    fn wbb(&mut self) -> Result<Vec<Witness>, AuditError> {
        let zero = Extended::Finite(Amount::zero());
        let mut found = Vec::new();
        let tables = self.tables.take().expect("tables built");
        let result = (|| {
            for (p, base) in self.profiles.iter().enumerate() {
                let r = self.revenue(base)?;
                if r < zero {
                    found.push(Witness {
                        agent: None,
                        opponents: base.clone(),
                        baseline: None,
                        deviation: None,
                        before: zero.clone(),
                        after: r,
                        note: "revenue".into(),
                    });
                }
                for t in tables.iter().filter(|t| t.profile == p) {
                    let mut points: Vec<(usize, usize)> = (0..t.subsets.len()).map(|s| (s, t.true_bid)).collect();
                    points.extend(t.bids_truth_first().skip(1).map(|g| (t.truthful_subset, g)));
                    let truth = (t.truthful_subset, t.true_bid);
                    let mut spent = 0u64;
                    for &(s, g) in &points {
                        if (s, g) == truth {
                            continue;
                        }
                        spent += 1;
                        let reports = apply(base, Some(t.agent), Some(&t.report(s, g)));
                        let r = self.revenue(&reports)?;
                        if r < zero {
                            found.push(self.witness(t, truth, (s, g), zero.clone(), r, "revenue"));
                            break;
                        }
                    }
                    self.spent += spent * self.scenario.len() as u64;
                }
            }
            if self.spent > self.config.budget {
                return Err(AuditError::SpaceTooLarge {
                    needed: self.spent,
                    budget: self.config.budget,
                });
            }
            Ok(())
        })();
        self.tables = Some(tables);
        result.map(|()| found)
    }
}

/// One-shot helpers.
pub fn audit(mechanism: &Mechanism, scenario: &Scenario, axioms: &[Axiom], config: AuditConfig) -> Result<Vec<AuditVerdict>, AuditError> {
    Auditor::new(mechanism, scenario, config)?.audit(axioms)
}

pub fn audit_ir(mechanism: &Mechanism, scenario: &Scenario) -> Result<AuditVerdict, AuditError> {
    Auditor::new(mechanism, scenario, AuditConfig::default())?.audit_one(Axiom::Ir)
}

pub fn audit_sp(mechanism: &Mechanism, scenario: &Scenario, config: AuditConfig) -> Result<AuditVerdict, AuditError> {
    Auditor::new(mechanism, scenario, config)?.audit_one(Axiom::Sp)
}

pub fn audit_wbb(mechanism: &Mechanism, scenario: &Scenario, config: AuditConfig) -> Result<AuditVerdict, AuditError> {
    Auditor::new(mechanism, scenario, config)?.audit_one(Axiom::Wbb)
}

pub fn audit_value_monotone(mechanism: &Mechanism, scenario: &Scenario, config: AuditConfig) -> Result<AuditVerdict, AuditError> {
    Auditor::new(mechanism, scenario, config)?.audit_one(Axiom::ValueMonotone)
}

pub fn audit_id_mon(mechanism: &Mechanism, scenario: &Scenario, config: AuditConfig) -> Result<AuditVerdict, AuditError> {
    Auditor::new(mechanism, scenario, config)?.audit_one(Axiom::IdMon)
}

pub fn audit_ip_mon(mechanism: &Mechanism, scenario: &Scenario, config: AuditConfig) -> Result<AuditVerdict, AuditError> {
    Auditor::new(mechanism, scenario, config)?.audit_one(Axiom::IpMon)
}

pub fn audit_payment_axioms(mechanism: &Mechanism, scenario: &Scenario, config: AuditConfig) -> Result<Vec<AuditVerdict>, AuditError> {
    Auditor::new(mechanism, scenario, config)?.audit(&Axiom::PAYMENT)
}

pub fn audit_degenerated(mechanism: &Mechanism, scenario: &Scenario, config: AuditConfig) -> Result<AuditVerdict, AuditError> {
    Auditor::new(mechanism, scenario, config)?.audit_one(Axiom::Degenerated)
}
