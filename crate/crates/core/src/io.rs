//! Scenario and report files, result reports, and text tables.
//!
//! Amounts are written as strings: `"4"`, `"2.5"`, `"7/3"`, or for
//! irrational payments `"2*sqrt(2)"`. Input amounts must be rational.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::amount::Amount;
use crate::market::{AgentId, Goods, MarketError, ReportProfile, Scenario};
use crate::mechanism::{Grant, Outcome};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unsupported schema_version {found} (expected {SCHEMA_VERSION})")]
    SchemaMismatch { found: u32 },
    #[error("validation error: {0}")]
    Validation(String),
}

impl From<MarketError> for IoError {
    fn from(e: MarketError) -> Self {
        IoError::Validation(e.to_string())
    }
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        IoError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeTag {
    UnitDemand,
    SingleMinded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentEntry {
    pub id: String,
    pub bid: String,
    #[serde(default)]
    pub neighbors: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundle: Option<Vec<String>>,
}

/// On-disk scenario layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub mode: ModeTag,
    pub seller: String,
    #[serde(default)]
    pub seller_neighbors: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items: Option<Vec<String>>,
    pub agents: Vec<AgentEntry>,
}

fn parse_amount(field: &str, s: &str) -> Result<Amount, IoError> {
    s.parse::<Amount>()
        .map_err(|e| IoError::Validation(format!("{field}: {e}")))
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario, IoError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(IoError::SchemaMismatch {
                found: self.schema_version,
            });
        }
        let names: Vec<String> = self.agents.iter().map(|a| a.id.clone()).collect();
        let lookup = |owner: &str, name: &str| -> Result<AgentId, IoError> {
            if name == self.seller {
                return Err(IoError::Validation(format!(
                    "{owner} lists the seller `{name}` as a neighbor"
                )));
            }
            names
                .iter()
                .position(|n| n == name)
                .map(|i| AgentId(i as u32))
                .ok_or_else(|| IoError::Validation(format!("{owner} lists unknown agent `{name}`")))
        };
        let seller_neighbors = self
            .seller_neighbors
            .iter()
            .map(|n| lookup(&self.seller, n))
            .collect::<Result<Vec<_>, _>>()?;
        let mut neighbors = Vec::with_capacity(names.len());
        let mut bids = Vec::with_capacity(names.len());
        for a in &self.agents {
            neighbors.push(
                a.neighbors
                    .iter()
                    .map(|n| lookup(&a.id, n))
                    .collect::<Result<Vec<_>, _>>()?,
            );
            bids.push(parse_amount(&format!("bid of `{}`", a.id), &a.bid)?);
        }
        let goods = match self.mode {
            ModeTag::UnitDemand => {
                if self.items.is_some() || self.agents.iter().any(|a| a.bundle.is_some()) {
                    return Err(IoError::Validation("unit_demand scenarios take `k`, not items or bundles".into()));
                }
                Goods::Units(self.k.ok_or_else(|| IoError::Validation("missing `k`".into()))?)
            }
            ModeTag::SingleMinded => {
                if self.k.is_some() {
                    return Err(IoError::Validation("single_minded scenarios take `items`, not `k`".into()));
                }
                let items = self.items.ok_or_else(|| IoError::Validation("missing `items`".into()))?;
                if items.len() > crate::market::MAX_ITEMS {
                    return Err(IoError::Validation(format!(
                        "at most {} items are supported",
                        crate::market::MAX_ITEMS
                    )));
                }
                for (idx, item) in items.iter().enumerate() {
                    if items[..idx].contains(item) {
                        return Err(IoError::Validation(format!("duplicate item `{item}`")));
                    }
                }
                let mut bundles = Vec::with_capacity(names.len());
                for a in &self.agents {
                    let bundle = a
                        .bundle
                        .as_ref()
                        .ok_or_else(|| IoError::Validation(format!("agent `{}` has no bundle", a.id)))?;
                    let mut mask = 0u64;
                    for item in bundle {
                        let pos = items.iter().position(|x| x == item).ok_or_else(|| {
                            IoError::Validation(format!("bundle of `{}` names unknown item `{item}`", a.id))
                        })?;
                        if mask & (1 << pos) != 0 {
                            return Err(IoError::Validation(format!("bundle of `{}` repeats `{item}`", a.id)));
                        }
                        mask |= 1 << pos;
                    }
                    bundles.push(mask);
                }
                Goods::Bundles { items, bundles }
            }
        };
        Ok(Scenario::new(self.seller, names, seller_neighbors, neighbors, bids, goods)?)
    }

    pub fn from_scenario(scenario: &Scenario) -> Self {
        let name = |a: &AgentId| scenario.name(*a).to_string();
        let items = scenario.items();
        let agents = scenario
            .agents()
            .map(|a| AgentEntry {
                id: scenario.name(a).to_string(),
                bid: scenario.true_bid(a).to_string(),
                neighbors: scenario.neighbors(a).iter().map(name).collect(),
                bundle: scenario.bundle(a).map(|mask| {
                    (0..items.len())
                        .filter(|i| mask & (1 << i) != 0)
                        .map(|i| items[i].clone())
                        .collect()
                }),
            })
            .collect();
        let (mode, k, items) = match scenario.goods() {
            Goods::Units(k) => (ModeTag::UnitDemand, Some(*k), None),
            Goods::Bundles { items, .. } => (ModeTag::SingleMinded, None, Some(items.clone())),
        };
        ScenarioFile {
            schema_version: SCHEMA_VERSION,
            mode,
            seller: scenario.seller().to_string(),
            seller_neighbors: scenario.seller_neighbors().iter().map(name).collect(),
            k,
            items,
            agents,
        }
    }
}

pub fn scenario_from_json(text: &str) -> Result<Scenario, IoError> {
    let file: ScenarioFile = serde_json::from_str(text)?;
    file.into_scenario()
}

pub fn scenario_to_json(scenario: &Scenario) -> String {
    let mut s = serde_json::to_string_pretty(&ScenarioFile::from_scenario(scenario)).expect("serializable");
    s.push('\n');
    s
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })
}

pub fn parse_scenario(path: impl AsRef<Path>) -> Result<Scenario, IoError> {
    scenario_from_json(&read(path.as_ref())?)
}

/// Overlay on the truthful profile; agents not mentioned report truthfully.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportsFile {
    pub schema_version: u32,
    #[serde(default)]
    pub bids: std::collections::BTreeMap<String, String>,
    #[serde(default)]
    pub invites: std::collections::BTreeMap<String, Vec<String>>,
}

pub fn reports_from_json(scenario: &Scenario, text: &str) -> Result<ReportProfile, IoError> {
    let file: ReportsFile = serde_json::from_str(text)?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(IoError::SchemaMismatch {
            found: file.schema_version,
        });
    }
    let mut reports = scenario.truthful();
    for (name, bid) in &file.bids {
        let a = scenario.id(name)?;
        reports.bids[a.index()] = parse_amount(&format!("reported bid of `{name}`"), bid)?;
    }
    for (name, invites) in &file.invites {
        let a = scenario.id(name)?;
        let ids = invites
            .iter()
            .map(|n| scenario.id(n))
            .collect::<Result<Vec<_>, _>>()?;
        let mut sorted = ids.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != ids.len() {
            return Err(IoError::Validation(format!("`{name}` invites someone twice")));
        }
        reports = reports.with_invites(a, ids);
    }
    reports.validate(scenario)?;
    Ok(reports)
}

pub fn parse_reports(scenario: &Scenario, path: impl AsRef<Path>) -> Result<ReportProfile, IoError> {
    reports_from_json(scenario, &read(path.as_ref())?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AgentResult {
    pub id: String,
    pub participant: bool,
    pub won: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bundle: Option<Vec<String>>,
    pub payment: Amount,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub remaining: u32,
    pub winners: Vec<String>,
    /// `None` on the closing row.
    pub agent: Option<String>,
    pub won: bool,
    pub payment: Amount,
}

/// Machine-readable result of one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResultReport {
    pub mechanism: String,
    pub winners: Vec<String>,
    pub agents: Vec<AgentResult>,
    pub social_welfare: Amount,
    pub revenue: Amount,
    pub trace: Vec<TraceEntry>,
}

fn bundle_names(scenario: &Scenario, mask: u64) -> Vec<String> {
    let items = scenario.items();
    (0..items.len())
        .filter(|i| mask & (1 << i) != 0)
        .map(|i| items[i].clone())
        .collect()
}

impl ResultReport {
    pub fn new(mechanism: &str, scenario: &Scenario, outcome: &Outcome) -> Self {
        let names = |w: &[AgentId]| w.iter().map(|&a| scenario.name(a).to_string()).collect();
        let agents = scenario
            .agents()
            .map(|a| AgentResult {
                id: scenario.name(a).to_string(),
                participant: outcome.participants.contains(&a),
                won: outcome.won(a),
                bundle: match outcome.grants[a.index()] {
                    Grant::Bundle(mask) => Some(bundle_names(scenario, mask)),
                    _ => None,
                },
                payment: outcome.payment(a).clone(),
            })
            .collect();
        let trace = outcome
            .trace(scenario)
            .into_iter()
            .map(|row| TraceEntry {
                remaining: row.remaining,
                winners: names(&row.winners_before),
                agent: row.agent.map(|a| scenario.name(a).to_string()),
                won: row.won,
                payment: row.payment,
            })
            .collect();
        ResultReport {
            mechanism: mechanism.to_string(),
            winners: names(&outcome.winners),
            agents,
            social_welfare: outcome.social_welfare.clone(),
            revenue: outcome.revenue.clone(),
            trace,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    /// Text layout following the run-trace tables: capacity left, current
    /// winners, and the allocation and payment of the agent examined.
    pub fn to_table(&self, scenario: &Scenario) -> String {
        let capacity = if scenario.units().is_some() { "Left Units" } else { "Free Items" };
        let set = |w: &[String]| format!("{{{}}}", w.join(","));
        let mut rows: Vec<[String; 3]> = vec![[capacity.to_string(), "W".into(), "(f,p)".into()]];
        for t in &self.trace {
            let third = match &t.agent {
                Some(a) => format!("f_{a}={}, p_{a}={}", u8::from(t.won), t.payment),
                None => "Finished".into(),
            };
            rows.push([t.remaining.to_string(), set(&t.winners), third]);
        }
        let w0 = rows.iter().map(|r| r[0].len()).max().unwrap_or(0);
        let w1 = rows.iter().map(|r| r[1].len()).max().unwrap_or(0);
        let mut out = format!("mechanism: {}\n", self.mechanism);
        for r in &rows {
            let _ = writeln!(out, "{:<w0$}  {:<w1$}  {}", r[0], r[1], r[2]);
        }
        let _ = writeln!(out, "winners: {}", set(&self.winners));
        let pays: Vec<String> = self
            .agents
            .iter()
            .map(|a| format!("{}({})", a.id, a.payment))
            .collect();
        let _ = writeln!(out, "payments: {}", pays.join(", "));
        let _ = writeln!(out, "SW: {}", self.social_welfare);
        let _ = writeln!(out, "Rev: {}", self.revenue);
        out
    }
}

/// One row of a side-by-side comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompareRow {
    pub mechanism: String,
    pub social_welfare: Amount,
    pub revenue: Amount,
    pub winners: Vec<String>,
    /// Every agent in declaration order.
    pub payments: Vec<(String, Amount)>,
}

impl CompareRow {
    pub fn new(mechanism: &str, scenario: &Scenario, outcome: &Outcome) -> Self {
        CompareRow {
            mechanism: mechanism.to_string(),
            social_welfare: outcome.social_welfare.clone(),
            revenue: outcome.revenue.clone(),
            winners: outcome.winners.iter().map(|&a| scenario.name(a).to_string()).collect(),
            payments: scenario
                .agents()
                .map(|a| (scenario.name(a).to_string(), outcome.payment(a).clone()))
                .collect(),
        }
    }
}

pub fn compare_table(rows: &[CompareRow]) -> String {
    let mut cells: Vec<[String; 5]> = vec![[
        "Mechanism".into(),
        "SW".into(),
        "Rev".into(),
        "Winners".into(),
        "Payments".into(),
    ]];
    for r in rows {
        let pays: Vec<String> = r.payments.iter().map(|(a, p)| format!("{a}({p})")).collect();
        cells.push([
            r.mechanism.clone(),
            r.social_welfare.to_string(),
            r.revenue.to_string(),
            format!("{{{}}}", r.winners.join(",")),
            pays.join(", "),
        ]);
    }
    let widths: Vec<usize> = (0..4).map(|c| cells.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in &cells {
        let _ = writeln!(
            out,
            "{:<w0$}  {:<w1$}  {:<w2$}  {:<w3$}  {}",
            r[0],
            r[1],
            r[2],
            r[3],
            r[4],
            w0 = widths[0],
            w1 = widths[1],
            w2 = widths[2],
            w3 = widths[3]
        );
    }
    out
}
