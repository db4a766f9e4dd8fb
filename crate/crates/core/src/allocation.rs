//! Allocation rules. Every rule here depends on bids only through
//! comparisons, which is what makes exact critical bids computable.

use std::cmp::Ordering;
use std::fmt;

use crate::amount::Amount;
use crate::bids::kth_highest;
use crate::market::{AgentId, EffectiveMarket, Node, Scenario};

/// Which kind of goods a rule sells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    UnitDemand,
    SingleMinded,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::UnitDemand => "unit_demand",
            Mode::SingleMinded => "single_minded",
        })
    }
}

/// One allocation problem: a market plus the reported bids (indexed by agent).
#[derive(Clone, Copy)]
pub struct Auction<'a> {
    pub scenario: &'a Scenario,
    pub market: &'a EffectiveMarket,
    pub bids: &'a [Amount],
}

impl<'a> Auction<'a> {
    pub fn bid(&self, v: Node) -> &'a Amount {
        &self.bids[self.market.agent(v).index()]
    }

    fn units(&self) -> usize {
        self.scenario.units().expect("unit-demand rule on a bundle scenario") as usize
    }

    fn bundle(&self, v: Node) -> u64 {
        self.scenario
            .bundle(self.market.agent(v))
            .expect("single-minded rule on a unit scenario")
    }
}

/// Result of an allocation rule. Vectors are indexed by participant node
/// (priority rank).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation {
    pub won: Vec<bool>,
    /// Winners in the order the rule selected them.
    pub winners: Vec<Node>,
    /// How many participants, in priority order, the rule examined before
    /// stopping. Rules that look at everyone at once report all of them.
    pub scanned: usize,
    /// Prices fixed by the rule itself at selection time, if it has any.
    pub prices: Vec<Option<Amount>>,
}

impl Allocation {
    /// No winners among `m` participants.
    pub fn empty(m: usize) -> Self {
        Allocation {
            won: vec![false; m],
            winners: Vec::new(),
            scanned: 0,
            prices: Vec::new(),
        }
    }

    pub fn admit(&mut self, v: Node) {
        self.won[v] = true;
        self.winners.push(v);
    }
}

pub trait AllocationRule: Send + Sync + fmt::Debug {
    fn id(&self) -> String;

    fn mode(&self) -> Mode;

    fn allocate(&self, auction: &Auction<'_>) -> Allocation;

    /// Whether outcomes depend on bids only through comparisons.
    fn comparison_based(&self) -> bool {
        true
    }

    /// Whether bids are compared after scaling by `1 / sqrt(|bundle|)`,
    /// which adds irrational breakpoints to the critical-bid search.
    fn sqrt_scaled(&self) -> bool {
        false
    }
}

fn others_kth(auction: &Auction<'_>, k: usize, skip: impl Fn(Node) -> bool) -> Amount {
    let m = auction.market.len();
    kth_highest((0..m).filter(|&u| !skip(u)).map(|u| auction.bid(u)), k)
}

/// DNA-MU: `i` wins if `v_i >= v^k(N \ (T_i ∪ W))`, pays that threshold, and
/// `k` drops by one.
#[derive(Clone, Copy, Debug, Default)]
pub struct DnaMu;

impl AllocationRule for DnaMu {
    fn id(&self) -> String {
        "dna-mu".into()
    }

    fn mode(&self) -> Mode {
        Mode::UnitDemand
    }

    fn allocate(&self, auction: &Auction<'_>) -> Allocation {
        let m = auction.market.len();
        let idt = auction.market.idt();
        let mut out = Allocation::empty(m);
        out.prices = vec![None; m];
        let mut k = auction.units();
        for v in 0..m {
            if k == 0 {
                break;
            }
            out.scanned = v + 1;
            let threshold = others_kth(auction, k, |u| idt.dominates(v, u) || out.won[u]);
            if *auction.bid(v) >= threshold {
                out.admit(v);
                out.prices[v] = Some(threshold);
                k -= 1;
            }
        }
        out
    }
}

/// DNA-MU-R: `i` wins if `v_i >= v^k(N \ T_i)` with `k` fixed, until `k`
/// winners are found.
#[derive(Clone, Copy, Debug, Default)]
pub struct DnaMuR;

impl AllocationRule for DnaMuR {
    fn id(&self) -> String {
        "dna-mu-r".into()
    }

    fn mode(&self) -> Mode {
        Mode::UnitDemand
    }

    fn allocate(&self, auction: &Auction<'_>) -> Allocation {
        let m = auction.market.len();
        let idt = auction.market.idt();
        let k = auction.units();
        let mut out = Allocation::empty(m);
        for v in 0..m {
            if out.winners.len() == k {
                break;
            }
            out.scanned = v + 1;
            let threshold = others_kth(auction, k, |u| idt.dominates(v, u));
            if *auction.bid(v) >= threshold {
                out.admit(v);
            }
        }
        out
    }
}

/// The `k` highest bids win; equal bids are ranked by priority.
#[derive(Clone, Copy, Debug, Default)]
pub struct Efficient;

impl AllocationRule for Efficient {
    fn id(&self) -> String {
        "efficient".into()
    }

    fn mode(&self) -> Mode {
        Mode::UnitDemand
    }

    fn allocate(&self, auction: &Auction<'_>) -> Allocation {
        let m = auction.market.len();
        let mut ranked: Vec<Node> = (0..m).collect();
        ranked.sort_by(|&a, &b| auction.bid(b).cmp(auction.bid(a)).then(a.cmp(&b)));
        let mut out = Allocation::empty(m);
        out.scanned = m;
        for &v in ranked.iter().take(auction.units()) {
            out.admit(v);
        }
        out
    }
}

/// Squared bids and bundle sizes for score comparisons without square roots.
struct Scores {
    sq: Vec<Amount>,
    size: Vec<u32>,
}

impl Scores {
    fn new(auction: &Auction<'_>) -> Self {
        let m = auction.market.len();
        Scores {
            sq: (0..m).map(|v| auction.bid(v).square()).collect(),
            size: (0..m).map(|v| auction.bundle(v).count_ones()).collect(),
        }
    }

    /// Compares `v_a / sqrt(|S_a|)` with `v_b / sqrt(|S_b|)`.
    fn cmp_score(&self, a: Node, b: Node) -> Ordering {
        if self.size[a] == self.size[b] {
            return self.sq[a].cmp(&self.sq[b]);
        }
        let lhs = self.sq[a].scale(&(self.size[b] as i128).into());
        let rhs = self.sq[b].scale(&(self.size[a] as i128).into());
        lhs.cmp(&rhs)
    }

    /// Strict ranking: higher score first, then higher priority.
    fn before(&self, a: Node, b: Node) -> bool {
        match self.cmp_score(a, b) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => a < b,
        }
    }
}

/// Greedy single-minded allocation by descending `v / sqrt(|S|)` over the
/// given candidates, starting from `seed` winners. Returns the full winner
/// set (seed included) in selection order.
fn greedy(auction: &Auction<'_>, scores: &Scores, candidates: &[Node], seed: &[Node]) -> Vec<Node> {
    let mut ranked = candidates.to_vec();
    ranked.sort_by(|&a, &b| {
        if a == b {
            Ordering::Equal
        } else if scores.before(a, b) {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    });
    let mut taken: u64 = seed.iter().fold(0, |acc, &v| acc | auction.bundle(v));
    let mut winners = seed.to_vec();
    for v in ranked {
        if seed.contains(&v) {
            continue;
        }
        let b = auction.bundle(v);
        if b & taken == 0 {
            taken |= b;
            winners.push(v);
        }
    }
    winners
}

/// Greedy `sqrt(k)`-approximation over every participant.
#[derive(Clone, Copy, Debug, Default)]
pub struct GreedySqrtK;

impl AllocationRule for GreedySqrtK {
    fn id(&self) -> String {
        "greedy-sqrt-k".into()
    }

    fn mode(&self) -> Mode {
        Mode::SingleMinded
    }

    fn sqrt_scaled(&self) -> bool {
        true
    }

    fn allocate(&self, auction: &Auction<'_>) -> Allocation {
        let m = auction.market.len();
        let scores = Scores::new(auction);
        let all: Vec<Node> = (0..m).collect();
        let mut out = Allocation::empty(m);
        out.scanned = m;
        for v in greedy(auction, &scores, &all, &[]) {
            out.admit(v);
        }
        out
    }
}

/// Shared BFS scan for the single-minded rules: `gate(v, W)` decides
/// eligibility, and an eligible `v` wins if its bundle is still free.
fn scan_single_minded(
    auction: &Auction<'_>,
    mut gate: impl FnMut(Node, &[Node]) -> bool,
) -> Allocation {
    let m = auction.market.len();
    let mut out = Allocation::empty(m);
    out.scanned = m;
    let mut taken = 0u64;
    for v in 0..m {
        let b = auction.bundle(v);
        if b & taken == 0 && gate(v, &out.winners) {
            taken |= b;
            out.admit(v);
        }
    }
    out
}

/// NSA: `i` must be the best-ranked agent of `(N \ T_i) ∪ {i}` and fit.
/// Ranking is strict, so score ties go to the earlier priority.
#[derive(Clone, Copy, Debug, Default)]
pub struct Nsa;

impl AllocationRule for Nsa {
    fn id(&self) -> String {
        "nsa".into()
    }

    fn mode(&self) -> Mode {
        Mode::SingleMinded
    }

    fn sqrt_scaled(&self) -> bool {
        true
    }

    fn allocate(&self, auction: &Auction<'_>) -> Allocation {
        let scores = Scores::new(auction);
        let idt = auction.market.idt();
        let m = auction.market.len();
        scan_single_minded(auction, |v, _| {
            (0..m).all(|u| idt.dominates(v, u) || scores.before(v, u))
        })
    }
}

/// Exploratory rule I: rerun the greedy over `(N \ T_i) ∪ {i}` seeded with
/// the current winners and admit `i` if it comes out a winner.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExploratoryI;

impl AllocationRule for ExploratoryI {
    fn id(&self) -> String {
        "exploratory-1".into()
    }

    fn mode(&self) -> Mode {
        Mode::SingleMinded
    }

    fn sqrt_scaled(&self) -> bool {
        true
    }

    fn allocate(&self, auction: &Auction<'_>) -> Allocation {
        let scores = Scores::new(auction);
        let idt = auction.market.idt();
        let m = auction.market.len();
        scan_single_minded(auction, |v, w| {
            let pool: Vec<Node> = (0..m).filter(|&u| u == v || !idt.dominates(v, u)).collect();
            greedy(auction, &scores, &pool, w).contains(&v)
        })
    }
}

/// Exploratory rule II: `i` must rank among the top `k` of
/// `(N \ T_i) ∪ {i}`, meaning fewer than `k` others score strictly higher.
#[derive(Clone, Copy, Debug)]
pub struct ExploratoryII {
    pub k: usize,
}

impl Default for ExploratoryII {
    fn default() -> Self {
        ExploratoryII { k: 2 }
    }
}

impl AllocationRule for ExploratoryII {
    fn id(&self) -> String {
        "exploratory-2".into()
    }

    fn mode(&self) -> Mode {
        Mode::SingleMinded
    }

    fn sqrt_scaled(&self) -> bool {
        true
    }

    fn allocate(&self, auction: &Auction<'_>) -> Allocation {
        let scores = Scores::new(auction);
        let idt = auction.market.idt();
        let m = auction.market.len();
        let k = self.k;
        scan_single_minded(auction, |v, _| {
            let above = (0..m)
                .filter(|&u| !idt.dominates(v, u))
                .filter(|&u| scores.cmp_score(u, v) == Ordering::Greater)
                .count();
            above < k
        })
    }
}

/// Greedy `sqrt(k)` allocation over explicit `(agent, bid, bundle)` entries,
/// listed in priority order, starting from `pre_winners`. Returns the winner
/// set in selection order.
pub fn greedy_sqrt_k(entries: &[(AgentId, Amount, u64)], pre_winners: &[AgentId]) -> Vec<AgentId> {
    let scores = Scores {
        sq: entries.iter().map(|e| e.1.square()).collect(),
        size: entries.iter().map(|e| e.2.count_ones()).collect(),
    };
    let mut ranked: Vec<usize> = (0..entries.len()).collect();
    ranked.sort_by(|&a, &b| {
        if a == b {
            Ordering::Equal
        } else if scores.before(a, b) {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    });
    let mut winners: Vec<AgentId> = pre_winners.to_vec();
    let mut taken = entries
        .iter()
        .filter(|e| pre_winners.contains(&e.0))
        .fold(0u64, |acc, e| acc | e.2);
    for idx in ranked {
        let (a, _, b) = &entries[idx];
        if winners.contains(a) {
            continue;
        }
        if b & taken == 0 {
            taken |= b;
            winners.push(*a);
        }
    }
    winners
}
