//! Scenarios, reports, and the effective market they induce.

use std::fmt;

use crate::amount::Amount;

/// Index of an agent in its scenario. The total order on ids is the order in
/// which agents are declared.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub u32);

impl AgentId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// What the seller offers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Goods {
    /// `k` identical units, one per winner.
    Units(u32),
    /// Heterogeneous items; each agent wants exactly one bundle, stored as a
    /// bitmask over `items`.
    Bundles { items: Vec<String>, bundles: Vec<u64> },
}

pub const MAX_ITEMS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MarketError {
    #[error("agent {agent} reports invitee {invitee} who is not one of its neighbors")]
    InvalidReport { agent: String, invitee: String },
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("report profile covers {got} agents, scenario has {expected}")]
    ProfileSize { expected: usize, got: usize },
    #[error("invalid scenario: {0}")]
    Validation(String),
}

/// A complete auction instance with every agent's true type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    seller: String,
    names: Vec<String>,
    seller_neighbors: Vec<AgentId>,
    neighbors: Vec<Vec<AgentId>>,
    true_bids: Vec<Amount>,
    goods: Goods,
}

impl Scenario {
    /// Validates and assembles a scenario. Neighbor lists are sorted.
    pub fn new(
        seller: String,
        names: Vec<String>,
        mut seller_neighbors: Vec<AgentId>,
        mut neighbors: Vec<Vec<AgentId>>,
        true_bids: Vec<Amount>,
        goods: Goods,
    ) -> Result<Self, MarketError> {
        let n = names.len();
        let invalid = |msg: String| Err(MarketError::Validation(msg));
        if neighbors.len() != n || true_bids.len() != n {
            return invalid("agent tables have inconsistent lengths".into());
        }
        if n > u32::MAX as usize {
            return invalid("too many agents".into());
        }
        for (idx, name) in names.iter().enumerate() {
            if name.is_empty() {
                return invalid(format!("agent #{idx} has an empty id"));
            }
            if *name == seller {
                return invalid(format!("agent id `{name}` collides with the seller"));
            }
            if names[..idx].contains(name) {
                return invalid(format!("duplicate agent id `{name}`"));
            }
        }
        let check_list = |owner: &str, list: &mut Vec<AgentId>| -> Result<(), MarketError> {
            list.sort();
            for w in list.windows(2) {
                if w[0] == w[1] {
                    return Err(MarketError::Validation(format!(
                        "{owner} lists neighbor `{}` twice",
                        names[w[0].index()]
                    )));
                }
            }
            if let Some(bad) = list.iter().find(|a| a.index() >= n) {
                return Err(MarketError::UnknownAgent(format!("#{}", bad.0)));
            }
            Ok(())
        };
        check_list(&seller, &mut seller_neighbors)?;
        for (idx, list) in neighbors.iter_mut().enumerate() {
            check_list(&names[idx], list)?;
            if list.iter().any(|a| a.index() == idx) {
                return invalid(format!("agent `{}` lists itself as a neighbor", names[idx]));
            }
        }
        if let Some(idx) = true_bids.iter().position(|b| b.is_negative()) {
            return invalid(format!("agent `{}` has a negative bid", names[idx]));
        }
        match &goods {
            Goods::Units(k) => {
                if *k == 0 {
                    return invalid("unit count must be at least 1".into());
                }
            }
            Goods::Bundles { items, bundles } => {
                if items.is_empty() || items.len() > MAX_ITEMS {
                    return invalid(format!("item count must be between 1 and {MAX_ITEMS}"));
                }
                if bundles.len() != n {
                    return invalid("every agent needs exactly one bundle".into());
                }
                let full = if items.len() == 64 { u64::MAX } else { (1u64 << items.len()) - 1 };
                for (idx, b) in bundles.iter().enumerate() {
                    if *b == 0 {
                        return invalid(format!("agent `{}` has an empty bundle", names[idx]));
                    }
                    if b & !full != 0 {
                        return invalid(format!("bundle of `{}` lies outside the item set", names[idx]));
                    }
                }
            }
        }
        Ok(Scenario {
            seller,
            names,
            seller_neighbors,
            neighbors,
            true_bids,
            goods,
        })
    }

    pub fn seller(&self) -> &str {
        &self.seller
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        (0..self.names.len() as u32).map(AgentId)
    }

    pub fn name(&self, a: AgentId) -> &str {
        &self.names[a.index()]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn id(&self, name: &str) -> Result<AgentId, MarketError> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| AgentId(i as u32))
            .ok_or_else(|| MarketError::UnknownAgent(name.to_string()))
    }

    pub fn seller_neighbors(&self) -> &[AgentId] {
        &self.seller_neighbors
    }

    pub fn neighbors(&self, a: AgentId) -> &[AgentId] {
        &self.neighbors[a.index()]
    }

    pub fn true_bid(&self, a: AgentId) -> &Amount {
        &self.true_bids[a.index()]
    }

    pub fn true_bids(&self) -> &[Amount] {
        &self.true_bids
    }

    pub fn goods(&self) -> &Goods {
        &self.goods
    }

    pub fn units(&self) -> Option<u32> {
        match self.goods {
            Goods::Units(k) => Some(k),
            Goods::Bundles { .. } => None,
        }
    }

    pub fn bundle(&self, a: AgentId) -> Option<u64> {
        match &self.goods {
            Goods::Units(_) => None,
            Goods::Bundles { bundles, .. } => Some(bundles[a.index()]),
        }
    }

    /// Bundle size, or 1 in unit-demand mode.
    pub fn bundle_size(&self, a: AgentId) -> u32 {
        self.bundle(a).map_or(1, u64::count_ones)
    }

    pub fn items(&self) -> &[String] {
        match &self.goods {
            Goods::Units(_) => &[],
            Goods::Bundles { items, .. } => items,
        }
    }

    pub fn truthful(&self) -> ReportProfile {
        ReportProfile {
            bids: self.true_bids.clone(),
            invites: self.neighbors.clone(),
        }
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Convenience builder, mostly for tests and generators.
#[derive(Clone, Debug)]
pub struct ScenarioBuilder {
    seller: String,
    names: Vec<String>,
    bids: Vec<Amount>,
    bundles: Vec<Vec<String>>,
    edges: Vec<(String, String)>,
    goods_units: Option<u32>,
    items: Option<Vec<String>>,
}

impl ScenarioBuilder {
    pub fn units(k: u32) -> Self {
        ScenarioBuilder {
            seller: "s".into(),
            names: Vec::new(),
            bids: Vec::new(),
            bundles: Vec::new(),
            edges: Vec::new(),
            goods_units: Some(k),
            items: None,
        }
    }

    pub fn items<S: AsRef<str>>(items: &[S]) -> Self {
        ScenarioBuilder {
            items: Some(items.iter().map(|s| s.as_ref().to_string()).collect()),
            goods_units: None,
            ..Self::units(1)
        }
    }

    pub fn agent(mut self, name: &str, bid: impl Into<Amount>) -> Self {
        self.names.push(name.to_string());
        self.bids.push(bid.into());
        self.bundles.push(Vec::new());
        self
    }

    pub fn bundled(mut self, name: &str, bid: impl Into<Amount>, bundle: &[&str]) -> Self {
        self = self.agent(name, bid);
        *self.bundles.last_mut().unwrap() = bundle.iter().map(|s| s.to_string()).collect();
        self
    }

    /// Directed invitation edge; `from` may be the seller.
    pub fn edge(mut self, from: &str, to: &str) -> Self {
        self.edges.push((from.to_string(), to.to_string()));
        self
    }

    /// Both directions (the seller side stays one-way).
    pub fn link(self, a: &str, b: &str) -> Self {
        let seller = self.seller.clone();
        let s = self.edge(a, b);
        if a == seller {
            s
        } else {
            s.edge(b, a)
        }
    }

    pub fn build(self) -> Result<Scenario, MarketError> {
        let n = self.names.len();
        let lookup = |name: &str| {
            self.names
                .iter()
                .position(|x| x == name)
                .map(|i| AgentId(i as u32))
                .ok_or_else(|| MarketError::UnknownAgent(name.to_string()))
        };
        let mut seller_neighbors = Vec::new();
        let mut neighbors = vec![Vec::new(); n];
        for (from, to) in &self.edges {
            let t = lookup(to)?;
            if *from == self.seller {
                seller_neighbors.push(t);
            } else {
                neighbors[lookup(from)?.index()].push(t);
            }
        }
        let goods = match (self.goods_units, self.items) {
            (Some(k), _) => Goods::Units(k),
            (None, Some(items)) => {
                let mut bundles = Vec::with_capacity(n);
                for (idx, b) in self.bundles.iter().enumerate() {
                    let mut mask = 0u64;
                    for item in b {
                        let pos = items.iter().position(|x| x == item).ok_or_else(|| {
                            MarketError::Validation(format!(
                                "bundle of `{}` names unknown item `{item}`",
                                self.names[idx]
                            ))
                        })?;
                        mask |= 1 << pos;
                    }
                    bundles.push(mask);
                }
                Goods::Bundles { items, bundles }
            }
            (None, None) => unreachable!(),
        };
        Scenario::new(self.seller, self.names, seller_neighbors, neighbors, self.bids, goods)
    }
}

/// Reported types: a bid and an invitation set for every agent.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ReportProfile {
    pub bids: Vec<Amount>,
    pub invites: Vec<Vec<AgentId>>,
}

impl ReportProfile {
    pub fn with_bid(mut self, a: AgentId, bid: Amount) -> Self {
        self.bids[a.index()] = bid;
        self
    }

    /// Replaces an invitation set; the list is sorted.
    pub fn with_invites(mut self, a: AgentId, mut invites: Vec<AgentId>) -> Self {
        invites.sort();
        self.invites[a.index()] = invites;
        self
    }

    pub fn validate(&self, scenario: &Scenario) -> Result<(), MarketError> {
        let n = scenario.len();
        if self.bids.len() != n || self.invites.len() != n {
            return Err(MarketError::ProfileSize {
                expected: n,
                got: self.bids.len().max(self.invites.len()),
            });
        }
        for a in scenario.agents() {
            if self.bids[a.index()].is_negative() {
                return Err(MarketError::Validation(format!(
                    "agent `{}` reports a negative bid",
                    scenario.name(a)
                )));
            }
            for &x in &self.invites[a.index()] {
                if x.index() >= n {
                    return Err(MarketError::UnknownAgent(format!("#{}", x.0)));
                }
                if scenario.neighbors(a).binary_search(&x).is_err() {
                    return Err(MarketError::InvalidReport {
                        agent: scenario.name(a).to_string(),
                        invitee: scenario.name(x).to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Node index inside an [`EffectiveMarket`]; equals the BFS priority rank.
pub type Node = usize;

/// The dominator tree of the reachable invitation digraph, rooted at the
/// seller. Nodes are priority ranks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DominationTree {
    parent: Vec<Option<Node>>,
    children: Vec<Vec<Node>>,
    preorder: Vec<Node>,
    tin: Vec<usize>,
    tout: Vec<usize>,
}

impl DominationTree {
    /// Immediate dominator; `None` means the seller.
    pub fn parent(&self, v: Node) -> Option<Node> {
        self.parent[v]
    }

    pub fn children(&self, v: Node) -> &[Node] {
        &self.children[v]
    }

    pub fn roots(&self) -> impl Iterator<Item = Node> + '_ {
        (0..self.parent.len()).filter(|&v| self.parent[v].is_none())
    }

    /// Whether `a` dominates `b` (reflexive).
    pub fn dominates(&self, a: Node, b: Node) -> bool {
        self.tin[a] <= self.tin[b] && self.tout[b] <= self.tout[a]
    }

    /// The subtree rooted at `v`, `v` first.
    pub fn subtree_nodes(&self, v: Node) -> &[Node] {
        &self.preorder[self.tin[v]..self.tout[v]]
    }
}

/// Participants reachable from the seller under a report profile.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EffectiveMarket {
    order: Vec<AgentId>,
    node_of: Vec<Option<Node>>,
    depth: Vec<u32>,
    edges: Vec<(Option<Node>, Node)>,
    idt: DominationTree,
}

impl EffectiveMarket {
    /// Participants in priority order.
    pub fn order(&self) -> &[AgentId] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn node(&self, a: AgentId) -> Option<Node> {
        self.node_of.get(a.index()).copied().flatten()
    }

    pub fn agent(&self, v: Node) -> AgentId {
        self.order[v]
    }

    pub fn contains(&self, a: AgentId) -> bool {
        self.node(a).is_some()
    }

    pub fn depth(&self, v: Node) -> u32 {
        self.depth[v]
    }

    /// Diffusion edges among participants; `None` is the seller.
    pub fn edges(&self) -> &[(Option<Node>, Node)] {
        &self.edges
    }

    pub fn idt(&self) -> &DominationTree {
        &self.idt
    }

    pub fn subtree(&self, a: AgentId) -> Result<Vec<AgentId>, MarketError> {
        let v = self
            .node(a)
            .ok_or_else(|| MarketError::UnknownAgent(format!("#{}", a.0)))?;
        Ok(self.idt.subtree_nodes(v).iter().map(|&u| self.order[u]).collect())
    }
}

/// Builds the effective market after validating `reports`.
pub fn build_effective_market(
    scenario: &Scenario,
    reports: &ReportProfile,
) -> Result<EffectiveMarket, MarketError> {
    reports.validate(scenario)?;
    Ok(build_market_unchecked(scenario, &reports.invites))
}

pub fn bfs_priority(market: &EffectiveMarket) -> &[AgentId] {
    market.order()
}

pub fn build_idt(market: &EffectiveMarket) -> &DominationTree {
    market.idt()
}

pub fn subtree(market: &EffectiveMarket, a: AgentId) -> Result<Vec<AgentId>, MarketError> {
    market.subtree(a)
}

/// Builds the market from already validated invitation lists.
pub fn build_market_unchecked(scenario: &Scenario, invites: &[Vec<AgentId>]) -> EffectiveMarket {
    let n = scenario.len();
    let mut node_of: Vec<Option<Node>> = vec![None; n];
    let mut order = Vec::new();
    let mut depth = Vec::new();
    // level-synchronous BFS, each level sorted by id
    let mut level: Vec<AgentId> = scenario.seller_neighbors().to_vec();
    let mut d = 1;
    while !level.is_empty() {
        level.sort();
        level.dedup();
        let mut next = Vec::new();
        for &a in &level {
            if node_of[a.index()].is_none() {
                node_of[a.index()] = Some(order.len());
                order.push(a);
                depth.push(d);
            }
        }
        for &a in &level {
            for &b in &invites[a.index()] {
                if node_of[b.index()].is_none() {
                    next.push(b);
                }
            }
        }
        level = next;
        d += 1;
    }
    let m = order.len();
    let mut preds: Vec<Vec<Option<Node>>> = vec![Vec::new(); m];
    let mut edges = Vec::new();
    for &a in scenario.seller_neighbors() {
        let v = node_of[a.index()].expect("seller neighbors are reachable");
        preds[v].push(None);
        edges.push((None, v));
    }
    for (u, &a) in order.iter().enumerate() {
        for &b in &invites[a.index()] {
            let v = node_of[b.index()].expect("invitees of participants are reachable");
            preds[v].push(Some(u));
            edges.push((Some(u), v));
        }
    }
    let idt = dominators(&preds);
    EffectiveMarket {
        order,
        node_of,
        depth,
        edges,
        idt,
    }
}

/// Iterative dominator computation (Cooper, Harvey, Kennedy). BFS ranks serve
/// as the processing order: a dominator is strictly closer to the root than
/// anything it dominates, so every intersection walk moves towards lower
/// ranks.
fn dominators(preds: &[Vec<Option<Node>>]) -> DominationTree {
    let m = preds.len();
    // idom in shifted numbering: 0 is the seller, v + 1 is node v
    const UNDEF: usize = usize::MAX;
    let mut idom = vec![UNDEF; m + 1];
    idom[0] = 0;
    let shift = |p: Option<Node>| p.map_or(0, |u| u + 1);
    let intersect = |idom: &[usize], mut a: usize, mut b: usize| {
        while a != b {
            while a > b {
                a = idom[a];
            }
            while b > a {
                b = idom[b];
            }
        }
        a
    };
    let mut changed = true;
    while changed {
        changed = false;
        for v in 0..m {
            let mut new = UNDEF;
            for &p in &preds[v] {
                let p = shift(p);
                if idom[p] == UNDEF {
                    continue;
                }
                new = if new == UNDEF { p } else { intersect(&idom, p, new) };
            }
            if idom[v + 1] != new {
                idom[v + 1] = new;
                changed = true;
            }
        }
    }
    let parent: Vec<Option<Node>> = (0..m)
        .map(|v| match idom[v + 1] {
            0 => None,
            u => Some(u - 1),
        })
        .collect();
    let mut children = vec![Vec::new(); m];
    for v in 0..m {
        if let Some(p) = parent[v] {
            children[p].push(v);
        }
    }
    let mut preorder = Vec::with_capacity(m);
    let mut tin = vec![0; m];
    let mut tout = vec![0; m];
    let mut stack: Vec<(Node, usize)> = Vec::new();
    for root in (0..m).filter(|&v| parent[v].is_none()) {
        stack.push((root, 0));
        tin[root] = preorder.len();
        preorder.push(root);
        while let Some((v, next)) = stack.last_mut() {
            if let Some(&c) = children[*v].get(*next) {
                *next += 1;
                tin[c] = preorder.len();
                preorder.push(c);
                stack.push((c, 0));
            } else {
                tout[*v] = preorder.len();
                stack.pop();
            }
        }
    }
    DominationTree {
        parent,
        children,
        preorder,
        tin,
        tout,
    }
}
