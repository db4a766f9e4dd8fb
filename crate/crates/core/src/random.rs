//! Seeded random markets and brute-force optima for property tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::amount::Amount;
use crate::market::{build_market_unchecked, AgentId, Scenario, ScenarioBuilder};

#[derive(Clone, Debug)]
pub struct RandomConfig {
    pub min_agents: usize,
    pub max_agents: usize,
    /// Bids are integers in `0..=max_bid`.
    pub max_bid: i64,
    /// Probability of each possible agent-to-agent edge.
    pub edge_prob: f64,
    /// Make every agent-to-agent edge bidirectional.
    pub undirected: bool,
}

impl Default for RandomConfig {
    fn default() -> Self {
        RandomConfig {
            min_agents: 2,
            max_agents: 7,
            max_bid: 10,
            edge_prob: 0.3,
            undirected: false,
        }
    }
}

fn name(i: usize) -> String {
    format!("a{i}")
}

/// Seller neighbors (at least one) and agent edges.
fn topology(rng: &mut ChaCha8Rng, n: usize, cfg: &RandomConfig) -> (Vec<usize>, Vec<(usize, usize)>) {
    let mut roots: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.35)).collect();
    if roots.is_empty() {
        roots.push(rng.gen_range(0..n));
    }
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a == b || (cfg.undirected && b < a) {
                continue;
            }
            if rng.gen_bool(cfg.edge_prob) {
                edges.push((a, b));
                if cfg.undirected {
                    edges.push((b, a));
                }
            }
        }
    }
    (roots, edges)
}

fn wire(mut builder: ScenarioBuilder, roots: &[usize], edges: &[(usize, usize)]) -> ScenarioBuilder {
    for &r in roots {
        builder = builder.edge("s", &name(r));
    }
    for &(a, b) in edges {
        builder = builder.edge(&name(a), &name(b));
    }
    builder
}

/// A unit-demand market with `k` in `1..=3`.
pub fn unit_demand(seed: u64, cfg: &RandomConfig) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(cfg.min_agents..=cfg.max_agents);
    let k = rng.gen_range(1..=3);
    let mut builder = ScenarioBuilder::units(k);
    for i in 0..n {
        builder = builder.agent(&name(i), rng.gen_range(0..=cfg.max_bid));
    }
    let (roots, edges) = topology(&mut rng, n, cfg);
    wire(builder, &roots, &edges).build().expect("generated scenario is valid")
}

/// A single-minded market over 1 to 5 items.
pub fn single_minded(seed: u64, cfg: &RandomConfig) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(cfg.min_agents..=cfg.max_agents);
    let m = rng.gen_range(1..=5usize);
    let items: Vec<String> = (0..m).map(|j| format!("i{j}")).collect();
    let mut builder = ScenarioBuilder::items(&items);
    for i in 0..n {
        let mask: u64 = rng.gen_range(1..(1u64 << m));
        let bundle: Vec<&str> = (0..m).filter(|j| mask & (1 << j) != 0).map(|j| items[j].as_str()).collect();
        builder = builder.bundled(&name(i), rng.gen_range(0..=cfg.max_bid), &bundle);
    }
    let (roots, edges) = topology(&mut rng, n, cfg);
    wire(builder, &roots, &edges).build().expect("generated scenario is valid")
}

/// Agents reachable under truthful invitations.
pub fn participants(scenario: &Scenario) -> Vec<AgentId> {
    let truthful = scenario.truthful();
    build_market_unchecked(scenario, &truthful.invites).order().to_vec()
}

/// Largest total true value over sets of at most `k` participants, by
/// enumerating every subset.
pub fn optimal_unit_welfare(scenario: &Scenario) -> Amount {
    let k = scenario.units().expect("unit-demand scenario");
    let agents = participants(scenario);
    let mut best = Amount::zero();
    for mask in 0u64..1 << agents.len() {
        if mask.count_ones() > k {
            continue;
        }
        let total: Amount = agents
            .iter()
            .enumerate()
            .filter(|&(j, _)| mask & (1 << j) != 0)
            .map(|(_, &a)| scenario.true_bid(a))
            .sum();
        best = best.max(total);
    }
    best
}

/// Largest total true value over sets of participants with pairwise
/// disjoint bundles, by enumerating every subset.
pub fn optimal_bundle_welfare(scenario: &Scenario) -> Amount {
    let agents = participants(scenario);
    let mut best = Amount::zero();
    for mask in 0u64..1 << agents.len() {
        let mut used = 0u64;
        let mut ok = true;
        let mut total = Amount::zero();
        for (j, &a) in agents.iter().enumerate() {
            if mask & (1 << j) == 0 {
                continue;
            }
            let b = scenario.bundle(a).expect("single-minded scenario");
            if used & b != 0 {
                ok = false;
                break;
            }
            used |= b;
            total = &total + scenario.true_bid(a);
        }
        if ok {
            best = best.max(total);
        }
    }
    best
}
