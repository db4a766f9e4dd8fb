//! Bundled example scenarios.

use crate::io::{reports_from_json, scenario_from_json};
use crate::market::{ReportProfile, Scenario, ScenarioBuilder};

const FILES: [(&str, &str); 8] = [
    ("fig1", include_str!("../fixtures/fig1.json")),
    ("fig7", include_str!("../fixtures/fig7.json")),
    ("fig8", include_str!("../fixtures/fig8.json")),
    ("fig10", include_str!("../fixtures/fig10.json")),
    ("fig11", include_str!("../fixtures/fig11.json")),
    ("empty", include_str!("../fixtures/empty.json")),
    ("prop10-chain", include_str!("../fixtures/prop10-chain.json")),
    ("shared-bundle", include_str!("../fixtures/shared-bundle.json")),
];

const FIG2_REPORTS: &str = include_str!("../fixtures/fig2-reports.json");

pub fn names() -> impl Iterator<Item = &'static str> {
    FILES.iter().map(|(n, _)| *n)
}

pub fn source(name: &str) -> Option<&'static str> {
    FILES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// A bundled scenario by name. Panics on unknown names.
pub fn fixture(name: &str) -> Scenario {
    let text = source(name).unwrap_or_else(|| panic!("no fixture named `{name}`"));
    scenario_from_json(text).expect("bundled fixtures are valid")
}

/// `fig1` with `D` inviting nobody.
pub fn fig2_reports(fig1: &Scenario) -> ReportProfile {
    reports_from_json(fig1, FIG2_REPORTS).expect("bundled fixtures are valid")
}

/// `fig1` grown to `k` units by adding `k - 3` seller neighbors bidding more
/// than anyone else. They are declared first, so they are examined first.
pub fn dummy_bidders(k: u32) -> Scenario {
    assert!(k >= 3, "the construction needs at least 3 units");
    let mut b = ScenarioBuilder::units(k);
    for t in 1..=k - 3 {
        let name = format!("m{t}");
        b = b.agent(&name, 8).edge("s", &name);
    }
    b.agent("A", 4)
        .agent("B", 1)
        .agent("F", 6)
        .agent("C", 4)
        .agent("D", 7)
        .agent("H", 5)
        .edge("s", "A")
        .edge("s", "B")
        .edge("B", "C")
        .edge("B", "F")
        .edge("C", "D")
        .edge("D", "H")
        .build()
        .expect("valid construction")
}
