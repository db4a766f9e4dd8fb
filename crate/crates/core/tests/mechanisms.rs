use std::sync::Arc;

use netauction::allocation::{greedy_sqrt_k, DnaMu, DnaMuR, Efficient, GreedySqrtK, Nsa};
use netauction::bids::Extended;
use netauction::fixtures::{fig2_reports, fixture};
use netauction::mechanism::*;
use netauction::payments::{IdMonRm, MonotonicityClass};
use netauction::random::{optimal_bundle_welfare, optimal_unit_welfare, participants, single_minded, unit_demand, RandomConfig};
use netauction::{AgentId, Amount, Mode, Outcome, ReportProfile, Scenario, ScenarioBuilder};

fn a(n: i64) -> Amount {
    Amount::from(n)
}

fn names(s: &Scenario, ids: &[AgentId]) -> Vec<String> {
    ids.iter().map(|&x| s.name(x).to_string()).collect()
}

fn sorted(mut v: Vec<String>) -> Vec<String> {
    v.sort();
    v
}

fn pay(s: &Scenario, o: &Outcome, n: &str) -> Amount {
    o.payment(s.id(n).unwrap()).clone()
}

/// A trace row as printed: capacity, winners so far, and the examined agent
/// with its allocation and payment (`None` on the closing row).
type Row = (u32, Vec<&'static str>, Option<(&'static str, bool, i64)>);

fn assert_trace(s: &Scenario, o: &Outcome, expected: &[Row]) {
    let got = o.trace(s);
    assert_eq!(got.len(), expected.len(), "row count");
    for (g, (cap, w, entry)) in got.iter().zip(expected) {
        assert_eq!(g.remaining, *cap);
        assert_eq!(names(s, &g.winners_before), *w);
        match entry {
            Some((agent, won, p)) => {
                assert_eq!(g.agent.map(|x| s.name(x)), Some(*agent));
                assert_eq!(g.won, *won);
                assert_eq!(g.payment, a(*p));
            }
            None => assert_eq!(g.agent, None),
        }
    }
}

#[test]
fn dna_mu_fig1_trace() {
    let s = fixture("fig1");
    let o = run_dna_mu(&s, &s.truthful()).unwrap();
    assert_trace(
        &s,
        &o,
        &[
            (3, vec![], Some(("A", false, 0))),
            (3, vec![], Some(("B", true, 0))),
            (2, vec!["B"], Some(("F", true, 5))),
            (1, vec!["B", "F"], Some(("C", true, 4))),
            (0, vec!["B", "F", "C"], None),
        ],
    );
}

#[test]
fn dna_mu_fig2_trace() {
    let s = fixture("fig1");
    let o = run_dna_mu(&s, &fig2_reports(&s)).unwrap();
    assert_trace(
        &s,
        &o,
        &[
            (3, vec![], Some(("A", true, 4))),
            (2, vec!["A"], Some(("B", true, 0))),
            (1, vec!["A", "B"], Some(("F", false, 0))),
            (1, vec!["A", "B"], Some(("C", false, 0))),
            (1, vec!["A", "B"], Some(("D", true, 6))),
            (0, vec!["A", "B", "D"], None),
        ],
    );
}

#[test]
fn dna_mu_r_fig1_trace() {
    let s = fixture("fig1");
    let o = run_dna_mu_r(&s, &s.truthful()).unwrap();
    assert_trace(
        &s,
        &o,
        &[
            (3, vec![], Some(("A", false, 0))),
            (3, vec![], Some(("B", true, 0))),
            (2, vec!["B"], Some(("F", true, 4))),
            (1, vec!["B", "F"], Some(("C", true, 1))),
            (0, vec!["B", "F", "C"], None),
        ],
    );
}

#[test]
fn dna_mu_r_fig2_trace() {
    let s = fixture("fig1");
    let r = fig2_reports(&s);
    let o = run_dna_mu_r(&s, &r).unwrap();
    assert_trace(
        &s,
        &o,
        &[
            (3, vec![], Some(("A", true, 4))),
            (2, vec!["A"], Some(("B", true, 0))),
            (1, vec!["A", "B"], Some(("F", true, 4))),
            (0, vec!["A", "B", "F"], None),
        ],
    );
    assert_eq!(o.utility(&s, s.id("D").unwrap()), Amount::zero());
}

#[test]
fn empty_market_sells_nothing() {
    let s = fixture("empty");
    for id in ["dna-mu", "dna-mu-r", "vcg", "vcg-rm"] {
        let o = Mechanism::named(id).run(&s, &s.truthful()).unwrap();
        assert!(o.winners.is_empty());
        assert_eq!(o.revenue, Amount::zero());
    }
}

fn payments_of(s: &Scenario, o: &Outcome) -> Vec<(String, Amount)> {
    s.agents().map(|x| (s.name(x).to_string(), o.payment(x).clone())).collect()
}

fn expect_payments(s: &Scenario, o: &Outcome, exp: &[(&str, i64)]) {
    let want: Vec<(String, Amount)> = exp.iter().map(|(n, p)| (n.to_string(), a(*p))).collect();
    let mut got = payments_of(s, o);
    got.sort();
    let mut want = want;
    want.sort();
    assert_eq!(got, want);
}

#[test]
fn fig8_comparison_rows() {
    let s = fixture("fig8");
    let r = s.truthful();
    let vcg = run_vcg(&s, &r).unwrap();
    assert_eq!(sorted(names(&s, &vcg.winners)), ["D", "E", "I"]);
    assert_eq!((vcg.social_welfare.clone(), vcg.revenue.clone()), (a(109), a(-203)));
    expect_payments(&s, &vcg, &[("A", 0), ("B", -104), ("C", -103), ("D", -2), ("E", 3), ("H", 0), ("I", 3)]);

    let rm = run_vcg_rm(&s, &r).unwrap();
    assert_eq!(sorted(names(&s, &rm.winners)), ["D", "E", "I"]);
    assert_eq!((rm.social_welfare.clone(), rm.revenue.clone()), (a(109), a(1)));
    expect_payments(&s, &rm, &[("A", 0), ("B", -4), ("C", -3), ("D", 2), ("E", 3), ("H", 0), ("I", 3)]);

    let dr = run_dna_mu_r(&s, &r).unwrap();
    assert_eq!(sorted(names(&s, &dr.winners)), ["B", "C", "D"]);
    assert_eq!((dr.social_welfare.clone(), dr.revenue.clone()), (a(103), a(4)));
    expect_payments(&s, &dr, &[("A", 0), ("B", 0), ("C", 1), ("D", 3), ("E", 0), ("H", 0), ("I", 0)]);
}

#[test]
fn vcg_small_cases() {
    let s = ScenarioBuilder::units(1).agent("x", 4).edge("s", "x").build().unwrap();
    let o = run_vcg(&s, &s.truthful()).unwrap();
    assert!(o.won(s.id("x").unwrap()));
    assert_eq!(o.revenue, Amount::zero());

    let s = ScenarioBuilder::units(1).agent("p", 5).agent("q", 3).edge("s", "p").edge("s", "q").build().unwrap();
    let o = run_vcg(&s, &s.truthful()).unwrap();
    assert_eq!(names(&s, &o.winners), ["p"]);
    // externality of p: q would have won 3
    assert_eq!(pay(&s, &o, "p"), a(3));
    assert_eq!(pay(&s, &o, "q"), a(0));
}

#[test]
fn vcg_rm_without_scarcity_charges_nothing() {
    let s = ScenarioBuilder::units(5)
        .agent("a", 3)
        .agent("b", 7)
        .agent("c", 2)
        .edge("s", "a")
        .edge("a", "b")
        .edge("b", "c")
        .build()
        .unwrap();
    let o = run_vcg_rm(&s, &s.truthful()).unwrap();
    assert_eq!(o.winners.len(), 3);
    assert!(o.payments.iter().all(|p| p.is_zero()));
}

#[test]
fn vcg_rm_on_fig1_takes_the_top_three() {
    let s = fixture("fig1");
    let o = run_vcg_rm(&s, &s.truthful()).unwrap();
    assert_eq!(sorted(names(&s, &o.winners)), ["D", "F", "H"]);
    // winners pay the 3rd highest bid outside their subtree, losers the
    // difference to the 3rd highest overall
    let m = netauction::build_effective_market(&s, &s.truthful()).unwrap();
    for x in s.agents() {
        let t = m.subtree(x).unwrap();
        let mut outside: Vec<Amount> = s.agents().filter(|y| !t.contains(y)).map(|y| s.true_bid(y).clone()).collect();
        outside.sort_by(|p, q| q.cmp(p));
        let third_out = outside.get(2).cloned().unwrap_or_default();
        let expected = if o.won(x) { third_out } else { &third_out - &a(5) };
        assert_eq!(o.payment(x), &expected, "{}", s.name(x));
    }
}

fn entries(s: &Scenario, keep: &[&str]) -> Vec<(AgentId, Amount, u64)> {
    let m = netauction::build_effective_market(s, &s.truthful()).unwrap();
    m.order()
        .iter()
        .filter(|&&x| keep.contains(&s.name(x)))
        .map(|&x| (x, s.true_bid(x).clone(), s.bundle(x).unwrap()))
        .collect()
}

#[test]
fn greedy_on_fig10() {
    let s = fixture("fig10");
    let all = greedy_sqrt_k(&entries(&s, &["A", "B", "C", "D"]), &[]);
    assert!(all.contains(&s.id("A").unwrap()) && all.contains(&s.id("D").unwrap()));
    let abc = greedy_sqrt_k(&entries(&s, &["A", "B", "C"]), &[]);
    assert_eq!(sorted(names(&s, &abc)), ["B", "C"]);
    let one = greedy_sqrt_k(&entries(&s, &["B"]), &[]);
    assert_eq!(names(&s, &one), ["B"]);
}

#[test]
fn net_sqrt_k_apm_on_fig10() {
    let s = fixture("fig10");
    let o = run_net_sqrt_k_apm(&s, &s.truthful()).unwrap();
    assert_eq!(sorted(names(&s, &o.winners)), ["A", "D"]);
}

#[test]
fn net_sqrt_k_apm_on_one_shared_item() {
    let s = fixture("shared-bundle");
    let o = run_net_sqrt_k_apm(&s, &s.truthful()).unwrap();
    assert_eq!(names(&s, &o.winners), ["B"]);
    assert!(o.revenue.is_negative());
}

#[test]
fn disjoint_bundles_all_win() {
    let s = ScenarioBuilder::items(&["x", "y", "z"])
        .bundled("p", 1, &["x"])
        .bundled("q", 2, &["y"])
        .bundled("r", 3, &["z"])
        .edge("s", "p")
        .edge("p", "q")
        .edge("q", "r")
        .build()
        .unwrap();
    let o = run_net_sqrt_k_apm(&s, &s.truthful()).unwrap();
    assert_eq!(o.winners.len(), 3);
    let w = alloc_exploratory_ii(&s, &s.truthful(), 3).unwrap();
    assert_eq!(w.len(), 3);
}

#[test]
fn nsa_on_fig11() {
    // D (score 4) blocks every agent outside its subtree except E, and E is
    // blocked by D ranking first.
    let s = fixture("fig11");
    let o = run_nsa(&s, &s.truthful()).unwrap();
    assert_eq!(names(&s, &o.winners), ["D"]);
    assert_eq!(pay(&s, &o, "D"), a(4));
}

#[test]
fn nsa_sole_participant_pays_nothing() {
    let s = ScenarioBuilder::items(&["x"]).bundled("p", 3, &["x"]).edge("s", "p").build().unwrap();
    let o = run_nsa(&s, &s.truthful()).unwrap();
    assert_eq!(names(&s, &o.winners), ["p"]);
    assert_eq!(pay(&s, &o, "p"), a(0));
}

#[test]
fn nsa_equal_scores_go_to_the_earlier_agent() {
    // Ties are strict: only the higher-priority agent clears the gate.
    let s = ScenarioBuilder::items(&["x", "y"])
        .bundled("p", 3, &["x"])
        .bundled("q", 3, &["y"])
        .edge("s", "p")
        .edge("s", "q")
        .build()
        .unwrap();
    let o = run_nsa(&s, &s.truthful()).unwrap();
    assert_eq!(names(&s, &o.winners), ["p"]);
}

#[test]
fn exploratory_one_on_fig10() {
    let s = fixture("fig10");
    let b = s.id("B").unwrap();
    let (c, d) = (s.id("C").unwrap(), s.id("D").unwrap());
    let with = |inv: Vec<AgentId>| alloc_exploratory_i(&s, &s.truthful().with_invites(b, inv)).unwrap().contains(&b);
    // Toggling only the invitation of D, with C invited either way: B wins
    // without D and loses with it.
    assert!(with(vec![c]));
    assert!(!with(vec![c, d]));
    // Dropping C as well puts C inside A's subtree, so A wins and blocks B.
    assert!(!with(vec![d]));
    assert!(!with(vec![]));
    assert!(alloc_exploratory_i(&fixture("shared-bundle"), &ReportProfile { bids: vec![a(1), a(2)], invites: vec![vec![], vec![]] })
        .unwrap()
        .len()
        == 1);
}

#[test]
fn exploratory_one_on_an_empty_market() {
    let s = ScenarioBuilder::items(&["x"]).bundled("p", 3, &["x"]).build().unwrap();
    assert!(alloc_exploratory_i(&s, &s.truthful()).unwrap().is_empty());
}

#[test]
fn exploratory_two_on_fig11() {
    let s = fixture("fig11");
    let b = s.id("B").unwrap();
    let e = s.id("E").unwrap();
    let wins = |inv: Vec<AgentId>| alloc_exploratory_ii(&s, &s.truthful().with_invites(b, inv), 2).unwrap().contains(&b);
    assert!(wins(vec![e]));
    assert!(!wins(vec![]));
    // replay over (A, B, C, D, E): at most one strictly better score outside
    // each agent's subtree admits B, C and D
    let w = alloc_exploratory_ii(&s, &s.truthful(), 2).unwrap();
    assert_eq!(names(&s, &w), ["B", "C", "D"]);
}

#[test]
fn id_mon_rm_payment_reproduces_vcg_rm() {
    let s = fixture("fig8");
    let r = s.truthful();
    let dec = id_mon_rm_payment(Arc::new(Efficient), &s, &r).unwrap();
    let o = run_vcg_rm(&s, &r).unwrap();
    for x in s.agents() {
        assert_eq!(dec.charged(x, o.won(x)), &Extended::Finite(o.payment(x).clone()));
    }
}

#[test]
fn id_mon_rm_payment_of_a_loser_on_fig1() {
    let s = fixture("fig1");
    let r = s.truthful();
    let c = s.id("C").unwrap();
    let dec = id_mon_rm_payment(Arc::new(Efficient), &s, &r).unwrap();
    // v^3(N \ T_C) over {A, B, F} is 1, v^3(N) is 5
    assert_eq!(dec.losing[c.index()], Extended::Finite(a(1 - 5)));
    let solo = ScenarioBuilder::units(1).agent("x", 2).edge("s", "x").build().unwrap();
    let dec = id_mon_rm_payment(Arc::new(Efficient), &solo, &solo.truthful()).unwrap();
    assert_eq!(dec.winning[0], Extended::Finite(a(0)));
    assert_eq!(dec.losing[0], Extended::Finite(a(0)));
}

#[test]
fn ip_mon_rm_payment_examples() {
    let s = fixture("fig1");
    let dec = ip_mon_rm_payment(Arc::new(DnaMuR), &s, &s.truthful()).unwrap();
    assert_eq!(dec.winning[s.id("F").unwrap().index()], Extended::Finite(a(4)));
    assert_eq!(dec.winning[s.id("C").unwrap().index()], Extended::Finite(a(1)));
    assert!(dec.losing.iter().all(|p| p == &Extended::Finite(a(0))));
    let s = fixture("fig8");
    let dec = ip_mon_rm_payment(Arc::new(DnaMuR), &s, &s.truthful()).unwrap();
    assert_eq!(dec.winning[s.id("D").unwrap().index()], Extended::Finite(a(3)));
}

#[test]
fn polynomial_family_collapses_to_the_revenue_maximizing_rules() {
    let (zero, one) = (Amount::zero(), Amount::one());
    for name in ["fig8", "fig1"] {
        let s = fixture(name);
        let r = s.truthful();
        let id_rm = id_mon_rm_payment(Arc::new(Efficient), &s, &r).unwrap();
        let poly = polynomial_payment_family(Arc::new(Efficient), &s, &r, zero.clone(), zero.clone(), one.clone(), MonotonicityClass::Depressed).unwrap();
        assert_eq!(id_rm, poly);
        let ip_rm = ip_mon_rm_payment(Arc::new(DnaMuR), &s, &r).unwrap();
        let poly = polynomial_payment_family(Arc::new(DnaMuR), &s, &r, one.clone(), zero.clone(), zero.clone(), MonotonicityClass::Promoted).unwrap();
        assert_eq!(ip_rm.winning, poly.winning);
    }
    for name in ["fig10", "fig11"] {
        let s = fixture(name);
        let r = s.truthful();
        let a1 = ip_mon_rm_payment(Arc::new(Nsa), &s, &r).unwrap();
        let a2 = polynomial_payment_family(Arc::new(Nsa), &s, &r, one.clone(), zero.clone(), zero.clone(), MonotonicityClass::Promoted).unwrap();
        assert_eq!(a1.winning, a2.winning);
        let b1 = id_mon_rm_payment(Arc::new(GreedySqrtK), &s, &r).unwrap();
        let b2 = polynomial_payment_family(Arc::new(GreedySqrtK), &s, &r, zero.clone(), zero.clone(), one.clone(), MonotonicityClass::Depressed).unwrap();
        assert_eq!(b1, b2);
    }
}

#[test]
fn polynomial_quadratic_winning_payment() {
    let s = fixture("fig1");
    let dec = polynomial_payment_family(Arc::new(DnaMuR), &s, &s.truthful(), a(1), a(1), a(0), MonotonicityClass::Promoted).unwrap();
    let f = s.id("F").unwrap();
    assert_eq!(dec.winning[f.index()], Extended::Finite(a(4 + 16)));
    assert_eq!(dec.losing[f.index()], Extended::Finite(a(20 - 4)));
}

#[test]
fn mode_mismatch_is_reported() {
    let s = fixture("fig1");
    assert!(matches!(run_nsa(&s, &s.truthful()), Err(MechanismError::ModeMismatch { .. })));
    let s = fixture("fig10");
    assert!(matches!(run_vcg(&s, &s.truthful()), Err(MechanismError::ModeMismatch { .. })));
    assert!(alloc_exploratory_i(&fixture("fig1"), &fixture("fig1").truthful()).is_err());
}

#[test]
fn unbounded_payment_is_an_error() {
    // Under DNA-MU, D can never win while inviting H, so a losing payment of
    // v*(∅) - v*(r_D) has no finite value.
    let s = fixture("fig1");
    let m = Mechanism::new("dna-mu-with-id-rm", Arc::new(DnaMu), Arc::new(IdMonRm));
    match m.run(&s, &s.truthful()) {
        Err(MechanismError::UnboundedPayment { agent, value }) => {
            assert_eq!(agent, "D");
            assert_eq!(value, Extended::NegInfinite);
        }
        other => panic!("expected an unbounded payment, got {other:?}"),
    }
    assert!(m.run(&s, &fig2_reports(&s)).is_ok());
}

fn random_cases() -> impl Iterator<Item = Scenario> {
    let cfg = RandomConfig::default();
    (0..300u64).flat_map(move |seed| [unit_demand(seed, &cfg), single_minded(seed, &cfg)])
}

#[test]
fn outcomes_are_feasible_and_consistent() {
    for s in random_cases() {
        let single = s.units().is_none();
        let r = s.truthful();
        let part = participants(&s);
        for id in MECHANISM_IDS {
            let m = Mechanism::named(id);
            if (m.mode() == Mode::SingleMinded) != single {
                continue;
            }
            let o = m.run(&s, &r).unwrap();
            if let Some(k) = s.units() {
                assert!(o.winners.len() <= k as usize);
            } else {
                let mut used = 0u64;
                for &w in &o.winners {
                    let b = s.bundle(w).unwrap();
                    assert_eq!(used & b, 0, "{id}: overlapping bundles");
                    used |= b;
                }
            }
            for x in s.agents() {
                if !part.contains(&x) {
                    assert!(!o.won(x) && o.payment(x).is_zero());
                }
            }
            let sw: Amount = o.winners.iter().map(|&w| s.true_bid(w)).sum();
            assert_eq!(sw, o.social_welfare);
            let rev: Amount = o.payments.iter().sum();
            assert_eq!(rev, o.revenue);
            let dec = m.decomposition(&s, &r).unwrap();
            for x in s.agents() {
                assert_eq!(dec.charged(x, o.won(x)), &Extended::Finite(o.payment(x).clone()));
            }
            if matches!(id, "dna-mu-r" | "nsa") {
                assert!(!o.revenue.is_negative(), "{id}");
                for x in s.agents().filter(|&x| !o.won(x)) {
                    assert!(o.payment(x).is_zero());
                }
            }
        }
    }
}

#[test]
fn efficient_mechanisms_maximize_welfare() {
    let cfg = RandomConfig {
        max_agents: 10,
        ..RandomConfig::default()
    };
    for seed in 0..300u64 {
        let s = unit_demand(seed, &cfg);
        let best = optimal_unit_welfare(&s);
        for o in [run_vcg(&s, &s.truthful()).unwrap(), run_vcg_rm(&s, &s.truthful()).unwrap()] {
            assert_eq!(o.social_welfare, best, "seed {seed}");
        }
    }
}

#[test]
fn greedy_is_within_sqrt_m_of_optimal() {
    let cfg = RandomConfig {
        max_agents: 10,
        ..RandomConfig::default()
    };
    for seed in 0..300u64 {
        let s = single_minded(seed, &cfg);
        let best = optimal_bundle_welfare(&s);
        let o = run_net_sqrt_k_apm(&s, &s.truthful()).unwrap();
        // SW >= OPT / sqrt(m)  <=>  SW^2 * m >= OPT^2
        let m = s.items().len() as i64;
        assert!(&o.social_welfare.square() * &a(m) >= best.square(), "seed {seed}");
    }
}
