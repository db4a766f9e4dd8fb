//! Payment rules, expressed through the winning/losing decomposition
//! `p_i = f_i * winning_i + (1 - f_i) * losing_i`.

use std::fmt;

use crate::allocation::Allocation;
use crate::amount::Amount;
use crate::bids::{kth_highest, CriticalBidOracle, Extended};
use crate::market::{AgentId, EffectiveMarket, ReportProfile, Scenario};

/// Everything a payment rule may consult for one run.
pub struct PaymentContext<'a, 'o> {
    pub scenario: &'a Scenario,
    pub reports: &'a ReportProfile,
    pub market: &'a EffectiveMarket,
    pub allocation: &'a Allocation,
    pub oracle: &'a mut CriticalBidOracle<'o>,
}

impl PaymentContext<'_, '_> {
    pub fn won(&self, i: AgentId) -> bool {
        self.market.node(i).is_some_and(|v| self.allocation.won[v])
    }

    /// `v*(r_i)` under the reported invitations.
    pub fn critical_reported(&mut self, i: AgentId) -> Extended {
        self.oracle.in_market(i, &self.reports.invites[i.index()], self.market).value()
    }

    /// `v*(∅)`.
    pub fn critical_alone(&mut self, i: AgentId) -> Extended {
        self.oracle.with_invites(i, &[]).value()
    }

    fn bid(&self, v: usize) -> &Amount {
        &self.reports.bids[self.market.agent(v).index()]
    }

    fn units(&self) -> usize {
        self.scenario.units().expect("unit-demand payment on a bundle scenario") as usize
    }
}

/// A payment scheme. Only participants are ever charged.
pub trait PaymentRule: Send + Sync + fmt::Debug {
    fn id(&self) -> String;

    /// Payment if `i` wins.
    fn winning(&self, ctx: &mut PaymentContext<'_, '_>, i: AgentId) -> Extended;

    /// Payment if `i` loses.
    fn losing(&self, ctx: &mut PaymentContext<'_, '_>, i: AgentId) -> Extended;
}

/// Winners pay the price the allocation rule fixed when it selected them.
#[derive(Clone, Copy, Debug, Default)]
pub struct SelectionThreshold;

impl PaymentRule for SelectionThreshold {
    fn id(&self) -> String {
        "selection-threshold".into()
    }

    fn winning(&self, ctx: &mut PaymentContext<'_, '_>, i: AgentId) -> Extended {
        let v = ctx.market.node(i).expect("winner is a participant");
        match ctx.allocation.prices.get(v).cloned().flatten() {
            Some(p) => Extended::Finite(p),
            None => Extended::Infinite,
        }
    }

    fn losing(&self, _: &mut PaymentContext<'_, '_>, _: AgentId) -> Extended {
        Extended::Finite(Amount::zero())
    }
}

/// Sum of the `k` highest bids among participants not dominated by `skip`.
fn best_welfare(ctx: &PaymentContext<'_, '_>, skip: Option<usize>) -> Amount {
    let idt = ctx.market.idt();
    let mut bids: Vec<&Amount> = (0..ctx.market.len())
        .filter(|&u| skip.is_none_or(|v| !idt.dominates(v, u)))
        .map(|u| ctx.bid(u))
        .collect();
    bids.sort_by(|a, b| b.cmp(a));
    bids.into_iter().take(ctx.units()).sum()
}

/// Network VCG: `p_i = SW(N \ T_i) - (SW(N) - f_i v_i)`, where removing `i`
/// also removes everyone only `i` could have brought in.
#[derive(Clone, Copy, Debug, Default)]
pub struct NetworkVcg;

impl NetworkVcg {
    fn pay(ctx: &mut PaymentContext<'_, '_>, i: AgentId, won: bool) -> Extended {
        let v = ctx.market.node(i).expect("participant");
        let without = best_welfare(ctx, Some(v));
        let mut others = best_welfare(ctx, None);
        if won {
            others = &others - ctx.bid(v);
        }
        Extended::Finite(&without - &others)
    }
}

impl PaymentRule for NetworkVcg {
    fn id(&self) -> String {
        "network-vcg".into()
    }

    fn winning(&self, ctx: &mut PaymentContext<'_, '_>, i: AgentId) -> Extended {
        Self::pay(ctx, i, true)
    }

    fn losing(&self, ctx: &mut PaymentContext<'_, '_>, i: AgentId) -> Extended {
        Self::pay(ctx, i, false)
    }
}

/// Closed form of the revenue-maximizing payment for the efficient rule:
/// winners pay `v^k(N \ T_i)`, losers receive `v^k(N \ T_i) - v^k(N)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct VcgRm;

impl VcgRm {
    fn kth_without(ctx: &PaymentContext<'_, '_>, i: AgentId) -> Amount {
        let v = ctx.market.node(i).expect("participant");
        let idt = ctx.market.idt();
        kth_highest(
            (0..ctx.market.len()).filter(|&u| !idt.dominates(v, u)).map(|u| ctx.bid(u)),
            ctx.units(),
        )
    }
}

impl PaymentRule for VcgRm {
    fn id(&self) -> String {
        "vcg-rm".into()
    }

    fn winning(&self, ctx: &mut PaymentContext<'_, '_>, i: AgentId) -> Extended {
        Extended::Finite(Self::kth_without(ctx, i))
    }

    fn losing(&self, ctx: &mut PaymentContext<'_, '_>, i: AgentId) -> Extended {
        let all = kth_highest((0..ctx.market.len()).map(|u| ctx.bid(u)), ctx.units());
        Extended::Finite(&Self::kth_without(ctx, i) - &all)
    }
}

/// Revenue-maximizing payment for rules where invitations can only hurt:
/// winners pay `v*(∅)`, losers pay `v*(∅) - v*(r_i)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdMonRm;

impl PaymentRule for IdMonRm {
    fn id(&self) -> String {
        "id-mon-rm".into()
    }

    fn winning(&self, ctx: &mut PaymentContext<'_, '_>, i: AgentId) -> Extended {
        ctx.critical_alone(i)
    }

    fn losing(&self, ctx: &mut PaymentContext<'_, '_>, i: AgentId) -> Extended {
        let alone = ctx.critical_alone(i);
        alone.sub(&ctx.critical_reported(i))
    }
}

/// Revenue-maximizing payment for rules where invitations can only help:
/// winners pay `v*(r_i)`, losers pay nothing.
#[derive(Clone, Copy, Debug, Default)]
pub struct IpMonRm;

impl PaymentRule for IpMonRm {
    fn id(&self) -> String {
        "ip-mon-rm".into()
    }

    fn winning(&self, ctx: &mut PaymentContext<'_, '_>, i: AgentId) -> Extended {
        ctx.critical_reported(i)
    }

    fn losing(&self, _: &mut PaymentContext<'_, '_>, _: AgentId) -> Extended {
        Extended::Finite(Amount::zero())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MonotonicityClass {
    /// Invitations can only hurt the inviter.
    Depressed,
    /// Invitations can only help the inviter.
    Promoted,
}

/// Polynomial payments in the critical bid. With `c = v*(r_i)` and
/// `h = gamma * v*(∅)`, the winning payment is `h - alpha c - beta c^2` for
/// the depressed class and `h + alpha c + beta c^2` for the promoted class;
/// the losing payment is always the winning payment minus `c`.
#[derive(Clone, Debug)]
pub struct Polynomial {
    pub alpha: Amount,
    pub beta: Amount,
    pub gamma: Amount,
    pub class: MonotonicityClass,
}

impl Polynomial {
    fn winning_parts(&self, ctx: &mut PaymentContext<'_, '_>, i: AgentId) -> (Extended, Extended) {
        let c = ctx.critical_reported(i);
        let mut total = Amount::zero();
        if !self.alpha.is_zero() || !self.beta.is_zero() {
            let Some(cv) = c.finite() else {
                let unbounded = match self.class {
                    MonotonicityClass::Depressed => Extended::NegInfinite,
                    MonotonicityClass::Promoted => Extended::Infinite,
                };
                return (unbounded, c);
            };
            let poly = &(&self.alpha * cv) + &(&self.beta * &cv.square());
            total = match self.class {
                MonotonicityClass::Depressed => -poly,
                MonotonicityClass::Promoted => poly,
            };
        }
        if !self.gamma.is_zero() {
            match ctx.critical_alone(i) {
                Extended::Finite(h) => total = &total + &(&self.gamma * &h),
                other => return (other, c),
            }
        }
        (Extended::Finite(total), c)
    }
}

impl PaymentRule for Polynomial {
    fn id(&self) -> String {
        let class = match self.class {
            MonotonicityClass::Depressed => "id",
            MonotonicityClass::Promoted => "ip",
        };
        format!("polynomial-{class}({},{},{})", self.alpha, self.beta, self.gamma)
    }

    fn winning(&self, ctx: &mut PaymentContext<'_, '_>, i: AgentId) -> Extended {
        self.winning_parts(ctx, i).0
    }

    fn losing(&self, ctx: &mut PaymentContext<'_, '_>, i: AgentId) -> Extended {
        let (w, c) = self.winning_parts(ctx, i);
        w.sub(&c)
    }
}

/// Winning and losing payments for every agent (indexed by agent);
/// non-participants get zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PaymentDecomposition {
    pub winning: Vec<Extended>,
    pub losing: Vec<Extended>,
}

impl PaymentDecomposition {
    /// `f_i * winning + (1 - f_i) * losing`.
    pub fn charged(&self, i: AgentId, won: bool) -> &Extended {
        if won {
            &self.winning[i.index()]
        } else {
            &self.losing[i.index()]
        }
    }
}

pub fn decompose(rule: &dyn PaymentRule, ctx: &mut PaymentContext<'_, '_>) -> PaymentDecomposition {
    let n = ctx.scenario.len();
    let zero = Extended::Finite(Amount::zero());
    let mut out = PaymentDecomposition {
        winning: vec![zero.clone(); n],
        losing: vec![zero; n],
    };
    for &a in ctx.market.order() {
        out.winning[a.index()] = rule.winning(ctx, a);
        out.losing[a.index()] = rule.losing(ctx, a);
    }
    out
}
