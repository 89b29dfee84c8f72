//! One-shot campaign game: stage utilities, the threshold sets that split
//! each node's equilibrium into cases, the budget-surplus threshold, the
//! closed-form Nash equilibrium and per-node best responses.

use serde::{Deserialize, Serialize};

use crate::dynamics::{jump, ActionVector, InfluencePower, OpinionVector, Player, RhoMode};
use crate::error::{Error, Result};

/// Formula outputs this far below zero are rounding at case edges.
pub const NEGATIVE_ACTION_CLAMP: f64 = 1e-12;

/// Advertising unit costs of the two marketers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Costs {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Costs {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        let c = Costs { lambda1, lambda2 };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Parameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.sum() <= 0.0 {
            return Err(Error::Parameter("lambda1 + lambda2 must be positive".into()));
        }
        Ok(())
    }

    pub fn of(&self, player: Player) -> f64 {
        match player {
            Player::One => self.lambda1,
            Player::Two => self.lambda2,
        }
    }

    pub fn sum(&self) -> f64 {
        self.lambda1 + self.lambda2
    }

    pub fn eta(&self) -> f64 {
        self.lambda2 / self.sum()
    }

    fn require_positive(&self, player: Player, what: &str) -> Result<f64> {
        let l = self.of(player);
        if l > 0.0 {
            Ok(l)
        } else {
            Err(Error::Unsupported(format!(
                "lambda{player} = 0 makes the {what} unbounded"
            )))
        }
    }
}

/// Market split `lambda2 / (lambda1 + lambda2)`.
pub fn eta(lambda1: f64, lambda2: f64) -> Result<f64> {
    Ok(Costs::new(lambda1, lambda2)?.eta())
}

/// One campaign instant `t_k` and the duration `T_k` its payoff covers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub time: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameParameters {
    pub costs: Costs,
    pub budget1: f64,
    pub budget2: f64,
    pub schedule: Vec<Campaign>,
    #[serde(default)]
    pub rho_mode: RhoMode,
}

impl GameParameters {
    pub fn new(
        costs: Costs,
        budget1: f64,
        budget2: f64,
        schedule: Vec<Campaign>,
        rho_mode: RhoMode,
    ) -> Result<Self> {
        let p = GameParameters {
            costs,
            budget1,
            budget2,
            schedule,
            rho_mode,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.costs.validate()?;
        for (name, b) in [("budget1", self.budget1), ("budget2", self.budget2)] {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::Parameter(format!("{name} must be positive, got {b}")));
            }
        }
        validate_schedule(&self.schedule)
    }

    pub fn stages(&self) -> usize {
        self.schedule.len()
    }

    pub fn eta(&self) -> f64 {
        self.costs.eta()
    }

    pub fn budget(&self, player: Player) -> f64 {
        match player {
            Player::One => self.budget1,
            Player::Two => self.budget2,
        }
    }
}

/// `t_k = k * spacing`, `T_k = spacing` for `k = 1..=stages`.
pub fn uniform_schedule(stages: usize, spacing: f64) -> Vec<Campaign> {
    (1..=stages)
        .map(|k| Campaign {
            time: k as f64 * spacing,
            duration: spacing,
        })
        .collect()
}

fn validate_schedule(schedule: &[Campaign]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::Parameter("schedule needs at least one campaign".into()));
    }
    if !(schedule[0].time.is_finite() && schedule[0].time >= 0.0) {
        return Err(Error::Parameter("first campaign must be at a time >= 0".into()));
    }
    for (k, c) in schedule.iter().enumerate() {
        if !(c.duration.is_finite() && c.duration > 0.0) {
            return Err(Error::Parameter(format!(
                "campaign {} duration must be positive, got {}",
                k + 1,
                c.duration
            )));
        }
        if let Some(next) = schedule.get(k + 1) {
            let gap = next.time - c.time;
            if !(gap > 0.0) {
                return Err(Error::Parameter(format!(
                    "campaign times must increase strictly (stage {} -> {})",
                    k + 1,
                    k + 2
                )));
            }
            if c.duration > gap {
                return Err(Error::Parameter(format!(
                    "campaign {} duration {} exceeds the gap {} to the next campaign",
                    k + 1,
                    c.duration,
                    gap
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RegimeTag {
    /// `rho_n <= lambda1 + lambda2`: at most one marketer spends.
    Low,
    /// `rho_n > lambda1 + lambda2`: both spend inside the interior interval.
    High,
}

/// A node's regime and its active open interval: the no-advertising set in
/// the low regime, the interior-equilibrium set in the high regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeRegime {
    pub tag: RegimeTag,
    pub lower: f64,
    pub upper: f64,
}

impl NodeRegime {
    pub fn contains(&self, x: f64) -> bool {
        x > self.lower && x < self.upper
    }
}

pub fn node_regime(rho_n: f64, costs: &Costs) -> Result<NodeRegime> {
    if !(rho_n.is_finite() && rho_n > 0.0) {
        return Err(Error::Parameter(format!("influence power must be positive, got {rho_n}")));
    }
    let s = costs.sum();
    if rho_n <= s {
        Ok(NodeRegime {
            tag: RegimeTag::Low,
            lower: 1.0 - costs.lambda1 / rho_n,
            upper: costs.lambda2 / rho_n,
        })
    } else {
        let eta = costs.eta();
        Ok(NodeRegime {
            tag: RegimeTag::High,
            lower: 1.0 - (1.0 - eta) * rho_n / s,
            upper: eta * rho_n / s,
        })
    }
}

/// Minimal budget above which the budget constraint never binds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetThreshold {
    Finite(f64),
    Unbounded,
}

impl BudgetThreshold {
    pub fn admits(&self, budget: f64) -> bool {
        match *self {
            BudgetThreshold::Finite(t) => budget >= t,
            BudgetThreshold::Unbounded => false,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            BudgetThreshold::Finite(t) => Some(t),
            BudgetThreshold::Unbounded => None,
        }
    }
}

/// `sum_n max{0, sqrt(rho_n / lambda_i) - 1, rho_n / (lambda1 + lambda2) - 1}`.
pub fn budget_threshold_for(player: Player, rho: &InfluencePower, costs: &Costs) -> BudgetThreshold {
    let l = costs.of(player);
    let s = costs.sum();
    if l == 0.0 && rho.values.iter().any(|&r| r > 0.0) {
        return BudgetThreshold::Unbounded;
    }
    BudgetThreshold::Finite(
        rho.values
            .iter()
            .map(|&r| 0f64.max((r / l).sqrt() - 1.0).max(r / s - 1.0))
            .sum(),
    )
}

pub fn budget_threshold(rho: &InfluencePower, costs: &Costs) -> (BudgetThreshold, BudgetThreshold) {
    (
        budget_threshold_for(Player::One, rho, costs),
        budget_threshold_for(Player::Two, rho, costs),
    )
}

fn clamp_action(v: f64, what: &str) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= -NEGATIVE_ACTION_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::Numerical(format!("{what} evaluated to {v:e}")))
    }
}

/// Equilibrium spends `(a1, a2)` on a single node with opinion `x` and
/// influence power `rho_n`. Boundary points of the open intervals take the
/// exterior branch; the branches coincide there.
pub fn node_equilibrium(x: f64, rho_n: f64, costs: &Costs) -> Result<(f64, f64)> {
    let regime = node_regime(rho_n, costs)?;
    let l1 = costs.require_positive(Player::One, "equilibrium spend")?;
    let l2 = costs.require_positive(Player::Two, "equilibrium spend")?;
    let only_two = || clamp_action((rho_n * x / l2).sqrt() - 1.0, "player 2 exterior spend");
    let only_one = || clamp_action((rho_n * (1.0 - x) / l1).sqrt() - 1.0, "player 1 exterior spend");

    if regime.contains(x) {
        return match regime.tag {
            RegimeTag::Low => Ok((0.0, 0.0)),
            RegimeTag::High => {
                let eta = costs.eta();
                let s = costs.sum();
                Ok((
                    clamp_action(rho_n * eta / s - x, "player 1 interior spend")?,
                    clamp_action(rho_n * (1.0 - eta) / s - (1.0 - x), "player 2 interior spend")?,
                ))
            }
        };
    }
    if x >= regime.upper {
        Ok((0.0, only_two()?))
    } else {
        Ok((only_one()?, 0.0))
    }
}

/// Closed-form one-shot Nash equilibrium for the whole network.
///
/// Only the budget-surplus case is solved: if either budget is below its
/// threshold the call fails rather than returning a constrained equilibrium.
pub fn one_shot_ne(
    x: &OpinionVector,
    rho: &InfluencePower,
    params: &GameParameters,
) -> Result<(ActionVector, ActionVector)> {
    if x.len() != rho.len() {
        return Err(Error::Dimension {
            expected: rho.len(),
            actual: x.len(),
        });
    }
    if let Some(r) = rho.values.iter().find(|&&r| !(r > 0.0)) {
        return Err(Error::Parameter(format!("influence power must be positive, got {r}")));
    }
    for player in [Player::One, Player::Two] {
        let budget = params.budget(player);
        match budget_threshold_for(player, rho, &params.costs) {
            BudgetThreshold::Unbounded => {
                return Err(Error::Unsupported(format!(
                    "lambda{player} = 0 gives an unbounded budget threshold"
                )))
            }
            BudgetThreshold::Finite(t) if budget < t => {
                return Err(Error::BudgetBelowThreshold {
                    player: player.index(),
                    budget,
                    threshold: t,
                })
            }
            BudgetThreshold::Finite(_) => {}
        }
    }

    let mut a1 = Vec::with_capacity(x.len());
    let mut a2 = Vec::with_capacity(x.len());
    for (&xn, &rn) in x.as_slice().iter().zip(&rho.values) {
        let (p, q) = node_equilibrium(xn, rn, &params.costs)?;
        a1.push(p);
        a2.push(q);
    }
    let a1 = ActionVector::new(Player::One, a1)?;
    let a2 = ActionVector::new(Player::Two, a2)?;
    for a in [&a1, &a2] {
        let budget = params.budget(a.owner);
        if a.total() > budget * (1.0 + 1e-12) {
            return Err(Error::Numerical(format!(
                "player {} equilibrium spend {} exceeds budget {} despite surplus",
                a.owner,
                a.total(),
                budget
            )));
        }
    }
    Ok((a1, a2))
}

/// Unconstrained per-node best response of `player` to the opponent's spend.
pub fn best_response(
    x: f64,
    rho_n: f64,
    opponent_spend: f64,
    player: Player,
    costs: &Costs,
) -> Result<f64> {
    let l = costs.require_positive(player, "best response")?;
    if !(opponent_spend.is_finite() && opponent_spend >= 0.0) {
        return Err(Error::Parameter(format!(
            "opponent spend must be non-negative, got {opponent_spend}"
        )));
    }
    // Opinion mass the opponent already holds on this node.
    let opponent_base = match player {
        Player::One => 1.0 - x,
        Player::Two => x,
    };
    let raw = (rho_n * (opponent_base + opponent_spend) / l).sqrt() - 1.0 - opponent_spend;
    Ok(raw.max(0.0))
}

/// `u1 = rho^T x+ - lambda1 1^T a1`, `u2 = rho^T (1 - x+) - lambda2 1^T a2`.
pub fn stage_utilities(
    post_state: &OpinionVector,
    a1: &ActionVector,
    a2: &ActionVector,
    rho: &InfluencePower,
    costs: &Costs,
) -> Result<(f64, f64)> {
    for len in [a1.len(), a2.len(), rho.len()] {
        if len != post_state.len() {
            return Err(Error::Dimension {
                expected: post_state.len(),
                actual: len,
            });
        }
    }
    let share: f64 = rho
        .values
        .iter()
        .zip(post_state.as_slice())
        .map(|(r, x)| r * x)
        .sum();
    let rest: f64 = rho
        .values
        .iter()
        .zip(post_state.as_slice())
        .map(|(r, x)| r * (1.0 - x))
        .sum();
    Ok((
        share - costs.lambda1 * a1.total(),
        rest - costs.lambda2 * a2.total(),
    ))
}

/// Result of one campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub a1: ActionVector,
    pub a2: ActionVector,
    pub post_state: OpinionVector,
    pub utilities: (f64, f64),
}

pub fn play_stage(
    pre_state: &OpinionVector,
    a1: ActionVector,
    a2: ActionVector,
    rho: &InfluencePower,
    costs: &Costs,
) -> Result<StageOutcome> {
    let post_state = jump(pre_state, &a1, &a2)?;
    let utilities = stage_utilities(&post_state, &a1, &a2, rho, costs)?;
    Ok(StageOutcome {
        a1,
        a2,
        post_state,
        utilities,
    })
}
