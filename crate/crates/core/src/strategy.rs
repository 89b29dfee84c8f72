//! Multi-stage play over the hybrid dynamics: strategy profiles, recorded
//! histories, long-term utilities, equilibrium prediction for repeated
//! Nash play, and the sustainability checks for the coopetition plan.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{influence_power, ActionVector, InfluencePower, OpinionVector, Player, Propagator};
use crate::error::{Error, Result};
use crate::graph::Laplacian;
use crate::stage_game::{one_shot_ne, play_stage, Costs, GameParameters};

/// A strategy profile for both marketers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StrategyProfile {
    /// One-shot equilibrium actions at every stage.
    RepeatedNe,
    /// Equilibrium actions for the first `ne_stages` stages, nothing after.
    Coopetition { ne_stages: usize },
    /// No advertising at all.
    Zero,
}

impl fmt::Display for StrategyProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyProfile::RepeatedNe => write!(f, "repeated-ne"),
            StrategyProfile::Coopetition { ne_stages } => write!(f, "coopetition:{ne_stages}"),
            StrategyProfile::Zero => write!(f, "zero"),
        }
    }
}

impl TryFrom<String> for StrategyProfile {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<StrategyProfile> for String {
    fn from(p: StrategyProfile) -> Self {
        p.to_string()
    }
}

impl FromStr for StrategyProfile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "repeated-ne" => Ok(StrategyProfile::RepeatedNe),
            "zero" => Ok(StrategyProfile::Zero),
            _ => {
                let k1 = s
                    .strip_prefix("coopetition:")
                    .and_then(|k| k.parse::<usize>().ok())
                    .ok_or_else(|| {
                        Error::Parameter(format!(
                            "unknown profile {s:?}, expected repeated-ne, coopetition:<K1> or zero"
                        ))
                    })?;
                Ok(StrategyProfile::Coopetition { ne_stages: k1 })
            }
        }
    }
}

/// What a strategy sees when choosing stage `stage`'s actions. Monitoring is
/// perfect, so the full record of earlier stages is available.
pub struct StageContext<'a> {
    /// 1-based stage index.
    pub stage: usize,
    pub state: &'a OpinionVector,
    pub rho: &'a InfluencePower,
    pub params: &'a GameParameters,
    pub history: &'a [StageRecord],
}

pub trait Strategy {
    fn actions(&self, ctx: &StageContext<'_>) -> Result<(ActionVector, ActionVector)>;
}

impl Strategy for StrategyProfile {
    fn actions(&self, ctx: &StageContext<'_>) -> Result<(ActionVector, ActionVector)> {
        let play_ne = match *self {
            StrategyProfile::RepeatedNe => true,
            StrategyProfile::Coopetition { ne_stages } => ctx.stage <= ne_stages,
            StrategyProfile::Zero => false,
        };
        if play_ne {
            one_shot_ne(ctx.state, ctx.rho, ctx.params)
        } else {
            let n = ctx.state.len();
            Ok((ActionVector::zeros(Player::One, n), ActionVector::zeros(Player::Two, n)))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    pub time: f64,
    pub pre_state: OpinionVector,
    pub a1: ActionVector,
    pub a2: ActionVector,
    pub post_state: OpinionVector,
    pub u1: f64,
    pub u2: f64,
}

/// Opinions at one sampled instant of the continuous flow. `stage` is the
/// campaign the interval follows (0 before the first campaign).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub stage: usize,
    pub time: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub profile: String,
    pub initial: OpinionVector,
    pub params: GameParameters,
    pub rho: Vec<InfluencePower>,
    pub records: Vec<StageRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trajectory: Vec<TrajectorySample>,
}

impl History {
    pub fn is_complete(&self) -> bool {
        self.records.len() == self.params.stages()
    }

    fn require_complete(&self) -> Result<()> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(Error::IncompleteHistory {
                recorded: self.records.len(),
                expected: self.params.stages(),
            })
        }
    }
}

/// Reusable simulation context: per-stage influence power and the flow
/// propagators between campaigns for one graph and parameter set.
pub struct Simulator<'a> {
    laplacian: &'a Laplacian,
    params: &'a GameParameters,
    rho: Vec<InfluencePower>,
    propagators: HashMap<u64, Propagator>,
}

impl<'a> Simulator<'a> {
    pub fn new(laplacian: &'a Laplacian, params: &'a GameParameters) -> Result<Self> {
        params.validate()?;
        let mut by_duration: HashMap<u64, InfluencePower> = HashMap::new();
        let mut rho = Vec::with_capacity(params.stages());
        for c in &params.schedule {
            let key = c.duration.to_bits();
            if let std::collections::hash_map::Entry::Vacant(e) = by_duration.entry(key) {
                e.insert(influence_power(laplacian, c.duration, params.rho_mode)?);
            }
            rho.push(by_duration[&key].clone());
        }
        Ok(Simulator {
            laplacian,
            params,
            rho,
            propagators: HashMap::new(),
        })
    }

    pub fn rho(&self) -> &[InfluencePower] {
        &self.rho
    }

    fn propagator(&mut self, duration: f64) -> Result<&Propagator> {
        let key = duration.to_bits();
        if !self.propagators.contains_key(&key) {
            self.propagators
                .insert(key, Propagator::new(self.laplacian, duration)?);
        }
        Ok(&self.propagators[&key])
    }

    /// Plays every campaign of the schedule. The initial state is taken at
    /// time 0 and flows to the first campaign instant. With
    /// `samples_per_stage > 0` each flow interval is also sampled at that many
    /// evenly spaced steps (both endpoints included).
    pub fn run(
        &mut self,
        x0: &OpinionVector,
        profile: &dyn Strategy,
        label: &str,
        samples_per_stage: usize,
    ) -> Result<History> {
        if x0.len() != self.laplacian.n_nodes() {
            return Err(Error::Dimension {
                expected: self.laplacian.n_nodes(),
                actual: x0.len(),
            });
        }
        let params = self.params;
        let schedule = &params.schedule;
        let mut records: Vec<StageRecord> = Vec::with_capacity(schedule.len());
        let mut trajectory = Vec::new();

        let first = schedule[0].time;
        if samples_per_stage > 0 {
            self.sample(&mut trajectory, x0, 0, 0.0, first, samples_per_stage)?;
        }
        let mut state = self.propagator(first)?.apply(x0)?;

        for (k, campaign) in schedule.iter().enumerate() {
            let stage = k + 1;
            let rho = &self.rho[k];
            let ctx = StageContext {
                stage,
                state: &state,
                rho,
                params,
                history: &records,
            };
            let (a1, a2) = profile.actions(&ctx)?;
            for a in [&a1, &a2] {
                if a.total() > params.budget(a.owner) * (1.0 + 1e-12) {
                    return Err(Error::Parameter(format!(
                        "stage {stage}: player {} spends {} over budget {}",
                        a.owner,
                        a.total(),
                        params.budget(a.owner)
                    )));
                }
            }
            let outcome = play_stage(&state, a1, a2, rho, &params.costs)?;
            let next_time = schedule
                .get(k + 1)
                .map(|c| c.time)
                .unwrap_or(campaign.time + campaign.duration);
            if samples_per_stage > 0 {
                self.sample(
                    &mut trajectory,
                    &outcome.post_state,
                    stage,
                    campaign.time,
                    next_time,
                    samples_per_stage,
                )?;
            }
            let next_state = if k + 1 < schedule.len() {
                Some(self.propagator(next_time - campaign.time)?.apply(&outcome.post_state)?)
            } else {
                None
            };
            records.push(StageRecord {
                stage,
                time: campaign.time,
                pre_state: state.clone(),
                a1: outcome.a1,
                a2: outcome.a2,
                post_state: outcome.post_state,
                u1: outcome.utilities.0,
                u2: outcome.utilities.1,
            });
            if let Some(next) = next_state {
                state = next;
            }
        }

        Ok(History {
            profile: label.to_string(),
            initial: x0.clone(),
            params: params.clone(),
            rho: self.rho.clone(),
            records,
            trajectory,
        })
    }

    fn sample(
        &mut self,
        out: &mut Vec<TrajectorySample>,
        start: &OpinionVector,
        stage: usize,
        from: f64,
        to: f64,
        steps: usize,
    ) -> Result<()> {
        let h = (to - from) / steps as f64;
        let step = self.propagator(h)?.clone();
        let mut x = start.clone();
        for j in 0..=steps {
            if j > 0 {
                x = step.apply(&x)?;
            }
            out.push(TrajectorySample {
                stage,
                time: from + j as f64 * h,
                values: x.as_slice().to_vec(),
            });
        }
        Ok(())
    }
}

/// Runs `profile` over the full schedule without trajectory sampling.
pub fn run_profile(
    x0: &OpinionVector,
    laplacian: &Laplacian,
    params: &GameParameters,
    profile: StrategyProfile,
) -> Result<History> {
    Simulator::new(laplacian, params)?.run(x0, &profile, &profile.to_string(), 0)
}

/// Average of the recorded stage utilities.
pub fn long_term_utility(history: &History) -> Result<(f64, f64)> {
    history.require_complete()?;
    let k = history.records.len() as f64;
    let (s1, s2) = history
        .records
        .iter()
        .fold((0.0, 0.0), |(a, b), r| (a + r.u1, b + r.u2));
    Ok((s1 / k, s2 / k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE", tag = "regime")]
pub enum EquilibriumRegime {
    /// `eta * 1` is the unique network equilibrium.
    UniqueEta { eta: f64 },
    /// Every `gamma * 1` with `gamma` in `(lower, upper)` is an equilibrium.
    Family { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPrediction {
    /// Minimum over stages of the largest per-node influence power.
    pub rho_max: f64,
    #[serde(flatten)]
    pub regime: EquilibriumRegime,
}

pub fn rho_max(rho_per_stage: &[InfluencePower]) -> Result<f64> {
    if rho_per_stage.is_empty() {
        return Err(Error::Parameter("need influence power for at least one stage".into()));
    }
    Ok(rho_per_stage
        .iter()
        .map(InfluencePower::max)
        .fold(f64::INFINITY, f64::min))
}

pub fn predict_equilibrium(rho_per_stage: &[InfluencePower], costs: &Costs) -> Result<EquilibriumPrediction> {
    let rho_max = rho_max(rho_per_stage)?;
    let s = costs.sum();
    let regime = if rho_max > s {
        EquilibriumRegime::UniqueEta { eta: costs.eta() }
    } else {
        EquilibriumRegime::Family {
            lower: 1.0 - costs.lambda1 / rho_max,
            upper: costs.lambda2 / rho_max,
        }
    };
    Ok(EquilibriumPrediction { rho_max, regime })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sustainability {
    pub coopetition: (f64, f64),
    pub repeated_ne: (f64, f64),
    pub player1: bool,
    pub player2: bool,
    pub sustainable: bool,
}

/// Pareto comparison of a coopetition history against repeated Nash play
/// from the same starting point.
pub fn check_sustainability(history_cs: &History, history_ne: &History) -> Result<Sustainability> {
    ensure_comparable(history_cs, history_ne)?;
    let cs = long_term_utility(history_cs)?;
    let ne = long_term_utility(history_ne)?;
    let player1 = cs.0 >= ne.0;
    let player2 = cs.1 >= ne.1;
    Ok(Sustainability {
        coopetition: cs,
        repeated_ne: ne,
        player1,
        player2,
        sustainable: player1 && player2,
    })
}

fn ensure_comparable(a: &History, b: &History) -> Result<()> {
    if a.initial != b.initial {
        return Err(Error::Mismatch("initial states differ".into()));
    }
    if a.params != b.params {
        return Err(Error::Mismatch("game parameters differ".into()));
    }
    if a.rho != b.rho {
        return Err(Error::Mismatch("influence power differs (different graph?)".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageBound {
    pub stage: usize,
    pub player1_bound: f64,
    pub player2_bound: f64,
    pub passed: bool,
}

/// Evaluation of the sufficient δ-conditions for sustainability of the
/// coopetition plan that stops advertising after `k1` stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop1Certificate {
    pub k1: usize,
    pub delta: f64,
    pub rho_max: f64,
    /// `max_n |x_n(t_{k1+1}) - eta| <= delta`.
    pub band: ConditionCheck,
    /// `delta < min(eta, 1 - eta) (rho_max / (lambda1 + lambda2) - 1)`.
    pub delta_bound: ConditionCheck,
    /// Per remaining stage, `delta` against both players' bounds.
    pub stage_bounds: Vec<StageBound>,
    pub passed: bool,
}

/// `delta` defaults to the measured `max_n |x_n(t_{k1+1}) - eta|`.
pub fn prop1_certificate(
    history: &History,
    k1: usize,
    delta: Option<f64>,
    rho_per_stage: &[InfluencePower],
    params: &GameParameters,
) -> Result<Prop1Certificate> {
    history.require_complete()?;
    let k = params.stages();
    if k1 >= k {
        return Err(Error::Parameter(format!("K1 = {k1} must be below K = {k}")));
    }
    if rho_per_stage.len() != k {
        return Err(Error::Dimension {
            expected: k,
            actual: rho_per_stage.len(),
        });
    }
    let costs = &params.costs;
    let s = costs.sum();
    let rho_max = rho_max(rho_per_stage)?;
    if rho_max <= s {
        return Err(Error::InapplicableRegime(format!(
            "rho_max = {rho_max} does not exceed lambda1 + lambda2 = {s}"
        )));
    }
    let eta = costs.eta();
    let deviation = history.records[k1].pre_state.sup_distance(eta);
    let delta = delta.unwrap_or(deviation);
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::Parameter(format!("delta must lie in [0, 1), got {delta}")));
    }

    let band = ConditionCheck {
        value: deviation,
        bound: delta,
        passed: deviation <= delta,
    };
    let gap_bound = eta.min(1.0 - eta) * (rho_max / s - 1.0);
    let delta_bound = ConditionCheck {
        value: delta,
        bound: gap_bound,
        passed: delta < gap_bound,
    };
    let stage_bounds: Vec<StageBound> = (k1 + 1..=k)
        .map(|stage| {
            let mass = rho_per_stage[stage - 1].total();
            let bound = |l: f64| {
                l * rho_max * l / (2.0 * mass * s * s) / (1.0 + l / (2.0 * mass))
            };
            let (b1, b2) = (bound(costs.lambda1), bound(costs.lambda2));
            StageBound {
                stage,
                player1_bound: b1,
                player2_bound: b2,
                passed: delta <= b1 && delta <= b2,
            }
        })
        .collect();
    let passed = band.passed && delta_bound.passed && stage_bounds.iter().all(|b| b.passed);
    Ok(Prop1Certificate {
        k1,
        delta,
        rho_max,
        band,
        delta_bound,
        stage_bounds,
        passed,
    })
}

/// `max_n |x_n(t_k) - target|` for every recorded stage.
pub fn contraction_trace(history: &History, target: f64) -> Vec<f64> {
    history
        .records
        .iter()
        .map(|r| r.pre_state.sup_distance(target))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceMetric {
    /// `max_n |x_n - eta|`.
    SupNorm,
    /// `sqrt(mean_n (x_n - eta)^2)`.
    Rms,
}

/// Deviation below which the state counts as practically converged.
pub const PRACTICAL_CONVERGENCE: f64 = 0.01;

/// First stage whose pre-campaign state is within `tolerance` of `target * 1`.
pub fn convergence_stage(
    history: &History,
    target: f64,
    metric: ConvergenceMetric,
    tolerance: f64,
) -> Option<usize> {
    history
        .records
        .iter()
        .find(|r| {
            let d = match metric {
                ConvergenceMetric::SupNorm => r.pre_state.sup_distance(target),
                ConvergenceMetric::Rms => r.pre_state.rms_distance(target),
            };
            d < tolerance
        })
        .map(|r| r.stage)
}

/// Stage-sum utility gap between the coopetition and repeated-Nash runs,
/// built two ways: from the long-term utilities and from the per-stage
/// decomposition over the stages after `k1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityGap {
    pub direct: (f64, f64),
    pub decomposed: (f64, f64),
}

pub fn utility_gap(history_cs: &History, history_ne: &History, k1: usize) -> Result<UtilityGap> {
    ensure_comparable(history_cs, history_ne)?;
    let (c1, c2) = long_term_utility(history_cs)?;
    let (n1, n2) = long_term_utility(history_ne)?;
    let k = history_ne.records.len() as f64;
    let costs = &history_ne.params.costs;
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for (cs, ne) in history_cs.records.iter().zip(&history_ne.records).skip(k1) {
        if !(cs.a1.is_zero() && cs.a2.is_zero()) {
            return Err(Error::Mismatch(format!(
                "coopetition history advertises at stage {} after K1 = {k1}",
                cs.stage
            )));
        }
        let rho = &history_ne.rho[ne.stage - 1].values;
        let shift: f64 = rho
            .iter()
            .zip(cs.pre_state.as_slice().iter().zip(ne.post_state.as_slice()))
            .map(|(r, (a, b))| r * (a - b))
            .sum();
        d1 += shift + costs.lambda1 * ne.a1.total();
        d2 += -shift + costs.lambda2 * ne.a2.total();
    }
    Ok(UtilityGap {
        direct: (k * (c1 - n1), k * (c2 - n2)),
        decomposed: (d1, d2),
    })
}
