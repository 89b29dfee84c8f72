//! Experiment configuration and the drivers behind `run`, `sweep-k1` and
//! `table1`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{influence_power, InfluencePower, OpinionVector, Player, RhoMode};
use crate::error::{Error, Result};
use crate::graph::{build_laplacian, cascading_benchmark, is_strongly_connected, GraphSpec, Laplacian};
use crate::stage_game::{budget_threshold_for, BudgetThreshold, Campaign, Costs, GameParameters};
use crate::strategy::{
    check_sustainability, convergence_stage, long_term_utility, predict_equilibrium, prop1_certificate,
    ConvergenceMetric, EquilibriumPrediction, History, Simulator, StrategyProfile, PRACTICAL_CONVERGENCE,
};

/// Version stamped into every JSON output and documented for the CSVs.
pub const SCHEMA_VERSION: u32 = 1;

/// Where the influence graph comes from: `cascading:<N>` or a JSON file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GraphSource {
    Cascading(usize),
    File(PathBuf),
}

impl FromStr for GraphSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("cascading:") {
            Some(n) => n
                .parse()
                .map(GraphSource::Cascading)
                .map_err(|_| Error::Parameter(format!("bad node count in {s:?}"))),
            None if s.is_empty() => Err(Error::Parameter("empty graph source".into())),
            None => Ok(GraphSource::File(PathBuf::from(s))),
        }
    }
}

impl fmt::Display for GraphSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSource::Cascading(n) => write!(f, "cascading:{n}"),
            GraphSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

impl TryFrom<String> for GraphSource {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GraphSource> for String {
    fn from(g: GraphSource) -> Self {
        g.to_string()
    }
}

impl GraphSource {
    pub fn load(&self) -> Result<GraphSpec> {
        match self {
            GraphSource::Cascading(n) => cascading_benchmark(*n),
            GraphSource::File(path) => GraphSpec::load(path),
        }
    }
}

/// Initial opinions: the benchmark ramp `x_n(0) = 0.4 + n / (2N)` or an
/// explicit vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InitialRepr", into = "InitialRepr")]
pub enum InitialOpinion {
    Ramp,
    Explicit(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum InitialRepr {
    Name(String),
    Values(Vec<f64>),
}

impl TryFrom<InitialRepr> for InitialOpinion {
    type Error = Error;
    fn try_from(r: InitialRepr) -> Result<Self> {
        match r {
            InitialRepr::Name(s) if s == "ramp" => Ok(InitialOpinion::Ramp),
            InitialRepr::Name(s) => Err(Error::Parameter(format!(
                "unknown initial opinion rule {s:?}, expected \"ramp\" or a list"
            ))),
            InitialRepr::Values(v) => Ok(InitialOpinion::Explicit(v)),
        }
    }
}

impl From<InitialOpinion> for InitialRepr {
    fn from(i: InitialOpinion) -> Self {
        match i {
            InitialOpinion::Ramp => InitialRepr::Name("ramp".into()),
            InitialOpinion::Explicit(v) => InitialRepr::Values(v),
        }
    }
}

impl InitialOpinion {
    pub fn build(&self, n: usize) -> Result<OpinionVector> {
        match self {
            InitialOpinion::Ramp => ramp_opinions(n),
            InitialOpinion::Explicit(v) => {
                if v.len() != n {
                    return Err(Error::Dimension {
                        expected: n,
                        actual: v.len(),
                    });
                }
                OpinionVector::new(v.clone())
            }
        }
    }
}

/// `x_n(0) = 0.4 + n / (2N)` for `n = 1..=N`.
pub fn ramp_opinions(n: usize) -> Result<OpinionVector> {
    OpinionVector::new((1..=n).map(|i| 0.4 + i as f64 / (2.0 * n as f64)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Explicit budgets; when absent the surplus threshold times
    /// `budget_margin` is used.
    pub budget1: Option<f64>,
    pub budget2: Option<f64>,
    pub budget_margin: f64,
    pub stages: usize,
    pub campaign_duration: f64,
    /// Campaign instants; defaults to `t_k = k * campaign_duration`.
    pub campaign_times: Option<Vec<f64>>,
    pub rho_mode: RhoMode,
    pub initial: InitialOpinion,
    pub profile: StrategyProfile,
    /// Inclusive K1 range for sweeps; defaults to `0..=stages`.
    pub k1_range: Option<(usize, usize)>,
    pub samples_per_stage: usize,
    /// 1-based nodes written to the trajectory file.
    pub plot_nodes: Option<Vec<usize>>,
    pub node_counts: Vec<usize>,
    /// Stage cap when searching for the practical-convergence stage.
    pub convergence_horizon: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::preset_paper(50)
    }
}

impl ExperimentConfig {
    /// The benchmark setup: cascading graph, lambda = (1, 0.5), ramp initial
    /// opinions, `T_k = 1`, `t_k = k`, `K = 5`, final-opinion influence power.
    pub fn preset_paper(n_nodes: usize) -> Self {
        ExperimentConfig {
            graph: GraphSource::Cascading(n_nodes),
            lambda1: 1.0,
            lambda2: 0.5,
            budget1: None,
            budget2: None,
            budget_margin: 1.1,
            stages: 5,
            campaign_duration: 1.0,
            campaign_times: None,
            rho_mode: RhoMode::Final,
            initial: InitialOpinion::Ramp,
            profile: StrategyProfile::RepeatedNe,
            k1_range: None,
            samples_per_stage: 20,
            plot_nodes: None,
            node_counts: vec![50, 100, 200],
            convergence_horizon: 200,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn schedule(&self) -> Result<Vec<Campaign>> {
        if self.stages == 0 {
            return Err(Error::Parameter("stages must be at least 1".into()));
        }
        match &self.campaign_times {
            None => Ok((1..=self.stages)
                .map(|k| Campaign {
                    time: k as f64 * self.campaign_duration,
                    duration: self.campaign_duration,
                })
                .collect()),
            Some(times) if times.len() == self.stages => Ok(times
                .iter()
                .map(|&time| Campaign {
                    time,
                    duration: self.campaign_duration,
                })
                .collect()),
            Some(times) => Err(Error::Parameter(format!(
                "{} campaign times given for {} stages",
                times.len(),
                self.stages
            ))),
        }
    }

    /// Loads the graph and checks every parameter before anything runs.
    pub fn prepare(&self) -> Result<Prepared> {
        let spec = self.graph.load()?;
        let laplacian = build_laplacian(&spec)?;
        let costs = Costs::new(self.lambda1, self.lambda2)?;
        let schedule = self.schedule()?;
        if !(self.budget_margin.is_finite() && self.budget_margin >= 1.0) {
            return Err(Error::Parameter(format!(
                "budget margin must be >= 1, got {}",
                self.budget_margin
            )));
        }
        let x0 = self.initial.build(spec.n_nodes)?;
        if let StrategyProfile::Coopetition { ne_stages } = self.profile {
            if ne_stages > self.stages {
                return Err(Error::Parameter(format!(
                    "coopetition K1 = {ne_stages} exceeds K = {}",
                    self.stages
                )));
            }
        }
        if let Some(nodes) = &self.plot_nodes {
            if let Some(&bad) = nodes.iter().find(|&&n| n == 0 || n > spec.n_nodes) {
                return Err(Error::Parameter(format!("plot node {bad} outside 1..={}", spec.n_nodes)));
            }
        }

        let mut rho: Vec<InfluencePower> = Vec::with_capacity(schedule.len());
        for c in &schedule {
            match rho.iter().find(|r| r.duration == c.duration) {
                Some(r) => rho.push(r.clone()),
                None => rho.push(influence_power(&laplacian, c.duration, self.rho_mode)?),
            }
        }
        let thresholds = (
            worst_threshold(Player::One, &rho, &costs),
            worst_threshold(Player::Two, &rho, &costs),
        );
        let needs_ne = self.profile != StrategyProfile::Zero;
        let budget1 = resolve_budget(Player::One, self.budget1, thresholds.0, self.budget_margin, needs_ne)?;
        let budget2 = resolve_budget(Player::Two, self.budget2, thresholds.1, self.budget_margin, needs_ne)?;
        info!(
            "budget thresholds {:?} / {:?}, margin {}, budgets {} / {}",
            thresholds.0, thresholds.1, self.budget_margin, budget1, budget2
        );
        let params = GameParameters::new(costs, budget1, budget2, schedule, self.rho_mode)?;
        let strongly_connected = is_strongly_connected(&spec)?;
        let prediction = predict_equilibrium(&rho, &costs)?;
        Ok(Prepared {
            config: self.clone(),
            spec,
            laplacian,
            params,
            x0,
            rho,
            thresholds,
            strongly_connected,
            prediction,
        })
    }
}

fn worst_threshold(player: Player, rho: &[InfluencePower], costs: &Costs) -> BudgetThreshold {
    rho.iter()
        .map(|r| budget_threshold_for(player, r, costs))
        .fold(BudgetThreshold::Finite(0.0), |acc, t| match (acc, t) {
            (BudgetThreshold::Finite(a), BudgetThreshold::Finite(b)) => BudgetThreshold::Finite(a.max(b)),
            _ => BudgetThreshold::Unbounded,
        })
}

/// Budget used when the surplus threshold is exactly zero.
const FALLBACK_BUDGET: f64 = 1.0;

fn resolve_budget(
    player: Player,
    explicit: Option<f64>,
    threshold: BudgetThreshold,
    margin: f64,
    needs_surplus: bool,
) -> Result<f64> {
    match (explicit, threshold) {
        (Some(b), BudgetThreshold::Finite(t)) if needs_surplus && b < t => Err(Error::BudgetBelowThreshold {
            player: player.index(),
            budget: b,
            threshold: t,
        }),
        (Some(_), BudgetThreshold::Unbounded) if needs_surplus => Err(Error::Unsupported(format!(
            "lambda{player} = 0: the budget surplus threshold is unbounded"
        ))),
        (Some(b), _) => Ok(b),
        (None, BudgetThreshold::Finite(t)) if t > 0.0 => Ok(t * margin),
        (None, BudgetThreshold::Finite(_)) => Ok(FALLBACK_BUDGET),
        (None, BudgetThreshold::Unbounded) if needs_surplus => Err(Error::Unsupported(format!(
            "lambda{player} = 0: the budget surplus threshold is unbounded"
        ))),
        (None, BudgetThreshold::Unbounded) => Ok(FALLBACK_BUDGET),
    }
}

/// A validated experiment ready to run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub spec: GraphSpec,
    pub laplacian: Laplacian,
    pub params: GameParameters,
    pub x0: OpinionVector,
    pub rho: Vec<InfluencePower>,
    pub thresholds: (BudgetThreshold, BudgetThreshold),
    pub strongly_connected: bool,
    pub prediction: EquilibriumPrediction,
}

impl Prepared {
    pub fn n_nodes(&self) -> usize {
        self.spec.n_nodes
    }

    pub fn eta(&self) -> f64 {
        self.params.eta()
    }

    /// Nodes written to the trajectory file: configured, or `{1, ceil(0.3 N), N}`.
    pub fn plot_nodes(&self) -> Vec<usize> {
        if let Some(nodes) = &self.config.plot_nodes {
            return nodes.clone();
        }
        let n = self.n_nodes();
        let mut nodes = vec![1, ((0.3 * n as f64).ceil() as usize).max(1), n];
        nodes.dedup();
        nodes
    }

    pub fn run(&self, profile: StrategyProfile, samples_per_stage: usize) -> Result<History> {
        let mut sim = Simulator::new(&self.laplacian, &self.params)?;
        sim.run(&self.x0, &profile, &profile.to_string(), samples_per_stage)
    }

    /// Same setup with the schedule extended to `stages` campaigns by
    /// repeating the last spacing.
    pub fn with_stages(&self, stages: usize) -> Result<Prepared> {
        let mut out = self.clone();
        out.params.schedule = extend_schedule(&self.params.schedule, stages);
        out.params.validate()?;
        out.rho = (0..stages)
            .map(|k| self.rho[k.min(self.rho.len() - 1)].clone())
            .collect();
        Ok(out)
    }
}

fn extend_schedule(schedule: &[Campaign], stages: usize) -> Vec<Campaign> {
    let mut out: Vec<Campaign> = schedule.iter().take(stages).cloned().collect();
    let last = *schedule.last().expect("validated schedule is non-empty");
    let spacing = if schedule.len() >= 2 {
        last.time - schedule[schedule.len() - 2].time
    } else {
        last.duration
    };
    while out.len() < stages {
        let prev = *out.last().expect("non-empty");
        out.push(Campaign {
            time: prev.time + spacing,
            duration: last.duration,
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// First stage with RMS deviation from `eta` below the practical tolerance.
    pub rms_stage: Option<usize>,
    /// First stage with sup-norm deviation below the practical tolerance.
    pub sup_stage: Option<usize>,
    pub tolerance: f64,
}

impl ConvergenceReport {
    pub fn of(history: &History, eta: f64) -> Self {
        ConvergenceReport {
            rms_stage: convergence_stage(history, eta, ConvergenceMetric::Rms, PRACTICAL_CONVERGENCE),
            sup_stage: convergence_stage(history, eta, ConvergenceMetric::SupNorm, PRACTICAL_CONVERGENCE),
            tolerance: PRACTICAL_CONVERGENCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub graph: String,
    pub n_nodes: usize,
    pub strongly_connected: bool,
    pub profile: String,
    pub stages: usize,
    pub rho_mode: RhoMode,
    pub lambda1: f64,
    pub lambda2: f64,
    pub eta: f64,
    pub budgets: (f64, f64),
    pub budget_thresholds: (BudgetThreshold, BudgetThreshold),
    pub budget_margin: f64,
    pub prediction: EquilibriumPrediction,
    pub long_term_utilities: (f64, f64),
    pub final_sup_distance: f64,
    /// Convergence within this run's schedule.
    pub convergence: ConvergenceReport,
    /// Convergence of repeated Nash play over an extended schedule; this is
    /// the stage count a run needs to converge.
    pub convergence_stage: Option<usize>,
    pub convergence_probe: ConvergenceReport,
}

pub struct RunReport {
    pub history: History,
    pub summary: RunSummary,
}

pub fn cmd_run(prepared: &Prepared) -> Result<RunReport> {
    let cfg = &prepared.config;
    let history = prepared.run(cfg.profile, cfg.samples_per_stage)?;
    let eta = prepared.eta();
    let probe = convergence_probe(prepared)?;
    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        graph: cfg.graph.to_string(),
        n_nodes: prepared.n_nodes(),
        strongly_connected: prepared.strongly_connected,
        profile: cfg.profile.to_string(),
        stages: prepared.params.stages(),
        rho_mode: prepared.params.rho_mode,
        lambda1: prepared.params.costs.lambda1,
        lambda2: prepared.params.costs.lambda2,
        eta,
        budgets: (prepared.params.budget1, prepared.params.budget2),
        budget_thresholds: prepared.thresholds,
        budget_margin: cfg.budget_margin,
        prediction: prepared.prediction,
        long_term_utilities: long_term_utility(&history)?,
        final_sup_distance: history
            .records
            .last()
            .map(|r| r.post_state.sup_distance(eta))
            .unwrap_or(f64::NAN),
        convergence: ConvergenceReport::of(&history, eta),
        convergence_stage: probe.rms_stage,
        convergence_probe: probe,
    };
    Ok(RunReport { history, summary })
}

fn convergence_probe(prepared: &Prepared) -> Result<ConvergenceReport> {
    let horizon = prepared.config.convergence_horizon.max(prepared.params.stages());
    let extended = prepared.with_stages(horizon)?;
    let history = extended.run(StrategyProfile::RepeatedNe, 0)?;
    Ok(ConvergenceReport::of(&history, prepared.eta()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub profile: String,
    pub k1: Option<usize>,
    pub u1: f64,
    pub u2: f64,
    pub player1_improves: bool,
    pub player2_improves: bool,
    pub sustainable: bool,
    /// Sufficient-condition certificate; absent for the baseline, for
    /// `K1 = K`, and outside the unique-equilibrium regime.
    pub certificate: Option<bool>,
}

/// Long-term utilities of coopetition for every K1 in `k1s` against the
/// repeated-Nash baseline (first row).
pub fn cmd_sweep_k1(prepared: &Prepared, k1s: &[usize]) -> Result<Vec<SweepRow>> {
    let k = prepared.params.stages();
    if let Some(&bad) = k1s.iter().find(|&&k1| k1 > k) {
        return Err(Error::Parameter(format!("K1 = {bad} exceeds K = {k}")));
    }
    let baseline = prepared.run(StrategyProfile::RepeatedNe, 0)?;
    let (b1, b2) = long_term_utility(&baseline)?;
    let mut rows = vec![SweepRow {
        profile: StrategyProfile::RepeatedNe.to_string(),
        k1: None,
        u1: b1,
        u2: b2,
        player1_improves: true,
        player2_improves: true,
        sustainable: true,
        certificate: None,
    }];
    let results: Vec<Result<SweepRow>> = k1s
        .par_iter()
        .map(|&k1| {
            let profile = StrategyProfile::Coopetition { ne_stages: k1 };
            let history = prepared.run(profile, 0)?;
            let s = check_sustainability(&history, &baseline)?;
            let certificate = if k1 < k {
                match prop1_certificate(&baseline, k1, None, &prepared.rho, &prepared.params) {
                    Ok(c) => Some(c.passed),
                    Err(Error::InapplicableRegime(_)) => None,
                    Err(e) => return Err(e),
                }
            } else {
                None
            };
            Ok(SweepRow {
                profile: profile.to_string(),
                k1: Some(k1),
                u1: s.coopetition.0,
                u2: s.coopetition.1,
                player1_improves: s.player1,
                player2_improves: s.player2,
                sustainable: s.sustainable,
                certificate,
            })
        })
        .collect();
    for r in results {
        rows.push(r?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub n_nodes: usize,
    /// First stage with RMS deviation from `eta` below the practical tolerance.
    pub convergence_stage: usize,
    /// Same criterion measured in the sup norm, for reference.
    pub sup_norm_stage: Option<usize>,
    /// Stage utilities at the convergence stage when advertising stops there.
    pub proposed: (f64, f64),
    /// Stage utilities at the convergence stage under repeated Nash play.
    pub repeated_ne: (f64, f64),
}

impl Table1Row {
    pub fn rounded(&self) -> [i64; 4] {
        [
            self.proposed.0.round() as i64,
            self.proposed.1.round() as i64,
            self.repeated_ne.0.round() as i64,
            self.repeated_ne.1.round() as i64,
        ]
    }
}

/// Post-convergence stage utilities of both strategies for each network size.
pub fn cmd_table1(template: &ExperimentConfig, node_counts: &[usize]) -> Result<Vec<Table1Row>> {
    node_counts
        .par_iter()
        .map(|&n| {
            let mut cfg = template.clone();
            cfg.graph = GraphSource::Cascading(n);
            cfg.initial = InitialOpinion::Ramp;
            cfg.plot_nodes = None;
            cfg.profile = StrategyProfile::RepeatedNe;
            table1_row(&cfg.prepare()?)
        })
        .collect()
}

fn table1_row(prepared: &Prepared) -> Result<Table1Row> {
    let eta = prepared.eta();
    let horizon = prepared.config.convergence_horizon.max(1);
    let probe = prepared.with_stages(horizon)?;
    let ne = probe.run(StrategyProfile::RepeatedNe, 0)?;
    let report = ConvergenceReport::of(&ne, eta);
    let kc = report.rms_stage.ok_or_else(|| {
        Error::Numerical(format!(
            "N = {}: no practical convergence within {horizon} stages",
            prepared.n_nodes()
        ))
    })?;
    let truncated = prepared.with_stages(kc)?;
    let cs = truncated.run(StrategyProfile::Coopetition { ne_stages: kc - 1 }, 0)?;
    let ne_record = &ne.records[kc - 1];
    let cs_record = &cs.records[kc - 1];
    Ok(Table1Row {
        n_nodes: prepared.n_nodes(),
        convergence_stage: kc,
        sup_norm_stage: report.sup_stage,
        proposed: (cs_record.u1, cs_record.u2),
        repeated_ne: (ne_record.u1, ne_record.u2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_source_parsing() {
        assert_eq!("cascading:50".parse::<GraphSource>().unwrap(), GraphSource::Cascading(50));
        assert_eq!(
            "graphs/a.json".parse::<GraphSource>().unwrap(),
            GraphSource::File("graphs/a.json".into())
        );
        assert!("cascading:x".parse::<GraphSource>().is_err());
    }

    #[test]
    fn cascading_seven_is_rejected() {
        let mut cfg = ExperimentConfig::preset_paper(50);
        cfg.graph = GraphSource::Cascading(7);
        assert!(matches!(cfg.prepare(), Err(Error::Parameter(_))));
    }

    #[test]
    fn preset_constants() {
        let cfg = ExperimentConfig::preset_paper(50);
        let p = cfg.prepare().unwrap();
        assert_eq!((p.params.costs.lambda1, p.params.costs.lambda2), (1.0, 0.5));
        assert_eq!(p.params.stages(), 5);
        for (k, c) in p.params.schedule.iter().enumerate() {
            assert_eq!((c.time, c.duration), ((k + 1) as f64, 1.0));
        }
        assert_eq!(p.x0.as_slice()[0], 0.4 + 1.0 / 100.0);
        assert_eq!(p.x0.as_slice()[49], 0.9);
        assert_eq!(p.params.rho_mode, RhoMode::Final);
        assert_eq!(p.plot_nodes(), vec![1, 15, 50]);
        let t1 = p.thresholds.0.value().unwrap();
        assert!((p.params.budget1 - 1.1 * t1).abs() < 1e-12);
    }

    #[test]
    fn config_json_overrides() {
        let cfg = ExperimentConfig::from_json(
            r#"{"graph": "cascading:10", "profile": "coopetition:2", "initial": "ramp", "lambda2": 0.25}"#,
        )
        .unwrap();
        assert_eq!(cfg.graph, GraphSource::Cascading(10));
        assert_eq!(cfg.profile, StrategyProfile::Coopetition { ne_stages: 2 });
        assert_eq!(cfg.lambda1, 1.0);
        assert_eq!(cfg.lambda2, 0.25);
        assert!(ExperimentConfig::from_json(r#"{"grpah": "cascading:10"}"#).is_err());
        let explicit = ExperimentConfig::from_json(r#"{"graph": "cascading:5", "initial": [0.1, 0.2, 0.3, 0.4, 0.5]}"#).unwrap();
        assert_eq!(explicit.initial, InitialOpinion::Explicit(vec![0.1, 0.2, 0.3, 0.4, 0.5]));
        let round = serde_json::to_string(&explicit).unwrap();
        assert_eq!(ExperimentConfig::from_json(&round).unwrap(), explicit);
    }

    #[test]
    fn explicit_budget_below_threshold_is_reported() {
        let mut cfg = ExperimentConfig::preset_paper(50);
        cfg.budget1 = Some(0.5);
        let err = cfg.prepare().unwrap_err();
        assert!(matches!(err, Error::BudgetBelowThreshold { player: 1, .. }));
        assert!(err.to_string().contains("threshold"));
        cfg.profile = StrategyProfile::Zero;
        assert!(cfg.prepare().is_ok());
    }

    #[test]
    fn degenerate_sweeps() {
        let mut cfg = ExperimentConfig::preset_paper(10);
        cfg.stages = 1;
        let p = cfg.prepare().unwrap();
        let rows = cmd_sweep_k1(&p, &[0, 1]).unwrap();
        assert_eq!(rows.len(), 3);
        // K1 = K is the baseline itself.
        assert_eq!((rows[2].u1, rows[2].u2), (rows[0].u1, rows[0].u2));
        assert!(rows[2].sustainable);
        assert!(cmd_sweep_k1(&p, &[2]).is_err());
    }

    #[test]
    fn schedule_extension_repeats_spacing() {
        let s = vec![
            Campaign { time: 0.5, duration: 1.0 },
            Campaign { time: 2.0, duration: 1.0 },
        ];
        let e = extend_schedule(&s, 4);
        let times: Vec<f64> = e.iter().map(|c| c.time).collect();
        assert_eq!(times, vec![0.5, 2.0, 3.5, 5.0]);
        assert_eq!(extend_schedule(&s, 1).len(), 1);
    }
}
