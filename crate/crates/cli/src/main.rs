use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use coopetition_core::experiment::{
    cmd_run, cmd_sweep_k1, cmd_table1, ExperimentConfig, GraphSource, InitialOpinion, Prepared,
};
use coopetition_core::export::{
    write_history_json, write_json, write_stages_csv, write_sweep_csv, write_table1_csv, write_trajectory_csv,
};
use coopetition_core::{EquilibriumRegime, RhoMode, StrategyProfile};

#[derive(Parser)]
#[command(name = "coopetition", version, about = "Duopoly marketing game over a social network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one strategy profile and write trajectory, history and summary.
    Run(Common),
    /// Compare coopetition for a range of K1 against repeated Nash play.
    SweepK1 {
        #[command(flatten)]
        common: Common,
        /// Comma-separated K1 values (default: 0..=K).
        #[arg(long, value_delimiter = ',')]
        k1: Option<Vec<usize>>,
    },
    /// Post-convergence stage utilities for several network sizes.
    Table1 {
        #[command(flatten)]
        common: Common,
        /// Comma-separated node counts (default: 50,100,200).
        #[arg(long, value_delimiter = ',')]
        node_counts: Option<Vec<usize>>,
    },
    /// Check a configuration and print what a run would use.
    Validate(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Paper,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Load the benchmark constants (cascading graph, lambda = (1, 0.5), K = 5, T = 1).
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Cascading benchmark size.
    #[arg(long)]
    nodes: Option<usize>,
    /// Graph file path or `cascading:<N>`.
    #[arg(long)]
    graph: Option<GraphSource>,
    /// repeated-ne | coopetition:<K1> | zero
    #[arg(long)]
    profile: Option<StrategyProfile>,
    /// final | integral
    #[arg(long)]
    rho_mode: Option<RhoMode>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    budget1: Option<f64>,
    #[arg(long)]
    budget2: Option<f64>,
    /// Multiplier on the surplus threshold for default budgets.
    #[arg(long)]
    budget_margin: Option<f64>,
    /// Number of campaigns K.
    #[arg(long)]
    stages: Option<usize>,
    /// Campaign spacing and duration T.
    #[arg(long)]
    campaign_duration: Option<f64>,
    /// Comma-separated initial opinions (default: 0.4 + n / 2N).
    #[arg(long, value_delimiter = ',')]
    initial: Option<Vec<f64>>,
    /// Flow samples per inter-campaign interval in trajectory.csv.
    #[arg(long)]
    samples_per_stage: Option<usize>,
    /// Comma-separated 1-based nodes for trajectory.csv.
    #[arg(long, value_delimiter = ',')]
    plot_nodes: Option<Vec<usize>>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                ExperimentConfig::from_json(&text).with_context(|| format!("parsing config {}", path.display()))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(Preset::Paper) = self.preset {
            let keep = cfg.clone();
            let n = match keep.graph {
                GraphSource::Cascading(n) => n,
                GraphSource::File(_) => 50,
            };
            cfg = ExperimentConfig {
                profile: keep.profile,
                samples_per_stage: keep.samples_per_stage,
                plot_nodes: keep.plot_nodes,
                k1_range: keep.k1_range,
                node_counts: keep.node_counts,
                convergence_horizon: keep.convergence_horizon,
                budget_margin: keep.budget_margin,
                ..ExperimentConfig::preset_paper(n)
            };
        }
        if let Some(n) = self.nodes {
            cfg.graph = GraphSource::Cascading(n);
        }
        if let Some(g) = &self.graph {
            cfg.graph = g.clone();
        }
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = self.$field.clone() { cfg.$field = v; } )* };
        }
        set!(profile, rho_mode, lambda1, lambda2, budget_margin, stages, campaign_duration, samples_per_stage);
        if self.budget1.is_some() {
            cfg.budget1 = self.budget1;
        }
        if self.budget2.is_some() {
            cfg.budget2 = self.budget2;
        }
        if let Some(v) = &self.initial {
            cfg.initial = InitialOpinion::Explicit(v.clone());
        }
        if let Some(v) = &self.plot_nodes {
            cfg.plot_nodes = Some(v.clone());
        }
        if self.stages.is_some() && cfg.campaign_times.as_ref().is_some_and(|t| t.len() != cfg.stages) {
            cfg.campaign_times = None;
        }
        Ok(cfg)
    }

    fn prepare(&self) -> Result<Prepared> {
        let cfg = self.config()?;
        cfg.prepare().context("invalid experiment configuration")
    }
}

fn fmt_stage(s: Option<usize>) -> String {
    s.map(|s| s.to_string()).unwrap_or_else(|| "none".into())
}

fn run(common: &Common) -> Result<()> {
    let prepared = common.prepare()?;
    let report = cmd_run(&prepared)?;
    let out = &common.out;
    info!("writing run outputs to {}", out.display());
    write_trajectory_csv(&out.join("trajectory.csv"), &report.history, &prepared.plot_nodes())?;
    write_stages_csv(&out.join("stages.csv"), &report.history)?;
    write_history_json(&out.join("history.json"), &report.history)?;
    write_json(&out.join("summary.json"), &report.summary)?;

    let s = &report.summary;
    println!("profile            {}", s.profile);
    println!("nodes              {}", s.n_nodes);
    println!("eta                {:.6}", s.eta);
    println!("U1, U2             {:.6}, {:.6}", s.long_term_utilities.0, s.long_term_utilities.1);
    println!("convergence stage  {}", fmt_stage(s.convergence_stage));
    println!("final sup distance {:.3e}", s.final_sup_distance);
    print_prediction(&prepared);
    println!("outputs in         {}", out.display());
    Ok(())
}

fn print_prediction(prepared: &Prepared) {
    match prepared.prediction.regime {
        EquilibriumRegime::UniqueEta { eta } => {
            println!("equilibrium        unique at {eta:.6} (rho_max {:.6})", prepared.prediction.rho_max)
        }
        EquilibriumRegime::Family { lower, upper } => println!(
            "equilibrium        family gamma in ({lower:.6}, {upper:.6}) (rho_max {:.6})",
            prepared.prediction.rho_max
        ),
    }
}

fn sweep(common: &Common, k1: Option<Vec<usize>>) -> Result<()> {
    let prepared = common.prepare()?;
    let k = prepared.params.stages();
    let k1s = match (k1, prepared.config.k1_range) {
        (Some(list), _) => list,
        (None, Some((a, b))) => (a..=b).collect(),
        (None, None) => (0..=k).collect(),
    };
    let rows = cmd_sweep_k1(&prepared, &k1s)?;
    write_sweep_csv(&common.out.join("sweep.csv"), &rows)?;
    println!("{:<16} {:>12} {:>12} {:>12}", "profile", "U1", "U2", "sustainable");
    for r in &rows {
        println!("{:<16} {:>12.6} {:>12.6} {:>12}", r.profile, r.u1, r.u2, r.sustainable);
    }
    Ok(())
}

fn table1(common: &Common, node_counts: Option<Vec<usize>>) -> Result<()> {
    let cfg = common.config()?;
    let counts = node_counts.unwrap_or_else(|| cfg.node_counts.clone());
    let rows = cmd_table1(&cfg, &counts)?;
    write_table1_csv(&common.out.join("table1.csv"), &rows)?;
    let cell = |v: f64| format!("{:.3} ({})", v, v.round());
    println!(
        "{:>6} {:>16} {:>16} {:>16} {:>16} {:>6}",
        "N", "proposed u1", "proposed u2", "ne u1", "ne u2", "stage"
    );
    for r in &rows {
        println!(
            "{:>6} {:>16} {:>16} {:>16} {:>16} {:>6}",
            r.n_nodes,
            cell(r.proposed.0),
            cell(r.proposed.1),
            cell(r.repeated_ne.0),
            cell(r.repeated_ne.1),
            r.convergence_stage
        );
    }
    Ok(())
}

fn validate(common: &Common) -> Result<()> {
    let prepared = common.prepare()?;
    let report = serde_json::json!({
        "graph": prepared.config.graph.to_string(),
        "n_nodes": prepared.n_nodes(),
        "edges": prepared.spec.edges.len(),
        "strongly_connected": prepared.strongly_connected,
        "eta": prepared.eta(),
        "budgets": [prepared.params.budget1, prepared.params.budget2],
        "budget_thresholds": prepared.thresholds,
        "prediction": prepared.prediction,
        "profile": prepared.config.profile.to_string(),
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(common) => run(&common),
        Command::SweepK1 { common, k1 } => sweep(&common, k1),
        Command::Table1 { common, node_counts } => table1(&common, node_counts),
        Command::Validate(common) => validate(&common),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
