//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::time::{Duration, Instant};

use coopetition_core::experiment::{cmd_sweep_k1, cmd_table1, ExperimentConfig, InitialOpinion, Prepared};
use coopetition_core::{
    check_sustainability, contraction_trace, jump, node_equilibrium, node_regime, one_shot_ne, predict_equilibrium,
    prop1_certificate, run_profile, ActionVector, Costs, EquilibriumRegime, GameParameters, InfluencePower,
    OpinionVector, Player, Propagator, RegimeTag, RhoMode, StrategyProfile,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn benchmark(n: usize) -> Prepared {
    ExperimentConfig::preset_paper(n).prepare().expect("preset prepares")
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    if elapsed <= Duration::from_secs(limit_s) {
        Ok(())
    } else {
        Err(format!("took {:.1}s, limit {limit_s}s", elapsed.as_secs_f64()))
    }
}

fn consensus() -> Outcome {
    let start = Instant::now();
    let prepared = benchmark(50);
    let eta = prepared.eta();
    let short = prepared.run(StrategyProfile::RepeatedNe, 0).map_err(|e| e.to_string())?;
    let long = prepared
        .with_stages(40)
        .and_then(|p| p.run(StrategyProfile::RepeatedNe, 0))
        .map_err(|e| e.to_string())?;
    within(start.elapsed(), 5)?;
    let worst = short
        .records
        .iter()
        .chain(&long.records)
        .filter(|r| r.stage >= 5)
        .map(|r| r.pre_state.sup_distance(eta))
        .fold(0.0, f64::max);
    let at5 = short.records[4].pre_state.sup_distance(eta);
    if worst < 0.01 {
        Ok(format!("sup |x(t_k) - eta| = {at5:.4} at k=5, max over k>=5 (to k=40) {worst:.4}"))
    } else {
        Err(format!("max deviation for k>=5 is {worst:.4}"))
    }
}

fn table1() -> Outcome {
    let start = Instant::now();
    let rows = cmd_table1(&ExperimentConfig::default(), &[50, 100, 200]).map_err(|e| e.to_string())?;
    within(start.elapsed(), 60)?;
    let expected: [(usize, [i64; 4], usize); 3] = [
        (50, [17, 34, 13, 30], 5),
        (100, [33, 66, 28, 61], 6),
        (200, [67, 132, 58, 124], 6),
    ];
    let mut cells = Vec::new();
    let mut bad = Vec::new();
    for (row, (n, want, stage)) in rows.iter().zip(expected) {
        let got = row.rounded();
        cells.push(format!("N={n} {:?} stage {}", got, row.convergence_stage));
        if row.n_nodes != n || row.convergence_stage != stage {
            bad.push(format!("N={n}: stage {} != {stage}", row.convergence_stage));
        }
        for (g, w) in got.iter().zip(want) {
            if (g - w).abs() > 1 {
                bad.push(format!("N={n}: {g} vs {w}"));
            }
        }
    }
    if bad.is_empty() {
        Ok(cells.join("; "))
    } else {
        Err(bad.join("; "))
    }
}

fn pareto() -> Outcome {
    let start = Instant::now();
    let rows = cmd_sweep_k1(&benchmark(50), &[1, 2, 3, 4]).map_err(|e| e.to_string())?;
    within(start.elapsed(), 30)?;
    let (b1, b2) = (rows[0].u1, rows[0].u2);
    let failing: Vec<_> = rows[1..]
        .iter()
        .filter(|r| !(r.u1 > b1 && r.u2 > b2))
        .map(|r| r.profile.clone())
        .collect();
    if failing.is_empty() {
        let detail: Vec<_> = rows[1..]
            .iter()
            .map(|r| format!("K1={} ({:.2}, {:.2})", r.k1.unwrap(), r.u1, r.u2))
            .collect();
        Ok(format!("NE ({b1:.2}, {b2:.2}) < {}", detail.join(", ")))
    } else {
        Err(format!("not dominating: {}", failing.join(", ")))
    }
}

/// Single-node stage utility written out directly from the payoff definition.
fn node_utility(player: Player, x: f64, rho: f64, a1: f64, a2: f64, costs: &Costs) -> f64 {
    let post = (x + a1) / (1.0 + a1 + a2);
    match player {
        Player::One => rho * post - costs.lambda1 * a1,
        Player::Two => rho * (1.0 - post) - costs.lambda2 * a2,
    }
}

fn ne_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut regimes = [0usize; 2];
    for i in 0..200 {
        let costs = Costs::new(rng.gen_range(0.1..3.0), rng.gen_range(0.1..3.0)).unwrap();
        let s = costs.sum();
        // Alternate so both regimes are covered.
        let rho = if i % 2 == 0 {
            rng.gen_range(0.05..1.0) * s
        } else {
            s * rng.gen_range(1.01..20.0)
        };
        let x = rng.gen_range(0.001..0.999);
        let tag = node_regime(rho, &costs).unwrap().tag;
        regimes[(tag == RegimeTag::High) as usize] += 1;
        let budget_for = |l: f64| 1.0 + 2.0 * ((rho / l).sqrt() - 1.0).max(rho / s - 1.0).max(0.0);
        let (b1, b2) = (budget_for(costs.lambda1), budget_for(costs.lambda2));
        let params = GameParameters::new(
            costs,
            b1,
            b2,
            coopetition_core::uniform_schedule(1, 1.0),
            RhoMode::Final,
        )
        .unwrap();
        let power = InfluencePower {
            values: vec![rho],
            duration: 1.0,
            mode: RhoMode::Final,
        };
        let state = OpinionVector::new(vec![x]).unwrap();
        let (a1, a2) = one_shot_ne(&state, &power, &params).map_err(|e| e.to_string())?;
        let (p, q) = (a1.spends()[0], a2.spends()[0]);
        let base1 = node_utility(Player::One, x, rho, p, q, &costs);
        let base2 = node_utility(Player::Two, x, rho, p, q, &costs);
        for j in 0..10_000 {
            let f = j as f64 / 9_999.0;
            worst = worst.max(node_utility(Player::One, x, rho, f * b1, q, &costs) - base1);
            worst = worst.max(node_utility(Player::Two, x, rho, p, f * b2, &costs) - base2);
        }
    }
    within(start.elapsed(), 60)?;
    if worst <= 1e-6 && regimes.iter().all(|&c| c > 0) {
        Ok(format!(
            "200 instances ({} LOW, {} HIGH), best grid gain {worst:.2e}",
            regimes[0], regimes[1]
        ))
    } else {
        Err(format!("best grid gain {worst:.2e}, regimes {regimes:?}"))
    }
}

fn fixed_point() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let costs = Costs::new(rng.gen_range(0.1..3.0), rng.gen_range(0.1..3.0)).unwrap();
        let s = costs.sum();
        let eta = costs.eta();
        let rho = s * rng.gen_range(1.05..20.0);
        let regime = node_regime(rho, &costs).unwrap();
        assert_eq!(regime.tag, RegimeTag::High);
        let lo = regime.lower.max(0.0);
        let hi = regime.upper.min(1.0);
        let x = lo + (hi - lo) * rng.gen_range(0.01..0.99);
        let (p, q) = node_equilibrium(x, rho, &costs).map_err(|e| e.to_string())?;
        let post = jump(
            &OpinionVector::new(vec![x]).unwrap(),
            &ActionVector::new(Player::One, vec![p]).unwrap(),
            &ActionVector::new(Player::Two, vec![q]).unwrap(),
        )
        .map_err(|e| e.to_string())?;
        worst = worst.max((post.as_slice()[0] - eta).abs());
    }
    if worst < 1e-12 {
        Ok(format!("100 HIGH instances, max |x+ - eta| = {worst:.2e}"))
    } else {
        Err(format!("max |x+ - eta| = {worst:.2e}"))
    }
}

fn contraction() -> Outcome {
    let prepared = benchmark(50).with_stages(40).map_err(|e| e.to_string())?;
    let eta = prepared.eta();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut max_stage = 0;
    for trial in 0..50 {
        let x0 = OpinionVector::new((0..50).map(|_| rng.gen_range(0.001..0.999)).collect()).unwrap();
        let history = run_profile(&x0, &prepared.laplacian, &prepared.params, StrategyProfile::RepeatedNe)
            .map_err(|e| e.to_string())?;
        let trace = contraction_trace(&history, eta);
        let reached = trace
            .iter()
            .position(|&d| d < 1e-9)
            .ok_or_else(|| format!("trial {trial}: not below 1e-9 in 40 stages"))?;
        if let Some(k) = (1..=reached).find(|&k| trace[k] >= trace[k - 1]) {
            return Err(format!("trial {trial}: trace rises at stage {}", k + 1));
        }
        max_stage = max_stage.max(reached + 1);
    }
    Ok(format!("50 random states, strictly decreasing, below 1e-9 by stage {max_stage}"))
}

fn family_stationarity() -> Outcome {
    let mut cfg = ExperimentConfig::preset_paper(50);
    cfg.lambda1 = 6.0;
    cfg.lambda2 = 4.0;
    let probe = cfg.prepare().map_err(|e| e.to_string())?;
    let (lower, upper) = match probe.prediction.regime {
        EquilibriumRegime::Family { lower, upper } => (lower, upper),
        other => return Err(format!("expected a family regime, got {other:?}")),
    };
    let gamma = 0.5 * (lower + upper);
    cfg.initial = InitialOpinion::Explicit(vec![gamma; 50]);
    let history = cfg
        .prepare()
        .and_then(|p| p.run(StrategyProfile::RepeatedNe, 0))
        .map_err(|e| e.to_string())?;
    let mut drift: f64 = 0.0;
    for r in &history.records {
        if !(r.a1.is_zero() && r.a2.is_zero()) {
            return Err(format!("stage {} has non-zero spend", r.stage));
        }
        drift = drift.max(r.pre_state.sup_distance(gamma)).max(r.post_state.sup_distance(gamma));
    }
    if drift < 1e-12 {
        Ok(format!("gamma = {gamma:.4} in ({lower:.4}, {upper:.4}), zero spend, drift {drift:.1e}"))
    } else {
        Err(format!("state drifts by {drift:.2e}"))
    }
}

fn invariants() -> Outcome {
    let mut row_dev: f64 = 0.0;
    let mut semigroup: f64 = 0.0;
    for n in [50, 100, 200] {
        let l = benchmark(n).laplacian;
        for t in [0.1, 1.0, 5.0] {
            let p = Propagator::new(&l, t).map_err(|e| e.to_string())?;
            for row in p.matrix().rows() {
                row_dev = row_dev.max((row.sum() - 1.0).abs());
            }
        }
        let (a, b) = (0.3, 0.7);
        let pa = Propagator::new(&l, a).unwrap();
        let pb = Propagator::new(&l, b).unwrap();
        let pab = Propagator::new(&l, a + b).unwrap();
        let diff = pa.matrix().dot(pb.matrix()) - pab.matrix();
        semigroup = semigroup.max(diff.iter().fold(0.0, |m: f64, v| m.max(v.abs())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut range_ok = true;
    for _ in 0..10_000 {
        let x = rng.gen_range(1e-9..1.0 - 1e-9);
        let a1 = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..100.0) };
        let a2 = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..100.0) };
        let post = jump(
            &OpinionVector::new(vec![x]).unwrap(),
            &ActionVector::new(Player::One, vec![a1]).unwrap(),
            &ActionVector::new(Player::Two, vec![a2]).unwrap(),
        )
        .map_err(|e| e.to_string())?
        .as_slice()[0];
        range_ok &= post > 0.0 && post < 1.0;
    }
    let detail = format!("row dev {row_dev:.1e}, semigroup {semigroup:.1e}, jump range over 1e4 inputs {range_ok}");
    if row_dev < 1e-10 && semigroup < 1e-8 && range_ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn certificate_soundness() -> Outcome {
    let mut configs = 0;
    let mut checks = 0;
    let mut passes = 0;
    for n in [10, 25, 50] {
        for (l1, l2) in [(1.0, 0.5), (0.5, 1.0), (0.2, 0.3), (1.0, 1.0)] {
            for stages in [5, 12] {
                for mode in [RhoMode::Final, RhoMode::Integral] {
                    let mut cfg = ExperimentConfig::preset_paper(n);
                    cfg.lambda1 = l1;
                    cfg.lambda2 = l2;
                    cfg.stages = stages;
                    cfg.rho_mode = mode;
                    let prepared = cfg.prepare().map_err(|e| e.to_string())?;
                    let rhos = &prepared.rho;
                    let unique = matches!(
                        predict_equilibrium(rhos, &prepared.params.costs).map_err(|e| e.to_string())?.regime,
                        EquilibriumRegime::UniqueEta { .. }
                    );
                    if !unique {
                        continue;
                    }
                    configs += 1;
                    let ne = prepared.run(StrategyProfile::RepeatedNe, 0).map_err(|e| e.to_string())?;
                    for k1 in 0..stages {
                        let cert = prop1_certificate(&ne, k1, None, rhos, &prepared.params)
                            .map_err(|e| e.to_string())?;
                        checks += 1;
                        if !cert.passed {
                            continue;
                        }
                        passes += 1;
                        let cs = prepared
                            .run(StrategyProfile::Coopetition { ne_stages: k1 }, 0)
                            .map_err(|e| e.to_string())?;
                        let s = check_sustainability(&cs, &ne).map_err(|e| e.to_string())?;
                        if !s.sustainable {
                            return Err(format!("N={n} lambda=({l1},{l2}) K={stages} K1={k1}: passes but unsustainable"));
                        }
                    }
                }
            }
        }
    }
    if configs < 20 {
        return Err(format!("only {configs} unique-equilibrium configurations"));
    }
    Ok(format!("{configs} configurations, {checks} certificates, {passes} passes, all sustainable"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("consensus at eta", consensus),
        ("post-convergence utility table", table1),
        ("coopetition Pareto-dominance", pareto),
        ("one-shot NE against grid deviations", ne_oracle),
        ("fixed point at eta", fixed_point),
        ("contraction toward eta", contraction),
        ("family-regime stationarity", family_stationarity),
        ("dynamics invariants", invariants),
        ("certificate soundness", certificate_soundness),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} PASS  {name} [{secs:.2}s]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL  {name} [{secs:.2}s]: {detail}", i + 1)
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
