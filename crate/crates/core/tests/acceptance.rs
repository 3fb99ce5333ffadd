//! Acceptance suite. Runs every exit criterion, prints one PASS/FAIL line each, and exits
//! non-zero if any criterion fails.

use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng as _, SeedableRng};

use dmwm_core::baselines::{PolicyKind, QTable};
use dmwm_core::dual_mind::{rollout, slow_mind_select};
use dmwm_core::harness::{run_episode, run_experiment, run_seed, Experiment, MetricsReport, TrafficPairing};
use dmwm_core::icn::enumerate_feasible;
use dmwm_core::scenario::{BuiltinScenario, RolloutRewardMode, ScenarioConfig};
use dmwm_core::traffic::{generate_arrivals, sample_poisson, Rng, TrafficStreams, STREAM_ARRIVALS};
use dmwm_core::types::{ConflictGraph, Deadline, NodeSet, Provenance};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

const N: usize = 5;
const SEED: u64 = 42;
const RUNS: u32 = 30;

struct RandomState {
    q: Vec<usize>,
    ages: Vec<Option<u32>>,
    deadlines: Vec<Deadline>,
    conflicts: ConflictGraph,
}

fn random_state(rng: &mut StdRng, max_q: usize) -> RandomState {
    let q: Vec<usize> = (0..N).map(|_| rng.gen_range(0..=max_q)).collect();
    let ages = q.iter().map(|&l| (l > 0).then(|| rng.gen_range(0..16))).collect();
    let deadlines = (0..N)
        .map(|_| if rng.gen_bool(0.5) { Deadline::Finite(rng.gen_range(1..12)) } else { Deadline::Unbounded })
        .collect();
    let density = rng.gen_range(0.0..0.6);
    let mut conflicts = ConflictGraph::new();
    for i in 0..N {
        for j in i + 1..N {
            if rng.gen_bool(density) {
                conflicts.insert(i, j);
            }
        }
    }
    RandomState { q, ages, deadlines, conflicts }
}

/// Feasible size-k subsets by bitmask scan, sorted lexicographically.
fn brute_force_feasible(s: &RandomState, k: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0u32..1 << N)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..N).filter(|&i| m & (1 << i) != 0).collect::<Vec<usize>>())
        .filter(|set| {
            set.iter().all(|&i| s.q[i] > 0)
                && set.iter().all(|&i| match (s.deadlines[i].slots(), s.ages[i]) {
                    (Some(d), Some(a)) => a <= d,
                    _ => true,
                })
                && set.iter().all(|&i| set.iter().all(|&j| i == j || !s.conflicts.contains(i, j)))
        })
        .collect();
    out.sort();
    out
}

/// Closed-form rollout reward: a scheduled node stays backlogged for `min(q, H)` imagined
/// steps, an unscheduled backlogged node for all `H`.
fn closed_form_reward(q: &[usize], set: &[usize], h: usize, mode: RolloutRewardMode) -> usize {
    (0..q.len())
        .map(|i| {
            let scheduled = set.contains(&i);
            match (mode, scheduled) {
                (_, true) => q[i].min(h),
                (RolloutRewardMode::PaperLiteral, false) if q[i] > 0 => h,
                _ => 0,
            }
        })
        .sum()
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:?}, limit {limit:?}"))
    }
}

fn c1_icn_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let mut nonempty = 0;
    for case in 0..1000 {
        let s = random_state(&mut rng, 4);
        let k = 1 + case % 3;
        let got: Vec<Vec<usize>> = enumerate_feasible(N, k, &s.q, &s.ages, &s.deadlines, &s.conflicts)
            .into_iter()
            .map(|x| x.as_slice().to_vec())
            .collect();
        let want = brute_force_feasible(&s, k);
        if got != want {
            return Err(format!("case {case}: got {got:?}, want {want:?}"));
        }
        nonempty += usize::from(!want.is_empty());
    }
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("1000 states match ({nonempty} with non-empty feasible set) in {:?}", start.elapsed()))
}

fn c2_argmax_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(2);
    let (mut checked, mut ties) = (0, 0);
    for case in 0..500 {
        let mut s = random_state(&mut rng, 6);
        // Half the states have no conflicts so the feasible set is usually non-empty.
        if case % 2 == 0 {
            s.conflicts = ConflictGraph::new();
        }
        let h = 1 + case % 4;
        for mode in [RolloutRewardMode::PaperLiteral, RolloutRewardMode::ServedTransmissions] {
            let feasible = brute_force_feasible(&s, 3);
            let sets: Vec<NodeSet> = feasible.iter().cloned().map(NodeSet::from).collect();
            let picked = slow_mind_select(&sets, &s.q, h, mode);
            let rewards: Vec<usize> = feasible.iter().map(|f| closed_form_reward(&s.q, f, h, mode)).collect();
            match (picked, rewards.iter().max()) {
                (None, None) => {}
                (Some(p), Some(&best)) => {
                    let first = rewards.iter().position(|&r| r == best).unwrap();
                    if p.reward as usize != best || p.schedule.as_slice() != feasible[first].as_slice() {
                        return Err(format!(
                            "case {case} H={h} {mode:?}: picked {} (R={}), want {:?} (R={best})",
                            p.schedule, p.reward, feasible[first]
                        ));
                    }
                    checked += 1;
                    ties += usize::from(rewards.iter().filter(|&&r| r == best).count() > 1);
                }
                (p, b) => return Err(format!("case {case}: planner {p:?} vs oracle max {b:?}")),
            }
        }
    }
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("{checked} non-empty argmaxes exact ({ties} with ties) in {:?}", start.elapsed()))
}

fn c3_rollout_hand_check() -> Outcome {
    let s = NodeSet::from([0]);
    let lit = rollout(&[3, 1], &s, 3, RolloutRewardMode::PaperLiteral);
    let served = rollout(&[3, 1], &s, 3, RolloutRewardMode::ServedTransmissions);
    let want_traj = vec![vec![3, 1], vec![2, 1], vec![1, 1], vec![0, 1]];
    if lit.reward != 6 || served.reward != 3 || lit.trajectory != want_traj || served.trajectory != want_traj {
        return Err(format!("literal {} served {} trajectory {:?}", lit.reward, served.reward, lit.trajectory));
    }
    Ok("R=6 (literal), R=3 (served), trajectory (3,1)->(2,1)->(1,1)->(0,1)".into())
}

fn builtin_scenarios(seed: u64) -> Vec<ScenarioConfig> {
    BuiltinScenario::ALL
        .into_iter()
        .map(|b| {
            let mut cfg = ScenarioConfig::builtin(b);
            cfg.base_seed = seed;
            cfg.validate().expect("builtin validates")
        })
        .collect()
}

fn full_campaign() -> Vec<MetricsReport> {
    run_experiment(&Experiment {
        scenarios: builtin_scenarios(SEED),
        policies: PolicyKind::ALL.to_vec(),
        runs: RUNS,
        pairing: TrafficPairing::Paired,
    })
}

fn c4_conservation(reports: &[MetricsReport]) -> Outcome {
    let mut n = 0;
    for r in reports {
        for rec in &r.records {
            let m = rec.metrics;
            if m.arrivals != m.delivered + m.drops + m.violations + m.final_backlog {
                return Err(format!("{}/{} run {}: {m:?}", r.scenario, r.policy, rec.run_index));
            }
            n += 1;
        }
    }
    if n != 720 {
        return Err(format!("expected 720 runs, saw {n}"));
    }
    Ok(format!("{n} runs balance exactly"))
}

fn c5_interference_safety() -> Outcome {
    let cfg = &builtin_scenarios(SEED)[0];
    let (mut slow, mut fast) = (0, 0);
    for r in 0..RUNS {
        let res = run_episode(cfg, PolicyKind::Dmwm, r, TrafficPairing::Paired);
        for d in &res.trace {
            if d.provenance == Provenance::SlowMind {
                slow += 1;
                if cfg.conflict_graph.has_conflict_within(d.nodes.as_slice()) {
                    return Err(format!("run {r} slot {}: slow-mind action {} conflicts", d.slot, d.nodes));
                }
            } else {
                fast += 1;
            }
        }
    }
    Ok(format!("0 conflicting slow-mind slots ({slow} slow-mind, {fast} fast-mind)"))
}

fn c6_cli_determinism() -> Outcome {
    let tmp = std::env::temp_dir().join(format!("dmwm-acceptance-{}", std::process::id()));
    let mut bodies = Vec::new();
    for tag in ["a", "b"] {
        let out = tmp.join(tag);
        let st = Command::new(env!("CARGO_BIN_EXE_dmwm"))
            .args(["campaign", "--seed", "42", "--out"])
            .arg(&out)
            .stdout(std::process::Stdio::null())
            .status()
            .map_err(|e| e.to_string())?;
        if !st.success() {
            return Err(format!("campaign exited with {st}"));
        }
        let files = ["summary.csv", "summary.json"].map(|f| fs::read(out.join(f)).unwrap_or_default());
        bodies.push(files);
    }
    let _ = fs::remove_dir_all(&tmp);
    if bodies[0] != bodies[1] || bodies[0][0].is_empty() {
        return Err("summary files differ between invocations".into());
    }
    Ok(format!("summary.csv ({} bytes) and summary.json identical", bodies[0][0].len()))
}

fn c7_poisson() -> Outcome {
    let mut rng = Rng::new(SEED, STREAM_ARRIVALS);
    let xs: Vec<f64> = (0..100_000).map(|_| sample_poisson(&mut rng, 1.0) as f64).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let msg = format!("mean {mean:.5}, variance {var:.5}");
    if (0.99..=1.01).contains(&mean) && (0.97..=1.03).contains(&var) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c8_model_error() -> Outcome {
    let mut cfg = ScenarioConfig::standard("light");
    cfg.lambda_base = vec![0.3; N];
    cfg.base_seed = SEED;
    let cfg = cfg.validate().map_err(|e| e.to_string())?;
    let nodes = cfg.initial_nodes();
    let mut err_sum = [0u64; N];
    let mut arrival_sum = [0u64; N];
    for r in 0..RUNS {
        let res = run_episode(&cfg, PolicyKind::Dmwm, r, TrafficPairing::Paired);
        if res.metrics.drops != 0 || res.metrics.violations != 0 {
            return Err(format!("run {r} saturated: {:?}", res.metrics));
        }
        for row in &res.twin.model_error_matrix {
            for (s, &e) in err_sum.iter_mut().zip(row) {
                *s += e as u64;
            }
        }
        // Replay the traffic streams independently of the twin.
        let mut streams = TrafficStreams::new(run_seed(cfg.base_seed, r));
        for t in 0..cfg.steps {
            for (s, c) in arrival_sum.iter_mut().zip(generate_arrivals(&cfg, &nodes, t, &mut streams).0) {
                *s += c as u64;
            }
        }
    }
    let slots = (RUNS * cfg.steps) as f64;
    let mut parts = Vec::new();
    for i in 0..N {
        let (e, a) = (err_sum[i] as f64 / slots, arrival_sum[i] as f64 / slots);
        parts.push(format!("n{i} {e:.4}/{a:.4}"));
        if (e - a).abs() > 0.05 * a {
            return Err(format!("node {i}: mean error {e} vs admitted arrivals {a}"));
        }
    }
    Ok(format!("error/arrivals per node: {}", parts.join(", ")))
}

fn cell<'a>(reports: &'a [MetricsReport], scenario: &str, policy: PolicyKind) -> &'a MetricsReport {
    reports
        .iter()
        .find(|r| r.scenario == scenario && r.policy == policy)
        .expect("campaign covers every cell")
}

fn c9_directional(reports: &[MetricsReport]) -> Outcome {
    let dmwm = PolicyKind::Dmwm;
    let a = (cell(reports, "default", dmwm).throughput.mean, cell(reports, "default", PolicyKind::Random).throughput.mean);
    let b = (cell(reports, "deadline", dmwm).violations.mean, cell(reports, "deadline", PolicyKind::Lqf).violations.mean);
    let c = (
        cell(reports, "interference", dmwm).throughput.mean,
        cell(reports, "interference", PolicyKind::Random).throughput.mean,
    );
    let msg = format!(
        "(a) thr {:.4} >= {:.4}; (b) viol {:.2} <= {:.2}; (c) thr {:.4} >= {:.4}",
        a.0, a.1, b.0, b.1, c.0, c.1
    );
    if a.0 >= a.1 && b.0 <= b.1 && c.0 >= c.1 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c10_q_learning() -> Outcome {
    const SERVE: usize = 0;
    let mut table = QTable::new(2, 0.1, 0.95, 0.2);
    let state = [0u8];
    for _ in 0..10_000 {
        table.q_update(&state, SERVE, 1.0, &state);
    }
    let q = table.value(&state, SERVE);
    let msg = format!("Q(serve) = {q:.6}");
    if (q - 20.0).abs() <= 0.2 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c11_runtime() -> Outcome {
    let start = Instant::now();
    let reports = full_campaign();
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!("{} cells x {RUNS} runs in {elapsed:?}", reports.len()))
}

fn main() -> ExitCode {
    let reports = full_campaign();
    let criteria: Vec<Criterion> = vec![
        ("1 ICN oracle equivalence", Box::new(c1_icn_oracle)),
        ("2 slow-mind argmax oracle", Box::new(c2_argmax_oracle)),
        ("3 rollout hand-check", Box::new(c3_rollout_hand_check)),
        ("4 conservation", Box::new(|| c4_conservation(&reports))),
        ("5 interference safety", Box::new(c5_interference_safety)),
        ("6 campaign determinism", Box::new(c6_cli_determinism)),
        ("7 Poisson sampler", Box::new(c7_poisson)),
        ("8 model-error diagnostic", Box::new(c8_model_error)),
        ("9 directional performance", Box::new(|| c9_directional(&reports))),
        ("10 Q-learning sanity", Box::new(c10_q_learning)),
        ("11 performance envelope", Box::new(c11_runtime)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
