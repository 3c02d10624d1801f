//! Acceptance suite. Prints one PASS/FAIL line per criterion, each checked
//! against its runtime limit, and exits nonzero if any criterion fails.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::panic;
use std::path::Path;
use std::time::{Duration, Instant};

use clap::Parser;
use mmmt_cli::{cmd_export_suite, cmd_run, cmd_sweep, run_scenarios, simulate_scenario, Cli, Command, RunConfig};
use mmmt_core::costmodel::{preset, CostEntry, CostTable, HardwareSystem, PRESET_IDS};
use mmmt_core::loadgen::{generate_requests, target_frame_count};
use mmmt_core::runtime::{
    simulate, validate_schedule, EventLog, LatencyGreedy, Status, TimelineEntry, POLICY_NAMES,
};
use mmmt_core::scoring::{energy_score, qoe_score, rt_score, ScoreAccumulator, ScoreReport, ScoringConfig};
use mmmt_core::workload::{
    builtin_suite, validate_scenario, BenchmarkSuite, DependencyEdge, DependencyKind, InputSource, MetricDirection,
    ScenarioEntry, UnitModel, UsageScenario, SUITE_SCHEMA_VERSION,
};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

type Check = Result<(), String>;

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

struct Criterion {
    id: u8,
    name: &'static str,
    limit: Duration,
    run: fn() -> Check,
}

fn main() {
    let secs = Duration::from_secs;
    let criteria = [
        Criterion { id: 1, name: "score-formula fidelity", limit: secs(1), run: score_formulas },
        Criterion { id: 2, name: "range invariants over 1000 fuzzed runs", limit: secs(30), run: range_invariants },
        Criterion { id: 3, name: "schedule validity over 100 fuzzed runs", limit: secs(30), run: schedule_validity },
        Criterion { id: 4, name: "throughput bound at 1 us latency", limit: secs(5), run: throughput_bound },
        Criterion { id: 5, name: "drop-rule hand simulation", limit: secs(1), run: drop_rule },
        Criterion { id: 6, name: "deep-dive timeline structure", limit: secs(1), run: deep_dive_timeline },
        Criterion { id: 7, name: "determinism of run outputs", limit: secs(5), run: determinism },
        Criterion { id: 8, name: "streaming vs brute-force scoring", limit: secs(10), run: scoring_oracle },
        Criterion { id: 9, name: "cascading sweep endpoints", limit: secs(10), run: cascading_sweep },
        Criterion { id: 10, name: "built-in suite golden tables", limit: secs(1), run: suite_golden },
    ];

    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = panic::catch_unwind(c.run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let result = result.and_then(|()| {
            if elapsed > c.limit {
                Err(format!("exceeded the {:?} limit", c.limit))
            } else {
                Ok(())
            }
        });
        match result {
            Ok(()) => println!("PASS [{:>2}] {} ({:.3}s)", c.id, c.name, elapsed.as_secs_f64()),
            Err(e) => {
                failed += 1;
                println!("FAIL [{:>2}] {} ({:.3}s): {e}", c.id, c.name, elapsed.as_secs_f64());
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn parse_run(args: &[&str]) -> RunConfig {
    let argv = ["mmmt", "run"].iter().chain(args).copied();
    match Cli::try_parse_from(argv).expect("arguments parse").command {
        Command::Run(a) => RunConfig::from_args(&a).expect("configuration resolves"),
        _ => unreachable!(),
    }
}

// ---------------------------------------------------------------- fuzzing

/// A random valid scenario over the built-in models.
fn random_scenario(rng: &mut StdRng, suite: &BenchmarkSuite, id: &str) -> UsageScenario {
    const RATES: [f64; 10] = [60.0, 45.0, 30.0, 20.0, 15.0, 10.0, 5.0, 3.0, 2.0, 1.0];
    for _ in 0..64 {
        let mut models: Vec<&UnitModel> = suite.models.iter().collect();
        models.shuffle(rng);
        models.truncate(rng.gen_range(1..=5));
        let mut entries: Vec<ScenarioEntry> = models
            .iter()
            .map(|m| {
                let cap = suite.source(&m.input_sources[0]).unwrap().streaming_rate;
                let rates: Vec<f64> = RATES.iter().copied().filter(|&r| r <= cap).collect();
                ScenarioEntry::new(&m.id, *rates.choose(rng).unwrap())
            })
            .collect();
        for j in 1..entries.len() {
            for i in 0..j {
                if rng.gen_bool(0.35) {
                    let (up, down) = (entries[i].id.clone(), entries[j].id.clone());
                    let edge = if rng.gen_bool(0.5) {
                        DependencyEdge::control(&up, &down, rng.gen())
                    } else {
                        let mut e = DependencyEdge::data(&up, &down);
                        if rng.gen_bool(0.3) {
                            e.trigger_probability = rng.gen();
                        }
                        e
                    };
                    entries[j].dependencies.push(edge);
                }
            }
        }
        let s = UsageScenario {
            id: id.into(),
            name: id.into(),
            entries,
        };
        if validate_scenario(&s, &suite.input_sources, &suite.models).is_empty() {
            return s;
        }
    }
    UsageScenario {
        id: id.into(),
        name: id.into(),
        entries: vec![ScenarioEntry::new("HT", 30.0)],
    }
}

fn random_hardware(rng: &mut StdRng, models: &[String]) -> HardwareSystem {
    let id = *PRESET_IDS.choose(rng).unwrap();
    let mut hw = preset(id, *[256u32, 1024, 4096, 8192].choose(rng).unwrap()).unwrap();
    if hw.units.len() > 1 && rng.gen_bool(0.3) {
        let allowed: Vec<String> = models.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
        hw.units[0].models = Some(allowed);
    }
    hw
}

fn random_costs(rng: &mut StdRng, models: &[String], hw: &HardwareSystem) -> CostTable {
    let e_max: f64 = rng.gen_range(0.1..100.0);
    let scale: f64 = *[0.01, 0.1, 1.0, 5.0].choose(rng).unwrap();
    let mut entries = Vec::new();
    for m in models {
        for u in &hw.units {
            entries.push(CostEntry {
                model: m.clone(),
                unit: u.id.clone(),
                latency_ms: rng.gen_range(0.001f64..40.0) * scale,
                energy_mj: rng.gen_range(0.0..=e_max),
            });
        }
    }
    CostTable::new(e_max, entries).unwrap()
}

/// A random configuration over one to three scenarios, built-in or random.
fn random_config(rng: &mut StdRng) -> RunConfig {
    let mut suite = builtin_suite();
    for s in &mut suite.scenarios {
        for e in &mut s.entries {
            for d in &mut e.dependencies {
                if d.kind == DependencyKind::Control {
                    d.trigger_probability = rng.gen();
                }
            }
        }
    }
    let mut selected = Vec::new();
    for n in 0..rng.gen_range(1..=3) {
        if rng.gen_bool(0.5) {
            let id = format!("fuzz_{n}");
            let s = random_scenario(rng, &suite, &id);
            suite.scenarios.push(s);
            selected.push(id);
        } else {
            selected.push(suite.scenarios[rng.gen_range(0..7)].id.clone());
        }
    }
    selected.dedup();
    let models: Vec<String> = suite.models.iter().map(|m| m.id.clone()).collect();
    let hw = random_hardware(rng, &models);
    let costs = random_costs(rng, &models, &hw);
    let mut cfg = RunConfig::new(suite, hw, costs);
    cfg.scenarios = selected;
    cfg.policy = POLICY_NAMES.choose(rng).unwrap().to_string();
    cfg.seed = rng.gen();
    cfg.duration_s = rng.gen_range(0.1..1.0);
    cfg.scoring.k = *[0.0, 1.0, 10.0, 100.0, 1e4].choose(rng).unwrap();
    cfg
}

// ---------------------------------------------------------------- criteria

fn score_formulas() -> Check {
    let mut rng = StdRng::seed_from_u64(1);
    for _ in 0..100 {
        let slack: f64 = rng.gen_range(0.0..1e4);
        let k: f64 = rng.gen_range(0.0..1e3);
        check!(rt_score(slack, slack, k) == 0.5, "rt_score(L = slack = {slack}, k = {k}) != 0.5");
        let l: f64 = rng.gen_range(-1e6..1e6);
        check!(rt_score(l, slack, 0.0) == 0.5, "rt_score(L = {l}, slack = {slack}, k = 0) != 0.5");
    }
    for e_max in [0.5, 1.0, 8.0, 123.456] {
        check!(energy_score(0.0, e_max).unwrap() == 1.0, "energy_score(0, {e_max}) != 1");
        check!(energy_score(e_max, e_max).unwrap() == 0.0, "energy_score({e_max}, {e_max}) != 0");
    }
    // 47.1% of 1000 frames dropped
    let qoe = qoe_score(529, 1000).unwrap();
    check!((qoe - (1.0 - 0.471)).abs() < 1e-9, "qoe {qoe} != 1 - 0.471");
    check!((qoe * 100.0).round() / 100.0 == 0.53, "qoe {qoe} does not round to 0.53");
    Ok(())
}

fn in_unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

fn check_report_ranges(r: &ScoreReport) -> Check {
    for s in &r.scenarios {
        check!(in_unit(s.scenario_score), "{} scenario score {}", s.scenario, s.scenario_score);
        for m in &s.models {
            for (name, v) in [
                ("rt_mean", m.rt_mean),
                ("en_mean", m.en_mean),
                ("acc_mean", m.acc_mean),
                ("model_score", m.model_score),
                ("qoe", m.qoe.unwrap_or(0.0)),
            ] {
                check!(in_unit(v), "{}/{} {name} = {v}", s.scenario, m.model);
            }
            for i in &m.inferences {
                check!(
                    in_unit(i.rt) && in_unit(i.en) && in_unit(i.acc) && in_unit(i.score),
                    "{}/{} inference {:?}",
                    s.scenario,
                    m.model,
                    i
                );
            }
        }
    }
    check!(
        in_unit(r.overall.arithmetic) && in_unit(r.overall.geometric),
        "overall {:?}",
        r.overall
    );
    Ok(())
}

fn range_invariants() -> Check {
    let mut rng = StdRng::seed_from_u64(2);
    let mut sims = 0;
    while sims < 1000 {
        let cfg = random_config(&mut rng);
        let (logs, report) = run_scenarios(&cfg).map_err(|e| format!("{e:#}"))?;
        sims += logs.len();
        check_report_ranges(&report)?;
    }
    Ok(())
}

/// Occupancy and data-dependency checks written independently of `validate_schedule`.
fn independent_schedule_check(log: &EventLog, scenario: &UsageScenario) -> Check {
    let mut by_unit: BTreeMap<&str, Vec<&TimelineEntry>> = BTreeMap::new();
    for e in log.entries.iter().filter(|e| e.status == Status::Completed) {
        by_unit.entry(e.unit.as_deref().unwrap()).or_default().push(e);
        check!(e.t_start.unwrap() >= e.request.t_req, "{e:?} starts before its request");
    }
    for (unit, mut runs) in by_unit {
        runs.sort_by_key(|e| e.t_start);
        for w in runs.windows(2) {
            check!(w[0].t_end <= w[1].t_start, "unit {unit} overlap: {:?} and {:?}", w[0], w[1]);
        }
    }
    let done: HashMap<(&str, u64), &TimelineEntry> = log
        .entries
        .iter()
        .filter(|e| e.status == Status::Completed)
        .map(|e| ((e.request.model.as_str(), e.request.frame_index), e))
        .collect();
    for entry in &scenario.entries {
        for d in entry.dependencies.iter().filter(|d| d.kind == DependencyKind::Data) {
            let ups: Vec<&TimelineEntry> = log.entries_for(&d.upstream).collect();
            for e in log.entries_for(&entry.id).filter(|e| e.status == Status::Completed) {
                let up = ups
                    .iter()
                    .filter(|u| u.request.frame_index <= e.request.frame_index)
                    .max_by_key(|u| u.request.frame_index)
                    .ok_or_else(|| format!("{e:?} completed with no upstream request"))?;
                let up = done
                    .get(&(up.request.model.as_str(), up.request.frame_index))
                    .ok_or_else(|| format!("{e:?} completed but its upstream did not"))?;
                check!(up.t_end <= e.t_start, "{e:?} starts before upstream {up:?} ends");
            }
        }
    }
    Ok(())
}

fn schedule_validity() -> Check {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..100 {
        let cfg = random_config(&mut rng);
        for scenario in cfg.selected().unwrap() {
            let log = simulate_scenario(&cfg, scenario).map_err(|e| format!("{e:#}"))?;
            let v = validate_schedule(&log, scenario);
            check!(v.is_empty(), "{} on {}: {:?}", scenario.id, cfg.hardware.id, v);
            independent_schedule_check(&log, scenario)?;
        }
    }
    Ok(())
}

fn throughput_bound() -> Check {
    for hw in ["A", "J", "M-8192"] {
        for duration in ["1", "2.5"] {
            for all_gates_open in [false, true] {
                let mut cfg = parse_run(&[
                    "--hw", hw, "--uniform-latency", "0.001", "--emax", "1", "--duration", duration, "--seed", "5",
                ]);
                if all_gates_open {
                    for s in &mut cfg.suite.scenarios {
                        for e in &mut s.entries {
                            for d in &mut e.dependencies {
                                d.trigger_probability = 1.0;
                            }
                        }
                    }
                }
                let (logs, _) = run_scenarios(&cfg).map_err(|e| format!("{e:#}"))?;
                for (log, scenario) in logs.iter().zip(&cfg.suite.scenarios) {
                    for (c, e) in log.counts.iter().zip(&scenario.entries) {
                        let target = target_frame_count(e.target_rate, cfg.duration_s);
                        let ctx = format!("{hw} {duration}s {} {}", scenario.id, c.model);
                        check!(c.n_dropped == 0, "{ctx}: {} dropped", c.n_dropped);
                        check!(c.n_processed <= target, "{ctx}: {} > {target}", c.n_processed);
                        if all_gates_open || e.dependencies.is_empty() {
                            check!(c.n_processed == target, "{ctx}: {} != {target}", c.n_processed);
                        } else {
                            check!(
                                c.n_processed + c.n_untriggered == target,
                                "{ctx}: {} + {} untriggered != {target}",
                                c.n_processed,
                                c.n_untriggered
                            );
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn drop_rule() -> Check {
    let suite = BenchmarkSuite {
        schema_version: SUITE_SCHEMA_VERSION,
        input_sources: vec![InputSource {
            id: "cam".into(),
            input_type: "Images".into(),
            streaming_rate: 4.0,
            init_latency_ms: 0.0,
            max_jitter_ms: 0.0,
        }],
        models: vec![UnitModel {
            id: "A".into(),
            task: String::new(),
            input_sources: vec!["cam".into()],
            dataset: String::new(),
            accuracy_metric: String::new(),
            reported_metric: 1.0,
            metric_direction: MetricDirection::HigherIsBetter,
            achieved_metric: None,
            flops: None,
        }],
        scenarios: vec![UsageScenario {
            id: "s".into(),
            name: "s".into(),
            entries: vec![ScenarioEntry::new("A", 4.0)],
        }],
    };
    let scenario = &suite.scenarios[0];
    let hw = preset('A', 4096).unwrap();
    let costs = CostTable::uniform(["A"], &hw, 800.0, 0.0, 1.0).unwrap();
    let stream = generate_requests(scenario, &suite, 1.0, 0).map_err(|e| e.to_string())?;
    let log = simulate(scenario, &stream, &hw, &costs, &mut LatencyGreedy, 0).map_err(|e| e.to_string())?;
    let statuses: Vec<Status> = log.entries.iter().map(|e| e.status).collect();
    use Status::{Completed, Dropped};
    check!(statuses == [Completed, Dropped, Dropped, Completed], "statuses {statuses:?}");
    let ends: Vec<f64> = log.entries.iter().filter_map(|e| e.t_end_ms()).collect();
    check!(ends == [800.0, 1600.0], "t_end {ends:?}");
    Ok(())
}

fn deep_dive_timeline() -> Check {
    for policy in POLICY_NAMES {
        for hw in ["J", "A-1024", "M"] {
            let cfg = parse_run(&[
                "--scenario", "social_interaction_a", "--no-jitter", "--hw", hw, "--emax", "50", "--policy", policy,
            ]);
            let (logs, _) = run_scenarios(&cfg).map_err(|e| format!("{e:#}"))?;
            let log = &logs[0];
            let frames = |m: &str| log.entries_for(m).map(|e| e.request.frame_index).collect::<Vec<_>>();
            // the rate accumulator picks frames 1, 3, 5, ... at half the source rate
            let every_other: Vec<u64> = (0..30).map(|i| 2 * i + 1).collect();
            check!(frames("HT") == every_other, "HT frames {:?}", frames("HT"));
            check!(frames("DR") == every_other, "DR frames {:?}", frames("DR"));
            let camera = cfg.suite.source("camera").unwrap();
            for e in log.entries_for("HT") {
                let expected = camera.init_latency_ms + e.request.frame_index as f64 * 1000.0 / 60.0;
                check!(
                    (e.request.t_req_ms() - expected).abs() <= 0.0005,
                    "HT frame {} at {} ms, expected {expected}",
                    e.request.frame_index,
                    e.request.t_req_ms()
                );
            }
            let es: HashMap<u64, &TimelineEntry> = log.entries_for("ES").map(|e| (e.request.frame_index, e)).collect();
            for ge in log.entries_for("GE").filter(|e| e.t_start.is_some()) {
                let up = es[&ge.request.frame_index];
                check!(
                    up.status == Status::Completed && up.t_end <= ge.t_start,
                    "{policy} on {hw}: GE frame {} starts at {:?}, ES ends at {:?}",
                    ge.request.frame_index,
                    ge.t_start,
                    up.t_end
                );
            }
        }
    }
    Ok(())
}

fn read_outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().unwrap();
    let dir = |n: &str| tmp.path().join(n).to_string_lossy().into_owned();
    let base = ["--emax", "20", "--duration", "1", "--seed", "11"];
    let run = |out: &str, seed: &str| {
        let mut args: Vec<&str> = base.to_vec();
        args[5] = seed;
        args.extend(["--out", out]);
        cmd_run(&parse_run(&args)).map_err(|e| format!("{e:#}"))
    };
    let (da, db, dc) = (dir("a"), dir("b"), dir("c"));
    let a = run(&da, "11")?;
    run(&db, "11")?;
    let (fa, fb) = (read_outputs(Path::new(&da)), read_outputs(Path::new(&db)));
    check!(fa.len() == 9, "expected 9 output files, found {:?}", fa.keys());
    check!(fa == fb, "outputs differ between identical runs");
    let text = String::from_utf8(fa["report.json"].clone()).unwrap();
    check!(text.contains("\"schema_version\""), "report lacks schema_version");

    let c = run(&dc, "12")?;
    let key = |e: &TimelineEntry| (e.request.model.clone(), e.request.request_index);
    let mut moved = 0;
    for (la, lc) in a.logs.iter().zip(&c.logs) {
        let other: HashMap<_, _> = lc.entries.iter().map(|e| (key(e), e)).collect();
        check!(other.len() == la.entries.len(), "{}: request sets differ", la.scenario);
        for e in &la.entries {
            let f = other[&key(e)];
            check!(e.request.t_dl == f.request.t_dl, "{:?}: t_dl changed with the seed", key(e));
            moved += usize::from(e.request.t_req != f.request.t_req);
        }
    }
    check!(moved > 0, "changing the seed moved no t_req");
    Ok(())
}

/// Scores computed directly from timeline CSV rows.
struct BruteModel {
    rt: f64,
    en: f64,
    acc: f64,
    score: f64,
    qoe: Option<f64>,
}

fn mean(v: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in v {
        s += x;
    }
    s / v.len() as f64
}

fn brute_force(csv_text: &[u8], scenario: &UsageScenario, suite: &BenchmarkSuite, cfg: &ScoringConfig) -> (Vec<BruteModel>, f64) {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(csv_text);
    let mut rows: HashMap<String, Vec<csv::StringRecord>> = HashMap::new();
    for r in rdr.records() {
        let r = r.unwrap();
        rows.entry(r[0].to_string()).or_default().push(r);
    }
    let mut models = Vec::new();
    for entry in &scenario.entries {
        let m = suite.model(&entry.model).unwrap();
        let goal = match m.metric_direction {
            MetricDirection::HigherIsBetter => 1.05 * m.reported_metric,
            MetricDirection::LowerIsBetter => 0.95 * m.reported_metric,
        };
        let achieved = m.achieved_metric.unwrap_or(goal);
        let ratio = match m.metric_direction {
            MetricDirection::HigherIsBetter => achieved / goal,
            MetricDirection::LowerIsBetter => goal / achieved,
        };
        let acc = ratio.clamp(0.0, 1.0);
        let mut mine = rows.remove(&entry.id).unwrap_or_default();
        mine.sort_by_key(|r| r[1].parse::<u64>().unwrap());
        let (mut rts, mut ens, mut accs, mut scores) = (vec![], vec![], vec![], vec![]);
        let (mut total, mut done, mut untriggered) = (0u64, 0u64, 0u64);
        for r in &mine {
            total += 1;
            match &r[8] {
                "completed" => done += 1,
                "untriggered" => untriggered += 1,
                _ => {}
            }
            if &r[8] != "completed" {
                continue;
            }
            let f = |i: usize| r[i].parse::<f64>().unwrap();
            let (t_req, t_end, t_dl, energy) = (f(4), f(6), f(7), f(9));
            let x = (cfg.k * ((t_end - t_req) - (t_dl - t_req)) / 1000.0).clamp(-700.0, 700.0);
            let rt = 1.0 / (1.0 + x.exp());
            let en = (cfg.e_max_mj - energy) / cfg.e_max_mj;
            rts.push(rt);
            ens.push(en);
            accs.push(acc);
            scores.push(rt * en * acc);
        }
        let denominator = total - untriggered;
        let or0 = |v: &[f64]| if v.is_empty() { 0.0 } else { mean(v) };
        models.push(BruteModel {
            rt: or0(&rts),
            en: or0(&ens),
            acc: or0(&accs),
            score: or0(&scores),
            qoe: (denominator > 0).then(|| done as f64 / denominator as f64),
        });
    }
    let terms: Vec<f64> = models.iter().filter_map(|m| m.qoe.map(|q| m.score * q)).collect();
    let scenario_score = if terms.is_empty() { 0.0 } else { mean(&terms) };
    (models, scenario_score)
}

fn scoring_oracle() -> Check {
    let mut rng = StdRng::seed_from_u64(8);
    for run in 0..50 {
        let cfg = random_config(&mut rng);
        let mut streamed = Vec::new();
        let mut brute = Vec::new();
        for scenario in cfg.selected().unwrap() {
            let log = simulate_scenario(&cfg, scenario).map_err(|e| format!("{e:#}"))?;
            // feed entries in completion order, as a live harness would see them
            let mut order: Vec<&TimelineEntry> = log.entries.iter().collect();
            order.sort_by_key(|e| e.t_end.unwrap_or(e.request.t_dl));
            let mut acc = ScoreAccumulator::new(scenario, &cfg.suite, &cfg.scoring).unwrap();
            for e in order {
                acc.observe(e).unwrap();
            }
            let report = acc.finish(&log.hardware, &log.counts).unwrap();

            let mut csv_text = Vec::new();
            log.write_csv(&mut csv_text, &["oracle".into()]).unwrap();
            let (models, score) = brute_force(&csv_text, scenario, &cfg.suite, &cfg.scoring);
            for (m, b) in report.models.iter().zip(&models) {
                let ctx = format!("run {run} {} {}", scenario.id, m.model);
                check!(m.rt_mean.to_bits() == b.rt.to_bits(), "{ctx}: rt {} vs {}", m.rt_mean, b.rt);
                check!(m.en_mean.to_bits() == b.en.to_bits(), "{ctx}: en {} vs {}", m.en_mean, b.en);
                check!(m.acc_mean.to_bits() == b.acc.to_bits(), "{ctx}: acc {} vs {}", m.acc_mean, b.acc);
                check!(m.model_score.to_bits() == b.score.to_bits(), "{ctx}: score {} vs {}", m.model_score, b.score);
                check!(
                    m.qoe.map(f64::to_bits) == b.qoe.map(f64::to_bits),
                    "{ctx}: qoe {:?} vs {:?}",
                    m.qoe,
                    b.qoe
                );
            }
            check!(
                report.scenario_score.to_bits() == score.to_bits(),
                "run {run} {}: scenario {} vs {score}",
                scenario.id,
                report.scenario_score
            );
            streamed.push(report);
            brute.push(score);
        }
        let overall = ScoreReport::new(cfg.scoring.clone(), streamed).unwrap().overall;
        let arithmetic = mean(&brute);
        check!(
            overall.arithmetic.to_bits() == arithmetic.to_bits(),
            "run {run}: overall {} vs {arithmetic}",
            overall.arithmetic
        );
    }
    Ok(())
}

fn cascading_sweep() -> Check {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_string_lossy().into_owned();
    let cfg = parse_run(&[
        "--scenario", "vr_gaming", "--uniform-latency", "0.01", "--emax", "1", "--duration", "20", "--seed", "4",
        "--out", &out,
    ]);
    let points = cmd_sweep(&cfg, "ES->GE", &[0.0, 0.5, 1.0]).map_err(|e| format!("{e:#}"))?;
    let ge = |i: usize| points[i].report.models.iter().find(|m| m.model == "GE").unwrap().clone();
    check!(ge(0).n_processed == 0, "p = 0: GE processed {}", ge(0).n_processed);
    check!(
        points[2].downstream_triggered == points[2].upstream_completed,
        "p = 1: GE triggered {} != ES completed {}",
        points[2].downstream_triggered,
        points[2].upstream_completed
    );
    let p = &points[1];
    check!(p.upstream_completed >= 1000, "p = 0.5: only {} ES completions", p.upstream_completed);
    let frac = p.downstream_triggered as f64 / p.upstream_completed as f64;
    check!((0.47..=0.53).contains(&frac), "p = 0.5: triggered fraction {frac}");
    let csv = fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    check!(csv.lines().filter(|l| !l.starts_with('#')).count() == 4, "sweep.csv rows:\n{csv}");
    Ok(())
}

fn suite_golden() -> Check {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("suite.json");
    let argv = ["mmmt", "export-suite", "--out", path.to_str().unwrap()];
    match Cli::try_parse_from(argv).unwrap().command {
        Command::ExportSuite(a) => cmd_export_suite(&a).map_err(|e| format!("{e:#}"))?,
        _ => unreachable!(),
    }
    let suite = BenchmarkSuite::from_json(&fs::read_to_string(&path).unwrap()).map_err(|e| e.to_string())?;
    let golden: serde_json::Value = serde_json::from_str(include_str!("golden/suite_tables.json")).unwrap();

    let sources = golden["input_sources"].as_array().unwrap();
    check!(suite.input_sources.len() == sources.len(), "{} sources", suite.input_sources.len());
    for g in sources {
        let name = g["name"].as_str().unwrap();
        let s = suite
            .input_sources
            .iter()
            .find(|s| s.id.eq_ignore_ascii_case(name))
            .ok_or_else(|| format!("missing source {name}"))?;
        check!(s.input_type == g["input_type"].as_str().unwrap(), "{name} type {}", s.input_type);
        check!(s.streaming_rate == g["streaming_rate"].as_f64().unwrap(), "{name} rate {}", s.streaming_rate);
        check!(s.max_jitter_ms == g["max_jitter_ms"].as_f64().unwrap(), "{name} jitter {}", s.max_jitter_ms);
    }

    let scenarios = golden["scenarios"].as_object().unwrap();
    check!(suite.scenarios.len() == scenarios.len(), "{} scenarios", suite.scenarios.len());
    for (name, models) in scenarios {
        let s = suite
            .scenarios
            .iter()
            .find(|s| &s.name == name)
            .ok_or_else(|| format!("missing scenario {name}"))?;
        let models = models.as_object().unwrap();
        check!(s.entries.len() == models.len(), "{name}: {} entries", s.entries.len());
        for (model, spec) in models {
            let spec = spec.as_array().unwrap();
            let e = s
                .entries
                .iter()
                .find(|e| &e.model == model)
                .ok_or_else(|| format!("{name}: missing {model}"))?;
            check!(e.target_rate == spec[0].as_f64().unwrap(), "{name}/{model} rate {}", e.target_rate);
            match spec.len() {
                1 => check!(e.dependencies.is_empty(), "{name}/{model} has dependencies"),
                _ => {
                    let kind = match spec[2].as_str().unwrap() {
                        "data" => DependencyKind::Data,
                        _ => DependencyKind::Control,
                    };
                    check!(
                        e.dependencies.len() == 1
                            && e.dependencies[0].upstream == spec[1].as_str().unwrap()
                            && e.dependencies[0].kind == kind,
                        "{name}/{model} dependencies {:?}",
                        e.dependencies
                    );
                }
            }
        }
    }
    Ok(())
}
