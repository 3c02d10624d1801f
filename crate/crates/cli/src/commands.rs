use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::thread;

use anyhow::{anyhow, bail, ensure, Context, Result};
use serde_json::{json, Map, Value};

use mmmt_core::error::Error;
use mmmt_core::loadgen::generate_requests;
use mmmt_core::runtime::{policy_by_name, simulate, validate_schedule, EventLog};
use mmmt_core::scoring::{score_log, ScenarioReport, ScoreReport, ScoringConfig};
use mmmt_core::workload::{validate_scenario, BenchmarkSuite, UsageScenario};

use crate::args::{ExportCostsArgs, ExportHardwareArgs, ExportSuiteArgs, RunArgs, ScoreArgs};
use crate::config::{load_hardware, load_suite, read_text, RunConfig};
use crate::output::{self, write_atomic, write_json, write_timeline};

const SWEEP_SCHEMA_VERSION: u32 = 1;

/// Fails with every workload violation of `scenario`.
fn check_workload(suite: &BenchmarkSuite, scenario: &UsageScenario) -> Result<()> {
    let violations = validate_scenario(scenario, &suite.input_sources, &suite.models);
    if violations.is_empty() {
        return Ok(());
    }
    Err(Error::InvalidScenario {
        scenario: scenario.id.clone(),
        violations: violations.iter().map(ToString::to_string).collect(),
    }
    .into())
}

/// Generates, schedules and logs one scenario under `cfg`.
pub fn simulate_scenario(cfg: &RunConfig, scenario: &UsageScenario) -> Result<EventLog> {
    let stream = generate_requests(scenario, &cfg.suite, cfg.duration_s, cfg.seed)
        .with_context(|| format!("generating requests for scenario `{}`", scenario.id))?;
    let mut policy = policy_by_name(&cfg.policy)?;
    simulate(scenario, &stream, &cfg.hardware, &cfg.costs, policy.as_mut(), cfg.seed)
        .with_context(|| format!("simulating scenario `{}` on `{}`", scenario.id, cfg.hardware.id))
}

/// Simulates and scores every selected scenario without touching the filesystem.
pub fn run_scenarios(cfg: &RunConfig) -> Result<(Vec<EventLog>, ScoreReport)> {
    let mut logs = Vec::new();
    let mut reports = Vec::new();
    for scenario in cfg.selected()? {
        check_workload(&cfg.suite, scenario)?;
        let log = simulate_scenario(cfg, scenario)?;
        reports.push(
            score_log(&log, scenario, &cfg.suite, &cfg.scoring)
                .with_context(|| format!("scoring scenario `{}`", scenario.id))?,
        );
        logs.push(log);
    }
    Ok((logs, ScoreReport::new(cfg.scoring.clone(), reports)?))
}

pub struct RunOutput {
    pub report: ScoreReport,
    pub report_json: Value,
    pub logs: Vec<EventLog>,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

fn with_config(cfg: &RunConfig) -> Map<String, Value> {
    let mut extra = Map::new();
    extra.insert("config".into(), cfg.to_json());
    extra
}

/// Writes `report.json`, one `timeline_<scenario>.csv` per scenario and `summary.txt` under `cfg.out`.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.check()?;
    let (logs, report) = run_scenarios(cfg)?;
    let config = cfg.to_json();
    let report_json = report.to_json(false, with_config(cfg));
    let mut files = Vec::new();

    let path = cfg.out.join("report.json");
    write_json(&path, &report_json)?;
    files.push(path);
    for log in &logs {
        let path = cfg.out.join(format!("timeline_{}.csv", log.scenario));
        write_timeline(&path, log, &output::timeline_preamble(log, &cfg.scoring, &config))?;
        files.push(path);
    }
    let summary = output::summary(&report, &logs);
    let path = cfg.out.join("summary.txt");
    write_atomic(&path, summary.as_bytes())?;
    files.push(path);

    Ok(RunOutput {
        report,
        report_json,
        logs,
        summary,
        files,
    })
}

/// One sweep value and the resulting scenario report.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub probability: f64,
    pub report: ScenarioReport,
    pub upstream_completed: u64,
    pub downstream_triggered: u64,
    pub downstream_processed: u64,
}

impl SweepPoint {
    /// Mean of a per-model quantity over the models that had work.
    fn active_mean(&self, f: impl Fn(&mmmt_core::scoring::ModelReport) -> f64) -> f64 {
        let active: Vec<f64> = self.report.models.iter().filter(|m| m.qoe.is_some()).map(f).collect();
        if active.is_empty() {
            0.0
        } else {
            active.iter().sum::<f64>() / active.len() as f64
        }
    }

    pub fn rt(&self) -> f64 {
        self.active_mean(|m| m.rt_mean)
    }

    pub fn en(&self) -> f64 {
        self.active_mean(|m| m.en_mean)
    }

    pub fn qoe(&self) -> f64 {
        self.active_mean(|m| m.qoe.unwrap_or(0.0))
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.probability,
            self.rt(),
            self.en(),
            self.qoe(),
            self.report.scenario_score,
            self.upstream_completed,
            self.downstream_triggered,
            self.downstream_processed
        )
    }
}

/// Runs the single selected scenario once per trigger probability of `edge`.
///
/// Points run concurrently; each writes its own report and timeline under
/// `out/sweep/`, and `out/sweep.csv` collects one row per point in input order.
pub fn cmd_sweep(cfg: &RunConfig, edge: &str, values: &[f64]) -> Result<Vec<SweepPoint>> {
    cfg.check()?;
    let selected = cfg.selected()?;
    ensure!(
        selected.len() == 1,
        "sweep needs exactly one --scenario, got {}",
        selected.len()
    );
    ensure!(!values.is_empty(), "sweep needs at least one value");
    for &v in values {
        ensure!((0.0..=1.0).contains(&v), "sweep value {v} outside [0, 1]");
    }
    let base = selected[0].clone();
    let (upstream, downstream) = {
        let e = base
            .edges()
            .find(|e| e.id() == edge)
            .ok_or_else(|| {
                let known: Vec<String> = base.edges().map(|e| e.id()).collect();
                anyhow!("unknown edge `{edge}` in scenario `{}`; known: {}", base.id, known.join(", "))
            })?;
        (e.upstream.clone(), e.downstream.clone())
    };

    let results: Vec<Result<SweepPoint>> = thread::scope(|s| {
        let handles: Vec<_> = values
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let mut scenario = base.clone();
                let (upstream, downstream) = (&upstream, &downstream);
                s.spawn(move || -> Result<SweepPoint> {
                    scenario.edge_mut(edge).expect("edge checked above").trigger_probability = p;
                    let mut point_cfg = cfg.clone();
                    if let Some(slot) = point_cfg.suite.scenarios.iter_mut().find(|x| x.id == scenario.id) {
                        *slot = scenario.clone();
                    }
                    check_workload(&point_cfg.suite, &scenario)?;
                    let log = simulate_scenario(&point_cfg, &scenario)?;
                    let report = score_log(&log, &scenario, &point_cfg.suite, &point_cfg.scoring)?;
                    let config = point_cfg.to_json();
                    let mut extra = with_config(&point_cfg);
                    extra.insert("sweep".into(), json!({ "edge": edge, "probability": p }));
                    let full = ScoreReport::new(point_cfg.scoring.clone(), vec![report.clone()])?;
                    let dir = cfg.out.join("sweep").join(format!("point_{i:02}"));
                    write_json(&dir.join("report.json"), &full.to_json(false, extra))?;
                    let preamble = output::timeline_preamble(&log, &point_cfg.scoring, &config);
                    write_timeline(&dir.join(format!("timeline_{}.csv", scenario.id)), &log, &preamble)?;

                    let count = |m: &str| log.counts_for(m).cloned().unwrap_or_default();
                    Ok(SweepPoint {
                        probability: p,
                        report,
                        upstream_completed: count(upstream).n_processed,
                        downstream_triggered: count(downstream).n_triggered,
                        downstream_processed: count(downstream).n_processed,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(anyhow!("sweep worker panicked"))))
            .collect()
    });
    let points = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut csv = Vec::new();
    writeln!(csv, "# schema_version: {SWEEP_SCHEMA_VERSION}")?;
    writeln!(csv, "# scenario: {}", base.id)?;
    writeln!(csv, "# edge: {edge}")?;
    writeln!(csv, "# config: {}", serde_json::to_string(&cfg.to_json())?)?;
    writeln!(csv, "{}", output::sweep_header())?;
    for p in &points {
        writeln!(csv, "{}", p.csv_row())?;
    }
    write_atomic(&cfg.out.join("sweep.csv"), &csv)?;
    Ok(points)
}

/// Workload and schedule findings of `validate`.
#[derive(Debug, Clone, Default)]
pub struct ValidationOutcome {
    pub workload: Vec<String>,
    pub schedule: Vec<String>,
    /// Scenarios that were simulated and checked.
    pub checked: Vec<String>,
}

impl ValidationOutcome {
    pub fn is_ok(&self) -> bool {
        self.workload.is_empty() && self.schedule.is_empty()
    }
}

impl fmt::Display for ValidationOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.workload {
            writeln!(f, "workload: {v}")?;
        }
        for v in &self.schedule {
            writeln!(f, "schedule: {v}")?;
        }
        for s in &self.checked {
            writeln!(f, "checked: {s}")?;
        }
        if self.is_ok() {
            writeln!(f, "ok")?;
        } else {
            writeln!(f, "{} violation(s)", self.workload.len() + self.schedule.len())?;
        }
        Ok(())
    }
}

/// Validates the workload, then simulates each valid scenario and validates its schedule.
pub fn cmd_validate(args: &RunArgs) -> Result<ValidationOutcome> {
    let cfg = RunConfig::from_args(args)?;
    let mut outcome = ValidationOutcome::default();
    if args.scenarios.is_empty() {
        outcome.workload.extend(cfg.suite.validate().iter().map(ToString::to_string));
    }
    for scenario in cfg.selected()? {
        let violations = validate_scenario(scenario, &cfg.suite.input_sources, &cfg.suite.models);
        if !violations.is_empty() {
            if !args.scenarios.is_empty() {
                outcome
                    .workload
                    .extend(violations.iter().map(|v| format!("{}: {v}", scenario.id)));
            }
            continue;
        }
        match simulate_scenario(&cfg, scenario) {
            Ok(log) => {
                outcome.schedule.extend(
                    validate_schedule(&log, scenario)
                        .iter()
                        .map(|v| format!("{}: {v}", scenario.id)),
                );
                outcome.checked.push(scenario.id.clone());
            }
            Err(e) => outcome.schedule.push(format!("{e:#}")),
        }
    }
    Ok(outcome)
}

fn preamble_field<'a>(pre: &'a [(String, String)], key: &str, path: &Path) -> Result<&'a str> {
    pre.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| anyhow!("timeline `{}` lacks the `# {key}:` preamble line", path.display()))
}

/// Rebuilds scores from timeline CSVs, writing `score_report.json` under `args.out`.
pub fn cmd_score(args: &ScoreArgs) -> Result<(ScoreReport, String)> {
    let explicit_suite = match &args.suite {
        Some(p) => Some(load_suite(Some(p))?.0),
        None => None,
    };
    let mut scoring: Option<ScoringConfig> = None;
    let mut logs = Vec::new();
    let mut reports = Vec::new();
    for path in &args.logs {
        let text = read_text(path, "timeline")?;
        let pre = output::read_preamble(&text);
        let field = |key| preamble_field(&pre, key, path);
        let config: Value = serde_json::from_str(field("config")?)
            .with_context(|| format!("parsing `# config:` of `{}`", path.display()))?;
        let suite = match &explicit_suite {
            Some(s) => s.clone(),
            None => serde_json::from_value(config["suite"]["definition"].clone())
                .with_context(|| format!("field `config.suite.definition` of `{}`", path.display()))?,
        };
        let mut sc: ScoringConfig = serde_json::from_str(field("scoring")?)
            .with_context(|| format!("parsing `# scoring:` of `{}`", path.display()))?;
        if let Some(k) = args.k {
            sc.k = k;
        }
        if let Some(e) = args.emax {
            sc.e_max_mj = e;
        }
        if let Some(m) = args.mean {
            sc.overall_mean = m.into();
        }
        if let Some(s) = args.scale {
            sc.report_scale = s.into();
        }
        match &scoring {
            None => scoring = Some(sc.clone()),
            Some(prev) if *prev != sc => {
                bail!("`{}` was recorded with a different scoring configuration", path.display())
            }
            Some(_) => {}
        }
        let scenario_id = field("scenario")?;
        let scenario = suite
            .scenario(scenario_id)
            .ok_or_else(|| anyhow!("scenario `{scenario_id}` of `{}` not in suite", path.display()))?;
        let seed = field("seed")?
            .parse()
            .with_context(|| format!("field `seed` of `{}`", path.display()))?;
        let duration = field("duration_s")?
            .parse()
            .with_context(|| format!("field `duration_s` of `{}`", path.display()))?;
        let log = EventLog::read_csv(
            text.as_bytes(),
            scenario,
            field("hardware")?,
            field("policy")?,
            seed,
            duration,
        )
        .with_context(|| format!("reading timeline `{}`", path.display()))?;
        reports.push(
            score_log(&log, scenario, &suite, &sc).with_context(|| format!("scoring `{}`", path.display()))?,
        );
        logs.push(log);
    }
    let report = ScoreReport::new(scoring.expect("at least one log"), reports)?;
    let mut extra = Map::new();
    extra.insert(
        "logs".into(),
        json!(args.logs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>()),
    );
    write_json(&args.out.join("score_report.json"), &report.to_json(false, extra))?;
    let summary = output::summary(&report, &logs);
    Ok((report, summary))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, format!("{text}\n").as_bytes()),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

pub fn cmd_export_suite(args: &ExportSuiteArgs) -> Result<()> {
    let (suite, _) = load_suite(args.suite.as_deref())?;
    emit(args.out.as_deref(), &suite.to_json())
}

pub fn cmd_export_hardware(args: &ExportHardwareArgs) -> Result<()> {
    emit(args.out.as_deref(), &load_hardware(&args.hw)?.to_json())
}

pub fn cmd_export_costs(args: &ExportCostsArgs) -> Result<()> {
    let cfg = RunConfig::from_args(&args.run)?;
    emit(args.to.as_deref(), &cfg.costs.to_json())
}
