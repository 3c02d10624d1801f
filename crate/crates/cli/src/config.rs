use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use mmmt_core::costmodel::{self, synthetic_table, CostTable, EfficiencyTable, HardwareSystem};
use mmmt_core::runtime::policy_by_name;
use mmmt_core::scoring::ScoringConfig;
use mmmt_core::workload::{builtin_suite, BenchmarkSuite, UsageScenario};

use crate::args::RunArgs;

/// PE count used when a preset is named without one.
pub const DEFAULT_PRESET_PES: u32 = 4096;

/// Where the cost table came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CostSource {
    File { path: PathBuf },
    Synthetic { efficiency: Option<f64> },
    Uniform { latency_ms: f64, energy_mj: f64 },
}

/// Fully resolved inputs of one experiment.
///
/// The output directory is not part of the recorded configuration: two runs
/// that differ only in where they write produce identical reports.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub suite: BenchmarkSuite,
    pub suite_source: String,
    /// Selected scenario ids; empty selects every scenario in suite order.
    pub scenarios: Vec<String>,
    pub hardware: HardwareSystem,
    pub hardware_source: String,
    pub cost_source: CostSource,
    pub costs: CostTable,
    pub policy: String,
    pub duration_s: f64,
    pub seed: u64,
    pub scoring: ScoringConfig,
    pub out: PathBuf,
}

pub(crate) fn read_text(path: &Path, what: &str) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {what} `{}`", path.display()))
}

pub fn load_suite(path: Option<&Path>) -> Result<(BenchmarkSuite, String)> {
    match path {
        None => Ok((builtin_suite(), "builtin".into())),
        Some(p) => {
            let text = read_text(p, "suite file")?;
            let suite = BenchmarkSuite::from_json(&text)
                .with_context(|| format!("parsing suite file `{}`", p.display()))?;
            Ok((suite, p.display().to_string()))
        }
    }
}

/// Parses `J`, `j-8192` and similar preset names.
pub fn parse_preset(spec: &str) -> Option<(char, u32)> {
    let mut chars = spec.chars();
    let id = chars.next()?.to_ascii_uppercase();
    if !costmodel::PRESET_IDS.contains(&id) {
        return None;
    }
    let rest = chars.as_str();
    if rest.is_empty() {
        return Some((id, DEFAULT_PRESET_PES));
    }
    rest.strip_prefix('-')?.parse().ok().map(|pes| (id, pes))
}

/// Loads a hardware file, or builds a preset when `spec` is not a file.
pub fn load_hardware(spec: &str) -> Result<HardwareSystem> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = read_text(path, "hardware file")?;
        return HardwareSystem::from_json(&text)
            .with_context(|| format!("parsing hardware file `{}`", path.display()));
    }
    let (id, pes) = parse_preset(spec)
        .ok_or_else(|| anyhow!("hardware `{spec}` is neither a readable file nor a preset like `J` or `J-8192`"))?;
    Ok(costmodel::preset(id, pes)?)
}

fn resolve_costs(
    args: &RunArgs,
    suite: &BenchmarkSuite,
    hw: &HardwareSystem,
) -> Result<(CostTable, CostSource)> {
    if let Some(path) = &args.costs {
        let text = read_text(path, "cost table")?;
        let mut table =
            CostTable::from_json(&text).with_context(|| format!("parsing cost table `{}`", path.display()))?;
        if let Some(e_max) = args.emax {
            table = table
                .with_e_max(e_max)
                .with_context(|| format!("applying --emax {e_max} to `{}`", path.display()))?;
        }
        return Ok((table, CostSource::File { path: path.clone() }));
    }
    let e_max = args
        .emax
        .ok_or_else(|| anyhow!("--emax is required unless --costs names a file that records it"))?;
    if let Some(latency_ms) = args.uniform_latency {
        let table = CostTable::uniform(
            suite.models.iter().map(|m| m.id.as_str()),
            hw,
            latency_ms,
            args.uniform_energy,
            e_max,
        )
        .context("building uniform cost table")?;
        return Ok((
            table,
            CostSource::Uniform {
                latency_ms,
                energy_mj: args.uniform_energy,
            },
        ));
    }
    let eff = args.efficiency.map(EfficiencyTable::uniform).unwrap_or_default();
    let table = synthetic_table(&suite.models, hw, &eff, e_max).context("building synthetic cost table")?;
    Ok((
        table,
        CostSource::Synthetic {
            efficiency: args.efficiency,
        },
    ))
}

impl RunConfig {
    /// Defaults around an already-built suite, hardware and cost table.
    pub fn new(suite: BenchmarkSuite, hardware: HardwareSystem, costs: CostTable) -> Self {
        let scoring = ScoringConfig::new(costs.e_max_mj());
        Self {
            suite,
            suite_source: "builtin".into(),
            scenarios: Vec::new(),
            hardware_source: hardware.id.clone(),
            hardware,
            cost_source: CostSource::Synthetic { efficiency: None },
            costs,
            policy: "latency-greedy".into(),
            duration_s: 1.0,
            seed: 0,
            scoring,
            out: PathBuf::from("out"),
        }
    }

    pub fn from_args(args: &RunArgs) -> Result<Self> {
        let (mut suite, suite_source) = load_suite(args.suite.as_deref())?;
        if args.no_jitter {
            for s in &mut suite.input_sources {
                s.max_jitter_ms = 0.0;
            }
        }
        let hardware = load_hardware(&args.hw)?;
        let (costs, cost_source) = resolve_costs(args, &suite, &hardware)?;
        let scoring = ScoringConfig {
            k: args.k,
            e_max_mj: costs.e_max_mj(),
            overall_mean: args.mean.into(),
            report_scale: args.scale.into(),
            count_untriggered_in_qoe: args.count_untriggered,
        };
        let cfg = Self {
            suite,
            suite_source,
            scenarios: args.scenarios.clone(),
            hardware_source: args.hw.clone(),
            hardware,
            cost_source,
            costs,
            policy: args.policy.clone(),
            duration_s: args.duration,
            seed: args.seed,
            scoring,
            out: args.out.clone(),
        };
        cfg.check()?;
        Ok(cfg)
    }

    /// Checks the fields that are not validated on construction.
    pub fn check(&self) -> Result<()> {
        ensure!(
            self.duration_s > 0.0 && self.duration_s.is_finite(),
            "--duration must be positive, got {}",
            self.duration_s
        );
        policy_by_name(&self.policy).context("--policy")?;
        self.scoring.validate().context("scoring configuration")?;
        ensure!(
            self.scoring.e_max_mj == self.costs.e_max_mj(),
            "scoring e_max {} differs from the cost table's {}",
            self.scoring.e_max_mj,
            self.costs.e_max_mj()
        );
        self.selected()?;
        Ok(())
    }

    /// The selected scenarios, in selection order.
    pub fn selected(&self) -> Result<Vec<&UsageScenario>> {
        if self.scenarios.is_empty() {
            if self.suite.scenarios.is_empty() {
                bail!("suite `{}` has no scenarios", self.suite_source);
            }
            return Ok(self.suite.scenarios.iter().collect());
        }
        self.scenarios
            .iter()
            .map(|id| {
                self.suite.scenario(id).ok_or_else(|| {
                    let known: Vec<&str> = self.suite.scenarios.iter().map(|s| s.id.as_str()).collect();
                    anyhow!("unknown scenario `{id}`; known: {}", known.join(", "))
                })
            })
            .collect()
    }

    /// Everything needed to reproduce the run, as recorded in every output file.
    pub fn to_json(&self) -> Value {
        let scenarios: Vec<&str> = self
            .selected()
            .map(|v| v.iter().map(|s| s.id.as_str()).collect())
            .unwrap_or_default();
        json!({
            "suite": { "source": self.suite_source, "definition": self.suite },
            "scenarios": scenarios,
            "hardware": { "source": self.hardware_source, "system": self.hardware },
            "costs": {
                "source": self.cost_source,
                "e_max_mj": self.costs.e_max_mj(),
                "entries": self.costs.entries(),
            },
            "policy": self.policy,
            "duration_s": self.duration_s,
            "seed": self.seed,
            "scoring": self.scoring,
        })
    }
}
