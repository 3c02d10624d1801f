//! Unit scores and their aggregation into model, scenario and overall scores.
//!
//! Aggregation order is fixed so reports are bit-reproducible: inferences
//! are summed by ascending `request_index`, models in scenario order and
//! scenarios in suite order.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::runtime::{EventLog, ModelCounts, TimelineEntry};
use crate::workload::{accuracy_goal, BenchmarkSuite, MetricDirection, UsageScenario};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Default deadline sensitivity, per second.
pub const DEFAULT_K: f64 = 10.0;

/// Sigmoid exponents are clamped to this magnitude before `exp`.
const EXP_CLAMP: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanKind {
    #[default]
    Arithmetic,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportScale {
    #[default]
    Unit,
    Percent,
}

impl ReportScale {
    pub fn factor(self) -> f64 {
        match self {
            ReportScale::Unit => 1.0,
            ReportScale::Percent => 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringConfig {
    /// Deadline sensitivity in 1/s.
    pub k: f64,
    /// Energy ceiling in mJ.
    pub e_max_mj: f64,
    #[serde(default)]
    pub overall_mean: MeanKind,
    #[serde(default)]
    pub report_scale: ReportScale,
    /// Count untriggered requests in the QoE denominator. Off by default:
    /// a request whose gate never fired was never user-visible work.
    #[serde(default)]
    pub count_untriggered_in_qoe: bool,
}

impl ScoringConfig {
    pub fn new(e_max_mj: f64) -> Self {
        Self {
            k: DEFAULT_K,
            e_max_mj,
            overall_mean: MeanKind::Arithmetic,
            report_scale: ReportScale::Unit,
            count_untriggered_in_qoe: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k >= 0.0) || !self.k.is_finite() {
            return Err(Error::Scoring(format!("k must be finite and non-negative, got {}", self.k)));
        }
        if !(self.e_max_mj > 0.0) || !self.e_max_mj.is_finite() {
            return Err(Error::Scoring(format!("e_max must be positive, got {}", self.e_max_mj)));
        }
        Ok(())
    }
}

/// Sigmoid of how far `latency_ms` overshoots `slack_ms`, with `k` per second.
///
/// 0.5 exactly when the latency equals the slack, and for any latency when `k == 0`.
pub fn rt_score(latency_ms: f64, slack_ms: f64, k: f64) -> f64 {
    let exponent = (k * (latency_ms - slack_ms) / 1_000.0).clamp(-EXP_CLAMP, EXP_CLAMP);
    1.0 / (1.0 + exponent.exp())
}

/// Linear energy score: 1 at zero energy, 0 at the ceiling.
pub fn energy_score(e_mj: f64, e_max_mj: f64) -> Result<f64> {
    if !(e_max_mj > 0.0) {
        return Err(Error::Scoring(format!("e_max must be positive, got {e_max_mj}")));
    }
    if !(e_mj >= 0.0) || e_mj > e_max_mj {
        return Err(Error::Scoring(format!("energy {e_mj} mJ outside [0, e_max = {e_max_mj}]")));
    }
    Ok((e_max_mj - e_mj) / e_max_mj)
}

/// Ratio of achieved metric to goal, inverted for error metrics, clamped to `[0, 1]`.
pub fn accuracy_score(achieved: f64, goal: f64, direction: MetricDirection) -> Result<f64> {
    if !(goal > 0.0) {
        return Err(Error::Scoring(format!("accuracy goal must be positive, got {goal}")));
    }
    let ratio = match direction {
        MetricDirection::HigherIsBetter => achieved / goal,
        MetricDirection::LowerIsBetter => {
            if !(achieved > 0.0) {
                return Err(Error::Scoring(format!(
                    "achieved error metric must be positive, got {achieved}"
                )));
            }
            goal / achieved
        }
    };
    Ok(ratio.clamp(0.0, 1.0))
}

/// Fraction of frames processed.
pub fn qoe_score(n_processed: u64, n_total: u64) -> Result<f64> {
    if n_total == 0 {
        return Err(Error::Scoring("QoE of a model with no requests".into()));
    }
    if n_processed > n_total {
        return Err(Error::Scoring(format!("{n_processed} processed of {n_total} total")));
    }
    Ok(n_processed as f64 / n_total as f64)
}

pub fn per_inference_score(rt: f64, en: f64, acc: f64) -> f64 {
    rt * en * acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceScore {
    pub request_index: u64,
    pub rt: f64,
    pub en: f64,
    pub acc: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: String,
    pub rt_mean: f64,
    pub en_mean: f64,
    pub acc_mean: f64,
    /// Mean per-inference score over completed requests; 0 when none completed.
    pub model_score: f64,
    /// `None` when the model had no triggered requests; it is then left out of the scenario mean.
    pub qoe: Option<f64>,
    pub n_total: u64,
    pub n_processed: u64,
    pub n_dropped: u64,
    pub n_untriggered: u64,
    pub n_sat: u64,
    pub n_triggered: u64,
    pub accuracy_goal: f64,
    pub accuracy_requirement: f64,
    pub inferences: Vec<InferenceScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub hardware: String,
    pub models: Vec<ModelReport>,
    pub scenario_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverallScore {
    pub arithmetic: f64,
    pub geometric: f64,
}

impl OverallScore {
    pub fn select(&self, kind: MeanKind) -> f64 {
        match kind {
            MeanKind::Arithmetic => self.arithmetic,
            MeanKind::Geometric => self.geometric,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub config: ScoringConfig,
    pub scenarios: Vec<ScenarioReport>,
    pub overall: OverallScore,
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

struct ModelAccumulator {
    goal: f64,
    requirement: f64,
    acc: f64,
    inferences: BTreeMap<u64, InferenceScore>,
}

/// Incremental scorer for one scenario's timeline.
///
/// Entries may be observed in any order; sums are taken by request index.
pub struct ScoreAccumulator<'a> {
    scenario: &'a UsageScenario,
    config: ScoringConfig,
    models: Vec<ModelAccumulator>,
    position: HashMap<&'a str, usize>,
}

impl<'a> ScoreAccumulator<'a> {
    pub fn new(scenario: &'a UsageScenario, suite: &BenchmarkSuite, config: &ScoringConfig) -> Result<Self> {
        config.validate()?;
        let mut models = Vec::with_capacity(scenario.entries.len());
        for entry in &scenario.entries {
            let m = suite
                .model(&entry.model)
                .ok_or_else(|| Error::Scoring(format!("unknown model `{}`", entry.model)))?;
            let goal = accuracy_goal(m)?;
            models.push(ModelAccumulator {
                goal,
                requirement: m.accuracy_requirement(),
                acc: accuracy_score(m.achieved()?, goal, m.metric_direction)?,
                inferences: BTreeMap::new(),
            });
        }
        let position = scenario
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.as_str(), i))
            .collect();
        Ok(Self {
            scenario,
            config: config.clone(),
            models,
            position,
        })
    }

    /// Scores one entry; entries that did not complete are ignored.
    pub fn observe(&mut self, entry: &TimelineEntry) -> Result<()> {
        let (Some(t_end), true) = (entry.t_end_ms(), entry.is_completed()) else {
            return Ok(());
        };
        let &i = self
            .position
            .get(entry.request.model.as_str())
            .ok_or_else(|| Error::Scoring(format!("entry for unknown model `{}`", entry.request.model)))?;
        let latency = t_end - entry.request.t_req_ms();
        let slack = entry.request.t_dl_ms() - entry.request.t_req_ms();
        let rt = rt_score(latency, slack, self.config.k);
        let en = energy_score(entry.energy_mj, self.config.e_max_mj)?;
        let m = &mut self.models[i];
        let acc = m.acc;
        m.inferences.insert(
            entry.request.request_index,
            InferenceScore {
                request_index: entry.request.request_index,
                rt,
                en,
                acc,
                score: per_inference_score(rt, en, acc),
            },
        );
        Ok(())
    }

    pub fn finish(self, hardware: &str, counts: &[ModelCounts]) -> Result<ScenarioReport> {
        let mut reports = Vec::with_capacity(self.models.len());
        for (entry, m) in self.scenario.entries.iter().zip(self.models) {
            let c = counts
                .iter()
                .find(|c| c.model == entry.id)
                .ok_or_else(|| Error::Scoring(format!("no counts for `{}`", entry.id)))?;
            let inferences: Vec<InferenceScore> = m.inferences.into_values().collect();
            let denominator = if self.config.count_untriggered_in_qoe {
                c.n_total
            } else {
                c.n_total - c.n_untriggered
            };
            let qoe = if denominator == 0 {
                None
            } else {
                Some(qoe_score(c.n_processed, denominator)?)
            };
            reports.push(ModelReport {
                model: entry.id.clone(),
                rt_mean: mean(inferences.iter().map(|s| s.rt)).unwrap_or(0.0),
                en_mean: mean(inferences.iter().map(|s| s.en)).unwrap_or(0.0),
                acc_mean: mean(inferences.iter().map(|s| s.acc)).unwrap_or(0.0),
                model_score: mean(inferences.iter().map(|s| s.score)).unwrap_or(0.0),
                qoe,
                n_total: c.n_total,
                n_processed: c.n_processed,
                n_dropped: c.n_dropped,
                n_untriggered: c.n_untriggered,
                n_sat: c.n_sat,
                n_triggered: c.n_triggered,
                accuracy_goal: m.goal,
                accuracy_requirement: m.requirement,
                inferences,
            });
        }
        let scenario_score =
            mean(reports.iter().filter_map(|r| r.qoe.map(|q| r.model_score * q))).unwrap_or(0.0);
        Ok(ScenarioReport {
            scenario: self.scenario.id.clone(),
            hardware: hardware.into(),
            models: reports,
            scenario_score,
        })
    }
}

/// Scores a complete timeline.
pub fn score_log(
    log: &EventLog,
    scenario: &UsageScenario,
    suite: &BenchmarkSuite,
    config: &ScoringConfig,
) -> Result<ScenarioReport> {
    let mut acc = ScoreAccumulator::new(scenario, suite, config)?;
    for e in &log.entries {
        acc.observe(e)?;
    }
    acc.finish(&log.hardware, &log.counts)
}

/// Mean per-inference score of one model over its completed requests.
pub fn per_model_score(
    log: &EventLog,
    model: &str,
    scenario: &UsageScenario,
    suite: &BenchmarkSuite,
    config: &ScoringConfig,
) -> Result<f64> {
    let report = score_log(log, scenario, suite, config)?;
    report
        .models
        .iter()
        .find(|m| m.model == model)
        .map(|m| m.model_score)
        .ok_or_else(|| Error::Scoring(format!("model `{model}` not in scenario `{}`", scenario.id)))
}

/// Scenario score: mean of `model_score × QoE` over the scenario's active models.
pub fn per_scenario_score(
    log: &EventLog,
    scenario: &UsageScenario,
    suite: &BenchmarkSuite,
    config: &ScoringConfig,
) -> Result<f64> {
    Ok(score_log(log, scenario, suite, config)?.scenario_score)
}

/// Arithmetic and geometric means of scenario scores. Any zero makes the geometric mean 0.
pub fn overall_score(scenario_scores: &[f64]) -> Result<OverallScore> {
    if scenario_scores.is_empty() {
        return Err(Error::Scoring("overall score of zero scenarios".into()));
    }
    let arithmetic = mean(scenario_scores.iter().copied()).unwrap();
    let geometric = if scenario_scores.iter().any(|&s| s <= 0.0) {
        0.0
    } else {
        mean(scenario_scores.iter().map(|s| s.ln())).unwrap().exp()
    };
    Ok(OverallScore { arithmetic, geometric })
}

impl ScoreReport {
    pub fn new(config: ScoringConfig, scenarios: Vec<ScenarioReport>) -> Result<Self> {
        let scores: Vec<f64> = scenarios.iter().map(|s| s.scenario_score).collect();
        let overall = overall_score(&scores)?;
        Ok(Self {
            config,
            scenarios,
            overall,
        })
    }

    /// Headline score under the configured mean and scale.
    pub fn score(&self) -> f64 {
        self.overall.select(self.config.overall_mean) * self.config.report_scale.factor()
    }

    /// Nested JSON: `scenarios → {id → {models → {id → …}, scenario_score}}` plus `overall`.
    ///
    /// Score fields are multiplied by 100 under the percent scale. `extra`
    /// entries (e.g. the resolved run configuration) are merged at top level.
    pub fn to_json(&self, include_inferences: bool, extra: Map<String, Value>) -> Value {
        let f = self.config.report_scale.factor();
        let mut scenarios = Map::new();
        for s in &self.scenarios {
            let mut models = Map::new();
            for m in &s.models {
                let mut obj = json!({
                    "rt_mean": m.rt_mean * f,
                    "en_mean": m.en_mean * f,
                    "acc_mean": m.acc_mean * f,
                    "model_score": m.model_score * f,
                    "qoe": m.qoe.map(|q| q * f),
                    "n_total": m.n_total,
                    "n_processed": m.n_processed,
                    "n_dropped": m.n_dropped,
                    "n_untriggered": m.n_untriggered,
                    "n_sat": m.n_sat,
                    "n_triggered": m.n_triggered,
                    "accuracy_goal": m.accuracy_goal,
                    "accuracy_requirement": m.accuracy_requirement,
                });
                if include_inferences {
                    obj["inferences"] = serde_json::to_value(&m.inferences).expect("serializable");
                }
                models.insert(m.model.clone(), obj);
            }
            scenarios.insert(
                s.scenario.clone(),
                json!({
                    "hardware": s.hardware,
                    "models": models,
                    "scenario_score": s.scenario_score * f,
                }),
            );
        }
        let mut root = Map::new();
        root.insert("schema_version".into(), json!(REPORT_SCHEMA_VERSION));
        root.insert("scoring".into(), serde_json::to_value(&self.config).expect("serializable"));
        root.insert("scenarios".into(), Value::Object(scenarios));
        root.insert(
            "overall".into(),
            json!({
                "arithmetic": self.overall.arithmetic * f,
                "geometric": self.overall.geometric * f,
                "score": self.score(),
            }),
        );
        root.extend(extra);
        Value::Object(root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rt_score_examples() {
        assert_eq!(rt_score(12.5, 12.5, 10.0), 0.5);
        assert_eq!(rt_score(1e6, 3.0, 0.0), 0.5);
        // 1 / (1 + e^-10) evaluated by hand
        assert!((rt_score(0.0, 1000.0, 10.0) - 0.999_954_602_131_297_6).abs() < 1e-15);
        assert_eq!(rt_score(1e12, 0.0, 10.0), 1.0 / (1.0 + 700f64.exp()));
        assert!(rt_score(-1e12, 0.0, 10.0) == 1.0);
    }

    #[test]
    fn energy_score_examples() {
        assert_eq!(energy_score(0.0, 8.0).unwrap(), 1.0);
        assert_eq!(energy_score(8.0, 8.0).unwrap(), 0.0);
        assert_eq!(energy_score(4.0, 8.0).unwrap(), 0.5);
        assert!(energy_score(9.0, 8.0).is_err());
        assert!(energy_score(1.0, 0.0).is_err());
    }

    #[test]
    fn accuracy_score_examples() {
        assert_eq!(accuracy_score(5.0, 5.0, MetricDirection::HigherIsBetter).unwrap(), 1.0);
        let s = accuracy_score(85.60, 89.88, MetricDirection::HigherIsBetter).unwrap();
        assert!((s - 0.952_380_952_380_952_4).abs() < 1e-12);
        assert_eq!(accuracy_score(120.0, 100.0, MetricDirection::HigherIsBetter).unwrap(), 1.0);
        assert_eq!(accuracy_score(4.0, 2.0, MetricDirection::LowerIsBetter).unwrap(), 0.5);
        assert!(accuracy_score(1.0, 0.0, MetricDirection::HigherIsBetter).is_err());
        assert!(accuracy_score(0.0, 1.0, MetricDirection::LowerIsBetter).is_err());
    }

    #[test]
    fn qoe_examples() {
        assert_eq!(qoe_score(30, 30).unwrap(), 1.0);
        assert_eq!(qoe_score(0, 30).unwrap(), 0.0);
        assert_eq!(qoe_score(529, 1000).unwrap(), 0.529);
        assert!((qoe_score(977, 1000).unwrap() - (1.0 - 0.023)).abs() < 1e-12);
        assert!(qoe_score(1, 0).is_err());
    }

    #[test]
    fn products_and_means() {
        assert_eq!(per_inference_score(1.0, 1.0, 1.0), 1.0);
        assert!((per_inference_score(0.5, 0.8, 1.0) - 0.4).abs() < 1e-15);
        assert_eq!(per_inference_score(0.0, 0.9, 0.7), 0.0);
        assert_eq!(mean([0.4, 0.6]), Some(0.5));
        assert_eq!(mean([0.8, 0.4]).map(|m| (m * 1e12).round() / 1e12), Some(0.6));
    }

    #[test]
    fn overall_means() {
        let o = overall_score(&[0.3; 4]).unwrap();
        assert!((o.arithmetic - 0.3).abs() < 1e-15 && (o.geometric - 0.3).abs() < 1e-15);
        let o = overall_score(&[1.0, 0.0]).unwrap();
        assert_eq!((o.arithmetic, o.geometric), (0.5, 0.0));
        assert_eq!(overall_score(&[0.5; 7]).unwrap().arithmetic, 0.5);
        assert!(overall_score(&[]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ScoringConfig::new(1.0).validate().is_ok());
        assert!(ScoringConfig::new(0.0).validate().is_err());
        let mut c = ScoringConfig::new(1.0);
        c.k = -1.0;
        assert!(c.validate().is_err());
    }
}
