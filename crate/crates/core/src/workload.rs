//! Models, input sources, usage scenarios and the built-in benchmark suite.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Version tag written into every suite file.
pub const SUITE_SCHEMA_VERSION: u32 = 1;

/// A sensor stream feeding one or more models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSource {
    pub id: String,
    #[serde(default)]
    pub input_type: String,
    /// Frames per second.
    pub streaming_rate: f64,
    /// Delay before frame 0 arrives, in milliseconds.
    #[serde(default)]
    pub init_latency_ms: f64,
    /// Bound on the arrival perturbation of each frame, in milliseconds.
    #[serde(default)]
    pub max_jitter_ms: f64,
}

impl InputSource {
    pub fn frame_period_ms(&self) -> f64 {
        1_000.0 / self.streaming_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricDirection {
    HigherIsBetter,
    LowerIsBetter,
}

/// A unit ML model. The model is never executed; its achieved metric is configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitModel {
    pub id: String,
    #[serde(default)]
    pub task: String,
    pub input_sources: Vec<String>,
    #[serde(default)]
    pub dataset: String,
    #[serde(default)]
    pub accuracy_metric: String,
    /// Metric value published for the reference model.
    pub reported_metric: f64,
    pub metric_direction: MetricDirection,
    /// Metric value this run claims to achieve. `None` means "meets the goal".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub achieved_metric: Option<f64>,
    /// Operations per inference, used by the synthetic cost generator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flops: Option<f64>,
}

impl UnitModel {
    /// Minimum acceptable metric: 95% of the reported value, or 105% for error metrics.
    ///
    /// Reported for completeness only; scoring uses [`accuracy_goal`].
    pub fn accuracy_requirement(&self) -> f64 {
        match self.metric_direction {
            MetricDirection::HigherIsBetter => 0.95 * self.reported_metric,
            MetricDirection::LowerIsBetter => 1.05 * self.reported_metric,
        }
    }

    /// The configured achieved metric, defaulting to the goal.
    pub fn achieved(&self) -> Result<f64> {
        match self.achieved_metric {
            Some(v) => Ok(v),
            None => accuracy_goal(self),
        }
    }
}

/// Accuracy goal used by the accuracy score: 105% of the reported metric, or
/// 95% when the metric is an error (lower is better).
pub fn accuracy_goal(model: &UnitModel) -> Result<f64> {
    if !model.reported_metric.is_finite() {
        return Err(Error::InvalidModel {
            model: model.id.clone(),
            reason: format!("reported metric {} is not finite", model.reported_metric),
        });
    }
    Ok(match model.metric_direction {
        MetricDirection::HigherIsBetter => 1.05 * model.reported_metric,
        MetricDirection::LowerIsBetter => 0.95 * model.reported_metric,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DependencyKind {
    /// Downstream consumes the upstream output of the same frame.
    Data,
    /// Downstream is conditionally triggered by the upstream result.
    Control,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencyEdge {
    pub upstream: String,
    pub downstream: String,
    pub kind: DependencyKind,
    #[serde(default = "one")]
    pub trigger_probability: f64,
}

impl DependencyEdge {
    pub fn data(upstream: &str, downstream: &str) -> Self {
        Self {
            upstream: upstream.into(),
            downstream: downstream.into(),
            kind: DependencyKind::Data,
            trigger_probability: 1.0,
        }
    }

    pub fn control(upstream: &str, downstream: &str, trigger_probability: f64) -> Self {
        Self {
            upstream: upstream.into(),
            downstream: downstream.into(),
            kind: DependencyKind::Control,
            trigger_probability,
        }
    }

    /// Stable identifier, `UPSTREAM->DOWNSTREAM`.
    pub fn id(&self) -> String {
        format!("{}->{}", self.upstream, self.downstream)
    }
}

/// One active model instance inside a scenario.
///
/// `id` names the instance; `model` names the [`UnitModel`] it runs. They are
/// equal unless a scenario runs several pipelines of the same model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEntry {
    pub id: String,
    pub model: String,
    /// Target inferences per second.
    pub target_rate: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dependencies: Vec<DependencyEdge>,
}

impl ScenarioEntry {
    pub fn new(model: &str, target_rate: f64) -> Self {
        Self {
            id: model.into(),
            model: model.into(),
            target_rate,
            dependencies: Vec::new(),
        }
    }

    pub fn with_dependency(mut self, edge: DependencyEdge) -> Self {
        self.dependencies.push(edge);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageScenario {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub entries: Vec<ScenarioEntry>,
}

impl UsageScenario {
    pub fn entry(&self, id: &str) -> Option<&ScenarioEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn edges(&self) -> impl Iterator<Item = &DependencyEdge> {
        self.entries.iter().flat_map(|e| e.dependencies.iter())
    }

    pub fn edge_mut(&mut self, edge_id: &str) -> Option<&mut DependencyEdge> {
        self.entries
            .iter_mut()
            .flat_map(|e| e.dependencies.iter_mut())
            .find(|d| d.id() == edge_id)
    }
}

/// A collection of scenarios together with the sources and models they reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSuite {
    pub schema_version: u32,
    pub input_sources: Vec<InputSource>,
    pub models: Vec<UnitModel>,
    pub scenarios: Vec<UsageScenario>,
}

impl BenchmarkSuite {
    pub fn from_json(text: &str) -> Result<Self> {
        let suite: BenchmarkSuite = serde_json::from_str(text)?;
        if suite.schema_version != SUITE_SCHEMA_VERSION {
            return Err(Error::config(format!(
                "unsupported suite schema_version {} (expected {SUITE_SCHEMA_VERSION})",
                suite.schema_version
            )));
        }
        Ok(suite)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("suite serializes")
    }

    pub fn scenario(&self, id: &str) -> Option<&UsageScenario> {
        self.scenarios.iter().find(|s| s.id == id)
    }

    pub fn model(&self, id: &str) -> Option<&UnitModel> {
        self.models.iter().find(|m| m.id == id)
    }

    pub fn source(&self, id: &str) -> Option<&InputSource> {
        self.input_sources.iter().find(|s| s.id == id)
    }

    /// Validates every scenario plus suite-level invariants.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for s in &self.scenarios {
            if !seen.insert(s.id.as_str()) {
                out.push(Violation::DuplicateScenario(s.id.clone()));
            }
        }
        if self.scenarios.is_empty() {
            out.push(Violation::EmptySuite);
        }
        for src in &self.input_sources {
            if !(src.streaming_rate > 0.0) {
                out.push(Violation::InvalidSource {
                    source: src.id.clone(),
                    reason: format!("streaming rate {} must be positive", src.streaming_rate),
                });
            }
            if !(src.max_jitter_ms >= 0.0) || !(src.init_latency_ms >= 0.0) {
                out.push(Violation::InvalidSource {
                    source: src.id.clone(),
                    reason: "jitter and init latency must be non-negative".into(),
                });
            }
        }
        for s in &self.scenarios {
            out.extend(validate_scenario(s, &self.input_sources, &self.models));
        }
        out
    }
}

/// A violated scenario invariant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Violation {
    EmptySuite,
    EmptyScenario(String),
    DuplicateScenario(String),
    DuplicateEntry { scenario: String, entry: String },
    InvalidSource { source: String, reason: String },
    UnknownModel { entry: String, model: String },
    UnknownSource { model: String, source: String },
    NonPositiveRate { entry: String },
    RateExceedsSource { entry: String, rate: String, source: String, source_rate: String },
    DanglingDependency { downstream: String, upstream: String },
    MisplacedEdge { entry: String, edge: String },
    InvalidProbability { edge: String },
    SourceMismatch { edge: String },
    Cycle { scenario: String, members: Vec<String> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptySuite => write!(f, "suite has no scenarios"),
            Violation::EmptyScenario(s) => write!(f, "scenario `{s}` has no entries"),
            Violation::DuplicateScenario(s) => write!(f, "duplicate scenario id `{s}`"),
            Violation::DuplicateEntry { scenario, entry } => {
                write!(f, "duplicate entry `{entry}` in scenario `{scenario}`")
            }
            Violation::InvalidSource { source, reason } => {
                write!(f, "invalid input source `{source}`: {reason}")
            }
            Violation::UnknownModel { entry, model } => {
                write!(f, "entry `{entry}` references unknown model `{model}`")
            }
            Violation::UnknownSource { model, source } => {
                write!(f, "model `{model}` references unknown source `{source}`")
            }
            Violation::NonPositiveRate { entry } => {
                write!(f, "entry `{entry}` has a non-positive target rate")
            }
            Violation::RateExceedsSource { entry, rate, source, source_rate } => write!(
                f,
                "rate exceeds source: `{entry}` targets {rate} Hz but `{source}` streams at {source_rate} FPS"
            ),
            Violation::DanglingDependency { downstream, upstream } => write!(
                f,
                "dangling dependency: `{downstream}` depends on `{upstream}`, which is not in the scenario"
            ),
            Violation::MisplacedEdge { entry, edge } => {
                write!(f, "edge `{edge}` is listed under `{entry}` but does not point at it")
            }
            Violation::InvalidProbability { edge } => {
                write!(f, "edge `{edge}` has a trigger probability outside [0, 1]")
            }
            Violation::SourceMismatch { edge } => write!(
                f,
                "edge `{edge}` joins models whose primary input sources differ"
            ),
            Violation::Cycle { scenario, members } => write!(
                f,
                "dependency cycle in scenario `{scenario}` through {}",
                members.join(", ")
            ),
        }
    }
}

/// Checks one scenario against the source and model catalogs.
///
/// Returns every violation found; an empty vector means the scenario is valid.
pub fn validate_scenario(
    scenario: &UsageScenario,
    sources: &[InputSource],
    models: &[UnitModel],
) -> Vec<Violation> {
    let mut out = Vec::new();
    let sources: HashMap<&str, &InputSource> = sources.iter().map(|s| (s.id.as_str(), s)).collect();
    let models: HashMap<&str, &UnitModel> = models.iter().map(|m| (m.id.as_str(), m)).collect();

    if scenario.entries.is_empty() {
        out.push(Violation::EmptyScenario(scenario.id.clone()));
    }

    let mut entries: HashMap<&str, &ScenarioEntry> = HashMap::new();
    for e in &scenario.entries {
        if entries.insert(e.id.as_str(), e).is_some() {
            out.push(Violation::DuplicateEntry {
                scenario: scenario.id.clone(),
                entry: e.id.clone(),
            });
        }
    }

    for e in &scenario.entries {
        if !(e.target_rate > 0.0) || !e.target_rate.is_finite() {
            out.push(Violation::NonPositiveRate { entry: e.id.clone() });
        }
        match models.get(e.model.as_str()) {
            None => out.push(Violation::UnknownModel {
                entry: e.id.clone(),
                model: e.model.clone(),
            }),
            Some(m) => {
                for sid in &m.input_sources {
                    match sources.get(sid.as_str()) {
                        None => out.push(Violation::UnknownSource {
                            model: m.id.clone(),
                            source: sid.clone(),
                        }),
                        Some(src) if e.target_rate > src.streaming_rate => {
                            out.push(Violation::RateExceedsSource {
                                entry: e.id.clone(),
                                rate: e.target_rate.to_string(),
                                source: src.id.clone(),
                                source_rate: src.streaming_rate.to_string(),
                            })
                        }
                        Some(_) => {}
                    }
                }
                if m.input_sources.is_empty() {
                    out.push(Violation::UnknownSource {
                        model: m.id.clone(),
                        source: String::new(),
                    });
                }
            }
        }
        for d in &e.dependencies {
            if d.downstream != e.id {
                out.push(Violation::MisplacedEdge {
                    entry: e.id.clone(),
                    edge: d.id(),
                });
            }
            if !(0.0..=1.0).contains(&d.trigger_probability) {
                out.push(Violation::InvalidProbability { edge: d.id() });
            }
            match entries.get(d.upstream.as_str()) {
                None => out.push(Violation::DanglingDependency {
                    downstream: e.id.clone(),
                    upstream: d.upstream.clone(),
                }),
                Some(up) => {
                    let primary = |entry: &ScenarioEntry| {
                        models
                            .get(entry.model.as_str())
                            .and_then(|m| m.input_sources.first().cloned())
                    };
                    if let (Some(a), Some(b)) = (primary(up), primary(e)) {
                        if a != b {
                            out.push(Violation::SourceMismatch { edge: d.id() });
                        }
                    }
                }
            }
        }
    }

    if let Some(members) = find_cycle(scenario) {
        out.push(Violation::Cycle {
            scenario: scenario.id.clone(),
            members,
        });
    }
    out
}

/// Kahn's algorithm; returns the entries left over when no topological order exists.
fn find_cycle(scenario: &UsageScenario) -> Option<Vec<String>> {
    let ids: BTreeSet<&str> = scenario.entries.iter().map(|e| e.id.as_str()).collect();
    let mut indegree: BTreeMap<&str, usize> = ids.iter().map(|&id| (id, 0)).collect();
    let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for e in &scenario.entries {
        for d in &e.dependencies {
            if ids.contains(d.upstream.as_str()) {
                *indegree.get_mut(e.id.as_str()).unwrap() += 1;
                children.entry(d.upstream.as_str()).or_default().push(e.id.as_str());
            }
        }
    }
    let mut ready: Vec<&str> = indegree.iter().filter(|(_, &d)| d == 0).map(|(&id, _)| id).collect();
    while let Some(id) = ready.pop() {
        indegree.remove(id);
        for &c in children.get(id).map(Vec::as_slice).unwrap_or_default() {
            if let Some(d) = indegree.get_mut(c) {
                *d -= 1;
                if *d == 0 {
                    ready.push(c);
                }
            }
        }
    }
    if indegree.is_empty() {
        None
    } else {
        Some(indegree.keys().map(|s| s.to_string()).collect())
    }
}

fn source(id: &str, input_type: &str, rate: f64, jitter_ms: f64) -> InputSource {
    InputSource {
        id: id.into(),
        input_type: input_type.into(),
        streaming_rate: rate,
        init_latency_ms: 0.0,
        max_jitter_ms: jitter_ms,
    }
}

#[allow(clippy::too_many_arguments)]
fn model(
    id: &str,
    task: &str,
    sources: &[&str],
    dataset: &str,
    metric: &str,
    reported: f64,
    direction: MetricDirection,
    gflops: f64,
) -> UnitModel {
    UnitModel {
        id: id.into(),
        task: task.into(),
        input_sources: sources.iter().map(|s| s.to_string()).collect(),
        dataset: dataset.into(),
        accuracy_metric: metric.into(),
        reported_metric: reported,
        metric_direction: direction,
        achieved_metric: None,
        flops: Some(gflops * 1e9),
    }
}

/// Trigger probability for keyword-gated speech recognition in outdoor scenarios.
pub const OUTDOOR_KEYWORD_PROBABILITY: f64 = 0.2;
/// Trigger probability for keyword-gated speech recognition in the AR assistant.
pub const ASSISTANT_KEYWORD_PROBABILITY: f64 = 0.5;

/// The built-in catalog: three input sources, eleven unit models and seven scenarios.
///
/// FLOP counts are synthetic placeholders for the roofline cost generator.
pub fn builtin_suite() -> BenchmarkSuite {
    use MetricDirection::{HigherIsBetter as Gt, LowerIsBetter as Lt};

    let input_sources = vec![
        source("camera", "Images", 60.0, 0.05),
        source("lidar", "Sparse Depth Points", 60.0, 0.05),
        source("microphone", "Audio", 3.0, 0.1),
    ];

    let models = vec![
        model("HT", "Hand Tracking", &["camera"], "Stereo Hand Pose", "AUC PCK", 0.948, Gt, 10.0),
        model("ES", "Eye Segmentation", &["camera"], "OpenEDS 2019", "mIoU", 90.54, Gt, 4.5),
        model("GE", "Gaze Estimation", &["camera"], "OpenEDS 2020", "Angular Error", 3.39, Lt, 2.0),
        model("KD", "Keyword Detection", &["microphone"], "Google Speech Cmd", "Accuracy", 85.60, Gt, 0.5),
        model("SR", "Speech Recognition", &["microphone"], "LibriSpeech", "WER (others)", 8.79, Lt, 4.0),
        model("SS", "Semantic Segmentation", &["camera"], "Cityscape", "mIoU", 77.54, Gt, 20.0),
        model("OD", "Object Detection", &["camera"], "COCO", "boxAP", 21.84, Gt, 3.0),
        model("AS", "Action Segmentation", &["camera"], "GTEA", "Accuracy", 60.8, Gt, 1.5),
        model("DE", "Depth Estimation", &["camera"], "KITTI", "delta>1.25", 22.9, Lt, 15.0),
        model("DR", "Depth Refinement", &["camera", "lidar"], "KITTI", "delta1", 85.5, Gt, 8.0),
        model("PD", "Plane Detection", &["camera"], "KITTI", "AP@0.6m", 0.37, Gt, 30.0),
    ];

    let e = ScenarioEntry::new;
    let gaze = || e("GE", 60.0).with_dependency(DependencyEdge::data("ES", "GE"));
    let speech = |p| e("SR", 3.0).with_dependency(DependencyEdge::control("KD", "SR", p));
    let scenario = |id: &str, name: &str, entries: Vec<ScenarioEntry>| UsageScenario {
        id: id.into(),
        name: name.into(),
        entries,
    };

    let scenarios = vec![
        scenario(
            "social_interaction_a",
            "Social Interaction A",
            vec![e("HT", 30.0), e("ES", 60.0), gaze(), e("DR", 30.0)],
        ),
        scenario(
            "social_interaction_b",
            "Social Interaction B",
            vec![e("ES", 60.0), gaze(), e("AS", 30.0)],
        ),
        scenario(
            "outdoor_activity_a",
            "Outdoor Activity A",
            vec![
                e("KD", 3.0),
                speech(OUTDOOR_KEYWORD_PROBABILITY),
                e("SS", 10.0),
                e("OD", 30.0),
            ],
        ),
        scenario(
            "outdoor_activity_b",
            "Outdoor Activity B",
            vec![e("KD", 3.0), speech(OUTDOOR_KEYWORD_PROBABILITY), e("OD", 30.0)],
        ),
        scenario(
            "ar_assistant",
            "AR Assistant",
            vec![
                e("KD", 3.0),
                speech(ASSISTANT_KEYWORD_PROBABILITY),
                e("SS", 10.0),
                e("OD", 10.0),
                e("DE", 30.0),
                e("PD", 30.0),
            ],
        ),
        scenario(
            "ar_gaming",
            "AR Gaming",
            vec![e("HT", 45.0), e("DE", 30.0), e("PD", 30.0)],
        ),
        scenario(
            "vr_gaming",
            "VR Gaming",
            vec![e("HT", 45.0), e("ES", 60.0), gaze()],
        ),
    ];

    BenchmarkSuite {
        schema_version: SUITE_SCHEMA_VERSION,
        input_sources,
        models,
        scenarios,
    }
}
