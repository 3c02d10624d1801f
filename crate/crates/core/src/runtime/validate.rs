use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use super::{match_upstream, EventLog, Status, TimelineEntry};
use crate::time::Ticks;
use crate::workload::{DependencyKind, UsageScenario};

/// A broken schedule constraint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ScheduleViolation {
    /// Two completed inferences overlap on one unit.
    Occupancy { unit: String, first: String, second: String },
    /// A data-dependent inference started before its upstream finished.
    Dependency { edge: String, frame: u64, upstream_end: Ticks, downstream_start: Ticks },
    /// An inference started before its request arrived.
    EarlyStart { request: String, t_req: Ticks, t_start: Ticks },
    /// Entry fields inconsistent with its status.
    Malformed { request: String, reason: String },
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleViolation::Occupancy { unit, first, second } => {
                write!(f, "occupancy: {first} and {second} overlap on unit `{unit}`")
            }
            ScheduleViolation::Dependency { edge, frame, upstream_end, downstream_start } => write!(
                f,
                "dependency: {edge} frame {frame} starts at {downstream_start} before upstream ends at {upstream_end}"
            ),
            ScheduleViolation::EarlyStart { request, t_req, t_start } => {
                write!(f, "early start: {request} starts at {t_start} before its request at {t_req}")
            }
            ScheduleViolation::Malformed { request, reason } => write!(f, "malformed entry {request}: {reason}"),
        }
    }
}

fn label(e: &TimelineEntry) -> String {
    format!("{}#{}", e.request.model, e.request.request_index)
}

/// Checks unit occupancy, data-dependency order and arrival order of a timeline.
pub fn validate_schedule(log: &EventLog, scenario: &UsageScenario) -> Vec<ScheduleViolation> {
    let mut out = Vec::new();

    for e in &log.entries {
        match (e.status, &e.unit, e.t_start, e.t_end) {
            (Status::Completed, Some(_), Some(s), Some(t)) => {
                if t < s {
                    out.push(ScheduleViolation::Malformed {
                        request: label(e),
                        reason: "ends before it starts".into(),
                    });
                }
                if s < e.request.t_req {
                    out.push(ScheduleViolation::EarlyStart {
                        request: label(e),
                        t_req: e.request.t_req,
                        t_start: s,
                    });
                }
            }
            (Status::Completed, ..) => out.push(ScheduleViolation::Malformed {
                request: label(e),
                reason: "completed without unit or times".into(),
            }),
            (_, None, None, None) if e.energy_mj == 0.0 => {}
            _ => out.push(ScheduleViolation::Malformed {
                request: label(e),
                reason: "not completed but carries unit, times or energy".into(),
            }),
        }
    }

    let mut per_unit: BTreeMap<&str, Vec<&TimelineEntry>> = BTreeMap::new();
    for e in log.entries.iter().filter(|e| e.is_completed()) {
        if let Some(u) = &e.unit {
            per_unit.entry(u.as_str()).or_default().push(e);
        }
    }
    for (unit, mut runs) in per_unit {
        runs.sort_by_key(|e| (e.t_start, e.t_end));
        for w in runs.windows(2) {
            if let (Some(end), Some(next_start)) = (w[0].t_end, w[1].t_start) {
                if next_start < end {
                    out.push(ScheduleViolation::Occupancy {
                        unit: unit.to_string(),
                        first: label(w[0]),
                        second: label(w[1]),
                    });
                }
            }
        }
    }

    let mut by_model: HashMap<&str, Vec<&TimelineEntry>> = HashMap::new();
    for e in &log.entries {
        by_model.entry(e.request.model.as_str()).or_default().push(e);
    }
    for v in by_model.values_mut() {
        v.sort_by_key(|e| e.request.frame_index);
    }
    for edge in scenario.edges().filter(|d| d.kind == DependencyKind::Data) {
        let (Some(ups), Some(downs)) = (by_model.get(edge.upstream.as_str()), by_model.get(edge.downstream.as_str()))
        else {
            continue;
        };
        let frames: Vec<u64> = ups.iter().map(|e| e.request.frame_index).collect();
        for d in downs.iter().filter(|d| d.is_completed()) {
            let up = match_upstream(&frames, d.request.frame_index).map(|k| ups[k]);
            let upstream_end = up.filter(|u| u.is_completed()).and_then(|u| u.t_end);
            match (upstream_end, d.t_start) {
                (Some(end), Some(start)) if start >= end => {}
                (end, start) => out.push(ScheduleViolation::Dependency {
                    edge: edge.id(),
                    frame: d.request.frame_index,
                    upstream_end: end.unwrap_or(Ticks(i64::MAX)),
                    downstream_start: start.unwrap_or_default(),
                }),
            }
        }
    }
    out
}
