//! Scheduling policies: which ready request a freed unit runs next.

use crate::costmodel::HardwareUnit;
use crate::error::{Error, Result};
use crate::loadgen::InferenceRequest;
use crate::time::Ticks;
use crate::workload::UsageScenario;

/// A ready request as seen by a policy choosing for one unit.
#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    pub request: &'a InferenceRequest,
    /// Position of the request's model in the scenario entry list.
    pub entry_index: usize,
    /// Latency of this request on the unit being scheduled.
    pub latency: Ticks,
}

/// Picks the next request for a free unit.
///
/// Implementations must be deterministic: the same candidates, unit and
/// internal state must always yield the same choice.
pub trait SchedulerPolicy {
    fn name(&self) -> &str;

    /// Called once before a simulation starts.
    fn reset(&mut self, _scenario: &UsageScenario, _unit_count: usize) {}

    /// Returns an index into `candidates`, which is never empty and is sorted
    /// by `(entry_index, frame_index)`.
    fn choose(&mut self, unit_index: usize, unit: &HardwareUnit, candidates: &[Candidate<'_>]) -> usize;
}

/// Shortest latency on the freed unit; ties go to the earlier deadline, then `(model, frame)`.
#[derive(Debug, Default, Clone)]
pub struct LatencyGreedy;

impl SchedulerPolicy for LatencyGreedy {
    fn name(&self) -> &str {
        "latency-greedy"
    }

    fn choose(&mut self, _unit_index: usize, _unit: &HardwareUnit, candidates: &[Candidate<'_>]) -> usize {
        candidates
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (a.latency, a.request.t_dl, &a.request.model, a.request.frame_index).cmp(&(
                    b.latency,
                    b.request.t_dl,
                    &b.request.model,
                    b.request.frame_index,
                ))
            })
            .map(|(i, _)| i)
            .expect("candidates are non-empty")
    }
}

/// Cycles a per-unit cursor over the scenario's model list.
#[derive(Debug, Default, Clone)]
pub struct RoundRobin {
    cursors: Vec<Option<usize>>,
}

impl RoundRobin {
    pub fn cursor(&self, unit_index: usize) -> Option<usize> {
        self.cursors.get(unit_index).copied().flatten()
    }

    /// Positions the cursor as if `entry_index` was served last on `unit_index`.
    pub fn set_cursor(&mut self, unit_index: usize, entry_index: Option<usize>) {
        if self.cursors.len() <= unit_index {
            self.cursors.resize(unit_index + 1, None);
        }
        self.cursors[unit_index] = entry_index;
    }
}

impl SchedulerPolicy for RoundRobin {
    fn name(&self) -> &str {
        "round-robin"
    }

    fn reset(&mut self, _scenario: &UsageScenario, unit_count: usize) {
        self.cursors = vec![None; unit_count];
    }

    fn choose(&mut self, unit_index: usize, _unit: &HardwareUnit, candidates: &[Candidate<'_>]) -> usize {
        let after = |c: &Candidate<'_>| match self.cursor(unit_index) {
            Some(cur) => c.entry_index > cur,
            None => true,
        };
        // candidates are sorted, so the first hit is the lowest frame of the next model
        let pick = candidates.iter().position(after).unwrap_or(0);
        self.set_cursor(unit_index, Some(candidates[pick].entry_index));
        pick
    }
}

pub const POLICY_NAMES: [&str; 2] = ["latency-greedy", "round-robin"];

pub fn policy_by_name(name: &str) -> Result<Box<dyn SchedulerPolicy + Send>> {
    match name {
        "latency-greedy" => Ok(Box::new(LatencyGreedy)),
        "round-robin" => Ok(Box::new(RoundRobin::default())),
        other => Err(Error::Config(format!(
            "unknown scheduler policy `{other}` (expected one of {POLICY_NAMES:?})"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::preset;

    fn req(model: &str, frame: u64, dl_ms: f64) -> InferenceRequest {
        InferenceRequest {
            model: model.into(),
            frame_index: frame,
            request_index: frame,
            t_req: Ticks::ZERO,
            t_dl: Ticks::from_ms(dl_ms),
        }
    }

    fn cands<'a>(reqs: &'a [(InferenceRequest, usize, f64)]) -> Vec<Candidate<'a>> {
        reqs.iter()
            .map(|(r, e, lat)| Candidate { request: r, entry_index: *e, latency: Ticks::from_ms(*lat) })
            .collect()
    }

    #[test]
    fn greedy_picks_shortest_then_deadline() {
        let unit = &preset('A', 4096).unwrap().units[0];
        let mut p = LatencyGreedy;
        let rs = [(req("A", 0, 10.0), 0, 2.0), (req("B", 0, 10.0), 1, 5.0)];
        assert_eq!(p.choose(0, unit, &cands(&rs)), 0);
        let rs = [(req("A", 0, 10.0), 0, 5.0), (req("B", 0, 8.0), 1, 5.0)];
        assert_eq!(p.choose(0, unit, &cands(&rs)), 1);
        let rs = [(req("A", 0, 10.0), 0, 5.0)];
        assert_eq!(p.choose(0, unit, &cands(&rs)), 0);
    }

    #[test]
    fn round_robin_cursor() {
        let unit = &preset('A', 4096).unwrap().units[0];
        let mut p = RoundRobin::default();
        // models [A, B, C], cursor after A, ready {A, C} -> C
        p.set_cursor(0, Some(0));
        let rs = [(req("A", 4, 10.0), 0, 1.0), (req("C", 2, 10.0), 2, 1.0)];
        assert_eq!(p.choose(0, unit, &cands(&rs)), 1);
        // only A ready -> A regardless of cursor
        p.set_cursor(0, Some(1));
        let only_a = [(req("A", 4, 10.0), 0, 1.0)];
        assert_eq!(p.choose(0, unit, &cands(&only_a)), 0);
        // cursor at the end wraps to the head
        p.set_cursor(0, Some(2));
        let rs = [(req("A", 4, 10.0), 0, 1.0), (req("B", 4, 10.0), 1, 1.0)];
        assert_eq!(p.choose(0, unit, &cands(&rs)), 0);
        assert_eq!(p.cursor(0), Some(0));
    }

    #[test]
    fn names() {
        for n in POLICY_NAMES {
            assert_eq!(policy_by_name(n).unwrap().name(), n);
        }
        assert!(policy_by_name("edf").is_err());
    }
}
