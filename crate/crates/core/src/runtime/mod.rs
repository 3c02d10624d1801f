//! Discrete-event dispatcher.
//!
//! [`simulate`] replays a [`RequestStream`] against a [`HardwareSystem`]:
//! requests arrive, wait for their upstream results and control gates, and
//! run non-preemptively on whichever unit the policy assigns them. A request
//! that has not launched when the next request of the same model arrives is
//! dropped; the last request of each model is dropped if still unlaunched at
//! the later of the window end and its deadline.

mod log;
mod policy;
mod validate;

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

pub use self::log::{EventLog, LOG_SCHEMA_VERSION};
pub use self::policy::{policy_by_name, Candidate, LatencyGreedy, RoundRobin, SchedulerPolicy, POLICY_NAMES};
pub use self::validate::{validate_schedule, ScheduleViolation};

use crate::costmodel::{CostTable, HardwareSystem};
use crate::error::{Error, Result};
use crate::loadgen::{det_rand, InferenceRequest, RequestStream};
use crate::time::Ticks;
use crate::workload::{DependencyEdge, UsageScenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Completed,
    /// Superseded before launch, or its upstream was dropped.
    Dropped,
    /// A control gate on its upstream fired false.
    Untriggered,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Completed => "completed",
            Status::Dropped => "dropped",
            Status::Untriggered => "untriggered",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "completed" => Some(Status::Completed),
            "dropped" => Some(Status::Dropped),
            "untriggered" => Some(Status::Untriggered),
            _ => None,
        }
    }
}

/// The fate of one request.
#[derive(Debug, Clone, PartialEq)]
pub struct TimelineEntry {
    pub request: InferenceRequest,
    pub unit: Option<String>,
    pub t_start: Option<Ticks>,
    pub t_end: Option<Ticks>,
    pub status: Status,
    pub energy_mj: f64,
}

impl TimelineEntry {
    pub fn is_completed(&self) -> bool {
        self.status == Status::Completed
    }

    pub fn t_start_ms(&self) -> Option<f64> {
        self.t_start.map(Ticks::as_ms)
    }

    pub fn t_end_ms(&self) -> Option<f64> {
        self.t_end.map(Ticks::as_ms)
    }

    /// Completed no later than its deadline.
    pub fn met_deadline(&self) -> bool {
        self.is_completed() && self.t_end.is_some_and(|end| end <= self.request.t_dl)
    }
}

/// Per-model request accounting.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelCounts {
    pub model: String,
    pub n_total: u64,
    pub n_processed: u64,
    pub n_dropped: u64,
    pub n_untriggered: u64,
    /// Completed within deadline.
    pub n_sat: u64,
    /// Requests whose upstream results all arrived and whose gates all fired.
    /// Equals `n_total` for models without dependencies.
    pub n_triggered: u64,
}

/// Index of the upstream request feeding a downstream request on `frame`:
/// the latest upstream frame at or before it. `upstream_frames` is ascending.
pub fn match_upstream(upstream_frames: &[u64], frame: u64) -> Option<usize> {
    upstream_frames.partition_point(|&f| f <= frame).checked_sub(1)
}

/// Gate outcome of `edge` for the downstream request on `frame`.
pub fn eval_control_gate(edge: &DependencyEdge, frame: u64, seed: u64) -> bool {
    det_rand(seed, &edge.id(), frame) < edge.trigger_probability
}

/// Pairs every downstream request with its upstream request, per edge.
///
/// Returns, per stream index, `(edge, upstream stream index)` pairs, or `None`
/// for an edge with no upstream request at or before the downstream frame.
pub(crate) fn link_dependencies<'a>(
    scenario: &'a UsageScenario,
    requests: &[InferenceRequest],
) -> Vec<Vec<(&'a DependencyEdge, Option<usize>)>> {
    let mut by_model: HashMap<&str, Vec<(u64, usize)>> = HashMap::new();
    for (i, r) in requests.iter().enumerate() {
        by_model.entry(r.model.as_str()).or_default().push((r.frame_index, i));
    }
    for v in by_model.values_mut() {
        v.sort_unstable();
    }
    let edges: HashMap<&str, &Vec<DependencyEdge>> = scenario
        .entries
        .iter()
        .map(|e| (e.id.as_str(), &e.dependencies))
        .collect();
    requests
        .iter()
        .map(|r| {
            edges
                .get(r.model.as_str())
                .map(|deps| {
                    deps.iter()
                        .map(|edge| {
                            let ups = by_model.get(edge.upstream.as_str()).map(Vec::as_slice).unwrap_or(&[]);
                            let frames: Vec<u64> = ups.iter().map(|&(f, _)| f).collect();
                            (edge, match_upstream(&frames, r.frame_index).map(|k| ups[k].1))
                        })
                        .collect()
                })
                .unwrap_or_default()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Waiting,
    Running,
    Done(Status),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    Complete { unit: usize, req: usize },
    Arrive { req: usize },
    Close { req: usize },
}

impl EventKind {
    // completions free units before same-tick arrivals supersede anything
    fn class(&self) -> u8 {
        match self {
            EventKind::Complete { .. } => 0,
            EventKind::Arrive { .. } => 1,
            EventKind::Close { .. } => 2,
        }
    }
}

type Event = Reverse<(Ticks, u8, u64, EventKind)>;

struct Sim<'a> {
    requests: &'a [InferenceRequest],
    seed: u64,
    entry_of: Vec<usize>,
    state: Vec<State>,
    arrived: Vec<bool>,
    deps_pending: Vec<usize>,
    gate_failed: Vec<bool>,
    dependents: Vec<Vec<(&'a DependencyEdge, usize)>>,
    predecessor: Vec<Option<usize>>,
    unit_of: Vec<Option<usize>>,
    t_start: Vec<Option<Ticks>>,
    t_end: Vec<Option<Ticks>>,
    triggered: Vec<bool>,
    /// Arrived, waiting requests; a candidate once `deps_pending` hits zero.
    pending: BTreeSet<(usize, u64, usize)>,
    unit_busy: Vec<bool>,
    /// `[entry][unit]` latency, `None` when the unit may not run the model.
    latency: Vec<Vec<Option<Ticks>>>,
    energy: Vec<Vec<f64>>,
    queue: BinaryHeap<Event>,
    seq: u64,
}

impl<'a> Sim<'a> {
    fn push(&mut self, at: Ticks, kind: EventKind) {
        self.seq += 1;
        self.queue.push(Reverse((at, kind.class(), self.seq, kind)));
    }

    fn pending_key(&self, req: usize) -> (usize, u64, usize) {
        (self.entry_of[req], self.requests[req].frame_index, req)
    }

    /// Marks `req` terminal and propagates to waiting dependents.
    fn finish(&mut self, req: usize, status: Status) {
        if self.state[req] != State::Waiting {
            return;
        }
        self.state[req] = State::Done(status);
        let key = self.pending_key(req);
        self.pending.remove(&key);
        let dependents = self.dependents[req].clone();
        for (_, d) in dependents {
            self.finish(d, status);
        }
    }

    fn on_complete(&mut self, now: Ticks, unit: usize, req: usize) {
        self.unit_busy[unit] = false;
        self.state[req] = State::Done(Status::Completed);
        self.t_end[req] = Some(now);
        let dependents = self.dependents[req].clone();
        for (edge, d) in dependents {
            self.deps_pending[d] -= 1;
            if !eval_control_gate(edge, self.requests[d].frame_index, self.seed) {
                self.gate_failed[d] = true;
            }
            if self.gate_failed[d] {
                self.finish(d, Status::Untriggered);
            } else if self.deps_pending[d] == 0 {
                self.triggered[d] = true;
            }
        }
    }

    fn on_arrive(&mut self, req: usize) {
        self.arrived[req] = true;
        if let Some(prev) = self.predecessor[req] {
            if self.state[prev] == State::Waiting {
                self.finish(prev, Status::Dropped);
            }
        }
        if self.state[req] == State::Waiting {
            let key = self.pending_key(req);
            self.pending.insert(key);
        }
    }

    fn dispatch(&mut self, now: Ticks, hw: &HardwareSystem, order: &[usize], policy: &mut dyn SchedulerPolicy) {
        for &u in order {
            if self.unit_busy[u] {
                continue;
            }
            let ready: Vec<(usize, Ticks)> = self
                .pending
                .iter()
                .filter(|&&(_, _, r)| self.deps_pending[r] == 0)
                .filter_map(|&(e, _, r)| self.latency[e][u].map(|lat| (r, lat)))
                .collect();
            if ready.is_empty() {
                continue;
            }
            let candidates: Vec<Candidate<'_>> = ready
                .iter()
                .map(|&(r, latency)| Candidate {
                    request: &self.requests[r],
                    entry_index: self.entry_of[r],
                    latency,
                })
                .collect();
            let pick = policy.choose(u, &hw.units[u], &candidates);
            let (req, lat) = ready[pick];
            let key = self.pending_key(req);
            self.pending.remove(&key);
            self.state[req] = State::Running;
            self.unit_of[req] = Some(u);
            self.t_start[req] = Some(now);
            self.unit_busy[u] = true;
            self.push(now + lat, EventKind::Complete { unit: u, req });
        }
    }
}

/// Runs one scenario's request stream on `hw` and returns the timeline.
///
/// Every (model, unit) pair the hardware allows must have a cost entry;
/// a missing one is reported before any event is processed.
pub fn simulate(
    scenario: &UsageScenario,
    stream: &RequestStream,
    hw: &HardwareSystem,
    costs: &CostTable,
    policy: &mut dyn SchedulerPolicy,
    seed: u64,
) -> Result<EventLog> {
    hw.validate()?;
    let mut latency = Vec::with_capacity(scenario.entries.len());
    let mut energy = Vec::with_capacity(scenario.entries.len());
    for entry in &scenario.entries {
        let mut lat_row = Vec::with_capacity(hw.units.len());
        let mut en_row = Vec::with_capacity(hw.units.len());
        for unit in &hw.units {
            if unit.can_run(&entry.model) {
                let c = costs.lookup_cost(&entry.model, &unit.id)?;
                lat_row.push(Some(Ticks::from_ms(c.latency_ms).max(Ticks(1))));
                en_row.push(c.energy_mj);
            } else {
                lat_row.push(None);
                en_row.push(0.0);
            }
        }
        if lat_row.iter().all(Option::is_none) {
            return Err(Error::config(format!(
                "no unit of `{}` may run model `{}`",
                hw.id, entry.model
            )));
        }
        latency.push(lat_row);
        energy.push(en_row);
    }

    let requests = &stream.requests;
    let n = requests.len();
    let entry_pos: HashMap<&str, usize> = scenario
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.id.as_str(), i))
        .collect();
    let entry_of: Vec<usize> = requests
        .iter()
        .map(|r| {
            entry_pos.get(r.model.as_str()).copied().ok_or_else(|| {
                Error::config(format!("request for `{}` not in scenario `{}`", r.model, scenario.id))
            })
        })
        .collect::<Result<_>>()?;

    let links = link_dependencies(scenario, requests);
    let mut dependents = vec![Vec::new(); n];
    let mut deps_pending = vec![0usize; n];
    let mut unmatched = vec![false; n];
    for (d, edges) in links.iter().enumerate() {
        for &(edge, up) in edges {
            match up {
                Some(u) => {
                    dependents[u].push((edge, d));
                    deps_pending[d] += 1;
                }
                None => unmatched[d] = true,
            }
        }
    }

    let mut predecessor = vec![None; n];
    let mut last_of_model: HashMap<&str, usize> = HashMap::new();
    {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (entry_of[i], requests[i].request_index));
        for w in order.windows(2) {
            if entry_of[w[0]] == entry_of[w[1]] {
                predecessor[w[1]] = Some(w[0]);
            }
        }
        for &i in &order {
            last_of_model.insert(requests[i].model.as_str(), i);
        }
    }

    let mut sim = Sim {
        requests,
        seed,
        entry_of,
        state: vec![State::Waiting; n],
        arrived: vec![false; n],
        deps_pending,
        gate_failed: vec![false; n],
        dependents,
        predecessor,
        unit_of: vec![None; n],
        t_start: vec![None; n],
        t_end: vec![None; n],
        triggered: vec![false; n],
        pending: BTreeSet::new(),
        unit_busy: vec![false; hw.units.len()],
        latency,
        energy,
        queue: BinaryHeap::new(),
        seq: 0,
    };
    for (i, &no_upstream) in unmatched.iter().enumerate() {
        if no_upstream {
            sim.finish(i, Status::Untriggered);
        }
    }

    let window_end = Ticks::from_secs(stream.duration_s);
    for (i, r) in requests.iter().enumerate() {
        sim.push(r.t_req, EventKind::Arrive { req: i });
    }
    for &i in last_of_model.values().collect::<BTreeSet<_>>() {
        let r = &requests[i];
        sim.push(window_end.max(r.t_dl).max(r.t_req), EventKind::Close { req: i });
    }

    policy.reset(scenario, hw.units.len());
    let mut unit_order: Vec<usize> = (0..hw.units.len()).collect();
    unit_order.sort_by(|&a, &b| hw.units[a].id.cmp(&hw.units[b].id));

    while let Some(Reverse((now, _, _, kind))) = sim.queue.pop() {
        sim.handle(now, kind);
        while let Some(Reverse((t, ..))) = sim.queue.peek() {
            if *t != now {
                break;
            }
            let Reverse((_, _, _, kind)) = sim.queue.pop().unwrap();
            sim.handle(now, kind);
        }
        sim.dispatch(now, hw, &unit_order, policy);
    }

    let entries: Vec<TimelineEntry> = (0..n)
        .map(|i| {
            let status = match sim.state[i] {
                State::Done(s) => s,
                other => unreachable!("request {i} left in state {other:?}"),
            };
            let unit = sim.unit_of[i];
            TimelineEntry {
                request: requests[i].clone(),
                unit: unit.map(|u| hw.units[u].id.clone()),
                t_start: sim.t_start[i],
                t_end: sim.t_end[i],
                status,
                energy_mj: unit.map_or(0.0, |u| sim.energy[sim.entry_of[i]][u]),
            }
        })
        .collect();

    let mut log = EventLog::new(scenario, &hw.id, policy.name(), seed, stream.duration_s, entries);
    for (i, &t) in sim.triggered.iter().enumerate() {
        if t {
            log.counts[sim.entry_of[i]].n_triggered += 1;
        }
    }
    Ok(log)
}

impl Sim<'_> {
    fn handle(&mut self, now: Ticks, kind: EventKind) {
        match kind {
            EventKind::Complete { unit, req } => self.on_complete(now, unit, req),
            EventKind::Arrive { req } => self.on_arrive(req),
            EventKind::Close { req } => {
                if self.state[req] == State::Waiting {
                    self.finish(req, Status::Dropped);
                }
            }
        }
    }
}
