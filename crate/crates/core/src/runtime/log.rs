use std::collections::HashMap;
use std::io::{Read, Write};

use serde::Serialize;
use serde_json::{json, Value};

use super::{ModelCounts, Status, TimelineEntry};
use crate::error::{Error, Result};
use crate::loadgen::InferenceRequest;
use crate::time::Ticks;
use crate::workload::UsageScenario;

pub const LOG_SCHEMA_VERSION: u32 = 1;

const CSV_HEADER: [&str; 10] = [
    "model",
    "request_index",
    "frame_index",
    "unit",
    "t_req",
    "t_start",
    "t_end",
    "t_dl",
    "status",
    "energy_mj",
];

/// The simulated timeline of one scenario on one hardware system.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub scenario: String,
    pub hardware: String,
    pub policy: String,
    pub seed: u64,
    pub duration_s: f64,
    /// One entry per request, in stream order.
    pub entries: Vec<TimelineEntry>,
    /// One row per scenario entry, in scenario order.
    pub counts: Vec<ModelCounts>,
}

impl EventLog {
    /// Builds a log and its counts from finished entries.
    ///
    /// `n_triggered` starts at `n_total` for dependency-free models and at zero
    /// for dependents; the simulator fills in the latter.
    pub fn new(
        scenario: &UsageScenario,
        hardware: &str,
        policy: &str,
        seed: u64,
        duration_s: f64,
        entries: Vec<TimelineEntry>,
    ) -> Self {
        let mut counts: Vec<ModelCounts> = scenario
            .entries
            .iter()
            .map(|e| ModelCounts {
                model: e.id.clone(),
                ..Default::default()
            })
            .collect();
        let pos: HashMap<&str, usize> = scenario
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.as_str(), i))
            .collect();
        for e in &entries {
            let Some(&i) = pos.get(e.request.model.as_str()) else {
                continue;
            };
            let c = &mut counts[i];
            c.n_total += 1;
            match e.status {
                Status::Completed => c.n_processed += 1,
                Status::Dropped => c.n_dropped += 1,
                Status::Untriggered => c.n_untriggered += 1,
            }
            if e.met_deadline() {
                c.n_sat += 1;
            }
        }
        for (c, e) in counts.iter_mut().zip(&scenario.entries) {
            if e.dependencies.is_empty() {
                c.n_triggered = c.n_total;
            }
        }
        Self {
            scenario: scenario.id.clone(),
            hardware: hardware.into(),
            policy: policy.into(),
            seed,
            duration_s,
            entries,
            counts,
        }
    }

    pub fn counts_for(&self, model: &str) -> Option<&ModelCounts> {
        self.counts.iter().find(|c| c.model == model)
    }

    pub fn entries_for<'a>(&'a self, model: &'a str) -> impl Iterator<Item = &'a TimelineEntry> + 'a {
        self.entries.iter().filter(move |e| e.request.model == model)
    }

    /// Busy time per unit id, in milliseconds. Diagnostic only.
    pub fn unit_busy_ms(&self) -> Vec<(String, f64)> {
        let mut busy: Vec<(String, Ticks)> = Vec::new();
        for e in &self.entries {
            if let (Some(u), Some(s), Some(t)) = (&e.unit, e.t_start, e.t_end) {
                match busy.iter_mut().find(|(id, _)| id == u) {
                    Some((_, acc)) => *acc = *acc + (t - s),
                    None => busy.push((u.clone(), t - s)),
                }
            }
        }
        busy.sort_by(|a, b| a.0.cmp(&b.0));
        busy.into_iter().map(|(u, t)| (u, t.as_ms())).collect()
    }

    /// Writes the timeline as CSV. Times are in milliseconds; absent values are empty.
    ///
    /// `preamble` lines are emitted first as `# ` comments.
    pub fn write_csv<W: Write>(&self, out: W, preamble: &[String]) -> Result<()> {
        let mut out = out;
        writeln!(out, "# schema_version: {LOG_SCHEMA_VERSION}")?;
        for line in preamble {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for e in &self.entries {
            w.write_record([
                e.request.model.clone(),
                e.request.request_index.to_string(),
                e.request.frame_index.to_string(),
                e.unit.clone().unwrap_or_default(),
                e.request.t_req_ms().to_string(),
                opt(e.t_start_ms()),
                opt(e.t_end_ms()),
                e.request.t_dl_ms().to_string(),
                e.status.as_str().to_string(),
                e.energy_mj.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a timeline written by [`EventLog::write_csv`] and recomputes counts.
    ///
    /// Trigger counts of dependent models cannot be recovered from the rows and
    /// are set to `n_total - n_untriggered`.
    pub fn read_csv<R: Read>(
        input: R,
        scenario: &UsageScenario,
        hardware: &str,
        policy: &str,
        seed: u64,
        duration_s: f64,
    ) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
            return Err(Error::Parse {
                context: "event log header".into(),
                message: format!("expected {CSV_HEADER:?}, found {headers:?}"),
            });
        }
        let mut entries = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let ctx = |field: &str| format!("event log row {} field `{field}`", line + 1);
            let num = |i: usize| -> Result<f64> {
                rec[i].parse::<f64>().map_err(|e| Error::Parse {
                    context: ctx(CSV_HEADER[i]),
                    message: e.to_string(),
                })
            };
            let int = |i: usize| -> Result<u64> {
                rec[i].parse::<u64>().map_err(|e| Error::Parse {
                    context: ctx(CSV_HEADER[i]),
                    message: e.to_string(),
                })
            };
            let opt_time = |i: usize| -> Result<Option<Ticks>> {
                if rec[i].is_empty() {
                    Ok(None)
                } else {
                    num(i).map(|v| Some(Ticks::from_ms(v)))
                }
            };
            let status = Status::parse(&rec[8]).ok_or_else(|| Error::Parse {
                context: ctx("status"),
                message: format!("unknown status `{}`", &rec[8]),
            })?;
            entries.push(TimelineEntry {
                request: InferenceRequest {
                    model: rec[0].to_string(),
                    request_index: int(1)?,
                    frame_index: int(2)?,
                    t_req: Ticks::from_ms(num(4)?),
                    t_dl: Ticks::from_ms(num(7)?),
                },
                unit: (!rec[3].is_empty()).then(|| rec[3].to_string()),
                t_start: opt_time(5)?,
                t_end: opt_time(6)?,
                status,
                energy_mj: num(9)?,
            });
        }
        let mut log = Self::new(scenario, hardware, policy, seed, duration_s, entries);
        for c in &mut log.counts {
            c.n_triggered = c.n_total - c.n_untriggered;
        }
        Ok(log)
    }

    /// JSON document with metadata, counts and entries (times in milliseconds).
    pub fn to_json(&self) -> Value {
        #[derive(Serialize)]
        struct Row<'a> {
            model: &'a str,
            request_index: u64,
            frame_index: u64,
            unit: Option<&'a str>,
            t_req: f64,
            t_start: Option<f64>,
            t_end: Option<f64>,
            t_dl: f64,
            status: Status,
            energy_mj: f64,
        }
        let rows: Vec<Row<'_>> = self
            .entries
            .iter()
            .map(|e| Row {
                model: &e.request.model,
                request_index: e.request.request_index,
                frame_index: e.request.frame_index,
                unit: e.unit.as_deref(),
                t_req: e.request.t_req_ms(),
                t_start: e.t_start_ms(),
                t_end: e.t_end_ms(),
                t_dl: e.request.t_dl_ms(),
                status: e.status,
                energy_mj: e.energy_mj,
            })
            .collect();
        json!({
            "schema_version": LOG_SCHEMA_VERSION,
            "scenario": self.scenario,
            "hardware": self.hardware,
            "policy": self.policy,
            "seed": self.seed,
            "duration_s": self.duration_s,
            "counts": self.counts,
            "entries": rows,
        })
    }
}
