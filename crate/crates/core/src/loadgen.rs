//! Jittered inference-request streams.
//!
//! Every random quantity is drawn from [`det_rand`], a pure hash of
//! `(seed, key, index)`, so streams are reproducible and independent of
//! generation order.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::time::Ticks;
use crate::workload::{validate_scenario, BenchmarkSuite, InputSource, ScenarioEntry, UsageScenario};

/// Standard deviation of the default jitter distribution on the unit interval.
pub const JITTER_SIGMA: f64 = 1.0 / 6.0;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic uniform variate in `[0, 1)` keyed by `(seed, key, index)`.
///
/// The key is hashed with FNV-1a, then seed, key hash and index are folded
/// through SplitMix64 rounds. The top 53 bits form the mantissa.
pub fn det_rand(seed: u64, key: &str, index: u64) -> f64 {
    let h = mix64(seed ^ mix64(fnv1a(key.as_bytes()) ^ mix64(index)));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Maps a uniform variate through a Gaussian centered at 0.5 (σ = 1/6), clamped to `[0, 1]`.
pub fn jitter_distribution(u: f64) -> f64 {
    let normal = Normal::new(0.5, JITTER_SIGMA).expect("valid normal parameters");
    if u <= 0.0 {
        return 0.0;
    }
    normal.inverse_cdf(u).clamp(0.0, 1.0)
}

/// Arrival perturbation of `frame` on `source`, within `[-max_jitter, +max_jitter]` ms.
pub fn jitter_offset(source: &InputSource, frame: u64, seed: u64) -> f64 {
    if source.max_jitter_ms == 0.0 {
        return 0.0;
    }
    let dist = jitter_distribution(det_rand(seed, &source.id, frame));
    source.max_jitter_ms * 2.0 * (dist - 0.5)
}

/// Arrival time of `frame` on `source`, in milliseconds.
pub fn request_time(source: &InputSource, frame: u64, seed: u64) -> f64 {
    source.init_latency_ms + frame as f64 * source.frame_period_ms() + jitter_offset(source, frame, seed)
}

/// Arrival time for a model fed by several sources: the latest of the aligned frames.
///
/// `frame` indexes the primary (first) source; other sources contribute the
/// most recent frame at or before the primary frame's nominal time.
pub fn multimodal_request_time(sources: &[&InputSource], frame: u64, seed: u64) -> f64 {
    let primary = sources[0];
    sources
        .iter()
        .map(|s| {
            let aligned = (frame as f64 * s.streaming_rate / primary.streaming_rate).floor() as u64;
            request_time(s, aligned, seed)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Jitter-free deadline of the `request_index`-th request, in milliseconds.
///
/// The deadline period is the entry's target-rate period.
pub fn deadline(entry: &ScenarioEntry, request_index: u64, init_latency_ms: f64) -> f64 {
    init_latency_ms + (request_index + 1) as f64 * 1_000.0 / entry.target_rate
}

/// Whether source frame `frame` is consumed by a model running at `rate` on a
/// stream of `source_rate` FPS.
pub fn frame_selected(frame: u64, rate: f64, source_rate: f64) -> bool {
    let acc = |i: u64| (i as f64 * rate / source_rate).floor();
    acc(frame + 1) > acc(frame)
}

/// Number of requests a model must serve over the window: `round(rate × duration)`.
pub fn target_frame_count(rate: f64, duration_s: f64) -> u64 {
    (rate * duration_s).round() as u64
}

/// One inference request of one scenario entry on one input frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceRequest {
    /// Scenario entry id.
    pub model: String,
    pub frame_index: u64,
    pub request_index: u64,
    pub t_req: Ticks,
    pub t_dl: Ticks,
}

impl InferenceRequest {
    pub fn t_req_ms(&self) -> f64 {
        self.t_req.as_ms()
    }

    pub fn t_dl_ms(&self) -> f64 {
        self.t_dl.as_ms()
    }

    pub fn t_slack_ms(&self) -> f64 {
        self.t_dl_ms() - self.t_req_ms()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestStream {
    pub scenario: String,
    pub duration_s: f64,
    pub seed: u64,
    /// Sorted by `t_req`, ties by `(model, frame_index)`.
    pub requests: Vec<InferenceRequest>,
    pub target_frame_count: BTreeMap<String, u64>,
}

impl RequestStream {
    pub fn requests_for<'a>(&'a self, model: &'a str) -> impl Iterator<Item = &'a InferenceRequest> + 'a {
        self.requests.iter().filter(move |r| r.model == model)
    }

    /// Writes `model,request_index,frame_index,t_req_ms,t_dl_ms` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["model", "request_index", "frame_index", "t_req_ms", "t_dl_ms"])?;
        for r in &self.requests {
            w.write_record([
                r.model.clone(),
                r.request_index.to_string(),
                r.frame_index.to_string(),
                r.t_req_ms().to_string(),
                r.t_dl_ms().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Generates the request stream of one scenario over `duration_s` seconds.
pub fn generate_requests(
    scenario: &UsageScenario,
    suite: &BenchmarkSuite,
    duration_s: f64,
    seed: u64,
) -> Result<RequestStream> {
    if !(duration_s > 0.0) || !duration_s.is_finite() {
        return Err(Error::config(format!("duration must be positive, got {duration_s}")));
    }
    let violations = validate_scenario(scenario, &suite.input_sources, &suite.models);
    if !violations.is_empty() {
        return Err(Error::InvalidScenario {
            scenario: scenario.id.clone(),
            violations: violations.iter().map(ToString::to_string).collect(),
        });
    }

    let mut requests = Vec::new();
    let mut target = BTreeMap::new();
    for entry in &scenario.entries {
        let model = suite.model(&entry.model).expect("validated");
        let sources: Vec<&InputSource> = model
            .input_sources
            .iter()
            .map(|id| suite.source(id).expect("validated"))
            .collect();
        let primary = sources[0];
        let init = sources.iter().map(|s| s.init_latency_ms).fold(0.0, f64::max);
        let count = target_frame_count(entry.target_rate, duration_s);
        target.insert(entry.id.clone(), count);

        let mut frame = 0u64;
        let mut k = 0u64;
        while k < count {
            if frame_selected(frame, entry.target_rate, primary.streaming_rate) {
                requests.push(InferenceRequest {
                    model: entry.id.clone(),
                    frame_index: frame,
                    request_index: k,
                    t_req: Ticks::from_ms(multimodal_request_time(&sources, frame, seed)),
                    t_dl: Ticks::from_ms(deadline(entry, k, init)),
                });
                k += 1;
            }
            frame += 1;
        }
    }
    requests.sort_by(|a, b| {
        (a.t_req, &a.model, a.frame_index).cmp(&(b.t_req, &b.model, b.frame_index))
    });

    Ok(RequestStream {
        scenario: scenario.id.clone(),
        duration_s,
        seed,
        requests,
        target_frame_count: target,
    })
}
