use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use anyhow::{Context, Result};
use serde_json::Value;

use mmmt_core::runtime::EventLog;
use mmmt_core::scoring::{ScoreReport, ScoringConfig};

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating directory `{}`", dir.display()))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(
        ".{name}.tmp-{}-{}",
        std::process::id(),
        TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.with_context(|| format!("writing `{}`", path.display()))
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON value serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Comment lines heading a timeline CSV; `read_preamble` parses them back.
pub fn timeline_preamble(log: &EventLog, scoring: &ScoringConfig, config: &Value) -> Vec<String> {
    vec![
        format!("scenario: {}", log.scenario),
        format!("hardware: {}", log.hardware),
        format!("policy: {}", log.policy),
        format!("seed: {}", log.seed),
        format!("duration_s: {}", log.duration_s),
        format!("scoring: {}", serde_json::to_string(scoring).expect("scoring serializes")),
        format!("config: {}", serde_json::to_string(config).expect("config serializes")),
    ]
}

pub fn write_timeline(path: &Path, log: &EventLog, preamble: &[String]) -> Result<()> {
    let mut buf = Vec::new();
    log.write_csv(&mut buf, preamble)
        .with_context(|| format!("serializing timeline `{}`", path.display()))?;
    write_atomic(path, &buf)
}

/// `key: value` pairs from the leading `# ` lines of a timeline CSV.
pub fn read_preamble(text: &str) -> Vec<(String, String)> {
    text.lines()
        .map_while(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once(": "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// Per-model break-down table followed by scenario and overall scores.
///
/// Unit busy fractions are appended as a diagnostic; they are not scored.
pub fn summary(report: &ScoreReport, logs: &[EventLog]) -> String {
    let f = report.config.report_scale.factor();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<22} {:<6} {:>8} {:>8} {:>8} {:>8} {:>8} {:>11}",
        "scenario", "model", "rt", "en", "acc", "qoe", "score", "done/total"
    );
    for sc in &report.scenarios {
        for m in &sc.models {
            let qoe = m.qoe.map(|q| format!("{:.4}", q * f)).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "{:<22} {:<6} {:>8.4} {:>8.4} {:>8.4} {:>8} {:>8.4} {:>11}",
                sc.scenario,
                m.model,
                m.rt_mean * f,
                m.en_mean * f,
                m.acc_mean * f,
                qoe,
                m.model_score * f,
                format!("{}/{}", m.n_processed, m.n_total),
            );
        }
        let _ = writeln!(s, "{:<22} scenario score {:.4} on {}", sc.scenario, sc.scenario_score * f, sc.hardware);
    }
    let _ = writeln!(
        s,
        "overall: arithmetic {:.4}, geometric {:.4}",
        report.overall.arithmetic * f,
        report.overall.geometric * f
    );
    if !logs.is_empty() {
        let _ = writeln!(s, "unit busy fraction of the window (diagnostic, not scored):");
        for log in logs {
            let window_ms = log.duration_s * 1_000.0;
            let units: Vec<String> = log
                .unit_busy_ms()
                .into_iter()
                .map(|(u, ms)| format!("{u} {:.3}", ms / window_ms))
                .collect();
            let _ = writeln!(s, "  {:<22} {}", log.scenario, units.join("  "));
        }
    }
    s
}

pub fn sweep_header() -> &'static str {
    "probability,rt,en,qoe,scenario_score,upstream_completed,downstream_triggered,downstream_processed"
}
