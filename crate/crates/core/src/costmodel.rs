//! Hardware descriptions and per-(model, unit) latency/energy costs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::workload::UnitModel;

pub const HARDWARE_SCHEMA_VERSION: u32 = 1;
pub const COST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum Dataflow {
    WeightStationary,
    OutputStationary,
    RowStationary,
    Other(String),
}

impl Dataflow {
    pub fn tag(&self) -> &str {
        match self {
            Dataflow::WeightStationary => "WS",
            Dataflow::OutputStationary => "OS",
            Dataflow::RowStationary => "RS",
            Dataflow::Other(s) => s,
        }
    }
}

impl From<String> for Dataflow {
    fn from(s: String) -> Self {
        match s.as_str() {
            "WS" => Dataflow::WeightStationary,
            "OS" => Dataflow::OutputStationary,
            "RS" => Dataflow::RowStationary,
            _ => Dataflow::Other(s),
        }
    }
}

impl From<Dataflow> for String {
    fn from(d: Dataflow) -> String {
        d.tag().to_string()
    }
}

impl fmt::Display for Dataflow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One accelerator instance. It runs at most one inference at a time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareUnit {
    pub id: String,
    pub dataflow: Dataflow,
    pub pe_count: u32,
    pub clock_ghz: f64,
    pub bandwidth_gbps: f64,
    pub shared_mem_mib: f64,
    /// Average power while busy; used by the synthetic cost generator.
    pub power_watts: f64,
    /// Unit models this unit may run. Absent means any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub models: Option<Vec<String>>,
}

impl HardwareUnit {
    pub fn can_run(&self, model: &str) -> bool {
        self.models
            .as_ref()
            .map_or(true, |allowed| allowed.iter().any(|m| m == model))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AcceleratorStyle {
    /// Single fixed-dataflow accelerator.
    Fda,
    /// Several instances of one dataflow.
    Sfda,
    /// Instances with mixed dataflows.
    Hda,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareSystem {
    pub schema_version: u32,
    pub id: String,
    pub style: AcceleratorStyle,
    pub units: Vec<HardwareUnit>,
}

impl HardwareSystem {
    pub fn from_json(text: &str) -> Result<Self> {
        let hw: HardwareSystem = serde_json::from_str(text)?;
        if hw.schema_version != HARDWARE_SCHEMA_VERSION {
            return Err(Error::config(format!(
                "unsupported hardware schema_version {}",
                hw.schema_version
            )));
        }
        hw.validate()?;
        Ok(hw)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("hardware serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.units.is_empty() {
            return Err(Error::config(format!("hardware `{}` has no units", self.id)));
        }
        let mut ids = BTreeSet::new();
        for u in &self.units {
            if !ids.insert(u.id.as_str()) {
                return Err(Error::config(format!("hardware `{}`: duplicate unit `{}`", self.id, u.id)));
            }
            if u.pe_count == 0 {
                return Err(Error::config(format!("unit `{}`: pe_count must be positive", u.id)));
            }
            for (name, v) in [
                ("clock_ghz", u.clock_ghz),
                ("bandwidth_gbps", u.bandwidth_gbps),
                ("shared_mem_mib", u.shared_mem_mib),
            ] {
                if !(v > 0.0) {
                    return Err(Error::config(format!("unit `{}`: {name} must be positive", u.id)));
                }
            }
            if !(u.power_watts >= 0.0) {
                return Err(Error::config(format!("unit `{}`: power_watts must be non-negative", u.id)));
            }
        }
        if self.style == AcceleratorStyle::Fda && self.units.len() != 1 {
            return Err(Error::config(format!(
                "hardware `{}`: FDA systems have exactly one unit, found {}",
                self.id,
                self.units.len()
            )));
        }
        Ok(())
    }

    pub fn unit(&self, id: &str) -> Option<&HardwareUnit> {
        self.units.iter().find(|u| u.id == id)
    }

    /// Units in id order; free units are served in this order.
    pub fn units_by_id(&self) -> Vec<&HardwareUnit> {
        let mut units: Vec<_> = self.units.iter().collect();
        units.sort_by(|a, b| a.id.cmp(&b.id));
        units
    }
}

/// Base clock of the preset systems.
pub const PRESET_CLOCK_GHZ: f64 = 1.0;
/// Aggregate on-chip bandwidth of the preset systems, split across units by PE share.
pub const PRESET_BANDWIDTH_GBPS: f64 = 256.0;
/// Aggregate shared memory of the preset systems, split across units by PE share.
pub const PRESET_SHARED_MEM_MIB: f64 = 8.0;
/// Synthetic busy power per PE.
pub const PRESET_WATTS_PER_PE: f64 = 0.5e-3;

/// Preset accelerator systems `A` through `M`, partitioning `total_pes` PEs.
///
/// Structure follows the common FDA/SFDA/HDA taxonomy; power is synthetic.
pub fn preset(id: char, total_pes: u32) -> Result<HardwareSystem> {
    use AcceleratorStyle::*;
    use Dataflow::{OutputStationary as Os, RowStationary as Rs, WeightStationary as Ws};

    let (style, parts): (AcceleratorStyle, Vec<(Dataflow, u32)>) = match id.to_ascii_uppercase() {
        'A' => (Fda, vec![(Ws, 1)]),
        'B' => (Fda, vec![(Os, 1)]),
        'C' => (Fda, vec![(Rs, 1)]),
        'D' => (Sfda, vec![(Ws, 1), (Ws, 1)]),
        'E' => (Sfda, vec![(Os, 1), (Os, 1)]),
        'F' => (Sfda, vec![(Rs, 1), (Rs, 1)]),
        'G' => (Sfda, vec![(Ws, 1), (Ws, 1), (Ws, 1), (Ws, 1)]),
        'H' => (Sfda, vec![(Os, 1), (Os, 1), (Os, 1), (Os, 1)]),
        'I' => (Sfda, vec![(Rs, 1), (Rs, 1), (Rs, 1), (Rs, 1)]),
        'J' => (Hda, vec![(Ws, 1), (Os, 1)]),
        'K' => (Hda, vec![(Ws, 3), (Os, 1)]),
        'L' => (Hda, vec![(Ws, 1), (Os, 3)]),
        'M' => (Hda, vec![(Ws, 1), (Os, 1), (Ws, 1), (Os, 1)]),
        other => return Err(Error::config(format!("unknown accelerator preset `{other}`"))),
    };
    if total_pes == 0 {
        return Err(Error::config("preset PE count must be positive"));
    }
    let shares: u32 = parts.iter().map(|(_, s)| s).sum();
    let units = parts
        .into_iter()
        .enumerate()
        .map(|(i, (df, share))| {
            let pes = total_pes * share / shares;
            let frac = share as f64 / shares as f64;
            HardwareUnit {
                id: format!("{}{}", df.tag(), i),
                dataflow: df,
                pe_count: pes,
                clock_ghz: PRESET_CLOCK_GHZ,
                bandwidth_gbps: PRESET_BANDWIDTH_GBPS * frac,
                shared_mem_mib: PRESET_SHARED_MEM_MIB * frac,
                power_watts: pes as f64 * PRESET_WATTS_PER_PE,
                models: None,
            }
        })
        .collect();
    let hw = HardwareSystem {
        schema_version: HARDWARE_SCHEMA_VERSION,
        id: format!("{}-{}", id.to_ascii_uppercase(), total_pes),
        style,
        units,
    };
    hw.validate()?;
    Ok(hw)
}

pub const PRESET_IDS: [char; 13] = ['A', 'B', 'C', 'D', 'E', 'F', 'G', 'H', 'I', 'J', 'K', 'L', 'M'];

/// Latency and energy of one model on one unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEntry {
    pub model: String,
    pub unit: String,
    pub latency_ms: f64,
    pub energy_mj: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CostFile {
    schema_version: u32,
    e_max_mj: f64,
    entries: Vec<CostEntry>,
}

/// Per-(model, unit) cost lookup with its energy ceiling.
///
/// Construction rejects non-positive latencies, negative energies and any
/// energy above `e_max_mj`, so every looked-up entry scores in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    e_max_mj: f64,
    entries: Vec<CostEntry>,
    index: HashMap<(String, String), usize>,
}

impl CostTable {
    pub fn new(e_max_mj: f64, entries: Vec<CostEntry>) -> Result<Self> {
        if !(e_max_mj > 0.0) || !e_max_mj.is_finite() {
            return Err(Error::config(format!("e_max_mj must be positive, got {e_max_mj}")));
        }
        let mut index = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            if !(e.latency_ms > 0.0) || !e.latency_ms.is_finite() {
                return Err(Error::config(format!(
                    "cost entry ({}, {}): latency_ms must be positive, got {}",
                    e.model, e.unit, e.latency_ms
                )));
            }
            if !(e.energy_mj >= 0.0) {
                return Err(Error::config(format!(
                    "cost entry ({}, {}): energy_mj must be non-negative",
                    e.model, e.unit
                )));
            }
            if e.energy_mj > e_max_mj {
                return Err(Error::config(format!(
                    "cost entry ({}, {}): energy {} mJ exceeds e_max {} mJ",
                    e.model, e.unit, e.energy_mj, e_max_mj
                )));
            }
            if index.insert((e.model.clone(), e.unit.clone()), i).is_some() {
                return Err(Error::config(format!("duplicate cost entry ({}, {})", e.model, e.unit)));
            }
        }
        Ok(Self { e_max_mj, entries, index })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CostFile = serde_json::from_str(text)?;
        if file.schema_version != COST_SCHEMA_VERSION {
            return Err(Error::config(format!("unsupported cost schema_version {}", file.schema_version)));
        }
        Self::new(file.e_max_mj, file.entries)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CostFile {
            schema_version: COST_SCHEMA_VERSION,
            e_max_mj: self.e_max_mj,
            entries: self.entries.clone(),
        })
        .expect("cost table serializes")
    }

    pub fn e_max_mj(&self) -> f64 {
        self.e_max_mj
    }

    pub fn entries(&self) -> &[CostEntry] {
        &self.entries
    }

    pub fn lookup_cost(&self, model: &str, unit: &str) -> Result<&CostEntry> {
        self.index
            .get(&(model.to_string(), unit.to_string()))
            .map(|&i| &self.entries[i])
            .ok_or_else(|| Error::MissingCost {
                model: model.into(),
                unit: unit.into(),
            })
    }

    /// Same table with a different energy ceiling, re-validated.
    pub fn with_e_max(self, e_max_mj: f64) -> Result<Self> {
        Self::new(e_max_mj, self.entries)
    }

    /// Every model on every unit with the same latency and energy.
    pub fn uniform<'a>(
        models: impl IntoIterator<Item = &'a str>,
        hw: &HardwareSystem,
        latency_ms: f64,
        energy_mj: f64,
        e_max_mj: f64,
    ) -> Result<Self> {
        let mut entries = Vec::new();
        for m in models {
            for u in &hw.units {
                entries.push(CostEntry {
                    model: m.to_string(),
                    unit: u.id.clone(),
                    latency_ms,
                    energy_mj,
                });
            }
        }
        Self::new(e_max_mj, entries)
    }
}

/// Fraction of peak throughput a dataflow sustains on a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyTable {
    pub default: f64,
    /// Keyed by dataflow tag.
    pub by_dataflow: BTreeMap<String, f64>,
    /// Keyed by `DATAFLOW/MODEL`, overriding `by_dataflow`.
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
}

impl Default for EfficiencyTable {
    /// Synthetic defaults: WS favors large convolutional models, OS the small eye and speech models.
    fn default() -> Self {
        let by_dataflow = [("WS", 0.7), ("OS", 0.6), ("RS", 0.65)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let mut overrides = BTreeMap::new();
        for m in ["ES", "GE", "KD", "SR", "AS"] {
            overrides.insert(format!("OS/{m}"), 0.8);
            overrides.insert(format!("WS/{m}"), 0.45);
        }
        Self {
            default: 0.5,
            by_dataflow,
            overrides,
        }
    }
}

impl EfficiencyTable {
    pub fn uniform(efficiency: f64) -> Self {
        Self {
            default: efficiency,
            by_dataflow: BTreeMap::new(),
            overrides: BTreeMap::new(),
        }
    }

    pub fn efficiency(&self, dataflow: &Dataflow, model: &str) -> f64 {
        self.overrides
            .get(&format!("{}/{}", dataflow.tag(), model))
            .or_else(|| self.by_dataflow.get(dataflow.tag()))
            .copied()
            .unwrap_or(self.default)
    }
}

/// Ops per PE per cycle (one multiply-accumulate).
pub const OPS_PER_PE_CYCLE: f64 = 2.0;

/// Roofline cost of `model` on `unit` at the given sustained efficiency.
pub fn synthetic_cost(model: &UnitModel, unit: &HardwareUnit, efficiency: f64) -> Result<CostEntry> {
    let flops = model.flops.ok_or_else(|| {
        Error::config(format!("model `{}` has no flops; synthetic costs need it", model.id))
    })?;
    if !(efficiency > 0.0 && efficiency <= 1.0) {
        return Err(Error::config(format!("efficiency must be in (0, 1], got {efficiency}")));
    }
    let ops_per_sec = unit.pe_count as f64 * OPS_PER_PE_CYCLE * unit.clock_ghz * 1e9 * efficiency;
    let latency_ms = flops / ops_per_sec * 1e3;
    Ok(CostEntry {
        model: model.id.clone(),
        unit: unit.id.clone(),
        latency_ms,
        energy_mj: latency_ms * unit.power_watts,
    })
}

/// Synthetic cost table covering every model on every unit.
pub fn synthetic_table<'a>(
    models: impl IntoIterator<Item = &'a UnitModel>,
    hw: &HardwareSystem,
    efficiency: &EfficiencyTable,
    e_max_mj: f64,
) -> Result<CostTable> {
    let mut entries = Vec::new();
    for m in models {
        for u in &hw.units {
            entries.push(synthetic_cost(m, u, efficiency.efficiency(&u.dataflow, &m.id))?);
        }
    }
    CostTable::new(e_max_mj, entries)
}
