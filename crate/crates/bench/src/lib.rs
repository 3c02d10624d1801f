//! Fixtures shared by the benchmarks.

use mmmt_core::costmodel::{preset, synthetic_table, CostTable, EfficiencyTable, HardwareSystem};
use mmmt_core::workload::{builtin_suite, BenchmarkSuite, UsageScenario};

pub struct Fixture {
    pub suite: BenchmarkSuite,
    pub scenario: UsageScenario,
    pub hw: HardwareSystem,
    pub costs: CostTable,
}

/// A built-in scenario on a preset with synthetic costs.
pub fn fixture(scenario: &str, hw: char, pes: u32) -> Fixture {
    let suite = builtin_suite();
    let scenario = suite.scenario(scenario).expect("built-in scenario").clone();
    let hw = preset(hw, pes).expect("preset");
    let costs = synthetic_table(&suite.models, &hw, &EfficiencyTable::default(), 1e3).expect("synthetic costs");
    Fixture {
        suite,
        scenario,
        hw,
        costs,
    }
}
