//! Shared inputs for the criterion benchmarks.

use bellswitch_core::config::{preset, table1_preset_name};
use bellswitch_core::tomography::{simulate_qst, TomographyCounts};
use bellswitch_core::{emit_state, BellState, ScenarioConfig};

/// The calibrated ψ− scenario, whose counts sit near the physical boundary.
fn calibrated_scenario() -> ScenarioConfig {
    preset(&table1_preset_name(BellState::PsiMinus)).expect("shipped preset")
}

pub fn sampled_tomography_counts(seed: u64) -> TomographyCounts {
    let config = calibrated_scenario();
    simulate_qst(&emit_state(&config.source), &config.counting, seed).expect("valid preset")
}
