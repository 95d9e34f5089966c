//! Two-qubit polarization state tomography from 16 projective settings.

mod linear;
mod mle;
mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat4};
use crate::measurement::analyzer::{Analyzer, BasisState};
use crate::measurement::counts::{derive_seed, rng_for, poisson, CountingParams};
use crate::measurement::scan::stream;
use crate::state::DensityMatrix;

pub use linear::{design_matrix, linear_reconstruct, linear_reconstruct_data, project_to_physical};
pub use mle::{mle_reconstruct, mle_reconstruct_data, profile_log_likelihood, MleOptions, MleOutcome, MleProblem, PARAMETER_COUNT};
pub use report::{bootstrap, closest_bell_state, full_report, BootstrapSummary, FullReport, MetricSpread, ReportOptions, TomographyResult, DEFAULT_BOOTSTRAP_REPLICAS};

pub const SETTING_COUNT: usize = 16;

/// One projector pair (signal, idler).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TomographySetting {
    pub signal: BasisState,
    pub idler: BasisState,
}

impl TomographySetting {
    pub const fn new(signal: BasisState, idler: BasisState) -> Self {
        Self { signal, idler }
    }

    pub fn label(&self) -> String {
        format!("{}{}", self.signal.symbol(), self.idler.symbol())
    }

    /// |s⟩⟨s| ⊗ |i⟩⟨i|.
    pub fn projector(&self) -> Mat4 {
        linalg::kron(&Analyzer::basis(self.signal).effect(), &Analyzer::basis(self.idler).effect())
    }
}

impl fmt::Display for TomographySetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for TomographySetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.trim().chars();
        match (chars.next(), chars.next(), chars.next()) {
            (Some(a), Some(b), None) => Ok(Self::new(BasisState::try_from(a)?, BasisState::try_from(b)?)),
            _ => Err(Error::param("setting", format!("`{s}` is not a two-letter setting label"))),
        }
    }
}

/// The canonical 16-setting sequence in acquisition order.
pub fn qst_settings() -> [TomographySetting; SETTING_COUNT] {
    use BasisState::*;
    [
        (H, H), (H, V), (V, V), (V, H),
        (R, H), (R, V), (D, V), (D, H),
        (D, R), (D, D), (R, D), (H, D),
        (V, D), (V, L), (H, L), (R, L),
    ]
    .map(|(s, i)| TomographySetting::new(s, i))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettingCounts {
    pub setting: TomographySetting,
    pub singles_s: u64,
    pub singles_i: u64,
    pub coincidences: u64,
}

/// Coincidence record for each canonical setting, in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyCounts {
    pub records: Vec<SettingCounts>,
    /// Expected accidental coincidences per setting.
    pub accidentals: f64,
}

impl TomographyCounts {
    pub fn new(records: Vec<SettingCounts>, accidentals: f64) -> Result<Self> {
        let canonical = qst_settings();
        if records.len() != SETTING_COUNT || records.iter().zip(&canonical).any(|(r, s)| r.setting != *s) {
            return Err(Error::param("settings", "tomography counts must list the 16 canonical settings in order"));
        }
        if !(accidentals >= 0.0 && accidentals.is_finite()) {
            return Err(Error::param("accidentals", format!("{accidentals} must be non-negative")));
        }
        Ok(Self { records, accidentals })
    }

    pub fn coincidences(&self) -> [f64; SETTING_COUNT] {
        std::array::from_fn(|k| self.records[k].coincidences as f64)
    }

    pub fn total(&self) -> u64 {
        self.records.iter().map(|r| r.coincidences).sum()
    }
}

/// Tr(ρΠ_k) for every canonical setting.
pub fn setting_probabilities(rho: &DensityMatrix) -> [f64; SETTING_COUNT] {
    let settings = qst_settings();
    std::array::from_fn(|k| linalg::trace_product_re(rho.matrix(), &settings[k].projector()).max(0.0))
}

/// Poisson counts with mean N·Tr(ρΠ_k) + accidentals per setting.
pub fn simulate_qst(rho: &DensityMatrix, counting: &CountingParams, seed: u64) -> Result<TomographyCounts> {
    counting.validate()?;
    let n = counting.pairs_per_window();
    let acc = counting.accidentals_per_window();
    let records = qst_settings()
        .iter()
        .enumerate()
        .map(|(k, setting)| {
            let mut rng = rng_for(derive_seed(seed, stream::QST, k as u64));
            let signal = linalg::trace_product_re(
                rho.matrix(),
                &linalg::kron(&Analyzer::basis(setting.signal).effect(), &Analyzer::Open.effect()),
            );
            let idler = linalg::trace_product_re(
                rho.matrix(),
                &linalg::kron(&Analyzer::Open.effect(), &Analyzer::basis(setting.idler).effect()),
            );
            let p = linalg::trace_product_re(rho.matrix(), &setting.projector()).max(0.0);
            SettingCounts {
                setting: *setting,
                coincidences: poisson(p * n + acc, &mut rng),
                singles_s: poisson(signal.max(0.0) * n, &mut rng),
                singles_i: poisson(idler.max(0.0) * n, &mut rng),
            }
        })
        .collect();
    TomographyCounts::new(records, acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::BellState;

    #[test]
    fn sixteen_distinct_settings() {
        let s = qst_settings();
        let labels: std::collections::HashSet<String> = s.iter().map(|x| x.label()).collect();
        assert_eq!(labels.len(), 16);
        assert!(labels.contains("HH") && labels.contains("DR"));
        assert_eq!("rl".parse::<TomographySetting>().unwrap(), s[15]);
    }

    #[test]
    fn bell_projections() {
        let rho: DensityMatrix = BellState::PhiPlus.state().into();
        let p = setting_probabilities(&rho);
        assert!(p[1].abs() < 1e-15);
        assert!((p[9] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn simulation_is_deterministic() {
        let rho: DensityMatrix = BellState::PsiMinus.state().into();
        let a = simulate_qst(&rho, &CountingParams::default(), 3).unwrap();
        assert_eq!(a, simulate_qst(&rho, &CountingParams::default(), 3).unwrap());
        assert_ne!(a, simulate_qst(&rho, &CountingParams::default(), 4).unwrap());
    }
}
