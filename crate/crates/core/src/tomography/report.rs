use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::measurement::chsh::{chsh_angles, chsh_from_counts, ChshResult};
use crate::measurement::counts::{derive_seed, poisson, rng_for, CountingParams};
use crate::measurement::fringe::FringeFit;
use crate::measurement::scan::{correlation_scan, stream, visibility, Sampling, ScanSeries};
use crate::metrics::{fidelity, CorrelationBasis, MetricsBundle};
use crate::source::{emit_state, SourceConfig};
use crate::state::{BellState, DensityMatrix};

use super::linear::{linear_reconstruct, project_to_physical};
use super::mle::{mle_reconstruct, mle_reconstruct_data, profile_log_likelihood, MleOptions};
use super::{setting_probabilities, simulate_qst, TomographyCounts, SETTING_COUNT};

pub const DEFAULT_BOOTSTRAP_REPLICAS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyResult {
    /// Linear-inversion estimate as `[re, im]` rows; may be unphysical.
    pub rho_linear: Vec<Vec<[f64; 2]>>,
    pub rho_mle: DensityMatrix,
    pub target: BellState,
    pub metrics: MetricsBundle,
    pub log_likelihood: f64,
    /// Profile log-likelihood of the clamped linear estimate.
    pub linear_log_likelihood: f64,
    pub intensity: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl TomographyResult {
    /// Reconstructs `counts` and scores the estimate against `target`, or
    /// against the closest Bell state when `target` is `None`.
    pub fn reconstruct(counts: &TomographyCounts, target: Option<BellState>, options: &MleOptions) -> Result<Self> {
        let linear = linear_reconstruct(counts)?;
        let mle = mle_reconstruct(counts, options)?;
        let target = target.unwrap_or_else(|| closest_bell_state(&mle.rho));
        let projected = project_to_physical(&linear, 0.0);
        Ok(Self {
            rho_linear: (0..4).map(|r| (0..4).map(|k| [linear[(r, k)].re, linear[(r, k)].im]).collect()).collect(),
            metrics: MetricsBundle::evaluate(&mle.rho, &target.state()),
            rho_mle: mle.rho,
            target,
            log_likelihood: mle.log_likelihood,
            linear_log_likelihood: profile_log_likelihood(&projected, &counts.coincidences(), counts.accidentals),
            intensity: mle.intensity,
            iterations: mle.iterations,
            converged: mle.converged,
        })
    }
}

pub fn closest_bell_state(rho: &DensityMatrix) -> BellState {
    BellState::ALL
        .into_iter()
        .max_by(|a, b| fidelity(rho, &a.state()).total_cmp(&fidelity(rho, &b.state())))
        .expect("four Bell states")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSpread {
    pub mean: f64,
    pub std: f64,
}

impl MetricSpread {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub replicas: usize,
    pub purity: MetricSpread,
    pub fidelity: MetricSpread,
    pub concurrence: MetricSpread,
    pub chsh_s: MetricSpread,
    pub non_converged: usize,
}

/// Parametric bootstrap: counts are redrawn from the forward model of
/// `rho` at the fitted intensity and reconstructed again.
pub fn bootstrap(
    rho: &DensityMatrix,
    intensity: f64,
    accidentals: f64,
    target: BellState,
    replicas: usize,
    seed: u64,
    options: &MleOptions,
) -> Result<BootstrapSummary> {
    let means = setting_probabilities(rho).map(|p| p * intensity + accidentals);
    let target_state = target.state();
    let runs = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let data: [f64; SETTING_COUNT] = std::array::from_fn(|k| {
                let mut rng = rng_for(derive_seed(seed, stream::BOOTSTRAP, (r * SETTING_COUNT + k) as u64));
                poisson(means[k], &mut rng) as f64
            });
            let out = mle_reconstruct_data(&data, accidentals, options)?;
            Ok((MetricsBundle::evaluate(&out.rho, &target_state), out.converged))
        })
        .collect::<Result<Vec<_>>>()?;
    let pick = |f: fn(&MetricsBundle) -> f64| MetricSpread::of(&runs.iter().map(|(m, _)| f(m)).collect::<Vec<_>>());
    Ok(BootstrapSummary {
        replicas,
        purity: pick(|m| m.purity),
        fidelity: pick(|m| m.fidelity),
        concurrence: pick(|m| m.concurrence),
        chsh_s: pick(|m| m.chsh_s),
        non_converged: runs.iter().filter(|(_, ok)| !ok).count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportOptions {
    pub bootstrap_replicas: usize,
    pub visibility_step_deg: f64,
    pub mle: MleOptions,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self { bootstrap_replicas: DEFAULT_BOOTSTRAP_REPLICAS, visibility_step_deg: 5.0, mle: MleOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullReport {
    pub counts: TomographyCounts,
    pub tomography: TomographyResult,
    pub bootstrap: Option<BootstrapSummary>,
    /// CHSH measured directly at the target's canonical angles.
    pub chsh_measured: ChshResult,
    pub visibility_fits: BTreeMap<CorrelationBasis, FringeFit>,
    pub correlation_scans: BTreeMap<CorrelationBasis, ScanSeries>,
}

/// Emission, tomography, reconstruction, bootstrap, and three-basis
/// correlation fringes for one source configuration. `sampling` selects
/// Poisson counts or exact expectations for every measured quantity.
pub fn full_report(
    config: &SourceConfig,
    counting: &CountingParams,
    sampling: Sampling,
    options: &ReportOptions,
) -> Result<FullReport> {
    config.validate()?;
    let rho = emit_state(config);
    let counts = match sampling {
        Sampling::Poisson { seed } => simulate_qst(&rho, counting, seed)?,
        Sampling::Exact => exact_counts(&rho, counting)?,
    };
    let tomography = TomographyResult::reconstruct(&counts, config.nominal_state(), &options.mle)?;
    let boot = match sampling {
        Sampling::Poisson { seed } if options.bootstrap_replicas > 0 => Some(bootstrap(
            &tomography.rho_mle,
            tomography.intensity,
            counts.accidentals,
            tomography.target,
            options.bootstrap_replicas,
            seed,
            &options.mle,
        )?),
        _ => None,
    };
    let chsh_measured = chsh_from_counts(&rho, &chsh_angles(tomography.target), counting, sampling)?;
    let mut visibility_fits = BTreeMap::new();
    let mut correlation_scans = BTreeMap::new();
    for (i, basis) in CorrelationBasis::ALL.into_iter().enumerate() {
        let scan_sampling = match sampling {
            Sampling::Exact => Sampling::Exact,
            Sampling::Poisson { seed } => Sampling::Poisson { seed: derive_seed(seed, stream::POLARIZER, i as u64) },
        };
        let series = correlation_scan(&rho, basis, options.visibility_step_deg, counting, scan_sampling)?;
        visibility_fits.insert(basis, visibility(&series)?);
        correlation_scans.insert(basis, series);
    }
    let mut tomography = tomography;
    tomography.metrics.visibilities = visibility_fits.iter().map(|(b, f)| (*b, f.visibility)).collect();
    Ok(FullReport { counts, tomography, bootstrap: boot, chsh_measured, visibility_fits, correlation_scans })
}

/// Expected counts rounded to the nearest integer.
fn exact_counts(rho: &DensityMatrix, counting: &CountingParams) -> Result<TomographyCounts> {
    counting.validate()?;
    let n = counting.pairs_per_window();
    let acc = counting.accidentals_per_window();
    let probs = setting_probabilities(rho);
    let records = super::qst_settings()
        .iter()
        .zip(probs)
        .map(|(s, p)| super::SettingCounts {
            setting: *s,
            singles_s: 0,
            singles_i: 0,
            coincidences: (p * n + acc).round() as u64,
        })
        .collect();
    TomographyCounts::new(records, acc)
}
