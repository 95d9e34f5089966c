use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::CorrelationBasis;
use crate::source::{emit_state, overlap_efficiency, SourceConfig};
use crate::state::DensityMatrix;

use super::analyzer::{outcome_probabilities, Analyzer, BasisState, MeasurementSetting};
use super::counts::{derive_seed, sample_counts, CountingParams};
use super::fringe::{fit_fringe, FitOptions, FringeFit};

/// RNG stream tags; one per scan family so that different scans driven
/// from the same seed never share draws.
pub(crate) mod stream {
    pub const TRANSLATION: u64 = 1;
    pub const POLARIZER: u64 = 2;
    pub const CHSH: u64 = 3;
    pub const HOM: u64 = 4;
    pub const BSM: u64 = 5;
    pub const QST: u64 = 6;
    pub const BOOTSTRAP: u64 = 7;
}

/// Inclusive, evenly spaced range `from, from + step, …, ≤ to`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanRange {
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

impl ScanRange {
    pub fn new(from: f64, to: f64, step: f64) -> Result<Self> {
        let r = Self { from, to, step };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::param("step", format!("{} must be positive", self.step)));
        }
        if !(self.from.is_finite() && self.to.is_finite() && self.to >= self.from) {
            return Err(Error::param("range", format!("[{}, {}] is empty", self.from, self.to)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.to - self.from) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.from + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointCounts {
    pub singles_s: u64,
    pub singles_i: u64,
    /// One entry per channel.
    pub coincidences: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub x: f64,
    /// `None` for exact (unsampled) scans.
    pub counts: Option<PointCounts>,
    /// Per-channel detection probability per emitted pair, collection
    /// efficiency included.
    pub expected: Vec<f64>,
}

/// The tabular content of a scan: exactly what its CSV file holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    pub channels: Vec<String>,
    pub points: Vec<ScanPoint>,
}

pub const DEFAULT_CHANNEL: &str = "coincidences";

impl ScanTable {
    pub fn new(channels: Vec<String>, points: Vec<ScanPoint>) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::param("channels", "at least one channel required"));
        }
        if points.windows(2).any(|w| !(w[1].x > w[0].x)) {
            return Err(Error::param("scan_var", "must be strictly increasing"));
        }
        for p in &points {
            let bad_counts = p.counts.as_ref().is_some_and(|c| c.coincidences.len() != channels.len());
            if p.expected.len() != channels.len() || bad_counts {
                return Err(Error::param("channels", "row width does not match channel count"));
            }
        }
        Ok(Self { channels, points })
    }

    pub fn is_sampled(&self) -> bool {
        self.points.first().is_some_and(|p| p.counts.is_some())
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c == name)
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn expected(&self, channel: usize) -> Vec<f64> {
        self.points.iter().map(|p| p.expected[channel]).collect()
    }

    /// Sampled coincidences if present, otherwise expected probabilities.
    pub fn signal(&self, channel: usize) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| match &p.counts {
                Some(c) => c.coincidences[channel] as f64,
                None => p.expected[channel],
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanMetadata {
    pub variable: String,
    pub setting: String,
    pub seed: Option<u64>,
    pub counting: CountingParams,
    pub source: Option<SourceConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSeries {
    pub table: ScanTable,
    pub metadata: ScanMetadata,
}

/// Whether scan points carry Poisson counts or only exact expectations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    Exact,
    Poisson { seed: u64 },
}

impl Sampling {
    pub fn seed(self) -> Option<u64> {
        match self {
            Sampling::Exact => None,
            Sampling::Poisson { seed } => Some(seed),
        }
    }
}

fn measure_point(
    rho: &DensityMatrix,
    setting: &MeasurementSetting,
    efficiency: f64,
    counting: &CountingParams,
    sampling: Sampling,
    stream_tag: u64,
    index: usize,
) -> Result<(Option<PointCounts>, f64)> {
    let probs = outcome_probabilities(rho, setting);
    let counts = match sampling {
        Sampling::Exact => None,
        Sampling::Poisson { seed } => {
            let rec = sample_counts(&probs, counting, efficiency, derive_seed(seed, stream_tag, index as u64))?;
            Some(PointCounts {
                singles_s: rec.singles_s,
                singles_i: rec.singles_i,
                coincidences: vec![rec.coincidences],
            })
        }
    };
    Ok((counts, probs.coincidence * efficiency))
}

/// Coincidences versus crystal displacement for a fixed analyzer setting.
pub fn translation_scan(
    range: &ScanRange,
    setting: &MeasurementSetting,
    config: &SourceConfig,
    counting: &CountingParams,
    sampling: Sampling,
) -> Result<ScanSeries> {
    range.validate()?;
    setting.validate()?;
    config.validate()?;
    counting.validate()?;
    let points = range
        .values()
        .into_par_iter()
        .enumerate()
        .map(|(i, x)| {
            let cfg = config.with_displacement(x);
            let rho = emit_state(&cfg);
            let eta = overlap_efficiency(x, &cfg);
            let (counts, expected) = measure_point(&rho, setting, eta, counting, sampling, stream::TRANSLATION, i)?;
            Ok(ScanPoint { x, counts, expected: vec![expected] })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanSeries {
        table: ScanTable::new(vec![DEFAULT_CHANNEL.into()], points)?,
        metadata: ScanMetadata {
            variable: "displacement_um".into(),
            setting: format!("signal {} / idler {}", setting.signal, setting.idler),
            seed: sampling.seed(),
            counting: *counting,
            source: Some(*config),
        },
    })
}

/// Coincidences versus the rotating idler analyzer with the signal analyzer
/// held fixed. `idler_at` maps the scan angle (degrees) to an analyzer.
pub fn polarizer_scan(
    signal: Analyzer,
    idler_at: impl Fn(f64) -> Analyzer + Sync,
    angles: &ScanRange,
    rho: &DensityMatrix,
    counting: &CountingParams,
    sampling: Sampling,
) -> Result<ScanSeries> {
    angles.validate()?;
    counting.validate()?;
    let points = angles
        .values()
        .into_par_iter()
        .enumerate()
        .map(|(i, angle)| {
            let setting = MeasurementSetting::new(signal, idler_at(angle));
            let (counts, expected) = measure_point(rho, &setting, 1.0, counting, sampling, stream::POLARIZER, i)?;
            Ok(ScanPoint { x: angle, counts, expected: vec![expected] })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanSeries {
        table: ScanTable::new(vec![DEFAULT_CHANNEL.into()], points)?,
        metadata: ScanMetadata {
            variable: "idler_angle_deg".into(),
            setting: format!("signal {signal} / idler rotating"),
            seed: sampling.seed(),
            counting: *counting,
            source: None,
        },
    })
}

/// Fixed signal analyzer and rotating idler analyzer spanning `basis`.
pub fn basis_scan_analyzers(basis: CorrelationBasis) -> (Analyzer, fn(f64) -> Analyzer) {
    match basis {
        CorrelationBasis::Computational => (Analyzer::basis(BasisState::H), Analyzer::linear),
        CorrelationBasis::Diagonal => (Analyzer::basis(BasisState::D), Analyzer::linear),
        CorrelationBasis::Circular => (Analyzer::basis(BasisState::R), |deg| Analyzer::Elliptical {
            qwp_deg: 0.0,
            polarizer_deg: deg,
        }),
    }
}

/// Correlation fringe in one analyzer basis over a full 0–360° turn.
pub fn correlation_scan(
    rho: &DensityMatrix,
    basis: CorrelationBasis,
    step_deg: f64,
    counting: &CountingParams,
    sampling: Sampling,
) -> Result<ScanSeries> {
    let (signal, idler_at) = basis_scan_analyzers(basis);
    let mut series = polarizer_scan(signal, idler_at, &ScanRange::new(0.0, 360.0, step_deg)?, rho, counting, sampling)?;
    series.metadata.setting = format!("{} basis: {}", basis.label(), series.metadata.setting);
    Ok(series)
}

/// Polarizer fringes repeat every 180° of analyzer rotation.
pub const POLARIZER_WAVENUMBER_PER_DEG: f64 = 2.0 * PI / 180.0;

/// Fringe visibility (Cmax − Cmin)/(Cmax + Cmin) from a sinusoidal fit of
/// the first channel.
pub fn visibility(series: &ScanSeries) -> Result<FringeFit> {
    let options = if series.metadata.variable == "idler_angle_deg" {
        FitOptions::with_wavenumber(POLARIZER_WAVENUMBER_PER_DEG)
    } else {
        FitOptions::default()
    };
    fit_fringe(&series.table.xs(), &series.table.signal(0), &options)
}

/// Visibility a perfect correlation scan in `basis` would show.
pub fn expected_visibility(rho: &DensityMatrix, basis: CorrelationBasis) -> Result<f64> {
    let series = correlation_scan(rho, basis, 5.0, &CountingParams::default(), Sampling::Exact)?;
    Ok(visibility(&series)?.visibility)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumKind {
    Maximum,
    Minimum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub x: f64,
    pub kind: ExtremumKind,
    pub value: f64,
}

/// Strict interior local extrema of a sequence.
pub fn local_extrema(xs: &[f64], ys: &[f64]) -> Vec<Extremum> {
    let mut out = Vec::new();
    for i in 1..ys.len().saturating_sub(1) {
        let (a, b, c) = (ys[i - 1], ys[i], ys[i + 1]);
        if b > a && b > c {
            out.push(Extremum { x: xs[i], kind: ExtremumKind::Maximum, value: b });
        } else if b < a && b < c {
            out.push(Extremum { x: xs[i], kind: ExtremumKind::Minimum, value: b });
        }
    }
    out
}

/// Number of max↔min alternations among the extrema with x in `[from, to]`.
/// Scan edges count as extrema of the kind their neighbour implies.
pub fn count_state_flips(xs: &[f64], ys: &[f64], from: f64, to: f64) -> usize {
    let n = ys.len();
    if n < 2 {
        return 0;
    }
    let edge = |inner: f64, outer: f64| if outer >= inner { ExtremumKind::Maximum } else { ExtremumKind::Minimum };
    let mut kinds = Vec::new();
    if xs[0] >= from {
        kinds.push(edge(ys[1], ys[0]));
    }
    kinds.extend(local_extrema(xs, ys).into_iter().filter(|e| e.x >= from && e.x <= to).map(|e| e.kind));
    if xs[n - 1] <= to {
        kinds.push(edge(ys[n - 2], ys[n - 1]));
    }
    kinds.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Switching analysis of a translation scan: the coincidence fringe is
/// divided by the known overlap envelope and fitted for its period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchingAnalysis {
    pub period_um: f64,
    pub period_sigma_um: f64,
    pub switch_interval_um: f64,
    pub switch_interval_sigma_um: f64,
    pub visibility: f64,
    pub maxima_um: Vec<f64>,
    pub minima_um: Vec<f64>,
}

pub fn analyze_switching(series: &ScanSeries) -> Result<SwitchingAnalysis> {
    let config = series
        .metadata
        .source
        .ok_or_else(|| Error::param("series", "translation scan has no source snapshot"))?;
    let xs = series.table.xs();
    let corrected: Vec<f64> = xs
        .iter()
        .zip(series.table.signal(0))
        .map(|(&x, y)| y / overlap_efficiency(x, &config))
        .collect();
    let fit = fit_fringe(&xs, &corrected, &FitOptions::default())?;
    let extrema = local_extrema(&xs, &series.table.expected(0));
    let pick = |kind| extrema.iter().filter(|e| e.kind == kind).map(|e| e.x).collect();
    Ok(SwitchingAnalysis {
        period_um: fit.period,
        period_sigma_um: fit.period_sigma,
        switch_interval_um: fit.period / 2.0,
        switch_interval_sigma_um: fit.period_sigma / 2.0,
        visibility: fit.visibility,
        maxima_um: pick(ExtremumKind::Maximum),
        minima_um: pick(ExtremumKind::Minimum),
    })
}
