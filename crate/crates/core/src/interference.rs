//! Two-photon interference at a beam splitter and the four-detector Bell
//! state analyzer built from it.
//!
//! The signal photon enters input port 1 and the idler input port 2. Each
//! polarization sees its own 2×2 beam-splitter unitary
//!
//! ```text
//! U_π = [[ √T,            i√R·e^{−iφ_π} ],
//!        [ i√R·e^{iφ_π},  √T            ]]
//! ```
//!
//! (columns are input ports, rows output ports). Output modes are
//! (port, polarization) pairs, resolved by a polarizing beam splitter and
//! two detectors behind each output port. For an unordered output pair the
//! "direct" amplitude D sends the signal to the first mode and the idler to
//! the second, the "exchange" amplitude X the reverse. With partial
//! indistinguishability η the pair probability is `|D|² + |X|² + 2η·Re(D·X*)`
//! for distinct modes and `|D|²·(1 + η)` when both photons share a mode.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, Mat2, C64, ZERO};
use crate::measurement::counts::{derive_seed, poisson, rng_for, CountingParams};
use crate::measurement::scan::{stream, PointCounts, Sampling, ScanMetadata, ScanPoint, ScanRange, ScanSeries, ScanTable};
use crate::source::{emit_state, overlap_efficiency, SourceConfig};
use crate::state::DensityMatrix;

/// Speed of light in nm/fs.
const SPEED_OF_LIGHT_NM_PER_FS: f64 = 299.792_458;
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamSplitterKind {
    IdealSymmetric,
    PmFiber,
    Dielectric,
}

impl BeamSplitterKind {
    pub const ALL: [BeamSplitterKind; 3] =
        [BeamSplitterKind::IdealSymmetric, BeamSplitterKind::PmFiber, BeamSplitterKind::Dielectric];

    pub fn label(self) -> &'static str {
        match self {
            BeamSplitterKind::IdealSymmetric => "ideal_symmetric",
            BeamSplitterKind::PmFiber => "pm_fiber",
            BeamSplitterKind::Dielectric => "dielectric",
        }
    }
}

impl std::str::FromStr for BeamSplitterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "ideal_symmetric" | "ideal" => Ok(BeamSplitterKind::IdealSymmetric),
            "pm_fiber" | "fiber" => Ok(BeamSplitterKind::PmFiber),
            "dielectric" => Ok(BeamSplitterKind::Dielectric),
            other => Err(Error::param(
                "beam_splitter.kind",
                format!("unknown kind `{other}`; expected ideal_symmetric, pm_fiber or dielectric"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSplitterModel {
    pub kind: BeamSplitterKind,
    /// Reflection phase φ_H (radians).
    pub phase_h: f64,
    /// Reflection phase φ_V (radians).
    pub phase_v: f64,
    /// Power reflectivity R; T = 1 − R.
    pub ratio: f64,
}

impl Default for BeamSplitterModel {
    fn default() -> Self {
        Self::of_kind(BeamSplitterKind::IdealSymmetric)
    }
}

impl BeamSplitterModel {
    /// 50:50 splitter of the given kind. The dielectric coating gives H and
    /// V reflections opposite signs; the other kinds treat both alike.
    pub fn of_kind(kind: BeamSplitterKind) -> Self {
        let phase_v = if kind == BeamSplitterKind::Dielectric { PI } else { 0.0 };
        Self { kind, phase_h: 0.0, phase_v, ratio: 0.5 }
    }

    /// The per-polarization unitary; index 0 is H, 1 is V.
    pub fn unitary(&self, polarization: usize) -> Mat2 {
        let phase = if polarization == 0 { self.phase_h } else { self.phase_v };
        let t = c((1.0 - self.ratio).sqrt(), 0.0);
        let r = self.ratio.sqrt();
        let ir = |sign: f64| c(0.0, r) * C64::from_polar(1.0, sign * phase);
        Mat2::new(t, ir(-1.0), ir(1.0), t)
    }

    pub fn unitarity_defect(&self) -> f64 {
        (0..2)
            .map(|pol| {
                let u = self.unitary(pol);
                (u.adjoint() * u - Mat2::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::param("beam_splitter.ratio", format!("{} must lie strictly between 0 and 1", self.ratio)));
        }
        if !(self.phase_h.is_finite() && self.phase_v.is_finite()) {
            return Err(Error::param("beam_splitter.phase", "reflection phases must be finite"));
        }
        let deviation = self.unitarity_defect();
        if deviation > UNITARITY_TOLERANCE {
            return Err(Error::NonUnitary { deviation });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterModel {
    pub center_nm: f64,
    pub bandwidth_nm: f64,
}

impl Default for FilterModel {
    fn default() -> Self {
        Self { center_nm: 810.0, bandwidth_nm: 10.0 }
    }
}

impl FilterModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_nm > 0.0 && self.bandwidth_nm.is_finite()) {
            return Err(Error::param("filter.bandwidth_nm", format!("{} must be positive", self.bandwidth_nm)));
        }
        if !(self.center_nm > 0.0 && self.center_nm.is_finite()) {
            return Err(Error::param("filter.center_nm", format!("{} must be positive", self.center_nm)));
        }
        Ok(())
    }

    /// τc = λ0²/(c·Δλ).
    pub fn coherence_time_fs(&self) -> f64 {
        self.center_nm * self.center_nm / (SPEED_OF_LIGHT_NM_PER_FS * self.bandwidth_nm)
    }

    /// η(τ) = exp(−(τ/τc)²).
    pub fn indistinguishability(&self, delay_fs: f64) -> f64 {
        let u = delay_fs / self.coherence_time_fs();
        (-u * u).exp()
    }
}

/// Output modes in detector order H1, V1, H2, V2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OutputMode {
    H1,
    V1,
    H2,
    V2,
}

impl OutputMode {
    pub const ALL: [OutputMode; 4] = [OutputMode::H1, OutputMode::V1, OutputMode::H2, OutputMode::V2];

    pub fn index(self) -> usize {
        self as usize
    }

    /// 0 for port 1, 1 for port 2.
    pub fn port(self) -> usize {
        self.index() / 2
    }

    /// 0 for H, 1 for V.
    pub fn polarization(self) -> usize {
        self.index() % 2
    }
}

/// Probabilities of the ten unordered output-mode pairs; entry `[a][b]`
/// with `a ≤ b`, zero below the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputDistribution {
    pub probabilities: [[f64; 4]; 4],
}

impl OutputDistribution {
    pub fn get(&self, a: OutputMode, b: OutputMode) -> f64 {
        let (i, j) = if a <= b { (a.index(), b.index()) } else { (b.index(), a.index()) };
        self.probabilities[i][j]
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().flatten().sum()
    }

    /// One photon in each output port, polarization ignored.
    pub fn cross_port(&self) -> f64 {
        let mut p = 0.0;
        for a in [OutputMode::H1, OutputMode::V1] {
            for b in [OutputMode::H2, OutputMode::V2] {
                p += self.get(a, b);
            }
        }
        p
    }

    /// Probability that port `port` (0 or 1) receives at least one photon.
    pub fn port_occupied(&self, port: usize) -> f64 {
        let mut p = 0.0;
        for a in OutputMode::ALL {
            for b in OutputMode::ALL.into_iter().filter(|b| *b >= a) {
                if a.port() == port || b.port() == port {
                    p += self.get(a, b);
                }
            }
        }
        p
    }
}

/// Amplitude for a photon of polarization `pol` entering `input` to leave
/// in `mode`.
fn single_amplitude(bs: &BeamSplitterModel, input: usize, pol: usize, mode: OutputMode) -> C64 {
    if mode.polarization() != pol {
        return ZERO;
    }
    bs.unitary(pol)[(mode.port(), input)]
}

/// Coefficients `d[j·2+k]` such that the amplitude for signal → `ms`,
/// idler → `mi` is `Σ d·ψ` over input polarizations (j, k).
fn routing(bs: &BeamSplitterModel, ms: OutputMode, mi: OutputMode) -> [C64; 4] {
    let mut d = [ZERO; 4];
    for j in 0..2 {
        for k in 0..2 {
            d[j * 2 + k] = single_amplitude(bs, 0, j, ms) * single_amplitude(bs, 1, k, mi);
        }
    }
    d
}

/// Σ u_r ρ_rs w_s*; equals D·X* for a pure state when u, w route D, X.
fn bilinear(rho: &DensityMatrix, u: &[C64; 4], w: &[C64; 4]) -> C64 {
    let m = rho.matrix();
    let mut acc = ZERO;
    for r in 0..4 {
        for s in 0..4 {
            acc += u[r] * m[(r, s)] * w[s].conj();
        }
    }
    acc
}

/// Output-pair distribution of the two input photons.
pub fn two_photon_bs_transform(
    rho: &DensityMatrix,
    bs: &BeamSplitterModel,
    indistinguishability: f64,
) -> Result<OutputDistribution> {
    bs.validate()?;
    if !(0.0..=1.0).contains(&indistinguishability) {
        return Err(Error::param("indistinguishability", format!("{indistinguishability} outside [0, 1]")));
    }
    let eta = indistinguishability;
    let mut probabilities = [[0.0; 4]; 4];
    for a in OutputMode::ALL {
        for b in OutputMode::ALL.into_iter().filter(|b| *b >= a) {
            let d = routing(bs, a, b);
            let dd = bilinear(rho, &d, &d).re;
            let p = if a == b {
                dd * (1.0 + eta)
            } else {
                let x = routing(bs, b, a);
                dd + bilinear(rho, &x, &x).re + 2.0 * eta * bilinear(rho, &d, &x).re
            };
            probabilities[a.index()][b.index()] = p.max(0.0);
        }
    }
    Ok(OutputDistribution { probabilities })
}

/// Two-fold coincidence pattern of the four-detector analyzer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsmSignature {
    pub h1v1: f64,
    pub h2v2: f64,
    pub h1v2: f64,
    pub v1h2: f64,
    /// Both photons at one detector.
    pub bunched: f64,
    /// H1–H2 or V1–V2.
    pub none: f64,
}

impl BsmSignature {
    pub const CHANNELS: [&'static str; 4] = ["h1v1", "h2v2", "h1v2", "v1h2"];

    pub fn from_distribution(out: &OutputDistribution) -> Self {
        use OutputMode::*;
        Self {
            h1v1: out.get(H1, V1),
            h2v2: out.get(H2, V2),
            h1v2: out.get(H1, V2),
            v1h2: out.get(V1, H2),
            bunched: OutputMode::ALL.iter().map(|&m| out.get(m, m)).sum(),
            none: out.get(H1, H2) + out.get(V1, V2),
        }
    }

    pub fn total(&self) -> f64 {
        self.h1v1 + self.h2v2 + self.h1v2 + self.v1h2 + self.bunched + self.none
    }

    /// Orthogonal polarizations in the same port.
    pub fn same_port(&self) -> f64 {
        self.h1v1 + self.h2v2
    }

    /// Orthogonal polarizations in different ports.
    pub fn cross_port(&self) -> f64 {
        self.h1v2 + self.v1h2
    }

    pub fn channels(&self) -> [f64; 4] {
        [self.h1v1, self.h2v2, self.h1v2, self.v1h2]
    }
}

/// Signature at zero delay (fully indistinguishable photons).
pub fn bsm_signature(rho: &DensityMatrix, bs: &BeamSplitterModel) -> Result<BsmSignature> {
    Ok(BsmSignature::from_distribution(&two_photon_bs_transform(rho, bs, 1.0)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomScanPoint {
    pub delay_fs: f64,
    pub coincidence_rate: f64,
}

/// Cross-port coincidence probability versus delay.
pub fn hom_curve(rho: &DensityMatrix, bs: &BeamSplitterModel, filter: &FilterModel, delays: &ScanRange) -> Result<Vec<HomScanPoint>> {
    filter.validate()?;
    delays.validate()?;
    delays
        .values()
        .into_iter()
        .map(|tau| {
            let out = two_photon_bs_transform(rho, bs, filter.indistinguishability(tau))?;
            Ok(HomScanPoint { delay_fs: tau, coincidence_rate: out.cross_port() })
        })
        .collect()
}

pub const HOM_CHANNEL: &str = "cross_port";

/// HOM delay scan as a sampled or exact series.
pub fn hom_scan(
    rho: &DensityMatrix,
    bs: &BeamSplitterModel,
    filter: &FilterModel,
    delays: &ScanRange,
    counting: &CountingParams,
    sampling: Sampling,
) -> Result<ScanSeries> {
    bs.validate()?;
    filter.validate()?;
    delays.validate()?;
    counting.validate()?;
    let n = counting.pairs_per_window();
    let acc = counting.accidentals_per_window();
    let points = delays
        .values()
        .into_par_iter()
        .enumerate()
        .map(|(i, tau)| {
            let out = two_photon_bs_transform(rho, bs, filter.indistinguishability(tau))?;
            let p = out.cross_port();
            let counts = match sampling {
                Sampling::Exact => None,
                Sampling::Poisson { seed } => {
                    let mut rng = rng_for(derive_seed(seed, stream::HOM, i as u64));
                    let coincidences = poisson(p * n + acc, &mut rng);
                    let singles_s = poisson(out.port_occupied(0) * n, &mut rng);
                    let singles_i = poisson(out.port_occupied(1) * n, &mut rng);
                    Some(PointCounts { singles_s, singles_i, coincidences: vec![coincidences] })
                }
            };
            Ok(ScanPoint { x: tau, counts, expected: vec![p] })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanSeries {
        table: ScanTable::new(vec![HOM_CHANNEL.into()], points)?,
        metadata: ScanMetadata {
            variable: "delay_fs".into(),
            setting: format!("{} beam splitter, {} nm filter", bs.kind.label(), filter.bandwidth_nm),
            seed: sampling.seed(),
            counting: *counting,
            source: None,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomShape {
    Dip,
    Peak,
    Flat,
}

impl HomShape {
    pub fn label(self) -> &'static str {
        match self {
            HomShape::Dip => "dip",
            HomShape::Peak => "peak",
            HomShape::Flat => "flat",
        }
    }
}

/// Dip or peak by comparing the zero-delay rate with the distinguishable
/// baseline.
pub fn classify(rho: &DensityMatrix, bs: &BeamSplitterModel) -> Result<HomShape> {
    let at_zero = two_photon_bs_transform(rho, bs, 1.0)?.cross_port();
    let baseline = two_photon_bs_transform(rho, bs, 0.0)?.cross_port();
    Ok(classify_rates(at_zero, baseline))
}

pub fn classify_rates(at_zero: f64, baseline: f64) -> HomShape {
    let tol = 1e-9 * baseline.abs().max(1e-300);
    if at_zero < baseline - tol {
        HomShape::Dip
    } else if at_zero > baseline + tol {
        HomShape::Peak
    } else {
        HomShape::Flat
    }
}

/// Four two-fold coincidence channels versus crystal displacement, at zero
/// delay, scaled by the overlap efficiency.
pub fn bsm_translation_scan(
    range: &ScanRange,
    config: &SourceConfig,
    bs: &BeamSplitterModel,
    counting: &CountingParams,
    sampling: Sampling,
) -> Result<ScanSeries> {
    range.validate()?;
    config.validate()?;
    bs.validate()?;
    counting.validate()?;
    let n = counting.pairs_per_window();
    let acc = counting.accidentals_per_window();
    let points = range
        .values()
        .into_par_iter()
        .enumerate()
        .map(|(i, x)| {
            let cfg = config.with_displacement(x);
            let eta = overlap_efficiency(x, &cfg);
            let out = two_photon_bs_transform(&emit_state(&cfg), bs, 1.0)?;
            let expected: Vec<f64> = BsmSignature::from_distribution(&out).channels().iter().map(|p| p * eta).collect();
            let counts = match sampling {
                Sampling::Exact => None,
                Sampling::Poisson { seed } => {
                    let mut rng = rng_for(derive_seed(seed, stream::BSM, i as u64));
                    let singles_s = poisson(out.port_occupied(0) * n * eta, &mut rng);
                    let singles_i = poisson(out.port_occupied(1) * n * eta, &mut rng);
                    let coincidences = expected.iter().map(|p| poisson(p * n + acc, &mut rng)).collect();
                    Some(PointCounts { singles_s, singles_i, coincidences })
                }
            };
            Ok(ScanPoint { x, counts, expected })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanSeries {
        table: ScanTable::new(BsmSignature::CHANNELS.iter().map(|s| s.to_string()).collect(), points)?,
        metadata: ScanMetadata {
            variable: "displacement_um".into(),
            setting: format!("{} beam splitter, idler HWP {}°", bs.kind.label(), config.idler_hwp_deg),
            seed: sampling.seed(),
            counting: *counting,
            source: Some(*config),
        },
    })
}

/// Which signature pair family dominates a row of BSM channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DominantPairs {
    SamePort,
    CrossPort,
}

pub fn dominant_pairs(channels: &[f64]) -> DominantPairs {
    if channels[0] + channels[1] >= channels[2] + channels[3] {
        DominantPairs::SamePort
    } else {
        DominantPairs::CrossPort
    }
}

/// Number of changes of the dominant pair family along a BSM scan.
pub fn count_signature_alternations(series: &ScanSeries) -> usize {
    let table = &series.table;
    let rows: Vec<DominantPairs> = (0..table.points.len())
        .map(|i| dominant_pairs(&(0..4).map(|ch| table.signal(ch)[i]).collect::<Vec<_>>()))
        .collect();
    rows.windows(2).filter(|w| w[0] != w[1]).count()
}
