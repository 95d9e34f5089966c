//! Sagnac source model: crystal displacement and idler half-wave plate in,
//! emitted two-photon polarization state and collection efficiency out.
//!
//! Translating the crystal by `x` away from the balanced position adds a
//! relative phase `φ(x) = 2π·x/r + φ₀` between the counter-propagating
//! |HH⟩ and |VV⟩ pair amplitudes, so the state cycles φ⁺ → φ⁻ → φ⁺ every
//! `r`. The two down-conversion cones also travel unequal distances to the
//! collection optics, which slowly degrades their overlap.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jones::{apply_local, LocalOperation};
use crate::linalg::c;
use crate::state::{phase_state, BellState, DensityMatrix};

/// Displacement at which the coincidence brightness has dropped to
/// [`OVERLAP_CALIBRATION_EFFICIENCY`].
pub const OVERLAP_CALIBRATION_UM: f64 = 1800.0;
pub const OVERLAP_CALIBRATION_EFFICIENCY: f64 = 0.79;

pub const DEFAULT_SPATIAL_PERIOD_UM: f64 = 244.0;
pub const DEFAULT_EMISSION_ANGLE_DEG: f64 = 2.2;
pub const DEFAULT_COLLECTION_DISTANCE_MM: f64 = 150.0;
/// Crystal poling period; carried as metadata only.
pub const POLING_PERIOD_UM: f64 = 3.425;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseParams {
    /// Weight of the ideal state in the white-noise (Werner) mixture.
    pub werner_p: f64,
    /// Fractional damping of the two-photon coherence.
    pub dephasing: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self { werner_p: 1.0, dephasing: 0.0 }
    }
}

impl NoiseParams {
    pub const NOISELESS: NoiseParams = NoiseParams { werner_p: 1.0, dephasing: 0.0 };

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.werner_p) {
            return Err(Error::param(
                "noise.werner_p",
                format!("{} is outside [0, 1]; 1 means no white noise", self.werner_p),
            ));
        }
        if !(0.0..=1.0).contains(&self.dephasing) {
            return Err(Error::param(
                "noise.dephasing",
                format!("{} is outside [0, 1]; 0 means full coherence", self.dephasing),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceConfig {
    /// Crystal displacement from the balanced position (µm). Positive is
    /// clockwise, lengthening the V-cone path.
    pub displacement_um: f64,
    pub spatial_period_um: f64,
    pub initial_phase_rad: f64,
    pub idler_hwp_deg: f64,
    pub emission_angle_deg: f64,
    pub collection_distance_mm: f64,
    pub poling_period_um: f64,
    pub noise: NoiseParams,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            displacement_um: 0.0,
            spatial_period_um: DEFAULT_SPATIAL_PERIOD_UM,
            initial_phase_rad: 0.0,
            idler_hwp_deg: 0.0,
            emission_angle_deg: DEFAULT_EMISSION_ANGLE_DEG,
            collection_distance_mm: DEFAULT_COLLECTION_DISTANCE_MM,
            poling_period_um: POLING_PERIOD_UM,
            noise: NoiseParams::default(),
        }
    }
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("source.displacement_um", self.displacement_um),
            ("source.initial_phase_rad", self.initial_phase_rad),
            ("source.idler_hwp_deg", self.idler_hwp_deg),
            ("source.emission_angle_deg", self.emission_angle_deg),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if !(self.spatial_period_um > 0.0 && self.spatial_period_um.is_finite()) {
            return Err(Error::param("source.spatial_period_um", "must be positive"));
        }
        if !(self.collection_distance_mm > 0.0 && self.collection_distance_mm.is_finite()) {
            return Err(Error::param("source.collection_distance_mm", "must be positive"));
        }
        self.noise.validate()
    }

    pub fn with_displacement(mut self, displacement_um: f64) -> Self {
        self.displacement_um = displacement_um;
        self
    }

    pub fn noiseless(mut self) -> Self {
        self.noise = NoiseParams::NOISELESS;
        self
    }

    /// Crystal position and idler HWP angle that produce `kind`, using the
    /// first switch point away from balance for the minus states.
    pub fn tuned_to(mut self, kind: BellState) -> Self {
        self.displacement_um = if kind.is_minus() { self.spatial_period_um / 2.0 } else { 0.0 };
        self.idler_hwp_deg = if kind.is_psi() { 45.0 } else { 0.0 };
        self
    }

    /// The Bell state the noiseless emission of this configuration equals,
    /// if any.
    pub fn nominal_state(&self) -> Option<BellState> {
        let rho = emit_state(&self.noiseless());
        BellState::ALL
            .into_iter()
            .find(|kind| crate::metrics::fidelity(&rho, &kind.state()) > 1.0 - 1e-9)
    }

    /// Whether the idler plate is in the beam. A 0° setting (mod 180°) is
    /// the plate-out reference position.
    pub fn idler_plate_inserted(&self) -> bool {
        self.idler_hwp_deg.rem_euclid(180.0) != 0.0
    }
}

/// φ = 2π·x/r + φ₀.
pub fn phase_from_displacement(config: &SourceConfig) -> f64 {
    2.0 * PI * config.displacement_um / config.spatial_period_um + config.initial_phase_rad
}

/// Emitted two-photon state.
///
/// Dephasing damps the |HH⟩⟨VV| coherence before the idler HWP acts, so it
/// lands on the HV–VH coherence when the plate is at 45°. White noise is
/// mixed in last. At the 0° reference setting no plate acts.
pub fn emit_state(config: &SourceConfig) -> DensityMatrix {
    let pure = phase_state(phase_from_displacement(config)).density_matrix();
    let mut m = *pure.matrix();
    let damping = 1.0 - config.noise.dephasing;
    m[(0, 3)] *= c(damping, 0.0);
    m[(3, 0)] *= c(damping, 0.0);
    let dephased = DensityMatrix::from_trusted(m);
    if !config.idler_plate_inserted() {
        return dephased.mix(&DensityMatrix::maximally_mixed(), config.noise.werner_p);
    }
    let rotated = apply_local(
        &dephased,
        &LocalOperation::identity(),
        &LocalOperation::half_wave(config.idler_hwp_deg),
    )
    .expect("wave plates are unitary");
    rotated.mix(&DensityMatrix::maximally_mixed(), config.noise.werner_p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingGeometry {
    pub displacement_um: f64,
    pub radius_h_mm: f64,
    pub radius_v_mm: f64,
    pub center_shift_um: f64,
    pub overlap_efficiency: f64,
}

/// Cone radii at the collection plane. The H cone's path shortens by `x`
/// while the V cone's lengthens by `x`.
pub fn ring_geometry(config: &SourceConfig) -> RingGeometry {
    let tan = config.emission_angle_deg.to_radians().tan();
    let x_mm = config.displacement_um * 1e-3;
    let l = config.collection_distance_mm;
    RingGeometry {
        displacement_um: config.displacement_um,
        radius_h_mm: (l - x_mm) * tan,
        radius_v_mm: (l + x_mm) * tan,
        center_shift_um: config.displacement_um.abs() * tan,
        overlap_efficiency: overlap_efficiency(config.displacement_um, config),
    }
}

/// Width of the Gaussian overlap envelope fixed by the calibration point.
pub fn overlap_width_um() -> f64 {
    OVERLAP_CALIBRATION_UM / (-OVERLAP_CALIBRATION_EFFICIENCY.ln()).sqrt()
}

/// η(x) = exp(−(x/σ)²) with η(1800 µm) = 0.79.
///
/// The calibration is tied to the nominal geometry; `config` is accepted so
/// a geometry-aware envelope can replace this without changing callers.
pub fn overlap_efficiency(displacement_um: f64, _config: &SourceConfig) -> f64 {
    let u = displacement_um / overlap_width_um();
    (-u * u).exp()
}
