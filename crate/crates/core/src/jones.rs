//! Jones matrices for the per-arm optics and their action on two-qubit states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, Mat2, C64, I, ONE};
use crate::state::DensityMatrix;

/// Survival probability below which a projected state is considered lost.
const ANNIHILATION_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OpKind {
    Identity,
    HalfWave { angle_deg: f64 },
    QuarterWave { angle_deg: f64 },
    Polarizer { angle_deg: f64 },
}

/// A single-arm optical element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalOperation {
    kind: OpKind,
    jones: Mat2,
}

impl LocalOperation {
    pub fn identity() -> Self {
        Self { kind: OpKind::Identity, jones: Mat2::identity() }
    }

    /// HWP(θ) = [[cos2θ, sin2θ], [sin2θ, −cos2θ]].
    pub fn half_wave(angle_deg: f64) -> Self {
        let (s, co) = (2.0 * angle_deg.to_radians()).sin_cos();
        Self {
            kind: OpKind::HalfWave { angle_deg },
            jones: Mat2::new(c(co, 0.0), c(s, 0.0), c(s, 0.0), c(-co, 0.0)),
        }
    }

    /// Quarter-wave plate with fast axis at θ: R(−θ)·diag(1, i)·R(θ).
    pub fn quarter_wave(angle_deg: f64) -> Self {
        let (s, co) = angle_deg.to_radians().sin_cos();
        let off = (ONE - I) * (s * co);
        Self {
            kind: OpKind::QuarterWave { angle_deg },
            jones: Mat2::new(
                c(co * co, 0.0) + I * (s * s),
                off,
                off,
                c(s * s, 0.0) + I * (co * co),
            ),
        }
    }

    /// Ideal linear polarizer transmitting cosθ|H⟩ + sinθ|V⟩.
    pub fn polarizer(angle_deg: f64) -> Self {
        let (s, co) = angle_deg.to_radians().sin_cos();
        Self {
            kind: OpKind::Polarizer { angle_deg },
            jones: Mat2::new(c(co * co, 0.0), c(s * co, 0.0), c(s * co, 0.0), c(s * s, 0.0)),
        }
    }

    pub fn kind(&self) -> OpKind {
        self.kind
    }

    pub fn jones(&self) -> &Mat2 {
        &self.jones
    }

    pub fn is_projector(&self) -> bool {
        matches!(self.kind, OpKind::Polarizer { .. })
    }

    /// Deviation of J†J from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.jones.adjoint() * self.jones - Mat2::identity();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// ρ' = (A⊗B) ρ (A⊗B)†, renormalized when either element is a projector.
pub fn apply_local(
    state: &DensityMatrix,
    signal_op: &LocalOperation,
    idler_op: &LocalOperation,
) -> Result<DensityMatrix> {
    let op = linalg::kron(&signal_op.jones, &idler_op.jones);
    let out = op * state.matrix() * op.adjoint();
    if signal_op.is_projector() || idler_op.is_projector() {
        let survival = linalg::trace(&out).re;
        if survival < ANNIHILATION_TOL {
            return Err(Error::StateAnnihilated { probability: survival });
        }
        Ok(DensityMatrix::from_trusted(out / c(survival, 0.0)))
    } else {
        Ok(DensityMatrix::from_trusted(out))
    }
}

/// Jones vector cosθ|H⟩ + sinθ|V⟩.
pub fn linear_polarization(angle_deg: f64) -> [C64; 2] {
    let (s, co) = angle_deg.to_radians().sin_cos();
    [c(co, 0.0), c(s, 0.0)]
}
