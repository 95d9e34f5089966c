//! Entanglement and quality metrics of a two-qubit density matrix.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, Mat4};
use crate::state::{DensityMatrix, PureState};

/// The three mutually unbiased analyzer bases used for correlation fringes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationBasis {
    /// H/V
    Computational,
    /// D/A (±45°)
    Diagonal,
    /// R/L
    Circular,
}

impl CorrelationBasis {
    pub const ALL: [CorrelationBasis; 3] =
        [CorrelationBasis::Computational, CorrelationBasis::Diagonal, CorrelationBasis::Circular];

    pub fn label(self) -> &'static str {
        match self {
            CorrelationBasis::Computational => "hv",
            CorrelationBasis::Diagonal => "da",
            CorrelationBasis::Circular => "rl",
        }
    }
}

/// Tr(ρ²).
pub fn purity(rho: &DensityMatrix) -> f64 {
    linalg::trace_product_re(rho.matrix(), rho.matrix())
}

/// ⟨ψ|ρ|ψ⟩ (the un-square-rooted convention).
pub fn fidelity(rho: &DensityMatrix, target: &PureState) -> f64 {
    let psi = target.amplitudes();
    psi.dotc(&(rho.matrix() * psi)).re.clamp(0.0, 1.0)
}

/// ρ̃ = (σy⊗σy) ρ* (σy⊗σy).
pub fn spin_flip(rho: &Mat4) -> Mat4 {
    let yy = linalg::kron(&linalg::pauli()[2], &linalg::pauli()[2]);
    yy * rho.conjugate() * yy
}

/// Wootters concurrence.
///
/// The λᵢ are the square roots of the eigenvalues of ρρ̃. They are obtained
/// from the Hermitian matrix √ρ·ρ̃·√ρ, which is similar to ρρ̃ and so has the
/// same spectrum.
pub fn concurrence(rho: &DensityMatrix) -> f64 {
    let sqrt_rho = linalg::hermitian_map(rho.matrix(), |v| v.max(0.0).sqrt());
    let r = sqrt_rho * spin_flip(rho.matrix()) * sqrt_rho;
    let mut lambdas = linalg::eigenvalues_hermitian(&r).map(|v| v.max(0.0).sqrt());
    lambdas.sort_by(|a, b| b.total_cmp(a));
    (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0)
}

/// T_ij = Tr(ρ σᵢ⊗σⱼ) for i, j ∈ {x, y, z}.
pub fn correlation_matrix(rho: &DensityMatrix) -> Matrix3<f64> {
    let p = linalg::pauli();
    Matrix3::from_fn(|i, j| linalg::trace_product_re(rho.matrix(), &linalg::kron(&p[i + 1], &p[j + 1])))
}

/// Maximal CHSH value over all measurement directions (Horodecki criterion):
/// S = 2√(m₁ + m₂) with m₁, m₂ the two largest eigenvalues of TᵀT.
pub fn chsh_max(rho: &DensityMatrix) -> f64 {
    let t = correlation_matrix(rho);
    let mut m: Vec<f64> = SymmetricEigen::new(t.transpose() * t).eigenvalues.iter().copied().collect();
    m.sort_by(|a, b| b.total_cmp(a));
    2.0 * (m[0] + m[1]).max(0.0).sqrt()
}

pub const CHSH_QUANTUM_BOUND: f64 = 2.0 * SQRT_2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsBundle {
    pub purity: f64,
    pub fidelity: f64,
    pub concurrence: f64,
    pub chsh_s: f64,
    pub visibilities: BTreeMap<CorrelationBasis, f64>,
}

impl MetricsBundle {
    /// State metrics of `rho` against `target`; visibilities are left empty
    /// and filled by whoever measured the fringes.
    pub fn evaluate(rho: &DensityMatrix, target: &PureState) -> Self {
        Self {
            purity: purity(rho),
            fidelity: fidelity(rho, target),
            concurrence: concurrence(rho),
            chsh_s: chsh_max(rho),
            visibilities: BTreeMap::new(),
        }
    }
}
