use std::sync::OnceLock;

use nalgebra::{Const, SMatrix, SVector, LU};

use crate::error::{Error, Result};
use crate::linalg::{self, c, Mat4};
use crate::state::DensityMatrix;

use super::{qst_settings, TomographyCounts, SETTING_COUNT};

pub type Design = SMatrix<f64, SETTING_COUNT, SETTING_COUNT>;

/// Two-qubit Pauli products σμ⊗σν, index μ·4 + ν.
fn pauli_products() -> [Mat4; 16] {
    let p = linalg::pauli();
    std::array::from_fn(|a| linalg::kron(&p[a / 4], &p[a % 4]))
}

/// B[k][a] = Tr(Π_k σ_a)/4, so that Tr(ρΠ_k) = Σ_a B[k][a]·r_a for
/// ρ = Σ_a r_a σ_a/4 with real r.
pub fn design_matrix() -> Design {
    let settings = qst_settings();
    let paulis = pauli_products();
    Design::from_fn(|k, a| linalg::trace_product_re(&settings[k].projector(), &paulis[a]) / 4.0)
}

/// Relative singular-value floor below which the design is rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

fn check_rank(b: &Design) -> Result<()> {
    let sv = b.singular_values();
    let max = sv.max();
    if sv.min() <= RANK_TOLERANCE * max {
        return Err(Error::SingularDesign);
    }
    Ok(())
}

/// LU factors of the design after a one-time rank check.
fn factored_design() -> Result<&'static LU<f64, Const<SETTING_COUNT>, Const<SETTING_COUNT>>> {
    static DESIGN: OnceLock<Option<LU<f64, Const<SETTING_COUNT>, Const<SETTING_COUNT>>>> = OnceLock::new();
    DESIGN
        .get_or_init(|| {
            let b = design_matrix();
            check_rank(&b).ok().map(|_| b.lu())
        })
        .as_ref()
        .ok_or(Error::SingularDesign)
}

/// Linear inversion of per-setting data (counts or probabilities, any
/// overall scale) to a Hermitian, unit-trace matrix that may have negative
/// eigenvalues.
pub fn linear_reconstruct_data(data: &[f64; SETTING_COUNT]) -> Result<Mat4> {
    let rhs = SVector::<f64, SETTING_COUNT>::from_column_slice(data);
    let r = factored_design()?.solve(&rhs).ok_or(Error::SingularDesign)?;
    let trace = r[0];
    if !(trace > 0.0) {
        return Err(Error::Degenerate("reconstructed trace is not positive; all settings empty?".into()));
    }
    let paulis = pauli_products();
    let mut m = Mat4::zeros();
    for (a, sigma) in paulis.iter().enumerate() {
        m += sigma * c(r[a] / (4.0 * trace), 0.0);
    }
    Ok(linalg::hermitian_part(&m))
}

/// Linear inversion after subtracting the expected accidentals.
pub fn linear_reconstruct(counts: &TomographyCounts) -> Result<Mat4> {
    let data = counts.coincidences().map(|n| n - counts.accidentals);
    linear_reconstruct_data(&data)
}

/// Nearest density matrix by eigenvalue clamping: eigenvalues below `floor`
/// are raised to it and the result renormalized.
pub fn project_to_physical(m: &Mat4, floor: f64) -> DensityMatrix {
    let clamped = linalg::hermitian_map(&linalg::hermitian_part(m), |v| v.max(floor));
    let trace = linalg::trace(&clamped).re;
    DensityMatrix::from_trusted(linalg::hermitian_part(&(clamped / c(trace, 0.0))))
}
