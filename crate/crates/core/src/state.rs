//! Two-qubit polarization states of the signal–idler pair.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, Mat4, Vec4, C64, ZERO};

const NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
/// Reconstruction noise produces tiny negative eigenvalues; anything above
/// this floor is accepted as physical.
pub const EIGENVALUE_FLOOR: f64 = -1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BellState::PhiPlus => "phi_plus",
            BellState::PhiMinus => "phi_minus",
            BellState::PsiPlus => "psi_plus",
            BellState::PsiMinus => "psi_minus",
        }
    }

    /// True for the |ψ±⟩ family (one photon H, the other V).
    pub fn is_psi(self) -> bool {
        matches!(self, BellState::PsiPlus | BellState::PsiMinus)
    }

    /// True for the states carrying a relative minus sign.
    pub fn is_minus(self) -> bool {
        matches!(self, BellState::PhiMinus | BellState::PsiMinus)
    }

    pub fn state(self) -> PureState {
        bell_state(self)
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BellState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        match key.as_str() {
            "phi_plus" | "phi-plus" | "phi+" => Ok(BellState::PhiPlus),
            "phi_minus" | "phi-minus" | "phi-" => Ok(BellState::PhiMinus),
            "psi_plus" | "psi-plus" | "psi+" => Ok(BellState::PsiPlus),
            "psi_minus" | "psi-minus" | "psi-" => Ok(BellState::PsiMinus),
            other => Err(Error::param("state", format!("unknown Bell state `{other}`"))),
        }
    }
}

/// Normalized amplitudes over (HH, HV, VH, VV).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState {
    amplitudes: Vec4,
}

impl PureState {
    pub fn new(amplitudes: [C64; 4]) -> Result<Self> {
        let v = Vec4::from(amplitudes);
        let norm_sq: f64 = v.iter().map(|a| a.norm_sqr()).sum();
        if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("squared norm {norm_sq} is not 1")));
        }
        Ok(Self { amplitudes: v })
    }

    /// Normalizes the given amplitudes; fails only for the zero vector.
    pub fn normalized(amplitudes: [C64; 4]) -> Result<Self> {
        let v = Vec4::from(amplitudes);
        let norm = v.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Ok(Self { amplitudes: v / c(norm, 0.0) })
    }

    pub fn amplitudes(&self) -> &Vec4 {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// |⟨self|other⟩|².
    pub fn overlap(&self, other: &PureState) -> f64 {
        self.amplitudes.dotc(&other.amplitudes).norm_sqr()
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        DensityMatrix { entries: self.amplitudes * self.amplitudes.adjoint() }
    }
}

/// |φ⟩ = (|HH⟩ + e^{iφ}|VV⟩)/√2, the state emitted by the source before the
/// idler half-wave plate.
pub fn phase_state(phase: f64) -> PureState {
    let s = FRAC_1_SQRT_2;
    PureState {
        amplitudes: Vec4::new(c(s, 0.0), ZERO, ZERO, C64::from_polar(s, phase)),
    }
}

pub fn bell_state(kind: BellState) -> PureState {
    let s = FRAC_1_SQRT_2;
    let (hh, hv, vh, vv) = match kind {
        BellState::PhiPlus => (s, 0.0, 0.0, s),
        BellState::PhiMinus => (s, 0.0, 0.0, -s),
        BellState::PsiPlus => (0.0, s, s, 0.0),
        BellState::PsiMinus => (0.0, s, -s, 0.0),
    };
    PureState {
        amplitudes: Vec4::new(c(hh, 0.0), c(hv, 0.0), c(vh, 0.0), c(vv, 0.0)),
    }
}

/// A validated 4×4 density matrix: Hermitian, unit trace, positive
/// semidefinite up to [`EIGENVALUE_FLOOR`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    entries: Mat4,
}

impl DensityMatrix {
    pub fn new(entries: Mat4) -> Result<Self> {
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let asym = linalg::max_abs(&(entries - entries.adjoint()));
        if asym > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {asym:e})")));
        }
        let tr = linalg::trace(&entries);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min_eig = linalg::eigenvalues_hermitian(&entries)[0];
        if min_eig < EIGENVALUE_FLOOR {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(Self { entries })
    }

    /// Wraps a matrix that is physical by construction. Only used internally
    /// where positivity follows from the algebra (e.g. `T†T / Tr`).
    pub(crate) fn from_trusted(entries: Mat4) -> Self {
        Self { entries: linalg::hermitian_part(&entries) }
    }

    pub fn maximally_mixed() -> Self {
        Self { entries: Mat4::identity() * c(0.25, 0.0) }
    }

    /// p·|ψ⟩⟨ψ| + (1 − p)·I/4.
    pub fn werner(target: &PureState, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param("p", format!("{p} outside [0, 1]")));
        }
        Ok(target.density_matrix().mix(&Self::maximally_mixed(), p))
    }

    /// Convex combination `weight·self + (1 − weight)·other`.
    pub fn mix(&self, other: &DensityMatrix, weight: f64) -> Self {
        Self {
            entries: self.entries * c(weight, 0.0) + other.entries * c(1.0 - weight, 0.0),
        }
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        linalg::eigenvalues_hermitian(&self.entries)
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        linalg::trace_distance(&self.entries, &other.entries)
    }

    /// Rows of `[re, im]` pairs, the layout used in reports.
    pub fn to_rows(&self) -> Vec<Vec<[f64; 2]>> {
        (0..4)
            .map(|r| (0..4).map(|k| [self.entries[(r, k)].re, self.entries[(r, k)].im]).collect())
            .collect()
    }

    /// Inverse of [`DensityMatrix::to_rows`], validating the result.
    pub fn from_rows(rows: &[Vec<[f64; 2]>]) -> Result<Self> {
        if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
            return Err(Error::InvalidState("density matrix must be 4×4".into()));
        }
        Self::new(Mat4::from_fn(|r, k| c(rows[r][k][0], rows[r][k][1])))
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(deserializer)?;
        Self::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

impl From<PureState> for DensityMatrix {
    fn from(state: PureState) -> Self {
        state.density_matrix()
    }
}

impl From<&PureState> for DensityMatrix {
    fn from(state: &PureState) -> Self {
        state.density_matrix()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_vectors_match_definitions() {
        let s = FRAC_1_SQRT_2;
        let phi = bell_state(BellState::PhiPlus);
        assert_eq!(phi.amplitudes()[0], c(s, 0.0));
        assert_eq!(phi.amplitudes()[3], c(s, 0.0));
        let psi = bell_state(BellState::PsiMinus);
        assert_eq!(psi.amplitudes()[1], c(s, 0.0));
        assert_eq!(psi.amplitudes()[2], c(-s, 0.0));
        for kind in BellState::ALL {
            assert!((kind.state().norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn bell_basis_is_orthonormal() {
        for a in BellState::ALL {
            for b in BellState::ALL {
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((a.state().overlap(&b.state()) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_unnormalized_and_unphysical() {
        assert!(PureState::new([c(1.0, 0.0), c(1.0, 0.0), ZERO, ZERO]).is_err());
        let mut m = Mat4::identity() * c(0.25, 0.0);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_err(), "non-Hermitian accepted");
        let neg = Mat4::from_diagonal(&Vec4::new(c(0.6, 0.0), c(0.6, 0.0), c(-0.1, 0.0), c(-0.1, 0.0)));
        assert!(DensityMatrix::new(neg).is_err(), "negative eigenvalue accepted");
        assert!(DensityMatrix::new(Mat4::identity()).is_err(), "trace 4 accepted");
    }

    #[test]
    fn phase_state_hits_bell_states() {
        let plus = phase_state(0.0);
        let minus = phase_state(std::f64::consts::PI);
        assert!((plus.overlap(&BellState::PhiPlus.state()) - 1.0).abs() < 1e-15);
        assert!((minus.overlap(&BellState::PhiMinus.state()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn parses_state_labels() {
        assert_eq!("psi-plus".parse::<BellState>().unwrap(), BellState::PsiPlus);
        assert_eq!("phi-".parse::<BellState>().unwrap(), BellState::PhiMinus);
        assert!("chi".parse::<BellState>().is_err());
    }
}
