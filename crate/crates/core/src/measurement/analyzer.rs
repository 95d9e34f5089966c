use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jones::LocalOperation;
use crate::linalg::{self, c, Mat2, C64, ONE, ZERO};
use crate::state::DensityMatrix;

/// The six cardinal polarization states. R = (H − iV)/√2, L = (H + iV)/√2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BasisState {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl BasisState {
    pub fn vector(self) -> [C64; 2] {
        let s = FRAC_1_SQRT_2;
        match self {
            BasisState::H => [ONE, ZERO],
            BasisState::V => [ZERO, ONE],
            BasisState::D => [c(s, 0.0), c(s, 0.0)],
            BasisState::A => [c(s, 0.0), c(-s, 0.0)],
            BasisState::R => [c(s, 0.0), c(0.0, -s)],
            BasisState::L => [c(s, 0.0), c(0.0, s)],
        }
    }

    pub fn orthogonal(self) -> BasisState {
        match self {
            BasisState::H => BasisState::V,
            BasisState::V => BasisState::H,
            BasisState::D => BasisState::A,
            BasisState::A => BasisState::D,
            BasisState::R => BasisState::L,
            BasisState::L => BasisState::R,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            BasisState::H => 'H',
            BasisState::V => 'V',
            BasisState::D => 'D',
            BasisState::A => 'A',
            BasisState::R => 'R',
            BasisState::L => 'L',
        }
    }
}

impl TryFrom<char> for BasisState {
    type Error = Error;

    fn try_from(ch: char) -> Result<Self> {
        Ok(match ch.to_ascii_uppercase() {
            'H' => BasisState::H,
            'V' => BasisState::V,
            'D' => BasisState::D,
            'A' => BasisState::A,
            'R' => BasisState::R,
            'L' => BasisState::L,
            other => return Err(Error::param("basis", format!("unknown basis state `{other}`"))),
        })
    }
}

/// What sits in front of one detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Analyzer {
    /// No analyzer: every photon is detected.
    Open,
    Basis { state: BasisState },
    /// Linear polarizer at the given angle.
    Linear { angle_deg: f64 },
    /// Quarter-wave plate followed by a linear polarizer; with the plate at
    /// 0° the polarizer angle sweeps H → R → V → L.
    Elliptical { qwp_deg: f64, polarizer_deg: f64 },
}

impl Analyzer {
    pub fn basis(state: BasisState) -> Self {
        Analyzer::Basis { state }
    }

    pub fn linear(angle_deg: f64) -> Self {
        Analyzer::Linear { angle_deg }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = match *self {
            Analyzer::Open | Analyzer::Basis { .. } => true,
            Analyzer::Linear { angle_deg } => angle_deg.is_finite(),
            Analyzer::Elliptical { qwp_deg, polarizer_deg } => qwp_deg.is_finite() && polarizer_deg.is_finite(),
        };
        if finite {
            Ok(())
        } else {
            Err(Error::param("analyzer", "angle must be finite"))
        }
    }

    /// Detection operator E (a 2×2 effect; a rank-one projector except for
    /// `Open`).
    pub fn effect(&self) -> Mat2 {
        match *self {
            Analyzer::Open => Mat2::identity(),
            Analyzer::Basis { state } => projector(state.vector()),
            Analyzer::Linear { angle_deg } => *LocalOperation::polarizer(angle_deg).jones(),
            Analyzer::Elliptical { qwp_deg, polarizer_deg } => {
                let q = *LocalOperation::quarter_wave(qwp_deg).jones();
                q.adjoint() * LocalOperation::polarizer(polarizer_deg).jones() * q
            }
        }
    }
}

impl fmt::Display for Analyzer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Analyzer::Open => f.write_str("open"),
            Analyzer::Basis { state } => write!(f, "{}", state.symbol()),
            Analyzer::Linear { angle_deg } => write!(f, "{angle_deg}deg"),
            Analyzer::Elliptical { qwp_deg, polarizer_deg } => write!(f, "qwp{qwp_deg}+{polarizer_deg}deg"),
        }
    }
}

impl FromStr for Analyzer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("open") {
            return Ok(Analyzer::Open);
        }
        let mut chars = s.chars();
        if let (Some(ch), None) = (chars.next(), chars.next()) {
            return BasisState::try_from(ch).map(Analyzer::basis);
        }
        let deg = s.strip_suffix("deg").unwrap_or(s);
        deg.parse::<f64>()
            .map(Analyzer::linear)
            .map_err(|_| Error::param("analyzer", format!("cannot parse `{s}`")))
    }
}

fn projector(v: [C64; 2]) -> Mat2 {
    Mat2::new(
        v[0] * v[0].conj(),
        v[0] * v[1].conj(),
        v[1] * v[0].conj(),
        v[1] * v[1].conj(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub signal: Analyzer,
    pub idler: Analyzer,
}

impl MeasurementSetting {
    pub fn new(signal: Analyzer, idler: Analyzer) -> Self {
        Self { signal, idler }
    }

    pub fn bases(signal: BasisState, idler: BasisState) -> Self {
        Self::new(Analyzer::basis(signal), Analyzer::basis(idler))
    }

    pub fn linear(signal_deg: f64, idler_deg: f64) -> Self {
        Self::new(Analyzer::linear(signal_deg), Analyzer::linear(idler_deg))
    }

    /// Both polarizers at +45°, the diagonal projection used during
    /// crystal-translation scans.
    pub fn diagonal() -> Self {
        Self::linear(45.0, 45.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.signal.validate()?;
        self.idler.validate()
    }
}

/// Tr(ρ · E_s⊗E_i).
pub fn coincidence_probability(rho: &DensityMatrix, setting: &MeasurementSetting) -> f64 {
    let effect = linalg::kron(&setting.signal.effect(), &setting.idler.effect());
    linalg::trace_product_re(rho.matrix(), &effect).clamp(0.0, 1.0)
}

/// Detection probabilities for one setting: the joint event and each arm
/// on its own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeProbabilities {
    pub coincidence: f64,
    pub signal: f64,
    pub idler: f64,
}

pub fn outcome_probabilities(rho: &DensityMatrix, setting: &MeasurementSetting) -> OutcomeProbabilities {
    OutcomeProbabilities {
        coincidence: coincidence_probability(rho, setting),
        signal: coincidence_probability(rho, &MeasurementSetting::new(setting.signal, Analyzer::Open)),
        idler: coincidence_probability(rho, &MeasurementSetting::new(Analyzer::Open, setting.idler)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{phase_state, BellState};
    use std::f64::consts::PI;

    #[test]
    fn diagonal_projection_of_bell_states() {
        let plus: DensityMatrix = BellState::PhiPlus.state().into();
        let minus: DensityMatrix = BellState::PhiMinus.state().into();
        assert!((coincidence_probability(&plus, &MeasurementSetting::diagonal()) - 0.5).abs() < 1e-15);
        assert!(coincidence_probability(&minus, &MeasurementSetting::diagonal()).abs() < 1e-15);
    }

    #[test]
    fn diagonal_projection_follows_cosine() {
        for phi in [0.0, PI / 3.0, PI / 2.0, PI] {
            let rho = phase_state(phi).density_matrix();
            let p = coincidence_probability(&rho, &MeasurementSetting::diagonal());
            assert!((p - (1.0 + phi.cos()) / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_and_angle_analyzers_agree() {
        let rho = DensityMatrix::werner(&BellState::PsiPlus.state(), 0.7).unwrap();
        let by_basis = coincidence_probability(&rho, &MeasurementSetting::bases(BasisState::D, BasisState::A));
        let by_angle = coincidence_probability(&rho, &MeasurementSetting::linear(45.0, -45.0));
        assert!((by_basis - by_angle).abs() < 1e-14);
    }

    #[test]
    fn elliptical_analyzer_reaches_circular_states() {
        let r = Analyzer::Elliptical { qwp_deg: 0.0, polarizer_deg: 45.0 }.effect();
        let l = Analyzer::Elliptical { qwp_deg: 0.0, polarizer_deg: -45.0 }.effect();
        assert!((r - Analyzer::basis(BasisState::R).effect()).iter().all(|z| z.norm() < 1e-14));
        assert!((l - Analyzer::basis(BasisState::L).effect()).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn parses_analyzers() {
        assert_eq!("open".parse::<Analyzer>().unwrap(), Analyzer::Open);
        assert_eq!("D".parse::<Analyzer>().unwrap(), Analyzer::basis(BasisState::D));
        assert_eq!("22.5deg".parse::<Analyzer>().unwrap(), Analyzer::linear(22.5));
        assert!("Q".parse::<Analyzer>().is_err());
    }

    #[test]
    fn open_arm_marginal_is_half_for_bell_states() {
        let rho: DensityMatrix = BellState::PsiMinus.state().into();
        let o = outcome_probabilities(&rho, &MeasurementSetting::bases(BasisState::H, BasisState::V));
        assert!((o.coincidence - 0.5).abs() < 1e-15);
        assert!((o.signal - 0.5).abs() < 1e-15);
        assert!((o.idler - 0.5).abs() < 1e-15);
    }
}
