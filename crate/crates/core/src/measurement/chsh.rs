use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{BellState, DensityMatrix};

use super::analyzer::{coincidence_probability, MeasurementSetting};
use super::counts::{derive_seed, rng_for, poisson, CountingParams};
use super::scan::{stream, Sampling};

/// Linear-polarizer angles (degrees) for the CHSH combination
/// `S = E(a,b) − E(a,b') + E(a',b) + E(a',b')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChshAngles {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl ChshAngles {
    pub const fn new(a: f64, a_prime: f64, b: f64, b_prime: f64) -> Self {
        Self { a, a_prime, b, b_prime }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.a, self.a_prime, self.b, self.b_prime].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::param("chsh.angles", "all four angles must be finite"))
        }
    }

    /// Pairs (α, β) in the order the correlations enter S, with their sign.
    pub fn terms(&self) -> [(f64, f64, f64); 4] {
        [
            (self.a, self.b, 1.0),
            (self.a, self.b_prime, -1.0),
            (self.a_prime, self.b, 1.0),
            (self.a_prime, self.b_prime, 1.0),
        ]
    }
}

/// Angles giving S = +2√2 on the ideal state of each kind.
pub fn chsh_angles(kind: BellState) -> ChshAngles {
    match kind {
        BellState::PhiPlus => ChshAngles::new(0.0, 45.0, 22.5, 67.5),
        BellState::PhiMinus => ChshAngles::new(0.0, 45.0, -22.5, -67.5),
        BellState::PsiPlus => ChshAngles::new(0.0, 45.0, 67.5, 22.5),
        BellState::PsiMinus => ChshAngles::new(0.0, 45.0, 112.5, 157.5),
    }
}

/// The four settings behind one correlation, as `(A, A, B, B)`:
/// `(α, β)`, `(α⊥, β⊥)` are the agreeing outcomes and `(α, β⊥)`, `(α⊥, β)`
/// the disagreeing ones.
fn correlation_settings(alpha: f64, beta: f64) -> [MeasurementSetting; 4] {
    [
        MeasurementSetting::linear(alpha, beta),
        MeasurementSetting::linear(alpha + 90.0, beta + 90.0),
        MeasurementSetting::linear(alpha, beta + 90.0),
        MeasurementSetting::linear(alpha + 90.0, beta),
    ]
}

/// Exact E(α, β).
pub fn correlation(rho: &DensityMatrix, alpha: f64, beta: f64) -> f64 {
    let p = correlation_settings(alpha, beta).map(|s| coincidence_probability(rho, &s));
    (p[0] + p[1] - p[2] - p[3]) / p.iter().sum::<f64>()
}

pub fn chsh_exact(rho: &DensityMatrix, angles: &ChshAngles) -> f64 {
    angles.terms().iter().map(|&(a, b, sign)| sign * correlation(rho, a, b)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub alpha_deg: f64,
    pub beta_deg: f64,
    /// Raw coincidences in setting order `(α,β), (α⊥,β⊥), (α,β⊥), (α⊥,β)`;
    /// expected values when unsampled.
    pub counts: [f64; 4],
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    pub angles: ChshAngles,
    pub s: f64,
    pub sigma_s: f64,
    pub correlations: Vec<CorrelationEstimate>,
}

/// E = (A − B)/(A + B) after subtracting the expected accidentals from
/// every setting; σ_E propagates the Poisson variance of the raw counts.
fn estimate(alpha: f64, beta: f64, raw: [f64; 4], accidentals: f64) -> Result<CorrelationEstimate> {
    let net = raw.map(|n| n - accidentals);
    let a = net[0] + net[1];
    let b = net[2] + net[3];
    let total = a + b;
    if !(total > 0.0) {
        return Err(Error::Degenerate(format!(
            "no net coincidences for E({alpha}°, {beta}°); raise the pair rate or integration time"
        )));
    }
    let var_a = raw[0] + raw[1];
    let var_b = raw[2] + raw[3];
    let t2 = total * total;
    let sigma = ((2.0 * b / t2).powi(2) * var_a + (2.0 * a / t2).powi(2) * var_b).sqrt();
    Ok(CorrelationEstimate { alpha_deg: alpha, beta_deg: beta, counts: raw, value: (a - b) / total, sigma })
}

/// CHSH S from simulated coincidences over 16 settings.
pub fn chsh_from_counts(
    rho: &DensityMatrix,
    angles: &ChshAngles,
    counting: &CountingParams,
    sampling: Sampling,
) -> Result<ChshResult> {
    angles.validate()?;
    counting.validate()?;
    let n = counting.pairs_per_window();
    let acc = counting.accidentals_per_window();
    let mut correlations = Vec::with_capacity(4);
    let (mut s, mut var_s) = (0.0, 0.0);
    for (term, &(alpha, beta, sign)) in angles.terms().iter().enumerate() {
        let settings = correlation_settings(alpha, beta);
        let mut raw = [0.0; 4];
        for (k, setting) in settings.iter().enumerate() {
            let mean = coincidence_probability(rho, setting) * n + acc;
            raw[k] = match sampling {
                Sampling::Exact => mean,
                Sampling::Poisson { seed } => {
                    let mut rng = rng_for(derive_seed(seed, stream::CHSH, (4 * term + k) as u64));
                    poisson(mean, &mut rng) as f64
                }
            };
        }
        let e = estimate(alpha, beta, raw, acc)?;
        s += sign * e.value;
        var_s += e.sigma * e.sigma;
        correlations.push(e);
    }
    Ok(ChshResult { angles: *angles, s, sigma_s: var_s.sqrt(), correlations })
}
