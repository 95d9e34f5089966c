use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::analyzer::OutcomeProbabilities;

pub const DEFAULT_PAIR_RATE_HZ: f64 = 10_000.0;
pub const DEFAULT_INTEGRATION_TIME_S: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CountingParams {
    pub pair_rate_hz: f64,
    pub integration_time_s: f64,
    pub accidental_rate_hz: f64,
}

impl Default for CountingParams {
    fn default() -> Self {
        Self {
            pair_rate_hz: DEFAULT_PAIR_RATE_HZ,
            integration_time_s: DEFAULT_INTEGRATION_TIME_S,
            accidental_rate_hz: 0.0,
        }
    }
}

impl CountingParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("counting.pair_rate_hz", self.pair_rate_hz),
            ("counting.integration_time_s", self.integration_time_s),
            ("counting.accidental_rate_hz", self.accidental_rate_hz),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("{v} must be a finite non-negative number")));
            }
        }
        Ok(())
    }

    /// Pairs emitted during one integration window.
    pub fn pairs_per_window(&self) -> f64 {
        self.pair_rate_hz * self.integration_time_s
    }

    pub fn accidentals_per_window(&self) -> f64 {
        self.accidental_rate_hz * self.integration_time_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub singles_s: u64,
    pub singles_i: u64,
    pub coincidences: u64,
    pub integration_time_s: f64,
    pub pair_rate_hz: f64,
    pub rng_seed: u64,
}

/// SplitMix64 finalizer; turns (seed, stream, index) into well-separated
/// RNG seeds so every scan point owns an independent stream.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93)
        ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn poisson(mean: f64, rng: &mut ChaCha8Rng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// Poisson counts for one setting.
///
/// Coincidences have mean `p·N·η + accidentals`, singles `p_arm·N·η`, with
/// `N` the pairs per window and `η` the collection efficiency.
pub fn sample_counts(
    probabilities: &OutcomeProbabilities,
    counting: &CountingParams,
    efficiency: f64,
    seed: u64,
) -> Result<CountRecord> {
    counting.validate()?;
    let p = probabilities.coincidence;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param("p", format!("{p} outside [0, 1]")));
    }
    if !(0.0..=1.0).contains(&efficiency) {
        return Err(Error::param("efficiency", format!("{efficiency} outside [0, 1]")));
    }
    let n = counting.pairs_per_window() * efficiency;
    let mut rng = rng_for(seed);
    let coincidences = poisson(p * n + counting.accidentals_per_window(), &mut rng);
    let singles_s = poisson(probabilities.signal * n, &mut rng);
    let singles_i = poisson(probabilities.idler * n, &mut rng);
    Ok(CountRecord {
        singles_s,
        singles_i,
        coincidences,
        integration_time_s: counting.integration_time_s,
        pair_rate_hz: counting.pair_rate_hz,
        rng_seed: seed,
    })
}

/// Coincidence-only convenience with both arms open.
pub fn sample_coincidences(p: f64, counting: &CountingParams, seed: u64) -> Result<CountRecord> {
    sample_counts(&OutcomeProbabilities { coincidence: p, signal: 1.0, idler: 1.0 }, counting, 1.0, seed)
}
