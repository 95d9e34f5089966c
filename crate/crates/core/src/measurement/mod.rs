//! Analyzer settings, coincidence probabilities, Poisson counting, parameter
//! scans and fringe analysis.

pub mod analyzer;
pub mod chsh;
pub mod counts;
pub mod fringe;
pub mod scan;

pub use analyzer::{coincidence_probability, outcome_probabilities, Analyzer, BasisState, MeasurementSetting, OutcomeProbabilities};
pub use chsh::{chsh_angles, chsh_exact, chsh_from_counts, correlation, ChshAngles, ChshResult, CorrelationEstimate};
pub use counts::{derive_seed, poisson, rng_for, sample_coincidences, sample_counts, CountRecord, CountingParams};
pub use fringe::{fit_fringe, FitOptions, FringeFit};
pub use scan::{
    analyze_switching, correlation_scan, count_state_flips, expected_visibility, local_extrema, polarizer_scan,
    translation_scan, visibility, Extremum, ExtremumKind, PointCounts, Sampling, ScanMetadata, ScanPoint, ScanRange,
    ScanSeries, ScanTable, SwitchingAnalysis,
};
