//! Simulation and analysis of a translatable-crystal Sagnac source of
//! polarization-entangled photon pairs: state emission, polarization
//! analysis, beam-splitter interference, and state tomography.

pub mod config;
pub mod csv_io;
pub mod error;
pub mod experiment;
pub mod interference;
pub mod jones;
pub mod linalg;
pub mod measurement;
pub mod metrics;
pub mod report_file;
pub mod source;
pub mod state;
pub mod tomography;

pub use config::{ConfigLoader, ScenarioConfig};
pub use error::{Error, Result};
pub use jones::{apply_local, LocalOperation, OpKind};
pub use metrics::{concurrence, fidelity, purity, CorrelationBasis, MetricsBundle};
pub use source::{emit_state, overlap_efficiency, ring_geometry, NoiseParams, RingGeometry, SourceConfig};
pub use state::{BellState, DensityMatrix, PureState};
