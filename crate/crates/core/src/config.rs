//! Scenario configuration: named presets, TOML files and dotted-key
//! overrides layered into one validated [`ScenarioConfig`].

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interference::{BeamSplitterKind, BeamSplitterModel, FilterModel};
use crate::measurement::counts::CountingParams;
use crate::measurement::scan::{Sampling, ScanRange};
use crate::measurement::MeasurementSetting;
use crate::source::{NoiseParams, SourceConfig};
use crate::state::BellState;
use crate::tomography::ReportOptions;

/// Beam splitter as written in a config file. Phases and ratio default to
/// the values of `kind`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSplitterSpec {
    pub kind: BeamSplitterKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

impl Default for BeamSplitterSpec {
    fn default() -> Self {
        Self::of_kind(BeamSplitterKind::IdealSymmetric)
    }
}

impl BeamSplitterSpec {
    pub fn of_kind(kind: BeamSplitterKind) -> Self {
        Self { kind, phase_h: None, phase_v: None, ratio: None }
    }

    pub fn model(&self) -> BeamSplitterModel {
        let base = BeamSplitterModel::of_kind(self.kind);
        BeamSplitterModel {
            kind: self.kind,
            phase_h: self.phase_h.unwrap_or(base.phase_h),
            phase_v: self.phase_v.unwrap_or(base.phase_v),
            ratio: self.ratio.unwrap_or(base.ratio),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TranslationConfig {
    pub range: ScanRange,
    pub setting: MeasurementSetting,
}

impl Default for TranslationConfig {
    fn default() -> Self {
        Self { range: ScanRange { from: -600.0, to: 600.0, step: 2.0 }, setting: MeasurementSetting::diagonal() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomConfig {
    /// States to scan; each is prepared with [`SourceConfig::tuned_to`].
    /// Empty means the configured source as is.
    pub states: Vec<BellState>,
    /// Delay range in femtoseconds.
    pub delay: ScanRange,
}

impl Default for HomConfig {
    fn default() -> Self {
        Self { states: Vec::new(), delay: ScanRange { from: -800.0, to: 800.0, step: 10.0 } }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BsmConfig {
    pub range: ScanRange,
}

impl Default for BsmConfig {
    fn default() -> Self {
        Self { range: ScanRange { from: 0.0, to: 1220.0, step: 2.0 } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub displacements_um: Vec<f64>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { displacements_um: vec![0.0, 122.0, 244.0, 610.0, 1220.0, 1800.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Root seed; must fit in a TOML integer (at most 2^63 − 1).
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Ideal source, no accidentals, and exact expectations instead of
    /// Poisson counts.
    pub noiseless: bool,
    /// Set when the noise parameters are fitted to reference data rather
    /// than predicted; copied into every report.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<String>,
    pub source: SourceConfig,
    pub counting: CountingParams,
    pub beam_splitter: BeamSplitterSpec,
    pub filter: FilterModel,
    pub translation: TranslationConfig,
    pub hom: HomConfig,
    pub bsm: BsmConfig,
    pub geometry: GeometryConfig,
    pub qst: ReportOptions,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            output_dir: PathBuf::from("out"),
            noiseless: false,
            calibration: None,
            source: SourceConfig::default(),
            counting: CountingParams::default(),
            beam_splitter: BeamSplitterSpec::default(),
            filter: FilterModel::default(),
            translation: TranslationConfig::default(),
            hom: HomConfig::default(),
            bsm: BsmConfig::default(),
            geometry: GeometryConfig::default(),
            qst: ReportOptions::default(),
        }
    }
}

pub const TABLE1_CALIBRATION: &str =
    "noise parameters calibrated to reference tomography data; metrics are a calibration match, not a prediction";

/// Pair rate giving roughly 10^4 coincidences per tomography setting.
pub const TABLE1_PAIR_RATE_HZ: f64 = 36_000.0;

pub const PRESETS: [&str; 13] = [
    "default",
    "fig3",
    "fig4",
    "fig8a",
    "fig8b",
    "fig8c",
    "fig8d",
    "fig9",
    "fig10",
    "table1-phi-plus",
    "table1-phi-minus",
    "table1-psi-plus",
    "table1-psi-minus",
];

pub fn table1_preset_name(kind: BellState) -> String {
    format!("table1-{}", kind.label().replace('_', "-"))
}

/// Calibrated (werner_p, dephasing) per Bell state.
pub fn table1_noise(kind: BellState) -> NoiseParams {
    let (werner_p, dephasing) = match kind {
        BellState::PhiPlus => (0.9817, 0.0057),
        BellState::PhiMinus => (0.9740, 0.0),
        BellState::PsiPlus => (0.9798, 0.0040),
        BellState::PsiMinus => (0.9759, 0.0109),
    };
    NoiseParams { werner_p, dephasing }
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let mut c = ScenarioConfig::default();
    let hom = |c: &mut ScenarioConfig, kind, states: &[BellState]| {
        c.beam_splitter = BeamSplitterSpec::of_kind(kind);
        c.hom.states = states.to_vec();
    };
    match name {
        "default" | "fig3" => {}
        "fig4" => c.source.idler_hwp_deg = 45.0,
        "fig8a" => hom(&mut c, BeamSplitterKind::Dielectric, &[BellState::PhiPlus]),
        "fig8b" => hom(&mut c, BeamSplitterKind::Dielectric, &[BellState::PhiMinus]),
        "fig8c" => hom(&mut c, BeamSplitterKind::Dielectric, &[BellState::PsiPlus]),
        "fig8d" => hom(&mut c, BeamSplitterKind::Dielectric, &[BellState::PsiMinus]),
        "fig9" => hom(&mut c, BeamSplitterKind::PmFiber, &[BellState::PsiPlus, BellState::PsiMinus]),
        "fig10" => {
            c.source.idler_hwp_deg = 45.0;
            c.beam_splitter = BeamSplitterSpec::of_kind(BeamSplitterKind::PmFiber);
        }
        other => {
            let kind = other
                .strip_prefix("table1-")
                .and_then(|s| s.parse::<BellState>().ok())
                .ok_or_else(|| Error::Config(format!("unknown preset `{other}`; available: {}", PRESETS.join(", "))))?;
            c.source = c.source.tuned_to(kind);
            c.source.noise = table1_noise(kind);
            c.counting.pair_rate_hz = TABLE1_PAIR_RATE_HZ;
            c.calibration = Some(TABLE1_CALIBRATION.into());
        }
    }
    Ok(c)
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        if self.seed > i64::MAX as u64 {
            return Err(Error::Config(format!("seed {} exceeds {}", self.seed, i64::MAX)));
        }
        self.source.validate().map_err(wrap)?;
        self.counting.validate().map_err(wrap)?;
        self.beam_splitter.model().validate().map_err(wrap)?;
        self.filter.validate().map_err(wrap)?;
        self.translation.range.validate().map_err(|e| Error::Config(format!("translation.range: {e}")))?;
        self.translation.setting.validate().map_err(wrap)?;
        self.hom.delay.validate().map_err(|e| Error::Config(format!("hom.delay: {e}")))?;
        self.bsm.range.validate().map_err(|e| Error::Config(format!("bsm.range: {e}")))?;
        if self.geometry.displacements_um.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("geometry.displacements_um must be finite".into()));
        }
        if !(self.qst.visibility_step_deg > 0.0 && self.qst.visibility_step_deg <= 30.0) {
            return Err(Error::Config(format!(
                "qst.visibility_step_deg {} must lie in (0, 30]",
                self.qst.visibility_step_deg
            )));
        }
        Ok(())
    }

    /// Source with noise removed when `noiseless` is set.
    pub fn effective_source(&self) -> SourceConfig {
        if self.noiseless {
            self.source.noiseless()
        } else {
            self.source
        }
    }

    pub fn effective_counting(&self) -> CountingParams {
        let mut c = self.counting;
        if self.noiseless {
            c.accidental_rate_hz = 0.0;
        }
        c
    }

    pub fn sampling(&self) -> Sampling {
        if self.noiseless {
            Sampling::Exact
        } else {
            Sampling::Poisson { seed: self.seed }
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Recursively merges `overlay` into `base`; tables merge key by key and
/// every other value replaces.
fn deep_merge(base: &mut toml::Table, overlay: toml::Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => deep_merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// Parses one `key.path=value` override. The value is read as a TOML value
/// and falls back to a plain string.
pub fn parse_override(assignment: &str) -> Result<(Vec<String>, toml::Value)> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not of the form key.path=value")))?;
    let keys: Vec<String> = path.trim().split('.').map(|k| k.trim().to_string()).collect();
    if keys.iter().any(String::is_empty) {
        return Err(Error::Config(format!("override `{assignment}` has an empty key")));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((keys, value))
}

fn apply_override(table: &mut toml::Table, keys: &[String], value: toml::Value) -> Result<()> {
    let (last, parents) = keys.split_last().expect("override path is non-empty");
    let mut node = table;
    for key in parents {
        let entry = node.entry(key.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override key `{}`: `{key}` is not a table", keys.join("."))))?;
    }
    node.insert(last.clone(), value);
    Ok(())
}

/// Layers sources in order: preset, config file text, then overrides.
#[derive(Debug, Clone, Default)]
pub struct ConfigLoader {
    pub preset: Option<String>,
    /// (display name, file contents).
    pub file: Option<(String, String)>,
    pub overrides: Vec<String>,
}

impl ConfigLoader {
    pub fn load(&self) -> Result<ScenarioConfig> {
        let base = preset(self.preset.as_deref().unwrap_or("default"))?;
        let mut table = toml::Table::try_from(&base).map_err(|e| Error::Config(e.to_string()))?;
        if let Some((name, text)) = &self.file {
            // Parsing the file on its own reports unknown keys and type
            // errors with line and column.
            toml::from_str::<ScenarioConfig>(text).map_err(|e| Error::Config(format!("{name}: {e}")))?;
            let file_table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(format!("{name}: {e}")))?;
            deep_merge(&mut table, file_table);
        }
        for assignment in &self.overrides {
            let (keys, value) = parse_override(assignment)?;
            apply_override(&mut table, &keys, value)?;
        }
        let config: ScenarioConfig =
            table.try_into().map_err(|e: toml::de::Error| Error::Config(e.message().trim().to_string()))?;
        config.validate()?;
        Ok(config)
    }
}
