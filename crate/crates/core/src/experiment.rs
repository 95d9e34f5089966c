//! The five experiment commands as pure functions of a resolved
//! [`ScenarioConfig`]. Each returns the files to write and a short text
//! summary; nothing here touches the filesystem.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::csv_io::{geometry_to_string, scan_table_to_string, tomography_counts_to_string};
use crate::error::Result;
use crate::interference::{
    bsm_translation_scan, classify, count_signature_alternations, dominant_pairs, hom_scan,
    two_photon_bs_transform, BeamSplitterKind, DominantPairs, HomShape,
};
use crate::measurement::chsh::ChshResult;
use crate::measurement::counts::derive_seed;
use crate::measurement::fringe::FringeFit;
use crate::measurement::scan::{
    analyze_switching, count_state_flips, stream, translation_scan, Sampling, SwitchingAnalysis,
};
use crate::metrics::CorrelationBasis;
use crate::report_file::ReportFile;
use crate::source::{emit_state, ring_geometry, RingGeometry, SourceConfig};
use crate::state::BellState;
use crate::tomography::{full_report, BootstrapSummary, TomographyResult};

/// One output file, named relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub artifacts: Vec<Artifact>,
    pub summary: String,
    /// False when an iterative reconstruction hit its iteration cap.
    pub converged: bool,
}

fn finish<S: Serialize>(
    command: &str,
    config: &ScenarioConfig,
    mut artifacts: Vec<Artifact>,
    summary: S,
    text: String,
    converged: bool,
) -> Result<CommandOutput> {
    let csv_files = artifacts.iter().map(|a| a.name.clone()).collect();
    let report = ReportFile::new(command, config, csv_files, summary)?;
    artifacts.push(Artifact { name: format!("{}_report.json", command.replace('-', "_")), contents: report.to_json()? });
    Ok(CommandOutput { artifacts, summary: text, converged })
}

/// Bell family emitted at the balanced crystal position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateFamily {
    Phi,
    Psi,
    Mixed,
}

impl StateFamily {
    pub fn of(source: &SourceConfig) -> Self {
        match source.with_displacement(0.0).nominal_state() {
            Some(s) if s.is_psi() => StateFamily::Psi,
            Some(_) => StateFamily::Phi,
            None => StateFamily::Mixed,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            StateFamily::Phi => "phi+/phi- switching",
            StateFamily::Psi => "psi+/psi- switching",
            StateFamily::Mixed => "no Bell state at balance",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationSummary {
    pub family: StateFamily,
    pub family_label: String,
    pub switching: SwitchingAnalysis,
    pub state_flips: usize,
}

pub fn cmd_scan_translation(config: &ScenarioConfig) -> Result<CommandOutput> {
    let t = &config.translation;
    let source = config.effective_source();
    let series = translation_scan(&t.range, &t.setting, &source, &config.effective_counting(), config.sampling())?;
    let switching = analyze_switching(&series)?;
    let state_flips = count_state_flips(&series.table.xs(), &series.table.expected(0), t.range.from, t.range.to);
    let family = StateFamily::of(&source);
    let text = format!(
        "{}: period {:.3} ± {:.3} µm, switch interval {:.3} ± {:.3} µm, {} state flips over [{}, {}] µm",
        family.label(),
        switching.period_um,
        switching.period_sigma_um,
        switching.switch_interval_um,
        switching.switch_interval_sigma_um,
        state_flips,
        t.range.from,
        t.range.to,
    );
    let artifacts = vec![Artifact { name: "translation.csv".into(), contents: scan_table_to_string(&series.table)? }];
    let summary = TranslationSummary { family, family_label: family.label().into(), switching, state_flips };
    finish("scan-translation", config, artifacts, summary, text, true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomSummary {
    pub state: Option<BellState>,
    pub beam_splitter: BeamSplitterKind,
    pub shape: HomShape,
    /// Exact cross-port probability at zero delay.
    pub rate_at_zero: f64,
    /// Exact cross-port probability for distinguishable photons.
    pub baseline: f64,
    pub csv: String,
}

pub fn cmd_hom(config: &ScenarioConfig) -> Result<CommandOutput> {
    let bs = config.beam_splitter.model();
    let base = config.effective_source();
    let states: Vec<Option<BellState>> =
        if config.hom.states.is_empty() { vec![None] } else { config.hom.states.iter().copied().map(Some).collect() };
    let mut artifacts = Vec::new();
    let mut summaries = Vec::new();
    let mut lines = Vec::new();
    for (i, state) in states.iter().enumerate() {
        let source = state.map_or(base, |s| base.tuned_to(s));
        let rho = emit_state(&source);
        let sampling = match config.sampling() {
            Sampling::Poisson { seed } => Sampling::Poisson { seed: derive_seed(seed, stream::HOM, i as u64) },
            Sampling::Exact => Sampling::Exact,
        };
        let series = hom_scan(&rho, &bs, &config.filter, &config.hom.delay, &config.effective_counting(), sampling)?;
        let shape = classify(&rho, &bs)?;
        let name = format!("hom_{}_{}.csv", state.map_or("source", BellState::label), bs.kind.label());
        let summary = HomSummary {
            state: *state,
            beam_splitter: bs.kind,
            shape,
            rate_at_zero: two_photon_bs_transform(&rho, &bs, 1.0)?.cross_port(),
            baseline: two_photon_bs_transform(&rho, &bs, 0.0)?.cross_port(),
            csv: name.clone(),
        };
        lines.push(format!(
            "{} with {} beam splitter: {} (zero delay {:.4}, baseline {:.4})",
            state.map_or("configured source", BellState::label),
            bs.kind.label(),
            shape.label(),
            summary.rate_at_zero,
            summary.baseline,
        ));
        artifacts.push(Artifact { name, contents: scan_table_to_string(&series.table)? });
        summaries.push(summary);
    }
    finish("hom", config, artifacts, summaries, lines.join("\n"), true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignatureSegment {
    pub from_um: f64,
    pub to_um: f64,
    pub dominant: DominantPairs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsmSummary {
    pub beam_splitter: BeamSplitterKind,
    pub alternations: usize,
    pub segments: Vec<SignatureSegment>,
}

fn pair_label(d: DominantPairs) -> &'static str {
    match d {
        DominantPairs::SamePort => "H1V1/H2V2",
        DominantPairs::CrossPort => "H1V2/V1H2",
    }
}

pub fn cmd_bsm(config: &ScenarioConfig) -> Result<CommandOutput> {
    let bs = config.beam_splitter.model();
    let series = bsm_translation_scan(
        &config.bsm.range,
        &config.effective_source(),
        &bs,
        &config.effective_counting(),
        config.sampling(),
    )?;
    let table = &series.table;
    let mut segments: Vec<SignatureSegment> = Vec::new();
    for (i, x) in table.xs().into_iter().enumerate() {
        let row: Vec<f64> = (0..table.channels.len()).map(|ch| table.signal(ch)[i]).collect();
        let dominant = dominant_pairs(&row);
        match segments.last_mut() {
            Some(seg) if seg.dominant == dominant => seg.to_um = x,
            _ => segments.push(SignatureSegment { from_um: x, to_um: x, dominant }),
        }
    }
    let alternations = count_signature_alternations(&series);
    let mut text = format!("{} beam splitter: {alternations} signature alternations\n", bs.kind.label());
    for seg in &segments {
        text.push_str(&format!("  {:>8} .. {:>8} µm: {}\n", seg.from_um, seg.to_um, pair_label(seg.dominant)));
    }
    let artifacts = vec![Artifact { name: "bsm.csv".into(), contents: scan_table_to_string(table)? }];
    let summary = BsmSummary { beam_splitter: bs.kind, alternations, segments };
    finish("bsm", config, artifacts, summary, text.trim_end().to_string(), true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QstSummary {
    pub tomography: TomographyResult,
    pub bootstrap: Option<BootstrapSummary>,
    pub chsh_measured: ChshResult,
    pub visibility_fits: BTreeMap<CorrelationBasis, FringeFit>,
}

pub fn cmd_qst(config: &ScenarioConfig) -> Result<CommandOutput> {
    let report = full_report(&config.effective_source(), &config.effective_counting(), config.sampling(), &config.qst)?;
    let mut artifacts = vec![Artifact { name: "qst_counts.csv".into(), contents: tomography_counts_to_string(&report.counts)? }];
    for (basis, series) in &report.correlation_scans {
        artifacts.push(Artifact {
            name: format!("qst_fringe_{}.csv", basis.label().to_ascii_lowercase()),
            contents: scan_table_to_string(&series.table)?,
        });
    }
    let t = &report.tomography;
    let m = &t.metrics;
    let mut text = format!(
        "target {}: F = {:.4}, P = {:.4}, C = {:.4}, S = {:.4}; measured CHSH {:.4} ± {:.4}",
        t.target, m.fidelity, m.purity, m.concurrence, m.chsh_s, report.chsh_measured.s, report.chsh_measured.sigma_s,
    );
    if let Some(b) = &report.bootstrap {
        text.push_str(&format!(
            "\nbootstrap ({} replicas): σF = {:.4}, σP = {:.4}, σC = {:.4}, σS = {:.4}",
            b.replicas, b.fidelity.std, b.purity.std, b.concurrence.std, b.chsh_s.std
        ));
    }
    for (basis, v) in &m.visibilities {
        text.push_str(&format!("\nvisibility {}: {:.4}", basis.label(), v));
    }
    if let Some(c) = &config.calibration {
        text.push_str(&format!("\n[{c}]"));
    }
    let converged = t.converged;
    let summary = QstSummary {
        tomography: report.tomography,
        bootstrap: report.bootstrap,
        chsh_measured: report.chsh_measured,
        visibility_fits: report.visibility_fits,
    };
    finish("qst", config, artifacts, summary, text, converged)
}

pub fn cmd_geometry(config: &ScenarioConfig) -> Result<CommandOutput> {
    let rows: Vec<RingGeometry> = config
        .geometry
        .displacements_um
        .iter()
        .map(|&x| ring_geometry(&config.source.with_displacement(x)))
        .collect();
    let text = rows
        .iter()
        .map(|g| {
            format!(
                "x = {} µm: radii {:.4}/{:.4} mm, centre shift {:.4} µm, overlap {:.4}",
                g.displacement_um, g.radius_h_mm, g.radius_v_mm, g.center_shift_um, g.overlap_efficiency
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    let artifacts = vec![Artifact { name: "geometry.csv".into(), contents: geometry_to_string(&rows)? }];
    finish("geometry", config, artifacts, rows, text, true)
}
