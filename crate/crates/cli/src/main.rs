use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use bellswitch_core::config::{ConfigLoader, PRESETS};
use bellswitch_core::experiment::{cmd_bsm, cmd_geometry, cmd_hom, cmd_qst, cmd_scan_translation, CommandOutput};
use bellswitch_core::interference::BeamSplitterKind;
use bellswitch_core::measurement::scan::ScanRange;
use bellswitch_core::{BellState, Error, ScenarioConfig};
use clap::{Args, Parser, Subcommand};

const EXIT_CONFIG: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

/// Simulate and analyse a crystal-translation switched source of
/// polarization-entangled photon pairs.
#[derive(Debug, Parser)]
#[command(name = "bellswitch", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Scenario file (TOML) layered over the preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Named starting configuration; see `bellswitch presets`.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Root seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Ideal source and exact expectations instead of Poisson counts.
    #[arg(long, global = true)]
    noiseless: bool,
    /// Override any config leaf, e.g. `--set source.noise.werner_p=0.95`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct RangeArgs {
    #[arg(long, allow_negative_numbers = true)]
    from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    to: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
}

impl RangeArgs {
    fn apply(&self, range: &mut ScanRange) {
        range.from = self.from.unwrap_or(range.from);
        range.to = self.to.unwrap_or(range.to);
        range.step = self.step.unwrap_or(range.step);
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Coincidences versus crystal displacement; fits the switching period.
    ScanTranslation {
        /// Idler half-wave plate angle in degrees (0 removes the plate).
        #[arg(long, allow_negative_numbers = true)]
        hwp: Option<f64>,
        #[command(flatten)]
        range: RangeArgs,
    },
    /// Two-photon interference versus delay (range in femtoseconds).
    Hom {
        /// Bell state to prepare; repeat for several.
        #[arg(long = "state", value_parser = parse_state)]
        states: Vec<BellState>,
        #[arg(long, value_parser = parse_bs)]
        bs: Option<BeamSplitterKind>,
        #[command(flatten)]
        range: RangeArgs,
    },
    /// Bell-state-measurement signatures versus crystal displacement.
    Bsm {
        #[arg(long, value_parser = parse_bs)]
        bs: Option<BeamSplitterKind>,
        #[arg(long, allow_negative_numbers = true)]
        hwp: Option<f64>,
        #[command(flatten)]
        range: RangeArgs,
    },
    /// Sixteen-setting tomography, reconstruction and metrics report.
    Qst {
        /// Tune the source to this Bell state before measuring.
        #[arg(long, value_parser = parse_state)]
        state: Option<BellState>,
        /// Bootstrap replicas (0 disables the bootstrap).
        #[arg(long)]
        bootstrap: Option<usize>,
    },
    /// Ring radii, centre shift and overlap versus displacement.
    Geometry {
        /// Comma-separated displacements in µm.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x: Vec<f64>,
    },
    /// List the shipped presets.
    Presets,
}

fn parse_state(s: &str) -> Result<BellState, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_bs(s: &str) -> Result<BeamSplitterKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn resolve(global: &GlobalArgs, command: &Command) -> Result<ScenarioConfig, Error> {
    let file = match &global.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            Some((path.display().to_string(), text))
        }
        None => None,
    };
    let mut config = ConfigLoader { preset: global.preset.clone(), file, overrides: global.overrides.clone() }.load()?;
    if let Some(seed) = global.seed {
        config.seed = seed;
    }
    if let Some(out) = &global.out {
        config.output_dir = out.clone();
    }
    config.noiseless |= global.noiseless;
    match command {
        Command::ScanTranslation { hwp, range } => {
            if let Some(h) = hwp {
                config.source.idler_hwp_deg = *h;
            }
            range.apply(&mut config.translation.range);
        }
        Command::Hom { states, bs, range } => {
            if !states.is_empty() {
                config.hom.states = states.clone();
            }
            if let Some(kind) = bs {
                config.beam_splitter.kind = *kind;
            }
            range.apply(&mut config.hom.delay);
        }
        Command::Bsm { bs, hwp, range } => {
            if let Some(kind) = bs {
                config.beam_splitter.kind = *kind;
            }
            if let Some(h) = hwp {
                config.source.idler_hwp_deg = *h;
            }
            range.apply(&mut config.bsm.range);
        }
        Command::Qst { state, bootstrap } => {
            if let Some(s) = state {
                config.source = config.source.tuned_to(*s);
            }
            if let Some(n) = bootstrap {
                config.qst.bootstrap_replicas = *n;
            }
        }
        Command::Geometry { x } => {
            if !x.is_empty() {
                config.geometry.displacements_um = x.clone();
            }
        }
        Command::Presets => {}
    }
    config.validate()?;
    Ok(config)
}

/// Writes through a temporary file in the same directory, then renames.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(&target).with_context(|| format!("writing {}", target.display()))?;
    Ok(target)
}

fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::InvalidParameter { .. } | Error::NonUnitary { .. })
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    if let Command::Presets = cli.command {
        for name in PRESETS {
            println!("{name}");
        }
        return Ok(ExitCode::SUCCESS);
    }
    let config = match resolve(&cli.global, &cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(EXIT_CONFIG));
        }
    };
    let result = match cli.command {
        Command::ScanTranslation { .. } => cmd_scan_translation(&config),
        Command::Hom { .. } => cmd_hom(&config),
        Command::Bsm { .. } => cmd_bsm(&config),
        Command::Qst { .. } => cmd_qst(&config),
        Command::Geometry { .. } => cmd_geometry(&config),
        Command::Presets => unreachable!("handled above"),
    };
    let output: CommandOutput = match result {
        Ok(o) => o,
        Err(e) if is_config_error(&e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(EXIT_CONFIG));
        }
        Err(e) => return Err(e.into()),
    };
    std::fs::create_dir_all(&config.output_dir)
        .with_context(|| format!("creating {}", config.output_dir.display()))?;
    for artifact in &output.artifacts {
        let path = write_atomic(&config.output_dir, &artifact.name, &artifact.contents)?;
        eprintln!("wrote {}", path.display());
    }
    println!("{}", output.summary);
    if !output.converged {
        eprintln!("error: maximum-likelihood reconstruction did not converge");
        return Ok(ExitCode::from(EXIT_NOT_CONVERGED));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
