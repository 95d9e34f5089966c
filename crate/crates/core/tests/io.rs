use bellswitch_core::config::{preset, ConfigLoader, PRESETS};
use bellswitch_core::csv_io::{read_scan_table, read_tomography_counts, scan_table_to_string, tomography_counts_to_string};
use bellswitch_core::experiment::{cmd_bsm, cmd_geometry, cmd_hom, cmd_qst, cmd_scan_translation, CommandOutput};
use bellswitch_core::ScenarioConfig;

fn run_all(config: &ScenarioConfig) -> Vec<CommandOutput> {
    vec![
        cmd_scan_translation(config).unwrap(),
        cmd_hom(config).unwrap(),
        cmd_bsm(config).unwrap(),
        cmd_qst(config).unwrap(),
        cmd_geometry(config).unwrap(),
    ]
}

fn quick(name: &str) -> ScenarioConfig {
    ConfigLoader { preset: Some(name.into()), file: None, overrides: vec!["qst.bootstrap_replicas=3".into()] }
        .load()
        .unwrap()
}

#[test]
fn written_scan_csvs_parse_back_to_identical_text() {
    for output in run_all(&quick("fig10")) {
        for artifact in output.artifacts.iter().filter(|a| a.name.ends_with(".csv")) {
            let text = &artifact.contents;
            let reprinted = if artifact.name == "qst_counts.csv" {
                tomography_counts_to_string(&read_tomography_counts(text.as_bytes(), 0.0).unwrap()).unwrap()
            } else if artifact.name == "geometry.csv" {
                continue;
            } else {
                scan_table_to_string(&read_scan_table(text.as_bytes()).unwrap()).unwrap()
            };
            assert_eq!(&reprinted, text, "{}", artifact.name);
        }
    }
}

#[test]
fn every_preset_is_deterministic() {
    for name in PRESETS {
        let config = quick(name);
        assert_eq!(run_all(&config), run_all(&config), "{name}");
    }
}

#[test]
fn seed_changes_sampled_output() {
    let a = cmd_scan_translation(&quick("fig3")).unwrap();
    let mut other = quick("fig3");
    other.seed += 1;
    let b = cmd_scan_translation(&other).unwrap();
    assert_ne!(a.artifacts[0], b.artifacts[0]);
}

#[test]
fn embedded_config_reproduces_the_run() {
    let config = quick("table1-phi-minus");
    let first = cmd_qst(&config).unwrap();
    let report = first.artifacts.iter().find(|a| a.name == "qst_report.json").unwrap();
    let json: serde_json::Value = serde_json::from_str(&report.contents).unwrap();
    let embedded = json["config_toml"].as_str().unwrap().to_string();
    let reloaded = ConfigLoader { preset: None, file: Some(("embedded".into(), embedded)), overrides: vec![] }.load().unwrap();
    assert_eq!(cmd_qst(&reloaded).unwrap(), first);
    assert!(json["calibration"].as_str().unwrap().contains("calibration match"));
    assert_eq!(preset("table1-phi-minus").unwrap().calibration, reloaded.calibration);
}
