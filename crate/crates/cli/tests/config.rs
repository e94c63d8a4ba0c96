use acquire_cli::{parse_config, ConfigError};
use acquire_core::sim::Scenario;

fn shipped(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../configs/{name}.toml", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn case1_file_matches_preset() {
    let s = parse_config(&shipped("case1")).unwrap();
    assert_eq!(s, Scenario::case1());
    assert_eq!((s.fov_deg, s.meas_noise_arcsec, s.n_scans, s.scan_dt_s, s.p_d), (6.0, 3.0, 30, 15.0, 0.75));
}

#[test]
fn case2_file_matches_preset() {
    let s = parse_config(&shipped("case2")).unwrap();
    assert_eq!(s, Scenario::case2());
    assert_eq!((s.ar.e_min, s.ar.e_max, s.ar.a_min, s.ar.a_max), (0.0, 0.35, 10_000.0, 45_000.0));
    assert_eq!((s.n_targets, s.n_clutter), (10, 15));
}

#[test]
fn missing_key_is_named() {
    let text = shipped("case1").replace("p_d = 0.75\n", "");
    let err = parse_config(&text).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, ConfigError::Schema { .. }), "{msg}");
    assert!(msg.contains("p_d") && msg.contains("sensor"), "{msg}");
}

#[test]
fn unknown_key_is_rejected_with_its_path() {
    let text = shipped("case1").replace("fov_deg = 6.0", "fov_deg = 6.0\nfov_arcmin = 360.0");
    let msg = parse_config(&text).unwrap_err().to_string();
    assert!(msg.contains("fov_arcmin") && msg.starts_with("sensor"), "{msg}");

    let text = shipped("case1").replace("altitude = 0.0          # km", "altitude = 0.0\nheight = 1.0");
    let msg = parse_config(&text).unwrap_err().to_string();
    assert!(msg.contains("height") && msg.contains("sites.initial"), "{msg}");
}

#[test]
fn wrong_type_reports_path() {
    let text = shipped("case1").replace("n_scans = 30", "n_scans = \"thirty\"");
    let msg = parse_config(&text).unwrap_err().to_string();
    assert!(msg.starts_with("timing.n_scans"), "{msg}");
}

#[test]
fn out_of_range_values_fail_validation() {
    let text = shipped("case1").replace("p_d = 0.75", "p_d = 1.5");
    assert!(matches!(parse_config(&text), Err(ConfigError::Invalid(_))));
    let text = shipped("case1").replace("latitude = 34.0584", "latitude = 134.0584");
    assert!(matches!(parse_config(&text), Err(ConfigError::Invalid(_))));
}
