use std::path::PathBuf;

use cascade_core::simulator::LoadSpec;
use cascade_core::{parse_config, parse_config_str, parse_schedule, Error, GridConfig};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn bundled_configs_round_trip() {
    for name in ["table1.json", "table2.json"] {
        let (config, schedule) = parse_config(configs().join(name)).unwrap();
        assert!(schedule.is_some());
        let again = parse_config_str(&config.to_json()).unwrap();
        assert_eq!(config, again, "{name}");
    }
}

#[test]
fn bundled_values() {
    let (c, _) = parse_config(configs().join("table1.json")).unwrap();
    assert_eq!(c.units(), 3);
    assert_eq!(c.h, 0.1);
    assert_eq!(c.v_pcc_ref, 110.0);
    assert_eq!(c, GridConfig::table1());
    let (c, _) = parse_config(configs().join("table2.json")).unwrap();
    assert_eq!(c.units(), 2);
}

#[test]
fn standalone_schedule_parses() {
    let s = parse_schedule(configs().join("schedule_resistive.json")).unwrap();
    assert_eq!(s.segments.len(), 3);
    assert_eq!(
        s.segments[2].load,
        LoadSpec::Impedance {
            resistance: 6.0,
            reactance: 0.0
        }
    );
}

fn edited(f: impl FnOnce(&mut serde_json::Value)) -> String {
    let mut v: serde_json::Value = serde_json::from_str(&GridConfig::table1().to_json()).unwrap();
    f(&mut v);
    v.to_string()
}

#[test]
fn nested_unknown_key_names_its_path() {
    let text = edited(|v| {
        v["dgs"][1]["cost"]["slope"] = 1.0.into();
    });
    let err = parse_config_str(&text).unwrap_err().to_string();
    assert!(err.contains("dgs[1].cost"), "{err}");
    assert!(err.contains("slope"), "{err}");
}

#[test]
fn invariants_are_checked_at_parse_time() {
    let cases: [(&str, Box<dyn Fn(&mut serde_json::Value)>); 4] = [
        ("f_min", Box::new(|v| v["f_min"] = 52.0.into())),
        ("dgs", Box::new(|v| v["dgs"] = serde_json::json!([]))),
        ("nominal_frequency", Box::new(|v| v["nominal_frequency"] = 0.0.into())),
        ("dgs[0].cost.a", Box::new(|v| v["dgs"][0]["cost"]["a"] = (-1.0).into())),
    ];
    for (field, f) in cases {
        let err = parse_config_str(&edited(f)).unwrap_err();
        match err {
            Error::Validation { field: got, .. } => assert_eq!(got, field),
            other => panic!("{field}: {other}"),
        }
    }
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(parse_config("/nonexistent/grid.json"), Err(Error::Io { .. })));
}

#[test]
fn malformed_json_reports_location() {
    let err = parse_config_str("{\n  \"v_pcc_ref\": 110,\n  oops\n}").unwrap_err().to_string();
    assert!(err.contains("line 3"), "{err}");
}
