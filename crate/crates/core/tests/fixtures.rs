mod common;

use common::*;
use opseq::experiment::parse_experiment;
use opseq::scenarios::{fixture, FIXTURES};
use serde_json::Value;

#[test]
fn shipped_files_match_builders() {
    let mut expected: Vec<String> = FIXTURES.iter().map(|s| s.to_string()).collect();
    expected.sort();
    assert_eq!(fixture_names(), expected);
    for name in FIXTURES {
        let on_disk = std::fs::read_to_string(fixtures_dir().join(format!("{name}.json"))).unwrap();
        assert_eq!(on_disk, fixture(name).unwrap().to_json(), "{name}");
    }
}

#[test]
fn shipped_files_round_trip() {
    for name in fixture_names() {
        let e = load_fixture(&name);
        let again = parse_experiment(&e.file.to_json()).unwrap();
        assert_eq!(again.file, e.file, "{name}");
        assert_eq!(again.sequences, e.sequences, "{name}");
    }
}

#[test]
fn schema_covers_every_top_level_key() {
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(fixtures_dir().join("experiment.schema.json")).unwrap()).unwrap();
    let props = schema["properties"].as_object().unwrap();
    for name in fixture_names() {
        let v: Value = serde_json::to_value(&load_fixture(&name).file).unwrap();
        for key in v.as_object().unwrap().keys() {
            assert!(props.contains_key(key), "{name}: `{key}` missing from schema");
        }
    }
    for key in schema["required"].as_array().unwrap() {
        assert!(props.contains_key(key.as_str().unwrap()));
    }
}

#[test]
fn near_unitary_evolution_is_rejected() {
    let mut v: Value = serde_json::to_value(fixture("sg_chain").unwrap()).unwrap();
    v["evolutions"] =
        serde_json::json!([{"tick": 1, "matrix": [[[1.001, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]}]);
    let err = parse_experiment(&serde_json::to_string_pretty(&v).unwrap()).unwrap_err();
    assert_eq!(err.rules(), vec!["unitarity"]);
    assert_eq!(err.0[0].path, "/evolutions/0");
}
