//! Pins the fully resolved parameters of every preset. After an intended
//! change, regenerate with `OWI_BLESS=1 cargo test --test presets_golden`.

use std::path::PathBuf;

use owi_sim::cli::config::{parse_config, serialize};
use owi_sim::cli::presets::PRESET_NAMES;

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/presets.txt")
}

fn resolved() -> String {
    let mut text = String::new();
    for name in PRESET_NAMES {
        let config = parse_config(&format!("scenario = {name}")).unwrap();
        text.push_str(&format!("## {name}\n"));
        text.push_str(&serialize(&config));
        text.push('\n');
    }
    text
}

#[test]
fn presets_match_the_golden_file() {
    let actual = resolved();
    if std::env::var_os("OWI_BLESS").is_some() {
        std::fs::write(golden_path(), &actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(golden_path()).expect("golden file present");
    for (k, (a, e)) in actual.lines().zip(expected.lines()).enumerate() {
        assert_eq!(a, e, "golden line {} differs", k + 1);
    }
    assert_eq!(actual.lines().count(), expected.lines().count(), "golden file length differs");
}

#[test]
fn golden_text_reparses_to_the_same_configs() {
    for name in PRESET_NAMES {
        let config = parse_config(&format!("scenario = {name}")).unwrap();
        assert_eq!(parse_config(&serialize(&config)).unwrap(), config, "{name}");
    }
}
