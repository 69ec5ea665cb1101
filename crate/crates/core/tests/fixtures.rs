//! Golden JSON for the built-in diagrams.
//!
//! Set `ANDERSON_BLESS=1` to rewrite the files after an intended change.

use std::path::PathBuf;

use anderson_core::diagrams::named::NAMES;
use anderson_core::diagrams::{named, FeynmanDiagram};

fn path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/diagrams").join(format!("{name}.json"))
}

#[test]
fn named_diagrams_match_golden_json() {
    let bless = std::env::var_os("ANDERSON_BLESS").is_some();
    for name in NAMES {
        let json = serde_json::to_string_pretty(&named(name).unwrap().to_json()).unwrap();
        let p = path(name);
        if bless {
            std::fs::write(&p, format!("{json}\n")).unwrap();
        }
        let golden = std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert_eq!(golden.trim_end(), json, "{name}");
    }
}

#[test]
fn golden_json_round_trips() {
    for name in NAMES {
        let golden = std::fs::read_to_string(path(name)).unwrap();
        let d = FeynmanDiagram::from_json_str(&golden).unwrap();
        assert_eq!(d, named(name).unwrap(), "{name}");
    }
}

#[test]
fn aliases_share_fixtures() {
    assert_eq!(named("c42").unwrap(), named("nested4").unwrap());
    assert_eq!(named("cc42plain").unwrap(), named("parallel").unwrap());
}
