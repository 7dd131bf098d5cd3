use std::path::Path;

use kinetic_uq::harness::parse_scenario;

#[test]
fn shipped_scenarios_resolve() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let text = std::fs::read_to_string(&path).unwrap();
            let spec = parse_scenario(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(parse_scenario(&spec.to_toml()).unwrap().config_hash(), spec.config_hash());
            seen += 1;
        }
    }
    assert!(seen >= 2);
}
