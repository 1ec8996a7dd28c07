//! Feeders and scenario configurations compiled into the crate.

use crate::grid::NetworkModel;
use crate::io::{parse_circuit, IoError};

pub const IEEE4_CKT: &str = include_str!("../assets/ieee4.ckt");
pub const SYNTH13_CKT: &str = include_str!("../assets/synth13.ckt");

/// Bundled file contents by file name.
pub fn bundled(name: &str) -> Option<&'static str> {
    let file = std::path::Path::new(name).file_name()?.to_str()?;
    BUNDLED.iter().find(|(n, _)| *n == file).map(|(_, text)| *text)
}

pub const BUNDLED: &[(&str, &str)] = &[
    ("ieee4.ckt", IEEE4_CKT),
    ("synth13.ckt", SYNTH13_CKT),
    ("ieee4_pq.cfg", include_str!("../assets/ieee4_pq.cfg")),
    ("ieee4_z.cfg", include_str!("../assets/ieee4_z.cfg")),
    ("ieee4_zip.cfg", include_str!("../assets/ieee4_zip.cfg")),
    ("synth13.cfg", include_str!("../assets/synth13.cfg")),
    ("synth13_topology.cfg", include_str!("../assets/synth13_topology.cfg")),
    ("synth13_pv.cfg", include_str!("../assets/synth13_pv.cfg")),
    ("synth13_ev.cfg", include_str!("../assets/synth13_ev.cfg")),
];

pub fn ieee4() -> NetworkModel {
    parse_circuit(IEEE4_CKT).expect("bundled ieee4.ckt parses")
}

pub fn synth13() -> NetworkModel {
    parse_circuit(SYNTH13_CKT).expect("bundled synth13.ckt parses")
}

/// A bundled scenario config, e.g. `config("ieee4_pq")`.
pub fn config(name: &str) -> Result<crate::scenario::ScenarioConfig, crate::scenario::ScenarioError> {
    let text = bundled(&format!("{name}.cfg")).ok_or_else(|| crate::scenario::ScenarioError::Config { line: 0, reason: format!("no bundled config `{name}`") })?;
    crate::scenario::ScenarioConfig::parse(text, None)
}

/// Reads a file, falling back to a bundled asset with the same file name.
pub fn read_text(path: &std::path::Path) -> Result<String, IoError> {
    match std::fs::read_to_string(path) {
        Ok(s) => Ok(s),
        Err(e) => path
            .to_str()
            .and_then(bundled)
            .map(str::to_string)
            .ok_or(IoError::Io(e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_config_parses() {
        for (name, _) in BUNDLED.iter().filter(|(n, _)| n.ends_with(".cfg")) {
            let cfg = config(name.trim_end_matches(".cfg")).unwrap();
            assert!(cfg.horizon == 26280 || cfg.horizon == 8760, "{name}");
        }
        assert_eq!(config("ieee4_pq").unwrap().train_fraction, 21000.0 / 26280.0);
        assert!(config("nope").is_err());
    }

    #[test]
    fn bundled_lookup_ignores_directories() {
        assert_eq!(bundled("some/dir/ieee4.ckt"), Some(IEEE4_CKT));
        assert!(bundled("missing.ckt").is_none());
    }
}
