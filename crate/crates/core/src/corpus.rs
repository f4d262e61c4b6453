//! The bundled machine corpus.
//!
//! Five machines ship with the repository under `machines/` and are also
//! embedded here so library consumers and tests get them without touching
//! the filesystem.

use serde::Serialize;

use crate::machine::{parse_machine, Machine};

pub const N_SOURCE: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../machines/N.rom"));
pub const M_BAD_SOURCE: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../machines/M_bad.rom"
));
pub const M_INC_SOURCE: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../machines/M_inc.rom"
));
pub const M_PARITY_SOURCE: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../machines/M_parity.rom"
));
pub const SPIN_SOURCE: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../machines/spin.rom"
));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Literature,
    Constructed,
}

/// One bundled machine with its advertised properties.
#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: &'static str,
    /// Path relative to the repository root.
    pub path: &'static str,
    pub source: &'static str,
    pub provenance: Provenance,
    pub recognizes_la: bool,
    pub reversible: bool,
    pub function_computing: bool,
    pub halts: bool,
}

impl CorpusEntry {
    pub fn machine(&self) -> Machine {
        parse_machine(self.source).expect("bundled machine must parse")
    }
}

pub fn corpus() -> Vec<CorpusEntry> {
    vec![
        CorpusEntry {
            name: "N",
            path: "machines/N.rom",
            source: N_SOURCE,
            provenance: Provenance::Literature,
            recognizes_la: true,
            reversible: true,
            function_computing: false,
            halts: true,
        },
        CorpusEntry {
            name: "M_bad",
            path: "machines/M_bad.rom",
            source: M_BAD_SOURCE,
            provenance: Provenance::Constructed,
            recognizes_la: true,
            reversible: false,
            function_computing: false,
            halts: true,
        },
        CorpusEntry {
            name: "M_inc",
            path: "machines/M_inc.rom",
            source: M_INC_SOURCE,
            provenance: Provenance::Constructed,
            recognizes_la: false,
            reversible: false,
            function_computing: true,
            halts: true,
        },
        CorpusEntry {
            name: "M_parity",
            path: "machines/M_parity.rom",
            source: M_PARITY_SOURCE,
            provenance: Provenance::Constructed,
            recognizes_la: false,
            reversible: false,
            function_computing: true,
            halts: true,
        },
        CorpusEntry {
            name: "spin",
            path: "machines/spin.rom",
            source: SPIN_SOURCE,
            provenance: Provenance::Constructed,
            recognizes_la: false,
            reversible: true,
            function_computing: false,
            halts: false,
        },
    ]
}

pub fn machine_n() -> Machine {
    parse_machine(N_SOURCE).expect("machine N must parse")
}

pub fn machine_m_bad() -> Machine {
    parse_machine(M_BAD_SOURCE).expect("machine M_bad must parse")
}

pub fn machine_m_inc() -> Machine {
    parse_machine(M_INC_SOURCE).expect("machine M_inc must parse")
}

pub fn machine_m_parity() -> Machine {
    parse_machine(M_PARITY_SOURCE).expect("machine M_parity must parse")
}

pub fn machine_spin() -> Machine {
    parse_machine(SPIN_SOURCE).expect("machine spin must parse")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_bundled_machines_parse() {
        for entry in corpus() {
            let m = entry.machine();
            assert_eq!(m.name(), entry.name);
        }
    }
}
