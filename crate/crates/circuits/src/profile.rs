use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CircuitError, Result};
use crate::gate::GateKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Platform {
    Atoms,
    Superconducting,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateSet {
    /// Standard gate set: CZ (atoms) or Sycamore (transmons) plus locals.
    #[serde(rename = "SGS")]
    Sgs,
    /// Extended gate set operated at the speed limit.
    #[serde(rename = "QGS")]
    Qgs,
    /// Every gate native; for unitary checks of the builders.
    #[serde(rename = "ideal")]
    Ideal,
}

/// Hardware variant selecting the constraint-gate times.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Planar atoms (diagonal interaction V/8) or nearest-neighbour-coupled
    /// transmons.
    Standard,
    /// Atoms with equal interaction on plaquette diagonals.
    Pseudo2d,
    /// Transmons with additional diagonal couplers.
    Nnn,
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Platform::Atoms => "atoms",
            Platform::Superconducting => "superconducting",
        })
    }
}

impl fmt::Display for GateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateSet::Sgs => "SGS",
            GateSet::Qgs => "QGS",
            GateSet::Ideal => "ideal",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlatformProfile {
    pub platform: Platform,
    pub gate_set: GateSet,
    pub variant: Variant,
    /// Gate durations in ns keyed by gate name ("local" for single-qubit gates).
    pub gate_times_ns: BTreeMap<String, f64>,
    /// Error time of layers whose slowest gate is single-qubit (ns).
    pub single_qubit_error_ns: f64,
    /// Error time of layers whose slowest gate is multi-qubit (ns).
    pub multi_qubit_error_ns: f64,
    /// Plaquettes whose anchors agree modulo this period share a constraint layer.
    pub constraint_period: usize,
    /// Sycamore gates per CZ-class gate in the standard superconducting set.
    pub sycamore_per_cz: usize,
}

fn table(entries: &[(&str, f64)]) -> BTreeMap<String, f64> {
    entries.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

impl PlatformProfile {
    pub fn new(platform: Platform, gate_set: GateSet) -> Self {
        Self::with_variant(platform, gate_set, Variant::Standard)
    }

    pub fn with_variant(platform: Platform, gate_set: GateSet, variant: Variant) -> Self {
        let (zzz, zzzz) = match (platform, variant) {
            (Platform::Atoms, Variant::Pseudo2d) => (400.0, 500.0),
            (Platform::Atoms, _) => (600.0, 600.0),
            (Platform::Superconducting, Variant::Nnn) => (20.0, 60.0),
            (Platform::Superconducting, _) => (24.0, 80.0),
        };
        let gate_times_ns = match (platform, gate_set) {
            (Platform::Atoms, GateSet::Sgs) => table(&[("local", 1000.0), ("cz", 350.0)]),
            (Platform::Atoms, _) => table(&[
                ("local", 1000.0),
                ("cnot", 300.0),
                ("cz", 350.0),
                ("swap", 400.0),
                ("zzz", zzz),
                ("zzzz", zzzz),
            ]),
            (Platform::Superconducting, GateSet::Sgs) => table(&[("local", 25.0), ("sycamore", 12.0)]),
            (Platform::Superconducting, _) => table(&[
                ("local", 25.0),
                ("cnot", 14.0),
                ("cz", 10.0),
                ("swap", 12.0),
                ("zzz", zzz),
                ("zzzz", zzzz),
            ]),
        };
        let mut profile = Self {
            platform,
            gate_set,
            variant,
            gate_times_ns,
            single_qubit_error_ns: match platform {
                Platform::Atoms => 4.0e6,
                Platform::Superconducting => 15.0e3,
            },
            multi_qubit_error_ns: match platform {
                Platform::Atoms => 150.0e3,
                Platform::Superconducting => 15.0e3,
            },
            constraint_period: match platform {
                Platform::Atoms => 3,
                Platform::Superconducting => 2,
            },
            sycamore_per_cz: 2,
        };
        if gate_set == GateSet::Ideal {
            let cz = profile.gate_times_ns["cz"];
            profile.gate_times_ns.insert("cp".into(), cz);
            profile.gate_times_ns.insert("rzz".into(), cz);
        }
        profile
    }

    pub fn validate(&self) -> Result<()> {
        if self.gate_times_ns.values().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(CircuitError::Profile("gate times must be positive".into()));
        }
        if !(self.single_qubit_error_ns > 0.0) || !(self.multi_qubit_error_ns > 0.0) {
            return Err(CircuitError::Profile("error times must be positive".into()));
        }
        if self.constraint_period < 2 {
            return Err(CircuitError::Profile("constraint period must be at least 2".into()));
        }
        if self.sycamore_per_cz == 0 {
            return Err(CircuitError::Profile("sycamore_per_cz must be positive".into()));
        }
        if !self.gate_times_ns.contains_key("local") {
            return Err(CircuitError::Profile("missing local gate time".into()));
        }
        Ok(())
    }

    pub fn gate_time(&self, kind: &GateKind) -> Result<f64> {
        let key = kind.time_key();
        self.gate_times_ns
            .get(key)
            .copied()
            .ok_or_else(|| CircuitError::MissingGateTime(key.to_string()))
    }

    pub fn error_time(&self, kind: &GateKind) -> f64 {
        if kind.arity() == 1 {
            self.single_qubit_error_ns
        } else {
            self.multi_qubit_error_ns
        }
    }

    /// Whether the gate set provides the given multi-qubit gate natively.
    pub fn is_native(&self, kind: &GateKind) -> bool {
        kind.arity() == 1 || self.gate_times_ns.contains_key(kind.name())
    }
}
