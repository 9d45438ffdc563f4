//! Job configuration files: strict JSON with units in the key names.
//! Frequencies are ordinary frequencies in MHz and are converted to angular
//! frequencies internally.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use qsl_circuits::{Algorithm, Encoding, GateSet, Platform, PmQftOptions, Variant};
use qsl_core::gates::GateName;
use qsl_core::models::{
    mhz, AtomArrayConfig, CouplingMode, FieldConfiguration, PlatformConfig, TransmonPlaquetteConfig,
};
use qsl_core::optimizer::KrotovOptions;
use qsl_core::qslscan::{GateSpec, GuessSpec, ScanSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Optimize,
    QslScan,
    CircuitSweep,
    EntanglingPower,
}

impl JobKind {
    pub fn name(&self) -> &'static str {
        match self {
            JobKind::Optimize => "optimize",
            JobKind::QslScan => "qsl_scan",
            JobKind::CircuitSweep => "circuit_sweep",
            JobKind::EntanglingPower => "entangling_power",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub job: JobKind,
    /// Mandatory unless given on the command line.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub platform: Option<PlatformSection>,
    /// Field configuration name; defaults to `atoms_phase` or `sc_interaction`.
    #[serde(default)]
    pub configuration: Option<String>,
    #[serde(default)]
    pub gate: Option<GateSpec>,
    #[serde(default)]
    pub optimize: Option<OptimizeSection>,
    #[serde(default)]
    pub scan: Option<ScanSection>,
    #[serde(default)]
    pub krotov: Option<KrotovOptions>,
    #[serde(default)]
    pub guess: Option<GuessSpec>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub epower: Option<EpowerSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlatformSection {
    Atoms(AtomsSection),
    Transmons(TransmonsSection),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomsSection {
    pub n_atoms: usize,
    #[serde(default)]
    pub coupling_mode: Option<CouplingMode>,
    /// Interaction strength V/2pi; default 40 MHz.
    #[serde(default)]
    pub v_mhz: Option<f64>,
    /// Default 0.1 V.
    #[serde(default)]
    pub omega_max_mhz: Option<f64>,
    /// Default 0.3 V.
    #[serde(default)]
    pub delta_max_mhz: Option<f64>,
    #[serde(default)]
    pub global_fields: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmonsSection {
    pub n_transmons: usize,
    #[serde(default)]
    pub levels: Option<usize>,
    #[serde(default)]
    pub omega_windows_mhz: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub alpha_mhz: Option<Vec<f64>>,
    #[serde(default)]
    pub eta_mhz: Option<f64>,
    #[serde(default)]
    pub g_bounds_mhz: Option<(f64, f64)>,
    /// Default: mean of the window centres.
    #[serde(default)]
    pub omega_rot_mhz: Option<f64>,
    #[serde(default)]
    pub x_drive_bound_mhz: Option<f64>,
    #[serde(default)]
    pub nnn_coupling: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    pub duration_ns: f64,
    #[serde(default)]
    pub max_dt_ns: Option<f64>,
}

fn default_restarts() -> usize {
    10
}

fn default_epsilon() -> f64 {
    1e-3
}

fn default_bins() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    /// Strictly decreasing duration ladder.
    pub t_values_ns: Vec<f64>,
    #[serde(default = "default_restarts")]
    pub restarts_per_t: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon_max: f64,
    #[serde(default)]
    pub max_dt_ns: Option<f64>,
    #[serde(default = "default_bins")]
    pub histogram_bins_per_decade: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub algorithms: Vec<Algorithm>,
    pub platforms: Vec<Platform>,
    pub models: Vec<Encoding>,
    pub gate_sets: Vec<GateSet>,
    pub n_values: Vec<usize>,
    /// Random spin-glass instances per size (QAOA only).
    pub instances_per_n: usize,
    pub beta: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// Use native constraint gates in the QGS; the SGS always uses ladders.
    pub native_constraints: bool,
    pub atoms_variant: Variant,
    pub superconducting_variant: Variant,
    pub pm_qft: PmQftOptions,
    pub sycamore_per_cz: Option<usize>,
    /// Also write every circuit as text and JSON.
    pub export_circuits: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            algorithms: vec![Algorithm::Qaoa, Algorithm::Qft],
            platforms: vec![Platform::Atoms, Platform::Superconducting],
            models: vec![Encoding::Sgm, Encoding::Pm],
            gate_sets: vec![GateSet::Sgs, GateSet::Qgs],
            n_values: vec![9, 16, 25],
            instances_per_n: 1,
            beta: 0.3,
            alpha: 0.2,
            gamma: std::f64::consts::FRAC_PI_4,
            native_constraints: true,
            atoms_variant: Variant::Standard,
            superconducting_variant: Variant::Standard,
            pm_qft: PmQftOptions::default(),
            sycamore_per_cz: None,
            export_circuits: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpowerSection {
    pub gates: Vec<GateName>,
    pub gamma_points: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub n_samples: usize,
    pub phase_shifted: bool,
}

impl Default for EpowerSection {
    fn default() -> Self {
        Self {
            gates: vec![GateName::Zzz, GateName::Zzzz],
            gamma_points: 33,
            gamma_min: 0.0,
            gamma_max: FRAC_PI_2,
            n_samples: 20_000,
            phase_shifted: false,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

pub fn parse_config(text: &str) -> Result<JobConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        invalid(format!("at `{path}`: {}", e.inner()))
    })
}

pub fn load_config(path: &Path) -> Result<JobConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

impl PlatformSection {
    pub fn to_config(&self) -> Result<PlatformConfig> {
        let cfg = match self {
            PlatformSection::Atoms(a) => {
                let mut c = AtomArrayConfig::standard(a.n_atoms)?;
                if let Some(mode) = a.coupling_mode {
                    c.coupling_mode = mode;
                }
                if let Some(v) = a.v_mhz {
                    c.v = mhz(v);
                    c.omega_max = 0.1 * c.v;
                    c.delta_max = 0.3 * c.v;
                }
                if let Some(o) = a.omega_max_mhz {
                    c.omega_max = mhz(o);
                }
                if let Some(d) = a.delta_max_mhz {
                    c.delta_max = mhz(d);
                }
                if let Some(g) = a.global_fields {
                    c.global_fields = g;
                }
                PlatformConfig::Atoms(c)
            }
            PlatformSection::Transmons(t) => {
                let mut c = TransmonPlaquetteConfig::standard(t.n_transmons)?;
                if let Some(l) = t.levels {
                    c.levels_per_transmon = l;
                }
                if let Some(w) = &t.omega_windows_mhz {
                    c.omega_windows = w.iter().map(|&(lo, hi)| (mhz(lo), mhz(hi))).collect();
                    c.omega_rot = c.omega_windows.iter().map(|(lo, hi)| 0.5 * (lo + hi)).sum::<f64>()
                        / c.omega_windows.len().max(1) as f64;
                }
                if let Some(a) = &t.alpha_mhz {
                    c.alpha = a.iter().map(|&x| mhz(x)).collect();
                }
                if let Some(e) = t.eta_mhz {
                    c.eta = mhz(e);
                }
                if let Some((lo, hi)) = t.g_bounds_mhz {
                    c.g_bounds = (mhz(lo), mhz(hi));
                }
                if let Some(w) = t.omega_rot_mhz {
                    c.omega_rot = mhz(w);
                }
                if let Some(x) = t.x_drive_bound_mhz {
                    c.x_drive_bound = mhz(x);
                }
                if let Some(n) = t.nnn_coupling {
                    c.nnn_coupling = n;
                }
                PlatformConfig::Transmons(c)
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl JobConfig {
    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| invalid("`seed` is required (in the config or via --seed)"))
    }

    pub fn platform_config(&self) -> Result<PlatformConfig> {
        self.platform
            .as_ref()
            .ok_or_else(|| invalid("`platform` section is required"))?
            .to_config()
    }

    pub fn field_configuration(&self, platform: &PlatformConfig) -> Result<FieldConfiguration> {
        let atoms = matches!(platform, PlatformConfig::Atoms(_));
        let fc = match &self.configuration {
            Some(name) => FieldConfiguration::parse(name)?,
            None if atoms => FieldConfiguration::AtomsPhase,
            None => FieldConfiguration::ScInteraction,
        };
        if fc.is_atoms() != atoms {
            return Err(invalid(format!("configuration `{fc}` does not match the platform")));
        }
        Ok(fc)
    }

    pub fn gate_spec(&self) -> Result<GateSpec> {
        self.gate.ok_or_else(|| invalid("`gate` section is required"))
    }

    pub fn krotov_options(&self) -> KrotovOptions {
        self.krotov.clone().unwrap_or_default()
    }

    pub fn guess_spec(&self) -> GuessSpec {
        self.guess.unwrap_or_default()
    }

    pub fn scan_spec(&self) -> Result<ScanSpec> {
        let scan = self
            .scan
            .as_ref()
            .ok_or_else(|| invalid("`scan` section is required"))?;
        if scan.t_values_ns.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(invalid("scan.t_values_ns must be strictly decreasing"));
        }
        if scan.histogram_bins_per_decade == 0 {
            return Err(invalid("scan.histogram_bins_per_decade must be positive"));
        }
        let platform = self.platform_config()?;
        let spec = ScanSpec {
            gate: self.gate_spec()?.target()?,
            configuration: self.field_configuration(&platform)?,
            max_dt: scan.max_dt_ns.unwrap_or_else(|| platform.default_dt()),
            platform,
            t_values: scan.t_values_ns.clone(),
            restarts_per_t: scan.restarts_per_t,
            seed: self.seed()?,
            epsilon_max: scan.epsilon_max,
            krotov: self.krotov_options(),
            guess: self.guess_spec(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks that the sections the job needs are present and consistent.
    pub fn validate(&self) -> Result<()> {
        self.seed()?;
        match self.job {
            JobKind::Optimize => {
                let opt = self
                    .optimize
                    .as_ref()
                    .ok_or_else(|| invalid("`optimize` section is required"))?;
                if !(opt.duration_ns > 0.0) {
                    return Err(invalid("optimize.duration_ns must be positive"));
                }
                if opt.max_dt_ns.is_some_and(|d| !(d > 0.0)) {
                    return Err(invalid("optimize.max_dt_ns must be positive"));
                }
                let platform = self.platform_config()?;
                self.field_configuration(&platform)?;
                let gate = self.gate_spec()?.target()?;
                if gate.n_qubits() != platform.n_qubits() {
                    return Err(invalid(format!(
                        "gate {} needs {} qubits, platform has {}",
                        gate.label(),
                        gate.n_qubits(),
                        platform.n_qubits()
                    )));
                }
                KrotovOptions {
                    lambda: None,
                    ..self.krotov_options()
                }
                .validate(0)?;
            }
            JobKind::QslScan => {
                self.scan_spec()?;
            }
            JobKind::CircuitSweep => {
                let s = self
                    .sweep
                    .as_ref()
                    .ok_or_else(|| invalid("`sweep` section is required"))?;
                if s.algorithms.is_empty() || s.platforms.is_empty() || s.models.is_empty() || s.gate_sets.is_empty() {
                    return Err(invalid("sweep lists must not be empty"));
                }
                if s.n_values.is_empty() {
                    return Err(invalid("sweep.n_values must not be empty"));
                }
                let min_n = if s.models.contains(&Encoding::Pm) && s.algorithms.contains(&Algorithm::Qaoa) {
                    3
                } else {
                    2
                };
                if s.n_values.iter().any(|&n| n < min_n) {
                    return Err(invalid(format!("sweep.n_values must be at least {min_n}")));
                }
                if s.instances_per_n == 0 {
                    return Err(invalid("sweep.instances_per_n must be positive"));
                }
                if ![s.beta, s.alpha, s.gamma].iter().all(|x| x.is_finite()) {
                    return Err(invalid("sweep angles must be finite"));
                }
                for (p, v) in [
                    (Platform::Atoms, s.atoms_variant),
                    (Platform::Superconducting, s.superconducting_variant),
                ] {
                    let ok = matches!(
                        (p, v),
                        (_, Variant::Standard)
                            | (Platform::Atoms, Variant::Pseudo2d)
                            | (Platform::Superconducting, Variant::Nnn)
                    );
                    if !ok {
                        return Err(invalid(format!("variant {v:?} does not apply to {p}")));
                    }
                }
            }
            JobKind::EntanglingPower => {
                let e = self
                    .epower
                    .as_ref()
                    .ok_or_else(|| invalid("`epower` section is required"))?;
                if e.gates.is_empty() || e.gamma_points == 0 || e.n_samples == 0 {
                    return Err(invalid("epower needs gates, gamma_points > 0 and n_samples > 0"));
                }
                if !(e.gamma_min.is_finite() && e.gamma_max.is_finite() && e.gamma_min <= e.gamma_max) {
                    return Err(invalid("epower needs gamma_min <= gamma_max"));
                }
                if e.gates.iter().any(|g| !g.takes_gamma()) {
                    return Err(invalid("epower gates must be ZZZ or ZZZZ"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_names_path() {
        let err = parse_config(r#"{"job": "qsl_scan", "seed": 1, "scan": {"t_values_ns": [2, 1], "restart": 3}}"#)
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("scan") && msg.contains("restart"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn platform_units_convert() {
        let cfg = parse_config(
            r#"{"job": "optimize", "seed": 3, "platform": {"kind": "atoms", "n_atoms": 2, "v_mhz": 20},
                "gate": {"name": "CZ"}, "optimize": {"duration_ns": 100}}"#,
        )
        .unwrap();
        cfg.validate().unwrap();
        match cfg.platform_config().unwrap() {
            PlatformConfig::Atoms(a) => {
                assert!((a.v - mhz(20.0)).abs() < 1e-15);
                assert!((a.omega_max - 0.1 * mhz(20.0)).abs() < 1e-15);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn ascending_ladder_rejected() {
        let cfg = parse_config(
            r#"{"job": "qsl_scan", "seed": 3, "platform": {"kind": "atoms", "n_atoms": 2},
                "gate": {"name": "CZ"}, "scan": {"t_values_ns": [100, 200]}}"#,
        )
        .unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("t_values_ns"));
    }

    #[test]
    fn missing_seed_and_mismatched_configuration() {
        let cfg = parse_config(r#"{"job": "circuit_sweep", "sweep": {}}"#).unwrap();
        assert!(cfg.validate().is_err());
        let cfg = parse_config(
            r#"{"job": "optimize", "seed": 3, "platform": {"kind": "transmons", "n_transmons": 2},
                "configuration": "atoms_phase", "gate": {"name": "CZ"}, "optimize": {"duration_ns": 10}}"#,
        )
        .unwrap();
        assert!(cfg.validate().is_err());
    }
}
