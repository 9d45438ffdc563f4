//! Quantum speed limit scans: optimize a gate from several randomized
//! guesses over a descending ladder of durations and report the shortest
//! duration that still reaches the error threshold.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QslError, Result};
use crate::fields::{ControlField, RandomFieldSpec, TimeGrid};
use crate::gates::{embed_targets, make_gate, GateName, GateTarget, TargetStateSet};
use crate::models::{FieldConfiguration, HamiltonianModel, PlatformConfig};
use crate::optimizer::{krotov_iterate, KrotovOptions, OptimizationResult};

/// Gate selection as it appears in configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub name: GateName,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub phase_shifted: bool,
}

impl GateSpec {
    pub fn target(&self) -> Result<GateTarget> {
        make_gate(self.name, self.gamma, self.phase_shifted)
    }
}

/// How randomized guesses are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuessSpec {
    /// Fourier component range; `None` uses the platform default.
    pub m_range: Option<(u32, u32)>,
    /// Amplitude of unbounded (phase) guesses in rad.
    pub phase_scale: f64,
    /// Amplitude of bounded guesses in units of the half-width.
    pub bounded_scale: f64,
}

impl Default for GuessSpec {
    fn default() -> Self {
        Self {
            m_range: None,
            phase_scale: std::f64::consts::PI,
            bounded_scale: 1.0,
        }
    }
}

/// One optimization problem: a gate on a platform with a field
/// configuration and a fixed duration.
#[derive(Clone, Debug, PartialEq)]
pub struct GateProblem {
    pub platform: PlatformConfig,
    pub configuration: FieldConfiguration,
    pub gate: GateTarget,
    pub duration: f64,
    pub max_dt: f64,
}

pub struct PreparedProblem {
    pub model: HamiltonianModel,
    pub fields: Vec<ControlField>,
    pub targets: TargetStateSet,
}

impl GateProblem {
    /// Build the model, the deterministic guess fields and the targets.
    pub fn prepare(&self) -> Result<PreparedProblem> {
        if !(self.duration > 0.0) || !(self.max_dt > 0.0) {
            return Err(QslError::config("duration and dt must be positive"));
        }
        let grid = TimeGrid::with_max_step(self.duration, self.max_dt)?;
        let (model, fields) = self.platform.build(self.configuration, &grid)?;
        let targets = embed_targets(&self.gate, &model)?;
        Ok(PreparedProblem { model, fields, targets })
    }

    /// Replace every optimized field with a randomized guess. Field `i` draws
    /// its profile from the `i`-th output of a generator seeded with `seed`.
    pub fn randomize(&self, fields: &mut [ControlField], guess: &GuessSpec, seed: u64) -> Result<()> {
        let (m_min, m_max) = guess.m_range.unwrap_or_else(|| self.platform.default_m_range());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for field in fields.iter_mut() {
            let field_seed = rng.next_u64();
            if field.frozen {
                continue;
            }
            let scale = match field.bounds {
                Some(b) => guess.bounded_scale * b.half_width(),
                None => guess.phase_scale,
            };
            field.randomize(&RandomFieldSpec {
                m_min,
                m_max,
                seed: field_seed,
                scale,
            })?;
        }
        Ok(())
    }

    pub fn optimize(&self, guess: &GuessSpec, seed: u64, opts: &KrotovOptions) -> Result<OptimizationResult> {
        let mut p = self.prepare()?;
        self.randomize(&mut p.fields, guess, seed)?;
        krotov_iterate(&p.model, &p.fields, &p.targets, opts)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanSpec {
    pub gate: GateTarget,
    pub platform: PlatformConfig,
    pub configuration: FieldConfiguration,
    /// Strictly decreasing durations in ns.
    pub t_values: Vec<f64>,
    pub restarts_per_t: usize,
    pub seed: u64,
    pub epsilon_max: f64,
    pub max_dt: f64,
    pub krotov: KrotovOptions,
    pub guess: GuessSpec,
}

impl ScanSpec {
    pub fn validate(&self) -> Result<()> {
        if self.t_values.is_empty() {
            return Err(QslError::config("the duration ladder is empty"));
        }
        if self.t_values.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(QslError::config("durations must be positive"));
        }
        if self.t_values.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(QslError::config("durations must be strictly decreasing"));
        }
        if self.restarts_per_t == 0 {
            return Err(QslError::config("at least one restart per duration is required"));
        }
        if !(self.epsilon_max > 0.0 && self.epsilon_max < 1.0) {
            return Err(QslError::config("epsilon_max must lie in (0, 1)"));
        }
        if self.platform.n_qubits() != self.gate.n_qubits() {
            return Err(QslError::config(format!(
                "gate {} needs {} qubits, platform has {}",
                self.gate.label(),
                self.gate.n_qubits(),
                self.platform.n_qubits()
            )));
        }
        self.platform.validate()?;
        // Per-field lambda counts are checked once the model is built.
        KrotovOptions {
            lambda: None,
            epsilon_max: self.epsilon_max,
            ..self.krotov.clone()
        }
        .validate(0)
    }

    /// Guess seed of every restart; the same seeds are reused at every
    /// duration (each seed selects its own stream of the scan generator).
    pub fn restart_seeds(&self) -> Vec<u64> {
        (0..self.restarts_per_t)
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(r as u64);
                rng.next_u64()
            })
            .collect()
    }

    fn problem(&self, t: f64) -> GateProblem {
        GateProblem {
            platform: self.platform.clone(),
            configuration: self.configuration,
            gate: self.gate.clone(),
            duration: t,
            max_dt: self.max_dt,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellResult {
    pub t: f64,
    pub restart: usize,
    pub seed: u64,
    pub final_error: f64,
    pub iterations: usize,
    pub converged: bool,
    pub monotonic: bool,
    pub max_top_level_population: f64,
    /// Step-size parameters the optimizer used, one per field.
    pub lambda: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct QslScanResult {
    pub t_values: Vec<f64>,
    pub restarts_per_t: usize,
    pub epsilon_max: f64,
    /// Ordered by duration (ladder order), then restart index.
    pub cells: Vec<CellResult>,
    pub best_error: Vec<f64>,
    pub t_qsl: Option<f64>,
    /// Optimized fields of the best restart at every duration.
    #[serde(skip)]
    pub best_fields: Vec<Vec<ControlField>>,
}

impl QslScanResult {
    pub fn cells_at(&self, t_index: usize) -> &[CellResult] {
        let r = self.restarts_per_t;
        &self.cells[t_index * r..(t_index + 1) * r]
    }

    pub fn success_fraction(&self, t_index: usize) -> f64 {
        let cells = self.cells_at(t_index);
        cells.iter().filter(|c| c.final_error <= self.epsilon_max).count() as f64 / cells.len() as f64
    }
}

/// Shortest duration reached before the first duration at which every
/// restart fails; `None` when the longest duration already fails.
pub fn qsl_from_best(t_values: &[f64], best_error: &[f64], epsilon_max: f64) -> Option<f64> {
    let mut found = None;
    for (&t, &e) in t_values.iter().zip(best_error) {
        if e <= epsilon_max {
            found = Some(t);
        } else {
            break;
        }
    }
    found
}

pub fn run_scan(spec: &ScanSpec) -> Result<QslScanResult> {
    run_scan_with_seeds(spec, &spec.restart_seeds())
}

/// Scan with explicit per-restart guess seeds.
pub fn run_scan_with_seeds(spec: &ScanSpec, seeds: &[u64]) -> Result<QslScanResult> {
    spec.validate()?;
    if seeds.len() != spec.restarts_per_t {
        return Err(QslError::config("one seed per restart is required"));
    }
    let cells: Vec<(usize, usize)> = (0..spec.t_values.len())
        .flat_map(|i| (0..spec.restarts_per_t).map(move |r| (i, r)))
        .collect();
    // The scan threshold is the optimizer's stopping threshold.
    let opts = KrotovOptions {
        epsilon_max: spec.epsilon_max,
        ..spec.krotov.clone()
    };
    let outcomes: Vec<(CellResult, Vec<ControlField>)> = cells
        .par_iter()
        .map(|&(i, r)| {
            let t = spec.t_values[i];
            let res = spec.problem(t).optimize(&spec.guess, seeds[r], &opts)?;
            Ok((
                CellResult {
                    t,
                    restart: r,
                    seed: seeds[r],
                    final_error: res.final_error(),
                    iterations: res.iterations,
                    converged: res.converged,
                    monotonic: res.monotonic,
                    max_top_level_population: res.max_top_level_population,
                    lambda: res.lambda,
                },
                res.fields,
            ))
        })
        .collect::<Result<_>>()?;

    let r = spec.restarts_per_t;
    let mut best_error = Vec::with_capacity(spec.t_values.len());
    let mut best_fields = Vec::with_capacity(spec.t_values.len());
    for chunk in outcomes.chunks(r) {
        let best = chunk
            .iter()
            .min_by(|a, b| a.0.final_error.total_cmp(&b.0.final_error))
            .expect("at least one restart");
        best_error.push(best.0.final_error);
        best_fields.push(best.1.clone());
    }
    Ok(QslScanResult {
        t_qsl: qsl_from_best(&spec.t_values, &best_error, spec.epsilon_max),
        t_values: spec.t_values.clone(),
        restarts_per_t: r,
        epsilon_max: spec.epsilon_max,
        cells: outcomes.into_iter().map(|(c, _)| c).collect(),
        best_error,
        best_fields,
    })
}

/// Smallest error the histogram distinguishes.
pub const ERROR_FLOOR: f64 = 1e-16;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramRow {
    pub label: String,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: usize,
}

/// Final-error counts per duration in `bins_per_decade` log-spaced bins
/// covering whole decades from the smallest to the largest error.
pub fn density_histogram(result: &QslScanResult, bins_per_decade: usize) -> Result<Vec<HistogramRow>> {
    if result.cells.is_empty() {
        return Err(QslError::config("empty scan result"));
    }
    if bins_per_decade == 0 {
        return Err(QslError::config("bins_per_decade must be positive"));
    }
    let logs: Vec<f64> = result
        .cells
        .iter()
        .map(|c| c.final_error.max(ERROR_FLOOR).log10())
        .collect();
    let lo = logs.iter().cloned().fold(f64::INFINITY, f64::min).floor();
    let mut hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil();
    if hi <= lo {
        hi = lo + 1.0;
    }
    let n_bins = ((hi - lo) as usize) * bins_per_decade;
    let width = 1.0 / bins_per_decade as f64;
    let mut rows = Vec::new();
    for (i, &t) in result.t_values.iter().enumerate() {
        let mut counts = vec![0usize; n_bins];
        for c in result.cells_at(i) {
            let x = c.final_error.max(ERROR_FLOOR).log10();
            let b = (((x - lo) / width).floor() as usize).min(n_bins - 1);
            counts[b] += 1;
        }
        for (b, &count) in counts.iter().enumerate() {
            rows.push(HistogramRow {
                label: format!("{t}"),
                bin_lo: 10f64.powf(lo + b as f64 * width),
                bin_hi: 10f64.powf(lo + (b + 1) as f64 * width),
                count,
            });
        }
    }
    Ok(rows)
}
