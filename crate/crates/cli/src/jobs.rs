//! Job execution: each job writes its result files through one `OutputDir`
//! and finishes with a manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use qsl_circuits::{
    build_qaoa_pm_step, build_qaoa_sgm_step, build_qft_pm, build_qft_sgm, Algorithm, Circuit, Encoding, GateSet,
    Platform, PlatformProfile, SpinGlassInstance,
};
use qsl_core::fields::ControlField;
use qsl_core::gates::{entangling_power, make_gate};
use qsl_core::qslscan::{density_histogram, run_scan, GateProblem, QslScanResult};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{load_config, JobConfig, JobKind, SweepSection};
use crate::error::{CliError, Result};
use crate::output::{resolve_output_dir, OutputDir, RunManifest};
use crate::report::{csv_bytes, read_sweep_csv, report_reduction_stats, SweepRow};

/// Command-line overrides of a run.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub manifest: PathBuf,
    pub message: String,
}

struct JobOutcome {
    dt_ns: Option<f64>,
    lambda: Option<serde_json::Value>,
    message: String,
}

/// Loads, overrides and validates a configuration, then runs it.
pub fn run(expected: JobKind, opts: &RunOptions) -> Result<RunSummary> {
    let mut cfg = load_config(&opts.config)?;
    if cfg.job != expected {
        return Err(CliError::Validation(format!(
            "config describes a `{}` job, not `{}`",
            cfg.job.name(),
            expected.name()
        )));
    }
    if opts.seed.is_some() {
        cfg.seed = opts.seed;
    }
    let out_dir = resolve_output_dir(opts.out.as_deref(), cfg.output_dir.as_deref(), cfg.job.name());
    execute(&cfg, &out_dir, opts.threads)
}

/// Runs a validated-on-entry configuration into `out_dir`.
pub fn execute(cfg: &JobConfig, out_dir: &Path, threads: Option<usize>) -> Result<RunSummary> {
    cfg.validate()?;
    let seed = cfg.seed()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let mut out = OutputDir::create(out_dir)?;
    let outcome = pool.install(|| match cfg.job {
        JobKind::Optimize => run_optimize(cfg, seed, &mut out),
        JobKind::QslScan => run_qsl_scan(cfg, &mut out),
        JobKind::CircuitSweep => run_sweep(cfg, seed, &mut out),
        JobKind::EntanglingPower => run_epower(cfg, seed, &mut out),
    })?;
    let manifest = RunManifest {
        job: cfg.job.name().to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config: serde_json::to_value(cfg)?,
        seed: Some(seed),
        threads: pool.current_num_threads(),
        dt_ns: outcome.dt_ns,
        lambda: outcome.lambda,
        wall_clock_s: start.elapsed().as_secs_f64(),
        files: Vec::new(),
    };
    let manifest = out.finish(manifest)?;
    Ok(RunSummary {
        out_dir: out_dir.to_path_buf(),
        manifest,
        message: outcome.message,
    })
}

fn fields_csv(fields: &[ControlField]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t_ns".to_string()];
    header.extend(fields.iter().map(|f| f.name.clone()));
    w.write_record(&header)?;
    if let Some(first) = fields.first() {
        for (j, t) in first.grid.midpoints().enumerate() {
            let mut rec = vec![t.to_string()];
            rec.extend(fields.iter().map(|f| f.values[j].to_string()));
            w.write_record(&rec)?;
        }
    }
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

#[derive(Serialize)]
struct OptimizeReport<'a> {
    gate: String,
    configuration: String,
    duration_ns: f64,
    dt_ns: f64,
    n_steps: usize,
    converged: bool,
    iterations: usize,
    final_error: f64,
    monotonic: bool,
    rejected_updates: usize,
    max_top_level_population: f64,
    lambda: &'a [f64],
    fields: Vec<&'a str>,
}

#[derive(Serialize)]
struct TraceRow {
    iteration: usize,
    error: f64,
    j: f64,
    cost: f64,
}

fn run_optimize(cfg: &JobConfig, seed: u64, out: &mut OutputDir) -> Result<JobOutcome> {
    let platform = cfg.platform_config()?;
    let configuration = cfg.field_configuration(&platform)?;
    let section = cfg.optimize.as_ref().expect("validated");
    let problem = GateProblem {
        max_dt: section.max_dt_ns.unwrap_or_else(|| platform.default_dt()),
        platform,
        configuration,
        gate: cfg.gate_spec()?.target()?,
        duration: section.duration_ns,
    };
    let res = problem.optimize(&cfg.guess_spec(), seed, &cfg.krotov_options())?;
    let grid = &res.fields[0].grid;
    let report = OptimizeReport {
        gate: problem.gate.label(),
        configuration: configuration.to_string(),
        duration_ns: problem.duration,
        dt_ns: grid.dt(),
        n_steps: grid.n_steps(),
        converged: res.converged,
        iterations: res.iterations,
        final_error: res.final_error(),
        monotonic: res.monotonic,
        rejected_updates: res.rejected_updates,
        max_top_level_population: res.max_top_level_population,
        lambda: &res.lambda,
        fields: res.fields.iter().map(|f| f.name.as_str()).collect(),
    };
    out.write_json("result.json", &report)?;
    let trace: Vec<TraceRow> = res
        .error_trace
        .iter()
        .enumerate()
        .map(|(i, &error)| {
            let (j, cost) = if i == 0 {
                (error, 0.0)
            } else {
                (
                    res.j_trace.get(i - 1).copied().unwrap_or(f64::NAN),
                    res.cost_trace.get(i - 1).copied().unwrap_or(0.0),
                )
            };
            TraceRow {
                iteration: i,
                error,
                j,
                cost,
            }
        })
        .collect();
    out.write("trace.csv", &csv_bytes(&trace)?)?;
    out.write("fields.csv", &fields_csv(&res.fields)?)?;
    Ok(JobOutcome {
        dt_ns: Some(grid.dt()),
        lambda: Some(serde_json::to_value(&res.lambda)?),
        message: format!(
            "{} at T = {} ns: error {:.3e} after {} iterations ({})",
            problem.gate.label(),
            problem.duration,
            res.final_error(),
            res.iterations,
            if res.converged { "converged" } else { "not converged" }
        ),
    })
}

#[derive(Serialize)]
struct ScanReport<'a> {
    gate: String,
    configuration: String,
    max_dt_ns: f64,
    t_qsl_ns: Option<f64>,
    result: &'a QslScanResult,
}

#[derive(Serialize)]
struct BestRow {
    #[serde(rename = "T_ns")]
    t_ns: f64,
    best_error: f64,
    success_fraction: f64,
}

#[derive(Serialize)]
struct HistRow {
    #[serde(rename = "T_ns")]
    t_ns: String,
    bin_lo: f64,
    bin_hi: f64,
    count: usize,
}

fn run_qsl_scan(cfg: &JobConfig, out: &mut OutputDir) -> Result<JobOutcome> {
    let spec = cfg.scan_spec()?;
    let bins = cfg.scan.as_ref().expect("validated").histogram_bins_per_decade;
    let result = run_scan(&spec)?;
    out.write_json(
        "scan.json",
        &ScanReport {
            gate: spec.gate.label(),
            configuration: spec.configuration.to_string(),
            max_dt_ns: spec.max_dt,
            t_qsl_ns: result.t_qsl,
            result: &result,
        },
    )?;
    let best: Vec<BestRow> = (0..result.t_values.len())
        .map(|i| BestRow {
            t_ns: result.t_values[i],
            best_error: result.best_error[i],
            success_fraction: result.success_fraction(i),
        })
        .collect();
    out.write("best_eps_vs_T.csv", &csv_bytes(&best)?)?;
    let hist: Vec<HistRow> = density_histogram(&result, bins)?
        .into_iter()
        .map(|r| HistRow {
            t_ns: r.label,
            bin_lo: r.bin_lo,
            bin_hi: r.bin_hi,
            count: r.count,
        })
        .collect();
    out.write("histogram.csv", &csv_bytes(&hist)?)?;
    if let Some(t) = result.t_qsl {
        let i = result
            .t_values
            .iter()
            .position(|&x| x == t)
            .expect("T_QSL is on the ladder");
        out.write("best_fields_tqsl.csv", &fields_csv(&result.best_fields[i])?)?;
    }
    let lambda: Vec<serde_json::Value> = result
        .cells
        .iter()
        .map(|c| serde_json::json!({"t_ns": c.t, "restart": c.restart, "lambda": c.lambda}))
        .collect();
    let message = match result.t_qsl {
        Some(t) => format!("{}: T_QSL = {t} ns", spec.gate.label()),
        None => format!(
            "{}: no duration reached epsilon_max = {}",
            spec.gate.label(),
            spec.epsilon_max
        ),
    };
    Ok(JobOutcome {
        dt_ns: Some(spec.max_dt),
        lambda: Some(serde_json::Value::Array(lambda)),
        message,
    })
}

/// Seed of spin-glass instance `index` of size `n`.
pub fn instance_seed(seed: u64, n: usize, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n as u64);
    let mut s = 0;
    for _ in 0..=index {
        s = rng.next_u64();
    }
    s
}

#[derive(Clone, Copy, Debug)]
struct SweepTask {
    algorithm: Algorithm,
    platform: Platform,
    model: Encoding,
    gate_set: GateSet,
    n: usize,
    instance: usize,
}

impl SweepTask {
    fn name(&self) -> String {
        let alg = match self.algorithm {
            Algorithm::Qft => "qft",
            Algorithm::Qaoa => "qaoa",
        };
        let model = match self.model {
            Encoding::Sgm => "sgm",
            Encoding::Pm => "pm",
        };
        format!(
            "{alg}_{model}_{}_{}_N{}_i{}",
            self.platform, self.gate_set, self.n, self.instance
        )
    }
}

fn sweep_profile(s: &SweepSection, platform: Platform, gate_set: GateSet) -> PlatformProfile {
    let variant = match platform {
        Platform::Atoms => s.atoms_variant,
        Platform::Superconducting => s.superconducting_variant,
    };
    let mut p = PlatformProfile::with_variant(platform, gate_set, variant);
    if let Some(k) = s.sycamore_per_cz {
        p.sycamore_per_cz = k;
    }
    p
}

fn build_sweep_circuit(s: &SweepSection, seed: u64, t: &SweepTask) -> Result<(SweepRow, Circuit)> {
    let profile = sweep_profile(s, t.platform, t.gate_set);
    let instance = || SpinGlassInstance::random(t.n, instance_seed(seed, t.n, t.instance));
    let circuit = match (t.algorithm, t.model) {
        (Algorithm::Qft, Encoding::Sgm) => build_qft_sgm(t.n, &profile)?,
        (Algorithm::Qft, Encoding::Pm) => build_qft_pm(t.n, &profile, s.pm_qft)?,
        (Algorithm::Qaoa, Encoding::Sgm) => build_qaoa_sgm_step(&instance(), s.beta, s.alpha, &profile)?,
        (Algorithm::Qaoa, Encoding::Pm) => {
            let native = s.native_constraints && t.gate_set != GateSet::Sgs;
            build_qaoa_pm_step(&instance(), s.beta, s.alpha, s.gamma, &profile, native)?
        }
    };
    let counts = circuit.count_gates();
    let row = SweepRow {
        algorithm: t.algorithm,
        platform: t.platform,
        model: t.model,
        gateset: t.gate_set,
        n: t.n,
        k: circuit.n_qubits,
        instance: t.instance,
        depth: circuit.depth(),
        weighted_time: circuit.weighted_runtime(&profile)?,
        runtime_ns: circuit.runtime_ns(&profile)?,
        single_qubit: counts.single,
        two_qubit: counts.two,
        three_qubit: counts.three,
        four_qubit: counts.four,
        multi_qubit: counts.multi(),
    };
    Ok((row, circuit))
}

/// Compiles every requested circuit; rows come back in task order.
pub fn sweep_rows(s: &SweepSection, seed: u64) -> Result<Vec<(SweepRow, Circuit, String)>> {
    let mut tasks = Vec::new();
    for &algorithm in &s.algorithms {
        for &platform in &s.platforms {
            for &model in &s.models {
                for &gate_set in &s.gate_sets {
                    for &n in &s.n_values {
                        let instances = if algorithm == Algorithm::Qaoa {
                            s.instances_per_n
                        } else {
                            1
                        };
                        for instance in 0..instances {
                            tasks.push(SweepTask {
                                algorithm,
                                platform,
                                model,
                                gate_set,
                                n,
                                instance,
                            });
                        }
                    }
                }
            }
        }
    }
    tasks
        .par_iter()
        .map(|t| build_sweep_circuit(s, seed, t).map(|(row, c)| (row, c, t.name())))
        .collect()
}

fn run_sweep(cfg: &JobConfig, seed: u64, out: &mut OutputDir) -> Result<JobOutcome> {
    let s = cfg.sweep.as_ref().expect("validated");
    let built = sweep_rows(s, seed)?;
    let rows: Vec<SweepRow> = built.iter().map(|b| b.0.clone()).collect();
    out.write("sweep.csv", &csv_bytes(&rows)?)?;
    out.write_json("sweep.json", &rows)?;
    let reductions = report_reduction_stats(&rows)?;
    out.write("reduction.csv", &csv_bytes(&reductions)?)?;
    if s.export_circuits {
        for (_, circuit, name) in &built {
            out.write(&format!("circuits/{name}.txt"), circuit.to_text().as_bytes())?;
            out.write_json(&format!("circuits/{name}.json"), &circuit.export())?;
        }
    }
    Ok(JobOutcome {
        dt_ns: None,
        lambda: None,
        message: format!("{} circuits, {} reduction rows", rows.len(), reductions.len()),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EpowerRow {
    pub gate: String,
    pub gamma: f64,
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

fn run_epower(cfg: &JobConfig, seed: u64, out: &mut OutputDir) -> Result<JobOutcome> {
    let e = cfg.epower.as_ref().expect("validated");
    let mut rows = Vec::new();
    let mut argmax = serde_json::Map::new();
    for &name in &e.gates {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for k in 0..e.gamma_points {
            let gamma = if e.gamma_points == 1 {
                e.gamma_min
            } else {
                e.gamma_min + (e.gamma_max - e.gamma_min) * k as f64 / (e.gamma_points - 1) as f64
            };
            let gate = make_gate(name, Some(gamma), e.phase_shifted)?;
            // Common random inputs across gamma keep the curve smooth.
            let p = entangling_power(&gate, e.n_samples, seed)?;
            if p.mean > best.0 {
                best = (p.mean, gamma);
            }
            rows.push(EpowerRow {
                gate: name.to_string(),
                gamma,
                mean: p.mean,
                std_error: p.std_error,
                n_samples: p.n_samples,
            });
        }
        argmax.insert(
            name.to_string(),
            serde_json::json!({"gamma": best.1, "entangling_power": best.0}),
        );
    }
    out.write("epower.csv", &csv_bytes(&rows)?)?;
    out.write_json("epower.json", &serde_json::json!({"rows": rows, "argmax": argmax}))?;
    Ok(JobOutcome {
        dt_ns: None,
        lambda: None,
        message: format!("{} entangling-power points", rows.len()),
    })
}

/// Recomputes reduction statistics from an existing `sweep.csv`.
pub fn run_report(input: &Path, out: Option<&Path>) -> Result<(RunSummary, Vec<crate::report::ReductionRow>)> {
    let start = Instant::now();
    let rows = read_sweep_csv(input)?;
    let stats = report_reduction_stats(&rows)?;
    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => input.parent().map(Path::to_path_buf).unwrap_or_default().join("report"),
    };
    let mut writer = OutputDir::create(&dir)?;
    writer.write("reduction.csv", &csv_bytes(&stats)?)?;
    let manifest = RunManifest {
        job: "report".into(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config: serde_json::json!({ "input": input.display().to_string() }),
        seed: None,
        threads: 1,
        dt_ns: None,
        lambda: None,
        wall_clock_s: start.elapsed().as_secs_f64(),
        files: Vec::new(),
    };
    let manifest = writer.finish(manifest)?;
    let message = format!("{} reduction rows from {} sweep rows", stats.len(), rows.len());
    Ok((
        RunSummary {
            out_dir: dir,
            manifest,
            message,
        },
        stats,
    ))
}
