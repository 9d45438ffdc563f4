//! Krotov's method for gate optimization with a phase-sensitive gate error.
//!
//! Each iteration propagates the co-states backward under the old fields and
//! then sweeps forward, updating every non-frozen field in each time step
//! before propagating that step with the new values. Bounded fields are
//! updated in the unconstrained variable `u`.
//!
//! The discrete update is safeguarded: the exact change of the gate error
//! contributed by a step is known from the stored co-states, and an update is
//! only accepted when that gain covers its running cost (otherwise the update
//! is halved, and finally dropped). This keeps `J` monotonic independent of
//! the step size.

use serde::{Deserialize, Serialize};

use crate::dynamics::{controls_at, inner, Propagator};
use crate::error::{QslError, Result};
use crate::fields::{field_to_unbounded, make_shape, unbounded_derivative, unbounded_to_field, ControlField};
use crate::gates::TargetStateSet;
use crate::models::HamiltonianModel;
use crate::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KrotovOptions {
    /// Per-field step-size parameters; `None` scales them automatically on
    /// the first iteration.
    pub lambda: Option<Vec<f64>>,
    /// Target size of the largest first-iteration update, as a fraction of
    /// the parameter range (2 in `u` for bounded fields, 2 pi for phases).
    pub lambda_fraction: f64,
    pub max_iterations: usize,
    pub epsilon_max: f64,
    /// Length of each sin^2 switch-on/off ramp of the update shape, as a
    /// fraction of the duration.
    pub ramp_fraction: f64,
    /// Allowed increase of `J` before an iteration is flagged.
    pub stall_tolerance: f64,
    /// Halvings of a rejected update before it is dropped.
    pub max_halvings: u32,
}

impl Default for KrotovOptions {
    fn default() -> Self {
        Self {
            lambda: None,
            lambda_fraction: 0.05,
            max_iterations: 1500,
            epsilon_max: 1e-3,
            ramp_fraction: 0.05,
            stall_tolerance: 1e-10,
            max_halvings: 6,
        }
    }
}

impl KrotovOptions {
    pub fn validate(&self, n_fields: usize) -> Result<()> {
        if let Some(l) = &self.lambda {
            if l.len() != n_fields {
                return Err(QslError::config(format!(
                    "expected {n_fields} lambda values, got {}",
                    l.len()
                )));
            }
            if l.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(QslError::config("lambda values must be positive"));
            }
        }
        if !(self.epsilon_max > 0.0 && self.epsilon_max < 1.0) {
            return Err(QslError::config("epsilon_max must lie in (0, 1)"));
        }
        if self.max_iterations == 0 {
            return Err(QslError::config("max_iterations must be at least 1"));
        }
        if !(self.lambda_fraction > 0.0) {
            return Err(QslError::config("lambda_fraction must be positive"));
        }
        if !(self.stall_tolerance >= 0.0) {
            return Err(QslError::config("stall_tolerance must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizationResult {
    pub fields: Vec<ControlField>,
    /// Gate error of the guess followed by one entry per iteration.
    pub error_trace: Vec<f64>,
    /// `J = eps_T + running cost` per iteration (the guess has no cost).
    pub j_trace: Vec<f64>,
    pub cost_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub lambda: Vec<f64>,
    /// Largest population of the highest ladder level seen along the final
    /// forward propagation (zero for atoms).
    pub max_top_level_population: f64,
    /// False if `J` ever increased by more than the stall tolerance.
    pub monotonic: bool,
    pub rejected_updates: usize,
}

impl OptimizationResult {
    pub fn final_error(&self) -> f64 {
        *self.error_trace.last().expect("trace holds the guess error")
    }
}

/// `eps_T = 1 - (1/N) sum_l Re <target_l | psi_l(T)>`.
pub fn gate_error(states: &[Vec<C64>], targets: &TargetStateSet) -> Result<f64> {
    if states.len() != targets.len() || targets.is_empty() {
        return Err(QslError::Dimension(format!(
            "{} states for {} targets",
            states.len(),
            targets.len()
        )));
    }
    let n = targets.len() as f64;
    let overlap: f64 = states
        .iter()
        .zip(&targets.targets)
        .map(|(psi, tau)| inner(tau, psi).re)
        .sum();
    Ok(1.0 - overlap / n)
}

/// `chi_l(T) = target_l / (2 N)`.
pub fn costate_boundary(targets: &TargetStateSet) -> Vec<Vec<C64>> {
    let scale = 1.0 / (2.0 * targets.len() as f64);
    targets
        .targets
        .iter()
        .map(|tau| tau.iter().map(|z| z * scale).collect())
        .collect()
}

/// Gate error reached by the given fields.
pub fn evaluate_error(model: &HamiltonianModel, fields: &[ControlField], targets: &TargetStateSet) -> Result<f64> {
    let finals = crate::dynamics::propagate_final(model, fields, &targets.initial)?;
    gate_error(&finals, targets)
}

fn backward_costates(prop: &Propagator, fields: &[ControlField], targets: &TargetStateSet) -> Vec<Vec<Vec<C64>>> {
    let n = prop.grid().n_steps();
    let mut out = vec![Vec::new(); n + 1];
    let mut chi = costate_boundary(targets);
    out[n] = chi.clone();
    for j in (0..n).rev() {
        prop.step(&controls_at(fields, j), &mut chi, true);
        out[j] = chi.clone();
    }
    out
}

/// `g_k(t_j) = sum_l Im <chi_l| dH/dE_k |psi_l>` at the midpoint of every
/// step under the given fields, so that
/// `d eps_T / d E_k(t_j) ~ -2 dt g_k(t_j)`.
pub fn gradient_profile(
    model: &HamiltonianModel,
    fields: &[ControlField],
    targets: &TargetStateSet,
) -> Result<Vec<Vec<f64>>> {
    let prop = Propagator::new(model, fields)?;
    let chi = backward_costates(&prop, fields, targets);
    let n = prop.grid().n_steps();
    let mut psi = targets.initial.clone();
    let mut g = vec![vec![0.0; n]; fields.len()];
    for j in 0..n {
        let c = controls_at(fields, j);
        let mut psi_mid = psi.clone();
        prop.partial_step(&c, &mut psi_mid, false, 0.5);
        let mut chi_mid = chi[j + 1].clone();
        prop.partial_step(&c, &mut chi_mid, true, 0.5);
        for (k, gk) in g.iter_mut().enumerate() {
            gk[j] = psi_mid
                .iter()
                .zip(&chi_mid)
                .map(|(p, x)| model.derivative_sandwich(k, &c, x, p).im)
                .sum();
        }
        prop.step(&c, &mut psi, false);
    }
    Ok(g)
}

/// Parametrization of one optimized field.
#[derive(Clone, Copy)]
enum Param {
    Phase,
    Bounded(crate::fields::Bounds),
}

impl Param {
    fn range(&self) -> f64 {
        match self {
            Param::Phase => std::f64::consts::TAU,
            Param::Bounded(_) => 2.0,
        }
    }
}

pub fn krotov_iterate(
    model: &HamiltonianModel,
    guess: &[ControlField],
    targets: &TargetStateSet,
    opts: &KrotovOptions,
) -> Result<OptimizationResult> {
    opts.validate(guess.len())?;
    for f in guess {
        f.validate()?;
    }
    if targets.initial.first().map(Vec::len) != Some(model.dim()) {
        return Err(QslError::Dimension("targets do not match the model".into()));
    }
    let mut fields = guess.to_vec();
    let prop = Propagator::new(model, &fields)?;
    let grid = *prop.grid();
    let n = grid.n_steps();
    let dt = grid.dt();
    let shape = make_shape(&grid, opts.ramp_fraction)?;

    let optimized: Vec<(usize, Param)> = fields
        .iter()
        .enumerate()
        .filter(|(_, f)| !f.frozen)
        .map(|(k, f)| (k, f.bounds.map_or(Param::Phase, Param::Bounded)))
        .collect();
    // Unconstrained parameter per optimized field and step.
    let mut params: Vec<Vec<f64>> = optimized
        .iter()
        .map(|&(k, p)| {
            let f = &fields[k];
            f.values
                .iter()
                .enumerate()
                .map(|(j, &v)| match p {
                    Param::Phase => Ok(v),
                    Param::Bounded(b) if f.is_active(j) => field_to_unbounded(v, b),
                    Param::Bounded(_) => Ok(0.0),
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let top = model.top_level_indices();
    let top_population = |states: &[Vec<C64>]| -> f64 {
        states
            .iter()
            .map(|s| top.iter().map(|&i| s[i].norm_sqr()).sum::<f64>())
            .fold(0.0, f64::max)
    };

    let mut psi = targets.initial.clone();
    let mut max_top = top_population(&psi);
    for j in 0..n {
        prop.step(&controls_at(&fields, j), &mut psi, false);
        max_top = max_top.max(top_population(&psi));
    }
    let eps0 = gate_error(&psi, targets)?;
    let mut result = OptimizationResult {
        fields: Vec::new(),
        error_trace: vec![eps0],
        j_trace: vec![eps0],
        cost_trace: vec![0.0],
        converged: eps0 <= opts.epsilon_max,
        iterations: 0,
        lambda: opts.lambda.clone().unwrap_or_else(|| vec![1.0; fields.len()]),
        max_top_level_population: max_top,
        monotonic: true,
        rejected_updates: 0,
    };
    if result.converged || optimized.is_empty() {
        result.fields = fields;
        return Ok(result);
    }

    for iteration in 1..=opts.max_iterations {
        let chi = backward_costates(&prop, &fields, targets);

        // Gradient of every optimized parameter along the guess trajectory.
        let gradient_at = |fields: &[ControlField], params: &[Vec<f64>], j: usize, psi: &[Vec<C64>]| -> Vec<f64> {
            let c = controls_at(fields, j);
            optimized
                .iter()
                .zip(params)
                .map(|(&(k, p), u)| {
                    if !fields[k].is_active(j) {
                        return 0.0;
                    }
                    let g: f64 = psi
                        .iter()
                        .zip(&chi[j])
                        .map(|(s, x)| model.derivative_sandwich(k, &c, x, s).im)
                        .sum();
                    match p {
                        Param::Phase => g,
                        Param::Bounded(b) => g * unbounded_derivative(u[j], b),
                    }
                })
                .collect()
        };

        if iteration == 1 && opts.lambda.is_none() {
            let mut peak = vec![0.0f64; optimized.len()];
            let mut s = targets.initial.clone();
            for j in 0..n {
                for (m, g) in gradient_at(&fields, &params, j, &s).into_iter().enumerate() {
                    peak[m] = peak[m].max((shape.values[j] * g).abs());
                }
                prop.step(&controls_at(&fields, j), &mut s, false);
            }
            for (m, &(k, p)) in optimized.iter().enumerate() {
                let target = opts.lambda_fraction * p.range();
                result.lambda[k] = if peak[m] > 0.0 { peak[m] / target } else { 1.0 };
            }
        }

        let mut psi = targets.initial.clone();
        let mut max_top = top_population(&psi);
        let mut total_cost = 0.0;
        for j in 0..n {
            let g = gradient_at(&fields, &params, j, &psi);
            let s = shape.values[j];
            let base_overlap: C64 = psi.iter().zip(&chi[j]).map(|(p, x)| inner(x, p)).sum();
            let full_cost: f64 = optimized
                .iter()
                .zip(&g)
                .map(|(&(k, _), gk)| s / result.lambda[k] * gk * gk * dt)
                .sum();
            let mut factor = 1.0;
            let mut halvings = 0;
            loop {
                let mut c = controls_at(&fields, j);
                let mut trial = Vec::with_capacity(optimized.len());
                for (m, &(k, p)) in optimized.iter().enumerate() {
                    let u = params[m][j] + factor * s / result.lambda[k] * g[m];
                    trial.push(u);
                    if fields[k].is_active(j) {
                        c[k] = match p {
                            Param::Phase => u,
                            Param::Bounded(b) => unbounded_to_field(u, b),
                        };
                    }
                }
                let mut next = psi.clone();
                prop.step(&c, &mut next, false);
                let overlap: C64 = next.iter().zip(&chi[j + 1]).map(|(p, x)| inner(x, p)).sum();
                let gain = 2.0 * (overlap - base_overlap).re;
                let cost = factor * factor * full_cost;
                if gain >= cost || factor == 0.0 {
                    for (m, &(k, _)) in optimized.iter().enumerate() {
                        if fields[k].is_active(j) {
                            params[m][j] = trial[m];
                            fields[k].values[j] = c[k];
                        }
                    }
                    total_cost += cost;
                    psi = next;
                    break;
                }
                result.rejected_updates += 1;
                halvings += 1;
                factor = if halvings > opts.max_halvings {
                    0.0
                } else {
                    factor * 0.5
                };
            }
            max_top = max_top.max(top_population(&psi));
        }
        let new_eps = gate_error(&psi, targets)?;
        let j_value = new_eps + total_cost;
        if j_value > *result.j_trace.last().expect("nonempty") + opts.stall_tolerance {
            result.monotonic = false;
        }
        result.error_trace.push(new_eps);
        result.j_trace.push(j_value);
        result.cost_trace.push(total_cost);
        result.iterations = iteration;
        result.max_top_level_population = max_top;
        if new_eps <= opts.epsilon_max {
            result.converged = true;
            break;
        }
    }
    result.fields = fields;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::RandomFieldSpec;
    use crate::fields::{Bounds, FieldRole, TimeGrid};
    use crate::gates::{embed_targets, make_gate, GateName};
    use crate::models::{
        build_atom_model, AtomArrayConfig, ControlTerm, Coupling, FieldConfiguration, Platform, SparseOp,
    };

    fn basis(dim: usize, i: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[i] = C64::new(1.0, 0.0);
        v
    }

    fn single_target(tau: Vec<C64>, psi: Vec<C64>) -> TargetStateSet {
        TargetStateSet {
            initial: vec![psi],
            targets: vec![tau],
        }
    }

    #[test]
    fn error_examples() {
        let t = single_target(basis(2, 0), basis(2, 0));
        assert!(gate_error(&[basis(2, 0)], &t).unwrap().abs() < 1e-12);
        assert!((gate_error(&[basis(2, 1)], &t).unwrap() - 1.0).abs() < 1e-12);
        let minus: Vec<C64> = basis(2, 0).into_iter().map(|z| -z).collect();
        assert!((gate_error(&[minus], &t).unwrap() - 2.0).abs() < 1e-12);
        assert!(gate_error(&[], &t).is_err());
    }

    #[test]
    fn costate_norms() {
        let grid = TimeGrid::new(0.0, 100.0, 10).unwrap();
        let (m2, _) = build_atom_model(
            &AtomArrayConfig::standard(2).unwrap(),
            FieldConfiguration::AtomsPhase,
            &grid,
        )
        .unwrap();
        let (m4, _) = build_atom_model(
            &AtomArrayConfig::standard(4).unwrap(),
            FieldConfiguration::AtomsPhase,
            &grid,
        )
        .unwrap();
        let cz = embed_targets(&make_gate(GateName::Cz, None, false).unwrap(), &m2).unwrap();
        let zzzz = embed_targets(&make_gate(GateName::Zzzz, Some(0.5), true).unwrap(), &m4).unwrap();
        for (chi, tau) in costate_boundary(&cz).iter().zip(&cz.targets) {
            assert!((crate::dynamics::norm(chi) - 0.125).abs() < 1e-15);
            assert!((inner(tau, chi).re - 0.125).abs() < 1e-15);
        }
        for chi in costate_boundary(&zzzz) {
            assert!((crate::dynamics::norm(&chi) - 0.125 / 4.0).abs() < 1e-15);
        }
    }

    /// Two-level system with `H = E_x(t) sigma_x / 2 + E_z(t) sigma_z / 2`.
    fn qubit() -> HamiltonianModel {
        let mut x = SparseOp::new();
        x.push(0, 1, C64::new(0.5, 0.0));
        x.push(1, 0, C64::new(0.5, 0.0));
        let mut z = SparseOp::new();
        z.push(0, 0, C64::new(0.5, 0.0));
        z.push(1, 1, C64::new(-0.5, 0.0));
        let terms = vec![
            ControlTerm {
                coupling: Coupling::Linear { field: 0 },
                op: x,
            },
            ControlTerm {
                coupling: Coupling::Linear { field: 1 },
                op: z,
            },
        ];
        HamiltonianModel::new(Platform::Custom, 1, 2, &["0", "1"], SparseOp::new(), terms, 2).unwrap()
    }

    fn qubit_fields(grid: TimeGrid) -> Vec<ControlField> {
        vec![
            ControlField::from_fn(
                "x",
                FieldRole::Detuning,
                grid,
                Some(Bounds::new(-2.0, 2.0).unwrap()),
                |t| 0.3 + 0.2 * (0.9 * t).sin(),
            )
            .unwrap(),
            ControlField::from_fn("z", FieldRole::LaserPhase, grid, None, |t| 0.1 * t.cos()).unwrap(),
        ]
    }

    /// `exp(-i pi/4 sigma_x)`; reachable with traceless Hamiltonians.
    fn rx_targets() -> TargetStateSet {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        TargetStateSet {
            initial: vec![basis(2, 0), basis(2, 1)],
            targets: vec![
                vec![C64::new(s, 0.0), C64::new(0.0, -s)],
                vec![C64::new(0.0, -s), C64::new(s, 0.0)],
            ],
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let grid = TimeGrid::new(0.0, 6.0, 600).unwrap();
        let model = qubit();
        let fields = qubit_fields(grid);
        let targets = rx_targets();
        let g = gradient_profile(&model, &fields, &targets).unwrap();
        let dt = grid.dt();
        for k in 0..2 {
            for j in [17, 300, 577] {
                let h = 1e-4;
                let mut p = fields.clone();
                p[k].values[j] += h;
                let mut m = fields.clone();
                m[k].values[j] -= h;
                let fd = (evaluate_error(&model, &p, &targets).unwrap()
                    - evaluate_error(&model, &m, &targets).unwrap())
                    / (2.0 * h);
                let predicted = -2.0 * dt * g[k][j];
                assert!(
                    (fd - predicted).abs() <= 0.01 * fd.abs(),
                    "field {k} step {j}: fd {fd}, predicted {predicted}"
                );
            }
        }
    }

    #[test]
    fn large_lambda_decreases_error() {
        let grid = TimeGrid::new(0.0, 6.0, 200).unwrap();
        let model = qubit();
        let fields = qubit_fields(grid);
        let targets = rx_targets();
        let opts = KrotovOptions {
            lambda: Some(vec![1e3, 1e3]),
            max_iterations: 1,
            ..Default::default()
        };
        let r = krotov_iterate(&model, &fields, &targets, &opts).unwrap();
        assert!(r.error_trace[1] < r.error_trace[0]);
        assert_eq!(r.rejected_updates, 0);
    }

    #[test]
    fn converged_guess_is_returned_unchanged() {
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let model = qubit();
        let fields = vec![
            ControlField::constant(
                "x",
                FieldRole::Detuning,
                grid,
                0.0,
                Some(Bounds::new(-2.0, 2.0).unwrap()),
            )
            .unwrap(),
            ControlField::constant("z", FieldRole::LaserPhase, grid, 0.0, None).unwrap(),
        ];
        let targets = TargetStateSet {
            initial: vec![basis(2, 0), basis(2, 1)],
            targets: vec![basis(2, 0), basis(2, 1)],
        };
        let r = krotov_iterate(&model, &fields, &targets, &KrotovOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.fields, fields);
    }

    #[test]
    fn qubit_optimization_converges_monotonically() {
        let grid = TimeGrid::new(0.0, 6.0, 200).unwrap();
        let model = qubit();
        let r = krotov_iterate(&model, &qubit_fields(grid), &rx_targets(), &KrotovOptions::default()).unwrap();
        assert!(r.converged, "final error {}", r.final_error());
        assert!(r.monotonic);
        for w in r.j_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-10);
        }
        for w in r.error_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-10);
        }
    }

    #[test]
    fn frozen_fields_stay_put() {
        let grid = TimeGrid::new(0.0, 300.0, 300).unwrap();
        let cfg = AtomArrayConfig::standard(2).unwrap();
        let (model, mut fields) = build_atom_model(&cfg, FieldConfiguration::AtomsPhase, &grid).unwrap();
        for (i, f) in fields.iter_mut().enumerate().filter(|(_, f)| !f.frozen) {
            f.randomize(&RandomFieldSpec {
                m_min: 1,
                m_max: 20,
                seed: i as u64,
                scale: std::f64::consts::PI,
            })
            .unwrap();
        }
        let targets = embed_targets(&make_gate(GateName::Cz, None, false).unwrap(), &model).unwrap();
        let opts = KrotovOptions {
            max_iterations: 3,
            ..Default::default()
        };
        let r = krotov_iterate(&model, &fields, &targets, &opts).unwrap();
        for (a, b) in r.fields.iter().zip(&fields) {
            if a.frozen {
                assert_eq!(a.values, b.values);
            }
        }
        let (new, old) = r.fields.iter().zip(&fields).find(|(f, _)| !f.frozen).unwrap();
        let change: Vec<f64> = new.values.iter().zip(&old.values).map(|(a, b)| (a - b).abs()).collect();
        let peak = change.iter().cloned().fold(0.0, f64::max);
        assert!(peak > 0.0);
        assert!(change[0] < 0.01 * peak && change[299] < 0.01 * peak);
        assert!(r.error_trace[3] < r.error_trace[0]);
    }
}
