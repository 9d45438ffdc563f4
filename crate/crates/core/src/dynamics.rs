//! Piecewise-constant propagation: every grid interval applies the exact
//! exponential `exp(-i H(t_mid) dt)`, computed block by block from a
//! Hermitian eigendecomposition.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{QslError, Result};
use crate::fields::{ControlField, TimeGrid};
use crate::models::HamiltonianModel;
use crate::C64;

/// States at every grid boundary (`n_steps + 1` entries, index = boundary).
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<Vec<C64>>,
    /// Largest deviation of a stored state's norm from the initial norm.
    pub norm_drift: f64,
}

impl Trajectory {
    pub fn first(&self) -> &[C64] {
        &self.states[0]
    }

    pub fn last(&self) -> &[C64] {
        self.states.last().expect("trajectory holds at least one state")
    }
}

pub fn norm(psi: &[C64]) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `<a|b>`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Control values of every field in step `j`.
pub fn controls_at(fields: &[ControlField], j: usize) -> Vec<f64> {
    fields.iter().map(|f| f.values[j]).collect()
}

fn block_exponential(h: &DMatrix<C64>, dt: f64, backward: bool) -> DMatrix<C64> {
    let n = h.nrows();
    let sign = if backward { 1.0 } else { -1.0 };
    if n == 1 {
        return DMatrix::from_element(1, 1, C64::from_polar(1.0, sign * h[(0, 0)].re * dt));
    }
    let eig = SymmetricEigen::new(h.clone());
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let phase = C64::from_polar(1.0, sign * lambda * dt);
        for r in 0..n {
            scaled[(r, k)] *= phase;
        }
    }
    scaled * v.adjoint()
}

/// Step propagator for one model and one set of fields.
///
/// Blocks whose terms only involve frozen, time-independent fields are
/// exponentiated once and reused.
pub struct Propagator<'m> {
    model: &'m HamiltonianModel,
    grid: TimeGrid,
    cached: Vec<Option<(DMatrix<C64>, DMatrix<C64>)>>,
}

impl<'m> Propagator<'m> {
    pub fn new(model: &'m HamiltonianModel, fields: &[ControlField]) -> Result<Self> {
        if fields.len() != model.n_fields() {
            return Err(QslError::Dimension(format!(
                "model expects {} fields, got {}",
                model.n_fields(),
                fields.len()
            )));
        }
        let grid = fields
            .first()
            .map(|f| f.grid)
            .ok_or_else(|| QslError::config("at least one control field is required"))?;
        for f in fields {
            if f.grid != grid {
                return Err(QslError::config(format!("field '{}' is on a different grid", f.name)));
            }
            if let Some(j) = f.values.iter().position(|v| !v.is_finite()) {
                return Err(QslError::Numeric(format!(
                    "field '{}' is not finite at step {j}",
                    f.name
                )));
            }
        }
        Self::with_grid(model, fields, grid)
    }

    /// Propagator for a model without control fields.
    pub fn drift_only(model: &'m HamiltonianModel, grid: TimeGrid) -> Result<Self> {
        if model.n_fields() != 0 {
            return Err(QslError::Dimension("model expects control fields".into()));
        }
        Self::with_grid(model, &[], grid)
    }

    fn with_grid(model: &'m HamiltonianModel, fields: &[ControlField], grid: TimeGrid) -> Result<Self> {
        let constant: Vec<bool> = fields
            .iter()
            .map(|f| f.frozen && f.window.is_none() && f.values.iter().all(|&v| v == f.values[0]))
            .collect();
        let c0 = if grid.n_steps() > 0 {
            controls_at(fields, 0)
        } else {
            vec![]
        };
        let cached = model
            .blocks()
            .iter()
            .enumerate()
            .map(|(b, block)| {
                let is_static = block
                    .term_ids()
                    .all(|t| model.terms()[t].coupling.fields().all(|f| constant[f]));
                is_static.then(|| {
                    let h = model.block_hamiltonian(b, &c0);
                    (
                        block_exponential(&h, grid.dt(), false),
                        block_exponential(&h, grid.dt(), true),
                    )
                })
            })
            .collect();
        Ok(Self { model, grid, cached })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn model(&self) -> &HamiltonianModel {
        self.model
    }

    /// Apply one step (`exp(-i H dt)`, or its adjoint when `backward`) to
    /// every state, skipping blocks where all states vanish.
    pub fn step(&self, controls: &[f64], states: &mut [Vec<C64>], backward: bool) {
        for (b, block) in self.model.blocks().iter().enumerate() {
            let idx = &block.indices;
            let occupied = states.iter().any(|s| idx.iter().any(|&i| s[i] != C64::new(0.0, 0.0)));
            if !occupied {
                continue;
            }
            let fresh;
            let u = match &self.cached[b] {
                Some((fwd, bwd)) => {
                    if backward {
                        bwd
                    } else {
                        fwd
                    }
                }
                None => {
                    fresh = block_exponential(&self.model.block_hamiltonian(b, controls), self.grid.dt(), backward);
                    &fresh
                }
            };
            apply_block(u, idx, states);
        }
    }

    /// Apply the exponential for a fraction of one step (never cached).
    pub fn partial_step(&self, controls: &[f64], states: &mut [Vec<C64>], backward: bool, fraction: f64) {
        let dt = fraction * self.grid.dt();
        for (b, block) in self.model.blocks().iter().enumerate() {
            let u = block_exponential(&self.model.block_hamiltonian(b, controls), dt, backward);
            apply_block(&u, &block.indices, states);
        }
    }

    /// Full step unitary for the given controls (dense; for tests and small
    /// models).
    pub fn step_unitary(&self, controls: &[f64], backward: bool) -> DMatrix<C64> {
        let dim = self.model.dim();
        let mut u = DMatrix::zeros(dim, dim);
        for (b, block) in self.model.blocks().iter().enumerate() {
            let ub = match &self.cached[b] {
                Some((fwd, bwd)) => {
                    if backward {
                        bwd.clone()
                    } else {
                        fwd.clone()
                    }
                }
                None => block_exponential(&self.model.block_hamiltonian(b, controls), self.grid.dt(), backward),
            };
            for (r, &i) in block.indices.iter().enumerate() {
                for (c, &k) in block.indices.iter().enumerate() {
                    u[(i, k)] = ub[(r, c)];
                }
            }
        }
        u
    }
}

fn apply_block(u: &DMatrix<C64>, idx: &[usize], states: &mut [Vec<C64>]) {
    let n = idx.len();
    if n == 1 {
        let z = u[(0, 0)];
        for s in states.iter_mut() {
            s[idx[0]] *= z;
        }
        return;
    }
    let mut local = vec![C64::new(0.0, 0.0); n];
    for s in states.iter_mut() {
        for (k, &i) in idx.iter().enumerate() {
            local[k] = s[i];
        }
        for (r, &i) in idx.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (c, x) in local.iter().enumerate() {
                acc += u[(r, c)] * x;
            }
            s[i] = acc;
        }
    }
}

fn check_state(model: &HamiltonianModel, psi: &[C64]) -> Result<()> {
    if psi.len() != model.dim() {
        return Err(QslError::Dimension(format!(
            "state has length {}, model dimension is {}",
            psi.len(),
            model.dim()
        )));
    }
    if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(QslError::Numeric("state is not finite".into()));
    }
    Ok(())
}

fn record(prop: &Propagator, fields: &[ControlField], start: &[C64], backward: bool) -> Trajectory {
    let n = prop.grid().n_steps();
    let n0 = norm(start);
    let mut states = vec![Vec::new(); n + 1];
    let mut current = vec![start.to_vec()];
    let mut drift: f64 = 0.0;
    let order: Box<dyn Iterator<Item = usize>> = if backward {
        Box::new((0..n).rev())
    } else {
        Box::new(0..n)
    };
    states[if backward { n } else { 0 }] = start.to_vec();
    for j in order {
        prop.step(&controls_at(fields, j), &mut current, backward);
        drift = drift.max((norm(&current[0]) - n0).abs());
        states[if backward { j } else { j + 1 }] = current[0].clone();
    }
    Trajectory {
        states,
        norm_drift: drift,
    }
}

/// Forward propagation from `psi0` at `t0`; the trajectory holds the state at
/// every grid boundary.
pub fn propagate_forward(model: &HamiltonianModel, fields: &[ControlField], psi0: &[C64]) -> Result<Trajectory> {
    check_state(model, psi0)?;
    let prop = Propagator::new(model, fields)?;
    Ok(record(&prop, fields, psi0, false))
}

/// Adjoint propagation of `chi_t` from `t1` back to `t0`.
pub fn propagate_backward(model: &HamiltonianModel, fields: &[ControlField], chi_t: &[C64]) -> Result<Trajectory> {
    check_state(model, chi_t)?;
    let prop = Propagator::new(model, fields)?;
    Ok(record(&prop, fields, chi_t, true))
}

/// Final states only, for many initial states at once.
pub fn propagate_final(
    model: &HamiltonianModel,
    fields: &[ControlField],
    initial: &[Vec<C64>],
) -> Result<Vec<Vec<C64>>> {
    for psi in initial {
        check_state(model, psi)?;
    }
    let prop = Propagator::new(model, fields)?;
    let mut states = initial.to_vec();
    for j in 0..prop.grid().n_steps() {
        prop.step(&controls_at(fields, j), &mut states, false);
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Bounds, FieldRole};
    use crate::models::{ControlTerm, Coupling, Platform, SparseOp};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// Single atom with levels (d, u, r), drift-free, one Rabi field on u-r.
    fn rabi_atom() -> HamiltonianModel {
        let mut op = SparseOp::new();
        op.push(2, 1, C64::new(1.0, 0.0));
        let terms = vec![ControlTerm {
            coupling: Coupling::Polar {
                amplitude: 0,
                phase: None,
            },
            op,
        }];
        HamiltonianModel::new(Platform::Custom, 1, 3, &["d", "u", "r"], SparseOp::new(), terms, 1).unwrap()
    }

    /// Two qutrits with random Hermitian drift and two random linear terms.
    fn random_model(rng: &mut ChaCha8Rng) -> HamiltonianModel {
        let dim = 9;
        let mut rand_herm = || {
            let mut op = SparseOp::new();
            for r in 0..dim {
                op.push(r, r, C64::new(rng.gen_range(-1.0..1.0), 0.0));
                for c in r + 1..dim {
                    let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    op.push(r, c, z);
                    op.push(c, r, z.conj());
                }
            }
            op
        };
        let drift = rand_herm();
        let terms = vec![
            ControlTerm {
                coupling: Coupling::Linear { field: 0 },
                op: rand_herm(),
            },
            ControlTerm {
                coupling: Coupling::Linear { field: 1 },
                op: rand_herm(),
            },
        ];
        HamiltonianModel::new(Platform::Custom, 2, 3, &["0", "1", "2"], drift, terms, 2).unwrap()
    }

    fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> Vec<C64> {
        let v: Vec<C64> = (0..dim)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let n = norm(&v);
        v.into_iter().map(|z| z / n).collect()
    }

    fn smooth_fields(grid: TimeGrid) -> Vec<ControlField> {
        vec![
            ControlField::from_fn("a", FieldRole::Detuning, grid, None, |t| (0.7 * t).sin()).unwrap(),
            ControlField::from_fn("b", FieldRole::Detuning, grid, None, |t| 0.3 * (1.3 * t).cos() + 0.1).unwrap(),
        ]
    }

    fn distance(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn rabi_pi_pulse() {
        let model = rabi_atom();
        let omega = 2.0 * PI * 4e-3;
        let grid = TimeGrid::new(0.0, PI / omega, 250).unwrap();
        let f = ControlField::constant(
            "omega",
            FieldRole::RabiAmplitude,
            grid,
            omega,
            Some(Bounds::new(0.0, 1.0).unwrap()),
        )
        .unwrap();
        let mut psi0 = vec![C64::new(0.0, 0.0); 3];
        psi0[1] = C64::new(1.0, 0.0);
        let traj = propagate_forward(&model, &[f], &psi0).unwrap();
        assert!((traj.last()[2].norm_sqr() - 1.0).abs() < 1e-8);
        assert!(traj.states.iter().all(|s| (norm(s) - 1.0).abs() < 1e-10));
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let model = HamiltonianModel::new(Platform::Custom, 1, 2, &["0", "1"], SparseOp::new(), vec![], 0).unwrap();
        let grid = TimeGrid::new(0.0, 10.0, 7).unwrap();
        let prop = Propagator::drift_only(&model, grid).unwrap();
        let mut s = vec![vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]];
        prop.step(&[], &mut s, false);
        assert_eq!(s[0], vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
    }

    #[test]
    fn unitarity_over_many_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = random_model(&mut rng);
        let grid = TimeGrid::new(0.0, 50.0, 1000).unwrap();
        let psi = random_state(&mut rng, 9);
        let traj = propagate_forward(&model, &smooth_fields(grid), &psi).unwrap();
        assert!(traj.norm_drift < 1e-9, "drift {}", traj.norm_drift);
    }

    #[test]
    fn backward_inverts_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let model = random_model(&mut rng);
        let grid = TimeGrid::new(0.0, 5.0, 100).unwrap();
        let fields = smooth_fields(grid);
        let chi = random_state(&mut rng, 9);
        let back = propagate_backward(&model, &fields, &chi).unwrap();
        let fwd = propagate_forward(&model, &fields, back.first()).unwrap();
        assert!(distance(fwd.last(), &chi) < 1e-9);
    }

    #[test]
    fn single_step_backward_is_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let model = random_model(&mut rng);
        let grid = TimeGrid::new(0.0, 0.4, 1).unwrap();
        let fields = smooth_fields(grid);
        let prop = Propagator::new(&model, &fields).unwrap();
        let c = controls_at(&fields, 0);
        let u = prop.step_unitary(&c, false);
        let chi = random_state(&mut rng, 9);
        let back = propagate_backward(&model, &fields, &chi).unwrap();
        let expected = u.adjoint() * nalgebra::DVector::from_vec(chi);
        assert!(distance(back.first(), expected.as_slice()) < 1e-12);
    }

    #[test]
    fn time_independent_matches_exact_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let model = random_model(&mut rng);
        let psi = random_state(&mut rng, 9);
        let (a, b) = (0.4, -0.2);
        let t = 3.0;
        let h = model.hamiltonian(&[a, b]);
        let exact = (h * C64::new(0.0, -t)).exp() * nalgebra::DVector::from_vec(psi.clone());
        for n in [1, 7, 64] {
            let grid = TimeGrid::new(0.0, t, n).unwrap();
            let fields = vec![
                ControlField::constant("a", FieldRole::Detuning, grid, a, None).unwrap(),
                ControlField::constant("b", FieldRole::Detuning, grid, b, None).unwrap(),
            ];
            let out = propagate_final(&model, &fields, &[psi.clone()]).unwrap();
            assert!(distance(&out[0], exact.as_slice()) < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn step_halving_is_second_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let model = random_model(&mut rng);
        let psi = random_state(&mut rng, 9);
        let finals: Vec<Vec<C64>> = [50, 100, 200]
            .iter()
            .map(|&n| {
                let grid = TimeGrid::new(0.0, 5.0, n).unwrap();
                propagate_final(&model, &smooth_fields(grid), &[psi.clone()])
                    .unwrap()
                    .remove(0)
            })
            .collect();
        let ratio = distance(&finals[0], &finals[1]) / distance(&finals[1], &finals[2]);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn cached_blocks_match_fresh_exponentials() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let model = random_model(&mut rng);
        let grid = TimeGrid::new(0.0, 2.0, 20).unwrap();
        let frozen = vec![
            ControlField::constant("a", FieldRole::Detuning, grid, 0.3, None)
                .unwrap()
                .frozen(),
            ControlField::constant("b", FieldRole::Detuning, grid, 0.5, None)
                .unwrap()
                .frozen(),
        ];
        let live = vec![
            ControlField::constant("a", FieldRole::Detuning, grid, 0.3, None).unwrap(),
            ControlField::constant("b", FieldRole::Detuning, grid, 0.5, None).unwrap(),
        ];
        let psi = random_state(&mut rng, 9);
        let x = propagate_final(&model, &frozen, &[psi.clone()]).unwrap();
        let y = propagate_final(&model, &live, &[psi]).unwrap();
        assert!(distance(&x[0], &y[0]) < 1e-12);
    }

    #[test]
    fn rejects_non_finite_fields() {
        let model = rabi_atom();
        let grid = TimeGrid::new(0.0, 1.0, 2).unwrap();
        let mut f = ControlField::constant("omega", FieldRole::RabiAmplitude, grid, 0.1, None).unwrap();
        f.values[1] = f64::NAN;
        let psi = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        assert!(matches!(
            propagate_forward(&model, &[f], &psi),
            Err(QslError::Numeric(_))
        ));
    }
}
