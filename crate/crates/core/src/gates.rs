//! Target gates, their embedding into a model's physical basis, and the
//! Monte Carlo entangling power.

use std::fmt;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QslError, Result};
use crate::models::HamiltonianModel;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateName {
    Cz,
    Cnot,
    Swap,
    Zzz,
    Zzzz,
}

impl GateName {
    pub fn n_qubits(&self) -> usize {
        match self {
            GateName::Cz | GateName::Cnot | GateName::Swap => 2,
            GateName::Zzz => 3,
            GateName::Zzzz => 4,
        }
    }

    pub fn takes_gamma(&self) -> bool {
        matches!(self, GateName::Zzz | GateName::Zzzz)
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "CZ" => GateName::Cz,
            "CNOT" => GateName::Cnot,
            "SWAP" => GateName::Swap,
            "ZZZ" => GateName::Zzz,
            "ZZZZ" => GateName::Zzzz,
            _ => return Err(QslError::config(format!("unknown gate '{s}'"))),
        })
    }
}

impl fmt::Display for GateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateName::Cz => "CZ",
            GateName::Cnot => "CNOT",
            GateName::Swap => "SWAP",
            GateName::Zzz => "ZZZ",
            GateName::Zzzz => "ZZZZ",
        })
    }
}

/// A logical target gate; qubit 0 is the most significant bit and the
/// logical state `0` corresponds to the lower level of each site.
#[derive(Clone, Debug, PartialEq)]
pub struct GateTarget {
    pub name: GateName,
    pub gamma: Option<f64>,
    pub phase_shifted: bool,
    pub matrix: DMatrix<C64>,
}

impl GateTarget {
    pub fn n_qubits(&self) -> usize {
        self.name.n_qubits()
    }

    pub fn label(&self) -> String {
        match self.gamma {
            Some(g) => format!("{}({g})", self.name),
            None => self.name.to_string(),
        }
    }
}

/// `exp(-i gamma Z...Z)` with `Z|0> = |0>`, optionally multiplied by the
/// global phase that leaves `|0...0>` untouched.
fn parity_phase_gate(n: usize, gamma: f64, phase_shifted: bool) -> DMatrix<C64> {
    let dim = 1 << n;
    let shift = if phase_shifted {
        C64::from_polar(1.0, gamma)
    } else {
        C64::new(1.0, 0.0)
    };
    let mut m = DMatrix::zeros(dim, dim);
    for q in 0..dim {
        let z = if q.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        m[(q, q)] = shift * C64::from_polar(1.0, -gamma * z);
    }
    m
}

pub fn make_gate(name: GateName, gamma: Option<f64>, phase_shifted: bool) -> Result<GateTarget> {
    if name.takes_gamma() != gamma.is_some() {
        return Err(QslError::config(if name.takes_gamma() {
            format!("gate {name} requires gamma")
        } else {
            format!("gate {name} takes no gamma")
        }));
    }
    if phase_shifted && !name.takes_gamma() {
        return Err(QslError::config(format!("gate {name} has no phase-shifted form")));
    }
    if let Some(g) = gamma {
        if !g.is_finite() {
            return Err(QslError::config("gamma must be finite"));
        }
    }
    let one = C64::new(1.0, 0.0);
    let matrix = match name {
        GateName::Cz => DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![one, one, one, -one])),
        GateName::Cnot => {
            let mut m = DMatrix::zeros(4, 4);
            for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
                m[(r, c)] = one;
            }
            m
        }
        GateName::Swap => {
            let mut m = DMatrix::zeros(4, 4);
            for (r, c) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
                m[(r, c)] = one;
            }
            m
        }
        GateName::Zzz | GateName::Zzzz => {
            parity_phase_gate(name.n_qubits(), gamma.expect("checked above"), phase_shifted)
        }
    };
    Ok(GateTarget {
        name,
        gamma,
        phase_shifted,
        matrix,
    })
}

/// Initial logical basis states and their images under the gate, in the
/// model's physical basis.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetStateSet {
    pub initial: Vec<Vec<C64>>,
    pub targets: Vec<Vec<C64>>,
}

impl TargetStateSet {
    pub fn len(&self) -> usize {
        self.initial.len()
    }

    pub fn is_empty(&self) -> bool {
        self.initial.is_empty()
    }
}

pub fn embed_targets(gate: &GateTarget, model: &HamiltonianModel) -> Result<TargetStateSet> {
    let q = gate.n_qubits();
    if model.n_qubits() != q {
        return Err(QslError::Dimension(format!(
            "gate {} acts on {q} qubits, model has {}",
            gate.label(),
            model.n_qubits()
        )));
    }
    let dim = model.dim();
    let n = 1 << q;
    let mut initial = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for l in 0..n {
        let mut psi = vec![C64::new(0.0, 0.0); dim];
        psi[model.logical_index(l)] = C64::new(1.0, 0.0);
        initial.push(psi);
        let mut tau = vec![C64::new(0.0, 0.0); dim];
        for m in 0..n {
            tau[model.logical_index(m)] = gate.matrix[(m, l)];
        }
        targets.push(tau);
    }
    Ok(TargetStateSet { initial, targets })
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EntanglingPower {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

const CHUNK: usize = 1024;

fn random_qubit(rng: &mut ChaCha8Rng) -> [C64; 2] {
    let mut g = || -> f64 { StandardNormal.sample(rng) };
    let (a, b) = (C64::new(g(), g()), C64::new(g(), g()));
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    [a / n, b / n]
}

/// Mean over qubits of the linear entropy `1 - tr rho_k^2`.
pub fn mean_linear_entropy(psi: &[C64], n_qubits: usize) -> f64 {
    let mut total = 0.0;
    for k in 0..n_qubits {
        let bit = 1 << (n_qubits - 1 - k);
        let (mut r00, mut r11, mut r01) = (0.0, 0.0, C64::new(0.0, 0.0));
        for (i, z) in psi.iter().enumerate() {
            if i & bit == 0 {
                let w = psi[i | bit];
                r00 += z.norm_sqr();
                r11 += w.norm_sqr();
                r01 += z * w.conj();
            }
        }
        // 1 - tr rho^2 = 2 det rho / (tr rho)^2, free of the 1 - (~1) cancellation
        let tr = r00 + r11;
        total += 2.0 * (r00 * r11 - r01.norm_sqr()) / (tr * tr);
    }
    total / n_qubits as f64
}

/// Entangling power of `u` on `n_qubits` qubits: average single-qubit linear
/// entropy of `u|product>` over Haar-random product inputs.
///
/// Samples are drawn in chunks of 1024, each from its own stream of the
/// seeded generator, so the estimate does not depend on the thread count.
pub fn entangling_power_of(u: &DMatrix<C64>, n_qubits: usize, n_samples: usize, seed: u64) -> Result<EntanglingPower> {
    let dim = 1 << n_qubits;
    if u.nrows() != dim || u.ncols() != dim {
        return Err(QslError::Dimension(format!("expected a {dim}x{dim} unitary")));
    }
    if n_samples == 0 {
        return Err(QslError::config("n_samples must be at least 1"));
    }
    let n_chunks = n_samples.div_ceil(CHUNK);
    let sums: Vec<(f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(n_samples - c * CHUNK);
            let mut s = (0.0, 0.0);
            let mut psi = vec![C64::new(0.0, 0.0); dim];
            for _ in 0..count {
                psi.iter_mut().for_each(|z| *z = C64::new(1.0, 0.0));
                for k in 0..n_qubits {
                    let v = random_qubit(&mut rng);
                    let bit = 1 << (n_qubits - 1 - k);
                    for (i, z) in psi.iter_mut().enumerate() {
                        *z *= v[usize::from(i & bit != 0)];
                    }
                }
                let out = u * nalgebra::DVector::from_column_slice(&psi);
                let e = mean_linear_entropy(out.as_slice(), n_qubits);
                s.0 += e;
                s.1 += e * e;
            }
            s
        })
        .collect();
    let (sum, sum_sq) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = n_samples as f64;
    let mean = sum / n;
    let var = if n_samples > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(EntanglingPower {
        mean,
        std_error: (var / n).sqrt(),
        n_samples,
    })
}

pub fn entangling_power(gate: &GateTarget, n_samples: usize, seed: u64) -> Result<EntanglingPower> {
    entangling_power_of(&gate.matrix, gate.n_qubits(), n_samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::TimeGrid;
    use crate::models::{
        build_atom_model, build_transmon_model, AtomArrayConfig, FieldConfiguration, TransmonPlaquetteConfig,
    };
    use std::f64::consts::PI;

    fn unitarity_error(m: &DMatrix<C64>) -> f64 {
        (m.adjoint() * m - DMatrix::identity(m.nrows(), m.ncols())).norm()
    }

    #[test]
    fn gamma_rules() {
        assert!(make_gate(GateName::Zzz, None, false).is_err());
        assert!(make_gate(GateName::Cz, Some(0.1), false).is_err());
        assert!(make_gate(GateName::Cz, None, true).is_err());
    }

    #[test]
    fn all_targets_unitary() {
        for g in [
            make_gate(GateName::Cz, None, false),
            make_gate(GateName::Cnot, None, false),
            make_gate(GateName::Swap, None, false),
            make_gate(GateName::Zzz, Some(0.3), true),
            make_gate(GateName::Zzzz, Some(1.1), false),
        ] {
            assert!(unitarity_error(&g.unwrap().matrix) < 1e-12);
        }
    }

    #[test]
    fn zzz_zero_is_identity() {
        let g = make_gate(GateName::Zzz, Some(0.0), false).unwrap();
        assert_eq!(g.matrix, DMatrix::identity(8, 8));
    }

    #[test]
    fn phase_shifted_leaves_ground_state() {
        for name in [GateName::Zzz, GateName::Zzzz] {
            let g = make_gate(name, Some(0.37), true).unwrap();
            assert!((g.matrix[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn zzzz_diagonal_by_parity() {
        let g = make_gate(GateName::Zzzz, Some(PI / 4.0), false).unwrap();
        for q in 0..16usize {
            let sign = if q.count_ones() % 2 == 0 { -1.0 } else { 1.0 };
            let expected = C64::from_polar(1.0, sign * PI / 4.0);
            assert!((g.matrix[(q, q)] - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn cnot_controls_on_first_qubit() {
        let g = make_gate(GateName::Cnot, None, false).unwrap();
        assert_eq!(g.matrix[(3, 2)], C64::new(1.0, 0.0));
        assert_eq!(g.matrix[(1, 1)], C64::new(1.0, 0.0));
    }

    #[test]
    fn embed_cz_on_atoms() {
        let grid = TimeGrid::new(0.0, 100.0, 10).unwrap();
        let cfg = AtomArrayConfig::standard(2).unwrap();
        let (model, _) = build_atom_model(&cfg, FieldConfiguration::AtomsPhase, &grid).unwrap();
        let set = embed_targets(&make_gate(GateName::Cz, None, false).unwrap(), &model).unwrap();
        assert_eq!(set.len(), 4);
        let uu = model.labels().iter().position(|l| l == "uu").unwrap();
        let dd = model.labels().iter().position(|l| l == "dd").unwrap();
        assert_eq!(set.initial[0][dd], C64::new(1.0, 0.0));
        assert_eq!(set.targets[3][uu], C64::new(-1.0, 0.0));
        let zzzz = make_gate(GateName::Zzzz, Some(0.2), true).unwrap();
        assert!(embed_targets(&zzzz, &model).is_err());
    }

    #[test]
    fn embed_uses_lowest_transmon_levels() {
        let grid = TimeGrid::new(0.0, 10.0, 10).unwrap();
        let cfg = TransmonPlaquetteConfig::standard(2).unwrap();
        let (model, _) = build_transmon_model(&cfg, FieldConfiguration::ScInteraction, &grid).unwrap();
        let set = embed_targets(&make_gate(GateName::Cz, None, false).unwrap(), &model).unwrap();
        for psi in set.initial.iter().chain(&set.targets) {
            for (i, z) in psi.iter().enumerate() {
                if z.norm() > 0.0 {
                    assert!(model.labels()[i].chars().all(|c| c == '0' || c == '1'));
                }
            }
        }
    }

    #[test]
    fn cnot_entangling_power() {
        let g = make_gate(GateName::Cnot, None, false).unwrap();
        let e = entangling_power(&g, 40_000, 1).unwrap();
        assert!((e.mean - 2.0 / 9.0).abs() < 4.0 * e.std_error, "{e:?}");
    }

    #[test]
    fn identity_has_no_entangling_power() {
        let g = make_gate(GateName::Zzzz, Some(0.0), true).unwrap();
        assert!(entangling_power(&g, 2000, 3).unwrap().mean.abs() < 1e-12);
    }

    #[test]
    fn deterministic_and_phase_invariant() {
        let g = make_gate(GateName::Zzz, Some(0.6), false).unwrap();
        let a = entangling_power(&g, 3000, 9).unwrap();
        assert_eq!(a, entangling_power(&g, 3000, 9).unwrap());
        let shifted = &g.matrix * C64::from_polar(1.0, 1.234);
        let b = entangling_power_of(&shifted, 3, 3000, 9).unwrap();
        assert!((a.mean - b.mean).abs() < 1e-14);
    }
}
