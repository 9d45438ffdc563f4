use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::builders::SpinGlassInstance;
use crate::circuit::Circuit;
use crate::error::{CircuitError, Result};
use crate::gate::{Gate, GateKind};

/// Largest register the dense simulator accepts.
pub const MAX_SIM_QUBITS: usize = 12;

fn bit(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

fn apply_gate(state: &mut [C64], n: usize, g: &Gate) -> Result<()> {
    if let Some(m) = g.kind.matrix_1q() {
        let b = bit(n, g.qubits[0]);
        for i in 0..state.len() {
            if i & b == 0 {
                let (a0, a1) = (state[i], state[i | b]);
                state[i] = m[0][0] * a0 + m[0][1] * a1;
                state[i | b] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        return Ok(());
    }
    if let Some(diag) = g.kind.diagonal() {
        let bits: Vec<usize> = g.qubits.iter().map(|&q| bit(n, q)).collect();
        for (i, amp) in state.iter_mut().enumerate() {
            let local = bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(i & b != 0));
            *amp *= diag[local];
        }
        return Ok(());
    }
    match g.kind {
        GateKind::Cnot => {
            let (c, t) = (bit(n, g.qubits[0]), bit(n, g.qubits[1]));
            for i in 0..state.len() {
                if i & c != 0 && i & t == 0 {
                    state.swap(i, i | t);
                }
            }
        }
        GateKind::Swap => {
            let (a, b) = (bit(n, g.qubits[0]), bit(n, g.qubits[1]));
            for i in 0..state.len() {
                if i & a != 0 && i & b == 0 {
                    state.swap(i, (i & !a) | b);
                }
            }
        }
        _ => {
            return Err(CircuitError::Simulation(format!(
                "gate `{}` has no matrix",
                g.kind.name()
            )))
        }
    }
    Ok(())
}

/// Dense unitary of the circuit; physical qubit 0 is the most significant bit.
pub fn circuit_unitary(circuit: &Circuit) -> Result<DMatrix<C64>> {
    let n = circuit.n_qubits;
    if n > MAX_SIM_QUBITS {
        return Err(CircuitError::Simulation(format!(
            "{n} qubits exceed the limit of {MAX_SIM_QUBITS}"
        )));
    }
    let dim = 1usize << n;
    let mut u = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    for col in 0..dim {
        let mut state = vec![C64::new(0.0, 0.0); dim];
        state[col] = C64::new(1.0, 0.0);
        for g in circuit.gates() {
            apply_gate(&mut state, n, g)?;
        }
        u.set_column(col, &nalgebra::DVector::from_vec(state));
    }
    Ok(u)
}

/// `F[y, x] = exp(2 pi i x y / 2^n) / sqrt(2^n)`.
pub fn dft_matrix(n: usize) -> DMatrix<C64> {
    let dim = 1usize << n;
    let norm = 1.0 / (dim as f64).sqrt();
    DMatrix::from_fn(dim, dim, |y, x| {
        let phase = 2.0 * PI * ((x * y) % dim) as f64 / dim as f64;
        C64::from_polar(norm, phase)
    })
}

/// `exp(-i alpha sum_k X_k) exp(-i beta sum J_nm Z_n Z_m)`.
pub fn qaoa_step_matrix(instance: &SpinGlassInstance, beta: f64, alpha: f64) -> DMatrix<C64> {
    let n = instance.n;
    let dim = 1usize << n;
    let z = |x: usize, q: usize| if x & bit(n, q) == 0 { 1.0 } else { -1.0 };
    let phases: Vec<C64> = (0..dim)
        .map(|x| {
            let e: f64 = instance.couplings.iter().map(|&(a, b, j)| j * z(x, a) * z(x, b)).sum();
            C64::from_polar(1.0, -beta * e)
        })
        .collect();
    let (c, s) = (alpha.cos(), alpha.sin());
    DMatrix::from_fn(dim, dim, |y, x| {
        let diff = x ^ y;
        let flips = diff.count_ones() as i32;
        let amp = C64::new(0.0, -s).powi(flips) * c.powi(n as i32 - flips);
        amp * phases[x]
    })
}

fn physical_index(logical: usize, map: &[usize], n: usize) -> usize {
    (0..map.len())
        .filter(|&k| logical & bit(map.len(), k) != 0)
        .fold(0, |acc, k| acc | bit(n, map[k]))
}

/// Largest entry-wise deviation between the circuit unitary and `ideal`,
/// after routing logical bits through the circuit's input and output maps.
pub fn max_deviation(circuit: &Circuit, ideal: &DMatrix<C64>) -> Result<f64> {
    let n_logical = circuit.input_map.len();
    if n_logical == 0 || circuit.output_map.len() != n_logical || ideal.nrows() != 1 << n_logical {
        return Err(CircuitError::Simulation(
            "circuit has no logical bit mapping matching the oracle".into(),
        ));
    }
    let u = circuit_unitary(circuit)?;
    let n = circuit.n_qubits;
    let mut worst: f64 = 0.0;
    for x in 0..ideal.ncols() {
        let px = physical_index(x, &circuit.input_map, n);
        for y in 0..ideal.nrows() {
            let py = physical_index(y, &circuit.output_map, n);
            worst = worst.max((u[(py, px)] - ideal[(y, x)]).norm());
        }
    }
    Ok(worst)
}
