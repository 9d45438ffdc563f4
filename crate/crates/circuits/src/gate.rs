use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64 as C64;

/// 2x2 complex matrix, row major.
pub type Mat2 = [[C64; 2]; 2];

#[derive(Clone, Debug, PartialEq)]
pub enum GateKind {
    H,
    X,
    /// `exp(-i theta X / 2)`.
    Rx(f64),
    /// `exp(-i theta Z / 2)`.
    Rz(f64),
    /// `diag(1, e^{i theta})`.
    P(f64),
    /// Unspecified single-qubit gate of a decomposition template; counted and
    /// timed but not simulable.
    Local,
    /// Product of consecutive single-qubit gates on one qubit; `None` when a
    /// factor is not simulable.
    Fused(Option<Mat2>),
    /// `diag(1, 1, 1, e^{i theta})`.
    CPhase(f64),
    /// `exp(-i theta Z Z / 2)`.
    Rzz(f64),
    Cnot,
    Cz,
    Swap,
    /// Entangling gate of the superconducting standard gate set; timing only.
    Sycamore,
    /// `exp(-i gamma Z Z Z)`.
    Zzz(f64),
    /// `exp(-i gamma Z Z Z Z)`.
    Zzzz(f64),
}

impl GateKind {
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Rx(_) => "rx",
            GateKind::Rz(_) => "rz",
            GateKind::P(_) => "p",
            GateKind::Local => "local",
            GateKind::Fused(_) => "u1",
            GateKind::CPhase(_) => "cp",
            GateKind::Rzz(_) => "rzz",
            GateKind::Cnot => "cnot",
            GateKind::Cz => "cz",
            GateKind::Swap => "swap",
            GateKind::Sycamore => "sycamore",
            GateKind::Zzz(_) => "zzz",
            GateKind::Zzzz(_) => "zzzz",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            GateKind::H
            | GateKind::X
            | GateKind::Rx(_)
            | GateKind::Rz(_)
            | GateKind::P(_)
            | GateKind::Local
            | GateKind::Fused(_) => 1,
            GateKind::CPhase(_)
            | GateKind::Rzz(_)
            | GateKind::Cnot
            | GateKind::Cz
            | GateKind::Swap
            | GateKind::Sycamore => 2,
            GateKind::Zzz(_) => 3,
            GateKind::Zzzz(_) => 4,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            GateKind::Rx(t)
            | GateKind::Rz(t)
            | GateKind::P(t)
            | GateKind::CPhase(t)
            | GateKind::Rzz(t)
            | GateKind::Zzz(t)
            | GateKind::Zzzz(t) => vec![t],
            _ => vec![],
        }
    }

    /// Key into a gate-time table; every single-qubit gate is "local".
    pub fn time_key(&self) -> &'static str {
        if self.arity() == 1 {
            "local"
        } else {
            self.name()
        }
    }

    /// Matrix of a single-qubit gate, if simulable.
    pub fn matrix_1q(&self) -> Option<Mat2> {
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        Some(match *self {
            GateKind::H => {
                let s = C64::new(FRAC_1_SQRT_2, 0.0);
                [[s, s], [s, -s]]
            }
            GateKind::X => [[z, one], [one, z]],
            GateKind::Rx(t) => {
                let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
                [
                    [C64::new(c, 0.0), C64::new(0.0, -s)],
                    [C64::new(0.0, -s), C64::new(c, 0.0)],
                ]
            }
            GateKind::Rz(t) => [[C64::from_polar(1.0, -t / 2.0), z], [z, C64::from_polar(1.0, t / 2.0)]],
            GateKind::P(t) => [[one, z], [z, C64::from_polar(1.0, t)]],
            GateKind::Fused(m) => return m,
            _ => return None,
        })
    }

    /// Diagonal of a diagonal multi-qubit gate (index = bit pattern with the
    /// first qubit most significant).
    pub fn diagonal(&self) -> Option<Vec<C64>> {
        let parity = |n: usize, gamma: f64| {
            (0..1usize << n)
                .map(|q| {
                    let z = if q.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    C64::from_polar(1.0, -gamma * z)
                })
                .collect()
        };
        let one = C64::new(1.0, 0.0);
        Some(match *self {
            GateKind::CPhase(t) => vec![one, one, one, C64::from_polar(1.0, t)],
            GateKind::Rzz(t) => parity(2, t / 2.0),
            GateKind::Cz => vec![one, one, one, -one],
            GateKind::Zzz(g) => parity(3, g),
            GateKind::Zzzz(g) => parity(4, g),
            _ => return None,
        })
    }
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: &[usize]) -> Self {
        debug_assert_eq!(kind.arity(), qubits.len());
        Self {
            kind,
            qubits: qubits.to_vec(),
        }
    }

    pub fn arity(&self) -> usize {
        self.qubits.len()
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind.name())?;
        for q in &self.qubits {
            write!(f, " {q}")?;
        }
        for p in self.kind.params() {
            write!(f, " {p}")?;
        }
        Ok(())
    }
}

/// Gate-sequence element before scheduling.
#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Gate(Gate),
    /// Later gates start after every earlier gate has finished.
    Barrier,
}

impl Op {
    pub fn gate(kind: GateKind, qubits: &[usize]) -> Self {
        Op::Gate(Gate::new(kind, qubits))
    }
}
