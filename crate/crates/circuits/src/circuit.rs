use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{CircuitError, Result};
use crate::gate::{mat2_mul, Gate, GateKind, Op};
use crate::profile::{GateSet, Platform, PlatformProfile};

/// Lattice position of a physical qubit as (row, column).
pub type Coord = (i32, i32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// Swap-network encoding on the qubit grid.
    Sgm,
    /// Parity encoding with one physical qubit per logical pair.
    Pm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Qft,
    Qaoa,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub algorithm: Algorithm,
    pub encoding: Encoding,
    pub n_logical: usize,
    pub platform: Platform,
    pub gate_set: GateSet,
}

/// Scheduled circuit on physical qubits.
#[derive(Clone, Debug)]
pub struct Circuit {
    pub n_qubits: usize,
    pub coords: Vec<Coord>,
    pub layers: Vec<Vec<Gate>>,
    pub provenance: Provenance,
    /// `input_map[k]`: physical qubit holding logical input bit `k` (bit 0 most
    /// significant). Empty for encodings without a direct bit mapping.
    pub input_map: Vec<usize>,
    /// `output_map[k]`: physical qubit holding logical output bit `k`.
    pub output_map: Vec<usize>,
    /// Number of barrier-separated constraint groups (parity encoding only).
    pub constraint_groups: usize,
}

/// Logical gate sequence produced by a builder, before compilation.
#[derive(Clone, Debug)]
pub struct LogicalCircuit {
    pub n_qubits: usize,
    pub coords: Vec<Coord>,
    pub ops: Vec<Op>,
    pub provenance: Provenance,
    pub input_map: Vec<usize>,
    pub output_map: Vec<usize>,
    pub constraint_groups: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GateCounts {
    pub single: usize,
    pub two: usize,
    pub three: usize,
    pub four: usize,
}

impl GateCounts {
    pub fn multi(&self) -> usize {
        self.two + self.three + self.four
    }
}

pub fn adjacent(a: Coord, b: Coord) -> bool {
    (a.0 - b.0).abs() + (a.1 - b.1).abs() == 1
}

/// Whether the qubits of a gate form a connected nearest-neighbour cluster
/// inside a 2x2 box.
fn local_cluster(coords: &[Coord], qubits: &[usize]) -> bool {
    let pts: Vec<Coord> = qubits.iter().map(|&q| coords[q]).collect();
    match pts.len() {
        1 => true,
        2 => adjacent(pts[0], pts[1]),
        _ => {
            let (rmin, rmax) = (
                pts.iter().map(|p| p.0).min().unwrap(),
                pts.iter().map(|p| p.0).max().unwrap(),
            );
            let (cmin, cmax) = (
                pts.iter().map(|p| p.1).min().unwrap(),
                pts.iter().map(|p| p.1).max().unwrap(),
            );
            rmax - rmin <= 1 && cmax - cmin <= 1
        }
    }
}

/// Rewrites every multi-qubit gate into gates native to the profile.
pub fn lower(ops: &[Op], profile: &PlatformProfile) -> Result<Vec<Op>> {
    let mut out = Vec::with_capacity(ops.len() * 2);
    for op in ops {
        match op {
            Op::Barrier => out.push(Op::Barrier),
            Op::Gate(g) => lower_gate(g, profile, &mut out)?,
        }
    }
    Ok(out)
}

fn cz_template(a: usize, b: usize, profile: &PlatformProfile, out: &mut Vec<Op>) {
    // CZ-class gate in the standard superconducting set: entanglers separated
    // by local layers.
    out.push(Op::gate(GateKind::Local, &[a]));
    out.push(Op::gate(GateKind::Local, &[b]));
    for _ in 0..profile.sycamore_per_cz {
        out.push(Op::gate(GateKind::Sycamore, &[a, b]));
        out.push(Op::gate(GateKind::Local, &[a]));
        out.push(Op::gate(GateKind::Local, &[b]));
    }
}

fn lower_gate(g: &Gate, profile: &PlatformProfile, out: &mut Vec<Op>) -> Result<()> {
    if profile.is_native(&g.kind) {
        out.push(Op::Gate(g.clone()));
        return Ok(());
    }
    let q = &g.qubits;
    let sc_sgs = profile.platform == Platform::Superconducting && profile.gate_set == GateSet::Sgs;
    match g.kind {
        GateKind::Cz if sc_sgs => cz_template(q[0], q[1], profile, out),
        GateKind::Cnot => {
            out.push(Op::gate(GateKind::H, &[q[1]]));
            lower_gate(&Gate::new(GateKind::Cz, q), profile, out)?;
            out.push(Op::gate(GateKind::H, &[q[1]]));
        }
        GateKind::CPhase(_) | GateKind::Rzz(_) if sc_sgs => cz_template(q[0], q[1], profile, out),
        GateKind::CPhase(t) => {
            out.push(Op::gate(GateKind::P(t / 2.0), &[q[0]]));
            out.push(Op::gate(GateKind::P(t / 2.0), &[q[1]]));
            lower_gate(&Gate::new(GateKind::Cnot, q), profile, out)?;
            out.push(Op::gate(GateKind::P(-t / 2.0), &[q[1]]));
            lower_gate(&Gate::new(GateKind::Cnot, q), profile, out)?;
        }
        GateKind::Rzz(t) => {
            lower_gate(&Gate::new(GateKind::Cnot, q), profile, out)?;
            out.push(Op::gate(GateKind::Rz(t), &[q[1]]));
            lower_gate(&Gate::new(GateKind::Cnot, q), profile, out)?;
        }
        GateKind::Swap if sc_sgs => {
            for k in 0..3 {
                if k > 0 {
                    out.push(Op::gate(GateKind::Local, &[q[0]]));
                    out.push(Op::gate(GateKind::Local, &[q[1]]));
                }
                out.push(Op::gate(GateKind::Sycamore, q));
            }
        }
        GateKind::Swap => {
            let (a, b) = (q[0], q[1]);
            for pair in [[a, b], [b, a], [a, b]] {
                lower_gate(&Gate::new(GateKind::Cnot, &pair), profile, out)?;
            }
        }
        _ => {
            return Err(CircuitError::NotNative(
                g.kind.name().to_string(),
                profile.gate_set.to_string(),
            ));
        }
    }
    Ok(())
}

/// Merges runs of consecutive single-qubit gates on the same qubit.
pub fn fuse_single_qubit(ops: &[Op], n_qubits: usize) -> Vec<Op> {
    let mut out = Vec::with_capacity(ops.len());
    let mut pending: Vec<Vec<GateKind>> = vec![Vec::new(); n_qubits];
    let flush = |q: usize, pending: &mut Vec<Vec<GateKind>>, out: &mut Vec<Op>| {
        let run = std::mem::take(&mut pending[q]);
        match run.len() {
            0 => {}
            1 => out.push(Op::gate(run.into_iter().next().unwrap(), &[q])),
            _ => {
                // Later gates multiply from the left.
                let mut m = Some(identity2());
                for k in &run {
                    m = match (m, k.matrix_1q()) {
                        (Some(acc), Some(g)) => Some(mat2_mul(&g, &acc)),
                        _ => None,
                    };
                }
                out.push(Op::gate(GateKind::Fused(m), &[q]));
            }
        }
    };
    for op in ops {
        match op {
            Op::Barrier => {
                for q in 0..n_qubits {
                    flush(q, &mut pending, &mut out);
                }
                out.push(Op::Barrier);
            }
            Op::Gate(g) if g.arity() == 1 => pending[g.qubits[0]].push(g.kind.clone()),
            Op::Gate(g) => {
                for &q in &g.qubits {
                    flush(q, &mut pending, &mut out);
                }
                out.push(op.clone());
            }
        }
    }
    for q in 0..n_qubits {
        flush(q, &mut pending, &mut out);
    }
    out
}

fn identity2() -> crate::gate::Mat2 {
    use num_complex::Complex64 as C64;
    let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    [[o, z], [z, o]]
}

/// As-soon-as-possible layering; no layer touches a qubit twice and no gate
/// moves across a barrier.
pub fn schedule(ops: &[Op], n_qubits: usize) -> Vec<Vec<Gate>> {
    let mut layers: Vec<Vec<Gate>> = Vec::new();
    let mut ready = vec![0usize; n_qubits];
    let mut floor = 0usize;
    for op in ops {
        match op {
            Op::Barrier => floor = layers.len(),
            Op::Gate(g) => {
                let layer = g.qubits.iter().map(|&q| ready[q]).max().unwrap_or(0).max(floor);
                if layer >= layers.len() {
                    layers.resize_with(layer + 1, Vec::new);
                }
                layers[layer].push(g.clone());
                for &q in &g.qubits {
                    ready[q] = layer + 1;
                }
            }
        }
    }
    layers
}

impl LogicalCircuit {
    /// Lowers to the profile's gate set, fuses local gates, schedules and
    /// checks connectivity.
    pub fn compile(&self, profile: &PlatformProfile) -> Result<Circuit> {
        profile.validate()?;
        let lowered = lower(&self.ops, profile)?;
        let fused = fuse_single_qubit(&lowered, self.n_qubits);
        let layers = schedule(&fused, self.n_qubits);
        let circuit = Circuit {
            n_qubits: self.n_qubits,
            coords: self.coords.clone(),
            layers,
            provenance: Provenance {
                gate_set: profile.gate_set,
                platform: profile.platform,
                ..self.provenance.clone()
            },
            input_map: self.input_map.clone(),
            output_map: self.output_map.clone(),
            constraint_groups: self.constraint_groups,
        };
        circuit.check_connectivity()?;
        Ok(circuit)
    }
}

impl Circuit {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.layers.iter().flatten()
    }

    pub fn check_connectivity(&self) -> Result<()> {
        for g in self.gates() {
            if !local_cluster(&self.coords, &g.qubits) {
                return Err(CircuitError::NotAdjacent { gate: g.to_string() });
            }
        }
        Ok(())
    }

    pub fn count_gates(&self) -> GateCounts {
        let mut c = GateCounts::default();
        for g in self.gates() {
            match g.arity() {
                1 => c.single += 1,
                2 => c.two += 1,
                3 => c.three += 1,
                _ => c.four += 1,
            }
        }
        c
    }

    /// Number of gates with the given name.
    pub fn count_named(&self, name: &str) -> usize {
        self.gates().filter(|g| g.kind.name() == name).count()
    }

    /// Sum over layers of the slowest gate time divided by that gate's error
    /// time; ties go to the shorter error time.
    pub fn weighted_runtime(&self, profile: &PlatformProfile) -> Result<f64> {
        let mut total = 0.0;
        for layer in &self.layers {
            let mut slowest: Option<(f64, f64)> = None;
            for g in layer {
                let t = profile.gate_time(&g.kind)?;
                let err = profile.error_time(&g.kind);
                slowest = match slowest {
                    Some((ts, es)) if ts > t || (ts == t && es <= err) => Some((ts, es)),
                    _ => Some((t, err)),
                };
            }
            if let Some((t, err)) = slowest {
                total += t / err;
            }
        }
        Ok(total)
    }

    /// Wall-clock duration: sum of the slowest gate time per layer (ns).
    pub fn runtime_ns(&self, profile: &PlatformProfile) -> Result<f64> {
        let mut total = 0.0;
        for layer in &self.layers {
            let mut t_max: f64 = 0.0;
            for g in layer {
                t_max = t_max.max(profile.gate_time(&g.kind)?);
            }
            total += t_max;
        }
        Ok(total)
    }

    /// Line-oriented listing: `layer name qubits... params...` per gate.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, layer) in self.layers.iter().enumerate() {
            for g in layer {
                let _ = writeln!(s, "{i} {g}");
            }
        }
        s
    }

    pub fn export(&self) -> CircuitExport {
        let gates = self
            .layers
            .iter()
            .enumerate()
            .flat_map(|(layer, gs)| {
                gs.iter().map(move |g| GateRecord {
                    layer,
                    name: g.kind.name(),
                    qubits: g.qubits.clone(),
                    params: g.kind.params(),
                })
            })
            .collect();
        CircuitExport {
            n_qubits: self.n_qubits,
            coords: self.coords.clone(),
            provenance: self.provenance.clone(),
            depth: self.depth(),
            output_map: self.output_map.clone(),
            gates,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GateRecord {
    pub layer: usize,
    pub name: &'static str,
    pub qubits: Vec<usize>,
    pub params: Vec<f64>,
}

/// Serializable view of a circuit.
#[derive(Clone, Debug, Serialize)]
pub struct CircuitExport {
    pub n_qubits: usize,
    pub coords: Vec<Coord>,
    pub provenance: Provenance,
    pub depth: usize,
    pub output_map: Vec<usize>,
    pub gates: Vec<GateRecord>,
}
