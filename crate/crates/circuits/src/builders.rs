use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{adjacent, Algorithm, Circuit, Coord, Encoding, LogicalCircuit, Provenance};
use crate::error::{CircuitError, Result};
use crate::gate::{GateKind, Op};
use crate::profile::PlatformProfile;

/// Ising couplings of an N-spin glass, `J_nm` for `n < m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinGlassInstance {
    pub n: usize,
    /// Row-major upper triangle: `(n, m, J_nm)` with `n < m`.
    pub couplings: Vec<(usize, usize, f64)>,
}

impl SpinGlassInstance {
    /// All-to-all couplings drawn uniformly from [-1, 1].
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut couplings = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for a in 0..n {
            for b in a + 1..n {
                couplings.push((a, b, rng.gen_range(-1.0..=1.0)));
            }
        }
        Self { n, couplings }
    }

    pub fn zero(n: usize) -> Self {
        let couplings = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b, 0.0))).collect();
        Self { n, couplings }
    }

    pub fn validate(&self) -> Result<()> {
        for &(a, b, j) in &self.couplings {
            if a >= b || b >= self.n {
                return Err(CircuitError::Parameter(format!(
                    "coupling ({a}, {b}) needs a < b < {}",
                    self.n
                )));
            }
            if !j.is_finite() {
                return Err(CircuitError::Parameter(format!("coupling ({a}, {b}) is not finite")));
            }
        }
        Ok(())
    }

    pub fn coupling(&self, a: usize, b: usize) -> f64 {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.couplings
            .iter()
            .filter(|c| c.0 == a && c.1 == b)
            .map(|c| c.2)
            .sum()
    }
}

/// Row-major near-square grid holding `n` cells in boustrophedon order, so
/// consecutive cells are neighbours.
pub fn snake_coords(n: usize) -> Vec<Coord> {
    let cols = (n as f64).sqrt().ceil() as usize;
    (0..n)
        .map(|k| {
            let (r, c) = (k / cols, k % cols);
            let c = if r % 2 == 0 { c } else { cols - 1 - c };
            (r as i32, c as i32)
        })
        .collect()
}

fn provenance(algorithm: Algorithm, encoding: Encoding, n_logical: usize, profile: &PlatformProfile) -> Provenance {
    Provenance {
        algorithm,
        encoding,
        n_logical,
        platform: profile.platform,
        gate_set: profile.gate_set,
    }
}

/// Nearest-neighbour QFT: a line of qubits threaded through the grid, with
/// every controlled phase followed by a SWAP so the control travels to the
/// end of the line. Output bit `k` ends on line position `k`.
pub fn qft_sgm_logical(n: usize, profile: &PlatformProfile) -> Result<LogicalCircuit> {
    if n < 2 {
        return Err(CircuitError::Parameter("QFT needs at least 2 qubits".into()));
    }
    let coords = snake_coords(n);
    // pos[w]: line position of wire w.
    let mut pos: Vec<usize> = (0..n).collect();
    let mut ops = Vec::new();
    for i in 0..n {
        ops.push(Op::gate(GateKind::H, &[pos[i]]));
        for j in i + 1..n {
            let theta = PI / (1u64 << (j - i)) as f64;
            ops.push(Op::gate(GateKind::CPhase(theta), &[pos[i], pos[j]]));
            ops.push(Op::gate(GateKind::Swap, &[pos[i], pos[j]]));
            pos.swap(i, j);
        }
    }
    // Output bit k is carried by wire n-1-k.
    let output_map = (0..n).map(|k| pos[n - 1 - k]).collect();
    Ok(LogicalCircuit {
        n_qubits: n,
        coords,
        ops,
        provenance: provenance(Algorithm::Qft, Encoding::Sgm, n, profile),
        input_map: (0..n).collect(),
        output_map,
        constraint_groups: 0,
    })
}

pub fn build_qft_sgm(n: usize, profile: &PlatformProfile) -> Result<Circuit> {
    qft_sgm_logical(n, profile)?.compile(profile)
}

fn manhattan(a: Coord, b: Coord) -> i32 {
    (a.0 - b.0).abs() + (a.1 - b.1).abs()
}

/// One QAOA step `exp(-i alpha H_x) exp(-i beta H_z)` with a greedy router:
/// apply every coupling whose spins are adjacent, then move the first spin of
/// the closest remaining pair one SWAP towards its partner, and repeat.
/// Zero couplings are skipped.
pub fn qaoa_sgm_logical(
    instance: &SpinGlassInstance,
    beta: f64,
    alpha: f64,
    profile: &PlatformProfile,
) -> Result<LogicalCircuit> {
    instance.validate()?;
    let n = instance.n;
    if n < 2 {
        return Err(CircuitError::Parameter("QAOA needs at least 2 spins".into()));
    }
    if !beta.is_finite() || !alpha.is_finite() {
        return Err(CircuitError::Parameter("angles must be finite".into()));
    }
    let coords = snake_coords(n);
    let mut pos: Vec<usize> = (0..n).collect();
    let mut occupant: Vec<usize> = (0..n).collect();
    let mut remaining: Vec<(usize, usize, f64)> = instance.couplings.iter().copied().filter(|c| c.2 != 0.0).collect();
    remaining.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    let mut ops = Vec::new();
    while !remaining.is_empty() {
        remaining.retain(|&(a, b, j)| {
            if adjacent(coords[pos[a]], coords[pos[b]]) {
                ops.push(Op::gate(GateKind::Rzz(2.0 * beta * j), &[pos[a], pos[b]]));
                false
            } else {
                true
            }
        });
        let Some(&(a, b, _)) = remaining
            .iter()
            .min_by_key(|c| (manhattan(coords[pos[c.0]], coords[pos[c.1]]), c.0, c.1))
        else {
            break;
        };
        let (from, target) = (pos[a], coords[pos[b]]);
        let d = manhattan(coords[from], target);
        let next = (0..n)
            .filter(|&p| adjacent(coords[p], coords[from]) && manhattan(coords[p], target) < d)
            .min()
            .ok_or_else(|| CircuitError::Parameter("router found no move".into()))?;
        ops.push(Op::gate(GateKind::Swap, &[from, next]));
        let other = occupant[next];
        occupant.swap(from, next);
        pos[a] = next;
        pos[other] = from;
    }
    for p in 0..n {
        ops.push(Op::gate(GateKind::Rx(2.0 * alpha), &[p]));
    }
    Ok(LogicalCircuit {
        n_qubits: n,
        coords,
        ops,
        provenance: provenance(Algorithm::Qaoa, Encoding::Sgm, n, profile),
        input_map: (0..n).collect(),
        output_map: pos,
        constraint_groups: 0,
    })
}

pub fn build_qaoa_sgm_step(
    instance: &SpinGlassInstance,
    beta: f64,
    alpha: f64,
    profile: &PlatformProfile,
) -> Result<Circuit> {
    qaoa_sgm_logical(instance, beta, alpha, profile)?.compile(profile)
}

/// Physical qubit layout of the parity encoding: one qubit per logical pair
/// `(i, j)` placed at row `i`, column `j`.
#[derive(Clone, Debug)]
pub struct ParityLayout {
    pub n_logical: usize,
    pub pairs: Vec<(usize, usize)>,
}

impl ParityLayout {
    /// Pairs with `i < j`, plus the diagonal `i == j` when `with_diagonal`.
    pub fn new(n_logical: usize, with_diagonal: bool) -> Self {
        let off = usize::from(!with_diagonal);
        let pairs = (0..n_logical)
            .flat_map(|i| (i + off..n_logical).map(move |j| (i, j)))
            .collect();
        Self { n_logical, pairs }
    }

    pub fn n_qubits(&self) -> usize {
        self.pairs.len()
    }

    pub fn index(&self, i: usize, j: usize) -> Option<usize> {
        self.pairs.iter().position(|&p| p == (i, j))
    }

    pub fn coords(&self) -> Vec<Coord> {
        self.pairs.iter().map(|&(i, j)| (i as i32, j as i32)).collect()
    }
}

/// Parity-encoded QFT resource options.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PmQftOptions {
    /// CZ-based parity chains per logical Hadamard (compute and uncompute).
    pub chain_passes: usize,
}

impl Default for PmQftOptions {
    fn default() -> Self {
        Self { chain_passes: 2 }
    }
}

/// Parity-encoded QFT for resource counting. A logical Hadamard on `i` runs
/// CZ-conjugated parity chains along the L-shaped line of qubits involving
/// `i` (column `i` down to `(i, i)`, row `i` back to `(i, i)`) around a local
/// gate on `(i, i)`; a logical controlled phase is three parallel
/// single-qubit phases.
pub fn qft_pm_logical(n: usize, profile: &PlatformProfile, options: PmQftOptions) -> Result<LogicalCircuit> {
    if n < 2 {
        return Err(CircuitError::Parameter("QFT needs at least 2 logical qubits".into()));
    }
    if options.chain_passes == 0 {
        return Err(CircuitError::Parameter("chain_passes must be positive".into()));
    }
    let layout = ParityLayout::new(n, true);
    let q = |i: usize, j: usize| layout.index(i.min(j), i.max(j)).expect("pair in layout");
    let mut ops = Vec::new();
    let chain_edge = |ops: &mut Vec<Op>, ctrl: usize, tgt: usize| {
        ops.push(Op::gate(GateKind::H, &[tgt]));
        ops.push(Op::gate(GateKind::Cz, &[ctrl, tgt]));
        ops.push(Op::gate(GateKind::H, &[tgt]));
    };
    for i in 0..n {
        // Edges directed towards (i, i): the column arm and the row arm.
        let mut edges: Vec<(usize, usize)> = (0..i).map(|r| (q(r, i), q(r + 1, i))).collect();
        edges.extend((i + 1..n).rev().map(|c| (q(i, c), q(i, c - 1))));
        let before = options.chain_passes.div_ceil(2);
        for _ in 0..before {
            for &(a, b) in &edges {
                chain_edge(&mut ops, a, b);
            }
        }
        ops.push(Op::gate(GateKind::H, &[q(i, i)]));
        for _ in before..options.chain_passes {
            for &(a, b) in edges.iter().rev() {
                chain_edge(&mut ops, a, b);
            }
        }
        for j in i + 1..n {
            let theta = PI / (1u64 << (j - i).min(62)) as f64;
            ops.push(Op::gate(GateKind::Rz(theta / 2.0), &[q(i, i)]));
            ops.push(Op::gate(GateKind::Rz(theta / 2.0), &[q(j, j)]));
            ops.push(Op::gate(GateKind::Rz(-theta / 2.0), &[q(i, j)]));
        }
    }
    Ok(LogicalCircuit {
        n_qubits: layout.n_qubits(),
        coords: layout.coords(),
        ops,
        provenance: provenance(Algorithm::Qft, Encoding::Pm, n, profile),
        input_map: Vec::new(),
        output_map: Vec::new(),
        constraint_groups: 0,
    })
}

pub fn build_qft_pm(n: usize, profile: &PlatformProfile, options: PmQftOptions) -> Result<Circuit> {
    qft_pm_logical(n, profile, options)?.compile(profile)
}

/// Constraint plaquette of the parity layout, anchored at its top-left pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plaquette {
    pub anchor: (usize, usize),
    /// Physical qubits in chain order (consecutive entries adjacent).
    pub qubits: Vec<usize>,
}

/// Plaquettes of the staircase layout: a triangle at each diagonal step and a
/// square elsewhere; `K - N + 1` in total.
pub fn plaquettes(layout: &ParityLayout) -> Vec<Plaquette> {
    let n = layout.n_logical;
    let q = |i: usize, j: usize| layout.index(i, j).expect("pair in layout");
    let mut out = Vec::new();
    for i in 0..n.saturating_sub(2) {
        for j in i + 1..n - 1 {
            let qubits = if j == i + 1 {
                vec![q(i, j), q(i, j + 1), q(i + 1, j + 1)]
            } else {
                vec![q(i, j), q(i, j + 1), q(i + 1, j + 1), q(i + 1, j)]
            };
            out.push(Plaquette { anchor: (i, j), qubits });
        }
    }
    out
}

/// Plaquettes grouped into layers by anchor residue modulo `period`; with
/// period 2 no two plaquettes of a group share a qubit, with period 3 they are
/// also separated by at least one empty line.
pub fn constraint_groups(plaqs: &[Plaquette], period: usize) -> Vec<Vec<Plaquette>> {
    let mut groups = vec![Vec::new(); period * period];
    for p in plaqs {
        groups[(p.anchor.0 % period) * period + p.anchor.1 % period].push(p.clone());
    }
    groups.retain(|g| !g.is_empty());
    groups
}

/// CNOT parity ladder realizing `exp(-i gamma Z...Z)` on a chain.
fn constraint_ladder(qubits: &[usize], gamma: f64, ops: &mut Vec<Op>) {
    for w in qubits.windows(2) {
        ops.push(Op::gate(GateKind::Cnot, &[w[0], w[1]]));
    }
    ops.push(Op::gate(GateKind::Rz(2.0 * gamma), &[*qubits.last().unwrap()]));
    for w in qubits.windows(2).rev() {
        ops.push(Op::gate(GateKind::Cnot, &[w[0], w[1]]));
    }
}

/// One parity-encoded QAOA step: constraint layers, then the local-field
/// layer `Rz(2 beta J_ij)`, then the mixer `Rx(2 alpha)`.
pub fn qaoa_pm_logical(
    instance: &SpinGlassInstance,
    beta: f64,
    alpha: f64,
    gamma: f64,
    profile: &PlatformProfile,
    native_constraints: bool,
) -> Result<LogicalCircuit> {
    instance.validate()?;
    let n = instance.n;
    if n < 3 {
        return Err(CircuitError::Parameter("parity QAOA needs at least 3 spins".into()));
    }
    if ![beta, alpha, gamma].iter().all(|x| x.is_finite()) {
        return Err(CircuitError::Parameter("angles must be finite".into()));
    }
    let layout = ParityLayout::new(n, false);
    let groups = constraint_groups(&plaquettes(&layout), profile.constraint_period);
    let mut ops = Vec::new();
    for group in &groups {
        for p in group {
            if native_constraints {
                let kind = if p.qubits.len() == 3 {
                    GateKind::Zzz(gamma)
                } else {
                    GateKind::Zzzz(gamma)
                };
                ops.push(Op::gate(kind, &p.qubits));
            } else {
                constraint_ladder(&p.qubits, gamma, &mut ops);
            }
        }
        ops.push(Op::Barrier);
    }
    for (k, &(i, j)) in layout.pairs.iter().enumerate() {
        ops.push(Op::gate(GateKind::Rz(2.0 * beta * instance.coupling(i, j)), &[k]));
    }
    ops.push(Op::Barrier);
    for k in 0..layout.n_qubits() {
        ops.push(Op::gate(GateKind::Rx(2.0 * alpha), &[k]));
    }
    Ok(LogicalCircuit {
        n_qubits: layout.n_qubits(),
        coords: layout.coords(),
        ops,
        provenance: provenance(Algorithm::Qaoa, Encoding::Pm, n, profile),
        input_map: Vec::new(),
        output_map: Vec::new(),
        constraint_groups: groups.len(),
    })
}

pub fn build_qaoa_pm_step(
    instance: &SpinGlassInstance,
    beta: f64,
    alpha: f64,
    gamma: f64,
    profile: &PlatformProfile,
    native_constraints: bool,
) -> Result<Circuit> {
    qaoa_pm_logical(instance, beta, alpha, gamma, profile, native_constraints)?.compile(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{GateSet, Platform};

    fn prof(p: Platform, g: GateSet) -> PlatformProfile {
        PlatformProfile::new(p, g)
    }

    #[test]
    fn snake_is_a_path() {
        for n in 2..30 {
            let c = snake_coords(n);
            assert!(c.windows(2).all(|w| adjacent(w[0], w[1])), "n = {n}");
        }
    }

    #[test]
    fn qft_sgs_needs_more_entanglers() {
        let sgs = build_qft_sgm(3, &prof(Platform::Atoms, GateSet::Sgs)).unwrap();
        let qgs = build_qft_sgm(3, &prof(Platform::Atoms, GateSet::Qgs)).unwrap();
        assert!(sgs.count_gates().two > qgs.count_gates().two);
    }

    #[test]
    fn zero_couplings_leave_only_the_mixer() {
        let c = build_qaoa_sgm_step(
            &SpinGlassInstance::zero(4),
            0.3,
            0.2,
            &prof(Platform::Atoms, GateSet::Qgs),
        )
        .unwrap();
        let counts = c.count_gates();
        assert_eq!(counts.multi(), 0);
        assert_eq!(counts.single, 4);
        assert_eq!(c.depth(), 1);
    }

    #[test]
    fn routing_exceeds_all_to_all_bound() {
        let inst = SpinGlassInstance::random(9, 3);
        let c = build_qaoa_sgm_step(&inst, 0.3, 0.2, &prof(Platform::Atoms, GateSet::Ideal)).unwrap();
        assert!(c.count_gates().two > 9 * 8 / 2);
        assert!(c.count_named("swap") > 0);
    }

    #[test]
    fn pm_qft_resources() {
        let p = prof(Platform::Atoms, GateSet::Qgs);
        let c = build_qft_pm(9, &p, PmQftOptions::default()).unwrap();
        assert_eq!(c.n_qubits, 45);
        // Controlled phases add no entanglers: only the Hadamard chains do.
        assert_eq!(c.count_gates().two, 9 * 2 * 8);
        let s = build_qft_pm(9, &prof(Platform::Atoms, GateSet::Sgs), PmQftOptions::default()).unwrap();
        assert_eq!(s.to_text(), c.to_text());
    }

    #[test]
    fn pm_qaoa_small() {
        let inst = SpinGlassInstance::random(4, 1);
        let p = prof(Platform::Superconducting, GateSet::Qgs);
        let native = build_qaoa_pm_step(&inst, 0.1, 0.2, 0.3, &p, true).unwrap();
        assert_eq!(native.n_qubits, 6);
        let counts = native.count_gates();
        assert_eq!((counts.three, counts.four), (2, 1));
        let ladder = build_qaoa_pm_step(&inst, 0.1, 0.2, 0.3, &p, false).unwrap();
        assert_eq!(ladder.count_gates().two, 4 * 2 + 6);
        assert_eq!(ladder.count_gates().multi(), 14);
        let sgs = prof(Platform::Superconducting, GateSet::Sgs);
        assert!(matches!(
            build_qaoa_pm_step(&inst, 0.1, 0.2, 0.3, &sgs, true),
            Err(CircuitError::NotNative(..))
        ));
    }

    #[test]
    fn constraint_groups_are_disjoint() {
        for n in 3..=11 {
            let layout = ParityLayout::new(n, false);
            let coords = layout.coords();
            for (period, bound, gap) in [(2, 4, 0), (3, 9, 1)] {
                let groups = constraint_groups(&plaquettes(&layout), period);
                assert!(groups.len() <= bound);
                for g in &groups {
                    for (x, a) in g.iter().enumerate() {
                        for b in &g[x + 1..] {
                            // Chebyshev distance between footprints, in empty lines.
                            let d = a
                                .qubits
                                .iter()
                                .flat_map(|&u| b.qubits.iter().map(move |&v| (u, v)))
                                .map(|(u, v)| {
                                    let (cu, cv) = (coords[u], coords[v]);
                                    (cu.0 - cv.0).abs().max((cu.1 - cv.1).abs()) - 1
                                })
                                .min()
                                .unwrap();
                            assert!(d >= gap, "n = {n}, period = {period}");
                        }
                    }
                }
            }
        }
    }
}
