//! Hamiltonian generators for Rydberg-atom plaquettes and tunable-coupler
//! transmon plaquettes, plus the named control-field configurations.
//!
//! A [`HamiltonianModel`] is a static drift plus a list of control-coupled
//! terms. Fields are referenced by their index in the field list returned
//! together with the model. The model also records the connected blocks of
//! its sparsity pattern so the propagator can exponentiate block by block.

use std::f64::consts::{PI, TAU};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{QslError, Result};
use crate::fields::{Bounds, ControlField, FieldRole, TimeGrid};
use crate::C64;

/// Convert an ordinary frequency in MHz to an angular frequency in rad/ns.
pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e-3
}

/// Sparse matrix as a list of `(row, col, value)` entries.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseOp {
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: usize, col: usize, value: C64) {
        if value != C64::new(0.0, 0.0) {
            self.entries.push((row, col, value));
        }
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_dense(&self, dim: usize) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(dim, dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// `<bra| op |ket>`.
    pub fn sandwich(&self, bra: &[C64], ket: &[C64]) -> C64 {
        self.entries.iter().map(|&(r, c, v)| bra[r].conj() * v * ket[c]).sum()
    }
}

/// How a term depends on the control fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coupling {
    /// `E(t) * O` with Hermitian `O`.
    Linear { field: usize },
    /// `scale * E(t)^2 * O` with Hermitian `O`.
    Quadratic { field: usize, scale: f64 },
    /// `(Omega(t)/2) (e^{i phi(t)} A + h.c.)` with arbitrary `A`; a missing
    /// phase field means `phi = 0`.
    Polar { amplitude: usize, phase: Option<usize> },
}

impl Coupling {
    /// Indices of the fields this coupling depends on.
    pub fn fields(&self) -> impl Iterator<Item = usize> {
        let (a, b) = match *self {
            Coupling::Linear { field } | Coupling::Quadratic { field, .. } => (field, None),
            Coupling::Polar { amplitude, phase } => (amplitude, phase),
        };
        std::iter::once(a).chain(b)
    }
}

#[derive(Clone, Debug)]
pub struct ControlTerm {
    pub coupling: Coupling,
    pub op: SparseOp,
}

impl ControlTerm {
    /// Coefficient multiplying `op` (and `conj` of it multiplying `op^dagger`
    /// for polar terms).
    fn coefficient(&self, controls: &[f64]) -> C64 {
        match self.coupling {
            Coupling::Linear { field } => C64::new(controls[field], 0.0),
            Coupling::Quadratic { field, scale } => C64::new(scale * controls[field].powi(2), 0.0),
            Coupling::Polar { amplitude, phase } => {
                let phi = phase.map_or(0.0, |p| controls[p]);
                C64::from_polar(0.5 * controls[amplitude], phi)
            }
        }
    }

    /// Derivative of the coefficient with respect to `field`.
    fn coefficient_derivative(&self, field: usize, controls: &[f64]) -> C64 {
        match self.coupling {
            Coupling::Linear { field: f } if f == field => C64::new(1.0, 0.0),
            Coupling::Quadratic { field: f, scale } if f == field => C64::new(2.0 * scale * controls[f], 0.0),
            Coupling::Polar { amplitude, phase } => {
                let phi = phase.map_or(0.0, |p| controls[p]);
                if amplitude == field {
                    C64::from_polar(0.5, phi)
                } else if phase == Some(field) {
                    C64::i() * C64::from_polar(0.5 * controls[amplitude], phi)
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            _ => C64::new(0.0, 0.0),
        }
    }

    fn is_polar(&self) -> bool {
        matches!(self.coupling, Coupling::Polar { .. })
    }
}

/// One connected block of the Hamiltonian's sparsity pattern, with the drift
/// and term entries already translated to block-local indices.
#[derive(Clone, Debug)]
pub struct Block {
    pub indices: Vec<usize>,
    drift: DMatrix<C64>,
    terms: Vec<(usize, Vec<(usize, usize, C64)>)>,
}

impl Block {
    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    /// Term indices touching this block.
    pub fn term_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.iter().map(|(t, _)| *t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Platform {
    Atoms,
    Transmons,
    Custom,
}

#[derive(Clone, Debug)]
pub struct HamiltonianModel {
    platform: Platform,
    site_levels: usize,
    n_sites: usize,
    labels: Vec<String>,
    drift: SparseOp,
    terms: Vec<ControlTerm>,
    n_fields: usize,
    logical: Vec<usize>,
    top_level: Vec<usize>,
    blocks: Vec<Block>,
    block_of: Vec<usize>,
    terms_by_field: Vec<Vec<usize>>,
}

impl HamiltonianModel {
    /// Assemble a model on `n_sites` sites with `site_levels` levels each.
    /// Site 0 is the most significant digit of the basis index, and the two
    /// lowest levels of every site form the logical qubit.
    pub fn new(
        platform: Platform,
        n_sites: usize,
        site_levels: usize,
        level_names: &[&str],
        drift: SparseOp,
        terms: Vec<ControlTerm>,
        n_fields: usize,
    ) -> Result<Self> {
        if site_levels < 2 || n_sites == 0 {
            return Err(QslError::config("model needs at least one site with two levels"));
        }
        if level_names.len() != site_levels {
            return Err(QslError::config("one name per level required"));
        }
        let dim = site_levels.pow(n_sites as u32);
        let digits = |mut idx: usize| {
            let mut d = vec![0; n_sites];
            for s in (0..n_sites).rev() {
                d[s] = idx % site_levels;
                idx /= site_levels;
            }
            d
        };
        let labels = (0..dim)
            .map(|i| digits(i).iter().map(|&l| level_names[l]).collect::<String>())
            .collect();
        let logical = (0..1usize << n_sites)
            .map(|q| (0..n_sites).fold(0, |acc, s| acc * site_levels + ((q >> (n_sites - 1 - s)) & 1)))
            .collect();
        let top_level = (0..dim)
            .filter(|&i| digits(i).iter().any(|&l| l == site_levels - 1))
            .collect();

        for term in &terms {
            if let Some(f) = term.coupling.fields().find(|&f| f >= n_fields) {
                return Err(QslError::config(format!("term references missing field {f}")));
            }
        }
        let check = |op: &SparseOp| op.entries().iter().all(|&(r, c, _)| r < dim && c < dim);
        if !check(&drift) || !terms.iter().all(|t| check(&t.op)) {
            return Err(QslError::Dimension("operator entry outside the basis".into()));
        }

        let mut terms_by_field = vec![Vec::new(); n_fields];
        for (t, term) in terms.iter().enumerate() {
            for f in term.coupling.fields() {
                terms_by_field[f].push(t);
            }
        }

        let mut model = Self {
            platform,
            site_levels,
            n_sites,
            labels,
            drift,
            terms,
            n_fields,
            logical,
            top_level,
            blocks: Vec::new(),
            block_of: Vec::new(),
            terms_by_field,
        };
        model.build_blocks();
        Ok(model)
    }

    fn build_blocks(&mut self) {
        let dim = self.dim();
        let mut parent: Vec<usize> = (0..dim).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let ops = std::iter::once(&self.drift).chain(self.terms.iter().map(|t| &t.op));
        for op in ops {
            for &(r, c, _) in op.entries() {
                let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut root_to_block = vec![usize::MAX; dim];
        let mut block_of = vec![0; dim];
        let mut members: Vec<Vec<usize>> = Vec::new();
        for i in 0..dim {
            let r = find(&mut parent, i);
            if root_to_block[r] == usize::MAX {
                root_to_block[r] = members.len();
                members.push(Vec::new());
            }
            block_of[i] = root_to_block[r];
            members[block_of[i]].push(i);
        }
        let mut local = vec![0; dim];
        for m in &members {
            for (k, &i) in m.iter().enumerate() {
                local[i] = k;
            }
        }
        let mut blocks: Vec<Block> = members
            .into_iter()
            .map(|indices| {
                let n = indices.len();
                Block {
                    indices,
                    drift: DMatrix::zeros(n, n),
                    terms: Vec::new(),
                }
            })
            .collect();
        for &(r, c, v) in self.drift.entries() {
            blocks[block_of[r]].drift[(local[r], local[c])] += v;
        }
        for (t, term) in self.terms.iter().enumerate() {
            let mut per_block: Vec<Vec<(usize, usize, C64)>> = vec![Vec::new(); blocks.len()];
            for &(r, c, v) in term.op.entries() {
                per_block[block_of[r]].push((local[r], local[c], v));
            }
            for (b, entries) in per_block.into_iter().enumerate() {
                if !entries.is_empty() {
                    blocks[b].terms.push((t, entries));
                }
            }
        }
        self.blocks = blocks;
        self.block_of = block_of;
    }

    pub fn platform(&self) -> Platform {
        self.platform
    }

    pub fn dim(&self) -> usize {
        self.site_levels.pow(self.n_sites as u32)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn site_levels(&self) -> usize {
        self.site_levels
    }

    pub fn n_fields(&self) -> usize {
        self.n_fields
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn terms(&self) -> &[ControlTerm] {
        &self.terms
    }

    /// Number of logical qubits (one per site).
    pub fn n_qubits(&self) -> usize {
        self.n_sites
    }

    /// Physical basis index of logical basis state `q` (qubit 0 is the most
    /// significant bit).
    pub fn logical_index(&self, q: usize) -> usize {
        self.logical[q]
    }

    pub fn logical_indices(&self) -> &[usize] {
        &self.logical
    }

    /// Basis states with at least one site in its highest level.
    pub fn top_level_indices(&self) -> &[usize] {
        &self.top_level
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block_of(&self, index: usize) -> usize {
        self.block_of[index]
    }

    pub fn terms_for_field(&self, field: usize) -> &[usize] {
        &self.terms_by_field[field]
    }

    /// Dense `H` for one control vector.
    pub fn hamiltonian(&self, controls: &[f64]) -> DMatrix<C64> {
        let dim = self.dim();
        let mut h = self.drift.to_dense(dim);
        for term in &self.terms {
            let coeff = term.coefficient(controls);
            for &(r, c, v) in term.op.entries() {
                h[(r, c)] += coeff * v;
                if term.is_polar() {
                    h[(c, r)] += (coeff * v).conj();
                }
            }
        }
        h
    }

    /// Dense Hamiltonian restricted to block `b`.
    pub fn block_hamiltonian(&self, b: usize, controls: &[f64]) -> DMatrix<C64> {
        let block = &self.blocks[b];
        let mut h = block.drift.clone();
        for (t, entries) in &block.terms {
            let term = &self.terms[*t];
            let coeff = term.coefficient(controls);
            let polar = term.is_polar();
            for &(r, c, v) in entries {
                h[(r, c)] += coeff * v;
                if polar {
                    h[(c, r)] += (coeff * v).conj();
                }
            }
        }
        h
    }

    /// `<bra| dH/dE_field |ket>` at the given control vector.
    pub fn derivative_sandwich(&self, field: usize, controls: &[f64], bra: &[C64], ket: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for &t in &self.terms_by_field[field] {
            let term = &self.terms[t];
            let d = term.coefficient_derivative(field, controls);
            if d == C64::new(0.0, 0.0) {
                continue;
            }
            if term.is_polar() {
                for &(r, c, v) in term.op.entries() {
                    let w = d * v;
                    acc += bra[r].conj() * w * ket[c] + bra[c].conj() * w.conj() * ket[r];
                }
            } else {
                acc += d * term.op.sandwich(bra, ket);
            }
        }
        acc
    }

    /// Dense `dH/dE_field` (used by tests and diagnostics).
    pub fn derivative(&self, field: usize, controls: &[f64]) -> DMatrix<C64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for &t in &self.terms_by_field[field] {
            let term = &self.terms[t];
            let d = term.coefficient_derivative(field, controls);
            for &(r, c, v) in term.op.entries() {
                m[(r, c)] += d * v;
                if term.is_polar() {
                    m[(c, r)] += (d * v).conj();
                }
            }
        }
        m
    }
}

// ---------------------------------------------------------------------------
// Field configurations

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldConfiguration {
    AtomsParallel,
    AtomsPhase,
    AtomsSequential,
    ScFull,
    ScNoX,
    ScInteraction,
}

impl FieldConfiguration {
    pub fn is_atoms(&self) -> bool {
        matches!(
            self,
            FieldConfiguration::AtomsParallel | FieldConfiguration::AtomsPhase | FieldConfiguration::AtomsSequential
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            FieldConfiguration::AtomsParallel => "atoms_parallel",
            FieldConfiguration::AtomsPhase => "atoms_phase",
            FieldConfiguration::AtomsSequential => "atoms_sequential",
            FieldConfiguration::ScFull => "sc_full",
            FieldConfiguration::ScNoX => "sc_noX",
            FieldConfiguration::ScInteraction => "sc_interaction",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "atoms_parallel" => FieldConfiguration::AtomsParallel,
            "atoms_phase" => FieldConfiguration::AtomsPhase,
            "atoms_sequential" => FieldConfiguration::AtomsSequential,
            "sc_full" => FieldConfiguration::ScFull,
            "sc_noX" | "sc_nox" | "sc_no_x" => FieldConfiguration::ScNoX,
            "sc_interaction" => FieldConfiguration::ScInteraction,
            other => return Err(QslError::config(format!("unknown field configuration '{other}'"))),
        })
    }
}

impl fmt::Display for FieldConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What a configuration does with one control.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Assignment {
    Optimized,
    /// Optimized inside the step window, zero outside.
    Windowed(usize, usize),
    Frozen(f64),
    Zero,
}

// ---------------------------------------------------------------------------
// Neutral atoms

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomGeometry {
    Pair,
    TrianglePlaquette,
    SquarePlaquette,
}

impl AtomGeometry {
    /// Atom positions on the unit square, ordered around the plaquette.
    pub fn positions(&self) -> &'static [(i32, i32)] {
        match self {
            AtomGeometry::Pair => &[(0, 0), (1, 0)],
            AtomGeometry::TrianglePlaquette => &[(0, 0), (1, 0), (1, 1)],
            AtomGeometry::SquarePlaquette => &[(0, 0), (1, 0), (1, 1), (0, 1)],
        }
    }

    pub fn for_atoms(n: usize) -> Result<Self> {
        match n {
            2 => Ok(AtomGeometry::Pair),
            3 => Ok(AtomGeometry::TrianglePlaquette),
            4 => Ok(AtomGeometry::SquarePlaquette),
            _ => Err(QslError::config(format!("unsupported atom count {n}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMode {
    /// Equal interaction `V` for every pair.
    Pseudo2d,
    /// `V` for nearest neighbours, `V/8` across the plaquette diagonal.
    Planar2d,
}

/// Atom plaquette parameters; frequencies in rad/ns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomArrayConfig {
    pub n_atoms: usize,
    pub geometry: AtomGeometry,
    pub coupling_mode: CouplingMode,
    pub v: f64,
    pub omega_max: f64,
    pub delta_max: f64,
    pub global_fields: bool,
}

impl AtomArrayConfig {
    /// `V/2pi = 40 MHz`, `Omega_max = 0.1 V`, `Delta_max = 0.3 V`, global fields.
    pub fn standard(n_atoms: usize) -> Result<Self> {
        let v = mhz(40.0);
        Ok(Self {
            n_atoms,
            geometry: AtomGeometry::for_atoms(n_atoms)?,
            coupling_mode: CouplingMode::Pseudo2d,
            v,
            omega_max: 0.1 * v,
            delta_max: 0.3 * v,
            global_fields: true,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.geometry.positions().len() != self.n_atoms {
            return Err(QslError::config(format!(
                "geometry {:?} does not hold {} atoms",
                self.geometry, self.n_atoms
            )));
        }
        if !(self.v > 0.0) || !(self.omega_max > 0.0) || !(self.delta_max >= 0.0) {
            return Err(QslError::config(
                "atom parameters need V > 0, Omega_max > 0, Delta_max >= 0",
            ));
        }
        Ok(())
    }

    /// Interaction strength between atoms `n` and `m`.
    pub fn interaction(&self, n: usize, m: usize) -> f64 {
        let p = self.geometry.positions();
        let (dx, dy) = ((p[n].0 - p[m].0).abs(), (p[n].1 - p[m].1).abs());
        match self.coupling_mode {
            CouplingMode::Pseudo2d => self.v,
            CouplingMode::Planar2d if dx + dy == 1 => self.v,
            CouplingMode::Planar2d => self.v / ((dx * dx + dy * dy) as f64).powi(3),
        }
    }
}

const DOWN: usize = 0;
const UP: usize = 1;
const RYD: usize = 2;

fn site_projector_entries(n_sites: usize, levels: usize, site: usize, level: usize) -> Vec<usize> {
    let dim = levels.pow(n_sites as u32);
    let stride = levels.pow((n_sites - 1 - site) as u32);
    (0..dim).filter(|i| (i / stride) % levels == level).collect()
}

/// Plan for the laser and detuning controls of one configuration.
fn atom_assignments(fc: FieldConfiguration, config: &AtomArrayConfig, grid: &TimeGrid) -> Result<[Assignment; 5]> {
    // order: omega_down, phi_down, omega_up, phi_up, delta
    let half = grid.n_steps() / 2;
    let n = grid.n_steps();
    let delta = |a: Assignment| if config.delta_max > 0.0 { a } else { Assignment::Zero };
    Ok(match fc {
        FieldConfiguration::AtomsParallel => [
            Assignment::Optimized,
            Assignment::Optimized,
            Assignment::Optimized,
            Assignment::Optimized,
            delta(Assignment::Optimized),
        ],
        FieldConfiguration::AtomsPhase => [
            Assignment::Zero,
            Assignment::Zero,
            Assignment::Frozen(config.omega_max),
            Assignment::Optimized,
            delta(Assignment::Frozen(config.delta_max)),
        ],
        FieldConfiguration::AtomsSequential => {
            if half == 0 {
                return Err(QslError::config("sequential configuration needs at least two steps"));
            }
            [
                Assignment::Windowed(0, half),
                Assignment::Windowed(0, half),
                Assignment::Windowed(half, n),
                Assignment::Windowed(half, n),
                delta(Assignment::Optimized),
            ]
        }
        other => {
            return Err(QslError::config(format!(
                "configuration {other} does not apply to neutral atoms"
            )))
        }
    })
}

fn make_field(
    name: String,
    role: FieldRole,
    grid: TimeGrid,
    bounds: Option<Bounds>,
    assignment: Assignment,
) -> Result<ControlField> {
    // Guess before randomization: the interior center of the allowed range.
    let start = bounds.map_or(0.0, |b| b.center());
    Ok(match assignment {
        Assignment::Optimized => ControlField::constant(name, role, grid, start, bounds)?,
        Assignment::Windowed(a, b) => ControlField::constant(name, role, grid, start, bounds)?.with_window(a, b),
        Assignment::Frozen(v) => ControlField::constant(name, role, grid, v, bounds)?.frozen(),
        Assignment::Zero => unreachable!("zero fields are not materialized"),
    })
}

/// Build the Rydberg Hamiltonian
/// `-sum Delta_n |r_n><r_n| + sum V_nm |r_n r_m><r_n r_m|
///  + 1/2 sum_{n,l} [Omega_{l,n} e^{i phi_{l,n}} |r_n><l_n| + h.c.]`
/// with the fields prescribed by `fc`. Fields assigned zero are omitted.
pub fn build_atom_model(
    config: &AtomArrayConfig,
    fc: FieldConfiguration,
    grid: &TimeGrid,
) -> Result<(HamiltonianModel, Vec<ControlField>)> {
    config.validate()?;
    let n = config.n_atoms;
    let levels: usize = 3;
    let dim = levels.pow(n as u32);
    let plan = atom_assignments(fc, config, grid)?;

    let mut drift = SparseOp::new();
    let rydberg: Vec<Vec<usize>> = (0..n).map(|s| site_projector_entries(n, levels, s, RYD)).collect();
    for a in 0..n {
        for b in a + 1..n {
            let v = config.interaction(a, b);
            for &i in &rydberg[a] {
                if rydberg[b].binary_search(&i).is_ok() {
                    drift.push(i, i, C64::new(v, 0.0));
                }
            }
        }
    }

    let amp_bounds = Bounds::new(0.0, config.omega_max)?;
    let det_bounds = if config.delta_max > 0.0 {
        Some(Bounds::new(-config.delta_max, config.delta_max)?)
    } else {
        None
    };
    let specs: [(&str, FieldRole, Option<Bounds>); 5] = [
        ("omega_down", FieldRole::RabiAmplitude, Some(amp_bounds)),
        ("phi_down", FieldRole::LaserPhase, None),
        ("omega_up", FieldRole::RabiAmplitude, Some(amp_bounds)),
        ("phi_up", FieldRole::LaserPhase, None),
        ("delta", FieldRole::Detuning, det_bounds),
    ];

    // field index per (slot, atom)
    let mut fields = Vec::new();
    let mut index = [[None; 4]; 5];
    for (slot, (name, role, bounds)) in specs.iter().enumerate() {
        if plan[slot] == Assignment::Zero {
            continue;
        }
        if config.global_fields {
            let f = fields.len();
            fields.push(make_field(name.to_string(), *role, *grid, *bounds, plan[slot])?);
            for a in 0..n {
                index[slot][a] = Some(f);
            }
        } else {
            for a in 0..n {
                index[slot][a] = Some(fields.len());
                fields.push(make_field(
                    format!("{name}_{}", a + 1),
                    *role,
                    *grid,
                    *bounds,
                    plan[slot],
                )?);
            }
        }
    }

    let stride = |s: usize| levels.pow((n - 1 - s) as u32);
    let mut terms = Vec::new();
    for a in 0..n {
        if let Some(f) = index[4][a] {
            let mut op = SparseOp::new();
            for &i in &rydberg[a] {
                op.push(i, i, C64::new(-1.0, 0.0));
            }
            terms.push(ControlTerm {
                coupling: Coupling::Linear { field: f },
                op,
            });
        }
        for (amp_slot, phase_slot, lower) in [(0, 1, DOWN), (2, 3, UP)] {
            let Some(amplitude) = index[amp_slot][a] else { continue };
            let mut op = SparseOp::new();
            for i in site_projector_entries(n, levels, a, lower) {
                op.push(i + (RYD - lower) * stride(a), i, C64::new(1.0, 0.0));
            }
            terms.push(ControlTerm {
                coupling: Coupling::Polar {
                    amplitude,
                    phase: index[phase_slot][a],
                },
                op,
            });
        }
    }
    debug_assert!(drift.entries().iter().all(|&(r, _, _)| r < dim));
    let model = HamiltonianModel::new(Platform::Atoms, n, levels, &["d", "u", "r"], drift, terms, fields.len())?;
    Ok((model, fields))
}

// ---------------------------------------------------------------------------
// Transmons

/// Transmon plaquette parameters; frequencies in rad/ns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmonPlaquetteConfig {
    pub n_transmons: usize,
    pub levels_per_transmon: usize,
    /// Tunable window `(lo, hi)` of each transmon frequency.
    pub omega_windows: Vec<(f64, f64)>,
    pub alpha: Vec<f64>,
    pub eta: f64,
    pub g_bounds: (f64, f64),
    pub omega_rot: f64,
    pub x_drive_bound: f64,
    pub nnn_coupling: bool,
}

/// Default frequency windows (MHz) and anharmonicities (MHz) per transmon.
/// Alternating idle windows inside 6700-7100 MHz, anharmonicities near 200 MHz.
pub const DEFAULT_WINDOWS_MHZ: [(f64, f64); 4] =
    [(6700.0, 7000.0), (6800.0, 7100.0), (6700.0, 7000.0), (6800.0, 7100.0)];
pub const DEFAULT_ALPHA_MHZ: [f64; 4] = [200.0, 205.0, 195.0, 210.0];

impl TransmonPlaquetteConfig {
    pub fn standard(n_transmons: usize) -> Result<Self> {
        if !(2..=4).contains(&n_transmons) {
            return Err(QslError::config(format!("unsupported transmon count {n_transmons}")));
        }
        let omega_windows: Vec<(f64, f64)> = DEFAULT_WINDOWS_MHZ[..n_transmons]
            .iter()
            .map(|&(lo, hi)| (mhz(lo), mhz(hi)))
            .collect();
        let omega_rot = omega_windows.iter().map(|(lo, hi)| 0.5 * (lo + hi)).sum::<f64>() / n_transmons as f64;
        Ok(Self {
            n_transmons,
            levels_per_transmon: 5,
            omega_windows,
            alpha: DEFAULT_ALPHA_MHZ[..n_transmons].iter().map(|&a| mhz(a)).collect(),
            eta: mhz(200.0),
            g_bounds: (mhz(-40.0), mhz(5.0)),
            omega_rot,
            x_drive_bound: mhz(50.0),
            nnn_coupling: false,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_transmons;
        if !(2..=4).contains(&n) {
            return Err(QslError::config(format!("unsupported transmon count {n}")));
        }
        if self.levels_per_transmon < 3 {
            return Err(QslError::config("transmons need at least three levels"));
        }
        if self.omega_windows.len() != n || self.alpha.len() != n {
            return Err(QslError::config("one frequency window and anharmonicity per transmon"));
        }
        if self.omega_windows.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(QslError::config("frequency windows need lo < hi"));
        }
        if self.eta == 0.0 {
            return Err(QslError::config("eta must be nonzero"));
        }
        let (gmin, gmax) = self.g_bounds;
        if !(gmin < 0.0 && 0.0 <= gmax) {
            return Err(QslError::config("coupling bounds need g_min < 0 <= g_max"));
        }
        if !(self.x_drive_bound > 0.0) {
            return Err(QslError::config("x_drive_bound must be positive"));
        }
        Ok(())
    }

    /// Coupled pairs (0-based): the ring 1-2-3-4-1 restricted to existing
    /// transmons, plus the diagonals 1-3 and 2-4 when enabled.
    pub fn coupled_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n_transmons;
        let mut pairs: Vec<(usize, usize)> = [(0, 1), (1, 2), (2, 3), (3, 0)]
            .into_iter()
            .filter(|&(a, b)| a < n && b < n)
            .collect();
        if self.nnn_coupling {
            pairs.extend([(0, 2), (1, 3)].into_iter().filter(|&(a, b)| a < n && b < n));
        }
        pairs
    }
}

struct Ladder {
    n: usize,
    levels: usize,
}

impl Ladder {
    fn dim(&self) -> usize {
        self.levels.pow(self.n as u32)
    }

    fn stride(&self, site: usize) -> usize {
        self.levels.pow((self.n - 1 - site) as u32)
    }

    fn level(&self, idx: usize, site: usize) -> usize {
        (idx / self.stride(site)) % self.levels
    }

    /// `b_site` as sparse entries `(row, col, sqrt(k))`.
    fn lowering(&self, site: usize) -> Vec<(usize, usize, f64)> {
        (0..self.dim())
            .filter_map(|i| {
                let k = self.level(i, site);
                (k > 0).then(|| (i - self.stride(site), i, (k as f64).sqrt()))
            })
            .collect()
    }

    fn number(&self, idx: usize, site: usize) -> f64 {
        self.level(idx, site) as f64
    }
}

fn transmon_assignments(fc: FieldConfiguration, config: &TransmonPlaquetteConfig) -> Result<[Assignment; 3]> {
    // order: omega_n, g_nm, x-drive
    Ok(match fc {
        FieldConfiguration::ScFull => [Assignment::Optimized; 3],
        FieldConfiguration::ScNoX => [Assignment::Optimized, Assignment::Optimized, Assignment::Zero],
        FieldConfiguration::ScInteraction => {
            let g = config.g_bounds.0;
            [Assignment::Optimized, Assignment::Frozen(g), Assignment::Zero]
        }
        other => {
            return Err(QslError::config(format!(
                "configuration {other} does not apply to transmons"
            )))
        }
    })
}

/// Build the rotating-frame transmon Hamiltonian
/// `sum_n [(omega_n - omega_rot) b+b - alpha_n/2 b+b+bb]
///  + sum_n 1/2 [b (X_re + i X_im) + b+ (X_re - i X_im)]
///  + sum_<nm> [g_nm (b+_n b_m + h.c.) + g_nm^2/|eta| b+_n b_n b+_m b_m]`.
pub fn build_transmon_model(
    config: &TransmonPlaquetteConfig,
    fc: FieldConfiguration,
    grid: &TimeGrid,
) -> Result<(HamiltonianModel, Vec<ControlField>)> {
    config.validate()?;
    let ladder = Ladder {
        n: config.n_transmons,
        levels: config.levels_per_transmon,
    };
    let dim = ladder.dim();
    let plan = transmon_assignments(fc, config)?;

    let mut drift = SparseOp::new();
    for i in 0..dim {
        let mut e = 0.0;
        for s in 0..ladder.n {
            let k = ladder.number(i, s);
            e += -config.omega_rot * k - 0.5 * config.alpha[s] * k * (k - 1.0);
        }
        drift.push(i, i, C64::new(e, 0.0));
    }

    let mut fields = Vec::new();
    let mut terms = Vec::new();
    for s in 0..ladder.n {
        let (lo, hi) = config.omega_windows[s];
        let f = fields.len();
        fields.push(make_field(
            format!("omega_{}", s + 1),
            FieldRole::QubitFrequency,
            *grid,
            Some(Bounds::new(lo, hi)?),
            plan[0],
        )?);
        let mut op = SparseOp::new();
        for i in 0..dim {
            op.push(i, i, C64::new(ladder.number(i, s), 0.0));
        }
        terms.push(ControlTerm {
            coupling: Coupling::Linear { field: f },
            op,
        });
    }

    if plan[2] != Assignment::Zero {
        let xb = Bounds::new(-config.x_drive_bound, config.x_drive_bound)?;
        for s in 0..ladder.n {
            let b = ladder.lowering(s);
            let re = fields.len();
            fields.push(make_field(
                format!("xre_{}", s + 1),
                FieldRole::XDriveRe,
                *grid,
                Some(xb),
                plan[2],
            )?);
            let im = fields.len();
            fields.push(make_field(
                format!("xim_{}", s + 1),
                FieldRole::XDriveIm,
                *grid,
                Some(xb),
                plan[2],
            )?);
            let mut op_re = SparseOp::new();
            let mut op_im = SparseOp::new();
            for &(r, c, v) in &b {
                // (b + b+)/2 and i(b - b+)/2
                op_re.push(r, c, C64::new(0.5 * v, 0.0));
                op_re.push(c, r, C64::new(0.5 * v, 0.0));
                op_im.push(r, c, C64::new(0.0, 0.5 * v));
                op_im.push(c, r, C64::new(0.0, -0.5 * v));
            }
            terms.push(ControlTerm {
                coupling: Coupling::Linear { field: re },
                op: op_re,
            });
            terms.push(ControlTerm {
                coupling: Coupling::Linear { field: im },
                op: op_im,
            });
        }
    }

    let (gmin, gmax) = config.g_bounds;
    let g_bounds = Bounds::new(gmin, gmax)?;
    for (a, b) in config.coupled_pairs() {
        let f = fields.len();
        fields.push(make_field(
            format!("g_{}{}", a + 1, b + 1),
            FieldRole::Coupling,
            *grid,
            Some(g_bounds),
            plan[1],
        )?);
        let mut hop = SparseOp::new();
        // b+_a b_b + b_a b+_b
        for &(r, c, v) in &ladder.lowering(b) {
            // r = c lowered on site b; raise site a from r
            let ka = ladder.level(r, a);
            if ka + 1 < ladder.levels {
                let target = r + ladder.stride(a);
                let amp = v * ((ka + 1) as f64).sqrt();
                hop.push(target, c, C64::new(amp, 0.0));
                hop.push(c, target, C64::new(amp, 0.0));
            }
        }
        let mut kerr = SparseOp::new();
        for i in 0..dim {
            kerr.push(i, i, C64::new(ladder.number(i, a) * ladder.number(i, b), 0.0));
        }
        terms.push(ControlTerm {
            coupling: Coupling::Linear { field: f },
            op: hop,
        });
        terms.push(ControlTerm {
            coupling: Coupling::Quadratic {
                field: f,
                scale: 1.0 / config.eta.abs(),
            },
            op: kerr,
        });
    }

    let names: Vec<String> = (0..ladder.levels).map(|k| k.to_string()).collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let model = HamiltonianModel::new(
        Platform::Transmons,
        ladder.n,
        ladder.levels,
        &names,
        drift,
        terms,
        fields.len(),
    )?;
    Ok((model, fields))
}

/// Either platform's plaquette parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlatformConfig {
    Atoms(AtomArrayConfig),
    Transmons(TransmonPlaquetteConfig),
}

impl PlatformConfig {
    pub fn build(&self, fc: FieldConfiguration, grid: &TimeGrid) -> Result<(HamiltonianModel, Vec<ControlField>)> {
        match self {
            PlatformConfig::Atoms(c) => build_atom_model(c, fc, grid),
            PlatformConfig::Transmons(c) => build_transmon_model(c, fc, grid),
        }
    }

    /// Default time step in ns.
    pub fn default_dt(&self) -> f64 {
        match self {
            PlatformConfig::Atoms(_) => 1.0,
            PlatformConfig::Transmons(_) => 0.02,
        }
    }

    /// Default inclusive range of Fourier components of random guesses.
    pub fn default_m_range(&self) -> (u32, u32) {
        match self {
            PlatformConfig::Atoms(_) => (1, 20),
            PlatformConfig::Transmons(_) => (1, 40),
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            PlatformConfig::Atoms(c) => c.n_atoms,
            PlatformConfig::Transmons(c) => c.n_transmons,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PlatformConfig::Atoms(c) => c.validate(),
            PlatformConfig::Transmons(c) => c.validate(),
        }
    }
}

/// Recover the physical drive amplitude and frequency from the auxiliary
/// rotating-frame fields, inverting
/// `X_re + i X_im = Omega(t) exp(-i (omega_rot - omega_bar(t)) t)`.
///
/// The phase is unwrapped along the grid; samples with zero amplitude report
/// `omega_rot`.
pub fn auxiliary_to_lab_fields(re: &ControlField, im: &ControlField, omega_rot: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if re.grid != im.grid {
        return Err(QslError::config("auxiliary fields must share a grid"));
    }
    let grid = re.grid;
    let mut amplitude = Vec::with_capacity(grid.n_steps());
    let mut frequency = Vec::with_capacity(grid.n_steps());
    let mut last: Option<f64> = None;
    for (j, (&x, &y)) in re.values.iter().zip(&im.values).enumerate() {
        let a = x.hypot(y);
        amplitude.push(a);
        if a == 0.0 {
            frequency.push(omega_rot);
            continue;
        }
        let raw = y.atan2(x);
        let phase = match last {
            None => raw,
            Some(prev) => prev + (raw - prev + PI).rem_euclid(TAU) - PI,
        };
        last = Some(phase);
        frequency.push(omega_rot + phase / grid.midpoint(j));
    }
    Ok((amplitude, frequency))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::new(0.0, 100.0, 10).unwrap()
    }

    fn controls(fields: &[ControlField], step: usize) -> Vec<f64> {
        fields.iter().map(|f| f.values[step]).collect()
    }

    fn index_of(model: &HamiltonianModel, label: &str) -> usize {
        model.labels().iter().position(|l| l == label).unwrap()
    }

    fn hermiticity_error(h: &DMatrix<C64>) -> f64 {
        (h - h.adjoint()).norm()
    }

    #[test]
    fn atom_interaction_on_doubly_excited_state() {
        let cfg = AtomArrayConfig::standard(2).unwrap();
        let (model, fields) = build_atom_model(&cfg, FieldConfiguration::AtomsParallel, &grid()).unwrap();
        let zeros = vec![0.0; fields.len()];
        let h = model.hamiltonian(&zeros);
        let rr = index_of(&model, "rr");
        assert!((h[(rr, rr)].re - mhz(40.0)).abs() < 1e-12);
        let off: f64 = (0..9)
            .flat_map(|i| (0..9).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| h[(i, j)].norm())
            .sum();
        assert_eq!(off, 0.0);
    }

    #[test]
    fn rabi_coupling_has_half_amplitude() {
        let cfg = AtomArrayConfig::standard(2).unwrap();
        let (model, fields) = build_atom_model(&cfg, FieldConfiguration::AtomsParallel, &grid()).unwrap();
        let mut c = vec![0.0; fields.len()];
        let up = fields.iter().position(|f| f.name == "omega_up").unwrap();
        c[up] = cfg.omega_max;
        let h = model.hamiltonian(&c);
        let (r, u) = (index_of(&model, "rd"), index_of(&model, "ud"));
        assert!((h[(r, u)].norm() - cfg.omega_max / 2.0).abs() < 1e-15);
    }

    #[test]
    fn planar_diagonal_is_one_eighth() {
        let mut cfg = AtomArrayConfig::standard(4).unwrap();
        cfg.coupling_mode = CouplingMode::Planar2d;
        let (model, fields) = build_atom_model(&cfg, FieldConfiguration::AtomsPhase, &grid()).unwrap();
        let mut c = controls(&fields, 0);
        c.iter_mut().for_each(|x| *x = 0.0);
        let h = model.hamiltonian(&c);
        let diag = index_of(&model, "rdrd");
        let nn = index_of(&model, "rrdd");
        assert!((h[(diag, diag)].re - cfg.v / 8.0).abs() < 1e-14);
        assert!((h[(nn, nn)].re - cfg.v).abs() < 1e-14);
    }

    #[test]
    fn phase_configuration_leaves_all_down_alone() {
        let cfg = AtomArrayConfig::standard(3).unwrap();
        let (model, fields) = build_atom_model(&cfg, FieldConfiguration::AtomsPhase, &grid()).unwrap();
        assert_eq!(fields.len(), 3);
        assert!(fields.iter().filter(|f| !f.frozen).all(|f| f.name == "phi_up"));
        let ddd = model.logical_index(0);
        let b = model.block_of(ddd);
        assert_eq!(model.blocks()[b].dim(), 1);
    }

    #[test]
    fn sequential_configuration_windows() {
        let cfg = AtomArrayConfig::standard(2).unwrap();
        let (_, fields) = build_atom_model(&cfg, FieldConfiguration::AtomsSequential, &grid()).unwrap();
        let down = fields.iter().find(|f| f.name == "omega_down").unwrap();
        let up = fields.iter().find(|f| f.name == "omega_up").unwrap();
        assert_eq!(down.window, Some((0, 5)));
        assert_eq!(up.window, Some((5, 10)));
        assert!(up.values[..5].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn site_dependent_fields() {
        let mut cfg = AtomArrayConfig::standard(2).unwrap();
        cfg.global_fields = false;
        let (_, fields) = build_atom_model(&cfg, FieldConfiguration::AtomsParallel, &grid()).unwrap();
        assert_eq!(fields.len(), 10);
        assert!(fields.iter().any(|f| f.name == "phi_up_2"));
    }

    #[test]
    fn atoms_reject_transmon_configuration() {
        let cfg = AtomArrayConfig::standard(2).unwrap();
        assert!(build_atom_model(&cfg, FieldConfiguration::ScFull, &grid()).is_err());
    }

    #[test]
    fn transmon_second_level_energy() {
        let cfg = TransmonPlaquetteConfig::standard(2).unwrap();
        let (model, fields) = build_transmon_model(&cfg, FieldConfiguration::ScFull, &grid()).unwrap();
        let mut c = vec![0.0; fields.len()];
        for (k, f) in fields.iter().enumerate() {
            if f.role == FieldRole::QubitFrequency {
                c[k] = cfg.omega_rot;
            }
        }
        let h = model.hamiltonian(&c);
        let i = index_of(&model, "20");
        assert!((h[(i, i)].re + cfg.alpha[0]).abs() < 1e-12);
    }

    #[test]
    fn transmon_cross_kerr() {
        let cfg = TransmonPlaquetteConfig::standard(2).unwrap();
        let (model, fields) = build_transmon_model(&cfg, FieldConfiguration::ScNoX, &grid()).unwrap();
        let mut c = vec![0.0; fields.len()];
        for (k, f) in fields.iter().enumerate() {
            if f.role == FieldRole::QubitFrequency {
                c[k] = cfg.omega_rot;
            }
        }
        let g = mhz(-30.0);
        let gk = fields.iter().position(|f| f.name == "g_12").unwrap();
        c[gk] = g;
        let h = model.hamiltonian(&c);
        let i = index_of(&model, "11");
        assert!((h[(i, i)].re - g * g / cfg.eta.abs()).abs() < 1e-12);
        let (a, b) = (index_of(&model, "10"), index_of(&model, "01"));
        assert!((h[(a, b)].re - g).abs() < 1e-14);
        let (a, b) = (index_of(&model, "11"), index_of(&model, "02"));
        assert!((h[(a, b)].re - g * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn transmon_diagonal_coupling() {
        let mut cfg = TransmonPlaquetteConfig::standard(4).unwrap();
        cfg.levels_per_transmon = 3;
        cfg.nnn_coupling = true;
        let (model, fields) = build_transmon_model(&cfg, FieldConfiguration::ScNoX, &grid()).unwrap();
        assert!(fields.iter().any(|f| f.name == "g_13"));
        assert!(fields.iter().any(|f| f.name == "g_24"));
        let mut c = vec![0.0; fields.len()];
        c[fields.iter().position(|f| f.name == "g_13").unwrap()] = 1.0;
        let h = model.hamiltonian(&c);
        let (a, b) = (index_of(&model, "1000"), index_of(&model, "0010"));
        assert!((h[(a, b)].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn interaction_configuration_freezes_coupling() {
        let cfg = TransmonPlaquetteConfig::standard(2).unwrap();
        let (_, fields) = build_transmon_model(&cfg, FieldConfiguration::ScInteraction, &grid()).unwrap();
        let g = fields.iter().find(|f| f.name == "g_12").unwrap();
        assert!(g.frozen);
        assert!(g.values.iter().all(|&v| v == mhz(-40.0)));
        assert_eq!(fields.iter().filter(|f| !f.frozen).count(), 2);
    }

    #[test]
    fn excitation_blocks_without_drive() {
        let cfg = TransmonPlaquetteConfig::standard(2).unwrap();
        let (model, _) = build_transmon_model(&cfg, FieldConfiguration::ScInteraction, &grid()).unwrap();
        let mut sizes: Vec<usize> = model.blocks().iter().map(Block::dim).collect();
        sizes.sort();
        assert_eq!(sizes, vec![1, 1, 2, 2, 3, 3, 4, 4, 5]);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let cfg = TransmonPlaquetteConfig::standard(2).unwrap();
        let (model, fields) = build_transmon_model(&cfg, FieldConfiguration::ScFull, &grid()).unwrap();
        let c: Vec<f64> = fields.iter().map(|f| f.values[0] * 1.01 + 0.003).collect();
        for k in 0..fields.len() {
            let h = 1e-6;
            let mut p = c.clone();
            p[k] += h;
            let mut m = c.clone();
            m[k] -= h;
            let fd = (model.hamiltonian(&p) - model.hamiltonian(&m)) / C64::new(2.0 * h, 0.0);
            assert!((fd - model.derivative(k, &c)).norm() < 1e-6, "field {k}");
        }
    }

    #[test]
    fn auxiliary_fields_constant_phase() {
        let g = grid();
        let re = ControlField::constant("re", FieldRole::XDriveRe, g, 0.2, None).unwrap();
        let im = ControlField::constant("im", FieldRole::XDriveIm, g, 0.0, None).unwrap();
        let (a, w) = auxiliary_to_lab_fields(&re, &im, 5.0).unwrap();
        assert!(a.iter().all(|&x| x == 0.2));
        assert!(w.iter().all(|&x| (x - 5.0).abs() < 1e-15));
        let zero = ControlField::constant("re", FieldRole::XDriveRe, g, 0.0, None).unwrap();
        let (a, w) = auxiliary_to_lab_fields(&zero, &im, 5.0).unwrap();
        assert!(a.iter().all(|&x| x == 0.0));
        assert!(w.iter().all(|&x| x == 5.0));
    }

    #[test]
    fn auxiliary_fields_detuned_drive() {
        // X_re + i X_im = A e^{-i d t}  =>  omega_rot - omega_bar = d
        let g = TimeGrid::new(0.0, 50.0, 5000).unwrap();
        let (amp, d, rot) = (0.3, 0.2, 40.0);
        let re = ControlField::from_fn("re", FieldRole::XDriveRe, g, None, |t| amp * (d * t).cos()).unwrap();
        let im = ControlField::from_fn("im", FieldRole::XDriveIm, g, None, |t| -amp * (d * t).sin()).unwrap();
        let (a, w) = auxiliary_to_lab_fields(&re, &im, rot).unwrap();
        assert!(a.iter().all(|&x| (x - amp).abs() < 1e-12));
        assert!(w.iter().all(|&x| (x - (rot - d)).abs() < 1e-9));
    }

    #[test]
    fn hermitian_for_random_controls() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut cfg = AtomArrayConfig::standard(3).unwrap();
        cfg.global_fields = false;
        let (atoms, af) = build_atom_model(&cfg, FieldConfiguration::AtomsParallel, &grid()).unwrap();
        let tcfg = TransmonPlaquetteConfig::standard(3).unwrap();
        let (sc, sf) = build_transmon_model(&tcfg, FieldConfiguration::ScFull, &grid()).unwrap();
        for _ in 0..100 {
            let c: Vec<f64> = af.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
            assert!(hermiticity_error(&atoms.hamiltonian(&c)) < 1e-12);
            let c: Vec<f64> = sf.iter().map(|_| rng.gen_range(-50.0..50.0)).collect();
            assert!(hermiticity_error(&sc.hamiltonian(&c)) < 1e-12);
        }
    }
}
