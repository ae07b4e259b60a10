//! The model zoo.
//!
//! Every model lives on a cell lattice Z^d. A cell holds `atoms` sub-sites
//! and its value is the base-`base_values` code Σ_a v_a·base^a of the atom
//! values. Unblocked cubic models have one atom per cell; period-2 models
//! (antiferromagnetic EA, FA-1B) use 2^d atoms so their ground states are
//! constant cell values; BCC/FCC/HCP hard-core models use crystallographic
//! cells. All bonds join atoms in the same or an L∞-adjacent cell.
//!
//! The site energy of a cell is Σ_α (h^α + η^α_s) g^α_s with every bond
//! split half-and-half between its endpoints.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::contours::{self, Contour};
use crate::disorder::{DistributionSpec, QuenchedConfig, RandomField};
use crate::error::{LabError, Result};
use crate::lattice::{box_sites, BlockingSpec, Grid, Region, Site};
use crate::seeds;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    Rfim,
    Rfpm,
    Ea,
    Fa1b,
    HardcoreGraph,
    ContinuousIsing,
}

impl ModelName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelName::Rfim => "rfim",
            ModelName::Rfpm => "rfpm",
            ModelName::Ea => "ea",
            ModelName::Fa1b => "fa1b",
            ModelName::HardcoreGraph => "hardcore_graph",
            ModelName::ContinuousIsing => "continuous_ising",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedLattice {
    Bcc,
    Fcc,
    Hcp,
}

/// Explicit cell graph: `bonds` entries are `[atom_a, atom_b, dx, dy, dz]`
/// meaning atom `a` of cell s bonds with atom `b` of cell s + (dx, dy, dz).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineGraph {
    pub atoms: usize,
    pub bonds: Vec<[i32; 5]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LatticeGraphSpec {
    Named(NamedLattice),
    Inline(InlineGraph),
}

fn default_one() -> f64 {
    1.0
}
fn default_q() -> u32 {
    3
}
fn default_jbar() -> f64 {
    1.0
}
fn default_gamma() -> f64 {
    f64::INFINITY
}
fn default_delta() -> f64 {
    0.5
}
fn default_nodes() -> usize {
    32
}

/// Declarative model parameters. Keys mirror the model declaration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub model: ModelName,
    pub d: usize,
    #[serde(rename = "J", default = "default_one")]
    pub j: f64,
    #[serde(rename = "Q", default = "default_q")]
    pub q: u32,
    #[serde(rename = "Jbar", default = "default_jbar")]
    pub jbar: f64,
    #[serde(default = "default_one")]
    pub mu: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub lattice_graph: Option<LatticeGraphSpec>,
    #[serde(default = "default_nodes")]
    pub quad_nodes: usize,
}

impl ModelParams {
    pub fn new(model: ModelName, d: usize) -> ModelParams {
        ModelParams {
            model,
            d,
            j: 1.0,
            q: default_q(),
            jbar: 1.0,
            mu: 1.0,
            gamma: f64::INFINITY,
            delta: 0.5,
            lattice_graph: None,
            quad_nodes: default_nodes(),
        }
    }
    pub fn rfim(d: usize, j: f64) -> ModelParams {
        ModelParams { j, ..ModelParams::new(ModelName::Rfim, d) }
    }
    pub fn rfpm(d: usize, q: u32, j: f64) -> ModelParams {
        ModelParams { j, q, ..ModelParams::new(ModelName::Rfpm, d) }
    }
    pub fn ea(d: usize, jbar: f64) -> ModelParams {
        ModelParams { jbar, ..ModelParams::new(ModelName::Ea, d) }
    }
    pub fn fa1b(d: usize, mu: f64, gamma: f64) -> ModelParams {
        ModelParams { mu, gamma, ..ModelParams::new(ModelName::Fa1b, d) }
    }
    pub fn hardcore_graph(lattice: NamedLattice, mu: f64) -> ModelParams {
        ModelParams {
            mu,
            lattice_graph: Some(LatticeGraphSpec::Named(lattice)),
            ..ModelParams::new(ModelName::HardcoreGraph, 3)
        }
    }
    pub fn continuous_ising(d: usize, j: f64, delta: f64) -> ModelParams {
        ModelParams { j, delta, ..ModelParams::new(ModelName::ContinuousIsing, d) }
    }
}

/// One bond leaving an atom. `axis` is set on cubic lattices: `(i, ±1)`
/// for the bond along ±e_i.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bond {
    pub cell: Site,
    pub atom: usize,
    pub axis: Option<(usize, i32)>,
}

/// Atoms of one cell and their bonds.
#[derive(Clone, Debug, PartialEq)]
pub struct CellGraph {
    pub dim: usize,
    pub atoms: usize,
    pub bonds: Vec<Vec<Bond>>,
    /// Offsets of the atoms on the original cubic lattice, when cells block Z^d.
    pub sub_offsets: Option<Vec<Site>>,
    pub period: usize,
    /// Real-space atom positions for crystallographic cells.
    pub positions: Option<Vec<[f64; 3]>>,
    /// Real-space cell vectors for crystallographic cells.
    pub vectors: Option<[[f64; 3]; 3]>,
}

impl CellGraph {
    /// Z^d with cells of `period^d` sites and nearest-neighbour (L1) bonds.
    pub fn cubic(dim: usize, period: usize) -> CellGraph {
        let p = period as i32;
        let offs: Vec<Site> =
            box_sites(dim, Site::ORIGIN, Site::new(&vec![p - 1; dim])).collect();
        let index_of = |o: Site| offs.iter().position(|x| *x == o).unwrap();
        let mut bonds = Vec::with_capacity(offs.len());
        for o in &offs {
            let mut v = Vec::with_capacity(2 * dim);
            for i in 0..dim {
                for sign in [1, -1] {
                    let t = o.add(Site::unit(dim, i, sign));
                    let mut cell = Site::ORIGIN;
                    let mut rem = Site::ORIGIN;
                    for a in 0..dim {
                        cell.0[a] = t.0[a].div_euclid(p);
                        rem.0[a] = t.0[a].rem_euclid(p);
                    }
                    v.push(Bond { cell, atom: index_of(rem), axis: Some((i, sign)) });
                }
            }
            bonds.push(v);
        }
        CellGraph {
            dim,
            atoms: offs.len(),
            bonds,
            sub_offsets: Some(offs),
            period,
            positions: None,
            vectors: None,
        }
    }

    /// Nearest-neighbour graph of a crystal given by lattice vectors and a basis.
    pub fn crystal(vectors: [[f64; 3]; 3], basis: &[[f64; 3]]) -> Result<CellGraph> {
        let pos = |cell: [i32; 3], atom: usize| -> [f64; 3] {
            let mut p = basis[atom];
            for (k, v) in vectors.iter().enumerate() {
                for c in 0..3 {
                    p[c] += cell[k] as f64 * v[c];
                }
            }
            p
        };
        let dist = |a: [f64; 3], b: [f64; 3]| {
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
        };
        let mut candidates = Vec::new();
        let mut dmin = f64::INFINITY;
        for a in 0..basis.len() {
            let pa = pos([0, 0, 0], a);
            for cell in box_sites(3, Site::new(&[-2, -2, -2]), Site::new(&[2, 2, 2])) {
                for b in 0..basis.len() {
                    if cell == Site::ORIGIN && a == b {
                        continue;
                    }
                    let r = dist(pa, pos(cell.0, b));
                    dmin = dmin.min(r);
                    candidates.push((a, cell, b, r));
                }
            }
        }
        let mut bonds = vec![Vec::new(); basis.len()];
        for (a, cell, b, r) in candidates {
            if r <= dmin * (1.0 + 1e-9) {
                if cell.linf() > 1 {
                    return Err(LabError::Parameter(
                        "nearest-neighbour bond spans more than one cell".into(),
                    ));
                }
                bonds[a].push(Bond { cell, atom: b, axis: None });
            }
        }
        Ok(CellGraph {
            dim: 3,
            atoms: basis.len(),
            bonds,
            sub_offsets: None,
            period: 1,
            positions: Some(basis.to_vec()),
            vectors: Some(vectors),
        })
    }

    pub fn named(lattice: NamedLattice) -> CellGraph {
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let g = match lattice {
            NamedLattice::Bcc => CellGraph::crystal(id, &[[0.0, 0.0, 0.0], [0.5, 0.5, 0.5]]),
            NamedLattice::Fcc => CellGraph::crystal(
                id,
                &[[0.0, 0.0, 0.0], [0.5, 0.5, 0.0], [0.5, 0.0, 0.5], [0.0, 0.5, 0.5]],
            ),
            NamedLattice::Hcp => {
                // 2×2×1 supercell of the primitive hexagonal cell, so that
                // the four sublattice ground states are cell-periodic.
                let s3 = 3f64.sqrt();
                let s6 = 6f64.sqrt();
                let a1 = [s3 / 2.0, 0.5, 0.0];
                let a2 = [s3 / 2.0, -0.5, 0.0];
                let a3 = [0.0, 0.0, 2.0 * s6 / 3.0];
                let b = [s3 / 3.0, 0.0, s6 / 3.0];
                let mut basis = Vec::new();
                for p in [[0.0, 0.0, 0.0], b] {
                    for i in 0..2 {
                        for j in 0..2 {
                            let mut x = p;
                            for c in 0..3 {
                                x[c] += i as f64 * a1[c] + j as f64 * a2[c];
                            }
                            basis.push(x);
                        }
                    }
                }
                let v1 = [2.0 * a1[0], 2.0 * a1[1], 0.0];
                let v2 = [2.0 * a2[0], 2.0 * a2[1], 0.0];
                CellGraph::crystal([v1, v2, a3], &basis)
            }
        };
        g.expect("built-in crystal has single-cell bonds")
    }

    pub fn inline(g: &InlineGraph) -> Result<CellGraph> {
        if g.atoms == 0 {
            return Err(LabError::Parameter("lattice_graph.atoms must be positive".into()));
        }
        let mut bonds = vec![Vec::new(); g.atoms];
        for b in &g.bonds {
            let (a, t) = (b[0] as usize, b[1] as usize);
            let cell = Site::new(&b[2..5]);
            if a >= g.atoms || t >= g.atoms || cell.linf() > 1 || (a == t && cell == Site::ORIGIN) {
                return Err(LabError::Parameter(format!("lattice_graph bond {b:?} is malformed")));
            }
            if !bonds[a].iter().any(|x: &Bond| x.atom == t && x.cell == cell) {
                bonds[a].push(Bond { cell, atom: t, axis: None });
            }
            let back = Site::ORIGIN.sub(cell);
            if !bonds[t].iter().any(|x: &Bond| x.atom == a && x.cell == back) {
                bonds[t].push(Bond { cell: back, atom: a, axis: None });
            }
        }
        Ok(CellGraph { dim: 3, atoms: g.atoms, bonds, sub_offsets: None, period: 1, positions: None, vectors: None })
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.bonds[atom].len()
    }
}

/// Interaction family with its couplings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kind {
    Ising { j: f64 },
    Potts { j: f64, q: u32 },
    Ea { jbar: f64 },
    HardCore { mu: f64, gamma: f64 },
    Continuous { j: f64, delta: f64 },
}

/// Spin configuration on a box of cells, equal to `background` elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinConfig {
    pub grid: Grid<u32>,
    pub background: u32,
}

impl SpinConfig {
    pub fn constant(dim: usize, lo: Site, hi: Site, value: u32) -> SpinConfig {
        SpinConfig { grid: Grid::new(dim, lo, hi, value), background: value }
    }

    #[inline]
    pub fn value(&self, s: Site) -> u32 {
        self.grid.get(s).copied().unwrap_or(self.background)
    }

    pub fn set(&mut self, s: Site, v: u32) {
        self.grid.set(s, v)
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }
}

/// Boundary condition outside the region of interest.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryCondition {
    Ground(usize),
    Config(SpinConfig),
}

#[derive(Clone, Debug)]
pub struct ModelInstance {
    pub params: ModelParams,
    pub dim: usize,
    pub kind: Kind,
    pub graph: CellGraph,
    pub blocking: Option<BlockingSpec>,
    /// Values of one atom.
    pub base_values: u32,
    /// Values of one cell.
    pub n_values: u32,
    pub ground_states: Vec<u32>,
    pub ground_labels: Vec<String>,
    pub e_g: f64,
    pub declared_rho: Option<f64>,
    pub slots_per_atom: usize,
    /// Quenched parameter families per atom.
    pub n_beta: usize,
    digits: Vec<u8>,
    /// Per atom: (neighbourhood index, atom) of every bond.
    nbr: Vec<Vec<(usize, usize)>>,
    center: usize,
}

/// Index of an offset in {−1,0,1}^d.
#[inline]
pub fn offset_index(d: usize, o: Site) -> usize {
    let mut idx = 0;
    for i in (0..d).rev() {
        idx = idx * 3 + (o.0[i] + 1) as usize;
    }
    idx
}

/// Builds a model from its declaration.
pub fn make_model(params: &ModelParams) -> Result<ModelInstance> {
    let p = params;
    let bad = |m: &str| Err(LabError::Parameter(format!("{}: {m}", p.model.as_str())));
    if !(1..=3).contains(&p.d) {
        return bad("d must lie in 1..=3");
    }
    let d = p.d;
    let (kind, graph, base, n_beta, spa) = match p.model {
        ModelName::Rfim => {
            if !(p.j > 0.0) {
                return bad("requires J > 0");
            }
            (Kind::Ising { j: p.j }, CellGraph::cubic(d, 1), 2, 1, 1)
        }
        ModelName::Rfpm => {
            if p.q < 2 {
                return bad("requires Q ≥ 2");
            }
            if !(p.j > 0.0) {
                return bad("requires J > 0");
            }
            (Kind::Potts { j: p.j, q: p.q }, CellGraph::cubic(d, 1), p.q, p.q as usize, p.q as usize)
        }
        ModelName::Ea => {
            if p.jbar == 0.0 || !p.jbar.is_finite() {
                return bad("requires finite Jbar ≠ 0");
            }
            let period = if p.jbar < 0.0 { 2 } else { 1 };
            (Kind::Ea { jbar: p.jbar }, CellGraph::cubic(d, period), 2, d + 1, 2 * d + 1)
        }
        ModelName::Fa1b => {
            if !(p.mu > 0.0) || !(p.gamma > 0.0) {
                return bad("requires mu > 0 and gamma > 0 (gamma = inf allowed)");
            }
            (Kind::HardCore { mu: p.mu, gamma: p.gamma }, CellGraph::cubic(d, 2), 2, 1, 1)
        }
        ModelName::HardcoreGraph => {
            if !(p.mu > 0.0) || !(p.gamma > 0.0) {
                return bad("requires mu > 0 and gamma > 0 (gamma = inf allowed)");
            }
            let g = match &p.lattice_graph {
                Some(LatticeGraphSpec::Named(l)) => CellGraph::named(*l),
                Some(LatticeGraphSpec::Inline(g)) => CellGraph::inline(g)?,
                None => return bad("requires lattice_graph"),
            };
            if d != 3 {
                return bad("lattice graphs are three-dimensional (d = 3)");
            }
            (Kind::HardCore { mu: p.mu, gamma: p.gamma }, g, 2, 1, 1)
        }
        ModelName::ContinuousIsing => {
            if !(p.j > 0.0) {
                return bad("requires J > 0");
            }
            if !(p.delta > 0.0 && p.delta < 1.0) {
                return bad("requires delta in (0, 1)");
            }
            (Kind::Continuous { j: p.j, delta: p.delta }, CellGraph::cubic(d, 1), 3, 1, 1)
        }
    };
    let atoms = graph.atoms;
    let n_values_f = (base as f64).powi(atoms as i32);
    if n_values_f > (1u64 << 20) as f64 {
        return bad("cell value space exceeds 2^20 codes");
    }
    let n_values = n_values_f as u32;
    let mut digits = vec![0u8; n_values as usize * atoms];
    for c in 0..n_values {
        let mut x = c;
        for a in 0..atoms {
            digits[c as usize * atoms + a] = (x % base) as u8;
            x /= base;
        }
    }
    let nbr = graph
        .bonds
        .iter()
        .map(|v| v.iter().map(|b| (offset_index(d, b.cell), b.atom)).collect())
        .collect();
    let center = offset_index(d, Site::ORIGIN);
    let blocking = if graph.period > 1 { Some(BlockingSpec::new(d, graph.period, base)?) } else { None };
    let mut m = ModelInstance {
        params: p.clone(),
        dim: d,
        kind,
        graph,
        blocking,
        base_values: base,
        n_values,
        ground_states: Vec::new(),
        ground_labels: Vec::new(),
        e_g: 0.0,
        declared_rho: None,
        slots_per_atom: spa,
        n_beta,
        digits,
        nbr,
        center,
    };
    // Ground states: cell values whose constant configuration minimises
    // the per-cell energy.
    let energies: Vec<f64> = (0..n_values).map(|c| m.constant_energy(c)).collect();
    let emin = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    if !emin.is_finite() {
        return bad("no finite-energy constant configuration");
    }
    m.ground_states = (0..n_values).filter(|&c| energies[c as usize] <= emin + 1e-12).collect();
    m.e_g = emin;
    m.ground_labels = m.default_labels();
    m.declared_rho = match m.kind {
        Kind::Ising { j } => Some(j / 3f64.powi(d as i32)),
        Kind::Potts { j, .. } => Some(j / (2.0 * 3f64.powi(d as i32))),
        Kind::Ea { jbar } => Some(jbar.abs() / 3f64.powi(d as i32)),
        Kind::HardCore { .. } if p.model == ModelName::Fa1b => Some(0.5 / 3f64.powi(d as i32)),
        _ => None,
    };
    Ok(m)
}

impl ModelInstance {
    pub fn name(&self) -> ModelName {
        self.params.model
    }

    pub fn n_ground(&self) -> usize {
        self.ground_states.len()
    }

    pub fn atoms(&self) -> usize {
        self.graph.atoms
    }

    pub fn n_slots(&self) -> usize {
        self.graph.atoms * self.slots_per_atom
    }

    #[inline]
    pub fn digit(&self, code: u32, atom: usize) -> u32 {
        self.digits[code as usize * self.graph.atoms + atom] as u32
    }

    pub fn encode(&self, digits: &[u32]) -> u32 {
        digits.iter().rev().fold(0, |acc, &x| acc * self.base_values + x)
    }

    pub fn ground_index(&self, code: u32) -> Option<usize> {
        self.ground_states.iter().position(|&g| g == code)
    }

    fn default_labels(&self) -> Vec<String> {
        match (self.params.model, self.ground_states.len()) {
            (ModelName::Rfim | ModelName::ContinuousIsing, 2) => vec!["+".into(), "-".into()],
            (ModelName::Ea, 2) if self.graph.atoms == 1 => vec!["+".into(), "-".into()],
            (ModelName::Ea | ModelName::Fa1b, 2) => vec!["e".into(), "o".into()],
            (ModelName::Rfpm, _) => self.ground_states.iter().map(|c| format!("{}", c + 1)).collect(),
            _ => (0..self.ground_states.len()).map(|k| format!("k{k}")).collect(),
        }
    }

    /// Ising spin of an atom value: digit 0 is +1, digit 1 is −1.
    #[inline]
    fn spin(v: u32) -> f64 {
        if v == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Representative spin of a continuous cell: b⁺ → 1, b⁻ → −1, m → 0.
    #[inline]
    fn representative(v: u32) -> f64 {
        match v {
            0 => 1.0,
            1 => -1.0,
            _ => 0.0,
        }
    }

    /// Site energy of the center cell of a neighbourhood. `nb` holds the
    /// 3^d cell values in `offset_index` order; a missing `eta` means η = 0.
    pub fn local_energy(&self, nb: &[u32], eta: Option<&[f64]>) -> f64 {
        let c = nb[self.center];
        let spa = self.slots_per_atom;
        let slot = |i: usize| eta.map_or(0.0, |e| e[i]);
        let mut e = 0.0;
        for a in 0..self.graph.atoms {
            let va = self.digit(c, a);
            let bonds = &self.nbr[a];
            match self.kind {
                Kind::Ising { j } => {
                    let sa = Self::spin(va);
                    let sum: f64 = bonds.iter().map(|&(n, b)| Self::spin(self.digit(nb[n], b))).sum();
                    e += -0.5 * j * sa * sum - slot(a * spa) * sa;
                }
                Kind::Continuous { j, .. } => {
                    let sa = Self::representative(va);
                    let sum: f64 =
                        bonds.iter().map(|&(n, b)| Self::representative(self.digit(nb[n], b))).sum();
                    e += -0.5 * j * sa * sum - slot(a * spa) * sa;
                }
                Kind::Potts { j, .. } => {
                    let same = bonds.iter().filter(|&&(n, b)| self.digit(nb[n], b) == va).count();
                    e += -0.5 * j * same as f64 - slot(a * spa + va as usize);
                }
                Kind::Ea { jbar } => {
                    let sa = Self::spin(va);
                    for (bi, &(n, b)) in bonds.iter().enumerate() {
                        let sb = Self::spin(self.digit(nb[n], b));
                        e += -0.5 * (jbar + slot(a * spa + bi)) * sa * sb;
                    }
                    e -= slot(a * spa + 2 * self.dim) * sa;
                }
                Kind::HardCore { mu, gamma } => {
                    if va == 1 {
                        let occ = bonds.iter().filter(|&&(n, b)| self.digit(nb[n], b) == 1).count();
                        if occ > 0 && gamma.is_infinite() {
                            return f64::INFINITY;
                        }
                        let pair = if occ == 0 { 0.0 } else { gamma * occ as f64 };
                        let eb = slot(a * spa);
                        e += 0.5 * (-mu + pair) - eb * (-0.5 * mu + pair);
                    }
                }
            }
        }
        e
    }

    /// Collects the 3^d neighbourhood of `s` into `buf`.
    #[inline]
    pub fn gather(&self, s: Site, val: impl Fn(Site) -> u32, buf: &mut Vec<u32>) {
        buf.clear();
        let d = self.dim;
        let n = 3usize.pow(d as u32);
        for idx in 0..n {
            let mut o = s;
            let mut x = idx;
            for i in 0..d {
                o.0[i] += (x % 3) as i32 - 1;
                x /= 3;
            }
            buf.push(val(o));
        }
    }

    pub fn site_energy(&self, s: Site, val: impl Fn(Site) -> u32, eta: Option<&[f64]>) -> f64 {
        let mut buf = Vec::with_capacity(27);
        self.gather(s, val, &mut buf);
        self.local_energy(&buf, eta)
    }

    /// Per-cell energy of the constant configuration `code` at η = 0.
    pub fn constant_energy(&self, code: u32) -> f64 {
        let n = 3usize.pow(self.dim as u32);
        self.local_energy(&vec![code; n], None)
    }

    /// Cell offsets a site energy can depend on, as a list of L∞ unit offsets.
    pub fn neighborhood(&self) -> Vec<Site> {
        crate::lattice::ball_offsets(self.dim, 1)
    }

    /// ω coordinate of quenched family `beta` at an atom.
    #[inline]
    pub fn omega_key(&self, beta: usize, cell: Site, atom: usize) -> (usize, Site) {
        match &self.graph.sub_offsets {
            Some(offs) => (beta, cell.scale(self.graph.period as i32).add(offs[atom])),
            None => (beta * self.graph.atoms + atom, cell),
        }
    }

    /// Locality radius of η in cells: η at a cell reads ω only on cells
    /// within this L∞ distance.
    pub fn eta_locality(&self) -> i32 {
        match self.kind {
            Kind::Ising { .. } | Kind::Potts { .. } | Kind::Continuous { .. } => 0,
            Kind::Ea { .. } => 1,
            Kind::HardCore { .. } => {
                if self.graph.sub_offsets.is_some() && self.graph.period == 1 {
                    2
                } else if self.graph.sub_offsets.is_some() {
                    1
                } else {
                    2
                }
            }
        }
    }

    /// Total number of quenched parameter indices β in ω keys.
    pub fn omega_families(&self) -> usize {
        match self.graph.sub_offsets {
            Some(_) => self.n_beta,
            None => self.n_beta * self.graph.atoms,
        }
    }

    /// Draws ω covering everything η on `reg` depends on.
    pub fn sample_omega(&self, spec: DistributionSpec, reg: &Region, seed: u64) -> Result<QuenchedConfig> {
        spec.validate()?;
        let cover = reg.thicken(self.eta_locality());
        let mut values = HashMap::new();
        for s in cover.iter() {
            for a in 0..self.graph.atoms {
                for b in 0..self.n_beta {
                    let key = self.omega_key(b, s, a);
                    values.entry(key).or_insert_with(|| spec.coordinate(seed, key.0, key.1));
                }
            }
        }
        Ok(QuenchedConfig { spec, seed, n_beta: self.omega_families(), values })
    }

    /// The field η on the cells of `reg` built from ω.
    pub fn eta_from_omega(&self, omega: &QuenchedConfig, reg: &Region) -> Result<RandomField> {
        let get = |key: (usize, Site)| -> Result<f64> {
            omega.values.get(&key).copied().ok_or_else(|| {
                LabError::Padding(format!("quenched parameter β={} at {:?} is missing", key.0, key.1))
            })
        };
        let spa = self.slots_per_atom;
        let mut values = HashMap::with_capacity(reg.len());
        for s in reg.iter() {
            let mut v = vec![0.0; self.n_slots()];
            for a in 0..self.graph.atoms {
                match self.kind {
                    Kind::Ising { .. } | Kind::Continuous { .. } => {
                        v[a * spa] = get(self.omega_key(0, s, a))?;
                    }
                    Kind::Potts { q, .. } => {
                        for k in 0..q as usize {
                            v[a * spa + k] = get(self.omega_key(k, s, a))?;
                        }
                    }
                    Kind::Ea { .. } => {
                        for (bi, b) in self.graph.bonds[a].iter().enumerate() {
                            let (axis, sign) = b.axis.expect("cubic bond");
                            v[a * spa + bi] = if sign > 0 {
                                get(self.omega_key(axis, s, a))?
                            } else {
                                get(self.omega_key(axis, s.add(b.cell), b.atom))?
                            };
                        }
                        v[a * spa + 2 * self.dim] = get(self.omega_key(self.dim, s, a))?;
                    }
                    Kind::HardCore { .. } => {
                        v[a * spa] = self.blocked_indicator(s, a, &get)?;
                    }
                }
            }
            values.insert(s, v);
        }
        let locality = vec![self.eta_locality(); self.n_slots()];
        Ok(RandomField { n_slots: self.n_slots(), values, locality })
    }

    /// FA-1B blocked-site indicator at atom `(s, a)`.
    fn blocked_indicator(
        &self,
        s: Site,
        a: usize,
        get: &dyn Fn((usize, Site)) -> Result<f64>,
    ) -> Result<f64> {
        let w = |cell: Site, atom: usize| get(self.omega_key(0, cell, atom));
        let none_occupied = |cell: Site, atom: usize| -> Result<f64> {
            let mut p = 1.0;
            for b in &self.graph.bonds[atom] {
                p *= 1.0 - w(cell.add(b.cell), b.atom)?;
            }
            Ok(p)
        };
        let ws = w(s, a)?;
        let first = ws * (1.0 - none_occupied(s, a)?);
        let mut p = 1.0;
        for b in &self.graph.bonds[a] {
            let t = s.add(b.cell);
            p *= 1.0 - w(t, b.atom)? * (1.0 - none_occupied(t, b.atom)?);
        }
        Ok(first + (1.0 - ws) * (1.0 - p))
    }

    /// Maps a configuration on the original cubic lattice to cells.
    pub fn block(&self, g: &Grid<u32>) -> Result<Grid<u32>> {
        match &self.blocking {
            Some(b) => b.block(g),
            None => Ok(g.clone()),
        }
    }

    pub fn unblock(&self, g: &Grid<u32>) -> Grid<u32> {
        match &self.blocking {
            Some(b) => b.unblock(g),
            None => g.clone(),
        }
    }

    /// Cell interval of a continuous spin class.
    pub fn cell_interval(&self, code: u32) -> (f64, f64) {
        let delta = match self.kind {
            Kind::Continuous { delta, .. } => delta,
            _ => 0.0,
        };
        match code {
            0 => (delta, 1.0),
            1 => (-1.0, -delta),
            _ => (-delta, delta),
        }
    }

    /// Class of a continuous spin value: 0 = b⁺, 1 = b⁻, 2 = m.
    pub fn classify(&self, x: f64) -> u32 {
        let (delta, _) = self.cell_interval(0);
        if x > delta {
            0
        } else if x < -delta {
            1
        } else {
            2
        }
    }

    /// Site energy of the continuous Ising model at real spins.
    pub fn continuous_site_energy(&self, s: Site, val: impl Fn(Site) -> f64, eta: Option<&[f64]>) -> f64 {
        let j = match self.kind {
            Kind::Continuous { j, .. } => j,
            _ => panic!("continuous energy on a discrete model"),
        };
        let xs = val(s);
        let mut sum = 0.0;
        for b in &self.graph.bonds[0] {
            sum += val(s.add(b.cell));
        }
        -0.5 * j * xs * sum - eta.map_or(0.0, |e| e[0]) * xs
    }
}

/// H^b_{η,reg}(x): the site energies of `reg` with `x` inside and `bc` outside.
pub fn hamiltonian(
    model: &ModelInstance,
    eta: &RandomField,
    reg: &Region,
    bc: &BoundaryCondition,
    x: &SpinConfig,
) -> f64 {
    let outside = |s: Site| match bc {
        BoundaryCondition::Ground(k) => model.ground_states[*k],
        BoundaryCondition::Config(c) => c.value(s),
    };
    let val = |s: Site| if reg.contains(s) { x.value(s) } else { outside(s) };
    let mut buf = Vec::with_capacity(27);
    let mut total = 0.0;
    for s in reg.iter() {
        model.gather(s, val, &mut buf);
        total += model.local_energy(&buf, eta.get(s));
    }
    total
}

/// Result of a Peierls scan.
#[derive(Clone, Debug)]
pub struct PeierlsScan {
    pub rho_measured: f64,
    pub witness: Option<Contour>,
    pub contours_scanned: usize,
    /// Set when the enumeration budget stopped the scan early.
    pub partial: bool,
}

/// Minimum of D_0(C)/|sC| over all contours of size at most `n_max`.
pub fn peierls_scan(model: &ModelInstance, n_max: usize, budget: u64) -> Result<PeierlsScan> {
    let (family, partial) = match contours::enumerate_contours_upto(model, n_max, budget) {
        Ok(f) => (f, false),
        Err(LabError::Budget(_)) => {
            let mut f = Vec::new();
            let mut n = 1;
            while n <= n_max {
                match contours::enumerate_contours_upto(model, n, budget) {
                    Ok(v) => f = v,
                    Err(_) => break,
                }
                n += 1;
            }
            (f, true)
        }
        Err(e) => return Err(e),
    };
    let zero = RandomField::zero();
    let mut best = f64::INFINITY;
    let mut witness = None;
    for c in &family {
        let k = c.label;
        let dk = contours::excitation_energy(model, c, &zero, k)?;
        let ratio = dk / c.size() as f64;
        if ratio < best {
            best = ratio;
            witness = Some(c.clone());
        }
    }
    Ok(PeierlsScan { rho_measured: best, witness, contours_scanned: family.len(), partial })
}

/// Tensor Gauss-Legendre rule: `nodes` points on each of `panels` equal
/// sub-intervals of a cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub nodes: usize,
    pub panels: usize,
}

impl Quadrature {
    pub fn new(nodes: usize) -> Quadrature {
        Quadrature { nodes, panels: 1 }
    }

    /// Points and weights for ∫_a^b ½ f(x) dx.
    pub fn rule(&self, a: f64, b: f64) -> Result<Vec<(f64, f64)>> {
        if self.nodes < 4 {
            return Err(LabError::Accuracy(format!(
                "quadrature needs at least 4 nodes per cell, got {}",
                self.nodes
            )));
        }
        let gl = gauss_quad::GaussLegendre::new(self.nodes)
            .map_err(|e| LabError::Accuracy(format!("quadrature setup failed: {e}")))?;
        let base: Vec<(f64, f64)> = gl.as_node_weight_pairs().to_vec();
        let panels = self.panels.max(1);
        let h = (b - a) / panels as f64;
        let mut out = Vec::with_capacity(self.nodes * panels);
        for p in 0..panels {
            let lo = a + p as f64 * h;
            for &(x, w) in &base {
                out.push((lo + (x + 1.0) * h / 2.0, w * h / 2.0 * 0.5));
            }
        }
        Ok(out)
    }
}

/// T·ln ∫ over the free sites of exp(−H/T), with each free site integrated
/// over its own point set. `fixed` supplies every other spin.
#[allow(clippy::too_many_arguments)]
fn log_integral(
    model: &ModelInstance,
    eta: &RandomField,
    energy_sites: &[Site],
    free: &[Site],
    rules: &[Vec<(f64, f64)>],
    fixed: &dyn Fn(Site) -> f64,
    t: f64,
    budget: u64,
) -> Result<f64> {
    let mut total: f64 = 1.0;
    for r in rules {
        total *= r.len() as f64;
    }
    if total > budget as f64 {
        return Err(LabError::Budget(format!(
            "quadrature over {} sites needs {total:.3e} points (budget {budget})",
            free.len()
        )));
    }
    let index: HashMap<Site, usize> = free.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut ctr = vec![0usize; free.len()];
    let mut xs: Vec<f64> = rules.iter().map(|r| r[0].0).collect();
    let mut acc_max = f64::NEG_INFINITY;
    let mut acc_sum = 0.0;
    let mut terms: Vec<f64> = Vec::new();
    loop {
        let val = |s: Site| match index.get(&s) {
            Some(&i) => xs[i],
            None => fixed(s),
        };
        let mut h = 0.0;
        for s in energy_sites {
            h += model.continuous_site_energy(*s, val, eta.get(*s));
        }
        let mut lw = -h / t;
        for (i, r) in rules.iter().enumerate() {
            lw += r[ctr[i]].1.ln();
        }
        terms.push(lw);
        if terms.len() == 4096 {
            fold_lse(&mut acc_max, &mut acc_sum, &terms);
            terms.clear();
        }
        // Odometer step.
        let mut i = 0;
        loop {
            if i == free.len() {
                fold_lse(&mut acc_max, &mut acc_sum, &terms);
                return Ok(t * (acc_max + acc_sum.ln()));
            }
            ctr[i] += 1;
            if ctr[i] < rules[i].len() {
                xs[i] = rules[i][ctr[i]].0;
                break;
            }
            ctr[i] = 0;
            xs[i] = rules[i][0].0;
            i += 1;
        }
    }
}

fn fold_lse(max: &mut f64, sum: &mut f64, terms: &[f64]) {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return;
    }
    if m > *max {
        *sum *= (*max - m).exp();
        *max = m;
    }
    *sum += terms.iter().map(|x| (x - *max).exp()).sum::<f64>();
}

/// Effective coarse-grained Hamiltonian −T ln ∫ Π dμ^{x̃_s}(x) e^{−H/T} of
/// the continuous Ising model on `reg`, with real boundary spins outside.
#[allow(clippy::too_many_arguments)]
pub fn effective_hamiltonian_cg(
    model: &ModelInstance,
    eta: &RandomField,
    reg: &Region,
    boundary: &dyn Fn(Site) -> f64,
    xtilde: &dyn Fn(Site) -> u32,
    t: f64,
    quad: Quadrature,
    budget: u64,
) -> Result<f64> {
    if !matches!(model.kind, Kind::Continuous { .. }) {
        return Err(LabError::Domain("effective Hamiltonian needs the continuous Ising model".into()));
    }
    if !(t > 0.0) {
        return Err(LabError::Parameter("temperature must be positive".into()));
    }
    let free: Vec<Site> = reg.sites().to_vec();
    let rules = free
        .iter()
        .map(|s| {
            let (a, b) = model.cell_interval(xtilde(*s));
            quad.rule(a, b)
        })
        .collect::<Result<Vec<_>>>()?;
    let li = log_integral(model, eta, &free, &free, &rules, boundary, t, budget)?;
    Ok(-li)
}

/// D^{r,τ}_0(C) of the continuous Ising model for a contour labelled b⁺ or
/// b⁻. `r` gives real spins on ∂int sC ∪ ∂ext sC inside the classes of C;
/// τ reflects every spin of the opposite class onto the label's class.
pub fn extended_excitation(
    model: &ModelInstance,
    c: &Contour,
    r: &dyn Fn(Site) -> f64,
    t: f64,
    quad: Quadrature,
    budget: u64,
) -> Result<f64> {
    if !matches!(model.kind, Kind::Continuous { .. }) {
        return Err(LabError::Domain("extended excitation needs the continuous Ising model".into()));
    }
    let zero = RandomField::zero();
    let sc = &c.support;
    let inner = crate::lattice::boundary(sc, 1, crate::lattice::Side::Internal);
    let free: Vec<Site> = sc.iter().filter(|s| !inner.contains(*s)).collect();
    let energy_sites: Vec<Site> = sc.sites().to_vec();
    let label_code = model.ground_states[c.label];
    // Fixed spins: r on the rim, the excitation classes integrate the rest.
    let rules_c = free.iter().map(|s| {
        let (a, b) = model.cell_interval(c.value(*s).unwrap());
        quad.rule(a, b)
    });
    let rules_c = rules_c.collect::<Result<Vec<_>>>()?;
    let mu_rim_c: f64 = inner
        .iter()
        .map(|s| {
            let (a, b) = model.cell_interval(c.value(s).unwrap());
            ((b - a) / 2.0).ln()
        })
        .sum();
    let first = log_integral(model, &zero, &energy_sites, &free, &rules_c, r, t, budget)? + t * mu_rim_c;
    let flip = |s: Site| {
        let x = r(s);
        if model.classify(x) != label_code {
            -x
        } else {
            x
        }
    };
    let (a, b) = model.cell_interval(label_code);
    let rules_g = free.iter().map(|_| quad.rule(a, b)).collect::<Result<Vec<_>>>()?;
    let mu_rim_g = inner.len() as f64 * ((b - a) / 2.0).ln();
    let second = log_integral(model, &zero, &energy_sites, &free, &rules_g, &flip, t, budget)? + t * mu_rim_g;
    Ok(-first + second)
}

/// A deterministic random configuration helper shared by tests and benches.
pub fn random_config(model: &ModelInstance, lo: Site, hi: Site, background: u32, seed: u64) -> SpinConfig {
    use rand::Rng;
    let mut rng = seeds::stream(seed, "random_config", 0);
    let mut x = SpinConfig::constant(model.dim, lo, hi, background);
    for v in x.grid.data.iter_mut() {
        *v = rng.gen_range(0..model.n_values);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rfim_3d_declaration() {
        let m = make_model(&ModelParams::rfim(3, 1.0)).unwrap();
        assert_eq!(m.ground_states, vec![0, 1]);
        assert!((m.e_g + 3.0).abs() < 1e-12);
        assert!((m.declared_rho.unwrap() - 1.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn lattice_graph_ground_state_counts() {
        for (l, n, deg) in [(NamedLattice::Bcc, 2, 8), (NamedLattice::Fcc, 4, 12), (NamedLattice::Hcp, 4, 12)] {
            let m = make_model(&ModelParams::hardcore_graph(l, 1.0)).unwrap();
            assert_eq!(m.n_ground(), n, "{l:?}");
            assert!(m.graph.bonds.iter().all(|b| b.len() == deg), "{l:?}");
        }
    }

    #[test]
    fn invalid_parameters_name_the_constraint() {
        let e = make_model(&ModelParams::rfim(2, -1.0)).unwrap_err();
        assert!(e.to_string().contains("J > 0"));
        let e = make_model(&ModelParams::rfpm(2, 1, 1.0)).unwrap_err();
        assert!(e.to_string().contains("Q ≥ 2"));
    }
}
