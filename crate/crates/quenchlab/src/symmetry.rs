//! Local symmetry pairs (τ̄, τ) between ground states and a verifier for
//! the five defining conditions: locality, injectivity on the constrained
//! subspace, energy quasi-invariance, Lipschitz regularity of τ, and
//! invariance of the disorder law.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::disorder::{BoundedLaw, DisorderKind, DistributionSpec, QuenchedConfig};
use crate::error::{LabError, Result};
use crate::lattice::{boundary, Region, Side, Site};
use crate::models::{hamiltonian, BoundaryCondition, Kind, ModelInstance, ModelName, SpinConfig};
use crate::par::{self, Execution};
use crate::polymer::ground_config;
use crate::seeds;

/// Which transformation a pair is built from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TransformKind {
    Identity,
    Flip,
    /// q ↦ q + shift (mod Q).
    PottsCycle { shift: u32 },
    /// Shift by a lattice vector. On blocked models the vector is in units
    /// of the original lattice; on crystals it is a real-space vector.
    Translate { vector: [f64; 3] },
}

impl TransformKind {
    /// Unit translation along `axis` of the original lattice.
    pub fn unit(axis: usize, sign: i32) -> TransformKind {
        let mut v = [0.0; 3];
        v[axis] = sign as f64;
        TransformKind::Translate { vector: v }
    }
}

/// Where the quenched coordinate (β, atom) of a cell reads from.
#[derive(Clone, Copy, Debug, PartialEq)]
struct QuenchSource {
    beta: usize,
    atom: usize,
    cell: Site,
    sign: f64,
}

/// A local symmetry pair mapping boundary condition `k1` to `k2`.
#[derive(Clone, Debug)]
pub struct SymmetryPair {
    pub kind: TransformKind,
    pub k1: usize,
    pub k2: usize,
    /// Lipschitz constant C_τ of the quenched map in the sup norm.
    pub lipschitz: f64,
    pub group: &'static str,
    /// Per atom of the output cell: source cell offset and source atom.
    atom_source: Vec<(Site, usize)>,
    /// Image of each atom digit.
    digit_map: Vec<u32>,
    /// Per (β, atom), indexed β·atoms + atom.
    quench: Vec<QuenchSource>,
}

/// Name of the symmetry group a model's pairs are drawn from.
pub fn symmetry_group(model: &ModelInstance) -> &'static str {
    match (model.name(), model.kind) {
        (ModelName::Rfim | ModelName::ContinuousIsing, _) => "Z2 spin flip",
        (ModelName::Ea, Kind::Ea { jbar }) if jbar > 0.0 => "Z2 spin flip",
        (ModelName::Rfpm, _) => "cyclic group Z_Q",
        _ => "lattice translations",
    }
}

fn field_family(model: &ModelInstance) -> Option<usize> {
    match model.kind {
        Kind::Ising { .. } | Kind::Continuous { .. } => Some(0),
        Kind::Ea { .. } => Some(model.dim),
        _ => None,
    }
}

impl SymmetryPair {
    /// τ̄ on one cell, reading the input configuration through `x`.
    #[inline]
    pub fn map_cell(&self, model: &ModelInstance, s: Site, x: impl Fn(Site) -> u32) -> u32 {
        let mut code = 0u32;
        for a in (0..model.atoms()).rev() {
            let (off, b) = self.atom_source[a];
            let digit = model.digit(x(s.add(off)), b);
            code = code * model.base_values + self.digit_map[digit as usize];
        }
        code
    }

    /// τ̄_Λ x: the image on `reg`, with b^{k2} everywhere else.
    pub fn apply_spins(&self, model: &ModelInstance, x: &SpinConfig, reg: &Region) -> SpinConfig {
        let mut out = ground_config(model, reg, self.k2);
        for s in reg.iter() {
            out.set(s, self.map_cell(model, s, |t| x.value(t)));
        }
        out
    }

    /// Cells on which τ_Λ ω is produced: enough for η(τω) on `reg`.
    pub fn output_cells(&self, model: &ModelInstance, reg: &Region) -> Region {
        reg.thicken(model.eta_locality().max(1))
    }

    /// τ_Λ ω on `output_cells(reg)`.
    pub fn apply_omega(&self, model: &ModelInstance, omega: &QuenchedConfig, reg: &Region) -> Result<QuenchedConfig> {
        let atoms = model.atoms();
        let mut values = HashMap::new();
        for s in self.output_cells(model, reg).iter() {
            for beta in 0..model.n_beta {
                for a in 0..atoms {
                    let src = self.quench[beta * atoms + a];
                    let from = model.omega_key(src.beta, s.add(src.cell), src.atom);
                    let v = omega.values.get(&from).copied().ok_or_else(|| {
                        LabError::Padding(format!(
                            "transform needs quenched parameter β={} at {:?}",
                            from.0, from.1
                        ))
                    })?;
                    values.insert(model.omega_key(beta, s, a), src.sign * v);
                }
            }
        }
        Ok(QuenchedConfig { spec: omega.spec, seed: omega.seed, n_beta: omega.n_beta, values })
    }

    /// P_Λ: the quenched coordinates τ_Λ reads.
    pub fn p_set(&self, model: &ModelInstance, reg: &Region) -> Vec<(usize, Site)> {
        let mut keys = HashSet::new();
        for s in self.output_cells(model, reg).iter() {
            for q in &self.quench {
                keys.insert(model.omega_key(q.beta, s.add(q.cell), q.atom));
            }
        }
        let mut v: Vec<_> = keys.into_iter().collect();
        v.sort();
        v
    }
}

/// Per-atom source map of a translation, or `None` if the vector is not a
/// symmetry of the cell graph reachable within one cell.
fn translation_sources(model: &ModelInstance, vector: [f64; 3]) -> Option<Vec<(Site, usize)>> {
    let g = &model.graph;
    let d = model.dim;
    if let Some(offs) = &g.sub_offsets {
        let p = g.period as i32;
        let mut u = Site::ORIGIN;
        for i in 0..3 {
            let r = vector[i].round();
            if (vector[i] - r).abs() > 1e-9 || (i >= d && r != 0.0) {
                return None;
            }
            u.0[i] = r as i32;
        }
        let mut out = Vec::with_capacity(offs.len());
        for o in offs {
            let t = o.add(u);
            let mut cell = Site::ORIGIN;
            let mut rem = Site::ORIGIN;
            for i in 0..d {
                cell.0[i] = t.0[i].div_euclid(p);
                rem.0[i] = t.0[i].rem_euclid(p);
            }
            if cell.linf() > 1 {
                return None;
            }
            out.push((cell, offs.iter().position(|x| *x == rem)?));
        }
        return Some(out);
    }
    let (pos, vecs) = (g.positions.as_ref()?, g.vectors?);
    let mut out = Vec::with_capacity(pos.len());
    for p in pos {
        let target = [p[0] + vector[0], p[1] + vector[1], p[2] + vector[2]];
        let mut found = None;
        'search: for cell in crate::lattice::box_sites(3, Site::new(&[-1, -1, -1]), Site::new(&[1, 1, 1])) {
            for (b, q) in pos.iter().enumerate() {
                let mut x = *q;
                for (k, v) in vecs.iter().enumerate() {
                    for c in 0..3 {
                        x[c] += cell.0[k] as f64 * v[c];
                    }
                }
                if (0..3).all(|c| (x[c] - target[c]).abs() < 1e-9) {
                    found = Some((cell, b));
                    break 'search;
                }
            }
        }
        out.push(found?);
    }
    Some(out)
}

fn build(model: &ModelInstance, kind: TransformKind, k1: usize) -> Result<SymmetryPair> {
    let group = symmetry_group(model);
    let atoms = model.atoms();
    let base = model.base_values;
    let incompatible = || {
        LabError::Symmetry(format!(
            "{}: {:?} is not a transformation of the model's symmetry group ({group})",
            model.name().as_str(),
            kind
        ))
    };
    let identity_atoms: Vec<(Site, usize)> = (0..atoms).map(|a| (Site::ORIGIN, a)).collect();
    let identity_digits: Vec<u32> = (0..base).collect();
    let mut quench: Vec<QuenchSource> = (0..model.n_beta * atoms)
        .map(|i| QuenchSource { beta: i / atoms, atom: i % atoms, cell: Site::ORIGIN, sign: 1.0 })
        .collect();
    let (atom_source, digit_map) = match kind {
        TransformKind::Identity => (identity_atoms, identity_digits),
        TransformKind::Flip => {
            if group != "Z2 spin flip" {
                return Err(incompatible());
            }
            let field = field_family(model).expect("flip models carry a field family");
            for q in quench.iter_mut().filter(|q| q.beta == field) {
                q.sign = -1.0;
            }
            let mut digits = identity_digits;
            digits.swap(0, 1);
            (identity_atoms, digits)
        }
        TransformKind::PottsCycle { shift } => {
            let Kind::Potts { q, .. } = model.kind else {
                return Err(incompatible());
            };
            let j = shift % q;
            for src in quench.iter_mut() {
                src.beta = ((src.beta as u32 + q - j) % q) as usize;
            }
            (identity_atoms, (0..q).map(|v| (v + j) % q).collect())
        }
        TransformKind::Translate { vector } => {
            if group != "lattice translations" {
                return Err(incompatible());
            }
            let sources = translation_sources(model, vector).ok_or_else(|| {
                LabError::Symmetry(format!(
                    "{}: translation by {vector:?} is not a one-cell symmetry of the lattice",
                    model.name().as_str()
                ))
            })?;
            for src in quench.iter_mut() {
                let (cell, atom) = sources[src.atom];
                src.cell = cell;
                src.atom = atom;
            }
            (sources, identity_digits)
        }
    };
    let mut pair = SymmetryPair {
        kind,
        k1,
        k2: 0,
        lipschitz: 1.0,
        group: if kind == TransformKind::Identity { "trivial" } else { group },
        atom_source,
        digit_map,
        quench,
    };
    let g1 = model.ground_states[k1];
    let image = pair.map_cell(model, Site::ORIGIN, |_| g1);
    pair.k2 = model.ground_index(image).ok_or_else(|| {
        LabError::Symmetry(format!(
            "{}: {kind:?} does not map ground state {} to a ground state",
            model.name().as_str(),
            model.ground_labels[k1]
        ))
    })?;
    Ok(pair)
}

/// The pair of a given kind starting from ground state 0.
pub fn make_transform(model: &ModelInstance, kind: TransformKind) -> Result<SymmetryPair> {
    build(model, kind, 0)
}

/// Candidate generators of the model's symmetry group.
pub fn candidate_kinds(model: &ModelInstance) -> Vec<TransformKind> {
    match symmetry_group(model) {
        "Z2 spin flip" => vec![TransformKind::Flip],
        "cyclic group Z_Q" => {
            let Kind::Potts { q, .. } = model.kind else { unreachable!() };
            (1..q).map(|shift| TransformKind::PottsCycle { shift }).collect()
        }
        _ => {
            let g = &model.graph;
            let mut out = Vec::new();
            if g.sub_offsets.is_some() {
                for axis in 0..model.dim {
                    for sign in [1, -1] {
                        out.push(TransformKind::unit(axis, sign));
                    }
                }
            } else if let (Some(pos), Some(vecs)) = (&g.positions, g.vectors) {
                for (a, bonds) in g.bonds.iter().enumerate() {
                    for b in bonds {
                        let mut v = [0.0; 3];
                        for c in 0..3 {
                            v[c] = pos[b.atom][c] - pos[a][c];
                            for k in 0..3 {
                                v[c] += b.cell.0[k] as f64 * vecs[k][c];
                            }
                        }
                        if !out.iter().any(|k| matches!(k, TransformKind::Translate { vector } if (0..3).all(|c| (vector[c] - v[c]).abs() < 1e-9))) {
                            out.push(TransformKind::Translate { vector: v });
                        }
                    }
                }
            }
            out
        }
    }
}

/// A pair taking ground state `k1` to `k2`; the identity when they agree.
pub fn pair_between(model: &ModelInstance, k1: usize, k2: usize) -> Result<SymmetryPair> {
    let n = model.n_ground();
    if k1 >= n || k2 >= n {
        return Err(LabError::Domain(format!("ground-state index out of range (model has {n})")));
    }
    if k1 == k2 {
        return build(model, TransformKind::Identity, k1);
    }
    for kind in candidate_kinds(model) {
        if let Ok(p) = build(model, kind, k1) {
            if p.k2 == k2 {
                return Ok(p);
            }
        }
    }
    Err(LabError::Symmetry(format!(
        "{}: no generator of {} maps {} to {}",
        model.name().as_str(),
        symmetry_group(model),
        model.ground_labels[k1],
        model.ground_labels[k2]
    )))
}

/// Outcome of the five-condition check.
#[derive(Clone, Debug, Serialize)]
pub struct SymmetryReport {
    pub locality: bool,
    pub injectivity: bool,
    pub energy: bool,
    pub lipschitz: bool,
    pub measure: bool,
    /// max |H^{k1}_η(x) − H^{k2}_{τη}(τ̄x)| over checked (x, η).
    pub max_energy_gap: f64,
    /// min over checked (x, η) of the boundary sum minus the gap.
    pub min_energy_margin: f64,
    pub lipschitz_estimate: f64,
    /// Largest atom-mass difference (discrete laws) or KS distance.
    pub measure_distance: f64,
    pub measure_threshold: f64,
    pub configs_checked: u64,
}

impl SymmetryReport {
    pub fn all(&self) -> bool {
        self.locality && self.injectivity && self.energy && self.lipschitz && self.measure
    }
}

/// Cell of a quenched key.
fn key_cell(model: &ModelInstance, key: (usize, Site)) -> Site {
    match &model.graph.sub_offsets {
        Some(_) => {
            let p = model.graph.period as i32;
            let mut c = Site::ORIGIN;
            for i in 0..model.dim {
                c.0[i] = key.1 .0[i].div_euclid(p);
            }
            c
        }
        None => key.1,
    }
}

/// Writes configuration number `idx` of the free cells into `x`.
fn write_config(x: &mut SpinConfig, free: &[Site], mut idx: u64, n_values: u32) {
    for s in free {
        x.set(*s, (idx % n_values as u64) as u32);
        idx /= n_values as u64;
    }
}

fn state_count(n_values: u32, free: usize, budget: u64) -> Result<u64> {
    let total = (n_values as f64).powi(free as i32);
    if total > budget as f64 {
        return Err(LabError::Budget(format!(
            "{n_values}^{free} configurations exceed the budget of {budget}"
        )));
    }
    Ok(total as u64)
}

/// Checks the five conditions on the box `reg` (Λ).
///
/// Injectivity runs over every x equal to b^{k1} on ∂ext Λ ∪ ∂int Λ. The
/// energy comparison runs on Λ⁺ = Λ ∪ ∂ext Λ over the same configurations,
/// which are exactly those fixed to b^{k1} on the two outer layers of Λ⁺,
/// against `trials` sampled disorder draws and η = 0.
pub fn verify_local_symmetry(
    pair: &SymmetryPair,
    model: &ModelInstance,
    reg: &Region,
    spec: DistributionSpec,
    trials: usize,
    seed: u64,
    budget: u64,
) -> Result<SymmetryReport> {
    spec.validate()?;
    let exec = Execution::Parallel;
    let outer = reg.thicken(1);
    let inner_free: Vec<Site> = reg.difference(&reg.collar(1)).iter().collect();
    let total = state_count(model.n_values, inner_free.len(), budget)?;
    let base = ground_config(model, &outer, pair.k1);

    // (1) locality by perturbation tracing
    let mut locality = true;
    let mut rng = seeds::stream(seed, "symmetry-locality", 0);
    {
        use rand::Rng;
        let (lo, hi) = outer.thicken(1).bbox().expect("nonempty region");
        for t in 0..trials.max(1) * 4 {
            let x = crate::models::random_config(model, lo, hi, model.ground_states[pair.k1], seeds::derive_seed(seed, "symmetry-x", t as u64));
            let sites = outer.thicken(1);
            let hit = sites.sites()[rng.gen_range(0..sites.len())];
            let mut y = x.clone();
            y.set(hit, (x.value(hit) + 1 + rng.gen_range(0..model.n_values - 1)) % model.n_values);
            let (a, b) = (pair.apply_spins(model, &x, reg), pair.apply_spins(model, &y, reg));
            for s in reg.iter() {
                if a.value(s) != b.value(s) && s.dist(hit) > 1 {
                    locality = false;
                }
            }
        }
        let omega = model.sample_omega(spec, &pair.output_cells(model, reg).thicken(1), seed)?;
        let image = pair.apply_omega(model, &omega, reg)?;
        let keys: Vec<_> = pair.p_set(model, reg);
        for _ in 0..trials.max(1) * 4 {
            let key = keys[rng.gen_range(0..keys.len())];
            let mut w = omega.clone();
            *w.values.get_mut(&key).expect("p_set key is sampled") += 0.5;
            let moved = pair.apply_omega(model, &w, reg)?;
            for (k, v) in &moved.values {
                if *v != image.values[k] && key_cell(model, *k).dist(key_cell(model, key)) > 1 {
                    locality = false;
                }
            }
        }
    }

    // (2) injectivity on the constrained subspace
    let chunks = par::default_chunks(exec);
    let images: Vec<Vec<(Vec<u32>, u64)>> = par::map_chunks(exec, total, chunks, |start, end| {
        let mut x = base.clone();
        (start..end)
            .map(|i| {
                write_config(&mut x, &inner_free, i, model.n_values);
                let y = pair.apply_spins(model, &x, reg);
                (reg.iter().map(|s| y.value(s)).collect(), i)
            })
            .collect()
    });
    let mut seen = HashSet::with_capacity(total as usize);
    let mut injectivity = true;
    for (img, _) in images.into_iter().flatten() {
        if !seen.insert(img) {
            injectivity = false;
        }
    }

    // (3) energy quasi-invariance on Λ⁺
    let mut draws = vec![None];
    for t in 0..trials {
        let omega = model.sample_omega(spec, &pair.output_cells(model, &outer).thicken(1), seeds::derive_seed(seed, "symmetry-energy", t as u64))?;
        draws.push(Some(omega));
    }
    let edge = boundary(&outer, 1, Side::Internal);
    let mut fields = Vec::with_capacity(draws.len());
    for d in &draws {
        match d {
            None => fields.push((crate::disorder::RandomField::zero(), crate::disorder::RandomField::zero(), 0.0)),
            Some(omega) => {
                let eta = model.eta_from_omega(omega, &outer)?;
                let teta = model.eta_from_omega(&pair.apply_omega(model, omega, &outer)?, &outer)?;
                let rhs = eta.abs_sum(edge.iter()) + teta.abs_sum(edge.iter());
                fields.push((eta, teta, rhs));
            }
        }
    }
    let stats: Vec<(f64, f64)> = par::map_chunks(exec, total, chunks, |start, end| {
        let mut x = base.clone();
        let (mut gap_max, mut margin_min) = (0.0f64, f64::INFINITY);
        for i in start..end {
            write_config(&mut x, &inner_free, i, model.n_values);
            let y = pair.apply_spins(model, &x, &outer);
            for (eta, teta, rhs) in &fields {
                let h1 = hamiltonian(model, eta, &outer, &BoundaryCondition::Ground(pair.k1), &x);
                if !h1.is_finite() {
                    continue;
                }
                let h2 = hamiltonian(model, teta, &outer, &BoundaryCondition::Ground(pair.k2), &y);
                let gap = (h1 - h2).abs();
                let gap = if gap.is_nan() { f64::INFINITY } else { gap };
                gap_max = gap_max.max(gap);
                margin_min = margin_min.min(rhs - gap);
            }
        }
        (gap_max, margin_min)
    });
    let max_energy_gap = stats.iter().map(|s| s.0).fold(0.0, f64::max);
    let min_energy_margin = stats.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let energy = min_energy_margin >= -1e-9;

    // (4) Lipschitz estimate by finite differences
    let h = 1e-3;
    let omega = model.sample_omega(spec, &pair.output_cells(model, reg).thicken(1), seeds::derive_seed(seed, "symmetry-lip", 0))?;
    let image = pair.apply_omega(model, &omega, reg)?;
    let mut lipschitz_estimate = 0.0f64;
    for key in pair.p_set(model, reg).into_iter().take(64) {
        let mut w = omega.clone();
        *w.values.get_mut(&key).expect("p_set key is sampled") += h;
        let moved = pair.apply_omega(model, &w, reg)?;
        let diff = moved.values.iter().map(|(k, v)| (v - image.values[k]).abs()).fold(0.0, f64::max);
        lipschitz_estimate = lipschitz_estimate.max(diff / h);
    }
    let lipschitz = lipschitz_estimate <= pair.lipschitz + 1e-9;

    // (5) invariance of the disorder law
    let (measure, measure_distance, measure_threshold) = measure_check(pair, model, reg, spec, seed)?;

    Ok(SymmetryReport {
        locality,
        injectivity,
        energy,
        lipschitz,
        measure,
        max_energy_gap,
        min_energy_margin,
        lipschitz_estimate,
        measure_distance,
        measure_threshold,
        configs_checked: total,
    })
}

/// Atoms of a discrete single-coordinate law.
fn discrete_atoms(spec: &DistributionSpec) -> Option<Vec<(f64, f64)>> {
    match spec.kind {
        DisorderKind::Bounded { law: BoundedLaw::TwoPoint } => {
            Some(vec![(-spec.epsilon, 0.5), (spec.epsilon, 0.5)])
        }
        DisorderKind::Occupation => Some(vec![(0.0, 1.0 - spec.epsilon), (1.0, spec.epsilon)]),
        _ => None,
    }
}

fn merge_atoms(mut atoms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (x, p) in atoms {
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 += p,
            _ => out.push((x, p)),
        }
    }
    out.retain(|a| a.1 > 0.0);
    out
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_distance(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Critical value of the two-sample KS test at level 0.01.
pub fn ks_critical_001(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n * m) as f64).sqrt()
}

fn measure_check(
    pair: &SymmetryPair,
    model: &ModelInstance,
    reg: &Region,
    spec: DistributionSpec,
    seed: u64,
) -> Result<(bool, f64, f64)> {
    // τ must read each source coordinate once for a product law to push
    // forward coordinatewise.
    let cells = pair.output_cells(model, reg);
    let mut sources = HashSet::new();
    let mut outputs = 0usize;
    for s in cells.iter() {
        for q in &pair.quench {
            sources.insert(model.omega_key(q.beta, s.add(q.cell), q.atom));
            outputs += 1;
        }
    }
    if sources.len() != outputs {
        return Ok((false, f64::INFINITY, 0.0));
    }
    if let Some(law) = discrete_atoms(&spec) {
        let mut worst = 0.0f64;
        for sign in pair.quench.iter().map(|q| q.sign) {
            let pushed = merge_atoms(law.iter().map(|&(x, p)| (sign * x, p)).collect());
            let orig = merge_atoms(law.clone());
            if pushed.len() != orig.len() {
                return Ok((false, 1.0, 0.0));
            }
            for (a, b) in pushed.iter().zip(&orig) {
                if a.0 != b.0 {
                    return Ok((false, 1.0, 0.0));
                }
                worst = worst.max((a.1 - b.1).abs());
            }
        }
        return Ok((worst == 0.0, worst, 0.0));
    }
    let cell = Region::new(model.dim, [Site::ORIGIN]);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for t in 0..400u64 {
        let omega = model.sample_omega(spec, &pair.output_cells(model, &cell).thicken(1), seeds::derive_seed(seed, "symmetry-measure-a", t))?;
        a.extend(pair.apply_omega(model, &omega, &cell)?.values.into_values());
        let fresh = model.sample_omega(spec, &pair.output_cells(model, &cell), seeds::derive_seed(seed, "symmetry-measure-b", t))?;
        b.extend(fresh.values.into_values());
    }
    let crit = ks_critical_001(a.len(), b.len());
    let d = ks_distance(&mut a, &mut b);
    Ok((d <= crit, d, crit))
}
