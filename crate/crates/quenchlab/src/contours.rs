//! Contours: the thickened unstable region of a configuration, split into
//! L∞-connected pieces, each carrying its spin values, exterior label and
//! interiors by ground state.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::disorder::RandomField;
use crate::error::{LabError, Result};
use crate::lattice::{
    boundary, box_sites, connected_components, holes, Adjacency, Region, Side, Site,
};
use crate::models::{hamiltonian, BoundaryCondition, ModelInstance, SpinConfig};

/// A contour. `values[i]` is the spin at `support.sites()[i]`; `label` is the
/// index of the ground state seen from the exterior; `interiors[k]` is
/// Int_k C.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Contour {
    pub dim: usize,
    pub support: Region,
    pub values: Vec<u32>,
    pub label: usize,
    pub interiors: Vec<Region>,
}

impl Contour {
    pub fn size(&self) -> usize {
        self.support.len()
    }

    pub fn value(&self, s: Site) -> Option<u32> {
        self.support.sites().binary_search(&s).ok().map(|i| self.values[i])
    }

    /// Int C, the union of all Int_k C.
    pub fn interior(&self) -> Region {
        Region::new(self.dim, self.interiors.iter().flat_map(|r| r.sites().iter().copied()))
    }

    pub fn interior_size(&self) -> usize {
        self.interiors.iter().map(Region::len).sum()
    }

    /// sC ∪ Int C.
    pub fn filled(&self) -> Region {
        self.support.union(&self.interior())
    }

    /// The ground-state index of a site off the support.
    pub fn region_label(&self, s: Site) -> usize {
        self.interiors.iter().position(|r| r.contains(s)).unwrap_or(self.label)
    }

    /// Spin of the embedded configuration at any site.
    #[inline]
    pub fn config_value(&self, model: &ModelInstance, s: Site) -> u32 {
        match self.value(s) {
            Some(v) => v,
            None => model.ground_states[self.region_label(s)],
        }
    }

    pub fn translate(&self, u: Site) -> Contour {
        Contour {
            dim: self.dim,
            support: self.support.translate(u),
            values: self.values.clone(),
            label: self.label,
            interiors: self.interiors.iter().map(|r| r.translate(u)).collect(),
        }
    }

    /// The translate whose support has its bounding-box corner at the origin.
    pub fn canonical(&self) -> Contour {
        let (lo, _) = self.support.bbox().expect("contour support is nonempty");
        self.translate(Site::ORIGIN.sub(lo))
    }

    /// Canonical text record: dimension, label, sorted support with values.
    pub fn to_text(&self) -> String {
        let mut s = format!("d={} label={} n={}", self.dim, self.label, self.size());
        for (site, v) in self.support.iter().zip(&self.values) {
            let _ = write!(s, " {}:{}", site.coords(self.dim).iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","), v);
        }
        s
    }

    /// C ≤ C′: the support of C lies in Int C′.
    pub fn nested_in(&self, other: &Contour) -> bool {
        other.interiors.iter().any(|r| self.support.is_subset(r))
    }
}

/// Extracted contours with their nesting order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ContourSet {
    pub contours: Vec<Contour>,
}

impl ContourSet {
    pub fn len(&self) -> usize {
        self.contours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contours.is_empty()
    }

    /// The partial order C_i < C_j.
    pub fn less(&self, i: usize, j: usize) -> bool {
        i != j && self.contours[i].nested_in(&self.contours[j])
    }

    /// Contours not nested in any other.
    pub fn external(&self) -> Vec<Contour> {
        (0..self.len())
            .filter(|&i| !(0..self.len()).any(|j| self.less(i, j)))
            .map(|i| self.contours[i].clone())
            .collect()
    }
}

/// δ-compatibility: distance above one, or one contour nested in the other.
pub fn compatible(a: &Contour, b: &Contour) -> bool {
    a.support.distance(&b.support) > 1 || a.nested_in(b) || b.nested_in(a)
}

/// Two contours can both be external in one configuration.
pub fn externally_compatible(a: &Contour, b: &Contour) -> bool {
    a.support.distance(&b.support) > 1 && !a.nested_in(b) && !b.nested_in(a)
}

/// Sites where every ground value is contradicted within L∞ distance one.
pub fn unstable_sites(model: &ModelInstance, x: &SpinConfig) -> Region {
    let d = model.dim;
    let one = Site::new(&vec![1; d]);
    let lo = x.grid.lo.sub(one);
    let hi = x.grid.hi().add(one);
    let offs = model.neighborhood();
    let mut out = Vec::new();
    for s in box_sites(d, lo, hi) {
        let v0 = x.value(s);
        let constant = offs.iter().all(|o| x.value(s.add(*o)) == v0);
        if !(constant && model.ground_index(v0).is_some()) {
            out.push(s);
        }
    }
    Region::new(d, out)
}

/// All contours of an eventually constant configuration.
pub fn extract_contours(model: &ModelInstance, x: &SpinConfig) -> Result<ContourSet> {
    if x.dim() != model.dim {
        return Err(LabError::Domain("configuration dimension differs from the model".into()));
    }
    if model.ground_index(x.background).is_none() {
        return Err(LabError::Domain(
            "configuration is not eventually constant at a ground state".into(),
        ));
    }
    let u = unstable_sites(model, x);
    let tb = u.thicken(1);
    let mut contours = Vec::new();
    for comp in connected_components(&tb, Adjacency::Linf) {
        let values: Vec<u32> = comp.iter().map(|s| x.value(s)).collect();
        contours.push(decompose(model, comp, values)?);
    }
    Ok(ContourSet { contours })
}

/// Classifies the complement of a support: the exterior label from the
/// values facing the unbounded component and Int_k from the values around
/// each bounded one.
pub fn decompose(model: &ModelInstance, support: Region, values: Vec<u32>) -> Result<Contour> {
    let d = support.dim();
    if support.is_empty() || values.len() != support.len() {
        return Err(LabError::InvalidContour("support and values disagree".into()));
    }
    let lookup: HashMap<Site, u32> = support.iter().zip(values.iter().copied()).collect();
    let constant_ground = |sites: &mut dyn Iterator<Item = Site>, what: &str| -> Result<usize> {
        let mut seen: Option<u32> = None;
        for s in sites {
            let v = *lookup.get(&s).ok_or_else(|| {
                LabError::InvalidContour(format!("{what} boundary leaves the support"))
            })?;
            match seen {
                None => seen = Some(v),
                Some(w) if w != v => {
                    return Err(LabError::InvalidContour(format!("mixed boundary values on {what}")))
                }
                _ => {}
            }
        }
        let v = seen.ok_or_else(|| LabError::InvalidContour(format!("{what} has no boundary")))?;
        model
            .ground_index(v)
            .ok_or_else(|| LabError::InvalidContour(format!("{what} boundary is not a ground state")))
    };
    let mut interiors = vec![Vec::new(); model.n_ground()];
    let mut filled: Vec<Site> = support.sites().to_vec();
    for hole in holes(&support) {
        let rim = boundary(&hole, 1, Side::External);
        let k = constant_ground(&mut rim.iter(), "an interior component")?;
        interiors[k].extend(hole.iter());
        filled.extend(hole.iter());
    }
    let filled = Region::new(d, filled);
    let offs = crate::lattice::neighbor_offsets(d, Adjacency::Linf);
    let label = {
        let mut facing = support.iter().filter(|s| offs.iter().any(|o| !filled.contains(s.add(*o))));
        constant_ground(&mut facing, "the exterior")?
    };
    Ok(Contour {
        dim: d,
        support,
        values,
        label,
        interiors: interiors.into_iter().map(|v| Region::new(d, v)).collect(),
    })
}

/// The configuration equal to C on sC, b^k on Int_k C and the label outside.
pub fn embed(model: &ModelInstance, c: &Contour) -> SpinConfig {
    let (lo, hi) = c.support.bbox().expect("nonempty support");
    let mut x = SpinConfig::constant(c.dim, lo, hi, model.ground_states[c.label]);
    for s in box_sites(c.dim, lo, hi) {
        x.set(s, c.config_value(model, s));
    }
    x
}

/// C is exactly the contour set of its own embedding.
pub fn is_valid(model: &ModelInstance, c: &Contour) -> bool {
    match extract_contours(model, &embed(model, c)) {
        Ok(set) => set.contours.len() == 1 && set.contours[0] == *c,
        Err(_) => false,
    }
}

/// Checks the conditions every thickened-unstable component satisfies:
/// each component of the depth-1 layer is constant at a ground value, and
/// the support is exactly the unit thickening of the unstable sites it
/// encloses.
pub fn check_invariants(model: &ModelInstance, c: &Contour) -> Result<()> {
    let rim = c.support.collar(1);
    for comp in connected_components(&rim, Adjacency::Linf) {
        let v = c.value(comp.sites()[0]).unwrap();
        if model.ground_index(v).is_none() || comp.iter().any(|s| c.value(s) != Some(v)) {
            return Err(LabError::InvalidContour("boundary layer component is not a constant ground value".into()));
        }
    }
    let u = unstable_sites(model, &embed(model, c));
    if u.thicken(1).intersection(&c.filled()) != c.support {
        return Err(LabError::InvalidContour("support is not the thickened unstable set".into()));
    }
    Ok(())
}

/// Stable sites of the support lying deeper than its depth-2 collar. Empty
/// for compact contours; nonempty when separate unstable blobs merge into
/// one thickened component.
pub fn stable_deep_sites(model: &ModelInstance, c: &Contour) -> Region {
    let u = unstable_sites(model, &embed(model, c));
    let collar = c.support.collar(2);
    Region::new(c.dim, c.support.iter().filter(|s| !collar.contains(*s) && !u.contains(*s)))
}

/// H(C): the site energies over sC of the embedded configuration.
pub fn contour_energy(model: &ModelInstance, c: &Contour, eta: &RandomField) -> f64 {
    let mut buf = Vec::with_capacity(27);
    let mut total = 0.0;
    for s in c.support.iter() {
        model.gather(s, |t| c.config_value(model, t), &mut buf);
        total += model.local_energy(&buf, eta.get(s));
    }
    total
}

/// D^k_η(C) = Σ_{s∈sC} [e_s(C) − e_s(b^k)].
pub fn excitation_energy(model: &ModelInstance, c: &Contour, eta: &RandomField, k: usize) -> Result<f64> {
    if k != c.label {
        return Err(LabError::Domain(format!(
            "excitation energy with label {k} requested for a contour labelled {}",
            c.label
        )));
    }
    let n = 3usize.pow(model.dim as u32);
    let ground = vec![model.ground_states[k]; n];
    let mut total = contour_energy(model, c, eta);
    for s in c.support.iter() {
        total -= model.local_energy(&ground, eta.get(s));
    }
    Ok(total)
}

/// Both sides of the external-contour decomposition of H^{k0}_reg(x):
/// the direct Hamiltonian, and the ground energy of the exterior plus, per
/// external contour, H(C) and the Hamiltonians of its interiors. `x` must
/// equal b^{k0} on the depth-2 collar of `reg` and outside it.
pub fn decomposition_identity(
    model: &ModelInstance,
    eta: &RandomField,
    reg: &Region,
    k0: usize,
    x: &SpinConfig,
) -> Result<(f64, f64)> {
    let collar = reg.collar(2);
    let g0 = model.ground_states[k0];
    if x.background != g0 || collar.iter().any(|s| x.value(s) != g0) {
        return Err(LabError::Domain("configuration does not match the boundary condition".into()));
    }
    let lhs = hamiltonian(model, eta, reg, &BoundaryCondition::Ground(k0), x);
    let external = extract_contours(model, x)?.external();
    let covered = Region::new(
        model.dim,
        external.iter().flat_map(|c| c.filled().sites().to_vec()),
    );
    let n = 3usize.pow(model.dim as u32);
    let ground = vec![g0; n];
    let mut rhs: f64 = reg
        .iter()
        .filter(|s| !covered.contains(*s))
        .map(|s| model.local_energy(&ground, eta.get(s)))
        .sum();
    let inside = BoundaryCondition::Config(x.clone());
    for c in &external {
        if c.label != k0 {
            return Err(LabError::InvalidContour("external contour label differs from the boundary".into()));
        }
        rhs += contour_energy(model, c, eta);
        for int in &c.interiors {
            rhs += hamiltonian(model, eta, int, &inside, x);
        }
    }
    Ok((lhs, rhs))
}

/// Side of the window that contains the non-background set of every
/// contour with |sC| ≤ n: such a contour has at least 5^{d−1}(a+4) sites
/// when that set spans a sites along some axis.
pub fn window_side(d: usize, n: usize) -> i64 {
    (n / 5usize.pow(d as u32 - 1)) as i64 - 4
}

/// All contours with |sC| ≤ n_max, one per translation class, sorted.
pub fn enumerate_contours_upto(model: &ModelInstance, n_max: usize, budget: u64) -> Result<Vec<Contour>> {
    let d = model.dim;
    let w = window_side(d, n_max);
    if w < 1 {
        return Ok(Vec::new());
    }
    let cells = (w as u32).pow(d as u32);
    let per_label = (model.n_values as f64).powi(cells as i32);
    let total = per_label * model.n_ground() as f64;
    if total > budget as f64 {
        return Err(LabError::Budget(format!(
            "contour enumeration up to size {n_max} needs {total:.3e} window configurations (budget {budget})"
        )));
    }
    let lo = Site::ORIGIN;
    let hi = Site::new(&vec![w as i32 - 1; d]);
    let n_states = per_label as u64;
    let mut found = BTreeSet::new();
    for &g in &model.ground_states {
        let shards = crate::par::map_chunks(
            crate::par::Execution::default(),
            n_states,
            crate::par::default_chunks(crate::par::Execution::default()),
            |start, end| -> Result<BTreeSet<Contour>> {
                let mut local = BTreeSet::new();
                let mut x = SpinConfig::constant(d, lo, hi, g);
                for idx in start..end {
                    let mut r = idx;
                    for v in x.grid.data.iter_mut() {
                        *v = (r % model.n_values as u64) as u32;
                        r /= model.n_values as u64;
                    }
                    for c in extract_contours(model, &x)?.contours {
                        if c.size() <= n_max {
                            local.insert(c.canonical());
                        }
                    }
                }
                Ok(local)
            },
        );
        for s in shards {
            found.extend(s?);
        }
    }
    Ok(found.into_iter().collect())
}

/// All contours with |sC| = n. Anchored output lists every translate with
/// the origin in sC ∪ Int C; otherwise one canonical representative each.
pub fn enumerate_contours(model: &ModelInstance, n: usize, anchored: bool, budget: u64) -> Result<Vec<Contour>> {
    let base: Vec<Contour> =
        enumerate_contours_upto(model, n, budget)?.into_iter().filter(|c| c.size() == n).collect();
    if !anchored {
        return Ok(base);
    }
    Ok(anchor_all(&base))
}

/// Every translate of each contour that places the origin in sC ∪ Int C.
pub fn anchor_all(family: &[Contour]) -> Vec<Contour> {
    let mut out = Vec::new();
    for c in family {
        for p in c.filled().iter() {
            out.push(c.translate(Site::ORIGIN.sub(p)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_model, ModelParams};

    #[test]
    fn window_side_matches_minimum_sizes() {
        assert_eq!(window_side(2, 25), 1);
        assert_eq!(window_side(2, 24), 0);
        assert_eq!(window_side(3, 125), 1);
        assert_eq!(window_side(1, 5), 1);
    }

    #[test]
    fn single_flip_is_five_by_five() {
        let m = make_model(&ModelParams::rfim(2, 1.0)).unwrap();
        let mut x = SpinConfig::constant(2, Site::new(&[-3, -3]), Site::new(&[3, 3]), 0);
        x.set(Site::ORIGIN, 1);
        let set = extract_contours(&m, &x).unwrap();
        assert_eq!(set.len(), 1);
        let c = &set.contours[0];
        assert_eq!(c.size(), 25);
        assert_eq!(c.label, 0);
        assert_eq!(c.interior_size(), 0);
        assert!(is_valid(&m, c));
        check_invariants(&m, c).unwrap();
    }

    #[test]
    fn mismatched_label_is_rejected() {
        let m = make_model(&ModelParams::rfim(2, 1.0)).unwrap();
        let c = &enumerate_contours(&m, 25, false, 1 << 20).unwrap()[0];
        assert!(matches!(
            excitation_energy(&m, c, &RandomField::zero(), 1 - c.label),
            Err(LabError::Domain(_))
        ));
    }
}
