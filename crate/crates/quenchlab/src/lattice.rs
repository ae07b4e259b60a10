//! Finite geometry on Z^d with the L∞ metric: sites, regions, boundaries,
//! connectivity, region enumeration and period blocking.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Largest supported lattice dimension. Unused coordinates stay at zero.
pub const MAX_DIM: usize = 3;

/// A lattice site. Coordinates beyond the working dimension are zero, so the
/// derived ordering is lexicographic in the active coordinates.
#[derive(
    Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
pub struct Site(pub [i32; MAX_DIM]);

impl Site {
    pub const ORIGIN: Site = Site([0; MAX_DIM]);

    pub fn new(coords: &[i32]) -> Site {
        assert!(coords.len() <= MAX_DIM, "dimension above MAX_DIM");
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Site(c)
    }

    pub fn unit(d: usize, axis: usize, sign: i32) -> Site {
        assert!(axis < d && d <= MAX_DIM);
        let mut c = [0; MAX_DIM];
        c[axis] = sign;
        Site(c)
    }

    pub fn add(self, o: Site) -> Site {
        let mut c = self.0;
        for i in 0..MAX_DIM {
            c[i] += o.0[i];
        }
        Site(c)
    }

    pub fn sub(self, o: Site) -> Site {
        let mut c = self.0;
        for i in 0..MAX_DIM {
            c[i] -= o.0[i];
        }
        Site(c)
    }

    pub fn scale(self, k: i32) -> Site {
        Site(self.0.map(|v| v * k))
    }

    pub fn linf(self) -> i32 {
        self.0.iter().map(|v| v.abs()).max().unwrap_or(0)
    }

    pub fn l1(self) -> i32 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn dist(self, o: Site) -> i32 {
        self.sub(o).linf()
    }

    pub fn coords(&self, d: usize) -> &[i32] {
        &self.0[..d]
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.0[0], self.0[1], self.0[2])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Adjacency {
    Linf,
    L1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    External,
    Internal,
}

/// All offsets with L∞ norm at most `r`, the zero offset included, in
/// lexicographic order.
pub fn ball_offsets(d: usize, r: i32) -> Vec<Site> {
    box_sites(d, Site::ORIGIN.sub(Site::new(&vec![r; d])), Site::new(&vec![r; d])).collect()
}

/// Nonzero offsets of unit norm under the given adjacency.
pub fn neighbor_offsets(d: usize, adjacency: Adjacency) -> Vec<Site> {
    match adjacency {
        Adjacency::Linf => ball_offsets(d, 1).into_iter().filter(|s| *s != Site::ORIGIN).collect(),
        Adjacency::L1 => {
            let mut v = Vec::with_capacity(2 * d);
            for i in 0..d {
                v.push(Site::unit(d, i, -1));
                v.push(Site::unit(d, i, 1));
            }
            v.sort();
            v
        }
    }
}

/// Iterates the sites of the closed box `[lo, hi]` in lexicographic order.
pub fn box_sites(d: usize, lo: Site, hi: Site) -> impl Iterator<Item = Site> {
    let empty = (0..d).any(|i| lo.0[i] > hi.0[i]);
    let mut cur = if empty { None } else { Some(lo) };
    std::iter::from_fn(move || {
        let out = cur?;
        let mut next = out;
        let mut axis = d;
        loop {
            if axis == 0 {
                cur = None;
                break;
            }
            axis -= 1;
            if next.0[axis] < hi.0[axis] {
                next.0[axis] += 1;
                cur = Some(next);
                break;
            }
            next.0[axis] = lo.0[axis];
        }
        Some(out)
    })
}

/// A dense array over a box of sites.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    pub dim: usize,
    pub lo: Site,
    pub shape: [usize; MAX_DIM],
    pub data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn new(dim: usize, lo: Site, hi: Site, fill: T) -> Grid<T> {
        let mut shape = [1usize; MAX_DIM];
        for i in 0..dim {
            shape[i] = (hi.0[i] - lo.0[i] + 1).max(0) as usize;
        }
        let n = shape.iter().product();
        Grid { dim, lo, shape, data: vec![fill; n] }
    }

    pub fn hi(&self) -> Site {
        let mut h = self.lo;
        for i in 0..self.dim {
            h.0[i] += self.shape[i] as i32 - 1;
        }
        h
    }

    #[inline]
    pub fn index(&self, s: Site) -> Option<usize> {
        let mut idx = 0usize;
        for i in 0..self.dim {
            let off = s.0[i] - self.lo.0[i];
            if off < 0 || off as usize >= self.shape[i] {
                return None;
            }
            idx = idx * self.shape[i] + off as usize;
        }
        Some(idx)
    }

    pub fn site_of(&self, mut idx: usize) -> Site {
        let mut s = self.lo;
        for i in (0..self.dim).rev() {
            s.0[i] += (idx % self.shape[i]) as i32;
            idx /= self.shape[i];
        }
        s
    }

    pub fn get(&self, s: Site) -> Option<&T> {
        self.index(s).map(|i| &self.data[i])
    }

    pub fn set(&mut self, s: Site, v: T) {
        let i = self.index(s).expect("site outside grid");
        self.data[i] = v;
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> {
        box_sites(self.dim, self.lo, self.hi())
    }

    pub fn contains(&self, s: Site) -> bool {
        self.index(s).is_some()
    }
}

/// A finite set of sites with sorted iteration and hashed membership.
#[derive(Clone)]
pub struct Region {
    dim: usize,
    sites: Vec<Site>,
    members: HashSet<Site>,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.sites == other.sites
    }
}
impl Eq for Region {}

impl std::hash::Hash for Region {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.dim.hash(state);
        self.sites.hash(state);
    }
}

impl PartialOrd for Region {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Region {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.sites.len(), &self.sites).cmp(&(other.sites.len(), &other.sites))
    }
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Region(d={}, {:?})", self.dim, self.sites)
    }
}

impl Region {
    pub fn new(dim: usize, sites: impl IntoIterator<Item = Site>) -> Region {
        assert!((1..=MAX_DIM).contains(&dim), "dimension out of range");
        let mut v: Vec<Site> = sites.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        let members = v.iter().copied().collect();
        Region { dim, sites: v, members }
    }

    pub fn empty(dim: usize) -> Region {
        Region::new(dim, std::iter::empty())
    }

    /// The closed box `[lo, hi]`.
    pub fn cuboid(dim: usize, lo: Site, hi: Site) -> Region {
        Region::new(dim, box_sites(dim, lo, hi))
    }

    /// A box of side `side` with lower corner at the origin.
    pub fn cube(dim: usize, side: i32) -> Region {
        Region::cuboid(dim, Site::ORIGIN, Site::new(&vec![side - 1; dim]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn len(&self) -> usize {
        self.sites.len()
    }
    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
    pub fn sites(&self) -> &[Site] {
        &self.sites
    }
    pub fn iter(&self) -> impl Iterator<Item = Site> + '_ {
        self.sites.iter().copied()
    }
    #[inline]
    pub fn contains(&self, s: Site) -> bool {
        self.members.contains(&s)
    }

    /// Lower and upper corners of the bounding box, or `None` when empty.
    pub fn bbox(&self) -> Option<(Site, Site)> {
        let first = *self.sites.first()?;
        let (mut lo, mut hi) = (first, first);
        for s in &self.sites {
            for i in 0..self.dim {
                lo.0[i] = lo.0[i].min(s.0[i]);
                hi.0[i] = hi.0[i].max(s.0[i]);
            }
        }
        Some((lo, hi))
    }

    pub fn translate(&self, t: Site) -> Region {
        Region::new(self.dim, self.sites.iter().map(|s| s.add(t)))
    }

    pub fn union(&self, o: &Region) -> Region {
        Region::new(self.dim, self.iter().chain(o.iter()))
    }
    pub fn intersection(&self, o: &Region) -> Region {
        Region::new(self.dim, self.iter().filter(|s| o.contains(*s)))
    }
    pub fn difference(&self, o: &Region) -> Region {
        Region::new(self.dim, self.iter().filter(|s| !o.contains(*s)))
    }
    pub fn sym_diff(&self, o: &Region) -> Region {
        self.difference(o).union(&o.difference(self))
    }
    pub fn is_subset(&self, o: &Region) -> bool {
        self.iter().all(|s| o.contains(s))
    }
    pub fn is_disjoint(&self, o: &Region) -> bool {
        let (a, b) = if self.len() <= o.len() { (self, o) } else { (o, self) };
        a.iter().all(|s| !b.contains(s))
    }

    /// L∞ distance between two regions; `i32::MAX` if either is empty.
    pub fn distance(&self, o: &Region) -> i32 {
        if self.is_empty() || o.is_empty() {
            return i32::MAX;
        }
        let (a, b) = if self.len() <= o.len() { (self, o) } else { (o, self) };
        // Growing balls around the smaller set until the larger one is hit.
        let (blo, bhi) = b.bbox().unwrap();
        let mut best = i32::MAX;
        for s in a.iter() {
            let mut lower = 0;
            for i in 0..self.dim {
                lower = lower.max(blo.0[i] - s.0[i]).max(s.0[i] - bhi.0[i]);
            }
            if lower >= best {
                continue;
            }
            for t in b.iter() {
                let dd = s.dist(t);
                if dd < best {
                    best = dd;
                    if best == 0 {
                        return 0;
                    }
                }
            }
        }
        best
    }

    /// Sites within L∞ distance `r` of the region (the region included).
    pub fn thicken(&self, r: i32) -> Region {
        if r <= 0 {
            return self.clone();
        }
        let offs = ball_offsets(self.dim, r);
        let mut out = HashSet::with_capacity(self.len() * offs.len() / 2);
        for s in self.iter() {
            for o in &offs {
                out.insert(s.add(*o));
            }
        }
        Region::new(self.dim, out)
    }

    /// Sites of the region whose distance to the complement is at most `n`.
    pub fn collar(&self, n: i32) -> Region {
        let dist = self.inner_distances(n + 1);
        Region::new(
            self.dim,
            self.iter().filter(|s| dist.get(*s).map_or(false, |&v| v <= n)),
        )
    }

    /// Distance of each site of the region to the complement, truncated at
    /// `cap` (sites farther away report `cap`).
    pub fn inner_distances(&self, cap: i32) -> Grid<i32> {
        let Some((lo, hi)) = self.bbox() else {
            return Grid::new(self.dim, Site::ORIGIN, Site::ORIGIN.sub(Site::new(&[1])), 0);
        };
        let one = Site::new(&vec![1; self.dim]);
        let mut g = Grid::new(self.dim, lo.sub(one), hi.add(one), i32::MAX);
        let mut queue = VecDeque::new();
        for i in 0..g.data.len() {
            let s = g.site_of(i);
            if !self.contains(s) {
                g.data[i] = 0;
                queue.push_back(s);
            }
        }
        bfs_linf(&mut g, queue, cap);
        for v in g.data.iter_mut() {
            if *v > cap {
                *v = cap;
            }
        }
        g
    }
}

/// Multi-source breadth-first search with king moves; fills exact L∞
/// distances up to `cap` into cells still holding `i32::MAX`.
fn bfs_linf(g: &mut Grid<i32>, mut queue: VecDeque<Site>, cap: i32) {
    let offs = neighbor_offsets(g.dim, Adjacency::Linf);
    while let Some(s) = queue.pop_front() {
        let ds = *g.get(s).unwrap();
        if ds >= cap {
            continue;
        }
        for o in &offs {
            let t = s.add(*o);
            if let Some(i) = g.index(t) {
                if g.data[i] == i32::MAX {
                    g.data[i] = ds + 1;
                    queue.push_back(t);
                }
            }
        }
    }
}

/// ∂ext_n (sites outside at distance exactly n) or ∂int_n (sites inside at
/// distance exactly n from the complement).
pub fn boundary(reg: &Region, n: i32, side: Side) -> Region {
    assert!(n >= 1, "boundary order must be positive");
    let d = reg.dim();
    let Some((lo, hi)) = reg.bbox() else {
        return Region::empty(d);
    };
    match side {
        Side::External => {
            let pad = Site::new(&vec![n; d]);
            let mut g = Grid::new(d, lo.sub(pad), hi.add(pad), i32::MAX);
            let mut queue = VecDeque::new();
            for s in reg.iter() {
                g.set(s, 0);
                queue.push_back(s);
            }
            bfs_linf(&mut g, queue, n);
            let sites: Vec<Site> =
                (0..g.data.len()).filter(|&i| g.data[i] == n).map(|i| g.site_of(i)).collect();
            Region::new(d, sites)
        }
        Side::Internal => {
            let dist = reg.inner_distances(n + 1);
            Region::new(d, reg.iter().filter(|s| *dist.get(*s).unwrap() == n))
        }
    }
}

/// Partition into maximal connected parts, ordered by smallest member.
pub fn connected_components(reg: &Region, adjacency: Adjacency) -> Vec<Region> {
    let offs = neighbor_offsets(reg.dim(), adjacency);
    let mut seen: HashSet<Site> = HashSet::with_capacity(reg.len());
    let mut out = Vec::new();
    for s in reg.iter() {
        if !seen.insert(s) {
            continue;
        }
        let mut comp = vec![s];
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for o in &offs {
                let v = u.add(*o);
                if reg.contains(v) && seen.insert(v) {
                    comp.push(v);
                    stack.push(v);
                }
            }
        }
        out.push(Region::new(reg.dim(), comp));
    }
    out
}

/// Bounded connected components of the complement (L∞ connectivity),
/// ordered by smallest member.
pub fn holes(reg: &Region) -> Vec<Region> {
    let d = reg.dim();
    let Some((lo, hi)) = reg.bbox() else {
        return Vec::new();
    };
    let one = Site::new(&vec![1; d]);
    let mut g = Grid::new(d, lo.sub(one), hi.add(one), false);
    // Flood the outside from the grid border.
    let mut stack = Vec::new();
    for i in 0..g.data.len() {
        let s = g.site_of(i);
        let on_border = (0..d).any(|a| s.0[a] == g.lo.0[a] || s.0[a] == g.hi().0[a]);
        if on_border {
            g.data[i] = true;
            stack.push(s);
        }
    }
    let offs = neighbor_offsets(d, Adjacency::Linf);
    while let Some(s) = stack.pop() {
        for o in &offs {
            let t = s.add(*o);
            if let Some(i) = g.index(t) {
                if !g.data[i] && !reg.contains(t) {
                    g.data[i] = true;
                    stack.push(t);
                }
            }
        }
    }
    let inside: Vec<Site> = (0..g.data.len())
        .filter(|&i| !g.data[i])
        .map(|i| g.site_of(i))
        .filter(|s| !reg.contains(*s))
        .collect();
    connected_components(&Region::new(d, inside), Adjacency::Linf)
}

/// Union of the bounded complement components.
pub fn interior(reg: &Region) -> Region {
    let d = reg.dim();
    Region::new(d, holes(reg).iter().flat_map(|h| h.sites().to_vec()))
}

/// Result of a region enumeration.
#[derive(Clone, Debug)]
pub struct RegionEnumeration {
    pub regions: Vec<Region>,
    pub count: usize,
}

/// All L∞-connected regions of `n` sites. Unanchored output lists one
/// representative per translation class (lexicographically smallest site
/// at the origin); anchored output lists every region with the origin in
/// the region or its interior.
pub fn enumerate_regions(n: usize, d: usize, anchored: bool, budget: usize) -> Result<RegionEnumeration> {
    if n == 0 {
        return Err(LabError::Parameter("region size must be positive".into()));
    }
    let offs = neighbor_offsets(d, Adjacency::Linf);
    let mut reps: Vec<Region> = Vec::new();
    let mut reached: HashSet<Site> = HashSet::new();
    reached.insert(Site::ORIGIN);
    let mut poly = Vec::with_capacity(n);
    redelmeier(d, n, &offs, vec![Site::ORIGIN], &mut poly, &mut reached, &mut reps, budget)?;
    if !anchored {
        let count = reps.len();
        return Ok(RegionEnumeration { regions: reps, count });
    }
    let mut out = Vec::new();
    for p in &reps {
        let filled = p.union(&interior(p));
        for t in filled.iter() {
            if out.len() >= budget {
                return Err(LabError::Budget(format!(
                    "anchored region enumeration exceeds {budget} regions at n={n}"
                )));
            }
            out.push(p.translate(Site::ORIGIN.sub(t)));
        }
    }
    out.sort();
    let count = out.len();
    Ok(RegionEnumeration { regions: out, count })
}

#[allow(clippy::too_many_arguments)]
fn redelmeier(
    d: usize,
    n: usize,
    offs: &[Site],
    mut untried: Vec<Site>,
    poly: &mut Vec<Site>,
    reached: &mut HashSet<Site>,
    out: &mut Vec<Region>,
    budget: usize,
) -> Result<()> {
    while let Some(c) = untried.pop() {
        poly.push(c);
        if poly.len() == n {
            if out.len() >= budget {
                return Err(LabError::Budget(format!(
                    "region enumeration exceeds {budget} regions at n={n}"
                )));
            }
            out.push(Region::new(d, poly.iter().copied()));
        } else {
            let mut fresh = Vec::new();
            for o in offs {
                let nb = c.add(*o);
                if nb > Site::ORIGIN && !reached.contains(&nb) {
                    reached.insert(nb);
                    fresh.push(nb);
                }
            }
            let mut next = untried.clone();
            next.extend(fresh.iter().copied());
            redelmeier(d, n, offs, next, poly, reached, out, budget)?;
            for nb in fresh {
                reached.remove(&nb);
            }
        }
        poly.pop();
    }
    Ok(())
}

/// Re-encoding of a period-`period` configuration on hypercube super-sites.
/// Block value = Σ_j digit_j · q^j with sub-sites j in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockingSpec {
    pub dim: usize,
    pub period: usize,
    pub base_values: u32,
}

impl BlockingSpec {
    pub fn new(dim: usize, period: usize, base_values: u32) -> Result<BlockingSpec> {
        if period == 0 || base_values == 0 {
            return Err(LabError::Parameter("blocking period and value count must be positive".into()));
        }
        let spec = BlockingSpec { dim, period, base_values };
        let cells = (base_values as f64).powi(spec.sub_sites() as i32);
        if cells > u32::MAX as f64 {
            return Err(LabError::Parameter("block value space exceeds u32 codes".into()));
        }
        Ok(spec)
    }

    pub fn sub_sites(&self) -> usize {
        self.period.pow(self.dim as u32)
    }

    pub fn block_value_space_size(&self) -> u64 {
        (self.base_values as u64).pow(self.sub_sites() as u32)
    }

    /// Offsets of the sub-sites inside a block, lexicographic.
    pub fn sub_offsets(&self) -> Vec<Site> {
        let p = self.period as i32 - 1;
        box_sites(self.dim, Site::ORIGIN, Site::new(&vec![p; self.dim])).collect()
    }

    pub fn block_of(&self, s: Site) -> (Site, usize) {
        let p = self.period as i32;
        let mut b = Site::ORIGIN;
        let mut j = 0usize;
        for i in 0..self.dim {
            b.0[i] = s.0[i].div_euclid(p);
            j = j * self.period + s.0[i].rem_euclid(p) as usize;
        }
        (b, j)
    }

    pub fn encode(&self, digits: &[u32]) -> u32 {
        digits.iter().rev().fold(0u32, |acc, &x| acc * self.base_values + x)
    }

    pub fn decode(&self, mut code: u32) -> Vec<u32> {
        (0..self.sub_sites())
            .map(|_| {
                let v = code % self.base_values;
                code /= self.base_values;
                v
            })
            .collect()
    }

    /// Blocks a configuration given on a box of whole blocks.
    pub fn block(&self, g: &Grid<u32>) -> Result<Grid<u32>> {
        let p = self.period as i32;
        let mut lo = Site::ORIGIN;
        let mut hi = Site::ORIGIN;
        for i in 0..self.dim {
            if g.lo.0[i].rem_euclid(p) != 0 || g.shape[i] % self.period != 0 {
                return Err(LabError::Domain("grid is not aligned to whole blocks".into()));
            }
            lo.0[i] = g.lo.0[i].div_euclid(p);
            hi.0[i] = lo.0[i] + (g.shape[i] / self.period) as i32 - 1;
        }
        let offs = self.sub_offsets();
        let mut out = Grid::new(self.dim, lo, hi, 0u32);
        for i in 0..out.data.len() {
            let b = out.site_of(i);
            let digits: Vec<u32> = offs.iter().map(|o| *g.get(b.scale(p).add(*o)).unwrap()).collect();
            out.data[i] = self.encode(&digits);
        }
        Ok(out)
    }

    pub fn unblock(&self, g: &Grid<u32>) -> Grid<u32> {
        let p = self.period as i32;
        let lo = g.lo.scale(p);
        let mut hi = g.hi().scale(p);
        for i in 0..self.dim {
            hi.0[i] += p - 1;
        }
        let offs = self.sub_offsets();
        let mut out = Grid::new(self.dim, lo, hi, 0u32);
        for i in 0..g.data.len() {
            let b = g.site_of(i);
            for (o, v) in offs.iter().zip(self.decode(g.data[i])) {
                out.set(b.scale(p).add(*o), v);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_iteration_is_lexicographic() {
        let v: Vec<Site> = box_sites(2, Site::new(&[0, 0]), Site::new(&[1, 2])).collect();
        assert_eq!(v.len(), 6);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn ring_counts() {
        let r = Region::new(2, [Site::ORIGIN]);
        assert_eq!(boundary(&r, 1, Side::External).len(), 8);
        assert_eq!(boundary(&r, 2, Side::External).len(), 16);
        let b = Region::cube(2, 3);
        let inner = boundary(&b, 1, Side::Internal);
        assert_eq!(inner.len(), 8);
        assert!(!inner.contains(Site::new(&[1, 1])));
    }

    #[test]
    fn diagonal_pair_connectivity() {
        let r = Region::new(2, [Site::new(&[0, 0]), Site::new(&[1, 1])]);
        assert_eq!(connected_components(&r, Adjacency::Linf).len(), 1);
        assert_eq!(connected_components(&r, Adjacency::L1).len(), 2);
        assert!(connected_components(&Region::empty(2), Adjacency::Linf).is_empty());
    }

    #[test]
    fn ring_has_one_hole() {
        let ring = boundary(&Region::new(2, [Site::ORIGIN]), 1, Side::External);
        let h = holes(&ring);
        assert_eq!(h.len(), 1);
        assert_eq!(h[0].sites(), &[Site::ORIGIN]);
    }

    #[test]
    fn small_anchored_counts() {
        assert_eq!(enumerate_regions(1, 2, true, 1000).unwrap().count, 1);
        assert_eq!(enumerate_regions(2, 2, true, 1000).unwrap().count, 8);
    }

    #[test]
    fn region_distance() {
        let a = Region::new(2, [Site::ORIGIN]);
        let b = Region::new(2, [Site::new(&[3, -1])]);
        assert_eq!(a.distance(&b), 3);
    }
}
