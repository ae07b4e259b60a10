//! Dyadic coarse-graining of regions and the chaining quantities built on
//! it: admissible-cube replicas B_ℓ(Λ), observed geometric constants, the
//! metric d̄ on contour shapes, covering nets and the Dudley sum.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;
use serde::Serialize;

use crate::contours::Contour;
use crate::error::Result;
use crate::lattice::{boundary, enumerate_regions, interior, neighbor_offsets, Adjacency, Region, Side, Site};
use crate::par::{self, Execution};
use crate::seeds;

/// The ℓ-cube Π_i [2^ℓ s_i, 2^ℓ(s_i + 1)).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CubeIndex {
    pub level: u32,
    pub base: Site,
}

impl CubeIndex {
    pub fn containing(s: Site, level: u32, d: usize) -> CubeIndex {
        let mut base = Site::ORIGIN;
        for i in 0..d {
            base.0[i] = s.0[i] >> level;
        }
        CubeIndex { level, base }
    }

    pub fn side(&self) -> i32 {
        1 << self.level
    }

    pub fn volume(&self, d: usize) -> usize {
        1usize << (self.level as usize * d)
    }

    pub fn sites(&self, d: usize) -> Region {
        let side = self.side();
        let lo = self.base.scale(side);
        let hi = lo.add(Site::new(&vec![side - 1; d]));
        Region::cuboid(d, lo, hi)
    }
}

/// B_ℓ(Λ): the cubes holding at least half their sites in Λ.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseReplica {
    pub level: u32,
    pub cubes: BTreeSet<CubeIndex>,
    pub covered: Region,
}

fn cube_counts(reg: &Region, level: u32) -> HashMap<CubeIndex, usize> {
    let mut counts = HashMap::new();
    for s in reg.iter() {
        *counts.entry(CubeIndex::containing(s, level, reg.dim())).or_insert(0) += 1;
    }
    counts
}

pub fn coarse_replica(reg: &Region, level: u32) -> CoarseReplica {
    let d = reg.dim();
    let counts = cube_counts(reg, level);
    let cubes: BTreeSet<CubeIndex> =
        counts.into_iter().filter(|(c, n)| 2 * n >= c.volume(d)).map(|(c, _)| c).collect();
    let covered = if level == 0 {
        reg.clone()
    } else {
        Region::new(d, cubes.iter().flat_map(|c| c.sites(d).sites().to_vec()))
    };
    CoarseReplica { level, cubes, covered }
}

/// ∂ext Λ: sites outside Λ at L∞ distance 1.
pub fn outer_boundary(reg: &Region) -> Region {
    boundary(reg, 1, Side::External)
}

/// ∂ext₂ Λ: sites outside Λ within L∞ distance 2.
pub fn outer_shell2(reg: &Region) -> Region {
    reg.thicken(2).difference(reg)
}

/// One measured inequality instance.
#[derive(Clone, Debug, Serialize)]
pub struct AuditRow {
    pub instance_id: usize,
    pub level: u32,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub constant_name: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometryAudit {
    pub rows: Vec<AuditRow>,
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
}

impl GeometryAudit {
    /// All three constants are finite.
    pub fn holds(&self) -> bool {
        self.b0.is_finite() && self.b1.is_finite() && self.b2.is_finite()
    }
}

fn audit_instance(id: usize, reg: &Region, levels: u32) -> Vec<AuditRow> {
    let d = reg.dim();
    let ext = outer_boundary(reg);
    let ext_len = ext.len() as f64;
    let mut rows = Vec::new();
    let row = |level, lhs: f64, rhs: f64, name| AuditRow {
        instance_id: id,
        level,
        lhs,
        rhs,
        ratio: if rhs > 0.0 { lhs / rhs } else if lhs > 0.0 { f64::INFINITY } else { 0.0 },
        constant_name: name,
    };
    let replicas: Vec<CoarseReplica> = (0..=levels + 1).map(|l| coarse_replica(reg, l)).collect();
    for level in 0..=levels {
        let b = &replicas[level as usize];
        rows.push(row(level, outer_boundary(&b.covered).len() as f64, ext_len, "b1"));
        let next = &replicas[level as usize + 1];
        rows.push(row(
            level,
            b.covered.sym_diff(&next.covered).len() as f64,
            (1u64 << level) as f64 * ext_len,
            "b2",
        ));
        if level == 0 {
            continue;
        }
        // Face-sharing pairs of an admissible cube and an inadmissible one.
        let face = neighbor_offsets(d, Adjacency::L1);
        let mut worst: Option<(f64, f64)> = None;
        for cube in &b.cubes {
            for o in &face {
                let other = CubeIndex { level, base: cube.base.add(*o) };
                if b.cubes.contains(&other) {
                    continue;
                }
                let u = cube.sites(d).union(&other.sites(d));
                let hits = ext.intersection(&u).len() as f64;
                let lhs = (1u64 << (level as usize * (d - 1))) as f64;
                let ratio = if hits > 0.0 { lhs / hits } else { f64::INFINITY };
                if worst.map_or(true, |(r, _)| ratio > r) {
                    worst = Some((ratio, hits));
                }
            }
        }
        if let Some((_, hits)) = worst {
            rows.push(row(level, (1u64 << (level as usize * (d - 1))) as f64, hits, "b0"));
        }
    }
    rows
}

/// Audits the coarse-graining inequalities on every region of `suite` for
/// ℓ = 0..=levels and reports the largest observed ratios.
pub fn audit_geometry(suite: &[Region], levels: u32, exec: Execution) -> GeometryAudit {
    let rows: Vec<AuditRow> =
        par::map_indices(exec, suite.len(), |i| audit_instance(i, &suite[i], levels)).into_iter().flatten().collect();
    let max_of = |name: &str| {
        rows.iter().filter(|r| r.constant_name == name).map(|r| r.ratio).fold(0.0, f64::max)
    };
    let (b0, b1, b2) = (max_of("b0"), max_of("b1"), max_of("b2"));
    GeometryAudit { rows, b0, b1, b2 }
}

/// ℓ₀(n) = ⌈ln(b₁n)/((d−1) ln 2)⌉.
pub fn ell0(n: usize, d: usize, b1: f64) -> u32 {
    ((b1 * n as f64).ln() / ((d as f64 - 1.0) * std::f64::consts::LN_2)).ceil().max(0.0) as u32
}

/// Pinned suite of random connected blobs grown from the origin by
/// attaching uniformly chosen L1 neighbours.
pub fn blob_suite(d: usize, count: usize, min_size: usize, max_size: usize, seed: u64) -> Vec<Region> {
    let nbrs = neighbor_offsets(d, Adjacency::L1);
    (0..count)
        .map(|i| {
            let mut rng = seeds::stream(seed, "blob", i as u64);
            let size = rng.gen_range(min_size..=max_size);
            let mut sites = vec![Site::ORIGIN];
            let mut member: BTreeSet<Site> = sites.iter().copied().collect();
            while sites.len() < size {
                let from = sites[rng.gen_range(0..sites.len())];
                let to = from.add(nbrs[rng.gen_range(0..nbrs.len())]);
                if member.insert(to) {
                    sites.push(to);
                }
            }
            Region::new(d, sites)
        })
        .collect()
}

/// A support with its interiors by ground-state label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shape {
    pub support: Region,
    pub interiors: Vec<Region>,
}

impl Shape {
    pub fn from_contour(c: &Contour) -> Shape {
        Shape { support: c.support.clone(), interiors: c.interiors.clone() }
    }

    /// A bare region with its whole interior under a single label.
    pub fn from_region(reg: &Region) -> Shape {
        Shape { support: reg.clone(), interiors: vec![interior(reg)] }
    }
}

/// d̄(C₁, C₂) = ν·[Σ_k |Int_k C₁ △ Int_k C₂| + |∂ext₂Int_k C₁ ∪ ∂ext₂Int_k C₂|]^{1/2},
/// and 0 when the supports coincide. Empty interiors contribute nothing.
pub fn dbar(a: &Shape, b: &Shape, nu: f64) -> f64 {
    if a.support == b.support {
        return 0.0;
    }
    let d = a.support.dim();
    let empty = Region::empty(d);
    let k = a.interiors.len().max(b.interiors.len());
    let mut total = 0usize;
    for i in 0..k {
        let x = a.interiors.get(i).unwrap_or(&empty);
        let y = b.interiors.get(i).unwrap_or(&empty);
        total += x.sym_diff(y).len() + outer_shell2(x).union(&outer_shell2(y)).len();
    }
    nu * (total as f64).sqrt()
}

/// One level of the covering table.
#[derive(Clone, Debug, Serialize)]
pub struct NetLevel {
    pub level: u32,
    pub radius: f64,
    pub net_size: usize,
    /// Largest d̄ from a member to its representative.
    pub max_member_distance: f64,
    /// ln(net size)·2^{ℓ(d−1)}/(ℓn): the smallest b₄ consistent with this level.
    pub b4_observed: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoveringTable {
    pub n: usize,
    pub d: usize,
    pub family_size: usize,
    pub b3: f64,
    pub levels: Vec<NetLevel>,
    pub dudley_integral: f64,
    pub summands: Vec<f64>,
    pub summands_nonincreasing: bool,
}

/// b₃ = 2(√2+1)√(2b₂) + √2·5^{d/2}.
pub fn b3_from(b2: f64, d: usize) -> f64 {
    2.0 * (2f64.sqrt() + 1.0) * (2.0 * b2).sqrt() + 2f64.sqrt() * 5f64.powf(d as f64 / 2.0)
}

/// Per-level terms √ℓ·2^{−ℓ(d−2)/2} of the chaining series.
pub fn dudley_summands(d: usize, levels: u32) -> Vec<f64> {
    (1..=levels).map(|l| (l as f64).sqrt() * 2f64.powf(-(l as f64) * (d as f64 - 2.0) / 2.0)).collect()
}

pub fn nonincreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0] + 1e-15)
}

/// Nets over the anchored shapes of size n: at each level, one
/// representative per distinct tuple (B_ℓ(Int_k))_k. The Dudley sum is
/// r₀√ln|T| + Σ_ℓ (r_{ℓ+1} − r_ℓ)√ln N_ℓ on the dyadic radius grid.
pub fn covering_table(shapes: &[Shape], n: usize, d: usize, nu: f64, b3: f64, levels: u32) -> CoveringTable {
    let radius = |l: u32| nu * b3 * 2f64.powf(l as f64 / 2.0) * (n as f64).sqrt();
    let mut out = Vec::new();
    for level in 0..=levels {
        let mut reps: BTreeMap<Vec<Vec<CubeIndex>>, usize> = BTreeMap::new();
        let mut worst = 0.0f64;
        for (i, s) in shapes.iter().enumerate() {
            let key: Vec<Vec<CubeIndex>> = if level == 0 {
                s.interiors.iter().map(|r| r.iter().map(|x| CubeIndex { level: 0, base: x }).collect()).collect()
            } else {
                s.interiors.iter().map(|r| coarse_replica(r, level).cubes.into_iter().collect()).collect()
            };
            let rep = *reps.entry(key).or_insert(i);
            worst = worst.max(dbar(s, &shapes[rep], nu));
        }
        let size = reps.len();
        let b4 = if level == 0 || size <= 1 {
            0.0
        } else {
            (size as f64).ln() * 2f64.powi((level as usize * (d - 1)) as i32) / (level as f64 * n as f64)
        };
        out.push(NetLevel { level, radius: radius(level), net_size: size, max_member_distance: worst, b4_observed: b4 });
    }
    let mut dudley = radius(0) * (shapes.len().max(1) as f64).ln().sqrt();
    for w in out.windows(2) {
        dudley += (w[1].radius - w[0].radius) * (w[0].net_size.max(1) as f64).ln().sqrt();
    }
    let summands = dudley_summands(d, levels.max(1));
    CoveringTable {
        n,
        d,
        family_size: shapes.len(),
        b3,
        summands_nonincreasing: nonincreasing(&summands),
        summands,
        levels: out,
        dudley_integral: dudley,
    }
}

/// Anchored connected regions of n sites as shapes, then the covering table.
pub fn covering_and_entropy(n: usize, d: usize, nu: f64, b3: f64, levels: u32, budget: usize) -> Result<CoveringTable> {
    let family = enumerate_regions(n, d, true, budget)?;
    let shapes: Vec<Shape> = family.regions.iter().map(Shape::from_region).collect();
    Ok(covering_table(&shapes, n, d, nu, b3, levels))
}
