//! Oracles shared by several integration test targets.
#![allow(dead_code)]

use quenchlab::lattice::{box_sites, Region, Site};
use quenchlab::models::{ModelInstance, SpinConfig};
use quenchlab::seeds;
use rand::Rng;

/// Largest E e^{λX} over laws on atoms {x1, x2, x3} with mean 0 and
/// second moment ≤ s2. The feasible weights form a segment in p3, so the
/// linear objective peaks at an end.
pub fn lp_on_atoms(l: f64, s2: f64, x: [f64; 3]) -> Option<f64> {
    let (x1, x2, x3) = (x[0], x[1], x[2]);
    if x2 - x1 < 1e-12 {
        return None;
    }
    // p3 = t, p2 = (−t x3 − (1−t) x1)/(x2 − x1), p1 = 1 − t − p2.
    let p2 = |t: f64| (-t * x3 - (1.0 - t) * x1) / (x2 - x1);
    let p1 = |t: f64| 1.0 - t - p2(t);
    let m2 = |t: f64| p1(t) * x1 * x1 + p2(t) * x2 * x2 + t * x3 * x3;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    // Each constraint is affine in t: a + b t ≥ 0.
    let cons: [(f64, f64); 3] = [
        (p1(0.0), p1(1.0) - p1(0.0)),
        (p2(0.0), p2(1.0) - p2(0.0)),
        (s2 - m2(0.0), (s2 - m2(1.0)) - (s2 - m2(0.0))),
    ];
    for (a, b) in cons {
        if b.abs() < 1e-15 {
            if a < -1e-13 {
                return None;
            }
        } else if b > 0.0 {
            lo = lo.max(-a / b);
        } else {
            hi = hi.min(-a / b);
        }
    }
    if lo > hi + 1e-13 {
        return None;
    }
    let f = |t: f64| p1(t) * (l * x1).exp() + p2(t) * (l * x2).exp() + t * (l * x3).exp();
    Some(f(lo).max(f(hi.max(lo))))
}

/// Grid search over atom triples (x1 < 0 < x2, x3 free) followed by a
/// shrinking pattern search.
pub fn grid_search_max(l: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    let g = 24;
    let mut best = (f64::NEG_INFINITY, [0.0; 3]);
    for i in 0..g {
        for j in 1..=g {
            for k in 0..=2 * g {
                let x = [-1.0 + i as f64 / g as f64, j as f64 / g as f64, -1.0 + k as f64 / g as f64];
                if let Some(v) = lp_on_atoms(l, s2, x) {
                    if v > best.0 {
                        best = (v, x);
                    }
                }
            }
        }
    }
    let mut step = 1.0 / g as f64;
    while step > 1e-10 {
        let mut improved = false;
        for axis in 0..3 {
            for dir in [-1.0, 1.0] {
                let mut x = best.1;
                x[axis] = (x[axis] + dir * step).clamp(-1.0, 1.0);
                if x[0] >= 0.0 || x[1] <= 0.0 {
                    continue;
                }
                if let Some(v) = lp_on_atoms(l, s2, x) {
                    if v > best.0 {
                        best = (v, x);
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    best.0
}

/// A configuration equal to b^{k0} on the depth-2 collar of `reg` and
/// outside: either independent uniform values on the free sites, or nested
/// rectangles painted with ground values and sprinkled with noise.
pub fn random_admissible(m: &ModelInstance, reg: &Region, k0: usize, seed: u64) -> SpinConfig {
    let mut rng = seeds::stream(seed, "decomposition", 0);
    let (lo, hi) = reg.bbox().unwrap();
    let one = Site::new(&vec![1; m.dim]);
    let mut x = SpinConfig::constant(m.dim, lo.sub(one), hi.add(one), m.ground_states[k0]);
    let free: Vec<Site> = quenchlab::polymer::free_sites(reg, 2);
    if seed % 2 == 0 {
        for s in &free {
            x.set(*s, rng.gen_range(0..m.n_values));
        }
    } else {
        let (flo, fhi) = Region::new(m.dim, free.iter().copied()).bbox().unwrap();
        for _ in 0..rng.gen_range(1..5) {
            let mut a = flo;
            let mut b = flo;
            for i in 0..m.dim {
                let (p, q) = (rng.gen_range(flo.0[i]..=fhi.0[i]), rng.gen_range(flo.0[i]..=fhi.0[i]));
                a.0[i] = p.min(q);
                b.0[i] = p.max(q);
            }
            let g = m.ground_states[rng.gen_range(0..m.n_ground())];
            for s in box_sites(m.dim, a, b) {
                x.set(s, g);
            }
        }
        for s in &free {
            if rng.gen::<f64>() < 0.05 {
                x.set(*s, rng.gen_range(0..m.n_values));
            }
        }
    }
    x
}
