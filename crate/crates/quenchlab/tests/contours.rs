use std::collections::{BTreeSet, VecDeque};

mod common;

use common::random_admissible;
use proptest::prelude::*;
use quenchlab::contours::*;
use quenchlab::disorder::DistributionSpec;
use quenchlab::lattice::{box_sites, Region, Site};
use quenchlab::models::*;

fn rfim2() -> ModelInstance {
    make_model(&ModelParams::rfim(2, 1.0)).unwrap()
}

fn plus_box(lo: i32, hi: i32) -> SpinConfig {
    SpinConfig::constant(2, Site::new(&[lo, lo]), Site::new(&[hi, hi]), 0)
}

fn paint(x: &mut SpinConfig, lo: [i32; 2], hi: [i32; 2], v: u32) {
    for s in box_sites(2, Site::new(&lo), Site::new(&hi)) {
        x.set(s, v);
    }
}

/// Bounded L∞ components of the complement of `sup`, by flood fill from
/// outside a padded bounding box.
fn flood_fill_holes(sup: &Region) -> BTreeSet<Site> {
    let (lo, hi) = sup.bbox().unwrap();
    let one = Site::new(&[1, 1]);
    let (lo, hi) = (lo.sub(one), hi.add(one));
    let inside = |s: Site| (0..2).all(|i| s.0[i] >= lo.0[i] && s.0[i] <= hi.0[i]);
    let mut outside = BTreeSet::new();
    let mut q = VecDeque::from([lo]);
    outside.insert(lo);
    while let Some(s) = q.pop_front() {
        for dx in -1..=1 {
            for dy in -1..=1 {
                let t = s.add(Site::new(&[dx, dy]));
                if inside(t) && !sup.contains(t) && outside.insert(t) {
                    q.push_back(t);
                }
            }
        }
    }
    box_sites(2, lo, hi).filter(|s| !sup.contains(*s) && !outside.contains(s)).collect()
}

#[test]
fn constant_configuration_has_no_contours() {
    let m = rfim2();
    assert!(extract_contours(&m, &plus_box(-3, 3)).unwrap().is_empty());
    let minus = SpinConfig::constant(2, Site::new(&[0, 0]), Site::new(&[4, 4]), 1);
    assert!(extract_contours(&m, &minus).unwrap().is_empty());
}

#[test]
fn single_flips_give_five_by_five_contours() {
    let m = rfim2();
    let mut x = plus_box(-3, 14);
    x.set(Site::ORIGIN, 1);
    let set = extract_contours(&m, &x).unwrap();
    assert_eq!(set.len(), 1);
    let c = &set.contours[0];
    assert_eq!(c.size(), 25);
    assert_eq!(c.label, 0);
    assert_eq!(c.interior_size(), 0);
    assert_eq!(c.support, Region::cuboid(2, Site::new(&[-2, -2]), Site::new(&[2, 2])));
    assert_eq!(unstable_sites(&m, &x), Region::cuboid(2, Site::new(&[-1, -1]), Site::new(&[1, 1])));

    x.set(Site::new(&[10, 0]), 1);
    let set = extract_contours(&m, &x).unwrap();
    assert_eq!(set.len(), 2);
    assert!(set.contours.iter().all(|c| c.size() == 25 && c.label == 0));
    assert!(compatible(&set.contours[0], &set.contours[1]));
    assert_eq!(set.external().len(), 2);
}

#[test]
fn annulus_has_a_plus_interior() {
    let m = rfim2();
    let mut x = plus_box(-4, 24);
    paint(&mut x, [0, 0], [20, 20], 1);
    paint(&mut x, [7, 7], [13, 13], 0);
    let set = extract_contours(&m, &x).unwrap();
    assert_eq!(set.len(), 2);
    let (outer, inner) = if set.contours[0].size() > set.contours[1].size() {
        (&set.contours[0], &set.contours[1])
    } else {
        (&set.contours[1], &set.contours[0])
    };
    assert_eq!(outer.label, 0);
    assert_eq!(inner.label, 1);
    assert!(!inner.interiors[0].is_empty());
    assert_eq!(inner.interiors[0].iter().collect::<BTreeSet<_>>(), flood_fill_holes(&inner.support));
    assert!(inner.interiors[1].is_empty());
    assert_eq!(outer.interiors[1].iter().collect::<BTreeSet<_>>(), flood_fill_holes(&outer.support));
    assert!(inner.nested_in(outer));
    assert!(compatible(inner, outer));
    assert!(!externally_compatible(inner, outer));
    assert_eq!(set.external(), vec![outer.clone()]);
    for c in &set.contours {
        check_invariants(&m, c).unwrap();
    }

    // The mirror configuration has the opposite labels.
    let mut mirror = SpinConfig::constant(2, x.grid.lo, x.grid.hi(), 1);
    for s in x.grid.sites() {
        mirror.set(s, 1 - x.value(s));
    }
    let labels: BTreeSet<usize> = extract_contours(&m, &mirror).unwrap().contours.iter().map(|c| c.label).collect();
    assert_eq!(labels, BTreeSet::from([0, 1]));
    let ext = extract_contours(&m, &mirror).unwrap().external();
    assert_eq!(ext.len(), 1);
    assert_eq!(ext[0].label, 1);
}

#[test]
fn mixed_boundary_values_are_invalid() {
    let m = rfim2();
    let support = Region::cube(2, 5);
    let mut values = vec![0u32; 25];
    values[0] = 1;
    values[24] = 1;
    let e = decompose(&m, support.clone(), values).unwrap_err();
    assert!(matches!(e, quenchlab::LabError::InvalidContour(_)));
    assert!(decompose(&m, support, vec![0; 3]).is_err());
    let off_ground = SpinConfig::constant(2, Site::ORIGIN, Site::ORIGIN, 7);
    assert!(matches!(extract_contours(&m, &off_ground), Err(quenchlab::LabError::Domain(_))));
}

#[test]
fn no_rfim_contour_is_smaller_than_twenty_five_sites() {
    let m = rfim2();
    assert!(enumerate_contours(&m, 24, true, 1 << 20).unwrap().is_empty());
    // Oracle: every configuration of a 4×4 window inside a 7×7 box.
    for bg in 0..2u32 {
        for code in 0u32..(1 << 16) {
            let mut x = SpinConfig::constant(2, Site::new(&[0, 0]), Site::new(&[6, 6]), bg);
            for i in 0..16 {
                x.set(Site::new(&[1 + (i / 4) as i32, 1 + (i % 4) as i32]), (code >> i) & 1);
            }
            for c in extract_contours(&m, &x).unwrap().contours {
                assert!(c.size() >= 25);
            }
        }
    }
}

#[test]
fn anchored_counts_respect_the_contour_bound() {
    for (m, n) in [(rfim2(), 25usize), (rfim2(), 30), (make_model(&ModelParams::rfpm(2, 3, 1.0)).unwrap(), 25)] {
        let anchored = enumerate_contours(&m, n, true, 1 << 22).unwrap();
        let bound = (n as f64) * (1.0 + 2.0 * 8f64.ln()) + n as f64 * (m.n_values as f64).ln();
        assert!((anchored.len() as f64).ln() <= bound);
        for c in &anchored {
            assert!(c.filled().contains(Site::ORIGIN));
            assert_eq!(c.size(), n);
        }
    }
}

#[test]
fn enumerated_contours_round_trip() {
    let models = [
        (rfim2(), 35usize),
        (make_model(&ModelParams::rfpm(2, 3, 1.0)).unwrap(), 30),
        (make_model(&ModelParams::rfim(3, 1.0)).unwrap(), 125),
        (make_model(&ModelParams::ea(2, -1.0)).unwrap(), 25),
    ];
    for (m, n) in models {
        let family = enumerate_contours_upto(&m, n, 1 << 22).unwrap();
        assert!(!family.is_empty(), "{:?}", m.name());
        for c in &family {
            assert!(is_valid(&m, c), "{:?}: {}", m.name(), c.to_text());
            check_invariants(&m, c).unwrap();
            let x = embed(&m, c);
            let again = extract_contours(&m, &x).unwrap();
            assert_eq!(again.contours, vec![c.clone()]);
        }
    }
}

#[test]
fn canonical_text_is_translation_free() {
    let m = rfim2();
    let mut x = plus_box(-3, 9);
    x.set(Site::new(&[4, 5]), 1);
    let c = extract_contours(&m, &x).unwrap().contours.remove(0);
    let t = c.translate(Site::new(&[-7, 11]));
    assert_eq!(c.canonical().to_text(), t.canonical().to_text());
    let text = c.canonical().to_text();
    assert!(text.starts_with("d=2 label=0 n=25 0,0:0 0,1:0"));
    assert!(text.contains(" 2,2:1 "));
}

#[test]
fn merged_flips_leave_a_stable_site_deep_inside() {
    let m = rfim2();
    let mut x = plus_box(-4, 8);
    x.set(Site::ORIGIN, 1);
    let single = extract_contours(&m, &x).unwrap().contours.remove(0);
    assert!(stable_deep_sites(&m, &single).is_empty());
    x.set(Site::new(&[4, 0]), 1);
    let set = extract_contours(&m, &x).unwrap();
    assert_eq!(set.len(), 1);
    let c = &set.contours[0];
    assert_eq!(c.size(), 45);
    check_invariants(&m, c).unwrap();
    assert_eq!(stable_deep_sites(&m, c).sites(), &[Site::new(&[2, 0])]);
}

#[test]
fn excitation_energy_of_the_single_flip() {
    let m = rfim2();
    let mut x = plus_box(-3, 3);
    x.set(Site::ORIGIN, 1);
    let c = extract_contours(&m, &x).unwrap().contours.remove(0);
    let zero = quenchlab::disorder::RandomField::zero();
    assert!((excitation_energy(&m, &c, &zero, 0).unwrap() - 8.0).abs() < 1e-12);
}

#[test]
fn hamiltonian_decomposes_over_external_contours() {
    let cases: Vec<(ModelParams, DistributionSpec, i32)> = vec![
        (ModelParams::rfim(2, 1.0), DistributionSpec::gaussian(0.3), 12),
        (ModelParams::rfpm(2, 3, 1.0), DistributionSpec::gaussian(0.3), 12),
        (ModelParams::ea(2, 1.0), DistributionSpec::gaussian(0.3), 12),
        (ModelParams::ea(2, -1.0), DistributionSpec::gaussian(0.3), 8),
        (ModelParams::fa1b(2, 1.0, 3.0), DistributionSpec::occupation(0.2), 8),
        (ModelParams::continuous_ising(2, 1.0, 0.5), DistributionSpec::gaussian(0.3), 12),
        (ModelParams::rfim(3, 1.0), DistributionSpec::gaussian(0.3), 7),
    ];
    for (p, spec, side) in cases {
        let m = make_model(&p).unwrap();
        let reg = Region::cube(m.dim, side);
        let mut worst: f64 = 0.0;
        let mut with_contours = 0;
        for seed in 0..1000u64 {
            let k0 = (seed as usize / 2) % m.n_ground();
            let omega = m.sample_omega(spec, &reg, seed).unwrap();
            let eta = m.eta_from_omega(&omega, &reg).unwrap();
            let x = random_admissible(&m, &reg, k0, seed);
            let (lhs, rhs) = decomposition_identity(&m, &eta, &reg, k0, &x).unwrap();
            if lhs.is_infinite() {
                assert_eq!(lhs, rhs);
                continue;
            }
            let err = (lhs - rhs).abs() / lhs.abs().max(1.0);
            worst = worst.max(err);
            assert!(err <= 1e-12, "{:?} seed {seed}: {lhs} vs {rhs}", m.name());
            with_contours += usize::from(!extract_contours(&m, &x).unwrap().is_empty());
        }
        println!("{:?} d={}: worst relative gap {worst:.1e}, {with_contours} configs with contours", m.name(), m.dim);
        assert!(with_contours > 500);
    }
}

#[test]
fn decomposition_rejects_a_wrong_boundary() {
    let m = rfim2();
    let reg = Region::cube(2, 8);
    let mut x = SpinConfig::constant(2, Site::new(&[-1, -1]), Site::new(&[8, 8]), 0);
    x.set(Site::new(&[0, 3]), 1);
    let zero = quenchlab::disorder::RandomField::zero();
    assert!(decomposition_identity(&m, &zero, &reg, 0, &x).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn thickening_and_order_invariants(seed in any::<u64>(), which in 0usize..3) {
        let m = make_model(&[ModelParams::rfim(2, 1.0), ModelParams::rfpm(2, 3, 1.0), ModelParams::ea(2, -1.0)][which]).unwrap();
        let reg = Region::cube(2, 14);
        let x = random_admissible(&m, &reg, 0, seed);
        let u = unstable_sites(&m, &x);
        let set = extract_contours(&m, &x).unwrap();
        let tb = Region::new(2, set.contours.iter().flat_map(|c| c.support.sites().to_vec()));
        prop_assert!(u.is_subset(&tb));
        prop_assert_eq!(&tb, &u.thicken(1));
        for s in tb.iter() {
            prop_assert!(u.iter().any(|t| t.dist(s) <= 1));
        }
        for c in &set.contours {
            prop_assert!(check_invariants(&m, c).is_ok(), "{}", c.to_text());
        }
        let n = set.len();
        for i in 0..n {
            prop_assert!(!set.less(i, i));
            for j in 0..n {
                if set.less(i, j) {
                    prop_assert!(!set.less(j, i));
                }
                for k in 0..n {
                    if set.less(i, j) && set.less(j, k) {
                        prop_assert!(set.less(i, k));
                    }
                }
            }
            for j in 0..i {
                prop_assert!(compatible(&set.contours[i], &set.contours[j]));
            }
        }
    }
}
