use quenchlab::disorder::DistributionSpec;
use quenchlab::lattice::{Region, Site};
use quenchlab::models::{hamiltonian, make_model, BoundaryCondition, ModelParams, NamedLattice};
use quenchlab::polymer::ground_config;
use quenchlab::symmetry::{make_transform, pair_between, verify_local_symmetry, TransformKind};
use quenchlab::disorder::RandomField;
use quenchlab::LabError;

const BUDGET: u64 = 1 << 22;

fn square(side: i32) -> Region {
    Region::cube(2, side)
}

#[test]
fn rfim_flip_is_strictly_invariant() {
    let m = make_model(&ModelParams::rfim(2, 1.0)).unwrap();
    let pair = make_transform(&m, TransformKind::Flip).unwrap();
    assert_eq!((pair.k1, pair.k2), (0, 1));
    let r = verify_local_symmetry(&pair, &m, &square(4), DistributionSpec::gaussian(0.3), 4, 11, BUDGET).unwrap();
    println!("{r:?}");
    assert!(r.all());
    assert!(r.max_energy_gap < 1e-9);
    let r = verify_local_symmetry(&pair, &m, &square(4), DistributionSpec::two_point(0.3), 2, 11, BUDGET).unwrap();
    assert!(r.all() && r.measure_distance == 0.0);
}

#[test]
fn rfpm_cycle_is_strictly_invariant() {
    let m = make_model(&ModelParams::rfpm(2, 3, 1.0)).unwrap();
    let pair = make_transform(&m, TransformKind::PottsCycle { shift: 1 }).unwrap();
    assert_eq!((pair.k1, pair.k2), (0, 1));
    let r = verify_local_symmetry(&pair, &m, &square(4), DistributionSpec::gaussian(0.2), 3, 5, BUDGET).unwrap();
    println!("{r:?}");
    assert!(r.all());
    assert!(r.max_energy_gap < 1e-9);
}

#[test]
fn ea_antiferro_translation_obeys_boundary_bound() {
    let m = make_model(&ModelParams::ea(2, -1.0)).unwrap();
    let pair = make_transform(&m, TransformKind::unit(0, 1)).unwrap();
    assert_ne!(pair.k1, pair.k2);
    let r = verify_local_symmetry(&pair, &m, &square(4), DistributionSpec::two_point(0.2), 3, 7, BUDGET).unwrap();
    println!("{r:?}");
    assert!(r.all(), "{r:?}");
}

#[test]
fn fa1b_translation_obeys_boundary_bound() {
    let m = make_model(&ModelParams::fa1b(2, 1.0, f64::INFINITY)).unwrap();
    let pair = make_transform(&m, TransformKind::unit(1, -1)).unwrap();
    assert_ne!(pair.k1, pair.k2);
    let r = verify_local_symmetry(&pair, &m, &square(4), DistributionSpec::occupation(0.1), 3, 3, BUDGET).unwrap();
    println!("{r:?}");
    assert!(r.all(), "{r:?}");
}

#[test]
fn incompatible_kind_names_the_group() {
    let m = make_model(&ModelParams::rfim(2, 1.0)).unwrap();
    let e = make_transform(&m, TransformKind::unit(0, 1)).unwrap_err();
    assert!(matches!(e, LabError::Symmetry(_)));
    assert!(e.to_string().contains("Z2 spin flip"));
    let m = make_model(&ModelParams::ea(2, -1.0)).unwrap();
    assert!(make_transform(&m, TransformKind::Flip).unwrap_err().to_string().contains("lattice translations"));
    let m = make_model(&ModelParams::rfpm(2, 4, 1.0)).unwrap();
    assert!(make_transform(&m, TransformKind::Flip).unwrap_err().to_string().contains("cyclic group Z_Q"));
}

#[test]
fn pairs_connect_every_ground_state() {
    let models = [
        ModelParams::rfim(2, 1.0),
        ModelParams::rfpm(2, 4, 1.0),
        ModelParams::ea(2, -1.0),
        ModelParams::ea(3, 1.0),
        ModelParams::fa1b(2, 1.0, f64::INFINITY),
        ModelParams::hardcore_graph(NamedLattice::Bcc, 1.0),
        ModelParams::hardcore_graph(NamedLattice::Fcc, 1.0),
        ModelParams::hardcore_graph(NamedLattice::Hcp, 1.0),
        ModelParams::continuous_ising(2, 1.0, 0.5),
    ];
    for p in models {
        let m = make_model(&p).unwrap();
        for k in 1..m.n_ground() {
            let pair = pair_between(&m, 0, k).unwrap_or_else(|e| panic!("{:?}: {e}", p.model));
            assert_eq!((pair.k1, pair.k2), (0, k));
        }
    }
}

#[test]
fn ground_state_map_on_collars() {
    // Input b^{k1} on the three outer layers yields b^{k2} on the two outer layers.
    for p in [ModelParams::rfpm(2, 3, 1.0), ModelParams::ea(2, -1.0), ModelParams::fa1b(2, 1.0, 2.0)] {
        let m = make_model(&p).unwrap();
        let pair = pair_between(&m, 0, 1).unwrap();
        let reg = square(7);
        let free: Vec<Site> = reg.difference(&reg.collar(3)).iter().collect();
        let collar2 = reg.collar(2);
        let base = ground_config(&m, &reg, 0);
        let total = (m.n_values as u64).pow(free.len() as u32);
        for idx in 0..total {
            let mut x = base.clone();
            let mut i = idx;
            for s in &free {
                x.set(*s, (i % m.n_values as u64) as u32);
                i /= m.n_values as u64;
            }
            let y = pair.apply_spins(&m, &x, &reg);
            assert!(collar2.iter().all(|s| y.value(s) == m.ground_states[1]));
        }
    }
}

#[test]
fn zero_field_energy_invariance_for_flip_and_cycle() {
    for p in [ModelParams::rfim(2, 1.3), ModelParams::rfpm(2, 3, 0.7), ModelParams::ea(2, 1.0)] {
        let m = make_model(&p).unwrap();
        let pair = pair_between(&m, 0, 1).unwrap();
        let reg = square(5);
        for seed in 0..50 {
            let x = quenchlab::models::random_config(&m, Site::new(&[-1, -1]), Site::new(&[5, 5]), m.ground_states[0], seed);
            let y = pair.apply_spins(&m, &x, &reg);
            let zero = RandomField::zero();
            let h1 = hamiltonian(&m, &zero, &reg, &BoundaryCondition::Ground(0), &x);
            let h2 = hamiltonian(&m, &zero, &reg, &BoundaryCondition::Ground(1), &y);
            assert!((h1 - h2).abs() < 1e-9, "{:?}", p.model);
        }
    }
}

#[test]
fn translation_matches_shift_on_the_original_lattice() {
    let m = make_model(&ModelParams::ea(2, -1.0)).unwrap();
    let pair = make_transform(&m, TransformKind::unit(0, 1)).unwrap();
    let reg = square(4);
    let x = quenchlab::models::random_config(&m, Site::new(&[-1, -1]), Site::new(&[4, 4]), m.ground_states[0], 3);
    let y = pair.apply_spins(&m, &x, &reg);
    let ux = m.unblock(&x.grid);
    let uy = m.unblock(&y.grid);
    for s in reg.iter() {
        for dx in 0..2 {
            for dy in 0..2 {
                let t = Site::new(&[2 * s.0[0] + dx, 2 * s.0[1] + dy]);
                assert_eq!(uy.get(t), ux.get(t.add(Site::new(&[1, 0]))));
            }
        }
    }
}

#[test]
fn p_set_of_translation_is_the_shifted_preimage() {
    let m = make_model(&ModelParams::fa1b(2, 1.0, 1.0)).unwrap();
    let pair = make_transform(&m, TransformKind::unit(0, 1)).unwrap();
    let reg = square(2);
    let cells = pair.output_cells(&m, &reg);
    let keys = pair.p_set(&m, &reg);
    let expected: std::collections::BTreeSet<_> = cells
        .iter()
        .flat_map(|s| (0..m.atoms()).map(move |a| (s, a)))
        .map(|(s, a)| {
            let k = m.omega_key(0, s, a);
            (0, k.1.add(Site::new(&[1, 0])))
        })
        .collect();
    assert_eq!(keys.into_iter().collect::<std::collections::BTreeSet<_>>(), expected);
}
