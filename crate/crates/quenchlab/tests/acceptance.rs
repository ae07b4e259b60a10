//! Acceptance criteria, one test per criterion. Each test prints a single
//! `PASS` or `FAIL` line with the measured quantities before asserting.

mod common;

use std::time::Instant;

use common::{grid_search_max, random_admissible};
use quenchlab::coarsegrain::{audit_geometry, blob_suite, coarse_replica, dudley_summands, ell0, nonincreasing};
use quenchlab::contours::decomposition_identity;
use quenchlab::disorder::{
    lipschitz_variance_check, tail_probe, three_point_max, DistributionSpec, RandomField, Statistic,
};
use quenchlab::lattice::{enumerate_regions, Region};
use quenchlab::models::{make_model, peierls_scan, ModelInstance, ModelParams};
use quenchlab::par::Execution;
use quenchlab::polymer::{contour_probability, polymer_identity_check, polymers, ProbabilityMethod};
use quenchlab::sampler::{run_disorder_draws, ChainParams};
use quenchlab::stability::{estimate_event_probability, event_curve, is_nonincreasing, Event};
use quenchlab::symmetry::{make_transform, verify_local_symmetry, TransformKind};

const BUDGET: u64 = 1 << 22;

fn report(name: &str, pass: bool, detail: String) {
    println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name}: {detail}");
}

fn model(p: ModelParams) -> ModelInstance {
    make_model(&p).unwrap()
}

#[test]
fn polymer_identity() {
    let m = model(ModelParams::rfim(2, 1.0));
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for side in 4..=6 {
        let reg = Region::cube(2, side);
        let zero = RandomField::zero();
        let omega = m.sample_omega(DistributionSpec::gaussian(0.05), &reg, 2024).unwrap();
        let eta = m.eta_from_omega(&omega, &reg).unwrap();
        for field in [&zero, &eta] {
            for k in 0..2 {
                worst = worst.max(polymer_identity_check(&m, field, &reg, k, 0.5).unwrap().max_rel_err);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report("polymer identity", worst <= 1e-10, format!("worst relative error {worst:.2e} on boxes up to 6x6, {secs:.1} s"));
}

#[test]
fn contour_probability_cross_check() {
    let m = model(ModelParams::rfim(2, 1.0));
    let reg = Region::cube(2, 6);
    let omega = m.sample_omega(DistributionSpec::gaussian(0.3), &reg, 5).unwrap();
    let eta = m.eta_from_omega(&omega, &reg).unwrap();
    let polys = polymers(&m, &reg, 0, Execution::default(), BUDGET).unwrap();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for c in polys.iter().take(8) {
        let f = contour_probability(c, &m, &eta, &reg, 0, 0.7, ProbabilityMethod::Formula, BUDGET).unwrap();
        let d = contour_probability(c, &m, &eta, &reg, 0, 0.7, ProbabilityMethod::Direct, BUDGET).unwrap();
        worst = worst.max(((f - d) / d).abs());
        checked += 1;
    }
    report(
        "contour probability",
        checked >= 3 && worst <= 1e-10,
        format!("{checked} contours on 6x6, worst relative gap {worst:.2e}"),
    );
}

#[test]
fn peierls_random_field_ising() {
    let m = model(ModelParams::rfim(2, 1.0));
    let scan = peierls_scan(&m, 25, BUDGET).unwrap();
    let need = 1.0 / 9.0;
    report(
        "Peierls 2D RFIM",
        !scan.partial && scan.rho_measured >= need,
        format!("rho {:.4} >= J/9 = {need:.4} over |sC| <= 25", scan.rho_measured),
    );
}

#[test]
fn peierls_hard_core() {
    let m = model(ModelParams::fa1b(2, 1.0, f64::INFINITY));
    let need = m.declared_rho.unwrap();
    let scan = peierls_scan(&m, 25, BUDGET).unwrap();
    report(
        "Peierls 2D hard-core",
        !scan.partial && scan.rho_measured >= need,
        format!(
            "rho {:.4} vs h^c/9 = {need:.4} ({} contours, witness size {:?})",
            scan.rho_measured,
            scan.contours_scanned,
            scan.witness.as_ref().map(|c| c.size())
        ),
    );
}

#[test]
fn hamiltonian_decomposition() {
    let cases: Vec<(ModelParams, DistributionSpec, i32)> = vec![
        (ModelParams::rfim(2, 1.0), DistributionSpec::gaussian(0.3), 12),
        (ModelParams::rfpm(2, 3, 1.0), DistributionSpec::gaussian(0.3), 12),
        (ModelParams::ea(2, 1.0), DistributionSpec::gaussian(0.3), 12),
        (ModelParams::ea(2, -1.0), DistributionSpec::gaussian(0.3), 8),
        (ModelParams::fa1b(2, 1.0, f64::INFINITY), DistributionSpec::occupation(0.2), 8),
        (ModelParams::fa1b(2, 1.0, 3.0), DistributionSpec::occupation(0.2), 8),
        (ModelParams::continuous_ising(2, 1.0, 0.5), DistributionSpec::gaussian(0.3), 12),
        (ModelParams::rfim(3, 1.0), DistributionSpec::gaussian(0.3), 7),
    ];
    let mut worst: f64 = 0.0;
    let mut models = 0;
    for (p, spec, side) in cases {
        let m = model(p);
        let reg = Region::cube(m.dim, side);
        for seed in 0..1000u64 {
            let k0 = (seed as usize / 2) % m.n_ground();
            let omega = m.sample_omega(spec, &reg, seed).unwrap();
            let eta = m.eta_from_omega(&omega, &reg).unwrap();
            let x = random_admissible(&m, &reg, k0, seed);
            let (lhs, rhs) = decomposition_identity(&m, &eta, &reg, k0, &x).unwrap();
            let err = if lhs.is_infinite() && lhs == rhs { 0.0 } else { (lhs - rhs).abs() / lhs.abs().max(1.0) };
            worst = worst.max(err);
        }
        models += 1;
    }
    report(
        "Hamiltonian decomposition",
        worst <= 1e-12,
        format!("{models} models x 1000 configurations, worst relative gap {worst:.1e}"),
    );
}

#[test]
fn three_point_optimisation() {
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        for j in 0..20 {
            let l = 4.0 * i as f64 / 19.0;
            let sigma = 0.05 + 0.95 * j as f64 / 19.0;
            let v = three_point_max(l, sigma).unwrap().0;
            worst = worst.max((v - grid_search_max(l, sigma)).abs() / v);
        }
    }
    let n = 100_000;
    let (vx, vf) = lipschitz_variance_check(&DistributionSpec::gaussian(1.0), f64::abs, n, 3);
    let folded = 1.0 - 2.0 / std::f64::consts::PI;
    let tol = 4.0 * (3.0 / n as f64).sqrt();
    let lip_ok = (vf - folded).abs() <= tol && vf <= vx * (1.0 + tol);
    report(
        "three-point optimisation",
        worst <= 1e-6 && lip_ok,
        format!("20x20 grid worst relative gap {worst:.1e}; Var|X| {vf:.4} vs 1-2/pi {folded:.4}, Var X {vx:.4}"),
    );
}

#[test]
fn concentration_audits() {
    let points = [
        (DistributionSpec::gaussian(1.0), 100usize),
        (DistributionSpec::two_point(0.3), 60),
        (DistributionSpec::uniform(0.2), 60),
    ];
    let mut worst_excess = f64::NEG_INFINITY;
    let mut rows = 0;
    for (spec, n) in points {
        let sd = spec.epsilon * (n as f64).sqrt();
        let grid: Vec<f64> = [0.5, 1.0, 2.0, 3.0].iter().map(|k| k * sd).collect();
        for f in [Statistic::Sum, Statistic::AbsSum, Statistic::TanhSum] {
            for r in tail_probe(f, &spec, n, &grid, 100_000, 17, Execution::default()).unwrap() {
                let half = (r.ci_hi - r.ci_lo) / 2.0;
                worst_excess = worst_excess.max((r.empirical - r.bound) / half.max(f64::MIN_POSITIVE));
                rows += 1;
            }
        }
    }
    report(
        "concentration audits",
        worst_excess <= 3.0,
        format!("{rows} tail rows at 1e5 trials, largest (empirical - bound)/half-width {worst_excess:.2}"),
    );
}

#[test]
fn contour_counting() {
    let mut detail = Vec::new();
    let mut pass = true;
    for n in 1..=6usize {
        let count = enumerate_regions(n, 2, true, BUDGET as usize).unwrap().count;
        let bound = (n as f64).exp() * 8f64.powi(2 * n as i32);
        pass &= (count as f64) <= bound;
        detail.push(format!("n={n}: {count}"));
    }
    report("contour counting", pass, format!("{} (bound e^n 8^(2n))", detail.join(", ")));
}

#[test]
fn coarse_grain_audits() {
    let suite = blob_suite(2, 500, 4, 120, 2024);
    let audit = audit_geometry(&suite, 4, Execution::default());
    let replicas_empty = suite.iter().all(|reg| {
        let l0 = ell0(reg.len(), 2, audit.b1);
        (l0..l0 + 3).all(|level| coarse_replica(reg, level).cubes.is_empty())
    });
    let pattern = !nonincreasing(&dudley_summands(2, 12)) && nonincreasing(&dudley_summands(3, 12));
    report(
        "coarse-grain audits",
        audit.holds() && replicas_empty && pattern,
        format!(
            "b0 {} b1 {} b2 {:.4}; replicas empty beyond l0: {replicas_empty}; summands decrease only for d >= 3: {pattern}",
            audit.b0, audit.b1, audit.b2
        ),
    );
}

#[test]
fn symmetry_verification() {
    let square = Region::cube(2, 4);
    let checks = [
        (ModelParams::rfim(2, 1.0), TransformKind::Flip, DistributionSpec::gaussian(0.3), true),
        (ModelParams::rfpm(2, 3, 1.0), TransformKind::PottsCycle { shift: 1 }, DistributionSpec::gaussian(0.2), true),
        (ModelParams::ea(2, -1.0), TransformKind::unit(0, 1), DistributionSpec::two_point(0.2), false),
        (ModelParams::fa1b(2, 1.0, f64::INFINITY), TransformKind::unit(1, -1), DistributionSpec::occupation(0.1), false),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (p, kind, spec, strict) in checks {
        let m = model(p);
        let pair = make_transform(&m, kind).unwrap();
        let r = verify_local_symmetry(&pair, &m, &square, spec, 3, 7, BUDGET).unwrap();
        let ok = r.all() && (!strict || r.max_energy_gap < 1e-9);
        pass &= ok;
        detail.push(format!("{}: {}", m.name().as_str(), if ok { "ok" } else { "violated" }));
    }
    report("symmetry verification", pass, detail.join(", "));
}

#[test]
fn stability_events() {
    let m = model(ModelParams::rfim(2, 1.0));
    let zero = estimate_event_probability(Event::Fsc, &m, DistributionSpec::gaussian(0.0), 25, 200, 0.2, 3, BUDGET).unwrap();
    let specs: Vec<_> = [0.05, 0.2, 0.8].iter().map(|&e| DistributionSpec::gaussian(e)).collect();
    let curve = event_curve(Event::Fsc, &m, &specs, 25, 400, 0.2, 17, BUDGET).unwrap();
    let p_curve: Vec<f64> = curve.iter().map(|c| c.p_hat).collect();

    let m3 = model(ModelParams::rfim(3, 1.0));
    let start = Instant::now();
    let e3 = estimate_event_probability(Event::All, &m3, DistributionSpec::gaussian(0.02), 11, 200, 0.2, 8, BUDGET).unwrap();
    let secs = start.elapsed().as_secs_f64();
    report(
        "stability events",
        zero.p_hat == 1.0 && is_nonincreasing(&curve) && e3.p_hat >= 0.9,
        format!(
            "P(FSC) at eps=0: {}; curve {p_curve:?}; d=3 n_max=11: p {} CI [{:.3}, {:.3}] over {} contours, {secs:.1} s",
            zero.p_hat, e3.p_hat, e3.ci_lo, e3.ci_hi, e3.family_size
        ),
    );
}

#[test]
fn long_range_order() {
    let m = model(ModelParams::rfim(3, 1.0));
    let reg = Region::cube(3, 8);
    let params = ChainParams::new(1.0, 2000, 500, 31);
    let spec = DistributionSpec::gaussian(0.1);
    let mut ordered = Vec::new();
    for k in 0..2 {
        let draws = run_disorder_draws(&m, spec, &reg, k, &params, 20, Execution::default()).unwrap();
        ordered.push(draws.iter().filter(|d| d.agreement_fraction > 0.5).count());
    }
    report(
        "long-range order",
        ordered.iter().all(|&n| n >= 18),
        format!("T=1 eps=0.1 L=8: ordered draws {}/20 (+), {}/20 (-)", ordered[0], ordered[1]),
    );
}
