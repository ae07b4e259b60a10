//! Disorder events that keep contour weights exponentially small: stable
//! excitation energies (FSC), small boundary fields after the interior
//! symmetry (QISC), and a small free-energy change under that symmetry
//! (FSIR). Also exact free-energy differences and Monte Carlo estimates of
//! how often all anchored contours pass.

use serde::{Deserialize, Serialize};

use crate::contours::{anchor_all, enumerate_contours_upto, excitation_energy, Contour};
use crate::disorder::{nu_of_epsilon, wilson_interval, DistributionSpec, QuenchedConfig, RandomField, Z95};
use crate::error::{LabError, Result};
use crate::lattice::{boundary, connected_components, Adjacency, Region, Side};
use crate::models::ModelInstance;
use crate::par::{self, Execution};
use crate::polymer::{partition_function, Variant};
use crate::seeds;
use crate::symmetry::{pair_between, SymmetryPair};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Event {
    Fsc,
    Qisc,
    Fsir,
    All,
}

impl Event {
    pub fn name(self) -> &'static str {
        match self {
            Event::Fsc => "fsc",
            Event::Qisc => "qisc",
            Event::Fsir => "fsir",
            Event::All => "all",
        }
    }
}

/// A composition of local symmetry pairs acting on disjoint regions.
#[derive(Clone, Debug, Default)]
pub struct LocalTransform {
    pub parts: Vec<(SymmetryPair, Region)>,
}

impl LocalTransform {
    pub fn identity() -> LocalTransform {
        LocalTransform::default()
    }

    pub fn single(pair: SymmetryPair, reg: Region) -> LocalTransform {
        LocalTransform { parts: vec![(pair, reg)] }
    }

    /// τ_{Int C}: on each Int_{k′} C with k′ ≠ label, the pair k′ → label.
    pub fn for_contour(model: &ModelInstance, c: &Contour) -> Result<LocalTransform> {
        let mut parts = Vec::new();
        for (k, reg) in c.interiors.iter().enumerate() {
            if k != c.label && !reg.is_empty() {
                parts.push((pair_between(model, k, c.label)?, reg.clone()));
            }
        }
        Ok(LocalTransform { parts })
    }

    pub fn is_identity(&self) -> bool {
        self.parts.is_empty()
    }

    /// τω, composing the parts in order.
    pub fn apply(&self, model: &ModelInstance, omega: &QuenchedConfig) -> Result<QuenchedConfig> {
        let mut out = omega.clone();
        for (pair, reg) in &self.parts {
            let image = pair.apply_omega(model, &out, reg)?;
            out.values.extend(image.values);
        }
        Ok(out)
    }
}

/// Outcome of the three events for one contour. Each flag holds exactly
/// when its margin is nonnegative.
#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub size: usize,
    pub threshold: f64,
    pub d_eta: f64,
    pub d_zero: f64,
    pub qisc_sum: f64,
    pub fsir_delta: f64,
    pub fsc: bool,
    pub qisc: bool,
    pub fsir: bool,
    pub fsc_margin: f64,
    pub qisc_margin: f64,
    pub fsir_margin: f64,
}

impl StabilityReport {
    pub fn holds(&self, event: Event) -> bool {
        match event {
            Event::Fsc => self.fsc,
            Event::Qisc => self.qisc,
            Event::Fsir => self.fsir,
            Event::All => self.fsc && self.qisc && self.fsir,
        }
    }
}

/// Exact Δ_{Λ′}F^k_Λ = T(ln Z^k_{η(τω),Λ} − ln Z^k_{η(ω),Λ}).
#[derive(Clone, Debug, Serialize)]
pub struct FreeEnergyDelta {
    pub value: f64,
    pub log_z: f64,
    pub log_z_transformed: f64,
    pub k: usize,
    pub t: f64,
}

pub fn free_energy_delta(
    model: &ModelInstance,
    omega: &QuenchedConfig,
    reg: &Region,
    transform: &LocalTransform,
    k: usize,
    t: f64,
    budget: u64,
) -> Result<FreeEnergyDelta> {
    let eta = model.eta_from_omega(omega, reg)?;
    let log_z = partition_function(model, &eta, reg, k, t, Variant::Standard, Execution::Sequential, budget)?.log_value;
    if transform.is_identity() {
        return Ok(FreeEnergyDelta { value: 0.0, log_z, log_z_transformed: log_z, k, t });
    }
    let teta = model.eta_from_omega(&transform.apply(model, omega)?, reg)?;
    let log_z_transformed =
        partition_function(model, &teta, reg, k, t, Variant::Standard, Execution::Sequential, budget)?.log_value;
    Ok(FreeEnergyDelta { value: t * (log_z_transformed - log_z), log_z, log_z_transformed, k, t })
}

/// Cells whose quenched parameters `stability_events` may read.
pub fn quenched_cover(model: &ModelInstance, c: &Contour) -> Region {
    c.filled().thicken(model.eta_locality() + 2)
}

/// FSC, QISC and FSIR for one contour. The free-energy term is evaluated
/// on each connected piece of Int C with the contour's exterior label.
pub fn stability_events(
    c: &Contour,
    model: &ModelInstance,
    omega: &QuenchedConfig,
    transform: &LocalTransform,
    rho: f64,
    t: f64,
    budget: u64,
) -> Result<StabilityReport> {
    let threshold = rho * c.size() as f64 / 4.0;
    let eta = model.eta_from_omega(omega, &c.support)?;
    let d_eta = excitation_energy(model, c, &eta, c.label)?;
    let d_zero = excitation_energy(model, c, &RandomField::zero(), c.label)?;

    let interior = c.interior();
    let (mut qisc_sum, mut fsir_delta) = (0.0, 0.0);
    if !interior.is_empty() {
        let edge = boundary(&interior, 1, Side::Internal);
        let tomega = if transform.is_identity() { omega.clone() } else { transform.apply(model, omega)? };
        let e = model.eta_from_omega(omega, &edge)?;
        let te = model.eta_from_omega(&tomega, &edge)?;
        qisc_sum = e.abs_sum(edge.iter()) + te.abs_sum(edge.iter());
        if !transform.is_identity() {
            for piece in connected_components(&interior, Adjacency::Linf) {
                fsir_delta += free_energy_delta(model, omega, &piece, transform, c.label, t, budget)?.value;
            }
        }
    }
    let fsc_q = (d_eta - d_zero).abs();
    Ok(StabilityReport {
        size: c.size(),
        threshold,
        d_eta,
        d_zero,
        qisc_sum,
        fsir_delta,
        fsc: fsc_q <= threshold,
        qisc: qisc_sum <= threshold,
        fsir: fsir_delta <= threshold,
        fsc_margin: threshold - fsc_q,
        qisc_margin: threshold - qisc_sum,
        fsir_margin: threshold - fsir_delta,
    })
}

/// Peierls constant used for thresholds: the scanned minimum of D₀/|sC|
/// over `family`, or the declared value when the family is empty.
pub fn threshold_rho(model: &ModelInstance, family: &[Contour]) -> Result<(f64, &'static str)> {
    let zero = RandomField::zero();
    let mut best = f64::INFINITY;
    for c in family {
        best = best.min(excitation_energy(model, c, &zero, c.label)? / c.size() as f64);
    }
    if best.is_finite() {
        return Ok((best, "measured"));
    }
    model
        .declared_rho
        .map(|r| (r, "declared"))
        .ok_or_else(|| LabError::Parameter(format!("{}: no Peierls constant available", model.name().as_str())))
}

#[derive(Clone, Debug, Serialize)]
pub struct EventEstimate {
    pub event: Event,
    pub epsilon: f64,
    pub t: f64,
    pub n_max: usize,
    pub trials: usize,
    pub successes: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seed: u64,
    pub rho: f64,
    pub rho_source: &'static str,
    /// Number of anchored contours checked per draw; contours beyond
    /// `n_max` are not examined.
    pub family_size: usize,
}

/// Fraction of disorder draws for which every contour with |sC| ≤ n_max
/// and 0 ∈ sC ∪ Int C satisfies `event`. Draw t uses the coordinate
/// stream `derive_seed(seed, "stability", t)`, so estimates at different
/// ε share their underlying randomness.
#[allow(clippy::too_many_arguments)]
pub fn estimate_event_probability(
    event: Event,
    model: &ModelInstance,
    spec: DistributionSpec,
    n_max: usize,
    trials: usize,
    t: f64,
    seed: u64,
    budget: u64,
) -> Result<EventEstimate> {
    if trials < 100 {
        return Err(LabError::Power(format!("{trials} trials are too few for an event estimate (need ≥ 100)")));
    }
    spec.validate()?;
    let base = enumerate_contours_upto(model, n_max, budget)?;
    let (rho, rho_source) = threshold_rho(model, &base)?;
    let family = anchor_all(&base);
    let transforms = family.iter().map(|c| LocalTransform::for_contour(model, c)).collect::<Result<Vec<_>>>()?;
    let cover = family.iter().fold(Region::empty(model.dim), |acc, c| acc.union(&quenched_cover(model, c)));

    let outcomes = par::map_indices(Execution::Parallel, trials, |i| -> Result<bool> {
        if family.is_empty() {
            return Ok(true);
        }
        let omega = model.sample_omega(spec, &cover, seeds::derive_seed(seed, "stability", i as u64))?;
        for (c, tr) in family.iter().zip(&transforms) {
            if !stability_events(c, model, &omega, tr, rho, t, budget)?.holds(event) {
                return Ok(false);
            }
        }
        Ok(true)
    });
    let mut successes = 0u64;
    for o in outcomes {
        successes += o? as u64;
    }
    let (ci_lo, ci_hi) = wilson_interval(successes, trials as u64, Z95);
    Ok(EventEstimate {
        event,
        epsilon: spec.epsilon,
        t,
        n_max,
        trials,
        successes,
        p_hat: successes as f64 / trials as f64,
        ci_lo,
        ci_hi,
        seed,
        rho,
        rho_source,
        family_size: family.len(),
    })
}

/// Estimates along a grid of disorder strengths, in grid order.
#[allow(clippy::too_many_arguments)]
pub fn event_curve(
    event: Event,
    model: &ModelInstance,
    specs: &[DistributionSpec],
    n_max: usize,
    trials: usize,
    t: f64,
    seed: u64,
    budget: u64,
) -> Result<Vec<EventEstimate>> {
    specs.iter().map(|s| estimate_event_probability(event, model, *s, n_max, trials, t, seed, budget)).collect()
}

/// True when p̂ never increases along the curve.
pub fn is_nonincreasing(curve: &[EventEstimate]) -> bool {
    curve.windows(2).all(|w| w[1].p_hat <= w[0].p_hat)
}

/// One row of the domain-increment tail check.
#[derive(Clone, Debug, Serialize)]
pub struct IncrementTail {
    pub lambda: f64,
    pub empirical: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// exp(−λ²/(ν·N)) with N the region count above.
    pub bound: f64,
    /// 2·exp(−λ²/(8ν·N)): the Gaussian concentration bound for a
    /// function that is 2-Lipschitz in each of N coordinates.
    pub bound_explicit: f64,
}

/// Empirical tail of |Δ_{Λ₁}F − Δ_{Λ₂}F| on `reg` against
/// exp(−λ²/(ν·N)) and 2·exp(−λ²/(8ν·N)), where
/// N = |Λ₁ △ Λ₂| + |∂ext₂Λ₁ ∪ ∂ext₂Λ₂|.
#[allow(clippy::too_many_arguments)]
pub fn increment_tail(
    model: &ModelInstance,
    spec: DistributionSpec,
    reg: &Region,
    first: &LocalTransform,
    second: &LocalTransform,
    domains: (&Region, &Region),
    k: usize,
    t: f64,
    lambdas: &[f64],
    trials: usize,
    seed: u64,
    budget: u64,
) -> Result<Vec<IncrementTail>> {
    let nu = nu_of_epsilon(&spec)?;
    let (a, b) = domains;
    let ring = |r: &Region| crate::coarsegrain::outer_shell2(r);
    let scale = nu * (a.sym_diff(b).len() + ring(a).union(&ring(b)).len()) as f64;
    let cover = reg.thicken(model.eta_locality() + 2);
    let diffs = par::map_indices(Execution::Parallel, trials, |i| -> Result<f64> {
        let omega = model.sample_omega(spec, &cover, seeds::derive_seed(seed, "increment", i as u64))?;
        let d1 = free_energy_delta(model, &omega, reg, first, k, t, budget)?.value;
        let d2 = free_energy_delta(model, &omega, reg, second, k, t, budget)?.value;
        Ok((d1 - d2).abs())
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    Ok(lambdas
        .iter()
        .map(|&lambda| {
            let hits = diffs.iter().filter(|&&x| x >= lambda).count() as u64;
            let (ci_lo, ci_hi) = wilson_interval(hits, trials as u64, Z95);
            let (bound, bound_explicit) = if scale > 0.0 {
                ((-lambda * lambda / scale).exp(), (2.0 * (-lambda * lambda / (8.0 * scale)).exp()).min(1.0))
            } else {
                (0.0, 0.0)
            };
            IncrementTail { lambda, empirical: hits as f64 / trials as f64, ci_lo, ci_hi, bound, bound_explicit }
        })
        .collect())
}
