//! Quenched parameters, random fields, subgaussian coefficients and
//! empirical concentration probes.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::lattice::{Region, Site};
use crate::models::ModelInstance;
use crate::par::{self, Execution};
use crate::seeds;

/// Law of a single bounded coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundedLaw {
    /// ±ε with probability ½ each.
    TwoPoint,
    /// Uniform on [−√3ε, √3ε].
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DisorderKind {
    Gaussian,
    Bounded { law: BoundedLaw },
    /// Independent occupations in {0, 1} with probability `epsilon` of 1.
    Occupation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    #[serde(flatten)]
    pub kind: DisorderKind,
    pub epsilon: f64,
}

impl DistributionSpec {
    pub fn gaussian(epsilon: f64) -> Self {
        DistributionSpec { kind: DisorderKind::Gaussian, epsilon }
    }
    pub fn two_point(epsilon: f64) -> Self {
        DistributionSpec { kind: DisorderKind::Bounded { law: BoundedLaw::TwoPoint }, epsilon }
    }
    pub fn uniform(epsilon: f64) -> Self {
        DistributionSpec { kind: DisorderKind::Bounded { law: BoundedLaw::Uniform }, epsilon }
    }
    pub fn occupation(p: f64) -> Self {
        DistributionSpec { kind: DisorderKind::Occupation, epsilon: p }
    }

    pub fn validate(&self) -> Result<()> {
        let e = self.epsilon;
        if !(e >= 0.0 && e.is_finite()) {
            return Err(LabError::Parameter(format!("epsilon must be finite and ≥ 0, got {e}")));
        }
        match self.kind {
            DisorderKind::Gaussian => Ok(()),
            DisorderKind::Bounded { law } => {
                let half_width = self.support_half_width();
                if half_width > 1.0 {
                    Err(LabError::Parameter(format!(
                        "{law:?} law with epsilon {e} leaves the support [-1, 1]"
                    )))
                } else {
                    Ok(())
                }
            }
            DisorderKind::Occupation => {
                if e > 1.0 {
                    Err(LabError::Parameter(format!("occupation probability {e} exceeds 1")))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Half-width of the support for bounded laws; infinite for Gaussian.
    pub fn support_half_width(&self) -> f64 {
        match self.kind {
            DisorderKind::Gaussian => f64::INFINITY,
            DisorderKind::Bounded { law: BoundedLaw::TwoPoint } => self.epsilon,
            DisorderKind::Bounded { law: BoundedLaw::Uniform } => 3f64.sqrt() * self.epsilon,
            DisorderKind::Occupation => 0.5,
        }
    }

    /// One draw from an arbitrary generator.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self.kind {
            DisorderKind::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                self.epsilon * z
            }
            DisorderKind::Bounded { law: BoundedLaw::TwoPoint } => {
                if rng.gen::<bool>() {
                    self.epsilon
                } else {
                    -self.epsilon
                }
            }
            DisorderKind::Bounded { law: BoundedLaw::Uniform } => {
                let u: f64 = rng.gen::<f64>() * 2.0 - 1.0;
                u * self.support_half_width()
            }
            DisorderKind::Occupation => {
                if rng.gen::<f64>() < self.epsilon {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// The coordinate `(beta, site)` of the field keyed by `seed`. Draws at
    /// different ε with the same seed are monotonically coupled.
    pub fn coordinate(&self, seed: u64, beta: usize, site: Site) -> f64 {
        self.draw(&mut seeds::coordinate_rng(seed, beta, site))
    }
}

/// Quenched parameters ω^β_s on a finite set of sites.
#[derive(Clone, Debug, PartialEq)]
pub struct QuenchedConfig {
    pub spec: DistributionSpec,
    pub seed: u64,
    pub n_beta: usize,
    pub values: HashMap<(usize, Site), f64>,
}

impl QuenchedConfig {
    pub fn zero(spec: DistributionSpec, n_beta: usize, reg: &Region) -> QuenchedConfig {
        let mut values = HashMap::new();
        for b in 0..n_beta {
            for s in reg.iter() {
                values.insert((b, s), 0.0);
            }
        }
        QuenchedConfig { spec, seed: 0, n_beta, values }
    }

    pub fn get(&self, beta: usize, s: Site) -> Option<f64> {
        self.values.get(&(beta, s)).copied()
    }

    pub fn set(&mut self, beta: usize, s: Site, v: f64) {
        self.values.insert((beta, s), v);
    }

    /// The configuration shifted by `u`: (τ_u ω)_s = ω_{s−u}.
    pub fn shift(&self, u: Site) -> QuenchedConfig {
        let values = self.values.iter().map(|(&(b, s), &v)| ((b, s.add(u)), v)).collect();
        QuenchedConfig { values, ..self.clone() }
    }

    pub fn map_values(&self, f: impl Fn(usize, Site, f64) -> f64) -> QuenchedConfig {
        let values = self.values.iter().map(|(&(b, s), &v)| ((b, s), f(b, s, v))).collect();
        QuenchedConfig { values, ..self.clone() }
    }
}

/// One draw per (β, site) on `reg ∪ N_padding(reg)`.
pub fn sample_omega(
    spec: DistributionSpec,
    n_beta: usize,
    reg: &Region,
    padding: i32,
    seed: u64,
) -> Result<QuenchedConfig> {
    spec.validate()?;
    let cover = reg.thicken(padding.max(0));
    let mut values = HashMap::with_capacity(cover.len() * n_beta);
    for b in 0..n_beta {
        for s in cover.iter() {
            values.insert((b, s), spec.coordinate(seed, b, s));
        }
    }
    Ok(QuenchedConfig { spec, seed, n_beta, values })
}

/// Random field η^α_s stored per site as a slot vector.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct RandomField {
    pub n_slots: usize,
    pub values: HashMap<Site, Vec<f64>>,
    /// Locality radius D_α of each slot, in lattice units of the site index.
    pub locality: Vec<i32>,
}

impl RandomField {
    /// The zero field; every lookup reports no disorder.
    pub fn zero() -> RandomField {
        RandomField::default()
    }

    #[inline]
    pub fn get(&self, s: Site) -> Option<&[f64]> {
        self.values.get(&s).map(|v| v.as_slice())
    }

    pub fn slot(&self, s: Site, alpha: usize) -> f64 {
        self.get(s).map_or(0.0, |v| v[alpha])
    }

    pub fn is_zero(&self) -> bool {
        self.values.values().all(|v| v.iter().all(|x| *x == 0.0))
    }

    pub fn scaled(&self, k: f64) -> RandomField {
        let values = self.values.iter().map(|(s, v)| (*s, v.iter().map(|x| x * k).collect())).collect();
        RandomField { values, ..self.clone() }
    }

    /// Sum of |η^α_s| over all slots of the given sites.
    pub fn abs_sum(&self, sites: impl IntoIterator<Item = Site>) -> f64 {
        sites.into_iter().filter_map(|s| self.get(s)).flat_map(|v| v.iter()).map(|x| x.abs()).sum()
    }
}

/// η built by the model's rule from ω on the cells of `reg`.
pub fn build_eta(model: &ModelInstance, omega: &QuenchedConfig, reg: &Region) -> Result<RandomField> {
    model.eta_from_omega(omega, reg)
}

/// Subgaussian variance proxy of one coordinate.
pub fn nu_of_epsilon(spec: &DistributionSpec) -> Result<f64> {
    let e = spec.epsilon;
    match spec.kind {
        DisorderKind::Gaussian => Ok(e * e),
        DisorderKind::Bounded { .. } => {
            if !(0.0..1.0).contains(&e) {
                return Err(LabError::Parameter(format!("bounded kind needs 0 ≤ ε < 1, got {e}")));
            }
            if e == 0.0 {
                return Ok(0.0);
            }
            let asym = 1.0 / (2.0 * e.ln()).abs();
            Ok((e * e).max(asym.min(1.0)))
        }
        DisorderKind::Occupation => Err(LabError::Parameter(
            "occupation disorder is not centred; ν is undefined".into(),
        )),
    }
}

/// A finite distribution with at most three atoms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThreePoint {
    pub x: [f64; 3],
    pub p: [f64; 3],
}

impl ThreePoint {
    pub fn mgf(&self, lambda: f64) -> f64 {
        (0..3).map(|i| self.p[i] * (lambda * self.x[i]).exp()).sum()
    }
}

/// Maximum of E e^{λX} over laws on [−1, 1] with mean 0 and E X² ≤ σ².
pub fn three_point_max(lambda: f64, sigma: f64) -> Result<(f64, ThreePoint)> {
    if !(0.0..=1.0).contains(&sigma) {
        return Err(LabError::Parameter(format!("sigma must lie in [0, 1], got {sigma}")));
    }
    if lambda < 0.0 {
        return Err(LabError::Parameter(format!("lambda must be ≥ 0, got {lambda}")));
    }
    let s2 = sigma * sigma;
    if s2 == 0.0 {
        return Ok((1.0, ThreePoint { x: [0.0, 0.0, 0.0], p: [1.0, 0.0, 0.0] }));
    }
    let value = ((-lambda * s2).exp() + s2 * lambda.exp()) / (1.0 + s2);
    let law = ThreePoint { x: [-s2, 1.0, 0.0], p: [1.0 / (1.0 + s2), s2 / (1.0 + s2), 0.0] };
    Ok((value, law))
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// 95% two-sided normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Statistics with a declared per-coordinate Lipschitz constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// Σ x_i
    Sum,
    /// Σ |x_i|
    AbsSum,
    /// Σ tanh(x_i)
    TanhSum,
}

impl Statistic {
    pub fn lipschitz(&self) -> f64 {
        1.0
    }

    pub fn eval(&self, xs: &[f64]) -> f64 {
        match self {
            Statistic::Sum => xs.iter().sum(),
            Statistic::AbsSum => xs.iter().map(|x| x.abs()).sum(),
            Statistic::TanhSum => xs.iter().map(|x| x.tanh()).sum(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Statistic::Sum => "sum",
            Statistic::AbsSum => "abs_sum",
            Statistic::TanhSum => "tanh_sum",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum BoundKind {
    McDiarmid,
    Gaussian,
    BoundedNu,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailRow {
    pub lambda: f64,
    pub empirical: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub bound_kind: BoundKind,
    pub bound: f64,
}

/// Empirical P(|f − E f| ≥ λ) against every bound that applies to the law.
pub fn tail_probe(
    f: Statistic,
    spec: &DistributionSpec,
    n: usize,
    lambda_grid: &[f64],
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<TailRow>> {
    if trials < 100 {
        return Err(LabError::Power(format!("tail probe needs at least 100 trials, got {trials}")));
    }
    spec.validate()?;
    let chunks = par::default_chunks(exec).max(8);
    let samples: Vec<Vec<f64>> = par::map_chunks(exec, trials as u64, chunks, |a, b| {
        let mut out = Vec::with_capacity((b - a) as usize);
        let mut xs = vec![0.0; n];
        for t in a..b {
            let mut rng = seeds::stream(seed, "tail_probe", t);
            for x in xs.iter_mut() {
                *x = spec.draw(&mut rng);
            }
            out.push(f.eval(&xs));
        }
        out
    });
    let values: Vec<f64> = samples.into_iter().flatten().collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let lip = f.lipschitz();
    let nf = n as f64;
    let mut bounds: Vec<(BoundKind, Box<dyn Fn(f64) -> f64>)> = Vec::new();
    match spec.kind {
        DisorderKind::Gaussian => {
            let e2 = spec.epsilon * spec.epsilon;
            bounds.push((
                BoundKind::Gaussian,
                Box::new(move |l| (2.0 * (-l * l / (2.0 * nf * lip * lip * e2)).exp()).min(1.0).max(clamp_zero(l))),
            ));
        }
        DisorderKind::Bounded { .. } | DisorderKind::Occupation => {
            let c = lip * 2.0 * spec.support_half_width();
            let c = if spec.kind == DisorderKind::Occupation { lip } else { c };
            bounds.push((
                BoundKind::McDiarmid,
                Box::new(move |l| (2.0 * (-2.0 * l * l / (nf * c * c)).exp()).min(1.0).max(clamp_zero(l))),
            ));
            if let Ok(nu) = nu_of_epsilon(spec) {
                bounds.push((
                    BoundKind::BoundedNu,
                    Box::new(move |l| (2.0 * (-l * l / (2.0 * nu * nf * lip * lip)).exp()).min(1.0).max(clamp_zero(l))),
                ));
            }
        }
    }
    let mut rows = Vec::new();
    for &l in lambda_grid {
        let hits = values.iter().filter(|v| (*v - mean).abs() >= l).count() as u64;
        let emp = hits as f64 / values.len() as f64;
        let (lo, hi) = wilson_interval(hits, values.len() as u64, Z95);
        for (kind, b) in &bounds {
            rows.push(TailRow { lambda: l, empirical: emp, ci_lo: lo, ci_hi: hi, bound_kind: *kind, bound: b(l) });
        }
    }
    Ok(rows)
}

/// At λ = 0 the tail probability is 1, so every bound is clamped to 1 there.
fn clamp_zero(l: f64) -> f64 {
    if l <= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Sample variances of X and F(X) for X drawn from `spec`.
pub fn lipschitz_variance_check<F>(spec: &DistributionSpec, f: F, trials: usize, seed: u64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let mut rng = seeds::stream(seed, "lipschitz_variance", 0);
    let xs: Vec<f64> = (0..trials).map(|_| spec.draw(&mut rng)).collect();
    let fx: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    (sample_variance(&xs), sample_variance(&fx))
}

pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nu_examples() {
        assert!((nu_of_epsilon(&DistributionSpec::gaussian(0.1)).unwrap() - 0.01).abs() < 1e-15);
        let nu = nu_of_epsilon(&DistributionSpec::two_point((-10f64).exp())).unwrap();
        assert!((nu - 0.05).abs() < 1e-12);
        assert!(nu_of_epsilon(&DistributionSpec::two_point(1.0)).is_err());
    }

    #[test]
    fn three_point_edges() {
        assert_eq!(three_point_max(0.0, 0.7).unwrap().0, 1.0);
        assert_eq!(three_point_max(2.0, 0.0).unwrap().0, 1.0);
        assert!((three_point_max(1.0, 1.0).unwrap().0 - 1f64.cosh()).abs() < 1e-12);
        assert!(three_point_max(1.0, 1.5).is_err());
    }

    #[test]
    fn zero_epsilon_gives_zero_omega() {
        let reg = Region::cube(2, 3);
        let w = sample_omega(DistributionSpec::gaussian(0.0), 1, &reg, 1, 9).unwrap();
        assert!(w.values.values().all(|v| *v == 0.0));
        assert_eq!(w.values.len(), 25);
    }

    #[test]
    fn power_error_below_100_trials() {
        let r = tail_probe(Statistic::Sum, &DistributionSpec::gaussian(1.0), 10, &[1.0], 50, 1, Execution::Sequential);
        assert!(matches!(r, Err(LabError::Power(_))));
    }
}
