//! Exact partition functions on small boxes and the contour polymer
//! expansion built on them.
//!
//! Everything is kept in the log domain. For a region Λ and boundary label
//! k₀ the polymer sum is
//!
//!   Ξ^{k₀}_Λ = Σ over external collections Π_C w(C)·Π_k Ξ^{k₀}(Int_k C),
//!
//! where a collection is a set of Λ-polymers pairwise at distance > 1 and
//! not nested, and Ξ^{k₀}_Λ = exp[(e_g|Λ| + S^{k₀}_Λ)/T]·Z^{k₀}_Λ.

use std::collections::{BTreeSet, HashMap};

use crate::contours::{self, externally_compatible, Contour};
use crate::disorder::RandomField;
use crate::error::{LabError, Result};
use crate::lattice::{Region, Site};
use crate::models::{hamiltonian, BoundaryCondition, ModelInstance, SpinConfig};
use crate::par::{self, Execution};

pub use crate::contours::excitation_energy;

/// Default cap on enumerated configurations.
pub const DEFAULT_STATE_BUDGET: u64 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Spins fixed to b^k on the depth-2 collar.
    Standard,
    /// Spins fixed to b^k on the depth-3 collar.
    Tilde,
}

impl Variant {
    pub fn collar_depth(self) -> i32 {
        match self {
            Variant::Standard => 2,
            Variant::Tilde => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartitionValue {
    pub log_value: f64,
    pub variant: Variant,
    pub k: usize,
    pub t: f64,
}

/// Streaming log-sum-exp with a compensated sum of scaled terms.
#[derive(Clone, Copy, Debug)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
    comp: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        LogSumExp { max: f64::NEG_INFINITY, sum: 0.0, comp: 0.0 }
    }
}

impl LogSumExp {
    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            let scale = (self.max - x).exp();
            self.sum *= scale;
            self.comp *= scale;
            self.max = x;
        }
        let term = (x - self.max).exp();
        let t = self.sum + term;
        if self.sum.abs() >= term.abs() {
            self.comp += (self.sum - t) + term;
        } else {
            self.comp += (term - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, o: &LogSumExp) {
        if o.max == f64::NEG_INFINITY {
            return;
        }
        if o.max > self.max {
            let scale = (self.max - o.max).exp();
            self.sum = self.sum * scale + o.sum;
            self.comp = self.comp * scale + o.comp;
            self.max = o.max;
        } else {
            let scale = (o.max - self.max).exp();
            self.sum += o.sum * scale;
            self.comp += o.comp * scale;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + (self.sum + self.comp).ln()
        }
    }
}

/// Sites of `reg` left free when the depth-`depth` collar is frozen.
pub fn free_sites(reg: &Region, depth: i32) -> Vec<Site> {
    let collar = reg.collar(depth);
    reg.iter().filter(|s| !collar.contains(*s)).collect()
}

/// Configuration equal to b^k on and around `reg`.
pub fn ground_config(model: &ModelInstance, reg: &Region, k: usize) -> SpinConfig {
    let (lo, hi) = reg.bbox().unwrap_or((Site::ORIGIN, Site::ORIGIN));
    let one = Site::new(&vec![1; model.dim]);
    SpinConfig::constant(model.dim, lo.sub(one), hi.add(one), model.ground_states[k])
}

fn check_budget(model: &ModelInstance, n_free: usize, budget: u64) -> Result<u64> {
    let states = (model.n_values as f64).powi(n_free as i32);
    if states > budget as f64 {
        return Err(LabError::Budget(format!(
            "{n_free} free sites give {states:.3e} configurations (budget {budget})"
        )));
    }
    Ok(states as u64)
}

/// Folds `f(acc, x, H^b_{η,reg}(x))` over every assignment of the `free`
/// sites, all other spins taken from `base`. Returns one accumulator per
/// shard in shard order.
#[allow(clippy::too_many_arguments)]
pub fn fold_states<A, I, F>(
    model: &ModelInstance,
    eta: &RandomField,
    reg: &Region,
    base: &SpinConfig,
    free: &[Site],
    exec: Execution,
    budget: u64,
    init: I,
    f: F,
) -> Result<Vec<A>>
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, &SpinConfig, f64) + Sync + Send,
{
    let n_states = check_budget(model, free.len(), budget)?;
    let sites: Vec<Site> = reg.sites().to_vec();
    let index: HashMap<Site, usize> = sites.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let offs = model.neighborhood();
    let affected: Vec<Vec<usize>> = free
        .iter()
        .map(|f| offs.iter().filter_map(|o| index.get(&f.add(*o)).copied()).collect())
        .collect();
    let q = model.n_values as u64;
    let shards = par::map_chunks(exec, n_states, par::default_chunks(exec), |start, end| {
        let mut acc = init();
        let mut x = base.clone();
        let mut r = start;
        for s in free {
            x.set(*s, (r % q) as u32);
            r /= q;
        }
        let mut buf = Vec::with_capacity(27);
        let mut energy = vec![0.0; sites.len()];
        let mut total = Totals::default();
        let resync = |x: &SpinConfig, energy: &mut Vec<f64>, total: &mut Totals, buf: &mut Vec<u32>| {
            *total = Totals::default();
            for (i, s) in sites.iter().enumerate() {
                model.gather(*s, |t| x.value(t), buf);
                energy[i] = model.local_energy(buf, eta.get(*s));
                total.add(energy[i]);
            }
        };
        resync(&x, &mut energy, &mut total, &mut buf);
        let mut steps = 0u32;
        for idx in start..end {
            f(&mut acc, &x, total.value());
            if idx + 1 == end {
                break;
            }
            // Odometer increment; digit 0 runs fastest.
            let mut i = 0;
            loop {
                let v = x.value(free[i]) + 1;
                let carry = v as u64 == q;
                x.set(free[i], if carry { 0 } else { v });
                for &j in &affected[i] {
                    model.gather(sites[j], |t| x.value(t), &mut buf);
                    let e = model.local_energy(&buf, eta.get(sites[j]));
                    total.remove(energy[j]);
                    energy[j] = e;
                    total.add(e);
                }
                if !carry {
                    break;
                }
                i += 1;
            }
            steps += 1;
            if steps % 1024 == 0 {
                resync(&x, &mut energy, &mut total, &mut buf);
            }
        }
        acc
    });
    Ok(shards)
}

/// Running sum that tracks infinite terms separately.
#[derive(Clone, Copy, Default, Debug)]
struct Totals {
    finite: f64,
    infinite: u32,
}

impl Totals {
    fn add(&mut self, e: f64) {
        if e.is_infinite() {
            self.infinite += 1;
        } else {
            self.finite += e;
        }
    }
    fn remove(&mut self, e: f64) {
        if e.is_infinite() {
            self.infinite -= 1;
        } else {
            self.finite -= e;
        }
    }
    fn value(&self) -> f64 {
        if self.infinite > 0 {
            f64::INFINITY
        } else {
            self.finite
        }
    }
}

/// ln Z^k (standard) or ln Z̃^k (tilde) on `reg` at temperature `t`.
#[allow(clippy::too_many_arguments)]
pub fn partition_function(
    model: &ModelInstance,
    eta: &RandomField,
    reg: &Region,
    k: usize,
    t: f64,
    variant: Variant,
    exec: Execution,
    budget: u64,
) -> Result<PartitionValue> {
    if !(t > 0.0) {
        return Err(LabError::Parameter("temperature must be positive".into()));
    }
    if k >= model.n_ground() {
        return Err(LabError::Parameter(format!("ground-state index {k} out of range")));
    }
    if reg.is_empty() {
        return Ok(PartitionValue { log_value: 0.0, variant, k, t });
    }
    let free = free_sites(reg, variant.collar_depth());
    let base = ground_config(model, reg, k);
    let shards = fold_states(model, eta, reg, &base, &free, exec, budget, LogSumExp::default, |acc, _, h| {
        acc.add(-h / t)
    })?;
    let mut lse = LogSumExp::default();
    for s in &shards {
        lse.merge(s);
    }
    Ok(PartitionValue { log_value: lse.value(), variant, k, t })
}

/// S^k_Λ = Σ_{s∈Λ} Σ_α η^α_s g^α_s(b^k).
pub fn ground_shift(model: &ModelInstance, eta: &RandomField, reg: &Region, k: usize) -> f64 {
    let n = 3usize.pow(model.dim as u32);
    let g = vec![model.ground_states[k]; n];
    reg.iter()
        .map(|s| match eta.get(s) {
            Some(e) => model.local_energy(&g, Some(e)) - model.local_energy(&g, None),
            None => 0.0,
        })
        .sum()
}

/// External contours of all configurations counted in Z^k_Λ, sorted.
pub fn polymers(model: &ModelInstance, reg: &Region, k: usize, exec: Execution, budget: u64) -> Result<Vec<Contour>> {
    if reg.is_empty() {
        return Ok(Vec::new());
    }
    let free = free_sites(reg, 2);
    let base = ground_config(model, reg, k);
    let zero = RandomField::zero();
    let shards = fold_states(
        model,
        &zero,
        reg,
        &base,
        &free,
        exec,
        budget,
        || (BTreeSet::new(), None::<LabError>),
        |acc, x, _| match contours::extract_contours(model, x) {
            Ok(set) => acc.0.extend(set.external()),
            Err(e) => acc.1 = Some(e),
        },
    )?;
    let mut out = BTreeSet::new();
    for (set, err) in shards {
        if let Some(e) = err {
            return Err(e);
        }
        out.extend(set);
    }
    Ok(out.into_iter().collect())
}

/// How the Ξ factors of interiors are evaluated in a weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightMode {
    /// Interior Z^{k₀} from the polymer recursion.
    Recursive,
    /// Interior Z^{k₀} by brute-force enumeration.
    Direct,
}

/// Polymer computations for one (model, η, T).
pub struct PolymerSolver<'a> {
    pub model: &'a ModelInstance,
    pub eta: &'a RandomField,
    pub t: f64,
    pub exec: Execution,
    pub budget: u64,
    xi_cache: HashMap<(Region, usize), f64>,
    poly_cache: HashMap<(Region, usize), Vec<Contour>>,
}

/// The two sides of the polymer identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityCheck {
    /// ln Ξ from the polymer sum.
    pub lhs: f64,
    /// (e_g|Λ| + S)/T + ln Z from brute force.
    pub rhs: f64,
    pub max_rel_err: f64,
    pub n_polymers: usize,
}

impl<'a> PolymerSolver<'a> {
    pub fn new(model: &'a ModelInstance, eta: &'a RandomField, t: f64) -> PolymerSolver<'a> {
        PolymerSolver {
            model,
            eta,
            t,
            exec: Execution::default(),
            budget: DEFAULT_STATE_BUDGET,
            xi_cache: HashMap::new(),
            poly_cache: HashMap::new(),
        }
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    fn log_z(&self, reg: &Region, k: usize, variant: Variant) -> Result<f64> {
        Ok(partition_function(self.model, self.eta, reg, k, self.t, variant, self.exec, self.budget)?.log_value)
    }

    /// (e_g|Λ| + S^k_Λ)/T.
    fn shift(&self, reg: &Region, k: usize) -> f64 {
        (self.model.e_g * reg.len() as f64 + ground_shift(self.model, self.eta, reg, k)) / self.t
    }

    pub fn polymers(&mut self, reg: &Region, k0: usize) -> Result<Vec<Contour>> {
        let key = (reg.clone(), k0);
        if let Some(p) = self.poly_cache.get(&key) {
            return Ok(p.clone());
        }
        let p = polymers(self.model, reg, k0, self.exec, self.budget)?;
        self.poly_cache.insert(key, p.clone());
        Ok(p)
    }

    /// ln of w(C)·Π_k Ξ^{k₀}(Int_k C) = −D/T + Σ_k [ln Z̃^k(Int_k) + (e_g|Int_k| + S^{k₀}_{Int_k})/T].
    pub fn log_activity(&self, c: &Contour, k0: usize) -> Result<f64> {
        let mut lw = -excitation_energy(self.model, c, self.eta, k0)? / self.t;
        for (k, int) in c.interiors.iter().enumerate() {
            if int.is_empty() {
                continue;
            }
            lw += self.log_z(int, k, Variant::Tilde)? + self.shift(int, k0);
        }
        Ok(lw)
    }

    /// ln w(C) with interior ratios Z̃^k/Z^{k₀}.
    pub fn log_weight(&mut self, c: &Contour, k0: usize, mode: WeightMode) -> Result<f64> {
        let mut lw = -excitation_energy(self.model, c, self.eta, k0)? / self.t;
        for (k, int) in c.interiors.iter().enumerate() {
            if int.is_empty() {
                continue;
            }
            let log_z0 = match mode {
                WeightMode::Direct => self.log_z(int, k0, Variant::Standard)?,
                WeightMode::Recursive => self.log_xi(int, k0)? - self.shift(int, k0),
            };
            lw += self.log_z(int, k, Variant::Tilde)? - log_z0;
        }
        Ok(lw)
    }

    /// ln Ξ^{k₀}_Λ by the polymer sum.
    pub fn log_xi(&mut self, reg: &Region, k0: usize) -> Result<f64> {
        let key = (reg.clone(), k0);
        if let Some(v) = self.xi_cache.get(&key) {
            return Ok(*v);
        }
        let polys = self.polymers(reg, k0)?;
        let acts = polys.iter().map(|c| self.log_activity(c, k0)).collect::<Result<Vec<_>>>()?;
        let v = collection_sum(&polys, &acts, None, self.budget)?;
        self.xi_cache.insert(key, v);
        Ok(v)
    }

    /// Both sides of Ξ^k = exp[(e_g|Λ| + S^k_Λ)/T]·Z^k.
    pub fn identity_check(&mut self, reg: &Region, k: usize) -> Result<IdentityCheck> {
        let lhs = self.log_xi(reg, k)?;
        let rhs = self.shift(reg, k) + self.log_z(reg, k, Variant::Standard)?;
        let n_polymers = self.polymers(reg, k)?.len();
        Ok(IdentityCheck { lhs, rhs, max_rel_err: (lhs - rhs).exp_m1().abs(), n_polymers })
    }

    /// μ^k_{η,Λ}(C₀ is external) as a ratio of polymer sums.
    pub fn contour_probability(&mut self, c0: &Contour, reg: &Region, k: usize) -> Result<f64> {
        let polys = self.polymers(reg, k)?;
        let Some(pos) = polys.iter().position(|c| c == c0) else {
            return Ok(0.0);
        };
        let acts = polys.iter().map(|c| self.log_activity(c, k)).collect::<Result<Vec<_>>>()?;
        let with = collection_sum(&polys, &acts, Some(pos), self.budget)?;
        let all = self.log_xi(reg, k)?;
        Ok((with - all).exp())
    }
}

/// ln Σ over externally compatible subsets (containing `forced` when set)
/// of exp(Σ activities).
pub fn collection_sum(polys: &[Contour], acts: &[f64], forced: Option<usize>, budget: u64) -> Result<f64> {
    let n = polys.len();
    let compat: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| i != j && externally_compatible(&polys[i], &polys[j])).collect())
        .collect();
    let mut lse = LogSumExp::default();
    let mut chosen: Vec<usize> = Vec::new();
    let mut visited = 0u64;
    let start = match forced {
        Some(f) => {
            chosen.push(f);
            acts[f]
        }
        None => 0.0,
    };
    fn rec(
        i: usize,
        acc: f64,
        chosen: &mut Vec<usize>,
        compat: &[Vec<bool>],
        acts: &[f64],
        forced: Option<usize>,
        lse: &mut LogSumExp,
        visited: &mut u64,
        budget: u64,
    ) -> Result<()> {
        *visited += 1;
        if *visited > budget {
            return Err(LabError::Budget(format!("more than {budget} polymer collections")));
        }
        if i == acts.len() {
            lse.add(acc);
            return Ok(());
        }
        rec(i + 1, acc, chosen, compat, acts, forced, lse, visited, budget)?;
        if Some(i) != forced && chosen.iter().all(|&j| compat[i][j]) {
            chosen.push(i);
            rec(i + 1, acc + acts[i], chosen, compat, acts, forced, lse, visited, budget)?;
            chosen.pop();
        }
        Ok(())
    }
    rec(0, start, &mut chosen, &compat, acts, forced, &mut lse, &mut visited, budget)?;
    Ok(lse.value())
}

/// Every configuration of the Gibbs measure μ^k_{η,reg} with its
/// probability, by a recursive enumeration independent of `fold_states`.
pub fn gibbs_distribution(
    model: &ModelInstance,
    eta: &RandomField,
    reg: &Region,
    k: usize,
    t: f64,
    budget: u64,
) -> Result<Vec<(SpinConfig, f64)>> {
    let free = free_sites(reg, 2);
    check_budget(model, free.len(), budget)?;
    let mut base = ground_config(model, reg, k);
    let bc = BoundaryCondition::Ground(k);
    let mut out: Vec<(SpinConfig, f64)> = Vec::new();
    fn rec(
        i: usize,
        free: &[Site],
        x: &mut SpinConfig,
        out: &mut Vec<(SpinConfig, f64)>,
        model: &ModelInstance,
        eta: &RandomField,
        reg: &Region,
        bc: &BoundaryCondition,
    ) {
        if i == 0 {
            out.push((x.clone(), hamiltonian(model, eta, reg, bc, x)));
            return;
        }
        for v in (0..model.n_values).rev() {
            x.set(free[i - 1], v);
            rec(i - 1, free, x, out, model, eta, reg, bc);
        }
    }
    rec(free.len(), &free, &mut base, &mut out, model, eta, reg, &bc);
    let hmin = out.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let mut norm = 0.0;
    for p in out.iter_mut() {
        p.1 = (-(p.1 - hmin) / t).exp();
        norm += p.1;
    }
    for p in out.iter_mut() {
        p.1 /= norm;
    }
    Ok(out)
}

/// μ^k_{η,Λ}(C₀ is external) by enumerating the Gibbs measure.
pub fn contour_probability_direct(
    model: &ModelInstance,
    eta: &RandomField,
    c0: &Contour,
    reg: &Region,
    k: usize,
    t: f64,
    budget: u64,
) -> Result<f64> {
    let mut p = 0.0;
    for (x, w) in gibbs_distribution(model, eta, reg, k, t, budget)? {
        if w > 0.0 && contours::extract_contours(model, &x)?.external().contains(c0) {
            p += w;
        }
    }
    Ok(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbabilityMethod {
    Formula,
    Direct,
}

/// Probability that `c0` is an external contour under μ^k_{η,reg}.
#[allow(clippy::too_many_arguments)]
pub fn contour_probability(
    c0: &Contour,
    model: &ModelInstance,
    eta: &RandomField,
    reg: &Region,
    k: usize,
    t: f64,
    method: ProbabilityMethod,
    budget: u64,
) -> Result<f64> {
    match method {
        ProbabilityMethod::Formula => {
            PolymerSolver::new(model, eta, t).with_budget(budget).contour_probability(c0, reg, k)
        }
        ProbabilityMethod::Direct => contour_probability_direct(model, eta, c0, reg, k, t, budget),
    }
}

/// Polymer identity on `reg` with label `k`.
pub fn polymer_identity_check(
    model: &ModelInstance,
    eta: &RandomField,
    reg: &Region,
    k: usize,
    t: f64,
) -> Result<IdentityCheck> {
    PolymerSolver::new(model, eta, t).identity_check(reg, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_merges_in_any_order() {
        let xs = [-3.0, 700.0, 1.5, -1e3, 699.0];
        let mut a = LogSumExp::default();
        xs.iter().for_each(|x| a.add(*x));
        let mut b = LogSumExp::default();
        let mut c = LogSumExp::default();
        xs[..2].iter().for_each(|x| b.add(*x));
        xs[2..].iter().for_each(|x| c.add(*x));
        c.merge(&b);
        let exact = 700.0 + (1.0 + (-1.0f64).exp()).ln();
        assert!((a.value() - exact).abs() < 1e-12);
        assert!((c.value() - exact).abs() < 1e-12);
        assert_eq!(LogSumExp::default().value(), f64::NEG_INFINITY);
    }
}
