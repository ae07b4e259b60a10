//! Single-site Metropolis chains for the finite-volume measures μ^k_{η,Λ}.
//!
//! The two outer layers of Λ stay at b^k and only the remaining cells move.
//! Proposals are uniform over the other values of a cell; continuous spins
//! are proposed uniformly on [−1, 1]. A move is accepted with probability
//! min(1, exp(−ΔH/T)), and a move to infinite energy is never accepted.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::contours::{extract_contours, Contour};
use crate::disorder::{wilson_interval, DistributionSpec, RandomField, Z95};
use crate::error::{LabError, Result};
use crate::lattice::{Grid, Region, Site};
use crate::models::{Kind, ModelInstance, SpinConfig};
use crate::par::{self, Execution};
use crate::polymer::{free_sites, ground_config};
use crate::seeds;

/// Run-length settings of a chain.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChainParams {
    pub t: f64,
    pub sweeps: u64,
    pub burn_in: u64,
    pub snapshot_every: u64,
    pub rebuild_every: u64,
    /// Extract contours at every snapshot.
    pub track_contours: bool,
    pub seed: u64,
}

impl ChainParams {
    pub fn new(t: f64, sweeps: u64, burn_in: u64, seed: u64) -> ChainParams {
        ChainParams { t, sweeps, burn_in, snapshot_every: 10, rebuild_every: 1000, track_contours: false, seed }
    }
}

/// Probability of accepting a move that changes the energy by `dh`.
pub fn acceptance_probability(dh: f64, t: f64) -> f64 {
    if dh.is_nan() || dh == f64::INFINITY {
        0.0
    } else if dh <= 0.0 {
        1.0
    } else {
        (-dh / t).exp()
    }
}

/// A proposed new value for one cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Proposal {
    Code(u32),
    Real(f64),
}

#[derive(Clone, Debug)]
pub struct ChainState {
    pub config: SpinConfig,
    /// Real spins of the continuous model; `config` then holds their classes.
    pub reals: Option<Grid<f64>>,
    pub sweeps: u64,
    pub energy: f64,
    pub accepted: u64,
    pub proposed: u64,
    /// Largest gap seen between the running energy and a full recomputation.
    pub max_drift: f64,
    rng: ChaCha8Rng,
}

pub struct Chain<'a> {
    model: &'a ModelInstance,
    eta: &'a RandomField,
    reg: Region,
    k: usize,
    t: f64,
    free: Vec<Site>,
    offsets: Vec<Site>,
    pub state: ChainState,
}

impl<'a> Chain<'a> {
    /// A chain started from b^k.
    pub fn new(model: &'a ModelInstance, eta: &'a RandomField, reg: &Region, k: usize, t: f64, seed: u64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(LabError::Parameter(format!("temperature must be positive and finite, got {t}")));
        }
        if k >= model.n_ground() {
            return Err(LabError::Parameter(format!("ground label {k} out of range")));
        }
        let free = free_sites(reg, 2);
        if free.is_empty() {
            return Err(LabError::Parameter("region has no cells inside its two outer layers".into()));
        }
        let config = ground_config(model, reg, k);
        let reals = match model.kind {
            Kind::Continuous { .. } => {
                let b = if model.ground_states[k] == 0 { 1.0 } else { -1.0 };
                Some(Grid::new(model.dim, config.grid.lo, config.grid.hi(), b))
            }
            _ => None,
        };
        let mut chain = Chain {
            model,
            eta,
            reg: reg.clone(),
            k,
            t,
            free,
            offsets: model.neighborhood(),
            state: ChainState {
                config,
                reals,
                sweeps: 0,
                energy: 0.0,
                accepted: 0,
                proposed: 0,
                max_drift: 0.0,
                rng: seeds::stream(seed, "mcmc", 0),
            },
        };
        chain.state.energy = chain.full_energy();
        Ok(chain)
    }

    pub fn free_cells(&self) -> &[Site] {
        &self.free
    }

    fn real(&self, s: Site) -> f64 {
        let g = self.state.reals.as_ref().expect("continuous chain");
        *g.get(s).expect("real spins cover the region and its outer layer")
    }

    fn site_energy(&self, s: Site, buf: &mut Vec<u32>) -> f64 {
        match self.state.reals {
            Some(_) => self.model.continuous_site_energy(s, |u| self.real(u), self.eta.get(s)),
            None => {
                self.model.gather(s, |u| self.state.config.value(u), buf);
                self.model.local_energy(buf, self.eta.get(s))
            }
        }
    }

    /// H^k_{η,Λ} of the current configuration, recomputed from scratch.
    pub fn full_energy(&self) -> f64 {
        let mut buf = Vec::with_capacity(27);
        self.reg.iter().map(|s| self.site_energy(s, &mut buf)).sum()
    }

    /// Sum of the site energies of Λ within L∞ distance 1 of `cell`.
    fn local_sum(&self, cell: Site, buf: &mut Vec<u32>) -> f64 {
        let mut e = 0.0;
        for o in &self.offsets {
            let s = cell.add(*o);
            if self.reg.contains(s) {
                e += self.site_energy(s, buf);
            }
        }
        e
    }

    fn put(&mut self, cell: Site, p: Proposal) -> Proposal {
        match p {
            Proposal::Code(v) => {
                let old = self.state.config.value(cell);
                self.state.config.set(cell, v);
                Proposal::Code(old)
            }
            Proposal::Real(x) => {
                let g = self.state.reals.as_mut().expect("continuous chain");
                let old = *g.get(cell).expect("cell inside the grid");
                g.set(cell, x);
                let class = self.model.classify(x);
                self.state.config.set(cell, class);
                Proposal::Real(old)
            }
        }
    }

    /// Energy change of setting `cell` to `p`, leaving the state unchanged.
    pub fn delta_energy(&mut self, cell: Site, p: Proposal) -> f64 {
        let mut buf = Vec::with_capacity(27);
        let before = self.local_sum(cell, &mut buf);
        let old = self.put(cell, p);
        let after = self.local_sum(cell, &mut buf);
        self.put(cell, old);
        if after == f64::INFINITY {
            f64::INFINITY
        } else {
            after - before
        }
    }

    fn propose(&mut self) -> (Site, Proposal) {
        let cell = self.free[self.state.rng.gen_range(0..self.free.len())];
        let p = if self.state.reals.is_some() {
            Proposal::Real(self.state.rng.gen_range(-1.0..=1.0))
        } else {
            let cur = self.state.config.value(cell);
            let mut v = self.state.rng.gen_range(0..self.model.n_values - 1);
            if v >= cur {
                v += 1;
            }
            Proposal::Code(v)
        };
        (cell, p)
    }

    /// One Metropolis update at a uniformly chosen free cell.
    pub fn step(&mut self) {
        let (cell, p) = self.propose();
        let dh = self.delta_energy(cell, p);
        self.state.proposed += 1;
        let a = acceptance_probability(dh, self.t);
        if a >= 1.0 || self.state.rng.gen::<f64>() < a {
            self.put(cell, p);
            self.state.energy += dh;
            self.state.accepted += 1;
        }
    }

    /// As many updates as there are free cells.
    pub fn sweep(&mut self) {
        for _ in 0..self.free.len() {
            self.step();
        }
        self.state.sweeps += 1;
    }

    /// Replaces the running energy by a recomputation and records the drift.
    pub fn rebuild(&mut self) {
        let e = self.full_energy();
        self.state.max_drift = self.state.max_drift.max((e - self.state.energy).abs());
        self.state.energy = e;
    }

    /// Fraction of free cells equal to b^k.
    pub fn agreement(&self) -> f64 {
        let b = self.model.ground_states[self.k];
        let hits = self.free.iter().filter(|s| self.state.config.value(**s) == b).count();
        hits as f64 / self.free.len() as f64
    }

    /// External contours of the current configuration.
    pub fn external_contours(&self) -> Result<Vec<Contour>> {
        Ok(extract_contours(self.model, &self.state.config)?.external())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Observables {
    pub agreement_fraction: f64,
    /// Snapshots in which each canonical contour occurs externally.
    pub contour_counts: BTreeMap<String, u64>,
    pub tau_int: f64,
    pub sweeps: u64,
    pub burn_in: u64,
    pub snapshots: u64,
    pub acceptance_rate: f64,
    pub max_energy_drift: f64,
    pub final_energy: f64,
    #[serde(skip)]
    pub snapshot_contours: Vec<Vec<Contour>>,
}

/// Integrated autocorrelation time with the self-consistent window M ≥ 5τ.
pub fn integrated_autocorrelation(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.5;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let c0 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    if c0 <= 0.0 {
        return 0.5;
    }
    let mut tau = 0.5;
    for m in 1..n {
        let c: f64 = (0..n - m).map(|i| (xs[i] - mean) * (xs[i + m] - mean)).sum::<f64>() / n as f64;
        tau += c / c0;
        if m as f64 >= 5.0 * tau {
            break;
        }
    }
    tau.max(0.5)
}

/// Runs one chain and averages the observables after burn-in.
pub fn run_chain(
    model: &ModelInstance,
    eta: &RandomField,
    reg: &Region,
    k: usize,
    params: &ChainParams,
) -> Result<Observables> {
    let mut chain = Chain::new(model, eta, reg, k, params.t, params.seed)?;
    let mut series = Vec::with_capacity(params.sweeps as usize);
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut snaps = Vec::new();
    let mut snapshots = 0;
    for _ in 0..params.burn_in + params.sweeps {
        chain.sweep();
        let s = chain.state.sweeps;
        if params.rebuild_every > 0 && s % params.rebuild_every == 0 {
            chain.rebuild();
        }
        if s <= params.burn_in {
            continue;
        }
        series.push(chain.agreement());
        if params.track_contours && params.snapshot_every > 0 && (s - params.burn_in) % params.snapshot_every == 0 {
            let ext = chain.external_contours()?;
            for c in &ext {
                *counts.entry(c.canonical().to_text()).or_insert(0) += 1;
            }
            snaps.push(ext);
            snapshots += 1;
        }
    }
    chain.rebuild();
    let st = &chain.state;
    Ok(Observables {
        agreement_fraction: series.iter().sum::<f64>() / series.len().max(1) as f64,
        contour_counts: counts,
        tau_int: integrated_autocorrelation(&series),
        sweeps: params.sweeps,
        burn_in: params.burn_in,
        snapshots,
        acceptance_rate: st.accepted as f64 / st.proposed.max(1) as f64,
        max_energy_drift: st.max_drift,
        final_energy: st.energy,
        snapshot_contours: snaps,
    })
}

/// Frequency with which a positioned contour is external, with a Wilson interval.
#[derive(Clone, Debug, Serialize)]
pub struct ContourFrequency {
    pub contour: String,
    pub size: usize,
    pub hits: u64,
    pub snapshots: u64,
    pub frequency: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

pub fn contour_frequency(obs: &Observables, refs: &[Contour]) -> Vec<ContourFrequency> {
    let n = obs.snapshot_contours.len() as u64;
    refs.iter()
        .map(|c| {
            let hits = obs.snapshot_contours.iter().filter(|snap| snap.iter().any(|e| e == c)).count() as u64;
            let (ci_lo, ci_hi) = wilson_interval(hits, n, Z95);
            ContourFrequency {
                contour: c.to_text(),
                size: c.size(),
                hits,
                snapshots: n,
                frequency: if n == 0 { 0.0 } else { hits as f64 / n as f64 },
                ci_lo,
                ci_hi,
            }
        })
        .collect()
}

/// One chain per disorder draw, with seeds derived from `seed`.
#[derive(Clone, Debug, Serialize)]
pub struct DrawResult {
    pub draw: usize,
    pub k: usize,
    pub agreement_fraction: f64,
    pub tau_int: f64,
    pub acceptance_rate: f64,
    pub max_energy_drift: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn run_disorder_draws(
    model: &ModelInstance,
    spec: DistributionSpec,
    reg: &Region,
    k: usize,
    params: &ChainParams,
    draws: usize,
    exec: Execution,
) -> Result<Vec<DrawResult>> {
    let cover = reg.thicken(model.eta_locality() + 2);
    par::map_indices(exec, draws, |i| {
        let omega = model.sample_omega(spec, &cover, seeds::derive_seed(params.seed, "omega", i as u64))?;
        let eta = model.eta_from_omega(&omega, reg)?;
        let p = ChainParams { seed: seeds::derive_seed(params.seed, "chain", i as u64), track_contours: false, ..*params };
        let obs = run_chain(model, &eta, reg, k, &p)?;
        Ok(DrawResult {
            draw: i,
            k,
            agreement_fraction: obs.agreement_fraction,
            tau_int: obs.tau_int,
            acceptance_rate: obs.acceptance_rate,
            max_energy_drift: obs.max_energy_drift,
        })
    })
    .into_iter()
    .collect()
}
