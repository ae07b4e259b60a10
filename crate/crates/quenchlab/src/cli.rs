//! Experiment runner: TOML configuration, subcommand dispatch and result
//! files. Every subcommand writes `<name>.csv` and `<name>.manifest.json`
//! into the output directory through a temporary file and a rename.
//!
//! Exit codes: 0 success, 1 failed invariant, 2 configuration error,
//! 3 budget exceeded.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coarsegrain::{self, audit_geometry, blob_suite, coarse_replica, ell0};
use crate::contours::enumerate_contours_upto;
use crate::disorder::{tail_probe, BoundedLaw, DisorderKind, DistributionSpec, Statistic};
use crate::error::{LabError, Result};
use crate::lattice::{enumerate_regions, Region};
use crate::models::{make_model, peierls_scan, ModelInstance, ModelParams};
use crate::par::Execution;
use crate::polymer::PolymerSolver;
use crate::sampler::{run_disorder_draws, ChainParams};
use crate::stability::{estimate_event_probability, Event};
use crate::symmetry::{candidate_kinds, make_transform, verify_local_symmetry, TransformKind};

pub const DEFAULT_BUDGET: u64 = 1 << 24;

#[derive(Parser, Debug)]
#[command(name = "quenchlab", version, about = "Contour, polymer and stability experiments on disordered lattice models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed; overrides the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for the parallel core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Largest number of states any exact enumeration may visit.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Smallest excitation energy per support site over small contours.
    PeierlsScan,
    /// Polymer sum against brute-force partition functions.
    PolymerVerify,
    /// Probability that the local stability events hold for all small contours.
    StabilityEstimate,
    /// Coarse-graining constants and covering nets on a pinned blob suite.
    CoarsegrainAudit,
    /// Anchored region and contour counts against the combinatorial bound.
    CountContours,
    /// Empirical tails of Lipschitz statistics against concentration bounds.
    TailProbe,
    /// Energy and measure invariance of a symmetry pair on small boxes.
    SymmetryVerify,
    /// Metropolis chains per disorder draw with agreement and contour statistics.
    Mcmc,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::PeierlsScan => "peierls-scan",
            Command::PolymerVerify => "polymer-verify",
            Command::StabilityEstimate => "stability-estimate",
            Command::CoarsegrainAudit => "coarsegrain-audit",
            Command::CountContours => "count-contours",
            Command::TailProbe => "tail-probe",
            Command::SymmetryVerify => "symmetry-verify",
            Command::Mcmc => "mcmc",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LawName {
    #[default]
    Gaussian,
    TwoPoint,
    Uniform,
    Occupation,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderBlock {
    #[serde(default)]
    pub kind: LawName,
    #[serde(default = "default_eps")]
    pub epsilon: Vec<f64>,
}

fn default_eps() -> Vec<f64> {
    vec![0.0]
}

impl Default for DisorderBlock {
    fn default() -> Self {
        DisorderBlock { kind: LawName::Gaussian, epsilon: default_eps() }
    }
}

impl DisorderBlock {
    pub fn spec(&self, epsilon: f64) -> DistributionSpec {
        match self.kind {
            LawName::Gaussian => DistributionSpec::gaussian(epsilon),
            LawName::TwoPoint => DistributionSpec { kind: DisorderKind::Bounded { law: BoundedLaw::TwoPoint }, epsilon },
            LawName::Uniform => DistributionSpec::uniform(epsilon),
            LawName::Occupation => DistributionSpec::occupation(epsilon),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    #[serde(rename = "L", default = "default_l")]
    pub l: i32,
    #[serde(default = "default_nmax")]
    pub n_max: usize,
    #[serde(default = "default_levels")]
    pub levels: u32,
    #[serde(default = "default_regions")]
    pub regions: usize,
    #[serde(default = "default_rmin")]
    pub region_min: usize,
    #[serde(default = "default_rmax")]
    pub region_max: usize,
    /// Largest region size enumerated by `count-contours`.
    #[serde(default = "default_count_max")]
    pub count_n_max: usize,
}

fn default_l() -> i32 {
    6
}
fn default_nmax() -> usize {
    25
}
fn default_levels() -> u32 {
    4
}
fn default_regions() -> usize {
    500
}
fn default_rmin() -> usize {
    4
}
fn default_rmax() -> usize {
    120
}
fn default_count_max() -> usize {
    6
}

impl Default for GeometryBlock {
    fn default() -> Self {
        GeometryBlock {
            l: default_l(),
            n_max: default_nmax(),
            levels: default_levels(),
            regions: default_regions(),
            region_min: default_rmin(),
            region_max: default_rmax(),
            count_n_max: default_count_max(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerBlock {
    #[serde(rename = "T", default = "default_tgrid")]
    pub t: Vec<f64>,
    #[serde(default = "default_sweeps")]
    pub sweeps: u64,
    #[serde(default = "default_burn")]
    pub burn_in: u64,
    #[serde(default = "default_draws")]
    pub draws: usize,
    /// Ground-state labels used as boundary conditions.
    #[serde(default = "default_boundaries")]
    pub boundaries: Vec<usize>,
    /// Require agreement above `min_agreement` in at least `min_draws` draws per boundary.
    #[serde(default)]
    pub min_agreement: Option<f64>,
    #[serde(default)]
    pub min_draws: Option<usize>,
}

fn default_tgrid() -> Vec<f64> {
    vec![1.0]
}
fn default_sweeps() -> u64 {
    2000
}
fn default_burn() -> u64 {
    500
}
fn default_draws() -> usize {
    20
}
fn default_boundaries() -> Vec<usize> {
    vec![0, 1]
}

impl Default for SamplerBlock {
    fn default() -> Self {
        SamplerBlock {
            t: default_tgrid(),
            sweeps: default_sweeps(),
            burn_in: default_burn(),
            draws: default_draws(),
            boundaries: default_boundaries(),
            min_agreement: None,
            min_draws: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityBlock {
    #[serde(default = "default_events")]
    pub events: Vec<Event>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(rename = "T", default = "default_stab_t")]
    pub t: f64,
}

fn default_events() -> Vec<Event> {
    vec![Event::Fsc, Event::Qisc, Event::Fsir, Event::All]
}
fn default_trials() -> usize {
    200
}
fn default_stab_t() -> f64 {
    0.2
}

impl Default for StabilityBlock {
    fn default() -> Self {
        StabilityBlock { events: default_events(), trials: default_trials(), t: default_stab_t() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailBlock {
    #[serde(default = "default_stats")]
    pub statistics: Vec<Statistic>,
    #[serde(default = "default_tail_n")]
    pub n: usize,
    #[serde(default = "default_lambdas")]
    pub lambda: Vec<f64>,
    #[serde(default = "default_tail_trials")]
    pub trials: usize,
}

fn default_stats() -> Vec<Statistic> {
    vec![Statistic::Sum, Statistic::AbsSum, Statistic::TanhSum]
}
fn default_tail_n() -> usize {
    25
}
fn default_lambdas() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 3.0]
}
fn default_tail_trials() -> usize {
    10_000
}

impl Default for TailBlock {
    fn default() -> Self {
        TailBlock { statistics: default_stats(), n: default_tail_n(), lambda: default_lambdas(), trials: default_tail_trials() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformName {
    Flip,
    Cycle,
    Translate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetryBlock {
    /// Omitted: every candidate transformation of the model's group.
    #[serde(default)]
    pub transform: Option<TransformName>,
    #[serde(default = "default_one_u")]
    pub shift: u32,
    #[serde(default)]
    pub axis: usize,
    #[serde(default = "default_sign")]
    pub sign: i32,
    #[serde(rename = "box", default = "default_box")]
    pub box_side: i32,
    #[serde(default = "default_sym_trials")]
    pub trials: usize,
}

fn default_one_u() -> u32 {
    1
}
fn default_sign() -> i32 {
    1
}
fn default_box() -> i32 {
    4
}
fn default_sym_trials() -> usize {
    3
}

impl Default for SymmetryBlock {
    fn default() -> Self {
        SymmetryBlock { transform: None, shift: 1, axis: 0, sign: 1, box_side: 4, trials: 3 }
    }
}

/// A full experiment description. Unknown keys are rejected at every level.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub budget: Option<u64>,
    pub model: ModelParams,
    #[serde(default)]
    pub disorder: DisorderBlock,
    #[serde(default)]
    pub geometry: GeometryBlock,
    #[serde(default)]
    pub sampler: SamplerBlock,
    #[serde(default)]
    pub stability: StabilityBlock,
    #[serde(default)]
    pub tail: TailBlock,
    #[serde(default)]
    pub symmetry: SymmetryBlock,
}

fn config_error(key: &str, message: impl Into<String>) -> LabError {
    LabError::Config { key: key.to_string(), message: message.into() }
}

/// Parses a configuration, reporting the dotted path of the offending key.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = toml::Deserializer::new(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let mut key = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.message().to_string();
        if let Some(field) = message.strip_prefix("missing field `").and_then(|r| r.split('`').next()) {
            key = if key == "." { field.to_string() } else { format!("{key}.{field}") };
        }
        config_error(&key, message)
    })?;
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &ExperimentConfig) -> Result<()> {
    if !(2..=3).contains(&cfg.model.d) {
        return Err(config_error("model.d", format!("dimension must be 2 or 3, got {}", cfg.model.d)));
    }
    for (i, e) in cfg.disorder.epsilon.iter().enumerate() {
        cfg.disorder.spec(*e).validate().map_err(|err| config_error(&format!("disorder.epsilon[{i}]"), err.to_string()))?;
    }
    if cfg.disorder.epsilon.is_empty() {
        return Err(config_error("disorder.epsilon", "the ε grid is empty"));
    }
    if cfg.geometry.l < 1 {
        return Err(config_error("geometry.L", "box side must be positive"));
    }
    if cfg.geometry.region_min == 0 || cfg.geometry.region_min > cfg.geometry.region_max {
        return Err(config_error("geometry.region_min", "need 1 ≤ region_min ≤ region_max"));
    }
    for (i, t) in cfg.sampler.t.iter().enumerate() {
        if !(*t > 0.0 && t.is_finite()) {
            return Err(config_error(&format!("sampler.T[{i}]"), format!("temperature must be positive, got {t}")));
        }
    }
    if !(cfg.stability.t > 0.0 && cfg.stability.t.is_finite()) {
        return Err(config_error("stability.T", "temperature must be positive"));
    }
    if cfg.tail.n == 0 {
        return Err(config_error("tail.n", "need at least one coordinate"));
    }
    if cfg.symmetry.sign != 1 && cfg.symmetry.sign != -1 {
        return Err(config_error("symmetry.sign", "sign must be 1 or -1"));
    }
    if cfg.symmetry.axis >= cfg.model.d {
        return Err(config_error("symmetry.axis", "axis must be below the dimension"));
    }
    Ok(())
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let canon = serde_json::to_string(cfg).expect("configuration serialises");
    let digest = Sha256::digest(canon.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// The outcome of one subcommand before it is written.
pub struct RunOutput {
    pub csv: Vec<u8>,
    /// Name of the first invariant that failed, if any.
    pub failed: Option<String>,
    pub extras: serde_json::Value,
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| LabError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| LabError::Io(e.to_string()))
}

fn first_failure(checks: &[(&str, bool)]) -> Option<String> {
    checks.iter().find(|(_, ok)| !ok).map(|(n, _)| n.to_string())
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    model: ModelInstance,
    seed: u64,
    hash: String,
    budget: u64,
}

impl Ctx<'_> {
    fn cube(&self) -> Region {
        Region::cube(self.model.dim, self.cfg.geometry.l)
    }
}

#[derive(Serialize)]
struct PeierlsRow {
    model: &'static str,
    d: usize,
    n_max: usize,
    contours_scanned: usize,
    rho_measured: f64,
    rho_declared: Option<f64>,
    partial: bool,
    witness_size: Option<usize>,
    seed: u64,
    config_hash: String,
}

fn peierls(ctx: &Ctx) -> Result<RunOutput> {
    let scan = peierls_scan(&ctx.model, ctx.cfg.geometry.n_max, ctx.budget)?;
    let ok = match ctx.model.declared_rho {
        Some(r) => scan.contours_scanned == 0 || scan.rho_measured >= r - 1e-12,
        None => true,
    };
    let row = PeierlsRow {
        model: ctx.model.name().as_str(),
        d: ctx.model.dim,
        n_max: ctx.cfg.geometry.n_max,
        contours_scanned: scan.contours_scanned,
        rho_measured: scan.rho_measured,
        rho_declared: ctx.model.declared_rho,
        partial: scan.partial,
        witness_size: scan.witness.as_ref().map(|c| c.size()),
        seed: ctx.seed,
        config_hash: ctx.hash.clone(),
    };
    Ok(RunOutput {
        csv: to_csv(&[row])?,
        failed: first_failure(&[("peierls_condition", ok)]),
        extras: serde_json::json!({ "witness": scan.witness.map(|c| c.to_text()) }),
    })
}

#[derive(Serialize)]
struct PolymerRow {
    epsilon: f64,
    k: usize,
    #[serde(rename = "L")]
    l: i32,
    #[serde(rename = "T")]
    t: f64,
    log_xi: f64,
    log_rhs: f64,
    max_rel_err: f64,
    n_polymers: usize,
    seed: u64,
    config_hash: String,
}

fn polymer_verify(ctx: &Ctx) -> Result<RunOutput> {
    let reg = ctx.cube();
    let t = ctx.cfg.sampler.t[0];
    let mut rows = Vec::new();
    for &eps in &ctx.cfg.disorder.epsilon {
        let spec = ctx.cfg.disorder.spec(eps);
        let omega = ctx.model.sample_omega(spec, &reg.thicken(ctx.model.eta_locality() + 2), ctx.seed)?;
        let eta = ctx.model.eta_from_omega(&omega, &reg)?;
        for k in 0..ctx.model.n_ground() {
            let chk = PolymerSolver::new(&ctx.model, &eta, t).with_budget(ctx.budget).identity_check(&reg, k)?;
            rows.push(PolymerRow {
                epsilon: eps,
                k,
                l: ctx.cfg.geometry.l,
                t,
                log_xi: chk.lhs,
                log_rhs: chk.rhs,
                max_rel_err: chk.max_rel_err,
                n_polymers: chk.n_polymers,
                seed: ctx.seed,
                config_hash: ctx.hash.clone(),
            });
        }
    }
    let ok = rows.iter().all(|r| r.max_rel_err <= 1e-10);
    Ok(RunOutput { csv: to_csv(&rows)?, failed: first_failure(&[("polymer_identity", ok)]), extras: serde_json::json!({}) })
}

#[derive(Serialize)]
struct StabilityRow {
    event: &'static str,
    epsilon: f64,
    #[serde(rename = "T")]
    t: f64,
    n_max: usize,
    trials: usize,
    p_hat: f64,
    ci_lo: f64,
    ci_hi: f64,
    seed: u64,
    rho: f64,
    rho_source: &'static str,
    family_size: usize,
    config_hash: String,
}

fn stability(ctx: &Ctx) -> Result<RunOutput> {
    let s = &ctx.cfg.stability;
    let mut rows = Vec::new();
    let mut monotone = true;
    for &event in &s.events {
        let mut prev: Option<f64> = None;
        for &eps in &ctx.cfg.disorder.epsilon {
            let e = estimate_event_probability(
                event,
                &ctx.model,
                ctx.cfg.disorder.spec(eps),
                ctx.cfg.geometry.n_max,
                s.trials,
                s.t,
                ctx.seed,
                ctx.budget,
            )?;
            // Coupled draws make the FSC and QISC events shrink as ε grows.
            if matches!(event, Event::Fsc | Event::Qisc) {
                if let Some(p) = prev {
                    monotone &= e.p_hat <= p;
                }
                prev = Some(e.p_hat);
            }
            rows.push(StabilityRow {
                event: event.name(),
                epsilon: eps,
                t: s.t,
                n_max: e.n_max,
                trials: e.trials,
                p_hat: e.p_hat,
                ci_lo: e.ci_lo,
                ci_hi: e.ci_hi,
                seed: e.seed,
                rho: e.rho,
                rho_source: e.rho_source,
                family_size: e.family_size,
                config_hash: ctx.hash.clone(),
            });
        }
    }
    Ok(RunOutput {
        csv: to_csv(&rows)?,
        failed: first_failure(&[("event_probability_nonincreasing", monotone)]),
        extras: serde_json::json!({}),
    })
}

#[derive(Serialize)]
struct AuditCsvRow {
    instance_id: usize,
    #[serde(rename = "ℓ")]
    level: u32,
    lhs: f64,
    rhs: f64,
    ratio: f64,
    constant_name: &'static str,
    seed: u64,
    config_hash: String,
}

fn coarsegrain_audit(ctx: &Ctx) -> Result<RunOutput> {
    let g = &ctx.cfg.geometry;
    let d = ctx.model.dim;
    let suite = blob_suite(d, g.regions, g.region_min, g.region_max, ctx.seed);
    let audit = audit_geometry(&suite, g.levels, Execution::Parallel);
    let vanish = suite.iter().all(|r| {
        let l0 = ell0(r.len(), d, audit.b1);
        coarse_replica(r, l0).cubes.is_empty()
    });
    let summands = coarsegrain::dudley_summands(d, 12);
    let pattern = coarsegrain::nonincreasing(&summands) == (d >= 3);
    let rows: Vec<AuditCsvRow> = audit
        .rows
        .iter()
        .map(|r| AuditCsvRow {
            instance_id: r.instance_id,
            level: r.level,
            lhs: r.lhs,
            rhs: r.rhs,
            ratio: r.ratio,
            constant_name: r.constant_name,
            seed: ctx.seed,
            config_hash: ctx.hash.clone(),
        })
        .collect();
    Ok(RunOutput {
        csv: to_csv(&rows)?,
        failed: first_failure(&[
            ("finite_constants", audit.holds()),
            ("replicas_vanish_beyond_ell0", vanish),
            ("dudley_summand_pattern", pattern),
        ]),
        extras: serde_json::json!({
            "b0": audit.b0, "b1": audit.b1, "b2": audit.b2,
            "b3": coarsegrain::b3_from(audit.b2, d),
            "dudley_summands": summands,
        }),
    })
}

#[derive(Serialize)]
struct CountRow {
    n: usize,
    d: usize,
    regions: usize,
    ln_regions: f64,
    ln_bound: f64,
    contour_classes: usize,
    holds: bool,
    config_hash: String,
}

fn count_contours(ctx: &Ctx) -> Result<RunOutput> {
    let d = ctx.model.dim;
    let n_max = ctx.cfg.geometry.count_n_max;
    let family = enumerate_contours_upto(&ctx.model, n_max, ctx.budget)?;
    let mut rows = Vec::new();
    for n in 1..=n_max {
        let regions = enumerate_regions(n, d, true, ctx.budget as usize)?.count;
        let ln_bound = n as f64 + 2.0 * n as f64 * ((3f64.powi(d as i32)) - 1.0).ln();
        let ln_regions = (regions as f64).ln();
        rows.push(CountRow {
            n,
            d,
            regions,
            ln_regions,
            ln_bound,
            contour_classes: family.iter().filter(|c| c.size() == n).count(),
            holds: ln_regions <= ln_bound,
            config_hash: ctx.hash.clone(),
        });
    }
    let ok = rows.iter().all(|r| r.holds);
    Ok(RunOutput { csv: to_csv(&rows)?, failed: first_failure(&[("region_count_bound", ok)]), extras: serde_json::json!({}) })
}

#[derive(Serialize)]
struct TailCsvRow {
    statistic: &'static str,
    epsilon: f64,
    n: usize,
    lambda: f64,
    bound_kind: String,
    empirical: f64,
    ci_lo: f64,
    ci_hi: f64,
    bound: f64,
    holds: bool,
    seed: u64,
    config_hash: String,
}

fn tail(ctx: &Ctx) -> Result<RunOutput> {
    let tb = &ctx.cfg.tail;
    let mut rows = Vec::new();
    for &stat in &tb.statistics {
        for &eps in &ctx.cfg.disorder.epsilon {
            let spec = ctx.cfg.disorder.spec(eps);
            for r in tail_probe(stat, &spec, tb.n, &tb.lambda, tb.trials, ctx.seed, Execution::Parallel)? {
                let half = (r.ci_hi - r.ci_lo) / 2.0;
                rows.push(TailCsvRow {
                    statistic: stat.name(),
                    epsilon: eps,
                    n: tb.n,
                    lambda: r.lambda,
                    bound_kind: format!("{:?}", r.bound_kind),
                    empirical: r.empirical,
                    ci_lo: r.ci_lo,
                    ci_hi: r.ci_hi,
                    bound: r.bound,
                    holds: r.empirical <= r.bound + 3.0 * half,
                    seed: ctx.seed,
                    config_hash: ctx.hash.clone(),
                });
            }
        }
    }
    let ok = rows.iter().all(|r| r.holds);
    Ok(RunOutput { csv: to_csv(&rows)?, failed: first_failure(&[("tail_bound", ok)]), extras: serde_json::json!({}) })
}

#[derive(Serialize)]
struct SymmetryRow {
    transform: String,
    group: &'static str,
    k1: usize,
    k2: usize,
    epsilon: f64,
    locality: bool,
    injectivity: bool,
    energy: bool,
    lipschitz: bool,
    measure: bool,
    max_energy_gap: f64,
    min_energy_margin: f64,
    lipschitz_estimate: f64,
    measure_distance: f64,
    measure_threshold: f64,
    configs_checked: u64,
    seed: u64,
    config_hash: String,
}

fn symmetry(ctx: &Ctx) -> Result<RunOutput> {
    let sb = &ctx.cfg.symmetry;
    let kinds = match sb.transform {
        None => candidate_kinds(&ctx.model),
        Some(TransformName::Flip) => vec![TransformKind::Flip],
        Some(TransformName::Cycle) => vec![TransformKind::PottsCycle { shift: sb.shift }],
        Some(TransformName::Translate) => vec![TransformKind::unit(sb.axis, sb.sign)],
    };
    let reg = Region::cube(ctx.model.dim, sb.box_side);
    let mut rows = Vec::new();
    for kind in kinds {
        let pair = make_transform(&ctx.model, kind).map_err(|e| config_error("symmetry.transform", e.to_string()))?;
        for &eps in &ctx.cfg.disorder.epsilon {
            let r = verify_local_symmetry(&pair, &ctx.model, &reg, ctx.cfg.disorder.spec(eps), sb.trials, ctx.seed, ctx.budget)?;
            rows.push(SymmetryRow {
                transform: format!("{kind:?}"),
                group: pair.group,
                k1: pair.k1,
                k2: pair.k2,
                epsilon: eps,
                locality: r.locality,
                injectivity: r.injectivity,
                energy: r.energy,
                lipschitz: r.lipschitz,
                measure: r.measure,
                max_energy_gap: r.max_energy_gap,
                min_energy_margin: r.min_energy_margin,
                lipschitz_estimate: r.lipschitz_estimate,
                measure_distance: r.measure_distance,
                measure_threshold: r.measure_threshold,
                configs_checked: r.configs_checked,
                seed: ctx.seed,
                config_hash: ctx.hash.clone(),
            });
        }
    }
    let all = |f: fn(&SymmetryRow) -> bool| rows.iter().all(f);
    let failed = first_failure(&[
        ("symmetry_locality", all(|r| r.locality)),
        ("symmetry_injectivity", all(|r| r.injectivity)),
        ("symmetry_energy", all(|r| r.energy)),
        ("symmetry_lipschitz", all(|r| r.lipschitz)),
        ("symmetry_measure", all(|r| r.measure)),
    ]);
    Ok(RunOutput { csv: to_csv(&rows)?, failed, extras: serde_json::json!({}) })
}

#[derive(Serialize)]
struct McmcRow {
    draw: usize,
    #[serde(rename = "T")]
    t: f64,
    epsilon: f64,
    agreement: f64,
    tau_est: f64,
    k: usize,
    acceptance_rate: f64,
    seed: u64,
    config_hash: String,
}

fn mcmc(ctx: &Ctx) -> Result<RunOutput> {
    let sb = &ctx.cfg.sampler;
    let reg = ctx.cube();
    for (i, &k) in sb.boundaries.iter().enumerate() {
        if k >= ctx.model.n_ground() {
            return Err(config_error(&format!("sampler.boundaries[{i}]"), format!("ground label {k} out of range")));
        }
    }
    let mut rows = Vec::new();
    let mut drift_ok = true;
    let mut order_ok = true;
    for &t in &sb.t {
        for &eps in &ctx.cfg.disorder.epsilon {
            for &k in &sb.boundaries {
                let params = ChainParams::new(t, sb.sweeps, sb.burn_in, ctx.seed);
                let draws = run_disorder_draws(&ctx.model, ctx.cfg.disorder.spec(eps), &reg, k, &params, sb.draws, Execution::Parallel)?;
                drift_ok &= draws.iter().all(|r| r.max_energy_drift < 1e-9);
                if let (Some(a), Some(m)) = (sb.min_agreement, sb.min_draws) {
                    order_ok &= draws.iter().filter(|r| r.agreement_fraction > a).count() >= m;
                }
                rows.extend(draws.into_iter().map(|r| McmcRow {
                    draw: r.draw,
                    t,
                    epsilon: eps,
                    agreement: r.agreement_fraction,
                    tau_est: r.tau_int,
                    k,
                    acceptance_rate: r.acceptance_rate,
                    seed: ctx.seed,
                    config_hash: ctx.hash.clone(),
                }));
            }
        }
    }
    Ok(RunOutput {
        csv: to_csv(&rows)?,
        failed: first_failure(&[("energy_cache_drift", drift_ok), ("long_range_order", order_ok)]),
        extras: serde_json::json!({}),
    })
}

/// Runs one subcommand on a parsed configuration without touching the disk.
pub fn execute(command: Command, cfg: &ExperimentConfig, seed: u64, budget: u64) -> Result<RunOutput> {
    let model = make_model(&cfg.model).map_err(|e| match e {
        LabError::Config { .. } => e,
        other => config_error("model", other.to_string()),
    })?;
    let ctx = Ctx { cfg, model, seed, hash: config_hash(cfg), budget };
    match command {
        Command::PeierlsScan => peierls(&ctx),
        Command::PolymerVerify => polymer_verify(&ctx),
        Command::StabilityEstimate => stability(&ctx),
        Command::CoarsegrainAudit => coarsegrain_audit(&ctx),
        Command::CountContours => count_contours(&ctx),
        Command::TailProbe => tail(&ctx),
        Command::SymmetryVerify => symmetry(&ctx),
        Command::Mcmc => mcmc(&ctx),
    }
}

/// Writes `bytes` to `path` through a sibling temporary file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    std::fs::write(&tmp, bytes).map_err(|e| LabError::Io(format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'static str,
    seed: u64,
    config_hash: String,
    budget: u64,
    status: &'static str,
    failed_invariant: Option<String>,
    csv: String,
    versions: serde_json::Value,
    wall_time_s: f64,
    config: &'a ExperimentConfig,
    results: serde_json::Value,
}

pub fn exit_code(e: &LabError) -> i32 {
    match e {
        LabError::Config { .. } | LabError::Parameter(_) => 2,
        LabError::Budget(_) => 3,
        _ => 1,
    }
}

/// Full command-line entry point; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match run_inner(&cli) {
        Ok(None) => 0,
        Ok(Some(name)) => {
            eprintln!("invariant failed: {name}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn run_inner(cli: &Cli) -> Result<Option<String>> {
    let start = Instant::now();
    let path = cli.config.as_ref().ok_or_else(|| config_error("--config", "a configuration file is required"))?;
    let text = std::fs::read_to_string(path).map_err(|e| config_error("--config", format!("{}: {e}", path.display())))?;
    let cfg = parse_config(&text)?;
    let seed = cli.seed.unwrap_or(cfg.seed);
    let budget = cli.budget.or(cfg.budget).unwrap_or(DEFAULT_BUDGET);
    #[cfg(feature = "parallel")]
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out = execute(cli.command, &cfg, seed, budget)?;
    std::fs::create_dir_all(&cli.out).map_err(|e| LabError::Io(format!("{}: {e}", cli.out.display())))?;
    let name = cli.command.name();
    let csv_path = cli.out.join(format!("{name}.csv"));
    write_atomic(&csv_path, &out.csv)?;
    let manifest = Manifest {
        subcommand: name,
        seed,
        config_hash: config_hash(&cfg),
        budget,
        status: if out.failed.is_none() { "pass" } else { "fail" },
        failed_invariant: out.failed.clone(),
        csv: format!("{name}.csv"),
        versions: serde_json::json!({
            "quenchlab": env!("CARGO_PKG_VERSION"),
            "parallel": cfg!(feature = "parallel"),
        }),
        wall_time_s: start.elapsed().as_secs_f64(),
        config: &cfg,
        results: out.extras,
    };
    let json = serde_json::to_vec_pretty(&manifest).map_err(|e| LabError::Io(e.to_string()))?;
    write_atomic(&cli.out.join(format!("{name}.manifest.json")), &json)?;
    Ok(out.failed)
}
