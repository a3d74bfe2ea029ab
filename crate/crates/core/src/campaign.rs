//! Seeded randomized verification suites.
//!
//! Every sample draws from its own stream `sample_rng(seed, id)`, samples
//! run concurrently, and results are merged in id order, so a report depends
//! only on `(suite, n_samples, seed, alphas, tolerances)`. Numbers in reports
//! are rounded to 12 significant digits; infinities are written as the
//! strings `"+inf"` and `"-inf"`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::divergences::{
    alpha_relative_entropy, alpha_relative_entropy_direct, divergence, f_divergence, kl_limit_probe,
    uniform_gap_identity,
};
use crate::geometry::{
    default_lambda_grid, mixture, parallelogram_terms, pythagorean_report, segment_divergence_derivative,
    segment_min_check, segment_minimizer,
};
use crate::maxent::{covariance, generalized_gaussian, moment_entropy_gap, GeneralizedGaussianSpec, TestFamily};
use crate::measures::{alpha_norm, kl_divergence, renyi_entropy, tilt, AlphaParam, Density, WeightedSpace};
use crate::numeric::round_significant;
use crate::projection::{
    brute_force_refined, feasible_perturbation, iterated_projection_check, project, projection_characterization_check,
    ConstraintSet, LinearConstraint, SolverOptions,
};
use crate::sampling::{random_density, sample_rng, uniform_usize};
use crate::{Error, Result};

/// The verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Identity,
    Limits,
    Parallelogram,
    Derivative,
    Pythagorean,
    Projection,
    Maxent,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Identity,
        Suite::Limits,
        Suite::Parallelogram,
        Suite::Derivative,
        Suite::Pythagorean,
        Suite::Projection,
        Suite::Maxent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Identity => "identity",
            Suite::Limits => "limits",
            Suite::Parallelogram => "parallelogram",
            Suite::Derivative => "derivative",
            Suite::Pythagorean => "pythagorean",
            Suite::Projection => "projection",
            Suite::Maxent => "maxent",
        }
    }

    pub fn parse(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s)
    }

    /// Samples per α used when none is requested.
    pub fn default_samples(self) -> usize {
        match self {
            Suite::Identity => 500,
            Suite::Limits => 100,
            Suite::Parallelogram => 1000,
            Suite::Derivative => 200,
            Suite::Pythagorean => 30,
            Suite::Projection => 50,
            Suite::Maxent => 1,
        }
    }

    pub fn default_alphas(self) -> Vec<f64> {
        match self {
            Suite::Identity => vec![0.25, 0.5, 0.9, 1.1, 2.0, 5.0],
            Suite::Limits => vec![],
            Suite::Parallelogram => vec![0.3, 0.5, 0.8, 1.5, 2.0, 4.0],
            Suite::Derivative | Suite::Pythagorean | Suite::Projection => vec![0.5, 2.0],
            Suite::Maxent => vec![0.9, 1.5, 2.0, 3.0],
        }
    }

    /// Named tolerances and their defaults; `--tol name=value` overrides.
    pub fn default_tolerances(self) -> BTreeMap<&'static str, f64> {
        let pairs: &[(&str, f64)] = match self {
            Suite::Identity => &[
                ("self_divergence", 0.0),
                ("uniform_gap", 1e-10),
                ("tilt_mass", 1e-12),
                ("norm_identity", 1e-12),
                ("path_agreement", 1e-11),
                ("jensen", 1e-12),
            ],
            Suite::Limits => &[("monotone_slack", 0.0), ("bound_factor", 10.0)],
            Suite::Parallelogram => &[("gap_slack", 1e-10), ("scale_slack", 1e-12), ("identity", 1e-11)],
            Suite::Derivative => &[("relative_error", 1e-5), ("fd_step", 1e-5), ("min_tv", 1e-3)],
            Suite::Pythagorean => &[
                ("equivalence_margin", 1e-6),
                ("equivalence_rate", 0.999),
                ("equality", 1e-8),
                ("certificate", 1e-6),
                ("negative_control", 1e-4),
                ("perturbation_tv", 0.01),
                ("iterated_tv", 1e-5),
            ],
            Suite::Projection => {
                &[("value", 1e-5), ("tv", 1e-3), ("uniqueness", 1e-6), ("oracle_coarse", 1e-3), ("oracle_fine", 1e-5)]
            }
            Suite::Maxent => &[
                ("closed_form", 1e-6),
                ("gap", 5e-3),
                ("maximizer", 5e-3),
                ("cell_width_1d", 1e-3),
                ("cell_width_2d", 0.05),
            ],
        };
        pairs.iter().copied().collect()
    }
}

/// A float that serializes rounded, with infinities as strings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportFloat(pub f64);

impl Serialize for ReportFloat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let x = self.0;
        if x.is_nan() {
            s.serialize_str("nan")
        } else if x == f64::INFINITY {
            s.serialize_str("+inf")
        } else if x == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(round_significant(x, 12))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Passes when the metric is at most the tolerance.
    AtMost,
    /// Passes when the metric is at least the tolerance.
    AtLeast,
}

/// Aggregated outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub direction: Direction,
    pub tolerance: ReportFloat,
    /// Fraction of evaluated samples allowed to violate the bound.
    pub allowed_violation_rate: ReportFloat,
    pub evaluated: usize,
    pub skipped: usize,
    pub violations: usize,
    pub worst: ReportFloat,
    pub worst_sample: Option<u64>,
    /// Ids of the first violating samples (at most 20).
    pub failing_samples: Vec<u64>,
    pub passed: bool,
}

const MAX_LISTED_FAILURES: usize = 20;

#[derive(Debug, Clone)]
struct Check {
    name: String,
    direction: Direction,
    tol: f64,
    allowed_rate: f64,
    evaluated: usize,
    skipped: usize,
    violations: usize,
    worst: Option<(f64, u64)>,
    failing: Vec<u64>,
}

impl Check {
    fn new(name: &str, direction: Direction, tol: f64) -> Self {
        Self {
            name: name.to_string(),
            direction,
            tol,
            allowed_rate: 0.0,
            evaluated: 0,
            skipped: 0,
            violations: 0,
            worst: None,
            failing: Vec::new(),
        }
    }

    fn with_rate(mut self, rate: f64) -> Self {
        self.allowed_rate = rate;
        self
    }

    fn record(&mut self, id: u64, value: f64) {
        self.evaluated += 1;
        let ok = match self.direction {
            Direction::AtMost => value <= self.tol,
            Direction::AtLeast => value >= self.tol,
        };
        if !ok {
            self.violations += 1;
            if self.failing.len() < MAX_LISTED_FAILURES {
                self.failing.push(id);
            }
        }
        let worse = match (self.worst, self.direction) {
            (None, _) => true,
            (Some((w, _)), _) if value.is_nan() => !w.is_nan(),
            (Some((w, _)), Direction::AtMost) => value > w,
            (Some((w, _)), Direction::AtLeast) => value < w,
        };
        if worse {
            self.worst = Some((value, id));
        }
    }

    fn report(&self) -> CheckReport {
        let rate_ok = self.evaluated > 0 && (self.violations as f64) <= self.allowed_rate * self.evaluated as f64;
        CheckReport {
            name: self.name.clone(),
            direction: self.direction,
            tolerance: ReportFloat(self.tol),
            allowed_violation_rate: ReportFloat(self.allowed_rate),
            evaluated: self.evaluated,
            skipped: self.skipped,
            violations: self.violations,
            worst: ReportFloat(self.worst.map_or(f64::NAN, |w| w.0)),
            worst_sample: self.worst.map(|w| w.1),
            failing_samples: self.failing.clone(),
            passed: rate_ok,
        }
    }
}

/// Observation of one sample: `(check index, value)` or a skip.
#[derive(Debug, Clone, Copy)]
enum Obs {
    Value(usize, f64),
    Skip(usize),
}

/// Informational counters that are not pass/fail checks.
type Notes = BTreeMap<String, ReportFloat>;

/// Deterministic report of one campaign.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignReport {
    pub suite: Suite,
    pub seed: u64,
    pub samples_per_alpha: usize,
    pub alphas: Vec<ReportFloat>,
    pub tolerances: BTreeMap<String, ReportFloat>,
    pub checks: Vec<CheckReport>,
    pub notes: Notes,
    pub passed: bool,
}

impl CampaignReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn check(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// What to run.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub suite: Suite,
    /// Samples per α (or instances, for the solver suites).
    pub n_samples: usize,
    pub seed: u64,
    /// Orders to sweep; `None` uses [`Suite::default_alphas`].
    pub alphas: Option<Vec<f64>>,
    /// Overrides of [`Suite::default_tolerances`].
    pub tolerances: BTreeMap<String, f64>,
}

impl CampaignConfig {
    pub fn new(suite: Suite, n_samples: usize, seed: u64) -> Self {
        Self { suite, n_samples, seed, alphas: None, tolerances: BTreeMap::new() }
    }
}

struct Ctx {
    seed: u64,
    n: usize,
    alphas: Vec<f64>,
    tol: BTreeMap<String, f64>,
}

impl Ctx {
    fn tol(&self, name: &str) -> f64 {
        self.tol[name]
    }

    fn id(&self, alpha_index: usize, k: usize) -> u64 {
        (alpha_index * self.n + k) as u64
    }

    fn ids(&self) -> Vec<(usize, usize)> {
        (0..self.alphas.len()).flat_map(|a| (0..self.n).map(move |k| (a, k))).collect()
    }
}

/// Runs one campaign.
pub fn run(config: &CampaignConfig) -> Result<CampaignReport> {
    let suite = config.suite;
    let mut tol: BTreeMap<String, f64> =
        suite.default_tolerances().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    for (k, v) in &config.tolerances {
        if !tol.contains_key(k) {
            return Err(Error::InvalidArgument(format!("unknown tolerance `{k}` for suite {}", suite.name())));
        }
        tol.insert(k.clone(), *v);
    }
    let alphas = config.alphas.clone().unwrap_or_else(|| suite.default_alphas());
    for &al in &alphas {
        AlphaParam::new(al)?;
    }
    let ctx = Ctx { seed: config.seed, n: config.n_samples, alphas, tol };
    let (checks, notes) = match suite {
        Suite::Identity => identity_suite(&ctx)?,
        Suite::Limits => limits_suite(&ctx)?,
        Suite::Parallelogram => parallelogram_suite(&ctx)?,
        Suite::Derivative => derivative_suite(&ctx)?,
        Suite::Pythagorean => pythagorean_suite(&ctx)?,
        Suite::Projection => projection_suite(&ctx)?,
        Suite::Maxent => maxent_suite(&ctx)?,
    };
    let checks: Vec<CheckReport> = checks.iter().map(Check::report).collect();
    let passed = checks.iter().all(|c| c.passed);
    Ok(CampaignReport {
        suite,
        seed: config.seed,
        samples_per_alpha: config.n_samples,
        alphas: ctx.alphas.iter().map(|&a| ReportFloat(a)).collect(),
        tolerances: ctx.tol.iter().map(|(k, &v)| (k.clone(), ReportFloat(v))).collect(),
        checks,
        notes,
        passed,
    })
}

/// Evaluates `f` on every `(alpha index, k)` in parallel and folds the
/// observations into `checks` in id order.
fn sweep<F>(ctx: &Ctx, checks: &mut [Check], f: F) -> Result<()>
where
    F: Fn(u64, f64, &mut ChaCha8Rng) -> Result<Vec<Obs>> + Sync,
{
    let results: Vec<Result<(u64, Vec<Obs>)>> = ctx
        .ids()
        .into_par_iter()
        .map(|(ai, k)| {
            let id = ctx.id(ai, k);
            let mut rng = sample_rng(ctx.seed, id);
            f(id, ctx.alphas[ai], &mut rng).map(|o| (id, o))
        })
        .collect();
    for r in results {
        let (id, obs) = r?;
        for o in obs {
            match o {
                Obs::Value(c, v) => checks[c].record(id, v),
                Obs::Skip(c) => checks[c].skipped += 1,
            }
        }
    }
    Ok(())
}

/// Counting measure or random weights in `[0.5, 2)`, with equal odds.
/// The flag tells which.
fn random_space<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<(Arc<WeightedSpace>, bool)> {
    if rng.random_bool(0.5) {
        return Ok((Arc::new(WeightedSpace::counting(n)?), true));
    }
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let points = (0..n).map(|i| crate::measures::Point::Label(i.to_string())).collect();
    Ok((Arc::new(WeightedSpace::new(points, w)?), false))
}

// ---------------------------------------------------------------------------

fn identity_suite(ctx: &Ctx) -> Result<(Vec<Check>, Notes)> {
    let mut checks = vec![
        Check::new("self_divergence", Direction::AtMost, ctx.tol("self_divergence")),
        Check::new("uniform_gap", Direction::AtMost, ctx.tol("uniform_gap")),
        Check::new("tilt_mass", Direction::AtMost, ctx.tol("tilt_mass")),
        Check::new("norm_identity", Direction::AtMost, ctx.tol("norm_identity")),
        Check::new("path_agreement", Direction::AtMost, ctx.tol("path_agreement")),
        Check::new("jensen", Direction::AtLeast, -ctx.tol("jensen")),
    ];
    sweep(ctx, &mut checks, |_, al, rng| {
        let a = AlphaParam::new(al)?;
        let n = uniform_usize(rng, 2, 100);
        let (space, counting) = random_space(rng, n)?;
        let p = random_density(rng, &space, 0.0);
        let q = random_density(rng, &space, 0.0);
        let mut obs = Vec::new();
        let via = alpha_relative_entropy(&p, &p, a)?.value;
        let direct = alpha_relative_entropy_direct(&p, &p, a)?.value;
        obs.push(Obs::Value(0, via.abs().max(direct.abs())));
        if counting {
            let (lhs, rhs) = uniform_gap_identity(&p, a)?;
            obs.push(Obs::Value(1, (lhs - rhs).abs()));
        } else {
            obs.push(Obs::Skip(1));
        }
        let pt = tilt(&p, a)?;
        obs.push(Obs::Value(2, (pt.mass() - 1.0).abs()));
        // p'_i ‖p‖^α = p_i^α
        let norm_a = alpha_norm(&p, a)?.powf(al);
        let worst = p
            .values()
            .iter()
            .zip(pt.values())
            .filter(|(&v, _)| v > 0.0)
            .map(|(&v, &t)| ((t * norm_a) / v.powf(al) - 1.0).abs())
            .fold(0.0, f64::max);
        obs.push(Obs::Value(3, worst));
        let via = alpha_relative_entropy(&p, &q, a)?.value;
        let direct = alpha_relative_entropy_direct(&p, &q, a)?.value;
        if via.is_finite() && direct.is_finite() {
            obs.push(Obs::Value(4, (via - direct).abs() / (1.0 + direct.abs())));
        } else {
            obs.push(Obs::Skip(4));
        }
        // Jensen for the convex f: I_f(P',Q') ≥ f(1) = sgn(ρ)
        let qt = tilt(&q, a)?;
        obs.push(Obs::Value(5, f_divergence(&pt, &qt, a)? - a.sign_rho()));
        Ok(obs)
    })?;
    Ok((checks, Notes::new()))
}

const LIMIT_EPSILONS: [f64; 3] = [1e-2, 1e-3, 1e-4];

fn limits_suite(ctx: &Ctx) -> Result<(Vec<Check>, Notes)> {
    let mut checks = vec![
        Check::new("monotone_decrease", Direction::AtMost, ctx.tol("monotone_slack")),
        Check::new("bound_at_1e-4", Direction::AtMost, 1.0),
    ];
    let factor = ctx.tol("bound_factor");
    // the limit suite has no α sweep: one pass over the pairs
    let ctx1 = Ctx { seed: ctx.seed, n: ctx.n, alphas: vec![1.0], tol: ctx.tol.clone() };
    sweep(&ctx1, &mut checks, |_, _, rng| {
        let n = uniform_usize(rng, 2, 10);
        let space = Arc::new(WeightedSpace::counting(n)?);
        let p = random_density(rng, &space, 0.1);
        let q = random_density(rng, &space, 0.1);
        let kl = kl_divergence(&p, &q)?;
        let rows = kl_limit_probe(&p, &q, &LIMIT_EPSILONS)?;
        let mut obs = Vec::new();
        for side in 0..2 {
            let gaps: Vec<f64> = (0..LIMIT_EPSILONS.len()).map(|k| rows[2 * k + side].gap_to_kl).collect();
            let increase = gaps.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
            obs.push(Obs::Value(0, increase));
            let eps = LIMIT_EPSILONS[2];
            obs.push(Obs::Value(1, gaps[2] / (factor * eps * (1.0 + kl))));
        }
        Ok(obs)
    })?;
    Ok((checks, Notes::new()))
}

fn parallelogram_suite(ctx: &Ctx) -> Result<(Vec<Check>, Notes)> {
    let mut checks = vec![
        Check::new("gap_sign", Direction::AtLeast, -ctx.tol("gap_slack")),
        Check::new("scale_side", Direction::AtLeast, -ctx.tol("scale_slack")),
        Check::new("identity", Direction::AtMost, ctx.tol("identity")),
        Check::new("r_combine_mass", Direction::AtMost, 1e-12),
    ];
    sweep(ctx, &mut checks, |_, al, rng| {
        let a = AlphaParam::new(al)?;
        let n = uniform_usize(rng, 2, 8);
        let space = random_space(rng, n)?.0;
        let p1 = random_density(rng, &space, 0.1);
        let p2 = random_density(rng, &space, 0.1);
        let r = random_density(rng, &space, 0.1);
        let lambda: f64 = rng.random();
        let t = parallelogram_terms(&p1, &p2, &r, lambda, a)?;
        // oriented so that nonnegative is correct in both regimes
        let orient = if a.is_below_one() { 1.0 } else { -1.0 };
        let r12 = crate::geometry::r_combine(&p1, &p2, lambda, a)?;
        Ok(vec![
            Obs::Value(0, orient * t.gap()),
            Obs::Value(1, orient * (t.scale - 1.0)),
            Obs::Value(2, t.identity_defect().abs()),
            Obs::Value(3, (r12.mass() - 1.0).abs()),
        ])
    })?;
    Ok((checks, Notes::new()))
}

/// `I_f(P'_λ, R')` for `P_λ = λP + (1-λ)Q`.
fn segment_f(p: &Density, q: &Density, r: &Density, lambda: f64, a: AlphaParam) -> Result<f64> {
    let pl = mixture(p, q, lambda)?;
    f_divergence(&tilt(&pl, a)?, &tilt(r, a)?, a)
}

fn derivative_suite(ctx: &Ctx) -> Result<(Vec<Check>, Notes)> {
    let mut checks = vec![
        Check::new("relative_error", Direction::AtMost, ctx.tol("relative_error")),
        Check::new("first_order_relative_error", Direction::AtMost, f64::INFINITY),
    ];
    let h = ctx.tol("fd_step");
    let min_tv = ctx.tol("min_tv");
    let second_order = std::sync::atomic::AtomicUsize::new(0);
    sweep(ctx, &mut checks, |_, al, rng| {
        let a = AlphaParam::new(al)?;
        let n = uniform_usize(rng, 2, 8);
        let space = random_space(rng, n)?.0;
        // min density ≥ 1e-3 keeps samples away from support boundaries
        let floor = (1e-3 * n as f64 * space.mu_weights().iter().cloned().fold(0.0, f64::max)).max(0.05);
        let p = random_density(rng, &space, floor);
        let q = random_density(rng, &space, floor);
        let r = random_density(rng, &space, floor);
        if p.total_variation(&q)? < min_tv {
            return Ok(vec![Obs::Skip(0), Obs::Skip(1)]);
        }
        let d = segment_divergence_derivative(&p, &q, &r, a)?;
        let f0 = segment_f(&p, &q, &r, 0.0, a)?;
        let f1 = segment_f(&p, &q, &r, h, a)?;
        let fd1 = (f1 - f0) / h;
        let rel1 = (d - fd1).abs() / d.abs();
        let rel = if rel1 <= ctx.tol("relative_error") {
            rel1
        } else {
            second_order.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            let f2 = segment_f(&p, &q, &r, 2.0 * h, a)?;
            let fd2 = (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h);
            (d - fd2).abs() / d.abs()
        };
        Ok(vec![Obs::Value(0, rel), Obs::Value(1, rel1)])
    })?;
    let mut notes = Notes::new();
    notes.insert(
        "second_order_stencil_used".into(),
        ReportFloat(second_order.load(std::sync::atomic::Ordering::Relaxed) as f64),
    );
    Ok((checks, notes))
}

/// A random feasible instance: reference `r` with full support and
/// `n_eq` random moment equalities whose targets come from a random
/// interior density (so the set is nonempty with interior points).
struct Instance {
    r: Density,
    e: ConstraintSet,
    statistics: Vec<Vec<f64>>,
    anchor: Density,
}

fn random_instance<R: Rng + ?Sized>(rng: &mut R, n: usize, n_eq: usize) -> Result<Instance> {
    let space = random_space(rng, n)?.0;
    let r = random_density(rng, &space, 0.05);
    let anchor = random_density(rng, &space, 0.1);
    let w = space.mu_weights();
    let mut eqs = Vec::new();
    let mut statistics = Vec::new();
    for _ in 0..n_eq {
        let t: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let target = (0..n).map(|i| t[i] * anchor.values()[i] * w[i]).sum();
        statistics.push(t.clone());
        eqs.push(LinearConstraint::new(t, target));
    }
    let e = ConstraintSet::new(Arc::clone(&space), eqs, vec![], vec![])?;
    Ok(Instance { r, e, statistics, anchor })
}

fn solver_options(seed: u64) -> SolverOptions {
    SolverOptions { seed, ..SolverOptions::default() }
}

fn projection_suite(ctx: &Ctx) -> Result<(Vec<Check>, Notes)> {
    let mut checks = vec![
        Check::new("value_vs_oracle", Direction::AtMost, ctx.tol("value")),
        Check::new("tv_vs_oracle", Direction::AtMost, ctx.tol("tv")),
        Check::new("uniqueness_tv", Direction::AtMost, ctx.tol("uniqueness")),
        Check::new("converged", Direction::AtLeast, 1.0),
        Check::new("feasibility", Direction::AtMost, crate::projection::MEMBERSHIP_TOL),
    ];
    let (coarse, fine) = (ctx.tol("oracle_coarse"), ctx.tol("oracle_fine"));
    sweep(ctx, &mut checks, |id, al, rng| {
        let a = AlphaParam::new(al)?;
        let n = uniform_usize(rng, 3, 4);
        let inst = random_instance(rng, n, 1)?;
        let res = project(&inst.r, &inst.e, a, &SolverOptions { n_cert: 0, ..solver_options(id) })?;
        let oracle = brute_force_refined(&inst.r, &inst.e, a, coarse, fine)?;
        let v_oracle = divergence(&oracle, &inst.r, a)?;
        Ok(vec![
            Obs::Value(0, (res.value - v_oracle).abs()),
            Obs::Value(1, res.q.total_variation(&oracle)?),
            Obs::Value(2, res.restarts_agreement),
            Obs::Value(3, if res.converged { 1.0 } else { 0.0 }),
            Obs::Value(4, inst.e.max_violation(res.q.values())),
        ])
    })?;
    Ok((checks, Notes::new()))
}

fn pythagorean_suite(ctx: &Ctx) -> Result<(Vec<Check>, Notes)> {
    let mut checks = vec![
        Check::new("segment_equivalence", Direction::AtMost, 0.0).with_rate(1.0 - ctx.tol("equivalence_rate")),
        Check::new("equality_variant", Direction::AtMost, ctx.tol("equality")),
        Check::new("certificate", Direction::AtLeast, -ctx.tol("certificate")),
        Check::new("negative_control", Direction::AtMost, -ctx.tol("negative_control")),
        Check::new("iterated_tv", Direction::AtMost, ctx.tol("iterated_tv")),
    ];
    let margin = ctx.tol("equivalence_margin");
    let pert_tv = ctx.tol("perturbation_tv");
    // triples for the segment equivalence are cheap: 100 per instance
    const TRIPLES: usize = 100;
    sweep(ctx, &mut checks, |id, al, rng| {
        let a = AlphaParam::new(al)?;
        let mut obs = Vec::new();
        let grid = default_lambda_grid();
        for _ in 0..TRIPLES {
            let n = uniform_usize(rng, 2, 8);
            let space = random_space(rng, n)?.0;
            let p = random_density(rng, &space, 0.05);
            let q = random_density(rng, &space, 0.05);
            let r = random_density(rng, &space, 0.05);
            let res = pythagorean_report(&p, &q, &r, a)?.residual;
            if res.abs() <= margin || p.total_variation(&q)? < 1e-3 {
                obs.push(Obs::Skip(0));
                continue;
            }
            let seg = segment_min_check(&p, &q, &r, a, &grid)?;
            obs.push(Obs::Value(0, if seg == (res >= 0.0) { 0.0 } else { 1.0 }));
        }

        // Q minimizes I_α(·,R) on a segment [S, P] at an interior point
        let n = uniform_usize(rng, 2, 8);
        let space = random_space(rng, n)?.0;
        let p = random_density(rng, &space, 0.05);
        let s = random_density(rng, &space, 0.05);
        let mid = mixture(&p, &s, 0.5)?;
        let r = random_density(rng, &space, 0.05);
        let r = mixture(&mid, &r, 0.7)?;
        match segment_minimizer(&p, &s, &r, a)? {
            Some(mu) => {
                let q = mixture(&p, &s, mu)?;
                let e1 = pythagorean_report(&p, &q, &r, a)?.residual.abs();
                let e2 = pythagorean_report(&s, &q, &r, a)?.residual.abs();
                obs.push(Obs::Value(1, e1.max(e2)));
            }
            None => obs.push(Obs::Skip(1)),
        }

        // certificates and the negative control on a solved instance
        let n = uniform_usize(rng, 3, 6);
        let n_eq = uniform_usize(rng, 1, 2.min(n - 2));
        let inst = random_instance(rng, n, n_eq)?;
        let opts = solver_options(id);
        let res = project(&inst.r, &inst.e, a, &opts)?;
        let worst = projection_characterization_check(&res.q, &inst.r, &inst.e, a, opts.n_cert, id)?;
        obs.push(Obs::Value(2, worst.min(res.worst_certificate())));
        match feasible_perturbation(&res.q, &inst.e, pert_tv) {
            Ok(bad) => {
                let worst = projection_characterization_check(&bad, &inst.r, &inst.e, a, opts.n_cert, id)?;
                obs.push(Obs::Value(3, worst));
            }
            Err(_) => obs.push(Obs::Skip(3)),
        }

        // nested affine families: E ⊇ E1 = E ∩ {E_P[T2] = t2}
        let w = inst.e.space().mu_weights().to_vec();
        let t2: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let target = (0..n).map(|i| t2[i] * inst.anchor.values()[i] * w[i]).sum();
        let mut eqs = inst.e.equalities().to_vec();
        eqs.push(LinearConstraint::new(t2, target));
        let _ = &inst.statistics;
        let e1 = ConstraintSet::new(Arc::clone(inst.e.space()), eqs, vec![], vec![])?;
        let it = iterated_projection_check(&inst.r, &inst.e, &e1, a, &opts)?;
        if it.interior {
            obs.push(Obs::Value(4, it.tv_gap));
        } else {
            obs.push(Obs::Skip(4));
        }
        Ok(obs)
    })?;
    Ok((checks, Notes::new()))
}

/// Richardson-extrapolated `(Z, variance)` of `g_{2,1}` from cell widths
/// `h` and `h/2`.
fn closed_form_fixture(h: f64) -> Result<(f64, f64, f64)> {
    let spec = GeneralizedGaussianSpec::new(AlphaParam::new(2.0)?, nalgebra::DMatrix::from_element(1, 1, 1.0))?;
    let coarse = generalized_gaussian(&spec, h, &[0.0])?;
    let fine = generalized_gaussian(&spec, h / 2.0, &[0.0])?;
    let var = |g: &Density| covariance(g).map(|c| c[(0, 0)]);
    let z = (4.0 * fine.z - coarse.z) / 3.0;
    let v = (4.0 * var(&fine.density)? - var(&coarse.density)?) / 3.0;
    let support = spec.support_half_widths().expect("α > 1")[0];
    Ok((z, v, support))
}

fn maxent_suite(ctx: &Ctx) -> Result<(Vec<Check>, Notes)> {
    let mut checks = vec![
        Check::new("closed_form_z", Direction::AtMost, ctx.tol("closed_form")),
        Check::new("closed_form_variance", Direction::AtMost, ctx.tol("closed_form")),
        Check::new("closed_form_support", Direction::AtMost, ctx.tol("closed_form")),
        Check::new("gap", Direction::AtMost, ctx.tol("gap")),
        Check::new("abs_gap_supported", Direction::AtMost, ctx.tol("gap")),
        Check::new("maximizer", Direction::AtMost, ctx.tol("maximizer")),
        Check::new("b_alpha_sign", Direction::AtMost, 0.0),
    ];
    let mut notes = Notes::new();
    let (z, v, support) = closed_form_fixture(ctx.tol("cell_width_1d"))?;
    checks[0].record(0, (z - 4.0 * 5.0_f64.sqrt() / 3.0).abs());
    checks[1].record(0, (v - 1.0).abs());
    checks[2].record(0, (support - 5.0_f64.sqrt()).abs());

    // (dimension, α) cases; each evaluates every test family
    let cases: Vec<(usize, f64)> = [1usize, 2].iter().flat_map(|&n| ctx.alphas.iter().map(move |&a| (n, a))).collect();
    // (label, gap, H(g) - H(g_max), (α-1)b_α, whether supp g ⊆ supp g_max)
    type Row = (String, f64, f64, f64, bool);
    let results: Vec<Result<Vec<Row>>> = cases
        .par_iter()
        .map(|&(n, al)| {
            let a = AlphaParam::new(al)?;
            let (c, h, hw) = if n == 1 {
                (nalgebra::DMatrix::from_element(1, 1, 1.0), ctx.tol("cell_width_1d"), vec![8.0])
            } else {
                (
                    nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 4.0])),
                    ctx.tol("cell_width_2d"),
                    vec![8.0, 16.0],
                )
            };
            let variances: Vec<f64> = (0..n).map(|i| c[(i, i)]).collect();
            let spec = GeneralizedGaussianSpec::new(a, c)?;
            let gg = generalized_gaussian(&spec, h, &hw)?;
            let h_max = renyi_entropy(&gg.density, a)?;
            let mut out = Vec::new();
            for fam in TestFamily::ALL {
                let g = fam.discretize(Arc::clone(gg.density.space()), &variances, &gg.grid.h)?;
                let m = moment_entropy_gap(&g, &spec, &gg.density)?;
                let supported = al < 1.0 || fam == TestFamily::Uniform;
                out.push((
                    format!("n{n}_alpha{al}_{}", fam.name()),
                    m.gap,
                    m.h_g - h_max,
                    spec.b_alpha() * (al - 1.0),
                    supported,
                ));
            }
            Ok(out)
        })
        .collect();
    let mut id = 0u64;
    for r in results {
        for (name, gap, excess, sign, supported) in r? {
            checks[3].record(id, gap);
            if supported {
                checks[4].record(id, gap.abs());
            } else {
                checks[4].skipped += 1;
            }
            checks[5].record(id, excess);
            checks[6].record(id, sign);
            notes.insert(format!("gap_{name}"), ReportFloat(gap));
            id += 1;
        }
    }
    notes.insert("closed_form_z".into(), ReportFloat(z));
    notes.insert("closed_form_variance".into(), ReportFloat(v));
    Ok((checks, notes))
}
