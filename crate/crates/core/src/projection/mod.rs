//! `I_α`-projection of a reference density onto a convex set cut out by
//! linear moment constraints.
//!
//! Minimizing `I_α(P,R)` over `E` is equivalent to minimizing
//!
//! ```text
//! F(p) = sgn(ρ) · Σ_i (p_i/‖p‖) g_i w_i,    g = (r/‖r‖)^{α-1}
//! ```
//!
//! because `I_α(P,R) = (1/ρ) log Σ (p/‖p‖) g w` is increasing in `F` for
//! both signs of ρ. The solver runs spectral projected gradient on `F` over
//! the feasible polytope, polishes with Newton steps on the active face and
//! repeats from several starting points.

pub mod oracle;
mod polytope;
mod solver;

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergences::divergence;
use crate::geometry::pythagorean_report;
use crate::measures::{alpha_norm_slice, AlphaParam, Density, WeightedSpace};
use crate::numeric::pairwise_sum_by;
use crate::sampling::{dirichlet_weights, sample_rng};
use crate::{Error, Result};

pub use oracle::{brute_force_project, brute_force_refined, ORACLE_MAX_SUPPORT};
pub use polytope::EXACT_LIMIT;

use polytope::{LpOutcome, Polytope};

/// Tolerance for membership in a constraint set.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// One linear constraint `Σ_i T(x_i) p_i w_i (= or ≤) target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearConstraint {
    pub statistic: Vec<f64>,
    #[serde(alias = "bound")]
    pub target: f64,
}

impl LinearConstraint {
    pub fn new(statistic: Vec<f64>, target: f64) -> Self {
        Self { statistic, target }
    }
}

/// A nonempty convex set of probability densities defined by linear
/// equalities, inequalities and atoms forced to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    space: Arc<WeightedSpace>,
    equalities: Vec<LinearConstraint>,
    inequalities: Vec<LinearConstraint>,
    zero_support: Vec<usize>,
    polytope: Polytope,
    vertices: Vec<Vec<f64>>,
}

impl ConstraintSet {
    /// Validates the constraints and rejects an empty feasible set.
    pub fn new(
        space: Arc<WeightedSpace>,
        equalities: Vec<LinearConstraint>,
        inequalities: Vec<LinearConstraint>,
        zero_support: Vec<usize>,
    ) -> Result<Self> {
        let n = space.len();
        for c in equalities.iter().chain(&inequalities) {
            if c.statistic.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: c.statistic.len() });
            }
            if let Some(index) = c.statistic.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index });
            }
            if !c.target.is_finite() {
                return Err(Error::InvalidArgument("constraint target is not finite".into()));
            }
        }
        let mut zero_support = zero_support;
        zero_support.sort_unstable();
        zero_support.dedup();
        if let Some(&i) = zero_support.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidArgument(format!("zero_support index {i} out of range")));
        }
        let polytope = build_polytope(&space, &equalities, &inequalities, &zero_support, &[]);
        if polytope.dim() == 0 || !feasible(&polytope) {
            return Err(Error::Infeasible);
        }
        let vertices: Vec<Vec<f64>> = polytope.vertices().iter().map(|v| polytope.embed(v)).collect();
        if vertices.is_empty() {
            return Err(Error::Infeasible);
        }
        Ok(Self { space, equalities, inequalities, zero_support, polytope, vertices })
    }

    /// The whole probability simplex.
    pub fn simplex(space: Arc<WeightedSpace>) -> Result<Self> {
        Self::new(space, Vec::new(), Vec::new(), Vec::new())
    }

    /// The singleton `{p}` when `p` is a vertex-determining point: all
    /// coordinates pinned by equalities.
    pub fn singleton(p: &Density) -> Result<Self> {
        let n = p.len();
        let w = p.weights();
        let mut eqs = Vec::new();
        let mut zeros = Vec::new();
        for i in 0..n {
            if p.values()[i] == 0.0 {
                zeros.push(i);
            } else {
                let mut t = vec![0.0; n];
                t[i] = 1.0;
                eqs.push(LinearConstraint::new(t, p.values()[i] * w[i]));
            }
        }
        Self::new(Arc::clone(p.space()), eqs, Vec::new(), zeros)
    }

    pub fn space(&self) -> &Arc<WeightedSpace> {
        &self.space
    }

    pub fn equalities(&self) -> &[LinearConstraint] {
        &self.equalities
    }

    pub fn inequalities(&self) -> &[LinearConstraint] {
        &self.inequalities
    }

    pub fn zero_support(&self) -> &[usize] {
        &self.zero_support
    }

    /// Vertices of the feasible polytope as full density vectors.
    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn vertex_densities(&self) -> Vec<Density> {
        self.vertices.iter().map(|v| Density::from_parts_unchecked(Arc::clone(&self.space), v.clone())).collect()
    }

    /// Largest violation of any constraint (including mass and sign) by `p`.
    pub fn max_violation(&self, p: &[f64]) -> f64 {
        let zeros = self.zero_support.iter().fold(0.0_f64, |m, &i| m.max(p[i].abs()));
        let free: Vec<f64> = self.polytope.free.iter().map(|&i| p[i]).collect();
        zeros.max(self.polytope.max_violation(&free))
    }

    /// `p ∈ E` within [`MEMBERSHIP_TOL`].
    pub fn contains(&self, p: &Density) -> bool {
        p.space().as_ref() == self.space.as_ref() && self.max_violation(p.values()) <= MEMBERSHIP_TOL
    }

    /// Whether every constraint of `outer` also appears in `self`, which
    /// makes `self ⊆ outer`.
    pub fn includes_constraints_of(&self, outer: &ConstraintSet) -> bool {
        self.space == outer.space
            && outer.equalities.iter().all(|c| self.equalities.contains(c))
            && outer.inequalities.iter().all(|c| self.inequalities.contains(c))
            && outer.zero_support.iter().all(|i| self.zero_support.contains(i))
    }

    /// Mean of the vertices, a point of the relative interior.
    pub fn barycenter(&self) -> Density {
        Density::from_parts_unchecked(Arc::clone(&self.space), vertex_mean(&self.vertices))
    }

    /// Random feasible density: Dirichlet(1) weights over the vertices,
    /// rejected (and redrawn) if rounding leaves the set.
    pub fn random_feasible<R: Rng + ?Sized>(&self, rng: &mut R) -> Density {
        for _ in 0..16 {
            let x = random_combination(rng, &self.vertices);
            if self.max_violation(&x) <= MEMBERSHIP_TOL {
                return Density::from_parts_unchecked(Arc::clone(&self.space), x);
            }
        }
        self.barycenter()
    }

    /// Largest value of `Σ c_i p_i w_i` over `E`.
    pub fn maximize_linear(&self, c: &[f64]) -> f64 {
        let w = self.space.mu_weights();
        self.vertices.iter().map(|v| pairwise_sum_by(v.len(), |i| c[i] * v[i] * w[i])).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Polytope over the atoms outside `zero_support ∪ extra_zero`.
    pub(crate) fn restricted_polytope(&self, extra_zero: &[usize]) -> Polytope {
        build_polytope(&self.space, &self.equalities, &self.inequalities, &self.zero_support, extra_zero)
    }

    pub(crate) fn polytope(&self) -> &Polytope {
        &self.polytope
    }
}

/// Rows in density coordinates: the statistic times the μ-weight.
fn build_polytope(
    space: &WeightedSpace,
    equalities: &[LinearConstraint],
    inequalities: &[LinearConstraint],
    zero_support: &[usize],
    extra_zero: &[usize],
) -> Polytope {
    let n = space.len();
    let w = space.mu_weights();
    let free: Vec<usize> = (0..n).filter(|i| !zero_support.contains(i) && !extra_zero.contains(i)).collect();
    let row = |t: &[f64]| free.iter().map(|&i| t[i] * w[i]).collect::<Vec<f64>>();
    let mut eq_rows = vec![free.iter().map(|&i| w[i]).collect::<Vec<f64>>()];
    let mut eq_rhs = vec![1.0];
    for c in equalities {
        eq_rows.push(row(&c.statistic));
        eq_rhs.push(c.target);
    }
    let ineq_rows = inequalities.iter().map(|c| row(&c.statistic)).collect();
    let ineq_rhs = inequalities.iter().map(|c| c.target).collect();
    Polytope { free, n_full: n, eq_rows, eq_rhs, ineq_rows, ineq_rhs }
}

fn feasible(p: &Polytope) -> bool {
    if p.dim() == 0 {
        return false;
    }
    if p.dim() <= EXACT_LIMIT {
        !p.vertices().is_empty()
    } else {
        matches!(p.minimize(&vec![0.0; p.dim()]), LpOutcome::Optimal(..))
    }
}

fn vertex_mean(vertices: &[Vec<f64>]) -> Vec<f64> {
    let k = vertices.len() as f64;
    let n = vertices[0].len();
    (0..n).map(|i| pairwise_sum_by(vertices.len(), |j| vertices[j][i]) / k).collect()
}

fn random_combination<R: Rng + ?Sized>(rng: &mut R, vertices: &[Vec<f64>]) -> Vec<f64> {
    let lam = dirichlet_weights(rng, vertices.len());
    let n = vertices[0].len();
    (0..n).map(|i| pairwise_sum_by(vertices.len(), |j| lam[j] * vertices[j][i]).max(0.0)).collect()
}

/// `g_i = (r_i/‖r‖)^{α-1}`; atoms with `r_i = 0` map to 0 for α > 1 and to
/// `+∞` for α < 1.
pub fn objective_transform(r: &Density, a: AlphaParam) -> Result<Vec<f64>> {
    let nr = alpha_norm_slice(r.values(), r.weights(), a.alpha());
    if nr == 0.0 {
        return Err(Error::AllZero);
    }
    let e = a.alpha() - 1.0;
    Ok(r.values()
        .iter()
        .map(|&ri| {
            if ri == 0.0 {
                if e > 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (ri / nr).powf(e)
            }
        })
        .collect())
}

/// `Σ (p_i/‖p‖) g_i w_i`, the linear-ratio objective before the sign.
pub fn transformed_objective(p: &Density, g: &[f64], a: AlphaParam) -> f64 {
    let w = p.weights();
    let np = alpha_norm_slice(p.values(), w, a.alpha());
    pairwise_sum_by(p.len(), |i| if p.values()[i] == 0.0 { 0.0 } else { p.values()[i] / np * g[i] * w[i] })
}

/// `I_α(P,R)` recovered from [`transformed_objective`]: `(1/ρ) log v`.
pub fn divergence_from_objective(v: f64, a: AlphaParam) -> f64 {
    (v.ln() / a.rho()).max(0.0)
}

/// Solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Projected-gradient and relative-objective stopping tolerance.
    pub tol: f64,
    pub max_iterations: usize,
    pub n_restarts: usize,
    /// Random feasible samples used for the Pythagorean certificate.
    pub n_cert: usize,
    pub seed: u64,
    pub armijo_c: f64,
    pub backtrack: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iterations: 100_000,
            n_restarts: 16,
            n_cert: 200,
            seed: 0,
            armijo_c: 1e-4,
            backtrack: 0.5,
        }
    }
}

/// Final value of one restart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartTrace {
    pub index: usize,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Outcome of [`project`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub q: Density,
    /// `I_α(Q,R)` in nats.
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `(sample id, I(P,R) - I(P,Q) - I(Q,R))` for random feasible `P`.
    pub certificate_residuals: Vec<(usize, f64)>,
    /// Largest TV distance between restart solutions.
    pub restarts_agreement: f64,
    pub restarts: Vec<RestartTrace>,
}

impl ProjectionResult {
    pub fn worst_certificate(&self) -> f64 {
        self.certificate_residuals.iter().map(|&(_, r)| r).fold(f64::INFINITY, f64::min)
    }
}

/// Vertex coordinates at or below this are treated as structural zeros.
const IMPLICIT_ZERO: f64 = 1e-12;

/// Atoms the solver may use, or `AllDivergencesInfinite` when every
/// feasible density is at infinite divergence from `r`.
fn solver_polytope(r: &Density, e: &ConstraintSet, a: AlphaParam) -> Result<Polytope> {
    let off_support: Vec<usize> = (0..r.len()).filter(|&i| r.values()[i] == 0.0).collect();
    if a.is_below_one() {
        let poly = e.restricted_polytope(&off_support);
        if poly.dim() == 0 || !feasible(&poly) {
            return Err(Error::AllDivergencesInfinite);
        }
        // atoms that no feasible density charges; the solver keeps every
        // remaining coordinate strictly positive
        let vertices = poly.vertices();
        let implicit: Vec<usize> =
            (0..poly.dim()).filter(|&j| vertices.iter().all(|v| v[j] <= IMPLICIT_ZERO)).map(|j| poly.free[j]).collect();
        if implicit.is_empty() {
            return Ok(poly);
        }
        let mut zeros = off_support;
        zeros.extend(implicit);
        Ok(e.restricted_polytope(&zeros))
    } else {
        let mut c = vec![0.0; r.len()];
        for (i, ci) in c.iter_mut().enumerate() {
            if r.values()[i] > 0.0 {
                *ci = 1.0;
            }
        }
        if e.maximize_linear(&c) <= 0.0 {
            return Err(Error::AllDivergencesInfinite);
        }
        Ok(e.polytope().clone())
    }
}

/// `I_α`-projection of `r` onto `e`.
///
/// A run that exhausts `opts.max_iterations` is returned with
/// `converged = false`.
pub fn project(r: &Density, e: &ConstraintSet, a: AlphaParam, opts: &SolverOptions) -> Result<ProjectionResult> {
    if r.space().as_ref() != e.space().as_ref() {
        return Err(Error::SpaceMismatch);
    }
    let poly = solver_polytope(r, e, a)?;
    let g_full = objective_transform(r, a)?;
    let problem = solver::Problem::new(&poly, r.weights(), &g_full, a);
    let vertices = poly.vertices();
    if vertices.is_empty() {
        return Err(Error::Infeasible);
    }
    let n_restarts = opts.n_restarts.max(1);
    let runs: Vec<solver::Solution> = (0..n_restarts)
        .into_par_iter()
        .map(|k| {
            let x0 = if k == 0 {
                vertex_mean(&vertices)
            } else {
                let mut rng = sample_rng(opts.seed, k as u64);
                random_combination(&mut rng, &vertices)
            };
            problem.solve(x0, opts)
        })
        .collect();

    let space = Arc::clone(r.space());
    let dens: Vec<Density> =
        runs.iter().map(|s| Density::from_parts_unchecked(Arc::clone(&space), poly.embed(&s.x))).collect();
    // converged runs first; among them the lowest objective
    let mut best = 0;
    for k in 1..runs.len() {
        let (a, b) = (&runs[k], &runs[best]);
        if (a.converged, -a.objective) > (b.converged, -b.objective) {
            best = k;
        }
    }
    let mut restarts_agreement: f64 = 0.0;
    for i in 0..dens.len() {
        for j in i + 1..dens.len() {
            restarts_agreement = restarts_agreement.max(dens[i].total_variation(&dens[j])?);
        }
    }
    let restarts = runs
        .iter()
        .zip(&dens)
        .enumerate()
        .map(|(index, (s, d))| {
            Ok(RestartTrace { index, value: divergence(d, r, a)?, iterations: s.iterations, converged: s.converged })
        })
        .collect::<Result<Vec<_>>>()?;
    let q = dens[best].clone();
    let value = restarts[best].value;
    let certificate_residuals = certificates(&q, r, e, a, opts.n_cert, opts.seed)?;
    Ok(ProjectionResult {
        q,
        value,
        iterations: runs[best].iterations,
        converged: runs[best].converged,
        certificate_residuals,
        restarts_agreement,
        restarts,
    })
}

/// Seed stream reserved for certificate samples, disjoint from restarts.
const CERT_STREAM_OFFSET: u64 = 1 << 32;

fn certificates(
    q: &Density,
    r: &Density,
    e: &ConstraintSet,
    a: AlphaParam,
    n: usize,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    (0..n)
        .into_par_iter()
        .map(|k| {
            let mut rng = sample_rng(seed, CERT_STREAM_OFFSET + k as u64);
            let p = e.random_feasible(&mut rng);
            Ok((k, pythagorean_report(&p, q, r, a)?.residual))
        })
        .collect()
}

/// Max pairwise TV distance among `n_restarts` solver runs.
pub fn uniqueness_probe(
    r: &Density,
    e: &ConstraintSet,
    a: AlphaParam,
    n_restarts: usize,
    opts: &SolverOptions,
) -> Result<f64> {
    let opts = SolverOptions { n_restarts, n_cert: 0, ..opts.clone() };
    Ok(project(r, e, a, &opts)?.restarts_agreement)
}

/// Outcome of [`iterated_projection_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct IteratedProjection {
    /// Projection of R on E.
    pub q: Density,
    /// Projection of R on E1.
    pub q1: Density,
    /// Projection of Q on E1.
    pub q1_direct: Density,
    pub tv_gap: f64,
    /// Whether Q has full support on the free atoms of E, the regime in
    /// which the two routes are expected to agree.
    pub interior: bool,
}

/// Projects `r` onto `e1` directly and through the projection on `e ⊇ e1`.
pub fn iterated_projection_check(
    r: &Density,
    e: &ConstraintSet,
    e1: &ConstraintSet,
    a: AlphaParam,
    opts: &SolverOptions,
) -> Result<IteratedProjection> {
    if !e1.includes_constraints_of(e) {
        return Err(Error::NotNested);
    }
    let opts = SolverOptions { n_cert: 0, ..opts.clone() };
    let q = project(r, e, a, &opts)?.q;
    let q1 = project(r, e1, a, &opts)?.q;
    let q1_direct = project(&q, e1, a, &opts)?.q;
    let tv_gap = q1.total_variation(&q1_direct)?;
    let interior = e.polytope().free.iter().all(|&i| q.values()[i] > 1e-9);
    Ok(IteratedProjection { q, q1, q1_direct, tv_gap, interior })
}

/// Smallest Pythagorean residual `I(P,R) - I(P,Q) - I(Q,R)` over
/// `n_samples` random feasible `P` and, when the free support has at most
/// [`EXACT_LIMIT`] atoms, every vertex of `E`.
pub fn projection_characterization_check(
    q: &Density,
    r: &Density,
    e: &ConstraintSet,
    a: AlphaParam,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if !e.contains(q) {
        return Err(Error::Infeasible);
    }
    let mut worst =
        certificates(q, r, e, a, n_samples, seed)?.into_iter().map(|(_, v)| v).fold(f64::INFINITY, f64::min);
    if e.polytope().dim() <= EXACT_LIMIT {
        for v in e.vertex_densities() {
            worst = worst.min(pythagorean_report(&v, q, r, a)?.residual);
        }
    }
    Ok(worst)
}

/// A feasible density at TV distance `tv` from `q`, moved towards the
/// vertex of `E` farthest from `q` in TV.
pub fn feasible_perturbation(q: &Density, e: &ConstraintSet, tv: f64) -> Result<Density> {
    let w = q.weights();
    let mut far: Option<(f64, &Vec<f64>)> = None;
    for v in e.vertices() {
        let d = crate::numeric::total_variation(q.values(), v, w);
        if far.is_none_or(|(fd, _)| d > fd) {
            far = Some((d, v));
        }
    }
    let Some((d, v)) = far else { return Err(Error::Infeasible) };
    if d == 0.0 {
        return Err(Error::InvalidArgument("constraint set is a single point".into()));
    }
    let t = (tv / d).min(1.0);
    let values = q.values().iter().zip(v).map(|(a, b)| (a + t * (b - a)).max(0.0)).collect();
    Density::probability(Arc::clone(q.space()), values)
}
