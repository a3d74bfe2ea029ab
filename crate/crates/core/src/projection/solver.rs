//! Spectral projected gradient on `F(p) = sgn(ρ) L(p)/N(p)` with
//! `L = Σ p g w` and `N = ‖p‖_α`, followed by Newton steps on the active face.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::polytope::{dot, Polytope};
use super::SolverOptions;
use crate::measures::{alpha_norm_slice, AlphaParam};
use crate::numeric::pairwise_sum_by;

/// Smallest coordinate used in `x^{α-1}` when α < 1.
const FLOOR: f64 = 1e-300;
/// Fraction of the distance to the nearest bound an interior step may cover.
const TO_BOUNDARY: f64 = 0.99;
/// Objective history length for the relative-change stopping test.
const HISTORY: usize = 10;

pub(crate) struct Problem<'a> {
    poly: &'a Polytope,
    w: Vec<f64>,
    g: Vec<f64>,
    a: AlphaParam,
}

#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl<'a> Problem<'a> {
    /// `w_full` and `g_full` are indexed by the full space; `poly.free`
    /// selects the variables.
    pub fn new(poly: &'a Polytope, w_full: &[f64], g_full: &[f64], a: AlphaParam) -> Self {
        let w = poly.free.iter().map(|&i| w_full[i]).collect();
        let g = poly.free.iter().map(|&i| g_full[i]).collect();
        Self { poly, w, g, a }
    }

    fn interior(&self) -> bool {
        self.a.is_below_one()
    }

    fn parts(&self, x: &[f64]) -> (f64, f64) {
        let l = pairwise_sum_by(x.len(), |i| x[i] * self.g[i] * self.w[i]);
        let n = alpha_norm_slice(x, &self.w, self.a.alpha());
        (l, n)
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let (l, n) = self.parts(x);
        self.a.sign_rho() * l / n
    }

    /// `b = ∇N = (x/N)^{α-1} w`.
    fn norm_gradient(&self, x: &[f64], n: f64) -> Vec<f64> {
        let e = self.a.alpha() - 1.0;
        x.iter()
            .zip(&self.w)
            .map(|(&xi, &wi)| {
                if xi <= 0.0 {
                    if e > 0.0 {
                        0.0
                    } else {
                        (FLOOR / n).powf(e) * wi
                    }
                } else {
                    (xi / n).powf(e) * wi
                }
            })
            .collect()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (l, n) = self.parts(x);
        let b = self.norm_gradient(x, n);
        let s = self.a.sign_rho();
        (0..x.len()).map(|i| s * (self.g[i] * self.w[i] / n - l * b[i] / (n * n))).collect()
    }

    /// Hessian of `F` restricted to the coordinates in `idx`.
    fn hessian(&self, x: &[f64], idx: &[usize]) -> DMatrix<f64> {
        let (l, n) = self.parts(x);
        let b = self.norm_gradient(x, n);
        let al = self.a.alpha();
        let s = self.a.sign_rho();
        let m = idx.len();
        DMatrix::from_fn(m, m, |r, c| {
            let (i, j) = (idx[r], idx[c]);
            let ai = self.g[i] * self.w[i];
            let aj = self.g[j] * self.w[j];
            let mut h2n = (1.0 - al) * b[i] * b[j] / n;
            if i == j {
                h2n += (al - 1.0) * b[i] / x[i];
            }
            s * (-(ai * b[j] + b[i] * aj) / (n * n) + 2.0 * l * b[i] * b[j] / (n * n * n) - l / (n * n) * h2n)
        })
    }

    /// Projected-gradient residual `‖P(x - τ∇F) - x‖∞ / τ` with
    /// `τ = min(1, 1/‖∇F‖∞)`.
    fn pg_norm(&self, x: &[f64], grad: &[f64]) -> f64 {
        let gmax = inf_norm(grad);
        let tau = if gmax > 1.0 { 1.0 / gmax } else { 1.0 };
        let y: Vec<f64> = x.iter().zip(grad).map(|(a, b)| a - tau * b).collect();
        let p = self.poly.project(&y, x);
        p.iter().zip(x).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())) / tau
    }

    pub fn solve(&self, x0: Vec<f64>, opts: &SolverOptions) -> Solution {
        let mut x = x0;
        let mut f = self.objective(&x);
        let mut grad = self.gradient(&x);
        let diam = 1.0 / self.w.iter().fold(f64::INFINITY, |m, &w| m.min(w));
        let gmax = inf_norm(&grad);
        let mut step = if gmax > 0.0 { (diam / gmax).min(1.0) } else { 1.0 };
        let mut history = vec![f];
        let mut iterations = 0;
        let mut spg_done = false;

        while iterations < opts.max_iterations {
            let pg = self.pg_norm(&x, &grad);
            if pg <= opts.tol && history_stable(&history, opts.tol) {
                spg_done = true;
                break;
            }
            if pg == 0.0 {
                spg_done = true;
                break;
            }
            // no representable progress left: hand over to the Newton polish
            if history_stalled(&history) {
                break;
            }
            iterations += 1;
            // keep the trial point within a few diameters of the polytope
            let gmax = inf_norm(&grad);
            let t_cap = if gmax > 0.0 { 10.0 * diam / gmax } else { step };
            let t = step.min(t_cap);
            let y: Vec<f64> = x.iter().zip(&grad).map(|(a, b)| a - t * b).collect();
            let target = self.poly.project(&y, &x);
            let d: Vec<f64> = target.iter().zip(&x).map(|(a, b)| a - b).collect();
            let slope = dot(&grad, &d);
            if slope >= 0.0 || inf_norm(&d) == 0.0 {
                // no descent along the projected direction at this step length
                if step <= 1e-30 {
                    break;
                }
                step *= 0.1;
                continue;
            }
            // for α < 1 the minimizer has every free coordinate positive and
            // the gradient is unbounded near zero, so iterates stay interior
            let mut lambda: f64 = 1.0;
            if self.interior() {
                for (xi, di) in x.iter().zip(&d) {
                    if *di < 0.0 {
                        lambda = lambda.min(TO_BOUNDARY * xi / -di);
                    }
                }
            }
            let mut accepted = None;
            for _ in 0..60 {
                let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| (a + lambda * b).max(0.0)).collect();
                let fnew = self.objective(&xn);
                if fnew <= f + opts.armijo_c * lambda * slope {
                    accepted = Some((xn, fnew));
                    break;
                }
                lambda *= opts.backtrack;
            }
            let Some((xn, fnew)) = accepted else {
                break;
            };
            let gn = self.gradient(&xn);
            let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            let yv: Vec<f64> = gn.iter().zip(&grad).map(|(a, b)| a - b).collect();
            let sty = dot(&s, &yv);
            step = if sty > 0.0 { (dot(&s, &s) / sty).clamp(1e-30, 1e30) } else { (step * 10.0).min(1e30) };
            x = xn;
            f = fnew;
            grad = gn;
            history.push(f);
            if history.len() > HISTORY + 1 {
                history.remove(0);
            }
        }

        self.polish(&mut x);
        let f = self.objective(&x);
        let grad = self.gradient(&x);
        let pg = self.pg_norm(&x, &grad);
        let exhausted = iterations >= opts.max_iterations && !spg_done;
        let converged = !exhausted && (pg <= opts.tol || (spg_done && pg <= 10.0 * opts.tol));
        Solution { x, objective: f, iterations, converged }
    }

    /// Newton iterations on the face of active bounds and inequalities.
    fn polish(&self, x: &mut Vec<f64>) {
        let k = x.len();
        let scale = 1.0 + inf_norm(x);
        let interior = self.interior();
        for _ in 0..20 {
            if !interior {
                for xi in x.iter_mut() {
                    if *xi <= 1e-14 * scale {
                        *xi = 0.0;
                    }
                }
            }
            let idx: Vec<usize> = (0..k).filter(|&i| x[i] > 0.0).collect();
            if idx.is_empty() {
                return;
            }
            // constraints restricted to the free coordinates
            let mut rows: Vec<Vec<f64>> =
                self.poly.eq_rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect();
            let mut residual: Vec<f64> =
                self.poly.eq_rows.iter().zip(&self.poly.eq_rhs).map(|(r, &b)| b - dot(r, x)).collect();
            for (r, &b) in self.poly.ineq_rows.iter().zip(&self.poly.ineq_rhs) {
                if b - dot(r, x) <= 1e-12 * scale {
                    rows.push(idx.iter().map(|&i| r[i]).collect());
                    residual.push(b - dot(r, x));
                }
            }
            // minimum-norm correction of the drift off the active constraints,
            // so that objective values below compare feasible points
            let m = DMatrix::from_fn(rows.len(), idx.len(), |r, c| rows[r][c]);
            if let Ok(fix) = m.svd(true, true).solve(&DVector::from_vec(residual), 1e-12) {
                let mut xc = x.clone();
                for (j, &i) in idx.iter().enumerate() {
                    xc[i] += fix[j];
                }
                let positive = idx.iter().all(|&i| xc[i] > 0.0);
                if positive && self.poly.max_violation(&xc) <= self.poly.max_violation(x) {
                    *x = xc;
                }
            }
            let Some(z) = null_space(&rows, idx.len()) else { return };
            if z.ncols() == 0 {
                return;
            }
            let grad = self.gradient(x);
            let gi = DVector::from_iterator(idx.len(), idx.iter().map(|&i| grad[i]));
            let h = self.hessian(x, &idx);
            let hz = z.transpose() * &h * &z;
            let gz = z.transpose() * gi;
            let Some(chol) = hz.cholesky() else { return };
            let dz = chol.solve(&(-gz));
            let d = &z * dz;
            if d.amax() <= 1e-16 * scale {
                return;
            }
            let mut xn = x.clone();
            for (j, &i) in idx.iter().enumerate() {
                xn[i] += d[j];
                if xn[i] < 0.0 || (interior && xn[i] <= 0.0) {
                    return;
                }
            }
            if self.poly.max_violation(&xn) > 1e-12 * scale {
                return;
            }
            // near the optimum the decrease drops below rounding of `F`, so a
            // step that shrinks the projected gradient is taken as progress
            let f0 = self.objective(x);
            let f1 = self.objective(&xn);
            let noise = f64::EPSILON * f0.abs().max(f64::MIN_POSITIVE);
            let decreased = f1 <= f0 + 4.0 * noise;
            let flatter = f1 <= f0 + 64.0 * noise && self.pg_norm(&xn, &self.gradient(&xn)) < self.pg_norm(x, &grad);
            if !(decreased || flatter) {
                return;
            }
            *x = xn;
        }
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn history_stable(history: &[f64], tol: f64) -> bool {
    if history.len() <= HISTORY {
        return false;
    }
    let last = history[history.len() - 1];
    let first = history[history.len() - 1 - HISTORY];
    (first - last).abs() <= tol * last.abs().max(1.0)
}

/// The objective has not moved beyond rounding over the history window.
fn history_stalled(history: &[f64]) -> bool {
    if history.len() <= HISTORY {
        return false;
    }
    let last = history[history.len() - 1];
    let first = history[history.len() - 1 - HISTORY];
    first - last <= 4.0 * f64::EPSILON * last.abs()
}

/// Orthonormal basis (columns) of `{d : rows·d = 0}` in `k` dimensions.
fn null_space(rows: &[Vec<f64>], k: usize) -> Option<DMatrix<f64>> {
    let m = DMatrix::from_fn(rows.len(), k, |r, c| rows[r][c]);
    let gram = m.transpose() * &m;
    let eig = SymmetricEigen::new(gram);
    let emax = eig.eigenvalues.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    let tol = emax.max(1.0) * 1e-12;
    let cols: Vec<usize> = (0..k).filter(|&i| eig.eigenvalues[i].abs() <= tol).collect();
    Some(DMatrix::from_fn(k, cols.len(), |r, c| eig.eigenvectors[(r, cols[c])]))
}
