//! The feasible polytope of a constraint set, in the coordinates of its free
//! atoms: feasibility, vertex enumeration, linear programming and Euclidean
//! projection.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

/// Largest number of free atoms handled with exact rational arithmetic.
pub const EXACT_LIMIT: usize = 6;

/// Slack allowed when checking exact vertices against floating input data.
const VERTEX_TOL: f64 = 1e-12;

/// `{x ≥ 0 : eq_rows·x = eq_rhs, ineq_rows·x ≤ ineq_rhs}` over the free atoms.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Polytope {
    pub free: Vec<usize>,
    pub n_full: usize,
    pub eq_rows: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub ineq_rows: Vec<Vec<f64>>,
    pub ineq_rhs: Vec<f64>,
}

impl Polytope {
    pub fn dim(&self) -> usize {
        self.free.len()
    }

    pub fn embed(&self, x: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.n_full];
        for (&i, &v) in self.free.iter().zip(x) {
            full[i] = v;
        }
        full
    }

    fn n_ineq(&self) -> usize {
        self.ineq_rows.len() + self.dim()
    }

    /// Value of inequality `i` (general rows first, then `-x_j ≤ 0`) at `x`.
    fn ineq_value(&self, i: usize, x: &[f64]) -> f64 {
        if i < self.ineq_rows.len() {
            dot(&self.ineq_rows[i], x)
        } else {
            -x[i - self.ineq_rows.len()]
        }
    }

    fn ineq_rhs_at(&self, i: usize) -> f64 {
        if i < self.ineq_rows.len() {
            self.ineq_rhs[i]
        } else {
            0.0
        }
    }

    fn ineq_row(&self, i: usize) -> Vec<f64> {
        if i < self.ineq_rows.len() {
            self.ineq_rows[i].clone()
        } else {
            let mut r = vec![0.0; self.dim()];
            r[i - self.ineq_rows.len()] = -1.0;
            r
        }
    }

    /// Largest constraint violation at `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (row, &b) in self.eq_rows.iter().zip(&self.eq_rhs) {
            worst = worst.max((dot(row, x) - b).abs());
        }
        for i in 0..self.n_ineq() {
            worst = worst.max(self.ineq_value(i, x) - self.ineq_rhs_at(i));
        }
        worst
    }

    /// Vertices: exact enumeration up to [`EXACT_LIMIT`] free atoms,
    /// otherwise a sweep of LP solutions over coordinate and seeded
    /// pseudo-random objectives.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        if self.dim() <= EXACT_LIMIT {
            self.exact_vertices()
        } else {
            self.lp_vertices()
        }
    }

    fn exact_vertices(&self) -> Vec<Vec<f64>> {
        let k = self.dim();
        if k == 0 {
            return Vec::new();
        }
        let eq: Vec<Vec<BigRational>> = self.eq_rows.iter().map(|r| to_rational_row(r)).collect();
        let eq_b: Vec<BigRational> = self.eq_rhs.iter().map(|&b| to_rational(b)).collect();
        let rank_eq = rational_rank(eq.clone());
        if rank_eq > k {
            return Vec::new();
        }
        let need = k - rank_eq;
        let n_in = self.n_ineq();
        let in_rows: Vec<Vec<BigRational>> = (0..n_in).map(|i| to_rational_row(&self.ineq_row(i))).collect();
        let in_rhs: Vec<BigRational> = (0..n_in).map(|i| to_rational(self.ineq_rhs_at(i))).collect();
        let tol = to_rational(VERTEX_TOL);

        let mut out: Vec<Vec<f64>> = Vec::new();
        for combo in Combinations::new(n_in, need) {
            let mut rows = eq.clone();
            let mut rhs = eq_b.clone();
            for &i in &combo {
                rows.push(in_rows[i].clone());
                rhs.push(in_rhs[i].clone());
            }
            let Some(x) = solve_unique(rows, rhs, k) else { continue };
            let feasible = (0..n_in).all(|i| {
                let lhs: BigRational = in_rows[i].iter().zip(&x).map(|(a, b)| a * b).sum();
                lhs - &in_rhs[i] <= tol
            });
            if !feasible {
                continue;
            }
            let xf: Vec<f64> = x.iter().map(|v| v.to_f64().unwrap_or(0.0).max(0.0)).collect();
            if !out.iter().any(|v| approx_same(v, &xf)) {
                out.push(xf);
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        out
    }

    fn lp_vertices(&self) -> Vec<Vec<f64>> {
        let k = self.dim();
        let mut objectives: Vec<Vec<f64>> = Vec::new();
        for i in 0..k {
            for s in [1.0, -1.0] {
                let mut c = vec![0.0; k];
                c[i] = s;
                objectives.push(c);
            }
        }
        // deterministic pseudo-random directions
        let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
        for _ in 0..2 * k {
            let c = (0..k)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
                })
                .collect();
            objectives.push(c);
        }
        let mut out: Vec<Vec<f64>> = Vec::new();
        for c in objectives {
            if let LpOutcome::Optimal(x, _) = self.minimize(&c) {
                if !out.iter().any(|v| approx_same(v, &x)) {
                    out.push(x);
                }
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        out
    }

    pub fn minimize(&self, c: &[f64]) -> LpOutcome {
        lp_minimize(c, &self.eq_rows, &self.eq_rhs, &self.ineq_rows, &self.ineq_rhs)
    }

    /// Euclidean projection of `y` onto the polytope by a primal active-set
    /// method started from the feasible point `x0`.
    pub fn project(&self, y: &[f64], x0: &[f64]) -> Vec<f64> {
        let k = self.dim();
        let n_in = self.n_ineq();
        let mut x = x0.to_vec();
        let scale = 1.0 + x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let act_tol = 1e-13 * scale;

        let mut working: Vec<usize> = Vec::new();
        for i in 0..n_in {
            if self.ineq_rhs_at(i) - self.ineq_value(i, &x) <= act_tol {
                let mut trial = working.clone();
                trial.push(i);
                if self.independent(&trial) {
                    working = trial;
                }
            }
        }

        for _ in 0..(50 + 10 * (k + n_in)) {
            let m = self.working_matrix(&working);
            let v: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            let (basis, svd_parts) = row_space(&m, k);
            let mut p = v.clone();
            for b in &basis {
                let c = dot(b, &v);
                for (pi, bi) in p.iter_mut().zip(b) {
                    *pi -= c * bi;
                }
            }
            let pnorm = p.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
            if pnorm <= 1e-15 * scale {
                // multipliers of the working set: M^T λ = y - x
                let Some((u, sigma, vt)) = svd_parts else { break };
                let lambda = pinv_transpose_apply(&u, &sigma, &vt, &v);
                let offset = self.eq_rows.len();
                let mut most_negative: Option<(usize, f64)> = None;
                for (j, &wi) in working.iter().enumerate() {
                    let mu = lambda[offset + j];
                    if mu < -1e-12 && most_negative.is_none_or(|(_, m)| mu < m) {
                        most_negative = Some((j, mu));
                    }
                    let _ = wi;
                }
                match most_negative {
                    Some((j, _)) => {
                        working.remove(j);
                    }
                    None => break,
                }
                continue;
            }
            let mut t = 1.0;
            let mut blocking: Option<usize> = None;
            for i in 0..n_in {
                if working.contains(&i) {
                    continue;
                }
                let gp = self.ineq_dot(i, &p);
                if gp > 1e-15 * scale {
                    let slack = (self.ineq_rhs_at(i) - self.ineq_value(i, &x)).max(0.0);
                    let ti = slack / gp;
                    if ti < t {
                        t = ti;
                        blocking = Some(i);
                    }
                }
            }
            for (xi, pi) in x.iter_mut().zip(&p) {
                *xi += t * pi;
            }
            for &i in &working {
                if i >= self.ineq_rows.len() {
                    x[i - self.ineq_rows.len()] = 0.0;
                }
            }
            if let Some(i) = blocking {
                if i >= self.ineq_rows.len() {
                    x[i - self.ineq_rows.len()] = 0.0;
                }
                working.push(i);
            } else {
                // full step reached the working-set minimizer
                continue;
            }
        }
        for xi in x.iter_mut() {
            if *xi < 0.0 {
                *xi = 0.0;
            }
        }
        x
    }

    fn ineq_dot(&self, i: usize, p: &[f64]) -> f64 {
        if i < self.ineq_rows.len() {
            dot(&self.ineq_rows[i], p)
        } else {
            -p[i - self.ineq_rows.len()]
        }
    }

    fn working_matrix(&self, working: &[usize]) -> DMatrix<f64> {
        let k = self.dim();
        let rows = self.eq_rows.len() + working.len();
        let mut m = DMatrix::zeros(rows, k);
        for (r, row) in self.eq_rows.iter().enumerate() {
            for c in 0..k {
                m[(r, c)] = row[c];
            }
        }
        for (j, &i) in working.iter().enumerate() {
            let row = self.ineq_row(i);
            for c in 0..k {
                m[(self.eq_rows.len() + j, c)] = row[c];
            }
        }
        m
    }

    fn row_rank(&self, working: &[usize]) -> usize {
        let m = self.working_matrix(working);
        row_space(&m, self.dim()).0.len()
    }

    fn independent(&self, working: &[usize]) -> bool {
        let with = self.row_rank(working);
        let without = self.row_rank(&working[..working.len() - 1]);
        with > without
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn approx_same(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs())))
}

type SvdParts = (DMatrix<f64>, DVector<f64>, DMatrix<f64>);

/// Orthonormal basis of the row space of `m` (as vectors of length `k`),
/// plus the SVD factors restricted to nonzero singular values.
fn row_space(m: &DMatrix<f64>, k: usize) -> (Vec<Vec<f64>>, Option<SvdParts>) {
    if m.nrows() == 0 {
        return (Vec::new(), None);
    }
    let svd = m.clone().svd(true, true);
    let (u, vt) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
    let smax = svd.singular_values.iter().fold(0.0_f64, |a, b| a.max(*b));
    let tol = smax * 1e-11 * (m.nrows().max(k) as f64);
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > tol).collect();
    let basis: Vec<Vec<f64>> = keep.iter().map(|&i| (0..k).map(|c| vt[(i, c)]).collect()).collect();
    let u_r = DMatrix::from_fn(u.nrows(), keep.len(), |r, c| u[(r, keep[c])]);
    let s_r = DVector::from_fn(keep.len(), |i, _| svd.singular_values[keep[i]]);
    let vt_r = DMatrix::from_fn(keep.len(), k, |r, c| vt[(keep[r], c)]);
    (basis, Some((u_r, s_r, vt_r)))
}

/// `pinv(M^T) v = U Σ^{-1} V^T v` for `M = U Σ V^T`.
fn pinv_transpose_apply(u: &DMatrix<f64>, sigma: &DVector<f64>, vt: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    let vv = DVector::from_column_slice(v);
    let mut z = vt * vv;
    for i in 0..z.len() {
        z[i] /= sigma[i];
    }
    (u * z).iter().copied().collect()
}

// ---------------------------------------------------------------------------
// exact rational arithmetic

fn to_rational(x: f64) -> BigRational {
    BigRational::from_f64(x).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
}

fn to_rational_row(r: &[f64]) -> Vec<BigRational> {
    r.iter().map(|&x| to_rational(x)).collect()
}

fn rational_rank(mut rows: Vec<Vec<BigRational>>) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let cols = rows[0].len();
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&r| !rows[r][c].is_zero()) else { continue };
        rows.swap(rank, p);
        for r in 0..rows.len() {
            if r != rank && !rows[r][c].is_zero() {
                let f = &rows[r][c] / &rows[rank][c];
                for cc in c..cols {
                    let sub = &f * &rows[rank][cc];
                    rows[r][cc] -= sub;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Unique solution of `rows·x = rhs` (`k` unknowns), if consistent and of rank `k`.
fn solve_unique(mut rows: Vec<Vec<BigRational>>, mut rhs: Vec<BigRational>, k: usize) -> Option<Vec<BigRational>> {
    let n = rows.len();
    let mut rank = 0;
    let mut pivots = Vec::with_capacity(k);
    for c in 0..k {
        let Some(p) = (rank..n).find(|&r| !rows[r][c].is_zero()) else { continue };
        rows.swap(rank, p);
        rhs.swap(rank, p);
        let piv = rows[rank][c].clone();
        for cc in c..k {
            rows[rank][cc] = &rows[rank][cc] / &piv;
        }
        rhs[rank] = &rhs[rank] / &piv;
        for r in 0..n {
            if r != rank && !rows[r][c].is_zero() {
                let f = rows[r][c].clone();
                for cc in c..k {
                    let sub = &f * &rows[rank][cc];
                    rows[r][cc] -= sub;
                }
                let sub = &f * &rhs[rank];
                rhs[r] -= sub;
            }
        }
        pivots.push(c);
        rank += 1;
    }
    if rank < k {
        return None;
    }
    if rhs[rank..].iter().any(|v| !v.is_zero() && v.abs() > to_rational(1e-300)) {
        return None;
    }
    Some(rhs[..k].to_vec())
}

struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Self { n, idx: (0..k).collect(), done: k > n }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

// ---------------------------------------------------------------------------
// dense two-phase simplex

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal(Vec<f64>, f64),
    Infeasible,
    Unbounded,
}

const LP_EPS: f64 = 1e-10;

/// `min c·x` subject to `eq·x = eq_b`, `ineq·x ≤ in_b`, `x ≥ 0`, by a
/// two-phase tableau simplex with Bland's rule.
pub(crate) fn lp_minimize(c: &[f64], eq: &[Vec<f64>], eq_b: &[f64], ineq: &[Vec<f64>], in_b: &[f64]) -> LpOutcome {
    let k = c.len();
    let m_e = eq.len();
    let m_i = ineq.len();
    let m = m_e + m_i;
    // columns: x (k) | slacks (m_i) | artificials (m) | rhs
    let n_cols = k + m_i + m;
    let rhs_col = n_cols;
    let mut t = vec![vec![0.0; n_cols + 1]; m + 1];
    for r in 0..m {
        let (row, b) = if r < m_e { (&eq[r], eq_b[r]) } else { (&ineq[r - m_e], in_b[r - m_e]) };
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        for j in 0..k {
            t[r][j] = sign * row[j];
        }
        if r >= m_e {
            t[r][k + (r - m_e)] = sign;
        }
        t[r][k + m_i + r] = 1.0;
        t[r][rhs_col] = sign * b;
    }
    let mut basis: Vec<usize> = (0..m).map(|r| k + m_i + r).collect();

    // phase 1 objective: minimize the sum of artificials
    let obj = m;
    for j in 0..=n_cols {
        t[obj][j] = 0.0;
    }
    for r in 0..m {
        for j in 0..=n_cols {
            if j < k + m_i || j == rhs_col {
                t[obj][j] -= t[r][j];
            }
        }
    }
    if !run_simplex(&mut t, &mut basis, k + m_i + m, rhs_col) {
        return LpOutcome::Unbounded;
    }
    let scale = 1.0 + eq_b.iter().chain(in_b).fold(0.0_f64, |a, b| a.max(b.abs()));
    if -t[obj][rhs_col] > 1e-9 * scale {
        return LpOutcome::Infeasible;
    }
    // drive artificials out of the basis
    for r in 0..m {
        if basis[r] >= k + m_i {
            if let Some(j) = (0..k + m_i).find(|&j| t[r][j].abs() > LP_EPS) {
                pivot(&mut t, &mut basis, r, j, rhs_col);
            }
        }
    }
    // phase 2
    for j in 0..=n_cols {
        t[obj][j] = 0.0;
    }
    t[obj][..k].copy_from_slice(c);
    for r in 0..m {
        let b = basis[r];
        if b < k && t[obj][b] != 0.0 {
            let f = t[obj][b];
            for j in 0..=n_cols {
                t[obj][j] -= f * t[r][j];
            }
        }
    }
    // artificials may not re-enter
    if !run_simplex(&mut t, &mut basis, k + m_i, rhs_col) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![0.0; k];
    for r in 0..m {
        if basis[r] < k {
            x[basis[r]] = t[r][rhs_col].max(0.0);
        }
    }
    let value = dot(c, &x);
    LpOutcome::Optimal(x, value)
}

fn run_simplex(t: &mut [Vec<f64>], basis: &mut [usize], allowed: usize, rhs_col: usize) -> bool {
    let m = basis.len();
    let obj = m;
    for _ in 0..50_000 {
        let Some(enter) = (0..allowed).find(|&j| t[obj][j] < -LP_EPS) else { return true };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            if t[r][enter] > LP_EPS {
                let ratio = t[r][rhs_col] / t[r][enter];
                match leave {
                    None => leave = Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - 1e-14 || (ratio <= lratio + 1e-14 && basis[r] < basis[lr]) {
                            leave = Some((r, ratio));
                        }
                    }
                }
            }
        }
        let Some((r, _)) = leave else { return false };
        pivot(t, basis, r, enter, rhs_col);
    }
    true
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, c: usize, rhs_col: usize) {
    let piv = t[r][c];
    for j in 0..=rhs_col {
        t[r][j] /= piv;
    }
    let pivot_row = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != r && row[c] != 0.0 {
            let f = row[c];
            for j in 0..=rhs_col {
                row[j] -= f * pivot_row[j];
            }
        }
    }
    basis[r] = c;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simplex3() -> Polytope {
        Polytope {
            free: vec![0, 1, 2],
            n_full: 3,
            eq_rows: vec![vec![1.0, 1.0, 1.0]],
            eq_rhs: vec![1.0],
            ineq_rows: vec![],
            ineq_rhs: vec![],
        }
    }

    #[test]
    fn combinations_enumerate() {
        let all: Vec<_> = Combinations::new(4, 2).collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], vec![0, 1]);
        assert_eq!(all[5], vec![2, 3]);
        assert_eq!(Combinations::new(3, 0).count(), 1);
        assert_eq!(Combinations::new(2, 3).count(), 0);
    }

    #[test]
    fn simplex_vertices() {
        let v = simplex3().vertices();
        assert_eq!(v, vec![vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]]);
    }

    #[test]
    fn moment_segment_vertices() {
        let mut p = simplex3();
        p.eq_rows.push(vec![1.0, 2.0, 3.0]);
        p.eq_rhs.push(2.4);
        let v = p.vertices();
        assert_eq!(v.len(), 2);
        // (0, 0.6, 0.4) and (0.3, 0, 0.7)
        assert!((v[0][1] - 0.6).abs() < 1e-15 && (v[0][2] - 0.4).abs() < 1e-15);
        assert!((v[1][0] - 0.3).abs() < 1e-15 && (v[1][2] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn lp_basic() {
        let p = simplex3();
        match p.minimize(&[3.0, 1.0, 2.0]) {
            LpOutcome::Optimal(x, v) => {
                assert_eq!(x, vec![0.0, 1.0, 0.0]);
                assert_eq!(v, 1.0);
            }
            other => panic!("{other:?}"),
        }
        let mut q = simplex3();
        q.ineq_rows.push(vec![1.0, 1.0, 1.0]);
        q.ineq_rhs.push(0.5);
        assert_eq!(q.minimize(&[0.0; 3]), LpOutcome::Infeasible);
        assert!(q.vertices().is_empty());
    }

    #[test]
    fn lp_vertices_match_exact() {
        let mut p = Polytope {
            free: (0..8).collect(),
            n_full: 8,
            eq_rows: vec![vec![1.0; 8]],
            eq_rhs: vec![1.0],
            ineq_rows: vec![],
            ineq_rhs: vec![],
        };
        let v = p.vertices();
        assert_eq!(v.len(), 8);
        p.ineq_rows.push((0..8).map(|i| i as f64).collect());
        p.ineq_rhs.push(3.5);
        for x in p.vertices() {
            assert!(p.max_violation(&x) < 1e-9);
        }
    }

    #[test]
    fn projection_onto_simplex() {
        let p = simplex3();
        let x0 = [1.0 / 3.0; 3];
        let x = p.project(&[0.5, 0.5, 0.5], &x0);
        for v in &x {
            assert!((v - 1.0 / 3.0).abs() < 1e-14);
        }
        let x = p.project(&[2.0, 0.0, -1.0], &x0);
        assert!((x[0] - 1.0).abs() < 1e-14 && x[1].abs() < 1e-14 && x[2] == 0.0, "{x:?}");
        let x = p.project(&[0.6, 0.5, -1.0], &x0);
        assert!((x[0] - 0.55).abs() < 1e-14 && (x[1] - 0.45).abs() < 1e-14 && x[2] == 0.0, "{x:?}");
    }

    #[test]
    fn projection_with_moment_constraint() {
        let mut p = simplex3();
        p.eq_rows.push(vec![1.0, 2.0, 3.0]);
        p.eq_rhs.push(2.4);
        let x0 = [0.15, 0.3, 0.55];
        assert!(p.max_violation(&x0) < 1e-15);
        let x = p.project(&[1.0, 0.0, 0.0], &x0);
        // the segment is (0.3,0,0.7) + s(-1,2,-1); the closest point to e_1 is at s=0
        assert!((x[0] - 0.3).abs() < 1e-12 && x[1].abs() < 1e-12 && (x[2] - 0.7).abs() < 1e-12, "{x:?}");
        assert!(p.max_violation(&x) < 1e-12);
    }
}
