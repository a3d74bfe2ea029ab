//! Exhaustive grid search over the feasible set, used as a reference for
//! the solver on small supports.
//!
//! Works in mass coordinates `m_i = p_i w_i`. The equality system (mass
//! plus moment equalities) is solved for a set of pivot atoms; the remaining
//! "grid" atoms range over multiples of the step.

use std::cmp::Ordering;
use std::sync::Arc;

use rayon::prelude::*;

use super::ConstraintSet;
use crate::divergences::relative_entropy_via_tilts_slice;
use crate::measures::{AlphaParam, Density};
use crate::{Error, Result};

/// Largest number of free atoms the oracle accepts.
pub const ORACLE_MAX_SUPPORT: usize = 4;
/// Smallest grid step accepted.
pub const MIN_GRID_STEP: f64 = 1e-5;

const FEAS_TOL: f64 = 1e-12;
/// Bound on window re-centrings per refinement level.
const MAX_RECENTRES: usize = 1000;

struct Grid {
    n: usize,
    free: Vec<usize>,
    w: Vec<f64>,
    /// Free-atom positions varied on the grid.
    grid_pos: Vec<usize>,
    /// Free-atom positions solved from the equalities.
    pivot_pos: Vec<usize>,
    /// `m_pivot = base - coef · m_grid`.
    base: Vec<f64>,
    coef: Vec<Vec<f64>>,
    /// Inequalities in mass coordinates over the free atoms.
    ineq: Vec<(Vec<f64>, f64)>,
    /// Constraints that the pivot solve cannot absorb (rank deficiency).
    residual_eq: Vec<(Vec<f64>, f64)>,
}

#[derive(Clone)]
struct Candidate {
    value: f64,
    density: Vec<f64>,
    grid: Vec<f64>,
}

impl Grid {
    /// Grid over the face of `e` where the atoms in `extra_zero` vanish too.
    fn new(e: &ConstraintSet, extra_zero: &[usize]) -> Result<Self> {
        let space = e.space();
        let n = space.len();
        let zero = e.zero_support();
        let free: Vec<usize> = (0..n).filter(|i| !zero.contains(i) && !extra_zero.contains(i)).collect();
        if free.len() > ORACLE_MAX_SUPPORT {
            return Err(Error::SupportTooLarge { max: ORACLE_MAX_SUPPORT, got: free.len() });
        }
        if free.is_empty() {
            return Err(Error::Infeasible);
        }
        let k = free.len();
        let mut rows: Vec<Vec<f64>> = vec![vec![1.0; k]];
        let mut rhs = vec![1.0];
        for c in e.equalities() {
            rows.push(free.iter().map(|&i| c.statistic[i]).collect());
            rhs.push(c.target);
        }
        let ineq =
            e.inequalities().iter().map(|c| (free.iter().map(|&i| c.statistic[i]).collect(), c.target)).collect();

        // Gauss-Jordan with full pivoting on [rows | rhs]: the largest
        // remaining entry picks both row and column, which keeps the pivot
        // coefficients small and the grid resolution comparable on every atom
        let mut a = rows.clone();
        let mut b = rhs.clone();
        let mut pivot_pos: Vec<usize> = Vec::new();
        let mut r = 0;
        while r < a.len() {
            let mut best = (r, 0, -1.0);
            for (i, row) in a.iter().enumerate().skip(r) {
                for (c, v) in row.iter().enumerate() {
                    if !pivot_pos.contains(&c) && v.abs() > best.2 {
                        best = (i, c, v.abs());
                    }
                }
            }
            let (row, c, mag) = best;
            if mag <= 1e-12 {
                break;
            }
            a.swap(r, row);
            b.swap(r, row);
            let piv = a[r][c];
            for v in a[r].iter_mut() {
                *v /= piv;
            }
            b[r] /= piv;
            for i in 0..a.len() {
                if i != r && a[i][c] != 0.0 {
                    let f = a[i][c];
                    for j in 0..k {
                        a[i][j] -= f * a[r][j];
                    }
                    b[i] -= f * b[r];
                }
            }
            pivot_pos.push(c);
            r += 1;
        }
        for bi in &b[r..] {
            if bi.abs() > 1e-9 {
                return Err(Error::Infeasible);
            }
        }
        let grid_pos: Vec<usize> = (0..k).filter(|c| !pivot_pos.contains(c)).collect();
        let base = b[..r].to_vec();
        let coef = (0..r).map(|i| grid_pos.iter().map(|&c| a[i][c]).collect()).collect();
        let residual_eq = rows.into_iter().zip(rhs).collect();
        Ok(Self { n, free, w: space.mu_weights().to_vec(), grid_pos, pivot_pos, base, coef, ineq, residual_eq })
    }

    /// Full density for the grid coordinates, or `None` if infeasible.
    fn point(&self, mg: &[f64]) -> Option<Vec<f64>> {
        let k = self.free.len();
        let mut m = vec![0.0; k];
        for (&pos, &v) in self.grid_pos.iter().zip(mg) {
            m[pos] = v;
        }
        for (i, &pos) in self.pivot_pos.iter().enumerate() {
            let v = self.base[i] - self.coef[i].iter().zip(mg).map(|(c, x)| c * x).sum::<f64>();
            if v < -FEAS_TOL {
                return None;
            }
            m[pos] = v.max(0.0);
        }
        for (row, t) in &self.ineq {
            if row.iter().zip(&m).map(|(a, b)| a * b).sum::<f64>() > t + FEAS_TOL {
                return None;
            }
        }
        for (row, t) in &self.residual_eq {
            if (row.iter().zip(&m).map(|(a, b)| a * b).sum::<f64>() - t).abs() > 1e-9 {
                return None;
            }
        }
        let mut p = vec![0.0; self.n];
        for (j, &i) in self.free.iter().enumerate() {
            p[i] = m[j] / self.w[i];
        }
        Some(p)
    }

    /// Enumerates `lo_j + s·h` for `s = 0..=counts_j` in every grid coordinate.
    fn search(&self, r: &[f64], a: AlphaParam, lo: &[f64], h: f64, counts: &[usize], best: &mut Option<Candidate>) {
        let d = self.grid_pos.len();
        let w = &self.w;
        let mut sp = vec![0.0; self.n];
        let mut sq = vec![0.0; self.n];
        let mut idx = vec![0usize; d];
        let mut mg = vec![0.0; d];
        loop {
            let mut sum = 0.0;
            for j in 0..d {
                mg[j] = lo[j] + idx[j] as f64 * h;
                sum += mg[j];
            }
            if sum <= 1.0 + FEAS_TOL && mg.iter().all(|&v| v >= 0.0) {
                if let Some(p) = self.point(&mg) {
                    if let Some(v) = relative_entropy_via_tilts_slice(&p, r, w, a, &mut sp, &mut sq) {
                        let v = if v.is_nan() { f64::INFINITY } else { v };
                        let better = match best {
                            None => true,
                            Some(b) => match v.partial_cmp(&b.value) {
                                Some(Ordering::Less) => true,
                                Some(Ordering::Equal) => lex_less(&p, &b.density),
                                _ => false,
                            },
                        };
                        if better {
                            *best = Some(Candidate { value: v, density: p, grid: mg.clone() });
                        }
                    }
                }
            }
            // odometer increment
            let mut j = 0;
            loop {
                if j == d {
                    return;
                }
                idx[j] += 1;
                if idx[j] <= counts[j] {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
        }
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    a.partial_cmp(b) == Some(Ordering::Less)
}

fn check_inputs(r: &Density, e: &ConstraintSet, grid_step: f64) -> Result<()> {
    if r.space().as_ref() != e.space().as_ref() {
        return Err(Error::SpaceMismatch);
    }
    if !(MIN_GRID_STEP..=1.0).contains(&grid_step) {
        return Err(Error::InvalidArgument(format!("grid step {grid_step} outside [{MIN_GRID_STEP}, 1]")));
    }
    Ok(())
}

/// One grid per face of the feasible set: every proper subset of the free
/// atoms may be forced to zero. Searching each face in its own coordinates
/// reaches minimizers on the boundary exactly, which a single grid whose
/// pivot atoms are solved from the equalities cannot.
fn face_grids(e: &ConstraintSet) -> Result<Vec<Grid>> {
    let full = Grid::new(e, &[])?;
    let free = full.free.clone();
    let mut grids = vec![full];
    for mask in 1..(1usize << free.len()) - 1 {
        let zeros: Vec<usize> = (0..free.len()).filter(|j| mask >> j & 1 == 1).map(|j| free[j]).collect();
        match Grid::new(e, &zeros) {
            Ok(g) => grids.push(g),
            Err(Error::Infeasible) => {}
            Err(other) => return Err(other),
        }
    }
    Ok(grids)
}

/// Best candidate over all faces, merged in face order.
fn best_over_faces<F>(e: &ConstraintSet, r: &Density, per_face: F) -> Result<Density>
where
    F: Fn(&Grid) -> Option<Candidate> + Sync,
{
    let grids = face_grids(e)?;
    let found: Vec<Option<Candidate>> = grids.par_iter().map(&per_face).collect();
    let mut best: Option<Candidate> = None;
    for c in found.into_iter().flatten() {
        let better = match &best {
            None => true,
            Some(b) => match c.value.partial_cmp(&b.value) {
                Some(Ordering::Less) => true,
                Some(Ordering::Equal) => lex_less(&c.density, &b.density),
                _ => false,
            },
        };
        if better {
            best = Some(c);
        }
    }
    let best = best.ok_or(Error::Infeasible)?;
    Density::probability(Arc::clone(r.space()), best.density)
}

/// Feasible grid point with the smallest `I_α(·, r)` on the mass grids of
/// spacing `grid_step` over every face; ties go to the lexicographically
/// smallest density.
pub fn brute_force_project(r: &Density, e: &ConstraintSet, a: AlphaParam, grid_step: f64) -> Result<Density> {
    check_inputs(r, e, grid_step)?;
    let steps = (1.0 / grid_step).floor() as usize;
    best_over_faces(e, r, |grid| {
        let d = grid.grid_pos.len();
        let mut best = None;
        grid.search(r.values(), a, &vec![0.0; d], grid_step, &vec![steps; d], &mut best);
        best
    })
}

/// [`brute_force_project`] at `coarse_step`, then, on every face, searches
/// of a ±2-step window at a tenth of the step until `fine_step` is reached.
/// A window whose best point lies on its edge is re-centred and searched
/// again, so a minimizer that drifts outside the first window is still
/// tracked.
pub fn brute_force_refined(
    r: &Density,
    e: &ConstraintSet,
    a: AlphaParam,
    coarse_step: f64,
    fine_step: f64,
) -> Result<Density> {
    check_inputs(r, e, coarse_step)?;
    check_inputs(r, e, fine_step)?;
    let steps = (1.0 / coarse_step).floor() as usize;
    best_over_faces(e, r, |grid| {
        let d = grid.grid_pos.len();
        let mut best = None;
        grid.search(r.values(), a, &vec![0.0; d], coarse_step, &vec![steps; d], &mut best);
        let mut h = coarse_step;
        while h > fine_step * (1.0 + 1e-9) {
            let h_new = (h / 10.0).max(fine_step);
            let half = 2.0 * h;
            for _ in 0..MAX_RECENTRES {
                let Some(center) = best.as_ref().map(|b: &Candidate| b.grid.clone()) else { break };
                let lo: Vec<f64> = center.iter().map(|c| (c - half).max(0.0)).collect();
                let counts: Vec<usize> =
                    center.iter().zip(&lo).map(|(c, l)| ((c + half - l) / h_new).round() as usize).collect();
                grid.search(r.values(), a, &lo, h_new, &counts, &mut best);
                let Some(b) = best.as_ref() else { break };
                let on_edge = (0..d).any(|j| {
                    let hi = lo[j] + counts[j] as f64 * h_new;
                    (lo[j] > 0.0 && b.grid[j] - lo[j] < 0.5 * h_new) || hi - b.grid[j] < 0.5 * h_new
                });
                let moved = b.grid.iter().zip(&center).any(|(x, c)| (x - c).abs() >= 0.5 * h_new);
                if !on_edge || !moved {
                    break;
                }
            }
            h = h_new;
        }
        best
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergences::divergence;
    use crate::measures::WeightedSpace;
    use crate::projection::LinearConstraint;

    fn space(n: usize) -> Arc<WeightedSpace> {
        Arc::new(WeightedSpace::counting(n).unwrap())
    }

    #[test]
    fn whole_simplex_returns_nearest_grid_point() {
        let s = space(3);
        let r = Density::probability(Arc::clone(&s), vec![0.2, 0.3, 0.5]).unwrap();
        let e = ConstraintSet::simplex(s).unwrap();
        let a = AlphaParam::new(2.0).unwrap();
        let q = brute_force_project(&r, &e, a, 0.1).unwrap();
        assert!(q.total_variation(&r).unwrap() < 1e-12);
        assert!(divergence(&q, &r, a).unwrap() < 1e-12);
    }

    #[test]
    fn singleton() {
        let s = space(3);
        let p0 = Density::probability(Arc::clone(&s), vec![0.0, 0.6, 0.4]).unwrap();
        let e = crate::projection::ConstraintSet::singleton(&p0).unwrap();
        let r = Density::uniform(s);
        let q = brute_force_project(&r, &e, AlphaParam::new(0.5).unwrap(), 0.01).unwrap();
        assert!(q.total_variation(&p0).unwrap() < 1e-12);
    }

    #[test]
    fn support_limit() {
        let s = space(5);
        let e = ConstraintSet::simplex(Arc::clone(&s)).unwrap();
        let r = Density::uniform(s);
        let err = brute_force_project(&r, &e, AlphaParam::new(2.0).unwrap(), 0.1).unwrap_err();
        assert_eq!(err, Error::SupportTooLarge { max: 4, got: 5 });
    }

    #[test]
    fn refinement_tracks_solver() {
        let s = space(3);
        let r = Density::uniform(Arc::clone(&s));
        let e =
            ConstraintSet::new(Arc::clone(&s), vec![LinearConstraint::new(vec![1.0, 2.0, 3.0], 2.4)], vec![], vec![])
                .unwrap();
        let a = AlphaParam::new(2.0).unwrap();
        let q = brute_force_refined(&r, &e, a, 1e-3, 1e-5).unwrap();
        let sol = crate::projection::project(&r, &e, a, &Default::default()).unwrap();
        assert!(q.total_variation(&sol.q).unwrap() < 1e-4);
        assert!((divergence(&q, &r, a).unwrap() - sol.value).abs() < 1e-6);
    }
}
