//! Geometry of `I_α`: the normalized combination behind the parallelogram
//! inequality, Pythagorean reports, and derivatives along segments.

use serde::Serialize;

use crate::divergences::{divergence, f_divergence};
use crate::measures::{alpha_norm, tilt, AlphaParam, Density};
use crate::numeric::pairwise_sum_by;
use crate::{Error, Result};

fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("lambda {lambda} outside [0, 1]")))
    }
}

/// `λ p + (1-λ) q`.
pub fn mixture(p: &Density, q: &Density, lambda: f64) -> Result<Density> {
    p.check_same_space(q)?;
    check_lambda(lambda)?;
    let values = p.values().iter().zip(q.values()).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
    Ok(Density::from_parts_unchecked(p.space().clone(), values))
}

/// A point `P_λ = λP + (1-λ)Q` on the segment from `Q` (λ=0) to `P` (λ=1).
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentPoint {
    pub p: Density,
    pub q: Density,
    pub lambda: f64,
    pub p_lambda: Density,
}

impl SegmentPoint {
    pub fn new(p: Density, q: Density, lambda: f64) -> Result<Self> {
        let p_lambda = mixture(&p, &q, lambda)?;
        Ok(Self { p, q, lambda, p_lambda })
    }
}

/// `R_{1,2} = [λ p1/‖p1‖ + (1-λ) p2/‖p2‖] / [λ/‖p1‖ + (1-λ)/‖p2‖]`.
pub fn r_combine(p1: &Density, p2: &Density, lambda: f64, a: AlphaParam) -> Result<Density> {
    p1.check_same_space(p2)?;
    check_lambda(lambda)?;
    let (c1, c2) = (lambda / alpha_norm(p1, a)?, (1.0 - lambda) / alpha_norm(p2, a)?);
    let denom = c1 + c2;
    let values = p1.values().iter().zip(p2.values()).map(|(x, y)| (c1 * x + c2 * y) / denom).collect();
    Ok(Density::from_parts_unchecked(p1.space().clone(), values))
}

/// `(λ/‖p1‖ + (1-λ)/‖p2‖) ‖r_{1,2}‖`: at least 1 for α < 1, at most 1 for α > 1.
pub fn minkowski_scale(p1: &Density, p2: &Density, lambda: f64, a: AlphaParam) -> Result<f64> {
    let r12 = r_combine(p1, p2, lambda, a)?;
    let (n1, n2) = (alpha_norm(p1, a)?, alpha_norm(p2, a)?);
    Ok((lambda / n1 + (1.0 - lambda) / n2) * alpha_norm(&r12, a)?)
}

/// The pieces of the parallelogram-type inequality for one `(p1, p2, r, λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParallelogramTerms {
    /// λ-weighted bracket combination (left-hand side).
    pub lhs: f64,
    /// `I_f(R'_{1,2}, R') - f(1)` (right-hand side).
    pub bracket: f64,
    /// [`minkowski_scale`] of `(p1, p2, λ)`.
    pub scale: f64,
}

impl ParallelogramTerms {
    /// `lhs - bracket`; nonnegative for α < 1, nonpositive for α > 1.
    pub fn gap(&self) -> f64 {
        self.lhs - self.bracket
    }

    /// `lhs - scale · bracket`, zero up to rounding.
    pub fn identity_defect(&self) -> f64 {
        self.lhs - self.scale * self.bracket
    }
}

pub fn parallelogram_terms(
    p1: &Density,
    p2: &Density,
    r: &Density,
    lambda: f64,
    a: AlphaParam,
) -> Result<ParallelogramTerms> {
    p1.check_same_space(r)?;
    let r12 = r_combine(p1, p2, lambda, a)?;
    let (t1, t2, tr, t12) = (tilt(p1, a)?, tilt(p2, a)?, tilt(r, a)?, tilt(&r12, a)?);
    let f1 = a.sign_rho();
    let terms = [
        f_divergence(&t1, &tr, a)?,
        f_divergence(&t2, &tr, a)?,
        f_divergence(&t1, &t12, a)?,
        f_divergence(&t2, &t12, a)?,
        f_divergence(&t12, &tr, a)?,
    ];
    if terms.iter().any(|t| !t.is_finite()) {
        return Err(Error::InfiniteTerm);
    }
    let lhs = lambda * ((terms[0] - f1) - (terms[2] - f1)) + (1.0 - lambda) * ((terms[1] - f1) - (terms[3] - f1));
    let bracket = terms[4] - f1;
    let scale = minkowski_scale(p1, p2, lambda, a)?;
    Ok(ParallelogramTerms { lhs, bracket, scale })
}

/// Left-hand side minus right-hand side of the parallelogram-type inequality.
pub fn parallelogram_gap(p1: &Density, p2: &Density, r: &Density, lambda: f64, a: AlphaParam) -> Result<f64> {
    Ok(parallelogram_terms(p1, p2, r, lambda, a)?.gap())
}

/// The three divergences of a Pythagorean triple and
/// `residual = I(P,R) - I(P,Q) - I(Q,R)` in extended arithmetic:
/// `+∞` when `I(P,R) = ∞`, `-∞` when only a subtracted term is infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PythagoreanReport {
    pub i_pr: f64,
    pub i_pq: f64,
    pub i_qr: f64,
    pub residual: f64,
}

pub fn pythagorean_report(p: &Density, q: &Density, r: &Density, a: AlphaParam) -> Result<PythagoreanReport> {
    let i_pr = divergence(p, r, a)?;
    let i_pq = divergence(p, q, a)?;
    let i_qr = divergence(q, r, a)?;
    let residual = if i_pr.is_infinite() {
        f64::INFINITY
    } else if i_pq.is_infinite() || i_qr.is_infinite() {
        f64::NEG_INFINITY
    } else {
        i_pr - i_pq - i_qr
    };
    Ok(PythagoreanReport { i_pr, i_pq, i_qr, residual })
}

/// Default λ grid for segment checks: dense and log-spaced towards 0.
pub fn default_lambda_grid() -> Vec<f64> {
    let mut grid = vec![0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.05];
    grid.extend((1..=10).map(|k| k as f64 / 10.0));
    grid
}

/// Whether `min_λ I_α(P_λ, R) ≥ I_α(Q, R) - 1e-10` over `lambda_grid`.
pub fn segment_min_check(p: &Density, q: &Density, r: &Density, a: AlphaParam, lambda_grid: &[f64]) -> Result<bool> {
    let i_qr = divergence(q, r, a)?;
    let mut min = f64::INFINITY;
    for &lambda in lambda_grid {
        let pl = mixture(p, q, lambda)?;
        min = min.min(divergence(&pl, r, a)?);
    }
    Ok(min >= i_qr - 1e-10)
}

/// `Σ x_i y_i^e w_i` with `0·(anything) = 0` and `0^e` equal to 0 (e > 0) or ∞ (e < 0).
fn power_integral(x: &[f64], y: &[f64], e: f64, w: &[f64]) -> f64 {
    pairwise_sum_by(x.len(), |i| {
        if x[i] == 0.0 {
            0.0
        } else if y[i] == 0.0 {
            if e > 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            x[i] * y[i].powf(e) * w[i]
        }
    })
}

/// Right derivative at λ = 0 of `λ ↦ I_f(P'_λ, R')`, `P_λ = λP + (1-λ)Q`,
/// from the quotient `s(λ)/t(λ)` with `s(λ) = sgn(ρ)∫p_λ (r')^{-ρ} dμ` and
/// `t(λ) = ‖p_λ‖`.
pub fn segment_divergence_derivative(p: &Density, q: &Density, r: &Density, a: AlphaParam) -> Result<f64> {
    p.check_same_space(q)?;
    p.check_same_space(r)?;
    let w = p.weights();
    let e = -a.rho();
    let rt = tilt(r, a)?;
    let qt = tilt(q, a)?;
    let int_p_r = power_integral(p.values(), rt.values(), e, w);
    let int_q_r = power_integral(q.values(), rt.values(), e, w);
    let int_p_q = power_integral(p.values(), qt.values(), e, w);
    if !(int_p_r.is_finite() && int_q_r.is_finite() && int_p_q.is_finite()) {
        return Err(Error::InfiniteIntegral);
    }
    let sg = a.sign_rho();
    let t0 = alpha_norm(q, a)?;
    let s0 = sg * int_q_r;
    let s_dot = sg * (int_p_r - int_q_r);
    let t_dot = int_p_q - t0;
    Ok((t0 * s_dot - s0 * t_dot) / (t0 * t0))
}

/// Interior minimizer of `μ ↦ I_α(μP + (1-μ)S, R)` on `(0, 1)`, found by
/// bisection on the sign of the segment derivative. `None` when the minimum
/// sits at an endpoint.
pub fn segment_minimizer(p: &Density, s: &Density, r: &Density, a: AlphaParam) -> Result<Option<f64>> {
    let slope_at = |mu: f64| -> Result<f64> {
        let q = mixture(p, s, mu)?;
        segment_divergence_derivative(p, &q, r, a)
    };
    if slope_at(0.0)? >= 0.0 {
        return Ok(None);
    }
    // towards S from P, sign-flipped: slope along P - S at μ = 1
    if -segment_divergence_derivative(s, p, r, a)? <= 0.0 {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope_at(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::WeightedSpace;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn space(n: usize) -> Arc<WeightedSpace> {
        Arc::new(WeightedSpace::counting(n).unwrap())
    }

    fn prob_on(s: &Arc<WeightedSpace>, v: &[f64]) -> Density {
        Density::probability(s.clone(), v.to_vec()).unwrap()
    }

    fn alpha(a: f64) -> AlphaParam {
        AlphaParam::new(a).unwrap()
    }

    #[test]
    fn r_combine_examples() {
        let s = space(3);
        let p = prob_on(&s, &[0.2, 0.3, 0.5]);
        for lambda in [0.0, 0.3, 1.0] {
            let r = r_combine(&p, &p, lambda, alpha(2.0)).unwrap();
            for (x, y) in r.values().iter().zip(p.values()) {
                assert_relative_eq!(x, y, max_relative = 1e-15);
            }
        }
        let p2 = prob_on(&s, &[0.6, 0.3, 0.1]);
        assert_eq!(r_combine(&p, &p2, 1.0, alpha(0.5)).unwrap().values(), p.values());
        let s2 = space(2);
        let r = r_combine(&prob_on(&s2, &[0.9, 0.1]), &prob_on(&s2, &[0.1, 0.9]), 0.5, alpha(2.0)).unwrap();
        assert_relative_eq!(r.values()[0], 0.5, max_relative = 1e-15);
        assert_relative_eq!(r.values()[1], 0.5, max_relative = 1e-15);
        assert!(matches!(r_combine(&p, &p2, 1.5, alpha(2.0)), Err(Error::InvalidArgument(_))));
        assert_eq!(r_combine(&p, &prob_on(&s2, &[0.5, 0.5]), 0.5, alpha(2.0)), Err(Error::SpaceMismatch));
    }

    #[test]
    fn minkowski_scale_equal_inputs() {
        let s = space(3);
        let p = prob_on(&s, &[0.2, 0.3, 0.5]);
        for a in [0.5, 2.0] {
            assert_relative_eq!(minkowski_scale(&p, &p, 0.4, alpha(a)).unwrap(), 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn parallelogram_degenerate_and_errors() {
        let s = space(3);
        let p = prob_on(&s, &[0.2, 0.3, 0.5]);
        for a in [0.5, 2.0] {
            assert!(parallelogram_gap(&p, &p, &p, 0.3, alpha(a)).unwrap().abs() < 1e-15);
        }
        let r = prob_on(&s, &[0.0, 0.5, 0.5]);
        assert_eq!(parallelogram_gap(&p, &p, &r, 0.3, alpha(0.5)), Err(Error::InfiniteTerm));
    }

    #[test]
    fn parallelogram_signs_on_fixed_triple() {
        let s = space(4);
        let p1 = prob_on(&s, &[0.1, 0.2, 0.3, 0.4]);
        let p2 = prob_on(&s, &[0.4, 0.4, 0.1, 0.1]);
        let r = prob_on(&s, &[0.25, 0.15, 0.35, 0.25]);
        let t = parallelogram_terms(&p1, &p2, &r, 0.35, alpha(0.5)).unwrap();
        assert!(t.gap() >= 0.0 && t.scale >= 1.0 && t.identity_defect().abs() < 1e-13);
        let t = parallelogram_terms(&p1, &p2, &r, 0.35, alpha(2.0)).unwrap();
        assert!(t.gap() <= 0.0 && t.scale <= 1.0 && t.identity_defect().abs() < 1e-13);
    }

    #[test]
    fn pythagorean_trivial_cases() {
        let s = space(3);
        let p = prob_on(&s, &[0.2, 0.3, 0.5]);
        let r = prob_on(&s, &[0.5, 0.3, 0.2]);
        for a in [0.5, 2.0] {
            let rep = pythagorean_report(&p, &p, &r, alpha(a)).unwrap();
            assert!(rep.residual.abs() < 1e-15);
            let rep = pythagorean_report(&p, &r, &r, alpha(a)).unwrap();
            assert!(rep.residual.abs() < 1e-15);
        }
        let z = prob_on(&s, &[0.0, 0.5, 0.5]);
        let rep = pythagorean_report(&p, &r, &z, alpha(0.5)).unwrap();
        assert_eq!(rep.residual, f64::INFINITY);
        let rep = pythagorean_report(&z, &p, &prob_on(&s, &[0.0, 1.0, 0.0]), alpha(0.5)).unwrap();
        assert_eq!(rep.i_pr, f64::INFINITY);
    }

    #[test]
    fn segment_check_trivial_when_q_is_r() {
        let s = space(3);
        let p = prob_on(&s, &[0.2, 0.3, 0.5]);
        let r = prob_on(&s, &[0.5, 0.3, 0.2]);
        for a in [0.5, 2.0] {
            assert!(segment_min_check(&p, &r, &r, alpha(a), &default_lambda_grid()).unwrap());
        }
    }

    #[test]
    fn derivative_zero_when_p_equals_q() {
        let s = space(3);
        let p = prob_on(&s, &[0.2, 0.3, 0.5]);
        let r = prob_on(&s, &[0.5, 0.3, 0.2]);
        for a in [0.5, 2.0] {
            assert!(segment_divergence_derivative(&p, &p, &r, alpha(a)).unwrap().abs() < 1e-15);
        }
        let z = prob_on(&s, &[0.0, 0.5, 0.5]);
        assert_eq!(segment_divergence_derivative(&p, &r, &z, alpha(0.5)), Err(Error::InfiniteIntegral));
    }

    #[test]
    fn segment_minimizer_gives_pythagorean_equalities() {
        let s = space(3);
        let p = prob_on(&s, &[0.7, 0.2, 0.1]);
        let t = prob_on(&s, &[0.1, 0.2, 0.7]);
        let r = prob_on(&s, &[0.2, 0.6, 0.2]);
        for a in [0.5, 2.0] {
            let mu = segment_minimizer(&p, &t, &r, alpha(a)).unwrap().expect("interior");
            let q = mixture(&p, &t, mu).unwrap();
            let rp = pythagorean_report(&p, &q, &r, alpha(a)).unwrap();
            let rs = pythagorean_report(&t, &q, &r, alpha(a)).unwrap();
            assert!(rp.residual.abs() < 1e-8, "{rp:?}");
            assert!(rs.residual.abs() < 1e-8, "{rs:?}");
        }
    }
}
