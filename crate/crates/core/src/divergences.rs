//! The α-relative entropy and the f-divergence it is built from.
//!
//! Two evaluation routes are provided and kept independent:
//!
//! - via tilts: `I_α = (1/ρ) log[sgn(ρ) I_f(P', Q')]`
//! - direct: `I_α = (1/ρ) log ∫ (p/‖p‖) (q/‖q‖)^{α-1} dμ`
//!
//! Both evaluate `log v` as `ln_1p(v - 1)` with `v - 1` accumulated as a sum
//! of differences, so small divergences keep their relative accuracy.

use serde::{Deserialize, Serialize};

use crate::measures::{alpha_norm_slice, kl_divergence, renyi_entropy, tilt_slice, AlphaParam, Density};
use crate::numeric::pairwise_sum_by;
use crate::{Error, Result};

/// Which formula produced a [`DivergenceValue`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergencePath {
    ViaFDivergence,
    ViaDirectFormula,
}

/// `I_α(P,Q)` in nats; `+∞` is represented explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceValue {
    pub value: f64,
    pub finite: bool,
    pub path: DivergencePath,
}

impl DivergenceValue {
    fn new(value: f64, path: DivergencePath) -> Self {
        let value = if value.is_nan() { f64::INFINITY } else { value.max(0.0) };
        Self { value, finite: value.is_finite(), path }
    }
}

/// `sgn(ρ) Σ p_i^{1+ρ} q_i^{-ρ} w_i` on raw slices.
pub(crate) fn f_divergence_slice(p: &[f64], q: &[f64], w: &[f64], a: AlphaParam) -> f64 {
    let rho = a.rho();
    let s = pairwise_sum_by(p.len(), |i| {
        let (pi, qi) = (p[i], q[i]);
        if pi == 0.0 {
            0.0
        } else if qi == 0.0 {
            if rho > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            pi * (pi / qi).powf(rho) * w[i]
        }
    });
    a.sign_rho() * s
}

/// `v - 1` for the tilt route, where `v = Σ p'(p'/q')^ρ w`.
fn tilted_excess(pt: &[f64], qt: &[f64], w: &[f64], rho: f64) -> f64 {
    pairwise_sum_by(pt.len(), |i| {
        let (pi, qi) = (pt[i], qt[i]);
        if pi == 0.0 {
            0.0
        } else if qi == 0.0 {
            if rho > 0.0 {
                f64::INFINITY
            } else {
                -pi * w[i]
            }
        } else {
            pi * (rho * (pi / qi).ln()).exp_m1() * w[i]
        }
    })
}

/// No atom charged by both densities.
fn disjoint(p: &[f64], q: &[f64]) -> bool {
    p.iter().zip(q).all(|(a, b)| *a == 0.0 || *b == 0.0)
}

fn log_ratio_over_rho(excess: f64, rho: f64) -> f64 {
    if excess == f64::INFINITY {
        return f64::INFINITY;
    }
    // excess <= -1 means the integral vanished; only reachable for ρ < 0
    let lg = if excess <= -1.0 { f64::NEG_INFINITY } else { excess.ln_1p() };
    lg / rho
}

/// `I_α` through the tilted measures, on raw slices with caller scratch.
pub(crate) fn relative_entropy_via_tilts_slice(
    p: &[f64],
    q: &[f64],
    w: &[f64],
    a: AlphaParam,
    scratch_p: &mut [f64],
    scratch_q: &mut [f64],
) -> Option<f64> {
    if !tilt_slice(p, w, a.alpha(), scratch_p) || !tilt_slice(q, w, a.alpha(), scratch_q) {
        return None;
    }
    if disjoint(p, q) {
        // the integral vanishes (ρ < 0) or diverges (ρ > 0)
        return Some(f64::INFINITY);
    }
    let excess = tilted_excess(scratch_p, scratch_q, w, a.rho());
    Some(log_ratio_over_rho(excess, a.rho()))
}

/// `I_α` through the direct formula, on raw slices.
pub(crate) fn relative_entropy_direct_slice(p: &[f64], q: &[f64], w: &[f64], a: AlphaParam) -> Option<f64> {
    let al = a.alpha();
    let np = alpha_norm_slice(p, w, al);
    let nq = alpha_norm_slice(q, w, al);
    if np == 0.0 || nq == 0.0 {
        return None;
    }
    if disjoint(p, q) {
        return Some(f64::INFINITY);
    }
    let e = al - 1.0;
    let excess = pairwise_sum_by(p.len(), |i| {
        let x = p[i] / np;
        if x == 0.0 {
            return 0.0;
        }
        let y = q[i] / nq;
        let gy = if y == 0.0 {
            if e < 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            y.powf(e)
        };
        x * (gy - x.powf(e)) * w[i]
    });
    Some(log_ratio_over_rho(excess, a.rho()))
}

/// Csiszár f-divergence `∫ q f(p/q) dμ` with `f(x) = sgn(ρ) x^{1+ρ}`.
///
/// Inputs need not be probability densities. Atoms with `p = 0` contribute
/// nothing; atoms with `q = 0 < p` contribute `+∞` for ρ > 0 and 0 for ρ < 0.
pub fn f_divergence(p: &Density, q: &Density, a: AlphaParam) -> Result<f64> {
    p.check_same_space(q)?;
    Ok(f_divergence_slice(p.values(), q.values(), p.weights(), a))
}

/// `I_α(P,Q)` via the tilted measures and the f-divergence.
pub fn alpha_relative_entropy(p: &Density, q: &Density, a: AlphaParam) -> Result<DivergenceValue> {
    p.check_same_space(q)?;
    let n = p.len();
    let (mut sp, mut sq) = (vec![0.0; n], vec![0.0; n]);
    let v = relative_entropy_via_tilts_slice(p.values(), q.values(), p.weights(), a, &mut sp, &mut sq)
        .ok_or(Error::AllZero)?;
    Ok(DivergenceValue::new(v, DivergencePath::ViaFDivergence))
}

/// `I_α(P,Q) = (1/ρ) log[(1/‖p‖) ∫ p (q')^{-ρ} dμ]`, an independent route to
/// the same value as [`alpha_relative_entropy`].
pub fn alpha_relative_entropy_direct(p: &Density, q: &Density, a: AlphaParam) -> Result<DivergenceValue> {
    p.check_same_space(q)?;
    let v = relative_entropy_direct_slice(p.values(), q.values(), p.weights(), a).ok_or(Error::AllZero)?;
    Ok(DivergenceValue::new(v, DivergencePath::ViaDirectFormula))
}

/// Default evaluation (direct route), returning the bare value.
pub fn divergence(p: &Density, q: &Density, a: AlphaParam) -> Result<f64> {
    Ok(alpha_relative_entropy_direct(p, q, a)?.value)
}

/// `(I_α(P,U), log|X| - H_α(P))` on a counting space.
pub fn uniform_gap_identity(p: &Density, a: AlphaParam) -> Result<(f64, f64)> {
    if !p.space().is_counting() {
        return Err(Error::NonCountingMeasure);
    }
    let u = Density::uniform(p.space().clone());
    let lhs = divergence(p, &u, a)?;
    let rhs = (p.len() as f64).ln() - renyi_entropy(p, a)?;
    Ok((lhs, rhs))
}

/// One row of [`kl_limit_probe`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitProbeRow {
    pub epsilon: f64,
    pub alpha: f64,
    pub i_alpha: f64,
    pub gap_to_kl: f64,
}

/// Evaluates `I_{1±ε}(P,Q)` and its distance to `KL(P‖Q)` for each ε.
/// Rows come in the order of `epsilons`, `1-ε` before `1+ε`.
pub fn kl_limit_probe(p: &Density, q: &Density, epsilons: &[f64]) -> Result<Vec<LimitProbeRow>> {
    p.check_same_space(q)?;
    if !p.support_within(q) {
        return Err(Error::SupportMismatch);
    }
    let kl = kl_divergence(p, q)?;
    let mut rows = Vec::with_capacity(2 * epsilons.len());
    for &eps in epsilons {
        if !(1e-5..=0.1).contains(&eps) {
            return Err(Error::InvalidArgument(format!("epsilon {eps} outside [1e-5, 0.1]")));
        }
        for alpha in [1.0 - eps, 1.0 + eps] {
            let v = divergence(p, q, AlphaParam::new(alpha)?)?;
            rows.push(LimitProbeRow { epsilon: eps, alpha, i_alpha: v, gap_to_kl: (v - kl).abs() });
        }
    }
    Ok(rows)
}

/// Largest change of `I_α(·,Q)` over the perturbations `p ± δ e_i`
/// (renormalized), for every atom `i`.
pub fn continuity_probe(p: &Density, q: &Density, a: AlphaParam, delta: f64) -> Result<f64> {
    p.check_same_space(q)?;
    if delta == 0.0 {
        return Ok(0.0);
    }
    let min_value = p.values().iter().copied().fold(f64::INFINITY, f64::min);
    if !(delta > 0.0 && delta < min_value) {
        return Err(Error::DeltaTooLarge { delta, min_value });
    }
    let base = divergence(p, q, a)?;
    let mut worst: f64 = 0.0;
    for i in 0..p.len() {
        for sign in [-1.0, 1.0] {
            let mut v = p.values().to_vec();
            v[i] += sign * delta;
            let perturbed = crate::measures::normalize(&v, p.space().clone())?;
            let d = divergence(&perturbed, q, a)?;
            let change = match (base.is_finite(), d.is_finite()) {
                (true, true) => (d - base).abs(),
                (false, false) => 0.0,
                _ => f64::INFINITY,
            };
            worst = worst.max(change);
        }
    }
    Ok(worst)
}
