//! Probability measures dominated by a measure μ on a finite support.
//!
//! A [`WeightedSpace`] carries the atoms of μ (counting measure when every
//! weight is 1, cell volumes for a grid discretization). A [`Density`] is a
//! nonnegative function on those atoms; it represents a probability measure
//! when `Σ p_i w_i = 1`.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::numeric::{pairwise_sum_by, pow0};
use crate::{Error, Result};

/// Mass tolerance for a density to count as a probability density.
pub const TOL_MASS: f64 = 1e-12;
/// Largest mass drift a probability constructor silently renormalizes.
pub const RENORMALIZE_LIMIT: f64 = 1e-9;
/// Orders closer than this to 1 are rejected.
pub const ALPHA_GUARD: f64 = 1e-6;

/// Label of an atom: an opaque identifier or a coordinate vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Scalar(f64),
    Coords(Vec<f64>),
    Label(String),
}

impl Point {
    /// Real coordinates of the point, if it carries any.
    pub fn coords(&self) -> Option<&[f64]> {
        match self {
            Point::Scalar(x) => Some(std::slice::from_ref(x)),
            Point::Coords(v) => Some(v),
            Point::Label(_) => None,
        }
    }

    fn key(&self) -> String {
        match self {
            Point::Scalar(x) => format!("s:{:016x}", x.to_bits()),
            Point::Coords(v) => {
                let bits: Vec<String> = v.iter().map(|x| format!("{:016x}", x.to_bits())).collect();
                format!("c:{}", bits.join(","))
            }
            Point::Label(s) => format!("l:{s}"),
        }
    }
}

/// Finite support with strictly positive μ-weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedSpace {
    points: Vec<Point>,
    mu_weights: Vec<f64>,
}

impl WeightedSpace {
    pub fn new(points: Vec<Point>, mu_weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySpace);
        }
        if points.len() != mu_weights.len() {
            return Err(Error::LengthMismatch { expected: points.len(), got: mu_weights.len() });
        }
        for (index, &w) in mu_weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if w <= 0.0 {
                return Err(Error::NonPositiveWeight { index, value: w });
            }
        }
        let mut seen = HashSet::with_capacity(points.len());
        for (index, p) in points.iter().enumerate() {
            coords_finite(p, index)?;
            if !seen.insert(p.key()) {
                return Err(Error::DuplicateLabel { index });
            }
        }
        Ok(Self { points, mu_weights })
    }

    /// Counting measure on `n` atoms labelled `"0"`, `"1"`, ...
    pub fn counting(n: usize) -> Result<Self> {
        let points = (0..n).map(|i| Point::Label(i.to_string())).collect();
        Self::new(points, vec![1.0; n])
    }

    /// Same atoms and labels as `self`, every weight multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.points.clone(), self.mu_weights.iter().map(|w| w * factor).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn mu_weights(&self) -> &[f64] {
        &self.mu_weights
    }

    pub fn is_counting(&self) -> bool {
        self.mu_weights.iter().all(|&w| w == 1.0)
    }

    pub fn total_measure(&self) -> f64 {
        pairwise_sum_by(self.len(), |i| self.mu_weights[i])
    }

    /// Coordinate matrix (row per point), if every point carries coordinates
    /// of a common dimension.
    pub fn coordinates(&self) -> Option<Vec<&[f64]>> {
        let rows: Option<Vec<&[f64]>> = self.points.iter().map(Point::coords).collect();
        let rows = rows?;
        let dim = rows.first()?.len();
        rows.iter().all(|r| r.len() == dim && dim > 0).then_some(rows)
    }
}

fn coords_finite(p: &Point, index: usize) -> Result<()> {
    match p.coords() {
        Some(c) if c.iter().any(|x| !x.is_finite()) => Err(Error::NonFinite { index }),
        _ => Ok(()),
    }
}

/// Validated order α ∈ (0,∞)\{1} with ρ = (1-α)/α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaParam {
    alpha: f64,
    rho: f64,
    sign_rho: f64,
}

impl AlphaParam {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidAlpha { alpha, reason: "not finite" });
        }
        if alpha <= 0.0 {
            return Err(Error::InvalidAlpha { alpha, reason: "must be positive" });
        }
        if (alpha - 1.0).abs() < ALPHA_GUARD {
            return Err(Error::InvalidAlpha { alpha, reason: "too close to 1; use the Kullback-Leibler divergence" });
        }
        let rho = (1.0 - alpha) / alpha;
        Ok(Self { alpha, rho, sign_rho: rho.signum() })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// +1 for α < 1, -1 for α > 1.
    pub fn sign_rho(&self) -> f64 {
        self.sign_rho
    }

    pub fn is_below_one(&self) -> bool {
        self.alpha < 1.0
    }
}

/// Nonnegative density over a [`WeightedSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    space: Arc<WeightedSpace>,
    values: Vec<f64>,
}

impl Density {
    /// Nonnegative density, not necessarily of unit mass.
    pub fn new(space: Arc<WeightedSpace>, values: Vec<f64>) -> Result<Self> {
        validate_values(&values, space.len())?;
        Ok(Self { space, values })
    }

    /// Probability density. Mass drift beyond summation rounding and up to
    /// [`RENORMALIZE_LIMIT`] is renormalized away, anything larger is
    /// rejected.
    pub fn probability(space: Arc<WeightedSpace>, values: Vec<f64>) -> Result<Self> {
        let d = Self::new(space, values)?;
        let mass = d.mass();
        if mass == 0.0 {
            return Err(Error::AllZero);
        }
        if (mass - 1.0).abs() > RENORMALIZE_LIMIT {
            return Err(Error::NotNormalized { mass, tolerance: RENORMALIZE_LIMIT });
        }
        // summation rounding is left alone so stored densities read back bit for bit
        if (mass - 1.0).abs() <= 4.0 * f64::EPSILON * d.len() as f64 {
            return Ok(d);
        }
        Ok(d.scaled(1.0 / mass))
    }

    /// Uniform probability density `1/μ(X)`.
    pub fn uniform(space: Arc<WeightedSpace>) -> Self {
        let v = 1.0 / space.total_measure();
        let n = space.len();
        Self { space, values: vec![v; n] }
    }

    /// Point mass on atom `index`.
    pub fn point_mass(space: Arc<WeightedSpace>, index: usize) -> Result<Self> {
        if index >= space.len() {
            return Err(Error::InvalidArgument(format!("atom {index} out of range")));
        }
        let mut values = vec![0.0; space.len()];
        values[index] = 1.0 / space.mu_weights()[index];
        Ok(Self { space, values })
    }

    pub(crate) fn from_parts_unchecked(space: Arc<WeightedSpace>, values: Vec<f64>) -> Self {
        debug_assert_eq!(space.len(), values.len());
        Self { space, values }
    }

    pub fn space(&self) -> &Arc<WeightedSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        self.space.mu_weights()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mass(&self) -> f64 {
        let w = self.space.mu_weights();
        pairwise_sum_by(self.len(), |i| self.values[i] * w[i])
    }

    pub fn is_probability(&self) -> bool {
        (self.mass() - 1.0).abs() <= TOL_MASS
    }

    /// Whether both densities live on the same (or an identical) space.
    pub fn same_space(&self, other: &Density) -> bool {
        Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space
    }

    pub fn check_same_space(&self, other: &Density) -> Result<()> {
        if self.same_space(other) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    /// `supp(self) ⊆ supp(other)`, compared with exact zeros.
    pub fn support_within(&self, other: &Density) -> bool {
        self.values.iter().zip(&other.values).all(|(&a, &b)| a == 0.0 || b > 0.0)
    }

    pub fn has_full_support(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { space: Arc::clone(&self.space), values: self.values.iter().map(|v| v * factor).collect() }
    }

    /// Total variation distance `½ ∫|p - q| dμ`.
    pub fn total_variation(&self, other: &Density) -> Result<f64> {
        self.check_same_space(other)?;
        Ok(crate::numeric::total_variation(&self.values, &other.values, self.weights()))
    }
}

fn validate_values(values: &[f64], expected: usize) -> Result<()> {
    if values.len() != expected {
        return Err(Error::LengthMismatch { expected, got: values.len() });
    }
    for (index, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if v < 0.0 {
            return Err(Error::NegativeValue { index, value: v });
        }
    }
    Ok(())
}

/// Scales `values` to a probability density on `space`.
pub fn normalize(values: &[f64], space: Arc<WeightedSpace>) -> Result<Density> {
    validate_values(values, space.len())?;
    let w = space.mu_weights();
    let mass = pairwise_sum_by(values.len(), |i| values[i] * w[i]);
    if mass == 0.0 {
        return Err(Error::AllZero);
    }
    let values = values.iter().map(|v| v / mass).collect();
    Ok(Density { space, values })
}

/// `Σ p_i^α w_i` computed as `m^α Σ (p_i/m)^α w_i` with `m = max p`.
/// Returns `(m, Σ (p_i/m)^α w_i)`; `m == 0` means the density vanishes.
pub(crate) fn scaled_power_sum(values: &[f64], weights: &[f64], alpha: f64) -> (f64, f64) {
    let m = values.iter().copied().fold(0.0_f64, f64::max);
    if m == 0.0 {
        return (0.0, 0.0);
    }
    let s = pairwise_sum_by(values.len(), |i| pow0(values[i] / m, alpha) * weights[i]);
    (m, s)
}

/// `‖p‖ = (∫ p^α dμ)^{1/α}` on raw slices.
pub(crate) fn alpha_norm_slice(values: &[f64], weights: &[f64], alpha: f64) -> f64 {
    let (m, s) = scaled_power_sum(values, weights, alpha);
    if m == 0.0 {
        0.0
    } else {
        m * s.powf(1.0 / alpha)
    }
}

/// Tilted density `p^α / ∫p^α dμ` written into `out`.
pub(crate) fn tilt_slice(values: &[f64], weights: &[f64], alpha: f64, out: &mut [f64]) -> bool {
    let (m, s) = scaled_power_sum(values, weights, alpha);
    if m == 0.0 {
        return false;
    }
    for (o, &v) in out.iter_mut().zip(values) {
        *o = pow0(v / m, alpha) / s;
    }
    true
}

/// `‖p‖ = (∫ |p|^α dμ)^{1/α}`. Not a norm for α < 1.
pub fn alpha_norm(p: &Density, a: AlphaParam) -> Result<f64> {
    let n = alpha_norm_slice(p.values(), p.weights(), a.alpha());
    if n == 0.0 {
        Err(Error::AllZero)
    } else {
        Ok(n)
    }
}

/// Escort density `p' = p^α / ∫ p^α dμ`.
pub fn tilt(p: &Density, a: AlphaParam) -> Result<Density> {
    let mut out = vec![0.0; p.len()];
    if !tilt_slice(p.values(), p.weights(), a.alpha(), &mut out) {
        return Err(Error::AllZero);
    }
    Ok(Density { space: Arc::clone(p.space()), values: out })
}

/// Rényi entropy `H_α(P) = (1/(1-α)) log ∫ p^α dμ`, in nats.
pub fn renyi_entropy(p: &Density, a: AlphaParam) -> Result<f64> {
    let (m, s) = scaled_power_sum(p.values(), p.weights(), a.alpha());
    if m == 0.0 {
        return Err(Error::AllZero);
    }
    Ok((a.alpha() * m.ln() + s.ln()) / (1.0 - a.alpha()))
}

/// Shannon (differential, for grid weights) entropy `-∫ p log p dμ`.
pub fn shannon_entropy(p: &Density) -> f64 {
    let w = p.weights();
    let v = p.values();
    -pairwise_sum_by(v.len(), |i| if v[i] > 0.0 { v[i] * v[i].ln() * w[i] } else { 0.0 })
}

/// Kullback-Leibler divergence `∫ p log(p/q) dμ`; `+∞` unless `supp p ⊆ supp q`.
pub fn kl_divergence(p: &Density, q: &Density) -> Result<f64> {
    p.check_same_space(q)?;
    if !p.support_within(q) {
        return Ok(f64::INFINITY);
    }
    let w = p.weights();
    let (pv, qv) = (p.values(), q.values());
    let s = pairwise_sum_by(pv.len(), |i| if pv[i] > 0.0 { pv[i] * (pv[i] / qv[i]).ln() * w[i] } else { 0.0 });
    Ok(s.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn counting(n: usize) -> Arc<WeightedSpace> {
        Arc::new(WeightedSpace::counting(n).unwrap())
    }

    fn prob(v: &[f64]) -> Density {
        Density::probability(counting(v.len()), v.to_vec()).unwrap()
    }

    fn alpha(a: f64) -> AlphaParam {
        AlphaParam::new(a).unwrap()
    }

    #[test]
    fn space_validation() {
        assert_eq!(WeightedSpace::new(vec![], vec![]), Err(Error::EmptySpace));
        let pts = vec![Point::Label("a".into()), Point::Label("a".into())];
        assert_eq!(WeightedSpace::new(pts, vec![1.0, 1.0]), Err(Error::DuplicateLabel { index: 1 }));
        let pts = vec![Point::Label("a".into()), Point::Label("b".into())];
        assert!(matches!(
            WeightedSpace::new(pts.clone(), vec![1.0, 0.0]),
            Err(Error::NonPositiveWeight { index: 1, .. })
        ));
        assert!(matches!(WeightedSpace::new(pts, vec![1.0]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn alpha_param_guards() {
        assert!(AlphaParam::new(0.0).is_err());
        assert!(AlphaParam::new(-1.0).is_err());
        assert!(AlphaParam::new(1.0 + 5e-7).is_err());
        assert!(AlphaParam::new(f64::NAN).is_err());
        let a = alpha(2.0);
        assert_eq!(a.rho(), -0.5);
        assert_eq!(a.sign_rho(), -1.0);
        let a = alpha(0.25);
        assert_eq!(a.rho(), 3.0);
        assert_eq!(a.sign_rho(), 1.0);
        for x in [0.1, 0.3, 0.9, 1.1, 2.0, 7.5] {
            let a = alpha(x);
            assert_relative_eq!(1.0 / (1.0 + a.rho()), x, max_relative = 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn normalize_examples() {
        let d = normalize(&[2.0, 2.0], counting(2)).unwrap();
        assert_eq!(d.values(), &[0.5, 0.5]);
        let d = normalize(&[3.0, 1.0], counting(2)).unwrap();
        assert_eq!(d.values(), &[0.75, 0.25]);
        let pts = vec![Point::Label("a".into()), Point::Label("b".into())];
        let half = Arc::new(WeightedSpace::new(pts, vec![0.5, 0.5]).unwrap());
        let d = normalize(&[1.0, 1.0], half).unwrap();
        assert_eq!(d.values(), &[1.0, 1.0]);
    }

    #[test]
    fn normalize_errors() {
        assert_eq!(normalize(&[0.0, 0.0], counting(2)), Err(Error::AllZero));
        assert!(matches!(normalize(&[1.0, -1.0], counting(2)), Err(Error::NegativeValue { index: 1, .. })));
        assert!(matches!(normalize(&[1.0], counting(2)), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn probability_constructor_drift() {
        let d = Density::probability(counting(2), vec![0.5, 0.5 + 1e-10]).unwrap();
        assert!(d.is_probability());
        assert!(matches!(Density::probability(counting(2), vec![0.5, 0.6]), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn alpha_norm_examples() {
        assert_relative_eq!(
            alpha_norm(&prob(&[0.5, 0.5]), alpha(2.0)).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            alpha_norm(&prob(&[0.6, 0.4]), alpha(2.0)).unwrap(),
            0.7211102550927979,
            max_relative = 1e-14
        );
        for a in [0.3, 2.0, 5.0] {
            assert_eq!(alpha_norm(&prob(&[1.0]), alpha(a)).unwrap(), 1.0);
        }
        let zero = Density::new(counting(2), vec![0.0, 0.0]).unwrap();
        assert_eq!(alpha_norm(&zero, alpha(2.0)), Err(Error::AllZero));
    }

    #[test]
    fn tilt_examples() {
        let t = tilt(&prob(&[0.75, 0.25]), alpha(2.0)).unwrap();
        assert_relative_eq!(t.values()[0], 0.9, max_relative = 1e-15);
        assert_relative_eq!(t.values()[1], 0.1, max_relative = 1e-15);
        let u = Density::uniform(counting(7));
        for a in [0.25, 0.5, 2.0, 5.0] {
            assert_eq!(tilt(&u, alpha(a)).unwrap(), u);
        }
        let pm = prob(&[1.0, 0.0]);
        assert_eq!(tilt(&pm, alpha(0.5)).unwrap().values(), &[1.0, 0.0]);
    }

    #[test]
    fn renyi_examples() {
        for a in [0.3, 0.5, 2.0, 4.0] {
            assert_relative_eq!(
                renyi_entropy(&prob(&[0.5, 0.5]), alpha(a)).unwrap(),
                std::f64::consts::LN_2,
                max_relative = 1e-14
            );
            assert_eq!(renyi_entropy(&prob(&[1.0, 0.0]), alpha(a)).unwrap(), 0.0);
        }
        assert_relative_eq!(
            renyi_entropy(&prob(&[0.75, 0.25]), alpha(2.0)).unwrap(),
            0.4700036292457356,
            max_relative = 1e-14
        );
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&prob(&[0.5, 0.5]), &prob(&[0.5, 0.5])).unwrap(), 0.0);
        // 0.75 ln 1.5 + 0.25 ln 0.5, evaluated at 30 digits
        assert_relative_eq!(
            kl_divergence(&prob(&[0.75, 0.25]), &prob(&[0.5, 0.5])).unwrap(),
            0.130812035941137,
            max_relative = 1e-13
        );
        assert_eq!(kl_divergence(&prob(&[1.0, 0.0]), &prob(&[0.0, 1.0])).unwrap(), f64::INFINITY);
        let other = Density::uniform(counting(3));
        assert_eq!(kl_divergence(&prob(&[0.5, 0.5]), &other), Err(Error::SpaceMismatch));
    }

    #[test]
    fn shannon_of_uniform() {
        let u = Density::uniform(counting(8));
        assert_relative_eq!(shannon_entropy(&u), 8f64.ln(), max_relative = 1e-14);
    }
}
