//! Rényi-entropy maximizers under a covariance constraint,
//!
//! ```text
//! g_{α,C}(x) = Z_α^{-1} [1 + b_α xᵀC⁻¹x]_+^{1/(α-1)},   b_α = (1-α)/(2α - n(1-α)),
//! ```
//!
//! discretized by the midpoint rule on uniform rectangular cells. For α > 1
//! the support is the ellipsoid `xᵀC⁻¹x ≤ -1/b_α`; for α < 1 the tails decay
//! like `|x|^{2/(α-1)}` and the grid extent is found by doubling.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Deserialize;

use crate::divergences::divergence;
use crate::measures::{renyi_entropy, AlphaParam, Density, Point, WeightedSpace};
use crate::numeric::pairwise_sum_by;
use crate::{Error, Result};

/// Relative covariance error tolerated by [`generalized_gaussian`].
pub const COVARIANCE_TOL: f64 = 0.01;
/// Truncated tail mass accepted when sizing α < 1 grids.
pub const TAIL_MASS_TOL: f64 = 1e-6;
/// Relative covariance change per doubling accepted when sizing α < 1 grids.
pub const DOUBLING_TOL: f64 = 1e-3;
/// Cap on grid size for automatic extents.
pub const MAX_CELLS: usize = 20_000_000;

/// `b_α = (1-α)/(2α - n(1-α))`, defined for α > n/(n+2).
pub fn b_alpha(a: AlphaParam, n: usize) -> Result<f64> {
    let al = a.alpha();
    let denom = 2.0 * al - n as f64 * (1.0 - al);
    if n == 0 || denom <= 0.0 {
        return Err(Error::AlphaOutOfRange { alpha: al, n });
    }
    Ok((1.0 - al) / denom)
}

/// Input file shape: `{"n": …, "alpha": …, "C": [[…]]}`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecInput {
    pub n: usize,
    pub alpha: f64,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
}

/// Dimension, order and covariance of a generalized Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedGaussianSpec {
    n: usize,
    alpha: AlphaParam,
    c: DMatrix<f64>,
    c_inv: DMatrix<f64>,
    b_alpha: f64,
}

impl GeneralizedGaussianSpec {
    pub fn new(alpha: AlphaParam, c: DMatrix<f64>) -> Result<Self> {
        let n = c.nrows();
        if n == 0 || c.ncols() != n {
            return Err(Error::InvalidCovariance);
        }
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (c[(i, j)], c[(j, i)]);
                if !x.is_finite() || (x - y).abs() > 1e-12 * (x.abs() + y.abs()).max(1.0) {
                    return Err(Error::InvalidCovariance);
                }
            }
        }
        let b = b_alpha(alpha, n)?;
        let chol = c.clone().cholesky().ok_or(Error::InvalidCovariance)?;
        let c_inv = chol.inverse();
        Ok(Self { n, alpha, c, c_inv, b_alpha: b })
    }

    pub fn from_input(input: &SpecInput) -> Result<Self> {
        let n = input.n;
        if input.c.len() != n || input.c.iter().any(|r| r.len() != n) {
            return Err(Error::Parse { field: "C".into(), message: format!("expected a {n}×{n} matrix") });
        }
        let alpha = AlphaParam::new(input.alpha)?;
        let c = DMatrix::from_fn(n, n, |i, j| input.c[i][j]);
        Self::new(alpha, c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> AlphaParam {
        self.alpha
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn b_alpha(&self) -> f64 {
        self.b_alpha
    }

    /// `xᵀC⁻¹x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let v = DVector::from_column_slice(x);
        (v.transpose() * &self.c_inv * &v)[(0, 0)]
    }

    /// Unnormalized density `[1 + b xᵀC⁻¹x]_+^{1/(α-1)}`.
    pub fn kernel(&self, x: &[f64]) -> f64 {
        let base = 1.0 + self.b_alpha * self.quadratic_form(x);
        if base <= 0.0 {
            0.0
        } else {
            base.powf(1.0 / (self.alpha.alpha() - 1.0))
        }
    }

    /// Half-widths of the support's bounding box, `sqrt(-C_ii / b)` (α > 1).
    pub fn support_half_widths(&self) -> Option<Vec<f64>> {
        (self.b_alpha < 0.0).then(|| (0..self.n).map(|i| (-self.c[(i, i)] / self.b_alpha).sqrt()).collect())
    }
}

/// Uniform rectangular grid of `counts[i]` cells of width `h[i]` per axis,
/// symmetric about the origin. Points are cell midpoints; weights are cell
/// volumes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub h: Vec<f64>,
    /// Cells on each side of the origin.
    pub half_counts: Vec<usize>,
}

impl GridSpec {
    pub fn n_cells(&self) -> usize {
        self.half_counts.iter().map(|&k| 2 * k).product()
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.h.iter().zip(&self.half_counts).map(|(h, &k)| h * k as f64).collect()
    }

    /// Midpoint of cell `j ∈ 0..2k` along axis `i`.
    fn midpoint(&self, i: usize, j: usize) -> f64 {
        (j as f64 - self.half_counts[i] as f64 + 0.5) * self.h[i]
    }

    pub fn build(&self) -> Result<Arc<WeightedSpace>> {
        let n = self.h.len();
        let total = self.n_cells();
        if total == 0 || total > MAX_CELLS {
            return Err(Error::GridTooCoarse(format!("grid of {total} cells")));
        }
        let vol: f64 = self.h.iter().product();
        let points: Vec<Point> = (0..total)
            .map(|mut flat| {
                // last axis varies fastest
                let mut x = vec![0.0; n];
                for i in (0..n).rev() {
                    let m = 2 * self.half_counts[i];
                    x[i] = self.midpoint(i, flat % m);
                    flat /= m;
                }
                if n == 1 {
                    Point::Scalar(x[0])
                } else {
                    Point::Coords(x)
                }
            })
            .collect();
        Ok(Arc::new(WeightedSpace::new(points, vec![vol; total])?))
    }
}

/// Grid of nominal cell width `h` covering at least `min_half_width` per
/// axis. For α > 1 the cells are shrunk so that the support bounding box
/// falls on cell edges, and one extra cell is kept beyond it.
pub fn aligned_grid(spec: &GeneralizedGaussianSpec, h: f64, min_half_width: &[f64]) -> Result<GridSpec> {
    if !(h > 0.0) || min_half_width.len() != spec.n {
        return Err(Error::InvalidArgument("grid width must be positive with one extent per axis".into()));
    }
    let mut hs = Vec::with_capacity(spec.n);
    let mut half_counts = Vec::with_capacity(spec.n);
    let support = spec.support_half_widths();
    for i in 0..spec.n {
        let (hi, mut k) = match &support {
            Some(r) => {
                let m = (r[i] / h).ceil();
                (r[i] / m, m as usize + 1)
            }
            None => (h, 1),
        };
        k = k.max((min_half_width[i] / hi).ceil() as usize);
        hs.push(hi);
        half_counts.push(k);
    }
    Ok(GridSpec { h: hs, half_counts })
}

/// A generalized Gaussian discretized on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedGaussian {
    pub density: Density,
    /// `Z_α = Σ kernel(x_i) w_i`.
    pub z: f64,
    pub grid: GridSpec,
}

fn coordinates(space: &WeightedSpace) -> Result<Vec<&[f64]>> {
    space.coordinates().ok_or(Error::CoordinatesRequired)
}

/// Density proportional to the kernel on `grid`, with the covariance check.
pub fn generalized_gaussian_on(spec: &GeneralizedGaussianSpec, space: Arc<WeightedSpace>) -> Result<(Density, f64)> {
    let x = coordinates(&space)?;
    if x[0].len() != spec.n {
        return Err(Error::LengthMismatch { expected: spec.n, got: x[0].len() });
    }
    let k: Vec<f64> = x.par_iter().map(|xi| spec.kernel(xi)).collect();
    let w = space.mu_weights();
    let z = pairwise_sum_by(k.len(), |i| k[i] * w[i]);
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::GridTooCoarse("kernel integrates to zero on the grid".into()));
    }
    let values = k.iter().map(|v| v / z).collect();
    let density = Density::new(space, values)?;
    let cov = covariance(&density)?;
    let dev = relative_deviation(&cov, &spec.c);
    if dev > COVARIANCE_TOL {
        return Err(Error::GridTooCoarse(format!("covariance off by {dev:.3e} (relative)")));
    }
    Ok((density, z))
}

/// Discretized `g_{α,C}` with cell width `h`. For α > 1 the grid covers the
/// support box plus one cell (and at least `min_half_width`); for α < 1 the
/// extent doubles from `max(8√C_ii, min_half_width)` until the truncated
/// tail mass is below [`TAIL_MASS_TOL`] and the covariance changes by less
/// than [`DOUBLING_TOL`].
pub fn generalized_gaussian(
    spec: &GeneralizedGaussianSpec,
    h: f64,
    min_half_width: &[f64],
) -> Result<GeneralizedGaussian> {
    if spec.b_alpha < 0.0 {
        let grid = aligned_grid(spec, h, min_half_width)?;
        let (density, z) = generalized_gaussian_on(spec, grid.build()?)?;
        return Ok(GeneralizedGaussian { density, z, grid });
    }
    let start: Vec<f64> = (0..spec.n).map(|i| (8.0 * spec.c[(i, i)].sqrt()).max(min_half_width[i])).collect();
    let mut grid = aligned_grid(spec, h, &start)?;
    let mut previous: Option<DMatrix<f64>> = None;
    let mut change = f64::INFINITY;
    loop {
        if grid.n_cells() > MAX_CELLS {
            return Err(Error::MomentDiverged { change });
        }
        let space = grid.build()?;
        let x = coordinates(&space)?;
        let k: Vec<f64> = x.par_iter().map(|xi| spec.kernel(xi)).collect();
        let w = space.mu_weights();
        let z = pairwise_sum_by(k.len(), |i| k[i] * w[i]);
        let density = Density::new(Arc::clone(&space), k.iter().map(|v| v / z).collect())?;
        let cov = covariance(&density)?;
        let tail = tail_mass_estimate(spec, &grid, z);
        if let Some(prev) = &previous {
            change = relative_deviation(&cov, prev);
            if tail < TAIL_MASS_TOL && change < DOUBLING_TOL {
                let dev = relative_deviation(&cov, &spec.c);
                if dev > COVARIANCE_TOL {
                    return Err(Error::GridTooCoarse(format!("covariance off by {dev:.3e} (relative)")));
                }
                return Ok(GeneralizedGaussian { density, z, grid });
            }
        }
        previous = Some(cov);
        grid.half_counts.iter_mut().for_each(|k| *k *= 2);
    }
}

/// Mass of `g_{α,C}` outside the largest whitened ball inside the grid box,
/// from the power-law tail `(b s²)^{1/(α-1)}` integrated radially.
fn tail_mass_estimate(spec: &GeneralizedGaussianSpec, grid: &GridSpec, z: f64) -> f64 {
    let n = spec.n as f64;
    let hw = grid.half_widths();
    let s0 = (0..spec.n).map(|i| hw[i] / spec.c[(i, i)].sqrt()).fold(f64::INFINITY, f64::min);
    let p = 2.0 / (spec.alpha.alpha() - 1.0);
    if p + n >= 0.0 {
        return f64::INFINITY;
    }
    let sphere = 2.0 * std::f64::consts::PI.powf(n / 2.0) / gamma_half_integer(spec.n);
    let det = spec.c.determinant().sqrt();
    let g_s0 = (spec.b_alpha * s0 * s0).powf(1.0 / (spec.alpha.alpha() - 1.0));
    sphere * det / z * g_s0 * s0.powf(n) / (-(p + n))
}

/// `Γ(n/2)` for positive integers `n`.
fn gamma_half_integer(n: usize) -> f64 {
    let mut g = if n.is_multiple_of(2) { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut k = if n.is_multiple_of(2) { 1.0 } else { 0.5 };
    while k < n as f64 / 2.0 - 1e-12 {
        g *= k;
        k += 1.0;
    }
    g
}

/// `max |a - b|` over `max_i |b_ii|`.
pub fn relative_deviation(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = (0..b.nrows()).map(|i| b[(i, i)].abs()).fold(0.0, f64::max);
    (a - b).amax() / scale
}

/// `Σ p_i w_i (x_i - m)(x_i - m)ᵀ` with `m` the mean, for a density on
/// coordinate points.
pub fn covariance(p: &Density) -> Result<DMatrix<f64>> {
    let x = coordinates(p.space())?;
    let n = x[0].len();
    let w = p.weights();
    let v = p.values();
    let mass = |i: usize| v[i] * w[i];
    let mean: Vec<f64> = (0..n).map(|a| pairwise_sum_by(x.len(), |i| mass(i) * x[i][a])).collect();
    Ok(DMatrix::from_fn(n, n, |a, b| pairwise_sum_by(x.len(), |i| mass(i) * (x[i][a] - mean[a]) * (x[i][b] - mean[b]))))
}

/// Both sides of `I_α(g, g_{α,C}) = H_α(g_{α,C}) - H_α(g)` and their gap.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MomentEntropyGap {
    pub divergence: f64,
    pub h_max: f64,
    pub h_g: f64,
    /// `divergence - (h_max - h_g)`.
    pub gap: f64,
}

/// Gap in the moment-entropy identity for a density `g` with covariance
/// `C`, evaluated on the grid shared with `gg`.
pub fn moment_entropy_gap(g: &Density, spec: &GeneralizedGaussianSpec, gg: &Density) -> Result<MomentEntropyGap> {
    g.check_same_space(gg)?;
    let cov = covariance(g)?;
    let deviation = relative_deviation(&cov, &spec.c);
    if deviation > COVARIANCE_TOL {
        return Err(Error::CovarianceMismatch { deviation });
    }
    let a = spec.alpha;
    let div = divergence(g, gg, a)?;
    if !div.is_finite() {
        return Err(Error::InfiniteDivergence);
    }
    let h_max = renyi_entropy(gg, a)?;
    let h_g = renyi_entropy(g, a)?;
    Ok(MomentEntropyGap { divergence: div, h_max, h_g, gap: div - (h_max - h_g) })
}

/// Variance-matched comparison densities for the moment-entropy identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFamily {
    Gaussian,
    /// Laplace with scale `σ/√2` per axis.
    Laplace,
    /// `½N(-0.6σ, 0.64σ²) + ½N(0.6σ, 0.64σ²)` per axis.
    Mixture,
    /// Uniform on `[-√3σ, √3σ]` per axis.
    Uniform,
}

impl TestFamily {
    pub const ALL: [TestFamily; 4] =
        [TestFamily::Gaussian, TestFamily::Laplace, TestFamily::Mixture, TestFamily::Uniform];

    pub fn name(self) -> &'static str {
        match self {
            TestFamily::Gaussian => "gaussian",
            TestFamily::Laplace => "laplace",
            TestFamily::Mixture => "mixture",
            TestFamily::Uniform => "uniform",
        }
    }

    /// Unnormalized density of one standardized axis.
    fn axis(self, t: f64) -> f64 {
        let gauss = |m: f64, s: f64| (-0.5 * ((t - m) / s).powi(2)).exp() / s;
        match self {
            TestFamily::Gaussian => gauss(0.0, 1.0),
            TestFamily::Laplace => (-std::f64::consts::SQRT_2 * t.abs()).exp(),
            TestFamily::Mixture => gauss(-0.6, 0.8) + gauss(0.6, 0.8),
            TestFamily::Uniform => f64::from(u8::from(t.abs() <= 3.0_f64.sqrt())),
        }
    }

    /// Product density with axis scales `√C_ii` on a grid with cell widths
    /// `h`, normalized on the grid. Smooth families are sampled at cell
    /// midpoints; the uniform family uses exact cell-overlap fractions so its
    /// moments converge at the same rate. Off-diagonal covariance is not
    /// modelled.
    pub fn discretize(self, space: Arc<WeightedSpace>, variances: &[f64], h: &[f64]) -> Result<Density> {
        let x = coordinates(&space)?;
        let sd: Vec<f64> = variances.iter().map(|v| v.sqrt()).collect();
        let edge = 3.0_f64.sqrt();
        let vals: Vec<f64> = x
            .par_iter()
            .map(|xi| {
                xi.iter()
                    .enumerate()
                    .map(|(i, &t)| {
                        if self == TestFamily::Uniform {
                            let lo = ((t - h[i] / 2.0) / sd[i]).max(-edge);
                            let hi = ((t + h[i] / 2.0) / sd[i]).min(edge);
                            (hi - lo).max(0.0)
                        } else {
                            self.axis(t / sd[i])
                        }
                    })
                    .product()
            })
            .collect();
        crate::measures::normalize(&vals, space)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn a(x: f64) -> AlphaParam {
        AlphaParam::new(x).unwrap()
    }

    fn spec1(alpha: f64) -> GeneralizedGaussianSpec {
        GeneralizedGaussianSpec::new(a(alpha), DMatrix::from_element(1, 1, 1.0)).unwrap()
    }

    #[test]
    fn b_alpha_values() {
        assert_relative_eq!(b_alpha(a(2.0), 1).unwrap(), -0.2, epsilon = 1e-15);
        assert_relative_eq!(b_alpha(a(0.6), 2).unwrap(), 1.0, epsilon = 1e-12);
        assert!(b_alpha(a(1.0 + 1e-4), 1).unwrap().abs() < 1e-4);
        assert!(b_alpha(a(1.0 - 1e-4), 1).unwrap().abs() < 1e-4);
        assert_eq!(b_alpha(a(0.3), 1).unwrap_err(), Error::AlphaOutOfRange { alpha: 0.3, n: 1 });
        assert!(b_alpha(a(0.5), 2).is_err());
    }

    #[test]
    fn closed_form_alpha_two() {
        let s = spec1(2.0);
        assert_relative_eq!(s.support_half_widths().unwrap()[0], 5.0_f64.sqrt(), epsilon = 1e-15);
        let gg = generalized_gaussian(&s, 1e-3, &[0.0]).unwrap();
        let z_exact = 4.0 * 5.0_f64.sqrt() / 3.0;
        assert!((gg.z - z_exact).abs() < 1e-5, "{}", gg.z);
        let var = covariance(&gg.density).unwrap()[(0, 0)];
        assert!((var - 1.0).abs() < 1e-3, "{var}");
        // the outermost cells lie beyond the support
        assert_eq!(gg.density.values()[0], 0.0);
    }

    #[test]
    fn tail_exponent_below_one() {
        let s = spec1(0.8);
        let xs: Vec<f64> = (0..50).map(|i| 50.0 * (10.0_f64).powf(i as f64 / 49.0)).collect();
        let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        let ly: Vec<f64> = xs.iter().map(|&x| s.kernel(&[x]).ln()).collect();
        let mx = lx.iter().sum::<f64>() / 50.0;
        let my = ly.iter().sum::<f64>() / 50.0;
        let slope = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!((slope / -10.0 - 1.0).abs() < 0.02, "{slope}");
    }

    #[test]
    fn below_one_grid_converges() {
        let s = spec1(0.9);
        let gg = generalized_gaussian(&s, 1e-2, &[0.0]).unwrap();
        let var = covariance(&gg.density).unwrap()[(0, 0)];
        assert!((var - 1.0).abs() < 1e-2, "{var}");
    }

    #[test]
    fn point_mass_covariance_is_zero() {
        let space = GridSpec { h: vec![1.0], half_counts: vec![2] }.build().unwrap();
        let pm = Density::point_mass(space, 1).unwrap();
        assert_eq!(covariance(&pm).unwrap()[(0, 0)], 0.0);
    }

    #[test]
    fn labels_have_no_coordinates() {
        let space = Arc::new(WeightedSpace::counting(3).unwrap());
        assert_eq!(covariance(&Density::uniform(space)).unwrap_err(), Error::CoordinatesRequired);
    }

    #[test]
    fn self_gap_is_zero() {
        let s = spec1(1.5);
        let gg = generalized_gaussian(&s, 1e-3, &[0.0]).unwrap();
        let r = moment_entropy_gap(&gg.density, &s, &gg.density).unwrap();
        assert!(r.divergence.abs() < 1e-12 && r.gap.abs() < 1e-12);
    }

    #[test]
    fn invalid_covariance() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(GeneralizedGaussianSpec::new(a(2.0), c).unwrap_err(), Error::InvalidCovariance);
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert_eq!(GeneralizedGaussianSpec::new(a(2.0), c).unwrap_err(), Error::InvalidCovariance);
    }

    #[test]
    fn gamma_values() {
        assert_relative_eq!(gamma_half_integer(1), std::f64::consts::PI.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(gamma_half_integer(2), 1.0);
        assert_relative_eq!(gamma_half_integer(3), 0.5 * std::f64::consts::PI.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(gamma_half_integer(4), 1.0);
    }
}
