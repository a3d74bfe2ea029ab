//! Halving the cell width moves Z, the covariance and the moment-entropy gap
//! by no more than their tolerances.

use std::sync::Arc;

use ialpha::maxent::{covariance, generalized_gaussian, moment_entropy_gap, GeneralizedGaussianSpec, TestFamily};
use ialpha::AlphaParam;
use nalgebra::{DMatrix, DVector};

fn spec(alpha: f64, diag: &[f64]) -> GeneralizedGaussianSpec {
    let c = DMatrix::from_diagonal(&DVector::from_column_slice(diag));
    GeneralizedGaussianSpec::new(AlphaParam::new(alpha).unwrap(), c).unwrap()
}

#[test]
fn closed_form_case_is_stable_under_halving() {
    let s = spec(2.0, &[1.0]);
    let coarse = generalized_gaussian(&s, 1e-3, &[0.0]).unwrap();
    let fine = generalized_gaussian(&s, 5e-4, &[0.0]).unwrap();
    assert!((coarse.z - fine.z).abs() <= 1e-6, "{} vs {}", coarse.z, fine.z);
    let vc = covariance(&coarse.density).unwrap()[(0, 0)];
    let vf = covariance(&fine.density).unwrap()[(0, 0)];
    assert!((vc - vf).abs() <= 1e-6, "{vc} vs {vf}");
    let exact = 4.0 * 5.0_f64.sqrt() / 3.0;
    assert!((fine.z - exact).abs() <= 1e-6);
}

fn gaps(s: &GeneralizedGaussianSpec, variances: &[f64], h: f64, extent: &[f64]) -> Vec<f64> {
    let gg = generalized_gaussian(s, h, extent).unwrap();
    TestFamily::ALL
        .iter()
        .map(|fam| {
            let g = fam.discretize(Arc::clone(gg.density.space()), variances, &gg.grid.h).unwrap();
            moment_entropy_gap(&g, s, &gg.density).unwrap().gap
        })
        .collect()
}

#[test]
fn moment_entropy_gap_is_stable_under_halving() {
    for alpha in [0.9, 1.5, 2.0, 3.0] {
        let s = spec(alpha, &[1.0]);
        let a = gaps(&s, &[1.0], 2e-3, &[8.0]);
        let b = gaps(&s, &[1.0], 1e-3, &[8.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 5e-3, "n=1 α={alpha}: {a:?} vs {b:?}");
        }

        let s = spec(alpha, &[1.0, 4.0]);
        let a = gaps(&s, &[1.0, 4.0], 0.1, &[8.0, 16.0]);
        let b = gaps(&s, &[1.0, 4.0], 0.05, &[8.0, 16.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 5e-3, "n=2 α={alpha}: {a:?} vs {b:?}");
        }
    }
}
