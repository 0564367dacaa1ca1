use irsim_core::linalg::{is_hermitian_psd, rel_frobenius, CMat};
use irsim_core::scenario::{local_scattering_corr, upa_steering};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Probabilists' Gauss-Hermite rule (weight exp(-x^2/2), weights sum to 1)
/// from the Golub-Welsch eigenproblem.
fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            ((i.max(j)) as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut rule: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}

fn outer_average(dims: (usize, usize), spacing: f64, draws: impl Iterator<Item = (f64, f64, f64)>) -> CMat {
    let n = dims.0 * dims.1;
    let mut r = CMat::zeros(n, n);
    let mut total = 0.0;
    for (az, el, w) in draws {
        let a = upa_steering(dims, az, el, spacing);
        r += &a * a.adjoint() * Complex64::new(w, 0.0);
        total += w;
    }
    r / Complex64::new(total, 0.0)
}

#[test]
fn gauss_hermite_rule_integrates_moments() {
    let rule = gauss_hermite(20);
    let m = |k: i32| rule.iter().map(|(x, w)| w * x.powi(k)).sum::<f64>();
    assert!((m(0) - 1.0).abs() < 1e-13);
    assert!((m(2) - 1.0).abs() < 1e-12);
    assert!((m(4) - 3.0).abs() < 1e-11);
    assert!((m(6) - 15.0).abs() < 1e-9);
}

#[test]
fn matches_twenty_point_gauss_hermite_oracle() {
    let asd = 10f64.to_radians();
    let rule = gauss_hermite(20);
    let draws = rule
        .iter()
        .flat_map(|&(xa, wa)| rule.iter().map(move |&(xe, we)| (asd * xa, asd * xe, wa * we)));
    let oracle = outer_average((2, 2), 0.5, draws);
    let r = local_scattering_corr((2, 2), 0.0, 0.0, asd, asd, 0.5).unwrap();
    let worst = (&r - &oracle).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(worst < 1e-6, "max entry deviation {worst:e}");
}

#[test]
fn off_broadside_matches_gauss_hermite_oracle() {
    let (az0, el0) = (0.6, -0.2);
    let (sa, se) = (12f64.to_radians(), 5f64.to_radians());
    let rule = gauss_hermite(20);
    let draws = rule
        .iter()
        .flat_map(|&(xa, wa)| rule.iter().map(move |&(xe, we)| (az0 + sa * xa, el0 + se * xe, wa * we)));
    let oracle = outer_average((4, 2), 0.5, draws);
    let r = local_scattering_corr((4, 2), az0, el0, sa, se, 0.5).unwrap();
    let worst = (&r - &oracle).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(worst < 1e-6, "max entry deviation {worst:e}");
}

#[test]
fn large_spread_matches_gaussian_angle_monte_carlo() {
    let sigma = std::f64::consts::PI;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws = (0..100_000).map(|_| {
        let a: f64 = StandardNormal.sample(&mut rng);
        let e: f64 = StandardNormal.sample(&mut rng);
        (sigma * a, sigma * e, 1.0)
    });
    let mc = outer_average((2, 2), 0.5, draws.collect::<Vec<_>>().into_iter());
    let r = local_scattering_corr((2, 2), 0.0, 0.0, sigma, sigma, 0.5).unwrap();
    assert!(rel_frobenius(&r, &mc) < 0.02, "{}", rel_frobenius(&r, &mc));
}

#[test]
fn very_large_spread_approaches_uniform_angle_average() {
    // A Gaussian with a spread of several turns wraps to the uniform law.
    let sigma = 8.0 * std::f64::consts::PI;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let pi = std::f64::consts::PI;
    let draws: Vec<(f64, f64, f64)> = (0..100_000)
        .map(|_| (rng.random_range(-pi..pi), rng.random_range(-pi..pi), 1.0))
        .collect();
    let uniform = outer_average((2, 2), 0.5, draws.into_iter());
    let r = local_scattering_corr((2, 2), 0.3, 0.1, sigma, sigma, 0.5).unwrap();
    assert!(rel_frobenius(&r, &uniform) < 0.05, "{}", rel_frobenius(&r, &uniform));
    // Uniform arrival angles do not decorrelate a half-wavelength array:
    // the off-diagonal mass is far from zero.
    assert!(rel_frobenius(&r, &CMat::identity(4, 4)) > 0.05);
}

#[test]
fn every_produced_matrix_is_psd_with_unit_diagonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let dims = (rng.random_range(1..5), rng.random_range(1..5));
        let r = local_scattering_corr(
            dims,
            rng.random_range(-3.0..3.0),
            rng.random_range(-1.2..1.2),
            rng.random_range(0.01..1.0),
            rng.random_range(0.01..1.0),
            rng.random_range(0.1..0.6),
        )
        .unwrap();
        assert!(is_hermitian_psd(&r, 1e-10));
        for i in 0..r.nrows() {
            assert_eq!(r[(i, i)], Complex64::new(1.0, 0.0));
        }
    }
}
