//! End-to-end fits through the public API: recovery, weighting, padding,
//! instrumentation, and the termination statuses the CLI relies on.

use approx::assert_relative_eq;
use trustfit::builtin::{Exponential, Gaussian2d, Linear, Polynomial};
use trustfit::datagen::{generate_image, Gaussian2dParams, ParamRanges};
use trustfit::linalg::Matrix;
use trustfit::padding::pad_and_mask;
use trustfit::solver::{fit_masked, Clock};
use trustfit::{fit, fit_instrumented, Dataset, Error, FitOptions, FitStatus, WeightSpec};

fn exponential_data() -> Dataset {
    // Truth [2, -0.7, 0.25] with a small deterministic ripple standing in
    // for noise.
    let t: Vec<f64> = (0..120).map(|i| i as f64 * 0.05).collect();
    let z: Vec<f64> = t
        .iter()
        .enumerate()
        .map(|(i, t)| 2.0 * (-0.7 * t).exp() + 0.25 + 0.01 * (17.0 * i as f64).sin())
        .collect();
    Dataset::new(t, z).unwrap()
}

#[test]
fn exponential_recovery_through_noise() {
    let data = exponential_data();
    let result = fit(
        &Exponential,
        &data,
        &[1.0, -0.3, 0.0],
        &FitOptions::default(),
        &WeightSpec::Unweighted,
    )
    .unwrap();
    assert!(result.status.converged());
    assert_relative_eq!(result.x_opt[0], 2.0, max_relative = 0.02);
    assert_relative_eq!(result.x_opt[1], -0.7, max_relative = 0.02);
    assert_relative_eq!(result.x_opt[2], 0.25, max_relative = 0.05);
    for pair in result.cost_history.windows(2) {
        assert!(pair[1] <= pair[0]);
    }
    assert_eq!(result.residuals.len(), data.len());
}

#[test]
fn polynomial_fit_is_exact_on_polynomial_data() {
    let truth = [0.5, -1.0, 0.25, 2.0]; // 0.5 - y + 0.25 y^2 + 2 y^3
    let y: Vec<f64> = (0..15).map(|i| (i as f64 - 7.0) * 0.3).collect();
    let z: Vec<f64> = y
        .iter()
        .map(|y| truth[0] + truth[1] * y + truth[2] * y * y + truth[3] * y * y * y)
        .collect();
    let data = Dataset::new(y, z).unwrap();
    let result = fit(
        &Polynomial { degree: 3 },
        &data,
        &[1.0, 1.0, 1.0, 1.0],
        &FitOptions::default(),
        &WeightSpec::Unweighted,
    )
    .unwrap();
    assert!(result.status.converged());
    for (got, want) in result.x_opt.iter().zip(&truth) {
        assert_relative_eq!(got, want, max_relative = 1e-8);
    }
}

#[test]
fn large_sigma_downweights_an_outlier() {
    let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
    let mut z: Vec<f64> = y.iter().map(|v| 2.0 * v - 1.0).collect();
    z[9] += 50.0; // gross outlier
    let data = Dataset::new(y, z).unwrap();

    let mut sigmas = vec![0.1; 10];
    sigmas[9] = 1e4;

    let weighted = fit(
        &Linear,
        &data,
        &[1.0, 0.0],
        &FitOptions::default(),
        &WeightSpec::Diagonal(sigmas),
    )
    .unwrap();
    assert!(weighted.status.converged());
    assert_relative_eq!(weighted.x_opt[0], 2.0, max_relative = 1e-5);
    assert_relative_eq!(weighted.x_opt[1], -1.0, max_relative = 1e-4);

    let unweighted = fit(
        &Linear,
        &data,
        &[1.0, 0.0],
        &FitOptions::default(),
        &WeightSpec::Unweighted,
    )
    .unwrap();
    assert!((unweighted.x_opt[0] - 2.0).abs() > 0.1); // outlier drags the slope
}

#[test]
fn diagonal_covariance_agrees_with_sigma_weighting() {
    let data = exponential_data();
    let sigmas: Vec<f64> = (0..data.len()).map(|i| 0.05 + 0.001 * i as f64).collect();
    let cov_diag = {
        let v = data.len();
        let mut c = Matrix::zeros(v, v);
        for (i, s) in sigmas.iter().enumerate() {
            c[(i, i)] = s * s;
        }
        c
    };
    let opts = FitOptions::default();
    let a = fit(
        &Exponential,
        &data,
        &[1.0, -0.3, 0.0],
        &opts,
        &WeightSpec::Diagonal(sigmas),
    )
    .unwrap();
    let b = fit(
        &Exponential,
        &data,
        &[1.0, -0.3, 0.0],
        &opts,
        &WeightSpec::Covariance(cov_diag),
    )
    .unwrap();
    assert!(a.status.converged() && b.status.converged());
    for (pa, pb) in a.x_opt.iter().zip(&b.x_opt) {
        assert_relative_eq!(pa, pb, max_relative = 1e-12);
    }
    assert_eq!(a.iterations, b.iterations);
}

#[test]
// Index-symmetric oracle sums read better as plain loops.
#[allow(clippy::needless_range_loop)]
fn correlated_covariance_matches_the_normal_equations() {
    // C = a I + b 11^T, whose inverse is (1/a) I - (b / (a (a + v b))) 11^T.
    let (a_c, b_c) = (0.04, 0.01);
    let v = 5usize;
    let y: Vec<f64> = (0..v).map(|i| i as f64).collect();
    let ripple = [0.05, -0.02, 0.01, 0.03, -0.04];
    let z: Vec<f64> = y
        .iter()
        .zip(&ripple)
        .map(|(y, e)| 1.5 * y - 0.5 + e)
        .collect();

    let mut c = Matrix::zeros(v, v);
    for i in 0..v {
        for j in 0..v {
            c[(i, j)] = b_c + if i == j { a_c } else { 0.0 };
        }
    }

    // Generalized least squares by Cramer's rule on A^T W A x = A^T W z,
    // with A = [y | 1] and W = C^{-1} in closed form.
    let w_diag = 1.0 / a_c;
    let w_off = -b_c / (a_c * (a_c + v as f64 * b_c));
    let w = |i: usize, j: usize| w_off + if i == j { w_diag } else { 0.0 };
    let col = |k: usize, i: usize| if k == 0 { y[i] } else { 1.0 };
    let mut m = [[0.0; 2]; 2];
    let mut rhs = [0.0; 2];
    for i in 0..v {
        for j in 0..v {
            let wij = w(i, j);
            for p in 0..2 {
                for q in 0..2 {
                    m[p][q] += col(p, i) * wij * col(q, j);
                }
                rhs[p] += col(p, i) * wij * z[j];
            }
        }
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let expect = [
        (rhs[0] * m[1][1] - rhs[1] * m[0][1]) / det,
        (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det,
    ];

    let result = fit(
        &Linear,
        &Dataset::new(y, z).unwrap(),
        &[1.0, 0.0],
        &FitOptions::default(),
        &WeightSpec::Covariance(c),
    )
    .unwrap();
    assert!(result.status.converged());
    assert_relative_eq!(result.x_opt[0], expect[0], max_relative = 1e-10);
    assert_relative_eq!(result.x_opt[1], expect[1], max_relative = 1e-10);
}

#[test]
fn padding_leaves_the_fit_bitwise_unchanged() {
    let image = generate_image(&ParamRanges::default(), 8, 0.05, 21, 2).unwrap();
    let data = image.dataset().unwrap();
    let seed = {
        let mut s = image.truth.to_array();
        for v in s.iter_mut() {
            *v *= 1.1;
        }
        s
    };
    let opts = FitOptions::default();
    let raw = fit(&Gaussian2d, &data, &seed, &opts, &WeightSpec::Unweighted).unwrap();
    assert!(raw.status.converged());

    for size in [64, 65, 128] {
        let padded_opts = FitOptions {
            fixed_size: Some(size),
            ..opts.clone()
        };
        let padded = fit(
            &Gaussian2d,
            &data,
            &seed,
            &padded_opts,
            &WeightSpec::Unweighted,
        )
        .unwrap();
        // Bitwise identity: every field, including the per-iteration traces.
        assert_eq!(raw, padded, "padded size {size} changed the fit");
    }
}

#[test]
fn premasked_fit_equals_internal_padding() {
    let image = generate_image(&ParamRanges::default(), 6, 0.02, 33, 0).unwrap();
    let data = image.dataset().unwrap();
    let seed = image.truth.to_array().map(|v| v * 0.9);
    let opts = FitOptions {
        fixed_size: Some(50),
        ..FitOptions::default()
    };
    let through_options = fit(&Gaussian2d, &data, &seed, &opts, &WeightSpec::Unweighted).unwrap();

    let masked = pad_and_mask(&data, 50).unwrap();
    let through_mask = fit_masked(
        &Gaussian2d,
        &masked,
        &seed,
        &FitOptions::default(),
        &WeightSpec::Unweighted,
    )
    .unwrap();
    assert_eq!(through_options, through_mask);
}

#[test]
fn covariance_weighting_rejects_padding() {
    let y: Vec<f64> = (0..4).map(|i| i as f64).collect();
    let z: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
    let data = Dataset::new(y, z).unwrap();
    let opts = FitOptions {
        fixed_size: Some(8),
        ..FitOptions::default()
    };
    let err = fit(
        &Linear,
        &data,
        &[1.0, 0.0],
        &opts,
        &WeightSpec::Covariance(Matrix::identity(4)),
    )
    .unwrap_err();
    assert_eq!(err, Error::CovarianceWithPadding);
}

struct CountingClock(std::cell::Cell<u64>);

impl Clock for CountingClock {
    fn now_ns(&self) -> u64 {
        let t = self.0.get() + 1_000;
        self.0.set(t);
        t
    }
}

#[test]
fn instrumented_fit_reports_phase_timings() {
    let data = exponential_data();
    let clock = CountingClock(std::cell::Cell::new(0));
    let (result, timings) = fit_instrumented(
        &Exponential,
        &data,
        &[1.0, -0.3, 0.0],
        &FitOptions::default(),
        &WeightSpec::Unweighted,
        &clock,
    )
    .unwrap();
    assert!(result.status.converged());
    assert!(timings.residual_ns > 0);
    assert!(timings.jacobian_ns > 0);
    assert!(timings.svd_ns > 0);
    assert!(timings.subproblem_ns > 0);
    let parts =
        timings.residual_ns + timings.jacobian_ns + timings.svd_ns + timings.subproblem_ns;
    assert!(parts <= timings.total_ns);
}

#[test]
fn iteration_cap_is_reported() {
    let data = exponential_data();
    let opts = FitOptions {
        max_iterations: Some(1),
        ..FitOptions::default()
    };
    let result = fit(
        &Exponential,
        &data,
        &[1.0, -0.3, 0.0],
        &opts,
        &WeightSpec::Unweighted,
    )
    .unwrap();
    assert_eq!(result.status, FitStatus::MaxIterations);
    assert_eq!(result.iterations, 1);
    assert!(!result.status.converged());
}

#[test]
fn status_names_are_stable() {
    assert_eq!(FitStatus::ConvergedFtol.as_str(), "converged-ftol");
    assert_eq!(FitStatus::ConvergedXtol.as_str(), "converged-xtol");
    assert_eq!(FitStatus::ConvergedGtol.as_str(), "converged-gtol");
    assert_eq!(FitStatus::MaxIterations.as_str(), "max-iterations");
    assert_eq!(FitStatus::NumericFailure.as_str(), "numeric-failure");
}

#[test]
fn gaussian_peak_parameters_are_recovered_from_an_image() {
    // A uniformly scaled seed can land in the width-swapped twin of the
    // truth (the surface is identical there), so recovery is judged on
    // canonical forms.
    let image = generate_image(&ParamRanges::default(), 16, 0.0, 7, 5).unwrap();
    let data = image.dataset().unwrap();
    let seed = image.truth.to_array().map(|v| v * 1.2);
    let result = fit(
        &Gaussian2d,
        &data,
        &seed,
        &FitOptions::default(),
        &WeightSpec::Unweighted,
    )
    .unwrap();
    assert!(result.status.converged());
    assert!(result.cost < 1e-18);
    let got = Gaussian2dParams::from_array([
        result.x_opt[0],
        result.x_opt[1],
        result.x_opt[2],
        result.x_opt[3],
        result.x_opt[4],
        result.x_opt[5],
        result.x_opt[6],
    ])
    .canonical();
    let want = image.truth.canonical();
    for (g, w) in got.to_array().iter().zip(want.to_array()) {
        assert_relative_eq!(*g, w, max_relative = 1e-6);
    }
}
