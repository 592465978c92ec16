//! Reference computations shared by the integration suites. Nothing here
//! calls into the simulator's own index or selection code.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::distribution::{ContinuousCDF, Normal};

/// Gauss–Hermite nodes and weights for `int f(x) exp(-x^2) dx` by the
/// Golub–Welsch eigenvalue method on the Hermite Jacobi matrix.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// `E[f(xi1, xi2)]` for independent `xi_l ~ Normal(mean_l, 1)` by a tensor
/// Gauss–Hermite rule of the given order.
pub fn gaussian_expectation_2d(order: usize, means: [f64; 2], f: impl Fn(f64, f64) -> f64) -> f64 {
    let (x, w) = gauss_hermite(order);
    let s2 = std::f64::consts::SQRT_2;
    let mut total = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        for (xj, wj) in x.iter().zip(&w) {
            total += wi * wj * f(means[0] + s2 * xi, means[1] + s2 * xj);
        }
    }
    total / std::f64::consts::PI
}

/// Expected pseudo-regret of UCB with `N = 3`, unit variances and exploration
/// `a`: the two forced pulls are integrated over and the third pull is
/// decided by comparing the index formula written out directly.
pub fn three_step_pseudo_regret(order: usize, means: [f64; 2], a: f64) -> f64 {
    let m_max = means[0].max(means[1]);
    let forced = (m_max - means[0]) + (m_max - means[1]);
    gaussian_expectation_2d(order, means, |xi1, xi2| {
        let bonus = (a * 3f64.ln()).sqrt();
        let u1 = xi1 + bonus;
        let u2 = xi2 + bonus;
        let third = if u1 > u2 { 0 } else { 1 };
        forced + (m_max - means[third])
    })
}

/// The same expectation with the second reward integrated out exactly:
/// given `xi1`, the third pull is wasted on arm 1 with probability
/// `P(xi2 < xi1) = Phi(xi1 - m2)` (equal bonuses cancel). The remaining
/// Gaussian integral over `xi1` has a smooth integrand, so Gauss–Hermite
/// converges quickly, unlike the tensor rule across the `xi1 = xi2` jump.
pub fn three_step_conditional(order: usize, means: [f64; 2]) -> f64 {
    assert!(means[1] >= means[0], "arm 2 is taken to be the better arm");
    let gap = means[1] - means[0];
    let phi = Normal::new(0.0, 1.0).unwrap();
    let (x, w) = gauss_hermite(order);
    let s2 = std::f64::consts::SQRT_2;
    let p_wrong: f64 = x
        .iter()
        .zip(&w)
        .map(|(xi, wi)| wi * phi.cdf(means[0] + s2 * xi - means[1]))
        .sum::<f64>()
        / std::f64::consts::PI.sqrt();
    gap * (1.0 + p_wrong)
}

/// Closed form of the same quantity: the third pull goes to arm 1 exactly
/// when `xi1 > xi2`.
pub fn three_step_closed_form(means: [f64; 2]) -> f64 {
    let gap = (means[1] - means[0]).abs();
    let phi = Normal::new(0.0, 1.0).unwrap();
    let p_wrong = phi.cdf(-gap / std::f64::consts::SQRT_2);
    gap * (1.0 + p_wrong)
}

/// Chosen-arm sequence of UCB on a bandit with zero variances, walked by hand.
pub fn zero_variance_walk(means: &[f64], horizon: usize) -> Vec<usize> {
    let j = means.len();
    let mut counts = vec![0usize; j];
    let mut seq = Vec::with_capacity(horizon);
    for step in 1..=horizon {
        let arm = if step <= j {
            step - 1
        } else {
            // zero variance: the index is the mean itself; ties to the later arm
            let mut best = 0;
            for l in 1..j {
                if means[l] >= means[best] {
                    best = l;
                }
            }
            best
        };
        counts[arm] += 1;
        seq.push(arm);
    }
    seq
}

/// The two-armed selection rule `I_1 = H(U_1 - U_2)` with `H(0) = 0`,
/// returning the zero-based arm index.
pub fn two_arm_rule(y: [f64; 2], usage: [f64; 2], t: f64, d: [f64; 2], a: f64) -> usize {
    let u = |l: usize| y[l] / usage[l] + (a * d[l] * (t / usage[l]).ln()).sqrt() / usage[l].sqrt();
    if u(0) - u(1) > 0.0 {
        0
    } else {
        1
    }
}
