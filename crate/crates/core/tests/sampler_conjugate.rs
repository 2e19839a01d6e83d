//! Elliptical slice sampling against closed-form Gaussian posteriors.

use fitbo::hyper::{ess_step, EssState, PriorSpec, WhitenedParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Prior N(μ0, s0²) per coordinate, one observation y ~ N(z, σ²) each.
fn run_chain(prior: &PriorSpec, y: &[f64], sigma: f64, draws: usize, seed: u64) -> Vec<Vec<f64>> {
    let loglik = |z: &WhitenedParams| -> f64 {
        z.0.iter()
            .zip(y)
            .map(|(zi, yi)| -0.5 * (zi - yi).powi(2) / (sigma * sigma))
            .sum()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z0 = prior.mean_point();
    let mut state = EssState {
        loglik: loglik(&z0),
        z: z0,
    };
    for _ in 0..200 {
        state = ess_step(&state, prior, loglik, &mut rng).unwrap().state;
    }
    (0..draws)
        .map(|_| {
            state = ess_step(&state, prior, loglik, &mut rng).unwrap().state;
            state.z.0.clone()
        })
        .collect()
}

#[test]
fn recovers_posterior_moments_per_coordinate() {
    let prior = PriorSpec::new(vec![0.0, 2.0], vec![1.0, 0.5]).unwrap();
    let (y, sigma) = ([1.0, -1.0], 0.5);
    let draws = run_chain(&prior, &y, sigma, 20_000, 3);
    for k in 0..2 {
        let (m0, s0) = (prior.means[k], prior.stds[k]);
        let prec = 1.0 / (s0 * s0) + 1.0 / (sigma * sigma);
        let want_var = 1.0 / prec;
        let want_mean = want_var * (m0 / (s0 * s0) + y[k] / (sigma * sigma));
        let n = draws.len() as f64;
        let mean = draws.iter().map(|d| d[k]).sum::<f64>() / n;
        let var = draws.iter().map(|d| (d[k] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(
            (mean - want_mean).abs() < 0.05 * want_mean.abs().max(want_var.sqrt()),
            "{mean} {want_mean}"
        );
        assert!((var / want_var - 1.0).abs() < 0.05, "{var} {want_var}");
    }
}

#[test]
fn flat_likelihood_returns_the_prior() {
    let prior = PriorSpec::new(vec![-1.0], vec![2.0]).unwrap();
    let draws = run_chain(&prior, &[0.0], 1e6, 20_000, 8);
    let n = draws.len() as f64;
    let mean = draws.iter().map(|d| d[0]).sum::<f64>() / n;
    let var = draws.iter().map(|d| (d[0] - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((mean + 1.0).abs() < 0.1);
    assert!((var / 4.0 - 1.0).abs() < 0.05);
}
