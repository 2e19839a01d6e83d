//! The stored optima are only trusted after a brute-force search agrees.

use fitbo::benchmarks::{truth_oracle, Benchmark};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[test]
fn branin_has_three_certified_minimisers() {
    let oracle = truth_oracle(Benchmark::Branin, 400).unwrap();
    assert_eq!(oracle.minimisers.len(), 3);
    for i in 0..3 {
        for j in i + 1..3 {
            assert!(dist(&oracle.minimisers[i], &oracle.minimisers[j]) > 0.1);
            assert!((oracle.values[i] - oracle.values[j]).abs() < 1e-6);
        }
    }
    let truth = Benchmark::Branin.truth();
    assert!(oracle.minimum <= truth.value + 1e-4);
    assert!((oracle.minimum - truth.value).abs() < 1e-6);
    for found in &oracle.minimisers {
        let nearest = truth
            .minimisers
            .iter()
            .map(|t| dist(found, t))
            .fold(f64::INFINITY, f64::min);
        assert!(nearest < 1e-3, "{found:?}");
    }
}

#[test]
fn hartmann6_minimum_from_a_million_probes() {
    let oracle = truth_oracle(Benchmark::Hartmann6, 1_000_000).unwrap();
    let truth = Benchmark::Hartmann6.truth();
    assert!(oracle.minimum <= truth.value + 1e-4);
    assert!((oracle.minimum - truth.value).abs() < 1e-4);
    assert!(dist(&oracle.minimisers[0], &truth.minimisers[0]) < 1e-2);
}

#[test]
fn eggholder_optimum_sits_on_the_boundary() {
    let oracle = truth_oracle(Benchmark::Eggholder, 1024).unwrap();
    let truth = Benchmark::Eggholder.truth();
    assert!(oracle.minimum <= truth.value + 1e-4);
    assert!((oracle.minimum - truth.value).abs() < 1e-3);
    assert_eq!(truth.minimisers[0][0], 1.0);
}
