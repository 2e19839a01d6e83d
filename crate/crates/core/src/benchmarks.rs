//! Synthetic objectives rescaled to the unit hypercube, with known minima.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sobol::params::JoeKuoD6;
use sobol::Sobol;

use crate::error::{FitboError, Result};

/// Known global minimisers (unit-cube coordinates) and minimum value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub minimisers: Vec<Vec<f64>>,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Benchmark {
    Branin,
    Eggholder,
    Hartmann6,
}

const HARTMANN_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HARTMANN_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

impl Benchmark {
    pub const ALL: [Benchmark; 3] = [
        Benchmark::Branin,
        Benchmark::Eggholder,
        Benchmark::Hartmann6,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Benchmark::Branin => "branin",
            Benchmark::Eggholder => "eggholder",
            Benchmark::Hartmann6 => "hartmann6",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Benchmark::Branin | Benchmark::Eggholder => 2,
            Benchmark::Hartmann6 => 6,
        }
    }

    /// Native box as (lower, upper) per coordinate.
    pub fn native_bounds(&self) -> Vec<(f64, f64)> {
        match self {
            Benchmark::Branin => vec![(-5.0, 10.0), (0.0, 15.0)],
            Benchmark::Eggholder => vec![(-512.0, 512.0); 2],
            Benchmark::Hartmann6 => vec![(0.0, 1.0); 6],
        }
    }

    pub fn to_native(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.native_bounds())
            .map(|(u, (lo, hi))| lo + u * (hi - lo))
            .collect()
    }

    pub fn from_native(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.native_bounds())
            .map(|(v, (lo, hi))| (v - lo) / (hi - lo))
            .collect()
    }

    /// Objective at a unit-cube point.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(FitboError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if let Some(v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(FitboError::Argument(format!(
                "{} input coordinate {v} outside [0, 1]",
                self.name()
            )));
        }
        Ok(self.native_value(&self.to_native(x)))
    }

    /// Formula on the native domain; no bounds checks.
    pub fn native_value(&self, x: &[f64]) -> f64 {
        match self {
            Benchmark::Branin => {
                let (x1, x2) = (x[0], x[1]);
                let b = 5.1 / (4.0 * PI * PI);
                let c = 5.0 / PI;
                let t = 1.0 / (8.0 * PI);
                let q = x2 - b * x1 * x1 + c * x1 - 6.0;
                q * q + 10.0 * (1.0 - t) * x1.cos() + 10.0
            }
            Benchmark::Eggholder => {
                let (x1, x2) = (x[0], x[1]);
                -(x2 + 47.0) * (x2 + 0.5 * x1 + 47.0).abs().sqrt().sin()
                    - x1 * (x1 - (x2 + 47.0)).abs().sqrt().sin()
            }
            Benchmark::Hartmann6 => {
                let mut total = 0.0;
                for i in 0..4 {
                    let mut inner = 0.0;
                    for j in 0..6 {
                        let r = x[j] - HARTMANN_P[i][j];
                        inner += HARTMANN_A[i][j] * r * r;
                    }
                    total += HARTMANN_ALPHA[i] * (-inner).exp();
                }
                -total
            }
        }
    }

    /// Stored ground truth. Certified against [`truth_oracle`] by the tests.
    pub fn truth(&self) -> Truth {
        match self {
            Benchmark::Branin => {
                let mins = [(-PI, 12.275), (PI, 2.275), (3.0 * PI, 2.475)];
                Truth {
                    minimisers: mins
                        .iter()
                        .map(|(a, b)| self.from_native(&[*a, *b]))
                        .collect(),
                    value: 10.0 / (8.0 * PI),
                }
            }
            Benchmark::Eggholder => Truth {
                minimisers: vec![self.from_native(&[512.0, 404.2319])],
                value: -959.6407,
            },
            Benchmark::Hartmann6 => Truth {
                minimisers: vec![vec![
                    0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573,
                ]],
                value: -3.32237,
            },
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = FitboError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "branin" => Ok(Benchmark::Branin),
            "eggholder" => Ok(Benchmark::Eggholder),
            "hartmann6" | "hartmann" => Ok(Benchmark::Hartmann6),
            other => Err(FitboError::Argument(format!(
                "unknown benchmark '{other}' (expected branin, eggholder, hartmann6)"
            ))),
        }
    }
}

/// Minimisers and minimum found by brute force.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub minimisers: Vec<Vec<f64>>,
    /// Refined value at each minimiser.
    pub values: Vec<f64>,
    pub minimum: f64,
}

/// Compass search inside the unit cube, halving the step until `min_step`.
pub fn compass_refine<F: Fn(&[f64]) -> f64>(
    f: F,
    start: &[f64],
    step: f64,
    min_step: f64,
) -> (Vec<f64>, f64) {
    let mut x = start.to_vec();
    let mut fx = f(&x);
    let mut step = step;
    while step >= min_step {
        let mut improved = false;
        for k in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut y = x.clone();
                y[k] = (y[k] + dir * step).clamp(0.0, 1.0);
                if y[k] == x[k] {
                    continue;
                }
                let fy = f(&y);
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}

/// Brute-force certification of a benchmark's minima.
///
/// Two-dimensional problems are scanned on a `resolution`² grid; every grid
/// local minimum is refined by compass search and those matching the best
/// refined value within 1e−5 (relative to max(1, |min|)) are kept. Higher
/// dimensions draw `resolution` Sobol probes and refine the best ten.
pub fn truth_oracle(bench: Benchmark, resolution: usize) -> Result<OracleResult> {
    let f = |x: &[f64]| bench.native_value(&bench.to_native(x));
    let d = bench.dim();
    let mut refined: Vec<(Vec<f64>, f64)> = Vec::new();
    if d == 2 {
        if resolution < 100 {
            return Err(FitboError::Argument(format!(
                "grid oracle needs at least 100 points per axis, got {resolution}"
            )));
        }
        let r = resolution;
        let h = 1.0 / (r - 1) as f64;
        let grid: Vec<f64> = (0..r * r)
            .map(|idx| f(&[(idx / r) as f64 * h, (idx % r) as f64 * h]))
            .collect();
        for i in 0..r {
            for j in 0..r {
                let v = grid[i * r + j];
                let mut local_min = true;
                'nb: for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        let (ni, nj) = (i as i64 + di, j as i64 + dj);
                        if (di, dj) == (0, 0)
                            || ni < 0
                            || nj < 0
                            || ni >= r as i64
                            || nj >= r as i64
                        {
                            continue;
                        }
                        if grid[ni as usize * r + nj as usize] < v {
                            local_min = false;
                            break 'nb;
                        }
                    }
                }
                if local_min {
                    let start = [i as f64 * h, j as f64 * h];
                    refined.push(compass_refine(f, &start, h, 1e-13));
                }
            }
        }
    } else {
        if resolution == 0 {
            return Err(FitboError::Argument("need at least one probe".into()));
        }
        let params = JoeKuoD6::minimal();
        let mut probes: Vec<(f64, Vec<f64>)> = Sobol::<f64>::new(d, &params)
            .take(resolution)
            .map(|p| (f(&p), p))
            .collect();
        probes.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (_, p) in probes.iter().take(10) {
            refined.push(compass_refine(f, p, 0.05, 1e-13));
        }
    }
    let best = refined
        .iter()
        .map(|(_, v)| *v)
        .fold(f64::INFINITY, f64::min);
    let tol = 1e-5 * best.abs().max(1.0);
    let mut minimisers: Vec<Vec<f64>> = Vec::new();
    let mut values = Vec::new();
    for (x, v) in refined {
        if v > best + tol {
            continue;
        }
        let seen = minimisers.iter().any(|m| {
            m.iter()
                .zip(&x)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
                < 1e-3
        });
        if !seen {
            minimisers.push(x);
            values.push(v);
        }
    }
    Ok(OracleResult {
        minimisers,
        values,
        minimum: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn branin_at_native_minimum() {
        assert_abs_diff_eq!(
            Benchmark::Branin.native_value(&[PI, 2.275]),
            0.397887,
            epsilon = 1e-5
        );
    }

    #[test]
    fn eggholder_at_native_minimum() {
        assert_abs_diff_eq!(
            Benchmark::Eggholder.native_value(&[512.0, 404.2319]),
            -959.6407,
            epsilon = 1e-3
        );
        let t = Benchmark::Eggholder.truth();
        assert_eq!(t.minimisers[0][0], 1.0);
        assert!(Benchmark::Eggholder.evaluate(&t.minimisers[0]).is_ok());
    }

    #[test]
    fn hartmann_at_standard_minimiser() {
        let t = Benchmark::Hartmann6.truth();
        let v = Benchmark::Hartmann6.evaluate(&t.minimisers[0]).unwrap();
        assert_abs_diff_eq!(v, -3.32237, epsilon = 1e-4);
    }

    #[test]
    fn rescaling_round_trips() {
        for b in Benchmark::ALL {
            let x: Vec<f64> = (0..b.dim())
                .map(|i| (i as f64 * 0.37 + 0.1) % 1.0)
                .collect();
            let back = b.from_native(&b.to_native(&x));
            for (u, v) in x.iter().zip(&back) {
                assert_abs_diff_eq!(u, v, epsilon = 1e-12);
            }
            let direct = b.native_value(&b.to_native(&x));
            assert_eq!(b.evaluate(&x).unwrap(), direct);
        }
    }

    #[test]
    fn rejects_points_outside_the_cube() {
        assert!(Benchmark::Branin.evaluate(&[1.1, 0.5]).is_err());
        assert!(Benchmark::Branin.evaluate(&[0.5]).is_err());
        assert!(Benchmark::Hartmann6.evaluate(&[-0.1; 6]).is_err());
    }

    #[test]
    fn stored_minimisers_attain_stored_value() {
        for b in Benchmark::ALL {
            let t = b.truth();
            for m in &t.minimisers {
                let v = b.evaluate(m).unwrap();
                assert!(
                    (v - t.value).abs() <= 1e-3 * t.value.abs().max(1.0),
                    "{b}: {v}"
                );
            }
        }
    }

    #[test]
    fn names_parse() {
        for b in Benchmark::ALL {
            assert_eq!(b.name().parse::<Benchmark>().unwrap(), b);
        }
        assert!("boston".parse::<Benchmark>().is_err());
    }

    #[test]
    fn compass_search_finds_quadratic_minimum() {
        let (x, v) = compass_refine(
            |x| (x[0] - 0.3).powi(2) + (x[1] - 0.8).powi(2),
            &[0.5, 0.5],
            0.1,
            1e-12,
        );
        assert!(v < 1e-20);
        assert_abs_diff_eq!(x[0], 0.3, epsilon = 1e-10);
    }
}
