//! Batch-evaluation runtime of acquisition functions against M and d.
//!
//! For every repetition a fresh 10-point design is drawn from a d-dimensional
//! Styblinski–Tang function, M hyperparameter samples are drawn once and then
//! every kind scores the same 100 uniform test points. Only the scoring is
//! timed, after one untimed single-point warm-up call per kind.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use fitbo::acquisition::{evaluate_batch, AcquisitionKind};
use fitbo::gp::Dataset;
use fitbo::hyper::{sample_posterior, PriorSpec, SamplerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, Result};
use crate::output::{format_runtime, write_file, RuntimeRow};
use crate::stats::mean_std;

pub const DESIGN_SIZE: usize = 10;
pub const TEST_POINTS: usize = 100;

#[derive(Debug, Clone)]
pub struct RuntimeConfig {
    pub kinds: Vec<AcquisitionKind>,
    pub m_list: Vec<usize>,
    pub d_list: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    /// Report file; nothing is written when absent.
    pub out: Option<PathBuf>,
}

impl RuntimeConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(CliError::Usage(msg.to_string()));
        if self.kinds.is_empty() || self.m_list.is_empty() || self.d_list.is_empty() {
            return fail("--acq-list, --m-list and --d-list must be non-empty");
        }
        if self.reps == 0 {
            return fail("--reps must be at least 1");
        }
        if self.m_list.contains(&0) || self.d_list.contains(&0) {
            return fail("M and d must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeReport {
    pub rows: Vec<RuntimeRow>,
}

impl RuntimeReport {
    pub fn mean(&self, kind: &str, m: usize, d: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.kind == kind && r.m == m && r.d == d)
            .map(|r| r.mean_s)
    }
}

/// Styblinski–Tang on [0, 1]^d (native box [−5, 5]^d), divided by d.
pub fn styblinski_tang(u: &[f64]) -> f64 {
    let s: f64 = u
        .iter()
        .map(|ui| {
            let x = 10.0 * ui - 5.0;
            x.powi(4) - 16.0 * x * x + 5.0 * x
        })
        .sum();
    0.5 * s / u.len() as f64
}

fn uniform_points(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
        .collect()
}

/// Seconds per kind for one repetition at (M, d).
pub fn time_once(kinds: &[AcquisitionKind], m: usize, d: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = uniform_points(DESIGN_SIZE, d, &mut rng);
    let ys: Vec<f64> = xs.iter().map(|x| styblinski_tang(x)).collect();
    let ds = Arc::new(Dataset::new(d, &xs, &ys).map_err(|e| CliError::Runtime(e.to_string()))?);
    let sampler = SamplerConfig {
        samples: m,
        ..SamplerConfig::default()
    };
    let hs = sample_posterior(ds, &PriorSpec::default_for(d), &sampler, &mut rng)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let test = uniform_points(TEST_POINTS, d, &mut rng);
    kinds
        .iter()
        .map(|kind| {
            // untimed single-point call so first-touch costs stay out of the batch
            evaluate_batch(&test[..1], &hs, *kind).map_err(|e| CliError::Runtime(e.to_string()))?;
            let start = Instant::now();
            let values = evaluate_batch(&test, &hs, *kind);
            let elapsed = start.elapsed().as_secs_f64();
            std::hint::black_box(values).map_err(|e| CliError::Runtime(e.to_string()))?;
            Ok(elapsed)
        })
        .collect()
}

/// Runs the whole grid on the calling thread so timings do not compete.
pub fn cmd_bench_runtime(cfg: &RuntimeConfig) -> Result<RuntimeReport> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &d in &cfg.d_list {
        for &m in &cfg.m_list {
            let mut times = vec![Vec::with_capacity(cfg.reps); cfg.kinds.len()];
            for rep in 0..cfg.reps {
                let seed = cfg
                    .seed
                    .wrapping_add(rep as u64)
                    .wrapping_add((d as u64) << 32)
                    .wrapping_add((m as u64) << 16);
                for (k, t) in time_once(&cfg.kinds, m, d, seed)?.into_iter().enumerate() {
                    times[k].push(t);
                }
            }
            for (kind, t) in cfg.kinds.iter().zip(&times) {
                let (mean_s, std_s) = mean_std(t).expect("reps >= 1");
                log::info!("{} M={m} d={d}: {mean_s:.4}s ± {std_s:.4}", kind.name());
                rows.push(RuntimeRow {
                    kind: kind.name().to_string(),
                    m,
                    d,
                    reps: cfg.reps,
                    mean_s,
                    std_s,
                });
            }
        }
    }
    let report = RuntimeReport { rows };
    if let Some(path) = &cfg.out {
        write_file(path, &format_runtime(&report.rows)?)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn styblinski_tang_minimum() {
        // native minimiser −2.903534 in every coordinate, value −39.16617 per dimension
        let u = (-2.903534 + 5.0) / 10.0;
        for d in [1, 4] {
            assert!((styblinski_tang(&vec![u; d]) + 39.166166).abs() < 1e-5);
        }
    }

    #[test]
    fn report_rows_cover_the_grid() {
        let cfg = RuntimeConfig {
            kinds: vec![AcquisitionKind::FitboMm, AcquisitionKind::Pi { xi: 0.0 }],
            m_list: vec![2, 3],
            d_list: vec![1],
            reps: 2,
            seed: 0,
            out: None,
        };
        let report = cmd_bench_runtime(&cfg).unwrap();
        assert_eq!(report.rows.len(), 4);
        assert!(report.rows.iter().all(|r| r.mean_s > 0.0 && r.reps == 2));
        assert!(report.mean("pi", 3, 1).is_some());
    }
}
