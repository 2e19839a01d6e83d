//! The outer optimisation loop: acquisition maximisation, querying, refitting,
//! recommendation, and the immediate-regret / distance metrics.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sobol::params::JoeKuoD6;
use sobol::Sobol;

use crate::acquisition::{Acquisition, AcquisitionKind};
use crate::benchmarks::{Benchmark, Truth};
use crate::error::{FitboError, Result};
use crate::gp::{Dataset, Scratch};
use crate::hyper::{sample_posterior, HyperSampleSet, PriorSpec, SamplerConfig};

/// Number of candidates refined by pattern search.
const REFINE_STARTS: usize = 5;
const MIN_STEP: f64 = 1e-7;

type Objective = dyn Fn(&[f64]) -> Result<f64> + Send + Sync;

/// A black-box objective on the unit hypercube.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub dim: usize,
    objective: Arc<Objective>,
    pub noise_std: f64,
    pub truth: Option<Truth>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("noise_std", &self.noise_std)
            .field("truth", &self.truth)
            .finish()
    }
}

impl Problem {
    pub fn new<F>(name: impl Into<String>, dim: usize, objective: F, noise_std: f64) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(FitboError::Argument(
                "problem dimension must be positive".into(),
            ));
        }
        if !(noise_std >= 0.0) || !noise_std.is_finite() {
            return Err(FitboError::Argument(format!(
                "noise std {noise_std} must be >= 0"
            )));
        }
        Ok(Self {
            name: name.into(),
            dim,
            objective: Arc::new(objective),
            noise_std,
            truth: None,
        })
    }

    pub fn with_truth(mut self, truth: Truth) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn from_benchmark(bench: Benchmark, noise_std: f64) -> Result<Self> {
        Ok(Self::new(
            bench.name(),
            bench.dim(),
            move |x| bench.evaluate(x),
            noise_std,
        )?
        .with_truth(bench.truth()))
    }

    /// Noise-free objective value.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        (self.objective)(x)
    }
}

/// |f* − f(x̂)| under the noise-free objective; `None` without ground truth.
pub fn immediate_regret(problem: &Problem, recommendation: &[f64]) -> Result<Option<f64>> {
    match &problem.truth {
        None => Ok(None),
        Some(t) => Ok(Some((t.value - problem.value(recommendation)?).abs())),
    }
}

/// Distance from x̂ to the nearest known global minimiser.
pub fn l2_distance(recommendation: &[f64], truth: Option<&Truth>) -> Option<f64> {
    truth.map(|t| {
        t.minimisers
            .iter()
            .map(|m| {
                m.iter()
                    .zip(recommendation)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    })
}

/// Best point found by [`maximize_acquisition`].
#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Multi-start maximisation over [0, 1]^dim.
///
/// Half the budget scores a randomly shifted Sobol set; the rest runs compass
/// pattern search from the five best candidates. NaN scores count as −∞.
pub fn maximize_acquisition<F, R>(mut alpha: F, dim: usize, budget: usize, rng: &mut R) -> Maximum
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let budget = budget.max(1);
    let mut score = |x: &[f64]| {
        let v = alpha(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let n_cand = (budget / 2).max(1);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let params = JoeKuoD6::minimal();
    let mut cands: Vec<(f64, Vec<f64>)> = Sobol::<f64>::new(dim, &params)
        .take(n_cand)
        .map(|p| {
            let x: Vec<f64> = p
                .iter()
                .zip(&shift)
                .map(|(a, s)| {
                    let v = a + s;
                    if v >= 1.0 {
                        v - 1.0
                    } else {
                        v
                    }
                })
                .collect();
            (score(&x), x)
        })
        .collect();
    let mut used = cands.len();
    // stable sort keeps the earlier Sobol point on ties
    cands.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = cands[0].clone();

    let remaining = budget.saturating_sub(used);
    let starts = cands.len().min(REFINE_STARTS);
    let initial_step = 0.5 * (n_cand as f64).powf(-1.0 / dim as f64);
    for (k, (v0, x0)) in cands.iter().take(starts).enumerate() {
        let mut allowance = remaining / starts + usize::from(k < remaining % starts);
        let mut x = x0.clone();
        let mut fx = *v0;
        let mut step = initial_step;
        'search: while step >= MIN_STEP {
            let mut improved = false;
            for coord in 0..dim {
                for dir in [1.0, -1.0] {
                    let mut y = x.clone();
                    y[coord] = (y[coord] + dir * step).clamp(0.0, 1.0);
                    if y[coord] == x[coord] {
                        continue;
                    }
                    if allowance == 0 {
                        break 'search;
                    }
                    allowance -= 1;
                    used += 1;
                    let fy = score(&y);
                    if fy > fx {
                        x = y;
                        fx = fy;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if fx > best.0 {
            best = (fx, x);
        }
    }
    Maximum {
        x: best.1,
        value: best.0,
        evaluations: used,
    }
}

/// Minimiser of the sample-averaged posterior mean of f.
pub fn recommend<R: Rng + ?Sized>(hs: &HyperSampleSet, budget: usize, rng: &mut R) -> Vec<f64> {
    let mut scratch = Scratch::with_capacity(hs.dataset().len());
    let inv_m = 1.0 / hs.len() as f64;
    let mean = |x: &[f64], s: &mut Scratch| -> f64 {
        hs.samples()
            .iter()
            .map(|w| w.mean_f_with(x, s))
            .sum::<f64>()
            * inv_m
    };
    maximize_acquisition(|x| -mean(x, &mut scratch), hs.dim(), budget, rng).x
}

/// Outer-loop settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoConfig {
    pub iters: usize,
    pub init_count: usize,
    pub sampler: SamplerConfig,
    /// Defaults to [`PriorSpec::default_for`] when absent.
    pub prior: Option<PriorSpec>,
    pub acq_budget: usize,
    pub rec_budget: usize,
}

impl BoConfig {
    pub fn new(iters: usize, init_count: usize) -> Self {
        Self {
            iters,
            init_count,
            sampler: SamplerConfig {
                samples: 200,
                ..SamplerConfig::default()
            },
            prior: None,
            acq_budget: 2000,
            rec_budget: 2000,
        }
    }

    /// Initial design size used for a benchmark: 3 for 2-D problems, 9 for
    /// Hartmann-6.
    pub fn default_init_count(dim: usize) -> usize {
        if dim >= 6 {
            9
        } else {
            3
        }
    }
}

/// Wall-clock breakdown of one iteration, in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub sampling: f64,
    pub acquisition: f64,
    pub recommendation: f64,
    pub objective: f64,
}

/// Deterministic work counters for one iteration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub acquisition_evals: usize,
    pub loglik_evals: usize,
    pub conditioning_failures: usize,
}

/// One completed iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub query: Vec<f64>,
    pub observation: f64,
    /// Acquisition value at the query; absent for random search.
    pub acquisition_value: Option<f64>,
    pub recommendation: Vec<f64>,
    pub ir: Option<f64>,
    pub l2: Option<f64>,
    pub counts: EvalCounts,
    /// Not serialised: wall-clock numbers would break byte-identical traces.
    #[serde(skip)]
    pub timing: Timing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoTrace {
    pub problem: String,
    pub acquisition: String,
    pub seed: u64,
    pub initial_x: Vec<Vec<f64>>,
    pub initial_y: Vec<f64>,
    pub records: Vec<IterationRecord>,
}

impl BoTrace {
    pub fn ir_curve(&self) -> Vec<Option<f64>> {
        self.records.iter().map(|r| r.ir).collect()
    }

    pub fn l2_curve(&self) -> Vec<Option<f64>> {
        self.records.iter().map(|r| r.l2).collect()
    }
}

/// A run that stopped early, with everything completed before the failure.
#[derive(Debug, Clone)]
pub struct BoFailure {
    pub trace: BoTrace,
    pub error: FitboError,
}

impl fmt::Display for BoFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "run stopped after {} iterations: {}",
            self.trace.records.len(),
            self.error
        )
    }
}

impl std::error::Error for BoFailure {}

/// Recomputes (IR, L2) from stored recommendations.
pub fn recompute_metrics(
    trace: &BoTrace,
    problem: &Problem,
) -> Result<Vec<(Option<f64>, Option<f64>)>> {
    trace
        .records
        .iter()
        .map(|r| {
            Ok((
                immediate_regret(problem, &r.recommendation)?,
                l2_distance(&r.recommendation, problem.truth.as_ref()),
            ))
        })
        .collect()
}

fn observe<R: Rng + ?Sized>(problem: &Problem, x: &[f64], rng: &mut R) -> Result<f64> {
    let f = problem.value(x)?;
    if !f.is_finite() {
        return Err(FitboError::Objective(format!(
            "non-finite value {f} at {x:?}"
        )));
    }
    let e: f64 = StandardNormal.sample(rng);
    Ok(f + problem.noise_std * e)
}

fn uniform_point<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.random::<f64>()).collect()
}

struct Loop<'p> {
    problem: &'p Problem,
    trace: BoTrace,
    rng: ChaCha8Rng,
    data: Option<Dataset>,
}

impl<'p> Loop<'p> {
    fn start(
        problem: &'p Problem,
        acquisition: &str,
        init_count: usize,
        seed: u64,
    ) -> std::result::Result<Self, BoFailure> {
        let mut lp = Loop {
            problem,
            trace: BoTrace {
                problem: problem.name.clone(),
                acquisition: acquisition.to_string(),
                seed,
                initial_x: Vec::new(),
                initial_y: Vec::new(),
                records: Vec::new(),
            },
            rng: ChaCha8Rng::seed_from_u64(seed),
            data: None,
        };
        for _ in 0..init_count {
            let x = uniform_point(problem.dim, &mut lp.rng);
            let y = lp.guard(|lp| observe(lp.problem, &x, &mut lp.rng))?;
            lp.append(&x, y).map_err(|e| lp.fail(e))?;
            lp.trace.initial_x.push(x);
            lp.trace.initial_y.push(y);
        }
        Ok(lp)
    }

    fn append(&mut self, x: &[f64], y: f64) -> Result<()> {
        match &mut self.data {
            Some(ds) => ds.push(x, y),
            None => {
                self.data = Some(Dataset::new(self.problem.dim, &[x.to_vec()], &[y])?);
                Ok(())
            }
        }
    }

    fn dataset(&self) -> Arc<Dataset> {
        Arc::new(self.data.clone().expect("initial design is non-empty"))
    }

    fn fail(&self, error: FitboError) -> BoFailure {
        BoFailure {
            trace: self.trace.clone(),
            error,
        }
    }

    fn guard<T>(
        &mut self,
        f: impl FnOnce(&mut Self) -> Result<T>,
    ) -> std::result::Result<T, BoFailure> {
        f(self).map_err(|e| self.fail(e))
    }

    fn metrics(&self, rec: &[f64]) -> Result<(Option<f64>, Option<f64>)> {
        Ok((
            immediate_regret(self.problem, rec)?,
            l2_distance(rec, self.problem.truth.as_ref()),
        ))
    }
}

/// Runs Bayesian optimisation with a fresh hyperparameter posterior each
/// iteration. The recommendation stored with iteration `t` minimises the
/// posterior mean given all `init_count + t` observations.
pub fn run_bo(
    problem: &Problem,
    kind: AcquisitionKind,
    cfg: &BoConfig,
    seed: u64,
) -> std::result::Result<BoTrace, BoFailure> {
    let mut lp = Loop::start(problem, kind.name(), cfg.init_count, seed)?;
    if cfg.iters == 0 || cfg.init_count == 0 {
        return Err(lp.fail(FitboError::Argument(
            "iters and init_count must both be at least 1".into(),
        )));
    }
    lp.guard(|_| kind.validate())?;
    let prior = cfg
        .prior
        .clone()
        .unwrap_or_else(|| PriorSpec::default_for(problem.dim));

    // Sampling on D_t serves both the recommendation for iteration t and the
    // acquisition for iteration t + 1.
    let mut pending: Option<IterationRecord> = None;
    for t in 1..=cfg.iters + 1 {
        let ds = lp.dataset();
        let clock = Instant::now();
        let hs = lp.guard(|lp| sample_posterior(ds.clone(), &prior, &cfg.sampler, &mut lp.rng))?;
        let sampling = clock.elapsed().as_secs_f64();

        if let Some(mut rec) = pending.take() {
            let clock = Instant::now();
            let x_hat = recommend(&hs, cfg.rec_budget, &mut lp.rng);
            rec.timing.recommendation = clock.elapsed().as_secs_f64();
            let (ir, l2) = lp.guard(|lp| lp.metrics(&x_hat))?;
            rec.recommendation = x_hat;
            rec.ir = ir;
            rec.l2 = l2;
            lp.trace.records.push(rec);
        }
        if t > cfg.iters {
            break;
        }

        let clock = Instant::now();
        let mut acq = lp.guard(|_| Acquisition::new(&hs, kind))?;
        let best = maximize_acquisition(
            |x| match acq.value(x) {
                Ok(v) => v.value,
                Err(e) => {
                    warn!("acquisition failed at {x:?}: {e}");
                    f64::NEG_INFINITY
                }
            },
            problem.dim,
            cfg.acq_budget,
            &mut lp.rng,
        );
        let acquisition = clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        let y = lp.guard(|lp| observe(lp.problem, &best.x, &mut lp.rng))?;
        let objective = clock.elapsed().as_secs_f64();
        lp.guard(|lp| lp.append(&best.x, y))?;

        let stats = hs.stats();
        pending = Some(IterationRecord {
            iteration: t,
            query: best.x,
            observation: y,
            acquisition_value: Some(best.value),
            recommendation: Vec::new(),
            ir: None,
            l2: None,
            counts: EvalCounts {
                acquisition_evals: best.evaluations,
                loglik_evals: stats.loglik_evals,
                conditioning_failures: stats.conditioning_failures,
            },
            timing: Timing {
                sampling,
                acquisition,
                recommendation: 0.0,
                objective,
            },
        });
    }
    Ok(lp.trace)
}

/// Uniform random search with the same initial design size and budget;
/// recommends the best noisy observation so far.
pub fn run_random_search(
    problem: &Problem,
    iters: usize,
    init_count: usize,
    seed: u64,
) -> std::result::Result<BoTrace, BoFailure> {
    let mut lp = Loop::start(problem, "random", init_count, seed)?;
    if init_count == 0 {
        return Err(lp.fail(FitboError::Argument("init_count must be at least 1".into())));
    }
    for t in 1..=iters {
        let x = uniform_point(problem.dim, &mut lp.rng);
        let clock = Instant::now();
        let y = lp.guard(|lp| observe(lp.problem, &x, &mut lp.rng))?;
        let objective = clock.elapsed().as_secs_f64();
        lp.guard(|lp| lp.append(&x, y))?;
        let ds = lp.data.as_ref().expect("non-empty");
        let best = (0..ds.len())
            .min_by(|a, b| ds.y()[*a].total_cmp(&ds.y()[*b]))
            .expect("non-empty");
        let x_hat = ds.row(best).to_vec();
        let (ir, l2) = lp.guard(|lp| lp.metrics(&x_hat))?;
        lp.trace.records.push(IterationRecord {
            iteration: t,
            query: x,
            observation: y,
            acquisition_value: None,
            recommendation: x_hat,
            ir,
            l2,
            counts: EvalCounts::default(),
            timing: Timing {
                objective,
                ..Timing::default()
            },
        });
    }
    Ok(lp.trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::KernelHypers;
    use crate::warped::{EtaValue, NoiseModel, WarpedPosterior};
    use approx::assert_abs_diff_eq;

    #[test]
    fn maximiser_finds_the_centre() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = maximize_acquisition(
            |x| -x.iter().map(|v| (v - 0.5).powi(2)).sum::<f64>(),
            2,
            2000,
            &mut rng,
        );
        assert!(m.x.iter().all(|v| (v - 0.5).abs() < 0.02));
        assert!(m.evaluations <= 2000);
    }

    #[test]
    fn constant_objective_returns_an_in_bounds_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = maximize_acquisition(|_| 1.0, 3, 50, &mut rng);
        assert!(m.x.iter().all(|v| (0.0..=1.0).contains(v)));
        let m = maximize_acquisition(|_| f64::NAN, 2, 1, &mut rng);
        assert_eq!(m.x.len(), 2);
    }

    #[test]
    fn larger_budget_does_not_do_worse() {
        let f = |x: &[f64]| {
            -(x[0] - 0.31).powi(2) - 2.0 * (x[1] - 0.77).powi(2) + 0.1 * (9.0 * x[0]).sin()
        };
        for seed in 0..5 {
            let small = maximize_acquisition(f, 2, 1000, &mut ChaCha8Rng::seed_from_u64(seed));
            let large = maximize_acquisition(f, 2, 4000, &mut ChaCha8Rng::seed_from_u64(seed));
            assert!(
                large.value >= small.value,
                "seed {seed}: {} < {}",
                large.value,
                small.value
            );
        }
    }

    #[test]
    fn l2_examples() {
        let truth = Truth {
            minimisers: vec![vec![0.2, 0.2], vec![0.9, 0.9]],
            value: 0.0,
        };
        assert_eq!(l2_distance(&[0.2, 0.2], Some(&truth)), Some(0.0));
        assert_abs_diff_eq!(
            l2_distance(&[0.5, 0.6], Some(&truth)).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert_eq!(l2_distance(&[0.5, 0.6], None), None);
    }

    #[test]
    fn regret_examples() {
        let p = Problem::from_benchmark(Benchmark::Branin, 0.0).unwrap();
        let truth = p.truth.clone().unwrap();
        for m in &truth.minimisers {
            assert!(immediate_regret(&p, m).unwrap().unwrap() < 1e-9);
        }
        let centre = immediate_regret(&p, &[0.5, 0.5]).unwrap().unwrap();
        let direct = (Benchmark::Branin.evaluate(&[0.5, 0.5]).unwrap() - 0.397887).abs();
        assert_abs_diff_eq!(centre, direct, epsilon = 1e-6);
        let bare = Problem::new("bare", 1, |x| Ok(x[0]), 0.0).unwrap();
        assert_eq!(immediate_regret(&bare, &[0.3]).unwrap(), None);
    }

    #[test]
    fn recommendation_tracks_dense_quadratic_data() {
        let rows: Vec<Vec<f64>> = (0..9).map(|i| vec![0.3 + 0.4 * (i as f64) / 8.0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 4.0 * (r[0] - 0.55).powi(2)).collect();
        let ds = Arc::new(Dataset::new(1, &rows, &y).unwrap());
        let h = KernelHypers::isotropic(1, 0.2, 1.0, 0.01).unwrap();
        let wp = WarpedPosterior::new(
            ds.clone(),
            h,
            EtaValue::new(-0.01, ds.y_min()).unwrap(),
            NoiseModel::JitterOnly,
        )
        .unwrap();
        let hs = HyperSampleSet::from_samples(ds.clone(), vec![wp.clone()]).unwrap();
        let one = recommend(&hs, 500, &mut ChaCha8Rng::seed_from_u64(5));
        let data_min = rows[(0..9).min_by(|a, b| y[*a].total_cmp(&y[*b])).unwrap()][0];
        assert!((one[0] - data_min).abs() < 0.05);
        let many = HyperSampleSet::from_samples(ds, vec![wp; 4]).unwrap();
        let same = recommend(&many, 500, &mut ChaCha8Rng::seed_from_u64(5));
        assert_abs_diff_eq!(one[0], same[0], epsilon = 1e-9);
    }

    fn small_config(iters: usize) -> BoConfig {
        let mut cfg = BoConfig::new(iters, 3);
        cfg.sampler.samples = 10;
        cfg.sampler.burn_in = 10;
        cfg.acq_budget = 60;
        cfg.rec_budget = 60;
        cfg
    }

    #[test]
    fn single_iteration_trace() {
        let p = Problem::from_benchmark(Benchmark::Branin, 1e-3f64.sqrt()).unwrap();
        let trace = run_bo(&p, AcquisitionKind::FitboMm, &small_config(1), 11).unwrap();
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.initial_x.len(), 3);
        let r = &trace.records[0];
        assert!(r.query.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(r.ir.unwrap() >= 0.0 && r.l2.unwrap() >= 0.0);
    }

    #[test]
    fn runs_are_reproducible_and_metrics_recomputable() {
        let p = Problem::from_benchmark(Benchmark::Branin, 1e-3f64.sqrt()).unwrap();
        let a = run_bo(&p, AcquisitionKind::Ei { xi: 0.0 }, &small_config(3), 5).unwrap();
        let b = run_bo(&p, AcquisitionKind::Ei { xi: 0.0 }, &small_config(3), 5).unwrap();
        assert_eq!(a.records.len(), 3);
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.query, rb.query);
            assert_eq!(ra.recommendation, rb.recommendation);
            assert_eq!(ra.counts, rb.counts);
        }
        let again = recompute_metrics(&a, &p).unwrap();
        for (r, (ir, l2)) in a.records.iter().zip(again) {
            assert_eq!(r.ir, ir);
            assert_eq!(r.l2, l2);
        }
    }

    #[test]
    fn objective_failure_keeps_partial_trace() {
        let calls = std::sync::atomic::AtomicUsize::new(0);
        let p = Problem::new(
            "flaky",
            1,
            move |x| {
                if calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst) >= 5 {
                    Err(FitboError::Objective("boom".into()))
                } else {
                    Ok((x[0] - 0.3).powi(2))
                }
            },
            0.01,
        )
        .unwrap();
        let err = run_bo(&p, AcquisitionKind::Pi { xi: 0.0 }, &small_config(5), 1).unwrap_err();
        assert!(matches!(err.error, FitboError::Objective(_)));
        // the third query fails after two iterations have been recommended on
        assert_eq!(err.trace.initial_y.len(), 3);
        assert_eq!(err.trace.records.len(), 2);
    }

    #[test]
    fn random_search_recommends_best_observation() {
        let p = Problem::from_benchmark(Benchmark::Branin, 0.0).unwrap();
        let t = run_random_search(&p, 20, 3, 4).unwrap();
        assert_eq!(t.records.len(), 20);
        let irs: Vec<f64> = t.records.iter().map(|r| r.ir.unwrap()).collect();
        assert!(irs.windows(2).all(|w| w[1] <= w[0]));
    }
}
