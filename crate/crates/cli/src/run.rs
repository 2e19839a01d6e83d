//! Repeated optimisation runs on one benchmark.

use std::path::PathBuf;
use std::str::FromStr;
use std::sync::mpsc;

use fitbo::acquisition::AcquisitionKind;
use fitbo::benchmarks::Benchmark;
use fitbo::bo::{run_bo, run_random_search, BoConfig, BoFailure, BoTrace, Problem};
use rayon::prelude::*;

use crate::error::{CliError, Result};
use crate::output::{format_aggregate, format_trace, write_file, AggregateRow, RunStatus};
use crate::stats::{iqr, median};

/// An optimiser compared by `run`: a BO acquisition or uniform random search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Bo(AcquisitionKind),
    Random,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Bo(kind) => kind.name(),
            Method::Random => "random",
        }
    }
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("random") {
            return Ok(Method::Random);
        }
        s.parse()
            .map(Method::Bo)
            .map_err(|e: fitbo::FitboError| CliError::Usage(e.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub benchmark: Benchmark,
    pub methods: Vec<Method>,
    pub iters: usize,
    pub reps: usize,
    /// Hyperparameter samples M per iteration.
    pub samples: usize,
    /// Repetition `r` uses seed `seed + r`, the same for every method.
    pub seed: u64,
    pub acq_budget: usize,
    /// Initial design size; defaults by dimension when absent.
    pub init_count: Option<usize>,
    pub noise_std: f64,
    /// Condition the sampler on the true noise level.
    pub pin_noise: bool,
    pub out_dir: PathBuf,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
}

impl ExperimentConfig {
    pub fn new(benchmark: Benchmark, methods: Vec<Method>, out_dir: PathBuf) -> Self {
        Self {
            benchmark,
            methods,
            iters: 80,
            reps: 20,
            samples: 200,
            seed: 0,
            acq_budget: 2000,
            init_count: None,
            noise_std: 1e-3f64.sqrt(),
            pin_noise: false,
            out_dir,
            jobs: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(CliError::Usage(msg.to_string()));
        if self.methods.is_empty() {
            return fail("at least one method is required");
        }
        if self.reps == 0 {
            return fail("--reps must be at least 1");
        }
        if self.iters == 0 {
            return fail("--iters must be at least 1");
        }
        if self.samples == 0 {
            return fail("--samples must be at least 1");
        }
        if self.acq_budget == 0 {
            return fail("--budget must be at least 1");
        }
        if self.init_count == Some(0) {
            return fail("--init must be at least 1");
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return fail("--noise-std must be finite and non-negative");
        }
        if self.pin_noise && self.noise_std == 0.0 {
            return fail("--pin-noise needs a positive noise level");
        }
        for m in &self.methods {
            if let Method::Bo(kind) = m {
                kind.validate()
                    .map_err(|e| CliError::Usage(e.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn bo_config(&self) -> BoConfig {
        let mut cfg = BoConfig::new(self.iters, self.init_count());
        cfg.sampler.samples = self.samples;
        cfg.acq_budget = self.acq_budget;
        if self.pin_noise {
            cfg.sampler.pinned_noise = Some(self.noise_std);
        }
        cfg
    }

    pub fn init_count(&self) -> usize {
        self.init_count
            .unwrap_or_else(|| BoConfig::default_init_count(self.benchmark.dim()))
    }

    pub fn trace_path(&self, method: Method, rep: usize) -> PathBuf {
        self.out_dir.join("traces").join(format!(
            "{}-{}-rep{rep:03}.jsonl",
            self.benchmark.name(),
            method.name()
        ))
    }

    pub fn aggregate_path(&self, method: Method) -> PathBuf {
        self.out_dir.join(format!(
            "{}-{}-aggregate.csv",
            self.benchmark.name(),
            method.name()
        ))
    }
}

/// Outcome of one method over all repetitions.
#[derive(Debug, Clone)]
pub struct MethodSummary {
    pub method: Method,
    /// Traces in repetition order; failed runs keep their completed records.
    pub traces: Vec<BoTrace>,
    pub failures: Vec<(usize, String)>,
    pub aggregate: Vec<AggregateRow>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub methods: Vec<MethodSummary>,
}

/// Per-iteration median and IQR over whatever runs reached that iteration.
pub fn aggregate(traces: &[BoTrace]) -> Vec<AggregateRow> {
    let len = traces.iter().map(|t| t.records.len()).max().unwrap_or(0);
    (0..len)
        .map(|i| {
            let column = |f: fn(&fitbo::bo::IterationRecord) -> Option<f64>| -> Vec<f64> {
                traces
                    .iter()
                    .filter_map(|t| t.records.get(i).and_then(f))
                    .collect()
            };
            let ir = column(|r| r.ir);
            let l2 = column(|r| r.l2);
            AggregateRow {
                iteration: i + 1,
                median_ir: median(&ir),
                iqr_ir: iqr(&ir),
                median_l2: median(&l2),
                iqr_l2: iqr(&l2),
            }
        })
        .collect()
}

fn run_one(
    cfg: &ExperimentConfig,
    problem: &Problem,
    method: Method,
    rep: usize,
) -> (BoTrace, RunStatus) {
    let seed = cfg.seed.wrapping_add(rep as u64);
    let result = match method {
        Method::Bo(kind) => run_bo(problem, kind, &cfg.bo_config(), seed),
        Method::Random => run_random_search(problem, cfg.iters, cfg.init_count(), seed),
    };
    match result {
        Ok(trace) => (trace, RunStatus::Complete),
        Err(BoFailure { trace, error }) => (
            trace,
            RunStatus::Failed {
                error: error.to_string(),
            },
        ),
    }
}

/// Runs every (method, repetition) pair on a worker pool. Trace files go
/// through one writer thread; aggregate files are written at the end.
/// Fails only when no run of any method completed.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let problem = Problem::from_benchmark(cfg.benchmark, cfg.noise_std)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let jobs: Vec<(usize, Method, usize)> = cfg
        .methods
        .iter()
        .enumerate()
        .flat_map(|(mi, m)| (0..cfg.reps).map(move |r| (mi, *m, r)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let (tx, rx) = mpsc::channel::<(PathBuf, String)>();
    let writer = std::thread::spawn(move || -> Result<()> {
        for (path, text) in rx {
            write_file(&path, &text)?;
        }
        Ok(())
    });

    let results: Vec<Result<(usize, usize, BoTrace, RunStatus)>> = pool.install(|| {
        jobs.par_iter()
            .map_with(tx, |tx, &(mi, method, rep)| {
                let (trace, status) = run_one(cfg, &problem, method, rep);
                match &status {
                    RunStatus::Complete => log::info!("{} rep {rep}: done", method.name()),
                    RunStatus::Failed { error } => {
                        log::warn!("{} rep {rep}: {error}", method.name())
                    }
                }
                let text = format_trace(&trace, &status)?;
                tx.send((cfg.trace_path(method, rep), text))
                    .map_err(|_| CliError::Runtime("trace writer stopped".into()))?;
                Ok((mi, rep, trace, status))
            })
            .collect()
    });
    let written = writer
        .join()
        .map_err(|_| CliError::Runtime("trace writer panicked".into()))?;

    let mut summaries: Vec<MethodSummary> = cfg
        .methods
        .iter()
        .map(|m| MethodSummary {
            method: *m,
            traces: Vec::new(),
            failures: Vec::new(),
            aggregate: Vec::new(),
        })
        .collect();
    for r in results {
        let (mi, rep, trace, status) = r?;
        if let RunStatus::Failed { error } = status {
            summaries[mi].failures.push((rep, error));
        }
        summaries[mi].traces.push(trace);
    }
    written?;

    for s in &mut summaries {
        s.aggregate = aggregate(&s.traces);
        write_file(
            &cfg.aggregate_path(s.method),
            &format_aggregate(&s.aggregate)?,
        )?;
    }
    if summaries.iter().all(|s| s.failures.len() == cfg.reps) {
        return Err(CliError::Runtime(format!(
            "all runs failed; first error: {}",
            summaries[0].failures[0].1
        )));
    }
    Ok(RunReport { methods: summaries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use fitbo::bo::{EvalCounts, IterationRecord, Timing};

    fn trace(irs: &[f64]) -> BoTrace {
        BoTrace {
            problem: "p".into(),
            acquisition: "a".into(),
            seed: 0,
            initial_x: vec![],
            initial_y: vec![],
            records: irs
                .iter()
                .enumerate()
                .map(|(i, ir)| IterationRecord {
                    iteration: i + 1,
                    query: vec![0.5],
                    observation: 0.0,
                    acquisition_value: Some(0.0),
                    recommendation: vec![0.5],
                    ir: Some(*ir),
                    l2: None,
                    counts: EvalCounts::default(),
                    timing: Timing::default(),
                })
                .collect(),
        }
    }

    #[test]
    fn aggregate_uses_available_runs() {
        let rows = aggregate(&[trace(&[1.0, 2.0]), trace(&[3.0]), trace(&[5.0, 4.0])]);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].median_ir, Some(3.0));
        assert_eq!(rows[0].iqr_ir, Some(2.0));
        assert_eq!(rows[1].median_ir, Some(3.0));
        assert_eq!(rows[1].median_l2, None);
    }

    #[test]
    fn method_names_parse() {
        assert_eq!("random".parse::<Method>().unwrap(), Method::Random);
        assert_eq!(
            "fitbo-mm".parse::<Method>().unwrap(),
            Method::Bo(AcquisitionKind::FitboMm)
        );
        assert!(matches!("pes".parse::<Method>(), Err(CliError::Usage(_))));
    }

    #[test]
    fn invalid_configs_are_usage_errors() {
        let base = ExperimentConfig::new(Benchmark::Branin, vec![Method::Random], "unused".into());
        for cfg in [
            ExperimentConfig {
                reps: 0,
                ..base.clone()
            },
            ExperimentConfig {
                iters: 0,
                ..base.clone()
            },
            ExperimentConfig {
                methods: vec![],
                ..base.clone()
            },
            ExperimentConfig {
                noise_std: 0.0,
                pin_noise: true,
                ..base.clone()
            },
        ] {
            assert_eq!(cmd_run(&cfg).unwrap_err().exit_code(), 2);
        }
    }
}
