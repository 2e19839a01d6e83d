//! Acquisition functions over a fitted hyperparameter sample set.
//!
//! Every sample `j` contributes a Gaussian predictive N(mean_j, var_j) for the
//! next noisy observation. FITBO scores a point by the entropy of the
//! equal-weight mixture of those Gaussians minus their average entropy; the
//! baselines average their closed forms over the same components.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::entropy::{
    gmm_entropy_mm, gmm_entropy_quadrature, GaussianMixture1D, DEFAULT_REL_TOL, LOG_2PIE,
};
use crate::error::{FitboError, Result};
use crate::gp::Scratch;
use crate::hyper::HyperSampleSet;

/// Exploration weight for GP-UCB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum UcbBeta {
    /// β_n = 2 log(d n² π² / 6δ), with n the number of observations.
    Schedule {
        delta: f64,
    },
    Fixed(f64),
}

impl UcbBeta {
    pub fn value(&self, dim: usize, n: usize) -> f64 {
        match *self {
            UcbBeta::Fixed(b) => b,
            UcbBeta::Schedule { delta } => {
                let n = n as f64;
                2.0 * (dim as f64 * n * n * PI * PI / (6.0 * delta)).ln()
            }
        }
    }
}

impl Default for UcbBeta {
    fn default() -> Self {
        UcbBeta::Schedule { delta: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AcquisitionKind {
    /// Mixture entropy by adaptive Simpson quadrature.
    Fitbo {
        rel_tol: f64,
    },
    /// Mixture entropy by moment matching.
    FitboMm,
    Ei {
        xi: f64,
    },
    Pi {
        xi: f64,
    },
    Ucb {
        beta: UcbBeta,
    },
}

impl AcquisitionKind {
    pub const ALL: [AcquisitionKind; 5] = [
        AcquisitionKind::Fitbo {
            rel_tol: DEFAULT_REL_TOL,
        },
        AcquisitionKind::FitboMm,
        AcquisitionKind::Ei { xi: 0.0 },
        AcquisitionKind::Pi { xi: 0.0 },
        AcquisitionKind::Ucb {
            beta: UcbBeta::Schedule { delta: 0.1 },
        },
    ];

    pub fn fitbo() -> Self {
        AcquisitionKind::Fitbo {
            rel_tol: DEFAULT_REL_TOL,
        }
    }

    pub fn is_fitbo(&self) -> bool {
        matches!(
            self,
            AcquisitionKind::Fitbo { .. } | AcquisitionKind::FitboMm
        )
    }

    /// Short lowercase name used on the command line and in file names.
    pub fn name(&self) -> &'static str {
        match self {
            AcquisitionKind::Fitbo { .. } => "fitbo",
            AcquisitionKind::FitboMm => "fitbo-mm",
            AcquisitionKind::Ei { .. } => "ei",
            AcquisitionKind::Pi { .. } => "pi",
            AcquisitionKind::Ucb { .. } => "ucb",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            AcquisitionKind::Fitbo { rel_tol } => rel_tol > 0.0 && rel_tol.is_finite(),
            AcquisitionKind::FitboMm => true,
            AcquisitionKind::Ei { xi } | AcquisitionKind::Pi { xi } => xi.is_finite(),
            AcquisitionKind::Ucb { beta } => match beta {
                UcbBeta::Fixed(b) => b > 0.0 && b.is_finite(),
                UcbBeta::Schedule { delta } => delta > 0.0 && delta < 1.0,
            },
        };
        if ok {
            Ok(())
        } else {
            Err(FitboError::Argument(format!(
                "invalid parameters for {self:?}"
            )))
        }
    }
}

impl fmt::Display for AcquisitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AcquisitionKind {
    type Err = FitboError;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "fitbo" => AcquisitionKind::fitbo(),
            "fitbo-mm" | "fitbomm" => AcquisitionKind::FitboMm,
            "ei" => AcquisitionKind::Ei { xi: 0.0 },
            "pi" => AcquisitionKind::Pi { xi: 0.0 },
            "ucb" | "gp-ucb" => AcquisitionKind::Ucb {
                beta: UcbBeta::default(),
            },
            other => {
                return Err(FitboError::Argument(format!(
                    "unknown acquisition '{other}' (expected fitbo, fitbo-mm, ei, pi, ucb)"
                )))
            }
        };
        Ok(kind)
    }
}

/// The two entropy terms of a FITBO score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyTerms {
    /// Entropy of the predictive mixture.
    pub first: f64,
    /// Mean entropy of the per-sample Gaussians.
    pub second: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionValue {
    pub value: f64,
    pub terms: Option<EntropyTerms>,
}

/// Reusable evaluator bound to one sample set and kind.
pub struct Acquisition<'a> {
    hs: &'a HyperSampleSet,
    kind: AcquisitionKind,
    scratch: Scratch,
    means: Vec<f64>,
    vars: Vec<f64>,
    y_min: f64,
    beta: f64,
}

impl<'a> Acquisition<'a> {
    pub fn new(hs: &'a HyperSampleSet, kind: AcquisitionKind) -> Result<Self> {
        kind.validate()?;
        if hs.is_empty() {
            return Err(FitboError::Argument(
                "empty hyperparameter sample set".into(),
            ));
        }
        let ds = hs.dataset();
        let beta = match kind {
            AcquisitionKind::Ucb { beta } => beta.value(ds.dim(), ds.len()),
            _ => 0.0,
        };
        if kind.name() == "ucb" && !(beta > 0.0) {
            return Err(FitboError::Argument(format!(
                "UCB beta {beta} must be positive"
            )));
        }
        Ok(Self {
            hs,
            kind,
            scratch: Scratch::with_capacity(ds.len()),
            means: Vec::with_capacity(hs.len()),
            vars: Vec::with_capacity(hs.len()),
            y_min: ds.y_min(),
            beta,
        })
    }

    pub fn kind(&self) -> AcquisitionKind {
        self.kind
    }

    pub fn sample_set(&self) -> &HyperSampleSet {
        self.hs
    }

    pub fn value(&mut self, x: &[f64]) -> Result<AcquisitionValue> {
        if x.len() != self.hs.dim() {
            return Err(FitboError::DimensionMismatch {
                expected: self.hs.dim(),
                got: x.len(),
            });
        }
        self.means.clear();
        self.vars.clear();
        for s in self.hs.samples() {
            let (m, v) = s.predict_y_with(x, &mut self.scratch);
            self.means.push(m);
            self.vars.push(v);
        }
        score(self.kind, &self.means, &self.vars, self.y_min, self.beta)
    }
}

/// Scores one point from its per-sample predictive components.
fn score(
    kind: AcquisitionKind,
    means: &[f64],
    vars: &[f64],
    y_min: f64,
    beta: f64,
) -> Result<AcquisitionValue> {
    let inv_m = 1.0 / means.len() as f64;
    match kind {
        AcquisitionKind::Fitbo { .. } | AcquisitionKind::FitboMm => {
            let mut second = 0.0;
            for v in vars {
                if !(*v > 0.0) {
                    return Err(FitboError::Internal(format!(
                        "predictive variance {v} is not positive"
                    )));
                }
                second += 0.5 * (LOG_2PIE + v.ln());
            }
            let second = second * inv_m;
            let gm = GaussianMixture1D::new(means.to_vec(), vars.to_vec())?;
            let first = match kind {
                AcquisitionKind::Fitbo { rel_tol } => gmm_entropy_quadrature(&gm, rel_tol)?,
                _ => gmm_entropy_mm(&gm)?,
            };
            Ok(AcquisitionValue {
                value: first - second,
                terms: Some(EntropyTerms { first, second }),
            })
        }
        AcquisitionKind::Ei { xi } => {
            let total: f64 = means
                .iter()
                .zip(vars)
                .map(|(m, v)| expected_improvement(y_min - xi - m, v.sqrt()))
                .sum();
            Ok(plain(total * inv_m))
        }
        AcquisitionKind::Pi { xi } => {
            let total: f64 = means
                .iter()
                .zip(vars)
                .map(|(m, v)| {
                    let sd = v.sqrt();
                    let imp = y_min - xi - m;
                    if sd > 0.0 {
                        normal_cdf(imp / sd)
                    } else if imp > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                })
                .sum();
            Ok(plain(total * inv_m))
        }
        AcquisitionKind::Ucb { .. } => {
            let root_beta = beta.sqrt();
            let total: f64 = means
                .iter()
                .zip(vars)
                .map(|(m, v)| -(m - root_beta * v.sqrt()))
                .sum();
            Ok(plain(total * inv_m))
        }
    }
}

fn plain(value: f64) -> AcquisitionValue {
    AcquisitionValue { value, terms: None }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// E[max(imp − σZ, 0)] for standard normal Z.
fn expected_improvement(imp: f64, sd: f64) -> f64 {
    if sd > 0.0 {
        let z = imp / sd;
        let pdf = (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
        imp * normal_cdf(z) + sd * pdf
    } else {
        imp.max(0.0)
    }
}

/// FITBO score at `x`. `kind` must be `Fitbo` or `FitboMm`.
pub fn fitbo_alpha(
    x: &[f64],
    hs: &HyperSampleSet,
    kind: AcquisitionKind,
) -> Result<AcquisitionValue> {
    if !kind.is_fitbo() {
        return Err(FitboError::Argument(format!(
            "{kind} is not a FITBO acquisition"
        )));
    }
    Acquisition::new(hs, kind)?.value(x)
}

/// EI, PI or UCB averaged over the sample set.
pub fn baseline_alpha(
    x: &[f64],
    hs: &HyperSampleSet,
    kind: AcquisitionKind,
) -> Result<AcquisitionValue> {
    if kind.is_fitbo() {
        return Err(FitboError::Argument(format!(
            "{kind} is not a baseline acquisition"
        )));
    }
    Acquisition::new(hs, kind)?.value(x)
}

/// Any acquisition at a single point.
pub fn evaluate(x: &[f64], hs: &HyperSampleSet, kind: AcquisitionKind) -> Result<AcquisitionValue> {
    Acquisition::new(hs, kind)?.value(x)
}

/// Scores a batch of points. Components are computed sample-major so each
/// fitted model stays hot in cache; results equal single-point calls bit for
/// bit.
pub fn evaluate_batch(
    xs: &[Vec<f64>],
    hs: &HyperSampleSet,
    kind: AcquisitionKind,
) -> Result<Vec<AcquisitionValue>> {
    if xs.is_empty() {
        return Err(FitboError::Argument("empty batch".into()));
    }
    let acq = Acquisition::new(hs, kind)?;
    let dim = hs.dim();
    for (i, x) in xs.iter().enumerate() {
        if x.len() != dim {
            return Err(FitboError::AtIndex {
                index: i,
                source: Box::new(FitboError::DimensionMismatch {
                    expected: dim,
                    got: x.len(),
                }),
            });
        }
    }
    let m = hs.len();
    let mut means = vec![0.0; xs.len() * m];
    let mut vars = vec![0.0; xs.len() * m];
    let mut scratch = Scratch::with_capacity(hs.dataset().len());
    for (j, s) in hs.samples().iter().enumerate() {
        for (i, x) in xs.iter().enumerate() {
            let (mu, v) = s.predict_y_with(x, &mut scratch);
            means[i * m + j] = mu;
            vars[i * m + j] = v;
        }
    }
    (0..xs.len())
        .map(|i| {
            let r = i * m..(i + 1) * m;
            score(kind, &means[r.clone()], &vars[r], acq.y_min, acq.beta).map_err(|e| {
                FitboError::AtIndex {
                    index: i,
                    source: Box::new(e),
                }
            })
        })
        .collect()
}
