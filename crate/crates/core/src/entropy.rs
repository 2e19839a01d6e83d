//! Differential entropy of univariate, equally weighted Gaussian mixtures.
//!
//! Two estimators: adaptive Simpson quadrature of −∫ p log p, and the
//! closed-form entropy of the moment-matched Gaussian, which upper-bounds the
//! mixture entropy.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{FitboError, Result};
use crate::linalg::{gauss_sum, gauss_sum_pair, GaussTerms};

/// log(2πe).
pub const LOG_2PIE: f64 = 2.837_877_066_409_345_3;
/// Half-width of each component's integration window, in standard deviations.
pub const WINDOW_SIGMAS: f64 = 8.0;
/// Default relative tolerance for [`gmm_entropy_quadrature`].
pub const DEFAULT_REL_TOL: f64 = 1e-6;
/// Absolute tolerance floor for the quadrature.
pub const ABS_TOL_FLOOR: f64 = 1e-10;
/// Densities below this contribute nothing to −p log p.
const DENSITY_FLOOR: f64 = 1e-300;
const MAX_DEPTH: usize = 60;
const CORE_SIGMAS: f64 = 5.0;
/// A smooth integrand shrinks the Simpson difference about 32-fold per
/// halving. A drop this much larger is taken as a chance cancellation.
const SUSPECT_DROP: f64 = 512.0;

/// ½ log(2πe·variance).
pub fn gaussian_entropy(variance: f64) -> Result<f64> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(FitboError::Domain(format!(
            "gaussian entropy needs a positive finite variance, got {variance}"
        )));
    }
    Ok(0.5 * (LOG_2PIE + variance.ln()))
}

/// Mixture p(z) = (1/M) Σ_j N(z | m_j, K_j).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture1D {
    means: Vec<f64>,
    variances: Vec<f64>,
}

impl GaussianMixture1D {
    pub fn new(means: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        if means.len() != variances.len() {
            return Err(FitboError::DimensionMismatch {
                expected: means.len(),
                got: variances.len(),
            });
        }
        if means.is_empty() {
            return Err(FitboError::Argument(
                "mixture needs at least one component".into(),
            ));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(FitboError::Argument("mixture means must be finite".into()));
        }
        if variances.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(FitboError::Argument(
                "mixture variances must be finite and non-negative".into(),
            ));
        }
        Ok(Self { means, variances })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    /// Mixture density at `z`.
    pub fn density(&self, z: f64) -> f64 {
        let inv_m = 1.0 / self.len() as f64;
        self.means
            .iter()
            .zip(&self.variances)
            .map(|(m, v)| {
                let r = z - m;
                inv_m * (-0.5 * r * r / v).exp() / (2.0 * PI * v).sqrt()
            })
            .sum()
    }
}

/// Mean and variance of the mixture. The variance is accumulated around the
/// mean, which equals (1/M)Σ(K_j + m_j²) − mean² without the cancellation.
pub fn gmm_moments(gm: &GaussianMixture1D) -> (f64, f64) {
    let inv_m = 1.0 / gm.len() as f64;
    let mean = gm.means.iter().sum::<f64>() * inv_m;
    let spread: f64 = gm
        .means
        .iter()
        .zip(&gm.variances)
        .map(|(m, k)| k + (m - mean) * (m - mean))
        .sum();
    (mean, (spread * inv_m).max(0.0))
}

/// Entropy of the Gaussian with the mixture's first two moments.
pub fn gmm_entropy_mm(gm: &GaussianMixture1D) -> Result<f64> {
    let (_, var) = gmm_moments(gm);
    gaussian_entropy(var).map_err(|_| {
        FitboError::Domain("moment-matched variance of a degenerate mixture is zero".into())
    })
}

/// Mixture components with precomputed density terms, sorted by mean.
#[derive(Default)]
struct Components {
    terms: GaussTerms,
    means: Vec<f64>,
    sd: Vec<f64>,
}

impl Components {
    fn from_mixture(gm: &GaussianMixture1D) -> Self {
        let inv_m = 1.0 / gm.len() as f64;
        let mut order: Vec<usize> = (0..gm.len()).collect();
        order.sort_by(|i, j| gm.means[*i].total_cmp(&gm.means[*j]));
        let means: Vec<f64> = order.iter().map(|i| gm.means[*i]).collect();
        let terms = GaussTerms::new(
            means.clone(),
            order.iter().map(|i| -0.5 / gm.variances[*i]).collect(),
            order
                .iter()
                .map(|i| inv_m / (2.0 * PI * gm.variances[*i]).sqrt())
                .collect(),
        );
        Self {
            terms,
            means,
            sd: order.iter().map(|i| gm.variances[*i].sqrt()).collect(),
        }
    }

    #[inline]
    fn integrand(&self, z: f64) -> f64 {
        neg_p_log_p(gauss_sum(&self.terms, z))
    }

    #[inline]
    fn integrand_pair(&self, z: [f64; 2]) -> [f64; 2] {
        gauss_sum_pair(&self.terms, z).map(neg_p_log_p)
    }

    /// True if a component narrower than an eighth of the panel has its
    /// ±CORE_SIGMAS·σ core inside [a, b], so the five nodes are too coarse
    /// to follow it.
    fn must_split(&self, a: f64, b: f64) -> bool {
        let limit = 0.125 * (b - a);
        let reach = CORE_SIGMAS * limit;
        let lo = self.means.partition_point(|m| *m < a - reach);
        let hi = self.means.partition_point(|m| *m <= b + reach);
        self.means[lo..hi]
            .iter()
            .zip(&self.sd[lo..hi])
            .any(|(m, s)| *s < limit && m + CORE_SIGMAS * s >= a && m - CORE_SIGMAS * s <= b)
    }
}

#[inline]
fn neg_p_log_p(p: f64) -> f64 {
    if p < DENSITY_FLOOR {
        0.0
    } else {
        -p * p.ln()
    }
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    /// |S₂ − S₁| of the panel this one was split from, 0 at the top.
    parent_delta: f64,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

struct Quadrature {
    comps: Components,
}

impl Quadrature {
    fn adaptive(&self, p: Panel, tol: f64, depth: usize) -> Result<f64> {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let [flm, frm] = self.comps.integrand_pair([lm, rm]);
        let split = self.comps.must_split(p.a, p.b);
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let delta = left + right - p.whole;
        let suspect = p.parent_delta > 30.0 * tol && SUSPECT_DROP * delta.abs() < p.parent_delta;
        if delta.abs() <= 15.0 * tol && !split && !suspect {
            return Ok(left + right + delta / 15.0);
        }
        if depth >= MAX_DEPTH {
            return Err(FitboError::NonConvergence {
                lo: p.a,
                hi: p.b,
                error: delta.abs() / 15.0,
            });
        }
        let children = [
            Panel {
                a: p.a,
                b: m,
                fa: p.fa,
                fm: flm,
                fb: p.fm,
                whole: left,
                parent_delta: delta.abs(),
            },
            Panel {
                a: m,
                b: p.b,
                fa: p.fm,
                fm: frm,
                fb: p.fb,
                whole: right,
                parent_delta: delta.abs(),
            },
        ];
        let mut total = 0.0;
        for child in children {
            total += self.adaptive(child, 0.5 * tol, depth + 1)?;
        }
        Ok(total)
    }
}

/// −∫ p log p by adaptive Simpson over the union of ±8σ component windows.
///
/// The tolerance is `rel_tol` times the mean absolute component entropy plus
/// ln M, with an absolute floor of 1e−10, and is halved at each subdivision.
pub fn gmm_entropy_quadrature(gm: &GaussianMixture1D, rel_tol: f64) -> Result<f64> {
    if !(rel_tol > 0.0) {
        return Err(FitboError::Argument(format!(
            "rel_tol must be positive, got {rel_tol}"
        )));
    }
    if gm.variances.iter().any(|v| *v <= 0.0) {
        return Err(FitboError::Domain(
            "quadrature needs every component variance to be positive".into(),
        ));
    }
    let (lo, hi) = gm.means.iter().zip(&gm.variances).fold(
        (f64::INFINITY, f64::NEG_INFINITY),
        |(lo, hi), (m, v)| {
            let w = WINDOW_SIGMAS * v.sqrt();
            (lo.min(m - w), hi.max(m + w))
        },
    );

    // Tolerance scale: a cheap stand-in for ∫|p log p|, since −log p lies
    // within ln M of some component's −log p_j.
    let inv_m = 1.0 / gm.len() as f64;
    let scale = gm
        .variances
        .iter()
        .map(|v| (0.5 * (LOG_2PIE + v.ln())).abs())
        .sum::<f64>()
        * inv_m
        + (gm.len() as f64).ln();
    let tol = (rel_tol * scale).max(ABS_TOL_FLOOR);

    let q = Quadrature {
        comps: Components::from_mixture(gm),
    };
    let top = &q.comps;
    let fa = top.integrand(lo);
    let fb = top.integrand(hi);
    let fm = top.integrand(0.5 * (lo + hi));
    q.adaptive(
        Panel {
            a: lo,
            b: hi,
            fa,
            fm,
            fb,
            whole: simpson(lo, hi, fa, fm, fb),
            parent_delta: 0.0,
        },
        tol,
        0,
    )
}
