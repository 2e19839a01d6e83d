//! Dense Gaussian-process primitives.
//!
//! Squared-exponential ARD kernel, a jittered Cholesky factorisation and the
//! posterior of a zero-mean GP conditioned on arbitrary targets. The fitted
//! [`GpPosterior`] is immutable and can be queried from many threads.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FitboError, Result};
use crate::linalg::{dot, exp_nonpositive};

/// Relative tolerance under which two input rows count as duplicates.
const DUPLICATE_TOL: f64 = 1e-10;

/// Kernel and noise hyperparameters, stored on the log scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelHypers {
    /// Per-dimension lengthscales, input units.
    pub log_lengthscales: Vec<f64>,
    /// Signal standard deviation of the latent process.
    pub log_outputscale: f64,
    /// Observation noise standard deviation in output units.
    pub log_noise: f64,
}

impl KernelHypers {
    pub fn new(log_lengthscales: Vec<f64>, log_outputscale: f64, log_noise: f64) -> Result<Self> {
        let h = Self {
            log_lengthscales,
            log_outputscale,
            log_noise,
        };
        h.validate()?;
        Ok(h)
    }

    /// Isotropic hypers with natural-scale parameters.
    pub fn isotropic(dim: usize, lengthscale: f64, outputscale: f64, noise: f64) -> Result<Self> {
        Self::new(vec![lengthscale.ln(); dim], outputscale.ln(), noise.ln())
    }

    pub fn validate(&self) -> Result<()> {
        if self.log_lengthscales.is_empty() {
            return Err(FitboError::Argument(
                "kernel needs at least one lengthscale".into(),
            ));
        }
        let all = self
            .log_lengthscales
            .iter()
            .chain([&self.log_outputscale, &self.log_noise]);
        for v in all {
            if !v.is_finite() || !v.exp().is_finite() || v.exp() <= 0.0 {
                return Err(FitboError::Domain(format!("non-finite hyperparameter {v}")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.log_lengthscales.len()
    }

    pub fn lengthscales(&self) -> Vec<f64> {
        self.log_lengthscales.iter().map(|l| l.exp()).collect()
    }

    pub fn outputscale(&self) -> f64 {
        self.log_outputscale.exp()
    }

    /// Signal variance σ_f².
    pub fn signal_variance(&self) -> f64 {
        (2.0 * self.log_outputscale).exp()
    }

    pub fn noise_std(&self) -> f64 {
        self.log_noise.exp()
    }

    pub fn noise_variance(&self) -> f64 {
        (2.0 * self.log_noise).exp()
    }

    fn inverse_lengthscales(&self) -> Vec<f64> {
        self.log_lengthscales.iter().map(|l| (-l).exp()).collect()
    }
}

/// Observed inputs on the unit hypercube together with noisy outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    /// Row-major n×d inputs.
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize, rows: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        if rows.len() != y.len() {
            return Err(FitboError::DimensionMismatch {
                expected: rows.len(),
                got: y.len(),
            });
        }
        let mut ds = Self {
            dim,
            x: Vec::with_capacity(rows.len() * dim),
            y: Vec::with_capacity(y.len()),
        };
        for (row, &yi) in rows.iter().zip(y) {
            ds.push(row, yi)?;
        }
        if ds.is_empty() {
            return Err(FitboError::Argument(
                "dataset needs at least one observation".into(),
            ));
        }
        Ok(ds)
    }

    /// Appends one observation.
    pub fn push(&mut self, x: &[f64], y: f64) -> Result<()> {
        if x.len() != self.dim {
            return Err(FitboError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if let Some(bad) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(FitboError::Argument(format!(
                "input coordinate {bad} outside the unit hypercube"
            )));
        }
        if !y.is_finite() {
            return Err(FitboError::Argument(format!("non-finite observation {y}")));
        }
        self.x.extend_from_slice(x);
        self.y.push(y);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks_exact(self.dim)
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn y_min(&self) -> f64 {
        self.y.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Same inputs, different outputs.
    pub fn with_outputs(&self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.len() {
            return Err(FitboError::DimensionMismatch {
                expected: self.len(),
                got: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(FitboError::Argument("non-finite observation".into()));
        }
        Ok(Self {
            dim: self.dim,
            x: self.x.clone(),
            y,
        })
    }

    /// Pairs of rows that coincide within the duplicate tolerance.
    pub fn duplicate_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                let close = self
                    .row(i)
                    .iter()
                    .zip(self.row(j))
                    .all(|(a, b)| (a - b).abs() <= DUPLICATE_TOL);
                if close {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Squared-exponential covariance σ_f²·exp(−½ Σ (x_i − x2_i)²/ℓ_i²).
pub fn kernel_se(x: &[f64], x2: &[f64], h: &KernelHypers) -> Result<f64> {
    if x.len() != x2.len() {
        return Err(FitboError::DimensionMismatch {
            expected: x.len(),
            got: x2.len(),
        });
    }
    if x.len() != h.dim() {
        return Err(FitboError::DimensionMismatch {
            expected: h.dim(),
            got: x.len(),
        });
    }
    let sq: f64 = x
        .iter()
        .zip(x2)
        .zip(&h.log_lengthscales)
        .map(|((a, b), l)| {
            let r = (a - b) / l.exp();
            r * r
        })
        .sum();
    Ok(h.signal_variance() * (-0.5 * sq).exp())
}

/// Gram matrix K(X, X) of the dataset inputs.
pub fn gram_matrix(ds: &Dataset, h: &KernelHypers) -> Result<DMatrix<f64>> {
    if ds.dim() != h.dim() {
        return Err(FitboError::DimensionMismatch {
            expected: ds.dim(),
            got: h.dim(),
        });
    }
    let scaled = ScaledInputs::new(ds, &h.inverse_lengthscales());
    Ok(scaled.gram(h.signal_variance()))
}

/// Lower-triangular factor of K + jitter·I.
#[derive(Debug, Clone)]
pub struct CholFactor {
    l: DMatrix<f64>,
    jitter: f64,
}

impl CholFactor {
    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Solves (K + jitter·I) a = b.
    pub fn solve(&self, b: &[f64]) -> DVector<f64> {
        let b = DVector::from_column_slice(b);
        let w = self
            .l
            .solve_lower_triangular(&b)
            .expect("factor has a positive diagonal");
        self.l
            .tr_solve_lower_triangular(&w)
            .expect("factor has a positive diagonal")
    }

    /// log det(K + jitter·I).
    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// L·Lᵀ.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.l * self.l.transpose()
    }
}

/// Factorises K + jitter·I, escalating jitter ×10 from 1e−10·tr(K)/n up to
/// 1e−4·tr(K)/n.
pub fn cholesky_jitter(k: &DMatrix<f64>) -> Result<CholFactor> {
    let n = k.nrows();
    if n == 0 || k.ncols() != n {
        return Err(FitboError::Argument(format!(
            "expected a non-empty square matrix, got {}x{}",
            k.nrows(),
            k.ncols()
        )));
    }
    let scale = k.trace() / n as f64;
    if !scale.is_finite() || scale <= 0.0 {
        return Err(FitboError::Domain(format!("matrix trace/n = {scale}")));
    }
    let mut jitter = 1e-10 * scale;
    let max_jitter = 1e-4 * scale * (1.0 + 1e-9);
    loop {
        let mut shifted = k.clone();
        for i in 0..n {
            shifted[(i, i)] += jitter;
        }
        if let Some(chol) = shifted.cholesky() {
            let l = chol.unpack();
            if l.diagonal().iter().all(|d| *d > 0.0 && d.is_finite()) {
                return Ok(CholFactor { l, jitter });
            }
        }
        let next = jitter * 10.0;
        if next > max_jitter {
            return Err(FitboError::Conditioning { jitter });
        }
        jitter = next;
    }
}

/// Inputs divided by lengthscales, stored dimension-major so that distance
/// accumulation over training points vectorises.
#[derive(Debug, Clone)]
pub(crate) struct ScaledInputs {
    n: usize,
    dim: usize,
    inv_ls: Vec<f64>,
    // cols[k * n + i] = x[i][k] / l[k]
    cols: Vec<f64>,
}

impl ScaledInputs {
    pub(crate) fn new(ds: &Dataset, inv_ls: &[f64]) -> Self {
        let n = ds.len();
        let dim = ds.dim();
        let mut cols = vec![0.0; n * dim];
        for (i, row) in ds.rows().enumerate() {
            for k in 0..dim {
                cols[k * n + i] = row[k] * inv_ls[k];
            }
        }
        Self {
            n,
            dim,
            inv_ls: inv_ls.to_vec(),
            cols,
        }
    }

    /// Writes the squared scaled distances from `x` to every training row.
    #[inline]
    pub(crate) fn sq_dists(&self, x: &[f64], out: &mut [f64]) {
        let out = &mut out[..self.n];
        out.fill(0.0);
        for k in 0..self.dim {
            let xk = x[k] * self.inv_ls[k];
            let col = &self.cols[k * self.n..(k + 1) * self.n];
            for (o, c) in out.iter_mut().zip(col) {
                let r = xk - c;
                *o += r * r;
            }
        }
    }

    fn gram(&self, signal_var: f64) -> DMatrix<f64> {
        let n = self.n;
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            k[(i, i)] = signal_var;
            for j in 0..i {
                let mut sq = 0.0;
                for d in 0..self.dim {
                    let r = self.cols[d * n + i] - self.cols[d * n + j];
                    sq += r * r;
                }
                let v = signal_var * exp_nonpositive(-0.5 * sq);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }
}

/// Fitted zero-mean GP posterior for a fixed set of targets.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    inputs: ScaledInputs,
    signal_var: f64,
    /// Packed lower-triangular rows of L.
    l_rows: Vec<f64>,
    inv_diag: Vec<f64>,
    alpha: Vec<f64>,
    jitter: f64,
}

/// Reusable buffers for predictive queries.
#[derive(Debug, Clone, Default)]
pub struct Scratch {
    k: Vec<f64>,
    v: Vec<f64>,
}

impl Scratch {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            k: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    fn ensure(&mut self, n: usize) {
        if self.k.len() < n {
            self.k.resize(n, 0.0);
            self.v.resize(n, 0.0);
        }
    }
}

impl GpPosterior {
    /// Factorises K(X, X) with the jitter policy and conditions on `targets`.
    pub fn fit(ds: &Dataset, targets: &[f64], h: &KernelHypers) -> Result<Self> {
        let k = gram_matrix(ds, h)?;
        let chol = cholesky_jitter(&k)?;
        Self::from_factor(ds, targets, h, &chol)
    }

    /// Builds the posterior from an existing factor of K(X, X).
    pub fn from_factor(
        ds: &Dataset,
        targets: &[f64],
        h: &KernelHypers,
        chol: &CholFactor,
    ) -> Result<Self> {
        let n = ds.len();
        if targets.len() != n {
            return Err(FitboError::DimensionMismatch {
                expected: n,
                got: targets.len(),
            });
        }
        if chol.dim() != n {
            return Err(FitboError::DimensionMismatch {
                expected: n,
                got: chol.dim(),
            });
        }
        if ds.dim() != h.dim() {
            return Err(FitboError::DimensionMismatch {
                expected: ds.dim(),
                got: h.dim(),
            });
        }
        let alpha = chol.solve(targets);
        let l = chol.l();
        let mut l_rows = Vec::with_capacity(n * (n + 1) / 2);
        let mut inv_diag = Vec::with_capacity(n);
        for i in 0..n {
            for j in 0..=i {
                l_rows.push(l[(i, j)]);
            }
            inv_diag.push(1.0 / l[(i, i)]);
        }
        Ok(Self {
            inputs: ScaledInputs::new(ds, &h.inverse_lengthscales()),
            signal_var: h.signal_variance(),
            l_rows,
            inv_diag,
            alpha: alpha.iter().copied().collect(),
            jitter: chol.jitter(),
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.n
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.n == 0
    }

    pub fn dim(&self) -> usize {
        self.inputs.dim
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Prior variance k(x, x).
    pub fn signal_variance(&self) -> f64 {
        self.signal_var
    }

    fn cross_cov(&self, x: &[f64], k: &mut [f64]) {
        self.inputs.sq_dists(x, k);
        for v in k[..self.inputs.n].iter_mut() {
            *v = self.signal_var * exp_nonpositive(-0.5 * *v);
        }
    }

    /// Posterior mean and variance at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.check_dim(x)?;
        let mut s = Scratch::with_capacity(self.len());
        Ok(self.predict_with(x, &mut s))
    }

    /// Posterior mean at `x`.
    pub fn mean(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let mut s = Scratch::with_capacity(self.len());
        Ok(self.mean_with(x, &mut s))
    }

    pub(crate) fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(FitboError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            })
        }
    }

    /// Posterior mean and variance using caller-owned buffers. `x` must have
    /// the model dimension.
    #[inline]
    pub fn predict_with(&self, x: &[f64], s: &mut Scratch) -> (f64, f64) {
        let n = self.len();
        s.ensure(n);
        let k = &mut s.k[..n];
        let v = &mut s.v[..n];
        self.cross_cov(x, k);
        let mean = dot(k, &self.alpha);
        // forward substitution L v = k
        let mut offset = 0;
        for i in 0..n {
            let row = &self.l_rows[offset..offset + i];
            v[i] = (k[i] - dot(row, &v[..i])) * self.inv_diag[i];
            offset += i + 1;
        }
        let var = (self.signal_var - dot(v, v)).max(0.0);
        (mean, var)
    }

    #[inline]
    pub fn mean_with(&self, x: &[f64], s: &mut Scratch) -> f64 {
        let n = self.len();
        s.ensure(n);
        let k = &mut s.k[..n];
        self.cross_cov(x, k);
        dot(k, &self.alpha)
    }
}

/// Posterior mean and variance of the latent process at `x`, given targets
/// and a factor of K(X, X).
pub fn posterior_g(
    ds: &Dataset,
    targets: &[f64],
    h: &KernelHypers,
    chol: &CholFactor,
    x: &[f64],
) -> Result<(f64, f64)> {
    GpPosterior::from_factor(ds, targets, h, chol)?.predict(x)
}
