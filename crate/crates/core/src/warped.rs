//! Parabolic warp f = η + ½g² with a GP on g.
//!
//! Targets are mapped to g_i = sqrt(2(y_i − η)) (positive branch; the model
//! is symmetric under a global sign flip of g). The predictive distribution of
//! f is obtained by linearising the warp around the posterior mean of g:
//!
//! ```text
//! m_f = η + ½ m_g²        v_f = m_g² v_g
//! ```
//!
//! and y adds the observation noise σ_n² on top of v_f. By default the
//! observation noise also enters the fit of g through the delta method,
//! Var(g_i) ≈ σ_n² / g_i²; see [`NoiseModel`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FitboError, Result};
use nalgebra::DMatrix;

use crate::gp::{cholesky_jitter, gram_matrix, Dataset, GpPosterior, KernelHypers, Scratch};

/// Candidate global minimum, stored as a strictly positive gap below the
/// best observation it was drawn against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaValue {
    y_min: f64,
    gap: f64,
}

impl EtaValue {
    /// η must lie strictly below `y_min`.
    pub fn new(eta: f64, y_min: f64) -> Result<Self> {
        Self::from_gap(y_min, y_min - eta)
    }

    /// η = y_min − gap.
    pub fn from_gap(y_min: f64, gap: f64) -> Result<Self> {
        if !(gap > 0.0) || !gap.is_finite() || !y_min.is_finite() {
            return Err(FitboError::Domain(format!(
                "eta must lie strictly below y_min = {y_min} (gap {gap})"
            )));
        }
        Ok(Self { y_min, gap })
    }

    pub fn value(&self) -> f64 {
        self.y_min - self.gap
    }

    /// y_min − η.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }
}

/// g_i = sqrt(2(y_i − η)).
pub fn transform_targets(y: &[f64], eta: &EtaValue) -> Result<Vec<f64>> {
    let y_min = y.iter().copied().fold(f64::INFINITY, f64::min);
    if !(eta.value() < y_min) {
        return Err(FitboError::Domain(format!(
            "eta = {} is not below min(y) = {y_min}",
            eta.value()
        )));
    }
    // Measuring from the shared reference keeps g exactly translation
    // invariant when η was drawn against this dataset.
    let g = if y_min == eta.y_min() {
        y.iter()
            .map(|yi| (2.0 * ((yi - y_min) + eta.gap())).sqrt())
            .collect()
    } else {
        let e = eta.value();
        y.iter().map(|yi| (2.0 * (yi - e)).sqrt()).collect()
    };
    Ok(g)
}

/// How observation noise enters the covariance of the g-targets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    /// g is interpolated with solver jitter only; σ_n appears only in the
    /// predictive of y.
    JitterOnly,
    /// y-space noise carried to g to first order: σ_n² / g_i² on the diagonal.
    #[default]
    Propagated,
}

/// Covariance of the g-targets under `noise`, before solver jitter.
pub fn target_covariance(
    ds: &Dataset,
    hypers: &KernelHypers,
    g: &[f64],
    noise: NoiseModel,
) -> Result<DMatrix<f64>> {
    let mut k = gram_matrix(ds, hypers)?;
    if noise == NoiseModel::Propagated {
        let s2 = hypers.noise_variance();
        for (i, gi) in g.iter().enumerate() {
            k[(i, i)] += s2 / (gi * gi);
        }
    }
    Ok(k)
}

/// Fitted warped model for one hyperparameter sample.
#[derive(Debug, Clone)]
pub struct WarpedPosterior {
    dataset: Arc<Dataset>,
    hypers: KernelHypers,
    eta: EtaValue,
    g: Vec<f64>,
    noise: NoiseModel,
    gp: GpPosterior,
}

impl WarpedPosterior {
    pub fn new(
        dataset: Arc<Dataset>,
        hypers: KernelHypers,
        eta: EtaValue,
        noise: NoiseModel,
    ) -> Result<Self> {
        hypers.validate()?;
        let g = transform_targets(dataset.y(), &eta)?;
        let chol = cholesky_jitter(&target_covariance(&dataset, &hypers, &g, noise)?)?;
        let gp = GpPosterior::from_factor(&dataset, &g, &hypers, &chol)?;
        Ok(Self {
            dataset,
            hypers,
            eta,
            g,
            noise,
            gp,
        })
    }

    pub fn noise_model(&self) -> NoiseModel {
        self.noise
    }

    pub fn dataset(&self) -> &Arc<Dataset> {
        &self.dataset
    }

    pub fn hypers(&self) -> &KernelHypers {
        &self.hypers
    }

    pub fn eta(&self) -> EtaValue {
        self.eta
    }

    /// Transformed targets g.
    pub fn targets(&self) -> &[f64] {
        &self.g
    }

    pub fn latent(&self) -> &GpPosterior {
        &self.gp
    }

    pub fn dim(&self) -> usize {
        self.dataset.dim()
    }

    /// Linearised predictive mean and variance of f at `x`.
    pub fn predict_f(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.gp.check_dim(x)?;
        let mut s = Scratch::with_capacity(self.dataset.len());
        Ok(self.predict_f_with(x, &mut s))
    }

    /// Predictive mean and variance of a noisy observation at `x`.
    pub fn predict_y(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.gp.check_dim(x)?;
        let mut s = Scratch::with_capacity(self.dataset.len());
        Ok(self.predict_y_with(x, &mut s))
    }

    #[inline]
    pub fn predict_f_with(&self, x: &[f64], s: &mut Scratch) -> (f64, f64) {
        let (m_g, v_g) = self.gp.predict_with(x, s);
        linearise(self.eta.value(), m_g, v_g)
    }

    #[inline]
    pub fn predict_y_with(&self, x: &[f64], s: &mut Scratch) -> (f64, f64) {
        let (m, v) = self.predict_f_with(x, s);
        (m, v + self.hypers.noise_variance())
    }

    /// Mean of f only; skips the variance solve.
    #[inline]
    pub fn mean_f_with(&self, x: &[f64], s: &mut Scratch) -> f64 {
        let m_g = self.gp.mean_with(x, s);
        self.eta.value() + 0.5 * m_g * m_g
    }
}

/// First-order warp of a Gaussian on g around its mean.
#[inline]
pub fn linearise(eta: f64, m_g: f64, v_g: f64) -> (f64, f64) {
    (eta + 0.5 * m_g * m_g, (m_g * m_g * v_g).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn dataset(rows: &[f64], y: &[f64]) -> Arc<Dataset> {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| vec![*r]).collect();
        Arc::new(Dataset::new(1, &rows, y).unwrap())
    }

    #[test]
    fn transform_examples() {
        let eta = EtaValue::new(0.5, 1.0).unwrap();
        assert_abs_diff_eq!(
            transform_targets(&[1.0], &eta).unwrap()[0],
            1.0,
            epsilon = 1e-15
        );
        let eta = EtaValue::new(1.0, 3.0).unwrap();
        assert_eq!(
            transform_targets(&[3.0, 3.0], &eta).unwrap(),
            vec![2.0, 2.0]
        );
        let c: f64 = -1.7;
        let eta = EtaValue::new(0.25, 0.25 + 0.5 * c * c).unwrap();
        let g = transform_targets(&[0.25 + 0.5 * c * c], &eta).unwrap();
        assert_abs_diff_eq!(g[0], c.abs(), epsilon = 1e-12);
    }

    #[test]
    fn transform_rejects_eta_at_or_above_minimum() {
        assert!(EtaValue::new(1.0, 1.0).is_err());
        let eta = EtaValue::new(0.9, 5.0).unwrap();
        assert!(matches!(
            transform_targets(&[0.5, 2.0], &eta),
            Err(FitboError::Domain(_))
        ));
    }

    #[test]
    fn transform_is_decreasing_in_eta() {
        let y = [0.3, 1.2, 4.0];
        let lo = transform_targets(&y, &EtaValue::new(-1.0, 0.3).unwrap()).unwrap();
        let hi = transform_targets(&y, &EtaValue::new(0.1, 0.3).unwrap()).unwrap();
        assert!(lo.iter().zip(&hi).all(|(a, b)| a > b));
    }

    #[test]
    fn predictive_mean_interpolates_noise_free_data() {
        let ds = dataset(&[0.1, 0.4, 0.8], &[1.0, 0.2, 2.5]);
        let h = KernelHypers::isotropic(1, 0.3, 1.5, 0.01).unwrap();
        let wp = WarpedPosterior::new(
            ds.clone(),
            h,
            EtaValue::new(-0.3, 0.2).unwrap(),
            NoiseModel::JitterOnly,
        )
        .unwrap();
        for (row, yi) in ds.rows().zip(ds.y()) {
            let (m, _) = wp.predict_f(row).unwrap();
            assert_abs_diff_eq!(m, *yi, epsilon = 1e-3);
        }
    }

    #[test]
    fn zero_mode_collapses_to_eta() {
        assert_eq!(linearise(-2.0, 0.0, 0.7), (-2.0, 0.0));
    }

    #[test]
    fn mean_never_drops_below_eta() {
        let ds = dataset(&[0.2, 0.5, 0.6], &[3.0, 1.0, 1.5]);
        let h = KernelHypers::isotropic(1, 0.1, 2.0, 0.05).unwrap();
        let eta = EtaValue::new(0.4, 1.0).unwrap();
        let wp = WarpedPosterior::new(ds, h, eta, NoiseModel::JitterOnly).unwrap();
        for i in 0..=100 {
            let (m, v) = wp.predict_f(&[i as f64 / 100.0]).unwrap();
            assert!(m >= eta.value());
            assert!(v >= 0.0);
        }
    }

    #[test]
    fn noisy_prediction_adds_noise_variance() {
        let ds = dataset(&[0.2, 0.7], &[1.0, 1.4]);
        let h = KernelHypers::isotropic(1, 0.3, 1.0, 0.0316).unwrap();
        let wp = WarpedPosterior::new(
            ds,
            h.clone(),
            EtaValue::new(0.0, 1.0).unwrap(),
            NoiseModel::JitterOnly,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let x = [rng.random::<f64>()];
            let (mf, vf) = wp.predict_f(&x).unwrap();
            let (my, vy) = wp.predict_y(&x).unwrap();
            assert_eq!(mf, my);
            assert_abs_diff_eq!(vy - vf, h.noise_variance(), epsilon = 1e-15);
        }
    }

    #[test]
    fn sign_flip_of_targets_leaves_f_unchanged() {
        let ds = dataset(&[0.1, 0.35, 0.9], &[1.3, 0.6, 2.2]);
        let h = KernelHypers::isotropic(1, 0.25, 1.2, 0.01).unwrap();
        let eta = EtaValue::new(0.1, 0.6).unwrap();
        let wp = WarpedPosterior::new(ds.clone(), h.clone(), eta, NoiseModel::JitterOnly).unwrap();
        let neg: Vec<f64> = wp.targets().iter().map(|g| -g).collect();
        let gp_neg = GpPosterior::fit(&ds, &neg, &h).unwrap();
        for i in 0..20 {
            let x = [i as f64 / 19.0];
            let (mg, vg) = gp_neg.predict(&x).unwrap();
            let flipped = linearise(eta.value(), mg, vg);
            let direct = wp.predict_f(&x).unwrap();
            assert_abs_diff_eq!(flipped.0, direct.0, epsilon = 1e-12);
            assert_abs_diff_eq!(flipped.1, direct.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn variance_vanishes_at_training_points() {
        let ds = dataset(&[0.15, 0.5, 0.85], &[1.0, 2.0, 3.0]);
        let h = KernelHypers::isotropic(1, 0.2, 1.0, 0.01).unwrap();
        let wp = WarpedPosterior::new(
            ds.clone(),
            h,
            EtaValue::new(0.0, 1.0).unwrap(),
            NoiseModel::JitterOnly,
        )
        .unwrap();
        for row in ds.rows() {
            let (_, v) = wp.predict_f(row).unwrap();
            assert!(v < 1e-6, "{v}");
        }
    }

    // Monte-Carlo oracle: draw g from its Gaussian posterior, push it through
    // the linearised map η − ½m² + m·g and compare empirical moments.
    #[test]
    fn linearised_moments_match_monte_carlo() {
        let ds = dataset(&[0.05, 0.3, 0.55, 0.9], &[2.0, 0.7, 1.1, 3.0]);
        let h = KernelHypers::isotropic(1, 0.2, 1.4, 0.01).unwrap();
        let eta = EtaValue::new(0.2, 0.7).unwrap();
        let wp = WarpedPosterior::new(ds, h, eta, NoiseModel::JitterOnly).unwrap();
        let x = [0.42];
        let (mg, vg) = wp.latent().predict(&x).unwrap();
        let (mf, vf) = wp.predict_f(&x).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let draws = 1_000_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..draws {
            let z: f64 = StandardNormal.sample(&mut rng);
            let g = mg + vg.sqrt() * z;
            let f = eta.value() - 0.5 * mg * mg + mg * g;
            s1 += f;
            s2 += f * f;
        }
        let mean = s1 / draws as f64;
        let var = s2 / draws as f64 - mean * mean;
        let se_mean = (var / draws as f64).sqrt();
        let se_var = var * (2.0 / draws as f64).sqrt();
        assert!((mean - mf).abs() <= 3.0 * se_mean, "{mean} vs {mf}");
        assert!((var - vf).abs() <= 3.0 * se_var, "{var} vs {vf}");
    }
}
