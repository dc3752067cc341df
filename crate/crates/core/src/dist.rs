//! Jump-height laws: representation, sampling, moments, and the
//! Weibull-on-log-cost maximum-likelihood fit used for empirical service
//! data.

use rand::Rng;
use rand_distr::{Distribution, Normal, Weibull};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::CostRecord;
use crate::numerics;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("gaussian standard deviation must be non-negative, got {0}")]
    NegativeSd(f64),
    #[error("weibull-log shape must be positive, got {0}")]
    NonPositiveShape(f64),
    #[error("weibull-log scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("empirical sample list is empty")]
    EmptyEmpirical,
    #[error("empirical sample {index} is non-positive ({value})")]
    NonPositiveEmpirical { index: usize, value: f64 },
    #[error("moment diverges: E[exp({order}·W)] is infinite for Weibull(shape={shape}, scale={scale}) on the log scale")]
    DivergentMoment { order: u32, shape: f64, scale: f64 },
    #[error("moment quadrature failed: {0}")]
    Quadrature(#[from] numerics::QuadratureError),
    #[error("need at least {min} cost records to fit, got {n}")]
    TooFewSamples { n: usize, min: usize },
    #[error("cost at record {index} is {value} EUR; fitting requires every cost > 1 EUR")]
    CostBelowThreshold { index: usize, value: f64 },
    #[error("degenerate sample: all log-costs equal, zero variance")]
    DegenerateSample,
    #[error("weibull MLE did not converge after {iterations} iterations (residual {residual})")]
    MleNonConvergence { iterations: usize, residual: f64 },
}

/// The law of a single cost jump `J_i`.
///
/// `WeibullLog` puts a Weibull law on `ln(cost)`, a common empirical model
/// for fat-tailed service cost. Its moments are computed by quadrature and
/// may genuinely diverge (shape ≤ 1), which is reported as an error rather
/// than an infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum JumpDistribution {
    Gaussian { mu: f64, sd: f64 },
    Constant { value: f64 },
    WeibullLog { shape: f64, scale: f64 },
    Empirical { samples: Vec<f64> },
}

impl JumpDistribution {
    pub fn gaussian(mu: f64, sd: f64) -> Result<Self, DistError> {
        if sd < 0.0 {
            return Err(DistError::NegativeSd(sd));
        }
        Ok(Self::Gaussian { mu, sd })
    }

    pub fn constant(value: f64) -> Result<Self, DistError> {
        Ok(Self::Constant { value })
    }

    pub fn weibull_log(shape: f64, scale: f64) -> Result<Self, DistError> {
        if !(shape > 0.0) {
            return Err(DistError::NonPositiveShape(shape));
        }
        if !(scale > 0.0) {
            return Err(DistError::NonPositiveScale(scale));
        }
        Ok(Self::WeibullLog { shape, scale })
    }

    pub fn empirical(samples: Vec<f64>) -> Result<Self, DistError> {
        if samples.is_empty() {
            return Err(DistError::EmptyEmpirical);
        }
        for (i, &v) in samples.iter().enumerate() {
            if !(v > 0.0) {
                return Err(DistError::NonPositiveEmpirical { index: i, value: v });
            }
        }
        Ok(Self::Empirical { samples })
    }

    /// Draw one jump height.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Gaussian { mu, sd } => {
                if *sd == 0.0 {
                    *mu
                } else {
                    Normal::new(*mu, *sd).expect("validated at construction").sample(rng)
                }
            }
            Self::Constant { value } => *value,
            Self::WeibullLog { shape, scale } => {
                let w = Weibull::new(*scale, *shape).expect("validated at construction").sample(rng);
                w.exp()
            }
            Self::Empirical { samples } => samples[rng.gen_range(0..samples.len())],
        }
    }

    /// E[J]. Exact except for `WeibullLog`, where `E[exp(W)]` is evaluated by
    /// adaptive quadrature (relative tolerance 1e-8) and divergence for
    /// shape ≤ 1 is detected analytically.
    pub fn mean(&self) -> Result<f64, DistError> {
        match self {
            Self::Gaussian { mu, .. } => Ok(*mu),
            Self::Constant { value } => Ok(*value),
            Self::WeibullLog { shape, scale } => exp_weibull_moment(*shape, *scale, 1),
            Self::Empirical { samples } => {
                Ok(numerics::pairwise_sum(samples) / samples.len() as f64)
            }
        }
    }

    /// Var[J], population (1/n) convention for the empirical variant.
    pub fn variance(&self) -> Result<f64, DistError> {
        match self {
            Self::Gaussian { sd, .. } => Ok(sd * sd),
            Self::Constant { .. } => Ok(0.0),
            Self::WeibullLog { shape, scale } => {
                let m1 = exp_weibull_moment(*shape, *scale, 1)?;
                let m2 = exp_weibull_moment(*shape, *scale, 2)?;
                Ok(m2 - m1 * m1)
            }
            Self::Empirical { samples } => {
                let n = samples.len() as f64;
                let mean = numerics::pairwise_sum(samples) / n;
                let sq: Vec<f64> = samples.iter().map(|&x| (x - mean) * (x - mean)).collect();
                Ok(numerics::pairwise_sum(&sq) / n)
            }
        }
    }

    /// E[J²], convenience for the variance premium principle (Var[X_T] =
    /// λT·E[J²] for a compound Poisson).
    pub fn second_moment(&self) -> Result<f64, DistError> {
        let m = self.mean()?;
        Ok(self.variance()? + m * m)
    }
}

/// E[exp(order·W)] for W ~ Weibull(shape, scale).
///
/// Substituting u = (w/scale)^shape turns the integral into
/// ∫₀^∞ exp(order·scale·u^{1/shape} − u) du. The tail decays like e^{−u}
/// only when shape > 1; shape < 1 always diverges, and shape = 1 (ln J
/// exponential) diverges when order·scale ≥ 1.
fn exp_weibull_moment(shape: f64, scale: f64, order: u32) -> Result<f64, DistError> {
    let s = order as f64 * scale;
    if shape < 1.0 || (shape == 1.0 && s >= 1.0) {
        return Err(DistError::DivergentMoment { order, shape, scale });
    }
    let upper = if shape == 1.0 {
        // integrand exp(-(1-s)u)
        (700.0 / (1.0 - s)).min(1e9)
    } else {
        // beyond this point the exponent is below -u/2
        let base = (2.0 * s).powf(shape / (shape - 1.0));
        if !base.is_finite() || base > 1e5 {
            return Err(DistError::Quadrature(numerics::QuadratureError::NonConvergence {
                tolerance: 1e-8,
                estimate: f64::INFINITY,
            }));
        }
        base.max(60.0) + 60.0
    };
    let integrand = |u: f64| (s * u.powf(1.0 / shape) - u).exp();
    let value = numerics::integrate(&integrand, 0.0, upper, 1e-8)?;
    Ok(value)
}

/// Maximum-likelihood Weibull fit of the log-costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeibullFit {
    pub shape: f64,
    pub scale: f64,
    pub log_likelihood: f64,
    pub n_samples: usize,
    /// Kolmogorov–Smirnov distance between the fitted CDF and the empirical
    /// CDF of the log-costs.
    pub ks_statistic: f64,
}

impl WeibullFit {
    pub fn distribution(&self) -> JumpDistribution {
        JumpDistribution::WeibullLog { shape: self.shape, scale: self.scale }
    }
}

const MLE_MAX_ITER: usize = 200;
const MLE_TOL: f64 = 1e-10;

/// Fit `ln(cost)` with a Weibull(shape, scale) law by maximum likelihood.
///
/// The shape solves the profile score equation
/// `1/k + mean(ln x) − Σ x^k ln x / Σ x^k = 0` (x = ln cost) by safeguarded
/// Newton iteration within a bisection bracket; the scale follows in closed
/// form as `(Σ x^k / n)^{1/k}`.
///
/// Preconditions: at least 10 records and every cost strictly above 1 EUR,
/// so that every log-cost is positive (Weibull support).
pub fn fit_weibull_log(costs: &[f64]) -> Result<WeibullFit, DistError> {
    const MIN_SAMPLES: usize = 10;
    if costs.len() < MIN_SAMPLES {
        return Err(DistError::TooFewSamples { n: costs.len(), min: MIN_SAMPLES });
    }
    for (i, &c) in costs.iter().enumerate() {
        if !(c > 1.0) {
            return Err(DistError::CostBelowThreshold { index: i, value: c });
        }
    }
    let x: Vec<f64> = costs.iter().map(|c| c.ln()).collect();
    let n = x.len() as f64;
    let (lo_x, hi_x) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if hi_x - lo_x < 1e-12 * hi_x.abs().max(1.0) {
        return Err(DistError::DegenerateSample);
    }
    let log_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let mean_log = numerics::pairwise_sum(&log_x) / n;

    // score f(k) and its derivative; f is strictly decreasing in k
    let score = |k: f64| -> (f64, f64) {
        let mut s0 = numerics::KahanSum::new();
        let mut s1 = numerics::KahanSum::new();
        let mut s2 = numerics::KahanSum::new();
        for (&xi, &li) in x.iter().zip(&log_x) {
            let p = xi.powf(k);
            s0.add(p);
            s1.add(p * li);
            s2.add(p * li * li);
        }
        let (s0, s1, s2) = (s0.value(), s1.value(), s2.value());
        let f = 1.0 / k + mean_log - s1 / s0;
        let fp = -1.0 / (k * k) - (s2 * s0 - s1 * s1) / (s0 * s0);
        (f, fp)
    };

    // bracket the root by doubling/halving from k = 1
    let mut lo = 1.0_f64;
    let mut hi = 1.0_f64;
    let (f1, _) = score(1.0);
    if f1 > 0.0 {
        while score(hi).0 > 0.0 {
            hi *= 2.0;
            if hi > 1e8 {
                return Err(DistError::MleNonConvergence { iterations: 0, residual: f1 });
            }
        }
        lo = hi / 2.0;
    } else {
        while score(lo).0 < 0.0 {
            lo /= 2.0;
            if lo < 1e-8 {
                return Err(DistError::MleNonConvergence { iterations: 0, residual: f1 });
            }
        }
        hi = lo * 2.0;
    }

    let mut k = 0.5 * (lo + hi);
    let mut residual = f64::INFINITY;
    for _ in 0..MLE_MAX_ITER {
        let (f, fp) = score(k);
        residual = f;
        if f.abs() <= MLE_TOL {
            break;
        }
        if f > 0.0 {
            lo = k;
        } else {
            hi = k;
        }
        let newton = k - f / fp;
        k = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    if residual.abs() > MLE_TOL {
        return Err(DistError::MleNonConvergence { iterations: MLE_MAX_ITER, residual });
    }

    let s0: f64 = {
        let mut acc = numerics::KahanSum::new();
        for &xi in &x {
            acc.add(xi.powf(k));
        }
        acc.value()
    };
    let scale = (s0 / n).powf(1.0 / k);

    let mut ll = numerics::KahanSum::new();
    for &xi in &x {
        ll.add(k.ln() - k * scale.ln() + (k - 1.0) * xi.ln() - (xi / scale).powf(k));
    }

    // one-sample KS distance of the fitted CDF against the empirical CDF
    let mut sorted = x.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut ks = 0.0_f64;
    for (i, &xi) in sorted.iter().enumerate() {
        let cdf = 1.0 - (-(xi / scale).powf(k)).exp();
        ks = ks.max(cdf - i as f64 / n).max((i + 1) as f64 / n - cdf);
    }

    Ok(WeibullFit {
        shape: k,
        scale,
        log_likelihood: ll.value(),
        n_samples: x.len(),
        ks_statistic: ks,
    })
}

/// Empirical jump law over the cost column of a record set; duplicates are
/// preserved, sampling is with replacement.
pub fn empirical_from_records(records: &[CostRecord]) -> Result<JumpDistribution, DistError> {
    JumpDistribution::empirical(records.iter().map(|r| r.cost_eur).collect())
}
