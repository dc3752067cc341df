//! Semi-analytic compound Poisson results used to validate the Monte Carlo
//! engine.
//!
//! The terminal law of a compound Poisson process is a Poisson mixture of
//! m-fold convolutions of the jump law. Closed-form convolutions exist for
//! Gaussian jumps (again Gaussian) and constant jumps (a lattice of atoms),
//! so premiums and densities for those two laws can be summed as a series.
//! The zero-jump atom at 0 with mass e^{−λT} is always handled explicitly,
//! never folded into a density.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::JumpDistribution;
use crate::numerics::{self, KahanSum};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("poisson mean must be non-negative, got {0}")]
    NegativeMean(f64),
    #[error("invalid series control: {0}")]
    InvalidControl(String),
    #[error("series truncated at {max_terms} terms with remaining poisson mass {tail_mass:e} above tolerance {tolerance:e}")]
    TruncationFailure { max_terms: usize, tail_mass: f64, tolerance: f64 },
    #[error("no closed-form convolution for this jump law: {0}")]
    UnsupportedDistribution(String),
}

/// Truncation control for the convolution series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl {
    pub max_terms: usize,
    /// Upper bound on the neglected Poisson tail mass.
    pub tail_tolerance: f64,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self { max_terms: 200, tail_tolerance: 1e-12 }
    }
}

impl SeriesControl {
    fn validate(&self) -> Result<(), OracleError> {
        if self.max_terms < 1 {
            return Err(OracleError::InvalidControl("max_terms must be at least 1".into()));
        }
        if !(self.tail_tolerance > 0.0 && self.tail_tolerance < 1.0) {
            return Err(OracleError::InvalidControl(format!(
                "tail_tolerance must be in (0, 1), got {}",
                self.tail_tolerance
            )));
        }
        Ok(())
    }
}

/// Poisson probability mass e^{−mean}·mean^k / k!, computed in log space so
/// large means neither overflow nor lose the tail.
pub fn poisson_pmf(k: u64, mean: f64) -> Result<f64, OracleError> {
    if mean < 0.0 {
        return Err(OracleError::NegativeMean(mean));
    }
    if mean == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    Ok((-mean + k as f64 * mean.ln() - numerics::ln_factorial(k)).exp())
}

/// Sum a Poisson-weighted series Σ_m Pois(m; mean)·term(m), stopping once the
/// remaining Poisson mass drops below the tail tolerance.
fn poisson_weighted_series<F: FnMut(u64) -> f64>(
    mean: f64,
    ctrl: &SeriesControl,
    mut term: F,
) -> Result<f64, OracleError> {
    ctrl.validate()?;
    if mean < 0.0 {
        return Err(OracleError::NegativeMean(mean));
    }
    let mut total = KahanSum::new();
    let mut mass = KahanSum::new();
    for m in 0..=ctrl.max_terms as u64 {
        let w = poisson_pmf(m, mean)?;
        total.add(w * term(m));
        mass.add(w);
        if 1.0 - mass.value() < ctrl.tail_tolerance {
            return Ok(total.value());
        }
    }
    Err(OracleError::TruncationFailure {
        max_terms: ctrl.max_terms,
        tail_mass: (1.0 - mass.value()).max(0.0),
        tolerance: ctrl.tail_tolerance,
    })
}

/// E[max(Z − K, 0)] for Z ~ N(a, b²): (a−K)Φ(d) + b·φ(d) with d = (a−K)/b.
fn gaussian_call_mean(a: f64, b: f64, k: f64) -> f64 {
    if b == 0.0 {
        return (a - k).max(0.0);
    }
    let d = (a - k) / b;
    (a - k) * numerics::norm_cdf(d) + b * numerics::norm_pdf(d)
}

/// Series premium E[max(X_T − K, 0)] for Gaussian jumps N(mu_j, sd_j²) at
/// rate `lambda` over horizon `horizon_t`. The m-fold convolution of a
/// Gaussian is N(m·mu_j, m·sd_j²); the m = 0 term is the zero-jump atom with
/// payoff max(−K, 0).
pub fn gaussian_series_premium(
    mu_j: f64,
    sd_j: f64,
    lambda: f64,
    horizon_t: f64,
    strike_k: f64,
    ctrl: &SeriesControl,
) -> Result<f64, OracleError> {
    let mean = lambda * horizon_t;
    poisson_weighted_series(mean, ctrl, |m| {
        if m == 0 {
            (-strike_k).max(0.0)
        } else {
            gaussian_call_mean(m as f64 * mu_j, sd_j * (m as f64).sqrt(), strike_k)
        }
    })
}

/// Series value of the put side E[max(K − X_T, 0)], the analogous series with
/// the reflected Gaussian payoff. Used for parity checks against the call.
pub fn gaussian_series_put(
    mu_j: f64,
    sd_j: f64,
    lambda: f64,
    horizon_t: f64,
    strike_k: f64,
    ctrl: &SeriesControl,
) -> Result<f64, OracleError> {
    let mean = lambda * horizon_t;
    poisson_weighted_series(mean, ctrl, |m| {
        if m == 0 {
            strike_k.max(0.0)
        } else {
            let a = m as f64 * mu_j;
            let b = sd_j * (m as f64).sqrt();
            // E[max(K − Z, 0)] = E[max(Z' − (−K), 0)] with Z' = −Z ~ N(−a, b²)
            gaussian_call_mean(-a, b, -strike_k)
        }
    })
}

/// Series premium for constant jumps of height `jump`: the terminal value is
/// `jump·N` with N Poisson, so the premium is Σ Pois(m)·max(m·jump − K, 0).
pub fn constant_series_premium(
    jump: f64,
    lambda: f64,
    horizon_t: f64,
    strike_k: f64,
    ctrl: &SeriesControl,
) -> Result<f64, OracleError> {
    let mean = lambda * horizon_t;
    poisson_weighted_series(mean, ctrl, |m| (m as f64 * jump - strike_k).max(0.0))
}

/// Probability mass of the zero-jump atom at X_T = 0.
pub fn zero_atom_mass(lambda: f64, horizon_t: f64) -> f64 {
    (-lambda * horizon_t).exp()
}

/// Pointwise evaluation of the terminal law of the pure jump process.
///
/// - Gaussian jumps: the continuous density Σ_{m≥1} Pois(m)·N(x; m·mu, m·sd²)
///   in EUR⁻¹; the atom at 0 is *not* included (see [`zero_atom_mass`]).
/// - Constant jumps: the law is a lattice of atoms at m·jump; the returned
///   value is the probability *mass* at x when x lies on the lattice (within
///   1e-9 relative), otherwise 0. The m = 0 atom is again excluded.
///
/// Empirical and Weibull-log laws have no closed-form convolution and are
/// rejected.
pub fn compound_density(
    x: f64,
    dist: &JumpDistribution,
    lambda: f64,
    horizon_t: f64,
    ctrl: &SeriesControl,
) -> Result<f64, OracleError> {
    let mean = lambda * horizon_t;
    match dist {
        JumpDistribution::Gaussian { mu, sd } => poisson_weighted_series(mean, ctrl, |m| {
            if m == 0 {
                0.0
            } else {
                let a = m as f64 * mu;
                let b = sd * (m as f64).sqrt();
                if b == 0.0 {
                    0.0 // degenerate: atoms, not a density
                } else {
                    numerics::norm_pdf((x - a) / b) / b
                }
            }
        }),
        JumpDistribution::Constant { value } => poisson_weighted_series(mean, ctrl, |m| {
            if m == 0 {
                return 0.0;
            }
            let site = m as f64 * value;
            let tol = 1e-9 * site.abs().max(1.0);
            if (x - site).abs() <= tol {
                1.0
            } else {
                0.0
            }
        }),
        JumpDistribution::WeibullLog { .. } => {
            Err(OracleError::UnsupportedDistribution("weibull-log".into()))
        }
        JumpDistribution::Empirical { .. } => {
            Err(OracleError::UnsupportedDistribution("empirical".into()))
        }
    }
}
