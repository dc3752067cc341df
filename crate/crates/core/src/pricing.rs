//! Contract pricing: Monte Carlo risk premium, strike selection, total price,
//! discounting, and the two classical actuarial premium principles.
//!
//! The premium is the expected call-style payoff `C = E[max(X_T − K, 0)]`
//! with the strike defaulting to the expected total cost, and the contract
//! price is `P = C + E[X_T]`. Path simulation fans out across rayon workers;
//! every path owns a substream keyed by `(master_seed, path_index)` and
//! aggregation uses a fixed pairwise reduction tree, so results are
//! bit-stable across worker counts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{DistError, JumpDistribution};
use crate::numerics::pairwise_sum;
use crate::process::{simulate_path, ProcessParams};
use crate::rng::path_stream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PricingError {
    #[error("need at least 2 paths, got {0}")]
    TooFewPaths(u64),
    #[error("jump-law moment failed: {0}")]
    Dist(#[from] DistError),
    #[error("safety loading must be non-negative, got {0}")]
    NegativeLoading(f64),
    #[error("variance loading must be positive, got {0}")]
    NonPositiveVarianceLoading(f64),
    #[error(
        "pathwise parity violated: |(C - P) - (mean - K)| = {gap:e} exceeds {tolerance:e}; \
         the simulation accumulators are inconsistent"
    )]
    ParityViolation { gap: f64, tolerance: f64 },
}

/// How the strike K is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum StrikeMode {
    /// K = λT·E[J], the expected total cost (the default, used in all
    /// reported sweeps).
    #[default]
    ExpectedTotal,
    /// K = E[J], the mean of a single jump; kept as a configuration option.
    SingleJumpMean,
}

/// Everything one pricing run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingResult {
    pub premium_c: f64,
    pub expected_cost: f64,
    pub strike_k: f64,
    pub total_price_p: f64,
    pub std_error: f64,
    pub n_paths: u64,
    pub master_seed: u64,
    pub discount_applied: bool,
}

/// Expected terminal cost of the compound Poisson part: λ·T·E[J].
pub fn expected_cost(lambda: f64, horizon_t: f64, mean_jump: f64) -> f64 {
    lambda * horizon_t * mean_jump
}

/// Strike for the payoff max(X_T − K, 0) under the chosen convention.
pub fn strike_price(mode: StrikeMode, lambda: f64, horizon_t: f64, mean_jump: f64) -> f64 {
    match mode {
        StrikeMode::ExpectedTotal => expected_cost(lambda, horizon_t, mean_jump),
        StrikeMode::SingleJumpMean => mean_jump,
    }
}

/// Total contract price P = C + E[X_T].
pub fn total_price(premium: f64, expected_cost: f64) -> f64 {
    premium + expected_cost
}

/// Discount a premium by e^{−γτ}. With the product price as numéraire, γ is
/// the depreciation of the product price over the remaining time τ.
pub fn discounted_premium(premium: f64, gamma: f64, tau: f64) -> f64 {
    (-gamma * tau).exp() * premium
}

/// Expected-value principle with safety loading: (1 + θ)·E[X].
pub fn actuarial_loaded_premium(expected_claims: f64, theta: f64) -> Result<f64, PricingError> {
    if theta < 0.0 {
        return Err(PricingError::NegativeLoading(theta));
    }
    Ok((1.0 + theta) * expected_claims)
}

/// Variance principle: E[X] + α·Var[X]. The variance is caller-supplied so
/// the rule also serves empirical (non-compound-Poisson) claim data; for a
/// compound Poisson pass Var[X_T] = λT·E[J²].
pub fn actuarial_variance_premium(
    expected_claims: f64,
    variance_claims: f64,
    alpha: f64,
) -> Result<f64, PricingError> {
    if alpha <= 0.0 {
        return Err(PricingError::NonPositiveVarianceLoading(alpha));
    }
    Ok(expected_claims + alpha * variance_claims)
}

/// Per-path outputs of one Monte Carlo run, kept in path order.
struct McSample {
    calls: Vec<f64>,
    puts: Vec<f64>,
    terminals: Vec<f64>,
}

fn simulate_terminals(
    params: &ProcessParams,
    dist: &JumpDistribution,
    strike: f64,
    n_paths: u64,
    master_seed: u64,
) -> McSample {
    let terminals: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_stream(master_seed, i);
            simulate_path(params, dist, &mut rng).terminal_value
        })
        .collect();
    let calls = terminals.iter().map(|&x| (x - strike).max(0.0)).collect();
    let puts = terminals.iter().map(|&x| (strike - x).max(0.0)).collect();
    McSample { calls, puts, terminals }
}

const PARITY_REL_TOL: f64 = 1e-9;

/// Check the pathwise identity mean(call) − mean(put) = mean(X) − K on the
/// realized sample. It holds exactly in real arithmetic, so any violation
/// beyond floating-point noise flags a broken accumulator.
fn check_parity(sample: &McSample, strike: f64, n: f64) -> Result<(), PricingError> {
    let call_mean = pairwise_sum(&sample.calls) / n;
    let put_mean = pairwise_sum(&sample.puts) / n;
    let term_mean = pairwise_sum(&sample.terminals) / n;
    let gap = ((call_mean - put_mean) - (term_mean - strike)).abs();
    let tolerance = PARITY_REL_TOL * (term_mean.abs() + strike.abs()).max(1.0);
    if gap > tolerance {
        return Err(PricingError::ParityViolation { gap, tolerance });
    }
    Ok(())
}

/// Monte Carlo risk premium: mean over `n_paths` of max(X_T − K, 0), with its
/// standard error (unbiased n−1 variance). Deterministic for a fixed seed,
/// independent of the number of rayon workers.
pub fn mc_risk_premium(
    params: &ProcessParams,
    dist: &JumpDistribution,
    strike: f64,
    n_paths: u64,
    master_seed: u64,
) -> Result<(f64, f64), PricingError> {
    if n_paths < 2 {
        return Err(PricingError::TooFewPaths(n_paths));
    }
    let sample = simulate_terminals(params, dist, strike, n_paths, master_seed);
    let n = n_paths as f64;
    check_parity(&sample, strike, n)?;
    let mean = pairwise_sum(&sample.calls) / n;
    let sq: Vec<f64> = sample.calls.iter().map(|&c| (c - mean) * (c - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Full pricing run: derives E[X_T] and K from the jump-law moments, runs the
/// Monte Carlo premium, and assembles the contract price P = C + E[X_T].
///
/// With `discount` set, the premium (and hence P) is discounted by e^{−γT}
/// using the process drift as depreciation rate; by default no discounting is
/// applied.
pub fn price_contract(
    params: &ProcessParams,
    dist: &JumpDistribution,
    mode: StrikeMode,
    n_paths: u64,
    master_seed: u64,
    discount: bool,
) -> Result<PricingResult, PricingError> {
    let mean_jump = dist.mean()?;
    let expected_jumps = params.rate.expected_count(params.horizon_t);
    let strike_k = match mode {
        StrikeMode::ExpectedTotal => expected_jumps * mean_jump,
        StrikeMode::SingleJumpMean => mean_jump,
    };
    let expected = params.drift_gamma * params.horizon_t + expected_jumps * mean_jump;
    let (raw_premium, std_error) = mc_risk_premium(params, dist, strike_k, n_paths, master_seed)?;
    let premium_c = if discount {
        discounted_premium(raw_premium, params.drift_gamma, params.horizon_t)
    } else {
        raw_premium
    };
    Ok(PricingResult {
        premium_c,
        expected_cost: expected,
        strike_k,
        total_price_p: total_price(premium_c, expected),
        std_error: if discount {
            discounted_premium(std_error, params.drift_gamma, params.horizon_t)
        } else {
            std_error
        },
        n_paths,
        master_seed,
        discount_applied: discount,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::RateSpec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn expected_cost_and_strike_trivials() {
        assert_relative_eq!(expected_cost(2.0, 3.0, 10.0), 60.0);
        assert_eq!(expected_cost(0.0, 3.0, 10.0), 0.0);
        assert_relative_eq!(strike_price(StrikeMode::ExpectedTotal, 1.0, 10.0, 5.0), 50.0);
        assert_relative_eq!(strike_price(StrikeMode::SingleJumpMean, 1.0, 10.0, 5.0), 5.0);
        for &(l, t, j) in &[(0.5, 1.0, 3.0), (2.0, 7.0, 11.0)] {
            assert_eq!(strike_price(StrikeMode::ExpectedTotal, l, t, j), expected_cost(l, t, j));
        }
    }

    #[test]
    fn total_price_and_discounting() {
        assert_relative_eq!(total_price(3000.0, 8195.47), 11195.47);
        assert_relative_eq!(total_price(0.0, 8195.47), 8195.47);
        assert_relative_eq!(discounted_premium(100.0, 0.0, 5.0), 100.0);
        assert_relative_eq!(discounted_premium(100.0, 0.1, 0.0), 100.0);
        assert_relative_eq!(discounted_premium(100.0, 0.1, 1.0), 90.483_741_803_595_96, epsilon = 1e-10);
    }

    #[test]
    fn actuarial_principles() {
        assert_relative_eq!(actuarial_loaded_premium(100.0, 0.0).unwrap(), 100.0);
        assert_relative_eq!(actuarial_loaded_premium(100.0, 0.2).unwrap(), 120.0);
        assert_eq!(actuarial_loaded_premium(0.0, 0.3).unwrap(), 0.0);
        assert!(actuarial_loaded_premium(100.0, -0.1).is_err());

        assert_relative_eq!(actuarial_variance_premium(100.0, 50.0, 1e-12).unwrap(), 100.0, epsilon = 1e-9);
        assert_relative_eq!(actuarial_variance_premium(100.0, 0.0, 0.5).unwrap(), 100.0);
        assert!(actuarial_variance_premium(100.0, 50.0, 0.0).is_err());
        // constant jumps J=c: E = λTc, Var = λTc²
        let (l, t, c, a) = (2.0, 5.0, 3.0, 0.1);
        let v = actuarial_variance_premium(l * t * c, l * t * c * c, a).unwrap();
        assert_relative_eq!(v, l * t * c + a * l * t * c * c, epsilon = 1e-12);
    }

    #[test]
    fn zero_rate_premium_is_exactly_zero() {
        let params = ProcessParams::pure_jump(0.0, 10.0).unwrap();
        let dist = JumpDistribution::constant(5.0).unwrap();
        let (c, se) = mc_risk_premium(&params, &dist, 10.0, 1000, 1).unwrap();
        assert_eq!(c, 0.0);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn too_few_paths_rejected() {
        let params = ProcessParams::pure_jump(1.0, 1.0).unwrap();
        let dist = JumpDistribution::constant(1.0).unwrap();
        assert!(matches!(
            mc_risk_premium(&params, &dist, 1.0, 1, 1),
            Err(PricingError::TooFewPaths(1))
        ));
    }

    #[test]
    fn constant_jump_unit_rate_premium_near_exp_minus_one() {
        // J=1, λT=1, K=1 → E[max(N−1, 0)] = e^{−1}
        let params = ProcessParams::pure_jump(1.0, 1.0).unwrap();
        let dist = JumpDistribution::constant(1.0).unwrap();
        let (c, se) = mc_risk_premium(&params, &dist, 1.0, 200_000, 7).unwrap();
        assert!((c - (-1.0_f64).exp()).abs() < 3.0 * se, "premium {c} se {se}");
    }

    #[test]
    fn seed_determinism_across_worker_counts() {
        let params = ProcessParams::new(0.0, 2.0, RateSpec::Constant(1.5), 2.0).unwrap();
        let dist = JumpDistribution::gaussian(10.0, 3.0).unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| price_contract(&params, &dist, StrikeMode::ExpectedTotal, 20_000, 42, false).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a, b);
        assert_eq!(a.premium_c.to_bits(), b.premium_c.to_bits());
    }

    #[test]
    fn price_contract_fields_consistent() {
        let params = ProcessParams::pure_jump(2.0, 5.0).unwrap();
        let dist = JumpDistribution::gaussian(10.0, 2.0).unwrap();
        let r = price_contract(&params, &dist, StrikeMode::ExpectedTotal, 50_000, 3, false).unwrap();
        assert_relative_eq!(r.strike_k, 100.0, epsilon = 1e-12);
        assert_relative_eq!(r.expected_cost, 100.0, epsilon = 1e-12);
        assert_relative_eq!(r.total_price_p, r.premium_c + r.expected_cost, epsilon = 1e-12);
        assert!(r.premium_c >= 0.0 && r.std_error >= 0.0);
        assert!(!r.discount_applied);

        let single = price_contract(&params, &dist, StrikeMode::SingleJumpMean, 5_000, 3, false).unwrap();
        assert_relative_eq!(single.strike_k, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn single_point_strike_mode_with_discount() {
        let params = ProcessParams::new(0.05, 0.0, RateSpec::Constant(1.0), 2.0).unwrap();
        let dist = JumpDistribution::constant(4.0).unwrap();
        let raw = price_contract(&params, &dist, StrikeMode::ExpectedTotal, 10_000, 9, false).unwrap();
        let disc = price_contract(&params, &dist, StrikeMode::ExpectedTotal, 10_000, 9, true).unwrap();
        assert!(disc.discount_applied);
        assert_relative_eq!(disc.premium_c, discounted_premium(raw.premium_c, 0.05, 2.0), epsilon = 1e-12);
    }

    #[test]
    fn premium_monotone_in_strike_on_fixed_paths() {
        let params = ProcessParams::pure_jump(2.0, 2.0).unwrap();
        let dist = JumpDistribution::gaussian(10.0, 3.0).unwrap();
        let mut prev = f64::INFINITY;
        for &k in &[0.0, 10.0, 20.0, 40.0, 80.0] {
            let (c, _) = mc_risk_premium(&params, &dist, k, 20_000, 5).unwrap();
            assert!(c <= prev + 1e-12);
            prev = c;
        }
    }

    #[test]
    fn at_the_money_call_equals_put_on_sample() {
        // strike set to the realized sample mean: call and put means coincide
        let params = ProcessParams::pure_jump(2.0, 2.0).unwrap();
        let dist = JumpDistribution::gaussian(10.0, 3.0).unwrap();
        let sample = simulate_terminals(&params, &dist, 0.0, 50_000, 11);
        let n = 50_000.0;
        let mean = pairwise_sum(&sample.terminals) / n;
        let at_money = simulate_terminals(&params, &dist, mean, 50_000, 11);
        let call = pairwise_sum(&at_money.calls) / n;
        let put = pairwise_sum(&at_money.puts) / n;
        assert_relative_eq!(call, put, max_relative = 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn premium_nonnegative_and_parity_holds(
            lambda in 0.0f64..4.0,
            strike in 0.0f64..60.0,
            seed in any::<u64>(),
        ) {
            let params = ProcessParams::pure_jump(lambda, 2.0).unwrap();
            let dist = JumpDistribution::gaussian(8.0, 2.5).unwrap();
            // mc_risk_premium runs the parity check internally
            let (c, se) = mc_risk_premium(&params, &dist, strike, 2_000, seed).unwrap();
            prop_assert!(c >= 0.0);
            prop_assert!(se >= 0.0);
        }
    }
}
