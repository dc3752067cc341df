//! Lévy life-cycle cost process: drift + Brownian diffusion + compound
//! Poisson cost jumps, plus the compensated (martingale) variant.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::JumpDistribution;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProcessError {
    #[error("sigma must be non-negative, got {0}")]
    NegativeSigma(f64),
    #[error("horizon must be positive, got {0}")]
    NonPositiveHorizon(f64),
    #[error("constant rate must be non-negative, got {0}")]
    NegativeRate(f64),
    #[error("rate table is empty")]
    EmptyRateTable,
    #[error("rate table has negative value {value} at knot {index}")]
    NegativeRateKnot { index: usize, value: f64 },
    #[error("rate table knot times must be strictly increasing (knot {index})")]
    UnorderedRateKnot { index: usize },
    #[error("lambda_max {lambda_max} is below the table maximum {table_max}")]
    LambdaMaxTooSmall { lambda_max: f64, table_max: f64 },
}

/// Piecewise-linear failure-rate table λ(t) with a thinning bound λ_max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    knots: Vec<(f64, f64)>,
    lambda_max: f64,
}

impl RateTable {
    pub fn new(knots: Vec<(f64, f64)>, lambda_max: f64) -> Result<Self, ProcessError> {
        if knots.is_empty() {
            return Err(ProcessError::EmptyRateTable);
        }
        let mut table_max = 0.0_f64;
        for (i, &(t, v)) in knots.iter().enumerate() {
            if v < 0.0 {
                return Err(ProcessError::NegativeRateKnot { index: i, value: v });
            }
            if i > 0 && t <= knots[i - 1].0 {
                return Err(ProcessError::UnorderedRateKnot { index: i });
            }
            table_max = table_max.max(v);
        }
        if lambda_max < table_max {
            return Err(ProcessError::LambdaMaxTooSmall { lambda_max, table_max });
        }
        Ok(Self { knots, lambda_max })
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// λ(t) by linear interpolation; clamped to the end values outside the
    /// tabulated range.
    pub fn rate_at(&self, t: f64) -> f64 {
        let knots = &self.knots;
        if t <= knots[0].0 {
            return knots[0].1;
        }
        if t >= knots[knots.len() - 1].0 {
            return knots[knots.len() - 1].1;
        }
        let idx = knots.partition_point(|&(kt, _)| kt <= t);
        let (t0, v0) = knots[idx - 1];
        let (t1, v1) = knots[idx];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Cumulative rate Λ(t) = ∫₀ᵗ λ(s) ds, exact for the piecewise-linear
    /// table (trapezoids).
    pub fn cumulative(&self, t: f64) -> f64 {
        let mut total = 0.0;
        let mut prev_t = 0.0;
        let mut prev_v = self.rate_at(0.0);
        for &(kt, kv) in &self.knots {
            if kt <= prev_t {
                prev_v = kv;
                continue;
            }
            if kt >= t {
                let v_end = self.rate_at(t);
                total += 0.5 * (prev_v + v_end) * (t - prev_t);
                return total;
            }
            total += 0.5 * (prev_v + kv) * (kt - prev_t);
            prev_t = kt;
            prev_v = kv;
        }
        // beyond the last knot the rate is constant
        total + prev_v * (t - prev_t)
    }
}

/// Failure-rate specification: homogeneous or tabulated time-varying.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RateSpec {
    Constant(f64),
    TimeVarying(RateTable),
}

impl RateSpec {
    fn validate(&self) -> Result<(), ProcessError> {
        match self {
            RateSpec::Constant(l) if *l < 0.0 => Err(ProcessError::NegativeRate(*l)),
            _ => Ok(()),
        }
    }

    /// Expected jump count over `[0, t]`.
    pub fn expected_count(&self, t: f64) -> f64 {
        match self {
            RateSpec::Constant(l) => l * t,
            RateSpec::TimeVarying(table) => table.cumulative(t),
        }
    }
}

/// Parameters of the cost process `X_t = γt + σW_t + Σ J_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessParams {
    pub drift_gamma: f64,
    pub sigma: f64,
    pub rate: RateSpec,
    pub horizon_t: f64,
}

impl ProcessParams {
    pub fn new(drift_gamma: f64, sigma: f64, rate: RateSpec, horizon_t: f64) -> Result<Self, ProcessError> {
        if sigma < 0.0 {
            return Err(ProcessError::NegativeSigma(sigma));
        }
        if horizon_t <= 0.0 {
            return Err(ProcessError::NonPositiveHorizon(horizon_t));
        }
        rate.validate()?;
        Ok(Self { drift_gamma, sigma, rate, horizon_t })
    }

    /// Pure compound Poisson with constant rate, the setting of the reported
    /// simulations (γ = 0, σ = 0).
    pub fn pure_jump(lambda: f64, horizon_t: f64) -> Result<Self, ProcessError> {
        Self::new(0.0, 0.0, RateSpec::Constant(lambda), horizon_t)
    }
}

/// One realized trajectory, reduced to what terminal pricing needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    /// Strictly increasing jump times in (0, horizon].
    pub jump_times: Vec<f64>,
    /// Jump heights, same length as `jump_times`.
    pub jump_heights: Vec<f64>,
    /// X_T = γT + σW_T + Σ J_i.
    pub terminal_value: f64,
    pub includes_diffusion: bool,
}

impl Path {
    pub fn jump_sum(&self) -> f64 {
        crate::numerics::pairwise_sum(&self.jump_heights)
    }
}

/// Jump times of a homogeneous Poisson process on (0, T]: exponential
/// spacings `t_{i+1} = t_i - ln(1 - ε)/λ` with ε uniform on [0, 1).
/// A jump landing exactly on T is kept (closed right endpoint).
pub fn sample_jump_times<R: Rng + ?Sized>(lambda: f64, horizon_t: f64, rng: &mut R) -> Vec<f64> {
    let mut times = Vec::new();
    if lambda <= 0.0 {
        return times;
    }
    let mut t = 0.0_f64;
    loop {
        let eps: f64 = rng.gen(); // [0, 1), so 1 - eps > 0
        t -= (1.0 - eps).ln() / lambda;
        if t > horizon_t {
            break;
        }
        times.push(t);
    }
    times
}

/// Jump times of an inhomogeneous Poisson process by Lewis–Shedler thinning:
/// candidates at rate λ_max, each kept with probability λ(t)/λ_max.
pub fn sample_jump_times_inhomogeneous<R: Rng + ?Sized>(
    table: &RateTable,
    horizon_t: f64,
    rng: &mut R,
) -> Vec<f64> {
    let lambda_max = table.lambda_max();
    let mut times = Vec::new();
    if lambda_max <= 0.0 {
        return times;
    }
    let mut t = 0.0_f64;
    loop {
        let eps: f64 = rng.gen();
        t -= (1.0 - eps).ln() / lambda_max;
        if t > horizon_t {
            break;
        }
        let u: f64 = rng.gen();
        if u * lambda_max < table.rate_at(t) {
            times.push(t);
        }
    }
    times
}

/// Simulate one path of the full process. The Brownian part is drawn as a
/// single N(0, σ²T) terminal increment; only terminal payoffs are priced, so
/// no pathwise diffusion grid is needed (see [`sample_path_points`] for the
/// plotting variant).
pub fn simulate_path<R: Rng + ?Sized>(
    params: &ProcessParams,
    dist: &JumpDistribution,
    rng: &mut R,
) -> Path {
    let jump_times = match &params.rate {
        RateSpec::Constant(l) => sample_jump_times(*l, params.horizon_t, rng),
        RateSpec::TimeVarying(table) => sample_jump_times_inhomogeneous(table, params.horizon_t, rng),
    };
    let jump_heights: Vec<f64> = jump_times.iter().map(|_| dist.sample(rng)).collect();
    let includes_diffusion = params.sigma > 0.0;
    let diffusion = if includes_diffusion {
        let z: f64 = StandardNormal.sample(rng);
        params.sigma * params.horizon_t.sqrt() * z
    } else {
        0.0
    };
    let terminal_value = params.drift_gamma * params.horizon_t
        + diffusion
        + crate::numerics::pairwise_sum(&jump_heights);
    Path { jump_times, jump_heights, terminal_value, includes_diffusion }
}

/// Compensated terminal value `Σ J_i − λ·T·E[J]` of a path simulated with
/// constant rate `lambda`. Makes the pure jump process a martingale: the
/// sample mean over many paths tends to zero.
pub fn compensate(path: &Path, lambda: f64, horizon_t: f64, mean_jump: f64) -> f64 {
    path.jump_sum() - lambda * horizon_t * mean_jump
}

/// Step-sampled path `(t, X_t)` for plotting: diffusion on an `n_steps` grid,
/// jumps overlaid at their exact times. Points are emitted at every grid node
/// and immediately after every jump.
pub fn sample_path_points<R: Rng + ?Sized>(
    params: &ProcessParams,
    dist: &JumpDistribution,
    n_steps: usize,
    rng: &mut R,
) -> Vec<(f64, f64)> {
    let path = simulate_path(params, dist, rng);
    let n_steps = n_steps.max(1);
    let dt = params.horizon_t / n_steps as f64;
    // Re-draw the diffusion as increments so the plotted path wiggles; the
    // terminal pricing draw above is discarded for plotting purposes.
    let mut diffusion = vec![0.0_f64; n_steps + 1];
    if params.sigma > 0.0 {
        for i in 1..=n_steps {
            let z: f64 = StandardNormal.sample(rng);
            diffusion[i] = diffusion[i - 1] + params.sigma * dt.sqrt() * z;
        }
    }
    let mut points = Vec::with_capacity(n_steps + 1 + 2 * path.jump_times.len());
    let mut jump_acc = 0.0_f64;
    let mut next_jump = 0usize;
    for i in 0..=n_steps {
        let t = i as f64 * dt;
        while next_jump < path.jump_times.len() && path.jump_times[next_jump] <= t {
            let tj = path.jump_times[next_jump];
            // pre-jump and post-jump points make the step visible
            let base = params.drift_gamma * tj + interp(&diffusion, dt, tj);
            points.push((tj, base + jump_acc));
            jump_acc += path.jump_heights[next_jump];
            points.push((tj, base + jump_acc));
            next_jump += 1;
        }
        points.push((t, params.drift_gamma * t + diffusion[i] + jump_acc));
    }
    points
}

fn interp(diffusion: &[f64], dt: f64, t: f64) -> f64 {
    let i = ((t / dt) as usize).min(diffusion.len() - 2);
    let frac = (t - i as f64 * dt) / dt;
    diffusion[i] + frac * (diffusion[i + 1] - diffusion[i])
}
