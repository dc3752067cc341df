//! Numerical building blocks: log-gamma, compensated summation, the normal
//! distribution, and adaptive quadrature.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("adaptive quadrature did not converge to relative tolerance {tolerance} (best estimate {estimate})")]
    NonConvergence { tolerance: f64, estimate: f64 },
}

/// Lanczos coefficients, g = 7, n = 9.
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for x > 0 (reflection for x < 0.5).
pub fn ln_gamma(x: f64) -> f64 {
    use std::f64::consts::PI;
    if x < 0.5 {
        return PI.ln() - (PI * x).sin().abs().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// ln(k!) via ln_gamma(k + 1).
pub fn ln_factorial(k: u64) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

/// Kahan–Babuška compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Sum with a fixed pairwise reduction tree. The result depends only on the
/// slice contents, never on how the values were produced, which keeps
/// parallel Monte Carlo aggregation bit-stable across worker counts.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 64 {
        let mut acc = KahanSum::new();
        for &v in values {
            acc.add(v);
        }
        return acc.value();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal CDF via erfc; accurate to ~1 ulp over the real line.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to relative tolerance
/// `rel_tol`. Fails with `NonConvergence` when the subdivision budget is
/// exhausted before the tolerance is met.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> Result<f64, QuadratureError> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    // Coarse magnitude scale for turning the relative tolerance absolute.
    let scale = whole.abs().max(1e-300);
    let mut budget: u32 = 1_000_000;
    let result = adaptive(f, a, b, fa, fm, fb, whole, rel_tol * scale, 60, &mut budget);
    match result {
        Some(v) => Ok(v),
        None => Err(QuadratureError::NonConvergence {
            tolerance: rel_tol,
            estimate: whole,
        }),
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    abs_tol: f64,
    depth: u32,
    budget: &mut u32,
) -> Option<f64> {
    if *budget == 0 {
        return None;
    }
    *budget -= 1;
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 {
        return None;
    }
    if delta.abs() <= 15.0 * abs_tol {
        return Some(left + right + delta / 15.0);
    }
    let l = adaptive(f, a, m, fa, flm, fm, left, abs_tol / 2.0, depth - 1, budget)?;
    let r = adaptive(f, m, b, fm, frm, fb, right, abs_tol / 2.0, depth - 1, budget)?;
    Some(l + r)
}
