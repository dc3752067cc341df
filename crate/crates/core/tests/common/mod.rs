//! Shared statistical checks for the integration suites.
#![allow(dead_code)]

use pbc::numerics::KahanSum;
use pbc::oracle::poisson_pmf;
use pbc::process::sample_jump_times;
use pbc::rng::path_stream;

/// One-sample Kolmogorov–Smirnov distance against Exponential(rate).
pub fn ks_distance_exponential(samples: &mut [f64], rate: f64) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in samples.iter().enumerate() {
        let cdf = 1.0 - (-rate * x).exp();
        d = d.max(cdf - i as f64 / n).max((i + 1) as f64 / n - cdf);
    }
    d
}

/// Asymptotic KS critical value at significance alpha.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Inter-arrival spacings of one long homogeneous Poisson path.
pub fn exponential_spacings(lambda: f64, n: usize, seed: u64) -> Vec<f64> {
    // horizon long enough that the path almost surely holds n+1 jumps
    let horizon = (n as f64 + 6.0 * (n as f64).sqrt() + 100.0) / lambda;
    let times = sample_jump_times(lambda, horizon, &mut path_stream(seed, 0));
    assert!(times.len() > n, "long path too short: {} jumps", times.len());
    let mut spacings = Vec::with_capacity(n);
    let mut prev = 0.0;
    for &t in times.iter().take(n) {
        spacings.push(t - prev);
        prev = t;
    }
    spacings
}

/// Chi-square statistic of observed jump counts against Poisson(mean).
/// Bins 0..=max_count plus a merged tail; returns (statistic, bins_used).
pub fn poisson_count_chi_square(counts: &[usize], mean: f64, max_count: usize) -> (f64, usize) {
    let n = counts.len() as f64;
    let mut observed = vec![0.0_f64; max_count + 2];
    for &c in counts {
        let idx = c.min(max_count + 1);
        observed[idx] += 1.0;
    }
    let mut tail_mass = KahanSum::new();
    let mut stat = 0.0;
    let mut bins = 0;
    // k doubles as the Poisson argument and the bin index
    #[allow(clippy::needless_range_loop)]
    for k in 0..=max_count {
        let p = poisson_pmf(k as u64, mean).unwrap();
        tail_mass.add(p);
        let expect = n * p;
        stat += (observed[k] - expect).powi(2) / expect;
        bins += 1;
    }
    let tail_expect = n * (1.0 - tail_mass.value());
    if tail_expect > 0.0 {
        stat += (observed[max_count + 1] - tail_expect).powi(2) / tail_expect;
        bins += 1;
    }
    (stat, bins)
}

/// Sample mean and standard error of a slice.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = pbc::numerics::pairwise_sum(values) / n;
    let sq: Vec<f64> = values.iter().map(|&v| (v - mean) * (v - mean)).collect();
    let var = pbc::numerics::pairwise_sum(&sq) / (n - 1.0);
    (mean, (var / n).sqrt())
}
