//! Discrete power-law tail fitting with KS-based `xmin` selection and
//! bootstrap uncertainty, plus the strength-degree and betweenness-degree
//! regressions.
//!
//! The tail model is `P(x) = x^-γ / ζ(γ, xmin)` for integer `x ≥ xmin`,
//! fitted by maximising the exact discrete log-likelihood.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::metrics::{self, NodeMetrics};
use crate::network::TransferNetwork;
use crate::regression::{self, Coefficient, FitKind, RegressionError, RegressionFit};
use crate::seed::stream_rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("too few tail samples: {0} (need at least 2)")]
    TooFewTailSamples(usize),
    #[error("degenerate tail: fewer than 2 distinct values at or above xmin")]
    DegenerateTail,
    #[error("samples must be positive integers")]
    NonPositiveSample,
    #[error("number of bootstrap replicates must be at least 1")]
    NoReplicates,
    #[error("{failed} of {total} bootstrap replicates failed to fit")]
    TooManyFailedReplicates { failed: usize, total: usize },
    #[error("confidence level must lie in (0, 1)")]
    InvalidLevel,
    #[error(transparent)]
    Regression(#[from] RegressionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "policy", content = "xmin")]
pub enum XminPolicy {
    /// Minimise the KS distance over every observed distinct value.
    Scan,
    Fixed(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub gamma: f64,
    pub xmin: u64,
    pub n_tail: usize,
    pub n_total: usize,
    pub ks_stat: f64,
    pub xmin_policy: XminPolicy,
    pub p_value: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub ci_level: Option<f64>,
    pub n_bootstrap: usize,
    pub failed_replicates: usize,
    pub seed: Option<u64>,
}

// ---------------------------------------------------------------------------
// Hurwitz zeta
// ---------------------------------------------------------------------------

// B_2j / (2j)!
const BERNOULLI_OVER_FACTORIAL: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
];

/// Hurwitz zeta `ζ(s, a) = Σ_{k≥0} (a + k)^-s` for `s > 1`, `a > 0`, by
/// Euler–Maclaurin summation shifted to `a + N ≥ 12`.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    debug_assert!(s > 1.0 && a > 0.0);
    let shift = if a < 12.0 { (12.0 - a).ceil() as usize } else { 0 };
    let mut sum = 0.0;
    for k in 0..shift {
        sum += (a + k as f64).powf(-s);
    }
    let x = a + shift as f64;
    let x_pow = x.powf(-s);
    sum += x * x_pow / (s - 1.0) + 0.5 * x_pow;
    // j-th correction: B_2j/(2j)! * s(s+1)...(s+2j-2) * x^(-s-2j+1)
    let inv_x2 = 1.0 / (x * x);
    let mut rising = s;
    let mut power = x_pow / x;
    for (j, coeff) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        let term = coeff * rising * power;
        sum += term;
        if term.abs() < 1e-17 * sum {
            break;
        }
        let m = 2.0 * j as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        power *= inv_x2;
    }
    sum
}

// ---------------------------------------------------------------------------
// Maximum likelihood
// ---------------------------------------------------------------------------

const GAMMA_FLOOR: f64 = 1.0 + 1e-9;
const GAMMA_TOL: f64 = 1e-10;

fn log_likelihood(gamma: f64, n: f64, sum_log: f64, xmin: f64) -> f64 {
    -gamma * sum_log - n * hurwitz_zeta(gamma, xmin).ln()
}

/// Discrete MLE of γ for `n` tail samples with `Σ ln x = sum_log`. The
/// log-likelihood is concave in γ, so a golden-section search over a
/// bracket around the closed-form approximation converges to the maximum.
fn mle_gamma(n: usize, sum_log: f64, sum_log_shifted: f64, xmin: u64) -> f64 {
    let nf = n as f64;
    let x = xmin as f64;
    let approx = 1.0 + nf / sum_log_shifted;
    let ll = |g: f64| log_likelihood(g, nf, sum_log, x);

    let mut lo = GAMMA_FLOOR;
    let mut hi = (approx * 2.0).max(approx + 2.0);
    while ll(hi) > ll(hi * 0.999) && hi < 1e4 {
        lo = hi * 0.5;
        hi *= 2.0;
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (ll(c), ll(d));
    while hi - lo > GAMMA_TOL * hi.max(1.0) {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = ll(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = ll(d);
        }
    }
    0.5 * (lo + hi)
}

/// KS distance between the empirical tail CDF (over sorted `tail`) and the
/// fitted discrete power-law CDF. Both are step functions, so the supremum
/// is attained at an observed value or just before the next one.
fn ks_distance(tail: &[u64], gamma: f64, xmin: u64) -> f64 {
    let n = tail.len() as f64;
    let z0 = hurwitz_zeta(gamma, xmin as f64);
    let model_cdf = |x: u64| 1.0 - hurwitz_zeta(gamma, (x + 1) as f64) / z0;
    let mut d: f64 = 0.0;
    let mut i = 0;
    let mut prev_emp = 0.0;
    while i < tail.len() {
        let v = tail[i];
        // model at v - 1 against the empirical value carried from below
        if v > xmin {
            d = d.max((model_cdf(v - 1) - prev_emp).abs());
        }
        while i < tail.len() && tail[i] == v {
            i += 1;
        }
        let emp = i as f64 / n;
        d = d.max((emp - model_cdf(v)).abs());
        prev_emp = emp;
    }
    d
}

struct TailCandidate {
    gamma: f64,
    ks: f64,
    xmin: u64,
    n_tail: usize,
}

fn fit_at(sorted: &[u64], start: usize, suffix_log: &[f64], xmin: u64) -> TailCandidate {
    let tail = &sorted[start..];
    let n = tail.len();
    let shifted = xmin as f64 - 0.5;
    let sum_log_shifted = suffix_log[start] - n as f64 * shifted.ln();
    let gamma = mle_gamma(n, suffix_log[start], sum_log_shifted, xmin);
    TailCandidate {
        gamma,
        ks: ks_distance(tail, gamma, xmin),
        xmin,
        n_tail: n,
    }
}

fn fit_sorted(sorted: &[u64], policy: XminPolicy) -> Result<TailCandidate, FitError> {
    if sorted.first().is_some_and(|&x| x == 0) {
        return Err(FitError::NonPositiveSample);
    }
    let n = sorted.len();
    let mut suffix_log = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix_log[i] = suffix_log[i + 1] + (sorted[i] as f64).ln();
    }
    let distinct_from = |start: usize| sorted.get(start).is_some_and(|&x| x != sorted[n - 1]);
    match policy {
        XminPolicy::Fixed(xmin) => {
            let start = sorted.partition_point(|&x| x < xmin);
            if n - start < 2 {
                return Err(FitError::TooFewTailSamples(n - start));
            }
            if xmin == 0 {
                return Err(FitError::NonPositiveSample);
            }
            if !distinct_from(start) {
                return Err(FitError::DegenerateTail);
            }
            Ok(fit_at(sorted, start, &suffix_log, xmin))
        }
        XminPolicy::Scan => {
            if n < 2 {
                return Err(FitError::TooFewTailSamples(n));
            }
            let mut best: Option<TailCandidate> = None;
            let mut start = 0;
            while start < n && distinct_from(start) {
                let xmin = sorted[start];
                let cand = fit_at(sorted, start, &suffix_log, xmin);
                if best.as_ref().is_none_or(|b| cand.ks < b.ks) {
                    best = Some(cand);
                }
                start = sorted.partition_point(|&x| x <= xmin);
            }
            best.ok_or(FitError::DegenerateTail)
        }
    }
}

/// Fits the tail exponent. `p_value` and the CI are left empty; see
/// [`gof_pvalue`], [`bootstrap_ci`] and [`fit_with_bootstrap`].
pub fn fit_tail(samples: &[u64], policy: XminPolicy) -> Result<PowerLawFit, FitError> {
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let c = fit_sorted(&sorted, policy)?;
    Ok(PowerLawFit {
        gamma: c.gamma,
        xmin: c.xmin,
        n_tail: c.n_tail,
        n_total: samples.len(),
        ks_stat: c.ks,
        xmin_policy: policy,
        p_value: None,
        ci_low: None,
        ci_high: None,
        ci_level: None,
        n_bootstrap: 0,
        failed_replicates: 0,
        seed: None,
    })
}

/// Log-likelihood of the discrete power law, exposed for diagnostics.
pub fn tail_log_likelihood(samples: &[u64], gamma: f64, xmin: u64) -> f64 {
    let tail: Vec<f64> = samples
        .iter()
        .filter(|&&x| x >= xmin)
        .map(|&x| x as f64)
        .collect();
    let sum_log: f64 = tail.iter().map(|x| x.ln()).sum();
    log_likelihood(gamma, tail.len() as f64, sum_log, xmin as f64)
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

const TABLE_LIMIT: usize = 1 << 16;

/// Inverse-CDF sampler for the discrete power law above `xmin`.
#[derive(Debug, Clone)]
pub struct PowerLawSampler {
    gamma: f64,
    xmin: u64,
    zeta_xmin: f64,
    /// survival[i] = P(X ≥ xmin + i), strictly decreasing.
    survival: Vec<f64>,
}

impl PowerLawSampler {
    pub fn new(gamma: f64, xmin: u64) -> Self {
        assert!(gamma > 1.0 && xmin >= 1);
        let zeta_xmin = hurwitz_zeta(gamma, xmin as f64);
        let mut survival = Vec::new();
        let mut x = xmin;
        loop {
            let s = hurwitz_zeta(gamma, x as f64) / zeta_xmin;
            survival.push(s);
            if s < 1e-9 || survival.len() >= TABLE_LIMIT {
                break;
            }
            x += 1;
        }
        PowerLawSampler {
            gamma,
            xmin,
            zeta_xmin,
            survival,
        }
    }

    fn survival_at(&self, x: u64) -> f64 {
        let i = (x - self.xmin) as usize;
        match self.survival.get(i) {
            Some(&s) => s,
            None => hurwitz_zeta(self.gamma, x as f64) / self.zeta_xmin,
        }
    }

    /// Largest `x` with `P(X ≥ x) ≥ u`, for `u` in `(0, 1]`.
    pub fn quantile(&self, u: f64) -> u64 {
        let last = *self.survival.last().unwrap();
        if u > last {
            // number of table entries with survival >= u
            let k = self.survival.partition_point(|&s| s >= u);
            return self.xmin + k as u64 - 1;
        }
        // beyond the table: continuous approximation, then exact correction
        let guess = ((self.xmin as f64 - 0.5) * u.powf(-1.0 / (self.gamma - 1.0)) + 0.5).floor();
        let mut x = (guess as u64).max(self.xmin + self.survival.len() as u64 - 1);
        while self.survival_at(x) < u && x > self.xmin {
            x -= 1;
        }
        while self.survival_at(x + 1) >= u {
            x += 1;
        }
        x
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        // 1 - U lies in (0, 1]
        let u = 1.0 - rng.random::<f64>();
        self.quantile(u)
    }
}

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

/// Goodness-of-fit p-value by semi-parametric bootstrap: each synthetic
/// point is drawn from the fitted tail with probability `n_tail / n`, or
/// resampled from the observations below `xmin` otherwise. Every replicate
/// is refitted under the same policy; `p` is the fraction whose KS distance
/// is at least the observed one. Replicates that cannot be fitted are
/// excluded. Returns `(p, failed_replicates)`.
pub fn gof_pvalue(
    fit: &PowerLawFit,
    samples: &[u64],
    n_boot: usize,
    seed: u64,
) -> Result<(f64, usize), FitError> {
    if n_boot < 1 {
        return Err(FitError::NoReplicates);
    }
    let below: Vec<u64> = samples.iter().copied().filter(|&x| x < fit.xmin).collect();
    let n = samples.len();
    let tail_prob = fit.n_tail as f64 / n as f64;
    let sampler = PowerLawSampler::new(fit.gamma, fit.xmin);
    let ks: Vec<Option<f64>> = (0..n_boot as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r);
            let mut synthetic: Vec<u64> = (0..n)
                .map(|_| {
                    if below.is_empty() || rng.random::<f64>() < tail_prob {
                        sampler.sample(&mut rng)
                    } else {
                        below[rng.random_range(0..below.len())]
                    }
                })
                .collect();
            synthetic.sort_unstable();
            fit_sorted(&synthetic, fit.xmin_policy).ok().map(|c| c.ks)
        })
        .collect();
    let valid: Vec<f64> = ks.into_iter().flatten().collect();
    let failed = n_boot - valid.len();
    if failed * 10 > n_boot {
        return Err(FitError::TooManyFailedReplicates {
            failed,
            total: n_boot,
        });
    }
    let exceed = valid.iter().filter(|&&k| k >= fit.ks_stat).count();
    Ok((exceed as f64 / valid.len() as f64, failed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapInterval {
    pub low: f64,
    pub high: f64,
    pub level: f64,
    pub n_boot: usize,
    pub failed: usize,
}

/// Percentile bootstrap interval for γ: resample the data with
/// replacement, refit under `policy`, and take the `(1 ± level)/2`
/// quantiles (linear interpolation) of the replicate estimates.
pub fn bootstrap_ci(
    samples: &[u64],
    policy: XminPolicy,
    n_boot: usize,
    seed: u64,
    level: f64,
) -> Result<BootstrapInterval, FitError> {
    if n_boot < 1 {
        return Err(FitError::NoReplicates);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(FitError::InvalidLevel);
    }
    let n = samples.len();
    if n == 0 {
        return Err(FitError::TooFewTailSamples(0));
    }
    let gammas: Vec<Option<f64>> = (0..n_boot as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r);
            let mut resample: Vec<u64> =
                (0..n).map(|_| samples[rng.random_range(0..n)]).collect();
            resample.sort_unstable();
            fit_sorted(&resample, policy).ok().map(|c| c.gamma)
        })
        .collect();
    let mut valid: Vec<f64> = gammas.into_iter().flatten().collect();
    let failed = n_boot - valid.len();
    if failed * 10 > n_boot || valid.is_empty() {
        return Err(FitError::TooManyFailedReplicates {
            failed,
            total: n_boot,
        });
    }
    valid.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Ok(BootstrapInterval {
        low: percentile(&valid, alpha),
        high: percentile(&valid, 1.0 - alpha),
        level,
        n_boot,
        failed,
    })
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Fit plus goodness-of-fit p-value and percentile CI. Both bootstraps use
/// `seed`, on disjoint replicate streams.
pub fn fit_with_bootstrap(
    samples: &[u64],
    policy: XminPolicy,
    n_boot: usize,
    seed: u64,
    level: f64,
) -> Result<PowerLawFit, FitError> {
    let mut fit = fit_tail(samples, policy)?;
    if n_boot == 0 {
        return Ok(fit);
    }
    let (p, gof_failed) = gof_pvalue(&fit, samples, n_boot, seed)?;
    let ci = bootstrap_ci(samples, policy, n_boot, seed ^ CI_STREAM_SALT, level)?;
    fit.p_value = Some(p);
    fit.ci_low = Some(ci.low);
    fit.ci_high = Some(ci.high);
    fit.ci_level = Some(level);
    fit.n_bootstrap = n_boot;
    fit.failed_replicates = gof_failed + ci.failed;
    fit.seed = Some(seed);
    Ok(fit)
}

const CI_STREAM_SALT: u64 = 0x5bd1_e995_0000_0001;

// ---------------------------------------------------------------------------
// Regressions against degree
// ---------------------------------------------------------------------------

/// Default `|studentized residual|` above which a node is an outlier.
pub const OUTLIER_THRESHOLD: f64 = 2.0;

/// `ln s = β ln k + c` over nodes with `k ≥ 1`, with the uncorrelated
/// baseline `s = w̄ k` recorded alongside.
pub fn fit_strength_degree(
    net: &TransferNetwork,
    outlier_threshold: f64,
) -> Result<RegressionFit, FitError> {
    let deg = metrics::degrees(net);
    let st = metrics::strengths(net);
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..net.node_count() {
        if deg[i].degree >= 1 {
            labels.push(net.label(i).to_string());
            rows.push(vec![(deg[i].degree as f64).ln(), 1.0]);
            y.push((st[i].strength as f64).ln());
        }
    }
    if rows.len() < 3 {
        return Err(RegressionError::TooFewPoints {
            needed: 3,
            got: rows.len(),
        }
        .into());
    }
    let ls = regression::least_squares(&rows, &y)?;
    Ok(RegressionFit {
        kind: FitKind::StrengthDegreePowerlaw,
        coefficients: vec![
            Coefficient {
                name: "beta",
                value: ls.coefficients[0],
            },
            Coefficient {
                name: "log_intercept",
                value: ls.coefficients[1],
            },
        ],
        baseline: net.mean_edge_weight(),
        residual_sd: ls.residual_sd,
        n_points: rows.len(),
        outlier_threshold,
        outliers: regression::outliers(&labels, &ls.studentized, outlier_threshold),
    })
}

/// `b = c2 k² + c1 k + c0` over all nodes. Positive outliers carry more
/// betweenness than their degree predicts.
pub fn fit_betweenness_degree(
    nodes: &[NodeMetrics],
    outlier_threshold: f64,
) -> Result<RegressionFit, FitError> {
    if nodes.len() < 4 {
        return Err(RegressionError::TooFewPoints {
            needed: 4,
            got: nodes.len(),
        }
        .into());
    }
    let labels: Vec<String> = nodes.iter().map(|m| m.label.clone()).collect();
    let rows: Vec<Vec<f64>> = nodes
        .iter()
        .map(|m| {
            let k = m.degree as f64;
            vec![k * k, k, 1.0]
        })
        .collect();
    let y: Vec<f64> = nodes.iter().map(|m| m.betweenness).collect();
    let ls = regression::least_squares(&rows, &y)?;
    Ok(RegressionFit {
        kind: FitKind::BetweennessDegreeQuadratic,
        coefficients: vec![
            Coefficient {
                name: "c2",
                value: ls.coefficients[0],
            },
            Coefficient {
                name: "c1",
                value: ls.coefficients[1],
            },
            Coefficient {
                name: "c0",
                value: ls.coefficients[2],
            },
        ],
        baseline: None,
        residual_sd: ls.residual_sd,
        n_points: nodes.len(),
        outlier_threshold,
        outliers: regression::outliers(&labels, &ls.studentized, outlier_threshold),
    })
}
