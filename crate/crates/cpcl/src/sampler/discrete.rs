//! Discrete mechanisms: binomial, geometric and Bernoulli subroutines,
//! discrete Laplace and Gaussian, Poisson and Skellam, plus the
//! Poisson-binomial gradient encoder.
//!
//! The rejection loops accept an optional fixed iteration budget. With a
//! budget set they become constant-iteration: the loop always runs the
//! same number of times in an oblivious execution, and a run that would
//! have needed more iterations reports a sampling failure that the caller
//! charges to delta.

use super::uniform::UniformSource;
use super::SampleError;

/// Above this rate `exp(-rate)` is too close to the f64 underflow cliff;
/// callers must decompose by Poisson additivity instead.
pub const POISSON_MAX_RATE: f64 = 500.0;

/// Default Skellam chunking keeps each Poisson rate at 10, matching the
/// calibrated 30-iteration budget.
const SKELLAM_CHUNK_MU: f64 = 20.0;

/// Centered binomial noise: `Bin(m, p) - m p`. Exact inversion sampling,
/// expected cost `O(m p)`.
pub fn binomial_noise(m: u64, p: f64, src: &mut UniformSource) -> Result<f64, SampleError> {
    if m < 1 {
        return Err(SampleError::BadParam {
            name: "m",
            value: m as f64,
            constraint: ">= 1",
        });
    }
    if p <= 0.0 || p >= 1.0 {
        return Err(SampleError::BadParam {
            name: "p",
            value: p,
            constraint: "in (0, 1)",
        });
    }
    Ok(binomial_raw(m, p, src) as f64 - m as f64 * p)
}

/// Plain binomial sample by sequential CDF inversion.
pub(crate) fn binomial_raw(m: u64, p: f64, src: &mut UniformSource) -> u64 {
    // invert on the smaller tail, mirror if needed
    let (pp, mirrored) = if p <= 0.5 { (p, false) } else { (1.0 - p, true) };
    let q = 1.0 - pp;
    let s = pp / q;
    let a = (m as f64 + 1.0) * s;
    let mut u = src.next_uniform();
    let mut pmf = q.powi(m as i32);
    let mut k = 0u64;
    // pmf can underflow for huge m; fall back to a normal-free resample
    if pmf <= f64::MIN_POSITIVE {
        // split the trials and sum, each half has a representable pmf
        let half = m / 2;
        let lo = binomial_raw(half, pp, src);
        let hi = binomial_raw(m - half, pp, src);
        let x = lo + hi;
        return if mirrored { m - x } else { x };
    }
    loop {
        if u <= pmf {
            return if mirrored { m - k } else { k };
        }
        u -= pmf;
        k += 1;
        if k > m {
            // numerical leftovers land on the mode
            let x = (m as f64 * pp).round() as u64;
            return if mirrored { m - x } else { x };
        }
        pmf *= a / k as f64 - s;
    }
}

/// Geometric(p) on {0, 1, 2, ...}: `floor(ln(1-u) / ln(1-p))`.
pub fn geometric(p: f64, u: f64) -> Result<u64, SampleError> {
    if p <= 0.0 || p >= 1.0 {
        return Err(SampleError::BadParam {
            name: "p",
            value: p,
            constraint: "in (0, 1)",
        });
    }
    if u <= 0.0 || u >= 1.0 {
        return Err(SampleError::UniformDomain(u));
    }
    Ok(((1.0 - u).ln() / (1.0 - p).ln()).floor() as u64)
}

/// Bernoulli with success probability `exp(-a/b)`.
pub fn bernoulli_exp(a: f64, b: f64, u: f64) -> Result<bool, SampleError> {
    if b <= 0.0 {
        return Err(SampleError::BadParam {
            name: "b",
            value: b,
            constraint: "> 0",
        });
    }
    if a < 0.0 {
        return Err(SampleError::BadParam {
            name: "a",
            value: a,
            constraint: ">= 0",
        });
    }
    if u <= 0.0 || u >= 1.0 {
        return Err(SampleError::UniformDomain(u));
    }
    Ok(u < (-a / b).exp())
}

/// Symmetric discrete Laplace with PMF proportional to `exp(-|x|/lambda)`,
/// as the difference of two geometrics with `p = 1 - exp(-1/lambda)`.
pub fn disc_laplace(lambda: f64, src: &mut UniformSource) -> Result<i64, SampleError> {
    if lambda <= 0.0 {
        return Err(SampleError::BadParam {
            name: "lambda",
            value: lambda,
            constraint: "> 0",
        });
    }
    let p = 1.0 - (-1.0 / lambda).exp();
    let g1 = geometric(p, src.next_uniform())?;
    let g2 = geometric(p, src.next_uniform())?;
    Ok(g1 as i64 - g2 as i64)
}

/// Discrete Gaussian over the integers with variance parameter
/// `s2sigma2` (already in ring units).
///
/// Rejection sampling from a discrete Laplace proposal at scale
/// `s*sigma`: a candidate `l` is accepted when a Bernoulli with success
/// probability `exp(-(|l| - s sigma)^2 / (2 s^2 sigma^2))` fires. With a
/// budget, failing every attempt yields [`SampleError::BudgetExhausted`].
pub fn disc_gaussian(
    s2sigma2: f64,
    src: &mut UniformSource,
    loop_budget: Option<u32>,
) -> Result<i64, SampleError> {
    if s2sigma2 <= 0.0 {
        return Err(SampleError::BadParam {
            name: "s2sigma2",
            value: s2sigma2,
            constraint: "> 0",
        });
    }
    let ssigma = s2sigma2.sqrt();
    let b = 2.0 * s2sigma2;
    let mut attempts = 0u32;
    loop {
        if let Some(budget) = loop_budget {
            if attempts >= budget {
                return Err(SampleError::BudgetExhausted { budget });
            }
        }
        attempts += 1;
        let l = disc_laplace(ssigma, src)?;
        let a = (l.abs() as f64 - ssigma) * (l.abs() as f64 - ssigma);
        if bernoulli_exp(a, b, src.next_uniform())? {
            return Ok(l);
        }
    }
}

/// Poisson(rate) by uniform multiplication: multiply uniforms until the
/// product drops below `exp(-rate)`; the count of multiplications minus
/// one is the sample. Expected iterations `rate + 1`.
pub fn poisson(
    rate: f64,
    src: &mut UniformSource,
    loop_budget: Option<u32>,
) -> Result<u64, SampleError> {
    if rate < 0.0 {
        return Err(SampleError::BadParam {
            name: "rate",
            value: rate,
            constraint: ">= 0",
        });
    }
    if rate > POISSON_MAX_RATE {
        return Err(SampleError::RateUnderflow { rate });
    }
    if rate == 0.0 {
        return Ok(0);
    }
    let threshold = (-rate).exp();
    let mut prod = 1.0f64;
    let mut draws = 0u32;
    loop {
        if let Some(budget) = loop_budget {
            if draws >= budget {
                return Err(SampleError::BudgetExhausted { budget });
            }
        }
        prod *= src.next_uniform();
        draws += 1;
        if prod <= threshold {
            return Ok(draws as u64 - 1);
        }
    }
}

/// Skellam with mean 0 and variance `s2mu`, as the difference of two
/// Poisson(s2mu / 2) variables. Large variances are decomposed into
/// `chunks` independent Skellam terms so every Poisson rate stays clear
/// of underflow; Skellam closure under summation makes the decomposition
/// exact.
pub fn skellam(
    s2mu: f64,
    src: &mut UniformSource,
    chunks: Option<u32>,
) -> Result<i64, SampleError> {
    if s2mu <= 0.0 {
        return Err(SampleError::BadParam {
            name: "s2mu",
            value: s2mu,
            constraint: "> 0",
        });
    }
    let chunks = chunks.unwrap_or_else(|| (s2mu / SKELLAM_CHUNK_MU).ceil().max(1.0) as u32);
    let rate = s2mu / (2.0 * chunks as f64);
    if rate > POISSON_MAX_RATE {
        return Err(SampleError::RateUnderflow { rate });
    }
    let mut total = 0i64;
    for _ in 0..chunks {
        let p1 = poisson(rate, src, None)?;
        let p2 = poisson(rate, src, None)?;
        total += p1 as i64 - p2 as i64;
    }
    Ok(total)
}

/// Poisson-binomial gradient encoding: one binomial draw with success
/// probability `g * theta / clip_k + 1/2`, so the expectation carries the
/// gradient and the spread provides the noise.
pub fn poisson_binomial_encode(
    g: f64,
    theta: f64,
    clip_k: f64,
    b: u64,
    src: &mut UniformSource,
) -> Result<u64, SampleError> {
    if clip_k <= 0.0 {
        return Err(SampleError::BadParam {
            name: "clip_k",
            value: clip_k,
            constraint: "> 0",
        });
    }
    if !(0.0..=0.25).contains(&theta) {
        return Err(SampleError::BadParam {
            name: "theta",
            value: theta,
            constraint: "in [0, 1/4]",
        });
    }
    if g.abs() > clip_k {
        return Err(SampleError::BadParam {
            name: "g",
            value: g,
            constraint: "|g| <= clip_k",
        });
    }
    let p = g * theta / clip_k + 0.5;
    if !(0.25..=0.75).contains(&p) {
        return Err(SampleError::BadParam {
            name: "p",
            value: p,
            constraint: "in [1/4, 3/4]",
        });
    }
    if b < 1 {
        return Err(SampleError::BadParam {
            name: "b",
            value: b as f64,
            constraint: ">= 1",
        });
    }
    Ok(binomial_raw(b, p, src))
}
