//! DP noise mechanisms.
//!
//! Each mechanism exists in plaintext form; the rejection-based ones also
//! take an optional fixed iteration budget so a data-oblivious execution
//! can run them in constant time, absorbing the residual failure
//! probability into the DP delta.

mod continuous;
mod discrete;
mod uniform;

pub use continuous::{box_muller, dist_laplace_partial, gamma_sample, laplace_its};
pub use discrete::{
    bernoulli_exp, binomial_noise, disc_gaussian, disc_laplace, geometric, poisson,
    poisson_binomial_encode, skellam,
};
pub use uniform::UniformSource;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SampleError {
    #[error("uniform input {0} outside (0, 1)")]
    UniformDomain(f64),
    #[error("parameter {name} = {value} violates {constraint}")]
    BadParam {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
    #[error("iteration budget {budget} exhausted; absorb the failure probability into delta")]
    BudgetExhausted { budget: u32 },
    #[error("rate {rate} risks exp underflow; decompose via Poisson additivity (e.g. the Skellam chunking)")]
    RateUnderflow { rate: f64 },
    #[error("mechanism {0} missing parameter {1}")]
    MissingParam(Mechanism, &'static str),
    #[error("mechanism {0} is not supported for {1}")]
    Unsupported(Mechanism, &'static str),
}

/// Whether a spec describes per-party partial noise or a single centrally
/// calibrated term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseType {
    /// Per-party partial noise; DP only in aggregate.
    PNoise,
    /// One central noise term satisfying DP on its own.
    CNoise,
}

impl fmt::Display for NoiseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseType::PNoise => write!(f, "pnoise"),
            NoiseType::CNoise => write!(f, "cnoise"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mechanism {
    Laplace,
    DistLaplace,
    Gaussian,
    Binomial,
    DiscLaplace,
    DiscGaussian,
    Skellam,
    PoissonBinomial,
}

impl Mechanism {
    pub fn is_discrete(&self) -> bool {
        matches!(
            self,
            Mechanism::Binomial
                | Mechanism::DiscLaplace
                | Mechanism::DiscGaussian
                | Mechanism::Skellam
                | Mechanism::PoissonBinomial
        )
    }

    pub fn parse(s: &str) -> Option<Mechanism> {
        Some(match s {
            "laplace" => Mechanism::Laplace,
            "dist_laplace" => Mechanism::DistLaplace,
            "gaussian" => Mechanism::Gaussian,
            "binomial" => Mechanism::Binomial,
            "disc_laplace" => Mechanism::DiscLaplace,
            "disc_gaussian" => Mechanism::DiscGaussian,
            "skellam" => Mechanism::Skellam,
            "poisson_binomial" => Mechanism::PoissonBinomial,
            _ => return None,
        })
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mechanism::Laplace => "laplace",
            Mechanism::DistLaplace => "dist_laplace",
            Mechanism::Gaussian => "gaussian",
            Mechanism::Binomial => "binomial",
            Mechanism::DiscLaplace => "disc_laplace",
            Mechanism::DiscGaussian => "disc_gaussian",
            Mechanism::Skellam => "skellam",
            Mechanism::PoissonBinomial => "poisson_binomial",
        };
        write!(f, "{s}")
    }
}

/// The noise tuple: type, mechanism, and mechanism-specific parameters.
///
/// Parameter names follow the distribution table: `lambda` (Laplace
/// scales), `sigma2` (Gaussian variance), `m`/`p` (binomial), `s2sigma2`
/// (discrete Gaussian ring-unit variance), `s2mu` (Skellam ring-unit
/// variance), `b`/`theta`/`clip_k` (Poisson-binomial), `parties`
/// (distributed Laplace).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub noise_type: NoiseType,
    pub mechanism: Mechanism,
    pub params: BTreeMap<String, f64>,
    /// Fixed iteration count for the constant-iteration variants.
    pub loop_budget: Option<u32>,
}

impl NoiseSpec {
    pub fn new(noise_type: NoiseType, mechanism: Mechanism) -> Self {
        NoiseSpec {
            noise_type,
            mechanism,
            params: BTreeMap::new(),
            loop_budget: None,
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn with_budget(mut self, budget: u32) -> Self {
        self.loop_budget = Some(budget);
        self
    }

    pub fn param(&self, name: &'static str) -> Result<f64, SampleError> {
        self.params
            .get(name)
            .copied()
            .ok_or(SampleError::MissingParam(self.mechanism, name))
    }

    fn param_or(&self, name: &str, default: f64) -> f64 {
        self.params.get(name).copied().unwrap_or(default)
    }

    /// Check that exactly the required parameters are present and positive
    /// where scale-like.
    pub fn validate(&self) -> Result<(), SampleError> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 {
                Ok(())
            } else {
                Err(SampleError::BadParam {
                    name,
                    value: v,
                    constraint: "> 0",
                })
            }
        };
        match self.mechanism {
            Mechanism::Laplace => positive("lambda", self.param("lambda")?),
            Mechanism::DistLaplace => {
                positive("lambda", self.param("lambda")?)?;
                positive("parties", self.param("parties")?)
            }
            Mechanism::Gaussian => positive("sigma2", self.param("sigma2")?),
            Mechanism::Binomial => {
                let m = self.param("m")?;
                if m < 1.0 {
                    return Err(SampleError::BadParam {
                        name: "m",
                        value: m,
                        constraint: ">= 1",
                    });
                }
                let p = self.param_or("p", 0.5);
                if p <= 0.0 || p >= 1.0 {
                    return Err(SampleError::BadParam {
                        name: "p",
                        value: p,
                        constraint: "in (0, 1)",
                    });
                }
                Ok(())
            }
            Mechanism::DiscLaplace => positive("lambda", self.param("lambda")?),
            Mechanism::DiscGaussian => positive("s2sigma2", self.param("s2sigma2")?),
            Mechanism::Skellam => positive("s2mu", self.param("s2mu")?),
            Mechanism::PoissonBinomial => {
                positive("b", self.param("b")?)?;
                positive("clip_k", self.param("clip_k")?)?;
                let theta = self.param("theta")?;
                if !(0.0..=0.25).contains(&theta) {
                    return Err(SampleError::BadParam {
                        name: "theta",
                        value: theta,
                        constraint: "in [0, 1/4]",
                    });
                }
                Ok(())
            }
        }
    }

    /// Draw one scalar noise sample. Additive mechanisms return a centered
    /// value; the Poisson-binomial encoder is not additive and is reached
    /// through [`poisson_binomial_encode`] instead.
    pub fn sample(&self, src: &mut UniformSource) -> Result<f64, SampleError> {
        match self.mechanism {
            Mechanism::Laplace => {
                let lambda = self.param("lambda")?;
                laplace_its(lambda, src.next_uniform())
            }
            Mechanism::DistLaplace => {
                let lambda = self.param("lambda")?;
                let n = self.param("parties")? as u32;
                dist_laplace_partial(n, lambda, src)
            }
            Mechanism::Gaussian => {
                let sigma = self.param("sigma2")?.sqrt();
                let (z, _) = box_muller(src.next_uniform(), src.next_uniform(), sigma)?;
                Ok(z)
            }
            Mechanism::Binomial => {
                let m = self.param("m")? as u64;
                let p = self.param_or("p", 0.5);
                binomial_noise(m, p, src)
            }
            Mechanism::DiscLaplace => {
                let lambda = self.param("lambda")?;
                disc_laplace(lambda, src).map(|v| v as f64)
            }
            Mechanism::DiscGaussian => {
                let v = self.param("s2sigma2")?;
                disc_gaussian(v, src, self.loop_budget).map(|v| v as f64)
            }
            Mechanism::Skellam => {
                let v = self.param("s2mu")?;
                let chunks = self.params.get("chunks").map(|&c| c as u32);
                skellam(v, src, chunks).map(|v| v as f64)
            }
            Mechanism::PoissonBinomial => Err(SampleError::Unsupported(
                self.mechanism,
                "additive sampling; it encodes a gradient instead",
            )),
        }
    }

    /// Variance of one draw, used by calibration checks and the variance
    /// contract tests. Discrete Gaussian uses the large-sigma limit; the
    /// exact value comes from the analytic PMF oracle in tests.
    pub fn nominal_variance(&self) -> Result<f64, SampleError> {
        Ok(match self.mechanism {
            Mechanism::Laplace => {
                let l = self.param("lambda")?;
                2.0 * l * l
            }
            Mechanism::DistLaplace => {
                let l = self.param("lambda")?;
                2.0 * l * l / self.param("parties")?
            }
            Mechanism::Gaussian => self.param("sigma2")?,
            Mechanism::Binomial => {
                let m = self.param("m")?;
                let p = self.param_or("p", 0.5);
                m * p * (1.0 - p)
            }
            Mechanism::DiscLaplace => {
                let l = self.param("lambda")?;
                let q = (-1.0 / l).exp();
                2.0 * q / ((1.0 - q) * (1.0 - q))
            }
            Mechanism::DiscGaussian => self.param("s2sigma2")?,
            Mechanism::Skellam => self.param("s2mu")?,
            Mechanism::PoissonBinomial => {
                let b = self.param("b")?;
                0.25 * b
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_requires_parameters() {
        let spec = NoiseSpec::new(NoiseType::CNoise, Mechanism::Gaussian);
        assert!(matches!(
            spec.validate(),
            Err(SampleError::MissingParam(Mechanism::Gaussian, "sigma2"))
        ));
        assert!(spec.clone().with("sigma2", 1.0).validate().is_ok());
        assert!(spec.with("sigma2", -1.0).validate().is_err());
    }

    #[test]
    fn identical_spec_and_seed_replay() {
        let spec = NoiseSpec::new(NoiseType::CNoise, Mechanism::Gaussian).with("sigma2", 4.0);
        let mut a = UniformSource::new(99, 5);
        let mut b = UniformSource::new(99, 5);
        for _ in 0..50 {
            assert_eq!(spec.sample(&mut a).unwrap(), spec.sample(&mut b).unwrap());
        }
    }

    #[test]
    fn poisson_binomial_rejects_additive_use() {
        let spec = NoiseSpec::new(NoiseType::PNoise, Mechanism::PoissonBinomial)
            .with("b", 14.0)
            .with("theta", 0.25)
            .with("clip_k", 1.0);
        assert!(spec.validate().is_ok());
        let mut src = UniformSource::new(1, 1);
        assert!(matches!(
            spec.sample(&mut src),
            Err(SampleError::Unsupported(..))
        ));
    }
}
