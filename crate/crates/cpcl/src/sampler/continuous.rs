//! Continuous mechanisms: Laplace by inverse transform, the gamma-based
//! distributed Laplace decomposition, and Gaussian via Box-Muller.

use super::uniform::UniformSource;
use super::SampleError;

use std::f64::consts::{E, PI, TAU};

fn check_unit(u: f64) -> Result<(), SampleError> {
    if u <= 0.0 || u >= 1.0 || !u.is_finite() {
        return Err(SampleError::UniformDomain(u));
    }
    Ok(())
}

/// Laplace(0, lambda) sample by the inverse CDF,
/// `-lambda * sign(u - 1/2) * ln(1 - 2|u - 1/2|)`.
pub fn laplace_its(lambda: f64, u: f64) -> Result<f64, SampleError> {
    if lambda <= 0.0 {
        return Err(SampleError::BadParam {
            name: "lambda",
            value: lambda,
            constraint: "> 0",
        });
    }
    check_unit(u)?;
    let t = u - 0.5;
    Ok(-lambda * t.signum() * (1.0 - 2.0 * t.abs()).ln())
}

/// Gamma(shape, scale) for `0 < shape <= 1`, rejection sampling after
/// Ahrens and Dieter. Only a building block for the distributed Laplace.
pub fn gamma_sample(shape: f64, scale: f64, src: &mut UniformSource) -> Result<f64, SampleError> {
    if shape <= 0.0 || shape > 1.0 {
        return Err(SampleError::BadParam {
            name: "shape",
            value: shape,
            constraint: "in (0, 1]",
        });
    }
    if scale < 0.0 {
        return Err(SampleError::BadParam {
            name: "scale",
            value: scale,
            constraint: ">= 0",
        });
    }
    if scale == 0.0 {
        return Ok(0.0);
    }
    let b = (E + shape) / E;
    loop {
        let u1 = src.next_uniform();
        let u2 = src.next_uniform();
        let p = b * u1;
        if p <= 1.0 {
            let x = p.powf(1.0 / shape);
            if u2 <= (-x).exp() {
                return Ok(x * scale);
            }
        } else {
            let x = -((b - p) / shape).ln();
            if u2 <= x.powf(shape - 1.0) {
                return Ok(x * scale);
            }
        }
    }
}

/// One party's partial term of the distributed Laplace: the difference of
/// two Gamma(1/n, lambda) draws. Summing the terms of `n` parties yields
/// Laplace(0, lambda).
pub fn dist_laplace_partial(
    parties: u32,
    lambda: f64,
    src: &mut UniformSource,
) -> Result<f64, SampleError> {
    if parties < 1 {
        return Err(SampleError::BadParam {
            name: "parties",
            value: parties as f64,
            constraint: ">= 1",
        });
    }
    let shape = 1.0 / parties as f64;
    let g1 = gamma_sample(shape, lambda, src)?;
    let g2 = gamma_sample(shape, lambda, src)?;
    Ok(g1 - g2)
}

/// Box-Muller transform: two independent `N(0, sigma^2)` samples from two
/// uniforms, `sqrt(-2 ln u1) * (cos, sin)(2 pi u2)`.
pub fn box_muller(u1: f64, u2: f64, sigma: f64) -> Result<(f64, f64), SampleError> {
    check_unit(u1)?;
    check_unit(u2)?;
    if sigma < 0.0 {
        return Err(SampleError::BadParam {
            name: "sigma",
            value: sigma,
            constraint: ">= 0",
        });
    }
    let r = (-2.0 * u1.ln()).sqrt();
    let angle = TAU * u2;
    Ok((sigma * r * angle.cos(), sigma * r * angle.sin()))
}

/// Angle helper kept public for the secure Box-Muller path, which needs
/// the phase in `[-pi, pi]` for its trigonometric gadgets.
pub fn box_muller_phase(u2: f64) -> f64 {
    TAU * u2 - PI
}
