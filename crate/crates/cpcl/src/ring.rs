//! Fixed-point encoding and modular ring arithmetic.
//!
//! All encrypted computation in this crate runs over `Z_{2^k}` with a
//! fixed-point interpretation: a real `x` is stored as `round(x * 2^f)`
//! reduced mod `2^k`, and raw values in `[2^{k-1}, 2^k)` decode as
//! negatives (two's complement).

use thiserror::Error;

use crate::sampler::UniformSource;

#[derive(Debug, Error, PartialEq)]
pub enum RingError {
    #[error("value {value} outside representable range [{lo}, {hi}) for codec k={k}, f={f}")]
    Overflow {
        value: f64,
        lo: f64,
        hi: f64,
        k: u32,
        f: u32,
    },
    #[error("codec mismatch: k={0} vs k={1}")]
    CodecMismatch(u32, u32),
    #[error("invalid codec: require 0 <= f < k <= 64, got k={k}, f={f}")]
    InvalidCodec { k: u32, f: u32 },
    #[error("signed overflow in checked ring op")]
    SignedOverflow,
}

/// Fixed-point codec: ring `Z_{2^k}` with scale `2^f`.
///
/// `f = 0` gives a pure integer ring, used by the discrete noise
/// mechanisms; continuous paths default to [`FixedCodec::CONTINUOUS`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedCodec {
    /// Ring bit width `k`, at most 64.
    pub total_bits: u32,
    /// Fraction bits `f`; the scale is `2^f`.
    pub frac_bits: u32,
}

impl FixedCodec {
    /// Default codec for continuous mechanisms: 32-bit fixed-point data
    /// (16 fraction bits) carried in a 64-bit ring so that secret-shared
    /// multiplication has room for the double-width raw product.
    pub const CONTINUOUS: FixedCodec = FixedCodec {
        total_bits: 64,
        frac_bits: 16,
    };

    /// Default codec for discrete mechanisms: 16-bit integer ring.
    pub const DISCRETE: FixedCodec = FixedCodec {
        total_bits: 16,
        frac_bits: 0,
    };

    pub fn new(total_bits: u32, frac_bits: u32) -> Result<Self, RingError> {
        if total_bits == 0 || total_bits > 64 || frac_bits >= total_bits {
            return Err(RingError::InvalidCodec {
                k: total_bits,
                f: frac_bits,
            });
        }
        Ok(FixedCodec {
            total_bits,
            frac_bits,
        })
    }

    /// Bit mask selecting the low `k` bits.
    #[inline]
    pub fn mask(&self) -> u64 {
        if self.total_bits == 64 {
            u64::MAX
        } else {
            (1u64 << self.total_bits) - 1
        }
    }

    /// Scale `2^f` as a real.
    #[inline]
    pub fn scale(&self) -> f64 {
        (1u64 << self.frac_bits) as f64
    }

    /// Representable range `[-2^{k-1-f}, 2^{k-1-f})`.
    pub fn range(&self) -> (f64, f64) {
        let half = 2f64.powi(self.total_bits as i32 - 1 - self.frac_bits as i32);
        (-half, half)
    }

    /// Bytes per ring element on the wire.
    #[inline]
    pub fn element_bytes(&self) -> u64 {
        (self.total_bits as u64).div_ceil(8)
    }

    #[inline]
    fn reduce(&self, raw: u64) -> u64 {
        raw & self.mask()
    }

    #[inline]
    fn to_signed(&self, raw: u64) -> i64 {
        let raw = self.reduce(raw);
        if self.total_bits == 64 {
            raw as i64
        } else if raw >= 1u64 << (self.total_bits - 1) {
            raw as i64 - (1i64 << self.total_bits)
        } else {
            raw as i64
        }
    }

    #[inline]
    fn from_signed(&self, v: i64) -> u64 {
        self.reduce(v as u64)
    }
}

/// One element of `Z_{2^k}`. Arithmetic wraps mod `2^k` by definition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RingValue {
    pub raw: u64,
}

impl RingValue {
    pub fn new(raw: u64, codec: FixedCodec) -> Self {
        RingValue {
            raw: codec.reduce(raw),
        }
    }

    /// Uniform ring element, used for shares and masks.
    pub fn random(src: &mut UniformSource, codec: FixedCodec) -> Self {
        RingValue::new(src.next_raw(), codec)
    }
}

/// Encode a real with deterministic round-to-nearest-even.
pub fn encode(x: f64, codec: FixedCodec) -> Result<RingValue, RingError> {
    let (lo, hi) = codec.range();
    if !x.is_finite() || x < lo || x >= hi {
        return Err(RingError::Overflow {
            value: x,
            lo,
            hi,
            k: codec.total_bits,
            f: codec.frac_bits,
        });
    }
    let scaled = (x * codec.scale()).round_ties_even();
    // round can push a value at the top of the range over the edge
    if scaled >= hi * codec.scale() {
        return Err(RingError::Overflow {
            value: x,
            lo,
            hi,
            k: codec.total_bits,
            f: codec.frac_bits,
        });
    }
    Ok(RingValue::new(codec.from_signed(scaled as i64), codec))
}

/// Encode with stochastic rounding: the fractional remainder decides the
/// rounding direction with matching probability. Optional mode; the
/// deterministic [`encode`] is the default everywhere.
pub fn encode_stochastic(
    x: f64,
    codec: FixedCodec,
    src: &mut UniformSource,
) -> Result<RingValue, RingError> {
    let (lo, hi) = codec.range();
    if !x.is_finite() || x < lo || x >= hi {
        return Err(RingError::Overflow {
            value: x,
            lo,
            hi,
            k: codec.total_bits,
            f: codec.frac_bits,
        });
    }
    let scaled = x * codec.scale();
    let floor = scaled.floor();
    let frac = scaled - floor;
    let up = src.next_uniform() < frac;
    let v = floor as i64 + if up { 1 } else { 0 };
    Ok(RingValue::new(codec.from_signed(v), codec))
}

/// Signed reinterpretation divided by the scale.
pub fn decode(v: RingValue, codec: FixedCodec) -> f64 {
    codec.to_signed(v.raw) as f64 / codec.scale()
}

#[inline]
pub fn ring_add(a: RingValue, b: RingValue, codec: FixedCodec) -> RingValue {
    RingValue::new(a.raw.wrapping_add(b.raw), codec)
}

#[inline]
pub fn ring_sub(a: RingValue, b: RingValue, codec: FixedCodec) -> RingValue {
    RingValue::new(a.raw.wrapping_sub(b.raw), codec)
}

#[inline]
pub fn ring_neg(a: RingValue, codec: FixedCodec) -> RingValue {
    RingValue::new(a.raw.wrapping_neg(), codec)
}

/// Multiply by a public integer. No truncation: integer scaling keeps the
/// fixed-point scale.
#[inline]
pub fn ring_mul_public(a: RingValue, c: i64, codec: FixedCodec) -> RingValue {
    RingValue::new(a.raw.wrapping_mul(c as u64), codec)
}

/// Fixed-point multiply of two ring values: full double-width raw product,
/// then an arithmetic shift by `f` bits (truncation toward negative
/// infinity). Truncation error is at most `2^-f`.
pub fn ring_mul_fixed(a: RingValue, b: RingValue, codec: FixedCodec) -> RingValue {
    let prod = codec.to_signed(a.raw) as i128 * codec.to_signed(b.raw) as i128;
    let shifted = prod >> codec.frac_bits;
    RingValue::new(codec.from_signed(shifted as i64), codec)
}

/// Multiply by a public fixed-point constant, truncating by `f`.
pub fn ring_mul_public_fixed(a: RingValue, c: f64, codec: FixedCodec) -> Result<RingValue, RingError> {
    let c_enc = encode(c, codec)?;
    Ok(ring_mul_fixed(a, c_enc, codec))
}

/// Overflow-detecting addition: errors when the signed result leaves the
/// representable range instead of wrapping.
pub fn ring_add_checked(a: RingValue, b: RingValue, codec: FixedCodec) -> Result<RingValue, RingError> {
    let sum = codec.to_signed(a.raw) as i128 + codec.to_signed(b.raw) as i128;
    let half = 1i128 << (codec.total_bits - 1);
    if sum < -half || sum >= half {
        return Err(RingError::SignedOverflow);
    }
    Ok(RingValue::new(codec.from_signed(sum as i64), codec))
}

/// Encode a slice of reals.
pub fn encode_vec(xs: &[f64], codec: FixedCodec) -> Result<Vec<RingValue>, RingError> {
    xs.iter().map(|&x| encode(x, codec)).collect()
}

/// Decode a slice of ring values.
pub fn decode_vec(vs: &[RingValue], codec: FixedCodec) -> Vec<f64> {
    vs.iter().map(|&v| decode(v, codec)).collect()
}
