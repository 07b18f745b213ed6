//! Products of many complex factors without underflow.
//!
//! The running product is kept as `z · 2^exp2` where `z` is renormalized by an
//! exact power of two whenever it leaves `[2^-512, 2^512]`. Scaling by a power
//! of two is exact away from the subnormal range, so while the naive product
//! is representable both agree bit for bit.

use std::f64::consts::LN_2;

use num_complex::Complex64;

const RESCALE_BITS: i32 = 512;

/// A complex number in log-magnitude / phase form: `exp(log_magnitude + i·phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPolar {
    pub log_magnitude: f64,
    /// Principal argument in `(-π, π]`.
    pub phase: f64,
}

impl LogPolar {
    pub const ONE: Self = Self {
        log_magnitude: 0.0,
        phase: 0.0,
    };

    pub fn magnitude(&self) -> f64 {
        self.log_magnitude.exp()
    }

    /// Back to a plain complex number; underflows to zero when the magnitude
    /// is not representable.
    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude(), self.phase)
    }
}

/// Running product `z · 2^exp2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledProduct {
    z: Complex64,
    exp2: i64,
}

impl Default for ScaledProduct {
    fn default() -> Self {
        Self::new()
    }
}

impl ScaledProduct {
    pub fn new() -> Self {
        Self {
            z: Complex64::new(1.0, 0.0),
            exp2: 0,
        }
    }

    #[inline]
    pub fn mul(&mut self, factor: Complex64) {
        self.z *= factor;
        let m = self.z.re.abs().max(self.z.im.abs());
        if m < TINY {
            if m == 0.0 {
                return;
            }
            self.z = self.z.scale(HUGE);
            self.exp2 -= RESCALE_BITS as i64;
        } else if m > HUGE {
            self.z = self.z.scale(TINY);
            self.exp2 += RESCALE_BITS as i64;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.z.re == 0.0 && self.z.im == 0.0
    }

    pub fn finish(&self) -> LogPolar {
        if self.is_zero() {
            return LogPolar {
                log_magnitude: f64::NEG_INFINITY,
                phase: 0.0,
            };
        }
        LogPolar {
            log_magnitude: self.z.norm().ln() + self.exp2 as f64 * LN_2,
            phase: self.z.arg(),
        }
    }
}

const TINY: f64 = 1.0 / HUGE;
// 2^512
const HUGE: f64 = 1.340_780_792_994_259_7e154;

/// Multiply a stream of complex factors in log-magnitude / phase form.
///
/// A zero factor gives `log_magnitude = -∞` and `phase = 0`.
pub fn stable_product_accumulate<I>(factors: I) -> LogPolar
where
    I: IntoIterator<Item = Complex64>,
{
    let mut acc = ScaledProduct::new();
    for f in factors {
        acc.mul(f);
        if acc.is_zero() {
            break;
        }
    }
    acc.finish()
}
