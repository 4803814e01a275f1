//! Scalar abstraction shared by the geometric core.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the torus geometry, maps and cocycles are written against.
///
/// Implemented for `f32` and `f64`. Everything downstream of the cocycle
/// (closing, certification, reports) is instantiated at `f64`; see the
/// aliases at the crate root.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self;

    /// Machine epsilon scaled tolerance helper.
    fn tol() -> Self {
        Self::epsilon() * Self::lit(64.0)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Reduce into `[0, 1)`. `rem_euclid` can round up to exactly 1.0 for
    /// tiny negative inputs, which is folded back to 0.
    fn wrap_unit(self) -> Self {
        let r = self - self.floor();
        if r >= Self::one() || r < Self::zero() {
            Self::zero()
        } else {
            r
        }
    }

    /// Signed representative of `self` modulo 1 in `[-1/2, 1/2)`.
    fn wrap_centered(self) -> Self {
        let half = Self::lit(0.5);
        
        (self + half).wrap_unit() - half
    }
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn lit(x: f64) -> Self {
                x as $t
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);
