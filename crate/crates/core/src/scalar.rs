use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar used by the numerical kernels: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal; exact for `f64`, rounded for `f32`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Lossy view as `f64`, used for error reporting and export.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Relative tolerance under which two path lengths count as tied.
    fn tie_tolerance() -> Self {
        Self::epsilon() * Self::lit(64.0)
    }

    /// `true` when `a` and `b` agree to within [`Scalar::tie_tolerance`].
    fn ties(a: Self, b: Self) -> bool {
        let scale = Self::one().max(a.abs()).max(b.abs());
        (a - b).abs() <= Self::tie_tolerance() * scale
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
