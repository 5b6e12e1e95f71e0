//! Scalar abstraction shared by the numerical modules.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar accepted by the quadrature, fiber and NLI kernels.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

#[inline]
pub fn db_to_lin<T: Real>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

#[inline]
pub fn lin_to_db<T: Real>(lin: T) -> T {
    T::lit(10.0) * lin.log10()
}

#[inline]
pub fn dbm_to_w<T: Real>(dbm: T) -> T {
    db_to_lin(dbm) * T::lit(1e-3)
}

#[inline]
pub fn w_to_dbm<T: Real>(w: T) -> T {
    lin_to_db(w / T::lit(1e-3))
}
