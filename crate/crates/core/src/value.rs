//! Scalar type for sensor readings and summaries.
//!
//! Integer mode (the default) keeps every oracle comparison exact. Enable the
//! `float` feature for `f64` readings.

#[cfg(not(feature = "float"))]
pub type Value = i64;

#[cfg(feature = "float")]
pub type Value = f64;

#[inline]
#[allow(clippy::unnecessary_cast)]
pub fn from_i64(v: i64) -> Value {
    v as Value
}

#[inline]
#[allow(clippy::unnecessary_cast)]
pub fn to_f64(v: Value) -> f64 {
    v as f64
}

#[inline]
pub fn zero() -> Value {
    Value::default()
}

/// `coef * v` for a signed plan coefficient.
#[inline]
pub fn scaled(coef: i64, v: Value) -> Value {
    from_i64(coef) * v
}
