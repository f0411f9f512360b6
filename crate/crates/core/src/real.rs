//! Scalar abstraction for the floating-point parts of the crate.
//!
//! Everything numeric (quadrature, saddle solving, limit constants, Boltzmann
//! moments) is written against [`Real`] so it runs in `f32` or `f64`. The
//! exact parts (dimensions, counts, heights) use integers and never touch it.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in target float")
}

/// Converts an integer into `T` (lossy for huge values, like `as`).
#[inline]
pub fn from_u64<T: Real>(x: u64) -> T {
    T::from_u64(x).expect("u64 converts to float")
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug)]
pub struct CompensatedSum<T> {
    sum: T,
    comp: T,
}

impl<T: Real> Default for CompensatedSum<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp + ((self.sum - t) + x);
        } else {
            self.comp = self.comp + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

impl<T: Real> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// A numeric value together with an absolute error bound or estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
}

impl<T: Real> Estimate<T> {
    pub fn new(value: T, error: T) -> Self {
        Self { value, error }
    }

    pub fn exact(value: T) -> Self {
        Self {
            value,
            error: T::zero(),
        }
    }

    /// True when the two intervals `value ± k·error` overlap.
    pub fn agrees_with(&self, other: &Estimate<T>, k: T) -> bool {
        (self.value - other.value).abs() <= k * (self.error + other.error)
    }
}

/// Upper bound for the upper incomplete gamma function
/// `Γ(a, v) = ∫_v^∞ t^{a-1} e^{-t} dt` for `v > 0`.
///
/// For `a <= 1` the integrand's power factor is nonincreasing, giving
/// `v^{a-1} e^{-v}`. For `a > 1` and `v > a - 1` the ratio test on
/// successive integration by parts gives `v^{a-1} e^{-v} / (1 - (a-1)/v)`.
/// Otherwise `None`: the caller's cutoff is too small for a certified tail.
pub fn upper_gamma_bound<T: Real>(a: T, v: T) -> Option<T> {
    if v <= T::zero() {
        return None;
    }
    let base = (a - T::one()) * v.ln() - v;
    if a <= T::one() {
        return Some(base.exp());
    }
    let ratio = (a - T::one()) / v;
    if ratio >= T::one() {
        return None;
    }
    Some(base.exp() / (T::one() - ratio))
}

/// `Γ(x)` for `x > 0`, evaluated in double precision.
pub fn gamma<T: Real>(x: T) -> T {
    lit(statrs::function::gamma::gamma(x.to_f64().unwrap_or(f64::NAN)))
}

/// Riemann `ζ(s)` for real `s > 1`: sixteen direct terms plus an
/// Euler–Maclaurin remainder through the `B_8` term.
pub fn zeta<T: Real>(s: T) -> T {
    const N: u32 = 16;
    let s = s.to_f64().unwrap_or(f64::NAN);
    let n = f64::from(N);
    let head: f64 = (1..N).map(|k| f64::from(k).powf(-s)).sum();
    let tail = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s / 12.0 * n.powf(-s - 1.0)
        - s * (s + 1.0) * (s + 2.0) / 720.0 * n.powf(-s - 3.0)
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) / 30240.0 * n.powf(-s - 5.0)
        - s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * (s + 5.0) * (s + 6.0) / 1_209_600.0
            * n.powf(-s - 7.0);
    lit(head + tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedSum::<f64>::new();
        acc.add(1e16);
        for _ in 0..1000 {
            acc.add(1.0);
        }
        acc.add(-1e16);
        assert_eq!(acc.value(), 1000.0);
    }

    #[test]
    fn upper_gamma_bound_dominates_quadrature() {
        // Γ(1, v) = e^{-v}; Γ(2, v) = (v+1) e^{-v}.
        let v = 5.0f64;
        assert!((upper_gamma_bound(1.0, v).unwrap() - (-v).exp()).abs() < 1e-15);
        let b = upper_gamma_bound(2.0, v).unwrap();
        assert!(b >= (v + 1.0) * (-v).exp());
        assert!(b <= 1.3 * (v + 1.0) * (-v).exp());
        // a < 1: Γ(0.5, v) ≤ v^{-1/2} e^{-v}
        let b = upper_gamma_bound(0.5, v).unwrap();
        assert!(b > 0.0 && b <= v.powf(-0.5) * (-v).exp() * (1.0 + 1e-12));
        assert!(upper_gamma_bound(3.0, 1.0f64).is_none());
    }

    #[test]
    fn zeta_values() {
        let pi = std::f64::consts::PI;
        assert!((zeta(2.0f64) - pi * pi / 6.0).abs() < 1e-13, "{}", zeta(2.0f64) - pi * pi / 6.0);
        assert!((zeta(4.0f64) - pi.powi(4) / 90.0).abs() < 1e-13);
        // ζ(5/3) by brute force with an integral tail
        let m = 200_000u32;
        let direct: f64 = (1..=m).map(|k| f64::from(k).powf(-5.0 / 3.0)).sum::<f64>()
            + 1.5 * (f64::from(m) + 0.5).powf(-2.0 / 3.0);
        assert!((zeta(5.0 / 3.0f64) - direct).abs() < 1e-9);
        assert!((gamma(0.5f64) - pi.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn works_in_single_precision() {
        let mut acc = CompensatedSum::<f32>::new();
        for _ in 0..10 {
            acc.add(0.1);
        }
        assert!((acc.value() - 1.0).abs() < 1e-6);
        assert!(upper_gamma_bound(1.5f32, 10.0).is_some());
    }
}
