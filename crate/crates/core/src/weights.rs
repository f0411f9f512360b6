//! Weight vectors of `sl_{r+1}` and the exact polynomials attached to them.
//!
//! A weight vector `k ∈ ℕ^r` (all components ≥ 1) indexes the irreducible
//! representation with highest weight `Σ (k_j - 1) λ_j`. Its dimension is
//!
//! ```text
//! a_r(k) = h_r(k) / c_r,   h_r(k) = ∏_{1≤ℓ≤j≤r} (k_ℓ + … + k_j),   c_r = r!(r-1)!⋯1!
//! ```
//!
//! and the height functional is `L(k) = ½ Σ_j j(r+1-j) k_j`.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{from_u64, Real};

/// Rank `r` of the Lie algebra `sl_{r+1}(ℂ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Rank(u32);

impl Rank {
    pub fn new(r: u32) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidRank(r));
        }
        Ok(Self(r))
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn as_usize(self) -> usize {
        self.0 as usize
    }

    /// Degree `ν_r = r(r+1)/2` of the dimension polynomial.
    #[inline]
    pub fn degree(self) -> u32 {
        self.0 * (self.0 + 1) / 2
    }

    /// Growth exponent `2/(r+1)` of `R_r(x)`.
    pub fn census_exponent<T: Real>(self) -> T {
        from_u64::<T>(2) / from_u64::<T>(u64::from(self.0) + 1)
    }
}

impl TryFrom<u32> for Rank {
    type Error = Error;
    fn try_from(r: u32) -> Result<Self> {
        Rank::new(r)
    }
}

impl From<Rank> for u32 {
    fn from(r: Rank) -> u32 {
        r.0
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A dominant weight, shifted so every component is at least one.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<u64>);

impl WeightVector {
    pub fn new(rank: Rank, components: Vec<u64>) -> Result<Self> {
        if components.len() != rank.as_usize() {
            return Err(Error::InvalidWeight(format!(
                "expected {} components, got {}",
                rank,
                components.len()
            )));
        }
        if components.contains(&0) {
            return Err(Error::InvalidWeight(format!(
                "components must be >= 1: {components:?}"
            )));
        }
        Ok(Self(components))
    }

    /// The all-ones vector, i.e. the trivial representation.
    pub fn trivial(rank: Rank) -> Self {
        Self(vec![1; rank.as_usize()])
    }

    pub(crate) fn from_vec_unchecked(components: Vec<u64>) -> Self {
        debug_assert!(components.iter().all(|&c| c >= 1));
        Self(components)
    }

    pub fn rank(&self) -> Rank {
        Rank(self.0.len() as u32)
    }

    pub fn components(&self) -> &[u64] {
        &self.0
    }

    /// The same weight with coordinates reversed (the diagram automorphism).
    pub fn reversed(&self) -> Self {
        let mut v = self.0.clone();
        v.reverse();
        Self(v)
    }

    pub fn max_component(&self) -> u64 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// Exact dimension of the irreducible representation, when it fits in 64 bits.
    pub fn dim(&self) -> Option<u64> {
        dim_checked(&self.0)
    }

    /// `L(k - 1)`, the height of this highest weight.
    pub fn height(&self) -> HalfInt {
        let shifted: Vec<u64> = self.0.iter().map(|&c| c - 1).collect();
        height_functional(&shifted)
    }
}

impl fmt::Debug for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// A nonnegative half-integer stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct HalfInt(u64);

impl HalfInt {
    pub fn from_twice(twice: u64) -> Self {
        Self(twice)
    }

    pub fn twice(self) -> u64 {
        self.0
    }

    pub fn to_real<T: Real>(self) -> T {
        from_u64::<T>(self.0) / from_u64::<T>(2)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl Serialize for HalfInt {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0 as f64 / 2.0)
    }
}

/// `c_r = ∏_{j=1}^{r} j!`.
pub fn superfactorial(rank: Rank) -> BigUint {
    let mut out = BigUint::one();
    let mut fact = BigUint::one();
    for j in 1..=rank.get() {
        fact *= j;
        out *= &fact;
    }
    out
}

fn superfactorial_u128(r: usize) -> Option<u128> {
    let mut out: u128 = 1;
    let mut fact: u128 = 1;
    for j in 1..=r as u128 {
        fact = fact.checked_mul(j)?;
        out = out.checked_mul(fact)?;
    }
    Some(out)
}

/// `h_r(k) = ∏_{ℓ≤j} (k_ℓ + … + k_j)`.
pub fn h_poly(k: &WeightVector) -> BigUint {
    h_poly_slice(k.components())
}

fn h_poly_slice(k: &[u64]) -> BigUint {
    let mut out = BigUint::one();
    for l in 0..k.len() {
        let mut s = 0u128;
        for &kj in &k[l..] {
            s += u128::from(kj);
            out *= s;
        }
    }
    out
}

fn h_poly_u128(k: &[u64]) -> Option<u128> {
    let mut out: u128 = 1;
    for l in 0..k.len() {
        let mut s: u128 = 0;
        for &kj in &k[l..] {
            s += u128::from(kj);
            out = out.checked_mul(s)?;
        }
    }
    Some(out)
}

/// Weyl dimension `a_r(k) = h_r(k)/c_r` as an exact integer.
pub fn dim_irrep(k: &WeightVector) -> Result<BigUint> {
    let h = h_poly(k);
    let c = superfactorial(k.rank());
    let (q, rem) = h.div_rem(&c);
    if !rem.is_zero() {
        return Err(Error::Internal(format!(
            "h_r({k:?}) = {h} not divisible by c_r = {c}"
        )));
    }
    Ok(q)
}

/// `a_r(k)` when it fits in a `u64`; `None` otherwise. Uses 128-bit
/// arithmetic and falls back to big integers on overflow.
pub fn dim_checked(k: &[u64]) -> Option<u64> {
    if let (Some(h), Some(c)) = (h_poly_u128(k), superfactorial_u128(k.len())) {
        debug_assert_eq!(h % c, 0);
        return u64::try_from(h / c).ok();
    }
    let h = h_poly_slice(k);
    let mut c = BigUint::one();
    let mut fact = BigUint::one();
    for j in 1..=k.len() as u64 {
        fact *= j;
        c *= &fact;
    }
    (h / c).to_u64()
}

/// Height functional `L(k) = ½ Σ_j j(r+1-j) k_j` for nonnegative `k`.
pub fn height_functional(k: &[u64]) -> HalfInt {
    let r = k.len() as u64;
    let twice: u64 = k
        .iter()
        .enumerate()
        .map(|(i, &kj)| {
            let j = i as u64 + 1;
            j * (r + 1 - j) * kj
        })
        .sum();
    HalfInt(twice)
}

/// The same functional through its defining double sum
/// `½ Σ_{ℓ≤j} (k_ℓ + … + k_j)`.
pub fn height_functional_double_sum(k: &[u64]) -> HalfInt {
    let mut twice = 0u64;
    for l in 0..k.len() {
        let mut s = 0u64;
        for &kj in &k[l..] {
            s += kj;
            twice += s;
        }
    }
    HalfInt(twice)
}

/// `h_r` evaluated at a real vector.
pub fn h_real<T: Real>(y: &[T]) -> T {
    let mut out = T::one();
    for l in 0..y.len() {
        let mut s = T::zero();
        for &yj in &y[l..] {
            s = s + yj;
            out = out * s;
        }
    }
    out
}

/// `c_r` as a float.
pub fn superfactorial_real<T: Real>(r: usize) -> T {
    let mut out = T::one();
    let mut fact = T::one();
    for j in 1..=r as u64 {
        fact = fact * from_u64::<T>(j);
        out = out * fact;
    }
    out
}

/// `a_r` evaluated at a real vector (homogeneous of degree `r(r+1)/2`).
pub fn dim_real<T: Real>(y: &[T]) -> T {
    h_real(y) / superfactorial_real::<T>(y.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(r: u32, v: &[u64]) -> WeightVector {
        WeightVector::new(Rank::new(r).unwrap(), v.to_vec()).unwrap()
    }

    #[test]
    fn superfactorial_values() {
        let sf = |r| superfactorial(Rank::new(r).unwrap());
        assert_eq!(sf(1), BigUint::from(1u32));
        assert_eq!(sf(2), BigUint::from(2u32));
        assert_eq!(sf(3), BigUint::from(12u32));
        assert_eq!(sf(4), BigUint::from(288u32));
    }

    #[test]
    fn h_poly_values() {
        assert_eq!(h_poly(&w(2, &[1, 1])), BigUint::from(2u32));
        assert_eq!(h_poly(&w(2, &[2, 1])), BigUint::from(6u32));
        assert_eq!(h_poly(&w(3, &[1, 1, 1])), BigUint::from(12u32));
    }

    #[test]
    fn dim_values() {
        assert_eq!(dim_irrep(&w(1, &[5])).unwrap(), BigUint::from(5u32));
        assert_eq!(dim_irrep(&w(2, &[1, 1])).unwrap(), BigUint::from(1u32));
        assert_eq!(dim_irrep(&w(2, &[2, 1])).unwrap(), BigUint::from(3u32));
        assert_eq!(dim_irrep(&w(3, &[2, 1, 1])).unwrap(), BigUint::from(4u32));
        // adjoint of sl_3 is 8-dimensional
        assert_eq!(w(2, &[2, 2]).dim(), Some(8));
    }

    #[test]
    fn invalid_weights_rejected() {
        let r2 = Rank::new(2).unwrap();
        assert!(WeightVector::new(r2, vec![1, 0]).is_err());
        assert!(WeightVector::new(r2, vec![1, 1, 1]).is_err());
        assert!(Rank::new(0).is_err());
    }

    #[test]
    fn trivial_has_dimension_one() {
        for r in 1..=8 {
            let rank = Rank::new(r).unwrap();
            assert_eq!(dim_irrep(&WeightVector::trivial(rank)).unwrap(), BigUint::one());
        }
    }

    #[test]
    fn overflowing_dims_fall_back_exactly() {
        // a_4 at (10^5,…) overflows u128 in h but the quotient is exact.
        let k = vec![100_000u64; 4];
        let exact = dim_irrep(&w(4, &k)).unwrap();
        assert_eq!(dim_checked(&k).map(BigUint::from), exact.to_u64().map(BigUint::from));
        let huge = vec![u64::MAX / 4; 3];
        assert_eq!(dim_checked(&huge), None);
    }

    #[test]
    fn height_values() {
        assert_eq!(height_functional(&[0, 0]), HalfInt::from_twice(0));
        assert_eq!(height_functional(&[1, 1]), HalfInt::from_twice(4));
        assert_eq!(height_functional_double_sum(&[1, 1]), HalfInt::from_twice(4));
        assert_eq!(height_functional(&[1, 0, 0]), HalfInt::from_twice(3));
        assert_eq!(height_functional_double_sum(&[1, 0, 0]), HalfInt::from_twice(3));
        assert_eq!(HalfInt::from_twice(3).to_string(), "3/2");
        assert_eq!(w(2, &[2, 1]).height().to_real::<f64>(), 1.0);
    }

    #[test]
    fn real_polynomial_matches_integer() {
        let k = [3u64, 5, 2];
        let exact = dim_checked(&k).unwrap() as f64;
        let y: Vec<f64> = k.iter().map(|&c| c as f64).collect();
        assert!((dim_real(&y) - exact).abs() < 1e-9 * exact);
        let y32: Vec<f32> = k.iter().map(|&c| c as f32).collect();
        assert!((dim_real(&y32) as f64 - exact).abs() < 1e-5 * exact);
    }

    fn weight_strategy() -> impl Strategy<Value = Vec<u64>> {
        (1usize..=5).prop_flat_map(|r| prop::collection::vec(1u64..40, r))
    }

    proptest! {
        #[test]
        fn reversal_symmetry(k in weight_strategy()) {
            let r = Rank::new(k.len() as u32).unwrap();
            let v = WeightVector::new(r, k).unwrap();
            prop_assert_eq!(dim_irrep(&v).unwrap(), dim_irrep(&v.reversed()).unwrap());
        }

        #[test]
        fn homogeneity(k in weight_strategy(), c in 1u64..6) {
            let r = Rank::new(k.len() as u32).unwrap();
            let scaled: Vec<u64> = k.iter().map(|&x| x * c).collect();
            let lhs = h_poly(&WeightVector::new(r, scaled).unwrap());
            let rhs = h_poly(&WeightVector::new(r, k).unwrap()) * BigUint::from(c).pow(r.degree());
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn height_forms_agree(k in prop::collection::vec(0u64..1000, 1..8)) {
            prop_assert_eq!(height_functional(&k), height_functional_double_sum(&k));
        }

        #[test]
        fn max_component_sandwich(k in weight_strategy()) {
            // 12/(r(r+1)(r+2)) L(k-1) ≤ max(k) - 1 ≤ (2/r) L(k-1), in exact integers
            let r = k.len() as u64;
            let v = WeightVector::new(Rank::new(r as u32).unwrap(), k).unwrap();
            let twice_l = v.height().twice();
            let kmax1 = v.max_component() - 1;
            prop_assert!(6 * twice_l <= kmax1 * r * (r + 1) * (r + 2));
            prop_assert!(r * kmax1 <= twice_l);
        }

        #[test]
        fn fast_path_matches_bigint(k in weight_strategy()) {
            let r = Rank::new(k.len() as u32).unwrap();
            let exact = dim_irrep(&WeightVector::new(r, k.clone()).unwrap()).unwrap();
            prop_assert_eq!(dim_checked(&k), exact.to_u64());
        }
    }
}
