//! Executable checks: fractional-part lower bounds on the box `Λ_{N,r}`,
//! equivalence of ensembles at small `n`, and exact-versus-limit gaps for
//! the limit laws under the grand ensemble.
//!
//! Fractional parts `{θ a(k)}` are computed exactly: every `θ` is a rational
//! with a 64-bit numerator and a 128-bit denominator (each `f64` is dyadic),
//! and window endpoints are dyadic as well.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::boltzmann::{
    exact_expected_shape, exact_mgf_n, exact_prob_height_le, exact_prob_max_dim_le, solve_saddle, BoltzmannParams,
    BoltzmannSampler, DEFAULT_DELTA,
};
use crate::census::IrrepCensus;
use crate::error::{Error, Result};
use crate::exact_count::{
    count_representations, enumerate_representations, ratio_f64, CountTable, Representation, UniformSampler,
};
use crate::limits::{compute_constants, exp_cdf, gumbel_cdf, limit_shape_f, mgf_m, LimitConstants};
use crate::quadrature::QuadSpec;
use crate::statistics::{default_shape_grid, normalize_max_dim, stat_max_dim};
use crate::stream_rng;
use crate::weights::{dim_checked, Rank, WeightVector};

/// Iterator over `Λ_{N,r} = {k : N ≤ k_j ≤ (j+2)N}` in lexicographic order.
#[derive(Clone, Debug)]
pub struct LambdaWindow {
    n: u64,
    current: Option<Vec<u64>>,
}

impl Iterator for LambdaWindow {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().expect("checked above");
        let mut j = cur.len();
        loop {
            if j == 0 {
                self.current = None;
                break;
            }
            j -= 1;
            if cur[j] < (j as u64 + 3) * self.n {
                cur[j] += 1;
                break;
            }
            cur[j] = self.n;
        }
        Some(out)
    }
}

/// Lattice points of `Λ_{N,r}`; there are `∏_j ((j+1)N + 1)` of them.
pub fn lambda_window(rank: Rank, n: u64) -> Result<LambdaWindow> {
    if n < 4 {
        return Err(Error::OutOfRange {
            what: "N",
            value: n.to_string(),
            limit: ">= 4".into(),
        });
    }
    Ok(LambdaWindow {
        n,
        current: Some(vec![n; rank.as_usize()]),
    })
}

/// Cardinality of `Λ_{N,r}`.
pub fn lambda_window_size(rank: Rank, n: u64) -> u64 {
    (1..=u64::from(rank.get())).map(|j| (j + 1) * n + 1).product()
}

/// An exact rational `num/den` in `(0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Theta {
    pub num: u64,
    pub den: u128,
}

impl Theta {
    /// The exact dyadic value of a double in `(0, 1)`.
    pub fn from_f64(x: f64) -> Result<Self> {
        let (num, shift) = dyadic(x).ok_or_else(|| Error::OutOfRange {
            what: "theta",
            value: x.to_string(),
            limit: "(2^-127, 1)".into(),
        })?;
        Ok(Self {
            num,
            den: 1u128 << shift,
        })
    }

    pub fn rational(p: u64, q: u128) -> Result<Self> {
        if p == 0 || u128::from(p) >= q {
            return Err(Error::OutOfRange {
                what: "theta",
                value: format!("{p}/{q}"),
                limit: "(0, 1)".into(),
            });
        }
        Ok(Self { num: p, den: q })
    }

    pub fn to_f64(self) -> f64 {
        u128_to_f64(u128::from(self.num)) / u128_to_f64(self.den)
    }

    /// Numerator of `{θ a}` over `den`.
    #[cfg(test)]
    fn frac_num(self, a: u64) -> u128 {
        Reducer::new(self).rem(a)
    }

    /// `self ≥ lo · m^{-e}` with `lo = (ln, ls)` dyadic, compared exactly.
    fn at_least(self, lo: (u64, u32), m: u64, e: u32) -> bool {
        // num · m^e · 2^ls ≥ ln · den
        let lhs = (BigUint::from(self.num) * BigUint::from(m).pow(e)) << lo.1;
        let rhs = BigUint::from(lo.0) * BigUint::from(self.den);
        lhs >= rhs
    }

    /// `self ≤ 1/2`.
    fn at_most_half(self) -> bool {
        BigUint::from(self.num) * 2u32 <= BigUint::from(self.den)
    }
}

fn u128_to_f64(x: u128) -> f64 {
    let bits = 128 - x.leading_zeros();
    if bits <= 64 {
        x as u64 as f64
    } else {
        let sh = bits - 64;
        ((x >> sh) as u64 as f64) * 2f64.powi(sh as i32)
    }
}

const TWO_POW_M64: f64 = 1.0 / 18_446_744_073_709_551_616.0;

/// `a ↦ θ a mod 1` specialized to the shape of the denominator.
#[derive(Clone, Copy, Debug)]
enum Reducer {
    /// `den = 2^k`: reduce by masking (wrapping is harmless mod `2^128`).
    Pow2 { num: u128, mask: u128, scale: f64 },
    /// `num · den < 2^64`: native 64-bit arithmetic.
    Small { num: u64, den: u64, inv: f64 },
    General { num: u128, den: u128, inv: f64 },
}

impl Reducer {
    fn new(t: Theta) -> Self {
        if t.den.is_power_of_two() {
            Self::Pow2 {
                num: u128::from(t.num),
                mask: t.den - 1,
                scale: 2f64.powi(-(t.den.trailing_zeros() as i32)),
            }
        } else if u128::from(t.num).checked_mul(t.den).is_some_and(|v| v < 1 << 64) {
            Self::Small {
                num: t.num % t.den as u64,
                den: t.den as u64,
                inv: 1.0 / t.den as f64,
            }
        } else {
            Self::General {
                num: u128::from(t.num),
                den: t.den,
                inv: 1.0 / u128_to_f64(t.den),
            }
        }
    }

    #[inline]
    fn rem(self, a: u64) -> u128 {
        match self {
            Self::Pow2 { num, mask, .. } => num.wrapping_mul(u128::from(a)) & mask,
            Self::Small { num, den, .. } => u128::from(num * (a % den) % den),
            Self::General { num, den, .. } => num * (u128::from(a) % den) % den,
        }
    }

    #[inline]
    fn to_unit(self, rem: u128) -> f64 {
        match self {
            Self::Pow2 { scale, .. } => u128_to_f64(rem) * scale,
            Self::Small { inv, .. } | Self::General { inv, .. } => u128_to_f64(rem) * inv,
        }
    }
}

/// `sin²(π f)` for `f ∈ [0, 1)`, by the odd Taylor series of `sin` on
/// `[0, π/2]` (truncation below `1e-15`).
#[inline]
fn sin2_pi(f: f64) -> f64 {
    let x = std::f64::consts::PI * f.min(1.0 - f);
    let x2 = x * x;
    let mut p = 0.0;
    // 1/(2j+1)! for j = 9 down to 1
    for c in [
        8.220_635_246_624_33e-18,
        -2.811_457_254_345_520_6e-15,
        7.647_163_731_819_816e-13,
        -1.605_904_383_682_161_3e-10,
        2.505_210_838_544_172e-8,
        -2.755_731_922_398_589e-6,
        1.984_126_984_126_984e-4,
        -8.333_333_333_333_333e-3,
        1.666_666_666_666_666_6e-1,
    ] {
        p = p * x2 + c;
    }
    let s = x - x * x2 * p;
    s * s
}

/// `x = num / 2^shift` exactly, `num` odd, for `0 < x < 1`.
fn dyadic(x: f64) -> Option<(u64, u32)> {
    if !(x > 0.0 && x < 1.0) {
        return None;
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let (mut m, mut e) = if exp == 0 {
        (bits & ((1 << 52) - 1), -1074i64)
    } else {
        ((bits & ((1 << 52) - 1)) | (1 << 52), exp - 1075)
    };
    let tz = m.trailing_zeros();
    m >>= tz;
    e += i64::from(tz);
    let shift = u32::try_from(-e).ok()?;
    (shift <= 126).then_some((m, shift))
}

/// Exact test of `lo < {θ a} < 1 - lo` for one `θ` and dyadic `lo`.
#[derive(Clone, Copy, Debug)]
struct OpenWindow {
    theta: Theta,
    reducer: Reducer,
    shift: u32,
    scaled_lo: u128,
}

impl OpenWindow {
    fn new(theta: Theta, lo: f64) -> Result<Self> {
        let (ln, ls) = dyadic(lo).ok_or_else(|| Error::OutOfRange {
            what: "window",
            value: lo.to_string(),
            limit: "(0, 1)".into(),
        })?;
        let den_bits = 128 - theta.den.leading_zeros();
        let scaled_lo = u128::from(ln).checked_mul(theta.den);
        match scaled_lo {
            Some(v) if den_bits + ls <= 127 => Ok(Self {
                theta,
                reducer: Reducer::new(theta),
                shift: ls,
                scaled_lo: v,
            }),
            _ => Err(Error::OutOfRange {
                what: "exact window arithmetic",
                value: format!("denominator of {den_bits} bits, window 2^-{ls}"),
                limit: "127 bits".into(),
            }),
        }
    }

    #[inline]
    fn contains(&self, a: u64) -> bool {
        self.contains_rem(self.reducer.rem(a))
    }

    /// `(θ 2^64, lo 2^64)` when both are integers, so that `{θ a} 2^64` is
    /// a single wrapping product.
    fn fixed_point(&self) -> Option<(u64, u64)> {
        let sh = self.theta.den.trailing_zeros();
        if !self.theta.den.is_power_of_two() || sh > 64 || self.shift > 64 {
            return None;
        }
        let num = (u128::from(self.theta.num) << (64 - sh)) as u64;
        let lo = (self.scaled_lo >> sh) << (64 - self.shift);
        Some((num, lo as u64))
    }

    #[inline]
    fn contains_rem(&self, rem: u128) -> bool {
        (rem << self.shift) > self.scaled_lo && ((self.theta.den - rem) << self.shift) > self.scaled_lo
    }
}

/// Log-uniform grid of `points` values on `[lo, 1/2]`, each rounded up to a
/// multiple of `2^{-64}`, plus the rationals `p/q ∈ (0, 1/2]`, `q ≤ 50`, and
/// their rescalings `p/(q N^e)` toward the lower end when in range.
pub fn theta_grid(lo: f64, points: usize, n: u64, e: u32) -> Result<Vec<Theta>> {
    let mut out = Vec::with_capacity(points + 2000);
    let points = points.max(2);
    let (a, b) = (lo.ln(), 0.5f64.ln());
    let scale = 2f64.powi(64);
    let first = (lo * scale).ceil();
    for i in 0..points {
        let x = (a + (b - a) * i as f64 / (points - 1) as f64).exp();
        let k = (x * scale).ceil().clamp(first, scale / 2.0) as u64;
        if k == 0 {
            return Err(Error::OutOfRange {
                what: "theta grid lower end",
                value: lo.to_string(),
                limit: ">= 2^-64".into(),
            });
        }
        let tz = k.trailing_zeros();
        out.push(Theta {
            num: k >> tz,
            den: 1u128 << (64 - tz),
        });
    }
    let lo_theta = Theta::from_f64(lo)?;
    let deep = u128::from(n).pow(e);
    for q in 2u64..=50 {
        for p in 1..=q / 2 {
            if num_integer::gcd(p, q) != 1 {
                continue;
            }
            for den in [u128::from(q), u128::from(q) * deep] {
                let t = Theta::rational(p, den)?;
                if rational_ge(t, lo_theta) {
                    out.push(t);
                }
            }
        }
    }
    Ok(out)
}

fn rational_ge(a: Theta, b: Theta) -> bool {
    BigUint::from(a.num) * BigUint::from(b.den) >= BigUint::from(b.num) * BigUint::from(a.den)
}

/// Outcome at one `θ` of the counting and `sin²` bounds on `Λ_{N,r}`.
#[derive(Clone, Debug, Serialize)]
pub struct WeylThetaResult {
    pub theta: f64,
    pub theta_exact: Theta,
    /// Points of `Λ_{N,r}` with `{θ a(k)}` in the open window.
    pub count: u64,
    pub count_bound: f64,
    pub sin2_sum: f64,
    /// `C_{r,ε} N^r`.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeylWindowReport {
    pub r: u32,
    #[serde(rename = "N")]
    pub n: u64,
    pub epsilon: f64,
    pub theta_grid: String,
    /// `2^{-ν} ε`.
    pub window: f64,
    /// `C_{r,ε}`.
    pub c_r_eps: f64,
    pub lattice_points: u64,
    /// Smallest `count / (N^r/32)` over the grid.
    pub min_count_ratio: f64,
    /// Smallest `sin2_sum / (C N^r)` over the grid.
    pub min_sin2_ratio: f64,
    pub violations: usize,
    pub pass: bool,
    pub per_theta: Vec<WeylThetaResult>,
}

/// `C_{r,ε} = sin²(2^{-ν} π ε)/32`.
pub fn weyl_constant(rank: Rank, epsilon: f64) -> f64 {
    let w = epsilon * 2f64.powi(-(rank.degree() as i32));
    (std::f64::consts::PI * w).sin().powi(2) / 32.0
}

fn check_epsilon(epsilon: f64, max: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon <= max {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "epsilon",
            value: epsilon.to_string(),
            limit: format!("(0, {max}]"),
        })
    }
}

fn theta_in_range(t: Theta, eps: (u64, u32), n: u64, e: u32) -> Result<()> {
    if t.at_least(eps, n, e) && t.at_most_half() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "theta",
            value: format!("{}/{}", t.num, t.den),
            limit: format!("[eps N^-{e}, 1/2]"),
        })
    }
}

fn dyadic_eps(epsilon: f64) -> Result<(u64, u32)> {
    dyadic(epsilon).ok_or_else(|| Error::OutOfRange {
        what: "epsilon",
        value: epsilon.to_string(),
        limit: "(0, 1)".into(),
    })
}

/// Evaluates the window count `≥ N^r/32` and `Σ sin²(πθa) ≥ C_{r,ε}N^r`
/// over `Λ_{N,r}` at every supplied `θ ∈ [εN^{-ν}, 1/2]`.
pub fn weyl_lower_bound_check(rank: Rank, n: u64, epsilon: f64, thetas: &[Theta]) -> Result<WeylWindowReport> {
    if rank.get() < 2 {
        return Err(Error::InvalidRank(rank.get()));
    }
    check_epsilon(epsilon, 1.0 / 32.0)?;
    let nu = rank.degree();
    let eps = dyadic_eps(epsilon)?;
    for &t in thetas {
        theta_in_range(t, eps, n, nu)?;
    }
    let values: Vec<u64> = lambda_window(rank, n)?
        .map(|k| {
            dim_checked(&k).ok_or_else(|| Error::OutOfRange {
                what: "a(k)",
                value: format!("{k:?}"),
                limit: "u64".into(),
            })
        })
        .collect::<Result<_>>()?;
    let window = epsilon * 2f64.powi(-(nu as i32));
    let c = weyl_constant(rank, epsilon);
    let nr = (n as f64).powi(rank.get() as i32);
    let (count_bound, bound) = (nr / 32.0, c * nr);
    let per_theta = thetas
        .par_iter()
        .map(|&t| {
            let w = OpenWindow::new(t, window)?;
            let mut count = 0u64;
            let mut sin2 = 0.0;
            if let Some((num, lo)) = w.fixed_point() {
                for &a in &values {
                    let rem = num.wrapping_mul(a);
                    count += u64::from(rem > lo && rem.wrapping_neg() > lo);
                    sin2 += sin2_pi(rem as f64 * TWO_POW_M64);
                }
            } else {
                for &a in &values {
                    let rem = w.reducer.rem(a);
                    count += u64::from(w.contains_rem(rem));
                    sin2 += sin2_pi(w.reducer.to_unit(rem));
                }
            }
            Ok(WeylThetaResult {
                theta: t.to_f64(),
                theta_exact: t,
                count,
                count_bound,
                sin2_sum: sin2,
                bound,
                pass: count as f64 >= count_bound && sin2 >= bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = per_theta.iter().filter(|x| !x.pass).count();
    let min_of = |f: &dyn Fn(&WeylThetaResult) -> f64| per_theta.iter().map(f).fold(f64::INFINITY, f64::min);
    Ok(WeylWindowReport {
        r: rank.get(),
        n,
        epsilon,
        theta_grid: format!("{} values of theta in [eps N^-{nu}, 1/2]", thetas.len()),
        window,
        c_r_eps: c,
        lattice_points: values.len() as u64,
        min_count_ratio: min_of(&|x| x.count as f64 / count_bound),
        min_sin2_ratio: min_of(&|x| x.sin2_sum / bound),
        violations,
        pass: violations == 0,
        per_theta,
    })
}

/// Standard grid for the `Λ_{N,r}` check: `points` log-uniform values plus
/// the rational adversaries.
pub fn weyl_default_thetas(rank: Rank, n: u64, epsilon: f64, points: usize) -> Result<Vec<Theta>> {
    let nu = rank.degree();
    let lo = epsilon * (n as f64).powi(-(nu as i32));
    // the double nearest to εN^{-ν} may fall below it
    let lo = if Theta::from_f64(lo)?.at_least(dyadic_eps(epsilon)?, n, nu) {
        lo
    } else {
        lo * (1.0 + f64::EPSILON)
    };
    theta_grid(lo, points, n, nu)
}

/// Tally of one rung of the ladder for `sl_3`.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RungTally {
    /// Number of `(θ, box)` instances inside the rung's hypotheses.
    pub checked: u64,
    pub violations: u64,
    /// Smallest `count / bound` (or for the run rung, largest run over
    /// `N/2 + 1`, inverted) seen.
    pub min_ratio: f64,
    pub bound: f64,
}

impl RungTally {
    fn new(bound: f64) -> Self {
        Self {
            checked: 0,
            violations: 0,
            min_ratio: f64::INFINITY,
            bound,
        }
    }

    fn record(&mut self, ratio: f64, ok: bool) {
        self.checked += 1;
        self.violations += u64::from(!ok);
        self.min_ratio = self.min_ratio.min(ratio);
    }

    fn merge(mut self, other: Self) -> Self {
        self.checked += other.checked;
        self.violations += other.violations;
        self.min_ratio = self.min_ratio.min(other.min_ratio);
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LadderReport {
    #[serde(rename = "N")]
    pub n: u64,
    pub epsilon: f64,
    pub thetas: usize,
    /// Runs of `b_k = {(2k+1)θ}` outside the window: length `≤ N/2 + 1`
    /// and followed by at least as many terms inside.
    pub successive_terms: RungTally,
    /// `≥ N/8` terms in the window among `N` consecutive `k`, `k_0 ∈ [3N, 5N]`.
    pub linear_window: RungTally,
    /// `{(2k+2j+1)θ}` on `3N/2 ≤ k < 5N/2`, `2N ≤ j ≤ 3N`: `≥ N²/8`.
    pub linear_box: RungTally,
    /// `{θ k(2j+k)}` on `N ≤ k ≤ 3N`, `2N ≤ j ≤ 3N`, window `ε/4`: `≥ N²/16`.
    pub quadratic_box: RungTally,
    /// `{θ a_2(k,j)}` on `N ≤ k ≤ 3N`, `N ≤ j ≤ 4N`, window `ε/8`: `≥ N²/32`.
    pub cubic_box: RungTally,
    pub pass: bool,
}

fn count_in(w: &OpenWindow, values: impl Iterator<Item = u64>) -> u64 {
    values.map(|a| u64::from(w.contains(a))).sum()
}

/// The `sl_3` ladder at every supplied `θ`; each rung is evaluated only at
/// the `θ` inside its own hypotheses, with `θ ∈ [εN^{-3}, 1/2]` required.
pub fn ladder_window_check(n: u64, epsilon: f64, thetas: &[Theta]) -> Result<LadderReport> {
    if n < 4 {
        return Err(Error::OutOfRange {
            what: "N",
            value: n.to_string(),
            limit: ">= 4".into(),
        });
    }
    check_epsilon(epsilon, 1.0 / 32.0)?;
    let eps = dyadic_eps(epsilon)?;
    for &t in thetas {
        theta_in_range(t, eps, n, 3)?;
    }
    let nf = n as f64;
    let cubic: Vec<u64> = (n..=3 * n)
        .flat_map(|k| (n..=4 * n).map(move |j| k * j * (k + j) / 2))
        .collect();
    let quadratic: Vec<u64> = (n..=3 * n)
        .flat_map(|k| (2 * n..=3 * n).map(move |j| k * (2 * j + k)))
        .collect();
    // 3N/2 ≤ k < 5N/2
    let linear: Vec<u64> = ((3 * n).div_ceil(2)..(5 * n).div_ceil(2))
        .flat_map(|k| (2 * n..=3 * n).map(move |j| 2 * k + 2 * j + 1))
        .collect();

    let empty = || {
        (
            RungTally::new(nf / 2.0 + 1.0),
            RungTally::new(nf / 8.0),
            RungTally::new(nf * nf / 8.0),
            RungTally::new(nf * nf / 16.0),
            RungTally::new(nf * nf / 32.0),
        )
    };
    let tallies = thetas
        .par_iter()
        .map(|&t| -> Result<_> {
            let mut acc = empty();
            let half = OpenWindow::new(t, epsilon / 2.0)?;
            if t.at_least(eps, n, 1) {
                for k0 in 3 * n..=5 * n {
                    let c = count_in(&half, (k0..k0 + n).map(|k| 2 * k + 1));
                    acc.1.record(c as f64 / acc.1.bound, c as f64 >= acc.1.bound);
                }
                let c = count_in(&half, linear.iter().copied());
                acc.2.record(c as f64 / acc.2.bound, c as f64 >= acc.2.bound);
                // θ ≤ 1/2 - ε/N  ⟺  θ·2N ≤ N - ε, checked in floating point
                // well away from the edge and exactly near it
                if epsilon < 0.2 && t.to_f64() * 2.0 * nf <= nf - epsilon - 1e-9 {
                    successive_terms(&half, n, &mut acc.0);
                }
            }
            if t.at_least(eps, n, 2) {
                let w = OpenWindow::new(t, epsilon / 4.0)?;
                let c = count_in(&w, quadratic.iter().copied());
                acc.3.record(c as f64 / acc.3.bound, c as f64 >= acc.3.bound);
            }
            let w = OpenWindow::new(t, epsilon / 8.0)?;
            let c = count_in(&w, cubic.iter().copied());
            acc.4.record(c as f64 / acc.4.bound, c as f64 >= acc.4.bound);
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let (a1, a2, a3, a4, a5) = tallies.into_iter().fold(empty(), |x, y| {
        (x.0.merge(y.0), x.1.merge(y.1), x.2.merge(y.2), x.3.merge(y.3), x.4.merge(y.4))
    });
    let pass = [&a1, &a2, &a3, &a4, &a5].iter().all(|t| t.violations == 0);
    Ok(LadderReport {
        n,
        epsilon,
        thetas: thetas.len(),
        successive_terms: a1,
        linear_window: a2,
        linear_box: a3,
        quadratic_box: a4,
        cubic_box: a5,
        pass,
    })
}

/// Scans `b_k = {(2k+1)θ}` for `0 ≤ k < 8N`: every maximal run outside the
/// window has length at most `N/2 + 1`, and a run of length `ℓ` followed by a
/// term inside is followed by `ℓ` terms inside.
fn successive_terms(w: &OpenWindow, n: u64, tally: &mut RungTally) {
    let len = 8 * n;
    let inside: Vec<bool> = (0..len).map(|k| w.contains(2 * k + 1)).collect();
    let limit = n as f64 / 2.0 + 1.0;
    let mut k = 0usize;
    while k < inside.len() {
        if inside[k] {
            k += 1;
            continue;
        }
        let start = k;
        while k < inside.len() && !inside[k] {
            k += 1;
        }
        let run = k - start;
        let mut ok = run as f64 <= limit;
        if k + run <= inside.len() && k < inside.len() {
            ok &= inside[k..k + run].iter().all(|&b| b);
        }
        tally.record(limit / run as f64, ok);
    }
}

/// One row of an ensemble comparison.
#[derive(Clone, Debug, Serialize)]
pub struct EnsembleRow {
    pub n: u64,
    pub q: f64,
    pub tv: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnsembleReport {
    pub r: u32,
    pub statistic: String,
    pub rows: Vec<EnsembleRow>,
    /// Decreasing as a trend, single rises of at most 10% allowed.
    pub trend_pass: bool,
    pub threshold: Option<f64>,
    pub threshold_pass: Option<bool>,
    pub note: String,
}

/// `d_TV` between the `P_n` law of `X_k` (from `table`) and its `Q_q` law,
/// which is geometric with ratio `q^{a(k)}`.
pub fn ensembles_tv_with(table: &CountTable, k: &WeightVector, n: u64, q: f64) -> Result<f64> {
    let exact = table.multiplicity_law(k, n)?;
    let a = k.dim().ok_or_else(|| Error::OutOfRange {
        what: "a(k)",
        value: format!("{k:?}"),
        limit: "u64".into(),
    })?;
    let lambda = -q.ln();
    let x = (-lambda * a as f64).exp();
    let one_minus = -(-lambda * a as f64).exp_m1();
    let mut sum = 0.0;
    let mut xl = 1.0;
    for p in &exact {
        sum += (p - one_minus * xl).abs();
        xl *= x;
    }
    // Q(X_k > n/a(k)) = x^{⌊n/a⌋+1}, where P_n puts no mass
    sum += xl;
    Ok((0.5 * sum).clamp(0.0, 1.0))
}

/// `d_TV` at one `n`, with the saddle point solved for `n`.
pub fn ensembles_tv(rank: Rank, n: u64, k: &WeightVector) -> Result<f64> {
    let table = count_representations(rank, n)?;
    let (params, _) = solve_saddle::<f64>(rank, n, 1e-10)?;
    ensembles_tv_with(&table, k, n, params.q)
}

/// `d_TV` over an `n`-grid sharing one count table.
pub fn ensembles_report(rank: Rank, ns: &[u64], k: &WeightVector, threshold: Option<f64>) -> Result<EnsembleReport> {
    let max = ns.iter().copied().max().ok_or_else(|| Error::Domain("empty n-grid".into()))?;
    let table = count_representations(rank, max)?;
    let rows = ns
        .iter()
        .map(|&n| {
            let (params, _) = solve_saddle::<f64>(rank, n, 1e-10)?;
            Ok(EnsembleRow {
                n,
                q: params.q,
                tv: ensembles_tv_with(&table, k, n, params.q)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let tvs: Vec<f64> = rows.iter().map(|r| r.tv).collect();
    let threshold_pass = threshold.map(|t| tvs.last().is_some_and(|&v| v < t));
    Ok(EnsembleReport {
        r: rank.get(),
        statistic: format!("multiplicity of k = {:?}", k.components()),
        rows,
        trend_pass: decreasing_trend(&tvs, 0.1),
        threshold,
        threshold_pass,
        note: "tolerances are engineering choices; no rate is known".into(),
    })
}

/// True when the sequence ends below where it starts and every rise is at
/// most `slack` times the larger of the two values.
pub fn decreasing_trend(v: &[f64], slack: f64) -> bool {
    if v.len() < 2 {
        return true;
    }
    let steps = v.windows(2).all(|w| w[1] <= w[0] || w[1] - w[0] <= slack * w[0].max(w[1]));
    steps && v[v.len() - 1] < v[0]
}

/// Ratio of `p_r(n)` to `n^{-(r+2)/(r+3)} q_n^{-n} ∏(1 - q_n^{a(k)})^{-1} / √(2π𝒟_{r,var})`.
pub fn count_asymptotic_ratio(table: &CountTable, n: u64, spec: &QuadSpec<f64>) -> Result<f64> {
    let rank = table.rank();
    let (params, census) = solve_saddle::<f64>(rank, n, 1e-12)?;
    let constants = compute_constants(&params, spec)?;
    let r = f64::from(rank.get());
    let log_prod: f64 = census
        .entries()
        .iter()
        .map(|e| -crate::boltzmann::ln_one_minus_exp(params.lambda * e.m as f64) * e.rho as f64)
        .sum();
    let log_pred = -(r + 2.0) / (r + 3.0) * (n as f64).ln() + n as f64 * params.lambda + log_prod
        - 0.5 * (2.0 * std::f64::consts::PI * constants.script_d_var).ln();
    let p = table.p(n)?;
    let log_p = (p.bits() as f64 - 1.0) * std::f64::consts::LN_2
        + ratio_f64(p, &(BigUint::from(1u8) << (p.bits() - 1))).ln();
    Ok((log_p - log_pred).exp())
}

/// Kolmogorov distance `sup_x |F_S(x) - F(x)|` between the empirical
/// distribution of `sample` and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: f64,
    pub p_value: f64,
}

fn chi_square_tail(statistic: f64, dof: f64) -> Result<ChiSquareResult> {
    if dof < 1.0 {
        return Err(Error::Domain("chi-square test needs at least two classes".into()));
    }
    let dist = ChiSquared::new(dof).map_err(|e| Error::Internal(e.to_string()))?;
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value: dist.sf(statistic),
    })
}

/// Pearson goodness of fit of `observed` counts to class probabilities
/// `probs`.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<ChiSquareResult> {
    if observed.len() != probs.len() {
        return Err(Error::Mismatch("observed counts and probabilities differ in length".into()));
    }
    let total: u64 = observed.iter().sum();
    let t = total as f64;
    let mut stat = 0.0;
    let mut classes = 0.0;
    for (&o, &p) in observed.iter().zip(probs) {
        let e = p * t;
        if e > 0.0 {
            stat += (o as f64 - e).powi(2) / e;
            classes += 1.0;
        } else if o > 0 {
            return Ok(ChiSquareResult {
                statistic: f64::INFINITY,
                dof: classes,
                p_value: 0.0,
            });
        }
    }
    chi_square_tail(stat, classes - 1.0)
}

/// Pearson homogeneity test of two count vectors over the same classes.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> Result<ChiSquareResult> {
    if a.len() != b.len() {
        return Err(Error::Mismatch("count vectors differ in length".into()));
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let mut stat = 0.0;
    let mut classes = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let tot = (x + y) as f64;
        if tot == 0.0 {
            continue;
        }
        let (ea, eb) = (tot * na / (na + nb), tot * nb / (na + nb));
        stat += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
        classes += 1.0;
    }
    chi_square_tail(stat, classes - 1.0)
}

/// Uniformity check of the exact samplers at small `n`.
#[derive(Clone, Debug, Serialize)]
pub struct UniformityReport {
    pub r: u32,
    pub n: u64,
    pub classes: usize,
    pub draws: u64,
    pub dp_vs_uniform: ChiSquareResult,
    pub rejection_vs_dp: ChiSquareResult,
    pub dp_counts: Vec<u64>,
    pub rejection_counts: Vec<u64>,
}

/// Draws `draws` representations from the table sampler and from the
/// Boltzmann rejection sampler, both with per-draw streams of `seed`, and
/// tests them against the enumerated uniform law and against each other.
pub fn uniformity_check(rank: Rank, n: u64, draws: u64, seed: u64) -> Result<UniformityReport> {
    let table = count_representations(rank, n)?;
    let all = enumerate_representations(table.census(), n)?;
    let index: HashMap<&Representation, usize> = all.iter().enumerate().map(|(i, r)| (r, i)).collect();
    let sampler = UniformSampler::new(&table, n)?;
    let (params, census) = solve_saddle::<f64>(rank, n, 1e-12)?;
    let boltzmann = BoltzmannSampler::new(&params, &census, DEFAULT_DELTA)?;
    let budget = crate::boltzmann::default_attempt_budget(&params);

    let tally = |reps: Vec<Result<Representation>>| -> Result<Vec<u64>> {
        let mut counts = vec![0u64; all.len()];
        for rep in reps {
            let rep = rep?;
            let i = index
                .get(&rep)
                .ok_or_else(|| Error::Internal(format!("sampled representation outside the set: {rep:?}")))?;
            counts[*i] += 1;
        }
        Ok(counts)
    };
    let dp = tally(
        (0..draws)
            .into_par_iter()
            .map(|i| Ok(sampler.sample(&mut stream_rng(seed, i))))
            .collect(),
    )?;
    let rej = tally(
        (0..draws)
            .into_par_iter()
            .map(|i| {
                boltzmann
                    .rejection_sample(n, &mut stream_rng(seed ^ 0x5bd1_e995, i), budget)
                    .map(|x| x.0)
            })
            .collect(),
    )?;
    let uniform = vec![1.0 / all.len() as f64; all.len()];
    Ok(UniformityReport {
        r: rank.get(),
        n,
        classes: all.len(),
        draws,
        dp_vs_uniform: chi_square_gof(&dp, &uniform)?,
        rejection_vs_dp: chi_square_two_sample(&rej, &dp)?,
        dp_counts: dp,
        rejection_counts: rej,
    })
}

/// Statistic compared against its limit law.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LimitStat {
    /// Largest constituent dimension against the Gumbel law.
    MaxDim,
    /// Height against the Gumbel law.
    Height,
    /// `a(s k) X_k` against the unit exponential law.
    Multiplicity(WeightVector),
    /// `s^r E φ(t/s)` against `f_r(t)` on the default diagonal grid.
    Shape,
    /// `E e^{u s^ν N}` against `M(u)`.
    Mgf,
}

impl LimitStat {
    pub fn name(&self) -> String {
        match self {
            Self::MaxDim => "D".into(),
            Self::Height => "H".into(),
            Self::Multiplicity(k) => format!("mult{:?}", k.components()),
            Self::Shape => "shape".into(),
            Self::Mgf => "mgf".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GapPoint {
    /// Grid argument (`x`, the diagonal `t`, or `u`).
    pub x: f64,
    pub exact: f64,
    pub limit: f64,
    /// Certified error of `exact` and `limit` combined.
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitGap {
    pub statistic: String,
    pub r: u32,
    pub n: u64,
    pub s: f64,
    /// `max |exact - limit|` over the grid.
    pub gap: f64,
    /// `max |exact - limit| / |limit|` over the grid.
    pub relative_gap: f64,
    pub points: Vec<GapPoint>,
    pub warnings: Vec<String>,
}

/// Solved ensemble at `(r, n)` reused across statistics.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub params: BoltzmannParams<f64>,
    pub census: Arc<IrrepCensus>,
    pub constants: LimitConstants<f64>,
}

impl Ensemble {
    pub fn solve(rank: Rank, n: u64, spec: &QuadSpec<f64>) -> Result<Self> {
        let (params, census) = solve_saddle::<f64>(rank, n, 1e-12)?;
        let constants = compute_constants(&params, spec)?;
        Ok(Self {
            params,
            census,
            constants,
        })
    }
}

/// `x`-grid `[lo, hi]` with `points` equally spaced values.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
}

/// Exact `Q_{q_n}` gap between a statistic and its limit law; no sampling.
pub fn compare_exact_to_limit(rank: Rank, n: u64, stat: &LimitStat, spec: &QuadSpec<f64>) -> Result<LimitGap> {
    let ens = Ensemble::solve(rank, n, spec)?;
    let grid = match stat {
        LimitStat::MaxDim | LimitStat::Height => linear_grid(-2.0, 6.0, 161),
        LimitStat::Multiplicity(_) => linear_grid(0.0, 8.0, 161),
        LimitStat::Shape => default_shape_grid(rank.as_usize(), 8).iter().map(|t| t[0]).collect(),
        LimitStat::Mgf => vec![-0.5, -0.25, 0.0, 0.25, 0.5],
    };
    compare_on_grid(&ens, stat, &grid, spec)
}

/// As [`compare_exact_to_limit`] on a caller-supplied grid.
pub fn compare_on_grid(ens: &Ensemble, stat: &LimitStat, grid: &[f64], spec: &QuadSpec<f64>) -> Result<LimitGap> {
    let (p, census, c) = (&ens.params, ens.census.as_ref(), &ens.constants);
    let r = p.rank.get();
    let points = grid
        .par_iter()
        .map(|&x| -> Result<GapPoint> {
            let (exact, limit, error) = match stat {
                LimitStat::MaxDim => {
                    let ell = c.a_d + x * c.b_d;
                    let e = if ell < 0.0 {
                        crate::Estimate::exact(0.0)
                    } else {
                        exact_prob_max_dim_le(p, census, ell.floor() as u64)?
                    };
                    (e.value, gumbel_cdf(x), e.error)
                }
                LimitStat::Height => {
                    let e = exact_prob_height_le(p, census, c.a_h + x * c.b_h)?;
                    (e.value, gumbel_cdf(x), e.error)
                }
                LimitStat::Multiplicity(k) => {
                    let a = k.dim().ok_or_else(|| Error::OutOfRange {
                        what: "a(k)",
                        value: format!("{k:?}"),
                        limit: "u64".into(),
                    })? as f64;
                    // Q(λ a X ≤ x) = 1 - e^{-λ a (⌊x/(λa)⌋ + 1)}
                    let steps = (x / (p.lambda * a)).floor() + 1.0;
                    (-(-p.lambda * a * steps).exp_m1(), exp_cdf(x), 0.0)
                }
                LimitStat::Shape => {
                    let t = vec![x / p.s; r as usize];
                    let e = exact_expected_shape(p, census, &t)?;
                    let f = limit_shape_f(&vec![x; r as usize], spec)?;
                    let sr = p.s.powi(r as i32);
                    (sr * e.value, f.value, sr * e.error + f.error)
                }
                LimitStat::Mgf => {
                    let e = exact_mgf_n(p, census, x)?;
                    let m = mgf_m(census, x)?;
                    (e.value, m.value, e.error + m.error)
                }
            };
            Ok(GapPoint { x, exact, limit, error })
        })
        .collect::<Result<Vec<_>>>()?;
    let gap = points.iter().map(|g| (g.exact - g.limit).abs()).fold(0.0, f64::max);
    let relative_gap = points
        .iter()
        .filter(|g| g.limit != 0.0)
        .map(|g| ((g.exact - g.limit) / g.limit).abs())
        .fold(0.0, f64::max);
    Ok(LimitGap {
        statistic: stat.name(),
        r,
        n: p.n,
        s: p.s,
        gap,
        relative_gap,
        points,
        warnings: c.warnings.clone(),
    })
}

/// Normalized largest dimensions of `samples` independent Boltzmann draws,
/// draw `i` using stream `i` of `seed`.
pub fn sample_normalized_max_dim(ens: &Ensemble, samples: u64, seed: u64) -> Result<Vec<f64>> {
    let sampler = BoltzmannSampler::new(&ens.params, &ens.census, DEFAULT_DELTA)?;
    Ok((0..samples)
        .into_par_iter()
        .map(|i| {
            let rep = sampler.sample(&mut stream_rng(seed, i));
            normalize_max_dim(stat_max_dim(&rep).unwrap_or(0), &ens.constants)
        })
        .collect())
}

/// Monte Carlo against exact: the KS distance of sampled normalized `D` to
/// the Gumbel law next to the exact sup-gap.
#[derive(Clone, Debug, Serialize)]
pub struct CrossCheck {
    pub r: u32,
    pub n: u64,
    pub samples: u64,
    pub seed: u64,
    pub ks: f64,
    pub exact_gap: f64,
    pub difference: f64,
}

pub fn max_dim_cross_check(rank: Rank, n: u64, samples: u64, seed: u64, spec: &QuadSpec<f64>) -> Result<CrossCheck> {
    let ens = Ensemble::solve(rank, n, spec)?;
    let xs = sample_normalized_max_dim(&ens, samples, seed)?;
    let ks = ks_distance(&xs, gumbel_cdf);
    let exact = compare_on_grid(&ens, &LimitStat::MaxDim, &linear_grid(-3.0, 8.0, 1101), spec)?;
    Ok(CrossCheck {
        r: rank.get(),
        n,
        samples,
        seed,
        ks,
        exact_gap: exact.gap,
        difference: (ks - exact.gap).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limits::exp_cdf;
    use proptest::prelude::*;
    use rand::Rng;

    fn rank(r: u32) -> Rank {
        Rank::new(r).unwrap()
    }

    #[test]
    fn window_cardinality() {
        assert_eq!(lambda_window(rank(2), 4).unwrap().count(), 117);
        assert_eq!(lambda_window(rank(1), 4).unwrap().count(), 9);
        assert_eq!(lambda_window(rank(3), 5).unwrap().count(), 11 * 16 * 21);
        assert_eq!(lambda_window_size(rank(3), 5), 11 * 16 * 21);
        assert!(lambda_window(rank(3), 6).unwrap().any(|k| k == vec![6, 6, 6]));
        assert!(lambda_window(rank(2), 3).is_err());
        let pts: Vec<_> = lambda_window(rank(2), 4).unwrap().collect();
        assert!(pts.iter().all(|k| (4..=12).contains(&k[0]) && (4..=16).contains(&k[1])));
    }

    #[test]
    fn weyl_constant_value() {
        let c = weyl_constant(rank(2), 1.0 / 32.0);
        let direct = (std::f64::consts::PI / 256.0).sin().powi(2) / 32.0;
        assert_eq!(c, direct);
        assert!((c - 4.70e-6).abs() < 0.01e-6);
    }

    #[test]
    fn dyadic_decomposition_is_exact() {
        for x in [0.5, 0.375, 1e-10, 0.1, 1.0 / 3.0] {
            let (m, s) = dyadic(x).unwrap();
            assert_eq!(m as f64 * 2f64.powi(-(s as i32)), x);
            assert_eq!(m % 2, 1);
        }
        assert!(dyadic(1.0).is_none() && dyadic(0.0).is_none());
    }

    proptest! {
        #[test]
        fn exact_fraction_matches_big_arithmetic(x in 1e-9f64..0.5, a in 1u64..(1 << 54)) {
            let t = Theta::from_f64(x).unwrap();
            let num = BigUint::from(t.num) * BigUint::from(a);
            let rem = num % BigUint::from(t.den);
            prop_assert_eq!(BigUint::from(t.frac_num(a)), rem);
        }

        #[test]
        fn window_matches_f64_away_from_edges(x in 1e-6f64..0.5, a in 1u64..100_000) {
            let t = Theta::from_f64(x).unwrap();
            let w = OpenWindow::new(t, 1.0 / 256.0).unwrap();
            let f = (x * a as f64).fract();
            if (f - 1.0 / 256.0).abs() > 1e-6 && (f - 255.0 / 256.0).abs() > 1e-6 {
                prop_assert_eq!(w.contains(a), f > 1.0 / 256.0 && f < 255.0 / 256.0);
            }
        }
    }

    proptest! {
        #[test]
        fn rational_fraction_matches_big_arithmetic(p in 1u64..1000, q in 1001u128..(1u128 << 70), a in 1u64..u64::MAX) {
            let t = Theta::rational(p, q).unwrap();
            let rem = BigUint::from(p) * BigUint::from(a) % BigUint::from(q);
            prop_assert_eq!(BigUint::from(t.frac_num(a)), rem);
        }

        #[test]
        fn fixed_point_path_matches_exact(k in 1u64..(1 << 63), a in 1u64..u64::MAX, ls in 1i32..40) {
            let tz = k.trailing_zeros();
            let t = Theta { num: k >> tz, den: 1u128 << (64 - tz) };
            let w = OpenWindow::new(t, 2f64.powi(-ls)).unwrap();
            let (num, lo) = w.fixed_point().unwrap();
            let rem = num.wrapping_mul(a);
            prop_assert_eq!(rem > lo && rem.wrapping_neg() > lo, w.contains(a));
            prop_assert!((rem as f64 * TWO_POW_M64 - w.reducer.to_unit(w.reducer.rem(a))).abs() < 1e-15);
        }

        #[test]
        fn sin2_matches_libm(f in 0.0f64..1.0) {
            let direct = (std::f64::consts::PI * f).sin().powi(2);
            prop_assert!((sin2_pi(f) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn rational_theta_fraction() {
        let t = Theta::rational(3, 7).unwrap();
        assert_eq!(t.frac_num(5), 1);
        let w = OpenWindow::new(t, 0.125).unwrap();
        assert!(!w.contains(7));
        assert!(w.contains(5));
        assert!(Theta::rational(7, 7).is_err());
    }

    #[test]
    fn sin2_sum_at_half_by_direct_loop() {
        let report = weyl_lower_bound_check(rank(2), 4, 1.0 / 32.0, &[Theta::from_f64(0.5).unwrap()]).unwrap();
        let direct: f64 = lambda_window(rank(2), 4)
            .unwrap()
            .map(|k| {
                let a = k[0] * k[1] * (k[0] + k[1]) / 2;
                (std::f64::consts::PI * 0.5 * a as f64).sin().powi(2)
            })
            .sum();
        let row = &report.per_theta[0];
        assert!((row.sin2_sum - direct).abs() < 1e-9);
        assert!(direct >= weyl_constant(rank(2), 1.0 / 32.0) * 16.0);
        // at θ = 1/2 the fractional part is 1/2 exactly for odd a(k), else 0
        let odd = lambda_window(rank(2), 4).unwrap().filter(|k| (k[0] * k[1] * (k[0] + k[1]) / 2) % 2 == 1).count();
        assert_eq!(row.count, odd as u64);
        assert!(report.pass);
    }

    #[test]
    fn weyl_small_grid_passes() {
        for (r, n) in [(2, 4), (2, 8), (3, 4)] {
            let th = weyl_default_thetas(rank(r), n, 1.0 / 32.0, 300).unwrap();
            let rep = weyl_lower_bound_check(rank(r), n, 1.0 / 32.0, &th).unwrap();
            assert!(rep.pass, "r={r} N={n}: {} violations", rep.violations);
            assert_eq!(rep.lattice_points, lambda_window_size(rank(r), n));
        }
    }

    #[test]
    fn weyl_rejects_bad_hypotheses() {
        let t = [Theta::from_f64(0.25).unwrap()];
        assert!(weyl_lower_bound_check(rank(2), 4, 0.05, &t).is_err());
        assert!(weyl_lower_bound_check(rank(2), 3, 1.0 / 32.0, &t).is_err());
        assert!(weyl_lower_bound_check(rank(1), 4, 1.0 / 32.0, &t).is_err());
        let tiny = [Theta::from_f64(1e-6).unwrap()];
        assert!(weyl_lower_bound_check(rank(2), 4, 1.0 / 32.0, &tiny).is_err());
        let big = [Theta::rational(5, 8).unwrap()];
        assert!(weyl_lower_bound_check(rank(2), 4, 1.0 / 32.0, &big).is_err());
    }

    #[test]
    fn grid_contains_endpoints_and_rationals() {
        let th = weyl_default_thetas(rank(2), 4, 1.0 / 32.0, 50).unwrap();
        assert!(th.contains(&Theta::from_f64(0.5).unwrap()));
        assert!(th.contains(&Theta::rational(1, 3).unwrap()));
        assert!(th.contains(&Theta::rational(1, 192).unwrap()));
        let lo = Theta::from_f64(1.0 / 32.0 / 64.0).unwrap();
        assert!(th.iter().all(|&t| rational_ge(t, lo)));
    }

    #[test]
    fn ladder_passes() {
        for n in [4, 8] {
            let th = weyl_default_thetas(rank(2), n, 1.0 / 32.0, 200).unwrap();
            let rep = ladder_window_check(n, 1.0 / 32.0, &th).unwrap();
            assert!(rep.pass, "{rep:?}");
            assert!(rep.cubic_box.checked == th.len() as u64);
            assert!(rep.linear_window.checked > 0 && rep.successive_terms.checked > 0);
        }
    }

    #[test]
    fn ladder_box_formula_matches_dimension() {
        for k in 4..=12u64 {
            for j in 4..=16u64 {
                assert_eq!(k * j * (k + j) / 2, dim_checked(&[k, j]).unwrap());
            }
        }
        assert_eq!((4..=12u64).count() * (4..=16u64).count(), 9 * 13);
    }

    #[test]
    fn tv_hand_example() {
        let r2 = rank(2);
        let k = WeightVector::new(r2, vec![1, 1]).unwrap();
        let table = count_representations(r2, 1).unwrap();
        for q in [0.1, 0.5, 0.9] {
            let tv = ensembles_tv_with(&table, &k, 1, q).unwrap();
            assert!((tv - (1.0 - q + q * q)).abs() < 1e-12);
        }
        let tv = ensembles_tv(r2, 1, &k).unwrap();
        assert!((0.0..=1.0).contains(&tv));
    }

    #[test]
    fn tv_trend_small() {
        let r2 = rank(2);
        let k = WeightVector::new(r2, vec![1, 1]).unwrap();
        let rep = ensembles_report(r2, &[50, 200, 800], &k, None).unwrap();
        assert!(rep.rows.iter().all(|r| (0.0..=1.0).contains(&r.tv)));
        assert!(rep.trend_pass, "{rep:?}");
    }

    #[test]
    fn trend_rule() {
        assert!(decreasing_trend(&[1.0, 0.5, 0.52, 0.3], 0.1));
        assert!(!decreasing_trend(&[1.0, 0.5, 0.7, 0.3], 0.1));
        assert!(!decreasing_trend(&[1.0, 1.0], 0.1));
        assert!(decreasing_trend(&[1.0, 0.9], 0.0));
    }

    #[test]
    fn ks_examples() {
        let cdf = |x: f64| x.clamp(0.0, 1.0);
        assert_eq!(ks_distance(&[0.5], cdf), 0.5);
        assert!(ks_distance(&[0.2; 7], cdf) >= 0.5);
        let mut rng = stream_rng(3, 0);
        let s: Vec<f64> = (0..10_000).map(|_| rng.gen::<f64>()).collect();
        assert!(ks_distance(&s, cdf) < 0.03);
        let e: Vec<f64> = s.iter().map(|u| -(1.0 - u).ln()).collect();
        assert!(ks_distance(&e, exp_cdf) < 0.03);
    }

    #[test]
    fn chi_square_examples() {
        let r = chi_square_gof(&[50, 50], &[0.5, 0.5]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        let r = chi_square_gof(&[90, 10], &[0.5, 0.5]).unwrap();
        assert!((r.statistic - 64.0).abs() < 1e-12 && r.p_value < 1e-10);
        let r = chi_square_two_sample(&[10, 20, 30], &[20, 40, 60]).unwrap();
        assert!(r.statistic.abs() < 1e-12 && r.dof == 2.0);
        assert!(chi_square_gof(&[1], &[1.0]).is_err());
    }

    #[test]
    fn samplers_uniform_small() {
        let rep = uniformity_check(rank(2), 6, 4000, 11).unwrap();
        assert_eq!(rep.classes, 8);
        assert!(rep.dp_vs_uniform.p_value > 1e-4, "{rep:?}");
        assert!(rep.rejection_vs_dp.p_value > 1e-4, "{rep:?}");
    }

    #[test]
    fn mgf_gap_zero_at_origin_and_mult_law() {
        let spec = QuadSpec::new(1e-10, 1e-8);
        let ens = Ensemble::solve(rank(2), 10_000, &spec).unwrap();
        let g = compare_on_grid(&ens, &LimitStat::Mgf, &[0.0], &spec).unwrap();
        assert_eq!(g.gap, 0.0);
        let k = WeightVector::new(rank(2), vec![1, 1]).unwrap();
        let g = compare_on_grid(&ens, &LimitStat::Multiplicity(k), &linear_grid(0.0, 8.0, 81), &spec).unwrap();
        // the geometric step law lies above 1 - e^{-x} by at most λ a(k)
        assert!(g.points.iter().all(|p| p.exact >= p.limit - 1e-15));
        assert!(g.gap <= ens.params.lambda * 1.0001);
    }

    #[test]
    fn max_dim_gap_decreases() {
        let spec = QuadSpec::new(1e-10, 1e-8);
        let gaps: Vec<f64> = [1_000, 10_000, 100_000]
            .iter()
            .map(|&n| compare_exact_to_limit(rank(2), n, &LimitStat::MaxDim, &spec).unwrap().gap)
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    }

    #[test]
    fn asymptotic_count_ratio_near_one() {
        let table = count_representations(rank(2), 3000).unwrap();
        let spec = QuadSpec::new(1e-12, 1e-10);
        let ratio = count_asymptotic_ratio(&table, 3000, &spec).unwrap();
        let small = count_asymptotic_ratio(&table, 300, &spec).unwrap();
        assert!((ratio - 1.0).abs() < (small - 1.0).abs() || (ratio - 1.0).abs() < 0.05, "{small} {ratio}");
    }
}
