//! Limit objects: the equation-of-state constants, the centering and scaling
//! sequences for the largest dimension and height, the limit shape `f_r`,
//! the reference distribution functions and the moment generating function
//! `M(u)` of the scaled number of constituents.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::boltzmann::{solve_saddle, BoltzmannParams};
use crate::census::{c_r_constant, IrrepCensus};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_nested, Domain, QuadSpec};
use crate::real::{from_u64, gamma, lit, CompensatedSum, Estimate, Real};
use crate::weights::{dim_real, Rank};

/// Constants attached to one `(r, n)`.
#[derive(Clone, Debug, Serialize)]
pub struct LimitConstants<T> {
    pub rank: Rank,
    pub n: u64,
    /// Volume `C_r` of `{a_r ≤ 1}`.
    pub c_r: Estimate<T>,
    /// `𝒞_r`, with `s_n ~ 𝒞_r n^{-2/(r(r+3))}`.
    pub script_c: Estimate<T>,
    /// `𝒞_{r,var}`, with `σ_n² ~ 𝒞_{r,var} s_n^{-r(r+2)}`.
    pub script_c_var: Estimate<T>,
    /// `𝒟_{r,var} = 𝒞_{r,var} / 𝒞_r^{r(r+2)}`.
    pub script_d_var: T,
    /// Solved saddle point the normalizers are evaluated at.
    pub s_n: T,
    pub s_n_asymptotic: T,
    pub alpha_n: T,
    pub a_d: T,
    pub b_d: T,
    pub a_h: T,
    pub b_h: T,
    pub warnings: Vec<String>,
}

fn factorial<T: Real>(k: u32) -> T {
    (1..=k).fold(T::one(), |acc, j| acc * from_u64(u64::from(j)))
}

/// `∫_0^∞ g(v) dv` split at 1 so the algebraic behaviour at 0 and the
/// exponential decay are handled by the matching transforms.
fn half_line<T: Real, F: Fn(T) -> T>(g: F, spec: &QuadSpec<T>) -> Result<Estimate<T>> {
    let head = integrate(&g, Domain::Singular(T::zero(), T::one()), spec)?;
    let tail = integrate(&g, Domain::ToInfinity(T::one()), spec)?;
    Ok(Estimate::new(head.value + tail.value, head.error + tail.error))
}

/// `∫_{[0,∞)^r} G(a(t)) dt` for the two equation-of-state integrands.
///
/// The level sets of `a` have volume `vol{a ≤ v} = C_r v^β`, `β = 2/(r+1)`,
/// so the `r`-fold integral collapses to `C_r β ∫_0^∞ G(v) v^{β-1} dv`.
fn radial<T: Real>(rank: Rank, order: i32, spec: &QuadSpec<T>) -> Result<(Estimate<T>, Estimate<T>)> {
    let c = c_r_constant(rank, spec)?;
    let beta: T = rank.census_exponent();
    let one = T::one();
    let g = |v: T| {
        if v <= T::zero() {
            return T::zero();
        }
        let em1 = v.exp_m1();
        let p = v.powf(beta - one);
        match order {
            // v e^{-v}/(1-e^{-v}) = v/(e^v - 1)
            1 => p * v / em1,
            // v² e^{-v}/(1-e^{-v})² = v² e^v/(e^v - 1)²
            _ => {
                if v > lit(600.0) {
                    p * v * v * (-v).exp()
                } else {
                    p * v * v * (v.exp() / em1) / em1
                }
            }
        }
    };
    let i = half_line(g, spec)?;
    let value = c.value * beta * i.value;
    let rel = c.error / c.value + i.error / i.value.abs();
    Ok((Estimate::new(value, value * rel), c))
}

/// `𝒞_r = (∫ a(t) e^{-a}/(1-e^{-a}) dt)^{2/(r(r+3))}` and
/// `𝒞_{r,var} = ∫ a(t)² e^{-a}/(1-e^{-a})² dt`, with `C_r`.
pub fn script_constants<T: Real>(
    rank: Rank,
    spec: &QuadSpec<T>,
) -> Result<(Estimate<T>, Estimate<T>, Estimate<T>)> {
    let (mean, c) = radial(rank, 1, spec)?;
    let (var, _) = radial(rank, 2, spec)?;
    let r: T = from_u64(u64::from(rank.get()));
    let e = lit::<T>(2.0) / (r * (r + lit(3.0)));
    let script_c = mean.value.powf(e);
    let sc = Estimate::new(script_c, script_c * e * mean.error / mean.value);
    Ok((c, sc, var))
}

/// The mean-level integral `∫_{[0,∞)^r} a e^{-a}/(1-e^{-a}) dt` evaluated
/// directly as an `r`-fold nested quadrature (no level-set reduction).
pub fn equation_of_state_integral_direct<T: Real>(rank: Rank, spec: &QuadSpec<T>) -> Result<Estimate<T>> {
    let r = rank.as_usize();
    integrate_nested(
        r,
        &|_, _: &[T]| Domain::SingularToInfinity(T::zero()),
        &|y: &[T]| {
            let a = dim_real(y);
            if a <= T::zero() {
                T::one()
            } else if a > lit(700.0) {
                T::zero()
            } else {
                a / a.exp_m1()
            }
        },
        spec,
    )
}

/// All constants for `(r, n)` at an already solved saddle point.
pub fn compute_constants<T: Real>(params: &BoltzmannParams<T>, spec: &QuadSpec<T>) -> Result<LimitConstants<T>> {
    let rank = params.rank;
    let (c_r, script_c, script_c_var) = script_constants(rank, spec)?;
    let r: T = from_u64(u64::from(rank.get()));
    let one = T::one();
    let two: T = lit(2.0);
    let s = params.s;
    let nu = r * (r + one) / two;
    let script_d_var = script_c_var.value / script_c.value.powf(r * (r + two));
    let s_n_asymptotic =
        script_c.value * from_u64::<T>(params.n).powf(-two / (r * (r + lit(3.0))));

    let mut warnings = Vec::new();
    let omega = -r * s.ln();
    let b_d = s.powf(-nu);
    let a_d = b_d * (omega - (r - one) / (r + one) * omega.ln() + (two * c_r.value / (r + one)).ln());
    if omega <= one {
        warnings.push(format!("log(s^-r) = {omega} ≤ 1: D centering is not meaningful"));
    }

    let rr = rank.get();
    let alpha_n = factorial::<T>(rr) * (two * gamma(r) * s.powf(-(r + one) / two)).ln();
    if alpha_n <= T::zero() {
        warnings.push(format!("alpha_n = {alpha_n} ≤ 0 at this n"));
    }
    let b_h = factorial::<T>(rr) / two * s.powf(-(r + one) / two) * alpha_n.powf(-(r - one) / r);
    let a_h = b_h * (alpha_n / factorial::<T>(rr - 1) - (r - one) / r * alpha_n.ln());

    Ok(LimitConstants {
        rank,
        n: params.n,
        c_r,
        script_c,
        script_c_var,
        script_d_var,
        s_n: s,
        s_n_asymptotic,
        alpha_n,
        a_d,
        b_d,
        a_h,
        b_h,
        warnings,
    })
}

/// Solves the saddle point for `(r, n)` and computes the constants there.
pub fn compute_constants_for<T: Real>(rank: Rank, n: u64, spec: &QuadSpec<T>) -> Result<LimitConstants<T>> {
    let tol = lit::<T>(1e-10).max(T::epsilon() * lit(100.0));
    let (params, _) = solve_saddle(rank, n, tol)?;
    compute_constants(&params, spec)
}

/// Limit shape `f_r(t) = ∫_{∏[t_j,∞)} e^{-a(y)}/(1-e^{-a(y)}) dy`.
/// For `r = 1` the closed form `-log(1 - e^{-t})` is used.
pub fn limit_shape_f<T: Real>(t: &[T], spec: &QuadSpec<T>) -> Result<Estimate<T>> {
    if t.is_empty() || t.iter().any(|&x| !(x > T::zero())) {
        return Err(Error::OutOfRange {
            what: "shape argument",
            value: format!("{t:?}"),
            limit: "all components > 0".into(),
        });
    }
    if t.len() == 1 {
        return Ok(Estimate::exact(-(-(-t[0]).exp()).ln_1p()));
    }
    integrate_nested(
        t.len(),
        &|i, _: &[T]| Domain::ToInfinity(t[i]),
        &|y: &[T]| {
            let a = dim_real(y);
            if a > lit(700.0) {
                T::zero()
            } else {
                T::one() / a.exp_m1()
            }
        },
        spec,
    )
}

/// Monte Carlo estimate of `f_r(t)`: each `y_j - t_j` is drawn from a unit
/// exponential and the integrand is reweighted by the inverse density.
pub fn limit_shape_monte_carlo(t: &[f64], samples: u64, seed: u64) -> Estimate<f64> {
    const CHUNK: u64 = 1 << 16;
    let chunks = samples.div_ceil(CHUNK);
    let (s, s2) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = CHUNK.min(samples - c * CHUNK);
            let mut y = vec![0.0; t.len()];
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let mut w = 1.0;
                for (yj, &tj) in y.iter_mut().zip(t) {
                    let e = -(1.0 - rng.gen::<f64>()).ln();
                    w *= e.exp();
                    *yj = tj + e;
                }
                let a: f64 = dim_real(&y);
                let v = if a > 700.0 { 0.0 } else { w / a.exp_m1() };
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = samples as f64;
    let mean = s / n;
    Estimate::new(mean, ((s2 / n - mean * mean).max(0.0) / n).sqrt())
}

/// Standard Gumbel distribution function `e^{-e^{-x}}`.
pub fn gumbel_cdf<T: Real>(x: T) -> T {
    (-(-x).exp()).exp()
}

/// Unit exponential distribution function `1 - e^{-x}` (0 for `x < 0`).
pub fn exp_cdf<T: Real>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else {
        -(-x).exp_m1()
    }
}

/// Model `R_r(x) ≈ C_r x^β - E x^γ` for `x` beyond the census bound, with
/// `γ = 2(r-1)/r²` and `E` fitted by least squares on `[X/10, X]`.
#[derive(Clone, Copy, Debug)]
struct TailModel {
    x: f64,
    c: f64,
    e: f64,
    beta: f64,
    gamma: f64,
}

impl TailModel {
    fn fit(census: &IrrepCensus, c: f64) -> Self {
        let r = f64::from(census.rank().get());
        let beta = 2.0 / (r + 1.0);
        let gamma = 2.0 * (r - 1.0) / (r * r);
        let x = census.bound() as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..=64 {
            let xi = x * 10f64.powf(-f64::from(i) / 64.0);
            let d = c * xi.powf(beta) - census.count_le(xi as u64) as f64;
            let g = xi.powf(gamma);
            num += d * g;
            den += g * g;
        }
        Self {
            x,
            c,
            e: num / den,
            beta,
            gamma,
        }
    }

    /// `Σ_{m>X} ϱ(m) m^{-j}` under the model, split into the leading part
    /// and the fitted correction.
    fn power_sum(&self, j: f64) -> (f64, f64) {
        let lead = self.c * self.beta * self.x.powf(self.beta - j) / (j - self.beta);
        let corr = -self.e * self.gamma * self.x.powf(self.gamma - j) / (j - self.gamma);
        (lead, corr)
    }
}

/// `M(u) = ∏_k (1 - u/a(k))^{-1}` for real `|u| < 1`.
///
/// The product runs over the census; the factors past its bound contribute
/// `exp(Σ_{m>X} ϱ(m)(u/m + u²/2m² + u³/3m³ + …))`, summed with the fitted
/// tail model through the cubic term. The error covers twice the quartic
/// term plus a quarter of the fitted correction.
pub fn mgf_m<T: Real>(census: &IrrepCensus, u: T) -> Result<Estimate<T>> {
    let rank = census.rank();
    if rank.get() == 1 {
        return Err(Error::Domain(
            "the product defining M diverges for rank 1 (Σ 1/k = ∞)".into(),
        ));
    }
    if !(u.abs() < T::one()) {
        return Err(Error::Domain(format!("M(u) requested at u = {u} outside (-1, 1)")));
    }
    let uf = u.to_f64().unwrap_or(f64::NAN);
    for e in census.entries() {
        let distance = (1.0 - uf / e.m as f64).abs();
        if distance < 1e-9 {
            return Err(Error::PoleProximity {
                u: uf,
                pole: e.m,
                distance,
            });
        }
        if e.m > 2 {
            break;
        }
    }
    let head: T = census
        .entries()
        .iter()
        .map(|e| -(-u / from_u64(e.m)).ln_1p() * from_u64(e.rho))
        .collect::<CompensatedSum<T>>()
        .value();
    let model = TailModel::fit(census, c_r_constant::<f64>(rank, &QuadSpec::new(1e-10, 1e-8))?.value);
    let mut tail = 0.0;
    let mut corr_total = 0.0;
    for j in 1..=3 {
        let (lead, corr) = model.power_sum(f64::from(j));
        let w = uf.powi(j) / f64::from(j);
        tail += w * (lead + corr);
        corr_total += (w * corr).abs();
    }
    let (l4, c4) = model.power_sum(4.0);
    let err = 2.0 * uf.powi(4) / 4.0 * (l4 + c4.abs()) + 0.25 * corr_total;
    let v = (head + lit(tail)).exp();
    Ok(Estimate::new(v, v * lit::<T>(err.exp_m1())))
}

/// `|M(it)| = exp(-½ Σ_m ϱ(m) log(1 + t²/m²))` for real `t`.
pub fn mgf_m_imaginary_abs<T: Real>(census: &IrrepCensus, t: T) -> Result<Estimate<T>> {
    let rank = census.rank();
    if rank.get() == 1 {
        return Err(Error::Domain("the product defining M diverges for rank 1".into()));
    }
    let t2 = t * t;
    let head: T = census
        .entries()
        .iter()
        .map(|e| {
            let m: T = from_u64(e.m);
            (t2 / (m * m)).ln_1p() * from_u64(e.rho)
        })
        .collect::<CompensatedSum<T>>()
        .value();
    let x = census.bound() as f64;
    let tf = t.to_f64().unwrap_or(f64::NAN);
    if tf.abs() > x / 4.0 {
        return Err(Error::CutoffTooSmall(format!(
            "census bound {x} too small for |t| = {tf}"
        )));
    }
    let model = TailModel::fit(census, c_r_constant::<f64>(rank, &QuadSpec::new(1e-10, 1e-8))?.value);
    let (l2, c2) = model.power_sum(2.0);
    let (l4, c4) = model.power_sum(4.0);
    let tail = tf * tf * (l2 + c2) - tf.powi(4) / 2.0 * (l4 + c4);
    let err = 0.5 * (2.0 * tf.powi(6) / 3.0 * model.power_sum(6.0).0 + 0.25 * (tf * tf * c2).abs());
    let v = (-(head + lit(tail)) * lit(0.5)).exp();
    Ok(Estimate::new(v, v * lit::<T>(err.exp_m1())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::census::enumerate_irreps;
    use std::f64::consts::PI;

    fn rank(r: u32) -> Rank {
        Rank::new(r).unwrap()
    }

    fn spec() -> QuadSpec<f64> {
        QuadSpec::new(1e-12, 1e-10)
    }

    /// `β C_r Γ(1+β) ζ(1+β)` and `β C_r Γ(2+β) ζ(1+β)` with ζ summed directly.
    fn gamma_zeta_oracle(r: u32, c_r: f64) -> (f64, f64) {
        let beta = 2.0 / (f64::from(r) + 1.0);
        let s = 1.0 + beta;
        let m = 2_000_000u32;
        let zeta: f64 = (1..=m).map(|k| f64::from(k).powf(-s)).sum::<f64>()
            + (f64::from(m) + 0.5).powf(1.0 - s) / (s - 1.0);
        let g1 = statrs::function::gamma::gamma(1.0 + beta);
        let g2 = statrs::function::gamma::gamma(2.0 + beta);
        (beta * c_r * g1 * zeta, beta * c_r * g2 * zeta)
    }

    #[test]
    fn rank_one_constants() {
        let (_, c, v) = script_constants::<f64>(rank(1), &spec()).unwrap();
        assert!((c.value - PI / 6f64.sqrt()).abs() < 1e-9);
        // ∫ t² e^t/(e^t-1)² dt = Σ_m m ∫ t² e^{-mt} dt = 2 Σ 1/m² = π²/3
        let oracle: f64 = (1..=2000).map(|m| 2.0 / f64::from(m).powi(2)).sum::<f64>() + 2.0 / 2000.5;
        assert!((v.value - oracle).abs() < 1e-6, "{} vs {oracle}", v.value);
    }

    #[test]
    fn constants_match_gamma_zeta_closed_form() {
        for r in 2..=3 {
            let (c_r, c, v) = script_constants::<f64>(rank(r), &spec()).unwrap();
            let (m, var) = gamma_zeta_oracle(r, c_r.value);
            let e = 2.0 / f64::from(r * (r + 3));
            assert!((c.value - m.powf(e)).abs() < 1e-7 * c.value, "r={r}");
            assert!((v.value - var).abs() < 1e-7 * var, "r={r}");
        }
    }

    #[test]
    fn direct_integral_agrees_with_level_set_reduction() {
        let s = QuadSpec::new(1e-7, 1e-6);
        let direct = equation_of_state_integral_direct::<f64>(rank(2), &s).unwrap();
        let (_, c, _) = script_constants::<f64>(rank(2), &spec()).unwrap();
        let reduced = c.value.powf(5.0);
        assert!((direct.value - reduced).abs() < 1e-5 * reduced, "{} vs {reduced}", direct.value);
    }

    #[test]
    fn normalizers_and_identity() {
        let k = compute_constants_for::<f64>(rank(2), 1_000_000, &spec()).unwrap();
        let check = k.script_c_var.value / k.script_c.value.powi(8);
        assert!((k.script_d_var - check).abs() < 1e-10 * check);
        assert!(k.alpha_n > 0.0 && k.b_d > 0.0 && k.b_h > 0.0 && k.a_d > 0.0 && k.a_h > 0.0);
        assert!(k.warnings.is_empty());
        assert!((k.b_d - k.s_n.powi(-3)).abs() < 1e-9 * k.b_d);
    }

    #[test]
    fn asymptotic_saddle_error_shrinks() {
        for r in 2..=3 {
            let gaps: Vec<f64> = [1_000_000u64, 100_000_000]
                .iter()
                .map(|&n| {
                    let k = compute_constants_for::<f64>(rank(r), n, &spec()).unwrap();
                    (k.s_n / k.s_n_asymptotic - 1.0).abs()
                })
                .collect();
            assert!(gaps[1] < gaps[0], "r={r} {gaps:?}");
            assert!(gaps[0] < 0.15 && gaps[1] < 0.10, "r={r} {gaps:?}");
        }
    }

    #[test]
    fn shape_rank_one_closed_form() {
        let f = limit_shape_f(&[2f64.ln()], &spec()).unwrap();
        assert!((f.value - 2f64.ln()).abs() < 1e-15);
        assert!(limit_shape_f(&[0.0f64], &spec()).is_err());
    }

    #[test]
    fn shape_monotone_and_decaying() {
        let s = QuadSpec::<f64>::new(1e-10, 1e-8);
        let a = limit_shape_f(&[0.5f64, 1.0], &s).unwrap().value;
        let b = limit_shape_f(&[1.0, 1.0], &s).unwrap().value;
        let c = limit_shape_f(&[1.0, 2.0], &s).unwrap().value;
        let far = limit_shape_f(&[8.0, 8.0], &s).unwrap().value;
        assert!(a > b && b > c && c > far && far < 1e-100);
        let sym = limit_shape_f(&[2.0, 1.0], &s).unwrap().value;
        assert!((sym - c).abs() < 1e-8 * c);
    }

    #[test]
    fn shape_matches_monte_carlo() {
        let q = limit_shape_f(&[1.0, 1.0], &QuadSpec::new(1e-10, 1e-8)).unwrap();
        let mc = limit_shape_monte_carlo(&[1.0, 1.0], 10_000_000, 4);
        assert!((q.value - mc.value).abs() < 4.0 * mc.error + q.error, "{q:?} {mc:?}");
    }

    #[test]
    fn reference_cdfs() {
        assert!((gumbel_cdf(0.0f64) - (-1.0f64).exp()).abs() < 1e-15);
        assert!(gumbel_cdf(1.0f64) > gumbel_cdf(0.0));
        assert_eq!(exp_cdf(0.0f64), 0.0);
        assert_eq!(exp_cdf(-1.0f64), 0.0);
        assert!((exp_cdf(1.0f64) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn mgf_properties() {
        let c = enumerate_irreps(rank(2), 1_000_000, false).unwrap();
        assert!((mgf_m(&c, 0.0f64).unwrap().value - 1.0).abs() < 1e-15);
        let big = enumerate_irreps(rank(2), 20_000_000, false).unwrap();
        for u in [-0.5f64, 0.5] {
            let a = mgf_m(&c, u).unwrap();
            let b = mgf_m(&big, u).unwrap();
            assert!((a.value - b.value).abs() <= a.error + b.error + 1e-9, "u={u} {a:?} {b:?}");
            assert!(a.error < 1e-3 * a.value);
        }
        let r1 = enumerate_irreps(rank(1), 100, false).unwrap();
        assert!(matches!(mgf_m(&r1, 0.5f64), Err(Error::Domain(_))));
        assert!(matches!(mgf_m(&c, 1.0f64), Err(Error::Domain(_))));
    }

    #[test]
    fn mgf_imaginary_axis_decay() {
        let c = enumerate_irreps(rank(2), 1_000_000, false).unwrap();
        let beta = 2.0 / 3.0;
        let d = (0..=40)
            .map(|i| 10f64.powf(f64::from(i) / 20.0))
            .map(|t| {
                let m = mgf_m_imaginary_abs(&c, t).unwrap();
                -(m.value + m.error).ln() / t.powf(beta)
            })
            .fold(f64::INFINITY, f64::min);
        assert!(d > 0.0, "{d}");
        assert!((mgf_m_imaginary_abs(&c, 0.0f64).unwrap().value - 1.0).abs() < 1e-15);
    }
}
