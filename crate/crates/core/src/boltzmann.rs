//! The grand ensemble `Q_q`: every multiplicity `X_k` an independent
//! geometric variable with ratio `q^{a(k)}`.
//!
//! All sums are taken over a census up to its bound `X`; the remainder past
//! `X` is bounded through [`IrrepCensus::tail_bound`]. Internally the
//! temperature is carried as `λ = -log q = s^{r(r+1)/2}` to keep precision
//! when `q` is close to 1.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::census::{c_r_approx, enumerate_irreps_with, CensusConfig, IrrepCensus};
use crate::error::{Error, Result};
use crate::exact_count::Representation;
use crate::real::{from_u64, gamma, lit, zeta, CompensatedSum, Estimate, Real};
use crate::weights::{Rank, WeightVector};

/// Solved (or directly specified) grand-ensemble parameters.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoltzmannParams<T> {
    pub rank: Rank,
    /// Target dimension `n`.
    pub n: u64,
    pub q: T,
    pub s: T,
    /// `-log q = s^{r(r+1)/2}`.
    pub lambda: T,
    /// `E_q(dim)` over the census.
    pub expected_dim: T,
    /// `Var_q(dim)`.
    pub sigma2: T,
    /// Third cumulant of `dim`.
    pub third: T,
    /// Census bound the sums were truncated at.
    pub cutoff: u64,
    /// Certified bound on the omitted tail of `E_q(dim)`.
    pub tail_bound: T,
    /// Certified bound on the omitted tail of `Var_q(dim)`.
    pub sigma2_tail: T,
}

impl<T: Real> BoltzmannParams<T> {
    /// Parameters at a given `q`, with all moments evaluated on `census`.
    /// The target `n` is set to the rounded expected dimension.
    pub fn from_q(census: &IrrepCensus, q: T) -> Result<Self> {
        if !(q > T::zero() && q < T::one()) {
            return Err(Error::OutOfRange {
                what: "q",
                value: q.to_string(),
                limit: "(0, 1)".into(),
            });
        }
        Self::from_lambda(census, -q.ln(), None)
    }

    fn from_lambda(census: &IrrepCensus, lambda: T, n: Option<u64>) -> Result<Self> {
        let x = census.bound();
        let e = geometric_moment(census, lambda, x, 1)?;
        let v = geometric_moment(census, lambda, x, 2)?;
        let t = geometric_moment(census, lambda, x, 3)?;
        let nu: T = from_u64(u64::from(census.rank().degree()));
        let n = n.unwrap_or_else(|| e.value.round().to_u64().unwrap_or(u64::MAX));
        Ok(Self {
            rank: census.rank(),
            n,
            q: (-lambda).exp(),
            s: lambda.powf(T::one() / nu),
            lambda,
            expected_dim: e.value,
            sigma2: v.value,
            third: t.value,
            cutoff: x,
            tail_bound: e.error,
            sigma2_tail: v.error,
        })
    }

    /// `q^m = e^{-λ m}`.
    pub fn q_pow(&self, m: T) -> T {
        (-self.lambda * m).exp()
    }
}

/// `log(1 - e^{-t})` for `t > 0` without cancellation.
pub(crate) fn ln_one_minus_exp<T: Real>(t: T) -> T {
    if t > T::LN_2() {
        (-(-t).exp()).ln_1p()
    } else {
        (-(-t).exp_m1()).ln()
    }
}

/// `e^{-t} / (1 - e^{-t})` for `t > 0`.
fn bose<T: Real>(t: T) -> T {
    T::one() / t.exp_m1()
}

/// Cumulant sums of `dim` under `Q_q`, truncated at `cutoff`:
///
/// * order 1: `Σ ϱ(m) m x/(1-x)`,
/// * order 2: `Σ ϱ(m) m² x/(1-x)²`,
/// * order 3: `Σ ϱ(m) m³ x(1+x)/(1-x)³`,
///
/// with `x = q^m`, and a certified bound on the omitted part as the error.
pub fn geometric_moment<T: Real>(
    census: &IrrepCensus,
    lambda: T,
    cutoff: u64,
    order: i32,
) -> Result<Estimate<T>> {
    if cutoff > census.bound() {
        return Err(Error::Mismatch(format!(
            "cutoff {cutoff} beyond census bound {}",
            census.bound()
        )));
    }
    let mut acc = CompensatedSum::new();
    for e in census.entries() {
        if e.m > cutoff {
            break;
        }
        let m: T = from_u64(e.m);
        let t = lambda * m;
        let b = bose(t);
        let term = match order {
            1 => m * b,
            2 => {
                // x/(1-x)² = b(1+b)
                m * m * b * (T::one() + b)
            }
            _ => {
                // x(1+x)/(1-x)³ = b(1+b)(1+2b)
                let two: T = lit(2.0);
                m * m * m * b * (T::one() + b) * (T::one() + two * b)
            }
        };
        acc.add(term * from_u64(e.rho));
    }
    let y: T = from_u64(cutoff);
    let xq = (-lambda * y).exp();
    let p = from_u64::<T>(order as u64);
    let factor = match order {
        1 => T::one(),
        2 => T::one() / (T::one() - xq),
        _ => lit::<T>(2.0) / (T::one() - xq).powi(2),
    } / (T::one() - xq);
    let tail = census.tail_bound(cutoff, p, lambda)? * factor;
    Ok(Estimate::new(acc.value(), tail))
}

/// `E_q(dim) = Σ_m m ϱ(m) q^m/(1-q^m)` over `m ≤ cutoff`, with the tail
/// bound as the error. Fails when that bound exceeds `accuracy`.
pub fn expected_dim<T: Real>(census: &IrrepCensus, q: T, cutoff: u64, accuracy: T) -> Result<Estimate<T>> {
    if !(q > T::zero() && q < T::one()) {
        return Err(Error::OutOfRange {
            what: "q",
            value: q.to_string(),
            limit: "(0, 1)".into(),
        });
    }
    let e = geometric_moment(census, -q.ln(), cutoff, 1)?;
    if e.error > accuracy {
        return Err(Error::CutoffTooSmall(format!(
            "tail bound {} above requested accuracy {accuracy}",
            e.error
        )));
    }
    Ok(e)
}

/// Leading-order temperature: `s^{r(r+3)/2} ≈ β C_r Γ(1+β) ζ(1+β) / n`,
/// `β = 2/(r+1)`.
pub fn saddle_guess<T: Real>(rank: Rank, n: u64) -> T {
    let beta: T = rank.census_exponent();
    let c: T = lit(c_r_approx(rank).value);
    let k = beta * c * gamma(T::one() + beta) * zeta(T::one() + beta);
    let r: T = from_u64(u64::from(rank.get()));
    let e = r * (r + lit(3.0)) / lit(2.0);
    (k / from_u64(n)).powf(T::one() / e)
}

/// Knobs of the saddle-point solver.
#[derive(Clone, Copy, Debug)]
pub struct SaddleConfig<T> {
    /// Relative tolerance on `|E_q(dim) - n| / n`.
    pub tol: T,
    pub max_iter: usize,
    /// Target value of `λ X` when sizing the census.
    pub decay: f64,
    pub census: CensusConfig,
}

impl<T: Real> Default for SaddleConfig<T> {
    fn default() -> Self {
        let tol = lit::<T>(1e-10).max(T::epsilon() * lit(100.0));
        Self {
            tol,
            max_iter: 300,
            decay: 40.0,
            census: CensusConfig::default(),
        }
    }
}

enum Side {
    Above,
    Below,
    Within,
    Unresolved,
}

/// Solves `E_q(dim) = n` with the default configuration, building a census
/// large enough for certified tails.
pub fn solve_saddle<T: Real>(rank: Rank, n: u64, tol: T) -> Result<(BoltzmannParams<T>, Arc<IrrepCensus>)> {
    let config = SaddleConfig {
        tol,
        ..SaddleConfig::default()
    };
    let guess = saddle_guess::<T>(rank, n.max(1));
    solve_saddle_with(rank, n, (guess / lit(4.0), guess * lit(4.0)), &config)
}

/// Bisection in `log s` from the bracket `(s_lo, s_hi)`; the bracket is
/// widened if it does not straddle the root, and the census is enlarged
/// whenever its tail is too coarse to decide a comparison.
pub fn solve_saddle_with<T: Real>(
    rank: Rank,
    n: u64,
    bracket: (T, T),
    config: &SaddleConfig<T>,
) -> Result<(BoltzmannParams<T>, Arc<IrrepCensus>)> {
    if n == 0 {
        return Err(Error::OutOfRange {
            what: "n",
            value: "0".into(),
            limit: ">= 1".into(),
        });
    }
    let nu = rank.degree() as i32;
    let nf: T = from_u64(n);
    let guess = (bracket.0 * bracket.1).sqrt();
    let lambda_guess = guess.powi(nu).to_f64().unwrap_or(f64::NAN);
    let mut bound = ((2.5 * config.decay / lambda_guess).ceil() as u64).clamp(16, (1 << 62) - 1);
    let mut census = Arc::new(enumerate_irreps_with(rank, bound, true, &config.census)?);

    let mut classify = |s: T, census: &mut Arc<IrrepCensus>| -> Result<Side> {
        let lambda = s.powi(nu);
        loop {
            let x = census.bound();
            let lower = geometric_moment(census, lambda, x, 1).map(|e| (e.value, Some(e.error)));
            let (value, tail) = match lower {
                Ok(v) => v,
                Err(Error::CutoffTooSmall(_)) => {
                    let e = partial_mean(census, lambda);
                    (e, None)
                }
                Err(e) => return Err(e),
            };
            if let Some(tail) = tail {
                if tail <= config.tol * nf * lit(0.1) && (value - nf).abs() <= config.tol * nf {
                    return Ok(Side::Within);
                }
            }
            if value > nf {
                return Ok(Side::Above);
            }
            if let Some(tail) = tail {
                if value + tail < nf {
                    return Ok(Side::Below);
                }
                if tail <= config.tol * nf * lit(0.1) {
                    return Ok(Side::Below);
                }
            }
            if bound >= 1 << 61 {
                return Ok(Side::Unresolved);
            }
            bound = bound.saturating_mul(2);
            *census = Arc::new(enumerate_irreps_with(rank, bound, true, &config.census)?);
        }
    };

    let (mut lo, mut hi) = (bracket.0.ln(), bracket.1.ln());
    let four: T = lit(4.0f64.ln());
    for _ in 0..40 {
        match classify(lo.exp(), &mut census)? {
            Side::Above => break,
            Side::Within => return finish(rank, n, lo.exp(), &census),
            _ => lo = lo - four,
        }
    }
    for _ in 0..40 {
        match classify(hi.exp(), &mut census)? {
            Side::Below => break,
            Side::Within => return finish(rank, n, hi.exp(), &census),
            _ => hi = hi + four,
        }
    }
    for _ in 0..config.max_iter {
        let mid = (lo + hi) * lit(0.5);

        match classify(mid.exp(), &mut census)? {
            Side::Within => return finish(rank, n, mid.exp(), &census),
            Side::Above => lo = mid,
            Side::Below => hi = mid,
            Side::Unresolved => break,
        }
        if hi - lo <= T::epsilon() * mid.abs().max(T::one()) {
            break;
        }
    }
    Err(Error::Convergence {
        what: "saddle point",
        detail: format!("no s with |E_q(dim) - {n}| <= {} n", config.tol),
    })
}

fn partial_mean<T: Real>(census: &IrrepCensus, lambda: T) -> T {
    census
        .entries()
        .iter()
        .map(|e| {
            let m: T = from_u64(e.m);
            m * bose(lambda * m) * from_u64(e.rho)
        })
        .collect::<CompensatedSum<T>>()
        .value()
}

fn finish<T: Real>(
    rank: Rank,
    n: u64,
    s: T,
    census: &Arc<IrrepCensus>,
) -> Result<(BoltzmannParams<T>, Arc<IrrepCensus>)> {
    let lambda = s.powi(rank.degree() as i32);
    let mut p = BoltzmannParams::from_lambda(census, lambda, Some(n))?;
    p.s = s;
    Ok((p, Arc::clone(census)))
}

/// Truncation metadata of a [`BoltzmannSampler`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SamplerMeta {
    /// Largest dimension `M*` drawn explicitly.
    pub cutoff: u64,
    /// Bound on `Σ_{m > M*} ϱ(m) q^m/(1-q^m)`, hence on the probability that
    /// a neglected multiplicity is nonzero.
    pub residual: f64,
}

/// Sampler of `Q_q` with the lattice truncated at `M*`.
#[derive(Clone, Debug)]
pub struct BoltzmannSampler {
    rank: Rank,
    lambda: f64,
    /// `(a(k), k)` for `a(k) ≤ M*`, largest dimension first.
    parts: Vec<(u64, WeightVector)>,
    meta: SamplerMeta,
}

/// Default bound on the neglected probability mass.
pub const DEFAULT_DELTA: f64 = 1e-12;

impl BoltzmannSampler {
    pub fn new<T: Real>(params: &BoltzmannParams<T>, census: &IrrepCensus, delta: f64) -> Result<Self> {
        if params.rank != census.rank() {
            return Err(Error::Mismatch("rank of parameters and census differ".into()));
        }
        census.require_weights()?;
        let lambda = params.lambda.to_f64().unwrap_or(f64::NAN);
        let x = census.bound();
        let xq = (-lambda * x as f64).exp();
        let mut residual = census.tail_bound(x, 0.0, lambda)? / (1.0 - xq);
        if residual >= delta {
            return Err(Error::CutoffTooSmall(format!(
                "census bound {x} leaves residual {residual:e} above {delta:e}"
            )));
        }
        let entries = census.entries();
        let mut keep = entries.len();
        while keep > 0 {
            let e = &entries[keep - 1];
            let term = e.rho as f64 * bose(lambda * e.m as f64);
            if residual + term >= delta {
                break;
            }
            residual += term;
            keep -= 1;
        }
        let cutoff = if keep == 0 { 0 } else { entries[keep - 1].m };
        let mut parts: Vec<(u64, WeightVector)> = census
            .weights()
            .take_while(|(m, _)| *m <= cutoff)
            .map(|(m, k)| (m, k.clone()))
            .collect();
        parts.reverse();
        Ok(Self {
            rank: census.rank(),
            lambda,
            parts,
            meta: SamplerMeta { cutoff, residual },
        })
    }

    pub fn meta(&self) -> SamplerMeta {
        self.meta
    }

    /// One draw of independent geometric multiplicities.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Representation {
        self.sample_bounded(rng, u64::MAX).expect("unbounded draw")
    }

    /// Like [`sample`](Self::sample) but gives up (returning `None`) as soon
    /// as the dimension exceeds `max_dim`.
    pub fn sample_bounded<R: Rng + ?Sized>(&self, rng: &mut R, max_dim: u64) -> Option<Representation> {
        let mut rep = Representation::empty(self.rank);
        let mut dim = 0u64;
        for (a, k) in &self.parts {
            // P(X ≥ ℓ) = e^{-λ a ℓ}
            let v: f64 = 1.0 - rng.gen::<f64>();
            let x = (-v.ln() / (self.lambda * *a as f64)).floor();
            if x < 1.0 {
                continue;
            }
            let x = if x >= u64::MAX as f64 { u64::MAX } else { x as u64 };
            dim = dim.saturating_add(a.saturating_mul(x));
            if dim > max_dim {
                return None;
            }
            rep.add(k.clone(), x).ok()?;
        }
        Some(rep)
    }

    /// Draws until the dimension equals `n`. Returns the accepted draw and the
    /// number of attempts used.
    pub fn rejection_sample<R: Rng + ?Sized>(
        &self,
        n: u64,
        rng: &mut R,
        max_attempts: u64,
    ) -> Result<(Representation, u64)> {
        if self.meta.residual > DEFAULT_DELTA {
            return Err(Error::Domain(format!(
                "truncation residual {:e} above {DEFAULT_DELTA:e}",
                self.meta.residual
            )));
        }
        if self.meta.cutoff < n && self.parts.iter().all(|(a, _)| *a != 1) {
            return Err(Error::Internal("sampler lacks the trivial part".into()));
        }
        for attempt in 1..=max_attempts {
            if let Some(rep) = self.sample_bounded(rng, n) {
                if rep.dim() == n {
                    return Ok((rep, attempt));
                }
            }
        }
        Err(Error::AttemptsExhausted(max_attempts))
    }
}

/// One `Q_q` draw with the default truncation `δ`.
pub fn boltzmann_sample<T: Real, R: Rng + ?Sized>(
    params: &BoltzmannParams<T>,
    census: &IrrepCensus,
    rng: &mut R,
) -> Result<Representation> {
    Ok(BoltzmannSampler::new(params, census, DEFAULT_DELTA)?.sample(rng))
}

/// Default attempt budget `100 √(2π σ²)`.
pub fn default_attempt_budget<T: Real>(params: &BoltzmannParams<T>) -> u64 {
    let s2 = params.sigma2.to_f64().unwrap_or(f64::INFINITY);
    (100.0 * (2.0 * std::f64::consts::PI * s2).sqrt()).ceil().max(100.0) as u64
}

/// Exactly uniform draw of dimension `n` by conditioning `Q_{q_n}` on `dim = n`.
pub fn rejection_uniform_sample<T: Real, R: Rng + ?Sized>(
    params: &BoltzmannParams<T>,
    census: &IrrepCensus,
    n: u64,
    rng: &mut R,
    max_attempts: u64,
) -> Result<(Representation, u64)> {
    BoltzmannSampler::new(params, census, DEFAULT_DELTA)?.rejection_sample(n, rng, max_attempts)
}

/// Bound on `Σ_{m > X} ϱ(m) q^m/(1-q^m)` past the census bound.
fn bose_tail<T: Real>(params: &BoltzmannParams<T>, census: &IrrepCensus) -> Result<T> {
    let x = census.bound();
    let xq = params.q_pow(from_u64(x));
    Ok(census.tail_bound(x, T::zero(), params.lambda)? / (T::one() - xq))
}

fn check_rank<T>(params: &BoltzmannParams<T>, census: &IrrepCensus) -> Result<()> {
    if params.rank == census.rank() {
        Ok(())
    } else {
        Err(Error::Mismatch("rank of parameters and census differ".into()))
    }
}

/// `Q_q(D ≤ ℓ) = ∏_{a(k) > ℓ} (1 - q^{a(k)})`, `D` the largest constituent
/// dimension. The error covers the factors past the census bound.
pub fn exact_prob_max_dim_le<T: Real>(
    params: &BoltzmannParams<T>,
    census: &IrrepCensus,
    ell: u64,
) -> Result<Estimate<T>> {
    check_rank(params, census)?;
    let tail = bose_tail(params, census)?;
    let log: T = census
        .entries()
        .iter()
        .filter(|e| e.m > ell)
        .map(|e| ln_one_minus_exp(params.lambda * from_u64(e.m)) * from_u64(e.rho))
        .collect::<CompensatedSum<T>>()
        .value();
    let v = log.exp();
    Ok(Estimate::new(v, v * -(-tail).exp_m1()))
}

/// `Q_q(H ≤ ℓ) = ∏_{L(k-1) > ℓ} (1 - q^{a(k)})`, `H` the largest height
/// among the constituents.
pub fn exact_prob_height_le<T: Real>(
    params: &BoltzmannParams<T>,
    census: &IrrepCensus,
    ell: T,
) -> Result<Estimate<T>> {
    check_rank(params, census)?;
    census.require_weights()?;
    let tail = bose_tail(params, census)?;
    let twice = ell * lit(2.0);
    let log: T = census
        .weights()
        .filter(|(_, k)| from_u64::<T>(k.height().twice()) > twice)
        .map(|(m, _)| ln_one_minus_exp(params.lambda * from_u64(m)))
        .collect::<CompensatedSum<T>>()
        .value();
    let v = log.exp();
    Ok(Estimate::new(v, v * -(-tail).exp_m1()))
}

/// `E_q φ(t) = Σ_{k ≥ t} q^{a(k)}/(1 - q^{a(k)})`, the expected number of
/// constituents with every `k_j ≥ t_j`.
pub fn exact_expected_shape<T: Real>(
    params: &BoltzmannParams<T>,
    census: &IrrepCensus,
    t: &[T],
) -> Result<Estimate<T>> {
    check_rank(params, census)?;
    census.require_weights()?;
    if t.len() != params.rank.as_usize() {
        return Err(Error::Mismatch(format!(
            "shape argument of length {} for rank {}",
            t.len(),
            params.rank
        )));
    }
    let tail = bose_tail(params, census)?;
    let sum = census
        .weights()
        .filter(|(_, k)| k.components().iter().zip(t).all(|(&kj, &tj)| from_u64::<T>(kj) >= tj))
        .map(|(m, _)| bose(params.lambda * from_u64(m)))
        .collect::<CompensatedSum<T>>()
        .value();
    Ok(Estimate::new(sum, tail))
}

/// `E_q exp(u s^{r(r+1)/2} N) = ∏_k (1 - q^{a(k)}) / (1 - e^{uλ} q^{a(k)})`,
/// `N` the total number of constituents. Defined for `|u| < 1`.
pub fn exact_mgf_n<T: Real>(params: &BoltzmannParams<T>, census: &IrrepCensus, u: T) -> Result<Estimate<T>> {
    check_rank(params, census)?;
    if !(u.abs() < T::one()) {
        return Err(Error::Domain(format!("mgf argument {u} outside (-1, 1)")));
    }
    let lam = params.lambda;
    let log: T = census
        .entries()
        .iter()
        .map(|e| {
            let m: T = from_u64(e.m);
            (ln_one_minus_exp(lam * m) - ln_one_minus_exp(lam * (m - u))) * from_u64(e.rho)
        })
        .collect::<CompensatedSum<T>>()
        .value();
    // |log((1-x)/(1-zx))| ≤ |z-1| x / (1 - max(z,1) x) termwise
    let x = census.bound();
    let z = (u * lam).exp();
    let xq = params.q_pow(from_u64(x));
    let plain = census.tail_bound(x, T::zero(), lam)?;
    let tail = (z - T::one()).abs() * plain / (T::one() - z.max(T::one()) * xq);
    let v = log.exp();
    Ok(Estimate::new(v, v * tail.exp_m1()))
}
