//! Census of irreducible representations by dimension.
//!
//! [`IrrepCensus`] lists every dimension `m ≤ X` realized by some `a_r(k)`,
//! with multiplicity `ϱ_r(m)` and optionally the weight vectors themselves.
//! Prefix sums give `R_r(x) = Σ_{m≤x} ϱ_r(m)`.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_nested, Domain, QuadSpec};
use crate::real::{from_u64, lit, upper_gamma_bound, Estimate, Real};
use crate::weights::{dim_checked, dim_real, h_real, Rank, WeightVector};

/// Limits applied while building a census.
#[derive(Clone, Copy, Debug)]
pub struct CensusConfig {
    /// Maximum number of lattice points (weights) the census may contain.
    pub entry_budget: usize,
}

impl Default for CensusConfig {
    fn default() -> Self {
        Self {
            entry_budget: 20_000_000,
        }
    }
}

/// One realized dimension.
#[derive(Clone, Debug, Serialize)]
pub struct CensusEntry {
    pub m: u64,
    pub rho: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<WeightVector>>,
}

/// Immutable table of `(m, ϱ_r(m))` for all `m ≤ X`.
#[derive(Clone, Debug)]
pub struct IrrepCensus {
    rank: Rank,
    bound: u64,
    entries: Vec<CensusEntry>,
    prefix: Vec<u64>,
}

/// Enumerates every `k ∈ ℕ^r` with `a_r(k) ≤ bound` using the default budget.
pub fn enumerate_irreps(rank: Rank, bound: u64, keep_weights: bool) -> Result<IrrepCensus> {
    enumerate_irreps_with(rank, bound, keep_weights, &CensusConfig::default())
}

/// Enumerates every `k ∈ ℕ^r` with `a_r(k) ≤ bound`.
///
/// Lexicographic depth-first walk: `a_r` is nondecreasing in each coordinate,
/// so once `a_r(k_1, …, k_j, 1, …, 1)` exceeds the bound, no larger `k_j`
/// with the same prefix can come back under it.
pub fn enumerate_irreps_with(
    rank: Rank,
    bound: u64,
    keep_weights: bool,
    config: &CensusConfig,
) -> Result<IrrepCensus> {
    if bound == 0 {
        return Err(Error::OutOfRange {
            what: "census bound",
            value: "0".into(),
            limit: ">= 1".into(),
        });
    }
    if bound >= 1 << 63 {
        return Err(Error::OutOfRange {
            what: "census bound",
            value: bound.to_string(),
            limit: "< 2^63".into(),
        });
    }
    let r = rank.as_usize();
    let mut found: Vec<(u64, Option<WeightVector>)> = Vec::new();
    let mut k = vec![1u64; r];
    walk(0, &mut k, bound, keep_weights, config.entry_budget, &mut found)?;
    if keep_weights {
        found.sort_unstable_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    } else {
        found.sort_unstable_by_key(|e| e.0);
    }

    let mut entries: Vec<CensusEntry> = Vec::new();
    for (m, w) in found {
        match entries.last_mut() {
            Some(last) if last.m == m => {
                last.rho += 1;
                if let (Some(ws), Some(w)) = (last.weights.as_mut(), w) {
                    ws.push(w);
                }
            }
            _ => entries.push(CensusEntry {
                m,
                rho: 1,
                weights: w.map(|w| vec![w]),
            }),
        }
    }
    let mut prefix = Vec::with_capacity(entries.len());
    let mut acc = 0u64;
    for e in &entries {
        acc += e.rho;
        prefix.push(acc);
    }
    Ok(IrrepCensus {
        rank,
        bound,
        entries,
        prefix,
    })
}

fn walk(
    j: usize,
    k: &mut Vec<u64>,
    bound: u64,
    keep: bool,
    budget: usize,
    out: &mut Vec<(u64, Option<WeightVector>)>,
) -> Result<()> {
    let r = k.len();
    k[j] = 1;
    loop {
        let a = match dim_checked(k) {
            Some(a) if a <= bound => a,
            _ => break,
        };
        if j + 1 == r {
            if out.len() >= budget {
                return Err(Error::Budget {
                    what: "census entries",
                    needed: out.len() as u128 + 1,
                    budget: budget as u128,
                });
            }
            out.push((a, keep.then(|| WeightVector::from_vec_unchecked(k.clone()))));
        } else {
            walk(j + 1, k, bound, keep, budget, out)?;
        }
        k[j] += 1;
    }
    k[j] = 1;
    Ok(())
}

impl IrrepCensus {
    pub fn rank(&self) -> Rank {
        self.rank
    }

    /// The dimension bound `X`.
    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn entries(&self) -> &[CensusEntry] {
        &self.entries
    }

    pub fn has_weights(&self) -> bool {
        self.entries.first().is_none_or(|e| e.weights.is_some())
    }

    /// `R_r(X)`: total number of irreducibles in the census.
    pub fn total(&self) -> u64 {
        self.prefix.last().copied().unwrap_or(0)
    }

    /// `ϱ_r(m)`.
    pub fn rho(&self, m: u64) -> Result<u64> {
        if m > self.bound {
            return Err(Error::OutOfRange {
                what: "dimension",
                value: m.to_string(),
                limit: self.bound.to_string(),
            });
        }
        Ok(self
            .entries
            .binary_search_by_key(&m, |e| e.m)
            .map_or(0, |i| self.entries[i].rho))
    }

    /// `R_r(x) = Σ_{m≤x} ϱ_r(m)`.
    pub fn partial_sum_r(&self, x: f64) -> Result<u64> {
        if x.is_nan() || x > self.bound as f64 {
            return Err(Error::OutOfRange {
                what: "x",
                value: x.to_string(),
                limit: self.bound.to_string(),
            });
        }
        if x < 1.0 {
            return Ok(0);
        }
        Ok(self.count_le(x.floor() as u64))
    }

    /// `R_r(m)` for integer `m ≤ X` (no range check beyond saturation).
    pub(crate) fn count_le(&self, m: u64) -> u64 {
        let idx = self.entries.partition_point(|e| e.m <= m);
        if idx == 0 {
            0
        } else {
            self.prefix[idx - 1]
        }
    }

    /// Every weight vector of the census, in increasing dimension.
    pub fn weights(&self) -> impl Iterator<Item = (u64, &WeightVector)> {
        self.entries.iter().flat_map(|e| {
            e.weights
                .iter()
                .flat_map(move |ws| ws.iter().map(move |w| (e.m, w)))
        })
    }

    pub fn require_weights(&self) -> Result<()> {
        if self.has_weights() {
            Ok(())
        } else {
            Err(Error::Domain("census was built without weight lists".into()))
        }
    }

    /// Writes rows `m,rho,cumulative` with a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "m,rho,cumulative")?;
        for (e, c) in self.entries.iter().zip(&self.prefix) {
            writeln!(w, "{},{},{}", e.m, e.rho, c)?;
        }
        Ok(())
    }

    /// Safe constant `K` with `R_r(x) ≤ K x^{2/(r+1)}` for all `x ≥ 1`.
    ///
    /// Factor 2 over the largest ratio observed in the census, and never
    /// below the region volume `C_r` (lattice count ≤ volume).
    pub fn growth_constant(&self) -> f64 {
        let beta = 2.0 / (f64::from(self.rank.get()) + 1.0);
        let observed = self
            .entries
            .iter()
            .zip(&self.prefix)
            .map(|(e, &c)| c as f64 / (e.m as f64).powf(beta))
            .fold(0.0, f64::max);
        (2.0 * observed).max(c_r_upper(self.rank))
    }

    /// Certified bound on `Σ_{m>Y} ϱ(m) m^p e^{-λ m}` for a cutoff `Y`.
    ///
    /// Abel summation against `R(x) ≤ K x^β` gives
    /// `K λ^{-(β+p)} Γ(β+p+1, λY)`. Requires `m^p e^{-λm}` to be
    /// decreasing past `Y`, i.e. `λY ≥ p`.
    pub fn tail_bound<T: Real>(&self, cutoff: u64, power: T, lambda: T) -> Result<T> {
        let too_small = || {
            Error::CutoffTooSmall(format!(
                "cutoff {cutoff} too small for decay rate {lambda} and power {power}"
            ))
        };
        let y: T = from_u64(cutoff);
        if lambda <= T::zero() || cutoff == 0 || lambda * y < power {
            return Err(too_small());
        }
        let beta: T = self.rank.census_exponent();
        let g = upper_gamma_bound(beta + power + T::one(), lambda * y).ok_or_else(too_small)?;
        let k: T = lit(self.growth_constant());
        Ok(k * g / lambda.powf(beta + power))
    }

    /// `(C_r x^β − R_r(x)) / x^{2(r-1)/r²}`: the remainder of the census
    /// asymptotic scaled by its predicted order.
    pub fn scaled_remainder(&self, x: f64, c_r: f64) -> Result<f64> {
        let r = f64::from(self.rank.get());
        let beta = 2.0 / (r + 1.0);
        let gamma = 2.0 * (r - 1.0) / (r * r);
        let count = self.partial_sum_r(x)? as f64;
        Ok((c_r * x.powf(beta) - count) / x.powf(gamma))
    }
}

/// Rough `C_r` with its error bar, cached per rank: quadrature at relative
/// accuracy `1e-6` up to rank 4, Monte Carlo above.
pub fn c_r_approx(rank: Rank) -> Estimate<f64> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Estimate<f64>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&v) = cache.lock().unwrap().get(&rank.get()) {
        return v;
    }
    let spec = QuadSpec::new(1e-8, 1e-6);
    let v = c_r_constant::<f64>(rank, &spec)
        .unwrap_or_else(|_| c_r_monte_carlo::<f64>(rank, 4_000_000, 0x5eed));
    cache.lock().unwrap().insert(rank.get(), v);
    v
}

/// Upper bound on `C_r` used for tail certification.
fn c_r_upper(rank: Rank) -> f64 {
    let e = c_r_approx(rank);
    (e.value + 5.0 * e.error) * 1.01
}

/// Highest rank for which the nested quadrature is attempted; above it the
/// Monte Carlo estimator is used directly.
const MAX_QUADRATURE_RANK: u32 = 4;

/// `C_r = vol{y ∈ ℝ_{>0}^r : a_r(y) ≤ 1}`.
///
/// Scaling `y = ρw` with `w` on the simplex `Σ w_j = 1` gives
/// `C_r = (1/r) ∫_Δ a_r(w)^{-2/(r+1)} dw`. The integrand blows up
/// algebraically on the faces `w_j = 0`, which the singular domain transform
/// absorbs. Falls back to Monte Carlo when quadrature is out of reach, and
/// fails if that estimate is not within the requested accuracy.
pub fn c_r_constant<T: Real>(rank: Rank, spec: &QuadSpec<T>) -> Result<Estimate<T>> {
    simplex_volume(rank, spec, |w| dim_real(w))
}

/// `I_r = vol{y > 0 : h_r(y) ≤ 1}`; `C_r = I_r c_r^{2/(r+1)}`.
pub fn i_r_constant<T: Real>(rank: Rank, spec: &QuadSpec<T>) -> Result<Estimate<T>> {
    simplex_volume(rank, spec, |w| h_real(w))
}

fn simplex_volume<T: Real, P: Fn(&[T]) -> T + Sync>(
    rank: Rank,
    spec: &QuadSpec<T>,
    poly: P,
) -> Result<Estimate<T>> {
    let r = rank.as_usize();
    if r == 1 {
        // region is (0, 1/c) with c = 1 for both polynomials
        return Ok(Estimate::exact(T::one()));
    }
    let beta: T = rank.census_exponent();
    let rr: T = from_u64(r as u64);
    let quad = if rank.get() <= MAX_QUADRATURE_RANK {
        integrate_nested(
            r - 1,
            &|_, _: &[T]| Domain::Finite(T::zero(), T::one()),
            &|u: &[T]| {
                let (w, jac) = stick_breaking(u);
                let p = poly(&w);
                if p <= T::zero() || jac == T::zero() {
                    T::zero()
                } else {
                    jac * p.powf(-beta)
                }
            },
            spec,
        )
    } else {
        Err(Error::Convergence {
            what: "simplex quadrature",
            detail: format!("rank {rank} above quadrature limit"),
        })
    };
    match quad {
        Ok(e) => Ok(Estimate::new(e.value / rr, e.error / rr)),
        Err(err) => {
            let mc = monte_carlo_volume::<T, _>(rank, 4_000_000, 0x00c0_ffee, &poly);
            let target = spec.abs_tol.max(spec.rel_tol * mc.value.abs());
            if mc.error <= target {
                Ok(mc)
            } else {
                Err(Error::Convergence {
                    what: "C_r volume",
                    detail: format!(
                        "{err}; Monte Carlo fallback {} ± {} misses target {target}",
                        mc.value, mc.error
                    ),
                })
            }
        }
    }
}

/// Maps `u ∈ (0,1)^{r-1}` onto the simplex `Σ w_j = 1`, returning `w` and the
/// Jacobian. Each `u_i` first passes through the sigmoid `u³/(u³+(1-u)³)`,
/// which flattens the algebraic blow-up on the faces; the complement
/// `1 - t_i` is formed directly so coordinates near a face keep full
/// relative precision.
fn stick_breaking<T: Real>(u: &[T]) -> (Vec<T>, T) {
    let three: T = lit(3.0);
    let mut w = Vec::with_capacity(u.len() + 1);
    let mut rest = T::one();
    let mut jac = T::one();
    for &ui in u {
        let vi = T::one() - ui;
        let (a, b) = (ui.powi(3), vi.powi(3));
        let den = a + b;
        jac = jac * three * ui * ui * vi * vi / (den * den) * rest;
        w.push(rest * a / den);
        rest = rest * b / den;
    }
    w.push(rest);
    (w, jac)
}

/// Monte Carlo estimate of `C_r` by importance sampling the whole orthant.
///
/// Each coordinate is drawn as `exp(Z)` with `Z` standard Cauchy, whose
/// density `1/(π y (1 + ln² y))` is heavy enough on both ends to cover the
/// thin arms of the region along the axes with finite variance.
/// Deterministic for a fixed seed.
pub fn c_r_monte_carlo<T: Real>(rank: Rank, samples: u64, seed: u64) -> Estimate<T> {
    monte_carlo_volume(rank, samples, seed, &|y: &[T]| dim_real(y))
}

fn monte_carlo_volume<T: Real, P: Fn(&[T]) -> T + Sync>(
    rank: Rank,
    samples: u64,
    seed: u64,
    poly: &P,
) -> Estimate<T> {
    const CHUNK: u64 = 1 << 16;
    let r = rank.as_usize();
    let chunks = samples.div_ceil(CHUNK);
    let per_chunk: Vec<(f64, f64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = CHUNK.min(samples - c * CHUNK);
            let mut y = vec![T::zero(); r];
            let (mut s, mut s2) = (0.0f64, 0.0f64);
            for _ in 0..n {
                let mut weight = 1.0f64;
                for yj in y.iter_mut() {
                    let u: f64 = rng.gen();
                    let z = (std::f64::consts::PI * (u - 0.5)).tan();
                    weight *= std::f64::consts::PI * (1.0 + z * z) * z.exp();
                    *yj = lit(z.exp());
                }
                let v = poly(&y);
                if v.is_finite() && v <= T::one() && weight.is_finite() {
                    s += weight;
                    s2 += weight * weight;
                }
            }
            (s, s2, n)
        })
        .collect();
    let (sum, sum_sq, count) = per_chunk
        .iter()
        .fold((0.0, 0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let n = count as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    let mut error = (var / n).sqrt();
    // The weights are heavy-tailed along the arms of the region, where the
    // pooled variance tends to run low; batch means over chunks guard it.
    if per_chunk.len() >= 16 {
        let k = per_chunk.len() as f64;
        let spread: f64 = per_chunk
            .iter()
            .map(|&(s, _, m)| (m as f64 / CHUNK as f64) * (s / m as f64 - mean).powi(2))
            .sum::<f64>()
            / (k - 1.0);
        error = error.max((spread / k).sqrt());
    }
    Estimate::new(lit(mean), lit(error))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::superfactorial_real;

    fn rank(r: u32) -> Rank {
        Rank::new(r).unwrap()
    }

    fn pairs(c: &IrrepCensus) -> Vec<(u64, u64)> {
        c.entries().iter().map(|e| (e.m, e.rho)).collect()
    }

    #[test]
    fn trivial_only_at_bound_one() {
        let c = enumerate_irreps(rank(2), 1, true).unwrap();
        assert_eq!(pairs(&c), vec![(1, 1)]);
    }

    #[test]
    fn rank_two_small_census() {
        let c = enumerate_irreps(rank(2), 10, false).unwrap();
        assert_eq!(pairs(&c), vec![(1, 1), (3, 2), (6, 2), (8, 1), (10, 2)]);
        assert_eq!(c.partial_sum_r(10.0).unwrap(), 8);
        assert_eq!(c.partial_sum_r(0.5).unwrap(), 0);
        assert!(c.partial_sum_r(10.5).is_err());
    }

    #[test]
    fn rank_one_is_identity() {
        let c = enumerate_irreps(rank(1), 10, false).unwrap();
        assert_eq!(pairs(&c), (1..=10).map(|m| (m, 1)).collect::<Vec<_>>());
        assert_eq!(c.partial_sum_r(7.9).unwrap(), 7);
    }

    #[test]
    fn rho_values() {
        let c = enumerate_irreps(rank(2), 20, true).unwrap();
        assert_eq!(c.rho(3).unwrap(), 2);
        assert_eq!(c.rho(2).unwrap(), 0);
        assert_eq!(c.rho(15).unwrap(), 4);
        assert!(c.rho(21).is_err());
    }

    #[test]
    fn weights_are_consistent_and_reversal_closed() {
        for r in 1..=4 {
            let c = enumerate_irreps(rank(r), 3000, true).unwrap();
            for e in c.entries() {
                let ws = e.weights.as_ref().unwrap();
                assert_eq!(ws.len() as u64, e.rho);
                for w in ws {
                    assert_eq!(w.dim(), Some(e.m));
                    assert!(ws.contains(&w.reversed()));
                }
            }
        }
    }

    #[test]
    fn budget_exceeded() {
        let cfg = CensusConfig { entry_budget: 10 };
        let r = enumerate_irreps_with(rank(2), 1000, false, &cfg);
        assert!(matches!(r, Err(Error::Budget { .. })));
    }

    #[test]
    fn csv_layout() {
        let c = enumerate_irreps(rank(2), 6, false).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "m,rho,cumulative\n1,1,1\n3,2,3\n6,2,5\n");
    }

    #[test]
    fn brute_force_equivalence() {
        // naive scan of all k with components ≤ X, since a_r(k) ≥ max_j k_j
        for (r, x) in [(1u32, 500u64), (2, 500), (3, 80)] {
            let c = enumerate_irreps(rank(r), x, false).unwrap();
            let mut counts = std::collections::BTreeMap::new();
            let mut k = vec![1u64; r as usize];
            loop {
                if let Some(a) = dim_checked(&k) {
                    if a <= x {
                        *counts.entry(a).or_insert(0u64) += 1;
                    }
                }
                let mut i = 0;
                loop {
                    if i == k.len() {
                        break;
                    }
                    k[i] += 1;
                    if k[i] <= x {
                        break;
                    }
                    k[i] = 1;
                    i += 1;
                }
                if i == k.len() {
                    break;
                }
            }
            let naive: Vec<(u64, u64)> = counts.into_iter().collect();
            assert_eq!(pairs(&c), naive, "rank {r}");
        }
    }

    #[test]
    fn c_r_rank_one_and_two() {
        let spec = QuadSpec::new(1e-12, 1e-10);
        assert_eq!(c_r_constant::<f64>(rank(1), &spec).unwrap().value, 1.0);
        // r = 2: (1/2)∫_0^1 (w(1-w)/2)^{-2/3} dw = 2^{-1/3} B(1/3, 1/3)
        let e = c_r_constant::<f64>(rank(2), &spec).unwrap();
        assert!((e.value - 4.206_546_315_976_361).abs() < 1e-8, "{e:?}");
    }

    #[test]
    fn c_r_two_routes_agree() {
        let spec = QuadSpec::new(1e-10, 1e-9);
        for r in 2..=3u32 {
            let c = c_r_constant::<f64>(rank(r), &spec).unwrap();
            let i = i_r_constant::<f64>(rank(r), &spec).unwrap();
            let cr = superfactorial_real::<f64>(r as usize);
            let via_i = i.value * cr.powf(2.0 / (f64::from(r) + 1.0));
            assert!((c.value - via_i).abs() < 1e-7 * c.value, "r={r}: {} vs {via_i}", c.value);
            assert!(c.value > 0.0);
        }
    }

    #[test]
    fn monte_carlo_matches_quadrature() {
        let spec = QuadSpec::new(1e-10, 1e-9);
        for r in 2..=3u32 {
            let q = c_r_constant::<f64>(rank(r), &spec).unwrap();
            let mc = c_r_monte_carlo::<f64>(rank(r), 2_000_000, 17);
            assert!(
                (q.value - mc.value).abs() < 4.0 * mc.error + q.error,
                "r={r}: {q:?} vs {mc:?}"
            );
            assert!(mc.error < 0.02 * q.value);
        }
    }

    #[test]
    fn tail_bound_dominates_direct_sum() {
        // compare certified tail past X = 200 with the actual sum up to 20000
        let big = enumerate_irreps(rank(2), 20_000, false).unwrap();
        let small = enumerate_irreps(rank(2), 200, false).unwrap();
        let lambda = 0.01f64;
        let actual: f64 = big
            .entries()
            .iter()
            .filter(|e| e.m > 200)
            .map(|e| e.rho as f64 * e.m as f64 * (-lambda * e.m as f64).exp())
            .sum();
        let bound = small.tail_bound(200, 1.0, lambda).unwrap();
        assert!(bound >= actual, "{bound} < {actual}");
        assert!(small.tail_bound(200, 3.0, 0.001f64).is_err());
    }
}
