//! Exact counts `p_r(n)` of `n`-dimensional representations and an exact
//! uniform sampler over them.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::census::{enumerate_irreps, IrrepCensus};
use crate::error::{Error, Result};
use crate::weights::{Rank, WeightVector};

/// Resource limits for exact tables.
#[derive(Clone, Copy, Debug)]
pub struct CountConfig {
    /// Upper bound on `N²`, the number of bignum multiply-adds of the recurrence.
    pub dp_budget: u128,
    /// Upper bound on the number of bignum cells held by a layered sampler.
    pub layer_budget: u128,
}

impl Default for CountConfig {
    fn default() -> Self {
        Self {
            dp_budget: 1 << 30,
            layer_budget: 20_000_000,
        }
    }
}

/// `p_r(0..=N)` as exact integers.
#[derive(Clone, Debug)]
pub struct CountTable {
    rank: Rank,
    limit: u64,
    p: Vec<BigUint>,
    census: Arc<IrrepCensus>,
}

/// Builds the census up to `limit` (with weights) and the exact count table.
pub fn count_representations(rank: Rank, limit: u64) -> Result<CountTable> {
    let census = enumerate_irreps(rank, limit.max(1), true)?;
    count_with_census(Arc::new(census), limit, &CountConfig::default())
}

/// Exact `p_r(n)` for `n ≤ limit` from an existing census.
///
/// Euler transform of `∏_k (1 - q^{a(k)})^{-1}`:
/// `n p(n) = Σ_{j=1}^{n} c(j) p(n-j)` with `c(j) = Σ_{d | j} d ϱ(d)`.
pub fn count_with_census(
    census: Arc<IrrepCensus>,
    limit: u64,
    config: &CountConfig,
) -> Result<CountTable> {
    if census.bound() < limit {
        return Err(Error::Mismatch(format!(
            "census bound {} below count limit {limit}",
            census.bound()
        )));
    }
    let needed = u128::from(limit) * u128::from(limit);
    if needed > config.dp_budget {
        return Err(Error::Budget {
            what: "count table operations",
            needed,
            budget: config.dp_budget,
        });
    }
    let n_max = limit as usize;
    let mut c = vec![0u128; n_max + 1];
    for e in census.entries() {
        let m = e.m as usize;
        if m > n_max {
            break;
        }
        let w = u128::from(e.m) * u128::from(e.rho);
        for j in (m..=n_max).step_by(m) {
            c[j] += w;
        }
    }
    let mut p: Vec<BigUint> = Vec::with_capacity(n_max + 1);
    p.push(BigUint::one());
    for n in 1..=n_max {
        let mut acc = BigUint::zero();
        for j in 1..=n {
            if c[j] != 0 {
                acc += &p[n - j] * c[j];
            }
        }
        let (q, rem) = (&acc / n as u64, &acc % n as u64);
        if !rem.is_zero() {
            return Err(Error::Internal(format!("inexact division at n = {n}")));
        }
        p.push(q);
    }
    Ok(CountTable {
        rank: census.rank(),
        limit,
        p,
        census,
    })
}

impl CountTable {
    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn census(&self) -> &IrrepCensus {
        &self.census
    }

    pub fn census_arc(&self) -> Arc<IrrepCensus> {
        Arc::clone(&self.census)
    }

    /// `p_r(n)`.
    pub fn p(&self, n: u64) -> Result<&BigUint> {
        self.p.get(n as usize).ok_or_else(|| self.out_of_range(n))
    }

    pub fn values(&self) -> &[BigUint] {
        &self.p
    }

    fn out_of_range(&self, n: u64) -> Error {
        Error::OutOfRange {
            what: "n",
            value: n.to_string(),
            limit: self.limit.to_string(),
        }
    }

    /// Writes rows `n,p` (decimal) with a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,p")?;
        for (n, p) in self.p.iter().enumerate() {
            writeln!(w, "{n},{p}")?;
        }
        Ok(())
    }

    /// Exact law of the multiplicity `X_k` under the uniform measure on
    /// `n`-dimensional representations: entry `ℓ` is `P_n(X_k = ℓ)`.
    ///
    /// Removing the factor of `k` from the product leaves
    /// `p_{∖k}(x) = p(x) - p(x - a(k))`, so
    /// `P_n(X_k = ℓ) = p_{∖k}(n - ℓ a(k)) / p(n)`.
    pub fn multiplicity_law(&self, k: &WeightVector, n: u64) -> Result<Vec<f64>> {
        if k.rank() != self.rank {
            return Err(Error::Mismatch(format!(
                "weight of rank {} against table of rank {}",
                k.rank(),
                self.rank
            )));
        }
        let total = self.p(n)?;
        let a = k
            .dim()
            .ok_or_else(|| Error::OutOfRange {
                what: "a(k)",
                value: format!("{k:?}"),
                limit: "u64".into(),
            })?;
        let removed = |x: u64| -> BigUint {
            let px = &self.p[x as usize];
            if x >= a {
                px - &self.p[(x - a) as usize]
            } else {
                px.clone()
            }
        };
        Ok((0..=n / a)
            .map(|l| ratio_f64(&removed(n - l * a), total))
            .collect())
    }
}

/// `num / den` rounded to `f64` without overflowing either operand.
pub fn ratio_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let shift = den.bits().max(num.bits()).saturating_sub(1000);
    let (n, d) = (num >> shift, den >> shift);
    let (nb, db) = (n.bits(), d.bits());
    let s = nb.max(db).saturating_sub(900);
    let nf = (n >> s).to_f64().unwrap_or(f64::INFINITY);
    let df = (d >> s).to_f64().unwrap_or(f64::INFINITY);
    nf / df
}

/// A finite-dimensional representation as a multiset of irreducibles.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Representation {
    rank: Rank,
    mult: BTreeMap<WeightVector, u64>,
    dim: u64,
}

impl Representation {
    pub fn empty(rank: Rank) -> Self {
        Self {
            rank,
            mult: BTreeMap::new(),
            dim: 0,
        }
    }

    /// Validating constructor; zero multiplicities are dropped.
    pub fn from_multiplicities<I>(rank: Rank, items: I) -> Result<Self>
    where
        I: IntoIterator<Item = (WeightVector, u64)>,
    {
        let mut rep = Self::empty(rank);
        for (k, x) in items {
            rep.add(k, x)?;
        }
        Ok(rep)
    }

    /// Adds `count` copies of the irreducible with highest weight `k - 1`.
    pub fn add(&mut self, k: WeightVector, count: u64) -> Result<()> {
        if k.rank() != self.rank {
            return Err(Error::Mismatch(format!(
                "weight of rank {} in representation of rank {}",
                k.rank(),
                self.rank
            )));
        }
        if count == 0 {
            return Ok(());
        }
        let a = k.dim().ok_or_else(|| Error::OutOfRange {
            what: "a(k)",
            value: format!("{k:?}"),
            limit: "u64".into(),
        })?;
        let added = a.checked_mul(count).and_then(|d| d.checked_add(self.dim));
        self.dim = added.ok_or_else(|| Error::OutOfRange {
            what: "representation dimension",
            value: "overflow".into(),
            limit: "u64".into(),
        })?;
        *self.mult.entry(k).or_insert(0) += count;
        Ok(())
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn dim(&self) -> u64 {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.mult.is_empty()
    }

    /// `X_k`.
    pub fn multiplicity(&self, k: &WeightVector) -> u64 {
        self.mult.get(k).copied().unwrap_or(0)
    }

    /// `(k, X_k)` pairs with `X_k > 0`, in lexicographic order of `k`.
    pub fn iter(&self) -> impl Iterator<Item = (&WeightVector, u64)> {
        self.mult.iter().map(|(k, &x)| (k, x))
    }

    /// Number of distinct irreducible constituents.
    pub fn distinct(&self) -> usize {
        self.mult.len()
    }

    /// Recomputes `Σ a(k) X_k` from scratch.
    pub fn recompute_dim(&self) -> Option<u64> {
        self.mult
            .iter()
            .try_fold(0u64, |acc, (k, &x)| acc.checked_add(k.dim()?.checked_mul(x)?))
    }
}

impl Serialize for Representation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mult: Vec<(&[u64], u64)> = self.mult.iter().map(|(k, &x)| (k.components(), x)).collect();
        let mut st = s.serialize_struct("Representation", 2)?;
        st.serialize_field("dim", &self.dim)?;
        st.serialize_field("mult", &mult)?;
        st.end()
    }
}

/// Exact uniform sampler over the `p_r(n)` representations of dimension `n`.
///
/// Layer `i` holds `P_i(x)`, the number of representations of `x ≤ n` built
/// from the `i` smallest distinct dimensions only. Sampling walks the layers
/// from the top, drawing the number of constituents of dimension `m_i` from
/// its exact conditional law and then their labels by stars-and-bars.
#[derive(Clone, Debug)]
pub struct UniformSampler {
    rank: Rank,
    n: u64,
    /// `(m, ϱ(m), labels)` for each distinct dimension `m ≤ n`.
    parts: Vec<(u64, u64, Vec<WeightVector>)>,
    /// `layers[i][x]` counts representations of `x` using `parts[..i]`.
    layers: Vec<Vec<BigUint>>,
}

impl UniformSampler {
    pub fn new(table: &CountTable, n: u64) -> Result<Self> {
        Self::with_config(table, n, &CountConfig::default())
    }

    pub fn with_config(table: &CountTable, n: u64, config: &CountConfig) -> Result<Self> {
        if n > table.limit {
            return Err(table.out_of_range(n));
        }
        let census = table.census();
        census.require_weights()?;
        let parts: Vec<(u64, u64, Vec<WeightVector>)> = census
            .entries()
            .iter()
            .take_while(|e| e.m <= n)
            .map(|e| (e.m, e.rho, e.weights.clone().unwrap_or_default()))
            .collect();
        let cells = (parts.len() as u128 + 1) * (u128::from(n) + 1);
        if cells > config.layer_budget {
            return Err(Error::Budget {
                what: "sampler layer cells",
                needed: cells,
                budget: config.layer_budget,
            });
        }
        let len = n as usize + 1;
        let mut layers = Vec::with_capacity(parts.len() + 1);
        let mut base = vec![BigUint::zero(); len];
        base[0] = BigUint::one();
        layers.push(base);
        for (m, rho, _) in &parts {
            let mut cur = layers.last().unwrap().clone();
            let m = *m as usize;
            // multiply by (1 - q^m)^{-ϱ}: ϱ passes of a prefix recurrence
            for _ in 0..*rho {
                for x in m..len {
                    let prev = cur[x - m].clone();
                    cur[x] += prev;
                }
            }
            layers.push(cur);
        }
        debug_assert_eq!(layers.last().unwrap()[n as usize], table.p[n as usize]);
        Ok(Self {
            rank: table.rank,
            n,
            parts,
            layers,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Draws one representation, exactly uniformly.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Representation {
        let mut rep = Representation::empty(self.rank);
        let mut x = self.n as usize;
        for i in (0..self.parts.len()).rev() {
            if x == 0 {
                break;
            }
            let (m, rho, labels) = &self.parts[i];
            let m = *m as usize;
            let total = &self.layers[i + 1][x];
            let mut u = rng.gen_biguint_below(total);
            let mut c = 0usize;
            loop {
                let w = multisets(*rho, c as u64) * &self.layers[i][x - c * m];
                if u < w {
                    break;
                }
                u -= w;
                c += 1;
            }
            if c > 0 {
                let alloc = unrank_composition(c as u64, *rho, rng);
                for (label, count) in labels.iter().zip(alloc) {
                    // labels were validated when the census was built
                    rep.add(label.clone(), count).expect("census weight");
                }
            }
            x -= c * m;
        }
        debug_assert_eq!(x, 0);
        rep
    }
}

/// Convenience wrapper building a fresh [`UniformSampler`] for one draw.
pub fn uniform_sample<R: Rng + ?Sized>(table: &CountTable, n: u64, rng: &mut R) -> Result<Representation> {
    Ok(UniformSampler::new(table, n)?.sample(rng))
}

fn binomial(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Number of multisets of size `c` over `rho` labels: `C(c + rho - 1, rho - 1)`.
fn multisets(rho: u64, c: u64) -> BigUint {
    binomial(c + rho - 1, rho - 1)
}

/// Uniform composition `(x_1, …, x_rho)` of `c` into `rho` nonnegative parts.
fn unrank_composition<R: Rng + ?Sized>(c: u64, rho: u64, rng: &mut R) -> Vec<u64> {
    let mut u = rng.gen_biguint_below(&multisets(rho, c));
    let mut out = Vec::with_capacity(rho as usize);
    let mut left = c;
    for label in 0..rho {
        let remaining_labels = rho - label - 1;
        if remaining_labels == 0 {
            out.push(left);
            break;
        }
        let mut t = 0;
        loop {
            let w = multisets(remaining_labels, left - t);
            if u < w {
                break;
            }
            u -= w;
            t += 1;
        }
        out.push(t);
        left -= t;
    }
    out
}

/// Every representation of dimension exactly `n`, by exhaustive recursion
/// over the census weights. Intended for small `n`.
pub fn enumerate_representations(census: &IrrepCensus, n: u64) -> Result<Vec<Representation>> {
    if census.bound() < n {
        return Err(Error::Mismatch(format!(
            "census bound {} below n = {n}",
            census.bound()
        )));
    }
    census.require_weights()?;
    let weights: Vec<(u64, &WeightVector)> = census.weights().filter(|(m, _)| *m <= n).collect();
    let mut out = Vec::new();
    let mut counts = vec![0u64; weights.len()];
    fn rec(
        idx: usize,
        left: u64,
        weights: &[(u64, &WeightVector)],
        counts: &mut [u64],
        rank: Rank,
        out: &mut Vec<Representation>,
    ) {
        if left == 0 {
            let items = weights.iter().zip(counts.iter()).map(|((_, k), &c)| ((*k).clone(), c));
            out.push(Representation::from_multiplicities(rank, items).expect("census weight"));
            return;
        }
        if idx == weights.len() {
            return;
        }
        let m = weights[idx].0;
        for c in 0..=left / m {
            counts[idx] = c;
            rec(idx + 1, left - c * m, weights, counts, rank, out);
        }
        counts[idx] = 0;
    }
    rec(0, n, &weights, &mut counts, census.rank(), &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn rank(r: u32) -> Rank {
        Rank::new(r).unwrap()
    }

    fn small(p: &[BigUint]) -> Vec<u64> {
        p.iter().map(|x| x.to_u64().unwrap()).collect()
    }

    /// Coefficients of `∏_k (1 - q^{a(k)})^{-1}` truncated at degree `n`, by
    /// expanding each geometric factor explicitly.
    fn naive_product(census: &IrrepCensus, n: usize) -> Vec<BigUint> {
        let mut poly = vec![BigUint::zero(); n + 1];
        poly[0] = BigUint::one();
        for (m, _) in census.weights() {
            let m = m as usize;
            if m > n {
                break;
            }
            let mut next = vec![BigUint::zero(); n + 1];
            for (i, c) in poly.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let mut j = i;
                while j <= n {
                    next[j] += c;
                    j += m;
                }
            }
            poly = next;
        }
        poly
    }

    fn partitions(n: u64, max: u64) -> u64 {
        if n == 0 {
            return 1;
        }
        (1..=max.min(n)).map(|k| partitions(n - k, k)).sum()
    }

    #[test]
    fn rank_one_partitions() {
        let t = count_representations(rank(1), 50).unwrap();
        for n in 0..=50 {
            assert_eq!(t.p(n).unwrap().to_u64().unwrap(), partitions(n, n), "n={n}");
        }
        assert_eq!(small(&t.values()[1..=6]), vec![1, 2, 3, 5, 7, 11]);
    }

    #[test]
    fn rank_two_values() {
        let t = count_representations(rank(2), 8).unwrap();
        assert_eq!(small(t.values()), vec![1, 1, 1, 3, 3, 3, 8, 8, 9]);
        assert!(t.p(9).is_err());
    }

    #[test]
    fn euler_transform_matches_naive_product() {
        for r in 1..=3 {
            let t = count_representations(rank(r), 200).unwrap();
            let naive = naive_product(t.census(), 200);
            assert_eq!(t.values(), &naive[..], "rank {r}");
        }
    }

    #[test]
    fn budget_enforced() {
        let census = Arc::new(enumerate_irreps(rank(2), 100, false).unwrap());
        let cfg = CountConfig {
            dp_budget: 50,
            ..CountConfig::default()
        };
        assert!(matches!(
            count_with_census(census, 100, &cfg),
            Err(Error::Budget { .. })
        ));
    }

    #[test]
    fn csv_tail() {
        let t = count_representations(rank(2), 8).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("n,p\n0,1\n"));
        assert!(s.trim_end().ends_with("8,9"));
    }

    #[test]
    fn enumeration_matches_counts() {
        let t = count_representations(rank(2), 14).unwrap();
        for n in 0..=14 {
            let all = enumerate_representations(t.census(), n).unwrap();
            assert_eq!(all.len() as u64, t.p(n).unwrap().to_u64().unwrap());
            for rep in &all {
                assert_eq!(rep.dim(), n);
            }
        }
    }

    #[test]
    fn sampler_unique_at_two() {
        let t = count_representations(rank(2), 2).unwrap();
        let s = UniformSampler::new(&t, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let triv = WeightVector::trivial(rank(2));
        for _ in 0..100 {
            let rep = s.sample(&mut rng);
            assert_eq!(rep.multiplicity(&triv), 2);
            assert_eq!(rep.distinct(), 1);
        }
    }

    fn frequencies(r: u32, n: u64, draws: usize) -> (usize, HashMap<Representation, usize>) {
        let t = count_representations(rank(r), n).unwrap();
        let all = enumerate_representations(t.census(), n).unwrap();
        let s = UniformSampler::new(&t, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut freq = HashMap::new();
        for _ in 0..draws {
            let rep = s.sample(&mut rng);
            assert_eq!(rep.recompute_dim(), Some(n));
            *freq.entry(rep).or_insert(0) += 1;
        }
        for rep in freq.keys() {
            assert!(all.contains(rep));
        }
        (all.len(), freq)
    }

    #[test]
    fn sampler_uniform_small_cases() {
        for (r, n, expected) in [(2u32, 3u64, 3usize), (1, 4, 5)] {
            let draws = 100_000;
            let (count, freq) = frequencies(r, n, draws);
            assert_eq!(count, expected);
            assert_eq!(freq.len(), expected);
            let p = 1.0 / expected as f64;
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
            for &f in freq.values() {
                assert!((f as f64 - draws as f64 * p).abs() < 3.0 * sigma + 1.0);
            }
        }
    }

    #[test]
    fn compositions_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut freq = HashMap::new();
        for _ in 0..60_000 {
            let v = unrank_composition(3, 3, &mut rng);
            assert_eq!(v.iter().sum::<u64>(), 3);
            *freq.entry(v).or_insert(0usize) += 1;
        }
        // C(5, 2) = 10 compositions
        assert_eq!(freq.len(), 10);
        for &f in freq.values() {
            assert!((f as f64 - 6000.0).abs() < 400.0);
        }
    }

    #[test]
    fn multiplicity_law_sums_to_one() {
        let t = count_representations(rank(2), 300).unwrap();
        let k = WeightVector::trivial(rank(2));
        let law = t.multiplicity_law(&k, 300).unwrap();
        let s: f64 = law.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        // n = 1: only the trivial irrep fits, X = 1 surely
        let law = t.multiplicity_law(&k, 1).unwrap();
        assert_eq!(law, vec![0.0, 1.0]);
    }

    #[test]
    fn ratio_of_huge_integers() {
        let a = BigUint::one() << 5000u32;
        let b = (BigUint::one() << 5001u32) + 1u32;
        assert!((ratio_f64(&a, &b) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn representation_serializes_as_pairs() {
        let k = WeightVector::new(rank(2), vec![2, 1]).unwrap();
        let rep = Representation::from_multiplicities(rank(2), [(k, 2), (WeightVector::trivial(rank(2)), 0)]).unwrap();
        assert_eq!(rep.dim(), 6);
        assert_eq!(serde_json::to_string(&rep).unwrap(), r#"{"dim":6,"mult":[[[2,1],2]]}"#);
    }
}
