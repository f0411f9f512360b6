//! Statistics of a representation: largest constituent dimension `D`,
//! height `H`, number of constituents `N`, individual multiplicities and the
//! shape function `φ`, raw and normalized.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact_count::Representation;
use crate::limits::LimitConstants;
use crate::real::{from_u64, Real};
use crate::weights::{HalfInt, WeightVector};

/// `D = max_{X_k > 0} a(k)`.
pub fn stat_max_dim(rep: &Representation) -> Result<u64> {
    rep.iter()
        .map(|(k, _)| k.dim().unwrap_or(u64::MAX))
        .max()
        .ok_or(Error::EmptyRepresentation)
}

/// `H = max_{X_k > 0} L(k - 1)`.
pub fn stat_height(rep: &Representation) -> Result<HalfInt> {
    rep.iter()
        .map(|(k, _)| k.height())
        .max()
        .ok_or(Error::EmptyRepresentation)
}

/// `N = Σ X_k`.
pub fn stat_num_irreps(rep: &Representation) -> u64 {
    rep.iter().map(|(_, x)| x).sum()
}

/// `φ(t) = Σ_{k_j ≥ t_j ∀j} X_k`.
pub fn stat_shape<T: Real>(rep: &Representation, t: &[T]) -> Result<u64> {
    if t.len() != rep.rank().as_usize() {
        return Err(Error::Mismatch(format!(
            "shape argument of length {} for rank {}",
            t.len(),
            rep.rank()
        )));
    }
    Ok(rep
        .iter()
        .filter(|(k, _)| k.components().iter().zip(t).all(|(&kj, &tj)| from_u64::<T>(kj) >= tj))
        .map(|(_, x)| x)
        .sum())
}

/// `(D - a_n^{[D]}) / b_n^{[D]}`.
pub fn normalize_max_dim<T: Real>(d: u64, c: &LimitConstants<T>) -> T {
    (from_u64::<T>(d) - c.a_d) / c.b_d
}

/// `(H - a_n^{[H]}) / b_n^{[H]}`.
pub fn normalize_height<T: Real>(h: HalfInt, c: &LimitConstants<T>) -> T {
    (h.to_real::<T>() - c.a_h) / c.b_h
}

/// `s^{r(r+1)/2} N`.
pub fn normalize_num_irreps<T: Real>(n: u64, c: &LimitConstants<T>) -> T {
    c.s_n.powi(c.rank.degree() as i32) * from_u64(n)
}

/// `a(s k) X_k = s^{r(r+1)/2} a(k) X_k`.
pub fn normalize_multiplicity<T: Real>(k: &WeightVector, x: u64, c: &LimitConstants<T>) -> T {
    let a: T = crate::weights::dim_real(&k.components().iter().map(|&v| c.s_n * from_u64(v)).collect::<Vec<T>>());
    a * from_u64(x)
}

/// `s^r φ(t/s)`, with `φ(t/s)` already counted.
pub fn normalize_shape<T: Real>(phi: u64, c: &LimitConstants<T>) -> T {
    c.s_n.powi(c.rank.get() as i32) * from_u64(phi)
}

/// Which statistics to record for each sample.
#[derive(Clone, Debug, Default)]
pub struct StatRequest {
    /// Weights whose multiplicities are recorded.
    pub mult_keys: Vec<WeightVector>,
    /// Shape arguments `t` in limit units; `φ` is counted at `t/s`.
    pub shape_grid: Vec<Vec<f64>>,
}

/// Diagonal grid `t = (τ, …, τ)` with `τ` geometric on `[0.1, 2]`; past
/// `τ = 2` the limit shape is below the census tail bounds.
pub fn default_shape_grid(r: usize, points: usize) -> Vec<Vec<f64>> {
    let points = points.max(2);
    (0..points)
        .map(|i| {
            let tau = 0.1 * 20f64.powf(i as f64 / (points - 1) as f64);
            vec![tau; r]
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct RawStats {
    pub d: Option<u64>,
    pub h: Option<HalfInt>,
    pub n: u64,
    pub mult: Vec<u64>,
    pub shape: Vec<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalizedStats {
    pub d: Option<f64>,
    pub h: Option<f64>,
    pub n: f64,
    pub mult: Vec<f64>,
    pub shape: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StatMeta {
    pub n: u64,
    pub r: u32,
    pub mode: String,
    pub seed: u64,
    pub index: u64,
}

/// Raw and normalized statistics of one sampled representation.
#[derive(Clone, Debug, Serialize)]
pub struct StatSample {
    pub raw: RawStats,
    pub normalized: NormalizedStats,
    pub meta: StatMeta,
}

impl StatSample {
    pub fn compute(
        rep: &Representation,
        request: &StatRequest,
        constants: &LimitConstants<f64>,
        meta: StatMeta,
    ) -> Result<Self> {
        if constants.rank != rep.rank() || u64::from(constants.rank.get()) != u64::from(meta.r) {
            return Err(Error::Mismatch("rank of sample and constants differ".into()));
        }
        // Boltzmann draws have a random dimension and are normalized at the
        // target n; every other mode must hit n exactly.
        if constants.n != meta.n || (meta.mode != "boltzmann" && rep.dim() != meta.n) {
            return Err(Error::Mismatch(format!(
                "constants for n = {}, sample of dimension {} (declared {})",
                constants.n,
                rep.dim(),
                meta.n
            )));
        }
        let d = stat_max_dim(rep).ok();
        let h = stat_height(rep).ok();
        let n = stat_num_irreps(rep);
        let mult: Vec<u64> = request.mult_keys.iter().map(|k| rep.multiplicity(k)).collect();
        let s = constants.s_n;
        let shape = request
            .shape_grid
            .iter()
            .map(|t| stat_shape(rep, &t.iter().map(|&x| x / s).collect::<Vec<f64>>()))
            .collect::<Result<Vec<u64>>>()?;
        let normalized = NormalizedStats {
            d: d.map(|d| normalize_max_dim(d, constants)),
            h: h.map(|h| normalize_height(h, constants)),
            n: normalize_num_irreps(n, constants),
            mult: request
                .mult_keys
                .iter()
                .zip(&mult)
                .map(|(k, &x)| normalize_multiplicity(k, x, constants))
                .collect(),
            shape: shape.iter().map(|&p| normalize_shape(p, constants)).collect(),
        };
        Ok(Self {
            raw: RawStats { d, h, n, mult, shape },
            normalized,
            meta,
        })
    }
}
