//! Globally adaptive Gauss–Kronrod (7/15) quadrature, nested for
//! multidimensional integrals whose inner bounds depend on outer variables.

use crate::error::{Error, Result};
use crate::real::{lit, Estimate, Real};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Accuracy request for a quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadSpec<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    /// Hard cap on the number of panels per one-dimensional integral.
    pub max_subdivisions: usize,
}

impl<T: Real> QuadSpec<T> {
    pub fn new(abs_tol: T, rel_tol: T) -> Self {
        Self {
            abs_tol,
            rel_tol,
            max_subdivisions: 2000,
        }
    }

    /// Tolerance handed to inner integrals of a nested quadrature.
    fn inner(&self) -> Self {
        Self {
            abs_tol: self.abs_tol * lit(0.1),
            rel_tol: self.rel_tol * lit(0.1),
            max_subdivisions: self.max_subdivisions,
        }
    }
}

impl<T: Real> Default for QuadSpec<T> {
    fn default() -> Self {
        let eps = T::epsilon();
        // ~1e-10 in f64, ~1e-4 in f32
        let rel = (eps.sqrt() * lit(1e-2)).max(eps * lit(100.0));
        Self::new(rel * lit(1e-3), rel)
    }
}

/// Integration domain for one variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain<T> {
    /// `[a, b]` with a smooth integrand.
    Finite(T, T),
    /// `[a, b]` with possible integrable algebraic singularities at either end.
    /// A sigmoidal change of variables flattens them.
    Singular(T, T),
    /// `[a, ∞)`, mapped onto `[0, 1)` by `x = a + u/(1-u)`.
    ToInfinity(T),
    /// `[a, ∞)` with a possible algebraic singularity at `a`: `[a, a+1]` is
    /// treated as [`Domain::Singular`], the rest as [`Domain::ToInfinity`].
    SingularToInfinity(T),
}

#[derive(Clone, Copy)]
struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn gk15<T: Real, F: FnMut(T) -> (T, T)>(f: &mut F, a: T, b: T) -> Panel<T> {
    let half = (b - a) * lit(0.5);
    let center = (a + b) * lit(0.5);
    let (fc, ec) = f(center);
    let mut kron = fc * lit(WGK[7]);
    let mut gauss = fc * lit(WG[3]);
    let mut inner_err = ec * lit(WGK[7]);
    for i in 0..7 {
        let dx = half * lit(XGK[i]);
        let (f1, e1) = f(center - dx);
        let (f2, e2) = f(center + dx);
        kron = kron + (f1 + f2) * lit(WGK[i]);
        inner_err = inner_err + (e1 + e2) * lit(WGK[i]);
        if i % 2 == 1 {
            gauss = gauss + (f1 + f2) * lit(WG[i / 2]);
        }
    }
    let value = kron * half;
    let err = ((kron - gauss) * half).abs() + inner_err * half.abs();
    Panel {
        a,
        b,
        value,
        error: err,
    }
}

/// Core adaptive loop. The integrand returns `(value, absolute error of value)`
/// so inner quadrature errors propagate into the outer estimate.
fn adaptive<T: Real, F: FnMut(T) -> (T, T)>(
    mut f: F,
    a: T,
    b: T,
    spec: &QuadSpec<T>,
    what: &'static str,
) -> Result<Estimate<T>> {
    let mut panels = vec![gk15(&mut f, a, b)];
    loop {
        let total: T = panels.iter().map(|p| p.value).sum();
        let err: T = panels.iter().map(|p| p.error).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::Convergence {
                what,
                detail: "non-finite integrand value".into(),
            });
        }
        let target = spec.abs_tol.max(spec.rel_tol * total.abs());
        if err <= target {
            return Ok(Estimate::new(total, err));
        }
        if panels.len() >= spec.max_subdivisions {
            return Err(Error::Convergence {
                what,
                detail: format!(
                    "{} panels, estimate {:e} ± {:e} (target {:e})",
                    panels.len(),
                    total.to_f64().unwrap_or(f64::NAN),
                    err.to_f64().unwrap_or(f64::NAN),
                    target.to_f64().unwrap_or(f64::NAN)
                ),
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |(bi, be), (i, p)| {
                if p.error > be {
                    (i, p.error)
                } else {
                    (bi, be)
                }
            });
        let p = panels.swap_remove(worst);
        let mid = (p.a + p.b) * lit(0.5);
        if mid <= p.a || mid >= p.b {
            // interval exhausted at machine precision; accept what we have
            let total: T = panels.iter().map(|q| q.value).sum::<T>() + p.value;
            let err: T = panels.iter().map(|q| q.error).sum::<T>() + p.error;
            return Ok(Estimate::new(total, err));
        }
        panels.push(gk15(&mut f, p.a, mid));
        panels.push(gk15(&mut f, mid, p.b));
    }
}

/// Evaluates `f` over a [`Domain`] after the appropriate change of variables.
fn integrate_domain<T: Real, F: FnMut(T) -> (T, T)>(
    mut f: F,
    domain: Domain<T>,
    spec: &QuadSpec<T>,
    what: &'static str,
) -> Result<Estimate<T>> {
    if let Domain::SingularToInfinity(a) = domain {
        let b = a + T::one();
        let head = basic_domain(&mut f, Domain::Singular(a, b), spec, what)?;
        let tail = basic_domain(&mut f, Domain::ToInfinity(b), spec, what)?;
        return Ok(Estimate::new(head.value + tail.value, head.error + tail.error));
    }
    basic_domain(&mut f, domain, spec, what)
}

fn basic_domain<T: Real, F: FnMut(T) -> (T, T)>(
    f: &mut F,
    domain: Domain<T>,
    spec: &QuadSpec<T>,
    what: &'static str,
) -> Result<Estimate<T>> {
    match domain {
        Domain::Finite(a, b) => adaptive(f, a, b, spec, what),
        Domain::Singular(a, b) => {
            let width = b - a;
            let three: T = lit(3.0);
            let g = move |u: T| {
                let v = T::one() - u;
                let (u3, v3) = (u.powi(3), v.powi(3));
                let den = u3 + v3;
                let phi = u3 / den;
                let dphi = three * u * u * v * v / (den * den) * width;
                if dphi == T::zero() {
                    return (T::zero(), T::zero());
                }
                let (val, err) = f(a + width * phi);
                (val * dphi, err * dphi)
            };
            adaptive(g, T::zero(), T::one(), spec, what)
        }
        Domain::ToInfinity(a) => {
            let g = move |u: T| {
                let v = T::one() - u;
                let jac = T::one() / (v * v);
                let (val, err) = f(a + u / v);
                if val == T::zero() && err == T::zero() {
                    return (T::zero(), T::zero());
                }
                (val * jac, err * jac)
            };
            adaptive(g, T::zero(), T::one(), spec, what)
        }
        Domain::SingularToInfinity(_) => unreachable!("split by integrate_domain"),
    }
}

/// One-dimensional integral of `f` over `domain`.
pub fn integrate<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    domain: Domain<T>,
    spec: &QuadSpec<T>,
) -> Result<Estimate<T>> {
    integrate_domain(|x| (f(x), T::zero()), domain, spec, "quadrature")
}

/// Nested integral `∫ dx_0 ∫ dx_1 … f(x)` over `dim` variables, where the
/// domain of `x_i` may depend on `x_0..x_i` through `bounds(i, prefix)`.
pub fn integrate_nested<T, B, F>(
    dim: usize,
    bounds: &B,
    f: &F,
    spec: &QuadSpec<T>,
) -> Result<Estimate<T>>
where
    T: Real,
    B: Fn(usize, &[T]) -> Domain<T>,
    F: Fn(&[T]) -> T,
{
    let mut prefix = Vec::with_capacity(dim);
    nested_level(dim, &mut prefix, bounds, f, spec)
}

fn nested_level<T, B, F>(
    dim: usize,
    prefix: &mut Vec<T>,
    bounds: &B,
    f: &F,
    spec: &QuadSpec<T>,
) -> Result<Estimate<T>>
where
    T: Real,
    B: Fn(usize, &[T]) -> Domain<T>,
    F: Fn(&[T]) -> T,
{
    let level = prefix.len();
    let domain = bounds(level, prefix);
    if level + 1 == dim {
        return integrate_domain(
            |x| {
                prefix.push(x);
                let v = f(prefix);
                prefix.pop();
                (v, T::zero())
            },
            domain,
            spec,
            "nested quadrature",
        );
    }
    let inner_spec = spec.inner();
    let mut failure: Option<Error> = None;
    let est = integrate_domain(
        |x| {
            if failure.is_some() {
                return (T::zero(), T::zero());
            }
            prefix.push(x);
            let res = nested_level(dim, prefix, bounds, f, &inner_spec);
            prefix.pop();
            match res {
                Ok(e) => (e.value, e.error),
                Err(e) => {
                    failure = Some(e);
                    (T::zero(), T::zero())
                }
            }
        },
        domain,
        spec,
        "nested quadrature",
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(est),
    }
}
