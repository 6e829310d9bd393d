//! First-stage approximation operators: Bernstein sampling, the iterated
//! operator `U_{n,r} = I - (I - B_n)^r`, Kantorovich averages and
//! near-best polynomial proxies.
//!
//! Every operator returns the degree-`n` Bernstein coefficients that are
//! handed to the quantizer.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bernstein::{power_to_bernstein_exact, BernsteinPoly};
use crate::binomial::{binomial_pmf, choose_exact};
use crate::error::{Error, Result};
use crate::functions::FunctionSpec;
use crate::quadrature::integrate;
use crate::sigma_delta::max_abs;

/// Largest degree accepted by [`near_best_proxy`].
pub const PROXY_MAX_DEGREE: usize = 128;

/// Absolute tolerance on each Kantorovich cell average.
pub const KANTOROVICH_TOL: f64 = 1e-10;

/// Values `g(k/n)`, `k = 0..=n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub n: usize,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParameter("a grid function needs at least two values".into()));
        }
        Ok(Self { n: values.len() - 1, values })
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }

    /// `B_n g` as a Bernstein polynomial.
    pub fn to_bernstein(&self) -> BernsteinPoly {
        BernsteinPoly::new(self.values.clone()).expect("grid functions are non-empty")
    }
}

pub fn sample_grid(f: &FunctionSpec, n: usize) -> Result<GridFunction> {
    if n == 0 {
        return Err(Error::InvalidParameter("degree must be at least 1".into()));
    }
    GridFunction::new((0..=n).map(|k| f.eval(k as f64 / n as f64)).collect())
}

/// Discretized `B_n`: entry `[i][k] = p_{n,k}(i/n)`.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    n: usize,
    data: Vec<f64>,
}

impl OperatorMatrix {
    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.n + 1;
        &self.data[i * m..(i + 1) * m]
    }

    /// Grid values of `B_n g`.
    pub fn apply(&self, g: &[f64]) -> Result<Vec<f64>> {
        let m = self.n + 1;
        if g.len() != m {
            return Err(Error::LengthMismatch { expected: m, got: g.len() });
        }
        Ok(self.data.par_chunks(m).map(|row| row.iter().zip(g).map(|(a, b)| a * b).sum()).collect())
    }
}

pub fn operator_matrix(n: usize) -> Result<OperatorMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("degree must be at least 1".into()));
    }
    let m = n + 1;
    let mut data = vec![0.0; m * m];
    data.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
        let x = i as f64 / n as f64;
        for (k, v) in row.iter_mut().enumerate() {
            *v = binomial_pmf(n as u64, k as u64, x);
        }
    });
    Ok(OperatorMatrix { n, data })
}

/// Coefficients of `P_{r-2}` in `f_{n,r} = B^(r-1) f + P_{r-2}(B)(I - B) f`
/// and their absolute sum `C_r`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrCoefficients {
    pub order: usize,
    pub coeffs: Vec<i64>,
    pub c_r: u64,
}

/// `c_j = 1 + (-1)^j C(r-1, j+1)` for `j = 0..=r-2`.
pub fn pr_coeffs(r: usize) -> Result<PrCoefficients> {
    if !(2..=60).contains(&r) {
        return Err(Error::InvalidParameter(format!("order must lie in 2..=60, got {r}")));
    }
    let coeffs: Vec<i64> = (0..=r - 2)
        .map(|j| {
            let c = i64::try_from(choose_exact((r - 1) as u64, (j + 1) as u64)).expect("fits for r <= 60");
            if j % 2 == 0 {
                1 + c
            } else {
                1 - c
            }
        })
        .collect();
    let c_r = coeffs.iter().map(|c| c.unsigned_abs()).sum();
    Ok(PrCoefficients { order: r, coeffs, c_r })
}

/// Grid values of `f_{n,r}`, so that `U_{n,r} f = B_n f_{n,r}`.
pub fn iterated_u_coeffs(f: &FunctionSpec, n: usize, r: usize) -> Result<GridFunction> {
    let g = sample_grid(f, n)?;
    if r <= 1 {
        if r == 0 {
            return Err(Error::InvalidParameter("order must be at least 1".into()));
        }
        return Ok(g);
    }
    let m = operator_matrix(n)?;
    iterated_u_from_grid(&g, r, &m)
}

/// `f_{n,r} = Q_r(B) g` with `Q_r(t) = (1 - (1 - t)^r) / t = sum_j (-1)^j C(r, j+1) t^j`.
pub fn iterated_u_from_grid(g: &GridFunction, r: usize, m: &OperatorMatrix) -> Result<GridFunction> {
    if r == 0 {
        return Err(Error::InvalidParameter("order must be at least 1".into()));
    }
    if m.degree() != g.n {
        return Err(Error::LengthMismatch { expected: m.degree() + 1, got: g.values.len() });
    }
    let q: Vec<f64> = (0..r)
        .map(|j| {
            let c = crate::binomial::choose_f64(r as u64, (j + 1) as u64);
            if j % 2 == 0 {
                c
            } else {
                -c
            }
        })
        .collect();
    // Horner in the operator
    let mut acc: Vec<f64> = g.values.iter().map(|v| q[r - 1] * v).collect();
    for j in (0..r - 1).rev() {
        acc = m.apply(&acc)?;
        for (a, v) in acc.iter_mut().zip(&g.values) {
            *a += q[j] * v;
        }
    }
    GridFunction::new(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Admissibility {
    pub admissible: bool,
    pub max_abs: f64,
    pub mu: f64,
}

pub fn check_onebit_admissible(g: &GridFunction, mu: f64) -> Admissibility {
    let m = g.max_abs();
    Admissibility { admissible: m <= mu, max_abs: m, mu }
}

/// `values[k] = (n+1) int_{k/(n+1)}^{(k+1)/(n+1)} f`.
pub fn kantorovich_coeffs(f: &FunctionSpec, n: usize) -> Result<GridFunction> {
    if n == 0 {
        return Err(Error::InvalidParameter("degree must be at least 1".into()));
    }
    let h = 1.0 / (n + 1) as f64;
    let values = (0..=n)
        .into_par_iter()
        .map(|k| {
            let a = k as f64 * h;
            let b = if k == n { 1.0 } else { (k + 1) as f64 * h };
            integrate(|x| f.eval(x), a, b, KANTOROVICH_TOL * h).map(|v| v / h)
        })
        .collect::<Result<Vec<f64>>>()?;
    GridFunction::new(values)
}

/// Norm index `p` in `[1, inf]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Norm {
    Lp(f64),
    Sup,
}

impl Norm {
    pub fn parse(s: &str) -> Result<Norm> {
        match s.trim() {
            "inf" | "Inf" | "infinity" | "∞" | "sup" => Ok(Norm::Sup),
            t => {
                let p: f64 =
                    t.parse().map_err(|_| Error::InvalidParameter(format!("cannot parse norm index {t:?}")))?;
                Norm::lp(p)
            }
        }
    }

    pub fn lp(p: f64) -> Result<Norm> {
        if p.is_infinite() && p > 0.0 {
            Ok(Norm::Sup)
        } else if p >= 1.0 {
            Ok(Norm::Lp(p))
        } else {
            Err(Error::InvalidParameter(format!("norm index must lie in [1, inf], got {p}")))
        }
    }

    pub fn label(&self) -> String {
        match self {
            Norm::Sup => "inf".into(),
            Norm::Lp(p) => p.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProxyKind {
    ChebyshevInterpolation,
    LegendreProjection,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProxyApproximation {
    pub poly: BernsteinPoly,
    pub kind: ProxyKind,
    /// Degree left after dropping negligible trailing coefficients.
    pub effective_degree: usize,
    /// `|c_{n-1}| + |c_n|` of the Chebyshev expansion; `None` for projections.
    pub error_estimate: Option<f64>,
    pub condition: f64,
}

// T_m(2x - 1) in the power basis, m = 0..=n
fn shifted_chebyshev_power(n: usize) -> Vec<Vec<BigInt>> {
    let mut t: Vec<Vec<BigInt>> = vec![vec![BigInt::one()]];
    if n >= 1 {
        t.push(vec![BigInt::from(-1), BigInt::from(2)]);
    }
    for m in 2..=n {
        let mut next = vec![BigInt::zero(); m + 1];
        for (i, c) in t[m - 1].iter().enumerate() {
            next[i] -= c * 2;
            next[i + 1] += c * 4;
        }
        for (i, c) in t[m - 2].iter().enumerate() {
            next[i] -= c;
        }
        t.push(next);
    }
    t
}

// P_m(2x - 1) in the power basis: sum_i (-1)^(m+i) C(m,i) C(m+i,i) x^i
fn shifted_legendre_power(m: usize) -> Vec<BigInt> {
    (0..=m)
        .map(|i| {
            let c = BigInt::from(choose_exact(m as u64, i as u64)) * BigInt::from(choose_exact((m + i) as u64, i as u64));
            if (m + i).is_multiple_of(2) {
                c
            } else {
                -c
            }
        })
        .collect()
}

fn shifted_legendre_eval(m: usize, x: f64) -> f64 {
    let t = 2.0 * x - 1.0;
    let (mut p0, mut p1) = (1.0, t);
    if m == 0 {
        return p0;
    }
    for j in 1..m {
        let p2 = ((2 * j + 1) as f64 * t * p1 - j as f64 * p0) / (j + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

fn chop(c: &[f64], rel: f64) -> usize {
    let big = max_abs(c);
    let mut last = 0;
    for (i, v) in c.iter().enumerate() {
        if v.abs() > rel * big {
            last = i;
        }
    }
    last
}

fn to_bernstein(
    basis: impl Fn(usize) -> Vec<BigInt>,
    c: &[f64],
    m: usize,
    n: usize,
) -> Result<(BernsteinPoly, f64)> {
    let mut a = vec![BigRational::zero(); m + 1];
    for (j, cj) in c.iter().enumerate().take(m + 1) {
        let cj = BigRational::from_float(*cj).ok_or_else(|| Error::InvalidParameter("non-finite proxy coefficient".into()))?;
        if cj.is_zero() {
            continue;
        }
        for (i, b) in basis(j).into_iter().enumerate() {
            a[i] += &cj * BigRational::from_integer(b);
        }
    }
    let conv = power_to_bernstein_exact(&a, n)?;
    Ok((conv.poly, conv.condition))
}

/// Polynomial of degree `n` close to the best approximation in the given
/// norm: Chebyshev interpolation for `p = inf`, Legendre projection for
/// `p = 2`, and the projection again for any other finite `p`.
pub fn near_best_proxy(f: &FunctionSpec, n: usize, norm: Norm) -> Result<ProxyApproximation> {
    if n == 0 {
        return Err(Error::InvalidParameter("degree must be at least 1".into()));
    }
    if n > PROXY_MAX_DEGREE {
        return Err(Error::DegreeTooLarge { n, cap: PROXY_MAX_DEGREE, what: "polynomial proxies" });
    }
    match norm {
        Norm::Sup => {
            let m = n + 1;
            let theta: Vec<f64> = (0..m).map(|j| std::f64::consts::PI * (j as f64 + 0.5) / m as f64).collect();
            let fx: Vec<f64> = theta.iter().map(|t| f.eval(0.5 * (1.0 + t.cos()))).collect();
            let c: Vec<f64> = (0..=n)
                .map(|k| {
                    let s: f64 = fx.iter().zip(&theta).map(|(v, t)| v * (k as f64 * t).cos()).sum();
                    let w = if k == 0 { 1.0 } else { 2.0 };
                    w * s / m as f64
                })
                .collect();
            let estimate = c[n].abs() + if n >= 1 { c[n - 1].abs() } else { 0.0 };
            let eff = chop(&c, 100.0 * f64::EPSILON);
            let table = shifted_chebyshev_power(eff);
            let (poly, condition) = to_bernstein(|j| table[j].clone(), &c, eff, n)?;
            Ok(ProxyApproximation {
                poly,
                kind: ProxyKind::ChebyshevInterpolation,
                effective_degree: eff,
                error_estimate: Some(estimate),
                condition,
            })
        }
        Norm::Lp(_) => {
            let c = (0..=n)
                .into_par_iter()
                .map(|j| {
                    let v = integrate(|x| f.eval(x) * shifted_legendre_eval(j, x), 0.0, 1.0, 1e-13)?;
                    Ok((2 * j + 1) as f64 * v)
                })
                .collect::<Result<Vec<f64>>>()?;
            let eff = chop(&c, 1e-12);
            let (poly, condition) = to_bernstein(shifted_legendre_power, &c, eff, n)?;
            Ok(ProxyApproximation {
                poly,
                kind: ProxyKind::LegendreProjection,
                effective_degree: eff,
                error_estimate: None,
                condition,
            })
        }
    }
}
