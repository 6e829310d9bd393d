//! Error measurement on grids, L^p norms, envelopes and log-log rate fits.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::Norm;
use crate::bernstein::{basis_diff, BernsteinPoly};
use crate::error::{check_unit, Error, Result};
use crate::functions::FunctionSpec;
use crate::sigma_delta::QuantizationResult;

/// Grid size used for norms when nothing else is configured.
pub const DEFAULT_GRID: usize = 2001;

/// Interior interval used for sup norms by default.
pub const DEFAULT_INTERVAL: (f64, f64) = (0.2, 0.8);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `1 / (1 + sqrt(n X))`
    First,
    /// `1 / (1 + n X)`
    Second,
    /// `n^(-r/2) X^(-r)`
    General,
}

impl Regime {
    pub fn for_order(r: usize) -> Regime {
        match r {
            1 => Regime::First,
            2 => Regime::Second,
            _ => Regime::General,
        }
    }
}

/// Shape of the error bound at `x` with unit constants; `X = x(1-x)`.
pub fn envelope(n: usize, r: usize, x: f64, regime: Regime) -> Result<f64> {
    check_unit(x)?;
    let ok = match regime {
        Regime::First => r == 1,
        Regime::Second => r == 2,
        Regime::General => r >= 1,
    };
    if !ok {
        return Err(Error::InvalidParameter(format!("regime {regime:?} does not match order {r}")));
    }
    let nx = n as f64 * x * (1.0 - x);
    Ok(match regime {
        Regime::First => 1.0 / (1.0 + nx.sqrt()),
        Regime::Second => 1.0 / (1.0 + nx),
        Regime::General => {
            let xx = x * (1.0 - x);
            if xx == 0.0 {
                f64::INFINITY
            } else {
                (n as f64).powf(-(r as f64) / 2.0) * xx.powi(-(r as i32))
            }
        }
    })
}

fn simpson_weights(m: usize) -> Vec<f64> {
    // composite Simpson on m uniform points over [0, 1]; a trailing odd
    // interval is closed with the trapezoid rule
    let intervals = m - 1;
    let h = 1.0 / intervals as f64;
    let mut w = vec![0.0; m];
    let even = intervals - intervals % 2;
    for i in (0..even).step_by(2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if even < intervals {
        w[m - 2] += h / 2.0;
        w[m - 1] += h / 2.0;
    }
    w
}

/// L^p norm of samples on a uniform grid over `[0, 1]` (endpoints included).
pub fn lp_norm(samples: &[f64], p: Norm) -> Result<f64> {
    match p {
        Norm::Sup => Ok(samples.iter().fold(0.0f64, |m, v| m.max(v.abs()))),
        Norm::Lp(p) => {
            if samples.len() < 2 {
                return Err(Error::InvalidParameter("L^p norms need at least two samples".into()));
            }
            let w = simpson_weights(samples.len());
            let s: f64 = samples.iter().zip(&w).map(|(v, w)| w * v.abs().powf(p)).sum();
            Ok(s.powf(1.0 / p))
        }
    }
}

/// L^p norm of a function sampled on `points` uniform points.
pub fn lp_norm_of<F: Fn(f64) -> f64 + Sync>(f: F, p: Norm, points: usize) -> Result<f64> {
    if points < 2 {
        return Err(Error::InvalidParameter("L^p norms need at least two samples".into()));
    }
    let s: Vec<f64> = (0..points).into_par_iter().map(|i| f(i as f64 / (points - 1) as f64)).collect();
    lp_norm(&s, p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares fit of `ln(error)` against `ln(n)`.
pub fn rate_fit(ns: &[usize], errors: &[f64]) -> Result<RateFit> {
    if ns.len() != errors.len() {
        return Err(Error::LengthMismatch { expected: ns.len(), got: errors.len() });
    }
    if ns.len() < 4 {
        return Err(Error::InvalidParameter(format!("rate fits need at least 4 points, got {}", ns.len())));
    }
    if let Some(bad) = errors.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidParameter(format!("rate fits need positive errors, got {bad}")));
    }
    if ns.contains(&0) {
        return Err(Error::InvalidParameter("rate fits need positive degrees".into()));
    }
    let xs: Vec<f64> = ns.iter().map(|n| (*n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("rate fits need at least two distinct degrees".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(RateFit { slope, intercept: my - slope * mx, r_squared })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorReport {
    pub n: usize,
    pub grid: Vec<f64>,
    pub f_values: Vec<f64>,
    pub q_values: Vec<f64>,
    pub pointwise_error: Vec<f64>,
    /// Keyed by norm label: "1", "2", "inf".
    pub lp_norms: BTreeMap<String, f64>,
    pub interval: (f64, f64),
    pub sup_on_interval: f64,
    pub envelope: Option<Vec<f64>>,
    pub slope: Option<f64>,
}

/// `|f(x_i) - Q(x_i)|` on `grid_size` uniform points including both endpoints.
pub fn pointwise_error(f: &FunctionSpec, q: &BernsteinPoly, grid_size: usize) -> Result<ErrorReport> {
    if grid_size < 2 {
        return Err(Error::InvalidParameter("grid size must be at least 2".into()));
    }
    let grid: Vec<f64> = (0..grid_size).map(|i| i as f64 / (grid_size - 1) as f64).collect();
    let pairs = grid.par_iter().map(|&x| Ok((f.eval(x), q.eval(x)?))).collect::<Result<Vec<(f64, f64)>>>()?;
    let (f_values, q_values): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let pointwise_error: Vec<f64> = f_values.iter().zip(&q_values).map(|(a, b)| (a - b).abs()).collect();
    let mut lp_norms = BTreeMap::new();
    for p in [Norm::Lp(1.0), Norm::Lp(2.0), Norm::Sup] {
        lp_norms.insert(p.label(), lp_norm(&pointwise_error, p)?);
    }
    let mut report = ErrorReport {
        n: q.degree(),
        grid,
        f_values,
        q_values,
        pointwise_error,
        lp_norms,
        interval: DEFAULT_INTERVAL,
        sup_on_interval: 0.0,
        envelope: None,
        slope: None,
    };
    report.set_interval(DEFAULT_INTERVAL.0, DEFAULT_INTERVAL.1)?;
    Ok(report)
}

impl ErrorReport {
    /// Restrict the sup norm to grid points inside `[a, b]`.
    pub fn set_interval(&mut self, a: f64, b: f64) -> Result<()> {
        if !(0.0 <= a && a < b && b <= 1.0) {
            return Err(Error::InvalidParameter(format!("interval [{a}, {b}] is not inside [0, 1]")));
        }
        self.interval = (a, b);
        self.sup_on_interval = self
            .grid
            .iter()
            .zip(&self.pointwise_error)
            .filter(|(x, _)| **x >= a && **x <= b)
            .fold(0.0f64, |m, (_, e)| m.max(*e));
        Ok(())
    }

    pub fn set_envelope(&mut self, r: usize, regime: Regime) -> Result<()> {
        let env = self.grid.iter().map(|&x| envelope(self.n, r, x, regime)).collect::<Result<Vec<f64>>>()?;
        self.envelope = Some(env);
        Ok(())
    }

    pub fn norm(&self, p: Norm) -> Option<f64> {
        self.lp_norms.get(&p.label()).copied()
    }

    /// CSV with columns `x,f,Q,abs_error,envelope`; header lines become `#` comments.
    pub fn write_csv<W: Write>(&self, mut out: W, header: &[String]) -> Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["x", "f", "Q", "abs_error", "envelope"])?;
        for i in 0..self.grid.len() {
            let env = match &self.envelope {
                Some(e) => fmt_f64(e[i]),
                None => String::new(),
            };
            w.write_record([
                fmt_f64(self.grid[i]),
                fmt_f64(self.f_values[i]),
                fmt_f64(self.q_values[i]),
                fmt_f64(self.pointwise_error[i]),
                env,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip decimal; `inf`/`-inf`/`nan` for non-finite values.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

/// Outcome of comparing `|E^Q(x)|` with `u_max V_{n,r}(x)` on a grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    /// `max_x (|E^Q(x)| - u_max V_{n,r}(x))`; at most `tol` when the bound holds.
    pub worst_excess: f64,
    pub tol: f64,
    pub holds: bool,
}

/// Check `|sum_k (y_k - q_k) p_{n,k}(x)| <= u_max V_{n,r}(x) + tol` on a grid.
pub fn check_variation_bound(y: &[f64], res: &QuantizationResult, grid_size: usize, tol: f64) -> Result<BoundCheck> {
    if y.len() != res.q.len() {
        return Err(Error::LengthMismatch { expected: y.len(), got: res.q.len() });
    }
    if y.len() < 2 || grid_size < 2 {
        return Err(Error::InvalidParameter("need degree >= 1 and at least two grid points".into()));
    }
    let n = y.len() - 1;
    let e = BernsteinPoly::new(y.iter().zip(&res.q).map(|(a, b)| a - b).collect())?;
    let worst = (0..grid_size)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 / (grid_size - 1) as f64;
            let v = basis_diff(n, x, res.order)?.l1_norm();
            Ok(e.eval(x)?.abs() - res.u_max * v)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(BoundCheck { worst_excess: worst, tol, holds: worst <= tol })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_values() {
        assert_eq!(envelope(10, 1, 0.0, Regime::First).unwrap(), 1.0);
        assert!((envelope(100, 2, 0.5, Regime::Second).unwrap() - 1.0 / 26.0).abs() < 1e-15);
        assert!((envelope(16, 4, 0.5, Regime::General).unwrap() - 1.0).abs() < 1e-15);
        assert!(envelope(16, 2, 0.5, Regime::First).is_err());
        assert!(envelope(16, 3, 0.0, Regime::General).unwrap().is_infinite());
    }

    #[test]
    fn norms_of_constants() {
        let s = vec![0.7; 2001];
        for p in [Norm::Lp(1.0), Norm::Lp(2.0), Norm::Lp(3.5), Norm::Sup] {
            assert!((lp_norm(&s, p).unwrap() - 0.7).abs() < 1e-13);
        }
        assert_eq!(lp_norm(&[0.1, 0.3, 0.2], Norm::Sup).unwrap(), 0.3);
        // even number of points takes the trapezoid patch
        let s = vec![2.0; 10];
        assert!((lp_norm(&s, Norm::Lp(1.0)).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn simpson_exact_on_cubics() {
        let v = lp_norm_of(|x| x * x * x, Norm::Lp(1.0), 11).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn fits() {
        let ns = [16usize, 32, 64, 128];
        let e: Vec<f64> = ns.iter().map(|n| 1.0 / *n as f64).collect();
        let f = rate_fit(&ns, &e).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let e: Vec<f64> = ns.iter().map(|n| 3.0 / (*n as f64).sqrt()).collect();
        assert!((rate_fit(&ns, &e).unwrap().slope + 0.5).abs() < 1e-12);
        assert!(rate_fit(&ns[..3], &e[..3]).is_err());
        assert!(rate_fit(&ns, &[1.0, 0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn report_endpoints() {
        let f = FunctionSpec::from_registry("poly", &[0.25, 1.0]).unwrap();
        let q = BernsteinPoly::new(vec![1.0, -1.0, 1.0]).unwrap();
        let r = pointwise_error(&f, &q, 11).unwrap();
        assert_eq!(r.pointwise_error[0], 0.75);
        assert_eq!(r.pointwise_error[10], 0.25);
        assert_eq!(r.n, 2);
        assert!(r.lp_norms.contains_key("inf"));
    }

    #[test]
    fn csv_layout() {
        let f = FunctionSpec::from_registry("const", &[0.0]).unwrap();
        let q = BernsteinPoly::new(vec![1.0, -1.0]).unwrap();
        let mut r = pointwise_error(&f, &q, 3).unwrap();
        r.set_envelope(1, Regime::First).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf, &["fn = \"const\"".to_string()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# fn = \"const\"");
        assert_eq!(lines[1], "x,f,Q,abs_error,envelope");
        assert_eq!(lines[3], "0.5,0.0,0.0,0.0,0.6666666666666666");
        assert!(!text.contains('\r'));
    }
}
