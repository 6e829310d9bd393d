//! Registry of target functions on `[0, 1]`.

use std::f64::consts::{E, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed-form norms, where available. Each entry is a bound that is attained
/// for the registry functions, except `poly` where it is the triangle bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KnownNorms {
    pub sup_norm: f64,
    pub lip_seminorm: Option<f64>,
    /// `max(||f||, ||f'||, ||f''||)` in sup norm.
    pub c2_norm: Option<f64>,
    /// `||f''||` in sup norm.
    pub second_derivative_sup: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum TestFunction {
    /// `c`
    Const { c: f64 },
    /// `sum_j a_j x^j`
    Poly { coeffs: Vec<f64> },
    /// `a |x - c|`
    Abs { scale: f64, center: f64 },
    /// `a sin(2 pi w x)`
    Sin { amplitude: f64, frequency: f64 },
    /// `a e^x`
    Exp { scale: f64 },
    /// `a 4x(1 - x)`
    Bump { scale: f64 },
}

/// Registry entries: id, parameter list, default parameters.
pub const REGISTRY: &[(&str, &str, &[f64])] = &[
    ("const", "c", &[0.3]),
    ("poly", "a0,a1,...,am", &[0.0, 1.0]),
    ("abs", "scale,center", &[1.0, 0.5]),
    ("sin", "amplitude,frequency", &[0.8, 1.0]),
    ("exp", "scale", &[1.0]),
    ("bump", "scale", &[1.0]),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub function: TestFunction,
    pub known_norms: Option<KnownNorms>,
}

impl FunctionSpec {
    /// Look up `id` and bind `params`; an empty list selects the defaults.
    pub fn from_registry(id: &str, params: &[f64]) -> Result<Self> {
        let (_, sig, defaults) = REGISTRY
            .iter()
            .find(|(name, _, _)| *name == id)
            .ok_or_else(|| Error::UnknownFunction(id.to_string()))?;
        let p: &[f64] = if params.is_empty() { defaults } else { params };
        if let Some(bad) = p.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite parameter {bad} for {id}")));
        }
        let arity = |want: usize| -> Result<()> {
            if p.len() == want {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{id} takes parameters ({sig}), got {} value(s)", p.len())))
            }
        };
        let function = match id {
            "const" => {
                arity(1)?;
                TestFunction::Const { c: p[0] }
            }
            "poly" => TestFunction::Poly { coeffs: p.to_vec() },
            "abs" => {
                arity(2)?;
                TestFunction::Abs { scale: p[0], center: p[1] }
            }
            "sin" => {
                arity(2)?;
                TestFunction::Sin { amplitude: p[0], frequency: p[1] }
            }
            "exp" => {
                arity(1)?;
                TestFunction::Exp { scale: p[0] }
            }
            "bump" => {
                arity(1)?;
                TestFunction::Bump { scale: p[0] }
            }
            _ => unreachable!(),
        };
        Ok(Self::new(function))
    }

    pub fn new(function: TestFunction) -> Self {
        let known_norms = Some(norms_of(&function));
        Self { function, known_norms }
    }

    pub fn id(&self) -> &'static str {
        match self.function {
            TestFunction::Const { .. } => "const",
            TestFunction::Poly { .. } => "poly",
            TestFunction::Abs { .. } => "abs",
            TestFunction::Sin { .. } => "sin",
            TestFunction::Exp { .. } => "exp",
            TestFunction::Bump { .. } => "bump",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match &self.function {
            TestFunction::Const { c } => vec![*c],
            TestFunction::Poly { coeffs } => coeffs.clone(),
            TestFunction::Abs { scale, center } => vec![*scale, *center],
            TestFunction::Sin { amplitude, frequency } => vec![*amplitude, *frequency],
            TestFunction::Exp { scale } => vec![*scale],
            TestFunction::Bump { scale } => vec![*scale],
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.function {
            TestFunction::Const { c } => *c,
            TestFunction::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, a| acc * x + a),
            TestFunction::Abs { scale, center } => scale * (x - center).abs(),
            TestFunction::Sin { amplitude, frequency } => amplitude * (2.0 * PI * frequency * x).sin(),
            TestFunction::Exp { scale } => scale * x.exp(),
            TestFunction::Bump { scale } => scale * 4.0 * x * (1.0 - x),
        }
    }

    /// Power-basis coefficients when the function is a polynomial.
    pub fn power_coeffs(&self) -> Option<Vec<f64>> {
        match &self.function {
            TestFunction::Const { c } => Some(vec![*c]),
            TestFunction::Poly { coeffs } => Some(coeffs.clone()),
            TestFunction::Bump { scale } => Some(vec![0.0, 4.0 * scale, -4.0 * scale]),
            _ => None,
        }
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p: Vec<String> = self.params().iter().map(|v| v.to_string()).collect();
        write!(f, "{}({})", self.id(), p.join(","))
    }
}

fn norms_of(function: &TestFunction) -> KnownNorms {
    let c2 = |vals: [f64; 3]| Some(vals.iter().fold(0.0f64, |m, v| m.max(*v)));
    match function {
        TestFunction::Const { c } => KnownNorms {
            sup_norm: c.abs(),
            lip_seminorm: Some(0.0),
            c2_norm: Some(c.abs()),
            second_derivative_sup: Some(0.0),
        },
        TestFunction::Poly { coeffs } => {
            let sup: f64 = coeffs.iter().map(|a| a.abs()).sum();
            let d1: f64 = coeffs.iter().enumerate().map(|(j, a)| j as f64 * a.abs()).sum();
            let d2: f64 = coeffs.iter().enumerate().map(|(j, a)| (j * j.saturating_sub(1)) as f64 * a.abs()).sum();
            KnownNorms { sup_norm: sup, lip_seminorm: Some(d1), c2_norm: c2([sup, d1, d2]), second_derivative_sup: Some(d2) }
        }
        TestFunction::Abs { scale, center } => KnownNorms {
            sup_norm: scale.abs() * center.abs().max((1.0 - center).abs()),
            lip_seminorm: Some(scale.abs()),
            c2_norm: None,
            second_derivative_sup: None,
        },
        TestFunction::Sin { amplitude, frequency } => {
            let a = amplitude.abs();
            let w = 2.0 * PI * frequency.abs();
            // |sin| reaches 1 on [0, 1] once the argument passes pi/2
            let sup = if frequency.abs() >= 0.25 { a } else { a * w.sin() };
            KnownNorms { sup_norm: sup, lip_seminorm: Some(a * w), c2_norm: c2([sup, a * w, a * w * w]), second_derivative_sup: Some(a * w * w) }
        }
        TestFunction::Exp { scale } => {
            let s = scale.abs() * E;
            KnownNorms { sup_norm: s, lip_seminorm: Some(s), c2_norm: Some(s), second_derivative_sup: Some(s) }
        }
        TestFunction::Bump { scale } => {
            let a = scale.abs();
            KnownNorms { sup_norm: a, lip_seminorm: Some(4.0 * a), c2_norm: c2([a, 4.0 * a, 8.0 * a]), second_derivative_sup: Some(8.0 * a) }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lookup() {
        let f = FunctionSpec::from_registry("abs", &[0.9, 0.5]).unwrap();
        assert!((f.eval(0.1) - 0.36).abs() < 1e-15);
        assert_eq!(f.to_string(), "abs(0.9,0.5)");
        assert!(matches!(FunctionSpec::from_registry("runge", &[]), Err(Error::UnknownFunction(_))));
        assert!(matches!(FunctionSpec::from_registry("sin", &[1.0]), Err(Error::InvalidParameter(_))));
        let d = FunctionSpec::from_registry("sin", &[]).unwrap();
        assert_eq!(d.params(), vec![0.8, 1.0]);
    }

    #[test]
    fn poly_horner() {
        let f = FunctionSpec::from_registry("poly", &[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(f.eval(2.0), 9.0);
        assert_eq!(f.power_coeffs().unwrap(), vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn norms() {
        let n = FunctionSpec::from_registry("sin", &[0.8, 1.0]).unwrap().known_norms.unwrap();
        assert_eq!(n.sup_norm, 0.8);
        assert!((n.second_derivative_sup.unwrap() - 0.8 * 4.0 * PI * PI).abs() < 1e-12);
        let b = FunctionSpec::from_registry("bump", &[1.0]).unwrap().known_norms.unwrap();
        assert_eq!(b.second_derivative_sup, Some(8.0));
    }
}
