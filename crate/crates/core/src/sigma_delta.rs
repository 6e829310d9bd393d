//! Noise-shaping (sigma-delta) quantization of coefficient sequences.
//!
//! A sequence `y` is replaced by `q` with entries in a finite alphabet so that
//! `y - q = D^r u` with a bounded state `u` (`D` the backward difference, zero
//! history). Summing by parts then moves the error onto the `r`-fold adjoint
//! differences of the basis, which are small in the interior of `[0, 1]`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bernstein::{basis_diff, BernsteinPoly};
use crate::binomial::choose_f64;
use crate::error::{Error, Result};

/// Default bound on `|u_k|` before a run is declared unstable.
pub const DEFAULT_U_CAP: f64 = 1e6;

/// Largest node spacing tried when designing a sparse feedback filter.
pub const MAX_FILTER_SPACING: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alphabet {
    #[serde(rename = "int")]
    Integers,
    #[serde(rename = "pm1")]
    PlusMinusOne,
}

impl Alphabet {
    pub fn contains(self, v: f64) -> bool {
        match self {
            Alphabet::Integers => v.is_finite() && v.fract() == 0.0,
            Alphabet::PlusMinusOne => v == 1.0 || v == -1.0,
        }
    }

    /// Nearest alphabet element. Integers round half to even; for `{-1, 1}`
    /// zero maps to `+1`.
    pub fn round(self, v: f64) -> f64 {
        match self {
            Alphabet::Integers => v.round_ties_even(),
            Alphabet::PlusMinusOne => {
                if v >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Alphabet::Integers => "int",
            Alphabet::PlusMinusOne => "pm1",
        }
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Alphabet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "int" | "integers" | "Z" => Ok(Alphabet::Integers),
            "pm1" | "onebit" | "+-1" => Ok(Alphabet::PlusMinusOne),
            other => Err(Error::InvalidParameter(format!("unknown alphabet {other:?} (expected int or pm1)"))),
        }
    }
}

pub fn round_to_alphabet(v: f64, alphabet: Alphabet) -> f64 {
    alphabet.round(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleKind {
    #[serde(rename = "greedy")]
    Greedy,
    #[serde(rename = "stable")]
    StableOneBit,
}

impl RuleKind {
    pub fn name(self) -> &'static str {
        match self {
            RuleKind::Greedy => "greedy",
            RuleKind::StableOneBit => "stable",
        }
    }
}

impl std::str::FromStr for RuleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(RuleKind::Greedy),
            "stable" => Ok(RuleKind::StableOneBit),
            other => Err(Error::InvalidParameter(format!("unknown rule {other:?} (expected greedy or stable)"))),
        }
    }
}

/// A quantization rule picks `q_k` from the current input and the predicted
/// state `sum_j (-1)^(j-1) C(r,j) u_{k-j} + y_k` (the state that `q_k = 0`
/// would produce). The driver keeps `u` and enforces the alphabet.
pub trait QuantizationRule {
    fn choose(&mut self, y: f64, predictor: f64) -> f64;

    /// Clear internal history before a new sequence.
    fn reset(&mut self) {}

    fn name(&self) -> &str;
}

/// `q_k = round(predictor)`: keeps the state as close to zero as possible.
#[derive(Clone, Copy, Debug)]
pub struct GreedyRule {
    pub alphabet: Alphabet,
}

impl QuantizationRule for GreedyRule {
    fn choose(&mut self, _y: f64, predictor: f64) -> f64 {
        self.alphabet.round(predictor)
    }

    fn name(&self) -> &str {
        "greedy"
    }
}

/// One-bit rule driven by a sparse causal feedback filter
/// `G(z) = sum_j d_j z^(s j^2 + 1)`, with the `d_j` chosen so that `1 - G`
/// has a zero of order `r` at `z = 1`.
///
/// With `w_k = y_k + (G * v)_k`, `q_k = sign(w_k)`, `v_k = w_k - q_k` one has
/// `y - q = (1 - G) * v = D^r (h * v)` with `h = (1 - G) / (1 - z)^r`. As long
/// as `|y| <= mu` and `||g||_1 + mu <= 2`, `|v| <= 1` and `|u| <= ||h||_1`.
#[derive(Clone, Debug)]
pub struct SparseFeedbackRule {
    order: usize,
    spacing: usize,
    taps: Vec<(usize, f64)>,
    g_l1: f64,
    h_l1: f64,
    v: Vec<f64>,
}

fn sparse_taps(order: usize, spacing: usize) -> Vec<(usize, f64)> {
    let nodes: Vec<f64> = (0..order).map(|j| (spacing * j * j + 1) as f64).collect();
    nodes
        .iter()
        .enumerate()
        .map(|(j, nj)| {
            let d: f64 = nodes.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, ni)| ni / (ni - nj)).product();
            (*nj as usize, d)
        })
        .collect()
}

fn taps_l1(taps: &[(usize, f64)]) -> f64 {
    taps.iter().map(|(_, d)| d.abs()).sum()
}

impl SparseFeedbackRule {
    /// Filter with the given order and node spacing.
    pub fn new(order: usize, spacing: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter("filter order must be at least 1".into()));
        }
        if spacing == 0 {
            return Err(Error::InvalidParameter("filter spacing must be at least 1".into()));
        }
        let taps = sparse_taps(order, spacing);
        let g_l1 = taps_l1(&taps);
        let len = taps.last().map(|t| t.0).unwrap_or(0) + 1;
        // h = cumsum^r (1 - G), truncated to the quotient's length
        let mut h = vec![0.0; len];
        h[0] = 1.0;
        for &(i, d) in &taps {
            h[i] -= d;
        }
        for _ in 0..order {
            for i in 1..h.len() {
                h[i] += h[i - 1];
            }
        }
        h.truncate(len.saturating_sub(order).max(1));
        let h_l1 = h.iter().map(|v| v.abs()).sum();
        Ok(Self { order, spacing, taps, g_l1, h_l1, v: Vec::new() })
    }

    /// Smallest spacing whose filter is certified stable for inputs bounded by `mu`.
    pub fn certified(order: usize, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::InvalidParameter(format!("mu must lie in (0, 1) for a certified filter, got {mu}")));
        }
        for s in 1..=MAX_FILTER_SPACING {
            if taps_l1(&sparse_taps(order, s)) + mu <= 2.0 {
                return Self::new(order, s);
            }
        }
        Err(Error::InvalidParameter(format!(
            "no certified filter of order {order} for mu = {mu} with spacing <= {MAX_FILTER_SPACING}"
        )))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn spacing(&self) -> usize {
        self.spacing
    }

    /// `(delay, weight)` pairs of the feedback filter.
    pub fn taps(&self) -> &[(usize, f64)] {
        &self.taps
    }

    pub fn g_l1(&self) -> f64 {
        self.g_l1
    }

    /// Guaranteed bound on `|u|` while the input stays admissible.
    pub fn state_bound(&self) -> f64 {
        self.h_l1
    }

    /// Largest input bound the filter is certified for.
    pub fn max_input(&self) -> f64 {
        2.0 - self.g_l1
    }
}

impl QuantizationRule for SparseFeedbackRule {
    fn choose(&mut self, y: f64, _predictor: f64) -> f64 {
        let k = self.v.len();
        let mut w = y;
        for &(i, d) in &self.taps {
            if i <= k {
                w += d * self.v[k - i];
            }
        }
        let q = if w >= 0.0 { 1.0 } else { -1.0 };
        self.v.push(w - q);
        q
    }

    fn reset(&mut self) {
        self.v.clear();
    }

    fn name(&self) -> &str {
        "sparse-feedback"
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizerConfig {
    pub order: usize,
    pub alphabet: Alphabet,
    pub rule: RuleKind,
    /// Input bound for one-bit rules.
    pub mu: f64,
    pub u_cap: f64,
}

impl QuantizerConfig {
    pub fn new(order: usize, alphabet: Alphabet, rule: RuleKind) -> Self {
        Self { order, alphabet, rule, mu: 0.9, u_cap: DEFAULT_U_CAP }
    }

    pub fn greedy(order: usize, alphabet: Alphabet) -> Self {
        Self::new(order, alphabet, RuleKind::Greedy)
    }

    pub fn stable_one_bit(order: usize, mu: f64) -> Self {
        Self { mu, ..Self::new(order, Alphabet::PlusMinusOne, RuleKind::StableOneBit) }
    }

    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }

    pub fn with_u_cap(self, u_cap: f64) -> Self {
        Self { u_cap, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::InvalidParameter("quantization order must be at least 1".into()));
        }
        if !(self.u_cap > 0.0) {
            return Err(Error::InvalidParameter(format!("u_cap must be positive, got {}", self.u_cap)));
        }
        if self.rule == RuleKind::StableOneBit {
            if self.alphabet != Alphabet::PlusMinusOne {
                return Err(Error::InvalidParameter("the stable rule is only defined for the pm1 alphabet".into()));
            }
            let ok = if self.order == 1 { self.mu > 0.0 && self.mu <= 1.0 } else { self.mu > 0.0 && self.mu < 1.0 };
            if !ok {
                return Err(Error::InvalidParameter(format!(
                    "mu = {} out of range for the stable rule of order {}",
                    self.mu, self.order
                )));
            }
        }
        Ok(())
    }

    /// Bound on `max |y|` the configuration requires, if any.
    pub fn input_bound(&self) -> Option<f64> {
        match (self.alphabet, self.rule) {
            (Alphabet::Integers, _) => None,
            (Alphabet::PlusMinusOne, RuleKind::StableOneBit) => Some(self.mu),
            (Alphabet::PlusMinusOne, RuleKind::Greedy) if self.order == 1 => Some(1.0),
            (Alphabet::PlusMinusOne, RuleKind::Greedy) => None,
        }
    }
}

/// Rule used for [`RuleKind::StableOneBit`]: greedy sign up to order 2, a
/// certified sparse feedback filter above.
pub fn stable_one_bit_rule(order: usize, mu: f64) -> Result<Box<dyn QuantizationRule>> {
    if order <= 2 {
        Ok(Box::new(GreedyRule { alphabet: Alphabet::PlusMinusOne }))
    } else {
        Ok(Box::new(SparseFeedbackRule::certified(order, mu)?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantizationResult {
    pub q: Vec<f64>,
    #[serde(skip)]
    pub u: Vec<f64>,
    pub u_max: f64,
    pub order: usize,
    pub alphabet: Alphabet,
    pub rule: String,
}

impl QuantizationResult {
    /// `sum_k q_k p_{n,k}` with `n = len - 1`.
    pub fn to_poly(&self) -> Result<BernsteinPoly> {
        BernsteinPoly::new(self.q.clone())
    }
}

/// Signed recursion weights `(-1)^(j-1) C(r, j)`, `j = 1..=r`.
pub fn state_weights(r: usize) -> Vec<f64> {
    (1..=r).map(|j| if j % 2 == 1 { 1.0 } else { -1.0 } * choose_f64(r as u64, j as u64)).collect()
}

/// Quantize `y` with the rule named in `config`.
pub fn quantize(y: &[f64], config: &QuantizerConfig) -> Result<QuantizationResult> {
    config.validate()?;
    if let Some(bound) = config.input_bound() {
        let max = max_abs(y);
        if max > bound {
            return Err(Error::Precondition { max, bound });
        }
    }
    match (config.alphabet, config.rule) {
        (_, RuleKind::Greedy) => quantize_with(y, config, &mut GreedyRule { alphabet: config.alphabet }),
        (_, RuleKind::StableOneBit) => {
            let mut rule = stable_one_bit_rule(config.order, config.mu)?;
            let mut res = quantize_with(y, config, rule.as_mut())?;
            res.rule = RuleKind::StableOneBit.name().to_string();
            Ok(res)
        }
    }
}

/// Run a custom rule. Only the order, alphabet and `u_cap` of `config` are used.
pub fn quantize_with(y: &[f64], config: &QuantizerConfig, rule: &mut dyn QuantizationRule) -> Result<QuantizationResult> {
    let r = config.order;
    if r == 0 {
        return Err(Error::InvalidParameter("quantization order must be at least 1".into()));
    }
    if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite input value {bad}")));
    }
    rule.reset();
    let w = state_weights(r);
    let mut u = vec![0.0; y.len()];
    let mut q = vec![0.0; y.len()];
    let mut u_max: f64 = 0.0;
    for k in 0..y.len() {
        let mut pred = y[k];
        for (j, wj) in w.iter().enumerate() {
            if k > j {
                pred += wj * u[k - j - 1];
            }
        }
        let qk = rule.choose(y[k], pred);
        if !config.alphabet.contains(qk) {
            return Err(Error::InvalidParameter(format!(
                "rule {} produced {qk}, which is not in the {} alphabet",
                rule.name(),
                config.alphabet
            )));
        }
        let uk = pred - qk;
        if !(uk.abs() <= config.u_cap) {
            return Err(Error::Stability { index: k, value: uk.abs(), cap: config.u_cap });
        }
        u_max = u_max.max(uk.abs());
        u[k] = uk;
        q[k] = qk;
    }
    Ok(QuantizationResult { q, u, u_max, order: r, alphabet: config.alphabet, rule: rule.name().to_string() })
}

/// `max_k |(y - q)_k - (D^r u)_k|` with zero history.
pub fn verify_difference_equation(y: &[f64], result: &QuantizationResult) -> Result<f64> {
    if result.q.len() != y.len() {
        return Err(Error::LengthMismatch { expected: y.len(), got: result.q.len() });
    }
    if result.u.len() != y.len() {
        return Err(Error::LengthMismatch { expected: y.len(), got: result.u.len() });
    }
    let r = result.order;
    let c: Vec<f64> = (0..=r).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 } * choose_f64(r as u64, j as u64)).collect();
    let mut worst: f64 = 0.0;
    for k in 0..y.len() {
        let mut d = 0.0;
        for (j, cj) in c.iter().enumerate() {
            if k >= j {
                d += cj * result.u[k - j];
            }
        }
        worst = worst.max((y[k] - result.q[k] - d).abs());
    }
    Ok(worst)
}

/// `sum_k (y_k - q_k) p_{n,k}`.
pub fn quantization_error_poly(y: &[f64], q: &[f64], n: usize) -> Result<BernsteinPoly> {
    if y.len() != n + 1 {
        return Err(Error::LengthMismatch { expected: n + 1, got: y.len() });
    }
    if q.len() != n + 1 {
        return Err(Error::LengthMismatch { expected: n + 1, got: q.len() });
    }
    BernsteinPoly::new(y.iter().zip(q).map(|(a, b)| a - b).collect())
}

/// `sum_k u_k (~D^r p_{n,.}(x))_k`, equal to the quantization error at `x`.
pub fn shaped_error_at(u: &[f64], r: usize, x: f64) -> Result<f64> {
    if u.is_empty() {
        return Err(Error::InvalidParameter("empty state sequence".into()));
    }
    let d = basis_diff(u.len() - 1, x, r)?;
    Ok(u.iter().zip(&d.values).map(|(a, b)| a * b).sum())
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_ties() {
        assert_eq!(round_to_alphabet(0.5, Alphabet::Integers), 0.0);
        assert_eq!(round_to_alphabet(1.5, Alphabet::Integers), 2.0);
        assert_eq!(round_to_alphabet(-2.5, Alphabet::Integers), -2.0);
        assert_eq!(round_to_alphabet(0.0, Alphabet::PlusMinusOne), 1.0);
        assert_eq!(round_to_alphabet(-1e-300, Alphabet::PlusMinusOne), -1.0);
    }

    #[test]
    fn first_order_by_hand() {
        // predictor u_{k-1} + 0.3: 0.3, -0.4, 0.9, 0.2, -0.5
        let y = [0.3; 5];
        let res = quantize(&y, &QuantizerConfig::greedy(1, Alphabet::PlusMinusOne)).unwrap();
        assert_eq!(res.q, vec![1.0, -1.0, 1.0, 1.0, -1.0]);
        let want = [-0.7, 0.6, -0.1, -0.8, 0.5];
        for (a, b) in res.u.iter().zip(want) {
            assert!((a - b).abs() < 1e-15, "{:?}", res.u);
        }
    }

    #[test]
    fn sparse_filter_shape() {
        let f = SparseFeedbackRule::new(2, 1).unwrap();
        // nodes 1 and 2: G = 2z - z^2, 1 - G = (1 - z)^2, h = 1
        assert_eq!(f.taps(), &[(1, 2.0), (2, -1.0)]);
        assert_eq!(f.state_bound(), 1.0);
        let c = SparseFeedbackRule::certified(4, 0.8).unwrap();
        assert_eq!(c.spacing(), 16);
        assert!(c.g_l1() + 0.8 <= 2.0);
    }

    #[test]
    fn stable_rule_rejects_bad_mu() {
        let cfg = QuantizerConfig::stable_one_bit(4, 1.0);
        assert!(matches!(quantize(&[0.0; 4], &cfg), Err(Error::InvalidParameter(_))));
        let cfg = QuantizerConfig::new(2, Alphabet::Integers, RuleKind::StableOneBit);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn precondition_on_one_bit_order_one() {
        let cfg = QuantizerConfig::greedy(1, Alphabet::PlusMinusOne);
        assert!(matches!(quantize(&[0.0, 1.2], &cfg), Err(Error::Precondition { .. })));
    }

    #[test]
    fn cap_trips() {
        let cfg = QuantizerConfig::greedy(6, Alphabet::PlusMinusOne).with_u_cap(10.0);
        let y: Vec<f64> = (0..2000).map(|k| 0.95 * (k as f64 * 0.37).sin()).collect();
        assert!(matches!(quantize(&y, &cfg), Err(Error::Stability { .. })));
    }

    #[test]
    fn empty_input() {
        let res = quantize(&[], &QuantizerConfig::greedy(3, Alphabet::Integers)).unwrap();
        assert!(res.q.is_empty());
        assert_eq!(res.u_max, 0.0);
    }
}
