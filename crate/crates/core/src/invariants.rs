// Property tests spanning several modules.

use proptest::prelude::*;

use crate::analysis::{lp_norm, rate_fit};
use crate::approx::{iterated_u_coeffs, iterated_u_from_grid, operator_matrix, sample_grid, Norm};
use crate::bernstein::{basis_diff, basis_values, moment, BernsteinPoly, EvalBackend};
use crate::functions::FunctionSpec;
use crate::lattice::{round_alpha, round_half_even, round_star};
use crate::sigma_delta::{
    quantization_error_poly, quantize, shaped_error_at, verify_difference_equation, Alphabet, QuantizerConfig,
    SparseFeedbackRule,
};
use num_rational::BigRational;
use num_traits::ToPrimitive;

fn backward_diff(u: &[f64], r: usize) -> Vec<f64> {
    let mut d = u.to_vec();
    for _ in 0..r {
        for k in (1..d.len()).rev() {
            d[k] -= d[k - 1];
        }
    }
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_of_unity(n in 1usize..600, x in 0.0f64..=1.0) {
        let p = basis_values(n, x).unwrap();
        prop_assert!(p.iter().all(|v| *v >= 0.0));
        let s: f64 = p.iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12, "sum {s}");
    }

    #[test]
    fn first_moments(n in 1usize..400, x in 0.0f64..=1.0) {
        let nx = n as f64 * x * (1.0 - x);
        prop_assert!(moment(n, x, 1).unwrap().abs() < 1e-10 * (n as f64).max(1.0));
        prop_assert!((moment(n, x, 2).unwrap() - nx).abs() < 1e-10 * (n as f64));
        let t3 = nx * (1.0 - 2.0 * x);
        prop_assert!((moment(n, x, 3).unwrap() - t3).abs() < 1e-9 * (n as f64).powf(1.5));
    }

    #[test]
    fn backends_agree(coeffs in prop::collection::vec(-2.0f64..2.0, 2..60), x in 0.0f64..=1.0) {
        let p = BernsteinPoly::new(coeffs).unwrap();
        let a = p.eval_with(x, EvalBackend::LogSpace).unwrap();
        let b = p.eval_with(x, EvalBackend::DeCasteljau).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((p.elevate().eval(x).unwrap() - a).abs() < 1e-12);
    }

    #[test]
    fn summation_by_parts(u in prop::collection::vec(-3.0f64..3.0, 2..80), r in 1usize..5, x in 0.0f64..=1.0) {
        // sum_k (D^r u)_k p_k(x) = sum_k u_k (~D^r p)_k(x)
        let n = u.len() - 1;
        let lhs: f64 = backward_diff(&u, r).iter().zip(basis_values(n, x).unwrap()).map(|(a, b)| a * b).sum();
        let rhs = shaped_error_at(&u, r, x).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9 * 2f64.powi(r as i32));
    }

    #[test]
    fn difference_raises_order(n in 2usize..200, r in 0usize..6, x in 0.0f64..=1.0) {
        let lo = basis_diff(n, x, r).unwrap().values;
        let hi = basis_diff(n, x, r + 1).unwrap().values;
        let mut pad = lo.clone();
        pad.push(0.0);
        for k in 0..=n {
            prop_assert!((hi[k] - (pad[k] - pad[k + 1])).abs() < 1e-14 * 2f64.powi(r as i32 + 1));
        }
    }

    #[test]
    fn greedy_integer_state_bounded(y in prop::collection::vec(-50.0f64..50.0, 2..300), r in 1usize..6) {
        let res = quantize(&y, &QuantizerConfig::greedy(r, Alphabet::Integers)).unwrap();
        prop_assert!(res.u_max <= 0.5 + 1e-9, "u_max {}", res.u_max);
        prop_assert!(res.q.iter().all(|q| q.fract() == 0.0));
        prop_assert!(verify_difference_equation(&y, &res).unwrap() < 1e-9);
    }

    #[test]
    fn first_order_sign_state_bounded(y in prop::collection::vec(-1.0f64..=1.0, 2..300)) {
        let res = quantize(&y, &QuantizerConfig::greedy(1, Alphabet::PlusMinusOne)).unwrap();
        prop_assert!(res.u_max <= 1.0 + 1e-12);
        prop_assert!(res.q.iter().all(|q| q.abs() == 1.0));
    }

    #[test]
    fn certified_filter_state_bounded(
        y in prop::collection::vec(-0.8f64..=0.8, 2..400),
        r in 3usize..5,
    ) {
        let cfg = QuantizerConfig::stable_one_bit(r, 0.8);
        let res = quantize(&y, &cfg).unwrap();
        let bound = SparseFeedbackRule::certified(r, 0.8).unwrap().state_bound();
        prop_assert!(res.u_max <= bound * (1.0 + 1e-9), "{} > {}", res.u_max, bound);
        prop_assert!(res.q.iter().all(|q| q.abs() == 1.0));
        prop_assert!(verify_difference_equation(&y, &res).unwrap() < 1e-6 * bound.max(1.0));
    }

    #[test]
    fn error_equals_shaped_state(y in prop::collection::vec(-0.9f64..=0.9, 3..120), x in 0.0f64..=1.0) {
        let res = quantize(&y, &QuantizerConfig::greedy(2, Alphabet::PlusMinusOne)).unwrap();
        let n = y.len() - 1;
        let e = quantization_error_poly(&y, &res.q, n).unwrap().eval(x).unwrap();
        let s = shaped_error_at(&res.u, 2, x).unwrap();
        prop_assert!((e - s).abs() < 1e-9 * res.u_max.max(1.0));
    }

    #[test]
    fn rate_fit_scale_invariant(
        errs in prop::collection::vec(1e-6f64..1.0, 4..8),
        scale in 1e-3f64..1e3,
    ) {
        let ns: Vec<usize> = (0..errs.len()).map(|i| 16usize << i).collect();
        let a = rate_fit(&ns, &errs).unwrap();
        let scaled: Vec<f64> = errs.iter().map(|e| e * scale).collect();
        let b = rate_fit(&ns, &scaled).unwrap();
        prop_assert!((a.slope - b.slope).abs() < 1e-9);
        prop_assert!((a.r_squared - b.r_squared).abs() < 1e-9);
    }

    #[test]
    fn lp_norms_ordered(samples in prop::collection::vec(-5.0f64..5.0, 3..200)) {
        // on a unit-length domain ||.||_p is nondecreasing in p
        let n1 = lp_norm(&samples, Norm::Lp(1.0)).unwrap();
        let n2 = lp_norm(&samples, Norm::Lp(2.0)).unwrap();
        let n4 = lp_norm(&samples, Norm::Lp(4.0)).unwrap();
        let ni = lp_norm(&samples, Norm::Sup).unwrap();
        // positive quadrature weights summing to one keep Holder's ordering
        let slack = 1e-12 * (1.0 + ni);
        prop_assert!(n1 <= n2 + slack && n2 <= n4 + slack && n4 <= ni + slack, "{n1} {n2} {n4} {ni}");
    }

    #[test]
    fn half_even_matches_f64(v in -1e6f64..1e6) {
        let r = BigRational::from_float(v).unwrap();
        let got = round_half_even(&r).to_f64().unwrap();
        prop_assert_eq!(got, v.round_ties_even());
        let tie = BigRational::from_float(v.trunc() + 0.5).unwrap();
        prop_assert_eq!(round_half_even(&tie).to_f64().unwrap(), (v.trunc() + 0.5).round_ties_even());
    }

    #[test]
    fn operator_rows_stochastic(n in 1usize..120) {
        let m = operator_matrix(n).unwrap();
        for i in 0..=n {
            let row = m.row(i);
            prop_assert!(row.iter().all(|v| *v >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn order_one_is_plain_sampling() {
    for id in ["abs", "sin", "exp", "bump"] {
        let f = FunctionSpec::from_registry(id, &[]).unwrap();
        for n in [1, 7, 64] {
            assert_eq!(iterated_u_coeffs(&f, n, 1).unwrap(), sample_grid(&f, n).unwrap());
        }
    }
}

#[test]
fn iterated_reproduces_constants_and_stays_bounded() {
    // ||f_{n,r}||_inf <= ||f||_inf + C_r ||f - B_n f||_grid
    let f = FunctionSpec::from_registry("abs", &[0.9, 0.5]).unwrap();
    for n in [16usize, 64, 200] {
        let g = sample_grid(&f, n).unwrap();
        let m = operator_matrix(n).unwrap();
        let bg = m.apply(&g.values).unwrap();
        let defect = g.values.iter().zip(&bg).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        for r in 2..=5 {
            let c_r = crate::approx::pr_coeffs(r).unwrap().c_r as f64;
            let fr = iterated_u_from_grid(&g, r, &m).unwrap();
            assert!(fr.max_abs() <= g.max_abs() + c_r * defect + 1e-12, "n={n} r={r}");
        }
        let c = crate::approx::GridFunction::new(vec![0.3; n + 1]).unwrap();
        let fc = iterated_u_from_grid(&c, 4, &m).unwrap();
        assert!(fc.values.iter().all(|v| (v - 0.3).abs() < 1e-12));
    }
}

#[test]
fn iterated_rate_order_two() {
    let f = FunctionSpec::from_registry("sin", &[0.9, 1.0]).unwrap();
    let ns = [16usize, 32, 64, 128, 256];
    let errs: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let p = iterated_u_coeffs(&f, n, 2).unwrap().to_bernstein();
            (0..=400)
                .map(|i| i as f64 / 400.0)
                .map(|x| (p.eval(x).unwrap() - f.eval(x)).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let fit = rate_fit(&ns, &errs).unwrap();
    assert!(fit.slope <= -1.7, "slope {}", fit.slope);
}

#[test]
fn round_alpha_zero_is_round_star() {
    let f = FunctionSpec::from_registry("sin", &[0.8, 1.0]).unwrap();
    for n in [1usize, 10, 77] {
        assert_eq!(round_alpha(&f, n, 0.0).unwrap().coefficients, round_star(&f, n).unwrap());
    }
}

#[test]
fn lattice_error_below_power_envelope() {
    let f = FunctionSpec::from_registry("bump", &[]).unwrap();
    for alpha in [0.0, 0.25, 0.5, 0.75] {
        for n in [16usize, 64, 256] {
            let lr = round_alpha(&f, n, alpha).unwrap();
            let e = lr.sup_error(1001).unwrap();
            assert!(e < (n as f64).powf(alpha - 1.0), "alpha={alpha} n={n} e={e}");
            let d = &lr.params.delta;
            assert!(d[0] == 1u32.into() && d[n] == 1u32.into());
        }
    }
}
