//! Binomial coefficients and the binomial probability mass in f64 and exact
//! arithmetic.
//!
//! For large degrees the mass is evaluated with Loader's saddle-point
//! expansion (Stirling remainder plus deviance), which keeps roughly full
//! relative precision where a naive product of powers underflows or loses
//! digits to cancellation.

use num_bigint::BigUint;
use num_traits::One;

/// Largest degree for which the basis is evaluated by the direct product.
pub const DIRECT_PRODUCT_MAX_DEGREE: usize = 30;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

// ln(n!) - ((n + 1/2) ln n - n + ln(sqrt(2 pi))) for n = 0..=15.
const STIRLERR_TABLE: [f64; 16] = [
    0.0,
    0.081_061_466_795_327_26,
    0.041_340_695_955_409_3,
    0.027_677_925_684_998_34,
    0.020_790_672_103_765_093,
    0.016_644_691_189_821_193,
    0.013_876_128_823_070_748,
    0.011_896_709_945_891_77,
    0.010_411_265_261_972_096,
    0.009_255_462_182_712_733,
    0.008_330_563_433_362_87,
    0.007_573_675_487_951_841,
    0.006_942_840_107_209_53,
    0.006_408_994_188_004_207,
    0.005_951_370_112_758_847_5,
    0.005_554_733_551_962_801,
];

/// Stirling remainder `ln n! - (n + 1/2) ln n + n - ln sqrt(2 pi)`.
pub fn stirlerr(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15 {
        return STIRLERR_TABLE[n as usize];
    }
    let nf = n as f64;
    let nn = nf * nf;
    if n > 500 {
        (S0 - S1 / nn) / nf
    } else if n > 80 {
        (S0 - (S1 - S2 / nn) / nn) / nf
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / nf
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / nf
    }
}

/// Deviance term `x ln(x / np) + np - x`, evaluated stably when `x ~ np`.
pub fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// `ln n!`.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    stirlerr(n) + (nf + 0.5) * nf.ln() - nf + HALF_LN_2PI
}

/// `ln C(n, k)`; negative infinity when `k > n`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `C(n, k)` rounded to f64. Exact whenever the value fits in 53 bits.
pub fn choose_f64(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    if n <= 120 {
        // Every prefix product is itself a binomial, so no overflow for n <= 120.
        let mut c: u128 = 1;
        for i in 0..k as u128 {
            c = c * (n as u128 - i) / (i + 1);
        }
        return c as f64;
    }
    ln_choose(n, k).exp().round()
}

/// `C(n, k)` exactly.
pub fn choose_exact(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::default();
    }
    let k = k.min(n - k);
    let mut c = BigUint::one();
    for i in 0..k {
        c *= n - i;
        c /= i + 1;
    }
    c
}

/// Whole row `C(n, 0..=n)` exactly.
pub fn choose_row_exact(n: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = BigUint::one();
    row.push(c.clone());
    for i in 0..n {
        c *= n - i;
        c /= i + 1;
        row.push(c.clone());
    }
    row
}

/// Binomial probability mass `C(n, k) x^k (1 - x)^(n - k)` for `x` in `[0, 1]`.
///
/// Exact endpoint values; direct product for `n <= 30`; saddle-point form above.
pub fn binomial_pmf(n: u64, k: u64, x: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    if x == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if x == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let q = 1.0 - x;
    if n as usize <= DIRECT_PRODUCT_MAX_DEGREE {
        return choose_f64(n, k) * x.powi(k as i32) * q.powi((n - k) as i32);
    }
    let nf = n as f64;
    if k == 0 {
        let lc = if x < 0.1 { -bd0(nf, nf * q) - nf * x } else { nf * q.ln() };
        return lc.exp();
    }
    if k == n {
        let lc = if q < 0.1 { -bd0(nf, nf * x) - nf * q } else { nf * x.ln() };
        return lc.exp();
    }
    let kf = k as f64;
    let lc = stirlerr(n) - stirlerr(k) - stirlerr(n - k) - bd0(kf, nf * x) - bd0(nf - kf, nf * q);
    let lf = LN_2PI + kf.ln() + (-kf / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}
