//! Poisson pmf and CDF evaluated in the log domain.

use std::sync::OnceLock;

const TABLE_LEN: usize = 256;

fn ln_factorial_table() -> &'static [f64; TABLE_LEN] {
    static TABLE: OnceLock<[f64; TABLE_LEN]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; TABLE_LEN];
        for n in 1..TABLE_LEN {
            t[n] = t[n - 1] + (n as f64).ln();
        }
        t
    })
}

/// `ln(n!)`, tabulated for small `n` and Stirling's series beyond.
pub fn ln_factorial(n: u32) -> f64 {
    let n = n as usize;
    if n < TABLE_LEN {
        return ln_factorial_table()[n];
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

pub fn ln_pmf(k: u32, rate: f64) -> f64 {
    if k == 0 {
        return -rate;
    }
    k as f64 * rate.ln() - rate - ln_factorial(k)
}

pub fn pmf(k: u32, rate: f64) -> f64 {
    ln_pmf(k, rate).exp()
}

/// Lower and upper tail, `(P(X ≤ h), P(X > h))`, for `X ~ Poisson(rate)`.
///
/// Whichever tail is smaller is summed directly so that neither loses
/// relative precision to cancellation.
pub fn cdf_with_complement(rate: f64, h: u32) -> (f64, f64) {
    if (h as f64) < rate {
        let lower = ln_sum((0..=h).map(|i| ln_pmf(i, rate))).exp();
        let lower = lower.min(1.0);
        (lower, 1.0 - lower)
    } else {
        let mut terms = Vec::new();
        let mut k = h + 1;
        loop {
            let term = ln_pmf(k, rate);
            terms.push(term);
            // terms decrease geometrically once k > rate
            if term < terms[0] - 40.0 || k == u32::MAX {
                break;
            }
            k += 1;
        }
        let upper = ln_sum(terms.into_iter()).exp().min(1.0);
        (1.0 - upper, upper)
    }
}

/// `F_rate(h) = e^{-rate} Σ_{i ≤ h} rate^i / i!`
pub fn cdf(rate: f64, h: u32) -> f64 {
    cdf_with_complement(rate, h).0
}

/// Stable `ln Σ exp(x_i)`.
pub fn ln_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// `ln(e^a + e^b)`.
pub fn ln_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}
