use rayon::prelude::*;
use serde::Serialize;
use statrs::function::factorial::ln_binomial;

use crate::error::{usage, Result};
use crate::logweight::{scaled_ln, LogSumExp, LogWeight};
use crate::partition::{fraction_to_count, z_ab, DEFAULT_ZAB_CAP};
use crate::reduction::sample_h;
use crate::seed::derive_seed;
use crate::spin::SpinParams;

fn counts(n: usize, a: f64, b: f64) -> Result<(u64, u64)> {
    if n == 0 {
        return usage("gadget side must be at least 1");
    }
    Ok((fraction_to_count(a, n)? as u64, fraction_to_count(b, n)? as u64))
}

/// Exact `E[Z_{a,b}(H)]` over `H ~ H(N, delta)`:
/// `gamma^{D'(2N - A - B)} C(N, A) C(N, B) (sum_K beta^K gamma^{N-A-B+K}
/// C(B, K) C(N-B, A-K) / C(N, A))^delta` with `A = aN`, `B = bN`.
pub fn expected_zab_exact(n: usize, delta: u64, delta_prime: u64, p: &SpinParams, a: f64, b: f64) -> Result<LogWeight> {
    if p.mu() != 1.0 {
        return usage("the gadget sum has no external field");
    }
    let (za, zb) = counts(n, a, b)?;
    let nn = n as u64;
    let (lb, lg) = (p.beta().ln(), p.gamma().ln());
    let lo = (za + zb).saturating_sub(nn);
    let hi = za.min(zb);
    let mut inner = LogSumExp::new();
    for k in lo..=hi {
        inner.push(
            scaled_ln(k, lb)
                + scaled_ln(nn + k - za - zb, lg)
                + ln_binomial(zb, k)
                + ln_binomial(nn - zb, za - k),
        );
    }
    let per_matching = inner.value();
    if per_matching.is_zero() {
        return Ok(LogWeight::ZERO);
    }
    let ln_e = scaled_ln(delta_prime * (2 * nn - za - zb), lg)
        + ln_binomial(nn, za)
        + ln_binomial(nn, zb)
        + delta as f64 * (per_matching.ln() - ln_binomial(nn, za));
    Ok(LogWeight::from_ln(ln_e))
}

/// Monte Carlo mean of `Z_{a,b}` over sampled gadgets. Values are kept
/// relative to `shift` (the largest sampled `ln Z`) to stay in range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub trials: u64,
    pub seed: u64,
    pub shift: f64,
    /// Sample mean of `Z / e^shift`.
    pub mean_scaled: f64,
    /// Standard error of `mean_scaled`.
    pub stderr_scaled: f64,
}

impl McEstimate {
    pub fn ln_mean(&self) -> f64 {
        self.shift + self.mean_scaled.ln()
    }

    /// Distance of `target` from the mean, in standard errors. Zero
    /// spread with an exact match gives 0.
    pub fn z_score(&self, target: LogWeight) -> f64 {
        let diff = (target.ln() - self.shift).exp() - self.mean_scaled;
        // floor absorbs rounding when every trial returns the same value
        let floor = 1e-12 * self.mean_scaled.abs();
        if diff.abs() <= floor {
            0.0
        } else if self.stderr_scaled == 0.0 {
            f64::INFINITY
        } else {
            diff.abs() / self.stderr_scaled.max(floor)
        }
    }
}

/// Trial `t` samples its gadget from `derive_seed(seed, t)`.
pub fn expected_zab_mc(
    n: usize,
    delta: u64,
    delta_prime: u64,
    p: &SpinParams,
    a: f64,
    b: f64,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    if trials == 0 {
        return usage("need at least one trial");
    }
    let (za, zb) = counts(n, a, b)?;
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let h = sample_h(n, delta, derive_seed(seed, t))?;
            z_ab(&h, n, p, delta_prime, za as usize, zb as usize, DEFAULT_ZAB_CAP).map(|z| z.ln())
        })
        .collect::<Result<_>>()?;
    let shift = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let count = trials as f64;
    if shift == f64::NEG_INFINITY {
        return Ok(McEstimate { trials, seed, shift: 0.0, mean_scaled: 0.0, stderr_scaled: 0.0 });
    }
    let scaled: Vec<f64> = samples.iter().map(|&s| (s - shift).exp()).collect();
    let mean = scaled.iter().sum::<f64>() / count;
    let var = if trials > 1 {
        scaled.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (count - 1.0)
    } else {
        0.0
    };
    Ok(McEstimate { trials, seed, shift, mean_scaled: mean, stderr_scaled: (var / count).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_vertex_gadget() {
        let p = SpinParams::no_field(0.3, 0.7).unwrap();
        let e = expected_zab_exact(1, 1, 1, &p, 1.0, 1.0).unwrap();
        assert!((e.ln() - 0.3f64.ln()).abs() < 1e-15);
        let e = expected_zab_exact(1, 1, 1, &p, 0.0, 0.0).unwrap();
        assert!((e.ln() - 3.0 * 0.7f64.ln()).abs() < 1e-15);
        let mc = expected_zab_mc(1, 1, 1, &p, 0.0, 0.0, 50, 3).unwrap();
        assert_eq!(mc.stderr_scaled, 0.0);
        assert!((mc.ln_mean() - e.ln()).abs() < 1e-15);
    }

    #[test]
    fn rejects_fractional_counts() {
        let p = SpinParams::no_field(0.3, 0.7).unwrap();
        assert!(expected_zab_exact(3, 1, 1, &p, 0.5, 0.0).is_err());
    }

    #[test]
    fn mc_is_reproducible() {
        let p = SpinParams::no_field(0.5, 2.0).unwrap();
        let x = expected_zab_mc(3, 2, 1, &p, 1.0 / 3.0, 2.0 / 3.0, 200, 9).unwrap();
        assert_eq!(x, expected_zab_mc(3, 2, 1, &p, 1.0 / 3.0, 2.0 / 3.0, 200, 9).unwrap());
    }
}
