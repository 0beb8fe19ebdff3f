use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{usage, Error, Result};
use crate::partition::fraction_to_count;

/// Exponent constant of the tail bound `2^{-c d n}`.
pub const TAIL_C: f64 = 1.0 / 16e8;
/// Largest prefix length whose joint law is tabulated for the chi-square test.
const MAX_JOINT_LEN: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingReport {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub d: u64,
    pub trials: u64,
    pub seed: u64,
    /// Indices `i` whose lower-bound probability `(bn - i + 1)/n` was
    /// negative and clamped to 0.
    pub clamped_rho: usize,
    /// Count of `(k, i)` with `Z < X`.
    pub domination_violations: u64,
    pub p_first: f64,
    pub p_first_sigma: f64,
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Empirical `P[sum Z <= a b d n / 4]`.
    pub tail_frequency: f64,
    /// Analytic bound `2^{-c d n}` on the same event.
    pub tail_bound: f64,
}

/// Simulates the coupled sequences `X` (independent, `P[X_i = 1] = rho_i`)
/// and `Z` (raised from `X` so that its law matches matching `an` left
/// vertices into a right side of `n` with `bn` marked vertices).
///
/// Given a prefix with `s` marked hits, the next vertex is marked with
/// probability `(bn - s)/(n - i + 1)`, the without-replacement law.
pub fn coupling_sim(n: usize, a: f64, b: f64, d: u64, seed: u64, trials: u64) -> Result<CouplingReport> {
    if n == 0 || d == 0 || trials == 0 {
        return usage("n, d and trials must be positive");
    }
    if !(b > 0.0) {
        return usage("b must be positive");
    }
    let an = fraction_to_count(a, n)?;
    let bn = fraction_to_count(b, n)?;
    let rho: Vec<f64> = (1..=an).map(|i| (bn as f64 - i as f64 + 1.0) / n as f64).collect();
    let clamped_rho = rho.iter().filter(|&&r| r < 0.0).count();
    let rho: Vec<f64> = rho.into_iter().map(|r| r.max(0.0)).collect();

    let joint_len = an.min(MAX_JOINT_LEN);
    let mut hist = vec![0u64; 1 << joint_len];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0u64;
    let mut first_hits = 0u64;
    let mut tail_hits = 0u64;
    let threshold = a * b * d as f64 * n as f64 / 4.0;
    for _ in 0..trials {
        let mut total = 0u64;
        for _ in 0..d {
            let mut s = 0usize;
            let mut pattern = 0usize;
            for i in 0..an {
                let x = rng.random::<f64>() < rho[i];
                let z = if x {
                    true
                } else {
                    let q = (bn - s) as f64 / (n - i) as f64;
                    let w = (q - rho[i]) / (1.0 - rho[i]);
                    if !(0.0..=1.0 + 1e-12).contains(&w) {
                        return Err(Error::Construction(format!("coupling probability {w} at step {}", i + 1)));
                    }
                    rng.random::<f64>() < w
                };
                if z && s == bn {
                    return Err(Error::Construction("marked vertices exhausted".into()));
                }
                if (z as u8) < (x as u8) {
                    violations += 1;
                }
                if z {
                    s += 1;
                    if i < joint_len {
                        pattern |= 1 << i;
                    }
                }
            }
            if an > 0 && pattern & 1 == 1 {
                first_hits += 1;
            }
            hist[pattern] += 1;
            total += s as u64;
        }
        if (total as f64) <= threshold {
            tail_hits += 1;
        }
    }

    // exact law of the prefix under sampling without replacement
    let samples = (trials * d) as f64;
    let mut chi = 0.0;
    let mut cells = 0usize;
    for (pattern, &observed) in hist.iter().enumerate() {
        let mut prob = 1.0;
        let mut s = 0usize;
        for i in 0..joint_len {
            let q = (bn - s.min(bn)) as f64 / (n - i) as f64;
            if (pattern >> i) & 1 == 1 {
                prob *= q;
                s += 1;
            } else {
                prob *= 1.0 - q;
            }
        }
        if prob > 0.0 {
            let expected = prob * samples;
            chi += (observed as f64 - expected).powi(2) / expected;
            cells += 1;
        } else if observed > 0 {
            return Err(Error::Construction(format!("impossible prefix {pattern:b} observed")));
        }
    }
    let dof = cells.saturating_sub(1);
    let p_value = if dof == 0 { 1.0 } else { 1.0 - ChiSquared::new(dof as f64).expect("dof > 0").cdf(chi) };
    let pb = bn as f64 / n as f64;
    Ok(CouplingReport {
        n,
        a,
        b,
        d,
        trials,
        seed,
        clamped_rho,
        domination_violations: violations,
        p_first: if an > 0 { first_hits as f64 / samples } else { f64::NAN },
        p_first_sigma: (pb * (1.0 - pb) / samples).sqrt(),
        chi_square: chi,
        dof,
        p_value,
        tail_frequency: tail_hits as f64 / trials as f64,
        tail_bound: 2f64.powf(-TAIL_C * d as f64 * n as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run() {
        let r = coupling_sim(4, 1.0, 0.5, 2, 1, 20_000).unwrap();
        assert_eq!(r.domination_violations, 0);
        assert_eq!(r.clamped_rho, 1);
        assert!((r.p_first - 0.5).abs() <= 4.0 * r.p_first_sigma);
        assert!(r.p_value > 1e-3, "{r:?}");
        // only C(4, 2) prefixes are possible
        assert_eq!(r.dof, 5);
    }

    #[test]
    fn invalid_inputs() {
        assert!(coupling_sim(4, 0.3, 0.5, 1, 0, 10).is_err());
        assert!(coupling_sim(4, 0.5, 0.0, 1, 0, 10).is_err());
    }
}
