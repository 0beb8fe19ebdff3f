use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twospin::analysis::*;
use twospin::reduction::sample_h;
use twospin::uniqueness::theorem2_degrees;
use twospin::SpinParams;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Average of `Z_{a,b}` over every tuple of `delta` matchings, each
/// `Z_{a,b}` summed over all `2^{2N}` assignments with the right counts.
fn tuple_average(n: usize, delta: u32, delta_prime: u32, beta: f64, gamma: f64, za: usize, zb: usize) -> f64 {
    let perms = permutations(n);
    let mut tuples: Vec<Vec<&Vec<usize>>> = vec![vec![]];
    for _ in 0..delta {
        tuples = tuples.into_iter().flat_map(|t| perms.iter().map(move |p| { let mut t = t.clone(); t.push(p); t })).collect();
    }
    let boundary = gamma.powi((delta_prime as usize * (2 * n - za - zb)) as i32);
    let mut total = 0.0;
    for t in &tuples {
        let mut z = 0.0;
        for su in 0..1usize << n {
            for sv in 0..1usize << n {
                // bit set = spin 0
                if su.count_ones() as usize != za || sv.count_ones() as usize != zb {
                    continue;
                }
                let mut w = boundary;
                for p in t {
                    for (u, &v) in p.iter().enumerate() {
                        match ((su >> u) & 1, (sv >> v) & 1) {
                            (1, 1) => w *= beta,
                            (0, 0) => w *= gamma,
                            _ => {}
                        }
                    }
                }
                z += w;
            }
        }
        total += z;
    }
    total / tuples.len() as f64
}

#[test]
fn exact_expectation_matches_tuple_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..4 {
        let (beta, gamma) = (rng.random_range(0.05..2.0), rng.random_range(0.05..2.0));
        let p = SpinParams::no_field(beta, gamma).unwrap();
        for n in 1..=3usize {
            for delta in 1..=2u32 {
                for dp in 1..=2u32 {
                    for za in 0..=n {
                        for zb in 0..=n {
                            let (a, b) = (za as f64 / n as f64, zb as f64 / n as f64);
                            let e = expected_zab_exact(n, delta as u64, dp as u64, &p, a, b).unwrap();
                            let oracle = tuple_average(n, delta, dp, beta, gamma, za, zb);
                            assert!((e.ln() - oracle.ln()).abs() <= 1e-9 * oracle.ln().abs().max(1.0));
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn monte_carlo_agrees() {
    let p = SpinParams::no_field(0.5, 2.0).unwrap();
    let (a, b) = (1.0 / 3.0, 2.0 / 3.0);
    let exact = expected_zab_exact(3, 2, 1, &p, a, b).unwrap();
    let mc = expected_zab_mc(3, 2, 1, &p, a, b, 20_000, 5).unwrap();
    assert!(mc.z_score(exact) <= 4.0, "{mc:?} vs {exact}");
}

#[test]
fn psi_inner_max_is_stationary() {
    // setting the k-derivative to zero gives (b-k)(a-k) = e k (1-a-b+k)
    let e = std::f64::consts::E;
    for (a, b) in [(0.3, 0.4), (0.01, 0.9), (0.6, 0.7), (0.2, 0.2)] {
        let (qa, qb, qc) = (e - 1.0, e * (1.0 - a - b) + a + b, -a * b);
        let disc = (qb * qb - 4.0 * qa * qc).sqrt();
        let lo = (a + b - 1.0f64).max(0.0);
        let root = [(-qb - disc) / (2.0 * qa), (-qb + disc) / (2.0 * qa)]
            .into_iter()
            .find(|&k| k > lo && k < a.min(b))
            .unwrap();
        let v = psi(&PsiQuery { a, b, c: PSI_C }).unwrap();
        assert!((v.k - root).abs() < 1e-7, "({a}, {b}): {} vs {root}", v.k);
    }
}

#[test]
fn rate_convergence() {
    let p = SpinParams::no_field(0.5, 1.2).unwrap();
    let (a, b, delta, dp) = (0.25, 0.5, 3, 1);
    let rate = psi_rate(a, b, delta, dp, 0.5, 1.2).unwrap().value;
    let gaps: Vec<f64> = [20, 40, 80, 160]
        .iter()
        .map(|&n| (expected_zab_exact(n, delta, dp, &p, a, b).unwrap().ln() / n as f64 - rate).abs())
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps[3] < 0.05);
}

#[test]
fn relaxation_dominates_rate_at_hardness_degrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut audited = 0;
    while audited < 400 {
        let gamma: f64 = 1.0 + 10f64.powf(rng.random_range(-6.0..-4.0));
        let beta = rng.random_range(0.01..0.35);
        let t = theorem2_degrees(beta, gamma).unwrap();
        if !t.in_region {
            continue;
        }
        let delta = t.delta_star - t.delta_prime;
        let a = rng.random_range(PSI_LAMBDA..1.0);
        let b = rng.random_range(PSI_LAMBDA..1.0);
        let relaxed = psi(&PsiQuery { a, b, c: PSI_C }).unwrap().value;
        let exact = psi_rate(a, b, delta, t.delta_prime, beta, gamma).unwrap().value;
        assert!(exact <= relaxed + 1e-9 * relaxed.abs().max(1.0), "a={a} b={b}: {exact} > {relaxed}");
        audited += 1;
    }
}

#[test]
fn expander_mean_ratio_is_one() {
    for seed in 0..5 {
        let h = sample_h(6, 4, seed).unwrap();
        let r = expander_audit(&h, 6, 0.3, 0.25, AuditMode::Exhaustive).unwrap();
        assert!((r.mean_ratio - 1.0).abs() < 1e-12);
        assert_eq!(r.full_ratio, 1.0);
    }
}

#[test]
fn coupling_law() {
    let r = coupling_sim(6, 0.5, 0.5, 3, 8, 30_000).unwrap();
    assert_eq!(r.domination_violations, 0);
    assert_eq!(r.clamped_rho, 0);
    assert!((r.p_first - 0.5).abs() <= 4.0 * r.p_first_sigma);
    assert!(r.p_value > 1e-3);
    assert!(coupling_sim(5, 0.4, 0.6, 2, 1, 1000).is_ok());
}
