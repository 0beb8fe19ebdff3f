use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twospin::e2lin2::{assignment_from_index, random_instance, E2Lin2Instance, Equation};

/// Per-equation loop over every assignment.
fn naive_theta_star(inst: &E2Lin2Instance) -> (usize, Vec<u8>) {
    let n = inst.num_vars();
    let mut best = (0, vec![0; n]);
    for idx in 0..1u64 << n {
        let s = assignment_from_index(n, idx);
        let mut count = 0;
        for e in inst.equations() {
            if (s[e.i] + s[e.j]) % 2 == e.b {
                count += 1;
            }
        }
        if count > best.0 || idx == 0 {
            best = (count, s);
        }
    }
    best
}

#[test]
fn bit_parallel_agrees_with_naive() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for k in 0..100 {
        let n: usize = rng.random_range(2..=12);
        let m = rng.random_range(n.div_ceil(2)..=3 * n);
        let inst = random_instance(n, m, k).unwrap();
        assert_eq!(inst.theta_star().unwrap(), naive_theta_star(&inst), "{}", inst.to_text());
    }
}

#[test]
fn optimum_beats_half() {
    for seed in 0..50 {
        let inst = random_instance(9, 20, seed).unwrap();
        let (best, s) = inst.theta_star().unwrap();
        assert!(2 * best >= inst.num_equations());
        assert_eq!(inst.theta(&s).unwrap(), best);
    }
}

#[test]
fn relabeling_preserves_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for seed in 0..30 {
        let inst = random_instance(10, 18, seed).unwrap();
        let mut perm: Vec<usize> = (0..10).collect();
        perm.shuffle(&mut rng);
        let relabeled = E2Lin2Instance::new(
            10,
            inst.equations().iter().map(|e| Equation { i: perm[e.i], j: perm[e.j], b: e.b }).collect(),
        )
        .unwrap();
        assert_eq!(inst.theta_star().unwrap().0, relabeled.theta_star().unwrap().0);
    }
}

#[test]
fn codec_round_trip_corpus() {
    for seed in 0..50 {
        let inst = random_instance(2 + (seed as usize % 15), 30, seed).unwrap();
        assert_eq!(E2Lin2Instance::from_text(&inst.to_text()).unwrap(), inst);
    }
}

#[test]
fn larger_instances_use_many_chunks() {
    let inst = random_instance(20, 60, 5).unwrap();
    let (best, s) = inst.theta_star().unwrap();
    assert_eq!(inst.theta(&s).unwrap(), best);
    // the lowest encoding wins ties, so every lower assignment scores less
    let idx: u64 = s.iter().enumerate().map(|(v, &b)| (b as u64) << v).sum();
    for lower in idx.saturating_sub(2000)..idx {
        assert!(inst.theta(&assignment_from_index(20, lower)).unwrap() < best);
    }
}

proptest! {
    #[test]
    fn global_flip_invariance(seed in any::<u64>(), bits in proptest::collection::vec(0u8..2, 8)) {
        let inst = random_instance(8, 13, seed).unwrap();
        let flipped: Vec<u8> = bits.iter().map(|b| 1 - b).collect();
        prop_assert_eq!(inst.theta(&bits).unwrap(), inst.theta(&flipped).unwrap());
    }

    #[test]
    fn occurrences_sum_to_twice_m(seed in any::<u64>(), n in 2usize..30, extra in 0usize..40) {
        let m = n.div_ceil(2) + extra;
        let inst = random_instance(n, m, seed).unwrap();
        prop_assert_eq!(inst.occurrences().iter().sum::<usize>(), 2 * m);
        prop_assert!(inst.is_normalized());
    }
}
