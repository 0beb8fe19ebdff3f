use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{usage, Error, Result};
use crate::graph::MultiGraph;

/// Largest side size audited exhaustively.
pub const EXHAUSTIVE_MAX_SIDE: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AuditMode {
    Exhaustive,
    Sampled { trials: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpanderAudit {
    pub epsilon: f64,
    pub factor: f64,
    /// Smallest `E(A, B) N / (delta |A| |B|)` over audited big pairs.
    pub worst_ratio: f64,
    /// Witness pair (left vertices, right vertices as `0..N` offsets).
    pub witness: (Vec<usize>, Vec<usize>),
    /// Ratio for `A = U`, `B = V`.
    pub full_ratio: f64,
    /// Mean ratio over audited pairs.
    pub mean_ratio: f64,
    pub pairs: u64,
    pub pass: bool,
}

/// Edge multiplicity between `a` (left side) and `b` (right side, given
/// as offsets into the right half).
pub fn edges_between(h: &MultiGraph, side: usize, a: &[usize], b: &[usize]) -> u64 {
    let mut in_a = vec![false; side];
    let mut in_b = vec![false; side];
    a.iter().for_each(|&u| in_a[u] = true);
    b.iter().for_each(|&v| in_b[v] = true);
    h.edges().iter().filter(|e| in_a[e.u] && in_b[e.v - side]).map(|e| e.mult).sum()
}

fn bits(mask: u64) -> Vec<usize> {
    (0..64).filter(|&i| (mask >> i) & 1 == 1).collect()
}

/// Audits `E(H, A, B) >= factor * delta |A| |B| / N` over big pairs
/// (`|A|, |B| >= ceil(eps N)`) of a bipartite gadget with sides `0..N`
/// and `N..2N`.
pub fn expander_audit(h: &MultiGraph, side: usize, eps: f64, factor: f64, mode: AuditMode) -> Result<ExpanderAudit> {
    if side == 0 || h.num_vertices() != 2 * side || !h.is_bipartite_split(side) {
        return usage(format!("expected a bipartite gadget with sides of size {side}"));
    }
    let Some(delta) = h.regular_degree().filter(|&d| d > 0) else {
        return usage("gadget is not regular");
    };
    if !(0.0..=1.0).contains(&eps) {
        return usage("epsilon must lie in [0, 1]");
    }
    let min_size = ((eps * side as f64).ceil() as usize).max(1);
    let scale = |e: u64, na: usize, nb: usize| e as f64 * side as f64 / (delta as f64 * na as f64 * nb as f64);

    let mut worst = (f64::INFINITY, 0u64, 0u64);
    let mut sum = 0.0;
    let mut pairs = 0u64;
    let mut record = |ratio: f64, a: u64, b: u64| {
        sum += ratio;
        pairs += 1;
        if ratio < worst.0 {
            worst = (ratio, a, b);
        }
    };
    let full_mask = if side == 64 { u64::MAX } else { (1u64 << side) - 1 };
    let full_ratio = scale(edges_between(h, side, &bits(full_mask), &bits(full_mask)), side, side);

    match mode {
        AuditMode::Exhaustive => {
            if side > EXHAUSTIVE_MAX_SIDE {
                return Err(Error::Resource { what: "gadget side (exhaustive audit)", value: side as u128, cap: EXHAUSTIVE_MAX_SIDE as u128 });
            }
            let mut cols = vec![0u64; side];
            let mut e_of = vec![0u64; 1 << side];
            for a in 1..=full_mask {
                let na = a.count_ones() as usize;
                if na < min_size {
                    continue;
                }
                cols.iter_mut().for_each(|c| *c = 0);
                for e in h.edges() {
                    if (a >> e.u) & 1 == 1 {
                        cols[e.v - side] += e.mult;
                    }
                }
                for b in 1..=full_mask {
                    let low = b.trailing_zeros() as usize;
                    e_of[b as usize] = e_of[(b & (b - 1)) as usize] + cols[low];
                    let nb = b.count_ones() as usize;
                    if nb >= min_size {
                        record(scale(e_of[b as usize], na, nb), a, b);
                    }
                }
            }
        }
        AuditMode::Sampled { trials, seed } => {
            if side > 64 {
                return Err(Error::Resource { what: "gadget side (sampled audit)", value: side as u128, cap: 64 });
            }
            record(full_ratio, full_mask, full_mask);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx: Vec<usize> = (0..side).collect();
            let mut pick = |rng: &mut ChaCha8Rng| -> u64 {
                let k = rng.random_range(min_size..=side);
                idx.shuffle(rng);
                idx[..k].iter().fold(0u64, |m, &i| m | (1 << i))
            };
            for _ in 0..trials {
                let a = pick(&mut rng);
                let b = pick(&mut rng);
                let e = edges_between(h, side, &bits(a), &bits(b));
                record(scale(e, a.count_ones() as usize, b.count_ones() as usize), a, b);
            }
        }
    }
    Ok(ExpanderAudit {
        epsilon: eps,
        factor,
        worst_ratio: worst.0,
        witness: (bits(worst.1), bits(worst.2)),
        full_ratio,
        mean_ratio: if pairs > 0 { sum / pairs as f64 } else { f64::NAN },
        pairs,
        pass: worst.0 >= factor,
    })
}
