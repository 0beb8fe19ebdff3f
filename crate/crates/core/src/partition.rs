//! Exact and constraint-restricted partition sums by exhaustive enumeration.
//!
//! Vertices whose spin is forced by a `CountRange` constraint (`hi = 0` or
//! `lo = |set|`) are pinned and removed from the enumeration. The remaining
//! free vertices are enumerated in ascending-integer blocks; inside each
//! block a Gray-code walk updates the weight statistics and the per-set zero
//! counts with one flip per step.

use rayon::prelude::*;

use crate::error::{usage, Error, Result};
use crate::graph::MultiGraph;
use crate::logweight::{tree_reduce, LogSumExp, LogWeight};
use crate::spin::{SideConstraint, SpinParams, WeightCounts};

pub const DEFAULT_MAX_VERTICES: usize = 28;
const HARD_LIMIT: usize = 62;
const BLOCK_BITS: usize = 14;

/// Enumeration caps.
#[derive(Clone, Copy, Debug)]
pub struct EnumOptions {
    /// Largest number of free (unpinned) vertices enumerated without `force`.
    pub max_free_vertices: usize,
    pub force: bool,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions { max_free_vertices: DEFAULT_MAX_VERTICES, force: false }
    }
}

impl EnumOptions {
    pub fn with_cap(max_free_vertices: usize) -> Self {
        EnumOptions { max_free_vertices, force: false }
    }

    fn check(&self, free: usize) -> Result<()> {
        if free > HARD_LIMIT || (!self.force && free > self.max_free_vertices) {
            let cap = if self.force { HARD_LIMIT } else { self.max_free_vertices };
            return Err(Error::Resource { what: "free vertices", value: free as u128, cap: cap as u128 });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
enum Compiled {
    Range { set: usize, lo: u32, hi: u32 },
    Compare { lesser: usize, greater: usize },
    MinAtMost { first: usize, second: usize, bound: u32 },
}

#[derive(Debug)]
struct FreeVertex {
    pinned_zero_mult: u64,
    pinned_one_mult: u64,
    free_nbrs: Vec<(usize, u64)>,
    sets: Vec<usize>,
}

/// Precomputed enumeration over the free vertices of a graph.
#[derive(Debug)]
pub struct Enumeration {
    free: Vec<usize>,
    vertices: Vec<FreeVertex>,
    base: WeightCounts,
    set_base: Vec<u32>,
    constraints: Vec<Compiled>,
}

impl Enumeration {
    /// Returns `None` when the pinned constraints contradict each other, in
    /// which case every restricted sum is empty.
    pub fn new(g: &MultiGraph, constraints: &[SideConstraint], opts: &EnumOptions) -> Result<Option<Self>> {
        let n = g.num_vertices();
        for c in constraints {
            c.validate(n)?;
        }

        let mut pinned: Vec<Option<u8>> = vec![None; n];
        for c in constraints {
            if let SideConstraint::CountRange { set, lo, hi } = c {
                let forced = if *hi == 0 {
                    Some(1)
                } else if *lo == set.len() {
                    Some(0)
                } else {
                    None
                };
                if let Some(spin) = forced {
                    for &v in set {
                        match pinned[v] {
                            Some(s) if s != spin => return Ok(None),
                            _ => pinned[v] = Some(spin),
                        }
                    }
                }
            }
        }

        let free: Vec<usize> = (0..n).filter(|&v| pinned[v].is_none()).collect();
        opts.check(free.len())?;
        let mut free_index = vec![usize::MAX; n];
        for (i, &v) in free.iter().enumerate() {
            free_index[v] = i;
        }

        let mut base = WeightCounts {
            zeros: pinned.iter().filter(|s| **s == Some(0)).count() as u64,
            ..Default::default()
        };
        let mut vertices: Vec<FreeVertex> = free
            .iter()
            .map(|_| FreeVertex { pinned_zero_mult: 0, pinned_one_mult: 0, free_nbrs: Vec::new(), sets: Vec::new() })
            .collect();
        for e in g.edges() {
            match (pinned[e.u], pinned[e.v]) {
                (Some(0), Some(0)) => base.t00 += e.mult,
                (Some(1), Some(1)) => base.t11 += e.mult,
                (Some(_), Some(_)) => {}
                (Some(s), None) | (None, Some(s)) => {
                    let f = if pinned[e.u].is_none() { free_index[e.u] } else { free_index[e.v] };
                    if s == 0 {
                        vertices[f].pinned_zero_mult += e.mult;
                    } else {
                        vertices[f].pinned_one_mult += e.mult;
                    }
                }
                (None, None) => {
                    let (a, b) = (free_index[e.u], free_index[e.v]);
                    vertices[a].free_nbrs.push((b, e.mult));
                    vertices[b].free_nbrs.push((a, e.mult));
                }
            }
        }

        let mut compiled = Vec::with_capacity(constraints.len());
        let mut sets: Vec<Vec<usize>> = Vec::new();
        for c in constraints {
            match c {
                SideConstraint::CountRange { set, lo, hi } => {
                    let id = sets.len();
                    sets.push(set.clone());
                    compiled.push(Compiled::Range { set: id, lo: *lo as u32, hi: *hi as u32 });
                }
                SideConstraint::CountCompare { lesser, greater } => {
                    let id = sets.len();
                    sets.push(lesser.clone());
                    sets.push(greater.clone());
                    compiled.push(Compiled::Compare { lesser: id, greater: id + 1 });
                }
                SideConstraint::MinCountAtMost { first, second, bound } => {
                    let id = sets.len();
                    sets.push(first.clone());
                    sets.push(second.clone());
                    compiled.push(Compiled::MinAtMost { first: id, second: id + 1, bound: *bound as u32 });
                }
            }
        }

        let mut set_base = vec![0u32; sets.len()];
        for (id, set) in sets.iter().enumerate() {
            for &v in set {
                match pinned[v] {
                    Some(0) => set_base[id] += 1,
                    Some(_) => {}
                    None => vertices[free_index[v]].sets.push(id),
                }
            }
        }

        Ok(Some(Enumeration { free, vertices, base, set_base, constraints: compiled }))
    }

    pub fn free_vertices(&self) -> &[usize] {
        &self.free
    }

    /// Folds `visit` over the weight statistics of every admissible
    /// configuration. Blocks are combined with a fixed-shape tree so the
    /// result is independent of thread scheduling.
    pub fn fold<A, I, V, M>(&self, init: I, visit: V, merge: M) -> A
    where
        A: Send,
        I: Fn() -> A + Sync,
        V: Fn(&mut A, WeightCounts) + Sync,
        M: Fn(A, A) -> A,
    {
        let nfree = self.free.len();
        let block_bits = nfree.min(BLOCK_BITS);
        let blocks: u64 = 1u64 << (nfree - block_bits);
        let parts: Vec<A> = (0..blocks)
            .into_par_iter()
            .map(|blk| {
                let mut acc = init();
                self.walk_block(blk << block_bits, block_bits, &mut acc, &visit);
                acc
            })
            .collect();
        tree_reduce(parts, merge).expect("at least one block")
    }

    fn walk_block<A, V>(&self, start: u64, bits: usize, acc: &mut A, visit: &V)
    where
        V: Fn(&mut A, WeightCounts),
    {
        let mut state = start;
        let mut counts = self.base;
        let mut set_zeros = self.set_base.clone();
        for (i, fv) in self.vertices.iter().enumerate() {
            if (state >> i) & 1 == 0 {
                counts.zeros += 1;
                counts.t00 += fv.pinned_zero_mult;
                for &s in &fv.sets {
                    set_zeros[s] += 1;
                }
                for &(j, m) in &fv.free_nbrs {
                    if j > i && (state >> j) & 1 == 0 {
                        counts.t00 += m;
                    }
                }
            } else {
                counts.t11 += fv.pinned_one_mult;
                for &(j, m) in &fv.free_nbrs {
                    if j > i && (state >> j) & 1 == 1 {
                        counts.t11 += m;
                    }
                }
            }
        }

        let steps: u64 = 1u64 << bits;
        for step in 0..steps {
            if step > 0 {
                let i = step.trailing_zeros() as usize;
                let fv = &self.vertices[i];
                let (mut zero_nbrs, mut one_nbrs) = (fv.pinned_zero_mult, fv.pinned_one_mult);
                for &(j, m) in &fv.free_nbrs {
                    if (state >> j) & 1 == 0 {
                        zero_nbrs += m;
                    } else {
                        one_nbrs += m;
                    }
                }
                if (state >> i) & 1 == 1 {
                    counts.t11 -= one_nbrs;
                    counts.t00 += zero_nbrs;
                    counts.zeros += 1;
                    for &s in &fv.sets {
                        set_zeros[s] += 1;
                    }
                } else {
                    counts.t00 -= zero_nbrs;
                    counts.t11 += one_nbrs;
                    counts.zeros -= 1;
                    for &s in &fv.sets {
                        set_zeros[s] -= 1;
                    }
                }
                state ^= 1u64 << i;
            }
            if self.admits(&set_zeros) {
                visit(acc, counts);
            }
        }
    }

    #[inline]
    fn admits(&self, z: &[u32]) -> bool {
        self.constraints.iter().all(|c| match *c {
            Compiled::Range { set, lo, hi } => lo <= z[set] && z[set] <= hi,
            Compiled::Compare { lesser, greater } => z[lesser] <= z[greater],
            Compiled::MinAtMost { first, second, bound } => z[first].min(z[second]) <= bound,
        })
    }
}

/// Log partition function, optionally restricted to configurations meeting
/// every side constraint. An infeasible restriction yields an exact zero.
pub fn partition_exact(
    g: &MultiGraph,
    p: &SpinParams,
    constraints: &[SideConstraint],
    opts: &EnumOptions,
) -> Result<LogWeight> {
    let Some(en) = Enumeration::new(g, constraints, opts)? else {
        return Ok(LogWeight::ZERO);
    };
    let f = p.log_factors();
    let acc = en.fold(LogSumExp::new, |acc, c| acc.push(c.log_weight(&f)), LogSumExp::merge);
    Ok(acc.value())
}

/// Number of configurations admitted by the constraints.
pub fn count_admissible(g: &MultiGraph, constraints: &[SideConstraint], opts: &EnumOptions) -> Result<u64> {
    match Enumeration::new(g, constraints, opts)? {
        None => Ok(0),
        Some(en) => Ok(en.fold(|| 0u64, |acc, _| *acc += 1, |a, b| a + b)),
    }
}

/// Converts a fraction of `n` to an integral count, rejecting fractions
/// that are not multiples of `1/n`.
pub fn fraction_to_count(frac: f64, n: usize) -> Result<usize> {
    if !(0.0..=1.0).contains(&frac) {
        return usage(format!("fraction {frac} outside [0, 1]"));
    }
    let scaled = frac * n as f64;
    let rounded = scaled.round();
    if (scaled - rounded).abs() > 1e-9 * (n as f64).max(1.0) {
        return usage(format!("{frac} * {n} is not an integer"));
    }
    Ok(rounded as usize)
}

/// Largest number of `(a, b)`-assignments `z_ab` enumerates.
pub const DEFAULT_ZAB_CAP: u128 = 1 << 26;

/// Restricted sum over `(a, b)`-assignments of a bipartite gadget whose
/// sides are `0..side` and `side..2*side`: exactly `zeros_u` zero spins on
/// the first side and `zeros_v` on the second, each term multiplied by
/// `gamma^{delta' * (2 * side - zeros_u - zeros_v)}`.
///
/// The field is not part of this sum, so `mu` must be 1.
pub fn z_ab(
    h: &MultiGraph,
    side: usize,
    p: &SpinParams,
    delta_prime: u64,
    zeros_u: usize,
    zeros_v: usize,
    cap: u128,
) -> Result<LogWeight> {
    if h.num_vertices() != 2 * side || !h.is_bipartite_split(side) {
        return usage(format!("expected a bipartite gadget with sides of size {side}"));
    }
    if p.mu() != 1.0 {
        return usage("z_ab is defined without an external field; translate the field first");
    }
    if zeros_u > side || zeros_v > side {
        return usage("zero counts exceed the side size");
    }
    if side > 63 {
        return Err(Error::Resource { what: "gadget side", value: side as u128, cap: 63 });
    }
    let terms = binomial_u128(side, zeros_u).saturating_mul(binomial_u128(side, zeros_v));
    if terms > cap {
        return Err(Error::Resource { what: "(a,b)-assignments", value: terms, cap });
    }

    let f = p.log_factors();
    let boundary = (2 * side - zeros_u - zeros_v) as u64 * delta_prime;
    let adj: Vec<Vec<(usize, u64)>> = {
        let mut a = vec![Vec::new(); side];
        for e in h.edges() {
            a[e.u].push((e.v - side, e.mult));
        }
        a
    };
    let us: Vec<u64> = subsets_of_size(side, zeros_u).collect();
    let vs: Vec<u64> = subsets_of_size(side, zeros_v).collect();
    let mut acc = LogSumExp::new();
    for &zu in &us {
        for &zv in &vs {
            let mut c = WeightCounts::default();
            for (u, nbrs) in adj.iter().enumerate() {
                let su = (zu >> u) & 1;
                for &(v, m) in nbrs {
                    let sv = (zv >> v) & 1;
                    match (su, sv) {
                        (1, 1) => c.t00 += m,
                        (0, 0) => c.t11 += m,
                        _ => {}
                    }
                }
            }
            c.t11 += boundary;
            acc.push(c.log_weight(&f));
        }
    }
    Ok(acc.value())
}

/// Bitmasks over `0..n` with exactly `k` bits set, in increasing order.
pub fn subsets_of_size(n: usize, k: usize) -> impl Iterator<Item = u64> {
    assert!(n < 64 && k <= n);
    let limit = 1u64 << n;
    let first = if k == 0 { 0 } else { (1u64 << k) - 1 };
    let mut next = Some(first);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 {
            None
        } else {
            // Gosper's hack
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            let nxt = (((r ^ cur) >> 2) / c) | r;
            (nxt < limit).then_some(nxt)
        };
        Some(cur)
    })
}

pub(crate) fn binomial_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::named;
    use crate::spin::Configuration;

    fn brute(g: &MultiGraph, p: &SpinParams, cs: &[SideConstraint]) -> f64 {
        let n = g.num_vertices();
        let mut total = 0.0;
        for idx in 0..(1u64 << n) {
            let s = Configuration::from_index(n, idx);
            if cs.iter().all(|c| c.is_satisfied(&s)) {
                total += crate::spin::config_weight(g, p, &s).unwrap().to_linear();
            }
        }
        total
    }

    #[test]
    fn single_edge_all_ones() {
        let p = SpinParams::new(1.0, 1.0, 1.0).unwrap();
        let z = partition_exact(&named::single_edge(), &p, &[], &EnumOptions::default()).unwrap();
        assert!((z.ln() - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn path4_hardcore_counts_independent_sets() {
        let z = partition_exact(&named::path(4), &SpinParams::hardcore(), &[], &EnumOptions::default()).unwrap();
        assert!((z.ln() - 8f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn triangle_nonempty_independent_sets() {
        let g = named::cycle(3);
        let c = SideConstraint::CountRange { set: vec![0, 1, 2], lo: 1, hi: 3 };
        let z = partition_exact(&g, &SpinParams::hardcore(), &[c], &EnumOptions::default()).unwrap();
        assert!((z.ln() - 3f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn pinned_and_unpinned_paths_agree_with_brute_force() {
        let g = MultiGraph::from_edges(7, [(0, 1, 2), (1, 2, 1), (2, 3, 3), (3, 4, 1), (4, 5, 1), (5, 6, 2), (0, 6, 1), (1, 4, 1)])
            .unwrap();
        let p = SpinParams::new(0.4, 1.7, 0.8).unwrap();
        let cases: Vec<Vec<SideConstraint>> = vec![
            vec![],
            vec![SideConstraint::CountRange { set: vec![0, 2], lo: 0, hi: 0 }],
            vec![SideConstraint::CountRange { set: vec![1, 3], lo: 2, hi: 2 }],
            vec![SideConstraint::CountCompare { lesser: vec![0, 1, 2], greater: vec![4, 5, 6] }],
            vec![
                SideConstraint::CountRange { set: vec![6], lo: 0, hi: 0 },
                SideConstraint::MinCountAtMost { first: vec![0, 1], second: vec![3, 4], bound: 0 },
            ],
        ];
        for cs in cases {
            let z = partition_exact(&g, &p, &cs, &EnumOptions::default()).unwrap();
            let b = brute(&g, &p, &cs);
            assert!((z.to_linear() - b).abs() <= 1e-12 * b, "{cs:?}: {} vs {b}", z.to_linear());
        }
    }

    #[test]
    fn contradictory_pins_give_zero() {
        let g = named::path(3);
        let cs = [
            SideConstraint::CountRange { set: vec![1], lo: 0, hi: 0 },
            SideConstraint::CountRange { set: vec![1, 2], lo: 2, hi: 2 },
        ];
        let z = partition_exact(&g, &SpinParams::hardcore(), &cs, &EnumOptions::default()).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn infeasible_count_is_empty_sum() {
        let g = named::path(3);
        let cs = [SideConstraint::CountCompare { lesser: vec![0, 1, 2], greater: vec![] }, SideConstraint::CountRange {
            set: vec![0, 1, 2],
            lo: 1,
            hi: 3,
        }];
        let z = partition_exact(&g, &SpinParams::hardcore(), &cs, &EnumOptions::default()).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn cap_is_enforced_on_free_vertices() {
        let g = named::path(30);
        let r = partition_exact(&g, &SpinParams::hardcore(), &[], &EnumOptions::default());
        assert!(matches!(r, Err(Error::Resource { .. })));
        // pinning 10 vertices brings it under the cap
        let c = SideConstraint::CountRange { set: (0..10).collect(), lo: 0, hi: 0 };
        assert!(partition_exact(&g, &SpinParams::hardcore(), &[c], &EnumOptions::default()).is_ok());
    }

    #[test]
    fn block_boundaries_do_not_matter() {
        // 17 free vertices forces several blocks
        let g = named::cycle(17);
        let p = SpinParams::new(0.3, 1.2, 1.1).unwrap();
        let z = partition_exact(&g, &p, &[], &EnumOptions::default()).unwrap();
        // transfer matrix oracle for the cycle: Z = tr(T^n), T = [[mu*beta, sqrt(mu)],[sqrt(mu), gamma]]
        let (a, b, d) = (1.1 * 0.3, 1.1f64.sqrt(), 1.2);
        let tr = (a + d) / 2.0;
        let disc = ((a - d) * (a - d) / 4.0 + b * b).sqrt();
        let (l1, l2) = (tr + disc, tr - disc);
        let expect = l1.powi(17) + l2.powi(17);
        assert!((z.ln() - expect.ln()).abs() < 1e-12);
    }

    #[test]
    fn subsets_enumeration() {
        let all: Vec<u64> = subsets_of_size(4, 2).collect();
        assert_eq!(all, vec![0b0011, 0b0101, 0b0110, 0b1001, 0b1010, 0b1100]);
        assert_eq!(subsets_of_size(3, 0).collect::<Vec<_>>(), vec![0]);
        assert_eq!(subsets_of_size(3, 3).collect::<Vec<_>>(), vec![0b111]);
        assert_eq!(binomial_u128(10, 3), 120);
    }

    #[test]
    fn z_ab_single_pair() {
        let h = MultiGraph::from_edges(2, [(0, 1, 1)]).unwrap();
        let p = SpinParams::no_field(0.3, 0.6).unwrap();
        let z = z_ab(&h, 1, &p, 1, 1, 1, DEFAULT_ZAB_CAP).unwrap();
        assert!((z.ln() - 0.3f64.ln()).abs() < 1e-15);
        let z = z_ab(&h, 1, &p, 1, 0, 0, DEFAULT_ZAB_CAP).unwrap();
        assert!((z.ln() - 3.0 * 0.6f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn z_ab_two_by_two_direct_sum() {
        // perfect matching 0-2, 1-3
        let h = MultiGraph::from_edges(4, [(0, 2, 1), (1, 3, 1)]).unwrap();
        let p = SpinParams::no_field(0.5, 0.5).unwrap();
        let z = z_ab(&h, 2, &p, 1, 1, 1, DEFAULT_ZAB_CAP).unwrap();
        // rho picks one zero on each side: matched zeros give beta * gamma,
        // crossed zeros give two mixed edges; boundary factor gamma^2 each
        let (b, g) = (0.5f64, 0.5f64);
        let expect = g * g * (2.0 * b * g + 2.0 * 1.0);
        assert!((z.to_linear() - expect).abs() < 1e-14);
    }

    #[test]
    fn z_ab_rejects_field_and_non_bipartite() {
        let h = MultiGraph::from_edges(2, [(0, 1, 1)]).unwrap();
        let p = SpinParams::new(0.5, 0.5, 2.0).unwrap();
        assert!(z_ab(&h, 1, &p, 1, 1, 1, DEFAULT_ZAB_CAP).is_err());
        let g = MultiGraph::from_edges(4, [(0, 1, 1)]).unwrap();
        let p = SpinParams::no_field(0.5, 0.5).unwrap();
        assert!(z_ab(&g, 2, &p, 1, 1, 1, DEFAULT_ZAB_CAP).is_err());
    }

    #[test]
    fn fraction_counts() {
        assert_eq!(fraction_to_count(0.5, 4).unwrap(), 2);
        assert_eq!(fraction_to_count(1.0 / 3.0, 3).unwrap(), 1);
        assert!(matches!(fraction_to_count(0.3, 4), Err(Error::Usage(_))));
        assert!(fraction_to_count(1.5, 4).is_err());
    }
}
