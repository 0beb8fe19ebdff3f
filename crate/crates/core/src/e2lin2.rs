//! MAX-E2LIN2 instances: equations `x_i + x_j = b` over Z_2.
//!
//! Variables are 0-based in memory and 1-based in files.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{usage, Error, Result};

/// Largest variable count `theta_star` will search exhaustively.
pub const MAX_EXHAUSTIVE_VARS: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Equation {
    pub i: usize,
    pub j: usize,
    pub b: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct E2Lin2Instance {
    n: usize,
    equations: Vec<Equation>,
}

fn check_assignment(n: usize, s: &[u8]) -> Result<()> {
    if s.len() != n {
        return usage(format!("assignment has {} entries, instance has {n} variables", s.len()));
    }
    if s.iter().any(|&x| x > 1) {
        return usage("assignment entries must be 0 or 1");
    }
    Ok(())
}

/// Assignment with variable 0 in the least significant bit.
pub fn assignment_from_index(n: usize, index: u64) -> Vec<u8> {
    (0..n).map(|v| ((index >> v) & 1) as u8).collect()
}

impl E2Lin2Instance {
    pub fn new(n: usize, equations: Vec<Equation>) -> Result<Self> {
        if equations.is_empty() {
            return usage("an instance needs at least one equation");
        }
        for (k, e) in equations.iter().enumerate() {
            if e.i >= n || e.j >= n {
                return usage(format!("equation {k} references a variable outside 0..{n}"));
            }
            if e.i == e.j {
                return usage(format!("equation {k} uses variable {} twice", e.i));
            }
            if e.b > 1 {
                return usage(format!("equation {k} has right-hand side {}", e.b));
            }
        }
        Ok(E2Lin2Instance { n, equations })
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_equations(&self) -> usize {
        self.equations.len()
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    /// Number of equations each variable appears in.
    pub fn occurrences(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for e in &self.equations {
            d[e.i] += 1;
            d[e.j] += 1;
        }
        d
    }

    pub fn is_normalized(&self) -> bool {
        self.occurrences().iter().all(|&d| d > 0)
    }

    /// Drops variables that appear in no equation. Returns the renumbered
    /// instance and, for each new index, the original one.
    pub fn normalize(&self) -> (E2Lin2Instance, Vec<usize>) {
        let d = self.occurrences();
        let kept: Vec<usize> = (0..self.n).filter(|&v| d[v] > 0).collect();
        let mut new_index = vec![usize::MAX; self.n];
        for (k, &v) in kept.iter().enumerate() {
            new_index[v] = k;
        }
        let equations = self
            .equations
            .iter()
            .map(|e| Equation { i: new_index[e.i], j: new_index[e.j], b: e.b })
            .collect();
        (E2Lin2Instance { n: kept.len(), equations }, kept)
    }

    /// Number of equations satisfied by `s`.
    pub fn theta(&self, s: &[u8]) -> Result<usize> {
        check_assignment(self.n, s)?;
        Ok(self.equations.iter().filter(|e| s[e.i] ^ s[e.j] == e.b).count())
    }

    /// Exact optimum and the lowest-encoded assignment attaining it.
    ///
    /// Assignments are scored 64 at a time: lane `l` of a word holds
    /// assignment `64 * chunk + l`, each equation yields a mask of the lanes
    /// it satisfies, and the masks are summed in a bit-sliced counter.
    pub fn theta_star(&self) -> Result<(usize, Vec<u8>)> {
        let n = self.n;
        if n > MAX_EXHAUSTIVE_VARS {
            return Err(Error::Resource { what: "variables (exhaustive theta*)", value: n as u128, cap: MAX_EXHAUSTIVE_VARS as u128 });
        }
        // lane patterns for the six low variables
        const LANE: [u64; 6] = [
            0xAAAA_AAAA_AAAA_AAAA,
            0xCCCC_CCCC_CCCC_CCCC,
            0xF0F0_F0F0_F0F0_F0F0,
            0xFF00_FF00_FF00_FF00,
            0xFFFF_0000_FFFF_0000,
            0xFFFF_FFFF_0000_0000,
        ];
        let total: u64 = 1 << n;
        let chunks = total.div_ceil(64);
        let valid = if total >= 64 { u64::MAX } else { (1u64 << total) - 1 };
        let width = (usize::BITS - self.equations.len().leading_zeros()) as usize;

        let score = |chunk: u64| -> (usize, u64) {
            let var = |v: usize| -> u64 {
                if v < 6 {
                    LANE[v]
                } else if (chunk >> (v - 6)) & 1 == 1 {
                    u64::MAX
                } else {
                    0
                }
            };
            let mut counter = vec![0u64; width];
            for e in &self.equations {
                let rhs = if e.b == 1 { u64::MAX } else { 0 };
                let mut carry = !(var(e.i) ^ var(e.j) ^ rhs);
                for bit in counter.iter_mut() {
                    let next = *bit & carry;
                    *bit ^= carry;
                    carry = next;
                    if carry == 0 {
                        break;
                    }
                }
            }
            let mut best = (0usize, u64::MAX);
            for lane in 0..64 {
                if (valid >> lane) & 1 == 0 {
                    continue;
                }
                let c = counter.iter().enumerate().map(|(k, w)| (((w >> lane) & 1) as usize) << k).sum();
                if c > best.0 || best.1 == u64::MAX {
                    best = (c, 64 * chunk + lane);
                }
            }
            best
        };
        let better = |a: (usize, u64), b: (usize, u64)| -> (usize, u64) {
            if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        };
        let (count, index) = (0..chunks)
            .into_par_iter()
            .map(score)
            .reduce(|| (0, u64::MAX), better);
        Ok((count, assignment_from_index(n, index)))
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("p e2lin2 {} {}\n", self.n, self.equations.len());
        for e in &self.equations {
            let _ = writeln!(s, "{} {} {}", e.i + 1, e.j + 1, e.b);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let perr = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };
        let mut header: Option<(usize, usize)> = None;
        let mut equations = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = t.split_whitespace().collect();
            match header {
                None => {
                    if fields.len() != 4 || fields[0] != "p" || fields[1] != "e2lin2" {
                        return Err(perr(line, "expected header `p e2lin2 <n> <m>`"));
                    }
                    let n = fields[2].parse().map_err(|_| perr(line, "bad variable count"))?;
                    let m = fields[3].parse().map_err(|_| perr(line, "bad equation count"))?;
                    header = Some((n, m));
                }
                Some((n, _)) => {
                    if fields.len() != 3 {
                        return Err(perr(line, "expected `<i> <j> <b>`"));
                    }
                    let var = |f: &str| -> Result<usize> {
                        let v: usize = f.parse().map_err(|_| perr(line, "bad variable index"))?;
                        if v == 0 || v > n {
                            return Err(perr(line, "variable index out of range (1-based)"));
                        }
                        Ok(v - 1)
                    };
                    let (i, j) = (var(fields[0])?, var(fields[1])?);
                    if i == j {
                        return Err(perr(line, "equation uses the same variable twice"));
                    }
                    let b = match fields[2] {
                        "0" => 0,
                        "1" => 1,
                        _ => return Err(perr(line, "right-hand side must be 0 or 1")),
                    };
                    equations.push(Equation { i, j, b });
                }
            }
        }
        let Some((n, m)) = header else {
            return Err(perr(1, "missing header"));
        };
        if equations.len() != m {
            return Err(perr(text.lines().count().max(1), &format!("header declares {m} equations, found {}", equations.len())));
        }
        E2Lin2Instance::new(n, equations).map_err(|e| perr(1, &e.to_string()))
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Random normalized instance: every variable is covered by a random
/// pairing first, the remaining equations pick `i != j` uniformly, every
/// right-hand side is a fair bit, and the equation order is shuffled.
pub fn random_instance(n: usize, m: usize, seed: u64) -> Result<E2Lin2Instance> {
    if n < 2 {
        return usage("need at least two variables");
    }
    if 2 * m < n + (n % 2) {
        return usage(format!("{m} equations cannot cover {n} variables"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut pairs: Vec<(usize, usize)> = order.chunks(2).filter(|c| c.len() == 2).map(|c| (c[0], c[1])).collect();
    if n % 2 == 1 {
        let last = order[n - 1];
        let other = order[rng.random_range(0..n - 1)];
        pairs.push((last, other));
    }
    while pairs.len() < m {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        pairs.push((i, j));
    }
    let mut equations: Vec<Equation> = pairs
        .into_iter()
        .map(|(i, j)| Equation { i, j, b: rng.random_range(0..2u8) })
        .collect();
    equations.shuffle(&mut rng);
    E2Lin2Instance::new(n, equations)
}
