//! Gadget reduction from MAX-E2LIN2 to two-spin partition functions.
//!
//! Every variable `x_i` owns two sides `U_i`, `V_i` of `d_i * t` vertices,
//! split into blocks `U_{i,k}`, `V_{i,k}` of size `t`, one per occurrence.
//! The sides of one variable are joined by a random `Delta`-regular
//! bipartite gadget; each equation wires the blocks of its two occurrences
//! together with `Delta'` parallel edges per vertex.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::e2lin2::{assignment_from_index, E2Lin2Instance, Equation};
use crate::error::{usage, Error, Result};
use crate::graph::MultiGraph;
use crate::logweight::{log_sum_exp, scaled_ln, LogWeight};
use crate::partition::{partition_exact, EnumOptions};
use crate::seed::derive_seed;
use crate::spin::{SideConstraint, SpinParams};
use crate::uniqueness::CaseId;

/// Union of `delta` independent uniform perfect matchings between
/// `U = 0..n` and `V = n..2n`.
pub fn sample_h(n: usize, delta: u64, seed: u64) -> Result<MultiGraph> {
    if n == 0 || delta == 0 {
        return usage("gadget needs n >= 1 and delta >= 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut edges = Vec::with_capacity(n * delta as usize);
    for _ in 0..delta {
        perm.shuffle(&mut rng);
        edges.extend(perm.iter().enumerate().map(|(u, &v)| (u, n + v, 1)));
    }
    MultiGraph::from_edges(2 * n, edges)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GadgetParams {
    pub delta: u64,
    pub delta_prime: u64,
    /// Vertices per block; the full construction uses `t = m`.
    pub block_size: usize,
    pub seed: u64,
}

impl GadgetParams {
    fn validate(&self) -> Result<()> {
        if self.delta == 0 || self.delta_prime == 0 || self.block_size == 0 {
            return usage("delta, delta' and block size must all be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ReductionGraph {
    pub graph: MultiGraph,
    /// `u_blocks[i][k]` lists the vertices of `U_{i,k}`.
    pub u_blocks: Vec<Vec<Vec<usize>>>,
    pub v_blocks: Vec<Vec<Vec<usize>>>,
    pub params: GadgetParams,
    pub instance: E2Lin2Instance,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StructureAudit {
    pub vertices: usize,
    pub expected_vertices: usize,
    pub regular_degree: Option<u64>,
    pub expected_degree: u64,
    /// Every vertex has intra-gadget multiplicity `delta`.
    pub intra_ok: bool,
    /// Every vertex has inter-gadget multiplicity `delta'`.
    pub inter_ok: bool,
    pub pass: bool,
}

/// Builds the reduction graph. Occurrence numbers follow equation order.
pub fn build_reduction_graph(inst: &E2Lin2Instance, params: GadgetParams) -> Result<ReductionGraph> {
    params.validate()?;
    if !inst.is_normalized() {
        return usage("instance has unused variables; normalize it first");
    }
    let t = params.block_size;
    let d = inst.occurrences();
    let mut u_blocks = Vec::with_capacity(d.len());
    let mut v_blocks = Vec::with_capacity(d.len());
    let mut base = 0usize;
    let mut edges = Vec::new();
    for (i, &di) in d.iter().enumerate() {
        let side = di * t;
        u_blocks.push((0..di).map(|k| (0..t).map(|s| base + k * t + s).collect()).collect::<Vec<Vec<usize>>>());
        v_blocks.push((0..di).map(|k| (0..t).map(|s| base + side + k * t + s).collect()).collect::<Vec<Vec<usize>>>());
        let h = sample_h(side, params.delta, derive_seed(params.seed, i as u64))?;
        edges.extend(h.edges().iter().map(|e| (base + e.u, base + e.v, e.mult)));
        base += 2 * side;
    }
    let mut seen = vec![0usize; d.len()];
    for &Equation { i, j, b } in inst.equations() {
        let (k, l) = (seen[i], seen[j]);
        seen[i] += 1;
        seen[j] += 1;
        let (u, v) = (&u_blocks[i][k], &v_blocks[i][k]);
        let (u2, v2) = (&v_blocks[j][l], &u_blocks[j][l]);
        // b = 0 pairs u with v' and v with u'; b = 1 pairs u with u' and v with v'
        let (a_to, b_to) = if b == 0 { (u2, v2) } else { (v2, u2) };
        for s in 0..t {
            edges.push((u[s], a_to[s], params.delta_prime));
            edges.push((v[s], b_to[s], params.delta_prime));
        }
    }
    let graph = MultiGraph::from_edges(base, edges)?;
    Ok(ReductionGraph { graph, u_blocks, v_blocks, params, instance: inst.clone() })
}

impl ReductionGraph {
    pub fn u_side(&self, i: usize) -> Vec<usize> {
        self.u_blocks[i].iter().flatten().copied().collect()
    }

    pub fn v_side(&self, i: usize) -> Vec<usize> {
        self.v_blocks[i].iter().flatten().copied().collect()
    }

    /// Variable owning each vertex.
    fn owners(&self) -> Vec<usize> {
        let mut owner = vec![usize::MAX; self.graph.num_vertices()];
        for i in 0..self.u_blocks.len() {
            for v in self.u_side(i).into_iter().chain(self.v_side(i)) {
                owner[v] = i;
            }
        }
        owner
    }

    pub fn audit(&self) -> StructureAudit {
        let p = &self.params;
        let owner = self.owners();
        let n = self.graph.num_vertices();
        let mut intra = vec![0u64; n];
        let mut inter = vec![0u64; n];
        for e in self.graph.edges() {
            let bucket = if owner[e.u] == owner[e.v] { &mut intra } else { &mut inter };
            bucket[e.u] += e.mult;
            bucket[e.v] += e.mult;
        }
        let expected_vertices = 4 * self.instance.num_equations() * p.block_size;
        let regular_degree = self.graph.regular_degree();
        let intra_ok = intra.iter().all(|&x| x == p.delta);
        let inter_ok = inter.iter().all(|&x| x == p.delta_prime);
        let expected_degree = p.delta + p.delta_prime;
        StructureAudit {
            vertices: n,
            expected_vertices,
            regular_degree,
            expected_degree,
            intra_ok,
            inter_ok,
            pass: n == expected_vertices && regular_degree == Some(expected_degree) && intra_ok && inter_ok,
        }
    }

    /// Sidecar text: parameters, the instance, and the block map.
    pub fn sidecar_text(&self) -> String {
        let p = &self.params;
        let mut s = format!("params {} {} {} {}\n", p.delta, p.delta_prime, p.block_size, p.seed);
        let _ = writeln!(s, "vars {}", self.instance.num_vars());
        for e in self.instance.equations() {
            let _ = writeln!(s, "eq {} {} {}", e.i + 1, e.j + 1, e.b);
        }
        for (tag, blocks) in [("U", &self.u_blocks), ("V", &self.v_blocks)] {
            for (i, bi) in blocks.iter().enumerate() {
                for (k, block) in bi.iter().enumerate() {
                    let _ = write!(s, "block {tag} {} {}", i + 1, k + 1);
                    for v in block {
                        let _ = write!(s, " {v}");
                    }
                    s.push('\n');
                }
            }
        }
        s
    }

    /// Rebuilds a reduction graph from its graph file and sidecar.
    pub fn from_parts(graph: MultiGraph, sidecar: &str) -> Result<Self> {
        let perr = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };
        let mut params = None;
        let mut nvars = None;
        let mut equations = Vec::new();
        let mut blocks: Vec<(bool, usize, usize, Vec<usize>)> = Vec::new();
        for (k, raw) in sidecar.lines().enumerate() {
            let line = k + 1;
            let f: Vec<&str> = raw.split_whitespace().collect();
            if f.is_empty() || f[0].starts_with('#') {
                continue;
            }
            let num = |s: &str| -> Result<u64> { s.parse().map_err(|_| perr(line, "bad number")) };
            match f[0] {
                "params" if f.len() == 5 => {
                    params = Some(GadgetParams {
                        delta: num(f[1])?,
                        delta_prime: num(f[2])?,
                        block_size: num(f[3])? as usize,
                        seed: num(f[4])?,
                    });
                }
                "vars" if f.len() == 2 => nvars = Some(num(f[1])? as usize),
                "eq" if f.len() == 4 => {
                    let (i, j, b) = (num(f[1])? as usize, num(f[2])? as usize, num(f[3])?);
                    if i == 0 || j == 0 || b > 1 {
                        return Err(perr(line, "bad equation"));
                    }
                    equations.push(Equation { i: i - 1, j: j - 1, b: b as u8 });
                }
                "block" if f.len() >= 4 && (f[1] == "U" || f[1] == "V") => {
                    let (i, kk) = (num(f[2])? as usize, num(f[3])? as usize);
                    if i == 0 || kk == 0 {
                        return Err(perr(line, "block indices are 1-based"));
                    }
                    let vs = f[4..].iter().map(|s| num(s).map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
                    blocks.push((f[1] == "U", i - 1, kk - 1, vs));
                }
                _ => return Err(perr(line, "unrecognized sidecar record")),
            }
        }
        let params = params.ok_or_else(|| perr(1, "missing params record"))?;
        let n = nvars.ok_or_else(|| perr(1, "missing vars record"))?;
        let instance = E2Lin2Instance::new(n, equations)?;
        let d = instance.occurrences();
        let mut u_blocks: Vec<Vec<Vec<usize>>> = d.iter().map(|&di| vec![Vec::new(); di]).collect();
        let mut v_blocks = u_blocks.clone();
        for (is_u, i, k, vs) in blocks {
            let target = if is_u { &mut u_blocks } else { &mut v_blocks };
            let slot = target
                .get_mut(i)
                .and_then(|b| b.get_mut(k))
                .ok_or_else(|| Error::Parse { line: 0, msg: format!("block ({}, {}) out of range", i + 1, k + 1) })?;
            if vs.len() != params.block_size || vs.iter().any(|&v| v >= graph.num_vertices()) {
                return Err(Error::Parse { line: 0, msg: format!("block ({}, {}) is malformed", i + 1, k + 1) });
            }
            *slot = vs;
        }
        if u_blocks.iter().chain(&v_blocks).flatten().any(|b| b.is_empty()) {
            return Err(Error::Parse { line: 0, msg: "missing block records".into() });
        }
        Ok(ReductionGraph { graph, u_blocks, v_blocks, params, instance })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundsConstants {
    pub log_c: f64,
    pub log_d: f64,
    pub case_id: CaseId,
}

/// `ln(1 + 2 gamma^{D*} + gamma^{2 D*}) = 2 ln(1 + gamma^{D*})`.
fn ln_satisfied_factor(gamma: f64, delta_star: u64) -> f64 {
    2.0 * scaled_ln(delta_star, gamma.ln()).exp().ln_1p()
}

/// Lower/upper bound constants `C` and `D` for the given case.
///
/// Cases 1 and 2: `C = (beta gamma)^{D'} + 2 gamma^{D*} + gamma^{2 D*}` and
/// `D = (1 + gamma^{D*})^2 / C` with `D* = D + D'`.
/// Case 3: `C = (beta gamma)^{D'}`, `D = 1 / C`.
pub fn bounds_constants(p: &SpinParams, delta: u64, delta_prime: u64, case_id: CaseId) -> Result<BoundsConstants> {
    let bg = p.beta() * p.gamma();
    if bg >= 1.0 {
        return usage("bounds constants require beta*gamma < 1");
    }
    let ln_bg = p.beta().ln() + p.gamma().ln();
    let star = delta + delta_prime;
    let lg = p.gamma().ln();
    let (log_c, log_d) = match case_id {
        CaseId::Case1 | CaseId::Case2 => {
            let c = log_sum_exp([
                LogWeight::from_ln(scaled_ln(delta_prime, ln_bg)),
                LogWeight::from_ln(std::f64::consts::LN_2 + scaled_ln(star, lg)),
                LogWeight::from_ln(scaled_ln(2 * star, lg)),
            ])
            .ln();
            (c, ln_satisfied_factor(p.gamma(), star) - c)
        }
        CaseId::Case3 => {
            let c = scaled_ln(delta_prime, ln_bg);
            (c, -c)
        }
    };
    if !(log_c.is_finite() && log_d.is_finite() && log_d > 0.0) {
        return usage(format!("parameters give C = exp({log_c}), D = exp({log_d}); need C > 0 and D > 1"));
    }
    Ok(BoundsConstants { log_c, log_d, case_id })
}

fn no_field(p: &SpinParams) -> Result<()> {
    if p.mu() != 1.0 {
        return usage("the reduction has no external field; translate the field first");
    }
    Ok(())
}

fn check_s(rg: &ReductionGraph, s: &[u8]) -> Result<()> {
    rg.instance.theta(s).map(|_| ())
}

/// Closed form of the restricted sum over configurations that zero out
/// the spin-0 count of `U_i` (for `x_i = 0`) or `V_i` (for `x_i = 1`):
/// `(1 + gamma^{D*})^{2 t theta} * C1^{t (m - theta)}`, where `C1` is the
/// Case 1/2 constant `C`.
pub fn z_star_closed(rg: &ReductionGraph, s: &[u8], p: &SpinParams) -> Result<LogWeight> {
    no_field(p)?;
    let theta = rg.instance.theta(s)? as u64;
    let m = rg.instance.num_equations() as u64;
    let t = rg.params.block_size as u64;
    let (dl, dp) = (rg.params.delta, rg.params.delta_prime);
    let star = dl + dp;
    let lg = p.gamma().ln();
    let ln_bg = p.beta().ln() + lg;
    let unsat = log_sum_exp([
        LogWeight::from_ln(scaled_ln(dp, ln_bg)),
        LogWeight::from_ln(std::f64::consts::LN_2 + scaled_ln(star, lg)),
        LogWeight::from_ln(scaled_ln(2 * star, lg)),
    ])
    .ln();
    let sat = ln_satisfied_factor(p.gamma(), star);
    Ok(LogWeight::from_ln(scaled_ln(t * theta, sat) + scaled_ln(t * (m - theta), unsat)))
}

/// Restriction families for `z_conditioned`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConditionFamily {
    /// `U_i <= V_i` if `x_i = 0`, `U_i >= V_i` otherwise.
    SideOrder,
    /// `U_i = 0` if `x_i = 0`, `V_i = 0` otherwise.
    Pinned,
    /// `min(U_i, V_i) <= floor(lambda d_i t)` for all `i`; ignores `S`.
    Polarized,
    /// `Polarized` together with `SideOrder`.
    PolarizedOrdered,
    /// `SideOrder` plus `U_i <= floor(eps d_i t)` if `x_i = 0`, `V_i <= ...` otherwise.
    NearlyPinned,
    /// `U_i <= floor(eps d_i t)` and `V_i >= ceil((1 - eps) d_i t)` if
    /// `x_i = 0`, sides swapped otherwise.
    Saturated,
}

pub const DEFAULT_LAMBDA: f64 = 9e-5;
pub const DEFAULT_EPS: f64 = 1e-4;

/// Side constraints realizing `family` for assignment `s`.
pub fn family_constraints(
    rg: &ReductionGraph,
    s: &[u8],
    family: ConditionFamily,
    lambda: f64,
    eps: f64,
) -> Result<Vec<SideConstraint>> {
    check_s(rg, s)?;
    let mut out = Vec::new();
    for (i, &si) in s.iter().enumerate() {
        let (u, v) = (rg.u_side(i), rg.v_side(i));
        let size = u.len();
        // (small side, large side) for this variable's value
        let (small, large) = if si == 0 { (u.clone(), v.clone()) } else { (v.clone(), u.clone()) };
        let side_order = SideConstraint::CountCompare { lesser: small.clone(), greater: large.clone() };
        let at_most = |frac: f64| ((frac * size as f64).floor() as usize).min(size);
        match family {
            ConditionFamily::SideOrder => out.push(side_order),
            ConditionFamily::Pinned => out.push(SideConstraint::CountRange { set: small, lo: 0, hi: 0 }),
            ConditionFamily::Polarized | ConditionFamily::PolarizedOrdered => {
                out.push(SideConstraint::MinCountAtMost { first: u, second: v, bound: at_most(lambda) });
                if family == ConditionFamily::PolarizedOrdered {
                    out.push(side_order);
                }
            }
            ConditionFamily::NearlyPinned => {
                out.push(side_order);
                out.push(SideConstraint::CountRange { set: small, lo: 0, hi: at_most(eps) });
            }
            ConditionFamily::Saturated => {
                let lo = ((((1.0 - eps) * size as f64).ceil()) as usize).min(size);
                out.push(SideConstraint::CountRange { set: small, lo: 0, hi: at_most(eps) });
                out.push(SideConstraint::CountRange { set: large, lo, hi: size });
            }
        }
    }
    Ok(out)
}

/// Restricted partition sum for one constraint family.
pub fn z_conditioned(
    rg: &ReductionGraph,
    s: &[u8],
    p: &SpinParams,
    family: ConditionFamily,
    lambda: f64,
    eps: f64,
    opts: &EnumOptions,
) -> Result<LogWeight> {
    no_field(p)?;
    let constraints = family_constraints(rg, s, family, lambda, eps)?;
    partition_exact(&rg.graph, p, &constraints, opts)
}

/// The closed form's sum, evaluated by enumeration.
pub fn z_star_brute(rg: &ReductionGraph, s: &[u8], p: &SpinParams, opts: &EnumOptions) -> Result<LogWeight> {
    z_conditioned(rg, s, p, ConditionFamily::Pinned, DEFAULT_LAMBDA, DEFAULT_EPS, opts)
}

/// Slack of the upper bound `Z(G, S) <= C^{m t} D^{t (theta + slack m)}`.
pub const DEFAULT_SLACK: f64 = 0.03;
/// Slack of the wide-region variant.
pub const WIDE_SLACK: f64 = 0.04;

/// Decoded estimate of `theta*` from `ln Y` at block size `t = m`:
/// `(ln Y - ln(1+eps) - n ln 2 - m^2 ln C - slack m^2 ln D) / (m ln D)`.
pub fn decode_theta(log_y: f64, n: usize, m: usize, bc: &BoundsConstants, eps: f64, slack: f64) -> Result<f64> {
    decode_theta_blocks(log_y, n, m, m, bc, eps, slack)
}

/// `decode_theta` for block size `t`: `m^2` becomes `m t` and the
/// denominator `t ln D`.
pub fn decode_theta_blocks(
    log_y: f64,
    n: usize,
    m: usize,
    t: usize,
    bc: &BoundsConstants,
    eps: f64,
    slack: f64,
) -> Result<f64> {
    if !(bc.log_d > 0.0) {
        return usage("decoder needs ln D > 0");
    }
    if m == 0 || t == 0 {
        return usage("decoder needs m, t >= 1");
    }
    let mt = (m * t) as f64;
    let num = log_y - eps.ln_1p() - n as f64 * std::f64::consts::LN_2 - mt * bc.log_c - slack * mt * bc.log_d;
    Ok(num / (t as f64 * bc.log_d))
}

/// Largest number of variables `sandwich_check` loops over.
pub const MAX_SANDWICH_VARS: usize = 16;

#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    pub log_z: LogWeight,
    /// `max_S ln Z(G, S)`
    pub max_restricted: LogWeight,
    pub argmax: Vec<u8>,
    /// `ln sum_S Z(G, S)`
    pub sum_restricted: LogWeight,
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub pass: bool,
}

const SANDWICH_TOL: f64 = 1e-9;

/// Checks `max_S Z(G, S) <= Z(G) <= sum_S Z(G, S)` with `Z(G, S)` the
/// `SideOrder` restricted sums, over all `2^n` assignments.
pub fn sandwich_check(rg: &ReductionGraph, p: &SpinParams, opts: &EnumOptions) -> Result<SandwichReport> {
    no_field(p)?;
    let n = rg.instance.num_vars();
    if n > MAX_SANDWICH_VARS {
        return Err(Error::Resource { what: "variables (sandwich)", value: n as u128, cap: MAX_SANDWICH_VARS as u128 });
    }
    let log_z = partition_exact(&rg.graph, p, &[], opts)?;
    let mut parts = Vec::with_capacity(1 << n);
    let mut best = (LogWeight::ZERO, 0u64);
    for idx in 0..(1u64 << n) {
        let s = assignment_from_index(n, idx);
        let z = z_conditioned(rg, &s, p, ConditionFamily::SideOrder, DEFAULT_LAMBDA, DEFAULT_EPS, opts)?;
        if z.ln() > best.0.ln() {
            best = (z, idx);
        }
        parts.push(z);
    }
    let sum = log_sum_exp(parts);
    let tol = SANDWICH_TOL * log_z.ln().abs().max(1.0);
    let lower_ok = best.0.ln() <= log_z.ln() + tol;
    let upper_ok = log_z.ln() <= sum.ln() + tol;
    Ok(SandwichReport {
        log_z,
        max_restricted: best.0,
        argmax: assignment_from_index(n, best.1),
        sum_restricted: sum,
        lower_ok,
        upper_ok,
        pass: lower_ok && upper_ok,
    })
}
