use rayon::prelude::*;
use serde::Serialize;

use super::entropy::entropy_unchecked as h;
use crate::error::{usage, Result};

/// The constant `c` of the relaxed exponent.
pub const PSI_C: f64 = 8000.0;
/// Lower limit on `min(a, b)` for the exponent bound.
pub const PSI_LAMBDA: f64 = 9e-5;
/// Claimed bound on the relaxed exponent.
pub const PSI_BOUND: f64 = 1.21;
/// Per-gadget bound used for the conditioned graph.
pub const PSI_CONDITION_BOUND: f64 = 1.22;

const GRID: usize = 1024;
const K_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PsiQuery {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PsiValue {
    pub value: f64,
    /// Maximizing `k`.
    pub k: f64,
}

fn k_range(a: f64, b: f64) -> Result<(f64, f64)> {
    if !((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b)) {
        return usage(format!("fractions ({a}, {b}) outside [0, 1]"));
    }
    Ok(((a + b - 1.0).max(0.0), a.min(b)))
}

/// `b H(k/b) + (1 - b) H((a - k)/(1 - b)) - H(a)`, with the `0 H(0/0) = 0`
/// convention at `b in {0, 1}`.
#[inline]
fn conditional_gap(a: f64, b: f64, k: f64) -> f64 {
    let left = if b > 0.0 { b * h(k / b) } else { 0.0 };
    let right = if b < 1.0 { (1.0 - b) * h((a - k) / (1.0 - b)) } else { 0.0 };
    left + right - h(a)
}

/// Maximum of a concave function on `[lo, hi]`: optional uniform grid,
/// then golden-section search on the bracket around the best grid point.
fn maximize_concave<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, grid: usize) -> PsiValue {
    if hi - lo <= 0.0 {
        return PsiValue { value: f(lo), k: lo };
    }
    let mut best = PsiValue { value: f(lo), k: lo };
    let fh = f(hi);
    if fh > best.value {
        best = PsiValue { value: fh, k: hi };
    }
    let (mut x0, mut x1) = (lo, hi);
    if grid >= 3 {
        let step = (hi - lo) / (grid - 1) as f64;
        let mut arg = 0;
        let mut val = f64::NEG_INFINITY;
        for i in 0..grid {
            let v = f(lo + step * i as f64);
            if v > val {
                val = v;
                arg = i;
            }
        }
        if val > best.value {
            best = PsiValue { value: val, k: lo + step * arg as f64 };
        }
        x0 = lo + step * arg.saturating_sub(1) as f64;
        x1 = (lo + step * (arg + 1) as f64).min(hi);
    }
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = x1 - INV_PHI * (x1 - x0);
    let mut d = x0 + INV_PHI * (x1 - x0);
    let (mut fc, mut fd) = (f(c), f(d));
    while x1 - x0 > K_TOL {
        if fc >= fd {
            x1 = d;
            d = c;
            fd = fc;
            c = x1 - INV_PHI * (x1 - x0);
            fc = f(c);
        } else {
            x0 = c;
            c = d;
            fc = fd;
            d = x0 + INV_PHI * (x1 - x0);
            fd = f(d);
        }
    }
    let k = 0.5 * (x0 + x1);
    let v = f(k);
    if v > best.value {
        best = PsiValue { value: v, k };
    }
    best
}

fn psi_objective(q: &PsiQuery) -> impl Fn(f64) -> f64 + '_ {
    let c = q.c;
    let head = 1.0 / (c - 1.0) + (1.0 - q.a - q.b) * c / (c - 1.0) + h(q.a) + h(q.b);
    move |k| head + (c - 1.0) * (-k + conditional_gap(q.a, q.b, k))
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 1.0 && c.is_finite()) {
        return usage("c must be a finite number above 1");
    }
    Ok(())
}

/// Relaxed exponent
/// `max_k [1/(c-1) + (1-a-b) c/(c-1) + H(a) + H(b) + (c-1)(-k + bH(k/b) + (1-b)H((a-k)/(1-b)) - H(a))]`
/// over `k in [max(0, a+b-1), min(a, b)]`.
pub fn psi(q: &PsiQuery) -> Result<PsiValue> {
    check_c(q.c)?;
    let (lo, hi) = k_range(q.a, q.b)?;
    Ok(maximize_concave(psi_objective(q), lo, hi, GRID))
}

fn psi_fast(q: &PsiQuery) -> PsiValue {
    let (lo, hi) = ((q.a + q.b - 1.0).max(0.0), q.a.min(q.b));
    maximize_concave(psi_objective(q), lo, hi, 0)
}

/// Exact growth rate of the expected `Z_{a,b}` per gadget vertex:
/// `max_k [D' ln g + (1-a-b)(D+D') ln g + H(a) + H(b) + D(k ln(bg) + bH(k/b) + (1-b)H((a-k)/(1-b)) - H(a))]`.
pub fn psi_rate(a: f64, b: f64, delta: u64, delta_prime: u64, beta: f64, gamma: f64) -> Result<PsiValue> {
    if !(beta > 0.0 && gamma > 0.0) {
        return usage("rate needs beta, gamma > 0");
    }
    let (lo, hi) = k_range(a, b)?;
    let (dl, dp) = (delta as f64, delta_prime as f64);
    let lg = gamma.ln();
    let lbg = beta.ln() + lg;
    let head = dp * lg + (1.0 - a - b) * (dl + dp) * lg + h(a) + h(b);
    Ok(maximize_concave(|k| head + dl * (k * lbg + conditional_gap(a, b, k)), lo, hi, GRID))
}

/// Lower-bound exponent for the conditioned sum over `Sigma`:
/// `e/(1+e) ln(1+e) + 1/(1+e) * 7999/8000`.
pub fn z1_rate() -> f64 {
    let e = std::f64::consts::E;
    e / (1.0 + e) * (1.0 + e).ln() + 1.0 / (1.0 + e) * (7999.0 / 8000.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PsiSweep {
    pub c: f64,
    pub lambda: f64,
    pub step: f64,
    pub grid_points: usize,
    /// Best grid point `(a, b, psi)`.
    pub grid_max: (f64, f64, f64),
    /// After local refinement.
    pub refined_max: (f64, f64, f64),
}

fn axis(lambda: f64, step: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut i = 0u64;
    loop {
        let x = lambda + step * i as f64;
        if x >= 1.0 {
            break;
        }
        v.push(x);
        i += 1;
    }
    v.push(1.0);
    v
}

const REFINE_CANDIDATES: usize = 16;

/// Maximizes `psi` over `a, b in [lambda, 1]`: a grid of spacing `step`
/// (inner maximization by golden section alone, the objective being
/// concave in `k`), then a pattern search from the best grid points using
/// the full `psi`. `rows` receives every grid value when given.
pub fn psi_sweep(c: f64, lambda: f64, step: f64, rows: Option<&mut Vec<(f64, f64, f64)>>) -> Result<PsiSweep> {
    check_c(c)?;
    if !(lambda > 0.0 && lambda <= 1.0 && step > 0.0) {
        return usage("sweep needs 0 < lambda <= 1 and step > 0");
    }
    let xs = axis(lambda, step);
    let values: Vec<(f64, f64, f64)> = xs
        .par_iter()
        .flat_map_iter(|&a| xs.iter().map(move |&b| (a, b, psi_fast(&PsiQuery { a, b, c }).value)))
        .collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].2.total_cmp(&values[i].2).then(i.cmp(&j)));
    let grid_max = values[order[0]];

    let full = |a: f64, b: f64| psi(&PsiQuery { a, b, c }).map(|v| v.value);
    let refine = |(a0, b0, _): (f64, f64, f64)| -> Result<(f64, f64, f64)> {
        let (mut a, mut b) = (a0, b0);
        let mut best = full(a, b)?;
        let mut s = step;
        while s > 1e-9 {
            let mut moved = false;
            for (da, db) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let na = (a + da * s).clamp(lambda, 1.0);
                let nb = (b + db * s).clamp(lambda, 1.0);
                let v = full(na, nb)?;
                if v > best {
                    best = v;
                    a = na;
                    b = nb;
                    moved = true;
                }
            }
            if !moved {
                s *= 0.5;
            }
        }
        Ok((a, b, best))
    };
    let refined: Vec<(f64, f64, f64)> = order
        .iter()
        .take(REFINE_CANDIDATES)
        .map(|&i| values[i])
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(refine)
        .collect::<Result<_>>()?;
    let refined_max = refined
        .into_iter()
        .chain(std::iter::once(grid_max))
        .fold(grid_max, |acc, x| if x.2 > acc.2 { x } else { acc });
    let grid_points = values.len();
    if let Some(out) = rows {
        *out = values;
    }
    Ok(PsiSweep { c, lambda, step, grid_points, grid_max, refined_max })
}
