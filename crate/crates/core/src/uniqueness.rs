//! Tree-recursion fixed points, the uniqueness criterion, threshold
//! degrees, the closed-form boundary roots and field windows, plus the
//! degree bookkeeping behind the hardness regions.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{regime, usage, Error, Result};
use crate::field::translate_external_field;
use crate::spin::SpinParams;

const MAX_BISECTION_STEPS: usize = 200;
/// Width (in `ln x`) at which the log-space phase hands over to plain
/// bisection in `x`.
const LOG_PHASE_WIDTH: f64 = 1e-6;

/// `ln((beta x + 1) / (x + gamma))` at `x = e^y`, valid far outside the
/// f64 range of `x`.
#[inline]
fn ln_ratio_at_ln(p: &SpinParams, y: f64) -> f64 {
    if y > 0.0 {
        let r = (-y).exp();
        let num = if p.beta() > 0.0 { (p.beta() + r).ln() } else { -y };
        num - (p.gamma() * r).ln_1p()
    } else {
        let x = y.exp();
        let den = if p.gamma() > 0.0 { (x + p.gamma()).ln() } else { y };
        (p.beta() * x).ln_1p() - den
    }
}

/// Same ratio from `x` itself, avoiding the rounding of `ln x`.
#[inline]
fn ln_ratio(p: &SpinParams, x: f64) -> f64 {
    if x > 1.0 {
        (p.beta() + 1.0 / x).ln() - (p.gamma() / x).ln_1p()
    } else {
        (p.beta() * x).ln_1p() - (x + p.gamma()).ln()
    }
}

/// The tree recursion `f(x) = mu ((beta x + 1) / (x + gamma))^d`.
pub fn recursion(p: &SpinParams, d: u64, x: f64) -> f64 {
    (p.mu().ln() + d as f64 * ln_ratio(p, x)).exp()
}

fn check_regime(p: &SpinParams, d: u64) -> Result<()> {
    if d == 0 {
        return usage("degree must be at least 1");
    }
    if p.beta() * p.gamma() >= 1.0 {
        return regime(format!(
            "fixed point needs beta*gamma < 1 (got {}); f is not decreasing",
            p.beta() * p.gamma()
        ));
    }
    Ok(())
}

/// The unique positive fixed point of `f` when `beta * gamma < 1`.
///
/// `f` is strictly decreasing, so `x̂ <= f(0)` and `x̂ >= f(f(0))`. The
/// bracket is first narrowed in `ln x` (it can span hundreds of orders of
/// magnitude) and then bisected in `x` down to adjacent floats.
pub fn fixed_point(p: &SpinParams, d: u64) -> Result<f64> {
    check_regime(p, d)?;
    // h(y) = ln f(e^y) - y is strictly decreasing in y.
    let h = |y: f64| p.mu().ln() + d as f64 * ln_ratio_at_ln(p, y) - y;

    let (mut lo, mut hi) = if p.gamma() > 0.0 {
        let hi = p.mu().ln() - d as f64 * p.gamma().ln();
        // lo = ln f(f(0))
        (h(hi) + hi, hi)
    } else {
        // f(0) is infinite; walk outwards until the sign changes.
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        while h(hi) > 0.0 {
            hi *= 2.0;
        }
        while h(lo) < 0.0 {
            lo *= 2.0;
        }
        (lo, hi)
    };
    if !(lo.is_finite() && hi.is_finite()) {
        return regime("fixed point bracket is not representable");
    }
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }

    let mut steps = 0;
    while hi - lo > LOG_PHASE_WIDTH && steps < MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let v = h(mid);
        if v == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }

    let g = |x: f64| recursion(p, d, x) - x;
    let (mut xlo, mut xhi) = (lo.exp(), hi.exp());
    if xlo == 0.0 || !xhi.is_finite() {
        return regime("fixed point underflows or overflows f64");
    }
    while steps < MAX_BISECTION_STEPS {
        let mid = 0.5 * (xlo + xhi);
        if mid <= xlo || mid >= xhi {
            break;
        }
        let v = g(mid);
        if v == 0.0 {
            return Ok(mid);
        }
        if v > 0.0 {
            xlo = mid;
        } else {
            xhi = mid;
        }
        steps += 1;
    }
    Ok(if g(xlo).abs() <= g(xhi).abs() { xlo } else { xhi })
}

/// `d (1 - beta gamma) x / ((beta x + 1)(x + gamma))`, which equals
/// `|f'(x)|` at a fixed point of `f`.
pub fn derivative_magnitude(beta: f64, gamma: f64, d: u64, x: f64) -> f64 {
    d as f64 * (1.0 - beta * gamma) * x / ((beta * x + 1.0) * (x + gamma))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub x_hat: f64,
    pub derivative_magnitude: f64,
    pub unique: bool,
    /// `|f(x̂) - x̂|`
    pub residual: f64,
}

/// Uniqueness on `d`-regular graphs: `|f'(x̂)| < 1`.
pub fn uniqueness_check(p: &SpinParams, d: u64) -> Result<UniquenessReport> {
    let x = fixed_point(p, d)?;
    let m = derivative_magnitude(p.beta(), p.gamma(), d, x);
    Ok(UniquenessReport {
        x_hat: x,
        derivative_magnitude: m,
        unique: m < 1.0,
        residual: (recursion(p, d, x) - x).abs(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThresholdScan {
    /// Least `d <= d_max` without uniqueness.
    pub degree: Option<u64>,
    pub d_max: u64,
    /// Set when the scan ran out of degrees.
    pub exhausted: bool,
    /// Non-uniqueness at `degree + 1`, checked when inside the unit square.
    pub monotone_spot_check: Option<bool>,
}

pub fn in_unit_square(beta: f64, gamma: f64) -> bool {
    beta > 0.0 && beta <= 1.0 && gamma > 0.0 && gamma <= 1.0
}

/// Scans `d = 1..=d_max` for the first degree where uniqueness fails.
pub fn threshold_degree(p: &SpinParams, d_max: u64) -> Result<ThresholdScan> {
    for d in 1..=d_max {
        if !uniqueness_check(p, d)?.unique {
            let spot = if in_unit_square(p.beta(), p.gamma()) {
                let next = !uniqueness_check(p, d + 1)?.unique;
                if !next {
                    return Err(Error::Construction(format!(
                        "non-uniqueness at d = {d} but uniqueness at d = {} inside the unit square",
                        d + 1
                    )));
                }
                Some(next)
            } else {
                None
            };
            return Ok(ThresholdScan { degree: Some(d), d_max, exhausted: false, monotone_spot_check: spot });
        }
    }
    Ok(ThresholdScan { degree: None, d_max, exhausted: true, monotone_spot_check: None })
}

fn check_product(beta: f64, gamma: f64) -> Result<f64> {
    if !(beta >= 0.0 && gamma >= 0.0) {
        return usage("beta and gamma must be nonnegative");
    }
    let bg = beta * gamma;
    if bg >= 1.0 {
        return usage(format!("requires beta*gamma < 1, got {bg}"));
    }
    Ok(bg)
}

/// `(1 + sqrt(beta gamma)) / (1 - sqrt(beta gamma))`: every degree below
/// this bound is in uniqueness for every field.
pub fn lemma9_bound(beta: f64, gamma: f64) -> Result<f64> {
    let s = check_product(beta, gamma)?.sqrt();
    Ok((1.0 + s) / (1.0 - s))
}

/// Relative residual of `d (1 - beta gamma) x = (beta x + 1)(x + gamma)`.
pub fn quadratic_residual(beta: f64, gamma: f64, d: u64, x: f64) -> f64 {
    let lhs = d as f64 * (1.0 - beta * gamma) * x;
    let rhs = (beta * x + 1.0) * (x + gamma);
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs())
}

const ROOT_RESIDUAL_TOL: f64 = 1e-10;

/// The two positive roots `x1 <= x2` of the boundary equation
/// `|f'(x)| = 1`, i.e. of `beta x^2 - B x + gamma = 0` with
/// `B = d (1 - beta gamma) - 1 - beta gamma`.
///
/// `x1` is taken as `gamma / (beta x2)` (same root, no cancellation).
pub fn closed_form_roots(beta: f64, gamma: f64, d: u64) -> Result<(f64, f64)> {
    let bg = check_product(beta, gamma)?;
    if beta <= 0.0 {
        return regime("closed-form roots divide by beta; beta = 0 is not supported");
    }
    let b = d as f64 * (1.0 - bg) - 1.0 - bg;
    let mut disc = b * b - 4.0 * bg;
    if disc < 0.0 {
        if disc >= -1e-12 * b * b {
            disc = 0.0;
        } else {
            return regime(format!("negative discriminant at d = {d}: below the uniqueness bound"));
        }
    }
    if b <= 0.0 {
        return regime(format!("no positive roots at d = {d}"));
    }
    let big = b + disc.sqrt();
    let x2 = big / (2.0 * beta);
    let x1 = 2.0 * gamma / big;
    for x in [x1, x2] {
        let r = quadratic_residual(beta, gamma, d, x);
        if r > ROOT_RESIDUAL_TOL {
            return Err(Error::Construction(format!("root {x} has residual {r}")));
        }
    }
    Ok((x1, x2))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThresholdCurves {
    pub x1: f64,
    pub x2: f64,
    pub ln_mu1: f64,
    pub ln_mu2: f64,
}

impl ThresholdCurves {
    pub fn mu1(&self) -> f64 {
        self.ln_mu1.exp()
    }

    pub fn mu2(&self) -> f64 {
        self.ln_mu2.exp()
    }
}

/// Field window `(mu1, mu2)`: uniqueness holds iff `mu < mu1` or
/// `mu > mu2`. Requires `gamma >= beta > 0`, `beta gamma < 1` and
/// `sqrt(beta gamma) <= (d - 1)/(d + 1)`.
pub fn mu_window(beta: f64, gamma: f64, d: u64) -> Result<ThresholdCurves> {
    let bg = check_product(beta, gamma)?;
    if !(gamma >= beta && beta > 0.0) {
        return regime("field window requires gamma >= beta > 0");
    }
    if d == 0 || bg.sqrt() > (d as f64 - 1.0) / (d as f64 + 1.0) {
        return regime(format!("sqrt(beta*gamma) exceeds (d-1)/(d+1) at d = {d}"));
    }
    let (x1, x2) = closed_form_roots(beta, gamma, d)?;
    let ln_mu = |x: f64| x.ln() + d as f64 * ((x + gamma).ln() - (beta * x + 1.0).ln());
    Ok(ThresholdCurves { x1, x2, ln_mu1: ln_mu(x1), ln_mu2: ln_mu(x2) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HardnessDegrees {
    pub delta_prime: u64,
    pub delta_star: u64,
    pub in_region: bool,
}

pub const DEGREE_RATIO: u64 = 8000;

/// `delta' = ceil(-1 / ln(beta gamma))`, `delta* = ceil(1 / ln gamma)` for
/// `0 < beta < 1 < gamma`, `beta gamma < 1`.
///
/// The ceilings are settled on the log-form inequalities
/// `delta* ln gamma >= 1 > (delta* - 1) ln gamma` and
/// `delta' ln(beta gamma) <= -1`, so the derived facts hold exactly in
/// floating point.
pub fn theorem2_degrees(beta: f64, gamma: f64) -> Result<HardnessDegrees> {
    if !(beta > 0.0 && beta < 1.0 && gamma > 1.0 && beta * gamma < 1.0) {
        return usage("requires 0 < beta < 1 < gamma and beta*gamma < 1");
    }
    let lg = gamma.ln();
    let lbg = beta.ln() + gamma.ln();
    if lbg >= 0.0 {
        return usage("ln beta + ln gamma must be negative");
    }
    let mut star = (1.0 / lg).ceil().max(1.0) as u64;
    while (star as f64) * lg < 1.0 {
        star += 1;
    }
    while star > 1 && ((star - 1) as f64) * lg >= 1.0 {
        star -= 1;
    }
    let mut prime = (-1.0 / lbg).ceil().max(1.0) as u64;
    while (prime as f64) * lbg > -1.0 {
        prime += 1;
    }
    while prime > 1 && ((prime - 1) as f64) * lbg <= -1.0 {
        prime -= 1;
    }
    if !(star as f64 * lg >= 1.0 && ((star - 1) as f64) * lg < 1.0 && prime as f64 * lbg <= -1.0) {
        return Err(Error::Construction("degree facts failed after adjustment".into()));
    }
    Ok(HardnessDegrees {
        delta_prime: prime,
        delta_star: star,
        in_region: star >= DEGREE_RATIO * prime,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CaseId {
    Case1,
    Case2,
    Case3,
}

/// `L = 12 / eps^2` with `eps = 1e-4`.
pub const FULL_SCALE_L: u64 = 1_200_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CaseParams {
    pub case_id: CaseId,
    pub delta: u64,
    pub delta_prime: u64,
    pub l: u64,
    pub k: u64,
    /// Set when `L` was overridden: no hardness guarantee attaches.
    pub toy: bool,
}

/// Splits `delta*` into intra-gadget `delta` and inter-gadget `delta'`
/// according to which of the three parameter cases `(beta, gamma)` is in.
pub fn case_split(beta: f64, gamma: f64, delta_star: u64, toy_l: Option<u64>) -> Result<CaseParams> {
    if !(beta > 0.0 && beta <= gamma && gamma <= 1.0) || (beta == 1.0 && gamma == 1.0) {
        return usage("case split requires 0 < beta <= gamma <= 1 and (beta, gamma) != (1, 1)");
    }
    if delta_star == 0 {
        return usage("delta* must be at least 1");
    }
    let l = toy_l.unwrap_or(FULL_SCALE_L);
    if l == 0 {
        return usage("L must be positive");
    }
    let below = beta.ln() <= l as f64 * gamma.ln();
    let case_id = match (below, beta < 0.5) {
        (true, true) => CaseId::Case1,
        (true, false) => CaseId::Case2,
        (false, _) => CaseId::Case3,
    };
    let (ds, lw) = (delta_star as u128, l as u128);
    let (delta, delta_prime) = match case_id {
        CaseId::Case1 | CaseId::Case2 => (lw * ds / (lw + 1), ds.div_ceil(lw + 1)),
        CaseId::Case3 => {
            let den = lw * (lw + 1) + 1;
            ((lw * (lw + 1) * ds).div_ceil(den), ds / den)
        }
    };
    debug_assert_eq!(delta + delta_prime, ds);
    Ok(CaseParams {
        case_id,
        delta: delta as u64,
        delta_prime: delta_prime as u64,
        l,
        k: 4 * l,
        toy: toy_l.is_some(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PhaseRegion {
    #[serde(rename = "ferromagnetic")]
    Ferromagnetic,
    #[serde(rename = "uniqueness")]
    Uniqueness,
    #[serde(rename = "non-uniqueness+theorem1-region")]
    SquareHard,
    #[serde(rename = "non-uniqueness+theorem2-region")]
    WideHard,
    #[serde(rename = "non-uniqueness-unclassified")]
    Unclassified,
}

impl PhaseRegion {
    pub fn label(&self) -> &'static str {
        match self {
            PhaseRegion::Ferromagnetic => "ferromagnetic",
            PhaseRegion::Uniqueness => "uniqueness",
            PhaseRegion::SquareHard => "non-uniqueness+theorem1-region",
            PhaseRegion::WideHard => "non-uniqueness+theorem2-region",
            PhaseRegion::Unclassified => "non-uniqueness-unclassified",
        }
    }

    pub fn is_non_uniqueness(&self) -> bool {
        matches!(self, PhaseRegion::SquareHard | PhaseRegion::WideHard | PhaseRegion::Unclassified)
    }
}

/// Default for the unspecified degree constant of the unit-square region.
pub const DEFAULT_H: f64 = 1000.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhasePoint {
    pub region: PhaseRegion,
    pub report: Option<UniquenessReport>,
}

/// Classifies `(beta, gamma, mu)` at degree `d`.
///
/// The hardness regions are field-free statements; a field is first
/// removed at degree `d`, and the region tests run on the translated pair.
pub fn phase_classify(p: &SpinParams, d: u64, h: f64) -> Result<PhasePoint> {
    if d == 0 {
        return usage("degree must be at least 1");
    }
    if p.beta() * p.gamma() >= 1.0 {
        return Ok(PhasePoint { region: PhaseRegion::Ferromagnetic, report: None });
    }
    let report = uniqueness_check(p, d)?;
    if report.unique {
        return Ok(PhasePoint { region: PhaseRegion::Uniqueness, report: Some(report) });
    }
    let (q, _) = translate_external_field(p, d)?;
    let (b, g) = (q.beta(), q.gamma());
    let bg = p.beta() * p.gamma();
    let square_hard = (0.0..=1.0).contains(&b)
        && (0.0..=1.0).contains(&g)
        && !(b == 0.0 && g == 0.0)
        && d as f64 >= h / (1.0 - bg);
    let wide_hard = || {
        let (lo, hi) = if b < g { (b, g) } else { (g, b) };
        theorem2_degrees(lo, hi).map(|t| t.in_region && t.delta_star == d).unwrap_or(false)
    };
    let region = if square_hard {
        PhaseRegion::SquareHard
    } else if wide_hard() {
        PhaseRegion::WideHard
    } else {
        PhaseRegion::Unclassified
    };
    Ok(PhasePoint { region, report: Some(report) })
}

/// A rectangular grid of `(beta, gamma)` at fixed `mu`, `d` and `h`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseGrid {
    pub beta: (f64, f64, usize),
    pub gamma: (f64, f64, usize),
    pub mu: f64,
    pub d: u64,
    pub h: f64,
}

fn axis((lo, hi, n): (f64, f64, usize)) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// One CSV line per grid point:
/// `beta,gamma,mu,d,region,x_hat,deriv_mag`.
pub fn phase_map_csv(grid: &PhaseGrid) -> Result<String> {
    let betas = axis(grid.beta);
    let gammas = axis(grid.gamma);
    if betas.is_empty() || gammas.is_empty() {
        return usage("empty phase grid");
    }
    if grid.beta.0 > grid.beta.1 || grid.gamma.0 > grid.gamma.1 {
        return usage("grid ranges must be increasing");
    }
    let mut out = String::from("beta,gamma,mu,d,region,x_hat,deriv_mag\n");
    for &b in &betas {
        for &g in &gammas {
            let p = SpinParams::new(b, g, grid.mu)?;
            let pt = phase_classify(&p, grid.d, grid.h)?;
            let (x, m) = match pt.report {
                Some(r) => (format!("{}", r.x_hat), format!("{}", r.derivative_magnitude)),
                None => (String::new(), String::new()),
            };
            let _ = writeln!(out, "{b},{g},{},{},{},{x},{m}", grid.mu, grid.d, pt.region.label());
        }
    }
    Ok(out)
}
