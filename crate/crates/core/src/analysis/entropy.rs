use crate::error::{usage, Result};

/// `H(x) = -x ln x - (1 - x) ln(1 - x)` with `H(0) = H(1) = 0`.
pub fn entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return usage(format!("entropy argument {x} outside [0, 1]"));
    }
    Ok(entropy_unchecked(x))
}

/// `entropy` for arguments already known to lie in `[0, 1]`; values a
/// rounding error outside are clamped.
#[inline]
pub fn entropy_unchecked(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    let xlnx = |y: f64| if y > 0.0 { y * y.ln() } else { 0.0 };
    -xlnx(x) - xlnx(1.0 - x)
}
