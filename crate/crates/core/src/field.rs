//! Removal of the external field on regular graphs.
//!
//! On a `d`-regular graph the number of zero spins is
//! `(|E| + t00 - t11) / d`, so `Z_{A,mu}(G) = mu^{|E|/d} * Z_{A'}(G)` with
//! `A' = [[beta mu^{1/d}, 1], [1, gamma mu^{-1/d}]]`.

use serde::Serialize;

use crate::error::{usage, Result};
use crate::graph::MultiGraph;
use crate::partition::{partition_exact, EnumOptions};
use crate::logweight::LogWeight;
use crate::spin::SpinParams;

/// Field-free parameters and the per-edge log prefactor `ln(mu) / d`.
pub fn translate_external_field(p: &SpinParams, d: u64) -> Result<(SpinParams, f64)> {
    if d == 0 {
        return usage("degree must be at least 1");
    }
    let s = p.mu().powf(1.0 / d as f64);
    let q = SpinParams::new(p.beta() * s, p.gamma() / s, 1.0)?;
    Ok((q, p.mu().ln() / d as f64))
}

#[derive(Clone, Debug, Serialize)]
pub struct FieldIdentityReport {
    pub degree: u64,
    pub edges: u64,
    pub translated: SpinParams,
    /// `ln Z_{A,mu}(G)`
    pub lhs: LogWeight,
    /// `|E| ln(mu) / d + ln Z_{A'}(G)`
    pub rhs: LogWeight,
    pub abs_gap: f64,
    pub rel_gap: f64,
}

/// Evaluates both sides of the field-removal identity by enumeration.
pub fn check_field_identity(g: &MultiGraph, p: &SpinParams, opts: &EnumOptions) -> Result<FieldIdentityReport> {
    let Some(d) = g.regular_degree().filter(|&d| d > 0) else {
        return usage("field translation requires a regular graph of positive degree");
    };
    let (q, per_edge) = translate_external_field(p, d)?;
    let edges = g.total_multiplicity();
    let lhs = partition_exact(g, p, &[], opts)?;
    let rhs = LogWeight::from_ln(edges as f64 * per_edge) * partition_exact(g, &q, &[], opts)?;
    Ok(FieldIdentityReport {
        degree: d,
        edges,
        translated: q,
        lhs,
        rhs,
        abs_gap: lhs.abs_gap(rhs),
        rel_gap: lhs.rel_gap(rhs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::named;

    #[test]
    fn identity_field_is_untouched() {
        let p = SpinParams::new(0.3, 0.8, 1.0).unwrap();
        let (q, pre) = translate_external_field(&p, 5).unwrap();
        assert_eq!(q, p);
        assert_eq!(pre, 0.0);
    }

    #[test]
    fn square_root_field() {
        let p = SpinParams::new(0.5, 2.0, 4.0).unwrap();
        let (q, pre) = translate_external_field(&p, 2).unwrap();
        assert_eq!((q.beta(), q.gamma(), q.mu()), (1.0, 1.0, 1.0));
        assert!((pre - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn four_cycle_prefactor_is_sixteen() {
        let g = named::cycle(4);
        let p = SpinParams::new(0.5, 2.0, 4.0).unwrap();
        let opts = EnumOptions::default();
        let lhs = partition_exact(&g, &p, &[], &opts).unwrap();
        let (q, _) = translate_external_field(&p, 2).unwrap();
        let rhs = partition_exact(&g, &q, &[], &opts).unwrap();
        assert!((lhs.ln() - (16f64.ln() + rhs.ln())).abs() < 1e-12);
    }

    #[test]
    fn unit_field_gap_is_exactly_zero() {
        let p = SpinParams::new(0.3, 0.7, 1.0).unwrap();
        let r = check_field_identity(&named::cycle(4), &p, &EnumOptions::default()).unwrap();
        assert_eq!(r.abs_gap, 0.0);
    }

    #[test]
    fn edge_and_k4() {
        let opts = EnumOptions::default();
        let r = check_field_identity(&named::single_edge(), &SpinParams::new(0.3, 0.7, 2.0).unwrap(), &opts).unwrap();
        assert!(r.rel_gap <= 1e-9);
        let r = check_field_identity(&named::complete(4), &SpinParams::new(0.2, 1.5, 5.0).unwrap(), &opts).unwrap();
        assert_eq!(r.degree, 3);
        assert!(r.rel_gap <= 1e-9);
    }

    #[test]
    fn non_regular_is_usage_error() {
        let p = SpinParams::new(0.3, 0.7, 2.0).unwrap();
        assert!(matches!(
            check_field_identity(&named::path(3), &p, &EnumOptions::default()),
            Err(crate::Error::Usage(_))
        ));
    }
}
