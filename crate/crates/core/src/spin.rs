//! Spin parameters, configurations, weights and side constraints.

use serde::Serialize;

use crate::error::{usage, Result};
use crate::graph::MultiGraph;
use crate::logweight::{scaled_ln, LogWeight};

/// Interaction matrix `[[beta, 1], [1, gamma]]` plus an external field `mu`
/// acting on spin 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpinParams {
    beta: f64,
    gamma: f64,
    mu: f64,
}

impl SpinParams {
    pub fn new(beta: f64, gamma: f64, mu: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return usage(format!("beta must be finite and >= 0, got {beta}"));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return usage(format!("gamma must be finite and >= 0, got {gamma}"));
        }
        if !(mu.is_finite() && mu > 0.0) {
            return usage(format!("mu must be finite and > 0, got {mu}"));
        }
        Ok(SpinParams { beta, gamma, mu })
    }

    /// Parameters with `mu = 1`.
    pub fn no_field(beta: f64, gamma: f64) -> Result<Self> {
        Self::new(beta, gamma, 1.0)
    }

    /// `beta = 0, gamma = 1, mu = 1`: the partition function counts
    /// independent sets (the zero-spin vertices).
    pub fn hardcore() -> Self {
        SpinParams { beta: 0.0, gamma: 1.0, mu: 1.0 }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        Self::new(self.beta, self.gamma, mu)
    }

    pub fn is_ferromagnetic(&self) -> bool {
        self.beta * self.gamma > 1.0
    }

    pub fn is_antiferromagnetic(&self) -> bool {
        self.beta * self.gamma < 1.0
    }

    pub(crate) fn log_factors(&self) -> LogFactors {
        LogFactors { ln_beta: self.beta.ln(), ln_gamma: self.gamma.ln(), ln_mu: self.mu.ln() }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct LogFactors {
    pub ln_beta: f64,
    pub ln_gamma: f64,
    pub ln_mu: f64,
}

/// Sufficient statistics of a configuration's weight: zero-spin vertices,
/// and `(0,0)` and `(1,1)` edges counted with multiplicity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WeightCounts {
    pub zeros: u64,
    pub t00: u64,
    pub t11: u64,
}

impl WeightCounts {
    #[inline]
    pub(crate) fn log_weight(&self, f: &LogFactors) -> f64 {
        scaled_ln(self.zeros, f.ln_mu) + scaled_ln(self.t00, f.ln_beta) + scaled_ln(self.t11, f.ln_gamma)
    }

    pub fn of(g: &MultiGraph, sigma: &Configuration) -> Self {
        let mut c = WeightCounts { zeros: sigma.zeros() as u64, ..Default::default() };
        for e in g.edges() {
            match (sigma.spin(e.u), sigma.spin(e.v)) {
                (0, 0) => c.t00 += e.mult,
                (1, 1) => c.t11 += e.mult,
                _ => {}
            }
        }
        c
    }
}

/// Assignment of spins `{0, 1}` to vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    bits: Vec<u8>,
}

impl Configuration {
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return usage(format!("spin values must be 0 or 1, got {b}"));
        }
        Ok(Configuration { bits })
    }

    /// Decodes the ascending enumeration index: vertex 0 is the least
    /// significant bit.
    pub fn from_index(n: usize, index: u64) -> Self {
        assert!(n <= 64);
        Configuration { bits: (0..n).map(|v| ((index >> v) & 1) as u8).collect() }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn spin(&self, v: usize) -> u8 {
        self.bits[v]
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn zeros(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 0).count()
    }

    pub fn zeros_in(&self, set: &[usize]) -> usize {
        set.iter().filter(|&&v| self.bits[v] == 0).count()
    }
}

/// `ln( mu^{#zeros} * prod_{(u,v)} A_{s(u), s(v)}^{mult} )`.
pub fn config_weight(g: &MultiGraph, p: &SpinParams, sigma: &Configuration) -> Result<LogWeight> {
    if sigma.len() != g.num_vertices() {
        return usage(format!(
            "configuration has {} spins but graph has {} vertices",
            sigma.len(),
            g.num_vertices()
        ));
    }
    let ln = WeightCounts::of(g, sigma).log_weight(&p.log_factors());
    Ok(LogWeight::from_ln(ln))
}

/// A restriction on zero counts used to carve out restricted partition
/// sums. All counts refer to vertices with spin 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum SideConstraint {
    /// `lo <= zeros(set) <= hi`.
    CountRange { set: Vec<usize>, lo: usize, hi: usize },
    /// `zeros(lesser) <= zeros(greater)`.
    CountCompare { lesser: Vec<usize>, greater: Vec<usize> },
    /// `min(zeros(first), zeros(second)) <= bound`.
    MinCountAtMost { first: Vec<usize>, second: Vec<usize>, bound: usize },
}

impl SideConstraint {
    pub fn validate(&self, num_vertices: usize) -> Result<()> {
        let check_set = |set: &[usize]| -> Result<()> {
            if let Some(&v) = set.iter().find(|&&v| v >= num_vertices) {
                return usage(format!("constraint references vertex {v} of {num_vertices}"));
            }
            let mut sorted = set.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != set.len() {
                return usage("constraint vertex set contains duplicates");
            }
            Ok(())
        };
        match self {
            SideConstraint::CountRange { set, lo, hi } => {
                check_set(set)?;
                if lo > hi || *hi > set.len() {
                    return usage(format!(
                        "count range requires lo <= hi <= |set|, got {lo}, {hi}, {}",
                        set.len()
                    ));
                }
            }
            SideConstraint::CountCompare { lesser, greater } => {
                check_set(lesser)?;
                check_set(greater)?;
            }
            SideConstraint::MinCountAtMost { first, second, .. } => {
                check_set(first)?;
                check_set(second)?;
            }
        }
        Ok(())
    }

    /// Direct evaluation on a full configuration.
    pub fn is_satisfied(&self, sigma: &Configuration) -> bool {
        match self {
            SideConstraint::CountRange { set, lo, hi } => {
                let z = sigma.zeros_in(set);
                *lo <= z && z <= *hi
            }
            SideConstraint::CountCompare { lesser, greater } => {
                sigma.zeros_in(lesser) <= sigma.zeros_in(greater)
            }
            SideConstraint::MinCountAtMost { first, second, bound } => {
                sigma.zeros_in(first).min(sigma.zeros_in(second)) <= *bound
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::named;

    #[test]
    fn params_validation() {
        assert!(SpinParams::new(-0.1, 1.0, 1.0).is_err());
        assert!(SpinParams::new(0.1, f64::NAN, 1.0).is_err());
        assert!(SpinParams::new(0.1, 1.0, 0.0).is_err());
        let p = SpinParams::new(2.0, 2.0, 1.0).unwrap();
        assert!(p.is_ferromagnetic() && !p.is_antiferromagnetic());
        let q = SpinParams::new(0.5, 0.5, 1.0).unwrap();
        assert!(q.is_antiferromagnetic() && !q.is_ferromagnetic());
        let r = SpinParams::new(2.0, 0.5, 1.0).unwrap();
        assert!(!r.is_antiferromagnetic() && !r.is_ferromagnetic());
    }

    #[test]
    fn single_edge_weights() {
        let g = named::single_edge();
        let p = SpinParams::new(0.3, 0.7, 1.0).unwrap();
        let w = config_weight(&g, &p, &Configuration::from_bits(vec![0, 0]).unwrap()).unwrap();
        assert!((w.ln() - 0.3f64.ln()).abs() < 1e-15);
        let w = config_weight(&g, &p, &Configuration::from_bits(vec![0, 1]).unwrap()).unwrap();
        assert_eq!(w.ln(), 0.0);
        let w = config_weight(&g, &p, &Configuration::from_bits(vec![1, 1]).unwrap()).unwrap();
        assert!((w.ln() - 0.7f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn zero_factor_gives_zero_weight() {
        let g = named::cycle(3);
        let p = SpinParams::new(0.0, 1.0, 1.0).unwrap();
        let w = config_weight(&g, &p, &Configuration::from_bits(vec![0, 0, 1]).unwrap()).unwrap();
        assert!(w.is_zero());
        // no (0,0) edge: beta = 0 must not poison the weight
        let w = config_weight(&g, &p, &Configuration::from_bits(vec![0, 1, 1]).unwrap()).unwrap();
        assert_eq!(w.ln(), 0.0);
    }

    #[test]
    fn field_counts_zero_spins() {
        let g = named::single_edge();
        let p = SpinParams::new(1.0, 1.0, 3.0).unwrap();
        let w = config_weight(&g, &p, &Configuration::from_bits(vec![0, 0]).unwrap()).unwrap();
        assert!((w.ln() - 2.0 * 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_usage_error() {
        let g = named::single_edge();
        let p = SpinParams::hardcore();
        let sigma = Configuration::from_bits(vec![0, 1, 1]).unwrap();
        assert!(matches!(config_weight(&g, &p, &sigma), Err(crate::Error::Usage(_))));
    }

    #[test]
    fn multiplicity_is_an_exponent() {
        let g = MultiGraph::from_edges(2, [(0, 1, 5)]).unwrap();
        let p = SpinParams::new(0.5, 2.0, 1.0).unwrap();
        let w = config_weight(&g, &p, &Configuration::from_bits(vec![1, 1]).unwrap()).unwrap();
        assert!((w.ln() - 5.0 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn constraint_validation() {
        let c = SideConstraint::CountRange { set: vec![0, 1], lo: 2, hi: 1 };
        assert!(c.validate(3).is_err());
        let c = SideConstraint::CountRange { set: vec![0, 1], lo: 0, hi: 3 };
        assert!(c.validate(3).is_err());
        let c = SideConstraint::CountCompare { lesser: vec![0], greater: vec![5] };
        assert!(c.validate(3).is_err());
        let c = SideConstraint::MinCountAtMost { first: vec![0, 0], second: vec![1], bound: 0 };
        assert!(c.validate(3).is_err());
    }
}
