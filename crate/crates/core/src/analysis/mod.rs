//! Numerical checks on the gadget: entropy and the `Psi` exponent
//! bound, the exact expectation of `Z_{a,b}` over random gadgets, expander
//! audits and the coupling behind the expansion bound.

mod coupling;
mod entropy;
mod expander;
mod expectation;
mod psi;

pub use coupling::{coupling_sim, CouplingReport, TAIL_C};
pub use entropy::{entropy, entropy_unchecked};
pub use expander::{expander_audit, edges_between, AuditMode, ExpanderAudit, EXHAUSTIVE_MAX_SIDE};
pub use expectation::{expected_zab_exact, expected_zab_mc, McEstimate};
pub use psi::{
    psi, psi_rate, psi_sweep, z1_rate, PsiQuery, PsiSweep, PsiValue, PSI_C, PSI_LAMBDA, PSI_BOUND,
    PSI_CONDITION_BOUND,
};
