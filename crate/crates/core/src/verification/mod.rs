//! Brute-force oracles, adversarial instances and an empirical privacy auditor.
//!
//! Nothing here calls into the lattice engine or the mechanisms it checks.

pub mod audit;
pub mod hard;
pub mod oracle;

pub use audit::{dp_audit, AuditOutcome, DpAuditReport};
pub use hard::{HardInstance, HardKind};
pub use oracle::{brute_down_sensitivity, brute_lipschitz_on_dn};
