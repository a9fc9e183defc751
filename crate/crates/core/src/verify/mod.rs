//! Machine checks of the lemmas behind the convergence analysis.
//!
//! Deterministic identities are checked to floating-point tolerance on
//! recorded trajectories; the martingale bound is estimated by Monte Carlo.
//! [`suite::run_suite`] bundles everything into one report.

mod decomposition;
mod descent;
mod martingale;
mod olo;
pub mod suite;

pub use decomposition::decomposition_residual;
pub use descent::descent_residual;
pub use martingale::{core_lemma_ratio, CoreLemmaEstimate, MdsSampler};
pub use olo::{olo_causality_check, olo_check, OloTrace};
pub use suite::{run_suite, CheckResult, SuiteOptions, VerifyReport};
