//! Verification oracles, approximation-bound bookkeeping, metrics, and the
//! adversarial instance that defeats Any-Fit packers.

mod adversarial;
mod bounds;
mod metrics;
mod verify;

pub use adversarial::{
    adversarial_instance, run_adversarial, AdversarialInstance, AdversarialReport,
    DEFAULT_EPS_PRIME,
};
pub use bounds::{
    approx_constant, check_theorem, max_bin_mean, mean_upper_bound, mu_min, opt_lower_bound,
    BoundReport, GroupCheck,
};
pub use metrics::{metrics, normalize, Metrics, Normalization};
pub use verify::{
    verify_bins, verify_packing, BinVerdict, VerifyReport, EXACT_PASS_TOL, MC_SIGMAS,
};
