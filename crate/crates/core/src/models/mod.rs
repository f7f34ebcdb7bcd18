//! Hysteresis model family: classical and normalized Bouc-Wen forms, the
//! polynomial-asymmetric fractional extension, a second-order comparison
//! model, and loop descriptors.

mod boucwen;
mod fonbw;
mod metrics;
mod params;
mod zhu;

pub use boucwen::{
    normalize_cbw, scale_cbw, simulate_anbw, simulate_cbw, simulate_cbw_aux, simulate_nbw,
};
pub use fonbw::{classify_branch, simulate_fonbw, Branch};
pub use metrics::{loop_branches, loop_metrics, LoopBranches, LoopMetrics};
pub use params::{CbwAuxParams, CbwParams, FonbwParams, NbwParams, PolynomialGain, ZhuParams};
pub use zhu::simulate_zhu;

pub(crate) use boucwen::{bw_rate, central_diff, DIVERGENCE_GUARD};
pub(crate) use fonbw::FonbwStepper;
pub(crate) use zhu::sgn;
