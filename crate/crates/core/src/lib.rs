//! Non-parametric latent and co-latent clustering of contingency tables and
//! weighted networks by alternating minimization of the Kullback-Leibler
//! divergence (EM).
//!
//! * [`table`]: normalized tables, symmetrization, diagonal inflation and
//!   spectral diagnostics.
//! * [`latent`]: `P = A diag(rho) B'`.
//! * [`colatent`]: `P = A C B'`, hard block models, latent Markov chains.
//! * [`network`]: membership clustering of symmetric networks and
//!   shared-emission co-clustering of general ones.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod colatent;
pub mod divergence;
pub mod em;
pub mod error;
pub mod io;
pub mod latent;
pub mod linalg;
pub mod network;
pub mod table;

pub use colatent::{hard_block_model, latent_markov_summary, CoLatentModel, LatentMarkovSummary};
pub use divergence::kl_divergence;
pub use em::{argmax_rows, FitOptions, FitTrace, StopReason};
pub use error::{Error, Result};
pub use latent::{LatentModel, StepDiagnostics};
pub use network::{
    fit_network, fit_network_co, mh_membership_recovery, MhRecovery, NetworkCoFit, NetworkCoModel,
    NetworkCoOptions, NetworkLatentModel, Variant,
};
pub use table::{ContingencyTable, LambdaBounds, SpectralReport};
