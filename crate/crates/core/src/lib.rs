//! Credit-based Stackelberg pricing of an uploader's bandwidth among
//! competing downloaders.
//!
//! An uploader posts one price per bandwidth unit; each downloader buys the
//! bandwidth that maximizes its credit-weighted satisfaction minus cost. The
//! uploader picks the highest price at which demand fills its capacity.
//! Around that core sit a brute-force [`oracle`], two message-passing
//! realizations in [`protocol`], and a churn simulator with a credit ledger
//! in [`churn`].

pub mod churn;
pub mod demand;
pub mod error;
pub mod format;
pub mod model;
pub mod oracle;
pub mod presets;
pub mod protocol;
pub mod solver;

pub use demand::{DemandCurve, Segment};
pub use error::{ChurnError, ModelError, OracleError, ProtocolError, SolveError};
pub use model::{
    aggregate_demand, best_response, downloader_utility, satisfaction, Equilibrium, GameInstance,
    PeerId, PeerOutcome, PeerProfile,
};
pub use solver::{solve, verify_se, RegionLabel, SolverConfig};
