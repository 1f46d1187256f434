//! Photon-number statistics of sub-Poissonian light in thermal-loss bosonic
//! channels with fluctuating transmittance.
//!
//! - [`moments`]: closed-form moment propagation and the critical transmittance.
//! - [`states`]: input-state families and their moments.
//! - [`oracle`]: truncated Fock-space simulator used as an independent check.
//! - [`sweep`]: parameter sweeps, CSV output and oracle verification.

pub mod exec;
pub mod moments;
pub mod oracle;
pub mod states;
pub mod sweep;

pub use exec::Execution;
pub use moments::{
    ChannelParams, DerivedStatistics, FluctuationModel, InputMoments, MomentsError,
    ThresholdResult,
};
pub use states::StateSpec;
