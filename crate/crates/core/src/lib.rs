//! Hybrid quantum classifier for link-blockage detection behind a
//! reconfigurable intelligent surface.
//!
//! Images and received-rate observations are packed into a six-qubit state,
//! routed through noisy direct and surface-reflected links, and classified by
//! a layered variational circuit into absent / blocked / unblocked.

pub mod channels;
pub mod dataset;
pub mod encoding;
pub mod error;
pub mod quantum;
pub mod training;
pub mod vqc;

pub use error::{Error, Result};
