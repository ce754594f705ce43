//! Room fingerprinting from impulse responses: MLS measurement and
//! deconvolution, a synthetic room oracle, acoustic feature extraction and
//! room identification.

pub mod corpus;
pub mod dataset;
pub mod error;
pub mod features;
pub mod io;
pub mod mls;
pub mod par;
pub mod rir;
pub mod roomid;
pub mod synth;

pub use error::{Error, Result};
pub use par::Exec;
