//! Link-level simulation library for a space-time trellis coded OFDM uplink
//! received through a uniform linear antenna array.
//!
//! The receive chain pairs two co-channel-interference cancellers in front of
//! the space-time decoder:
//!
//! * an LMS adaptive beamformer trained on multiplexed pilot subcarriers,
//!   sharpened by null deepening (pattern re-synthesis with zeroed samples
//!   around the interference directions), and
//! * a null-steering baseline that solves for exact zeros at known
//!   directions of arrival.
//!
//! Modules follow the signal path: [`numerics`] (complex linear algebra and
//! DFT matrices), [`sttc`] (trellis encoder/decoders), [`ofdm`]
//! (pilot multiplexing and cyclic-prefix modulation), [`channel`] (two-ray
//! Rayleigh fading array channel), [`beamform`] (weight adaptation and null
//! synthesis), and [`sim`] (Monte-Carlo frame-error-rate experiments).

pub mod beamform;
pub mod channel;
pub mod config;
pub mod error;
pub mod numerics;
pub mod ofdm;
pub mod sim;
pub mod sttc;

pub use error::{Error, Result};
pub use numerics::{CMat, CVec};
