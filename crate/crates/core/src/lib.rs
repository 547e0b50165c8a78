//! Sliding-mode control design and fixed-step closed-loop simulation.
//!
//! `no_std` with `alloc`; file formats and the command-line front end live in `smc-cli`.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod differentiator;
pub mod error;
pub mod hosm;
pub mod lti;
pub mod lv;
pub mod math;
pub mod metrics;
pub mod prd;
pub mod pwm;
pub mod rpl;
pub mod sim;
pub mod sliding_variable;
pub mod smc1;
pub mod smc2;

pub use error::{Error, Result};
