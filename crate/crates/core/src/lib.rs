//! Second-order (dispersion) analytics, optimization and Monte Carlo
//! validation for discrete memoryless Gel'fand-Pinsker channels and Gaussian
//! dirty paper coding.
//!
//! The analytic core is generic over [`Real`] (`f32` or `f64`); the Monte
//! Carlo machinery runs in `f64`. Information quantities are in nats
//! throughout; convert with [`numkit::NATS_PER_BIT`] at reporting boundaries.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dpc;
pub mod error;
pub mod gp_model;
pub mod gp_opt;
pub mod mc;
pub mod numkit;
pub mod presets;
pub mod scalar;
pub mod second_order;

pub use dpc::DpcConfig;
pub use error::{Error, Result};
pub use gp_model::{build_joint, ChannelSpec, DispersionReport, GpParams, JointSuy, StateType};
pub use scalar::Real;

pub type ChannelSpecF64 = ChannelSpec<f64>;
pub type ChannelSpecF32 = ChannelSpec<f32>;
pub type GpParamsF64 = GpParams<f64>;
pub type GpParamsF32 = GpParams<f32>;
pub type JointSuyF64 = JointSuy<f64>;
pub type DispersionReportF64 = DispersionReport<f64>;
pub type DpcConfigF64 = DpcConfig<f64>;
pub type DpcConfigF32 = DpcConfig<f32>;
