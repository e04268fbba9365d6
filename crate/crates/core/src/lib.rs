//! Deterministic GNSS receiver simulation: vector delay-locked code tracking
//! closed through an EKF or UKF navigation filter, snapshot RAIM with fault
//! exclusion, and a Rayleigh/Rician land-mobile-satellite fading channel.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod estimation;
pub mod frames;
pub mod harness;
pub mod integrity;
pub mod rng;
pub mod scenario;
pub mod tracking;
