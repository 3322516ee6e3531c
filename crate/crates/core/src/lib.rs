//! Stochastic network calculus over discrete time.
//!
//! The crate is organised bottom-up:
//!
//! * [`curves`]: wide-sense increasing envelopes (arrival and service curves)
//!   and their (min,+) algebra.
//! * [`tailbounds`]: wide-sense decreasing bounding functions, combined either
//!   by (min,+) convolution (no independence assumed) or by the Stieltjes
//!   convolution of their complements (independent case).
//! * [`models`]: maximum-backlog-centric arrival curves, stochastic service
//!   curves and stochastic strict servers.
//! * [`calculus`]: superposition, concatenation, output, leftover service and
//!   backlog/delay guarantees, in general and independent form, plus tandem
//!   composition.
//! * [`sigma_rho`]: (σ(θ), ρ(θ)) characterisation of i.i.d. traffic and the
//!   resulting exponential m.b.c bounds.
//! * [`simulate`]: a discrete-time fluid simulator used to check every bound
//!   against empirical tails.
//! * [`cli`]: the `snc` command-line front end.
//!
//! The algebra is generic over the scalar type ([`Scalar`], implemented for
//! `f32` and `f64`). The aliases at the crate root fix the scalar to `f64`,
//! which is what the simulator and the CLI use.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod cli;
pub mod curves;
pub mod error;
pub mod models;
pub mod scalar;
pub mod sigma_rho;
pub mod simulate;
pub mod tailbounds;

pub use error::{Error, Result};
pub use scalar::{Scalar, Time};

/// Arrival/service envelope over `f64`.
pub type Curve = curves::Curve<f64>;
/// Bounding function over `f64`.
pub type TailBound = tailbounds::TailBound<f64>;
/// Uniform amount grid over `f64`.
pub type XGrid = tailbounds::XGrid<f64>;
/// Stochastic arrival curve over `f64`.
pub type ArrivalCurve = models::StochasticArrivalCurve<f64>;
/// Stochastic service curve over `f64`.
pub type ServiceCurve = models::ServiceCurveModel<f64>;
/// Stochastic strict server over `f64`.
pub type StrictServer = models::StrictServer<f64>;
/// Backlog/delay guarantee over `f64`.
pub type BoundReport = calculus::BoundReport<f64>;
/// (σ(θ), ρ(θ)) envelope over `f64`.
pub type SigmaRho = sigma_rho::SigmaRho<f64>;
/// Per-slot increment distribution over `f64`.
pub type IncrementDist = sigma_rho::IncrementDist<f64>;

/// Single-precision envelope.
pub type Curve32 = curves::Curve<f32>;
/// Single-precision bounding function.
pub type TailBound32 = tailbounds::TailBound<f32>;
