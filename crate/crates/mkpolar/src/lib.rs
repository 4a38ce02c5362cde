//! Multi-kernel polar codes over binary-input memoryless symmetric (BMS) channels.
//!
//! The crate is split into:
//!
//! * [`channel`]: BMS channels, BSC-mixture form, entropy and Bhattacharyya
//!   measures, degraded/upgraded binning, bit-channel synthesis.
//! * [`kernel`]: GF(2) kernels and the kernel search.
//! * [`construct`]: the kernel tree, layer tables and good-index selection.
//! * [`codec`]: layered encoder and successive-cancellation decoder.
//! * [`sim`]: seeded Monte Carlo frame/bit error estimation.
//! * [`converse`]: exact bit entropies of random linear codes and related scans.
//!
//! Channel arithmetic and LLR math are generic over [`Real`] (`f32`/`f64`);
//! tree construction, simulation and the converse tools run on `f64`.

pub mod channel;
pub mod codec;
pub mod construct;
pub mod converse;
pub mod kernel;
pub mod rng;
pub mod sim;

mod error;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub use channel::{bec, bsc, BmsChannel, BscMixture};
pub use codec::{encode, sc_decode, BitWord, LlrWord};
pub use construct::{build_plan, ConstructionPlan, PlanConfig, SelectorParams};
pub use kernel::{kernel_search, Kernel, SearchPolicy, SearchReport};
pub use sim::{simulate, SimConfig, SimReport};

/// Double-precision channel, the default throughout the pipeline.
pub type Channel = BmsChannel<f64>;
/// Single-precision channel.
pub type Channel32 = BmsChannel<f32>;
/// Double-precision BSC mixture.
pub type Mixture = BscMixture<f64>;
/// Double-precision LLR vector.
pub type Llrs = LlrWord<f64>;

/// Default cap on elementary accumulations for exhaustive enumerations.
pub const DEFAULT_BUDGET: u64 = 1 << 30;
