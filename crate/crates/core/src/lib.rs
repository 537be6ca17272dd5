//! Minimal equilibrium prices and speculative bubbles for an asset whose
//! dividend rate follows a CIR process, traded by two investor groups that
//! disagree about the process parameters.
//!
//! * [`market`]: parameters, intrinsic value, thresholds, the existence test.
//! * [`specfun`]: Kummer `M` and Tricomi `U` functions.
//! * [`closed_form`]: the smooth-pasting price for equal volatilities.
//! * [`hjb`]: grid solvers for the general case.
//! * [`mc`]: seeded Monte Carlo checks under either group's belief.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod closed_form;
pub mod error;
pub mod hjb;
pub mod market;
pub mod mc;
pub mod specfun;

pub use closed_form::{ClosedForm, PasteConstants, PriceCurve};
pub use error::{Error, Result};
pub use hjb::{Grid, SolveReport};
pub use market::{Group, ModelParams, Normalized, Thresholds};
pub use mc::{McEstimate, SimConfig};
pub use specfun::HypergeomArgs;
