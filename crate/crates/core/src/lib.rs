//! Cumulants, moment scaling and intermittency of integrated and partial-sum
//! supOU processes.
//!
//! A supOU process superposes Ornstein–Uhlenbeck type processes whose rate
//! `ξ` is drawn from a mixing measure `π`. Its stationary marginal is a
//! selfdecomposable law and its correlation function is the Laplace
//! transform of `π`. When `π` puts mass `~ x^α` near the origin with
//! `0 < α < 1`, correlations decay like `τ^{-α}` and the cumulants of the
//! aggregated process grow like `t^{m-α}`. The moments then scale as
//! `τ(q) = q - α` for large `q`, so `τ(q)/q` keeps increasing: the aggregate
//! is intermittent.
//!
//! The crate is organised in layers:
//!
//! * [`mixing`]: mixing measures, their correlation functions and tails.
//! * [`marginal`]: marginal laws, cumulant generating functions, BDLP.
//! * [`cumulant_engine`]: the time factors `I_{m-1}(t)` and `J_{m-1}(t)`.
//! * [`bell`]: partial Bell polynomials, cumulants to moments and back.
//! * [`scaling`]: log-log slope fits, `q*`, and the intermittency test.
//! * [`simulate`]: exact Monte Carlo for discrete superpositions.
//!
//! ```
//! use supou::cumulant_engine::{CumulantTable, AggregateKind, Forms};
//! use supou::marginal::MarginalLaw;
//! use supou::mixing::MixingMeasure;
//! use supou::scaling::{fit_sigmas, log_spaced, DEFAULT_WINDOW};
//!
//! let mix = MixingMeasure::gamma(0.6)?;
//! let law = MarginalLaw::inverse_gaussian(1.0, 1.0)?.centered();
//! let times = log_spaced(1e3, 1e6, 25)?;
//! let table = CumulantTable::analytic(&mix, &law, AggregateKind::Integrated, &[3], &times, Forms::default())?;
//! let fit = fit_sigmas(&table, &[3], DEFAULT_WINDOW)?;
//! assert!((fit.rows[0].estimate - 2.4).abs() < 0.05);
//! # Ok::<(), supou::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bell;
pub mod cumulant_engine;
mod error;
pub mod marginal;
pub mod mixing;
pub mod quadrature;
pub mod scaling;
pub mod simulate;
pub mod special;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;

    #[doc = include_str!("../../../book/src/mixing.md")]
    struct Mixing;

    #[doc = include_str!("../../../book/src/marginal.md")]
    struct Marginal;

    #[doc = include_str!("../../../book/src/cumulants.md")]
    struct Cumulants;

    #[doc = include_str!("../../../book/src/moments.md")]
    struct Moments;

    #[doc = include_str!("../../../book/src/scaling.md")]
    struct Scaling;

    #[doc = include_str!("../../../book/src/simulation.md")]
    struct Simulation;

    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
