//! A simulator for gift economies driven by yield curves.
//!
//! Entities offer goods to each other. Each gift is valued by its supplier
//! through a linear yield curve of the pairwise account balance, and the
//! balance moves by that yield after every gift. The [`engine`] runs a
//! sequence of states, choosing gifts by the Highest Yield Rule, and
//! [`analytics`] predicts where such runs end up.
//!
//! ```
//! use gift_economy::{engine, EntityId, GoodId, YieldCurve};
//!
//! let (p, q) = (EntityId::new("P")?, EntityId::new("Q")?);
//! let scenario = engine::make_repeated_gift(&p, &q, &GoodId::new("a")?, YieldCurve::new(0.5, 1.0)?)?
//!     .with_max_steps(4)?;
//! let trace = engine::run(&scenario)?;
//! assert_eq!(trace.final_ledger().get(&p, &q), 1.875);
//! # Ok::<(), gift_economy::Error>(())
//! ```

pub mod analytics;
pub mod choice;
pub mod credit;
pub mod engine;
mod error;
pub mod model;
pub mod multiset;

pub use choice::Candidate;
pub use credit::{Credit, CurveTable, Ledger, YieldCurve};
pub use engine::{Scenario, SelectionMode, StateSequence, Trace};
pub use error::{Error, Result};
pub use model::{EntityId, GoodId, Offer, State, Transaction, TransactionSet};
pub use multiset::Multiset;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/ledgers-and-curves.md")]
    mod ledgers_and_curves {}
    #[doc = include_str!("../../../book/src/choosing-gifts.md")]
    mod choosing_gifts {}
    #[doc = include_str!("../../../book/src/trading.md")]
    mod trading {}
    #[doc = include_str!("../../../book/src/numerics.md")]
    mod numerics {}
}

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}
