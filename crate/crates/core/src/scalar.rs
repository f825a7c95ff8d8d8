//! Scalar abstraction for the numeric parts of the engine.
//!
//! Scores, probabilities, BM25 weights and recall values are computed over any
//! `Real`; the pipeline itself runs on `f64` (see the aliases at the crate root).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from a count or small literal.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("finite literal fits every Real")
    }

    fn of_usize(value: usize) -> Self {
        Self::from_usize(value).expect("count fits every Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Total order used for every descending-score ranking in the crate: higher
/// score first, NaN treated as lowest.
pub(crate) fn cmp_desc<T: Real>(a: T, b: T) -> std::cmp::Ordering {
    match (a.is_nan(), b.is_nan()) {
        (true, true) => std::cmp::Ordering::Equal,
        (true, false) => std::cmp::Ordering::Greater,
        (false, true) => std::cmp::Ordering::Less,
        (false, false) => b.partial_cmp(&a).unwrap_or(std::cmp::Ordering::Equal),
    }
}
