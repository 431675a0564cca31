//! Interactive building blocks. Every operation is a method on
//! [`Party`](crate::engine::Party) that all three servers call in the same
//! order with their own shares.

mod arith;
mod boolean;
mod compare;
mod div;
mod indicator;
mod random;
mod sort;

pub use boolean::{reconstruct_bits, BitShares};
pub use div::{RECIPROCAL_FRAC_BITS, RECIPROCAL_ITERATIONS};
pub use indicator::MAX_POLY_DOMAIN;
pub use random::IRWIN_HALL_TERMS;
pub use sort::{comparator_count, odd_even_merge_layers};
