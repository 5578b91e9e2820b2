//! The order of a formal series, with a first-class infinite sentinel for the
//! zero series.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Order of a series: smallest total degree carrying a nonzero coefficient.
/// The zero series has order `Infinite`; this is never encoded as a large
/// integer so that order comparisons on truncated data stay honest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Order {
    Finite(usize),
    Infinite,
}

impl Order {
    pub fn is_infinite(self) -> bool {
        matches!(self, Order::Infinite)
    }

    pub fn finite(self) -> Option<usize> {
        match self {
            Order::Finite(k) => Some(k),
            Order::Infinite => None,
        }
    }

    /// ord(p*q) lower bound: additive, absorbing on infinity.
    pub fn saturating_add(self, other: Order) -> Order {
        match (self, other) {
            (Order::Finite(a), Order::Finite(b)) => Order::Finite(a + b),
            _ => Order::Infinite,
        }
    }

    /// True when the order is at least `k`; the infinite sentinel passes every
    /// threshold.
    pub fn at_least(self, k: usize) -> bool {
        match self {
            Order::Finite(n) => n >= k,
            Order::Infinite => true,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(k) => write!(f, "{k}"),
            Order::Infinite => write!(f, "inf"),
        }
    }
}
