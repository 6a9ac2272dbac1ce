//! Operation counters for cost accounting.
//!
//! Every hash, scalar multiplication, point addition, XOR and random draw
//! issued through the public arithmetic API bumps a thread-local counter.
//! [`measure`] runs a closure and returns the counts it produced, so phases
//! can be metered without estimates.

use std::cell::Cell;
use std::ops::{Add, Sub};

use serde::Serialize;

/// Counts of primitive operations.
///
/// `hashes` counts protocol-level digests `h(..)` (including the fuzzy
/// extractor's extraction hash). `encode_hashes` counts the digests used
/// only to normalise identity strings and points to 32 octets.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OpCounts {
    pub hashes: u64,
    pub encode_hashes: u64,
    pub scalar_muls: u64,
    pub point_adds: u64,
    pub xors: u64,
    pub random_draws: u64,
}

#[derive(Clone, Copy)]
pub(crate) enum Op {
    Hash,
    EncodeHash,
    ScalarMul,
    PointAdd,
    Xor,
    RandomDraw,
}

thread_local! {
    static COUNTS: Cell<OpCounts> = Cell::new(OpCounts::default());
}

pub(crate) fn record(op: Op) {
    COUNTS.with(|c| {
        let mut v = c.get();
        match op {
            Op::Hash => v.hashes += 1,
            Op::EncodeHash => v.encode_hashes += 1,
            Op::ScalarMul => v.scalar_muls += 1,
            Op::PointAdd => v.point_adds += 1,
            Op::Xor => v.xors += 1,
            Op::RandomDraw => v.random_draws += 1,
        }
        c.set(v);
    });
}

/// Current totals on this thread.
pub fn snapshot() -> OpCounts {
    COUNTS.with(|c| c.get())
}

/// Run `f` and return its result together with the operations it performed.
pub fn measure<R>(f: impl FnOnce() -> R) -> (R, OpCounts) {
    let before = snapshot();
    let out = f();
    (out, snapshot() - before)
}

impl Sub for OpCounts {
    type Output = OpCounts;

    fn sub(self, rhs: OpCounts) -> OpCounts {
        OpCounts {
            hashes: self.hashes - rhs.hashes,
            encode_hashes: self.encode_hashes - rhs.encode_hashes,
            scalar_muls: self.scalar_muls - rhs.scalar_muls,
            point_adds: self.point_adds - rhs.point_adds,
            xors: self.xors - rhs.xors,
            random_draws: self.random_draws - rhs.random_draws,
        }
    }
}

impl Add for OpCounts {
    type Output = OpCounts;

    fn add(self, rhs: OpCounts) -> OpCounts {
        OpCounts {
            hashes: self.hashes + rhs.hashes,
            encode_hashes: self.encode_hashes + rhs.encode_hashes,
            scalar_muls: self.scalar_muls + rhs.scalar_muls,
            point_adds: self.point_adds + rhs.point_adds,
            xors: self.xors + rhs.xors,
            random_draws: self.random_draws + rhs.random_draws,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_is_scoped() {
        record(Op::Hash);
        let ((), counts) = measure(|| {
            record(Op::ScalarMul);
            record(Op::ScalarMul);
            record(Op::Xor);
        });
        assert_eq!(
            counts,
            OpCounts {
                scalar_muls: 2,
                xors: 1,
                ..Default::default()
            }
        );
    }
}
