//! Per-thread operation counters.
//!
//! Signing and verification bump these so tests can assert on the *number*
//! of expensive operations a code path performs instead of timing it.
//! Counters are thread-local: a test that resets, runs a single-threaded
//! operation and then reads a snapshot sees exactly that operation's work.

use std::cell::Cell;

thread_local! {
    static DS_SIGNS: Cell<u64> = const { Cell::new(0) };
    static DS_VERIFIES: Cell<u64> = const { Cell::new(0) };
    static PROBE_SETS: Cell<u64> = const { Cell::new(0) };
    static PROBE_CHECKS: Cell<u64> = const { Cell::new(0) };
}

/// Snapshot of the calling thread's counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub ds_signs: u64,
    pub ds_verifies: u64,
    /// Bit-set operations performed by filter inserts (one per probe).
    pub probe_sets: u64,
    /// Bit tests performed by filter lookups (one per probe actually read).
    pub probe_checks: u64,
}

pub fn reset() {
    DS_SIGNS.with(|c| c.set(0));
    DS_VERIFIES.with(|c| c.set(0));
    PROBE_SETS.with(|c| c.set(0));
    PROBE_CHECKS.with(|c| c.set(0));
}

pub fn snapshot() -> OpCounts {
    OpCounts {
        ds_signs: DS_SIGNS.with(Cell::get),
        ds_verifies: DS_VERIFIES.with(Cell::get),
        probe_sets: PROBE_SETS.with(Cell::get),
        probe_checks: PROBE_CHECKS.with(Cell::get),
    }
}

#[inline]
fn bump(c: &'static std::thread::LocalKey<Cell<u64>>, by: u64) {
    c.with(|c| c.set(c.get().wrapping_add(by)));
}

pub(crate) fn ds_sign() {
    bump(&DS_SIGNS, 1);
}

pub(crate) fn ds_verify() {
    bump(&DS_VERIFIES, 1);
}

pub(crate) fn probe_sets(n: u64) {
    bump(&PROBE_SETS, n);
}

pub(crate) fn probe_checks(n: u64) {
    bump(&PROBE_CHECKS, n);
}
