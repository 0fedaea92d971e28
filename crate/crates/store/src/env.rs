//! Injected sources of time and randomness, so tests and seeded runs are
//! reproducible.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::model::UnixSeconds;

pub trait Clock: Send + Sync {
    fn now(&self) -> UnixSeconds;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> UnixSeconds {
        SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
    }
}

/// Clock that only moves when told to.
#[derive(Debug, Default)]
pub struct FixedClock(AtomicU64);

impl FixedClock {
    pub fn new(at: UnixSeconds) -> Self {
        FixedClock(AtomicU64::new(at))
    }

    pub fn set(&self, at: UnixSeconds) {
        self.0.store(at, Ordering::SeqCst);
    }

    pub fn advance(&self, secs: u64) {
        self.0.fetch_add(secs, Ordering::SeqCst);
    }
}

impl Clock for FixedClock {
    fn now(&self) -> UnixSeconds {
        self.0.load(Ordering::SeqCst)
    }
}

impl<C: Clock + ?Sized> Clock for std::sync::Arc<C> {
    fn now(&self) -> UnixSeconds {
        (**self).now()
    }
}

pub trait Entropy: Send {
    fn fill(&mut self, buf: &mut [u8]);

    /// Stream position to persist, for sources that can resume.
    fn checkpoint(&self) -> Option<u128> {
        None
    }

    fn resume(&mut self, _position: u128) {}
}

/// Deterministic ChaCha20 stream. Its position is persisted with the store so
/// a restarted node continues the same stream instead of repeating it.
pub struct SeededEntropy(ChaCha20Rng);

impl SeededEntropy {
    pub fn new(seed: u64) -> Self {
        SeededEntropy(ChaCha20Rng::seed_from_u64(seed))
    }
}

impl Entropy for SeededEntropy {
    fn fill(&mut self, buf: &mut [u8]) {
        self.0.fill_bytes(buf);
    }

    fn checkpoint(&self) -> Option<u128> {
        Some(self.0.get_word_pos())
    }

    fn resume(&mut self, position: u128) {
        self.0.set_word_pos(position);
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct OsEntropy;

impl Entropy for OsEntropy {
    fn fill(&mut self, buf: &mut [u8]) {
        rand::rng().fill_bytes(buf);
    }
}
