//! Lock-free `f64` accumulator used for community weights.

use std::sync::atomic::{AtomicU64, Ordering};

/// An `f64` stored as its bit pattern; additions are compare-and-swap loops.
#[derive(Debug, Default)]
#[repr(transparent)]
pub struct AtomicF64(AtomicU64);

impl AtomicF64 {
    pub fn new(value: f64) -> Self {
        Self(AtomicU64::new(value.to_bits()))
    }

    #[inline]
    pub fn load(&self) -> f64 {
        f64::from_bits(self.0.load(Ordering::Relaxed))
    }

    #[inline]
    pub fn store(&self, value: f64) {
        self.0.store(value.to_bits(), Ordering::Relaxed);
    }

    /// Indivisible read-modify-write; returns the previous value.
    #[inline]
    pub fn fetch_add(&self, delta: f64) -> f64 {
        let mut current = self.0.load(Ordering::Relaxed);
        loop {
            let next = (f64::from_bits(current) + delta).to_bits();
            match self
                .0
                .compare_exchange_weak(current, next, Ordering::AcqRel, Ordering::Relaxed)
            {
                Ok(prev) => return f64::from_bits(prev),
                Err(actual) => current = actual,
            }
        }
    }

    pub fn into_inner(self) -> f64 {
        f64::from_bits(self.0.into_inner())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rayon::prelude::*;

    #[test]
    fn concurrent_adds_are_not_lost() {
        let acc = AtomicF64::new(0.0);
        (0..10_000).into_par_iter().for_each(|_| {
            acc.fetch_add(1.0);
        });
        assert_eq!(acc.load(), 10_000.0);
    }

    #[test]
    fn fetch_add_returns_previous() {
        let acc = AtomicF64::new(2.5);
        assert_eq!(acc.fetch_add(-1.0), 2.5);
        assert_eq!(acc.into_inner(), 1.5);
    }
}
