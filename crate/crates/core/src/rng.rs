//! Counter-based random streams.
//!
//! Every draw is a pure function of `(seed, trial, time, tag, counter)`, so a
//! trial produces the same numbers no matter which thread runs it or in what
//! order trials are scheduled.

use rand::rand_core::impls;
use rand::RngCore;

/// Stream tag for channel delay draws.
pub const TAG_DELAY: u64 = 1;
/// Stream tag for the exogenous input.
pub const TAG_INPUT: u64 = 2;
/// Stream tag for initial-state draws.
pub const TAG_INIT: u64 = 3;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline(always)]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    #[inline]
    pub fn new(seed: u64, trial: u64, time: u64, tag: u64) -> Self {
        let mut key = mix(seed.wrapping_add(GOLDEN));
        key = mix(key ^ trial.wrapping_mul(GOLDEN).wrapping_add(1));
        key = mix(key ^ time.wrapping_mul(0xD1B5_4A32_D192_ED03).wrapping_add(2));
        key = mix(key ^ tag.wrapping_mul(0x8CB9_2BA7_2F3D_8DD7).wrapping_add(3));
        Self { key, counter: 0 }
    }
}

impl RngCore for CounterRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        impls::fill_bytes_via_next(self, dst)
    }
}
