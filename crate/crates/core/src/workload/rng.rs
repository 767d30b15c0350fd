//! Deterministic random source for trace generation.
//!
//! The state is seeded through SplitMix64 and advanced with xorshift64*
//! (shifts 12, 25, 27; multiplier `0x2545F4914F6CDD1D`). Both algorithms
//! are fixed here so traces are identical on every platform.

/// SplitMix64, used to expand seeds.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

#[derive(Debug, Clone)]
pub struct XorShift64Star {
    state: u64,
}

impl XorShift64Star {
    pub fn new(seed: u64) -> Self {
        let state = SplitMix64::new(seed).next_u64();
        // Zero is the one fixed point of the xorshift step.
        XorShift64Star {
            state: if state == 0 { 0x9E37_79B9_7F4A_7C15 } else { state },
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[0, n)` by multiply-shift; `n` must be nonzero.
    pub fn below(&mut self, n: u64) -> u64 {
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Uniform in `[lo, hi]`.
    pub fn range_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        if hi <= lo {
            return lo;
        }
        match (hi - lo).checked_add(1) {
            Some(span) => lo + self.below(span),
            None => self.next_u64(),
        }
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }
}

/// Seed for core `core` of a multi-core mix derived from one run seed.
pub fn core_seed(seed: u64, core: usize) -> u64 {
    let mut sm = SplitMix64::new(seed);
    let mut out = sm.next_u64();
    for _ in 0..core {
        out = sm.next_u64();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_sequence() {
        let mut sm = SplitMix64::new(1234567);
        let got: Vec<u64> = (0..5).map(|_| sm.next_u64()).collect();
        assert_eq!(
            got,
            [
                6457827717110365317,
                3203168211198807973,
                9817491932198370423,
                4593380528125082431,
                16408922859458223821
            ]
        );
    }

    #[test]
    fn xorshift_reference_sequences() {
        let mut r = XorShift64Star::new(0);
        let got: Vec<u64> = (0..4).map(|_| r.next_u64()).collect();
        assert_eq!(
            got,
            [
                8916199331640804048,
                16032783972208265725,
                12954103179475586193,
                16173463928478733820
            ]
        );
        let mut r = XorShift64Star::new(42);
        let got: Vec<u64> = (0..4).map(|_| r.next_u64()).collect();
        assert_eq!(
            got,
            [
                3580622183945639842,
                10378725325292465923,
                8967075514996744559,
                5001014893397904463
            ]
        );
    }

    #[test]
    fn bounded_draws_stay_in_range() {
        let mut r = XorShift64Star::new(9);
        for _ in 0..10_000 {
            assert!(r.below(7) < 7);
            let v = r.range_inclusive(3, 5);
            assert!((3..=5).contains(&v));
            let f = r.next_f64();
            assert!((0.0..1.0).contains(&f));
        }
        assert_eq!(r.range_inclusive(4, 4), 4);
    }

    #[test]
    fn core_seeds_differ() {
        assert_ne!(core_seed(5, 0), core_seed(5, 1));
        assert_eq!(core_seed(5, 2), core_seed(5, 2));
    }
}
