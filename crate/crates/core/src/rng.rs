//! Counter-based pseudo-random generation keyed by (seed, replicate, cell).
//!
//! Every variate is produced by a generator whose state is a hash of the
//! tuple that identifies it: the experiment seed, the replicate number and
//! the (signed) cell coordinates. Two consequences:
//!
//! - a cell's value never depends on traversal order, so replicates can be
//!   generated concurrently without coordination, and growing a rectangle
//!   never resamples existing cells;
//! - identical (seed, replicate, cell) always yields identical bytes on
//!   every platform (the scheme is pure 64-bit integer arithmetic).
//!
//! The mixing function is the splitmix64 finalizer (Stafford mix 13), the
//! same construction as `SplittableRandom`; successive draws inside one
//! cell step the state by the golden-ratio increment. Statistical quality
//! is appropriate for simulation, not cryptography.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-cell draw stream.
#[derive(Debug, Clone)]
pub struct CellRng {
    state: u64,
}

impl CellRng {
    /// Key a stream by (seed, replicate, cell coordinates). Coordinates
    /// are signed so that moving-average innovations indexed below 1 get
    /// their own keys.
    pub fn keyed(seed: u64, replicate: u64, coords: &[i64]) -> Self {
        let mut h = mix64(seed ^ GOLDEN);
        h = mix64(h ^ replicate.wrapping_mul(GOLDEN));
        for &c in coords {
            h = mix64(h ^ (c as u64).wrapping_add(GOLDEN));
        }
        Self { state: h }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform draw strictly inside (0, 1): 53-bit mantissa at half-ulp
    /// offset, so inverse-CDF transforms never see 0 or 1.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}
