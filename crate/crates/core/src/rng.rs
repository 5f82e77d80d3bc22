//! Seed-stable pseudo-random streams.
//!
//! PCG-XSH-RR 64/32 with an explicit stream id, plus a SplitMix64 mixer
//! for deriving independent streams. Every randomized operation in the
//! workspace derives one stream per unit of work (trial, draw, curve), so
//! results depend only on the seed and the unit index, never on
//! evaluation order or thread count.

use alloc::vec::Vec;

const PCG_MULTIPLIER: u64 = 6364136223846793005;

#[derive(Debug, Clone)]
pub struct Pcg32 {
    state: u64,
    inc: u64,
    /// Spare normal variate from the last polar-method round trip.
    stash: Option<f64>,
}

impl Pcg32 {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = Pcg32 { state: 0, inc: (stream << 1) | 1, stash: None };
        rng.next_u32();
        rng.state = rng.state.wrapping_add(seed);
        rng.next_u32();
        rng
    }

    pub fn next_u32(&mut self) -> u32 {
        let old = self.state;
        self.state = old.wrapping_mul(PCG_MULTIPLIER).wrapping_add(self.inc);
        let xorshifted = (((old >> 18) ^ old) >> 27) as u32;
        let rot = (old >> 59) as u32;
        xorshifted.rotate_right(rot)
    }

    pub fn next_u64(&mut self) -> u64 {
        let hi = self.next_u32() as u64;
        let lo = self.next_u32() as u64;
        (hi << 32) | lo
    }

    /// Uniform in [0, 1) with 53 random mantissa bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, bound) without modulo bias.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "next_below bound must be positive");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % bound;
            }
        }
    }

    /// Standard normal via the Marsaglia polar method. Each accepted pair
    /// yields two variates; the second is stashed for the next call.
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.stash.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let scale = crate::math::sqrt(-2.0 * crate::math::ln(s) / s);
                self.stash = Some(v * scale);
                return u * scale;
            }
        }
    }
}

/// SplitMix64 finalizer; bijective on u64.
pub fn split_mix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// One independent generator per (seed, index) pair.
pub fn derive_stream(seed: u64, index: u64) -> Pcg32 {
    Pcg32::new(split_mix(seed ^ split_mix(index)), index)
}

/// In-place Fisher-Yates shuffle.
pub fn shuffle<T>(rng: &mut Pcg32, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = rng.next_below(i as u64 + 1) as usize;
        items.swap(i, j);
    }
}

/// `count` distinct indices below `bound`, in draw order.
///
/// Small requests use rejection sampling; dense requests fall back to a
/// partial Fisher-Yates over 0..bound. The strategy depends only on the
/// arguments, so a fixed stream always yields the same indices.
pub fn sample_distinct(rng: &mut Pcg32, bound: usize, count: usize) -> Vec<usize> {
    assert!(count <= bound, "cannot sample {count} distinct indices below {bound}");
    if count * 8 <= bound {
        let mut picked: Vec<usize> = Vec::with_capacity(count);
        while picked.len() < count {
            let idx = rng.next_below(bound as u64) as usize;
            if !picked.contains(&idx) {
                picked.push(idx);
            }
        }
        picked
    } else {
        let mut pool: Vec<usize> = (0..bound).collect();
        for i in 0..count {
            let j = i + rng.next_below((bound - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(count);
        pool
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible() {
        let a: Vec<u32> = {
            let mut rng = Pcg32::new(42, 7);
            (0..8).map(|_| rng.next_u32()).collect()
        };
        let b: Vec<u32> = {
            let mut rng = Pcg32::new(42, 7);
            (0..8).map(|_| rng.next_u32()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_streams_differ() {
        let mut a = derive_stream(42, 0);
        let mut b = derive_stream(42, 1);
        let same = (0..16).filter(|_| a.next_u32() == b.next_u32()).count();
        assert!(same < 3);
    }

    #[test]
    fn unit_floats_stay_in_range() {
        let mut rng = Pcg32::new(1, 0);
        for _ in 0..10_000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn next_below_is_roughly_uniform() {
        let mut rng = Pcg32::new(3, 0);
        let mut counts = [0u32; 5];
        for _ in 0..50_000 {
            counts[rng.next_below(5) as usize] += 1;
        }
        for &c in &counts {
            assert!((9_000..11_000).contains(&c), "bucket count {c}");
        }
    }

    #[test]
    fn normals_have_unit_moments() {
        let mut rng = Pcg32::new(9, 0);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let z = rng.next_normal();
            sum += z;
            sumsq += z * z;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn sample_distinct_both_strategies() {
        // Sparse path: 4 of 100.
        let mut rng = derive_stream(5, 0);
        let sparse = sample_distinct(&mut rng, 100, 4);
        assert_eq!(sparse.len(), 4);
        for (i, &v) in sparse.iter().enumerate() {
            assert!(v < 100);
            assert!(!sparse[..i].contains(&v));
        }
        // Dense path: 9 of 10.
        let mut rng = derive_stream(5, 1);
        let mut dense = sample_distinct(&mut rng, 10, 9);
        dense.sort_unstable();
        dense.dedup();
        assert_eq!(dense.len(), 9);
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut rng = derive_stream(11, 0);
        let mut items: Vec<usize> = (0..50).collect();
        shuffle(&mut rng, &mut items);
        let mut sorted = items.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(items, (0..50).collect::<Vec<_>>());
    }
}
