//! Reproducible random weight matrices.
//!
//! A SplitMix64 stream is seeded with the 64-bit seed as its state and
//! drawn once per weight in row-major order; each weight is the top
//! `weight_bits` bits of its draw.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::fixedpoint::BitWidths;
use crate::network::WeightMatrix;

pub fn generate_weights(seed: u64, n: usize, widths: BitWidths) -> WeightMatrix {
    let mut rng = SplitMix64::from_seed(seed.to_le_bytes());
    let shift = 64 - widths.weight as u32;
    let values = (0..n * n).map(|_| (rng.next_u64() >> shift) as u32).collect();
    WeightMatrix::from_row_major(n, values, widths.weight).expect("draws fit the weight width")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn splitmix(state: &mut u64) -> u64 {
        *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    #[test]
    fn matches_reference_stream() {
        for seed in [0, 1, 42, u64::MAX] {
            let mut state = seed;
            let expected: Vec<u32> = (0..16).map(|_| (splitmix(&mut state) >> 60) as u32).collect();
            let w = generate_weights(seed, 4, BitWidths::default());
            assert_eq!(w.row_major(), expected.as_slice(), "seed {seed}");
        }
    }

    #[test]
    fn golden_seed_zero() {
        let w = generate_weights(0, 4, BitWidths::default());
        assert_eq!(w.row_major(), &[14, 6, 0, 15, 1, 5, 2, 12, 3, 15, 6, 12, 8, 8, 11, 8]);
    }

    #[test]
    fn same_seed_same_matrix() {
        let widths = BitWidths::default();
        assert_eq!(generate_weights(9, 4, widths), generate_weights(9, 4, widths));
        assert_ne!(generate_weights(9, 4, widths), generate_weights(10, 4, widths));
    }

    #[test]
    fn draws_stay_in_range() {
        let widths = BitWidths::new(3, 4, 8, 10).unwrap();
        let mut seen = [false; 8];
        // 10^5 draws
        for seed in 0..6250 {
            for &v in generate_weights(seed, 4, widths).row_major() {
                assert!(v < 8);
                seen[v as usize] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }
}
