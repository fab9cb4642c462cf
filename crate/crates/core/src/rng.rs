//! Counter-based Gaussian draws.
//!
//! Normal number `i` of path `p` at refinement level `l` is a pure function
//! of `(master_seed, l, p, i)`: the ChaCha8 key is derived from
//! `(master_seed, l)`, the ChaCha stream id is `p`, and draw `i` reads the
//! Box–Muller pair stored at words `4⌊i/2⌋ .. 4⌊i/2⌋+3` (cosine branch for
//! even `i`, sine branch for odd `i`). Output is therefore independent of how
//! paths are distributed over workers.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TWO_POW_MINUS_53: f64 = 1.0 / 9_007_199_254_740_992.0;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn derive_key(master_seed: u64, level: u32) -> [u8; 32] {
    let mut state = master_seed ^ (u64::from(level)).wrapping_mul(0xd1b5_4a32_d192_ed03);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// Sequential reader over the normal draws of one `(seed, level, path)` key.
#[derive(Clone, Debug)]
pub struct NormalStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(master_seed: u64, level: u32, path: u64) -> Self {
        let mut rng = ChaCha8Rng::from_seed(derive_key(master_seed, level));
        rng.set_stream(path);
        Self { rng, spare: None }
    }

    /// Stream positioned so that the next draw is number `index`.
    pub fn at(master_seed: u64, level: u32, path: u64, index: u64) -> Self {
        let mut s = Self::new(master_seed, level, path);
        s.rng.set_word_pos(u128::from(index / 2) * 4);
        if index % 2 == 1 {
            let (_, sin) = s.pair();
            s.spare = Some(sin);
        }
        s
    }

    #[inline]
    fn pair(&mut self) -> (f64, f64) {
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        // u1 in (0, 1) so the logarithm is finite
        let u1 = ((a >> 11) as f64 + 0.5) * TWO_POW_MINUS_53;
        let u2 = (b >> 11) as f64 * TWO_POW_MINUS_53;
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        (r * c, r * s)
    }

    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (c, s) = self.pair();
        self.spare = Some(s);
        c
    }
}

/// Standard normal draw number `index` for `(master_seed, level, path)`.
pub fn standard_normal(master_seed: u64, level: u32, path: u64, index: u64) -> f64 {
    NormalStream::at(master_seed, level, path, index).next_normal()
}

/// `ΔW` over one step of length `dt`: `sqrt(dt)` times the base-level draw
/// keyed on `(master_seed, path_index, step_index)`.
pub fn brownian_increment(master_seed: u64, path_index: u64, step_index: u64, dt: f64) -> f64 {
    debug_assert!(dt > 0.0);
    dt.sqrt() * standard_normal(master_seed, 0, path_index, step_index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        for step in [0u64, 1, 2, 17, 1_000_001] {
            assert_eq!(
                brownian_increment(42, 7, step, 0.01).to_bits(),
                brownian_increment(42, 7, step, 0.01).to_bits()
            );
        }
        assert_ne!(brownian_increment(42, 7, 3, 1.0), brownian_increment(43, 7, 3, 1.0));
        assert_ne!(brownian_increment(42, 7, 3, 1.0), brownian_increment(42, 8, 3, 1.0));
        assert_ne!(standard_normal(42, 0, 7, 3), standard_normal(42, 1, 7, 3));
    }

    #[test]
    fn random_access_matches_sequential() {
        let mut seq = NormalStream::new(9, 0, 123);
        for i in 0..257u64 {
            let z = seq.next_normal();
            assert_eq!(z.to_bits(), standard_normal(9, 0, 123, i).to_bits(), "draw {i}");
        }
        let mut mid = NormalStream::at(9, 0, 123, 101);
        for i in 101..140u64 {
            assert_eq!(mid.next_normal().to_bits(), standard_normal(9, 0, 123, i).to_bits());
        }
    }

    #[test]
    fn unit_moments() {
        let n = 1_000_000u64;
        let mut s = NormalStream::new(2024, 0, 0);
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let z = s.next_normal();
            sum += z;
            sq += z * z;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        // 3σ bands: 3/sqrt(n) for the mean, 3·sqrt(2/n) for the variance
        assert!(mean.abs() <= 4e-3, "{mean}");
        assert!((var - 1.0).abs() <= 3.0 * (2.0 / n as f64).sqrt(), "{var}");
    }

    #[test]
    fn increment_variance_scales_with_dt() {
        let n = 200_000u64;
        let dt = 0.25;
        let xs: Vec<f64> = (0..n).map(|k| brownian_increment(5, k % 31, k, dt)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        let sigma = dt * (2.0 / n as f64).sqrt();
        assert!((var - dt).abs() <= 3.0 * sigma, "{var}");
    }
}
