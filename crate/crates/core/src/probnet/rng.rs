//! Seeded, path-addressed random streams.
//!
//! A stream is identified by a 64-bit seed and a hierarchical index path
//! (document, subnetwork, instance, ...). The path is hashed into a ChaCha8
//! key, so a stream's draws depend only on `(seed, path)` and never on how
//! many other streams were created or consumed before it.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn derive_key(seed: u64, path: &[u64]) -> [u8; 32] {
    let mut state = splitmix(seed ^ 0xD0C5_EED0_0000_0000);
    for (depth, &p) in path.iter().enumerate() {
        let salted = p.wrapping_add(GOLDEN.wrapping_mul(depth as u64 + 1));
        state = splitmix(state ^ splitmix(salted));
    }
    state = splitmix(state ^ (path.len() as u64));
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
        state = splitmix(state.wrapping_add(i as u64));
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    key
}

/// A deterministic random stream keyed on `(seed, path)`.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    path: Vec<u64>,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::at(seed, &[])
    }

    pub fn at(seed: u64, path: &[u64]) -> Self {
        Self {
            seed,
            path: path.to_vec(),
            inner: ChaCha8Rng::from_seed(derive_key(seed, path)),
        }
    }

    /// Fresh stream one level below this one. Independent of how many draws
    /// this stream has already produced.
    pub fn child(&self, index: u64) -> Self {
        let mut path = self.path.clone();
        path.push(index);
        Self::at(self.seed, &path)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in the open interval `(0, 1)`.
    pub fn open_unit(&mut self) -> f64 {
        loop {
            let u = self.unit();
            if u > 0.0 {
                return u;
            }
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_paths_repeat() {
        let mut a = RngStream::at(7, &[1, 2, 3]);
        let mut b = RngStream::at(7, &[1, 2, 3]);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn child_ignores_parent_consumption() {
        let parent = RngStream::at(9, &[4]);
        let mut used = parent.clone();
        for _ in 0..17 {
            used.next_u64();
        }
        assert_eq!(parent.child(2).next_u64(), used.child(2).next_u64());
        assert_eq!(parent.child(2).next_u64(), RngStream::at(9, &[4, 2]).next_u64());
    }

    #[test]
    fn distinct_paths_differ() {
        let streams = [
            RngStream::at(1, &[]),
            RngStream::at(1, &[0]),
            RngStream::at(1, &[0, 0]),
            RngStream::at(1, &[1]),
            RngStream::at(2, &[0]),
            RngStream::at(1, &[1, 0]),
            RngStream::at(1, &[0, 1]),
        ];
        let firsts: Vec<u64> = streams.iter().map(|s| s.clone().next_u64()).collect();
        for i in 0..firsts.len() {
            for j in i + 1..firsts.len() {
                assert_ne!(firsts[i], firsts[j], "paths {i} and {j} collide");
            }
        }
    }

    #[test]
    fn sibling_streams_are_uncorrelated() {
        let n = 20_000;
        let mut a = RngStream::at(3, &[0, 5]);
        let mut b = RngStream::at(3, &[0, 6]);
        let xs: Vec<f64> = (0..n).map(|_| a.unit()).collect();
        let ys: Vec<f64> = (0..n).map(|_| b.unit()).collect();
        let mx = xs.iter().sum::<f64>() / n as f64;
        let my = ys.iter().sum::<f64>() / n as f64;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / n as f64;
        let corr = cov / (1.0 / 12.0);
        // 4 standard errors of a null correlation estimate
        assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "corr = {corr}");
    }

    #[test]
    fn unit_range() {
        let mut s = RngStream::new(11);
        for _ in 0..10_000 {
            let u = s.unit();
            assert!((0.0..1.0).contains(&u));
            let v = s.open_unit();
            assert!(v > 0.0 && v < 1.0);
        }
    }
}
