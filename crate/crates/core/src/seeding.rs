//! Deterministic per-replication RNG streams and the primitive draws every
//! sampler is built from.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// The generator used by every experiment driver.
pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash `(base_seed, cell, replication)` into a stream seed. Depends on
/// nothing but its arguments, so results do not depend on scheduling.
pub fn stream_seed(base_seed: u64, cell: u64, replication: u64) -> u64 {
    let h = splitmix64(base_seed);
    let h = splitmix64(h ^ cell.wrapping_mul(0xd6e8_feb8_6659_fd93));
    splitmix64(h ^ replication.wrapping_mul(0xa076_1d64_78bd_642f))
}

pub fn stream_rng(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

/// Uniform on the open interval `(0, 1)`, on the lattice `(k + ½) / 2⁵²`.
/// `1 − u` is exact and stays on the same lattice.
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 52) as f64;
    let k = rng.next_u64() >> 12;
    (k as f64 + 0.5) * SCALE
}

pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// `dim` iid `N(0, sd²)` draws.
pub fn normal_vec<R: Rng + ?Sized>(rng: &mut R, dim: usize, sd: f64) -> Vec<f64> {
    (0..dim).map(|_| sd * std_normal(rng)).collect()
}
