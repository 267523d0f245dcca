//! Deterministic per-particle random streams.
//!
//! Every (seed, particle id, macro step) triple maps to an independent
//! ChaCha stream, so simulation results do not depend on particle
//! iteration order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream for one particle within one macro step.
pub fn particle_stream(seed: u64, particle_id: u64, step: u64) -> ChaCha8Rng {
    stream(seed, particle_id, step, 0x7061_7274) // "part"
}

/// Stream for drawing the initial condition.
pub fn init_stream(seed: u64) -> ChaCha8Rng {
    stream(seed, 0, 0, 0x696e_6974) // "init"
}

/// Stream for auxiliary per-step draws (e.g. cluster moment updates).
pub fn step_stream(seed: u64, step: u64) -> ChaCha8Rng {
    stream(seed, 0, step, 0x7374_6570) // "step"
}

fn stream(seed: u64, particle_id: u64, step: u64, tag: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let words = [
        splitmix64(seed ^ tag),
        splitmix64(seed.wrapping_add(splitmix64(particle_id))),
        splitmix64(particle_id ^ splitmix64(step)),
        splitmix64(step.wrapping_add(tag).wrapping_add(seed)),
    ];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
