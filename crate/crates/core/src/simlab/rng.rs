//! Counter-based random streams. Each replicate owns the ChaCha stream
//! `(seed, stream)`, so results do not depend on how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for replicate `replicate` of experiment cell `cell` (e.g. one `n`).
pub fn cell_stream(cell: usize, replicate: usize) -> u64 {
    ((cell as u64) << 32) | replicate as u64
}
