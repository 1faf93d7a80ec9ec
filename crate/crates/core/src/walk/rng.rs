use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent sub-streams derived from one user seed. Each purpose gets its
/// own ChaCha key; each path index its own stream under that key, so values
/// depend only on `(seed, purpose, index)` and never on scheduling.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Steps = 1,
    SpotCheck = 2,
    FirstPassage = 3,
    Harmonic = 4,
    Geometry = 5,
}

pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
