//! Stable seed derivation so every trial's randomness is fixed by its coordinates,
//! independent of scheduling.

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `trial` at grid point `gamma_index` of a run seeded with `master`.
pub fn trial_seed(master: u64, gamma_index: u64, trial: u64) -> u64 {
    let h = splitmix64(master);
    let h = splitmix64(h ^ gamma_index.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    splitmix64(h ^ trial.wrapping_mul(0xA076_1D64_78BD_642F))
}

/// Independent random streams drawn from one trial seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Interference = 1,
    ReceiverNoise = 2,
    IrsNoise = 3,
}

pub fn stream_seed(trial_seed: u64, stream: Stream) -> u64 {
    splitmix64(trial_seed ^ splitmix64(stream as u64))
}
