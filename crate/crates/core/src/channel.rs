//! Quasi-static Rayleigh flat fading with additive white Gaussian noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::numcore::ComplexMat;
use crate::scalar::{Cx, Scalar};
use crate::stbc::{NT, T_USES};

/// Receive antennas.
pub const NR: usize = 2;

/// One channel matrix, held fixed over a codeword.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T: Scalar> {
    pub h: ComplexMat<T>,
}

impl<T: Scalar> ChannelRealization<T> {
    pub fn new(h: ComplexMat<T>) -> Self {
        Self { h }
    }
}

/// Noise variance per complex entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams<T> {
    pub n0: T,
}

/// `N0 = 4 / 10^{snr/10}`: with unit-energy symbols `E‖HS‖² = 32` and `E‖N‖² = 8·N0`.
pub fn n0_for_snr<T: Scalar>(snr_db: T) -> NoiseParams<T> {
    NoiseParams { n0: T::lit(4.0) / T::lit(10.0).powf(snr_db / T::lit(10.0)) }
}

fn complex_gaussian<T: Scalar, R: Rng + ?Sized>(rng: &mut R, scale: T) -> Cx<T>
where
    StandardNormal: Distribution<T>,
{
    let re: T = StandardNormal.sample(rng);
    let im: T = StandardNormal.sample(rng);
    Cx::new(re * scale, im * scale)
}

/// `NR × NT` matrix with i.i.d. `CN(0, 1)` entries.
pub fn sample_channel<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> ChannelRealization<T>
where
    StandardNormal: Distribution<T>,
{
    let scale = T::FRAC_1_SQRT_2();
    let data = (0..NR * NT).map(|_| complex_gaussian(rng, scale)).collect();
    ChannelRealization { h: ComplexMat::from_row_major(NR, NT, data) }
}

/// `NR × T` matrix with i.i.d. `CN(0, N0)` entries. `N0 = 0` yields zeros.
pub fn sample_noise<T: Scalar, R: Rng + ?Sized>(rng: &mut R, noise: NoiseParams<T>) -> ComplexMat<T>
where
    StandardNormal: Distribution<T>,
{
    let scale = (noise.n0 / T::lit(2.0)).sqrt();
    let data = (0..NR * T_USES).map(|_| complex_gaussian(rng, scale)).collect();
    ComplexMat::from_row_major(NR, T_USES, data)
}

/// `Y = HS + N`.
pub fn transmit<T: Scalar>(h: &ChannelRealization<T>, s: &ComplexMat<T>, n: &ComplexMat<T>) -> ComplexMat<T> {
    &(&h.h * s) + n
}

/// Generator for one frame, keyed on `(seed, snr_index, frame_index)` so that a
/// frame's draws do not depend on which worker runs it or in what order.
pub fn frame_rng(master_seed: u64, snr_index: u64, frame_index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&snr_index.to_le_bytes());
    key[16..24].copy_from_slice(&frame_index.to_le_bytes());
    key[24..].copy_from_slice(b"stbcfram");
    ChaCha8Rng::from_seed(key)
}
