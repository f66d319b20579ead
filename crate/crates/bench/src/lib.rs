//! Shared fixtures for the criterion benchmarks.

use dare_core::channel::{
    add_awgn, draw_channel, noise_variance, random_bits, transmit, trial_rng, ChannelModel,
};
use dare_core::{CMatrix, CVector, Constellation};

/// One received vector with its channel and noise level.
pub struct Fixture {
    pub h: CMatrix,
    pub y: CVector,
    pub sigma: f64,
    pub constellation: Constellation,
}

pub fn fixture(m: usize, k: usize, order: usize, snr_db: f64, seed: u64) -> Fixture {
    let c = Constellation::build_qam(order).expect("supported order");
    let mut rng = trial_rng(seed, 0, 0);
    let h = draw_channel(&ChannelModel::flat(m, k), &mut rng)
        .expect("valid model")
        .swap_remove(0);
    let bits = random_bits(k * c.bits_per_symbol(), &mut rng);
    let x = transmit(&bits, &c, k).expect("bit count matches");
    let sigma = noise_variance(snr_db, k).sqrt();
    let y = add_awgn(&h.mul_vec(&x).expect("shapes match"), sigma, &mut rng).expect("sigma >= 0");
    Fixture {
        h,
        y,
        sigma,
        constellation: c,
    }
}
