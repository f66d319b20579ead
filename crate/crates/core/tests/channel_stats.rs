use std::f64::consts::PI;

use dare_core::channel::{
    add_awgn, draw_channel, noise_variance, random_bits, transmit, trial_rng, ChannelModel,
};
use dare_core::{Constellation, C64};

#[test]
fn multitap_tones_have_unit_power_and_the_expected_correlation() {
    let (taps, n) = (4usize, 64usize);
    let model = ChannelModel::multitap(2, 2, taps, n);
    let draws = 4000;
    let mut power = 0.0;
    let mut lag1 = C64::new(0.0, 0.0);
    let mut lag_far = C64::new(0.0, 0.0);
    let mut count = 0.0;
    for t in 0..draws {
        let tones = draw_channel(&model, &mut trial_rng(3, 0, t)).unwrap();
        assert_eq!(tones.len(), n);
        for e in 0..4 {
            let (r, c) = (e / 2, e % 2);
            for f in 0..n {
                let h = tones[f][(r, c)];
                power += h.norm_sqr();
                lag1 += h * tones[(f + 1) % n][(r, c)].conj();
                lag_far += h * tones[(f + n / taps) % n][(r, c)].conj();
                count += 1.0;
            }
        }
    }
    let power = power / count;
    assert!((power - 1.0).abs() < 0.02, "mean tone power {power}");

    // equal-power taps: E{H_f H_{f+s}^*} = (1/T) sum_t exp(j 2 pi s t / N)
    let expect = |s: usize| -> C64 {
        (0..taps)
            .map(|t| C64::from_polar(1.0 / taps as f64, 2.0 * PI * (s * t) as f64 / n as f64))
            .sum()
    };
    let lag1 = lag1 / count;
    let lag_far = lag_far / count;
    assert!(
        (lag1 - expect(1)).norm() < 0.03,
        "lag 1 {lag1} vs {}",
        expect(1)
    );
    assert!(lag1.norm() > 0.95);
    assert!(expect(n / taps).norm() < 1e-12);
    assert!(lag_far.norm() < 0.03, "lag N/T {lag_far}");
}

#[test]
fn noise_moments() {
    let sigma = noise_variance(7.0, 3).sqrt();
    let n = 1_000_000;
    let zeros = vec![C64::new(0.0, 0.0); n];
    let noise = add_awgn(&zeros, sigma, &mut trial_rng(11, 1, 0)).unwrap();
    let var = noise.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
    let rel = (var - sigma * sigma).abs() / (sigma * sigma);
    assert!(rel < 0.01, "variance off by {rel}");
    let pseudo: C64 = noise.iter().map(|z| z * z).sum::<C64>() / n as f64;
    assert!(pseudo.norm() / (sigma * sigma) < 0.01, "E[n^2] = {pseudo}");
    let re_var = noise.iter().map(|z| z.re * z.re).sum::<f64>() / n as f64;
    assert!((re_var / (sigma * sigma) - 0.5).abs() < 0.01);

    let again = add_awgn(&zeros[..16], sigma, &mut trial_rng(11, 1, 0)).unwrap();
    assert_eq!(&again[..], &noise[..16]);
}

#[test]
fn qpsk_round_trip_is_exhaustive_for_small_k() {
    let c = Constellation::build_qam(4).unwrap();
    for k in 1..=3usize {
        let nbits = 2 * k;
        for word in 0..1u32 << nbits {
            let bits: Vec<i8> = (0..nbits)
                .map(|b| if word >> b & 1 == 1 { 1 } else { -1 })
                .collect();
            let x = transmit(&bits, &c, k).unwrap();
            let back: Vec<i8> = x
                .iter()
                .flat_map(|&p| c.label(c.slice_index(p)).to_vec())
                .collect();
            assert_eq!(back, bits);
        }
    }
}

#[test]
fn sixteen_qam_average_energy_is_one() {
    let c = Constellation::build_qam(16).unwrap();
    let mut rng = trial_rng(5, 0, 0);
    let draws = 50_000;
    let mut acc = 0.0;
    for _ in 0..draws {
        let x = transmit(&random_bits(16, &mut rng), &c, 4).unwrap();
        acc += x.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    let mean = acc / (4 * draws) as f64;
    assert!((mean - 1.0).abs() < 0.01, "mean symbol energy {mean}");
}
