mod common;

use common::{link_template, median};
use proptest::prelude::*;
use pvlc_core::link::*;
use pvlc_core::model::Load;
use rayon::prelude::*;

const SEEDS: u64 = 10;

/// Median BER over [`SEEDS`] seeds at `bit_rate`.
fn median_ber(template: &LinkConfig, bit_rate: f64) -> f64 {
    let bers: Vec<f64> = (0..SEEDS)
        .into_par_iter()
        .map(|seed| {
            let mut cfg = prepare(template, bit_rate);
            cfg.rng_seed = seed;
            run_link(&cfg).unwrap().ber
        })
        .collect();
    median(&bers)
}

#[test]
fn same_config_gives_identical_results() {
    let cfg = prepare(&link_template(Load::Resistive(2500.0), 8e-8), 5e6);
    let a = run_link(&cfg).unwrap();
    let b = run_link(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(received_waveform(&cfg).unwrap(), received_waveform(&cfg).unwrap());
    let other = run_link(&LinkConfig { rng_seed: 1, ..cfg }).unwrap();
    assert_ne!(a.bit_errors, other.bit_errors);
}

#[test]
fn ber_does_not_fall_as_rate_rises() {
    let t = link_template(Load::Resistive(2500.0), 6e-8);
    let bers: Vec<f64> = [3e6, 5e6, 7e6, 9e6, 12e6]
        .iter()
        .map(|&r| median_ber(&t, r))
        .collect();
    assert!(bers.windows(2).all(|w| w[1] >= w[0]), "{bers:?}");
    assert!(bers[bers.len() - 1] > bers[0]);
}

#[test]
fn ber_does_not_rise_with_snr() {
    let bers: Vec<f64> = [2e-7, 1.3e-7, 9e-8, 6e-8, 4e-8]
        .iter()
        .map(|&n| median_ber(&link_template(Load::Resistive(2500.0), n), 5e6))
        .collect();
    assert!(bers.windows(2).all(|w| w[1] <= w[0]), "{bers:?}");
    assert!(bers[0] > bers[bers.len() - 1]);
}

#[test]
fn equalizer_helps_an_isi_limited_link() {
    // the open-circuit pole sits three decades below the symbol rate
    let on = link_template(Load::Open, 2e-8);
    let off = LinkConfig { eq_step: 0.0, ..on.clone() };
    let (ber_on, ber_off) = (median_ber(&on, 5e6), median_ber(&off, 5e6));
    assert!(ber_on <= ber_off, "{ber_on} vs {ber_off}");
    assert!(ber_off > 0.1);
}

#[test]
fn noiseless_link_is_error_free_across_loads() {
    for load in [Load::Resistive(100.0), Load::Resistive(800.0), Load::Resistive(4200.0), Load::Open] {
        let cfg = prepare(&link_template(load, 0.0), 5e6);
        let r = run_link(&cfg).unwrap();
        assert!(r.converged_sync);
        assert!(r.ber <= 1e-4, "{load:?}: {}", r.ber);
    }
}

proptest! {
    #[test]
    fn gray_neighbours_differ_in_one_bit((m, i) in (1u32..8).prop_flat_map(|k| (Just(1usize << k), 0..(1usize << k) - 1))) {
        prop_assert!(i + 1 < m);
        prop_assert_eq!((gray_encode(i) ^ gray_encode(i + 1)).count_ones(), 1);
        prop_assert_eq!(gray_decode(gray_encode(i)), i);
    }

    #[test]
    fn bit_mapping_round_trips(k in 1u32..5, raw in prop::collection::vec(0u8..2, 0..120)) {
        let m = 1usize << k;
        let n = raw.len() - raw.len() % k as usize;
        let bits = &raw[..n];
        let levels = bits_to_levels(bits, m).unwrap();
        prop_assert!(levels.iter().all(|&l| l < m));
        prop_assert_eq!(levels_to_bits(&levels, m), bits.to_vec());
    }
}
