//! Properties of automata, their channels and the two-phase scheme.

mod common;

use flc_core::pfa::{acceptance_prob, build_channel_from_pfa, gap_constants, simulate_two_phase_scheme, Matrix, Pfa};
use flc_core::rational::{int, ratio};
use flc_core::{ChannelSpec, Rational};
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn random_pfa(rng: &mut ChaCha8Rng, n: usize, sigma: usize) -> Pfa {
    let accept = rng.gen_range(0..n);
    let den = rng.gen_range(1..=10);
    let matrices: Vec<Matrix> = (0..sigma)
        .map(|_| {
            (0..n)
                .map(|i| {
                    if i == accept {
                        (0..n)
                            .map(|j| if j == accept { Rational::one() } else { Rational::zero() })
                            .collect()
                    } else {
                        rational_probs(rng, n, den)
                    }
                })
                .collect()
        })
        .collect();
    let names = (0..sigma).map(|i| format!("s{i}")).collect();
    Pfa::new(names, matrices, rng.gen_range(0..n), accept).unwrap()
}

fn oracle(pfa: &Pfa, word: &[usize]) -> Rational {
    let n = pfa.n_states();
    let mut p: Matrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Rational::one() } else { Rational::zero() })
                .collect()
        })
        .collect();
    for &a in word {
        let m = pfa.matrix(a);
        p = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| &p[i][k] * &m[k][j]).sum()).collect())
            .collect();
    }
    p[pfa.start()][pfa.accept()].clone()
}

#[test]
fn acceptance_matches_matrix_products_and_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..1000 {
        let sigma = rng.gen_range(1..=3);
        let pfa = random_pfa(&mut rng, 3, sigma);
        let word: Vec<usize> = (0..rng.gen_range(0..=8)).map(|_| rng.gen_range(0..sigma)).collect();
        let prof = acceptance_prob(&pfa, &word).unwrap();
        assert_eq!(prof.prob, oracle(&pfa, &word));
        assert_eq!(prof.per_prefix.len(), word.len() + 1);
        assert!(prof.per_prefix.windows(2).all(|w| w[0] <= w[1]));
        for (k, v) in prof.per_prefix.iter().enumerate() {
            assert_eq!(*v, oracle(&pfa, &word[..k]));
        }
    }
}

#[test]
fn pfa_channels_are_valid() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..100 {
        let n = rng.gen_range(2..=4);
        let sigma = rng.gen_range(1..=3);
        let pfa = random_pfa(&mut rng, n, sigma);
        let k = rng.gen_range(0.3..3.0);
        let pc = build_channel_from_pfa(&pfa, k).unwrap();
        // a fresh parse re-runs every channel check
        let back = ChannelSpec::from_json(&pc.channel.to_json()).unwrap();
        assert_eq!(back, pc.channel);
        assert_eq!(pc.channel.n_states(), n);
        assert_eq!(pc.channel.output_sizes(), vec![pc.payload + 1]);
        assert!(pc.k_effective >= k - 1e-9);
        // in the accept state the payload passes through unchanged
        let acc = pfa.accept();
        for x in 0..pc.channel.input_sizes()[0] {
            let w = x % pc.payload;
            let sent: Rational = (0..n).map(|next| pc.channel.prob(&[w], next, &[x], acc).clone()).sum();
            assert!(sent.is_one());
        }
    }
}

#[test]
fn simulation_converges_to_acceptance_times_k() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for seed in 0..6u64 {
        let pfa = random_pfa(&mut rng, 3, 2);
        let prefix: Vec<usize> = (0..4).map(|_| rng.gen_range(0..2)).collect();
        let k = 3.0;
        let horizon = 100_000;
        let r = simulate_two_phase_scheme(&pfa, &prefix, k, horizon, 20_000, seed).unwrap();
        let p = flc_core::rational::to_f64(&acceptance_prob(&pfa, &prefix).unwrap().prob);
        let target = p * k;
        // entry costs at most |prefix| uses out of the horizon
        let edge = k * prefix.len() as f64 / horizon as f64;
        assert!(
            (r.mean_rate - target).abs() <= 3.0 * r.std_error + edge,
            "{} vs {target} ± {}",
            r.mean_rate,
            r.std_error
        );
        assert_eq!(
            r,
            simulate_two_phase_scheme(&pfa, &prefix, k, horizon, 20_000, seed).unwrap()
        );
    }
}

#[test]
fn simulation_limits() {
    let pfa = Pfa::new(
        vec!["a".into()],
        vec![vec![vec![ratio(0, 1), ratio(1, 1)], vec![ratio(0, 1), ratio(1, 1)]]],
        0,
        1,
    )
    .unwrap();
    let r = simulate_two_phase_scheme(&pfa, &[], 2.0, 100, 50, 1).unwrap();
    assert_eq!(r.mean_rate, 0.0);
    let mut last = 0.0;
    for horizon in [10, 100, 1000] {
        let r = simulate_two_phase_scheme(&pfa, &[0], 2.0, horizon, 10, 1).unwrap();
        assert!(r.mean_rate > last && r.mean_rate < 2.0);
        last = r.mean_rate;
    }
    assert!((last - 2.0).abs() < 0.01);
}

proptest! {
    #[test]
    fn gap_delta_recomputes(k in 20i64..400, sigma in 1usize..8, d1 in 0i64..40, d2 in 1i64..100) {
        let g = gap_constants(&int(k), sigma, &ratio(d1, 100), &ratio(d2, 100)).unwrap();
        prop_assert_eq!((g.c_u - g.c_l) / 8.0, g.delta);
        prop_assert_eq!(g.c_u_exact, (Rational::one() - ratio(d1, 100)) * int(k) - ratio(d2, 100));
        prop_assert!(g.lower_threshold < g.upper_threshold);
    }

    #[test]
    fn pfa_files_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pfa = random_pfa(&mut rng, 3, 2);
        prop_assert_eq!(Pfa::from_json(&pfa.to_json()).unwrap(), pfa);
    }
}
