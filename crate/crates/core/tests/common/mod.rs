#![allow(dead_code)]

use flc_core::rational::ratio;
use flc_core::{Distribution, Rational};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// `g` nonnegative integers summing to `den`.
pub fn composition(rng: &mut ChaCha8Rng, g: usize, den: i64) -> Vec<i64> {
    let mut cuts: Vec<i64> = (0..g - 1).map(|_| rng.gen_range(0..=den)).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(g);
    let mut prev = 0;
    for c in cuts {
        out.push(c - prev);
        prev = c;
    }
    out.push(den - prev);
    out
}

pub fn rational_probs(rng: &mut ChaCha8Rng, g: usize, den: i64) -> Vec<Rational> {
    composition(rng, g, den).into_iter().map(|c| ratio(c, den)).collect()
}

pub fn random_joint(rng: &mut ChaCha8Rng, sizes: &[usize], den: i64) -> Distribution {
    let n = sizes.iter().product();
    Distribution::from_sizes(sizes, rational_probs(rng, n, den)).expect("valid")
}

pub fn random_sizes(rng: &mut ChaCha8Rng, max_total: usize) -> Vec<usize> {
    loop {
        let k = rng.gen_range(1..=4);
        let sizes: Vec<usize> = (0..k).map(|_| rng.gen_range(1..=4)).collect();
        if sizes.iter().product::<usize>() <= max_total {
            return sizes;
        }
    }
}

/// Random subset of `0..n`, as a sorted vector.
pub fn subset(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    (0..n).filter(|_| rng.gen_bool(0.5)).collect()
}

pub fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
    }
}

/// A random stateless channel with rational entries over denominator `den`.
pub fn random_channel(rng: &mut ChaCha8Rng, inputs: &[usize], outputs: &[usize], den: i64) -> flc_core::ChannelSpec {
    let n_out: usize = outputs.iter().product();
    let n_in: usize = inputs.iter().product();
    let rows: Vec<Vec<Rational>> = (0..n_in).map(|_| rational_probs(rng, n_out, den)).collect();
    let mut kernel = vec![Rational::default(); n_out * n_in];
    for (r, row) in rows.iter().enumerate() {
        for (o, p) in row.iter().enumerate() {
            kernel[o * n_in + r] = p.clone();
        }
    }
    flc_core::ChannelSpec::new(inputs, outputs, 1, 0, kernel).expect("stochastic")
}
