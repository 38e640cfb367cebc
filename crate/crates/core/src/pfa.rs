//! Probabilistic finite automata and the finite-state channels built from them.
//!
//! A channel driven by a PFA delivers a noiseless payload whenever the
//! automaton sits in its accept state and an erasure symbol otherwise, so
//! its rate is governed by how likely an input string is to reach acceptance.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::prob::ChannelSpec;
use crate::rational::{self, format_rational, parse_rational, Rational};
use crate::{Error, Result};

/// Default ceiling on the number of strings a bounded search may visit.
pub const DEFAULT_SEARCH_CAP: u128 = 1_000_000;
/// Largest payload alphabet [`build_channel_from_pfa`] will construct.
pub const MAX_PAYLOAD: usize = 1 << 16;
pub const DEFAULT_SEED: u64 = 0x5eed;

pub type Matrix = Vec<Vec<Rational>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pfa {
    n_states: usize,
    sigma: Vec<String>,
    matrices: Vec<Matrix>,
    start: usize,
    accept: usize,
}

/// On-disk PFA format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PfaFile {
    pub states: usize,
    pub start: usize,
    pub accept: usize,
    pub sigma: Vec<String>,
    pub matrices: BTreeMap<String, Vec<Vec<String>>>,
}

impl Pfa {
    pub fn new(sigma: Vec<String>, matrices: Vec<Matrix>, start: usize, accept: usize) -> Result<Self> {
        let n_states = matrices.first().map_or(0, Vec::len);
        let pfa = Self {
            n_states,
            sigma,
            matrices,
            start,
            accept,
        };
        pfa.validate()?;
        Ok(pfa)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidPfa(m));
        let n = self.n_states;
        if n == 0 {
            return bad("no states".into());
        }
        if self.sigma.is_empty() {
            return bad("empty input alphabet".into());
        }
        if self.matrices.len() != self.sigma.len() {
            return bad(format!(
                "{} matrices for {} symbols",
                self.matrices.len(),
                self.sigma.len()
            ));
        }
        for (i, s) in self.sigma.iter().enumerate() {
            if s.is_empty() || s.chars().any(|c| c.is_whitespace() || c == ',') {
                return bad(format!("symbol {s:?} must be nonempty without spaces or commas"));
            }
            if self.sigma[..i].contains(s) {
                return bad(format!("symbol {s:?} repeats"));
            }
        }
        if self.start >= n || self.accept >= n {
            return bad(format!("start/accept state outside 0..{n}"));
        }
        for (m, sym) in self.matrices.iter().zip(&self.sigma) {
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                return bad(format!("matrix for {sym:?} is not {n}×{n}"));
            }
            for (i, row) in m.iter().enumerate() {
                if row.iter().any(|v| v < &Rational::zero()) {
                    return bad(format!("matrix for {sym:?} has a negative entry in row {i}"));
                }
                let sum: Rational = row.iter().sum();
                if !sum.is_one() {
                    return bad(format!(
                        "row {i} of the matrix for {sym:?} sums to {}",
                        format_rational(&sum)
                    ));
                }
            }
            if !m[self.accept][self.accept].is_one() {
                return bad(format!("accept state is not absorbing under {sym:?}"));
            }
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn sigma(&self) -> &[String] {
        &self.sigma
    }

    pub fn matrix(&self, symbol: usize) -> &Matrix {
        &self.matrices[symbol]
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn accept(&self) -> usize {
        self.accept
    }

    pub fn symbol_index(&self, s: &str) -> Result<usize> {
        self.sigma
            .iter()
            .position(|x| x == s)
            .ok_or_else(|| Error::UnknownSymbol(s.to_string()))
    }

    /// Reads a word: whitespace- or comma-separated symbols, or one symbol per
    /// character when every symbol is a single character.
    pub fn parse_word(&self, text: &str) -> Result<Vec<usize>> {
        let text = text.trim();
        if text.contains(|c: char| c.is_whitespace() || c == ',') {
            return text
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| self.symbol_index(t))
                .collect();
        }
        if self.sigma.iter().all(|s| s.chars().count() == 1) {
            return text.chars().map(|c| self.symbol_index(&c.to_string())).collect();
        }
        if text.is_empty() {
            return Ok(Vec::new());
        }
        Ok(vec![self.symbol_index(text)?])
    }

    pub fn format_word(&self, word: &[usize]) -> String {
        let sep = if self.sigma.iter().all(|s| s.chars().count() == 1) {
            ""
        } else {
            " "
        };
        word.iter()
            .map(|&a| self.sigma[a].as_str())
            .collect::<Vec<_>>()
            .join(sep)
    }

    pub fn from_file(file: &PfaFile) -> Result<Self> {
        let mut matrices = Vec::with_capacity(file.sigma.len());
        for s in &file.sigma {
            let m = file
                .matrices
                .get(s)
                .ok_or_else(|| Error::InvalidPfa(format!("no matrix for symbol {s:?}")))?;
            let parsed = m
                .iter()
                .map(|row| row.iter().map(|t| parse_rational(t)).collect::<Result<Vec<_>>>())
                .collect::<Result<Matrix>>()?;
            matrices.push(parsed);
        }
        if let Some(extra) = file.matrices.keys().find(|k| !file.sigma.contains(k)) {
            return Err(Error::InvalidPfa(format!("matrix for undeclared symbol {extra:?}")));
        }
        let pfa = Self::new(file.sigma.clone(), matrices, file.start, file.accept)?;
        if pfa.n_states != file.states {
            return Err(Error::InvalidPfa(format!(
                "declared {} states, matrices are {}×{}",
                file.states, pfa.n_states, pfa.n_states
            )));
        }
        Ok(pfa)
    }

    pub fn to_file(&self) -> PfaFile {
        PfaFile {
            states: self.n_states,
            start: self.start,
            accept: self.accept,
            sigma: self.sigma.clone(),
            matrices: self
                .sigma
                .iter()
                .zip(&self.matrices)
                .map(|(s, m)| {
                    let rows = m.iter().map(|r| r.iter().map(format_rational).collect()).collect();
                    (s.clone(), rows)
                })
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PfaFile = serde_json::from_str(text).map_err(|e| Error::parse_json(&e))?;
        Self::from_file(&file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("PFA serializes")
    }

    fn step(&self, dist: &[Rational], symbol: usize) -> Vec<Rational> {
        let m = &self.matrices[symbol];
        let mut next = vec![Rational::zero(); self.n_states];
        for (i, p) in dist.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            for (j, v) in m[i].iter().enumerate() {
                if !v.is_zero() {
                    next[j] += p * v;
                }
            }
        }
        next
    }

    fn start_vector(&self) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); self.n_states];
        v[self.start] = Rational::one();
        v
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AcceptanceProfile {
    pub word: String,
    #[serde(with = "crate::rational::serde_str")]
    pub prob: Rational,
    /// Acceptance probability after each prefix, starting with the empty one.
    #[serde(with = "crate::rational::serde_vec")]
    pub per_prefix: Vec<Rational>,
}

/// Probability that the automaton sits in the accept state after reading `word`.
pub fn acceptance_prob(pfa: &Pfa, word: &[usize]) -> Result<AcceptanceProfile> {
    if let Some(&a) = word.iter().find(|&&a| a >= pfa.sigma.len()) {
        return Err(Error::UnknownSymbol(format!("#{a}")));
    }
    let mut dist = pfa.start_vector();
    let mut per_prefix = vec![dist[pfa.accept].clone()];
    for &a in word {
        dist = pfa.step(&dist, a);
        per_prefix.push(dist[pfa.accept].clone());
    }
    Ok(AcceptanceProfile {
        word: pfa.format_word(word),
        prob: per_prefix.last().cloned().expect("nonempty"),
        per_prefix,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SearchOutcome {
    /// A word accepted with probability above the threshold.
    Witness {
        word: String,
        #[serde(with = "crate::rational::serde_str")]
        prob: Rational,
    },
    /// No word up to `max_len` beats the threshold. This proves nothing
    /// about longer words.
    NoWitnessUpTo {
        max_len: usize,
        best_word: String,
        #[serde(with = "crate::rational::serde_str")]
        best_prob: Rational,
    },
}

/// Exhaustive search over all words of length at most `max_len` for one
/// accepted with probability strictly above `tau`. Prefers the shortest
/// witness, then the lexicographically first in symbol order.
pub fn bounded_emptiness_search(pfa: &Pfa, tau: &Rational, max_len: usize, cap: u128) -> Result<SearchOutcome> {
    let k = pfa.sigma.len() as u128;
    let words = (0..=max_len as u32)
        .try_fold(0u128, |acc, l| k.checked_pow(l).and_then(|n| acc.checked_add(n)))
        .unwrap_or(u128::MAX);
    if words > cap {
        return Err(Error::ResourceCap {
            requested: words,
            cap,
            hint: "lower --max-len".into(),
        });
    }
    // (word, prob), best prob with shortest-then-lex tie break
    let mut best: (Vec<usize>, Rational) = (Vec::new(), pfa.start_vector()[pfa.accept].clone());
    let mut witness: Option<(Vec<usize>, Rational)> = None;
    if best.1 > *tau {
        witness = Some(best.clone());
    }
    let better = |w: &[usize], p: &Rational, cur: &(Vec<usize>, Rational)| {
        p > &cur.1 || (p == &cur.1 && (w.len(), w) < (cur.0.len(), cur.0.as_slice()))
    };
    let mut stack: Vec<(Vec<usize>, Vec<Rational>)> = vec![(Vec::new(), pfa.start_vector())];
    while let Some((word, dist)) = stack.pop() {
        if word.len() == max_len {
            continue;
        }
        for a in (0..pfa.sigma.len()).rev() {
            let next = pfa.step(&dist, a);
            let mut w = word.clone();
            w.push(a);
            let p = next[pfa.accept].clone();
            if better(&w, &p, &best) {
                best = (w.clone(), p.clone());
            }
            if p > *tau {
                let shorter = witness.as_ref().is_none_or(|(cw, _)| (w.len(), &w) < (cw.len(), cw));
                if shorter {
                    witness = Some((w.clone(), p));
                }
            }
            stack.push((w, next));
        }
    }
    Ok(match witness {
        Some((w, p)) => SearchOutcome::Witness {
            word: pfa.format_word(&w),
            prob: p,
        },
        None => SearchOutcome::NoWitnessUpTo {
            max_len,
            best_word: pfa.format_word(&best.0),
            best_prob: best.1,
        },
    })
}

/// A channel built from a PFA, with the observation the terminals share.
#[derive(Clone, Debug, PartialEq)]
pub struct PfaChannel {
    pub channel: ChannelSpec,
    /// Payload alphabet size `p`; input `a·p + w` sends payload `w` with symbol `a`.
    pub payload: usize,
    /// Output index of the erasure symbol (equal to `payload`).
    pub erasure: usize,
    /// `observation[s]` is true iff `s` is the accept state; both ends see it.
    pub observation: Vec<bool>,
    /// Nats per use actually carried, `ln p`.
    pub k_effective: f64,
}

/// Builds the finite-state channel whose state follows the PFA on the symbol
/// part of the input and which passes the payload through only in the accept state.
pub fn build_channel_from_pfa(pfa: &Pfa, k: f64) -> Result<PfaChannel> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Precondition(format!("K must be positive, got {k}")));
    }
    let raw = (k.exp() - 1e-9).ceil();
    if raw > MAX_PAYLOAD as f64 {
        return Err(Error::ResourceCap {
            requested: raw as u128,
            cap: MAX_PAYLOAD as u128,
            hint: "payload alphabet too large; lower K".into(),
        });
    }
    let p = (raw as usize).max(1);
    let n = pfa.n_states;
    let sigma = pfa.sigma.len();
    let inputs = sigma * p;
    let outputs = p + 1;
    // axes (out, next, in, prev), prev fastest
    let mut kernel = vec![Rational::zero(); outputs * n * inputs * n];
    for a in 0..sigma {
        for w in 0..p {
            let x = a * p + w;
            for prev in 0..n {
                let out = if prev == pfa.accept { w } else { p };
                for (next, v) in pfa.matrices[a][prev].iter().enumerate() {
                    if !v.is_zero() {
                        kernel[((out * n + next) * inputs + x) * n + prev] = v.clone();
                    }
                }
            }
        }
    }
    let channel = ChannelSpec::new(&[inputs], &[outputs], n, pfa.start, kernel)?;
    Ok(PfaChannel {
        channel,
        payload: p,
        erasure: p,
        observation: (0..n).map(|s| s == pfa.accept).collect(),
        k_effective: (p as f64).ln(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityBounds {
    /// `tau1·K − kappa`, clamped at 0.
    pub lower: Option<f64>,
    pub lower_clamped: bool,
    /// `tau2·K + ln|Σ|`, valid only if the emptiness hypothesis holds.
    pub upper: Option<f64>,
}

/// Rate bounds from a witness at `tau1` and/or an emptiness hypothesis at `tau2`.
pub fn capacity_bounds(
    tau1: Option<f64>,
    tau2: Option<f64>,
    k: f64,
    kappa: f64,
    sigma_size: usize,
) -> Result<CapacityBounds> {
    if kappa.is_nan() || kappa <= 0.0 {
        return Err(Error::Precondition(format!("kappa must be positive, got {kappa}")));
    }
    let raw = tau1.map(|t| t * k - kappa);
    Ok(CapacityBounds {
        lower: raw.map(|r| r.max(0.0)),
        lower_clamped: raw.is_some_and(|r| r < 0.0),
        upper: tau2.map(|t| t * k + (sigma_size as f64).ln()),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapConstants {
    pub k: f64,
    pub sigma_size: usize,
    pub delta1: f64,
    pub delta2: f64,
    pub c_l: f64,
    pub c_u: f64,
    /// `(1 − delta1)·K − delta2` in exact arithmetic.
    #[serde(with = "crate::rational::serde_str")]
    pub c_u_exact: Rational,
    pub delta: f64,
    /// Capacities below this fall on the lower side of the gap.
    pub lower_threshold: f64,
    /// Capacities above this fall on the upper side.
    pub upper_threshold: f64,
}

/// `C_l = delta1·K + ln|Σ|`, `C_u = (1 − delta1)·K − delta2`, `Δ = (C_u − C_l)/8`.
pub fn gap_constants(k: &Rational, sigma_size: usize, delta1: &Rational, delta2: &Rational) -> Result<GapConstants> {
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    if delta1 < &Rational::zero() || delta1 >= &half {
        return Err(Error::Precondition("delta1 must lie in [0, 1/2)".into()));
    }
    if delta2 <= &Rational::zero() {
        return Err(Error::Precondition("delta2 must be positive".into()));
    }
    if sigma_size == 0 {
        return Err(Error::Precondition("alphabet must be nonempty".into()));
    }
    let c_u_exact = (Rational::one() - delta1) * k - delta2;
    let c_l = rational::to_f64(&(delta1 * k)) + (sigma_size as f64).ln();
    let c_u = rational::to_f64(&c_u_exact);
    if c_u <= c_l {
        return Err(Error::Precondition(format!(
            "C_u = {c_u} ≤ C_l = {c_l}; K must exceed (ln|Σ| + delta2)/(1 − 2·delta1)"
        )));
    }
    let delta = (c_u - c_l) / 8.0;
    Ok(GapConstants {
        k: rational::to_f64(k),
        sigma_size,
        delta1: rational::to_f64(delta1),
        delta2: rational::to_f64(delta2),
        c_l,
        c_u,
        c_u_exact,
        delta,
        lower_threshold: c_l + 2.0 * delta,
        upper_threshold: c_u - 2.0 * delta,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationResult {
    pub mean_rate: f64,
    pub std_error: f64,
    /// Share of trials that reached the accept state within the prefix.
    pub entered_fraction: f64,
    pub trials: usize,
    pub horizon: usize,
    pub seed: u64,
}

/// Draws the next state from an exact row: integer sampling over the common
/// denominator when it fits in 64 bits.
struct RowSampler {
    cumulative: Vec<u64>,
    total: u64,
    fallback: Vec<f64>,
}

impl RowSampler {
    fn new(row: &[Rational]) -> Self {
        let den = row
            .iter()
            .fold(BigInt::one(), |acc, v| num_integer::Integer::lcm(&acc, v.denom()));
        let mut cumulative = Vec::with_capacity(row.len());
        let mut acc: u64 = 0;
        let mut exact = den.to_u64().is_some();
        for v in row {
            match (v.numer() * (&den / v.denom())).to_u64() {
                Some(n) if exact => {
                    acc += n;
                    cumulative.push(acc);
                }
                _ => exact = false,
            }
        }
        let mut run = 0.0;
        let fallback = row
            .iter()
            .map(|v| {
                run += rational::to_f64(v);
                run
            })
            .collect();
        Self {
            cumulative: if exact { cumulative } else { Vec::new() },
            total: if exact { acc } else { 0 },
            fallback,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        if self.total > 0 {
            let r = rng.gen_range(0..self.total);
            self.cumulative.iter().position(|&c| r < c).expect("r below total")
        } else {
            let r: f64 = rng.gen();
            self.fallback
                .iter()
                .position(|&c| r < c)
                .unwrap_or(self.fallback.len() - 1)
        }
    }
}

/// Monte Carlo rate of the two-phase scheme: feed `prefix`; if the automaton
/// has entered the accept state by the end of it, every use from the entry
/// time on carries `K` nats, otherwise nothing is sent.
///
/// Trial `t` draws from a ChaCha8 stream `t` under `seed`, so results do not
/// depend on scheduling.
pub fn simulate_two_phase_scheme(
    pfa: &Pfa,
    prefix: &[usize],
    k: f64,
    horizon: usize,
    trials: usize,
    seed: u64,
) -> Result<SimulationResult> {
    if horizon < prefix.len() {
        return Err(Error::Precondition("horizon must be at least the prefix length".into()));
    }
    if trials == 0 {
        return Err(Error::Precondition("need at least one trial".into()));
    }
    if let Some(&a) = prefix.iter().find(|&&a| a >= pfa.sigma.len()) {
        return Err(Error::UnknownSymbol(format!("#{a}")));
    }
    let samplers: Vec<Vec<RowSampler>> = pfa
        .matrices
        .iter()
        .map(|m| m.iter().map(|row| RowSampler::new(row)).collect())
        .collect();
    let outcomes: Vec<Option<usize>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let mut state = pfa.start;
            for (t, &a) in prefix.iter().enumerate() {
                if state == pfa.accept {
                    return Some(t);
                }
                state = samplers[a][state].sample(&mut rng);
            }
            (state == pfa.accept).then_some(prefix.len())
        })
        .collect();
    let per_trial: Vec<f64> = outcomes
        .iter()
        .map(|entry| match entry {
            Some(t) if *t < horizon => k * (horizon - t) as f64 / horizon as f64,
            _ => 0.0,
        })
        .collect();
    let n = trials as f64;
    let mean = per_trial.iter().sum::<f64>() / n;
    let var = if trials > 1 {
        per_trial.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(SimulationResult {
        mean_rate: mean,
        std_error: (var / n).sqrt(),
        entered_fraction: outcomes.iter().filter(|e| e.is_some()).count() as f64 / n,
        trials,
        horizon,
        seed,
    })
}
