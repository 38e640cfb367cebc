//! Exact-rational probability vectors and channel tensors.
//!
//! Joint distributions over a product alphabet `X_0 × X_1 × ... × X_{k-1}` are
//! stored densely in row-major order: the last alphabet varies fastest. The
//! same convention is used for channel kernels, whose axes are ordered
//! `(outputs..., next_state, inputs..., prev_state)`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{self, format_rational, Rational};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    pub name: String,
    pub size: usize,
}

impl Alphabet {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Self {
            name: name.into(),
            size,
        }
    }
}

/// Number of elements of the product alphabet.
pub fn product_size(sizes: &[usize]) -> usize {
    sizes.iter().product()
}

/// Row-major strides for `sizes`.
pub fn strides(sizes: &[usize]) -> Vec<usize> {
    let mut out = vec![1; sizes.len()];
    for i in (0..sizes.len().saturating_sub(1)).rev() {
        out[i] = out[i + 1] * sizes[i + 1];
    }
    out
}

/// Splits a flat row-major index into per-axis digits.
pub fn decode(mut index: usize, sizes: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; sizes.len()];
    for i in (0..sizes.len()).rev() {
        digits[i] = index % sizes[i];
        index /= sizes[i];
    }
    digits
}

pub fn encode(digits: &[usize], sizes: &[usize]) -> usize {
    digits.iter().zip(sizes).fold(0, |acc, (&d, &s)| acc * s + d)
}

/// First reason a vector fails to be a probability distribution.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Length { expected: usize, found: usize },
    Negative { index: usize },
    Sum { sum: Rational },
    EmptyAlphabet { index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Length { expected, found } => {
                write!(f, "expected {expected} entries, found {found}")
            }
            Violation::Negative { index } => write!(f, "negative entry at index {index}"),
            Violation::Sum { sum } => {
                if sum.is_integer() {
                    write!(f, "sum = {} ≠ 1", sum.numer())
                } else {
                    write!(f, "sum = {} ≠ 1", sum)
                }
            }
            Violation::EmptyAlphabet { index } => write!(f, "alphabet {index} has size 0"),
        }
    }
}

/// Checks nonnegativity and exact normalization.
pub fn validate_distribution(alphabets: &[Alphabet], probs: &[Rational]) -> Result<(), Violation> {
    if let Some(index) = alphabets.iter().position(|a| a.size == 0) {
        return Err(Violation::EmptyAlphabet { index });
    }
    let expected = alphabets.iter().map(|a| a.size).product();
    if probs.len() != expected {
        return Err(Violation::Length {
            expected,
            found: probs.len(),
        });
    }
    if let Some(index) = probs.iter().position(|p| p.is_negative()) {
        return Err(Violation::Negative { index });
    }
    let sum: Rational = probs.iter().sum();
    if !sum.is_one() {
        return Err(Violation::Sum { sum });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distribution {
    alphabets: Vec<Alphabet>,
    probs: Vec<Rational>,
}

impl Distribution {
    pub fn new(alphabets: Vec<Alphabet>, probs: Vec<Rational>) -> Result<Self> {
        validate_distribution(&alphabets, &probs).map_err(Error::InvalidDistribution)?;
        Ok(Self { alphabets, probs })
    }

    /// Distribution over anonymous alphabets `X0, X1, ...` of the given sizes.
    pub fn from_sizes(sizes: &[usize], probs: Vec<Rational>) -> Result<Self> {
        let alphabets = sizes
            .iter()
            .enumerate()
            .map(|(i, &s)| Alphabet::new(format!("X{i}"), s))
            .collect();
        Self::new(alphabets, probs)
    }

    pub(crate) fn new_unchecked(alphabets: Vec<Alphabet>, probs: Vec<Rational>) -> Self {
        debug_assert!(validate_distribution(&alphabets, &probs).is_ok());
        Self { alphabets, probs }
    }

    pub fn uniform(sizes: &[usize]) -> Self {
        let n = product_size(sizes);
        let p = Rational::new(BigInt::one(), BigInt::from(n));
        Self::from_sizes(sizes, vec![p; n]).expect("uniform distribution is valid")
    }

    pub fn point_mass(sizes: &[usize], at: usize) -> Result<Self> {
        let n = product_size(sizes);
        if at >= n {
            return Err(Error::IndexOutOfRange { index: at, len: n });
        }
        let mut probs = vec![Rational::zero(); n];
        probs[at] = Rational::one();
        Self::from_sizes(sizes, probs)
    }

    pub fn alphabets(&self) -> &[Alphabet] {
        &self.alphabets
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.alphabets.iter().map(|a| a.size).collect()
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.probs.iter().map(rational::to_f64).collect()
    }

    pub fn l1_distance(&self, other: &Distribution) -> Result<Rational> {
        if self.probs.len() != other.probs.len() {
            return Err(Error::DimensionMismatch(format!(
                "distributions of length {} and {}",
                self.probs.len(),
                other.probs.len()
            )));
        }
        Ok(self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum())
    }

    pub fn scaled(&self) -> ScaledJoint {
        ScaledJoint::from_rationals(self.sizes(), &self.probs)
    }
}

/// Sorted, duplicate-free positions into a distribution's alphabet list.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        let before = indices.len();
        indices.sort_unstable();
        indices.dedup();
        if indices.len() != before {
            return Err(Error::InvalidIndexSet(format!("duplicate positions in {indices:?}")));
        }
        Ok(Self(indices))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn range(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut v: Vec<usize> = self.0.iter().chain(&other.0).copied().collect();
        v.sort_unstable();
        v.dedup();
        IndexSet(v)
    }

    pub fn intersection(&self, other: &IndexSet) -> IndexSet {
        IndexSet(self.0.iter().copied().filter(|&i| other.contains(i)).collect())
    }

    pub fn is_disjoint(&self, other: &IndexSet) -> bool {
        self.intersection(other).is_empty()
    }

    pub fn check_range(&self, len: usize) -> Result<()> {
        match self.0.last() {
            Some(&max) if max >= len => Err(Error::IndexOutOfRange { index: max, len }),
            _ => Ok(()),
        }
    }

    /// Product of the selected sizes; 1 for the empty set.
    pub fn product_size(&self, sizes: &[usize]) -> usize {
        self.0.iter().map(|&i| sizes[i]).product()
    }
}

impl<'de> Deserialize<'de> for IndexSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        IndexSet::new(v).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// For every flat index of the joint, the flat index of its projection onto `keep`.
pub(crate) fn projection_map(sizes: &[usize], keep: &IndexSet) -> Vec<usize> {
    let n = product_size(sizes);
    let kept_sizes: Vec<usize> = keep.indices().iter().map(|&i| sizes[i]).collect();
    let kept_strides = strides(&kept_sizes);
    // stride contributed by each joint axis to the projected index
    let mut axis_stride = vec![0usize; sizes.len()];
    for (k, &axis) in keep.indices().iter().enumerate() {
        axis_stride[axis] = kept_strides[k];
    }
    let mut out = Vec::with_capacity(n);
    let mut digits = vec![0usize; sizes.len()];
    let mut current = 0usize;
    for _ in 0..n {
        out.push(current);
        for axis in (0..sizes.len()).rev() {
            digits[axis] += 1;
            current += axis_stride[axis];
            if digits[axis] < sizes[axis] {
                break;
            }
            current -= axis_stride[axis] * digits[axis];
            digits[axis] = 0;
        }
    }
    out
}

/// Exact marginal onto the coordinates in `keep`, in their original order.
pub fn marginalize(d: &Distribution, keep: &IndexSet) -> Result<Distribution> {
    keep.check_range(d.alphabets.len())?;
    let sizes = d.sizes();
    let map = projection_map(&sizes, keep);
    let alphabets: Vec<Alphabet> = keep.indices().iter().map(|&i| d.alphabets[i].clone()).collect();
    let mut probs = vec![Rational::zero(); keep.product_size(&sizes)];
    for (p, &j) in d.probs.iter().zip(&map) {
        if !p.is_zero() {
            probs[j] += p;
        }
    }
    Ok(Distribution::new_unchecked(alphabets, probs))
}

/// A joint distribution with integer numerators over one common denominator.
///
/// Marginal sums are integer additions, so marginals stay exact and each
/// marginal entry is converted to floating point exactly once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaledJoint {
    pub(crate) sizes: Vec<usize>,
    pub(crate) nums: Vec<BigInt>,
    pub(crate) den: BigInt,
}

impl ScaledJoint {
    pub fn from_rationals(sizes: Vec<usize>, probs: &[Rational]) -> Self {
        let den = probs.iter().fold(BigInt::one(), |acc, p| acc.lcm(p.denom()));
        let nums = probs.iter().map(|p| p.numer() * (&den / p.denom())).collect();
        Self { sizes, nums, den }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn to_distribution(&self) -> Distribution {
        let probs = self
            .nums
            .iter()
            .map(|n| BigRational::new(n.clone(), self.den.clone()))
            .collect();
        let alphabets = self
            .sizes
            .iter()
            .enumerate()
            .map(|(i, &s)| Alphabet::new(format!("X{i}"), s))
            .collect();
        Distribution::new_unchecked(alphabets, probs)
    }

    /// Exact marginal numerators over `keep` (same denominator).
    pub fn marginal_nums(&self, keep: &IndexSet) -> Vec<BigInt> {
        let map = projection_map(&self.sizes, keep);
        let mut out = vec![BigInt::zero(); keep.product_size(&self.sizes)];
        for (n, &j) in self.nums.iter().zip(&map) {
            if !n.is_zero() {
                out[j] += n;
            }
        }
        out
    }

    /// Marginal probabilities as doubles, one conversion per entry.
    pub fn marginal_f64(&self, keep: &IndexSet) -> Vec<f64> {
        let den = self.den.to_f64().unwrap_or(f64::INFINITY);
        let exact_den = den.is_finite();
        self.marginal_nums(keep)
            .into_iter()
            .map(|n| {
                if n.is_zero() {
                    0.0
                } else if exact_den {
                    match n.to_f64() {
                        Some(v) if v.is_finite() => v / den,
                        _ => rational::to_f64(&BigRational::new(n, self.den.clone())),
                    }
                } else {
                    rational::to_f64(&BigRational::new(n, self.den.clone()))
                }
            })
            .collect()
    }
}

/// Finite-state channel `c(b_1..b_n, s | a_1..a_m, s')`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelSpec {
    input_alphabets: Vec<Alphabet>,
    output_alphabets: Vec<Alphabet>,
    state_alphabet: Alphabet,
    kernel: Vec<Rational>,
    initial_state: usize,
}

/// Axis sizes of the flattened kernel: outputs, next state, inputs, previous state.
fn kernel_axes(inputs: &[usize], outputs: &[usize], states: usize) -> Vec<usize> {
    let mut axes = outputs.to_vec();
    axes.push(states);
    axes.extend_from_slice(inputs);
    axes.push(states);
    axes
}

impl ChannelSpec {
    /// `kernel` is in flattened order (see [`flatten_channel`]).
    pub fn new(
        input_sizes: &[usize],
        output_sizes: &[usize],
        states: usize,
        initial_state: usize,
        kernel: Vec<Rational>,
    ) -> Result<Self> {
        let named = |prefix: &str, sizes: &[usize]| -> Vec<Alphabet> {
            sizes
                .iter()
                .enumerate()
                .map(|(i, &s)| Alphabet::new(format!("{prefix}{}", i + 1), s))
                .collect()
        };
        let c = Self {
            input_alphabets: named("A", input_sizes),
            output_alphabets: named("B", output_sizes),
            state_alphabet: Alphabet::new("C", states),
            kernel,
            initial_state,
        };
        c.validate()?;
        Ok(c)
    }

    /// Stateless channel from a function `(outputs, inputs) -> probability`.
    pub fn memoryless(
        input_sizes: &[usize],
        output_sizes: &[usize],
        mut law: impl FnMut(&[usize], &[usize]) -> Rational,
    ) -> Result<Self> {
        let n_out = product_size(output_sizes);
        let n_in = product_size(input_sizes);
        let mut kernel = Vec::with_capacity(n_out * n_in);
        for o in 0..n_out {
            let od = decode(o, output_sizes);
            for i in 0..n_in {
                kernel.push(law(&od, &decode(i, input_sizes)));
            }
        }
        Self::new(input_sizes, output_sizes, 1, 0, kernel)
    }

    pub fn bsc(p: Rational) -> Result<Self> {
        let q = Rational::one() - &p;
        Self::memoryless(&[2], &[2], |y, x| if y[0] == x[0] { q.clone() } else { p.clone() })
    }

    /// Binary erasure channel; output 2 is the erasure.
    pub fn bec(e: Rational) -> Result<Self> {
        let keep = Rational::one() - &e;
        Self::memoryless(&[2], &[3], |y, x| match y[0] {
            2 => e.clone(),
            v if v == x[0] => keep.clone(),
            _ => Rational::zero(),
        })
    }

    /// Output uniform and independent of the input.
    pub fn useless(input_sizes: &[usize], output_sizes: &[usize]) -> Result<Self> {
        let p = Rational::new(BigInt::one(), BigInt::from(product_size(output_sizes)));
        Self::memoryless(input_sizes, output_sizes, |_, _| p.clone())
    }

    /// Noiseless channel `y = x` on a single alphabet.
    pub fn identity(size: usize) -> Result<Self> {
        Self::memoryless(&[size], &[size], |y, x| {
            if y[0] == x[0] {
                Rational::one()
            } else {
                Rational::zero()
            }
        })
    }

    pub fn input_alphabets(&self) -> &[Alphabet] {
        &self.input_alphabets
    }

    pub fn output_alphabets(&self) -> &[Alphabet] {
        &self.output_alphabets
    }

    pub fn state_alphabet(&self) -> &Alphabet {
        &self.state_alphabet
    }

    pub fn input_sizes(&self) -> Vec<usize> {
        self.input_alphabets.iter().map(|a| a.size).collect()
    }

    pub fn output_sizes(&self) -> Vec<usize> {
        self.output_alphabets.iter().map(|a| a.size).collect()
    }

    pub fn n_states(&self) -> usize {
        self.state_alphabet.size
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    /// Network terminals: one per input and one per output alphabet.
    pub fn n_terminals(&self) -> usize {
        self.input_alphabets.len() + self.output_alphabets.len()
    }

    pub fn q_len(&self) -> usize {
        self.kernel.len()
    }

    pub fn axes(&self) -> Vec<usize> {
        kernel_axes(&self.input_sizes(), &self.output_sizes(), self.n_states())
    }

    /// Position of `c(out, next | inputs, prev)` in the flattened kernel.
    pub fn q_index(&self, outputs: &[usize], next: usize, inputs: &[usize], prev: usize) -> usize {
        let mut digits = outputs.to_vec();
        digits.push(next);
        digits.extend_from_slice(inputs);
        digits.push(prev);
        encode(&digits, &self.axes())
    }

    pub fn prob(&self, outputs: &[usize], next: usize, inputs: &[usize], prev: usize) -> &Rational {
        &self.kernel[self.q_index(outputs, next, inputs, prev)]
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidChannel(m));
        if self.input_alphabets.is_empty() || self.output_alphabets.is_empty() {
            return bad("channel needs at least one input and one output alphabet".into());
        }
        if self
            .input_alphabets
            .iter()
            .chain(&self.output_alphabets)
            .chain(std::iter::once(&self.state_alphabet))
            .any(|a| a.size == 0)
        {
            return bad("alphabet of size 0".into());
        }
        if self.initial_state >= self.n_states() {
            return bad(format!(
                "initial state {} outside {} states",
                self.initial_state,
                self.n_states()
            ));
        }
        let axes = self.axes();
        let expected = product_size(&axes);
        if self.kernel.len() != expected {
            return bad(format!("kernel has {} entries, expected {expected}", self.kernel.len()));
        }
        if let Some(i) = self.kernel.iter().position(|p| p.is_negative()) {
            return bad(format!("negative kernel entry at flat index {i}"));
        }
        let n_rows = product_size(&self.input_sizes()) * self.n_states();
        let n_cols = product_size(&self.output_sizes()) * self.n_states();
        for row in 0..n_rows {
            let sum: Rational = (0..n_cols).map(|col| &self.kernel[col * n_rows + row]).sum();
            if !sum.is_one() {
                let (inputs, prev) = {
                    let mut d = decode(row, &axes[axes.len() - 1 - self.input_alphabets.len()..]);
                    let prev = d.pop().unwrap_or(0);
                    (d, prev)
                };
                return bad(format!(
                    "row inputs={inputs:?} prev_state={prev} sums to {} ≠ 1",
                    format_rational(&sum)
                ));
            }
        }
        Ok(())
    }

    pub fn to_file(&self) -> ChannelFile {
        let axes = self.axes();
        let n_out = self.output_alphabets.len();
        let kernel = self
            .kernel
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(flat, p)| {
                let d = decode(flat, &axes);
                KernelEntry {
                    out: d[..n_out].to_vec(),
                    next: d[n_out],
                    inputs: d[n_out + 1..d.len() - 1].to_vec(),
                    prev: d[d.len() - 1],
                    p: p.clone(),
                }
            })
            .collect();
        ChannelFile {
            inputs: self.input_sizes(),
            outputs: self.output_sizes(),
            states: self.n_states(),
            initial_state: self.initial_state,
            kernel,
        }
    }

    pub fn from_file(file: &ChannelFile) -> Result<Self> {
        let axes = kernel_axes(&file.inputs, &file.outputs, file.states);
        if axes.contains(&0) {
            return Err(Error::InvalidChannel("alphabet of size 0".into()));
        }
        let mut kernel = vec![Rational::zero(); product_size(&axes)];
        let mut seen = vec![false; kernel.len()];
        for (k, e) in file.kernel.iter().enumerate() {
            if e.out.len() != file.outputs.len() || e.inputs.len() != file.inputs.len() {
                return Err(Error::InvalidChannel(format!(
                    "kernel entry {k} has the wrong number of coordinates"
                )));
            }
            let mut digits = e.out.clone();
            digits.push(e.next);
            digits.extend_from_slice(&e.inputs);
            digits.push(e.prev);
            if digits.iter().zip(&axes).any(|(d, s)| d >= s) {
                return Err(Error::InvalidChannel(format!(
                    "kernel entry {k} has a coordinate out of range"
                )));
            }
            let flat = encode(&digits, &axes);
            if seen[flat] {
                return Err(Error::InvalidChannel(format!(
                    "kernel entry {k} repeats an earlier entry"
                )));
            }
            seen[flat] = true;
            kernel[flat] = e.p.clone();
        }
        Self::new(&file.inputs, &file.outputs, file.states, file.initial_state, kernel)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ChannelFile = serde_json::from_str(text).map_err(|e| Error::parse_json(&e))?;
        Self::from_file(&file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("channel serializes")
    }
}

/// Kernel flattened as `(outputs..., next_state, inputs..., prev_state)`, row-major.
pub fn flatten_channel(c: &ChannelSpec) -> Vec<Rational> {
    c.kernel.clone()
}

/// On-disk channel format. Entries not listed are zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    pub states: usize,
    pub initial_state: usize,
    pub kernel: Vec<KernelEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelEntry {
    pub out: Vec<usize>,
    pub next: usize,
    #[serde(rename = "in")]
    pub inputs: Vec<usize>,
    pub prev: usize,
    #[serde(with = "crate::rational::serde_str")]
    pub p: Rational,
}
