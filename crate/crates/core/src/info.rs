//! Entropy, conditional mutual information and the entropy continuity bound.
//!
//! All quantities are in nats. Marginals are formed exactly; the conversion
//! to `f64` happens once per marginal entry.

use std::collections::HashMap;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::prob::{Distribution, IndexSet, ScaledJoint};
use crate::{Error, Result};

/// Results below this are reported as exactly zero.
pub const MI_ZERO_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Nats(pub f64);

impl Nats {
    pub const ZERO: Nats = Nats(0.0);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn to_bits_of_information(self) -> f64 {
        self.0 / std::f64::consts::LN_2
    }

    pub fn abs(self) -> Nats {
        Nats(self.0.abs())
    }

    pub fn max(self, other: Nats) -> Nats {
        Nats(self.0.max(other.0))
    }

    pub fn min(self, other: Nats) -> Nats {
        Nats(self.0.min(other.0))
    }
}

impl fmt::Display for Nats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = f.precision() {
            write!(f, "{:.*} nats", p, self.0)
        } else {
            write!(f, "{} nats", self.0)
        }
    }
}

impl Add for Nats {
    type Output = Nats;
    fn add(self, rhs: Nats) -> Nats {
        Nats(self.0 + rhs.0)
    }
}

impl AddAssign for Nats {
    fn add_assign(&mut self, rhs: Nats) {
        self.0 += rhs.0;
    }
}

impl Sub for Nats {
    type Output = Nats;
    fn sub(self, rhs: Nats) -> Nats {
        Nats(self.0 - rhs.0)
    }
}

impl Neg for Nats {
    type Output = Nats;
    fn neg(self) -> Nats {
        Nats(-self.0)
    }
}

impl Mul<f64> for Nats {
    type Output = Nats;
    fn mul(self, rhs: f64) -> Nats {
        Nats(self.0 * rhs)
    }
}

impl Sum for Nats {
    fn sum<I: Iterator<Item = Nats>>(iter: I) -> Nats {
        Nats(iter.map(|n| n.0).sum())
    }
}

/// `-Σ p ln p` with `0 ln 0 = 0`.
pub fn entropy_of(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum::<f64>()
        .max(0.0)
}

pub fn entropy(d: &Distribution) -> Nats {
    Nats(entropy_of(&d.to_f64()))
}

fn check_disjoint(u: &IndexSet, y: &IndexSet, z: &IndexSet) -> Result<()> {
    for (a, b, names) in [(u, y, "U ∩ Y"), (u, z, "U ∩ Z"), (y, z, "Y ∩ Z")] {
        let common = a.intersection(b);
        if !common.is_empty() {
            return Err(Error::OverlappingIndexSets(format!("{names} = {common}")));
        }
    }
    Ok(())
}

/// Memoized marginal entropies of one joint distribution.
pub struct EntropyCache<'a> {
    joint: &'a ScaledJoint,
    cache: HashMap<IndexSet, f64>,
}

impl<'a> EntropyCache<'a> {
    pub fn new(joint: &'a ScaledJoint) -> Self {
        Self {
            joint,
            cache: HashMap::new(),
        }
    }

    pub fn entropy(&mut self, keep: &IndexSet) -> f64 {
        if keep.is_empty() {
            return 0.0;
        }
        if let Some(&h) = self.cache.get(keep) {
            return h;
        }
        let h = entropy_of(&self.joint.marginal_f64(keep));
        self.cache.insert(keep.clone(), h);
        h
    }

    /// `I(U;Y|Z) = H(U,Z) + H(Y,Z) - H(Z) - H(U,Y,Z)`, snapped to 0 below
    /// [`MI_ZERO_TOLERANCE`].
    pub fn cond_mutual_info(&mut self, u: &IndexSet, y: &IndexSet, z: &IndexSet) -> Result<Nats> {
        check_disjoint(u, y, z)?;
        let k = self.joint.sizes().len();
        for s in [u, y, z] {
            s.check_range(k)?;
        }
        let uz = u.union(z);
        let yz = y.union(z);
        let uyz = uz.union(y);
        let value = self.entropy(&uz) + self.entropy(&yz) - self.entropy(z) - self.entropy(&uyz);
        Ok(Nats(if value < MI_ZERO_TOLERANCE { 0.0 } else { value }))
    }
}

pub fn cond_mutual_info(d: &Distribution, u: &IndexSet, y: &IndexSet, z: &IndexSet) -> Result<Nats> {
    let joint = d.scaled();
    EntropyCache::new(&joint).cond_mutual_info(u, y, z)
}

/// `l1 · ln(|G| / l1)`: bound on `|H(p1) - H(p2)|` when `||p1 - p2||_1 = l1 ≤ 1/2`.
pub fn entropy_continuity_bound(l1: f64, alphabet_size: usize) -> Result<Nats> {
    if !(l1 > 0.0 && l1 <= 0.5) {
        return Err(Error::L1OutOfRange(l1));
    }
    match alphabet_size {
        0 => Err(Error::Precondition("alphabet size must be positive".into())),
        // the entropy of a one-point distribution is identically zero
        1 => Ok(Nats::ZERO),
        g => Ok(Nats(l1 * (g as f64 / l1).ln())),
    }
}

/// Product-alphabet sizes of the four entropies in the identity for `I(U;Y|Z)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiTermShape {
    pub uz: usize,
    pub yz: usize,
    pub z: usize,
    pub uyz: usize,
}

impl MiTermShape {
    pub fn of(sizes: &[usize], u: &IndexSet, y: &IndexSet, z: &IndexSet) -> Self {
        Self {
            uz: u.union(z).product_size(sizes),
            yz: y.union(z).product_size(sizes),
            z: z.product_size(sizes),
            uyz: u.union(y).union(z).product_size(sizes),
        }
    }

    pub fn sizes(&self) -> [usize; 4] {
        [self.uz, self.yz, self.z, self.uyz]
    }
}

/// Sum of the four entropy continuity bounds for one MI term. Marginalization
/// does not increase L1 distance, so every marginal pair is within `l1`.
pub fn mi_term_error_budget(l1: f64, shape: MiTermShape) -> Result<Nats> {
    shape.sizes().iter().map(|&g| entropy_continuity_bound(l1, g)).sum()
}

/// Bound on the floating-point error of one entropy over `g` symbols.
pub(crate) fn entropy_rounding_bound(g: usize) -> f64 {
    if g <= 1 {
        return 0.0;
    }
    let g = g as f64;
    8.0 * g * f64::EPSILON * (1.0 + g.ln())
}
