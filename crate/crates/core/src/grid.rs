//! Type lattices on the probability simplex: all vectors of `G` counts
//! summing to `m`, read as probabilities with denominator `m`.
//!
//! Points are never stored. A [`GridNet`] ranks and unranks compositions in
//! lexicographic order, so workers can address any point by its index.

use num_traits::{ToPrimitive, Zero};

use crate::prob::{Alphabet, Distribution};
use crate::rational::{int, Rational};
use crate::{Error, Result};

/// Default ceiling on the number of lattice points a single run may visit.
pub const DEFAULT_GRID_CAP: u128 = 10_000_000;

/// `C(n, k)`, or `None` on overflow.
pub fn binomial(n: u128, k: u128) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) after the multiply
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Number of compositions of `m` into `parts` nonnegative parts.
pub fn lattice_size(parts: usize, m: usize) -> Option<u128> {
    if parts == 0 {
        return Some(u128::from(m == 0));
    }
    binomial((m + parts - 1) as u128, (parts - 1) as u128)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridNet {
    sizes: Vec<usize>,
    parts: usize,
    m: usize,
    len: usize,
    // table[k][r] = number of compositions of r into k parts
    table: Vec<Vec<u128>>,
}

impl GridNet {
    /// The lattice with denominator `m` on the simplex over `sizes`.
    pub fn with_denominator(sizes: &[usize], m: usize, cap: u128) -> Result<Self> {
        let parts: usize = sizes.iter().product();
        if parts == 0 || m == 0 {
            return Err(Error::Precondition(
                "lattice needs a nonempty alphabet and m ≥ 1".into(),
            ));
        }
        let requested = lattice_size(parts, m).unwrap_or(u128::MAX);
        if requested > cap {
            return Err(Error::ResourceCap {
                requested,
                cap,
                hint: format!("lattice with G = {parts}, m = {m}; use a larger epsilon or coarser grid"),
            });
        }
        let mut table = vec![vec![0u128; m + 1]; parts + 1];
        table[0][0] = 1;
        for k in 1..=parts {
            for r in 0..=m {
                table[k][r] = lattice_size(k, r).expect("bounded by the full count");
            }
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            parts,
            m,
            len: requested as usize,
            table,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// `G`, the number of simplex coordinates.
    pub fn parts(&self) -> usize {
        self.parts
    }

    pub fn denominator(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// L1 radius guaranteed by the net: `2G/m`.
    pub fn delta(&self) -> Rational {
        Rational::new((2 * self.parts).into(), self.m.into())
    }

    /// Counts of point `index` in lexicographic order of the count vector.
    pub fn counts(&self, index: usize) -> Vec<usize> {
        assert!(index < self.len, "grid index {index} out of range");
        let mut rank = index as u128;
        let mut remaining = self.m;
        let mut out = Vec::with_capacity(self.parts);
        for pos in 0..self.parts - 1 {
            let tail = self.parts - pos - 1;
            let mut v = 0;
            loop {
                let block = self.table[tail][remaining - v];
                if rank < block {
                    break;
                }
                rank -= block;
                v += 1;
            }
            out.push(v);
            remaining -= v;
        }
        out.push(remaining);
        out
    }

    /// Inverse of [`GridNet::counts`]; `None` if `counts` is not on the lattice.
    pub fn rank(&self, counts: &[usize]) -> Option<usize> {
        if counts.len() != self.parts || counts.iter().sum::<usize>() != self.m {
            return None;
        }
        let mut rank: u128 = 0;
        let mut remaining = self.m;
        for (pos, &c) in counts[..self.parts - 1].iter().enumerate() {
            let tail = self.parts - pos - 1;
            for v in 0..c {
                rank += self.table[tail][remaining - v];
            }
            remaining -= c;
        }
        Some(rank as usize)
    }

    /// Rank of an exact distribution, if its entries all have denominator dividing `m`.
    pub fn rank_of(&self, probs: &[Rational]) -> Option<usize> {
        let m = int(self.m as i64);
        let counts: Option<Vec<usize>> = probs
            .iter()
            .map(|p| {
                let c = p * &m;
                c.is_integer().then(|| c.to_integer().to_usize()).flatten()
            })
            .collect();
        self.rank(&counts?)
    }

    pub fn probs(&self, index: usize) -> Vec<Rational> {
        let m = int(self.m as i64);
        self.counts(index).into_iter().map(|c| int(c as i64) / &m).collect()
    }

    pub fn distribution(&self, index: usize) -> Distribution {
        let alphabets = self
            .sizes
            .iter()
            .enumerate()
            .map(|(i, &s)| Alphabet::new(format!("X{i}"), s))
            .collect();
        Distribution::new(alphabets, self.probs(index)).expect("lattice points are distributions")
    }

    /// Iterates count vectors in index order without unranking each one.
    pub fn iter_counts(&self) -> CountsIter {
        let mut first = vec![0; self.parts];
        first[self.parts - 1] = self.m;
        CountsIter { next: Some(first) }
    }

    /// Materializes every point; only sensible for small nets.
    pub fn points(&self) -> Vec<Distribution> {
        (0..self.len).map(|i| self.distribution(i)).collect()
    }
}

pub struct CountsIter {
    next: Option<Vec<usize>>,
}

impl Iterator for CountsIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let g = current.len();
        let mut succ = current.clone();
        let mut tail: usize = succ[g - 1];
        let mut pos = g - 1;
        // rightmost position before the last whose suffix still has mass to borrow
        while pos > 0 {
            pos -= 1;
            if tail > 0 {
                succ[pos] += 1;
                for c in &mut succ[pos + 1..g - 1] {
                    *c = 0;
                }
                succ[g - 1] = tail - 1;
                self.next = Some(succ);
                return Some(current);
            }
            tail += succ[pos];
        }
        Some(current)
    }
}

/// δ-net with denominator `m = ceil(2G/δ)`.
pub fn build_delta_net(sizes: &[usize], delta: &Rational, cap: u128) -> Result<GridNet> {
    let g: usize = sizes.iter().product();
    if g < 2 {
        return Err(Error::Precondition("δ-net needs a product alphabet of size ≥ 2".into()));
    }
    if delta <= &Rational::zero() || delta > &int(1) {
        return Err(Error::Precondition(format!("delta {delta} outside (0, 1]")));
    }
    let m = (int(2 * g as i64) / delta).ceil().to_integer();
    let m = m.to_usize().ok_or_else(|| Error::ResourceCap {
        requested: u128::MAX,
        cap,
        hint: "lattice denominator overflows".into(),
    })?;
    GridNet::with_denominator(sizes, m, cap)
}

/// Closest lattice point in L1 to `s` (largest-remainder rounding).
pub fn nearest_counts(s: &[f64], m: usize) -> Vec<usize> {
    let scaled: Vec<f64> = s.iter().map(|&x| x * m as f64).collect();
    let mut counts: Vec<usize> = scaled.iter().map(|&x| x.floor().max(0.0) as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    if assigned <= m {
        for &i in order.iter().cycle().take(m - assigned) {
            counts[i] += 1;
        }
    } else {
        for &i in order.iter().rev().cycle().take(assigned - m) {
            counts[i] -= 1;
        }
    }
    counts
}
