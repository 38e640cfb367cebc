//! Factorization plans: the joint law written as a chain of conditional
//! blocks, so feasible joints can be built directly instead of searched for.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::polynomial::Polynomial;
use crate::prob::{decode, encode, product_size, IndexSet};
use crate::rational::Rational;
use crate::{Error, Result};

/// `(free block ordinal, conditioning index g, target index t)`.
pub(crate) type FreeCoord = (usize, usize, usize);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockKind {
    /// An arbitrary conditional law `p(target | given)`.
    Free,
    /// `p(target | given) = q[q_index[g·|T| + t]]`.
    Channel { q_index: Vec<usize> },
    /// `target = table[given]` with probability one.
    Deterministic { table: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub target: IndexSet,
    #[serde(default)]
    pub given: IndexSet,
    #[serde(flatten)]
    pub kind: BlockKind,
}

impl Block {
    pub fn free(target: &[usize], given: &[usize]) -> Self {
        Self::new(target, given, BlockKind::Free)
    }

    pub fn new(target: &[usize], given: &[usize], kind: BlockKind) -> Self {
        Self {
            target: IndexSet::new(target.to_vec()).expect("distinct block targets"),
            given: IndexSet::new(given.to_vec()).expect("distinct block givens"),
            kind,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorizationPlan {
    pub blocks: Vec<Block>,
}

/// Flat index of the sub-assignment over `sub`, read off digits laid out over `set`.
fn sub_index(digits: &[usize], set: &IndexSet, sub: &IndexSet, sizes: &[usize]) -> usize {
    let mut idx = 0;
    for &axis in sub.indices() {
        let pos = set.indices().binary_search(&axis).expect("sub ⊆ set");
        idx = idx * sizes[axis] + digits[pos];
    }
    idx
}

/// Marginal polynomials `p(S = a)` for every assignment `a` of `set`.
fn marginal_polys(sizes: &[usize], set: &IndexSet) -> Vec<Polynomial> {
    let n = product_size(sizes);
    let mut groups = vec![Vec::new(); set.product_size(sizes)];
    let all = IndexSet::range(sizes.len());
    for x in 0..n {
        let digits = decode(x, sizes);
        groups[sub_index(&digits, &all, set, sizes)].push(x);
    }
    groups.into_iter().map(Polynomial::p_sum).collect()
}

impl FactorizationPlan {
    /// Coordinates fixed by the blocks before `b`.
    pub fn earlier(&self, b: usize) -> IndexSet {
        self.blocks[..b]
            .iter()
            .fold(IndexSet::empty(), |acc, blk| acc.union(&blk.target))
    }

    pub fn max_q_index(&self) -> Option<usize> {
        self.blocks
            .iter()
            .filter_map(|b| match &b.kind {
                BlockKind::Channel { q_index } => q_index.iter().copied().max(),
                _ => None,
            })
            .max()
    }

    pub fn free_blocks(&self) -> impl Iterator<Item = (usize, &Block)> {
        self.blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| b.kind == BlockKind::Free)
    }

    pub fn validate(&self, sizes: &[usize], q_len: Option<usize>) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(format!("structured plan: {m}")));
        let k = sizes.len();
        let mut seen = IndexSet::empty();
        for (b, blk) in self.blocks.iter().enumerate() {
            if blk.target.is_empty() {
                return bad(format!("block {b} has no target coordinates"));
            }
            if blk.target.check_range(k).is_err() || blk.given.check_range(k).is_err() {
                return bad(format!("block {b} references a coordinate outside 0..{k}"));
            }
            if !blk.target.is_disjoint(&seen) {
                return bad(format!("block {b} retargets a coordinate of an earlier block"));
            }
            if blk.given.union(&seen) != seen {
                return bad(format!(
                    "block {b} is conditioned on {} before it is generated",
                    blk.given
                ));
            }
            let g = blk.given.product_size(sizes);
            let t = blk.target.product_size(sizes);
            match &blk.kind {
                BlockKind::Free => {}
                BlockKind::Channel { q_index } => {
                    if q_index.len() != g * t {
                        return bad(format!(
                            "block {b} maps {} channel entries, expected {}",
                            q_index.len(),
                            g * t
                        ));
                    }
                    if let (Some(len), Some(&j)) = (q_len, q_index.iter().max()) {
                        if j >= len {
                            return bad(format!("block {b} references q{j} but q has {len} entries"));
                        }
                    }
                }
                BlockKind::Deterministic { table } => {
                    if table.len() != g {
                        return bad(format!("block {b} table has {} rows, expected {g}", table.len()));
                    }
                    if let Some(&v) = table.iter().find(|&&v| v >= t) {
                        return bad(format!("block {b} table value {v} is outside 0..{t}"));
                    }
                }
            }
            seen = seen.union(&blk.target);
        }
        if seen.len() != k {
            return bad(format!("coordinates {seen} generated, expected all of 0..{k}"));
        }
        Ok(())
    }

    /// Every channel block must map onto an exact conditional law.
    pub fn check_channel(&self, sizes: &[usize], q: &[Rational]) -> Result<()> {
        for (b, blk) in self.blocks.iter().enumerate() {
            let BlockKind::Channel { q_index } = &blk.kind else {
                continue;
            };
            let t = blk.target.product_size(sizes);
            for (g, row) in q_index.chunks(t).enumerate() {
                let mut sum = Rational::zero();
                for &j in row {
                    let v = q.get(j).ok_or(Error::MissingQ { index: j, len: q.len() })?;
                    if v.is_negative() {
                        return Err(Error::InvalidChannel(format!("q{j} is negative")));
                    }
                    sum += v;
                }
                if !sum.is_one() {
                    return Err(Error::DimensionMismatch(format!(
                        "plan block {b} row {g} sums to {sum} over the channel, not 1"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The polynomial equations characterizing exactly the joints this plan
    /// generates (the simplex condition itself is left implicit).
    pub fn constraint_polynomials(&self, sizes: &[usize]) -> Vec<Polynomial> {
        let mut out = Vec::new();
        for (b, blk) in self.blocks.iter().enumerate() {
            let prior = self.earlier(b);
            let full = prior.union(&blk.target);
            let t_size = blk.target.product_size(sizes);
            let needs_check = match blk.kind {
                BlockKind::Free => blk.given != prior,
                _ => true,
            };
            if !needs_check {
                continue;
            }
            let p_full = marginal_polys(sizes, &full);
            let p_prior = marginal_polys(sizes, &prior);
            let given_target = blk.given.union(&blk.target);
            let p_gt = marginal_polys(sizes, &given_target);
            let p_g = marginal_polys(sizes, &blk.given);
            let full_sizes: Vec<usize> = full.indices().iter().map(|&i| sizes[i]).collect();
            for a in 0..full.product_size(sizes) {
                let digits = decode(a, &full_sizes);
                let pi = sub_index(&digits, &full, &prior, sizes);
                let g = sub_index(&digits, &full, &blk.given, sizes);
                let t = sub_index(&digits, &full, &blk.target, sizes);
                let f = match &blk.kind {
                    BlockKind::Channel { q_index } => {
                        &p_full[a] - &(&p_prior[pi] * &Polynomial::q(q_index[g * t_size + t]))
                    }
                    BlockKind::Deterministic { table } => {
                        if table[g] == t {
                            continue;
                        }
                        p_full[a].clone()
                    }
                    BlockKind::Free => {
                        let gt = sub_index(&digits, &full, &given_target, sizes);
                        let lhs = if blk.given.is_empty() {
                            p_full[a].clone()
                        } else {
                            &p_full[a] * &p_g[g]
                        };
                        &lhs - &(&p_prior[pi] * &p_gt[gt])
                    }
                };
                out.push(f);
            }
        }
        out
    }

    /// The joint built from conditional tables for the free blocks (in plan
    /// order, each laid out as `[g·|T| + t]`) and the channel vector `q`.
    pub fn joint(&self, sizes: &[usize], q: &[Rational], free: &[Vec<Rational>]) -> Vec<Rational> {
        let n = product_size(sizes);
        let all = IndexSet::range(sizes.len());
        let mut out = Vec::with_capacity(n);
        for x in 0..n {
            let digits = decode(x, sizes);
            let mut v = Rational::one();
            let mut free_k = 0;
            for blk in &self.blocks {
                let g = sub_index(&digits, &all, &blk.given, sizes);
                let t = sub_index(&digits, &all, &blk.target, sizes);
                let t_size = blk.target.product_size(sizes);
                match &blk.kind {
                    BlockKind::Free => {
                        v *= &free[free_k][g * t_size + t];
                        free_k += 1;
                    }
                    BlockKind::Channel { q_index } => v *= &q[q_index[g * t_size + t]],
                    BlockKind::Deterministic { table } => {
                        if table[g] != t {
                            v = Rational::zero();
                        }
                    }
                }
                if v.is_zero() {
                    break;
                }
            }
            out.push(v);
        }
        out
    }

    /// For each joint index: the product of the non-free factors, and the
    /// `(free block ordinal, g, t)` coordinates of its free factors.
    pub(crate) fn factor_layout(&self, sizes: &[usize], q: &[Rational]) -> (Vec<Rational>, Vec<Vec<FreeCoord>>) {
        let n = product_size(sizes);
        let all = IndexSet::range(sizes.len());
        let mut fixed = Vec::with_capacity(n);
        let mut free_coords = Vec::with_capacity(n);
        for x in 0..n {
            let digits = decode(x, sizes);
            let mut v = Rational::one();
            let mut coords = Vec::new();
            let mut free_k = 0;
            for blk in &self.blocks {
                let g = sub_index(&digits, &all, &blk.given, sizes);
                let t = sub_index(&digits, &all, &blk.target, sizes);
                let t_size = blk.target.product_size(sizes);
                match &blk.kind {
                    BlockKind::Free => {
                        coords.push((free_k, g, t));
                        free_k += 1;
                    }
                    BlockKind::Channel { q_index } => v *= &q[q_index[g * t_size + t]],
                    BlockKind::Deterministic { table } => {
                        if table[g] != t {
                            v = Rational::zero();
                        }
                    }
                }
            }
            fixed.push(v);
            free_coords.push(coords);
        }
        (fixed, free_coords)
    }
}

/// `q_index` table of a channel block whose given coordinates are the
/// channel inputs and whose targets are the channel outputs, for a
/// stateless channel of the given shape.
pub(crate) fn stateless_q_table(input_sizes: &[usize], output_sizes: &[usize]) -> Vec<usize> {
    let mut axes = output_sizes.to_vec();
    axes.push(1);
    axes.extend_from_slice(input_sizes);
    axes.push(1);
    let g_total = product_size(input_sizes);
    let t_total = product_size(output_sizes);
    let mut table = Vec::with_capacity(g_total * t_total);
    for g in 0..g_total {
        let inputs = decode(g, input_sizes);
        for t in 0..t_total {
            let mut digits = decode(t, output_sizes);
            digits.push(0);
            digits.extend_from_slice(&inputs);
            digits.push(0);
            table.push(encode(&digits, &axes));
        }
    }
    table
}
