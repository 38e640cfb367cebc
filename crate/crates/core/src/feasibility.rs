//! Building the feasible subset of a grid.
//!
//! Generic mode checks a box around every lattice point: an exact rational
//! witness proves feasibility up to `eta`, interval branch-and-prune proves
//! infeasibility, and anything left undecided at the depth limit is kept and
//! flagged. Structured mode needs no search: the factorization plan builds
//! every candidate joint exactly, so all of them are feasible with residual 0.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::flc::{validate_against_channel, FactorizationPlan, FlcSpec};
use crate::grid::GridNet;
use crate::interval::Interval;
use crate::polynomial::Polynomial;
use crate::prob::{flatten_channel, ChannelSpec, ScaledJoint};
use crate::rational::{int, Rational};
use crate::{Error, Result};

pub const DEFAULT_MAX_DEPTH: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    /// A point of box ∩ simplex whose residuals are all at most `eta` in absolute value.
    Feasible(Vec<Rational>),
    /// Every sub-box was excluded. Over box ∩ simplex some constraint has
    /// `|f| ≥ certificate`; `None` means box ∩ simplex is empty.
    Infeasible {
        certificate: Option<f64>,
    },
    Unknown,
}

impl Verdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible(_))
    }
}

/// Largest `|f(w)|` over the constraints, exactly.
pub fn max_residual(constraints: &[Polynomial], w: &[Rational]) -> Rational {
    constraints
        .iter()
        .map(|f| f.eval_p(w).abs())
        .max()
        .unwrap_or_else(Rational::zero)
}

/// Moves the midpoint of `[lo, hi]` onto the simplex without leaving the box.
fn simplex_point(lo: &[Rational], hi: &[Rational]) -> Option<Vec<Rational>> {
    let two = int(2);
    let mut c: Vec<Rational> = lo.iter().zip(hi).map(|(a, b)| (a + b) / &two).collect();
    let s: Rational = c.iter().sum();
    let one = Rational::one();
    if s < one {
        let room: Rational = c.iter().zip(hi).map(|(x, h)| h - x).sum();
        let need = &one - &s;
        if room < need {
            return None;
        }
        let t = need / room;
        for (x, h) in c.iter_mut().zip(hi) {
            *x += &t * (h - &*x);
        }
    } else if s > one {
        let room: Rational = c.iter().zip(lo).map(|(x, l)| x - l).sum();
        let need = &s - &one;
        if room < need {
            return None;
        }
        let t = need / room;
        for (x, l) in c.iter_mut().zip(lo) {
            *x -= &t * (&*x - l);
        }
    }
    Some(c)
}

/// Decides whether the box `[u - delta, u + delta] ∩ [0, 1]` meets the
/// simplex at a point where every constraint nearly vanishes.
///
/// The constraints must already be polynomials in `p` only.
pub fn check_box(
    constraints: &[Polynomial],
    u: &[Rational],
    delta: &Rational,
    eta: &Rational,
    max_depth: usize,
) -> Result<Verdict> {
    if let Some(f) = constraints.iter().find(|f| !f.is_p_only()) {
        return Err(Error::Precondition(format!("constraint {f} still mentions q")));
    }
    if let Some(i) = constraints.iter().filter_map(Polynomial::max_p_index).max() {
        if i >= u.len() {
            return Err(Error::IndexOutOfRange { index: i, len: u.len() });
        }
    }
    if u.iter().sum::<Rational>() == Rational::one() && max_residual(constraints, u) <= *eta {
        return Ok(Verdict::Feasible(u.to_vec()));
    }
    let zero = Rational::zero();
    let one = Rational::one();
    let lo: Vec<Rational> = u.iter().map(|x| (x - delta).max(zero.clone())).collect();
    let hi: Vec<Rational> = u.iter().map(|x| (x + delta).min(one.clone())).collect();

    let mut certificate: Option<f64> = None;
    let mut undecided = false;
    let mut stack = vec![(lo, hi, 0usize)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let sum_lo: Rational = lo.iter().sum();
        let sum_hi: Rational = hi.iter().sum();
        if sum_lo > one || sum_hi < one {
            continue;
        }
        let bx: Vec<Interval> = lo.iter().zip(&hi).map(|(a, b)| Interval::from_bounds(a, b)).collect();
        let mut excluded = None;
        for f in constraints {
            let range = f.interval_eval(&bx)?;
            if !range.contains_zero() {
                excluded = Some(range.gap_to_zero());
                break;
            }
        }
        if let Some(gap) = excluded {
            certificate = Some(certificate.map_or(gap, |c| c.min(gap)));
            continue;
        }
        if let Some(w) = simplex_point(&lo, &hi) {
            if max_residual(constraints, &w) <= *eta {
                return Ok(Verdict::Feasible(w));
            }
        }
        if depth >= max_depth {
            undecided = true;
            continue;
        }
        let widest = (0..lo.len())
            .max_by(|&a, &b| (&hi[a] - &lo[a]).cmp(&(&hi[b] - &lo[b])).then(b.cmp(&a)))
            .expect("nonempty box");
        let mid = (&lo[widest] + &hi[widest]) / int(2);
        let mut left_hi = hi.clone();
        left_hi[widest] = mid.clone();
        let mut right_lo = lo.clone();
        right_lo[widest] = mid;
        stack.push((right_lo, hi, depth + 1));
        stack.push((lo, left_hi, depth + 1));
    }
    Ok(if undecided {
        Verdict::Unknown
    } else {
        Verdict::Infeasible { certificate }
    })
}

/// Box search settings for generic mode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxParams {
    pub half_width: Rational,
    pub eta: Rational,
    pub max_depth: usize,
}

impl BoxParams {
    /// Half-width `delta`, `eta = delta²`, depth 12.
    pub fn defaults(delta: Rational) -> Self {
        let eta = &delta * &delta;
        Self {
            half_width: delta,
            eta,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

/// Joints generated by a factorization plan from lattice points of its free blocks.
///
/// Every free block contributes one simplex per assignment of its
/// conditioning coordinates; all of them share the denominator `m`. A grid
/// index is a mixed-radix number over those simplices, first one most
/// significant.
#[derive(Clone, Debug)]
pub struct StructuredGrid {
    sizes: Vec<usize>,
    m: usize,
    fixed_nums: Vec<BigInt>,
    fixed_den: BigInt,
    // per joint entry: (factor, target assignment) for each free factor
    free_coords: Vec<Vec<(usize, usize)>>,
    factor_block: Vec<usize>,
    nets: Vec<GridNet>,
    radix: Vec<usize>,
    free_targets: Vec<usize>,
    len: usize,
}

impl StructuredGrid {
    pub fn new(plan: &FactorizationPlan, sizes: &[usize], q: &[Rational], m: usize, cap: u128) -> Result<Self> {
        plan.validate(sizes, Some(q.len()))?;
        plan.check_channel(sizes, q)?;
        let (fixed, coords) = plan.factor_layout(sizes, q);
        let mut nets = Vec::new();
        let mut free_targets = Vec::new();
        let mut factor_base = Vec::new();
        let mut factor_block = Vec::new();
        let mut radix = Vec::new();
        let mut total: u128 = 1;
        for (k, (_, blk)) in plan.free_blocks().enumerate() {
            let t = blk.target.product_size(sizes);
            let g = blk.given.product_size(sizes);
            let net = GridNet::with_denominator(&[t], m, cap)?;
            factor_base.push(factor_block.len());
            for _ in 0..g {
                factor_block.push(k);
                radix.push(net.len());
                total = total.saturating_mul(net.len() as u128);
            }
            free_targets.push(t);
            nets.push(net);
        }
        if total > cap {
            return Err(Error::ResourceCap {
                requested: total,
                cap,
                hint: format!("structured grid with m = {m}; use a larger epsilon or smaller --grid-m"),
            });
        }
        let scaled = ScaledJoint::from_rationals(sizes.to_vec(), &fixed);
        let free_coords = coords
            .into_iter()
            .map(|cs| cs.into_iter().map(|(k, g, t)| (factor_base[k] + g, t)).collect())
            .collect();
        Ok(Self {
            sizes: sizes.to_vec(),
            m,
            fixed_nums: scaled.nums,
            fixed_den: scaled.den,
            free_coords,
            factor_block,
            nets,
            radix,
            free_targets,
            len: total as usize,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn denominator(&self) -> usize {
        self.m
    }

    /// L1 radius of the joint net: `Σ 2|T|/m` over the free blocks.
    pub fn delta(&self) -> Rational {
        let s: usize = self.free_targets.iter().map(|t| 2 * t).sum();
        Rational::new(s.into(), self.m.into())
    }

    /// Sum of `2|T|` over the free blocks, so that `delta = spread / m`.
    pub fn spread(&self) -> usize {
        self.free_targets.iter().map(|t| 2 * t).sum()
    }

    /// Lattice counts of every free factor for grid index `index`.
    pub fn factor_counts(&self, mut index: usize) -> Vec<Vec<usize>> {
        let mut digits = vec![0; self.radix.len()];
        for f in (0..self.radix.len()).rev() {
            digits[f] = index % self.radix[f];
            index /= self.radix[f];
        }
        digits
            .iter()
            .enumerate()
            .map(|(f, &d)| self.nets[self.factor_block[f]].counts(d))
            .collect()
    }

    pub fn joint(&self, index: usize) -> ScaledJoint {
        let counts = self.factor_counts(index);
        let nums: Vec<BigInt> = self
            .fixed_nums
            .iter()
            .zip(&self.free_coords)
            .map(|(base, coords)| {
                if base.is_zero() {
                    return BigInt::zero();
                }
                let mut v = base.clone();
                for &(f, t) in coords {
                    let c = counts[f][t];
                    if c == 0 {
                        return BigInt::zero();
                    }
                    v *= c;
                }
                v
            })
            .collect();
        let free_per_entry = self.free_coords.first().map_or(0, Vec::len) as u32;
        let den = &self.fixed_den * BigInt::from(self.m).pow(free_per_entry);
        let g = nums_gcd(&nums, &den);
        ScaledJoint {
            sizes: self.sizes.clone(),
            nums: nums.into_iter().map(|n| n / &g).collect(),
            den: den / g,
        }
    }

    pub fn probs(&self, index: usize) -> Vec<Rational> {
        self.joint(index).to_distribution().probs().to_vec()
    }
}

fn nums_gcd(nums: &[BigInt], den: &BigInt) -> BigInt {
    let g = nums.iter().fold(den.clone(), |acc, n| acc.gcd(n));
    if g.is_zero() {
        BigInt::one()
    } else {
        g
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Structured,
    Generic,
}

#[derive(Clone, Debug)]
enum Source {
    Generic { net: GridNet, params: BoxParams },
    Structured(StructuredGrid),
}

/// Grid members kept for the max-min, in increasing grid-index order.
#[derive(Clone, Debug)]
pub struct FeasibleSet {
    source: Source,
    members: Vec<usize>,
    unknown: Vec<bool>,
    witnesses: Vec<Option<Vec<Rational>>>,
}

impl FeasibleSet {
    pub fn mode(&self) -> Mode {
        match self.source {
            Source::Generic { .. } => Mode::Generic,
            Source::Structured(_) => Mode::Structured,
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn grid_size(&self) -> usize {
        match &self.source {
            Source::Generic { net, .. } => net.len(),
            Source::Structured(g) => g.len(),
        }
    }

    /// L1 radius of the underlying net.
    pub fn grid_delta(&self) -> Rational {
        match &self.source {
            Source::Generic { net, .. } => net.delta(),
            Source::Structured(g) => g.delta(),
        }
    }

    pub fn denominator(&self) -> usize {
        match &self.source {
            Source::Generic { net, .. } => net.denominator(),
            Source::Structured(g) => g.denominator(),
        }
    }

    pub fn box_params(&self) -> Option<&BoxParams> {
        match &self.source {
            Source::Generic { params, .. } => Some(params),
            Source::Structured(_) => None,
        }
    }

    pub fn is_unknown(&self, k: usize) -> bool {
        self.unknown[k]
    }

    pub fn unknown_count(&self) -> usize {
        self.unknown.iter().filter(|&&u| u).count()
    }

    pub fn unknown_fraction(&self) -> f64 {
        if self.members.is_empty() {
            0.0
        } else {
            self.unknown_count() as f64 / self.members.len() as f64
        }
    }

    /// The joint where the member's MI terms are evaluated: the lattice
    /// point itself in generic mode, the constructed joint in structured mode.
    pub fn joint(&self, k: usize) -> ScaledJoint {
        match &self.source {
            Source::Generic { net, .. } => {
                let counts = net.counts(self.members[k]);
                ScaledJoint {
                    sizes: net.sizes().to_vec(),
                    nums: counts.into_iter().map(BigInt::from).collect(),
                    den: BigInt::from(net.denominator()),
                }
            }
            Source::Structured(g) => g.joint(self.members[k]),
        }
    }

    /// An exactly (structured) or `eta`-nearly (generic) feasible point.
    pub fn witness(&self, k: usize) -> Option<Vec<Rational>> {
        match &self.source {
            Source::Generic { .. } => self.witnesses[k].clone(),
            Source::Structured(g) => Some(g.probs(self.members[k])),
        }
    }

    /// Drops members whose verdict was Unknown.
    pub fn without_unknowns(mut self) -> Self {
        let keep: Vec<bool> = self.unknown.iter().map(|u| !u).collect();
        let mut it = keep.iter();
        self.members.retain(|_| *it.next().unwrap());
        if !self.witnesses.is_empty() {
            let mut it = keep.iter();
            self.witnesses.retain(|_| *it.next().unwrap());
        }
        self.unknown = vec![false; self.members.len()];
        self
    }
}

/// Checks a box around every point of `net`.
pub fn build_feasible_set_generic(
    flc: &FlcSpec,
    c: &ChannelSpec,
    net: GridNet,
    params: BoxParams,
) -> Result<FeasibleSet> {
    validate_against_channel(flc, c)?;
    if net.sizes() != flc.sizes() {
        return Err(Error::DimensionMismatch(format!(
            "grid over {:?} but the FLC alphabets are {:?}",
            net.sizes(),
            flc.sizes()
        )));
    }
    let q = flatten_channel(c);
    let constraints: Vec<Polynomial> = flc
        .constraints
        .iter()
        .map(|f| f.substitute_q(&q))
        .collect::<Result<_>>()?;
    let verdicts: Vec<Verdict> = (0..net.len())
        .into_par_iter()
        .map(|i| {
            check_box(
                &constraints,
                &net.probs(i),
                &params.half_width,
                &params.eta,
                params.max_depth,
            )
        })
        .collect::<Result<_>>()?;
    let mut members = Vec::new();
    let mut unknown = Vec::new();
    let mut witnesses = Vec::new();
    for (i, v) in verdicts.into_iter().enumerate() {
        match v {
            Verdict::Feasible(w) => {
                members.push(i);
                unknown.push(false);
                witnesses.push(Some(w));
            }
            Verdict::Unknown => {
                members.push(i);
                unknown.push(true);
                witnesses.push(None);
            }
            Verdict::Infeasible { .. } => {}
        }
    }
    Ok(FeasibleSet {
        source: Source::Generic { net, params },
        members,
        unknown,
        witnesses,
    })
}

/// Every joint the plan generates with free blocks on the `m`-lattice.
pub fn build_feasible_set_structured(flc: &FlcSpec, c: &ChannelSpec, m: usize, cap: u128) -> Result<FeasibleSet> {
    validate_against_channel(flc, c)?;
    let plan = flc
        .structured
        .as_ref()
        .ok_or_else(|| Error::Precondition("FLC has no factorization plan".into()))?;
    let grid = StructuredGrid::new(plan, &flc.sizes(), &flatten_channel(c), m, cap)?;
    let n = grid.len();
    Ok(FeasibleSet {
        source: Source::Structured(grid),
        members: (0..n).collect(),
        unknown: vec![false; n],
        witnesses: Vec::new(),
    })
}
