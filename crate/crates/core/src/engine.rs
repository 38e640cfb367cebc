//! The grid max-min `gamma`, epsilon-approximation of point-to-point
//! capacity and the gap decision built on it.

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::feasibility::{
    build_feasible_set_generic, build_feasible_set_structured, BoxParams, FeasibleSet, Mode, DEFAULT_MAX_DEPTH,
};
use crate::flc::{validate_against_channel, FlcSpec, MiTerm, Relation};
use crate::grid::{GridNet, DEFAULT_GRID_CAP};
use crate::info::{entropy_continuity_bound, entropy_rounding_bound, EntropyCache, MiTermShape};
use crate::prob::{ChannelSpec, ScaledJoint};
use crate::rational::{self, Rational};
use crate::{Error, Nats, Result};

/// Slack allowed when testing filters and bound orderings in floating point.
pub const EVAL_TOLERANCE: f64 = 1e-9;

/// `Σ w · I(U; Y | Z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MiCombination {
    pub terms: Vec<(Rational, MiTerm)>,
}

impl MiCombination {
    fn scaled(terms: &[MiTerm], factor: &Rational) -> Self {
        Self {
            terms: terms.iter().map(|t| (&t.alpha * factor, t.clone())).collect(),
        }
    }

    pub fn eval(&self, cache: &mut EntropyCache<'_>) -> Result<f64> {
        let mut total = 0.0;
        for (w, t) in &self.terms {
            total += rational::to_f64(w) * cache.cond_mutual_info(&t.u, &t.y, &t.z)?.0;
        }
        Ok(total)
    }

    /// `Σ |w| · Σ_entropies bound(size)`.
    fn weighted(&self, sizes: &[usize], per_entropy: impl Fn(usize) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|(w, t)| {
                let shape = MiTermShape::of(sizes, &t.u, &t.y, &t.z);
                rational::to_f64(&w.abs()) * shape.sizes().iter().map(|&g| per_entropy(g)).sum::<f64>()
            })
            .sum()
    }
}

/// A representation rewritten around its single rate variable `R`:
/// `R ≤ upper_k`, `R ≥ lower_k` and rate-free filters `filter_k ≤ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointToPoint {
    pub rate: (usize, usize),
    /// `(inequality index, bound)`.
    pub upper: Vec<(usize, MiCombination)>,
    pub lower: Vec<(usize, MiCombination)>,
    pub filters: Vec<(usize, MiCombination)>,
}

/// Normalizes each inequality to `b·R + A ≤ 0` and divides by `|b|`.
/// Strict and non-strict relations are treated alike (the region is closed).
pub fn normalize_point_to_point(flc: &FlcSpec) -> Result<PointToPoint> {
    let vars = flc.rate_variables();
    if vars.len() != 1 {
        return Err(Error::NotPointToPoint(format!(
            "expected exactly one rate variable, found {}",
            vars.len()
        )));
    }
    let mut out = PointToPoint {
        rate: vars[0],
        upper: Vec::new(),
        lower: Vec::new(),
        filters: Vec::new(),
    };
    for (r, ineq) in flc.representation.iter().enumerate() {
        let b: Rational = ineq.rate_terms.iter().map(|t| &t.beta).sum();
        let signs: &[i64] = match ineq.relation {
            Relation::Le | Relation::Lt => &[1],
            Relation::Ge | Relation::Gt => &[-1],
            Relation::Eq => &[1, -1],
        };
        for &s in signs {
            let b = &b * Rational::from_integer(s.into());
            let sign = Rational::from_integer(s.into());
            if b.is_zero() {
                out.filters.push((r, MiCombination::scaled(&ineq.mi_terms, &sign)));
            } else if b.is_positive() {
                // R ≤ -A / b
                let f = -(&sign / &b);
                out.upper.push((r, MiCombination::scaled(&ineq.mi_terms, &f)));
            } else {
                // R ≥ A / |b|
                let f = &sign / b.abs();
                out.lower.push((r, MiCombination::scaled(&ineq.mi_terms, &f)));
            }
        }
    }
    if out.upper.is_empty() {
        return Err(Error::NotPointToPoint(
            "no inequality bounds the rate from above".into(),
        ));
    }
    Ok(out)
}

/// Per-entropy discretization bound at L1 distance `l1`: the continuity
/// bound where it applies, never more than `ln g`.
fn entropy_gap(l1: f64, g: usize) -> f64 {
    if g <= 1 || l1 <= 0.0 {
        return 0.0;
    }
    let range = (g as f64).ln();
    if l1 <= 0.5 {
        entropy_continuity_bound(l1, g).map_or(range, |b| b.0.min(range))
    } else {
        range
    }
}

/// Worst case over the upper bounds of `Σ |w| · (four entropy bounds at l1)`.
pub fn grid_budget(ptp: &PointToPoint, sizes: &[usize], l1: f64) -> Nats {
    Nats(
        ptp.upper
            .iter()
            .map(|(_, c)| c.weighted(sizes, |g| entropy_gap(l1, g)))
            .fold(0.0, f64::max),
    )
}

/// Worst-case floating-point error of one evaluated upper bound.
pub fn numeric_budget(ptp: &PointToPoint, sizes: &[usize]) -> Nats {
    Nats(
        ptp.upper
            .iter()
            .map(|(_, c)| c.weighted(sizes, entropy_rounding_bound))
            .fold(0.0, f64::max),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaResult {
    pub gamma: Nats,
    /// Grid index of the maximizing member.
    pub argmax: Option<usize>,
    /// `(inequality index, upper bound value)` at the argmax; `gamma` is their minimum.
    pub values: Vec<(usize, Nats)>,
    pub unknown_fraction: f64,
    /// Members whose rate interval was empty (a filter or lower bound failed).
    pub excluded: usize,
    pub empty_feasible_set: bool,
}

/// Upper-bound values at one joint, or `None` if the member admits no rate.
fn member_values(ptp: &PointToPoint, joint: &ScaledJoint) -> Result<Option<Vec<f64>>> {
    let mut cache = EntropyCache::new(joint);
    for (_, f) in &ptp.filters {
        if f.eval(&mut cache)? > EVAL_TOLERANCE {
            return Ok(None);
        }
    }
    let mut floor: f64 = 0.0;
    for (_, l) in &ptp.lower {
        floor = floor.max(l.eval(&mut cache)?);
    }
    let values = ptp
        .upper
        .iter()
        .map(|(_, u)| u.eval(&mut cache))
        .collect::<Result<Vec<f64>>>()?;
    let top = values.iter().copied().fold(f64::INFINITY, f64::min);
    if top + EVAL_TOLERANCE < floor {
        return Ok(None);
    }
    Ok(Some(values))
}

/// `max over members of min over upper bounds`, ties to the smallest grid index.
pub fn gamma(flc: &FlcSpec, c: &ChannelSpec, set: &FeasibleSet) -> Result<GammaResult> {
    validate_against_channel(flc, c)?;
    let ptp = normalize_point_to_point(flc)?;
    let evaluated: Vec<Option<Vec<f64>>> = (0..set.len())
        .into_par_iter()
        .map(|k| member_values(&ptp, &set.joint(k)))
        .collect::<Result<_>>()?;
    let mut best: Option<(f64, usize)> = None;
    let mut excluded = 0;
    for (k, v) in evaluated.iter().enumerate() {
        let Some(values) = v else {
            excluded += 1;
            continue;
        };
        let m = values.iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
        if best.is_none_or(|(b, _)| m > b) {
            best = Some((m, k));
        }
    }
    let unknown_fraction = set.unknown_fraction();
    Ok(match best {
        None => GammaResult {
            gamma: Nats::ZERO,
            argmax: None,
            values: Vec::new(),
            unknown_fraction,
            excluded,
            empty_feasible_set: true,
        },
        Some((g, k)) => GammaResult {
            gamma: Nats(g),
            argmax: Some(set.members()[k]),
            values: ptp
                .upper
                .iter()
                .zip(evaluated[k].as_ref().expect("argmax was evaluated"))
                .map(|((r, _), &v)| (*r, Nats(v)))
                .collect(),
            unknown_fraction,
            excluded,
            empty_feasible_set: false,
        },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CapacityOptions {
    /// `None` picks structured mode whenever the FLC carries a plan.
    pub mode: Option<Mode>,
    pub strict_unknowns: bool,
    pub cap: u128,
    pub max_depth: usize,
}

impl Default for CapacityOptions {
    fn default() -> Self {
        Self {
            mode: None,
            strict_unknowns: false,
            cap: DEFAULT_GRID_CAP,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorBreakdown {
    pub grid: Nats,
    pub numeric: Nats,
    pub eta_slack: Nats,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityEstimate {
    pub beta: Nats,
    pub epsilon: Nats,
    pub mode: Mode,
    #[serde(with = "crate::rational::serde_str")]
    pub delta_used: Rational,
    pub denominator: usize,
    pub grid_size: usize,
    pub feasible_size: usize,
    pub error_breakdown: ErrorBreakdown,
    pub unknown_fraction: f64,
    pub empty_feasible_set: bool,
    pub argmax: Option<usize>,
    pub values: Vec<(usize, Nats)>,
    pub warnings: Vec<String>,
}

impl CapacityEstimate {
    pub fn interval(&self) -> (Nats, Nats) {
        (self.beta - self.epsilon, self.beta + self.epsilon)
    }
}

/// Largest `delta` in `(0, 1/2]` whose grid budget is at most `target`.
pub fn delta_for_budget(ptp: &PointToPoint, sizes: &[usize], target: f64) -> f64 {
    if grid_budget(ptp, sizes, 0.5).0 <= target {
        return 0.5;
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if grid_budget(ptp, sizes, mid).0 <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Grid search for `beta` with `|C - beta| ≤ epsilon`, valid when the FLC
/// describes the channel's capacity.
///
/// Half of `epsilon` goes to the discretization error, bounded through the
/// entropy continuity bound; the rest covers floating-point error and, in
/// generic mode, the `eta` relaxation.
pub fn approximate_capacity(
    flc: &FlcSpec,
    c: &ChannelSpec,
    epsilon: Nats,
    opts: &CapacityOptions,
) -> Result<CapacityEstimate> {
    if !(epsilon.0 > 0.0 && epsilon.0.is_finite()) {
        return Err(Error::Precondition(format!(
            "epsilon must be positive, got {}",
            epsilon.0
        )));
    }
    validate_against_channel(flc, c)?;
    let ptp = normalize_point_to_point(flc)?;
    let sizes = flc.sizes();
    let mode = match opts.mode {
        Some(m) => m,
        None if flc.structured.is_some() => Mode::Structured,
        None => Mode::Generic,
    };
    let mut warnings = Vec::new();
    let delta = delta_for_budget(&ptp, &sizes, epsilon.0 / 2.0);
    if delta <= 0.0 {
        return Err(Error::ResourceCap {
            requested: u128::MAX,
            cap: opts.cap,
            hint: "no positive grid resolution meets the budget; increase epsilon".into(),
        });
    }
    let spread = match mode {
        Mode::Structured => {
            let plan = flc
                .structured
                .as_ref()
                .ok_or_else(|| Error::Precondition("structured mode needs a factorization plan".into()))?;
            plan.free_blocks()
                .map(|(_, b)| 2 * b.target.product_size(&sizes))
                .sum::<usize>()
        }
        Mode::Generic => 2 * flc.joint_size(),
    };
    let m_real = (spread as f64 / delta).ceil();
    if m_real > 1e15 {
        return Err(Error::ResourceCap {
            requested: u128::MAX,
            cap: opts.cap,
            hint: format!("lattice denominator {m_real:e}; increase epsilon"),
        });
    }
    let m = (m_real as usize).max(1);
    let delta_used = Rational::new(spread.into(), m.into());
    let l1 = rational::to_f64(&delta_used);

    let set = match mode {
        Mode::Structured => build_feasible_set_structured(flc, c, m, opts.cap)?,
        Mode::Generic => {
            let net = GridNet::with_denominator(&sizes, m, opts.cap)?;
            let mut params = BoxParams::defaults(delta_used.clone());
            params.max_depth = opts.max_depth;
            build_feasible_set_generic(flc, c, net, params)?
        }
    };
    let grid_size = set.grid_size();
    let set = if opts.strict_unknowns {
        set.without_unknowns()
    } else {
        set
    };
    let g = gamma(flc, c, &set)?;

    let grid = grid_budget(&ptp, &sizes, l1);
    let numeric = numeric_budget(&ptp, &sizes);
    if numeric.0 > epsilon.0 / 4.0 {
        warnings.push(format!("floating-point budget {} exceeds epsilon/4", numeric.0));
    }
    let eta_slack = match mode {
        Mode::Structured => Nats::ZERO,
        Mode::Generic => {
            // a member's witness lies in its box, at L1 distance at most G·delta
            let reach = (flc.joint_size() as f64 * l1).min(2.0);
            grid_budget(&ptp, &sizes, reach)
        }
    };
    if eta_slack.0 > epsilon.0 / 4.0 {
        warnings.push(format!(
            "eta slack {} exceeds epsilon/4; the generic estimate is not certified to epsilon",
            eta_slack.0
        ));
    }
    if g.empty_feasible_set {
        warnings.push("empty feasible set; capacity reported as 0".into());
    }
    Ok(CapacityEstimate {
        beta: g.gamma,
        epsilon,
        mode,
        delta_used,
        denominator: m,
        grid_size,
        feasible_size: set.len(),
        error_breakdown: ErrorBreakdown {
            grid,
            numeric,
            eta_slack,
        },
        unknown_fraction: g.unknown_fraction,
        empty_feasible_set: g.empty_feasible_set,
        argmax: g.argmax,
        values: g.values,
        warnings,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GapVerdict {
    AtMostHalfLambda,
    AtLeastLambda,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapDecision {
    pub verdict: GapVerdict,
    pub lambda: Nats,
    pub threshold: Nats,
    pub estimate: CapacityEstimate,
}

/// Decides `C ≤ lambda/2` versus `C ≥ lambda`, assuming one of them holds.
pub fn gap_decide(flc: &FlcSpec, c: &ChannelSpec, lambda: Nats, opts: &CapacityOptions) -> Result<GapDecision> {
    if !(lambda.0 > 0.0 && lambda.0.is_finite()) {
        return Err(Error::Precondition(format!(
            "lambda must be positive, got {}",
            lambda.0
        )));
    }
    let epsilon = Nats(lambda.0 / 20.0);
    let estimate = approximate_capacity(flc, c, epsilon, opts)?;
    let threshold = Nats(lambda.0 / 2.0 + epsilon.0);
    let verdict = if estimate.beta <= threshold {
        GapVerdict::AtMostHalfLambda
    } else {
        GapVerdict::AtLeastLambda
    };
    Ok(GapDecision {
        verdict,
        lambda,
        threshold,
        estimate,
    })
}
