//! Two-user rate regions: per grid member, the polygon cut out of the
//! nonnegative quadrant by the representation's half-planes.

use std::f64::consts::PI;

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::feasibility::FeasibleSet;
use crate::flc::{validate_against_channel, FlcSpec, Relation};
use crate::info::EntropyCache;
use crate::prob::{ChannelSpec, ScaledJoint};
use crate::rational::{self, Rational};
use crate::{Error, Result};

pub const DEFAULT_FAN: usize = 64;
/// Side of the clipping box standing in for the unbounded quadrant.
pub const CLIP_BOX: f64 = 1e6;
const GEOM_TOL: f64 = 1e-12;

/// `a·R ≤ b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HalfPlane {
    pub a: [f64; 2],
    pub b: f64,
}

/// Sutherland–Hodgman clip of a convex polygon by one half-plane.
pub fn clip(poly: &[[f64; 2]], h: &HalfPlane) -> Vec<[f64; 2]> {
    let side = |p: &[f64; 2]| h.a[0] * p[0] + h.a[1] * p[1] - h.b;
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let (sp, sq) = (side(&p), side(&q));
        if sp <= GEOM_TOL {
            out.push(p);
        }
        if (sp < -GEOM_TOL && sq > GEOM_TOL) || (sp > GEOM_TOL && sq < -GEOM_TOL) {
            // interpolate from the endpoint nearer the line to limit cancellation
            let (a, b, sa, sb) = if sp.abs() <= sq.abs() {
                (p, q, sp, sq)
            } else {
                (q, p, sq, sp)
            };
            let t = sa / (sa - sb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Drops repeated and collinear vertices.
fn simplify(poly: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(poly.len());
    for p in poly {
        if pts
            .last()
            .is_none_or(|q| (p[0] - q[0]).abs() > GEOM_TOL || (p[1] - q[1]).abs() > GEOM_TOL)
        {
            pts.push(p);
        }
    }
    while pts.len() > 1 {
        let (a, b) = (pts[0], pts[pts.len() - 1]);
        if (a[0] - b[0]).abs() <= GEOM_TOL && (a[1] - b[1]).abs() <= GEOM_TOL {
            pts.pop();
        } else {
            break;
        }
    }
    let mut changed = true;
    while changed && pts.len() > 2 {
        changed = false;
        let n = pts.len();
        for i in 0..n {
            let (prev, cur, next) = (pts[(i + n - 1) % n], pts[i], pts[(i + 1) % n]);
            let scale = 1.0 + cur[0].abs().max(cur[1].abs());
            if cross(prev, cur, next).abs() <= GEOM_TOL * scale * scale {
                pts.remove(i);
                changed = true;
                break;
            }
        }
    }
    pts
}

/// `{R ≥ 0} ∩ ⋂ h`, clipped to the box `[0, CLIP_BOX]²`, counterclockwise.
pub fn intersect_half_planes(planes: &[HalfPlane]) -> Vec<[f64; 2]> {
    let mut poly = vec![[0.0, 0.0], [CLIP_BOX, 0.0], [CLIP_BOX, CLIP_BOX], [0.0, CLIP_BOX]];
    for h in planes {
        poly = clip(&poly, h);
        if poly.is_empty() {
            break;
        }
    }
    simplify(poly)
}

/// `max over vertices of d·v`.
pub fn support(poly: &[[f64; 2]], d: [f64; 2]) -> f64 {
    poly.iter()
        .map(|v| d[0] * v[0] + d[1] * v[1])
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn is_convex_ccw(poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    if n < 3 {
        return true;
    }
    (0..n).all(|i| cross(poly[i], poly[(i + 1) % n], poly[(i + 2) % n]) >= -1e-9)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionMember {
    pub grid_index: usize,
    pub polygon: Vec<[f64; 2]>,
    pub unbounded: bool,
    pub unknown: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupportValue {
    pub theta: f64,
    pub direction: [f64; 2],
    pub value: f64,
    pub grid_index: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionReport {
    /// The two rate variables `(i, j)`, in the order of the polygon axes.
    pub rates: [(usize, usize); 2],
    pub members: Vec<RegionMember>,
    /// Members whose polygon was empty.
    pub empty_members: usize,
    pub support: Vec<SupportValue>,
    /// Largest `R1 + R2` over the bounded polygons.
    pub sum_rate: f64,
    pub unknown_fraction: f64,
}

struct Row {
    rate: [Rational; 2],
    terms: Vec<(f64, crate::flc::MiTerm)>,
    signs: &'static [f64],
}

fn member_planes(rows: &[Row], joint: &ScaledJoint) -> Result<Option<Vec<HalfPlane>>> {
    let mut cache = EntropyCache::new(joint);
    let mut planes = Vec::new();
    for row in rows {
        let mut a_val = 0.0;
        for (w, t) in &row.terms {
            a_val += w * cache.cond_mutual_info(&t.u, &t.y, &t.z)?.0;
        }
        for &s in row.signs {
            let a = [s * rational::to_f64(&row.rate[0]), s * rational::to_f64(&row.rate[1])];
            let b = -s * a_val;
            if a == [0.0, 0.0] {
                if b < -crate::engine::EVAL_TOLERANCE {
                    return Ok(None);
                }
                continue;
            }
            planes.push(HalfPlane { a, b });
        }
    }
    Ok(Some(planes))
}

/// Per-member polygons and a support-function fan over `fan` directions.
pub fn region_2user(flc: &FlcSpec, c: &ChannelSpec, set: &FeasibleSet, fan: usize) -> Result<RegionReport> {
    validate_against_channel(flc, c)?;
    let vars = flc.rate_variables();
    if vars.len() != 2 {
        return Err(Error::NotTwoRate(vars.len()));
    }
    let rows: Vec<Row> = flc
        .representation
        .iter()
        .map(|ineq| {
            let mut rate = [Rational::zero(), Rational::zero()];
            for t in &ineq.rate_terms {
                let k = usize::from((t.i, t.j) != vars[0]);
                rate[k] += &t.beta;
            }
            Row {
                rate,
                terms: ineq
                    .mi_terms
                    .iter()
                    .map(|t| (rational::to_f64(&t.alpha), t.clone()))
                    .collect(),
                signs: match ineq.relation {
                    Relation::Le | Relation::Lt => &[1.0],
                    Relation::Ge | Relation::Gt => &[-1.0],
                    Relation::Eq => &[1.0, -1.0],
                },
            }
        })
        .collect();

    let polygons: Vec<Option<Vec<[f64; 2]>>> = (0..set.len())
        .into_par_iter()
        .map(|k| {
            Ok(member_planes(&rows, &set.joint(k))?
                .map(|planes| intersect_half_planes(&planes))
                .filter(|p| !p.is_empty()))
        })
        .collect::<Result<_>>()?;

    let mut members = Vec::new();
    let mut empty_members = 0;
    for (k, poly) in polygons.into_iter().enumerate() {
        let Some(polygon) = poly else {
            empty_members += 1;
            continue;
        };
        let unbounded = polygon.iter().any(|v| v[0] >= CLIP_BOX / 2.0 || v[1] >= CLIP_BOX / 2.0);
        members.push(RegionMember {
            grid_index: set.members()[k],
            polygon,
            unbounded,
            unknown: set.is_unknown(k),
        });
    }

    let fan_values: Vec<SupportValue> = (0..fan)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / fan as f64;
            let direction = [theta.cos(), theta.sin()];
            let mut best = (f64::NEG_INFINITY, None);
            for m in members.iter().filter(|m| !m.unbounded) {
                let v = support(&m.polygon, direction);
                if v > best.0 {
                    best = (v, Some(m.grid_index));
                }
            }
            SupportValue {
                theta,
                direction,
                value: best.0,
                grid_index: best.1,
            }
        })
        .collect();
    let sum_rate = members
        .iter()
        .filter(|m| !m.unbounded)
        .map(|m| support(&m.polygon, [1.0, 1.0]))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(RegionReport {
        rates: [vars[0], vars[1]],
        members,
        empty_members,
        support: fan_values,
        sum_rate: if sum_rate.is_finite() { sum_rate } else { 0.0 },
        unknown_fraction: set.unknown_fraction(),
    })
}
