//! Classical characterizations shipped with the library.

use num_traits::One;

use super::plan::stateless_q_table;
use super::{Block, BlockKind, ChannelShape, FactorizationPlan, FlcSpec, Inequality, MiTerm, RateTerm, Relation};
use crate::prob::{Alphabet, IndexSet};
use crate::rational::{int, Rational};

fn set(ix: &[usize]) -> IndexSet {
    IndexSet::new(ix.to_vec()).expect("builtin index sets are distinct")
}

fn rate(i: usize, j: usize, beta: i64) -> RateTerm {
    RateTerm { i, j, beta: int(beta) }
}

/// `-I(U; Y | Z)`, the form every builtin bound takes after moving it left.
fn minus_mi(u: &[usize], y: &[usize], z: &[usize]) -> MiTerm {
    MiTerm {
        alpha: -Rational::one(),
        u: set(u),
        y: set(y),
        z: set(z),
    }
}

fn ineq(rate_terms: Vec<RateTerm>, mi_terms: Vec<MiTerm>, relation: Relation) -> Inequality {
    Inequality {
        rate_terms,
        mi_terms,
        relation,
    }
}

fn finish(
    alphabets: Vec<Alphabet>,
    n_users: usize,
    representation: Vec<Inequality>,
    channel: ChannelShape,
    plan: FactorizationPlan,
) -> FlcSpec {
    let sizes: Vec<usize> = alphabets.iter().map(|a| a.size).collect();
    let constraints = plan.constraint_polynomials(&sizes);
    FlcSpec {
        alphabets,
        n_users,
        representation,
        constraints,
        channel: Some(channel),
        structured: Some(plan),
    }
}

/// Point-to-point channel: `R_12 < I(X; Y)` with `p(y|x)` fixed to the channel.
pub fn builtin_dmc(in_size: usize, out_size: usize) -> FlcSpec {
    let alphabets = vec![Alphabet::new("X", in_size), Alphabet::new("Y", out_size)];
    let plan = FactorizationPlan {
        blocks: vec![
            Block::free(&[0], &[]),
            Block::new(
                &[1],
                &[0],
                BlockKind::Channel {
                    q_index: stateless_q_table(&[in_size], &[out_size]),
                },
            ),
        ],
    };
    let representation = vec![ineq(vec![rate(1, 2, 1)], vec![minus_mi(&[0], &[1], &[])], Relation::Lt)];
    let shape = ChannelShape {
        inputs: vec![in_size],
        outputs: vec![out_size],
        states: 1,
    };
    finish(alphabets, 2, representation, shape, plan)
}

/// Marton's inner bound for a broadcast channel `p(y1, y2 | x)`.
///
/// Coordinates are `U, X, Y1, Y2, Y1c`, where `Y1c` is a deterministic copy
/// of `Y1` so that `H(Y1 | Z) = I(Y1c; Y1 | Z)` stays a mutual information.
/// Terminal 1 is the transmitter, terminals 2 and 3 the receivers.
pub fn builtin_marton(x_size: usize, y1_size: usize, y2_size: usize, u_size: usize) -> FlcSpec {
    let alphabets = vec![
        Alphabet::new("U", u_size),
        Alphabet::new("X", x_size),
        Alphabet::new("Y1", y1_size),
        Alphabet::new("Y2", y2_size),
        Alphabet::new("Y1c", y1_size),
    ];
    let (u, x, y1, y2, y1c) = (0, 1, 2, 3, 4);
    let plan = FactorizationPlan {
        blocks: vec![
            Block::free(&[u], &[]),
            Block::free(&[x], &[u]),
            Block::new(
                &[y1, y2],
                &[x],
                BlockKind::Channel {
                    q_index: stateless_q_table(&[x_size], &[y1_size, y2_size]),
                },
            ),
            Block::new(
                &[y1c],
                &[y1],
                BlockKind::Deterministic {
                    table: (0..y1_size).collect(),
                },
            ),
        ],
    };
    let representation = vec![
        ineq(vec![rate(1, 2, 1)], vec![minus_mi(&[y1c], &[y1], &[])], Relation::Le),
        ineq(vec![rate(1, 3, 1)], vec![minus_mi(&[u], &[y2], &[])], Relation::Le),
        ineq(
            vec![rate(1, 2, 1), rate(1, 3, 1)],
            vec![minus_mi(&[y1c], &[y1], &[u]), minus_mi(&[u], &[y2], &[])],
            Relation::Le,
        ),
    ];
    let shape = ChannelShape {
        inputs: vec![x_size],
        outputs: vec![y1_size, y2_size],
        states: 1,
    };
    finish(alphabets, 3, representation, shape, plan)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HkSizes {
    pub q: usize,
    pub u1: usize,
    pub u2: usize,
    pub x1: usize,
    pub x2: usize,
    pub y1: usize,
    pub y2: usize,
}

impl HkSizes {
    pub fn all(n: usize) -> Self {
        Self {
            q: n,
            u1: n,
            u2: n,
            x1: n,
            x2: n,
            y1: n,
            y2: n,
        }
    }
}

/// Han–Kobayashi region for an interference channel `c(y1, y2 | x1, x2)`.
///
/// Coordinates are `Q, U1, U2, X1, X2, Y1, Y2`. Terminals 1 and 2 are the
/// transmitters and 3 and 4 the receivers, so `R1 = R_13` and `R2 = R_24`.
pub fn builtin_han_kobayashi(s: HkSizes) -> FlcSpec {
    let alphabets = vec![
        Alphabet::new("Q", s.q),
        Alphabet::new("U1", s.u1),
        Alphabet::new("U2", s.u2),
        Alphabet::new("X1", s.x1),
        Alphabet::new("X2", s.x2),
        Alphabet::new("Y1", s.y1),
        Alphabet::new("Y2", s.y2),
    ];
    let (q, u1, u2, x1, x2, y1, y2) = (0, 1, 2, 3, 4, 5, 6);
    let plan = FactorizationPlan {
        blocks: vec![
            Block::free(&[q], &[]),
            Block::free(&[u1, x1], &[q]),
            Block::free(&[u2, x2], &[q]),
            Block::new(
                &[y1, y2],
                &[x1, x2],
                BlockKind::Channel {
                    q_index: stateless_q_table(&[s.x1, s.x2], &[s.y1, s.y2]),
                },
            ),
        ],
    };
    let r1 = |b| rate(1, 3, b);
    let r2 = |b| rate(2, 4, b);
    let lt = Relation::Lt;
    let representation = vec![
        ineq(vec![r1(1)], vec![minus_mi(&[x1], &[y1], &[u2, q])], lt),
        ineq(vec![r2(1)], vec![minus_mi(&[x2], &[y2], &[u1, q])], lt),
        ineq(
            vec![r1(1), r2(1)],
            vec![minus_mi(&[x1, u2], &[y1], &[q]), minus_mi(&[x2], &[y2], &[u1, u2, q])],
            lt,
        ),
        ineq(
            vec![r1(1), r2(1)],
            vec![minus_mi(&[x2, u1], &[y2], &[q]), minus_mi(&[x1], &[y1], &[u1, u2, q])],
            lt,
        ),
        ineq(
            vec![r1(1), r2(1)],
            vec![
                minus_mi(&[x1, u2], &[y1], &[u1, q]),
                minus_mi(&[x2, u1], &[y2], &[u2, q]),
            ],
            lt,
        ),
        ineq(
            vec![r1(2), r2(1)],
            vec![
                minus_mi(&[x1, u2], &[y1], &[q]),
                minus_mi(&[x1], &[y1], &[u1, u2, q]),
                minus_mi(&[x2, u1], &[y2], &[u2, q]),
            ],
            lt,
        ),
        ineq(
            vec![r1(1), r2(2)],
            vec![
                minus_mi(&[x2, u1], &[y2], &[q]),
                minus_mi(&[x2], &[y2], &[u1, u2, q]),
                minus_mi(&[x1, u2], &[y1], &[u1, q]),
            ],
            lt,
        ),
    ];
    let shape = ChannelShape {
        inputs: vec![s.x1, s.x2],
        outputs: vec![s.y1, s.y2],
        states: 1,
    };
    finish(alphabets, 4, representation, shape, plan)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use num_traits::Zero;

    use super::*;
    use crate::flc::parse_flc;
    use crate::prob::{flatten_channel, ChannelSpec};
    use crate::rational::ratio;

    #[test]
    fn dmc_counts() {
        let d = builtin_dmc(2, 2);
        assert_eq!(d.constraints.len(), 4);
        assert_eq!(d.representation.len(), 1);
        assert_eq!(builtin_dmc(2, 3).constraints.len(), 6);
    }

    #[test]
    fn marton_shape() {
        let m = builtin_marton(2, 2, 2, 2);
        assert_eq!(m.representation.len(), 3);
        assert_eq!(m.alphabets.len(), 5);
        assert_eq!(m.rate_variables(), vec![(1, 2), (1, 3)]);
    }

    #[test]
    fn hk_has_seven_rows_including_two_r1_plus_r2() {
        let hk = builtin_han_kobayashi(HkSizes::all(2));
        assert_eq!(hk.alphabets.len(), 7);
        assert_eq!(hk.representation.len(), 7);
        let betas: BTreeSet<Vec<(usize, usize, String)>> = hk
            .representation
            .iter()
            .map(|r| r.rate_terms.iter().map(|t| (t.i, t.j, t.beta.to_string())).collect())
            .collect();
        assert!(betas.contains(&vec![(1, 3, "2".to_string()), (2, 4, "1".to_string())]));
        assert_eq!(hk.rate_variables(), vec![(1, 3), (2, 4)]);
    }

    #[test]
    fn builtins_round_trip() {
        for spec in [
            builtin_dmc(3, 2),
            builtin_marton(2, 2, 3, 2),
            builtin_han_kobayashi(HkSizes::all(2)),
        ] {
            assert_eq!(parse_flc(&spec.to_json()).unwrap(), spec);
        }
    }

    #[test]
    fn marton_constraints_vanish_on_plan_joints() {
        let spec = builtin_marton(2, 2, 2, 2);
        let c = ChannelSpec::memoryless(&[2], &[2, 2], |out, inp| {
            // y1 = x, y2 = x flipped with probability 1/3
            if out[0] != inp[0] {
                return ratio(0, 1);
            }
            if out[1] == inp[0] {
                ratio(2, 3)
            } else {
                ratio(1, 3)
            }
        })
        .unwrap();
        let q = flatten_channel(&c);
        let plan = spec.structured.as_ref().unwrap();
        let free = vec![
            vec![ratio(2, 5), ratio(3, 5)],
            vec![ratio(1, 7), ratio(6, 7), ratio(1, 2), ratio(1, 2)],
        ];
        let p = plan.joint(&spec.sizes(), &q, &free);
        assert_eq!(p.iter().sum::<Rational>(), Rational::one());
        for f in &spec.constraints {
            assert!(f.eval(&p, &q).unwrap().is_zero(), "{f}");
        }
    }
}
