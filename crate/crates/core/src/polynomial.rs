//! Sparse multivariate polynomials in the distribution variables `p_i` and
//! the channel variables `q_j`, with exact rational coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::interval::Interval;
use crate::rational::Rational;
use crate::{Error, Result};

pub type Exponents = BTreeMap<usize, u32>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Monomial {
    #[serde(rename = "c", with = "crate::rational::serde_str")]
    pub coefficient: Rational,
    #[serde(rename = "p", default, skip_serializing_if = "BTreeMap::is_empty")]
    pub p_exponents: Exponents,
    #[serde(rename = "q", default, skip_serializing_if = "BTreeMap::is_empty")]
    pub q_exponents: Exponents,
}

impl Monomial {
    fn key(&self) -> Key {
        (
            self.p_exponents.iter().map(|(&i, &e)| (i, e)).collect(),
            self.q_exponents.iter().map(|(&i, &e)| (i, e)).collect(),
        )
    }

    pub fn degree(&self) -> u32 {
        self.p_exponents.values().chain(self.q_exponents.values()).sum()
    }
}

fn pow(base: &Rational, e: u32) -> Rational {
    let mut acc = Rational::one();
    for _ in 0..e {
        acc *= base;
    }
    acc
}

type Key = (Vec<(usize, u32)>, Vec<(usize, u32)>);

/// Canonical form: monomials sorted by exponent pattern, no duplicates, no
/// zero coefficients, no zero exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Polynomial {
    monomials: Vec<Monomial>,
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(Polynomial::from_monomials(Vec::<Monomial>::deserialize(d)?))
    }
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_monomials(vec![Monomial {
            coefficient: c,
            p_exponents: Exponents::new(),
            q_exponents: Exponents::new(),
        }])
    }

    pub fn p(index: usize) -> Self {
        Self::from_monomials(vec![Monomial {
            coefficient: Rational::one(),
            p_exponents: [(index, 1)].into(),
            q_exponents: Exponents::new(),
        }])
    }

    pub fn q(index: usize) -> Self {
        Self::from_monomials(vec![Monomial {
            coefficient: Rational::one(),
            p_exponents: Exponents::new(),
            q_exponents: [(index, 1)].into(),
        }])
    }

    /// Sum of the `p` variables at `indices`.
    pub fn p_sum(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut acc = BTreeMap::new();
        for i in indices {
            let key: Key = (vec![(i, 1)], vec![]);
            *acc.entry(key).or_insert_with(Rational::zero) += Rational::one();
        }
        Self::from_map(acc)
    }

    pub fn from_monomials(monomials: Vec<Monomial>) -> Self {
        let mut acc: BTreeMap<Key, Rational> = BTreeMap::new();
        for mut m in monomials {
            m.p_exponents.retain(|_, e| *e > 0);
            m.q_exponents.retain(|_, e| *e > 0);
            *acc.entry(m.key()).or_insert_with(Rational::zero) += m.coefficient;
        }
        Self::from_map(acc)
    }

    fn from_map(acc: BTreeMap<Key, Rational>) -> Self {
        let monomials = acc
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|((p, q), coefficient)| Monomial {
                coefficient,
                p_exponents: p.into_iter().collect(),
                q_exponents: q.into_iter().collect(),
            })
            .collect();
        Self { monomials }
    }

    fn to_map(&self) -> BTreeMap<Key, Rational> {
        self.monomials
            .iter()
            .map(|m| (m.key(), m.coefficient.clone()))
            .collect()
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.monomials.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn is_p_only(&self) -> bool {
        self.monomials.iter().all(|m| m.q_exponents.is_empty())
    }

    pub fn max_p_index(&self) -> Option<usize> {
        self.monomials
            .iter()
            .filter_map(|m| m.p_exponents.keys().next_back().copied())
            .max()
    }

    pub fn max_q_index(&self) -> Option<usize> {
        self.monomials
            .iter()
            .filter_map(|m| m.q_exponents.keys().next_back().copied())
            .max()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = self.clone();
        for m in &mut out.monomials {
            m.coefficient *= c;
        }
        if c.is_zero() {
            out.monomials.clear();
        }
        out
    }

    fn check_lengths(&self, p_len: usize, q_len: Option<usize>) -> Result<()> {
        if let Some(i) = self.max_p_index() {
            if i >= p_len {
                return Err(Error::IndexOutOfRange { index: i, len: p_len });
            }
        }
        if let (Some(j), Some(len)) = (self.max_q_index(), q_len) {
            if j >= len {
                return Err(Error::MissingQ { index: j, len });
            }
        }
        Ok(())
    }

    /// Exact value at `(p, q)`.
    pub fn eval(&self, p: &[Rational], q: &[Rational]) -> Result<Rational> {
        self.check_lengths(p.len(), Some(q.len()))?;
        let mut total = Rational::zero();
        for m in &self.monomials {
            let mut term = m.coefficient.clone();
            for (&i, &e) in &m.p_exponents {
                term *= pow(&p[i], e);
            }
            for (&j, &e) in &m.q_exponents {
                term *= pow(&q[j], e);
            }
            total += term;
        }
        Ok(total)
    }

    /// Folds the channel values into the coefficients.
    pub fn substitute_q(&self, q: &[Rational]) -> Result<Polynomial> {
        if let Some(j) = self.max_q_index() {
            if j >= q.len() {
                return Err(Error::MissingQ { index: j, len: q.len() });
            }
        }
        let monomials = self
            .monomials
            .iter()
            .map(|m| {
                let mut coefficient = m.coefficient.clone();
                for (&j, &e) in &m.q_exponents {
                    coefficient *= pow(&q[j], e);
                }
                Monomial {
                    coefficient,
                    p_exponents: m.p_exponents.clone(),
                    q_exponents: Exponents::new(),
                }
            })
            .collect();
        Ok(Polynomial::from_monomials(monomials))
    }

    /// Sound enclosure of `{f(p) : p ∈ box}`, evaluated monomial by monomial.
    /// Channel variables must have been substituted.
    pub fn interval_eval(&self, bx: &[Interval]) -> Result<Interval> {
        self.check_lengths(bx.len(), None)?;
        if !self.is_p_only() {
            return Err(Error::Precondition(
                "interval evaluation needs a polynomial in p only".into(),
            ));
        }
        let mut acc = Interval::point(0.0);
        for m in &self.monomials {
            let mut term = Interval::from_rational(&m.coefficient);
            for (&i, &e) in &m.p_exponents {
                term = term * bx[i].powi(e);
            }
            acc = acc + term;
        }
        Ok(acc)
    }

    /// Exact value in `p` only (after substitution); skips the q check.
    pub(crate) fn eval_p(&self, p: &[Rational]) -> Rational {
        let mut total = Rational::zero();
        for m in &self.monomials {
            let mut term = m.coefficient.clone();
            for (&i, &e) in &m.p_exponents {
                if e == 1 {
                    term *= &p[i];
                } else {
                    term *= pow(&p[i], e);
                }
            }
            total += term;
        }
        total
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut acc = self.to_map();
        for m in &rhs.monomials {
            *acc.entry(m.key()).or_insert_with(Rational::zero) += &m.coefficient;
        }
        Polynomial::from_map(acc)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut acc = self.to_map();
        for m in &rhs.monomials {
            *acc.entry(m.key()).or_insert_with(Rational::zero) -= &m.coefficient;
        }
        Polynomial::from_map(acc)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(&-Rational::one())
    }
}

fn merge(a: &[(usize, u32)], b: &[(usize, u32)]) -> Vec<(usize, u32)> {
    let mut m: BTreeMap<usize, u32> = a.iter().copied().collect();
    for &(i, e) in b {
        *m.entry(i).or_default() += e;
    }
    m.into_iter().collect()
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut acc: BTreeMap<Key, Rational> = BTreeMap::new();
        for a in &self.monomials {
            let (ap, aq) = a.key();
            for b in &rhs.monomials {
                let (bp, bq) = b.key();
                let key = (merge(&ap, &bp), merge(&aq, &bq));
                *acc.entry(key).or_insert_with(Rational::zero) += &a.coefficient * &b.coefficient;
            }
        }
        Polynomial::from_map(acc)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.monomials.is_empty() {
            return write!(f, "0");
        }
        for (k, m) in self.monomials.iter().enumerate() {
            let c = &m.coefficient;
            let sign = if c.is_negative() { "-" } else { "+" };
            if k == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let abs = c.abs();
            let vars: Vec<String> = m
                .p_exponents
                .iter()
                .map(|(i, e)| (format!("p{i}"), *e))
                .chain(m.q_exponents.iter().map(|(j, e)| (format!("q{j}"), *e)))
                .map(|(v, e)| if e == 1 { v } else { format!("{v}^{e}") })
                .collect();
            if vars.is_empty() || !abs.is_one() {
                write!(f, "{abs}")?;
                if !vars.is_empty() {
                    write!(f, "*")?;
                }
            }
            write!(f, "{}", vars.join("*"))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn eval_examples() {
        let f = &(&Polynomial::p(0) + &Polynomial::p(1)) - &Polynomial::constant(int(1));
        assert_eq!(f.eval(&[ratio(1, 2), ratio(1, 2)], &[]).unwrap(), int(0));

        let g = &(&Polynomial::p(0) * &Polynomial::q(0)) - &Polynomial::p(1);
        assert_eq!(g.eval(&[ratio(1, 3), ratio(1, 6)], &[ratio(1, 2)]).unwrap(), int(0));

        let sq = &Polynomial::p(0) * &Polynomial::p(0);
        assert_eq!(sq.eval(&[ratio(2, 3)], &[]).unwrap(), ratio(4, 9));
        assert!(matches!(
            sq.eval(&[], &[]),
            Err(Error::IndexOutOfRange { index: 0, len: 0 })
        ));
    }

    #[test]
    fn substitute_examples() {
        let g = &(&Polynomial::p(0) * &Polynomial::q(0)) - &Polynomial::p(1);
        let expected = &Polynomial::p(0).scale(&ratio(1, 2)) - &Polynomial::p(1);
        assert_eq!(g.substitute_q(&[ratio(1, 2)]).unwrap(), expected);

        let plain = &Polynomial::p(0) + &Polynomial::p(2);
        assert_eq!(plain.substitute_q(&[]).unwrap(), plain);

        let qq = &Polynomial::q(0) * &Polynomial::q(1);
        let folded = qq.substitute_q(&[ratio(1, 3), int(3)]).unwrap();
        assert_eq!(folded, Polynomial::constant(int(1)));
        assert!(matches!(
            qq.substitute_q(&[ratio(1, 3)]),
            Err(Error::MissingQ { index: 1, len: 1 })
        ));
    }

    #[test]
    fn interval_examples() {
        let f = &(&Polynomial::p(0) + &Polynomial::p(1)) - &Polynomial::constant(int(1));
        let r = f
            .interval_eval(&[Interval::new(0.4, 0.6), Interval::new(0.4, 0.6)])
            .unwrap();
        assert!(r.lo <= -0.2 && r.hi >= 0.2);

        let c = Polynomial::constant(ratio(3, 4)).interval_eval(&[]).unwrap();
        assert!(c.contains(0.75) && c.width() < 1e-15);

        let sq = &Polynomial::p(0) * &Polynomial::p(0);
        let r = sq.interval_eval(&[Interval::new(-1.0, 1.0)]).unwrap();
        assert!(r.lo <= 0.0 && r.hi >= 1.0);
    }

    #[test]
    fn canonical_form_merges_and_drops() {
        let a = &Polynomial::p(1) + &Polynomial::p(0);
        let b = &Polynomial::p(0) + &Polynomial::p(1);
        assert_eq!(a, b);
        let zero = &a - &b;
        assert!(zero.is_zero());
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, r#"[{"c":"1/1","p":{"0":1}},{"c":"1/1","p":{"1":1}}]"#);
    }

    #[test]
    fn display_is_readable() {
        let g = &(&Polynomial::p(0) * &Polynomial::q(0)).scale(&ratio(1, 2)) - &Polynomial::p(1);
        assert_eq!(g.to_string(), "1/2*p0*q0 - p1");
    }
}
