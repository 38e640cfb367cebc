//! Closed intervals with outward rounding.
//!
//! Every floating-point operation is widened by one ulp in each direction
//! (`next_down` / `next_up`), which keeps the enclosure sound without
//! switching rounding modes.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::rational::{self, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "interval [{lo}, {hi}] is empty");
        Self { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    /// Encloses the exact rational, allowing for conversion error.
    pub fn from_rational(r: &Rational) -> Self {
        let x = rational::to_f64(r);
        Self {
            lo: x.next_down(),
            hi: x.next_up(),
        }
    }

    pub fn from_bounds(lo: &Rational, hi: &Rational) -> Self {
        Self {
            lo: rational::to_f64(lo).next_down(),
            hi: rational::to_f64(hi).next_up(),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    /// Distance from 0 to the interval (0 when it contains 0).
    pub fn gap_to_zero(&self) -> f64 {
        if self.lo > 0.0 {
            self.lo
        } else if self.hi < 0.0 {
            -self.hi
        } else {
            0.0
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn powi(self, k: u32) -> Interval {
        match k {
            0 => Interval::point(1.0),
            1 => self,
            _ => {
                let mut acc = self;
                for _ in 1..k {
                    acc = acc * self;
                }
                if k.is_multiple_of(2) && acc.lo < 0.0 {
                    // an even power is never negative
                    acc.lo = 0.0;
                }
                acc
            }
        }
    }

    pub fn hull(self, other: Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: (self.lo + rhs.lo).next_down(),
            hi: (self.hi + rhs.hi).next_up(),
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval {
            lo: (self.lo - rhs.hi).next_down(),
            hi: (self.hi - rhs.lo).next_up(),
        }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let products = [self.lo * rhs.lo, self.lo * rhs.hi, self.hi * rhs.lo, self.hi * rhs.hi];
        let lo = products.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = products.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval {
            lo: lo.next_down(),
            hi: hi.next_up(),
        }
    }
}
