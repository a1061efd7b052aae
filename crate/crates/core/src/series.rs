//! Truncated Laurent series with complex coefficients.
//!
//! A [`TruncSeries`] stores the coefficients of `x^lowest … x^(order-1)`;
//! everything from `x^order` on is *unknown*, not zero. All operations track
//! that order pessimistically, so a result never claims more precision than
//! its inputs carry.

use crate::error::{Error, Result};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncSeries {
    lowest_exponent: i64,
    coeffs: Vec<C64>,
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

impl TruncSeries {
    /// Series `Σ coeffs[i] x^{lowest+i}`, known up to `x^{lowest+len-1}`.
    /// Exact leading zeros are stripped (raising `lowest`).
    pub fn new(lowest: i64, coeffs: Vec<C64>) -> Self {
        let mut s = TruncSeries {
            lowest_exponent: lowest,
            coeffs,
        };
        s.normalize();
        s
    }

    /// Real coefficients convenience constructor.
    pub fn from_real(lowest: i64, coeffs: &[f64]) -> Self {
        Self::new(lowest, coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    /// The zero series known to order `order`.
    pub fn zero(order: i64) -> Self {
        TruncSeries {
            lowest_exponent: order,
            coeffs: Vec::new(),
        }
    }

    /// `c x^e + O(x^order)`.
    pub fn monomial(c: C64, e: i64, order: i64) -> Self {
        if e >= order {
            return Self::zero(order);
        }
        let mut coeffs = vec![zero(); (order - e) as usize];
        coeffs[0] = c;
        Self::new(e, coeffs)
    }

    /// The identity series `x + O(x^order)`.
    pub fn identity(order: i64) -> Self {
        Self::monomial(one(), 1, order)
    }

    /// The constant `c + O(x^order)`.
    pub fn constant(c: C64, order: i64) -> Self {
        Self::monomial(c, 0, order)
    }

    fn normalize(&mut self) {
        let lead = self.coeffs.iter().take_while(|c| **c == zero()).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.lowest_exponent += lead as i64;
        }
    }

    pub fn lowest_exponent(&self) -> i64 {
        self.lowest_exponent
    }

    /// First exponent whose coefficient is unknown.
    pub fn truncation_order(&self) -> i64 {
        self.lowest_exponent + self.coeffs.len() as i64
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of `x^e`; zero below the lowest exponent and `None` at or
    /// beyond the truncation order.
    pub fn get(&self, e: i64) -> Option<C64> {
        if e >= self.truncation_order() {
            None
        } else if e < self.lowest_exponent {
            Some(zero())
        } else {
            Some(self.coeffs[(e - self.lowest_exponent) as usize])
        }
    }

    /// Like [`get`](Self::get) but unknown coefficients read as zero.
    pub fn coeff(&self, e: i64) -> C64 {
        self.get(e).unwrap_or_else(zero)
    }

    pub fn leading(&self) -> Option<C64> {
        self.coeffs.first().copied()
    }

    /// Drop everything from `x^order` on.
    pub fn truncate(&self, order: i64) -> Self {
        if order >= self.truncation_order() {
            return self.clone();
        }
        if order <= self.lowest_exponent {
            return Self::zero(order);
        }
        let len = (order - self.lowest_exponent) as usize;
        Self::new(self.lowest_exponent, self.coeffs[..len].to_vec())
    }

    /// Extend the known range by declaring the missing coefficients zero.
    /// Only legitimate when the series is known to be a polynomial.
    pub fn pad_to(&self, order: i64) -> Self {
        if order <= self.truncation_order() {
            return self.clone();
        }
        if self.is_zero() {
            return Self::zero(order);
        }
        let mut c = self.coeffs.clone();
        c.resize((order - self.lowest_exponent) as usize, zero());
        Self::new(self.lowest_exponent, c)
    }

    /// Multiply by `x^n`.
    pub fn shift(&self, n: i64) -> Self {
        TruncSeries {
            lowest_exponent: self.lowest_exponent + n,
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::new(
            self.lowest_exponent,
            self.coeffs.iter().map(|x| x * c).collect(),
        )
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        let order = self.truncation_order().min(other.truncation_order());
        let lo = self.lowest_exponent.min(other.lowest_exponent).min(order);
        let mut out = vec![zero(); (order - lo) as usize];
        for (i, slot) in out.iter_mut().enumerate() {
            let e = lo + i as i64;
            *slot = self.coeff(e) + other.coeff(e) * sign;
        }
        Self::new(lo, out)
    }

    /// Cauchy product; order = min(la + ob, lb + oa).
    pub fn product(&self, other: &Self) -> Self {
        let lo = self.lowest_exponent + other.lowest_exponent;
        let order = (self.lowest_exponent + other.truncation_order())
            .min(other.lowest_exponent + self.truncation_order());
        if self.is_zero() || other.is_zero() {
            return Self::zero(order);
        }
        let len = (order - lo).max(0) as usize;
        let mut out = vec![zero(); len];
        for (i, a) in self.coeffs.iter().enumerate().take(len) {
            if *a == zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(len - i) {
                out[i + j] += a * b;
            }
        }
        Self::new(lo, out)
    }

    /// Integer power (negative powers through [`reciprocal`](Self::reciprocal)).
    pub fn powi(&self, n: i64) -> Result<Self> {
        if n == 0 {
            let rel = self.coeffs.len() as i64;
            return Ok(Self::constant(one(), rel.max(0)));
        }
        let base = if n < 0 {
            self.reciprocal()?
        } else {
            self.clone()
        };
        let mut e = n.unsigned_abs();
        let mut acc: Option<Self> = None;
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => sq.clone(),
                    Some(a) => a.product(&sq),
                });
            }
            e >>= 1;
            if e > 0 {
                sq = sq.product(&sq);
            }
        }
        Ok(acc.expect("nonzero exponent"))
    }

    /// `1/f`; the result has the same relative length.
    pub fn reciprocal(&self) -> Result<Self> {
        let f0 = self
            .leading()
            .ok_or_else(|| Error::pre("reciprocal of the zero series"))?;
        let n = self.coeffs.len();
        let inv0 = f0.inv();
        let mut g = vec![zero(); n];
        g[0] = inv0;
        for k in 1..n {
            let mut acc = zero();
            for i in 1..=k {
                acc += self.coeffs[i] * g[k - i];
            }
            g[k] = -acc * inv0;
        }
        Ok(Self::new(-self.lowest_exponent, g))
    }

    /// `outer(inner(x))`; `inner` must vanish at 0.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if inner.is_zero() {
            return Err(Error::pre("compose: inner series is zero to its order"));
        }
        if inner.lowest_exponent < 1 {
            return Err(Error::pre(
                "compose: inner series must have zero constant term and no negative powers",
            ));
        }
        let m = inner.lowest_exponent;
        let cap = m * self.truncation_order();
        let mut acc = Self::zero(cap);
        if self.is_zero() {
            return Ok(acc);
        }
        let lo = self.lowest_exponent;
        let hi = self.truncation_order() - 1;
        if lo < 0 {
            let recip = inner.reciprocal()?;
            let mut p = recip.clone();
            for j in (lo..0).rev() {
                let c = self.coeff(j);
                if c != zero() {
                    acc = acc.combine(&p.scale(c), 1.0);
                }
                if j > lo {
                    p = p.product(&recip);
                }
            }
        }
        if lo <= 0 && hi >= 0 {
            acc = acc.combine(&Self::constant(self.coeff(0), cap), 1.0);
        }
        if hi >= 1 {
            let mut p = inner.clone();
            for j in 1..=hi {
                if j >= lo {
                    let c = self.coeff(j);
                    if c != zero() {
                        acc = acc.combine(&p.scale(c), 1.0);
                    }
                }
                if j < hi {
                    p = p.product(inner);
                }
            }
        }
        Ok(acc)
    }

    /// Compositional inverse of `c x + …` (c ≠ 0) by Newton iteration.
    pub fn reversion(&self) -> Result<Self> {
        if self.lowest_exponent != 1 {
            return Err(Error::pre(
                "reversion: series must start at x^1 with nonzero coefficient",
            ));
        }
        let c = self.coeffs[0];
        let order = self.truncation_order();
        let id = Self::identity(order);
        let df = self.derivative();
        let mut g = Self::monomial(c.inv(), 1, order);
        let iters = 2 + (64 - (order.max(2) as u64).leading_zeros());
        for _ in 0..iters {
            let resid = &self.compose(&g)? - &id;
            if resid.is_zero() || resid.max_abs() == 0.0 {
                break;
            }
            let step = resid.product(&df.compose(&g)?.reciprocal()?);
            g = (&g - &step).truncate(order);
        }
        Ok(g.pad_to(order).truncate(order))
    }

    /// Principal `n`-th root: `c^{1/n} x^{l/n} (1+u)^{1/n}`.
    pub fn nth_root(&self, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::pre("nth_root: n must be positive"));
        }
        let c = self
            .leading()
            .ok_or_else(|| Error::pre("nth_root of the zero series"))?;
        let l = self.lowest_exponent;
        if l % n as i64 != 0 {
            return Err(Error::pre(format!(
                "nth_root: leading exponent {l} not divisible by {n}"
            )));
        }
        let unit = self.shift(-l).scale(c.inv());
        let root_unit = unit.log()?.scale(C64::new(1.0 / n as f64, 0.0)).exp()?;
        let croot = c.powf(1.0 / n as f64);
        Ok(root_unit.scale(croot).shift(l / n as i64))
    }

    pub fn derivative(&self) -> Self {
        let order = self.truncation_order() - 1;
        if self.is_zero() {
            return Self::zero(order);
        }
        let lo = self.lowest_exponent - 1;
        let c = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| a * (self.lowest_exponent + i as i64) as f64)
            .collect();
        Self::new(lo, c).truncate(order)
    }

    /// Term-wise antiderivative with zero constant; refuses a nonzero `x^{-1}` term.
    pub fn antiderivative(&self) -> Result<Self> {
        if self.residue() != zero() {
            return Err(Error::pre(
                "antiderivative: nonzero x^-1 coefficient (logarithmic term)",
            ));
        }
        let order = self.truncation_order() + 1;
        if self.is_zero() {
            return Ok(Self::zero(order));
        }
        let lo = self.lowest_exponent + 1;
        let c = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let e = self.lowest_exponent + i as i64 + 1;
                if e == 0 {
                    zero()
                } else {
                    a / e as f64
                }
            })
            .collect();
        Ok(Self::new(lo, c))
    }

    /// Coefficient of `x^{-1}`.
    pub fn residue(&self) -> C64 {
        self.coeff(-1)
    }

    /// Formal exponential; requires no constant term.
    pub fn exp(&self) -> Result<Self> {
        let order = self.truncation_order();
        if self.is_zero() {
            return Ok(Self::constant(one(), order.max(0)));
        }
        if self.lowest_exponent < 1 {
            return Err(Error::pre("exp: series must have lowest exponent >= 1"));
        }
        let n = order.max(0) as usize;
        let f: Vec<C64> = (0..n as i64).map(|e| self.coeff(e)).collect();
        let mut e = vec![zero(); n];
        if n > 0 {
            e[0] = one();
        }
        for k in 1..n {
            let mut acc = zero();
            for j in 1..=k {
                acc += f[j] * e[k - j] * j as f64;
            }
            e[k] = acc / k as f64;
        }
        Ok(Self::new(0, e))
    }

    /// Formal logarithm; requires constant term 1.
    pub fn log(&self) -> Result<Self> {
        if self.lowest_exponent != 0 || (self.coeffs[0] - one()).norm() > 1e-12 {
            return Err(Error::pre("log: series must have constant term 1"));
        }
        let n = self.coeffs.len();
        let f = &self.coeffs;
        let mut l = vec![zero(); n];
        for k in 1..n {
            let mut acc = f[k] * k as f64;
            for j in 1..k {
                acc -= l[j] * f[k - j] * j as f64;
            }
            l[k] = acc / k as f64;
        }
        Ok(Self::new(0, l))
    }

    /// Evaluate the known part at `x`.
    pub fn eval(&self, x: C64) -> C64 {
        let mut acc = zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc * x.powi(self.lowest_exponent as i32)
    }

    /// Value and first derivative of the known part at `x`.
    pub fn eval_with_derivative(&self, x: C64) -> (C64, C64) {
        let mut p = zero();
        let mut dp = zero();
        for c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        let l = self.lowest_exponent as i32;
        let xl = x.powi(l);
        let val = p * xl;
        let der = dp * xl
            + if l != 0 {
                p * x.powi(l - 1) * l as f64
            } else {
                zero()
            };
        (val, der)
    }

    /// Largest coefficient modulus (0 for the zero series).
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

impl Add for TruncSeries {
    type Output = TruncSeries;
    fn add(self, rhs: Self) -> Self {
        self.combine(&rhs, 1.0)
    }
}

impl Sub for TruncSeries {
    type Output = TruncSeries;
    fn sub(self, rhs: Self) -> Self {
        self.combine(&rhs, -1.0)
    }
}

impl Neg for TruncSeries {
    type Output = TruncSeries;
    fn neg(self) -> Self {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for TruncSeries {
    type Output = TruncSeries;
    fn mul(self, rhs: Self) -> Self {
        TruncSeries::product(&self, &rhs)
    }
}

impl<'a> Add<&'a TruncSeries> for &'a TruncSeries {
    type Output = TruncSeries;
    fn add(self, rhs: &TruncSeries) -> TruncSeries {
        self.combine(rhs, 1.0)
    }
}

impl<'a> Sub<&'a TruncSeries> for &'a TruncSeries {
    type Output = TruncSeries;
    fn sub(self, rhs: &TruncSeries) -> TruncSeries {
        self.combine(rhs, -1.0)
    }
}

impl<'a> Mul<&'a TruncSeries> for &'a TruncSeries {
    type Output = TruncSeries;
    fn mul(self, rhs: &TruncSeries) -> TruncSeries {
        TruncSeries::product(self, rhs)
    }
}
