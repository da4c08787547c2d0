//! Exact rational-valued functions on a finite abelian group.
//!
//! Values are stored as integer numerators over one shared positive
//! denominator, kept in lowest terms. Translation, convolution and the tuple
//! measures `mu_a` therefore never round.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::group::{GroupElement, GroupSpec};
use crate::set::{same_group, GroupSet};
use crate::{Error, Rational, Result};

#[derive(Clone, PartialEq, Eq)]
pub struct RationalFunc {
    spec: Arc<GroupSpec>,
    num: Vec<BigInt>,
    den: BigInt,
}

impl RationalFunc {
    fn from_parts(spec: Arc<GroupSpec>, num: Vec<BigInt>, den: BigInt) -> Self {
        let mut f = RationalFunc { spec, num, den };
        f.normalize();
        f
    }

    fn normalize(&mut self) {
        if self.den.is_negative() {
            self.den = -&self.den;
            for v in &mut self.num {
                *v = -&*v;
            }
        }
        let mut g = self.den.clone();
        for v in &self.num {
            if g.is_one() {
                return;
            }
            if !v.is_zero() {
                g = g.gcd(v);
            }
        }
        if !g.is_one() {
            self.den /= &g;
            for v in &mut self.num {
                *v /= &g;
            }
        }
    }

    pub fn zero(spec: Arc<GroupSpec>) -> Self {
        let n = spec.order();
        RationalFunc {
            spec,
            num: vec![BigInt::zero(); n],
            den: BigInt::one(),
        }
    }

    /// `1_A`.
    pub fn indicator(a: &GroupSet) -> Self {
        let mut f = Self::zero(a.spec().clone());
        for i in a.indices() {
            f.num[i] = BigInt::one();
        }
        f
    }

    /// `delta_x`, the point mass at the element with index `x`.
    pub fn point_mass_idx(spec: Arc<GroupSpec>, x: usize) -> Self {
        let mut f = Self::zero(spec);
        f.num[x] = BigInt::one();
        f
    }

    pub fn point_mass(spec: Arc<GroupSpec>, x: &GroupElement) -> Result<Self> {
        let i = spec.index_of(x)?;
        Ok(Self::point_mass_idx(spec, i))
    }

    /// `mu_S`, the uniform probability measure on a non-empty set.
    pub fn uniform(s: &GroupSet) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::domain("uniform measure on the empty set"));
        }
        let mut f = Self::indicator(s);
        f.den = BigInt::from(s.len());
        f.normalize();
        Ok(f)
    }

    pub fn from_values(spec: Arc<GroupSpec>, values: &[Rational]) -> Result<Self> {
        if values.len() != spec.order() {
            return Err(Error::domain(format!(
                "expected {} values, got {}",
                spec.order(),
                values.len()
            )));
        }
        let den = values
            .iter()
            .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        let num = values
            .iter()
            .map(|v| v.numer() * (&den / v.denom()))
            .collect();
        Ok(Self::from_parts(spec, num, den))
    }

    pub fn spec(&self) -> &Arc<GroupSpec> {
        &self.spec
    }

    pub fn value_idx(&self, i: usize) -> Rational {
        Rational::new(self.num[i].clone(), self.den.clone())
    }

    pub fn value(&self, x: &GroupElement) -> Result<Rational> {
        Ok(self.value_idx(self.spec.index_of(x)?))
    }

    pub fn values(&self) -> Vec<Rational> {
        (0..self.num.len()).map(|i| self.value_idx(i)).collect()
    }

    /// Numerators over [`Self::denominator`].
    pub fn numerators(&self) -> &[BigInt] {
        &self.num
    }

    pub fn denominator(&self) -> &BigInt {
        &self.den
    }

    pub fn to_f64(&self) -> Vec<f64> {
        let d = big_to_f64(&self.den);
        self.num.iter().map(|v| big_to_f64(v) / d).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.num.iter().all(Zero::is_zero)
    }

    /// Scan-certified non-negativity.
    pub fn is_nonnegative(&self) -> bool {
        self.num.iter().all(|v| !v.is_negative())
    }

    pub fn support(&self) -> GroupSet {
        GroupSet::from_indices(
            self.spec.clone(),
            self.num
                .iter()
                .enumerate()
                .filter(|(_, v)| !v.is_zero())
                .map(|(i, _)| i),
        )
        .expect("indices in range")
    }

    fn check_same(&self, other: &RationalFunc) -> Result<()> {
        if same_group(&self.spec, &other.spec) {
            Ok(())
        } else {
            Err(Error::SpecMismatch)
        }
    }

    /// `tau_x f : y -> f(x + y)`.
    pub fn translate(&self, x: &GroupElement) -> Result<Self> {
        let i = self.spec.index_of(x)?;
        Ok(self.translate_idx(i))
    }

    pub fn translate_idx(&self, x: usize) -> Self {
        let num = (0..self.num.len())
            .map(|y| self.num[self.spec.add_idx(x, y)].clone())
            .collect();
        RationalFunc {
            spec: self.spec.clone(),
            num,
            den: self.den.clone(),
        }
    }

    /// `(f * g)(x) = sum_{y + z = x} f(y) g(z)`, iterating over both
    /// supports so sparse operands are cheap.
    pub fn convolve(&self, other: &RationalFunc) -> Result<Self> {
        self.check_same(other)?;
        let lhs: Vec<(usize, &BigInt)> = nonzero(&self.num).collect();
        let rhs: Vec<(usize, &BigInt)> = nonzero(&other.num).collect();
        let mut num = vec![BigInt::zero(); self.num.len()];
        for &(y, fy) in &lhs {
            for &(z, gz) in &rhs {
                num[self.spec.add_idx(y, z)] += fy * gz;
            }
        }
        Ok(Self::from_parts(
            self.spec.clone(),
            num,
            &self.den * &other.den,
        ))
    }

    /// `f * (1/2)(delta_0 + delta_a) = (f + tau_{-a} f) / 2`, one factor of a
    /// tuple measure.
    pub fn half_step_idx(&self, a: usize) -> Self {
        let num = (0..self.num.len())
            .map(|x| &self.num[x] + &self.num[self.spec.sub_idx(x, a)])
            .collect();
        Self::from_parts(self.spec.clone(), num, &self.den * 2)
    }

    pub fn add(&self, other: &RationalFunc) -> Result<Self> {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &RationalFunc) -> Result<Self> {
        self.combine(other, |a, b| a - b)
    }

    fn combine(&self, other: &RationalFunc, op: impl Fn(BigInt, BigInt) -> BigInt) -> Result<Self> {
        self.check_same(other)?;
        let den = self.den.lcm(&other.den);
        let ls = &den / &self.den;
        let rs = &den / &other.den;
        let num = self
            .num
            .iter()
            .zip(&other.num)
            .map(|(a, b)| op(a * &ls, b * &rs))
            .collect();
        Ok(Self::from_parts(self.spec.clone(), num, den))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let num = self.num.iter().map(|v| v * c.numer()).collect();
        Self::from_parts(self.spec.clone(), num, &self.den * c.denom())
    }

    /// Pointwise product `f g`.
    pub fn pointwise_mul(&self, other: &RationalFunc) -> Result<Self> {
        self.check_same(other)?;
        let num = self.num.iter().zip(&other.num).map(|(a, b)| a * b).collect();
        Ok(Self::from_parts(
            self.spec.clone(),
            num,
            &self.den * &other.den,
        ))
    }

    /// `f * mu_V` for a subgroup `V`: each value is replaced by the mean of
    /// `f` over its coset of `V`.
    pub fn average_over_subgroup(&self, v: &GroupSet) -> Result<Self> {
        if !same_group(&self.spec, v.spec()) {
            return Err(Error::SpecMismatch);
        }
        if !v.is_subgroup() {
            return Err(Error::domain("averaging set is not a subgroup"));
        }
        let members = v.to_indices();
        let n = self.num.len();
        let mut num = vec![BigInt::zero(); n];
        let mut seen = vec![false; n];
        for x in 0..n {
            if seen[x] {
                continue;
            }
            let coset: Vec<usize> = members.iter().map(|&m| self.spec.add_idx(x, m)).collect();
            let s: BigInt = coset.iter().map(|&y| &self.num[y]).sum();
            for &y in &coset {
                seen[y] = true;
                num[y] = s.clone();
            }
        }
        Ok(Self::from_parts(
            self.spec.clone(),
            num,
            &self.den * BigInt::from(members.len()),
        ))
    }

    /// Pointwise square `f^2`.
    pub fn square(&self) -> Self {
        let num = self.num.iter().map(|a| a * a).collect();
        Self::from_parts(self.spec.clone(), num, &self.den * &self.den)
    }

    /// `sum_x f(x)`.
    pub fn total(&self) -> Rational {
        Rational::new(self.num.iter().sum(), self.den.clone())
    }

    /// `||f||_1`.
    pub fn l1(&self) -> Rational {
        Rational::new(self.num.iter().map(|v| v.abs()).sum(), self.den.clone())
    }

    /// `||f||_2^2`.
    pub fn l2_sq(&self) -> Rational {
        Rational::new(self.num.iter().map(|v| v * v).sum(), &self.den * &self.den)
    }

    /// `<f, g> = sum_x f(x) g(x)`.
    pub fn inner(&self, other: &RationalFunc) -> Result<Rational> {
        self.check_same(other)?;
        let s: BigInt = self.num.iter().zip(&other.num).map(|(a, b)| a * b).sum();
        Ok(Rational::new(s, &self.den * &other.den))
    }

    /// `||f - tau_x f||_1`.
    pub fn translation_l1_idx(&self, x: usize) -> Rational {
        let s: BigInt = (0..self.num.len())
            .map(|y| (&self.num[y] - &self.num[self.spec.add_idx(x, y)]).abs())
            .sum();
        Rational::new(s, self.den.clone())
    }

    /// `||f - tau_x f||_2^2`.
    pub fn translation_l2_sq_idx(&self, x: usize) -> Rational {
        let s: BigInt = (0..self.num.len())
            .map(|y| {
                let d = &self.num[y] - &self.num[self.spec.add_idx(x, y)];
                &d * &d
            })
            .sum();
        Rational::new(s, &self.den * &self.den)
    }

    /// `||f + tau_x f||_2^2`.
    pub fn translation_sum_l2_sq_idx(&self, x: usize) -> Rational {
        let s: BigInt = (0..self.num.len())
            .map(|y| {
                let d = &self.num[y] + &self.num[self.spec.add_idx(x, y)];
                &d * &d
            })
            .sum();
        Rational::new(s, &self.den * &self.den)
    }
}

fn nonzero(v: &[BigInt]) -> impl Iterator<Item = (usize, &BigInt)> {
    v.iter().enumerate().filter(|(_, x)| !x.is_zero())
}

pub fn big_to_f64(v: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    v.to_f64().unwrap_or(if v.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    })
}

pub fn rational_to_f64(v: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    v.to_f64().unwrap_or(f64::NAN)
}

impl fmt::Debug for RationalFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RationalFunc[{}](", self.spec)?;
        for (i, v) in self.values().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

/// The probability measure `mu_a = 2^{-l} *_{i} (delta_0 + delta_{a_i})` for
/// a tuple `a` of length `l`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TupleMeasure {
    tuple: Vec<usize>,
    measure: RationalFunc,
}

impl TupleMeasure {
    pub fn tuple(&self) -> &[usize] {
        &self.tuple
    }

    pub fn measure(&self) -> &RationalFunc {
        &self.measure
    }

    pub fn into_measure(self) -> RationalFunc {
        self.measure
    }
}

pub fn mu_tuple(spec: Arc<GroupSpec>, a: &[GroupElement]) -> Result<TupleMeasure> {
    let idx = a
        .iter()
        .map(|x| spec.index_of(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(mu_tuple_idx(spec, &idx))
}

pub fn mu_tuple_idx(spec: Arc<GroupSpec>, a: &[usize]) -> TupleMeasure {
    let mut m = RationalFunc::point_mass_idx(spec, 0);
    for &x in a {
        m = m.half_step_idx(x);
    }
    TupleMeasure {
        tuple: a.to_vec(),
        measure: m,
    }
}

/// `h * mu_a`, built by successive half steps rather than a full
/// convolution.
pub fn smooth_by_tuple(h: &RationalFunc, a: &[usize]) -> RationalFunc {
    a.iter().fold(h.clone(), |f, &x| f.half_step_idx(x))
}
