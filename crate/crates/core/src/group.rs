//! Finite abelian groups presented as products of cyclic groups.
//!
//! Elements are stored as coordinate vectors and are also addressed by a
//! mixed-radix index: the last coordinate varies fastest, so index order is
//! lexicographic order on coordinates. Every deterministic tie-break in the
//! crate refers to this order.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use num_integer::Integer;

use crate::{Error, Result};

/// Largest group order accepted. Sets are dense bitsets and functions are
/// dense value vectors, so this is a memory guard.
pub const MAX_ORDER: usize = 1 << 24;

/// `Z_{m_1} x ... x Z_{m_n}`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GroupSpec {
    moduli: Vec<u32>,
    strides: Vec<usize>,
    order: usize,
    exponent: u64,
}

impl GroupSpec {
    pub fn new(moduli: Vec<u32>) -> Result<Self> {
        if moduli.is_empty() {
            return Err(Error::EmptyGroup);
        }
        let mut order: usize = 1;
        let mut exponent: u64 = 1;
        for &m in &moduli {
            if m < 2 {
                return Err(Error::InvalidModulus(m as u64));
            }
            order = order
                .checked_mul(m as usize)
                .filter(|&o| o <= MAX_ORDER)
                .ok_or(Error::OrderOverflow)?;
            exponent = exponent.lcm(&(m as u64));
        }
        let mut strides = vec![1usize; moduli.len()];
        for j in (0..moduli.len().saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * moduli[j + 1] as usize;
        }
        Ok(GroupSpec {
            moduli,
            strides,
            order,
            exponent,
        })
    }

    pub fn cyclic(m: u32) -> Result<Self> {
        Self::new(vec![m])
    }

    /// `Z_p^n`.
    pub fn power(p: u32, n: usize) -> Result<Self> {
        Self::new(vec![p; n])
    }

    pub fn moduli(&self) -> &[u32] {
        &self.moduli
    }

    pub fn rank(&self) -> usize {
        self.moduli.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Least `r >= 1` with `r x = 0` for all `x`.
    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement {
            coords: vec![0; self.rank()],
        }
    }

    pub fn element(&self, coords: Vec<u32>) -> Result<GroupElement> {
        let e = GroupElement { coords };
        self.check(&e)?;
        Ok(e)
    }

    /// Element with coordinate `j` equal to 1 and every other coordinate 0.
    pub fn basis(&self, j: usize) -> GroupElement {
        let mut coords = vec![0; self.rank()];
        coords[j] = 1;
        GroupElement { coords }
    }

    pub fn check(&self, x: &GroupElement) -> Result<()> {
        if x.coords.len() != self.rank() {
            return Err(Error::Arity {
                expected: self.rank(),
                got: x.coords.len(),
            });
        }
        for (position, (&c, &m)) in x.coords.iter().zip(&self.moduli).enumerate() {
            if c >= m {
                return Err(Error::CoordinateOutOfRange {
                    position,
                    value: c as u64,
                    modulus: m as u64,
                });
            }
        }
        Ok(())
    }

    pub fn index_of(&self, x: &GroupElement) -> Result<usize> {
        self.check(x)?;
        Ok(self.index_unchecked(&x.coords))
    }

    pub(crate) fn index_unchecked(&self, coords: &[u32]) -> usize {
        coords
            .iter()
            .zip(&self.strides)
            .map(|(&c, &s)| c as usize * s)
            .sum()
    }

    pub fn element_at(&self, index: usize) -> Result<GroupElement> {
        if index >= self.order {
            return Err(Error::IndexOutOfRange(index));
        }
        Ok(self.element_at_unchecked(index))
    }

    pub(crate) fn element_at_unchecked(&self, mut index: usize) -> GroupElement {
        let mut coords = vec![0; self.rank()];
        for j in (0..self.rank()).rev() {
            let m = self.moduli[j] as usize;
            coords[j] = (index % m) as u32;
            index /= m;
        }
        GroupElement { coords }
    }

    /// All elements in canonical (lexicographic) order.
    pub fn elements(&self) -> impl Iterator<Item = GroupElement> + '_ {
        (0..self.order).map(move |i| self.element_at_unchecked(i))
    }

    pub fn add(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        self.check(x)?;
        self.check(y)?;
        let coords = x
            .coords
            .iter()
            .zip(&y.coords)
            .zip(&self.moduli)
            .map(|((&a, &b), &m)| ((a as u64 + b as u64) % m as u64) as u32)
            .collect();
        Ok(GroupElement { coords })
    }

    pub fn negate(&self, x: &GroupElement) -> Result<GroupElement> {
        self.check(x)?;
        let coords = x
            .coords
            .iter()
            .zip(&self.moduli)
            .map(|(&a, &m)| if a == 0 { 0 } else { m - a })
            .collect();
        Ok(GroupElement { coords })
    }

    pub fn scalar_mul(&self, k: i64, x: &GroupElement) -> Result<GroupElement> {
        self.check(x)?;
        let coords = x
            .coords
            .iter()
            .zip(&self.moduli)
            .map(|(&a, &m)| {
                let m = m as i128;
                ((k as i128 * a as i128).rem_euclid(m)) as u32
            })
            .collect();
        Ok(GroupElement { coords })
    }

    /// Index of `x + y` for element indices `x`, `y`.
    #[inline]
    pub fn add_idx(&self, mut x: usize, mut y: usize) -> usize {
        let mut out = 0;
        for j in (0..self.moduli.len()).rev() {
            let m = self.moduli[j] as usize;
            let s = x % m + y % m;
            x /= m;
            y /= m;
            out += if s >= m { s - m } else { s } * self.strides[j];
        }
        out
    }

    /// Index of `-x`.
    #[inline]
    pub fn neg_idx(&self, mut x: usize) -> usize {
        let mut out = 0;
        for j in (0..self.moduli.len()).rev() {
            let m = self.moduli[j] as usize;
            let d = x % m;
            x /= m;
            out += if d == 0 { 0 } else { m - d } * self.strides[j];
        }
        out
    }

    #[inline]
    pub fn sub_idx(&self, x: usize, y: usize) -> usize {
        self.add_idx(x, self.neg_idx(y))
    }

    /// Index of `x + y` for every `y`, i.e. the permutation realising
    /// translation by `x`.
    pub fn translation_table(&self, x: usize) -> Vec<usize> {
        (0..self.order).map(|y| self.add_idx(x, y)).collect()
    }

    /// Phase of character `gamma` at `x` as a residue modulo the exponent:
    /// `gamma(x) = exp(2 pi i * phase / r)`.
    #[inline]
    pub fn phase_idx(&self, mut gamma: usize, mut x: usize) -> u64 {
        let r = self.exponent;
        let mut acc: u64 = 0;
        for j in (0..self.moduli.len()).rev() {
            let m = self.moduli[j] as usize;
            let c = (gamma % m) as u64;
            let a = (x % m) as u64;
            gamma /= m;
            x /= m;
            // (c * a mod m) * (r / m) < r
            acc += (c * a % m as u64) * (r / m as u64);
        }
        acc % r
    }
}

impl fmt::Debug for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupSpec({self})")
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.moduli.iter().map(|m| format!("Z{m}")).collect();
        f.write_str(&parts.join("x"))
    }
}

/// A coordinate vector; meaningful only together with a [`GroupSpec`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    coords: Vec<u32>,
}

impl GroupElement {
    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<u32> {
        self.coords
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A character of the group, identified with a dual coordinate vector:
/// `gamma(x) = exp(2 pi i sum_j c_j x_j / m_j)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Character {
    coords: Vec<u32>,
}

impl Character {
    pub fn new(spec: &GroupSpec, coords: Vec<u32>) -> Result<Self> {
        spec.check(&GroupElement {
            coords: coords.clone(),
        })?;
        Ok(Character { coords })
    }

    pub fn trivial(spec: &GroupSpec) -> Self {
        Character {
            coords: vec![0; spec.rank()],
        }
    }

    /// The character with the same mixed-radix index as an element.
    pub fn at(spec: &GroupSpec, index: usize) -> Result<Self> {
        Ok(Character {
            coords: spec.element_at(index)?.coords,
        })
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn index(&self, spec: &GroupSpec) -> Result<usize> {
        spec.index_of(&GroupElement {
            coords: self.coords.clone(),
        })
    }

    pub fn eval(&self, spec: &GroupSpec, x: &GroupElement) -> Result<Complex64> {
        let g = self.index(spec)?;
        let a = spec.index_of(x)?;
        Ok(root_of_unity(spec.phase_idx(g, a), spec.exponent()))
    }
}

/// `exp(2 pi i k / n)`.
pub(crate) fn root_of_unity(k: u64, n: u64) -> Complex64 {
    // exact values on the axes keep small-group results clean
    let k = k % n;
    if k == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if 2 * k == n {
        return Complex64::new(-1.0, 0.0);
    }
    if 4 * k == n {
        return Complex64::new(0.0, 1.0);
    }
    if 4 * k == 3 * n {
        return Complex64::new(0.0, -1.0);
    }
    Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(spec: &GroupSpec, c: &[u32]) -> GroupElement {
        spec.element(c.to_vec()).unwrap()
    }

    #[test]
    fn rejects_degenerate_moduli() {
        assert_eq!(GroupSpec::new(vec![2, 1]), Err(Error::InvalidModulus(1)));
        assert_eq!(GroupSpec::new(vec![0]), Err(Error::InvalidModulus(0)));
        assert_eq!(GroupSpec::new(vec![]), Err(Error::EmptyGroup));
    }

    #[test]
    fn order_and_exponent() {
        let g = GroupSpec::new(vec![2, 4, 3]).unwrap();
        assert_eq!(g.order(), 24);
        assert_eq!(g.exponent(), 12);
        assert_eq!(GroupSpec::power(2, 5).unwrap().exponent(), 2);
    }

    #[test]
    fn element_arith_examples() {
        let g = GroupSpec::new(vec![2, 4]).unwrap();
        assert_eq!(
            g.add(&el(&g, &[1, 1]), &el(&g, &[1, 3])).unwrap(),
            el(&g, &[0, 0])
        );
        assert_eq!(g.negate(&g.identity()).unwrap(), g.identity());
        assert_eq!(g.scalar_mul(4, &el(&g, &[1, 3])).unwrap(), g.identity());
        assert_eq!(g.scalar_mul(-1, &el(&g, &[1, 3])).unwrap(), el(&g, &[1, 1]));
    }

    #[test]
    fn mismatched_elements_are_rejected() {
        let g = GroupSpec::new(vec![2, 4]).unwrap();
        let bad = GroupElement { coords: vec![1] };
        assert!(matches!(g.add(&bad, &g.identity()), Err(Error::Arity { .. })));
        let out = GroupElement { coords: vec![2, 0] };
        assert!(matches!(
            g.negate(&out),
            Err(Error::CoordinateOutOfRange { position: 0, .. })
        ));
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let g = GroupSpec::power(2, 2).unwrap();
        let all: Vec<Vec<u32>> = g.elements().map(|e| e.into_coords()).collect();
        assert_eq!(all, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(g.index_of(&el(&g, &[1, 0])).unwrap(), 2);
        let z3 = GroupSpec::cyclic(3).unwrap();
        let all: Vec<Vec<u32>> = z3.elements().map(|e| e.into_coords()).collect();
        assert_eq!(all, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn index_roundtrip_and_sorted() {
        let g = GroupSpec::new(vec![3, 2, 5]).unwrap();
        let all: Vec<GroupElement> = g.elements().collect();
        assert_eq!(all.len(), g.order());
        for (i, e) in all.iter().enumerate() {
            assert_eq!(g.index_of(e).unwrap(), i);
        }
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn index_arithmetic_matches_coordinates() {
        let g = GroupSpec::new(vec![2, 3, 4]).unwrap();
        for i in 0..g.order() {
            let x = g.element_at(i).unwrap();
            assert_eq!(g.neg_idx(i), g.index_of(&g.negate(&x).unwrap()).unwrap());
            for j in 0..g.order() {
                let y = g.element_at(j).unwrap();
                let s = g.index_of(&g.add(&x, &y).unwrap()).unwrap();
                assert_eq!(g.add_idx(i, j), s);
                assert_eq!(g.add_idx(i, j), g.add_idx(j, i));
            }
        }
    }

    #[test]
    fn group_law_exhaustive_small() {
        for moduli in [vec![2, 2, 2], vec![4, 2], vec![3, 3], vec![8], vec![2, 6]] {
            let g = GroupSpec::new(moduli).unwrap();
            let n = g.order();
            for a in 0..n {
                for b in 0..n {
                    assert_eq!(g.add_idx(a, b), g.add_idx(b, a));
                    for c in 0..n {
                        assert_eq!(
                            g.add_idx(g.add_idx(a, b), c),
                            g.add_idx(a, g.add_idx(b, c))
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn exponent_is_minimal() {
        for moduli in [vec![2, 4], vec![3, 9], vec![2, 3, 5], vec![6, 4]] {
            let g = GroupSpec::new(moduli).unwrap();
            let r = g.exponent() as i64;
            assert!(g
                .elements()
                .all(|x| g.scalar_mul(r, &x).unwrap() == g.identity()));
            for smaller in 1..r {
                assert!(
                    g.elements()
                        .any(|x| g.scalar_mul(smaller, &x).unwrap() != g.identity()),
                    "{g}: {smaller} annihilates everything"
                );
            }
        }
    }

    #[test]
    fn character_values() {
        let z4 = GroupSpec::cyclic(4).unwrap();
        let g = Character::new(&z4, vec![1]).unwrap();
        let v = g.eval(&z4, &el(&z4, &[1])).unwrap();
        assert!((v - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        let z2 = GroupSpec::cyclic(2).unwrap();
        let g = Character::new(&z2, vec![1]).unwrap();
        assert_eq!(g.eval(&z2, &el(&z2, &[1])).unwrap(), Complex64::new(-1.0, 0.0));
        let t = Character::trivial(&z4);
        for x in z4.elements() {
            assert_eq!(t.eval(&z4, &x).unwrap(), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn characters_are_multiplicative_unit_modulus() {
        for moduli in [vec![2, 4], vec![3, 3], vec![5, 2], vec![12]] {
            let g = GroupSpec::new(moduli).unwrap();
            for c in 0..g.order() {
                let gamma = Character::at(&g, c).unwrap();
                for x in g.elements() {
                    let gx = gamma.eval(&g, &x).unwrap();
                    assert!((gx.norm() - 1.0).abs() <= 1e-12);
                    for y in g.elements() {
                        let gy = gamma.eval(&g, &y).unwrap();
                        let gxy = gamma.eval(&g, &g.add(&x, &y).unwrap()).unwrap();
                        assert!((gxy - gx * gy).norm() <= 1e-12);
                    }
                }
            }
        }
    }
}
