//! Fourier analysis on `G`: the transform over the dual group, large
//! spectra and annihilators.
//!
//! The dual group is identified with `G` coordinatewise, so characters share
//! the element index space. Floating point is confined to this module;
//! annihilators are decided by exact integer congruences.

use std::sync::Arc;

use num_complex::Complex64;

use crate::func::RationalFunc;
use crate::group::{root_of_unity, Character, GroupSpec};
use crate::set::GroupSet;
use crate::{Error, Result};

/// Orders above this use the per-coordinate transform by default.
pub const NAIVE_DFT_LIMIT: usize = 1 << 14;

/// Relative guard band for spectrum membership. Characters whose squared
/// magnitude falls short of the threshold by less than this fraction are
/// included.
pub const SPECTRUM_GUARD: f64 = 1e-9;

/// `f^` as a dense vector indexed by character index.
#[derive(Clone, Debug, PartialEq)]
pub struct DualFunc {
    spec: Arc<GroupSpec>,
    values: Vec<Complex64>,
}

impl DualFunc {
    pub fn spec(&self) -> &Arc<GroupSpec> {
        &self.spec
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn at(&self, gamma: usize) -> Complex64 {
        self.values[gamma]
    }

    pub fn at_char(&self, gamma: &Character) -> Result<Complex64> {
        Ok(self.values[gamma.index(&self.spec)?])
    }
}

/// `f^(gamma) = sum_x f(x) conj(gamma(x))`.
pub fn dft(f: &RationalFunc) -> DualFunc {
    dft_real(f.spec().clone(), &f.to_f64())
}

pub fn dft_real(spec: Arc<GroupSpec>, values: &[f64]) -> DualFunc {
    if spec.order() > NAIVE_DFT_LIMIT {
        dft_separable(spec, values)
    } else {
        dft_naive(spec, values)
    }
}

/// Direct `O(|G|^2)` evaluation of the defining sum.
pub fn dft_naive(spec: Arc<GroupSpec>, values: &[f64]) -> DualFunc {
    let n = spec.order();
    assert_eq!(values.len(), n);
    let r = spec.exponent();
    let roots: Vec<Complex64> = (0..r).map(|k| root_of_unity(k, r).conj()).collect();
    // Phase weights a_j * (r / m_j) per support point, so the inner loop is
    // a short dot product with the character's coordinates.
    let moduli = spec.moduli();
    let support: Vec<(Vec<u64>, f64)> = values
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, v)| *v != 0.0)
        .map(|(x, v)| {
            let c = spec.element_at_unchecked(x);
            let w = c
                .coords()
                .iter()
                .zip(moduli)
                .map(|(&a, &m)| a as u64 * (r / m as u64))
                .collect();
            (w, v)
        })
        .collect();
    let out = (0..n)
        .map(|gamma| {
            let c = spec.element_at_unchecked(gamma);
            let c = c.coords();
            support
                .iter()
                .map(|(w, v)| {
                    let phase = c.iter().zip(w).map(|(&cj, &wj)| cj as u64 * wj).sum::<u64>() % r;
                    roots[phase as usize] * *v
                })
                .sum()
        })
        .collect();
    DualFunc { spec, values: out }
}

/// The same transform computed one cyclic factor at a time.
pub fn dft_separable(spec: Arc<GroupSpec>, values: &[f64]) -> DualFunc {
    let n = spec.order();
    assert_eq!(values.len(), n);
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let moduli = spec.moduli().to_vec();
    let mut stride = n;
    let mut line = Vec::new();
    for &m in &moduli {
        let m = m as usize;
        stride /= m;
        let roots: Vec<Complex64> = (0..m as u64)
            .map(|k| root_of_unity(k, m as u64).conj())
            .collect();
        let block = stride * m;
        for base in (0..n).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                line.clear();
                line.extend((0..m).map(|t| data[start + t * stride]));
                for k in 0..m {
                    data[start + k * stride] =
                        (0..m).map(|t| line[t] * roots[(k * t) % m]).sum();
                }
            }
        }
    }
    DualFunc { spec, values: data }
}

/// A set of characters, stored over character indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharSet {
    inner: GroupSet,
}

impl CharSet {
    pub fn empty(spec: Arc<GroupSpec>) -> Self {
        CharSet {
            inner: GroupSet::empty(spec),
        }
    }

    pub fn all(spec: Arc<GroupSpec>) -> Self {
        CharSet {
            inner: GroupSet::full(spec),
        }
    }

    pub fn trivial_only(spec: Arc<GroupSpec>) -> Self {
        CharSet {
            inner: GroupSet::identity(spec),
        }
    }

    pub fn from_indices(spec: Arc<GroupSpec>, idx: impl IntoIterator<Item = usize>) -> Result<Self> {
        Ok(CharSet {
            inner: GroupSet::from_indices(spec, idx)?,
        })
    }

    pub fn spec(&self) -> &Arc<GroupSpec> {
        self.inner.spec()
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    pub fn contains_idx(&self, gamma: usize) -> bool {
        self.inner.contains_idx(gamma)
    }

    pub fn contains_trivial(&self) -> bool {
        self.inner.contains_idx(0)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.inner.indices()
    }

    pub fn characters(&self) -> Vec<Character> {
        self.inner
            .indices()
            .map(|i| Character::at(self.spec(), i).expect("index in range"))
            .collect()
    }

    pub fn union(&self, other: &CharSet) -> Result<CharSet> {
        Ok(CharSet {
            inner: self.inner.union(&other.inner)?,
        })
    }

    pub fn is_subset(&self, other: &CharSet) -> Result<bool> {
        self.inner.is_subset(&other.inner)
    }

    /// Group generated by the characters, itself a `CharSet`.
    pub fn span(&self) -> CharSet {
        CharSet {
            inner: self.inner.closure(),
        }
    }
}

/// `Spec_eps(f) = {gamma : |f^(gamma)| >= eps ||f||_1}` for `eps` in `(0, 1]`.
pub fn spectrum(f: &RationalFunc, eps: f64) -> Result<CharSet> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::domain(format!("spectrum parameter {eps} outside (0, 1]")));
    }
    spectrum_unchecked(f, eps)
}

/// Same as [`spectrum`] without the range restriction on `eps`; any
/// positive threshold is accepted.
pub fn spectrum_unchecked(f: &RationalFunc, eps: f64) -> Result<CharSet> {
    if f.is_zero() {
        return Err(Error::domain("large spectrum of the zero function"));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::domain(format!("spectrum parameter {eps} is not positive")));
    }
    let l1 = crate::func::rational_to_f64(&f.l1());
    Ok(large_spectrum(&dft(f), l1, eps))
}

/// Threshold test on a precomputed transform. Inclusion uses
/// `|f^|^2 >= (eps l1)^2 (1 - SPECTRUM_GUARD)`.
pub fn large_spectrum(fhat: &DualFunc, l1: f64, eps: f64) -> CharSet {
    let t = (eps * l1) * (eps * l1) * (1.0 - SPECTRUM_GUARD);
    let idx = fhat
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm_sqr() >= t)
        .map(|(i, _)| i);
    CharSet::from_indices(fhat.spec.clone(), idx).expect("indices in range")
}

/// `Gamma^perp = {x : gamma(x) = 1 for all gamma in Gamma}`, decided by
/// `sum_j c_j x_j / m_j` being an integer.
pub fn annihilator(gamma: &CharSet) -> GroupSet {
    let spec = gamma.spec().clone();
    let gens = reduced_generators(gamma);
    let idx = (0..spec.order()).filter(|&x| gens.iter().all(|&g| spec.phase_idx(g, x) == 0));
    GroupSet::from_indices(spec.clone(), idx).expect("indices in range")
}

/// A generating subset of `<Gamma>`; the annihilator only depends on the
/// span, and this keeps the membership scan short.
fn reduced_generators(gamma: &CharSet) -> Vec<usize> {
    let spec = gamma.spec().clone();
    let mut span = GroupSet::identity(spec.clone());
    let mut gens = Vec::new();
    for g in gamma.indices() {
        if !span.contains_idx(g) {
            gens.push(g);
            span = GroupSet::from_indices(spec.clone(), gens.iter().copied())
                .expect("in range")
                .closure();
        }
    }
    gens
}

/// `V^perp` inside the dual group: characters trivial on every member of `v`.
pub fn orthogonal(v: &GroupSet) -> CharSet {
    let spec = v.spec().clone();
    let members = v.to_indices();
    let idx = (0..spec.order()).filter(|&g| members.iter().all(|&x| spec.phase_idx(g, x) == 0));
    CharSet::from_indices(spec.clone(), idx).expect("in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio;

    fn g(m: &[u32]) -> Arc<GroupSpec> {
        Arc::new(GroupSpec::new(m.to_vec()).unwrap())
    }

    fn close(a: Complex64, re: f64, im: f64) -> bool {
        (a - Complex64::new(re, im)).norm() < 1e-12
    }

    #[test]
    fn dft_examples() {
        let z2 = g(&[2]);
        let full = dft(&RationalFunc::indicator(&GroupSet::full(z2.clone())));
        assert!(close(full.at(0), 2.0, 0.0) && close(full.at(1), 0.0, 0.0));
        let zero = dft(&RationalFunc::point_mass_idx(z2.clone(), 0));
        assert!(close(zero.at(0), 1.0, 0.0) && close(zero.at(1), 1.0, 0.0));
        let one = dft(&RationalFunc::point_mass_idx(z2.clone(), 1));
        assert!(close(one.at(0), 1.0, 0.0) && close(one.at(1), -1.0, 0.0));
    }

    #[test]
    fn trivial_coefficient_is_total_mass() {
        let s = g(&[3, 4]);
        let vals: Vec<_> = (0..12).map(|i| ratio((i * 7 % 5) - 2, 1 + i % 3)).collect();
        let f = RationalFunc::from_values(s, &vals).unwrap();
        let t = crate::func::rational_to_f64(&f.total());
        assert!((dft(&f).at(0).re - t).abs() <= 1e-9 * crate::func::rational_to_f64(&f.l1()));
    }

    #[test]
    fn separable_matches_naive() {
        for m in [vec![2, 3, 4], vec![5, 5], vec![2, 2, 2, 2, 2], vec![7, 3, 2]] {
            let s = g(&m);
            let vals: Vec<f64> = (0..s.order()).map(|i| ((i * 37 % 11) as f64) / 7.0 - 0.6).collect();
            let a = dft_naive(s.clone(), &vals);
            let b = dft_separable(s.clone(), &vals);
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).norm() <= 1e-9 * (1.0 + x.norm()));
            }
        }
    }

    #[test]
    fn spectrum_examples() {
        let s = g(&[2, 2]);
        // V = Z_2 x {0}
        let v = GroupSet::from_indices(s.clone(), [0, 2]).unwrap();
        let spec = spectrum(&RationalFunc::indicator(&v), 0.5).unwrap();
        assert_eq!(spec, orthogonal(&v));
        assert_eq!(spec.len(), 2);
        let full = RationalFunc::indicator(&GroupSet::full(s.clone()));
        assert_eq!(spectrum(&full, 0.5).unwrap(), CharSet::trivial_only(s.clone()));
        let a = GroupSet::from_indices(s.clone(), [1, 2, 3]).unwrap();
        assert!(spectrum(&RationalFunc::indicator(&a), 1.0).unwrap().contains_trivial());
    }

    #[test]
    fn spectrum_errors() {
        let s = g(&[4]);
        let zero = RationalFunc::zero(s.clone());
        assert!(matches!(spectrum(&zero, 0.5), Err(Error::Domain(_))));
        let one = RationalFunc::point_mass_idx(s, 0);
        assert!(matches!(spectrum(&one, 0.0), Err(Error::Domain(_))));
        assert!(matches!(spectrum(&one, 1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn annihilator_examples() {
        let s = g(&[2, 2]);
        assert_eq!(annihilator(&CharSet::trivial_only(s.clone())), GroupSet::full(s.clone()));
        assert_eq!(annihilator(&CharSet::all(s.clone())), GroupSet::identity(s.clone()));
        let v = GroupSet::from_indices(s.clone(), [0, 2]).unwrap();
        assert_eq!(annihilator(&orthogonal(&v)), v);
        // empty Gamma annihilates everything
        assert_eq!(annihilator(&CharSet::empty(s.clone())), GroupSet::full(s));
    }

    #[test]
    fn annihilator_by_exhaustive_evaluation() {
        let s = g(&[2, 6]);
        for mask in [0b1u32, 0b100110, 0b1000_0000_0001, 0b0101_0101_0000] {
            let gamma = CharSet::from_indices(s.clone(), (0..12).filter(|i| mask >> i & 1 == 1)).unwrap();
            let ann = annihilator(&gamma);
            for x in s.elements() {
                let expect = gamma
                    .characters()
                    .iter()
                    .all(|c| (c.eval(&s, &x).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-9);
                assert_eq!(ann.contains(&x).unwrap(), expect);
            }
            assert!(ann.is_subgroup());
        }
    }
}
