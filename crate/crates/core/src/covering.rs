//! Covering algorithms: the greedy statistical cover, Ruzsa's covering by a
//! maximal separated set, and exact verifiers for the resulting
//! certificates.
//!
//! All thresholds are compared as exact rationals.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::func::RationalFunc;
use crate::set::GroupSet;
use crate::{Error, Rational, Result};

fn rat(n: usize) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Output of [`statistical_cover`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverCertificate {
    pub x: GroupSet,
    pub delta: Rational,
    /// `|(x + B) ∩ (X + B)|` for each `x` in `A`, keyed by element index.
    pub per_x_coverage: BTreeMap<usize, usize>,
    /// Elements in the order they were added; `trace[0]` is the seed.
    pub trace: Vec<usize>,
    /// `|X_i + B|` after each addition, aligned with `trace`.
    pub sumset_sizes: Vec<usize>,
    pub b_len: usize,
    /// `K = |A + B| / |B|`.
    pub k: Rational,
    /// `(K - 1) / delta + 1`.
    pub size_bound: Rational,
}

impl CoverCertificate {
    /// `(1 - delta) |B|`.
    pub fn threshold(&self) -> Rational {
        (Rational::one() - &self.delta) * rat(self.b_len)
    }

    pub fn coverage_ok(&self) -> bool {
        let t = self.threshold();
        self.per_x_coverage.values().all(|&c| rat(c) >= t)
    }

    pub fn size_ok(&self) -> bool {
        rat(self.x.len()) <= self.size_bound
    }

    /// Replays the growth bound `|X_i + B| > delta |B| i + |B|` for `i >= 1`.
    pub fn growth_ok(&self) -> bool {
        let b = rat(self.b_len);
        self.sumset_sizes
            .iter()
            .enumerate()
            .all(|(i, &s)| i == 0 || rat(s) > &self.delta * &b * rat(i) + &b)
    }

    pub fn is_valid(&self) -> bool {
        self.coverage_ok() && self.size_ok()
    }
}

fn check_delta(delta: &Rational, allow_zero: bool) -> Result<()> {
    let ok_low = if allow_zero {
        *delta >= Rational::zero()
    } else {
        *delta > Rational::zero()
    };
    if ok_low && *delta <= Rational::one() {
        Ok(())
    } else {
        Err(Error::domain(format!("delta = {delta} out of range")))
    }
}

/// Greedy statistical covering of `A` by translates of `B`.
///
/// Starts from the smallest element of `A` and repeatedly adds the first
/// `x` in `A` (canonical order) with `|(x + B) ∩ (X + B)| < (1 - delta)|B|`.
pub fn statistical_cover(a: &GroupSet, b: &GroupSet, delta: &Rational) -> Result<CoverCertificate> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("statistical cover needs non-empty sets"));
    }
    check_delta(delta, false)?;
    let spec = a.spec().clone();
    let ab = a.sumset(b)?;
    let k = Rational::new(BigInt::from(ab.len()), BigInt::from(b.len()));
    let threshold = (Rational::one() - delta) * rat(b.len());

    let x0 = a.min_idx().expect("non-empty");
    let mut x = GroupSet::empty(spec.clone());
    x.insert_idx(x0);
    let mut xb = b.translate_idx(x0);
    let mut trace = vec![x0];
    let mut sumset_sizes = vec![xb.len()];
    let a_members = a.to_indices();

    loop {
        let violator = a_members.iter().copied().find(|&cand| {
            let c = b.translate_idx(cand).intersection_len(&xb).expect("same group");
            rat(c) < threshold
        });
        match violator {
            Some(v) => {
                x.insert_idx(v);
                xb = xb.union(&b.translate_idx(v))?;
                trace.push(v);
                sumset_sizes.push(xb.len());
            }
            None => break,
        }
    }

    let per_x_coverage = a_members
        .iter()
        .map(|&c| (c, b.translate_idx(c).intersection_len(&xb).expect("same group")))
        .collect();
    let size_bound = (&k - Rational::one()) / delta + Rational::one();
    Ok(CoverCertificate {
        x,
        delta: delta.clone(),
        per_x_coverage,
        trace,
        sumset_sizes,
        b_len: b.len(),
        k,
        size_bound,
    })
}

/// Output of [`ruzsa_cover`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuzsaCover {
    pub x: GroupSet,
    pub sumset_len: usize,
    pub b_len: usize,
    /// `A ⊆ X + B - B`, checked.
    pub covered: bool,
    /// Translates `x + B`, `x ∈ X`, pairwise disjoint.
    pub separated: bool,
}

impl RuzsaCover {
    /// `|X| <= |A + B| / |B|`, compared as `|X||B| <= |A + B|`.
    pub fn size_ok(&self) -> bool {
        self.x.len() * self.b_len <= self.sumset_len
    }

    pub fn is_valid(&self) -> bool {
        self.covered && self.separated && self.size_ok()
    }
}

/// Ruzsa covering via a maximal `B`-separated subset of `A`, chosen greedily
/// in canonical order.
pub fn ruzsa_cover(a: &GroupSet, b: &GroupSet) -> Result<RuzsaCover> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("Ruzsa cover needs non-empty sets"));
    }
    let spec = a.spec().clone();
    let sumset_len = a.sumset(b)?.len();
    let mut x = GroupSet::empty(spec.clone());
    let mut xb = GroupSet::empty(spec.clone());
    for cand in a.indices() {
        let t = b.translate_idx(cand);
        if t.intersection_len(&xb)? == 0 {
            x.insert_idx(cand);
            xb = xb.union(&t)?;
        }
    }
    let covered = a.is_subset(&x.sumset(&b.difference_set(b)?)?)?;
    let translates: Vec<GroupSet> = x.indices().map(|i| b.translate_idx(i)).collect();
    let separated = translates.iter().enumerate().all(|(i, s)| {
        translates[i + 1..]
            .iter()
            .all(|t| s.intersection_len(t).expect("same group") == 0)
    });
    let out = RuzsaCover {
        x,
        sumset_len,
        b_len: b.len(),
        covered,
        separated,
    };
    if !out.covered {
        return Err(Error::internal("maximal separated set does not cover A"));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverageCheck {
    pub holds: bool,
    /// `min_{x in A} |(x + A) ∩ (X + A)| / |A|`.
    pub min_fraction: Rational,
}

/// Whether `A` is `(1 - delta)`-covered by `X`.
pub fn verify_covered(a: &GroupSet, x: &GroupSet, delta: &Rational) -> Result<CoverageCheck> {
    if a.is_empty() {
        return Err(Error::domain("coverage of the empty set"));
    }
    check_delta(delta, true)?;
    let xa = x.sumset(a)?;
    let min = a
        .indices()
        .map(|c| a.translate_idx(c).intersection_len(&xa).expect("same group"))
        .min()
        .expect("non-empty");
    let min_fraction = Rational::new(BigInt::from(min), BigInt::from(a.len()));
    Ok(CoverageCheck {
        holds: min_fraction >= Rational::one() - delta,
        min_fraction,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IteratedCoverCheck {
    /// `<1_A^{*(k+1)}, 1_{kX + A}>`.
    pub lhs: Rational,
    /// `(1 - delta)^k |A|^{k+1}`.
    pub rhs: Rational,
    pub holds: bool,
    /// Whether `A` is `(1 - delta)`-covered by `X` and `0 ∈ X`.
    pub precondition: bool,
}

/// Checks `<1_A * ... * 1_A, 1_{kX + A}> >= (1 - delta)^k |A|^{k+1}` with
/// `k + 1` convolution factors. The inequality is evaluated even when the
/// precondition fails.
pub fn verify_iterated_cover(
    a: &GroupSet,
    x: &GroupSet,
    delta: &Rational,
    k: usize,
) -> Result<IteratedCoverCheck> {
    let cov = verify_covered(a, x, delta)?;
    let precondition = cov.holds && x.contains_idx(0);
    let ind = RationalFunc::indicator(a);
    let mut power = ind.clone();
    for _ in 0..k {
        power = power.convolve(&ind)?;
    }
    let target = x.k_fold_sum(k).sumset(a)?;
    let lhs = power.inner(&RationalFunc::indicator(&target))?;
    let base = Rational::one() - delta;
    let rhs = num_traits::pow(base, k) * num_traits::pow(rat(a.len()), k + 1);
    Ok(IteratedCoverCheck {
        holds: lhs >= rhs,
        lhs,
        rhs,
        precondition,
    })
}
