//! Generalized sub-product chains.
//!
//! A chain over a base set `A` is a sequence of tuple sets
//! `L_0, ..., L_k` with `L_0 = {()}`, `L_i ⊆ A^i`, and the fibre condition
//! that every prefix in `L_{i-1}` extends into `L_i` by at least
//! `nu_i |A|` elements of `A`. Levels are stored explicitly, so every
//! certificate here can be re-checked by counting.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::covering::verify_covered;
use crate::func::{smooth_by_tuple, RationalFunc};
use crate::set::GroupSet;
use crate::{Error, Rational, Result};

pub type Tuple = Vec<usize>;

/// Size limits for explicit chains.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainLimits {
    pub max_k: usize,
    /// Cap on `|A|^k`.
    pub max_tuples: usize,
}

impl Default for ChainLimits {
    fn default() -> Self {
        ChainLimits {
            max_k: 4,
            max_tuples: 1_000_000,
        }
    }
}

/// Configured limits may not exceed these.
pub const HARD_LIMITS: ChainLimits = ChainLimits {
    max_k: 8,
    max_tuples: 1 << 24,
};

impl ChainLimits {
    pub fn check(&self, base_len: usize, k: usize) -> Result<()> {
        if self.max_k > HARD_LIMITS.max_k || self.max_tuples > HARD_LIMITS.max_tuples {
            return Err(Error::LimitExceeded(format!(
                "chain limits {self:?} exceed the hard limits {HARD_LIMITS:?}"
            )));
        }
        if k > self.max_k {
            return Err(Error::LimitExceeded(format!("chain length {k} > {}", self.max_k)));
        }
        let total = (base_len as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
        if total > self.max_tuples as u128 {
            return Err(Error::LimitExceeded(format!(
                "|A|^k = {base_len}^{k} exceeds {}",
                self.max_tuples
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    pub base: GroupSet,
    pub levels: Vec<BTreeSet<Tuple>>,
    pub nu: Vec<Rational>,
}

impl Chain {
    pub fn k(&self) -> usize {
        self.nu.len()
    }

    pub fn top(&self) -> &BTreeSet<Tuple> {
        self.levels.last().expect("level 0 always present")
    }

    /// `(prod nu_i) |A|^k`, the guaranteed size of the top level.
    pub fn size_lower_bound(&self) -> Rational {
        let p: Rational = self.nu.iter().fold(Rational::one(), |acc, v| acc * v);
        p * num_traits::pow(
            Rational::from_integer(BigInt::from(self.base.len())),
            self.k(),
        )
    }

    pub fn size_bound_holds(&self) -> bool {
        Rational::from_integer(BigInt::from(self.top().len())) >= self.size_lower_bound()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axiom {
    /// Level count or density vector length disagree with `k`.
    Shape,
    /// Some `nu_i` lies outside `(0, 1]`.
    Density,
    /// `L_0 != {()}`.
    Start,
    /// A tuple in `L_i` has the wrong length or leaves `A`.
    Powers,
    /// A prefix in `L_{i-1}` has fewer than `nu_i |A|` extensions.
    SubMartingale,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub axiom: Axiom,
    pub level: usize,
    pub witness: Tuple,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChainVerdict {
    Valid,
    Violated(Violation),
}

impl ChainVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, ChainVerdict::Valid)
    }
}

fn violated(axiom: Axiom, level: usize, witness: Tuple) -> ChainVerdict {
    ChainVerdict::Violated(Violation {
        axiom,
        level,
        witness,
    })
}

/// Exact check of the three chain axioms. Prefixes outside `L_{i-1}` are
/// unconstrained.
pub fn verify_chain(c: &Chain) -> ChainVerdict {
    let k = c.k();
    if c.levels.len() != k + 1 {
        return violated(Axiom::Shape, c.levels.len(), vec![]);
    }
    for (i, v) in c.nu.iter().enumerate() {
        if *v <= Rational::zero() || *v > Rational::one() {
            return violated(Axiom::Density, i + 1, vec![]);
        }
    }
    if c.levels[0].len() != 1 || !c.levels[0].contains(&Vec::new()) {
        let w = c.levels[0].iter().find(|t| !t.is_empty()).cloned().unwrap_or_default();
        return violated(Axiom::Start, 0, w);
    }
    for (i, level) in c.levels.iter().enumerate().skip(1) {
        if let Some(t) = level
            .iter()
            .find(|t| t.len() != i || !t.iter().all(|&a| c.base.contains_idx(a)))
        {
            return violated(Axiom::Powers, i, t.clone());
        }
    }
    let a_len = Rational::from_integer(BigInt::from(c.base.len()));
    for i in 1..=k {
        let mut counts: HashMap<&[usize], usize> = HashMap::new();
        for t in &c.levels[i] {
            *counts.entry(&t[..i - 1]).or_default() += 1;
        }
        let need = &c.nu[i - 1] * &a_len;
        for p in &c.levels[i - 1] {
            let have = counts.get(p.as_slice()).copied().unwrap_or(0);
            if Rational::from_integer(BigInt::from(have)) < need {
                return violated(Axiom::SubMartingale, i, p.clone());
            }
        }
    }
    ChainVerdict::Valid
}

fn extend(level: &BTreeSet<Tuple>, with: &[usize]) -> BTreeSet<Tuple> {
    level
        .iter()
        .flat_map(|t| {
            with.iter().map(move |&a| {
                let mut u = t.clone();
                u.push(a);
                u
            })
        })
        .collect()
}

fn start_level() -> BTreeSet<Tuple> {
    BTreeSet::from([Vec::new()])
}

/// `A_1 x ... x A_k` with levels `A_1 x ... x A_i` and
/// `nu_i = |A_i| / |A|`.
pub fn product_chain(base: &GroupSet, parts: &[GroupSet], limits: ChainLimits) -> Result<Chain> {
    if base.is_empty() {
        return Err(Error::domain("chain over the empty set"));
    }
    limits.check(base.len(), parts.len())?;
    let mut levels = vec![start_level()];
    let mut nu = Vec::new();
    for (i, p) in parts.iter().enumerate() {
        if p.is_empty() || !p.is_subset(base)? {
            return Err(Error::precondition(format!(
                "factor {} must be a non-empty subset of the base",
                i + 1
            )));
        }
        let next = extend(levels.last().expect("non-empty"), &p.to_indices());
        levels.push(next);
        nu.push(Rational::new(BigInt::from(p.len()), BigInt::from(base.len())));
    }
    Ok(Chain {
        base: base.clone(),
        levels,
        nu,
    })
}

/// The full power chain `A^i`, `nu = 1`.
pub fn full_chain(base: &GroupSet, k: usize, limits: ChainLimits) -> Result<Chain> {
    product_chain(base, &vec![base.clone(); k], limits)
}

/// Levelwise intersection. With `nu = 1 - eta`, `nu' = 1 - eta'` the result
/// carries `1 - (eta + eta')`.
pub fn intersect_chains(c: &Chain, d: &Chain) -> Result<Chain> {
    if c.base != d.base || c.k() != d.k() || c.levels.len() != d.levels.len() {
        return Err(Error::precondition("chains have different bases or lengths"));
    }
    let one = Rational::one();
    let mut nu = Vec::with_capacity(c.k());
    for (i, (a, b)) in c.nu.iter().zip(&d.nu).enumerate() {
        let v = a + b - &one;
        if v <= Rational::zero() {
            return Err(Error::precondition(format!(
                "eta + eta' >= 1 at level {}",
                i + 1
            )));
        }
        nu.push(v);
    }
    let levels = c
        .levels
        .iter()
        .zip(&d.levels)
        .map(|(x, y)| x.intersection(y).cloned().collect())
        .collect();
    Ok(Chain {
        base: c.base.clone(),
        levels,
        nu,
    })
}

/// Chain certifying that `{a in A^k : x + sum_{s in S} a_s in |S|X + A}`
/// contains a `nu(S)`-large sub-product, `nu(S)_i = 1 - delta 1_S(i)`.
///
/// `s_set` holds 1-based positions. Built by recursion on the largest
/// element of `S`.
pub fn covering_chain(
    a: &GroupSet,
    x_set: &GroupSet,
    delta: &Rational,
    x: usize,
    s_set: &BTreeSet<usize>,
    k: usize,
    limits: ChainLimits,
) -> Result<Chain> {
    if a.is_empty() {
        return Err(Error::domain("chain over the empty set"));
    }
    if *delta < Rational::zero() || *delta >= Rational::one() {
        return Err(Error::domain(format!("delta = {delta} outside [0, 1)")));
    }
    if !x_set.contains_idx(0) {
        return Err(Error::precondition("X must contain the identity"));
    }
    if !a.contains_idx(x) {
        return Err(Error::precondition("x must lie in A"));
    }
    if s_set.iter().any(|&s| s == 0 || s > k) {
        return Err(Error::precondition("S must be a subset of {1..k}"));
    }
    if !verify_covered(a, x_set, delta)?.holds {
        return Err(Error::domain("A is not (1 - delta)-covered by X"));
    }
    limits.check(a.len(), k)?;
    let members = a.to_indices();
    let levels = build_covering_levels(a, x_set, &members, x, s_set, k)?;
    let nu = (1..=k)
        .map(|i| {
            if s_set.contains(&i) {
                Rational::one() - delta
            } else {
                Rational::one()
            }
        })
        .collect();
    Ok(Chain {
        base: a.clone(),
        levels,
        nu,
    })
}

fn build_covering_levels(
    a: &GroupSet,
    x_set: &GroupSet,
    members: &[usize],
    x: usize,
    s_set: &BTreeSet<usize>,
    k: usize,
) -> Result<Vec<BTreeSet<Tuple>>> {
    let spec = a.spec();
    let Some(&j) = s_set.iter().next_back() else {
        let mut levels = vec![start_level()];
        for _ in 0..k {
            let next = extend(levels.last().expect("non-empty"), members);
            levels.push(next);
        }
        return Ok(levels);
    };
    let mut smaller = s_set.clone();
    smaller.remove(&j);
    let prev = build_covering_levels(a, x_set, members, x, &smaller, k)?;

    let witness_pool = x_set.k_fold_sum(smaller.len());
    let target = x_set.k_fold_sum(s_set.len()).sumset(a)?;
    let xa = x_set.sumset(a)?;

    let mut levels: Vec<BTreeSet<Tuple>> = prev[..j].to_vec();
    let mut level_j = BTreeSet::new();
    for p in &prev[j - 1] {
        let w = smaller
            .iter()
            .fold(x, |acc, &s| spec.add_idx(acc, p[s - 1]));
        // U(p) in |S'|X with w - U in A
        let u = witness_pool
            .indices()
            .find(|&u| a.contains_idx(spec.sub_idx(w, u)))
            .ok_or_else(|| {
                Error::internal(format!("no |S'|X witness for prefix {p:?} of covering chain"))
            })?;
        let shifted = spec.sub_idx(w, u);
        for &m in members {
            let lands = target.contains_idx(spec.add_idx(w, m));
            if xa.contains_idx(spec.add_idx(shifted, m)) && !lands {
                return Err(Error::internal("witness extension escapes |S|X + A"));
            }
            if lands {
                let mut t = p.clone();
                t.push(m);
                level_j.insert(t);
            }
        }
    }
    levels.push(level_j);
    for _ in j + 1..=k {
        let next = extend(levels.last().expect("non-empty"), members);
        levels.push(next);
    }
    Ok(levels)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnergyCheck {
    /// `sum_{a in L_k} ||1_A * mu_a||_2^2`.
    pub lhs: Rational,
    /// `(1 - eta)^{2k} (1 - delta)^{2k} |A|^{k+1} / |kX|`.
    pub rhs: Rational,
    pub holds: bool,
    pub kx_len: usize,
    /// `|kX + A|`, recorded alongside `|kX| |A|`.
    pub kx_plus_a_len: usize,
    pub precondition: bool,
    pub precondition_notes: Vec<String>,
}

/// Energy lower bound over the top level of a `(1 - eta)`-large chain.
/// Values are computed even if a precondition fails.
pub fn energy_bound_check(
    a: &GroupSet,
    x_set: &GroupSet,
    chain: &Chain,
    delta: &Rational,
    eta: &Rational,
) -> Result<EnergyCheck> {
    let half = Rational::new(BigInt::from(1), BigInt::from(2));
    let zero = Rational::zero();
    let one = Rational::one();
    let k = chain.k();
    let mut notes = Vec::new();
    if *delta < zero || *delta >= half {
        notes.push(format!("delta = {delta} outside [0, 1/2)"));
    }
    if *eta < zero || *eta >= half {
        notes.push(format!("eta = {eta} outside [0, 1/2)"));
    }
    if !x_set.contains_idx(0) {
        notes.push("identity not in X".into());
    }
    if !verify_covered(a, x_set, delta)?.holds {
        notes.push("A is not (1 - delta)-covered by X".into());
    }
    if chain.base != *a {
        notes.push("chain base differs from A".into());
    }
    if let ChainVerdict::Violated(v) = verify_chain(chain) {
        notes.push(format!("chain fails {:?} at level {}", v.axiom, v.level));
    }
    if chain.nu.iter().any(|v| *v < &one - eta) {
        notes.push("chain density below 1 - eta".into());
    }

    let ind = RationalFunc::indicator(a);
    let lhs = chain
        .top()
        .iter()
        .map(|t| smooth_by_tuple(&ind, t).l2_sq())
        .fold(Rational::zero(), |acc, v| acc + v);
    let kx = x_set.k_fold_sum(k);
    let kx_plus_a_len = kx.sumset(a)?.len();
    let rhs = num_traits::pow(&one - eta, 2 * k)
        * num_traits::pow(&one - delta, 2 * k)
        * num_traits::pow(Rational::from_integer(BigInt::from(a.len())), k + 1)
        / Rational::from_integer(BigInt::from(kx.len()));
    Ok(EnergyCheck {
        holds: lhs >= rhs,
        lhs,
        rhs,
        kx_len: kx.len(),
        kx_plus_a_len,
        precondition: notes.is_empty(),
        precondition_notes: notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;
    use crate::ratio;
    use std::sync::Arc;

    fn z(m: u32, idx: &[usize]) -> GroupSet {
        let g = Arc::new(GroupSpec::cyclic(m).unwrap());
        GroupSet::from_indices(g, idx.iter().copied()).unwrap()
    }

    fn lim() -> ChainLimits {
        ChainLimits::default()
    }

    #[test]
    fn product_chain_examples() {
        let a = z(7, &[0, 1, 3, 5]);
        let c = full_chain(&a, 3, lim()).unwrap();
        assert!(verify_chain(&c).is_valid());
        assert_eq!(c.nu, vec![ratio(1, 1); 3]);
        assert_eq!(c.top().len(), 64);

        let c = product_chain(&a, &[z(7, &[0])], lim()).unwrap();
        assert_eq!(c.nu, vec![ratio(1, 4)]);
        assert!(verify_chain(&c).is_valid());

        let parts = [z(7, &[0, 1]), z(7, &[3]), z(7, &[0, 1, 5])];
        let c = product_chain(&a, &parts, lim()).unwrap();
        assert_eq!(c.top().len(), 6);
        assert!(c.size_bound_holds());
        assert_eq!(Rational::from_integer(6.into()), c.size_lower_bound());

        assert!(matches!(
            product_chain(&a, &[z(7, &[2])], lim()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn half_level_density() {
        let a = z(5, &[0, 1, 2, 3]);
        let mut c = product_chain(&a, &[z(5, &[0, 1])], lim()).unwrap();
        assert!(verify_chain(&c).is_valid());
        c.nu = vec![ratio(3, 4)];
        assert_eq!(
            verify_chain(&c),
            violated(Axiom::SubMartingale, 1, vec![])
        );
        c.levels[1].clear();
        c.nu = vec![ratio(1, 10)];
        assert!(!verify_chain(&c).is_valid());
    }

    #[test]
    fn verify_reports_structural_axioms() {
        let a = z(5, &[0, 1]);
        let mut c = full_chain(&a, 2, lim()).unwrap();
        c.levels[2].insert(vec![0, 4]);
        assert_eq!(verify_chain(&c), violated(Axiom::Powers, 2, vec![0, 4]));
        let mut c = full_chain(&a, 1, lim()).unwrap();
        c.levels[0].insert(vec![1]);
        assert_eq!(verify_chain(&c), violated(Axiom::Start, 0, vec![1]));
        let mut c = full_chain(&a, 1, lim()).unwrap();
        c.nu = vec![ratio(0, 1)];
        assert!(matches!(verify_chain(&c), ChainVerdict::Violated(Violation { axiom: Axiom::Density, .. })));
    }

    #[test]
    fn intersect_examples() {
        let a = z(11, &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9]);
        let c = full_chain(&a, 2, lim()).unwrap();
        let same = intersect_chains(&c, &c).unwrap();
        assert_eq!(same, c);

        let nine = |skip: usize| {
            z(11, &(0..10).filter(|&i| i != skip).collect::<Vec<_>>())
        };
        let c1 = product_chain(&a, &[nine(0), nine(1)], lim()).unwrap();
        let c2 = product_chain(&a, &[nine(2), nine(3)], lim()).unwrap();
        let i = intersect_chains(&c1, &c2).unwrap();
        assert_eq!(i.nu, vec![ratio(4, 5), ratio(4, 5)]);
        assert!(verify_chain(&i).is_valid());
        assert_eq!(i.top().len(), 64);

        let c3 = product_chain(&a, &[z(11, &[0, 1, 2, 3, 4]), nine(0)], lim()).unwrap();
        assert!(matches!(intersect_chains(&c3, &c3), Err(Error::Precondition(_))));
    }

    #[test]
    fn covering_chain_examples() {
        let a = z(7, &[0, 1, 2]);
        let x = z(7, &[0, 2]);
        let d = ratio(1, 2);
        let c = covering_chain(&a, &x, &d, 0, &BTreeSet::new(), 3, lim()).unwrap();
        assert_eq!(c, full_chain(&a, 3, lim()).unwrap());

        let c = covering_chain(&a, &x, &d, 0, &BTreeSet::from([1]), 1, lim()).unwrap();
        assert_eq!(c.top().len(), 3);
        assert_eq!(c.nu, vec![ratio(1, 2)]);
        assert!(verify_chain(&c).is_valid());

        let g = Arc::new(GroupSpec::power(2, 3).unwrap());
        let v = GroupSet::from_indices(g.clone(), [0, 1, 2, 3]).unwrap();
        let id = GroupSet::identity(g);
        let c = covering_chain(&v, &id, &ratio(0, 1), 3, &BTreeSet::from([1, 3]), 3, lim()).unwrap();
        assert_eq!(c.levels, full_chain(&v, 3, lim()).unwrap().levels);
    }

    #[test]
    fn covering_chain_requires_cover() {
        let a = z(7, &[0, 1, 2]);
        let r = covering_chain(&a, &z(7, &[0]), &ratio(1, 3), 0, &BTreeSet::from([1]), 1, lim());
        assert!(matches!(r, Err(Error::Domain(_))));
        let r = covering_chain(&a, &z(7, &[2]), &ratio(1, 2), 0, &BTreeSet::new(), 1, lim());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn energy_examples() {
        let g = Arc::new(GroupSpec::new(vec![2, 4]).unwrap());
        let v = GroupSet::from_indices(g.clone(), [0, 2, 4, 6]).unwrap();
        let id = GroupSet::identity(g);
        for k in 1..=3 {
            let c = full_chain(&v, k, lim()).unwrap();
            let e = energy_bound_check(&v, &id, &c, &ratio(0, 1), &ratio(0, 1)).unwrap();
            let want = Rational::from_integer(BigInt::from(4usize.pow(k as u32 + 1)));
            assert_eq!((e.lhs.clone(), e.rhs.clone()), (want.clone(), want));
            assert!(e.holds && e.precondition);
        }

        let a = z(7, &[0, 1, 2]);
        let x = z(7, &[0, 2]);
        let c = full_chain(&a, 1, lim()).unwrap();
        let e = energy_bound_check(&a, &x, &c, &ratio(1, 2), &ratio(0, 1)).unwrap();
        assert_eq!(e.lhs, ratio(15, 2));
        assert_eq!(e.rhs, ratio(9, 8));
        assert!(e.holds);
        // delta = 1/2 sits on the open boundary
        assert!(!e.precondition);
    }

    #[test]
    fn limits_are_enforced() {
        let a = z(13, &(0..12).collect::<Vec<_>>());
        assert!(matches!(full_chain(&a, 5, lim()), Err(Error::LimitExceeded(_))));
        let tight = ChainLimits { max_k: 4, max_tuples: 100 };
        assert!(matches!(full_chain(&a, 2, tight), Err(Error::LimitExceeded(_))));
        let silly = ChainLimits { max_k: 99, max_tuples: 10 };
        assert!(matches!(full_chain(&a, 1, silly), Err(Error::LimitExceeded(_))));
    }
}
