//! Energy-decrement iteration for `h * mu_a`.
//!
//! Along a single greedy path, either many `x ∈ A` almost fix `h * mu_a`
//! under translation, or appending a failing `x` drops the energy
//! `||h * mu_a||_2^2` by a factor `1 - kappa/4`. The energy of `1_A * mu_a`
//! never falls below `|A|^2 / |G|`, which bounds the number of steps.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::func::{smooth_by_tuple, RationalFunc};
use crate::set::GroupSet;
use crate::{Error, Rational, Result};

fn rat(n: usize) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn check_kappa(kappa: &Rational) -> Result<()> {
    if *kappa > Rational::zero() && *kappa <= Rational::one() {
        Ok(())
    } else {
        Err(Error::domain(format!("kappa = {kappa} outside (0, 1]")))
    }
}

/// `{x in A : ||F - tau_x F||_2^2 < kappa ||F||_2^2}` for `F = h * mu_a`.
pub fn invariant_set(h: &RationalFunc, a: &GroupSet, tuple: &[usize], kappa: &Rational) -> Result<GroupSet> {
    if h.is_zero() {
        return Err(Error::domain("invariant set of the zero function"));
    }
    check_kappa(kappa)?;
    if a.spec() != h.spec() {
        return Err(Error::SpecMismatch);
    }
    let f = smooth_by_tuple(h, tuple);
    Ok(invariant_set_of(&f, a, kappa))
}

fn invariant_set_of(f: &RationalFunc, a: &GroupSet, kappa: &Rational) -> GroupSet {
    let limit = kappa * f.l2_sq();
    let idx = a
        .indices()
        .filter(|&x| f.translation_l2_sq_idx(x) < limit)
        .collect::<Vec<_>>();
    GroupSet::from_indices(a.spec().clone(), idx).expect("in range")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecrementStep {
    /// `||h * mu_a||_2^2`.
    pub old_energy: Rational,
    /// `||h * mu_{a x}||_2^2`.
    pub new_energy: Rational,
    /// `||F - tau_x F||_2^2`.
    pub defect: Rational,
    /// `new = old - defect / 4`, exactly.
    pub identity_holds: bool,
    /// `new <= (1 - kappa/4) old`.
    pub decremented: bool,
}

/// Appends `x` to the tuple and checks the parallelogram identity
/// `||h * mu_{a x}||^2 = ||h * mu_a||^2 - ||F - tau_x F||^2 / 4`.
pub fn decrement_check(h: &RationalFunc, tuple: &[usize], x: usize, kappa: &Rational) -> Result<DecrementStep> {
    check_kappa(kappa)?;
    if x >= h.spec().order() {
        return Err(Error::IndexOutOfRange(x));
    }
    let f = smooth_by_tuple(h, tuple);
    Ok(step_from(&f, x, kappa))
}

fn step_from(f: &RationalFunc, x: usize, kappa: &Rational) -> DecrementStep {
    let quarter = Rational::new(BigInt::from(1), BigInt::from(4));
    let old_energy = f.l2_sq();
    let next = f.half_step_idx(x);
    let new_energy = next.l2_sq();
    let defect = f.translation_l2_sq_idx(x);
    let identity_holds = new_energy == &old_energy - &defect * &quarter;
    let decremented = new_energy <= (Rational::one() - kappa * &quarter) * &old_energy;
    DecrementStep {
        old_energy,
        new_energy,
        defect,
        identity_holds,
        decremented,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChangOutcome {
    /// At least `eta |A|` elements pass the invariance test for `h * mu_a`
    /// with `a` of length `l = tuple.len()`.
    Invariant {
        tuple: Vec<usize>,
        witnesses: GroupSet,
        energies: Vec<Rational>,
        steps: Vec<DecrementStep>,
    },
    /// `k_max` decrement steps were taken without finding an invariant set.
    Decrement {
        tuple: Vec<usize>,
        energies: Vec<Rational>,
        steps: Vec<DecrementStep>,
    },
}

impl ChangOutcome {
    pub fn tuple(&self) -> &[usize] {
        match self {
            ChangOutcome::Invariant { tuple, .. } | ChangOutcome::Decrement { tuple, .. } => tuple,
        }
    }

    /// `||h * mu_{a_1..a_i}||_2^2` for `i = 0..=l`.
    pub fn energies(&self) -> &[Rational] {
        match self {
            ChangOutcome::Invariant { energies, .. } | ChangOutcome::Decrement { energies, .. } => energies,
        }
    }

    pub fn steps(&self) -> &[DecrementStep] {
        match self {
            ChangOutcome::Invariant { steps, .. } | ChangOutcome::Decrement { steps, .. } => steps,
        }
    }

    pub fn is_invariant(&self) -> bool {
        matches!(self, ChangOutcome::Invariant { .. })
    }
}

/// Greedy single-path iteration.
///
/// At step `i` the invariant set of `h * mu_a` is computed; if it has at
/// least `eta |A|` members the run stops, otherwise the first failing `x` in
/// canonical order is appended. After `k_max` appended elements the run
/// stops with [`ChangOutcome::Decrement`].
pub fn chang_iterate(
    h: &RationalFunc,
    a: &GroupSet,
    kappa: &Rational,
    eta: &Rational,
    k_max: usize,
) -> Result<ChangOutcome> {
    check_kappa(kappa)?;
    if *eta < Rational::zero() || *eta > Rational::one() {
        return Err(Error::domain(format!("eta = {eta} outside [0, 1]")));
    }
    if h.is_zero() || !h.is_nonnegative() {
        return Err(Error::domain("h must be non-negative and not identically zero"));
    }
    if a.is_empty() {
        return Err(Error::domain("A must be non-empty"));
    }
    if a.spec() != h.spec() {
        return Err(Error::SpecMismatch);
    }
    let need = eta * rat(a.len());
    let mut f = h.clone();
    let mut tuple = Vec::new();
    let mut energies = vec![f.l2_sq()];
    let mut steps = Vec::new();
    loop {
        let witnesses = invariant_set_of(&f, a, kappa);
        if rat(witnesses.len()) >= need {
            return Ok(ChangOutcome::Invariant {
                tuple,
                witnesses,
                energies,
                steps,
            });
        }
        if tuple.len() == k_max {
            return Ok(ChangOutcome::Decrement {
                tuple,
                energies,
                steps,
            });
        }
        let x = a
            .indices()
            .find(|&x| !witnesses.contains_idx(x))
            .expect("fewer than |A| witnesses");
        let step = step_from(&f, x, kappa);
        if !step.identity_holds {
            return Err(Error::internal("parallelogram identity failed"));
        }
        f = f.half_step_idx(x);
        energies.push(step.new_energy.clone());
        steps.push(step);
        tuple.push(x);
    }
}

/// `ceil(log(|G|/|A|) / log(1/(1 - kappa/4)))`, the most decrement steps a
/// run on `h = 1_A` can take before the energy floor `|A|^2/|G|`.
pub fn energy_floor_steps(group_order: usize, set_len: usize, kappa: f64) -> usize {
    if set_len == 0 || set_len >= group_order {
        return 0;
    }
    let num = (group_order as f64 / set_len as f64).ln();
    let den = -(1.0 - kappa / 4.0).ln();
    (num / den).ceil() as usize
}

/// `|A|^2 / |G|`.
pub fn energy_floor(a: &GroupSet) -> Rational {
    Rational::new(
        BigInt::from(a.len() * a.len()),
        BigInt::from(a.spec().order()),
    )
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

    #[test]
    fn invariant_set_examples() {
        let g = Arc::new(GroupSpec::new(vec![2, 4]).unwrap());
        let v = GroupSet::from_indices(g, [0, 2, 4, 6]).unwrap();
        let h = RationalFunc::indicator(&v);
        assert_eq!(invariant_set(&h, &v, &[], &ratio(1, 100)).unwrap(), v);

        let z2 = z(2, &[0, 1]);
        let h = RationalFunc::indicator(&z(2, &[0]));
        assert_eq!(invariant_set(&h, &z2, &[], &ratio(1, 1)).unwrap(), z(2, &[0]));
        assert!(matches!(
            invariant_set(&RationalFunc::zero(z2.spec().clone()), &z2, &[], &ratio(1, 2)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn tiny_kappa_keeps_exact_invariance_only() {
        let a = z(12, &[0, 3, 6, 9, 1]);
        let h = RationalFunc::indicator(&z(12, &[0, 3, 6, 9]));
        let w = invariant_set(&h, &a, &[], &ratio(1, 1_000_000)).unwrap();
        assert_eq!(w, z(12, &[0, 3, 6, 9]));
    }

    #[test]
    fn decrement_examples() {
        let h = RationalFunc::indicator(&z(4, &[0, 1]));
        let s = decrement_check(&h, &[], 1, &ratio(1, 1)).unwrap();
        assert_eq!(s.old_energy, ratio(2, 1));
        assert_eq!(s.new_energy, ratio(3, 2));
        assert_eq!(s.defect, ratio(2, 1));
        assert!(s.identity_holds && s.decremented);

        let h = RationalFunc::indicator(&z(6, &[0, 2, 4]));
        let s = decrement_check(&h, &[], 2, &ratio(1, 2)).unwrap();
        assert_eq!(s.new_energy, s.old_energy);
        assert!(s.identity_holds && !s.decremented);
    }

    #[test]
    fn iterate_examples() {
        let g = Arc::new(GroupSpec::new(vec![2, 4]).unwrap());
        let v = GroupSet::from_indices(g, [0, 2, 4, 6]).unwrap();
        let out = chang_iterate(&RationalFunc::indicator(&v), &v, &ratio(1, 2), &ratio(1, 2), 10).unwrap();
        match out {
            ChangOutcome::Invariant { tuple, witnesses, .. } => {
                assert!(tuple.is_empty());
                assert_eq!(witnesses, v);
            }
            other => panic!("unexpected {other:?}"),
        }

        let a = z(4, &[0, 1]);
        let out = chang_iterate(&RationalFunc::indicator(&a), &a, &ratio(1, 1), &ratio(1, 1), 10).unwrap();
        assert_eq!(out.energies()[..2], [ratio(2, 1), ratio(3, 2)]);
        assert_eq!(out.tuple()[0], 1);
        for w in out.energies().windows(2) {
            assert!(w[1] <= ratio(3, 4) * &w[0]);
        }
        assert!(out.is_invariant());
    }

    #[test]
    fn decrement_outcome_telescopes() {
        let a = z(31, &[0, 1, 5, 11, 20]);
        let h = RationalFunc::indicator(&a);
        let kappa = ratio(1, 2);
        let out = chang_iterate(&h, &a, &kappa, &ratio(1, 1), 2).unwrap();
        if let ChangOutcome::Decrement { energies, tuple, .. } = &out {
            assert_eq!(tuple.len(), 2);
            let bound = num_traits::pow(Rational::one() - &kappa / rat(4), 2) * h.l2_sq();
            assert!(*energies.last().unwrap() <= bound);
        } else {
            panic!("expected decrement, got {out:?}");
        }
    }

    #[test]
    fn floor_steps() {
        assert_eq!(energy_floor_steps(16, 16, 0.5), 0);
        // log 2 / -log(7/8) = 5.19...
        assert_eq!(energy_floor_steps(16, 8, 0.5), 6);
    }
}
