use std::collections::BTreeSet;
use std::sync::Arc;

use num_bigint::BigInt;
use proptest::prelude::*;

use freiman_core::chang::{chang_iterate, energy_floor, invariant_set, ChangOutcome};
use freiman_core::covering::{ruzsa_cover, statistical_cover, verify_covered};
use freiman_core::fourier::{annihilator, CharSet};
use freiman_core::func::{mu_tuple_idx, smooth_by_tuple};
use freiman_core::pipeline::{almost_invariant_pair, petridis_subset, AlmostInvariantConfig, PetridisMode};
use freiman_core::subproduct::{covering_chain, intersect_chains, verify_chain, ChainLimits};
use freiman_core::{GroupSet, GroupSpec, Rational, RationalFunc};

fn rat(n: usize) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn group(max_order: usize) -> impl Strategy<Value = Arc<GroupSpec>> {
    prop::collection::vec(2u32..=9, 1..=3)
        .prop_filter("order", move |m| m.iter().map(|&x| x as usize).product::<usize>() <= max_order)
        .prop_map(|m| Arc::new(GroupSpec::new(m).unwrap()))
}

fn subset(g: Arc<GroupSpec>, max: usize) -> impl Strategy<Value = GroupSet> {
    let n = g.order();
    prop::collection::vec(0..n, 1..=max.min(n)).prop_map(move |idx| GroupSet::from_indices(g.clone(), idx).unwrap())
}

fn group_and_set(max_order: usize, max_len: usize) -> impl Strategy<Value = GroupSet> {
    group(max_order).prop_flat_map(move |g| subset(g, max_len))
}

fn group_and_sets(max_order: usize, max_len: usize) -> impl Strategy<Value = (GroupSet, GroupSet, GroupSet)> {
    group(max_order).prop_flat_map(move |g| {
        (
            subset(g.clone(), max_len),
            subset(g.clone(), max_len),
            subset(g, max_len),
        )
    })
}

fn rational_func(g: Arc<GroupSpec>) -> impl Strategy<Value = RationalFunc> {
    prop::collection::vec((-6i64..=6, 1i64..=5), g.order())
        .prop_map(move |v| RationalFunc::from_values(g.clone(), &v.iter().map(|&(a, b)| q(a, b)).collect::<Vec<_>>()).unwrap())
}

fn deltas() -> impl Strategy<Value = Rational> {
    prop::sample::select(vec![q(1, 10), q(1, 4), q(1, 3), q(1, 2), q(3, 4)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn addition_is_commutative_and_associative(g in group(512), x in 0usize..512, y in 0usize..512, z in 0usize..512) {
        let n = g.order();
        let (x, y, z) = (x % n, y % n, z % n);
        prop_assert_eq!(g.add_idx(x, y), g.add_idx(y, x));
        prop_assert_eq!(g.add_idx(g.add_idx(x, y), z), g.add_idx(x, g.add_idx(y, z)));
        prop_assert_eq!(g.add_idx(x, g.neg_idx(x)), 0);
    }

    #[test]
    fn exponent_kills_every_element(g in group(512), x in 0usize..512) {
        let e = g.element_at(x % g.order()).unwrap();
        prop_assert_eq!(g.scalar_mul(g.exponent() as i64, &e).unwrap(), g.identity());
    }

    #[test]
    fn closure_is_a_subgroup(a in group_and_set(256, 4)) {
        let c = a.closure();
        prop_assert!(a.is_subset(&c).unwrap());
        prop_assert!(c.is_subgroup());
        prop_assert_eq!(c.closure(), c.clone());
        prop_assert_eq!(a.spec().order() % c.len(), 0);
    }

    #[test]
    fn sumset_size_bounds((a, b, _) in group_and_sets(128, 10)) {
        let s = a.sumset(&b).unwrap();
        prop_assert!(s.len() >= a.len().max(b.len()));
        prop_assert!(s.len() <= a.len() * b.len());
    }

    #[test]
    fn sumset_commutes_and_associates((a, b, c) in group_and_sets(128, 8)) {
        prop_assert_eq!(a.sumset(&b).unwrap(), b.sumset(&a).unwrap());
        prop_assert_eq!(
            a.sumset(&b).unwrap().sumset(&c).unwrap(),
            a.sumset(&b.sumset(&c).unwrap()).unwrap()
        );
    }

    #[test]
    fn k_fold_sums_grow_with_identity(a in group_and_set(128, 5), k in 0usize..4) {
        let mut x = a.clone();
        x.insert_idx(0);
        prop_assert!(x.k_fold_sum(k).is_subset(&x.k_fold_sum(k + 1)).unwrap());
    }

    #[test]
    fn translation_is_an_isometry(f in group(64).prop_flat_map(rational_func), x in 0usize..64) {
        let g = f.spec().clone();
        let x = x % g.order();
        let nx = g.neg_idx(x);
        prop_assert_eq!(f.translation_l1_idx(x), f.translation_l1_idx(nx));
        prop_assert_eq!(f.translation_l2_sq_idx(x), f.translation_l2_sq_idx(nx));
    }

    #[test]
    fn tuple_measures(g in group(128), tuple in prop::collection::vec(0usize..128, 0..5), x in 0usize..128) {
        let n = g.order();
        let tuple: Vec<usize> = tuple.into_iter().map(|t| t % n).collect();
        let x = x % n;
        let mu = mu_tuple_idx(g.clone(), &tuple).into_measure();
        prop_assert_eq!(mu.total(), rat(1));
        let span = GroupSet::from_indices(g.clone(), tuple.iter().copied()).unwrap().closure();
        prop_assert!(mu.support().is_subset(&span).unwrap());
        let mut longer = tuple.clone();
        longer.push(x);
        let step = RationalFunc::point_mass_idx(g.clone(), 0)
            .add(&RationalFunc::point_mass_idx(g.clone(), x))
            .unwrap()
            .scale(&q(1, 2));
        prop_assert_eq!(mu_tuple_idx(g, &longer).into_measure(), mu.convolve(&step).unwrap());
    }

    #[test]
    fn annihilators_are_subgroups_and_meet_unions(
        (g, s1, s2) in group(128).prop_flat_map(|g| {
            let n = g.order();
            (Just(g), prop::collection::vec(0..n, 0..4), prop::collection::vec(0..n, 0..4))
        })
    ) {
        let c1 = CharSet::from_indices(g.clone(), s1).unwrap();
        let c2 = CharSet::from_indices(g.clone(), s2).unwrap();
        let a1 = annihilator(&c1);
        prop_assert!(a1.is_subgroup());
        prop_assert_eq!(
            annihilator(&c1.union(&c2).unwrap()),
            a1.intersection(&annihilator(&c2)).unwrap()
        );
    }

    #[test]
    fn statistical_cover_certificates((a, b, _) in group_and_sets(256, 16), d in deltas()) {
        let c = statistical_cover(&a, &b, &d).unwrap();
        prop_assert!(c.is_valid());
        prop_assert!(c.growth_ok());
        if a == b {
            prop_assert!(verify_covered(&a, &c.x, &d).unwrap().holds);
        }
    }

    #[test]
    fn ruzsa_covers((a, b, _) in group_and_sets(256, 16)) {
        let c = ruzsa_cover(&a, &b).unwrap();
        prop_assert!(c.is_valid());
        let diff = c.x.sumset(&b).unwrap().sumset(&b.negated()).unwrap();
        prop_assert!(a.is_subset(&diff).unwrap());
    }

    #[test]
    fn covering_chain_tops_land_in_target(
        a in group_and_set(64, 4),
        d in prop::sample::select(vec![q(1, 10), q(1, 4), q(1, 2)]),
        k in 1usize..=3,
        mask in 0u32..8,
        pick in 0usize..4,
    ) {
        let mut x = statistical_cover(&a, &a, &d).unwrap().x;
        x.insert_idx(0);
        let s: BTreeSet<usize> = (1..=k).filter(|i| mask >> (i - 1) & 1 == 1).collect();
        let m = a.to_indices();
        let xa = m[pick % m.len()];
        let c = covering_chain(&a, &x, &d, xa, &s, k, ChainLimits::default()).unwrap();
        prop_assert!(verify_chain(&c).is_valid());
        prop_assert!(c.size_bound_holds());
        let target = x.k_fold_sum(s.len()).sumset(&a).unwrap();
        let g = a.spec();
        for t in c.top() {
            let sum = s.iter().fold(xa, |acc, &i| g.add_idx(acc, t[i - 1]));
            prop_assert!(target.contains_idx(sum));
        }
        let comp: BTreeSet<usize> = (1..=k).filter(|i| !s.contains(i)).collect();
        let other = covering_chain(&a, &x, &d, xa, &comp, k, ChainLimits::default()).unwrap();
        if let Ok(i) = intersect_chains(&c, &other) {
            for (lvl, (p, r)) in i.levels.iter().zip(c.levels.iter().zip(&other.levels)) {
                prop_assert!(lvl.is_subset(p) && lvl.is_subset(r));
            }
            prop_assert!(verify_chain(&i).is_valid());
        }
    }

    #[test]
    fn energy_floor_holds_for_any_tuple(a in group_and_set(128, 12), tuple in prop::collection::vec(0usize..128, 0..6)) {
        let n = a.spec().order();
        let tuple: Vec<usize> = tuple.into_iter().map(|t| t % n).collect();
        let e = smooth_by_tuple(&RationalFunc::indicator(&a), &tuple).l2_sq();
        prop_assert!(e >= energy_floor(&a));
    }

    #[test]
    fn chang_witnesses_reverify(
        a in group_and_set(128, 12),
        kappa in prop::sample::select(vec![q(1, 2), q(1, 4), q(1, 8)]),
        eta in prop::sample::select(vec![q(1, 4), q(1, 2), q(1, 1)]),
        k_max in 0usize..6,
    ) {
        let h = RationalFunc::indicator(&a);
        match chang_iterate(&h, &a, &kappa, &eta, k_max).unwrap() {
            ChangOutcome::Invariant { tuple, witnesses, .. } => {
                prop_assert_eq!(invariant_set(&h, &a, &tuple, &kappa).unwrap(), witnesses);
            }
            ChangOutcome::Decrement { energies, .. } => {
                for w in energies.windows(2) {
                    prop_assert!(w[1] < w[0]);
                }
            }
        }
    }

    #[test]
    fn petridis_is_minimal(a in group_and_set(64, 8)) {
        let p = petridis_subset(&a, PetridisMode::Exhaustive).unwrap();
        let m = a.to_indices();
        for mask in 1u32..(1 << m.len()) {
            let z = GroupSet::from_indices(a.spec().clone(), (0..m.len()).filter(|i| mask >> i & 1 == 1).map(|i| m[i])).unwrap();
            let r = Rational::new(BigInt::from(a.sumset(&z).unwrap().len()), BigInt::from(z.len()));
            prop_assert!(p.ratio <= r);
        }
    }

    #[test]
    fn almost_invariant_functions(a in group_and_set(128, 10), eps in prop::sample::select(vec![q(1, 4), q(1, 2), q(1, 1)])) {
        let out = almost_invariant_pair(&a, &eps, &AlmostInvariantConfig::default()).unwrap();
        prop_assert!(out.all_hold());
        prop_assert!(out.f.support().is_subset(&a.sumset(&out.v).unwrap()).unwrap());
        let l1 = out.f.l1();
        for x in out.good.indices() {
            prop_assert!(out.f.translation_l1_idx(x) <= &eps * &l1);
        }
        prop_assert!(out.witnesses.is_subset(&out.good).unwrap());
    }
}
