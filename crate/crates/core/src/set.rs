//! Subsets of a finite abelian group and their sumset algebra.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::group::{GroupElement, GroupSpec};
use crate::{Error, Rational, Result};

pub(crate) fn same_group(a: &Arc<GroupSpec>, b: &Arc<GroupSpec>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// A subset of `G`, stored as a bitset over canonical element indices.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GroupSet {
    spec: Arc<GroupSpec>,
    words: Vec<u64>,
    len: usize,
}

impl GroupSet {
    pub fn empty(spec: Arc<GroupSpec>) -> Self {
        let words = vec![0; spec.order().div_ceil(64)];
        GroupSet {
            spec,
            words,
            len: 0,
        }
    }

    pub fn full(spec: Arc<GroupSpec>) -> Self {
        let n = spec.order();
        Self::from_indices(spec, 0..n).expect("indices in range")
    }

    pub fn identity(spec: Arc<GroupSpec>) -> Self {
        Self::from_indices(spec, [0]).expect("identity index")
    }

    pub fn from_indices(
        spec: Arc<GroupSpec>,
        indices: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let mut s = Self::empty(spec);
        for i in indices {
            if i >= s.spec.order() {
                return Err(Error::IndexOutOfRange(i));
            }
            s.insert_idx(i);
        }
        Ok(s)
    }

    pub fn from_elements<'a>(
        spec: Arc<GroupSpec>,
        elements: impl IntoIterator<Item = &'a GroupElement>,
    ) -> Result<Self> {
        let mut s = Self::empty(spec);
        for e in elements {
            let i = s.spec.index_of(e)?;
            s.insert_idx(i);
        }
        Ok(s)
    }

    pub fn spec(&self) -> &Arc<GroupSpec> {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn contains_idx(&self, i: usize) -> bool {
        i < self.spec.order() && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn contains(&self, x: &GroupElement) -> Result<bool> {
        Ok(self.contains_idx(self.spec.index_of(x)?))
    }

    /// Returns true if `i` was not already present.
    #[inline]
    pub fn insert_idx(&mut self, i: usize) -> bool {
        let w = &mut self.words[i / 64];
        let bit = 1u64 << (i % 64);
        if *w & bit == 0 {
            *w |= bit;
            self.len += 1;
            true
        } else {
            false
        }
    }

    pub fn insert(&mut self, x: &GroupElement) -> Result<bool> {
        let i = self.spec.index_of(x)?;
        Ok(self.insert_idx(i))
    }

    /// Member indices in canonical order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &bits)| {
            let mut bits = bits;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let t = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(w * 64 + t)
                }
            })
        })
    }

    pub fn to_indices(&self) -> Vec<usize> {
        self.indices().collect()
    }

    pub fn elements(&self) -> Vec<GroupElement> {
        self.indices()
            .map(|i| self.spec.element_at_unchecked(i))
            .collect()
    }

    /// Smallest member in canonical order.
    pub fn min_idx(&self) -> Option<usize> {
        self.indices().next()
    }

    fn check_same(&self, other: &GroupSet) -> Result<()> {
        if same_group(&self.spec, &other.spec) {
            Ok(())
        } else {
            Err(Error::SpecMismatch)
        }
    }

    fn from_words(spec: Arc<GroupSpec>, words: Vec<u64>) -> Self {
        let len = words.iter().map(|w| w.count_ones() as usize).sum();
        GroupSet { spec, words, len }
    }

    pub fn union(&self, other: &GroupSet) -> Result<GroupSet> {
        self.check_same(other)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a | b)
            .collect();
        Ok(Self::from_words(self.spec.clone(), words))
    }

    pub fn intersection(&self, other: &GroupSet) -> Result<GroupSet> {
        self.check_same(other)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a & b)
            .collect();
        Ok(Self::from_words(self.spec.clone(), words))
    }

    pub fn intersection_len(&self, other: &GroupSet) -> Result<usize> {
        self.check_same(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum())
    }

    pub fn is_subset(&self, other: &GroupSet) -> Result<bool> {
        self.check_same(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0))
    }

    /// `x + A` for the element with index `x`.
    pub fn translate_idx(&self, x: usize) -> GroupSet {
        let mut out = GroupSet::empty(self.spec.clone());
        for a in self.indices() {
            out.insert_idx(self.spec.add_idx(x, a));
        }
        out
    }

    pub fn translate(&self, x: &GroupElement) -> Result<GroupSet> {
        Ok(self.translate_idx(self.spec.index_of(x)?))
    }

    /// `-A`.
    pub fn negated(&self) -> GroupSet {
        let mut out = GroupSet::empty(self.spec.clone());
        for a in self.indices() {
            out.insert_idx(self.spec.neg_idx(a));
        }
        out
    }

    /// `A + B = {a + b}`; empty when either operand is empty.
    pub fn sumset(&self, other: &GroupSet) -> Result<GroupSet> {
        self.check_same(other)?;
        let mut out = GroupSet::empty(self.spec.clone());
        let rhs = other.to_indices();
        for a in self.indices() {
            for &b in &rhs {
                out.insert_idx(self.spec.add_idx(a, b));
            }
        }
        Ok(out)
    }

    /// `A - B`.
    pub fn difference_set(&self, other: &GroupSet) -> Result<GroupSet> {
        self.sumset(&other.negated())
    }

    /// `kX`, the `k`-fold sumset; `0X = {0}`.
    pub fn k_fold_sum(&self, k: usize) -> GroupSet {
        let mut acc = GroupSet::identity(self.spec.clone());
        for _ in 0..k {
            acc = acc.sumset(self).expect("same group");
        }
        acc
    }

    /// `|A + A| / |A|`.
    pub fn doubling_constant(&self) -> Result<Rational> {
        if self.is_empty() {
            return Err(Error::domain("doubling constant of the empty set"));
        }
        let ss = self.sumset(self)?;
        Ok(Rational::new(BigInt::from(ss.len()), BigInt::from(self.len())))
    }

    /// The subgroup generated by the members (`{0}` for the empty set).
    pub fn closure(&self) -> GroupSet {
        let spec = &self.spec;
        let gens = self.to_indices();
        let mut out = GroupSet::identity(spec.clone());
        let mut queue = vec![0usize];
        while let Some(y) = queue.pop() {
            for &g in &gens {
                let z = spec.add_idx(y, g);
                if out.insert_idx(z) {
                    queue.push(z);
                }
            }
        }
        out
    }

    /// Whether the set is non-empty and closed under addition (hence a
    /// subgroup, the group being finite).
    pub fn is_subgroup(&self) -> bool {
        if !self.contains_idx(0) {
            return false;
        }
        let m = self.to_indices();
        m.iter()
            .all(|&a| m.iter().all(|&b| self.contains_idx(self.spec.add_idx(a, b))))
    }
}

/// `<S>`: free-function form of [`GroupSet::closure`].
pub fn subgroup_closure(s: &GroupSet) -> GroupSet {
    s.closure()
}

impl fmt::Debug for GroupSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupSet[{}]{{", self.spec)?;
        for (n, e) in self.elements().iter().enumerate() {
            if n > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("}")
    }
}

/// Generator choice for subgroup-based instance families.
#[derive(Clone, Debug)]
pub enum Generators {
    Explicit(Vec<GroupElement>),
    /// This many uniformly random generators.
    Random(usize),
}

#[derive(Clone, Debug)]
pub enum InstanceKind {
    /// Uniformly random subset of the given size.
    Random { size: usize },
    /// `{0, e_1, ..., e_n}` for the coordinate basis.
    Independent,
    Subgroup { generators: Generators },
    /// Union of `cosets` distinct random cosets of a subgroup.
    CosetUnion {
        generators: Generators,
        cosets: usize,
    },
}

/// Deterministic instance generator; the same `(kind, spec, seed)` always
/// yields the same set.
pub fn generate_instance(kind: &InstanceKind, spec: Arc<GroupSpec>, seed: u64) -> Result<GroupSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.order();
    match kind {
        InstanceKind::Random { size } => {
            if *size > n {
                return Err(Error::SizeOverflow {
                    requested: *size,
                    available: n,
                });
            }
            GroupSet::from_indices(spec, sample(&mut rng, n, *size).into_iter())
        }
        InstanceKind::Independent => {
            let mut s = GroupSet::identity(spec.clone());
            for j in 0..spec.rank() {
                s.insert(&spec.basis(j))?;
            }
            Ok(s)
        }
        InstanceKind::Subgroup { generators } => {
            let gens = pick_generators(generators, &spec, &mut rng)?;
            Ok(gens.closure())
        }
        InstanceKind::CosetUnion { generators, cosets } => {
            let v = pick_generators(generators, &spec, &mut rng)?.closure();
            let index = n / v.len();
            if *cosets > index {
                return Err(Error::SizeOverflow {
                    requested: *cosets,
                    available: index,
                });
            }
            let mut out = GroupSet::empty(spec.clone());
            let mut taken = 0;
            while taken < *cosets {
                let x = rng.gen_range(0..n);
                if !out.contains_idx(x) {
                    for v in v.indices() {
                        out.insert_idx(spec.add_idx(x, v));
                    }
                    taken += 1;
                }
            }
            Ok(out)
        }
    }
}

fn pick_generators(
    generators: &Generators,
    spec: &Arc<GroupSpec>,
    rng: &mut ChaCha8Rng,
) -> Result<GroupSet> {
    match generators {
        Generators::Explicit(list) => GroupSet::from_elements(spec.clone(), list),
        Generators::Random(count) => {
            let n = spec.order();
            GroupSet::from_indices(spec.clone(), (0..*count).map(|_| rng.gen_range(0..n)))
        }
    }
}
