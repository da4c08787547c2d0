//! The structure-theorem pipeline: Petridis subsets, almost-invariant
//! functions, annihilator checks and the end-to-end driver.
//!
//! Every inequality the argument relies on is recomputed exactly (or, for
//! spectrum thresholds, in double precision with the over-inclusive policy of
//! [`crate::fourier`]) and stored as a [`CheckRecord`].

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Pow, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chang::{chang_iterate, energy_floor_steps, ChangOutcome};
use crate::covering::{statistical_cover, verify_covered, CoverCertificate};
use crate::fourier::{annihilator, spectrum_unchecked};
use crate::func::{rational_to_f64, smooth_by_tuple, RationalFunc};
use crate::set::{generate_instance, subgroup_closure, GroupSet, InstanceKind};
use crate::{Error, Rational, Result};

pub const DEFAULT_PETRIDIS_CAP: usize = 18;

fn rat(n: usize) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Largest multiple of `1/1024` not above `x`, and at least `1/1024`.
pub fn rationalize_down(x: f64) -> Rational {
    let k = (x * 1024.0).floor().max(1.0) as i64;
    Rational::new(BigInt::from(k), BigInt::from(1024))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Quantity {
    Exact(Rational),
    Approx(f64),
}

impl Quantity {
    pub fn to_f64(&self) -> f64 {
        match self {
            Quantity::Exact(q) => rational_to_f64(q),
            Quantity::Approx(v) => *v,
        }
    }
}

impl From<Rational> for Quantity {
    fn from(q: Rational) -> Self {
        Quantity::Exact(q)
    }
}

impl From<usize> for Quantity {
    fn from(n: usize) -> Self {
        Quantity::Exact(rat(n))
    }
}

impl From<f64> for Quantity {
    fn from(v: f64) -> Self {
        Quantity::Approx(v)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Exact(q) => write!(f, "{q}"),
            Quantity::Approx(v) => write!(f, "{v:.17e}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Lt,
    Eq,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Eq => "==",
            Relation::Ge => ">=",
        }
    }

    fn test<T: PartialOrd>(self, l: &T, r: &T) -> bool {
        match self {
            Relation::Le => l <= r,
            Relation::Lt => l < r,
            Relation::Eq => l == r,
            Relation::Ge => l >= r,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    /// Must hold for every input; a failure is a bug.
    Unconditional,
    /// Recorded for inspection only.
    ReportOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckRecord {
    pub name: String,
    pub anchor: &'static str,
    pub lhs: Quantity,
    pub relation: Relation,
    pub rhs: Quantity,
    pub holds: bool,
    pub kind: CheckKind,
}

impl CheckRecord {
    pub fn new(
        name: impl Into<String>,
        anchor: &'static str,
        lhs: impl Into<Quantity>,
        relation: Relation,
        rhs: impl Into<Quantity>,
        kind: CheckKind,
    ) -> Self {
        let lhs = lhs.into();
        let rhs = rhs.into();
        let holds = match (&lhs, &rhs) {
            (Quantity::Exact(l), Quantity::Exact(r)) => relation.test(l, r),
            _ => relation.test(&lhs.to_f64(), &rhs.to_f64()),
        };
        CheckRecord {
            name: name.into(),
            anchor,
            lhs,
            relation,
            rhs,
            holds,
            kind,
        }
    }

    /// A containment `X ⊆ Y`, recorded as `|X \ Y| == 0`.
    fn subset(name: impl Into<String>, anchor: &'static str, x: &GroupSet, y: &GroupSet, kind: CheckKind) -> Self {
        let outside = x.indices().filter(|&i| !y.contains_idx(i)).count();
        Self::new(name, anchor, outside, Relation::Eq, 0usize, kind)
    }

    pub fn failed(&self) -> bool {
        self.kind == CheckKind::Unconditional && !self.holds
    }
}

impl fmt::Display for CheckRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match (self.kind, self.holds) {
            (CheckKind::ReportOnly, _) => "report",
            (_, true) => "ok",
            (_, false) => "FAIL",
        };
        write!(
            f,
            "[{tag}] {}: {} {} {}",
            self.name,
            self.lhs,
            self.relation.symbol(),
            self.rhs
        )
    }
}

fn render_trail(checks: &[CheckRecord]) -> String {
    checks.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("; ")
}

// ---------------------------------------------------------------------------
// Petridis subsets

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PetridisMode {
    /// Every non-empty subset of `B`.
    Exhaustive,
    /// Singletons of `B` and `B` itself.
    SinglesAndA,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PetridisResult {
    pub z: GroupSet,
    /// `|A + Z| / |Z|`.
    pub ratio: Rational,
    pub sumset_len: usize,
    /// Candidates that matched the best ratio and were settled by size or
    /// lexicographic order.
    pub ties_broken: usize,
    /// True when only the fallback family was searched.
    pub restricted: bool,
}

struct Best {
    num: usize,
    den: usize,
    members: Vec<usize>,
    ties: usize,
}

impl Best {
    fn offer(&mut self, num: usize, members: &[usize]) {
        let den = members.len();
        if self.members.is_empty() {
            *self = Best {
                num,
                den,
                members: members.to_vec(),
                ties: self.ties,
            };
            return;
        }
        let l = num as u128 * self.den as u128;
        let r = self.num as u128 * den as u128;
        let better = if l != r {
            l < r
        } else {
            self.ties += 1;
            den < self.den || (den == self.den && members < self.members.as_slice())
        };
        if better {
            self.num = num;
            self.den = den;
            self.members = members.to_vec();
        }
    }
}

/// A non-empty `Z ⊆ A` minimizing `|A + Z| / |Z|`.
pub fn petridis_subset(a: &GroupSet, mode: PetridisMode) -> Result<PetridisResult> {
    petridis_subset_within(a, a, mode, DEFAULT_PETRIDIS_CAP)
}

/// A non-empty `Z ⊆ B` minimizing `|A + Z| / |Z|`. Ties go to the smaller
/// `Z`, then to the lexicographically smaller member list.
pub fn petridis_subset_within(
    a: &GroupSet,
    b: &GroupSet,
    mode: PetridisMode,
    cap: usize,
) -> Result<PetridisResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("Petridis selection needs non-empty sets"));
    }
    if a.spec() != b.spec() {
        return Err(Error::SpecMismatch);
    }
    let members = b.to_indices();
    let translates: Vec<GroupSet> = members.iter().map(|&m| a.translate_idx(m)).collect();
    let mut best = Best {
        num: 0,
        den: 0,
        members: Vec::new(),
        ties: 0,
    };
    match mode {
        PetridisMode::Exhaustive => {
            if members.len() > cap.min(30) {
                return Err(Error::LimitExceeded(format!(
                    "exhaustive Petridis scan allows at most {cap} elements, got {}; use the singletons-and-set mode",
                    members.len()
                )));
            }
            let mut chosen = Vec::with_capacity(members.len());
            scan(
                0,
                &GroupSet::empty(a.spec().clone()),
                &members,
                &translates,
                &mut chosen,
                &mut best,
            );
        }
        PetridisMode::SinglesAndA => {
            for (i, &m) in members.iter().enumerate() {
                best.offer(translates[i].len(), &[m]);
            }
            best.offer(a.sumset(b)?.len(), &members);
        }
    }
    let z = GroupSet::from_indices(a.spec().clone(), best.members.iter().copied())?;
    Ok(PetridisResult {
        z,
        ratio: Rational::new(BigInt::from(best.num), BigInt::from(best.den)),
        sumset_len: best.num,
        ties_broken: best.ties,
        restricted: mode == PetridisMode::SinglesAndA,
    })
}

fn scan(
    start: usize,
    acc: &GroupSet,
    members: &[usize],
    translates: &[GroupSet],
    chosen: &mut Vec<usize>,
    best: &mut Best,
) {
    for i in start..members.len() {
        let u = acc.union(&translates[i]).expect("same group");
        chosen.push(members[i]);
        best.offer(u.len(), chosen);
        scan(i + 1, &u, members, translates, chosen, best);
        chosen.pop();
    }
}

/// `(|A + Z + C|, K |Z + C|)` with `K = |A + Z| / |Z|`.
pub fn petridis_inequality(a: &GroupSet, z: &GroupSet, c: &GroupSet) -> Result<(usize, Rational)> {
    if z.is_empty() {
        return Err(Error::domain("Z must be non-empty"));
    }
    let az = a.sumset(z)?;
    let k = Rational::new(BigInt::from(az.len()), BigInt::from(z.len()));
    let zc = z.sumset(c)?;
    Ok((az.sumset(c)?.len(), k * rat(zc.len())))
}

/// Checks `|A + Z + C| <= K |Z + C|` for every `C` in the family.
pub fn petridis_verify(a: &GroupSet, z: &GroupSet, family: &[GroupSet]) -> Result<bool> {
    for c in family {
        let (lhs, rhs) = petridis_inequality(a, z, c)?;
        if rat(lhs) > rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All singletons of `G` followed by `samples` seeded random subsets of size
/// at most 32.
pub fn petridis_family(spec: std::sync::Arc<crate::GroupSpec>, samples: usize, seed: u64) -> Result<Vec<GroupSet>> {
    let n = spec.order();
    let mut out: Vec<GroupSet> = (0..n)
        .map(|i| GroupSet::from_indices(spec.clone(), [i]).expect("in range"))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let size = rng.gen_range(1..=n.min(32));
        out.push(generate_instance(&InstanceKind::Random { size }, spec.clone(), rng.gen())?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Almost-invariant functions

/// How the invariance parameter of the energy iteration is derived from
/// `epsilon`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KappaRule {
    /// `kappa = epsilon^2 / 4`. Every invariance witness then satisfies the
    /// `l1` bound, since `||f - tau_x f||_1 <= 2 sqrt(kappa) ||f||_1`.
    Quadratic,
    /// `kappa = epsilon / 4`. Witnesses are only guaranteed the weaker
    /// bound `sqrt(epsilon) ||f||_1`.
    Linear,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlmostInvariantConfig {
    /// `delta = epsilon / c0`.
    pub c0: u32,
    pub kappa: KappaRule,
}

impl Default for AlmostInvariantConfig {
    fn default() -> Self {
        AlmostInvariantConfig {
            c0: 8,
            kappa: KappaRule::Quadratic,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlmostInvariant {
    pub epsilon: Rational,
    pub delta: Rational,
    pub kappa: Rational,
    pub cover: CoverCertificate,
    /// The cover together with the identity.
    pub x: GroupSet,
    pub step_bound: usize,
    pub tuple: Vec<usize>,
    pub energies: Vec<Rational>,
    pub witnesses: GroupSet,
    /// `<a_1, ..., a_l>`.
    pub v: GroupSet,
    /// `(1_A * mu_a)^2`.
    pub f: RationalFunc,
    /// `{x in A : ||f - tau_x f||_1 <= epsilon ||f||_1}`.
    pub good: GroupSet,
    pub audit: Vec<CheckRecord>,
}

impl AlmostInvariant {
    pub fn all_hold(&self) -> bool {
        self.audit.iter().all(|c| !c.failed())
    }
}

const ANCHOR_AIF: &str = "almost-invariant function";

/// Builds a non-negative `f` supported on `A + V`, with `V` generated by a
/// Chang tuple, that is almost invariant under many translates from `A`.
pub fn almost_invariant_pair(
    a: &GroupSet,
    epsilon: &Rational,
    config: &AlmostInvariantConfig,
) -> Result<AlmostInvariant> {
    if a.is_empty() {
        return Err(Error::domain("A must be non-empty"));
    }
    if *epsilon <= Rational::zero() || *epsilon > Rational::one() {
        return Err(Error::domain(format!("epsilon = {epsilon} outside (0, 1]")));
    }
    if config.c0 == 0 {
        return Err(Error::domain("c0 must be positive"));
    }
    let spec = a.spec().clone();
    let delta = epsilon / Rational::from_integer(BigInt::from(config.c0));
    let kappa = match config.kappa {
        KappaRule::Quadratic => epsilon * epsilon / rat(4),
        KappaRule::Linear => epsilon / rat(4),
    };
    let mut audit = Vec::new();

    let cover = statistical_cover(a, a, &delta)?;
    let mut x = cover.x.clone();
    x.insert_idx(0);
    audit.push(CheckRecord::new(
        "cover size",
        "statistical covering",
        cover.x.len(),
        Relation::Le,
        cover.size_bound.clone(),
        CheckKind::Unconditional,
    ));
    let cov = verify_covered(a, &x, &delta)?;
    audit.push(CheckRecord::new(
        "cover fraction",
        "statistical covering",
        cov.min_fraction,
        Relation::Ge,
        Rational::one() - &delta,
        CheckKind::Unconditional,
    ));

    let step_bound = energy_floor_steps(spec.order(), a.len(), rational_to_f64(&kappa));
    let h = RationalFunc::indicator(a);
    let (tuple, energies, witnesses) = match chang_iterate(&h, a, &kappa, &delta, step_bound)? {
        ChangOutcome::Invariant {
            tuple,
            witnesses,
            energies,
            ..
        } => (tuple, energies, witnesses),
        ChangOutcome::Decrement { .. } => {
            return Err(Error::internal(format!(
                "energy iteration passed its floor bound of {step_bound} steps"
            )))
        }
    };
    audit.push(CheckRecord::new(
        "invariant witnesses",
        ANCHOR_AIF,
        witnesses.len(),
        Relation::Ge,
        &delta * rat(a.len()),
        CheckKind::Unconditional,
    ));
    audit.push(CheckRecord::new(
        "energy steps",
        ANCHOR_AIF,
        tuple.len(),
        Relation::Le,
        step_bound,
        CheckKind::Unconditional,
    ));

    let v = GroupSet::from_indices(spec.clone(), tuple.iter().copied())?.closure();
    let smoothed = smooth_by_tuple(&h, &tuple);
    let f = smoothed.square();
    audit.push(CheckRecord::subset(
        "support(f) in A+V",
        ANCHOR_AIF,
        &f.support(),
        &a.sumset(&v)?,
        CheckKind::Unconditional,
    ));

    let f_l1 = f.l1();
    let limit = epsilon * &f_l1;
    let diffs: Vec<(usize, Rational)> = a.indices().map(|i| (i, f.translation_l1_idx(i))).collect();
    let good = GroupSet::from_indices(
        spec.clone(),
        diffs.iter().filter(|(_, d)| *d <= limit).map(|(i, _)| *i),
    )?;
    let worst_good = diffs
        .iter()
        .filter(|(i, _)| good.contains_idx(*i))
        .map(|(_, d)| d / &f_l1)
        .max()
        .unwrap_or_else(Rational::zero);
    audit.push(CheckRecord::new(
        "good set l1 bound",
        ANCHOR_AIF,
        worst_good,
        Relation::Le,
        epsilon.clone(),
        CheckKind::Unconditional,
    ));
    // For a witness x, ||f - tau_x f||_1 <= ||F - tau_x F||_2 ||F + tau_x F||_2
    // < 2 sqrt(kappa) ||f||_1; compare squares to stay exact.
    let worst_witness = diffs
        .iter()
        .filter(|(i, _)| witnesses.contains_idx(*i))
        .map(|(_, d)| {
            let r = d / &f_l1;
            &r * &r
        })
        .max()
        .unwrap_or_else(Rational::zero);
    audit.push(CheckRecord::new(
        "witness l1 bound (squared)",
        ANCHOR_AIF,
        worst_witness,
        Relation::Le,
        rat(4) * &kappa,
        CheckKind::Unconditional,
    ));
    audit.push(CheckRecord::new(
        "witnesses outside good set",
        ANCHOR_AIF,
        witnesses.indices().filter(|&i| !good.contains_idx(i)).count(),
        Relation::Eq,
        0usize,
        match config.kappa {
            KappaRule::Quadratic => CheckKind::Unconditional,
            KappaRule::Linear => CheckKind::ReportOnly,
        },
    ));
    audit.push(CheckRecord::new(
        "good set size vs epsilon |A|",
        ANCHOR_AIF,
        good.len(),
        Relation::Ge,
        epsilon * rat(a.len()),
        CheckKind::ReportOnly,
    ));

    Ok(AlmostInvariant {
        epsilon: epsilon.clone(),
        delta,
        kappa,
        cover,
        x,
        step_bound,
        tuple,
        energies,
        witnesses,
        v,
        f,
        good,
        audit,
    })
}

// ---------------------------------------------------------------------------
// Annihilator checks

#[derive(Clone, Debug, PartialEq)]
pub struct ContainmentCheck {
    /// Members `a` with `||g - tau_a g||_1 > epsilon ||g||_1`.
    pub hypothesis_failures: Vec<usize>,
    /// `r epsilon`.
    pub threshold: f64,
    /// True when `r epsilon > 1`, so the spectrum is empty.
    pub vacuous: bool,
    pub spectrum_len: usize,
    pub annihilator: GroupSet,
    /// Members of `A` outside the annihilator.
    pub outside: Vec<usize>,
}

impl ContainmentCheck {
    pub fn hypothesis_holds(&self) -> bool {
        self.hypothesis_failures.is_empty()
    }

    pub fn contained(&self) -> bool {
        self.outside.is_empty()
    }
}

/// Tests `A ⊆ Spec_{r epsilon}(g)^perp`, where `r` is the group exponent.
/// Hypothesis failures are reported separately from the containment.
pub fn annihilator_containment_check(g: &RationalFunc, a: &GroupSet, epsilon: &Rational) -> Result<ContainmentCheck> {
    if g.is_zero() {
        return Err(Error::domain("g must not vanish identically"));
    }
    if *epsilon <= Rational::zero() {
        return Err(Error::domain(format!("epsilon = {epsilon} must be positive")));
    }
    if a.spec() != g.spec() {
        return Err(Error::SpecMismatch);
    }
    let r = g.spec().exponent();
    let limit = epsilon * g.l1();
    let hypothesis_failures = a.indices().filter(|&x| g.translation_l1_idx(x) > limit).collect();
    let threshold = r as f64 * rational_to_f64(epsilon);
    let spec_set = spectrum_unchecked(g, threshold)?;
    let ann = annihilator(&spec_set);
    let outside = a.indices().filter(|&x| !ann.contains_idx(x)).collect();
    Ok(ContainmentCheck {
        hypothesis_failures,
        threshold,
        vacuous: threshold > 1.0,
        spectrum_len: spec_set.len(),
        annihilator: ann,
        outside,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnihilatorBound {
    /// Doubling constant used in the threshold and the bound.
    pub k: Rational,
    pub threshold: f64,
    pub spectrum_len: usize,
    pub annihilator: GroupSet,
    /// `4 K |A|`.
    pub bound: Rational,
    pub holds: bool,
    pub hypothesis_failures: Vec<String>,
}

impl AnnihilatorBound {
    pub fn size(&self) -> usize {
        self.annihilator.len()
    }

    pub fn hypothesis_holds(&self) -> bool {
        self.hypothesis_failures.is_empty()
    }
}

/// `|Spec_t(g)^perp|` compared against `bound`.
pub fn annihilator_size_at(g: &RationalFunc, threshold: f64, k: Rational, bound: Rational) -> Result<AnnihilatorBound> {
    let s = spectrum_unchecked(g, threshold)?;
    let ann = annihilator(&s);
    let holds = rat(ann.len()) <= bound;
    Ok(AnnihilatorBound {
        k,
        threshold,
        spectrum_len: s.len(),
        annihilator: ann,
        bound,
        holds,
        hypothesis_failures: Vec::new(),
    })
}

/// `|Spec_{1/(4 K^{2 epsilon})}(g)^perp| <= 4 K |A|` with `K = |A+A|/|A|`,
/// for `h` supported on `A` and almost invariant under `A'`, and `g`
/// supported on `A'`.
pub fn spec_annihilator_bound(
    a: &GroupSet,
    a_prime: &GroupSet,
    h: &RationalFunc,
    g: &RationalFunc,
    epsilon: &Rational,
) -> Result<AnnihilatorBound> {
    if *epsilon <= Rational::zero() || *epsilon > Rational::new(1.into(), 2.into()) {
        return Err(Error::domain(format!("epsilon = {epsilon} outside (0, 1/2]")));
    }
    if a.is_empty() {
        return Err(Error::domain("A must be non-empty"));
    }
    if g.is_zero() {
        return Err(Error::domain("g must not vanish identically"));
    }
    for s in [a_prime.spec(), h.spec(), g.spec()] {
        if s != a.spec() {
            return Err(Error::SpecMismatch);
        }
    }
    let mut failures = Vec::new();
    if h.is_zero() || !h.is_nonnegative() {
        failures.push("h must be non-negative and non-zero".to_string());
    }
    if !h.support().is_subset(a)? {
        failures.push("h is not supported on A".to_string());
    }
    if !g.is_nonnegative() {
        failures.push("g must be non-negative".to_string());
    }
    if !g.support().is_subset(a_prime)? {
        failures.push("g is not supported on A'".to_string());
    }
    let limit = epsilon * h.l1();
    let bad = a_prime.indices().filter(|&x| h.translation_l1_idx(x) > limit).count();
    if bad > 0 {
        failures.push(format!("{bad} elements of A' move h by more than epsilon ||h||_1"));
    }
    let k = a.doubling_constant()?;
    let kf = rational_to_f64(&k);
    let threshold = 1.0 / (4.0 * kf.powf(2.0 * rational_to_f64(epsilon)));
    let bound = rat(4) * &k * rat(a.len());
    let mut out = annihilator_size_at(g, threshold, k, bound)?;
    out.hypothesis_failures = failures;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Driver

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineConfig {
    pub almost_invariant: AlmostInvariantConfig,
    pub petridis_cap: usize,
    /// Random sets added to the Petridis family checks.
    pub petridis_samples: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            almost_invariant: AlmostInvariantConfig::default(),
            petridis_cap: DEFAULT_PETRIDIS_CAP,
            petridis_samples: 8,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineReport {
    pub a: GroupSet,
    /// `|A + A| / |A|`.
    pub k: Rational,
    pub exponent: u64,
    pub z: PetridisResult,
    pub epsilon: Rational,
    pub stage1: AlmostInvariant,
    pub eta: Rational,
    pub stage2: AlmostInvariant,
    /// `f * mu_{V'}`.
    pub h: RationalFunc,
    /// `Z + V + V'`.
    pub s: GroupSet,
    /// Spectrum annihilator bound at `1/(4 K_S^{2 epsilon})`.
    pub lemma_bound: AnnihilatorBound,
    /// Spectrum annihilator bound at `1/(4 sqrt e)` against `4 K_Z |S|`.
    pub sqrt_e_bound: AnnihilatorBound,
    pub containment: ContainmentCheck,
    pub z3: PetridisResult,
    pub v3: GroupSet,
    pub closure: GroupSet,
    /// `|<A>| / |A|`.
    pub ratio: Rational,
    /// `exp(K (log 2K)^2)`, for comparison only.
    pub comparison: f64,
    pub checks: Vec<CheckRecord>,
}

impl PipelineReport {
    pub fn all_hold(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| c.failed())
    }
}

fn choose_mode(n: usize, cap: usize) -> PetridisMode {
    if n <= cap {
        PetridisMode::Exhaustive
    } else {
        PetridisMode::SinglesAndA
    }
}

fn petridis_kind(p: &PetridisResult) -> CheckKind {
    if p.restricted {
        CheckKind::ReportOnly
    } else {
        CheckKind::Unconditional
    }
}

fn stop(checks: &[CheckRecord], name: &str) -> Error {
    Error::CheckFailed {
        name: name.to_string(),
        trail: render_trail(checks),
    }
}

/// Runs the pipeline with the default configuration and turns any failed
/// unconditional check into [`Error::CheckFailed`].
pub fn theorem_driver(a: &GroupSet) -> Result<PipelineReport> {
    let report = run_pipeline(a, &PipelineConfig::default())?;
    if let Some(c) = report.failures().next() {
        return Err(stop(&report.checks, &c.name));
    }
    Ok(report)
}

/// Runs the pipeline and records every check, failed or not. Returns an
/// error only when a later stage cannot be built at all.
pub fn run_pipeline(a: &GroupSet, config: &PipelineConfig) -> Result<PipelineReport> {
    use CheckKind::{ReportOnly, Unconditional};
    const PET: &str = "petridis";
    const AIF: &str = ANCHOR_AIF;
    const ANN: &str = "spectrum annihilator size";
    const CON: &str = "annihilator containment";
    const THM: &str = "structure theorem";

    if a.is_empty() {
        return Err(Error::domain("A must be non-empty"));
    }
    let spec = a.spec().clone();
    let r = spec.exponent();
    let mut checks = Vec::new();

    let k = a.doubling_constant()?;
    let kf = rational_to_f64(&k);
    let z = petridis_subset_within(a, a, choose_mode(a.len(), config.petridis_cap), config.petridis_cap)?;
    let zk = petridis_kind(&z);
    checks.push(CheckRecord::new("|A+Z|/|Z| <= K", PET, z.ratio.clone(), Relation::Le, k.clone(), Unconditional));
    let zz = z.z.sumset(&z.z)?;
    checks.push(CheckRecord::new(
        "|Z+Z| <= K_Z |Z|",
        PET,
        zz.len(),
        Relation::Le,
        &z.ratio * rat(z.z.len()),
        zk,
    ));
    let family = petridis_family(spec.clone(), config.petridis_samples, config.seed)?;
    let sampled = family.into_iter().skip(spec.order()).collect::<Vec<_>>();
    checks.push(CheckRecord::new(
        "Petridis inequality on sampled C",
        PET,
        usize::from(!petridis_verify(a, &z.z, &sampled)?),
        Relation::Eq,
        0usize,
        zk,
    ));

    let epsilon = rationalize_down(1.0 / (4.0 * (2.0 * kf).ln()));
    let stage1 = almost_invariant_pair(&z.z, &epsilon, &config.almost_invariant)?;
    tag_stage(&mut checks, "stage 1", &stage1);
    let z1 = stage1.good.clone();
    checks.push(CheckRecord::new("|Z'| > 0", AIF, z1.len(), Relation::Ge, 1usize, Unconditional));
    if z1.is_empty() {
        return Err(stop(&checks, "|Z'| > 0"));
    }

    let eta = rationalize_down(1.0 / (4.0 * r as f64 * 0.5f64.exp()));
    let stage2 = almost_invariant_pair(&z1, &eta, &config.almost_invariant)?;
    tag_stage(&mut checks, "stage 2", &stage2);
    let z2 = stage2.good.clone();
    checks.push(CheckRecord::new("|Z''| > 0", AIF, z2.len(), Relation::Ge, 1usize, Unconditional));
    if z2.is_empty() {
        return Err(stop(&checks, "|Z''| > 0"));
    }
    checks.push(CheckRecord::subset("Z'' in Z'", AIF, &z2, &z1, Unconditional));
    checks.push(CheckRecord::subset("Z' in Z", AIF, &z1, &z.z, Unconditional));

    let v = &stage1.v;
    let v2 = &stage2.v;
    let f = &stage1.f;
    let g = &stage2.f;
    let h = f.average_over_subgroup(v2)?;
    let vv2 = v.sumset(v2)?;
    let s = z.z.sumset(&vv2)?;
    checks.push(CheckRecord::subset("support(h) in Z+V+V'", AIF, &h.support(), &s, Unconditional));
    let moved = stage2.tuple.iter().filter(|&&t| h.translate_idx(t) != h).count();
    checks.push(CheckRecord::new(
        "V' generators moving h",
        AIF,
        moved,
        Relation::Eq,
        0usize,
        Unconditional,
    ));
    let f_l1 = f.l1();
    checks.push(CheckRecord::new("||h||_1 = ||f||_1", AIF, h.l1(), Relation::Eq, f_l1.clone(), Unconditional));
    let a_prime = z1.sumset(v2)?;
    let worst = a_prime
        .indices()
        .map(|x| h.translation_l1_idx(x))
        .max()
        .unwrap_or_else(Rational::zero);
    checks.push(CheckRecord::new(
        "max ||h - tau_z h||_1 over Z'+V'",
        AIF,
        worst,
        Relation::Le,
        &epsilon * &f_l1,
        Unconditional,
    ));
    checks.push(CheckRecord::subset("support(g) in Z'+V'", AIF, &g.support(), &a_prime, Unconditional));

    let ss = s.sumset(&s)?;
    checks.push(CheckRecord::new(
        "|S+S| <= K_Z |S|",
        PET,
        ss.len(),
        Relation::Le,
        &z.ratio * rat(s.len()),
        zk,
    ));
    let (lhs, rhs) = petridis_inequality(a, &z.z, &vv2)?;
    checks.push(CheckRecord::new("Petridis inequality with C = V+V'", PET, lhs, Relation::Le, rhs, zk));

    let lemma_bound = spec_annihilator_bound(&s, &a_prime, &h, g, &epsilon)?;
    checks.push(CheckRecord::new(
        "annihilator bound hypotheses",
        ANN,
        lemma_bound.hypothesis_failures.len(),
        Relation::Eq,
        0usize,
        Unconditional,
    ));
    checks.push(CheckRecord::new(
        "|Spec_{1/4K_S^2e}(g)^perp| <= 4 K_S |S|",
        ANN,
        lemma_bound.size(),
        Relation::Le,
        lemma_bound.bound.clone(),
        Unconditional,
    ));
    let sqrt_e_threshold = 1.0 / (4.0 * 0.5f64.exp());
    let sqrt_e_bound = annihilator_size_at(
        g,
        sqrt_e_threshold,
        z.ratio.clone(),
        rat(4) * &z.ratio * rat(s.len()),
    )?;
    checks.push(CheckRecord::new(
        "|Spec_{1/4sqrt(e)}(g)^perp| <= 4 K_Z |S|",
        ANN,
        sqrt_e_bound.size(),
        Relation::Le,
        sqrt_e_bound.bound.clone(),
        zk,
    ));

    let containment = annihilator_containment_check(g, &z2, &eta)?;
    checks.push(CheckRecord::new(
        "containment hypotheses",
        CON,
        containment.hypothesis_failures.len(),
        Relation::Eq,
        0usize,
        Unconditional,
    ));
    checks.push(CheckRecord::new(
        "Z'' outside Spec_{r eta}(g)^perp",
        CON,
        containment.outside.len(),
        Relation::Eq,
        0usize,
        Unconditional,
    ));
    checks.push(CheckRecord::subset(
        "Spec_{r eta}(g)^perp in Spec_{1/4sqrt(e)}(g)^perp",
        CON,
        &containment.annihilator,
        &sqrt_e_bound.annihilator,
        Unconditional,
    ));

    let z3 = petridis_subset_within(a, &z2, choose_mode(z2.len(), config.petridis_cap), config.petridis_cap)?;
    let v3 = subgroup_closure(&z3.z);
    checks.push(CheckRecord::subset(
        "V''' in Spec_{r eta}(g)^perp",
        CON,
        &v3,
        &containment.annihilator,
        Unconditional,
    ));
    checks.push(CheckRecord::new(
        "|V'''| <= 4 K_Z |S|",
        THM,
        v3.len(),
        Relation::Le,
        sqrt_e_bound.bound.clone(),
        zk,
    ));
    let av3 = a.sumset(&v3)?;
    checks.push(CheckRecord::new(
        "|A+V'''| <= K''' |V'''|",
        PET,
        av3.len(),
        Relation::Le,
        &z3.ratio * rat(v3.len()),
        petridis_kind(&z3),
    ));
    let cosets = av3.len() / v3.len();
    let closure = subgroup_closure(a);
    let rb = BigInt::from(r);
    checks.push(CheckRecord::new(
        "|<A>| <= r^cosets |V'''|",
        THM,
        closure.len(),
        Relation::Le,
        Rational::from_integer(Pow::pow(&rb, cosets as u32) * BigInt::from(v3.len())),
        Unconditional,
    ));
    checks.push(CheckRecord::new(
        "|<A>| <= r^(|Z'''| + cosets)",
        THM,
        closure.len(),
        Relation::Le,
        Rational::from_integer(Pow::pow(&rb, (z3.z.len() + cosets) as u32)),
        Unconditional,
    ));
    let ratio = Rational::new(BigInt::from(closure.len()), BigInt::from(a.len()));
    let comparison = (kf * (2.0 * kf).ln().powi(2)).exp();
    checks.push(CheckRecord::new(
        "|<A>|/|A| vs exp(K log^2 2K)",
        THM,
        ratio.clone(),
        Relation::Le,
        comparison,
        ReportOnly,
    ));

    Ok(PipelineReport {
        a: a.clone(),
        k,
        exponent: r,
        z,
        epsilon,
        stage1,
        eta,
        stage2,
        h,
        s,
        lemma_bound,
        sqrt_e_bound,
        containment,
        z3,
        v3,
        closure,
        ratio,
        comparison,
        checks,
    })
}

fn tag_stage(checks: &mut Vec<CheckRecord>, stage: &str, st: &AlmostInvariant) {
    for c in &st.audit {
        let mut c = c.clone();
        c.name = format!("{stage}: {}", c.name);
        checks.push(c);
    }
}
