//! Instance families and the property suite behind `verify-lemmas`.

use std::collections::BTreeSet;
use std::sync::Arc;

use freiman_core::chang::{chang_iterate, energy_floor, invariant_set, ChangOutcome};
use freiman_core::covering::{ruzsa_cover, statistical_cover, verify_covered, verify_iterated_cover};
use freiman_core::pipeline::{
    almost_invariant_pair, annihilator_containment_check, petridis_family, petridis_subset_within,
    petridis_verify, run_pipeline, AlmostInvariantConfig, CheckKind, CheckRecord, PetridisMode,
    PipelineConfig, Relation,
};
use freiman_core::set::{generate_instance, Generators, InstanceKind};
use freiman_core::subproduct::{
    covering_chain, energy_bound_check, intersect_chains, verify_chain, ChainLimits,
};
use freiman_core::{ratio, GroupSet, GroupSpec, Rational, RationalFunc, Result};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub const FAMILIES: [&str; 4] = ["random", "subgroup", "coset-union", "independent"];

fn rat(n: usize) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn deltas() -> Vec<Rational> {
    vec![ratio(1, 10), ratio(1, 4), ratio(1, 2), ratio(3, 4)]
}

/// Deterministic member `seed` of a family in `g`. `size` only affects the
/// random family.
pub fn family_instance(g: &Arc<GroupSpec>, family: &str, seed: u64, size: Option<usize>) -> Result<GroupSet> {
    let n = g.order();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    match family {
        "random" => {
            let size = size.unwrap_or_else(|| rng.gen_range(1..=n.min(24)));
            generate_instance(&InstanceKind::Random { size }, g.clone(), seed)
        }
        "subgroup" => {
            let gens = Generators::Random(rng.gen_range(1..=3));
            generate_instance(&InstanceKind::Subgroup { generators: gens }, g.clone(), seed)
        }
        "coset-union" => {
            let gens = Generators::Random(rng.gen_range(1..=2));
            let v = generate_instance(&InstanceKind::Subgroup { generators: gens.clone() }, g.clone(), seed)?;
            let cosets = rng.gen_range(1..=(n / v.len()).min(4));
            generate_instance(&InstanceKind::CosetUnion { generators: gens, cosets }, g.clone(), seed)
        }
        "independent" => {
            let base = generate_instance(&InstanceKind::Independent, g.clone(), seed)?;
            Ok(base.translate_idx(rng.gen_range(0..n)))
        }
        other => Err(freiman_core::Error::Domain(format!("unknown family `{other}`"))),
    }
}

/// Failures of one property across the suite.
struct Tally {
    name: &'static str,
    anchor: &'static str,
    runs: usize,
    skipped: usize,
    failures: Vec<String>,
}

impl Tally {
    fn new(name: &'static str, anchor: &'static str) -> Self {
        Tally { name, anchor, runs: 0, skipped: 0, failures: Vec::new() }
    }

    fn record(&mut self, ok: bool, label: impl FnOnce() -> String) {
        self.runs += 1;
        if !ok {
            self.failures.push(label());
        }
    }

    fn outcome(&mut self, r: Result<bool>, label: impl FnOnce() -> String) {
        match r {
            Ok(ok) => self.record(ok, label),
            Err(e) => {
                let l = label();
                self.record(false, || format!("{l}: {e}"));
            }
        }
    }

    fn to_check(&self) -> CheckRecord {
        CheckRecord::new(
            self.name,
            self.anchor,
            self.failures.len(),
            Relation::Eq,
            0usize,
            CheckKind::Unconditional,
        )
    }

    fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "runs": self.runs,
            "skipped": self.skipped,
            "failures": self.failures.iter().take(20).collect::<Vec<_>>(),
            "failure_count": self.failures.len(),
        })
    }
}

pub struct SuiteOutcome {
    pub checks: Vec<CheckRecord>,
    pub result: Value,
}

pub struct SuiteConfig {
    pub per_family: usize,
    pub seed: u64,
    pub petridis_cap: usize,
}

/// Largest set for which chain and energy properties are enumerated.
const CHAIN_SET_LIMIT: usize = 5;
/// Largest set for which iterated-cover convolutions are evaluated.
const ITERATED_SET_LIMIT: usize = 12;
/// Largest set handed to the full pipeline.
const PIPELINE_SET_LIMIT: usize = 64;

pub fn run_suite(g: &Arc<GroupSpec>, cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let mut cover = Tally::new("statistical cover", "statistical covering");
    let mut ruzsa = Tally::new("ruzsa cover", "ruzsa covering");
    let mut iterated = Tally::new("iterated cover inner product", "iterated covering");
    let mut chains = Tally::new("chain axioms and size bound", "sub-product chains");
    let mut energy = Tally::new("chain energy bound", "chain energy");
    let mut chang = Tally::new("energy decrement identities", "energy decrement");
    let mut containment = Tally::new("annihilator containment", "annihilator containment");
    let mut petridis = Tally::new("petridis inequality", "petridis");
    let mut pipeline = Tally::new("pipeline checks", "structure driver");
    let mut instances = Vec::new();

    for fam in FAMILIES {
        for i in 0..cfg.per_family {
            let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
            let a = family_instance(g, fam, seed, None)?;
            let label = format!("{fam}/{seed}");
            instances.push(json!({ "family": fam, "seed": seed, "size": a.len() }));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);

            for d in deltas() {
                let l = || format!("{label} delta={d}");
                cover.outcome(
                    statistical_cover(&a, &a, &d).and_then(|c| {
                        let bound = (&c.k - rat(1)) / &d + rat(1);
                        let covered = verify_covered(&a, &c.x, &d)?.holds;
                        Ok(c.is_valid() && c.growth_ok() && covered && c.size_bound == bound)
                    }),
                    l,
                );
            }
            ruzsa.outcome(
                ruzsa_cover(&a, &a).and_then(|r| {
                    let back = r.x.sumset(&a)?.sumset(&a.negated())?;
                    Ok(r.is_valid() && a.is_subset(&back)?)
                }),
                || label.clone(),
            );

            if a.len() <= ITERATED_SET_LIMIT {
                for d in deltas() {
                    for k in 1..=2 {
                        iterated.outcome(
                            statistical_cover(&a, &a, &d).and_then(|c| {
                                let mut x = c.x;
                                x.insert_idx(0);
                                let chk = verify_iterated_cover(&a, &x, &d, k)?;
                                Ok(chk.precondition && chk.holds)
                            }),
                            || format!("{label} delta={d} k={k}"),
                        );
                    }
                }
            } else {
                iterated.skipped += 1;
            }

            if a.len() <= CHAIN_SET_LIMIT {
                chain_properties(&a, &label, &mut chains, &mut energy);
            } else {
                chains.skipped += 1;
                energy.skipped += 1;
            }

            let h = RationalFunc::indicator(&a);
            for kappa in [ratio(1, 2), ratio(1, 8)] {
                for eta in [ratio(1, 4), ratio(1, 1)] {
                    chang.outcome(
                        chang_iterate(&h, &a, &kappa, &eta, 8).and_then(|o| {
                            let floor = energy_floor(&a);
                            let mut ok = o.steps().iter().all(|s| s.identity_holds)
                                && o.energies().windows(2).all(|w| w[1] <= w[0])
                                && o.energies().iter().all(|e| *e >= floor);
                            if let ChangOutcome::Invariant { tuple, witnesses, .. } = &o {
                                ok &= invariant_set(&h, &a, tuple, &kappa)? == *witnesses;
                            }
                            Ok(ok)
                        }),
                        || format!("{label} kappa={kappa} eta={eta}"),
                    );
                }
            }

            let r = g.exponent() as i64;
            let eps = ratio(1, r * rng.gen_range(1..=2));
            match almost_invariant_pair(&a, &eps, &AlmostInvariantConfig::default()) {
                Ok(out) if !out.good.is_empty() => {
                    match annihilator_containment_check(&out.f, &out.good, &eps) {
                        Ok(c) if c.hypothesis_holds() => containment.record(c.contained(), || label.clone()),
                        Ok(_) => containment.skipped += 1,
                        Err(e) => containment.record(false, || format!("{label}: {e}")),
                    }
                }
                Ok(_) => containment.skipped += 1,
                Err(e) => containment.record(false, || format!("{label}: {e}")),
            }

            let mode = if a.len() <= cfg.petridis_cap {
                PetridisMode::Exhaustive
            } else {
                PetridisMode::SinglesAndA
            };
            if mode == PetridisMode::Exhaustive {
                petridis.outcome(
                    petridis_subset_within(&a, &a, mode, cfg.petridis_cap).and_then(|p| {
                        let fam = petridis_family(g.clone(), 8, seed)?;
                        petridis_verify(&a, &p.z, &fam)
                    }),
                    || label.clone(),
                );
            } else {
                petridis.skipped += 1;
            }

            if a.len() <= PIPELINE_SET_LIMIT {
                let pc = PipelineConfig {
                    petridis_cap: cfg.petridis_cap,
                    seed,
                    ..PipelineConfig::default()
                };
                match run_pipeline(&a, &pc) {
                    Ok(rep) => {
                        let failed: Vec<String> = rep.failures().map(|c| c.name.clone()).collect();
                        pipeline.record(failed.is_empty(), || format!("{label}: {}", failed.join(", ")));
                    }
                    Err(e) => pipeline.record(false, || format!("{label}: {e}")),
                }
            } else {
                pipeline.skipped += 1;
            }
        }
    }

    let tallies = [
        &cover, &ruzsa, &iterated, &chains, &energy, &chang, &containment, &petridis, &pipeline,
    ];
    let mut checks: Vec<CheckRecord> = tallies.iter().map(|t| t.to_check()).collect();
    checks.push(CheckRecord::new(
        "properties exercised",
        "suite",
        tallies.iter().filter(|t| t.runs > 0).count(),
        Relation::Ge,
        1usize,
        CheckKind::Unconditional,
    ));
    Ok(SuiteOutcome {
        checks,
        result: json!({
            "group": g.moduli(),
            "per_family": cfg.per_family,
            "instances": instances,
            "properties": tallies.iter().map(|t| t.to_json()).collect::<Vec<_>>(),
        }),
    })
}

fn chain_properties(a: &GroupSet, label: &str, chains: &mut Tally, energy: &mut Tally) {
    let lim = ChainLimits::default();
    let half = ratio(1, 2);
    for d in deltas() {
        let mut x = match statistical_cover(a, a, &d) {
            Ok(c) => c.x,
            Err(e) => {
                chains.record(false, || format!("{label}: {e}"));
                continue;
            }
        };
        x.insert_idx(0);
        let xa = a.min_idx().expect("non-empty");
        for k in 1..=3usize {
            for mask in 0u32..1 << k {
                let s: BTreeSet<usize> = (1..=k).filter(|i| mask >> (i - 1) & 1 == 1).collect();
                let comp: BTreeSet<usize> = (1..=k).filter(|i| !s.contains(i)).collect();
                let l = || format!("{label} delta={d} k={k} S={s:?}");
                let built = covering_chain(a, &x, &d, xa, &s, k, lim).and_then(|c| {
                    let other = covering_chain(a, &x, &d, xa, &comp, k, lim)?;
                    Ok((c, other))
                });
                let (c, other) = match built {
                    Ok(p) => p,
                    Err(e) => {
                        chains.record(false, || format!("{}: {e}", l()));
                        continue;
                    }
                };
                let mut ok = verify_chain(&c).is_valid() && c.size_bound_holds();
                let meet = intersect_chains(&c, &other).ok();
                if let Some(i) = &meet {
                    ok &= verify_chain(i).is_valid() && i.size_bound_holds();
                }
                chains.record(ok, l);
                if d < half {
                    for chain in std::iter::once(&c).chain(meet.as_ref()) {
                        let eta = rat(1) - chain.nu.iter().min().expect("k >= 1");
                        if eta >= half {
                            energy.skipped += 1;
                            continue;
                        }
                        energy.outcome(
                            energy_bound_check(a, &x, chain, &d, &eta).map(|e| e.precondition && e.holds),
                            l,
                        );
                    }
                }
            }
        }
    }
}
