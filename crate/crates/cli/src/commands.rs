//! Subcommand implementations. Each returns the number of failed
//! unconditional checks.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use freiman_core::chang::{chang_iterate, energy_floor, energy_floor_steps, invariant_set, ChangOutcome};
use freiman_core::covering::{ruzsa_cover, statistical_cover, verify_covered};
use freiman_core::fourier::{annihilator, dft, large_spectrum};
use freiman_core::func::rational_to_f64;
use freiman_core::pipeline::{
    CheckKind, CheckRecord, PipelineConfig, Relation, DEFAULT_PETRIDIS_CAP,
};
use freiman_core::{ratio, GroupSet, GroupSpec, Rational, RationalFunc};
use num_bigint::BigInt;
use serde_json::{json, Map, Value};

use crate::report::{self, Report, SweepRow};
use crate::setfile::{read_set_file, set_file_json};
use crate::suite::{self, SuiteConfig};
use crate::{Failure, Flags, Format};

use CheckKind::{ReportOnly, Unconditional};

fn rat(n: usize) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn group_text(g: &GroupSpec) -> String {
    g.moduli().iter().map(|m| m.to_string()).collect::<Vec<_>>().join("x")
}

/// Flags that shape the output, echoed into the report.
fn echo(flags: &Flags) -> Map<String, Value> {
    let mut m = Map::new();
    let mut put = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            m.insert(k.to_string(), Value::String(v));
        }
    };
    put("group", flags.group.as_ref().map(group_text));
    put("input", flags.input.as_ref().map(|p| p.display().to_string()));
    put("delta", flags.delta.as_ref().map(|q| q.to_string()));
    put("epsilon", flags.epsilon.as_ref().map(|q| q.to_string()));
    put("kappa", flags.kappa.as_ref().map(|q| q.to_string()));
    put("eta", flags.eta.as_ref().map(|q| q.to_string()));
    put("k", flags.k.map(|k| k.to_string()));
    put("cap", flags.cap.map(|k| k.to_string()));
    put("count", flags.count.map(|k| k.to_string()));
    put("family", flags.family.map(|f| f.name().to_string()));
    put("size", flags.size.map(|k| k.to_string()));
    m
}

struct Input {
    set: GroupSet,
    json: Value,
}

fn load_input(flags: &Flags) -> Result<Input, Failure> {
    let path = flags
        .input
        .as_ref()
        .ok_or_else(|| Failure::Input("--input is required".into()))?;
    let (set, bytes) = read_set_file(path).map_err(Failure::Input)?;
    if let Some(g) = &flags.group {
        if g != &**set.spec() {
            return Err(Failure::Input(format!(
                "--group {} does not match the input group {}",
                group_text(g),
                group_text(set.spec())
            )));
        }
    }
    if set.is_empty() {
        return Err(Failure::Input("input set is empty".into()));
    }
    let mut json = set_file_json(&set);
    json["digest"] = Value::String(report::digest(&bytes));
    Ok(Input { set, json })
}

fn require_group(flags: &Flags) -> Result<Arc<GroupSpec>, Failure> {
    flags
        .group
        .clone()
        .map(Arc::new)
        .ok_or_else(|| Failure::Input("--group is required".into()))
}

fn emit(flags: &Flags, text: &str) -> Result<(), Failure> {
    match &flags.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Input(format!("stdout: {e}")))
        }
    }
}

fn emit_report(flags: &Flags, r: &Report) -> Result<usize, Failure> {
    let text = match flags.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&r.to_json()).expect("serializable");
            s.push('\n');
            s
        }
        Format::Csv => r.checks_csv().map_err(|e| Failure::Input(e.to_string()))?,
    };
    emit(flags, &text)?;
    Ok(r.failures())
}

pub fn run(name: &'static str, flags: &Flags) -> Result<usize, Failure> {
    let start = Instant::now();
    let (input, result, checks) = match name {
        "cover" => cover(flags)?,
        "chang" => chang(flags)?,
        "spectrum" => spectrum(flags)?,
        "pipeline" => pipeline(flags)?,
        "verify-lemmas" => verify_lemmas(flags)?,
        "gen" => return gen(flags),
        _ => unreachable!("clap rejects unknown subcommands"),
    };
    if name == "cover" && flags.format == Format::Csv {
        // The covering CSV is the sweep table, not the check list.
        let rows = rows_from_result(&result);
        let text = report::sweep_csv(&rows).map_err(|e| Failure::Input(e.to_string()))?;
        emit(flags, &text)?;
        return Ok(checks.iter().filter(|c| c.failed()).count());
    }
    let r = Report {
        command: name,
        flags: echo(flags),
        input,
        seed: flags.seed,
        result,
        checks,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    emit_report(flags, &r)
}

type Outcome = (Value, Value, Vec<CheckRecord>);

// ---------------------------------------------------------------------------
// cover

fn cover_one(a: &GroupSet, delta: &Rational, family: &str, seed: u64, checks: &mut Vec<CheckRecord>) -> Result<(Value, SweepRow), Failure> {
    const ANCHOR: &str = "statistical covering";
    let cert = statistical_cover(a, a, delta)?;
    let cov = verify_covered(a, &cert.x, delta)?;
    let growth_bad = cert
        .sumset_sizes
        .iter()
        .enumerate()
        .filter(|&(i, &s)| i > 0 && rat(s) <= delta * rat(cert.b_len) * rat(i) + rat(cert.b_len))
        .count();
    let tag = if family == "input" { String::new() } else { format!(" {family}/{seed} delta={delta}") };
    let size = CheckRecord::new(format!("cover size{tag}"), ANCHOR, cert.x.len(), Relation::Le, cert.size_bound.clone(), Unconditional);
    let holds = size.holds && cov.holds;
    checks.push(size);
    checks.push(CheckRecord::new(
        format!("cover fraction{tag}"),
        ANCHOR,
        cov.min_fraction.clone(),
        Relation::Ge,
        Rational::from_integer(1.into()) - delta,
        Unconditional,
    ));
    checks.push(CheckRecord::new(format!("cover growth{tag}"), ANCHOR, growth_bad, Relation::Eq, 0usize, Unconditional));
    let json = json!({
        "family": family,
        "seed": seed,
        "size": a.len(),
        "K": report::rational(&cert.k),
        "delta": report::rational(delta),
        "X": report::elements(&cert.x),
        "X_size": cert.x.len(),
        "size_bound": report::rational(&cert.size_bound),
        "min_fraction": report::rational(&cov.min_fraction),
        "trace": report::coords(a, &cert.trace),
        "sumset_sizes": cert.sumset_sizes,
        "holds": holds,
    });
    let row = SweepRow {
        family: family.to_string(),
        seed,
        k: cert.k.clone(),
        delta: delta.clone(),
        x_size: cert.x.len(),
        bound: cert.size_bound.clone(),
        holds,
    };
    Ok((json, row))
}

fn rows_from_result(result: &Value) -> Vec<SweepRow> {
    let q = |v: &Value| -> Rational {
        let n: BigInt = v["num"].to_string().parse().expect("integer");
        let d: BigInt = v["den"].to_string().parse().expect("integer");
        Rational::new(n, d)
    };
    result["covers"]
        .as_array()
        .expect("cover result")
        .iter()
        .map(|c| SweepRow {
            family: c["family"].as_str().expect("family").to_string(),
            seed: c["seed"].as_u64().expect("seed"),
            k: q(&c["K"]),
            delta: q(&c["delta"]),
            x_size: c["X_size"].as_u64().expect("size") as usize,
            bound: q(&c["size_bound"]),
            holds: c["holds"].as_bool().expect("holds"),
        })
        .collect()
}

fn check_delta(d: &Rational) -> Result<(), Failure> {
    if *d > ratio(0, 1) && *d <= ratio(1, 1) {
        Ok(())
    } else {
        Err(Failure::Input(format!("--delta {d} must lie in (0, 1]")))
    }
}

fn cover(flags: &Flags) -> Result<Outcome, Failure> {
    let mut checks = Vec::new();
    let mut covers = Vec::new();
    if flags.input.is_some() {
        let input = load_input(flags)?;
        let a = &input.set;
        let delta = flags.delta.clone().unwrap_or_else(|| ratio(1, 2));
        check_delta(&delta)?;
        let (one, _) = cover_one(a, &delta, "input", flags.seed, &mut checks)?;
        covers.push(one);

        const RUZSA: &str = "ruzsa covering";
        let r = ruzsa_cover(a, a)?;
        let aa = a.sumset(a)?;
        let back = r.x.sumset(a)?.sumset(&a.negated())?;
        let uncovered = a.indices().filter(|&i| !back.contains_idx(i)).count();
        checks.push(CheckRecord::new("ruzsa size", RUZSA, r.x.len() * a.len(), Relation::Le, aa.len(), Unconditional));
        checks.push(CheckRecord::new("ruzsa covering", RUZSA, uncovered, Relation::Eq, 0usize, Unconditional));
        checks.push(CheckRecord::new(
            "ruzsa separation",
            RUZSA,
            r.x.sumset(a)?.len(),
            Relation::Eq,
            r.x.len() * a.len(),
            Unconditional,
        ));
        let result = json!({
            "covers": covers,
            "ruzsa": {
                "X": report::elements(&r.x),
                "X_size": r.x.len(),
                "bound": report::rational(&Rational::new(BigInt::from(aa.len()), BigInt::from(a.len()))),
            },
        });
        return Ok((input.json, result, checks));
    }

    let g = require_group(flags)?;
    let deltas = match &flags.delta {
        Some(d) => {
            check_delta(d)?;
            vec![d.clone()]
        }
        None => suite::deltas(),
    };
    let count = flags.count.unwrap_or(10) as u64;
    for fam in suite::FAMILIES {
        for seed in flags.seed..flags.seed + count {
            let a = suite::family_instance(&g, fam, seed, flags.size)?;
            for d in &deltas {
                covers.push(cover_one(&a, d, fam, seed, &mut checks)?.0);
            }
        }
    }
    Ok((Value::Null, json!({ "covers": covers }), checks))
}

// ---------------------------------------------------------------------------
// chang

fn chang(flags: &Flags) -> Result<Outcome, Failure> {
    const ANCHOR: &str = "energy decrement";
    let input = load_input(flags)?;
    let a = &input.set;
    let kappa = flags.kappa.clone().unwrap_or_else(|| ratio(1, 4));
    let eta = flags.eta.clone().unwrap_or_else(|| ratio(1, 2));
    let k_max = flags
        .k
        .unwrap_or_else(|| energy_floor_steps(a.spec().order(), a.len(), rational_to_f64(&kappa)));
    let h = RationalFunc::indicator(a);
    let out = chang_iterate(&h, a, &kappa, &eta, k_max)?;

    let mut checks = Vec::new();
    let quarter = ratio(1, 4);
    for (i, s) in out.steps().iter().enumerate() {
        checks.push(CheckRecord::new(
            format!("step {} identity", i + 1),
            ANCHOR,
            &s.new_energy + &s.defect * &quarter,
            Relation::Eq,
            s.old_energy.clone(),
            Unconditional,
        ));
        checks.push(CheckRecord::new(
            format!("step {} decrement", i + 1),
            ANCHOR,
            s.new_energy.clone(),
            Relation::Le,
            (ratio(1, 1) - &kappa * &quarter) * &s.old_energy,
            Unconditional,
        ));
    }
    let last = out.energies().last().expect("initial energy").clone();
    checks.push(CheckRecord::new("energy floor", ANCHOR, last, Relation::Ge, energy_floor(a), Unconditional));
    let witnesses = match &out {
        ChangOutcome::Invariant { tuple, witnesses, .. } => {
            checks.push(CheckRecord::new(
                "witness count",
                ANCHOR,
                witnesses.len(),
                Relation::Ge,
                &eta * rat(a.len()),
                Unconditional,
            ));
            let again = invariant_set(&h, a, tuple, &kappa)?;
            let diff = again.indices().filter(|&i| !witnesses.contains_idx(i)).count()
                + witnesses.indices().filter(|&i| !again.contains_idx(i)).count();
            checks.push(CheckRecord::new("witness recheck", ANCHOR, diff, Relation::Eq, 0usize, Unconditional));
            Value::from(report::elements(witnesses))
        }
        ChangOutcome::Decrement { .. } => Value::Null,
    };
    let result = json!({
        "kappa": report::rational(&kappa),
        "eta": report::rational(&eta),
        "k_max": k_max,
        "outcome": if out.is_invariant() { "invariant" } else { "decrement" },
        "tuple": report::coords(a, out.tuple()),
        "energies": out.energies().iter().map(report::rational).collect::<Vec<_>>(),
        "witnesses": witnesses,
    });
    Ok((input.json, result, checks))
}

// ---------------------------------------------------------------------------
// spectrum

fn spectrum(flags: &Flags) -> Result<Outcome, Failure> {
    const ANCHOR: &str = "large spectrum";
    let input = load_input(flags)?;
    let a = &input.set;
    let eps = flags.epsilon.clone().unwrap_or_else(|| ratio(1, 2));
    if !(eps > ratio(0, 1) && eps <= ratio(1, 1)) {
        return Err(Failure::Input(format!("--epsilon {eps} must lie in (0, 1]")));
    }
    let f = RationalFunc::indicator(a);
    let fhat = dft(&f);
    let l1 = a.len() as f64;
    let spec = large_spectrum(&fhat, l1, rational_to_f64(&eps));
    let ann = annihilator(&spec);
    let g = a.spec();

    let energy: f64 = fhat.values().iter().map(|v| v.norm_sqr()).sum();
    let expected = g.order() as f64 * l1;
    let mut checks = vec![
        CheckRecord::new(
            "parseval relative error",
            ANCHOR,
            ((energy - expected) / expected).abs(),
            Relation::Le,
            1e-9,
            Unconditional,
        ),
        CheckRecord::new("trivial character", ANCHOR, usize::from(spec.contains_trivial()), Relation::Eq, 1usize, Unconditional),
        CheckRecord::new("annihilator closure", ANCHOR, ann.closure().len(), Relation::Eq, ann.len(), Unconditional),
    ];
    // Every character in the spectrum is trivial on the annihilator.
    let bad = spec
        .indices()
        .filter(|&gamma| ann.indices().any(|x| g.phase_idx(gamma, x) != 0))
        .count();
    checks.push(CheckRecord::new("annihilator orthogonality", ANCHOR, bad, Relation::Eq, 0usize, Unconditional));
    checks.push(CheckRecord::new("spectrum size", ANCHOR, spec.len(), Relation::Le, g.order(), ReportOnly));

    let chars: Vec<Value> = spec
        .indices()
        .map(|gamma| {
            json!({
                "character": g.element_at(gamma).expect("in range").into_coords(),
                "magnitude": report::float(fhat.at(gamma).norm() / l1),
            })
        })
        .collect();
    let result = json!({
        "epsilon": report::rational(&eps),
        "spectrum": chars,
        "spectrum_size": spec.len(),
        "annihilator": report::elements(&ann),
        "annihilator_size": ann.len(),
    });
    Ok((input.json, result, checks))
}

// ---------------------------------------------------------------------------
// pipeline

fn pipeline(flags: &Flags) -> Result<Outcome, Failure> {
    let input = load_input(flags)?;
    let a = &input.set;
    let cfg = PipelineConfig {
        petridis_cap: flags.cap.unwrap_or(DEFAULT_PETRIDIS_CAP),
        seed: flags.seed,
        ..PipelineConfig::default()
    };
    let rep = freiman_core::pipeline::run_pipeline(a, &cfg)?;
    let result = json!({
        "K": report::rational(&rep.k),
        "exponent": rep.exponent,
        "Z": report::elements(&rep.z.z),
        "Z_ratio": report::rational(&rep.z.ratio),
        "petridis_restricted": rep.z.restricted,
        "epsilon": report::rational(&rep.epsilon),
        "eta": report::rational(&rep.eta),
        "stage1": stage(&rep.stage1),
        "stage2": stage(&rep.stage2),
        "S_size": rep.s.len(),
        "final_subset": report::elements(&rep.z3.z),
        "final_subgroup_size": rep.v3.len(),
        "closure_size": rep.closure.len(),
        "ratio": report::rational(&rep.ratio),
        "comparison": report::float(rep.comparison),
    });
    Ok((input.json, result, rep.checks))
}

fn stage(s: &freiman_core::pipeline::AlmostInvariant) -> Value {
    json!({
        "epsilon": report::rational(&s.epsilon),
        "delta": report::rational(&s.delta),
        "kappa": report::rational(&s.kappa),
        "X_size": s.x.len(),
        "tuple_length": s.tuple.len(),
        "step_bound": s.step_bound,
        "V_size": s.v.len(),
        "good_size": s.good.len(),
        "witnesses": s.witnesses.len(),
    })
}

// ---------------------------------------------------------------------------
// verify-lemmas

fn verify_lemmas(flags: &Flags) -> Result<Outcome, Failure> {
    let g = require_group(flags)?;
    let cfg = SuiteConfig {
        per_family: flags.count.unwrap_or(3),
        seed: flags.seed,
        petridis_cap: flags.cap.unwrap_or(DEFAULT_PETRIDIS_CAP),
    };
    let out = suite::run_suite(&g, &cfg)?;
    Ok((Value::Null, out.result, out.checks))
}

// ---------------------------------------------------------------------------
// gen

fn gen(flags: &Flags) -> Result<usize, Failure> {
    let g = require_group(flags)?;
    let family = flags.family.unwrap_or(crate::Family::Random);
    let a = suite::family_instance(&g, family.name(), flags.seed, flags.size)?;
    let mut text = serde_json::to_string(&set_file_json(&a)).expect("serializable");
    text.push('\n');
    emit(flags, &text)?;
    Ok(0)
}
