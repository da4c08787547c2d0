use std::path::Path;
use std::process::{Command, Output};

use freiman_core::chang::energy_floor;
use freiman_core::covering::verify_covered;
use freiman_core::func::smooth_by_tuple;
use freiman_core::{ratio, GroupElement, GroupSet, GroupSpec, Rational, RationalFunc};
use num_bigint::BigInt;
use serde_json::Value;
use std::sync::Arc;

fn freiman(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freiman"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn q(v: &Value) -> Rational {
    let n: BigInt = v["num"].to_string().parse().unwrap();
    let d: BigInt = v["den"].to_string().parse().unwrap();
    Rational::new(n, d)
}

fn set_from(input: &Value) -> GroupSet {
    let moduli: Vec<u32> = input["group"].as_array().unwrap().iter().map(|m| m.as_u64().unwrap() as u32).collect();
    let g = Arc::new(GroupSpec::new(moduli).unwrap());
    let els = coords_to_elements(&g, &input["elements"]);
    GroupSet::from_elements(g, &els).unwrap()
}

fn coords_to_elements(g: &GroupSpec, v: &Value) -> Vec<GroupElement> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|c| g.element(c.as_array().unwrap().iter().map(|x| x.as_u64().unwrap() as u32).collect()).unwrap())
        .collect()
}

fn without_timings(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timings");
    v
}

const Z7: &str = r#"{"group":[7],"elements":[[0],[1],[2]]}"#;

#[test]
fn cover_on_the_z7_example() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "a.json", Z7);
    let out = freiman(&["cover", "--input", &path, "--delta", "1/2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_of(&out);
    let c = &r["result"]["covers"][0];
    assert_eq!(c["X"], serde_json::json!([[0], [2]]));
    assert_eq!(q(&c["size_bound"]), ratio(7, 3));
    assert_eq!(q(&c["K"]), ratio(5, 3));
    assert_eq!(c["holds"], Value::Bool(true));
    assert_eq!(r["holds"], Value::Bool(true));
    assert_eq!(r["result"]["ruzsa"]["X"], serde_json::json!([[0]]));
}

#[test]
fn verify_lemmas_on_the_16_element_group() {
    let out = freiman(&["verify-lemmas", "--group", "2^4", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json_of(&out);
    assert_eq!(r["holds"], Value::Bool(true));
    for p in r["result"]["properties"].as_array().unwrap() {
        assert!(p["runs"].as_u64().unwrap() > 0, "{p}");
        assert_eq!(p["failure_count"], 0, "{p}");
    }
}

#[test]
fn pipeline_on_a_subgroup_has_ratio_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "subgroup.json",
        r#"{"group":[2,2,4],"elements":[[0,0,0],[1,0,0],[0,0,2],[1,0,2]]}"#,
    );
    let out = freiman(&["pipeline", "--input", &path]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json_of(&out);
    assert_eq!(q(&r["result"]["ratio"]), ratio(1, 1));
    assert_eq!(q(&r["result"]["K"]), ratio(1, 1));
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["holds"] == Value::Bool(true) || c["kind"] == "report-only"));
}

#[test]
fn reports_are_deterministic_apart_from_timings() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "a.json", r#"{"group":[3,3],"elements":[[0,0],[1,2],[2,2],[0,1]]}"#);
    for args in [
        vec!["verify-lemmas", "--group", "3x3", "--seed", "5", "--count", "2"],
        vec!["pipeline", "--input", &path, "--seed", "9"],
        vec!["chang", "--input", &path, "--kappa", "1/8"],
        vec!["spectrum", "--input", &path, "--epsilon", "1/3"],
        vec!["cover", "--group", "2^5", "--seed", "4", "--count", "3"],
    ] {
        let a = freiman(&args);
        let b = freiman(&args);
        assert_eq!(a.status.code(), Some(0), "{args:?}");
        assert_eq!(without_timings(json_of(&a)), without_timings(json_of(&b)), "{args:?}");
        assert!(json_of(&a)["timings"]["total_ms"].is_number());
    }
}

#[test]
fn output_flag_writes_the_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.json");
    let out = freiman(&["verify-lemmas", "--group", "5", "--count", "1", "--output", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let again = json_of(&freiman(&["verify-lemmas", "--group", "5", "--count", "1"]));
    assert_eq!(without_timings(written), without_timings(again));
}

#[test]
fn cover_report_replays_from_recorded_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let gen = freiman(&["gen", "--group", "2x4x8", "--family", "random", "--size", "11", "--seed", "3"]);
    assert_eq!(gen.status.code(), Some(0));
    let path = write(dir.path(), "a.json", std::str::from_utf8(&gen.stdout).unwrap());
    let r = json_of(&freiman(&["cover", "--input", &path, "--delta", "1/4"]));
    let a = set_from(&r["input"]);
    let c = &r["result"]["covers"][0];
    let delta = q(&c["delta"]);
    let x = GroupSet::from_elements(a.spec().clone(), &coords_to_elements(a.spec(), &c["X"])).unwrap();

    let k = Rational::new(BigInt::from(a.sumset(&a).unwrap().len()), BigInt::from(a.len()));
    assert_eq!(q(&c["K"]), k);
    assert_eq!(q(&c["size_bound"]), (&k - ratio(1, 1)) / &delta + ratio(1, 1));
    assert_eq!(q(&c["min_fraction"]), verify_covered(&a, &x, &delta).unwrap().min_fraction);
    for chk in r["checks"].as_array().unwrap() {
        let (l, rel, rr) = (q(&chk["lhs"]), chk["relation"].as_str().unwrap(), q(&chk["rhs"]));
        let holds = match rel {
            "<=" => l <= rr,
            ">=" => l >= rr,
            "==" => l == rr,
            "<" => l < rr,
            _ => unreachable!(),
        };
        assert_eq!(chk["holds"].as_bool().unwrap(), holds, "{chk}");
    }
}

#[test]
fn chang_energies_replay_from_the_recorded_tuple() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "a.json", Z7);
    let r = json_of(&freiman(&["chang", "--input", &path, "--kappa", "1/4", "--eta", "1/2"]));
    let a = set_from(&r["input"]);
    let g = a.spec();
    let tuple: Vec<usize> = coords_to_elements(g, &r["result"]["tuple"])
        .iter()
        .map(|e| g.index_of(e).unwrap())
        .collect();
    let energies: Vec<Rational> = r["result"]["energies"].as_array().unwrap().iter().map(q).collect();
    assert_eq!(energies.len(), tuple.len() + 1);
    let h = RationalFunc::indicator(&a);
    for (i, e) in energies.iter().enumerate() {
        assert_eq!(*e, smooth_by_tuple(&h, &tuple[..i]).l2_sq());
        assert!(*e >= energy_floor(&a));
    }
    assert_eq!(energies[0], ratio(3, 1));
}

#[test]
fn spectrum_floats_carry_17_digits() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "a.json", Z7);
    let out = freiman(&["spectrum", "--input", &path, "--epsilon", "1/3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let r: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(r["result"]["spectrum_size"], 3);
    assert_eq!(r["result"]["annihilator"], serde_json::json!([[0]]));
    let m = r["result"]["spectrum"][1]["magnitude"].to_string();
    let mantissa = m.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{m}");
}

#[test]
fn covering_sweep_csv() {
    let out = freiman(&["cover", "--group", "3^2", "--count", "2", "--delta", "1/4", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "family,seed,K_num,K_den,delta,X_size,bound_num,bound_den,holds");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8);
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 9);
        assert_eq!(f[4], "1/4");
        let bound = Rational::new(f[6].parse::<BigInt>().unwrap(), f[7].parse::<BigInt>().unwrap());
        let k = Rational::new(f[2].parse::<BigInt>().unwrap(), f[3].parse::<BigInt>().unwrap());
        assert_eq!(bound, (k - ratio(1, 1)) * ratio(4, 1) + ratio(1, 1));
        assert!(Rational::from_integer(f[5].parse::<BigInt>().unwrap()) <= bound);
        assert_eq!(f[8], "true");
    }
}

#[test]
fn gen_round_trips_and_is_seeded() {
    for fam in ["random", "subgroup", "coset-union", "independent"] {
        let a = freiman(&["gen", "--group", "3x9", "--family", fam, "--seed", "11"]);
        let b = freiman(&["gen", "--group", "3x9", "--family", fam, "--seed", "11"]);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout);
        let v: Value = serde_json::from_slice(&a.stdout).unwrap();
        assert_eq!(v["group"], serde_json::json!([3, 9]));
        assert!(!v["elements"].as_array().unwrap().is_empty());
    }
}

#[test]
fn bad_input_exits_2_with_a_position() {
    let dir = tempfile::tempdir().unwrap();
    let range = write(dir.path(), "r.json", "{\"group\":[2,2],\n\"elements\":[[0,1],\n[4,0]]}");
    let dup = write(dir.path(), "d.json", r#"{"group":[2,2],"elements":[[0,1],[1,0],[0,1]]}"#);
    let syntax = write(dir.path(), "s.json", "{\"group\":[2,2],\n\"elements\":[[0,1]\n");
    for (path, needle) in [(&range, "line 3"), (&dup, "duplicates element 0"), (&syntax, "line 3")] {
        let out = freiman(&["cover", "--input", path]);
        assert_eq!(out.status.code(), Some(2));
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{err}");
        assert!(err.contains("column"), "{err}");
    }
}

#[test]
fn bad_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "a.json", Z7);
    for args in [
        vec!["cover", "--input", &path, "--delta", "0.5"],
        vec!["cover", "--input", &path, "--delta", "3/2"],
        vec!["cover", "--input", &path, "--group", "2^3"],
        vec!["cover", "--input", "/nonexistent/a.json"],
        vec!["verify-lemmas"],
        vec!["verify-lemmas", "--group", "2x"],
        vec!["spectrum", "--input", &path, "--epsilon", "1e-2"],
        vec!["chang", "--input", &path, "--kappa", "2"],
        vec!["gen", "--group", "2^3", "--size", "9"],
        vec!["pipeline", "--input", &path, "--format", "xml"],
        vec!["frobnicate"],
    ] {
        let out = freiman(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
