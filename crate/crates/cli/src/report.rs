//! JSON and CSV rendering of reports.

use std::str::FromStr;

use freiman_core::pipeline::{CheckKind, CheckRecord, Quantity};
use freiman_core::{GroupSet, Rational};
use num_bigint::BigInt;
use serde_json::{json, Map, Number, Value};
use sha2::{Digest, Sha256};

pub fn big(n: &BigInt) -> Value {
    Value::Number(Number::from_str(&n.to_string()).expect("integer literal"))
}

pub fn rational(q: &Rational) -> Value {
    json!({ "num": big(q.numer()), "den": big(q.denom()) })
}

/// 17 significant digits; non-finite values become `null`.
pub fn float(v: f64) -> Value {
    if !v.is_finite() {
        return Value::Null;
    }
    Value::Number(Number::from_str(&format!("{v:.16e}")).expect("float literal"))
}

pub fn quantity(q: &Quantity) -> Value {
    match q {
        Quantity::Exact(r) => rational(r),
        Quantity::Approx(v) => float(*v),
    }
}

pub fn quantity_text(q: &Quantity) -> String {
    match q {
        Quantity::Exact(r) => r.to_string(),
        Quantity::Approx(v) => format!("{v:.16e}"),
    }
}

pub fn kind_name(k: CheckKind) -> &'static str {
    match k {
        CheckKind::Unconditional => "unconditional",
        CheckKind::ReportOnly => "report-only",
    }
}

pub fn check(c: &CheckRecord) -> Value {
    json!({
        "name": c.name,
        "anchor": c.anchor,
        "lhs": quantity(&c.lhs),
        "relation": c.relation.symbol(),
        "rhs": quantity(&c.rhs),
        "holds": c.holds,
        "kind": kind_name(c.kind),
    })
}

pub fn elements(a: &GroupSet) -> Vec<Vec<u32>> {
    a.elements().into_iter().map(|e| e.into_coords()).collect()
}

pub fn coords(a: &GroupSet, idx: &[usize]) -> Vec<Vec<u32>> {
    idx.iter()
        .map(|&i| a.spec().element_at(i).expect("index in range").into_coords())
        .collect()
}

pub fn digest(bytes: &[u8]) -> String {
    let d = Sha256::digest(bytes);
    let hex: String = d.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

pub struct Report {
    pub command: &'static str,
    pub flags: Map<String, Value>,
    pub input: Value,
    pub seed: u64,
    pub result: Value,
    pub checks: Vec<CheckRecord>,
    pub elapsed_ms: f64,
}

impl Report {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| c.failed()).count()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "flags": self.flags,
            "input": self.input,
            "seed": self.seed,
            "result": self.result,
            "checks": self.checks.iter().map(check).collect::<Vec<_>>(),
            "holds": self.failures() == 0,
            "timings": { "total_ms": float(self.elapsed_ms) },
        })
    }

    pub fn checks_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "anchor", "lhs", "relation", "rhs", "holds", "kind"])?;
        for c in &self.checks {
            w.write_record([
                c.name.as_str(),
                c.anchor,
                &quantity_text(&c.lhs),
                c.relation.symbol(),
                &quantity_text(&c.rhs),
                if c.holds { "true" } else { "false" },
                kind_name(c.kind),
            ])?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8"))
    }
}

/// One row of a covering sweep.
pub struct SweepRow {
    pub family: String,
    pub seed: u64,
    pub k: Rational,
    pub delta: Rational,
    pub x_size: usize,
    pub bound: Rational,
    pub holds: bool,
}

pub const SWEEP_HEADER: [&str; 9] = [
    "family", "seed", "K_num", "K_den", "delta", "X_size", "bound_num", "bound_den", "holds",
];

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            r.family.clone(),
            r.seed.to_string(),
            r.k.numer().to_string(),
            r.k.denom().to_string(),
            r.delta.to_string(),
            r.x_size.to_string(),
            r.bound.numer().to_string(),
            r.bound.denom().to_string(),
            r.holds.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8"))
}
