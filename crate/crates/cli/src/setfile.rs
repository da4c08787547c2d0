//! JSON set files: `{"group": [m1, ...], "elements": [[c1, ...], ...]}`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use freiman_core::{GroupSet, GroupSpec};
use serde::de::{self, DeserializeSeed, Deserializer, IgnoredAny, MapAccess, SeqAccess, Visitor};
use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl From<serde_json::Error> for ParseError {
    fn from(e: serde_json::Error) -> Self {
        // serde_json appends " at line L column C"; keep the bare message.
        let full = e.to_string();
        let message = match full.rfind(" at line ") {
            Some(i) => full[..i].to_string(),
            None => full,
        };
        ParseError {
            line: e.line().max(1),
            column: e.column().max(1),
            message,
        }
    }
}

fn position_of(text: &str, needle: &str) -> (usize, usize) {
    let Some(offset) = text.find(needle) else {
        return (1, 1);
    };
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(offset, |nl| offset - nl - 1) + 1;
    (line, column)
}

/// Parses the text of a set file into a canonical set.
pub fn parse_set_text(text: &str) -> Result<GroupSet, ParseError> {
    // First pass: syntax and the group, wherever it appears in the object.
    let value: Value = serde_json::from_str(text)?;
    let at_group = |message: String| {
        let (line, column) = position_of(text, "\"group\"");
        ParseError { line, column, message }
    };
    let Value::Object(obj) = &value else {
        return Err(ParseError {
            line: 1,
            column: 1,
            message: "expected a JSON object".into(),
        });
    };
    let group = obj
        .get("group")
        .ok_or_else(|| ParseError {
            line: 1,
            column: 1,
            message: "missing field `group`".into(),
        })?
        .as_array()
        .ok_or_else(|| at_group("`group` must be an array of moduli".into()))?;
    let moduli = group
        .iter()
        .map(|m| m.as_u64().filter(|&m| m <= u32::MAX as u64).map(|m| m as u32))
        .collect::<Option<Vec<u32>>>()
        .ok_or_else(|| at_group("moduli must be positive integers".into()))?;
    let spec = Arc::new(GroupSpec::new(moduli).map_err(|e| at_group(e.to_string()))?);

    // Second pass: elements, validated as they stream so errors carry the
    // position of the offending entry.
    let mut de = serde_json::Deserializer::from_str(text);
    let indices = FileSeed { spec: &spec }.deserialize(&mut de)?;
    de.end()?;
    GroupSet::from_indices(spec, indices).map_err(|e| ParseError {
        line: 1,
        column: 1,
        message: e.to_string(),
    })
}

pub fn read_set_file(path: &std::path::Path) -> Result<(GroupSet, Vec<u8>), String> {
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| format!("{}: {e}", path.display()))?;
    let set = parse_set_text(text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((set, bytes))
}

pub fn set_file_json(a: &GroupSet) -> Value {
    json!({
        "group": a.spec().moduli(),
        "elements": crate::report::elements(a),
    })
}

struct FileSeed<'a> {
    spec: &'a GroupSpec,
}

impl<'de> DeserializeSeed<'de> for FileSeed<'_> {
    type Value = Vec<usize>;

    fn deserialize<D: Deserializer<'de>>(self, d: D) -> Result<Self::Value, D::Error> {
        d.deserialize_map(self)
    }
}

impl<'de> Visitor<'de> for FileSeed<'_> {
    type Value = Vec<usize>;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a set file object")
    }

    fn visit_map<M: MapAccess<'de>>(self, mut map: M) -> Result<Self::Value, M::Error> {
        let mut elements = None;
        while let Some(key) = map.next_key::<String>()? {
            match key.as_str() {
                "group" => {
                    map.next_value::<IgnoredAny>()?;
                }
                "elements" => {
                    if elements.is_some() {
                        return Err(de::Error::duplicate_field("elements"));
                    }
                    elements = Some(map.next_value_seed(ElementsSeed { spec: self.spec })?);
                }
                other => return Err(de::Error::unknown_field(other, &["group", "elements"])),
            }
        }
        elements.ok_or_else(|| de::Error::missing_field("elements"))
    }
}

struct ElementsSeed<'a> {
    spec: &'a GroupSpec,
}

impl<'de> DeserializeSeed<'de> for ElementsSeed<'_> {
    type Value = Vec<usize>;

    fn deserialize<D: Deserializer<'de>>(self, d: D) -> Result<Self::Value, D::Error> {
        d.deserialize_seq(self)
    }
}

impl<'de> Visitor<'de> for ElementsSeed<'_> {
    type Value = Vec<usize>;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a list of coordinate tuples")
    }

    fn visit_seq<S: SeqAccess<'de>>(self, mut seq: S) -> Result<Self::Value, S::Error> {
        let moduli = self.spec.moduli();
        let mut seen: HashMap<usize, usize> = HashMap::new();
        let mut out = Vec::new();
        while let Some(coords) = seq.next_element::<Vec<i64>>()? {
            let i = out.len();
            if coords.len() != moduli.len() {
                return Err(de::Error::custom(format!(
                    "element {i} has {} coordinates, group has {} factors",
                    coords.len(),
                    moduli.len()
                )));
            }
            for (j, (&c, &m)) in coords.iter().zip(moduli).enumerate() {
                if c < 0 || c >= m as i64 {
                    return Err(de::Error::custom(format!(
                        "element {i}: coordinate {c} at position {j} is outside [0, {m})"
                    )));
                }
            }
            let el = self
                .spec
                .element(coords.iter().map(|&c| c as u32).collect())
                .map_err(de::Error::custom)?;
            let idx = self.spec.index_of(&el).map_err(de::Error::custom)?;
            if let Some(first) = seen.insert(idx, i) {
                return Err(de::Error::custom(format!("element {i} duplicates element {first}")));
            }
            out.push(idx);
        }
        Ok(out)
    }
}
