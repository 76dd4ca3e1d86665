use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use super::Instance;
use crate::error::{Error, Result};
use crate::prob::Item;

pub const SCHEMA_VERSION: u64 = 1;

/// Serializes with shortest round-trip float formatting, so reading the text
/// back yields bit-identical values.
pub fn to_json_string(inst: &Instance) -> String {
    let items: Vec<Value> = inst
        .items
        .iter()
        .map(|it| json!({"p": it.p(), "s": it.s()}))
        .collect();
    let mut root = Map::new();
    root.insert("version".into(), SCHEMA_VERSION.into());
    root.insert("label".into(), inst.label.clone().into());
    root.insert("s_max".into(), inst.s_max.into());
    root.insert("seed".into(), inst.seed.into());
    if !inst.meta.is_empty() {
        root.insert(
            "meta".into(),
            Value::Object(inst.meta.clone().into_iter().collect()),
        );
    }
    root.insert("items".into(), Value::Array(items));
    let mut text =
        serde_json::to_string_pretty(&Value::Object(root)).expect("json values serialize");
    text.push('\n');
    text
}

fn field<'a>(obj: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::schema(format!("{path}.{key}"), "missing field"))
}

fn number(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::schema(path, format!("expected a number, found {v}")))
}

pub fn from_json_str(text: &str) -> Result<Instance> {
    let root: Value = serde_json::from_str(text)?;
    let obj = root
        .as_object()
        .ok_or_else(|| Error::schema("$", "expected an object"))?;

    let version = field(obj, "$", "version")?;
    if version.as_u64() != Some(SCHEMA_VERSION) {
        return Err(Error::schema(
            "$.version",
            format!("unsupported version {version}"),
        ));
    }
    let label = field(obj, "$", "label")?
        .as_str()
        .ok_or_else(|| Error::schema("$.label", "expected a string"))?
        .to_owned();
    let s_max = number(field(obj, "$", "s_max")?, "$.s_max")?;
    if !(s_max > 0.0 && s_max <= 1.0) {
        return Err(Error::schema("$.s_max", format!("{s_max} not in (0, 1]")));
    }
    let seed = field(obj, "$", "seed")?
        .as_u64()
        .ok_or_else(|| Error::schema("$.seed", "expected a nonnegative 64-bit integer"))?;
    let meta: BTreeMap<String, Value> = match obj.get("meta") {
        None => BTreeMap::new(),
        Some(Value::Object(m)) => m.clone().into_iter().collect(),
        Some(_) => return Err(Error::schema("$.meta", "expected an object")),
    };

    let raw_items = field(obj, "$", "items")?
        .as_array()
        .ok_or_else(|| Error::schema("$.items", "expected an array"))?;
    let mut items = Vec::with_capacity(raw_items.len());
    for (i, raw) in raw_items.iter().enumerate() {
        let path = format!("$.items[{i}]");
        let o = raw
            .as_object()
            .ok_or_else(|| Error::schema(&path, "expected an object"))?;
        let p = number(field(o, &path, "p")?, &format!("{path}.p"))?;
        let s = number(field(o, &path, "s")?, &format!("{path}.s"))?;
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::schema(
                format!("{path}.p"),
                format!("{p} not in (0, 1]"),
            ));
        }
        if !(s > 0.0 && s <= s_max) {
            return Err(Error::schema(
                format!("{path}.s"),
                format!("{s} not in (0, s_max = {s_max}]"),
            ));
        }
        items.push(Item::new(p, s)?);
    }

    let mut inst = Instance::new(items, s_max, label, seed)?;
    inst.meta = meta;
    Ok(inst)
}

pub fn write_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_json_string(inst))?;
    Ok(())
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance> {
    from_json_str(&fs::read_to_string(path)?)
}
