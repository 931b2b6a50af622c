//! Preset JSON files.
//!
//! The emitter writes one array per line, like the reference sample. The
//! parser additionally accepts the sample's elided grid shorthand
//! `[0.0, 0.01, ..., 1.0]` and expands it to the full progression.

use std::fmt::Write;

use indexmap::IndexMap;
use serde_json::Value;

use super::IoError;
use crate::model::FxType;
use crate::preset::PresetFile;

/// Replace every `[a, b, ..., z]` with the explicit arithmetic progression.
pub fn expand_elisions(text: &str) -> Result<String, IoError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(dots) = rest.find("...") {
        let open = rest[..dots]
            .rfind('[')
            .ok_or_else(|| IoError::schema("valid_params", "`...` outside a list"))?;
        let close = dots
            + rest[dots..]
                .find(']')
                .ok_or_else(|| IoError::schema("valid_params", "unclosed list"))?;
        let nums = |s: &str| -> Result<Vec<f64>, IoError> {
            s.split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>().map_err(|_| {
                        IoError::schema("valid_params", format!("`{t}` is not a number"))
                    })
                })
                .collect()
        };
        let head = nums(&rest[open + 1..dots])?;
        let tail = nums(&rest[dots + 3..close])?;
        let (&[a, b, ..], Some(&z)) = (head.as_slice(), tail.last()) else {
            return Err(IoError::schema(
                "valid_params",
                "elided list needs two leading values and a last value",
            ));
        };
        let n = ((z - a) / (b - a)).round();
        if !(n.is_finite() && n >= 1.0) || n > 1e7 {
            return Err(IoError::schema(
                "valid_params",
                "elided list is not an increasing progression",
            ));
        }
        let n = n as usize;
        let values: Vec<String> = (0..=n)
            .map(|i| format!("{:?}", a + (z - a) * i as f64 / n as f64))
            .collect();
        out.push_str(&rest[..open]);
        out.push('[');
        out.push_str(&values.join(", "));
        out.push(']');
        rest = &rest[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

pub fn parse_preset_json(text: &str) -> Result<PresetFile, IoError> {
    let expanded = expand_elisions(text)?;
    let root: Value = serde_json::from_str(&expanded)
        .map_err(|e| IoError::schema(format!("line {}", e.line()), e.to_string()))?;
    let obj = root
        .as_object()
        .ok_or_else(|| IoError::schema("document", "expected an object"))?;
    for k in obj.keys() {
        if ![
            "fx_name",
            "fx_type",
            "n_inputs",
            "n_outputs",
            "valid_params",
            "presets",
        ]
        .contains(&k.as_str())
        {
            log::warn!("UNKNOWN_FIELD: {k}");
        }
    }
    let get = |k: &str| obj.get(k).ok_or_else(|| IoError::schema(k, "missing"));
    let string = |k: &str| {
        get(k)?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| IoError::schema(k, "expected a string"))
    };
    let count = |k: &str| {
        get(k)?
            .as_u64()
            .filter(|&n| n >= 1)
            .and_then(|n| u32::try_from(n).ok())
            .ok_or_else(|| IoError::schema(k, "expected a positive integer"))
    };
    let fx_type: FxType = string("fx_type")?
        .parse()
        .map_err(|e: crate::model::UnknownFxType| IoError::schema("fx_type", e.to_string()))?;

    let mut valid_params = IndexMap::new();
    let grid = get("valid_params")?
        .as_object()
        .ok_or_else(|| IoError::schema("valid_params", "expected an object"))?;
    for (name, values) in grid {
        let path = format!("valid_params.{name}");
        let list = values
            .as_array()
            .ok_or_else(|| IoError::schema(&path, "expected a list"))?;
        let nums = list
            .iter()
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| IoError::schema(&path, "expected numbers"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        valid_params.insert(name.clone(), nums);
    }
    let presets = get("presets")?
        .as_array()
        .ok_or_else(|| IoError::schema("presets", "expected a list"))?
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let path = format!("presets[{i}]");
            p.as_array()
                .ok_or_else(|| IoError::schema(&path, "expected a list"))?
                .iter()
                .map(|v| match v {
                    Value::Null => Ok(None),
                    v => v
                        .as_f64()
                        .map(Some)
                        .ok_or_else(|| IoError::schema(&path, "expected numbers or null")),
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PresetFile {
        fx_name: string("fx_name")?,
        fx_type,
        n_inputs: count("n_inputs")?,
        n_outputs: count("n_outputs")?,
        valid_params,
        presets,
    })
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Emit `file` in the reference layout (full grids, one preset per line).
pub fn emit_preset_json(file: &PresetFile) -> String {
    let q = |s: &str| serde_json::to_string(s).expect("strings always serialize");
    let mut out = String::from("{\n");
    let _ = writeln!(out, "  \"fx_name\": {},", q(&file.fx_name));
    let _ = writeln!(out, "  \"fx_type\": {},", q(file.fx_type.as_str()));
    let _ = writeln!(out, "  \"n_inputs\": {},", file.n_inputs);
    let _ = writeln!(out, "  \"n_outputs\": {},", file.n_outputs);
    if file.valid_params.is_empty() {
        out.push_str("  \"valid_params\": {},\n");
    } else {
        out.push_str("  \"valid_params\": {\n");
        let lines: Vec<String> = file
            .valid_params
            .iter()
            .map(|(k, vs)| {
                format!(
                    "    {}: [{}]",
                    q(k),
                    vs.iter().map(|&v| num(v)).collect::<Vec<_>>().join(", ")
                )
            })
            .collect();
        out.push_str(&lines.join(",\n"));
        out.push_str("\n  },\n");
    }
    if file.presets.is_empty() {
        out.push_str("  \"presets\": []\n");
    } else {
        out.push_str("  \"presets\": [\n");
        let lines: Vec<String> = file
            .presets
            .iter()
            .map(|p| {
                let vals: Vec<String> = p
                    .iter()
                    .map(|v| v.map_or_else(|| "null".to_string(), num))
                    .collect();
                format!("    [{}]", vals.join(", "))
            })
            .collect();
        out.push_str(&lines.join(",\n"));
        out.push_str("\n  ]\n");
    }
    out.push_str("}\n");
    out
}
