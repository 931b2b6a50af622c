//! Project YAML, laid out exactly like the reference metadata sample.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde_yaml::{Mapping, Value};

use super::IoError;
use crate::model::{ChainDefinition, FxSetting, FxType, InputAudio, Project};

/// Parse a project file. Unknown fields are logged and ignored.
pub fn parse_project_yaml(text: &str) -> Result<Project, IoError> {
    let (project, warnings) = parse_project_yaml_with_warnings(text)?;
    for w in warnings {
        log::warn!("UNKNOWN_FIELD: {w}");
    }
    Ok(project)
}

/// Parse a project file, returning the paths of unknown fields alongside.
pub fn parse_project_yaml_with_warnings(text: &str) -> Result<(Project, Vec<String>), IoError> {
    let root: Value = serde_yaml::from_str(text).map_err(|e| {
        let at = e
            .location()
            .map_or_else(|| "document".to_string(), |l| format!("line {}", l.line()));
        IoError::schema(at, e.to_string())
    })?;
    let mut warnings = Vec::new();
    let top = as_map(&root, "document")?;
    check_fields(
        top,
        "",
        &["FxChains", "input_audios", "output_audio", "customized"],
        &mut warnings,
    );

    let chains = match top.get("FxChains") {
        Some(v) => as_seq(v, "FxChains")?
            .iter()
            .enumerate()
            .map(|(i, c)| parse_chain(c, &format!("FxChains[{i}]"), &mut warnings))
            .collect::<Result<Vec<_>, _>>()?,
        None => return Err(IoError::schema("FxChains", "missing")),
    };
    let inputs = match top.get("input_audios") {
        Some(v) => as_seq(v, "input_audios")?
            .iter()
            .enumerate()
            .map(|(i, a)| parse_input(a, &format!("input_audios[{i}]"), &mut warnings))
            .collect::<Result<Vec<_>, _>>()?,
        None => return Err(IoError::schema("input_audios", "missing")),
    };
    let output_audio = match top.get("output_audio") {
        Some(v) => as_str(v, "output_audio")?,
        None => return Err(IoError::schema("output_audio", "missing")),
    };
    let customized = match top.get("customized") {
        None | Some(Value::Null) => false,
        Some(Value::Bool(b)) => *b,
        Some(_) => return Err(IoError::schema("customized", "expected a boolean")),
    };
    Ok((
        Project {
            fx_chains: chains,
            input_audios: inputs,
            output_audio,
            customized,
        },
        warnings,
    ))
}

fn check_fields(map: &Mapping, path: &str, known: &[&str], warnings: &mut Vec<String>) {
    for k in map.keys() {
        let name = match k {
            Value::String(s) => s.clone(),
            other => format!("{other:?}"),
        };
        if !known.contains(&name.as_str()) {
            warnings.push(if path.is_empty() {
                name
            } else {
                format!("{path}.{name}")
            });
        }
    }
}

fn as_map<'a>(v: &'a Value, path: &str) -> Result<&'a Mapping, IoError> {
    v.as_mapping()
        .ok_or_else(|| IoError::schema(path, "expected a mapping"))
}

fn as_seq<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, IoError> {
    match v {
        Value::Sequence(s) => Ok(s),
        _ => Err(IoError::schema(path, "expected a list")),
    }
}

fn as_str(v: &Value, path: &str) -> Result<String, IoError> {
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| IoError::schema(path, "expected a string"))
}

fn as_index(v: &Value, path: &str) -> Result<usize, IoError> {
    match v {
        Value::Number(n) => n.as_u64().map(|n| n as usize),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
    .ok_or_else(|| IoError::schema(path, "expected a non-negative integer"))
}

fn as_opt_index(v: Option<&Value>, path: &str) -> Result<Option<usize>, IoError> {
    match v {
        None | Some(Value::Null) => Ok(None),
        Some(v) => as_index(v, path).map(Some),
    }
}

fn as_f64(v: &Value, path: &str) -> Result<f64, IoError> {
    v.as_f64()
        .ok_or_else(|| IoError::schema(path, "expected a number"))
}

fn parse_chain(
    v: &Value,
    path: &str,
    warnings: &mut Vec<String>,
) -> Result<ChainDefinition, IoError> {
    let map = as_map(v, path)?;
    check_fields(map, path, &["FxChain", "next_chains"], warnings);
    let fx_chain = match map.get("FxChain") {
        None | Some(Value::Null) => Vec::new(),
        Some(v) => as_seq(v, &format!("{path}.FxChain"))?
            .iter()
            .enumerate()
            .map(|(k, fx)| parse_fx(fx, &format!("{path}.FxChain[{k}]"), warnings))
            .collect::<Result<_, _>>()?,
    };
    let mut next_chains = BTreeMap::new();
    match map.get("next_chains") {
        None | Some(Value::Null) => {}
        Some(v) => {
            let p = format!("{path}.next_chains");
            for (k, g) in as_map(v, &p)? {
                let target = as_index(k, &p)?;
                let gain = as_f64(g, &format!("{p}.{target}"))?;
                if next_chains.insert(target, gain).is_some() {
                    return Err(IoError::schema(p, format!("duplicate target {target}")));
                }
            }
        }
    }
    Ok(ChainDefinition {
        fx_chain,
        next_chains,
    })
}

fn parse_fx(v: &Value, path: &str, warnings: &mut Vec<String>) -> Result<FxSetting, IoError> {
    let map = as_map(v, path)?;
    check_fields(
        map,
        path,
        &[
            "fx_name",
            "fx_type",
            "preset_index",
            "params",
            "sidechain_input",
            "n_inputs",
            "n_outputs",
        ],
        warnings,
    );
    let field = |name: &str| format!("{path}.{name}");
    let fx_name = as_str(
        map.get("fx_name")
            .ok_or_else(|| IoError::schema(field("fx_name"), "missing"))?,
        &field("fx_name"),
    )?;
    let type_str = as_str(
        map.get("fx_type")
            .ok_or_else(|| IoError::schema(field("fx_type"), "missing"))?,
        &field("fx_type"),
    )?;
    let fx_type: FxType = type_str.parse().map_err(|e: crate::model::UnknownFxType| {
        IoError::schema(field("fx_type"), e.to_string())
    })?;
    let params = match map.get("params") {
        None | Some(Value::Null) => Vec::new(),
        Some(v) => as_seq(v, &field("params"))?
            .iter()
            .enumerate()
            .map(|(i, p)| match p {
                Value::Null => Ok(None),
                other => as_f64(other, &format!("{}[{i}]", field("params"))).map(Some),
            })
            .collect::<Result<_, _>>()?,
    };
    let (def_in, def_out) = fx_type.default_io();
    let count = |name: &str, default: u32| -> Result<u32, IoError> {
        match map.get(name) {
            None | Some(Value::Null) => Ok(default),
            Some(v) => match as_index(v, &field(name))? {
                0 => Err(IoError::schema(field(name), "must be at least 1")),
                n => u32::try_from(n).map_err(|_| IoError::schema(field(name), "too large")),
            },
        }
    };
    Ok(FxSetting {
        fx_name,
        fx_type,
        preset_index: as_opt_index(map.get("preset_index"), &field("preset_index"))?,
        params,
        n_inputs: count("n_inputs", def_in)?,
        n_outputs: count("n_outputs", def_out)?,
        sidechain_input: as_opt_index(map.get("sidechain_input"), &field("sidechain_input"))?,
    })
}

fn parse_input(v: &Value, path: &str, warnings: &mut Vec<String>) -> Result<InputAudio, IoError> {
    let map = as_map(v, path)?;
    check_fields(
        map,
        path,
        &["audio_path", "audio_type", "input_FxChain"],
        warnings,
    );
    let get = |name: &str| {
        map.get(name)
            .ok_or_else(|| IoError::schema(format!("{path}.{name}"), "missing"))
    };
    Ok(InputAudio {
        audio_path: as_str(get("audio_path")?, &format!("{path}.audio_path"))?,
        audio_type: as_str(get("audio_type")?, &format!("{path}.audio_type"))?,
        input_fx_chain: as_index(get("input_FxChain")?, &format!("{path}.input_FxChain"))?,
    })
}

fn quoted(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn opt_index(v: Option<usize>) -> String {
    v.map_or_else(|| "null".to_string(), |i| i.to_string())
}

/// Emit `project` in the reference layout. Deterministic.
pub fn emit_project_yaml(project: &Project) -> String {
    let mut out = String::from(if project.fx_chains.is_empty() { "FxChains: []\n" } else { "FxChains:\n" });
    for chain in &project.fx_chains {
        if chain.fx_chain.is_empty() {
            out.push_str("  - FxChain: []\n");
        } else {
            out.push_str("  - FxChain:\n");
            for fx in &chain.fx_chain {
                let params: Vec<String> = fx
                    .params
                    .iter()
                    .map(|p| p.map_or_else(|| "null".to_string(), |v| format!("{v}")))
                    .collect();
                let _ = writeln!(out, "      - fx_name: {}", quoted(&fx.fx_name));
                let _ = writeln!(out, "        fx_type: {}", quoted(fx.fx_type.as_str()));
                let _ = writeln!(out, "        preset_index: {}", opt_index(fx.preset_index));
                let _ = writeln!(out, "        params: [{}]", params.join(", "));
                let _ = writeln!(
                    out,
                    "        sidechain_input: {}",
                    opt_index(fx.sidechain_input)
                );
                if (fx.n_inputs, fx.n_outputs) != fx.fx_type.default_io() {
                    let _ = writeln!(out, "        n_inputs: {}", fx.n_inputs);
                    let _ = writeln!(out, "        n_outputs: {}", fx.n_outputs);
                }
            }
        }
        if !chain.next_chains.is_empty() {
            out.push_str("    next_chains:\n");
            for (t, g) in &chain.next_chains {
                let _ = writeln!(out, "      {t}: {g}");
            }
        }
    }
    out.push_str(if project.input_audios.is_empty() { "\ninput_audios: []\n" } else { "\ninput_audios:\n" });
    for a in &project.input_audios {
        let _ = writeln!(out, "  - audio_path: {}", quoted(&a.audio_path));
        let _ = writeln!(out, "    audio_type: {}", quoted(&a.audio_type));
        let _ = writeln!(out, "    input_FxChain: {}", a.input_fx_chain);
    }
    let _ = writeln!(out, "\noutput_audio: {}", quoted(&project.output_audio));
    let _ = writeln!(out, "customized: {}", project.customized);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"FxChains:
  - FxChain:
      - fx_name: "VST3: 3 Band EQ"
        fx_type: "eq"
        preset_index: 2
        params: []
        sidechain_input: null
    next_chains:
      1: 1
  - FxChain: []

input_audios:
  - audio_path: "vocals.wav"
    audio_type: "vocal"
    input_FxChain: 0

output_audio: "mixed_output.wav"
customized: true
"#;

    #[test]
    fn sample_parses_and_reemits_byte_for_byte() {
        let p = parse_project_yaml(SAMPLE).unwrap();
        assert_eq!(p.fx_chains.len(), 2);
        assert_eq!(p.input_audios.len(), 1);
        assert_eq!(p.fx_chains[0].next_chains, BTreeMap::from([(1, 1.0)]));
        assert_eq!(p.fx_chains[0].fx_chain[0].preset_index, Some(2));
        assert!(p.customized);
        assert_eq!(emit_project_yaml(&p), SAMPLE);
    }

    #[test]
    fn empty_lists_round_trip() {
        let p = Project::new(vec![], vec![]);
        assert_eq!(parse_project_yaml(&emit_project_yaml(&p)).unwrap(), p);
    }

    #[test]
    fn rich_project_round_trips() {
        let p = Project {
            fx_chains: vec![
                ChainDefinition::new(vec![FxSetting::new(
                    "JS: 3-Band Splitter",
                    FxType::Splitter,
                )
                .with_params(vec![Some(0.25), None])])
                .to(1, 0.5)
                .to(2, 1.2589254117941673),
                ChainDefinition::new(vec![
                    FxSetting::new("VST3: ZamCompX2", FxType::Compressor).with_sidechain(2)
                ])
                .to(3, 1.0),
                ChainDefinition::empty().to(3, 0.1),
                ChainDefinition::empty(),
            ],
            input_audios: vec![InputAudio::new("a \"b\".wav", "bass", 0)],
            output_audio: "out.wav".into(),
            customized: false,
        };
        let text = emit_project_yaml(&p);
        assert_eq!(parse_project_yaml(&text).unwrap(), p);
    }

    #[test]
    fn unknown_fields_warn_and_bad_types_fail() {
        let text = SAMPLE.replace("customized: true", "customized: true\nauthor: me");
        let (_, warnings) = parse_project_yaml_with_warnings(&text).unwrap();
        assert_eq!(warnings, vec!["author".to_string()]);
        let bad = SAMPLE.replace("input_FxChain: 0", "input_FxChain: zero");
        match parse_project_yaml(&bad) {
            Err(IoError::Schema { path, .. }) => assert_eq!(path, "input_audios[0].input_FxChain"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_project_yaml("FxChains: [\n"),
            Err(IoError::Schema { .. })
        ));
    }

    #[test]
    fn out_of_range_target_parses() {
        let text = SAMPLE.replace("      1: 1", "      5: 1");
        let p = parse_project_yaml(&text).unwrap();
        assert_eq!(
            p.fx_chains[0]
                .next_chains
                .keys()
                .copied()
                .collect::<Vec<_>>(),
            vec![5]
        );
    }
}
