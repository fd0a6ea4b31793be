//! The JSON model file format.
//!
//! Numbers may be strings or JSON numbers. JSON numbers are read from their
//! source text (serde_json's `arbitrary_precision`), so `0.1` is exactly 1/10.

use nnequiv_core::model::{Activation, InvalidNetwork, Layer, Network};
use nnequiv_core::rational::{parse_decimal, to_exact_string, ParseRationalError};
use nnequiv_core::{Interval, Rational};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed model file: {path}: {message}")]
    Schema { path: String, message: String },
    #[error("malformed model file: {path}: {source}")]
    Number {
        path: String,
        #[source]
        source: ParseRationalError,
    },
    #[error("layer {layer}: unsupported activation `{name}` (expected relu, hardtanh or linear)")]
    UnsupportedActivation { layer: usize, name: String },
    #[error(transparent)]
    Invalid(#[from] InvalidNetwork),
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> LoadError {
    LoadError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn number(v: &Value, path: &str) -> Result<Rational, LoadError> {
    let text = match v {
        Value::String(s) => s.as_str().to_owned(),
        Value::Number(n) => n.to_string(),
        _ => return Err(schema(path, "expected a number or decimal string")),
    };
    parse_decimal(&text).map_err(|source| LoadError::Number {
        path: path.to_owned(),
        source,
    })
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, LoadError> {
    v.as_array().ok_or_else(|| schema(path, "expected an array"))
}

fn vector(v: &Value, path: &str) -> Result<Vec<Rational>, LoadError> {
    array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("{path}[{i}]")))
        .collect()
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, LoadError> {
    obj.get(key)
        .ok_or_else(|| schema(path, format!("missing key `{key}`")))
}

fn parse_layer(v: &Value, index: usize) -> Result<Layer, LoadError> {
    let path = format!("layers[{index}]");
    let obj = v.as_object().ok_or_else(|| schema(&path, "expected an object"))?;
    let weights = array(field(obj, "weights", &path)?, &format!("{path}.weights"))?
        .iter()
        .enumerate()
        .map(|(r, row)| vector(row, &format!("{path}.weights[{r}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let biases = vector(field(obj, "biases", &path)?, &format!("{path}.biases"))?;
    let name = field(obj, "activation", &path)?
        .as_str()
        .ok_or_else(|| schema(format!("{path}.activation"), "expected a string"))?;
    let activation = Activation::from_name(name).ok_or_else(|| LoadError::UnsupportedActivation {
        layer: index + 1,
        name: name.to_owned(),
    })?;
    Ok(Layer {
        weights,
        biases,
        activation,
    })
}

fn parse_bounds(v: Option<&Value>) -> Result<Vec<Option<Interval>>, LoadError> {
    let Some(v) = v.filter(|v| !v.is_null()) else {
        return Ok(Vec::new());
    };
    array(v, "input_bounds")?
        .iter()
        .enumerate()
        .map(|(j, b)| {
            let path = format!("input_bounds[{j}]");
            if b.is_null() {
                return Ok(None);
            }
            let pair = array(b, &path)?;
            if pair.len() != 2 {
                return Err(schema(path, "expected [lower, upper]"));
            }
            Ok(Some(Interval::new(
                number(&pair[0], &format!("{path}[0]"))?,
                number(&pair[1], &format!("{path}[1]"))?,
            )))
        })
        .collect()
}

/// Parses a model file without structural validation.
pub fn parse_network(text: &str) -> Result<Network, LoadError> {
    let doc: Value = serde_json::from_str(text)?;
    let obj = doc
        .as_object()
        .ok_or_else(|| schema("$", "expected a top-level object"))?;
    let name = match obj.get("name") {
        None | Some(Value::Null) => "network".to_owned(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(schema("name", "expected a string")),
    };
    let input_dim = field(obj, "inputs", "$")?
        .as_u64()
        .ok_or_else(|| schema("inputs", "expected a non-negative integer"))? as usize;
    let layers = array(field(obj, "layers", "$")?, "layers")?
        .iter()
        .enumerate()
        .map(|(i, l)| parse_layer(l, i))
        .collect::<Result<Vec<_>, _>>()?;
    let input_bounds = parse_bounds(obj.get("input_bounds"))?;
    let output_scale = match obj.get("output_scale") {
        None | Some(Value::Null) => None,
        Some(v) => Some(number(v, "output_scale")?),
    };
    Ok(Network {
        name,
        input_dim,
        layers,
        input_bounds,
        output_scale,
    })
}

/// Parses and validates a model file.
pub fn load_network(text: &str) -> Result<Network, LoadError> {
    let net = parse_network(text)?;
    let violations = net.validate();
    if violations.is_empty() {
        Ok(net)
    } else {
        Err(InvalidNetwork(violations).into())
    }
}

pub fn read_network(path: &std::path::Path) -> Result<Network, ReadError> {
    let text = std::fs::read_to_string(path).map_err(|source| ReadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_network(&text).map_err(|source| ReadError::Load {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Error)]
pub enum ReadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Load {
        path: String,
        #[source]
        source: LoadError,
    },
}

fn num(r: &Rational) -> Value {
    Value::String(to_exact_string(r))
}

/// Model file document for `net`; every number is written as an exact string.
pub fn network_to_value(net: &Network) -> Value {
    let mut obj = Map::new();
    obj.insert("name".into(), Value::String(net.name.clone()));
    obj.insert("inputs".into(), Value::from(net.input_dim));
    if !net.input_bounds.is_empty() {
        let bounds = net
            .input_bounds
            .iter()
            .map(|b| match b {
                Some(iv) => Value::Array(vec![num(&iv.lower), num(&iv.upper)]),
                None => Value::Null,
            })
            .collect();
        obj.insert("input_bounds".into(), Value::Array(bounds));
    }
    let layers = net
        .layers
        .iter()
        .map(|l| {
            let mut o = Map::new();
            let rows = l
                .weights
                .iter()
                .map(|row| Value::Array(row.iter().map(num).collect()))
                .collect();
            o.insert("weights".into(), Value::Array(rows));
            o.insert("biases".into(), Value::Array(l.biases.iter().map(num).collect()));
            o.insert("activation".into(), Value::String(l.activation.name().into()));
            Value::Object(o)
        })
        .collect();
    obj.insert("layers".into(), Value::Array(layers));
    if let Some(s) = &net.output_scale {
        obj.insert("output_scale".into(), num(s));
    }
    Value::Object(obj)
}

/// Compact layout: one line per weight row.
pub fn network_to_json(net: &Network) -> String {
    let v = network_to_value(net);
    let obj = v.as_object().expect("object");
    let mut out = String::from("{\n");
    let mut first = true;
    for (key, value) in obj {
        if !first {
            out.push_str(",\n");
        }
        first = false;
        out.push_str(&format!("  {}: ", Value::String(key.clone())));
        if key == "layers" {
            out.push_str("[\n");
            let layers = value.as_array().expect("array");
            for (i, layer) in layers.iter().enumerate() {
                out.push_str("    {\n");
                let lo = layer.as_object().expect("object");
                out.push_str("      \"weights\": [\n");
                let rows = lo["weights"].as_array().expect("array");
                for (r, row) in rows.iter().enumerate() {
                    out.push_str("        ");
                    out.push_str(&row.to_string());
                    out.push_str(if r + 1 < rows.len() { ",\n" } else { "\n" });
                }
                out.push_str("      ],\n");
                out.push_str(&format!("      \"biases\": {},\n", lo["biases"]));
                out.push_str(&format!("      \"activation\": {}\n", lo["activation"]));
                out.push_str(if i + 1 < layers.len() { "    },\n" } else { "    }\n" });
            }
            out.push_str("  ]");
        } else {
            out.push_str(&value.to_string());
        }
    }
    out.push_str("\n}\n");
    out
}

/// Comma-separated exact decimals, e.g. `0,0.5,-1`.
pub fn parse_vector(text: &str) -> Result<Vec<Rational>, ParseRationalError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',').map(|s| parse_decimal(s.trim())).collect()
}
