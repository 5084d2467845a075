//! JSON descriptions of state oracles.
//!
//! ```json
//! { "dim": 2, "state_vector": [1, 0],
//!   "generators": [ { "id": "p", "matrix": [[0.3, 0.458], [0.458, 0.7]] } ] }
//! ```
//!
//! Matrix entries are numbers or `[re, im]` pairs, given as `dim` rows or as a flat
//! row-major list. Products nest as `{"free": [...]}` and `{"boolean": [...]}`.
//! The shorthands `{"bernoulli": α}` and `{"boolean_model": [α₁, …]}` build the
//! two-point and Boolean projection models.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde_json::Value;

use super::{bernoulli_with_unit, boolean_matrix_model, MatrixModel, StateOracle, C64};
use crate::error::{Error, Result};

fn err(path: &str, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_string(), message: message.into() }
}

/// Parses a specification; `origin` names the source in diagnostics.
pub fn parse_spec(text: &str, origin: &str) -> Result<StateOracle> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        err(&format!("{origin}:{}:{}", e.line(), e.column()), e.to_string())
    })?;
    oracle(&value, origin)
}

pub fn load_spec(path: &Path) -> Result<StateOracle> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| err(&origin, e.to_string()))?;
    parse_spec(&text, &origin)
}

fn oracle(v: &Value, path: &str) -> Result<StateOracle> {
    let obj = v.as_object().ok_or_else(|| err(path, "expected an object"))?;
    for (key, kind) in [("free", 0), ("boolean", 1)] {
        if let Some(children) = obj.get(key) {
            let here = format!("{path}.{key}");
            let arr = children.as_array().ok_or_else(|| err(&here, "expected an array"))?;
            if arr.is_empty() {
                return Err(err(&here, "product needs at least one factor"));
            }
            let cs = arr
                .iter()
                .enumerate()
                .map(|(i, c)| oracle(c, &format!("{here}[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            return Ok(if kind == 0 { StateOracle::Free(cs) } else { StateOracle::Boolean(cs) });
        }
    }
    if let Some(a) = obj.get("bernoulli") {
        let here = format!("{path}.bernoulli");
        let a = a.as_f64().ok_or_else(|| err(&here, "expected a number"))?;
        let m = bernoulli_with_unit(a).map_err(|e| err(&here, e.to_string()))?;
        return Ok(m.into());
    }
    if let Some(a) = obj.get("boolean_model") {
        let here = format!("{path}.boolean_model");
        let arr = a.as_array().ok_or_else(|| err(&here, "expected an array"))?;
        let alphas = arr
            .iter()
            .enumerate()
            .map(|(i, x)| x.as_f64().ok_or_else(|| err(&format!("{here}[{i}]"), "expected a number")))
            .collect::<Result<Vec<_>>>()?;
        return boolean_matrix_model(&alphas).map_err(|e| err(&here, e.to_string()));
    }
    matrix_model(obj, path).map(StateOracle::Matrix)
}

fn matrix_model(obj: &serde_json::Map<String, Value>, path: &str) -> Result<MatrixModel> {
    let dim_path = format!("{path}.dim");
    let dim = obj
        .get("dim")
        .ok_or_else(|| err(&dim_path, "missing field"))?
        .as_u64()
        .filter(|&d| d > 0)
        .ok_or_else(|| err(&dim_path, "expected a positive integer"))? as usize;
    let gens_path = format!("{path}.generators");
    let gens = obj
        .get("generators")
        .ok_or_else(|| err(&gens_path, "missing field"))?
        .as_array()
        .ok_or_else(|| err(&gens_path, "expected an array"))?;
    let mut generators = BTreeMap::new();
    for (i, g) in gens.iter().enumerate() {
        let here = format!("{gens_path}[{i}]");
        let id = g
            .get("id")
            .and_then(Value::as_str)
            .filter(|s| !s.is_empty() && !s.contains(char::is_whitespace) && !s.contains(':'))
            .ok_or_else(|| err(&format!("{here}.id"), "expected a non-empty name without spaces or ':'"))?;
        let m = g.get("matrix").ok_or_else(|| err(&format!("{here}.matrix"), "missing field"))?;
        let m = matrix(m, dim, &format!("{here}.matrix"))?;
        if generators.insert(id.to_string(), m).is_some() {
            return Err(err(&format!("{here}.id"), format!("duplicate generator `{id}`")));
        }
    }
    let omega = match obj.get("state_vector") {
        None | Some(Value::Null) => None,
        Some(v) => {
            let here = format!("{path}.state_vector");
            let arr = v.as_array().ok_or_else(|| err(&here, "expected an array"))?;
            if arr.len() != dim {
                return Err(err(&here, format!("expected {dim} entries, got {}", arr.len())));
            }
            let entries = arr
                .iter()
                .enumerate()
                .map(|(i, x)| scalar(x, &format!("{here}[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            Some(DVector::from_vec(entries))
        }
    };
    MatrixModel::with_dim(dim, generators, omega).map_err(|e| err(path, e.to_string()))
}

fn scalar(v: &Value, path: &str) -> Result<C64> {
    if let Some(x) = v.as_f64() {
        return Ok(C64::new(x, 0.0));
    }
    if let Some([re, im]) = v.as_array().map(Vec::as_slice) {
        if let (Some(re), Some(im)) = (re.as_f64(), im.as_f64()) {
            return Ok(C64::new(re, im));
        }
    }
    Err(err(path, "expected a number or a [re, im] pair"))
}

fn matrix(v: &Value, dim: usize, path: &str) -> Result<DMatrix<C64>> {
    let arr = v.as_array().ok_or_else(|| err(path, "expected an array"))?;
    let is_rows = arr.len() == dim
        && arr.iter().all(|r| r.as_array().is_some_and(|r| r.len() == dim));
    let mut out = DMatrix::zeros(dim, dim);
    if is_rows {
        for (i, row) in arr.iter().enumerate() {
            for (j, x) in row.as_array().unwrap().iter().enumerate() {
                out[(i, j)] = scalar(x, &format!("{path}[{i}][{j}]"))?;
            }
        }
    } else if arr.len() == dim * dim {
        for (k, x) in arr.iter().enumerate() {
            out[(k / dim, k % dim)] = scalar(x, &format!("{path}[{k}]"))?;
        }
    } else {
        return Err(err(
            path,
            format!("expected {dim} rows of {dim} entries or {} flat entries", dim * dim),
        ));
    }
    Ok(out)
}
