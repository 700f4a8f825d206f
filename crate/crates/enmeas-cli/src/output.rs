use anyhow::{bail, Result};
use serde_json::{Map, Value};

fn cell(v: &Value) -> Result<String> {
    Ok(match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        Value::Array(_) | Value::Object(_) => bail!("nested field cannot be written as CSV; use --format json"),
    })
}

/// Flat records as CSV; a single object becomes one row. Numbers keep their shortest
/// round-trip representation.
pub fn to_csv(value: &Value) -> Result<String> {
    let rows: Vec<&Map<String, Value>> = match value {
        Value::Object(m) => vec![m],
        Value::Array(items) => items
            .iter()
            .map(|v| match v {
                Value::Object(m) => Ok(m),
                _ => bail!("CSV output needs a list of records"),
            })
            .collect::<Result<_>>()?,
        _ => bail!("CSV output needs a record or a list of records"),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    if let Some(first) = rows.first() {
        let header: Vec<&String> = first.keys().collect();
        w.write_record(&header)?;
        for r in &rows {
            let cells = header.iter().map(|k| r.get(*k).map_or(Ok(String::new()), cell)).collect::<Result<Vec<_>>>()?;
            w.write_record(&cells)?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn records_and_nesting() {
        let v = json!([{ "z": 0.1, "phi": 1.0 / 3.0 }, { "z": 2.0, "phi": 0.5 }]);
        let text = to_csv(&v).unwrap();
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let back: Vec<Vec<f64>> = r.records().map(|rec| rec.unwrap().iter().map(|c| c.parse().unwrap()).collect()).collect();
        assert_eq!(back[0][1], 1.0 / 3.0);
        assert!(to_csv(&json!({ "m": [[1, 2]] })).is_err());
    }
}
