//! JSON documents for instances and allocations.
//!
//! Instance: `{"n": int, "edges": [[i,j],...], "budgets": [number|"decimal",...], "name": string?}`
//! with 1-based agents. Allocation: `{"weights": [[...],...]}`, dense `n x n`.
//! Fields may appear in any order; unknown fields are rejected.

use serde::Deserialize;

use super::{AllocationProfile, GameInstance, InstanceDraft};
use crate::{Error, Result};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    n: usize,
    edges: Vec<[usize; 2]>,
    budgets: Vec<BudgetValue>,
    #[serde(default)]
    name: Option<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BudgetValue {
    Number(f64),
    Decimal(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AllocationDoc {
    weights: Vec<Vec<f64>>,
}

fn json_error(e: serde_json::Error) -> Error {
    Error::parse(
        format!("line {} column {}", e.line(), e.column()),
        e.to_string(),
    )
}

fn parse_decimal(k: usize, s: &str) -> Result<f64> {
    let t = s.trim();
    let plain = !t.is_empty()
        && t.chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'));
    match t.parse::<f64>() {
        Ok(v) if plain && v.is_finite() => Ok(v),
        _ => Err(Error::parse(
            format!("budgets[{k}]"),
            format!("{s:?} is not a decimal number"),
        )),
    }
}

/// Parses an instance document into a draft without validating it.
pub fn parse_instance_draft(text: &str) -> Result<InstanceDraft> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(json_error)?;
    let mut edges = Vec::with_capacity(doc.edges.len());
    for (k, [i, j]) in doc.edges.iter().copied().enumerate() {
        for v in [i, j] {
            if v == 0 || v > doc.n {
                return Err(Error::parse(
                    format!("edges[{k}]"),
                    format!("agent index {v} outside 1..={}", doc.n),
                ));
            }
        }
        edges.push((i - 1, j - 1));
    }
    if doc.budgets.len() != doc.n {
        return Err(Error::parse(
            "budgets",
            format!("{} budgets for n = {}", doc.budgets.len(), doc.n),
        ));
    }
    let budgets = doc
        .budgets
        .iter()
        .enumerate()
        .map(|(k, b)| match b {
            BudgetValue::Number(v) => Ok(*v),
            BudgetValue::Decimal(s) => parse_decimal(k, s),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InstanceDraft {
        n: doc.n,
        edges,
        budgets,
        name: doc.name,
    })
}

/// Parses and validates an instance document.
pub fn parse_instance(text: &str) -> Result<GameInstance> {
    parse_instance_draft(text)?.build()
}

/// Serialises an instance with 1-based edges in row-major order. Output is
/// deterministic: equal instances give byte-identical text.
pub fn serialize_instance(g: &GameInstance) -> String {
    let edges: Vec<[usize; 2]> = g.topology().edges().map(|(i, j)| [i + 1, j + 1]).collect();
    let mut out = String::from("{\n");
    out.push_str(&format!("  \"n\": {},\n", g.n()));
    if let Some(name) = g.name() {
        out.push_str(&format!("  \"name\": {},\n", json(&name)));
    }
    out.push_str(&format!("  \"edges\": {},\n", json(&edges)));
    out.push_str(&format!("  \"budgets\": {}\n", json(&g.budgets())));
    out.push_str("}\n");
    out
}

/// Parses an allocation document and checks it is `n x n`.
pub fn parse_allocation(text: &str, n: usize) -> Result<AllocationProfile> {
    let doc: AllocationDoc = serde_json::from_str(text).map_err(json_error)?;
    if doc.weights.len() != n {
        return Err(Error::parse(
            "weights",
            format!("{} rows, expected {n}", doc.weights.len()),
        ));
    }
    for (k, row) in doc.weights.iter().enumerate() {
        if row.len() != n {
            return Err(Error::parse(
                format!("weights[{k}]"),
                format!("{} entries, expected {n}", row.len()),
            ));
        }
    }
    AllocationProfile::from_rows(doc.weights)
}

/// Serialises an allocation, one row per line.
pub fn serialize_allocation(w: &AllocationProfile) -> String {
    let rows: Vec<String> = w
        .rows()
        .iter()
        .map(|r| format!("    {}", json(r)))
        .collect();
    format!("{{\n  \"weights\": [\n{}\n  ]\n}}\n", rows.join(",\n"))
}

fn json<T: serde::Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serialises")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Rule;

    #[test]
    fn schema_example_parses() {
        let g = parse_instance(r#"{"n":1,"edges":[[1,1]],"budgets":[0.5]}"#).unwrap();
        assert_eq!(g.n(), 1);
        assert!(g.topology().has_edge(0, 0));
        assert_eq!(g.budgets(), &[0.5]);
    }

    #[test]
    fn fields_in_any_order_and_decimal_strings() {
        let g = parse_instance(
            r#"{"budgets":["0.5", 0.25], "name": "two", "edges":[[2,1],[1,2]], "n":2}"#,
        )
        .unwrap();
        assert_eq!(g.budgets(), &[0.5, 0.25]);
        assert_eq!(g.name(), Some("two"));
        assert_eq!(g.topology().neighbors(0), &[1]);
    }

    #[test]
    fn round_trip() {
        let g = parse_instance(r#"{"n":2,"edges":[[1,2],[2,1]],"budgets":[0.5,0.25]}"#).unwrap();
        let text = serialize_instance(&g);
        assert_eq!(parse_instance(&text).unwrap(), g);
        assert_eq!(serialize_instance(&parse_instance(&text).unwrap()), text);
    }

    #[test]
    fn schema_violations() {
        let e = parse_instance(r#"{"n":2,"edges":[[1,2],[2,1]],"budgets":[0.5]}"#).unwrap_err();
        assert!(
            matches!(e, Error::Parse { ref context, .. } if context == "budgets"),
            "{e}"
        );

        let e = parse_instance(r#"{"n":2,"edges":[[1,3]],"budgets":[0.5,0.5]}"#).unwrap_err();
        assert!(
            matches!(e, Error::Parse { ref context, .. } if context == "edges[0]"),
            "{e}"
        );

        let e = parse_instance(r#"{"n":1,"edges":[[1,1]],"budgets":[0.5],"extra":1}"#).unwrap_err();
        assert!(e.to_string().contains("line 1"), "{e}");

        let e =
            parse_instance("{\n\"n\":1,\n\"edges\":[[1,1]],\n\"budgets\":[\"half\"]}").unwrap_err();
        assert!(
            e.to_string().contains("budgets[0]") || e.to_string().contains("line"),
            "{e}"
        );
    }

    #[test]
    fn invalid_topology_or_budgets_surface_as_invalid_instance() {
        match parse_instance(r#"{"n":2,"edges":[[1,2]],"budgets":[0.5,0.25]}"#) {
            Err(Error::InvalidInstance(r)) => assert!(r.has(Rule::EmptyNeighborhood)),
            other => panic!("{other:?}"),
        }
        match parse_instance(r#"{"n":1,"edges":[[1,1]],"budgets":["1.0"]}"#) {
            Err(Error::InvalidInstance(r)) => assert!(r.has(Rule::BudgetRange)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn allocation_documents() {
        let w = parse_allocation(r#"{"weights":[[0,0.5],[0.25,0]]}"#, 2).unwrap();
        assert_eq!(w.get(0, 1), 0.5);
        assert_eq!(parse_allocation(&serialize_allocation(&w), 2).unwrap(), w);
        assert!(parse_allocation(r#"{"weights":[[0,0.5]]}"#, 2).is_err());
        assert!(parse_allocation(r#"{"weights":[[0],[0.25,0]]}"#, 2).is_err());
        assert!(parse_allocation(r#"{"weights":[[0]],"w":1}"#, 1).is_err());
    }
}
