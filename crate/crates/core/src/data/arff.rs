//! ARFF reader for MULAN/MEKA multi-label files, dense and sparse.
//!
//! Label attributes are located either by the MEKA `-C k` option embedded in
//! the `@relation` name (k > 0: the first k attributes, k < 0: the last |k|)
//! or by an explicit list of attribute names.

use std::path::Path;
use std::str::FromStr;

use log::warn;

use super::MLDataset;
use crate::error::{Error, Result};
use crate::labelset::{Labelset, MAX_LABELS};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelSpec {
    /// Read `-C k` from the relation name.
    Meka,
    First(usize),
    Last(usize),
    Names(Vec<String>),
}

impl FromStr for LabelSpec {
    type Err = Error;

    /// Accepts `meka`, `-C k` / `-C -k`, or a comma-separated list of names.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s.eq_ignore_ascii_case("meka") {
            return Ok(LabelSpec::Meka);
        }
        if let Some(k) = meka_option(s) {
            return count_spec(k);
        }
        let names: Vec<String> = s.split(',').map(|n| n.trim().to_string()).filter(|n| !n.is_empty()).collect();
        if names.is_empty() {
            return Err(Error::invalid("empty label name list"));
        }
        Ok(LabelSpec::Names(names))
    }
}

fn count_spec(k: i64) -> Result<LabelSpec> {
    match k {
        0 => Err(Error::invalid("-C 0 selects no labels")),
        k if k > 0 => Ok(LabelSpec::First(k as usize)),
        k => Ok(LabelSpec::Last(k.unsigned_abs() as usize)),
    }
}

/// Finds a `-C <int>` option in free text.
fn meka_option(text: &str) -> Option<i64> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    tokens.windows(2).find(|w| w[0] == "-C").and_then(|w| w[1].trim_matches(|c| c == '\'' || c == '"').parse().ok())
}

#[derive(Debug, Clone)]
enum AttrType {
    Numeric,
    Nominal(Vec<String>),
}

#[derive(Debug, Clone)]
struct Attribute {
    name: String,
    kind: AttrType,
}

/// Splits on `sep` outside single or double quotes, unquoting each token.
fn split_quoted(text: &str, sep: char) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quote: Option<char> = None;
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) if c == '\\' => {
                if let Some(next) = chars.next() {
                    cur.push(next);
                }
            }
            Some(_) => cur.push(c),
            None if c == '\'' || c == '"' => quote = Some(c),
            None if c == sep => out.push(std::mem::take(&mut cur).trim().to_string()),
            None => cur.push(c),
        }
    }
    if quote.is_some() {
        return Err(Error::invalid("unterminated quote"));
    }
    out.push(cur.trim().to_string());
    Ok(out)
}

/// Splits a leading (possibly quoted) token from the rest of the line.
fn take_token(text: &str) -> Result<(String, &str)> {
    let text = text.trim_start();
    let mut chars = text.char_indices();
    match chars.next() {
        Some((_, q @ ('\'' | '"'))) => {
            for (i, c) in chars {
                if c == q {
                    return Ok((text[1..i].to_string(), &text[i + 1..]));
                }
            }
            Err(Error::invalid("unterminated quoted name"))
        }
        Some(_) => {
            let end = text.find(char::is_whitespace).unwrap_or(text.len());
            Ok((text[..end].to_string(), &text[end..]))
        }
        None => Err(Error::invalid("missing token")),
    }
}

fn parse_attribute(rest: &str) -> Result<Attribute> {
    let (name, rest) = take_token(rest)?;
    let ty = rest.trim();
    let kind = if ty.starts_with('{') {
        let inner = ty
            .strip_prefix('{')
            .and_then(|t| t.strip_suffix('}'))
            .ok_or_else(|| Error::invalid(format!("malformed nominal type for '{name}'")))?;
        AttrType::Nominal(split_quoted(inner, ',')?)
    } else {
        match ty.to_ascii_lowercase().as_str() {
            "numeric" | "real" | "integer" => AttrType::Numeric,
            other => return Err(Error::invalid(format!("unsupported type '{other}' for attribute '{name}'"))),
        }
    };
    Ok(Attribute { name, kind })
}

fn at_line(line: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Parse { .. } => e,
        other => Error::Parse { line, message: other.to_string() },
    }
}

/// Raw cell before feature expansion.
#[derive(Debug, Clone, Copy)]
enum Cell {
    Missing,
    Number(f64),
    Level(usize),
}

fn parse_cell(attr: &Attribute, token: &str) -> Result<Cell> {
    if token == "?" {
        return Ok(Cell::Missing);
    }
    match &attr.kind {
        AttrType::Numeric => token
            .parse::<f64>()
            .map(Cell::Number)
            .map_err(|_| Error::invalid(format!("'{token}' is not numeric for attribute '{}'", attr.name))),
        AttrType::Nominal(levels) => levels
            .iter()
            .position(|l| l == token)
            .map(Cell::Level)
            .ok_or_else(|| Error::invalid(format!("'{token}' is not a level of attribute '{}'", attr.name))),
    }
}

fn default_cell(attr: &Attribute) -> Cell {
    match attr.kind {
        AttrType::Numeric => Cell::Number(0.0),
        AttrType::Nominal(_) => Cell::Level(0),
    }
}

pub fn parse_arff_file(path: impl AsRef<Path>, spec: &LabelSpec) -> Result<MLDataset> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_arff(&text, spec)
}

pub fn parse_arff(text: &str, spec: &LabelSpec) -> Result<MLDataset> {
    let mut relation: Option<String> = None;
    let mut attributes: Vec<Attribute> = Vec::new();
    let mut rows: Vec<Vec<Cell>> = Vec::new();
    let mut in_data = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if !in_data {
            let lower = line.to_ascii_lowercase();
            if lower.starts_with("@relation") {
                let (name, _) = take_token(&line["@relation".len()..]).map_err(at_line(line_no))?;
                relation = Some(name);
            } else if lower.starts_with("@attribute") {
                attributes.push(parse_attribute(&line["@attribute".len()..]).map_err(at_line(line_no))?);
            } else if lower.starts_with("@data") {
                if relation.is_none() || attributes.is_empty() {
                    return Err(Error::Parse { line: line_no, message: "@data before @relation/@attribute".into() });
                }
                in_data = true;
            } else {
                return Err(Error::Parse { line: line_no, message: format!("unexpected header line '{line}'") });
            }
            continue;
        }
        let row = parse_row(line, &attributes).map_err(at_line(line_no))?;
        rows.push(row);
    }
    let relation = relation.ok_or(Error::Parse { line: 0, message: "missing @relation".into() })?;
    if !in_data {
        return Err(Error::Parse { line: 0, message: "missing @data section".into() });
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: 0, message: "no data rows".into() });
    }
    build_dataset(&relation, &attributes, &rows, spec)
}

fn parse_row(line: &str, attributes: &[Attribute]) -> Result<Vec<Cell>> {
    if let Some(body) = line.strip_prefix('{') {
        let end = body.find('}').ok_or_else(|| Error::invalid("unterminated sparse row"))?;
        let mut row: Vec<Cell> = attributes.iter().map(default_cell).collect();
        let body = body[..end].trim();
        if body.is_empty() {
            return Ok(row);
        }
        for entry in split_quoted(body, ',')? {
            let (index, value) = take_token(&entry)?;
            let value = value.trim().trim_matches(|c| c == '\'' || c == '"');
            let index: usize = index.parse().map_err(|_| Error::invalid(format!("bad sparse index '{index}'")))?;
            let attr = attributes
                .get(index)
                .ok_or_else(|| Error::invalid(format!("sparse index {index} out of range")))?;
            row[index] = parse_cell(attr, value)?;
        }
        return Ok(row);
    }
    let tokens = split_quoted(line, ',')?;
    if tokens.len() != attributes.len() {
        return Err(Error::invalid(format!("expected {} values, found {}", attributes.len(), tokens.len())));
    }
    tokens.iter().zip(attributes).map(|(t, a)| parse_cell(a, t)).collect()
}

fn resolve_labels(relation: &str, attributes: &[Attribute], spec: &LabelSpec) -> Result<Vec<usize>> {
    let n = attributes.len();
    let spec = match spec {
        LabelSpec::Meka => {
            let k = meka_option(relation)
                .ok_or_else(|| Error::invalid("relation name has no -C option and no labels were given"))?;
            count_spec(k)?
        }
        other => other.clone(),
    };
    let picked: Vec<usize> = match spec {
        LabelSpec::First(k) if k <= n => (0..k).collect(),
        LabelSpec::Last(k) if k <= n => (n - k..n).collect(),
        LabelSpec::First(k) | LabelSpec::Last(k) => {
            return Err(Error::invalid(format!("{k} label attributes requested but only {n} declared")))
        }
        LabelSpec::Names(names) => names
            .iter()
            .map(|name| {
                attributes
                    .iter()
                    .position(|a| &a.name == name)
                    .ok_or_else(|| Error::invalid(format!("missing label attribute '{name}'")))
            })
            .collect::<Result<_>>()?,
        LabelSpec::Meka => unreachable!("resolved above"),
    };
    if picked.len() > MAX_LABELS {
        return Err(Error::LabelCount(picked.len()));
    }
    Ok(picked)
}

fn build_dataset(relation: &str, attributes: &[Attribute], rows: &[Vec<Cell>], spec: &LabelSpec) -> Result<MLDataset> {
    let label_idx = resolve_labels(relation, attributes, spec)?;
    // Position of "1" in each label attribute's level list.
    let mut positive_level = Vec::with_capacity(label_idx.len());
    for &a in &label_idx {
        let attr = &attributes[a];
        match &attr.kind {
            AttrType::Nominal(levels)
                if levels.len() == 2 && levels.contains(&"0".to_string()) && levels.contains(&"1".to_string()) =>
            {
                positive_level.push(levels.iter().position(|l| l == "1").unwrap());
            }
            _ => return Err(Error::invalid(format!("label attribute '{}' is not binary {{0,1}}", attr.name))),
        }
    }

    let mut labelsets = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        let bits = label_idx
            .iter()
            .zip(&positive_level)
            .map(|(&a, &pos)| match row[a] {
                Cell::Level(l) => Ok(l == pos),
                _ => Err(Error::invalid(format!("missing label '{}' in data row {}", attributes[a].name, r + 1))),
            })
            .collect::<Result<Vec<bool>>>()?;
        labelsets.push(Labelset::from_bits(&bits)?);
    }

    // Expand features: numeric as-is, nominal one-hot in declaration order.
    let mut feature_names = Vec::new();
    let mut columns: Vec<Vec<Option<f64>>> = Vec::new();
    for (a, attr) in attributes.iter().enumerate() {
        if label_idx.contains(&a) {
            continue;
        }
        match &attr.kind {
            AttrType::Numeric => {
                feature_names.push(attr.name.clone());
                columns.push(
                    rows.iter()
                        .map(|row| match row[a] {
                            Cell::Number(v) => Some(v),
                            _ => None,
                        })
                        .collect(),
                );
            }
            AttrType::Nominal(levels) => {
                for (l, level) in levels.iter().enumerate() {
                    feature_names.push(format!("{}={}", attr.name, level));
                    columns.push(
                        rows.iter()
                            .map(|row| match row[a] {
                                Cell::Level(v) => Some((v == l) as u8 as f64),
                                _ => None,
                            })
                            .collect(),
                    );
                }
            }
        }
    }
    let mut imputed = 0usize;
    for col in columns.iter_mut() {
        let present: Vec<f64> = col.iter().flatten().copied().collect();
        let mean = if present.is_empty() { 0.0 } else { present.iter().sum::<f64>() / present.len() as f64 };
        for v in col.iter_mut().filter(|v| v.is_none()) {
            *v = Some(mean);
            imputed += 1;
        }
    }
    if imputed > 0 {
        warn!("{relation}: mean-imputed {imputed} missing feature values");
    }
    let features: Vec<Vec<f64>> =
        (0..rows.len()).map(|r| columns.iter().map(|c| c[r].expect("imputed")).collect()).collect();
    let label_names = label_idx.iter().map(|&a| attributes[a].name.clone()).collect();
    let name = relation.split(':').next().unwrap_or(relation).trim().to_string();
    MLDataset::new(name, features, labelsets, label_names, feature_names)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "% toy dataset\n\
@relation 'toy: -C 2'\n\
@attribute a {0,1}\n\
@attribute b {0,1}\n\
@attribute x numeric\n\
@data\n\
1,0,0.5\n\
0,1,-1.25\n\
1,1,3\n";

    #[test]
    fn dense_meka() {
        let ds = parse_arff(TOY, &LabelSpec::Meka).unwrap();
        assert_eq!((ds.len(), ds.label_count(), ds.feature_count()), (3, 2, 1));
        assert_eq!(ds.name, "toy");
        assert_eq!(ds.labelsets[1].to_vec(), vec![0, 1]);
        assert_eq!(ds.features[1], vec![-1.25]);
    }

    #[test]
    fn sparse_rows_default_to_zero() {
        let text = "@RELATION 's: -C -2'\n@ATTRIBUTE f1 NUMERIC\n@ATTRIBUTE f2 numeric\n\
@attribute f3 real\n@attribute l1 {0,1}\n@attribute l2 {0,1}\n@data\n{0 1, 2 0.5}\n{3 1}\n{}\n";
        let ds = parse_arff(text, &LabelSpec::Meka).unwrap();
        assert_eq!(ds.label_names, vec!["l1", "l2"]);
        assert_eq!(ds.features[0], vec![1.0, 0.0, 0.5]);
        assert_eq!(ds.labelsets[0].to_vec(), vec![0, 0]);
        assert_eq!(ds.labelsets[1].to_vec(), vec![1, 0]);
        assert_eq!(ds.labelsets[2].to_vec(), vec![0, 0]);
    }

    #[test]
    fn sparse_row_value_lands_on_its_column() {
        let text = "@relation r\n@attribute y1 {0,1}\n@attribute f1 numeric\n@attribute f2 numeric\n\
@attribute f3 numeric\n@data\n{0 1, 3 0.5}\n";
        let ds = parse_arff(text, &LabelSpec::First(1)).unwrap();
        assert_eq!(ds.features[0], vec![0.0, 0.0, 0.5]);
        assert_eq!(ds.labelsets[0].to_vec(), vec![1]);
    }

    #[test]
    fn nominal_features_one_hot_and_missing_imputed() {
        let text = "@relation r\n@attribute 'col or' {red,green,blue}\n@attribute x numeric\n\
@attribute y {1,0}\n@data\ngreen,1,1\n?,?,0\nred,3,1\n";
        let ds = parse_arff(text, &"y".parse().unwrap()).unwrap();
        assert_eq!(ds.feature_names, vec!["col or=red", "col or=green", "col or=blue", "x"]);
        assert_eq!(ds.features[0], vec![0.0, 1.0, 0.0, 1.0]);
        assert_eq!(ds.features[1], vec![0.5, 0.5, 0.0, 2.0]);
        assert_eq!(ds.labelsets[0].to_vec(), vec![1]);
        assert_eq!(ds.labelsets[1].to_vec(), vec![0]);
    }

    #[test]
    fn label_spec_parsing() {
        assert_eq!("-C 6".parse::<LabelSpec>().unwrap(), LabelSpec::First(6));
        assert_eq!("-C -3".parse::<LabelSpec>().unwrap(), LabelSpec::Last(3));
        assert_eq!("meka".parse::<LabelSpec>().unwrap(), LabelSpec::Meka);
        assert_eq!("a, b".parse::<LabelSpec>().unwrap(), LabelSpec::Names(vec!["a".into(), "b".into()]));
    }

    #[test]
    fn errors() {
        // Non-binary label.
        let text = "@relation 'r: -C 1'\n@attribute y {0,1,2}\n@attribute x numeric\n@data\n1,2\n";
        assert!(parse_arff(text, &LabelSpec::Meka).is_err());
        // Missing label name.
        assert!(parse_arff(TOY, &LabelSpec::Names(vec!["zz".into()])).is_err());
        // No -C and no explicit labels.
        let text = "@relation r\n@attribute y {0,1}\n@data\n1\n";
        assert!(parse_arff(text, &LabelSpec::Meka).is_err());
        // Malformed header reports a line number.
        let text = "@relation r\n@attribute\n@data\n";
        assert!(matches!(parse_arff(text, &LabelSpec::First(1)), Err(Error::Parse { line: 2, .. })));
        // Wrong arity.
        let text = "@relation 'r: -C 1'\n@attribute y {0,1}\n@attribute x numeric\n@data\n1\n";
        assert!(matches!(parse_arff(text, &LabelSpec::Meka), Err(Error::Parse { line: 5, .. })));
        // Missing label value.
        let text = "@relation 'r: -C 1'\n@attribute y {0,1}\n@attribute x numeric\n@data\n?,1\n";
        assert!(parse_arff(text, &LabelSpec::Meka).is_err());
    }

    #[test]
    fn label_cap_enforced() {
        let mut text = String::from("@relation 'big: -C 26'\n");
        for j in 0..26 {
            text.push_str(&format!("@attribute y{j} {{0,1}}\n"));
        }
        text.push_str("@attribute x numeric\n@data\n");
        text.push_str(&"0,".repeat(26));
        text.push_str("1\n");
        assert!(matches!(parse_arff(&text, &LabelSpec::Meka), Err(Error::LabelCount(26))));
    }
}
