//! CSV files for fitted item parameters and abilities.
//!
//! Floats are written with 17 significant digits in scientific notation, so
//! a write/read/write cycle is byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use super::fit::{AbilityEstimate, Degeneracy};
use super::model::ItemParams;
use crate::error::{Error, Result};

pub const ITEM_HEADER: &str = "item,discrimination,difficulty,guessing";
pub const ABILITY_HEADER: &str = "respondent,ability,degenerate";
pub const THETA_HEADER: &str = "respondent,theta";

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn items_to_csv(ids: &[String], items: &[ItemParams]) -> String {
    let mut out = String::from(ITEM_HEADER);
    out.push('\n');
    for (id, it) in ids.iter().zip(items) {
        let _ = writeln!(
            out,
            "{id},{},{},{}",
            format_float(it.a),
            format_float(it.b),
            format_float(it.c)
        );
    }
    out
}

pub fn abilities_to_csv(ids: &[String], abilities: &[AbilityEstimate]) -> String {
    let mut out = String::from(ABILITY_HEADER);
    out.push('\n');
    for (id, ab) in ids.iter().zip(abilities) {
        let _ = writeln!(out, "{id},{},{}", format_float(ab.theta), ab.degenerate.as_str());
    }
    out
}

pub fn thetas_to_csv(ids: &[String], thetas: &[f64]) -> String {
    let mut out = String::from(THETA_HEADER);
    out.push('\n');
    for (id, t) in ids.iter().zip(thetas) {
        let _ = writeln!(out, "{id},{}", format_float(*t));
    }
    out
}

/// Splits a simple CSV with a fixed header into `(line_no, fields)` rows.
fn records<'a>(text: &'a str, header: &str, context: &str) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text.lines();
    if lines.next() != Some(header) {
        return Err(Error::Parse {
            context: context.to_string(),
            line: 1,
            column: 1,
            message: format!("expected header `{header}`"),
        });
    }
    let width = header.split(',').count();
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(Error::Parse {
                context: context.to_string(),
                line: k + 2,
                column: fields.len().min(width) + 1,
                message: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        out.push((k + 2, fields));
    }
    Ok(out)
}

fn parse_float(field: &str, line: usize, column: usize, context: &str) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            context: context.to_string(),
            line,
            column,
            message: format!("`{field}` is not a finite number"),
        }),
    }
}

pub fn items_from_csv(text: &str) -> Result<(Vec<String>, Vec<ItemParams>)> {
    let ctx = "item parameters";
    let mut ids = Vec::new();
    let mut items = Vec::new();
    for (line, f) in records(text, ITEM_HEADER, ctx)? {
        ids.push(f[0].to_string());
        items.push(ItemParams {
            a: parse_float(f[1], line, 2, ctx)?,
            b: parse_float(f[2], line, 3, ctx)?,
            c: parse_float(f[3], line, 4, ctx)?,
        });
    }
    Ok((ids, items))
}

pub fn abilities_from_csv(text: &str) -> Result<(Vec<String>, Vec<AbilityEstimate>)> {
    let ctx = "abilities";
    let mut ids = Vec::new();
    let mut out = Vec::new();
    for (line, f) in records(text, ABILITY_HEADER, ctx)? {
        let degenerate = Degeneracy::parse(f[2]).ok_or_else(|| Error::Parse {
            context: ctx.to_string(),
            line,
            column: 3,
            message: format!("unknown degeneracy flag `{}`", f[2]),
        })?;
        ids.push(f[0].to_string());
        out.push(AbilityEstimate {
            theta: parse_float(f[1], line, 2, ctx)?,
            degenerate,
        });
    }
    Ok((ids, out))
}

pub fn thetas_from_csv(text: &str) -> Result<(Vec<String>, Vec<f64>)> {
    let ctx = "abilities";
    let mut ids = Vec::new();
    let mut out = Vec::new();
    for (line, f) in records(text, THETA_HEADER, ctx)? {
        ids.push(f[0].to_string());
        out.push(parse_float(f[1], line, 2, ctx)?);
    }
    Ok((ids, out))
}

pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn item_csv_is_stable(params in proptest::collection::vec((-4.0..4.0f64, -4.0..4.0f64, 0.0..0.5f64), 1..20)) {
            let ids: Vec<String> = (0..params.len()).map(|i| format!("inst_{i}")).collect();
            let items: Vec<ItemParams> = params.iter().map(|&(a, b, c)| ItemParams::new(a, b, c)).collect();
            let text = items_to_csv(&ids, &items);
            let (ids2, items2) = items_from_csv(&text).unwrap();
            prop_assert_eq!(&ids2, &ids);
            prop_assert_eq!(&items2, &items);
            prop_assert_eq!(items_to_csv(&ids2, &items2), text);
        }
    }

    #[test]
    fn ability_csv_round_trip() {
        let ids = vec!["optimal".to_string(), "rf_1".to_string()];
        let ab = vec![
            AbilityEstimate { theta: 2.5, degenerate: Degeneracy::AllCorrect },
            AbilityEstimate { theta: -0.1234567890123, degenerate: Degeneracy::None },
        ];
        let text = abilities_to_csv(&ids, &ab);
        let (ids2, ab2) = abilities_from_csv(&text).unwrap();
        assert_eq!((ids2, ab2), (ids, ab));
        assert!(abilities_from_csv("respondent,ability,degenerate\nx,1.0,maybe\n").is_err());
        assert!(items_from_csv("item,a,b,c\n").is_err());
        assert!(items_from_csv("item,discrimination,difficulty,guessing\nx,1,2\n").is_err());
    }
}
