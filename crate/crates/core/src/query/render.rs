//! Result formatting.

use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Aligned,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "aligned" => Ok(Format::Aligned),
            "csv" => Ok(Format::Csv),
            _ => Err(format!("unknown format {s} (expected aligned or csv)")),
        }
    }
}

pub fn render(headers: &[String], rows: &[Vec<Value>], format: Format) -> String {
    match format {
        Format::Aligned => table(headers, rows),
        Format::Csv => csv(headers, rows),
    }
}

/// Unquoted display form of a value.
pub fn text(v: &Value) -> String {
    match v {
        Value::Int(i) => i.to_string(),
        Value::Char(s) => s.clone(),
    }
}

fn table(headers: &[String], rows: &[Vec<Value>]) -> String {
    let cells: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(text).collect()).collect();
    let mut width: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for r in &cells {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let numeric: Vec<bool> = (0..headers.len())
        .map(|i| rows.first().is_some_and(|r| matches!(r[i], Value::Int(_))))
        .collect();
    let line = |r: &[String]| {
        let parts: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if numeric[i] {
                    format!("{c:>w$}", w = width[i])
                } else {
                    format!("{c:<w$}", w = width[i])
                }
            })
            .collect();
        parts.join(" | ").trim_end().to_string()
    };
    let mut out = line(headers);
    out.push('\n');
    let rule: Vec<String> = width.iter().map(|&w| "-".repeat(w)).collect();
    out.push_str(&rule.join("-+-"));
    out.push('\n');
    for r in &cells {
        out.push_str(&line(r));
        out.push('\n');
    }
    let n = rows.len();
    out.push_str(&format!("({n} row{})\n", if n == 1 { "" } else { "s" }));
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv(headers: &[String], rows: &[Vec<Value>]) -> String {
    let mut out = String::new();
    let head: Vec<String> = headers.iter().map(|h| csv_field(h)).collect();
    out.push_str(&head.join(","));
    out.push('\n');
    for r in rows {
        let f: Vec<String> = r.iter().map(|v| csv_field(&text(v))).collect();
        out.push_str(&f.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_formats() {
        let h = vec!["ID".to_string(), "NAME".to_string()];
        let rows = vec![
            vec![Value::Int(7), Value::Char("a,b".into())],
            vec![Value::Int(12), Value::Char("say \"x\"".into())],
        ];
        assert_eq!(
            render(&h, &rows, Format::Aligned),
            "ID | NAME\n---+--------\n 7 | a,b\n12 | say \"x\"\n(2 rows)\n"
        );
        assert_eq!(
            render(&h, &rows, Format::Csv),
            "ID,NAME\n7,\"a,b\"\n12,\"say \"\"x\"\"\"\n"
        );
    }
}
