//! Result tables rendered as aligned text, CSV or JSON lines.

use crate::error::{Error, Result};
use clap::ValueEnum;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Text,
    Csv,
    JsonLines,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest round-trip decimal; identical on every platform.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x}")
    }
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    /// First record is the header.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let bad = |e: csv::Error| Error::Data(format!("csv: {e}"));
        let header = r.headers().map_err(bad)?.iter().map(str::to_string).collect();
        let rows = r.records().map(|rec| rec.map(|x| x.iter().map(str::to_string).collect())).collect::<std::result::Result<_, _>>().map_err(bad)?;
        Ok(Table { header, rows })
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory csv");
        for r in &self.rows {
            w.write_record(r).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8 csv")
    }

    fn to_text(&self) -> String {
        let width: Vec<usize> = (0..self.header.len())
            .map(|c| self.rows.iter().map(|r| r[c].chars().count()).chain([self.header[c].chars().count()]).max().unwrap_or(0))
            .collect();
        let line = |cells: &[String]| {
            let s: Vec<String> = cells.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
            s.join("  ").trim_end().to_string() + "\n"
        };
        std::iter::once(line(&self.header)).chain(self.rows.iter().map(|r| line(r))).collect()
    }

    fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let fields: Vec<String> = self
                .header
                .iter()
                .zip(r)
                .map(|(k, v)| {
                    let value = match serde_json::from_str::<serde_json::Number>(v) {
                        Ok(n) => n.to_string(),
                        Err(_) => serde_json::to_string(v).expect("string"),
                    };
                    format!("{}:{value}", serde_json::to_string(k).expect("string"))
                })
                .collect();
            out.push('{');
            out.push_str(&fields.join(","));
            out.push_str("}\n");
        }
        out
    }

    pub fn render(&self, f: Format) -> String {
        match f {
            Format::Text => self.to_text(),
            Format::Csv => self.to_csv(),
            Format::JsonLines => self.to_json_lines(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renderings() {
        let mut t = Table::new(&["a", "name"]);
        t.push(vec!["1.5".into(), "x, y".into()]);
        assert_eq!(t.render(Format::Csv), "a,name\n1.5,\"x, y\"\n");
        assert_eq!(t.render(Format::JsonLines), "{\"a\":1.5,\"name\":\"x, y\"}\n");
        assert_eq!(t.render(Format::Text), "a    name\n1.5  x, y\n");
        assert_eq!(Table::from_csv(&t.to_csv()).unwrap(), t);
        assert_eq!(Table::new(&["a"]).render(Format::Csv), "a\n");
        assert_eq!(num(0.1 + 0.2), "0.30000000000000004");
    }
}
