use std::collections::HashMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{canonicalize, format_number, parse_number, Column, Dataset, FACTOR_LEVEL_THRESHOLD};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delimiter {
    #[default]
    Comma,
    Semicolon,
    Tab,
    Space,
}

impl Delimiter {
    pub fn byte(self) -> u8 {
        match self {
            Delimiter::Comma => b',',
            Delimiter::Semicolon => b';',
            Delimiter::Tab => b'\t',
            Delimiter::Space => b' ',
        }
    }
}

impl std::str::FromStr for Delimiter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "comma" | "," => Ok(Delimiter::Comma),
            "semicolon" | ";" => Ok(Delimiter::Semicolon),
            "tab" | "\t" => Ok(Delimiter::Tab),
            "space" | " " => Ok(Delimiter::Space),
            other => Err(Error::invalid(format!("unknown delimiter `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvOptions {
    pub delimiter: Delimiter,
    pub header: bool,
    pub factor_level_threshold: usize,
    pub name: String,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            delimiter: Delimiter::Comma,
            header: true,
            factor_level_threshold: FACTOR_LEVEL_THRESHOLD,
            name: "dataset".to_string(),
        }
    }
}

fn is_missing(field: &str) -> bool {
    field.is_empty() || field == "NA"
}

/// Accumulates one column while rows stream in. Starts as a factor and
/// switches to numeric storage once the distinct-value count reaches the
/// threshold with every value numeric, so memory tracks the output size.
struct ColumnBuilder {
    name: String,
    threshold: usize,
    index: HashMap<String, u32>,
    levels: Vec<String>,
    codes: Vec<Option<u32>>,
    all_numeric: bool,
    numeric: Option<Vec<Option<f64>>>,
}

impl ColumnBuilder {
    fn new(name: String, threshold: usize) -> Self {
        ColumnBuilder {
            name,
            threshold,
            index: HashMap::new(),
            levels: Vec::new(),
            codes: Vec::new(),
            all_numeric: true,
            numeric: None,
        }
    }

    fn push(&mut self, field: &str) {
        if is_missing(field) {
            match &mut self.numeric {
                Some(values) => values.push(None),
                None => self.codes.push(None),
            }
            return;
        }
        let parsed = parse_number(field);
        if let Some(values) = &mut self.numeric {
            match parsed {
                Some(x) => {
                    values.push(Some(x));
                    return;
                }
                None => self.revert_to_factor(),
            }
        }
        if parsed.is_none() {
            self.all_numeric = false;
        }
        let code = match self.index.get(field) {
            Some(&c) => c,
            None => {
                let c = self.levels.len() as u32;
                self.index.insert(field.to_string(), c);
                self.levels.push(field.to_string());
                c
            }
        };
        self.codes.push(Some(code));
        if self.all_numeric && self.levels.len() >= self.threshold {
            self.switch_to_numeric();
        }
    }

    fn switch_to_numeric(&mut self) {
        let parsed: Vec<f64> = self.levels.iter().map(|l| parse_number(l).unwrap()).collect();
        let values = self.codes.iter().map(|c| c.map(|c| parsed[c as usize])).collect();
        self.numeric = Some(values);
        self.codes = Vec::new();
        self.index.clear();
        self.levels.clear();
    }

    fn revert_to_factor(&mut self) {
        let values = self.numeric.take().unwrap_or_default();
        self.all_numeric = false;
        for v in values {
            match v {
                None => self.codes.push(None),
                Some(x) => {
                    let label = format_number(x);
                    let code = match self.index.get(&label) {
                        Some(&c) => c,
                        None => {
                            let c = self.levels.len() as u32;
                            self.index.insert(label.clone(), c);
                            self.levels.push(label);
                            c
                        }
                    };
                    self.codes.push(Some(code));
                }
            }
        }
    }

    fn finish(self) -> Result<Column> {
        match self.numeric {
            Some(values) => Column::numeric(self.name, values),
            None => {
                let (levels, codes) = canonicalize(self.levels, self.codes);
                Column::factor(self.name, levels, codes)
            }
        }
    }
}

/// Reads delimited text (RFC 4180 quoting) into a typed [`Dataset`].
///
/// Columns with fewer than `factor_level_threshold` distinct values, or with
/// any non-numeric value, become factors; the rest are numeric. Empty fields
/// and `NA` are missing.
pub fn load_csv<R: Read>(source: R, options: &CsvOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter.byte())
        .has_headers(false)
        .flexible(true)
        .trim(if options.delimiter == Delimiter::Space {
            csv::Trim::All
        } else {
            csv::Trim::None
        })
        .from_reader(source);

    let mut builders: Option<Vec<ColumnBuilder>> = None;
    let mut record = csv::StringRecord::new();
    let mut row = 0usize;
    let mut data_rows = 0usize;
    while reader.read_record(&mut record)? {
        row += 1;
        let fields: Vec<&str> = if options.delimiter == Delimiter::Space {
            record.iter().filter(|f| !f.is_empty()).collect()
        } else {
            record.iter().collect()
        };
        match &mut builders {
            None => {
                let names: Vec<String> = if options.header {
                    fields.iter().map(|f| f.trim().to_string()).collect()
                } else {
                    (1..=fields.len()).map(|i| format!("V{i}")).collect()
                };
                let mut seen = std::collections::HashSet::new();
                for (i, n) in names.iter().enumerate() {
                    if n.is_empty() {
                        return Err(Error::EmptyColumnName(i));
                    }
                    if !seen.insert(n.clone()) {
                        return Err(Error::DuplicateColumn(n.clone()));
                    }
                }
                let mut b: Vec<ColumnBuilder> = names
                    .into_iter()
                    .map(|n| ColumnBuilder::new(n, options.factor_level_threshold))
                    .collect();
                if !options.header {
                    for (col, f) in b.iter_mut().zip(&fields) {
                        col.push(f);
                    }
                    data_rows += 1;
                }
                builders = Some(b);
            }
            Some(b) => {
                if fields.len() != b.len() {
                    return Err(Error::Parse {
                        row,
                        message: format!("expected {} fields, found {}", b.len(), fields.len()),
                    });
                }
                for (col, f) in b.iter_mut().zip(&fields) {
                    col.push(f);
                }
                data_rows += 1;
            }
        }
    }
    let columns = builders
        .unwrap_or_default()
        .into_iter()
        .map(ColumnBuilder::finish)
        .collect::<Result<Vec<_>>>()?;
    let ds = Dataset::new(options.name.clone(), columns)?;
    debug_assert!(ds.columns().is_empty() || ds.n_rows() == data_rows);
    Ok(ds)
}

pub fn export_csv(ds: &Dataset) -> Result<Vec<u8>> {
    export_csv_with(ds, Delimiter::Comma)
}

pub fn export_csv_with(ds: &Dataset, delimiter: Delimiter) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter.byte())
        .quote_style(if delimiter == Delimiter::Space {
            csv::QuoteStyle::NonNumeric
        } else {
            csv::QuoteStyle::Necessary
        })
        .from_writer(Vec::new());
    w.write_record(ds.columns().iter().map(Column::name))?;
    for row in 0..ds.n_rows() {
        w.write_record(ds.columns().iter().map(|c| c.label(row).unwrap_or_else(|| "NA".to_string())))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ColumnKind;

    fn load(text: &str) -> Result<Dataset> {
        load_csv(text.as_bytes(), &CsvOptions::default())
    }

    #[test]
    fn two_small_factor_columns() {
        let ds = load("a,b\n1,x\n2,y").unwrap();
        assert_eq!(ds.n_rows(), 2);
        let a = ds.column("a").unwrap();
        assert_eq!(a.kind(), ColumnKind::Factor);
        assert_eq!(a.levels().unwrap(), &["1".to_string(), "2".to_string()]);
        assert_eq!(ds.column("b").unwrap().levels().unwrap(), &["x".to_string(), "y".to_string()]);
    }

    #[test]
    fn many_distinct_reals_become_numeric() {
        let mut text = String::from("x\n");
        for i in 0..100 {
            text.push_str(&format!("{}\n", i as f64 * 0.37 + 0.01));
        }
        let ds = load(&text).unwrap();
        let x = ds.column("x").unwrap();
        assert_eq!(x.kind(), ColumnKind::Numeric);
        assert_eq!(x.values().unwrap().len(), 100);
    }

    #[test]
    fn threshold_is_overridable() {
        let opts = CsvOptions {
            factor_level_threshold: 3,
            ..Default::default()
        };
        let ds = load_csv("x\n1\n2\n3\n".as_bytes(), &opts).unwrap();
        assert_eq!(ds.column("x").unwrap().kind(), ColumnKind::Numeric);
    }

    #[test]
    fn late_text_value_reverts_numeric_column() {
        let opts = CsvOptions {
            factor_level_threshold: 2,
            ..Default::default()
        };
        let ds = load_csv("x\n1\n2\n3\nfoo\n".as_bytes(), &opts).unwrap();
        let x = ds.column("x").unwrap();
        assert_eq!(x.kind(), ColumnKind::Factor);
        assert_eq!(x.levels().unwrap().len(), 4);
    }

    #[test]
    fn missing_markers() {
        let ds = load("a,b\n,x\nNA,y\n1,\n").unwrap();
        let a = ds.column("a").unwrap();
        assert!(a.is_missing(0) && a.is_missing(1) && !a.is_missing(2));
        assert!(ds.column("b").unwrap().is_missing(2));
    }

    #[test]
    fn ragged_row_reports_row_number() {
        match load("a,b\n1,2\n3\n") {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_header_is_rejected() {
        assert!(matches!(load("a,a\n1,2\n"), Err(Error::DuplicateColumn(_))));
    }

    #[test]
    fn delimiters() {
        for (d, text) in [
            (Delimiter::Semicolon, "a;b\n1;2\n"),
            (Delimiter::Tab, "a\tb\n1\t2\n"),
            (Delimiter::Space, "a b\n1  2\n"),
        ] {
            let opts = CsvOptions {
                delimiter: d,
                ..Default::default()
            };
            let ds = load_csv(text.as_bytes(), &opts).unwrap();
            assert_eq!(ds.column_names(), vec!["a", "b"], "{d:?}");
            assert_eq!(ds.column("b").unwrap().label(0).unwrap(), "2");
        }
    }

    #[test]
    fn headerless_input_gets_positional_names() {
        let opts = CsvOptions {
            header: false,
            ..Default::default()
        };
        let ds = load_csv("1,2\n3,4\n".as_bytes(), &opts).unwrap();
        assert_eq!(ds.column_names(), vec!["V1", "V2"]);
        assert_eq!(ds.n_rows(), 2);
    }

    #[test]
    fn quoted_fields() {
        let ds = load("a,b\n\"x,1\",\"say \"\"hi\"\"\"\n").unwrap();
        assert_eq!(ds.column("a").unwrap().label(0).unwrap(), "x,1");
        assert_eq!(ds.column("b").unwrap().label(0).unwrap(), "say \"hi\"");
        let back = load(std::str::from_utf8(&export_csv(&ds).unwrap()).unwrap()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn zero_row_dataset_exports_header_only() {
        let ds = load("a,b\n").unwrap();
        assert_eq!(ds.n_rows(), 0);
        assert_eq!(export_csv(&ds).unwrap(), b"a,b\n");
        assert_eq!(load("a,b\n").unwrap(), load(std::str::from_utf8(&export_csv(&ds).unwrap()).unwrap()).unwrap());
    }

    #[test]
    fn interval_labels_round_trip() {
        let ds = load("x\n\"[1,3.5]\"\n\"(3.5,6]\"\n\"[1,3.5]\"\n").unwrap();
        let x = ds.column("x").unwrap();
        assert_eq!(x.levels().unwrap(), &["[1,3.5]".to_string(), "(3.5,6]".to_string()]);
        let back = load(std::str::from_utf8(&export_csv(&ds).unwrap()).unwrap()).unwrap();
        assert_eq!(back, ds);
    }
}
