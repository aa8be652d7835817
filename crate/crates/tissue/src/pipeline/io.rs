//! Event readers (JSON Lines and headered CSV) and the antigen writer.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::gate::AntigenEvent;
use crate::pipeline::RawEvent;
use crate::receptor::RawValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Jsonl,
    Csv,
}

/// Pick a format from a path: `.csv` reads as headered CSV, everything
/// else (including stdin) as JSON Lines.
pub fn detect_format(path: &str) -> InputFormat {
    if std::path::Path::new(path)
        .extension()
        .is_some_and(|ext| ext.eq_ignore_ascii_case("csv"))
    {
        InputFormat::Csv
    } else {
        InputFormat::Jsonl
    }
}

/// Stream records from a reader. Unparseable records come back as
/// `Error::Input` so the caller can count and skip them; `Error::Io` means
/// the underlying stream failed and the run should abort.
pub fn read_events<R: BufRead + 'static>(
    reader: R,
    format: InputFormat,
) -> Box<dyn Iterator<Item = Result<RawEvent>>> {
    match format {
        InputFormat::Jsonl => Box::new(JsonlEvents { lines: reader.lines() }),
        InputFormat::Csv => Box::new(CsvEvents::new(reader)),
    }
}

struct JsonlEvents<B> {
    lines: std::io::Lines<B>,
}

impl<B: BufRead> Iterator for JsonlEvents<B> {
    type Item = Result<RawEvent>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            match self.lines.next()? {
                Err(e) => return Some(Err(Error::Io(e))),
                Ok(line) if line.trim().is_empty() => continue,
                Ok(line) => {
                    return Some(
                        serde_json::from_str(&line)
                            .map_err(|e| Error::input(format!("bad JSON record: {e}"))),
                    )
                }
            }
        }
    }
}

/// CSV events: the header declares the columns. `ts`, `source` and `label`
/// are special when present; every other column must be numeric and
/// becomes one feature dimension, in header order. Feature values are also
/// mirrored into the raw map under their column names, so receptors can
/// watch them.
struct CsvEvents<R: std::io::Read> {
    records: csv::StringRecordsIntoIter<R>,
    header: Option<CsvHeader>,
    row: i64,
}

struct CsvHeader {
    ts: Option<usize>,
    source: Option<usize>,
    label: Option<usize>,
    features: Vec<(usize, String)>,
}

impl<R: std::io::Read> CsvEvents<R> {
    fn new(reader: R) -> Self {
        let csv_reader = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
        CsvEvents { records: csv_reader.into_records(), header: None, row: 0 }
    }

    fn parse_record(&mut self, record: &csv::StringRecord) -> Result<RawEvent> {
        let header = self.header.as_ref().expect("header parsed first");
        let field = |i: usize| -> Result<&str> {
            record
                .get(i)
                .ok_or_else(|| Error::input(format!("CSV record is missing column {i}")))
        };
        let ts = match header.ts {
            Some(i) => field(i)?
                .trim()
                .parse::<i64>()
                .map_err(|e| Error::input(format!("bad ts value: {e}")))?,
            None => self.row,
        };
        let source = match header.source {
            Some(i) => field(i)?.to_string(),
            None => "csv".to_string(),
        };
        let label = match header.label {
            Some(i) => {
                let v = field(i)?.trim();
                (!v.is_empty()).then(|| v.to_string())
            }
            None => None,
        };
        let mut features = Vec::with_capacity(header.features.len());
        let mut raw = BTreeMap::new();
        for (i, name) in &header.features {
            let text = field(*i)?.trim();
            let value: f64 = text
                .parse()
                .map_err(|_| Error::input(format!("column '{name}' value '{text}' is not numeric")))?;
            features.push(value);
            raw.insert(name.clone(), RawValue::Num(value));
        }
        Ok(RawEvent { ts, source, features, raw: Some(raw), label })
    }
}

impl<R: std::io::Read> Iterator for CsvEvents<R> {
    type Item = Result<RawEvent>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let record = match self.records.next()? {
                Ok(r) => r,
                Err(e) => {
                    return Some(match e.kind() {
                        csv::ErrorKind::Io(_) => Err(Error::input(format!("CSV read failed: {e}"))),
                        _ => Err(Error::input(format!("bad CSV record: {e}"))),
                    })
                }
            };
            if self.header.is_none() {
                let mut header =
                    CsvHeader { ts: None, source: None, label: None, features: Vec::new() };
                for (i, name) in record.iter().enumerate() {
                    match name.trim() {
                        "ts" => header.ts = Some(i),
                        "source" => header.source = Some(i),
                        "label" => header.label = Some(i),
                        other => header.features.push((i, other.to_string())),
                    }
                }
                self.header = Some(header);
                continue;
            }
            let parsed = self.parse_record(&record);
            self.row += 1;
            return Some(parsed);
        }
    }
}

/// Write one antigen as a JSON line.
pub fn write_antigen<W: Write>(out: &mut W, antigen: &AntigenEvent) -> Result<()> {
    serde_json::to_writer(&mut *out, antigen)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    out.write_all(b"\n")?;
    Ok(())
}
