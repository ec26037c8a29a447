//! Price CSV input and output.
//!
//! Two layouts are accepted and told apart by the header:
//!
//! * long: `date,symbol,adj_close`, one row per observation;
//! * wide: `date,SYM1,SYM2,...`, one row per date.
//!
//! Dates are ISO-8601. Empty, `NA`, `NaN` and `null` cells are missing
//! observations and are dropped for that symbol only.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use fractal_ls_core::spreads::PriceSeries;
use serde::Serialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Layout {
    Long,
    Wide,
}

/// Summary of a loaded price file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniverseFile {
    pub path: PathBuf,
    pub layout: Layout,
    pub symbols: Vec<String>,
    pub date_range: (NaiveDate, NaiveDate),
}

pub fn detect_layout(header: &[String]) -> Option<Layout> {
    let lower: Vec<String> = header
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    match lower.as_slice() {
        [d, s, p] if d == "date" && s == "symbol" && p == "adj_close" => Some(Layout::Long),
        [d, _, ..] if d == "date" => Some(Layout::Wide),
        _ => None,
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(
        cell.trim().to_ascii_lowercase().as_str(),
        "" | "na" | "nan" | "null"
    )
}

struct Collector<'a> {
    path: &'a Path,
    order: Vec<String>,
    data: BTreeMap<String, BTreeMap<NaiveDate, f64>>,
}

impl<'a> Collector<'a> {
    fn new(path: &'a Path) -> Self {
        Self {
            path,
            order: Vec::new(),
            data: BTreeMap::new(),
        }
    }

    fn parse_err(&self, line: u64, message: String) -> CliError {
        CliError::Parse {
            path: self.path.to_path_buf(),
            line,
            message,
        }
    }

    fn date(&self, line: u64, cell: &str) -> Result<NaiveDate> {
        NaiveDate::parse_from_str(cell.trim(), "%Y-%m-%d")
            .map_err(|e| self.parse_err(line, format!("bad date {cell:?}: {e}")))
    }

    fn declare(&mut self, symbol: &str) {
        if !self.data.contains_key(symbol) {
            self.order.push(symbol.to_string());
            self.data.insert(symbol.to_string(), BTreeMap::new());
        }
    }

    fn push(&mut self, line: u64, date: NaiveDate, symbol: &str, cell: &str) -> Result<()> {
        self.declare(symbol);
        if is_missing(cell) {
            return Ok(());
        }
        let price: f64 = cell
            .trim()
            .parse()
            .map_err(|_| self.parse_err(line, format!("bad price {cell:?} for {symbol}")))?;
        if !(price > 0.0 && price.is_finite()) {
            return Err(CliError::Validation(format!(
                "{}:{line}: non-positive price {price} for {symbol} on {date}",
                self.path.display()
            )));
        }
        let series = self.data.get_mut(symbol).expect("declared");
        if series.insert(date, price).is_some() {
            return Err(CliError::Validation(format!(
                "{}:{line}: duplicate row for {symbol} on {date}",
                self.path.display()
            )));
        }
        Ok(())
    }

    fn finish(mut self) -> Result<Vec<PriceSeries>> {
        let mut out = Vec::with_capacity(self.order.len());
        for sym in &self.order {
            let obs = self.data.remove(sym).expect("declared");
            if obs.is_empty() {
                return Err(CliError::Validation(format!(
                    "{}: no prices for {sym}",
                    self.path.display()
                )));
            }
            let (dates, prices) = obs.into_iter().unzip();
            out.push(PriceSeries::new(sym.clone(), dates, prices)?);
        }
        Ok(out)
    }
}

/// Read price series from any reader. `path` only labels error messages.
pub fn read_prices<R: Read>(reader: R, path: &Path) -> Result<(Layout, Vec<PriceSeries>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let parse_err = |line: u64, message: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let layout = detect_layout(&header).ok_or_else(|| {
        parse_err(
            1,
            format!("header {header:?} is neither `date,symbol,adj_close` nor `date,SYM,...`"),
        )
    })?;
    let mut seen = BTreeSet::new();
    if let Some(dup) = header.iter().skip(1).find(|h| !seen.insert(h.as_str())) {
        return Err(parse_err(1, format!("column {dup} appears twice")));
    }

    let mut col = Collector::new(path);
    if layout == Layout::Wide {
        for sym in &header[1..] {
            col.declare(sym);
        }
    }
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let date = col.date(line, &rec[0])?;
        match layout {
            Layout::Long => {
                let sym = rec[1].trim();
                if sym.is_empty() {
                    return Err(parse_err(line, "empty symbol".into()));
                }
                col.push(line, date, sym, &rec[2])?;
            }
            Layout::Wide => {
                for (sym, cell) in header[1..].iter().zip(rec.iter().skip(1)) {
                    col.push(line, date, sym, cell)?;
                }
            }
        }
    }
    Ok((layout, col.finish()?))
}

pub fn ingest_prices(path: &Path) -> Result<Vec<PriceSeries>> {
    Ok(load_universe(path)?.1)
}

pub fn load_universe(path: &Path) -> Result<(UniverseFile, Vec<PriceSeries>)> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let (layout, series) = read_prices(file, path)?;
    let first = series.iter().filter_map(|s| s.dates().first()).min();
    let last = series.iter().filter_map(|s| s.dates().last()).max();
    let (Some(first), Some(last)) = (first, last) else {
        return Err(CliError::Validation(format!(
            "{}: no price rows",
            path.display()
        )));
    };
    let info = UniverseFile {
        path: path.to_path_buf(),
        layout,
        symbols: series.iter().map(|s| s.symbol().to_string()).collect(),
        date_range: (*first, *last),
    };
    Ok((info, series))
}

/// Wide CSV over the union of dates; absent observations are left blank.
pub fn write_wide_csv<W: Write>(series: &[PriceSeries], out: W) -> Result<()> {
    let dates: BTreeSet<NaiveDate> = series
        .iter()
        .flat_map(|s| s.dates().iter().copied())
        .collect();
    let lookup: Vec<BTreeMap<NaiveDate, f64>> = series
        .iter()
        .map(|s| {
            s.dates()
                .iter()
                .copied()
                .zip(s.prices().iter().copied())
                .collect()
        })
        .collect();
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| CliError::Validation(format!("writing CSV: {e}"));
    let mut header = vec!["date".to_string()];
    header.extend(series.iter().map(|s| s.symbol().to_string()));
    w.write_record(&header).map_err(csv_err)?;
    for d in dates {
        let mut row = vec![d.to_string()];
        row.extend(
            lookup
                .iter()
                .map(|m| m.get(&d).map_or(String::new(), |p| p.to_string())),
        );
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| CliError::Validation(format!("writing CSV: {e}")))
}
