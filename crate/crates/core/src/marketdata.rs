//! CSV ingestion of price histories and option chains, and surface output.
//!
//! Schemas (UTF-8, comma separated, `.` decimal point):
//!
//! - prices: `date,adj_close` with ISO `YYYY-MM-DD` dates, strictly increasing
//! - chain: `expiry_steps,strike,price`
//! - surface (long): `T,M,value`, plus a companion dense matrix whose header
//!   row is `T\M,<m_1>,...` and whose rows start with the maturity
//!
//! Surface files carry the kernel bandwidth in `#` comment lines.

use std::collections::HashSet;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::calibrate::ReturnSeries;
use crate::error::{Error, Result};
use crate::implied::{Bandwidth, Quote, QuoteSet, SurfaceGrid};
use crate::lattice::Convention;

pub const PRICE_HEADER: [&str; 2] = ["date", "adj_close"];
pub const CHAIN_HEADER: [&str; 3] = ["expiry_steps", "strike", "price"];
pub const SURFACE_HEADER: [&str; 3] = ["T", "M", "value"];

/// Validated adjusted-close history.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceHistory {
    pub dates: Vec<NaiveDate>,
    pub adj_close: Vec<f64>,
}

impl PriceHistory {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn last_close(&self) -> Option<f64> {
        self.adj_close.last().copied()
    }

    /// The `len` rows ending at `end` inclusive (the latest row when `end` is
    /// `None`). Returns `None` if `end` is absent or fewer than `len` rows
    /// precede it.
    pub fn window(&self, end: Option<NaiveDate>, len: usize) -> Option<PriceHistory> {
        let stop = match end {
            Some(d) => self.dates.binary_search(&d).ok()? + 1,
            None => self.len(),
        };
        if len == 0 || len > stop {
            return None;
        }
        Some(PriceHistory {
            dates: self.dates[stop - len..stop].to_vec(),
            adj_close: self.adj_close[stop - len..stop].to_vec(),
        })
    }
}

fn io_err(path: &Path, e: impl ToString) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn schema(path: &Path, row: usize, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        row,
        message: message.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file))
}

fn check_header(path: &Path, rdr: &mut csv::Reader<File>, expected: &[&str]) -> Result<()> {
    let headers = rdr.headers().map_err(|e| schema(path, 1, e.to_string()))?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(schema(
            path,
            1,
            format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

/// Parses a finite decimal number; rejects locale variants such as `1,5`.
fn parse_number(path: &Path, row: usize, field: &str, raw: &str) -> Result<f64> {
    let ok_chars = raw
        .chars()
        .all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'));
    let value = raw.parse::<f64>().ok().filter(|v| ok_chars && v.is_finite());
    value.ok_or_else(|| schema(path, row, format!("{field} `{raw}` is not a finite number")))
}

fn records(path: &Path, rdr: &mut csv::Reader<File>, width: usize) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line() as usize);
            schema(path, row, e.to_string())
        })?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != width {
            return Err(schema(path, row, format!("expected {width} fields, found {}", rec.len())));
        }
        out.push((row, rec));
    }
    Ok(out)
}

/// Loads a `date,adj_close` file.
pub fn load_prices(path: impl AsRef<Path>) -> Result<PriceHistory> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &PRICE_HEADER)?;
    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut adj_close = Vec::new();
    for (row, rec) in records(path, &mut rdr, 2)? {
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .map_err(|_| schema(path, row, format!("date `{}` is not YYYY-MM-DD", &rec[0])))?;
        let price = parse_number(path, row, "adj_close", &rec[1])?;
        if price <= 0.0 {
            return Err(schema(path, row, format!("adj_close {price} must be positive")));
        }
        if dates.last().is_some_and(|&prev| date <= prev) {
            return Err(Error::UnsortedDates {
                path: path.to_path_buf(),
                row,
            });
        }
        dates.push(date);
        adj_close.push(price);
    }
    if dates.is_empty() {
        return Err(schema(path, 2, "file contains no price rows"));
    }
    Ok(PriceHistory { dates, adj_close })
}

/// `P_t / P_{t-1} - 1` or `ln(P_t / P_{t-1})`, one per consecutive pair.
pub fn to_returns(h: &PriceHistory, convention: Convention, dt: f64) -> Result<ReturnSeries<f64>> {
    if h.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: h.len(),
        });
    }
    let values = h
        .adj_close
        .windows(2)
        .map(|w| match convention {
            Convention::Arithmetic => w[1] / w[0] - 1.0,
            Convention::Log => (w[1] / w[0]).ln(),
        })
        .collect();
    ReturnSeries::new(values, convention, dt)
}

/// Loads an `expiry_steps,strike,price` chain for an underlying at `spot`.
pub fn load_chain(path: impl AsRef<Path>, spot: f64) -> Result<QuoteSet<f64>> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &CHAIN_HEADER)?;
    let mut seen = HashSet::new();
    let mut quotes = Vec::new();
    for (row, rec) in records(path, &mut rdr, 3)? {
        let steps: usize = rec[0]
            .parse()
            .ok()
            .filter(|&s| s > 0)
            .ok_or_else(|| schema(path, row, format!("expiry_steps `{}` is not a positive integer", &rec[0])))?;
        let strike = parse_number(path, row, "strike", &rec[1])?;
        let price = parse_number(path, row, "price", &rec[2])?;
        if strike <= 0.0 {
            return Err(schema(path, row, format!("strike {strike} must be positive")));
        }
        if price <= 0.0 {
            return Err(schema(path, row, format!("price {price} must be positive")));
        }
        if !seen.insert((steps, strike.to_bits())) {
            return Err(Error::DuplicateQuote {
                path: path.to_path_buf(),
                row,
                steps,
                strike,
            });
        }
        quotes.push(Quote { steps, strike, price });
    }
    if quotes.is_empty() {
        return Err(Error::EmptyChain {
            path: path.to_path_buf(),
        });
    }
    QuoteSet::new(spot, quotes)
}

/// Path of the dense-matrix companion of a long-format surface file:
/// `dir/name.csv` becomes `dir/name_matrix.csv`.
pub fn matrix_path(long_path: &Path) -> PathBuf {
    let stem = long_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = long_path
        .extension()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".to_owned());
    long_path.with_file_name(format!("{stem}_matrix.{ext}"))
}

fn bandwidth_comment(bw: &Bandwidth<f64>) -> String {
    format!("# bandwidth_t={}\n# bandwidth_m={}\n", bw.t, bw.m)
}

/// Writes the long-format surface and its dense companion. Floats use the
/// shortest representation that parses back to the same bits.
pub fn write_surface(grid: &SurfaceGrid<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut long = bandwidth_comment(&grid.bandwidth);
    long.push_str(&SURFACE_HEADER.join(","));
    long.push('\n');
    for (ti, t) in grid.t_axis.iter().enumerate() {
        for (mi, m) in grid.m_axis.iter().enumerate() {
            long.push_str(&format!("{t},{m},{}\n", grid.get(ti, mi)));
        }
    }
    write_file(path, &long)?;

    let mut dense = bandwidth_comment(&grid.bandwidth);
    dense.push_str("T\\M");
    for m in &grid.m_axis {
        dense.push_str(&format!(",{m}"));
    }
    dense.push('\n');
    for (ti, t) in grid.t_axis.iter().enumerate() {
        dense.push_str(&t.to_string());
        for mi in 0..grid.m_axis.len() {
            dense.push_str(&format!(",{}", grid.get(ti, mi)));
        }
        dense.push('\n');
    }
    write_file(&matrix_path(path), &dense)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| io_err(path, e))
}

fn read_bandwidth(path: &Path) -> Result<Bandwidth<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut t = None;
    let mut m = None;
    for (i, line) in text.lines().enumerate() {
        let Some(rest) = line.strip_prefix('#') else { continue };
        if let Some((key, value)) = rest.trim().split_once('=') {
            let v = parse_number(path, i + 1, key, value.trim())?;
            match key.trim() {
                "bandwidth_t" => t = Some(v),
                "bandwidth_m" => m = Some(v),
                _ => {}
            }
        }
    }
    match (t, m) {
        (Some(t), Some(m)) => Ok(Bandwidth { t, m }),
        _ => Err(schema(path, 1, "missing bandwidth comment lines")),
    }
}

/// Reads a long-format surface written by [`write_surface`]. Rows must form
/// a complete grid in row-major order.
pub fn read_surface(path: impl AsRef<Path>) -> Result<SurfaceGrid<f64>> {
    let path = path.as_ref();
    let bandwidth = read_bandwidth(path)?;
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &SURFACE_HEADER)?;
    let mut t_axis: Vec<f64> = Vec::new();
    let mut m_axis: Vec<f64> = Vec::new();
    let mut values = Vec::new();
    let mut rows = Vec::new();
    for (row, rec) in records(path, &mut rdr, 3)? {
        let t = parse_number(path, row, "T", &rec[0])?;
        let m = parse_number(path, row, "M", &rec[1])?;
        let v = parse_number(path, row, "value", &rec[2])?;
        if t_axis.last() != Some(&t) {
            t_axis.push(t);
        }
        if t_axis.len() == 1 {
            m_axis.push(m);
        }
        rows.push((row, t, m));
        values.push(v);
    }
    for (k, &(row, t, m)) in rows.iter().enumerate() {
        let (ti, mi) = (k / m_axis.len().max(1), k % m_axis.len().max(1));
        if t_axis.get(ti) != Some(&t) || m_axis.get(mi) != Some(&m) {
            return Err(schema(path, row, "rows do not form a row-major (T, M) grid"));
        }
    }
    SurfaceGrid::new(t_axis, m_axis, values, bandwidth).map_err(|e| schema(path, 0, e.to_string()))
}

/// Reads the dense-matrix companion written by [`write_surface`].
pub fn read_surface_matrix(path: impl AsRef<Path>) -> Result<SurfaceGrid<f64>> {
    let path = path.as_ref();
    let bandwidth = read_bandwidth(path)?;
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| schema(path, 1, e.to_string()))?.clone();
    if headers.get(0) != Some("T\\M") {
        return Err(schema(path, 1, "dense matrix header must start with `T\\M`"));
    }
    let m_axis = headers
        .iter()
        .skip(1)
        .map(|raw| parse_number(path, 1, "M", raw))
        .collect::<Result<Vec<_>>>()?;
    let mut t_axis = Vec::new();
    let mut values = Vec::new();
    for (row, rec) in records(path, &mut rdr, m_axis.len() + 1)? {
        t_axis.push(parse_number(path, row, "T", &rec[0])?);
        for raw in rec.iter().skip(1) {
            values.push(parse_number(path, row, "value", raw)?);
        }
    }
    SurfaceGrid::new(t_axis, m_axis, values, bandwidth).map_err(|e| schema(path, 0, e.to_string()))
}

/// One cell of a theoretical price grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceCell {
    pub steps: usize,
    pub strike: f64,
    pub moneyness: f64,
    pub price: std::result::Result<f64, String>,
}

/// Writes `T,K,M,price,status` rows; failed cells leave `price` empty and
/// carry the error in `status`.
pub fn write_price_grid(cells: &[PriceCell], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(["T", "K", "M", "price", "status"])
        .map_err(|e| io_err(path, e))?;
    for c in cells {
        let (price, status) = match &c.price {
            Ok(p) => (p.to_string(), "ok".to_owned()),
            Err(e) => (String::new(), e.clone()),
        };
        w.write_record([c.steps.to_string(), c.strike.to_string(), c.moneyness.to_string(), price, status])
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}
