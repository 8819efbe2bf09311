//! CSV ingestion of monthly predictor files and derived-series construction.
//!
//! A [`ColumnSchema`] maps canonical series names to column expressions. An
//! expression is usually a bare column name, but simple transformations of
//! raw data files are supported:
//!
//! ```text
//! expr := term (('+' | '-') term)*
//! term := func '(' expr ')' | column | '`' quoted column '`'
//! func := log | log1p | lag
//! ```
//!
//! so that, for example, a log dividend-price ratio can be mapped as
//! `log(D12) - log(Index)` and a default yield spread as `BAA - AAA`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::series::{
    excess_return, MonthKey, MonthlySeries, PredictorPanel, ERM, EXRET, RET, RFREE,
};

pub const DEFAULT_PERIOD_COLUMN: &str = "yyyymm";
pub const DEFAULT_MISSING_MARKER: &str = "NaN";

/// How columns of an input file map onto canonical series.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSchema {
    pub period_column: String,
    pub missing_marker: String,
    /// Canonical name → column expression.
    pub columns: IndexMap<String, String>,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        Self {
            period_column: DEFAULT_PERIOD_COLUMN.to_string(),
            missing_marker: DEFAULT_MISSING_MARKER.to_string(),
            columns: IndexMap::new(),
        }
    }
}

impl ColumnSchema {
    pub fn with_column(mut self, name: impl Into<String>, expr: impl Into<String>) -> Self {
        self.columns.insert(name.into(), expr.into());
        self
    }

    /// Schema mapping each listed column onto itself.
    pub fn identity<S: AsRef<str>>(names: &[S]) -> Self {
        names.iter().fold(Self::default(), |s, n| {
            s.with_column(n.as_ref(), n.as_ref())
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Column(String),
    Call(Func, Box<Expr>),
    Sum(Vec<(f64, Expr)>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Log,
    Log1p,
    Lag,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Plus,
    Minus,
    Open,
    Close,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '+' => {
                chars.next();
                tokens.push(Token::Plus);
            }
            '-' => {
                chars.next();
                tokens.push(Token::Minus);
            }
            '(' => {
                chars.next();
                tokens.push(Token::Open);
            }
            ')' => {
                chars.next();
                tokens.push(Token::Close);
            }
            '`' => {
                chars.next();
                let mut name = String::new();
                loop {
                    match chars.next() {
                        Some('`') => break,
                        Some(ch) => name.push(ch),
                        None => {
                            return Err(Error::Parameter(format!(
                                "unterminated quoted column in `{src}`"
                            )))
                        }
                    }
                }
                tokens.push(Token::Ident(name));
            }
            _ => {
                let mut name = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_whitespace() || matches!(ch, '+' | '-' | '(' | ')' | '`') {
                        break;
                    }
                    name.push(ch);
                    chars.next();
                }
                tokens.push(Token::Ident(name));
            }
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    src: &'a str,
}

impl Parser<'_> {
    fn error(&self, what: &str) -> Error {
        Error::Parameter(format!("column expression `{}`: {what}", self.src))
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = Vec::new();
        let mut sign = 1.0;
        if self.tokens.get(self.pos) == Some(&Token::Minus) {
            sign = -1.0;
            self.pos += 1;
        }
        terms.push((sign, self.term()?));
        loop {
            match self.tokens.get(self.pos) {
                Some(Token::Plus) => sign = 1.0,
                Some(Token::Minus) => sign = -1.0,
                _ => break,
            }
            self.pos += 1;
            terms.push((sign, self.term()?));
        }
        if terms.len() == 1 && terms[0].0 == 1.0 {
            Ok(terms.pop().unwrap().1)
        } else {
            Ok(Expr::Sum(terms))
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let name = match self.tokens.get(self.pos) {
            Some(Token::Ident(name)) => name.clone(),
            _ => return Err(self.error("expected a column name or function")),
        };
        self.pos += 1;
        if self.tokens.get(self.pos) != Some(&Token::Open) {
            return Ok(Expr::Column(name));
        }
        let func = match name.as_str() {
            "log" => Func::Log,
            "log1p" => Func::Log1p,
            "lag" => Func::Lag,
            other => return Err(self.error(&format!("unknown function `{other}`"))),
        };
        self.pos += 1;
        let inner = self.expr()?;
        if self.tokens.get(self.pos) != Some(&Token::Close) {
            return Err(self.error("missing `)`"));
        }
        self.pos += 1;
        Ok(Expr::Call(func, Box::new(inner)))
    }
}

fn parse_expr(src: &str) -> Result<Expr> {
    let mut parser = Parser {
        tokens: tokenize(src)?,
        pos: 0,
        src,
    };
    let expr = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(expr)
}

impl Expr {
    fn columns<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Column(c) => out.push(c),
            Expr::Call(_, inner) => inner.columns(out),
            Expr::Sum(terms) => terms.iter().for_each(|(_, t)| t.columns(out)),
        }
    }

    fn eval(&self, table: &IndexMap<String, Vec<f64>>) -> Vec<f64> {
        match self {
            Expr::Column(c) => table[c.as_str()].clone(),
            Expr::Call(func, inner) => {
                let v = inner.eval(table);
                match func {
                    Func::Log => v.iter().map(|x| x.ln()).collect(),
                    Func::Log1p => v.iter().map(|x| x.ln_1p()).collect(),
                    Func::Lag => std::iter::once(f64::NAN)
                        .chain(v[..v.len().saturating_sub(1)].iter().copied())
                        .collect(),
                }
            }
            Expr::Sum(terms) => {
                let mut acc = vec![0.0; table[0].len()];
                for (sign, term) in terms {
                    for (a, x) in acc.iter_mut().zip(term.eval(table)) {
                        *a += sign * x;
                    }
                }
                acc
            }
        }
    }
}

/// Drops trailing missing values; a fully missing column is kept as is.
fn trim_tail(mut values: Vec<f64>) -> Vec<f64> {
    if let Some(last) = values.iter().rposition(|v| !v.is_nan()) {
        values.truncate(last + 1);
    }
    values
}

/// Observed span of a raw column: missing cells at either end are dropped.
fn observed_series(start: MonthKey, values: Vec<f64>) -> Result<MonthlySeries> {
    let values = trim_tail(values);
    match values.iter().position(|v| !v.is_nan()) {
        Some(first) => MonthlySeries::new(start.add_months(first as i64), values[first..].to_vec()),
        None => MonthlySeries::new(start, values),
    }
}

/// Raw numeric columns of a monthly CSV file.
#[derive(Debug, Clone)]
pub struct MonthlyTable {
    pub start: MonthKey,
    pub months: usize,
    pub columns: IndexMap<String, Vec<f64>>,
}

/// Reads the period column and the requested numeric columns of a CSV file.
///
/// Rows must be consecutive calendar months. Data rows are numbered from 1
/// in error messages (the header is row 0).
pub fn read_monthly_table(
    path: &Path,
    period_column: &str,
    wanted: &[&str],
    missing_marker: &str,
) -> Result<MonthlyTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_monthly_table_from(file, period_column, wanted, missing_marker)
}

pub fn read_monthly_table_from<R: std::io::Read>(
    reader: R,
    period_column: &str,
    wanted: &[&str],
    missing_marker: &str,
) -> Result<MonthlyTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let locate = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema {
                column: name.to_string(),
            })
    };
    let period_idx = locate(period_column)?;
    let mut wanted_idx = Vec::with_capacity(wanted.len());
    for &name in wanted {
        if !wanted_idx.iter().any(|(n, _)| *n == name) {
            wanted_idx.push((name, locate(name)?));
        }
    }

    let mut start = None;
    let mut prev: Option<MonthKey> = None;
    let mut columns: IndexMap<String, Vec<f64>> = wanted_idx
        .iter()
        .map(|(n, _)| (n.to_string(), Vec::new()))
        .collect();
    let mut months = 0;
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let raw_period = record.get(period_idx).unwrap_or("");
        let month = raw_period
            .parse::<i64>()
            .map_err(|_| Error::Parse {
                row,
                column: period_column.to_string(),
                value: raw_period.to_string(),
            })
            .and_then(|code| {
                MonthKey::from_yyyymm(code).map_err(|_| Error::Parse {
                    row,
                    column: period_column.to_string(),
                    value: raw_period.to_string(),
                })
            })?;
        if let Some(p) = prev {
            if month <= p {
                return Err(Error::Ingestion {
                    row,
                    message: format!("month {month} does not follow {p}; months must be strictly increasing"),
                });
            }
            if month != p.succ() {
                return Err(Error::Ingestion {
                    row,
                    message: format!("gap between {p} and {month}"),
                });
            }
        } else {
            start = Some(month);
        }
        prev = Some(month);
        for (name, idx) in &wanted_idx {
            let cell = record.get(*idx).unwrap_or("");
            let value = if cell == missing_marker {
                f64::NAN
            } else {
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => v,
                    _ => {
                        return Err(Error::Parse {
                            row,
                            column: name.to_string(),
                            value: cell.to_string(),
                        })
                    }
                }
            };
            columns[*name].push(value);
        }
        months += 1;
    }
    let start = start.ok_or(Error::Ingestion {
        row: 0,
        message: "file has no data rows".to_string(),
    })?;
    Ok(MonthlyTable {
        start,
        months,
        columns,
    })
}

/// Loads every series named in `schema`. Rows outside any later sample window
/// are kept.
pub fn load_panel(path: &Path, schema: &ColumnSchema) -> Result<PredictorPanel> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_panel_from(file, schema)
}

pub fn load_panel_from<R: std::io::Read>(reader: R, schema: &ColumnSchema) -> Result<PredictorPanel> {
    let exprs = schema
        .columns
        .iter()
        .map(|(name, src)| parse_expr(src).map(|e| (name.clone(), e)))
        .collect::<Result<Vec<_>>>()?;
    let mut raw_columns = Vec::new();
    for (_, e) in &exprs {
        e.columns(&mut raw_columns);
    }
    let table = read_monthly_table_from(
        reader,
        &schema.period_column,
        &raw_columns,
        &schema.missing_marker,
    )?;
    let mut panel = PredictorPanel::new();
    for (name, expr) in exprs {
        let values = expr.eval(&table.columns);
        let series = observed_series(table.start, values)
            .map_err(|e| e.context(format!("series `{name}`")))?;
        panel.insert(name, series);
    }
    Ok(panel)
}

/// Adds `EXRET = (RET - RFREE) * scale` and `ERM = EXRET` lagged one month.
///
/// `scale` is 100 for returns in percent. Any `ERM` column read from file is
/// replaced.
pub fn add_excess_return(panel: &mut PredictorPanel, scale: f64) -> Result<()> {
    let ret = panel.require(RET)?;
    let rf = panel.require(RFREE)?;
    let window = ret
        .valid_span()
        .zip(rf.valid_span())
        .and_then(|(a, b)| {
            let first = a.first().max(b.first());
            let last = a.last().min(b.last());
            crate::series::SampleWindow::new(first, last).ok()
        })
        .ok_or_else(|| Error::Alignment("return and risk-free rate do not overlap".into()))?;
    let ret = ret.slice(&window).expect("window inside span");
    let rf = rf.slice(&window).expect("window inside span");
    let exret = excess_return(&ret, &rf)?.scaled(scale);
    panel.insert(ERM, exret.lag(1));
    panel.insert(EXRET, exret);
    Ok(())
}

fn format_value(v: f64, missing_marker: &str) -> String {
    if v.is_nan() {
        missing_marker.to_string()
    } else {
        // Display for f64 prints the shortest string that parses back exactly.
        format!("{v}")
    }
}

/// Writes a panel as a `yyyymm`-indexed CSV over the union of the series spans.
pub fn write_panel_csv(panel: &PredictorPanel, path: &Path, missing_marker: &str) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_panel(panel, BufWriter::new(file), missing_marker)
        .map_err(|e| Error::io(path, e))
}

fn write_panel<W: Write>(panel: &PredictorPanel, mut out: W, missing_marker: &str) -> std::io::Result<()> {
    let names: Vec<&str> = panel.names().collect();
    write!(out, "{DEFAULT_PERIOD_COLUMN}")?;
    for n in &names {
        write!(out, ",{n}")?;
    }
    writeln!(out)?;
    let Some(span) = panel
        .iter()
        .map(|(_, s)| s.span())
        .reduce(|a, b| {
            crate::series::SampleWindow::new(a.first().min(b.first()), a.last().max(b.last()))
                .expect("ordered")
        })
    else {
        return out.flush();
    };
    for month in span.months() {
        write!(out, "{}", month.yyyymm())?;
        for (_, s) in panel.iter() {
            let v = s.index_of(month).map_or(f64::NAN, |i| s.values()[i]);
            write!(out, ",{}", format_value(v, missing_marker))?;
        }
        writeln!(out)?;
    }
    out.flush()
}

/// Writes named columns over consecutive months starting at `start`.
pub fn write_columns<W: Write>(
    mut out: W,
    start: MonthKey,
    columns: &[(&str, &[f64])],
    missing_marker: &str,
) -> std::io::Result<()> {
    write!(out, "{DEFAULT_PERIOD_COLUMN}")?;
    for (name, _) in columns {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    let rows = columns.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    for i in 0..rows {
        write!(out, "{}", start.add_months(i as i64).yyyymm())?;
        for (_, values) in columns {
            let v = values.get(i).copied().unwrap_or(f64::NAN);
            write!(out, ",{}", format_value(v, missing_marker))?;
        }
        writeln!(out)?;
    }
    out.flush()
}
