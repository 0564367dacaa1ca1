//! CSV result tables.
//!
//! One row per sweep point, receiver and instant, holding UE-averaged terms.
//! Floats are written as `{:.9e}` (ten significant digits), so a table read
//! back and written again is byte-identical.

use std::io::{Read, Write};

use irsim_core::se::TERM_NAMES;
use irsim_core::{ReceiverKind, Terms};

use crate::RunError;

/// Columns after the axis columns.
pub const FIXED_COLUMNS: [&str; 18] = [
    "receiver", "n", "DS", "BU", "CA", "MUI", "PC", "DAC", "TRF", "RRF", "ADC", "NS", "sinr", "se", "se_stderr",
    "mui_closed_form", "mui_stderr", "seed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    /// Axis values, in header order.
    pub axes: Vec<String>,
    pub receiver: ReceiverKind,
    pub n: usize,
    pub terms: Terms,
    pub sinr: f64,
    pub se: f64,
    pub se_stderr: f64,
    /// Analytic MUI averaged over UEs; MRC rows only.
    pub mui_closed_form: Option<f64>,
    pub mui_stderr: f64,
    pub seed: u64,
}

fn num(x: f64) -> String {
    format!("{x:.9e}")
}

fn csv_err(e: impl std::fmt::Display) -> RunError {
    RunError::Csv(e.to_string())
}

/// Writes the header and rows with LF line endings.
pub fn write_csv<W: Write>(out: W, axes: &[String], rows: &[ResultRow]) -> Result<(), RunError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let header: Vec<&str> = axes.iter().map(String::as_str).chain(FIXED_COLUMNS).collect();
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        if r.axes.len() != axes.len() {
            return Err(RunError::Csv(format!("row has {} axis values, header has {}", r.axes.len(), axes.len())));
        }
        let mut rec: Vec<String> = r.axes.clone();
        rec.push(r.receiver.name().to_string());
        rec.push(r.n.to_string());
        rec.extend(r.terms.to_array().iter().map(|&x| num(x)));
        rec.push(num(r.sinr));
        rec.push(num(r.se));
        rec.push(num(r.se_stderr));
        rec.push(r.mui_closed_form.map(num).unwrap_or_default());
        rec.push(num(r.mui_stderr));
        rec.push(r.seed.to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)?;
    Ok(())
}

/// Reads a table written by [`write_csv`]. Returns the axis names and rows.
pub fn read_csv<R: Read>(input: R) -> Result<(Vec<String>, Vec<ResultRow>), RunError> {
    let mut rd = csv::ReaderBuilder::new().from_reader(input);
    let header: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let n_axes = header
        .len()
        .checked_sub(FIXED_COLUMNS.len())
        .filter(|&a| header[a..] == FIXED_COLUMNS)
        .ok_or_else(|| RunError::Csv("unexpected header".into()))?;
    debug_assert_eq!(&FIXED_COLUMNS[2..12], &TERM_NAMES);

    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let f = |i: usize| -> Result<f64, RunError> {
            rec[n_axes + i].parse().map_err(|_| RunError::Csv(format!("bad number `{}`", &rec[n_axes + i])))
        };
        let receiver = ReceiverKind::parse(&rec[n_axes])
            .ok_or_else(|| RunError::Csv(format!("unknown receiver `{}`", &rec[n_axes])))?;
        let n = rec[n_axes + 1].parse().map_err(csv_err)?;
        let mut t = [0.0; 10];
        for (i, x) in t.iter_mut().enumerate() {
            *x = f(2 + i)?;
        }
        let mui_closed_form = if rec[n_axes + 15].is_empty() { None } else { Some(f(15)?) };
        rows.push(ResultRow {
            axes: rec.iter().take(n_axes).map(str::to_string).collect(),
            receiver,
            n,
            terms: Terms::from_array(t),
            sinr: f(12)?,
            se: f(13)?,
            se_stderr: f(14)?,
            mui_closed_form,
            mui_stderr: f(16)?,
            seed: rec[n_axes + 17].parse().map_err(csv_err)?,
        });
    }
    Ok((header[..n_axes].to_vec(), rows))
}
