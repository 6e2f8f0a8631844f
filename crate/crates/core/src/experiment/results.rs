use std::path::Path;

use super::SweepRow;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 14] = [
    "K",
    "R",
    "n",
    "M",
    "theta",
    "q",
    "B",
    "heterogeneous",
    "seed",
    "gen_mean",
    "gen_std",
    "emp_mean",
    "pop_mean",
    "bound_t5",
];

/// Formats a real with 9 significant digits, `%.9g` style.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-5..9).contains(&exp) {
        format!("{}e{exp}", trim(mantissa))
    } else {
        trim(&format!("{:.*}", (8 - exp) as usize, v))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}

pub fn write_csv_to<W: std::io::Write>(rows: &[SweepRow], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.clients.to_string(),
            r.rounds.to_string(),
            r.n.to_string(),
            r.trials.to_string(),
            format_sig9(r.theta),
            format_sig9(r.q),
            format_sig9(r.radius),
            r.heterogeneous.to_string(),
            r.master_seed.to_string(),
            format_sig9(r.gen_mean),
            format_sig9(r.gen_std),
            format_sig9(r.emp_mean),
            format_sig9(r.pop_mean),
            format_sig9(r.bound_t5),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Format(format!("csv flush: {e}")))
}

pub fn write_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(rows, std::io::BufWriter::new(file))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> Result<T> {
    rec[i]
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("line {line}: bad value `{}` for column {}", &rec[i], CSV_HEADER[i])))
}

pub fn read_csv_from<R: std::io::Read>(source: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(source);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Format(format!(
            "unexpected header `{}`, expected `{}`",
            header.iter().collect::<Vec<_>>().join(","),
            CSV_HEADER.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i as u64 + 2;
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::Format(format!(
                "line {line}: {} fields, expected {}",
                rec.len(),
                CSV_HEADER.len()
            )));
        }
        rows.push(SweepRow {
            clients: field(&rec, 0, line)?,
            rounds: field(&rec, 1, line)?,
            n: field(&rec, 2, line)?,
            trials: field(&rec, 3, line)?,
            theta: field(&rec, 4, line)?,
            q: field(&rec, 5, line)?,
            radius: field(&rec, 6, line)?,
            heterogeneous: field(&rec, 7, line)?,
            master_seed: field(&rec, 8, line)?,
            gen_mean: field(&rec, 9, line)?,
            gen_std: field(&rec, 10, line)?,
            emp_mean: field(&rec, 11, line)?,
            pop_mean: field(&rec, 12, line)?,
            bound_t5: field(&rec, 13, line)?,
        });
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_from(std::io::BufReader::new(file))
}
