use std::io::{Read, Write};

use wavekit::ndarray::Array2;
use wavekit::{Error, Result};

/// Shortest `%g`-style rendering of `v` with `digits` significant digits.
pub fn format_significant(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Header `t0,t1,…` then one row per coefficient, 9 significant digits.
pub fn write_matrix<W: Write>(data: &Array2<f64>, writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record((0..data.ncols()).map(|t| format!("t{t}")))?;
    for row in data.rows() {
        csv.write_record(row.iter().map(|&v| format_significant(v, 9)))?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_matrix<R: Read>(reader: R) -> Result<Array2<f64>> {
    let mut csv = csv::Reader::from_reader(reader);
    let cols = csv.headers()?.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for record in csv.records() {
        let record = record?;
        for field in record.iter() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::MalformedContainer(format!("`{field}` is not a number")))?;
            values.push(v);
        }
        rows += 1;
    }
    Array2::from_shape_vec((rows, cols), values)
        .map_err(|e| Error::MalformedContainer(format!("ragged feature matrix: {e}")))
}
