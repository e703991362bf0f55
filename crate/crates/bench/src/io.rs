//! Sample matrices as CSV: a header `x0,x1,…` and one row per sample.

use std::io::{Read, Write};

use gbnlearn::SampleMatrix;

pub fn write_samples<W: Write>(w: W, data: &SampleMatrix) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record((0..data.n()).map(|j| format!("x{j}")))?;
    for r in 0..data.m() {
        wtr.write_record((0..data.n()).map(|c| format!("{:?}", data.get(r, c))))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a sample CSV; the header is skipped, every row must have the same width.
pub fn read_samples<R: Read>(r: R) -> Result<SampleMatrix, String> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let width = rdr.headers().map_err(|e| e.to_string())?.len();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let row = rec
            .iter()
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("line {}: `{v}` is not a number", i + 2))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != width {
            return Err(format!("line {}: expected {width} values, found {}", i + 2, row.len()));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err("no sample rows".into());
    }
    SampleMatrix::from_rows(&rows).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let data = SampleMatrix::from_rows(&[vec![0.1, -2.5e-17], vec![1.0 / 3.0, 7.0]]).unwrap();
        let mut buf = Vec::new();
        write_samples(&mut buf, &data).unwrap();
        assert!(buf.starts_with(b"x0,x1\n"));
        assert_eq!(read_samples(buf.as_slice()).unwrap(), data);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_samples("x0,x1\n1,abc\n".as_bytes()).is_err());
        assert!(read_samples("x0,x1\n".as_bytes()).is_err());
        assert!(read_samples("x0\nNaN\n".as_bytes()).is_err());
    }
}
