//! Matrix file formats.
//!
//! CSV: first line holds the dimension `k`, followed by `k` lines of `k`
//! comma-separated decimals.
//!
//! Binary: an 8-byte little-endian `u64` dimension `k`, then `k * k`
//! little-endian IEEE-754 doubles in row-major order.

use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use super::DenseMatrix;
use crate::error::{Error, Result};

pub fn write_csv<W: Write>(m: &DenseMatrix, mut w: W) -> Result<()> {
    writeln!(w, "{}", m.dim())?;
    for i in 0..m.dim() {
        let line: Vec<String> = m.row(i).iter().map(|x| format!("{x:?}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<DenseMatrix> {
    let mut lines = r.lines().filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let header = lines.next().ok_or_else(|| Error::Parse("empty matrix CSV".into()))??;
    let k: usize = header
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad dimension header {header:?}")))?;
    let mut data = Vec::with_capacity(k * k);
    for i in 0..k {
        let line = lines.next().ok_or_else(|| Error::Parse(format!("missing row {i}")))??;
        let before = data.len();
        for tok in line.split(',') {
            let x: f64 = tok
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad number {tok:?} in row {i}")))?;
            data.push(x);
        }
        if data.len() - before != k {
            return Err(Error::Parse(format!("row {i} has {} entries, expected {k}", data.len() - before)));
        }
    }
    if lines.next().is_some() {
        return Err(Error::Parse(format!("more than {k} rows")));
    }
    DenseMatrix::from_row_major(k, data)
}

pub fn to_bytes(m: &DenseMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 8 * m.as_slice().len());
    out.extend_from_slice(&(m.dim() as u64).to_le_bytes());
    for x in m.as_slice() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<DenseMatrix> {
    let (head, body) = bytes
        .split_first_chunk::<8>()
        .ok_or_else(|| Error::Parse("binary matrix shorter than its header".into()))?;
    let k = u64::from_le_bytes(*head) as usize;
    let expected = k.checked_mul(k).and_then(|n| n.checked_mul(8));
    if expected != Some(body.len()) {
        return Err(Error::Parse(format!("binary matrix of dimension {k} has {} payload bytes", body.len())));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    DenseMatrix::from_row_major(k, data)
}

/// Loads by extension: `.csv` as CSV, anything else as binary.
pub fn load(path: &Path) -> Result<DenseMatrix> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_csv(std::io::BufReader::new(fs::File::open(path)?))
    } else {
        from_bytes(&fs::read(path)?)
    }
}

pub fn save(m: &DenseMatrix, path: &Path) -> Result<()> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let mut f = std::io::BufWriter::new(fs::File::create(path)?);
        write_csv(m, &mut f)?;
        f.flush()?;
        Ok(())
    } else {
        Ok(fs::write(path, to_bytes(m))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_layout() {
        let m = DenseMatrix::from_rows(&[vec![1.0, -0.5], vec![0.1, 3.0]]).unwrap();
        let mut buf = Vec::new();
        write_csv(&m, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "2\n1.0,-0.5\n0.1,3.0\n");
        assert_eq!(read_csv(&buf[..]).unwrap(), m);
    }

    #[test]
    fn csv_errors() {
        assert!(read_csv(&b""[..]).is_err());
        assert!(read_csv(&b"2\n1,2\n"[..]).is_err());
        assert!(read_csv(&b"2\n1,2\n3\n"[..]).is_err());
        assert!(read_csv(&b"1\nx\n"[..]).is_err());
        assert!(read_csv(&b"1\n1\n2\n"[..]).is_err());
    }

    #[test]
    fn binary_layout() {
        let m = DenseMatrix::from_rows(&[vec![1.0]]).unwrap();
        let b = to_bytes(&m);
        assert_eq!(&b[..8], &1u64.to_le_bytes());
        assert_eq!(&b[8..], &1.0f64.to_le_bytes());
        assert!(from_bytes(&b[..7]).is_err());
        assert!(from_bytes(&b[..12]).is_err());
    }

    proptest! {
        #[test]
        fn round_trips_are_exact(k in 0usize..6, seed in any::<u64>()) {
            let data: Vec<f64> = (0..k * k).map(|i| ((i as u64 ^ seed) as f64).sin() * 1e3).collect();
            let m = DenseMatrix::from_row_major(k, data).unwrap();
            prop_assert_eq!(from_bytes(&to_bytes(&m)).unwrap(), m.clone());
            let mut buf = Vec::new();
            write_csv(&m, &mut buf).unwrap();
            prop_assert_eq!(read_csv(&buf[..]).unwrap(), m);
        }
    }
}
