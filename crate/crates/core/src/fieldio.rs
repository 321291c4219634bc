//! Portable on-disk field format.
//!
//! One ASCII header line `FIELD2D n_x n_y x_min y_min h_x h_y dtype` with
//! `dtype` either `real64` or `complex128`, a newline, then the raw values as
//! little-endian 64-bit floats in storage order (complex interleaved re/im).
//! Round trips are bit-exact: header floats use shortest round-trip decimal
//! formatting and the payload is copied verbatim.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField2D, Grid2D, ScalarField2D};

const MAGIC: &str = "FIELD2D";

/// Either payload kind a field file may hold.
pub enum FieldData {
    Real(ScalarField2D),
    Complex(ComplexField2D),
}

pub fn write_real(path: &Path, field: &ScalarField2D) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, &field.grid, "real64")?;
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_complex(path: &Path, field: &ComplexField2D) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, &field.grid, "complex128")?;
    for v in &field.values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read(path: &Path) -> Result<FieldData> {
    let mut r = BufReader::new(File::open(path)?);
    let header = read_header_line(&mut r)?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 8 || parts[0] != MAGIC {
        return Err(Error::Config(format!("bad field header in {}", path.display())));
    }
    let bad = |what: &str| Error::Config(format!("bad {what} in field header of {}", path.display()));
    let n_x: usize = parts[1].parse().map_err(|_| bad("n_x"))?;
    let n_y: usize = parts[2].parse().map_err(|_| bad("n_y"))?;
    let x_min: f64 = parts[3].parse().map_err(|_| bad("x_min"))?;
    let y_min: f64 = parts[4].parse().map_err(|_| bad("y_min"))?;
    let h_x: f64 = parts[5].parse().map_err(|_| bad("h_x"))?;
    let h_y: f64 = parts[6].parse().map_err(|_| bad("h_y"))?;
    if n_x < 3 || n_y < 3 {
        return Err(bad("node count"));
    }
    let grid = Grid2D::new(
        x_min,
        x_min + (n_x - 1) as f64 * h_x,
        h_x,
        y_min,
        y_min + (n_y - 1) as f64 * h_y,
        h_y,
    )?;
    let n = n_x * n_y;
    match parts[7] {
        "real64" => {
            let raw = read_exact_f64(&mut r, n)?;
            Ok(FieldData::Real(ScalarField2D { grid, values: raw }))
        }
        "complex128" => {
            let raw = read_exact_f64(&mut r, 2 * n)?;
            let values = raw
                .chunks_exact(2)
                .map(|p| Complex64::new(p[0], p[1]))
                .collect();
            Ok(FieldData::Complex(ComplexField2D { grid, values }))
        }
        other => Err(Error::Config(format!("unknown dtype {other:?} in {}", path.display()))),
    }
}

pub fn read_real(path: &Path) -> Result<ScalarField2D> {
    match read(path)? {
        FieldData::Real(f) => Ok(f),
        FieldData::Complex(_) => Err(Error::Config(format!(
            "{} holds complex data, expected real",
            path.display()
        ))),
    }
}

pub fn read_complex(path: &Path) -> Result<ComplexField2D> {
    match read(path)? {
        FieldData::Complex(f) => Ok(f),
        FieldData::Real(_) => Err(Error::Config(format!(
            "{} holds real data, expected complex",
            path.display()
        ))),
    }
}

fn write_header(w: &mut impl Write, g: &Grid2D, dtype: &str) -> Result<()> {
    writeln!(
        w,
        "{MAGIC} {} {} {} {} {} {} {dtype}",
        g.n_x, g.n_y, g.x_min, g.y_min, g.h_x, g.h_y
    )?;
    Ok(())
}

fn read_header_line(r: &mut impl Read) -> Result<String> {
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte)?;
        if byte[0] == b'\n' {
            break;
        }
        if line.len() > 256 {
            return Err(Error::Config("field header line too long".into()));
        }
        line.push(byte[0]);
    }
    String::from_utf8(line).map_err(|_| Error::Config("field header is not UTF-8".into()))
}

fn read_exact_f64(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid2D {
        Grid2D::new(-900.0, 700.0, 100.0, -40.0, 40.0, 10.0).unwrap()
    }

    #[test]
    fn real_round_trip_is_bit_exact() {
        let f = ScalarField2D::from_fn(grid(), |x, y| (x * 0.013).sin() * (y * 0.37).cos() + 1e-17);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.field2d");
        write_real(&path, &f).unwrap();
        let back = read_real(&path).unwrap();
        assert_eq!(back.grid, f.grid);
        assert_eq!(
            back.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            f.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn complex_round_trip_is_bit_exact() {
        let mut f = ComplexField2D::zeros(grid());
        for (i, v) in f.values.iter_mut().enumerate() {
            *v = Complex64::new((i as f64).sqrt(), -(i as f64) * 1e-3);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("psi.field2d");
        write_complex(&path, &f).unwrap();
        let back = read_complex(&path).unwrap();
        assert_eq!(back.grid, f.grid);
        for (a, b) in back.values.iter().zip(&f.values) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn dtype_mismatch_is_rejected() {
        let f = ScalarField2D::zeros(grid());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.field2d");
        write_real(&path, &f).unwrap();
        assert!(read_complex(&path).is_err());
    }

    #[test]
    fn truncated_payload_is_an_error() {
        let f = ScalarField2D::zeros(grid());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.field2d");
        write_real(&path, &f).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        assert!(read_real(&path).is_err());
    }

    #[test]
    fn header_is_single_ascii_line() {
        let f = ScalarField2D::zeros(grid());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.field2d");
        write_real(&path, &f).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let nl = bytes.iter().position(|&b| b == b'\n').unwrap();
        let header = std::str::from_utf8(&bytes[..nl]).unwrap();
        assert_eq!(header, "FIELD2D 17 9 -900 -40 100 10 real64");
        assert_eq!(bytes.len(), nl + 1 + 17 * 9 * 8);
    }
}
