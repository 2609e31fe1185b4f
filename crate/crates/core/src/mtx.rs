//! Matrix Market reader and writer for dense complex matrices.
//!
//! Writing always produces `array complex general` with entries in
//! column-major order as `real imag` pairs, printed with shortest
//! round-trip formatting. Reading accepts `array` and `coordinate` formats
//! with `real`, `integer` or `complex` fields and `general`, `symmetric`,
//! `skew-symmetric` or `hermitian` symmetry.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Layout {
    Array,
    Coordinate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Field {
    Real,
    Complex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
    Hermitian,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::MatrixMarket(msg.into())
}

pub fn to_string<T: Real>(m: &ComplexMatrix<T>, comment: Option<&str>) -> String {
    let mut out = String::from("%%MatrixMarket matrix array complex general\n");
    if let Some(c) = comment {
        for line in c.lines() {
            out.push_str("% ");
            out.push_str(line);
            out.push('\n');
        }
    }
    out.push_str(&format!("{} {}\n", m.rows(), m.cols()));
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            let z = m[(i, j)];
            out.push_str(&format!("{} {}\n", z.re, z.im));
        }
    }
    out
}

pub fn write<T: Real>(path: impl AsRef<Path>, m: &ComplexMatrix<T>, comment: Option<&str>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(to_string(m, comment).as_bytes())?;
    Ok(())
}

pub fn read<T: Real>(path: impl AsRef<Path>) -> Result<ComplexMatrix<T>> {
    parse(&fs::read_to_string(path)?)
}

fn parse_num<T: Real>(tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| bad(format!("missing {what}")))?;
    tok.parse::<T>().map_err(|_| bad(format!("cannot parse {what} `{tok}`")))
}

fn parse_index(tok: Option<&str>, what: &str, bound: usize) -> Result<usize> {
    let tok = tok.ok_or_else(|| bad(format!("missing {what}")))?;
    let v: usize = tok.parse().map_err(|_| bad(format!("cannot parse {what} `{tok}`")))?;
    if v == 0 || v > bound {
        return Err(bad(format!("{what} {v} out of range 1..={bound}")));
    }
    Ok(v - 1)
}

pub fn parse<T: Real>(text: &str) -> Result<ComplexMatrix<T>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty input"))?;
    let toks: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if toks.len() != 5 || toks[0] != "%%matrixmarket" || toks[1] != "matrix" {
        return Err(bad(format!("unsupported header `{header}`")));
    }
    let layout = match toks[2].as_str() {
        "array" => Layout::Array,
        "coordinate" => Layout::Coordinate,
        other => return Err(bad(format!("unsupported format `{other}`"))),
    };
    let field = match toks[3].as_str() {
        "real" | "integer" | "double" => Field::Real,
        "complex" => Field::Complex,
        other => return Err(bad(format!("unsupported field `{other}`"))),
    };
    let symmetry = match toks[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        "hermitian" => Symmetry::Hermitian,
        other => return Err(bad(format!("unsupported symmetry `{other}`"))),
    };

    let mut body = lines.map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('%'));
    let size = body.next().ok_or_else(|| bad("missing size line"))?;
    let mut st = size.split_whitespace();
    let rows: usize = st.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad row count"))?;
    let cols: usize = st.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad column count"))?;
    if symmetry != Symmetry::General && rows != cols {
        return Err(bad("symmetric storage needs a square matrix"));
    }
    let mut m = ComplexMatrix::<T>::zeros(rows, cols);

    let read_value = |it: &mut std::str::SplitWhitespace<'_>| -> Result<Complex<T>> {
        let re = parse_num::<T>(it.next(), "real part")?;
        let im = match field {
            Field::Real => T::zero(),
            Field::Complex => parse_num::<T>(it.next(), "imaginary part")?,
        };
        Ok(Complex::new(re, im))
    };
    let mirror = |m: &mut ComplexMatrix<T>, i: usize, j: usize, z: Complex<T>| {
        m[(i, j)] = z;
        if i != j {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => m[(j, i)] = z,
                Symmetry::SkewSymmetric => m[(j, i)] = -z,
                Symmetry::Hermitian => m[(j, i)] = z.conj(),
            }
        }
    };

    match layout {
        Layout::Array => {
            // Column-major; symmetric variants store the lower triangle only.
            let mut positions = Vec::new();
            for j in 0..cols {
                let start = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::SkewSymmetric => j + 1,
                    _ => j,
                };
                for i in start..rows {
                    positions.push((i, j));
                }
            }
            for &(i, j) in &positions {
                let line = body.next().ok_or_else(|| bad(format!("expected {} entries", positions.len())))?;
                let mut it = line.split_whitespace();
                let z = read_value(&mut it)?;
                mirror(&mut m, i, j, z);
            }
        }
        Layout::Coordinate => {
            let nnz: usize = st.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad entry count"))?;
            for _ in 0..nnz {
                let line = body.next().ok_or_else(|| bad(format!("expected {nnz} entries")))?;
                let mut it = line.split_whitespace();
                let i = parse_index(it.next(), "row index", rows)?;
                let j = parse_index(it.next(), "column index", cols)?;
                let z = read_value(&mut it)?;
                mirror(&mut m, i, j, z);
            }
        }
    }
    if m.as_slice().is_empty() {
        return Err(bad("empty matrix"));
    }
    ComplexMatrix::new(rows, cols, m.as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn coordinate_hermitian() {
        let text = "%%MatrixMarket matrix coordinate complex hermitian\n% c\n2 2 2\n1 1 2.0 0.0\n2 1 1.0 -1.5\n";
        let m: ComplexMatrix<f64> = parse(text).unwrap();
        assert_eq!(m[(1, 0)], Complex::new(1.0, -1.5));
        assert_eq!(m[(0, 1)], Complex::new(1.0, 1.5));
        assert_eq!(m[(1, 1)], Complex::new(0.0, 0.0));
    }

    #[test]
    fn array_real_general() {
        let text = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n";
        let m: ComplexMatrix<f64> = parse(text).unwrap();
        assert_eq!(m[(0, 1)].re, 3.0);
        assert_eq!(m[(1, 0)].re, 2.0);
    }

    #[test]
    fn malformed_inputs() {
        assert!(parse::<f64>("").is_err());
        assert!(parse::<f64>("%%MatrixMarket matrix array complex general\n2 2\n1 0\n").is_err());
        assert!(parse::<f64>("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n").is_err());
        assert!(parse::<f64>("%%MatrixMarket vector array real general\n1 1\n1\n").is_err());
        assert!(parse::<f64>("%%MatrixMarket matrix array real general\n0 0\n").is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_is_exact(rows in 1usize..5, cols in 1usize..5, seed in proptest::collection::vec(-1e6f64..1e6, 50)) {
            let m = ComplexMatrix::from_fn(rows, cols, |i, j| {
                let k = 2 * (i * cols + j);
                Complex::new(seed[k] / 3.0, seed[k + 1] * 1e-7)
            });
            let back: ComplexMatrix<f64> = parse(&to_string(&m, Some("roundtrip"))).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
