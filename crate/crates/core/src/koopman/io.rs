//! Plain-text model files.
//!
//! ```text
//! windfreq-lifted-model 1
//! kind sdmd
//! alpha 3.125e-1
//! fit_residual 1.5e-4
//! A 5 5
//! <row-major values, one row per line>
//! B 5 2
//! ...
//! ```
//!
//! RBF models carry `kind rbf`, `width <w>` and a `centers <C> 2` block in
//! place of `alpha`. Values use the shortest representation that parses back
//! to the same `f64`, so a write/read round trip is exact.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use super::{LiftedModel, ObservableMap, RbfDictionary};
use crate::error::{Error, Result};

const MAGIC: &str = "windfreq-lifted-model";
const VERSION: u32 = 1;

fn write_matrix<W: Write>(w: &mut W, name: &str, m: &DMatrix<f64>) -> Result<()> {
    writeln!(w, "{name} {} {}", m.nrows(), m.ncols())?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:e}", m[(i, j)])).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn write_model<W: Write>(model: &LiftedModel, mut w: W) -> Result<()> {
    writeln!(w, "{MAGIC} {VERSION}")?;
    writeln!(w, "kind {}", model.map.kind())?;
    match &model.map {
        ObservableMap::Sdmd { alpha } => writeln!(w, "alpha {alpha:e}")?,
        ObservableMap::Rbf(d) => {
            writeln!(w, "width {:e}", d.width)?;
            writeln!(w, "centers {} 2", d.centers.len())?;
            for c in &d.centers {
                writeln!(w, "{:e} {:e}", c[0], c[1])?;
            }
        }
    }
    writeln!(w, "fit_residual {:e}", model.fit_residual)?;
    write_matrix(&mut w, "A", &model.a)?;
    write_matrix(&mut w, "B", &model.b)?;
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn err(&self, reason: impl Into<String>) -> Error {
        Error::ModelFormat { line: self.line, reason: reason.into() }
    }

    fn next(&mut self) -> Result<String> {
        loop {
            self.line += 1;
            match self.inner.next() {
                None => return Err(self.err("unexpected end of file")),
                Some(l) => {
                    let l = l?;
                    let t = l.trim();
                    if !t.is_empty() && !t.starts_with('#') {
                        return Ok(t.to_string());
                    }
                }
            }
        }
    }

    fn keyed(&mut self, key: &str) -> Result<Vec<String>> {
        let l = self.next()?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(key) {
            return Err(self.err(format!("expected `{key}`")));
        }
        Ok(parts.map(str::to_string).collect())
    }

    fn float(&self, s: &str) -> Result<f64> {
        let v: f64 = s.parse().map_err(|_| self.err(format!("not a number: `{s}`")))?;
        if !v.is_finite() {
            return Err(self.err("non-finite value"));
        }
        Ok(v)
    }

    fn size(&self, s: &str) -> Result<usize> {
        s.parse().map_err(|_| self.err(format!("not a size: `{s}`")))
    }

    fn scalar(&mut self, key: &str) -> Result<f64> {
        let v = self.keyed(key)?;
        if v.len() != 1 {
            return Err(self.err(format!("`{key}` takes one value")));
        }
        self.float(&v[0])
    }

    fn rows(&mut self, key: &str, ncols_expected: Option<usize>) -> Result<DMatrix<f64>> {
        let shape = self.keyed(key)?;
        if shape.len() != 2 {
            return Err(self.err(format!("`{key}` needs rows and columns")));
        }
        let (r, c) = (self.size(&shape[0])?, self.size(&shape[1])?);
        if ncols_expected.is_some_and(|e| e != c) {
            return Err(self.err(format!("`{key}` has {c} columns, expected {}", ncols_expected.unwrap())));
        }
        let mut m = DMatrix::zeros(r, c);
        for i in 0..r {
            let l = self.next()?;
            let vals: Vec<&str> = l.split_whitespace().collect();
            if vals.len() != c {
                return Err(self.err(format!("row has {} values, expected {c}", vals.len())));
            }
            for (j, v) in vals.iter().enumerate() {
                m[(i, j)] = self.float(v)?;
            }
        }
        Ok(m)
    }
}

pub fn read_model<R: BufRead>(r: R) -> Result<LiftedModel> {
    let mut lines = Lines { inner: r.lines(), line: 0 };
    let header = lines.keyed(MAGIC)?;
    if header != [VERSION.to_string()] {
        return Err(lines.err(format!("unsupported version {header:?}")));
    }
    let kind = lines.keyed("kind")?;
    let map = match kind.first().map(String::as_str) {
        Some("sdmd") => {
            let alpha = lines.scalar("alpha")?;
            ObservableMap::sdmd(alpha).map_err(|e| lines.err(e.to_string()))?
        }
        Some("rbf") => {
            let width = lines.scalar("width")?;
            let c = lines.rows("centers", Some(2))?;
            let centers = (0..c.nrows()).map(|i| [c[(i, 0)], c[(i, 1)]]).collect();
            ObservableMap::Rbf(RbfDictionary::new(centers, width).map_err(|e| lines.err(e.to_string()))?)
        }
        other => return Err(lines.err(format!("unknown model kind {other:?}"))),
    };
    let fit_residual = lines.scalar("fit_residual")?;
    let n = map.dim();
    let a = lines.rows("A", Some(n))?;
    if a.nrows() != n {
        return Err(lines.err(format!("A must be {n} x {n}")));
    }
    let b = lines.rows("B", Some(2))?;
    if b.nrows() != n {
        return Err(lines.err(format!("B must be {n} x 2")));
    }
    Ok(LiftedModel { a, b, map, fit_residual })
}

/// Writes a model to a file path.
pub fn save_model(model: &LiftedModel, path: &std::path::Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_model(model, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Reads a model from a file path.
pub fn load_model(path: &std::path::Path) -> Result<LiftedModel> {
    let f = std::fs::File::open(path)?;
    read_model(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(map: ObservableMap) -> LiftedModel {
        let n = map.dim();
        LiftedModel {
            a: DMatrix::from_fn(n, n, |i, j| 0.1 / (1.0 + i as f64 + 3.0 * j as f64) - 1e-17 * j as f64),
            b: DMatrix::from_fn(n, 2, |i, j| (i as f64 + 0.3).powi(j as i32 + 1) * 1e-7),
            map,
            fit_residual: 1.0 / 3.0,
        }
    }

    #[test]
    fn sdmd_round_trip_exact() {
        let m = sample(ObservableMap::sdmd(0.312_512_3).unwrap());
        let mut buf = Vec::new();
        write_model(&m, &mut buf).unwrap();
        assert_eq!(read_model(&buf[..]).unwrap(), m);
    }

    #[test]
    fn rbf_round_trip_exact() {
        let d = RbfDictionary::uniform(7, (0.7, 1.3), (3.0, 15.0), 3).unwrap();
        let m = sample(ObservableMap::Rbf(d));
        let mut buf = Vec::new();
        write_model(&m, &mut buf).unwrap();
        assert_eq!(read_model(&buf[..]).unwrap(), m);
    }

    #[test]
    fn reports_line_of_error() {
        let m = sample(ObservableMap::sdmd(0.3).unwrap());
        let mut buf = Vec::new();
        write_model(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replacen("A 5 5", "A 5 4", 1);
        match read_model(text.as_bytes()) {
            Err(Error::ModelFormat { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        assert!(read_model(&b"nonsense"[..]).is_err());
    }
}
