//! Field container and CSV export.
//!
//! The container is a short text header followed by raw little-endian `f64`
//! nodal values in row-major order:
//!
//! ```text
//! NCFIELD 1
//! dim 2
//! counts 65 65
//! spacings 0.015151515151515152 0.015151515151515152
//! data 4225
//! <4225 * 8 bytes>
//! ```
//!
//! Spacings are written with the shortest round-trip representation, so a
//! reloaded grid compares equal to the original.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{Grid, GridError, ScalarField};

const MAGIC: &str = "NCFIELD 1";

#[derive(Debug, Error)]
pub enum FieldIoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed field header: {0}")]
    Format(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub fn write_field<W: Write>(mut out: W, field: &ScalarField) -> Result<(), FieldIoError> {
    let grid = field.grid();
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "dim {}", grid.dim())?;
    let counts: Vec<String> = grid.counts().iter().map(|n| n.to_string()).collect();
    writeln!(out, "counts {}", counts.join(" "))?;
    let spacings: Vec<String> = grid.spacings().iter().map(|h| format!("{h:?}")).collect();
    writeln!(out, "spacings {}", spacings.join(" "))?;
    writeln!(out, "data {}", field.len())?;
    let mut bytes = Vec::with_capacity(8 * field.len());
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&bytes)?;
    Ok(())
}

fn header_line<R: BufRead>(input: &mut R, key: &str) -> Result<String, FieldIoError> {
    let mut line = String::new();
    input.read_line(&mut line)?;
    let line = line.trim_end_matches(['\n', '\r']);
    match line.strip_prefix(key) {
        Some(rest) if rest.is_empty() || rest.starts_with(' ') => Ok(rest.trim().to_string()),
        _ => Err(FieldIoError::Format(format!(
            "expected `{key}` line, found `{line}`"
        ))),
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, FieldIoError> {
    text.split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| FieldIoError::Format(format!("bad {what} entry `{t}`")))
        })
        .collect()
}

pub fn read_field<R: Read>(input: R) -> Result<ScalarField, FieldIoError> {
    let mut input = BufReader::new(input);
    header_line(&mut input, MAGIC)?;
    let dim: usize = header_line(&mut input, "dim")?
        .parse()
        .map_err(|_| FieldIoError::Format("bad dim".into()))?;
    let counts: Vec<usize> = parse_list(&header_line(&mut input, "counts")?, "count")?;
    let spacings: Vec<f64> = parse_list(&header_line(&mut input, "spacings")?, "spacing")?;
    if counts.len() != dim || spacings.len() != dim {
        return Err(FieldIoError::Format(format!(
            "dim {dim} disagrees with {} counts / {} spacings",
            counts.len(),
            spacings.len()
        )));
    }
    let grid = Grid::new(&counts, &spacings)?;
    let len: usize = header_line(&mut input, "data")?
        .parse()
        .map_err(|_| FieldIoError::Format("bad data length".into()))?;
    if len != grid.len() {
        return Err(GridError::LengthMismatch {
            expected: grid.len(),
            got: len,
        }
        .into());
    }
    let mut bytes = vec![0u8; 8 * len];
    input.read_exact(&mut bytes)?;
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(ScalarField::new(grid, values)?)
}

pub fn save_field(path: impl AsRef<Path>, field: &ScalarField) -> Result<(), FieldIoError> {
    let file = std::fs::File::create(path)?;
    let mut out = io::BufWriter::new(file);
    write_field(&mut out, field)?;
    out.flush()?;
    Ok(())
}

pub fn load_field(path: impl AsRef<Path>) -> Result<ScalarField, FieldIoError> {
    read_field(std::fs::File::open(path)?)
}

/// One CSV row per node: multi-index, coordinates, value.
pub fn write_field_csv<W: Write>(mut out: W, field: &ScalarField) -> io::Result<()> {
    let grid = field.grid();
    let dim = grid.dim();
    let mut header: Vec<String> = (0..dim).map(|d| format!("i{d}")).collect();
    header.extend((0..dim).map(|d| format!("x{d}")));
    header.push("value".into());
    writeln!(out, "{}", header.join(","))?;
    for (i, v) in field.values().iter().enumerate() {
        let m = grid.multi_index(i);
        let x = grid.coords(i);
        let mut row: Vec<String> = m[..dim].iter().map(|k| k.to_string()).collect();
        row.extend(x[..dim].iter().map(|c| format!("{c:?}")));
        row.push(format!("{v:?}"));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let grid = Grid::from_lengths(&[5, 3], &[1.0, 0.7]).unwrap();
        let f = ScalarField::from_fn(grid, |x| (x[0] * 3.1).sin() * x[1].exp());
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        let back = read_field(buf.as_slice()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn truncated_payload_is_an_error() {
        let grid = Grid::unit(1, 4).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &ScalarField::constant(grid, 1.0)).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(
            read_field(buf.as_slice()),
            Err(FieldIoError::Io(_))
        ));
    }

    #[test]
    fn bad_magic_is_rejected() {
        let err = read_field("FIELD 2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, FieldIoError::Format(_)));
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let grid = Grid::unit(2, 2).unwrap();
        let mut buf = Vec::new();
        write_field_csv(&mut buf, &ScalarField::constant(grid, 0.5)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "i0,i1,x0,x1,value");
        assert_eq!(lines.len(), 5);
        assert!(lines[4].starts_with("1,1,"));
    }
}
