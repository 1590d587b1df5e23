//! ESRI ASCII grid reader and writer.
//!
//! Files store up-positive elevations with the first data row at the north
//! edge. On load, elevations are negated to z-down, rows are flipped so
//! that row index grows northward, and the file's (easting, northing)
//! lower-left corner becomes the internal (north, east) origin.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{Dem, TerrainError};

pub const DEFAULT_NODATA: f64 = -9999.0;

/// Parses an ESRI ASCII grid.
pub fn read_esri_ascii<R: Read>(reader: R) -> Result<Dem, TerrainError> {
    let mut ncols = None;
    let mut nrows = None;
    let mut xll = None;
    let mut yll = None;
    let mut center = false;
    let mut cellsize = None;
    let mut nodata = None;
    let mut values: Vec<f64> = Vec::new();
    let mut in_header = true;

    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| TerrainError::Io(e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let first = parts.next().unwrap_or("");
        if in_header
            && first
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_alphabetic())
        {
            let key = first.to_ascii_lowercase();
            let val = parts
                .next()
                .ok_or_else(|| parse_err(line_no, format!("`{first}` has no value")))?;
            let num = |v: &str| -> Result<f64, TerrainError> {
                v.parse::<f64>()
                    .map_err(|_| parse_err(line_no, format!("`{first}`: not a number: `{v}`")))
            };
            match key.as_str() {
                "ncols" => ncols = Some(num(val)? as usize),
                "nrows" => nrows = Some(num(val)? as usize),
                "xllcorner" => xll = Some(num(val)?),
                "yllcorner" => yll = Some(num(val)?),
                "xllcenter" => {
                    xll = Some(num(val)?);
                    center = true;
                }
                "yllcenter" => {
                    yll = Some(num(val)?);
                    center = true;
                }
                "cellsize" => cellsize = Some(num(val)?),
                "nodata_value" => nodata = Some(num(val)?),
                other => return Err(parse_err(line_no, format!("unknown header key `{other}`"))),
            }
            continue;
        }
        in_header = false;
        for tok in std::iter::once(first).chain(parts) {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(line_no, format!("not a number: `{tok}`")))?;
            values.push(v);
        }
    }

    let ncols = ncols.ok_or_else(|| parse_err(0, "missing ncols".into()))?;
    let nrows = nrows.ok_or_else(|| parse_err(0, "missing nrows".into()))?;
    let cellsize = cellsize.ok_or_else(|| parse_err(0, "missing cellsize".into()))?;
    let mut xll = xll.ok_or_else(|| parse_err(0, "missing xllcorner".into()))?;
    let mut yll = yll.ok_or_else(|| parse_err(0, "missing yllcorner".into()))?;
    if center {
        xll -= 0.5 * cellsize;
        yll -= 0.5 * cellsize;
    }
    if values.len() != nrows * ncols {
        return Err(parse_err(
            0,
            format!("expected {} values, found {}", nrows * ncols, values.len()),
        ));
    }
    let mut cells = vec![f64::NAN; nrows * ncols];
    for r in 0..nrows {
        let i = nrows - 1 - r;
        for c in 0..ncols {
            let v = values[r * ncols + c];
            if nodata != Some(v) && !v.is_nan() {
                cells[i * ncols + c] = -v;
            }
        }
    }
    Dem::new(nrows, ncols, cellsize, [yll, xll], cells)
}

fn parse_err(line: usize, message: String) -> TerrainError {
    TerrainError::Parse { line, message }
}

/// Formats a grid as ESRI ASCII text. Finite values round-trip exactly.
pub fn esri_ascii_string(dem: &Dem) -> String {
    let (nr, nc) = (dem.n_rows(), dem.n_cols());
    let mut s = String::with_capacity(nr * nc * 8 + 128);
    let _ = writeln!(s, "ncols {nc}");
    let _ = writeln!(s, "nrows {nr}");
    let _ = writeln!(s, "xllcorner {}", dem.origin()[1]);
    let _ = writeln!(s, "yllcorner {}", dem.origin()[0]);
    let _ = writeln!(s, "cellsize {}", dem.resolution());
    let _ = writeln!(s, "NODATA_value {DEFAULT_NODATA}");
    for r in 0..nr {
        let i = nr - 1 - r;
        for c in 0..nc {
            if c > 0 {
                s.push(' ');
            }
            match dem.get(i, c) {
                Some(z) => {
                    let _ = write!(s, "{}", -z);
                }
                None => {
                    let _ = write!(s, "{DEFAULT_NODATA}");
                }
            }
        }
        s.push('\n');
    }
    s
}

pub fn write_esri_ascii<W: Write>(dem: &Dem, mut w: W) -> Result<(), TerrainError> {
    w.write_all(esri_ascii_string(dem).as_bytes())
        .map_err(|e| TerrainError::Io(e.to_string()))
}

pub fn load(path: &Path) -> Result<Dem, TerrainError> {
    let f = std::fs::File::open(path)
        .map_err(|e| TerrainError::Io(format!("{}: {e}", path.display())))?;
    read_esri_ascii(f)
}

pub fn save(dem: &Dem, path: &Path) -> Result<(), TerrainError> {
    std::fs::write(path, esri_ascii_string(dem))
        .map_err(|e| TerrainError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reads_header_and_orientation() {
        let text =
            "ncols 3\nnrows 2\nxllcorner 10\nyllcorner 20\ncellsize 0.5\nNODATA_value -9999\n\
                    1 2 3\n4 -9999 6\n";
        let dem = read_esri_ascii(text.as_bytes()).unwrap();
        assert_eq!((dem.n_rows(), dem.n_cols()), (2, 3));
        assert_eq!(dem.origin(), [20.0, 10.0]);
        // first file row is the northern (larger x) row
        assert_eq!(dem.get(1, 0), Some(-1.0));
        assert_eq!(dem.get(0, 2), Some(-6.0));
        assert_eq!(dem.get(0, 1), None);
    }

    #[test]
    fn rejects_malformed() {
        assert!(read_esri_ascii(
            "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n1\n".as_bytes()
        )
        .is_err());
        assert!(read_esri_ascii(
            "ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nabc\n".as_bytes()
        )
        .is_err());
        assert!(read_esri_ascii("ncols 1\nnrows 1\n1\n".as_bytes()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn round_trip_is_bit_exact(vals in proptest::collection::vec(-1e6..1e6f64, 12),
                                   res in 0.01..10.0f64, ox in -1e5..1e5f64, oy in -1e5..1e5f64,
                                   hole in 0usize..12) {
            let mut cells = vals.clone();
            cells[hole] = f64::NAN;
            let dem = Dem::new(3, 4, res, [ox, oy], cells).unwrap();
            let text = esri_ascii_string(&dem);
            let back = read_esri_ascii(text.as_bytes()).unwrap();
            prop_assert_eq!(&back, &dem);
            prop_assert_eq!(esri_ascii_string(&back), text);
        }
    }
}
