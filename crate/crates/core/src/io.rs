//! Dataset and matrix-cache file formats.
//!
//! Datasets are delimited text (one point per row, comma or tab separated,
//! optional header line, optional leading label column) or the binary
//! `ERDS` layout: magic, `N: u64`, `n: u64`, then `N·n` little-endian `f64`
//! stored column by column. Matrix caches use the `ERMX` layout: magic,
//! version `u32`, `m`, `n`, `seed` as `u64`, then row-major `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::jl::{draw_projection, Dataset, ProjectionSpec};

const DATASET_MAGIC: &[u8; 4] = b"ERDS";
const MATRIX_MAGIC: &[u8; 4] = b"ERMX";
const MATRIX_VERSION: u32 = 1;

/// Reads a dataset, choosing the binary reader when the file starts with the
/// dataset magic.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(DATASET_MAGIC) {
        read_dataset_binary(&mut bytes.as_slice())
    } else {
        let text = String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?;
        parse_dataset_text(&text)
    }
}

fn parse_number(field: &str) -> Option<f64> {
    field.trim().parse::<f64>().ok()
}

/// Parses delimited text. Tab is the delimiter when the first line has one.
pub fn parse_dataset_text(text: &str) -> Result<Dataset> {
    let delimiter = match text.lines().next() {
        Some(l) if l.contains('\t') => b'\t',
        _ => b',',
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        records.push(rec);
    }
    // A first row with no numeric field after the first column is a header.
    if let Some(first) = records.first() {
        if first.iter().skip(1).all(|f| parse_number(f).is_none())
            && parse_number(first.get(0).unwrap_or("")).is_none()
        {
            records.remove(0);
        }
    }
    let labelled = records
        .first()
        .is_some_and(|r| parse_number(r.get(0).unwrap_or("")).is_none());
    let mut labels = Vec::new();
    let mut rows = Vec::with_capacity(records.len());
    for (line, rec) in records.iter().enumerate() {
        let mut fields = rec.iter();
        if labelled {
            labels.push(fields.next().unwrap_or("").to_string());
        }
        let row = fields
            .map(|f| {
                let v = parse_number(f)
                    .ok_or_else(|| Error::Parse(format!("row {}: `{f}` is not a number", line + 1)))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Parse(format!("row {}: non-finite value", line + 1)))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let data = Dataset::from_rows(&rows)?;
    if labelled {
        Dataset::new(data.points().clone(), Some(labels))
    } else {
        Ok(data)
    }
}

/// Writes the comma-separated form, with labels when present.
pub fn write_dataset_csv(data: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    for i in 0..data.len() {
        let mut rec: Vec<String> = Vec::new();
        if let Some(l) = data.labels() {
            rec.push(l[i].clone());
        }
        rec.extend(data.point(i).iter().map(|v| format!("{v:?}")));
        w.write_record(&rec).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_binary<R: Read>(r: &mut R) -> Result<Dataset> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DATASET_MAGIC {
        return Err(Error::Parse("not a binary dataset".into()));
    }
    let n_points = r.read_u64::<LittleEndian>()? as usize;
    let dim = r.read_u64::<LittleEndian>()? as usize;
    let total = n_points
        .checked_mul(dim)
        .ok_or_else(|| Error::Parse("dataset shape overflows".into()))?;
    let mut col_major = vec![0.0; total];
    r.read_f64_into::<LittleEndian>(&mut col_major)
        .map_err(|e| Error::Parse(format!("truncated dataset: {e}")))?;
    let points = Array2::from_shape_vec((dim, n_points), col_major)
        .map_err(|e| Error::Parse(e.to_string()))?
        .reversed_axes()
        .as_standard_layout()
        .into_owned();
    Dataset::new(points, None)
}

pub fn write_dataset_binary<W: Write>(data: &Dataset, w: &mut W) -> Result<()> {
    w.write_all(DATASET_MAGIC)?;
    w.write_u64::<LittleEndian>(data.len() as u64)?;
    w.write_u64::<LittleEndian>(data.dim() as u64)?;
    for c in 0..data.dim() {
        for v in data.points().column(c) {
            w.write_f64::<LittleEndian>(*v)?;
        }
    }
    Ok(())
}

pub fn write_matrix_cache(path: &Path, spec: &ProjectionSpec, a: &Array2<f64>) -> Result<()> {
    if a.dim() != (spec.m, spec.n) {
        return Err(Error::DimensionMismatch("matrix does not match its spec".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MATRIX_MAGIC)?;
    w.write_u32::<LittleEndian>(MATRIX_VERSION)?;
    w.write_u64::<LittleEndian>(spec.m as u64)?;
    w.write_u64::<LittleEndian>(spec.n as u64)?;
    w.write_u64::<LittleEndian>(spec.seed)?;
    for v in a.iter() {
        w.write_f64::<LittleEndian>(*v)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a cached matrix and its key.
pub fn read_matrix_cache(path: &Path) -> Result<(ProjectionSpec, Array2<f64>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MATRIX_MAGIC {
        return Err(Error::Parse("not a matrix cache".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != MATRIX_VERSION {
        return Err(Error::Parse(format!("unsupported matrix cache version {version}")));
    }
    let m = r.read_u64::<LittleEndian>()? as usize;
    let n = r.read_u64::<LittleEndian>()? as usize;
    let seed = r.read_u64::<LittleEndian>()?;
    let spec = ProjectionSpec::new(m, n, seed)?;
    let mut data = vec![0.0; m * n];
    r.read_f64_into::<LittleEndian>(&mut data)
        .map_err(|e| Error::Parse(format!("truncated matrix cache: {e}")))?;
    let a = Array2::from_shape_vec((m, n), data).map_err(|e| Error::Parse(e.to_string()))?;
    Ok((spec, a))
}

/// Loads the matrix for `spec` from `path` when the cached key matches,
/// otherwise draws it and rewrites the cache.
pub fn load_or_draw(path: Option<&Path>, spec: &ProjectionSpec) -> Result<Array2<f64>> {
    if let Some(p) = path {
        if p.exists() {
            if let Ok((cached, a)) = read_matrix_cache(p) {
                if cached == *spec {
                    return Ok(a);
                }
            }
        }
        let a = draw_projection(spec);
        write_matrix_cache(p, spec, &a)?;
        return Ok(a);
    }
    Ok(draw_projection(spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_formats() {
        let d = parse_dataset_text("x,y\n1,2\n3.5,-4\n").unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.point(1).to_vec(), vec![3.5, -4.0]);
        let d = parse_dataset_text("a\t1\t2\nb\t3\t4\n").unwrap();
        assert_eq!(d.labels().unwrap(), &["a".to_string(), "b".to_string()]);
        assert_eq!(d.dim(), 2);
        assert!(parse_dataset_text("1,2\n3,inf\n").is_err());
        assert!(parse_dataset_text("1,2\n3\n").is_err());
        assert!(parse_dataset_text("1,2\n3,zz\n").is_err());
    }

    #[test]
    fn binary_round_trip() {
        let d = Dataset::from_rows(&[vec![1.0, 2.0, 3.0], vec![-0.5, 1e-300, 7.0]]).unwrap();
        let mut buf = Vec::new();
        write_dataset_binary(&d, &mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 16 + 6 * 8);
        // column-major: first two values are column 0
        assert_eq!(f64::from_le_bytes(buf[20..28].try_into().unwrap()), 1.0);
        assert_eq!(f64::from_le_bytes(buf[28..36].try_into().unwrap()), -0.5);
        let back = read_dataset_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(back, d);
        assert!(read_dataset_binary(&mut &buf[..30]).is_err());
    }

    #[test]
    fn csv_round_trip_and_matrix_cache() {
        let dir = tempfile::tempdir().unwrap();
        let d = Dataset::new(
            ndarray::array![[0.1, 0.2], [1.0 / 3.0, -2.0]],
            Some(vec!["p".into(), "q".into()]),
        )
        .unwrap();
        let p = dir.path().join("d.csv");
        write_dataset_csv(&d, &p).unwrap();
        assert_eq!(read_dataset(&p).unwrap(), d);

        let spec = ProjectionSpec::new(7, 3, 99).unwrap();
        let cache = dir.path().join("a.bin");
        let a = load_or_draw(Some(&cache), &spec).unwrap();
        let (key, b) = read_matrix_cache(&cache).unwrap();
        assert_eq!(key, spec);
        assert_eq!(a, b);
        let other = ProjectionSpec::new(7, 3, 100).unwrap();
        let c = load_or_draw(Some(&cache), &other).unwrap();
        assert_ne!(a, c);
        assert_eq!(read_matrix_cache(&cache).unwrap().0, other);
    }
}
