//! Plain-text dataset format: UTF-8 comma separated values with header
//! `sample_id,true_id,camera_id,split,f_0,...,f_{D-1}`. Features are written
//! with 17 significant digits so that reading them back is bit exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{CameraTaggedDataset, Split};
use crate::error::{Error, Result};
use crate::metric::EmbeddingMatrix;

const FIXED: [&str; 4] = ["sample_id", "true_id", "camera_id", "split"];

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::DimensionMismatch {
            expected: expected_len as usize,
            found: len as usize,
        },
        other => Error::Malformed {
            line,
            reason: format!("{other:?}"),
        },
    }
}

pub fn write_dataset<W: Write>(ds: &CameraTaggedDataset, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let mut header: Vec<String> = FIXED.iter().map(|s| s.to_string()).collect();
    header.extend((0..ds.dim()).map(|j| format!("f_{j}")));
    w.write_record(&header).map_err(csv_err)?;
    let mut record = Vec::with_capacity(header.len());
    for i in 0..ds.len() {
        record.clear();
        record.push(i.to_string());
        record.push(ds.true_id[i].to_string());
        record.push(ds.camera[i].to_string());
        record.push(ds.split[i].as_str().to_string());
        record.extend(ds.features.row(i).iter().map(|v| format!("{v:.16e}")));
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(input: R) -> Result<CameraTaggedDataset> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut records = r.records();
    let header = match records.next() {
        Some(h) => h.map_err(csv_err)?,
        None => {
            return Err(Error::Malformed {
                line: 1,
                reason: "missing header".into(),
            })
        }
    };
    for (j, name) in FIXED.iter().enumerate() {
        if header.get(j) != Some(*name) {
            return Err(Error::Malformed {
                line: 1,
                reason: format!("expected column {j} to be `{name}`"),
            });
        }
    }
    let d = header.len() - FIXED.len();
    for j in 0..d {
        if header.get(FIXED.len() + j) != Some(format!("f_{j}").as_str()) {
            return Err(Error::Malformed {
                line: 1,
                reason: format!("expected feature column f_{j}"),
            });
        }
    }
    if d == 0 {
        return Err(Error::Malformed {
            line: 1,
            reason: "no feature columns".into(),
        });
    }

    let mut data = Vec::new();
    let mut camera = Vec::new();
    let mut true_id = Vec::new();
    let mut split = Vec::new();
    for (k, rec) in records.enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = k + 2;
        let bad = |reason: String| Error::Malformed { line, reason };
        true_id.push(rec[1].trim().parse::<i64>().map_err(|e| bad(format!("true_id: {e}")))?);
        camera.push(rec[2].trim().parse::<usize>().map_err(|e| bad(format!("camera_id: {e}")))?);
        split.push(Split::parse(rec[3].trim()).ok_or_else(|| bad(format!("unknown split `{}`", &rec[3])))?);
        for j in 0..d {
            let v: f64 = rec[FIXED.len() + j]
                .trim()
                .parse()
                .map_err(|e| bad(format!("f_{j}: {e}")))?;
            data.push(v);
        }
    }
    let n = true_id.len();
    let features = EmbeddingMatrix::new(n, d, data)?;
    CameraTaggedDataset::new(features, camera, true_id, split)
}

pub fn save_dataset(ds: &CameraTaggedDataset, path: impl AsRef<Path>) -> Result<()> {
    write_dataset(ds, BufWriter::new(File::create(path)?))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<CameraTaggedDataset> {
    read_dataset(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SynthConfig};

    #[test]
    fn round_trip_is_bit_exact() {
        let ds = generate_synthetic(&SynthConfig {
            ids: 6,
            d_in: 5,
            ..SynthConfig::default()
        })
        .unwrap();
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        let back = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(back, ds);
        for i in 0..ds.len() {
            for (a, b) in ds.features.row(i).iter().zip(back.features.row(i)) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn parses_handwritten_file() {
        let text = "sample_id,true_id,camera_id,split,f_0,f_1\n\
                    0,3,0,train,1.5,-2.25e-1\n\
                    1,-1,1,query,0.1,7\n";
        let ds = read_dataset(text.as_bytes()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.features.row(0), &[1.5, -0.225]);
        assert_eq!(ds.features.row(1), &[0.1, 7.0]);
        assert_eq!(ds.true_id, vec![3, -1]);
        assert_eq!(ds.camera, vec![0, 1]);
        assert_eq!(ds.split, vec![Split::Train, Split::Query]);
    }

    #[test]
    fn missing_header_column_is_malformed() {
        let text = "sample_id,camera_id,split,f_0\n0,0,train,1.0\n";
        assert!(matches!(read_dataset(text.as_bytes()), Err(Error::Malformed { line: 1, .. })));
    }

    #[test]
    fn ragged_row_is_a_dimension_mismatch() {
        let text = "sample_id,true_id,camera_id,split,f_0,f_1\n0,0,0,train,1.0\n";
        assert!(matches!(
            read_dataset(text.as_bytes()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bad_number_reports_line() {
        let text = "sample_id,true_id,camera_id,split,f_0\n0,0,0,train,1.0\n1,0,0,train,abc\n";
        assert!(matches!(read_dataset(text.as_bytes()), Err(Error::Malformed { line: 3, .. })));
    }
}
