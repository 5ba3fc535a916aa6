//! Portable tensor file: one JSON header line space-padded to
//! [`HEADER_BYTES`] (newline included), then a little-endian f32 payload.
//! Files of the same shape therefore have the same length.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BoundingBox, RoiTensor};
use crate::error::{Error, Result};

pub const DTYPE: &str = "float32";
pub const HEADER_BYTES: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorHeader {
    pub shape: [usize; 3],
    pub dtype: String,
    pub byte_order: String,
    pub layout: String,
    pub sample_id: String,
    #[serde(rename = "box")]
    pub source_box: BoundingBox,
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

pub fn write_tensor(t: &RoiTensor, mut out: impl Write) -> std::io::Result<()> {
    let header = TensorHeader {
        shape: t.shape,
        dtype: DTYPE.into(),
        byte_order: "little".into(),
        layout: "chw".into(),
        sample_id: t.sample_id.clone(),
        source_box: t.source_box,
        mean: t.mean,
        std: t.std,
    };
    let mut line = serde_json::to_vec(&header)?;
    if line.len() >= HEADER_BYTES {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            format!("tensor header exceeds {HEADER_BYTES} bytes; sample id too long"),
        ));
    }
    line.resize(HEADER_BYTES - 1, b' ');
    line.push(b'\n');
    out.write_all(&line)?;
    for v in &t.data {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()
}

pub fn read_tensor(input: impl Read) -> Result<RoiTensor> {
    let mut reader = BufReader::new(input);
    let mut line = Vec::new();
    reader
        .read_until(b'\n', &mut line)
        .map_err(|e| Error::Format(format!("tensor header: {e}")))?;
    let header: TensorHeader =
        serde_json::from_slice(&line).map_err(|e| Error::Format(format!("tensor header: {e}")))?;
    if header.dtype != DTYPE || header.byte_order != "little" {
        return Err(Error::Format(format!(
            "unsupported tensor encoding {} / {}",
            header.dtype, header.byte_order
        )));
    }
    let n: usize = header.shape.iter().product();
    let mut payload = Vec::new();
    reader
        .read_to_end(&mut payload)
        .map_err(|e| Error::Format(format!("tensor payload: {e}")))?;
    if payload.len() != 4 * n {
        return Err(Error::shape(format!("{} payload bytes", 4 * n), payload.len()));
    }
    let data = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Ok(RoiTensor {
        sample_id: header.sample_id,
        source_box: header.source_box,
        shape: header.shape,
        data,
        mean: header.mean,
        std: header.std,
    })
}

pub fn export_tensor(t: &RoiTensor, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_tensor(t, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn import_tensor(path: &Path) -> Result<RoiTensor> {
    read_tensor(File::open(path).map_err(|e| Error::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maskio::{BinaryMask, GrayImage};
    use crate::roi::{extract_roi, RoiOptions};

    fn sample() -> RoiTensor {
        let img = GrayImage::from_fn(64, 48, |r, c| ((r * 5 + c * 3) % 256) as u8);
        let mask = BinaryMask::from_fn(64, 48, |r, c| (20..30).contains(&r) && (10..40).contains(&c));
        extract_roi(&img, &mask, "case_7", &RoiOptions::default()).unwrap()
    }

    #[test]
    fn file_size_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.bin");
        let t = sample();
        export_tensor(&t, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let nl = bytes.iter().position(|&b| b == b'\n').unwrap();
        assert_eq!(nl + 1, HEADER_BYTES);
        assert_eq!(bytes.len(), HEADER_BYTES + 3 * 224 * 224 * 4);
        let header: serde_json::Value = serde_json::from_slice(&bytes[..nl]).unwrap();
        assert_eq!(header["shape"], serde_json::json!([3, 224, 224]));
        assert_eq!(header["sample_id"], "case_7");
        assert_eq!(header["box"]["row_min"], 10);
    }

    #[test]
    fn round_trip_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.bin");
        let t = sample();
        export_tensor(&t, &path).unwrap();
        let back = import_tensor(&path).unwrap();
        assert_eq!(back.shape, t.shape);
        assert!(back.data.iter().zip(&t.data).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(back, t);
    }

    #[test]
    fn overlong_header_rejected() {
        let mut t = sample();
        t.sample_id = "x".repeat(HEADER_BYTES);
        assert!(write_tensor(&t, Vec::new()).is_err());
    }

    #[test]
    fn unwritable_path() {
        let err = export_tensor(&sample(), Path::new("/nonexistent/dir/t.bin")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn truncated_payload_rejected() {
        let mut buf = Vec::new();
        write_tensor(&sample(), &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_tensor(&buf[..]), Err(Error::Shape { .. })));
    }
}
