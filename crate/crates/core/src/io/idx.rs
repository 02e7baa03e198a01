//! MNIST IDX files: big-endian magic and dimensions, then unsigned bytes.

use std::path::Path;

use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Images of an IDX3 file, each `rows · cols` bytes in row-major order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    pub images: Vec<Vec<u8>>,
}

fn be_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| {
            Error::format(
                bytes.len() as u64,
                format!("truncated IDX header: missing {what}"),
            )
        })
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let magic = be_u32(bytes, 0, "magic")?;
    if magic != expected {
        return Err(Error::format(
            0,
            format!("IDX magic {magic:#010x}, expected {expected:#010x}"),
        ));
    }
    Ok(())
}

fn check_len(bytes: &[u8], header: usize, body: usize) -> Result<()> {
    let have = bytes.len() - header;
    if have < body {
        return Err(Error::format(
            bytes.len() as u64,
            format!("truncated IDX body: need {body} bytes after the header, found {have}"),
        ));
    }
    if have > body {
        return Err(Error::format(
            (header + body) as u64,
            "trailing bytes after IDX body",
        ));
    }
    Ok(())
}

pub fn parse_images(bytes: &[u8]) -> Result<IdxImages> {
    check_magic(bytes, IMAGES_MAGIC)?;
    let count = be_u32(bytes, 4, "image count")? as usize;
    let rows = be_u32(bytes, 8, "row count")? as usize;
    let cols = be_u32(bytes, 12, "column count")? as usize;
    let size = rows * cols;
    check_len(bytes, 16, count * size)?;
    let images = bytes[16..]
        .chunks_exact(size.max(1))
        .take(count)
        .map(<[u8]>::to_vec)
        .collect();
    Ok(IdxImages { rows, cols, images })
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, LABELS_MAGIC)?;
    let count = be_u32(bytes, 4, "label count")? as usize;
    check_len(bytes, 8, count)?;
    Ok(bytes[8..].to_vec())
}

pub fn read_images(path: impl AsRef<Path>) -> Result<IdxImages> {
    parse_images(&std::fs::read(path)?)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    parse_labels(&std::fs::read(path)?)
}

/// Encodes images in IDX3 form.
pub fn images_to_bytes(rows: usize, cols: usize, images: &[Vec<u8>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    for v in [IMAGES_MAGIC, images.len() as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for im in images {
        assert_eq!(im.len(), rows * cols);
        out.extend_from_slice(im);
    }
    out
}

pub fn labels_to_bytes(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
