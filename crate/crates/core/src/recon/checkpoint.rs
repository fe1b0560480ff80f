//! Decoder checkpoints (flat little-endian f32 tensors plus a text manifest)
//! and binary PGM previews.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::decoder::{DecoderModel, DecoderShape};
use crate::error::{Error, Result};

fn paths(base: &Path) -> (PathBuf, PathBuf) {
    (base.with_extension("bin"), base.with_extension("manifest"))
}

/// Manifest text: a shape line, then `tensor <name> <dims> <byte offset> <byte len>` lines.
pub fn manifest(shape: &DecoderShape) -> String {
    let mut out = String::from("# decoder checkpoint, f32 little-endian\n");
    writeln!(
        out,
        "shape inputs={} c1={} c2={} base={}",
        shape.inputs, shape.c1, shape.c2, shape.base
    )
    .unwrap();
    for ((name, dims), (start, len)) in shape.tensors().into_iter().zip(shape.ranges()) {
        let dims: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
        writeln!(
            out,
            "tensor {name} {} {} {}",
            dims.join("x"),
            start * 4,
            len * 4
        )
        .unwrap();
    }
    out
}

/// Writes `<base>.bin` and `<base>.manifest`.
pub fn save_checkpoint(model: &DecoderModel<f32>, base: impl AsRef<Path>) -> Result<()> {
    let (bin, man) = paths(base.as_ref());
    let bytes: Vec<u8> = model.params.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(bin, bytes)?;
    fs::write(man, manifest(&model.shape))?;
    Ok(())
}

pub fn load_checkpoint(base: impl AsRef<Path>) -> Result<DecoderModel<f32>> {
    let (bin, man) = paths(base.as_ref());
    let text = fs::read_to_string(man)?;
    let shape = parse_shape(&text)?;
    if manifest(&shape) != text {
        return Err(Error::format(
            "checkpoint manifest does not match its shape line",
        ));
    }
    let bytes = fs::read(bin)?;
    if bytes.len() != shape.num_params() * 4 {
        return Err(Error::format(format!(
            "checkpoint holds {} bytes, shape needs {}",
            bytes.len(),
            shape.num_params() * 4
        )));
    }
    let params = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Ok(DecoderModel { shape, params })
}

fn parse_shape(text: &str) -> Result<DecoderShape> {
    let line = text
        .lines()
        .find(|l| l.starts_with("shape "))
        .ok_or_else(|| Error::format("manifest lacks a shape line"))?;
    let get = |key: &str| -> Result<usize> {
        line.split_whitespace()
            .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::format(format!("manifest shape lacks {key}")))
    };
    Ok(DecoderShape {
        inputs: get("inputs")?,
        c1: get("c1")?,
        c2: get("c2")?,
        base: get("base")?,
    })
}

/// Encodes grayscale values in `[0, 1]` as a binary (P5) PGM.
pub fn encode_pgm(width: usize, height: usize, pixels: &[f32]) -> Result<Vec<u8>> {
    if pixels.len() != width * height {
        return Err(Error::consistency("pixel count does not match PGM size"));
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(
        pixels
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    Ok(out)
}

pub fn write_pgm(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    pixels: &[f32],
) -> Result<()> {
    fs::write(path, encode_pgm(width, height, pixels)?)?;
    Ok(())
}

/// Lays out square images side by side in one row.
pub fn tile_row(images: &[&[f32]], side: usize) -> Vec<f32> {
    let width = side * images.len();
    let mut out = vec![0.0; width * side];
    for (t, img) in images.iter().enumerate() {
        for r in 0..side {
            out[r * width + t * side..r * width + (t + 1) * side]
                .copy_from_slice(&img[r * side..(r + 1) * side]);
        }
    }
    out
}
