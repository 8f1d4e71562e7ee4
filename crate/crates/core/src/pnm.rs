//! Binary NetPBM (P5 graymap, P6 pixmap) with 8-bit samples.

use std::fs;
use std::path::Path;

use crate::error::{GazeError, Result};
use crate::image::{GrayImage, RgbImage};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pnm {
    Gray(GrayImage),
    Rgb(RgbImage),
}

impl Pnm {
    pub fn into_gray(self) -> GrayImage {
        match self {
            Pnm::Gray(g) => g,
            Pnm::Rgb(c) => c.to_gray(),
        }
    }
}

fn parse_err<T>(offset: usize, message: impl Into<String>) -> Result<T> {
    Err(GazeError::Parse {
        offset,
        message: message.into(),
    })
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_ws_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return parse_err(start, format!("expected {what}"));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        text.parse::<u32>()
            .or_else(|_| parse_err(start, format!("{what} out of range")))
    }
}

/// Decodes a P5 or P6 file held in memory.
pub fn decode(bytes: &[u8]) -> Result<Pnm> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return parse_err(0, "missing NetPBM magic");
    }
    let channels = match bytes[1] {
        b'5' => 1usize,
        b'6' => 3usize,
        other => return parse_err(1, format!("unsupported NetPBM variant P{}", other as char)),
    };
    let mut r = HeaderReader { bytes, pos: 2 };
    let width = r.number("width")?;
    let height = r.number("height")?;
    let maxval_at = r.pos;
    let maxval = r.number("maxval")?;
    if width == 0 || height == 0 {
        return parse_err(maxval_at, "zero image dimension");
    }
    if maxval != 255 {
        return parse_err(maxval_at, format!("only 8-bit maxval 255 is supported, got {maxval}"));
    }
    match bytes.get(r.pos) {
        Some(b' ' | b'\t' | b'\n' | b'\r') => r.pos += 1,
        _ => return parse_err(r.pos, "expected single whitespace after maxval"),
    }
    let expected = width as usize * height as usize * channels;
    let payload = &bytes[r.pos..];
    if payload.len() < expected {
        return parse_err(
            bytes.len(),
            format!("truncated payload: expected {expected} bytes, found {}", payload.len()),
        );
    }
    let data = payload[..expected].to_vec();
    Ok(if channels == 1 {
        Pnm::Gray(GrayImage::from_raw(width, height, data)?)
    } else {
        Pnm::Rgb(RgbImage::from_raw(width, height, data)?)
    })
}

pub fn encode_gray(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.as_raw());
    out
}

pub fn encode_rgb(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.as_raw());
    out
}

pub fn read(path: impl AsRef<Path>) -> Result<Pnm> {
    decode(&fs::read(path)?)
}

pub fn read_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    Ok(read(path)?.into_gray())
}

pub fn write_gray(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    fs::write(path, encode_gray(img))?;
    Ok(())
}

pub fn write_rgb(path: impl AsRef<Path>, img: &RgbImage) -> Result<()> {
    fs::write(path, encode_rgb(img))?;
    Ok(())
}
