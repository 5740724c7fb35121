//! Netpbm graymap (P2 ASCII / P5 binary). Binary samples are one byte for
//! `maxval < 256` and two big-endian bytes otherwise.

use std::io::{self, Write};

use thiserror::Error;

use super::GrayImage;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("pgm byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn err(offset: usize, message: impl Into<String>) -> PgmError {
    PgmError::Parse { offset, message: message.into() }
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, PgmError> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            if self.pos >= self.data.len() {
                return Err(err(self.pos, format!("unexpected end of data reading {what}")));
            }
            return Err(err(self.pos, format!("expected {what}")));
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .expect("digits are ascii")
            .parse()
            .map_err(|_| err(start, format!("{what} out of range")))
    }
}

pub fn read_pgm(data: &[u8]) -> Result<GrayImage, PgmError> {
    if data.len() < 2 || data[0] != b'P' || !(data[1] == b'2' || data[1] == b'5') {
        return Err(err(0, "missing P2/P5 magic number"));
    }
    let binary = data[1] == b'5';
    let mut c = Cursor { data, pos: 2 };
    let width = c.number("width")? as usize;
    let height = c.number("height")? as usize;
    let maxval_at = c.pos;
    let maxval = c.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(err(maxval_at, format!("maxval {maxval} outside 1..=65535")));
    }
    let maxval = maxval as u16;
    let n = width * height;
    let mut samples = Vec::with_capacity(n);
    if binary {
        // exactly one whitespace byte separates header and raster
        if c.pos >= data.len() || !data[c.pos].is_ascii_whitespace() {
            return Err(err(c.pos, "expected whitespace after maxval"));
        }
        c.pos += 1;
        let bytes = if maxval < 256 { 1 } else { 2 };
        let need = n * bytes;
        if data.len() - c.pos < need {
            return Err(err(data.len(), format!("truncated raster: need {need} bytes, have {}", data.len() - c.pos)));
        }
        for i in 0..n {
            let at = c.pos + i * bytes;
            let v = if bytes == 1 { data[at] as u16 } else { u16::from_be_bytes([data[at], data[at + 1]]) };
            if v > maxval {
                return Err(err(at, format!("sample {v} exceeds maxval {maxval}")));
            }
            samples.push(v);
        }
    } else {
        for _ in 0..n {
            let at = c.pos;
            let v = c.number("sample")?;
            if v > maxval as u32 {
                return Err(err(at, format!("sample {v} exceeds maxval {maxval}")));
            }
            samples.push(v as u16);
        }
    }
    Ok(GrayImage::new(width, height, maxval, samples).expect("validated while parsing"))
}

/// Binary (P5) encoding.
pub fn write_pgm<W: Write>(img: &GrayImage, mut w: W) -> io::Result<()> {
    write!(w, "P5\n{} {}\n{}\n", img.width(), img.height(), img.maxval())?;
    if img.maxval() < 256 {
        let bytes: Vec<u8> = img.samples().iter().map(|&s| s as u8).collect();
        w.write_all(&bytes)
    } else {
        let bytes: Vec<u8> = img.samples().iter().flat_map(|s| s.to_be_bytes()).collect();
        w.write_all(&bytes)
    }
}

/// ASCII (P2) encoding, one raster row per line.
pub fn write_pgm_ascii<W: Write>(img: &GrayImage, mut w: W) -> io::Result<()> {
    write!(w, "P2\n{} {}\n{}\n", img.width(), img.height(), img.maxval())?;
    for row in img.samples().chunks(img.width().max(1)) {
        let line: Vec<String> = row.iter().map(|s| s.to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}
