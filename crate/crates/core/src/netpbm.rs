//! Netpbm graymaps and pixmaps: P2/P5 and P3/P6 readers, P5 writer.
//!
//! Samples are kept raw (`0..=maxval`) so a P5 file round-trips exactly.

use std::path::Path;

use crate::error::{shape, Error, Result};
use crate::tensor::Tensor3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// ASCII graymap.
    P2,
    /// Raw graymap.
    P5,
    /// ASCII pixmap.
    P3,
    /// Raw pixmap.
    P6,
}

impl Format {
    pub fn channels(self) -> usize {
        match self {
            Format::P2 | Format::P5 => 1,
            Format::P3 | Format::P6 => 3,
        }
    }

    fn is_raw(self) -> bool {
        matches!(self, Format::P5 | Format::P6)
    }
}

/// Decoded image; samples in row-major, channel-minor order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pnm {
    pub format: Format,
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

impl Pnm {
    pub fn channels(&self) -> usize {
        self.format.channels()
    }

    /// Samples divided by `maxval`, shaped `height×width×channels`.
    pub fn to_tensor(&self) -> Tensor3 {
        let m = f64::from(self.maxval);
        let data = self.samples.iter().map(|&s| f64::from(s) / m).collect();
        Tensor3::new(self.height, self.width, self.channels(), data)
            .expect("sample count matches header")
    }

    /// A P5 graymap from a single-channel tensor with values in `[0, 1]`.
    pub fn gray_from_tensor(t: &Tensor3, maxval: u16) -> Result<Self> {
        if t.channels() != 1 {
            return Err(shape(format!(
                "graymaps have one channel, got {}",
                t.channels()
            )));
        }
        if maxval == 0 {
            return Err(shape("maxval must be positive"));
        }
        let m = f64::from(maxval);
        let samples = t
            .as_slice()
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * m).round() as u16)
            .collect();
        Ok(Self {
            format: Format::P5,
            width: t.cols(),
            height: t.rows(),
            maxval,
            samples,
        })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.pos < self.bytes.len()
                    && self.bytes[self.pos] != b'\n'
                    && self.bytes[self.pos] != b'\r'
                {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err(if self.pos == self.bytes.len() {
                format!("unexpected end of file, expected {what}")
            } else {
                format!("expected {what}")
            }));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        text.parse().map_err(|_| Error::Parse {
            offset: start,
            message: format!("{what} out of range"),
        })
    }
}

pub fn parse(bytes: &[u8]) -> Result<Pnm> {
    let mut c = Cursor { bytes, pos: 0 };
    let format = match bytes.get(..2) {
        Some(b"P2") => Format::P2,
        Some(b"P5") => Format::P5,
        Some(b"P3") => Format::P3,
        Some(b"P6") => Format::P6,
        _ => return Err(c.err("not a P2, P3, P5 or P6 file")),
    };
    c.pos = 2;
    let width = c.number("width")? as usize;
    let height = c.number("height")? as usize;
    c.skip_space();
    let maxval_at = c.pos;
    let maxval = c.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Parse {
            offset: maxval_at,
            message: "zero image dimension".into(),
        });
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Parse {
            offset: maxval_at,
            message: format!("maxval {maxval} outside 1..=65535"),
        });
    }
    let count = width
        .checked_mul(height)
        .and_then(|p| p.checked_mul(format.channels()))
        .ok_or_else(|| c.err("image dimensions overflow"))?;
    let mut samples = Vec::with_capacity(count.min(1 << 24));
    if format.is_raw() {
        match bytes.get(c.pos) {
            Some(b) if b.is_ascii_whitespace() => c.pos += 1,
            _ => return Err(c.err("expected a single whitespace byte before the raster")),
        }
        let wide = maxval > 255;
        let need = count * if wide { 2 } else { 1 };
        if bytes.len() - c.pos < need {
            return Err(Error::Parse {
                offset: bytes.len(),
                message: format!("raster truncated: {} of {need} bytes", bytes.len() - c.pos),
            });
        }
        let raster = &bytes[c.pos..c.pos + need];
        for k in 0..count {
            let s = if wide {
                u16::from_be_bytes([raster[2 * k], raster[2 * k + 1]])
            } else {
                u16::from(raster[k])
            };
            if u32::from(s) > maxval {
                return Err(Error::Parse {
                    offset: c.pos + k * if wide { 2 } else { 1 },
                    message: format!("sample {s} exceeds maxval {maxval}"),
                });
            }
            samples.push(s);
        }
    } else {
        for _ in 0..count {
            let at = {
                c.skip_space();
                c.pos
            };
            let s = c.number("sample")?;
            if s > maxval {
                return Err(Error::Parse {
                    offset: at,
                    message: format!("sample {s} exceeds maxval {maxval}"),
                });
            }
            samples.push(s as u16);
        }
    }
    Ok(Pnm {
        format,
        width,
        height,
        maxval: maxval as u16,
        samples,
    })
}

pub fn read(path: impl AsRef<Path>) -> Result<Pnm> {
    parse(&std::fs::read(path)?)
}

/// Raw graymap encoding; fails for pixmaps.
pub fn encode_p5(img: &Pnm) -> Result<Vec<u8>> {
    if img.channels() != 1 {
        return Err(shape("P5 output needs a single-channel image"));
    }
    let mut out = format!("P5\n{} {}\n{}\n", img.width, img.height, img.maxval).into_bytes();
    if img.maxval > 255 {
        out.extend(img.samples.iter().flat_map(|s| s.to_be_bytes()));
    } else {
        out.extend(img.samples.iter().map(|&s| s as u8));
    }
    Ok(out)
}

pub fn write_p5(path: impl AsRef<Path>, img: &Pnm) -> Result<()> {
    std::fs::write(path, encode_p5(img)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_graymap() {
        let img = parse(b"P2\n# two by two\n2 2\n255\n0 255\n0 255\n").unwrap();
        assert_eq!(img.format, Format::P2);
        assert_eq!(img.to_tensor().as_slice(), &[0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn raw_pixmap_and_wide_samples() {
        let mut bytes = b"P6 1 2 255\n".to_vec();
        bytes.extend([10, 20, 30, 40, 50, 60]);
        let img = parse(&bytes).unwrap();
        assert_eq!((img.height, img.width, img.channels()), (2, 1, 3));
        assert_eq!(img.samples, vec![10, 20, 30, 40, 50, 60]);

        let mut bytes = b"P5 2 1 1000\n".to_vec();
        bytes.extend([0x03, 0xE8, 0x00, 0x01]);
        assert_eq!(parse(&bytes).unwrap().samples, vec![1000, 1]);
    }

    #[test]
    fn p5_round_trip() {
        let img = Pnm {
            format: Format::P5,
            width: 3,
            height: 2,
            maxval: 255,
            samples: vec![0, 1, 2, 253, 254, 255],
        };
        assert_eq!(parse(&encode_p5(&img).unwrap()).unwrap(), img);
        let wide = Pnm {
            maxval: 4000,
            samples: vec![0, 4000, 17, 256, 3, 999],
            ..img
        };
        assert_eq!(parse(&encode_p5(&wide).unwrap()).unwrap(), wide);
    }

    #[test]
    fn errors_carry_offsets() {
        let off = |b: &[u8]| match parse(b) {
            Err(Error::Parse { offset, .. }) => offset,
            other => panic!("expected parse error, got {other:?}"),
        };
        assert_eq!(off(b"P4 1 1 1\n"), 0);
        assert_eq!(off(b"P5 2 2 255\n\x00\x01"), 13);
        assert_eq!(off(b"P2 2 1 9\n3 12\n"), 11);
        assert_eq!(off(b"P2 2 x"), 5);
        assert!(off(b"P2 2 2 255\n1 2 3") > 0);
        assert_eq!(off(b"P5 1 1 0\n\x00"), 7);
    }
}
