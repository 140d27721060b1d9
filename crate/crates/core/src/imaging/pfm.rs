//! Portable float map (PFM) reader and writer.
//!
//! Layout: a magic line (`PF` for 3-channel, `Pf` for 1-channel), a
//! dimensions line `width height`, and a scale line whose sign encodes the
//! payload byte order (negative = little-endian). The binary payload stores
//! rows bottom-to-top, each row left-to-right with interleaved channels,
//! 32-bit IEEE floats.
//!
//! Writing always emits scale `-1.0`; a write/read round trip reproduces
//! every sample bit-exactly, subnormals and NaN payloads included.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::FloatImage;

pub fn write_pfm(image: &FloatImage, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_pfm_to(image, &mut w)
}

pub fn write_pfm_to(image: &FloatImage, w: &mut impl Write) -> Result<()> {
    let magic = if image.channels() == 3 { "PF" } else { "Pf" };
    write!(w, "{}\n{} {}\n-1.0\n", magic, image.width(), image.height())?;
    let row_len = image.width() * image.channels();
    for y in (0..image.height()).rev() {
        let row = &image.data()[y * row_len..(y + 1) * row_len];
        for &v in row {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_pfm(path: &Path) -> Result<FloatImage> {
    let mut r = BufReader::new(File::open(path)?);
    read_pfm_from(&mut r)
}

pub fn read_pfm_from(r: &mut impl Read) -> Result<FloatImage> {
    let magic = read_token(r)?;
    let channels = match magic.as_str() {
        "PF" => 3,
        "Pf" => 1,
        other => {
            return Err(Error::MalformedPfm(format!(
                "bad magic {other:?}; expected \"PF\" or \"Pf\""
            )))
        }
    };
    let width: usize = parse_token(r, "width")?;
    let height: usize = parse_token(r, "height")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedPfm(format!(
            "non-positive dimensions {width}x{height}"
        )));
    }
    let scale: f64 = parse_token(r, "scale")?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::MalformedPfm(format!("invalid scale {scale}")));
    }
    let little_endian = scale < 0.0;
    let magnitude = scale.abs() as f32;

    let row_len = width * channels;
    let mut payload = vec![0u8; row_len * height * 4];
    r.read_exact(&mut payload)
        .map_err(|e| Error::MalformedPfm(format!("truncated payload: {e}")))?;

    let mut data = vec![0.0f32; row_len * height];
    for y in 0..height {
        // Payload rows run bottom-to-top.
        let src_row = height - 1 - y;
        for i in 0..row_len {
            let off = (src_row * row_len + i) * 4;
            let bytes = [
                payload[off],
                payload[off + 1],
                payload[off + 2],
                payload[off + 3],
            ];
            let v = if little_endian {
                f32::from_le_bytes(bytes)
            } else {
                f32::from_be_bytes(bytes)
            };
            data[y * row_len + i] = if magnitude == 1.0 { v } else { v * magnitude };
        }
    }
    FloatImage::from_data(width, height, channels, data)
}

/// Reads one whitespace-terminated ASCII token. Exactly one whitespace byte
/// separates the scale token from the binary payload.
fn read_token(r: &mut impl Read) -> Result<String> {
    let mut tok = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            if tok.is_empty() {
                return Err(Error::MalformedPfm("unexpected end of header".to_string()));
            }
            break;
        }
        if byte[0].is_ascii_whitespace() {
            if tok.is_empty() {
                continue; // skip leading whitespace
            }
            break;
        }
        tok.push(byte[0]);
        if tok.len() > 64 {
            return Err(Error::MalformedPfm("oversized header token".to_string()));
        }
    }
    String::from_utf8(tok).map_err(|_| Error::MalformedPfm("non-ASCII header".to_string()))
}

fn parse_token<T: std::str::FromStr>(r: &mut impl Read, what: &str) -> Result<T> {
    let tok = read_token(r)?;
    tok.parse()
        .map_err(|_| Error::MalformedPfm(format!("cannot parse {what} from {tok:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(img: &FloatImage) -> FloatImage {
        let mut buf = Vec::new();
        write_pfm_to(img, &mut buf).unwrap();
        read_pfm_from(&mut buf.as_slice()).unwrap()
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let img = FloatImage::from_data(2, 2, 1, vec![0.0, 0.5, 1.0, 2.0]).unwrap();
        assert_eq!(roundtrip(&img), img);
    }

    #[test]
    fn roundtrip_preserves_special_bit_patterns() {
        let vals = vec![
            f32::from_bits(0x0000_0001), // smallest subnormal
            f32::from_bits(0x807f_ffff), // negative subnormal
            f32::NAN,
            -0.0,
            f32::MAX,
            f32::MIN_POSITIVE,
        ];
        let img = FloatImage::from_data(3, 2, 1, vals.clone()).unwrap();
        let back = roundtrip(&img);
        for (a, b) in back.data().iter().zip(&vals) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn three_channel_uses_pf_magic() {
        let img = FloatImage::from_data(1, 1, 3, vec![0.1, 0.2, 0.3]).unwrap();
        let mut buf = Vec::new();
        write_pfm_to(&img, &mut buf).unwrap();
        assert!(buf.starts_with(b"PF\n"));
        assert_eq!(read_pfm_from(&mut buf.as_slice()).unwrap(), img);
    }

    #[test]
    fn rows_are_stored_bottom_first() {
        // 1x2 image: top pixel 1.0, bottom pixel 2.0.
        let img = FloatImage::from_data(1, 2, 1, vec![1.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        write_pfm_to(&img, &mut buf).unwrap();
        let header_len = b"Pf\n1 2\n-1.0\n".len();
        let first = f32::from_le_bytes(buf[header_len..header_len + 4].try_into().unwrap());
        assert_eq!(first, 2.0);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let img = FloatImage::from_data(2, 2, 1, vec![0.0; 4]).unwrap();
        let mut buf = Vec::new();
        write_pfm_to(&img, &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(
            read_pfm_from(&mut buf.as_slice()),
            Err(Error::MalformedPfm(_))
        ));
    }

    #[test]
    fn bad_magic_and_scale_are_rejected() {
        assert!(read_pfm_from(&mut &b"P6\n1 1\n-1.0\nxxxx"[..]).is_err());
        assert!(read_pfm_from(&mut &b"Pf\n1 1\n0.0\nxxxx"[..]).is_err());
    }

    #[test]
    fn big_endian_scale_is_honored() {
        let mut buf: Vec<u8> = b"Pf\n1 1\n1.0\n".to_vec();
        buf.extend_from_slice(&1.5f32.to_be_bytes());
        let img = read_pfm_from(&mut buf.as_slice()).unwrap();
        assert_eq!(img.data()[0], 1.5);
    }
}
