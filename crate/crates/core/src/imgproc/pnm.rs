//! Binary PGM (P5) and PPM (P6) codecs, maxval 255.

use std::io::{Read, Write};
use std::path::Path;

use super::{Raster, Semantics};
use crate::{Error, Result};

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 || bytes[0] != b'P' || !(bytes[1] == b'5' || bytes[1] == b'6') {
        return Err(Error::Format("not a binary PGM/PPM (expected P5 or P6)".into()));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&c| c != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::Format("truncated header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|c| c.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("expected a number in header".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("header number out of range".into()))?;
    }
    if !bytes.get(pos).is_some_and(|c| c.is_ascii_whitespace()) {
        return Err(Error::Format("missing whitespace after maxval".into()));
    }
    if fields[2] != 255 {
        return Err(Error::Format(format!("unsupported maxval {}", fields[2])));
    }
    if fields[0] == 0 || fields[1] == 0 {
        return Err(Error::Format("zero image dimension".into()));
    }
    Ok(Header { magic: [bytes[0], bytes[1]], width: fields[0], height: fields[1], data_start: pos + 1 })
}

/// Decodes P5 to a gray raster and P6 to an RGB raster.
pub fn decode(bytes: &[u8]) -> Result<Raster> {
    let hdr = parse_header(bytes)?;
    let planes = if hdr.magic[1] == b'5' { 1 } else { 3 };
    let n = hdr.width * hdr.height;
    let payload = &bytes[hdr.data_start..];
    if payload.len() < n * planes {
        return Err(Error::Format(format!("truncated pixel data: {} of {} bytes", payload.len(), n * planes)));
    }
    if planes == 1 {
        return Raster::new(hdr.width, hdr.height, Semantics::Gray, payload[..n].to_vec());
    }
    let mut data = vec![0u8; 3 * n];
    for i in 0..n {
        for c in 0..3 {
            data[c * n + i] = payload[3 * i + c];
        }
    }
    Raster::new(hdr.width, hdr.height, Semantics::Rgb, data)
}

/// Single-plane rasters become P5, three-plane rasters P6.
pub fn encode(img: &Raster) -> Vec<u8> {
    let magic = if img.planes() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    if img.planes() == 1 {
        out.extend_from_slice(img.data());
    } else {
        let n = img.width() * img.height();
        out.reserve(3 * n);
        for i in 0..n {
            for c in 0..3 {
                out.push(img.data()[c * n + i]);
            }
        }
    }
    out
}

pub fn read(path: &Path) -> Result<Raster> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn write(path: &Path, img: &Raster) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode(img))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_with_comment() {
        let mut bytes = b"P5\n# made by hand\n2 1\n255\n".to_vec();
        bytes.extend([7, 9]);
        let img = decode(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (2, 1));
        assert_eq!(img.data(), &[7, 9]);
    }

    #[test]
    fn truncated_and_bad_maxval() {
        assert!(matches!(decode(b"P5\n4 4\n255\n\x00\x01"), Err(Error::Format(_))));
        assert!(matches!(decode(b"P5\n1 1\n65535\n\x00\x00"), Err(Error::Format(_))));
        assert!(matches!(decode(b"P2\n1 1\n255\n0"), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(w in 1usize..9, h in 1usize..9, rgb in any::<bool>(), seed in any::<u64>()) {
            let sem = if rgb { Semantics::Rgb } else { Semantics::Gray };
            let n = w * h * sem.planes();
            let data: Vec<u8> = (0..n).map(|i| (seed.wrapping_mul(6364136223846793005).wrapping_add((i as u64).wrapping_mul(1442695040888963407)) >> 33) as u8).collect();
            let img = Raster::new(w, h, sem, data).unwrap();
            let bytes = encode(&img);
            prop_assert_eq!(decode(&bytes).unwrap(), img.clone());
            prop_assert_eq!(encode(&decode(&bytes).unwrap()), bytes);
        }
    }
}
