//! Binary tuple files: `SART`, version, width, height, then five row-major
//! little-endian f32 planes `x, z.re, z.im, y.re, y.im`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::forward::SampleTuple;
use crate::grid::{ComplexImage, Grid};

pub const SAMPLE_MAGIC: &[u8; 4] = b"SART";
pub const SAMPLE_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

/// The image content of a sample file.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleImages {
    pub x: Grid<f32>,
    pub z: ComplexImage<f32>,
    pub y: ComplexImage<f32>,
}

impl SampleImages {
    pub fn of(s: &SampleTuple<f32>) -> Self {
        Self {
            x: s.x.values.clone(),
            z: s.z.clone(),
            y: s.y.clone(),
        }
    }
}

pub fn encode_sample(s: &SampleImages) -> Result<Vec<u8>> {
    let (w, h) = s.x.dims();
    s.z.ensure_same_dims(&s.y)?;
    if s.z.dims() != (w, h) {
        return Err(Error::DimensionMismatch {
            expected: (w, h),
            found: s.z.dims(),
        });
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 20 * w * h);
    out.extend_from_slice(SAMPLE_MAGIC);
    out.extend_from_slice(&SAMPLE_VERSION.to_le_bytes());
    out.extend_from_slice(&(w as u32).to_le_bytes());
    out.extend_from_slice(&(h as u32).to_le_bytes());
    for plane in [&s.x.data, &s.z.re, &s.z.im, &s.y.re, &s.y.im] {
        for v in plane.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub(crate) fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

pub(crate) fn read_f32s(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect()
}

pub fn decode_sample(bytes: &[u8]) -> Result<SampleImages> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    if &bytes[..4] != SAMPLE_MAGIC {
        return Err(Error::Format(format!(
            "bad sample magic {:?}",
            String::from_utf8_lossy(&bytes[..4])
        )));
    }
    let version = read_u32(bytes, 4);
    if version != SAMPLE_VERSION {
        return Err(Error::VersionMismatch {
            expected: SAMPLE_VERSION,
            found: version,
        });
    }
    let (w, h) = (read_u32(bytes, 8) as usize, read_u32(bytes, 12) as usize);
    let n = w * h;
    let expected = HEADER_LEN + 20 * n;
    if bytes.len() != expected {
        if bytes.len() < expected {
            return Err(Error::Truncated {
                expected,
                actual: bytes.len(),
            });
        }
        return Err(Error::Format(format!(
            "{} trailing bytes after payload",
            bytes.len() - expected
        )));
    }
    let mut planes = read_f32s(&bytes[HEADER_LEN..]).into_iter();
    let mut take = || -> Vec<f32> { planes.by_ref().take(n).collect() };
    let x = Grid::from_vec(w, h, take())?;
    let z = ComplexImage::from_parts(Grid::from_vec(w, h, take())?, Grid::from_vec(w, h, take())?)?;
    let y = ComplexImage::from_parts(Grid::from_vec(w, h, take())?, Grid::from_vec(w, h, take())?)?;
    Ok(SampleImages { x, z, y })
}

pub fn write_sample(path: &Path, s: &SampleImages) -> Result<()> {
    std::fs::write(path, encode_sample(s)?)?;
    Ok(())
}

pub fn read_sample(path: &Path) -> Result<SampleImages> {
    decode_sample(&std::fs::read(path)?)
}

/// Reads a complex image stored as two headerless little-endian f32 files.
pub fn read_raw_pair(
    re: &Path,
    im: &Path,
    width: usize,
    height: usize,
) -> Result<ComplexImage<f32>> {
    let load = |p: &Path| -> Result<Grid<f32>> {
        let bytes = std::fs::read(p)?;
        let expected = 4 * width * height;
        if bytes.len() != expected {
            return Err(Error::Truncated {
                expected,
                actual: bytes.len(),
            });
        }
        Grid::from_vec(width, height, read_f32s(&bytes))
    };
    ComplexImage::from_parts(load(re)?, load(im)?)
}

pub fn write_raw(path: &Path, g: &Grid<f32>) -> Result<()> {
    let bytes: Vec<u8> = g.data.iter().flat_map(|v| v.to_le_bytes()).collect();
    std::fs::write(path, bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn images() -> SampleImages {
        let g = |k: f32| {
            Grid::from_fn(5, 3, |r, c| {
                k * (r as f32 - 0.3 * c as f32) + f32::EPSILON * k
            })
        };
        SampleImages {
            x: g(1.0),
            z: ComplexImage::from_parts(g(-2.0), g(3.5)).unwrap(),
            y: ComplexImage::from_parts(g(0.25), g(-1e-7)).unwrap(),
        }
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let s = images();
        let back = decode_sample(&encode_sample(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn truncated_names_sizes() {
        let bytes = encode_sample(&images()).unwrap();
        let err = decode_sample(&bytes[..bytes.len() - 3]).unwrap_err();
        assert!(
            matches!(err, Error::Truncated { expected, actual } if expected == bytes.len() && actual == bytes.len() - 3)
        );
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = encode_sample(&images()).unwrap();
        let mut wrong = bytes.clone();
        wrong[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode_sample(&wrong), Err(Error::Format(_))));
        bytes[4] = 9;
        assert!(matches!(
            decode_sample(&bytes),
            Err(Error::VersionMismatch { found: 9, .. })
        ));
    }
}
