//! 8-bit PNG previews on a logarithmic scale. Presentation only.

use std::io::BufWriter;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Real;

pub const DEFAULT_DYNAMIC_RANGE_DB: f64 = 40.0;

/// Maps intensity-like values to gray levels: the per-image maximum is
/// white and values `range_db` or more below it are black.
pub fn to_gray<T: Real>(g: &Grid<T>, range_db: f64) -> Result<Vec<u8>> {
    if !(range_db > 0.0) {
        return Err(Error::Config(format!(
            "dynamic range must be > 0 dB, got {range_db}"
        )));
    }
    let max = g.data.iter().map(|v| v.to_f64c()).fold(0.0f64, f64::max);
    Ok(g.data
        .iter()
        .map(|v| {
            let v = v.to_f64c();
            if max <= 0.0 || v <= 0.0 {
                return 0;
            }
            let db = (10.0 * (v / max).log10()).max(-range_db);
            (255.0 * (db + range_db) / range_db).round() as u8
        })
        .collect())
}

pub fn write_png<T: Real>(path: &Path, g: &Grid<T>, range_db: f64) -> Result<()> {
    let pixels = to_gray(g, range_db)?;
    let file = std::fs::File::create(path)?;
    let mut enc = png::Encoder::new(BufWriter::new(file), g.width as u32, g.height as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::Eight);
    let mut w = enc
        .write_header()
        .map_err(|e| Error::Format(e.to_string()))?;
    w.write_image_data(&pixels)
        .map_err(|e| Error::Format(e.to_string()))?;
    w.finish().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}
