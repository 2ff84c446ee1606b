//! Classical sidelobe reduction: spectral re-windowing and separable
//! Spatially Variant Apodization (SVA).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{band_bins, band_weights, TransferSpec};
use crate::grid::ComplexImage;
use crate::metrics::{self, MainlobeBox, Region};
use crate::scalar::Real;
use crate::spectral;

/// Minimum source-window weight, relative to its peak, accepted by [`reapodize`].
pub const REAPODIZE_EPS: f64 = 1e-3;

/// Replaces the spectral weighting `from` by `to` on their shared support.
pub fn reapodize<T: Real>(
    y: &ComplexImage<T>,
    from: &TransferSpec,
    to: &TransferSpec,
) -> Result<ComplexImage<T>> {
    from.validate()?;
    to.validate()?;
    let (w, h) = y.dims();
    let same_support = [w, h]
        .iter()
        .enumerate()
        .all(|(a, &n)| band_bins(from.bandwidth[a], n) == band_bins(to.bandwidth[a], n))
        && from.squint == to.squint;
    if !same_support {
        return Err(Error::Config(
            "reapodize: source and target band supports differ".into(),
        ));
    }
    let wf = band_weights(from, w, h);
    let wt = band_weights(to, w, h);
    let peak = wf.iter().flatten().copied().fold(0.0, f64::max);
    let mut gain = Vec::with_capacity(w * h);
    for (f, t) in wf.iter().zip(&wt) {
        match (f, t) {
            (Some(f), Some(t)) => {
                if *f < REAPODIZE_EPS * peak {
                    return Err(Error::IllConditioned(format!(
                        "source window weight {f:.3e} below {REAPODIZE_EPS} of peak"
                    )));
                }
                gain.push(T::of(t / f));
            }
            _ => gain.push(T::zero()),
        }
    }
    let mut spec = spectral::spectrum(y);
    for (s, g) in spec.iter_mut().zip(gain) {
        *s *= g;
    }
    Ok(spectral::from_spectrum(spec, w, h))
}

/// Crops the centered band of `spec` out of the spectrum and resamples onto a
/// `ceil(β·N)` grid per axis, preserving sample amplitudes.
pub fn extract_band<T: Real>(y: &ComplexImage<T>, spec: &TransferSpec) -> Result<ComplexImage<T>> {
    spec.validate()?;
    if spec.squint != 0.0 {
        return Err(Error::Unsupported(format!(
            "extract_band needs an unrotated support, squint is {}",
            spec.squint
        )));
    }
    let (w, h) = y.dims();
    let (nw, nh) = (
        band_bins(spec.bandwidth[0], w),
        band_bins(spec.bandwidth[1], h),
    );
    if (nw, nh) == (w, h) {
        return Ok(y.clone());
    }
    let full = spectral::spectrum(y);
    let mut band = spectral::resize_spectrum(&full, w, h, nw, nh);
    let scale = T::of((nw * nh) as f64 / (w * h) as f64);
    for v in band.iter_mut() {
        *v *= scale;
    }
    Ok(spectral::from_spectrum(band, nw, nh))
}

/// Three-case SVA rule on one sample with neighbor sum `s`.
#[inline]
pub fn sva_sample<T: Real>(a: T, s: T) -> T {
    if s == T::zero() {
        return a;
    }
    let w = -a / s;
    let half = T::of(0.5);
    if w <= T::zero() {
        a
    } else if w < half {
        T::zero()
    } else {
        a + half * s
    }
}

fn sva_line<T: Real>(input: &[T], out: &mut [T]) {
    let n = input.len();
    out.copy_from_slice(input);
    for k in 1..n.saturating_sub(1) {
        out[k] = sva_sample(input[k], input[k - 1] + input[k + 1]);
    }
}

fn sva_rows<T: Real>(plane: &[T], width: usize) -> Vec<T> {
    let mut out = vec![T::zero(); plane.len()];
    for (src, dst) in plane.chunks_exact(width).zip(out.chunks_exact_mut(width)) {
        sva_line(src, dst);
    }
    out
}

fn transpose<T: Real>(plane: &[T], width: usize, height: usize) -> Vec<T> {
    let mut out = vec![T::zero(); plane.len()];
    for r in 0..height {
        for c in 0..width {
            out[c * height + r] = plane[r * width + c];
        }
    }
    out
}

/// Separable Nyquist-rate SVA: rows then columns, real and imaginary parts
/// independently. Border samples pass through.
pub fn sva<T: Real>(y: &ComplexImage<T>) -> ComplexImage<T> {
    let (w, h) = y.dims();
    let pass = |plane: &[T]| {
        let rows = sva_rows(plane, w);
        transpose(&sva_rows(&transpose(&rows, w, h), h), h, w)
    };
    ComplexImage {
        width: w,
        height: h,
        re: pass(&y.re),
        im: pass(&y.im),
    }
}

/// How impulse-response ratios are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImpulseMeasure {
    /// Band-limited interpolation factor applied before measuring.
    pub upsample: usize,
    /// Mainlobe half-size in (upsampled) samples; `None` detects the
    /// null-to-null extent.
    pub mainlobe_half: Option<usize>,
}

impl Default for ImpulseMeasure {
    fn default() -> Self {
        Self {
            upsample: 8,
            mainlobe_half: None,
        }
    }
}

/// Peak amplitude, PSLR and ISLR (dB) of a complex impulse image.
pub fn impulse_ratios<T: Real>(
    img: &ComplexImage<T>,
    how: ImpulseMeasure,
) -> Result<(f64, f64, f64)> {
    let amp = spectral::upsample(img, how.upsample).amplitude();
    let peak_at = metrics::find_peak(&amp)?;
    let lobe = match how.mainlobe_half {
        Some(half) => MainlobeBox::around(&amp, peak_at, half),
        None => metrics::find_mainlobe(&amp)?,
    };
    let (pslr, islr) = metrics::pslr_islr(&amp, lobe)?;
    Ok((amp.get(peak_at.0, peak_at.1).to_f64c(), pslr, islr))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApodizationReport {
    pub peak_before: f64,
    pub peak_after: f64,
    pub pslr_before: f64,
    pub pslr_after: f64,
    pub islr_before: f64,
    pub islr_after: f64,
    /// Relative change of mean amplitude over the homogeneous region.
    pub mean_bias: Option<f64>,
}

impl ApodizationReport {
    pub fn compute<T: Real>(
        before: &ComplexImage<T>,
        after: &ComplexImage<T>,
        how: ImpulseMeasure,
        homogeneous: Option<Region>,
    ) -> Result<Self> {
        let (peak_before, pslr_before, islr_before) = impulse_ratios(before, how)?;
        let (peak_after, pslr_after, islr_after) = impulse_ratios(after, how)?;
        let mean_bias = homogeneous
            .map(|region| -> Result<f64> {
                let mb = region_mean(&before.amplitude().data, before.width, region)?;
                let ma = region_mean(&after.amplitude().data, after.width, region)?;
                Ok((ma - mb) / mb)
            })
            .transpose()?;
        Ok(Self {
            peak_before,
            peak_after,
            pslr_before,
            pslr_after,
            islr_before,
            islr_after,
            mean_bias,
        })
    }
}

/// Mean of `values` over `region` of a row-major grid of the given width.
pub fn region_mean<T: Real>(values: &[T], width: usize, region: Region) -> Result<f64> {
    let height = values.len() / width.max(1);
    if region.row + region.height > height
        || region.col + region.width > width
        || region.height * region.width == 0
    {
        return Err(Error::Config("region exceeds image bounds".into()));
    }
    let mut acc = 0.0;
    for r in region.row..region.row + region.height {
        for c in region.col..region.col + region.width {
            acc += values[r * width + c].to_f64c();
        }
    }
    Ok(acc / (region.height * region.width) as f64)
}
