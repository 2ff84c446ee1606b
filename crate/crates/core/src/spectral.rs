//! 2D discrete Fourier transforms and spectral resampling.
//!
//! Spectra use the unshifted DFT layout: bin `k` of an `n`-point axis holds
//! signed frequency [`signed_bin`]`(k, n)`.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::grid::ComplexImage;
use crate::scalar::Real;

/// Signed frequency index of DFT bin `k` on an `n`-point axis, in `[-n/2, n/2)`.
#[inline]
pub fn signed_bin(k: usize, n: usize) -> isize {
    let half = n / 2;
    if k < n - half {
        k as isize
    } else {
        k as isize - n as isize
    }
}

/// DFT bin holding signed frequency `s` on an `n`-point axis.
#[inline]
pub fn bin_of(s: isize, n: usize) -> usize {
    s.rem_euclid(n as isize) as usize
}

/// Signed bin range `[lo, hi]` of the centered `m`-bin band (fftshift convention).
#[inline]
pub fn centered_band(m: usize) -> (isize, isize) {
    let lo = -((m / 2) as isize);
    (lo, lo + m as isize - 1)
}

fn transform_axes<T: Real>(buf: &mut [Complex<T>], width: usize, height: usize, inverse: bool) {
    let mut planner = FftPlanner::<T>::new();
    let (row_fft, col_fft) = if inverse {
        (
            planner.plan_fft_inverse(width),
            planner.plan_fft_inverse(height),
        )
    } else {
        (
            planner.plan_fft_forward(width),
            planner.plan_fft_forward(height),
        )
    };
    for row in buf.chunks_exact_mut(width) {
        row_fft.process(row);
    }
    let mut column = vec![Complex::new(T::zero(), T::zero()); height];
    for c in 0..width {
        for r in 0..height {
            column[r] = buf[r * width + c];
        }
        col_fft.process(&mut column);
        for r in 0..height {
            buf[r * width + c] = column[r];
        }
    }
}

/// Unnormalized forward 2D DFT, in place.
pub fn fft2<T: Real>(buf: &mut [Complex<T>], width: usize, height: usize) {
    transform_axes(buf, width, height, false);
}

/// Inverse 2D DFT scaled by `1 / (width * height)`, in place.
pub fn ifft2<T: Real>(buf: &mut [Complex<T>], width: usize, height: usize) {
    transform_axes(buf, width, height, true);
    let scale = T::one() / T::of((width * height) as f64);
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

pub fn spectrum<T: Real>(img: &ComplexImage<T>) -> Vec<Complex<T>> {
    let mut buf = img.to_complex();
    fft2(&mut buf, img.width, img.height);
    buf
}

pub fn from_spectrum<T: Real>(
    mut spec: Vec<Complex<T>>,
    width: usize,
    height: usize,
) -> ComplexImage<T> {
    ifft2(&mut spec, width, height);
    ComplexImage::from_complex(width, height, &spec)
}

/// Moves the centered `new_w x new_h` block of signed bins of `spec` into a
/// spectrum of the new size (cropping or zero-padding per axis).
pub fn resize_spectrum<T: Real>(
    spec: &[Complex<T>],
    width: usize,
    height: usize,
    new_w: usize,
    new_h: usize,
) -> Vec<Complex<T>> {
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = vec![zero; new_w * new_h];
    let (klo_x, khi_x) = centered_band(width.min(new_w));
    let (klo_y, khi_y) = centered_band(height.min(new_h));
    for sy in klo_y..=khi_y {
        let (src_r, dst_r) = (bin_of(sy, height), bin_of(sy, new_h));
        for sx in klo_x..=khi_x {
            out[dst_r * new_w + bin_of(sx, new_w)] = spec[src_r * width + bin_of(sx, width)];
        }
    }
    out
}

/// Band-limited interpolation by an integer factor (spectral zero-padding).
///
/// Sample values are preserved: `out[f*r, f*c] == img[r, c]` up to rounding
/// for band-limited inputs whose Nyquist bins are empty.
pub fn upsample<T: Real>(img: &ComplexImage<T>, factor: usize) -> ComplexImage<T> {
    assert!(factor >= 1);
    if factor == 1 {
        return img.clone();
    }
    let (w, h) = img.dims();
    let (nw, nh) = (w * factor, h * factor);
    let spec = spectrum(img);
    let mut padded = resize_spectrum(&spec, w, h, nw, nh);
    let gain = T::of((factor * factor) as f64);
    for v in padded.iter_mut() {
        *v *= gain;
    }
    from_spectrum(padded, nw, nh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signed_bins_cover_axis() {
        let s: Vec<isize> = (0..6).map(|k| signed_bin(k, 6)).collect();
        assert_eq!(s, vec![0, 1, 2, -3, -2, -1]);
        let s: Vec<isize> = (0..5).map(|k| signed_bin(k, 5)).collect();
        assert_eq!(s, vec![0, 1, 2, -2, -1]);
        for n in [5usize, 6, 64] {
            for k in 0..n {
                assert_eq!(bin_of(signed_bin(k, n), n), k);
            }
        }
    }

    #[test]
    fn centered_band_sizes() {
        assert_eq!(centered_band(4), (-2, 1));
        assert_eq!(centered_band(5), (-2, 2));
        assert_eq!(centered_band(1), (0, 0));
    }

    #[test]
    fn fft_roundtrip() {
        let img = ComplexImage::<f64>::from_complex(
            6,
            4,
            &(0..24)
                .map(|i| Complex::new((i as f64).sin(), (i as f64 * 0.3).cos()))
                .collect::<Vec<_>>(),
        );
        let back = from_spectrum(spectrum(&img), 6, 4);
        assert!(img.max_relative_diff(&back) < 1e-12);
    }

    #[test]
    fn upsample_keeps_samples_of_bandlimited_signal() {
        // Smooth signal with no energy at the Nyquist bin.
        let img = ComplexImage::<f64>::from_complex(
            8,
            8,
            &(0..64)
                .map(|i| {
                    let (r, c) = ((i / 8) as f64, (i % 8) as f64);
                    let t = std::f64::consts::TAU / 8.0;
                    Complex::new((t * r).cos() + (t * 2.0 * c).sin(), 0.5)
                })
                .collect::<Vec<_>>(),
        );
        let up = upsample(&img, 4);
        for r in 0..8 {
            for c in 0..8 {
                let i = r * 8 + c;
                let j = (4 * r) * 32 + 4 * c;
                assert!((up.re[j] - img.re[i]).abs() < 1e-12);
                assert!((up.im[j] - img.im[i]).abs() < 1e-12);
            }
        }
    }
}
