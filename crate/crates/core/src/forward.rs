//! Forward measurement model: speckle synthesis, band-limited transfer
//! function realized as a spectral mask, and thermal noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ComplexImage;
use crate::scalar::Real;
use crate::scene::{AcquisitionMetadata, ReflectivityScene, Split};
use crate::spectral::{self, centered_band, signed_bin};
use crate::window::WindowKind;

/// Lower clamp of the bandwidth fraction derived from metadata.
pub const MIN_BANDWIDTH: f64 = 1e-3;

/// Parametric SAR transfer function. Axis 0 is horizontal (columns), axis 1
/// vertical (rows).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferSpec {
    pub windows: [WindowKind; 2],
    pub bandwidth: [f64; 2],
    /// Rotation of the spectral support, degrees.
    pub squint: f64,
    /// Pixel spacing, meters.
    pub pixel_spacing: f64,
}

impl TransferSpec {
    pub fn identity() -> Self {
        Self::separable(WindowKind::Rect, 1.0)
    }

    /// Same window and bandwidth on both axes, no squint.
    pub fn separable(window: WindowKind, bandwidth: f64) -> Self {
        Self {
            windows: [window; 2],
            bandwidth: [bandwidth; 2],
            squint: 0.0,
            pixel_spacing: 0.15,
        }
    }

    pub fn with_windows(mut self, window: WindowKind) -> Self {
        self.windows = [window; 2];
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (b, w) in self.bandwidth.iter().zip(&self.windows) {
            if !(*b > 0.0 && *b <= 1.0) {
                return Err(Error::Config(format!(
                    "bandwidth fraction {b} not in (0, 1]"
                )));
            }
            w.validate()?;
        }
        if !self.squint.is_finite() {
            return Err(Error::Config("squint must be finite".into()));
        }
        Ok(())
    }
}

/// Number of DFT bins in a band of fraction `bandwidth` on an `n`-point axis.
pub fn band_bins(bandwidth: f64, n: usize) -> usize {
    ((bandwidth * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
}

/// Real spectral weights in unshifted DFT layout.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyMask<T> {
    pub width: usize,
    pub height: usize,
    pub weights: Vec<T>,
}

/// Per-bin window weight, `None` outside the (rotated) band support.
pub(crate) fn band_weights(spec: &TransferSpec, width: usize, height: usize) -> Vec<Option<f64>> {
    let (sin, cos) = spec.squint.to_radians().sin_cos();
    let (lo_x, hi_x) = centered_band(band_bins(spec.bandwidth[0], width));
    let (lo_y, hi_y) = centered_band(band_bins(spec.bandwidth[1], height));
    let inside =
        |u_bins: f64, lo: isize, hi: isize| lo as f64 - 0.5 <= u_bins && u_bins < hi as f64 + 0.5;
    let mut out = Vec::with_capacity(width * height);
    for ky in 0..height {
        let fy = signed_bin(ky, height) as f64 / height as f64;
        for kx in 0..width {
            let fx = signed_bin(kx, width) as f64 / width as f64;
            // Coordinates in the frame of the unrotated band.
            let ux = cos * fx + sin * fy;
            let uy = -sin * fx + cos * fy;
            let (ux_bins, uy_bins) = (ux * width as f64, uy * height as f64);
            let (ux_bins, uy_bins) = if spec.squint == 0.0 {
                (signed_bin(kx, width) as f64, signed_bin(ky, height) as f64)
            } else {
                (ux_bins, uy_bins)
            };
            if inside(ux_bins, lo_x, hi_x) && inside(uy_bins, lo_y, hi_y) {
                let w = spec.windows[0].weight(ux, spec.bandwidth[0])
                    * spec.windows[1].weight(uy, spec.bandwidth[1]);
                out.push(Some(w.clamp(0.0, 1.0)));
            } else {
                out.push(None);
            }
        }
    }
    out
}

pub fn build_mask<T: Real>(
    spec: &TransferSpec,
    width: usize,
    height: usize,
) -> Result<FrequencyMask<T>> {
    spec.validate()?;
    let weights = band_weights(spec, width, height)
        .into_iter()
        .map(|w| T::of(w.unwrap_or(0.0)))
        .collect();
    Ok(FrequencyMask {
        width,
        height,
        weights,
    })
}

/// Maps acquisition metadata to a transfer function: bandwidth fraction is
/// `pixel_spacing / resolution` per axis, clamped to `[MIN_BANDWIDTH, 1]`.
pub fn metadata_to_transfer(
    m: &AcquisitionMetadata,
    pixel_spacing: f64,
    window: WindowKind,
) -> TransferSpec {
    let beta = (pixel_spacing / m.resolution).clamp(MIN_BANDWIDTH, 1.0);
    TransferSpec {
        windows: [window; 2],
        bandwidth: [beta; 2],
        squint: m.squint,
        pixel_spacing,
    }
}

/// Circulant convolution with the mask: `IFFT(mask * FFT(z))`.
pub fn apply_transfer<T: Real>(
    z: &ComplexImage<T>,
    mask: &FrequencyMask<T>,
) -> Result<ComplexImage<T>> {
    if z.dims() != (mask.width, mask.height) {
        return Err(Error::DimensionMismatch {
            expected: (mask.width, mask.height),
            found: z.dims(),
        });
    }
    let mut spec = spectral::spectrum(z);
    for (s, &w) in spec.iter_mut().zip(&mask.weights) {
        *s *= w;
    }
    Ok(spectral::from_spectrum(spec, z.width, z.height))
}

fn circular_gaussian(rng: &mut ChaCha8Rng, power: f64) -> (f64, f64) {
    let sd = (0.5 * power).sqrt();
    let a: f64 = StandardNormal.sample(rng);
    let b: f64 = StandardNormal.sample(rng);
    (sd * a, sd * b)
}

/// Fully developed speckle: `z_k = sqrt(x_k) * n_k`, `n_k ~ CN(0, 1)`.
pub fn synth_speckle<T: Real>(seed: u64, x: &ReflectivityScene<T>) -> Result<ComplexImage<T>> {
    if let Some(v) = x.values.data.iter().find(|v| !(**v >= T::zero())) {
        return Err(Error::Domain(format!("negative or NaN reflectivity {v}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ComplexImage::zeros(x.width, x.height);
    for (i, v) in x.values.data.iter().enumerate() {
        let (a, b) = circular_gaussian(&mut rng, 1.0);
        let amp = v.to_f64c().sqrt();
        out.re[i] = T::of(amp * a);
        out.im[i] = T::of(amp * b);
    }
    Ok(out)
}

/// Adds `CN(0, sigma^2)` noise with `sigma^2 = 10^(noise_db/10) * scene_mean_intensity`.
pub fn add_thermal_noise<T: Real>(
    seed: u64,
    y: &ComplexImage<T>,
    noise_db: f64,
    scene_mean_intensity: f64,
) -> Result<ComplexImage<T>> {
    if !(scene_mean_intensity > 0.0) {
        return Err(Error::Domain(format!(
            "scene mean intensity must be > 0, got {scene_mean_intensity}"
        )));
    }
    let power = 10f64.powf(noise_db / 10.0) * scene_mean_intensity;
    if power == 0.0 {
        return Ok(y.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = y.clone();
    for i in 0..out.re.len() {
        let (a, b) = circular_gaussian(&mut rng, power);
        out.re[i] += T::of(a);
        out.im[i] += T::of(b);
    }
    Ok(out)
}

/// Forward-model settings shared by a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForwardConfig {
    /// Meters.
    pub pixel_spacing: f64,
    pub window: WindowKind,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        Self {
            pixel_spacing: 0.15,
            window: WindowKind::Rect,
        }
    }
}

/// One dataset record: observed SLC `y`, pre-transfer SLC `z`, reflectivity
/// `x`, and metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTuple<T> {
    pub x: ReflectivityScene<T>,
    pub z: ComplexImage<T>,
    pub y: ComplexImage<T>,
    pub m: AcquisitionMetadata,
    pub seed: u64,
    pub split: Split,
}

impl<T: Real> SampleTuple<T> {
    pub fn dims(&self) -> (usize, usize) {
        (self.x.width, self.x.height)
    }

    pub fn cast<U: Real>(&self) -> SampleTuple<U> {
        SampleTuple {
            x: self.x.cast(),
            z: self.z.cast(),
            y: self.y.cast(),
            m: self.m,
            seed: self.seed,
            split: self.split,
        }
    }
}

/// SplitMix64 finalizer, used to derive independent per-stage seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Speckle, then transfer function from metadata, then thermal noise.
pub fn simulate_tuple<T: Real>(
    seed: u64,
    x: &ReflectivityScene<T>,
    m: &AcquisitionMetadata,
    cfg: &ForwardConfig,
) -> Result<SampleTuple<T>> {
    let spec = metadata_to_transfer(m, cfg.pixel_spacing, cfg.window);
    simulate_with_transfer(seed, x, m, &spec)
}

/// As [`simulate_tuple`] with an explicit transfer function.
pub fn simulate_with_transfer<T: Real>(
    seed: u64,
    x: &ReflectivityScene<T>,
    m: &AcquisitionMetadata,
    spec: &TransferSpec,
) -> Result<SampleTuple<T>> {
    let z = synth_speckle(derive_seed(seed, 1), x)?;
    let mask = build_mask(spec, x.width, x.height)?;
    let blurred = apply_transfer(&z, &mask)?;
    let mean_intensity = x.values.mean();
    let y = if mean_intensity > 0.0 {
        add_thermal_noise(
            derive_seed(seed, 2),
            &blurred,
            m.noise_level,
            mean_intensity,
        )?
    } else {
        blurred
    };
    Ok(SampleTuple {
        x: x.clone(),
        z,
        y,
        m: *m,
        seed,
        split: Split::Train,
    })
}

/// Lag-1 horizontal autocorrelation coefficient of a real grid.
pub fn lag1_autocorrelation(values: &[f64], width: usize, height: usize) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    let mut acc = 0.0;
    let mut n = 0usize;
    for r in 0..height {
        for c in 0..width - 1 {
            acc += (values[r * width + c] - mean) * (values[r * width + c + 1] - mean);
            n += 1;
        }
    }
    acc / n as f64 / var
}
