//! Image quality metrics: PSNR, SSIM, ENL, MAE and impulse-response
//! sidelobe ratios.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexImage, Grid};
use crate::scalar::Real;

/// Reported PSNR when the estimate matches the reference exactly.
pub const PSNR_SENTINEL_DB: f64 = 999.0;
/// Reported sidelobe ratio when there is no sidelobe energy at all.
pub const SIDELOBE_FLOOR_DB: f64 = -999.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Minimum side length of an ENL region.
pub const ENL_MIN_SIDE: usize = 16;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub psnr: f64,
    pub ssim: f64,
    pub enl: Option<f64>,
    pub mae: f64,
    pub pslr: Option<f64>,
    pub islr: Option<f64>,
}

/// `10 log10(max(reference)^2 / MSE)`, capped at [`PSNR_SENTINEL_DB`].
pub fn psnr<T: Real>(reference: &Grid<T>, estimate: &Grid<T>) -> Result<f64> {
    reference.ensure_same_dims(estimate)?;
    let first = reference.data.first().copied().unwrap_or_else(T::zero);
    if reference.data.iter().all(|&v| v == first) {
        return Err(Error::DegenerateReference("reference is constant".into()));
    }
    let mse = mse(reference, estimate);
    if mse == 0.0 {
        return Ok(PSNR_SENTINEL_DB);
    }
    let peak = reference.max().to_f64c();
    Ok((10.0 * (peak * peak / mse).log10()).min(PSNR_SENTINEL_DB))
}

fn mse<T: Real>(a: &Grid<T>, b: &Grid<T>) -> f64 {
    a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x.to_f64c() - y.to_f64c()).powi(2))
        .sum::<f64>()
        / a.data.len() as f64
}

pub fn mae<T: Real>(reference: &Grid<T>, estimate: &Grid<T>) -> Result<f64> {
    reference.ensure_same_dims(estimate)?;
    Ok(reference
        .data
        .iter()
        .zip(&estimate.data)
        .map(|(x, y)| (x.to_f64c() - y.to_f64c()).abs())
        .sum::<f64>()
        / reference.data.len() as f64)
}

fn gaussian_window() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as f64;
    let g: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| (-(i as f64 - half).powi(2) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

/// Separable "valid" filtering of a row-major f64 image with a symmetric kernel.
fn filter_valid(data: &[f64], width: usize, height: usize, k: &[f64]) -> (Vec<f64>, usize, usize) {
    let n = k.len();
    let (ow, oh) = (width + 1 - n, height + 1 - n);
    let mut tmp = vec![0.0; ow * height];
    for r in 0..height {
        let row = &data[r * width..(r + 1) * width];
        for c in 0..ow {
            tmp[r * ow + c] = k.iter().zip(&row[c..c + n]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = k
                .iter()
                .enumerate()
                .map(|(i, a)| a * tmp[(r + i) * ow + c])
                .sum();
        }
    }
    (out, ow, oh)
}

/// Mean SSIM with an 11x11 Gaussian window (σ = 1.5), `L = max(reference)`.
pub fn ssim<T: Real>(reference: &Grid<T>, estimate: &Grid<T>) -> Result<f64> {
    let range = reference.max().to_f64c();
    ssim_with_range(reference, estimate, range)
}

/// Mean SSIM with an explicit dynamic range `L`.
pub fn ssim_with_range<T: Real>(
    reference: &Grid<T>,
    estimate: &Grid<T>,
    range: f64,
) -> Result<f64> {
    reference.ensure_same_dims(estimate)?;
    let (w, h) = reference.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::Shape(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"
        )));
    }
    let x: Vec<f64> = reference.data.iter().map(|v| v.to_f64c()).collect();
    let y: Vec<f64> = estimate.data.iter().map(|v| v.to_f64c()).collect();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a * b).collect();
    let k = gaussian_window();
    let (mx, _, _) = filter_valid(&x, w, h, &k);
    let (my, _, _) = filter_valid(&y, w, h, &k);
    let (sxx, _, _) = filter_valid(&xx, w, h, &k);
    let (syy, _, _) = filter_valid(&yy, w, h, &k);
    let (sxy, ow, oh) = filter_valid(&xy, w, h, &k);
    let c1 = (SSIM_K1 * range).powi(2);
    let c2 = (SSIM_K2 * range).powi(2);
    let mut total = 0.0;
    for i in 0..ow * oh {
        let (ux, uy) = (mx[i], my[i]);
        let vx = sxx[i] - ux * ux;
        let vy = syy[i] - uy * uy;
        let cov = sxy[i] - ux * uy;
        total +=
            ((2.0 * ux * uy + c1) * (2.0 * cov + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
    }
    Ok(total / (ow * oh) as f64)
}

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

impl Region {
    pub fn new(row: usize, col: usize, height: usize, width: usize) -> Self {
        Self {
            row,
            col,
            height,
            width,
        }
    }

    pub fn whole<T>(g: &Grid<T>) -> Self {
        Self::new(0, 0, g.height, g.width)
    }
}

impl std::str::FromStr for Region {
    type Err = Error;

    /// `row,col,height,width`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| {
                Error::Config(format!("bad region {s:?}, expected row,col,height,width"))
            })?;
        match parts.as_slice() {
            &[row, col, height, width] => Ok(Self::new(row, col, height, width)),
            _ => Err(Error::Config(format!(
                "bad region {s:?}, expected row,col,height,width"
            ))),
        }
    }
}

/// Equivalent number of looks, `mean^2 / variance` of intensity over `region`.
pub fn enl<T: Real>(intensity: &Grid<T>, region: Region) -> Result<f64> {
    if region.height < ENL_MIN_SIDE || region.width < ENL_MIN_SIDE {
        return Err(Error::Config(format!(
            "ENL region must be at least {ENL_MIN_SIDE}x{ENL_MIN_SIDE}"
        )));
    }
    if region.row + region.height > intensity.height || region.col + region.width > intensity.width
    {
        return Err(Error::Config("ENL region exceeds image bounds".into()));
    }
    let mut values = Vec::with_capacity(region.height * region.width);
    for r in region.row..region.row + region.height {
        for c in region.col..region.col + region.width {
            values.push(intensity.get(r, c).to_f64c());
        }
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var == 0.0 {
        return Err(Error::UndefinedEnl);
    }
    Ok(mean * mean / var)
}

/// Inclusive pixel box enclosing an impulse mainlobe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MainlobeBox {
    pub row0: usize,
    pub row1: usize,
    pub col0: usize,
    pub col1: usize,
}

impl MainlobeBox {
    /// Box of half-size `half` around `(row, col)`, clipped to the grid.
    pub fn around<T>(g: &Grid<T>, (row, col): (usize, usize), half: usize) -> Self {
        Self {
            row0: row.saturating_sub(half),
            row1: (row + half).min(g.height - 1),
            col0: col.saturating_sub(half),
            col1: (col + half).min(g.width - 1),
        }
    }

    #[inline]
    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.row0..=self.row1).contains(&row) && (self.col0..=self.col1).contains(&col)
    }
}

/// Location of the global amplitude maximum.
pub fn find_peak<T: Real>(amplitude: &Grid<T>) -> Result<(usize, usize)> {
    let (idx, peak) =
        amplitude
            .data
            .iter()
            .enumerate()
            .fold(
                (0, T::neg_infinity()),
                |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
            );
    if !(peak > T::zero()) {
        return Err(Error::NoPeak);
    }
    Ok((idx / amplitude.width, idx % amplitude.width))
}

/// Walks from `start` in direction `step` while amplitude keeps falling;
/// returns the first local minimum (the null).
fn walk_to_null(profile: impl Fn(isize) -> Option<f64>, start: isize, step: isize) -> isize {
    let mut i = start;
    while let (Some(cur), Some(next)) = (profile(i), profile(i + step)) {
        if next < cur {
            i += step;
        } else {
            break;
        }
    }
    i
}

/// Null-to-null mainlobe box found by descending from the peak along its row
/// and column.
pub fn find_mainlobe<T: Real>(amplitude: &Grid<T>) -> Result<MainlobeBox> {
    let (pr, pc) = find_peak(amplitude)?;
    let (w, h) = (amplitude.width as isize, amplitude.height as isize);
    let along_row = |c: isize| {
        (0..w)
            .contains(&c)
            .then(|| amplitude.get(pr, c as usize).to_f64c())
    };
    let along_col = |r: isize| {
        (0..h)
            .contains(&r)
            .then(|| amplitude.get(r as usize, pc).to_f64c())
    };
    Ok(MainlobeBox {
        row0: walk_to_null(along_col, pr as isize, -1) as usize,
        row1: walk_to_null(along_col, pr as isize, 1) as usize,
        col0: walk_to_null(along_row, pc as isize, -1) as usize,
        col1: walk_to_null(along_row, pc as isize, 1) as usize,
    })
}

/// Peak and integrated sidelobe ratios (dB) of an amplitude impulse response.
///
/// Sidelobes are everything outside `mainlobe`. Returns
/// [`SIDELOBE_FLOOR_DB`] for both ratios when the sidelobe region carries no
/// energy.
pub fn pslr_islr<T: Real>(amplitude: &Grid<T>, mainlobe: MainlobeBox) -> Result<(f64, f64)> {
    let (pr, pc) = find_peak(amplitude)?;
    let peak = amplitude.get(pr, pc).to_f64c();
    let (mut side_max, mut side_e, mut main_e) = (0.0f64, 0.0, 0.0);
    for r in 0..amplitude.height {
        for c in 0..amplitude.width {
            let a = amplitude.get(r, c).to_f64c();
            if mainlobe.contains(r, c) {
                main_e += a * a;
            } else {
                side_max = side_max.max(a);
                side_e += a * a;
            }
        }
    }
    if side_e == 0.0 {
        return Ok((SIDELOBE_FLOOR_DB, SIDELOBE_FLOOR_DB));
    }
    Ok((
        (20.0 * (side_max / peak).log10()).max(SIDELOBE_FLOOR_DB),
        (10.0 * (side_e / main_e).log10()).max(SIDELOBE_FLOOR_DB),
    ))
}

/// Half-power (-3 dB) width of the mainlobe along the peak row, in samples,
/// with linear interpolation between samples.
pub fn half_power_width<T: Real>(amplitude: &Grid<T>) -> Result<f64> {
    let (pr, pc) = find_peak(amplitude)?;
    let row: Vec<f64> = amplitude.row(pr).iter().map(|v| v.to_f64c()).collect();
    let level = row[pc] / std::f64::consts::SQRT_2;
    let crossing = |step: isize| -> f64 {
        let mut i = pc as isize;
        loop {
            let j = i + step;
            if j < 0 || j >= row.len() as isize {
                return (i - pc as isize).abs() as f64;
            }
            let (a, b) = (row[i as usize], row[j as usize]);
            if b < level {
                let frac = (a - level) / (a - b);
                return ((i - pc as isize).abs() as f64) + frac;
            }
            i = j;
        }
    };
    Ok(crossing(-1) + crossing(1))
}

/// Share of the mean-removed spectral energy at frequencies above half the
/// Nyquist limit along either axis.
pub fn high_frequency_fraction<T: Real>(g: &Grid<T>) -> Result<f64> {
    let (w, h) = g.dims();
    let mean = g.mean();
    let re = Grid::from_fn(w, h, |r, c| g.get(r, c).to_f64c() - mean);
    let spec = crate::spectral::spectrum(&ComplexImage::from_parts(re, Grid::zeros(w, h))?);
    let (mut high, mut total) = (0.0, 0.0);
    for ky in 0..h {
        let fy = crate::spectral::signed_bin(ky, h).unsigned_abs() as f64 / (h as f64 / 2.0);
        for kx in 0..w {
            let fx = crate::spectral::signed_bin(kx, w).unsigned_abs() as f64 / (w as f64 / 2.0);
            let e = spec[ky * w + kx].norm_sqr();
            total += e;
            if fx.max(fy) > 0.5 {
                high += e;
            }
        }
    }
    if total == 0.0 {
        return Err(Error::DegenerateReference("image is constant".into()));
    }
    Ok(high / total)
}
