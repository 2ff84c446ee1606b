//! Seeded reflectivity scenes, acquisition metadata sampling and the
//! interval-based train/validation split.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Real;

/// Number of metadata entries.
pub const METADATA_DIM: usize = 5;

/// Field names in canonical order.
pub const METADATA_FIELDS: [&str; METADATA_DIM] = [
    "bearing",
    "incidence",
    "squint",
    "resolution",
    "noise_level",
];

/// Acquisition parameters of one simulated image.
///
/// Angles in degrees, resolution in meters per axis, noise level in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionMetadata {
    pub bearing: f64,
    pub incidence: f64,
    pub squint: f64,
    pub resolution: f64,
    pub noise_level: f64,
}

impl AcquisitionMetadata {
    pub fn to_array(&self) -> [f64; METADATA_DIM] {
        [
            self.bearing,
            self.incidence,
            self.squint,
            self.resolution,
            self.noise_level,
        ]
    }

    pub fn from_array(v: [f64; METADATA_DIM]) -> Self {
        Self {
            bearing: v[0],
            incidence: v[1],
            squint: v[2],
            resolution: v[3],
            noise_level: v[4],
        }
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    #[inline]
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Global sampling range of each metadata field, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetadataRanges(pub [Interval; METADATA_DIM]);

impl Default for MetadataRanges {
    fn default() -> Self {
        Self([
            Interval::new(0.0, 360.0),
            Interval::new(15.0, 75.0),
            Interval::new(0.0, 45.0),
            Interval::new(0.2, 0.6),
            Interval::new(-40.0, -20.0),
        ])
    }
}

impl MetadataRanges {
    pub fn validate(&self) -> Result<()> {
        for (iv, name) in self.0.iter().zip(METADATA_FIELDS) {
            if !(iv.lo <= iv.hi) {
                return Err(Error::Config(format!(
                    "range for {name} has lo {} > hi {}",
                    iv.lo, iv.hi
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, m: &AcquisitionMetadata) -> bool {
        self.0
            .iter()
            .zip(m.to_array())
            .all(|(iv, v)| iv.contains(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
        })
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" | "val" => Ok(Split::Validation),
            other => Err(Error::Config(format!("unknown split {other:?}"))),
        }
    }
}

/// How per-field validation intervals combine into a split decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRule {
    /// Validation when any field lies in its held-out interval.
    #[default]
    Any,
}

/// Held-out metadata intervals defining the validation split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub validation: [Interval; METADATA_DIM],
    #[serde(default)]
    pub rule: SplitRule,
}

impl Default for SplitSpec {
    /// Narrow held-out intervals, one per metadata field.
    fn default() -> Self {
        Self {
            validation: [
                Interval::new(150.0, 155.0),
                Interval::new(55.0, 55.7),
                Interval::new(15.0, 15.5),
                Interval::new(0.35, 0.36),
                Interval::new(-32.0, -31.7),
            ],
            rule: SplitRule::Any,
        }
    }
}

impl SplitSpec {
    /// Every validation interval must lie strictly inside the global range.
    pub fn validate(&self, ranges: &MetadataRanges) -> Result<()> {
        for ((v, g), name) in self.validation.iter().zip(&ranges.0).zip(METADATA_FIELDS) {
            if !(v.lo <= v.hi && g.lo < v.lo && v.hi < g.hi) {
                return Err(Error::Config(format!(
                    "validation interval for {name} [{}, {}] not strictly inside [{}, {}]",
                    v.lo, v.hi, g.lo, g.hi
                )));
            }
        }
        Ok(())
    }
}

pub fn assign_split(m: &AcquisitionMetadata, spec: &SplitSpec) -> Split {
    match spec.rule {
        SplitRule::Any => {
            if spec
                .validation
                .iter()
                .zip(m.to_array())
                .any(|(iv, v)| iv.contains(v))
            {
                Split::Validation
            } else {
                Split::Train
            }
        }
    }
}

/// Draws each field independently and uniformly from its range.
pub fn sample_metadata(seed: u64, ranges: &MetadataRanges) -> Result<AcquisitionMetadata> {
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = [0.0; METADATA_DIM];
    for (slot, iv) in v.iter_mut().zip(&ranges.0) {
        let u: f64 = rng.random();
        *slot = iv.lo + (iv.hi - iv.lo) * u;
    }
    Ok(AcquisitionMetadata::from_array(v))
}

/// Parameters of the synthetic scene composer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    /// Number of piecewise-constant background cells.
    pub background_cells: usize,
    /// Log-uniform bounds of per-cell background reflectivity.
    pub background_range: Interval,
    /// Inclusive count range of single-pixel point targets.
    pub point_targets: (usize, usize),
    /// Inclusive count range of rotated-rectangle targets.
    pub extended_targets: (usize, usize),
    /// Extended target side lengths in pixels.
    pub extended_size: Interval,
    /// Target amplitude as a multiple of the background mean.
    pub amplitude_ratio: Interval,
    /// Incidence angle (degrees) at which background is unscaled.
    pub reference_incidence: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            background_cells: 12,
            background_range: Interval::new(0.1, 10.0),
            point_targets: (1, 4),
            extended_targets: (1, 3),
            extended_size: Interval::new(2.0, 10.0),
            amplitude_ratio: Interval::new(5.0, 50.0),
            reference_incidence: 15.0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("scene config: {what}")));
        if self.background_cells == 0 {
            return bad("background_cells must be >= 1");
        }
        let br = self.background_range;
        if !(br.lo > 0.0 && br.lo <= br.hi) {
            return bad("background_range must satisfy 0 < lo <= hi");
        }
        if self.point_targets.0 > self.point_targets.1
            || self.extended_targets.0 > self.extended_targets.1
        {
            return bad("target count ranges must be nonempty");
        }
        if !(self.extended_size.lo > 0.0 && self.extended_size.lo <= self.extended_size.hi) {
            return bad("extended_size must satisfy 0 < lo <= hi");
        }
        if !(self.amplitude_ratio.lo > 1.0 && self.amplitude_ratio.lo <= self.amplitude_ratio.hi) {
            return bad("amplitude_ratio must satisfy 1 < lo <= hi");
        }
        if !(0.0..90.0).contains(&self.reference_incidence) {
            return bad("reference_incidence must lie in [0, 90)");
        }
        Ok(())
    }
}

/// Ground-truth reflectivity: nonnegative, linear scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectivityScene<T> {
    pub width: usize,
    pub height: usize,
    pub values: Grid<T>,
    pub seed: u64,
}

impl<T: Real> ReflectivityScene<T> {
    pub fn new(values: Grid<T>, seed: u64) -> Self {
        Self {
            width: values.width,
            height: values.height,
            values,
            seed,
        }
    }

    pub fn cast<U: Real>(&self) -> ReflectivityScene<U> {
        ReflectivityScene::new(self.values.cast(), self.seed)
    }
}

fn uniform(rng: &mut ChaCha8Rng, iv: Interval) -> f64 {
    iv.lo + (iv.hi - iv.lo) * rng.random::<f64>()
}

fn count_in(rng: &mut ChaCha8Rng, range: (usize, usize)) -> usize {
    rng.random_range(range.0..=range.1)
}

/// Composes a scene of Voronoi background cells plus point and extended targets.
///
/// Background reflectivity is scaled by `cos(incidence) / cos(reference)`;
/// extended targets are oriented at a random base angle plus the bearing,
/// measured counterclockwise from image "up". The random draw sequence does
/// not depend on the metadata, so scenes differing only in metadata share
/// layout.
pub fn generate_scene<T: Real>(
    seed: u64,
    m: &AcquisitionMetadata,
    cfg: &SceneConfig,
    width: usize,
    height: usize,
) -> Result<ReflectivityScene<T>> {
    cfg.validate()?;
    if width < 32 || height < 32 {
        return Err(Error::Config(format!(
            "scene must be at least 32x32, got {width}x{height}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let cells: Vec<(f64, f64, f64)> = (0..cfg.background_cells)
        .map(|_| {
            let r = rng.random::<f64>() * height as f64;
            let c = rng.random::<f64>() * width as f64;
            let (llo, lhi) = (cfg.background_range.lo.ln(), cfg.background_range.hi.ln());
            let refl = (llo + (lhi - llo) * rng.random::<f64>()).exp();
            (r, c, refl)
        })
        .collect();

    let scale = m.incidence.to_radians().cos() / cfg.reference_incidence.to_radians().cos();
    let mut values = vec![0.0f64; width * height];
    for r in 0..height {
        for c in 0..width {
            let (pr, pc) = (r as f64 + 0.5, c as f64 + 0.5);
            let mut best = (f64::INFINITY, 0.0);
            for &(sr, sc, refl) in &cells {
                let d = (sr - pr).powi(2) + (sc - pc).powi(2);
                if d < best.0 {
                    best = (d, refl);
                }
            }
            values[r * width + c] = (best.1 * scale).max(0.0);
        }
    }
    let background_mean = values.iter().sum::<f64>() / values.len() as f64;

    let n_points = count_in(&mut rng, cfg.point_targets);
    for _ in 0..n_points {
        let r = rng.random_range(0..height);
        let c = rng.random_range(0..width);
        let amp = uniform(&mut rng, cfg.amplitude_ratio) * background_mean;
        values[r * width + c] = amp;
    }

    let n_ext = count_in(&mut rng, cfg.extended_targets);
    for _ in 0..n_ext {
        let cr = rng.random::<f64>() * height as f64;
        let cc = rng.random::<f64>() * width as f64;
        let length = uniform(&mut rng, cfg.extended_size);
        let breadth = uniform(&mut rng, cfg.extended_size).min(length);
        let base = rng.random::<f64>() * 360.0;
        let amp = uniform(&mut rng, cfg.amplitude_ratio) * background_mean;
        let phi = (base + m.bearing).to_radians();
        // Long-axis direction in (col, row) with rows increasing downward.
        let (dc, dr) = (-phi.sin(), -phi.cos());
        let reach = 0.5 * (length.hypot(breadth)) + 1.0;
        let r0 = (cr - reach).floor().max(0.0) as usize;
        let r1 = ((cr + reach).ceil() as usize).min(height);
        let c0 = (cc - reach).floor().max(0.0) as usize;
        let c1 = ((cc + reach).ceil() as usize).min(width);
        for r in r0..r1 {
            for c in c0..c1 {
                let (vr, vc) = (r as f64 + 0.5 - cr, c as f64 + 0.5 - cc);
                let along = vc * dc + vr * dr;
                let across = -vc * dr + vr * dc;
                if along.abs() <= 0.5 * length && across.abs() <= 0.5 * breadth {
                    values[r * width + c] = amp;
                }
            }
        }
    }

    let grid = Grid {
        width,
        height,
        data: values.into_iter().map(T::of).collect(),
    };
    Ok(ReflectivityScene::new(grid, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn background_only() -> SceneConfig {
        SceneConfig {
            point_targets: (0, 0),
            extended_targets: (0, 0),
            ..SceneConfig::default()
        }
    }

    fn meta(incidence: f64) -> AcquisitionMetadata {
        AcquisitionMetadata {
            bearing: 10.0,
            incidence,
            squint: 5.0,
            resolution: 0.5,
            noise_level: -25.0,
        }
    }

    #[test]
    fn resolution_draw_within_range() {
        let ranges = MetadataRanges::default();
        for seed in 0..200 {
            let m = sample_metadata(seed, &ranges).unwrap();
            assert!((0.2..=0.6).contains(&m.resolution));
            assert!(ranges.contains(&m));
        }
    }

    #[test]
    fn degenerate_range_is_exact() {
        let mut ranges = MetadataRanges::default();
        ranges.0[2] = Interval::new(30.0, 30.0);
        let m = sample_metadata(7, &ranges).unwrap();
        assert_eq!(m.squint, 30.0);
    }

    #[test]
    fn inverted_range_is_config_error() {
        let mut ranges = MetadataRanges::default();
        ranges.0[0] = Interval::new(10.0, 5.0);
        assert!(matches!(sample_metadata(1, &ranges), Err(Error::Config(_))));
    }

    #[test]
    fn bearing_is_uniform_by_ks_distance() {
        let ranges = MetadataRanges::default();
        let mut draws: Vec<f64> = (0..10_000u64)
            .map(|s| sample_metadata(s, &ranges).unwrap().bearing)
            .collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = draws.len() as f64;
        let ks = draws
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = x / 360.0;
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.02, "KS distance {ks}");
    }

    #[test]
    fn split_examples() {
        let spec = SplitSpec::default();
        let mut m = meta(30.0);
        assert_eq!(assign_split(&m, &spec), Split::Train);
        m.bearing = 152.0;
        assert_eq!(assign_split(&m, &spec), Split::Validation);
    }

    #[test]
    fn split_interval_endpoints_are_closed() {
        let spec = SplitSpec::default();
        let base = meta(30.0).to_array();
        for (field, iv) in spec.validation.iter().enumerate() {
            for (v, expect) in [
                (iv.lo, Split::Validation),
                (iv.hi, Split::Validation),
                (iv.lo - 1e-9, Split::Train),
                (iv.hi + 1e-9, Split::Train),
            ] {
                let mut a = base;
                a[field] = v;
                assert_eq!(
                    assign_split(&AcquisitionMetadata::from_array(a), &spec),
                    expect
                );
            }
        }
    }

    #[test]
    fn default_split_spec_is_valid() {
        SplitSpec::default()
            .validate(&MetadataRanges::default())
            .unwrap();
        let mut bad = SplitSpec::default();
        bad.validation[0] = Interval::new(0.0, 5.0);
        assert!(bad.validate(&MetadataRanges::default()).is_err());
    }

    #[test]
    fn single_cell_without_targets_is_constant() {
        let cfg = SceneConfig {
            background_cells: 1,
            ..background_only()
        };
        let s = generate_scene::<f64>(3, &meta(30.0), &cfg, 40, 32).unwrap();
        let v0 = s.values.data[0];
        assert!(s.values.data.iter().all(|&v| v == v0));
        assert!(v0 > 0.0);
    }

    #[test]
    fn scenes_are_deterministic_and_nonnegative() {
        let cfg = SceneConfig::default();
        let a = generate_scene::<f32>(99, &meta(40.0), &cfg, 64, 64).unwrap();
        let b = generate_scene::<f32>(99, &meta(40.0), &cfg, 64, 64).unwrap();
        assert_eq!(a, b);
        assert!(a.values.data.iter().all(|&v| v >= 0.0));
        let c = generate_scene::<f32>(100, &meta(40.0), &cfg, 64, 64).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn incidence_cosine_ratio() {
        let cfg = background_only();
        let hi = generate_scene::<f64>(5, &meta(15.0), &cfg, 64, 64).unwrap();
        let lo = generate_scene::<f64>(5, &meta(60.0), &cfg, 64, 64).unwrap();
        let ratio = lo.values.mean() / hi.values.mean();
        let expect = 60f64.to_radians().cos() / 15f64.to_radians().cos();
        assert!((ratio / expect - 1.0).abs() < 0.01, "{ratio} vs {expect}");
        assert!((expect - 0.5176).abs() < 1e-4);
    }

    #[test]
    fn background_mean_decreases_with_incidence() {
        let cfg = background_only();
        let means: Vec<f64> = [15.0, 25.0, 40.0, 55.0, 75.0]
            .iter()
            .map(|&i| {
                generate_scene::<f64>(11, &meta(i), &cfg, 48, 48)
                    .unwrap()
                    .values
                    .mean()
            })
            .collect();
        assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
    }

    #[test]
    fn too_small_scene_rejected() {
        assert!(generate_scene::<f64>(1, &meta(30.0), &SceneConfig::default(), 16, 64).is_err());
    }
}
