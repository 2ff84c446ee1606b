use rand::Rng;

use crate::error::{Error, Result};
use crate::forward::SampleTuple;
use crate::grid::{ComplexImage, Grid};
use crate::scalar::Real;

/// Element of the symmetry group of the square: an optional left-right
/// mirror followed by `quarter_turns` counterclockwise 90-degree rotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dihedral {
    pub mirror: bool,
    pub quarter_turns: u8,
}

impl Dihedral {
    pub const IDENTITY: Self = Self {
        mirror: false,
        quarter_turns: 0,
    };

    pub fn all() -> impl Iterator<Item = Self> {
        (0..8u8).map(|i| Self {
            mirror: i >= 4,
            quarter_turns: i % 4,
        })
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let i: u8 = rng.random_range(0..8);
        Self {
            mirror: i >= 4,
            quarter_turns: i % 4,
        }
    }

    pub fn rot90() -> Self {
        Self {
            mirror: false,
            quarter_turns: 1,
        }
    }

    /// Bearing in degrees after the transform, counterclockwise convention.
    pub fn bearing(&self, b: f64) -> f64 {
        let b = if self.mirror { 360.0 - b } else { b };
        (b + 90.0 * self.quarter_turns as f64).rem_euclid(360.0)
    }

    pub fn apply_grid<T: Real>(&self, g: &Grid<T>) -> Result<Grid<T>> {
        if self.quarter_turns % 2 == 1 && g.width != g.height {
            return Err(Error::Shape(format!(
                "quarter-turn rotation needs a square patch, got {}x{}",
                g.width, g.height
            )));
        }
        let mut out = if self.mirror {
            Grid::from_fn(g.width, g.height, |r, c| g.get(r, g.width - 1 - c))
        } else {
            g.clone()
        };
        if self.quarter_turns == 2 {
            let (w, h) = out.dims();
            return Ok(Grid::from_fn(w, h, |r, c| out.get(h - 1 - r, w - 1 - c)));
        }
        for _ in 0..self.quarter_turns {
            let n = out.width;
            out = Grid::from_fn(n, n, |r, c| out.get(c, n - 1 - r));
        }
        Ok(out)
    }

    fn apply_complex<T: Real>(&self, z: &ComplexImage<T>) -> Result<ComplexImage<T>> {
        ComplexImage::from_parts(
            self.apply_grid(&z.real_part())?,
            self.apply_grid(&z.imag_part())?,
        )
    }

    /// Transforms every grid of the tuple identically and updates the bearing.
    pub fn apply<T: Real>(&self, s: &SampleTuple<T>) -> Result<SampleTuple<T>> {
        if *self == Self::IDENTITY {
            return Ok(s.clone());
        }
        let mut out = s.clone();
        out.x.values = self.apply_grid(&s.x.values)?;
        out.z = self.apply_complex(&s.z)?;
        out.y = self.apply_complex(&s.y)?;
        out.m.bearing = self.bearing(s.m.bearing);
        Ok(out)
    }
}

pub fn augment<T: Real, R: Rng + ?Sized>(
    s: &SampleTuple<T>,
    rng: &mut R,
) -> Result<SampleTuple<T>> {
    Dihedral::random(rng).apply(s)
}
