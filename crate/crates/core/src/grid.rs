//! Row-major real and complex image grids.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Real-valued image stored row-major (`data[row * width + col]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Real> Grid<T> {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, T::zero())
    }

    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Shape(format!(
                "{} values for a {width}x{height} grid",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: T) {
        self.data[row * self.width + col] = v;
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|v| v.to_f64c()).sum::<f64>() / self.data.len().max(1) as f64
    }

    pub fn max(&self) -> T {
        self.data.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn cast<U: Real>(&self) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| U::of(v.to_f64c())).collect(),
        }
    }

    pub fn ensure_same_dims<U>(&self, other: &Grid<U>) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch {
                expected: (self.width, self.height),
                found: (other.width, other.height),
            });
        }
        Ok(())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.height, self.width, |r, c| self.get(c, r))
    }
}

/// Complex-valued image held as separate real and imaginary planes.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage<T> {
    pub width: usize,
    pub height: usize,
    pub re: Vec<T>,
    pub im: Vec<T>,
}

impl<T: Real> ComplexImage<T> {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            re: vec![T::zero(); width * height],
            im: vec![T::zero(); width * height],
        }
    }

    pub fn from_parts(re: Grid<T>, im: Grid<T>) -> Result<Self> {
        re.ensure_same_dims(&im)?;
        Ok(Self {
            width: re.width,
            height: re.height,
            re: re.data,
            im: im.data,
        })
    }

    pub fn from_complex(width: usize, height: usize, values: &[Complex<T>]) -> Self {
        debug_assert_eq!(values.len(), width * height);
        Self {
            width,
            height,
            re: values.iter().map(|c| c.re).collect(),
            im: values.iter().map(|c| c.im).collect(),
        }
    }

    pub fn to_complex(&self) -> Vec<Complex<T>> {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(&re, &im)| Complex::new(re, im))
            .collect()
    }

    /// A unit-amplitude real impulse at `(row, col)`.
    pub fn impulse(width: usize, height: usize, row: usize, col: usize) -> Self {
        let mut img = Self::zeros(width, height);
        img.re[row * width + col] = T::one();
        img
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn real_part(&self) -> Grid<T> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.re.clone(),
        }
    }

    pub fn imag_part(&self) -> Grid<T> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.im.clone(),
        }
    }

    pub fn amplitude(&self) -> Grid<T> {
        Grid {
            width: self.width,
            height: self.height,
            data: self
                .re
                .iter()
                .zip(&self.im)
                .map(|(&a, &b)| (a * a + b * b).sqrt())
                .collect(),
        }
    }

    pub fn intensity(&self) -> Grid<T> {
        Grid {
            width: self.width,
            height: self.height,
            data: self
                .re
                .iter()
                .zip(&self.im)
                .map(|(&a, &b)| a * a + b * b)
                .collect(),
        }
    }

    /// Sum of squared magnitudes.
    pub fn energy(&self) -> f64 {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(a, b)| {
                let (a, b) = (a.to_f64c(), b.to_f64c());
                a * a + b * b
            })
            .sum()
    }

    pub fn cast<U: Real>(&self) -> ComplexImage<U> {
        ComplexImage {
            width: self.width,
            height: self.height,
            re: self.re.iter().map(|v| U::of(v.to_f64c())).collect(),
            im: self.im.iter().map(|v| U::of(v.to_f64c())).collect(),
        }
    }

    pub fn ensure_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }

    /// `a * self + b * other`
    pub fn axpby(&self, a: T, other: &Self, b: T) -> Result<Self> {
        self.ensure_same_dims(other)?;
        let combine = |x: &[T], y: &[T]| x.iter().zip(y).map(|(&p, &q)| a * p + b * q).collect();
        Ok(Self {
            width: self.width,
            height: self.height,
            re: combine(&self.re, &other.re),
            im: combine(&self.im, &other.im),
        })
    }

    /// Largest pixelwise complex difference relative to the largest magnitude of `self`.
    pub fn max_relative_diff(&self, other: &Self) -> f64 {
        let scale = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(a, b)| a.to_f64c().hypot(b.to_f64c()))
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let diff = (0..self.re.len())
            .map(|i| {
                (self.re[i].to_f64c() - other.re[i].to_f64c())
                    .hypot(self.im[i].to_f64c() - other.im[i].to_f64c())
            })
            .fold(0.0, f64::max);
        diff / scale
    }
}
