//! Spectral tapering windows over a centered band of fractional width β.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum WindowKind {
    #[default]
    Rect,
    Hamming,
    Hanning,
    Kaiser {
        beta: f64,
    },
}

impl WindowKind {
    pub fn validate(&self) -> Result<()> {
        if let WindowKind::Kaiser { beta } = self {
            if !(beta.is_finite() && *beta >= 0.0) {
                return Err(Error::Config(format!(
                    "kaiser beta must be >= 0, got {beta}"
                )));
            }
        }
        Ok(())
    }

    /// Window weight at normalized frequency `u` for a band of width `band`
    /// (the band spans `[-band/2, band/2]`). Peak value 1 at `u = 0`.
    pub fn weight(&self, u: f64, band: f64) -> f64 {
        let t = u / band;
        match *self {
            WindowKind::Rect => 1.0,
            WindowKind::Hamming => 0.54 + 0.46 * (std::f64::consts::TAU * t).cos(),
            WindowKind::Hanning => 0.5 + 0.5 * (std::f64::consts::TAU * t).cos(),
            WindowKind::Kaiser { beta } => {
                let r = (1.0 - (2.0 * t).powi(2)).max(0.0);
                bessel_i0(beta * r.sqrt()) / bessel_i0(beta)
            }
        }
    }
}

impl std::str::FromStr for WindowKind {
    type Err = Error;

    /// Parses `rect`, `hamming`, `hanning` or `kaiser:<beta>`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let w = match lower.as_str() {
            "rect" | "rectangular" => WindowKind::Rect,
            "hamming" => WindowKind::Hamming,
            "hanning" | "hann" => WindowKind::Hanning,
            other => match other.strip_prefix("kaiser:") {
                Some(b) => WindowKind::Kaiser {
                    beta: b
                        .parse()
                        .map_err(|_| Error::Config(format!("bad kaiser beta {b:?}")))?,
                },
                None => return Err(Error::Config(format!("unknown window {s:?}"))),
            },
        };
        w.validate()?;
        Ok(w)
    }
}

/// Modified Bessel function of the first kind, order zero (power series).
pub fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > 1e-17 * sum {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}
