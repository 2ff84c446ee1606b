use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::METADATA_DIM;

/// Network family member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Residual U-Net without channel attention.
    Plain,
    /// Squeeze-and-excitation after every residual block.
    Se,
    /// Metadata appended as constant input maps.
    MetaMaps,
    /// Metadata concatenated into every SE MLP input.
    MetaSe,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Plain,
        Variant::Se,
        Variant::MetaMaps,
        Variant::MetaSe,
    ];

    pub fn has_se(self) -> bool {
        matches!(self, Variant::Se | Variant::MetaSe)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::Se => "se",
            Variant::MetaMaps => "meta_maps",
            Variant::MetaSe => "meta_se",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkConfig {
    pub variant: Variant,
    pub base_channels: usize,
    pub levels: usize,
    pub blocks_per_level: usize,
    pub se_reduction: usize,
    pub metadata_dim: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            variant: Variant::MetaSe,
            base_channels: 16,
            levels: 2,
            blocks_per_level: 2,
            se_reduction: 4,
            metadata_dim: METADATA_DIM,
        }
    }
}

impl NetworkConfig {
    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn input_channels(&self) -> usize {
        match self.variant {
            Variant::MetaMaps => 3 + self.metadata_dim,
            _ => 3,
        }
    }

    /// Feature channels at resolution level `level` (0 = full resolution).
    pub fn channels(&self, level: usize) -> usize {
        self.base_channels << level
    }

    /// Spatial dimensions must be divisible by this.
    pub fn size_multiple(&self) -> usize {
        1 << (self.levels - 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 || self.base_channels == 0 {
            return Err(Error::Config(
                "levels and base_channels must be >= 1".into(),
            ));
        }
        if self.variant.has_se() {
            if self.se_reduction == 0 {
                return Err(Error::Config("se_reduction must be >= 1".into()));
            }
            for l in 0..self.levels {
                let c = self.channels(l);
                if !c.is_multiple_of(self.se_reduction) {
                    return Err(Error::Config(format!(
                        "se_reduction {} does not divide {c} channels at level {l}",
                        self.se_reduction
                    )));
                }
            }
        }
        if self.metadata_dim != METADATA_DIM {
            return Err(Error::Config(format!(
                "metadata_dim must be {METADATA_DIM}"
            )));
        }
        Ok(())
    }
}
