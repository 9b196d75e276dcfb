//! Augmentation baselines (Cutout, GridMask, rand-lite) and selective expansion.

mod ops;
mod selective;

pub use ops::{brightness, cutout, gridmask, hflip, rand_lite, rot90, translate, FILL};
pub use selective::{
    select_candidates, selective_expand, CandidateScore, Selection, SelectionMode, DEFAULT_BUDGET_FACTOR,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::backends::Image;
use crate::error::{Error, Result};
use crate::rng::Stream;

/// A seeded augmentation with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AugmentSpec {
    Cutout {
        frac: f64,
    },
    /// The grid phase is drawn per application.
    Gridmask {
        period: usize,
        keep_ratio: f64,
    },
    Randlite,
}

impl AugmentSpec {
    pub const DEFAULT_CUTOUT: AugmentSpec = AugmentSpec::Cutout { frac: 0.5 };
    pub const DEFAULT_GRIDMASK: AugmentSpec = AugmentSpec::Gridmask { period: 8, keep_ratio: 0.6 };

    pub fn validate(&self) -> Result<()> {
        match *self {
            AugmentSpec::Cutout { frac } if !(0.0..=1.0).contains(&frac) => {
                Err(Error::Parameter(format!("cutout fraction must be in [0, 1], got {frac}")))
            }
            AugmentSpec::Gridmask { period, .. } if period < 2 => {
                Err(Error::Parameter(format!("grid period must be at least 2, got {period}")))
            }
            AugmentSpec::Gridmask { keep_ratio, .. } if !(keep_ratio > 0.0 && keep_ratio <= 1.0) => {
                Err(Error::Parameter(format!("keep ratio must be in (0, 1], got {keep_ratio}")))
            }
            _ => Ok(()),
        }
    }

    pub fn apply(&self, image: &Image, stream: Stream) -> Image {
        match *self {
            AugmentSpec::Cutout { frac } => cutout(image, frac, stream),
            AugmentSpec::Gridmask { period, keep_ratio } => {
                let mut rng = stream.rng();
                let phase = (rng.random_range(0..period), rng.random_range(0..period));
                gridmask(image, period, keep_ratio, phase)
            }
            AugmentSpec::Randlite => rand_lite(image, stream),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(AugmentSpec::Cutout { frac: 1.5 }.validate().is_err());
        assert!(AugmentSpec::Gridmask { period: 1, keep_ratio: 0.5 }.validate().is_err());
        assert!(AugmentSpec::Gridmask { period: 4, keep_ratio: 0.0 }.validate().is_err());
        assert!(AugmentSpec::DEFAULT_GRIDMASK.validate().is_ok());
        assert!(AugmentSpec::Randlite.validate().is_ok());
    }
}
