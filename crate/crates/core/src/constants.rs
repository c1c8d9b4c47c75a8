//! Pinned calibration of `c_g`.
//!
//! The calibrated value ships in `constants.toml` at the crate root and is
//! compiled in; a file with the same layout can replace it at run time.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bounds::{gaussian_constants, GaussianConstants, Provenance};
use crate::error::{Error, Result};

/// Contents of the shipped constants file.
pub const PINNED_TOML: &str = include_str!("../constants.toml");

/// A constants file: the value of `c_g` plus the calibration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsFile {
    pub c_g: f64,
    pub seed: u64,
    pub m_grid: Vec<usize>,
    pub trials: usize,
    pub date: String,
}

impl ConstantsFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("constants file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn gaussian(&self) -> Result<GaussianConstants> {
        let mut gc = gaussian_constants(self.c_g)?;
        gc.provenance = Provenance::Calibrated {
            seed: self.seed,
            m_grid: self.m_grid.clone(),
            trials: self.trials,
        };
        Ok(gc)
    }
}

/// The compiled-in constants file.
pub fn pinned_file() -> ConstantsFile {
    ConstantsFile::parse(PINNED_TOML).expect("shipped constants file parses")
}

/// The compiled-in calibrated constants.
pub fn pinned() -> GaussianConstants {
    pinned_file().gaussian().expect("shipped c_g is positive")
}
