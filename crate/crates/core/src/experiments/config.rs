//! Experiment configuration: JSON on disk, validated before any work starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::grid::EquiangularGrid;
use crate::spectrum::{example1_spectrum, example2_power_spectrum, power_law_spectrum, PowerSpectrum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpectrumSpec {
    /// Normalized `C_ℓ ∝ ℓ^{-α}`.
    PowerLaw { alpha: f64, l_max: usize },
    Example1 {
        h: f64,
        l_max: usize,
        #[serde(default)]
        odd_terms: bool,
    },
    Example2 { l_max: usize },
    /// CSV written by [`PowerSpectrum::write_csv`].
    File { path: PathBuf },
}

impl SpectrumSpec {
    pub fn build(&self) -> Result<PowerSpectrum> {
        match self {
            SpectrumSpec::PowerLaw { alpha, l_max } => power_law_spectrum(*alpha, *l_max),
            SpectrumSpec::Example1 { h, l_max, odd_terms } => example1_spectrum(*h, *l_max, *odd_terms),
            SpectrumSpec::Example2 { l_max } => example2_power_spectrum(*l_max),
            SpectrumSpec::File { path } => PowerSpectrum::read_csv(path),
        }
    }

    /// Declared `α` where known without building the spectrum.
    pub fn alpha(&self) -> Option<f64> {
        match self {
            SpectrumSpec::PowerLaw { alpha, .. } => Some(*alpha),
            SpectrumSpec::Example1 { h, .. } => Some(2.0 * h + 2.0),
            SpectrumSpec::Example2 { .. } => Some(3.0),
            SpectrumSpec::File { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_theta: usize,
    pub n_phi: usize,
    /// Restricts the grid to colatitudes `[0, cap_radius]`.
    #[serde(default)]
    pub cap_radius: Option<f64>,
}

impl GridSpec {
    pub fn build(&self) -> Result<EquiangularGrid> {
        match self.cap_radius {
            Some(r) => EquiangularGrid::polar_cap(r, self.n_theta, self.n_phi),
            None => EquiangularGrid::new(self.n_theta, self.n_phi),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSpec {
    pub b: Vec<f64>,
    /// Defaults to `(α − 2)/4`.
    #[serde(default)]
    pub beta: Option<f64>,
    pub radius: f64,
}

/// Degrees `L = ⌊B^{-β}/r⌋`, `U = ⌊B^{1−β}/r⌋`.
pub fn band_limits(b: f64, beta: f64, r: f64) -> (usize, usize) {
    ((b.powf(-beta) / r).floor() as usize, (b.powf(1.0 - beta) / r).floor() as usize)
}

fn default_replicates() -> usize {
    20
}

fn default_seed() -> u64 {
    20240601
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spectrum: SpectrumSpec,
    #[serde(default = "one")]
    pub d: usize,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub band: Option<BandSpec>,
    /// Dimensions for `hitting`; empty means `[d]`.
    #[serde(default)]
    pub d_values: Vec<usize>,
    /// Finest Voronoi level; defaults to the finest the grid resolves.
    #[serde(default)]
    pub k_max: Option<usize>,
    #[serde(default)]
    pub radii: Vec<f64>,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn new(spectrum: SpectrumSpec) -> Self {
        ExperimentConfig {
            spectrum,
            d: 1,
            grid: None,
            band: None,
            d_values: Vec::new(),
            k_max: None,
            radii: Vec::new(),
            eps: Vec::new(),
            replicates: default_replicates(),
            seed: default_seed(),
            output_dir: default_out(),
        }
    }

    /// Parses JSON; syntax and schema errors carry the line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("config line {} column {}: {e}", e.line(), e.column())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Checks ranges. `theory` additionally requires `2 < α < 4`; otherwise an `α` outside
    /// that range produces a warning.
    pub fn validate(&self, theory: bool) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if self.d == 0 || self.d_values.contains(&0) {
            return Err(invalid("d", "need d ≥ 1"));
        }
        if self.replicates == 0 {
            return Err(invalid("replicates", "need at least one replicate"));
        }
        let alpha = self.spectrum.alpha();
        if let Some(a) = alpha {
            if !(a > 2.0 && a < 4.0) {
                let msg = format!("α = {a} violates 2 < α < 4, required by the hitting and dimension results");
                if theory {
                    return Err(invalid("alpha", msg));
                }
                warnings.push(msg);
            }
        }
        match &self.spectrum {
            SpectrumSpec::PowerLaw { l_max, .. } | SpectrumSpec::Example1 { l_max, .. } | SpectrumSpec::Example2 { l_max }
                if *l_max == 0 =>
            {
                return Err(invalid("l_max", "must be at least 1"));
            }
            _ => {}
        }
        if let Some(g) = &self.grid {
            g.build()?;
        }
        if let Some(b) = &self.band {
            if b.b.is_empty() || b.b.iter().any(|v| !(*v > 1.0)) {
                return Err(invalid("band.b", "every B must exceed 1"));
            }
            if !(b.radius > 0.0 && b.radius < 1.0) {
                return Err(invalid("band.radius", "need 0 < r < 1"));
            }
            if let (Some(beta), Some(a)) = (b.beta, alpha) {
                if !(beta > 0.0 && beta <= a / 2.0 - 1.0) {
                    return Err(invalid("band.beta", format!("need 0 < β ≤ α/2 − 1 = {}", a / 2.0 - 1.0)));
                }
            }
        }
        if self.radii.iter().any(|r| !(*r > 0.0 && *r < std::f64::consts::PI)) {
            return Err(invalid("radii", "radii must lie in (0, π)"));
        }
        if self.eps.iter().any(|e| !(*e > 0.0)) {
            return Err(invalid("eps", "tolerances must be positive"));
        }
        Ok(warnings)
    }

    pub fn d_values(&self) -> Vec<usize> {
        if self.d_values.is_empty() {
            vec![self.d]
        } else {
            self.d_values.clone()
        }
    }

    /// `β` from the band spec or the default `(α − 2)/4`.
    pub fn beta(&self) -> Option<f64> {
        let b = self.band.as_ref()?;
        b.beta.or_else(|| self.spectrum.alpha().map(|a| (a - 2.0) / 4.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(SpectrumSpec::PowerLaw { alpha: 3.0, l_max: 256 });
        c.band = Some(BandSpec {
            b: vec![4.0, 8.0, 16.0],
            beta: None,
            radius: 0.05,
        });
        c.eps = vec![0.1, 0.05];
        c
    }

    #[test]
    fn round_trip() {
        let c = sample();
        let back = ExperimentConfig::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(c, back);
        assert_eq!(c.hash(), back.hash());
    }

    #[test]
    fn errors_name_the_line() {
        let text = "{\n  \"spectrum\": {\"kind\": \"power-law\", \"alpha\": 3.0, \"l_max\": 64},\n  \"dd\": 2\n}";
        let e = ExperimentConfig::from_json(text).unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");
    }

    #[test]
    fn theory_range_is_enforced() {
        let c = ExperimentConfig::new(SpectrumSpec::PowerLaw { alpha: 4.5, l_max: 64 });
        assert!(c.validate(true).is_err());
        assert_eq!(c.validate(false).unwrap().len(), 1);
        let mut c = sample();
        c.band.as_mut().unwrap().beta = Some(0.8);
        assert!(c.validate(false).is_err());
    }

    #[test]
    fn band_degrees() {
        assert_eq!(band_limits(4.0, 0.25, 0.05), (14, 56));
        assert_eq!(band_limits(16.0, 0.25, 0.05), (10, 160));
        assert_eq!(sample().beta(), Some(0.25));
    }
}
