use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use gcf_core::filter::OPTIMAL_Q;
use gcf_core::fixedpoint::{Normalization, ToleranceSpec};
use gcf_core::sim::SdConfig;
use gcf_core::spectral::{folding_bands, FoldingBandSet};
use gcf_core::{GcfDesign, GcfSpec};

use crate::error::CliError;

/// Everything a command needs. Loaded from JSON, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignConfig {
    pub decimation_factor: usize,
    pub pp_split: i32,
    pub q: f64,
    /// Band edge in cycles/sample. Exclusive with `rho`.
    pub f_c: Option<f64>,
    /// Oversampling ratio, `f_c = 1 / (2 rho)`.
    pub rho: Option<f64>,
    pub chi: f64,
    pub prob: f64,
    /// Overrides the multiplier derived from `prob`.
    pub y: Option<f64>,
    /// Integer bits of the input word. Required by `design` and `simulate`.
    pub input_width: Option<u32>,
    /// Overrides the designed fraction width.
    pub f_n: Option<u32>,
    pub points_per_band: usize,
    pub global_points: usize,
    pub normalization: Normalization,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub trials: usize,
    pub n_samples: usize,
    pub amplitude: f64,
    pub fs: f64,
    /// Signal bandwidth over `fs`; defaults to `f_c`.
    pub fx_ratio: Option<f64>,
    pub psd_segment: usize,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            decimation_factor: 16,
            pp_split: -1,
            q: OPTIMAL_Q,
            f_c: None,
            rho: None,
            chi: 1e-4,
            prob: 0.95,
            y: None,
            input_width: None,
            f_n: None,
            points_per_band: 129,
            global_points: 4096,
            normalization: Normalization::UnitGain,
            out_dir: PathBuf::from("out"),
            seed: 1,
            trials: 2000,
            n_samples: 1 << 18,
            amplitude: 0.5,
            fs: 25_600.0,
            fx_ratio: None,
            psd_segment: 4096,
        }
    }
}

/// Flag overrides, one per config key.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON config file; flags take precedence over its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub decimation_factor: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub pp_split: Option<i32>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub f_c: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub chi: Option<f64>,
    #[arg(long)]
    pub prob: Option<f64>,
    #[arg(long)]
    pub y: Option<f64>,
    #[arg(long)]
    pub input_width: Option<u32>,
    #[arg(long)]
    pub f_n: Option<u32>,
    #[arg(long)]
    pub points_per_band: Option<usize>,
    #[arg(long)]
    pub global_points: Option<usize>,
    /// unit_gain or raw.
    #[arg(long)]
    pub normalization: Option<String>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub fs: Option<f64>,
    #[arg(long)]
    pub fx_ratio: Option<f64>,
    #[arg(long)]
    pub psd_segment: Option<usize>,
}

macro_rules! apply {
    ($cfg:ident, $ov:ident, $($field:ident),*) => {
        $(if let Some(v) = $ov.$field.clone() { $cfg.$field = v; })*
    };
}

macro_rules! apply_opt {
    ($cfg:ident, $ov:ident, $($field:ident),*) => {
        $(if let Some(v) = $ov.$field { $cfg.$field = Some(v); })*
    };
}

impl DesignConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn resolve(ov: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match &ov.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        apply!(
            cfg, ov, decimation_factor, pp_split, q, chi, prob, points_per_band, global_points,
            out_dir, seed, trials, n_samples, amplitude, fs, psd_segment
        );
        apply_opt!(cfg, ov, y, input_width, f_n, fx_ratio);
        // A band-edge flag replaces whichever form the file used.
        if let Some(f) = ov.f_c {
            cfg.f_c = Some(f);
            cfg.rho = None;
        }
        if let Some(r) = ov.rho {
            cfg.rho = Some(r);
            cfg.f_c = None;
        }
        if let Some(n) = &ov.normalization {
            cfg.normalization = n.parse()?;
        }
        if cfg.f_c.is_some() && cfg.rho.is_some() {
            return Err(CliError::Config("give either f_c or rho, not both".into()));
        }
        if cfg.f_c.is_none() && cfg.rho.is_none() {
            cfg.rho = Some(64.0);
        }
        Ok(cfg)
    }

    pub fn band_edge(&self) -> f64 {
        match (self.f_c, self.rho) {
            (Some(f), _) => f,
            (None, Some(r)) => 1.0 / (2.0 * r),
            (None, None) => 1.0 / 128.0,
        }
    }

    pub fn spec(&self) -> Result<GcfSpec, CliError> {
        let spec = match self.rho {
            Some(r) if self.f_c.is_none() => {
                GcfSpec::from_rho(self.decimation_factor, self.pp_split, self.q, r)?
            }
            _ => GcfSpec::new(self.decimation_factor, self.pp_split, self.q, self.band_edge())?,
        };
        folding_bands(spec.decimation(), spec.f_c())?;
        Ok(spec)
    }

    pub fn design(&self) -> Result<GcfDesign, CliError> {
        Ok(GcfDesign::new(self.spec()?)?)
    }

    pub fn bands(&self) -> Result<FoldingBandSet, CliError> {
        Ok(folding_bands(self.decimation_factor, self.band_edge())?)
    }

    pub fn tolerance(&self) -> Result<ToleranceSpec, CliError> {
        Ok(match self.y {
            Some(y) => ToleranceSpec::with_y(self.chi, y)?,
            None => ToleranceSpec::from_prob(self.chi, self.prob)?,
        })
    }

    pub fn require_input_width(&self) -> Result<u32, CliError> {
        self.input_width
            .ok_or_else(|| CliError::Config("input_width is required (integer bits of the input word)".into()))
    }

    pub fn sd_config(&self) -> SdConfig {
        SdConfig {
            fs: self.fs,
            fx_ratio: self.fx_ratio.unwrap_or_else(|| self.band_edge()),
            amplitude: self.amplitude,
            n_samples: self.n_samples,
            seed: self.seed,
            psd_segment: self.psd_segment,
            ..SdConfig::default()
        }
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}
