//! Second-order sigma-delta front end followed by the fixed-point cascaded
//! GCF decimator.

mod decimator;
mod modulator;
mod psd;
mod signal;

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::filter::{GcfDesign, GcfSpec, GCF_ORDER};
use crate::fixedpoint::FixedPointFormat;

pub use decimator::{decimate_fixed_point, decimate_float, FixedPointDecimator};
pub use modulator::{sd_modulate, Modulated, MODULATOR_ORDER, OVERLOAD_THRESHOLD};
pub use psd::{welch_psd, Psd, Window};
pub use signal::{fft_convolve, generate_bandlimited_signal, lowpass_taps, LOWPASS_TAPS};

pub const MAX_AMPLITUDE: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdConfig {
    /// Sampling rate in Hz, kept for labelling only.
    pub fs: f64,
    /// Signal bandwidth over `fs`.
    pub fx_ratio: f64,
    pub amplitude: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub psd_segment: usize,
    pub psd_overlap: f64,
    pub window: Window,
}

impl Default for SdConfig {
    fn default() -> Self {
        Self {
            fs: 25_600.0,
            fx_ratio: 1.0 / 256.0,
            amplitude: 0.5,
            n_samples: 1 << 18,
            seed: 1,
            psd_segment: 4096,
            psd_overlap: 0.5,
            window: Window::Hann,
        }
    }
}

impl SdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fx_ratio > 0.0 && self.fx_ratio < 0.5) {
            return param(format!("fx_ratio = {} outside (0, 0.5)", self.fx_ratio));
        }
        if !(0.0..=MAX_AMPLITUDE).contains(&self.amplitude) {
            return param(format!(
                "amplitude = {} outside [0, {MAX_AMPLITUDE}]",
                self.amplitude
            ));
        }
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return param(format!("fs = {} must be positive", self.fs));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationRun {
    pub config: SdConfig,
    pub spec: GcfSpec,
    pub format: FixedPointFormat,
    pub input: Vec<f64>,
    pub bitstream: Vec<i8>,
    pub overload_count: usize,
    pub decimated: Vec<f64>,
    pub decimated_float: Vec<f64>,
    /// Spectrum of the two-level stream.
    pub psd_in: Psd,
    /// Spectrum of the modulator error `y - x`.
    pub psd_error: Psd,
    /// Spectrum of the decimated output, at the decimated rate.
    pub psd_out: Psd,
}

/// Generates the test signal, modulates it, decimates it in fixed point
/// and measures every spectrum.
pub fn run_experiment(
    cfg: &SdConfig,
    design: &GcfDesign,
    fmt: &FixedPointFormat,
) -> Result<SimulationRun> {
    cfg.validate()?;
    let spec = &design.spec;
    if (cfg.fx_ratio - spec.f_c()).abs() > 1e-9 * spec.f_c() {
        return param(format!(
            "signal bandwidth {} differs from filter band edge {}",
            cfg.fx_ratio,
            spec.f_c()
        ));
    }
    if GCF_ORDER < MODULATOR_ORDER + 1 {
        return param(format!(
            "order-{MODULATOR_ORDER} modulator needs filter order at least {}",
            MODULATOR_ORDER + 1
        ));
    }
    let d = spec.decimation();
    if cfg.n_samples < d * 2 {
        return param(format!("need at least {} samples", 2 * d));
    }

    let input = generate_bandlimited_signal(cfg);
    let Modulated { bits, overloads } = sd_modulate(&input);
    let decimated = decimate_fixed_point(&bits, design, fmt)?;
    let as_f64: Vec<f64> = bits.iter().map(|&b| f64::from(b)).collect();
    let decimated_float = decimate_float(&as_f64, &design.cascade, design.gain.h_o);

    let seg_in = cfg.psd_segment.min(as_f64.len());
    let seg_out = cfg.psd_segment.min(decimated.len());
    let psd_in = welch_psd(&as_f64, seg_in, cfg.psd_overlap, cfg.window)?;
    let error: Vec<f64> = as_f64.iter().zip(&input).map(|(y, x)| y - x).collect();
    let psd_error = welch_psd(&error, seg_in, cfg.psd_overlap, cfg.window)?;
    let psd_out = welch_psd(&decimated, seg_out, cfg.psd_overlap, cfg.window)?;

    Ok(SimulationRun {
        config: cfg.clone(),
        spec: spec.clone(),
        format: fmt.clone(),
        input,
        bitstream: bits,
        overload_count: overloads,
        decimated,
        decimated_float,
        psd_in,
        psd_error,
        psd_out,
    })
}

impl SimulationRun {
    /// Writes `config.json`, `bitstream.bin`, `decimated.csv`,
    /// `psd_in.csv`, `psd_error.csv` and `psd_out.csv` into `dir`.
    /// `provenance` is stored verbatim alongside the run parameters.
    pub fn write_dir(&self, dir: &Path, provenance: Option<&serde_json::Value>) -> Result<()> {
        fs::create_dir_all(dir)?;
        let config = serde_json::json!({
            "resolved_config": provenance,
            "sd_config": self.config,
            "spec": self.spec,
            "format": self.format,
            "overload_count": self.overload_count,
            "n_decimated": self.decimated.len(),
        });
        fs::write(dir.join("config.json"), serde_json::to_string_pretty(&config)?)?;

        let bytes: Vec<u8> = self.bitstream.iter().map(|&b| u8::from(b > 0)).collect();
        fs::write(dir.join("bitstream.bin"), bytes)?;

        let mut w = csv::Writer::from_path(dir.join("decimated.csv"))?;
        w.write_record(["index", "fixed", "float"])?;
        for (i, (a, b)) in self.decimated.iter().zip(&self.decimated_float).enumerate() {
            w.write_record([i.to_string(), a.to_string(), b.to_string()])?;
        }
        w.flush()?;

        for (name, psd) in [
            ("psd_in.csv", &self.psd_in),
            ("psd_error.csv", &self.psd_error),
            ("psd_out.csv", &self.psd_out),
        ] {
            write_psd(&dir.join(name), psd)?;
        }
        Ok(())
    }
}

fn write_psd(path: &Path, psd: &Psd) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["freq", "power", "power_dB"])?;
    for ((f, p), db) in psd.freq.iter().zip(&psd.power).zip(psd.power_db()) {
        w.write_record([f.to_string(), p.to_string(), db.to_string()])?;
    }
    w.flush()?;
    let mut file = w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
    file.flush()?;
    Ok(())
}

/// Least-squares slope of `10 log10(PSD)` against `log10 f` over
/// `[lo, hi]`, in dB per decade.
pub fn psd_slope(psd: &Psd, lo: f64, hi: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = psd
        .freq
        .iter()
        .zip(&psd.power)
        .filter(|(f, p)| **f >= lo && **f <= hi && **p > 0.0)
        .map(|(f, p)| (f.log10(), 10.0 * p.log10()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::OPTIMAL_Q;
    use crate::fixedpoint::integer_bits;

    fn reference_design(n: usize) -> (SdConfig, GcfDesign, FixedPointFormat) {
        let spec = GcfSpec::from_rho(16, -1, OPTIMAL_Q, 128.0).unwrap();
        let design = GcfDesign::new(spec).unwrap();
        let ib = integer_bits(&design.cascade, 1).unwrap();
        let cfg = SdConfig {
            n_samples: n,
            ..SdConfig::default()
        };
        (cfg, design, FixedPointFormat::new(1, ib.i_n_k, 7))
    }

    #[test]
    fn validation() {
        let (cfg, design, fmt) = reference_design(1 << 14);
        let loud = SdConfig { amplitude: 0.9, ..cfg.clone() };
        assert!(run_experiment(&loud, &design, &fmt).is_err());
        let wide = SdConfig { fx_ratio: 1.0 / 128.0, ..cfg };
        assert!(run_experiment(&wide, &design, &fmt).is_err());
    }

    #[test]
    fn runs_are_reproducible_and_sized() {
        let (cfg, design, fmt) = reference_design(1 << 14);
        let a = run_experiment(&cfg, &design, &fmt).unwrap();
        let b = run_experiment(&cfg, &design, &fmt).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.decimated.len(), (1 << 14) / 16);
        assert!(a.bitstream.iter().all(|&v| v == 1 || v == -1));
        for (x, y) in a.decimated.iter().zip(&a.decimated_float) {
            assert!((x - y).abs() <= 1e-2);
        }
    }

    #[test]
    fn silent_input_gives_quiet_output() {
        let (cfg, design, fmt) = reference_design(1 << 14);
        let cfg = SdConfig { amplitude: 0.0, ..cfg };
        let run = run_experiment(&cfg, &design, &fmt).unwrap();
        let mean = run.decimated[8..].iter().sum::<f64>() / (run.decimated.len() - 8) as f64;
        assert!(mean.abs() < 1e-2);
        assert!(run.decimated[8..].iter().all(|v| v.abs() < 0.05));
    }

    #[test]
    fn writes_all_artifacts() {
        let (cfg, design, fmt) = reference_design(1 << 12);
        let run = run_experiment(&SdConfig { psd_segment: 128, ..cfg }, &design, &fmt).unwrap();
        let dir = tempfile::tempdir().unwrap();
        run.write_dir(dir.path(), Some(&serde_json::json!({"seed": 1}))).unwrap();
        let bin = std::fs::read(dir.path().join("bitstream.bin")).unwrap();
        assert_eq!(bin.len(), 1 << 12);
        assert!(bin.iter().all(|&b| b <= 1));
        for f in ["config.json", "decimated.csv", "psd_in.csv", "psd_out.csv", "psd_error.csv"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let head = std::fs::read_to_string(dir.path().join("psd_out.csv")).unwrap();
        assert!(head.starts_with("freq,power,power_dB"));
    }

    #[test]
    fn slope_of_synthetic_power_law() {
        let freq: Vec<f64> = (1..1000).map(|k| k as f64 / 2000.0).collect();
        let power = freq.iter().map(|f| f * f * f * f).collect();
        let s = psd_slope(&Psd { freq, power }, 1e-3, 1e-2).unwrap();
        assert!((s - 40.0).abs() < 1e-9);
    }
}
