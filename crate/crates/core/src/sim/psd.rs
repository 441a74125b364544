use std::f64::consts::PI;
use std::str::FromStr;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            // Periodic Hann, the usual choice for spectral averaging.
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
            Window::Rectangular => vec![1.0; n],
        }
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hann" => Ok(Self::Hann),
            "rectangular" | "rect" => Ok(Self::Rectangular),
            other => param(format!("unknown window '{other}'")),
        }
    }
}

/// One-sided power spectral density on `[0, 1/2]` (cycles/sample).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Psd {
    pub freq: Vec<f64>,
    pub power: Vec<f64>,
}

impl Psd {
    pub fn power_db(&self) -> Vec<f64> {
        self.power.iter().map(|p| 10.0 * p.max(1e-300).log10()).collect()
    }

    /// `sum PSD * df`, which equals the variance of the analysed signal.
    pub fn total_power(&self) -> f64 {
        let df = if self.freq.len() > 1 { self.freq[1] - self.freq[0] } else { 0.0 };
        self.power.iter().sum::<f64>() * df
    }

    /// Power in `[lo, hi]`.
    pub fn band_power(&self, lo: f64, hi: f64) -> f64 {
        let df = if self.freq.len() > 1 { self.freq[1] - self.freq[0] } else { 0.0 };
        self.freq
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(_, p)| p * df)
            .sum()
    }

    /// Median density in `[lo, hi]`, in dB.
    pub fn median_db(&self, lo: f64, hi: f64) -> Option<f64> {
        let mut v: Vec<f64> = self
            .freq
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(_, p)| *p)
            .collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(10.0 * v[v.len() / 2].max(1e-300).log10())
    }
}

/// Welch-averaged periodogram with per-segment mean removal.
pub fn welch_psd(x: &[f64], segment: usize, overlap: f64, window: Window) -> Result<Psd> {
    if segment < 2 {
        return param(format!("segment length {segment} too short"));
    }
    if segment > x.len() {
        return param(format!(
            "segment length {segment} exceeds signal length {}",
            x.len()
        ));
    }
    if !(0.0..=0.9).contains(&overlap) {
        return param(format!("overlap {overlap} outside [0, 0.9]"));
    }
    let hop = segment - (overlap * segment as f64).round() as usize;
    let hop = hop.max(1);
    let w = window.coefficients(segment);
    let w_energy: f64 = w.iter().map(|v| v * v).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(segment);

    let bins = segment / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut count = 0usize;
    let mut buf = vec![Complex64::new(0.0, 0.0); segment];
    let mut start = 0;
    while start + segment <= x.len() {
        let seg = &x[start..start + segment];
        let mean = seg.iter().sum::<f64>() / segment as f64;
        for ((b, &s), &wi) in buf.iter_mut().zip(seg).zip(&w) {
            *b = Complex64::new((s - mean) * wi, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        count += 1;
        start += hop;
    }
    let scale = 1.0 / (w_energy * count as f64);
    let power = acc
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let one_sided = if k == 0 || (segment % 2 == 0 && k == segment / 2) { 1.0 } else { 2.0 };
            v * scale * one_sided
        })
        .collect();
    let freq = (0..bins).map(|k| k as f64 / segment as f64).collect();
    Ok(Psd { freq, power })
}
