use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::{sensitivity, Normalization};
use crate::error::{param, Result};
use crate::filter::{eval_polynomial, multiply_stage, CascadeCoefficients, GcfDesign};

/// Rounds each value to `f_n` fraction bits, ties away from zero.
pub fn quantize_coefficients(values: &[f64], f_n: u32) -> Vec<f64> {
    let scale = 2f64.powi(f_n.min(1023) as i32);
    values.iter().map(|v| (v * scale).round() / scale).collect()
}

/// The multipliers a unit-DC-gain realization stores: the polyphase bank
/// scaled to unit gain (absent for the pure cascade) and the cascade `r_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Realization {
    pub bank: Vec<f64>,
    pub cascade: CascadeCoefficients,
}

impl Realization {
    pub fn exact(design: &GcfDesign) -> Self {
        let bank = if design.spec.is_cascaded() {
            Vec::new()
        } else {
            design.bank.unit_gain()
        };
        Self {
            bank,
            cascade: design.cascade.clone(),
        }
    }

    pub fn quantized(&self, f_n: u32) -> Self {
        Self {
            bank: quantize_coefficients(&self.bank, f_n),
            cascade: CascadeCoefficients {
                first_stage: self.cascade.first_stage,
                r: quantize_coefficients(&self.cascade.r, f_n),
            },
        }
    }

    pub fn n_multipliers(&self) -> usize {
        self.bank.len() + self.cascade.len()
    }

    /// Bank coefficients followed by the cascade multipliers.
    pub fn multipliers(&self) -> Vec<f64> {
        self.bank.iter().chain(&self.cascade.r).copied().collect()
    }

    pub fn with_multipliers(&self, values: &[f64]) -> Result<Self> {
        if values.len() != self.n_multipliers() {
            return param(format!(
                "expected {} multipliers, got {}",
                self.n_multipliers(),
                values.len()
            ));
        }
        let (bank, r) = values.split_at(self.bank.len());
        Ok(Self {
            bank: bank.to_vec(),
            cascade: CascadeCoefficients {
                first_stage: self.cascade.first_stage,
                r: r.to_vec(),
            },
        })
    }

    pub fn dc_gain(&self) -> f64 {
        let bank: f64 = if self.bank.is_empty() { 1.0 } else { self.bank.iter().sum() };
        bank * self.cascade.dc_gain()
    }

    /// Unscaled response at `f` (cycles/sample).
    pub fn response(&self, f: f64) -> Complex64 {
        let omega = 2.0 * PI * f;
        let bank = if self.bank.is_empty() {
            Complex64::new(1.0, 0.0)
        } else {
            eval_polynomial(&self.bank, omega)
        };
        bank * self.cascade.response(omega)
    }

    /// `|H(f)| / H(0)`: the realization rescaled to its own unit DC gain.
    pub fn normalized_magnitude(&self, f: f64) -> f64 {
        self.response(f).norm() / self.dc_gain().abs()
    }

    /// Explicit impulse response, unscaled.
    pub fn expanded(&self) -> Vec<f64> {
        let start = if self.bank.is_empty() { vec![1.0] } else { self.bank.clone() };
        self.cascade
            .stages()
            .fold(start, |acc, (k, r)| multiply_stage(&acc, k, r))
    }
}

/// Per-frequency terms reused across many evaluations of perturbed
/// realizations of the same structure. Magnitudes are scaled by the exact
/// realization's `1 / H(1)`, which is not itself perturbed.
pub(crate) struct MagnitudeBasis {
    bank_len: usize,
    bank_terms: Vec<Complex64>,
    stage_terms: Vec<(f64, f64)>,
    stages: usize,
    scale: f64,
}

impl MagnitudeBasis {
    pub(crate) fn new(real: &Realization, freqs: &[f64]) -> Self {
        let bank_len = real.bank.len();
        let stages = real.cascade.len();
        let mut bank_terms = Vec::with_capacity(freqs.len() * bank_len);
        let mut stage_terms = Vec::with_capacity(freqs.len() * stages);
        for &f in freqs {
            let omega = 2.0 * PI * f;
            bank_terms.extend((0..bank_len).map(|n| Complex64::cis(-omega * n as f64)));
            stage_terms.extend(real.cascade.stages().map(|(k, _)| {
                let x = f64::from(1u32 << k) * omega / 2.0;
                ((3.0 * x).cos(), x.cos())
            }));
        }
        Self {
            bank_len,
            bank_terms,
            stage_terms,
            stages,
            scale: 1.0 / real.dc_gain().abs(),
        }
    }

    /// Scaled magnitude at the `i`-th frequency for multipliers laid out
    /// as in [`Realization::multipliers`].
    pub(crate) fn magnitude(&self, i: usize, multipliers: &[f64]) -> f64 {
        let (bank, r) = multipliers.split_at(self.bank_len);
        let bank_mag = if self.bank_len == 0 {
            1.0
        } else {
            let terms = &self.bank_terms[i * self.bank_len..(i + 1) * self.bank_len];
            let v: Complex64 = terms.iter().zip(bank).map(|(t, &c)| t * c).sum();
            v.norm()
        };
        let terms = &self.stage_terms[i * self.stages..(i + 1) * self.stages];
        let mag = terms
            .iter()
            .zip(r)
            .fold(bank_mag, |m, (&(c3, c1), &rk)| m * 2.0 * (c3 + rk * c1).abs());
        mag * self.scale
    }
}

/// Realized magnitude error of a quantized design together with the model
/// standard deviation `sigma_dm sqrt(S_T)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorStats {
    pub freqs: Vec<f64>,
    /// `2^-f_n / sqrt 12`.
    pub sigma_dm: f64,
    pub sigma_dh: Vec<f64>,
    /// `|H_q| - |H|`, both rescaled to unit DC gain.
    pub delta_h: Vec<f64>,
}

impl ErrorStats {
    pub fn max_abs_delta(&self) -> f64 {
        self.delta_h.iter().fold(0.0, |m, d| m.max(d.abs()))
    }
}

pub fn quantization_error_response(design: &GcfDesign, f_n: u32, freqs: &[f64]) -> ErrorStats {
    let exact = Realization::exact(design);
    let quant = exact.quantized(f_n);
    let delta_h = freqs
        .iter()
        .map(|&f| quant.normalized_magnitude(f) - exact.normalized_magnitude(f))
        .collect();
    let sigma_dm = 2f64.powi(-(f_n.min(1023) as i32)) / 12f64.sqrt();
    let s = sensitivity(design, freqs, Normalization::UnitGain);
    ErrorStats {
        freqs: freqs.to_vec(),
        sigma_dm,
        sigma_dh: s.s_t.iter().map(|v| sigma_dm * v.sqrt()).collect(),
        delta_h,
    }
}
