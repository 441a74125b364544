use std::f64::consts::PI;

use serde::Serialize;

use super::Normalization;
use crate::filter::GcfDesign;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SensitivityCase {
    /// `pp = -1`: the cascade alone.
    FullCascade,
    /// `pp = p - 1`: the polyphase bank alone.
    FullPolyphase,
    /// Polyphase bank followed by a shorter cascade.
    Partial,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityResult {
    pub freqs: Vec<f64>,
    pub s_t: Vec<f64>,
    pub case: SensitivityCase,
    pub mode: Normalization,
    /// Quantized multipliers: `p` for the pure cascade (the trivial bank has
    /// none), otherwise `L + p - pp - 1`.
    pub n_multipliers: usize,
}

impl SensitivityResult {
    pub fn max(&self) -> f64 {
        self.s_t.iter().copied().fold(0.0, f64::max)
    }
}

/// Sum of squared multiplier sensitivities `S_T` at each frequency
/// (cycles/sample). Cascade derivatives use the product form, so stage zeros
/// inside the folding bands are handled without a 0/0.
pub fn sensitivity(design: &GcfDesign, freqs: &[f64], mode: Normalization) -> SensitivityResult {
    let spec = &design.spec;
    let bank_len = design.bank.len();
    let case = if spec.is_cascaded() {
        SensitivityCase::FullCascade
    } else if spec.is_full_polyphase() {
        SensitivityCase::FullPolyphase
    } else {
        SensitivityCase::Partial
    };
    let n_multipliers = match case {
        SensitivityCase::FullCascade => design.cascade.len(),
        _ => bank_len + design.cascade.len(),
    };

    let (bank_scale, cascade_scale) = match mode {
        Normalization::UnitGain => (1.0 / design.bank.dc_gain(), 1.0 / design.cascade.dc_gain()),
        Normalization::Raw => (1.0, 1.0),
    };

    let s_t = freqs
        .iter()
        .map(|&f| {
            let omega = 2.0 * PI * f;
            match case {
                SensitivityCase::FullPolyphase => bank_len as f64,
                SensitivityCase::FullCascade => {
                    cascade_scale.powi(2) * cascade_derivative_energy(design, omega)
                }
                SensitivityCase::Partial => {
                    let h_n = design.cascade.response(omega).norm_sqr() * cascade_scale.powi(2);
                    let h_p = design.bank.response(omega).norm_sqr() * bank_scale.powi(2);
                    bank_len as f64 * h_n
                        + h_p * cascade_scale.powi(2) * cascade_derivative_energy(design, omega)
                }
            }
        })
        .collect();

    SensitivityResult {
        freqs: freqs.to_vec(),
        s_t,
        case,
        mode,
        n_multipliers,
    }
}

fn cascade_derivative_energy(design: &GcfDesign, omega: f64) -> f64 {
    design
        .cascade_derivatives(omega)
        .iter()
        .map(|d| d.norm_sqr())
        .sum()
}
