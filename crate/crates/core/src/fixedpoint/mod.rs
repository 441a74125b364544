//! Statistical word-length design of GCF coefficients.
//!
//! Each of the `N` multipliers of a realization is rounded to `F_n` fraction
//! bits. The rounding errors are modeled as independent uniform variables of
//! variance `2^(-2 F_n) / 12`, which makes the magnitude error `Delta|H|`
//! approximately Gaussian with variance `sigma_dm^2 * S_T(omega)`, where
//! `S_T` is the sum of squared multiplier sensitivities. `F_n` is then the
//! smallest fraction width keeping `y * sigma` below the tolerance `chi` over
//! every folding band.
//!
//! # Normalization
//!
//! [`Normalization::UnitGain`] is the default. It describes a realization
//! with unit DC gain whose polyphase bank stores the unit-gain coefficients
//! `h_p(n) / H_P(1)` and whose cascade stores `r_k` followed by the exact
//! scalar `1 / H_N(1)`. Under this convention the fully polyphase case keeps
//! `S_T = 3 D1 - 2`, and the pure cascade sees `h_o^2 sum |dH_N/dr_u|^2`.
//! [`Normalization::Raw`] drops every scale factor.

mod montecarlo;
mod quantize;
mod sensitivity;
mod wordlength;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

pub use montecarlo::{monte_carlo_coverage, CoverageReport};
pub use quantize::{quantization_error_response, quantize_coefficients, ErrorStats, Realization};
pub use sensitivity::{sensitivity, SensitivityCase, SensitivityResult};
pub use wordlength::{
    design_word_lengths, fractional_bits, integer_bits, y_from_p, FractionalBits, IntegerBits,
    WordLengthReport,
};

/// Scale convention for sensitivities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    UnitGain,
    Raw,
}

impl std::str::FromStr for Normalization {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit_gain" | "normalized" => Ok(Self::UnitGain),
            "raw" | "unnormalized" => Ok(Self::Raw),
            other => param(format!("unknown normalization '{other}'")),
        }
    }
}

/// Tolerance `chi` on `|Delta|H||` over the folding bands, met with
/// probability `prob`, i.e. `|Delta|H|| <= y sigma` where
/// `prob = erf(y / sqrt 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToleranceSpec {
    pub chi: f64,
    pub prob: f64,
    pub y: f64,
}

impl ToleranceSpec {
    /// Derives `y` from the coverage probability.
    pub fn from_prob(chi: f64, prob: f64) -> Result<Self> {
        check_chi(chi)?;
        let y = y_from_p(prob)?;
        Ok(Self { chi, prob, y })
    }

    /// Uses a given multiplier `y` (e.g. the rounded `2` or `1.63`).
    pub fn with_y(chi: f64, y: f64) -> Result<Self> {
        check_chi(chi)?;
        if !(y > 0.0 && y.is_finite()) {
            return param(format!("y = {y} must be positive"));
        }
        let prob = statrs::function::erf::erf(y / std::f64::consts::SQRT_2);
        Ok(Self { chi, prob, y })
    }
}

fn check_chi(chi: f64) -> Result<()> {
    if !(chi > 0.0 && chi.is_finite()) {
        return param(format!("tolerance chi = {chi} must be positive"));
    }
    Ok(())
}

/// Sign / integer / fraction allocation of the datapath.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixedPointFormat {
    pub sign_bits: u32,
    /// Integer bits of the input word.
    pub input_width: u32,
    /// Integer bits after each cascade stage.
    pub i_n: Vec<u32>,
    /// Fraction bits of every coefficient.
    pub f_n: u32,
    pub total: u32,
}

impl FixedPointFormat {
    pub fn new(input_width: u32, i_n: Vec<u32>, f_n: u32) -> Self {
        let widest = i_n.iter().copied().max().unwrap_or(input_width);
        Self {
            sign_bits: 1,
            input_width,
            i_n,
            f_n,
            total: 1 + widest + f_n,
        }
    }
}
