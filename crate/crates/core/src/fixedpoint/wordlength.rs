use std::fmt;

use serde::Serialize;
use statrs::function::erf::erf;

use super::{sensitivity, FixedPointFormat, Normalization, ToleranceSpec};
use crate::error::{param, Error, Result};
use crate::filter::{CascadeCoefficients, GcfDesign, GcfSpec};
use crate::spectral::{FoldingBandSet, FrequencyGrid};

/// Fewest in-band samples per folding band accepted by [`fractional_bits`].
pub const MIN_POINTS_PER_BAND: usize = 65;

/// Multiplier `y` such that a zero-mean Gaussian lies within `+-y sigma`
/// with probability `prob`: solves `prob = erf(y / sqrt 2)` by bisection.
pub fn y_from_p(prob: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return param(format!("probability {prob} outside (0, 1)"));
    }
    let coverage = |y: f64| erf(y / std::f64::consts::SQRT_2);
    let (mut lo, mut hi) = (0.0f64, 40.0f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if coverage(mid) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FractionalBits {
    pub f_n: u32,
    /// Argument of the ceiling, `-log2(sqrt 12 * min chi / (y sqrt S_T))`.
    pub exact: f64,
    /// In-band frequency attaining the minimum.
    pub binding_freq: f64,
    pub s_t_max: f64,
}

/// `F_n = ceil(-log2(sqrt(12) * min_FB chi / (y sqrt(S_T))))`, clamped at 0.
pub fn fractional_bits(
    design: &GcfDesign,
    tol: &ToleranceSpec,
    bands: &FoldingBandSet,
    grid: &FrequencyGrid,
    mode: Normalization,
) -> Result<FractionalBits> {
    let mut per_band = vec![0usize; bands.k_max];
    let mut freqs = Vec::new();
    for f in grid.in_band_freqs() {
        if let Some(k) = bands.band_of(f) {
            per_band[k - 1] += 1;
            freqs.push(f);
        }
    }
    if let Some(k) = per_band.iter().position(|&n| n < MIN_POINTS_PER_BAND) {
        return param(format!(
            "folding band {} has {} grid points, need at least {MIN_POINTS_PER_BAND}",
            k + 1,
            per_band[k]
        ));
    }
    let s = sensitivity(design, &freqs, mode);
    let (binding_freq, s_t_max) = s
        .freqs
        .iter()
        .zip(&s.s_t)
        .fold((f64::NAN, 0.0f64), |best, (&f, &v)| if v > best.1 { (f, v) } else { best });
    if !(s_t_max > 0.0) {
        return Err(Error::Internal("sensitivity vanishes over every folding band".into()));
    }
    // min chi / (y sqrt S) is attained where S_T is largest since chi is constant.
    let ratio = tol.chi / (tol.y * s_t_max.sqrt());
    let exact = -(12f64.sqrt() * ratio).log2();
    Ok(FractionalBits {
        f_n: exact.ceil().max(0.0) as u32,
        exact,
        binding_freq,
        s_t_max,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegerBits {
    /// Worst-case growth `log2(2 + 2 |r_k|)` of each stage, in bits: the
    /// absolute coefficient sum, equal to `log2(2 + 2 r_k)` whenever
    /// `r_k >= 0`.
    pub g_k: Vec<f64>,
    /// Integer bits after each stage, `input_width + sum_{j <= k} ceil(g_j)`.
    pub i_n_k: Vec<u32>,
}

pub fn integer_bits(cascade: &CascadeCoefficients, input_width: u32) -> Result<IntegerBits> {
    if input_width < 1 {
        return param("input width must be at least one bit");
    }
    let g_k: Vec<f64> = cascade.r.iter().map(|r| (2.0 + 2.0 * r.abs()).log2()).collect();
    let i_n_k = g_k
        .iter()
        .scan(input_width, |acc, g| {
            *acc += g.ceil() as u32;
            Some(*acc)
        })
        .collect();
    Ok(IntegerBits { g_k, i_n_k })
}

/// Outcome of a full word-length design.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordLengthReport {
    pub spec: GcfSpec,
    pub tolerance: ToleranceSpec,
    pub normalization: Normalization,
    pub input_width: u32,
    pub f_n: u32,
    pub f_n_exact: f64,
    pub binding_freq: f64,
    pub s_t_max: f64,
    pub g_k: Vec<f64>,
    pub i_n_k: Vec<u32>,
    pub total_bits: u32,
}

impl WordLengthReport {
    pub fn format(&self) -> FixedPointFormat {
        FixedPointFormat::new(self.input_width, self.i_n_k.clone(), self.f_n)
    }
}

impl fmt::Display for WordLengthReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.spec;
        writeln!(f, "GCF word-length design")?;
        writeln!(f, "  D = {} (D1 = {}, D2 = {}, pp = {})", s.decimation(), s.d1(), s.d2(), s.pp())?;
        writeln!(f, "  q = {}, f_c = {:.6}, alpha = {:.7} rad", s.q(), s.f_c(), s.alpha())?;
        writeln!(
            f,
            "  chi = {:e}, p = {:.4}, y = {:.4}, normalization = {:?}",
            self.tolerance.chi, self.tolerance.prob, self.tolerance.y, self.normalization
        )?;
        writeln!(
            f,
            "  F_n = {} (exact {:.4}), binding f = {:.6}, max S_T = {:.4e}",
            self.f_n, self.f_n_exact, self.binding_freq, self.s_t_max
        )?;
        writeln!(f, "  stage   G_k      I_n^k")?;
        for (k, (g, i)) in self.g_k.iter().zip(&self.i_n_k).enumerate() {
            writeln!(f, "  {:>5}   {:<7.4}  {}", k as u32 + s.first_stage(), g, i)?;
        }
        write!(f, "  total coefficient/datapath width = {} bits", self.total_bits)
    }
}

/// Runs fractional and integer sizing on the default band grid.
pub fn design_word_lengths(
    design: &GcfDesign,
    tol: &ToleranceSpec,
    input_width: u32,
    points_per_band: usize,
    mode: Normalization,
) -> Result<WordLengthReport> {
    let spec = &design.spec;
    let bands = crate::spectral::folding_bands(spec.decimation(), spec.f_c())?;
    let grid = FrequencyGrid::in_band_only(&bands, points_per_band)?;
    let frac = fractional_bits(design, tol, &bands, &grid, mode)?;
    let int = integer_bits(&design.cascade, input_width)?;
    let fmt = FixedPointFormat::new(input_width, int.i_n_k.clone(), frac.f_n);
    Ok(WordLengthReport {
        spec: spec.clone(),
        tolerance: *tol,
        normalization: mode,
        input_width,
        f_n: frac.f_n,
        f_n_exact: frac.exact,
        binding_freq: frac.binding_freq,
        s_t_max: frac.s_t_max,
        g_k: int.g_k,
        i_n_k: int.i_n_k,
        total_bits: fmt.total,
    })
}
