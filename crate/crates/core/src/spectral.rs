//! Folding bands, frequency responses on dense grids and attenuation.
//!
//! Frequencies are in cycles/sample on `[0, 1/2]`; `omega = 2 pi f`
//! internally.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::filter::{eval_polynomial, CombSpec, GcfDesign};

/// Uniform samples covering `[0, 1/2]` in a default grid.
pub const DEFAULT_GLOBAL_POINTS: usize = 4096;
/// Samples inside each folding band in a default grid.
pub const DEFAULT_POINTS_PER_BAND: usize = 129;
/// Attenuation reported for an exact zero.
pub const ATTENUATION_CAP_DB: f64 = 300.0;

/// Intervals `[k/D - f_c, k/D + f_c]`, `k = 1..=k_max`, clipped to
/// `[0, 1/2]`. Quantization noise inside them aliases onto the baseband.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldingBandSet {
    pub decimation: usize,
    pub f_c: f64,
    pub k_max: usize,
    pub bands: Vec<(f64, f64)>,
}

impl FoldingBandSet {
    pub fn contains(&self, f: f64) -> bool {
        self.band_of(f).is_some()
    }

    /// Band number `k` (1-based) containing `f`.
    pub fn band_of(&self, f: f64) -> Option<usize> {
        self.bands
            .iter()
            .position(|&(lo, hi)| f >= lo && f <= hi)
            .map(|i| i + 1)
    }

    pub fn centre(&self, k: usize) -> f64 {
        k as f64 / self.decimation as f64
    }
}

pub fn folding_bands(decimation: usize, f_c: f64) -> Result<FoldingBandSet> {
    if decimation < 2 {
        return param(format!("decimation factor {decimation} must be >= 2"));
    }
    if !(f_c > 0.0) {
        return param(format!("f_c = {f_c} must be positive"));
    }
    let limit = 1.0 / (2.0 * decimation as f64);
    if f_c >= limit {
        return Err(Error::OverlappingBands { f_c, limit });
    }
    let k_max = if decimation % 2 == 0 {
        decimation / 2
    } else {
        (decimation - 1) / 2
    };
    let bands = (1..=k_max)
        .map(|k| {
            let c = k as f64 / decimation as f64;
            ((c - f_c).max(0.0), (c + f_c).min(0.5))
        })
        .collect();
    Ok(FoldingBandSet {
        decimation,
        f_c,
        k_max,
        bands,
    })
}

/// `sin(pi f D) / (D sin(pi f))` times its linear-phase term.
fn dirichlet(decimation: usize, f: f64) -> Complex64 {
    let d = decimation as f64;
    let s = (PI * f).sin();
    let amplitude = if s.abs() < 1e-9 {
        // Series around f = 0.
        let x = PI * f;
        1.0 - (d * d - 1.0) * x * x / 6.0
    } else {
        (PI * f * d).sin() / (d * s)
    };
    Complex64::from_polar(amplitude, -PI * f * (d - 1.0))
}

/// Normalized comb response `((1/D) (1 - e^{-j 2 pi f D}) / (1 - e^{-j 2 pi f}))^N_c`.
pub fn comb_response(comb: &CombSpec, f: f64) -> Complex64 {
    dirichlet(comb.decimation, f).powu(comb.order)
}

/// `H_P H_N` at `f`: cascade through the closed-form stage factors, the
/// polyphase part reassembled from its branches. Scaled by `h_o` when
/// `normalized`.
pub fn gcf_response(design: &GcfDesign, f: f64, normalized: bool) -> Complex64 {
    design.response(2.0 * PI * f, normalized)
}

/// Anything with a frequency response in cycles/sample.
pub trait FrequencyResponse {
    fn response_at(&self, f: f64) -> Complex64;
}

impl FrequencyResponse for CombSpec {
    fn response_at(&self, f: f64) -> Complex64 {
        comb_response(self, f)
    }
}

/// Normalized GCF response.
impl FrequencyResponse for GcfDesign {
    fn response_at(&self, f: f64) -> Complex64 {
        gcf_response(self, f, true)
    }
}

/// Plain FIR coefficients `sum c(n) z^-n`.
impl FrequencyResponse for [f64] {
    fn response_at(&self, f: f64) -> Complex64 {
        eval_polynomial(self, 2.0 * PI * f)
    }
}

/// Sample frequencies plus folding-band membership.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyGrid {
    pub freqs: Vec<f64>,
    pub in_band: Vec<bool>,
}

impl FrequencyGrid {
    /// `global_points` uniform samples of `[0, 1/2]`, augmented with
    /// `points_per_band` samples across every band (edges included) and each
    /// band centre.
    pub fn new(
        bands: &FoldingBandSet,
        points_per_band: usize,
        global_points: usize,
    ) -> Result<Self> {
        if points_per_band < 2 {
            return param("points_per_band must be >= 2");
        }
        let mut freqs = linspace(0.0, 0.5, global_points.max(2));
        for (k, &(lo, hi)) in bands.bands.iter().enumerate() {
            freqs.extend(linspace(lo, hi, points_per_band));
            let c = bands.centre(k + 1);
            if c <= 0.5 {
                freqs.push(c);
            }
        }
        freqs.sort_by(f64::total_cmp);
        freqs.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);
        let in_band = freqs.iter().map(|&f| bands.contains(f)).collect();
        Ok(Self { freqs, in_band })
    }

    /// Only the in-band samples of [`FrequencyGrid::new`].
    pub fn in_band_only(bands: &FoldingBandSet, points_per_band: usize) -> Result<Self> {
        let full = Self::new(bands, points_per_band, 0)?;
        let freqs: Vec<f64> = full
            .freqs
            .iter()
            .zip(&full.in_band)
            .filter(|(_, &m)| m)
            .map(|(&f, _)| f)
            .collect();
        let in_band = vec![true; freqs.len()];
        Ok(Self { freqs, in_band })
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn in_band_freqs(&self) -> impl Iterator<Item = f64> + '_ {
        self.freqs
            .iter()
            .zip(&self.in_band)
            .filter(|(_, &m)| m)
            .map(|(&f, _)| f)
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Sampled complex response with magnitudes and band flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResponseGrid {
    pub freqs: Vec<f64>,
    pub values: Vec<Complex64>,
    pub magnitude: Vec<f64>,
    pub in_band: Vec<bool>,
}

impl ResponseGrid {
    pub fn evaluate<R: FrequencyResponse + ?Sized>(grid: &FrequencyGrid, filter: &R) -> Self {
        let values: Vec<Complex64> = grid.freqs.iter().map(|&f| filter.response_at(f)).collect();
        let magnitude = values.iter().map(|v| v.norm()).collect();
        Self {
            freqs: grid.freqs.clone(),
            values,
            magnitude,
            in_band: grid.in_band.clone(),
        }
    }

    pub fn magnitude_db(&self) -> Vec<f64> {
        self.magnitude.iter().map(|&m| to_db(m)).collect()
    }

    pub fn in_band_count(&self) -> usize {
        self.in_band.iter().filter(|&&m| m).count()
    }
}

/// `20 log10(m)`, floored at `-ATTENUATION_CAP_DB`.
pub fn to_db(m: f64) -> f64 {
    if m > 0.0 {
        (20.0 * m.log10()).max(-ATTENUATION_CAP_DB)
    } else {
        -ATTENUATION_CAP_DB
    }
}

/// Dense response of `filter` on the grid of `bands`.
pub fn response_grid<R: FrequencyResponse + ?Sized>(
    filter: &R,
    bands: &FoldingBandSet,
    points_per_band: usize,
    global_points: usize,
) -> Result<ResponseGrid> {
    let grid = FrequencyGrid::new(bands, points_per_band, global_points)?;
    Ok(ResponseGrid::evaluate(&grid, filter))
}

/// `-20 log10(max in-band |H|)` for a unit-DC-gain response, capped at
/// [`ATTENUATION_CAP_DB`].
pub fn worst_case_attenuation(grid: &ResponseGrid) -> Result<f64> {
    let worst = grid
        .magnitude
        .iter()
        .zip(&grid.in_band)
        .filter(|(_, &m)| m)
        .map(|(&v, _)| v)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    match worst {
        None => param("no in-band points in grid"),
        Some(m) => Ok(-to_db(m)),
    }
}

/// Worst-case attenuation restricted to each band.
pub fn attenuation_per_band(grid: &ResponseGrid, bands: &FoldingBandSet) -> Vec<f64> {
    let mut worst = vec![0.0f64; bands.k_max];
    for (&f, &m) in grid.freqs.iter().zip(&grid.magnitude) {
        if let Some(k) = bands.band_of(f) {
            worst[k - 1] = worst[k - 1].max(m);
        }
    }
    worst.into_iter().map(|m| -to_db(m)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{expand_full_polynomial, GcfSpec, OPTIMAL_Q};

    fn reference_design() -> GcfDesign {
        GcfDesign::new(GcfSpec::from_rho(16, -1, OPTIMAL_Q, 64.0).unwrap()).unwrap()
    }

    #[test]
    fn folding_band_examples() {
        let b = folding_bands(16, 1.0 / 128.0).unwrap();
        assert_eq!(b.k_max, 8);
        for (k, &(lo, hi)) in b.bands.iter().enumerate() {
            let c = (k + 1) as f64 / 16.0;
            assert_eq!(lo, c - 1.0 / 128.0);
            assert_eq!(hi, (c + 1.0 / 128.0).min(0.5));
        }
        let b = folding_bands(5, 0.01).unwrap();
        assert_eq!(b.k_max, 2);
        let b = folding_bands(2, 0.01).unwrap();
        assert_eq!(b.bands, vec![(0.49, 0.5)]);
        assert!(matches!(
            folding_bands(16, 1.0 / 32.0),
            Err(Error::OverlappingBands { .. })
        ));
        assert!(folding_bands(1, 0.01).is_err());
    }

    #[test]
    fn band_count_parity_rule() {
        for d in 2..=64usize {
            let b = folding_bands(d, 0.9 / (2.0 * d as f64)).unwrap();
            let expected = if d % 2 == 0 { d / 2 } else { (d - 1) / 2 };
            assert_eq!(b.k_max, expected);
            for w in b.bands.windows(2) {
                assert!(w[0].1 < w[1].0, "bands overlap for D={d}");
            }
        }
    }

    #[test]
    fn comb_response_examples() {
        let c = CombSpec::new(16, 3).unwrap();
        assert!((comb_response(&c, 0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(comb_response(&c, 1.0 / 16.0).norm() < 1e-15);
        let c1 = CombSpec::new(2, 1).unwrap();
        assert!((comb_response(&c1, 0.25).norm() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn comb_response_matches_coefficients() {
        let c = CombSpec::new(8, 3).unwrap();
        let coeffs = c.coefficients();
        for i in 0..50 {
            let f = 0.5 * i as f64 / 49.0;
            let direct = eval_polynomial(&coeffs, 2.0 * PI * f) / 512.0;
            assert!((comb_response(&c, f) - direct).norm() < 1e-12);
        }
        // The series branch near DC.
        let tiny = 1e-11;
        let direct = eval_polynomial(&coeffs, 2.0 * PI * tiny) / 512.0;
        assert!((comb_response(&c, tiny) - direct).norm() < 1e-12);
    }

    #[test]
    fn gcf_response_examples() {
        let d = reference_design();
        assert!((gcf_response(&d, 0.0, true) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let comb_like = GcfDesign::new(GcfSpec::new(16, -1, 0.0, 1.0 / 128.0).unwrap()).unwrap();
        assert!(gcf_response(&comb_like, 1.0 / 16.0, true).norm() < 1e-14);

        let f0 = 1.0 / 16.0 - d.spec.alpha() / (2.0 * PI);
        let dc = gcf_response(&d, 0.0, false).norm();
        assert!(gcf_response(&d, f0, false).norm() <= 1e-10 * dc);
        let poly = expand_full_polynomial(&d.spec);
        assert!(eval_polynomial(&poly, 2.0 * PI * f0).norm() <= 1e-10 * dc);
    }

    #[test]
    fn conjugate_symmetry() {
        let d = reference_design();
        for i in 0..40 {
            let f = 0.5 * i as f64 / 39.0;
            let w = 2.0 * PI * f;
            let pos = d.response(w, true);
            let neg = d.response(-w, true);
            assert!((pos - neg.conj()).norm() < 1e-12);
            let c = CombSpec::new(16, 3).unwrap();
            assert!((comb_response(&c, f) - comb_response(&c, -f).conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn grid_contract() {
        let bands = folding_bands(16, 1.0 / 128.0).unwrap();
        let d = reference_design();
        let g = response_grid(&d, &bands, 65, 4096).unwrap();
        assert!(g.freqs.len() >= 4096);
        assert!(g.freqs.windows(2).all(|w| w[0] < w[1]));
        for k in 1..=bands.k_max {
            let n = g.freqs.iter().filter(|&&f| bands.band_of(f) == Some(k)).count();
            assert!(n >= 65, "band {k} has {n}");
        }
        for (v, m) in g.values.iter().zip(&g.magnitude) {
            assert_eq!(v.norm(), *m);
        }
        let comb = CombSpec::new(16, 3).unwrap();
        let gc = response_grid(&comb, &bands, 65, 4096).unwrap();
        assert_eq!(gc.freqs, g.freqs);
        let zero_alpha = GcfDesign::new(GcfSpec::new(16, -1, 0.0, 1.0 / 128.0).unwrap()).unwrap();
        let gz = response_grid(&zero_alpha, &bands, 65, 4096).unwrap();
        for k in 1..=8 {
            let c = k as f64 / 16.0;
            let i = gz.freqs.iter().position(|&f| f == c).unwrap();
            assert!(gz.magnitude[i] < 1e-14);
        }
        assert!(response_grid(&d, &bands, 1, 16).is_err());
    }

    #[test]
    fn attenuation_examples() {
        let bands = folding_bands(16, 1.0 / 128.0).unwrap();
        let comb = CombSpec::new(16, 3).unwrap();
        let g = response_grid(&comb, &bands, DEFAULT_POINTS_PER_BAND, DEFAULT_GLOBAL_POINTS).unwrap();
        // Oracle: closed-form magnitude at the worst band edge.
        let f = 1.0 / 16.0 - 1.0 / 128.0;
        let edge = ((PI * f * 16.0).sin() / (16.0 * (PI * f).sin())).abs().powi(3);
        let comb_att = worst_case_attenuation(&g).unwrap();
        assert!((comb_att - (-20.0 * edge.log10())).abs() < 1e-9);
        assert!((comb_att - 51.1).abs() < 0.3);

        let gcf = response_grid(&reference_design(), &bands, 129, 4096).unwrap();
        let gain = worst_case_attenuation(&gcf).unwrap() - comb_att;
        assert!((gain - 8.0).abs() <= 2.0, "improvement {gain}");

        let only_zero = ResponseGrid {
            freqs: vec![0.0, 0.25],
            values: vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            magnitude: vec![1.0, 0.0],
            in_band: vec![false, true],
        };
        assert_eq!(worst_case_attenuation(&only_zero).unwrap(), ATTENUATION_CAP_DB);
        let empty = ResponseGrid {
            in_band: vec![false, false],
            ..only_zero
        };
        assert!(worst_case_attenuation(&empty).is_err());
    }
}
