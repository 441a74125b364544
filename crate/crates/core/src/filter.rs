//! Coefficient construction for third-order generalized comb filters.
//!
//! The decimation factor `D = 2^p` is split as `D = D1 * D2` with
//! `D1 = 2^(pp + 1)`. The transfer function factorizes as
//! `H(z) = h_o * H_P(z) * H_N(z)`: `H_P` is a polyphase bank decimating by
//! `D1`, `H_N` a cascade of `p - pp - 1` sparse four-tap stages
//! `1 + r_k (z^-2^k + z^-2*2^k) + z^-3*2^k`, each decimating by two once
//! commutated.
//!
//! The multiplier of the polyphase block sequence `x_t` is
//! `r = 1 + 2 cos(alpha * D1)`. This is the value forced by the factorization
//! `(1 - z^-D1)(1 - e^{j alpha D1} z^-D1)(1 - e^{-j alpha D1} z^-D1)`; the
//! variant `1 + cos(alpha * D1)` found in some write-ups does not reduce to
//! `[1, 3, 3, 1]` for `D1 = 2, alpha = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{param, Error, Result};

/// Zero-rotation parameter giving the best folding-band rejection for the
/// third-order GCF.
pub const OPTIMAL_Q: f64 = 0.79;

/// Order of every GCF built by this crate.
pub const GCF_ORDER: u32 = 3;

/// Zero rotation `alpha = q * 2 * pi * f_c` in radians.
pub fn compute_alpha(q: f64, f_c: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return param(format!("q = {q} outside [0, 1]"));
    }
    if !(f_c > 0.0 && f_c < 0.5) {
        return param(format!("f_c = {f_c} outside (0, 0.5)"));
    }
    Ok(q * 2.0 * PI * f_c)
}

/// `r_k = 1 + 2 cos(2^k alpha)`.
pub fn stage_multiplier(alpha: f64, k: u32) -> f64 {
    1.0 + 2.0 * (f64::from(1u32 << k) * alpha).cos()
}

/// Multiplier of the sparse block sequence feeding the polyphase bank.
pub fn block_multiplier(alpha: f64, d1: usize) -> f64 {
    1.0 + 2.0 * (alpha * d1 as f64).cos()
}

/// Complete parameterization of one GCF design.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GcfSpec {
    decimation: usize,
    p: u32,
    pp: i32,
    d1: usize,
    d2: usize,
    q: f64,
    f_c: f64,
    alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
}

impl GcfSpec {
    /// Builds and validates a design. `pp` selects the split: `-1` is the
    /// pure cascade, `p - 1` the pure polyphase form.
    pub fn new(decimation: usize, pp: i32, q: f64, f_c: f64) -> Result<Self> {
        if decimation < 2 || !decimation.is_power_of_two() {
            return param(format!(
                "decimation factor {decimation} must be a power of two >= 2"
            ));
        }
        let p = decimation.trailing_zeros();
        if pp < -1 || pp > p as i32 - 1 {
            return param(format!("split pp = {pp} outside [-1, {}]", p as i32 - 1));
        }
        let limit = 1.0 / (2.0 * decimation as f64);
        if !(f_c > 0.0) {
            return param(format!("f_c = {f_c} must be positive"));
        }
        if f_c >= limit {
            return Err(Error::OverlappingBands { f_c, limit });
        }
        let alpha = compute_alpha(q, f_c)?;
        let d1 = 1usize << (pp + 1);
        Ok(Self {
            decimation,
            p,
            pp,
            d1,
            d2: decimation / d1,
            q,
            f_c,
            alpha,
            rho: None,
        })
    }

    /// Pure cascade (`pp = -1`).
    pub fn cascaded(decimation: usize, q: f64, f_c: f64) -> Result<Self> {
        Self::new(decimation, -1, q, f_c)
    }

    /// Design whose input bandwidth follows from the oversampling ratio,
    /// `f_c = 1 / (2 rho)`.
    pub fn from_rho(decimation: usize, pp: i32, q: f64, rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return param(format!("oversampling ratio {rho} must be positive"));
        }
        Ok(Self::new(decimation, pp, q, 1.0 / (2.0 * rho))?.with_rho(rho))
    }

    /// Design with an explicit rotation; `q` is recovered as
    /// `alpha / (2 pi f_c)` and must lie in `[0, 1]`.
    pub fn from_alpha(decimation: usize, pp: i32, alpha: f64, f_c: f64) -> Result<Self> {
        if !(f_c > 0.0) {
            return param(format!("f_c = {f_c} must be positive"));
        }
        let q = alpha / (2.0 * PI * f_c);
        let mut spec = Self::new(decimation, pp, q, f_c)?;
        spec.alpha = alpha;
        Ok(spec)
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = Some(rho);
        self
    }

    /// Same filter, different split of the decimation factor.
    pub fn with_split(&self, pp: i32) -> Result<Self> {
        let mut spec = Self::new(self.decimation, pp, self.q, self.f_c)?;
        spec.alpha = self.alpha;
        spec.rho = self.rho;
        Ok(spec)
    }

    pub fn decimation(&self) -> usize {
        self.decimation
    }
    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn pp(&self) -> i32 {
        self.pp
    }
    pub fn d1(&self) -> usize {
        self.d1
    }
    pub fn d2(&self) -> usize {
        self.d2
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn f_c(&self) -> f64 {
        self.f_c
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn rho(&self) -> Option<f64> {
        self.rho
    }

    /// Number of cascaded two-fold stages, `p - pp - 1`.
    pub fn cascade_len(&self) -> usize {
        (self.p as i32 - self.pp - 1) as usize
    }

    /// Index of the first cascade stage, `pp + 1`.
    pub fn first_stage(&self) -> u32 {
        (self.pp + 1) as u32
    }

    pub fn is_cascaded(&self) -> bool {
        self.pp == -1
    }

    pub fn is_full_polyphase(&self) -> bool {
        self.pp == self.p as i32 - 1
    }

    /// All valid splits of this decimation factor.
    pub fn splits(&self) -> std::ops::RangeInclusive<i32> {
        -1..=(self.p as i32 - 1)
    }
}

/// Per-stage multipliers of `H_N`, in ascending stage index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadeCoefficients {
    pub first_stage: u32,
    pub r: Vec<f64>,
}

impl CascadeCoefficients {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// `(k, r_k)` pairs.
    pub fn stages(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        (self.first_stage..).zip(self.r.iter().copied())
    }

    /// Delay unit `2^k` of each stage at the filter input rate. After
    /// commutation every stage runs with a unit delay at its own rate.
    pub fn stage_delays(&self) -> Vec<usize> {
        self.stages().map(|(k, _)| 1usize << k).collect()
    }

    /// DC gain `prod(2 + 2 r_k)` of the cascade.
    pub fn dc_gain(&self) -> f64 {
        self.r.iter().map(|r| 2.0 + 2.0 * r).product()
    }

    /// Response of the cascade at `omega` (rad/sample), product of the
    /// closed-form stage factors.
    pub fn response(&self, omega: f64) -> Complex64 {
        self.stages()
            .map(|(k, r)| stage_factor(k, r, omega))
            .product()
    }
}

pub fn stage_coefficients(spec: &GcfSpec) -> CascadeCoefficients {
    let first_stage = spec.first_stage();
    let r = (first_stage..spec.p())
        .map(|k| stage_multiplier(spec.alpha(), k))
        .collect();
    CascadeCoefficients { first_stage, r }
}

/// Closed form of `1 + r (z^-2^k + z^-2*2^k) + z^-3*2^k` on the unit circle:
/// `2 e^{-j 3x} (cos 3x + r cos x)` with `x = 2^(k-1) omega`.
pub fn stage_factor(k: u32, r: f64, omega: f64) -> Complex64 {
    let x = stage_angle(k, omega);
    Complex64::from_polar(2.0, -3.0 * x) * ((3.0 * x).cos() + r * x.cos())
}

/// Derivative of [`stage_factor`] with respect to `r`:
/// `2 e^{-j 3x} cos x`.
pub fn stage_factor_derivative(k: u32, omega: f64) -> Complex64 {
    let x = stage_angle(k, omega);
    Complex64::from_polar(2.0, -3.0 * x) * x.cos()
}

fn stage_angle(k: u32, omega: f64) -> f64 {
    f64::from(1u32 << k) * omega / 2.0
}

/// `sum_n c(n) e^{-j omega n}`.
pub fn eval_polynomial(coeffs: &[f64], omega: f64) -> Complex64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(n, &c)| Complex64::from_polar(c, -omega * n as f64))
        .sum()
}

/// Polyphase section `H_P` and its branch decomposition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyphaseBank {
    pub d1: usize,
    /// Impulse response, length `3 D1 - 2`.
    pub h_p: Vec<f64>,
    /// `branches[k][n] = h_p[D1 n + k]`, zero padded to equal length.
    pub branches: Vec<Vec<f64>>,
    /// Multiplier of the sparse block sequence.
    pub r_block: f64,
    /// Block sequence `delta(n) - r delta(n-D1) + r delta(n-2D1) - delta(n-3D1)`.
    pub x_t: Vec<f64>,
    /// Largest imaginary part left by the complex construction, relative to
    /// `max |h_p|`.
    pub imag_residue: f64,
}

impl PolyphaseBank {
    pub fn len(&self) -> usize {
        self.h_p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h_p.is_empty()
    }

    pub fn dc_gain(&self) -> f64 {
        self.h_p.iter().sum()
    }

    /// Coefficients scaled to unit DC gain. These are the multipliers a
    /// normalized realization stores.
    pub fn unit_gain(&self) -> Vec<f64> {
        let g = self.dc_gain();
        self.h_p.iter().map(|h| h / g).collect()
    }

    /// Rebuilds `h_p` from the branches, `sum_k z^-k E_k(z^D1)`.
    pub fn reassembled(&self) -> Vec<f64> {
        reassemble(&self.branches, self.d1, self.h_p.len())
    }

    /// `H_P(e^{j omega})` evaluated through the branches.
    pub fn response(&self, omega: f64) -> Complex64 {
        let block = omega * self.d1 as f64;
        self.branches
            .iter()
            .enumerate()
            .map(|(k, e)| Complex64::cis(-omega * k as f64) * eval_polynomial(e, block))
            .sum()
    }
}

pub fn polyphase_impulse(spec: &GcfSpec) -> PolyphaseBank {
    polyphase_impulse_for(spec.alpha(), spec.d1())
}

/// Impulse response of the polyphase section for rotation `alpha` and
/// polyphase factor `d1`.
///
/// The triple sum is evaluated as three modulated prefix sums:
/// `s1 = cumsum(x_t)`, `s2 = cumsum(e^{j alpha n} s1)`,
/// `s3 = cumsum(e^{-2j alpha n} s2)`, `h_p(n) = e^{j alpha n} s3(n)`.
pub fn polyphase_impulse_for(alpha: f64, d1: usize) -> PolyphaseBank {
    let d1 = d1.max(1);
    let len = 3 * d1 - 2;
    let r_block = block_multiplier(alpha, d1);
    let mut x_t = vec![0.0; 3 * d1 + 1];
    x_t[0] += 1.0;
    x_t[d1] -= r_block;
    x_t[2 * d1] += r_block;
    x_t[3 * d1] -= 1.0;

    let mut s1 = 0.0;
    let mut s2 = Complex64::new(0.0, 0.0);
    let mut s3 = Complex64::new(0.0, 0.0);
    let mut h = Vec::with_capacity(len);
    for (n, &x) in x_t.iter().enumerate().take(len) {
        let phase = alpha * n as f64;
        s1 += x;
        s2 += Complex64::cis(phase) * s1;
        s3 += Complex64::cis(-2.0 * phase) * s2;
        h.push(Complex64::cis(phase) * s3);
    }

    let peak = h.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    let imag = h.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    let h_p: Vec<f64> = h.iter().map(|c| c.re).collect();
    let branches = split_branches(&h_p, d1);
    PolyphaseBank {
        d1,
        h_p,
        branches,
        r_block,
        x_t,
        imag_residue: if peak > 0.0 { imag / peak } else { imag },
    }
}

/// Splits `h_p` (length `3 D1 - 2`) into `D1` branches
/// `e_k(n) = h_p(D1 n + k)`, zero padded to `ceil(L / D1)` entries.
pub fn polyphase_decompose(h_p: &[f64], d1: usize) -> Result<Vec<Vec<f64>>> {
    if d1 == 0 || h_p.len() != 3 * d1 - 2 {
        return param(format!(
            "impulse response of length {} does not match D1 = {d1} (expected {})",
            h_p.len(),
            (3 * d1).saturating_sub(2)
        ));
    }
    Ok(split_branches(h_p, d1))
}

fn split_branches(h_p: &[f64], d1: usize) -> Vec<Vec<f64>> {
    let width = h_p.len().div_ceil(d1);
    (0..d1)
        .map(|k| {
            (0..width)
                .map(|n| h_p.get(d1 * n + k).copied().unwrap_or(0.0))
                .collect()
        })
        .collect()
}

fn reassemble(branches: &[Vec<f64>], d1: usize, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (k, branch) in branches.iter().enumerate() {
        for (n, &v) in branch.iter().enumerate() {
            let idx = d1 * n + k;
            if idx < len {
                out[idx] += v;
            }
        }
    }
    out
}

/// Coefficients of `H_P(z) H_N(z)` as one explicit polynomial of degree
/// `3 (D - 1)`, by direct multiplication with every cascade stage.
pub fn expand_full_polynomial(spec: &GcfSpec) -> Vec<f64> {
    let bank = polyphase_impulse(spec);
    let cascade = stage_coefficients(spec);
    cascade
        .stages()
        .fold(bank.h_p, |acc, (k, r)| multiply_stage(&acc, k, r))
}

/// Multiplies `poly` by `1 + r (z^-2^k + z^-2*2^k) + z^-3*2^k`.
pub fn multiply_stage(poly: &[f64], k: u32, r: f64) -> Vec<f64> {
    let step = 1usize << k;
    let taps = [(0, 1.0), (step, r), (2 * step, r), (3 * step, 1.0)];
    let mut out = vec![0.0; poly.len() + 3 * step];
    for (n, &c) in poly.iter().enumerate() {
        for &(offset, t) in &taps {
            out[n + offset] += c * t;
        }
    }
    out
}

/// Scalar normalizing the DC gain of a GCF to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizationGain {
    pub h_o: f64,
}

pub fn normalization_gain(spec: &GcfSpec) -> Result<NormalizationGain> {
    let dc: f64 = expand_full_polynomial(spec).iter().sum();
    if !(dc.is_finite() && dc > 0.0) {
        return Err(Error::Internal(format!("DC gain {dc} is not positive")));
    }
    Ok(NormalizationGain { h_o: 1.0 / dc })
}

/// Classical comb `((1/D) (1 - z^-D) / (1 - z^-1))^N_c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CombSpec {
    pub decimation: usize,
    pub order: u32,
}

impl CombSpec {
    pub fn new(decimation: usize, order: u32) -> Result<Self> {
        if decimation < 2 {
            return param(format!("comb decimation factor {decimation} must be >= 2"));
        }
        if order < 1 {
            return param("comb order must be >= 1");
        }
        Ok(Self { decimation, order })
    }

    /// Integer coefficients of `((1 - z^-D) / (1 - z^-1))^N_c`, without
    /// the `D^-N_c` normalization.
    pub fn coefficients(&self) -> Vec<f64> {
        let boxcar = vec![1.0; self.decimation];
        (1..self.order).fold(boxcar.clone(), |acc, _| convolve(&acc, &boxcar))
    }
}

pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// A spec together with every coefficient representation derived from it.
#[derive(Debug, Clone, Serialize)]
pub struct GcfDesign {
    pub spec: GcfSpec,
    pub cascade: CascadeCoefficients,
    pub bank: PolyphaseBank,
    pub gain: NormalizationGain,
}

impl GcfDesign {
    pub fn new(spec: GcfSpec) -> Result<Self> {
        let cascade = stage_coefficients(&spec);
        let bank = polyphase_impulse(&spec);
        let gain = normalization_gain(&spec)?;
        Ok(Self {
            spec,
            cascade,
            bank,
            gain,
        })
    }

    /// `H_P(e^{j omega}) H_N(e^{j omega})`, optionally scaled by `h_o`.
    pub fn response(&self, omega: f64, normalized: bool) -> Complex64 {
        let h = self.bank.response(omega) * self.cascade.response(omega);
        if normalized {
            h * self.gain.h_o
        } else {
            h
        }
    }

    /// `dH_N / dr_u` for every cascade stage, product form: stage `u`'s
    /// factor is replaced by its derivative, the others are kept. Finite at
    /// stage zeros, unlike the quotient form `H_N cos x / (cos 3x + r cos x)`.
    pub fn cascade_derivatives(&self, omega: f64) -> Vec<Complex64> {
        let factors: Vec<Complex64> = self
            .cascade
            .stages()
            .map(|(k, r)| stage_factor(k, r, omega))
            .collect();
        self.cascade
            .stages()
            .enumerate()
            .map(|(u, (k, _))| {
                factors
                    .iter()
                    .enumerate()
                    .filter(|&(m, _)| m != u)
                    .map(|(_, f)| *f)
                    .product::<Complex64>()
                    * stage_factor_derivative(k, omega)
            })
            .collect()
    }
}
