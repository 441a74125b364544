use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::SdConfig;

pub const LOWPASS_TAPS: usize = 1025;

/// Hann-windowed sinc low-pass with unit DC gain.
pub fn lowpass_taps(cutoff: f64, taps: usize) -> Vec<f64> {
    let mid = (taps - 1) as f64 / 2.0;
    let mut h: Vec<f64> = (0..taps)
        .map(|m| {
            let t = m as f64 - mid;
            let sinc = if t == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * t).sin() / (PI * t)
            };
            let w = 0.5 - 0.5 * (2.0 * PI * m as f64 / (taps - 1) as f64).cos();
            sinc * w
        })
        .collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    h
}

/// Linear convolution through one zero-padded FFT.
pub fn fft_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let pad = |v: &[f64]| {
        let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        buf.resize(n, Complex64::new(0.0, 0.0));
        buf
    };
    let mut fa = pad(a);
    let mut fb = pad(b);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    fa.iter().take(out_len).map(|c| c.re / n as f64).collect()
}

/// White Gaussian noise low-passed at `fx_ratio`, peak-scaled to
/// `amplitude`. Only fully settled filter outputs are kept.
pub fn generate_bandlimited_signal(cfg: &SdConfig) -> Vec<f64> {
    let n = cfg.n_samples;
    if n == 0 || cfg.amplitude == 0.0 {
        return vec![0.0; n];
    }
    let h = lowpass_taps(cfg.fx_ratio, LOWPASS_TAPS);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise: Vec<f64> = (0..n + LOWPASS_TAPS - 1)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let full = fft_convolve(&noise, &h);
    let mut x = full[LOWPASS_TAPS - 1..LOWPASS_TAPS - 1 + n].to_vec();
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let g = cfg.amplitude / peak;
        x.iter_mut().for_each(|v| *v *= g);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{welch_psd, Window};

    fn cfg(n: usize) -> SdConfig {
        SdConfig {
            n_samples: n,
            ..SdConfig::default()
        }
    }

    #[test]
    fn convolution_matches_direct() {
        let a = [1.0, -2.0, 0.5, 3.0];
        let b = [0.25, 1.0, -1.0];
        let direct = crate::filter::convolve(&a, &b);
        let fast = fft_convolve(&a, &b);
        assert_eq!(direct.len(), fast.len());
        for (x, y) in direct.iter().zip(&fast) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn taps_have_unit_gain_and_symmetry() {
        let h = lowpass_taps(1.0 / 256.0, LOWPASS_TAPS);
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..h.len() / 2 {
            assert!((h[i] - h[h.len() - 1 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_amplitude_is_silent() {
        let c = SdConfig {
            amplitude: 0.0,
            ..cfg(1000)
        };
        assert!(generate_bandlimited_signal(&c).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn deterministic_and_peak_scaled() {
        let a = generate_bandlimited_signal(&cfg(5000));
        let b = generate_bandlimited_signal(&cfg(5000));
        assert_eq!(a, b);
        let peak = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - 0.5).abs() < 1e-12);
    }

    #[test]
    fn out_of_band_power_is_suppressed() {
        let x = generate_bandlimited_signal(&cfg(1 << 16));
        let psd = welch_psd(&x, 4096, 0.5, Window::Hann).unwrap();
        let df = psd.freq[1] - psd.freq[0];
        let fx = 1.0 / 256.0;
        let band = |lo: f64, hi: f64| -> f64 {
            psd.freq
                .iter()
                .zip(&psd.power)
                .filter(|(f, _)| **f >= lo && **f <= hi)
                .map(|(_, p)| p * df)
                .sum()
        };
        let inside = band(0.0, fx);
        let outside = band(2.0 * fx, 0.5);
        let db = 10.0 * (inside / outside).log10();
        assert!(db >= 60.0, "{db}");
    }
}
