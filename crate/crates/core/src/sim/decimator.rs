use crate::error::{param, Error, Result};
use crate::filter::{CascadeCoefficients, GcfDesign};
use crate::fixedpoint::{quantize_coefficients, FixedPointFormat};

/// Widest register the integer datapath can hold.
const MAX_WIDTH: u32 = 126;

#[derive(Debug, Clone)]
struct Stage {
    coeff: i128,
    /// Previous three inputs, newest first.
    hist: [i128; 3],
    shift: u32,
    lo: i128,
    hi: i128,
    width: u32,
    keep: bool,
}

/// Streaming cascaded decimator in exact integer arithmetic. Stage `k`
/// computes `(x[n] + x[n-3]) 2^f + R_k (x[n-1] + x[n-2])` with
/// `R_k = round(r_k 2^f)`, so fraction bits grow by `f` per stage and
/// nothing is ever truncated. Only the even-indexed outputs of each stage
/// are evaluated.
#[derive(Debug, Clone)]
pub struct FixedPointDecimator {
    stages: Vec<Stage>,
    first_stage: u32,
    out_scale: f64,
}

impl FixedPointDecimator {
    pub fn new(design: &GcfDesign, fmt: &FixedPointFormat) -> Result<Self> {
        if !design.spec.is_cascaded() {
            return param("fixed-point decimation needs the cascaded form (pp = -1)");
        }
        let cascade = &design.cascade;
        if fmt.i_n.len() != cascade.len() {
            return param(format!(
                "format has {} stage widths, cascade has {} stages",
                fmt.i_n.len(),
                cascade.len()
            ));
        }
        let f = fmt.f_n;
        let mut stages = Vec::with_capacity(cascade.len());
        for (k, (&r, &i_n)) in cascade.r.iter().zip(&fmt.i_n).enumerate() {
            let frac = f * (k as u32 + 1);
            let width = 1 + i_n + frac;
            if width > MAX_WIDTH {
                return param(format!("stage {k} needs {width} bits, at most {MAX_WIDTH} supported"));
            }
            let coeff = quantize_coefficients(&[r], f)[0] * 2f64.powi(f as i32);
            stages.push(Stage {
                coeff: coeff as i128,
                hist: [0; 3],
                shift: f,
                lo: -(1i128 << (width - 1)),
                hi: (1i128 << (width - 1)) - 1,
                width,
                keep: true,
            });
        }
        let total_frac = f * cascade.len() as u32;
        Ok(Self {
            stages,
            first_stage: cascade.first_stage,
            out_scale: design.gain.h_o / 2f64.powi(total_frac as i32),
        })
    }

    /// Feeds one input sample; returns the raw integer output every `D`
    /// inputs.
    pub fn push_raw(&mut self, x: i128) -> Result<Option<i128>> {
        let mut v = x;
        for (k, s) in self.stages.iter_mut().enumerate() {
            let [x1, x2, x3] = s.hist;
            s.hist = [v, x1, x2];
            let keep = s.keep;
            s.keep = !s.keep;
            if !keep {
                return Ok(None);
            }
            let y = ((v + x3) << s.shift) + s.coeff * (x1 + x2);
            if y < s.lo || y > s.hi {
                return Err(Error::Overflow {
                    stage: k + self.first_stage as usize,
                    value: y,
                    width: s.width,
                });
            }
            v = y;
        }
        Ok(Some(v))
    }

    pub fn push(&mut self, x: i128) -> Result<Option<f64>> {
        Ok(self.push_raw(x)?.map(|v| v as f64 * self.out_scale))
    }

    pub fn reset(&mut self) {
        for s in &mut self.stages {
            s.hist = [0; 3];
            s.keep = true;
        }
    }
}

/// Decimates a two-level stream by `D`; returns `floor(n / D)` samples
/// scaled by the exact unit-gain factor.
pub fn decimate_fixed_point(
    bits: &[i8],
    design: &GcfDesign,
    fmt: &FixedPointFormat,
) -> Result<Vec<f64>> {
    let mut dec = FixedPointDecimator::new(design, fmt)?;
    let n_out = bits.len() / design.spec.decimation();
    let mut out = Vec::with_capacity(n_out);
    for &b in bits {
        if let Some(v) = dec.push(i128::from(b))? {
            out.push(v);
        }
    }
    out.truncate(n_out);
    Ok(out)
}

/// Floating-point reference with the same structure and sampling phase.
pub fn decimate_float(x: &[f64], cascade: &CascadeCoefficients, scale: f64) -> Vec<f64> {
    let mut hist = vec![[0.0f64; 3]; cascade.len()];
    let mut keep = vec![true; cascade.len()];
    let d = 1usize << cascade.len();
    let mut out = Vec::with_capacity(x.len() / d);
    'samples: for &s in x {
        let mut v = s;
        for (k, &r) in cascade.r.iter().enumerate() {
            let [x1, x2, x3] = hist[k];
            hist[k] = [v, x1, x2];
            let kept = keep[k];
            keep[k] = !kept;
            if !kept {
                continue 'samples;
            }
            v = v + x3 + r * (x1 + x2);
        }
        out.push(v * scale);
    }
    out.truncate(x.len() / d);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{expand_full_polynomial, GcfSpec, OPTIMAL_Q};
    use crate::fixedpoint::integer_bits;

    fn setup(d: usize, q: f64, f_n: u32) -> (GcfDesign, FixedPointFormat) {
        let design = GcfDesign::new(GcfSpec::from_rho(d, -1, q, 4.0 * d as f64).unwrap()).unwrap();
        let ib = integer_bits(&design.cascade, 1).unwrap();
        (design, FixedPointFormat::new(1, ib.i_n_k, f_n))
    }

    /// Binary de Bruijn sequence of order `n`, made cyclic-complete by
    /// repeating its first `n - 1` symbols.
    fn de_bruijn(n: usize) -> Vec<i8> {
        fn db(t: usize, p: usize, n: usize, a: &mut Vec<u8>, out: &mut Vec<i8>) {
            if t > n {
                if n % p == 0 {
                    out.extend(a[1..=p].iter().map(|&b| if b == 1 { 1 } else { -1 }));
                }
            } else {
                a[t] = a[t - p];
                db(t + 1, p, n, a, out);
                for j in a[t - p] + 1..2 {
                    a[t] = j;
                    db(t + 1, t, n, a, out);
                }
            }
        }
        let mut a = vec![0u8; n + 1];
        let mut out = Vec::with_capacity(1 << n);
        db(1, 1, n, &mut a, &mut out);
        let head: Vec<i8> = out[..n - 1].to_vec();
        out.extend(head);
        out
    }

    #[test]
    fn de_bruijn_covers_every_window() {
        let s = de_bruijn(10);
        assert_eq!(s.len(), 1024 + 9);
        let mut seen = vec![false; 1024];
        for w in s.windows(10) {
            let idx = w.iter().fold(0usize, |acc, &b| 2 * acc + usize::from(b > 0));
            seen[idx] = true;
        }
        assert!(seen.iter().all(|&v| v));
    }

    #[test]
    fn output_count() {
        let (design, fmt) = setup(16, OPTIMAL_Q, 7);
        for n in [0, 15, 16, 17, 100, 1000] {
            let out = decimate_fixed_point(&vec![1; n], &design, &fmt).unwrap();
            assert_eq!(out.len(), n / 16);
        }
    }

    #[test]
    fn constant_input_settles_to_one() {
        let (design, fmt) = setup(16, OPTIMAL_Q, 7);
        let out = decimate_fixed_point(&vec![1; 1600], &design, &fmt).unwrap();
        let qr = quantize_coefficients(&design.cascade.r, 7);
        let q_gain: f64 = qr.iter().map(|r| 2.0 + 2.0 * r).product();
        for v in &out[4..] {
            assert!((v - q_gain * design.gain.h_o).abs() < 1e-12);
            assert!((v - 1.0).abs() < 4.0 * 2f64.powi(-7));
        }
    }

    #[test]
    fn impulse_gives_decimated_comb() {
        let (design, fmt) = setup(16, 0.0, 4);
        let mut x = vec![0i8; 16 * 8];
        x[0] = 1;
        let out = decimate_fixed_point(&x, &design, &fmt).unwrap();
        let h = expand_full_polynomial(&design.spec);
        for (m, v) in out.iter().enumerate() {
            let want = h.get(16 * m).copied().unwrap_or(0.0) * design.gain.h_o;
            assert!((v - want).abs() < 1e-15, "{m}: {v} vs {want}");
        }
    }

    #[test]
    fn fixed_tracks_float() {
        let (design, fmt) = setup(16, OPTIMAL_Q, 7);
        let x: Vec<f64> = (0..4096).map(|n| (0.003 * n as f64).sin() * 0.5).collect();
        let bits = crate::sim::sd_modulate(&x).bits;
        let fixed = decimate_fixed_point(&bits, &design, &fmt).unwrap();
        let xf: Vec<f64> = bits.iter().map(|&b| f64::from(b)).collect();
        let float = decimate_float(&xf, &design.cascade, design.gain.h_o);
        assert_eq!(fixed.len(), float.len());
        for (a, b) in fixed.iter().zip(&float) {
            assert!((a - b).abs() <= 1e-2);
        }
    }

    #[test]
    fn rejects_polyphase_and_mismatched_formats() {
        let d = GcfDesign::new(GcfSpec::from_rho(16, 1, OPTIMAL_Q, 64.0).unwrap()).unwrap();
        let fmt = FixedPointFormat::new(1, vec![4, 7], 7);
        assert!(decimate_fixed_point(&[1; 32], &d, &fmt).is_err());
        let (design, _) = setup(16, OPTIMAL_Q, 7);
        assert!(decimate_fixed_point(&[1; 32], &design, &fmt).is_err());
    }

    #[test]
    fn narrow_register_overflows_with_stage() {
        let (design, _) = setup(8, 0.0, 0);
        let fmt = FixedPointFormat::new(1, vec![4, 5, 10], 0);
        match decimate_fixed_point(&vec![1; 64], &design, &fmt) {
            Err(Error::Overflow { stage, .. }) => assert_eq!(stage, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exhaustive_patterns_never_overflow() {
        // Every length-L window of +-1 at every decimation phase, where
        // L = 3 (D - 1) + 1 is the impulse response length.
        for (d, q, f_n) in [(2, OPTIMAL_Q, 7), (4, OPTIMAL_Q, 7), (8, OPTIMAL_Q, 7), (8, 0.0, 0), (8, 1.0, 9)] {
            let (design, fmt) = setup(d, q, f_n);
            let seq = de_bruijn(3 * (d - 1) + 1);
            let mut dec = FixedPointDecimator::new(&design, &fmt).unwrap();
            for phase in 0..d {
                dec.reset();
                for _ in 0..phase {
                    dec.push_raw(1).unwrap();
                }
                for &b in &seq {
                    dec.push_raw(i128::from(b)).unwrap();
                }
            }
        }
    }
}
