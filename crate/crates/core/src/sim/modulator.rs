use serde::Serialize;

pub const MODULATOR_ORDER: u32 = 2;

/// Quantizer error magnitude beyond which a sample counts as overload: the
/// no-overload range of a two-level quantizer with levels `+-1`, plus a
/// little slack for rounding in the integrators.
pub const OVERLOAD_THRESHOLD: f64 = 1.0 + 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Modulated {
    pub bits: Vec<i8>,
    /// Samples where `|v2 - y| > OVERLOAD_THRESHOLD`.
    pub overloads: usize,
}

/// Second-order double-integrator modulator with a two-level quantizer:
/// `v1 += x - y'`, `v2 += v1 - y'`, `y = sign(v2)` (zero maps to +1),
/// where `y'` is the previous output and starts at 0.
pub fn sd_modulate(x: &[f64]) -> Modulated {
    let (mut v1, mut v2, mut prev) = (0.0f64, 0.0f64, 0.0f64);
    let mut overloads = 0;
    let bits = x
        .iter()
        .map(|&s| {
            v1 += s - prev;
            v2 += v1 - prev;
            let y = if v2 >= 0.0 { 1.0 } else { -1.0 };
            if (v2 - y).abs() > OVERLOAD_THRESHOLD {
                overloads += 1;
            }
            prev = y;
            y as i8
        })
        .collect();
    Modulated { bits, overloads }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(b: &[i8]) -> f64 {
        b.iter().map(|&v| f64::from(v)).sum::<f64>() / b.len() as f64
    }

    #[test]
    fn first_samples_by_hand() {
        // x = 0.5: v1 = 0.5, v2 = 0.5 -> +1; v1 = 0, v2 = -0.5 -> -1;
        // v1 = 1.5, v2 = 2 -> +1.
        let m = sd_modulate(&[0.5, 0.5, 0.5]);
        assert_eq!(m.bits, vec![1, -1, 1]);
    }

    #[test]
    fn zero_input_balances() {
        let m = sd_modulate(&vec![0.0; 1 << 16]);
        assert!(mean(&m.bits).abs() <= 0.01);
        assert!(m.bits.iter().all(|&b| b == 1 || b == -1));
    }

    #[test]
    fn dc_input_is_tracked() {
        for dc in [0.5, -0.3, 0.8] {
            let m = sd_modulate(&vec![dc; 1 << 16]);
            assert!((mean(&m.bits) - dc).abs() <= 0.01, "{dc}");
        }
        assert_eq!(sd_modulate(&vec![0.5; 1 << 16]).overloads, 0);
    }

    #[test]
    fn overdriven_input_is_counted() {
        let m = sd_modulate(&vec![1.5; 1000]);
        assert!(m.overloads > 0);
    }
}
