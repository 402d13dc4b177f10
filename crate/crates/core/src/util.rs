//! Small helpers shared across modules.

use sha2::{Digest, Sha256};

/// SplitMix64 finalizer. Used to derive independent child seeds (per tree,
/// per fold, per explained sample) from one master seed so that parallel and
/// serial runs draw identical random streams.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Formats a float with at most six decimals, trimming trailing zeros.
pub fn fmt_float(v: f64) -> String {
    if !v.is_finite() {
        return "0".to_string();
    }
    let mut s = format!("{v:.6}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

/// Hex SHA-256 of `data`.
pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Summary {
    pub count: usize,
    pub sum: f64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator), 0 for fewer than two values.
    pub std: f64,
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let values: Vec<f64> = values.into_iter().collect();
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let sum: f64 = values.iter().sum();
        let mean = sum / n;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let std = if values.len() > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { count: values.len(), sum, min, max, mean, std }
    }

    pub fn variance(&self) -> f64 {
        self.std * self.std
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_trims() {
        assert_eq!(fmt_float(300.0), "300");
        assert_eq!(fmt_float(0.5), "0.5");
        assert_eq!(fmt_float(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_float(-0.0000001), "0");
        assert_eq!(fmt_float(f64::NAN), "0");
    }

    #[test]
    fn summary_of_constant_series() {
        let s = Summary::of([1e6, 1e6]);
        assert_eq!(s.mean, 1e6);
        assert_eq!(s.std, 0.0);
        assert_eq!(Summary::of(std::iter::empty()).count, 0);
    }

    #[test]
    fn child_seeds_differ() {
        assert_ne!(mix_seed(7, 0), mix_seed(7, 1));
        assert_eq!(mix_seed(7, 3), mix_seed(7, 3));
    }
}
